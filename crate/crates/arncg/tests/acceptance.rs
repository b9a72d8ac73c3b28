//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::{Duration, Instant};

use arncg::formats::trace_to_string;
use arncg::run::execute;
use arncg::spec::{RunSpec, StartPoint, StepOverrides};
use arncg_core::{
    capped_cg, check_gradient_fd, check_hvp_fd, estimate_local_order, gradient_series,
    iteration_cap, make_problem, predicted_order, solve, solve_with_budget, Budget, CgConfig,
    CgKind, DesignPoint, Objective, Oracle, Outcome, Schedule, SolveReport, SolverConfig,
    StepEvent, StepParams, DEFAULT_ORDER_WINDOW, PROBLEM_NAMES,
};
use nalgebra::{DMatrix, DVector};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct Rng(SplitMix64);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(SplitMix64::seed_from_u64(seed))
    }
    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
    fn index(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + (self.0.next_u64() % (hi_inclusive - lo + 1) as u64) as usize
    }
    fn vector(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(lo, hi)).collect()
    }
}

struct Instance {
    h: DMatrix<f64>,
    g: Vec<f64>,
    rho: f64,
    xi: f64,
    lambda_min: f64,
}

fn symmetric_with_spectrum(rng: &mut Rng, eigs: &[f64]) -> DMatrix<f64> {
    let n = eigs.len();
    let a = DMatrix::from_fn(n, n, |_, _| rng.uniform(-1.0, 1.0));
    let q = a.qr().q();
    let h = &q * DMatrix::from_diagonal(&DVector::from_column_slice(eigs)) * q.transpose();
    (&h + h.transpose()) * 0.5
}

const RHOS: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];

/// 200 instances, n in 2..=20, alternating positive definite and
/// indefinite spectra.
fn cg_corpus() -> Vec<Instance> {
    let mut rng = Rng::new(2024);
    (0..200)
        .map(|i| {
            let n = rng.index(2, 20);
            let eigs: Vec<f64> = if i % 2 == 0 {
                (0..n).map(|_| 10f64.powf(rng.uniform(-3.0, 1.0))).collect()
            } else {
                let mut e: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 5.0)).collect();
                e[0] = -rng.uniform(1e-3, 1.0);
                e
            };
            let h = symmetric_with_spectrum(&mut rng, &eigs);
            let lambda_min = h.clone().symmetric_eigen().eigenvalues.min();
            let rho = RHOS[rng.index(0, 4)];
            Instance {
                g: rng.vector(n, -1.0, 1.0),
                h,
                rho,
                xi: rho.min(0.01),
                lambda_min,
            }
        })
        .collect()
}

fn solve_instance(inst: &Instance) -> arncg_core::CgOutcome {
    let h = &inst.h;
    let hvp = |v: &[f64]| Ok((h * DVector::from_column_slice(v)).as_slice().to_vec());
    capped_cg(hvp, &inst.g, &CgConfig::new(inst.rho, inst.xi, inst.rho)).expect("valid instance")
}

fn le_rel(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + 1e-8 * (lhs.abs() + rhs.abs())
}

/// First violated SOL inequality of instance `inst`, if any.
fn sol_violation(inst: &Instance, direction: &[f64]) -> Option<String> {
    let n = inst.g.len();
    let (rho, xi) = (inst.rho, inst.xi);
    let hbar = &inst.h + DMatrix::identity(n, n) * (2.0 * rho);
    let d = DVector::from_column_slice(direction);
    let g = DVector::from_column_slice(&inst.g);
    let dd = d.dot(&d);
    let hbar_dd = d.dot(&(&hbar * &d));
    let h_dd = d.dot(&(&inst.h * &d));
    let resid = (&hbar * &d + &g).norm();
    let dg = d.dot(&g);
    if !le_rel(rho * dd, hbar_dd) {
        return Some("dᵀH̄d < ρ‖d‖²".into());
    }
    if !le_rel(-rho * dd, h_dd) {
        return Some("dᵀHd < -ρ‖d‖²".into());
    }
    if !le_rel(d.norm(), 2.0 * g.norm() / rho) {
        return Some("‖d‖ > 2‖g‖/ρ".into());
    }
    if !le_rel(resid, 0.5 * rho * xi * d.norm()) {
        return Some(format!(
            "residual {resid:e} > ½ρξ‖d‖ = {:e}",
            0.5 * rho * xi * d.norm()
        ));
    }
    let gap = (dg + hbar_dd).abs() / dg.abs().max(hbar_dd.abs());
    if gap > 1e-8 {
        return Some(format!("dᵀg = -dᵀH̄d off by {gap:.2e} relative"));
    }
    if !le_rel(dg, -rho * dd) {
        return Some("dᵀg > -ρ‖d‖²".into());
    }
    let hbar_min = inst.lambda_min + 2.0 * rho;
    if hbar_min > 0.0 {
        let exact = hbar.clone().cholesky()?.solve(&-&g);
        let bound = resid / hbar_min;
        let dist = (&d - &exact).norm();
        if dist > bound * (1.0 + 1e-8) + 1e-14 * exact.norm() {
            return Some(format!(
                "‖d - d*‖ = {dist:e} exceeds ‖r‖/λmin(H̄) = {bound:e}"
            ));
        }
    }
    None
}

fn criterion_1() -> Check {
    let corpus = cg_corpus();
    let mut sol = 0;
    let mut violations = Vec::new();
    for (i, inst) in corpus.iter().enumerate() {
        let out = solve_instance(inst);
        if out.kind != CgKind::Sol {
            continue;
        }
        sol += 1;
        if let Some(msg) = sol_violation(inst, &out.direction) {
            violations.push(format!(
                "instance {i} (n={}, ρ={}): {msg}",
                inst.g.len(),
                inst.rho
            ));
        }
    }
    ensure!(sol > 0, "corpus produced no SOL returns");
    ensure!(
        violations.is_empty(),
        "{} of {sol} SOL returns violate the contract: {}",
        violations.len(),
        violations.join("; ")
    );
    Ok(format!(
        "{sol} SOL returns meet all five inequalities and the dense solve bound"
    ))
}

fn criterion_2() -> Check {
    let corpus = cg_corpus();
    let mut nc = 0;
    let mut definite = 0;
    for (i, inst) in corpus.iter().enumerate() {
        let out = solve_instance(inst);
        if out.kind == CgKind::Nc {
            nc += 1;
            let u = DVector::from_column_slice(&out.direction);
            let curv = u.dot(&(&inst.h * &u));
            ensure!(
                curv <= -inst.rho * u.dot(&u) + 1e-12,
                "instance {i}: NC direction has curvature {curv:e}"
            );
        }
        if inst.lambda_min >= inst.rho {
            definite += 1;
            ensure!(out.kind != CgKind::Nc, "instance {i}: NC with λmin(H) ≥ ρ");
        }
    }
    let mut rng = Rng::new(77);
    for i in 0..200 {
        let n = rng.index(2, 20);
        let rho = RHOS[rng.index(0, 4)];
        let eigs: Vec<f64> = (0..n).map(|_| rho + rng.uniform(0.0, 10.0)).collect();
        let h = symmetric_with_spectrum(&mut rng, &eigs);
        let inst = Instance {
            g: rng.vector(n, -1.0, 1.0),
            lambda_min: h.clone().symmetric_eigen().eigenvalues.min(),
            h,
            rho,
            xi: rho.min(0.01),
        };
        if inst.lambda_min < rho {
            continue;
        }
        definite += 1;
        ensure!(
            solve_instance(&inst).kind != CgKind::Nc,
            "definite instance {i} returned NC"
        );
    }
    ensure!(nc > 0, "corpus produced no NC returns");
    Ok(format!(
        "{nc} NC returns satisfy the curvature bound; {definite} matrices with λmin ≥ ρ never NC"
    ))
}

fn criterion_3() -> Check {
    let (lo, hi) = DEFAULT_ORDER_WINDOW;
    let mut parts = Vec::new();
    let mut failures = Vec::new();
    for theta in [0.0, 0.5, 1.0, 1.5] {
        let start = Instant::now();
        let cfg = SolverConfig {
            schedule: Schedule::GradBased,
            theta,
            epsilon: 1e-20,
            ..SolverConfig::default()
        };
        let mut oracle = Oracle::new(make_problem("scalar_quad", 1).unwrap());
        let report = solve(&mut oracle, &DesignPoint::new(vec![1.0]).unwrap(), &cfg).unwrap();
        let elapsed = start.elapsed();
        let target = predicted_order(theta);
        match estimate_local_order(&gradient_series(&report.trace), lo, hi) {
            Some(est) => {
                parts.push(format!("θ={theta}: {:.3} vs {target:.3}", est.slope));
                if (est.slope - target).abs() > 0.15 {
                    failures.push(format!(
                        "θ={theta}: slope {:.4} not within 0.15 of {target:.4}",
                        est.slope
                    ));
                }
            }
            None => failures.push(format!("θ={theta}: too few iterates in the window")),
        }
        if elapsed >= Duration::from_secs(1) {
            failures.push(format!("θ={theta}: took {elapsed:?}"));
        }
    }
    if failures.is_empty() {
        Ok(parts.join(", "))
    } else {
        Err(format!("{} [{}]", failures.join("; "), parts.join(", ")))
    }
}

struct BudgetAudit {
    n: usize,
    m_max: u32,
    steps: usize,
    violations: Vec<String>,
}

impl Budget for BudgetAudit {
    fn on_newton_step(&mut self, event: &StepEvent<'_>) {
        self.steps += 1;
        let out = event.outcome;
        let f_cap = 2 * (u64::from(self.m_max) + 1);
        if event.evals.value_evals > f_cap {
            self.violations.push(format!(
                "k={}: {} function evaluations > {f_cap}",
                event.k, event.evals.value_evals
            ));
        }
        let hvp_cap =
            iteration_cap(out.cg_norm_estimate, out.rho_bar, out.xi).min(self.n as f64) + 2.0;
        if event.evals.hvp_evals as f64 > hvp_cap {
            self.violations.push(format!(
                "k={}: {} HVPs > {hvp_cap:.1}",
                event.k, event.evals.hvp_evals
            ));
        }
    }
}

fn criterion_4() -> Check {
    let n = 100;
    let mut summary = Vec::new();
    for m_max in [1u32, 27] {
        let problem = make_problem("rosenbrock", n).unwrap();
        let x0 = DesignPoint::new(problem.default_start()).unwrap();
        let mut oracle = Oracle::new(problem);
        let cfg = SolverConfig {
            step: StepParams {
                m_max,
                ..StepParams::default()
            },
            ..SolverConfig::default()
        };
        let mut audit = BudgetAudit {
            n,
            m_max,
            steps: 0,
            violations: Vec::new(),
        };
        let report = solve_with_budget(&mut oracle, &x0, &cfg, &mut audit).unwrap();
        ensure!(
            audit.violations.is_empty(),
            "m_max={m_max}: {}",
            audit.violations.join("; ")
        );
        let mut prev = 1;
        for r in &report.trace {
            let spent = r.counters.gradient_evals - prev;
            ensure!(
                spent <= 2,
                "m_max={m_max}, k={}: {spent} gradient evaluations",
                r.k
            );
            prev = r.counters.gradient_evals;
        }
        ensure!(
            report.outcome == Outcome::Converged,
            "m_max={m_max}: run ended with {:?}",
            report.outcome
        );
        summary.push(format!(
            "m_max={m_max}: {} steps over {} iterations",
            audit.steps, report.iterations
        ));
    }
    Ok(summary.join(", "))
}

fn suite_runs() -> Vec<(String, SolveReport)> {
    let problems = [
        ("quad", 100),
        ("scalar_quad", 1),
        ("scaled_quad", 50),
        ("rosenbrock", 2),
        ("rosenbrock", 100),
        ("indef_quad", 20),
        ("nc_well", 20),
    ];
    let mut runs = Vec::new();
    for (name, n) in problems {
        for schedule in [Schedule::GradBased, Schedule::EpsBased] {
            for theta in [0.0, 1.0] {
                for lambda in [0.0, 1.0] {
                    let problem = make_problem(name, n).unwrap();
                    let x0 = DesignPoint::new(problem.default_start()).unwrap();
                    let cfg = SolverConfig {
                        schedule,
                        theta,
                        lambda,
                        epsilon: 1e-5,
                        max_iterations: 100_000,
                        ..SolverConfig::default()
                    };
                    let report = solve(&mut Oracle::new(problem), &x0, &cfg).unwrap();
                    let label = format!("{name} n={n} {} θ={theta} λ={lambda}", schedule.as_str());
                    runs.push((label, report));
                }
            }
        }
    }
    runs
}

fn criterion_5(runs: &[(String, SolveReport)], elapsed: Duration) -> Check {
    for (label, report) in runs {
        ensure!(
            report.outcome == Outcome::Converged,
            "{label}: {:?}",
            report.outcome
        );
        ensure!(
            report.iterations <= 100_000,
            "{label}: {} iterations",
            report.iterations
        );
        for (i, r) in report.trace.iter().enumerate() {
            ensure!(
                r.value_next <= r.value_phi,
                "{label}: objective increased at k={}",
                r.k
            );
            if let Some(next) = report.trace.get(i + 1) {
                ensure!(
                    next.value_phi == r.value_next,
                    "{label}: value trace broken at k={}",
                    r.k
                );
                ensure!(
                    next.eps_k <= r.eps_k,
                    "{label}: ε_k increased at k={}",
                    next.k
                );
            }
        }
    }
    ensure!(elapsed < Duration::from_secs(60), "suite took {elapsed:?}");
    let iters: u64 = runs.iter().map(|(_, r)| r.iterations).sum();
    Ok(format!(
        "{} runs converged ({iters} iterations total, {elapsed:.2?})",
        runs.len()
    ))
}

fn criterion_6(runs: &[(String, SolveReport)]) -> Check {
    let gamma = StepParams::default().gamma;
    let max_m = SolverConfig::default().max_m;
    let mut counts = [0usize; 3];
    for (label, report) in runs {
        for r in &report.trace {
            let slot = if r.m_next == r.m_k {
                1
            } else if r.m_next == gamma * r.m_k {
                2
            } else if r.m_next == r.m_k / gamma {
                0
            } else {
                return Err(format!(
                    "{label}: M went {} → {} at k={}",
                    r.m_k, r.m_next, r.k
                ));
            };
            counts[slot] += 1;
            ensure!(
                r.m_next < max_m,
                "{label}: M reached {} at k={}",
                r.m_next,
                r.k
            );
        }
    }
    Ok(format!(
        "ratios 1/γ: {}, 1: {}, γ: {}",
        counts[0], counts[1], counts[2]
    ))
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let mut iterations = 0;
    for seed in 0..10u64 {
        for schedule in [Schedule::GradBased, Schedule::EpsBased, Schedule::Fixed] {
            let problem = make_problem("quad", 50).unwrap();
            let x0 = if seed == 0 {
                problem.default_start()
            } else {
                arncg::start::random_start(seed, 50)
            };
            let cfg = SolverConfig {
                schedule,
                ..SolverConfig::default()
            };
            let report = solve(
                &mut Oracle::new(problem),
                &DesignPoint::new(x0).unwrap(),
                &cfg,
            )
            .unwrap();
            ensure!(
                report.outcome == Outcome::Converged,
                "seed {seed}: {:?}",
                report.outcome
            );
            for r in &report.trace {
                ensure!(
                    r.d_type == CgKind::Sol,
                    "seed {seed}, k={}: {:?}",
                    r.k,
                    r.d_type
                );
                if r.k >= 1 {
                    ensure!(
                        r.linesearch_m == Some(0) && r.stepsize_alpha == 1.0,
                        "seed {seed}, k={}: m={:?}, α={}",
                        r.k,
                        r.linesearch_m,
                        r.stepsize_alpha
                    );
                }
            }
            iterations += report.iterations;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "30 runs, {iterations} iterations, all SOL with unit steps"
    ))
}

fn criterion_8() -> Check {
    let mut rng = Rng::new(8);
    let mut worst: f64 = 0.0;
    for name in PROBLEM_NAMES {
        let n = match name {
            "scalar_quad" => 1,
            "quad" | "rosenbrock" => 100,
            "scaled_quad" => 50,
            _ => 20,
        };
        let p = make_problem(name, n).unwrap();
        for _ in 0..100 {
            let x = rng.vector(n, -2.0, 2.0);
            let v = rng.vector(n, -1.0, 1.0);
            let eg = check_gradient_fd(&p, &x, 1e-5);
            let eh = check_hvp_fd(&p, &x, &v, 1e-5);
            ensure!(eg <= 1e-5, "{name}: gradient FD error {eg:e}");
            ensure!(eh <= 1e-5, "{name}: HVP FD error {eh:e}");
            worst = worst.max(eg).max(eh);
        }
        ensure!(p.dimension() == n, "{name}: wrong dimension");
    }
    Ok(format!(
        "{} problems × 100 points, worst relative error {worst:.2e}",
        PROBLEM_NAMES.len()
    ))
}

fn criterion_9() -> Check {
    let mut specs = Vec::new();
    for (i, name) in PROBLEM_NAMES.iter().enumerate() {
        let n = if *name == "scalar_quad" { 1 } else { 12 };
        specs.push(RunSpec {
            problem: name.to_string(),
            n: Some(n),
            x0: StartPoint::Random {
                seed: 1000 + i as u64,
            },
            theta: 0.5,
            lambda: 1.0,
            step: StepOverrides {
                m_max: Some(3),
                ..StepOverrides::default()
            },
            ..RunSpec::default()
        });
    }
    for spec in &specs {
        let a = execute(spec).map_err(|e| e.to_string())?;
        let b = execute(spec).map_err(|e| e.to_string())?;
        ensure!(a.x0 == b.x0, "{}: start points differ", spec.problem);
        ensure!(
            trace_to_string(&a.report.trace) == trace_to_string(&b.report.trace),
            "{}: trace files differ",
            spec.problem
        );
        let bitwise = a.report.trace.len() == b.report.trace.len()
            && a.report.trace.iter().zip(&b.report.trace).all(|(x, y)| {
                [
                    (x.g_k, y.g_k),
                    (x.value_phi, y.value_phi),
                    (x.m_next, y.m_next),
                    (x.omega_t, y.omega_t),
                    (x.direction_norm, y.direction_norm),
                ]
                .iter()
                .all(|(p, q)| p.to_bits() == q.to_bits())
                    && x.counters == y.counters
            });
        ensure!(bitwise, "{}: traces differ bitwise", spec.problem);
    }
    Ok(format!("{} seeded specs reproduce bitwise", specs.len()))
}

fn timed(limit: Duration, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    match result {
        Ok(msg) if elapsed >= limit => Err(format!("{msg}; took {elapsed:.2?}, limit {limit:?}")),
        Ok(msg) => Ok(format!("{msg} ({elapsed:.2?})")),
        Err(msg) => Err(format!("{msg} ({elapsed:.2?})")),
    }
}

fn main() {
    let secs = Duration::from_secs;
    let mut results: Vec<(u8, &str, Check)> = vec![
        (1, "capped CG SOL contract", timed(secs(5), criterion_1)),
        (2, "capped CG NC contract", timed(secs(5), criterion_2)),
        (3, "local order on scalar_quad", criterion_3()),
        (
            4,
            "oracle budgets on rosenbrock n=100",
            timed(secs(10), criterion_4),
        ),
    ];
    let start = Instant::now();
    let runs = suite_runs();
    let elapsed = start.elapsed();
    results.push((5, "global convergence suite", criterion_5(&runs, elapsed)));
    results.push((6, "Lipschitz estimate updates", criterion_6(&runs)));
    results.push((7, "SOL-only path on quad", criterion_7()));
    results.push((8, "derivative checks", timed(secs(5), criterion_8)));
    results.push((9, "determinism", timed(secs(5), criterion_9)));

    let mut failed = 0;
    for (id, name, result) in &results {
        match result {
            Ok(msg) => println!("PASS criterion {id} ({name}): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}): {msg}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
