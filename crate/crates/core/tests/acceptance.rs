//! Acceptance suite. Run with
//!
//! ```text
//! cargo test -p bcs-core --test acceptance -- --nocapture --test-threads=1
//! ```
//!
//! to see one PASS/FAIL line per criterion.

use std::sync::OnceLock;
use std::time::Instant;

use bcs_core::dynamics::{
    flow_generator, integrate_ode, involution_matrix, reconstruct_p, spectral_solve,
    spectral_solve_q, SegmentOptions, SolverConfig, Trajectory,
};
use bcs_core::lie::{self, Structure, SubspaceLabel};
use bcs_core::model::{ModelParams, PhasePoint, SutherlandModel};
use bcs_core::numerics::{matexp, ComplexMatrix};
use bcs_core::sampling::{random_params, random_phase_point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, detail: String, started: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "criterion {id} [{verdict}] {name}: {detail} ({:.1} s)",
        started.elapsed().as_secs_f64()
    );
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

/// Random couplings and chamber point with `n ∈ 2..=6`.
fn draw(rng: &mut ChaCha8Rng) -> (SutherlandModel, PhasePoint) {
    let n = rng.random_range(2..=6);
    let m = rng.random_range(1..n);
    let model = SutherlandModel::new(random_params(rng, n, m)).unwrap();
    let phi = random_phase_point(rng, n, m, 0.1, 1.5);
    (model, phi)
}

#[test]
fn criterion_1_energy_identity() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let (model, phi) = draw(&mut rng);
        let h = model.hamiltonian(&phi).unwrap();
        let h1 = model.reduced_hamiltonian(&phi, 1).unwrap();
        worst = worst.max((h - h1).abs() / h.abs().max(1.0));
    }
    let pass = worst <= 1e-11;
    report(1, "energy identity H = H_1", pass, format!("max relative error {worst:.2e} over 1000 draws (tol 1e-11)"), started);
    assert!(pass);
}

#[test]
fn criterion_2_constraint_surface() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let (model, phi) = draw(&mut rng);
        worst = worst.max(model.verify_constraints(&phi).unwrap().max());
    }
    let pass = worst <= 1e-10;
    report(2, "constraint residuals", pass, format!("max residual {worst:.2e} over 1000 draws (tol 1e-10)"), started);
    assert!(pass);
}

struct CrossRun {
    label: String,
    q_err: f64,
    p_err: f64,
    one_shot: Result<(f64, f64), String>,
    min_gap: f64,
}

/// Criterion 3 runs, shared with criterion 7.
fn cross_validation_runs() -> &'static Vec<CrossRun> {
    static RUNS: OnceLock<Vec<CrossRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let config = SolverConfig { dt: 1e-5, t_end: 5.0, k: 1, sample_every: 5000 };
        let mut runs = Vec::new();
        for n in 2..=4 {
            for m in 1..n {
                for seed in 0..3u64 {
                    let mut rng = ChaCha8Rng::seed_from_u64(300 + 100 * n as u64 + 10 * m as u64 + seed);
                    let model = SutherlandModel::new(random_params(&mut rng, n, m)).unwrap();
                    let phi = random_phase_point(&mut rng, n, m, 0.3, 1.0);
                    let ode = integrate_ode(&model, &phi, &config).unwrap();
                    let exact = spectral_solve(&model, &phi, 1, &ode.times, SegmentOptions::default()).unwrap();
                    let one_shot = spectral_solve_q(&model, &phi, 1, &ode.times)
                        .and_then(|t| reconstruct_p(&model, &phi, &t, 1))
                        .map(|t| (max_diff(&t.qs, &ode.qs), max_diff(t.ps.as_ref().unwrap(), ode.ps.as_ref().unwrap())))
                        .map_err(|e| e.to_string());
                    runs.push(CrossRun {
                        label: format!("n={n} m={m} seed={seed}"),
                        q_err: max_diff(&exact.qs, &ode.qs),
                        p_err: max_diff(exact.ps.as_ref().unwrap(), ode.ps.as_ref().unwrap()),
                        one_shot,
                        min_gap: exact.spectral.as_ref().unwrap().min_eig_gap,
                    });
                }
            }
        }
        runs
    })
}

#[test]
fn criterion_3_solver_cross_validation() {
    let started = Instant::now();
    let runs = cross_validation_runs();
    let q_err = runs.iter().map(|r| r.q_err).fold(0.0, f64::max);
    let p_err = runs.iter().map(|r| r.p_err).fold(0.0, f64::max);
    let one_shot_ok = runs
        .iter()
        .filter(|r| matches!(r.one_shot, Ok((q, p)) if q <= 1e-6 && p <= 1e-5))
        .count();
    for r in runs {
        println!(
            "    {}: exact vs ODE |dq| {:.2e} |dp| {:.2e}; one-shot {}",
            r.label,
            r.q_err,
            r.p_err,
            match &r.one_shot {
                Ok((q, p)) => format!("|dq| {q:.2e} |dp| {p:.2e}"),
                Err(e) => e.clone(),
            }
        );
    }
    let pass = q_err <= 1e-6 && p_err <= 1e-5;
    report(
        3,
        "spectral vs ODE (dt 1e-5, t in [0,5])",
        pass,
        format!(
            "{} runs, max |dq| {q_err:.2e} (tol 1e-6), max |dp| {p_err:.2e} (tol 1e-5); one-shot within tolerance on {one_shot_ok}/{}",
            runs.len(),
            runs.len()
        ),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_4_exact_conservation() {
    let started = Instant::now();
    let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
    let mut worst = 0.0_f64;
    let mut runs = 0;
    let mut failures = Vec::new();
    for n in 2..=4 {
        for m in 1..n {
            let mut rng = ChaCha8Rng::seed_from_u64(400 + 10 * n as u64 + m as u64);
            let model = SutherlandModel::new(random_params(&mut rng, n, m)).unwrap();
            let phi = random_phase_point(&mut rng, n, m, 0.3, 1.0);
            for k in 1..=2 {
                runs += 1;
                match spectral_solve(&model, &phi, k, &times, SegmentOptions::default()) {
                    Ok(traj) => worst = worst.max(traj.drift.unwrap().max_relative()),
                    Err(e) => failures.push(format!("n={n} m={m} k={k}: {e}")),
                }
            }
        }
    }
    for f in &failures {
        println!("    {f}");
    }
    let pass = failures.is_empty() && worst <= 1e-9;
    report(
        4,
        "conservation of all H_k over [0,10], flows k = 1, 2",
        pass,
        format!("{runs} runs, max relative drift {worst:.2e} (tol 1e-9), {} failed runs", failures.len()),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_5_involution() {
    let started = Instant::now();
    let mut worst = 0.0_f64;
    for n in [3usize, 4] {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + n as u64);
        for i in 0..100 {
            let m = 1 + i % (n - 1);
            let model = SutherlandModel::new(random_params(&mut rng, n, m)).unwrap();
            let phi = random_phase_point(&mut rng, n, m, 0.1, 1.0);
            worst = worst.max(involution_matrix(&model, &phi, 1e-5).unwrap().max_scaled());
        }
    }
    let pass = worst <= 1e-6;
    report(
        5,
        "involution of H_1..H_n (h = 1e-5)",
        pass,
        format!("max |{{H_j,H_k}}|/scale {worst:.2e} at 200 points (tol 1e-6)"),
        started,
    );
    assert!(pass);
}

fn chamber_ok(traj: &Trajectory, m: usize) -> bool {
    traj.qs.iter().all(|q| lie::in_weyl_chamber(q, m))
}

#[test]
fn criterion_6_chamber_confinement() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let config = SolverConfig { dt: 1e-4, t_end: 10.0, k: 1, sample_every: 500 };
    let mut failures = Vec::new();
    let mut min_margin = f64::INFINITY;
    for i in 0..20 {
        let n = rng.random_range(2..=5);
        let m = rng.random_range(1..n);
        let model = SutherlandModel::new(random_params(&mut rng, n, m)).unwrap();
        let phi = random_phase_point(&mut rng, n, m, 0.1, 1.0);
        assert!(lie::chamber_margin(&phi.q, m) >= 0.1);
        match integrate_ode(&model, &phi, &config) {
            Ok(traj) if chamber_ok(&traj, m) => {
                for q in &traj.qs {
                    min_margin = min_margin.min(lie::chamber_margin(q, m));
                }
                match spectral_solve(&model, &phi, 1, &traj.times, SegmentOptions::default()) {
                    Ok(exact) if chamber_ok(&exact, m) => {}
                    Ok(_) => failures.push(format!("run {i}: exact sample outside chamber")),
                    Err(e) => failures.push(format!("run {i}: exact solver: {e}")),
                }
            }
            Ok(_) => failures.push(format!("run {i}: ODE sample outside chamber")),
            Err(e) => failures.push(format!("run {i}: ODE: {e}")),
        }
    }
    for f in &failures {
        println!("    {f}");
    }
    let pass = failures.is_empty();
    report(
        6,
        "chamber confinement over [0,10], both solvers",
        pass,
        format!("20 runs, {} exits, smallest sampled margin {min_margin:.3e}", failures.len()),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_7_distinct_spectrum() {
    let started = Instant::now();
    let runs = cross_validation_runs();
    let min_gap = runs.iter().map(|r| r.min_gap).fold(f64::INFINITY, f64::min);
    let pass = min_gap > 0.0;
    report(
        7,
        "eigenvalues of W(t) pairwise distinct",
        pass,
        format!("minimum gap {min_gap:.6e} over {} criterion-3 runs", runs.len()),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_8_structural_suite() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let mut worst = 0.0_f64;
    let mut bump = |label: &str, value: f64| {
        if value > 1e-11 {
            println!("    {label}: {value:.2e}");
        }
        worst = worst.max(value);
    };
    for _ in 0..50 {
        let (model, phi) = draw(&mut rng);
        let s: &Structure = model.structure();
        let dim = s.dim();
        let v = ComplexMatrix::from_fn(dim, |_, _| {
            bcs_core::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });

        bump("θ²", lie::theta(&lie::theta(&v)).max_abs_diff(&v));
        bump("γ²", s.gamma(&s.gamma(&v).unwrap()).unwrap().max_abs_diff(&v));
        let tg = lie::theta(&s.gamma(&v).unwrap());
        let gt = s.gamma(&lie::theta(&v)).unwrap();
        bump("θγ = γθ", tg.max_abs_diff(&gt));

        let lax = model.build_lax(&phi).unwrap();
        let j = &lax.j;
        let mut sum = ComplexMatrix::zeros(dim);
        let parts: Vec<ComplexMatrix> =
            SubspaceLabel::ALL.iter().map(|&l| s.project(j, l).unwrap()).collect();
        for (a, pa) in parts.iter().enumerate() {
            sum = &sum + pa;
            for pb in &parts[a + 1..] {
                let scale = (pa.frobenius_norm() * pb.frobenius_norm()).max(1.0);
                bump("four-fold orthogonality", s.scalar_product(pa, pb).unwrap().abs() / scale);
            }
        }
        bump("four-fold sum", sum.max_abs_diff(j) / j.frobenius_norm().max(1.0));

        let alg = s.is_in_algebra(j).unwrap();
        let j_scale = j.frobenius_norm().max(1.0);
        bump("J ∈ su(n,n)", alg.form_residual.max(alg.scalar_residual) / j_scale);

        let eq = lie::exp_cartan(&phi.q);
        let grp = s.is_in_group(&eq).unwrap();
        bump("e^q ∈ SU(n,n)", grp.form_residual.max(grp.scalar_residual) / eq.frobenius_norm().powi(2));

        let vk = flow_generator(&model, &phi, 1).unwrap().vk;
        let t = 0.5 / vk.frobenius_norm().max(1.0);
        let g = matexp(&vk.scale_real(t)).unwrap();
        let grp = s.is_in_group(&g).unwrap();
        bump("e^{tV} ∈ SU(n,n)", grp.form_residual.max(grp.scalar_residual) / g.frobenius_norm().powi(2));

        let plus = SubspaceLabel::new(lie::Sign::Plus, lie::Sign::Plus);
        for c in [s.cl(), s.cr()] {
            bump("C ∈ G_+^+", s.project(c, plus).unwrap().max_abs_diff(c));
            for b in s.m_basis() {
                bump("C ⊥ M", s.scalar_product(c, b).unwrap().abs());
            }
        }
    }
    let pass = worst <= 1e-11;
    report(
        8,
        "structural identities",
        pass,
        format!("max residual {worst:.2e} over 50 draws (tol 1e-11; group residuals relative to |g|^2)"),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_9_integrator_order() {
    let started = Instant::now();
    let model = SutherlandModel::new(ModelParams::new(3, 1, 1.0, 2.0, 1.0).unwrap()).unwrap();
    let phi = PhasePoint::new(vec![1.6, 0.9, 0.4], vec![0.3, -0.2, 0.1]).unwrap();
    let h = 1e-3;
    let terminal = |dt: f64| {
        let config = SolverConfig { dt, t_end: 1.0, k: 1, sample_every: 1 };
        let traj = integrate_ode(&model, &phi, &config).unwrap();
        let i = traj.len() - 1;
        let p = &traj.ps.as_ref().unwrap()[i];
        traj.qs[i].iter().chain(p).copied().collect::<Vec<f64>>()
    };
    let (s4, s2, s1) = (terminal(4.0 * h), terminal(2.0 * h), terminal(h));
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let order = (dist(&s4, &s2) / dist(&s2, &s1)).log2();
    let pass = (1.8..=2.2).contains(&order);
    report(9, "Verlet order from dt = 4h, 2h, h (h = 1e-3)", pass, format!("observed order {order:.4}"), started);
    assert!(pass);
}
