use super::*;
use crate::channel::gen_iid_rayleigh;
use crate::detect::{build_problem_esignal, build_problem_original, exact_solve, uw_svd, Mode};
use crate::linalg::{distance, real_vector, ComplexMatrix};
use crate::rng::{complex_gaussian, stream, Purpose};

fn spd(n: usize, seed: u64) -> ComplexMatrix {
    let g = gen_iid_rayleigh(2 * n, n, &mut stream(seed, Purpose::Synthetic, 0)).unwrap();
    let mut a = g.gram();
    for i in 0..n {
        a[(i, i)].re += 0.1;
    }
    a
}

fn random_vec(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = stream(seed, Purpose::Symbols, 0);
    (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect()
}

fn explicit(a: ComplexMatrix, b: Vec<C64>) -> DetectionProblem {
    DetectionProblem::from_matrix(a, b).unwrap()
}

fn run_plain(problem: &DetectionProblem, algorithm: Algorithm, t: usize) -> SolverTrace {
    run_with(problem, &SolverSpec::new(algorithm, t), true, &mut |_, _| {}).unwrap()
}

#[test]
fn richardson_hand_cases() {
    let b = real_vector(&[1.0, -2.0]);
    let p = explicit(ComplexMatrix::identity(2), b.clone());
    assert_eq!(run_plain(&p, Algorithm::Ri, 1).solution, b);

    let p = explicit(ComplexMatrix::from_real_diagonal(&[2.0]), real_vector(&[2.0]));
    let trace = run_plain(&p, Algorithm::Ri, 2);
    assert_eq!(trace.iterates[1], real_vector(&[2.0]));
    assert_eq!(trace.iterates[2], real_vector(&[0.0]));
}

#[test]
fn exact_start_is_a_fixed_point() {
    let a = spd(5, 1);
    let p = explicit(a, random_vec(5, 2));
    let x_star = exact_solve(&p).unwrap();
    for algorithm in Algorithm::ALL {
        let mut spec = SolverSpec::new(algorithm, 3);
        spec.initial_iterate = Some(x_star.clone());
        let trace = run(&p, &spec, |_, _| {}).unwrap();
        assert!(distance(&trace.solution, &x_star) < 1e-10, "{algorithm}");
    }
}

#[test]
fn splittings_converge_in_one_step_when_exact() {
    let d = ComplexMatrix::from_real_diagonal(&[2.0, 5.0, 0.5]);
    let b = random_vec(3, 3);
    let p = explicit(d.clone(), b.clone());
    let mut spec = SolverSpec::new(Algorithm::Ji, 1);
    spec.initial_iterate = Some(random_vec(3, 4));
    let x = run(&p, &spec, |_, _| {}).unwrap().solution;
    assert!(distance(&d.mul_vec(&x).unwrap(), &b) < 1e-14);

    let lower = ComplexMatrix::from_fn(3, 3, |i, j| {
        if i == j {
            C64::new(2.0 + i as f64, 0.0)
        } else if j < i {
            C64::new(0.5, -0.25 * i as f64)
        } else {
            ZERO
        }
    });
    let p = DetectionProblem::from_matrix_unchecked(lower.clone(), b.clone()).unwrap();
    let x = run_plain(&p, Algorithm::Gs, 1).solution;
    assert!(distance(&lower.mul_vec(&x).unwrap(), &b) < 1e-14);
}

#[test]
fn jacobi_equals_richardson_on_esignal_zf() {
    let h = gen_iid_rayleigh(32, 8, &mut stream(5, Purpose::Channel, 0)).unwrap();
    let f = uw_svd(&h, &[4, 4]).unwrap();
    let p = build_problem_esignal(&f, &random_vec(32, 6), Mode::Zf, 1.0).unwrap();
    let ri = run_plain(&p, Algorithm::Ri, 20);
    let ji = run_plain(&p, Algorithm::Ji, 20);
    assert_eq!(ri.iterates, ji.iterates);
}

#[test]
fn lbfgs_identity_one_step() {
    let b = random_vec(4, 7);
    let p = explicit(ComplexMatrix::identity(4), b.clone());
    let mut flops = Flops::default();
    let mut state = LbfgsState::new(&p, false, &mut flops).unwrap();
    let out = step_lbfgs(&p, &mut state, &[ZERO; 4], &mut flops);
    assert!(distance(&out.x, &b) < 1e-15);
    // gradient vanishes at the optimum: the next step stalls
    let again = step_lbfgs(&p, &mut state, &out.x, &mut flops);
    assert!(again.stagnated);
    assert_eq!(again.x, out.x);
}

#[test]
fn lbfgs_matches_cg() {
    for seed in 0..20 {
        let n = if seed < 5 { 2 } else { 6 };
        let p = explicit(spd(n, 100 + seed), random_vec(n, 200 + seed));
        let lb = run_plain(&p, Algorithm::Lbfgs, n);
        let cg = run_plain(&p, Algorithm::Cg, n);
        let x_star = exact_solve(&p).unwrap();
        let scale = crate::linalg::norm(&x_star);
        for (a, b) in lb.iterates.iter().zip(&cg.iterates) {
            assert!(distance(a, b) <= 1e-8 * scale, "seed {seed}");
        }
        assert!(distance(&cg.solution, &x_star) <= 1e-8 * scale);
    }
}

#[test]
fn textbook_direction_matches_on_quadratics() {
    let p = explicit(spd(6, 9), random_vec(6, 10));
    let verbatim = run_plain(&p, Algorithm::Lbfgs, 6);
    let mut spec = SolverSpec::new(Algorithm::Lbfgs, 6);
    spec.lbfgs_textbook = true;
    let textbook = run_with(&p, &spec, true, &mut |_, _| {}).unwrap();
    for (a, b) in verbatim.iterates.iter().zip(&textbook.iterates) {
        assert!(distance(a, b) < 1e-9);
    }
}

#[test]
fn cg_energy_norm_decreases() {
    let a = spd(8, 11);
    let p = explicit(a.clone(), random_vec(8, 12));
    let x_star = exact_solve(&p).unwrap();
    let energy = |x: &[C64]| {
        let e: Vec<C64> = x.iter().zip(&x_star).map(|(u, v)| u - v).collect();
        crate::linalg::dot(&e, &a.mul_vec(&e).unwrap()).re
    };
    let trace = run_plain(&p, Algorithm::Cg, 8);
    for w in trace.iterates.windows(2) {
        assert!(energy(&w[1]) <= energy(&w[0]) * (1.0 + 1e-12) + 1e-24);
    }
}

#[test]
fn dense_preconditioner_agrees_with_triangular_path() {
    let h = gen_iid_rayleigh(24, 6, &mut stream(13, Purpose::Channel, 0)).unwrap();
    let p = build_problem_original(&h, &random_vec(24, 14), Mode::Lmmse, 10.0).unwrap();
    let r = random_vec(6, 15);
    for (kind, omega) in [
        (SplittingKind::Ji, 1.0),
        (SplittingKind::Gs, 1.0),
        (SplittingKind::Ssor, 1.0),
        (SplittingKind::Gs, 1.3),
        (SplittingKind::Ssor, 0.7),
    ] {
        let mut flops = Flops::default();
        let pre = Preconditioner::new(&p, kind, omega, &mut flops).unwrap();
        let mut fast = r.clone();
        pre.solve_in_place(&mut fast, &mut flops).unwrap();
        let dense = crate::linalg::cholesky_solve(&pre.materialize(), &r);
        let dense = match kind {
            // GS splitting is not Hermitian; solve it by substitution
            SplittingKind::Gs => crate::linalg::solve_lower_triangular(&pre.materialize(), &r).unwrap(),
            _ => dense.unwrap(),
        };
        assert!(
            distance(&fast, &dense) < 1e-10 * crate::linalg::norm(&dense),
            "{kind:?} {omega}"
        );
    }
}

#[test]
fn per_iteration_counts() {
    let (m, n) = (256, 32);
    let h = gen_iid_rayleigh(m, n, &mut stream(16, Purpose::Channel, 0)).unwrap();
    let p = build_problem_original(&h, &random_vec(m, 17), Mode::Lmmse, 10.0).unwrap();
    let ssor = run_plain(&p, Algorithm::Ssor, 3).iteration_flops(2);
    assert_eq!(ssor, (2 * n * n + 2 * n) as u64);
    let lbfgs = run_plain(&p, Algorithm::Lbfgs, 3).iteration_flops(2);
    let nominal = (4 * m * n + n * n + 5 * n) as f64;
    let ratio = lbfgs as f64 / nominal;
    assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn trace_shape_and_validation() {
    let p = explicit(spd(3, 18), random_vec(3, 19));
    assert!(run(&p, &SolverSpec::new(Algorithm::Ri, 0), |_, _| {}).is_err());
    let mut calls = Vec::new();
    let trace = run(&p, &SolverSpec::new(Algorithm::Ssor, 1), |t, _| calls.push(t)).unwrap();
    assert_eq!(calls, vec![1]);
    assert_eq!(trace.iterations(), 1);
    assert_eq!(trace.flops.len(), 2);
    let csv = trace.to_csv();
    assert!(csv.starts_with("iteration,residual_norm,cumulative_flops\n0,"));
    assert_eq!(csv.lines().count(), 3);
    assert!("L-BFGS".parse::<Algorithm>().is_ok());
    assert!("sor".parse::<Algorithm>().is_err());
}
