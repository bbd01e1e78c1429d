mod common;

use common::brute_expected_cost;
use proptest::prelude::*;
use teamlq::gen::{int_in, random_form, random_gain, random_info, random_spd};
use teamlq::linalg::{sqrt_psd, Matrix, SymMatrix};
use teamlq::model::{
    closed_loop_form, expected_cost, validate_problem, BlockForm, BlockGain, InfoStructure, Player,
    StochasticTeamProblem,
};
use teamlq::oracle::GaussianStream;

fn random_setup(seed: u64) -> (GaussianStream, InfoStructure, BlockForm, SymMatrix) {
    let mut g = GaussianStream::new(seed, 0);
    let players = int_in(&mut g, 1, 3);
    let n = int_in(&mut g, players, 6);
    let m = int_in(&mut g, players, 6);
    let p = int_in(&mut g, players, 6);
    let info = random_info(&mut g, n, players, m, p);
    let form = random_form(&mut g, n, m, 0.0);
    let x = random_spd(&mut g, n, 0.0);
    (g, info, form, x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_loop_quadratic_is_midpoint_convex(seed in any::<u64>()) {
        let (mut g, info, form, _) = random_setup(seed);
        let a = random_gain(&mut g, &info, 1.0);
        let b = random_gain(&mut g, &info, 1.0);
        let mid: Vec<f64> = a.to_vec().iter().zip(b.to_vec()).map(|(a, b)| 0.5 * (a + b)).collect();
        let mid = BlockGain::from_vec(&info, &mid).unwrap();
        let v = g.gaussians(info.n());
        let q = |k: &BlockGain| closed_loop_form(&form, k, info.c()).unwrap().quad(&v);
        let (qa, qb, qm) = (q(&a), q(&b), q(&mid));
        prop_assert!(qm <= 0.5 * (qa + qb) + 1e-9 * (1.0 + qa.abs() + qb.abs()));
    }

    #[test]
    fn trace_formula_matches_entrywise_expansion(seed in any::<u64>()) {
        let (mut g, info, form, x) = random_setup(seed);
        let k = random_gain(&mut g, &info, 1.0);
        let trace = expected_cost(&form, &k, info.c(), &x).unwrap();
        let brute = brute_expected_cost(&form, &k, &info, &x);
        prop_assert!((trace - brute).abs() <= 1e-10 * (1.0 + brute.abs()));
    }

    #[test]
    fn assemble_round_trip(seed in any::<u64>()) {
        let (mut g, info, _, _) = random_setup(seed);
        let k = random_gain(&mut g, &info, 1.0);
        let dense = k.assemble();
        prop_assert_eq!(BlockGain::project(&info, &dense).unwrap(), k.clone());
        prop_assert_eq!(BlockGain::from_vec(&info, &k.to_vec()).unwrap(), k.clone());
        let pattern = info.pattern();
        for r in 0..dense.rows() {
            for c in 0..dense.cols() {
                if !pattern.contains(&(r, c)) {
                    prop_assert_eq!(dense[(r, c)], 0.0);
                }
            }
        }
        for (i, b) in k.blocks().iter().enumerate() {
            prop_assert_eq!(&dense.block(info.m_offset(i), info.p_offset(i), b.rows(), b.cols()), b);
        }
    }
}

#[test]
fn trace_formula_matches_sample_average() {
    let mut g = GaussianStream::new(3, 0);
    let info = random_info(&mut g, 4, 2, 3, 3);
    let form = random_form(&mut g, 4, 3, 0.1);
    let x = random_spd(&mut g, 4, 0.1);
    let k = random_gain(&mut g, &info, 1.0);
    let h = sqrt_psd(&x).unwrap();
    let samples = 200_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let s = h.as_matrix().matvec(&g.gaussians(4));
        let v = form.eval(&s, &k.apply(&info.c().matvec(&s)));
        sum += v;
        sq += v * v;
    }
    let mean = sum / samples as f64;
    let se = ((sq / samples as f64 - mean * mean) / samples as f64).sqrt();
    let exact = expected_cost(&form, &k, info.c(), &x).unwrap();
    assert!((mean - exact).abs() <= 4.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn measurement_noise_augments_the_state() {
    let form = BlockForm::new(SymMatrix::identity(1), Matrix::from_rows(&[[-1.0]]).unwrap(), SymMatrix::identity(1)).unwrap();
    let p = StochasticTeamProblem::unconstrained(form, SymMatrix::from_diag(&[4.0]), InfoStructure::diagonal(1));
    let noisy = p
        .with_measurement_noise(&SymMatrix::from_diag(&[1.0]), &Matrix::identity(1))
        .unwrap();
    assert_eq!(noisy.n(), 2);
    assert_eq!(noisy.c(), &Matrix::from_rows(&[[1.0, 1.0]]).unwrap());
    // E(x − k(x + v))² = 4(1 − k)² + k².
    let k = BlockGain::from_vec(&noisy.info, &[0.5]).unwrap();
    let cost = noisy.form_cost(0, &k).unwrap();
    assert!((cost - 1.25).abs() < 1e-12, "{cost}");
}

#[test]
fn validation_lists_every_violation() {
    let info = InfoStructure::new(vec![Player { m: 1, p: 1 }], Matrix::from_rows(&[[1.0, 0.0]]).unwrap()).unwrap();
    let objective = BlockForm::new(SymMatrix::identity(1), Matrix::zeros(1, 1), SymMatrix::from_diag(&[-1.0])).unwrap();
    let p = StochasticTeamProblem::new(objective, Vec::new(), vec![1.0], SymMatrix::from_diag(&[1.0, -1.0]), info);
    let report = validate_problem(&p);
    let text = report.to_string();
    assert!(text.contains("objective Q has dimension 1 but the state has 2"), "{text}");
    assert!(text.contains("1 bounds given for 0 constraints"), "{text}");
    assert!(text.contains("covariance not positive semidefinite"), "{text}");
    assert!(report.into_result().is_err());
}
