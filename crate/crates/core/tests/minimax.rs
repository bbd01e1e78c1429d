use proptest::prelude::*;
use teamlq::gen::{backwards_feasible, int_in, random_form, random_gain, random_info, random_psd};
use teamlq::linalg::{is_psd, max_eigenvalue, Matrix, SymMatrix};
use teamlq::minimax::{
    feasibility_search, game_value, lmi_block, FeasibilityOptions, FeasibilityStatus, GameValueOptions,
    FEASIBILITY_TOLERANCE,
};
use teamlq::model::{closed_loop_form, BlockForm, BlockGain, DeterministicTeamProblem, InfoStructure};
use teamlq::oracle::GaussianStream;

fn phi(forms: &[BlockForm], k: &BlockGain, c: &Matrix) -> f64 {
    forms
        .iter()
        .map(|f| max_eigenvalue(&closed_loop_form(f, k, c).unwrap()).unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lmi_and_closed_loop_agree(seed in any::<u64>()) {
        let mut g = GaussianStream::new(seed, 0);
        let players = int_in(&mut g, 1, 3);
        let n = int_in(&mut g, players, 6);
        let m = int_in(&mut g, players, 6);
        let info = random_info(&mut g, n, players, m, n.max(players));
        let k = random_gain(&mut g, &info, 1.0);
        let mut form = random_form(&mut g, n, m, 0.2);
        form.q = form.q.shifted(-(1.0 + 4.0 * g.uniform()) * (1.0 + form.q.frobenius_norm()));
        let a = is_psd(&closed_loop_form(&form, &k, info.c()).unwrap().scale(-1.0), 1e-9).unwrap();
        let b = is_psd(&lmi_block(&form, &k, info.c()).unwrap().scale(-1.0), 1e-9).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn spectral_objective_is_midpoint_convex(seed in any::<u64>()) {
        let mut g = GaussianStream::new(seed, 0);
        let info = random_info(&mut g, 4, 2, 3, 4);
        let forms: Vec<BlockForm> = (0..3).map(|_| random_form(&mut g, 4, 3, 0.0)).collect();
        let a = random_gain(&mut g, &info, 1.0);
        let b = random_gain(&mut g, &info, 1.0);
        let mid: Vec<f64> = a.to_vec().iter().zip(b.to_vec()).map(|(a, b)| 0.5 * (a + b)).collect();
        let mid = BlockGain::from_vec(&info, &mid).unwrap();
        let (pa, pb, pm) = (phi(&forms, &a, info.c()), phi(&forms, &b, info.c()), phi(&forms, &mid, info.c()));
        prop_assert!(pm <= 0.5 * (pa + pb) + 1e-9 * (1.0 + pa.abs() + pb.abs()));
    }
}

#[test]
fn feasible_reports_are_sound_and_bridge_to_expectations() {
    let mut g = GaussianStream::new(12, 0);
    for t in 0..10 {
        let (p, _) = backwards_feasible(&mut g, 4, 1 + t % 2, 0.1).unwrap();
        let r = feasibility_search(&p, &FeasibilityOptions::default()).unwrap();
        assert_eq!(r.status, FeasibilityStatus::Feasible);
        let k = r.k.unwrap();
        for f in &p.forms {
            assert!(max_eigenvalue(&lmi_block(f, &k, p.info.c()).unwrap()).unwrap() <= FEASIBILITY_TOLERANCE);
            let phi = closed_loop_form(f, &k, p.info.c()).unwrap();
            for _ in 0..20 {
                let x = random_psd(&mut g, p.info.n(), 1 + t % p.info.n());
                assert!(phi.as_matrix().dot(x.as_matrix()) <= 1e-9 * (1.0 + x.trace()));
            }
        }
    }
}

#[test]
fn adding_a_form_never_lowers_the_game_value() {
    let mut g = GaussianStream::new(21, 0);
    let opts = GameValueOptions {
        resolution: 1e-5,
        ..GameValueOptions::default()
    };
    for _ in 0..3 {
        let (base, _) = backwards_feasible(&mut g, 3, 1, 0.1).unwrap();
        let info = base.info.clone();
        let objective = random_form(&mut g, info.n(), info.m(), 0.5);
        let small = DeterministicTeamProblem::game_value(vec![objective.clone()], 0, info.clone());
        let large = DeterministicTeamProblem::game_value(vec![objective, base.forms[0].clone()], 0, info);
        let a = game_value(&small, &opts).unwrap();
        let b = game_value(&large, &opts).unwrap();
        assert!(b.gamma_star >= a.gamma_star - 1e-3 * (1.0 + a.gamma_star.abs()), "{} < {}", b.gamma_star, a.gamma_star);
        assert!(a.bisection_interval.1 - a.bisection_interval.0 <= 1e-5);
    }
}

#[test]
fn game_value_examples() {
    let scalar = |q: f64, s: f64, r: f64| {
        BlockForm::new(SymMatrix::from_diag(&[q]), Matrix::from_rows(&[[s]]).unwrap(), SymMatrix::from_diag(&[r])).unwrap()
    };
    let tracking = DeterministicTeamProblem::game_value(vec![scalar(1.0, -1.0, 1.0)], 0, InfoStructure::diagonal(1));
    let r = game_value(&tracking, &GameValueOptions::default()).unwrap();
    assert!(r.gamma_star.abs() <= 1e-5, "{}", r.gamma_star);
    assert!((r.k.block(0)[(0, 0)] - 1.0).abs() <= 1e-2);
}
