mod common;

use common::{minimize_identified_quadratic, numeric_gradient, scalar_form, scalar_power_problem};
use proptest::prelude::*;
use teamlq::gen::{random_constrained, random_gain, random_unconstrained};
use teamlq::linalg::SymMatrix;
use teamlq::model::{expected_cost, BlockGain, InfoStructure, StochasticTeamProblem};
use teamlq::oracle::{nonlinear_search, GaussianStream, SearchOptions};
use teamlq::stochastic::{
    build_lmi_certificate, dual_function, solve_constrained, weighted_team_gain, DualMethod, ReducedQuadratic,
    SolveOptions, SolveStatus, CERTIFICATE_TOLERANCE,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn analytic_gradient_matches_finite_differences(seed in any::<u64>()) {
        let mut g = GaussianStream::new(seed, 0);
        let p = random_unconstrained(&mut g, 8);
        let k = random_gain(&mut g, &p.info, 1.0).to_vec();
        let reduced = ReducedQuadratic::new(&p.objective, &p.info, &p.covariance).unwrap();
        let analytic = reduced.gradient(&k);
        let cost = |v: &[f64]| expected_cost(&p.objective, &BlockGain::from_vec(&p.info, v).unwrap(), p.c(), &p.covariance).unwrap();
        let numeric = numeric_gradient(cost, &k, 1e-5);
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let scale: f64 = numeric.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(diff <= 1e-5 * (1.0 + scale), "diff {diff}, scale {scale}");
    }

    #[test]
    fn dual_is_midpoint_concave(seed in any::<u64>()) {
        let mut g = GaussianStream::new(seed, 0);
        let inst = random_constrained(&mut g, 5, 2).unwrap();
        let a: Vec<f64> = (0..2).map(|_| 3.0 * g.uniform()).collect();
        let b: Vec<f64> = (0..2).map(|_| 3.0 * g.uniform()).collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(a, b)| 0.5 * (a + b)).collect();
        let d = |l: &[f64]| dual_function(&inst.problem, l).unwrap().value;
        let (da, db, dm) = (d(&a), d(&b), d(&mid));
        prop_assert!(dm >= 0.5 * (da + db) - 1e-9 * (1.0 + da.abs() + db.abs()));
    }

    #[test]
    fn weak_duality_at_feasible_points(seed in any::<u64>()) {
        let mut g = GaussianStream::new(seed, 0);
        let inst = random_constrained(&mut g, 5, 2).unwrap();
        let primal = inst.problem.form_cost(0, &inst.k0).unwrap();
        for _ in 0..5 {
            let l: Vec<f64> = (0..2).map(|_| 5.0 * g.uniform()).collect();
            let d = dual_function(&inst.problem, &l).unwrap().value;
            prop_assert!(d <= primal + 1e-9 * (1.0 + primal.abs()));
        }
    }

    #[test]
    fn certificate_tracks_constraint_values(seed in any::<u64>()) {
        let mut g = GaussianStream::new(seed, 0);
        let inst = random_constrained(&mut g, 5, 2).unwrap();
        let p = &inst.problem;
        for scale in [0.0, 0.3, 1.0, 3.0] {
            let k = random_gain(&mut g, &p.info, scale);
            let cert = build_lmi_certificate(p, &k).unwrap();
            let within = (0..2).all(|j| {
                let v = p.form_cost(j + 1, &k).unwrap();
                v <= p.bounds[j] + CERTIFICATE_TOLERANCE * (1.0 + p.bounds[j].abs())
            });
            prop_assert_eq!(cert.is_valid(), within);
        }
    }

    #[test]
    fn unconstrained_solve_matches_brute_force(seed in any::<u64>()) {
        let mut g = GaussianStream::new(seed, 0);
        let p = random_unconstrained(&mut g, 5);
        let report = solve_constrained(&p, &SolveOptions::default()).unwrap();
        let dof = p.info.gain_dof();
        let cost = |v: &[f64]| expected_cost(&p.objective, &BlockGain::from_vec(&p.info, v).unwrap(), p.c(), &p.covariance).unwrap();
        let (brute, _) = minimize_identified_quadratic(cost, dof);
        prop_assert!((report.primal_value - brute).abs() <= 1e-7 * (1.0 + brute.abs()));
    }
}

#[test]
fn constrained_solves_satisfy_kkt() {
    let mut g = GaussianStream::new(41, 0);
    for _ in 0..20 {
        let inst = random_constrained(&mut g, 6, 3).unwrap();
        let r = solve_constrained(&inst.problem, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        for (j, (&l, &v)) in r.lambda_star.iter().zip(&r.constraint_values).enumerate() {
            let bound = inst.problem.bounds[j];
            let tol = 1e-6 * (1.0 + bound.abs());
            assert!(l >= 0.0);
            assert!(v <= bound + tol, "constraint {j}: {v} > {bound}");
            assert!(l * (bound - v) <= 1e-5 * (1.0 + r.primal_value.abs()), "slackness {j}");
        }
        // Primal value is a lower bound for any feasible gain, e.g. K₀.
        assert!(r.primal_value <= inst.problem.form_cost(0, &inst.k0).unwrap() + 1e-9);
    }
}

#[test]
fn supergradient_method_agrees_with_newton() {
    let p = scalar_power_problem();
    let newton = solve_constrained(&p, &SolveOptions::default()).unwrap();
    let opts = SolveOptions {
        method: DualMethod::Supergradient { a: 1.0, b: 10.0 },
        ..SolveOptions::default()
    };
    let sub = solve_constrained(&p, &opts).unwrap();
    assert!((sub.primal_value - newton.primal_value).abs() < 1e-2);
}

#[test]
fn infeasible_constraint_is_reported() {
    // E(x − u)² ≤ −1 cannot hold.
    let mut p = scalar_power_problem();
    p.bounds = vec![-1.0];
    let r = solve_constrained(&p, &SolveOptions::default()).unwrap();
    assert!(matches!(r.status, SolveStatus::Infeasible { .. }), "{:?}", r.status);
}

#[test]
fn team_gain_is_not_beaten_by_tables() {
    // Two scalar players, correlated state, coupled decisions.
    let objective = teamlq::model::BlockForm::new(
        SymMatrix::identity(2),
        teamlq::linalg::Matrix::from_rows(&[[-1.0, -0.3], [-0.2, -1.0]]).unwrap(),
        SymMatrix::from_rows(&[[2.0, 0.5], [0.5, 1.5]]).unwrap(),
    )
    .unwrap();
    let x = SymMatrix::from_rows(&[[1.0, 0.7], [0.7, 2.0]]).unwrap();
    let info = InfoStructure::diagonal(2);
    let p = StochasticTeamProblem::unconstrained(objective, x, info);
    let team = weighted_team_gain(&p.objective, &p.info, &p.covariance).unwrap();
    let opts = SearchOptions {
        samples: 200_000,
        seed: 5,
        ..Default::default()
    };
    let s = nonlinear_search(&p, &[], &team.gain, &opts).unwrap();
    assert!(!s.improves_on_linear(3.0), "{:?}", s.difference);

    let single = StochasticTeamProblem::unconstrained(
        scalar_form(1.0, -0.5, 1.0),
        SymMatrix::from_diag(&[3.0]),
        InfoStructure::diagonal(1),
    );
    let team = weighted_team_gain(&single.objective, &single.info, &single.covariance).unwrap();
    let s = nonlinear_search(&single, &[], &team.gain, &opts).unwrap();
    assert!(!s.improves_on_linear(3.0), "{:?}", s.difference);
}
