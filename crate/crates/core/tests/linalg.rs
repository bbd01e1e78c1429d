use proptest::prelude::*;
use teamlq::gen::{gaussian_matrix, random_psd, random_spd};
use teamlq::linalg::{is_psd, schur_complement, solve_spd, sqrt_psd, sym_eig, Matrix, SymMatrix};
use teamlq::oracle::GaussianStream;

fn random_symmetric(g: &mut GaussianStream, n: usize) -> SymMatrix {
    SymMatrix::symmetrize(gaussian_matrix(g, n, n))
}

/// `Q diag(d) Qᵀ` with `Q` orthogonal from Gram–Schmidt.
fn with_spectrum(g: &mut GaussianStream, d: &[f64]) -> SymMatrix {
    let n = d.len();
    let a = gaussian_matrix(g, n, n);
    let mut q: Vec<Vec<f64>> = Vec::new();
    for c in 0..n {
        let mut v: Vec<f64> = (0..n).map(|r| a[(r, c)]).collect();
        for u in &q {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        q.push(v.into_iter().map(|x| x / norm).collect());
    }
    SymMatrix::symmetrize(Matrix::from_fn(n, n, |i, j| (0..n).map(|k| q[k][i] * d[k] * q[k][j]).sum()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..=50) {
        let mut g = GaussianStream::new(seed, 0);
        let s = random_symmetric(&mut g, n);
        let e = sym_eig(&s).unwrap();
        let rec = e.reconstruct_with(|l| l);
        let err = (&rec - &s).frobenius_norm();
        prop_assert!(err <= 1e-9 * (1.0 + s.frobenius_norm()), "error {err}");
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn schur_complement_preserves_sign(seed in any::<u64>(), n in 1usize..=5, k in 1usize..=5, flip in any::<bool>()) {
        let mut g = GaussianStream::new(seed, 0);
        let mut m = random_psd(&mut g, n + k, n + k);
        // Keep the lower-right block definite and push the top block negative
        // half of the time.
        let lower: Vec<f64> = (0..n + k).map(|i| if i < n { 0.0 } else { 0.5 }).collect();
        m.axpy(1.0, &SymMatrix::from_diag(&lower));
        if flip {
            let upper: Vec<f64> = (0..n + k).map(|i| if i < n { -5.0 } else { 0.0 }).collect();
            m.axpy(1.0, &SymMatrix::from_diag(&upper));
        }
        let whole = is_psd(&m, 1e-9).unwrap();
        let schur = is_psd(&schur_complement(&m, n).unwrap(), 1e-9).unwrap();
        prop_assert_eq!(whole, schur);
    }

    #[test]
    fn sqrt_of_projector_is_itself(seed in any::<u64>(), n in 1usize..=8, rank in 0usize..=8) {
        let mut g = GaussianStream::new(seed, 0);
        let rank = rank.min(n);
        let d: Vec<f64> = (0..n).map(|i| if i < rank { 1.0 } else { 0.0 }).collect();
        let p = with_spectrum(&mut g, &d);
        let root = sqrt_psd(&p).unwrap();
        prop_assert!((&root - &p).frobenius_norm() <= 1e-9);
    }

    #[test]
    fn spd_solve_residual(seed in any::<u64>(), n in 1usize..=12, log_cond in 0.0f64..6.0) {
        let mut g = GaussianStream::new(seed, 0);
        let d: Vec<f64> = (0..n)
            .map(|i| if n == 1 { 1.0 } else { 10f64.powf(-log_cond * i as f64 / (n - 1) as f64) })
            .collect();
        let a = with_spectrum(&mut g, &d);
        let b = g.gaussians(n);
        let x = solve_spd(&a, &b).unwrap();
        let r: Vec<f64> = a.as_matrix().matvec(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(rn <= 1e-9 * (1.0 + bn), "residual {rn}");
    }

    #[test]
    fn sqrt_squares_back(seed in any::<u64>(), n in 1usize..=10) {
        let mut g = GaussianStream::new(seed, 0);
        let x = random_spd(&mut g, n, 0.0);
        let h = sqrt_psd(&x).unwrap();
        let sq = SymMatrix::symmetrize(h.as_matrix().matmul(h.as_matrix()));
        prop_assert!((&sq - &x).frobenius_norm() <= 1e-9 * (1.0 + x.frobenius_norm()));
    }
}

#[test]
fn asymmetric_input_is_rejected() {
    let m = Matrix::from_rows(&[[1.0, 2.0], [2.1, 1.0]]).unwrap();
    assert!(SymMatrix::from_matrix(m).is_err());
}

#[test]
fn slightly_negative_covariance_is_clamped() {
    let x = SymMatrix::from_diag(&[1.0, -1e-12]);
    let h = sqrt_psd(&x).unwrap();
    assert_eq!(h.as_matrix()[(1, 1)], 0.0);
    assert!(sqrt_psd(&SymMatrix::from_diag(&[1.0, -1e-3])).is_err());
}
