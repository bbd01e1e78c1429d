use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix, PsdSolver, SymMatrix};
use crate::model::{BlockForm, BlockGain, InfoStructure};

/// `Tr(Φ(K) X)` written as a quadratic `kᵀHk + 2gᵀk + c` in the stacked
/// on-pattern entries `k` of a block-diagonal gain.
///
/// With `Y = C X Cᵀ` and `G = Sᵀ X Cᵀ`, the entry of `H` coupling `K_ab`
/// and `K_cd` is `R_ac Y_bd`, `g` collects `G_ab`, and `c = Tr(Q X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedQuadratic {
    pub h: SymMatrix,
    pub g: Vec<f64>,
    pub c: f64,
}

impl ReducedQuadratic {
    pub fn new(form: &BlockForm, info: &InfoStructure, x: &SymMatrix) -> Result<Self> {
        let c_map = info.c();
        if form.n() != info.n() || form.m() != info.m() {
            return Err(Error::shape(
                "form vs information structure",
                format!("n={}, m={}", info.n(), info.m()),
                format!("n={}, m={}", form.n(), form.m()),
            ));
        }
        if x.dim() != info.n() {
            return Err(Error::shape("covariance", info.n(), x.dim()));
        }
        let cx = c_map.matmul(x.as_matrix());
        let y = cx.matmul(&c_map.transpose());
        let g_full = form.s.tr_matmul(&cx.transpose());
        let pattern = info.pattern();
        let dof = pattern.len();
        let r = form.r.as_matrix();
        let h = Matrix::from_fn(dof, dof, |u, v| {
            let (a, b) = pattern[u];
            let (c, d) = pattern[v];
            r[(a, c)] * y[(b, d)]
        });
        Ok(Self {
            h: SymMatrix::symmetrize(h),
            g: pattern.iter().map(|&(a, b)| g_full[(a, b)]).collect(),
            c: form.q.as_matrix().dot(x.as_matrix()),
        })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn eval(&self, k: &[f64]) -> f64 {
        self.h.quad(k) + 2.0 * dot(&self.g, k) + self.c
    }

    /// Gradient `2(Hk + g)`.
    pub fn gradient(&self, k: &[f64]) -> Vec<f64> {
        let mut hk = self.h.as_matrix().matvec(k);
        for (v, g) in hk.iter_mut().zip(&self.g) {
            *v = 2.0 * (*v + g);
        }
        hk
    }

    /// `self + w·other`.
    pub fn add_scaled(&mut self, w: f64, other: &ReducedQuadratic) {
        self.h.axpy(w, &other.h);
        for (a, b) in self.g.iter_mut().zip(&other.g) {
            *a += w * b;
        }
        self.c += w * other.c;
    }

    /// Minimizes over `k`: solves `Hk = −g`, taking the minimum-norm solution
    /// when `H` is singular.
    pub fn minimize(&self) -> Result<Minimizer> {
        let solver = PsdSolver::new(&self.h)?;
        let rhs: Vec<f64> = self.g.iter().map(|v| -v).collect();
        let k = solver.solve(&rhs);
        let rank_deficient = solver.is_singular();
        Ok(Minimizer {
            value: self.eval(&k),
            k,
            rank_deficient,
            solver,
        })
    }
}

/// Result of [`ReducedQuadratic::minimize`].
#[derive(Debug, Clone)]
pub struct Minimizer {
    pub k: Vec<f64>,
    pub value: f64,
    pub rank_deficient: bool,
    pub(crate) solver: PsdSolver,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Full-information gain: solves `Q_uu L = −Q_ux` for `L` (`m × n`).
///
/// Here `Q_uu = R` and `Q_ux = Sᵀ`, so `u = L x` minimizes the form pointwise.
pub fn full_info_gain(form: &BlockForm) -> Result<Matrix> {
    let chol = Cholesky::factor(&form.r).map_err(|e| match e {
        Error::NotPositiveDefinite { min_eig, .. } => Error::NotPositiveDefinite {
            what: "decision block R".into(),
            min_eig,
        },
        other => other,
    })?;
    let (n, m) = (form.n(), form.m());
    let mut l = Matrix::zeros(m, n);
    for col in 0..n {
        let rhs: Vec<f64> = (0..m).map(|a| -form.s[(col, a)]).collect();
        for (a, v) in chol.solve(&rhs).into_iter().enumerate() {
            l[(a, col)] = v;
        }
    }
    Ok(l)
}

/// Structured team gain minimizing `Tr(Φ(K) X)` over block-diagonal `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamGain {
    pub gain: BlockGain,
    pub cost: f64,
    /// The reduced system was singular and the minimum-norm solution was
    /// returned.
    pub rank_deficient: bool,
}

/// The unique minimizer of `Tr(Φ(K) X)` over the block-diagonal gains of
/// `info`, found by one structured linear solve.
pub fn weighted_team_gain(form: &BlockForm, info: &InfoStructure, x: &SymMatrix) -> Result<TeamGain> {
    require_pd_r(form)?;
    let reduced = ReducedQuadratic::new(form, info, x)?;
    let min = reduced.minimize()?;
    if min.rank_deficient {
        log::debug!("team gain system is singular; using the minimum-norm solution");
    }
    Ok(TeamGain {
        gain: BlockGain::from_vec(info, &min.k)?,
        cost: min.value,
        rank_deficient: min.rank_deficient,
    })
}

fn require_pd_r(form: &BlockForm) -> Result<()> {
    if form.m() == 0 {
        return Ok(());
    }
    let min = crate::linalg::min_eigenvalue(&form.r)?;
    let tol = crate::model::DEFINITENESS_TOLERANCE * (1.0 + form.r.frobenius_norm());
    if min <= tol {
        return Err(Error::NotPositiveDefinite {
            what: "decision block R".into(),
            min_eig: min,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{expected_cost, Player};

    fn form(q: &[&[f64]], s: &[&[f64]], r: &[&[f64]]) -> BlockForm {
        BlockForm::new(
            SymMatrix::from_rows(q).unwrap(),
            Matrix::from_rows(s).unwrap(),
            SymMatrix::from_rows(r).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn full_info_examples() {
        let f = form(&[&[1.0]], &[&[-1.0]], &[&[1.0]]);
        assert_eq!(full_info_gain(&f).unwrap(), Matrix::identity(1));

        let f = form(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[0.5, 0.0], &[0.0, 0.5]], &[&[1.0, 0.0], &[0.0, 1.0]]);
        let f = BlockForm {
            r: f.r.scale(2.0),
            s: f.s.scale(2.0),
            ..f
        };
        let l = full_info_gain(&f).unwrap();
        assert!((&l - &Matrix::identity(2).scale(-0.5)).max_abs() < 1e-15);

        // Q_uu = diag(2, 1), Q_ux = [2; −1].
        let f = form(&[&[1.0]], &[&[2.0, -1.0]], &[&[2.0, 0.0], &[0.0, 1.0]]);
        let l = full_info_gain(&f).unwrap();
        assert!((l[(0, 0)] + 1.0).abs() < 1e-14 && (l[(1, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn full_info_rejects_singular_r() {
        let f = form(&[&[1.0]], &[&[1.0]], &[&[0.0]]);
        assert!(matches!(full_info_gain(&f), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn zero_cross_term_gives_zero_gain() {
        let info = InfoStructure::diagonal(3);
        let f = BlockForm::new(SymMatrix::identity(3), Matrix::zeros(3, 3), SymMatrix::identity(3)).unwrap();
        let tg = weighted_team_gain(&f, &info, &SymMatrix::identity(3)).unwrap();
        assert_eq!(tg.gain.to_vec(), vec![0.0; 3]);
    }

    #[test]
    fn single_player_full_information_matches_completion_of_squares() {
        let f = form(
            &[&[3.0, 0.5], &[0.5, 2.0]],
            &[&[1.0, -0.5], &[0.25, 2.0]],
            &[&[2.0, 0.3], &[0.3, 1.0]],
        );
        let info = InfoStructure::new(vec![Player { m: 2, p: 2 }], Matrix::identity(2)).unwrap();
        let x = SymMatrix::from_rows(&[[2.0, 0.4], [0.4, 1.0]]).unwrap();
        let k = weighted_team_gain(&f, &info, &x).unwrap().gain.assemble();
        let l = full_info_gain(&f).unwrap();
        assert!((&k - &l).max_abs() < 1e-12);
    }

    #[test]
    fn decoupled_scalar_players() {
        let s = [0.7, -1.3];
        let f = form(
            &[&[5.0, 0.0], &[0.0, 5.0]],
            &[&[s[0], 0.0], &[0.0, s[1]]],
            &[&[1.0, 0.0], &[0.0, 1.0]],
        );
        let info = InfoStructure::diagonal(2);
        let k = weighted_team_gain(&f, &info, &SymMatrix::identity(2)).unwrap().gain.to_vec();
        assert!((k[0] + s[0]).abs() < 1e-14 && (k[1] + s[1]).abs() < 1e-14);
    }

    #[test]
    fn reduced_quadratic_matches_trace_cost() {
        let f = form(
            &[&[2.0, 0.1, 0.0], &[0.1, 1.0, 0.2], &[0.0, 0.2, 1.5]],
            &[&[0.3, -0.2], &[0.5, 0.1], &[-0.4, 0.7]],
            &[&[1.2, 0.4], &[0.4, 0.9]],
        );
        let c = Matrix::from_rows(&[[1.0, 0.5, 0.0], [0.0, 1.0, -1.0], [0.3, 0.0, 1.0]]).unwrap();
        let info = InfoStructure::new(vec![Player { m: 1, p: 1 }, Player { m: 1, p: 2 }], c).unwrap();
        let x = SymMatrix::from_rows(&[[1.0, 0.2, 0.1], [0.2, 2.0, 0.3], [0.1, 0.3, 0.5]]).unwrap();
        let rq = ReducedQuadratic::new(&f, &info, &x).unwrap();
        let k = [0.4, -1.1, 0.25];
        let gain = BlockGain::from_vec(&info, &k).unwrap();
        let direct = expected_cost(&f, &gain, info.c(), &x).unwrap();
        assert!((rq.eval(&k) - direct).abs() < 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn singular_covariance_flags_min_norm_solution() {
        // Player 2 measures a state component with zero variance.
        let f = form(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[0.5, 0.0], &[0.0, 0.5]], &[&[1.0, 0.0], &[0.0, 1.0]]);
        let info = InfoStructure::diagonal(2);
        let tg = weighted_team_gain(&f, &info, &SymMatrix::from_diag(&[1.0, 0.0])).unwrap();
        assert!(tg.rank_deficient);
        let k = tg.gain.to_vec();
        assert!((k[0] + 0.5).abs() < 1e-12);
        assert!(k[1].abs() < 1e-12);
    }
}
