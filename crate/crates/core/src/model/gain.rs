use super::{InfoStructure, Player};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A block-diagonal gain `K = diag(K_1, …, K_N)` with `K_i ∈ ℝ^{m_i×p_i}`.
///
/// Off-pattern entries are not stored, so the assembled matrix has exact
/// structural zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGain {
    layout: Vec<Player>,
    blocks: Vec<Matrix>,
}

impl BlockGain {
    pub fn new(info: &InfoStructure, blocks: Vec<Matrix>) -> Result<Self> {
        if blocks.len() != info.num_players() {
            return Err(Error::shape("gain blocks", info.num_players(), blocks.len()));
        }
        for (i, (b, pl)) in blocks.iter().zip(info.players()).enumerate() {
            if b.shape() != (pl.m, pl.p) {
                return Err(Error::shape(
                    format!("gain block {i}"),
                    format!("{}x{}", pl.m, pl.p),
                    format!("{}x{}", b.rows(), b.cols()),
                ));
            }
        }
        Ok(Self {
            layout: info.players().to_vec(),
            blocks,
        })
    }

    pub fn zeros(info: &InfoStructure) -> Self {
        let blocks = info.players().iter().map(|pl| Matrix::zeros(pl.m, pl.p)).collect();
        Self {
            layout: info.players().to_vec(),
            blocks,
        }
    }

    /// Builds a gain from its stacked on-pattern entries (see
    /// [`InfoStructure::pattern`]).
    pub fn from_vec(info: &InfoStructure, k: &[f64]) -> Result<Self> {
        if k.len() != info.gain_dof() {
            return Err(Error::shape("stacked gain", info.gain_dof(), k.len()));
        }
        let mut offset = 0;
        let blocks = info
            .players()
            .iter()
            .map(|pl| {
                let len = pl.m * pl.p;
                let b = Matrix::new(pl.m, pl.p, k[offset..offset + len].to_vec());
                offset += len;
                b
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(info, blocks)
    }

    /// Projects a dense `m × p` matrix onto the block-diagonal pattern.
    pub fn project(info: &InfoStructure, dense: &Matrix) -> Result<Self> {
        if dense.shape() != (info.m(), info.p()) {
            return Err(Error::shape(
                "dense gain",
                format!("{}x{}", info.m(), info.p()),
                format!("{}x{}", dense.rows(), dense.cols()),
            ));
        }
        let blocks = info
            .players()
            .iter()
            .enumerate()
            .map(|(i, pl)| dense.block(info.m_offset(i), info.p_offset(i), pl.m, pl.p))
            .collect();
        Self::new(info, blocks)
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Matrix {
        &self.blocks[i]
    }

    pub fn layout(&self) -> &[Player] {
        &self.layout
    }

    /// Checks that this gain fits `info`'s player partition.
    pub fn matches(&self, info: &InfoStructure) -> Result<()> {
        if self.layout != info.players() {
            return Err(Error::shape(
                "gain layout",
                format!("{:?}", info.players()),
                format!("{:?}", self.layout),
            ));
        }
        Ok(())
    }

    /// Stacked on-pattern entries.
    pub fn to_vec(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.as_slice().iter().copied()).collect()
    }

    /// The `m × p` block-diagonal matrix.
    pub fn assemble(&self) -> Matrix {
        let m: usize = self.layout.iter().map(|pl| pl.m).sum();
        let p: usize = self.layout.iter().map(|pl| pl.p).sum();
        let mut out = Matrix::zeros(m, p);
        let (mut r, mut c) = (0, 0);
        for b in &self.blocks {
            out.set_block(r, c, b);
            r += b.rows();
            c += b.cols();
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }

    /// Applies the decentralized policy: `u_i = K_i y_i`.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let mut u = Vec::new();
        let mut off = 0;
        for b in &self.blocks {
            u.extend(b.matvec(&y[off..off + b.cols()]));
            off += b.cols();
        }
        u
    }
}
