use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Decision and measurement dimensions of one player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Player {
    pub m: usize,
    pub p: usize,
}

/// Player partition and the stacked measurement map `y = C x`.
///
/// Player `i` observes the row block `C_i` and decides `u_i ∈ ℝ^{m_i}`.
/// Together they define the admissible set of block-diagonal gains.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoStructure {
    players: Vec<Player>,
    c: Matrix,
    m_offsets: Vec<usize>,
    p_offsets: Vec<usize>,
}

impl InfoStructure {
    pub fn new(players: Vec<Player>, c: Matrix) -> Result<Self> {
        if players.is_empty() {
            return Err(Error::Malformed("information structure has no players".into()));
        }
        let p: usize = players.iter().map(|pl| pl.p).sum();
        if c.rows() != p {
            return Err(Error::shape(
                "measurement map C rows",
                format!("{p} (sum of p_i)"),
                c.rows(),
            ));
        }
        let m_offsets = offsets(players.iter().map(|pl| pl.m));
        let p_offsets = offsets(players.iter().map(|pl| pl.p));
        Ok(Self {
            players,
            c,
            m_offsets,
            p_offsets,
        })
    }

    /// Every player sees the full state: `C = I`, one block per player.
    pub fn full_information(n: usize, decision_dims: &[usize]) -> Result<Self> {
        let players = decision_dims.iter().map(|&m| Player { m, p: n }).collect();
        let mut c = Matrix::zeros(n * decision_dims.len(), n);
        for i in 0..decision_dims.len() {
            c.set_block(i * n, 0, &Matrix::identity(n));
        }
        Self::new(players, c)
    }

    /// Player `i` observes the state component `x_i` only (scalar players).
    pub fn diagonal(n: usize) -> Self {
        Self::new(vec![Player { m: 1, p: 1 }; n], Matrix::identity(n))
            .expect("identity measurement is consistent")
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.c.cols()
    }

    /// Total decision dimension `Σ m_i`.
    pub fn m(&self) -> usize {
        *self.m_offsets.last().unwrap()
    }

    /// Total measurement dimension `Σ p_i`.
    pub fn p(&self) -> usize {
        *self.p_offsets.last().unwrap()
    }

    pub fn m_offset(&self, i: usize) -> usize {
        self.m_offsets[i]
    }

    pub fn p_offset(&self, i: usize) -> usize {
        self.p_offsets[i]
    }

    /// The measurement rows `C_i` of player `i`.
    pub fn c_block(&self, i: usize) -> Matrix {
        self.c.block(self.p_offsets[i], 0, self.players[i].p, self.n())
    }

    /// Number of free entries in a block-diagonal gain, `Σ m_i p_i`.
    pub fn gain_dof(&self) -> usize {
        self.players.iter().map(|pl| pl.m * pl.p).sum()
    }

    /// Enumerates the on-pattern entries `(row, col)` of the assembled
    /// `m × p` gain, in stacking order (player, then row-major in block).
    pub fn pattern(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.gain_dof());
        for (i, pl) in self.players.iter().enumerate() {
            for a in 0..pl.m {
                for b in 0..pl.p {
                    out.push((self.m_offsets[i] + a, self.p_offsets[i] + b));
                }
            }
        }
        out
    }

    pub fn with_c(&self, c: Matrix) -> Result<Self> {
        Self::new(self.players.clone(), c)
    }
}

fn offsets(dims: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut out = vec![0];
    for d in dims {
        out.push(out.last().unwrap() + d);
    }
    out
}
