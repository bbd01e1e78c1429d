use std::fmt;

use crate::error::{Error, Result};

/// Communication delays between nodes: node `i` knows `y_j(κ)` and `u_j(κ)`
/// at time `k` iff `κ + d(i, j) ≤ k`. `None` means never.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayPattern {
    d: Vec<Vec<Option<usize>>>,
}

impl DelayPattern {
    pub fn new(d: Vec<Vec<Option<usize>>>) -> Result<Self> {
        let n = d.len();
        for (i, row) in d.iter().enumerate() {
            if row.len() != n {
                return Err(Error::shape(format!("delay row {i}"), n, row.len()));
            }
            if row[i] != Some(0) {
                return Err(Error::Malformed(format!("self-delay must be 0 (node {i})")));
            }
        }
        Ok(Self { d })
    }

    /// Every node sees everything immediately.
    pub fn zero(nodes: usize) -> Self {
        Self {
            d: vec![vec![Some(0); nodes]; nodes],
        }
    }

    /// Node `i` hears from node `j` after `hops(i, j)·delay` steps, where
    /// `hops` is the distance along the chain `0 - 1 - … - N−1`.
    pub fn chain(nodes: usize, delay: usize) -> Self {
        Self {
            d: (0..nodes)
                .map(|i| (0..nodes).map(|j| Some(i.abs_diff(j) * delay)).collect())
                .collect(),
        }
    }

    pub fn nodes(&self) -> usize {
        self.d.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<usize> {
        self.d[i][j]
    }

    pub fn rows(&self) -> &[Vec<Option<usize>>] {
        &self.d
    }

    /// True if node `i` knows time-`t` data of node `j` at time `k`.
    pub fn knows(&self, i: usize, j: usize, t: usize, k: usize) -> bool {
        self.d[i][j].is_some_and(|d| t + d <= k)
    }

    /// `d(i, l) ≤ d(i, j) + d(j, l)` for all triples.
    pub fn is_triangle_closed(&self) -> bool {
        let n = self.nodes();
        (0..n).all(|i| {
            (0..n).all(|j| {
                (0..n).all(|l| match (self.d[i][j], self.d[j][l]) {
                    (Some(a), Some(b)) => self.d[i][l].is_some_and(|c| c <= a + b),
                    _ => true,
                })
            })
        })
    }
}

/// At time `time`, node `node` holds `y_measurement(measured_at)`, which
/// depends on `u_input(measured_at − lag − 1)`, yet that input is not in
/// its information set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Violation {
    pub node: usize,
    pub input: usize,
    pub time: usize,
    pub lag: usize,
    pub measurement: usize,
    pub measured_at: usize,
}

impl Violation {
    /// Time index of the unknown input.
    pub fn input_time(&self) -> usize {
        self.measured_at - self.lag - 1
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "node {} at time {}: y_{}({}) depends on u_{}({}) (lag {}), which the node does not know",
            self.node,
            self.time,
            self.measurement,
            self.measured_at,
            self.input,
            self.input_time(),
            self.lag
        )
    }
}
