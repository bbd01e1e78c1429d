use rand_chacha::ChaCha8Rng;

use super::GaussianStream;
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Samples per work unit. Fixed so that chunk boundaries, and therefore the
/// floating-point reduction order, do not depend on the thread count.
pub const CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√samples`.
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl McEstimate {
    /// `|mean − value| ≤ k·std_error`, allowing exact agreement when the
    /// estimate has no spread.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error + 1e-12 * (1.0 + value.abs())
    }
}

/// Running `(count, mean, M2)` with Chan's pairwise merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    pub count: usize,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn merge(a: Moments, b: Moments) -> Moments {
        if a.count == 0 {
            return b;
        }
        if b.count == 0 {
            return a;
        }
        let count = a.count + b.count;
        let d = b.mean - a.mean;
        let wb = b.count as f64 / count as f64;
        Moments {
            count,
            mean: a.mean + d * wb,
            m2: a.m2 + b.m2 + d * d * a.count as f64 * wb,
        }
    }
}

/// Reduces in a balanced binary tree over the input order.
pub(crate) fn pairwise<T>(mut items: Vec<T>, merge: impl Fn(T, T) -> T) -> Option<T> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => merge(a, b),
                None => a,
            });
        }
        items = next;
    }
    items.pop()
}

/// Ranges `[start, end)` of the sample chunks.
pub(crate) fn chunk_ranges(samples: usize) -> Vec<(usize, usize)> {
    (0..samples.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(samples)))
        .collect()
}

/// Per-sample stream: sample `i` draws from ChaCha8 stream `i` of `seed`.
pub(crate) fn sample_stream(base: &ChaCha8Rng, index: usize) -> GaussianStream {
    GaussianStream::from_base(base, index as u64)
}

/// Estimates `E f` where `f` consumes the Gaussian stream of one sample.
pub(crate) fn estimate<F>(samples: usize, seed: u64, exec: Execution, f: F) -> Result<McEstimate>
where
    F: Fn(&mut GaussianStream) -> Result<f64> + Sync + Send,
{
    if samples < 2 {
        return Err(Error::Malformed(format!("at least 2 samples are needed, got {samples}")));
    }
    let base = GaussianStream::base(seed);
    let ranges = chunk_ranges(samples);
    let parts = exec.map_indexed(ranges.len(), |c| -> Result<Moments> {
        let (start, end) = ranges[c];
        let mut m = Moments::default();
        for i in start..end {
            m.push(f(&mut sample_stream(&base, i))?);
        }
        Ok(m)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let total = pairwise(parts, Moments::merge).expect("nonempty");
    let var = total.m2 / (total.count - 1) as f64;
    Ok(McEstimate {
        mean: total.mean,
        std_error: (var.max(0.0) / total.count as f64).sqrt(),
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_direct_moments() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut direct = Moments::default();
        xs.iter().for_each(|x| direct.push(*x));
        let parts: Vec<Moments> = xs
            .chunks(77)
            .map(|c| {
                let mut m = Moments::default();
                c.iter().for_each(|x| m.push(*x));
                m
            })
            .collect();
        let merged = pairwise(parts, Moments::merge).unwrap();
        assert_eq!(merged.count, direct.count);
        assert!((merged.mean - direct.mean).abs() < 1e-12);
        assert!((merged.m2 - direct.m2).abs() < 1e-9 * direct.m2);
    }

    #[test]
    fn estimate_is_identical_across_execution_modes() {
        let f = |g: &mut GaussianStream| Ok(g.next_gaussian().powi(2));
        let a = estimate(50_000, 3, Execution::Parallel, f).unwrap();
        let b = estimate(50_000, 3, Execution::Sequential, f).unwrap();
        assert_eq!(a, b);
        assert!(a.agrees_with(1.0, 4.0));
    }
}
