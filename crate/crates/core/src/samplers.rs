//! Exact samplers: truncated geometrics, finite and infinite Mallows
//! permutations, Mallows blocks and block-sum representations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perm::{
    prefix_values_from_right_inversions, rank_reduce, BoundaryTracker, InversionCounts,
    Permutation, Side,
};
use crate::rng::RngStream;

/// Largest block the block streamer will build before giving up.
pub const BLOCK_CAP: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("value {j} outside the support 1..={k}")]
    DomainError { k: usize, j: usize },
    #[error("block exceeded {cap} elements; q = {q} is too close to 1 for block sampling")]
    BlockTooLarge { cap: usize, q: f64 },
}

fn check_q_closed(q: f64) -> Result<(), SamplerError> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(SamplerError::InvalidParameter(format!(
            "q must lie in (0, 1], got {q}"
        )))
    }
}

pub(crate) fn check_q_open(q: f64) -> Result<(), SamplerError> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(SamplerError::InvalidParameter(format!(
            "q must lie in (0, 1), got {q}"
        )))
    }
}

/// Size and parameter of a finite Mallows law, `0 < q <= 1`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MallowsParams {
    n: usize,
    q: f64,
}

impl MallowsParams {
    pub fn new(n: usize, q: f64) -> Result<Self, SamplerError> {
        if n == 0 {
            return Err(SamplerError::InvalidParameter("n must be >= 1".into()));
        }
        check_q_closed(q)?;
        Ok(MallowsParams { n, q })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// `P(J = j)` for `J ~ TGeom(k, 1 - q)`, i.e. mass proportional to
/// `q^(j-1)` on `1..=k`.
pub fn tgeom_pmf(k: usize, q: f64, j: usize) -> Result<f64, SamplerError> {
    check_q_closed(q)?;
    if j == 0 || j > k {
        return Err(SamplerError::DomainError { k, j });
    }
    if q == 1.0 {
        return Ok(1.0 / k as f64);
    }
    let lq = q.ln();
    Ok(((j - 1) as f64 * lq).exp() * (-lq.exp_m1()) / (-(k as f64 * lq).exp_m1()))
}

/// Draws `TGeom(k, 1 - q)` by inverting its CDF `(1 - q^j) / (1 - q^k)` in
/// log space.
pub fn tgeom_sample(k: usize, q: f64, rng: &mut RngStream) -> usize {
    debug_assert!(k >= 1 && q > 0.0 && q <= 1.0);
    if k == 1 {
        return 1;
    }
    if q == 1.0 {
        return rng.uniform_int(k);
    }
    let lq = q.ln();
    let u = rng.uniform_open01();
    let mass = -(k as f64 * lq).exp_m1();
    let j = ((-u * mass).ln_1p() / lq).ceil();
    (j.max(1.0) as usize).min(k)
}

/// Draws `Geom(1 - q)` on `{1, 2, ...}`, `P(G = j) = (1 - q) q^(j-1)`.
pub fn geom_sample(q: f64, rng: &mut RngStream) -> usize {
    debug_assert!(q > 0.0 && q < 1.0);
    let g = (rng.uniform_open01().ln() / q.ln()).ceil();
    if g < 1.0 {
        1
    } else {
        g as usize
    }
}

/// Exact Mallows probability `q^inv(p) / Z_{n,q}`.
pub fn mallows_pmf(p: &Permutation, q: f64) -> f64 {
    let n = p.len();
    if q == 1.0 {
        return (1..=n).map(|k| 1.0 / k as f64).product();
    }
    let log_z: f64 = (1..=n)
        .map(|k| ((-(k as f64 * q.ln()).exp_m1()) / (1.0 - q)).ln())
        .sum();
    (p.inv() as f64 * q.ln() - log_z).exp()
}

/// Mallows(n, q) sample together with the left draws `L_k = l_k + 1`, so
/// that `inv = sum(L_k) - n`.
pub fn sample_mallows_with_draws(
    params: &MallowsParams,
    rng: &mut RngStream,
) -> (Permutation, Vec<usize>) {
    let draws: Vec<usize> = (1..=params.n).map(|k| tgeom_sample(k, params.q, rng)).collect();
    let counts = InversionCounts {
        side: Side::Left,
        counts: draws.iter().map(|&l| l - 1).collect(),
    };
    let p = Permutation::from_left_inversions(&counts).expect("draws lie in range");
    (p, draws)
}

pub fn sample_mallows(params: &MallowsParams, side: Side, rng: &mut RngStream) -> Permutation {
    match side {
        Side::Left => sample_mallows_with_draws(params, rng).0,
        Side::Right => {
            let n = params.n;
            let counts = InversionCounts {
                side: Side::Right,
                counts: (1..=n)
                    .map(|i| tgeom_sample(n - i + 1, params.q, rng) - 1)
                    .collect(),
            };
            Permutation::from_right_inversions(&counts).expect("draws lie in range")
        }
    }
}

/// Uniform permutation via left insertion with `U_k ~ Uniform[k]`.
pub fn sample_uniform(n: usize, rng: &mut RngStream) -> Permutation {
    assert!(n >= 1);
    let counts = InversionCounts {
        side: Side::Left,
        counts: (1..=n).map(|k| rng.uniform_int(k) - 1).collect(),
    };
    Permutation::from_left_inversions(&counts).expect("draws lie in range")
}

/// `pat_[n]` of an infinite Mallows permutation; Mallows(n, q) in law.
pub fn sample_infinite_prefix(
    n: usize,
    q: f64,
    rng: &mut RngStream,
) -> Result<Permutation, SamplerError> {
    if n == 0 {
        return Err(SamplerError::InvalidParameter("n must be >= 1".into()));
    }
    check_q_open(q)?;
    let counts: Vec<usize> = (0..n).map(|_| geom_sample(q, rng) - 1).collect();
    Ok(rank_reduce(&prefix_values_from_right_inversions(&counts)))
}

/// Right-inversion counts of the first block of an infinite Mallows
/// permutation. The block has size `counts.len()`.
pub fn sample_block_counts(q: f64, rng: &mut RngStream) -> Result<Vec<usize>, SamplerError> {
    check_q_open(q)?;
    let mut tracker = BoundaryTracker::new();
    let mut counts = Vec::new();
    loop {
        let r = geom_sample(q, rng) - 1;
        counts.push(r);
        if tracker.push(r) {
            return Ok(counts);
        }
        if counts.len() >= BLOCK_CAP {
            return Err(SamplerError::BlockTooLarge { cap: BLOCK_CAP, q });
        }
    }
}

/// The block whose right-inversion counts are `counts`; the counts must
/// close exactly one block at their last position.
pub fn block_from_counts(counts: &[usize]) -> Permutation {
    let c = InversionCounts {
        side: Side::Right,
        counts: counts.to_vec(),
    };
    Permutation::from_right_inversions(&c).expect("block counts satisfy the range bound")
}

/// First block of an infinite Mallows permutation, MallowsBlock(q) in law.
pub fn sample_block(q: f64, rng: &mut RngStream) -> Result<Permutation, SamplerError> {
    Ok(block_from_counts(&sample_block_counts(q, rng)?))
}

/// An infinite Mallows prefix split into its complete blocks and a trailing
/// partial block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSumSample {
    pub blocks: Vec<Permutation>,
    /// Pattern of the positions after the last complete block, if any.
    pub remainder: Option<Permutation>,
    /// Number of complete blocks within the first `n` positions.
    pub k_n: usize,
}

impl BlockSumSample {
    pub fn size(&self) -> usize {
        self.blocks.iter().map(Permutation::len).sum::<usize>()
            + self.remainder.as_ref().map_or(0, Permutation::len)
    }

    pub fn reassemble(&self) -> Permutation {
        let mut parts = self.blocks.clone();
        parts.extend(self.remainder.iter().cloned());
        Permutation::direct_sum(&parts)
    }
}

/// Splits right-inversion counts of an infinite permutation's prefix into
/// complete blocks and a remainder.
pub fn block_sum_from_counts(counts: &[usize]) -> BlockSumSample {
    let mut tracker = BoundaryTracker::new();
    let mut blocks = Vec::new();
    let mut start = 0;
    for (i, &r) in counts.iter().enumerate() {
        if tracker.push(r) {
            blocks.push(block_from_counts(&counts[start..=i]));
            start = i + 1;
            tracker.reset();
        }
    }
    let remainder = (start < counts.len())
        .then(|| rank_reduce(&prefix_values_from_right_inversions(&counts[start..])));
    BlockSumSample {
        k_n: blocks.len(),
        blocks,
        remainder,
    }
}

pub fn sample_block_sum(
    n: usize,
    q: f64,
    rng: &mut RngStream,
) -> Result<BlockSumSample, SamplerError> {
    if n == 0 {
        return Err(SamplerError::InvalidParameter("n must be >= 1".into()));
    }
    check_q_open(q)?;
    let counts: Vec<usize> = (0..n).map(|_| geom_sample(q, rng) - 1).collect();
    Ok(block_sum_from_counts(&counts))
}

/// `K_n` alone: the number of complete blocks among the first `n`
/// positions, without building any permutation.
pub fn count_complete_blocks(n: usize, q: f64, rng: &mut RngStream) -> Result<usize, SamplerError> {
    check_q_open(q)?;
    let mut tracker = BoundaryTracker::new();
    Ok((0..n).filter(|_| tracker.push(geom_sample(q, rng) - 1)).count())
}
