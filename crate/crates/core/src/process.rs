//! The continuous-time infinite Mallows process.
//!
//! Each right-inversion coordinate follows an independent pure-birth
//! process started at 1 at time 0 with rate `j / (1 - t)` in state `j`. At
//! time `t` the states minus one are the right-inversion counts of an
//! infinite Mallows permutation with parameter `t`.

use num_bigint::BigUint;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::pattern::{binomial_f64, occ, PatternError};
use crate::perm::{
    prefix_values_from_right_inversions, rank_reduce, BoundaryTracker, InversionCounts,
    Permutation, Side,
};
use crate::rng::RngStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcessError {
    #[error("time {t} outside [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("arguments outside the domain: {0}")]
    DomainError(String),
    #[error("prefix has {available} paths, {requested} requested")]
    NotEnoughPaths { available: usize, requested: usize },
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

fn check_horizon(horizon: f64) -> Result<(), ProcessError> {
    if horizon > 0.0 && horizon < 1.0 {
        Ok(())
    } else {
        Err(ProcessError::InvalidParameter(format!(
            "horizon must lie in (0, 1), got {horizon}"
        )))
    }
}

/// Next jump time from state `j` at time `s`: `1 - (1 - s) U^(1/j)`.
fn next_jump(s: f64, j: usize, rng: &mut RngStream) -> f64 {
    1.0 - (1.0 - s) * (rng.uniform_open01().ln() / j as f64).exp()
}

/// Jump times of one geometric birth path on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BirthPath {
    jump_times: Vec<f64>,
    horizon: f64,
}

impl BirthPath {
    pub fn sample(horizon: f64, rng: &mut RngStream) -> Result<Self, ProcessError> {
        check_horizon(horizon)?;
        let mut path = BirthPath {
            jump_times: Vec::new(),
            horizon: 0.0,
        };
        path.extend(horizon, rng)?;
        Ok(path)
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `1 +` number of jumps at or before `t` (right-continuous).
    pub fn state(&self, t: f64) -> Result<usize, ProcessError> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(ProcessError::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self.state_unchecked(t))
    }

    fn state_unchecked(&self, t: f64) -> usize {
        1 + self.jump_times.partition_point(|&x| x <= t)
    }

    pub fn final_state(&self) -> usize {
        1 + self.jump_times.len()
    }

    /// Continues the path from its current horizon to `new_horizon`.
    pub fn extend(&mut self, new_horizon: f64, rng: &mut RngStream) -> Result<(), ProcessError> {
        check_horizon(new_horizon)?;
        if new_horizon < self.horizon {
            return Err(ProcessError::InvalidParameter(format!(
                "cannot shrink horizon {} to {new_horizon}",
                self.horizon
            )));
        }
        let mut s = self.horizon;
        loop {
            let t = next_jump(s, self.final_state(), rng);
            if t >= new_horizon {
                break;
            }
            self.jump_times.push(t);
            s = t;
        }
        self.horizon = new_horizon;
        Ok(())
    }
}

/// Independent birth paths for the first `n` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessPrefix {
    paths: Vec<BirthPath>,
    horizon: f64,
}

impl ProcessPrefix {
    pub fn sample(n: usize, horizon: f64, rng: &mut RngStream) -> Result<Self, ProcessError> {
        check_horizon(horizon)?;
        let paths = (0..n)
            .map(|_| BirthPath::sample(horizon, rng))
            .collect::<Result<_, _>>()?;
        Ok(ProcessPrefix { paths, horizon })
    }

    pub fn from_paths(paths: Vec<BirthPath>) -> Result<Self, ProcessError> {
        let horizon = paths
            .iter()
            .map(BirthPath::horizon)
            .fold(f64::INFINITY, f64::min);
        if paths.is_empty() || !horizon.is_finite() {
            return Err(ProcessError::InvalidParameter("no paths".into()));
        }
        Ok(ProcessPrefix { paths, horizon })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn paths(&self) -> &[BirthPath] {
        &self.paths
    }

    fn check(&self, n: usize, t: f64) -> Result<(), ProcessError> {
        if n > self.paths.len() {
            return Err(ProcessError::NotEnoughPaths {
                available: self.paths.len(),
                requested: n,
            });
        }
        if !(0.0..=self.horizon).contains(&t) {
            return Err(ProcessError::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Right-inversion counts `state_i(t) - 1` of the first `n` coordinates.
    pub fn right_counts(&self, n: usize, t: f64) -> Result<Vec<usize>, ProcessError> {
        self.check(n, t)?;
        Ok(self.paths[..n]
            .iter()
            .map(|p| p.state_unchecked(t) - 1)
            .collect())
    }

    /// `tau_{n,t}`: the pattern of the first `n` values at time `t`,
    /// Mallows(n, t) in law.
    pub fn tau_nt(&self, n: usize, t: f64) -> Result<Permutation, ProcessError> {
        let counts = self.right_counts(n, t)?;
        Ok(rank_reduce(&prefix_values_from_right_inversions(&counts)))
    }
}

/// Paths of one block, cut at time `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct QBlock {
    pub paths: Vec<BirthPath>,
    pub q: f64,
}

impl QBlock {
    pub fn size(&self) -> usize {
        self.paths.len()
    }

    pub fn counts_at(&self, t: f64) -> Result<Vec<usize>, ProcessError> {
        if !(0.0..=self.q).contains(&t) {
            return Err(ProcessError::OutOfHorizon { t, horizon: self.q });
        }
        Ok(self.paths.iter().map(|p| p.state_unchecked(t) - 1).collect())
    }

    /// Inversions of the block permutation at time `t`.
    pub fn inv_at(&self, t: f64) -> Result<u64, ProcessError> {
        Ok(self.counts_at(t)?.iter().map(|&c| c as u64).sum())
    }

    /// The block permutation at time `t <= q`. Boundaries at time `q` stay
    /// boundaries at earlier times, so this is a permutation of the block.
    pub fn permutation_at(&self, t: f64) -> Result<Permutation, ProcessError> {
        let counts = self.counts_at(t)?;
        let c = InversionCounts {
            side: Side::Right,
            counts,
        };
        Ok(Permutation::from_right_inversions(&c).expect("counts bounded by the block end"))
    }
}

/// A prefix cut into complete q-blocks and a trailing partial block.
#[derive(Clone, Debug, PartialEq)]
pub struct QBlockBundle {
    pub blocks: Vec<QBlock>,
    /// Number of trailing paths that do not form a complete block.
    pub remainder: usize,
    pub q: f64,
}

impl QBlockBundle {
    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(QBlock::size).collect()
    }
}

/// Groups the paths of `prefix` into blocks using the boundary rule on the
/// states at time `q`.
pub fn cut_q_blocks(prefix: &ProcessPrefix, q: f64) -> Result<QBlockBundle, ProcessError> {
    if !(q > 0.0 && q <= prefix.horizon) {
        return Err(ProcessError::OutOfHorizon {
            t: q,
            horizon: prefix.horizon,
        });
    }
    let mut tracker = BoundaryTracker::new();
    let mut blocks = Vec::new();
    let mut start = 0;
    for (i, path) in prefix.paths.iter().enumerate() {
        if tracker.push(path.state_unchecked(q) - 1) {
            blocks.push(QBlock {
                paths: prefix.paths[start..=i].to_vec(),
                q,
            });
            start = i + 1;
        }
    }
    Ok(QBlockBundle {
        blocks,
        remainder: prefix.paths.len() - start,
        q,
    })
}

/// Samples one q-block directly: paths are generated until the boundary
/// rule at time `q` closes the first block.
pub fn sample_q_block(q: f64, rng: &mut RngStream) -> Result<QBlock, ProcessError> {
    check_horizon(q)?;
    let mut tracker = BoundaryTracker::new();
    let mut paths = Vec::new();
    loop {
        let path = BirthPath::sample(q, rng)?;
        let closes = tracker.push(path.final_state() - 1);
        paths.push(path);
        if closes {
            return Ok(QBlock { paths, q });
        }
        if paths.len() >= crate::samplers::BLOCK_CAP {
            return Err(ProcessError::InvalidParameter(format!(
                "q-block exceeded {} paths",
                crate::samplers::BLOCK_CAP
            )));
        }
    }
}

/// `P(R_t = j | R_s = k) = C(j-1, k-1) a^(j-k) b^k` with
/// `a = (t - s) / (1 - s)` and `b = (1 - t) / (1 - s)`.
pub fn transition_pmf(k: usize, s: f64, t: f64, j: usize) -> Result<f64, ProcessError> {
    if !(0.0 <= s && s <= t && t < 1.0) || k == 0 {
        return Err(ProcessError::DomainError(format!(
            "need 0 <= s <= t < 1 and k >= 1, got k = {k}, s = {s}, t = {t}"
        )));
    }
    if j < k {
        return Ok(0.0);
    }
    if t == s {
        return Ok(if j == k { 1.0 } else { 0.0 });
    }
    let a = (t - s) / (1.0 - s);
    let b = (1.0 - t) / (1.0 - s);
    let log_c = ln_gamma(j as f64) - ln_gamma(k as f64) - ln_gamma((j - k + 1) as f64);
    Ok((log_c + (j - k) as f64 * a.ln() + k as f64 * b.ln()).exp())
}

/// Mean and variance of `R_t - R_s` for a path started at 1 at time 0.
pub fn increment_moments(s: f64, t: f64) -> Result<(f64, f64), ProcessError> {
    if !(0.0 <= s && s <= t && t < 1.0) {
        return Err(ProcessError::DomainError(format!(
            "need 0 <= s <= t < 1, got s = {s}, t = {t}"
        )));
    }
    let mean = (t - s) / ((1.0 - s) * (1.0 - t));
    let var = (t - s) * (1.0 + s * t - 2.0 * s) / ((1.0 - s).powi(2) * (1.0 - t).powi(2));
    Ok((mean, var))
}

/// One row of a pattern-count time series.
#[derive(Clone, Debug, PartialEq)]
pub struct OccRow {
    pub t: f64,
    pub occ: BigUint,
    pub e_estimate: Option<f64>,
    /// `occ - C(n, d) e_estimate`, `d` the number of blocks of the pattern.
    pub centered: Option<f64>,
}

/// `occ(pi, tau_{n,t})` at each grid time, recomputed from scratch.
/// `e_estimates`, when given, is aligned with `grid`.
pub fn occ_process(
    pi: &Permutation,
    n: usize,
    grid: &[f64],
    prefix: &ProcessPrefix,
    e_estimates: Option<&[f64]>,
) -> Result<Vec<OccRow>, ProcessError> {
    if let Some(e) = e_estimates {
        if e.len() != grid.len() {
            return Err(ProcessError::InvalidParameter(
                "one e estimate per grid time is required".into(),
            ));
        }
    }
    let d = pi.block_decomposition().len();
    let scale = binomial_f64(n, d);
    grid.iter()
        .enumerate()
        .map(|(g, &t)| {
            let tau = prefix.tau_nt(n, t)?;
            let count = occ(pi, &tau)?;
            let e = e_estimates.map(|e| e[g]);
            let centered = e.map(|e| {
                use num_traits::ToPrimitive;
                count.to_f64().unwrap_or(f64::INFINITY) - scale * e
            });
            Ok(OccRow {
                t,
                occ: count,
                e_estimate: e,
                centered,
            })
        })
        .collect()
}
