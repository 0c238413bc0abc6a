//! Step-by-step coupling of a Mallows permutation with a uniform one.
//!
//! Both permutations grow by left insertion. At step `k -> k + 1` the new
//! draws are pushed through the shift maps of the current error set `H`;
//! the two pushforward laws are coupled maximally, so the new points have
//! the same relative rank among the positions outside `H` unless the
//! coupling fails, in which case `k + 1` joins `H`.

use thiserror::Error;

use crate::perm::Permutation;
use crate::rng::RngStream;
use crate::samplers::{tgeom_pmf, tgeom_sample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coupled pair disagrees off the error set: {0}")]
    PatternMismatch(String),
}

/// A Mallows permutation `tau`, a uniform permutation `u`, and the sorted
/// error positions off which they induce the same pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupledPair {
    pub tau: Permutation,
    pub u: Permutation,
    pub errors: Vec<usize>,
}

impl CoupledPair {
    pub fn error_count(&self) -> usize {
        self.errors.len()
    }

    /// Positions `[n] \ H` in increasing order.
    pub fn matched_positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.tau.len() - self.errors.len());
        let mut h = self.errors.iter().peekable();
        for i in 1..=self.tau.len() {
            if h.peek() == Some(&&i) {
                h.next();
            } else {
                out.push(i);
            }
        }
        out
    }

    /// Checks `pat_{[n] \ H}(tau) == pat_{[n] \ H}(u)` and `1 ∉ H`.
    pub fn verify(&self) -> Result<(), CouplingError> {
        if self.errors.first() == Some(&1) {
            return Err(CouplingError::PatternMismatch("position 1 in H".into()));
        }
        let keep = self.matched_positions();
        let a = self.tau.pattern_at(&keep);
        let b = self.u.pattern_at(&keep);
        if a != b {
            return Err(CouplingError::PatternMismatch(format!(
                "tau = {}, u = {}, H = {:?}",
                self.tau, self.u, self.errors
            )));
        }
        Ok(())
    }
}

/// Per-step record of a coupled sample.
#[derive(Clone, Debug, PartialEq)]
pub struct StepTrace {
    /// Size after the step.
    pub k: usize,
    /// Total-variation distance between the two pushforward laws.
    pub tv: f64,
    pub mismatch: bool,
    /// `|H|` after the step.
    pub h_size: usize,
}

/// `x + #{h in H : x < k - sigma(h) + 2}` with `k = |sigma|`.
pub fn phi_shift(sigma: &Permutation, h: &[usize], x: usize) -> usize {
    let k = sigma.len();
    debug_assert!(x >= 1 && x <= k + 1);
    x + h.iter().filter(|&&i| x + sigma.at(i) < k + 2).count()
}

/// `φ(x)` for all `x in 1..=k+1`, where `values` is the one-line form of a
/// permutation of size `k`.
fn phi_table(values: &[usize], h: &[usize]) -> Vec<usize> {
    let k = values.len();
    // above[x] = #{h : k - sigma(h) + 2 > x}; thresholds lie in 2..=k+1.
    let mut hist = vec![0usize; k + 3];
    for &i in h {
        hist[k + 2 - values[i - 1]] += 1;
    }
    let mut out = vec![0; k + 1];
    let mut above = h.len();
    for x in 1..=k + 1 {
        above -= hist[x];
        out[x - 1] = x + above;
    }
    out
}

pub fn total_variation(p1: &[f64], p2: &[f64]) -> f64 {
    debug_assert_eq!(p1.len(), p2.len());
    0.5 * p1.iter().zip(p2).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn inverse_cdf(weights: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if acc > target {
                return i;
            }
        }
    }
    last_positive
}

/// Maximal coupling of two pmfs on `1..=m`. Overlap mass is matched in
/// increasing order with one uniform; residuals are drawn independently by
/// inverse CDF. Returns 1-based support points.
pub fn maximal_coupling_sample(p1: &[f64], p2: &[f64], rng: &mut RngStream) -> (usize, usize) {
    assert_eq!(p1.len(), p2.len(), "pmfs must share a support");
    if p1 == p2 {
        let i = inverse_cdf(p1, p1.iter().sum(), rng.uniform_open01());
        return (i + 1, i + 1);
    }
    let overlap: Vec<f64> = p1.iter().zip(p2).map(|(a, b)| a.min(*b)).collect();
    let alpha: f64 = overlap.iter().sum();
    let v = rng.uniform_open01();
    if v < alpha {
        let i = inverse_cdf(&overlap, alpha, v / alpha);
        return (i + 1, i + 1);
    }
    let r1: Vec<f64> = p1.iter().zip(&overlap).map(|(a, o)| (a - o).max(0.0)).collect();
    let r2: Vec<f64> = p2.iter().zip(&overlap).map(|(b, o)| (b - o).max(0.0)).collect();
    let y1 = inverse_cdf(&r1, r1.iter().sum(), rng.uniform_open01());
    let y2 = inverse_cdf(&r2, r2.iter().sum(), rng.uniform_open01());
    (y1 + 1, y2 + 1)
}

/// Appends a new value `k + 2 - l` at position `k + 1`, shifting existing
/// values `>=` it up by one.
fn left_insert(values: &mut Vec<usize>, l: usize) {
    let v = values.len() + 2 - l;
    for x in values.iter_mut() {
        if *x >= v {
            *x += 1;
        }
    }
    values.push(v);
}

/// The preimage `{x : φ(x) = y}` as an inclusive interval.
fn fiber(phi: &[usize], y: usize) -> (usize, usize) {
    let lo = phi.partition_point(|&v| v < y);
    let hi = phi.partition_point(|&v| v <= y);
    debug_assert!(lo < hi, "y must be in the image");
    (lo + 1, hi)
}

pub fn sample_coupled(n: usize, q: f64, rng: &mut RngStream) -> Result<CoupledPair, CouplingError> {
    sample_coupled_impl(n, q, rng, None)
}

pub fn sample_coupled_traced(
    n: usize,
    q: f64,
    rng: &mut RngStream,
) -> Result<(CoupledPair, Vec<StepTrace>), CouplingError> {
    let mut trace = Vec::with_capacity(n);
    let pair = sample_coupled_impl(n, q, rng, Some(&mut trace))?;
    Ok((pair, trace))
}

fn sample_coupled_impl(
    n: usize,
    q: f64,
    rng: &mut RngStream,
    mut trace: Option<&mut Vec<StepTrace>>,
) -> Result<CoupledPair, CouplingError> {
    if n == 0 || !(q > 0.0 && q <= 1.0) {
        return Err(CouplingError::InvalidParameter(format!(
            "need n >= 1 and q in (0, 1], got n = {n}, q = {q}"
        )));
    }
    if n as f64 * (1.0 - q) > 1.0 {
        log::warn!("n(1 - q) = {} > 1: the error set is not expected to be small", n as f64 * (1.0 - q));
    }
    let mut tau = vec![1usize];
    let mut u = vec![1usize];
    let mut h: Vec<usize> = Vec::new();
    for k in 1..n {
        let m = k + 1;
        let phi_t = phi_table(&tau, &h);
        let phi_u = phi_table(&u, &h);
        let base = 1 + h.len();
        let width = m + 1 - base;
        let mut p1 = vec![0.0; width];
        let mut p2 = vec![0.0; width];
        for x in 1..=m {
            p1[phi_t[x - 1] - base] += tgeom_pmf(m, q, x).expect("x in support");
            p2[phi_u[x - 1] - base] += 1.0 / m as f64;
        }
        let (y1, y2) = maximal_coupling_sample(&p1, &p2, rng);
        let (y1, y2) = (y1 + base - 1, y2 + base - 1);

        let (a, b) = fiber(&phi_t, y1);
        let l = a - 1 + tgeom_sample(b - a + 1, q, rng);
        let (a, b) = fiber(&phi_u, y2);
        let w = a - 1 + rng.uniform_int(b - a + 1);

        let mismatch = y1 != y2;
        if mismatch {
            h.push(m);
        }
        left_insert(&mut tau, l);
        left_insert(&mut u, w);
        if let Some(t) = trace.as_deref_mut() {
            t.push(StepTrace {
                k: m,
                tv: total_variation(&p1, &p2),
                mismatch,
                h_size: h.len(),
            });
        }
    }
    Ok(CoupledPair {
        tau: Permutation::from_values_unchecked(tau),
        u: Permutation::from_values_unchecked(u),
        errors: h,
    })
}
