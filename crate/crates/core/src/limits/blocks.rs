//! Plug-in estimators built from i.i.d. Mallows blocks: the LLN constants
//! `e_{π,q}`, the covariance matrices `Γ^(d)`, the variance `γ_r^2` for
//! increasing patterns, and the time covariance `H_π(s, t)`.
//!
//! Block features are streamed into `√N` batch accumulators. Point
//! estimates use the pooled moments; standard errors are the spread of the
//! per-batch estimates.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::moments::CovAccumulator;
use super::LimitError;
use crate::pattern::{occ3_counts, occ_f64, SIZE3_PATTERNS};
use crate::perm::{all_permutations, Permutation};
use crate::process::{sample_q_block, QBlock};
use crate::rng::RngStream;
use crate::samplers::{block_from_counts, sample_block_counts};

/// Pooled means and covariances of a feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentView {
    pub count: u64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl MomentView {
    pub fn from_accumulator(acc: &CovAccumulator) -> Self {
        MomentView {
            count: acc.count(),
            mean: acc.means(),
            cov: acc.cov_matrix(),
        }
    }
}

/// Batch count used for `n` samples.
pub fn batch_count(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).clamp(1, n.max(1))
}

/// Per-batch accumulators of a feature vector.
#[derive(Clone, Debug)]
pub struct FeatureBatches {
    pub batches: Vec<CovAccumulator>,
}

impl FeatureBatches {
    /// Collects `n` feature vectors split over `√n` batches, batch `b`
    /// drawing from stream `b` of `seed`. Deterministic for any worker
    /// count.
    pub fn collect<F>(n: usize, dim: usize, seed: u64, sample: F) -> Result<Self, LimitError>
    where
        F: Fn(&mut RngStream, &mut Vec<f64>) -> Result<(), LimitError> + Sync,
    {
        if n < 2 {
            return Err(LimitError::InsufficientSamples(format!("{n} samples")));
        }
        let nb = batch_count(n);
        let batches: Vec<(u64, usize)> = (0..nb)
            .map(|b| (b as u64, n / nb + usize::from(b < n % nb)))
            .collect();
        let out: Vec<Result<CovAccumulator, LimitError>> = {
            use rayon::prelude::*;
            batches
                .par_iter()
                .map(|&(b, size)| {
                    let mut rng = RngStream::new(seed, b);
                    let mut acc = CovAccumulator::new(dim);
                    let mut buf = Vec::with_capacity(dim);
                    for _ in 0..size {
                        buf.clear();
                        sample(&mut rng, &mut buf)?;
                        acc.push(&buf);
                    }
                    Ok(acc)
                })
                .collect()
        };
        Ok(FeatureBatches {
            batches: out.into_iter().collect::<Result<_, _>>()?,
        })
    }

    pub fn count(&self) -> u64 {
        self.batches.iter().map(CovAccumulator::count).sum()
    }

    pub fn pooled(&self) -> CovAccumulator {
        let mut acc = self.batches[0].clone();
        for b in &self.batches[1..] {
            acc.merge(b);
        }
        acc
    }

    pub fn pooled_view(&self) -> MomentView {
        MomentView::from_accumulator(&self.pooled())
    }

    /// Applies `f` to the pooled moments and to every batch; returns the
    /// pooled values and the batch standard errors.
    pub fn batched<F>(&self, f: F) -> (Vec<f64>, Vec<f64>)
    where
        F: Fn(&MomentView) -> Vec<f64>,
    {
        let full = f(&self.pooled_view());
        let per: Vec<Vec<f64>> = self
            .batches
            .iter()
            .filter(|b| b.count() >= 2)
            .map(|b| f(&MomentView::from_accumulator(b)))
            .collect();
        let nb = per.len() as f64;
        let se = (0..full.len())
            .map(|k| {
                if nb < 2.0 {
                    return f64::NAN;
                }
                let m = per.iter().map(|v| v[k]).sum::<f64>() / nb;
                let var = per.iter().map(|v| (v[k] - m).powi(2)).sum::<f64>() / (nb - 1.0);
                (var / nb).sqrt()
            })
            .collect();
        (full, se)
    }
}

/// Indecomposable permutations of size `m`, lexicographically.
pub fn indecomposables(m: usize) -> Vec<Permutation> {
    all_permutations(m)
        .into_iter()
        .filter(Permutation::is_indecomposable)
        .collect()
}

/// All patterns of size `r` with exactly `d` blocks, ordered by their block
/// size composition and then lexicographically.
pub fn patterns_with_blocks(d: usize, r: usize) -> Vec<Permutation> {
    fn rec(d: usize, r: usize, prefix: &mut Vec<Permutation>, out: &mut Vec<Permutation>) {
        if d == 0 {
            if r == 0 {
                out.push(Permutation::direct_sum(prefix));
            }
            return;
        }
        for m in 1..=r + 1 - d {
            for b in indecomposables(m) {
                prefix.push(b);
                rec(d - 1, r - m, prefix, out);
                prefix.pop();
            }
        }
    }
    if d == 0 || r < d {
        return vec![];
    }
    let mut out = Vec::new();
    rec(d, r, &mut vec![], &mut out);
    out
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum FeatureKind {
    Inversions,
    Size3(usize),
    General,
}

/// Evaluates block features: index 0 is `|B|`, index `1 + k` is
/// `occ(patterns[k], B)`.
#[derive(Clone, Debug)]
pub struct BlockFeatureSpec {
    pub patterns: Vec<Permutation>,
    kinds: Vec<FeatureKind>,
}

impl BlockFeatureSpec {
    /// Features for the distinct blocks of `patterns`, identity of size 1
    /// excluded (it is `|B|`).
    pub fn for_patterns(patterns: &[Permutation]) -> Self {
        let mut blocks: Vec<Permutation> = patterns
            .iter()
            .flat_map(|p| p.block_decomposition().blocks)
            .filter(|b| b.len() > 1)
            .collect();
        blocks.sort();
        blocks.dedup();
        let kinds = blocks
            .iter()
            .map(|b| match b.len() {
                2 => FeatureKind::Inversions,
                3 => FeatureKind::Size3(
                    SIZE3_PATTERNS
                        .iter()
                        .position(|s| *s == b.label())
                        .expect("every size-3 pattern is listed"),
                ),
                _ => FeatureKind::General,
            })
            .collect();
        BlockFeatureSpec {
            patterns: blocks,
            kinds,
        }
    }

    pub fn dim(&self) -> usize {
        1 + self.patterns.len()
    }

    pub fn index(&self, rho: &Permutation) -> Option<usize> {
        if rho.len() == 1 {
            return Some(0);
        }
        self.patterns.iter().position(|p| p == rho).map(|k| k + 1)
    }

    /// Pushes the features of the block with right-inversion counts `counts`.
    pub fn eval_counts(&self, counts: &[usize], out: &mut Vec<f64>) {
        out.push(counts.len() as f64);
        if self.kinds.iter().all(|k| *k == FeatureKind::Inversions) {
            let inv: usize = counts.iter().sum();
            out.extend(self.kinds.iter().map(|_| inv as f64));
            return;
        }
        let b = block_from_counts(counts);
        let need3 = b.len() >= 3 && self.kinds.iter().any(|k| matches!(k, FeatureKind::Size3(_)));
        let occ3 = if need3 { occ3_counts(&b) } else { [0; 6] };
        for (p, kind) in self.patterns.iter().zip(&self.kinds) {
            out.push(match kind {
                FeatureKind::Inversions => counts.iter().sum::<usize>() as f64,
                FeatureKind::Size3(k) => occ3[*k] as f64,
                FeatureKind::General => occ_f64(p, &b),
            });
        }
    }
}

/// Features of i.i.d. MallowsBlock(q) samples.
#[derive(Clone, Debug)]
pub struct BlockFeatures {
    pub q: f64,
    pub spec: BlockFeatureSpec,
    pub data: FeatureBatches,
}

impl BlockFeatures {
    pub fn collect(
        q: f64,
        patterns: &[Permutation],
        n_blocks: usize,
        seed: u64,
    ) -> Result<Self, LimitError> {
        crate::samplers::check_q_open(q)?;
        let spec = BlockFeatureSpec::for_patterns(patterns);
        let data = FeatureBatches::collect(n_blocks, spec.dim(), seed, |rng, buf| {
            let counts = sample_block_counts(q, rng)?;
            spec.eval_counts(&counts, buf);
            Ok(())
        })?;
        Ok(BlockFeatures { q, spec, data })
    }

    fn indices(&self, pi: &Permutation) -> Result<Vec<usize>, LimitError> {
        pi.block_decomposition()
            .blocks
            .iter()
            .map(|b| {
                self.spec.index(b).ok_or_else(|| {
                    LimitError::InvalidParameter(format!("block {} was not collected", b.label()))
                })
            })
            .collect()
    }
}

/// `Π_j mean(occ(π_j, B)) / mean(|B|)^d`.
fn e_from_view(view: &MomentView, idx: &[usize]) -> f64 {
    idx.iter().map(|&k| view.mean[k] / view.mean[0]).product()
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub se: f64,
}

/// `ê_π` with a delta-method standard error.
pub fn e_from_features(feat: &BlockFeatures, pi: &Permutation) -> Result<Estimate, LimitError> {
    let idx = feat.indices(pi)?;
    let view = feat.data.pooled_view();
    if !view.mean.iter().all(|&m| m > 0.0) {
        return Err(LimitError::InsufficientSamples(
            "a block moment estimate is not positive".into(),
        ));
    }
    let e = e_from_view(&view, &idx);
    // Gradient of log ê with respect to the feature means.
    let mut grad = vec![0.0; view.mean.len()];
    for &k in &idx {
        grad[k] += 1.0 / view.mean[k];
        grad[0] -= 1.0 / view.mean[0];
    }
    let mut var = 0.0;
    for (a, ga) in grad.iter().enumerate() {
        for (b, gb) in grad.iter().enumerate() {
            var += ga * gb * view.cov[a][b];
        }
    }
    let se = e * (var.max(0.0) / view.count as f64).sqrt();
    Ok(Estimate { estimate: e, se })
}

/// Plug-in estimate of `e_{π,q}` from `block_samples` blocks; the seed of
/// the batch streams is drawn from `rng`.
pub fn estimate_e(
    pi: &Permutation,
    q: f64,
    block_samples: usize,
    rng: &mut RngStream,
) -> Result<Estimate, LimitError> {
    let feat = BlockFeatures::collect(q, std::slice::from_ref(pi), block_samples, rng.next_u64())?;
    e_from_features(&feat, pi)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn binom(n: usize, k: usize) -> f64 {
    crate::pattern::binomial_f64(n, k)
}

/// `C(i+j-2, i-1) C(2d-i-j, d-i)` for 1-based `i, j`.
fn weight(d: usize, i: usize, j: usize) -> f64 {
    binom(i + j - 2, i - 1) * binom(2 * d - i - j, d - i)
}

/// The covariance formula shared by `Γ` and `H`, in terms of normalized
/// covariances: `cx[j][i] = Cov(X^π_j, X^ρ_i)`, `bx_pi[i] = Cov(|B|/μ, X^π_i)`
/// and `vb = Var(|B|/μ)`, where `X^π_j = occ(π_j, B)/E occ(π_j, B)`.
#[allow(clippy::too_many_arguments)]
fn covariance_formula(
    d: usize,
    mu: f64,
    e_pi: f64,
    e_rho: f64,
    cx: &dyn Fn(usize, usize) -> f64,
    bx_pi: &[f64],
    bx_rho: &[f64],
    vb: f64,
) -> f64 {
    let mut first = 0.0;
    for i in 1..=d {
        for j in 1..=d {
            first += weight(d, i, j) * cx(j - 1, i - 1);
        }
    }
    first /= factorial(2 * d - 1);
    let second: f64 =
        (0..d).map(|i| bx_rho[i] + bx_pi[i]).sum::<f64>() / (factorial(d - 1) * factorial(d));
    let third = vb / factorial(d - 1).powi(2);
    mu * e_pi * e_rho * (first - second + third)
}

fn gamma_from_view(view: &MomentView, idx: &[Vec<usize>], d: usize) -> Vec<f64> {
    let mu = view.mean[0];
    let m = &view.mean;
    let c = &view.cov;
    let vb = c[0][0] / (mu * mu);
    let e: Vec<f64> = idx.iter().map(|ix| e_from_view(view, ix)).collect();
    let bx: Vec<Vec<f64>> = idx
        .iter()
        .map(|ix| ix.iter().map(|&k| c[0][k] / (mu * m[k])).collect())
        .collect();
    let np = idx.len();
    let mut out = vec![0.0; np * np];
    for a in 0..np {
        for b in a..np {
            let (pa, pb) = (&idx[a], &idx[b]);
            let cx = |j: usize, i: usize| c[pa[j]][pb[i]] / (m[pa[j]] * m[pb[i]]);
            let v = covariance_formula(d, mu, e[a], e[b], &cx, &bx[a], &bx[b], vb);
            out[a * np + b] = v;
            out[b * np + a] = v;
        }
    }
    out
}

/// Plug-in `Γ^(d)` with batch standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaMatrixEstimate {
    pub patterns: Vec<String>,
    pub d: usize,
    pub matrix: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
    /// Batch standard errors of the descending singular values.
    pub singular_value_se: Vec<f64>,
    pub block_samples: u64,
}

/// Descending singular values of the symmetric part of a row-major
/// `np x np` matrix.
fn singular_values(flat: &[f64], np: usize) -> Vec<f64> {
    let m = DMatrix::from_fn(np, np, |i, j| 0.5 * (flat[i * np + j] + flat[j * np + i]));
    let mut sv: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|x| x.abs())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn gamma_matrix_from_features(
    feat: &BlockFeatures,
    d: usize,
    patterns: &[Permutation],
) -> Result<GammaMatrixEstimate, LimitError> {
    let idx: Vec<Vec<usize>> = patterns
        .iter()
        .map(|p| feat.indices(p))
        .collect::<Result<_, _>>()?;
    if let Some(p) = idx.iter().position(|ix| ix.len() != d) {
        return Err(LimitError::InvalidParameter(format!(
            "pattern {} does not have {d} blocks",
            patterns[p].label()
        )));
    }
    let view = feat.data.pooled_view();
    if !view.mean.iter().all(|&m| m > 0.0) {
        return Err(LimitError::InsufficientSamples(
            "a block moment estimate is not positive".into(),
        ));
    }
    let (flat, se) = feat.data.batched(|v| gamma_from_view(v, &idx, d));
    let np = patterns.len();
    let (_, singular_value_se) = feat
        .data
        .batched(|v| singular_values(&gamma_from_view(v, &idx, d), np));
    let unflatten = |x: Vec<f64>| x.chunks(np).map(<[f64]>::to_vec).collect::<Vec<_>>();
    Ok(GammaMatrixEstimate {
        patterns: patterns.iter().map(Permutation::label).collect(),
        d,
        matrix: unflatten(flat),
        se: unflatten(se),
        singular_value_se,
        block_samples: feat.data.count(),
    })
}

pub fn gamma_matrix(
    d: usize,
    q: f64,
    patterns: &[Permutation],
    block_samples: usize,
    rng: &mut RngStream,
) -> Result<GammaMatrixEstimate, LimitError> {
    let feat = BlockFeatures::collect(q, patterns, block_samples, rng.next_u64())?;
    gamma_matrix_from_features(&feat, d, patterns)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Batch standard errors aligned with `singular_values`.
    pub singular_value_se: Vec<f64>,
    pub rank: usize,
    /// Smallest retained over largest discarded singular value; infinite at
    /// full rank.
    pub gap_ratio: f64,
}

/// Relative threshold below which a singular value is rounding noise:
/// `dim · ε`, the usual floating-point numerical-rank tolerance.
pub fn rounding_rank_threshold(dim: usize) -> f64 {
    dim as f64 * f64::EPSILON
}

/// Numerical rank: singular values above `threshold` times the largest.
pub fn gamma_rank_report(est: &GammaMatrixEstimate, threshold: f64) -> RankReport {
    let n = est.matrix.len();
    let flat: Vec<f64> = est.matrix.iter().flatten().copied().collect();
    let sv = singular_values(&flat, n);
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > threshold * top).count();
    let gap_ratio = if rank == 0 || rank == n {
        f64::INFINITY
    } else {
        sv[rank - 1] / sv[rank]
    };
    RankReport {
        singular_values: sv,
        singular_value_se: est.singular_value_se.clone(),
        rank,
        gap_ratio,
    }
}

/// `γ_r^2 = μ^{-3} / (d-1)!^2 · Var(E[inv B] |B| - μ inv B)`, `d = r - 1`,
/// from features `[|B|, inv B]`.
pub fn gamma_id_from_view(view: &MomentView, r: usize) -> f64 {
    let d = r - 1;
    let (mu, mi) = (view.mean[0], view.mean[1]);
    let c = &view.cov;
    let var = mi * mi * c[0][0] - 2.0 * mi * mu * c[0][1] + mu * mu * c[1][1];
    var / mu.powi(3) / factorial(d - 1).powi(2)
}

/// Features `[|B|, inv B]` of i.i.d. blocks; enough for `γ_r^2` and
/// `e_{21,q}`.
pub fn inversion_features(q: f64, n_blocks: usize, seed: u64) -> Result<BlockFeatures, LimitError> {
    BlockFeatures::collect(q, &["21".parse().expect("static")], n_blocks, seed)
}

pub fn gamma_id_variance(
    r: usize,
    q: f64,
    block_samples: usize,
    rng: &mut RngStream,
) -> Result<Estimate, LimitError> {
    if r < 2 {
        return Err(LimitError::InvalidParameter("r must be >= 2".into()));
    }
    let feat = inversion_features(q, block_samples, rng.next_u64())?;
    Ok(gamma_id_from_features(&feat, r))
}

pub fn gamma_id_from_features(feat: &BlockFeatures, r: usize) -> Estimate {
    let (v, se) = feat.data.batched(|view| vec![gamma_id_from_view(view, r)]);
    Estimate {
        estimate: v[0],
        se: se[0],
    }
}

/// Features of q-blocks on a time grid: index 0 is `|B^q|`, then
/// `occ(π_j, B^q_{t_a})` at index `1 + a d + j`.
#[derive(Clone, Debug)]
pub struct QBlockFeatures {
    pub q: f64,
    pub grid: Vec<f64>,
    pub pattern_blocks: Vec<Permutation>,
    pub data: FeatureBatches,
}

fn qblock_occ(block: &QBlock, t: f64, rho: &Permutation) -> Result<f64, LimitError> {
    Ok(match rho.len() {
        1 => block.size() as f64,
        2 if rho.label() == "21" => block.inv_at(t)? as f64,
        _ => occ_f64(rho, &block.permutation_at(t)?),
    })
}

impl QBlockFeatures {
    pub fn collect(
        pi: &Permutation,
        grid: &[f64],
        q: f64,
        n_blocks: usize,
        seed: u64,
    ) -> Result<Self, LimitError> {
        if grid.iter().any(|&t| !(0.0..=q).contains(&t)) {
            return Err(LimitError::InvalidParameter(format!(
                "grid times must lie in [0, {q}]"
            )));
        }
        let pattern_blocks = pi.block_decomposition().blocks;
        let dim = 1 + grid.len() * pattern_blocks.len();
        let data = FeatureBatches::collect(n_blocks, dim, seed, |rng, buf| {
            let block = sample_q_block(q, rng)?;
            buf.push(block.size() as f64);
            for &t in grid {
                for rho in &pattern_blocks {
                    buf.push(qblock_occ(&block, t, rho)?);
                }
            }
            Ok(())
        })?;
        Ok(QBlockFeatures {
            q,
            grid: grid.to_vec(),
            pattern_blocks,
            data,
        })
    }

    fn h_from_view(&self, view: &MomentView) -> Vec<f64> {
        let d = self.pattern_blocks.len();
        let g = self.grid.len();
        let mu = view.mean[0];
        let m = &view.mean;
        let c = &view.cov;
        let at = |a: usize, j: usize| 1 + a * d + j;
        // X := 1 (no covariance) when the mean count vanishes.
        let norm_cov = |x: usize, y: usize| {
            if m[x] > 0.0 && m[y] > 0.0 {
                c[x][y] / (m[x] * m[y])
            } else {
                0.0
            }
        };
        let e: Vec<f64> = (0..g)
            .map(|a| (0..d).map(|j| m[at(a, j)] / mu).product())
            .collect();
        let bx: Vec<Vec<f64>> = (0..g)
            .map(|a| (0..d).map(|j| norm_cov(0, at(a, j)) * m[0] / mu).collect())
            .collect();
        let vb = c[0][0] / (mu * mu);
        let mut out = vec![0.0; g * g];
        for a in 0..g {
            for b in a..g {
                let cx = |j: usize, i: usize| norm_cov(at(b, j), at(a, i));
                let v = covariance_formula(d, mu, e[a], e[b], &cx, &bx[a], &bx[b], vb);
                out[a * g + b] = v;
                out[b * g + a] = v;
            }
        }
        out
    }

    pub fn h_matrix(&self) -> HEstimate {
        let g = self.grid.len();
        let (flat, se) = self.data.batched(|v| self.h_from_view(v));
        let view = self.data.pooled_view();
        let d = self.pattern_blocks.len();
        let e = (0..g)
            .map(|a| {
                (0..d)
                    .map(|j| view.mean[1 + a * d + j] / view.mean[0])
                    .product()
            })
            .collect();
        let unflatten = |x: Vec<f64>| x.chunks(g).map(<[f64]>::to_vec).collect::<Vec<_>>();
        HEstimate {
            grid: self.grid.clone(),
            q: self.q,
            matrix: unflatten(flat),
            se: unflatten(se),
            e,
            block_samples: self.data.count(),
        }
    }
}

/// `H_π` on a time grid, with batch standard errors and the matching
/// `e_{π,t}` estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HEstimate {
    pub grid: Vec<f64>,
    pub q: f64,
    pub matrix: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
    pub e: Vec<f64>,
    pub block_samples: u64,
}

impl HEstimate {
    /// Smallest eigenvalue of the symmetrized matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let g = self.grid.len();
        let m = DMatrix::from_fn(g, g, |i, j| 0.5 * (self.matrix[i][j] + self.matrix[j][i]));
        SymmetricEigen::new(m).eigenvalues.min()
    }
}

pub fn h_matrix(
    pi: &Permutation,
    grid: &[f64],
    q: f64,
    block_samples: usize,
    rng: &mut RngStream,
) -> Result<HEstimate, LimitError> {
    Ok(QBlockFeatures::collect(pi, grid, q, block_samples, rng.next_u64())?.h_matrix())
}

/// `H_π(s, t)` from q-blocks with `q >= max(s, t)`.
pub fn h_cov(
    pi: &Permutation,
    s: f64,
    t: f64,
    q: f64,
    block_samples: usize,
    rng: &mut RngStream,
) -> Result<Estimate, LimitError> {
    let h = h_matrix(pi, &[s, t], q, block_samples, rng)?;
    Ok(Estimate {
        estimate: h.matrix[0][1],
        se: h.se[0][1],
    })
}
