//! Classical pattern counting: exhaustive search, fast counters for size-3
//! and monotone patterns, and the blockwise ordered sum over a direct-sum
//! decomposition.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::fenwick::Fenwick;
use crate::perm::{Permutation, Side};

/// Default cap on partial-tuple expansions in [`occ_bruteforce`].
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

/// Order used by [`occ3_counts`]: 123, 132, 213, 231, 312, 321.
pub const SIZE3_PATTERNS: [&str; 6] = ["123", "132", "213", "231", "312", "321"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("search exceeded its budget of {budget} expansions")]
    BudgetExceeded { budget: u64 },
    #[error("pattern of size {r} is longer than the permutation of size {n}")]
    PatternTooLong { r: usize, n: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

/// A pattern together with its number of occurrences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternCount {
    pub pattern: Permutation,
    pub count: BigUint,
}

impl Serialize for PatternCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("PatternCount", 2)?;
        st.serialize_field("pattern", &self.pattern.label())?;
        st.serialize_field("count", &self.count.to_string())?;
        st.end()
    }
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(n, k)` as a float, for centering and scaling.
pub fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn inv(p: &Permutation) -> u64 {
    p.inv()
}

/// Exact count by depth-first search over increasing index tuples, pruning
/// any partial tuple whose induced pattern already disagrees with `pi`.
pub fn occ_bruteforce(
    pi: &Permutation,
    p: &Permutation,
    budget: u64,
) -> Result<BigUint, PatternError> {
    let (r, n) = (pi.len(), p.len());
    if r > n {
        return Ok(BigUint::zero());
    }
    let pat = pi.values();
    let vals = p.values();
    let mut chosen: Vec<usize> = Vec::with_capacity(r);
    let mut expansions = 0u64;
    let mut count = 0u128;

    fn fits(pat: &[usize], chosen: &[usize], v: usize) -> bool {
        let d = chosen.len();
        chosen
            .iter()
            .zip(pat)
            .all(|(&c, &pc)| (c < v) == (pc < pat[d]))
    }

    // Explicit stack of (depth, next candidate position).
    let mut next = vec![0usize; r + 1];
    let mut depth = 0usize;
    next[0] = 0;
    loop {
        if depth == r {
            count += 1;
            depth -= 1;
            chosen.pop();
            continue;
        }
        let last_start = n - (r - depth);
        let mut advanced = false;
        while next[depth] <= last_start {
            let i = next[depth];
            next[depth] += 1;
            expansions += 1;
            if expansions > budget {
                return Err(PatternError::BudgetExceeded { budget });
            }
            if fits(pat, &chosen, vals[i]) {
                chosen.push(vals[i]);
                next[depth + 1] = i + 1;
                depth += 1;
                advanced = true;
                break;
            }
        }
        if !advanced {
            if depth == 0 {
                break;
            }
            depth -= 1;
            chosen.pop();
        }
    }
    Ok(BigUint::from(count))
}

/// Occurrence counts of the six size-3 patterns in the order of
/// [`SIZE3_PATTERNS`], in `O(n log n)`.
///
/// For each middle position `j` let `sb`, `lb` count smaller and larger
/// values before `j`, and `sa`, `la` those after. Then
/// `123 = Σ sb·la`, `321 = Σ lb·sa`, `132 + 123 = Σ C(la, 2)`,
/// `312 + 321 = Σ C(sa, 2)`, `231 + 132 = Σ sb·sa`, `213 + 312 = Σ lb·la`.
pub fn occ3_counts(p: &Permutation) -> [u128; 6] {
    let n = p.len();
    let mut fw = Fenwick::<u32>::new(n);
    let (mut c123, mut c321) = (0u128, 0u128);
    let (mut la2, mut sa2, mut sbsa, mut lbla) = (0u128, 0u128, 0u128, 0u128);
    for (j, &v) in p.values().iter().enumerate() {
        let sb = fw.prefix(v) as u128;
        let lb = j as u128 - sb;
        let sa = (v - 1) as u128 - sb;
        let la = (n - v) as u128 - lb;
        fw.add(v, &1);
        c123 += sb * la;
        c321 += lb * sa;
        la2 += la * la.saturating_sub(1) / 2;
        sa2 += sa * sa.saturating_sub(1) / 2;
        sbsa += sb * sa;
        lbla += lb * la;
    }
    let c132 = la2 - c123;
    let c312 = sa2 - c321;
    let c231 = sbsa - c132;
    let c213 = lbla - c312;
    [c123, c132, c213, c231, c312, c321]
}

pub fn occ3_all(p: &Permutation) -> Result<Vec<PatternCount>, PatternError> {
    if p.len() < 3 {
        return Err(PatternError::PatternTooLong { r: 3, n: p.len() });
    }
    Ok(occ3_counts(p)
        .iter()
        .zip(SIZE3_PATTERNS)
        .map(|(&c, s)| PatternCount {
            pattern: s.parse().expect("static pattern"),
            count: BigUint::from(c),
        })
        .collect())
}

fn increasing_dp<T>(r: usize, vals: &[usize]) -> T
where
    T: Clone + Zero + One + for<'a> std::ops::AddAssign<&'a T>,
{
    let n = vals.len();
    let mut layer: Vec<T> = vec![T::one(); n];
    for _ in 1..r {
        let mut fw = Fenwick::<T>::new(n);
        let mut nextl = Vec::with_capacity(n);
        for (i, &v) in vals.iter().enumerate() {
            nextl.push(fw.prefix(v - 1));
            fw.add(v, &layer[i]);
        }
        layer = nextl;
    }
    let mut total = T::zero();
    for x in &layer {
        total += x;
    }
    total
}

/// Number of increasing subsequences of length `r`, by an `r`-layer
/// dynamic program over prefix sums. Uses 128-bit arithmetic when
/// `C(n, r)` fits and big integers otherwise.
pub fn occ_increasing(r: usize, p: &Permutation) -> Result<BigUint, PatternError> {
    let n = p.len();
    if r == 0 || r > n {
        return Err(PatternError::PatternTooLong { r, n });
    }
    if binomial(n, r) <= BigUint::from(u128::MAX) {
        Ok(BigUint::from(increasing_dp::<u128>(r, p.values())))
    } else {
        Ok(increasing_dp::<BigUint>(r, p.values()))
    }
}

fn is_decreasing(pi: &Permutation) -> bool {
    pi.values().windows(2).all(|w| w[0] > w[1])
}

/// Occurrences of `pi` in `p`, dispatching to the fastest exact counter.
pub fn occ(pi: &Permutation, p: &Permutation) -> Result<BigUint, PatternError> {
    let (r, n) = (pi.len(), p.len());
    if r > n {
        return Ok(BigUint::zero());
    }
    if pi.is_identity() {
        return occ_increasing(r, p);
    }
    if is_decreasing(pi) && r != 3 {
        return occ_increasing(r, &p.reverse());
    }
    if r == 2 {
        return Ok(BigUint::from(p.inv()));
    }
    if r == 3 {
        let idx = SIZE3_PATTERNS
            .iter()
            .position(|s| *s == pi.label())
            .expect("every size-3 pattern is listed");
        return Ok(BigUint::from(occ3_counts(p)[idx]));
    }
    occ_bruteforce(pi, p, DEFAULT_BUDGET)
}

/// Occurrence count as a float; for statistics on small blocks.
pub fn occ_f64(pi: &Permutation, p: &Permutation) -> f64 {
    occ(pi, p)
        .expect("small inputs stay within budget")
        .to_f64()
        .unwrap_or(f64::INFINITY)
}

/// Ordered sum over block tuples `k_1 < ... < k_d` of
/// `Π_j occ(pi_blocks[j], blocks[k_j])`.
pub fn occ_blockwise(
    pi_blocks: &[Permutation],
    blocks: &[Permutation],
) -> Result<BigUint, PatternError> {
    let d = pi_blocks.len();
    let per_block: Vec<Vec<BigUint>> = blocks
        .iter()
        .map(|b| pi_blocks.iter().map(|pj| occ(pj, b)).collect())
        .collect::<Result<_, _>>()?;
    Ok(occ_blockwise_from_counts(d, &per_block))
}

/// Same as [`occ_blockwise`] from precomputed `counts[k][j] = occ(pi_j, B_k)`.
pub fn occ_blockwise_from_counts(d: usize, counts: &[Vec<BigUint>]) -> BigUint {
    let mut s = vec![BigUint::zero(); d + 1];
    s[0] = BigUint::one();
    for c in counts {
        for j in (1..=d).rev() {
            if !c[j - 1].is_zero() && !s[j - 1].is_zero() {
                let add = &s[j - 1] * &c[j - 1];
                s[j] += add;
            }
        }
    }
    s.swap_remove(d)
}

/// Certified bound `2 (inv(p') - inv(p)) n^(r-1)` on `|occ(pi, p) - occ(pi, p')|`,
/// valid when the right-inversion counts of `p` are dominated by those of `p'`.
pub fn occ_swap_delta_bound(
    pi: &Permutation,
    p: &Permutation,
    p_prime: &Permutation,
) -> Result<BigUint, PatternError> {
    let n = p.len();
    if p_prime.len() != n {
        return Err(PatternError::PreconditionViolated(
            "permutations differ in size".into(),
        ));
    }
    let a = p.inversion_counts(Side::Right).counts;
    let b = p_prime.inversion_counts(Side::Right).counts;
    if let Some(i) = (0..n).find(|&i| a[i] > b[i]) {
        return Err(PatternError::PreconditionViolated(format!(
            "right inversion count at position {} is {} > {}",
            i + 1,
            a[i],
            b[i]
        )));
    }
    let diff = p_prime.inv() - p.inv();
    Ok(BigUint::from(2 * diff) * BigUint::from(n).pow(pi.len() as u32 - 1))
}
