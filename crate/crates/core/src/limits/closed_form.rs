//! Exact mean and variance of the inversion count of a Mallows permutation.
//!
//! `inv = Σ_k l_k` with independent `l_k` truncated geometric on
//! `{0, ..., k-1}`, weights `q^m`. With `λ = -ln q` the per-term moments are
//!
//! ```text
//! E l_k   = 1/(e^λ - 1) - k/(e^{kλ} - 1)
//! Var l_k = e^λ/(e^λ - 1)^2 - k^2 e^{kλ}/(e^{kλ} - 1)^2
//! ```
//!
//! Both differences cancel badly as `q -> 1`, so for `kλ < 1` they are
//! evaluated through the Bernoulli series of `x/(e^x - 1)`:
//!
//! ```text
//! E l_k   = Σ_{m>=1} B_m λ^(m-1) (1 - k^m) / m!
//! Var l_k = Σ_{m>=2} B_m (m-1) λ^(m-2) (k^m - 1) / m!
//! ```

use super::moments::DoubleDouble;
use super::LimitError;

/// `B_m / m!` for `m = 0..=30`; odd entries beyond `m = 1` vanish.
const BERNOULLI_OVER_FACTORIAL: [f64; 31] = {
    const B: [(f64, f64); 31] = [
        (1.0, 1.0),
        (-1.0, 2.0),
        (1.0, 6.0),
        (0.0, 1.0),
        (-1.0, 30.0),
        (0.0, 1.0),
        (1.0, 42.0),
        (0.0, 1.0),
        (-1.0, 30.0),
        (0.0, 1.0),
        (5.0, 66.0),
        (0.0, 1.0),
        (-691.0, 2730.0),
        (0.0, 1.0),
        (7.0, 6.0),
        (0.0, 1.0),
        (-3617.0, 510.0),
        (0.0, 1.0),
        (43867.0, 798.0),
        (0.0, 1.0),
        (-174611.0, 330.0),
        (0.0, 1.0),
        (854513.0, 138.0),
        (0.0, 1.0),
        (-236364091.0, 2730.0),
        (0.0, 1.0),
        (8553103.0, 6.0),
        (0.0, 1.0),
        (-23749461029.0, 870.0),
        (0.0, 1.0),
        (8615841276005.0, 14322.0),
    ];
    let mut out = [0.0; 31];
    let mut fact = 1.0;
    let mut m = 0;
    while m < 31 {
        if m > 0 {
            fact *= m as f64;
        }
        out[m] = B[m].0 / B[m].1 / fact;
        m += 1;
    }
    out
};

fn check(n: usize, q: f64) -> Result<(), LimitError> {
    if n == 0 || !(q > 0.0 && q <= 1.0) {
        return Err(LimitError::InvalidParameter(format!(
            "need n >= 1 and q in (0, 1], got n = {n}, q = {q}"
        )));
    }
    Ok(())
}

fn mean_series(k: usize, lambda: f64) -> f64 {
    let kf = k as f64;
    let mut acc = 0.0;
    let (mut lp, mut kp) = (1.0, kf);
    for &c in &BERNOULLI_OVER_FACTORIAL[1..] {
        acc += c * lp * (1.0 - kp);
        lp *= lambda;
        kp *= kf;
    }
    acc
}

fn mean_direct(k: usize, lambda: f64) -> f64 {
    let kf = k as f64;
    1.0 / lambda.exp_m1() - kf / (kf * lambda).exp_m1()
}

fn term_mean(k: usize, lambda: f64) -> f64 {
    if (k as f64) * lambda < 1.0 {
        mean_series(k, lambda)
    } else {
        mean_direct(k, lambda)
    }
}

fn var_series(k: usize, lambda: f64) -> f64 {
    let kf = k as f64;
    let mut acc = 0.0;
    let (mut lp, mut kp) = (1.0, kf * kf);
    for (m, &c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate().skip(2) {
        acc += c * (m - 1) as f64 * lp * (kp - 1.0);
        lp *= lambda;
        kp *= kf;
    }
    acc
}

fn var_direct(k: usize, lambda: f64) -> f64 {
    let kf = k as f64;
    let g = |x: f64| 1.0 / (x.exp_m1() * -(-x).exp_m1());
    g(lambda) - kf * kf * g(kf * lambda)
}

fn term_var(k: usize, lambda: f64) -> f64 {
    if (k as f64) * lambda < 1.0 {
        var_series(k, lambda)
    } else {
        var_direct(k, lambda)
    }
}

fn summed(n: usize, q: f64, term: fn(usize, f64) -> f64) -> f64 {
    let lambda = -q.ln();
    (2..=n)
        .fold(DoubleDouble::ZERO, |acc, k| acc.add_f64(term(k, lambda)))
        .value()
}

/// `E[inv(τ_n)]` for `τ_n ~ Mallows(n, q)`.
pub fn inv_mean_exact(n: usize, q: f64) -> Result<f64, LimitError> {
    check(n, q)?;
    Ok(summed(n, q, term_mean))
}

/// `Var[inv(τ_n)]` for `τ_n ~ Mallows(n, q)`.
pub fn inv_var_exact(n: usize, q: f64) -> Result<f64, LimitError> {
    check(n, q)?;
    Ok(summed(n, q, term_var))
}

/// Leading-order approximations `(n^2/4 - (1-q) n^3/36, n^3/36)`, accurate
/// when `n^{3/2} (1 - q) -> 0`.
pub fn inv_asymptotics(n: usize, q: f64) -> (f64, f64) {
    let n = n as f64;
    (0.25 * n * n - (1.0 - q) * n.powi(3) / 36.0, n.powi(3) / 36.0)
}
