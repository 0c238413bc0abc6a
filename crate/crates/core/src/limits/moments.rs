//! Double-double accumulators for streaming moments and covariances.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// An unevaluated sum `hi + lo` carrying about 106 bits of precision.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add_f64(self, x: f64) -> Self {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        DoubleDouble { hi, lo }
    }

    pub fn mul_f64(self, x: f64) -> Self {
        self * DoubleDouble::from_f64(x)
    }

    pub fn div_f64(self, d: f64) -> Self {
        let q1 = self.hi / d;
        let r = self - DoubleDouble::from_f64(q1).mul_f64(d);
        let q2 = r.hi / d;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo }
    }
}

impl Add for DoubleDouble {
    type Output = Self;

    #[inline]
    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;

    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;

    fn sub(self, o: Self) -> Self {
        self + -o
    }
}

impl Mul for DoubleDouble {
    type Output = Self;

    #[inline]
    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

/// Streaming count and power sums up to the fourth, in double-double.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    count: u64,
    sums: [DoubleDouble; 4],
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let x = DoubleDouble::from_f64(x);
        let mut p = x;
        for k in 0..4 {
            self.sums[k] = self.sums[k] + p;
            if k < 3 {
                p = p * x;
            }
        }
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, xs: I) {
        for x in xs {
            self.push(x);
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.count += other.count;
        for k in 0..4 {
            self.sums[k] = self.sums[k] + other.sums[k];
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    fn raw(&self, k: usize) -> DoubleDouble {
        self.sums[k - 1].div_f64(self.count as f64)
    }

    pub fn mean(&self) -> f64 {
        self.raw(1).value()
    }

    /// Central moment of order 2, 3 or 4 (population normalization).
    fn central(&self, order: usize) -> f64 {
        let m = self.raw(1);
        let (m2, m3, m4) = (self.raw(2), self.raw(3), self.raw(4));
        let mm = m * m;
        match order {
            2 => (m2 - mm).value(),
            3 => (m3 - (m * m2).mul_f64(3.0) + (mm * m).mul_f64(2.0)).value(),
            4 => (m4 - (m * m3).mul_f64(4.0) + (mm * m2).mul_f64(6.0) - (mm * mm).mul_f64(3.0))
                .value(),
            _ => unreachable!(),
        }
    }

    /// Unbiased sample variance; NaN below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        (self.central(2) * n / (n - 1.0)).max(0.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn skewness(&self) -> f64 {
        let c2 = self.central(2);
        self.central(3) / c2.powf(1.5)
    }

    pub fn excess_kurtosis(&self) -> f64 {
        let c2 = self.central(2);
        self.central(4) / (c2 * c2) - 3.0
    }

    /// Standard error of the sample variance, `sqrt((m4 - m2^2) / N)`.
    pub fn variance_std_error(&self) -> f64 {
        let c2 = self.central(2);
        ((self.central(4) - c2 * c2) / self.count as f64).max(0.0).sqrt()
    }
}

/// Streaming means and covariances of a fixed-dimension feature vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovAccumulator {
    dim: usize,
    count: u64,
    sums: Vec<DoubleDouble>,
    /// Upper triangle of cross-product sums, row-major.
    cross: Vec<DoubleDouble>,
}

impl CovAccumulator {
    pub fn new(dim: usize) -> Self {
        CovAccumulator {
            dim,
            count: 0,
            sums: vec![DoubleDouble::ZERO; dim],
            cross: vec![DoubleDouble::ZERO; dim * (dim + 1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.count += 1;
        let mut idx = 0;
        for i in 0..self.dim {
            self.sums[i] = self.sums[i].add_f64(x[i]);
            let xi = DoubleDouble::from_f64(x[i]);
            for &xj in &x[i..] {
                self.cross[idx] = self.cross[idx] + xi.mul_f64(xj);
                idx += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.dim, other.dim);
        self.count += other.count;
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a = *a + *b;
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            *a = *a + *b;
        }
    }

    fn cross_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i + 1) / 2 + j
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.sums[i].div_f64(self.count as f64).value()
    }

    pub fn means(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.mean(i)).collect()
    }

    /// Unbiased sample covariance.
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        let n = self.count as f64;
        let sij = self.cross[self.cross_index(i, j)];
        let centered = sij - (self.sums[i] * self.sums[j]).div_f64(n);
        centered.value() / (n - 1.0)
    }

    pub fn cov_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.cov(i, j)).collect())
            .collect()
    }
}
