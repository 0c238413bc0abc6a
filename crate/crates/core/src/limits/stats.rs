//! Goodness-of-fit tests and distances between empirical laws.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use super::LimitError;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Upper tail of the chi-square law with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if df == 0 {
        return if x > 0.0 { 0.0 } else { 1.0 };
    }
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0)
}

/// Pearson goodness of fit of `observed` counts against cell
/// probabilities `probs`. Cells with expected count below 5 are pooled into
/// one cell, which also absorbs any mass of `probs` short of 1.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquare, LimitError> {
    if observed.len() != probs.len() {
        return Err(LimitError::InvalidParameter(format!(
            "{} observed cells but {} probabilities",
            observed.len(),
            probs.len()
        )));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(LimitError::InsufficientSamples("no observations".into()));
    }
    let n = total as f64;
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * n;
        if e < 5.0 {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    pooled_exp += (1.0 - probs.iter().sum::<f64>()).max(0.0) * n;
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    } else if pooled_obs > 0.0 {
        stat = f64::INFINITY;
    }
    let df = cells.saturating_sub(1);
    Ok(ChiSquare {
        statistic: stat,
        df,
        p_value: chi_square_sf(stat, df),
    })
}

/// Chi-square test of homogeneity between two samples of a discrete law.
/// Categories with combined count below 10 are pooled.
pub fn chi_square_two_sample<T: Eq + Hash + Clone>(a: &[T], b: &[T]) -> ChiSquare {
    let mut table: HashMap<T, (u64, u64)> = HashMap::new();
    for x in a {
        table.entry(x.clone()).or_default().0 += 1;
    }
    for x in b {
        table.entry(x.clone()).or_default().1 += 1;
    }
    let mut cells: Vec<(u64, u64)> = Vec::new();
    let mut pooled = (0u64, 0u64);
    for &(x, y) in table.values() {
        if x + y < 10 {
            pooled.0 += x;
            pooled.1 += y;
        } else {
            cells.push((x, y));
        }
    }
    if pooled.0 + pooled.1 > 0 {
        cells.push(pooled);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let stat = cells
        .iter()
        .map(|&(x, y)| {
            let tot = (x + y) as f64;
            let (ea, eb) = (tot * na / n, tot * nb / n);
            (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb
        })
        .sum();
    let df = cells.len().saturating_sub(1);
    ChiSquare {
        statistic: stat,
        df,
        p_value: chi_square_sf(stat, df),
    }
}

/// Two-sample Kolmogorov-Smirnov distance `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Total variation distance between the empirical laws of two samples.
pub fn empirical_tv<T: Eq + Hash + Clone>(a: &[T], b: &[T]) -> f64 {
    let mut table: HashMap<T, (f64, f64)> = HashMap::new();
    let (wa, wb) = (1.0 / a.len() as f64, 1.0 / b.len() as f64);
    for x in a {
        table.entry(x.clone()).or_default().0 += wa;
    }
    for x in b {
        table.entry(x.clone()).or_default().1 += wb;
    }
    0.5 * table.values().map(|(x, y)| (x - y).abs()).sum::<f64>()
}
