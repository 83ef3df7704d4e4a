//! Pearson correlation, least-squares line fits and a permutation test.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const DEFAULT_SHUFFLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

struct Moments {
    mean_x: f64,
    mean_y: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

fn moments(xs: &[f64], ys: &[f64]) -> Result<Moments> {
    if xs.len() != ys.len() {
        return Err(Error::DegenerateInput("xs and ys differ in length"));
    }
    if xs.len() < 3 {
        return Err(Error::DegenerateInput("need at least 3 points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite value"));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("xs have zero variance"));
    }
    if syy == 0.0 {
        return Err(Error::DegenerateInput("ys have zero variance"));
    }
    Ok(Moments {
        mean_x,
        mean_y,
        sxx,
        syy,
        sxy,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let m = moments(xs, ys)?;
    Ok((m.sxy / (m.sxx.sqrt() * m.syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ordinary least squares `y ≈ slope·x + intercept`, with
/// `R² = 1 − SSR/SST`.
pub fn ols_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let m = moments(xs, ys)?;
    let slope = m.sxy / m.sxx;
    let intercept = m.mean_y - slope * m.mean_x;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        r_squared: 1.0 - ssr / m.syy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PermutationTest {
    pub r: f64,
    /// One-sided p-value for `r > 0`, `(1 + #{r_shuffled ≥ r}) / (1 + shuffles)`.
    pub p_value: f64,
    pub shuffles: usize,
}

/// Compares the observed correlation with correlations after randomly
/// permuting `ys`.
pub fn permutation_test(xs: &[f64], ys: &[f64], shuffles: usize, seed: u64) -> Result<PermutationTest> {
    let r = pearson(xs, ys)?;
    let mut rng = SplitMix64::new(seed);
    let mut at_least = 0usize;
    let mut shuffled = ys.to_vec();
    for _ in 0..shuffles {
        let perm = rng.permutation(ys.len());
        for (slot, &i) in shuffled.iter_mut().zip(&perm) {
            *slot = ys[i];
        }
        if pearson(xs, &shuffled)? >= r {
            at_least += 1;
        }
    }
    Ok(PermutationTest {
        r,
        p_value: (1 + at_least) as f64 / (1 + shuffles) as f64,
        shuffles,
    })
}
