//! One-point eigenvector statistics: unit-mean squared components, their
//! variance, log₁₀ histograms and Kolmogorov-Smirnov distances.

use faer::{c64, MatRef};
use rayon::prelude::*;

use crate::eigen::eigendecompose_unitary;
use crate::error::{QkrError, Result};
use crate::model::{build_evolution_operator_factored, ModelParams, UnitaryMatrix};
use crate::perturbation::transition_parameter;

/// Squared eigenvector components pooled over all eigenvectors of one matrix,
/// normalized to unit mean.
#[derive(Clone, Debug)]
pub struct EigenvectorSample {
    pub y_values: Vec<f64>,
    /// Population variance of `y_values`.
    pub sigma2: f64,
    pub source: Option<ModelParams>,
}

impl EigenvectorSample {
    pub fn from_vectors(vectors: MatRef<'_, c64>, source: Option<ModelParams>) -> Result<Self> {
        let raw: Vec<f64> = vectors.col_iter().flat_map(|c| c.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()).collect();
        Self::from_raw(raw, source)
    }

    /// Normalizes arbitrary non-negative values to unit mean.
    pub fn from_raw(mut y: Vec<f64>, source: Option<ModelParams>) -> Result<Self> {
        if y.is_empty() {
            return Err(QkrError::InsufficientData("empty eigenvector sample".into()));
        }
        if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(QkrError::NonFinite("squared eigenvector components"));
        }
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        if !(mean > 0.0) {
            return Err(QkrError::InsufficientData("all squared components vanish".into()));
        }
        y.iter_mut().for_each(|v| *v /= mean);
        let sigma2 = y.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>() / y.len() as f64;
        Ok(Self { y_values: y, sigma2, source })
    }

    pub fn len(&self) -> usize {
        self.y_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_values.is_empty()
    }
}

/// Diagonalizes `u` and pools its `N²` squared components (position basis).
pub fn squared_components(u: &UnitaryMatrix) -> Result<EigenvectorSample> {
    let evd = eigendecompose_unitary(u)?;
    EigenvectorSample::from_vectors(evd.vectors.as_ref(), u.source().copied())
}

pub const HISTOGRAM_RANGE: (f64, f64) = (-6.0, 1.0);
pub const HISTOGRAM_BINS: usize = 70;

/// Density of `log₁₀ y` over in-range values.
#[derive(Clone, Debug, PartialEq)]
pub struct LogHistogram {
    pub bin_centers: Vec<f64>,
    pub density: Vec<f64>,
    pub bin_width: f64,
    /// Exact zeros, which have no logarithm.
    pub dropped_zeros: usize,
    /// Values whose logarithm falls outside the range.
    pub out_of_range: usize,
}

pub fn log_histogram(y: &[f64], bins: usize, lo: f64, hi: f64) -> Result<LogHistogram> {
    if bins < 10 {
        return Err(QkrError::InvalidParameter(format!("need at least 10 bins, got {bins}")));
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(QkrError::InvalidParameter(format!("invalid histogram range [{lo}, {hi}]")));
    }
    if y.is_empty() {
        return Err(QkrError::InsufficientData("empty sample".into()));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let (mut zeros, mut outside) = (0, 0);
    for &v in y {
        if v == 0.0 {
            zeros += 1;
            continue;
        }
        let t = v.log10();
        if !(t >= lo && t < hi) {
            outside += 1;
            continue;
        }
        let k = (((t - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let inside: usize = counts.iter().sum();
    if inside == 0 {
        return Err(QkrError::InsufficientData("no values inside the histogram range".into()));
    }
    let norm = 1.0 / (inside as f64 * width);
    Ok(LogHistogram {
        bin_centers: (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect(),
        density: counts.iter().map(|&c| c as f64 * norm).collect(),
        bin_width: width,
        dropped_zeros: zeros,
        out_of_range: outside,
    })
}

/// `sup |F_n - F|` for the empirical distribution of `sample`.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut s = sample.to_vec();
    s.par_sort_unstable_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionPoint {
    pub alpha2_over_n: f64,
    pub lambda: f64,
    /// Transition parameter Λ.
    pub big_lambda: f64,
    pub value: f64,
}

/// A statistic against Λ with its orthogonal and unitary limits.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionCurve {
    pub points: Vec<TransitionPoint>,
    pub coe_limit: f64,
    pub cue_limit: f64,
}

/// σ² on the grid `alpha2_over_n × lambdas` at dimension `n`; `v2` supplies
/// the in-band variance for each α²/N (looked up exactly).
pub fn sigma2_transition_curve(
    n: usize,
    theta0: f64,
    alpha2_over_n: &[f64],
    lambdas: &[f64],
    v2: &[(f64, f64)],
) -> Result<TransitionCurve> {
    let mut grid = Vec::new();
    for &a in alpha2_over_n {
        let v = v2
            .iter()
            .find(|(k, _)| *k == a)
            .map(|(_, v)| *v)
            .ok_or_else(|| QkrError::InsufficientData(format!("no in-band variance for alpha^2/N = {a}")))?;
        for &l in lambdas {
            grid.push((a, l, v));
        }
    }
    let points = grid
        .par_iter()
        .map(|&(a, l, v)| {
            let params = ModelParams::from_alpha2_over_n(n, a, l, theta0)?;
            let u = build_evolution_operator_factored(&params)?;
            let sample = squared_components(&u)?;
            Ok(TransitionPoint {
                alpha2_over_n: a,
                lambda: l,
                big_lambda: transition_parameter(l, v, n)?.value,
                value: sample.sigma2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransitionCurve { points, coe_limit: 2.0, cue_limit: 1.0 })
}
