//! Quasi-energy spectra, α-grid ensembles and number variance.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::eigen::{eigendecompose_unitary, UnitaryEigen};
use crate::error::{QkrError, Result};
use crate::model::{build_evolution_operator_factored, ModelParams, UnitaryMatrix};
use crate::stats::jackknife_stderr;

/// Default half-width of the α grid.
pub const ALPHA_HALFWIDTH: f64 = 5.0;
/// Window starts per level for the number variance.
pub const WINDOWS_PER_LEVEL: usize = 10;

/// Sorted eigenphases in `[0, 2π)` and their unfolding `θ·N/2π` in `[0, N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiEnergySpectrum {
    phases: Vec<f64>,
    unfolded: Vec<f64>,
    source: Option<ModelParams>,
}

impl QuasiEnergySpectrum {
    pub fn from_phases(mut phases: Vec<f64>, source: Option<ModelParams>) -> Result<Self> {
        if phases.is_empty() {
            return Err(QkrError::InsufficientData("empty spectrum".into()));
        }
        if phases.iter().any(|p| !(0.0..TAU).contains(p)) {
            return Err(QkrError::InvalidParameter("eigenphases must lie in [0, 2π)".into()));
        }
        phases.sort_by(f64::total_cmp);
        let scale = phases.len() as f64 / TAU;
        let unfolded = phases.iter().map(|p| p * scale).collect();
        Ok(Self { phases, unfolded, source })
    }

    /// Builds a spectrum directly from unfolded levels in `[0, n)`.
    pub fn from_unfolded(mut unfolded: Vec<f64>) -> Result<Self> {
        let n = unfolded.len() as f64;
        if unfolded.is_empty() {
            return Err(QkrError::InsufficientData("empty spectrum".into()));
        }
        if unfolded.iter().any(|u| !(0.0..n).contains(u)) {
            return Err(QkrError::InvalidParameter(format!("unfolded levels must lie in [0, {n})")));
        }
        unfolded.sort_by(f64::total_cmp);
        let phases = unfolded.iter().map(|u| u * TAU / n).collect();
        Ok(Self { phases, unfolded, source: None })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn unfolded(&self) -> &[f64] {
        &self.unfolded
    }

    pub fn source(&self) -> Option<&ModelParams> {
        self.source.as_ref()
    }
}

/// Diagonalizes the evolution operator for `params`.
pub fn diagonalize(params: &ModelParams) -> Result<(UnitaryMatrix, UnitaryEigen)> {
    let u = build_evolution_operator_factored(params)?;
    let evd = eigendecompose_unitary(&u)?;
    Ok((u, evd))
}

pub fn spectrum(params: &ModelParams) -> Result<QuasiEnergySpectrum> {
    let (_, evd) = diagonalize(params)?;
    QuasiEnergySpectrum::from_phases(evd.phases, Some(*params))
}

/// `α - h + 2hj/(size-1)` for `j = 0..size`; a single member sits at `α`.
pub fn alpha_grid(alpha: f64, halfwidth: f64, size: usize) -> Result<Vec<f64>> {
    if size == 0 {
        return Err(QkrError::InvalidParameter("ensemble size must be >= 1".into()));
    }
    if !(halfwidth >= 0.0) || !alpha.is_finite() {
        return Err(QkrError::InvalidParameter(format!("invalid alpha grid ({alpha}, ±{halfwidth})")));
    }
    if alpha < halfwidth {
        return Err(QkrError::InvalidParameter(format!(
            "alpha {alpha} is below the grid half-width {halfwidth}; member kick strengths would go negative"
        )));
    }
    if size == 1 {
        return Ok(vec![alpha]);
    }
    Ok((0..size)
        .map(|j| alpha - halfwidth + 2.0 * halfwidth * j as f64 / (size - 1) as f64)
        .collect())
}

/// Member spectra on a deterministic α grid around `center.alpha()`.
#[derive(Clone, Debug)]
pub struct SpectrumEnsemble {
    pub members: Vec<QuasiEnergySpectrum>,
    pub center: ModelParams,
    pub alpha_values: Vec<f64>,
    pub seed: u64,
}

impl SpectrumEnsemble {
    pub fn alpha_center(&self) -> f64 {
        self.center.alpha()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn generate_ensemble(params: &ModelParams, size: usize, seed: u64) -> Result<SpectrumEnsemble> {
    generate_ensemble_with_halfwidth(params, size, ALPHA_HALFWIDTH, seed)
}

/// Members are diagonalized in parallel and collected in grid order. The grid
/// is deterministic, so `seed` is recorded only as provenance.
pub fn generate_ensemble_with_halfwidth(
    params: &ModelParams,
    size: usize,
    halfwidth: f64,
    seed: u64,
) -> Result<SpectrumEnsemble> {
    let alpha_values = alpha_grid(params.alpha(), halfwidth, size)?;
    let members = alpha_values
        .par_iter()
        .map(|&a| spectrum(&params.with_alpha(a)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumEnsemble { members, center: *params, alpha_values, seed })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumberVarianceCurve {
    pub r_values: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Windows per member.
    pub window_count: usize,
    pub members: usize,
}

/// Per-member window count moments for one interval size.
fn window_moments(levels: &[f64], r: f64) -> (f64, f64, f64) {
    let n = levels.len();
    let period = n as f64;
    let windows = WINDOWS_PER_LEVEL * n;
    // levels on two turns of the circle so windows may wrap
    let ext: Vec<f64> = levels.iter().copied().chain(levels.iter().map(|u| u + period)).collect();
    let (mut lo, mut hi) = (0usize, 0usize);
    let (mut s1, mut s2) = (0.0, 0.0);
    for w in 0..windows {
        let start = w as f64 * period / windows as f64;
        let end = start + r;
        while lo < ext.len() && ext[lo] < start {
            lo += 1;
        }
        if hi < lo {
            hi = lo;
        }
        while hi < ext.len() && ext[hi] < end {
            hi += 1;
        }
        let c = (hi - lo) as f64;
        s1 += c;
        s2 += c * c;
    }
    (s1, s2, windows as f64)
}

/// Number variance of unfolded spectra (each of length `n`, levels in `[0, n)`).
///
/// Window starts sit on a uniform grid of `10n` points per member, intervals
/// `[x, x + r)` wrap around the circle, and counts are pooled over windows
/// and members. Errors come from a leave-one-member-out jackknife.
pub fn number_variance_unfolded(spectra: &[&[f64]], r_values: &[f64]) -> Result<NumberVarianceCurve> {
    if spectra.is_empty() {
        return Err(QkrError::InsufficientData("empty ensemble".into()));
    }
    let min_len = spectra.iter().map(|s| s.len()).min().unwrap_or(0);
    if min_len == 0 {
        return Err(QkrError::InsufficientData("empty spectrum in ensemble".into()));
    }
    for &r in r_values {
        if !(r > 0.0) {
            return Err(QkrError::InvalidParameter(format!("interval size must be > 0, got {r}")));
        }
        if r > min_len as f64 / 4.0 {
            return Err(QkrError::InvalidParameter(format!(
                "interval size {r} exceeds a quarter of the circle ({min_len} levels)"
            )));
        }
    }
    let mut sigma2 = Vec::with_capacity(r_values.len());
    let mut stderr = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let moments: Vec<(f64, f64, f64)> = spectra.par_iter().map(|s| window_moments(s, r)).collect();
        let total = moments.iter().fold((0.0, 0.0, 0.0), |a, m| (a.0 + m.0, a.1 + m.1, a.2 + m.2));
        let var = |s1: f64, s2: f64, w: f64| {
            let mean = s1 / w;
            (s2 / w - mean * mean).max(0.0)
        };
        sigma2.push(var(total.0, total.1, total.2));
        let loo: Vec<f64> =
            moments.iter().map(|m| var(total.0 - m.0, total.1 - m.1, total.2 - m.2)).collect();
        stderr.push(jackknife_stderr(&loo));
    }
    Ok(NumberVarianceCurve {
        r_values: r_values.to_vec(),
        sigma2,
        stderr,
        window_count: WINDOWS_PER_LEVEL * spectra[0].len(),
        members: spectra.len(),
    })
}

pub fn number_variance(ensemble: &SpectrumEnsemble, r_values: &[f64]) -> Result<NumberVarianceCurve> {
    let spectra: Vec<&[f64]> = ensemble.members.iter().map(|m| m.unfolded()).collect();
    number_variance_unfolded(&spectra, r_values)
}

/// One histogram bin of a pair-statistic estimate.
#[derive(Clone, Copy, Debug)]
pub struct BinEstimate {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    pub stderr: f64,
}

/// Bin-averaged two-level cluster function `Y₂ = 1 - R₂` from unfolded
/// spectra, where `R₂` is the density of levels at forward distance `s` from
/// a level. Errors are member-level jackknife estimates.
pub fn two_level_cluster(spectra: &[&[f64]], edges: &[f64]) -> Result<Vec<BinEstimate>> {
    if spectra.len() < 2 || edges.len() < 2 {
        return Err(QkrError::InsufficientData("need at least two spectra and one bin".into()));
    }
    if edges.windows(2).any(|w| !(w[1] > w[0])) || edges[0] < 0.0 {
        return Err(QkrError::InvalidParameter("bin edges must be increasing and non-negative".into()));
    }
    let s_max = *edges.last().unwrap();
    let bins = edges.len() - 1;
    let per_member: Vec<(Vec<f64>, f64)> = spectra
        .par_iter()
        .map(|levels| {
            let n = levels.len();
            let period = n as f64;
            let mut counts = vec![0.0; bins];
            for i in 0..n {
                for step in 1..n {
                    let j = (i + step) % n;
                    let mut d = levels[j] - levels[i];
                    if j <= i {
                        d += period;
                    }
                    if d >= s_max {
                        break;
                    }
                    if d >= edges[0] {
                        let k = edges.partition_point(|&e| e <= d) - 1;
                        counts[k] += 1.0;
                    }
                }
            }
            (counts, n as f64)
        })
        .collect();
    let total_levels: f64 = per_member.iter().map(|m| m.1).sum();
    let mut out = Vec::with_capacity(bins);
    for k in 0..bins {
        let width = edges[k + 1] - edges[k];
        let total: f64 = per_member.iter().map(|m| m.0[k]).sum();
        let est = |c: f64, levels: f64| 1.0 - c / (levels * width);
        let loo: Vec<f64> = per_member.iter().map(|m| est(total - m.0[k], total_levels - m.1)).collect();
        out.push(BinEstimate {
            lo: edges[k],
            hi: edges[k + 1],
            value: est(total, total_levels),
            stderr: jackknife_stderr(&loo),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_unfolding() {
        let s = QuasiEnergySpectrum::from_phases(vec![3.0, 0.5, 6.0], None).unwrap();
        assert_eq!(s.phases(), &[0.5, 3.0, 6.0]);
        assert!((s.unfolded()[2] - 6.0 * 3.0 / TAU).abs() < 1e-15);
        assert!(QuasiEnergySpectrum::from_phases(vec![TAU], None).is_err());
    }

    #[test]
    fn grid() {
        assert_eq!(alpha_grid(20.0, 5.0, 1).unwrap(), vec![20.0]);
        let g = alpha_grid(20.0, 5.0, 11).unwrap();
        assert_eq!(g[0], 15.0);
        assert_eq!(g[10], 25.0);
        assert!((g[3] - 18.0).abs() < 1e-14);
        assert!(alpha_grid(4.0, 5.0, 3).is_err());
        assert!(alpha_grid(20.0, 5.0, 0).is_err());
    }

    #[test]
    fn lattice_counts() {
        let levels: Vec<f64> = (0..200).map(|k| k as f64).collect();
        let curve = number_variance_unfolded(&[&levels, &levels], &[0.5, 1.0, 3.0]).unwrap();
        assert!((curve.sigma2[0] - 0.25).abs() < 1e-12);
        assert!(curve.sigma2[1].abs() < 1e-12);
        assert!(curve.sigma2[2].abs() < 1e-12);
        assert_eq!(curve.window_count, 2000);
    }

    #[test]
    fn rejects_bad_windows() {
        let levels: Vec<f64> = (0..20).map(|k| k as f64).collect();
        assert!(number_variance_unfolded(&[&levels], &[6.0]).is_err());
        assert!(number_variance_unfolded(&[&levels], &[0.0]).is_err());
        assert!(number_variance_unfolded(&[], &[1.0]).is_err());
    }

    #[test]
    fn single_member_has_no_error_bar() {
        let levels: Vec<f64> = (0..40).map(|k| k as f64 + 0.1 * ((k * 7 % 5) as f64)).collect();
        let curve = number_variance_unfolded(&[&levels], &[1.0]).unwrap();
        assert!(curve.stderr[0].is_nan());
    }

    #[test]
    fn small_model_ensemble() {
        let p = ModelParams::with_default_theta0(51, 30.0, 0.0).unwrap();
        let e = generate_ensemble(&p, 3, 9).unwrap();
        assert_eq!(e.alpha_values, vec![25.0, 30.0, 35.0]);
        assert!(e.members.iter().all(|m| m.len() == 51));
        assert_eq!(e.members[1].source().unwrap().alpha(), 30.0);
    }
}
