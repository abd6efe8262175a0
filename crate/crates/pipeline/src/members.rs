//! Cached per-member reductions. Each ensemble member is diagonalized once
//! and only the quantities the targets need are kept.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qkr_core::eigen::eigendecompose_unitary;
use qkr_core::eigvec::{ks_distance, log_histogram, EigenvectorSample, LogHistogram};
use qkr_core::model::{build_evolution_operator_factored, build_momentum_operator, ModelParams};
use qkr_core::perturbation::{member_sums, profile_from_sums, BandProfile, DiagonalSums};
use qkr_core::rmt::Chi2Density;
use qkr_core::spectral::{alpha_grid, QuasiEnergySpectrum};

use crate::cache::{CacheKey, CacheStore};
use crate::error::Result;

/// λ = 0 member: eigenphases plus the per-distance sums of `Im p′`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TriMember {
    pub phases: Vec<f64>,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    pub count: Vec<f64>,
    pub orthogonality_residual: f64,
}

impl TriMember {
    pub fn sums(&self) -> DiagonalSums {
        DiagonalSums {
            dim: self.sum.len(),
            sum: self.sum.clone(),
            sum_sq: self.sum_sq.clone(),
            count: self.count.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Phases {
    phases: Vec<f64>,
}

/// One-point eigenvector statistics of a matrix or a pooled group.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigvecSummary {
    pub sigma2: f64,
    pub ks_chi2_1: f64,
    pub ks_chi2_2: f64,
    pub samples: usize,
    pub bin_centers: Vec<f64>,
    pub density: Vec<f64>,
    pub bin_width: f64,
    pub dropped_zeros: usize,
    pub out_of_range: usize,
}

pub fn tri_member(cache: &CacheStore, params: &ModelParams) -> Result<TriMember> {
    let p0 = params.with_lambda(0.0)?;
    cache.get_or_compute(&CacheKey::for_params("tri", &p0, ""), || {
        let mom = build_momentum_operator(p0.n())?;
        let (sums, basis) = member_sums(&p0, &mom)?;
        Ok(TriMember {
            phases: basis.phases,
            sum: sums.sum,
            sum_sq: sums.sum_sq,
            count: sums.count,
            orthogonality_residual: basis.orthogonality_residual,
        })
    })
}

/// Eigenphases in `[0, 2π)`, ascending. At λ = 0 they come from the same
/// real-symmetric solve as the tri member.
pub fn phases(cache: &CacheStore, params: &ModelParams) -> Result<Vec<f64>> {
    if params.lambda() == 0.0 {
        return Ok(tri_member(cache, params)?.phases);
    }
    let p: Phases = cache.get_or_compute(&CacheKey::for_params("spectrum", params, ""), || {
        let u = build_evolution_operator_factored(params)?;
        Ok(Phases { phases: eigendecompose_unitary(&u)?.phases })
    })?;
    Ok(p.phases)
}

/// Member parameters on the α grid around `center`.
pub fn ensemble_params(center: &ModelParams, size: usize, halfwidth: f64) -> Result<Vec<ModelParams>> {
    alpha_grid(center.alpha(), halfwidth, size)?
        .into_iter()
        .map(|a| Ok(center.with_alpha(a)?))
        .collect()
}

/// Unfolded spectra of every member, in grid order.
pub fn ensemble_spectra(cache: &CacheStore, members: &[ModelParams]) -> Result<Vec<QuasiEnergySpectrum>> {
    members
        .par_iter()
        .map(|p| Ok(QuasiEnergySpectrum::from_phases(phases(cache, p)?, Some(*p))?))
        .collect()
}

pub fn ensemble_band_profile(cache: &CacheStore, members: &[ModelParams]) -> Result<BandProfile> {
    let sums = members
        .par_iter()
        .map(|p| Ok(tri_member(cache, p)?.sums()))
        .collect::<Result<Vec<_>>>()?;
    Ok(profile_from_sums(&DiagonalSums::pool(&sums)?, members.len())?)
}

fn squared_components(params: &ModelParams) -> Result<Vec<f64>> {
    let u = build_evolution_operator_factored(params)?;
    let evd = eigendecompose_unitary(&u)?;
    Ok(evd.vectors.col_iter().flat_map(|c| c.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()).collect())
}

/// Eigenvector statistics pooled over `members` (one member for the
/// single-matrix protocol).
pub fn eigvec_summary(cache: &CacheStore, members: &[ModelParams], bins: usize, range: [f64; 2]) -> Result<EigvecSummary> {
    let mut fields = format!("{bins}|{:016x}|{:016x}", range[0].to_bits(), range[1].to_bits());
    for p in members {
        fields.push_str(&format!("|{}|{:016x}|{:016x}|{:016x}", p.n(), p.alpha().to_bits(), p.lambda().to_bits(), p.theta0().to_bits()));
    }
    cache.get_or_compute(&CacheKey::new("eigvec", &fields), || {
        let mut raw = Vec::new();
        for p in members {
            raw.extend(squared_components(p)?);
        }
        let sample = EigenvectorSample::from_raw(raw, members.first().copied())?;
        let LogHistogram { bin_centers, density, bin_width, dropped_zeros, out_of_range } =
            log_histogram(&sample.y_values, bins, range[0], range[1])?;
        let chi1 = Chi2Density::new(1)?;
        let chi2 = Chi2Density::new(2)?;
        Ok(EigvecSummary {
            sigma2: sample.sigma2,
            ks_chi2_1: ks_distance(&sample.y_values, |x| chi1.cdf(x)),
            ks_chi2_2: ks_distance(&sample.y_values, |x| chi2.cdf(x)),
            samples: sample.len(),
            bin_centers,
            density,
            bin_width,
            dropped_zeros,
            out_of_range,
        })
    })
}
