//! Momentum operator in the real eigenbasis of the time-reversal-invariant
//! operator: `Var(L)` band profile, bandwidth, collapse fit and transition
//! parameter.

use std::f64::consts::TAU;

use faer::{c64, Mat};
use rayon::prelude::*;

use crate::eigen::{eigendecompose_symmetric_unitary, SYMMETRY_THRESHOLD};
use crate::error::{QkrError, Result};
use crate::model::{build_evolution_operator_factored, build_momentum_operator, MomentumOperator, ModelParams, UnitaryMatrix};
use crate::spectral::alpha_grid;
use crate::stats::brent_minimize;

/// Relative tolerance on the real part and antisymmetry of `p′`.
pub const PERTURBATION_TOLERANCE: f64 = 1e-6;
/// Largest imaginary residue accepted after phase fixing.
pub const IMAGINARY_RESIDUAL_LIMIT: f64 = 1e-6;

/// Real orthogonal eigenvectors (columns, ordered by eigenphase).
#[derive(Clone, Debug)]
pub struct RealEigenbasis {
    pub vectors: Mat<f64>,
    pub phases: Vec<f64>,
    /// Largest `|Im|` discarded when the basis was made real.
    pub max_residual_imag: f64,
    /// `max |ΨᵀΨ - I|`.
    pub orthogonality_residual: f64,
}

fn orthogonality(v: &Mat<f64>) -> f64 {
    let g = v.transpose() * v;
    let mut worst = 0.0_f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let t = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - t).abs());
        }
    }
    worst
}

/// Flips each column so its largest-magnitude entry is positive.
fn fix_signs(v: &mut Mat<f64>) {
    for j in 0..v.ncols() {
        let mut k = 0;
        for i in 0..v.nrows() {
            if v[(i, j)].abs() > v[(k, j)].abs() {
                k = i;
            }
        }
        if v[(k, j)] < 0.0 {
            for i in 0..v.nrows() {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
}

impl RealEigenbasis {
    /// Phase-fixes complex eigenvectors: each column is rotated so its
    /// largest-magnitude component is real positive, then the imaginary
    /// remainder is measured and dropped.
    pub fn from_complex(vectors: &Mat<c64>, phases: Vec<f64>) -> Result<Self> {
        let (n, k) = (vectors.nrows(), vectors.ncols());
        let mut real = Mat::<f64>::zeros(n, k);
        let mut worst = 0.0_f64;
        for j in 0..k {
            let mut top = 0;
            for i in 0..n {
                if vectors[(i, j)].norm() > vectors[(top, j)].norm() {
                    top = i;
                }
            }
            let z = vectors[(top, j)];
            let rot = if z.norm() == 0.0 { c64::new(1.0, 0.0) } else { z.conj() / z.norm() };
            for i in 0..n {
                let w = vectors[(i, j)] * rot;
                real[(i, j)] = w.re;
                worst = worst.max(w.im.abs());
            }
        }
        if worst > IMAGINARY_RESIDUAL_LIMIT {
            return Err(QkrError::Tolerance {
                what: "imaginary residue after phase fixing",
                value: worst,
                limit: IMAGINARY_RESIDUAL_LIMIT,
            });
        }
        let orthogonality_residual = orthogonality(&real);
        Ok(Self { vectors: real, phases, max_residual_imag: worst, orthogonality_residual })
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }
}

/// Real eigenbasis of a symmetric unitary operator. Near-degenerate
/// eigenphases are resolved by joint diagonalization of the real and
/// imaginary parts inside the cluster.
pub fn realize_tri_eigenbasis(u0: &UnitaryMatrix) -> Result<RealEigenbasis> {
    if let Some(p) = u0.source() {
        if p.lambda() != 0.0 {
            return Err(QkrError::Precondition(format!(
                "real eigenbasis requires lambda = 0, operator was built with lambda = {}",
                p.lambda()
            )));
        }
    }
    let sym = u0.symmetry_residual();
    if sym > SYMMETRY_THRESHOLD {
        return Err(QkrError::Precondition(format!(
            "real eigenbasis requires a symmetric operator; symmetry residual {sym:e}"
        )));
    }
    let evd = eigendecompose_symmetric_unitary(u0)?;
    let mut vectors = evd.vectors;
    fix_signs(&mut vectors);
    let orthogonality_residual = orthogonality(&vectors);
    if orthogonality_residual > 1e-8 {
        return Err(QkrError::Tolerance { what: "eigenbasis orthogonality", value: orthogonality_residual, limit: 1e-8 });
    }
    Ok(RealEigenbasis { vectors, phases: evd.phases, max_residual_imag: 0.0, orthogonality_residual })
}

/// `p′ = Ψᵀ p Ψ`. Since `p = iP` with `P` real antisymmetric and `Ψ` real,
/// `p′ = i ΨᵀPΨ`; only the real antisymmetric factor is stored.
#[derive(Clone, Debug)]
pub struct TransformedPerturbation {
    /// `Im p′`.
    pub imag: Mat<f64>,
    /// `max |p′ + p′ᵀ| / max |p′|`.
    pub antisymmetry_residual: f64,
    /// `max |Re p′| / max |p′|`.
    pub real_residual: f64,
}

impl TransformedPerturbation {
    pub fn dim(&self) -> usize {
        self.imag.nrows()
    }

    pub fn to_complex(&self) -> Mat<c64> {
        Mat::from_fn(self.dim(), self.dim(), |i, j| c64::new(0.0, self.imag[(i, j)]))
    }
}

pub fn transform_perturbation(p: &MomentumOperator, basis: &RealEigenbasis) -> Result<TransformedPerturbation> {
    if p.dim() != basis.dim() {
        return Err(QkrError::InvalidParameter(format!(
            "dimension mismatch: perturbation {} vs basis {}",
            p.dim(),
            basis.dim()
        )));
    }
    let n = p.dim();
    let mut re_max = 0.0_f64;
    for j in 0..n {
        for i in 0..n {
            re_max = re_max.max(p.entries()[(i, j)].re.abs());
        }
    }
    let big_p = p.imag();
    let psi = &basis.vectors;
    let imag = psi.transpose() * (&big_p * psi);
    let mut scale = 0.0_f64;
    let mut anti = 0.0_f64;
    for j in 0..n {
        for i in 0..n {
            scale = scale.max(imag[(i, j)].abs());
            anti = anti.max((imag[(i, j)] + imag[(j, i)]).abs());
        }
    }
    let scale = scale.max(f64::MIN_POSITIVE);
    // Re p′ = Ψᵀ Re(p) Ψ is bounded by n·max|Re p| for orthonormal Ψ
    let real_residual = n as f64 * re_max / scale;
    let antisymmetry_residual = anti / scale;
    for (what, value) in [("antisymmetry of p'", antisymmetry_residual), ("real part of p'", real_residual)] {
        if value > PERTURBATION_TOLERANCE {
            return Err(QkrError::Tolerance { what, value, limit: PERTURBATION_TOLERANCE });
        }
    }
    Ok(TransformedPerturbation { imag, antisymmetry_residual, real_residual })
}

/// Per-distance sums of `Im p′_ij` over the upper triangle (`j - i = L`).
/// Index `L` runs over `0..dim`; entry 0 is unused.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalSums {
    pub dim: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    pub count: Vec<f64>,
}

impl DiagonalSums {
    pub fn from_matrix(m: &Mat<f64>) -> Self {
        let n = m.nrows();
        let mut sum = vec![0.0; n];
        let mut sum_sq = vec![0.0; n];
        let mut count = vec![0.0; n];
        for j in 1..n {
            for i in 0..j {
                let v = m[(i, j)];
                let l = j - i;
                sum[l] += v;
                sum_sq[l] += v * v;
                count[l] += 1.0;
            }
        }
        Self { dim: n, sum, sum_sq, count }
    }

    pub fn from_perturbation(p: &TransformedPerturbation) -> Self {
        Self::from_matrix(&p.imag)
    }

    fn absorb(&mut self, other: &DiagonalSums) {
        for l in 0..self.dim {
            self.sum[l] += other.sum[l];
            self.sum_sq[l] += other.sum_sq[l];
            self.count[l] += other.count[l];
        }
    }

    /// Element-wise pooled sums; all members must share a dimension.
    pub fn pool(members: &[DiagonalSums]) -> Result<DiagonalSums> {
        let first = members.first().ok_or_else(|| QkrError::InsufficientData("no members to pool".into()))?;
        let mut total = DiagonalSums {
            dim: first.dim,
            sum: vec![0.0; first.dim],
            sum_sq: vec![0.0; first.dim],
            count: vec![0.0; first.dim],
        };
        for m in members {
            if m.dim != first.dim {
                return Err(QkrError::InvalidParameter("members differ in dimension".into()));
            }
            total.absorb(m);
        }
        Ok(total)
    }

    fn variance_over(&self, range: std::ops::RangeInclusive<usize>) -> f64 {
        let (mut s, mut q, mut c) = (0.0, 0.0, 0.0);
        for l in range {
            s += self.sum[l];
            q += self.sum_sq[l];
            c += self.count[l];
        }
        let mean = s / c;
        (q / c - mean * mean).max(0.0)
    }

    pub fn mean(&self, l: usize) -> f64 {
        self.sum[l] / self.count[l]
    }
}

/// Band profile of the perturbation in the unperturbed eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct BandProfile {
    pub dim: usize,
    /// `var_l[L - 1] = Var(L)` for `L = 1..dim-1`.
    pub var_l: Vec<f64>,
    pub var1: f64,
    pub b: f64,
    pub v2: f64,
    pub full_band: bool,
    pub member_count: usize,
}

impl BandProfile {
    pub fn var(&self, l: usize) -> f64 {
        self.var_l[l - 1]
    }

    /// Largest `L` used for the bandwidth search and the collapse fit.
    /// Eigenphases live on a circle, so distances beyond `dim/2` fold back.
    pub fn max_distance(&self) -> usize {
        self.dim / 2
    }

    /// Collapse coordinates `x = (L-1)/b`, `y = Var(L)/Var(1)` for
    /// `2 ≤ L ≤ dim/2`.
    pub fn scaled_points(&self) -> Vec<(f64, f64)> {
        (2..=self.max_distance())
            .map(|l| ((l - 1) as f64 / self.b, self.var(l) / self.var1))
            .filter(|&(_, y)| y > 0.0)
            .collect()
    }
}

/// First half-height crossing of `Var(L)` searched over `2 ≤ L ≤ dim/2`,
/// interpolated linearly in `ln Var`. `None` when the profile never drops
/// to half height.
fn half_height_crossing(var: &dyn Fn(usize) -> f64, var1: f64, max_l: usize) -> Option<f64> {
    let half = 0.5 * var1;
    for l in 2..=max_l {
        let (prev, cur) = (var(l - 1), var(l));
        if cur <= half {
            if cur <= 0.0 || prev <= half {
                return Some(l as f64);
            }
            let t = (prev.ln() - half.ln()) / (prev.ln() - cur.ln());
            return Some((l - 1) as f64 + t);
        }
    }
    None
}

/// Builds the profile from pooled diagonal sums.
pub fn profile_from_sums(sums: &DiagonalSums, member_count: usize) -> Result<BandProfile> {
    let n = sums.dim;
    if n < 5 {
        return Err(QkrError::InsufficientData(format!("dimension {n} is too small for a band profile")));
    }
    let var_l: Vec<f64> = (1..n).map(|l| sums.variance_over(l..=l)).collect();
    let var1 = var_l[0];
    if !(var1 > 0.0) {
        return Err(QkrError::InsufficientData("Var(1) vanishes".into()));
    }
    let max_l = n / 2;
    let crossing = half_height_crossing(&|l| var_l[l - 1], var1, max_l);
    let (b, full_band) = match crossing {
        Some(b) => (b, false),
        None => (n as f64 / 2.0, true),
    };
    let v2 = sums.variance_over(1..=(b.floor() as usize).clamp(1, n - 1));
    Ok(BandProfile { dim: n, var_l, var1, b, v2, full_band, member_count })
}

/// Pools `Im p′` over members (upper triangle) into a band profile.
pub fn variance_profile(members: &[TransformedPerturbation]) -> Result<BandProfile> {
    if members.is_empty() {
        return Err(QkrError::InsufficientData("no members".into()));
    }
    let sums: Vec<DiagonalSums> = members.iter().map(DiagonalSums::from_perturbation).collect();
    profile_from_sums(&DiagonalSums::pool(&sums)?, members.len())
}

/// Diagonal sums for one ensemble member at `params` (λ forced to 0).
pub fn member_sums(params: &ModelParams, p: &MomentumOperator) -> Result<(DiagonalSums, RealEigenbasis)> {
    let p0 = params.with_lambda(0.0)?;
    let u0 = build_evolution_operator_factored(&p0)?;
    let basis = realize_tri_eigenbasis(&u0)?;
    let t = transform_perturbation(p, &basis)?;
    Ok((DiagonalSums::from_perturbation(&t), basis))
}

/// Band profile over the α grid `α ± halfwidth` (λ = 0).
pub fn ensemble_band_profile(params: &ModelParams, size: usize, halfwidth: f64) -> Result<BandProfile> {
    let alphas = alpha_grid(params.alpha(), halfwidth, size)?;
    let p = build_momentum_operator(params.n())?;
    let sums = alphas
        .par_iter()
        .map(|&a| Ok(member_sums(&params.with_alpha(a)?, &p)?.0))
        .collect::<Result<Vec<_>>>()?;
    profile_from_sums(&DiagonalSums::pool(&sums)?, size)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollapseFit {
    pub m: f64,
    /// RMS of `ln y + ln(1 + x^m)` over the fitted points.
    pub rms: f64,
    pub points: usize,
}

pub const COLLAPSE_M_RANGE: (f64, f64) = (0.5, 3.0);

/// Fits `y = 1/(1 + x^m)` by minimizing `Σ [ln y + ln(1 + x^m)]²` over
/// `m ∈ [0.5, 3]`. Points with `x ≤ 0` or `y ≤ 0` are ignored.
pub fn fit_collapse_points(points: &[(f64, f64)]) -> Result<CollapseFit> {
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|&(x, y)| x > 0.0 && y > 0.0).collect();
    let outside = pts.iter().filter(|&&(x, _)| x > 1.0).count();
    if outside < 10 {
        return Err(QkrError::InsufficientData(format!(
            "collapse fit needs at least 10 points outside the band, found {outside}"
        )));
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let cost = |m: f64| -> f64 {
        logs.iter()
            .map(|&(lx, ly)| {
                let r = ly + (m * lx).exp().ln_1p();
                r * r
            })
            .sum()
    };
    let (m, c) = brent_minimize(cost, COLLAPSE_M_RANGE.0, COLLAPSE_M_RANGE.1, 1e-12);
    Ok(CollapseFit { m, rms: (c / pts.len() as f64).sqrt(), points: pts.len() })
}

/// Collapse fit of one banded profile over `2 ≤ L ≤ dim/2`.
pub fn fit_collapse(profile: &BandProfile) -> Result<CollapseFit> {
    if profile.full_band {
        return Err(QkrError::Precondition("collapse fit requires a banded profile (b < N/2)".into()));
    }
    fit_collapse_points(&profile.scaled_points())
}

/// Single exponent for several profiles, their points pooled.
pub fn fit_collapse_pooled(profiles: &[BandProfile]) -> Result<CollapseFit> {
    let mut pts = Vec::new();
    for p in profiles {
        if p.full_band {
            return Err(QkrError::Precondition("collapse fit requires banded profiles".into()));
        }
        pts.extend(p.scaled_points());
    }
    fit_collapse_points(&pts)
}

/// Log-space RMS of `y·(1 + x^m)` over profile points with `x ∈ [lo, hi]`.
pub fn collapse_rms(profile: &BandProfile, m: f64, lo: f64, hi: f64) -> f64 {
    let r: Vec<f64> = profile
        .scaled_points()
        .into_iter()
        .filter(|&(x, _)| x >= lo && x <= hi)
        .map(|(x, y)| y.ln() + (m * x.ln()).exp().ln_1p())
        .collect();
    (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()
}

/// `Λ = λ² v² / D²` with `D = 2π/N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionParameter {
    pub value: f64,
    pub lambda: f64,
    pub v2: f64,
    pub spacing: f64,
}

pub fn transition_parameter(lambda: f64, v2: f64, n: usize) -> Result<TransitionParameter> {
    if !(lambda >= 0.0) || !(v2 > 0.0) || n == 0 {
        return Err(QkrError::InvalidParameter(format!(
            "transition parameter needs lambda >= 0, v2 > 0, N > 0 (got {lambda}, {v2}, {n})"
        )));
    }
    let spacing = TAU / n as f64;
    Ok(TransitionParameter { value: lambda * lambda * v2 / (spacing * spacing), lambda, v2, spacing })
}

/// Inverse of [`transition_parameter`]: `λ = √Λ·D/v`.
pub fn lambda_for_transition(big_lambda: f64, v2: f64, n: usize) -> Result<f64> {
    if !(big_lambda >= 0.0) || !(v2 > 0.0) || n == 0 {
        return Err(QkrError::InvalidParameter(format!("cannot invert Λ = {big_lambda} with v2 = {v2}")));
    }
    Ok(big_lambda.sqrt() * (TAU / n as f64) / v2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_profile(n: usize, b: f64, m: f64) -> BandProfile {
        let var_l: Vec<f64> = (1..n).map(|l| 1.0 / (1.0 + ((l - 1) as f64 / b).powf(m))).collect();
        BandProfile { dim: n, var1: var_l[0], var_l, b, v2: 1.0, full_band: false, member_count: 1 }
    }

    #[test]
    fn planted_exponents_are_recovered() {
        for m in [1.35, 2.0] {
            let fit = fit_collapse(&synthetic_profile(2001, 50.0, m)).unwrap();
            assert!((fit.m - m).abs() < 1e-6, "{fit:?}");
            assert!(fit.rms < 1e-6);
        }
    }

    #[test]
    fn fit_needs_tail_points() {
        let pts: Vec<(f64, f64)> = (1..12).map(|k| (k as f64 * 0.1, 0.9)).collect();
        assert!(matches!(fit_collapse_points(&pts), Err(QkrError::InsufficientData(_))));
    }

    #[test]
    fn half_height_interpolation() {
        // Var = 8·2^{-(L-1)/3}: the half height is reached exactly at L = 4
        let v = |l: usize| 8.0 * 2f64.powf(-((l - 1) as f64) / 3.0);
        let b = half_height_crossing(&v, 8.0, 100).unwrap();
        assert!((b - 4.0).abs() < 1e-12);
        let v = |l: usize| 8.0 * 2f64.powf(-((l - 1) as f64) / 2.5);
        let b = half_height_crossing(&v, 8.0, 100).unwrap();
        assert!((b - 3.5).abs() < 1e-12);
        assert!(half_height_crossing(&|_| 1.0, 1.0, 100).is_none());
    }

    #[test]
    fn flat_profile_is_full_band() {
        let n = 21;
        let m = Mat::from_fn(n, n, |i, j| if i < j { if i % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 });
        let prof = profile_from_sums(&DiagonalSums::from_matrix(&m), 1).unwrap();
        assert!(prof.full_band);
        assert_eq!(prof.b, 10.5);
        assert!(prof.var_l.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn lambda_formula() {
        let t = transition_parameter(1.719e-5, 2001.0 / 12.0, 2001).unwrap();
        let n = 2001f64;
        let semiclassical = 1.719e-5f64.powi(2) * n.powi(3) / (48.0 * std::f64::consts::PI.powi(2));
        assert!((t.value - semiclassical).abs() < 1e-15);
        assert_eq!(transition_parameter(0.0, 3.0, 11).unwrap().value, 0.0);
        let l = lambda_for_transition(t.value, t.v2, 2001).unwrap();
        assert!((l - 1.719e-5).abs() < 1e-18);
        assert!(transition_parameter(-1.0, 3.0, 11).is_err());
    }

    #[test]
    fn basis_guard_and_structure() {
        let p = ModelParams::with_default_theta0(31, 20.0, 0.1).unwrap();
        let u = build_evolution_operator_factored(&p).unwrap();
        assert!(matches!(realize_tri_eigenbasis(&u), Err(QkrError::Precondition(_))));

        let p = ModelParams::with_default_theta0(31, 20.0, 0.0).unwrap();
        let u = build_evolution_operator_factored(&p).unwrap();
        let basis = realize_tri_eigenbasis(&u).unwrap();
        assert!(basis.orthogonality_residual < 1e-12);
        let mom = build_momentum_operator(31).unwrap();
        let t = transform_perturbation(&mom, &basis).unwrap();
        assert!(t.antisymmetry_residual < 1e-12);
        for k in 0..31 {
            assert!(t.imag[(k, k)].abs() < 1e-10);
        }
    }

    #[test]
    fn identity_basis_keeps_p() {
        let n = 7;
        let basis = RealEigenbasis {
            vectors: Mat::identity(n, n),
            phases: vec![0.0; n],
            max_residual_imag: 0.0,
            orthogonality_residual: 0.0,
        };
        let mom = build_momentum_operator(n).unwrap();
        let t = transform_perturbation(&mom, &basis).unwrap();
        let back = t.to_complex();
        for i in 0..n {
            for j in 0..n {
                assert!((back[(i, j)] - mom.entries()[(i, j)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn phase_fixing_complex_vectors() {
        let v = Mat::from_fn(3, 1, |i, _| c64::from_polar([0.6, 0.8, 0.0][i], 0.0) * c64::from_polar(1.0, 1.1));
        let b = RealEigenbasis::from_complex(&v, vec![0.0]).unwrap();
        assert!((b.vectors[(1, 0)] - 0.8).abs() < 1e-15);
        assert!((b.vectors[(0, 0)] - 0.6).abs() < 1e-15);
        assert!(b.max_residual_imag < 1e-15);
        let w = Mat::from_fn(2, 1, |i, _| [c64::new(0.8, 0.0), c64::new(0.0, 0.6)][i]);
        assert!(RealEigenbasis::from_complex(&w, vec![0.0]).is_err());
    }
}
