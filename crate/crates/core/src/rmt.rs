//! Random-matrix baselines: Poisson, COE and CUE number variance, the
//! COE→CUE transition cluster function, unit-mean χ² densities and samplers.
//!
//! The transition cluster function is
//! `Y₂(s,Λ) = Y₂(s,∞) - X(s)·Y(s)` with
//! `X = ∫₀¹ e^{a(x²-1)} x sin(πxs) dx`, `Y = ∫₁^∞ e^{-a(y²-1)} sin(πys)/y dy`,
//! `a = 2π²Λ` (the two exponentials are rescaled by `e^{∓a}` so neither
//! factor overflows). `Y₂(s,∞) = (sin πs / πs)²` is the CUE cluster function.

use std::f64::consts::{FRAC_PI_2, PI};

use faer::{c64, Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::erf::erf;

use crate::eigen::eigendecompose_symmetric_unitary;
use crate::error::{QkrError, Result};
use crate::model::UnitaryMatrix;
use crate::quadrature::{integrate, integrate_panels, Tolerance};
use crate::rng::rng_for;

/// Absolute tolerance of [`y2_transition`].
pub const Y2_TOLERANCE: f64 = 1e-8;
/// Absolute tolerance of [`sigma2_transition`] and the other Σ² curves.
pub const SIGMA2_TOLERANCE: f64 = 1e-6;

/// Value together with the absolute error bound it was computed to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub tolerance: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(QkrError::InvalidParameter(format!("transition parameter must be >= 0, got {lambda}")));
    }
    Ok(())
}

fn sinc_pi(s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        (PI * s).sin() / (PI * s)
    }
}

/// `(sin πs / πs)²`.
pub fn y2_cue(s: f64) -> f64 {
    let v = sinc_pi(s);
    v * v
}

fn x_factor(s: f64, a: f64, tol: f64) -> Result<(f64, f64)> {
    let f = |x: f64| (a * (x * x - 1.0)).exp() * x * (PI * x * s).sin();
    let edges: &[f64] = if a > 10.0 { &[0.0, 1.0 - 10.0 / a, 1.0] } else { &[0.0, 1.0] };
    let r = integrate_panels(f, edges, Tolerance::absolute(tol))?;
    Ok((r.value, r.abs_error))
}

fn y_factor(s: f64, a: f64, tol: f64) -> Result<(f64, f64)> {
    if s == 0.0 {
        return Ok((0.0, 0.0));
    }
    if a >= 1.0 {
        // e^{-a(y²-1)} < 1e-16 beyond y*
        let y_max = (1.0 + 37.0 / a).sqrt();
        let f = |y: f64| (-a * (y * y - 1.0)).exp() * (PI * y * s).sin() / y;
        let r = integrate(f, 1.0, y_max, Tolerance::absolute(tol))?;
        return Ok((r.value, r.abs_error + 1e-16));
    }
    // ∫₀^∞ e^{-ay²} sin(by)/y dy = (π/2) erf(b / 2√a) removes the slowly
    // decaying tail; what remains is a smooth integral over [0, 1].
    let full = if a == 0.0 { FRAC_PI_2 * s.signum() } else { FRAC_PI_2 * erf(PI * s / (2.0 * a.sqrt())) };
    let scale = a.exp();
    let f = |y: f64| (-a * y * y).exp() * (PI * y * s).sin() / y;
    let r = integrate(f, 0.0, 1.0, Tolerance::absolute(tol / scale))?;
    Ok((scale * (full - r.value), scale * (r.abs_error + 1e-15)))
}

/// `X(s)·Y(s) = Y₂(s,∞) - Y₂(s,Λ)` with its error bound.
fn correction(s: f64, lambda: f64, tol: f64) -> Result<Estimate> {
    if lambda.is_infinite() || s == 0.0 {
        return Ok(Estimate { value: 0.0, tolerance: 0.0 });
    }
    let a = 2.0 * PI * PI * lambda;
    let (x, dx) = x_factor(s, a, tol / 4.0)?;
    let (y, dy) = y_factor(s, a, tol / 4.0)?;
    Ok(Estimate { value: x * y, tolerance: x.abs() * dy + y.abs() * dx + dx * dy })
}

/// Two-level cluster function of the COE→CUE transition ensemble.
#[derive(Clone, Copy, Debug)]
pub struct ClusterFunction {
    lambda: f64,
    tolerance: f64,
}

impl ClusterFunction {
    /// `lambda` may be `f64::INFINITY` (CUE).
    pub fn new(lambda: f64, tolerance: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(tolerance > 0.0) {
            return Err(QkrError::InvalidParameter(format!("tolerance must be > 0, got {tolerance}")));
        }
        Ok(Self { lambda, tolerance })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn eval(&self, s: f64) -> Result<Estimate> {
        if s.is_nan() || s < 0.0 {
            return Err(QkrError::InvalidParameter(format!("s must be >= 0, got {s}")));
        }
        let c = correction(s, self.lambda, self.tolerance)?;
        if c.tolerance > self.tolerance {
            return Err(QkrError::Quadrature { achieved: c.tolerance, requested: self.tolerance });
        }
        Ok(Estimate { value: y2_cue(s) - c.value, tolerance: c.tolerance })
    }
}

/// `Y₂(s, Λ)` to absolute accuracy [`Y2_TOLERANCE`]; `Λ = ∞` gives the CUE form.
pub fn y2_transition(s: f64, lambda: f64) -> Result<f64> {
    Ok(ClusterFunction::new(lambda, Y2_TOLERANCE)?.eval(s)?.value)
}

fn integer_edges(r: f64) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..).map(|k| k as f64).take_while(|&k| k < r).collect();
    edges.push(r);
    edges
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 50.0) {
        return Err(QkrError::InvalidParameter(format!("interval size must lie in (0, 50], got {r}")));
    }
    Ok(())
}

/// `Σ²(r) = r - 2∫₀^r (r-s)(sin πs/πs)² ds`.
pub fn sigma2_cue(r: f64) -> Result<f64> {
    check_r(r)?;
    let i = integrate_panels(|s| (r - s) * y2_cue(s), &integer_edges(r), Tolerance::absolute(1e-12))?;
    Ok(r - 2.0 * i.value)
}

pub fn sigma2_poisson(r: f64) -> f64 {
    r
}

/// `Σ²(r, Λ) = Σ²(r, ∞) + 2∫₀^r (r-s) X(s)Y(s) ds` with an error bound.
pub fn sigma2_transition_estimate(r: f64, lambda: f64, tolerance: f64) -> Result<Estimate> {
    check_r(r)?;
    check_lambda(lambda)?;
    let cue = sigma2_cue(r)?;
    if lambda.is_infinite() {
        return Ok(Estimate { value: cue, tolerance: 1e-11 });
    }
    // inner errors accumulate at most r² times into the outer integral
    let inner = tolerance / (10.0 * r * r).max(10.0);
    let failure = std::cell::Cell::new(None);
    let worst_inner = std::cell::Cell::new(0.0_f64);
    let f = |s: f64| match correction(s, lambda, inner) {
        Ok(c) => {
            worst_inner.set(worst_inner.get().max(c.tolerance));
            (r - s) * c.value
        }
        Err(e) => {
            failure.set(Some(e));
            f64::NAN
        }
    };
    let outer = integrate_panels(f, &integer_edges(r), Tolerance::absolute(tolerance / 4.0));
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let outer = outer?;
    let err = 2.0 * outer.abs_error + r * r * worst_inner.get() + 1e-11;
    if err > tolerance {
        return Err(QkrError::Quadrature { achieved: err, requested: tolerance });
    }
    Ok(Estimate { value: cue + 2.0 * outer.value, tolerance: err })
}

/// `Σ²(r, Λ)` to absolute accuracy [`SIGMA2_TOLERANCE`].
pub fn sigma2_transition(r: f64, lambda: f64) -> Result<f64> {
    Ok(sigma2_transition_estimate(r, lambda, SIGMA2_TOLERANCE)?.value)
}

pub fn sigma2_coe(r: f64) -> Result<f64> {
    sigma2_transition(r, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceKind {
    Poisson,
    Coe,
    Cue,
    Transition(f64),
}

impl ReferenceKind {
    pub fn name(&self) -> &'static str {
        match self {
            ReferenceKind::Poisson => "poisson",
            ReferenceKind::Coe => "coe",
            ReferenceKind::Cue => "cue",
            ReferenceKind::Transition(_) => "transition",
        }
    }

    /// Transition parameter; Poisson has none.
    pub fn lambda(&self) -> Option<f64> {
        match *self {
            ReferenceKind::Poisson => None,
            ReferenceKind::Coe => Some(0.0),
            ReferenceKind::Cue => Some(f64::INFINITY),
            ReferenceKind::Transition(l) => Some(l),
        }
    }
}

/// Number-variance reference curve `r ↦ Σ²(r)`.
#[derive(Clone, Copy, Debug)]
pub struct ReferenceCurve {
    pub kind: ReferenceKind,
    pub tolerance: f64,
}

impl ReferenceCurve {
    pub fn new(kind: ReferenceKind) -> Result<Self> {
        if let ReferenceKind::Transition(l) = kind {
            check_lambda(l)?;
        }
        Ok(Self { kind, tolerance: SIGMA2_TOLERANCE })
    }

    pub fn sigma2(&self, r: f64) -> Result<Estimate> {
        match self.kind.lambda() {
            None => {
                check_r(r)?;
                Ok(Estimate { value: r, tolerance: 0.0 })
            }
            Some(l) => sigma2_transition_estimate(r, l, self.tolerance),
        }
    }
}

/// Unit-mean χ² density with ν ∈ {1, 2}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Chi2Density {
    nu: u32,
}

impl Chi2Density {
    pub fn new(nu: u32) -> Result<Self> {
        if nu != 1 && nu != 2 {
            return Err(QkrError::InvalidParameter(format!("nu must be 1 or 2, got {nu}")));
        }
        Ok(Self { nu })
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    /// `(ν/2)^{ν/2} y^{ν/2-1} e^{-νy/2} / Γ(ν/2)`.
    pub fn pdf(&self, y: f64) -> Result<f64> {
        if y.is_nan() || y < 0.0 || (self.nu == 1 && y == 0.0) {
            return Err(QkrError::InvalidParameter(format!("chi2 density undefined at y = {y} for nu = {}", self.nu)));
        }
        Ok(match self.nu {
            1 => (-0.5 * y).exp() / (2.0 * PI * y).sqrt(),
            _ => (-y).exp(),
        })
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self.nu {
            1 => erf((0.5 * y).sqrt()),
            _ => -(-y).exp_m1(),
        }
    }

    pub fn mean(&self) -> f64 {
        1.0
    }

    pub fn variance(&self) -> f64 {
        2.0 / self.nu as f64
    }

    /// Density of `t = log₁₀ y`: `P(10^t)·10^t·ln 10`.
    pub fn log10_density(&self, t: f64) -> f64 {
        let y = 10f64.powf(t);
        self.pdf(y).map(|p| p * y * std::f64::consts::LN_10).unwrap_or(0.0)
    }
}

pub fn chi2_pdf(y: f64, nu: u32) -> Result<f64> {
    Chi2Density::new(nu)?.pdf(y)
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary matrix (QR of a complex Ginibre matrix with the
/// phases of `diag R` divided out).
pub fn sample_cue<R: Rng>(dim: usize, rng: &mut R) -> Mat<c64> {
    let z = Mat::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    let qr = z.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let phase: Vec<c64> = (0..dim)
        .map(|j| {
            let d = r[(j, j)];
            if d.norm() == 0.0 {
                c64::new(1.0, 0.0)
            } else {
                d / d.norm()
            }
        })
        .collect();
    Mat::from_fn(dim, dim, |i, j| q[(i, j)] * phase[j])
}

/// COE matrix `VᵀV` with `V` Haar unitary.
pub fn sample_coe<R: Rng>(dim: usize, rng: &mut R) -> Result<UnitaryMatrix> {
    let v = sample_cue(dim, rng);
    let u = v.transpose() * &v;
    let sym = Mat::from_fn(dim, dim, |i, j| (u[(i, j)] + u[(j, i)]) * 0.5);
    UnitaryMatrix::from_dense(sym)
}

/// Unfolded eigenphase spectra (`θ·dim/2π`, sorted) of `count` COE matrices,
/// matrix `k` seeded from `(seed, k)`.
pub fn coe_spectra(dim: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, &[k as u64]);
            let u = sample_coe(dim, &mut rng)?;
            let evd = eigendecompose_symmetric_unitary(&u)?;
            Ok(evd.phases.iter().map(|t| t * dim as f64 / (2.0 * PI)).collect())
        })
        .collect()
}

/// Unfolded eigenphase spectra of `count` CUE matrices.
pub fn cue_spectra(dim: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, &[k as u64]);
            let u = sample_cue(dim, &mut rng);
            let evals = u.eigenvalues().map_err(|e| QkrError::Eigensolver {
                context: format!("CUE sample {k}"),
                reason: format!("{e:?}"),
            })?;
            let mut t: Vec<f64> =
                evals.iter().map(|z| crate::eigen::wrap_phase(z.arg()) * dim as f64 / (2.0 * PI)).collect();
            t.sort_by(f64::total_cmp);
            Ok(t)
        })
        .collect()
}

/// Central eigenpairs of one interpolating Gaussian matrix `H = S + i t A`.
#[derive(Clone, Debug)]
pub struct HermitianMatrixSample {
    pub dim: usize,
    pub lambda: f64,
    /// Coupling of the antisymmetric part.
    pub t: f64,
    /// Mean spacing measured over the central quarter of the spectrum of `S`.
    pub central_spacing: f64,
    /// Eigenvalues of the central quarter of `H`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Matching eigenvectors as columns (`dim × eigenvalues.len()`).
    pub vectors: Mat<c64>,
}

fn central_range(dim: usize) -> std::ops::Range<usize> {
    let lo = (3 * dim) / 8;
    let hi = (5 * dim).div_ceil(8);
    lo..hi.max(lo + 2).min(dim)
}

/// Samples `H = S + i t A`: `S` real symmetric Gaussian (off-diagonal
/// variance 1, diagonal 2), `A` real antisymmetric Gaussian (variance 1).
/// `t = √Λ·D_c` where `D_c` is the mean spacing of `S` over its central
/// quarter, so that `t²/D_c² = Λ` there. `Λ = ∞` gives `t = 1`, which is GUE.
pub fn sample_interpolating_gaussian(dim: usize, lambda: f64, seed: u64) -> Result<HermitianMatrixSample> {
    check_lambda(lambda)?;
    if dim < 8 {
        return Err(QkrError::InvalidParameter(format!("dimension {dim} is too small for central-spectrum sampling")));
    }
    let mut rng = rng_for(seed, &[]);
    let mut s = Mat::<f64>::zeros(dim, dim);
    let mut a = Mat::<f64>::zeros(dim, dim);
    for j in 0..dim {
        let d: f64 = rng.sample(StandardNormal);
        s[(j, j)] = d * std::f64::consts::SQRT_2;
        for i in j + 1..dim {
            let x: f64 = rng.sample(StandardNormal);
            s[(i, j)] = x;
            s[(j, i)] = x;
        }
    }
    for j in 0..dim {
        for i in j + 1..dim {
            let x: f64 = rng.sample(StandardNormal);
            a[(i, j)] = x;
            a[(j, i)] = -x;
        }
    }
    let solver_error = |e: faer::linalg::evd::EvdError| QkrError::Eigensolver {
        context: format!("interpolating Gaussian sample, dim {dim}"),
        reason: format!("{e:?}"),
    };
    let range = central_range(dim);
    let s_values = s.self_adjoint_eigenvalues(Side::Lower).map_err(solver_error)?;
    let central_spacing = (s_values[range.end - 1] - s_values[range.start]) / (range.len() - 1) as f64;
    let t = if lambda.is_infinite() { 1.0 } else { lambda.sqrt() * central_spacing };

    let (eigenvalues, vectors) = if t == 0.0 {
        let evd = s.self_adjoint_eigen(Side::Lower).map_err(solver_error)?;
        let values = range.clone().map(|k| evd.S().column_vector()[k]).collect();
        let u = evd.U();
        (values, Mat::from_fn(dim, range.len(), |i, j| c64::new(u[(i, range.start + j)], 0.0)))
    } else {
        let h = Mat::from_fn(dim, dim, |i, j| c64::new(s[(i, j)], t * a[(i, j)]));
        let evd = h.self_adjoint_eigen(Side::Lower).map_err(solver_error)?;
        let values = range.clone().map(|k| evd.S().column_vector()[k].re).collect();
        (values, evd.U().subcols(range.start, range.len()).to_owned())
    };
    Ok(HermitianMatrixSample { dim, lambda, t, central_spacing, eigenvalues, vectors })
}
