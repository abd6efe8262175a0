//! Eigendecomposition of unitary matrices through commuting Hermitian parts.
//!
//! For unitary `W`, `A = (W + W†)/2` and `B = (W - W†)/2i` commute and share the
//! eigenvectors of `W`. We diagonalize `A` with a Hermitian solver and split the
//! clusters where `cos θ` nearly coincides (θ and -θ, or |cos θ| ≈ 1) with the
//! restriction of `B`. When `W` is complex symmetric, `A` and `B` are real
//! symmetric and the eigenvectors come out real orthogonal.
//!
//! The whole spectrum is rotated by a fixed phase first so that structured
//! spectra (symmetric about θ = 0) do not produce systematic collisions.

use std::f64::consts::TAU;

use faer::{c64, Mat, Side};

use crate::error::{QkrError, Result};
use crate::model::UnitaryMatrix;

/// Inputs with a larger recorded unitarity residual are rejected.
pub const UNITARITY_THRESHOLD: f64 = 1e-8;

/// Symmetry tolerance for taking the real orthogonal route.
pub const SYMMETRY_THRESHOLD: f64 = 1e-10;

/// Largest accepted `max |UΨ - Ψ diag(e^{iθ})|`.
pub const RECONSTRUCTION_THRESHOLD: f64 = 1e-8;

/// Eigenvalues of the Hermitian part closer than this are resolved jointly.
const CLUSTER_GAP: f64 = 1e-5;

const ROTATION: f64 = 1.0;

/// Maps an angle to `[0, 2π)`, sending values that round to 2π to 0.
pub fn wrap_phase(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Eigenphases (sorted, in `[0, 2π)`) and matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct UnitaryEigen {
    pub phases: Vec<f64>,
    pub vectors: Mat<c64>,
    /// `max |UΨ - Ψ diag(e^{iθ})|`.
    pub reconstruction_residual: f64,
}

/// Real orthogonal eigenbasis of a complex symmetric unitary matrix.
#[derive(Clone, Debug)]
pub struct SymmetricUnitaryEigen {
    pub phases: Vec<f64>,
    pub vectors: Mat<f64>,
    pub reconstruction_residual: f64,
}

impl SymmetricUnitaryEigen {
    pub fn into_complex(self) -> UnitaryEigen {
        let n = self.vectors.nrows();
        let vectors = Mat::from_fn(n, self.vectors.ncols(), |i, j| c64::new(self.vectors[(i, j)], 0.0));
        UnitaryEigen {
            phases: self.phases,
            vectors,
            reconstruction_residual: self.reconstruction_residual,
        }
    }
}

fn check_unitary(u: &UnitaryMatrix) -> Result<()> {
    if !(u.unitarity_residual() <= UNITARITY_THRESHOLD) {
        return Err(QkrError::NotUnitary {
            residual: u.unitarity_residual(),
            threshold: UNITARITY_THRESHOLD,
        });
    }
    Ok(())
}

fn provenance(u: &UnitaryMatrix) -> String {
    match u.source() {
        Some(p) => format!(
            "N={} alpha={} lambda={} theta0={}",
            p.n(),
            p.alpha(),
            p.lambda(),
            p.theta0()
        ),
        None => format!("{0}x{0} matrix", u.dim()),
    }
}

/// Consecutive index ranges of a sorted sequence whose neighbours lie closer
/// than `gap`; singletons are omitted.
fn clusters(sorted: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=sorted.len() {
        if k == sorted.len() || sorted[k] - sorted[k - 1] >= gap {
            if k - start > 1 {
                out.push(start..k);
            }
            start = k;
        }
    }
    out
}

/// Diagonalizes any unitary matrix. Complex symmetric input takes the real
/// orthogonal route.
pub fn eigendecompose_unitary(u: &UnitaryMatrix) -> Result<UnitaryEigen> {
    check_unitary(u)?;
    if u.symmetry_residual() <= SYMMETRY_THRESHOLD {
        return Ok(eigendecompose_symmetric_unitary(u)?.into_complex());
    }
    eigendecompose_general(u)
}

/// Eigenphases only, sorted ascending in `[0, 2π)`.
pub fn eigenphases(u: &UnitaryMatrix) -> Result<Vec<f64>> {
    Ok(eigendecompose_unitary(u)?.phases)
}

fn eigendecompose_general(u: &UnitaryMatrix) -> Result<UnitaryEigen> {
    let n = u.dim();
    let rot = c64::from_polar(1.0, -ROTATION);
    let w = Mat::from_fn(n, n, |i, j| u.entries()[(i, j)] * rot);
    let herm = Mat::from_fn(n, n, |i, j| (w[(i, j)] + w[(j, i)].conj()) * 0.5);

    let evd = herm.self_adjoint_eigen(Side::Lower).map_err(|e| QkrError::Eigensolver {
        context: provenance(u),
        reason: format!("{e:?}"),
    })?;
    let cos_values: Vec<f64> = (0..n).map(|k| evd.S().column_vector()[k].re).collect();
    let mut vectors = evd.U().to_owned();
    let mut images = &w * &vectors;

    for range in clusters(&cos_values, CLUSTER_GAP) {
        let c = range.len();
        let v = vectors.subcols(range.start, c).to_owned();
        let y = images.subcols(range.start, c).to_owned();
        let block = v.adjoint() * &y;
        let sin_block = Mat::from_fn(c, c, |i, j| {
            (block[(i, j)] - block[(j, i)].conj()) * c64::new(0.0, -0.5)
        });
        let rot = sin_block.self_adjoint_eigen(Side::Lower).map_err(|e| QkrError::Eigensolver {
            context: provenance(u),
            reason: format!("cluster resolution: {e:?}"),
        })?;
        let q = rot.U();
        vectors.subcols_mut(range.start, c).copy_from(&v * q);
        images.subcols_mut(range.start, c).copy_from(&y * q);
    }

    let values: Vec<c64> = (0..n)
        .map(|k| {
            let mut acc = c64::new(0.0, 0.0);
            for i in 0..n {
                acc += vectors[(i, k)].conj() * images[(i, k)];
            }
            acc
        })
        .collect();

    let mut residual = 0.0_f64;
    for k in 0..n {
        for i in 0..n {
            residual = residual.max((images[(i, k)] - vectors[(i, k)] * values[k]).norm());
        }
    }
    check_finite_residual(residual, u)?;

    let phases: Vec<f64> = values.iter().map(|z| wrap_phase(z.arg() + ROTATION)).collect();
    let order = argsort(&phases);
    let sorted_phases = order.iter().map(|&k| phases[k]).collect();
    let sorted_vectors = Mat::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(UnitaryEigen {
        phases: sorted_phases,
        vectors: sorted_vectors,
        reconstruction_residual: residual,
    })
}

/// Real orthogonal eigendecomposition of a complex symmetric unitary matrix.
///
/// `Re(e^{-iφ}U)` and `Im(e^{-iφ}U)` are commuting real symmetric matrices.
pub fn eigendecompose_symmetric_unitary(u: &UnitaryMatrix) -> Result<SymmetricUnitaryEigen> {
    check_unitary(u)?;
    let sym = u.symmetry_residual();
    if sym > SYMMETRY_THRESHOLD {
        return Err(QkrError::NotSymmetric { residual: sym, threshold: SYMMETRY_THRESHOLD });
    }
    let n = u.dim();
    let rot = c64::from_polar(1.0, -ROTATION);
    // Symmetrize explicitly so the real solver sees exactly symmetric input.
    let w = |i: usize, j: usize| (u.entries()[(i, j)] + u.entries()[(j, i)]) * 0.5 * rot;
    let re = Mat::from_fn(n, n, |i, j| w(i, j).re);
    let im = Mat::from_fn(n, n, |i, j| w(i, j).im);

    let evd = re.self_adjoint_eigen(Side::Lower).map_err(|e| QkrError::Eigensolver {
        context: provenance(u),
        reason: format!("{e:?}"),
    })?;
    let cos_values: Vec<f64> = (0..n).map(|k| evd.S().column_vector()[k]).collect();
    let mut vectors = evd.U().to_owned();
    let mut sin_images = &im * &vectors;

    for range in clusters(&cos_values, CLUSTER_GAP) {
        let c = range.len();
        let v = vectors.subcols(range.start, c).to_owned();
        let y = sin_images.subcols(range.start, c).to_owned();
        let block = v.transpose() * &y;
        let block = Mat::from_fn(c, c, |i, j| 0.5 * (block[(i, j)] + block[(j, i)]));
        let rot = block.self_adjoint_eigen(Side::Lower).map_err(|e| QkrError::Eigensolver {
            context: provenance(u),
            reason: format!("cluster resolution: {e:?}"),
        })?;
        let q = rot.U();
        vectors.subcols_mut(range.start, c).copy_from(&v * q);
        sin_images.subcols_mut(range.start, c).copy_from(&y * q);
    }
    let cos_images = &re * &vectors;

    let dot = |a: &Mat<f64>, k: usize| -> f64 { (0..n).map(|i| vectors[(i, k)] * a[(i, k)]).sum() };
    let cos_part: Vec<f64> = (0..n).map(|k| dot(&cos_images, k)).collect();
    let sin_part: Vec<f64> = (0..n).map(|k| dot(&sin_images, k)).collect();

    let mut residual = 0.0_f64;
    for k in 0..n {
        for i in 0..n {
            let v = vectors[(i, k)];
            let dr = cos_images[(i, k)] - v * cos_part[k];
            let di = sin_images[(i, k)] - v * sin_part[k];
            residual = residual.max(dr.hypot(di));
        }
    }
    check_finite_residual(residual, u)?;

    let phases: Vec<f64> = (0..n)
        .map(|k| wrap_phase(sin_part[k].atan2(cos_part[k]) + ROTATION))
        .collect();
    let order = argsort(&phases);
    let sorted_phases = order.iter().map(|&k| phases[k]).collect();
    let sorted_vectors = Mat::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(SymmetricUnitaryEigen {
        phases: sorted_phases,
        vectors: sorted_vectors,
        reconstruction_residual: residual,
    })
}

fn check_finite_residual(residual: f64, u: &UnitaryMatrix) -> Result<()> {
    if !(residual <= RECONSTRUCTION_THRESHOLD) {
        return Err(QkrError::Eigensolver {
            context: provenance(u),
            reason: format!("reconstruction residual {residual:e} exceeds {RECONSTRUCTION_THRESHOLD:e}"),
        });
    }
    Ok(())
}

fn argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx
}

/// `max |Ψ†Ψ - I|`.
pub fn orthonormality_residual(vectors: &Mat<c64>) -> f64 {
    let gram = vectors.adjoint() * vectors;
    let mut worst = 0.0_f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let t = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - c64::new(t, 0.0)).norm());
        }
    }
    worst
}
