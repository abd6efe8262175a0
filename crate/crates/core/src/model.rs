//! Izrailev's finite-dimensional kicked rotor.
//!
//! The one-period evolution operator is taken in its symmetric form
//! `U = B^{1/2} G B^{1/2}` with the kick `B = exp[-i α cos(θ + θ₀)]` diagonal in
//! the position basis and the free motion `G = exp[-i (p²/2 - λ p)]` diagonal in
//! the momentum basis (T = ħ = 1). Both bases are periodic with `N` states,
//! position labels `m` and momentum labels `l` run over `-N₁..=N₁`, `N₁ = (N-1)/2`,
//! and matrix index `i` corresponds to label `i - N₁`.
//!
//! The free propagator drops the global phase `e^{iλ²/2}`, so
//! `G_l = exp[-i (l²/2 - λ l)]`.

use std::f64::consts::{PI, TAU};

use faer::{c64, Mat};
use rustfft::FftPlanner;

use crate::error::{QkrError, Result};

/// `2π - TAU` in double precision; second word of a Cody-Waite split.
const TAU_LO: f64 = 2.449_293_598_294_706_4e-16;

/// Largest dimension for which the factored construction multiplies explicit
/// dense DFT matrices; larger operators go through the FFT.
pub const DENSE_DFT_MAX_DIM: usize = 129;

/// Reduces a phase into `[0, 2π)` using a two-word representation of `2π`, so
/// large arguments (`l²/2` reaches ~5·10⁵ at N = 2001) keep full accuracy.
pub fn reduce_phase(x: f64) -> f64 {
    let q = (x / TAU).floor();
    let mut r = (-q).mul_add(TAU, x) - q * TAU_LO;
    if r < 0.0 {
        r += TAU;
    }
    if r >= TAU {
        r -= TAU;
    }
    r
}

#[inline]
fn cis(phase: f64) -> c64 {
    let (s, c) = reduce_phase(phase).sin_cos();
    c64::new(c, s)
}

/// `2π (a mod n) / n` computed with exact integer reduction.
#[inline]
fn grid_angle(a: i64, n: usize) -> f64 {
    TAU * (a.rem_euclid(n as i64) as f64) / n as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    n: usize,
    alpha: f64,
    lambda: f64,
    theta0: f64,
}

impl ModelParams {
    pub fn new(n: usize, alpha: f64, lambda: f64, theta0: f64) -> Result<Self> {
        if n == 0 || n.is_multiple_of(2) {
            return Err(QkrError::InvalidDimension(n));
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(QkrError::InvalidParameter(format!(
                "alpha must be finite and non-negative, got {alpha}"
            )));
        }
        if !lambda.is_finite() {
            return Err(QkrError::InvalidParameter(format!("lambda must be finite, got {lambda}")));
        }
        if !theta0.is_finite() {
            return Err(QkrError::InvalidParameter(format!("theta0 must be finite, got {theta0}")));
        }
        Ok(Self { n, alpha, lambda, theta0 })
    }

    /// Parameters with the parity-breaking phase `θ₀ = π/(2N)`.
    pub fn with_default_theta0(n: usize, alpha: f64, lambda: f64) -> Result<Self> {
        Self::new(n, alpha, lambda, default_theta0(n))
    }

    /// Kick strength from the localization parameter `α²/N`.
    pub fn from_alpha2_over_n(n: usize, alpha2_over_n: f64, lambda: f64, theta0: f64) -> Result<Self> {
        if !(alpha2_over_n >= 0.0) {
            return Err(QkrError::InvalidParameter(format!(
                "alpha^2/N must be non-negative, got {alpha2_over_n}"
            )));
        }
        Self::new(n, (alpha2_over_n * n as f64).sqrt(), lambda, theta0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    /// `N₁ = (N-1)/2`.
    pub fn half_dim(&self) -> usize {
        (self.n - 1) / 2
    }

    pub fn alpha2_over_n(&self) -> f64 {
        self.alpha * self.alpha / self.n as f64
    }

    /// Mean quasi-energy spacing `D = 2π/N`.
    pub fn mean_spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.n, alpha, self.lambda, self.theta0)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.n, self.alpha, lambda, self.theta0)
    }

    /// Label `-N₁..=N₁` of matrix index `i`.
    pub fn label(&self, index: usize) -> i64 {
        index as i64 - self.half_dim() as i64
    }

    /// Position eigenvalue `θ_m = 2πm/N`.
    pub fn position(&self, m: i64) -> f64 {
        TAU * m as f64 / self.n as f64
    }

    fn kick_half_phase(&self, m: i64) -> f64 {
        -0.5 * self.alpha * (self.position(m) + self.theta0).cos()
    }

    fn free_phase(&self, l: i64) -> f64 {
        // l² is exact in f64 for any dimension we can store.
        let kinetic = reduce_phase(0.5 * (l * l) as f64);
        -(kinetic - self.lambda * l as f64)
    }
}

pub fn default_theta0(n: usize) -> f64 {
    PI / (2.0 * n as f64)
}

/// Basis in which a [`DiagonalUnitary`] is diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Position,
    Momentum,
}

#[derive(Clone, Debug)]
pub struct DiagonalUnitary {
    pub basis: Basis,
    pub diagonal: Vec<c64>,
}

impl DiagonalUnitary {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.diagonal
            .iter()
            .map(|z| (z.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| if i == j { self.diagonal[i] } else { c64::new(0.0, 0.0) })
    }
}

/// Dense unitary operator with its measured unitarity residual
/// `max |U†U - I|` recorded at construction.
#[derive(Clone, Debug)]
pub struct UnitaryMatrix {
    entries: Mat<c64>,
    unitarity_residual: f64,
    source: Option<ModelParams>,
}

impl UnitaryMatrix {
    /// Wraps a dense matrix, measuring its unitarity residual with a full product.
    pub fn from_dense(entries: Mat<c64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(QkrError::InvalidParameter(format!(
                "matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        check_finite(&entries, "unitary matrix")?;
        let unitarity_residual = dense_unitarity_residual(&entries);
        Ok(Self { entries, unitarity_residual, source: None })
    }

    pub fn with_source(mut self, params: ModelParams) -> Self {
        self.source = Some(params);
        self
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Mat<c64> {
        &self.entries
    }

    pub fn into_entries(self) -> Mat<c64> {
        self.entries
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.unitarity_residual
    }

    pub fn source(&self) -> Option<&ModelParams> {
        self.source.as_ref()
    }

    /// `max |U_mn - U_nm|`.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in (j + 1)..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)]).norm());
            }
        }
        worst
    }
}

pub(crate) fn check_finite(m: &Mat<c64>, what: &'static str) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(QkrError::NonFinite(what));
            }
        }
    }
    Ok(())
}

pub fn dense_unitarity_residual(u: &Mat<c64>) -> f64 {
    let gram = u.adjoint() * u;
    let n = u.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - c64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Half kick `B^{1/2}`: `exp[-i (α/2) cos(θ_m + θ₀)]` on the position grid.
pub fn build_kick_half(params: &ModelParams) -> DiagonalUnitary {
    let diagonal = (0..params.n())
        .map(|i| cis(params.kick_half_phase(params.label(i))))
        .collect();
    DiagonalUnitary { basis: Basis::Position, diagonal }
}

/// Free propagator `G`: `exp[-i (l²/2 - λ l)]` on the momentum labels.
pub fn build_free(params: &ModelParams) -> DiagonalUnitary {
    let diagonal = (0..params.n())
        .map(|i| cis(params.free_phase(params.label(i))))
        .collect();
    DiagonalUnitary { basis: Basis::Momentum, diagonal }
}

/// Evolution operator by direct evaluation of the double-phase prefactor times
/// the momentum sum, entry by entry.
pub fn build_evolution_operator(params: &ModelParams) -> Result<UnitaryMatrix> {
    let n = params.n();
    let n1 = params.half_dim() as i64;
    let inv_n = 1.0 / n as f64;

    // The l-sum depends on m and n only through m - n.
    let sums: Vec<c64> = (-(n as i64 - 1)..=(n as i64 - 1))
        .map(|k| {
            (-n1..=n1)
                .map(|l| cis(params.free_phase(l) + grid_angle(l * k, n)))
                .sum()
        })
        .collect();
    let offset = n as i64 - 1;

    let kick: Vec<f64> = (0..n).map(|i| params.kick_half_phase(params.label(i))).collect();
    let entries = Mat::from_fn(n, n, |i, j| {
        let k = (i as i64 - j as i64 + offset) as usize;
        cis(kick[i] + kick[j]) * sums[k] * inv_n
    });
    check_finite(&entries, "evolution operator")?;
    Ok(UnitaryMatrix::from_dense(entries)?.with_source(*params))
}

/// Unitary DFT between momentum and position labels,
/// `F_{l,m} = ⟨l|θ_m⟩ = e^{-i l θ_m} / √N`.
pub fn dft_matrix(n: usize) -> Mat<c64> {
    let n1 = ((n - 1) / 2) as i64;
    let scale = 1.0 / (n as f64).sqrt();
    Mat::from_fn(n, n, |i, j| {
        let l = i as i64 - n1;
        let m = j as i64 - n1;
        cis(-grid_angle(l * m, n)) * scale
    })
}

/// Evolution operator composed from its factors `B^{1/2} F† G F B^{1/2}`.
///
/// Small operators multiply explicit dense DFT matrices; larger ones obtain the
/// circulant core `F† G F` from a single FFT.
pub fn build_evolution_operator_factored(params: &ModelParams) -> Result<UnitaryMatrix> {
    if params.n() <= DENSE_DFT_MAX_DIM {
        build_evolution_operator_dense_dft(params)
    } else {
        build_evolution_operator_fft(params)
    }
}

pub fn build_evolution_operator_dense_dft(params: &ModelParams) -> Result<UnitaryMatrix> {
    let n = params.n();
    let b = build_kick_half(params).to_dense();
    let g = build_free(params).to_dense();
    let f = dft_matrix(n);
    let core = f.adjoint() * (&g * &f);
    let entries = &b * (&core * &b);
    check_finite(&entries, "evolution operator")?;
    Ok(UnitaryMatrix::from_dense(entries)?.with_source(*params))
}

/// First column of the circulant `F† G F`: `c_k = (1/N) Σ_l G_l e^{2πi l k / N}`.
fn circulant_core(params: &ModelParams) -> Vec<c64> {
    let n = params.n();
    let free = build_free(params);
    let mut buf = vec![c64::new(0.0, 0.0); n];
    for (i, g) in free.diagonal.iter().enumerate() {
        let l = params.label(i);
        buf[l.rem_euclid(n as i64) as usize] = *g;
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    let inv_n = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= inv_n);
    buf
}

pub fn build_evolution_operator_fft(params: &ModelParams) -> Result<UnitaryMatrix> {
    let n = params.n();
    let core = circulant_core(params);
    let kick = build_kick_half(params).diagonal;
    let entries = Mat::from_fn(n, n, |i, j| {
        let k = (i as i64 - j as i64).rem_euclid(n as i64) as usize;
        kick[i] * core[k] * kick[j]
    });
    check_finite(&entries, "evolution operator")?;

    // U†U = conj(b_m) b_n (C†C)_mn up to |b|² = 1 rounding, and C†C is the
    // circulant built from the autocorrelation of the core column.
    let max_kick_mod = kick.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let mut residual = kick
        .iter()
        .map(|z| (z.norm_sqr() - 1.0).abs())
        .fold(0.0, f64::max);
    for shift in 0..n {
        let ac: c64 = (0..n).map(|j| core[j].conj() * core[(j + shift) % n]).sum();
        let dev = if shift == 0 {
            (ac * max_kick_mod - c64::new(1.0, 0.0)).norm()
        } else {
            ac.norm() * max_kick_mod
        };
        residual = residual.max(dev);
    }

    Ok(UnitaryMatrix { entries, unitarity_residual: residual, source: Some(*params) })
}

/// Position-basis matrix of the momentum operator,
/// `p_mn = (1/N) Σ_l l e^{2πi l (m-n)/N}`; it is `i` times a real antisymmetric matrix.
#[derive(Clone, Debug)]
pub struct MomentumOperator {
    entries: Mat<c64>,
}

impl MomentumOperator {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Mat<c64> {
        &self.entries
    }

    /// The real antisymmetric `P` with `p = iP`.
    pub fn imag(&self) -> Mat<f64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| self.entries[(i, j)].im)
    }
}

pub fn build_momentum_operator(n: usize) -> Result<MomentumOperator> {
    if n == 0 || n.is_multiple_of(2) {
        return Err(QkrError::InvalidDimension(n));
    }
    let n1 = ((n - 1) / 2) as i64;
    // Cosine terms cancel pairwise in l; only 2 Σ_{l>0} l sin(2π l k/N) survives.
    let column: Vec<f64> = (0..n as i64)
        .map(|k| {
            let s: f64 = (1..=n1).map(|l| l as f64 * grid_angle(l * k, n).sin()).sum();
            2.0 * s / n as f64
        })
        .collect();
    let entries = Mat::from_fn(n, n, |i, j| {
        if i == j {
            c64::new(0.0, 0.0)
        } else {
            let k = (i as i64 - j as i64).rem_euclid(n as i64) as usize;
            c64::new(0.0, column[k])
        }
    });
    Ok(MomentumOperator { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: c64, b: c64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn even_dimension_is_rejected() {
        assert!(matches!(ModelParams::new(4, 1.0, 0.0, 0.0), Err(QkrError::InvalidDimension(4))));
        assert!(matches!(build_momentum_operator(2000), Err(QkrError::InvalidDimension(2000))));
    }

    #[test]
    fn default_theta0_is_pi_over_2n() {
        let p = ModelParams::with_default_theta0(2001, 100.0, 0.0).unwrap();
        assert_eq!(p.theta0(), PI / 4002.0);
    }

    #[test]
    fn reduce_phase_matches_naive_for_small_arguments() {
        for &x in &[0.0, 1.0, -1.0, 7.0, -13.5, TAU] {
            let r = reduce_phase(x);
            assert!((0.0..TAU).contains(&r));
            assert!(((r - x) / TAU - ((r - x) / TAU).round()).abs() < 1e-14);
        }
        // 2π·k for integer k maps to (nearly) zero even for large k
        let r = reduce_phase(0.5 * (2.0 * 40_000.0 * PI));
        assert!(r < 1e-10 || TAU - r < 1e-10);
    }

    #[test]
    fn zero_kick_is_identity() {
        let p = ModelParams::new(3, 0.0, 0.0, 0.0).unwrap();
        let b = build_kick_half(&p);
        for z in &b.diagonal {
            assert!(close(*z, c64::new(1.0, 0.0), 1e-15));
        }
    }

    #[test]
    fn kick_half_hand_values() {
        let p = ModelParams::new(3, PI, 0.0, 0.0).unwrap();
        let b = build_kick_half(&p);
        let quarter = c64::from_polar(1.0, PI / 4.0);
        assert!(close(b.diagonal[0], quarter, 1e-15));
        assert!(close(b.diagonal[1], c64::new(0.0, -1.0), 1e-15));
        assert!(close(b.diagonal[2], quarter, 1e-15));
    }

    #[test]
    fn free_hand_values() {
        let p = ModelParams::new(3, 0.0, 0.0, 0.0).unwrap();
        let g = build_free(&p);
        let half = c64::from_polar(1.0, -0.5);
        assert!(close(g.diagonal[0], half, 1e-15));
        assert!(close(g.diagonal[1], c64::new(1.0, 0.0), 1e-15));
        assert!(close(g.diagonal[2], half, 1e-15));
    }

    #[test]
    fn factors_are_pure_phases() {
        let p = ModelParams::new(101, 137.3, 0.37, 0.01).unwrap();
        assert!(build_kick_half(&p).unitarity_residual() < 1e-15);
        assert!(build_free(&p).unitarity_residual() < 1e-15);
    }

    #[test]
    fn zero_kick_operator_hand_values() {
        // U_mn = (1/3)[1 + 2 e^{-i/2} cos(2π(m-n)/3)]
        let p = ModelParams::new(3, 0.0, 0.0, 0.0).unwrap();
        let u = build_evolution_operator(&p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let k = i as f64 - j as f64;
                let want = (c64::new(1.0, 0.0)
                    + c64::from_polar(1.0, -0.5) * 2.0 * (TAU * k / 3.0).cos())
                    / 3.0;
                assert!(close(u.entries()[(i, j)], want, 1e-14), "({i},{j})");
            }
        }
    }

    #[test]
    fn direct_and_factored_agree_small() {
        for &(n, alpha, lambda, theta0) in &[
            (3, 1.3, 0.2, 0.1),
            (3, PI, 0.0, 0.0),
            (11, 40.0, 0.9, 0.05),
            (31, 17.0, 0.013, 0.3),
        ] {
            let p = ModelParams::new(n, alpha, lambda, theta0).unwrap();
            let direct = build_evolution_operator(&p).unwrap();
            let dense = build_evolution_operator_dense_dft(&p).unwrap();
            let fft = build_evolution_operator_fft(&p).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert!(close(direct.entries()[(i, j)], dense.entries()[(i, j)], 1e-12));
                    assert!(close(dense.entries()[(i, j)], fft.entries()[(i, j)], 1e-12));
                }
            }
        }
    }

    #[test]
    fn zero_kick_factored_is_circulant() {
        let p = ModelParams::new(9, 0.0, 0.4, 0.0).unwrap();
        let u = build_evolution_operator_factored(&p).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let (i2, j2) = ((i + 1) % 9, (j + 1) % 9);
                assert!(close(u.entries()[(i, j)], u.entries()[(i2, j2)], 1e-13));
            }
        }
    }

    #[test]
    fn structural_residual_tracks_dense_residual() {
        let p = ModelParams::new(41, 63.0, 0.3, 0.02).unwrap();
        let fft = build_evolution_operator_fft(&p).unwrap();
        let dense = dense_unitarity_residual(fft.entries());
        assert!(fft.unitarity_residual() < 1e-12);
        assert!(dense < 1e-12);
    }

    #[test]
    fn symmetric_at_zero_field_only() {
        let p = ModelParams::from_alpha2_over_n(101, 25.0, 0.0, default_theta0(101)).unwrap();
        let u = build_evolution_operator_factored(&p).unwrap();
        assert!(u.symmetry_residual() <= 1e-10);
        let u = build_evolution_operator_factored(&p.with_lambda(0.1).unwrap()).unwrap();
        assert!(u.symmetry_residual() > 1e-6);
    }

    #[test]
    fn momentum_hand_value() {
        // indices 0,1 carry labels m = -1, 0, so m - n = -1 and
        // p = (1/3)(e^{-2πi/3} - e^{2πi/3}) = -(2/3) i sin(2π/3)
        let p = build_momentum_operator(3).unwrap();
        let want = -(2.0 / 3.0) * (TAU / 3.0).sin();
        assert!((p.entries()[(0, 1)].im - want).abs() < 1e-15);
        assert!((p.entries()[(1, 0)].im + want).abs() < 1e-15);
        assert!((want.abs() - 0.577_350_269_189_625_8).abs() < 1e-15);
    }

    #[test]
    fn momentum_is_imaginary_antisymmetric_and_traceless() {
        for &n in &[3usize, 11, 101] {
            let p = build_momentum_operator(n).unwrap();
            let e = p.entries();
            let mut trace = c64::new(0.0, 0.0);
            for i in 0..n {
                trace += e[(i, i)];
                for j in 0..n {
                    assert!(e[(i, j)].re.abs() <= 1e-12);
                    assert!((e[(i, j)] + e[(j, i)]).norm() <= 1e-12);
                }
            }
            assert!(trace.norm() <= 1e-12);
        }
    }

    #[test]
    fn momentum_spectrum_is_integer_ladder() {
        for &n in &[3usize, 11, 101] {
            let p = build_momentum_operator(n).unwrap();
            // i·p... p itself is Hermitian
            let mut eig: Vec<f64> = p
                .entries()
                .self_adjoint_eigenvalues(faer::Side::Lower)
                .unwrap();
            eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n1 = (n as i64 - 1) / 2;
            for (k, e) in eig.iter().enumerate() {
                assert!((e - (k as i64 - n1) as f64).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn free_core_is_generated_by_momentum() {
        // d/dλ (F†GF) at λ = 0 equals i p (F†GF)
        let n = 11;
        let h = 1e-6;
        let p0 = ModelParams::new(n, 0.0, 0.0, 0.0).unwrap();
        let up = build_evolution_operator(&p0.with_lambda(h).unwrap()).unwrap();
        let um = build_evolution_operator(&p0.with_lambda(-h).unwrap()).unwrap();
        let u0 = build_evolution_operator(&p0).unwrap();
        let mom = build_momentum_operator(n).unwrap();
        let gen = mom.entries() * u0.entries();
        for i in 0..n {
            for j in 0..n {
                let fd = (up.entries()[(i, j)] - um.entries()[(i, j)]) / (2.0 * h);
                let want = c64::new(0.0, 1.0) * gen[(i, j)];
                assert!(close(fd, want, 1e-7), "({i},{j}) {fd} vs {want}");
            }
        }
    }
}
