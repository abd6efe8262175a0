use std::f64::consts::PI;

use qkr_core::rmt::{
    coe_spectra, cue_spectra, sample_interpolating_gaussian, sigma2_coe, sigma2_cue, sigma2_transition,
    sigma2_transition_estimate, y2_cue, y2_transition, Chi2Density, ClusterFunction, Estimate,
};
use qkr_core::spectral::{number_variance_unfolded, two_level_cluster};

/// Composite Simpson rule with `n` (even) panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn si(x: f64) -> f64 {
    let n = 2 * ((200.0 * x.abs()).ceil() as usize).max(500);
    simpson(|t| if t == 0.0 { 1.0 } else { t.sin() / t }, 0.0, x, n)
}

fn sinc(s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        (PI * s).sin() / (PI * s)
    }
}

/// Orthogonal-ensemble cluster function `f² + f'·∫_s^∞ f`, `f = sin πs/πs`.
fn y2_orthogonal(s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    let f = sinc(s);
    let df = ((PI * s).cos() - f) / s;
    let tail = (PI / 2.0 - si(PI * s)) / PI;
    f * f + df * tail
}

fn sigma2_unitary_simpson(r: f64) -> f64 {
    r - 2.0 * simpson(|s| (r - s) * sinc(s).powi(2), 0.0, r, 20_000)
}

#[test]
fn cluster_function_zero_lambda_matches_orthogonal_closed_form() {
    for k in 0..40 {
        let s = 0.05 + 0.2 * k as f64;
        let got = y2_transition(s, 0.0).unwrap();
        let want = y2_orthogonal(s);
        assert!((got - want).abs() < 1e-7, "s={s}: {got} vs {want}");
    }
}

#[test]
fn unitary_number_variance_matches_direct_integration() {
    for r in [0.3, 1.0, 2.5, 7.0, 20.0] {
        let got = sigma2_cue(r).unwrap();
        assert!((got - sigma2_unitary_simpson(r)).abs() < 1e-8, "r={r}");
    }
}

#[test]
fn orthogonal_number_variance_matches_dyson_relation() {
    // Σ²_o(r) = 2Σ²_u(r) + (Si(πr)/π)² - Si(πr)/π
    for r in [0.2, 0.5, 1.0, 2.0, 3.7, 10.0] {
        let z = si(PI * r) / PI;
        let want = 2.0 * sigma2_unitary_simpson(r) + z * z - z;
        let got = sigma2_coe(r).unwrap();
        assert!((got - want).abs() < 1e-6, "r={r}: {got} vs {want}");
    }
}

#[test]
fn transition_limits() {
    for r in [0.5, 1.0, 2.0, 5.0] {
        let coe = sigma2_coe(r).unwrap();
        let at0 = sigma2_transition(r, 0.0).unwrap();
        assert!((coe - at0).abs() <= 2e-6);
        let cue = sigma2_cue(r).unwrap();
        let big = sigma2_transition(r, 200.0).unwrap();
        assert!((big - cue).abs() < 1e-4, "r={r}: {big} vs {cue}");
        let inf = sigma2_transition(r, f64::INFINITY).unwrap();
        assert!((inf - cue).abs() <= 2e-6);
    }
    for s in [0.4, 1.3, 3.0] {
        let y = y2_transition(s, 300.0).unwrap();
        assert!((y - y2_cue(s)).abs() < 1e-4);
    }
}

#[test]
fn transition_is_monotone_in_lambda() {
    let grid = [0.0, 0.05, 0.2, 0.5, 1.0, 5.0, f64::INFINITY];
    for r in [1.0, 2.0] {
        let values: Vec<f64> = grid.iter().map(|&l| sigma2_transition(r, l).unwrap()).collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 2e-6, "r={r}: {values:?}");
        }
    }
    let at1 = sigma2_transition(1.0, 1.0).unwrap();
    assert!(at1 < sigma2_transition(1.0, 0.05).unwrap());
    assert!(at1 > sigma2_cue(1.0).unwrap());
}

#[test]
fn halving_the_tolerance_is_stable() {
    let lambdas = [0.0, 0.01, 0.1, 0.5, 2.0];
    let points = [0.5, 1.0, 2.0, 4.0];
    for &l in &lambdas {
        for &x in &points {
            let a = ClusterFunction::new(l, 1e-8).unwrap().eval(x).unwrap();
            let b = ClusterFunction::new(l, 5e-9).unwrap().eval(x).unwrap();
            assert!((a.value - b.value).abs() < 1e-8, "Y2 s={x} Λ={l}");
            let Estimate { value: c, tolerance } = sigma2_transition_estimate(x, l, 1e-6).unwrap();
            let d = sigma2_transition_estimate(x, l, 5e-7).unwrap().value;
            assert!((c - d).abs() < tolerance.max(1e-12) + 5e-7, "Σ² r={x} Λ={l}");
        }
    }
}

#[test]
fn chi2_moments_by_quadrature() {
    for nu in [1u32, 2] {
        let d = Chi2Density::new(nu).unwrap();
        // substitute y = u² to remove the ν = 1 singularity
        let f = |k: i32| simpson(|u| if u == 0.0 { 0.0 } else { 2.0 * u * u.powi(2 * k) * d.pdf(u * u).unwrap() }, 0.0, 12.0, 40_000);
        let norm = if nu == 1 { simpson(|u| (2.0 / PI).sqrt() * (-0.5 * u * u).exp(), 0.0, 12.0, 40_000) } else { f(0) };
        assert!((norm - 1.0).abs() < 1e-10);
        assert!((f(1) - 1.0).abs() < 1e-10);
        assert!((f(2) - 1.0 - d.variance()).abs() < 1e-9);
        assert!((d.cdf(80.0) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn monte_carlo_orthogonal_ensemble() {
    let spectra = coe_spectra(200, 500, 2024).unwrap();
    let refs: Vec<&[f64]> = spectra.iter().map(|s| s.as_slice()).collect();

    let curve = number_variance_unfolded(&refs, &[1.0]).unwrap();
    let exact = sigma2_transition(1.0, 0.0).unwrap();
    println!("Σ²(1): MC {:.5} ± {:.5}, reference {exact:.5}", curve.sigma2[0], curve.stderr[0]);
    assert!((curve.sigma2[0] - exact).abs() < 0.01);

    // eight bins over [0.2, 4]: at width 0.2 the sampling error alone is ~0.006 per bin
    let edges: Vec<f64> = (0..=8).map(|k| 0.2 + 0.475 * k as f64).collect();
    let bins = two_level_cluster(&refs, &edges).unwrap();
    let mut worst = 0.0_f64;
    for b in &bins {
        let avg = simpson(|s| y2_transition(s, 0.0).unwrap(), b.lo, b.hi, 20) / (b.hi - b.lo);
        worst = worst.max((b.value - avg).abs());
    }
    println!("Y2 worst bin deviation {worst:.5}");
    assert!(worst < 0.01);
}

#[test]
fn monte_carlo_unitary_ensemble() {
    let spectra = cue_spectra(100, 200, 77).unwrap();
    let refs: Vec<&[f64]> = spectra.iter().map(|s| s.as_slice()).collect();
    let curve = number_variance_unfolded(&refs, &[1.0, 3.0]).unwrap();
    for (k, r) in [1.0, 3.0].into_iter().enumerate() {
        let exact = sigma2_cue(r).unwrap();
        assert!((curve.sigma2[k] - exact).abs() < 4.0 * curve.stderr[k] + 0.005, "r={r}");
    }
}

fn pooled_sigma2(lambda: f64, matrices: u64, dim: usize) -> (f64, f64) {
    let mut per: Vec<f64> = Vec::new();
    let mut all: Vec<f64> = Vec::new();
    for seed in 0..matrices {
        let g = sample_interpolating_gaussian(dim, lambda, 1000 + seed).unwrap();
        let ys: Vec<f64> = g.vectors.col_iter().flat_map(|c| c.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let v = ys.iter().map(|y| (y / mean - 1.0).powi(2)).sum::<f64>() / ys.len() as f64;
        per.push(v);
        all.extend(ys);
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let v = all.iter().map(|y| (y / mean - 1.0).powi(2)).sum::<f64>() / all.len() as f64;
    let m = per.len() as f64;
    let pm = per.iter().sum::<f64>() / m;
    let se = (per.iter().map(|x| (x - pm).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt();
    (v, se)
}

#[test]
fn interpolating_gaussian_bridge() {
    let grid = [0.0, 0.05, 0.2, 0.5, 2.0, f64::INFINITY];
    let values: Vec<(f64, f64)> = grid.iter().map(|&l| pooled_sigma2(l, 40, 256)).collect();
    println!("{values:?}");
    assert!((values[0].0 - 2.0).abs() < 0.05);
    assert!((values[5].0 - 1.0).abs() < 0.05);
    let mid = pooled_sigma2(0.5, 40, 256).0;
    assert!(mid > 1.0 && mid < 2.0);
    for w in values.windows(2) {
        assert!(w[1].0 <= w[0].0 + 3.0 * (w[0].1 + w[1].1), "{values:?}");
    }
}
