use rand::Rng;
use rand_distr::Exp1;

use qkr_core::eigvec::{ks_distance, log_histogram, EigenvectorSample};
use qkr_core::rmt::{sample_interpolating_gaussian, Chi2Density};
use qkr_core::rng::rng_for;
use qkr_core::spectral::{number_variance_unfolded, QuasiEnergySpectrum};

#[test]
fn poisson_levels_have_linear_number_variance() {
    let n = 2001;
    let spectra: Vec<QuasiEnergySpectrum> = (0..50)
        .map(|k| {
            let mut rng = rng_for(11, &[k]);
            QuasiEnergySpectrum::from_unfolded((0..n).map(|_| rng.random::<f64>() * n as f64).collect()).unwrap()
        })
        .collect();
    let refs: Vec<&[f64]> = spectra.iter().map(|s| s.unfolded()).collect();
    let r = [1.0, 2.0, 5.0, 10.0];
    let c = number_variance_unfolded(&refs, &r).unwrap();
    for (k, &rk) in r.iter().enumerate() {
        // finite-N binomial correction: N points on a circle of length N
        let exact = rk * (1.0 - rk / n as f64);
        assert!((c.sigma2[k] - exact).abs() < 3.0 * c.stderr[k], "r={}: {} ± {}", rk, c.sigma2[k], c.stderr[k]);
        assert!((c.sigma2[k] - rk).abs() < 3.0 * c.stderr[k] + rk / n as f64);
    }
}

#[test]
fn exponential_sample_histogram_matches_transformed_density() {
    let mut rng = rng_for(6, &[]);
    let y: Vec<f64> = (0..1_000_000).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let (lo, hi, bins) = (-6.0, 1.0, 70);
    let h = log_histogram(&y, bins, lo, hi).unwrap();
    let d = Chi2Density::new(2).unwrap();
    let mass = d.cdf(10f64.powf(hi)) - d.cdf(10f64.powf(lo));
    let mut worst = 0.0_f64;
    for (k, &c) in h.bin_centers.iter().enumerate() {
        let a = 10f64.powf(c - 0.5 * h.bin_width);
        let b = 10f64.powf(c + 0.5 * h.bin_width);
        let want = (d.cdf(b) - d.cdf(a)) / (mass * h.bin_width);
        worst = worst.max((h.density[k] - want).abs());
        // pointwise transformed density, for the shape
        assert!((d.log10_density(c) - want).abs() < 0.02);
    }
    assert!(worst < 0.01, "sup-norm {worst}");
}

fn pooled(lambda: f64, matrices: u64) -> EigenvectorSample {
    let mut raw = Vec::new();
    for k in 0..matrices {
        let g = sample_interpolating_gaussian(256, lambda, 500 + k).unwrap();
        raw.extend(g.vectors.col_iter().flat_map(|c| c.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()));
    }
    EigenvectorSample::from_raw(raw, None).unwrap()
}

#[test]
fn gaussian_limits_match_chi2() {
    let real = pooled(0.0, 100);
    let ks1 = ks_distance(&real.y_values, |x| Chi2Density::new(1).unwrap().cdf(x));
    assert!(ks1 < 0.02, "KS {ks1}");
    assert!((real.sigma2 - 2.0).abs() < 0.1);

    let complex = pooled(10.0, 100);
    let ks2 = ks_distance(&complex.y_values, |x| Chi2Density::new(2).unwrap().cdf(x));
    assert!(ks2 < 0.02, "KS {ks2}");

    let mid = pooled(0.5, 20);
    assert!(mid.sigma2 > 1.0 && mid.sigma2 < 2.0);
}
