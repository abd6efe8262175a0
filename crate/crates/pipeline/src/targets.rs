//! Reproduction targets. Each target reads the shared member cache and writes
//! its CSV files into the run directory.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use qkr_core::eigvec::EigenvectorSample;
use qkr_core::model::ModelParams;
use qkr_core::perturbation::{
    collapse_rms, fit_collapse, fit_collapse_pooled, lambda_for_transition, transition_parameter, BandProfile,
};
use qkr_core::rmt::{sample_interpolating_gaussian, Chi2Density, ReferenceCurve, ReferenceKind};
use qkr_core::rng::{derive_seed, rng_for, tag};
use qkr_core::spectral::{number_variance_unfolded, NumberVarianceCurve, QuasiEnergySpectrum};
use qkr_core::stats::{isotonic_decreasing, linear_fit, mean_variance};
use rand::Rng;

use crate::cache::CacheStore;
use crate::config::ExperimentConfig;
use crate::error::{PipelineError, Result};
use crate::members::{ensemble_band_profile, ensemble_params, ensemble_spectra, eigvec_summary, EigvecSummary};
use crate::output::{num, opt, Table};

/// Beyond this Λ the transition reference is replaced by its CUE limit.
pub const CUE_CUTOFF: f64 = 10.0;
/// Collapse quality is reported over `x = (L-1)/b ∈ [0.1, 10]`.
pub const COLLAPSE_WINDOW: (f64, f64) = (0.1, 10.0);
/// Histogram shown next to the σ²(Λ) curves.
pub const FIG5_HISTOGRAM_LAMBDA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Table1,
    Table2,
    Table3,
}

impl Target {
    pub const ALL: [Target; 8] = [
        Target::Fig1,
        Target::Fig2,
        Target::Fig3,
        Target::Fig4,
        Target::Fig5,
        Target::Table1,
        Target::Table2,
        Target::Table3,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Target::Fig1 => "fig1",
            Target::Fig2 => "fig2",
            Target::Fig3 => "fig3",
            Target::Fig4 => "fig4",
            Target::Fig5 => "fig5",
            Target::Table1 => "table1",
            Target::Table2 => "table2",
            Target::Table3 => "table3",
        }
    }

    /// Comma-separated names; `all` selects every target.
    pub fn parse_list(text: &str) -> Result<Vec<Target>> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Target::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        if out.is_empty() {
            return Err(PipelineError::Config("no targets given".into()));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        Target::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown target \"{s}\"")))
    }
}

pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub cache: &'a CacheStore,
    pub hash: String,
    pub dir: PathBuf,
    pub verbose: bool,
}

impl Context<'_> {
    fn log(&self, target: Target, what: impl fmt::Display) {
        if self.verbose {
            eprintln!("qkr [{target}] {what}");
        }
    }

    fn center(&self, a: f64, lambda: f64) -> Result<ModelParams> {
        Ok(ModelParams::from_alpha2_over_n(self.cfg.n, a, lambda, self.cfg.theta0)?)
    }

    fn members(&self, a: f64, lambda: f64) -> Result<Vec<ModelParams>> {
        ensemble_params(&self.center(a, lambda)?, self.cfg.ensemble_size, self.cfg.alpha_halfwidth)
    }

    fn profile(&self, a: f64) -> Result<BandProfile> {
        ensemble_band_profile(self.cache, &self.members(a, 0.0)?)
    }

    fn number_variance(&self, a: f64, lambda: f64, r: &[f64]) -> Result<NumberVarianceCurve> {
        let spectra = ensemble_spectra(self.cache, &self.members(a, lambda)?)?;
        let refs: Vec<&[f64]> = spectra.iter().map(|s| s.unfolded()).collect();
        Ok(number_variance_unfolded(&refs, r)?)
    }

    fn eigvec(&self, a: f64, lambda: f64) -> Result<EigvecSummary> {
        let members = if self.cfg.eigvec_ensemble { self.members(a, lambda)? } else { vec![self.center(a, lambda)?] };
        eigvec_summary(self.cache, &members, self.cfg.bins, self.cfg.histogram_range)
    }

    fn write(&self, tables: &[Table]) -> Result<Vec<PathBuf>> {
        tables.iter().map(|t| t.write(&self.dir, &self.hash)).collect()
    }

    fn ensemble_seed(&self, target: Target, a: f64, lambda: f64) -> u64 {
        derive_seed(self.cfg.seed, &[tag(target.name()), a.to_bits(), lambda.to_bits()])
    }
}

fn reference_for(big_lambda: f64) -> Result<ReferenceCurve> {
    let kind = if big_lambda == 0.0 {
        ReferenceKind::Coe
    } else if big_lambda > CUE_CUTOFF {
        ReferenceKind::Cue
    } else {
        ReferenceKind::Transition(big_lambda)
    };
    Ok(ReferenceCurve::new(kind)?)
}

pub fn run_target(ctx: &Context<'_>, target: Target) -> Result<Vec<PathBuf>> {
    match target {
        Target::Fig1 => fig1(ctx),
        Target::Fig2 => fig2(ctx),
        Target::Fig3 => fig3(ctx),
        Target::Fig4 => fig4(ctx),
        Target::Fig5 => fig5(ctx),
        Target::Table1 => table1(ctx),
        Target::Table2 => table2(ctx),
        Target::Table3 => table3(ctx),
    }
}

/// Σ²(r) for every α²/N and λ, the synthetic Poisson ensemble, and the
/// Poisson/COE/CUE reference curves.
fn fig1(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    let cfg = ctx.cfg;
    let r = &cfg.r_values;
    let mut nv = Table::new(
        "number_variance.csv",
        &["r", "sigma2", "stderr", "N", "alpha_center", "lambda", "theta0", "Lambda", "seed", "alpha2_over_N", "members"],
    );
    let mut summary = Table::new(
        "fig1.csv",
        &["series", "alpha2_over_N", "lambda", "Lambda", "r", "sigma2", "stderr", "reference_kind", "reference", "reference_tolerance"],
    );
    for a in cfg.alpha2_with_full_band() {
        for &lambda in &cfg.lambda_list {
            ctx.log(Target::Fig1, format_args!("alpha2/N = {a}, lambda = {lambda}"));
            let curve = ctx.number_variance(a, lambda, r)?;
            let big = if lambda == 0.0 { 0.0 } else { transition_parameter(lambda, ctx.profile(a)?.v2, cfg.n)?.value };
            let reference = reference_for(big)?;
            let seed = ctx.ensemble_seed(Target::Fig1, a, lambda);
            let alpha = ctx.center(a, lambda)?.alpha();
            for (k, &rk) in r.iter().enumerate() {
                nv.push(vec![
                    num(rk),
                    num(curve.sigma2[k]),
                    num(curve.stderr[k]),
                    cfg.n.to_string(),
                    num(alpha),
                    num(lambda),
                    num(cfg.theta0),
                    num(big),
                    seed.to_string(),
                    num(a),
                    curve.members.to_string(),
                ]);
                let est = reference.sigma2(rk)?;
                summary.push(vec![
                    "qkr".into(),
                    num(a),
                    num(lambda),
                    num(big),
                    num(rk),
                    num(curve.sigma2[k]),
                    num(curve.stderr[k]),
                    reference.kind.name().into(),
                    num(est.value),
                    num(est.tolerance),
                ]);
            }
        }
    }

    let spectra = poisson_spectra(cfg.seed, cfg.n, cfg.ensemble_size)?;
    let refs: Vec<&[f64]> = spectra.iter().map(|s| s.unfolded()).collect();
    let poisson = number_variance_unfolded(&refs, r)?;
    for (k, &rk) in r.iter().enumerate() {
        summary.push(vec![
            "poisson_synthetic".into(),
            String::new(),
            String::new(),
            String::new(),
            num(rk),
            num(poisson.sigma2[k]),
            num(poisson.stderr[k]),
            "poisson".into(),
            num(rk),
            num(0.0),
        ]);
    }

    let mut refs_table = Table::new("reference_curves.csv", &["kind", "Lambda", "r", "value", "tolerance"]);
    for kind in [ReferenceKind::Poisson, ReferenceKind::Coe, ReferenceKind::Cue] {
        let curve = ReferenceCurve::new(kind)?;
        for &x in r {
            let est = curve.sigma2(x)?;
            refs_table.push(vec![kind.name().into(), opt(kind.lambda()), num(x), num(est.value), num(est.tolerance)]);
        }
    }
    ctx.write(&[nv, summary, refs_table])
}

/// Uniform independent levels on `[0, n)`: member `k` draws from the stream
/// tagged `("fig1", "poisson", k)`.
pub fn poisson_spectra(seed: u64, n: usize, members: usize) -> Result<Vec<QuasiEnergySpectrum>> {
    (0..members)
        .map(|k| {
            let mut rng = rng_for(seed, &[tag("fig1"), tag("poisson"), k as u64]);
            let levels = (0..n).map(|_| rng.random::<f64>() * n as f64).collect();
            Ok(QuasiEnergySpectrum::from_unfolded(levels)?)
        })
        .collect()
}

/// Band profiles, their summaries, collapse fits and scaling slopes.
fn fig2(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    let cfg = ctx.cfg;
    let mut profile_rows = Table::new("var_profile.csv", &["L", "varL", "alpha2_over_N", "N", "members"]);
    let mut summary = Table::new("band_summary.csv", &["alpha2_over_N", "var1", "b", "m", "v2", "full_band"]);
    let mut fits = Table::new("fig2_fit.csv", &["alpha2_over_N", "m", "rms", "points", "collapse_rms"]);
    let mut profiles = Vec::new();
    for a in cfg.alpha2_with_full_band() {
        ctx.log(Target::Fig2, format_args!("alpha2/N = {a}"));
        let p = ctx.profile(a)?;
        for l in 1..p.dim {
            profile_rows.push(vec![l.to_string(), num(p.var(l)), num(a), cfg.n.to_string(), p.member_count.to_string()]);
        }
        let fit = if p.full_band { None } else { fit_collapse(&p).ok() };
        summary.push(vec![num(a), num(p.var1), num(p.b), opt(fit.map(|f| f.m)), num(p.v2), p.full_band.to_string()]);
        profiles.push((a, p, fit));
    }

    let pooled_set: Vec<BandProfile> = profiles
        .iter()
        .filter(|(a, p, _)| cfg.collapse_alpha2_over_n.contains(a) && !p.full_band)
        .map(|(_, p, _)| p.clone())
        .collect();
    let pooled = if pooled_set.is_empty() { None } else { Some(fit_collapse_pooled(&pooled_set)?) };
    for (a, p, fit) in &profiles {
        if let Some(f) = fit {
            let rms = pooled.map(|g| collapse_rms(p, g.m, COLLAPSE_WINDOW.0, COLLAPSE_WINDOW.1));
            fits.push(vec![num(*a), num(f.m), num(f.rms), f.points.to_string(), opt(rms)]);
        }
    }
    if let Some(g) = pooled {
        fits.push(vec!["pooled".into(), num(g.m), num(g.rms), g.points.to_string(), String::new()]);
    }

    let mut slopes = Table::new("fig2_slopes.csv", &["quantity", "slope", "intercept", "points"]);
    let banded: Vec<&(f64, BandProfile, _)> =
        profiles.iter().filter(|(a, p, _)| cfg.alpha2_over_n_list.contains(a) && !p.full_band).collect();
    if banded.len() >= 2 {
        let x: Vec<f64> = banded.iter().map(|(a, _, _)| a.ln()).collect();
        for (name, y) in [
            ("var1", banded.iter().map(|(_, p, _)| p.var1.ln()).collect::<Vec<_>>()),
            ("b", banded.iter().map(|(_, p, _)| p.b.ln()).collect::<Vec<_>>()),
        ] {
            let (slope, intercept) = linear_fit(&x, &y)?;
            slopes.push(vec![name.into(), num(slope), num(intercept), x.len().to_string()]);
        }
    }
    ctx.write(&[profile_rows, summary, fits, slopes])
}

fn table1(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    let mut t = Table::new("table1.csv", &["alpha2_over_N", "v2"]);
    for &a in &ctx.cfg.alpha2_over_n_list {
        ctx.log(Target::Table1, format_args!("alpha2/N = {a}"));
        t.push(vec![num(a), num(ctx.profile(a)?.v2)]);
    }
    ctx.write(&[t])
}

/// One Λ point of a transition curve.
#[derive(Clone, Debug)]
pub struct TransitionSample {
    pub big_lambda: f64,
    pub lambda: f64,
    pub curve: NumberVarianceCurve,
}

/// Λ values used for the spectral transition: 0, the configured grid and
/// the end point Λ = 1.
pub fn transition_grid(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(cfg.big_lambda_grid.iter().copied());
    g.push(1.0);
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn spectral_transition(ctx: &Context<'_>, target: Target, a: f64) -> Result<(f64, Vec<TransitionSample>)> {
    let v2 = ctx.profile(a)?.v2;
    let mut out = Vec::new();
    for big in transition_grid(ctx.cfg) {
        let lambda = lambda_for_transition(big, v2, ctx.cfg.n)?;
        ctx.log(target, format_args!("alpha2/N = {a}, Lambda = {big}, lambda = {lambda:e}"));
        out.push(TransitionSample { big_lambda: big, lambda, curve: ctx.number_variance(a, lambda, &ctx.cfg.table2_r)? });
    }
    Ok((v2, out))
}

fn fig3(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    let mut t = Table::new(
        "fig3.csv",
        &["r", "alpha2_over_N", "Lambda", "lambda", "sigma2", "stderr", "reference", "reference_tolerance", "members"],
    );
    for a in ctx.cfg.alpha2_with_full_band() {
        let (_, samples) = spectral_transition(ctx, Target::Fig3, a)?;
        for (k, &r) in ctx.cfg.table2_r.iter().enumerate() {
            for s in &samples {
                let est = reference_for(s.big_lambda)?.sigma2(r)?;
                t.push(vec![
                    num(r),
                    num(a),
                    num(s.big_lambda),
                    num(s.lambda),
                    num(s.curve.sigma2[k]),
                    num(s.curve.stderr[k]),
                    num(est.value),
                    num(est.tolerance),
                    s.curve.members.to_string(),
                ]);
            }
        }
    }
    ctx.write(&[t])
}

/// Where a measured Σ²(λ) curve reaches the midpoint between its λ = 0 and
/// Λ = 1 values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfDecay {
    pub lambda: Option<f64>,
    pub sigma2_0: f64,
    pub sigma2_1: f64,
    pub target: f64,
}

/// `points` are `(λ, Σ², stderr)` sorted by λ with the λ = 0 point first;
/// `end` is the index of the Λ = 1 point. A decreasing isotonic fit
/// (weights `1/stderr²` when every error is usable) is interpolated
/// linearly in λ at the first point at or below the midpoint.
pub fn half_decay(points: &[(f64, f64, f64)], end: usize) -> HalfDecay {
    let s0 = points[0].1;
    let s1 = points[end].1;
    let target = 0.5 * (s0 + s1);
    let usable = points.iter().all(|p| p.2.is_finite() && p.2 > 0.0);
    let w: Vec<f64> = points.iter().map(|p| if usable { 1.0 / (p.2 * p.2) } else { 1.0 }).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = isotonic_decreasing(&y, &w);
    let lambda = (1..points.len()).find(|&k| fit[k] <= target).map(|k| {
        let (l0, l1) = (points[k - 1].0, points[k].0);
        if fit[k - 1] <= target {
            return l0;
        }
        l0 + (fit[k - 1] - target) / (fit[k - 1] - fit[k]) * (l1 - l0)
    });
    HalfDecay { lambda, sigma2_0: s0, sigma2_1: s1, target }
}

fn table2(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    let cfg = ctx.cfg;
    let mut t = Table::new(
        "table2.csv",
        &["alpha2_over_N", "r", "lambda_half", "Lambda_half", "sigma2_0", "sigma2_1", "target", "v2"],
    );
    for a in cfg.alpha2_with_full_band() {
        let (v2, samples) = spectral_transition(ctx, Target::Table2, a)?;
        let end = samples.iter().position(|s| s.big_lambda == 1.0).expect("grid holds Λ = 1");
        for (k, &r) in cfg.table2_r.iter().enumerate() {
            let pts: Vec<(f64, f64, f64)> =
                samples[..=end].iter().map(|s| (s.lambda, s.curve.sigma2[k], s.curve.stderr[k])).collect();
            let h = half_decay(&pts, end);
            let big = h.lambda.map(|l| transition_parameter(l, v2, cfg.n)).transpose()?.map(|p| p.value);
            t.push(vec![num(a), num(r), opt(h.lambda), opt(big), num(h.sigma2_0), num(h.sigma2_1), num(h.target), num(v2)]);
        }
    }
    ctx.write(&[t])
}

fn fig4_lambdas(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut l = cfg.lambda_list.clone();
    l.push(cfg.probe_lambda);
    l.sort_by(f64::total_cmp);
    l.dedup();
    l
}

fn fig4(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    let cfg = ctx.cfg;
    let mut hist = Table::new("eigvec_hist.csv", &["log10y_center", "density", "N", "alpha2_over_N", "lambda"]);
    let mut summary = Table::new(
        "fig4.csv",
        &["alpha2_over_N", "lambda", "sigma2", "ks_chi2_1", "ks_chi2_2", "samples", "dropped_zeros", "out_of_range"],
    );
    let mut centers = Vec::new();
    for a in cfg.alpha2_with_full_band() {
        for lambda in fig4_lambdas(cfg) {
            ctx.log(Target::Fig4, format_args!("alpha2/N = {a}, lambda = {lambda}"));
            let s = ctx.eigvec(a, lambda)?;
            for (c, d) in s.bin_centers.iter().zip(&s.density) {
                hist.push(vec![num(*c), num(*d), cfg.n.to_string(), num(a), num(lambda)]);
            }
            summary.push(vec![
                num(a),
                num(lambda),
                num(s.sigma2),
                num(s.ks_chi2_1),
                num(s.ks_chi2_2),
                s.samples.to_string(),
                s.dropped_zeros.to_string(),
                s.out_of_range.to_string(),
            ]);
            centers = s.bin_centers;
        }
    }
    let mut reference = Table::new("fig4_reference.csv", &["log10y_center", "chi2_1", "chi2_2"]);
    let (c1, c2) = (Chi2Density::new(1)?, Chi2Density::new(2)?);
    for c in centers {
        reference.push(vec![num(c), num(c1.log10_density(c)), num(c2.log10_density(c))]);
    }
    ctx.write(&[hist, summary, reference])
}

/// Pooled eigenvector statistics of `count` interpolating Gaussian matrices.
fn gaussian_reference(cfg: &ExperimentConfig, big_lambda: f64) -> Result<(f64, f64, Vec<f64>)> {
    let mut per_matrix = Vec::new();
    let mut pooled = Vec::new();
    for k in 0..cfg.reference_samples {
        let seed = derive_seed(cfg.seed, &[tag("fig5"), tag("reference"), big_lambda.to_bits(), k as u64]);
        let g = sample_interpolating_gaussian(cfg.reference_dim, big_lambda, seed)?;
        let s = EigenvectorSample::from_vectors(g.vectors.as_ref(), None)?;
        per_matrix.push(s.sigma2);
        pooled.extend(s.y_values);
    }
    let (mean, var) = mean_variance(&per_matrix);
    Ok((mean, (var / per_matrix.len() as f64).sqrt(), pooled))
}

fn fig5(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    let cfg = ctx.cfg;
    let mut curve = Table::new("sigma2_curve.csv", &["Lambda", "sigma2", "alpha2_over_N", "lambda"]);
    let mut hist = Table::new("fig5_hist.csv", &["series", "alpha2_over_N", "Lambda", "log10y_center", "density"]);
    let mut grid = vec![0.0];
    grid.extend(cfg.big_lambda_grid.iter().copied());
    for a in cfg.alpha2_with_full_band() {
        let v2 = ctx.profile(a)?.v2;
        for &big in &grid {
            let lambda = lambda_for_transition(big, v2, cfg.n)?;
            ctx.log(Target::Fig5, format_args!("alpha2/N = {a}, Lambda = {big}"));
            curve.push(vec![num(big), num(ctx.eigvec(a, lambda)?.sigma2), num(a), num(lambda)]);
        }
        let s = ctx.eigvec(a, lambda_for_transition(FIG5_HISTOGRAM_LAMBDA, v2, cfg.n)?)?;
        for (c, d) in s.bin_centers.iter().zip(&s.density) {
            hist.push(vec!["qkr".into(), num(a), num(FIG5_HISTOGRAM_LAMBDA), num(*c), num(*d)]);
        }
    }
    let mut reference = Table::new("fig5_reference.csv", &["Lambda", "sigma2", "stderr", "samples", "dim"]);
    for &big in &grid {
        let (mean, se, _) = gaussian_reference(cfg, big)?;
        reference.push(vec![num(big), num(mean), num(se), cfg.reference_samples.to_string(), cfg.reference_dim.to_string()]);
    }
    let (_, _, pooled) = gaussian_reference(cfg, FIG5_HISTOGRAM_LAMBDA)?;
    let h = qkr_core::eigvec::log_histogram(&pooled, cfg.bins, cfg.histogram_range[0], cfg.histogram_range[1])?;
    for (c, d) in h.bin_centers.iter().zip(&h.density) {
        hist.push(vec!["reference".into(), String::new(), num(FIG5_HISTOGRAM_LAMBDA), num(*c), num(*d)]);
    }
    ctx.write(&[curve, hist, reference])
}

fn table3(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    let cfg = ctx.cfg;
    let mut t = Table::new(
        "table3.csv",
        &["alpha2_over_N", "v2", "Lambda", "lambda", "sigma2_0", "sigma2_probe", "drop"],
    );
    for a in cfg.alpha2_with_full_band() {
        ctx.log(Target::Table3, format_args!("alpha2/N = {a}"));
        let v2 = ctx.profile(a)?.v2;
        let big = transition_parameter(cfg.probe_lambda, v2, cfg.n)?.value;
        let s0 = ctx.eigvec(a, 0.0)?.sigma2;
        let s1 = ctx.eigvec(a, cfg.probe_lambda)?.sigma2;
        t.push(vec![num(a), num(v2), num(big), num(cfg.probe_lambda), num(s0), num(s1), num(s0 - s1)]);
    }
    ctx.write(&[t])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_lists() {
        assert_eq!(Target::parse_list("table1, fig1,table1").unwrap(), vec![Target::Fig1, Target::Table1]);
        assert_eq!(Target::parse_list("all").unwrap().len(), 8);
        assert!(Target::parse_list("fig9").is_err());
        assert!(Target::parse_list(" , ").is_err());
    }

    #[test]
    fn half_decay_on_a_line() {
        // Σ² = 1 - λ on λ = 0, 0.25, ..., 1: midpoint at λ = 0.5
        let pts: Vec<(f64, f64, f64)> = (0..5).map(|k| (k as f64 * 0.25, 1.0 - k as f64 * 0.25, 0.01)).collect();
        let h = half_decay(&pts, 4);
        assert!((h.lambda.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(h.target, 0.5);
        // interpolation between bracketing points
        let pts = [(0.0, 1.0, 0.1), (1.0, 0.8, 0.1), (3.0, 0.2, 0.1), (4.0, 0.0, 0.1)];
        let h = half_decay(&pts, 3);
        assert!((h.lambda.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn half_decay_smooths_noise() {
        // a bump above the λ = 0 value is pooled away by the monotone fit
        let pts = [(0.0, 1.0, 0.1), (1.0, 1.2, 0.1), (2.0, 0.4, 0.1), (3.0, 0.0, 0.1)];
        let h = half_decay(&pts, 3);
        // fit = [1.1, 1.1, 0.4, 0.0]; crossing of 0.5 between λ = 1 and 2
        let want = 1.0 + (1.1 - 0.5) / (1.1 - 0.4);
        assert!((h.lambda.unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn transition_grid_has_end_points() {
        let cfg = ExperimentConfig::parse("big_lambda_grid = [0.01, 0.1]").unwrap();
        assert_eq!(transition_grid(&cfg), vec![0.0, 0.01, 0.1, 1.0]);
    }

    #[test]
    fn references_by_regime() {
        assert_eq!(reference_for(0.0).unwrap().kind, ReferenceKind::Coe);
        assert_eq!(reference_for(0.3).unwrap().kind, ReferenceKind::Transition(0.3));
        assert_eq!(reference_for(1e6).unwrap().kind, ReferenceKind::Cue);
    }
}
