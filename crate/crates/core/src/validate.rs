//! Corpus-level checks of the noise model: exact identities, analytic
//! forms, variance bounds and the higher-cycle laws. Each check yields one
//! [`CheckRow`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{
    identity_residuals, mean_var, run_cycles, verify_trace, CodecOptions, NoiseKind, QuantTable,
};
use crate::detect::{rounding_noise_stat, Coefficients};
use crate::dist::{
    chi_square_fit, higher_cycle_model, rounding_model, two_sample_test, variance_bounds, FitConfig,
    NoiseDistribution, TwoSampleConfig,
};
use crate::error::{Error, Result};
use crate::transform::{Plane, BLOCK_LEN};
use crate::{IntPlane, Trace};

/// Frequencies whose basis functions only take the values ±1/8: DC,
/// (0,4), (4,0) and (4,4). Their coefficients of an integer block lie on a
/// 1/8 lattice, so their noise is discrete and is left out of
/// continuous-law fits.
pub const LATTICE_INDICES: [usize; 4] = [0, 4, 32, 36];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CheckVerdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Passes when `statistic <= threshold`.
    AtMost,
    /// Passes when `statistic >= threshold`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub rule: Rule,
    pub verdict: CheckVerdict,
    pub samples: usize,
    pub detail: String,
}

impl CheckRow {
    pub fn new(name: impl Into<String>, statistic: f64, rule: Rule, threshold: f64, samples: usize) -> Self {
        let ok = match rule {
            Rule::AtMost => statistic <= threshold,
            Rule::AtLeast => statistic >= threshold,
        };
        Self {
            name: name.into(),
            statistic,
            threshold,
            rule,
            verdict: if ok { CheckVerdict::Pass } else { CheckVerdict::Fail },
            samples,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            statistic: f64::NAN,
            threshold: f64::NAN,
            rule: Rule::AtMost,
            verdict: CheckVerdict::Fail,
            samples: 0,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == CheckVerdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelCheckConfig {
    pub alpha: f64,
    /// Share of images that must pass a per-image goodness-of-fit test.
    pub fit_pass_rate: f64,
    /// Share of images on which two noise samples must test as equal.
    pub same_rate: f64,
    pub identity_tolerance: f64,
    pub dc_steps: Vec<u16>,
    /// Allowed relative deviation of the DC noise variance from `q²/12`.
    pub dc_tolerance: f64,
    /// Relative slack on the variance upper bounds.
    pub bound_slack: f64,
}

impl Default for ModelCheckConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            fit_pass_rate: 0.8,
            same_rate: 0.95,
            identity_tolerance: 1e-9,
            dc_steps: vec![4, 10, 16],
            dc_tolerance: 0.05,
            bound_slack: 0.05,
        }
    }
}

impl ModelCheckConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.alpha) || !(0.0..=1.0).contains(&self.fit_pass_rate) || !(0.0..=1.0).contains(&self.same_rate) {
            return Err(Error::Config("alpha must be in (0,1) and rates in [0,1]".into()));
        }
        if !(self.identity_tolerance >= 0.0 && self.dc_tolerance > 0.0 && self.bound_slack >= 0.0) {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        if self.dc_steps.contains(&0) {
            return Err(Error::Config("dc_steps must be positive".into()));
        }
        Ok(())
    }

    fn fit(&self) -> FitConfig {
        FitConfig {
            alpha: self.alpha,
            ..FitConfig::default()
        }
    }
}

fn constant_tables(steps: &[u16]) -> Result<Vec<QuantTable>> {
    steps.iter().map(|&q| QuantTable::constant(q)).collect()
}

fn traces(images: &[IntPlane], tables: &[QuantTable]) -> Result<Vec<Trace>> {
    if images.is_empty() {
        return Err(Error::EmptySampleSet("image corpus is empty".into()));
    }
    images
        .par_iter()
        .map(|im| run_cycles(im, tables, &CodecOptions::default()))
        .collect()
}

fn samples_at(plane: &Plane<f64>, skip: &[usize]) -> Vec<f64> {
    (0..BLOCK_LEN)
        .filter(|u| !skip.contains(u))
        .flat_map(|u| plane.block_position_samples(u))
        .collect()
}

fn rate_row(name: &str, hits: usize, total: usize, threshold: f64, detail: String) -> CheckRow {
    CheckRow::new(name, hits as f64 / total as f64, Rule::AtLeast, threshold, total).with_detail(detail)
}

/// Largest residual of the three noise identities over every cycle of every
/// image, with the given table sequence.
pub fn identity_check(images: &[IntPlane], tables: &[QuantTable], cfg: &ModelCheckConfig) -> Result<CheckRow> {
    let trs = traces(images, tables)?;
    let mut worst = 0.0f64;
    let mut ties = 0;
    for tr in &trs {
        let r = identity_residuals(tr)?;
        worst = worst.max(r.max());
        ties += r.tie_points;
    }
    Ok(CheckRow::new("noise_identities", worst, Rule::AtMost, cfg.identity_tolerance, trs.len() * tables.len())
        .with_detail(format!("{} images x {} cycles, {ties} rounding ties skipped", trs.len(), tables.len())))
}

/// Relative deviation of the pooled first-cycle DC quantization-noise
/// variance from the uniform value `q²/12`.
pub fn dc_uniform_check(images: &[IntPlane], q: u16, cfg: &ModelCheckConfig) -> Result<CheckRow> {
    let trs = traces(images, &constant_tables(&[q])?)?;
    let dc: Vec<f64> = trs
        .iter()
        .flat_map(|t| t.noises[0].quantization.block_position_samples(0))
        .collect();
    let v = mean_var(&dc).1;
    let uniform = (q as f64).powi(2) / 12.0;
    Ok(CheckRow::new(format!("dc_quantization_uniform_q{q}"), (v / uniform - 1.0).abs(), Rule::AtMost, cfg.dc_tolerance, dc.len())
        .with_detail(format!("sample variance {v:.6}, q^2/12 = {uniform:.6}")))
}

/// Share of images whose first-cycle rounding noise fits the quantized
/// Gaussian with unit step and the spatial auxiliary-noise variance.
pub fn rounding_fit_check(images: &[IntPlane], table: &QuantTable, cfg: &ModelCheckConfig) -> Result<CheckRow> {
    let trs = traces(images, &[*table])?;
    let fit = cfg.fit();
    let passes: Vec<bool> = trs
        .par_iter()
        .map(|t| {
            let n = &t.noises[0];
            let model = rounding_model(mean_var(n.aux_spatial.as_slice()).1)?;
            Ok(chi_square_fit(n.rounding.as_slice(), &model, &fit)?.pass)
        })
        .collect::<Result<_>>()?;
    let hits = passes.iter().filter(|&&p| p).count();
    Ok(rate_row(
        "first_cycle_rounding_fit",
        hits,
        passes.len(),
        cfg.fit_pass_rate,
        format!("table {}, chi-square alpha {}", table.digest(), cfg.alpha),
    ))
}

/// Largest ratio of a pooled first-cycle sample variance to its upper bound,
/// one row per noise kind.
pub fn variance_bound_checks(images: &[IntPlane], table: &QuantTable, cfg: &ModelCheckConfig) -> Result<Vec<CheckRow>> {
    let trs = traces(images, &[*table])?;
    let bounds = variance_bounds(table);
    let mut rows = Vec::new();
    for kind in NoiseKind::ALL {
        let mut worst = 0.0f64;
        let mut n = 0;
        for u in 0..BLOCK_LEN {
            let xs: Vec<f64> = trs
                .iter()
                .flat_map(|t| t.noises[0].get(kind).block_position_samples(u))
                .collect();
            let bound = match kind {
                NoiseKind::Quantization => bounds.quantization[u],
                NoiseKind::Rounding => bounds.rounding[u],
                NoiseKind::AuxSpatial => bounds.aux_spatial,
                NoiseKind::AuxDct => bounds.aux_dct,
            };
            // Second moment about zero: the bounds cover it as well as the variance.
            let m2 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
            worst = worst.max(m2 / bound);
            n = xs.len();
        }
        // At the bound the noise is uniform, whose squared value has relative
        // spread sqrt(4/5); allow four standard errors on small corpora.
        let slack = cfg.bound_slack.max(4.0 * (0.8 / n as f64).sqrt());
        rows.push(
            CheckRow::new(format!("{}_variance_bound", kind.name()), worst, Rule::AtMost, 1.0 + slack, n)
                .with_detail("max over positions of mean square / bound".to_string()),
        );
    }
    Ok(rows)
}

/// Fits the last-cycle quantization noise of a constant-step sequence
/// against the higher-cycle law predicted from the previous step, pooling
/// the non-lattice frequencies of each image.
pub fn higher_cycle_fit_check(images: &[IntPlane], steps: &[u16], cfg: &ModelCheckConfig) -> Result<CheckRow> {
    if steps.len() < 2 {
        return Err(Error::Config("a higher-cycle check needs at least two steps".into()));
    }
    let k = steps.len();
    let (q_prev, q_cur) = (steps[k - 2], steps[k - 1]);
    let trs = traces(images, &constant_tables(steps)?)?;
    let base = cfg.fit();
    let results: Vec<(bool, &'static str)> = trs
        .par_iter()
        .map(|t| {
            let aux = samples_at(&t.noises[k - 2].aux_dct, &LATTICE_INDICES);
            let var = mean_var(&aux).1;
            let model = higher_cycle_model(q_prev, q_cur, var, None)?;
            let mut fit = base;
            if let NoiseDistribution::Gaussian { .. } = model {
                // The noise is folded into [-q/2, q/2]; tail mass past one end
                // wraps to the other. Open tail bins that start inside the
                // interval see the same mass either way.
                let a = (fit.span_sd * var.sqrt()).min(7.0 * q_cur as f64 / 16.0);
                fit.range = Some((-a, a));
            }
            let ys = samples_at(&t.noises[k - 1].quantization, &LATTICE_INDICES);
            Ok((chi_square_fit(&ys, &model, &fit)?.pass, model.name()))
        })
        .collect::<Result<_>>()?;
    let hits = results.iter().filter(|r| r.0).count();
    let law = results.first().map_or("", |r| r.1);
    let seq: Vec<String> = steps.iter().map(|q| q.to_string()).collect();
    Ok(rate_row(
        &format!("k{k}_quantization_fit_{}", seq.join("_")),
        hits,
        results.len(),
        cfg.fit_pass_rate,
        format!("steps {}, law {law}", seq.join("->")),
    ))
}

/// Share of images on which the rounding noise of the last cycle and the one
/// before it are indistinguishable, with the same table repeated `cycles` times.
pub fn inheritance_check(images: &[IntPlane], table: &QuantTable, cycles: usize, cfg: &ModelCheckConfig) -> Result<CheckRow> {
    if cycles < 2 {
        return Err(Error::Config("inheritance needs at least two cycles".into()));
    }
    let trs = traces(images, &vec![*table; cycles])?;
    let two = TwoSampleConfig {
        alpha: cfg.alpha,
        ..TwoSampleConfig::default()
    };
    let same: Vec<bool> = trs
        .par_iter()
        .map(|t| {
            let a = t.noises[cycles - 2].rounding.as_slice();
            let b = t.noises[cycles - 1].rounding.as_slice();
            Ok(two_sample_test(a, b, &two)?.same)
        })
        .collect::<Result<_>>()?;
    let hits = same.iter().filter(|&&s| s).count();
    Ok(rate_row(
        &format!("k{cycles}_rounding_inherited"),
        hits,
        same.len(),
        cfg.same_rate,
        format!("table {} (min step {}), alpha {}", table.digest(), table.min_step(), cfg.alpha),
    ))
}

/// Mean rounding-noise variance of double minus single compression with the
/// same table; negative when re-compression lowers it.
pub fn double_variance_check(images: &[IntPlane], table: &QuantTable) -> Result<CheckRow> {
    let trs = traces(images, &[*table, *table])?;
    let (mut s, mut d) = (0.0, 0.0);
    for t in &trs {
        s += rounding_noise_stat(Coefficients::Levels(&t.cycles[0].levels), table)?;
        d += rounding_noise_stat(Coefficients::Levels(&t.cycles[1].levels), table)?;
    }
    let n = trs.len() as f64;
    Ok(CheckRow::new("double_rounding_variance_lower", (d - s) / n, Rule::AtMost, 0.0, trs.len())
        .with_detail(format!("single {:.6}, double {:.6}, table {}", s / n, d / n, table.digest())))
}

/// Re-derives every stored quantity of a trace.
pub fn trace_integrity_check(name: &str, trace: &Trace, cfg: &ModelCheckConfig) -> CheckRow {
    match verify_trace(trace, cfg.identity_tolerance) {
        Ok(()) => CheckRow::new(name, 0.0, Rule::AtMost, 0.0, trace.len()),
        Err(e) => CheckRow::failed(name, e.to_string()),
    }
}

/// The full battery on one image corpus.
pub fn run_model_checks(images: &[IntPlane], cfg: &ModelCheckConfig) -> Result<Vec<CheckRow>> {
    cfg.validate()?;
    if images.is_empty() {
        return Err(Error::EmptySampleSet("image corpus is empty".into()));
    }
    let qf = |q| QuantTable::ijg_luminance(q);
    let mut rows = vec![identity_check(images, &[qf(75)?, qf(90)?, qf(80)?], cfg)?];
    for &q in &cfg.dc_steps {
        rows.push(dc_uniform_check(images, q, cfg)?);
    }
    rows.push(rounding_fit_check(images, &qf(75)?, cfg)?);
    rows.extend(variance_bound_checks(images, &qf(75)?, cfg)?);
    for steps in [&[4u16, 2][..], &[4, 1], &[3, 4, 2], &[3, 4, 1]] {
        rows.push(higher_cycle_fit_check(images, steps, cfg)?);
    }
    rows.push(inheritance_check(images, &qf(50)?, 2, cfg)?);
    rows.push(inheritance_check(images, &qf(50)?, 3, cfg)?);
    rows.push(double_variance_check(images, &qf(100)?)?);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_batch, SynthConfig};

    fn corpus(n: usize) -> Vec<IntPlane> {
        synth_batch(n, 64, 64, 11, &SynthConfig::default()).unwrap()
    }

    #[test]
    fn row_rules() {
        assert!(CheckRow::new("a", 1.0, Rule::AtMost, 1.0, 1).passed());
        assert!(!CheckRow::new("a", 1.1, Rule::AtMost, 1.0, 1).passed());
        assert!(CheckRow::new("a", 0.9, Rule::AtLeast, 0.8, 1).passed());
        assert!(!CheckRow::new("a", f64::NAN, Rule::AtLeast, 0.8, 1).passed());
    }

    #[test]
    fn lattice_frequencies_are_rational() {
        let dct = crate::transform::Dct8::<f64>::new();
        for u in 0..BLOCK_LEN {
            let mut e = [0.0; BLOCK_LEN];
            e[u] = 1.0;
            let basis = dct.inverse(&e);
            let on_lattice = basis.iter().all(|b| (b.abs() - 0.125).abs() < 1e-12);
            assert_eq!(on_lattice, LATTICE_INDICES.contains(&u), "u = {u}");
        }
    }

    #[test]
    fn small_corpus_identities_and_bounds() {
        let imgs = corpus(3);
        let cfg = ModelCheckConfig::default();
        let id = identity_check(&imgs, &[QuantTable::constant(6).unwrap(); 3], &cfg).unwrap();
        assert!(id.passed(), "{id:?}");
        for r in variance_bound_checks(&imgs, &QuantTable::ijg_luminance(75).unwrap(), &cfg).unwrap() {
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn identical_tables_inherit_exactly() {
        let imgs = corpus(4);
        let r = inheritance_check(&imgs, &QuantTable::constant(3).unwrap(), 2, &ModelCheckConfig::default()).unwrap();
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(run_model_checks(&[], &ModelCheckConfig::default()).is_err());
        let bad = ModelCheckConfig { alpha: 0.0, ..Default::default() };
        assert!(matches!(run_model_checks(&corpus(1), &bad), Err(Error::Config(_))));
    }

    #[test]
    fn tampered_trace_fails_integrity() {
        let imgs = corpus(1);
        let mut t = run_cycles::<f64>(&imgs[0], &[QuantTable::constant(4).unwrap()], &CodecOptions::default()).unwrap();
        let cfg = ModelCheckConfig::default();
        assert!(trace_integrity_check("t", &t, &cfg).passed());
        t.cycles[0].dequantized.as_mut_slice()[5] += 1.0;
        let row = trace_integrity_check("t", &t, &cfg);
        assert!(!row.passed());
        assert!(row.detail.contains("integrity"));
    }
}
