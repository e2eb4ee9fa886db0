//! Synthetic data generation and the simulation-study harness.
//!
//! One dataset is drawn per unit as: a Bernoulli(0.5) covariate and a
//! uniform `u`; units with `u` below the group cure rate are cured (event
//! time infinite), the rest get the event time that inverts the population
//! survival at `u`. An exponential censoring time with a rate tied to the
//! group cure rates is drawn for everyone, and the observed pair is
//! `(min(t, c), t < c)`.
//!
//! The study harness fits both models to each replicate, collects the
//! posterior-mean estimates and CPO totals, and aggregates the average
//! estimate (AE) and root mean squared error (RMSE) per parameter together
//! with the mean and sd of the per-replicate CPO difference.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{cpo, cure_rate_estimate, posterior_mean};
use crate::inference::{ModelKind, ObservedData, PriorSpec};
use crate::model::{
    BaselineParams, CountingParams, FrailtyParams, ParamVector, ETA_LIMIT_THRESHOLD,
    GAMMA_LIMIT_THRESHOLD, SIGMA2_LIMIT_THRESHOLD,
};
use crate::sampler::{derive_seed, run_chain, SamplerConfig};

/// Generating truth shared by every scenario cell: exponential baseline,
/// moderate dispersion, and a single binary covariate effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthParams {
    pub alpha: f64,
    pub lambda: f64,
    pub eta: f64,
    pub beta0: f64,
    pub beta1: f64,
}

impl Default for TruthParams {
    fn default() -> Self {
        TruthParams { alpha: 0.0, lambda: 1.0, eta: 0.5, beta0: -0.5, beta1: 0.7 }
    }
}

/// One simulation cell: frailty parameters, sample size, replicate count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub gamma: f64,
    pub sigma2: f64,
    /// Units per dataset.
    pub m: usize,
    /// Number of replicate datasets.
    pub replicates: usize,
    pub truth: TruthParams,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(gamma: f64, sigma2: f64, m: usize, replicates: usize, seed: u64) -> Self {
        ScenarioSpec { gamma, sigma2, m, replicates, truth: TruthParams::default(), seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) || !(self.sigma2 >= 0.0) {
            return Err(Error::Validation(format!(
                "scenario requires gamma in (0,1) and sigma2 >= 0, got gamma={}, sigma2={}",
                self.gamma, self.sigma2
            )));
        }
        if self.m == 0 || self.replicates == 0 {
            return Err(Error::Validation("scenario requires m >= 1 and replicates >= 1".into()));
        }
        Ok(())
    }

    /// Generating parameter vector (always the frailty model).
    pub fn truth_params(&self) -> ParamVector<f64> {
        ParamVector {
            baseline: BaselineParams { alpha: self.truth.alpha, lambda: self.truth.lambda },
            frailty: Some(FrailtyParams { gamma: self.gamma, sigma2: self.sigma2 }),
            eta: self.truth.eta,
            beta: vec![self.truth.beta0, self.truth.beta1],
        }
    }

    /// True cure rate for covariate level `l` (0 or 1).
    pub fn cure_rate_for_group(&self, level: u8) -> f64 {
        let theta = (self.truth.beta0 + f64::from(level) * self.truth.beta1).exp();
        CountingParams { eta: self.truth.eta, theta }.log_cure_rate().exp()
    }
}

/// Latent generation record kept beside each dataset for validation; never
/// shown to the fitter.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedLatents {
    /// Unit is immune (`t_i` infinite).
    pub cured: Vec<bool>,
    /// True event times, `inf` for cured units.
    pub true_times: Vec<f64>,
    /// Uniform draws that produced the cure decisions and event times.
    pub uniforms: Vec<f64>,
    /// Covariate level per unit.
    pub group: Vec<u8>,
}

/// Event time solving `S_pop(t) = u` for the generating parameters, i.e. the
/// closed-form inverse of the population survival. Requires `u` above the
/// cure rate for this `theta`; below it the survival never reaches `u`.
pub fn invert_population_survival(u: f64, v: &ParamVector<f64>, theta: f64) -> Result<f64> {
    let eta = v.eta;
    // per-cause survival s with S_pop(t) = u:
    // 1 - s = (u^-eta - 1) / (eta * theta), Poisson limit -ln(u)/theta
    let one_minus_s = if eta < ETA_LIMIT_THRESHOLD {
        -u.ln() / theta
    } else {
        (-eta * u.ln()).exp_m1() / (eta * theta)
    };
    let s = 1.0 - one_minus_s;
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Numerical(format!(
            "population survival inversion left (0,1]: u={u}, theta={theta} gives s={s}"
        )));
    }
    // cumulative hazard with per-cause survival s
    let log_s = s.ln();
    let h0 = match &v.frailty {
        None => -log_s,
        Some(fr) if fr.sigma2 < SIGMA2_LIMIT_THRESHOLD => -log_s,
        Some(fr) if fr.gamma < GAMMA_LIMIT_THRESHOLD => {
            // gamma-frailty: s = (1 + sigma2*H0)^(-1/sigma2)
            (-fr.sigma2 * log_s).exp_m1() / fr.sigma2
        }
        Some(fr) => {
            let pre = (1.0 - fr.gamma) / fr.sigma2;
            pre * ((-fr.gamma / pre * log_s).ln_1p() / fr.gamma).exp_m1()
        }
    };
    // invert the Weibull cumulative hazard
    Ok(((h0.ln() - v.baseline.alpha) / v.baseline.lambda).exp())
}

/// Censoring rate used in the study: `exp(eta) * d / (1 - d)` with
/// `d = 0.01`, the offset between the target censored-survival level and the
/// cure rate.
pub fn censoring_rate(eta: f64) -> f64 {
    let d = 0.01;
    eta.exp() * d / (1.0 - d)
}

/// Draw one replicate dataset. `(seed, replicate)` fully determine the
/// output.
pub fn generate_dataset(
    s: &ScenarioSpec,
    replicate: usize,
) -> Result<(ObservedData<f64>, GeneratedLatents)> {
    s.validate()?;
    let truth = s.truth_params();
    let tau = censoring_rate(s.truth.eta);
    let censoring = Exp::new(tau)
        .map_err(|e| Error::Validation(format!("invalid censoring rate {tau}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(s.seed, replicate as u64));

    let p0 = [s.cure_rate_for_group(0), s.cure_rate_for_group(1)];
    let theta = [s.truth.beta0.exp(), (s.truth.beta0 + s.truth.beta1).exp()];

    let m = s.m;
    let mut times = Vec::with_capacity(m);
    let mut events = Vec::with_capacity(m);
    let mut design = Vec::with_capacity(m);
    let mut cured = Vec::with_capacity(m);
    let mut true_times = Vec::with_capacity(m);
    let mut uniforms = Vec::with_capacity(m);
    let mut group = Vec::with_capacity(m);

    for _ in 0..m {
        let level: u8 = if rng.random::<f64>() < 0.5 { 0 } else { 1 };
        let u: f64 = rng.random();
        let is_cured = u < p0[level as usize];
        let t = if is_cured {
            f64::INFINITY
        } else {
            invert_population_survival(u, &truth, theta[level as usize])?
        };
        let c: f64 = censoring.sample(&mut rng);
        let observed = t.min(c);
        times.push(observed);
        events.push(t < c);
        design.push(vec![1.0, f64::from(level)]);
        cured.push(is_cured);
        true_times.push(t);
        uniforms.push(u);
        group.push(level);
    }

    let data = ObservedData::new(times, events, design, vec!["intercept".into(), "x".into()])?;
    Ok((data, GeneratedLatents { cured, true_times, uniforms, group }))
}

/// Chain settings for the two model fits inside a study; the per-replicate
/// seeds are derived from the scenario seed, overriding the ones here.
#[derive(Debug, Clone)]
pub struct StudyFitConfig {
    pub pvfcr: SamplerConfig,
    pub cr: SamplerConfig,
    pub prior: PriorSpec<f64>,
}

impl StudyFitConfig {
    /// Reference chain lengths for both models.
    pub fn reference() -> Self {
        StudyFitConfig {
            pvfcr: SamplerConfig::reference(ModelKind::Pvfcr, 0),
            cr: SamplerConfig::reference(ModelKind::Cr, 0),
            prior: PriorSpec::default(),
        }
    }

    /// Shortened chains for desk-scale runs.
    pub fn desk_scale() -> Self {
        let pvfcr = SamplerConfig {
            total_iterations: 8000,
            burn_in: 2000,
            thin: 6,
            adapt_interval: 100,
            seed: 0,
            init: None,
        };
        let cr = SamplerConfig { thin: 6, ..pvfcr.clone() };
        StudyFitConfig { pvfcr, cr, prior: PriorSpec::default() }
    }
}

/// Per-replicate audit record.
#[derive(Debug, Clone)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub censoring_fraction: f64,
    /// `(model, parameter, estimate)` rows.
    pub estimates: Vec<(ModelKind, String, f64)>,
    pub cpo_pvfcr: f64,
    pub cpo_cr: f64,
}

/// One aggregated study row.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub model: ModelKind,
    pub parameter: String,
    /// Average of the replicate estimates.
    pub ae: f64,
    /// Root mean squared error against the generating truth.
    pub rmse: f64,
}

/// Study output: AE/RMSE per parameter and model, CPO-difference summary,
/// and the per-replicate audit log.
#[derive(Debug, Clone)]
pub struct StudyResult {
    pub scenario: ScenarioSpec,
    pub rows: Vec<AggregateRow>,
    /// Mean over replicates of `CPO_PVFCR - CPO_CR`.
    pub cpo_diff_mean: f64,
    pub cpo_diff_sd: f64,
    pub replicates: Vec<ReplicateRecord>,
    /// `(replicate, error)` for failed replicates, excluded from aggregates.
    pub failures: Vec<(usize, String)>,
}

impl StudyResult {
    pub fn row(&self, model: ModelKind, parameter: &str) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.model == model && r.parameter == parameter)
    }
}

fn fit_one(
    data: &ObservedData<f64>,
    prior: &PriorSpec<f64>,
    kind: ModelKind,
    template: &SamplerConfig,
    seed: u64,
) -> Result<(Vec<(ModelKind, String, f64)>, f64)> {
    let cfg = SamplerConfig { seed, init: None, ..template.clone() };
    let chain = run_chain(data, prior, kind, &cfg)?;
    let mean = posterior_mean(&chain)?;
    let mut rows: Vec<(ModelKind, String, f64)> = chain
        .param_names
        .iter()
        .cloned()
        .zip(mean.flat_coordinates())
        .map(|(name, value)| (kind, name, value))
        .collect();
    let p00 = cure_rate_estimate(&chain, &[1.0, 0.0], 0.95)?.mean;
    let p01 = cure_rate_estimate(&chain, &[1.0, 1.0], 0.95)?.mean;
    rows.push((kind, "p00".into(), p00));
    rows.push((kind, "p01".into(), p01));
    let cpo_total = cpo(&chain, data)?.total_log;
    Ok((rows, cpo_total))
}

/// Run the full study for one scenario: generate, fit both models, and
/// aggregate. Replicates run in parallel with deterministic per-replicate
/// seeds, so the result does not depend on the worker count.
pub fn run_study(s: &ScenarioSpec, fit: &StudyFitConfig) -> Result<StudyResult> {
    s.validate()?;
    fit.prior.validate()?;
    fit.pvfcr.validate()?;
    fit.cr.validate()?;

    let outcomes: Vec<(usize, Result<ReplicateRecord>)> = (0..s.replicates)
        .into_par_iter()
        .map(|rep| {
            let run = || -> Result<ReplicateRecord> {
                let (data, _latents) = generate_dataset(s, rep)?;
                let seed_pvfcr = derive_seed(s.seed, (1u64 << 32) | rep as u64);
                let seed_cr = derive_seed(s.seed, (2u64 << 32) | rep as u64);
                let (mut estimates, cpo_pvfcr) =
                    fit_one(&data, &fit.prior, ModelKind::Pvfcr, &fit.pvfcr, seed_pvfcr)?;
                let (cr_rows, cpo_cr) =
                    fit_one(&data, &fit.prior, ModelKind::Cr, &fit.cr, seed_cr)?;
                estimates.extend(cr_rows);
                Ok(ReplicateRecord {
                    replicate: rep,
                    censoring_fraction: data.censoring_fraction(),
                    estimates,
                    cpo_pvfcr,
                    cpo_cr,
                })
            };
            (rep, run())
        })
        .collect();

    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for (rep, outcome) in outcomes {
        match outcome {
            Ok(record) => replicates.push(record),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    if replicates.is_empty() {
        return Err(Error::Numerical("every replicate failed".into()));
    }

    // truth per reported parameter
    let truth_of = |name: &str| -> Option<f64> {
        Some(match name {
            "alpha" => s.truth.alpha,
            "lambda" => s.truth.lambda,
            "gamma" => s.gamma,
            "sigma2" => s.sigma2,
            "eta" => s.truth.eta,
            "beta0" => s.truth.beta0,
            "beta_x" => s.truth.beta1,
            "p00" => s.cure_rate_for_group(0),
            "p01" => s.cure_rate_for_group(1),
            _ => return None,
        })
    };

    let mut rows = Vec::new();
    let first = &replicates[0];
    for (model, name, _) in &first.estimates {
        let values: Vec<f64> = replicates
            .iter()
            .flat_map(|r| {
                r.estimates
                    .iter()
                    .filter(|(k, n, _)| k == model && n == name)
                    .map(|(_, _, v)| *v)
            })
            .collect();
        let ae = values.iter().sum::<f64>() / values.len() as f64;
        let rmse = truth_of(name).map_or(f64::NAN, |t| {
            (values.iter().map(|v| (v - t).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
        });
        rows.push(AggregateRow { model: *model, parameter: name.clone(), ae, rmse });
    }

    let diffs: Vec<f64> = replicates.iter().map(|r| r.cpo_pvfcr - r.cpo_cr).collect();
    let cpo_diff_mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let cpo_diff_sd = if diffs.len() < 2 {
        0.0
    } else {
        (diffs.iter().map(|d| (d - cpo_diff_mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64)
            .sqrt()
    };

    Ok(StudyResult { scenario: *s, rows, cpo_diff_mean, cpo_diff_sd, replicates, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::population_survival;

    #[test]
    fn censoring_rate_is_verbatim_formula() {
        let eta: f64 = 0.5;
        assert!((censoring_rate(eta) - eta.exp() * 0.01 / 0.99).abs() < 1e-15);
    }

    #[test]
    fn cure_rates_match_reference_values() {
        let s = ScenarioSpec::new(0.5, 1.0, 10, 1, 0);
        assert!((s.cure_rate_for_group(0) - 0.5888).abs() < 1e-4);
        assert!((s.cure_rate_for_group(1) - 0.3855).abs() < 1e-4);
    }

    #[test]
    fn cured_units_are_censored() {
        let s = ScenarioSpec::new(0.5, 1.0, 500, 1, 11);
        let (data, latents) = generate_dataset(&s, 0).unwrap();
        assert_eq!(data.m(), 500);
        let mut saw_cured = false;
        for i in 0..data.m() {
            if latents.cured[i] {
                saw_cured = true;
                assert!(latents.true_times[i].is_infinite());
                assert!(!data.events()[i]);
                assert!(data.times()[i].is_finite());
            }
        }
        assert!(saw_cured);
        // event fraction strictly below 1 - min cure rate
        let event_fraction = data.n_events() as f64 / data.m() as f64;
        assert!(event_fraction < 1.0 - s.cure_rate_for_group(1));
    }

    #[test]
    fn generation_is_deterministic_per_replicate() {
        let s = ScenarioSpec::new(0.1, 2.0, 50, 3, 123);
        let (a, la) = generate_dataset(&s, 1).unwrap();
        let (b, lb) = generate_dataset(&s, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        let (c, _) = generate_dataset(&s, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn event_times_invert_population_survival() {
        // round trip S_pop(t_i) = u_i for non-cured units
        let s = ScenarioSpec::new(0.5, 1.0, 400, 1, 7);
        let truth = s.truth_params();
        let (_, latents) = generate_dataset(&s, 0).unwrap();
        let mut checked = 0;
        for i in 0..latents.cured.len() {
            if latents.cured[i] {
                continue;
            }
            let x = [1.0, f64::from(latents.group[i])];
            let back = population_survival(latents.true_times[i], &truth, &x).unwrap();
            assert!(
                (back - latents.uniforms[i]).abs() < 1e-8,
                "round trip failed at unit {i}: {back} vs {}",
                latents.uniforms[i]
            );
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn inversion_agrees_with_hand_derivation_at_inverse_gaussian_point() {
        // gamma = 0.5, sigma2 = 1, alpha = 0, lambda = 1, eta = 0.5:
        // s = 1 - (u^-0.5 - 1)/(0.5 theta)
        // H0 = (1-g)/s2 * ((1 - g*s2/(1-g) * ln s)^(1/g) - 1)
        //    = 0.5 * ((1 - ln s)^2 - 1), and t = H0.
        let truth = ScenarioSpec::new(0.5, 1.0, 1, 1, 0).truth_params();
        let theta = (-0.5f64).exp();
        let u: f64 = 0.8;
        let s = 1.0 - (u.powf(-0.5) - 1.0) / (0.5 * theta);
        let expected = 0.5 * ((1.0 - s.ln()).powi(2) - 1.0);
        let got = invert_population_survival(u, &truth, theta).unwrap();
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn inversion_rejects_cured_region() {
        let s = ScenarioSpec::new(0.5, 1.0, 1, 1, 0);
        let truth = s.truth_params();
        let theta = (-0.5f64).exp();
        // u below the cure rate has no finite solution
        assert!(invert_population_survival(0.1, &truth, theta).is_err());
    }

    #[test]
    fn empirical_cure_fraction_tracks_truth() {
        let s = ScenarioSpec::new(0.5, 1.0, 20_000, 1, 99);
        let (_, latents) = generate_dataset(&s, 0).unwrap();
        for level in [0u8, 1u8] {
            let in_group: Vec<bool> = latents
                .group
                .iter()
                .zip(&latents.cured)
                .filter(|(g, _)| **g == level)
                .map(|(_, c)| *c)
                .collect();
            let fraction =
                in_group.iter().filter(|&&c| c).count() as f64 / in_group.len() as f64;
            let expected = s.cure_rate_for_group(level);
            assert!(
                (fraction - expected).abs() < 0.01,
                "group {level}: {fraction} vs {expected}"
            );
        }
    }

    #[test]
    fn kaplan_meier_band_on_large_sample() {
        // product-limit estimate on one large dataset stays within a 0.02
        // band of the generating population survival, up to the 99th
        // percentile of event times
        let s = ScenarioSpec::new(0.5, 1.0, 20_000, 1, 5);
        let truth = s.truth_params();
        let (data, _) = generate_dataset(&s, 0).unwrap();

        // pool both covariate groups with their own survival curves:
        // evaluate the mixture 0.5 * S(t|x=0) + 0.5 * S(t|x=1) pointwise via
        // the realized group shares
        let m = data.m();
        let n1: usize = (0..m).map(|i| (data.row(i)[1] as usize)).sum();
        let w1 = n1 as f64 / m as f64;

        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| data.times()[a].partial_cmp(&data.times()[b]).unwrap());

        let mut event_times: Vec<f64> =
            (0..m).filter(|&i| data.events()[i]).map(|i| data.times()[i]).collect();
        event_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let t99 = event_times[(0.99 * event_times.len() as f64) as usize];

        let mut at_risk = m as f64;
        let mut km = 1.0;
        let mut max_gap: f64 = 0.0;
        for &i in &order {
            let t = data.times()[i];
            if t > t99 {
                break;
            }
            if data.events()[i] {
                km *= 1.0 - 1.0 / at_risk;
            }
            at_risk -= 1.0;
            let model = (1.0 - w1) * population_survival(t, &truth, &[1.0, 0.0]).unwrap()
                + w1 * population_survival(t, &truth, &[1.0, 1.0]).unwrap();
            max_gap = max_gap.max((km - model).abs());
        }
        assert!(max_gap < 0.02, "uniform band exceeded: {max_gap}");
    }

    #[test]
    fn study_single_replicate_degenerate_aggregates() {
        let s = ScenarioSpec::new(0.5, 1.0, 60, 1, 3);
        let fit = StudyFitConfig {
            pvfcr: SamplerConfig {
                total_iterations: 800,
                burn_in: 200,
                thin: 3,
                adapt_interval: 100,
                seed: 0,
                init: None,
            },
            cr: SamplerConfig {
                total_iterations: 800,
                burn_in: 200,
                thin: 3,
                adapt_interval: 100,
                seed: 0,
                init: None,
            },
            prior: PriorSpec::default(),
        };
        let result = run_study(&s, &fit).unwrap();
        assert!(result.failures.is_empty());
        assert_eq!(result.replicates.len(), 1);
        // AE equals the single estimate, RMSE its absolute error
        let row = result.row(ModelKind::Pvfcr, "lambda").unwrap();
        let est = result.replicates[0]
            .estimates
            .iter()
            .find(|(k, n, _)| *k == ModelKind::Pvfcr && n == "lambda")
            .unwrap()
            .2;
        assert!((row.ae - est).abs() < 1e-12);
        assert!((row.rmse - (est - 1.0).abs()).abs() < 1e-12);
        assert_eq!(result.cpo_diff_sd, 0.0);
        // CR rows do not include frailty parameters
        assert!(result.row(ModelKind::Cr, "gamma").is_none());
        assert!(result.row(ModelKind::Cr, "p00").is_some());
    }

    #[test]
    fn study_rmse_satisfies_bias_variance_identity() {
        let s = ScenarioSpec::new(0.1, 0.5, 50, 4, 21);
        let fit = StudyFitConfig {
            pvfcr: SamplerConfig {
                total_iterations: 600,
                burn_in: 200,
                thin: 2,
                adapt_interval: 100,
                seed: 0,
                init: None,
            },
            cr: SamplerConfig {
                total_iterations: 600,
                burn_in: 200,
                thin: 2,
                adapt_interval: 100,
                seed: 0,
                init: None,
            },
            prior: PriorSpec::default(),
        };
        let result = run_study(&s, &fit).unwrap();
        for (model, name) in [(ModelKind::Pvfcr, "p00"), (ModelKind::Cr, "eta")] {
            let values: Vec<f64> = result
                .replicates
                .iter()
                .flat_map(|r| {
                    r.estimates
                        .iter()
                        .filter(|(k, n, _)| *k == model && n == name)
                        .map(|(_, _, v)| *v)
                })
                .collect();
            let row = result.row(model, name).unwrap();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let variance =
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
            let truth = match name {
                "p00" => s.cure_rate_for_group(0),
                "eta" => s.truth.eta,
                _ => unreachable!(),
            };
            let identity = variance + (row.ae - truth).powi(2);
            assert!(
                (row.rmse.powi(2) - identity).abs() <= 1e-10 * identity.max(1e-300),
                "bias-variance identity broken for {name}"
            );
        }
    }

    #[test]
    fn study_is_deterministic() {
        let s = ScenarioSpec::new(0.5, 1.5, 40, 2, 77);
        let fit = StudyFitConfig {
            pvfcr: SamplerConfig {
                total_iterations: 400,
                burn_in: 100,
                thin: 3,
                adapt_interval: 100,
                seed: 0,
                init: None,
            },
            cr: SamplerConfig {
                total_iterations: 400,
                burn_in: 100,
                thin: 3,
                adapt_interval: 100,
                seed: 0,
                init: None,
            },
            prior: PriorSpec::default(),
        };
        let a = run_study(&s, &fit).unwrap();
        let b = run_study(&s, &fit).unwrap();
        assert_eq!(a.cpo_diff_mean, b.cpo_diff_mean);
        assert_eq!(a.rows, b.rows);
    }
}
