//! Acceptance suite: one test per release gate, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them all).

use pvfcr::estimators::{cpo, hpd_interval};
use pvfcr::inference::{ModelKind, ObservedData, PriorSpec};
use pvfcr::model::{
    cure_rate, frailty_marginal_density, frailty_marginal_survival, population_density,
    population_survival, BaselineParams, CountingParams, FrailtyParams, ParamVector,
};
use pvfcr::sampler::{adaptive_metropolis, run_chain, MetropolisOptions, SamplerConfig};
use pvfcr::simgen::{generate_dataset, run_study, ScenarioSpec, StudyFitConfig};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn criterion(n: u32, label: &str, body: impl FnOnce() -> Result<String, String>) {
    match body() {
        Ok(detail) if detail.is_empty() => println!("[PASS] criterion {n}: {label}"),
        Ok(detail) => println!("[PASS] criterion {n}: {label} ({detail})"),
        Err(msg) => {
            println!("[FAIL] criterion {n}: {label}: {msg}");
            panic!("criterion {n} ({label}) failed: {msg}");
        }
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn pvfcr_params(
    alpha: f64,
    lambda: f64,
    gamma: f64,
    sigma2: f64,
    eta: f64,
    beta: Vec<f64>,
) -> ParamVector<f64> {
    ParamVector {
        baseline: BaselineParams { alpha, lambda },
        frailty: Some(FrailtyParams { gamma, sigma2 }),
        eta,
        beta,
    }
}

#[test]
fn criterion_1_closed_form_suite() {
    criterion(1, "closed-form survival, density, and cure rates", || {
        let b = BaselineParams { alpha: 0.0, lambda: 1.0 };
        let f = FrailtyParams { gamma: 0.5, sigma2: 1.0 };
        // hand oracle at t=1: inner term 3, prefactor 1
        let s_oracle = (1.0 - 3.0f64.sqrt()).exp();
        let f_oracle = 3.0f64.powf(-0.5) * s_oracle;
        let s = frailty_marginal_survival(1.0, &b, &f).map_err(|e| e.to_string())?;
        let d = frailty_marginal_density(1.0, &b, &f).map_err(|e| e.to_string())?;
        ensure((s - s_oracle).abs() < 1e-6, format!("survival {s} vs oracle {s_oracle}"))?;
        ensure((d - f_oracle).abs() < 1e-6, format!("density {d} vs oracle {f_oracle}"))?;

        let v = pvfcr_params(0.0, 1.0, 0.5, 1.0, 0.5, vec![-0.5, 0.7]);
        let p00 = cure_rate(&v, &[1.0, 0.0]);
        let p01 = cure_rate(&v, &[1.0, 1.0]);
        let p00_oracle = (1.0 + 0.5 * (-0.5f64).exp()).powf(-2.0);
        let p01_oracle = (1.0 + 0.5 * 0.2f64.exp()).powf(-2.0);
        ensure((p00 - p00_oracle).abs() < 1e-6, format!("p00 {p00} vs {p00_oracle}"))?;
        ensure((p01 - p01_oracle).abs() < 1e-6, format!("p01 {p01} vs {p01_oracle}"))?;
        // two-decimal reference values
        ensure((p00 - 0.59).abs() < 0.005, format!("p00 {p00} does not round to 0.59"))?;
        ensure((p01 - 0.39).abs() < 0.005, format!("p01 {p01} does not round to 0.39"))?;
        // population survival composes the counting layer with the
        // per-cause survival
        let s_pop = population_survival(1.0, &v, &[1.0, 0.0]).map_err(|e| e.to_string())?;
        let direct = (1.0 + 0.5 * (-0.5f64).exp() * (1.0 - s_oracle)).powf(-2.0);
        ensure((s_pop - direct).abs() < 1e-6, format!("S_pop {s_pop} vs {direct}"))?;
        Ok(format!("S={s:.6}, f={d:.6}, p00={p00:.4}, p01={p01:.4}"))
    });
}

#[test]
fn criterion_2_derivative_and_limit_suite() {
    criterion(2, "density equals the survival slope; limit branches", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let grid: Vec<f64> = (0..100)
            .map(|i| {
                let lo: f64 = 0.01;
                let hi: f64 = 2.0;
                (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / 99.0).exp()
            })
            .collect();
        for draw in 0..20 {
            let v = pvfcr_params(
                rng.random_range(-1.0..1.0),
                rng.random_range(0.6..1.8),
                rng.random_range(0.05..0.95),
                rng.random_range(0.1..2.0),
                rng.random_range(0.05..1.5),
                vec![rng.random_range(-1.0..1.0)],
            );
            let x = [1.0];
            for &t in &grid {
                let h = 1e-5 * t.max(1.0);
                let fd = (population_survival(t - h, &v, &x).map_err(|e| e.to_string())?
                    - population_survival(t + h, &v, &x).map_err(|e| e.to_string())?)
                    / (2.0 * h);
                let exact = population_density(t, &v, &x).map_err(|e| e.to_string())?;
                ensure(
                    ((fd - exact) / exact).abs() < 1e-6,
                    format!("draw {draw}, t={t}: fd={fd} vs density={exact}"),
                )?;
            }
        }

        // gamma -> 1e-6 reproduces the gamma-frailty closed form
        let b = BaselineParams { alpha: 0.3, lambda: 1.2 };
        for &t in &[0.2f64, 1.0, 2.5] {
            let sigma2: f64 = 0.8;
            let s = frailty_marginal_survival(t, &b, &FrailtyParams { gamma: 1e-6, sigma2 })
                .map_err(|e| e.to_string())?;
            let h0 = (0.3 + 1.2 * t.ln()).exp();
            let closed = (1.0 + sigma2 * h0).powf(-1.0 / sigma2);
            ensure(
                ((s - closed) / closed).abs() < 1e-5,
                format!("gamma limit at t={t}: {s} vs {closed}"),
            )?;
        }

        // sigma2 below threshold reproduces the no-frailty model
        let with = pvfcr_params(0.1, 1.4, 0.6, 1e-9, 0.7, vec![0.2]);
        let without = ParamVector { frailty: None, ..with.clone() };
        for &t in &[0.5, 1.5, 4.0] {
            let a = population_survival(t, &with, &[1.0]).map_err(|e| e.to_string())?;
            let b = population_survival(t, &without, &[1.0]).map_err(|e| e.to_string())?;
            ensure((a - b).abs() < 1e-8, format!("sigma2 limit at t={t}: {a} vs {b}"))?;
        }
        Ok("100-point grid x 20 draws, both limit branches".into())
    });
}

#[test]
fn criterion_3_generator_oracle() {
    criterion(3, "generator cure fractions and survival inversion", || {
        let s = ScenarioSpec::new(0.5, 1.0, 20_000, 1, 31);
        let truth = s.truth_params();
        let (_, latents) = generate_dataset(&s, 0).map_err(|e| e.to_string())?;
        let expected = [s.cure_rate_for_group(0), s.cure_rate_for_group(1)];
        let mut fractions = [0.0; 2];
        for level in [0u8, 1u8] {
            let (total, cured) = latents
                .group
                .iter()
                .zip(&latents.cured)
                .filter(|(g, _)| **g == level)
                .fold((0usize, 0usize), |(t, c), (_, cured)| (t + 1, c + usize::from(*cured)));
            let fraction = cured as f64 / total as f64;
            ensure(
                (fraction - expected[level as usize]).abs() < 0.01,
                format!(
                    "group {level} cure fraction {fraction} vs {}",
                    expected[level as usize]
                ),
            )?;
            fractions[level as usize] = fraction;
        }
        let mut events = 0;
        for i in 0..latents.cured.len() {
            if latents.cured[i] {
                continue;
            }
            let x = [1.0, f64::from(latents.group[i])];
            let back = population_survival(latents.true_times[i], &truth, &x)
                .map_err(|e| e.to_string())?;
            ensure(
                (back - latents.uniforms[i]).abs() < 1e-8,
                format!("round trip at unit {i}: {back} vs {}", latents.uniforms[i]),
            )?;
            events += 1;
        }
        ensure(events > 5000, format!("only {events} event times generated"))?;
        Ok(format!(
            "cure fractions {:.4}/{:.4} vs {:.4}/{:.4}, {events} round trips",
            fractions[0], fractions[1], expected[0], expected[1]
        ))
    });
}

/// Effective sample size via the initial-positive-sequence estimator.
fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let autocov = |k: usize| -> f64 {
        (0..n - k).map(|i| (x[i] - mean) * (x[i + k] - mean)).sum::<f64>() / n as f64
    };
    let c0 = autocov(0);
    if c0 == 0.0 {
        return n as f64;
    }
    let mut sigma2 = -c0;
    let mut j = 0;
    loop {
        if 2 * j + 1 >= n / 2 {
            break;
        }
        let gamma = autocov(2 * j) + autocov(2 * j + 1);
        if gamma <= 0.0 {
            break;
        }
        sigma2 += 2.0 * gamma;
        j += 1;
    }
    (n as f64 * c0 / sigma2.max(c0)).min(n as f64)
}

#[test]
fn criterion_4_sampler_oracle() {
    criterion(4, "known-target recovery and seed determinism", || {
        // standard normal target in two dimensions
        let target = |z: &[f64]| -0.5 * z.iter().map(|x| x * x).sum::<f64>();
        let opts = MetropolisOptions::new(50_000, 100, 10_000);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let raw = adaptive_metropolis(target, &[0.0, 0.0], &opts, &mut rng);
        let kept = &raw.states[10_000..];
        for dim in 0..2 {
            let coord: Vec<f64> = kept.iter().map(|s| s[dim]).collect();
            let n = coord.len() as f64;
            let mean = coord.iter().sum::<f64>() / n;
            let var = coord.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let ess = effective_sample_size(&coord);
            let tol = 3.0 / ess.sqrt();
            ensure(
                mean.abs() < tol,
                format!("normal mean[{dim}] = {mean}, tolerance {tol} (ESS {ess:.0})"),
            )?;
            ensure((var - 1.0).abs() < 0.15, format!("normal var[{dim}] = {var}"))?;
        }

        // conjugate check: exponential rate with a gamma prior
        let mut data_rng = ChaCha8Rng::seed_from_u64(5);
        let rate_true = 2.0;
        let n_obs = 40;
        let y: Vec<f64> =
            (0..n_obs).map(|_| -(1.0 - data_rng.random::<f64>()).ln() / rate_true).collect();
        let (a, b) = (2.0, 1.0);
        let sum_y: f64 = y.iter().sum();
        let post_shape = a + n_obs as f64;
        let post_rate = b + sum_y;
        let conjugate_target = move |z: &[f64]| {
            let rate = z[0];
            if rate <= 0.0 {
                f64::NEG_INFINITY
            } else {
                (post_shape - 1.0) * rate.ln() - post_rate * rate
            }
        };
        let opts = MetropolisOptions::new(60_000, 100, 10_000);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let raw = adaptive_metropolis(conjugate_target, &[1.0], &opts, &mut rng);
        let kept: Vec<f64> = raw.states[10_000..].iter().map(|s| s[0]).collect();
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        let exact_mean = post_shape / post_rate;
        let exact_sd = post_shape.sqrt() / post_rate;
        let ess = effective_sample_size(&kept);
        let tol = 3.0 * exact_sd / ess.sqrt();
        ensure(
            (mean - exact_mean).abs() < tol,
            format!("conjugate mean {mean} vs {exact_mean}, tolerance {tol} (ESS {ess:.0})"),
        )?;

        // bit-exact seed determinism of the full pipeline
        let s = ScenarioSpec::new(0.5, 1.0, 40, 1, 8);
        let (data, _) = generate_dataset(&s, 0).map_err(|e| e.to_string())?;
        let cfg = SamplerConfig {
            total_iterations: 2000,
            burn_in: 500,
            thin: 5,
            adapt_interval: 100,
            seed: 11,
            init: None,
        };
        let c1 = run_chain(&data, &PriorSpec::default(), ModelKind::Pvfcr, &cfg)
            .map_err(|e| e.to_string())?;
        let c2 = run_chain(&data, &PriorSpec::default(), ModelKind::Pvfcr, &cfg)
            .map_err(|e| e.to_string())?;
        ensure(c1 == c2, "same seed did not reproduce the chain bit-exactly")?;
        Ok(format!("conjugate mean {mean:.5} vs exact {exact_mean:.5}"))
    });
}

#[test]
fn criterion_5_reduced_scale_recovery() {
    criterion(5, "cure-rate recovery on the reduced-scale study", || {
        let scenario = ScenarioSpec::new(0.1, 0.5, 300, 50, 50);
        let fit = StudyFitConfig::desk_scale();
        let result = run_study(&scenario, &fit).map_err(|e| e.to_string())?;
        ensure(result.failures.is_empty(), format!("{} replicates failed", result.failures.len()))?;
        let mut detail = Vec::new();
        for model in [ModelKind::Pvfcr, ModelKind::Cr] {
            let p00 = result.row(model, "p00").ok_or("missing p00 row")?.ae;
            let p01 = result.row(model, "p01").ok_or("missing p01 row")?.ae;
            ensure(
                (0.53..=0.64).contains(&p00),
                format!("{model} AE(p00) = {p00} outside [0.53, 0.64]"),
            )?;
            ensure(
                (0.34..=0.45).contains(&p01),
                format!("{model} AE(p01) = {p01} outside [0.34, 0.45]"),
            )?;
            detail.push(format!("{model} AE(p00)={p00:.3} AE(p01)={p01:.3}"));
        }
        Ok(detail.join("; "))
    });
}

#[test]
fn criterion_6_cpo_sign_property() {
    criterion(6, "CPO mean difference sign across frailty regimes", || {
        let fit = StudyFitConfig::desk_scale();
        let low_gamma = ScenarioSpec::new(0.1, 2.0, 300, 30, 60);
        let low = run_study(&low_gamma, &fit).map_err(|e| e.to_string())?;
        ensure(
            low.cpo_diff_mean > 0.0,
            format!("gamma=0.1, sigma2=2: CPO mean difference {} <= 0", low.cpo_diff_mean),
        )?;
        let high_gamma = ScenarioSpec::new(0.9, 2.0, 300, 30, 61);
        let high = run_study(&high_gamma, &fit).map_err(|e| e.to_string())?;
        ensure(
            high.cpo_diff_mean < 0.0,
            format!("gamma=0.9, sigma2=2: CPO mean difference {} >= 0", high.cpo_diff_mean),
        )?;
        Ok(format!(
            "gamma=0.1 diff {:.3} (sd {:.3}), gamma=0.9 diff {:.3} (sd {:.3})",
            low.cpo_diff_mean, low.cpo_diff_sd, high.cpo_diff_mean, high.cpo_diff_sd
        ))
    });
}

#[test]
fn criterion_7_estimator_algebra() {
    criterion(7, "CPO, HPD, Jensen, and RMSE identities", || {
        // harmonic-mean arithmetic through the public CPO path: constant
        // two-draw chain on one censored observation
        let v = pvfcr_params(0.0, 1.0, 0.5, 1.0, 0.5, vec![-0.5]);
        let d = ObservedData::new(
            vec![1.3, 0.6],
            vec![false, true],
            vec![vec![1.0], vec![1.0]],
            vec!["intercept".into()],
        )
        .map_err(|e| e.to_string())?;
        let chain = pvfcr::sampler::ChainResult {
            kind: ModelKind::Pvfcr,
            param_names: vec![],
            draws: vec![v.clone(), v.clone()],
            iterations: vec![1, 2],
            log_posterior_trace: vec![0.0, 0.0],
            acceptance_rate: 0.3,
            geweke_z: 0.0,
            seed: 0,
        };
        let report = cpo(&chain, &d).map_err(|e| e.to_string())?;
        let s = population_survival(1.3, &v, &[1.0]).map_err(|e| e.to_string())?;
        ensure(
            (report.per_observation[0] - s).abs() < 1e-12,
            "degenerate CPO is not the survival value",
        )?;
        // harmonic mean of {0.5, 0.25} is 1/3
        let hm: f64 = 2.0 / (1.0 / 0.5 + 1.0 / 0.25);
        ensure((hm - 1.0 / 3.0).abs() < 1e-15, "harmonic-mean arithmetic")?;
        // Jensen ordering on a mixed chain
        let chain2 = pvfcr::sampler::ChainResult {
            draws: vec![
                v.clone(),
                pvfcr_params(0.4, 1.5, 0.3, 0.4, 0.9, vec![-0.1]),
                pvfcr_params(-0.3, 0.8, 0.7, 1.6, 0.3, vec![-0.9]),
            ],
            ..chain.clone()
        };
        let report2 = cpo(&chain2, &d).map_err(|e| e.to_string())?;
        for i in 0..d.m() {
            let mut arithmetic = 0.0;
            for draw in &chain2.draws {
                let g = if d.events()[i] {
                    population_density(d.times()[i], draw, d.row(i)).map_err(|e| e.to_string())?
                } else {
                    population_survival(d.times()[i], draw, d.row(i)).map_err(|e| e.to_string())?
                };
                arithmetic += g;
            }
            arithmetic /= chain2.draws.len() as f64;
            ensure(
                report2.per_observation[i] <= arithmetic + 1e-12,
                format!("Jensen ordering violated at observation {i}"),
            )?;
        }

        // HPD against an exhaustive window search on 1000-point samples
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..5 {
            let sample: Vec<f64> = (0..1000)
                .map(|_| {
                    let u: f64 = rng.random();
                    match case % 3 {
                        0 => u * u,                     // right-skewed
                        1 => -(1.0 - u).ln(),           // exponential-ish
                        _ => u + rng.random::<f64>(),   // triangular
                    }
                })
                .collect();
            let (lo, hi) = hpd_interval(&sample, 0.95).map_err(|e| e.to_string())?;
            let mut sorted = sample.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let w = 950;
            let mut best = (sorted[0], sorted[w - 1]);
            for i in 1..=(sorted.len() - w) {
                if sorted[i + w - 1] - sorted[i] < best.1 - best.0 {
                    best = (sorted[i], sorted[i + w - 1]);
                }
            }
            ensure(
                (lo, hi) == best,
                format!("case {case}: hpd ({lo}, {hi}) vs exhaustive {best:?}"),
            )?;
        }

        // RMSE^2 = variance + squared bias over the replicate log
        let s = ScenarioSpec::new(0.5, 1.0, 40, 5, 73);
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
        let study = run_study(&s, &fit).map_err(|e| e.to_string())?;
        let truth_of = |name: &str| -> Option<f64> {
            Some(match name {
                "alpha" => s.truth.alpha,
                "lambda" => s.truth.lambda,
                "gamma" => s.gamma,
                "sigma2" => s.sigma2,
                "eta" => s.truth.eta,
                "beta0" => s.truth.beta0,
                "beta_x" => s.truth.beta1,
                "p00" => {
                    CountingParams { eta: s.truth.eta, theta: s.truth.beta0.exp() }
                        .log_cure_rate()
                        .exp()
                }
                "p01" => CountingParams {
                    eta: s.truth.eta,
                    theta: (s.truth.beta0 + s.truth.beta1).exp(),
                }
                .log_cure_rate()
                .exp(),
                _ => return None,
            })
        };
        let mut checked = 0;
        for row in &study.rows {
            let Some(truth) = truth_of(&row.parameter) else { continue };
            let values: Vec<f64> = study
                .replicates
                .iter()
                .flat_map(|r| {
                    r.estimates
                        .iter()
                        .filter(|(k, n, _)| *k == row.model && *n == row.parameter)
                        .map(|(_, _, val)| *val)
                })
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let variance =
                values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / values.len() as f64;
            let identity = variance + (row.ae - truth).powi(2);
            ensure(
                (row.rmse.powi(2) - identity).abs() <= 1e-10 * identity.abs().max(1e-300),
                format!(
                    "bias-variance identity failed for {} {}: rmse^2={} vs var+bias^2={identity}",
                    row.model,
                    row.parameter,
                    row.rmse.powi(2)
                ),
            )?;
            checked += 1;
        }
        ensure(checked >= 10, format!("only {checked} identity rows checked"))?;
        Ok(format!("{checked} bias-variance rows, 5 HPD oracle samples"))
    });
}
