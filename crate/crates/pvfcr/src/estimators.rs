//! Posterior summaries computed from a thinned chain: coordinatewise means,
//! per-profile cure rates with HPD intervals, improper survival curves, and
//! CPO model comparison.
//!
//! Averaging happens on the original parameter scale even though sampling
//! used transformed coordinates. All estimators are plain reductions over the
//! draws and are invariant to their order.

use crate::error::{Error, Result};
use crate::inference::ObservedData;
use crate::model::{cure_rate, log_population_density, log_population_survival, ParamVector};
use crate::real::Real;
use crate::sampler::ChainResult;

/// Pointwise posterior-mean estimate of the improper population survival on
/// a time grid, for one covariate profile.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SurvivalCurve {
    pub time_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Covariate row the curve conditions on (including intercept).
    pub profile: Vec<f64>,
}

/// Conditional predictive ordinates: one `CPO_i` per observation and the
/// summed log used for model comparison (larger is better).
#[derive(Debug, Clone, PartialEq)]
pub struct CpoReport {
    /// `CPO_i` per observation; `NaN` for flagged observations.
    pub per_observation: Vec<f64>,
    /// Sum of `log CPO_i` over non-flagged observations.
    pub total_log: f64,
    /// Observations whose predictive density was zero or non-finite for some
    /// draw; excluded from `total_log` rather than silently dropped.
    pub flagged: Vec<usize>,
}

/// Posterior mean and HPD interval of a scalar derived quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEstimate {
    pub mean: f64,
    pub hpd_lower: f64,
    pub hpd_upper: f64,
}

/// Coordinatewise posterior mean on the original parameter scale.
pub fn posterior_mean(chain: &ChainResult) -> Result<ParamVector<f64>> {
    if chain.draws.is_empty() {
        return Err(Error::Validation("chain has no draws".into()));
    }
    let mut acc = chain.draws[0].flat_coordinates();
    for v in &chain.draws[1..] {
        for (a, c) in acc.iter_mut().zip(v.flat_coordinates()) {
            *a += c;
        }
    }
    let n = chain.draws.len() as f64;
    for a in &mut acc {
        *a /= n;
    }
    ParamVector::from_flat_coordinates(chain.kind, &acc)
}

/// Posterior standard deviation of each flat coordinate (sample sd, n-1).
pub fn posterior_sd(chain: &ChainResult) -> Result<Vec<f64>> {
    let mean = posterior_mean(chain)?.flat_coordinates();
    let n = chain.draws.len();
    if n < 2 {
        return Ok(vec![0.0; mean.len()]);
    }
    let mut acc = vec![0.0; mean.len()];
    for v in &chain.draws {
        for ((a, c), m) in acc.iter_mut().zip(v.flat_coordinates()).zip(&mean) {
            *a += (c - m) * (c - m);
        }
    }
    Ok(acc.into_iter().map(|s| (s / (n - 1) as f64).sqrt()).collect())
}

/// Mean of the per-draw cure rates for profile `x` (not the cure rate at the
/// mean parameters), with its HPD interval.
pub fn cure_rate_estimate(chain: &ChainResult, x: &[f64], level: f64) -> Result<ScalarEstimate> {
    let rates: Vec<f64> = chain.draws.iter().map(|v| cure_rate(v, x)).collect();
    if rates.is_empty() {
        return Err(Error::Validation("chain has no draws".into()));
    }
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    let (hpd_lower, hpd_upper) = if rates.len() >= 2 {
        hpd_interval(&rates, level)?
    } else {
        (rates[0], rates[0])
    };
    Ok(ScalarEstimate { mean, hpd_lower, hpd_upper })
}

/// Pointwise mean of the per-draw population survival over the grid.
pub fn survival_curve_estimate(
    chain: &ChainResult,
    x: &[f64],
    grid: &[f64],
) -> Result<SurvivalCurve> {
    if chain.draws.is_empty() {
        return Err(Error::Validation("chain has no draws".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::Validation("time grid must be nonnegative and increasing".into()));
    }
    let n = chain.draws.len() as f64;
    let mut values = vec![0.0; grid.len()];
    for v in &chain.draws {
        for (acc, &t) in values.iter_mut().zip(grid) {
            *acc += log_population_survival(t, v, x)?.exp();
        }
    }
    for v in &mut values {
        *v /= n;
    }
    Ok(SurvivalCurve { time_grid: grid.to_vec(), values, profile: x.to_vec() })
}

/// Shortest contiguous window of `ceil(level * n)` sorted sample points;
/// ties broken toward the lower left endpoint.
pub fn hpd_interval<F: Real>(sample: &[F], level: F) -> Result<(F, F)> {
    if !(level > F::zero() && level < F::one()) {
        return Err(Error::Domain(format!("HPD level must be in (0,1), got {level}")));
    }
    let n = sample.len();
    if n < 2 {
        return Err(Error::Validation(format!("HPD needs at least 2 points, got {n}")));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("HPD sample contains non-finite values".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    // ceil with a snap so that float representation of e.g. 0.95 * 100 does
    // not tip 95 over to 96
    let raw = level * F::from_usize(n).expect("sample size representable");
    let window = (raw - F::cst(1e-9)).ceil().to_usize().unwrap_or(n).clamp(1, n);
    let mut best = (sorted[0], sorted[window - 1]);
    let mut best_width = best.1 - best.0;
    for i in 1..=(n - window) {
        let width = sorted[i + window - 1] - sorted[i];
        if width < best_width {
            best_width = width;
            best = (sorted[i], sorted[i + window - 1]);
        }
    }
    Ok(best)
}

/// Monte Carlo CPO: per observation, the harmonic mean over draws of the
/// predictive density (events) or survival (censored), computed in log space
/// through a log-sum-exp of `-log g`.
pub fn cpo(chain: &ChainResult, d: &ObservedData<f64>) -> Result<CpoReport> {
    let n_p = chain.draws.len();
    if n_p == 0 {
        return Err(Error::Validation("chain has no draws".into()));
    }
    let m = d.m();
    let mut per_observation = vec![f64::NAN; m];
    let mut flagged = Vec::new();
    let mut total_log = 0.0;
    let mut neg_logs = vec![0.0; n_p];
    for i in 0..m {
        let t = d.times()[i];
        let x = d.row(i);
        let event = d.events()[i];
        let mut ok = true;
        for (k, v) in chain.draws.iter().enumerate() {
            let lg = if event {
                log_population_density(t, v, x)?
            } else {
                log_population_survival(t, v, x)?
            };
            if !lg.is_finite() {
                ok = false;
                break;
            }
            neg_logs[k] = -lg;
        }
        if !ok {
            flagged.push(i);
            continue;
        }
        let log_cpo = (n_p as f64).ln() - log_sum_exp(&neg_logs);
        per_observation[i] = log_cpo.exp();
        total_log += log_cpo;
    }
    Ok(CpoReport { per_observation, total_log, flagged })
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Distinct covariate rows of the design, for per-profile summaries. Falls
/// back to the single column-mean profile when there are more than `cap`
/// distinct rows (continuous covariates).
pub fn distinct_profiles(d: &ObservedData<f64>, cap: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for i in 0..d.m() {
        let row = d.row(i).to_vec();
        if !rows.contains(&row) {
            rows.push(row);
            if rows.len() > cap {
                break;
            }
        }
    }
    if rows.len() > cap {
        let mut mean = vec![0.0; d.n_cols()];
        for i in 0..d.m() {
            for (m, &v) in mean.iter_mut().zip(d.row(i)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= d.m() as f64;
        }
        return vec![mean];
    }
    rows.sort_by(|a, b| a.partial_cmp(b).expect("finite covariates"));
    rows
}
