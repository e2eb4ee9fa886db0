//! Adaptive random-walk Metropolis sampling of the posterior.
//!
//! Sampling happens on an unconstrained working space (`alpha` and `beta`
//! raw, `log lambda`, `log sigma2`, `log eta`, `logit gamma`) with the log
//! Jacobian added to the target, so a multivariate Gaussian proposal fits.
//! The proposal covariance is the scaled empirical covariance of the chain
//! history, recomputed every `adapt_interval` iterations and frozen after
//! burn-in, so the retained draws come from a fixed-kernel chain.
//!
//! Randomness comes from ChaCha8 seeded with a single `u64`; identical
//! `(seed, config, data)` produce bit-identical output. Seeds for replicate
//! streams are derived with a splitmix64 mix of `(master seed, index)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::inference::{log_posterior, ModelKind, ObservedData, PriorSpec};
use crate::model::{BaselineParams, FrailtyParams, ParamVector};

/// splitmix64 round; used to derive independent seeds from `(master, index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Chain length, burn-in, thinning, and adaptation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub total_iterations: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
    /// Proposal covariance refresh period while adapting.
    pub adapt_interval: usize,
    pub seed: u64,
    /// Starting point; `None` uses [`default_init`].
    pub init: Option<ParamVector<f64>>,
}

impl SamplerConfig {
    /// Reference settings: 40000/10000/30 for the frailty model and
    /// 30000/10000/20 for the plain model, both retaining 1000 draws.
    pub fn reference(kind: ModelKind, seed: u64) -> Self {
        let (total_iterations, thin) = match kind {
            ModelKind::Pvfcr => (40_000, 30),
            ModelKind::Cr => (30_000, 20),
        };
        SamplerConfig {
            total_iterations,
            burn_in: 10_000,
            thin,
            adapt_interval: 100,
            seed,
            init: None,
        }
    }

    /// Retained sample size `(total - burn_in) / thin`.
    pub fn n_draws(&self) -> usize {
        self.total_iterations.saturating_sub(self.burn_in) / self.thin.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.adapt_interval == 0 {
            return Err(Error::Validation("thin and adapt_interval must be positive".into()));
        }
        if self.burn_in >= self.total_iterations {
            return Err(Error::Validation(format!(
                "burn-in {} must be below total iterations {}",
                self.burn_in, self.total_iterations
            )));
        }
        if self.n_draws() < 1 {
            return Err(Error::Validation("configuration retains no draws".into()));
        }
        Ok(())
    }
}

/// Thinned posterior sample plus sampler diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    pub kind: ModelKind,
    /// Original-scale parameter names matching [`ParamVector::flat_coordinates`].
    pub param_names: Vec<String>,
    pub draws: Vec<ParamVector<f64>>,
    /// Retained iteration numbers (1-based within the full chain).
    pub iterations: Vec<usize>,
    pub log_posterior_trace: Vec<f64>,
    pub acceptance_rate: f64,
    /// Two-window mean-comparison statistic on the log posterior trace
    /// (first 10% vs last 50%); `|z| > 3` is a convergence warning.
    pub geweke_z: f64,
    pub seed: u64,
}

impl ChainResult {
    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn convergence_warning(&self) -> bool {
        self.geweke_z.abs() > 3.0
    }
}

/// Settings for the generic driver; [`run_chain`] fills these from a
/// [`SamplerConfig`].
#[derive(Debug, Clone)]
pub struct MetropolisOptions {
    pub iterations: usize,
    /// Covariance refresh period.
    pub adapt_interval: usize,
    /// Last iteration at which adaptation may happen; 0 disables adaptation
    /// so the whole run uses the fixed initial kernel.
    pub adapt_until: usize,
    /// Isotropic proposal scale used before the first covariance estimate.
    pub initial_step: f64,
    /// Ridge added to the empirical covariance.
    pub epsilon: f64,
}

impl MetropolisOptions {
    pub fn new(iterations: usize, adapt_interval: usize, adapt_until: usize) -> Self {
        MetropolisOptions {
            iterations,
            adapt_interval,
            adapt_until,
            initial_step: 0.1,
            epsilon: 1e-6,
        }
    }
}

/// Raw output of the generic driver: every state of the chain.
#[derive(Debug, Clone)]
pub struct RawChain {
    /// `states[i]` is the state after iteration `i + 1`.
    pub states: Vec<Vec<f64>>,
    pub log_target: Vec<f64>,
    pub accepted: usize,
    /// Iterations at which the proposal covariance was recomputed.
    pub adaptation_iterations: Vec<usize>,
}

impl RawChain {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.states.len().max(1) as f64
    }
}

/// Lower-triangular Cholesky factor of a dense symmetric matrix, row-major.
fn cholesky(a: &[f64], dim: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = a[i * dim + j];
            for k in 0..j {
                sum -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * dim + i] = sum.sqrt();
            } else {
                l[i * dim + j] = sum / l[j * dim + j];
            }
        }
    }
    Some(l)
}

/// Scaled empirical covariance of the chain history with a ridge:
/// `(2.38^2 / dim) * (cov + epsilon * I)`, returned as its Cholesky factor.
fn adapted_factor(history: &[Vec<f64>], dim: usize, epsilon: f64) -> Option<Vec<f64>> {
    let n = history.len();
    if n < 2 {
        return None;
    }
    let mut mean = vec![0.0; dim];
    for state in history {
        for (m, &x) in mean.iter_mut().zip(state) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![0.0; dim * dim];
    for state in history {
        for i in 0..dim {
            let di = state[i] - mean[i];
            for j in 0..=i {
                cov[i * dim + j] += di * (state[j] - mean[j]);
            }
        }
    }
    let scale = 2.38 * 2.38 / dim as f64;
    let denom = (n - 1) as f64;
    for i in 0..dim {
        for j in 0..=i {
            let v = cov[i * dim + j] / denom * scale;
            cov[i * dim + j] = v;
            cov[j * dim + i] = v;
        }
        cov[i * dim + i] += epsilon * scale;
    }
    cholesky(&cov, dim)
}

/// Generic adaptive random-walk Metropolis driver over an arbitrary log
/// target. Proposals outside the support must come back as `-inf` (or NaN,
/// treated the same), in which case they are rejected.
pub fn adaptive_metropolis<T, R>(
    log_target: T,
    init: &[f64],
    opts: &MetropolisOptions,
    rng: &mut R,
) -> RawChain
where
    T: Fn(&[f64]) -> f64,
    R: Rng,
{
    let dim = init.len();
    let eval = |z: &[f64]| {
        let v = log_target(z);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut current = init.to_vec();
    let mut current_lp = eval(&current);
    debug_assert!(current_lp.is_finite(), "start point must have finite target");

    // pre-adaptation kernel: isotropic 0.1^2/dim covariance
    let iso = opts.initial_step / (dim as f64).sqrt();
    let mut factor: Option<Vec<f64>> = None;

    let mut history: Vec<Vec<f64>> = Vec::with_capacity(opts.iterations + 1);
    history.push(current.clone());

    let mut states = Vec::with_capacity(opts.iterations);
    let mut log_target_trace = Vec::with_capacity(opts.iterations);
    let mut accepted = 0;
    let mut adaptation_iterations = Vec::new();
    let mut noise = vec![0.0; dim];
    let mut proposal = vec![0.0; dim];

    for iter in 1..=opts.iterations {
        for n in noise.iter_mut() {
            *n = rng.sample(StandardNormal);
        }
        match &factor {
            Some(l) => {
                for i in 0..dim {
                    let mut step = 0.0;
                    for k in 0..=i {
                        step += l[i * dim + k] * noise[k];
                    }
                    proposal[i] = current[i] + step;
                }
            }
            None => {
                for i in 0..dim {
                    proposal[i] = current[i] + iso * noise[i];
                }
            }
        }
        let proposal_lp = eval(&proposal);
        // symmetric proposal: accept with probability exp(lp' - lp)
        let log_u = rng.random::<f64>().ln();
        if log_u < proposal_lp - current_lp {
            current.copy_from_slice(&proposal);
            current_lp = proposal_lp;
            accepted += 1;
        }
        states.push(current.clone());
        log_target_trace.push(current_lp);
        history.push(current.clone());

        if iter % opts.adapt_interval == 0 && iter <= opts.adapt_until {
            if let Some(l) = adapted_factor(&history, dim, opts.epsilon) {
                factor = Some(l);
            }
            adaptation_iterations.push(iter);
        }
    }

    RawChain { states, log_target: log_target_trace, accepted, adaptation_iterations }
}

/// Maps between the constrained parameter vector and the unconstrained
/// working space the sampler moves in.
#[derive(Debug, Clone)]
pub struct WorkingSpace {
    kind: ModelKind,
    n_covariates: usize,
}

impl WorkingSpace {
    pub fn new(kind: ModelKind, n_covariates: usize) -> Self {
        WorkingSpace { kind, n_covariates }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ModelKind::Pvfcr => 5 + self.n_covariates,
            ModelKind::Cr => 3 + self.n_covariates,
        }
    }

    /// Original-scale parameter names, `beta` columns named after the design.
    pub fn param_names(&self, column_names: &[String]) -> Vec<String> {
        let mut names = vec!["alpha".to_string(), "lambda".to_string()];
        if self.kind == ModelKind::Pvfcr {
            names.push("gamma".into());
            names.push("sigma2".into());
        }
        names.push("eta".into());
        for (j, col) in column_names.iter().enumerate() {
            if j == 0 {
                names.push("beta0".into());
            } else {
                names.push(format!("beta_{col}"));
            }
        }
        names
    }

    pub fn pack(&self, v: &ParamVector<f64>) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.dim());
        z.push(v.baseline.alpha);
        z.push(v.baseline.lambda.ln());
        if self.kind == ModelKind::Pvfcr {
            let fr = v.frailty.as_ref().expect("frailty parameters required");
            z.push((fr.gamma / (1.0 - fr.gamma)).ln());
            z.push(fr.sigma2.ln());
        }
        z.push(v.eta.ln());
        z.extend_from_slice(&v.beta);
        z
    }

    pub fn unpack(&self, z: &[f64]) -> ParamVector<f64> {
        debug_assert_eq!(z.len(), self.dim());
        let (frailty, tail) = match self.kind {
            ModelKind::Pvfcr => {
                let gamma = 1.0 / (1.0 + (-z[2]).exp());
                (Some(FrailtyParams { gamma, sigma2: z[3].exp() }), 4)
            }
            ModelKind::Cr => (None, 2),
        };
        ParamVector {
            baseline: BaselineParams { alpha: z[0], lambda: z[1].exp() },
            frailty,
            eta: z[tail].exp(),
            beta: z[tail + 1..].to_vec(),
        }
    }

    /// Log Jacobian of the working-to-original map, added to the target so
    /// the chain samples the posterior of the original parameters.
    pub fn log_jacobian(&self, z: &[f64]) -> f64 {
        // softplus(x) = log(1 + exp(x)), stable in both tails
        let softplus = |x: f64| x.max(0.0) + (-x.abs()).exp().ln_1p();
        match self.kind {
            // log transforms contribute the log coordinate itself; logit
            // gamma contributes log gamma + log(1 - gamma).
            ModelKind::Pvfcr => z[1] + z[3] + z[4] - softplus(z[2]) - softplus(-z[2]),
            ModelKind::Cr => z[1] + z[2],
        }
    }
}

/// Support-interior starting point: crude event rate for `alpha`, unit
/// Weibull shape, mid-range frailty and dispersion, zero coefficients.
pub fn default_init(d: &ObservedData<f64>, kind: ModelKind) -> ParamVector<f64> {
    let r = d.n_events();
    let total_time: f64 = d.times().iter().sum();
    let alpha = if r == 0 { -1.0 } else { (r as f64 / total_time).ln() };
    let frailty = match kind {
        ModelKind::Pvfcr => Some(FrailtyParams { gamma: 0.5, sigma2: 0.5 }),
        ModelKind::Cr => None,
    };
    ParamVector {
        baseline: BaselineParams { alpha, lambda: 1.0 },
        frailty,
        eta: 0.5,
        beta: vec![0.0; d.n_cols()],
    }
}

/// Geweke-style two-window mean comparison on a scalar trace: standardized
/// difference between the first 10% and last 50% means.
fn geweke_statistic(trace: &[f64]) -> f64 {
    let n = trace.len();
    if n < 10 {
        return 0.0;
    }
    let a = &trace[..(n / 10).max(2)];
    let b = &trace[n - n / 2..];
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let var =
        |s: &[f64], m: f64| s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64;
    let (ma, mb) = (mean(a), mean(b));
    let se = (var(a, ma) / a.len() as f64 + var(b, mb) / b.len() as f64).sqrt();
    if se == 0.0 {
        0.0
    } else {
        (ma - mb) / se
    }
}

/// Run one chain against the posterior of `(d, p)` for the given model.
pub fn run_chain(
    d: &ObservedData<f64>,
    p: &PriorSpec<f64>,
    kind: ModelKind,
    config: &SamplerConfig,
) -> Result<ChainResult> {
    config.validate()?;
    p.validate()?;
    let ws = WorkingSpace::new(kind, d.n_cols());

    let init = match &config.init {
        Some(v) => {
            if v.kind() != kind {
                return Err(Error::Validation(format!(
                    "initial point is for {} but the fit is {kind}",
                    v.kind()
                )));
            }
            if v.beta.len() != d.n_cols() {
                return Err(Error::Validation(format!(
                    "initial point has {} coefficients, design has {} columns",
                    v.beta.len(),
                    d.n_cols()
                )));
            }
            v.clone()
        }
        None => default_init(d, kind),
    };

    let target = |z: &[f64]| {
        let v = ws.unpack(z);
        let lp = log_posterior(&v, d, p);
        if lp == f64::NEG_INFINITY {
            lp
        } else {
            lp + ws.log_jacobian(z)
        }
    };

    let z0 = ws.pack(&init);
    if !target(&z0).is_finite() {
        return Err(if config.init.is_some() {
            Error::Sampler("initial point has non-finite log posterior".into())
        } else {
            Error::Sampler(
                "default initialization has non-finite log posterior; the dataset and priors \
                 admit no usable starting point"
                    .into(),
            )
        });
    }

    let opts =
        MetropolisOptions::new(config.total_iterations, config.adapt_interval, config.burn_in);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let raw = adaptive_metropolis(&target, &z0, &opts, &mut rng);

    let n_draws = config.n_draws();
    let mut draws = Vec::with_capacity(n_draws);
    let mut iterations = Vec::with_capacity(n_draws);
    let mut log_posterior_trace = Vec::with_capacity(n_draws);
    for k in 1..=n_draws {
        let iter = config.burn_in + k * config.thin;
        let z = &raw.states[iter - 1];
        let v = ws.unpack(z);
        log_posterior_trace.push(raw.log_target[iter - 1] - ws.log_jacobian(z));
        draws.push(v);
        iterations.push(iter);
    }

    Ok(ChainResult {
        kind,
        param_names: ws.param_names(d.column_names()),
        draws,
        iterations,
        geweke_z: geweke_statistic(&log_posterior_trace),
        log_posterior_trace,
        acceptance_rate: raw.acceptance_rate(),
        seed: config.seed,
    })
}
