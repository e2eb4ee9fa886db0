//! Closed-form model quantities.
//!
//! The population (observable) survival model is built from three layers:
//! a Weibull cumulative baseline hazard `H0(t) = exp(alpha) * t^lambda`, a
//! power-variance-function (PVF) frailty acting multiplicatively on the
//! hazard of each latent cause, and a negative binomial number of latent
//! causes whose mean is `theta = exp(x . beta)`. Marginalizing the frailty
//! gives the per-cause survival `S(t)`; composing with the counting p.g.f.
//! gives the improper population survival
//!
//! `S_pop(t) = {1 + eta * theta * [1 - S(t)]}^(-1/eta)`
//!
//! whose limit as `t -> inf` is the cure rate `(1 + eta*theta)^(-1/eta)`.
//!
//! Dropping the frailty (`frailty: None`, or `sigma2` below its threshold)
//! yields the plain cure rate model with Weibull per-cause survival; letting
//! `eta -> 0` yields the Poisson (promotion-time) counting layer. Everything
//! is evaluated in log space and exponentiated at the boundary.

use crate::error::{Error, Result};
use crate::real::{dot, Real};

/// Below this, `gamma` switches to the gamma-frailty limit form of the
/// marginal survival; the generic form loses precision in `(1-g)/(g*s2)`.
pub const GAMMA_LIMIT_THRESHOLD: f64 = 1e-5;

/// Below this, `sigma2` switches to the no-frailty limit `exp(-H0(t))`.
pub const SIGMA2_LIMIT_THRESHOLD: f64 = 1e-8;

/// Below this, `eta` switches to the Poisson limit of the counting layer.
pub const ETA_LIMIT_THRESHOLD: f64 = 1e-8;

/// Weibull baseline: cumulative hazard `exp(alpha) * t^lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineParams<F> {
    /// Log rate; any real.
    pub alpha: F,
    /// Shape; strictly positive. `lambda = 1` is the exponential baseline.
    pub lambda: F,
}

impl<F: Real> BaselineParams<F> {
    pub fn new(alpha: F, lambda: F) -> Result<Self> {
        let p = Self { alpha, lambda };
        if !p.is_valid() {
            return Err(Error::Validation(format!(
                "baseline requires finite alpha and lambda > 0, got alpha={alpha}, lambda={lambda}"
            )));
        }
        Ok(p)
    }

    pub fn is_valid(&self) -> bool {
        self.alpha.is_finite() && self.lambda.is_finite() && self.lambda > F::zero()
    }
}

/// PVF frailty parameters under the identifiability constraint: the frailty
/// mean is fixed at 1, so the distribution is indexed by `gamma` in (0,1)
/// and the heterogeneity variance `sigma2 >= 0` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrailtyParams<F> {
    /// PVF index; `0.5` is the inverse Gaussian case, `gamma -> 0` the gamma
    /// frailty case.
    pub gamma: F,
    /// Unobserved-heterogeneity variance; `sigma2 -> 0` removes the frailty.
    pub sigma2: F,
}

impl<F: Real> FrailtyParams<F> {
    pub fn new(gamma: F, sigma2: F) -> Result<Self> {
        let p = Self { gamma, sigma2 };
        if !p.is_valid() {
            return Err(Error::Validation(format!(
                "frailty requires 0 < gamma < 1 and sigma2 >= 0, got gamma={gamma}, sigma2={sigma2}"
            )));
        }
        Ok(p)
    }

    pub fn is_valid(&self) -> bool {
        self.gamma > F::zero()
            && self.gamma < F::one()
            && self.sigma2.is_finite()
            && self.sigma2 >= F::zero()
    }
}

/// Negative binomial counting layer: mean `theta`, dispersion `eta`, so that
/// the latent-cause count has variance `theta + eta * theta^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingParams<F> {
    /// Dispersion; `eta = 0` (or below threshold) is the Poisson case.
    pub eta: F,
    /// Mean number of latent causes; strictly positive.
    pub theta: F,
}

impl<F: Real> CountingParams<F> {
    pub fn new(eta: F, theta: F) -> Result<Self> {
        let p = Self { eta, theta };
        if !p.is_valid() {
            return Err(Error::Validation(format!(
                "counting layer requires eta >= 0 and theta > 0, got eta={eta}, theta={theta}"
            )));
        }
        Ok(p)
    }

    pub fn is_valid(&self) -> bool {
        self.eta.is_finite()
            && self.eta >= F::zero()
            && self.theta.is_finite()
            && self.theta > F::zero()
    }

    /// Log cure rate `-log(1 + eta*theta)/eta`, Poisson limit `-theta`.
    pub fn log_cure_rate(&self) -> F {
        log_pgf_from_one_minus_s(F::one(), self)
    }
}

/// Full parameter set of one model.
///
/// `frailty: None` is the plain cure rate model: the frailty block is absent
/// from the parameter space entirely, not pinned at a value.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector<F> {
    pub baseline: BaselineParams<F>,
    pub frailty: Option<FrailtyParams<F>>,
    /// Negative binomial dispersion.
    pub eta: F,
    /// Regression coefficients, intercept first; `theta_i = exp(x_i . beta)`.
    pub beta: Vec<F>,
}

impl<F: Real> ParamVector<F> {
    /// Expected number of latent causes for covariate row `x`.
    pub fn theta(&self, x: &[F]) -> F {
        dot(x, &self.beta).exp()
    }

    /// Counting layer for covariate row `x`.
    pub fn counting(&self, x: &[F]) -> CountingParams<F> {
        CountingParams {
            eta: self.eta,
            theta: self.theta(x),
        }
    }

    /// All parameters satisfy their support constraints.
    pub fn is_valid(&self) -> bool {
        self.baseline.is_valid()
            && self.frailty.as_ref().map_or(true, FrailtyParams::is_valid)
            && self.eta.is_finite()
            && self.eta >= F::zero()
            && self.beta.iter().all(|b| b.is_finite())
    }
}

fn check_time<F: Real>(t: F, strictly_positive: bool) -> Result<()> {
    if t.is_nan() || t < F::zero() || (strictly_positive && t == F::zero()) {
        let bound = if strictly_positive { "positive" } else { "nonnegative" };
        return Err(Error::Domain(format!("time must be {bound}, got {t}")));
    }
    Ok(())
}

/// Cumulative baseline hazard `H0(t) = exp(alpha) * t^lambda`.
pub fn cumulative_baseline_hazard<F: Real>(t: F, p: &BaselineParams<F>) -> Result<F> {
    check_time(t, false)?;
    if t == F::zero() {
        return Ok(F::zero());
    }
    Ok((p.alpha + p.lambda * t.ln()).exp())
}

/// Baseline hazard `h0(t) = exp(alpha) * lambda * t^(lambda-1)`.
///
/// Undefined at `t = 0`: for `lambda < 1` the hazard diverges there.
pub fn baseline_hazard<F: Real>(t: F, p: &BaselineParams<F>) -> Result<F> {
    check_time(t, true)?;
    Ok(log_baseline_hazard(t.ln(), p).exp())
}

/// Log baseline hazard given `log t`.
#[inline]
pub(crate) fn log_baseline_hazard<F: Real>(log_t: F, p: &BaselineParams<F>) -> F {
    p.alpha + p.lambda.ln() + (p.lambda - F::one()) * log_t
}

/// Log marginal per-cause survival and the density's log correction factor,
/// both as functions of the cumulative hazard value `h0`.
///
/// The log density of the marginal per-cause time is
/// `log h0'(t) + correction + log survival`; returning the pair keeps the
/// likelihood to a single evaluation of the shared terms.
#[inline]
pub(crate) fn latent_log_parts<F: Real>(h0: F, frailty: Option<&FrailtyParams<F>>) -> (F, F) {
    let Some(fr) = frailty else {
        return (-h0, F::zero());
    };
    if fr.sigma2 < F::cst(SIGMA2_LIMIT_THRESHOLD) {
        // sigma2 -> 0: no heterogeneity, plain Weibull per-cause survival.
        return (-h0, F::zero());
    }
    if fr.gamma < F::cst(GAMMA_LIMIT_THRESHOLD) {
        // gamma -> 0: gamma frailty, S(t) = (1 + sigma2*H0)^(-1/sigma2).
        let log1p_v = (fr.sigma2 * h0).ln_1p();
        return (-log1p_v / fr.sigma2, -log1p_v);
    }
    let one = F::one();
    let u = fr.sigma2 * h0 / (one - fr.gamma);
    let log1p_u = u.ln_1p();
    // S(t) = exp{ (1-g)/(g*s2) * [1 - (1+u)^g] }, computed via expm1 so the
    // bracket stays accurate when u is small.
    let log_s = -(one - fr.gamma) / (fr.gamma * fr.sigma2) * (fr.gamma * log1p_u).exp_m1();
    (log_s, (fr.gamma - one) * log1p_u)
}

/// Marginal per-cause survival with the frailty integrated out.
pub fn frailty_marginal_survival<F: Real>(
    t: F,
    p: &BaselineParams<F>,
    f: &FrailtyParams<F>,
) -> Result<F> {
    log_frailty_marginal_survival(t, p, f).map(F::exp)
}

/// Log of [`frailty_marginal_survival`].
pub fn log_frailty_marginal_survival<F: Real>(
    t: F,
    p: &BaselineParams<F>,
    f: &FrailtyParams<F>,
) -> Result<F> {
    let h0 = cumulative_baseline_hazard(t, p)?;
    Ok(latent_log_parts(h0, Some(f)).0)
}

/// Marginal per-cause density with the frailty integrated out.
pub fn frailty_marginal_density<F: Real>(
    t: F,
    p: &BaselineParams<F>,
    f: &FrailtyParams<F>,
) -> Result<F> {
    log_frailty_marginal_density(t, p, f).map(F::exp)
}

/// Log of [`frailty_marginal_density`].
pub fn log_frailty_marginal_density<F: Real>(
    t: F,
    p: &BaselineParams<F>,
    f: &FrailtyParams<F>,
) -> Result<F> {
    check_time(t, true)?;
    let log_t = t.ln();
    let h0 = (p.alpha + p.lambda * log_t).exp();
    let (log_s, correction) = latent_log_parts(h0, Some(f));
    Ok(log_baseline_hazard(log_t, p) + correction + log_s)
}

/// Log p.g.f. of the counting layer evaluated at `s = 1 - one_minus_s`.
///
/// Taking `1 - s` as the argument lets callers form it stably from a log
/// survival value via `-expm1(log_s)`.
#[inline]
pub(crate) fn log_pgf_from_one_minus_s<F: Real>(one_minus_s: F, c: &CountingParams<F>) -> F {
    if c.eta < F::cst(ETA_LIMIT_THRESHOLD) {
        -c.theta * one_minus_s
    } else {
        -(c.eta * c.theta * one_minus_s).ln_1p() / c.eta
    }
}

/// Probability generating function `A(s) = {1 + eta*theta*(1-s)}^(-1/eta)`,
/// with Poisson limit `exp(-theta*(1-s))` below the `eta` threshold.
pub fn negbin_pgf<F: Real>(s: F, c: &CountingParams<F>) -> Result<F> {
    if !(s >= F::zero() && s <= F::one()) {
        return Err(Error::Domain(format!("p.g.f. argument must be in [0,1], got {s}")));
    }
    Ok(log_pgf_from_one_minus_s(F::one() - s, c).exp())
}

/// Probability of `n` latent causes.
pub fn negbin_pmf<F: Real>(n: u64, c: &CountingParams<F>) -> Result<F> {
    if !c.is_valid() {
        return Err(Error::Validation(format!(
            "invalid counting parameters eta={}, theta={}",
            c.eta, c.theta
        )));
    }
    let nf = F::from_u64(n).expect("count representable");
    let log_p = if c.eta < F::cst(ETA_LIMIT_THRESHOLD) {
        // Poisson limit.
        nf * c.theta.ln() - c.theta - (nf + F::one()).ln_gamma()
    } else {
        let inv = c.eta.recip();
        let log1p_et = (c.eta * c.theta).ln_1p();
        (nf + inv).ln_gamma() - (nf + F::one()).ln_gamma() - inv.ln_gamma()
            + nf * ((c.eta * c.theta).ln() - log1p_et)
            - inv * log1p_et
    };
    Ok(log_p.exp())
}

/// Log population survival for covariate row `x`.
pub fn log_population_survival<F: Real>(t: F, v: &ParamVector<F>, x: &[F]) -> Result<F> {
    let h0 = cumulative_baseline_hazard(t, &v.baseline)?;
    let (log_s, _) = latent_log_parts(h0, v.frailty.as_ref());
    let one_minus_s = -log_s.exp_m1();
    Ok(log_pgf_from_one_minus_s(one_minus_s, &v.counting(x)))
}

/// Population (observable-time) survival; improper, with limit the cure rate.
pub fn population_survival<F: Real>(t: F, v: &ParamVector<F>, x: &[F]) -> Result<F> {
    log_population_survival(t, v, x).map(F::exp)
}

/// Log population density for covariate row `x`.
pub fn log_population_density<F: Real>(t: F, v: &ParamVector<F>, x: &[F]) -> Result<F> {
    check_time(t, true)?;
    let log_t = t.ln();
    let h0 = (v.baseline.alpha + v.baseline.lambda * log_t).exp();
    let (log_s, correction) = latent_log_parts(h0, v.frailty.as_ref());
    let log_f = log_baseline_hazard(log_t, &v.baseline) + correction + log_s;
    let one_minus_s = -log_s.exp_m1();
    let c = v.counting(x);
    let tail = if c.eta < F::cst(ETA_LIMIT_THRESHOLD) {
        -c.theta * one_minus_s
    } else {
        -(c.eta.recip() + F::one()) * (c.eta * c.theta * one_minus_s).ln_1p()
    };
    Ok(c.theta.ln() + log_f + tail)
}

/// Population density `-d/dt S_pop(t)`.
pub fn population_density<F: Real>(t: F, v: &ParamVector<F>, x: &[F]) -> Result<F> {
    log_population_density(t, v, x).map(F::exp)
}

/// Cure rate `(1 + eta*theta)^(-1/eta)` for covariate row `x`; the mass of
/// units never experiencing the event.
pub fn cure_rate<F: Real>(v: &ParamVector<F>, x: &[F]) -> F {
    v.counting(x).log_cure_rate().exp()
}
