//! Log likelihood, log prior, and unnormalized log posterior under right
//! censoring, with covariates entering through the expected number of latent
//! causes `theta_i = exp(x_i . beta)`.
//!
//! Events contribute `log f_pop(w_i)` and censored units `log S_pop(w_i)`.
//! Parameters outside the support yield a `-inf` sentinel rather than an
//! error so that Metropolis proposals can be rejected cheaply.

use crate::error::{Error, Result};
use crate::model::{
    latent_log_parts, log_baseline_hazard, FrailtyParams, ParamVector, ETA_LIMIT_THRESHOLD,
};
use crate::real::{dot, Real};

/// Which parameter space is being fit.
///
/// The plain cure rate model (`Cr`) drops the frailty block from the
/// parameter space entirely; it is not pinned at a boundary value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ModelKind {
    /// PVF-frailty cure rate model.
    Pvfcr,
    /// Plain cure rate model (no frailty).
    Cr,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Pvfcr => "PVFCR",
            ModelKind::Cr => "CR",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl<F: Real> ParamVector<F> {
    /// Model family this parameter vector belongs to.
    pub fn kind(&self) -> ModelKind {
        if self.frailty.is_some() {
            ModelKind::Pvfcr
        } else {
            ModelKind::Cr
        }
    }

    /// Flat coordinates in reporting order:
    /// `alpha, lambda[, gamma, sigma2], eta, beta...`.
    pub fn flat_coordinates(&self) -> Vec<F> {
        let mut out =
            Vec::with_capacity(3 + 2 * usize::from(self.frailty.is_some()) + self.beta.len());
        out.push(self.baseline.alpha);
        out.push(self.baseline.lambda);
        if let Some(fr) = &self.frailty {
            out.push(fr.gamma);
            out.push(fr.sigma2);
        }
        out.push(self.eta);
        out.extend_from_slice(&self.beta);
        out
    }

    /// Rebuild a vector from [`Self::flat_coordinates`] order.
    pub fn from_flat_coordinates(kind: ModelKind, coords: &[F]) -> Result<Self> {
        let head = match kind {
            ModelKind::Pvfcr => 5,
            ModelKind::Cr => 3,
        };
        if coords.len() <= head {
            return Err(Error::Validation(format!(
                "expected more than {head} coordinates for {kind}, got {}",
                coords.len()
            )));
        }
        let frailty = match kind {
            ModelKind::Pvfcr => Some(FrailtyParams { gamma: coords[2], sigma2: coords[3] }),
            ModelKind::Cr => None,
        };
        Ok(ParamVector {
            baseline: crate::model::BaselineParams { alpha: coords[0], lambda: coords[1] },
            frailty,
            eta: coords[head - 1],
            beta: coords[head..].to_vec(),
        })
    }
}

/// Right-censored dataset: observed times `w_i`, event indicators `delta_i`,
/// and a design matrix with a leading intercept column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedData<F> {
    times: Vec<F>,
    events: Vec<bool>,
    /// Row-major `m x n_cols` design matrix.
    design: Vec<F>,
    n_cols: usize,
    column_names: Vec<String>,
    /// Cached `ln w_i`; the likelihood needs it on every evaluation.
    log_times: Vec<F>,
}

impl<F: Real> ObservedData<F> {
    /// Build from a full design matrix (rows must start with the intercept 1).
    pub fn new(
        times: Vec<F>,
        events: Vec<bool>,
        design_rows: Vec<Vec<F>>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let m = times.len();
        if m == 0 {
            return Err(Error::Validation("dataset is empty".into()));
        }
        if events.len() != m || design_rows.len() != m {
            return Err(Error::Validation(format!(
                "length mismatch: {m} times, {} events, {} design rows",
                events.len(),
                design_rows.len()
            )));
        }
        let n_cols = design_rows[0].len();
        if n_cols == 0 || column_names.len() != n_cols {
            return Err(Error::Validation(format!(
                "design has {n_cols} columns but {} names",
                column_names.len()
            )));
        }
        let mut design = Vec::with_capacity(m * n_cols);
        for (i, row) in design_rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Validation(format!(
                    "design row {} has {} columns, expected {n_cols}",
                    i + 1,
                    row.len()
                )));
            }
            if row[0] != F::one() {
                return Err(Error::Validation(format!(
                    "design row {} does not start with an intercept of 1",
                    i + 1
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "non-finite covariate in row {}",
                    i + 1
                )));
            }
            design.extend_from_slice(row);
        }
        for (i, &t) in times.iter().enumerate() {
            if !(t.is_finite() && t > F::zero()) {
                return Err(Error::Validation(format!(
                    "time in row {} must be a positive real, got {t}",
                    i + 1
                )));
            }
        }
        let log_times = times.iter().map(|t| t.ln()).collect();
        Ok(Self { times, events, design, n_cols, column_names, log_times })
    }

    /// Build by prepending the intercept column to covariate columns.
    pub fn from_covariate_columns(
        times: Vec<F>,
        events: Vec<bool>,
        covariates: &[(String, Vec<F>)],
    ) -> Result<Self> {
        let m = times.len();
        let mut names = vec!["intercept".to_string()];
        names.extend(covariates.iter().map(|(n, _)| n.clone()));
        let mut rows = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = Vec::with_capacity(1 + covariates.len());
            row.push(F::one());
            for (name, col) in covariates {
                if col.len() != m {
                    return Err(Error::Validation(format!(
                        "covariate column '{name}' has {} entries, expected {m}",
                        col.len()
                    )));
                }
                row.push(col[i]);
            }
            rows.push(row);
        }
        Self::new(times, events, rows, names)
    }

    pub fn m(&self) -> usize {
        self.times.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn times(&self) -> &[F] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.design[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Number of observed events `r`.
    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn censoring_fraction(&self) -> f64 {
        1.0 - self.n_events() as f64 / self.m() as f64
    }
}

/// Shape/rate parameterization of a gamma prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior<F> {
    pub shape: F,
    pub rate: F,
}

impl<F: Real> GammaPrior<F> {
    /// Mean-1 gamma with the given variance: shape = rate = 1/variance.
    pub fn with_unit_mean(variance: f64) -> Self {
        GammaPrior { shape: F::cst(1.0 / variance), rate: F::cst(1.0 / variance) }
    }
}

/// Hyperparameters of the independent priors: zero-mean normals (variance
/// given) on `alpha` and each `beta`, Uniform(0,1) on `gamma`, and gamma
/// priors on `eta`, `lambda`, `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec<F> {
    pub beta_variance: F,
    pub alpha_variance: F,
    pub eta_gamma: GammaPrior<F>,
    pub lambda_gamma: GammaPrior<F>,
    pub sigma2_gamma: GammaPrior<F>,
}

impl<F: Real> Default for PriorSpec<F> {
    /// Mean-1 gamma priors with variances (1, 100, 1) for (eta, lambda,
    /// sigma2); variance-100 normals on `alpha` and `beta`.
    fn default() -> Self {
        PriorSpec {
            beta_variance: F::cst(100.0),
            alpha_variance: F::cst(100.0),
            eta_gamma: GammaPrior::with_unit_mean(1.0),
            lambda_gamma: GammaPrior::with_unit_mean(100.0),
            sigma2_gamma: GammaPrior::with_unit_mean(1.0),
        }
    }
}

impl<F: Real> PriorSpec<F> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: F| v.is_finite() && v > F::zero();
        let gp = |g: &GammaPrior<F>| pos(g.shape) && pos(g.rate);
        if pos(self.beta_variance)
            && pos(self.alpha_variance)
            && gp(&self.eta_gamma)
            && gp(&self.lambda_gamma)
            && gp(&self.sigma2_gamma)
        {
            Ok(())
        } else {
            Err(Error::Validation("prior hyperparameters must be strictly positive".into()))
        }
    }
}

#[inline]
fn normal_logpdf<F: Real>(x: F, variance: F) -> F {
    let two = F::cst(2.0);
    -((two * F::cst(std::f64::consts::PI) * variance).ln() + x * x / variance) / two
}

#[inline]
fn gamma_logpdf<F: Real>(x: F, p: &GammaPrior<F>) -> F {
    if !(x.is_finite() && x > F::zero()) {
        return F::neg_infinity();
    }
    let mut v = p.shape * p.rate.ln() - p.shape.ln_gamma() - p.rate * x;
    if p.shape != F::one() {
        v = v + (p.shape - F::one()) * x.ln();
    }
    v
}

/// Right-censored log likelihood; `-inf` outside the support.
pub fn log_likelihood<F: Real>(v: &ParamVector<F>, d: &ObservedData<F>) -> F {
    if !v.is_valid() || v.beta.len() != d.n_cols() {
        return F::neg_infinity();
    }
    let fr = v.frailty.as_ref();
    let eta = v.eta;
    let poisson = eta < F::cst(ETA_LIMIT_THRESHOLD);
    let inv_eta = if poisson { F::zero() } else { eta.recip() };
    let one = F::one();
    let mut acc = F::zero();
    for i in 0..d.m() {
        let lt = d.log_times[i];
        let h0 = (v.baseline.alpha + v.baseline.lambda * lt).exp();
        let (log_s, correction) = latent_log_parts(h0, fr);
        let one_minus_s = -log_s.exp_m1();
        let xb = dot(d.row(i), &v.beta);
        let theta = xb.exp();
        let term = if d.events[i] {
            let log_f = log_baseline_hazard(lt, &v.baseline) + correction + log_s;
            let tail = if poisson {
                -theta * one_minus_s
            } else {
                -(inv_eta + one) * (eta * theta * one_minus_s).ln_1p()
            };
            xb + log_f + tail
        } else if poisson {
            -theta * one_minus_s
        } else {
            -inv_eta * (eta * theta * one_minus_s).ln_1p()
        };
        acc = acc + term;
    }
    if acc.is_nan() {
        F::neg_infinity()
    } else {
        acc
    }
}

/// Sum of independent log prior densities; `-inf` outside the prior support.
pub fn log_prior<F: Real>(v: &ParamVector<F>, p: &PriorSpec<F>) -> F {
    if !v.baseline.alpha.is_finite() || v.beta.iter().any(|b| !b.is_finite()) {
        return F::neg_infinity();
    }
    let mut lp = normal_logpdf(v.baseline.alpha, p.alpha_variance)
        + gamma_logpdf(v.baseline.lambda, &p.lambda_gamma)
        + gamma_logpdf(v.eta, &p.eta_gamma);
    for &b in &v.beta {
        lp = lp + normal_logpdf(b, p.beta_variance);
    }
    if let Some(fr) = &v.frailty {
        if !(fr.gamma > F::zero() && fr.gamma < F::one()) {
            return F::neg_infinity();
        }
        // Uniform(0,1) on gamma contributes log 1 = 0.
        lp = lp + gamma_logpdf(fr.sigma2, &p.sigma2_gamma);
    }
    lp
}

/// Unnormalized log posterior `log_prior + log_likelihood`.
pub fn log_posterior<F: Real>(v: &ParamVector<F>, d: &ObservedData<F>, p: &PriorSpec<F>) -> F {
    let lp = log_prior(v, p);
    if lp == F::neg_infinity() {
        return lp;
    }
    lp + log_likelihood(v, d)
}
