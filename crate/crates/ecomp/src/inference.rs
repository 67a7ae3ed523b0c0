//! Log-likelihood and maximum-likelihood fitting of ECOMP parameters to
//! observed count data.
//!
//! The parameter space is a union of two branches with different
//! constraints, so fitting never crosses between them: the caller selects a
//! sub-model and the optimizer works on an unconstrained transform of that
//! sub-model alone. A derivative-free simplex search is used throughout
//! (the normalizing series has no closed-form derivative in the exponents),
//! with multiple deterministic starts because four-parameter count
//! likelihoods are multimodal.

use std::collections::BTreeMap;

use crate::error::{EcompError, Result};
use crate::params::EcompParams;
use crate::table::{PmfTable, DEFAULT_TAIL_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Observed counts stored as sorted (value, frequency) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountData {
    pairs: Vec<(u64, u64)>,
    n: u64,
}

impl CountData {
    /// Aggregate raw observations into (value, frequency) pairs.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        if counts.is_empty() {
            return Err(EcompError::EmptyData);
        }
        let mut map: BTreeMap<u64, u64> = BTreeMap::new();
        for &c in counts {
            *map.entry(c).or_insert(0) += 1;
        }
        Self::from_pairs(map.into_iter().collect::<Vec<_>>())
    }

    /// Build from explicit pairs; duplicate values are merged.
    pub fn from_pairs(pairs: Vec<(u64, u64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(EcompError::EmptyData);
        }
        let mut map: BTreeMap<u64, u64> = BTreeMap::new();
        for (value, freq) in pairs {
            if freq == 0 {
                return Err(EcompError::ParamSpaceViolation(format!(
                    "frequency for value {value} must be >= 1"
                )));
            }
            *map.entry(value).or_insert(0) += freq;
        }
        let pairs: Vec<(u64, u64)> = map.into_iter().collect();
        let n = pairs.iter().map(|&(_, f)| f).sum();
        Ok(Self { pairs, n })
    }

    pub fn pairs(&self) -> &[(u64, u64)] {
        &self.pairs
    }

    /// Total number of observations.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn max_value(&self) -> u64 {
        self.pairs.last().map(|&(v, _)| v).unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        let total: f64 = self.pairs.iter().map(|&(v, f)| v as f64 * f as f64).sum();
        total / self.n as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let total: f64 = self
            .pairs
            .iter()
            .map(|&(v, f)| (v as f64 - m).powi(2) * f as f64)
            .sum();
        total / self.n as f64
    }
}

/// `Σ freq(k) * log pmf(k)` with the default tail tolerance.
pub fn log_likelihood(params: &EcompParams, data: &CountData) -> Result<f64> {
    log_likelihood_with_tol(params, data, DEFAULT_TAIL_TOL)
}

/// As [`log_likelihood`], erroring if any observed count would receive a
/// tail-extrapolated (uncertified) pmf value.
pub fn log_likelihood_with_tol(
    params: &EcompParams,
    data: &CountData,
    tail_tol: f64,
) -> Result<f64> {
    let table = PmfTable::build(*params, tail_tol)?;
    if data.max_value() > table.max_k() {
        return Err(EcompError::SupportViolation {
            value: data.max_value(),
            max_k: table.max_k(),
        });
    }
    Ok(data
        .pairs
        .iter()
        .map(|&(v, f)| f as f64 * table.log_pmf(v))
        .sum())
}

/// Fitted sub-models; each stays inside one branch of the parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `alpha = 1, beta = 0` fixed; free: `log p`.
    Poisson,
    /// `beta = 0` fixed; free: `log p, log alpha`.
    ComPoisson,
    /// `alpha = beta = 1` fixed; free: `log nu, logit p`.
    NegBinomial,
    /// `alpha = beta` free along with the rest: `log nu, logit p, log beta`.
    AlphaEqBeta,
    /// The `alpha > beta > 0` branch: `log nu, log p, log(alpha-beta), log beta`.
    Full,
}

impl FitModel {
    pub fn dim(&self) -> usize {
        match self {
            FitModel::Poisson => 1,
            FitModel::ComPoisson | FitModel::NegBinomial => 2,
            FitModel::AlphaEqBeta => 3,
            FitModel::Full => 4,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FitModel::Poisson => "poisson",
            FitModel::ComPoisson => "com-poisson",
            FitModel::NegBinomial => "neg-binomial",
            FitModel::AlphaEqBeta => "alpha-eq-beta",
            FitModel::Full => "full",
        }
    }

    /// Whether `params` lies inside this sub-model.
    pub fn contains(&self, params: &EcompParams) -> bool {
        match self {
            FitModel::Poisson => params.alpha() == 1.0 && params.beta() == 0.0,
            FitModel::ComPoisson => params.beta() == 0.0,
            FitModel::NegBinomial => params.alpha() == 1.0 && params.beta() == 1.0,
            FitModel::AlphaEqBeta => params.alpha() == params.beta() && params.beta() > 0.0,
            FitModel::Full => params.alpha() > params.beta() && params.beta() > 0.0,
        }
    }

    fn theta_from(&self, params: &EcompParams) -> Vec<f64> {
        match self {
            FitModel::Poisson => vec![params.p().ln()],
            FitModel::ComPoisson => vec![params.p().ln(), params.alpha().ln()],
            FitModel::NegBinomial => vec![params.nu().ln(), logit(params.p())],
            FitModel::AlphaEqBeta => {
                vec![params.nu().ln(), logit(params.p()), params.beta().ln()]
            }
            FitModel::Full => vec![
                params.nu().ln(),
                params.p().ln(),
                (params.alpha() - params.beta()).ln(),
                params.beta().ln(),
            ],
        }
    }

    /// Map an unconstrained point back to valid parameters; the transform
    /// guarantees the branch constraints for every iterate.
    fn params_from(&self, theta: &[f64]) -> EcompParams {
        let e = |t: f64| t.clamp(-200.0, 200.0).exp();
        let (nu, p, alpha, beta) = match self {
            FitModel::Poisson => (1.0, e(theta[0]), 1.0, 0.0),
            FitModel::ComPoisson => (1.0, e(theta[0]), e(theta[1]), 0.0),
            FitModel::NegBinomial => (e(theta[0]), sigmoid(theta[1]), 1.0, 1.0),
            FitModel::AlphaEqBeta => {
                let c = e(theta[2]);
                (e(theta[0]), sigmoid(theta[1]), c, c)
            }
            FitModel::Full => {
                let beta = e(theta[3]);
                (e(theta[0]), e(theta[1]), beta + e(theta[2]), beta)
            }
        };
        EcompParams::new(nu, p, alpha, beta).expect("transform maps into the admissible space")
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(t: f64) -> f64 {
    (1.0 / (1.0 + (-t).exp())).clamp(1e-12, 1.0 - 1e-12)
}

/// Moment-matched starting point for a sub-model.
pub fn moment_init(data: &CountData, model: FitModel) -> EcompParams {
    let m = data.mean();
    let v = data.variance().max(1e-6);
    let (nu, p, alpha, beta) = match model {
        FitModel::Poisson => (1.0, m.max(1e-3), 1.0, 0.0),
        FitModel::ComPoisson => {
            // dispersion index roughly 1/alpha; invert the mean approximation
            let a = (m / v).clamp(0.1, 8.0);
            let base = (m + (a - 1.0) / (2.0 * a)).max(0.05);
            (1.0, base.powf(a), a, 0.0)
        }
        FitModel::NegBinomial | FitModel::AlphaEqBeta => {
            let (nu0, p0) = if v > m * 1.000001 && m > 0.0 {
                (m * m / (v - m), 1.0 - m / v)
            } else {
                (m.max(0.5), 0.5)
            };
            let exponent = 1.0;
            (
                nu0.clamp(1e-3, 1e6),
                p0.clamp(1e-9, 1.0 - 1e-9),
                exponent,
                exponent,
            )
        }
        FitModel::Full => {
            let (nu0, p0) = if v > m * 1.000001 && m > 0.0 {
                (m * m / (v - m), 1.0 - m / v)
            } else {
                (m.max(0.5), 0.5)
            };
            (nu0.clamp(1e-3, 1e6), p0.clamp(1e-9, 10.0), 1.5, 1.0)
        }
    };
    let beta_fixed = if model == FitModel::Poisson || model == FitModel::ComPoisson {
        0.0
    } else {
        beta
    };
    EcompParams::new(nu, p, alpha, beta_fixed).expect("moment init stays admissible")
}

/// Options for [`fit_mle`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub model: FitModel,
    pub max_iter: usize,
    /// Relative tolerance on the simplex log-likelihood spread.
    pub tol: f64,
    /// Number of starts (the caller's init, the moment guess, then jitters).
    pub starts: usize,
    pub seed: u64,
    pub tail_tol: f64,
}

impl FitOptions {
    pub fn new(model: FitModel) -> Self {
        Self {
            model,
            max_iter: 2000,
            tol: 1e-10,
            starts: 5,
            seed: 0,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: EcompParams,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `2 * (free parameters) - 2 * loglik`.
    pub aic: f64,
}

/// Maximize the log-likelihood over the selected sub-model by multi-start
/// Nelder-Mead on the unconstrained transform. Starts run independently and
/// merge deterministically by `(loglik, start index)`.
pub fn fit_mle(data: &CountData, init: EcompParams, options: &FitOptions) -> Result<FitResult> {
    let model = options.model;
    if !model.contains(&init) {
        return Err(EcompError::ParamSpaceViolation(format!(
            "init {:?} does not lie in the {} sub-model",
            init,
            model.as_str()
        )));
    }
    let objective = |theta: &[f64]| -> f64 {
        let params = model.params_from(theta);
        match log_likelihood_with_tol(&params, data, options.tail_tol) {
            Ok(ll) if ll.is_finite() => -ll,
            _ => f64::INFINITY,
        }
    };

    let guess = moment_init(data, model);
    let mut starts: Vec<Vec<f64>> = vec![model.theta_from(&init), model.theta_from(&guess)];
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let jitter = Normal::new(0.0, 0.3).expect("valid normal");
    while starts.len() < options.starts.max(2) {
        let base = model.theta_from(&guess);
        starts.push(base.iter().map(|t| t + jitter.sample(&mut rng)).collect());
    }

    let mut best: Option<(f64, usize, NmOutcome)> = None;
    for (idx, theta0) in starts.iter().enumerate() {
        let outcome = nelder_mead(&objective, theta0, options.max_iter, options.tol);
        let better = match &best {
            None => true,
            Some((fx, i, _)) => (outcome.fx, idx) < (*fx, *i),
        };
        if better {
            best = Some((outcome.fx, idx, outcome));
        }
    }
    let (fx, _, outcome) = best.expect("at least two starts ran");
    if !fx.is_finite() {
        return Err(EcompError::NoImprovement);
    }
    let loglik = -fx;
    Ok(FitResult {
        params: model.params_from(&outcome.x),
        loglik,
        iterations: outcome.iterations,
        converged: outcome.converged,
        aic: 2.0 * model.dim() as f64 - 2.0 * loglik,
    })
}

#[derive(Debug, Clone)]
struct NmOutcome {
    x: Vec<f64>,
    fx: f64,
    iterations: usize,
    converged: bool,
}

/// Standard Nelder-Mead minimization (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2) from an orthogonal initial simplex.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], max_iter: usize, tol: f64) -> NmOutcome {
    let n = x0.len();
    let step = 0.25;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let by_value = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| {
        a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        simplex.sort_by(by_value);
        let f_best = simplex[0].1;
        let f_worst = simplex[n].1;
        if f_best.is_finite()
            && f_worst.is_finite()
            && (f_worst - f_best).abs() <= tol * (f_best.abs() + tol)
        {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0f64; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }
        let worst = simplex[n].clone();
        let reflected: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| 2.0 * c - w)
            .collect();
        let f_r = f(&reflected);

        if f_r < simplex[0].1 {
            let expanded: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| 3.0 * c - 2.0 * w)
                .collect();
            let f_e = f(&expanded);
            simplex[n] = if f_e < f_r {
                (expanded, f_e)
            } else {
                (reflected, f_r)
            };
        } else if f_r < simplex[n - 1].1 {
            simplex[n] = (reflected, f_r);
        } else {
            let (candidate, f_c) = if f_r < worst.1 {
                let outside: Vec<f64> = centroid
                    .iter()
                    .zip(&reflected)
                    .map(|(c, r)| c + 0.5 * (r - c))
                    .collect();
                let v = f(&outside);
                (outside, v)
            } else {
                let inside: Vec<f64> = centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c - 0.5 * (c - w))
                    .collect();
                let v = f(&inside);
                (inside, v)
            };
            if f_c < worst.1.min(f_r) {
                simplex[n] = (candidate, f_c);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, xi)| b + 0.5 * (xi - b))
                        .collect();
                    let fx = f(&x);
                    *vertex = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(by_value);
    NmOutcome {
        x: simplex[0].0.clone(),
        fx: simplex[0].1,
        iterations,
        converged,
    }
}
