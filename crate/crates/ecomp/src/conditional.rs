//! Convolution of two ECOMP components, the extended negative
//! hypergeometric (ENHG) conditional law of one component given the sum,
//! and the constructive reconstruction of both marginals from conditional
//! data.

use crate::error::{EcompError, Result};
use crate::params::log_rising_factorial;
use crate::table::{logsumexp, PmfTable};
use statrs::function::gamma::ln_gamma;

/// Cap on the conditioning sum, bounding the O(s) normalizer scan.
pub const SUM_CAP: u64 = 10_000;

/// Parameters of ENHG(s, nu1, nu2, alpha, beta), the law of one ECOMP
/// component conditional on the two-component sum being `s`. The rate
/// parameter p cancels and does not appear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhgParams {
    s: u64,
    nu1: f64,
    nu2: f64,
    alpha: f64,
    beta: f64,
}

impl EnhgParams {
    pub fn new(s: u64, nu1: f64, nu2: f64, alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("nu1", nu1), ("nu2", nu2), ("alpha", alpha), ("beta", beta)] {
            if !v.is_finite() {
                return Err(EcompError::ParamSpaceViolation(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        if beta < 0.0 || alpha < beta {
            return Err(EcompError::ParamSpaceViolation(format!(
                "exponents must satisfy alpha >= beta >= 0, got alpha = {alpha}, beta = {beta}"
            )));
        }
        if nu1 < 0.0 || nu2 < 0.0 {
            return Err(EcompError::ParamSpaceViolation(format!(
                "shape parameters must be >= 0, got nu1 = {nu1}, nu2 = {nu2}"
            )));
        }
        if beta > 0.0 && nu1 == 0.0 && nu2 == 0.0 && s > 0 {
            return Err(EcompError::ParamSpaceViolation(
                "nu1 = nu2 = 0 with beta > 0 puts no mass on sums above zero".to_string(),
            ));
        }
        if s > SUM_CAP {
            return Err(EcompError::ParamSpaceViolation(format!(
                "conditioning sum s = {s} exceeds the cap {SUM_CAP}"
            )));
        }
        Ok(Self {
            s,
            nu1,
            nu2,
            alpha,
            beta,
        })
    }

    pub fn s(&self) -> u64 {
        self.s
    }

    pub fn nu1(&self) -> f64 {
        self.nu1
    }

    pub fn nu2(&self) -> f64 {
        self.nu2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// A distribution on the finite support `0..=s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDist {
    probs: Vec<f64>,
}

impl FiniteDist {
    /// Validates nonnegativity and normalization to within 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(EcompError::ParamSpaceViolation(
                "finite distribution needs at least one support point".to_string(),
            ));
        }
        if probs.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(EcompError::ParamSpaceViolation(
                "finite distribution entries must be nonnegative".to_string(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(EcompError::ParamSpaceViolation(format!(
                "finite distribution must sum to 1 within 1e-12, got {total}"
            )));
        }
        Ok(Self { probs })
    }

    fn from_log_weights(log_w: &[f64]) -> Result<Self> {
        let log_norm = logsumexp(log_w);
        if log_norm == f64::NEG_INFINITY {
            return Err(EcompError::ZeroEvent(
                "all weights vanished during normalization".to_string(),
            ));
        }
        Ok(Self {
            probs: log_w.iter().map(|lw| (lw - log_norm).exp()).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Largest absolute entrywise difference against another distribution
    /// on the same support.
    pub fn max_abs_diff(&self, other: &FiniteDist) -> f64 {
        assert_eq!(self.len(), other.len(), "supports differ");
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `P(X + Y = s)` for independent ECOMP components sharing (p, alpha, beta),
/// computed in log space over the s+1 convolution terms.
pub fn convolve_sum_pmf(tx: &PmfTable, ty: &PmfTable, s: u64) -> Result<f64> {
    if !tx.params().shares_exponents_and_rate(ty.params()) {
        return Err(EcompError::MismatchedParams(
            "convolution requires the components to share (p, alpha, beta)".to_string(),
        ));
    }
    let terms: Vec<f64> = (0..=s).map(|k| tx.log_pmf(k) + ty.log_pmf(s - k)).collect();
    Ok(logsumexp(&terms).exp())
}

/// The ENHG p.m.f. of Eq.-style weights
/// `[(nu1)_k (nu2)_{s-k}]^beta / [k!(s-k)!]^alpha` on `0..=s`, normalized by
/// direct log-space summation.
pub fn enhg_pmf(ep: &EnhgParams) -> FiniteDist {
    let log_w: Vec<f64> = (0..=ep.s).map(|k| enhg_log_weight(ep, k)).collect();
    // construction rejects the all-degenerate case, so a normalizer exists
    FiniteDist::from_log_weights(&log_w).expect("ENHG weights always admit a normalizer")
}

fn enhg_log_weight(ep: &EnhgParams, k: u64) -> f64 {
    let rise = if ep.beta == 0.0 {
        0.0
    } else {
        ep.beta * (log_rising_factorial(ep.nu1, k) + log_rising_factorial(ep.nu2, ep.s - k))
    };
    let fall = if ep.alpha == 0.0 {
        0.0
    } else {
        ep.alpha * (ln_gamma(k as f64 + 1.0) + ln_gamma((ep.s - k) as f64 + 1.0))
    };
    rise - fall
}

/// Brute-force conditional `P(X = k | X + Y = s)` straight from the two
/// marginal tables; the independent oracle for the ENHG closed form.
pub fn conditional_bruteforce(tx: &PmfTable, ty: &PmfTable, s: u64) -> Result<FiniteDist> {
    if !tx.params().shares_exponents_and_rate(ty.params()) {
        return Err(EcompError::MismatchedParams(
            "conditioning requires the components to share (p, alpha, beta)".to_string(),
        ));
    }
    let terms: Vec<f64> = (0..=s).map(|k| tx.log_pmf(k) + ty.log_pmf(s - k)).collect();
    if logsumexp(&terms) == f64::NEG_INFINITY {
        return Err(EcompError::ZeroEvent(format!(
            "P(X + Y = {s}) underflows to zero"
        )));
    }
    FiniteDist::from_log_weights(&terms)
}

/// Conditional probabilities `c(x, s) = P(X = x | X + Y = s)` for every sum
/// `s = 0..=s_max`, the input of [`reconstruct_marginals`]. Row `s` has
/// `s + 1` entries. Only within-row ratios matter to the reconstruction, so
/// rows need not be normalized.
#[derive(Debug, Clone)]
pub struct ConditionalTable {
    rows: Vec<Vec<f64>>,
}

impl ConditionalTable {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(EcompError::ParamSpaceViolation(
                "conditional table needs rows for s = 0 and s = 1 at least".to_string(),
            ));
        }
        for (s, row) in rows.iter().enumerate() {
            if row.len() != s + 1 {
                return Err(EcompError::ParamSpaceViolation(format!(
                    "row for sum {s} must have {} entries, got {}",
                    s + 1,
                    row.len()
                )));
            }
            if row.iter().any(|&c| !c.is_finite() || c < 0.0) {
                return Err(EcompError::ParamSpaceViolation(format!(
                    "row for sum {s} contains a negative or non-finite entry"
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Build the table from the ENHG family itself, one row per sum.
    pub fn from_enhg(nu1: f64, nu2: f64, alpha: f64, beta: f64, s_max: u64) -> Result<Self> {
        let mut rows = Vec::with_capacity(s_max as usize + 1);
        for s in 0..=s_max {
            let ep = EnhgParams::new(s, nu1, nu2, alpha, beta)?;
            rows.push(enhg_pmf(&ep).probs().to_vec());
        }
        Self::from_rows(rows)
    }

    pub fn s_max(&self) -> u64 {
        (self.rows.len() - 1) as u64
    }

    fn entry(&self, x: u64, s: u64) -> f64 {
        self.rows[s as usize][x as usize]
    }

    fn positive_entry(&self, x: u64, s: u64) -> Result<f64> {
        let c = self.entry(x, s);
        if c > 0.0 {
            Ok(c)
        } else {
            Err(EcompError::DegenerateConditional(format!(
                "c({x}, {s}) = 0 but the reconstruction requires it positive"
            )))
        }
    }
}

/// Reconstruct unnormalized marginal weight sequences `(f, g)` from a
/// conditional table, tilted by the caller-supplied `p`.
///
/// The separable function `h` is recovered through the one-step relation
/// `h(x+1)/h(x) = h(1) * c(x+1,x+1) c(0,1) / (c(x,x+1) c(1,1))` with the
/// representative pinned at `h(0) = h(1) = 1`; conditional data determine
/// `h` only up to a geometric tilt, and `p` is exactly that free tilt
/// (per-step factor `f(x+1)/f(x) = p * h(x+1)/h(x)`). The second marginal
/// uses `g(y) ∝ h(y) c(0,y)/c(y,y) p^y` with the same tilt. Outputs are
/// weights, not probabilities: whether they normalize is a property of `p`.
pub fn reconstruct_marginals(c: &ConditionalTable, p: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(EcompError::ParamSpaceViolation(format!(
            "tilt parameter p must be positive and finite, got {p}"
        )));
    }
    let s_max = c.s_max();
    let ln_p = p.ln();
    let anchor = c.positive_entry(0, 1)?.ln() - c.positive_entry(1, 1)?.ln();

    let mut log_h = vec![0.0f64; s_max as usize + 1];
    for x in 1..s_max {
        let step = c.positive_entry(x + 1, x + 1)?.ln() - c.positive_entry(x, x + 1)?.ln() + anchor;
        log_h[x as usize + 1] = log_h[x as usize] + step;
    }

    let f: Vec<f64> = (0..=s_max)
        .map(|x| (log_h[x as usize] + x as f64 * ln_p).exp())
        .collect();
    let mut g = Vec::with_capacity(s_max as usize + 1);
    g.push(1.0);
    for y in 1..=s_max {
        let correction = c.positive_entry(0, y)?.ln() - c.positive_entry(y, y)?.ln();
        g.push((log_h[y as usize] + correction + y as f64 * ln_p).exp());
    }
    Ok((f, g))
}
