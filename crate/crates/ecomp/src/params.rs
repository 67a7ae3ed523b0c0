use crate::error::{EcompError, Result};
use statrs::function::gamma::ln_gamma;

/// Which branch of the admissible parameter space applies.
///
/// The space is the union of two branches with different constraints;
/// they are never mixed and the fitted sub-models keep them separate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `alpha > beta >= 0` with `nu >= 0` and `p > 0`.
    AlphaGtBeta,
    /// `alpha = beta >= 0` with `nu > 0` and `0 < p < 1`.
    AlphaEqBeta,
}

/// Validated parameter 4-tuple of the extended COM-Poisson distribution
/// ECOMP(nu, p, alpha, beta), with p.m.f. proportional to
/// `[(nu)_k]^beta * p^k / (k!)^alpha` where `(nu)_k` is the rising factorial.
///
/// Construction rejects any combination outside
/// `(nu >= 0, p > 0, alpha > beta >= 0) ∪ (nu > 0, 0 < p < 1, alpha = beta >= 0)`,
/// for which the normalizing series diverges or is undefined.
///
/// `nu = 0` with `beta > 0` is admissible but degenerate: the convention
/// `(0)_0 = 1`, `(0)_k = 0` for `k >= 1` gives a point mass at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcompParams {
    nu: f64,
    p: f64,
    alpha: f64,
    beta: f64,
    branch: Branch,
}

impl EcompParams {
    pub fn new(nu: f64, p: f64, alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("nu", nu), ("p", p), ("alpha", alpha), ("beta", beta)] {
            if !v.is_finite() {
                return Err(EcompError::ParamSpaceViolation(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        if beta < 0.0 {
            return Err(EcompError::ParamSpaceViolation(format!(
                "beta must be >= 0, got {beta}"
            )));
        }
        if alpha < beta {
            return Err(EcompError::ParamSpaceViolation(format!(
                "alpha must be >= beta, got alpha = {alpha} < beta = {beta}"
            )));
        }
        let branch = if alpha > beta {
            if nu < 0.0 {
                return Err(EcompError::ParamSpaceViolation(format!(
                    "nu must be >= 0, got {nu}"
                )));
            }
            if p <= 0.0 {
                return Err(EcompError::ParamSpaceViolation(format!(
                    "p must be > 0, got {p}"
                )));
            }
            Branch::AlphaGtBeta
        } else {
            if nu <= 0.0 {
                return Err(EcompError::ParamSpaceViolation(format!(
                    "alpha = beta requires nu > 0, got nu = {nu}"
                )));
            }
            if p <= 0.0 || p >= 1.0 {
                return Err(EcompError::ParamSpaceViolation(format!(
                    "alpha = beta requires 0 < p < 1 (the geometric-ratio series diverges otherwise), got p = {p}"
                )));
            }
            Branch::AlphaEqBeta
        };
        Ok(Self {
            nu,
            p,
            alpha,
            beta,
            branch,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Which branch of the parameter space these parameters fall in.
    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// True for the `nu = 0, beta > 0` point mass at zero.
    pub fn is_degenerate(&self) -> bool {
        self.nu == 0.0 && self.beta > 0.0
    }

    /// One-step p.m.f. ratio `pmf(k+1)/pmf(k) = p (nu+k)^beta / (k+1)^alpha`.
    pub fn ratio(&self, k: u64) -> f64 {
        self.p * (self.nu + k as f64).powf(self.beta) / ((k + 1) as f64).powf(self.alpha)
    }

    /// Natural log of [`Self::ratio`]; `-inf` at k = 0 in the degenerate case.
    pub fn ln_ratio(&self, k: u64) -> f64 {
        // 0 * ln(0) must read as 0 here, matching 0^0 = 1 in `ratio`.
        let rise = if self.beta == 0.0 {
            0.0
        } else {
            self.beta * (self.nu + k as f64).ln()
        };
        let fall = if self.alpha == 0.0 {
            0.0
        } else {
            self.alpha * ((k + 1) as f64).ln()
        };
        self.p.ln() + rise - fall
    }

    /// True when the two parameter sets share (p, alpha, beta), the
    /// precondition for convolving or conditioning two components.
    pub fn shares_exponents_and_rate(&self, other: &EcompParams) -> bool {
        self.p == other.p && self.alpha == other.alpha && self.beta == other.beta
    }
}

/// Log of the rising factorial `(nu)_k = Γ(nu+k)/Γ(nu)`, with the
/// convention `(0)_0 = 1` and `(0)_k = 0` for `k >= 1` so the `nu = 0`
/// boundary avoids Γ(0).
pub fn log_rising_factorial(nu: f64, k: u64) -> f64 {
    if nu == 0.0 {
        if k == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        ln_gamma(nu + k as f64) - ln_gamma(nu)
    }
}
