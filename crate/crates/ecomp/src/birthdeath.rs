//! Birth-death characterization: the chain with arrival rate
//! `(nu+k)^beta * lambda` and service rate `k^alpha * mu` has the ECOMP
//! law with `p = lambda/mu` as its stationary distribution. Includes a
//! continuous-time stochastic simulation cross-check.

use crate::error::{EcompError, Result};
use crate::params::EcompParams;
use crate::table::{logsumexp, PmfTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

/// Birth-death rates truncated (reflecting) at state `k_cap`.
///
/// The arrival rate is defined from state 0 inclusive as `nu^beta * lambda`:
/// the chain needs a birth rate at 0 and the one-step pmf ratio at k = 0
/// forces exactly that value.
#[derive(Debug, Clone, Copy)]
pub struct BdRates {
    params: EcompParams,
    lambda_scale: f64,
    mu_scale: f64,
    k_cap: u64,
}

/// Build rates for the chain whose stationary law is `params`, with
/// `lambda = p * mu` so that `p = lambda/mu` holds by construction.
pub fn make_rates(params: EcompParams, mu_scale: f64, k_cap: u64) -> Result<BdRates> {
    if !(mu_scale > 0.0 && mu_scale.is_finite()) {
        return Err(EcompError::ParamSpaceViolation(format!(
            "service scale mu must be positive and finite, got {mu_scale}"
        )));
    }
    if k_cap < 1 {
        return Err(EcompError::ParamSpaceViolation(
            "state-space truncation needs k_cap >= 1".to_string(),
        ));
    }
    Ok(BdRates {
        params,
        lambda_scale: params.p() * mu_scale,
        mu_scale,
        k_cap,
    })
}

impl BdRates {
    pub fn params(&self) -> &EcompParams {
        &self.params
    }

    pub fn lambda_scale(&self) -> f64 {
        self.lambda_scale
    }

    pub fn mu_scale(&self) -> f64 {
        self.mu_scale
    }

    pub fn k_cap(&self) -> u64 {
        self.k_cap
    }

    /// Arrival rate out of state `k`; zero at the reflecting cap.
    pub fn arrival(&self, k: u64) -> f64 {
        if k >= self.k_cap {
            0.0
        } else {
            (self.params.nu() + k as f64).powf(self.params.beta()) * self.lambda_scale
        }
    }

    /// Service rate out of state `k`; zero at the floor.
    pub fn service(&self, k: u64) -> f64 {
        if k == 0 {
            0.0
        } else {
            (k as f64).powf(self.params.alpha()) * self.mu_scale
        }
    }
}

/// Stationary distribution on `0..=k_cap` from the detailed-balance
/// products `pi_{k+1} = pi_k * arrival(k)/service(k+1)`, normalized.
pub fn stationary(rates: &BdRates) -> Vec<f64> {
    let n = rates.k_cap as usize + 1;
    let mut log_pi = Vec::with_capacity(n);
    log_pi.push(0.0f64);
    for k in 0..rates.k_cap {
        let a = rates.arrival(k);
        let step = if a == 0.0 {
            f64::NEG_INFINITY
        } else {
            a.ln() - rates.service(k + 1).ln()
        };
        let prev = log_pi[k as usize];
        log_pi.push(prev + step);
    }
    let log_norm = logsumexp(&log_pi);
    log_pi.iter().map(|lp| (lp - log_norm).exp()).collect()
}

/// Continuous-time simulation: exponential holding times, jumps up or down
/// with probability proportional to the rates, reflecting at the cap.
/// Returns time-weighted occupancy fractions on `0..=k_cap`, starting from
/// state 0. Deterministic for a fixed seed.
pub fn simulate(rates: &BdRates, horizon: f64, seed: u64) -> Result<Vec<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(EcompError::ParamSpaceViolation(format!(
            "simulation horizon must be positive and finite, got {horizon}"
        )));
    }
    let mut occupancy = vec![0.0f64; rates.k_cap as usize + 1];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state: u64 = 0;
    let mut t = 0.0f64;
    loop {
        let a = rates.arrival(state);
        let s = rates.service(state);
        let total = a + s;
        if total == 0.0 {
            // absorbed (degenerate chain): the rest of the horizon sits here
            occupancy[state as usize] += horizon - t;
            break;
        }
        let dt = Exp::new(total)
            .expect("total rate is positive")
            .sample(&mut rng);
        if t + dt >= horizon {
            occupancy[state as usize] += horizon - t;
            break;
        }
        occupancy[state as usize] += dt;
        t += dt;
        let u: f64 = rng.random();
        if u < a / total {
            state += 1;
        } else {
            state -= 1;
        }
    }
    for o in occupancy.iter_mut() {
        *o /= horizon;
    }
    Ok(occupancy)
}

/// Smallest cap with at most `mass_tol` stationary mass above it,
/// accounting for the table's own certified tail bound.
pub fn suggest_truncation(table: &PmfTable, mass_tol: f64) -> u64 {
    let mut acc = 0.0;
    for k in 0..=table.max_k() {
        acc += table.pmf(k);
        if 1.0 - acc + table.tail_bound() <= mass_tol {
            return k.max(1);
        }
    }
    table.max_k().max(1)
}

/// Total variation distance between two distributions on the same support.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "supports differ");
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
