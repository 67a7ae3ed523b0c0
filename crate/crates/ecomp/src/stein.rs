//! The Stein operator `g ↦ E[X^alpha g(X) - p (X+nu)^beta g(X+1)]`, which
//! vanishes on every bounded test function exactly when X is ECOMP, plus a
//! residual suite and the literal necessity check: candidate ratios against
//! the one-step recurrence.

use crate::error::{EcompError, Result};
use crate::params::EcompParams;
use crate::table::PmfTable;

/// Residuals of the Stein functional over a family of test functions.
#[derive(Debug, Clone)]
pub struct SteinReport {
    /// (test-function id, residual) pairs.
    pub residuals: Vec<(String, f64)>,
    /// Largest absolute residual over the suite.
    pub max_abs: f64,
    /// The table's certified tail bound, which caps the truncation residue
    /// of each residual together with the function bound.
    pub table_tail_bound: f64,
}

fn residual<F>(pmf: &[f64], params: &EcompParams, g: &F) -> f64
where
    F: Fn(u64) -> f64,
{
    let p = params.p();
    let nu = params.nu();
    let alpha = params.alpha();
    let beta = params.beta();
    let mut sum = 0.0;
    for (k, &mass) in pmf.iter().enumerate() {
        let kf = k as f64;
        // 0^0 = 1 by convention, handled by powf
        let term = kf.powf(alpha) * g(k as u64) - p * (kf + nu).powf(beta) * g(k as u64 + 1);
        sum += mass * term;
    }
    sum
}

/// `Σ_k pmf(k) [k^alpha g(k) - p (k+nu)^beta g(k+1)]` over the stored range.
///
/// `bound` is the caller-declared sup of `|g|`; it is enforced by scanning
/// `0..=max_k+1`, the only range the sum touches. The omitted truncation
/// residue is at most `bound` times the table's tail moment bound.
pub fn stein_expectation<F>(table: &PmfTable, g: F, bound: f64) -> Result<f64>
where
    F: Fn(u64) -> f64,
{
    if !(bound.is_finite() && bound >= 0.0) {
        return Err(EcompError::ParamSpaceViolation(format!(
            "declared bound must be finite and nonnegative, got {bound}"
        )));
    }
    for k in 0..=table.max_k() + 1 {
        let v = g(k);
        if v.is_nan() || v.abs() > bound {
            return Err(EcompError::UnboundedTestFunction {
                at: k,
                value: v.abs(),
                bound,
            });
        }
    }
    let pmf: Vec<f64> = (0..=table.max_k()).map(|k| table.pmf(k)).collect();
    Ok(residual(&pmf, table.params(), &g))
}

/// Residuals for indicators of `{0..=j_max}` together with the constant 1,
/// `k ↦ min(k, j_max)` and the alternating sign `k ↦ (-1)^k`, evaluated on
/// the table's own p.m.f.
pub fn stein_suite(table: &PmfTable, j_max: u64) -> SteinReport {
    let pmf: Vec<f64> = (0..=table.max_k()).map(|k| table.pmf(k)).collect();
    let mut report = stein_suite_for_pmf(&pmf, table.params(), j_max);
    report.table_tail_bound = table.tail_bound();
    report
}

/// The same suite over a caller-supplied p.m.f. prefix, e.g. a deliberately
/// perturbed one: a single-entry multiplicative perturbation breaks the
/// recurrence at two adjacent indicator functions and shows up in `max_abs`.
pub fn stein_suite_for_pmf(pmf: &[f64], params: &EcompParams, j_max: u64) -> SteinReport {
    let mut residuals = Vec::with_capacity(j_max as usize + 4);
    for j in 0..=j_max {
        let r = residual(pmf, params, &|k| if k == j { 1.0 } else { 0.0 });
        residuals.push((format!("indicator_{j}"), r));
    }
    residuals.push(("constant_1".to_string(), residual(pmf, params, &|_| 1.0)));
    let jf = j_max as f64;
    residuals.push((
        format!("min_k_{j_max}"),
        residual(pmf, params, &|k| (k as f64).min(jf)),
    ));
    residuals.push((
        "alternating".to_string(),
        residual(pmf, params, &|k| {
            if k.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        }),
    ));

    let max_abs = residuals.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
    SteinReport {
        residuals,
        max_abs,
        table_tail_bound: 0.0,
    }
}

/// Necessity direction reduced to its literal content: true iff
/// `candidate(k+1)/candidate(k)` matches the one-step ratio within `tol`
/// (relative) wherever the candidate is positive.
pub fn verify_recurrence(candidate: &[f64], params: &EcompParams, tol: f64) -> bool {
    for k in 0..candidate.len().saturating_sub(1) {
        if candidate[k] <= 0.0 {
            return false;
        }
        let want = params.ratio(k as u64);
        let got = candidate[k + 1] / candidate[k];
        if want == 0.0 {
            if got != 0.0 {
                return false;
            }
        } else if ((got - want) / want).abs() > tol {
            return false;
        }
    }
    true
}
