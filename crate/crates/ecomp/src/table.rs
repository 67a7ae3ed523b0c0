use crate::error::{EcompError, Result};
use crate::params::{Branch, EcompParams};

/// Default certified bound on the omitted tail mass.
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;
/// Hard cap on the number of stored weights.
pub const TRUNCATION_CAP: usize = 10_000_000;
/// Tie tolerance on `variance - mean` for the dispersion verdict;
/// double-precision series noise makes an exact-zero test wrong.
pub const DISPERSION_TIE_TOL: f64 = 1e-9;
/// The certified tail contribution to a moment sum must stay below this
/// fraction of `max(1, |moment|)`.
const MOMENT_TAIL_TOL: f64 = 1e-9;

/// Dispersion of a count law relative to the Poisson benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dispersion {
    Under,
    Equi,
    Over,
}

impl Dispersion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dispersion::Under => "under",
            Dispersion::Equi => "equi",
            Dispersion::Over => "over",
        }
    }
}

/// Truncated log-space weight table with normalizing constant and a
/// certified bound on the omitted tail mass.
///
/// Entry `k` holds `beta*log (nu)_k - alpha*log k! + k*log p`, built
/// incrementally from the one-step log ratios so that the successive-ratio
/// identity `pmf(k+1)/pmf(k) = p (nu+k)^beta/(k+1)^alpha` holds to
/// floating-point round-off. `log_z` is the log of the normalizing series
/// over the stored range.
///
/// The table is immutable after construction; every method is a pure
/// function safe for concurrent use.
#[derive(Debug, Clone)]
pub struct PmfTable {
    params: EcompParams,
    log_weights: Vec<f64>,
    log_z: f64,
    tail_bound: f64,
    /// Certified upper bound on `ratio(j)` for every `j > max_k`.
    tail_ratio: f64,
    /// Log weight at `max_k + 1`, the first omitted term.
    log_w_next: f64,
    tail_tol: f64,
}

impl PmfTable {
    /// Build a table whose certified tail bound is at most `tail_tol`.
    ///
    /// The truncation index is chosen by geometric domination: once the
    /// one-step ratio is non-increasing beyond the cut (always eventually
    /// true on both branches) and bounded by some `r < 1`, the omitted
    /// mass is at most `w_{K+1} / (1 - r)` before normalization.
    pub fn build(params: EcompParams, tail_tol: f64) -> Result<Self> {
        Self::build_with_support(params, tail_tol, 0)
    }

    /// Like [`Self::build`], but keeps extending the stored weights until at
    /// least `min_len` entries are present even after the tail criterion is
    /// met. Useful when downstream recursions need a fixed prefix length.
    pub fn build_with_support(params: EcompParams, tail_tol: f64, min_len: usize) -> Result<Self> {
        if !(tail_tol > 0.0 && tail_tol <= 1e-3) {
            return Err(EcompError::ParamSpaceViolation(format!(
                "tail_tol must lie in (0, 1e-3], got {tail_tol}"
            )));
        }
        if params.is_degenerate() {
            // point mass at zero: the series is the single term w(0) = 1
            return Ok(Self {
                params,
                log_weights: vec![0.0],
                log_z: 0.0,
                tail_bound: 0.0,
                tail_ratio: 0.0,
                log_w_next: f64::NEG_INFINITY,
                tail_tol,
            });
        }

        // Index from which the one-step ratio is guaranteed non-increasing:
        // d/dk ln ratio < 0 iff k > (beta - alpha*nu)/(alpha - beta).
        let monotone_from: u64 = match params.branch() {
            Branch::AlphaEqBeta => 0,
            Branch::AlphaGtBeta => {
                let t = (params.beta() - params.alpha() * params.nu())
                    / (params.alpha() - params.beta());
                if t <= 0.0 {
                    0
                } else {
                    t.ceil() as u64
                }
            }
        };

        let ln_tol = tail_tol.ln();
        let mut lw: Vec<f64> = vec![0.0];
        // online log-sum-exp of the partial series, for the stopping check
        let mut running_max = 0.0f64;
        let mut running_sum = 1.0f64;
        loop {
            let k_last = (lw.len() - 1) as u64;
            let log_w_next = lw[lw.len() - 1] + params.ln_ratio(k_last);
            let can_bound = match params.branch() {
                Branch::AlphaEqBeta => true,
                Branch::AlphaGtBeta => k_last + 1 >= monotone_from,
            };
            if can_bound && lw.len() >= min_len.max(1) {
                let r_next = params.ratio(k_last + 1);
                let r = match params.branch() {
                    Branch::AlphaEqBeta => r_next.max(params.p()),
                    Branch::AlphaGtBeta => r_next,
                };
                if r < 1.0 {
                    let log_z_partial = running_max + running_sum.ln();
                    let log_tail = log_w_next - (1.0 - r).ln() - log_z_partial;
                    if log_tail <= ln_tol {
                        let log_z = logsumexp(&lw);
                        return Ok(Self {
                            params,
                            log_weights: lw,
                            log_z,
                            tail_bound: (log_w_next - (1.0 - r).ln() - log_z).exp(),
                            tail_ratio: r,
                            log_w_next,
                            tail_tol,
                        });
                    }
                }
            }
            if lw.len() >= TRUNCATION_CAP {
                return Err(EcompError::TruncationFailure {
                    cap: TRUNCATION_CAP,
                });
            }
            if log_w_next > running_max {
                running_sum = running_sum * (running_max - log_w_next).exp() + 1.0;
                running_max = log_w_next;
            } else {
                running_sum += (log_w_next - running_max).exp();
            }
            lw.push(log_w_next);
        }
    }

    pub fn params(&self) -> &EcompParams {
        &self.params
    }

    /// Largest index with a stored weight.
    pub fn max_k(&self) -> u64 {
        (self.log_weights.len() - 1) as u64
    }

    /// Log of the normalizing constant over the stored range.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// Certified upper bound on the normalized mass beyond `max_k`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// True when `pmf(k)` would be extrapolated beyond the certified range.
    pub fn tail_extrapolated(&self, k: u64) -> bool {
        k as usize >= self.log_weights.len()
    }

    /// Log p.m.f. at `k`. Beyond `max_k` the value is extrapolated through
    /// the one-step ratios; callers can detect that via
    /// [`Self::tail_extrapolated`].
    pub fn log_pmf(&self, k: u64) -> f64 {
        let idx = k as usize;
        if idx < self.log_weights.len() {
            self.log_weights[idx] - self.log_z
        } else {
            let mut lw = self.log_weights[self.log_weights.len() - 1];
            for j in self.max_k()..k {
                lw += self.params.ln_ratio(j);
            }
            lw - self.log_z
        }
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.log_pmf(k).exp()
    }

    /// Running normalized sum over `0..=k`, clamped to 1.
    pub fn cdf(&self, k: u64) -> f64 {
        let end = (k.min(self.max_k())) as usize;
        let mut acc = 0.0;
        for lw in &self.log_weights[..=end] {
            acc += (lw - self.log_z).exp();
        }
        acc.min(1.0)
    }

    /// Smallest `k` with `cdf(k) >= q` (left-continuous inverse: a `q`
    /// exactly on a cdf step returns the lower `k`).
    pub fn quantile(&self, q: f64) -> Result<u64> {
        if !(0.0..1.0).contains(&q) {
            return Err(EcompError::ParamSpaceViolation(format!(
                "quantile level must lie in [0, 1), got {q}"
            )));
        }
        let mut acc = 0.0;
        for (k, lw) in self.log_weights.iter().enumerate() {
            acc += (lw - self.log_z).exp();
            if acc >= q {
                return Ok(k as u64);
            }
        }
        Ok(self.max_k())
    }

    /// Raw moment `E[X^m]` for `m` in `1..=4` by direct summation.
    ///
    /// The omitted tail contribution is bounded through the same geometric
    /// domination that certified the table; if that bound is not negligible
    /// against the sum the table must be rebuilt with a tighter tolerance.
    pub fn moment(&self, order: u32) -> Result<f64> {
        if !(1..=4).contains(&order) {
            return Err(EcompError::ParamSpaceViolation(format!(
                "moment order must lie in 1..=4, got {order}"
            )));
        }
        let mut sum = 0.0;
        for (k, lw) in self.log_weights.iter().enumerate() {
            sum += (k as f64).powi(order as i32) * (lw - self.log_z).exp();
        }
        let p_next = (self.log_w_next - self.log_z).exp();
        let tail = p_next * shifted_geometric_moment(self.max_k() + 1, order, self.tail_ratio);
        if tail.is_nan() || tail > MOMENT_TAIL_TOL * sum.abs().max(1.0) {
            return Err(EcompError::TailDominates { order, bound: tail });
        }
        Ok(sum)
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1)
    }

    pub fn variance(&self) -> Result<f64> {
        let m1 = self.moment(1)?;
        let m2 = self.moment(2)?;
        Ok(m2 - m1 * m1)
    }

    /// Classify by the sign of `variance - mean` with the
    /// [`DISPERSION_TIE_TOL`] tie tolerance.
    pub fn dispersion(&self) -> Result<Dispersion> {
        let diff = self.variance()? - self.mean()?;
        Ok(if diff.abs() <= DISPERSION_TIE_TOL {
            Dispersion::Equi
        } else if diff > 0.0 {
            Dispersion::Over
        } else {
            Dispersion::Under
        })
    }
}

/// `Σ_{i>=0} (base + i)^m r^i` for `m <= 4`, `0 <= r < 1`, via the binomial
/// expansion and the closed forms of `Σ i^j r^i`.
fn shifted_geometric_moment(base: u64, m: u32, r: f64) -> f64 {
    let b = base as f64;
    let q = 1.0 - r;
    let l = [
        1.0 / q,
        r / (q * q),
        r * (1.0 + r) / (q * q * q),
        r * (1.0 + 4.0 * r + r * r) / (q * q * q * q),
        r * (1.0 + 11.0 * r + 11.0 * r * r + r * r * r) / (q * q * q * q * q),
    ];
    let binom: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    let mut total = 0.0;
    for j in 0..=(m as usize) {
        total += binom[m as usize][j] * b.powi((m as usize - j) as i32) * l[j];
    }
    total
}

/// Two-pass log-sum-exp with compensated summation.
pub(crate) fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let term = (v - max).exp();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::log_rising_factorial;
    use statrs::function::gamma::ln_gamma;

    fn table(nu: f64, p: f64, alpha: f64, beta: f64) -> PmfTable {
        PmfTable::build(
            EcompParams::new(nu, p, alpha, beta).unwrap(),
            DEFAULT_TAIL_TOL,
        )
        .unwrap()
    }

    #[test]
    fn log_z_poisson_reduction() {
        // beta = 0, alpha = 1 reduces to Poisson(p): Z = e^p
        let t = table(1.0, 1.0, 1.0, 0.0);
        assert!((t.log_z() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn log_z_geometric_reduction() {
        // nu = 1, alpha = beta reduces to geometric: Z = 1/(1-p)
        let t = table(1.0, 0.5, 1.0, 1.0);
        assert!((t.log_z() - 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn log_z_negative_binomial_reduction() {
        // alpha = beta = 1 reduces to NB(nu, p): Z = (1-p)^(-nu)
        let t = table(2.0, 0.5, 1.0, 1.0);
        assert!((t.log_z() - 2.0 * 2f64.ln()).abs() < 1e-13);
        // independent oracle: direct series summation through log-gamma
        let mut z = 0.0;
        for k in 0..200u64 {
            z += (log_rising_factorial(2.0, k) + (k as f64) * 0.5f64.ln()
                - ln_gamma(k as f64 + 1.0))
            .exp();
        }
        assert!((t.log_z() - z.ln()).abs() < 1e-13);
    }

    #[test]
    fn pmf_reduction_values() {
        let poisson = table(1.0, 1.0, 1.0, 0.0);
        assert!((poisson.pmf(0) - (-1f64).exp()).abs() < 1e-14);
        let geom = table(1.0, 0.5, 1.0, 1.0);
        assert!((geom.pmf(3) - 0.0625).abs() < 1e-14);
        // NB(2, 0.5): pmf(1) = C(2,1) 0.5 * 0.25 = 0.25
        let nb = table(2.0, 0.5, 1.0, 1.0);
        assert!((nb.pmf(1) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn successive_ratio_identity() {
        for t in [
            table(2.5, 0.7, 2.0, 1.0),
            table(1.0, 1.0, 1.0, 0.0),
            table(0.4, 0.6, 1.5, 1.5),
            table(0.0, 1.2, 1.0, 0.0),
        ] {
            let lw = t.log_weights();
            for k in 0..lw.len() - 1 {
                let got = (lw[k + 1] - lw[k]).exp();
                let want = t.params().ratio(k as u64);
                assert!(
                    (got - want).abs() <= 1e-12 * want,
                    "k={k}: got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn weights_match_log_gamma_formula() {
        // cross-check the incremental accumulation against the direct form
        // beta*log (nu)_k - alpha*log k! + k*log p
        for (nu, p, alpha, beta) in [
            (2.5, 0.7, 2.0, 1.0),
            (0.4, 0.6, 1.5, 1.5),
            (1.0, 2.0, 1.0, 0.0),
        ] {
            let t = table(nu, p, alpha, beta);
            for (k, lw) in t.log_weights().iter().enumerate() {
                let direct = beta * log_rising_factorial(nu, k as u64)
                    - alpha * ln_gamma(k as f64 + 1.0)
                    + k as f64 * p.ln();
                assert!((lw - direct).abs() < 1e-10, "k={k}: {lw} vs {direct}");
            }
        }
    }

    #[test]
    fn normalization_within_tail_tolerance() {
        for t in [
            table(1.0, 2.5, 1.0, 0.0),
            table(5.0, 0.6, 1.0, 1.0),
            table(0.3, 0.7, 0.5, 0.5),
            table(1.0, 1.5, 2.5, 0.0),
        ] {
            let total: f64 = (0..=t.max_k()).map(|k| t.pmf(k)).sum();
            assert!(total <= 1.0 + 1e-12, "total = {total}");
            assert!(total >= 1.0 - t.tail_tol(), "total = {total}");
            for k in 0..=t.max_k() {
                let v = t.pmf(k);
                assert!(v > 0.0 && v <= 1.0);
            }
        }
    }

    #[test]
    fn cdf_and_quantile() {
        let geom = table(1.0, 0.5, 1.0, 1.0);
        assert!((geom.cdf(1) - 0.75).abs() < 1e-13);
        assert_eq!(geom.quantile(0.0).unwrap(), 0);
        let poisson = table(1.0, 1.0, 1.0, 0.0);
        // cumulative e^{-1}(1 + 1 + 1/2) ≈ 0.9197 first reaches 0.9 at k = 2
        assert_eq!(poisson.quantile(0.9).unwrap(), 2);
        assert!(poisson.quantile(1.0).is_err());
        // cdf is nondecreasing, bounded by 1, and quantile(cdf(k)) <= k
        let mut prev = 0.0;
        for k in 0..=poisson.max_k() {
            let c = poisson.cdf(k);
            assert!(c >= prev && c <= 1.0);
            prev = c;
            assert!(poisson.quantile(c.min(1.0 - 1e-16)).unwrap() <= k);
        }
    }

    #[test]
    fn moments_and_dispersion() {
        let poisson = table(1.0, 1.0, 1.0, 0.0);
        assert!((poisson.mean().unwrap() - 1.0).abs() < 1e-12);
        assert!((poisson.variance().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(poisson.dispersion().unwrap(), Dispersion::Equi);

        // geometric(0.5): mean p/(1-p) = 1, variance p/(1-p)^2 = 2.
        // The k^2-weighted tail beyond the cut costs a few 1e-11, inside
        // the certified moment tolerance.
        let geom = table(1.0, 0.5, 1.0, 1.0);
        assert!((geom.mean().unwrap() - 1.0).abs() < 1e-9);
        assert!((geom.variance().unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(geom.dispersion().unwrap(), Dispersion::Over);

        // COM-Poisson with exponent 2 is underdispersed; oracle by direct
        // summation over the closed-form weights 1/(k!)^2
        let com = table(1.0, 1.0, 2.0, 0.0);
        assert_eq!(com.dispersion().unwrap(), Dispersion::Under);
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for k in 0..60u64 {
            let w = (-2.0 * ln_gamma(k as f64 + 1.0)).exp();
            z += w;
            m1 += k as f64 * w;
            m2 += (k as f64) * (k as f64) * w;
        }
        assert!((com.mean().unwrap() - m1 / z).abs() < 1e-12);
        assert!((com.variance().unwrap() - (m2 / z - (m1 / z).powi(2))).abs() < 1e-12);
    }

    #[test]
    fn degenerate_point_mass() {
        let t = table(0.0, 2.0, 2.0, 1.0);
        assert_eq!(t.max_k(), 0);
        assert!((t.pmf(0) - 1.0).abs() < 1e-15);
        assert_eq!(t.pmf(1), 0.0);
        assert!(t.tail_extrapolated(1));
        assert_eq!(t.tail_bound(), 0.0);
    }

    #[test]
    fn tail_extrapolation_is_flagged_and_consistent() {
        let t = table(2.0, 0.4, 1.0, 1.0);
        let k = t.max_k() + 3;
        assert!(t.tail_extrapolated(k));
        assert!(!t.tail_extrapolated(t.max_k()));
        // extrapolated values keep following the one-step ratio
        let a = t.log_pmf(k + 1) - t.log_pmf(k);
        assert!((a.exp() - t.params().ratio(k)).abs() < 1e-12);
    }

    #[test]
    fn build_with_support_extends_table() {
        let params = EcompParams::new(1.0, 0.5, 1.0, 1.0).unwrap();
        let t = PmfTable::build_with_support(params, DEFAULT_TAIL_TOL, 201).unwrap();
        assert!(t.max_k() >= 200);
        assert!(t.tail_bound() <= DEFAULT_TAIL_TOL);
    }

    #[test]
    fn tail_tol_validation() {
        let params = EcompParams::new(1.0, 0.5, 1.0, 1.0).unwrap();
        assert!(PmfTable::build(params, 0.0).is_err());
        assert!(PmfTable::build(params, 1e-2).is_err());
        assert!(PmfTable::build(params, -1.0).is_err());
    }

    #[test]
    fn loose_tail_makes_high_moments_untrustworthy() {
        // at the loosest permitted tolerance the k^4-weighted tail bound
        // dwarfs the moment tolerance and the table must be rebuilt
        let params = EcompParams::new(1.0, 0.8, 1.0, 1.0).unwrap();
        let loose = PmfTable::build(params, 1e-3).unwrap();
        match loose.moment(4) {
            Err(EcompError::TailDominates { order: 4, .. }) => {}
            other => panic!("expected TailDominates, got {other:?}"),
        }
        let tight = PmfTable::build(params, DEFAULT_TAIL_TOL).unwrap();
        // geometric fourth moment: sum of k^4 p^k (1-p) closed form
        let p = 0.8f64;
        let want = (p + 11.0 * p * p + 11.0 * p * p * p + p * p * p * p) / (1.0 - p).powi(4);
        let got = tight.moment(4).unwrap();
        assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
    }

    #[test]
    fn truncation_cap_fires_for_near_critical_p() {
        // geometric ratio 1 - 1e-12 needs ~3e13 terms for a 1e-14 tail
        let params = EcompParams::new(1.0, 1.0 - 1e-12, 1.0, 1.0).unwrap();
        match PmfTable::build(params, DEFAULT_TAIL_TOL) {
            Err(EcompError::TruncationFailure { cap }) => assert_eq!(cap, TRUNCATION_CAP),
            other => panic!("expected TruncationFailure, got {other:?}"),
        }
    }
}
