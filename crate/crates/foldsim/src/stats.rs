//! Binomial estimates of logical error rates.

use serde::{Deserialize, Serialize};

/// Likelihood ratio defining the reported interval.
pub const LIKELIHOOD_FACTOR: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LerEstimate {
    pub ler: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// ln of the binomial likelihood without the constant binomial coefficient.
pub fn log_likelihood(errors: u64, shots: u64, q: f64) -> f64 {
    let (k, n) = (errors as f64, shots as f64);
    let term = |count: f64, prob: f64| if count == 0.0 { 0.0 } else { count * prob.ln() };
    term(k, q) + term(n - k, 1.0 - q)
}

/// Maximum-likelihood rate and the set of rates whose likelihood is within
/// a factor 1000 of the maximum.
pub fn estimate(errors: u64, shots: u64) -> LerEstimate {
    if shots == 0 {
        return LerEstimate { ler: 0.0, ci_low: 0.0, ci_high: 1.0 };
    }
    assert!(errors <= shots, "{errors} errors in {shots} shots");
    let ler = errors as f64 / shots as f64;
    let floor = log_likelihood(errors, shots, ler) - LIKELIHOOD_FACTOR.ln();
    let inside = |q: f64| log_likelihood(errors, shots, q) >= floor;
    let ci_low = if errors == 0 { 0.0 } else { bisect(0.0, ler, &inside, false) };
    let ci_high = if errors == shots { 1.0 } else { bisect(ler, 1.0, &inside, true) };
    LerEstimate { ler, ci_low, ci_high }
}

/// Edge of the region inside [lo, hi]. For the upper edge the region holds
/// `lo`, for the lower edge it holds `hi`.
fn bisect(mut lo: f64, mut hi: f64, inside: &dyn Fn(f64) -> bool, upper: bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) == upper {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if upper {
        lo
    } else {
        hi
    }
}

/// Normal-approximation standard error of a binomial rate.
pub fn standard_error(errors: u64, shots: u64) -> f64 {
    if shots == 0 {
        return 0.0;
    }
    let q = errors as f64 / shots as f64;
    (q * (1.0 - q) / shots as f64).sqrt()
}

impl LerEstimate {
    pub fn overlaps(&self, other: &LerEstimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}
