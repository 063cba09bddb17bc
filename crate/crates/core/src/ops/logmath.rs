//! Log-domain arithmetic helpers used by CTC and beam scoring.

/// `log(exp(a) + exp(b))` computed stably; identity element is `-inf`.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// `log Σ exp(xs)` computed stably; `-inf` for an empty slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let mut hi = f64::NEG_INFINITY;
    for &x in xs {
        if x > hi {
            hi = x;
        }
    }
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0;
    for &x in xs {
        sum += libm::exp(x - hi);
    }
    hi + libm::log(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct_computation() {
        let a: f64 = -1.25;
        let b: f64 = -3.5;
        let direct = ((a.exp()) + (b.exp())).ln();
        assert!((log_add(a, b) - direct).abs() < 1e-14);
        assert_eq!(log_add(f64::NEG_INFINITY, b), b);
        assert_eq!(log_add(a, f64::NEG_INFINITY), a);
        assert_eq!(log_add(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
    }

    #[test]
    fn log_add_is_stable_for_large_magnitudes() {
        // Naive exp would overflow; the result must stay close to the max.
        let x = log_add(1000.0, 1000.0);
        assert!((x - (1000.0 + core::f64::consts::LN_2)).abs() < 1e-12);
        let y = log_add(-1000.0, -1000.0);
        assert!((y - (-1000.0 + core::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn logsumexp_handles_empty_and_all_neg_inf() {
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert_eq!(logsumexp(&[f64::NEG_INFINITY; 4]), f64::NEG_INFINITY);
        let v = [0.0, 0.0, 0.0, 0.0];
        assert!((logsumexp(&v) - (4.0f64).ln()).abs() < 1e-14);
    }
}
