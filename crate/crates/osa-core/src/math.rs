//! Small numeric helpers shared across modules.
//!
//! All float math is routed through [`libm`] so results are identical with
//! and without the `std` feature; nothing here depends on platform intrinsics.

/// Gaussian right-tail probability `Q(x) = P(Z > x)` for a standard normal `Z`.
pub fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

/// Inverse of [`q`]: returns `x` such that `Q(x) = p`, for `p` in `(0, 1)`.
///
/// Uses Acklam's rational approximation for the inverse normal CDF followed by
/// one Halley refinement step, giving roughly 1e-15 relative accuracy — far
/// tighter than any tolerance used by the detector design routines built on it.
pub fn q_inv(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "q_inv domain is (0, 1)");
    -inv_normal_cdf(p) // Q(x) = p  <=>  Phi(-x) = ... ; see note below
}

/// Inverse standard normal CDF `Phi^-1(p)`.
///
/// Coefficients from Acklam's approximation; max relative error ~1.15e-9
/// before refinement.
fn inv_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    const P_HIGH: f64 = 1.0 - P_LOW;

    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= P_HIGH {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // One Halley step against the exact CDF expressed via erfc.
    let e = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2) - p;
    let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_at_zero_is_half() {
        assert!((q(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn q_matches_tabulated_values() {
        // Standard normal tail table entries.
        assert!((q(1.0) - 0.158_655_253_931_457_05).abs() < 1e-12);
        assert!((q(1.281_551_565_544_600_5) - 0.10).abs() < 1e-12);
        assert!((q(2.326_347_874_040_841) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn q_inv_round_trips() {
        for &p in &[1e-9, 1e-4, 0.02, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999, 1.0 - 1e-9] {
            let x = q_inv(p);
            assert!(
                (q(x) - p).abs() <= 1e-13 * p.max(1e-3),
                "q(q_inv({p})) = {} drifted",
                q(x)
            );
        }
    }

    #[test]
    fn q_inv_is_antisymmetric() {
        for &p in &[0.01, 0.1, 0.3] {
            assert!((q_inv(p) + q_inv(1.0 - p)).abs() < 1e-12);
        }
    }
}
