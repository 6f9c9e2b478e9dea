//! Self-contained error function.
//!
//! Rational Chebyshev approximations over three ranges, the classic scheme
//! used by the netlib SPECFUN `calerf` routine. Keeping the implementation
//! in-crate gives bit-identical results across platforms, which the
//! deterministic batch pipeline relies on.
//!
//! Accuracy at `f64` is a few ulp; the test suite pins a relative error
//! bound of 1e-12 against an independent series oracle.

use crate::real::Real;

/// Split point between the central rational approximation and the
/// complementary-function ranges.
const THRESHOLD: f64 = 0.46875;

/// 1/sqrt(pi).
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_28;

// Coefficients for erf(x), |x| <= 0.46875.
const A: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_56e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_4e3,
    1.857_777_061_846_031_5e-1,
];
const B: [f64; 4] = [
    2.360_129_095_234_412_09e1,
    2.440_246_379_344_441_7e2,
    1.282_616_526_077_372_3e3,
    2.844_236_833_439_170_6e3,
];

// Coefficients for erfc(x), 0.46875 < x <= 4.
const C: [f64; 9] = [
    5.641_884_969_886_700_9e-1,
    8.883_149_794_388_375_9e0,
    6.611_919_063_714_163e1,
    2.986_351_381_974_001_3e2,
    8.819_522_212_417_69e2,
    1.712_047_612_634_070_6e3,
    2.051_078_377_826_071_5e3,
    1.230_339_354_797_997_2e3,
    2.153_115_354_744_038_5e-8,
];
const D: [f64; 8] = [
    1.574_492_611_070_983_5e1,
    1.176_939_508_913_125e2,
    5.371_811_018_620_098_5e2,
    1.621_389_574_566_690_2e3,
    3.290_799_235_733_459_6e3,
    4.362_619_090_143_247e3,
    3.439_367_674_143_721_6e3,
    1.230_339_354_803_749_4e3,
];

// Coefficients for erfc(x), x > 4.
const P: [f64; 6] = [
    3.053_266_349_612_323_4e-1,
    3.603_448_999_498_044_4e-1,
    1.257_817_261_112_292_5e-1,
    1.608_378_514_874_227_7e-2,
    6.587_491_615_298_378e-4,
    1.631_538_713_730_209_8e-2,
];
const Q: [f64; 5] = [
    2.568_520_192_289_822_4e0,
    1.872_952_849_923_460_4e0,
    5.279_051_029_514_284_1e-1,
    6.051_834_131_244_131_9e-2,
    2.335_204_976_268_691_8e-3,
];

/// The error function, `2/sqrt(pi)` times the integral of `exp(-t^2)` from 0 to `x`.
///
/// Odd, strictly increasing, with range (-1, 1). Total over all finite inputs.
pub fn erf<T: Real>(x: T) -> T {
    let y = x.abs();
    if y <= T::c(THRESHOLD) {
        let z = y * y;
        let mut num = T::c(A[4]) * z;
        let mut den = z;
        for i in 0..3 {
            num = (num + T::c(A[i])) * z;
            den = (den + T::c(B[i])) * z;
        }
        x * (num + T::c(A[3])) / (den + T::c(B[3]))
    } else if x > T::zero() {
        T::one() - erfc_positive(y)
    } else {
        erfc_positive(y) - T::one()
    }
}

/// The complementary error function `1 - erf(x)`.
pub fn erfc<T: Real>(x: T) -> T {
    let y = x.abs();
    if y <= T::c(THRESHOLD) {
        T::one() - erf(x)
    } else if x > T::zero() {
        erfc_positive(y)
    } else {
        T::c(2.0) - erfc_positive(y)
    }
}

/// erfc for arguments above the central threshold; `y > 0.46875`.
fn erfc_positive<T: Real>(y: T) -> T {
    let raw = if y <= T::c(4.0) {
        let mut num = T::c(C[8]) * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + T::c(C[i])) * y;
            den = (den + T::c(D[i])) * y;
        }
        (num + T::c(C[7])) / (den + T::c(D[7]))
    } else {
        let z = (y * y).recip();
        let mut num = T::c(P[5]) * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + T::c(P[i])) * z;
            den = (den + T::c(Q[i])) * z;
        }
        let r = z * (num + T::c(P[4])) / (den + T::c(Q[4]));
        (T::c(FRAC_1_SQRT_PI) - r) / y
    };
    // exp(-y^2) split into an exactly representable square plus a small
    // correction; keeps the tail accurate for large y.
    let sixteenth = T::c(16.0);
    let ysq = (y * sixteenth).trunc() / sixteenth;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp() * raw
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Series oracle: erf(x) = 2x e^{-x^2}/sqrt(pi) * sum_n (2x^2)^n / (2n+1)!!.
    ///
    /// All terms are positive, so there is no cancellation; converges for
    /// every x of interest here. Independent of the rational approximation.
    fn erf_series(x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        let mut n = 0u32;
        loop {
            n += 1;
            term *= 2.0 * x * x / (2.0 * n as f64 + 1.0);
            sum += term;
            if term < 1e-20 * sum || n > 500 {
                break;
            }
        }
        2.0 * x * (-x * x).exp() / std::f64::consts::PI.sqrt() * sum
    }

    /// Alternating Taylor form, reliable for small |x|.
    fn erf_taylor(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0u32;
        loop {
            n += 1;
            let nf = n as f64;
            term *= -x * x / nf;
            let contrib = term / (2.0 * nf + 1.0);
            sum += contrib;
            if contrib.abs() < 1e-20 * sum.abs() || n > 200 {
                break;
            }
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    }

    #[test]
    fn oracles_agree_where_both_converge() {
        for i in 0..=200 {
            let x = i as f64 * 0.01;
            let a = erf_series(x);
            let b = erf_taylor(x);
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-30), "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn erf_zero_is_zero() {
        assert_eq!(erf(0.0f64), 0.0);
    }

    #[test]
    fn erf_one_matches_series() {
        let expected = erf_taylor(1.0); // 0.842700792949715...
        assert!((expected - 0.842_700_792_949_715).abs() < 1e-14);
        let got = erf(1.0f64);
        assert!((got - expected).abs() <= 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn odd_symmetry() {
        for i in 1..=600 {
            let x = i as f64 * 0.01;
            assert_eq!(erf(-x), -erf(x), "x={x}");
        }
    }

    #[test]
    fn matches_series_to_1e12_dense() {
        let mut worst = 0.0f64;
        for i in 0..=12_000 {
            let x = -6.0 + i as f64 * 0.001;
            let reference = erf_series(x);
            let got = erf(x);
            if reference != 0.0 {
                worst = worst.max(((got - reference) / reference).abs());
            }
        }
        assert!(worst <= 1e-12, "worst relative error {worst}");
    }

    #[test]
    fn range_is_open_unit_interval() {
        for x in [0.1f64, 1.0, 3.0, 5.9, 26.0, 1e6] {
            assert!(erf(x) <= 1.0 && erf(x) > 0.0);
            assert!(erf(-x) >= -1.0 && erf(-x) < 0.0);
        }
        assert_eq!(erf(1e12f64), 1.0); // saturates at the representable limit
    }

    #[test]
    fn erfc_complements_erf() {
        for i in 0..=120 {
            let x = -6.0 + i as f64 * 0.1;
            let lhs = erfc(x);
            let rhs = 1.0 - erf(x);
            assert!((lhs - rhs).abs() <= 1e-12, "x={x}");
        }
    }

    #[test]
    fn f32_instantiation_is_sane() {
        let v: f32 = erf(1.0f32);
        assert!((v - 0.842_700_8).abs() < 1e-6);
    }
}
