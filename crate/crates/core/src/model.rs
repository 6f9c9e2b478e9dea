//! Erf-sum approximant of a step curve and its analytic derivatives.
//!
//! A model is an offset plus a sum of scaled error-function terms. Each term
//! smooths one price transition: `amplitude * (erf(shape * (x - center)) + 1)`
//! rises from 0 to `2 * amplitude` around `center`, with `shape` controlling
//! how sharp the transition is. Non-negative amplitudes make the sum
//! monotone; demand models subtract the sum from the offset instead of
//! adding it, so both sides keep `amplitude >= 0`.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::erf::erf;
use crate::market::Side;
use crate::real::Real;

/// 2/sqrt(pi), the derivative of erf at zero.
fn erf_slope_at_zero<T: Real>() -> T {
    T::c(std::f64::consts::FRAC_2_SQRT_PI)
}

/// One smoothed price transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErfTerm<T> {
    /// Half the total price rise carried by this term, in euro; `>= 0`.
    #[serde(rename = "a")]
    pub amplitude: T,
    /// Quantity at which the transition is centered, in MW.
    #[serde(rename = "b")]
    pub center: T,
    /// Transition sharpness in 1/MW; `> 0`.
    #[serde(rename = "c")]
    pub shape: T,
}

impl<T: Real> ErfTerm<T> {
    pub fn new(amplitude: T, center: T, shape: T) -> Result<Self, ModelError> {
        let term = Self { amplitude, center, shape };
        term.validate()?;
        Ok(term)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let ok = self.amplitude.is_finite()
            && self.amplitude >= T::zero()
            && self.center.is_finite()
            && self.shape.is_finite()
            && self.shape > T::zero();
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidTerm(format!(
                "amplitude {} must be >= 0 and shape {} must be > 0, center {} finite",
                self.amplitude, self.shape, self.center
            )))
        }
    }

    /// `erf(shape * (x - center)) + 1`, the unscaled basis value in (0, 2).
    fn basis(&self, x: T) -> T {
        erf(self.shape * (x - self.center)) + T::one()
    }

    /// Gaussian factor `2/sqrt(pi) * exp(-(shape * (x - center))^2)`.
    fn gaussian(&self, x: T) -> T {
        let u = self.shape * (x - self.center);
        erf_slope_at_zero::<T>() * (-u * u).exp()
    }
}

/// Where a fitted model came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub date: Option<NaiveDate>,
    pub hour: Option<u8>,
    /// Requested segment count for the fit.
    pub m: usize,
}

/// Sum-of-erf approximant of one side's step curve.
///
/// Supply evaluates to `offset + sum(term)`: nondecreasing, starting near
/// `offset` (the curve's lowest price) and saturating at
/// `offset + 2 * sum(amplitudes)`. Demand evaluates to `offset - sum(term)`:
/// nonincreasing from `offset` (the curve's highest price, its value near
/// quantity zero) down to `offset - 2 * sum(amplitudes)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErfSumModel<T> {
    side: Side,
    offset: T,
    terms: Vec<ErfTerm<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid erf term: {0}")]
    InvalidTerm(String),
    #[error("offset {0} is not finite")]
    InvalidOffset(String),
}

/// Per-term partial derivatives of the model value at one quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermGradient<T> {
    pub amplitude: T,
    pub center: T,
    pub shape: T,
}

impl<T: Real> ErfSumModel<T> {
    pub fn new(side: Side, offset: T, terms: Vec<ErfTerm<T>>) -> Result<Self, ModelError> {
        if !offset.is_finite() {
            return Err(ModelError::InvalidOffset(format!("{offset}")));
        }
        for term in &terms {
            term.validate()?;
        }
        Ok(Self { side, offset, terms, provenance: None })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn terms(&self) -> &[ErfTerm<T>] {
        &self.terms
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// +1 for supply, -1 for demand; the sign applied to the term sum.
    fn orientation(&self) -> T {
        match self.side {
            Side::Supply => T::one(),
            Side::Demand => -T::one(),
        }
    }

    /// Model price at the given quantity.
    pub fn evaluate(&self, quantity: T) -> T {
        let sum = self
            .terms
            .iter()
            .fold(T::zero(), |acc, t| acc + t.amplitude * t.basis(quantity));
        self.offset + self.orientation() * sum
    }

    /// Limit of the model as quantity grows without bound.
    pub fn saturation(&self) -> T {
        let total = self
            .terms
            .iter()
            .fold(T::zero(), |acc, t| acc + t.amplitude + t.amplitude);
        self.offset + self.orientation() * total
    }

    /// Per-term partials of the model value with respect to (amplitude,
    /// center, shape), at the given quantity.
    pub fn gradient(&self, quantity: T) -> Vec<TermGradient<T>> {
        let sign = self.orientation();
        self.terms
            .iter()
            .map(|t| {
                let g = t.gaussian(quantity);
                TermGradient {
                    amplitude: sign * t.basis(quantity),
                    center: -sign * t.amplitude * t.shape * g,
                    shape: sign * t.amplitude * (quantity - t.center) * g,
                }
            })
            .collect()
    }

    /// Slope of the model in euro per MW; `>= 0` for supply, `<= 0` for demand.
    pub fn derivative(&self, quantity: T) -> T {
        let sum = self
            .terms
            .iter()
            .fold(T::zero(), |acc, t| acc + t.amplitude * t.shape * t.gaussian(quantity));
        self.orientation() * sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn term(a: f64, b: f64, c: f64) -> ErfTerm<f64> {
        ErfTerm { amplitude: a, center: b, shape: c }
    }

    fn supply_model(offset: f64, terms: Vec<ErfTerm<f64>>) -> ErfSumModel<f64> {
        ErfSumModel::new(Side::Supply, offset, terms).unwrap()
    }

    #[test]
    fn single_term_at_center_is_amplitude() {
        let m = supply_model(0.0, vec![term(1.0, 0.0, 1.0)]);
        assert_eq!(m.evaluate(0.0), 1.0);
    }

    #[test]
    fn single_term_saturates_at_twice_amplitude() {
        let m = supply_model(0.0, vec![term(1.0, 0.0, 1.0)]);
        assert!((m.evaluate(1e9) - 2.0).abs() < 1e-12);
        assert_eq!(m.saturation(), 2.0);
    }

    #[test]
    fn terms_add_linearly_at_shared_center() {
        let m = supply_model(0.0, vec![term(1.0, 0.0, 1.0), term(2.0, 0.0, 1.0)]);
        assert_eq!(m.evaluate(0.0), 3.0);
    }

    #[test]
    fn demand_subtracts_from_offset() {
        // Mirror image of the supply model around the offset midpoint.
        let d = ErfSumModel::new(Side::Demand, 2.0, vec![term(1.0, 0.0, 1.0)]).unwrap();
        assert_eq!(d.evaluate(0.0), 1.0);
        assert!((d.evaluate(50.0) - 0.0).abs() < 1e-12);
        assert_eq!(d.saturation(), 0.0);
    }

    #[test]
    fn gradient_amplitude_at_center() {
        let m = supply_model(0.0, vec![term(1.0, 0.0, 1.0)]);
        let g = &m.gradient(0.0)[0];
        assert_eq!(g.amplitude, 1.0); // erf(0) + 1
        let expected_center = -2.0 / std::f64::consts::PI.sqrt();
        assert!((g.center - expected_center).abs() < 1e-12);
        assert_eq!(g.shape, 0.0); // (x - center) factor vanishes
    }

    #[test]
    fn derivative_at_center_is_gaussian_peak() {
        let m = supply_model(0.0, vec![term(1.0, 0.0, 1.0)]);
        let expected = 2.0 / std::f64::consts::PI.sqrt();
        assert!((m.derivative(0.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_amplitude_model_is_flat() {
        let m = supply_model(7.5, vec![term(0.0, 3.0, 1.0), term(0.0, -2.0, 0.5)]);
        for i in -100..=100 {
            let x = i as f64 * 0.37;
            assert_eq!(m.evaluate(x), 7.5);
            assert_eq!(m.derivative(x), 0.0);
        }
    }

    #[test]
    fn negative_amplitude_is_rejected() {
        assert!(ErfTerm::new(-1.0, 0.0, 1.0).is_err());
        assert!(ErfTerm::new(1.0, 0.0, 0.0).is_err());
        assert!(ErfTerm::new(1.0, 0.0, -2.0).is_err());
    }

    #[test]
    fn serialization_round_trips_losslessly() {
        let m = supply_model(
            0.1 + 0.2, // deliberately not a round decimal
            vec![term(1.0 / 3.0, 12345.678_901_234, 4.0 / 7.0)],
        )
        .with_provenance(Provenance {
            date: NaiveDate::from_ymd_opt(2017, 1, 1),
            hour: Some(1),
            m: 15,
        });
        let json = serde_json::to_string(&m).unwrap();
        let back: ErfSumModel<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
        // Field names of the documented record.
        assert!(json.contains("\"side\""));
        assert!(json.contains("\"offset\""));
        assert!(json.contains("\"a\"") && json.contains("\"b\"") && json.contains("\"c\""));
        assert!(json.contains("\"provenance\""));
    }

    // Term scales matching fitted auction curves: centers at MW magnitudes,
    // sharpness tied to breakpoint spacing.
    fn arb_terms() -> impl Strategy<Value = Vec<ErfTerm<f64>>> {
        prop::collection::vec(
            (0.0f64..60.0, -50.0f64..5_000.0, 0.001f64..0.5)
                .prop_map(|(a, b, c)| ErfTerm { amplitude: a, center: b, shape: c }),
            1..8,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn supply_is_nondecreasing_demand_nonincreasing(
            terms in arb_terms(),
            offset in 0.0f64..200.0,
        ) {
            let s = ErfSumModel::new(Side::Supply, offset, terms.clone()).unwrap();
            let d = ErfSumModel::new(Side::Demand, offset, terms).unwrap();
            let mut prev_s = f64::NEG_INFINITY;
            let mut prev_d = f64::INFINITY;
            for i in 0..=1000 {
                let x = -100.0 + i as f64 * 5.2;
                let vs = s.evaluate(x);
                let vd = d.evaluate(x);
                prop_assert!(vs >= prev_s - 1e-9);
                prop_assert!(vd <= prev_d + 1e-9);
                prop_assert!(vs.is_finite() && vd.is_finite());
                prev_s = vs;
                prev_d = vd;
            }
        }

        #[test]
        fn gradient_matches_central_differences(
            terms in arb_terms(),
            offset in 0.0f64..200.0,
            x in -50.0f64..5_000.0,
            demand in proptest::bool::ANY,
        ) {
            let side = if demand { Side::Demand } else { Side::Supply };
            let model = ErfSumModel::new(side, offset, terms.clone()).unwrap();
            let grads = model.gradient(x);
            for (i, g) in grads.iter().enumerate() {
                let t = terms[i];
                let check = |get: fn(&ErfTerm<f64>) -> f64,
                             set: fn(&mut ErfTerm<f64>, f64),
                             analytic: f64| {
                    let base = get(&t);
                    let h = 3e-7 * base.abs().max(1.0);
                    let mut lo_terms = terms.clone();
                    set(&mut lo_terms[i], base - h);
                    let mut hi_terms = terms.clone();
                    set(&mut hi_terms[i], base + h);
                    // Bypass validation: probes may push amplitude slightly
                    // below zero, which is fine for a difference quotient.
                    let lo = ErfSumModel { side, offset, terms: lo_terms, provenance: None };
                    let hi = ErfSumModel { side, offset, terms: hi_terms, provenance: None };
                    let numeric = (hi.evaluate(x) - lo.evaluate(x)) / (2.0 * h);
                    // Relative agreement with a unit floor: differencing
                    // values of order `offset` cannot resolve partials far
                    // below the rounding noise of the subtraction.
                    let scale = analytic.abs().max(numeric.abs()).max(1.0);
                    prop_assert!(
                        (analytic - numeric).abs() <= 1e-6 * scale,
                        "param {i}: analytic {analytic} vs numeric {numeric}"
                    );
                    Ok(())
                };
                check(|t| t.amplitude, |t, v| t.amplitude = v, g.amplitude)?;
                check(|t| t.center, |t, v| t.center = v, g.center)?;
                check(|t| t.shape, |t, v| t.shape = v, g.shape)?;
            }
        }

        #[test]
        fn value_at_center_splits_into_own_plus_others(
            terms in arb_terms(),
            offset in 0.0f64..200.0,
            pick in 0usize..8,
        ) {
            let model = ErfSumModel::new(Side::Supply, offset, terms.clone()).unwrap();
            let i = pick % terms.len();
            let b_i = terms[i].center;
            let others: f64 = terms
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, t)| t.amplitude * (crate::erf::erf(t.shape * (b_i - t.center)) + 1.0))
                .sum();
            let expected = offset + terms[i].amplitude + others;
            let got = model.evaluate(b_i);
            prop_assert!((got - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        }
    }
}
