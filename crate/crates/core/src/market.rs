//! Step-curve construction and exact market clearing.
//!
//! An hourly auction is a pile of aggregated price layers per side. Sorting
//! the layers by price and cumulating volumes yields monotone
//! piecewise-constant supply and demand curves; the clearing point is where
//! the two staircases intersect.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;

/// Price ceiling of the market; demand bids at price zero are price takers
/// and are re-assigned this value before sorting.
pub const MARKET_MAX_PRICE: f64 = 3000.0;

/// Which side of the auction a layer or curve belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Supply,
    Demand,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Supply => "supply",
            Side::Demand => "demand",
        }
    }
}

/// One aggregated price layer of an hourly auction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidLayer<T> {
    /// Offered or requested volume in MW; never negative.
    pub volume: T,
    /// Limit price in euro, within `[0, MARKET_MAX_PRICE]`.
    pub price: T,
    pub side: Side,
}

impl<T: Real> BidLayer<T> {
    pub fn new(volume: T, price: T, side: Side) -> Result<Self, CurveError> {
        let layer = Self { volume, price, side };
        layer.validate()?;
        Ok(layer)
    }

    fn validate(&self) -> Result<(), CurveError> {
        if !self.volume.is_finite() || self.volume < T::zero() {
            return Err(CurveError::InvalidLayer(format!(
                "volume {} must be finite and non-negative",
                self.volume
            )));
        }
        if !self.price.is_finite()
            || self.price < T::zero()
            || self.price > T::c(MARKET_MAX_PRICE)
        {
            return Err(CurveError::InvalidLayer(format!(
                "price {} outside [0, {MARKET_MAX_PRICE}]",
                self.price
            )));
        }
        Ok(())
    }
}

/// Monotone piecewise-constant cumulative curve: quantity in MW mapped to
/// price in euro.
///
/// Breakpoints are `(cumulative_quantity, price)` with strictly increasing
/// quantities. Prices are strictly increasing for supply and strictly
/// decreasing for demand; equal-price layers are merged at construction.
/// Evaluation is right-continuous downward: a layer is fully available up to
/// its cumulative quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepCurve<T> {
    side: Side,
    points: Vec<(T, T)>,
}

/// Clearing price and traded quantity of a supply/demand pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium<T> {
    /// Clearing price in euro.
    pub price: T,
    /// Traded quantity in MW.
    pub quantity: T,
    /// Set when the curves share a price over a quantity interval rather
    /// than crossing at a point.
    pub degenerate: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum CurveError {
    #[error("curve has no layers or no breakpoints")]
    EmptyCurve,
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
    #[error("demand never reaches supply; curves do not cross")]
    NoIntersection,
    #[error("quantity {0} outside the curve domain [0, {1}]")]
    OutOfDomain(f64, f64),
    #[error("price cap must be positive, got {0}")]
    NonPositiveCap(f64),
}

/// Builds the supply step curve: offers sorted ascending by price, equal
/// prices merged, volumes cumulated.
pub fn build_supply_curve<T: Real>(layers: &[BidLayer<T>]) -> Result<StepCurve<T>, CurveError> {
    build_curve(layers, Side::Supply)
}

/// Builds the demand step curve: zero-price bids re-priced to the market
/// maximum, then sorted descending by price, merged and cumulated.
pub fn build_demand_curve<T: Real>(layers: &[BidLayer<T>]) -> Result<StepCurve<T>, CurveError> {
    build_curve(layers, Side::Demand)
}

fn build_curve<T: Real>(layers: &[BidLayer<T>], side: Side) -> Result<StepCurve<T>, CurveError> {
    if layers.is_empty() {
        return Err(CurveError::EmptyCurve);
    }
    let mut priced: Vec<(T, T)> = Vec::with_capacity(layers.len());
    for layer in layers {
        if layer.side != side {
            return Err(CurveError::InvalidLayer(format!(
                "expected a {} layer, got {}",
                side.label(),
                layer.side.label()
            )));
        }
        layer.validate()?;
        let price = match side {
            Side::Demand if layer.price == T::zero() => T::c(MARKET_MAX_PRICE),
            _ => layer.price,
        };
        priced.push((layer.volume, price));
    }
    match side {
        Side::Supply => priced.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap()),
        Side::Demand => priced.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap()),
    }
    // Merge equal prices, cumulate, drop zero-volume levels.
    let mut points: Vec<(T, T)> = Vec::with_capacity(priced.len());
    let mut cumulative = T::zero();
    for (volume, price) in priced {
        if volume == T::zero() {
            continue;
        }
        cumulative = cumulative + volume;
        match points.last_mut() {
            Some(last) if last.1 == price => last.0 = cumulative,
            _ => points.push((cumulative, price)),
        }
    }
    if points.is_empty() {
        return Err(CurveError::EmptyCurve);
    }
    Ok(StepCurve { side, points })
}

impl<T: Real> StepCurve<T> {
    /// Assembles a curve directly from breakpoints, validating the
    /// invariants. Intended for fixtures and deserialized data; bid layers
    /// normally go through the build functions.
    pub fn from_breakpoints(side: Side, points: Vec<(T, T)>) -> Result<Self, CurveError> {
        if points.is_empty() {
            return Err(CurveError::EmptyCurve);
        }
        let mut prev: Option<(T, T)> = None;
        for &(q, p) in &points {
            if !q.is_finite() || !p.is_finite() || q <= T::zero() {
                return Err(CurveError::InvalidLayer(format!(
                    "breakpoint ({q}, {p}) not finite or quantity not positive"
                )));
            }
            if let Some((pq, pp)) = prev {
                if q <= pq {
                    return Err(CurveError::InvalidLayer(format!(
                        "quantities must strictly increase: {pq} then {q}"
                    )));
                }
                let ordered = match side {
                    Side::Supply => p > pp,
                    Side::Demand => p < pp,
                };
                if !ordered {
                    return Err(CurveError::InvalidLayer(format!(
                        "{} prices must be strictly {}: {pp} then {p}",
                        side.label(),
                        if side == Side::Supply { "increasing" } else { "decreasing" }
                    )));
                }
            }
            prev = Some((q, p));
        }
        Ok(Self { side, points })
    }

    /// Internal constructor for curves whose invariants hold by
    /// construction (truncation, price mirroring).
    pub(crate) fn from_parts_unchecked(side: Side, points: Vec<(T, T)>) -> Self {
        debug_assert!(!points.is_empty());
        Self { side, points }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Breakpoints as `(cumulative_quantity, price)` in ascending quantity.
    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total cumulated volume; the right edge of the quantity domain.
    pub fn total_quantity(&self) -> T {
        self.points.last().map(|&(q, _)| q).unwrap_or_else(T::zero)
    }

    /// Price at quantity zero.
    pub fn first_price(&self) -> T {
        self.points[0].1
    }

    /// Lowest price on the curve.
    pub fn min_price(&self) -> T {
        match self.side {
            Side::Supply => self.points[0].1,
            Side::Demand => self.points[self.points.len() - 1].1,
        }
    }

    /// Highest price on the curve.
    pub fn max_price(&self) -> T {
        match self.side {
            Side::Supply => self.points[self.points.len() - 1].1,
            Side::Demand => self.points[0].1,
        }
    }

    /// Price of the first breakpoint whose cumulative quantity covers `quantity`.
    pub fn eval(&self, quantity: T) -> Result<T, CurveError> {
        let total = self.total_quantity();
        if !(quantity >= T::zero() && quantity <= total) {
            return Err(CurveError::OutOfDomain(
                quantity.to_f64().unwrap_or(f64::NAN),
                total.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let idx = self.points.partition_point(|&(q, _)| q < quantity);
        Ok(self.points[idx].1)
    }

    /// Restricts the curve to a price window `[0, cap]`.
    ///
    /// Supply breakpoints above the cap are dropped; demand prices above the
    /// cap are clamped to it (the price-taker volume stays in the curve).
    pub fn truncate(&self, price_cap: T) -> Result<Self, CurveError> {
        if !(price_cap > T::zero()) {
            return Err(CurveError::NonPositiveCap(
                price_cap.to_f64().unwrap_or(f64::NAN),
            ));
        }
        match self.side {
            Side::Supply => {
                let kept: Vec<(T, T)> = self
                    .points
                    .iter()
                    .copied()
                    .take_while(|&(_, p)| p <= price_cap)
                    .collect();
                if kept.is_empty() {
                    return Err(CurveError::EmptyCurve);
                }
                Ok(Self::from_parts_unchecked(Side::Supply, kept))
            }
            Side::Demand => {
                let mut points: Vec<(T, T)> = Vec::with_capacity(self.points.len());
                for &(q, p) in &self.points {
                    let clamped = if p > price_cap { price_cap } else { p };
                    match points.last_mut() {
                        // Clamping can flatten the head of the curve onto the
                        // cap; keep the widest quantity for the merged level.
                        Some(last) if last.1 == clamped => last.0 = q,
                        _ => points.push((q, clamped)),
                    }
                }
                Ok(Self::from_parts_unchecked(Side::Demand, points))
            }
        }
    }

    /// Supply-oriented view of a demand curve: prices negated so they
    /// strictly increase with quantity. Supply curves are returned as-is.
    pub(crate) fn supply_oriented(&self) -> Self {
        match self.side {
            Side::Supply => self.clone(),
            Side::Demand => Self::from_parts_unchecked(
                Side::Supply,
                self.points.iter().map(|&(q, p)| (q, -p)).collect(),
            ),
        }
    }
}

/// Convenience wrapper matching the method on [`StepCurve`].
pub fn truncate_curve<T: Real>(curve: &StepCurve<T>, price_cap: T) -> Result<StepCurve<T>, CurveError> {
    curve.truncate(price_cap)
}

/// Convenience wrapper matching the method on [`StepCurve`].
pub fn eval_step<T: Real>(curve: &StepCurve<T>, quantity: T) -> Result<T, CurveError> {
    curve.eval(quantity)
}

/// Finds the intersection of the supply and demand staircases.
///
/// Scans the breakpoints of both curves in ascending quantity over the
/// common domain and returns the last quantity at which demand still covers
/// supply. The clearing price resolves the crossing:
///
/// * demand drops through the supply level -> the supply price there;
/// * supply rises through the demand level -> the demand price there;
/// * both jump at the same quantity -> the lowest price in the overlap of
///   the two risers;
/// * the curves share a price over an interval -> that shared price, with
///   the `degenerate` flag set and the interval's right endpoint as the
///   quantity;
/// * one curve's volume runs out while demand still covers supply -> the
///   supply price at the boundary.
pub fn clear_market<T: Real>(
    supply: &StepCurve<T>,
    demand: &StepCurve<T>,
) -> Result<Equilibrium<T>, CurveError> {
    debug_assert_eq!(supply.side(), Side::Supply);
    debug_assert_eq!(demand.side(), Side::Demand);
    if supply.is_empty() || demand.is_empty() {
        return Err(CurveError::EmptyCurve);
    }
    if demand.first_price() < supply.first_price() {
        return Err(CurveError::NoIntersection);
    }
    let q_max = if supply.total_quantity() < demand.total_quantity() {
        supply.total_quantity()
    } else {
        demand.total_quantity()
    };

    // Merge the two breakpoint quantity lists up to q_max. Indices track the
    // step value at each candidate without re-scanning.
    let sp = supply.points();
    let dp = demand.points();
    let mut si = 0usize;
    let mut di = 0usize;
    let mut best: Option<(T, T, T)> = None; // (quantity, supply price, demand price)
    loop {
        let sq = sp.get(si).map(|&(q, _)| q).filter(|&q| q <= q_max);
        let dq = dp.get(di).map(|&(q, _)| q).filter(|&q| q <= q_max);
        let q = match (sq, dq) {
            (Some(a), Some(b)) => {
                if a < b {
                    a
                } else {
                    b
                }
            }
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => break,
        };
        let s_here = sp[si.min(sp.len() - 1)].1;
        let d_here = dp[di.min(dp.len() - 1)].1;
        if d_here >= s_here {
            best = Some((q, s_here, d_here));
        } else {
            // Demand fell below supply: resolve the crossing between the
            // previous candidate and this one.
            let (q_star, s_at, d_at) = best.expect("first candidate satisfies demand >= supply");
            if d_at == s_at {
                return Ok(Equilibrium { price: s_at, quantity: q_star, degenerate: true });
            }
            let price = if s_at > d_here { s_at } else { d_here };
            return Ok(Equilibrium { price, quantity: q_star, degenerate: false });
        }
        // Advance whichever curves have a breakpoint exactly at q.
        if si < sp.len() && sp[si].0 == q {
            si += 1;
        }
        if di < dp.len() && dp[di].0 == q {
            di += 1;
        }
    }
    // Demand covered supply across the whole common domain.
    let (q_star, s_at, d_at) = best.expect("domain contains at least one breakpoint");
    Ok(Equilibrium { price: s_at, quantity: q_star, degenerate: d_at == s_at })
}
