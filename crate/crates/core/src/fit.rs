//! Segmented fitting of step curves by erf sums.
//!
//! The price axis is split into bands, one erf term is fitted per band, and
//! the terms are summed into a single model. Two banding strategies are
//! offered: uniform spacing, and levels anchored at the widest plateaus of
//! the curve. Bands whose data contains a single price transition skip the
//! solver entirely; the term is written down in closed form.
//!
//! Demand curves are fitted through a supply-oriented view (prices negated)
//! and the resulting terms reused with the demand sign convention, so one
//! code path serves both sides.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lm::{solve, Jacobian, LeastSquaresProblem, SolveError, SolveSettings};
use crate::market::{Equilibrium, Side, StepCurve};
use crate::model::{ErfSumModel, ErfTerm, ModelError};
use crate::real::Real;

/// How segment boundaries are placed on the price axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentationMethod {
    /// Equally spaced levels between the curve's price extremes.
    Uniform,
    /// Levels anchored at the prices of the widest plateaus.
    Plateau,
}

/// Price levels splitting a curve into fitting bands.
///
/// `levels` is strictly increasing, running from the curve's minimum price
/// to its maximum (in the supply-oriented price space). `levels.len() - 1`
/// bands are fitted; a constant curve degenerates to a single level and no
/// bands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segmentation<T> {
    pub method: SegmentationMethod,
    pub levels: Vec<T>,
}

impl<T: Real> Segmentation<T> {
    pub fn segment_count(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }
}

/// One fitted band: the term plus fit diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit<T> {
    /// Price band in the original curve's price space, low before high.
    pub price_lo: T,
    pub price_hi: T,
    /// Quantity span of the band's data.
    pub quantity_lo: T,
    pub quantity_hi: T,
    /// Rise of the fitted term across the band's quantity span.
    pub modeled_rise: T,
    /// Euclidean norm of the residual vector at the fitted parameters.
    pub residual_norm: T,
    /// Number of residual points the band contributed.
    pub points: usize,
    /// True when the closed-form single-jump term was used.
    pub shortcut: bool,
}

impl<T: Real> SegmentFit<T> {
    /// Price rise the band asks the model to reproduce.
    pub fn rise(&self) -> T {
        self.price_hi - self.price_lo
    }
}

/// A fitted model together with per-segment diagnostics and timing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedCurve<T> {
    pub model: ErfSumModel<T>,
    pub segments: Vec<SegmentFit<T>>,
    /// Wall-clock fitting time. Not serialized: reports must be
    /// reproducible byte for byte.
    #[serde(skip)]
    pub fit_time: Duration,
}

impl<T: Real> FittedCurve<T> {
    /// Root-mean-square residual over all fitted bands.
    pub fn residual_rms(&self) -> T {
        let (ss, n) = self.segments.iter().fold((T::zero(), 0usize), |(ss, n), s| {
            (ss + s.residual_norm * s.residual_norm, n + s.points)
        });
        if n == 0 {
            T::zero()
        } else {
            (ss / T::c(n as f64)).sqrt()
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("band [{0}, {1}] contains no curve data")]
    EmptySegment(f64, f64),
    #[error("solver failed on segment {segment}: {source}")]
    Solver {
        segment: usize,
        #[source]
        source: SolveError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("fitted supply starts above fitted demand; curves do not cross")]
    NoIntersection,
    #[error("fitted curves do not cross within the quantity domain")]
    NoIntersectionInDomain,
}

/// Splits the curve's price range into `m` equal bands.
pub fn segment_uniform<T: Real>(
    curve: &StepCurve<T>,
    m: usize,
) -> Result<Segmentation<T>, FitError> {
    if m < 1 {
        return Err(FitError::InvalidArgument("segment count must be at least 1".into()));
    }
    let oriented = curve.supply_oriented();
    let lo = oriented.min_price();
    let hi = oriented.max_price();
    if lo == hi {
        return Ok(Segmentation { method: SegmentationMethod::Uniform, levels: vec![lo] });
    }
    let span = hi - lo;
    let mm = T::c(m as f64);
    let mut levels: Vec<T> = (0..m).map(|i| lo + span * T::c(i as f64) / mm).collect();
    levels.push(hi);
    // Very large m can collapse adjacent levels at floating-point resolution.
    levels.dedup();
    Ok(Segmentation { method: SegmentationMethod::Uniform, levels })
}

/// Places interior levels at the prices of the curve's widest plateaus.
///
/// A plateau is a maximal quantity interval over which the curve is
/// constant; every breakpoint carries one, with extent equal to the quantity
/// gap to its predecessor. The `m - 1` interior plateaus with the largest
/// extent are selected (ties broken toward the lower price); the price
/// extremes always bound the segmentation. Curves with fewer interior
/// plateaus yield fewer levels.
pub fn segment_plateau<T: Real>(
    curve: &StepCurve<T>,
    m: usize,
) -> Result<Segmentation<T>, FitError> {
    if m < 1 {
        return Err(FitError::InvalidArgument("segment count must be at least 1".into()));
    }
    let oriented = curve.supply_oriented();
    let pts = oriented.points();
    let lo = oriented.min_price();
    let hi = oriented.max_price();
    if lo == hi {
        return Ok(Segmentation { method: SegmentationMethod::Plateau, levels: vec![lo] });
    }
    // Interior plateaus: everything but the endpoint price levels.
    let mut plateaus: Vec<(T, T)> = Vec::new(); // (extent, price)
    let mut prev_q = T::zero();
    for &(q, p) in pts {
        if p > lo && p < hi {
            plateaus.push((q - prev_q, p));
        }
        prev_q = q;
    }
    plateaus.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| a.1.partial_cmp(&b.1).unwrap())
    });
    let picked = plateaus.len().min(m.saturating_sub(1));
    let mut levels: Vec<T> = plateaus[..picked].iter().map(|&(_, p)| p).collect();
    levels.push(lo);
    levels.push(hi);
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    Ok(Segmentation { method: SegmentationMethod::Plateau, levels })
}

pub fn segment<T: Real>(
    curve: &StepCurve<T>,
    m: usize,
    method: SegmentationMethod,
) -> Result<Segmentation<T>, FitError> {
    match method {
        SegmentationMethod::Uniform => segment_uniform(curve, m),
        SegmentationMethod::Plateau => segment_plateau(curve, m),
    }
}

/// Residual points for one band of a supply-oriented curve.
///
/// The band's data is the breakpoints whose prices fall inside
/// `[lo, hi]`, plus the points where the staircase crosses the band's
/// bounding levels: the riser below the band crosses `lo` at the preceding
/// breakpoint's quantity, and the riser leaving the band crosses `hi` at the
/// last in-band breakpoint's quantity. Duplicates are dropped.
///
/// Each point carries the index of the breakpoint whose riser follows it,
/// so the single-jump shortcut can recover the local quantity gap.
fn band_data<T: Real>(
    oriented: &StepCurve<T>,
    lo: T,
    hi: T,
) -> Result<(Vec<(T, T)>, Vec<usize>), FitError> {
    let pts = oriented.points();
    let n = pts.len();
    let j0 = pts.partition_point(|&(_, p)| p < lo);
    let j1 = pts.partition_point(|&(_, p)| p <= hi);
    if j0 >= j1 {
        // No breakpoint inside the band: the staircase crosses it on a
        // single riser (uniform bands can straddle one big jump).
        if j0 == 0 || j0 >= n {
            return Err(FitError::EmptySegment(
                lo.to_f64().unwrap_or(f64::NAN),
                hi.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let q = pts[j0 - 1].0;
        return Ok((vec![(q, lo), (q, hi)], vec![j0 - 1, j0 - 1]));
    }
    let mut data = Vec::with_capacity(j1 - j0 + 2);
    let mut src = Vec::with_capacity(j1 - j0 + 2);
    if j0 > 0 {
        data.push((pts[j0 - 1].0, lo));
        src.push(j0 - 1);
    } else {
        // The band reaches down to the curve's first level; the domain edge
        // itself is the left sample.
        data.push((T::zero(), pts[0].1));
        src.push(0);
    }
    for (k, &(q, p)) in pts[j0..j1].iter().enumerate() {
        data.push((q, p));
        src.push(j0 + k);
    }
    if j1 < n {
        data.push((pts[j1 - 1].0, hi));
        src.push(j1 - 1);
    }
    // Anchors coincide with breakpoints when a level sits exactly on a
    // plateau price; drop exact duplicates.
    let mut seen = Vec::with_capacity(data.len());
    let mut kept_src = Vec::with_capacity(data.len());
    for (pair, s) in data.into_iter().zip(src) {
        if seen.last() != Some(&pair) {
            seen.push(pair);
            kept_src.push(s);
        }
    }
    Ok((seen, kept_src))
}

/// Outcome of fitting one band.
pub struct SegmentOutcome<T> {
    pub term: ErfTerm<T>,
    /// Quantity extremes of the band's residual points.
    pub quantity_span: (T, T),
    pub residual_norm: T,
    pub points: usize,
    pub shortcut: bool,
}

impl<T: Real> SegmentOutcome<T> {
    /// Price gained by the fitted term between the span's ends.
    pub fn modeled_rise(&self) -> T {
        let at = |x: T| crate::erf::erf(self.term.shape * (x - self.term.center));
        self.term.amplitude * (at(self.quantity_span.1) - at(self.quantity_span.0))
    }
}

/// Fits one erf term to the part of the curve between two price levels.
///
/// The term is chosen to minimize the squared error of
/// `lo + amplitude * (erf(shape * (x - center)) + 1)` against the band's
/// residual points. A band containing exactly one price transition skips the
/// solver: the rise fixes the amplitude, the transition's quantity fixes the
/// center, and the local breakpoint spacing fixes the sharpness.
pub fn fit_segment<T: Real>(
    curve: &StepCurve<T>,
    level_lo: T,
    level_hi: T,
    settings: &SolveSettings<T>,
) -> Result<SegmentOutcome<T>, FitError> {
    if !(level_lo < level_hi) {
        return Err(FitError::InvalidArgument(format!(
            "band bounds must satisfy lo < hi, got [{level_lo}, {level_hi}]"
        )));
    }
    let oriented = curve.supply_oriented();
    fit_segment_oriented(&oriented, level_lo, level_hi, settings, 0)
}

fn fit_segment_oriented<T: Real>(
    oriented: &StepCurve<T>,
    lo: T,
    hi: T,
    settings: &SolveSettings<T>,
    segment_index: usize,
) -> Result<SegmentOutcome<T>, FitError> {
    let (data, src) = band_data(oriented, lo, hi)?;
    let pts = oriented.points();

    // Transitions are the consecutive data pairs with a price rise.
    let rises: Vec<usize> = data
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].1 > w[0].1)
        .map(|(i, _)| i)
        .collect();

    let x_min = data.first().unwrap().0;
    let x_max = data.last().unwrap().0;
    let quantity_span = (x_min, x_max);

    if rises.is_empty() {
        // Constant band: a zero-amplitude term contributes nothing.
        let extent = (x_max - x_min).max(T::one());
        let term = ErfTerm {
            amplitude: T::zero(),
            center: (x_min + x_max) / T::c(2.0),
            shape: T::c(4.0) / extent,
        };
        return Ok(SegmentOutcome {
            term,
            quantity_span,
            residual_norm: T::zero(),
            points: data.len(),
            shortcut: true,
        });
    }

    if rises.len() == 1 {
        let i = rises[0];
        let (x_low, y_low) = data[i];
        let y_high = data[i + 1].1;
        // Quantity gap between the breakpoints flanking the jump.
        let k = src[i];
        let gap = if k + 1 < pts.len() { pts[k + 1].0 - pts[k].0 } else { T::one() };
        let amplitude = (y_high - y_low) / T::c(2.0);
        let term = ErfTerm {
            amplitude,
            center: x_low,
            shape: T::c(4.0) / gap.max(T::min_positive_value()),
        };
        let residual_norm = residual_norm_of(&term, lo, &data);
        return Ok(SegmentOutcome {
            term,
            quantity_span,
            residual_norm,
            points: data.len(),
            shortcut: true,
        });
    }

    // General band: three-parameter least squares.
    let extent = x_max - x_min;
    let initial = vec![
        (hi - lo) / T::c(2.0),
        (x_min + x_max) / T::c(2.0),
        T::c(4.0) / extent.max(T::min_positive_value()),
    ];
    let bounds = vec![T::zero(), T::neg_infinity(), T::c(1e-8)];
    let data_r = data.clone();
    let data_j = data.clone();
    let problem = LeastSquaresProblem {
        residual: move |p: &[T]| {
            let term = ErfTerm { amplitude: p[0], center: p[1], shape: p[2] };
            data_r.iter().map(|&(x, y)| model_value(&term, lo, x) - y).collect()
        },
        jacobian: move |p: &[T]| {
            let term = ErfTerm { amplitude: p[0], center: p[1], shape: p[2] };
            let probe = ErfSumModel::new(Side::Supply, lo, vec![term])
                .expect("projected parameters form a valid term");
            let mut jac = Jacobian::zeros(data_j.len(), 3);
            for (row, &(x, _)) in data_j.iter().enumerate() {
                let g = &probe.gradient(x)[0];
                jac.set(row, 0, g.amplitude);
                jac.set(row, 1, g.center);
                jac.set(row, 2, g.shape);
            }
            jac
        },
        initial_guess: initial,
        lower_bounds: Some(bounds),
        settings: *settings,
    };
    let result =
        solve(&problem).map_err(|source| FitError::Solver { segment: segment_index, source })?;
    let term = ErfTerm {
        amplitude: result.params[0],
        center: result.params[1],
        shape: result.params[2],
    };
    Ok(SegmentOutcome {
        term,
        quantity_span,
        residual_norm: result.cost.sqrt(),
        points: data.len(),
        shortcut: false,
    })
}

fn model_value<T: Real>(term: &ErfTerm<T>, baseline: T, x: T) -> T {
    baseline + term.amplitude * (crate::erf::erf(term.shape * (x - term.center)) + T::one())
}

fn residual_norm_of<T: Real>(term: &ErfTerm<T>, baseline: T, data: &[(T, T)]) -> T {
    data.iter()
        .fold(T::zero(), |acc, &(x, y)| {
            let r = model_value(term, baseline, x) - y;
            acc + r * r
        })
        .sqrt()
}

/// Segments the curve, fits each band, and assembles the full model.
///
/// The curve should already be truncated to the fitting price cap. Demand
/// curves are mirrored into the supply orientation for fitting; the
/// assembled model carries the demand sign convention with the offset at
/// the curve's highest price.
pub fn fit_curve<T: Real>(
    curve: &StepCurve<T>,
    m: usize,
    method: SegmentationMethod,
    settings: &SolveSettings<T>,
) -> Result<FittedCurve<T>, FitError> {
    let start = std::time::Instant::now();
    let oriented = curve.supply_oriented();
    let segmentation = segment(&oriented, m, method)?;
    let levels = &segmentation.levels;
    let mut terms = Vec::with_capacity(segmentation.segment_count());
    let mut segments = Vec::with_capacity(segmentation.segment_count());
    for (i, band) in levels.windows(2).enumerate() {
        let outcome = fit_segment_oriented(&oriented, band[0], band[1], settings, i)?;
        let (price_lo, price_hi) = match curve.side() {
            Side::Supply => (band[0], band[1]),
            Side::Demand => (-band[1], -band[0]),
        };
        segments.push(SegmentFit {
            price_lo,
            price_hi,
            quantity_lo: outcome.quantity_span.0,
            quantity_hi: outcome.quantity_span.1,
            modeled_rise: outcome.modeled_rise(),
            residual_norm: outcome.residual_norm,
            points: outcome.points,
            shortcut: outcome.shortcut,
        });
        terms.push(outcome.term);
    }
    let offset = match curve.side() {
        Side::Supply => levels[0],
        Side::Demand => -levels[0],
    };
    let model = ErfSumModel::new(curve.side(), offset, terms)?;
    Ok(FittedCurve { model, segments, fit_time: start.elapsed() })
}

/// Intersects two fitted models by bisection on `demand - supply`.
///
/// The gap is nonincreasing in quantity, positive at zero when the curves
/// cross at all, and negative at `q_max` when they cross inside the domain.
/// Bisection narrows the bracket until the gap at the midpoint is within
/// `1e-9` euro of zero or the bracket collapses to floating-point
/// resolution.
pub fn intersect_fitted<T: Real>(
    supply: &ErfSumModel<T>,
    demand: &ErfSumModel<T>,
    q_max: T,
) -> Result<Equilibrium<T>, FitError> {
    if !(q_max > T::zero()) {
        return Err(FitError::InvalidArgument(format!(
            "quantity domain must be positive, got {q_max}"
        )));
    }
    let gap = |q: T| demand.evaluate(q) - supply.evaluate(q);
    let tol = T::c(1e-9);
    let g0 = gap(T::zero());
    if g0 < T::zero() {
        return Err(FitError::NoIntersection);
    }
    let g_end = gap(q_max);
    if g_end > T::zero() {
        return Err(FitError::NoIntersectionInDomain);
    }
    let mut lo = T::zero();
    let mut hi = q_max;
    let width_floor = T::epsilon() * q_max * T::c(4.0);
    let mut mid = (lo + hi) / T::c(2.0);
    for _ in 0..200 {
        mid = (lo + hi) / T::c(2.0);
        let g = gap(mid);
        if g.abs() <= tol || (hi - lo) <= width_floor {
            break;
        }
        if g > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Equilibrium { price: supply.evaluate(mid), quantity: mid, degenerate: false })
}
