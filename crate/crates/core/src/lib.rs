//! Reconstruction and compression of day-ahead electricity auction curves.
//!
//! An hourly day-ahead auction aggregates thousands of bid and offer entries
//! into price layers. Sorting each side by price and cumulating volumes
//! yields two monotone step curves whose intersection sets the clearing
//! price and traded quantity. Those staircases carry hundreds of breakpoints
//! per hour; this crate compresses each one into a handful of error-function
//! terms fitted band by band on the price axis, and measures how much
//! clearing-price accuracy the compression costs.
//!
//! The pipeline, end to end:
//!
//! 1. [`ingest`] parses GME-style CSV layer files (or [`synth`] generates a
//!    seeded synthetic corpus of the same shape);
//! 2. [`market`] builds the step curves and clears them exactly;
//! 3. [`fit`] truncates to the fitting cap, segments the price axis, and
//!    fits one erf term per band with the [`lm`] solver (a closed-form
//!    shortcut handles single-jump bands);
//! 4. [`analytics`] runs batches, compares exact versus fitted equilibria,
//!    and writes deterministic CSV/JSON reports and [`svg`] overlays.
//!
//! The numerical core is generic over the scalar type through [`Real`]; the
//! pipeline itself runs at `f64`, and the aliases below pin the main types
//! to that precision.

pub mod analytics;
pub mod erf;
pub mod fit;
pub mod ingest;
pub mod lm;
pub mod market;
pub mod model;
pub mod real;
pub mod svg;
pub mod synth;

pub use real::Real;

pub use analytics::{
    coefficient_stats, emit_report, layer_stats, run_batch, run_batch_with_models,
    AnalyticsError, BatchConfig, BatchOutcome, CoefficientStats, FitReport, HourRecord,
    LayerCountStats, Report, ReportFormat, SkipReason, SkippedHour,
};
pub use erf::{erf, erfc};
pub use fit::{
    fit_curve, fit_segment, intersect_fitted, segment, segment_plateau, segment_uniform,
    FitError, FittedCurve, SegmentFit, Segmentation, SegmentationMethod,
};
pub use ingest::{
    combine_fragments, parse_auction_csv, write_corpus_csv, Corpus, CorpusFragment,
    CorpusProvenance, HourlyAuction, IngestError, ParseOptions,
};
pub use lm::{
    numeric_jacobian, solve, Jacobian, LeastSquaresProblem, SolveError, SolveResult,
    SolveSettings, Termination,
};
pub use market::{
    build_demand_curve, build_supply_curve, clear_market, eval_step, truncate_curve, BidLayer,
    CurveError, Equilibrium, Side, StepCurve, MARKET_MAX_PRICE,
};
pub use model::{ErfSumModel, ErfTerm, ModelError, Provenance, TermGradient};
pub use svg::render_curve_svg;
pub use synth::{generate_synthetic_corpus, GeneratorParams, LayerProfile, PriceBand};

/// Pipeline-precision aliases: the CLI and batch runner work at `f64`.
pub type BidLayer64 = BidLayer<f64>;
pub type StepCurve64 = StepCurve<f64>;
pub type Equilibrium64 = Equilibrium<f64>;
pub type ErfTerm64 = ErfTerm<f64>;
pub type ErfSumModel64 = ErfSumModel<f64>;
pub type FittedCurve64 = FittedCurve<f64>;
pub type SolveSettings64 = SolveSettings<f64>;
