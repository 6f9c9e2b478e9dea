//! Scalar abstraction for the numerical core.
//!
//! Curve construction, model evaluation and the least-squares machinery are
//! generic over [`Real`] so the same code runs at `f32` or `f64`. The batch
//! pipeline and the CLI pin everything to `f64` through the aliases exported
//! at the crate root.

use std::fmt;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used throughout the numerical core.
///
/// Blanket-implemented for anything float-like; in practice `f32` and `f64`.
pub trait Real:
    Float + FromPrimitive + fmt::Debug + fmt::Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    fn c(value: f64) -> Self {
        Self::from_f64(value).expect("constant not representable in scalar type")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + fmt::Debug + fmt::Display + Default + Send + Sync + 'static
{
}
