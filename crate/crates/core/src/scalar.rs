//! Scalar abstraction shared by the numeric stages.
//!
//! Context embeddings, graph weights and modularity bookkeeping are written
//! once against [`Scalar`] and instantiated for `f32` and `f64`. Reductions
//! (dot products, norms, sums over windows) always accumulate in `f64` and
//! convert back at the end.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable for embeddings, edge weights and modularity.
pub trait Scalar:
    'static + Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Send + Sync + Debug + Display + LowerExp
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    /// Widens to `f64` for accumulation.
    #[inline]
    fn wide(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
