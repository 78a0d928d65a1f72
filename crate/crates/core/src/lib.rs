//! Weak monotone rearrangement between discrete probability measures on the
//! real line, together with convex-order utilities, martingale couplings and
//! stability experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod martingale;
pub mod measures;
pub mod piecewise;
pub mod qp;
pub mod random;
pub mod reverse;
pub mod simplex;
pub mod stability;
pub mod wmr;

pub use error::{Error, Result};
pub use measures::{DiscreteMeasure, Interval};
pub use piecewise::PiecewiseLinearFn;
pub use wmr::{CostSpec, MonotoneMap, WeakSolution};
