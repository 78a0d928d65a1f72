//! The barycentric weak transport problem and its optimizer, the weak
//! monotone rearrangement.

mod cost;
mod map;
mod oracle;
mod solver;
mod verify;

use serde::{Deserialize, Serialize};

use crate::measures::{DiscreteMeasure, Interval};

pub use cost::CostSpec;
pub use map::MonotoneMap;
pub use oracle::{oracle_solve, OracleResult, ORACLE_MAX_ATOMS};
pub use solver::{solve_from, solve_weak_transport, value, weak_monotone_rearrangement};
pub use verify::{
    check_maximality, image_measure, map_decomposition, smooth_strictify, verify_admissible,
    verify_slope1_characterization, AdmissibilityReport, KnotRange, MapDecomposition, Slope1Report, SlopeViolation,
};

#[allow(unused_imports)]
pub(crate) use solver::{feasibility_constraints, interior_levels, partial_sum_row};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakSolution {
    pub map: MonotoneMap,
    /// `T(μ)`, images within `1e-12 · scale` merged
    pub pushforward: DiscreteMeasure,
    pub value: f64,
    /// irreducible intervals of `(T(μ), ν)`
    pub irreducibles: Vec<Interval>,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// false for `ρ = 1`, where the returned map is one optimizer among many
    pub unique: bool,
    pub cost: CostSpec,
}
