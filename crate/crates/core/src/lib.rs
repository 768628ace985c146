//! Numerical laboratory for the Möbius-invariant Willmore flow of
//! umbilic-free tori in `R^n`, `n ∈ {3, 4}`.
//!
//! Kernels are generic over [`Real`]; the aliases below fix `f64`.

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the tensor notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod ad;
pub mod commands;
pub mod config;
pub mod covariant;
pub mod dual;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod hopf;
pub mod io;
pub mod linearization;
pub mod moebius;
pub mod scalar;
pub mod surfaces;
pub mod tape;
pub mod tensor;

pub use covariant::BackgroundConnection;
pub use dual::Dual;
pub use error::{Error, IoError, Result};
pub use flow::{FlowConfig, FlowKind, FlowState, HaltReason, Trajectory};
pub use geometry::{Ambient, GeometryCache, GradientPath, Metric};
pub use grid::{Field, ImmersionGrid, TangentField};
pub use hopf::CurveGrid;
pub use linearization::PropagatorLog;
pub use moebius::{Generator, MoebiusMap, StereographicChart};
pub use scalar::Real;
pub use tape::{Tape, Var};

pub type Grid = ImmersionGrid<f64>;
pub type Cache = GeometryCache<f64>;
pub type Background = BackgroundConnection<f64>;
pub type Vector = Field<f64>;
