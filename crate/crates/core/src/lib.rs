//! Pareto front reconstruction for sparse multi-objective portfolio problems.
//!
//! The library solves portfolio selection problems of the form
//!
//! ```text
//!     min  F(x) = [f_1(x), ..., f_m(x)]
//!     s.t. A x <= b,  1'x = 1,  ||x||_0 <= s,  x >= 0,
//! ```
//!
//! where the objectives are drawn from {expected return, variance, ESG score,
//! Sharpe ratio, skewness}. The cardinality bound makes the Pareto front a
//! union of smooth segments, one per support set, and plain weighted-sum
//! scalarization provably misses some of them. The front is reconstructed in
//! two phases: an initialization phase (scalarization, penalty decomposition,
//! iterative hard thresholding, or genetic search) finds points on promising
//! supports, and a front steepest descent phase spans each segment.
//!
//! Modules follow the pipeline: [`model`] holds the problem data and Pareto
//! toolbox, [`objectives`] evaluates and differentiates the objective set,
//! [`constraints`] builds the convex polyhedron and sparse projections,
//! [`qp`] and [`directions`] solve the direction-finding subproblems,
//! [`descent`], [`evolutionary`] and [`scalarization`] produce starting
//! points, [`sfsd`] explores the front, [`metrics`] scores reconstructions,
//! and [`harness`] wires everything into reproducible experiments.

pub mod constraints;
pub mod descent;
pub mod directions;
pub mod error;
pub mod evolutionary;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod objectives;
pub mod qp;
pub mod scalarization;
pub mod sfsd;
pub mod util;

pub use error::{Error, Result};
