//! shapelab: a numerical laboratory for surfaces and hypersurfaces that
//! admit shape-operator-preserving deformations.
//!
//! The crate provides:
//! - an expression DSL with exact symbolic derivatives ([`expr`]),
//! - diagonal metrics, curvature residuals and metric pencils ([`metric`]),
//! - a catalog of closed-form third fundamental forms ([`catalog`]),
//! - the linear Codazzi system ([`codazzi`]),
//! - rotation-coefficient systems, Lax pairs and Goursat solvers ([`lame`]),
//! - compatibility checks for flat metric pairs ([`compat`]),
//! - orthonormal-frame and radius-vector integration ([`frames`]),
//! - surface reconstruction and mesh oracles ([`surface`]),
//! - JSON scene configs driving the CLI ([`scene`]).

pub mod catalog;
pub mod codazzi;
pub mod compat;
pub mod expr;
pub mod frames;
pub mod grid;
pub mod lame;
pub mod metric;
pub mod scene;
pub mod surface;
