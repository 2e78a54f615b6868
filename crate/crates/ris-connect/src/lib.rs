//! Connectivity simulator and optimizer for networks of aerial relays assisted
//! by a passive reflecting surface.
//!
//! The crate models an uplink where a ground user reaches a fleet of UAVs
//! either directly, over UAV-to-UAV line-of-sight links, or through a
//! reconfigurable reflecting surface whose elements are split between two (or
//! more) blocked UAVs. It provides:
//!
//! - seeded scenario construction and a flat TOML configuration format
//!   ([`scenario`]),
//! - Nakagami-m fading draws, path-loss models, phase configuration and
//!   quantization, and exact/approximated SNRs ([`channel`]),
//! - the weighted connectivity graph, its Laplacian, algebraic connectivity
//!   and node-removal reliability ([`graph`]),
//! - the closed-form element split that holds the capped UAV at its SNR
//!   target and hands the remainder to the boosted UAV ([`partition`]),
//! - simulated-annealing placement of the surface in 3D ([`deploy`]),
//! - benchmark schemes and Monte-Carlo sweep campaigns with CSV/JSON output
//!   ([`experiments`]).
//!
//! Numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! simulation drivers and the `ris-connect` CLI run on the [`Real`] alias.

pub mod channel;
pub mod deploy;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod num;
pub mod partition;
pub mod scenario;
pub mod units;

pub use error::{Error, Result};
pub use num::Scalar;

/// Scalar type used by the simulation drivers and the CLI.
pub type Real = f64;

/// 3D position over [`Real`].
pub type Position = scenario::Position3D<Real>;

/// Axis-aligned box over [`Real`].
pub type Box3 = scenario::Box3<Real>;

/// Connectivity graph over [`Real`].
pub type Graph = graph::NetworkGraph<Real>;

/// Dense Laplacian over [`Real`].
pub type Laplacian = graph::LaplacianMatrix<Real>;
