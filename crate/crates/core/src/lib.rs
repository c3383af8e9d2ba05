//! Signed sampling of bandlimited graph signals.
//!
//! The crate chooses which vertices and edges of a graph to observe when only
//! the *sign* of each observation is available, and recovers the direction of
//! the underlying bandlimited signal from those signs.
//!
//! - [`graph`]: graphs, Laplacian spectra, bandlimited signals, sign oracle.
//! - [`cone`]: the feasible cone of sign-consistent coefficient vectors, its
//!   extreme vectors and volume.
//! - [`gss`]: greedy signed sampling plus random / row-norm baselines.
//! - [`upocs`]: cyclic projections onto the sign-consistency cone.
//! - [`mdp`]: exact-volume segmentation trees and policy checks used to verify
//!   the greedy rule at toy scale.
//! - [`experiment`]: manifests, benchmark sweeps and the ratings pipeline.

pub mod cone;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod gss;
pub mod linalg;
pub mod mdp;
pub mod upocs;

pub use error::{Error, Result};
