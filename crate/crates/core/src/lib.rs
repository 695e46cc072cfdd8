//! Discrete L²-gradient flows of vectorial integral functionals
//! `F(u) = ∫ f(x, Du) dx` on piecewise-affine fields with zero trace.
//!
//! The crate is organised bottom-up:
//!
//! * [`mat2`]: exact 2×2 matrix algebra (determinant, cofactor, conformal split).
//! * [`mesh`]: uniform simplicial meshes of the unit interval/square and the
//!   zero-boundary [`Field`](mesh::Field) type with its lumped L² structure.
//! * [`integrands`]: densities `f(ξ)` with their derivatives, and the discrete
//!   functional `I_h` together with its L²-gradient.
//! * [`convex_core`]: resolvent, Yosida approximation and Moreau envelope.
//! * [`flow`]: minimizing movements and the Yosida-regularized flow, with
//!   semigroup diagnostics.
//! * [`analyzer`]: integral monotonicity/convexity margins for
//!   `g(ξ) = |ξ|⁴ + k (det ξ)²` and explicit laminate counterexamples.
//! * [`report`]: the check/margin report shared by the diagnostic suites.

pub mod analyzer;
pub mod convex_core;
pub mod flow;
pub mod integrands;
pub mod mat2;
pub mod mesh;
pub mod report;

pub use integrands::{DiscreteFunctional, Integrand};
pub use mat2::{ConformalSplit, Mat2, Mat3};
pub use mesh::{Field, Mesh, MeshError};

pub use convex_core::{resolvent, ProxError, ProxResult, ProxSolver};
pub use report::DiagnosticsReport;
