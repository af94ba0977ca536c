//! Gradient Ricci-harmonic solitons on conformally semi-Euclidean warped
//! products, built and checked numerically.
//!
//! The crate constructs candidate metrics g = φ^{-2}g₀ + f²τ^{-2}g₀′ on
//! B ×_f F whose data depend on a single invariant coordinate, evaluates the
//! curvature quantities entering the soliton equation exactly through jet
//! arithmetic, and verifies both the full tensor equation and its reduction
//! to scalar ODE systems. Everything downstream (closed-form families, the
//! shooting constructor, geodesic probes, the command-line front end) feeds
//! the same verifier.
//!
//! Start with the `examples/` directory; each example exercises one major
//! capability end to end.

pub mod candidate;
pub mod cli;
pub mod constructor;
pub mod curvature;
pub mod factor;
pub mod geodesics;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod report;
pub mod sampling;
pub mod soliton;
pub mod zflow;
