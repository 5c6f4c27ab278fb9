//! Combinatorics, Feynman-parametric numerics and integral transforms linking
//! planar random-walk multiple-point statistics to the perturbation series of
//! the two-dimensional O(N)-symmetric φ⁴ model at `N = 2m → 0`.
//!
//! Module overview (bottom-up):
//!
//! * [`graph`] — balanced matrices, directed multigraphs, enumeration,
//!   symmetry factors, edge subdivision/closing and the ladder decomposition.
//! * [`weights`] — the `m`-polynomial weights of Wick pairings, by partition
//!   formula and by brute force.
//! * [`special`], [`quad`] — complex Γ-function family, ζ values, polygamma
//!   and quadrature rules used by the analytic modules.
//! * [`feynman`] — Kirchhoff–Symanzik polynomials and the d = 2 parametric
//!   integrals `Γ_G(0)`.
//! * [`series`] — truncated coupling series with propagated errors and the
//!   perturbative coefficient streams.
//! * [`transform`] — the modified Borel kernels, `P_μ`, and the
//!   antiderivative construction of the ζ-series.
//! * [`edge`] — Lipatov constants, `₂F₁`, asymptotic characteristic
//!   functions and rising-edge densities.
//! * [`walk`] — random-walk sampling and multiple-point-range statistics.
//! * [`verify`] — the `verify-all` report.

pub mod error;
pub mod graph;
pub mod weights;
pub mod special;
pub mod quad;
pub mod feynman;
pub mod series;
pub mod transform;
pub mod edge;
pub mod walk;
pub mod verify;

pub use error::{Error, Result};
