//! Wave operators for `H = -Δ + V` on R³ at desk scale.
//!
//! The crate computes the intertwining wave operator `W₊` two independent
//! ways and checks them against each other:
//!
//! * a structure formula built from reflections: `W₊f(x) = f(x) +
//!   ∫_{S²}∫ g(x,dy,ω) f(S_ω x − y) dω`, with the measure `g` assembled from
//!   the one-dimensional profile `L(r,ω)`, Born-series kernels and
//!   Birman–Schwinger resolvent inversion;
//! * a time-domain Cook integral `f + i∫₀^∞ e^{itH−εt} V e^{−itH₀} f dt`.
//!
//! Module map:
//!
//! * [`fields`] — grids, fields, potentials, Fourier transforms, dyadic and
//!   Lorentz norms, sphere quadrature, binary field I/O.
//! * [`resolvent`] — free resolvent kernels, the Birman–Schwinger operator
//!   `R₀(z)V`, its inversion, zero-energy diagnostics, the constant `M₀`,
//!   and high-energy decay checks.
//! * [`kernelalg`] — three-variable kernels `T₁₊`, `Tₙ₊`, `T₊` in the η
//!   representation, the ⊛ composition, contractions, and the Z/Y/X norms.
//! * [`structure`] — the profile `L(r,ω)`, the kernel `K₁₊`, the structure
//!   measures `g₁`, `gₙ`, `g = g₁ + h`, and the application of `W₊`.
//! * [`wiener`] — constructive scalar and operator Wiener inversion, plus
//!   the quantitative parameter formulas.
//! * [`propagator`] — split-step Schrödinger evolution, the Cook-method wave
//!   operator, time-domain Born terms, spectral projections.
//! * [`verify`] — cross-cutting pipelines: oracle equivalence, norm
//!   inequality suites, Lᵖ bounds, stability under potential perturbation.
//! * [`config`] — experiment configuration and report emission for the CLI.
//!
//! See the `examples/` directory for one runnable example per capability and
//! the `waveop` binary for the subcommand interface.

pub mod config;
pub mod error;
pub mod fft;
pub mod fields;
pub mod kernelalg;
pub mod propagator;
pub mod resolvent;
pub mod structure;
pub mod verify;
pub mod wiener;

pub use error::{Result, WaveopError};
pub use fields::{Grid3, Potential, ScalarField, SphereQuadrature};
