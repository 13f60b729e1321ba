//! Subelliptic heat kernel on SU(2).
//!
//! The kernel `p_t(r, z)` of the sub-Laplacian `X^2 + Y^2` is evaluated
//! through a spectral double series, a contour integral against the heat
//! kernel of the three-sphere, and a closed form on the cut locus `r = 0`.
//! On top of these sit the Carnot-Carathéodory distance, the Heisenberg
//! dilation limit, the functional-inequality constants and a Monte Carlo
//! sampler of the underlying diffusion.

pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod special_functions;
pub mod sphere_kernel;
pub mod sr_distance;
pub mod su2_kernel;
pub mod heisenberg;
pub mod functional_inequalities;
pub mod sde_sampler;

pub use error::{Error, Result};
pub use geometry::{CylCoord, GroupElement, Jet2};
pub use quadrature::QuadratureSpec;
pub use su2_kernel::{pt, KernelConfig, KernelEval, Representation};
