//! Numerical laboratory for blow-up versus global existence of
//! `u_t = Δu − V u + u^p` on rotationally symmetric model manifolds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod duhamel;
pub mod evolution;
pub mod experiments;
pub mod fit;
pub mod geometry;
pub mod guide;
pub mod htransform;
pub mod output;
pub mod potentials;
pub mod quadrature;
pub mod riesz;
pub mod semigroup;
pub mod testfunctional;
pub mod tridiag;
