//! Willmore energy, conformal families and min-max combinatorics for closed
//! surfaces in the round unit 3-sphere.
//!
//! The crate is organised bottom-up:
//!
//! - [`s3`]: points, geodesics, stereographic charts and uniform sampling on S³.
//! - [`surface`]: parametric generators, triangle meshes, curvature and quadrature.
//! - [`conformal`]: the centered dilations `F_v`, tubular coordinates and the collapse map.
//! - [`willmore`]: energy reports, closed forms, invariance residuals and optimizers.
//! - [`canonical`]: the five-parameter family `Σ_(v,t)`, its area bound, regions,
//!   blow-up limits, the extended Gauss map and mass concentration.
//! - [`sphere_images`]: exact images of caps and balls under `F_v`.
//! - [`cubical`]: 3-adic cube complexes, boundary maps, fineness and the retraction `r_m(j)`.

pub mod canonical;
pub mod conformal;
pub mod cubical;
pub mod error;
pub mod report;
pub mod s3;
pub mod spatial;
pub mod sphere_images;
pub mod surface;
pub mod willmore;

pub use error::{Error, Result};
pub use s3::{SpherePoint, TangentVector, Vec4};
pub use surface::SurfaceMesh;
