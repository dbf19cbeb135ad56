//! Finite-volume Anderson model laboratory.
//!
//! Numerical routines are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common double-precision instantiations.

pub mod box_analysis;
pub mod disorder;
pub mod error;
pub mod flip;
pub mod geometry;
pub mod interval;
pub mod msa;
pub mod operator;
pub mod quadrature;
pub mod scalar;
pub mod sperner;
pub mod stats;
pub mod ucp;

pub use box_analysis::{classify_box, wegner_mc, wegner_scaling_fit, wegner_sweep, ClassificationRecord, WegnerEstimate};
pub use disorder::{child_seed, rng_from_seed, sample_field, DisorderField, FrozenAssignment, SiteLaw};
pub use error::{Error, Result};
pub use flip::{EigenBranch, RankOnePath};
pub use geometry::{LatticeBox, Region, Site, TiltedRegion};
pub use interval::Interval;
pub use operator::{FiniteVolumeOperator, SpectralData};
pub use scalar::Scalar;

pub type Field = DisorderField<f64>;
pub type Operator = FiniteVolumeOperator<f64>;
pub type Spectrum = SpectralData<f64>;
pub type Window = Interval<f64>;
pub type FlipPath = RankOnePath<f64>;
pub type Branch = EigenBranch<f64>;
