//! Storage policies for local memories (caches) fed by independent stationary
//! renewal request processes, together with the large-catalog asymptotics of
//! their miss probability.
//!
//! The analytic kernels ([`dist`], [`popularity`], [`asymptotics`],
//! [`quadrature`], [`ecdf`]) are generic over the [`Real`] scalar. The
//! simulation layer ([`process`], [`policy`], [`sim`]) is generic too, but
//! the engine and its reports are fixed to `f64`; the aliases below name the
//! concrete types most callers want.

pub mod asymptotics;
pub mod dist;
pub mod ecdf;
pub mod error;
pub mod policy;
pub mod popularity;
pub mod process;
pub mod quadrature;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Model = dist::InterArrivalModel<f64>;
pub type Intensities = popularity::IntensityVector<f64>;
pub type Limit = asymptotics::LimitSpec<f64>;
pub type Source = process::RenewalSource<f64>;
pub type Policy = policy::PolicyKind<f64>;
pub type Ecdf = ecdf::EmpiricalCdf<f64>;

pub use asymptotics::{MissEstimate, MissMethod};
pub use dist::{HazardMonotonicity, ModelFamily};
pub use policy::{Decision, PolicySpec};
pub use sim::{SimConfig, SimReport};
