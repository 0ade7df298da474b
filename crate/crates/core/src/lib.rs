//! Martingale-based finite-horizon safety bounds for discrete-time
//! stochastic systems.
//!
//! * [`bounds`]: closed-form Ville, Freedman and ISSf exit-probability bounds.
//! * [`martingale`]: candidate supermartingales, Doob decomposition, PQV and
//!   the property checks used to audit them on sampled trajectories.
//! * [`dynamics`]: disturbance families, the scalar linear system and the
//!   HLIP walking model with its expectation-DTCBF safety filter.
//! * [`montecarlo`]: reproducible, parallel trial execution and exit
//!   probability estimation.
//! * [`experiments`]: scenario definitions, result tables and the
//!   property suite.
//! * [`cli`]: the command-line front end.

pub mod bounds;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod martingale;
pub mod montecarlo;

pub use error::{Error, Result};
