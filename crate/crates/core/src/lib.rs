//! Design and analysis of discrete privacy mechanisms under pointwise
//! maximal leakage (PML), with the goal of maximizing worst-case utility.
//!
//! * [`model`]: priors, utility tables, mechanisms, scenarios.
//! * [`leakage`]: per-output PML, its support/residual decomposition and
//!   the closed-form budget of the utility-safe mechanism.
//! * [`mechanisms`]: utility-safe, independent and LDP-style baselines.
//! * [`feasibility`]: the linear program deciding whether an `eps`-PML
//!   mechanism with worst-case utility order `>= h` exists.
//! * [`optimizer`]: bisection over `eps`, binary search over `h`, curves.
//! * [`experiments`]: scenario generators and figure reproduction.
//!
//! ```
//! use pmlkit::experiments::counting_query_scenario;
//! use pmlkit::mechanisms::piecewise_safe_for_budget;
//!
//! let s = counting_query_scenario();
//! let (h, _mech) = piecewise_safe_for_budget(s.prior(), s.order(), 1.0).unwrap();
//! assert_eq!(h, 3);
//! ```

pub mod cli;
pub mod error;
pub mod experiments;
pub mod feasibility;
pub mod io;
pub mod leakage;
pub mod mechanisms;
pub mod model;
pub mod optimizer;
mod simplex;

pub use error::{Error, Result};
pub use model::{Mechanism, Prior, Scenario, UtilityOrder, UtilityValues};
pub use optimizer::{Mode, TradeoffPoint};
