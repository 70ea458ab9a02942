//! Energy-efficiency region of a MISO symbiotic radio system.
//!
//! A multi-antenna primary transmitter (PT) serves a single-antenna
//! receiver while a backscatter device (BD) rides on its signal. This crate
//! computes the individual EE maxima of both links, traces the Pareto
//! boundary of the achievable `(EE_PT, EE_BD)` region, and exposes the
//! pieces (channel model, closed forms, SCA beamforming) on their own.

// `!(x >= 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod ee_model;
pub mod error;
pub mod individual;
pub mod linalg;
pub mod numerics;
pub mod pareto;
pub mod sca;

pub use channel::{gen_channels, ChannelSet, RFParams, ScenarioGeometry};
pub use ee_model::{ee_pair, Beamformer, EEPair};
pub use error::{Error, Result};
pub use individual::{bd_ee_max, pt_ee_max, pt_rate_max, CornerLabel, CornerResult};
pub use linalg::CVec;
pub use pareto::{
    boundary_sweep, pareto_point, EEProfile, ParetoConfig, ParetoPoint, ParetoSolver,
    ProfileScaling,
};
pub use sca::{sca_run, ScaConfig, ScaOutcome};
