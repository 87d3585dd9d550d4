//! Security analysis of weak-pulse quantum key distribution protected by
//! bright reference pulses (BRPs).
//!
//! * [`photon_stats`]: Poisson source statistics and detection probabilities.
//! * [`security`]: yields, error rates, Bob's and Eve's information, key rates.
//! * [`optimizer`]: secure distance, optimal signal intensity, BRP bound,
//!   tolerable disturbance, parameter sweeps.
//! * [`montecarlo`]: seeded pulse-level simulator, honest and under attack.
//! * [`link_budget`]: intensities through the interferometers and fiber.

pub mod error;
pub mod link_budget;
pub mod montecarlo;
pub mod optimizer;
pub mod photon_stats;
pub mod security;

pub use error::{ModelError, Result};
pub use photon_stats::{ChannelParams, DetectorParams, SourceParams};
pub use security::{evaluate_point, SecurityReport};
