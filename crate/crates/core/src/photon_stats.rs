//! Poissonian source statistics and per-pulse detection probabilities.

use statrs::function::gamma::ln_gamma;

use crate::error::{check_non_negative, check_probability, ModelError, Result};

/// Standard-fiber attenuation at 1550 nm, dB/km.
pub const DEFAULT_LOSS_DB_PER_KM: f64 = 0.21;

/// Mean photon numbers of the signal and bright reference pulses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    pub mu_s: f64,
    pub mu_b: f64,
}

impl SourceParams {
    pub fn new(mu_s: f64, mu_b: f64) -> Result<Self> {
        let params = Self { mu_s, mu_b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_s.is_finite() && self.mu_s > 0.0) {
            return Err(ModelError::Domain {
                name: "mu_s",
                value: self.mu_s,
                expected: "finite and > 0",
            });
        }
        check_non_negative("mu_b", self.mu_b)?;
        Ok(())
    }
}

/// Fiber span between Alice and Bob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub length_km: f64,
    pub loss_db_per_km: f64,
}

impl ChannelParams {
    pub fn new(length_km: f64, loss_db_per_km: f64) -> Result<Self> {
        let params = Self {
            length_km,
            loss_db_per_km,
        };
        params.validate()?;
        Ok(params)
    }

    /// A span of standard fiber (0.21 dB/km).
    pub fn fiber(length_km: f64) -> Result<Self> {
        Self::new(length_km, DEFAULT_LOSS_DB_PER_KM)
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("length_km", self.length_km)?;
        check_non_negative("loss_db_per_km", self.loss_db_per_km)?;
        Ok(())
    }

    pub fn transmittance(&self) -> f64 {
        channel_transmittance(self)
    }
}

/// Bob's detection apparatus.
///
/// `eta_d` includes the losses of Bob's decoding interferometer. `y0` is the
/// dark/background click probability per gate and `e_detector` the chance a
/// photon lands in the wrong detector. `e_0` is the error weight of a dark
/// click, one half for a detector that fires at random.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub eta_d: f64,
    pub y0: f64,
    pub e_detector: f64,
    pub e_0: f64,
}

impl DetectorParams {
    pub fn new(eta_d: f64, y0: f64, e_detector: f64) -> Result<Self> {
        let params = Self {
            eta_d,
            y0,
            e_detector,
            e_0: 0.5,
        };
        params.validate()?;
        Ok(params)
    }

    /// Gobby, Yuan and Shields (2004) detector figures.
    pub fn gys2004() -> Self {
        Self {
            eta_d: 0.045,
            y0: 1.7e-6,
            e_detector: 0.033,
            e_0: 0.5,
        }
    }

    /// Noise-free detector with the GYS efficiency.
    pub fn ideal() -> Self {
        Self {
            eta_d: 0.045,
            y0: 0.0,
            e_detector: 0.0,
            e_0: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("eta_d", self.eta_d)?;
        check_probability("y0", self.y0)?;
        check_probability("e_detector", self.e_detector)?;
        check_probability("e_0", self.e_0)?;
        Ok(())
    }
}

/// Poisson probability `e^{-mu} mu^n / n!`.
///
/// Switches to log space above n = 20 or mu = 20 so that bright-pulse
/// intensities (mu ~ 10^5) do not overflow the factorial.
pub fn poisson_pmf(n: u64, mu: f64) -> Result<f64> {
    check_non_negative("mu", mu)?;
    if mu == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if n > 20 || mu > 20.0 {
        let nf = n as f64;
        let log_p = nf * mu.ln() - mu - ln_gamma(nf + 1.0);
        return Ok(log_p.exp().min(1.0));
    }
    let mut term = (-mu).exp();
    for k in 1..=n {
        term *= mu / k as f64;
    }
    Ok(term)
}

/// Click probability of an `i`-photon pulse when each photon survives with
/// probability `eta`: `1 - (1 - eta)^i`.
pub fn detect_prob(i: u64, eta: f64) -> Result<f64> {
    check_probability("eta", eta)?;
    match i {
        0 => Ok(0.0),
        1 => Ok(eta),
        // ln_1p keeps precision when eta is tiny (eta_t * eta_d ~ 1e-5)
        _ => Ok(-(i as f64 * (-eta).ln_1p()).exp_m1()),
    }
}

/// Fiber transmittance `10^{-alpha L / 10}`.
pub fn channel_transmittance(channel: &ChannelParams) -> f64 {
    10f64.powf(-channel.loss_db_per_km * channel.length_km / 10.0)
}

/// Probability that a bright reference pulse of mean `mu_b` leaves Bob's
/// monitor detector silent, `G_B(0) = e^{-eta_total mu_b}`.
pub fn brp_empty_prob(mu_b: f64, eta_total: f64) -> Result<f64> {
    check_non_negative("mu_b", mu_b)?;
    check_probability("eta_total", eta_total)?;
    Ok((-eta_total * mu_b).exp())
}
