//! Information balance between Bob and an eavesdropper who combines a
//! photon-number-splitting attack on multi-photon pulses with the optimal
//! individual attack on single photons.
//!
//! Bright reference pulses stop Eve from blocking single-photon pulses, so
//! her multi-photon gain is capped at the natural multi-photon share of
//! Bob's clicks. Every error Bob sees is charged to Eve.

use crate::error::{check_probability, ModelError, Result};
use crate::photon_stats::{poisson_pmf, ChannelParams, DetectorParams, SourceParams};

/// Expected click probabilities per signal pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YieldPair {
    /// All photon-number components.
    pub y_exp: f64,
    /// Single-photon emissions only.
    pub y_1: f64,
}

/// A probability that may have been clamped into its physical range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamped {
    pub value: f64,
    /// Value before clamping.
    pub raw: f64,
    pub clamped: bool,
}

impl Clamped {
    fn at_most(raw: f64, limit: f64) -> Self {
        Self {
            value: raw.min(limit),
            raw,
            clamped: raw > limit,
        }
    }
}

/// Everything computed at one (source, channel, detector) point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityReport {
    pub y_exp: f64,
    pub y_1: f64,
    pub d_bob: f64,
    pub d_eve: f64,
    pub i_ab: f64,
    pub i_ae_multi: f64,
    pub i_ae_single: f64,
    pub i_ae: f64,
    pub r_bob: f64,
    pub r_eve: f64,
    pub r_s: f64,
    pub secure: bool,
    /// Bob's error rate exceeded 1/2 and was clamped.
    pub d_bob_clamped: bool,
    /// The single-photon error rate exceeded 1/2 and was clamped.
    pub d_eve_clamped: bool,
}

/// Shannon entropy of a binary source, in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_probability("x", x)?;
    Ok(entropy_unchecked(x))
}

fn entropy_unchecked(x: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    term(x) + term(1.0 - x)
}

/// Alice-Bob mutual information for a binary symmetric channel with error
/// rate `d`.
pub fn mutual_info_ab(d: f64) -> Result<f64> {
    Ok(1.0 - binary_entropy(d)?)
}

/// Overall and single-photon click probabilities for a Poisson source seen
/// through a total efficiency `eta_total = eta_t * eta_d`.
pub fn yields(source: &SourceParams, eta_total: f64) -> Result<YieldPair> {
    source.validate()?;
    check_probability("eta_total", eta_total)?;
    let mu = source.mu_s;
    Ok(YieldPair {
        y_exp: -(-eta_total * mu).exp_m1(),
        y_1: (-mu).exp() * eta_total * mu,
    })
}

/// Fraction of Bob's clicks that came from multi-photon pulses, all of which
/// Eve learns without disturbance.
pub fn eve_info_multi(yields: &YieldPair) -> Result<f64> {
    if yields.y_exp <= 0.0 {
        return Err(ModelError::Undefined("no clicks at Bob (y_exp = 0)"));
    }
    Ok(((yields.y_exp - yields.y_1) / yields.y_exp).clamp(0.0, 1.0))
}

/// Error rate on the single-photon subset, `mu_s d / P_1(mu_s) = d e^{mu_s}`,
/// clamped at 1/2.
pub fn eve_error_rate(mu_s: f64, d: f64) -> Result<Clamped> {
    SourceParams::new(mu_s, 0.0)?;
    check_probability("d", d)?;
    let p1 = poisson_pmf(1, mu_s)?;
    Ok(Clamped::at_most(mu_s * d / p1, 0.5))
}

/// Information per single photon from the optimal individual attack at
/// error rate `d_eve`: `1 - H2(1/2 - sqrt(d_eve (1 - d_eve)))`.
///
/// This is an upper bound; it is used as Eve's information.
pub fn individual_attack_info(d_eve: f64) -> Result<f64> {
    check_probability("d_eve", d_eve)?;
    let d_prime = (0.5 - (d_eve * (1.0 - d_eve)).sqrt()).max(0.0);
    Ok(1.0 - entropy_unchecked(d_prime))
}

/// Eve's information from single-photon pulses, weighted by their share
/// `P_1(mu_s) / mu_s = e^{-mu_s}`.
pub fn eve_info_single(mu_s: f64, d: f64) -> Result<f64> {
    let d_eve = eve_error_rate(mu_s, d)?;
    let weight = poisson_pmf(1, mu_s)? / mu_s;
    Ok(weight * individual_attack_info(d_eve.value)?)
}

/// Bob's bit error rate from dark counts and misalignment, clamped to 1/2.
///
/// The denominator counts signal clicks only.
pub fn bob_error_rate(
    source: &SourceParams,
    channel: &ChannelParams,
    det: &DetectorParams,
) -> Result<Clamped> {
    channel.validate()?;
    det.validate()?;
    let y = yields(source, channel.transmittance() * det.eta_d)?;
    bob_error_rate_from_yield(y.y_exp, det)
}

fn bob_error_rate_from_yield(y_exp: f64, det: &DetectorParams) -> Result<Clamped> {
    if y_exp <= 0.0 {
        return Err(ModelError::Undefined("no clicks at Bob (y_exp = 0)"));
    }
    let raw = (det.e_0 * det.y0 + det.e_detector * y_exp) / y_exp;
    Ok(Clamped::at_most(raw, 0.5))
}

/// Full security evaluation at one operating point.
pub fn evaluate_point(
    source: &SourceParams,
    channel: &ChannelParams,
    det: &DetectorParams,
) -> Result<SecurityReport> {
    channel.validate()?;
    det.validate()?;
    let y = yields(source, channel.transmittance() * det.eta_d)?;
    let d_bob = bob_error_rate_from_yield(y.y_exp, det)?;
    let i_ab = mutual_info_ab(d_bob.value)?;
    let i_ae_multi = eve_info_multi(&y)?;
    let d_eve = eve_error_rate(source.mu_s, d_bob.value)?;
    let i_ae_single = eve_info_single(source.mu_s, d_bob.value)?;
    Ok(assemble(
        y,
        d_bob,
        d_eve,
        i_ab,
        i_ae_multi,
        i_ae_single,
    ))
}

/// The same evaluation for an ideal single-photon source: every click is a
/// single photon, so Eve has no multi-photon share and `D_Eve = D`.
pub fn evaluate_ideal_source(channel: &ChannelParams, det: &DetectorParams) -> Result<SecurityReport> {
    channel.validate()?;
    det.validate()?;
    let eta_total = channel.transmittance() * det.eta_d;
    let y = YieldPair {
        y_exp: eta_total,
        y_1: eta_total,
    };
    let d_bob = bob_error_rate_from_yield(y.y_exp, det)?;
    let i_ab = mutual_info_ab(d_bob.value)?;
    let d_eve = Clamped::at_most(d_bob.value, 0.5);
    let i_ae_single = individual_attack_info(d_eve.value)?;
    Ok(assemble(y, d_bob, d_eve, i_ab, 0.0, i_ae_single))
}

fn assemble(
    y: YieldPair,
    d_bob: Clamped,
    d_eve: Clamped,
    i_ab: f64,
    i_ae_multi: f64,
    i_ae_single: f64,
) -> SecurityReport {
    let i_ae = i_ae_multi + i_ae_single;
    let r_bob = 0.5 * y.y_exp * i_ab;
    let r_eve = 0.5 * y.y_exp * i_ae;
    let r_s = r_bob - r_eve;
    SecurityReport {
        y_exp: y.y_exp,
        y_1: y.y_1,
        d_bob: d_bob.value,
        d_eve: d_eve.value,
        i_ab,
        i_ae_multi,
        i_ae_single,
        i_ae,
        r_bob,
        r_eve,
        r_s,
        secure: r_s > 0.0,
        d_bob_clamped: d_bob.clamped,
        d_eve_clamped: d_eve.clamped,
    }
}
