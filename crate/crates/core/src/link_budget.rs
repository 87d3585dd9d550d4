//! Mean-photon bookkeeping through the two unbalanced interferometers, the
//! fiber, and the optical switch that diverts bright reference pulses.
//!
//! Each pulse class takes a fixed pair of arms. The BRP takes both long
//! arms, the signal one long and one short arm, and the dim pulse both
//! short arms. Each short arm carries an attenuator.

use crate::error::{check_non_negative, check_probability, Result};
use crate::photon_stats::ChannelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalChain {
    /// Laser output, mean photons per pulse.
    pub source_intensity: f64,
    /// Power fraction sent into Alice's long arm; the rest enters the short arm.
    pub alice_split_ratio: f64,
    /// Power fraction sent into Bob's long arm.
    pub bob_split_ratio: f64,
    pub alice_attenuation_db: f64,
    pub bob_attenuation_db: f64,
    pub channel: ChannelParams,
    /// Isolation of the switch that routes BRPs to the monitor detector, dB.
    pub switch_crosstalk_db: f64,
}

impl Default for OpticalChain {
    fn default() -> Self {
        Self {
            source_intensity: 8e5,
            alice_split_ratio: 0.5,
            bob_split_ratio: 0.5,
            alice_attenuation_db: 56.0,
            bob_attenuation_db: 56.0,
            channel: ChannelParams {
                length_km: 146.0,
                loss_db_per_km: crate::photon_stats::DEFAULT_LOSS_DB_PER_KM,
            },
            switch_crosstalk_db: 20.0,
        }
    }
}

impl OpticalChain {
    pub fn validate(&self) -> Result<()> {
        check_non_negative("source_intensity", self.source_intensity)?;
        check_probability("alice_split_ratio", self.alice_split_ratio)?;
        check_probability("bob_split_ratio", self.bob_split_ratio)?;
        check_non_negative("alice_attenuation_db", self.alice_attenuation_db)?;
        check_non_negative("bob_attenuation_db", self.bob_attenuation_db)?;
        check_non_negative("switch_crosstalk_db", self.switch_crosstalk_db)?;
        self.channel.validate()
    }
}

/// Mean photons per pulse for each class, leaving Alice and arriving at Bob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudgetReport {
    pub transmittance: f64,
    pub brp_at_alice: f64,
    pub signal_at_alice: f64,
    pub dim_at_alice: f64,
    pub brp_at_bob: f64,
    pub signal_at_bob: f64,
    pub dim_at_bob: f64,
    /// BRP light leaking through the switch into the signal detector.
    pub switch_leak_at_signal_detector: f64,
}

fn db_to_fraction(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

pub fn propagate(chain: &OpticalChain) -> Result<LinkBudgetReport> {
    chain.validate()?;
    let a_long = chain.alice_split_ratio;
    let a_short = 1.0 - a_long;
    let b_long = chain.bob_split_ratio;
    let b_short = 1.0 - b_long;
    let a_att = db_to_fraction(chain.alice_attenuation_db);
    let b_att = db_to_fraction(chain.bob_attenuation_db);
    let eta_t = chain.channel.transmittance();

    let src = chain.source_intensity;
    let brp = src * a_long * b_long;
    let signal = src * a_short * a_att * b_long;
    let dim = src * a_short * a_att * b_short * b_att;
    let brp_at_bob = brp * eta_t;

    Ok(LinkBudgetReport {
        transmittance: eta_t,
        brp_at_alice: brp,
        signal_at_alice: signal,
        dim_at_alice: dim,
        brp_at_bob,
        signal_at_bob: signal * eta_t,
        dim_at_bob: dim * eta_t,
        switch_leak_at_signal_detector: brp_at_bob * db_to_fraction(chain.switch_crosstalk_db),
    })
}

/// Error contributed by after-pulses: each one carries a random bit.
pub fn afterpulse_error(p_afterpulse: f64) -> Result<f64> {
    Ok(check_probability("p_afterpulse", p_afterpulse)? / 2.0)
}

/// Probability that leaked BRP light fires the signal detector.
pub fn crosstalk_false_click(leak_intensity: f64, eta_d: f64) -> Result<f64> {
    check_non_negative("leak_intensity", leak_intensity)?;
    check_probability("eta_d", eta_d)?;
    Ok(-(-eta_d * leak_intensity).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn default_chain_reproduces_worked_example() {
        let r = propagate(&OpticalChain::default()).unwrap();
        assert_relative_eq!(r.brp_at_alice, 2e5, max_relative = 1e-15);
        assert_relative_eq!(r.signal_at_alice, 0.502_377_286_301_916, max_relative = 1e-12);
        assert_relative_eq!(r.brp_at_bob, 171.802_704_301_079_1, max_relative = 1e-12);
        assert_relative_eq!(r.signal_at_bob, 4.315_488_818_305_333e-4, max_relative = 1e-12);
        // the chain model gives ~1.1e-9 for the dim pulse
        assert_relative_eq!(r.dim_at_bob, 1.084_001_780_803_248e-9, max_relative = 1e-10);
        assert_relative_eq!(r.switch_leak_at_signal_detector, 1.718_027_043_010_791, max_relative = 1e-12);
    }

    #[test]
    fn dark_source_gives_zeros() {
        let chain = OpticalChain {
            source_intensity: 0.0,
            ..OpticalChain::default()
        };
        let r = propagate(&chain).unwrap();
        assert_eq!(
            [r.brp_at_alice, r.signal_at_alice, r.dim_at_alice, r.brp_at_bob, r.signal_at_bob, r.dim_at_bob, r.switch_leak_at_signal_detector],
            [0.0; 7]
        );
    }

    #[test]
    fn invalid_chain_rejected() {
        let chain = OpticalChain {
            alice_split_ratio: 1.5,
            ..OpticalChain::default()
        };
        assert!(propagate(&chain).is_err());
    }

    #[test]
    fn afterpulse_values() {
        assert_eq!(afterpulse_error(0.008).unwrap(), 0.004);
        assert_eq!(afterpulse_error(0.0).unwrap(), 0.0);
        assert_eq!(afterpulse_error(1.0).unwrap(), 0.5);
        assert!(afterpulse_error(1.1).is_err());
    }

    #[test]
    fn crosstalk_values() {
        assert_eq!(crosstalk_false_click(0.0, 0.045).unwrap(), 0.0);
        assert_relative_eq!(
            crosstalk_false_click(1.72, 0.045).unwrap(),
            0.074_480_428_273_634_1,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            crosstalk_false_click(1.0, 0.045).unwrap(),
            0.044_002_518_166_900_09,
            max_relative = 1e-12
        );
    }

    fn fields(r: &LinkBudgetReport) -> [f64; 7] {
        [
            r.brp_at_alice,
            r.signal_at_alice,
            r.dim_at_alice,
            r.brp_at_bob,
            r.signal_at_bob,
            r.dim_at_bob,
            r.switch_leak_at_signal_detector,
        ]
    }

    proptest! {
        #[test]
        fn intensity_scales_linearly(src in 0.0f64..1e7, ratio in 0.01f64..0.99, l in 0.0f64..200.0) {
            let chain = OpticalChain {
                source_intensity: src,
                alice_split_ratio: ratio,
                channel: ChannelParams::fiber(l).unwrap(),
                ..OpticalChain::default()
            };
            let doubled = OpticalChain { source_intensity: 2.0 * src, ..chain };
            let a = propagate(&chain).unwrap();
            let b = propagate(&doubled).unwrap();
            for (x, y) in fields(&a).iter().zip(fields(&b)) {
                prop_assert_eq!(2.0 * x, y);
            }
            for (at_alice, at_bob) in [(a.brp_at_alice, a.brp_at_bob), (a.signal_at_alice, a.signal_at_bob), (a.dim_at_alice, a.dim_at_bob)] {
                prop_assert!((at_bob - at_alice * a.transmittance).abs() <= 1e-12 * at_bob.abs());
            }
        }

        #[test]
        fn attenuators_compose(x in 0.0f64..40.0, y in 0.0f64..40.0) {
            // two attenuators in Alice's short arm versus one of their sum
            let split = OpticalChain { alice_attenuation_db: x, ..OpticalChain::default() };
            let r_split = propagate(&split).unwrap();
            let combined = OpticalChain { alice_attenuation_db: x + y, ..OpticalChain::default() };
            let r_comb = propagate(&combined).unwrap();
            let cascaded = r_split.signal_at_alice * db_to_fraction(y);
            prop_assert!((cascaded - r_comb.signal_at_alice).abs() <= 1e-12 * r_comb.signal_at_alice);
        }

        #[test]
        fn signal_to_brp_ratio_is_source_independent(src in 1.0f64..1e7, ratio in 0.01f64..0.99, att in 0.0f64..80.0) {
            let chain = OpticalChain {
                source_intensity: src,
                alice_split_ratio: ratio,
                alice_attenuation_db: att,
                ..OpticalChain::default()
            };
            let r = propagate(&chain).unwrap();
            let expected = db_to_fraction(att) * (1.0 - ratio) / ratio;
            prop_assert!((r.signal_at_alice / r.brp_at_alice - expected).abs() <= 1e-12 * expected);
        }
    }
}
