//! Pulse-level simulation of the link, with and without a splitting attack.
//!
//! Pulses are processed in fixed blocks of [`BLOCK_SIZE`]. Block `b` draws
//! from its own ChaCha8 stream (`derive_stream(seed, b)`), and block results
//! are integer counts, so the outcome does not depend on how blocks are
//! scheduled across threads.

mod sampler;

use std::iter::Sum;
use std::ops::Add;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_non_negative, check_probability, ModelError, Result};
use crate::photon_stats::{brp_empty_prob, ChannelParams, DetectorParams, SourceParams};
use crate::security::{bob_error_rate, yields};

pub use sampler::{binomial, poisson, INVERSION_LIMIT};

/// Pulses per random stream.
pub const BLOCK_SIZE: u64 = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EveMode {
    None,
    /// Photon-number splitting combined with selective suppression of
    /// single-photon pulses.
    Pns,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvePolicy {
    pub mode: EveMode,
    /// Fraction of single-photon signal pulses Eve blocks.
    pub suppress_fraction: f64,
    /// Multi-photon pulses reach Bob's detector over a lossless channel
    /// after Eve keeps one photon.
    pub forward_multiphoton_lossless: bool,
}

impl EvePolicy {
    pub fn none() -> Self {
        Self {
            mode: EveMode::None,
            suppress_fraction: 0.0,
            forward_multiphoton_lossless: false,
        }
    }

    pub fn pns(suppress_fraction: f64, forward_multiphoton_lossless: bool) -> Self {
        Self {
            mode: EveMode::Pns,
            suppress_fraction,
            forward_multiphoton_lossless,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_pulses: u64,
    pub source: SourceParams,
    pub channel: ChannelParams,
    pub det: DetectorParams,
    pub eve: EvePolicy,
    pub seed: u64,
}

impl McConfig {
    /// Unlike the analytic model, a zero signal intensity is allowed here.
    pub fn validate(&self) -> Result<()> {
        if self.n_pulses == 0 {
            return Err(ModelError::Invalid("n_pulses must be at least 1".into()));
        }
        check_non_negative("mu_s", self.source.mu_s)?;
        check_non_negative("mu_b", self.source.mu_b)?;
        self.channel.validate()?;
        self.det.validate()?;
        check_probability("suppress_fraction", self.eve.suppress_fraction)?;
        Ok(())
    }

    fn eta_total(&self) -> f64 {
        self.channel.transmittance() * self.det.eta_d
    }
}

/// Raw event counts. Addition is exact, which makes block results
/// order-independent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct McCounts {
    pub pulses: u64,
    /// Cycles where at least one signal photon reached the detector.
    pub photon_clicks: u64,
    /// Pulses that left Alice with exactly one photon.
    pub single_emitted: u64,
    pub single_clicks: u64,
    /// Every registered click: photon, dark, or interference.
    pub clicks: u64,
    pub errors: u64,
    pub brp_missing: u64,
    pub blocked: u64,
    /// Blocked cycles whose BRP still clicked.
    pub blocked_brp_click: u64,
    pub interference_errors: u64,
    /// Blocked cycles whose BRP also went missing, invisible to Bob.
    pub covert_blocks: u64,
}

impl Add for McCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            pulses: self.pulses + o.pulses,
            photon_clicks: self.photon_clicks + o.photon_clicks,
            single_emitted: self.single_emitted + o.single_emitted,
            single_clicks: self.single_clicks + o.single_clicks,
            clicks: self.clicks + o.clicks,
            errors: self.errors + o.errors,
            brp_missing: self.brp_missing + o.brp_missing,
            blocked: self.blocked + o.blocked,
            blocked_brp_click: self.blocked_brp_click + o.blocked_brp_click,
            interference_errors: self.interference_errors + o.interference_errors,
            covert_blocks: self.covert_blocks + o.covert_blocks,
        }
    }
}

impl Sum for McCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// A binomial proportion with its standard error `sqrt(p(1-p)/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub successes: u64,
    pub trials: u64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                value: 0.0,
                std_err: 0.0,
                successes,
                trials,
            };
        }
        let p = successes as f64 / trials as f64;
        Self {
            value: p,
            std_err: (p * (1.0 - p) / trials as f64).sqrt(),
            successes,
            trials,
        }
    }

    /// Deviation from `target` in units of the standard error implied by the
    /// target itself, `sqrt(target (1 - target) / trials)`.
    pub fn z_score(&self, target: f64) -> f64 {
        let sd = (target * (1.0 - target) / self.trials.max(1) as f64).sqrt();
        let diff = self.value - target;
        if sd > 0.0 {
            diff / sd
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub counts: McCounts,
    /// Signal-photon clicks per pulse.
    pub est_y_exp: Estimate,
    /// Single-photon emissions that clicked, per pulse.
    pub est_y_1: Estimate,
    /// Errors among all registered clicks.
    pub est_d_bob: Estimate,
    /// BRP no-click probability.
    pub est_g_b0: Estimate,
    /// Fraction of cycles without a BRP click; what Bob monitors.
    pub brp_missing_rate: Estimate,
    /// Error rate among blocked-signal cycles whose BRP survived.
    pub interference_error_rate: Estimate,
}

impl McResult {
    fn from_counts(c: McCounts) -> Self {
        Self {
            counts: c,
            est_y_exp: Estimate::from_counts(c.photon_clicks, c.pulses),
            est_y_1: Estimate::from_counts(c.single_clicks, c.pulses),
            est_d_bob: Estimate::from_counts(c.errors, c.clicks),
            est_g_b0: Estimate::from_counts(c.brp_missing, c.pulses),
            brp_missing_rate: Estimate::from_counts(c.brp_missing, c.pulses),
            interference_error_rate: Estimate::from_counts(c.interference_errors, c.blocked_brp_click),
        }
    }
}

/// Random stream for pulse block `block_index` of a run seeded with `seed`.
pub fn derive_stream(seed: u64, block_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block_index);
    rng
}

/// Honest link: no eavesdropper.
pub fn simulate(config: &McConfig) -> Result<McResult> {
    if config.eve.mode != EveMode::None {
        return Err(ModelError::Invalid(
            "simulate expects eve mode none; use simulate_attack".into(),
        ));
    }
    run(config)
}

/// Link under Eve's splitting-and-suppression policy.
pub fn simulate_attack(config: &McConfig) -> Result<McResult> {
    if config.eve.mode != EveMode::Pns {
        return Err(ModelError::Invalid(
            "simulate_attack expects eve mode pns".into(),
        ));
    }
    run(config)
}

/// Either simulation on a dedicated pool of `threads` workers.
pub fn simulate_with_threads(config: &McConfig, threads: usize) -> Result<McResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ModelError::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| match config.eve.mode {
        EveMode::None => simulate(config),
        EveMode::Pns => simulate_attack(config),
    })
}

fn run(config: &McConfig) -> Result<McResult> {
    config.validate()?;
    let blocks = config.n_pulses.div_ceil(BLOCK_SIZE);
    let counts: McCounts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_SIZE;
            let len = BLOCK_SIZE.min(config.n_pulses - start);
            simulate_block(config, b, len)
        })
        .sum();
    Ok(McResult::from_counts(counts))
}

fn simulate_block(config: &McConfig, block_index: u64, len: u64) -> McCounts {
    let mut rng = derive_stream(config.seed, block_index);
    let eta_total = config.eta_total();
    let brp_mean = eta_total * config.source.mu_b;
    let det = &config.det;
    let attack = config.eve.mode == EveMode::Pns;
    let forward = attack && config.eve.forward_multiphoton_lossless;

    let mut c = McCounts {
        pulses: len,
        ..McCounts::default()
    };
    for _ in 0..len {
        // draw order is fixed: n, block, BRP, survivors, dark, error
        let n = poisson(&mut rng, config.source.mu_s);
        let block_draw = sampler::uniform(&mut rng);
        let brp_click = poisson(&mut rng, brp_mean) > 0;

        let blocked = attack && n == 1 && block_draw < config.eve.suppress_fraction;
        let survivors = if blocked {
            0
        } else if forward && n >= 2 {
            binomial(&mut rng, n - 1, det.eta_d)
        } else {
            binomial(&mut rng, n, eta_total)
        };
        let dark = sampler::bernoulli(&mut rng, det.y0);
        let error_draw = sampler::uniform(&mut rng);

        if n == 1 {
            c.single_emitted += 1;
        }
        if !brp_click {
            c.brp_missing += 1;
        }
        if blocked {
            c.blocked += 1;
            if brp_click {
                c.blocked_brp_click += 1;
            } else {
                c.covert_blocks += 1;
            }
        }

        let error = if survivors > 0 {
            c.photon_clicks += 1;
            if n == 1 {
                c.single_clicks += 1;
            }
            Some(error_draw < det.e_detector)
        } else if blocked && brp_click {
            let e = error_draw < 0.5;
            if e {
                c.interference_errors += 1;
            }
            Some(e)
        } else if dark {
            Some(error_draw < det.e_0)
        } else {
            None
        };
        if let Some(e) = error {
            c.clicks += 1;
            if e {
                c.errors += 1;
            }
        }
    }
    c
}

/// Analytic counterpart of one simulated estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub name: &'static str,
    pub estimate: Estimate,
    pub target: f64,
    pub z: f64,
}

/// Honest-link estimates next to their closed-form values: overall yield,
/// single-photon yield, Bob's error rate and the BRP empty probability.
///
/// Error-rate targets are skipped when the analytic yield is zero.
pub fn compare_with_model(config: &McConfig, result: &McResult) -> Result<Vec<Comparison>> {
    config.validate()?;
    let eta_total = config.eta_total();
    let mut rows = Vec::new();
    let mut push = |name, estimate: Estimate, target: f64| {
        rows.push(Comparison {
            name,
            estimate,
            target,
            z: estimate.z_score(target),
        })
    };
    let mu_s = config.source.mu_s;
    let (y_exp, y_1) = if mu_s > 0.0 {
        let y = yields(&config.source, eta_total)?;
        (y.y_exp, y.y_1)
    } else {
        (0.0, 0.0)
    };
    push("y_exp", result.est_y_exp, y_exp);
    push("y_1", result.est_y_1, y_1);
    if y_exp > 0.0 {
        let d = bob_error_rate(&config.source, &config.channel, &config.det)?;
        push("d_bob", result.est_d_bob, d.value);
    }
    push(
        "g_b0",
        result.est_g_b0,
        brp_empty_prob(config.source.mu_b, eta_total)?,
    );
    Ok(rows)
}
