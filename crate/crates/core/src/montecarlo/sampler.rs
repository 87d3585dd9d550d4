//! Fixed sampling algorithms. Changing any of these changes every simulated
//! result for a given seed.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// Means below this use sequential inversion; at or above it, PTRS.
pub const INVERSION_LIMIT: f64 = 10.0;

#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

#[inline]
pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    uniform(rng) < p
}

/// Poisson variate. A zero mean returns 0 without consuming randomness.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mu: f64) -> u64 {
    if mu <= 0.0 {
        0
    } else if mu < INVERSION_LIMIT {
        poisson_inversion(rng, mu)
    } else {
        poisson_ptrs(rng, mu)
    }
}

fn poisson_inversion<R: Rng + ?Sized>(rng: &mut R, mu: f64) -> u64 {
    let u = uniform(rng);
    let mut k = 0u64;
    let mut p = (-mu).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mu / k as f64;
        if p <= 0.0 {
            break;
        }
        cdf += p;
    }
    k
}

// Hörmann (1993), "The transformed rejection method for generating Poisson
// random variables", algorithm PTRS.
fn poisson_ptrs<R: Rng + ?Sized>(rng: &mut R, mu: f64) -> u64 {
    let smu = mu.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.024_83 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    let log_mu = mu.ln();
    loop {
        let u = uniform(rng) - 0.5;
        let v = uniform(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mu + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mu + k * log_mu - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Binomial thinning by one Bernoulli draw per trial.
pub fn binomial<R: Rng + ?Sized>(rng: &mut R, trials: u64, p: f64) -> u64 {
    (0..trials).filter(|_| bernoulli(rng, p)).count() as u64
}
