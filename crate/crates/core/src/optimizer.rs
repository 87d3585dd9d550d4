//! Sweeps and root finding over the security model: maximum secure distance,
//! the best signal intensity, the minimum bright-reference intensity, and
//! the tolerable disturbance.

use rayon::prelude::*;

use crate::error::{check_non_negative, ModelError, Result};
use crate::photon_stats::{
    brp_empty_prob, poisson_pmf, ChannelParams, DetectorParams, SourceParams,
};
use crate::security::{
    eve_info_single, evaluate_point, individual_attack_info, mutual_info_ab, SecurityReport,
};

/// Farthest distance examined by [`secure_distance`], km.
pub const SCAN_CAP_KM: f64 = 1000.0;
/// Step of the coarse distance scan, km.
pub const SCAN_STEP_KM: f64 = 1.0;
/// Width of the final distance bracket, km.
pub const DISTANCE_TOLERANCE_KM: f64 = 1e-6;
/// Width of the final signal-intensity bracket.
pub const INTENSITY_TOLERANCE: f64 = 1e-3;
/// Grid objectives closer than this are treated as a plateau, km.
pub const PLATEAU_TOLERANCE_KM: f64 = 1e-2;
/// Width of the final disturbance bracket.
pub const DISTURBANCE_TOLERANCE: f64 = 1e-10;
/// Fraction of single-photon pulses Eve may suppress unnoticed.
pub const DEFAULT_SUPPRESSION_BUDGET: f64 = 1e-3;

/// Photon source whose tolerable disturbance is asked for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalSource {
    /// True single-photon source.
    Ideal,
    /// Weak coherent pulses of the given mean photon number.
    Weak(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecureDistance {
    pub distance_km: f64,
    /// Still secure at the scan cap; `distance_km` is the cap.
    pub unbounded: bool,
    /// Not secure even at zero length; `distance_km` is 0.
    pub insecure_everywhere: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalIntensity {
    pub mu_s: f64,
    pub distance_km: f64,
    pub unbounded: bool,
    /// The objective was flat over the grid; `mu_s` is the plateau midpoint.
    pub plateau: bool,
}

/// Minimum bright-reference intensity that limits Eve's covert suppression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrpBound {
    pub mu_b_min: f64,
    pub g_b0_at_bound: f64,
    pub suppression_budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceBound {
    pub d: f64,
    /// Eve's multi-photon share alone already exceeds Bob's information.
    pub insecure_at_zero: bool,
}

/// Grid for tabulating the key-rate margin against intensity and distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub mu_s_values: Vec<f64>,
    pub length_values_km: Vec<f64>,
    pub det: DetectorParams,
    pub loss_db_per_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub mu_s: f64,
    pub length_km: f64,
    pub report: SecurityReport,
}

/// One point of the information-versus-disturbance curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationPoint {
    pub d: f64,
    pub i_ab: f64,
    pub i_ae: f64,
}

fn secure_at(mu_s: f64, det: &DetectorParams, loss: f64, length_km: f64) -> Result<bool> {
    let report = evaluate_point(
        &SourceParams::new(mu_s, 0.0)?,
        &ChannelParams::new(length_km, loss)?,
        det,
    )?;
    Ok(report.secure)
}

/// Largest fiber length with a positive key-rate margin.
///
/// A 1 km scan out to [`SCAN_CAP_KM`] brackets the sign change, then
/// bisection narrows it. The margin must change sign at most once, from
/// secure to insecure.
pub fn secure_distance(mu_s: f64, det: &DetectorParams, loss_db_per_km: f64) -> Result<SecureDistance> {
    check_non_negative("loss_db_per_km", loss_db_per_km)?;
    let steps = (SCAN_CAP_KM / SCAN_STEP_KM).round() as usize;
    let signs = (0..=steps)
        .map(|k| secure_at(mu_s, det, loss_db_per_km, k as f64 * SCAN_STEP_KM))
        .collect::<Result<Vec<bool>>>()?;

    let flips: Vec<usize> = signs
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] != w[1])
        .map(|(k, _)| k)
        .collect();

    match (signs[0], flips.as_slice()) {
        (true, []) => Ok(SecureDistance {
            distance_km: SCAN_CAP_KM,
            unbounded: true,
            insecure_everywhere: false,
        }),
        (false, []) => Ok(SecureDistance {
            distance_km: 0.0,
            unbounded: false,
            insecure_everywhere: true,
        }),
        (true, [k]) => {
            let mut lo = *k as f64 * SCAN_STEP_KM;
            let mut hi = lo + SCAN_STEP_KM;
            while hi - lo > DISTANCE_TOLERANCE_KM {
                let mid = 0.5 * (lo + hi);
                if secure_at(mu_s, det, loss_db_per_km, mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(SecureDistance {
                distance_km: lo,
                unbounded: false,
                insecure_everywhere: false,
            })
        }
        _ => Err(ModelError::MultiCrossing {
            crossings: flips
                .iter()
                .map(|&k| (k as f64 + 0.5) * SCAN_STEP_KM)
                .collect(),
        }),
    }
}

fn check_increasing(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(ModelError::Invalid(format!("{name} is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ModelError::Invalid(format!(
            "{name} must be finite and strictly increasing"
        )));
    }
    Ok(())
}

/// Signal intensity that maximizes the secure distance.
///
/// The grid argmax is refined by golden-section search over the
/// neighbouring grid cells.
pub fn optimal_signal_intensity(
    det: &DetectorParams,
    loss_db_per_km: f64,
    grid: &[f64],
) -> Result<OptimalIntensity> {
    check_increasing("mu_s grid", grid)?;
    let distances = grid
        .par_iter()
        .map(|&mu| secure_distance(mu, det, loss_db_per_km))
        .collect::<Result<Vec<_>>>()?;

    let (best, best_d) = distances
        .iter()
        .enumerate()
        .fold((0, distances[0]), |(bi, bd), (i, d)| {
            if d.distance_km > bd.distance_km {
                (i, *d)
            } else {
                (bi, bd)
            }
        });

    let lowest = distances
        .iter()
        .map(|d| d.distance_km)
        .fold(f64::INFINITY, f64::min);
    if grid.len() > 1 && best_d.distance_km - lowest < PLATEAU_TOLERANCE_KM {
        let mu_s = 0.5 * (grid[0] + grid[grid.len() - 1]);
        let at_mid = secure_distance(mu_s, det, loss_db_per_km)?;
        return Ok(OptimalIntensity {
            mu_s,
            distance_km: at_mid.distance_km,
            unbounded: at_mid.unbounded,
            plateau: true,
        });
    }
    if grid.len() == 1 || best_d.unbounded {
        return Ok(OptimalIntensity {
            mu_s: grid[best],
            distance_km: best_d.distance_km,
            unbounded: best_d.unbounded,
            plateau: false,
        });
    }

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let objective = |mu: f64| secure_distance(mu, det, loss_db_per_km).map(|d| d.distance_km);
    let (mu_star, d_star) = golden_section_max(objective, lo, hi, INTENSITY_TOLERANCE)?;

    if d_star >= best_d.distance_km {
        Ok(OptimalIntensity {
            mu_s: mu_star,
            distance_km: d_star,
            unbounded: false,
            plateau: false,
        })
    } else {
        Ok(OptimalIntensity {
            mu_s: grid[best],
            distance_km: best_d.distance_km,
            unbounded: false,
            plateau: false,
        })
    }
}

fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Smallest BRP mean photon number with `G_B(0) <= budget * P_1(mu_s)`.
pub fn brp_intensity_bound(
    mu_s: f64,
    channel: &ChannelParams,
    det: &DetectorParams,
    budget: f64,
) -> Result<BrpBound> {
    SourceParams::new(mu_s, 0.0)?;
    channel.validate()?;
    det.validate()?;
    if !(budget.is_finite() && budget > 0.0) {
        return Err(ModelError::Domain {
            name: "budget",
            value: budget,
            expected: "finite and > 0",
        });
    }
    let eta_total = channel.transmittance() * det.eta_d;
    if eta_total <= 0.0 {
        return Err(ModelError::Undefined("eta_t * eta_d = 0"));
    }
    let target = budget * poisson_pmf(1, mu_s)?;
    let mu_b_min = if target >= 1.0 {
        0.0
    } else {
        -target.ln() / eta_total
    };
    Ok(BrpBound {
        mu_b_min,
        g_b0_at_bound: brp_empty_prob(mu_b_min, eta_total)?,
        suppression_budget: budget,
    })
}

/// Eve's total information at disturbance `d`, with the single/multi click
/// ratio taken in the low-transmittance limit `y_1 / y_exp -> e^{-mu_s}`.
pub fn eve_information(source: SignalSource, d: f64) -> Result<f64> {
    match source {
        SignalSource::Ideal => individual_attack_info(d.min(0.5)),
        SignalSource::Weak(mu_s) => {
            let multi = -(-mu_s).exp_m1();
            Ok(multi + eve_info_single(mu_s, d)?)
        }
    }
}

/// Disturbance at which Bob's and Eve's information are equal.
pub fn disturbance_bound(source: SignalSource) -> Result<DisturbanceBound> {
    if let SignalSource::Weak(mu_s) = source {
        SourceParams::new(mu_s, 0.0)?;
    }
    let margin = |d: f64| -> Result<f64> { Ok(mutual_info_ab(d)? - eve_information(source, d)?) };
    if margin(0.0)? <= 0.0 {
        return Ok(DisturbanceBound {
            d: 0.0,
            insecure_at_zero: true,
        });
    }
    let (mut lo, mut hi) = (0.0, 0.5);
    while hi - lo > DISTURBANCE_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DisturbanceBound {
        d: 0.5 * (lo + hi),
        insecure_at_zero: false,
    })
}

/// Bob's and Eve's information over a list of disturbances.
pub fn information_curve(source: SignalSource, d_values: &[f64]) -> Result<Vec<InformationPoint>> {
    d_values
        .iter()
        .map(|&d| {
            Ok(InformationPoint {
                d,
                i_ab: mutual_info_ab(d)?,
                i_ae: eve_information(source, d)?,
            })
        })
        .collect()
}

/// Evaluate every (mu_s, L) pair of the grid, ordered by mu_s then L.
pub fn sweep(grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    check_increasing("mu_s_values", &grid.mu_s_values)?;
    check_increasing("length_values_km", &grid.length_values_km)?;
    grid.det.validate()?;
    let pairs: Vec<(f64, f64)> = grid
        .mu_s_values
        .iter()
        .flat_map(|&mu| grid.length_values_km.iter().map(move |&l| (mu, l)))
        .collect();
    pairs
        .par_iter()
        .map(|&(mu_s, length_km)| {
            let report = evaluate_point(
                &SourceParams::new(mu_s, 0.0)?,
                &ChannelParams::new(length_km, grid.loss_db_per_km)?,
                &grid.det,
            )?;
            Ok(SweepRow {
                mu_s,
                length_km,
                report,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon_stats::DEFAULT_LOSS_DB_PER_KM;
    use approx::assert_relative_eq;

    const LOSS: f64 = DEFAULT_LOSS_DB_PER_KM;

    fn gys_distance(mu_s: f64) -> SecureDistance {
        secure_distance(mu_s, &DetectorParams::gys2004(), LOSS).unwrap()
    }

    fn coarse_grid() -> Vec<f64> {
        (0..=18).map(|k| 0.1 + 0.05 * k as f64).collect()
    }

    #[test]
    fn gys_secure_distance() {
        let d = gys_distance(0.5);
        assert!((d.distance_km - 146.0).abs() <= 3.0, "{d:?}");
        assert!(!d.unbounded);
        assert!(gys_distance(0.1).distance_km < d.distance_km);
    }

    #[test]
    fn secure_distance_is_the_sign_change() {
        let det = DetectorParams::gys2004();
        let l = gys_distance(0.5).distance_km;
        assert!(secure_at(0.5, &det, LOSS, l - 0.1).unwrap());
        assert!(!secure_at(0.5, &det, LOSS, l + 0.1).unwrap());
    }

    #[test]
    fn noiseless_detector_is_unbounded() {
        let d = secure_distance(0.5, &DetectorParams::ideal(), LOSS).unwrap();
        assert!(d.unbounded);
        assert_eq!(d.distance_km, SCAN_CAP_KM);
    }

    #[test]
    fn hopeless_detector_is_insecure_everywhere() {
        let det = DetectorParams::new(0.045, 1e-6, 0.3).unwrap();
        let d = secure_distance(0.5, &det, LOSS).unwrap();
        assert!(d.insecure_everywhere);
        assert_eq!(d.distance_km, 0.0);
    }

    #[test]
    fn optimum_near_half() {
        let det = DetectorParams::gys2004();
        let grid = coarse_grid();
        let opt = optimal_signal_intensity(&det, LOSS, &grid).unwrap();
        assert!((opt.mu_s - 0.5).abs() <= 0.05, "{opt:?}");
        for &mu in &grid {
            assert!(opt.distance_km >= gys_distance(mu).distance_km);
        }
    }

    #[test]
    fn single_point_grid() {
        let opt = optimal_signal_intensity(&DetectorParams::gys2004(), LOSS, &[0.3]).unwrap();
        assert_eq!(opt.mu_s, 0.3);
        assert_eq!(opt.distance_km, gys_distance(0.3).distance_km);
    }

    #[test]
    fn flat_objective_is_a_plateau() {
        let opt = optimal_signal_intensity(&DetectorParams::ideal(), LOSS, &[0.2, 0.4, 0.6]).unwrap();
        assert!(opt.plateau && opt.unbounded);
        assert_relative_eq!(opt.mu_s, 0.4, max_relative = 1e-12);
    }

    #[test]
    fn bad_grids_rejected() {
        let det = DetectorParams::gys2004();
        assert!(optimal_signal_intensity(&det, LOSS, &[]).is_err());
        assert!(optimal_signal_intensity(&det, LOSS, &[0.5, 0.3]).is_err());
    }

    #[test]
    fn brp_bound_values() {
        let det = DetectorParams::gys2004();
        let b = brp_intensity_bound(0.5, &ChannelParams::fiber(146.0).unwrap(), &det, 1e-3).unwrap();
        assert_relative_eq!(b.mu_b_min, 209_566.031_441_520_2, max_relative = 1e-9);

        let unit = DetectorParams::new(1.0, 0.0, 0.0).unwrap();
        let b = brp_intensity_bound(0.5, &ChannelParams::fiber(0.0).unwrap(), &unit, 1e-3).unwrap();
        assert_relative_eq!(b.mu_b_min, 8.100_902_459_542_082, max_relative = 1e-12);

        let b = brp_intensity_bound(0.01, &ChannelParams::fiber(50.0).unwrap(), &det, 1.0).unwrap();
        assert!(b.mu_b_min > 0.0);
        let b = brp_intensity_bound(0.5, &ChannelParams::fiber(50.0).unwrap(), &det, 10.0).unwrap();
        assert_eq!(b.mu_b_min, 0.0);
        assert_eq!(b.g_b0_at_bound, 1.0);
    }

    #[test]
    fn brp_bound_round_trip() {
        let det = DetectorParams::gys2004();
        for l in [0.0, 25.0, 80.0, 146.0, 200.0] {
            let ch = ChannelParams::fiber(l).unwrap();
            let b = brp_intensity_bound(0.5, &ch, &det, 1e-3).unwrap();
            let target = 1e-3 * poisson_pmf(1, 0.5).unwrap();
            assert_relative_eq!(b.g_b0_at_bound, target, max_relative = 1e-9);
        }
    }

    #[test]
    fn ideal_disturbance_bound() {
        let b = disturbance_bound(SignalSource::Ideal).unwrap();
        assert_relative_eq!(b.d, 0.146_446_609_406_726_2, max_relative = 1e-8);
    }

    #[test]
    fn weak_disturbance_bounds_ordered() {
        let at = |mu| disturbance_bound(SignalSource::Weak(mu)).unwrap().d;
        let ideal = disturbance_bound(SignalSource::Ideal).unwrap().d;
        let mus = [0.1, 0.3, 0.5, 0.8, 1.0];
        let bounds: Vec<f64> = mus.iter().map(|&m| at(m)).collect();
        for w in bounds.windows(2) {
            assert!(w[0] > w[1], "{bounds:?}");
        }
        assert!(bounds[0] <= ideal + 1e-6);
        // frozen from an independent arbitrary-precision bisection
        assert!((bounds[0] - 0.128_614_561_6).abs() < 1e-6);
    }

    #[test]
    fn bright_source_tolerates_almost_no_disturbance() {
        // margin at D = 0 is e^{-mu_s}
        let b = disturbance_bound(SignalSource::Weak(20.0)).unwrap();
        assert!(!b.insecure_at_zero);
        assert!(b.d > 0.0 && b.d < 1e-3);
        // e^{-40} is lost against 1 in double precision
        let b = disturbance_bound(SignalSource::Weak(40.0)).unwrap();
        assert!(b.insecure_at_zero);
        assert_eq!(b.d, 0.0);
    }

    #[test]
    fn sweep_matches_point_evaluation() {
        let det = DetectorParams::gys2004();
        let grid = SweepGrid {
            mu_s_values: vec![0.5],
            length_values_km: vec![100.0],
            det,
            loss_db_per_km: LOSS,
        };
        let rows = sweep(&grid).unwrap();
        assert_eq!(rows.len(), 1);
        let direct = evaluate_point(
            &SourceParams::new(0.5, 0.0).unwrap(),
            &ChannelParams::fiber(100.0).unwrap(),
            &det,
        )
        .unwrap();
        assert_eq!(rows[0].report, direct);
    }

    #[test]
    fn sweep_ordering_and_crossings() {
        let grid = SweepGrid {
            mu_s_values: (1..=10).map(|k| k as f64 / 10.0).collect(),
            length_values_km: (0..=200).map(f64::from).collect(),
            det: DetectorParams::gys2004(),
            loss_db_per_km: LOSS,
        };
        let rows = sweep(&grid).unwrap();
        assert_eq!(rows.len(), 10 * 201);
        for w in rows.windows(2) {
            assert!((w[0].mu_s, w[0].length_km) < (w[1].mu_s, w[1].length_km));
        }
        let last_secure = |mu: f64| {
            rows.iter()
                .filter(|r| (r.mu_s - mu).abs() < 1e-12 && r.report.secure)
                .map(|r| r.length_km)
                .fold(0.0, f64::max)
        };
        assert_eq!(last_secure(0.5), 146.0);
        assert!(last_secure(0.1) < 140.0 && last_secure(1.0) < 140.0);
    }

    #[test]
    fn empty_sweep_axis_rejected() {
        let grid = SweepGrid {
            mu_s_values: vec![0.5],
            length_values_km: vec![],
            det: DetectorParams::gys2004(),
            loss_db_per_km: LOSS,
        };
        assert!(sweep(&grid).is_err());
    }
}
