use brpqkd::link_budget::{afterpulse_error, crosstalk_false_click, propagate};
use brpqkd::montecarlo::{
    compare_with_model, simulate, simulate_attack, simulate_with_threads, Comparison, EveMode,
    EvePolicy, McConfig, McResult,
};
use brpqkd::optimizer::{
    brp_intensity_bound, information_curve, optimal_signal_intensity, sweep, SignalSource,
    SweepGrid,
};
use brpqkd::photon_stats::{brp_empty_prob, poisson_pmf};
use brpqkd::security::{evaluate_ideal_source, evaluate_point};
use brpqkd::ChannelParams;

use crate::config::ExperimentConfig;
use crate::format::{Cell, Table};
use crate::{Axis, CliError, Report, EXIT_INSECURE, EXIT_MC_FAILURE, EXIT_OK};

/// Smallest run mc-validate accepts.
pub const MIN_MC_PULSES: u64 = 10_000;
/// Largest |z| mc-validate tolerates.
pub const Z_LIMIT: f64 = 4.0;

pub fn cmd_evaluate(config: &ExperimentConfig, add_crosstalk: bool) -> Result<Report, CliError> {
    let mut det = config.detector()?;
    if add_crosstalk {
        let leak = propagate(&config.chain()?)?.switch_leak_at_signal_detector;
        det.y0 = (det.y0 + crosstalk_false_click(leak, det.eta_d)?).min(1.0);
    }
    let r = evaluate_point(&config.source()?, &config.channel()?, &det)?;
    let mut table = Table::new(vec![
        "mu_s",
        "length_km",
        "y_exp",
        "y_1",
        "d_bob",
        "d_eve",
        "i_ab",
        "i_ae_multi",
        "i_ae_single",
        "i_ae",
        "r_bob",
        "r_eve",
        "r_s",
        "secure",
        "d_bob_clamped",
        "d_eve_clamped",
    ]);
    table.single = true;
    table.push(vec![
        config.mu_s.into(),
        config.length_km.into(),
        r.y_exp.into(),
        r.y_1.into(),
        r.d_bob.into(),
        r.d_eve.into(),
        r.i_ab.into(),
        r.i_ae_multi.into(),
        r.i_ae_single.into(),
        r.i_ae.into(),
        r.r_bob.into(),
        r.r_eve.into(),
        r.r_s.into(),
        r.secure.into(),
        r.d_bob_clamped.into(),
        r.d_eve_clamped.into(),
    ]);
    Ok(Report {
        table,
        exit_code: if r.secure { EXIT_OK } else { EXIT_INSECURE },
    })
}

pub fn cmd_optimize(config: &ExperimentConfig) -> Result<Report, CliError> {
    let det = config.detector()?;
    let opt = optimal_signal_intensity(&det, config.loss_db_km, &config.mu_s_grid)?;
    let channel = ChannelParams::new(opt.distance_km, config.loss_db_km)?;
    let bound = brp_intensity_bound(opt.mu_s, &channel, &det, config.suppression_budget)?;
    let mut table = Table::new(vec![
        "mu_s_star",
        "max_distance_km",
        "unbounded",
        "plateau",
        "mu_b_min",
        "g_b0_at_bound",
        "suppression_budget",
    ]);
    table.single = true;
    table.push(vec![
        opt.mu_s.into(),
        opt.distance_km.into(),
        opt.unbounded.into(),
        opt.plateau.into(),
        bound.mu_b_min.into(),
        bound.g_b0_at_bound.into(),
        bound.suppression_budget.into(),
    ]);
    Ok(Report {
        table,
        exit_code: EXIT_OK,
    })
}

pub fn cmd_sweep(config: &ExperimentConfig, axis: Axis) -> Result<Report, CliError> {
    let table = match axis {
        Axis::Distance => distance_table(config)?,
        Axis::Disturbance => disturbance_table(config)?,
    };
    Ok(Report {
        table,
        exit_code: EXIT_OK,
    })
}

fn distance_table(config: &ExperimentConfig) -> Result<Table, CliError> {
    let det = config.detector()?;
    let rows = sweep(&SweepGrid {
        mu_s_values: config.mu_s_grid.clone(),
        length_values_km: config.length_grid.clone(),
        det,
        loss_db_per_km: config.loss_db_km,
    })?;
    let mut table = Table::new(vec!["mu_s", "L", "R_Bob", "R_Eve", "R_S"]);
    for row in rows {
        table.push(vec![
            row.mu_s.into(),
            row.length_km.into(),
            row.report.r_bob.into(),
            row.report.r_eve.into(),
            row.report.r_s.into(),
        ]);
    }
    for &l in &config.length_grid {
        let r = evaluate_ideal_source(&ChannelParams::new(l, config.loss_db_km)?, &det)?;
        table.push(vec![
            "ideal".into(),
            l.into(),
            r.r_bob.into(),
            r.r_eve.into(),
            r.r_s.into(),
        ]);
    }
    Ok(table)
}

fn disturbance_table(config: &ExperimentConfig) -> Result<Table, CliError> {
    let mut table = Table::new(vec!["mu_s", "D", "I_AB", "I_AE"]);
    let mut emit = |label: Cell, source: SignalSource| -> Result<(), CliError> {
        for p in information_curve(source, &config.d_grid)? {
            table.push(vec![label.clone(), p.d.into(), p.i_ab.into(), p.i_ae.into()]);
        }
        Ok(())
    };
    for &mu in &config.mu_s_grid {
        emit(mu.into(), SignalSource::Weak(mu))?;
    }
    emit("ideal".into(), SignalSource::Ideal)?;
    Ok(table)
}

fn run_mc(config: &McConfig, threads: Option<usize>) -> Result<McResult, CliError> {
    Ok(match (threads, config.eve.mode) {
        (Some(t), _) => simulate_with_threads(config, t)?,
        (None, EveMode::None) => simulate(config)?,
        (None, EveMode::Pns) => simulate_attack(config)?,
    })
}

pub fn cmd_mc_validate(config: &ExperimentConfig, threads: Option<usize>) -> Result<Report, CliError> {
    if config.n_pulses < MIN_MC_PULSES {
        return Err(CliError::Usage(format!(
            "n-pulses must be at least {MIN_MC_PULSES} (got {})",
            config.n_pulses
        )));
    }
    let mut mc = config.mc_config()?;
    let attack_policy = mc.eve;
    mc.eve = EvePolicy::none();
    let honest = run_mc(&mc, threads)?;
    let mut comparisons = compare_with_model(&mc, &honest)?;

    if attack_policy.mode == EveMode::Pns {
        let attacked_cfg = McConfig {
            eve: attack_policy,
            ..mc
        };
        let attacked = run_mc(&attacked_cfg, threads)?;
        let eta_total = mc.channel.transmittance() * mc.det.eta_d;
        let blocked_target = if mc.source.mu_s > 0.0 {
            poisson_pmf(1, mc.source.mu_s)? * attack_policy.suppress_fraction
        } else {
            0.0
        };
        let mut push = |name, estimate: brpqkd::montecarlo::Estimate, target: f64| {
            comparisons.push(Comparison {
                name,
                estimate,
                target,
                z: estimate.z_score(target),
            })
        };
        push(
            "attack_blocked_fraction",
            brpqkd::montecarlo::Estimate::from_counts(attacked.counts.blocked, attacked.counts.pulses),
            blocked_target,
        );
        push(
            "attack_brp_missing_rate",
            attacked.brp_missing_rate,
            brp_empty_prob(mc.source.mu_b, eta_total)?,
        );
        if attacked.counts.blocked_brp_click > 0 {
            push(
                "attack_interference_error_rate",
                attacked.interference_error_rate,
                0.5,
            );
        }
    }

    let mut table = Table::new(vec!["quantity", "estimate", "std_err", "trials", "target", "z"]);
    let mut all_ok = true;
    for c in &comparisons {
        all_ok &= c.z.abs() <= Z_LIMIT;
        table.push(vec![
            c.name.into(),
            c.estimate.value.into(),
            c.estimate.std_err.into(),
            c.estimate.trials.into(),
            c.target.into(),
            c.z.into(),
        ]);
    }
    Ok(Report {
        table,
        exit_code: if all_ok { EXIT_OK } else { EXIT_MC_FAILURE },
    })
}

pub fn cmd_budget(config: &ExperimentConfig) -> Result<Report, CliError> {
    let r = propagate(&config.chain()?)?;
    let mut table = Table::new(vec!["quantity", "input", "value"]);
    let rows: [(&str, f64); 8] = [
        ("transmittance", r.transmittance),
        ("brp_at_alice", r.brp_at_alice),
        ("signal_at_alice", r.signal_at_alice),
        ("dim_at_alice", r.dim_at_alice),
        ("brp_at_bob", r.brp_at_bob),
        ("signal_at_bob", r.signal_at_bob),
        ("dim_at_bob", r.dim_at_bob),
        ("switch_leak_at_signal_detector", r.switch_leak_at_signal_detector),
    ];
    for (name, value) in rows {
        table.push(vec![name.into(), Cell::Empty, value.into()]);
    }
    table.push(vec![
        "afterpulse_error".into(),
        config.afterpulse_prob.into(),
        afterpulse_error(config.afterpulse_prob)?.into(),
    ]);
    table.push(vec![
        "crosstalk_false_click".into(),
        r.switch_leak_at_signal_detector.into(),
        crosstalk_false_click(r.switch_leak_at_signal_detector, config.eta_d)?.into(),
    ]);
    Ok(Report {
        table,
        exit_code: EXIT_OK,
    })
}
