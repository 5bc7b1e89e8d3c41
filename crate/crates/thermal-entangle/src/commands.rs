//! The `evolve`, `bell` and `reciprocate` commands. Each returns its tables;
//! writing them is the caller's business.

use rayon::prelude::*;
use thermal_entangle_core::evolution::{evolve_two_mode, function_table};
use thermal_entangle_core::measurement::{
    averaged_negativity, bell_value, fidelity_psi_plus, ideal_settings, negativity, parity_sectors,
    MomentumConditioner, ParityFunctionals, ParityOutcome,
};
use thermal_entangle_core::pauli_wigner::Projected;
use thermal_entangle_core::protocol::{conditioned_state, run_pipeline, Schedule};
use thermal_entangle_core::{BellOptions, BellSettings, Complex64 as C64, Error, Outcome, SystemParams, Weighting};

use crate::config::{Mode, RunConfig};
use crate::error::CliError;
use crate::table::Table;

/// A table and the suffix of the file it goes to (`None` for the main file).
pub type Output = (Option<&'static str>, Table);

const AXES_NOTE: &str = "rows span temperature and interaction time; both protocol stages last t";

pub fn bell_options(cfg: &RunConfig) -> BellOptions {
    BellOptions {
        starts: cfg.starts,
        seed: cfg.seed,
        ..Default::default()
    }
}

fn header(cfg: &RunConfig, command: &str) -> Vec<(String, String)> {
    let mut meta = vec![("command".to_string(), command.to_string())];
    meta.extend(cfg.echo());
    meta
}

/// `(P(g), P(e))` after the entangling stage.
fn outcome_probabilities(params: &SystemParams, t: f64) -> Result<(f64, f64), CliError> {
    let w = evolve_two_mode(params, t)?;
    let (_, pg) = w.project_qubit(Outcome::G, 0)?;
    Ok((pg, 1.0 - pg))
}

/// Unnormalised conditioned Wigner function `P(f) W_f` of the two modes.
fn projected_wigner(params: &SystemParams, t: f64, outcome: Outcome) -> Result<Option<thermal_entangle_core::GaussianSum>, CliError> {
    let w = evolve_two_mode(params, t)?;
    match w.project_qubit(outcome, 0) {
        Ok((Projected::Scalar(s), p)) => Ok(Some(s.scale(C64::new(p, 0.0)))),
        Ok(_) => Err(CliError::Output("unexpected projection shape".into())),
        Err(Error::ZeroProbability(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Outcome probabilities and `λ, μ, ν` over the time grid, plus a sibling
/// table of `P(f) W_f(x + ip, 0)` at `cfg.time` over the momentum grid.
pub fn evolve(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let params = cfg.params()?;
    let ts = cfg.t_grid.values();
    let entangling = params.with_kappa(params.entangling_kappa());
    let funcs = function_table(&entangling, &ts);
    let probs = ts
        .par_iter()
        .map(|&t| outcome_probabilities(&params, t))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&[
        "t", "p_g", "p_e", "lambda_re", "lambda_im", "mu_re", "mu_im", "nu_re", "nu_im",
    ])
    .with_meta(header(cfg, "evolve"));
    for ((t, l, m, n), (pg, pe)) in funcs.into_iter().zip(probs) {
        table.push(vec![t, pg, pe, l.re, l.im, m.re, m.im, n.re, n.im]);
    }

    let wg = projected_wigner(&params, cfg.time, Outcome::G)?;
    let we = projected_wigner(&params, cfg.time, Outcome::E)?;
    let ps = cfg.p_grid.values();
    let mut wig = Table::new(&["x", "p", "pw_g", "pw_e"]).with_meta(header(cfg, "evolve"));
    wig.note("sample", "P(f) W_f(x + ip, 0) at t = time");
    let eval = |w: &Option<thermal_entangle_core::GaussianSum>, a: C64| {
        w.as_ref().map_or(0.0, |w| w.evaluate(&[a, C64::new(0.0, 0.0)]).re)
    };
    let rows: Vec<Vec<f64>> = ps
        .par_iter()
        .flat_map_iter(|&x| {
            let (wg, we) = (&wg, &we);
            ps.iter().map(move |&p| {
                let a = C64::new(x, p);
                vec![x, p, eval(wg, a), eval(we, a)]
            })
        })
        .collect();
    rows.into_iter().for_each(|r| wig.push(r));
    Ok(vec![(None, table), (Some("wigner"), wig)])
}

fn settings_row(s: &BellSettings) -> [f64; 8] {
    s.to_params()
}

/// Ideal and decohered Bell values over the (T, t) grid. The decohered value
/// is a lower bound: the ideal-limit settings for the effective time are
/// frozen and evaluated on the decohered state.
pub fn bell(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let opts = bell_options(cfg);
    let points: Vec<(f64, f64)> = cfg
        .temp_grid
        .values()
        .into_iter()
        .flat_map(|temp| cfg.t_grid.values().into_iter().map(move |t| (temp, t)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(temp, t)| -> Result<Vec<f64>, CliError> {
            let params = cfg.params_at(temp)?;
            let ideal = match ideal_settings(temp, t, cfg.outcome, &opts) {
                Ok(s) => Some(s),
                Err(Error::ZeroProbability(_)) => None,
                Err(e) => return Err(e.into()),
            };
            let t_eff = params.with_kappa(params.entangling_kappa()).effective_time(t);
            let frozen = if (t_eff - t).abs() < 1e-15 {
                ideal
            } else {
                match ideal_settings(temp, t_eff, cfg.outcome, &opts) {
                    Ok(s) => Some(s),
                    Err(Error::ZeroProbability(_)) => None,
                    Err(e) => return Err(e.into()),
                }
            };
            let lower = match (&frozen, conditioned_state(&params, t, cfg.outcome)) {
                (Some(f), Ok(c)) => bell_value(&c.wigner, f),
                (_, Err(Error::ZeroProbability(_))) | (None, _) => f64::NAN,
                (_, Err(e)) => return Err(e.into()),
            };
            let b_ideal = ideal.map_or(f64::NAN, |s| s.value);
            let mut row = vec![temp, t, b_ideal, b_ideal.max(2.0), lower, lower.max(2.0)];
            row.extend(frozen.map_or([f64::NAN; 8], |s| settings_row(&s)));
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&[
        "temp",
        "t",
        "bell_ideal",
        "bell_ideal_clamped",
        "bell_lower",
        "bell_lower_clamped",
        "alpha_re",
        "alpha_im",
        "beta_re",
        "beta_im",
        "alpha_p_re",
        "alpha_p_im",
        "beta_p_re",
        "beta_p_im",
    ])
    .with_meta(header(cfg, "bell"));
    table.note("settings", "frozen ideal-limit settings at the effective time");
    rows.into_iter().for_each(|r| table.push(r));
    Ok(vec![(None, table)])
}

pub fn reciprocate(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    match cfg.mode {
        Mode::Momentum => reciprocate_momentum(cfg),
        Mode::Parity => reciprocate_parity(cfg),
    }
}

fn nan_on_zero<T>(r: Result<T, Error>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::ZeroProbability(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn momentum_point(mc: &MomentumConditioner, pa: f64, pb: f64) -> Result<[f64; 3], CliError> {
    let density = mc.density(pa, pb);
    Ok(match nan_on_zero(mc.state(pa, pb))? {
        Some((s, _)) => [density, fidelity_psi_plus(&s), negativity(&s)],
        None => [density, f64::NAN, f64::NAN],
    })
}

fn reciprocate_momentum(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let params = cfg.params()?;
    let schedule = Schedule {
        entangle: cfg.time,
        reciprocate: cfg.reciprocation_time(),
    };
    let (conditioned, w4) = run_pipeline(&params, schedule, cfg.outcome)?;
    let mc = MomentumConditioner::new(&w4)?;
    let ps = cfg.p_grid.values();
    let rows = ps
        .par_iter()
        .flat_map_iter(|&pa| ps.iter().map(move |&pb| (pa, pb)))
        .map(|(pa, pb)| momentum_point(&mc, pa, pb).map(|v| vec![pa, pb, v[0], v[1], v[2]]))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["p_a", "p_b", "density", "fidelity", "negativity"]).with_meta(header(cfg, "reciprocate"));
    let half = cfg.p_grid.start.abs().max(cfg.p_grid.stop.abs());
    let peak = mc.central_peak(half, 241);
    let origin = momentum_point(&mc, 0.0, 0.0)?;
    table.note("outcome_probability", conditioned.probability);
    table.note("fidelity_origin", origin[1]);
    table.note("negativity_origin", origin[2]);
    table.note("central_peak_p_a", format!("{}..{}", peak.a_bounds.0, peak.a_bounds.1));
    table.note("central_peak_p_b", format!("{}..{}", peak.b_bounds.0, peak.b_bounds.1));
    table.note("central_peak_mass", peak.mass);
    rows.into_iter().for_each(|r| table.push(r));
    let mut out = vec![(None, table)];

    if cfg.sweep {
        let grid = sweep(cfg, 4, |params, t| {
            let (c, w4) = run_pipeline(params, Schedule::equal(t), cfg.outcome)?;
            let mc = MomentumConditioner::new(&w4)?;
            let v = momentum_point(&mc, 0.0, 0.0)?;
            Ok(vec![c.probability, v[0], v[1], v[2]])
        })?;
        let mut t = Table::new(&["temp", "t", "outcome_probability", "density_origin", "fidelity_origin", "negativity_origin"])
            .with_meta(header(cfg, "reciprocate"));
        t.note("axes", AXES_NOTE);
        grid.into_iter().for_each(|r| t.push(r));
        out.push((Some("grid"), t));
    }
    Ok(out)
}

fn reciprocate_parity(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let params = cfg.params()?;
    let schedule = Schedule {
        entangle: cfg.time,
        reciprocate: cfg.reciprocation_time(),
    };
    let (conditioned, w4) = run_pipeline(&params, schedule, cfg.outcome)?;
    let sectors = parity_sectors(&w4)?;
    let mut table = Table::new(&["pi_a", "pi_b", "probability", "negativity", "fidelity"]).with_meta(header(cfg, "reciprocate"));
    table.note("outcome_probability", conditioned.probability);
    table.note(
        "averaged_negativity_probability",
        averaged_negativity(&sectors, Weighting::Probability),
    );
    table.note("averaged_negativity_uniform", averaged_negativity(&sectors, Weighting::Uniform));
    for (o, s, p) in &sectors {
        let (n, f) = s.as_ref().map_or((f64::NAN, f64::NAN), |s| (negativity(s), fidelity_psi_plus(s)));
        table.push(vec![o.pi_a as f64, o.pi_b as f64, *p, n, f]);
    }
    let mut out = vec![(None, table)];

    if cfg.sweep {
        let grid = sweep(cfg, 10, |params, t| {
            let (c, w4) = run_pipeline(params, Schedule::equal(t), cfg.outcome)?;
            let pf = ParityFunctionals::new(&w4)?;
            let sectors = parity_sectors(&w4)?;
            let mut row = vec![c.probability, averaged_negativity(&sectors, cfg.weighting)];
            row.extend(ParityOutcome::ALL.iter().map(|&o| pf.probability(o)));
            row.extend(sectors.iter().map(|(_, s, _)| s.as_ref().map_or(f64::NAN, negativity)));
            Ok(row)
        })?;
        let mut t = Table::new(&[
            "temp",
            "t",
            "outcome_probability",
            "averaged_negativity",
            "p_pp",
            "p_pm",
            "p_mp",
            "p_mm",
            "n_pp",
            "n_pm",
            "n_mp",
            "n_mm",
        ])
        .with_meta(header(cfg, "reciprocate"));
        t.note("axes", AXES_NOTE);
        grid.into_iter().for_each(|r| t.push(r));
        out.push((Some("grid"), t));
    }
    Ok(out)
}

/// Evaluates `f` over the (T, t) grid in parallel, rows ordered by grid
/// index. Points with an impossible outcome yield NaN.
fn sweep(
    cfg: &RunConfig,
    width: usize,
    f: impl Fn(&SystemParams, f64) -> Result<Vec<f64>, CliError> + Sync,
) -> Result<Vec<Vec<f64>>, CliError> {
    let points: Vec<(f64, f64)> = cfg
        .temp_grid
        .values()
        .into_iter()
        .flat_map(|temp| cfg.t_grid.values().into_iter().map(move |t| (temp, t)))
        .collect();
    let results = points
        .par_iter()
        .map(|&(temp, t)| {
            let params = cfg.params_at(temp)?;
            match f(&params, t) {
                Ok(v) => Ok(Some(v)),
                Err(CliError::Numerical(Error::ZeroProbability(_))) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(points
        .into_iter()
        .zip(results)
        .map(|((temp, t), v)| {
            let mut row = vec![temp, t];
            row.extend(v.unwrap_or_else(|| vec![f64::NAN; width]));
            row
        })
        .collect())
}
