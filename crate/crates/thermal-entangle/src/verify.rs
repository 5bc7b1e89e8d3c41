//! Oracle comparison suite behind the `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thermal_entangle_core::evolution::{evolve_generic, evolve_single, thermal_normal_modes};
use thermal_entangle_core::fock::{self, suggested_cutoff, unitary_evolve, Coupling, FockDensityMatrix, FockSpace, Lindbladian};
use thermal_entangle_core::measurement::{critical_temperature, critical_temperature_closed_form, ParityFunctionals, ParityOutcome};
use thermal_entangle_core::protocol::{run_pipeline, Schedule};
use thermal_entangle_core::{Complex64 as C64, Outcome, SystemParams, WignerMatrix};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check: String,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn from_result(name: &str, tolerance: f64, r: Result<(f64, String), thermal_entangle_core::Error>) -> Self {
        match r {
            Ok((dev, detail)) => Self {
                check: name.into(),
                passed: dev.is_finite() && dev < tolerance,
                max_deviation: dev,
                tolerance,
                detail,
            },
            Err(e) => Self {
                check: name.into(),
                passed: false,
                max_deviation: f64::NAN,
                tolerance,
                detail: e.to_string(),
            },
        }
    }
}

fn random_points(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| C64::new(rng.random_range(-2.5..2.5), rng.random_range(-3.5..3.5)))
        .collect()
}

/// Largest entry-wise gap between analytic and Fock Wigner matrices.
pub fn wigner_gap(w: &WignerMatrix, rho: &FockDensityMatrix, points: &[Vec<C64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for p in points {
        let a = w.matrix_at(p);
        let b = rho.wigner(p);
        for (i, row) in a.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                worst = worst.max((v - b[(i, j)]).norm());
            }
        }
    }
    worst
}

fn params(cfg: &RunConfig) -> thermal_entangle_core::Result<SystemParams> {
    Ok(SystemParams::new(cfg.kappa, cfg.gamma, cfg.temp)?
        .with_interaction(cfg.interaction)
        .with_lambda_scale(cfg.lambda_scale))
}

fn cutoff(cfg: &RunConfig, temp: f64, t: f64) -> usize {
    if cfg.cutoff > 0 {
        cfg.cutoff
    } else {
        suggested_cutoff(temp, t)
    }
}

fn single_points(cfg: &RunConfig, n: usize) -> Vec<Vec<C64>> {
    random_points(n, cfg.seed).into_iter().map(|p| vec![p]).collect()
}

fn unitary_limit(cfg: &RunConfig) -> Check {
    let r = (|| {
        let p = SystemParams::ideal(cfg.temp)?.with_lambda_scale(cfg.lambda_scale);
        let pts = single_points(cfg, 20);
        let n = cutoff(cfg, cfg.temp, 2.0);
        let rho0 = FockDensityMatrix::thermal(FockSpace::new(1, 1, n), cfg.temp);
        let mut worst: f64 = 0.0;
        for t in [0.5, 1.0, 2.0] {
            let rho = unitary_evolve(&rho0, &[Coupling { qubit: 0, mode: 0 }], t)?;
            worst = worst.max(wigner_gap(&evolve_single(&p, t)?, &rho, &pts));
        }
        Ok((worst, format!("T={} t=0.5,1,2 cutoff={n}", cfg.temp)))
    })();
    Check::from_result("unitary_limit", 1e-6, r)
}

fn master_equation(cfg: &RunConfig) -> Check {
    let r = (|| {
        let p = params(cfg)?;
        let pts = single_points(cfg, 20);
        let n = cutoff(cfg, cfg.temp, cfg.time);
        let s = FockSpace::new(1, 1, n);
        let l = Lindbladian::new(s, &p, &[Coupling { qubit: 0, mode: 0 }]);
        let rho = l.integrate(&FockDensityMatrix::thermal(s, cfg.temp), cfg.time, cfg.dt)?;
        let trace = (rho.trace() - 1.0).abs();
        let gap = wigner_gap(&evolve_single(&p, cfg.time)?, &rho, &pts);
        Ok((gap, format!("t={} cutoff={n} dt={} trace error {trace:e}", cfg.time, cfg.dt)))
    })();
    Check::from_result("master_equation", 1e-4, r)
}

fn kernel_consistency(cfg: &RunConfig) -> Check {
    let r = (|| {
        let p = params(cfg)?;
        let init = thermal_normal_modes(&p, 0.0);
        let via = evolve_generic(&init, &p, cfg.time)?;
        let closed = thermal_normal_modes(&p, cfg.time);
        let mut worst: f64 = 0.0;
        for pt in random_points(20, cfg.seed ^ 1) {
            let (a, b) = (via.evaluate(&[pt]), closed.evaluate(&[pt]));
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).norm());
            }
        }
        Ok((worst, format!("t={}", cfg.time)))
    })();
    Check::from_result("kernel_consistency", 1e-10, r)
}

fn completeness(cfg: &RunConfig) -> Check {
    let r = (|| {
        let p = params(cfg)?;
        let schedule = Schedule {
            entangle: cfg.time,
            reciprocate: cfg.reciprocation_time(),
        };
        let mut worst: f64 = 0.0;
        let mut total = 0.0;
        for outcome in [Outcome::G, Outcome::E] {
            let (c, w4) = run_pipeline(&p, schedule, outcome)?;
            total += c.probability;
            let pf = ParityFunctionals::new(&w4)?;
            let s: f64 = ParityOutcome::ALL.iter().map(|&o| pf.probability(o)).sum();
            worst = worst.max((s - 1.0).abs());
        }
        worst = worst.max((total - 1.0).abs());
        Ok((worst, "qubit outcomes and parity sectors".into()))
    })();
    Check::from_result("probability_completeness", 1e-9, r)
}

fn critical(_: &RunConfig) -> Check {
    let tc = critical_temperature();
    let closed = critical_temperature_closed_form();
    Check {
        check: "critical_temperature".into(),
        passed: (tc - closed).abs() < 1e-6 && (tc - 0.408).abs() < 1e-3,
        max_deviation: (tc - closed).abs(),
        tolerance: 1e-6,
        detail: format!("T_c = {tc:.6}"),
    }
}

/// Full protocol against the Fock pipeline at a small, cheap setting.
fn pipeline(cfg: &RunConfig) -> Check {
    let r = (|| {
        let p = SystemParams::new(cfg.kappa, cfg.gamma, 0.2)?.with_lambda_scale(cfg.lambda_scale);
        let schedule = Schedule {
            entangle: 0.25,
            reciprocate: 0.3,
        };
        let (_, prob, rho) = fock::pipeline(&p, 10, schedule.entangle, schedule.reciprocate, cfg.outcome, 2e-3)?;
        let (c, w4) = run_pipeline(&p, schedule, cfg.outcome)?;
        let pf = ParityFunctionals::new(&w4)?;
        let mut worst = (prob - c.probability).abs();
        for o in ParityOutcome::ALL {
            worst = worst.max((pf.probability(o) - rho.parity_project(&[o.pi_a, o.pi_b]).trace().re).abs());
        }
        let pts: Vec<Vec<C64>> = random_points(6, cfg.seed ^ 2).chunks(2).map(|c| c.to_vec()).collect();
        worst = worst.max(wigner_gap(&w4, &rho, &pts));
        Ok((worst, "T=0.2 t1=0.25 t2=0.3 cutoff=10".into()))
    })();
    Check::from_result("pipeline_parity", 1e-6, r)
}

pub fn run(cfg: &RunConfig) -> Vec<Check> {
    let checks: [fn(&RunConfig) -> Check; 6] = [unitary_limit, master_equation, kernel_consistency, completeness, critical, pipeline];
    use rayon::prelude::*;
    checks.par_iter().map(|c| c(cfg)).collect()
}

pub fn write(checks: &[Check], cfg: &RunConfig, w: impl std::io::Write) -> Result<(), CliError> {
    match cfg.format {
        crate::config::Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                config: serde_json::Map<String, serde_json::Value>,
                checks: &'a [Check],
            }
            let config = cfg
                .echo()
                .into_iter()
                .map(|(k, v)| (k, serde_json::Value::String(v)))
                .collect();
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, &Report { config, checks })?;
            writeln!(w)?;
        }
        crate::config::Format::Csv => {
            let mut w = w;
            for (k, v) in cfg.echo() {
                writeln!(w, "# {k}={v}")?;
            }
            let mut csv = csv::Writer::from_writer(w);
            for c in checks {
                csv.serialize(c)?;
            }
            csv.flush()?;
        }
    }
    Ok(())
}
