use thermal_entangle_core::measurement::{averaged_negativity, fidelity_psi_plus, parity_sectors, MomentumConditioner};
use thermal_entangle_core::protocol::{run_pipeline, Schedule};
use thermal_entangle_core::{Outcome, SystemParams, Weighting};

fn best_parity_negativity(kappa: f64, temp: f64) -> f64 {
    let p = SystemParams::new(kappa, 0.0, temp).unwrap();
    let mut best: f64 = 0.0;
    for i in 1..=60 {
        for o in [Outcome::G, Outcome::E] {
            let (_, w4) = run_pipeline(&p, Schedule::equal(0.05 * i as f64), o).unwrap();
            best = best.max(averaged_negativity(&parity_sectors(&w4).unwrap(), Weighting::Probability));
        }
    }
    best
}

/// Highest temperature at which the best averaged negativity exceeds
/// `threshold`, by bisection on `[lo, hi]`.
fn parity_frontier(kappa: f64, threshold: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.5);
    assert!(best_parity_negativity(kappa, hi) < threshold);
    for _ in 0..8 {
        let mid = 0.5 * (lo + hi);
        if best_parity_negativity(kappa, mid) > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[test]
fn momentum_reciprocation_has_no_temperature_limit_without_decoherence() {
    let p = SystemParams::new(0.0, 0.0, 2.0).unwrap();
    let best = [1.0, 2.0, 3.0]
        .iter()
        .map(|&t| {
            let (_, w4) = run_pipeline(&p, Schedule::equal(t), Outcome::E).unwrap();
            let (s, _) = MomentumConditioner::new(&w4).unwrap().state(0.0, 0.0).unwrap();
            fidelity_psi_plus(&s)
        })
        .fold(0.0, f64::max);
    assert!(best > 0.5, "{best}");
}

#[test]
fn parity_frontier_saturates_as_decoherence_vanishes() {
    let t_noisy = parity_frontier(0.007, 0.01);
    let t_half = parity_frontier(0.0035, 0.01);
    let t_ideal = parity_frontier(0.0, 0.01);
    assert!(t_noisy <= t_half + 1e-2 && t_half <= t_ideal + 1e-2);
    assert!(t_ideal - t_noisy < 0.05, "{t_noisy} {t_half} {t_ideal}");
    assert!(t_ideal < 1.0);
}
