//! Quick invariant battery behind the `validate` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{trial_channels, ExperimentConfig};
use crate::channel::arv_farfield;
use crate::fresnel::fresnel;
use crate::geometry::{apertures, ArrayConfig, UserPosition};
use crate::interference::{
    common_angle_min_distance, inter_module_ff_closed_form, intra_module_correlation, iui_normalized,
};
use crate::linalg::{dot, invert, C64};
use crate::precoding::{waterfilling, GramInverseState};
use crate::schedulers::Scheduler;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// Runs every check; never fails early.
pub fn validate_invariants(seed: u64) -> Vec<Check> {
    let cfg = ArrayConfig::new(32, 4, 13.0, 15e9).expect("default array");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let dist = common_angle_min_distance(&cfg);
    out.push(check("common-angle distance", (dist - 22.3734).abs() < 1e-3, format!("{dist:.4} m")));
    let ap = apertures(&cfg).total;
    out.push(check("total aperture", (ap - 4.0572).abs() < 5e-4, format!("{ap:.4} m")));

    let f50 = fresnel(50.0).norm();
    out.push(check(
        "fresnel limits",
        fresnel(0.0) == C64::new(0.0, 0.0) && (f50 - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01,
        format!("|F(50)| = {f50:.4}"),
    ));

    // far-field factorisation
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let tj = rng.random_range(-1.2..1.2);
        let tk = rng.random_range(-1.2..1.2);
        let uj = UserPosition::new(1e6, tj).expect("valid");
        let uk = UserPosition::new(1e6, tk).expect("valid");
        let exact = iui_normalized(&arv_farfield(&cfg, &uj), &arv_farfield(&cfg, &uk)).expect("equal lengths");
        let product = inter_module_ff_closed_form(&cfg, tj, tk) * intra_module_correlation(&cfg, tj, tk);
        worst = worst.max((exact - product).abs());
    }
    out.push(check("far-field factorisation", worst <= 1e-12, format!("max error {worst:e}")));

    // incremental Gram inverse against direct inversion
    let mut state = GramInverseState::new();
    let mut worst = 0.0f64;
    for id in 0..16 {
        let h: Vec<C64> = (0..128)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        state.update(&h, id).expect("equal lengths");
        let s = state.len();
        let rows = state.channels();
        let gram: Vec<C64> = (0..s * s).map(|ij| dot(&rows[ij / s], &rows[ij % s])).collect();
        match invert(&gram, s) {
            Some(direct) => {
                let num: f64 = direct.iter().zip(state.inverse()).map(|(a, b)| (a - b).norm_sqr()).sum();
                let den: f64 = direct.iter().map(|a| a.norm_sqr()).sum();
                worst = worst.max((num / den).sqrt());
            }
            None => worst = f64::INFINITY,
        }
    }
    out.push(check("gram inverse oracle", worst <= 1e-8, format!("max rel. error {worst:e}")));

    // waterfilling KKT
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let gains: Vec<f64> = (0..rng.random_range(1..16)).map(|_| rng.random_range(1e-3..1e3)).collect();
        let p_tx = rng.random_range(0.1..100.0);
        let p = waterfilling(&gains, p_tx).expect("valid gains");
        let level = gains.iter().zip(&p).find(|(_, &x)| x > 0.0).map(|(g, x)| x + 1.0 / g).unwrap_or(0.0);
        let mut err = (p.iter().sum::<f64>() - p_tx).abs();
        for (g, x) in gains.iter().zip(&p) {
            if *x > 0.0 {
                err = err.max((x + 1.0 / g - level).abs());
            }
        }
        worst = worst.max(err);
    }
    out.push(check("waterfilling KKT", worst <= 1e-9, format!("max residual {worst:e}")));

    // ZF orthogonality after each scheduler
    let mut exp = ExperimentConfig::default();
    exp.scenario.num_users = 60;
    let channels = trial_channels(&exp, seed).expect("default scenario");
    for s in Scheduler::ALL {
        let detail;
        let passed = match s.run(&channels, &exp.scheduler_cfg, &mut rng, exp.transmit_power(25.0), 1.0) {
            Ok(o) => {
                let mut leak = 0.0f64;
                let mut norm_err = 0.0f64;
                for (k, p) in o.result.precoders.iter().enumerate() {
                    norm_err = norm_err.max((dot(p, p).re.sqrt() - 1.0).abs());
                    for (i, &u) in o.result.selected.iter().enumerate() {
                        if i != k {
                            let h = channels[u].as_slice();
                            leak = leak.max(dot(h, p).norm() / dot(h, h).re.sqrt());
                        }
                    }
                }
                detail = format!("{s}: {} users, leak {leak:e}", o.result.selected.len());
                leak <= 1e-9 && norm_err <= 1e-10
            }
            Err(e) => {
                detail = format!("{s}: {e}");
                false
            }
        };
        out.push(check("zero-forcing orthogonality", passed, detail));
    }
    out
}
