//! Inter-user interference: exact ARV correlations, the inter-/intra-module
//! split, Fresnel-integral approximations of the inter-module factor and the
//! common-angle distance bound.

use std::f64::consts::PI;

use crate::channel::{self, Arv};
use crate::error::{Error, Result};
use crate::fresnel::fresnel;
use crate::geometry::{self, ArrayConfig, UserPosition};
use crate::linalg::{dot, C64};

/// Below this |a| the Fresnel approximation is reported as inapplicable.
pub const A_FLOOR: f64 = 1e-6;

/// Dirichlet-kernel ratios switch to their series limit below this |sin ψ|.
const SINGULARITY_EPS: f64 = 1e-10;

/// Half-width of the intra-module sin-offset keeping the Dirichlet gain at ~0.95.
const COMMON_ANGLE_OFFSET: f64 = 0.18;

/// `I(j, k) = |a_j^H a_k| / (MN)`.
pub fn iui_normalized(a_j: &Arv, a_k: &Arv) -> Result<f64> {
    if a_j.len() != a_k.len() {
        return Err(Error::Domain(format!(
            "ARV length mismatch: {} vs {}",
            a_j.len(),
            a_k.len()
        )));
    }
    if a_j.is_empty() {
        return Err(Error::Domain("empty ARV".into()));
    }
    Ok(dot(a_j.as_slice(), a_k.as_slice()).norm() / a_j.len() as f64)
}

/// Exact inter-module factor `(1/N)|Σ_n exp(j2π(r_{k,n} - r_{j,n})/λ)|`.
pub fn inter_module_correlation(cfg: &ArrayConfig, user_j: &UserPosition, user_k: &UserPosition) -> f64 {
    let k = 2.0 * PI / cfg.wavelength();
    let pitch = cfg.module_pitch();
    let sum: C64 = cfg
        .module_indices()
        .map(|n| {
            let delta = geometry::axis_distance(user_k, n * pitch) - geometry::axis_distance(user_j, n * pitch);
            let (s, c) = (k * delta).sin_cos();
            C64::new(c, s)
        })
        .sum();
    sum.norm() / cfg.n_modules() as f64
}

/// `|sin(count·ψ) / (count·sin ψ)|`, continuous through the removable
/// singularities at `ψ = kπ`.
pub fn dirichlet(count: usize, psi: f64) -> f64 {
    let n = count as f64;
    let s = psi.sin();
    if s.abs() < SINGULARITY_EPS {
        let delta = psi - (psi / PI).round() * PI;
        return (1.0 - (n * n - 1.0) * delta * delta / 6.0).abs();
    }
    ((n * psi).sin() / (n * s)).abs()
}

/// Intra-module factor `(1/M)|b^H(θ_j) b(θ_k)|` in closed form.
pub fn intra_module_correlation(cfg: &ArrayConfig, theta_j: f64, theta_k: f64) -> f64 {
    let psi = PI * cfg.element_spacing() / cfg.wavelength() * (theta_k.sin() - theta_j.sin());
    dirichlet(cfg.antennas_per_module(), psi)
}

/// Far-field inter-module factor. With `d = λ/2` this is
/// `|sin(πNSΔ/2) / (N sin(πSΔ/2))|`, `Δ = sin θ_k - sin θ_j`.
pub fn inter_module_ff_closed_form(cfg: &ArrayConfig, theta_j: f64, theta_k: f64) -> f64 {
    let psi = PI * cfg.module_pitch() / cfg.wavelength() * (theta_k.sin() - theta_j.sin());
    dirichlet(cfg.n_modules(), psi)
}

/// Parameters of the Fresnel approximation of the inter-module factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelParams {
    /// Quadratic coefficient, `a > 0`.
    pub a: f64,
    /// Linear coefficient.
    pub b: f64,
    pub t_minus: f64,
    pub t_plus: f64,
}

impl FresnelParams {
    /// Builds the integration limits `t± = ±sqrt(a/2) + b/sqrt(2a)`.
    ///
    /// A negative `a` is folded to `|a|` with `b → -b` (the conjugate
    /// integral has the same magnitude).
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.abs() >= A_FLOOR) {
            return Err(Error::Degenerate(a.abs()));
        }
        let (a, b) = if a < 0.0 { (-a, -b) } else { (a, b) };
        let centre = b / (2.0 * a).sqrt();
        let half = (a / 2.0).sqrt();
        Ok(FresnelParams {
            a,
            b,
            t_minus: centre - half,
            t_plus: centre + half,
        })
    }
}

fn aperture_scale(cfg: &ArrayConfig) -> (f64, f64) {
    let nsd = cfg.n_modules() as f64 * cfg.module_pitch();
    let lambda = cfg.wavelength();
    (nsd * nsd / lambda, 2.0 * nsd / lambda)
}

/// Both users in the near field of the whole array.
pub fn fresnel_params_nf_nf(cfg: &ArrayConfig, user_j: &UserPosition, user_k: &UserPosition) -> Result<FresnelParams> {
    let (qa, qb) = aperture_scale(cfg);
    let curv = |u: &UserPosition| u.theta.cos().powi(2) / u.r;
    let a = qa * (curv(user_k) - curv(user_j));
    let b = -qb * (user_k.theta.sin() - user_j.theta.sin());
    FresnelParams::new(a, b)
}

/// User `k` in the near field, the other user at angle `theta_j` in the far field.
pub fn fresnel_params_nf_ff(cfg: &ArrayConfig, user_k_nf: &UserPosition, theta_j: f64) -> Result<FresnelParams> {
    let (qa, qb) = aperture_scale(cfg);
    let a = qa * user_k_nf.theta.cos().powi(2) / user_k_nf.r;
    let b = -qb * (user_k_nf.theta.sin() - theta_j.sin());
    FresnelParams::new(a, b)
}

/// `|F(t+) - F(t-)| / sqrt(2a)`; the `1/N` normalisation is already folded
/// into `a` and `b`.
pub fn inter_module_fresnel_approx(p: &FresnelParams) -> Result<f64> {
    if !(p.a >= A_FLOOR) {
        return Err(Error::Degenerate(p.a));
    }
    Ok((fresnel(p.t_plus) - fresnel(p.t_minus)).norm() / (2.0 * p.a).sqrt())
}

/// Fresnel approximation adapted to an `N`-module sampled aperture.
///
/// The module sum is periodic in `b` with period `2N` (grating lobes), so
/// `b` is first folded into `[-N, N]`. The continuous integral is then
/// rescaled by `ψ / sin ψ`, `ψ = πb/(2N)`, which maps a sinc onto the
/// Dirichlet kernel of the sampled sum.
pub fn inter_module_fresnel_approx_sampled(p: &FresnelParams, n_modules: usize) -> Result<f64> {
    if n_modules == 0 {
        return Err(Error::Domain("no modules".into()));
    }
    let period = 2.0 * n_modules as f64;
    let folded = p.b - period * (p.b / period).round();
    let base = inter_module_fresnel_approx(&FresnelParams::new(p.a, folded)?)?;
    let psi = PI * folded / period;
    let correction = if psi.abs() < SINGULARITY_EPS { 1.0 } else { psi / psi.sin() };
    Ok(base * correction)
}

/// Distance beyond which every module sees the user under (nearly) the
/// array's angle: `(N-1)Sd / (2ε)` with `ε = 0.36/M`.
pub fn common_angle_min_distance(cfg: &ArrayConfig) -> f64 {
    let eps = 2.0 * COMMON_ANGLE_OFFSET / cfg.antennas_per_module() as f64;
    (cfg.n_modules() as f64 - 1.0) * cfg.module_pitch() / (2.0 * eps)
}

/// Rigorous bound `(1/MN) Σ_n |b^H(θ_{j,n}) b(θ_{k,n})|` on `I(j,k)` (triangle inequality).
pub fn iui_triangle_bound(cfg: &ArrayConfig, user_j: &UserPosition, user_k: &UserPosition) -> Result<f64> {
    let mut acc = 0.0;
    for n in cfg.module_indices() {
        let tj = geometry::module_angle_unchecked(cfg, user_j, n)?;
        let tk = geometry::module_angle_unchecked(cfg, user_k, n)?;
        acc += intra_module_correlation(cfg, tj, tk);
    }
    Ok(acc / cfg.n_modules() as f64)
}

/// Decoupled approximation: inter-module factor times the module-averaged
/// intra-module factor. Tight once both users are past
/// [`common_angle_min_distance`]; not an upper bound in general.
pub fn iui_decoupled(cfg: &ArrayConfig, user_j: &UserPosition, user_k: &UserPosition) -> Result<f64> {
    Ok(inter_module_correlation(cfg, user_j, user_k) * iui_triangle_bound(cfg, user_j, user_k)?)
}

/// Noise and gain terms of the MRT rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrtParams {
    pub noise_power: f64,
    pub reference_gain: f64,
    /// Returned when the SINR is unbounded (no interference, no noise).
    pub rate_cap: f64,
}

impl Default for MrtParams {
    fn default() -> Self {
        MrtParams {
            noise_power: 1.0,
            reference_gain: 1.0,
            rate_cap: 100.0,
        }
    }
}

/// Rate of user `k` when all users are served by equal-power MRT:
/// `log2(1 + I(k,k)² / (Σ_{i≠k} I(i,k)² + σ² r_k⁴/β₀²))`, phase-only ARVs.
pub fn mrt_rate(cfg: &ArrayConfig, users: &[UserPosition], k: usize, params: &MrtParams) -> Result<f64> {
    let target = users
        .get(k)
        .ok_or_else(|| Error::Domain(format!("user index {k} out of range ({} users)", users.len())))?;
    let arvs: Vec<Arv> = users.iter().map(|u| channel::arv_phase_only(cfg, u)).collect();
    let signal = iui_normalized(&arvs[k], &arvs[k])?.powi(2);
    let mut denom = params.noise_power * target.r.powi(4) / params.reference_gain.powi(2);
    for (i, a) in arvs.iter().enumerate() {
        if i != k {
            denom += iui_normalized(a, &arvs[k])?.powi(2);
        }
    }
    if denom <= 0.0 {
        return Ok(params.rate_cap);
    }
    Ok((1.0 + signal / denom).log2().min(params.rate_cap))
}

/// One point of an angular interference sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub theta: f64,
    /// Spherical-wave (phase-only) interference.
    pub iui_sw: f64,
    /// Plane-wave reference, `None` when not requested.
    pub iui_pw: Option<f64>,
}

/// Interference between a user at `(r, 0)` and a user at `(r, θ)` over a grid of `θ`.
pub fn interference_sweep(cfg: &ArrayConfig, r: f64, theta_grid: &[f64], include_pw: bool) -> Result<Vec<SweepPoint>> {
    let anchor = UserPosition::new(r, 0.0)?;
    let anchor_sw = channel::arv_phase_only(cfg, &anchor);
    let anchor_pw = channel::arv_farfield(cfg, &anchor);
    theta_grid
        .iter()
        .map(|&theta| {
            let u = UserPosition::new(r, theta)?;
            let iui_sw = iui_normalized(&anchor_sw, &channel::arv_phase_only(cfg, &u))?;
            let iui_pw = if include_pw {
                Some(iui_normalized(&anchor_pw, &channel::arv_farfield(cfg, &u))?)
            } else {
                None
            };
            Ok(SweepPoint { theta, iui_sw, iui_pw })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{arv_farfield, arv_phase_only, b_steering, q_nearfield};

    fn default_cfg() -> ArrayConfig {
        ArrayConfig::new(32, 4, 13.0, 15e9).unwrap()
    }

    fn user(r: f64, deg: f64) -> UserPosition {
        UserPosition::new(r, deg.to_radians()).unwrap()
    }

    #[test]
    fn iui_self_and_orthogonal() {
        let cfg = default_cfg();
        let a = arv_phase_only(&cfg, &user(20.0, 10.0));
        assert!((iui_normalized(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let e0 = Arv(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let e1 = Arv(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert_eq!(iui_normalized(&e0, &e1).unwrap(), 0.0);
        assert!(matches!(iui_normalized(&e0, &a), Err(Error::Domain(_))));
    }

    #[test]
    fn iui_matches_elementwise_sum() {
        let cfg = default_cfg();
        let a = arv_phase_only(&cfg, &user(18.0, 25.0));
        let b = arv_phase_only(&cfg, &user(33.0, -12.0));
        let mut re = 0.0;
        let mut im = 0.0;
        for (x, y) in a.0.iter().zip(&b.0) {
            let p = x.conj() * y;
            re += p.re;
            im += p.im;
        }
        let want = re.hypot(im) / 128.0;
        assert!((iui_normalized(&a, &b).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn inter_module_examples() {
        let cfg = default_cfg();
        let u = user(25.0, 5.0);
        assert!((inter_module_correlation(&cfg, &u, &u) - 1.0).abs() < 1e-12);
        let single = ArrayConfig::new(1, 8, 1.0, 15e9).unwrap();
        assert!((inter_module_correlation(&single, &u, &user(40.0, -30.0)) - 1.0).abs() < 1e-12);

        let (j, k) = (user(14.0, 20.0), user(30.0, -7.0));
        let want = dot(&q_nearfield(&cfg, &j), &q_nearfield(&cfg, &k)).norm() / 32.0;
        assert!((inter_module_correlation(&cfg, &j, &k) - want).abs() < 1e-12);
    }

    #[test]
    fn intra_module_examples() {
        let cfg = default_cfg();
        assert!((intra_module_correlation(&cfg, 0.3, 0.3) - 1.0).abs() < 1e-15);
        let single = ArrayConfig::new(8, 1, 3.0, 15e9).unwrap();
        assert!((intra_module_correlation(&single, 0.1, 1.0) - 1.0).abs() < 1e-12);
        // first null: sin θ_k − sin θ_j = 1/2
        let tk = (0.5f64).asin();
        assert!(intra_module_correlation(&cfg, 0.0, tk) < 1e-12);
        // closed form agrees with the steering vectors
        let (tj, tk) = (0.2, -0.45);
        let want = dot(&b_steering(&cfg, tj), &b_steering(&cfg, tk)).norm() / 4.0;
        assert!((intra_module_correlation(&cfg, tj, tk) - want).abs() < 1e-13);
    }

    #[test]
    fn ff_closed_form_examples() {
        let cfg = default_cfg();
        assert!((inter_module_ff_closed_form(&cfg, 0.4, 0.4) - 1.0).abs() < 1e-15);
        let null = (2.0f64 / (32.0 * 13.0)).asin();
        assert!(inter_module_ff_closed_form(&cfg, 0.0, null) < 1e-12);
        // grating lobe
        let lobe = (2.0 / 13.0f64).asin();
        assert!((inter_module_ff_closed_form(&cfg, 0.0, lobe) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_is_continuous_across_singularities() {
        for count in [4usize, 32] {
            for k in [0.0, 1.0, 3.0] {
                let at = dirichlet(count, k * PI);
                assert!((at - 1.0).abs() < 1e-12);
                for h in [1e-11, 1e-9, 1e-7, 1e-5] {
                    for s in [-1.0, 1.0] {
                        let near = dirichlet(count, k * PI + s * h);
                        assert!((near - at).abs() < 1e-3 * h / 1e-5 + 1e-12, "count={count} k={k} h={h}: {near}");
                    }
                }
            }
        }
    }

    #[test]
    fn ff_factorization_exact() {
        let cfg = default_cfg();
        let (j, k) = (user(5e6, 12.0), user(5e6, -31.0));
        let exact = iui_normalized(&arv_farfield(&cfg, &j), &arv_farfield(&cfg, &k)).unwrap();
        let split = inter_module_ff_closed_form(&cfg, j.theta, k.theta) * intra_module_correlation(&cfg, j.theta, k.theta);
        assert!((exact - split).abs() < 1e-12);
    }

    #[test]
    fn fresnel_param_examples() {
        let cfg = default_cfg();
        let u = user(20.0, 10.0);
        assert!(matches!(fresnel_params_nf_nf(&cfg, &u, &u), Err(Error::Degenerate(_))));
        assert!(matches!(
            fresnel_params_nf_nf(&cfg, &user(20.0, 30.0), &user(20.0, -30.0)),
            Err(Error::Degenerate(_))
        ));

        let (nsd, lambda) = (32.0 * cfg.module_pitch(), cfg.wavelength());
        let scale = nsd * nsd / lambda;
        let k = user(20.0, 0.0);
        let j = user(30.0, 30.0);
        let p = fresnel_params_nf_nf(&cfg, &j, &k).unwrap();
        let a = scale * (1.0 / 20.0 - 0.75 / 30.0);
        let b = -(2.0 * nsd / lambda) * (0.0 - 0.5);
        assert!((p.a - a).abs() < 1e-9 * a);
        assert!((p.b - b).abs() < 1e-9 * b.abs());
        // swapping users folds the sign of a
        let q = fresnel_params_nf_nf(&cfg, &k, &j).unwrap();
        assert!((q.a - p.a).abs() < 1e-9 * a && (q.b - p.b).abs() < 1e-9 * b.abs());

        let ff = fresnel_params_nf_ff(&cfg, &k, 0.2).unwrap();
        assert!((ff.a - scale / 20.0).abs() < 1e-9 * ff.a);
        assert!(fresnel_params_nf_ff(&cfg, &user(20.0, 90.0), 0.0).is_err());
        let far = fresnel_params_nf_ff(&cfg, &user(1e8, 0.0), 0.3).unwrap();
        assert!(far.a < 1e-3);
    }

    #[test]
    fn fresnel_limits_layout() {
        let p = FresnelParams::new(8.0, 3.0).unwrap();
        assert!((p.t_plus - p.t_minus - (2.0 * 8.0f64).sqrt()).abs() < 1e-12);
        assert!((p.t_plus + p.t_minus - 2.0 * 3.0 / 4.0).abs() < 1e-12);
        assert!(p.t_plus > p.t_minus);
    }

    #[test]
    fn fresnel_approx_envelope_and_zero() {
        // b = 0, large a: both limits run out to the 1/√2 asymptote
        let a = 400.0;
        let p = FresnelParams::new(a, 0.0).unwrap();
        let v = inter_module_fresnel_approx(&p).unwrap();
        let envelope = 2.0 * std::f64::consts::FRAC_1_SQRT_2 / (2.0 * a).sqrt();
        assert!((v - envelope).abs() / envelope < 0.05, "{v} vs {envelope}");
        // b = ±a√a pushes both limits to the same side
        for s in [-1.0, 1.0] {
            let p = FresnelParams::new(a, s * a * a.sqrt()).unwrap();
            assert!(inter_module_fresnel_approx(&p).unwrap() < 1e-3);
        }
    }

    #[test]
    fn fresnel_approx_tracks_exact_sum() {
        let cfg = default_cfg();
        let (j, k) = (user(35.0, 20.0), user(15.0, 5.0));
        let p = fresnel_params_nf_nf(&cfg, &j, &k).unwrap();
        let exact = inter_module_correlation(&cfg, &j, &k);
        let approx = inter_module_fresnel_approx_sampled(&p, 32).unwrap();
        assert!((approx - exact).abs() / exact < 0.1, "{approx} vs {exact}");
        // without folding, this pair sits on an aliased grating lobe
        let raw = inter_module_fresnel_approx(&p).unwrap();
        assert!(raw < 0.1 * exact);
    }

    #[test]
    fn sampled_approx_is_periodic_in_b() {
        let p = FresnelParams::new(3.0, 5.0).unwrap();
        let shifted = FresnelParams::new(3.0, 5.0 + 64.0).unwrap();
        let a = inter_module_fresnel_approx_sampled(&p, 32).unwrap();
        let b = inter_module_fresnel_approx_sampled(&shifted, 32).unwrap();
        assert!((a - b).abs() < 1e-12);
        // b = 0: no correction
        let p0 = FresnelParams::new(3.0, 0.0).unwrap();
        assert_eq!(
            inter_module_fresnel_approx_sampled(&p0, 32).unwrap(),
            inter_module_fresnel_approx(&p0).unwrap()
        );
        assert!(inter_module_fresnel_approx_sampled(&p0, 0).is_err());
    }

    #[test]
    fn common_angle_examples() {
        let cfg = default_cfg();
        assert!((common_angle_min_distance(&cfg) - 22.3734).abs() < 1e-3);
        let single = ArrayConfig::new(1, 4, 1.0, 15e9).unwrap();
        assert_eq!(common_angle_min_distance(&single), 0.0);
        let wide = ArrayConfig::new(32, 8, 13.0, 15e9).unwrap();
        assert!((common_angle_min_distance(&wide) - 2.0 * common_angle_min_distance(&cfg)).abs() < 1e-9);
    }

    #[test]
    fn triangle_bound_holds() {
        let cfg = default_cfg();
        for &(rj, tj, rk, tk) in &[(25.0, 10.0, 40.0, -20.0), (11.0, 50.0, 13.0, 48.0), (60.0, -5.0, 30.0, 0.0)] {
            let (j, k) = (user(rj, tj), user(rk, tk));
            let exact = iui_normalized(&arv_phase_only(&cfg, &j), &arv_phase_only(&cfg, &k)).unwrap();
            assert!(exact <= iui_triangle_bound(&cfg, &j, &k).unwrap() + 1e-9);
        }
    }

    #[test]
    fn mrt_rate_examples() {
        let cfg = default_cfg();
        let u = user(10.0, 0.0);
        let zero_noise = MrtParams {
            noise_power: 0.0,
            ..MrtParams::default()
        };
        assert_eq!(mrt_rate(&cfg, &[u], 0, &zero_noise).unwrap(), zero_noise.rate_cap);

        let p = MrtParams {
            noise_power: 1e-4,
            ..MrtParams::default()
        };
        let want = (1.0f64 + 1.0 / (1.0 + 1e-4 * 1e4)).log2();
        assert!((mrt_rate(&cfg, &[u, u], 0, &p).unwrap() - want).abs() < 1e-12);

        let users = [user(12.0, 20.0), user(20.0, -10.0), user(30.0, 40.0)];
        let arvs: Vec<Arv> = users.iter().map(|x| arv_phase_only(&cfg, x)).collect();
        let i = |a: usize, b: usize| dot(&arvs[a].0, &arvs[b].0).norm() / 128.0;
        let denom = i(0, 1).powi(2) + i(2, 1).powi(2) + p.noise_power * 20f64.powi(4);
        let want = (1.0 + i(1, 1).powi(2) / denom).log2();
        assert!((mrt_rate(&cfg, &users, 1, &p).unwrap() - want).abs() < 1e-12);
        assert!(mrt_rate(&cfg, &users, 3, &p).is_err());
    }

    #[test]
    fn sweep_examples() {
        let cfg = default_cfg();
        let grid: Vec<f64> = (0..=100).map(|i| (i as f64 * 0.1).to_radians()).collect();
        let near = interference_sweep(&cfg, 30.0, &grid, true).unwrap();
        assert!((near[0].iui_sw - 1.0).abs() < 1e-12);
        assert!((near[0].iui_pw.unwrap() - 1.0).abs() < 1e-12);
        let far = interference_sweep(&cfg, 150.0, &grid, true).unwrap();
        for (a, b) in near.iter().zip(&far) {
            assert!((a.iui_pw.unwrap() - b.iui_pw.unwrap()).abs() < 1e-9);
        }
        let no_pw = interference_sweep(&cfg, 30.0, &grid[..3], false).unwrap();
        assert!(no_pw.iter().all(|p| p.iui_pw.is_none()));
    }

    #[test]
    fn sweep_at_150m_follows_plane_wave_near_broadside() {
        let cfg = default_cfg();
        let grid: Vec<f64> = (-100..=100).map(|i| (i as f64 * 0.1).to_radians()).collect();
        for p in interference_sweep(&cfg, 150.0, &grid, true).unwrap() {
            let pw = p.iui_pw.unwrap();
            assert!((p.iui_sw - pw).abs() <= 0.05, "{} vs {pw}", p.iui_sw);
        }
    }
}
