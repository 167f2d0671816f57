//! Array response vectors and line-of-sight channels.
//!
//! All vectors use a modules-major layout: entry `i·M + j` belongs to the
//! `i`-th module (ascending index) and its `j`-th antenna (ascending index).

use std::f64::consts::PI;

use crate::error::Result;
use crate::geometry::{self, ArrayConfig, UserPosition};
use crate::linalg::{norm_sqr, C64};

/// Array response vector over all `N·M` elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Arv(pub Vec<C64>);

impl Arv {
    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entry for module position `i` and antenna position `j` (zero-based).
    pub fn entry(&self, cfg: &ArrayConfig, i: usize, j: usize) -> C64 {
        self.0[i * cfg.antennas_per_module() + j]
    }
}

/// Amplitude model used when building channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeModel {
    /// Unit-modulus entries; valid for `r >= 1.2 Δ_NM`.
    #[default]
    PhaseOnly,
    /// Per-element amplitude `r / r_{n,m}`.
    Exact,
}

/// Line-of-sight channel `h = sqrt(β₀)/r · a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub values: Vec<C64>,
    pub user: UserPosition,
}

impl ChannelVector {
    pub fn as_slice(&self) -> &[C64] {
        &self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.values)
    }
}

#[inline]
fn phasor(phase: f64) -> C64 {
    let (s, c) = phase.sin_cos();
    C64::new(c, s)
}

fn build(cfg: &ArrayConfig, user: &UserPosition, amplitude: AmplitudeModel) -> Arv {
    let k = 2.0 * PI / cfg.wavelength();
    let mut out = Vec::with_capacity(cfg.n_elements());
    for n in cfg.module_indices() {
        for m in cfg.antenna_indices() {
            let rnm = geometry::axis_distance(user, geometry::element_offset(cfg, n, m));
            let amp = match amplitude {
                AmplitudeModel::PhaseOnly => 1.0,
                AmplitudeModel::Exact => user.r / rnm,
            };
            out.push(phasor(-k * rnm) * amp);
        }
    }
    Arv(out)
}

/// Exact spherical-wave response: entry `(r/r_{n,m}) exp(-j2π r_{n,m}/λ)`.
pub fn arv_exact(cfg: &ArrayConfig, user: &UserPosition) -> Arv {
    build(cfg, user, AmplitudeModel::Exact)
}

/// Spherical-wave phases with the amplitude variation dropped.
pub fn arv_phase_only(cfg: &ArrayConfig, user: &UserPosition) -> Arv {
    build(cfg, user, AmplitudeModel::PhaseOnly)
}

/// Whether the phase-only model is within its validity range (`r >= 1.2 Δ_NM`).
pub fn phase_only_valid(cfg: &ArrayConfig, r: f64) -> bool {
    r >= 1.2 * geometry::apertures(cfg).total
}

/// Near-field module delays `exp(-j2π r_n/λ)`, length `N`.
pub fn q_nearfield(cfg: &ArrayConfig, user: &UserPosition) -> Vec<C64> {
    let k = 2.0 * PI / cfg.wavelength();
    let pitch = cfg.module_pitch();
    cfg.module_indices()
        .map(|n| phasor(-k * geometry::axis_distance(user, n * pitch)))
        .collect()
}

/// Plane-wave module delays from `r_n ≈ r - nSd sin θ`, length `N`.
pub fn q_farfield(cfg: &ArrayConfig, user: &UserPosition) -> Vec<C64> {
    let k = 2.0 * PI / cfg.wavelength();
    let base = phasor(-k * user.r);
    let step = k * cfg.module_pitch() * user.theta.sin();
    cfg.module_indices().map(|n| base * phasor(n * step)).collect()
}

/// Intra-module steering vector `exp(+j2π m d sin(angle)/λ)`, length `M`.
pub fn b_steering(cfg: &ArrayConfig, angle: f64) -> Vec<C64> {
    let step = 2.0 * PI / cfg.wavelength() * cfg.element_spacing() * angle.sin();
    cfg.antenna_indices().map(|m| phasor(m * step)).collect()
}

/// Modular factorisation `(q ⊗ 1_M) ⊙ u`, with per-module angles `θ_n`.
pub fn arv_modular(cfg: &ArrayConfig, user: &UserPosition) -> Result<Arv> {
    let q = q_nearfield(cfg, user);
    let mut out = Vec::with_capacity(cfg.n_elements());
    for (qn, n) in q.iter().zip(cfg.module_indices()) {
        let theta_n = geometry::module_angle_unchecked(cfg, user, n)?;
        out.extend(b_steering(cfg, theta_n).into_iter().map(|b| qn * b));
    }
    Ok(Arv(out))
}

/// Plane-wave response `q_ff ⊗ b(θ)`.
pub fn arv_farfield(cfg: &ArrayConfig, user: &UserPosition) -> Arv {
    let q = q_farfield(cfg, user);
    let b = b_steering(cfg, user.theta);
    Arv(q.iter().flat_map(|qn| b.iter().map(move |bm| qn * bm)).collect())
}

pub fn channel(cfg: &ArrayConfig, user: &UserPosition, amplitude: AmplitudeModel) -> ChannelVector {
    let arv = build(cfg, user, amplitude);
    let gain = cfg.reference_gain().sqrt() / user.r;
    ChannelVector {
        values: arv.0.into_iter().map(|a| a * gain).collect(),
        user: *user,
    }
}

/// Channels for a whole user drop.
pub fn channels(cfg: &ArrayConfig, users: &[UserPosition], amplitude: AmplitudeModel) -> Vec<ChannelVector> {
    users.iter().map(|u| channel(cfg, u, amplitude)).collect()
}
