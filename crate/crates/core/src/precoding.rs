//! Zero-forcing precoding with an incrementally maintained Gram inverse,
//! the admission metric, waterfilling and sum spectral efficiency.
//!
//! The selected channels are stacked as rows `h_i^H` of `H`, so the Gram
//! matrix is `H H^H` with entries `h_i^H h_j` and the ZF precoder of user
//! `k` is the normalised `k`-th column of `H^H (H H^H)^{-1}`.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_sqr, scale, C64};

/// Relative Schur-complement floor: `υ⁻¹ / ‖h‖²` must exceed this.
pub const RANK_TOL: f64 = 1e-10;

/// Inverse of the Gram matrix of the selected channels, grown one user at a
/// time by the blockwise (Schur complement) inverse.
#[derive(Debug, Clone, Default)]
pub struct GramInverseState {
    user_ids: Vec<usize>,
    channels: Vec<Vec<C64>>,
    /// Row-major `|S| x |S|`.
    inverse: Vec<C64>,
    snapshot: Option<Vec<C64>>,
}

/// Result of [`GramInverseState::update`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Update {
    /// The channel was appended; `schur` is `υ⁻¹ = ‖h‖² - ξ^H G ξ`.
    Accepted { schur: f64 },
    /// The channel is numerically dependent on the selected set; state unchanged.
    Rejected { schur: f64 },
}

impl Update {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Update::Accepted { .. })
    }
}

impl GramInverseState {
    /// Empty state (no users).
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.user_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.user_ids.is_empty()
    }

    pub fn user_ids(&self) -> &[usize] {
        &self.user_ids
    }

    pub fn channels(&self) -> &[Vec<C64>] {
        &self.channels
    }

    /// The maintained inverse, row-major.
    pub fn inverse(&self) -> &[C64] {
        &self.inverse
    }

    pub fn has_snapshot(&self) -> bool {
        self.snapshot.is_some()
    }

    /// Append user `user_id` with channel `h` in `O(|S|·NM)`.
    pub fn update(&mut self, h: &[C64], user_id: usize) -> Result<Update> {
        if let Some(first) = self.channels.first() {
            if first.len() != h.len() {
                return Err(Error::Domain(format!(
                    "channel length {} does not match selected set ({})",
                    h.len(),
                    first.len()
                )));
            }
        }
        let s = self.len();
        let energy = norm_sqr(h);
        // ξ = H h, w = G ξ
        let xi: Vec<C64> = self.channels.iter().map(|hi| dot(hi, h)).collect();
        let w: Vec<C64> = (0..s)
            .map(|i| (0..s).map(|j| self.inverse[i * s + j] * xi[j]).sum())
            .collect();
        let schur = energy - dot(&xi, &w).re;
        if !(energy > 0.0) || !(schur > RANK_TOL * energy) {
            return Ok(Update::Rejected { schur });
        }
        let upsilon = 1.0 / schur;
        let n = s + 1;
        let mut next = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..s {
            for j in 0..s {
                next[i * n + j] = self.inverse[i * s + j] + w[i] * w[j].conj() * upsilon;
            }
            next[i * n + s] = -w[i] * upsilon;
            next[s * n + i] = -w[i].conj() * upsilon;
        }
        next[s * n + s] = C64::new(upsilon, 0.0);

        self.snapshot = Some(std::mem::replace(&mut self.inverse, next));
        self.user_ids.push(user_id);
        self.channels.push(h.to_vec());
        Ok(Update::Accepted { schur })
    }

    /// Undo the most recent accepted update.
    pub fn rollback(&mut self) -> Result<()> {
        let previous = self
            .snapshot
            .take()
            .ok_or_else(|| Error::Domain("rollback without a snapshot".into()))?;
        self.inverse = previous;
        self.user_ids.pop();
        self.channels.pop();
        Ok(())
    }

    /// Unnormalised ZF direction of the `k`-th selected user, `Σ_i h_i G_{ik}`.
    pub fn zf_direction(&self, k: usize) -> Vec<C64> {
        let s = self.len();
        let mut w = vec![C64::new(0.0, 0.0); self.channels[0].len()];
        for (i, hi) in self.channels.iter().enumerate() {
            axpy(self.inverse[i * s + k], hi, &mut w);
        }
        w
    }

    /// Effective ZF gains `|h_k^H p_k|² = 1/G_kk` for unit-norm precoders.
    pub fn zf_gains(&self) -> Vec<f64> {
        let s = self.len();
        (0..s).map(|k| 1.0 / self.inverse[k * s + k].re).collect()
    }

    /// Sum-SE of ZF precoding with waterfilling, using only the inverse diagonal.
    pub fn zf_sum_se(&self, p_tx: f64, noise_power: f64) -> Result<f64> {
        if self.is_empty() {
            return Ok(0.0);
        }
        let gains: Vec<f64> = self.zf_gains().into_iter().map(|g| g / noise_power).collect();
        let powers = waterfilling(&gains, p_tx)?;
        Ok(gains
            .iter()
            .zip(&powers)
            .map(|(g, p)| (1.0 + p * g).log2())
            .sum())
    }
}

/// Unit-norm ZF precoders for every selected user, in selection order.
pub fn zf_precoders(state: &GramInverseState) -> Result<Vec<Vec<C64>>> {
    if state.is_empty() {
        return Err(Error::Domain("no users selected".into()));
    }
    (0..state.len())
        .map(|k| {
            let mut w = state.zf_direction(k);
            let nrm = norm_sqr(&w).sqrt();
            if !(nrm > 0.0 && nrm.is_finite()) {
                return Err(Error::Numerical(format!("rank-deficient selection at user {k}")));
            }
            scale(1.0 / nrm, &mut w);
            Ok(w)
        })
        .collect()
}

/// Reading of the admission metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaVariant {
    /// `h^H(I - Σ f f^H)h / ‖h‖²` clamped to `[0, 1]`; larger means less interference.
    #[default]
    ResidualFraction,
    /// `‖h‖² / h^H(I - Σ f f^H)h`, `+∞` when the denominator is not positive.
    AsWritten,
}

/// Admission metric of channel `h` against the active tentative precoders.
pub fn gamma_metric(h: &[C64], active: &[Vec<C64>], variant: GammaVariant) -> f64 {
    let energy = norm_sqr(h);
    let projected: f64 = active.iter().map(|f| dot(f, h).norm_sqr()).sum();
    let residual = energy - projected;
    match variant {
        GammaVariant::ResidualFraction => {
            if energy > 0.0 {
                (residual / energy).clamp(0.0, 1.0)
            } else {
                0.0
            }
        }
        GammaVariant::AsWritten => {
            if residual > 0.0 {
                energy / residual
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Sum-power waterfilling: `p_k = max(0, ν - 1/g_k)` with `Σ p_k = P_TX`.
///
/// Exact sorted solve; users with zero gain get zero power.
pub fn waterfilling(gains: &[f64], p_tx: f64) -> Result<Vec<f64>> {
    if gains.is_empty() {
        return Err(Error::Domain("waterfilling over an empty gain set".into()));
    }
    if let Some(g) = gains.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
        return Err(Error::Domain(format!("invalid gain {g}")));
    }
    if !(p_tx >= 0.0 && p_tx.is_finite()) {
        return Err(Error::Domain(format!("invalid power budget {p_tx}")));
    }
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    let mut powers = vec![0.0; gains.len()];
    if order.is_empty() {
        return Ok(powers);
    }
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));

    // Grow the active set from the strongest user while the water level
    // stays above the next floor 1/g.
    let mut inv_sum = 0.0;
    let mut level = 0.0;
    let mut active = 0;
    for (count, &i) in order.iter().enumerate() {
        let floor = 1.0 / gains[i];
        if count > 0 && level <= floor {
            break;
        }
        inv_sum += floor;
        active = count + 1;
        level = (p_tx + inv_sum) / active as f64;
    }
    for &i in &order[..active] {
        powers[i] = (level - 1.0 / gains[i]).max(0.0);
    }
    Ok(powers)
}

/// Per-user rates and their sum:
/// `R_k = log2(1 + p_k|h_k^H p_k|² / (Σ_{i≠k} p_i|h_k^H p_i|² + σ²))`.
pub fn sum_se<H: AsRef<[C64]>, P: AsRef<[C64]>>(
    channels: &[H],
    precoders: &[P],
    powers: &[f64],
    noise_power: f64,
) -> Result<(Vec<f64>, f64)> {
    if channels.len() != precoders.len() || channels.len() != powers.len() {
        return Err(Error::Domain(format!(
            "mismatched lengths: {} channels, {} precoders, {} powers",
            channels.len(),
            precoders.len(),
            powers.len()
        )));
    }
    let rates: Vec<f64> = channels
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let h = h.as_ref();
            let mut signal = 0.0;
            let mut interference = 0.0;
            for (i, (p, &pw)) in precoders.iter().zip(powers).enumerate() {
                let g = pw * dot(h, p.as_ref()).norm_sqr();
                if i == k {
                    signal = g;
                } else {
                    interference += g;
                }
            }
            (1.0 + signal / (interference + noise_power)).log2()
        })
        .collect();
    let total = rates.iter().sum();
    Ok((rates, total))
}

/// Served users with their precoders, powers and rates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelectionResult {
    pub selected: Vec<usize>,
    pub precoders: Vec<Vec<C64>>,
    pub powers: Vec<f64>,
    pub rates: Vec<f64>,
    pub sum_se: f64,
}

impl SelectionResult {
    /// ZF precoders, waterfilling powers and rates for the users in `state`.
    pub fn from_state(state: &GramInverseState, p_tx: f64, noise_power: f64) -> Result<Self> {
        if state.is_empty() {
            return Ok(SelectionResult::default());
        }
        let precoders = zf_precoders(state)?;
        let channels = state.channels();
        let gains: Vec<f64> = channels
            .iter()
            .zip(&precoders)
            .map(|(h, p)| dot(h, p).norm_sqr() / noise_power)
            .collect();
        let powers = waterfilling(&gains, p_tx)?;
        let (rates, sum_se) = sum_se(channels, &precoders, &powers, noise_power)?;
        Ok(SelectionResult {
            selected: state.user_ids().to_vec(),
            precoders,
            powers,
            rates,
            sum_se,
        })
    }

    pub fn served_users(&self) -> usize {
        self.powers.iter().filter(|&&p| p > 0.0).count()
    }
}
