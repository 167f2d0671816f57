//! User selection: rectangular search (RSS), front line (FLS), semi-orthogonal
//! selection (SUS), random greedy and distance-based (DBS) scheduling.
//!
//! All schedulers share the Gram-inverse state, the sum-SE stopping rule and
//! the final ZF + waterfilling step, so their runtimes differ only in how
//! candidates are searched.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::ChannelVector;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sqr, scale, C64};
use crate::precoding::{gamma_metric, GammaVariant, GramInverseState, SelectionResult, Update, RANK_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stopping {
    /// Roll back and stop as soon as an admission lowers the sum-SE.
    #[default]
    SumSeDecrease,
    /// Run until no candidate is left.
    Exhaustion,
}

impl FromStr for Stopping {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sum-se-decrease" => Ok(Stopping::SumSeDecrease),
            "exhaustion" => Ok(Stopping::Exhaustion),
            other => Err(format!("unknown stopping rule '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerConfig {
    /// Admission threshold on the γ metric.
    pub mu: f64,
    /// Initial RSS half-width, meters.
    pub l_init: f64,
    /// RSS growth per sweep, meters.
    pub l_step: f64,
    pub gamma_variant: GammaVariant,
    pub stopping: Stopping,
    /// SUS semi-orthogonality pruning threshold; `None` disables pruning.
    pub sus_alpha: Option<f64>,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            mu: 0.5,
            l_init: 10.0,
            l_step: 1.0,
            gamma_variant: GammaVariant::ResidualFraction,
            stopping: Stopping::SumSeDecrease,
            sus_alpha: None,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_init > 0.0 && self.l_init.is_finite()) {
            return Err(Error::config("scheduler.l_init", format!("must be positive, got {}", self.l_init)));
        }
        if !(self.l_step > 0.0 && self.l_step.is_finite()) {
            return Err(Error::config("scheduler.l_step", format!("must be positive, got {}", self.l_step)));
        }
        match self.gamma_variant {
            GammaVariant::ResidualFraction if !(self.mu > 0.0 && self.mu < 1.0) => {
                return Err(Error::config("scheduler.mu", format!("must lie in (0, 1), got {}", self.mu)));
            }
            GammaVariant::AsWritten if !(self.mu > 0.0 && self.mu.is_finite()) => {
                return Err(Error::config("scheduler.mu", format!("must be positive, got {}", self.mu)));
            }
            _ => {}
        }
        if let Some(alpha) = self.sus_alpha {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::config("scheduler.sus_alpha", format!("must lie in (0, 1], got {alpha}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerOutcome {
    pub result: SelectionResult,
    /// Wall-clock seconds for selection and precoding.
    pub runtime: f64,
    pub candidate_evaluations: usize,
    /// Users in the order their admission was evaluated.
    pub trace: Vec<usize>,
    /// Sum-SE after every admission that was kept.
    pub trajectory: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheduler {
    Rss,
    Fls,
    Sus,
    Greedy,
    Dbs,
}

impl Scheduler {
    pub const ALL: [Scheduler; 5] = [Scheduler::Rss, Scheduler::Fls, Scheduler::Sus, Scheduler::Greedy, Scheduler::Dbs];

    pub fn name(&self) -> &'static str {
        match self {
            Scheduler::Rss => "rss",
            Scheduler::Fls => "fls",
            Scheduler::Sus => "sus",
            Scheduler::Greedy => "greedy",
            Scheduler::Dbs => "dbs",
        }
    }

    /// Runs this scheduler; only greedy draws from `rng`.
    pub fn run<R: Rng + ?Sized>(
        &self,
        channels: &[ChannelVector],
        cfg: &SchedulerConfig,
        rng: &mut R,
        p_tx: f64,
        noise_power: f64,
    ) -> Result<SchedulerOutcome> {
        match self {
            Scheduler::Rss => rss(channels, cfg, p_tx, noise_power),
            Scheduler::Fls => fls(channels, cfg, p_tx, noise_power),
            Scheduler::Sus => sus(channels, cfg, p_tx, noise_power),
            Scheduler::Greedy => greedy(channels, cfg, rng, p_tx, noise_power),
            Scheduler::Dbs => dbs(channels, cfg, p_tx, noise_power),
        }
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheduler {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scheduler::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown scheduler '{s}'"))
    }
}

enum Step {
    Admitted,
    /// `permanent`: the candidate can never pass again.
    Rejected { permanent: bool },
    Stop,
}

/// Shared admission machinery.
struct Selector<'a> {
    channels: &'a [ChannelVector],
    cfg: &'a SchedulerConfig,
    p_tx: f64,
    noise_power: f64,
    state: GramInverseState,
    /// Orthonormal tentative precoders, one per admitted user.
    tentative: Vec<Vec<C64>>,
    best: f64,
    evaluations: usize,
    trace: Vec<usize>,
    trajectory: Vec<f64>,
    start: Instant,
}

impl<'a> Selector<'a> {
    fn new(channels: &'a [ChannelVector], cfg: &'a SchedulerConfig, p_tx: f64, noise_power: f64) -> Result<Self> {
        cfg.validate()?;
        if !(p_tx >= 0.0 && p_tx.is_finite()) {
            return Err(Error::Domain(format!("invalid transmit power {p_tx}")));
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::Domain(format!("invalid noise power {noise_power}")));
        }
        Ok(Selector {
            channels,
            cfg,
            p_tx,
            noise_power,
            state: GramInverseState::new(),
            tentative: Vec::new(),
            best: 0.0,
            evaluations: 0,
            trace: Vec::new(),
            trajectory: Vec::new(),
            start: Instant::now(),
        })
    }

    /// γ test followed by admission and the stopping check.
    fn try_admit(&mut self, k: usize) -> Result<Step> {
        self.evaluations += 1;
        self.trace.push(k);
        let h = self.channels[k].as_slice();
        let gamma = gamma_metric(h, &self.tentative, self.cfg.gamma_variant);
        if !(gamma >= self.cfg.mu) {
            let permanent = self.cfg.gamma_variant == GammaVariant::ResidualFraction;
            return Ok(Step::Rejected { permanent });
        }
        self.admit(k)
    }

    /// Admission without the γ test.
    fn admit(&mut self, k: usize) -> Result<Step> {
        let h = self.channels[k].as_slice();
        if let Update::Rejected { .. } = self.state.update(h, k)? {
            return Ok(Step::Rejected { permanent: true });
        }
        let se = self.state.zf_sum_se(self.p_tx, self.noise_power)?;
        if self.cfg.stopping == Stopping::SumSeDecrease && se < self.best {
            self.state.rollback()?;
            return Ok(Step::Stop);
        }
        self.keep(se);
        Ok(Step::Admitted)
    }

    fn keep(&mut self, se: f64) {
        self.best = se;
        self.trajectory.push(se);
        let mut f = self.state.zf_direction(self.state.len() - 1);
        let nrm = norm_sqr(&f).sqrt();
        scale(1.0 / nrm, &mut f);
        self.tentative.push(f);
    }

    fn finish(self) -> Result<SchedulerOutcome> {
        let result = SelectionResult::from_state(&self.state, self.p_tx, self.noise_power)?;
        Ok(SchedulerOutcome {
            result,
            runtime: self.start.elapsed().as_secs_f64(),
            candidate_evaluations: self.evaluations,
            trace: self.trace,
            trajectory: self.trajectory,
        })
    }
}

/// Candidate indices sorted by `key`, ties broken by index.
fn sorted_by_key(channels: &[ChannelVector], key: impl Fn(&ChannelVector) -> f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..channels.len()).collect();
    order.sort_by(|&a, &b| key(&channels[a]).total_cmp(&key(&channels[b])).then(a.cmp(&b)));
    order
}

/// Visits candidates in a fixed order, repeating the pass while it admits
/// someone and some rejection was not permanent.
fn ordered_admission(mut sel: Selector<'_>, order: Vec<usize>) -> Result<SchedulerOutcome> {
    let mut pool = order;
    loop {
        let mut retry = Vec::new();
        let mut admitted_any = false;
        for &k in &pool {
            match sel.try_admit(k)? {
                Step::Admitted => admitted_any = true,
                Step::Rejected { permanent: false } => retry.push(k),
                Step::Rejected { permanent: true } => {}
                Step::Stop => return sel.finish(),
            }
        }
        if !admitted_any || retry.is_empty() {
            return sel.finish();
        }
        pool = retry;
    }
}

/// Rectangular-search scheduler.
///
/// Candidates inside `{x < l, |y| < l}` are visited by ascending `x`; the
/// half-width `l` grows by `l_step` once the rectangle is exhausted.
pub fn rss(channels: &[ChannelVector], cfg: &SchedulerConfig, p_tx: f64, noise_power: f64) -> Result<SchedulerOutcome> {
    let mut sel = Selector::new(channels, cfg, p_tx, noise_power)?;
    let order = sorted_by_key(channels, |c| c.user.x());
    // smallest half-width at which each user enters the rectangle
    let entry: Vec<f64> = channels.iter().map(|c| c.user.x().max(c.user.y().abs())).collect();
    let mut alive = vec![true; channels.len()];
    let mut remaining = channels.len();
    let mut l = cfg.l_init;
    // sweeps since the last admission once the rectangle covers everyone
    let mut idle_full_sweeps = 0;
    while remaining > 0 {
        let covers_all = order.iter().all(|&i| !alive[i] || entry[i] < l);
        let mut admitted_any = false;
        for &k in &order {
            if !alive[k] || entry[k] >= l {
                continue;
            }
            match sel.try_admit(k)? {
                Step::Admitted => {
                    alive[k] = false;
                    remaining -= 1;
                    admitted_any = true;
                }
                Step::Rejected { permanent: true } => {
                    alive[k] = false;
                    remaining -= 1;
                }
                Step::Rejected { permanent: false } => {}
                Step::Stop => return sel.finish(),
            }
        }
        if covers_all {
            idle_full_sweeps = if admitted_any { 0 } else { idle_full_sweeps + 1 };
            if idle_full_sweeps > 0 {
                break;
            }
        }
        l += cfg.l_step;
    }
    sel.finish()
}

/// Front-line scheduler: all candidates by ascending `x`.
pub fn fls(channels: &[ChannelVector], cfg: &SchedulerConfig, p_tx: f64, noise_power: f64) -> Result<SchedulerOutcome> {
    let sel = Selector::new(channels, cfg, p_tx, noise_power)?;
    ordered_admission(sel, sorted_by_key(channels, |c| c.user.x()))
}

/// Distance-based scheduler: candidates by ascending `r`.
pub fn dbs(channels: &[ChannelVector], cfg: &SchedulerConfig, p_tx: f64, noise_power: f64) -> Result<SchedulerOutcome> {
    let sel = Selector::new(channels, cfg, p_tx, noise_power)?;
    ordered_admission(sel, sorted_by_key(channels, |c| c.user.r))
}

/// Semi-orthogonal user selection: each step projects every remaining
/// candidate onto the selected directions and admits the one with the
/// largest orthogonal component.
pub fn sus(channels: &[ChannelVector], cfg: &SchedulerConfig, p_tx: f64, noise_power: f64) -> Result<SchedulerOutcome> {
    let mut sel = Selector::new(channels, cfg, p_tx, noise_power)?;
    let energy: Vec<f64> = channels.iter().map(|c| c.norm_sqr()).collect();
    let mut alive: Vec<bool> = energy.iter().map(|&e| e > 0.0).collect();
    let mut last: Option<usize> = None;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..channels.len() {
            if !alive[k] {
                continue;
            }
            let hk = channels[k].as_slice();
            if let (Some(alpha), Some(j)) = (cfg.sus_alpha, last) {
                let corr = dot(channels[j].as_slice(), hk).norm() / (energy[j] * energy[k]).sqrt();
                if corr > alpha {
                    alive[k] = false;
                    continue;
                }
            }
            sel.evaluations += 1;
            let residual = energy[k] - sel.tentative.iter().map(|f| dot(f, hk).norm_sqr()).sum::<f64>();
            if residual <= RANK_TOL * energy[k] {
                alive[k] = false;
                continue;
            }
            if best.is_none_or(|(_, r)| residual > r) {
                best = Some((k, residual));
            }
        }
        let Some((k, _)) = best else { break };
        alive[k] = false;
        sel.trace.push(k);
        match sel.admit(k)? {
            Step::Stop => break,
            Step::Rejected { .. } => {}
            Step::Admitted => last = Some(k),
        }
    }
    sel.finish()
}

/// Random greedy: one pass over a random permutation, keeping a user only if
/// the sum-SE strictly increases.
pub fn greedy<R: Rng + ?Sized>(
    channels: &[ChannelVector],
    cfg: &SchedulerConfig,
    rng: &mut R,
    p_tx: f64,
    noise_power: f64,
) -> Result<SchedulerOutcome> {
    let mut sel = Selector::new(channels, cfg, p_tx, noise_power)?;
    let mut order: Vec<usize> = (0..channels.len()).collect();
    order.shuffle(rng);
    for k in order {
        sel.evaluations += 1;
        sel.trace.push(k);
        if let Update::Rejected { .. } = sel.state.update(channels[k].as_slice(), k)? {
            continue;
        }
        let se = sel.state.zf_sum_se(sel.p_tx, sel.noise_power)?;
        if se > sel.best {
            sel.keep(se);
        } else {
            sel.state.rollback()?;
        }
    }
    sel.finish()
}
