//! Exact event-driven simulation of the Moran model with growth.
//!
//! Each individual of type `j` has fitness `(1+γ)^j`. Three event channels:
//!
//! * replacement: a type-`k` individual is replaced by offspring of a
//!   type-`j` individual at rate `(1+γ)^j x_j x_k / w`,
//! * mutation: a type-`j` individual becomes type `j+1` at rate `μ x_j`,
//! * growth: a type-`j` individual is added at rate `ρ N (1+γ)^j x_j / w`,
//!
//! where `w = Σ (1+γ)^j x_j`. Replacements with `j == k` do not change the
//! state; they are thinned out by default, which leaves the law of the
//! jump chain and of the jump times unchanged.
//!
//! Time is raw model time throughout. Scaling to `t·γ/L` happens in
//! [`crate::analysis`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ModelParams, ParamError};

/// Largest type index the simulator will create.
pub const TYPE_CAP: usize = 1024;
/// Events between full recomputations of `w`.
pub const REFRESH_INTERVAL: u64 = 1 << 16;

#[derive(Debug, Clone, Error)]
pub enum SimError {
    #[error(transparent)]
    InvalidParams(#[from] ParamError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("population size overflow: {0}")]
    Overflow(String),
    #[error("type index {requested} exceeds the cap of {cap}")]
    TypeCapExceeded { requested: usize, cap: usize },
    #[error("event budget of {budget} exhausted at t = {t}")]
    EventBudgetExceeded {
        budget: u64,
        t: f64,
        partial: Box<Trajectory>,
    },
}

/// How the initial population is set up. All individuals start as type 0
/// unless explicit per-type counts are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialPopulation {
    /// `N(0) = ⌈μ^{-α}⌉`.
    CeilMuPowAlpha,
    Explicit(u64),
    /// Counts of types `0, 1, …`.
    Counts(Vec<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Stop at raw time `t_end`.
    Time(f64),
    /// Stop as soon as type `K` first appears.
    FirstType(usize),
    /// Stop after this many events.
    Events(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams<f64>,
    pub initial: InitialPopulation,
    pub seed: u64,
    /// RNG stream; ensembles use the replicate index.
    pub stream: u64,
    pub stop: StopRule,
    /// Safety cap; hitting it before `stop` is an error.
    pub max_events: u64,
    /// Raw-time spacing of the sampling grid. May be infinite.
    pub record_spacing: f64,
    pub thin_self_replacement: bool,
}

impl SimConfig {
    pub fn new(params: ModelParams<f64>, stop: StopRule) -> Self {
        Self {
            params,
            initial: InitialPopulation::CeilMuPowAlpha,
            seed: 0,
            stream: 0,
            stop,
            max_events: 2_000_000_000,
            record_spacing: 1.0,
            thin_self_replacement: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_initial(mut self, initial: InitialPopulation) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_record_spacing(mut self, spacing: f64) -> Self {
        self.record_spacing = spacing;
        self
    }

    pub fn with_max_events(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }

    /// Unlike [`ModelParams::validate`], `μ = 0` is allowed here: the
    /// generator is well defined without mutation, and absorption tests
    /// need it. `α` only matters when it sets the initial size.
    pub fn validate(&self) -> Result<(), SimError> {
        let p = &self.params;
        if !(p.gamma > 0.0 && p.gamma.is_finite()) {
            return Err(ParamError::NonPositiveGamma(p.gamma).into());
        }
        if !(p.rho >= 0.0 && p.rho.is_finite()) {
            return Err(ParamError::NegativeRho(p.rho).into());
        }
        if !(p.mu >= 0.0 && p.mu < 1.0) {
            return Err(ParamError::MuOutOfRange(p.mu).into());
        }
        if self.initial == InitialPopulation::CeilMuPowAlpha {
            p.validate()?;
        }
        if !(self.record_spacing > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "record spacing must be positive, got {}",
                self.record_spacing
            )));
        }
        match self.stop {
            StopRule::Time(t) if !(t >= 0.0) => {
                return Err(SimError::InvalidConfig(format!("t_end must be >= 0, got {t}")))
            }
            StopRule::FirstType(k) if k > TYPE_CAP => {
                return Err(SimError::TypeCapExceeded {
                    requested: k,
                    cap: TYPE_CAP,
                })
            }
            _ => {}
        }
        if let InitialPopulation::Counts(c) = &self.initial {
            if c.len() > TYPE_CAP + 1 {
                return Err(SimError::TypeCapExceeded {
                    requested: c.len() - 1,
                    cap: TYPE_CAP,
                });
            }
        }
        Ok(())
    }

    /// Initial population size implied by the configuration.
    pub fn initial_size(&self) -> Result<u64, SimError> {
        match &self.initial {
            InitialPopulation::CeilMuPowAlpha => ceil_mu_pow_alpha(self.params.mu, self.params.alpha),
            InitialPopulation::Explicit(n) => Ok(*n),
            InitialPopulation::Counts(c) => c
                .iter()
                .try_fold(0u64, |a, &x| a.checked_add(x))
                .ok_or_else(|| SimError::Overflow("sum of initial counts".into())),
        }
    }
}

/// `⌈μ^{-α}⌉`, snapping values within `1e-9` relative of an integer so that
/// e.g. `μ = 10⁻³, α = 2` gives exactly `10⁶`.
pub fn ceil_mu_pow_alpha(mu: f64, alpha: f64) -> Result<u64, SimError> {
    let x = (-alpha * mu.ln()).exp();
    if !x.is_finite() || x >= u64::MAX as f64 {
        return Err(SimError::Overflow(format!("mu^-alpha = {x}")));
    }
    let r = x.round();
    let n = if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { x.ceil() };
    Ok(n as u64)
}

/// Population state. Counts are dense over type indices; fitness factors
/// are stored relative to a base type that is moved up as low types die
/// out, so `w` never overflows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimState {
    pub t: f64,
    counts: Vec<u64>,
    n_total: u64,
    lo: usize,
    hi: usize,
    base: usize,
    /// `(1+γ)^{j−base}` for `j ≥ lo`; entries below `lo` are stale.
    fitness: Vec<f64>,
    /// `Σ (1+γ)^{j−base} x_j`.
    w: f64,
    growth: f64,
}

/// What one event did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Transition {
    /// Offspring of `born` replaced an individual of `died`.
    Replace { born: usize, died: usize },
    /// Self-replacement; only produced when thinning is off.
    Identity,
    Mutate { from: usize },
    Grow { ty: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepOutcome {
    pub dt: f64,
    pub transition: Transition,
}

/// Channel totals at one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    /// `Σ_{j≠k} p_{j,k}`.
    pub replacement: f64,
    /// `Σ_j p_{j,j}`.
    pub self_replacement: f64,
    pub mutation: f64,
    pub growth: f64,
    /// Rate of state-changing events.
    pub total: f64,
    /// `(j, x_j)` for every present type.
    pub types: Vec<(usize, u64)>,
    gamma: f64,
    base: usize,
    n: f64,
    w: f64,
    rho: f64,
    mu: f64,
}

impl RateTable {
    /// `p_{j,k}`: type `j` reproduces, type `k` dies.
    pub fn pair_rate(&self, j: usize, k: usize) -> f64 {
        let x = |i: usize| self.types.iter().find(|(t, _)| *t == i).map_or(0.0, |(_, c)| *c as f64);
        rel_fitness(self.gamma, j, self.base) * x(j) * x(k) / self.w
    }

    pub fn mutation_rate(&self, j: usize) -> f64 {
        self.mu * self.types.iter().find(|(t, _)| *t == j).map_or(0.0, |(_, c)| *c as f64)
    }

    pub fn growth_rate(&self, j: usize) -> f64 {
        let x = self.types.iter().find(|(t, _)| *t == j).map_or(0.0, |(_, c)| *c as f64);
        self.rho * self.n * rel_fitness(self.gamma, j, self.base) * x / self.w
    }
}

fn rel_fitness(gamma: f64, j: usize, base: usize) -> f64 {
    (1.0 + gamma).powi(j as i32 - base as i32)
}

impl SimState {
    fn from_counts(counts: Vec<u64>, gamma: f64) -> Result<Self, SimError> {
        let n_total = counts
            .iter()
            .try_fold(0u64, |a, &x| a.checked_add(x))
            .ok_or_else(|| SimError::Overflow("initial counts".into()))?;
        if n_total == 0 {
            return Err(SimError::InvalidConfig("initial population is empty".into()));
        }
        let lo = counts.iter().position(|&c| c > 0).expect("non-empty");
        let hi = counts.iter().rposition(|&c| c > 0).expect("non-empty");
        let mut s = Self {
            t: 0.0,
            counts,
            n_total,
            lo,
            hi,
            base: lo,
            fitness: Vec::new(),
            w: 0.0,
            growth: 1.0 + gamma,
        };
        s.refresh();
        Ok(s)
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    /// Count of type `j`.
    pub fn count(&self, j: usize) -> u64 {
        self.counts.get(j).copied().unwrap_or(0)
    }

    /// Lowest and highest present type.
    pub fn support(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    /// `(j, x_j)` for present types.
    pub fn sparse(&self) -> Vec<(usize, u64)> {
        (self.lo..=self.hi)
            .filter(|&j| self.counts[j] > 0)
            .map(|j| (j, self.counts[j]))
            .collect()
    }

    /// `w` relative to the base type: the true total fitness is
    /// `relative_w() · (1+γ)^{base}`.
    pub fn relative_w(&self) -> (f64, usize) {
        (self.w, self.base)
    }

    /// Recomputes `w` from the counts (same base), without storing it.
    pub fn fresh_w(&self) -> f64 {
        (self.lo..=self.hi)
            .map(|j| self.growth.powi(j as i32 - self.base as i32) * self.counts[j] as f64)
            .sum()
    }

    /// Moves the base to the lowest present type and recomputes `w`.
    pub fn refresh(&mut self) {
        self.base = self.lo;
        if self.fitness.len() < self.counts.len() {
            self.fitness.resize(self.counts.len(), 0.0);
        }
        for j in self.lo..self.counts.len() {
            self.fitness[j] = self.growth.powi(j as i32 - self.base as i32);
        }
        self.w = self.fresh_w();
    }

    pub fn event_rates(&self, params: &ModelParams<f64>) -> RateTable {
        let n = self.n_total as f64;
        let mut rep = 0.0;
        let mut selfr = 0.0;
        for j in self.lo..=self.hi {
            let x = self.counts[j] as f64;
            rep += self.fitness[j] * x * (n - x);
            selfr += self.fitness[j] * x * x;
        }
        let replacement = rep / self.w;
        let mutation = params.mu * n;
        let growth = params.rho * n;
        RateTable {
            replacement,
            self_replacement: selfr / self.w,
            mutation,
            growth,
            total: replacement + mutation + growth,
            types: self.sparse(),
            gamma: params.gamma,
            base: self.base,
            n,
            w: self.w,
            rho: params.rho,
            mu: params.mu,
        }
    }

    /// Total event rate: state-changing events when `thin`, otherwise all
    /// events including self-replacement.
    fn total_rate(&self, params: &ModelParams<f64>, thin: bool) -> f64 {
        let n = self.n_total as f64;
        let rep = if thin {
            let mut acc = 0.0;
            for j in self.lo..=self.hi {
                let x = self.counts[j] as f64;
                acc += self.fitness[j] * x * (n - x);
            }
            acc / self.w
        } else {
            n
        };
        rep + (params.mu + params.rho) * n
    }

    /// Individual-uniform choice among types, optionally excluding one.
    fn pick_uniform<R: Rng>(&self, rng: &mut R, exclude: Option<usize>) -> usize {
        let excluded = exclude.map_or(0, |e| self.count(e));
        let mut v = rng.random_range(0..self.n_total - excluded);
        let mut last = self.lo;
        for j in self.lo..=self.hi {
            if Some(j) == exclude {
                continue;
            }
            let c = self.counts[j];
            if c == 0 {
                continue;
            }
            if v < c {
                return j;
            }
            v -= c;
            last = j;
        }
        last
    }

    /// Fitness-weighted choice among types with weight `f_j x_j · extra(x_j)`.
    fn pick_weighted<R: Rng>(&self, rng: &mut R, total: f64, extra: impl Fn(f64) -> f64) -> usize {
        let mut u = rng.random::<f64>() * total;
        let mut last = None;
        for j in self.lo..=self.hi {
            let x = self.counts[j] as f64;
            let wj = self.fitness[j] * x * extra(x);
            if wj <= 0.0 {
                continue;
            }
            if u < wj {
                return j;
            }
            u -= wj;
            last = Some(j);
        }
        last.expect("positive total weight implies an eligible type")
    }

    fn ensure_type(&mut self, j: usize) -> Result<(), SimError> {
        if j > TYPE_CAP {
            return Err(SimError::TypeCapExceeded {
                requested: j,
                cap: TYPE_CAP,
            });
        }
        if j >= self.counts.len() {
            self.counts.resize(j + 1, 0);
            let old = self.fitness.len();
            self.fitness.resize(j + 1, 0.0);
            for i in old.max(self.lo)..=j {
                self.fitness[i] = self.growth.powi(i as i32 - self.base as i32);
            }
        }
        Ok(())
    }

    fn add(&mut self, j: usize) {
        self.counts[j] += 1;
        self.w += self.fitness[j];
        if j > self.hi {
            self.hi = j;
        }
        if j < self.lo {
            self.lo = j;
        }
    }

    fn remove(&mut self, j: usize) {
        self.counts[j] -= 1;
        self.w -= self.fitness[j];
        if self.counts[j] == 0 {
            if j == self.lo {
                while self.lo < self.hi && self.counts[self.lo] == 0 {
                    self.lo += 1;
                }
            }
            if j == self.hi {
                while self.hi > self.lo && self.counts[self.hi] == 0 {
                    self.hi -= 1;
                }
            }
        }
    }

    /// Applies one event drawn from the generator, given the total rate
    /// already computed for this state.
    fn fire<R: Rng>(
        &mut self,
        params: &ModelParams<f64>,
        rng: &mut R,
        thin: bool,
        total: f64,
    ) -> Result<Transition, SimError> {
        let n = self.n_total as f64;
        let mutation = params.mu * n;
        let growth = params.rho * n;
        let replacement = total - mutation - growth;
        let u = rng.random::<f64>() * total;
        if u < replacement {
            if thin {
                let born = self.pick_weighted(rng, replacement * self.w, |x| n - x);
                let died = self.pick_uniform(rng, Some(born));
                self.add(born);
                self.remove(died);
                Ok(Transition::Replace { born, died })
            } else {
                let born = self.pick_weighted(rng, self.w, |_| 1.0);
                let died = self.pick_uniform(rng, None);
                if born == died {
                    return Ok(Transition::Identity);
                }
                self.add(born);
                self.remove(died);
                Ok(Transition::Replace { born, died })
            }
        } else if u < replacement + mutation {
            let from = self.pick_uniform(rng, None);
            self.ensure_type(from + 1)?;
            self.add(from + 1);
            self.remove(from);
            Ok(Transition::Mutate { from })
        } else {
            let ty = self.pick_weighted(rng, self.w, |_| 1.0);
            self.n_total = self
                .n_total
                .checked_add(1)
                .ok_or_else(|| SimError::Overflow("population size".into()))?;
            self.add(ty);
            Ok(Transition::Grow { ty })
        }
    }
}

/// Builds the initial state: all mass on type 0 unless counts are given.
pub fn build_initial(config: &SimConfig) -> Result<SimState, SimError> {
    config.validate()?;
    let counts = match &config.initial {
        InitialPopulation::Counts(c) => c.clone(),
        _ => vec![config.initial_size()?],
    };
    SimState::from_counts(counts, config.params.gamma)
}

/// Rates of all channels at `state`.
pub fn event_rates(state: &SimState, params: &ModelParams<f64>) -> RateTable {
    state.event_rates(params)
}

/// Draws and applies one event. Returns `None` when no event can occur.
pub fn step_event<R: Rng>(
    state: &mut SimState,
    params: &ModelParams<f64>,
    rng: &mut R,
    thin_self_replacement: bool,
) -> Result<Option<StepOutcome>, SimError> {
    let total = state.total_rate(params, thin_self_replacement);
    if !(total > 0.0) {
        return Ok(None);
    }
    let e: f64 = rng.sample(Exp1);
    let dt = e / total;
    let transition = state.fire(params, rng, thin_self_replacement, total)?;
    state.t += dt;
    Ok(Some(StepOutcome { dt, transition }))
}

/// One recorded state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub n: u64,
    /// `(type, count)` for present types, ascending.
    pub counts: Vec<(usize, u64)>,
}

impl Sample {
    pub fn count(&self, j: usize) -> u64 {
        self.counts
            .binary_search_by_key(&j, |(t, _)| *t)
            .map_or(0, |i| self.counts[i].1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Time,
    FirstType,
    Events,
    /// No event can occur any more (e.g. fixation with `μ = ρ = 0`).
    Absorbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// `T_k` for `k = 0, 1, …` as far as observed.
    pub first_appearance: Vec<Option<f64>>,
    pub event_count: u64,
    pub seed: u64,
    pub stream: u64,
    pub stop: Option<StopReason>,
    pub final_sample: Sample,
}

impl Trajectory {
    pub fn first_time(&self, k: usize) -> Option<f64> {
        self.first_appearance.get(k).copied().flatten()
    }

    pub fn end_time(&self) -> f64 {
        self.final_sample.t
    }

    /// Largest type index seen.
    pub fn max_type(&self) -> usize {
        self.first_appearance.len().saturating_sub(1)
    }
}

/// Progress sink input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub stream: u64,
    pub events: u64,
    pub t: f64,
}

fn sample_of(state: &SimState, t: f64) -> Sample {
    Sample {
        t,
        n: state.n_total,
        counts: state.sparse(),
    }
}

/// Runs one simulation to its stop rule.
pub fn run_sim(config: &SimConfig) -> Result<Trajectory, SimError> {
    run_sim_with_progress(config, None)
}

pub fn run_sim_with_progress(
    config: &SimConfig,
    mut progress: Option<&mut dyn FnMut(Progress)>,
) -> Result<Trajectory, SimError> {
    let mut state = build_initial(config)?;
    let params = &config.params;
    let thin = config.thin_self_replacement;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(config.stream);

    let mut first: Vec<Option<f64>> = (0..=state.hi)
        .map(|j| (state.count(j) > 0).then_some(0.0))
        .collect();
    let mut samples = vec![sample_of(&state, 0.0)];
    let mut next_grid = config.record_spacing;
    let mut events = 0u64;
    let t_end = match config.stop {
        StopRule::Time(t) => t,
        _ => f64::INFINITY,
    };
    let target_type = match config.stop {
        StopRule::FirstType(k) => Some(k),
        _ => None,
    };

    let reached = |first: &Vec<Option<f64>>| {
        target_type.is_some_and(|k| first.get(k).copied().flatten().is_some())
    };

    let stop = loop {
        if reached(&first) {
            break StopReason::FirstType;
        }
        if let StopRule::Events(n) = config.stop {
            if events >= n {
                break StopReason::Events;
            }
        }
        if events >= config.max_events {
            let partial = Trajectory {
                final_sample: sample_of(&state, state.t),
                samples,
                first_appearance: first,
                event_count: events,
                seed: config.seed,
                stream: config.stream,
                stop: None,
            };
            return Err(SimError::EventBudgetExceeded {
                budget: config.max_events,
                t: state.t,
                partial: Box::new(partial),
            });
        }

        let total = state.total_rate(params, thin);
        let t_next = if total > 0.0 {
            let e: f64 = rng.sample(Exp1);
            state.t + e / total
        } else {
            f64::INFINITY
        };

        // Grid points before the jump see the pre-jump state.
        let grid_limit = t_next.min(t_end);
        if grid_limit.is_finite() {
            while next_grid < grid_limit || (next_grid == t_end && t_next > t_end) {
                samples.push(sample_of(&state, next_grid));
                next_grid += config.record_spacing;
            }
        }
        if t_next > t_end {
            state.t = t_end;
            break StopReason::Time;
        }
        if !t_next.is_finite() {
            break StopReason::Absorbed;
        }

        let transition = state.fire(params, &mut rng, thin, total)?;
        state.t = t_next;
        events += 1;
        if let Transition::Mutate { from } = transition {
            let k = from + 1;
            if first.len() <= k {
                first.resize(k + 1, None);
            }
            if first[k].is_none() {
                first[k] = Some(state.t);
                samples.push(sample_of(&state, state.t));
            }
        }
        if events % REFRESH_INTERVAL == 0 {
            state.refresh();
            if let Some(cb) = progress.as_mut() {
                cb(Progress {
                    stream: config.stream,
                    events,
                    t: state.t,
                });
            }
        }
    };

    let final_sample = sample_of(&state, state.t);
    if samples.last().map(|s| s.t) != Some(state.t) {
        samples.push(final_sample.clone());
    }
    Ok(Trajectory {
        samples,
        first_appearance: first,
        event_count: events,
        seed: config.seed,
        stream: config.stream,
        stop: Some(stop),
        final_sample,
    })
}

/// Outcome of one ensemble member.
#[derive(Debug, Clone)]
pub struct Replicate<R> {
    pub replicate: u64,
    pub result: Result<R, SimError>,
}

/// Runs `replicates` independent simulations in parallel. Replicate `r`
/// uses the configured seed with RNG stream `r`, so results do not depend
/// on scheduling. Output is sorted by replicate index.
pub fn run_ensemble(config: &SimConfig, replicates: u64) -> Vec<Replicate<Trajectory>> {
    ensemble_map(config, replicates, |_, t| t)
}

/// Like [`run_ensemble`] but reduces each trajectory with `f` as soon as
/// it finishes, so full trajectories need not be kept.
pub fn ensemble_map<R, F>(config: &SimConfig, replicates: u64, f: F) -> Vec<Replicate<R>>
where
    R: Send,
    F: Fn(u64, Trajectory) -> R + Sync,
{
    let mut out: Vec<Replicate<R>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut cfg = config.clone();
            cfg.stream = r;
            Replicate {
                replicate: r,
                result: run_sim(&cfg).map(|t| f(r, t)),
            }
        })
        .collect();
    out.sort_by_key(|r| r.replicate);
    out
}

/// Compact per-replicate summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub replicate: u64,
    pub first_appearance: Vec<Option<f64>>,
    /// `N(T_k)` for every observed `T_k`.
    pub n_at_first_appearance: Vec<Option<u64>>,
    pub final_sample: Sample,
    pub event_count: u64,
    pub stop: Option<StopReason>,
}

impl TrajectorySummary {
    pub fn from_trajectory(replicate: u64, traj: &Trajectory) -> Self {
        let n_at = traj
            .first_appearance
            .iter()
            .map(|tk| {
                tk.map(|tk| {
                    traj.samples
                        .iter()
                        .rev()
                        .find(|s| s.t <= tk)
                        .map_or(traj.samples[0].n, |s| s.n)
                })
            })
            .collect();
        Self {
            replicate,
            first_appearance: traj.first_appearance.clone(),
            n_at_first_appearance: n_at,
            final_sample: traj.final_sample.clone(),
            event_count: traj.event_count,
            stop: traj.stop,
        }
    }
}
