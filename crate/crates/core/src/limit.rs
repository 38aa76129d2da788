//! Deterministic piecewise-linear limit of the rescaled type abundances.
//!
//! Levels `y_j(t)` are powers of `1/μ` and time runs in units of `L/γ`.
//! Between wave events every level moves linearly with slope
//! `λ_{j−m}/γ` (clamped at zero), where `m` is the dominant type. An event
//! is either the edge type reaching level 1, which gives birth to the next
//! type, or a type ahead of the dominant one reaching the population line
//! `α + tρ/γ` and taking over.

use serde::Serialize;
use thiserror::Error;

use crate::params::{ModelParams, ParamError};
use crate::scalar::Scalar;

/// Waves shorter than this count towards the blow-up rule.
pub const BLOWUP_DELTA: f64 = 1e-12;
/// Number of consecutive short waves that flags a finite accumulation time.
pub const BLOWUP_RUN: usize = 3;
/// Tolerance used by [`LimitState::check_invariants`].
const INVARIANT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error(transparent)]
    InvalidParams(#[from] ParamError),
    #[error(
        "non-generic parameters at wave {wave}: candidates for types {first} and {second} tie \
         ({first_delta} vs {second_delta})"
    )]
    NonGenericParameters {
        wave: usize,
        first: usize,
        second: usize,
        first_delta: f64,
        second_delta: f64,
    },
    #[error("no wave can occur from this state (dominant {dominant}, edge {edge})")]
    Stalled { dominant: usize, edge: usize },
    #[error("time {t} outside the constructed path [0, {end}]")]
    OutOfHorizon { t: f64, end: f64 },
    #[error("neither a positive horizon nor a positive wave budget was given")]
    EmptyRun,
}

/// State of the limit system at an event time `s_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitState<T> {
    /// Scaled time `s_n`.
    pub s: T,
    /// Levels indexed by type; entries past the edge are zero.
    pub y: Vec<T>,
    /// Dominant type `m_n`.
    pub dominant: usize,
    /// Highest type with a positive level, `k_n`.
    pub highest: usize,
    /// Active edge type `k_n*`: `highest + 1` when `y_highest == 1`.
    pub edge: usize,
    /// Population line `α + s_n ρ/γ`.
    pub alpha_line: T,
    /// Number of waves completed so far.
    pub wave: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    /// The edge type reached level 1 and `new_type` is born.
    NewTypeBirth { new_type: usize },
    /// `new_dominant` reached the population line.
    DominanceChange { new_dominant: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveEvent<T> {
    pub index: usize,
    /// Event time `s_{n+1}`.
    pub time: T,
    pub kind: EventKind,
    /// Waiting time `Δ_n`.
    pub delta: T,
    /// Candidate waiting times `δ_{n,j}` keyed by type.
    pub candidates: Vec<(usize, T)>,
}

/// Why [`run_limit`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Truncation<T> {
    Horizon,
    MaxWaves,
    /// Waves became shorter than [`BLOWUP_DELTA`] repeatedly; `tstar_estimate`
    /// is the partial sum of all waiting times.
    BlowUpSuspected { tstar_estimate: T },
}

/// Linear piece of one `y_j`, valid from `start` until the next piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment<T> {
    pub start: T,
    pub value: T,
    pub slope: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewisePath<T> {
    pub params: ModelParams<T>,
    pub initial: LimitState<T>,
    /// Pieces per type. A type without pieces, or before its first piece,
    /// sits at zero.
    pub segments: Vec<Vec<Segment<T>>>,
    pub events: Vec<WaveEvent<T>>,
    /// Final state reached by the construction.
    pub last: LimitState<T>,
    pub truncation: Truncation<T>,
}

/// Birth time of type `k` and the gap to the previous birth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BirthTime<T> {
    pub k: usize,
    pub time: T,
    pub gap: T,
}

/// Slope of `y_j` while type `m` dominates.
#[inline]
fn slope<T: Scalar>(params: &ModelParams<T>, j: usize, m: usize) -> T {
    params.lambda_growth(j as i64 - m as i64) / params.gamma
}

/// `y_j(0) = (α − j)^+` with the edge rule applied.
pub fn init_state<T: Scalar>(params: &ModelParams<T>) -> Result<LimitState<T>, LimitError> {
    params.validate()?;
    let alpha = params.alpha;
    if alpha == alpha.floor() {
        log::warn!("integer alpha = {alpha} sits on the boundary of the generic set");
    }
    let top = params.alpha_floor().max(0) as usize + 1;
    let y: Vec<T> = (0..=top)
        .map(|j| (alpha - T::from_int(j as i64)).max(T::zero()))
        .collect();
    let highest = y.iter().rposition(|&v| v > T::zero()).unwrap_or(0);
    let edge = if y[highest] == T::one() {
        highest + 1
    } else {
        highest
    };
    let mut state = LimitState {
        s: T::zero(),
        y,
        dominant: 0,
        highest,
        edge,
        alpha_line: alpha,
        wave: 0,
    };
    state.ensure_len();
    Ok(state)
}

impl<T: Scalar> LimitState<T> {
    fn ensure_len(&mut self) {
        if self.y.len() < self.edge + 2 {
            self.y.resize(self.edge + 2, T::zero());
        }
    }

    #[inline]
    pub fn level(&self, j: usize) -> T {
        self.y.get(j).copied().unwrap_or_else(T::zero)
    }

    /// Checks the structural conditions that must hold at every event time.
    pub fn check_invariants(&self) -> Result<(), String> {
        let tol = T::lit(INVARIANT_TOL);
        let m = self.dominant;
        if self.level(m) != self.alpha_line {
            return Err(format!(
                "dominant level {} differs from the population line {}",
                self.level(m),
                self.alpha_line
            ));
        }
        if let Some(j) = (m + 1..self.y.len()).find(|&j| self.level(j) >= self.alpha_line - tol) {
            return Err(format!("type {j} above dominant {m} sits on the population line"));
        }
        for j in m..=self.highest {
            if self.level(j) <= T::zero() {
                return Err(format!("type {j} between dominant and highest is empty"));
            }
        }
        if let Some(j) = (self.highest + 1..self.y.len()).find(|&j| self.level(j) != T::zero()) {
            return Err(format!("type {j} beyond the highest type is positive"));
        }
        for j in 0..=self.highest {
            if self.level(j + 1) < self.level(j) - T::one() - tol {
                return Err(format!("gap condition fails between types {j} and {}", j + 1));
            }
        }
        if self.level(self.highest) > T::one() + tol {
            return Err(format!("highest type {} above level 1", self.highest));
        }
        let expected_edge = if self.level(self.highest) == T::one() {
            self.highest + 1
        } else {
            self.highest
        };
        if self.edge != expected_edge {
            return Err(format!("edge {} but expected {expected_edge}", self.edge));
        }
        Ok(())
    }
}

/// Candidate waiting times `δ_{n,j}` for `m < j ≤ k*`.
///
/// Fixation candidates are measured against the moving population line, so
/// their denominator is the excess growth `λ_{j−m} − ρ`. When the edge
/// coincides with the dominant type (possible only for `α < 1` in a growing
/// population) the edge candidate uses the population growth `λ_0 = ρ`.
pub fn wave_candidates<T: Scalar>(
    params: &ModelParams<T>,
    state: &LimitState<T>,
) -> Vec<(usize, T)> {
    let m = state.dominant;
    let ks = state.edge;
    let mut out = Vec::with_capacity(ks.saturating_sub(m) + 1);
    for j in m + 1..ks {
        let d = (state.alpha_line - state.level(j)) * params.gamma
            / params.excess_growth(j as i64 - m as i64);
        out.push((j, d));
    }
    let edge_rate = params.lambda_growth(ks as i64 - m as i64);
    if edge_rate > T::zero() {
        out.push((ks, (T::one() - state.level(ks)) * params.gamma / edge_rate));
    }
    out
}

/// Performs one inductive step of the limit construction.
pub fn advance_wave<T: Scalar>(
    params: &ModelParams<T>,
    state: &LimitState<T>,
) -> Result<(WaveEvent<T>, LimitState<T>), LimitError> {
    let candidates = wave_candidates(params, state);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[a].1.partial_cmp(&candidates[b].1).expect("finite"));
    let Some(&best) = order.first() else {
        return Err(LimitError::Stalled {
            dominant: state.dominant,
            edge: state.edge,
        });
    };
    let (winner, delta) = candidates[best];
    if let Some(&second) = order.get(1) {
        let (other, d2) = candidates[second];
        if d2 - delta <= T::tie_tolerance() * delta.abs().max(T::min_positive_value()) {
            return Err(LimitError::NonGenericParameters {
                wave: state.wave,
                first: winner,
                second: other,
                first_delta: delta.as_f64(),
                second_delta: d2.as_f64(),
            });
        }
    }

    let m = state.dominant;
    let ks = state.edge;
    let mut next = state.clone();
    next.s = state.s + delta;
    next.alpha_line = state.alpha_line + delta * params.rho / params.gamma;
    next.wave = state.wave + 1;
    for j in 0..=ks {
        let v = state.level(j);
        if v == T::zero() && j < m {
            continue;
        }
        next.y[j] = (v + delta * slope(params, j, m)).max(T::zero());
    }
    next.y[m] = next.alpha_line;

    let kind = if winner == ks {
        next.y[ks] = T::one();
        next.highest = ks;
        next.edge = ks + 1;
        EventKind::NewTypeBirth { new_type: ks + 1 }
    } else {
        next.y[winner] = next.alpha_line;
        next.dominant = winner;
        next.highest = next.y.iter().rposition(|&v| v > T::zero()).unwrap_or(winner);
        next.edge = next.highest;
        EventKind::DominanceChange {
            new_dominant: winner,
        }
    };
    next.ensure_len();
    debug_assert!(
        next.check_invariants().is_ok(),
        "{:?}",
        next.check_invariants()
    );

    let event = WaveEvent {
        index: state.wave,
        time: next.s,
        kind,
        delta,
        candidates,
    };
    Ok((event, next))
}

fn push_segment<T: Scalar>(pieces: &mut Vec<Segment<T>>, seg: Segment<T>) {
    if let Some(last) = pieces.last_mut() {
        if last.start == seg.start {
            *last = seg;
            return;
        }
        if last.slope == T::zero() && seg.slope == T::zero() && last.value == seg.value {
            return;
        }
    }
    pieces.push(seg);
}

/// Records the pieces of every level on `[state.s, state.s + delta]`.
fn record_interval<T: Scalar>(
    params: &ModelParams<T>,
    state: &LimitState<T>,
    delta: T,
    segments: &mut Vec<Vec<Segment<T>>>,
) {
    let m = state.dominant;
    if segments.len() <= state.edge {
        segments.resize_with(state.edge + 1, Vec::new);
    }
    for (j, pieces) in segments.iter_mut().enumerate().take(state.edge + 1) {
        let v = state.level(j);
        let mut k = slope(params, j, m);
        if v == T::zero() && k <= T::zero() {
            k = T::zero();
        }
        push_segment(
            pieces,
            Segment {
                start: state.s,
                value: v,
                slope: k,
            },
        );
        if k < T::zero() {
            let hit = state.s + v / (-k);
            if hit < state.s + delta {
                push_segment(
                    pieces,
                    Segment {
                        start: hit,
                        value: T::zero(),
                        slope: T::zero(),
                    },
                );
            }
        }
    }
}

/// Iterates [`advance_wave`] until `horizon` (scaled time) is passed,
/// `max_waves` waves have been performed, or the blow-up rule fires.
pub fn run_limit<T: Scalar>(
    params: &ModelParams<T>,
    horizon: T,
    max_waves: usize,
) -> Result<PiecewisePath<T>, LimitError> {
    if !(horizon > T::zero()) && max_waves == 0 {
        return Err(LimitError::EmptyRun);
    }
    let initial = init_state(params)?;
    let mut segments: Vec<Vec<Segment<T>>> = initial
        .y
        .iter()
        .map(|&v| {
            if v > T::zero() {
                vec![Segment {
                    start: T::zero(),
                    value: v,
                    slope: T::zero(),
                }]
            } else {
                Vec::new()
            }
        })
        .collect();
    let mut events = Vec::new();
    let mut state = initial.clone();
    let mut short_run = 0usize;
    let blowup = T::lit(BLOWUP_DELTA);
    let truncation = loop {
        if state.s >= horizon {
            break Truncation::Horizon;
        }
        if events.len() >= max_waves {
            break Truncation::MaxWaves;
        }
        let (event, next) = advance_wave(params, &state)?;
        record_interval(params, &state, event.delta, &mut segments);
        short_run = if event.delta < blowup { short_run + 1 } else { 0 };
        events.push(event);
        state = next;
        if short_run >= BLOWUP_RUN {
            break Truncation::BlowUpSuspected {
                tstar_estimate: state.s,
            };
        }
    };
    // Levels at the final time are the values of the last recorded pieces;
    // a terminal flat piece keeps `eval_path` exact at `end`.
    if !events.is_empty() {
        for (j, pieces) in segments.iter_mut().enumerate() {
            if pieces.is_empty() && state.level(j) == T::zero() {
                continue;
            }
            push_segment(
                pieces,
                Segment {
                    start: state.s,
                    value: state.level(j),
                    slope: T::zero(),
                },
            );
        }
    }
    Ok(PiecewisePath {
        params: *params,
        initial,
        segments,
        events,
        last: state,
        truncation,
    })
}

impl<T: Scalar> PiecewisePath<T> {
    /// Time up to which the path is constructed.
    #[inline]
    pub fn end(&self) -> T {
        self.last.s
    }

    /// Number of types with at least one piece.
    pub fn type_count(&self) -> usize {
        self.segments.len()
    }

    /// Exact evaluation of `y_j(t)`.
    pub fn eval(&self, j: usize, t: T) -> Result<T, LimitError> {
        let end = self.end();
        let slack = T::lit(1e-12) * end.max(T::one());
        if !(t >= T::zero() && t <= end + slack) {
            return Err(LimitError::OutOfHorizon {
                t: t.as_f64(),
                end: end.as_f64(),
            });
        }
        let Some(pieces) = self.segments.get(j) else {
            return Ok(T::zero());
        };
        let idx = pieces.partition_point(|seg| seg.start <= t);
        if idx == 0 {
            return Ok(T::zero());
        }
        let seg = pieces[idx - 1];
        Ok((seg.value + seg.slope * (t - seg.start)).max(T::zero()))
    }

    /// Population line `α + tρ/γ`.
    #[inline]
    pub fn population_line(&self, t: T) -> T {
        self.params.alpha + t * self.params.rho / self.params.gamma
    }

    /// Event times `s_1, s_2, …`.
    pub fn event_times(&self) -> Vec<T> {
        self.events.iter().map(|e| e.time).collect()
    }

    /// Scaled birth times `b(k)` for every type born on the path.
    ///
    /// A type whose parent starts at or above level 1 is present from time
    /// zero; every later type is born when its parent first climbs to
    /// level 1, which is exactly a [`EventKind::NewTypeBirth`] event.
    pub fn birth_times(&self) -> Vec<BirthTime<T>> {
        let mut times: Vec<(usize, T)> = (1..=self.initial.edge).map(|k| (k, T::zero())).collect();
        times.extend(self.events.iter().filter_map(|e| match e.kind {
            EventKind::NewTypeBirth { new_type } => Some((new_type, e.time)),
            EventKind::DominanceChange { .. } => None,
        }));
        let mut prev = T::zero();
        times
            .into_iter()
            .map(|(k, time)| {
                let gap = time - prev;
                prev = time;
                BirthTime { k, time, gap }
            })
            .collect()
    }

    /// Birth time of type `k`, if it is born on the path.
    pub fn birth_time(&self, k: usize) -> Option<T> {
        self.birth_times().into_iter().find(|b| b.k == k).map(|b| b.time)
    }

    /// Levels of every type at time `t`.
    pub fn levels_at(&self, t: T) -> Result<Vec<T>, LimitError> {
        (0..self.type_count()).map(|j| self.eval(j, t)).collect()
    }
}

/// Free-function form of [`PiecewisePath::eval`].
pub fn eval_path<T: Scalar>(path: &PiecewisePath<T>, j: usize, t: T) -> Result<T, LimitError> {
    path.eval(j, t)
}

/// Free-function form of [`PiecewisePath::birth_times`].
pub fn birth_times<T: Scalar>(path: &PiecewisePath<T>) -> Vec<BirthTime<T>> {
    path.birth_times()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fixed(gamma: f64, alpha: f64) -> ModelParams<f64> {
        ModelParams::fixed(gamma, alpha, 1e-3).unwrap()
    }

    #[test]
    fn init_regime_one() {
        let s = init_state(&fixed(0.01, 1.3)).unwrap();
        assert_abs_diff_eq!(s.y[0], 1.3);
        assert_abs_diff_eq!(s.y[1], 0.3, epsilon = 1e-15);
        assert_eq!(s.level(2), 0.0);
        assert_eq!((s.dominant, s.highest, s.edge), (0, 1, 1));
        s.check_invariants().unwrap();
    }

    #[test]
    fn init_many_types() {
        let s = init_state(&fixed(0.1, 3.2)).unwrap();
        for (j, want) in [3.2, 2.2, 1.2, 0.2].iter().enumerate() {
            assert_abs_diff_eq!(s.y[j], *want, epsilon = 1e-14);
        }
        assert_eq!(s.highest, 3);
        assert_eq!(s.edge, 3);
    }

    #[test]
    fn init_integer_alpha_promotes_edge() {
        let s = init_state(&fixed(0.01, 2.0)).unwrap();
        assert_eq!(s.y[..3], [2.0, 1.0, 0.0]);
        assert_eq!((s.highest, s.edge), (1, 2));
        s.check_invariants().unwrap();
    }

    #[test]
    fn init_rejects_bad_params() {
        let p = ModelParams {
            gamma: 0.01,
            alpha: 0.8,
            rho: 0.0,
            mu: 1e-3,
        };
        assert!(matches!(init_state(&p), Err(LimitError::InvalidParams(_))));
    }

    #[test]
    fn regime_one_first_three_waves() {
        let p = fixed(0.01, 1.3);
        let s0 = init_state(&p).unwrap();
        let (e0, s1) = advance_wave(&p, &s0).unwrap();
        assert_abs_diff_eq!(e0.delta, 0.7, epsilon = 1e-14);
        assert_eq!(e0.kind, EventKind::NewTypeBirth { new_type: 2 });
        let (e1, s2) = advance_wave(&p, &s1).unwrap();
        assert_abs_diff_eq!(e1.delta, 0.3, epsilon = 1e-14);
        assert_eq!(e1.kind, EventKind::DominanceChange { new_dominant: 1 });
        assert_abs_diff_eq!(s2.y[2], 0.603, epsilon = 1e-13);
        let (e2, _) = advance_wave(&p, &s2).unwrap();
        assert_abs_diff_eq!(e2.delta, 0.397, epsilon = 1e-13);
        assert_eq!(e2.kind, EventKind::NewTypeBirth { new_type: 3 });
    }

    #[test]
    fn ties_abort() {
        // Types 1 and 2 both reach the population line after 0.05.
        let p = fixed(0.01, 1.9);
        let y2 = 1.9 - 0.05 * p.gamma_int(2) / p.gamma;
        let state = LimitState {
            s: 0.0,
            y: vec![1.9, 1.85, y2, 0.8, 0.0],
            dominant: 0,
            highest: 3,
            edge: 3,
            alpha_line: 1.9,
            wave: 7,
        };
        state.check_invariants().unwrap();
        match advance_wave(&p, &state) {
            Err(LimitError::NonGenericParameters { wave, first, second, .. }) => {
                assert_eq!(wave, 7);
                assert_eq!([first.min(second), first.max(second)], [1, 2]);
            }
            other => panic!("expected tie, got {other:?}"),
        }
    }

    #[test]
    fn eval_matches_table_values() {
        let path = run_limit(&fixed(0.01, 1.3), 3.0, 10_000).unwrap();
        assert_abs_diff_eq!(path.eval(0, 0.0).unwrap(), 1.3);
        assert_abs_diff_eq!(path.eval(2, 1.0).unwrap(), 0.603, epsilon = 1e-12);
        assert_eq!(path.eval(1_000_000, 1.0).unwrap(), 0.0);
        assert!(matches!(path.eval(0, 1e6), Err(LimitError::OutOfHorizon { .. })));
        assert!(matches!(path.eval(0, -1.0), Err(LimitError::OutOfHorizon { .. })));
    }

    #[test]
    fn regime_one_event_times() {
        let path = run_limit(&fixed(0.01, 1.3), 3.0, 10_000).unwrap();
        let want = [0.7, 1.0, 1.397, 1.697, 2.094];
        for (got, want) in path.event_times().iter().zip(want) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_eq!(path.truncation, Truncation::Horizon);
    }

    #[test]
    fn birth_time_conventions() {
        let path = run_limit(&fixed(0.01, 1.3), 5.0, 10_000).unwrap();
        let b = path.birth_times();
        assert_eq!(b[0].k, 1);
        assert_eq!(b[0].time, 0.0);
        assert_abs_diff_eq!(b[1].time, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(b[1].gap, 0.7, epsilon = 1e-12);
        for w in &b[2..] {
            assert_abs_diff_eq!(w.gap, 0.697, epsilon = 1e-12);
        }

        let path = run_limit(&fixed(0.01, 1.8), 3.0, 10_000).unwrap();
        assert_abs_diff_eq!(path.birth_time(2).unwrap(), 0.2, epsilon = 1e-12);
        let b = path.birth_times();
        assert_abs_diff_eq!(b[2].gap, 0.4975124378109453, epsilon = 1e-12);
        assert_abs_diff_eq!(b[3].gap, 0.3439962377168882, epsilon = 1e-12);

        let path = run_limit(&fixed(0.1, 3.2), 1.0, 10_000).unwrap();
        for k in 1..=3 {
            assert_eq!(path.birth_time(k), Some(0.0));
        }
        assert!(path.birth_time(4).unwrap() > 0.0);
    }

    #[test]
    fn zero_horizon_path_is_initial_state() {
        let path = run_limit(&fixed(0.01, 1.3), 0.0, 10).unwrap();
        assert!(path.events.is_empty());
        assert_abs_diff_eq!(path.eval(1, 0.0).unwrap(), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn f32_path_tracks_f64() {
        let p64 = fixed(0.01, 1.3);
        let p32: ModelParams<f32> = p64.cast();
        let a = run_limit(&p64, 3.0, 100).unwrap();
        let b = run_limit(&p32, 3.0, 100).unwrap();
        for (x, y) in a.event_times().iter().zip(b.event_times()) {
            assert!((x - y as f64).abs() < 1e-4);
        }
    }
}
