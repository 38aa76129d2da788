//! Links simulations to the limit: rescaling, convergence reports, the
//! linear-in-`j` waiting time estimate, sweep-shape comparison and type
//! distribution snapshots.

pub mod ode;
pub mod stats;

use serde::Serialize;
use thiserror::Error;

use crate::limit::{LimitError, PiecewisePath};
use crate::params::{ModelParams, ParamError};
use crate::sim::{SimConfig, StopRule, Trajectory};

use self::ode::{centred_sweep, OdeError};
use self::stats::Summary;

/// Default half-width of the exclusion zone around `t = 0` and around
/// limit event times, in scaled units.
pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("window [{lo}, {hi}] comes within {epsilon} of the event at {event}")]
    WindowOverlapsEvent {
        lo: f64,
        hi: f64,
        event: f64,
        epsilon: f64,
    },
    #[error("window [{lo}, {hi}] is not inside (0, {end})")]
    WindowOutsidePath { lo: f64, hi: f64, end: f64 },
    #[error("mu grid must be strictly decreasing")]
    UnorderedGrid,
    #[error("log(gamma/mu) must be positive: gamma = {gamma}, mu = {mu}")]
    DegenerateLog { gamma: f64, mu: f64 },
    #[error("population sizes must be at least 1")]
    EmptyPopulation,
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("time {t} outside [0, {end}]")]
    OutOfHorizon { t: f64, end: f64 },
}

/// A trajectory in `(1/L)·log⁺` coordinates and scaled time `tγ/L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaledTrajectory {
    pub log_scale: f64,
    pub t: Vec<f64>,
    /// `F(t) = ln N / L`.
    pub f: Vec<f64>,
    /// `y[j][i] = ln⁺ X_j(t_i) / L`.
    pub y: Vec<Vec<f64>>,
    /// `γT_k/L`.
    pub first_appearance: Vec<Option<f64>>,
    /// Scaled end of the simulation.
    pub end: f64,
}

impl RescaledTrajectory {
    /// Scaled gap `γ(T_k − T_{k−1})/L`.
    pub fn gap(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return None;
        }
        let a = self.first_appearance.get(k - 1).copied().flatten()?;
        let b = self.first_appearance.get(k).copied().flatten()?;
        Some(b - a)
    }

    pub fn level(&self, j: usize, i: usize) -> f64 {
        self.y.get(j).map_or(0.0, |v| v[i])
    }
}

/// `ln⁺ x = max(ln x, 0)`, with `ln⁺ 0 = 0`.
#[inline]
pub fn log_plus(x: u64) -> f64 {
    if x <= 1 {
        0.0
    } else {
        (x as f64).ln()
    }
}

pub fn rescale(traj: &Trajectory, params: &ModelParams<f64>) -> Result<RescaledTrajectory, AnalysisError> {
    if traj.samples.is_empty() {
        return Err(AnalysisError::EmptyTrajectory);
    }
    let l = params.log_scale()?.log_scale;
    let to_scaled = |t: f64| t * params.gamma / l;
    let types = traj
        .samples
        .iter()
        .filter_map(|s| s.counts.last().map(|(j, _)| j + 1))
        .max()
        .unwrap_or(0)
        .max(traj.first_appearance.len());
    let mut y = vec![Vec::with_capacity(traj.samples.len()); types];
    let mut t = Vec::with_capacity(traj.samples.len());
    let mut f = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        t.push(to_scaled(s.t));
        f.push(log_plus(s.n) / l);
        let mut row = vec![0.0; types];
        for &(j, c) in &s.counts {
            row[j] = log_plus(c) / l;
        }
        for (j, v) in row.into_iter().enumerate() {
            y[j].push(v);
        }
    }
    Ok(RescaledTrajectory {
        log_scale: l,
        t,
        f,
        y,
        first_appearance: traj.first_appearance.iter().map(|o| o.map(to_scaled)).collect(),
        end: to_scaled(traj.end_time()),
    })
}

/// Checks that `[lo, hi]` sits inside `(0, end)` and stays `epsilon` away
/// from `t = 0` and from every event of the path.
pub fn check_window(path: &PiecewisePath<f64>, window: (f64, f64), epsilon: f64) -> Result<(), AnalysisError> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi >= lo && hi < path.end()) {
        return Err(AnalysisError::WindowOutsidePath { lo, hi, end: path.end() });
    }
    for event in std::iter::once(0.0).chain(path.event_times()) {
        if event > lo - epsilon && event < hi + epsilon {
            return Err(AnalysisError::WindowOverlapsEvent { lo, hi, event, epsilon });
        }
    }
    Ok(())
}

/// `sup |Y_j − y_j|` over the samples inside `window`; `None` if the
/// trajectory has no samples there.
pub fn window_deviation(
    traj: &RescaledTrajectory,
    path: &PiecewisePath<f64>,
    j: usize,
    window: (f64, f64),
) -> Result<Option<f64>, AnalysisError> {
    let mut best: Option<f64> = None;
    for (i, &t) in traj.t.iter().enumerate() {
        if t < window.0 || t > window.1 {
            continue;
        }
        let d = (traj.level(j, i) - path.eval(j, t)?).abs();
        best = Some(best.map_or(d, |b: f64| b.max(d)));
    }
    Ok(best)
}

/// Replicates simulated at one mutation rate.
#[derive(Debug, Clone)]
pub struct MuCell {
    pub mu: f64,
    pub replicates: Vec<RescaledTrajectory>,
}

/// What to measure in [`compare`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSpec {
    pub types: Vec<usize>,
    pub windows: Vec<(f64, f64)>,
    /// Types whose scaled birth time is compared with `b(k)`.
    pub births: Vec<usize>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowStat {
    pub ty: usize,
    pub window: (f64, f64),
    pub deviation: Option<Summary>,
    /// Replicates without samples in the window.
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirthStat {
    pub k: usize,
    pub limit_time: f64,
    /// `|γT_k/L − b(k)|`.
    pub error: Option<Summary>,
    pub limit_gap: Option<f64>,
    /// Scaled gaps `γ(T_k − T_{k−1})/L`.
    pub gap: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub mu: f64,
    pub log_scale: f64,
    pub replicates: usize,
    pub windows: Vec<WindowStat>,
    pub births: Vec<BirthStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub spec: CompareSpec,
    pub cells: Vec<CellReport>,
    /// Median window deviation non-increasing along the grid for every
    /// tracked type and window.
    pub deviation_monotone: bool,
    /// Median birth-time error non-increasing along the grid for every
    /// tracked type.
    pub birth_error_monotone: bool,
    pub consistent_with_convergence: bool,
}

fn non_increasing(xs: impl Iterator<Item = Option<f64>>) -> bool {
    let v: Vec<Option<f64>> = xs.collect();
    v.iter().all(Option::is_some) && v.windows(2).all(|w| w[1].unwrap() <= w[0].unwrap())
}

/// Compares replicate ensembles over a decreasing `μ` grid with a limit path.
pub fn compare(cells: &[MuCell], path: &PiecewisePath<f64>, spec: &CompareSpec) -> Result<ConvergenceReport, AnalysisError> {
    if cells.windows(2).any(|w| !(w[1].mu < w[0].mu)) {
        return Err(AnalysisError::UnorderedGrid);
    }
    for &w in &spec.windows {
        check_window(path, w, spec.epsilon)?;
    }
    let birth_times = path.birth_times();
    let mut out = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut windows = Vec::new();
        for &ty in &spec.types {
            for &window in &spec.windows {
                let mut devs = Vec::new();
                for r in &cell.replicates {
                    if let Some(d) = window_deviation(r, path, ty, window)? {
                        devs.push(d);
                    }
                }
                windows.push(WindowStat {
                    ty,
                    window,
                    missing: cell.replicates.len() - devs.len(),
                    deviation: Summary::of(&devs),
                });
            }
        }
        let mut births = Vec::new();
        for &k in &spec.births {
            let Some(bt) = birth_times.iter().find(|b| b.k == k) else {
                continue;
            };
            let errs: Vec<f64> = cell
                .replicates
                .iter()
                .filter_map(|r| r.first_appearance.get(k).copied().flatten())
                .map(|t| (t - bt.time).abs())
                .collect();
            let gaps: Vec<f64> = cell.replicates.iter().filter_map(|r| r.gap(k)).collect();
            births.push(BirthStat {
                k,
                limit_time: bt.time,
                error: Summary::of(&errs),
                limit_gap: Some(bt.gap),
                gap: Summary::of(&gaps),
            });
        }
        out.push(CellReport {
            mu: cell.mu,
            log_scale: cell.replicates.first().map_or(f64::NAN, |r| r.log_scale),
            replicates: cell.replicates.len(),
            windows,
            births,
        });
    }
    let n_windows = spec.types.len() * spec.windows.len();
    let deviation_monotone = (0..n_windows)
        .all(|i| non_increasing(out.iter().map(|c| c.windows[i].deviation.map(|s| s.median))));
    let birth_error_monotone = spec.births.iter().all(|&k| {
        non_increasing(out.iter().map(|c| {
            c.births
                .iter()
                .find(|b| b.k == k)
                .and_then(|b| b.error.map(|s| s.median))
        }))
    });
    Ok(ConvergenceReport {
        spec: spec.clone(),
        cells: out,
        deviation_monotone,
        birth_error_monotone,
        consistent_with_convergence: deviation_monotone,
    })
}

/// Simulates `replicates` runs at mutation rate `mu` up to the first
/// appearance of type `stop_type` and rescales them. Failed replicates are
/// dropped and counted.
pub fn simulate_cell(
    params: &ModelParams<f64>,
    mu: f64,
    replicates: u64,
    seed: u64,
    stop_type: usize,
    record_spacing: f64,
) -> Result<(MuCell, usize), AnalysisError> {
    let p = ModelParams::new(params.gamma, params.alpha, params.rho, mu)?;
    let cfg = SimConfig::new(p, StopRule::FirstType(stop_type))
        .with_seed(seed)
        .with_record_spacing(record_spacing);
    let runs = crate::sim::ensemble_map(&cfg, replicates, |_, t| rescale(&t, &p));
    let mut ok = Vec::new();
    let mut failed = 0;
    for r in runs {
        match r.result {
            Ok(Ok(t)) => ok.push(t),
            _ => failed += 1,
        }
    }
    Ok((MuCell { mu, replicates: ok }, failed))
}

/// Waiting time to the `j`-th driver from the linear approximation
/// `s_j = j (ln(γ/μ))² / (γ ln(N(0)·N(T)))`, in raw time. With
/// `moran_adjust`, `γ` and `μ` are halved first to account for the Moran
/// model's doubled generation rate.
pub fn beerenwinkel_estimate(
    j: u32,
    params: &ModelParams<f64>,
    n0: u64,
    n_at_t: u64,
    moran_adjust: bool,
) -> Result<f64, AnalysisError> {
    let (gamma, mu) = if moran_adjust {
        (params.gamma / 2.0, params.mu / 2.0)
    } else {
        (params.gamma, params.mu)
    };
    if !(gamma > mu) {
        return Err(AnalysisError::DegenerateLog { gamma, mu });
    }
    if n0 == 0 || n_at_t == 0 {
        return Err(AnalysisError::EmptyPopulation);
    }
    let lg = (gamma / mu).ln();
    let ln_n = (n0 as f64).ln() + (n_at_t as f64).ln();
    if ln_n <= 0.0 {
        return Err(AnalysisError::EmptyPopulation);
    }
    Ok(j as f64 * lg * lg / (gamma * ln_n))
}

/// Normalised type distribution at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    /// `(type, probability)` for types with positive weight, ascending.
    pub probs: Vec<(usize, f64)>,
}

impl Snapshot {
    pub fn prob(&self, j: usize) -> f64 {
        self.probs.iter().find(|(t, _)| *t == j).map_or(0.0, |(_, p)| *p)
    }
}

/// Type distribution of a simulated trajectory at raw times `times`.
pub fn trajectory_snapshots(traj: &Trajectory, times: &[f64]) -> Result<Vec<Snapshot>, AnalysisError> {
    let end = traj.end_time();
    times
        .iter()
        .map(|&t| {
            if !(t >= 0.0 && t <= end) {
                return Err(AnalysisError::OutOfHorizon { t, end });
            }
            let idx = traj.samples.partition_point(|s| s.t <= t);
            let s = &traj.samples[idx.max(1) - 1];
            let n = s.n as f64;
            Ok(Snapshot {
                t,
                probs: s.counts.iter().map(|&(j, c)| (j, c as f64 / n)).collect(),
            })
        })
        .collect()
}

/// Type distribution of a limit path at scaled times `times`, with weights
/// `exp(L·y_j)` over types with `y_j > 0`.
pub fn path_snapshots(path: &PiecewisePath<f64>, log_scale: f64, times: &[f64]) -> Result<Vec<Snapshot>, AnalysisError> {
    times
        .iter()
        .map(|&t| {
            let levels = path.levels_at(t)?;
            let top = levels.iter().copied().fold(0.0, f64::max);
            let w: Vec<(usize, f64)> = levels
                .iter()
                .enumerate()
                .filter(|(_, &y)| y > 0.0)
                .map(|(j, &y)| (j, (log_scale * (y - top)).exp()))
                .collect();
            let total: f64 = w.iter().map(|(_, x)| x).sum();
            Ok(Snapshot {
                t,
                probs: w.into_iter().map(|(j, x)| (j, x / total)).collect(),
            })
        })
        .collect()
}

/// `max_j |b(j + shift) − a(j)|` over all types in either snapshot.
pub fn shift_discrepancy(a: &Snapshot, b: &Snapshot, shift: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for &(j, p) in &a.probs {
        worst = worst.max((b.prob(j + shift) - p).abs());
    }
    for &(j, p) in &b.probs {
        let pa = if j >= shift { a.prob(j - shift) } else { 0.0 };
        worst = worst.max((p - pa).abs());
    }
    worst
}

/// Result of aligning one simulated sweep with the sweep ODE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepAlignment {
    /// Raw time of the first 50% crossing.
    pub crossing: f64,
    /// Sup-distance between simulated and ODE frequency on the 5–95% part
    /// of the sweep.
    pub sup_error: f64,
    pub points: usize,
}

/// Aligns a sampled frequency path `(t, r)` at its first 50% crossing with
/// the sweep ODE through `1/2` and measures the sup-error between the last
/// sample below `lo` before the crossing and the first above `hi` after it.
pub fn sweep_alignment_error(
    series: &[(f64, f64)],
    lambda: f64,
    gamma_rel: f64,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<Option<SweepAlignment>, AnalysisError> {
    let Some(c) = series.iter().position(|&(_, r)| r >= 0.5) else {
        return Ok(None);
    };
    if c == 0 {
        return Ok(None);
    }
    let (t0, r0) = series[c - 1];
    let (t1, r1) = series[c];
    let crossing = t0 + (0.5 - r0) / (r1 - r0) * (t1 - t0);
    let start = series[..c].iter().rposition(|&(_, r)| r < lo).map_or(0, |i| i + 1);
    let stop = series[c..].iter().position(|&(_, r)| r > hi).map_or(series.len(), |i| c + i);
    let span = series[start..stop]
        .iter()
        .map(|&(t, _)| (t - crossing).abs())
        .fold(0.0, f64::max)
        + step;
    let sol = centred_sweep(lambda, gamma_rel, span, step)?;
    let mut sup: f64 = 0.0;
    for &(t, r) in &series[start..stop] {
        let model = sol.at(t - crossing).expect("span covers the window");
        sup = sup.max((r - model).abs());
    }
    Ok(Some(SweepAlignment {
        crossing,
        sup_error: sup,
        points: stop - start,
    }))
}

/// Frequency of type `j` in every sample of a trajectory.
pub fn frequency_series(traj: &Trajectory, j: usize) -> Vec<(f64, f64)> {
    traj.samples
        .iter()
        .map(|s| (s.t, s.count(j) as f64 / s.n as f64))
        .collect()
}

/// Frequency of type `b` among types `a` and `b` only, `x_b/(x_a + x_b)`,
/// for every sample where either is present. Other types (e.g. later
/// mutants) do not enter the denominator.
pub fn pair_frequency_series(traj: &Trajectory, a: usize, b: usize) -> Vec<(f64, f64)> {
    traj.samples
        .iter()
        .filter_map(|s| {
            let (xa, xb) = (s.count(a) as f64, s.count(b) as f64);
            (xa + xb > 0.0).then(|| (s.t, xb / (xa + xb)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::run_limit;
    use crate::sim::{run_sim, InitialPopulation, Sample};
    use approx::assert_abs_diff_eq;

    fn regime1() -> PiecewisePath<f64> {
        let p = ModelParams::fixed(0.01, 1.3, 1e-3).unwrap();
        run_limit(&p, 10.0, 10_000).unwrap()
    }

    fn traj_from(samples: Vec<Sample>) -> Trajectory {
        Trajectory {
            final_sample: samples.last().unwrap().clone(),
            first_appearance: vec![Some(0.0)],
            samples,
            event_count: 0,
            seed: 0,
            stream: 0,
            stop: None,
        }
    }

    #[test]
    fn rescale_basic_points() {
        let p = ModelParams::fixed(0.1, 1.3, 1e-3).unwrap();
        let tr = traj_from(vec![
            Sample { t: 0.0, n: 7944, counts: vec![(0, 7944)] },
            Sample { t: 10.0, n: 7944, counts: vec![(0, 7943), (1, 1)] },
        ]);
        let r = rescale(&tr, &p).unwrap();
        assert_abs_diff_eq!(r.y[0][0], 1.3, epsilon = 1e-3);
        assert_abs_diff_eq!(r.f[0], 1.3, epsilon = 1e-3);
        assert_eq!(r.y[1][1], 0.0);
        assert_eq!(r.y[1][0], 0.0);
        assert_abs_diff_eq!(r.t[1], 10.0 * 0.1 / 1000f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn self_comparison_is_zero() {
        let path = regime1();
        let l = 1000f64.ln();
        let t: Vec<f64> = (1..200).map(|i| i as f64 * 0.02).collect();
        let y: Vec<Vec<f64>> = (0..path.type_count())
            .map(|j| t.iter().map(|&s| path.eval(j, s).unwrap()).collect())
            .collect();
        let fake = RescaledTrajectory {
            log_scale: l,
            f: vec![1.3; t.len()],
            first_appearance: vec![],
            end: 4.0,
            t,
            y,
        };
        let spec = CompareSpec {
            types: vec![0, 1, 2],
            windows: vec![(0.1, 0.6), (1.1, 1.3)],
            births: vec![],
            epsilon: DEFAULT_EPSILON,
        };
        let cells = [MuCell { mu: 1e-3, replicates: vec![fake] }];
        let rep = compare(&cells, &path, &spec).unwrap();
        for w in &rep.cells[0].windows {
            assert_eq!(w.deviation.unwrap().median, 0.0);
        }
    }

    #[test]
    fn windows_must_avoid_events() {
        let path = regime1();
        assert!(matches!(
            check_window(&path, (0.5, 0.68), 0.05),
            Err(AnalysisError::WindowOverlapsEvent { .. })
        ));
        assert!(matches!(
            check_window(&path, (0.02, 0.5), 0.05),
            Err(AnalysisError::WindowOverlapsEvent { .. })
        ));
        assert!(check_window(&path, (0.1, 0.6), 0.05).is_ok());
    }

    #[test]
    fn beerenwinkel_formula() {
        let p = ModelParams::fixed(0.1, 1.3, 1e-3).unwrap();
        let n0 = 7944;
        assert_eq!(beerenwinkel_estimate(0, &p, n0, n0, false).unwrap(), 0.0);
        let s1 = beerenwinkel_estimate(1, &p, n0, n0, false).unwrap();
        let s2 = beerenwinkel_estimate(2, &p, n0, n0, false).unwrap();
        assert_abs_diff_eq!(s2, 2.0 * s1, epsilon = 1e-12);
        // N(T) = N(0) = μ^{-α}
        let l = 1000f64.ln();
        let exact = (0.1f64 / 1e-3).ln().powi(2) / (2.0 * 1.3 * 0.1 * l);
        let ideal = (1000f64).powf(1.3).round() as u64;
        let approx = beerenwinkel_estimate(1, &p, ideal, ideal, false).unwrap();
        assert_abs_diff_eq!(approx, exact, epsilon = 1e-4 * exact);
        let adj = beerenwinkel_estimate(1, &p, n0, n0, true).unwrap();
        assert_abs_diff_eq!(adj, 2.0 * s1, epsilon = 1e-12);
        let bad = ModelParams::fixed(0.001, 1.3, 0.01).unwrap();
        assert!(matches!(
            beerenwinkel_estimate(1, &bad, n0, n0, false),
            Err(AnalysisError::DegenerateLog { .. })
        ));
    }

    #[test]
    fn regime_one_snapshots_shift() {
        let path = regime1();
        let b5 = path.birth_time(5).unwrap();
        let b9 = path.birth_time(9).unwrap();
        let snaps = path_snapshots(&path, 1000f64.ln(), &[b5, b9]).unwrap();
        assert!(shift_discrepancy(&snaps[0], &snaps[1], 4) < 1e-9);
        let total: f64 = snaps[0].probs.iter().map(|(_, p)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn simulated_snapshots() {
        let p = ModelParams::fixed(0.1, 1.3, 1e-2).unwrap();
        let cfg = SimConfig::new(p, StopRule::Time(50.0))
            .with_initial(InitialPopulation::Explicit(500))
            .with_seed(5);
        let tr = run_sim(&cfg).unwrap();
        let snaps = trajectory_snapshots(&tr, &[0.0, 25.0, 50.0]).unwrap();
        assert_eq!(snaps[0].probs, vec![(0, 1.0)]);
        for s in &snaps {
            assert_abs_diff_eq!(s.probs.iter().map(|(_, p)| p).sum::<f64>(), 1.0, epsilon = 1e-12);
        }
        assert!(matches!(
            trajectory_snapshots(&tr, &[51.0]),
            Err(AnalysisError::OutOfHorizon { .. })
        ));
    }

    #[test]
    fn alignment_of_exact_ode_is_tiny() {
        let sol = centred_sweep(0.1, 0.1, 80.0, 0.01).unwrap();
        let series: Vec<(f64, f64)> = sol
            .t
            .iter()
            .zip(&sol.r)
            .step_by(10)
            .map(|(&t, &r)| (t + 123.0, r))
            .collect();
        let a = sweep_alignment_error(&series, 0.1, 0.1, 0.05, 0.95, 0.01).unwrap().unwrap();
        assert_abs_diff_eq!(a.crossing, 123.0, epsilon = 1e-3);
        assert!(a.sup_error < 1e-4);
    }
}
