//! Recurrent selective sweeps in the Moran model.
//!
//! * [`params`] — parameters `(γ, α, ρ, μ)` and the fitness algebra.
//! * [`limit`] — the piecewise-linear limit of log-abundances.
//! * [`regime`] — closed-form regime theory and the blow-up certificate.
//! * [`sim`] — exact stochastic simulation.
//! * [`analysis`] — rescaling, convergence reports and sweep-shape checks.
//!
//! Deterministic code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod analysis;
pub mod limit;
pub mod params;
pub mod regime;
pub mod scalar;
pub mod sim;

pub use limit::{
    advance_wave, birth_times, eval_path, init_state, run_limit, BirthTime, EventKind, LimitError, LimitState,
    PiecewisePath, Segment, Truncation, WaveEvent,
};
pub use params::{ModelParams, ParamError, Scale};
pub use regime::{
    blowup_certificate, regime1_closed_form, regime2_recursion, regime3_iterates, regime3_map, regime_thresholds,
    BlowupCertificate, RegimeError, RegimeReport,
};
pub use scalar::Scalar;
pub use sim::{run_ensemble, run_sim, SimConfig, SimError, StopRule, Trajectory};

pub type Params = ModelParams<f64>;
pub type Path = PiecewisePath<f64>;
pub type State = LimitState<f64>;
pub type Event = WaveEvent<f64>;
pub type Certificate = BlowupCertificate<f64>;
