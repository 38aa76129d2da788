//! Deterministic shape of a single sweep.
//!
//! Once a type `n` is the only serious competitor of the dominant type
//! `m`, its frequency `r` among the two follows
//! `dr/dt = r(1−r)λ/(1+γ_rel r)` with `λ = λ_{n−m}` and `γ_rel = γ_{n−m}`.
//! With `γ_rel = 0` this is the logistic equation.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("initial frequency must lie in (0, 1), got {0}")]
    BadInitial(f64),
    #[error("growth rate must be positive, got {0}")]
    BadRate(f64),
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("step {step} too large: monotonicity lost at t = {t}")]
    StepTooLarge { step: f64, t: f64 },
}

/// Sampled solution; `t` runs from 0 towards the (possibly negative)
/// horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeSolution<T> {
    pub lambda: T,
    pub gamma_rel: T,
    pub t: Vec<T>,
    pub r: Vec<T>,
}

#[inline]
pub fn sweep_rhs<T: Scalar>(lambda: T, gamma_rel: T, r: T) -> T {
    r * (T::one() - r) * lambda / (T::one() + gamma_rel * r)
}

/// Closed-form logistic `r0 e^{λt} / (1 − r0 + r0 e^{λt})`.
pub fn logistic<T: Scalar>(lambda: T, r0: T, t: T) -> T {
    let e = (lambda * t).exp();
    r0 * e / (T::one() - r0 + r0 * e)
}

/// Classical RK4 with fixed step `step`. A negative `horizon` integrates
/// backwards in time.
pub fn sweep_ode_solve<T: Scalar>(
    lambda: T,
    gamma_rel: T,
    r0: T,
    horizon: T,
    step: T,
) -> Result<OdeSolution<T>, OdeError> {
    if !(r0 > T::zero() && r0 < T::one()) {
        return Err(OdeError::BadInitial(r0.as_f64()));
    }
    if !(lambda > T::zero() && lambda.is_finite()) {
        return Err(OdeError::BadRate(lambda.as_f64()));
    }
    if !(step > T::zero() && step.is_finite()) {
        return Err(OdeError::BadStep(step.as_f64()));
    }
    let steps = (horizon.abs() / step).ceil().to_usize().unwrap_or(0);
    let h = if steps == 0 { T::zero() } else { horizon / T::from_int(steps as i64) };
    let forward = horizon >= T::zero();
    let f = |r: T| sweep_rhs(lambda, gamma_rel, r);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);

    let mut t = Vec::with_capacity(steps + 1);
    let mut r = Vec::with_capacity(steps + 1);
    t.push(T::zero());
    r.push(r0);
    let mut x = r0;
    for i in 1..=steps {
        let k1 = f(x);
        let k2 = f(x + half * h * k1);
        let k3 = f(x + half * h * k2);
        let k4 = f(x + h * k3);
        let next = x + h * sixth * (k1 + two * k2 + two * k3 + k4);
        let ti = h * T::from_int(i as i64);
        let monotone = if forward {
            next >= x && next <= T::one()
        } else {
            next <= x && next >= T::zero()
        };
        if !monotone || !next.is_finite() {
            return Err(OdeError::StepTooLarge {
                step: step.as_f64(),
                t: ti.as_f64(),
            });
        }
        x = next;
        t.push(ti);
        r.push(x);
    }
    Ok(OdeSolution {
        lambda,
        gamma_rel,
        t,
        r,
    })
}

impl<T: Scalar> OdeSolution<T> {
    /// Linear interpolation at `t`; `None` outside the solved range.
    pub fn at(&self, t: T) -> Option<T> {
        let (lo, hi) = (self.t[0].min(*self.t.last()?), self.t[0].max(*self.t.last()?));
        if t < lo || t > hi {
            return None;
        }
        let forward = self.t.len() < 2 || self.t[1] >= self.t[0];
        let idx = if forward {
            self.t.partition_point(|&s| s <= t)
        } else {
            self.t.partition_point(|&s| s >= t)
        };
        if idx == 0 {
            return Some(self.r[0]);
        }
        if idx >= self.t.len() {
            return self.r.last().copied();
        }
        let (t0, t1) = (self.t[idx - 1], self.t[idx]);
        let w = (t - t0) / (t1 - t0);
        Some(self.r[idx - 1] + w * (self.r[idx] - self.r[idx - 1]))
    }

    /// Checks, on each step with both ends in `[lo, hi]`, that the mean
    /// per-capita growth `Δ ln r / Δt` lies between `(1−r)λ/(1+γ_rel)` and
    /// `(1−r)λ` evaluated at the worst end of the step.
    pub fn sandwich_holds(&self, lo: T, hi: T) -> bool {
        let tol = T::lit(1e-9);
        self.t.windows(2).zip(self.r.windows(2)).all(|(ts, rs)| {
            let (a, b) = if ts[1] > ts[0] { (0, 1) } else { (1, 0) };
            let (ra, rb) = (rs[a], rs[b]);
            if ra < lo || rb > hi || ra <= T::zero() {
                return true;
            }
            let dt = ts[b] - ts[a];
            if dt <= T::zero() {
                return true;
            }
            let g = (rb.ln() - ra.ln()) / dt;
            let lower = (T::one() - rb) * self.lambda / (T::one() + self.gamma_rel);
            let upper = (T::one() - ra) * self.lambda;
            g >= lower * (T::one() - tol) && g <= upper * (T::one() + tol)
        })
    }

    /// First time the solution reaches level `level`, by interpolation.
    pub fn hitting_time(&self, level: T) -> Option<T> {
        let idx = self.r.iter().position(|&x| x >= level)?;
        if idx == 0 {
            return Some(self.t[0]);
        }
        let (r0, r1) = (self.r[idx - 1], self.r[idx]);
        let w = (level - r0) / (r1 - r0);
        Some(self.t[idx - 1] + w * (self.t[idx] - self.t[idx - 1]))
    }
}

/// Time for the sweep to rise from `from` to `to` (`0 < from < to < 1`).
pub fn transit_time<T: Scalar>(lambda: T, gamma_rel: T, from: T, to: T, step: T) -> Result<T, OdeError> {
    // Generous horizon: at least the logistic transit at the slowest rate.
    let beta = lambda / (T::one() + gamma_rel);
    let horizon = T::lit(2.0) * (((to / (T::one() - to)) / (from / (T::one() - from))).ln() / beta) + step;
    let sol = sweep_ode_solve(lambda, gamma_rel, from, horizon, step)?;
    sol.hitting_time(to).ok_or(OdeError::StepTooLarge {
        step: step.as_f64(),
        t: horizon.as_f64(),
    })
}

/// Solution through `r = 1/2` at `t = 0`, covering `[-span, span]`,
/// returned as ascending time and frequency arrays.
pub fn centred_sweep<T: Scalar>(lambda: T, gamma_rel: T, span: T, step: T) -> Result<OdeSolution<T>, OdeError> {
    let half = T::lit(0.5);
    let fwd = sweep_ode_solve(lambda, gamma_rel, half, span, step)?;
    let bwd = sweep_ode_solve(lambda, gamma_rel, half, -span, step)?;
    let mut t: Vec<T> = bwd.t.iter().rev().copied().collect();
    let mut r: Vec<T> = bwd.r.iter().rev().copied().collect();
    t.extend(fwd.t.iter().skip(1));
    r.extend(fwd.r.iter().skip(1));
    Ok(OdeSolution {
        lambda,
        gamma_rel,
        t,
        r,
    })
}
