//! Model parameters and the fitness algebra shared by every module.
//!
//! A type-`j` individual has relative fitness `(1+γ)^j`. Two derived rates
//! appear everywhere: the selective advantage `γ_j = (1+γ)^j − 1` of type
//! `j` over type 0, and the growth rate `λ_j = (1+ρ)(1+γ)^j − 1` of a type
//! `j` classes ahead of the dominant one in a population growing at rate ρ.
//! Levels are measured on the scale `L = ln(1/μ)` and time in units of
//! `L/γ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("selective advantage gamma must be positive and finite, got {0}")]
    NonPositiveGamma(f64),
    #[error("growth rate rho must be non-negative and finite, got {0}")]
    NegativeRho(f64),
    #[error("mutation rate mu must lie in (0, 1), got {0}")]
    MuOutOfRange(f64),
    #[error("alpha = {alpha} must exceed {min} (fixed population needs alpha > 1, growing needs alpha > 0)")]
    AlphaTooSmall { alpha: f64, min: f64 },
}

/// The quadruple `(γ, α, ρ, μ)`.
///
/// `alpha` is the initial log-population exponent, `N(0) = ⌈μ^{-α}⌉`.
/// With `rho == 0` the population is fixed and `alpha > 1` is required.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub gamma: T,
    pub alpha: T,
    pub rho: T,
    pub mu: T,
}

/// Log scale `L = ln(1/μ)` and the scaled time unit `L/γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale<T> {
    pub log_scale: T,
    pub time_unit: T,
}

impl<T: Scalar> ModelParams<T> {
    /// Builds and validates a parameter set.
    pub fn new(gamma: T, alpha: T, rho: T, mu: T) -> Result<Self, ParamError> {
        let p = Self {
            gamma,
            alpha,
            rho,
            mu,
        };
        p.validate()?;
        Ok(p)
    }

    /// Fixed population (`ρ = 0`).
    pub fn fixed(gamma: T, alpha: T, mu: T) -> Result<Self, ParamError> {
        Self::new(gamma, alpha, T::zero(), mu)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.gamma > T::zero() && self.gamma.is_finite()) {
            return Err(ParamError::NonPositiveGamma(self.gamma.as_f64()));
        }
        if !(self.rho >= T::zero() && self.rho.is_finite()) {
            return Err(ParamError::NegativeRho(self.rho.as_f64()));
        }
        if !(self.mu > T::zero() && self.mu < T::one()) {
            return Err(ParamError::MuOutOfRange(self.mu.as_f64()));
        }
        let min = if self.is_growing() { 0.0 } else { 1.0 };
        if !(self.alpha > T::lit(min) && self.alpha.is_finite()) {
            return Err(ParamError::AlphaTooSmall {
                alpha: self.alpha.as_f64(),
                min,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn is_growing(&self) -> bool {
        self.rho > T::zero()
    }

    /// `γ_j = (1+γ)^j − 1` for real `j`.
    ///
    /// Evaluated as `expm1(j·ln1p(γ))`, which keeps full relative precision
    /// for small `γ` and small `j`.
    #[inline]
    pub fn gamma_pow(&self, j: T) -> T {
        (j * self.gamma.ln_1p()).exp_m1()
    }

    /// `γ_j` for an integer offset.
    #[inline]
    pub fn gamma_int(&self, j: i64) -> T {
        self.gamma_pow(T::from_int(j))
    }

    /// `λ_j = (1+ρ)(1+γ)^j − 1`, written as `ρ + (1+ρ)γ_j`.
    #[inline]
    pub fn lambda_growth(&self, j: i64) -> T {
        self.rho + (T::one() + self.rho) * self.gamma_int(j)
    }

    /// `λ_j − ρ = (1+ρ)γ_j`, the excess growth over the population.
    #[inline]
    pub fn excess_growth(&self, j: i64) -> T {
        (T::one() + self.rho) * self.gamma_int(j)
    }

    pub fn log_scale(&self) -> Result<Scale<T>, ParamError> {
        if !(self.mu > T::zero() && self.mu < T::one()) {
            return Err(ParamError::MuOutOfRange(self.mu.as_f64()));
        }
        let log_scale = -self.mu.ln();
        Ok(Scale {
            log_scale,
            time_unit: log_scale / self.gamma,
        })
    }

    /// Largest integer below or equal to `α`.
    pub fn alpha_floor(&self) -> i64 {
        self.alpha.floor().to_i64().unwrap_or(i64::MAX)
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            gamma: U::lit(self.gamma.as_f64()),
            alpha: U::lit(self.alpha.as_f64()),
            rho: U::lit(self.rho.as_f64()),
            mu: U::lit(self.mu.as_f64()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(gamma: f64, rho: f64) -> ModelParams<f64> {
        ModelParams::new(gamma, 1.3, rho, 1e-3).unwrap()
    }

    #[test]
    fn gamma_pow_examples() {
        let params = p(0.01, 0.0);
        assert_eq!(params.gamma_pow(0.0), 0.0);
        assert_relative_eq!(params.gamma_pow(2.0), 1.01f64 * 1.01 - 1.0, max_relative = 1e-14);
        assert_relative_eq!(params.gamma_pow(-1.0), 1.0 / 1.01 - 1.0, max_relative = 1e-14);
        assert_relative_eq!(params.gamma_pow(2.0), 0.0201, max_relative = 1e-13);
    }

    #[test]
    fn lambda_examples() {
        let params = p(0.01, 0.0);
        assert_relative_eq!(params.lambda_growth(3), params.gamma_int(3), max_relative = 1e-15);
        assert_relative_eq!(params.lambda_growth(3), 0.030301, max_relative = 1e-13);
        let grow = p(0.01, 0.0013);
        assert_eq!(grow.lambda_growth(0), 0.0013);
        assert_relative_eq!(grow.lambda_growth(1), 1.0013 * 1.01 - 1.0, max_relative = 1e-13);
    }

    #[test]
    fn log_scale_examples() {
        let mut params = p(0.01, 0.0);
        params.mu = (-1.0f64).exp();
        assert_relative_eq!(params.log_scale().unwrap().log_scale, 1.0, max_relative = 1e-15);
        params.mu = 1e-3;
        let s = params.log_scale().unwrap();
        assert_relative_eq!(s.log_scale, 1000f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(s.time_unit, 690.7755278982137, max_relative = 1e-12);
        params.mu = 1.0;
        assert_eq!(params.log_scale(), Err(ParamError::MuOutOfRange(1.0)));
    }

    #[test]
    fn validation() {
        assert!(ModelParams::new(0.01, 1.0, 0.0, 1e-3).is_err());
        assert!(ModelParams::new(0.01, 0.5, 0.01, 1e-3).is_ok());
        assert!(ModelParams::new(0.0, 1.5, 0.0, 1e-3).is_err());
        assert!(ModelParams::new(0.01, 1.5, -0.1, 1e-3).is_err());
        assert!(ModelParams::new(0.01, 1.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn works_in_f32() {
        let params = ModelParams::<f32>::fixed(0.01, 1.3, 1e-3).unwrap();
        assert!((params.gamma_pow(2.0) - 0.0201).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn gamma_pow_is_multiplicative(g in 1e-3f64..2.0, j in -20.0f64..20.0, k in -20.0f64..20.0) {
            let params = p(g, 0.0);
            let (a, b) = (params.gamma_pow(j), params.gamma_pow(k));
            let lhs = params.gamma_pow(j + k);
            let rhs = a + b + a * b;
            let scale = a.abs().max(b.abs()).max((a * b).abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-13 * scale);
        }

        #[test]
        fn lambda_two_routes_agree(g in 1e-3f64..1.0, rho in 0.0f64..0.5, j in -30i64..30) {
            let params = p(g, rho);
            let direct = (1.0 + rho) * (1.0 + g).powi(j as i32) - 1.0 - rho;
            let via = (1.0 + rho) * params.gamma_int(j);
            let scale = (1.0 + rho) * (1.0 + g).powi(j as i32);
            prop_assert!((params.lambda_growth(j) - rho - via).abs() <= 1e-14 * scale.max(1.0));
            prop_assert!((direct - via).abs() <= 1e-14 * scale.max(1.0));
        }

        #[test]
        fn lambda_exceeds_rho_iff_ahead(g in 1e-3f64..1.0, rho in 0.0f64..0.5, j in -30i64..30) {
            let params = p(g, rho);
            prop_assert_eq!(params.lambda_growth(j) > rho, j >= 1);
        }

        #[test]
        fn gamma_pow_monotone_and_signed(g in 1e-3f64..2.0, j in -20.0f64..20.0, d in 1e-3f64..1.0) {
            let params = p(g, 0.0);
            prop_assert!(params.gamma_pow(j + d) > params.gamma_pow(j));
            prop_assert_eq!(params.gamma_pow(j).signum(), if j == 0.0 { 0.0f64.signum() } else { j.signum() });
        }
    }
}
