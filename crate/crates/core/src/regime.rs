//! Closed-form theory of the fixed-population limit.
//!
//! Thresholds `r_j = Σ_{i≤j} γ/γ_i` split the `α` axis into regimes: in
//! regime `j` the fittest extant type leads the dominant bulk by `j`
//! classes. Regimes 1 and 2 have explicit wave gaps; regime 3 reduces to a
//! two-dimensional affine map; for large `α` infinitely many types are born
//! in finite time, which [`blowup_certificate`] certifies.

use serde::Serialize;
use thiserror::Error;

use crate::params::{ModelParams, ParamError};
use crate::scalar::Scalar;

/// Tail bound below which `r_∞` is considered converged.
const R_INF_TOL: f64 = 1e-12;
/// Truncation error allowed for each `S_j`.
const S_TAIL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegimeError {
    #[error(transparent)]
    InvalidParams(#[from] ParamError),
    #[error("alpha = {alpha} lies outside regime {regime} = ({lo}, {hi})")]
    OutOfRegime {
        regime: usize,
        alpha: f64,
        lo: f64,
        hi: f64,
    },
    #[error("iterate {index} leaves the admissible set: {reason}")]
    ConditionViolated { index: usize, reason: String },
    #[error("need at least {min} thresholds, got {got}")]
    TooFewThresholds { min: usize, got: usize },
}

/// Where `α` falls among the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeIndex {
    /// `α ∈ [r_j, r_{j+1})` for the reported `j`.
    Regime(usize),
    /// `α` is at or beyond the last computed threshold but below `r_∞`.
    BeyondComputed(usize),
    /// `α ≥ r_∞`.
    AboveLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport<T> {
    /// `r_1, …, r_J`.
    pub thresholds: Vec<T>,
    pub r_infinity: T,
    /// Number of terms summed for `r_∞`.
    pub r_infinity_terms: usize,
    pub regime: RegimeIndex,
    /// Classification is only proven for regimes 1 and 2.
    pub conjectural: bool,
    pub note: Option<String>,
}

/// `r_j = Σ_{i=1}^{j} γ/γ_i`.
pub fn threshold<T: Scalar>(params: &ModelParams<T>, j: usize) -> T {
    (1..=j).fold(T::zero(), |acc, i| acc + params.gamma / params.gamma_int(i as i64))
}

pub fn regime_thresholds<T: Scalar>(
    params: &ModelParams<T>,
    max_index: usize,
) -> Result<RegimeReport<T>, RegimeError> {
    params.validate()?;
    if max_index < 2 {
        return Err(RegimeError::TooFewThresholds {
            min: 2,
            got: max_index,
        });
    }
    let g = params.gamma;
    let mut thresholds = Vec::with_capacity(max_index);
    let mut acc = T::zero();
    for i in 1..=max_index {
        acc = acc + g / params.gamma_int(i as i64);
        thresholds.push(acc);
    }

    // Tail after J terms: Σ_{i>J} γ/γ_i ≤ (1+γ)^{-J} / (1 − (1+γ)^{-(J+1)}).
    let q = (T::one() + g).recip();
    let mut r_inf = T::zero();
    let mut terms = 0usize;
    loop {
        terms += 1;
        r_inf = r_inf + g / params.gamma_int(terms as i64);
        let qj = q.powi(terms as i32);
        let tail = qj / (T::one() - qj * q);
        if tail < T::lit(R_INF_TOL) || terms > 1_000_000 {
            break;
        }
    }

    let alpha = params.alpha;
    let (regime, note) = if alpha >= r_inf {
        (
            RegimeIndex::AboveLimit,
            Some(format!(
                "alpha = {alpha} is at or above r_inf = {r_inf}; waves may still settle to a constant gap"
            )),
        )
    } else if alpha >= *thresholds.last().expect("non-empty") {
        (RegimeIndex::BeyondComputed(max_index), None)
    } else {
        let j = thresholds.iter().take_while(|&&r| r <= alpha).count();
        (RegimeIndex::Regime(j), None)
    };
    let conjectural = !matches!(regime, RegimeIndex::Regime(j) if j <= 2);
    Ok(RegimeReport {
        thresholds,
        r_infinity: r_inf,
        r_infinity_terms: terms,
        regime,
        conjectural,
        note,
    })
}

fn check_range<T: Scalar>(
    params: &ModelParams<T>,
    regime: usize,
) -> Result<(), RegimeError> {
    params.validate()?;
    let lo = if regime == 1 { T::one() } else { threshold(params, regime) };
    let hi = threshold(params, regime + 1);
    if !(params.alpha > lo && params.alpha < hi) {
        return Err(RegimeError::OutOfRegime {
            regime,
            alpha: params.alpha.as_f64(),
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    Ok(())
}

/// Regime 1 gaps: the first gap `2 − α` and the constant gap
/// `β = (2+γ) − (1+γ)α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime1<T> {
    pub first_gap: T,
    pub beta: T,
}

pub fn regime1_closed_form<T: Scalar>(params: &ModelParams<T>) -> Result<Regime1<T>, RegimeError> {
    check_range(params, 1)?;
    let g = params.gamma;
    let two = T::lit(2.0);
    Ok(Regime1 {
        first_gap: two - params.alpha,
        beta: (two + g) - (T::one() + g) * params.alpha,
    })
}

/// Conditions (2a)–(2c) evaluated at one iterate `x = f^{j−3}(r_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime2Conditions {
    /// Type `k−2` fixes before type `k−1`.
    pub older_fixes_first: bool,
    /// Type `k−2` fixes before type `k` reaches level 1.
    pub fixes_before_birth: bool,
    /// Type `k` reaches level 1 before type `k−1` fixes.
    pub birth_before_next_fixation: bool,
    /// `r_2 ≤ x < α`.
    pub iterate_in_range: bool,
}

impl Regime2Conditions {
    pub fn all(&self) -> bool {
        self.older_fixes_first
            && self.fixes_before_birth
            && self.birth_before_next_fixation
            && self.iterate_in_range
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regime2<T> {
    /// `(j, β_j)` for `j = 2..=j_max`.
    pub betas: Vec<(usize, T)>,
    /// `f^0(r_2), f^1(r_2), …` used for `β_3, β_4, …`.
    pub iterates: Vec<T>,
    pub conditions: Vec<Regime2Conditions>,
    /// Slope magnitude `ℓ = (1+γ)/(2+γ)` of the affine map.
    pub ell: T,
    pub r_star: T,
    pub beta_inf: T,
    /// `α < (2+γ)/(1+γ)`.
    pub upper_bound_ok: bool,
    pub conditions_ok: bool,
}

impl<T: Scalar> Regime2<T> {
    pub fn beta(&self, j: usize) -> Option<T> {
        self.betas.iter().find(|(i, _)| *i == j).map(|(_, b)| *b)
    }
}

/// The affine map `f(x) = r_2 + ℓ(α − x)` of regime 2.
pub fn regime2_map<T: Scalar>(params: &ModelParams<T>, x: T) -> T {
    let g = params.gamma;
    let two = T::lit(2.0);
    let ell = (T::one() + g) / (two + g);
    threshold(params, 2) + ell * (params.alpha - x)
}

/// Gap produced by one regime-2 iteration from level `x`.
fn regime2_gap<T: Scalar>(params: &ModelParams<T>, x: T) -> T {
    let g = params.gamma;
    let d = params.alpha - x;
    let c3 = T::lit(3.0) + T::lit(3.0) * g + g * g;
    d + (T::one() - c3 * d) / (T::lit(2.0) + g)
}

pub fn regime2_recursion<T: Scalar>(
    params: &ModelParams<T>,
    j_max: usize,
) -> Result<Regime2<T>, RegimeError> {
    check_range(params, 2)?;
    let g = params.gamma;
    let alpha = params.alpha;
    let two = T::lit(2.0);
    let r2 = threshold(params, 2);
    let ell = (T::one() + g) / (two + g);
    let g2 = params.gamma_int(2);
    let g3 = params.gamma_int(3);

    let mut betas = Vec::new();
    let mut iterates = Vec::new();
    let mut conditions = Vec::new();
    if j_max >= 2 {
        betas.push((2, g / g2));
    }
    let mut x = r2;
    for j in 3..=j_max {
        let t1 = alpha - x;
        let fx = regime2_map(params, x);
        conditions.push(Regime2Conditions {
            older_fixes_first: (alpha - T::one()) / g2 > t1 / g,
            fixes_before_birth: g3 * t1 / g < T::one(),
            birth_before_next_fixation: fx < alpha,
            iterate_in_range: r2 <= x && x < alpha,
        });
        betas.push((j, regime2_gap(params, x)));
        iterates.push(x);
        x = fx;
    }
    let r_star = (r2 + ell * alpha) / (T::one() + ell);
    let upper_bound_ok = alpha < (two + g) / (T::one() + g);
    let conditions_ok = upper_bound_ok && conditions.iter().all(Regime2Conditions::all);
    Ok(Regime2 {
        betas,
        iterates,
        conditions,
        ell,
        r_star,
        beta_inf: regime2_gap(params, r_star),
        upper_bound_ok,
        conditions_ok,
    })
}

/// Conditions (3a)–(3c) for one regime-3 step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime3Conditions {
    /// Type `k−3` fixes before types `k−2` and `k−1`.
    pub oldest_fixes_first: bool,
    /// Type `k−3` fixes before type `k` reaches level 1.
    pub fixes_before_birth: bool,
    /// Type `k` reaches level 1 before types `k−2` and `k−1` fix.
    pub birth_before_next_fixation: bool,
}

impl Regime3Conditions {
    pub fn all(&self) -> bool {
        self.oldest_fixes_first && self.fixes_before_birth && self.birth_before_next_fixation
    }
}

/// One step of the regime-3 map.
///
/// Input: when type `k−1` reaches level 1, type `k−4` dominates and types
/// `k−3`, `k−2` sit at `x`, `y`. Phase one lasts until `k−3` fixes
/// (`t1 = α − x`); phase two, with `k−3` dominant, lasts until `k` reaches
/// level 1 (`t2`). Output: levels of `k−2`, `k−1` at that moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime3Step<T> {
    pub x: T,
    pub y: T,
    pub new_x: T,
    pub new_y: T,
    pub t1: T,
    pub t2: T,
    pub conditions: Regime3Conditions,
}

impl<T: Scalar> Regime3Step<T> {
    pub fn conditions_ok(&self) -> bool {
        self.conditions.all()
    }
}

/// Coefficients `γ_i/γ` for `i = 1..=4`.
fn ratios<T: Scalar>(params: &ModelParams<T>) -> [T; 4] {
    let g = params.gamma;
    [1, 2, 3, 4].map(|i| params.gamma_int(i) / g)
}

fn regime3_raw<T: Scalar>(params: &ModelParams<T>, x: T, y: T) -> Regime3Step<T> {
    let alpha = params.alpha;
    let [c1, c2, c3, c4] = ratios(params);
    let t1 = alpha - x;
    let t2 = (T::one() - t1 * c4) / c3;
    let y_mid = y + t1 * c2;
    let one_mid = T::one() + t1 * c3;
    let new_x = y_mid + t2 * c1;
    let new_y = one_mid + t2 * c2;
    let conditions = Regime3Conditions {
        oldest_fixes_first: t1 < (alpha - y) / c2 && t1 < (alpha - T::one()) / c3,
        fixes_before_birth: t1 * c4 < T::one(),
        birth_before_next_fixation: t2 < (alpha - y_mid) / c1 && t2 < (alpha - one_mid) / c2,
    };
    Regime3Step {
        x,
        y,
        new_x,
        new_y,
        t1,
        t2,
        conditions,
    }
}

fn admissible<T: Scalar>(alpha: T, x: T, y: T) -> Option<String> {
    if !(x > T::one() && x < alpha) {
        return Some(format!("x = {x} outside (1, {alpha})"));
    }
    if !(y > T::one() && y < x) {
        return Some(format!("y = {y} outside (1, x = {x})"));
    }
    None
}

/// Applies the regime-3 map once.
pub fn regime3_map<T: Scalar>(
    params: &ModelParams<T>,
    state: (T, T),
) -> Result<Regime3Step<T>, RegimeError> {
    check_range(params, 3)?;
    let (x, y) = state;
    if let Some(reason) = admissible(params.alpha, x, y) {
        return Err(RegimeError::ConditionViolated { index: 0, reason });
    }
    Ok(regime3_raw(params, x, y))
}

/// Iterates the regime-3 map `n` times, stopping at the first iterate that
/// violates (3a)–(3c) or leaves the admissible set.
pub fn regime3_iterates<T: Scalar>(
    params: &ModelParams<T>,
    seed: (T, T),
    n: usize,
) -> Result<Vec<Regime3Step<T>>, RegimeError> {
    check_range(params, 3)?;
    let mut out = Vec::with_capacity(n);
    let (mut x, mut y) = seed;
    for index in 0..n {
        if let Some(reason) = admissible(params.alpha, x, y) {
            return Err(RegimeError::ConditionViolated { index, reason });
        }
        let step = regime3_raw(params, x, y);
        if !step.conditions_ok() {
            return Err(RegimeError::ConditionViolated {
                index,
                reason: format!("{:?}", step.conditions),
            });
        }
        x = step.new_x;
        y = step.new_y;
        out.push(step);
    }
    Ok(out)
}

/// Seed `(1 + γ/γ_2 + γ/γ_3, 1 + γ_2/γ_3)`: the levels of types 1 and 2
/// when type 3 reaches level 1 with `α < 2`.
pub fn regime3_seed<T: Scalar>(params: &ModelParams<T>) -> (T, T) {
    (
        threshold(params, 3),
        T::one() + params.gamma_int(2) / params.gamma_int(3),
    )
}

/// Fixed point of the regime-3 map.
///
/// The map is affine, `(x, y) ↦ A(x, y) + b`, so the fixed point solves a
/// 2×2 linear system.
pub fn regime3_fixed_point<T: Scalar>(params: &ModelParams<T>) -> (T, T) {
    let alpha = params.alpha;
    let [_, c2, c3, c4] = ratios(params);
    // t1 = α − x, t2 = (1 − c4 t1)/c3
    // new_x = y + c2 t1 + t2           = y − (c2 − c4/c3) x + (c2 − c4/c3) α + 1/c3
    // new_y = 1 + c3 t1 + c2 t2        = −(c3 − c2 c4/c3) x + (c3 − c2 c4/c3) α + 1 + c2/c3
    let a = c2 - c4 / c3;
    let b = c3 - c2 * c4 / c3;
    let bx = a * alpha + c3.recip();
    let by = b * alpha + T::one() + c2 / c3;
    // x = y − a x + bx ; y = −b x + by  ⇒  x(1 + a + b) = by + bx
    let x = (bx + by) / (T::one() + a + b);
    let y = by - b * x;
    (x, y)
}

/// One-sided certificate that waves accumulate in finite time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupCertificate<T> {
    /// `S_j` for `j = 1..`, each summed to a certified tail below `1e-10`.
    pub s_values: Vec<T>,
    /// `S = sup_j S_j`.
    pub s_sup: T,
    /// `a = ⌊α⌋`.
    pub a: i64,
    /// `α > 1 + 2S`.
    pub condition_alpha: bool,
    /// `γ_{a/2}/γ_a < 1/S`.
    pub condition_ratio: bool,
    pub certified: bool,
    /// `γ Σ_{n≥0} 1/γ_{a+n}` when certified.
    pub tstar_bound: Option<T>,
}

/// `S_j = Σ_{i≥0} γ_j/γ_{j+i}`, summed until the tail bound
/// `(1+γ)^{-i}/(1−(1+γ)^{-1}) · 1/(1−(1+γ)^{-j-i})` drops below `tol`.
pub fn s_series<T: Scalar>(params: &ModelParams<T>, j: usize, tol: T) -> T {
    let gj = params.gamma_int(j as i64);
    let q = (T::one() + params.gamma).recip();
    let geo = T::one() / (T::one() - q);
    let mut sum = T::zero();
    let mut i = 0usize;
    loop {
        sum = sum + gj / params.gamma_int((j + i) as i64);
        i += 1;
        let qi = q.powi(i as i32);
        let tail = qi * geo / (T::one() - q.powi((j + i) as i32));
        if tail < tol || i > 10_000_000 {
            return sum;
        }
    }
}

/// Finite-accumulation certificate for the fixed-population limit.
///
/// Each term `γ_j/γ_{j+i}` increases with `j` towards `(1+γ)^{-i}`, so
/// `S_j` increases to `S = (1+γ)/γ`, and the supremum is this limit rather
/// than any finite `S_j`. Using the limit keeps the certificate sound.
/// `certified == false` proves nothing about `t*`.
pub fn blowup_certificate<T: Scalar>(params: &ModelParams<T>) -> BlowupCertificate<T> {
    let g = params.gamma;
    let tol = T::lit(S_TAIL_TOL);
    let a = params.alpha_floor();
    let j_max = 64usize.max(4 * params.alpha.ceil().to_usize().unwrap_or(0));
    let s_values: Vec<T> = (1..=j_max).map(|j| s_series(params, j, tol)).collect();
    let s_sup = (T::one() + g) / g;
    let condition_alpha = params.alpha > T::one() + T::lit(2.0) * s_sup;
    let condition_ratio = a >= 1 && {
        let half = params.gamma_pow(T::from_int(a) / T::lit(2.0));
        half / params.gamma_int(a) < s_sup.recip()
    };
    let certified = condition_alpha && condition_ratio;
    let tstar_bound = certified.then(|| tstar_series(params, a));
    BlowupCertificate {
        s_values,
        s_sup,
        a,
        condition_alpha,
        condition_ratio,
        certified,
        tstar_bound,
    }
}

/// `γ Σ_{n≥0} 1/γ_{a+n}`, summed with a geometric tail bound below `1e-14`.
fn tstar_series<T: Scalar>(params: &ModelParams<T>, a: i64) -> T {
    let g = params.gamma;
    let q = (T::one() + g).recip();
    let mut sum = T::zero();
    let mut n = 0i64;
    loop {
        let term = g / params.gamma_int(a + n);
        sum = sum + term;
        n += 1;
        // later terms shrink at least by the factor q·(1+γ_{a+n}) / γ_{a+n+1}·… ≤ 1/(1 − q)
        if term * q / (T::one() - q) < T::lit(1e-14) || n > 10_000_000 {
            return sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fixed(gamma: f64, alpha: f64) -> ModelParams<f64> {
        ModelParams::fixed(gamma, alpha, 1e-3).unwrap()
    }

    #[test]
    fn thresholds_small_gamma() {
        let rep = regime_thresholds(&fixed(0.01, 1.3), 6).unwrap();
        assert_eq!(rep.thresholds[0], 1.0);
        assert_abs_diff_eq!(rep.thresholds[1], 1.4975124378109452, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.thresholds[2], 1.8275345492924144, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.thresholds[3], 2.073815643204075, epsilon = 1e-12);
        assert_eq!(rep.regime, RegimeIndex::Regime(1));
        assert!(!rep.conjectural);
        for w in rep.thresholds.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn figure_one_alphas_classify() {
        let idx = |a| regime_thresholds(&fixed(0.01, a), 8).unwrap().regime;
        assert_eq!(idx(1.3), RegimeIndex::Regime(1));
        assert_eq!(idx(1.8), RegimeIndex::Regime(2));
        assert_eq!(idx(1.95), RegimeIndex::Regime(3));
        assert!(regime_thresholds(&fixed(0.01, 1.95), 8).unwrap().conjectural);
    }

    #[test]
    fn r_infinity_for_gamma_tenth() {
        let rep = regime_thresholds(&fixed(0.1, 3.2), 4).unwrap();
        assert_abs_diff_eq!(rep.r_infinity, 3.1, epsilon = 0.01);
        assert_eq!(rep.regime, RegimeIndex::AboveLimit);
        assert!(rep.note.is_some());
    }

    #[test]
    fn regime_one_values() {
        let r = regime1_closed_form(&fixed(0.01, 1.3)).unwrap();
        assert_abs_diff_eq!(r.first_gap, 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(r.beta, 0.697, epsilon = 1e-14);
        assert!(matches!(
            regime1_closed_form(&fixed(0.01, 1.6)),
            Err(RegimeError::OutOfRegime { regime: 1, .. })
        ));
    }

    #[test]
    fn regime_one_beta_meets_regime_two_at_boundary() {
        let g = 0.01;
        let r2 = threshold(&fixed(g, 1.3), 2);
        let below = regime1_closed_form(&fixed(g, r2 - 1e-12)).unwrap().beta;
        let g2 = fixed(g, 1.3).gamma_int(2);
        assert_abs_diff_eq!(below, g / g2, epsilon = 1e-10);
    }

    #[test]
    fn regime_two_values() {
        let r = regime2_recursion(&fixed(0.01, 1.8), 50).unwrap();
        assert_abs_diff_eq!(r.beta(2).unwrap(), 0.4975124378109453, epsilon = 1e-13);
        assert_abs_diff_eq!(r.beta(3).unwrap(), 0.3439962377168882, epsilon = 1e-13);
        assert_abs_diff_eq!(r.beta(4).unwrap(), 0.4211362188586781, epsilon = 1e-13);
        assert_abs_diff_eq!(r.r_star, 1.5986754966887418, epsilon = 1e-13);
        assert_abs_diff_eq!(r.beta_inf, 0.39533774834437085, epsilon = 1e-13);
        assert_abs_diff_eq!(regime2_map(&fixed(0.01, 1.8), r.r_star), r.r_star, epsilon = 1e-14);
        assert!(r.conditions_ok);
        assert_eq!(r.conditions.len(), 48);
    }

    #[test]
    fn regime_two_contracts() {
        let p = fixed(0.05, 1.7);
        let r = regime2_recursion(&p, 10).unwrap();
        for x in [1.45, 1.6, 1.69] {
            let lhs = (regime2_map(&p, x) - r.r_star).abs();
            assert_abs_diff_eq!(lhs, r.ell * (x - r.r_star).abs(), epsilon = 1e-14);
        }
        assert!(r.ell > 0.0 && r.ell < 1.0);
    }

    #[test]
    fn regime_three_fixed_point_is_fixed() {
        let p = fixed(0.01, 2.03);
        let (x, y) = regime3_fixed_point(&p);
        let step = regime3_map(&p, (x, y)).unwrap();
        assert_abs_diff_eq!(step.new_x, x, epsilon = 1e-12);
        assert_abs_diff_eq!(step.new_y, y, epsilon = 1e-12);
        assert!(step.conditions_ok());
    }

    #[test]
    fn regime_three_rejects_out_of_range() {
        assert!(matches!(
            regime3_map(&fixed(0.01, 1.5), (1.2, 1.1)),
            Err(RegimeError::OutOfRegime { regime: 3, .. })
        ));
        assert!(matches!(
            regime3_map(&fixed(0.01, 1.95), (2.5, 1.1)),
            Err(RegimeError::ConditionViolated { index: 0, .. })
        ));
    }

    #[test]
    fn erdos_borwein_series() {
        let p = fixed(1.0, 1.5);
        assert_abs_diff_eq!(s_series(&p, 1, 1e-12), 1.6066951524152913, epsilon = 1e-10);
    }

    #[test]
    fn s_values_increase_to_limit() {
        let cert = blowup_certificate(&fixed(0.5, 2.5));
        for w in cert.s_values.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        assert!(cert.s_values.iter().all(|&s| s <= cert.s_sup + 1e-9));
        assert_abs_diff_eq!(*cert.s_values.last().unwrap(), cert.s_sup, epsilon = 1e-6);
    }

    #[test]
    fn certificate_fires_for_large_alpha() {
        let cert = blowup_certificate(&fixed(1.0, 5.5));
        assert!(cert.certified);
        let bound = cert.tstar_bound.unwrap();
        let direct: f64 = (0..200).map(|n| 1.0 / (2f64.powi(5 + n) - 1.0)).sum();
        assert_abs_diff_eq!(bound, direct, epsilon = 1e-13);
    }

    #[test]
    fn certificate_silent_in_regime_one() {
        let cert = blowup_certificate(&fixed(0.01, 1.3));
        assert!(!cert.certified);
        assert!(cert.tstar_bound.is_none());
    }
}
