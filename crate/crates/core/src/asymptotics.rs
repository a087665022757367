//! Large-catalog limits: the limit OHR law `G∞`, the asymptotic threshold
//! `θ*`, and miss-probability estimates for Zipf popularities.
//!
//! All integrals against the Zipf limit `L(dλ) = (1/β) λ^{−1/β−1} dλ` on
//! `[1, ∞)` are computed after the substitution `λ = u^{−β}`, which maps `L`
//! onto the uniform law on `(0, 1)`:
//!
//! ```text
//! G∞(x)                 = ∫_0^1 G(x u^β) du
//! ∫ λ G0(θ/λ) L(dλ)     = ∫_0^1 u^{−β} G0(θ u^β) du
//! ```

use serde::{Deserialize, Serialize};

use crate::dist::{InterArrivalModel, ModelFamily};
use crate::error::{Error, Result};
use crate::popularity::{IntensityVector, PopularityLimit};
use crate::quadrature::{integrate_with_breaks, DEFAULT_ABS_TOL};
use crate::scalar::Real;

/// Inter-arrival model, Zipf exponent and storage fraction of a limit system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitSpec<T> {
    pub model: InterArrivalModel<T>,
    pub beta: T,
    pub c: T,
}

impl<T: Real> LimitSpec<T> {
    pub fn new(model: InterArrivalModel<T>, beta: T, c: T) -> Result<Self> {
        if !(beta >= T::zero()) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
        }
        if !(c > T::zero() && c <= T::one()) {
            return Err(Error::InvalidParameter(format!("c must lie in (0, 1], got {c}")));
        }
        Ok(Self { model, beta, c })
    }

    fn pareto_alpha(&self) -> Option<T> {
        match self.model.family() {
            ModelFamily::Pareto { alpha } => Some(T::lit(alpha)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MissMethod {
    ClosedForm,
    Quadrature,
    NonIntegrableZero,
    FiniteN,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissEstimate<T> {
    pub value: T,
    pub method: MissMethod,
}

/// `c_{α,β} = (α−1)β / ((α−1)β + 1)`, the storage fraction at which the
/// Pareto–Zipf threshold equals `sup η = α/(α−1)`.
pub fn c_alpha_beta<T: Real>(alpha: T, beta: T) -> T {
    let a = (alpha - T::one()) * beta;
    a / (a + T::one())
}

/// Limit OHR cdf `G∞(x) = ∫ G(x/λ) L(dλ)`.
pub fn g_infinity<T: Real>(spec: &LimitSpec<T>, x: T) -> T {
    match spec.pareto_alpha() {
        Some(alpha) if spec.beta > T::zero() => g_infinity_pareto(alpha, spec.beta, x),
        _ => g_infinity_quadrature(&spec.model, spec.beta, x),
    }
}

/// Closed form of `G∞` for Pareto inter-arrivals and Zipf(β), β > 0.
pub fn g_infinity_pareto<T: Real>(alpha: T, beta: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    let cab = c_alpha_beta(alpha, beta);
    let y = (alpha - T::one()) / alpha * x;
    if y <= T::one() {
        (T::one() - cab) * y.powf(alpha - T::one())
    } else {
        T::one() - cab * y.powf(-beta.recip())
    }
}

/// `G∞` by quadrature in the uniform variable; valid for every family.
pub fn g_infinity_quadrature<T: Real>(model: &InterArrivalModel<T>, beta: T, x: T) -> T {
    g_infinity_quadrature_tol(model, beta, x, T::lit(DEFAULT_ABS_TOL))
}

pub fn g_infinity_quadrature_tol<T: Real>(
    model: &InterArrivalModel<T>,
    beta: T,
    x: T,
    tol: T,
) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if beta == T::zero() {
        return model.ohr_cdf(x);
    }
    let breaks = [saturation_point(model, beta, x)];
    integrate_with_breaks(
        |u: T| model.ohr_cdf(x * u.powf(beta)),
        T::zero(),
        T::one(),
        &breaks,
        tol,
    )
    .min(T::one())
}

/// The `u` at which `x u^β` crosses `sup η`.
fn saturation_point<T: Real>(model: &InterArrivalModel<T>, beta: T, x: T) -> T {
    (model.hazard_sup() / x).powf(beta.recip())
}

/// Asymptotic threshold `θ* = Q∞(1 − c)`.
pub fn theta_star<T: Real>(spec: &LimitSpec<T>) -> Result<T> {
    if spec.c >= T::one() {
        return Ok(T::zero());
    }
    if let Some(alpha) = spec.pareto_alpha() {
        return Ok(theta_star_pareto(alpha, spec.beta, spec.c));
    }
    theta_star_bisection(spec, |x| g_infinity(spec, x))
}

/// Closed-form threshold for Pareto–Zipf.
pub fn theta_star_pareto<T: Real>(alpha: T, beta: T, c: T) -> T {
    let cab = c_alpha_beta(alpha, beta);
    let sup = alpha / (alpha - T::one());
    if c <= cab {
        sup * (cab / c).powf(beta)
    } else {
        sup * ((T::one() - c) / (T::one() - cab)).powf((alpha - T::one()).recip())
    }
}

/// `inf { θ : G∞(θ) ≥ 1 − c }` by bisection on `g`.
pub fn theta_star_bisection<T: Real>(spec: &LimitSpec<T>, g: impl Fn(T) -> T) -> Result<T> {
    let target = T::one() - spec.c;
    if target <= T::zero() {
        return Ok(T::zero());
    }
    let limit = PopularityLimit::zipf(spec.beta)?;
    let lambda_hi = limit.quantile(T::one() - T::lit(1e-9));
    let mut hi = lambda_hi * spec.model.hazard_sup();
    let mut lo = T::zero();
    let mut grow = 0;
    while g(hi) < target {
        lo = hi;
        hi = hi + hi;
        grow += 1;
        if grow > 200 {
            return Err(Error::InvalidParameter(
                "could not bracket the threshold".into(),
            ));
        }
    }
    for _ in 0..400 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi || hi - lo <= T::lit(1e-14) * hi {
            break;
        }
        if g(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = hi;
    // A flat stretch at level 1 − c would make the quantile discontinuous.
    let probe = theta * (T::one() + T::lit(1e-6)) + T::lit(1e-9);
    if g(probe) - target <= T::lit(1e-12) && g(theta) - target <= T::lit(1e-12) {
        return Err(Error::NonUnique(target.as_f64()));
    }
    Ok(theta)
}

/// `∫ λ G0(θ/λ) L(dλ)`, the limit miss rate per item (β < 1).
pub fn miss_rate_numerator<T: Real>(model: &InterArrivalModel<T>, beta: T, theta: T) -> T {
    if theta <= T::zero() {
        return T::zero();
    }
    if beta == T::zero() {
        return model.ohr_cdf_sync(theta);
    }
    let breaks = [saturation_point(model, beta, theta)];
    integrate_with_breaks(
        |u: T| {
            if u <= T::zero() {
                T::zero()
            } else {
                let s = u.powf(beta);
                model.ohr_cdf_sync(theta * s) / s
            }
        },
        T::zero(),
        T::one(),
        &breaks,
        T::lit(DEFAULT_ABS_TOL),
    )
}

/// Limit miss probability of the optimal policy.
///
/// Zero for `β ≥ 1` (infinite mean intensity), closed form for
/// Pareto–Zipf, quadrature otherwise.
pub fn asymptotic_miss_probability<T: Real>(spec: &LimitSpec<T>) -> Result<MissEstimate<T>> {
    if spec.beta >= T::one() {
        return Ok(MissEstimate {
            value: T::zero(),
            method: MissMethod::NonIntegrableZero,
        });
    }
    if let Some(alpha) = spec.pareto_alpha() {
        return Ok(MissEstimate {
            value: miss_pareto(alpha, spec.beta, spec.c),
            method: MissMethod::ClosedForm,
        });
    }
    let theta = theta_star(spec)?;
    let numerator = miss_rate_numerator(&spec.model, spec.beta, theta);
    let value = numerator * (T::one() - spec.beta);
    Ok(MissEstimate {
        value: value.max(T::zero()).min(T::one()),
        method: MissMethod::Quadrature,
    })
}

/// Closed-form limit miss probability for Pareto–Zipf, `β < 1`.
pub fn miss_pareto<T: Real>(alpha: T, beta: T, c: T) -> T {
    let cab = c_alpha_beta(alpha, beta);
    let one = T::one();
    if c <= cab {
        one - alpha * beta * (one - cab) * (c / cab).powf(one - beta)
    } else {
        (one - beta)
            * (one - cab).powf(-(alpha - one).recip())
            * (one - c).powf(alpha / (alpha - one))
    }
}

/// Finite-catalog estimate `Σ λ_i G0(θ*/λ_i) / Σ λ_i` with the limit threshold.
pub fn finite_n_miss_approx<T: Real>(
    spec: &LimitSpec<T>,
    iv: &IntensityVector<T>,
) -> Result<MissEstimate<T>> {
    let theta = theta_star(spec)?;
    Ok(MissEstimate {
        value: plug_in_miss_probability(&spec.model, iv, theta),
        method: MissMethod::FiniteN,
    })
}

/// Miss probability of the fixed-threshold policy `θ` on the given catalog.
pub fn plug_in_miss_probability<T: Real>(
    model: &InterArrivalModel<T>,
    iv: &IntensityVector<T>,
    theta: T,
) -> T {
    plug_in_miss_rate(model, iv, theta) / iv.total_rate()
}

/// `Σ λ_i G0(θ/λ_i)`.
pub fn plug_in_miss_rate<T: Real>(
    model: &InterArrivalModel<T>,
    iv: &IntensityVector<T>,
    theta: T,
) -> T {
    iv.rates()
        .iter()
        .map(|&r| r * model.ohr_cdf_sync(theta / r))
        .sum()
}

/// Limit miss probability of the static top-`C` policy: `1 − c^{1−β}`,
/// and 0 for `β ≥ 1`.
pub fn static_policy_asymptotic_miss<T: Real>(beta: T, c: T) -> Result<T> {
    if !(beta >= T::zero()) {
        return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
    }
    if !(c > T::zero() && c <= T::one()) {
        return Err(Error::InvalidParameter(format!("c must lie in (0, 1], got {c}")));
    }
    if beta >= T::one() {
        return Ok(T::zero());
    }
    Ok(T::one() - c.powf(T::one() - beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto(alpha: f64) -> InterArrivalModel<f64> {
        InterArrivalModel::pareto(alpha).unwrap()
    }

    fn spec(m: InterArrivalModel<f64>, beta: f64, c: f64) -> LimitSpec<f64> {
        LimitSpec::new(m, beta, c).unwrap()
    }

    #[test]
    fn g_infinity_pareto_values() {
        let s = spec(pareto(2.0), 1.0, 0.5);
        assert!((g_infinity(&s, 2.0) - 0.5).abs() < 1e-15);
        assert!((g_infinity(&s, 4.0) - 0.75).abs() < 1e-15);
        assert_eq!(g_infinity(&s, 0.0), 0.0);
    }

    #[test]
    fn g_infinity_beta_zero_is_g() {
        let m = InterArrivalModel::erlang(4).unwrap();
        let s = spec(m, 0.0, 0.1);
        for x in [0.1, 0.5, 1.0, 2.0] {
            assert_eq!(g_infinity(&s, x), m.ohr_cdf(x));
        }
    }

    #[test]
    fn branch_continuity() {
        for alpha in [1.5, 2.0, 3.0] {
            for beta in [0.25, 0.5, 0.75] {
                let cab = c_alpha_beta(alpha, beta);
                let x = alpha / (alpha - 1.0);
                let y = 1.0f64;
                let left = (1.0 - cab) * y.powf(alpha - 1.0);
                let right = 1.0 - cab * y.powf(-1.0 / beta);
                assert!((left - right).abs() < 1e-12);
                assert!((g_infinity_pareto(alpha, beta, x) - (1.0 - cab)).abs() < 1e-12);
                // miss branches meet at c = c_{α,β}
                let one = alpha * beta * (1.0 - cab);
                let lo = 1.0 - one;
                let hi = (1.0 - beta)
                    * (1.0 - cab).powf(-1.0 / (alpha - 1.0))
                    * (1.0 - cab).powf(alpha / (alpha - 1.0));
                assert!((lo - hi).abs() < 1e-12, "α={alpha} β={beta}");
                assert!((miss_pareto(alpha, beta, cab) - hi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn theta_star_values() {
        assert!((theta_star(&spec(pareto(2.0), 1.0, 0.1)).unwrap() - 10.0).abs() < 1e-12);
        assert!((theta_star(&spec(pareto(2.0), 1.0, 0.5)).unwrap() - 2.0).abs() < 1e-12);
        let erl = InterArrivalModel::erlang(4).unwrap();
        assert_eq!(theta_star(&spec(pareto(2.0), 0.5, 1.0)).unwrap(), 0.0);
        assert_eq!(theta_star(&spec(erl, 0.5, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn theta_star_bisection_matches_closed_form() {
        for (alpha, beta, c) in [(2.0, 0.5, 0.1), (1.5, 0.25, 0.6), (3.0, 0.75, 0.3)] {
            let s = spec(pareto(alpha), beta, c);
            let closed = theta_star(&s).unwrap();
            let numeric =
                theta_star_bisection(&s, |x| g_infinity_quadrature(&s.model, beta, x)).unwrap();
            assert!((closed - numeric).abs() < 1e-6 * closed.max(1.0), "{closed} vs {numeric}");
        }
    }

    #[test]
    fn theta_star_level_erlang() {
        let s = spec(InterArrivalModel::erlang(4).unwrap(), 0.5, 0.1);
        let theta = theta_star(&s).unwrap();
        assert!((g_infinity(&s, theta) - 0.9).abs() < 1e-9);
    }

    #[test]
    fn theta_star_exponential_is_rate_quantile() {
        // OHR ≡ λ, so G∞ = L and θ* is the (1 − c)-quantile of L.
        let s = spec(InterArrivalModel::exponential(), 0.5, 0.1);
        let theta = theta_star(&s).unwrap();
        assert!((theta - 10f64.sqrt()).abs() < 1e-6, "{theta}");
    }

    #[test]
    fn miss_values() {
        let m = asymptotic_miss_probability(&spec(pareto(2.0), 0.5, 0.1)).unwrap();
        assert_eq!(m.method, MissMethod::ClosedForm);
        assert!((m.value - 0.6348516283298892).abs() < 1e-12);
        let m0 = asymptotic_miss_probability(&spec(pareto(2.0), 0.0, 0.1)).unwrap();
        assert!((m0.value - 0.81).abs() < 1e-12);
        let heavy = asymptotic_miss_probability(&spec(pareto(2.0), 1.5, 0.1)).unwrap();
        assert_eq!(heavy.method, MissMethod::NonIntegrableZero);
        assert_eq!(heavy.value, 0.0);
        let full = asymptotic_miss_probability(&spec(pareto(2.0), 0.5, 1.0)).unwrap();
        assert!(full.value.abs() < 1e-12);
    }

    #[test]
    fn static_policy_values() {
        assert!((static_policy_asymptotic_miss(0.0f64, 0.1).unwrap() - 0.9).abs() < 1e-15);
        let v = static_policy_asymptotic_miss(0.5, 0.1).unwrap();
        assert!((v - (1.0 - 0.1f64.sqrt())).abs() < 1e-15);
        assert!((v - 0.68377).abs() < 1e-5);
        assert!(static_policy_asymptotic_miss(0.999_999, 0.1).unwrap() < 1e-5);
        assert_eq!(static_policy_asymptotic_miss(1.0, 0.1).unwrap(), 0.0);
        assert!(static_policy_asymptotic_miss(-1.0, 0.1).is_err());
        assert!(static_policy_asymptotic_miss(0.5, 0.0).is_err());
    }

    #[test]
    fn finite_n_uniform_catalog_collapses() {
        let m = pareto(2.0);
        let s = spec(m, 0.0, 0.1);
        let iv = IntensityVector::zipf(50, 0.0).unwrap();
        let est = finite_n_miss_approx(&s, &iv).unwrap();
        let theta = theta_star(&s).unwrap();
        assert_eq!(est.method, MissMethod::FiniteN);
        assert!((est.value - m.ohr_cdf_sync(theta)).abs() < 1e-14);
    }

    #[test]
    fn spec_validation() {
        assert!(LimitSpec::new(pareto(2.0), 0.5, 0.0).is_err());
        assert!(LimitSpec::new(pareto(2.0), 0.5, 1.1).is_err());
        assert!(LimitSpec::new(pareto(2.0), -0.5, 0.5).is_err());
    }
}
