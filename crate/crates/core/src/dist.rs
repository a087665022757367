//! Unit-mean inter-arrival families and the laws derived from them.
//!
//! Every model is normalized to mean 1 at construction. For a model with
//! inter-arrival cdf `F0`, density `f0` and hazard `η = f0 / (1 − F0)`:
//!
//! * the age law is `F(t) = ∫_0^t (1 − F0(s)) ds`,
//! * the observed hazard rate (OHR) sampled at a time not synchronized with
//!   arrivals is `η(A)` with `A ~ F`, with cdf `G`,
//! * the OHR sampled just before an arrival is `η(S)` with `S ~ F0`, with
//!   cdf `G0`.
//!
//! Scaled processes with intensity `λ` are never materialized here; callers
//! apply `F0(λ t)`, `λ η(λ t)`, `G(x / λ)` themselves.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative tolerance for numeric hazard inversion.
pub const HAZARD_INVERSE_RTOL: f64 = 1e-10;

/// Direction in which the hazard rate moves with the age of the interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HazardMonotonicity {
    Decreasing,
    Increasing,
    Constant,
}

/// Serializable description of a model family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelFamily {
    Pareto { alpha: f64 },
    Erlang { k: u32 },
    Exponential,
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Pareto { .. } => "pareto",
            ModelFamily::Erlang { .. } => "erlang",
            ModelFamily::Exponential => "exponential",
        }
    }

    /// Shape parameter (α or k); 1 for the exponential.
    pub fn param(&self) -> f64 {
        match *self {
            ModelFamily::Pareto { alpha } => alpha,
            ModelFamily::Erlang { k } => f64::from(k),
            ModelFamily::Exponential => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind<T> {
    /// `F0(t) = 1 − (1 + γ t)^{−α}` with `γ = 1 / (α − 1)`.
    Pareto { alpha: T, gamma: T },
    /// Sum of `k` exponential stages of rate `k`.
    Erlang { k: u32 },
    Exponential,
}

/// A unit-mean inter-arrival distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterArrivalModel<T> {
    kind: Kind<T>,
}

impl<T: Real> InterArrivalModel<T> {
    pub fn pareto(alpha: T) -> Result<Self> {
        if !(alpha > T::one()) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "pareto tail index must be finite and > 1, got {alpha}"
            )));
        }
        Ok(Self {
            kind: Kind::Pareto {
                alpha,
                gamma: (alpha - T::one()).recip(),
            },
        })
    }

    pub fn erlang(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("erlang needs k >= 1 stages".into()));
        }
        Ok(Self {
            kind: Kind::Erlang { k },
        })
    }

    pub fn exponential() -> Self {
        Self {
            kind: Kind::Exponential,
        }
    }

    pub fn from_family(family: ModelFamily) -> Result<Self> {
        match family {
            ModelFamily::Pareto { alpha } => Self::pareto(T::lit(alpha)),
            ModelFamily::Erlang { k } => Self::erlang(k),
            ModelFamily::Exponential => Ok(Self::exponential()),
        }
    }

    pub fn family(&self) -> ModelFamily {
        match self.kind {
            Kind::Pareto { alpha, .. } => ModelFamily::Pareto {
                alpha: alpha.as_f64(),
            },
            Kind::Erlang { k } => ModelFamily::Erlang { k },
            Kind::Exponential => ModelFamily::Exponential,
        }
    }

    pub fn monotonicity(&self) -> HazardMonotonicity {
        match self.kind {
            Kind::Pareto { .. } => HazardMonotonicity::Decreasing,
            Kind::Erlang { k } if k >= 2 => HazardMonotonicity::Increasing,
            Kind::Erlang { .. } | Kind::Exponential => HazardMonotonicity::Constant,
        }
    }

    /// Supremum of the hazard over `t ≥ 0`: `αγ` (attained at 0) for Pareto,
    /// `k` (approached as `t → ∞`) for Erlang, 1 for constant hazards.
    pub fn hazard_sup(&self) -> T {
        match self.kind {
            Kind::Pareto { alpha, gamma } => alpha * gamma,
            Kind::Erlang { k } => T::from_u32(k).unwrap(),
            Kind::Exponential => T::one(),
        }
    }

    pub fn cdf(&self, t: T) -> Result<T> {
        check_time(t)?;
        Ok(T::one() - self.survival(t))
    }

    /// `1 − F0(t)` for `t ≥ 0`.
    pub fn survival(&self, t: T) -> T {
        match self.kind {
            Kind::Pareto { alpha, gamma } => (T::one() + gamma * t).powf(-alpha),
            Kind::Erlang { k } => {
                let kt = T::from_u32(k).unwrap() * t;
                T::one() - erlang_stage_cdf(kt, k)
            }
            Kind::Exponential => (-t).exp(),
        }
    }

    pub fn pdf(&self, t: T) -> T {
        match self.kind {
            Kind::Pareto { alpha, gamma } => {
                alpha * gamma * (T::one() + gamma * t).powf(-alpha - T::one())
            }
            Kind::Erlang { k } => {
                if t <= T::zero() {
                    return if k == 1 { T::one() } else { T::zero() };
                }
                let kf = T::from_u32(k).unwrap();
                let km1 = T::from_u32(k - 1).unwrap();
                // k^k t^{k-1} e^{-kt} / (k-1)!
                let log = kf * kf.ln() + km1 * t.ln() - kf * t - ln_factorial::<T>(k - 1);
                log.exp()
            }
            Kind::Exponential => (-t).exp(),
        }
    }

    /// Hazard rate `η(t) = f0(t) / (1 − F0(t))`.
    ///
    /// For Erlang this is `k B(kt, k − 1)` with `B` the Erlang-B blocking
    /// probability, which stays accurate deep in the tail where both `f0` and
    /// the survival underflow.
    #[inline]
    pub fn hazard(&self, t: T) -> T {
        debug_assert!(t >= T::zero() || t.is_nan(), "hazard at negative age {t}");
        match self.kind {
            Kind::Pareto { alpha, gamma } => alpha * gamma / (T::one() + gamma * t),
            Kind::Erlang { k } => {
                let kf = T::from_u32(k).unwrap();
                kf * erlang_b(kf * t, k - 1)
            }
            Kind::Exponential => T::one(),
        }
    }

    /// Age `t` at which the hazard equals `x`, with the default tolerance.
    pub fn hazard_inverse(&self, x: T) -> Result<T> {
        self.hazard_inverse_with_tol(x, T::lit(HAZARD_INVERSE_RTOL))
    }

    /// Inverts a strictly monotone hazard. Pareto is exact; Erlang bisects
    /// to relative tolerance `rtol`.
    ///
    /// Valid ranges: `(0, αγ]` for Pareto, `[0, k)` for Erlang. Outside them
    /// the result is [`Error::OutOfRange`].
    pub fn hazard_inverse_with_tol(&self, x: T, rtol: T) -> Result<T> {
        match self.kind {
            Kind::Pareto { alpha, gamma } => {
                if !(x > T::zero()) || x > alpha * gamma {
                    return Err(Error::OutOfRange(x.as_f64()));
                }
                Ok(((alpha * gamma / x - T::one()) / gamma).max(T::zero()))
            }
            Kind::Erlang { k } if k >= 2 => {
                let kf = T::from_u32(k).unwrap();
                if !(x >= T::zero()) || x >= kf {
                    return Err(Error::OutOfRange(x.as_f64()));
                }
                if x == T::zero() {
                    return Ok(T::zero());
                }
                let mut lo = T::zero();
                let mut hi = T::one();
                while self.hazard(hi) < x {
                    lo = hi;
                    hi = hi + hi;
                    if !hi.is_finite() {
                        return Err(Error::OutOfRange(x.as_f64()));
                    }
                }
                for _ in 0..2000 {
                    let mid = lo + (hi - lo) / T::lit(2.0);
                    if mid <= lo || mid >= hi || hi - lo <= rtol * hi {
                        break;
                    }
                    if self.hazard(mid) < x {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(lo + (hi - lo) / T::lit(2.0))
            }
            Kind::Erlang { .. } | Kind::Exponential => Err(Error::Unsupported),
        }
    }

    /// Stationary age cdf `F(t) = ∫_0^t (1 − F0(s)) ds`.
    pub fn age_cdf(&self, t: T) -> Result<T> {
        check_time(t)?;
        Ok(match self.kind {
            Kind::Pareto { .. } | Kind::Exponential => T::one() - self.age_survival(t),
            Kind::Erlang { k } => {
                // Uniform mixture over stage counts 1..=k of Erlang(j, rate k).
                let kt = T::from_u32(k).unwrap() * t;
                let sum: T = (1..=k).map(|j| erlang_stage_cdf(kt, j)).sum();
                sum / T::from_u32(k).unwrap()
            }
        })
    }

    /// `1 − F(t)`.
    pub fn age_survival(&self, t: T) -> T {
        match self.kind {
            Kind::Pareto { alpha, gamma } => (T::one() + gamma * t).powf(T::one() - alpha),
            Kind::Erlang { k } => {
                let kt = T::from_u32(k).unwrap() * t;
                let sum: T = (1..=k).map(|j| T::one() - erlang_stage_cdf(kt, j)).sum();
                sum / T::from_u32(k).unwrap()
            }
            Kind::Exponential => (-t).exp(),
        }
    }

    /// Cdf `G` of the OHR at a time not synchronized with arrivals.
    pub fn ohr_cdf(&self, x: T) -> T {
        self.ohr_compose(x, |t| self.age_survival(t))
    }

    /// Cdf `G0` of the OHR just before an arrival.
    pub fn ohr_cdf_sync(&self, x: T) -> T {
        self.ohr_compose(x, |t| self.survival(t))
    }

    /// `P(η(Y) ≤ x)` for `Y` with survival function `surv`.
    fn ohr_compose(&self, x: T, surv: impl Fn(T) -> T) -> T {
        match self.monotonicity() {
            HazardMonotonicity::Constant => {
                if x >= self.hazard_sup() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            HazardMonotonicity::Decreasing => {
                // η(Y) ≤ x  ⇔  Y ≥ η^{-1}(x)
                if x <= T::zero() {
                    T::zero()
                } else if x >= self.hazard_sup() {
                    T::one()
                } else {
                    surv(self.hazard_inverse(x).expect("x inside hazard range"))
                }
            }
            HazardMonotonicity::Increasing => {
                // η(Y) ≤ x  ⇔  Y ≤ η^{-1}(x)
                if x <= T::zero() {
                    T::zero()
                } else if x >= self.hazard_sup() {
                    T::one()
                } else {
                    T::one() - surv(self.hazard_inverse(x).expect("x inside hazard range"))
                }
            }
        }
    }

    /// Inverse of `F0`. Closed form except for Erlang, which bisects.
    pub fn interarrival_quantile(&self, u: T) -> T {
        match self.kind {
            Kind::Pareto { alpha, gamma } => {
                ((T::one() - u).powf(-alpha.recip()) - T::one()) / gamma
            }
            Kind::Exponential => -(-u).ln_1p(),
            Kind::Erlang { .. } => bisect_increasing(|t| T::one() - self.survival(t), u),
        }
    }

    /// Inverse of the age cdf `F`. Closed form except for Erlang, which bisects.
    pub fn age_quantile(&self, u: T) -> T {
        match self.kind {
            Kind::Pareto { alpha, gamma } => {
                ((T::one() - u).powf(-(alpha - T::one()).recip()) - T::one()) / gamma
            }
            Kind::Exponential => -(-u).ln_1p(),
            Kind::Erlang { .. } => bisect_increasing(|t| T::one() - self.age_survival(t), u),
        }
    }

    /// Draw an inter-arrival time from `F0`.
    pub fn sample_interarrival<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self.kind {
            Kind::Erlang { k } => erlang_variate(rng, k, k),
            _ => self.interarrival_quantile(uniform(rng)),
        }
    }

    /// Draw an age from the stationary age law `F`.
    pub fn sample_age<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self.kind {
            Kind::Erlang { k } => {
                let stages = rng.random_range(1..=k);
                erlang_variate(rng, stages, k)
            }
            _ => self.age_quantile(uniform(rng)),
        }
    }

    /// Draw the `(age, residual)` pair of the interval covering a stationary
    /// instant: the age follows `F` and the residual follows `F0` conditioned
    /// on exceeding the age.
    pub fn sample_stationary_interval<R: Rng + ?Sized>(&self, rng: &mut R) -> (T, T) {
        match self.kind {
            Kind::Pareto { alpha, gamma } => {
                let age = self.age_quantile(uniform(rng));
                // (1 + γ(a + s))^{-α} / (1 + γ a)^{-α} = v
                let v = T::one() - uniform::<T, R>(rng);
                let base = T::one() + gamma * age;
                let residual = base * (v.powf(-alpha.recip()) - T::one()) / gamma;
                (age, residual)
            }
            Kind::Exponential => {
                let age = self.age_quantile(uniform(rng));
                (age, self.interarrival_quantile(uniform(rng)))
            }
            Kind::Erlang { k } => {
                // The stage process is a stationary Poisson stream of rate k
                // with a uniform stage label; j completed-or-current stages lie
                // behind the instant and k − j + 1 ahead of it.
                let behind = rng.random_range(1..=k);
                let age = erlang_variate(rng, behind, k);
                let residual = erlang_variate(rng, k - behind + 1, k);
                (age, residual)
            }
        }
    }
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if t < T::zero() || t.is_nan() {
        Err(Error::NegativeTime(t.as_f64()))
    } else {
        Ok(())
    }
}

fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.random::<f64>())
}

/// Sum of `stages` exponentials of the given integer rate.
fn erlang_variate<T: Real, R: Rng + ?Sized>(rng: &mut R, stages: u32, rate: u32) -> T {
    let mut log_prod = 0.0f64;
    for _ in 0..stages {
        log_prod += (1.0 - rng.random::<f64>()).ln();
    }
    T::lit(-log_prod / f64::from(rate))
}

fn ln_factorial<T: Real>(n: u32) -> T {
    (2..=n).map(|j| T::from_u32(j).unwrap().ln()).sum()
}

/// `P(Poisson(a) ≥ j)`, the cdf at `a / rate` of an Erlang with `j` stages.
pub(crate) fn erlang_stage_cdf<T: Real>(a: T, j: u32) -> T {
    if a <= T::zero() {
        return T::zero();
    }
    let jf = T::from_u32(j).unwrap();
    if a < jf {
        // Upper Poisson tail from j; terms are decreasing.
        let mut term = (jf * a.ln() - a - ln_factorial::<T>(j)).exp();
        let mut sum = T::zero();
        let mut m = jf;
        loop {
            sum = sum + term;
            m = m + T::one();
            term = term * a / m;
            if term <= sum * T::epsilon() {
                break;
            }
        }
        sum.min(T::one())
    } else {
        let mut term = (-a).exp();
        let mut sum = T::zero();
        for m in 0..j {
            if m > 0 {
                term = term * a / T::from_u32(m).unwrap();
            }
            sum = sum + term;
        }
        (T::one() - sum).max(T::zero())
    }
}

/// Erlang-B blocking probability `B(a, m)` by the standard recursion.
pub fn erlang_b<T: Real>(a: T, m: u32) -> T {
    let mut b = T::one();
    for n in 1..=m {
        let n = T::from_u32(n).unwrap();
        b = a * b / (n + a * b);
    }
    b
}

/// Solve `f(t) = u` for a nondecreasing `f` on `[0, ∞)` with `f(0) = 0`.
fn bisect_increasing<T: Real>(f: impl Fn(T) -> T, u: T) -> T {
    if u <= T::zero() {
        return T::zero();
    }
    if u >= T::one() {
        return T::infinity();
    }
    let mut lo = T::zero();
    let mut hi = T::one();
    while f(hi) < u {
        lo = hi;
        hi = hi + hi;
    }
    for _ in 0..2000 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + (hi - lo) / T::lit(2.0)
}
