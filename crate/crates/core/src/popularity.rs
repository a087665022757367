//! Per-item request intensities and their distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Request rates `λ_1 ≥ … ≥ λ_N > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityVector<T> {
    rates: Vec<T>,
    /// Zipf exponent when generated by [`IntensityVector::zipf`].
    beta: Option<T>,
}

impl<T: Real> IntensityVector<T> {
    /// `λ_i = (N / i)^β`, so the least popular item has rate 1.
    pub fn zipf(n: usize, beta: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("catalog size must be >= 1".into()));
        }
        if !(beta >= T::zero()) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "zipf exponent must be finite and >= 0, got {beta}"
            )));
        }
        let nf = T::from_usize_lossy(n);
        let rates = (1..=n)
            .map(|i| (nf / T::from_usize_lossy(i)).powf(beta))
            .collect();
        Ok(Self {
            rates,
            beta: Some(beta),
        })
    }

    /// Arbitrary positive rates; sorted into nonincreasing order.
    pub fn from_rates(mut rates: Vec<T>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidParameter("empty rate vector".into()));
        }
        if let Some(bad) = rates.iter().find(|r| !(**r > T::zero()) || !r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rates must be positive and finite, got {bad}"
            )));
        }
        rates.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self { rates, beta: None })
    }

    pub fn rates(&self) -> &[T] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn beta(&self) -> Option<T> {
        self.beta
    }

    /// `λ^N = Σ λ_i`.
    pub fn total_rate(&self) -> T {
        self.rates.iter().copied().sum()
    }

    /// `∫ λ L_N(dλ) = λ^N / N`.
    pub fn mean_rate(&self) -> T {
        self.total_rate() / T::from_usize_lossy(self.len())
    }

    /// `L_N(λ) = #{i : λ_i ≤ λ} / N`.
    pub fn empirical_cdf(&self, lambda: T) -> T {
        // rates are sorted descending
        let above = self.rates.partition_point(|&r| r > lambda);
        T::from_usize_lossy(self.len() - above) / T::from_usize_lossy(self.len())
    }
}

/// Weak limit `L` of the Zipf intensity distributions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopularityLimit<T> {
    pub beta: T,
    /// True iff `β < 1`, the case where `L` has a finite mean.
    pub uniformly_integrable: bool,
}

impl<T: Real> PopularityLimit<T> {
    pub fn zipf(beta: T) -> Result<Self> {
        if !(beta >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "zipf exponent must be >= 0, got {beta}"
            )));
        }
        Ok(Self {
            beta,
            uniformly_integrable: beta < T::one(),
        })
    }

    pub fn cdf(&self, lambda: T) -> T {
        limit_cdf(self.beta, lambda)
    }

    /// `1/(1 − β)`, or `None` when the mean is infinite.
    pub fn mean(&self) -> Option<T> {
        self.uniformly_integrable
            .then(|| (T::one() - self.beta).recip())
    }

    /// `p`-quantile of `L`: `(1 − p)^{−β}`.
    pub fn quantile(&self, p: T) -> T {
        if self.beta == T::zero() {
            return T::one();
        }
        (T::one() - p).powf(-self.beta)
    }
}

/// `L(λ) = 1 − λ^{−1/β}` on `[1, ∞)`; the unit step at 1 when `β = 0`.
pub fn limit_cdf<T: Real>(beta: T, lambda: T) -> T {
    if lambda < T::one() {
        T::zero()
    } else if beta == T::zero() {
        T::one()
    } else {
        T::one() - lambda.powf(-beta.recip())
    }
}
