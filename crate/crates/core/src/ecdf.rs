//! Empirical distribution functions, quantiles and sup-norm distances.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Right-continuous step cdf of a finite sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf<T> {
    sorted: Vec<T>,
}

impl<T: Real> EmpiricalCdf<T> {
    pub fn new(mut sample: Vec<T>) -> Self {
        sample.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
        Self { sorted: sample }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn points(&self) -> &[T] {
        &self.sorted
    }

    /// Number of sample points `≤ x`.
    pub fn count_le(&self, x: T) -> usize {
        self.sorted.partition_point(|&v| v <= x)
    }

    pub fn eval(&self, x: T) -> T {
        if self.sorted.is_empty() {
            return T::zero();
        }
        T::from_usize_lossy(self.count_le(x)) / T::from_usize_lossy(self.len())
    }

    /// `inf { x : F̂(x) ≥ p }`; the smallest point for `p ≤ 0` and `+∞` for
    /// `p > 1`.
    pub fn quantile(&self, p: T) -> T {
        let n = self.len();
        if n == 0 || p > T::one() {
            return T::infinity();
        }
        if p <= T::zero() {
            return self.sorted[0];
        }
        // smallest k (1-based) with k / n ≥ p
        let k = (p * T::from_usize_lossy(n)).ceil().to_usize().unwrap_or(n);
        // guard against p·n rounding just above an integer
        let k = if k > 1 && T::from_usize_lossy(k - 1) / T::from_usize_lossy(n) >= p {
            k - 1
        } else {
            k
        };
        self.sorted[k.clamp(1, n) - 1]
    }

    /// 1-based order statistic `Y_k`.
    pub fn order_statistic(&self, k: usize) -> T {
        self.sorted[k - 1]
    }

    /// Sample with the `i`-th point (in sorted order) removed.
    pub fn without_rank(&self, i: usize) -> Self {
        let mut sorted = self.sorted.clone();
        sorted.remove(i);
        Self { sorted }
    }

    /// Kolmogorov distance `sup_x |F̂(x) − F(x)|` to a continuous cdf.
    pub fn sup_distance_to(&self, cdf: impl Fn(T) -> T) -> T {
        let n = T::from_usize_lossy(self.len());
        let mut d = T::zero();
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = cdf(x);
            let below = T::from_usize_lossy(i) / n;
            let above = T::from_usize_lossy(i + 1) / n;
            d = d.max((f - below).abs()).max((above - f).abs());
        }
        d
    }

    /// `sup_x |F̂(x) − Ĝ(x)|` between two step cdfs.
    pub fn sup_distance(&self, other: &Self) -> T {
        let mut d = T::zero();
        for &x in self.sorted.iter().chain(other.sorted.iter()) {
            d = d.max((self.eval(x) - other.eval(x)).abs());
        }
        d
    }

    /// [`Self::sup_distance`] as an exact fraction `(num, den)`, free of
    /// rounding, for checks against bounds such as `1/N`.
    pub fn sup_distance_exact(&self, other: &Self) -> (u128, u128) {
        let (na, nb) = (self.len() as u128, other.len() as u128);
        let mut num = 0u128;
        for &x in self.sorted.iter().chain(other.sorted.iter()) {
            let a = self.count_le(x) as u128 * nb;
            let b = other.count_le(x) as u128 * na;
            num = num.max(a.abs_diff(b));
        }
        (num, na * nb)
    }
}

/// Kolmogorov–Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic<T: Real>(sample: Vec<T>, cdf: impl Fn(T) -> T) -> T {
    EmpiricalCdf::new(sample).sup_distance_to(cdf)
}
