//! Storage policies behind one decision interface.
//!
//! Every decision for an arrival of item `i` at time `t` is taken before the
//! source of `i` is advanced, so it only sees arrivals strictly before `t`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::{HazardMonotonicity, InterArrivalModel};
use crate::error::{Error, Result};
use crate::popularity::IntensityVector;
use crate::process::RenewalSource;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Hit,
    Miss,
}

impl Decision {
    #[inline]
    pub fn from_hit(hit: bool) -> Self {
        if hit {
            Decision::Hit
        } else {
            Decision::Miss
        }
    }

    pub fn is_hit(self) -> bool {
        self == Decision::Hit
    }
}

/// A concrete policy with all parameters resolved.
#[derive(Clone, Debug, PartialEq)]
pub enum PolicyKind<T> {
    /// Store the `capacity` items of highest current intensity.
    OptimalCausal { capacity: usize },
    /// Store every item whose current intensity exceeds `theta`.
    FixedThreshold { theta: T },
    /// Store the `capacity` most popular items forever.
    Static { capacity: usize },
    Lru { capacity: usize },
    /// Keep item `i` for `timers[i]` after each of its requests.
    TtlCache { timers: Vec<T> },
    /// Evict item `i` at each request and fetch it back `timers[i]` later.
    TtlPrefetch { timers: Vec<T> },
}

impl<T: Real> PolicyKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::OptimalCausal { .. } => "optimal",
            PolicyKind::FixedThreshold { .. } => "threshold",
            PolicyKind::Static { .. } => "static",
            PolicyKind::Lru { .. } => "lru",
            PolicyKind::TtlCache { .. } => "ttl",
            PolicyKind::TtlPrefetch { .. } => "prefetch",
        }
    }
}

/// Serializable policy choice; thresholds default to the capacity-matched
/// `θ_C` of [`threshold_from_capacity`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    Optimal,
    Static,
    Lru,
    Threshold {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
    },
    Ttl {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
    },
    Prefetch {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
    },
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Optimal => "optimal",
            PolicySpec::Static => "static",
            PolicySpec::Lru => "lru",
            PolicySpec::Threshold { .. } => "threshold",
            PolicySpec::Ttl { .. } => "ttl",
            PolicySpec::Prefetch { .. } => "prefetch",
        }
    }

    pub fn resolve<T: Real>(
        &self,
        iv: &IntensityVector<T>,
        model: &InterArrivalModel<T>,
        capacity: usize,
    ) -> Result<PolicyKind<T>> {
        let theta = |given: Option<f64>| match given {
            Some(th) => Ok(T::lit(th)),
            None => threshold_from_capacity(iv, model, capacity),
        };
        Ok(match *self {
            PolicySpec::Optimal => PolicyKind::OptimalCausal { capacity },
            PolicySpec::Static => PolicyKind::Static { capacity },
            PolicySpec::Lru => PolicyKind::Lru { capacity },
            PolicySpec::Threshold { theta: th } => PolicyKind::FixedThreshold { theta: theta(th)? },
            PolicySpec::Ttl { theta: th } => PolicyKind::TtlCache {
                timers: threshold_timers(iv, model, theta(th)?)?,
            },
            PolicySpec::Prefetch { theta: th } => PolicyKind::TtlPrefetch {
                timers: threshold_timers(iv, model, theta(th)?)?,
            },
        })
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "optimal" | "optimal_causal" | "optimalcausal" => PolicySpec::Optimal,
            "static" => PolicySpec::Static,
            "lru" => PolicySpec::Lru,
            "threshold" | "fixed_threshold" => PolicySpec::Threshold { theta: None },
            "ttl" | "ttl_cache" => PolicySpec::Ttl { theta: None },
            "prefetch" | "ttl_prefetch" => PolicySpec::Prefetch { theta: None },
            other => return Err(Error::InvalidParameter(format!("unknown policy `{other}`"))),
        })
    }
}

/// Optimal causal rule: hit iff fewer than `capacity` other items have a
/// strictly larger current intensity (equal intensities rank lower ids first).
pub fn optimal_decide<T: Real>(
    model: &InterArrivalModel<T>,
    sources: &[RenewalSource<T>],
    capacity: usize,
    item: usize,
    t: T,
) -> Decision {
    if capacity >= sources.len() {
        return Decision::Hit;
    }
    let own = sources[item].stochastic_intensity(model, t);
    let mut ahead = 0usize;
    for (j, s) in sources.iter().enumerate() {
        if j == item {
            continue;
        }
        let x = s.stochastic_intensity(model, t);
        if x > own || (x == own && j < item) {
            ahead += 1;
            if ahead >= capacity {
                return Decision::Miss;
            }
        }
    }
    Decision::Hit
}

pub fn threshold_decide<T: Real>(
    model: &InterArrivalModel<T>,
    sources: &[RenewalSource<T>],
    theta: T,
    item: usize,
    t: T,
) -> Decision {
    Decision::from_hit(sources[item].stochastic_intensity(model, t) > theta)
}

pub fn ttl_cache_decide<T: Real>(
    sources: &[RenewalSource<T>],
    timers: &[T],
    item: usize,
    t: T,
) -> Decision {
    Decision::from_hit(sources[item].age(t) < timers[item])
}

pub fn ttl_prefetch_decide<T: Real>(
    sources: &[RenewalSource<T>],
    timers: &[T],
    item: usize,
    t: T,
) -> Decision {
    Decision::from_hit(sources[item].age(t) > timers[item])
}

/// `Ḡ_N(x) = (1/N) Σ G(x / λ_i)`, the mean cdf of the current OHRs.
pub fn mean_ohr_cdf<T: Real>(iv: &IntensityVector<T>, model: &InterArrivalModel<T>, x: T) -> T {
    let n = T::from_usize_lossy(iv.len());
    iv.rates().iter().map(|&r| model.ohr_cdf(x / r)).sum::<T>() / n
}

/// `inf { x : Ḡ_N(x) ≥ p }`.
pub fn mean_ohr_quantile<T: Real>(
    iv: &IntensityVector<T>,
    model: &InterArrivalModel<T>,
    p: T,
) -> T {
    if p <= T::zero() {
        return T::zero();
    }
    let mut lo = T::zero();
    // Above λ_1 · sup η every item's OHR cdf has reached 1.
    let mut hi = iv.rates()[0] * model.hazard_sup();
    if mean_ohr_cdf(iv, model, hi) < p {
        return hi;
    }
    for _ in 0..400 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_ohr_cdf(iv, model, mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Threshold `θ_C` whose expected occupancy equals `capacity`:
/// `(1/N) Σ G(θ_C / λ_i) = 1 − C/N`.
pub fn threshold_from_capacity<T: Real>(
    iv: &IntensityVector<T>,
    model: &InterArrivalModel<T>,
    capacity: usize,
) -> Result<T> {
    let n = iv.len();
    if capacity == 0 || capacity > n {
        return Err(Error::InvalidParameter(format!(
            "capacity must lie in 1..={n}, got {capacity}"
        )));
    }
    if capacity == n {
        return Ok(T::zero());
    }
    let p = T::one() - T::from_usize_lossy(capacity) / T::from_usize_lossy(n);
    Ok(mean_ohr_quantile(iv, model, p))
}

/// Per-item timers reproducing the threshold policy `θ`:
/// `T_i = η^{-1}(θ / λ_i) / λ_i`. Thresholds outside the hazard range map to
/// zero or infinite timers. Decreasing hazards give TTL-cache timers,
/// increasing hazards give prefetch timers.
pub fn threshold_timers<T: Real>(
    iv: &IntensityVector<T>,
    model: &InterArrivalModel<T>,
    theta: T,
) -> Result<Vec<T>> {
    let dir = model.monotonicity();
    if dir == HazardMonotonicity::Constant {
        return Err(Error::Unsupported);
    }
    let (below, above) = match dir {
        // θ ≤ inf η: always store; θ ≥ sup η: never store
        HazardMonotonicity::Decreasing => (T::infinity(), T::zero()),
        _ => (T::zero(), T::infinity()),
    };
    iv.rates()
        .iter()
        .map(|&r| {
            let x = theta / r;
            if x <= T::zero() {
                return Ok(below);
            }
            if x >= model.hazard_sup() {
                return Ok(above);
            }
            match model.hazard_inverse_with_tol(x, T::epsilon()) {
                Ok(t) => Ok(t / r),
                Err(Error::OutOfRange(_)) => Ok(if x > T::one() { above } else { below }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Doubly linked recency list over item ids.
#[derive(Clone, Debug)]
pub struct LruList {
    capacity: usize,
    prev: Vec<usize>,
    next: Vec<usize>,
    stored: Vec<bool>,
    head: usize,
    tail: usize,
    len: usize,
}

const NIL: usize = usize::MAX;

impl LruList {
    pub fn new(n_items: usize, capacity: usize) -> Self {
        Self {
            capacity,
            prev: vec![NIL; n_items],
            next: vec![NIL; n_items],
            stored: vec![false; n_items],
            head: NIL,
            tail: NIL,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, item: usize) -> bool {
        self.stored[item]
    }

    /// Most recent first.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors((self.head != NIL).then_some(self.head), move |&i| {
            (self.next[i] != NIL).then_some(self.next[i])
        })
    }

    fn unlink(&mut self, i: usize) {
        let (p, n) = (self.prev[i], self.next[i]);
        if p != NIL {
            self.next[p] = n;
        } else {
            self.head = n;
        }
        if n != NIL {
            self.prev[n] = p;
        } else {
            self.tail = p;
        }
        self.prev[i] = NIL;
        self.next[i] = NIL;
    }

    fn push_front(&mut self, i: usize) {
        self.next[i] = self.head;
        self.prev[i] = NIL;
        if self.head != NIL {
            self.prev[self.head] = i;
        }
        self.head = i;
        if self.tail == NIL {
            self.tail = i;
        }
    }

    /// Request `item`: hit iff stored; it becomes most recent either way.
    pub fn access(&mut self, item: usize) -> Decision {
        if self.stored[item] {
            self.unlink(item);
            self.push_front(item);
            return Decision::Hit;
        }
        if self.capacity == 0 {
            return Decision::Miss;
        }
        if self.len == self.capacity {
            let victim = self.tail;
            self.unlink(victim);
            self.stored[victim] = false;
            self.len -= 1;
        }
        self.push_front(item);
        self.stored[item] = true;
        self.len += 1;
        Decision::Miss
    }
}

/// A policy plus the private state it mutates.
#[derive(Clone, Debug)]
pub struct PolicyState<T> {
    kind: PolicyKind<T>,
    lru: Option<LruList>,
}

impl<T: Real> PolicyState<T> {
    pub fn new(kind: PolicyKind<T>, n_items: usize) -> Result<Self> {
        let check_cap = |c: usize| {
            if c == 0 || c > n_items {
                Err(Error::InvalidParameter(format!(
                    "capacity must lie in 1..={n_items}, got {c}"
                )))
            } else {
                Ok(())
            }
        };
        let check_timers = |t: &[T]| {
            if t.len() != n_items {
                return Err(Error::InvalidParameter(format!(
                    "expected {n_items} timers, got {}",
                    t.len()
                )));
            }
            if t.iter().any(|x| !(*x >= T::zero())) {
                return Err(Error::InvalidParameter("timers must be >= 0".into()));
            }
            Ok(())
        };
        let mut lru = None;
        match &kind {
            PolicyKind::OptimalCausal { capacity } | PolicyKind::Static { capacity } => {
                check_cap(*capacity)?
            }
            PolicyKind::Lru { capacity } => {
                check_cap(*capacity)?;
                lru = Some(LruList::new(n_items, *capacity));
            }
            PolicyKind::FixedThreshold { theta } => {
                if theta.is_nan() {
                    return Err(Error::InvalidParameter("threshold is NaN".into()));
                }
            }
            PolicyKind::TtlCache { timers } | PolicyKind::TtlPrefetch { timers } => {
                check_timers(timers)?
            }
        }
        Ok(Self { kind, lru })
    }

    pub fn kind(&self) -> &PolicyKind<T> {
        &self.kind
    }

    /// Decide the arrival of `item` at `t`, then update private state.
    pub fn decide(
        &mut self,
        model: &InterArrivalModel<T>,
        sources: &[RenewalSource<T>],
        item: usize,
        t: T,
    ) -> Decision {
        match &self.kind {
            PolicyKind::OptimalCausal { capacity } => {
                optimal_decide(model, sources, *capacity, item, t)
            }
            PolicyKind::FixedThreshold { theta } => {
                threshold_decide(model, sources, *theta, item, t)
            }
            PolicyKind::Static { capacity } => Decision::from_hit(item < *capacity),
            PolicyKind::Lru { .. } => self.lru.as_mut().expect("lru state").access(item),
            PolicyKind::TtlCache { timers } => ttl_cache_decide(sources, timers, item, t),
            PolicyKind::TtlPrefetch { timers } => ttl_prefetch_decide(sources, timers, item, t),
        }
    }

    /// Number of items held at a time `t` between arrivals.
    pub fn occupancy(&self, model: &InterArrivalModel<T>, sources: &[RenewalSource<T>], t: T) -> usize {
        match &self.kind {
            PolicyKind::OptimalCausal { capacity } | PolicyKind::Static { capacity } => {
                (*capacity).min(sources.len())
            }
            PolicyKind::Lru { .. } => self.lru.as_ref().map_or(0, LruList::len),
            PolicyKind::FixedThreshold { theta } => sources
                .iter()
                .filter(|s| s.stochastic_intensity(model, t) > *theta)
                .count(),
            PolicyKind::TtlCache { timers } => sources
                .iter()
                .zip(timers)
                .filter(|(s, &tm)| s.age(t) < tm)
                .count(),
            PolicyKind::TtlPrefetch { timers } => sources
                .iter()
                .zip(timers)
                .filter(|(s, &tm)| s.age(t) > tm)
                .count(),
        }
    }
}
