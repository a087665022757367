//! Per-item stationary renewal sources and the shared event queue.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::InterArrivalModel;
use crate::popularity::IntensityVector;
use crate::scalar::Real;

/// Renewal stream of one item, scaled from the base model by `rate`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalSource<T> {
    pub item_id: usize,
    pub rate: T,
    /// Last arrival strictly before the current time; negative at start.
    pub last_arrival: T,
    pub next_arrival: T,
}

impl<T: Real> RenewalSource<T> {
    /// Move to the next arrival with a base-scale gap (a draw from `F0`).
    /// Returns the new `next_arrival`.
    pub fn advance_by_base_gap(&mut self, base_gap: T) -> T {
        self.last_arrival = self.next_arrival;
        self.next_arrival = self.last_arrival + base_gap / self.rate;
        self.next_arrival
    }

    pub fn advance<R: Rng + ?Sized>(&mut self, model: &InterArrivalModel<T>, rng: &mut R) -> T {
        let gap = model.sample_interarrival(rng);
        self.advance_by_base_gap(gap)
    }

    /// `λ_i η(λ_i (t − τ⁻))` evaluated with the last arrival before `t`.
    #[inline]
    pub fn stochastic_intensity(&self, model: &InterArrivalModel<T>, t: T) -> T {
        self.rate * model.hazard(self.rate * (t - self.last_arrival))
    }

    /// Elapsed time since the last arrival.
    #[inline]
    pub fn age(&self, t: T) -> T {
        t - self.last_arrival
    }
}

/// Sources observed at a stationary instant `t = 0`: each item's age and
/// residual life are drawn from their joint stationary law.
pub fn init_stationary<T: Real, R: Rng + ?Sized>(
    iv: &IntensityVector<T>,
    model: &InterArrivalModel<T>,
    rng: &mut R,
) -> Vec<RenewalSource<T>> {
    iv.rates()
        .iter()
        .enumerate()
        .map(|(item_id, &rate)| {
            let (age, residual) = model.sample_stationary_interval(rng);
            RenewalSource {
                item_id,
                rate,
                last_arrival: -age / rate,
                next_arrival: residual / rate,
            }
        })
        .collect()
}

/// Sources started with an arrival at `−warmup` each and run forward to time
/// 0. Approaches the stationary start as `warmup` grows.
pub fn init_from_warmup<T: Real, R: Rng + ?Sized>(
    iv: &IntensityVector<T>,
    model: &InterArrivalModel<T>,
    rng: &mut R,
    warmup: T,
) -> Vec<RenewalSource<T>> {
    iv.rates()
        .iter()
        .enumerate()
        .map(|(item_id, &rate)| {
            let mut s = RenewalSource {
                item_id,
                rate,
                last_arrival: -warmup - T::one(),
                next_arrival: -warmup,
            };
            while s.next_arrival <= T::zero() {
                s.advance(model, rng);
            }
            s
        })
        .collect()
}

/// A pending arrival.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arrival<T> {
    pub time: T,
    pub item: usize,
}

impl<T: Real> Eq for Arrival<T> {}

impl<T: Real> Ord for Arrival<T> {
    /// Reversed so that `BinaryHeap` pops the earliest arrival, lower item id
    /// first on equal times.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .partial_cmp(&self.time)
            .expect("NaN arrival time")
            .then_with(|| other.item.cmp(&self.item))
    }
}

impl<T: Real> PartialOrd for Arrival<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All sources of one system plus the queue of their next arrivals.
#[derive(Clone, Debug)]
pub struct SourceSet<T> {
    model: InterArrivalModel<T>,
    sources: Vec<RenewalSource<T>>,
    queue: BinaryHeap<Arrival<T>>,
    now: T,
}

impl<T: Real> SourceSet<T> {
    pub fn new(model: InterArrivalModel<T>, sources: Vec<RenewalSource<T>>) -> Self {
        let queue = sources
            .iter()
            .map(|s| Arrival {
                time: s.next_arrival,
                item: s.item_id,
            })
            .collect();
        Self {
            model,
            sources,
            queue,
            now: T::zero(),
        }
    }

    pub fn stationary<R: Rng + ?Sized>(
        model: InterArrivalModel<T>,
        iv: &IntensityVector<T>,
        rng: &mut R,
    ) -> Self {
        let sources = init_stationary(iv, &model, rng);
        Self::new(model, sources)
    }

    pub fn model(&self) -> &InterArrivalModel<T> {
        &self.model
    }

    pub fn sources(&self) -> &[RenewalSource<T>] {
        &self.sources
    }

    pub fn now(&self) -> T {
        self.now
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn peek_time(&self) -> Option<T> {
        self.queue.peek().map(|a| a.time)
    }

    /// Remove the earliest pending arrival and move the clock to it. The
    /// source still reports its previous arrival until [`Self::complete`].
    pub fn pop(&mut self) -> Option<Arrival<T>> {
        let a = self.queue.pop()?;
        self.now = a.time;
        Some(a)
    }

    /// Record the arrival returned by [`Self::pop`] and schedule the next one.
    pub fn complete<R: Rng + ?Sized>(&mut self, arrival: Arrival<T>, rng: &mut R) {
        let src = &mut self.sources[arrival.item];
        debug_assert_eq!(src.next_arrival, arrival.time);
        let next = src.advance(&self.model, rng);
        self.queue.push(Arrival {
            time: next,
            item: arrival.item,
        });
    }

    /// Current OHRs `X_j(t)` of all items, for `t` between arrivals.
    pub fn intensities_at(&self, t: T) -> Vec<T> {
        self.sources
            .iter()
            .map(|s| s.stochastic_intensity(&self.model, t))
            .collect()
    }
}
