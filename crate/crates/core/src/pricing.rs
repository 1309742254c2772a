//! Exact pricing: find the minimum reduced-cost route for given duals.
//!
//! The workhorse is a forward labeling scan over states `(visited set, last
//! customer)`. Remaining capacity is a function of the visited set, so the
//! state space is exact; a subset-dominance rule prunes labels that provably
//! cannot beat a kept one. Pruning can be disabled to cross-check against
//! pure enumeration, and [`brute_force_price`] is an independent depth-first
//! oracle that works from the column-form reduced cost instead of edge sums.

use std::collections::HashMap;

use crate::column::{make_route, Duals, Route};
use crate::instance::CvrpInstance;
use crate::scalar::Scalar;

/// Default cap on enumerated sequences for the oracle paths.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 10_000_000;

#[derive(Debug, thiserror::Error)]
pub enum PricingError {
    #[error("labeling pricer supports at most 64 customers, instance has {0}")]
    TooManyCustomers(usize),
    #[error("enumeration would visit about {bound} sequences, above the limit {limit}")]
    EnumerationTooLarge { bound: u128, limit: u64 },
}

/// Reduced costs of the arcs a route can use: each arc price folds in the
/// dual of the customer it arrives at, and arcs returning to the depot carry
/// the vehicle-row dual. Arc prices do not depend on remaining capacity, so
/// one table per arc suffices.
#[derive(Debug, Clone)]
pub struct EdgeReducedCosts<S> {
    start: Vec<S>,
    finish: Vec<S>,
    step: Vec<Vec<S>>,
}

impl<S: Scalar> EdgeReducedCosts<S> {
    pub fn new(instance: &CvrpInstance, duals: &Duals<S>) -> EdgeReducedCosts<S> {
        let n = instance.n_customers();
        assert_eq!(duals.customer.len(), n, "duals must match the instance");
        let start = (0..n)
            .map(|u| S::from_i64(instance.depot_distance(u)) - duals.customer[u])
            .collect();
        let finish = (0..n)
            .map(|u| S::from_i64(instance.depot_distance(u)) + duals.vehicle)
            .collect();
        let step = (0..n)
            .map(|u| {
                (0..n)
                    .map(|v| S::from_i64(instance.distance(u, v)) - duals.customer[v])
                    .collect()
            })
            .collect();
        EdgeReducedCosts {
            start,
            finish,
            step,
        }
    }

    /// Depot -> `u` arc price.
    pub fn start(&self, u: usize) -> S {
        self.start[u]
    }

    /// `u` -> depot arc price.
    pub fn finish(&self, u: usize) -> S {
        self.finish[u]
    }

    /// `u` -> `v` arc price.
    pub fn step(&self, u: usize, v: usize) -> S {
        self.step[u][v]
    }
}

/// Reduced cost of a route accumulated arc by arc. Agrees with the
/// column-form [`reduced_cost`] up to floating-point rounding.
pub fn edge_sum_reduced_cost<S: Scalar>(route: &Route, erc: &EdgeReducedCosts<S>) -> S {
    let seq = route.sequence();
    let Some((&first, &last)) = seq.first().zip(seq.last()) else {
        return S::zero();
    };
    let mut total = erc.start(first);
    for w in seq.windows(2) {
        total = total + erc.step(w[0], w[1]);
    }
    total + erc.finish(last)
}

#[derive(Debug, Clone, Copy)]
pub struct PricingOptions {
    /// Disable to fall back to pure label enumeration (exponential; guarded
    /// by `enumeration_limit`). Used to validate the dominance rule.
    pub use_dominance: bool,
    /// Number of best distinct routes to return. The solver loops use 1.
    pub top_k: usize,
    pub enumeration_limit: u64,
}

impl Default for PricingOptions {
    fn default() -> PricingOptions {
        PricingOptions {
            use_dominance: true,
            top_k: 1,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

/// Number of nonempty elementary capacity-feasible sequences, overcounted by
/// ignoring all but the cheapest-demand capacity pruning.
fn enumeration_bound(instance: &CvrpInstance) -> u128 {
    let n = instance.n_customers();
    let mut demands: Vec<u32> = (0..n).map(|u| instance.demand(u)).collect();
    demands.sort_unstable();
    let mut cap = instance.capacity();
    let mut max_len = 0usize;
    for d in demands {
        if d <= cap {
            cap -= d;
            max_len += 1;
        } else {
            break;
        }
    }
    let mut total: u128 = 0;
    let mut perms: u128 = 1;
    for k in 1..=max_len {
        perms = perms.saturating_mul((n - k + 1) as u128);
        total = total.saturating_add(perms);
    }
    total
}

struct Arena {
    nodes: Vec<(u32, u32)>,
}

impl Arena {
    const ROOT: u32 = u32::MAX;

    fn new() -> Arena {
        Arena { nodes: Vec::new() }
    }

    fn push(&mut self, last: usize, pred: u32) -> u32 {
        self.nodes.push((last as u32, pred));
        (self.nodes.len() - 1) as u32
    }

    fn sequence(&self, mut id: u32) -> Vec<usize> {
        let mut seq = Vec::new();
        while id != Self::ROOT {
            let (last, pred) = self.nodes[id as usize];
            seq.push(last as usize);
            id = pred;
        }
        seq.reverse();
        seq
    }
}

/// Best candidate tracker: smaller value wins; bitwise-equal values fall back
/// to the lexicographically smaller customer sequence, with the empty route
/// (value zero) as the baseline.
struct Best<S> {
    value: S,
    arena_id: Option<u32>,
}

impl<S: Scalar> Best<S> {
    fn new() -> Best<S> {
        Best {
            value: S::zero(),
            arena_id: None,
        }
    }

    fn offer(&mut self, value: S, id: u32, arena: &Arena) {
        if value < self.value {
            self.value = value;
            self.arena_id = Some(id);
        } else if value == self.value {
            let candidate = arena.sequence(id);
            let incumbent = match self.arena_id {
                Some(cur) => arena.sequence(cur),
                None => Vec::new(),
            };
            if candidate < incumbent {
                self.arena_id = Some(id);
            }
        }
    }
}

struct Label<S> {
    visited: u64,
    last: usize,
    cap_left: u32,
    cost: S,
    id: u32,
}

/// Returns the minimum reduced-cost route for the given duals, together with
/// that reduced cost. The empty route (reduced cost zero) is admitted as a
/// candidate, so a nonnegative result means no route prices out.
pub fn price<S: Scalar>(
    instance: &CvrpInstance,
    duals: &Duals<S>,
) -> Result<(Route, S), PricingError> {
    let mut best = price_with_options(instance, duals, &PricingOptions::default())?;
    Ok(best.pop().expect("top-1 pricing always yields a candidate"))
}

/// Pricing with explicit options; returns up to `top_k` best distinct routes
/// in ascending reduced-cost order (the empty route among them).
pub fn price_with_options<S: Scalar>(
    instance: &CvrpInstance,
    duals: &Duals<S>,
    options: &PricingOptions,
) -> Result<Vec<(Route, S)>, PricingError> {
    let n = instance.n_customers();
    if n > 64 {
        return Err(PricingError::TooManyCustomers(n));
    }
    if !options.use_dominance {
        let bound = enumeration_bound(instance);
        if bound > options.enumeration_limit as u128 {
            return Err(PricingError::EnumerationTooLarge {
                bound,
                limit: options.enumeration_limit,
            });
        }
    }
    let erc = EdgeReducedCosts::new(instance, duals);
    let mut arena = Arena::new();
    let mut best = Best::new();
    let mut collected: Vec<(S, u32)> = Vec::new();
    let collect_all = options.top_k > 1;

    // Per-last-customer dominance buckets: (visited, cap_left, cost).
    // A label is dropped when some kept label with the same last customer
    // visited a subset at no more cost with at least as much capacity left:
    // every completion of the dropped label is then available to the keeper.
    let mut buckets: Vec<Vec<(u64, u32, S)>> = vec![Vec::new(); n];
    let dominated = |buckets: &[Vec<(u64, u32, S)>], l: &Label<S>| {
        buckets[l.last]
            .iter()
            .any(|&(vis, cap, cost)| vis & l.visited == vis && cap >= l.cap_left && cost <= l.cost)
    };

    let mut current: Vec<Label<S>> = Vec::new();
    for u in 0..n {
        let label = Label {
            visited: 1u64 << u,
            last: u,
            cap_left: instance.capacity() - instance.demand(u),
            cost: erc.start(u),
            id: arena.push(u, Arena::ROOT),
        };
        if options.use_dominance {
            if dominated(&buckets, &label) {
                continue;
            }
            buckets[u].push((label.visited, label.cap_left, label.cost));
        }
        current.push(label);
    }

    while !current.is_empty() {
        let mut merged: HashMap<(u64, usize), usize> = HashMap::new();
        let mut next: Vec<Label<S>> = Vec::new();
        for label in &current {
            best.offer(label.cost + erc.finish(label.last), label.id, &arena);
            if collect_all {
                collected.push((label.cost + erc.finish(label.last), label.id));
            }
            for v in 0..n {
                if label.visited & (1u64 << v) != 0 || instance.demand(v) > label.cap_left {
                    continue;
                }
                let candidate = Label {
                    visited: label.visited | (1u64 << v),
                    last: v,
                    cap_left: label.cap_left - instance.demand(v),
                    cost: label.cost + erc.step(label.last, v),
                    id: label.id,
                };
                if options.use_dominance {
                    if dominated(&buckets, &candidate) {
                        continue;
                    }
                    match merged.entry((candidate.visited, v)) {
                        std::collections::hash_map::Entry::Occupied(slot) => {
                            let kept = &mut next[*slot.get()];
                            let replace = candidate.cost < kept.cost
                                || (candidate.cost == kept.cost
                                    && arena.sequence(candidate.id) < arena.sequence(kept.id));
                            if !replace {
                                continue;
                            }
                            let id = arena.push(v, candidate.id);
                            kept.cap_left = candidate.cap_left;
                            kept.cost = candidate.cost;
                            kept.id = id;
                        }
                        std::collections::hash_map::Entry::Vacant(slot) => {
                            slot.insert(next.len());
                            let id = arena.push(v, candidate.id);
                            next.push(Label { id, ..candidate });
                        }
                    }
                    buckets[v].push((candidate.visited, candidate.cap_left, candidate.cost));
                } else {
                    let id = arena.push(v, candidate.id);
                    next.push(Label { id, ..candidate });
                }
            }
        }
        // Fixed processing order keeps pruning and tie-breaking reproducible.
        next.sort_unstable_by_key(|l| (l.visited, l.last));
        current = next;
    }

    if !collect_all {
        let (route, value) = finish_single(instance, &arena, &best)?;
        return Ok(vec![(route, value)]);
    }

    collected.push((S::zero(), Arena::ROOT));
    collected.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("reduced costs are finite")
            .then_with(|| arena.sequence(a.1).cmp(&arena.sequence(b.1)))
    });
    let mut out: Vec<(Route, S)> = Vec::new();
    let mut seen: Vec<Vec<usize>> = Vec::new();
    for (value, id) in collected {
        if out.len() == options.top_k {
            break;
        }
        let seq = if id == Arena::ROOT {
            Vec::new()
        } else {
            arena.sequence(id)
        };
        if seen.contains(&seq) {
            continue;
        }
        let route = if seq.is_empty() {
            Route::empty()
        } else {
            make_route(&seq, instance).expect("labels only extend feasibly")
        };
        seen.push(seq);
        out.push((route, value));
    }
    Ok(out)
}

fn finish_single<S: Scalar>(
    instance: &CvrpInstance,
    arena: &Arena,
    best: &Best<S>,
) -> Result<(Route, S), PricingError> {
    match best.arena_id {
        None => Ok((Route::empty(), S::zero())),
        Some(id) => {
            let seq = arena.sequence(id);
            let route = make_route(&seq, instance).expect("labels only extend feasibly");
            Ok((route, best.value))
        }
    }
}

/// Depth-first oracle over all elementary capacity-feasible sequences in
/// lexicographic order, scoring each with the column-form reduced cost.
/// Ties keep the first (lexicographically smallest) sequence.
pub fn brute_force_price<S: Scalar>(
    instance: &CvrpInstance,
    duals: &Duals<S>,
) -> Result<(Route, S), PricingError> {
    brute_force_price_with_limit(instance, duals, DEFAULT_ENUMERATION_LIMIT)
}

pub fn brute_force_price_with_limit<S: Scalar>(
    instance: &CvrpInstance,
    duals: &Duals<S>,
    limit: u64,
) -> Result<(Route, S), PricingError> {
    let bound = enumeration_bound(instance);
    if bound > limit as u128 {
        return Err(PricingError::EnumerationTooLarge { bound, limit });
    }
    let mut best_value = S::zero();
    let mut best_seq: Option<Vec<usize>> = None;
    visit_sequences(instance, &mut |seq, cost, _demand| {
        let covered: S = seq.iter().map(|&u| duals.customer[u]).sum();
        let value = S::from_i64(cost) - covered + duals.vehicle;
        if value < best_value {
            best_value = value;
            best_seq = Some(seq.to_vec());
        }
    });
    match best_seq {
        None => Ok((Route::empty(), S::zero())),
        Some(seq) => {
            let route = make_route(&seq, instance).expect("enumeration is feasible");
            Ok((route, best_value))
        }
    }
}

/// All nonempty elementary capacity-feasible routes, in lexicographic
/// sequence order. Intended for desk-scale oracles; guarded by `limit`.
pub fn enumerate_elementary_routes(
    instance: &CvrpInstance,
    limit: u64,
) -> Result<Vec<Route>, PricingError> {
    let bound = enumeration_bound(instance);
    if bound > limit as u128 {
        return Err(PricingError::EnumerationTooLarge { bound, limit });
    }
    let mut routes = Vec::new();
    visit_sequences(instance, &mut |seq, cost, demand| {
        routes.push(Route::new_unchecked(seq.to_vec(), cost, demand));
    });
    Ok(routes)
}

/// Visits every nonempty elementary capacity-feasible sequence depth-first in
/// lexicographic order, reporting the full closed-walk cost and total demand.
fn visit_sequences(instance: &CvrpInstance, visit: &mut impl FnMut(&[usize], i64, u32)) {
    let n = instance.n_customers();
    let mut seq: Vec<usize> = Vec::new();
    let mut used = vec![false; n];
    fn rec(
        instance: &CvrpInstance,
        seq: &mut Vec<usize>,
        used: &mut [bool],
        cost_out: i64,
        demand: u32,
        visit: &mut impl FnMut(&[usize], i64, u32),
    ) {
        for v in 0..instance.n_customers() {
            if used[v] || demand + instance.demand(v) > instance.capacity() {
                continue;
            }
            let leg = match seq.last() {
                None => instance.depot_distance(v),
                Some(&last) => instance.distance(last, v),
            };
            let out = cost_out + leg;
            seq.push(v);
            used[v] = true;
            visit(seq, out + instance.depot_distance(v), demand + instance.demand(v));
            rec(instance, seq, used, out, demand + instance.demand(v), visit);
            used[v] = false;
            seq.pop();
        }
    }
    rec(instance, &mut seq, &mut used, 0, 0, visit);
}
