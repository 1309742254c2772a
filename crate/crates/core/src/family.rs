//! Families of routes induced by customer orderings.
//!
//! Every added route spawns a *family*: a total order on all customers that
//! keeps the route's own customers in visit order. The family's graph admits
//! exactly the elementary, capacity-feasible routes whose sequences ascend in
//! that order, encoded as source-to-sink paths over states `(customer,
//! remaining capacity after serving it)`. The master problem can then buy
//! fractional flow through the whole family at once instead of waiting for
//! each member route to be priced individually.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::column::Route;
use crate::instance::CvrpInstance;
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum FamilyError {
    #[error("orderings require at least one route customer")]
    EmptyRoute,
    #[error("invalid ordering: {0}")]
    InvalidOrdering(String),
    #[error("ordering covers {ordering} customers but the instance has {instance}")]
    WrongInstance { ordering: usize, instance: usize },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("flow has {got} edge weights, expected {expected}")]
    WrongFlowLength { expected: usize, got: usize },
    #[error("edge {edge} carries negative flow {value}")]
    NegativeFlow { edge: usize, value: f64 },
    #[error("flow not conserved at vertex {vertex}: imbalance {imbalance}")]
    FlowNotConserved { vertex: usize, imbalance: f64 },
}

/// A total order on all customers of an instance; position 0 is visited
/// first. Always a permutation of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitOrdering {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl VisitOrdering {
    pub fn new(order: Vec<usize>) -> Result<VisitOrdering, FamilyError> {
        let n = order.len();
        let mut position = vec![usize::MAX; n];
        for (idx, &u) in order.iter().enumerate() {
            if u >= n {
                return Err(FamilyError::InvalidOrdering(format!(
                    "customer {u} out of range for {n} customers"
                )));
            }
            if position[u] != usize::MAX {
                return Err(FamilyError::InvalidOrdering(format!(
                    "customer {u} appears twice"
                )));
            }
            position[u] = idx;
        }
        Ok(VisitOrdering { order, position })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Customers from first to last position.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Position of customer `u` in the order.
    pub fn position(&self, u: usize) -> usize {
        self.position[u]
    }

    /// Whether the route's sequence ascends in this order, i.e. whether the
    /// route belongs to the family's cone. Vacuously true for the empty
    /// route, which the graph itself does not carry (there is no direct
    /// source-to-sink edge).
    pub fn contains_route(&self, route: &Route) -> bool {
        route
            .sequence()
            .windows(2)
            .all(|w| self.position[w[0]] < self.position[w[1]])
    }
}

/// Builds the ordering a route spawns: the route's customers in visit order,
/// then every remaining customer inserted (in random order) right after its
/// nearest route customer, or at the front when it sits strictly closer to
/// the depot than to every route customer. Ties between equally near route
/// customers resolve to the earliest visit position, then the lowest
/// customer index; both are fixed by scanning the route in visit order.
pub fn build_ordering(
    route: &Route,
    instance: &CvrpInstance,
    rng: &mut impl Rng,
) -> Result<VisitOrdering, FamilyError> {
    if route.is_empty() {
        return Err(FamilyError::EmptyRoute);
    }
    let n = instance.n_customers();
    let anchors = route.sequence();
    let mut order: Vec<usize> = anchors.to_vec();
    let mut rest: Vec<usize> = (0..n).filter(|u| !anchors.contains(u)).collect();
    rest.shuffle(rng);
    for u in rest {
        let mut nearest = anchors[0];
        let mut nearest_dist = instance.distance(u, anchors[0]);
        for &v in &anchors[1..] {
            let d = instance.distance(u, v);
            if d < nearest_dist {
                nearest_dist = d;
                nearest = v;
            }
        }
        if instance.depot_distance(u) < nearest_dist {
            order.insert(0, u);
        } else {
            let at = order
                .iter()
                .position(|&v| v == nearest)
                .expect("anchors stay in the order");
            order.insert(at + 1, u);
        }
    }
    VisitOrdering::new(order)
}

/// One arc of a family graph. Costs are integral travel distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilyEdge {
    pub tail: usize,
    pub head: usize,
    pub cost: i64,
}

/// What an edge contributes to the master problem, determined by its head:
/// arriving at a state serves that customer, arriving at the sink closes a
/// route and occupies a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeContribution {
    Covers(usize),
    UsesVehicle,
}

/// The acyclic route-family graph of one ordering.
///
/// Vertices: `SOURCE`, `SINK`, and one state per `(customer, remaining
/// capacity after serving it)` pair. Source arcs enter customer `u` at
/// remaining capacity `capacity - demand(u)`; state-to-state arcs respect the
/// ordering and pay the head customer's demand; every state can close to the
/// sink. Source-to-sink paths correspond one-to-one with the elementary,
/// capacity-feasible routes that ascend in the ordering.
#[derive(Debug, Clone)]
pub struct FamilyGraph {
    capacity: u32,
    ordering: VisitOrdering,
    origin: Option<Route>,
    /// Vertex of state `(u, 0)`; states of `u` are contiguous by remaining.
    state_base: Vec<usize>,
    /// Decode table for vertices >= 2: `(customer, remaining)`.
    states: Vec<(usize, u32)>,
    edges: Vec<FamilyEdge>,
    out_adj: Vec<Vec<usize>>,
}

impl FamilyGraph {
    pub const SOURCE: usize = 0;
    pub const SINK: usize = 1;

    pub fn vertex_count(&self) -> usize {
        2 + self.states.len()
    }

    /// Number of state vertices (everything but source and sink).
    pub fn internal_count(&self) -> usize {
        self.states.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> FamilyEdge {
        self.edges[e]
    }

    pub fn edges(&self) -> &[FamilyEdge] {
        &self.edges
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn ordering(&self) -> &VisitOrdering {
        &self.ordering
    }

    /// The route this family was spawned from, when it came from the solver
    /// loop rather than a bare ordering.
    pub fn origin_route(&self) -> Option<&Route> {
        self.origin.as_ref()
    }

    /// `(customer, remaining capacity)` of a state vertex.
    pub fn vertex_state(&self, v: usize) -> Option<(usize, u32)> {
        v.checked_sub(2).and_then(|i| self.states.get(i)).copied()
    }

    /// Vertex of state `(u, remaining)`, if that capacity level exists.
    pub fn state_vertex(&self, u: usize, remaining: u32) -> Option<usize> {
        if u >= self.state_base.len() {
            return None;
        }
        let base = self.state_base[u];
        let top = self
            .state_base
            .get(u + 1)
            .copied()
            .unwrap_or(self.vertex_count());
        let v = base + remaining as usize;
        (v < top).then_some(v)
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    pub fn contribution(&self, e: usize) -> EdgeContribution {
        let head = self.edges[e].head;
        match self.vertex_state(head) {
            Some((u, _)) => EdgeContribution::Covers(u),
            None => EdgeContribution::UsesVehicle,
        }
    }

    pub fn contains_route(&self, route: &Route) -> bool {
        self.ordering.contains_route(route)
    }

    /// Human-readable listing of vertices and arcs, for debugging.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "family graph: {} vertices, {} edges, order {:?}",
            self.vertex_count(),
            self.edge_count(),
            self.ordering.order()
        );
        let name = |v: usize| match v {
            Self::SOURCE => "source".to_string(),
            Self::SINK => "sink".to_string(),
            _ => {
                let (u, d) = self.vertex_state(v).expect("state vertex");
                format!("({u},{d})")
            }
        };
        for (e, edge) in self.edges.iter().enumerate() {
            let _ = writeln!(
                out,
                "  e{e}: {} -> {} cost {}",
                name(edge.tail),
                name(edge.head),
                edge.cost
            );
        }
        out
    }
}

/// Builds the family graph of an ordering over the instance's customers.
pub fn build_graph(
    ordering: &VisitOrdering,
    instance: &CvrpInstance,
) -> Result<FamilyGraph, FamilyError> {
    if ordering.len() != instance.n_customers() {
        return Err(FamilyError::WrongInstance {
            ordering: ordering.len(),
            instance: instance.n_customers(),
        });
    }
    let n = instance.n_customers();
    let capacity = instance.capacity();

    let mut state_base = Vec::with_capacity(n);
    let mut states = Vec::new();
    for u in 0..n {
        state_base.push(2 + states.len());
        for remaining in 0..=(capacity - instance.demand(u)) {
            states.push((u, remaining));
        }
    }
    let graph_stub = |edges: Vec<FamilyEdge>| {
        let mut out_adj = vec![Vec::new(); 2 + states.len()];
        for (e, edge) in edges.iter().enumerate() {
            out_adj[edge.tail].push(e);
        }
        FamilyGraph {
            capacity,
            ordering: ordering.clone(),
            origin: None,
            state_base: state_base.clone(),
            states: states.clone(),
            edges,
            out_adj,
        }
    };

    let entry_vertex =
        |u: usize| state_base[u] + (capacity - instance.demand(u)) as usize;
    let mut edges = Vec::new();
    for u in 0..n {
        edges.push(FamilyEdge {
            tail: FamilyGraph::SOURCE,
            head: entry_vertex(u),
            cost: instance.depot_distance(u),
        });
    }
    for (i, &(u, _)) in states.iter().enumerate() {
        edges.push(FamilyEdge {
            tail: 2 + i,
            head: FamilyGraph::SINK,
            cost: instance.depot_distance(u),
        });
    }
    for (i, &(u, remaining)) in states.iter().enumerate() {
        for v in 0..n {
            if ordering.position(u) < ordering.position(v) && instance.demand(v) <= remaining
            {
                edges.push(FamilyEdge {
                    tail: 2 + i,
                    head: state_base[v] + (remaining - instance.demand(v)) as usize,
                    cost: instance.distance(u, v),
                });
            }
        }
    }
    Ok(graph_stub(edges))
}

/// Spawns the family of a freshly priced route: heuristic ordering, then the
/// graph, with the route recorded as origin.
pub fn spawn_family(
    route: &Route,
    instance: &CvrpInstance,
    rng: &mut impl Rng,
) -> Result<FamilyGraph, FamilyError> {
    let ordering = build_ordering(route, instance, rng)?;
    let mut graph = build_graph(&ordering, instance)?;
    graph.origin = Some(route.clone());
    Ok(graph)
}

/// Maps a source-to-sink edge path back to the route it encodes. The route's
/// cost is the exact sum of the path's edge costs.
pub fn path_to_route(graph: &FamilyGraph, path: &[usize]) -> Result<Route, FamilyError> {
    if path.is_empty() {
        return Err(FamilyError::InvalidPath("path is empty".into()));
    }
    for &e in path {
        if e >= graph.edge_count() {
            return Err(FamilyError::InvalidPath(format!(
                "edge {e} out of range"
            )));
        }
    }
    if graph.edge(path[0]).tail != FamilyGraph::SOURCE {
        return Err(FamilyError::InvalidPath(
            "path does not start at the source".into(),
        ));
    }
    for w in path.windows(2) {
        if graph.edge(w[0]).head != graph.edge(w[1]).tail {
            return Err(FamilyError::InvalidPath(format!(
                "edges {} and {} do not chain",
                w[0], w[1]
            )));
        }
    }
    if graph.edge(path[path.len() - 1]).head != FamilyGraph::SINK {
        return Err(FamilyError::InvalidPath(
            "path does not end at the sink".into(),
        ));
    }
    let mut sequence = Vec::with_capacity(path.len() - 1);
    let mut cost = 0i64;
    let mut last_remaining = graph.capacity();
    for &e in path {
        let edge = graph.edge(e);
        cost += edge.cost;
        if let Some((u, remaining)) = graph.vertex_state(edge.head) {
            sequence.push(u);
            last_remaining = remaining;
        }
    }
    Ok(Route::new_unchecked(
        sequence,
        cost,
        graph.capacity() - last_remaining,
    ))
}

/// A flow over a family graph decomposed into weighted source-to-sink paths.
#[derive(Debug, Clone)]
pub struct PathFlow<S> {
    /// The per-edge weights that were decomposed.
    pub weights: Vec<S>,
    /// Paths (as edge-id lists) with their positive weights.
    pub paths: Vec<(Vec<usize>, S)>,
}

const FLOW_TOL: f64 = 1e-9;

/// Decomposes nonnegative, conserved edge weights into weighted paths by
/// repeatedly following maximal-weight arcs from the source and subtracting
/// the bottleneck. Each round zeroes at least one edge, so at most `|E|`
/// paths are produced; leftover weight per edge stays below the conservation
/// tolerance times the path length bound.
pub fn decompose_flow<S: Scalar>(
    graph: &FamilyGraph,
    weights: &[S],
) -> Result<PathFlow<S>, FamilyError> {
    if weights.len() != graph.edge_count() {
        return Err(FamilyError::WrongFlowLength {
            expected: graph.edge_count(),
            got: weights.len(),
        });
    }
    let tol = S::from_f64(FLOW_TOL);
    for (e, &w) in weights.iter().enumerate() {
        if w < -tol {
            return Err(FamilyError::NegativeFlow {
                edge: e,
                value: w.to_f64(),
            });
        }
    }

    let mut inflow = vec![S::zero(); graph.vertex_count()];
    let mut outflow = vec![S::zero(); graph.vertex_count()];
    for (e, edge) in graph.edges().iter().enumerate() {
        outflow[edge.tail] = outflow[edge.tail] + weights[e];
        inflow[edge.head] = inflow[edge.head] + weights[e];
    }
    for v in 2..graph.vertex_count() {
        let imbalance = (inflow[v] - outflow[v]).abs();
        if imbalance > tol {
            return Err(FamilyError::FlowNotConserved {
                vertex: v,
                imbalance: imbalance.to_f64(),
            });
        }
    }

    let mut residual: Vec<S> = weights.iter().map(|&w| w.max(S::zero())).collect();
    let heaviest = |residual: &[S], v: usize| -> Option<usize> {
        graph
            .out_edges(v)
            .iter()
            .copied()
            .max_by(|&a, &b| {
                residual[a]
                    .partial_cmp(&residual[b])
                    .expect("weights are finite")
                    // Prefer the lowest edge id among equal weights.
                    .then(b.cmp(&a))
            })
    };
    let mut paths = Vec::new();
    loop {
        let Some(first) = heaviest(&residual, FamilyGraph::SOURCE) else {
            break;
        };
        if residual[first] <= tol {
            break;
        }
        let mut path = vec![first];
        let mut bottleneck = residual[first];
        let mut v = graph.edge(first).head;
        while v != FamilyGraph::SINK {
            let e = heaviest(&residual, v).expect("every state has a sink arc");
            bottleneck = bottleneck.min(residual[e]);
            path.push(e);
            v = graph.edge(e).head;
        }
        let bottleneck = bottleneck.max(S::zero());
        for &e in &path {
            residual[e] = residual[e] - bottleneck;
        }
        // Zero the bottleneck arc exactly so every round retires an edge.
        if let Some(&at) = path
            .iter()
            .min_by(|&&a, &&b| {
                residual[a]
                    .partial_cmp(&residual[b])
                    .expect("weights are finite")
            })
        {
            residual[at] = S::zero();
        }
        if bottleneck > S::from_f64(1e-12) {
            paths.push((path, bottleneck));
        }
    }
    Ok(PathFlow {
        weights: weights.to_vec(),
        paths,
    })
}
