//! Routes, master-problem columns, and reduced costs.
//!
//! A route visits a set of customers once each, starting and ending at the
//! depot; its cost is the integer length of that closed walk. A column is
//! either a priced route or one of the artificial columns that keep the
//! restricted master feasible before enough routes exist.

use crate::instance::CvrpInstance;
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RouteError {
    #[error("unknown customer {0}")]
    UnknownCustomer(usize),
    #[error("customer {0} appears more than once")]
    DuplicateCustomer(usize),
    #[error("total demand {demand} exceeds vehicle capacity {capacity}")]
    CapacityExceeded { demand: u32, capacity: u32 },
}

/// An elementary, capacity-feasible route. Construct via [`make_route`] (or
/// [`Route::empty`]); the stored cost and demand always match the sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Route {
    sequence: Vec<usize>,
    cost: i64,
    total_demand: u32,
}

impl Route {
    /// The empty route: leaves the depot and returns immediately. It uses a
    /// vehicle but serves nobody, so its cost and demand are zero.
    pub fn empty() -> Route {
        Route {
            sequence: Vec::new(),
            cost: 0,
            total_demand: 0,
        }
    }

    /// Trusted constructor for callers that derive routes from structures
    /// whose invariants already guarantee feasibility (family-graph paths).
    pub(crate) fn new_unchecked(sequence: Vec<usize>, cost: i64, total_demand: u32) -> Route {
        Route {
            sequence,
            cost,
            total_demand,
        }
    }

    /// Customers in visit order.
    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    pub fn cost(&self) -> i64 {
        self.cost
    }

    pub fn total_demand(&self) -> u32 {
        self.total_demand
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }
}

/// Validates a customer sequence and computes its cost and total demand.
pub fn make_route(sequence: &[usize], instance: &CvrpInstance) -> Result<Route, RouteError> {
    let n = instance.n_customers();
    let mut seen = vec![false; n];
    let mut total_demand = 0u32;
    for &u in sequence {
        if u >= n {
            return Err(RouteError::UnknownCustomer(u));
        }
        if seen[u] {
            return Err(RouteError::DuplicateCustomer(u));
        }
        seen[u] = true;
        total_demand += instance.demand(u);
    }
    if total_demand > instance.capacity() {
        return Err(RouteError::CapacityExceeded {
            demand: total_demand,
            capacity: instance.capacity(),
        });
    }
    let mut cost = 0i64;
    if let (Some(&first), Some(&last)) = (sequence.first(), sequence.last()) {
        cost += instance.depot_distance(first);
        for w in sequence.windows(2) {
            cost += instance.distance(w[0], w[1]);
        }
        cost += instance.depot_distance(last);
    }
    Ok(Route {
        sequence: sequence.to_vec(),
        cost,
        total_demand,
    })
}

/// Dual prices of the restricted master: one per customer coverage row plus
/// the price of the vehicle-count row.
#[derive(Debug, Clone, PartialEq)]
pub struct Duals<S> {
    pub customer: Vec<S>,
    pub vehicle: S,
}

impl<S: Scalar> Duals<S> {
    pub fn zero(n_customers: usize) -> Duals<S> {
        Duals {
            customer: vec![S::zero(); n_customers],
            vehicle: S::zero(),
        }
    }
}

/// Reduced cost of a route: its cost minus the duals of the customers it
/// covers, plus the vehicle-row dual (the route occupies one vehicle, which
/// enters the vehicle row with coefficient -1). The empty route uses no
/// vehicle and has reduced cost zero.
pub fn reduced_cost<S: Scalar>(route: &Route, duals: &Duals<S>) -> S {
    if route.is_empty() {
        return S::zero();
    }
    let covered: S = route.sequence.iter().map(|&u| duals.customer[u]).sum();
    S::from_i64(route.cost) - covered + duals.vehicle
}

/// Cost assigned to artificial columns. Any integral route costs at most
/// (n + 1) * max_distance, so at twice that value an artificial can never
/// undercut a real cover at optimality.
pub fn big_m(instance: &CvrpInstance) -> i64 {
    2 * (instance.n_customers() as i64 + 1) * instance.max_distance()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum ColumnKind {
    Route(Route),
    /// Covers exactly one customer at big-M cost and occupies no vehicle.
    Artificial { customer: usize, cost: i64 },
}

/// A variable of the restricted master problem.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Column {
    kind: ColumnKind,
}

impl Column {
    /// Wraps a priced route. The empty route is never a column: it covers
    /// nothing and can only dilute the master, so this panics on it.
    pub fn from_route(route: Route) -> Column {
        assert!(
            !route.is_empty(),
            "the empty route must not enter the master problem"
        );
        Column {
            kind: ColumnKind::Route(route),
        }
    }

    pub fn artificial(customer: usize, cost: i64) -> Column {
        Column {
            kind: ColumnKind::Artificial { customer, cost },
        }
    }

    pub fn is_artificial(&self) -> bool {
        matches!(self.kind, ColumnKind::Artificial { .. })
    }

    pub fn route(&self) -> Option<&Route> {
        match &self.kind {
            ColumnKind::Route(route) => Some(route),
            ColumnKind::Artificial { .. } => None,
        }
    }

    pub fn cost(&self) -> i64 {
        match &self.kind {
            ColumnKind::Route(route) => route.cost(),
            ColumnKind::Artificial { cost, .. } => *cost,
        }
    }

    /// Nonzero coverage entries as `(row, coefficient)` with customer rows at
    /// `0..n` and the vehicle-count row at `n`. Route columns contribute +1
    /// per visited customer and -1 in the vehicle row; artificials cover one
    /// customer and use no vehicle.
    pub fn coverage(&self, n_customers: usize) -> Vec<(usize, i64)> {
        match &self.kind {
            ColumnKind::Route(route) => {
                let mut entries: Vec<(usize, i64)> =
                    route.sequence().iter().map(|&u| (u, 1)).collect();
                entries.sort_unstable();
                entries.push((n_customers, -1));
                entries
            }
            ColumnKind::Artificial { customer, .. } => vec![(*customer, 1)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Point;

    fn two_customer_instance() -> CvrpInstance {
        // depot at origin, customers at (3,4) and (6,8): depot distances 5 and 10.
        CvrpInstance::new(
            Point::new(0, 0),
            vec![(Point::new(3, 4), 1), (Point::new(6, 8), 1)],
            2,
            2,
            10,
        )
        .unwrap()
    }

    #[test]
    fn out_and_back_cost() {
        let inst = two_customer_instance();
        let route = make_route(&[0], &inst).unwrap();
        assert_eq!(route.cost(), 10);
        assert_eq!(route.total_demand(), 1);
        let route = make_route(&[0, 1], &inst).unwrap();
        assert_eq!(route.cost(), 5 + 5 + 10);
    }

    #[test]
    fn route_validation_errors() {
        let inst = two_customer_instance();
        assert_eq!(
            make_route(&[0, 0], &inst).unwrap_err(),
            RouteError::DuplicateCustomer(0)
        );
        assert_eq!(
            make_route(&[7], &inst).unwrap_err(),
            RouteError::UnknownCustomer(7)
        );
        let tight = CvrpInstance::new(
            Point::new(0, 0),
            vec![(Point::new(1, 0), 1), (Point::new(2, 0), 1)],
            1,
            1,
            5,
        )
        .unwrap();
        assert_eq!(
            make_route(&[0, 1], &tight).unwrap_err(),
            RouteError::CapacityExceeded {
                demand: 2,
                capacity: 1
            }
        );
    }

    #[test]
    fn reduced_cost_matches_definition() {
        let inst = two_customer_instance();
        let route = make_route(&[0], &inst).unwrap();
        let zero = Duals::<f64>::zero(2);
        assert_eq!(reduced_cost(&route, &zero), 10.0);

        let duals = Duals {
            customer: vec![7.0, 1.0],
            vehicle: 2.0,
        };
        assert_eq!(reduced_cost(&route, &duals), 10.0 - 7.0 + 2.0);

        let cancel = Duals {
            customer: vec![12.0, 0.0],
            vehicle: 2.0,
        };
        assert_eq!(reduced_cost(&route, &cancel), 0.0);

        assert_eq!(reduced_cost(&Route::empty(), &duals), 0.0);
    }

    #[test]
    fn coverage_shape() {
        let inst = two_customer_instance();
        let col = Column::from_route(make_route(&[1, 0], &inst).unwrap());
        assert!(!col.is_artificial());
        // Exactly one +1 per visited customer and a single -1 vehicle entry.
        assert_eq!(col.coverage(2), vec![(0, 1), (1, 1), (2, -1)]);

        let art = Column::artificial(1, big_m(&inst));
        assert!(art.is_artificial());
        assert_eq!(art.coverage(2), vec![(1, 1)]);
        assert_eq!(art.cost(), 2 * 3 * inst.max_distance());
        assert!(art.route().is_none());
    }

    #[test]
    #[should_panic(expected = "empty route")]
    fn empty_route_rejected_as_column() {
        Column::from_route(Route::empty());
    }

    #[test]
    fn big_m_dominates_any_route_cost() {
        let inst = two_customer_instance();
        // Longest possible route visits every customer once.
        let longest = make_route(&[0, 1], &inst).unwrap();
        assert!(big_m(&inst) > longest.cost());
    }
}
