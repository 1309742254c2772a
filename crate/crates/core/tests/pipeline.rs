//! End-to-end solution audits: the final master solution, re-read as a
//! weighted set of routes (columns plus decomposed family flow), must be a
//! feasible fractional cover of the instance.

mod common;

use colgen::driver::{solve, SolveParams, Termination};
use colgen::{Algorithm, CvrpInstance};

#[test]
fn final_solutions_are_fractional_covers() {
    for seed in [101, 202, 303] {
        let instance = CvrpInstance::generate(seed, 10, 3, 4, 80).unwrap();
        for algorithm in [Algorithm::Cg, Algorithm::Gg] {
            let params = SolveParams {
                algorithm,
                ..SolveParams::cg()
            };
            let result = solve::<f64>(&instance, &params).unwrap();
            assert_eq!(result.termination, Termination::Converged);

            let n = instance.n_customers();
            let mut cover = vec![0.0f64; n];
            let mut vehicles = 0.0f64;
            for (column, &weight) in result.columns.iter().zip(&result.column_weights) {
                match column.route() {
                    Some(route) => {
                        for &u in route.sequence() {
                            cover[u] += weight;
                        }
                        vehicles += weight;
                    }
                    // Artificials cover their customer without a vehicle.
                    None => {
                        let (u, _) = column
                            .coverage(n)
                            .first()
                            .copied()
                            .expect("artificials cover one customer");
                        cover[u] += weight;
                    }
                }
            }
            for flow in &result.flows {
                for (route, weight) in &flow.routes {
                    for &u in route.sequence() {
                        cover[u] += weight;
                    }
                    vehicles += weight;
                }
            }

            for (u, &mass) in cover.iter().enumerate() {
                assert!(
                    mass >= 1.0 - 1e-6,
                    "{algorithm:?} seed {seed}: customer {u} covered only {mass}"
                );
            }
            assert!(
                vehicles <= f64::from(instance.fleet_size()) + 1e-6,
                "{algorithm:?} seed {seed}: {vehicles} vehicles in use"
            );

            // The reconstruction also reproduces the objective: column costs
            // plus flow route costs, weighted.
            let mut total = 0.0f64;
            for (column, &weight) in result.columns.iter().zip(&result.column_weights) {
                total += column.cost() as f64 * weight;
            }
            for flow in &result.flows {
                for (route, weight) in &flow.routes {
                    total += route.cost() as f64 * weight;
                }
            }
            assert!(
                (total - result.objective).abs() <= 1e-6,
                "{algorithm:?} seed {seed}: rebuilt {total} vs reported {}",
                result.objective
            );
        }
    }
}

#[test]
fn converged_objectives_match_the_enumeration_oracle() {
    // A second, smaller replication of the oracle identity, independent of
    // the acceptance fixtures.
    let instance = CvrpInstance::generate(555, 7, 2, 3, 60).unwrap();
    let target = common::enum_lp_objective(&instance);
    for algorithm in [Algorithm::Cg, Algorithm::Gg] {
        let params = SolveParams {
            algorithm,
            ..SolveParams::cg()
        };
        let result = solve::<f64>(&instance, &params).unwrap();
        assert!(
            (result.objective - target).abs() <= 1e-6,
            "{algorithm:?}: {} vs {target}",
            result.objective
        );
    }
}
