//! Shared oracles for the integration suites: an independent LP optimum by
//! vertex enumeration, a feasible-by-construction random LP generator, and
//! the full route-enumeration relaxation value.
#![allow(dead_code)]

use colgen::column::{big_m, Column};
use colgen::lp::{self, LpProblem, Sense};
use colgen::pricing::enumerate_elementary_routes;
use colgen::CvrpInstance;
use rand::Rng;

/// Optimum of `min c x : A x >= b, x >= 0` by enumerating basic points: every
/// choice of `n` constraints (rows or sign bounds) taken tight. Exponential
/// and dense, which is fine at n <= 6, and entirely independent of the
/// simplex code under test.
pub fn vertex_optimum(problem: &LpProblem<f64>) -> f64 {
    let n = problem.n_vars();
    let m = problem.n_rows();
    // Dense copy of the constraint matrix.
    let mut rows = vec![vec![0.0; n]; m];
    for j in 0..n {
        for &(i, coef) in problem.column(j) {
            rows[i][j] = coef;
        }
    }
    let feasible = |x: &[f64]| -> bool {
        if x.iter().any(|&v| v < -1e-7) {
            return false;
        }
        (0..m).all(|i| {
            let activity: f64 = (0..n).map(|j| rows[i][j] * x[j]).sum();
            match problem.sense(i) {
                Sense::Geq => activity >= problem.rhs(i) - 1e-7,
                Sense::Eq => (activity - problem.rhs(i)).abs() <= 1e-7,
            }
        })
    };

    let total = m + n;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        // Tight system: constraint i < m is A_i x = b_i, i >= m is x_{i-m} = 0.
        let mut a = vec![vec![0.0; n + 1]; n];
        let mut r = 0;
        for i in 0..total {
            if mask & (1 << i) == 0 {
                continue;
            }
            if i < m {
                a[r][..n].copy_from_slice(&rows[i]);
                a[r][n] = problem.rhs(i);
            } else {
                a[r][i - m] = 1.0;
                a[r][n] = 0.0;
            }
            r += 1;
        }
        let Some(x) = gauss_solve(&mut a) else {
            continue;
        };
        if feasible(&x) {
            let value: f64 = (0..n).map(|j| problem.cost(j) * x[j]).sum();
            best = best.min(value);
        }
    }
    best
}

/// Solves the square augmented system in place; `None` when singular.
fn gauss_solve(a: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..=n {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// A random GEQ-form LP that is feasible by construction: integer
/// coefficients in [-5, 5], nonnegative integer costs, and right-hand sides
/// set below the activity of a known nonnegative point.
pub fn random_lp(rng: &mut impl Rng) -> LpProblem<f64> {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=6);
    let coefs: Vec<Vec<i64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.gen_range(-5..=5)).collect())
        .collect();
    let x0: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=3)).collect();
    let mut problem = LpProblem::new();
    for row in &coefs {
        let activity: i64 = row.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let slack = rng.gen_range(0..=3);
        problem
            .add_row(Sense::Geq, (activity - slack) as f64)
            .unwrap();
    }
    for j in 0..n {
        let entries: Vec<(usize, f64)> = (0..m)
            .filter(|&i| coefs[i][j] != 0)
            .map(|i| (i, coefs[i][j] as f64))
            .collect();
        let cost = rng.gen_range(0..=5) as f64;
        problem.add_var(cost, &entries).unwrap();
    }
    problem
}

/// Value of the master relaxation with every elementary route enumerated as
/// a column, artificials included so the LP stays feasible no matter the
/// fleet size. This is what the generative solvers must converge to.
pub fn enum_lp_objective(instance: &CvrpInstance) -> f64 {
    let m = big_m(instance);
    let columns: Vec<Column> = (0..instance.n_customers())
        .map(|u| Column::artificial(u, m))
        .chain(
            enumerate_elementary_routes(instance, 10_000_000)
                .expect("enumeration within limit")
                .into_iter()
                .map(Column::from_route),
        )
        .collect();
    let model = colgen::master::build_cg_rmp::<f64>(instance, &columns).unwrap();
    let solution = lp::solve(model.problem()).unwrap();
    assert!(solution.is_optimal(), "enumeration LP must solve");
    solution.objective
}
