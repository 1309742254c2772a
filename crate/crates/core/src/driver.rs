//! Solver loops: plain column generation and its graph-generation variant.
//!
//! Both start from one artificial column per customer and alternate between
//! solving the restricted master and pricing a minimum-reduced-cost route.
//! They stop as soon as pricing proves no route can improve the master, so
//! the priced-out column of the final round is never added. Graph generation
//! additionally spawns the new route's family each round, letting the master
//! pay for fractional flow through orderings instead of waiting for every
//! member route to be priced one by one.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::column::{big_m, Column, Route};
use crate::family::{decompose_flow, path_to_route, spawn_family, FamilyError, FamilyGraph, PathFlow};
use crate::instance::CvrpInstance;
use crate::lp::{self, LpError, LpProblem, LpSolution, LpStatus, SimplexEngine};
use crate::master::{MasterError, RmpModel};
use crate::pricing::{self, PricingError};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("master problem is {status:?} at iteration {iteration}")]
    MasterNotOptimal { iteration: u64, status: LpStatus },
    #[error("params select {selected:?} but {required:?} was invoked")]
    AlgorithmMismatch {
        selected: Algorithm,
        required: Algorithm,
    },
    #[error(
        "solvers disagree on instance {index}: column generation {cg} vs graph generation {gg}"
    )]
    ObjectiveMismatch { index: usize, cg: f64, gg: f64 },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Master(#[from] MasterError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Cg,
    Gg,
}

/// Knobs of one solver run.
#[derive(Debug, Clone)]
pub struct SolveParams {
    pub algorithm: Algorithm,
    /// Stop once the best reduced cost is above minus this.
    pub reduced_cost_tolerance: f64,
    /// Hard cap on master solves; zero is treated as one.
    pub max_iterations: u64,
    /// Seed of the rng behind family orderings (graph generation only).
    pub ordering_seed: u64,
    /// Reuse the previous basis instead of solving each master cold.
    pub warm_start: bool,
}

impl SolveParams {
    pub fn cg() -> SolveParams {
        SolveParams {
            algorithm: Algorithm::Cg,
            reduced_cost_tolerance: 1e-6,
            max_iterations: 100_000,
            ordering_seed: 0,
            warm_start: true,
        }
    }

    pub fn gg() -> SolveParams {
        SolveParams {
            algorithm: Algorithm::Gg,
            ..SolveParams::cg()
        }
    }
}

/// One row of a convergence trace.
#[derive(Debug, Clone)]
pub struct IterationRecord<S> {
    /// 1-based master solve counter.
    pub iteration: u64,
    pub rmp_objective: S,
    pub min_reduced_cost: S,
    pub rmp_seconds: f64,
    pub pricing_seconds: f64,
    pub n_columns: usize,
    pub n_families: usize,
    pub lp_rows: usize,
    pub lp_vars: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Pricing proved optimality of the relaxation.
    Converged,
    /// The iteration cap fired first.
    IterationCap,
}

/// A family's share of the final master solution, decomposed into routes.
#[derive(Debug, Clone)]
pub struct FamilyFlow<S> {
    pub family: usize,
    pub flow: PathFlow<S>,
    /// The routes the paths encode, with their weights.
    pub routes: Vec<(Route, S)>,
}

#[derive(Debug, Clone)]
pub struct SolveResult<S> {
    pub objective: S,
    pub termination: Termination,
    pub iterations: Vec<IterationRecord<S>>,
    /// Final column pool, artificials included, in master order.
    pub columns: Vec<Column>,
    pub column_weights: Vec<S>,
    pub families: Vec<FamilyGraph>,
    /// Families carrying flow in the final solution.
    pub flows: Vec<FamilyFlow<S>>,
}

impl<S: Scalar> SolveResult<S> {
    pub fn iteration_count(&self) -> u64 {
        self.iterations.len() as u64
    }

    pub fn total_rmp_seconds(&self) -> f64 {
        self.iterations.iter().map(|r| r.rmp_seconds).sum()
    }

    pub fn total_pricing_seconds(&self) -> f64 {
        self.iterations.iter().map(|r| r.pricing_seconds).sum()
    }
}

/// A peek at the solver state right after a master solve.
pub struct Observation<'a, S> {
    pub iteration: u64,
    pub objective: S,
    pub model: &'a RmpModel<S>,
}

/// Runs the algorithm selected by `params`.
pub fn solve<S: Scalar>(
    instance: &CvrpInstance,
    params: &SolveParams,
) -> Result<SolveResult<S>, DriverError> {
    match params.algorithm {
        Algorithm::Cg => solve_cg(instance, params),
        Algorithm::Gg => solve_gg(instance, params),
    }
}

pub fn solve_cg<S: Scalar>(
    instance: &CvrpInstance,
    params: &SolveParams,
) -> Result<SolveResult<S>, DriverError> {
    require(params, Algorithm::Cg)?;
    run_loop(instance, params, |_, _, _| {})
}

pub fn solve_gg<S: Scalar>(
    instance: &CvrpInstance,
    params: &SolveParams,
) -> Result<SolveResult<S>, DriverError> {
    solve_gg_with_observer(instance, params, |_| {})
}

/// Graph generation with a callback after every master solve; the callback
/// sees the model exactly as pricing will, before any column is added.
pub fn solve_gg_with_observer<S: Scalar>(
    instance: &CvrpInstance,
    params: &SolveParams,
    mut observer: impl FnMut(Observation<'_, S>),
) -> Result<SolveResult<S>, DriverError> {
    require(params, Algorithm::Gg)?;
    run_loop(instance, params, move |iteration, objective, model| {
        observer(Observation {
            iteration,
            objective,
            model,
        })
    })
}

fn require(params: &SolveParams, required: Algorithm) -> Result<(), DriverError> {
    if params.algorithm != required {
        return Err(DriverError::AlgorithmMismatch {
            selected: params.algorithm,
            required,
        });
    }
    Ok(())
}

/// Solves the current master, warm when state allows it.
fn solve_master<S: Scalar>(
    problem: &LpProblem<S>,
    warm_columns: Option<&LpSolution<S>>,
    warm_engine: Option<&mut SimplexEngine<S>>,
) -> Result<LpSolution<S>, LpError> {
    if let Some(engine) = warm_engine {
        engine.sync(problem)?;
        return match engine.optimize() {
            Ok(sol) => Ok(sol),
            // Numerical trouble in the reused state: rebuild from scratch.
            Err(_) => {
                *engine = SimplexEngine::new();
                engine.sync(problem)?;
                engine.optimize()
            }
        };
    }
    match warm_columns {
        Some(prior) => lp::resolve_with_new_columns(problem, prior),
        None => lp::solve(problem),
    }
}

fn run_loop<S: Scalar>(
    instance: &CvrpInstance,
    params: &SolveParams,
    mut observe: impl FnMut(u64, S, &RmpModel<S>),
) -> Result<SolveResult<S>, DriverError> {
    let graphs = params.algorithm == Algorithm::Gg;
    let mut rng = ChaCha8Rng::seed_from_u64(params.ordering_seed);
    let mut model: RmpModel<S> = RmpModel::new(instance);
    let m = big_m(instance);
    for u in 0..instance.n_customers() {
        model.add_column(Column::artificial(u, m))?;
    }

    // Column-only warm starts reuse the prior solution's basis; row-growing
    // masters keep a live engine whose factorization is extended in place.
    let mut prior: Option<LpSolution<S>> = None;
    let mut engine: Option<SimplexEngine<S>> = match (params.warm_start, graphs) {
        (true, true) => Some(SimplexEngine::new()),
        _ => None,
    };

    let cap = params.max_iterations.max(1);
    let mut iterations: Vec<IterationRecord<S>> = Vec::new();
    let mut iteration = 0u64;
    let final_solution = loop {
        iteration += 1;
        let started = Instant::now();
        let solution = solve_master(
            model.problem(),
            if params.warm_start { prior.as_ref() } else { None },
            engine.as_mut(),
        )?;
        let rmp_seconds = started.elapsed().as_secs_f64();
        if !solution.is_optimal() {
            return Err(DriverError::MasterNotOptimal {
                iteration,
                status: solution.status,
            });
        }
        let duals = model.extract_duals(&solution)?;

        let started = Instant::now();
        let (route, value) = pricing::price(instance, &duals)?;
        let pricing_seconds = started.elapsed().as_secs_f64();

        iterations.push(IterationRecord {
            iteration,
            rmp_objective: solution.objective,
            min_reduced_cost: value,
            rmp_seconds,
            pricing_seconds,
            n_columns: model.column_count(),
            n_families: model.family_count(),
            lp_rows: model.problem().n_rows(),
            lp_vars: model.problem().n_vars(),
        });
        observe(iteration, solution.objective, &model);

        if value >= -S::from_f64(params.reduced_cost_tolerance) {
            break (solution, Termination::Converged);
        }
        if iteration >= cap {
            break (solution, Termination::IterationCap);
        }
        if graphs {
            let family = spawn_family(&route, instance, &mut rng)?;
            model.add_family(family)?;
        }
        model.add_column(Column::from_route(route))?;
        prior = Some(solution);
    };

    let (solution, termination) = final_solution;
    let column_weights = model.column_weights(&solution);
    let mut flows = Vec::new();
    for id in 0..model.family_count() {
        let weights = model.edge_flows(&solution, id);
        let mass = weights
            .iter()
            .fold(S::zero(), |acc, &w| acc + w.max(S::zero()));
        if mass <= S::from_f64(1e-9) {
            continue;
        }
        let flow = decompose_flow(model.family(id), &weights)?;
        let routes = flow
            .paths
            .iter()
            .map(|(path, weight)| Ok((path_to_route(model.family(id), path)?, *weight)))
            .collect::<Result<Vec<_>, FamilyError>>()?;
        flows.push(FamilyFlow {
            family: id,
            flow,
            routes,
        });
    }
    Ok(SolveResult {
        objective: solution.objective,
        termination,
        iterations,
        columns: model.columns().to_vec(),
        column_weights,
        families: model.families().cloned().collect(),
        flows,
    })
}

/// One instance's outcome in a benchmark run.
#[derive(Debug, Clone)]
pub struct BenchmarkRow<S> {
    pub seed: u64,
    pub objective: S,
    pub cg_iterations: u64,
    pub gg_iterations: u64,
    pub cg_seconds: f64,
    pub gg_seconds: f64,
}

impl<S: Scalar> BenchmarkRow<S> {
    /// How many times fewer iterations graph generation needed.
    pub fn iteration_ratio(&self) -> f64 {
        self.cg_iterations as f64 / self.gg_iterations.max(1) as f64
    }
}

#[derive(Debug)]
pub struct BenchmarkReport<S> {
    pub rows: Vec<BenchmarkRow<S>>,
    /// Full per-instance results, `(column generation, graph generation)`.
    pub results: Vec<(SolveResult<S>, SolveResult<S>)>,
}

impl<S: Scalar> BenchmarkReport<S> {
    pub fn mean_iteration_ratio(&self) -> f64 {
        if self.rows.is_empty() {
            return f64::NAN;
        }
        self.rows.iter().map(|r| r.iteration_ratio()).sum::<f64>() / self.rows.len() as f64
    }

    pub fn median_iteration_ratio(&self) -> f64 {
        if self.rows.is_empty() {
            return f64::NAN;
        }
        let ratios: Vec<f64> = self.rows.iter().map(|r| r.iteration_ratio()).collect();
        median(&ratios)
    }

    /// Instances where graph generation converged in strictly fewer
    /// iterations.
    pub fn fewer_iteration_count(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.gg_iterations < r.cg_iterations)
            .count()
    }
}

/// Runs both algorithms on every `(seed, instance)` pair over `workers`
/// threads and cross-checks their objectives to 1e-6. Results are keyed by
/// input position, so the report is deterministic regardless of scheduling.
pub fn run_benchmark<S: Scalar>(
    instances: &[(u64, CvrpInstance)],
    params: &SolveParams,
    workers: usize,
) -> Result<BenchmarkReport<S>, DriverError> {
    type Slot<S> = Option<Result<(SolveResult<S>, SolveResult<S>), DriverError>>;
    let slots: Mutex<Vec<Slot<S>>> = Mutex::new((0..instances.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let cg_params = SolveParams {
        algorithm: Algorithm::Cg,
        ..params.clone()
    };
    let gg_params = SolveParams {
        algorithm: Algorithm::Gg,
        ..params.clone()
    };
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                let Some((_, instance)) = instances.get(index) else {
                    break;
                };
                let outcome = solve_cg::<S>(instance, &cg_params)
                    .and_then(|cg| Ok((cg, solve_gg::<S>(instance, &gg_params)?)));
                slots.lock().expect("no panics hold the lock")[index] = Some(outcome);
            });
        }
    });

    let mut rows = Vec::with_capacity(instances.len());
    let mut results = Vec::with_capacity(instances.len());
    let slots = slots.into_inner().expect("workers finished");
    for (index, slot) in slots.into_iter().enumerate() {
        let (cg, gg) = slot.expect("every index was claimed")?;
        let (cg_obj, gg_obj) = (cg.objective.to_f64(), gg.objective.to_f64());
        if (cg_obj - gg_obj).abs() > 1e-6 {
            return Err(DriverError::ObjectiveMismatch {
                index,
                cg: cg_obj,
                gg: gg_obj,
            });
        }
        rows.push(BenchmarkRow {
            seed: instances[index].0,
            objective: cg.objective,
            cg_iterations: cg.iteration_count(),
            gg_iterations: gg.iteration_count(),
            cg_seconds: cg.total_rmp_seconds() + cg.total_pricing_seconds(),
            gg_seconds: gg.total_rmp_seconds() + gg.total_pricing_seconds(),
        });
        results.push((cg, gg));
    }
    Ok(BenchmarkReport { rows, results })
}

/// Per-iteration trace of one run as CSV. `gap_plus_one` is the objective's
/// distance to the final value shifted by one, so log-scale plots stay
/// finite through convergence.
pub fn trace_csv<S: Scalar>(result: &SolveResult<S>) -> String {
    use std::fmt::Write;
    let mut out = String::from(
        "iter,rmp_obj,min_red_cost,rmp_seconds,pricing_seconds,\
         n_cols,n_families,lp_rows,lp_vars,gap_plus_one\n",
    );
    let last = result.objective.to_f64();
    for r in &result.iterations {
        let _ = writeln!(
            out,
            "{},{:.9},{:.9},{:.6},{:.6},{},{},{},{},{:.9}",
            r.iteration,
            r.rmp_objective.to_f64(),
            r.min_reduced_cost.to_f64(),
            r.rmp_seconds,
            r.pricing_seconds,
            r.n_columns,
            r.n_families,
            r.lp_rows,
            r.lp_vars,
            r.rmp_objective.to_f64() - last + 1.0,
        );
    }
    out
}

/// Benchmark summary as CSV: one row per instance, then `mean` and `median`
/// rows over the numeric columns (iteration counts become fractional there).
pub fn summary_csv<S: Scalar>(report: &BenchmarkReport<S>) -> String {
    use std::fmt::Write;
    let mut out = String::from(
        "seed,objective,cg_iterations,gg_iterations,cg_seconds,gg_seconds,iteration_ratio\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{:.9},{},{},{:.6},{:.6},{:.6}",
            r.seed,
            r.objective.to_f64(),
            r.cg_iterations,
            r.gg_iterations,
            r.cg_seconds,
            r.gg_seconds,
            r.iteration_ratio(),
        );
    }
    if report.rows.is_empty() {
        return out;
    }
    let columns: Vec<Vec<f64>> = [
        report.rows.iter().map(|r| r.objective.to_f64()).collect(),
        report.rows.iter().map(|r| r.cg_iterations as f64).collect(),
        report.rows.iter().map(|r| r.gg_iterations as f64).collect(),
        report.rows.iter().map(|r| r.cg_seconds).collect(),
        report.rows.iter().map(|r| r.gg_seconds).collect(),
        report.rows.iter().map(|r| r.iteration_ratio()).collect(),
    ]
    .into();
    for (label, stat) in [("mean", mean as fn(&[f64]) -> f64), ("median", median)] {
        let values: Vec<f64> = columns.iter().map(|c| stat(c)).collect();
        let _ = writeln!(
            out,
            "{label},{:.9},{:.3},{:.3},{:.6},{:.6},{:.6}",
            values[0], values[1], values[2], values[3], values[4], values[5],
        );
    }
    out
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values are finite"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}
