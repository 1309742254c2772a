//! Bounded two-phase primal simplex over column-major linear programs.
//!
//! Problems are minimization over nonnegative variables with `>=` and `==`
//! rows. The engine keeps a dense explicit basis inverse with product-form
//! updates, refactorizes when drift is detected, and switches to Bland's rule
//! after a run of degenerate pivots so termination is guaranteed.
//!
//! Two warm-start paths exist, matching how the solver loops grow their
//! master problems:
//! - [`resolve_with_new_columns`] reuses the optimal basis of a prior solve
//!   of the same rows after new variables were appended;
//! - [`SimplexEngine::sync`] additionally accepts appended rows, extending
//!   the factorization in place. This is what keeps the family-augmented
//!   master cheap: its new rows arrive with zero right-hand side and touch
//!   only new variables, so the current basis stays primal feasible and
//!   phase one is skipped entirely.

use crate::scalar::Scalar;

/// Absolute tolerance on row feasibility of reported solutions.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Reduced costs above this threshold count as nonnegative at optimality.
pub const REDUCED_COST_TOL: f64 = 1e-9;
/// Relative tolerance on the primal/dual objective gap of reported optima.
pub const DUALITY_GAP_TOL: f64 = 1e-7;

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-11;
const BLAND_TRIGGER: usize = 1000;
const DRIFT_INTERVAL: u64 = 128;
const DRIFT_TOL: f64 = 1e-8;
const MAX_PIVOTS: u64 = 2_000_000;
const VERIFY_ATTEMPTS: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("variable {var} references row {row}, but only {n_rows} rows are declared")]
    UndeclaredRow { var: usize, row: usize, n_rows: usize },
    #[error("variable {var} has duplicate entries for row {row}")]
    DuplicateEntry { var: usize, row: usize },
    #[error("non-finite {what}")]
    NonFinite { what: String },
    #[error("warm start rejected: {0}")]
    WarmStartMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Geq,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// A linear program stored column-major: each variable owns its sparse list
/// of `(row, coefficient)` entries. Rows must be declared before variables
/// reference them.
#[derive(Debug, Clone, Default)]
pub struct LpProblem<S> {
    costs: Vec<S>,
    cols: Vec<Vec<(usize, S)>>,
    senses: Vec<Sense>,
    rhs: Vec<S>,
}

impl<S: Scalar> LpProblem<S> {
    pub fn new() -> LpProblem<S> {
        LpProblem {
            costs: Vec::new(),
            cols: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn add_row(&mut self, sense: Sense, rhs: S) -> Result<usize, LpError> {
        if !rhs.is_finite() {
            return Err(LpError::NonFinite {
                what: format!("right-hand side for row {}", self.senses.len()),
            });
        }
        self.senses.push(sense);
        self.rhs.push(rhs);
        Ok(self.senses.len() - 1)
    }

    pub fn add_var(&mut self, cost: S, entries: &[(usize, S)]) -> Result<usize, LpError> {
        let var = self.cols.len();
        if !cost.is_finite() {
            return Err(LpError::NonFinite {
                what: format!("cost for variable {var}"),
            });
        }
        let mut col: Vec<(usize, S)> = Vec::with_capacity(entries.len());
        for &(row, value) in entries {
            if row >= self.senses.len() {
                return Err(LpError::UndeclaredRow {
                    var,
                    row,
                    n_rows: self.senses.len(),
                });
            }
            if !value.is_finite() {
                return Err(LpError::NonFinite {
                    what: format!("coefficient of variable {var} in row {row}"),
                });
            }
            col.push((row, value));
        }
        col.sort_unstable_by_key(|&(row, _)| row);
        for w in col.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(LpError::DuplicateEntry { var, row: w[0].0 });
            }
        }
        self.costs.push(cost);
        self.cols.push(col);
        Ok(var)
    }

    pub fn n_rows(&self) -> usize {
        self.senses.len()
    }

    pub fn n_vars(&self) -> usize {
        self.cols.len()
    }

    pub fn cost(&self, var: usize) -> S {
        self.costs[var]
    }

    pub fn column(&self, var: usize) -> &[(usize, S)] {
        &self.cols[var]
    }

    pub fn sense(&self, row: usize) -> Sense {
        self.senses[row]
    }

    pub fn rhs(&self, row: usize) -> S {
        self.rhs[row]
    }

    /// Human-readable listing of rows and columns, for debugging.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "lp: {} rows, {} vars", self.n_rows(), self.n_vars());
        let mut rows: Vec<Vec<(usize, S)>> = vec![Vec::new(); self.n_rows()];
        for (j, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                rows[r].push((j, v));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            let terms: Vec<String> = row.iter().map(|&(j, v)| format!("{v}*x{j}")).collect();
            let op = match self.senses[r] {
                Sense::Geq => ">=",
                Sense::Eq => "==",
            };
            let _ = writeln!(out, "  r{r}: {} {op} {}", terms.join(" + "), self.rhs[r]);
        }
        let costs: Vec<String> = self
            .costs
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c}*x{j}"))
            .collect();
        let _ = writeln!(out, "  min {}", costs.join(" + "));
        out
    }
}

fn row_digest<S: Scalar>(senses: &[Sense], rhs: &[S]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    let mut eat = |word: u64| {
        for byte in word.to_le_bytes() {
            hash = (hash ^ byte as u64).wrapping_mul(0x100000001b3);
        }
    };
    eat(senses.len() as u64);
    for i in 0..senses.len() {
        eat(match senses[i] {
            Sense::Geq => 0,
            Sense::Eq => 1,
        });
        eat(rhs[i].to_f64().to_bits());
    }
    hash
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BasisVar {
    Structural(usize),
    Surplus(usize),
    /// Synthetic column `+e_row` (or `-e_row` when `negated`), chosen so the
    /// all-artificial starting basis carries nonnegative values without
    /// scaling any row.
    Artificial { row: usize, negated: bool },
}

/// Opaque warm-start token: the optimal basis of a prior solve.
#[derive(Debug, Clone)]
pub struct Basis(Vec<BasisVar>);

/// Outcome of a solve. `primal`, `duals`, and `objective` are meaningful
/// only when `status` is `Optimal`; the objective degenerates to `+inf` for
/// infeasible and `-inf` for unbounded problems.
#[derive(Debug, Clone)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    pub primal: Vec<S>,
    pub duals: Vec<S>,
    pub objective: S,
    basis: Option<Basis>,
    row_digest: u64,
    n_vars: usize,
}

impl<S: Scalar> LpSolution<S> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves a problem from scratch.
pub fn solve<S: Scalar>(problem: &LpProblem<S>) -> Result<LpSolution<S>, LpError> {
    let mut engine = SimplexEngine::new();
    engine.sync(problem)?;
    engine.optimize()
}

/// Re-solves a problem that extends a previously solved one by appended
/// variables only. The rows must be unchanged (checked via a digest of
/// senses and right-hand sides; coefficients of preexisting variables are the
/// caller's contract). Falls back to a cold solve when the prior carries no
/// usable basis.
pub fn resolve_with_new_columns<S: Scalar>(
    problem: &LpProblem<S>,
    prior: &LpSolution<S>,
) -> Result<LpSolution<S>, LpError> {
    if row_digest(&problem.senses, &problem.rhs) != prior.row_digest {
        return Err(LpError::WarmStartMismatch(
            "constraint rows differ from the prior solve".into(),
        ));
    }
    if problem.n_vars() < prior.n_vars {
        return Err(LpError::WarmStartMismatch(format!(
            "problem has {} variables but the prior solve had {}",
            problem.n_vars(),
            prior.n_vars
        )));
    }
    let basis = match (&prior.status, &prior.basis) {
        (LpStatus::Optimal, Some(basis)) => basis,
        _ => return solve(problem),
    };
    let mut engine = SimplexEngine::new();
    engine.sync(problem)?;
    match engine.set_basis(basis) {
        Ok(()) => engine.optimize(),
        // A numerically unusable basis is not a caller error; start cold.
        Err(LpError::Numerical(_)) => solve(problem),
        Err(other) => Err(other),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum LoopOutcome {
    Optimal,
    Unbounded,
}

/// Incremental simplex state. `sync` may only grow the problem: appended
/// variables start nonbasic at zero, appended rows receive fresh artificial
/// basis slots, and the dense inverse is extended in place.
pub struct SimplexEngine<S> {
    costs: Vec<S>,
    cols: Vec<Vec<(usize, S)>>,
    senses: Vec<Sense>,
    rhs: Vec<S>,
    rhs_nonzero: Vec<usize>,
    basis: Vec<BasisVar>,
    struct_basic: Vec<bool>,
    surplus_basic: Vec<bool>,
    binv: Vec<S>,
    xb: Vec<S>,
    have_state: bool,
    pivots: u64,
}

impl<S: Scalar> Default for SimplexEngine<S> {
    fn default() -> Self {
        SimplexEngine::new()
    }
}

impl<S: Scalar> SimplexEngine<S> {
    pub fn new() -> SimplexEngine<S> {
        SimplexEngine {
            costs: Vec::new(),
            cols: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            rhs_nonzero: Vec::new(),
            basis: Vec::new(),
            struct_basic: Vec::new(),
            surplus_basic: Vec::new(),
            binv: Vec::new(),
            xb: Vec::new(),
            have_state: false,
            pivots: 0,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.senses.len()
    }

    pub fn n_vars(&self) -> usize {
        self.cols.len()
    }

    /// Total pivots performed over the engine's lifetime.
    pub fn pivot_count(&self) -> u64 {
        self.pivots
    }

    /// Adopts `problem`, which must extend the engine's current contents:
    /// the existing rows and variables must be bit-identical prefixes.
    pub fn sync(&mut self, problem: &LpProblem<S>) -> Result<(), LpError> {
        let old_m = self.n_rows();
        let old_n = self.n_vars();
        if problem.n_rows() < old_m || problem.n_vars() < old_n {
            return Err(LpError::WarmStartMismatch(
                "problem is smaller than the engine state".into(),
            ));
        }
        if problem.senses[..old_m] != self.senses[..]
            || problem.rhs[..old_m] != self.rhs[..]
            || problem.costs[..old_n] != self.costs[..]
            || problem.cols[..old_n] != self.cols[..]
        {
            return Err(LpError::WarmStartMismatch(
                "existing rows or variables were modified".into(),
            ));
        }

        for j in old_n..problem.n_vars() {
            self.costs.push(problem.costs[j]);
            self.cols.push(problem.cols[j].clone());
            self.struct_basic.push(false);
        }

        let new_m = problem.n_rows();
        if new_m > old_m {
            for r in old_m..new_m {
                self.senses.push(problem.senses[r]);
                self.rhs.push(problem.rhs[r]);
                self.surplus_basic.push(false);
                if problem.rhs[r] != S::zero() {
                    self.rhs_nonzero.push(r);
                }
            }
            if self.have_state {
                self.extend_state(old_m, new_m);
            }
        }
        Ok(())
    }

    /// Extends basis, values, and inverse for rows appended to a live state.
    fn extend_state(&mut self, old_m: usize, new_m: usize) {
        // Activity of the new rows under the current point: nonbasic
        // variables sit at zero, so only basic structural values contribute.
        let mut activity = vec![S::zero(); new_m - old_m];
        for (i, &bv) in self.basis.iter().enumerate() {
            if let BasisVar::Structural(j) = bv {
                let xj = self.xb[i];
                if xj != S::zero() {
                    for &(r, v) in &self.cols[j] {
                        if r >= old_m {
                            activity[r - old_m] = activity[r - old_m] + v * xj;
                        }
                    }
                }
            }
        }

        let mut binv = vec![S::zero(); new_m * new_m];
        for i in 0..old_m {
            binv[i * new_m..i * new_m + old_m]
                .copy_from_slice(&self.binv[i * old_m..(i + 1) * old_m]);
        }
        for r in old_m..new_m {
            let residual = self.rhs[r] - activity[r - old_m];
            let negated = residual < S::zero();
            self.basis.push(BasisVar::Artificial { row: r, negated });
            self.xb.push(residual.abs());
            binv[r * new_m + r] = if negated { -S::one() } else { S::one() };
        }
        self.binv = binv;
    }

    /// Installs a basis from a prior solve of the same rows, rebuilding the
    /// inverse and the basic values.
    pub fn set_basis(&mut self, basis: &Basis) -> Result<(), LpError> {
        let m = self.n_rows();
        if basis.0.len() != m {
            return Err(LpError::WarmStartMismatch(format!(
                "basis has {} entries for {} rows",
                basis.0.len(),
                m
            )));
        }
        let mut struct_basic = vec![false; self.n_vars()];
        let mut surplus_basic = vec![false; m];
        let mut artificial_seen = vec![false; m];
        for &bv in &basis.0 {
            let ok = match bv {
                BasisVar::Structural(j) => {
                    j < self.n_vars() && !std::mem::replace(&mut struct_basic[j], true)
                }
                BasisVar::Surplus(r) => {
                    r < m
                        && self.senses[r] == Sense::Geq
                        && !std::mem::replace(&mut surplus_basic[r], true)
                }
                BasisVar::Artificial { row, .. } => {
                    row < m && !std::mem::replace(&mut artificial_seen[row], true)
                }
            };
            if !ok {
                return Err(LpError::WarmStartMismatch(
                    "basis references an invalid or repeated variable".into(),
                ));
            }
        }
        self.basis = basis.0.clone();
        self.struct_basic = struct_basic;
        self.surplus_basic = surplus_basic;
        self.xb = vec![S::zero(); m];
        self.binv = vec![S::zero(); m * m];
        self.have_state = true;
        self.refactor()?;
        self.recompute_xb();
        Ok(())
    }

    fn cold_start(&mut self) {
        let m = self.n_rows();
        self.basis = (0..m)
            .map(|row| BasisVar::Artificial {
                row,
                negated: self.rhs[row] < S::zero(),
            })
            .collect();
        self.struct_basic = vec![false; self.n_vars()];
        self.surplus_basic = vec![false; m];
        self.xb = self.rhs.iter().map(|&b| b.abs()).collect();
        self.binv = vec![S::zero(); m * m];
        for (row, &bv) in self.basis.iter().enumerate() {
            let BasisVar::Artificial { negated, .. } = bv else {
                unreachable!()
            };
            self.binv[row * m + row] = if negated { -S::one() } else { S::one() };
        }
        self.have_state = true;
    }

    fn for_each_entry(&self, var: BasisVar, mut f: impl FnMut(usize, S)) {
        match var {
            BasisVar::Structural(j) => {
                for &(r, v) in &self.cols[j] {
                    f(r, v);
                }
            }
            BasisVar::Surplus(r) => f(r, -S::one()),
            BasisVar::Artificial { row, negated } => {
                f(row, if negated { -S::one() } else { S::one() })
            }
        }
    }

    fn basic_cost(&self, var: BasisVar, phase: Phase) -> S {
        match (phase, var) {
            (Phase::One, BasisVar::Artificial { .. }) => S::one(),
            (Phase::One, _) => S::zero(),
            (Phase::Two, BasisVar::Structural(j)) => self.costs[j],
            (Phase::Two, _) => S::zero(),
        }
    }

    /// `duals[k] = sum_i cb[i] * binv[i][k]` for the given phase costs.
    fn btran(&self, phase: Phase) -> Vec<S> {
        let m = self.n_rows();
        let mut duals = vec![S::zero(); m];
        for i in 0..m {
            let ci = self.basic_cost(self.basis[i], phase);
            if ci != S::zero() {
                let row = &self.binv[i * m..(i + 1) * m];
                for (k, d) in duals.iter_mut().enumerate() {
                    *d = *d + ci * row[k];
                }
            }
        }
        duals
    }

    /// `d = binv * column(var)`.
    fn ftran(&self, var: BasisVar) -> Vec<S> {
        let m = self.n_rows();
        let mut d = vec![S::zero(); m];
        self.for_each_entry(var, |r, v| {
            for i in 0..m {
                d[i] = d[i] + self.binv[i * m + r] * v;
            }
        });
        d
    }

    fn reduced_cost(&self, var: BasisVar, duals: &[S], phase: Phase) -> S {
        let mut dot = S::zero();
        self.for_each_entry(var, |r, v| dot = dot + duals[r] * v);
        let cost = match (phase, var) {
            (Phase::Two, BasisVar::Structural(j)) => self.costs[j],
            _ => S::zero(),
        };
        cost - dot
    }

    /// Scans nonbasic structural and surplus variables for an entering
    /// candidate: most negative reduced cost, or the first negative one under
    /// Bland's rule. Artificials never re-enter.
    fn select_entering(&self, duals: &[S], phase: Phase, bland: bool) -> Option<BasisVar> {
        let tol = S::from_f64(REDUCED_COST_TOL);
        let mut best: Option<(S, BasisVar)> = None;
        let mut consider = |var: BasisVar, rc: S| -> bool {
            if rc < -tol {
                if bland {
                    best = Some((rc, var));
                    return true;
                }
                if best.map_or(true, |(b, _)| rc < b) {
                    best = Some((rc, var));
                }
            }
            false
        };
        for j in 0..self.n_vars() {
            if self.struct_basic[j] {
                continue;
            }
            let var = BasisVar::Structural(j);
            if consider(var, self.reduced_cost(var, duals, phase)) {
                return best.map(|(_, v)| v);
            }
        }
        for r in 0..self.n_rows() {
            if self.senses[r] != Sense::Geq || self.surplus_basic[r] {
                continue;
            }
            // Surplus columns are -e_r, so their reduced cost is duals[r].
            if consider(BasisVar::Surplus(r), duals[r]) {
                return best.map(|(_, v)| v);
            }
        }
        best.map(|(_, v)| v)
    }

    fn ordinal(&self, var: BasisVar) -> usize {
        match var {
            BasisVar::Structural(j) => j,
            BasisVar::Surplus(r) => self.n_vars() + r,
            BasisVar::Artificial { row, .. } => self.n_vars() + self.n_rows() + row,
        }
    }

    /// Picks the leaving row for the direction `d`. In phase two, basic
    /// artificials are pinned at zero: any row where the direction touches
    /// them yields a zero-step pivot that drives the artificial out first.
    fn ratio_test(&self, d: &[S], phase: Phase, bland: bool) -> Option<(usize, S)> {
        let pivot_tol = S::from_f64(PIVOT_TOL);
        let mut best: Option<(S, usize)> = None;
        for i in 0..self.n_rows() {
            let di = d[i];
            let artificial = matches!(self.basis[i], BasisVar::Artificial { .. });
            let ratio = if phase == Phase::Two && artificial {
                if di.abs() <= pivot_tol {
                    continue;
                }
                S::zero()
            } else {
                if di <= pivot_tol {
                    continue;
                }
                self.xb[i].max(S::zero()) / di
            };
            let better = match best {
                None => true,
                Some((best_ratio, best_row)) => {
                    if ratio < best_ratio {
                        true
                    } else if ratio > best_ratio {
                        false
                    } else if bland {
                        self.ordinal(self.basis[i]) < self.ordinal(self.basis[best_row])
                    } else {
                        let best_art = matches!(self.basis[best_row], BasisVar::Artificial { .. });
                        if artificial != best_art {
                            artificial
                        } else {
                            di.abs() > d[best_row].abs()
                        }
                    }
                }
            };
            if better {
                best = Some((ratio, i));
            }
        }
        best.map(|(ratio, row)| (row, ratio))
    }

    fn pivot(&mut self, row: usize, entering: BasisVar, d: &[S], step: S) {
        let m = self.n_rows();
        let piv = d[row];
        let inv_piv = S::one() / piv;
        for k in 0..m {
            self.binv[row * m + k] = self.binv[row * m + k] * inv_piv;
        }
        for i in 0..m {
            if i == row {
                continue;
            }
            let factor = d[i];
            if factor != S::zero() {
                for k in 0..m {
                    let delta = factor * self.binv[row * m + k];
                    self.binv[i * m + k] = self.binv[i * m + k] - delta;
                }
            }
        }
        let clamp = S::from_f64(-1e-11);
        for i in 0..m {
            if i != row {
                let mut v = self.xb[i] - step * d[i];
                if v < S::zero() && v > clamp {
                    v = S::zero();
                }
                self.xb[i] = v;
            }
        }
        self.xb[row] = step;

        match self.basis[row] {
            BasisVar::Structural(j) => self.struct_basic[j] = false,
            BasisVar::Surplus(r) => self.surplus_basic[r] = false,
            BasisVar::Artificial { .. } => {}
        }
        match entering {
            BasisVar::Structural(j) => self.struct_basic[j] = true,
            BasisVar::Surplus(r) => self.surplus_basic[r] = true,
            BasisVar::Artificial { .. } => unreachable!("artificials never enter"),
        }
        self.basis[row] = entering;
        self.pivots += 1;
    }

    /// Rebuilds the inverse from the basis columns by Gauss-Jordan
    /// elimination with partial pivoting.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.n_rows();
        let mut mat = vec![S::zero(); m * m];
        for (i, &bv) in self.basis.iter().enumerate() {
            self.for_each_entry(bv, |r, v| mat[r * m + i] = v);
        }
        let mut inv = vec![S::zero(); m * m];
        for i in 0..m {
            inv[i * m + i] = S::one();
        }
        let singular_tol = S::from_f64(1e-12);
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_val = mat[col * m + col].abs();
            for r in col + 1..m {
                let v = mat[r * m + col].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val <= singular_tol {
                return Err(LpError::Numerical("singular basis".into()));
            }
            if piv_row != col {
                for k in 0..m {
                    mat.swap(piv_row * m + k, col * m + k);
                    inv.swap(piv_row * m + k, col * m + k);
                }
            }
            let inv_piv = S::one() / mat[col * m + col];
            for k in 0..m {
                mat[col * m + k] = mat[col * m + k] * inv_piv;
                inv[col * m + k] = inv[col * m + k] * inv_piv;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = mat[r * m + col];
                if f != S::zero() {
                    for k in 0..m {
                        mat[r * m + k] = mat[r * m + k] - f * mat[col * m + k];
                        inv[r * m + k] = inv[r * m + k] - f * inv[col * m + k];
                    }
                }
            }
        }
        self.binv = inv;
        Ok(())
    }

    /// Recomputes basic values as `binv * rhs`, clamping tiny negatives.
    fn recompute_xb(&mut self) {
        let m = self.n_rows();
        let clamp = S::from_f64(-1e-9);
        for i in 0..m {
            let mut v = S::zero();
            for &r in &self.rhs_nonzero {
                v = v + self.binv[i * m + r] * self.rhs[r];
            }
            if v < S::zero() && v > clamp {
                v = S::zero();
            }
            self.xb[i] = v;
        }
    }

    /// `max_i |(B xb - b)_i|`, the factorization drift indicator.
    fn basis_residual(&self) -> S {
        let mut acc: Vec<S> = self.rhs.iter().map(|&b| -b).collect();
        for (i, &bv) in self.basis.iter().enumerate() {
            let xi = self.xb[i];
            if xi != S::zero() {
                self.for_each_entry(bv, |r, v| acc[r] = acc[r] + v * xi);
            }
        }
        acc.into_iter()
            .fold(S::zero(), |worst, v| worst.max(v.abs()))
    }

    fn run_simplex(&mut self, phase: Phase) -> Result<LoopOutcome, LpError> {
        let mut degenerate_streak = 0usize;
        let mut just_refactored = false;
        let start_pivots = self.pivots;
        loop {
            if self.pivots - start_pivots > MAX_PIVOTS {
                return Err(LpError::Numerical(format!(
                    "pivot limit {MAX_PIVOTS} exceeded"
                )));
            }
            if self.pivots % DRIFT_INTERVAL == DRIFT_INTERVAL - 1
                && self.basis_residual() > S::from_f64(DRIFT_TOL)
            {
                self.refactor()?;
                self.recompute_xb();
            }
            let bland = degenerate_streak >= BLAND_TRIGGER;
            let duals = self.btran(phase);
            let Some(entering) = self.select_entering(&duals, phase, bland) else {
                return Ok(LoopOutcome::Optimal);
            };
            let d = self.ftran(entering);
            let Some((row, step)) = self.ratio_test(&d, phase, bland) else {
                if just_refactored {
                    return match phase {
                        Phase::Two => Ok(LoopOutcome::Unbounded),
                        Phase::One => Err(LpError::Numerical(
                            "phase one lost boundedness; basis is numerically inconsistent"
                                .into(),
                        )),
                    };
                }
                // Could be genuine unboundedness or a stale inverse; decide
                // with a fresh factorization.
                self.refactor()?;
                self.recompute_xb();
                just_refactored = true;
                continue;
            };
            just_refactored = false;
            self.pivot(row, entering, &d, step);
            if step.abs() <= S::from_f64(DEGENERATE_STEP) {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
        }
    }

    fn infeasibility(&self) -> S {
        let mut total = S::zero();
        for (i, &bv) in self.basis.iter().enumerate() {
            if matches!(bv, BasisVar::Artificial { .. }) {
                total = total + self.xb[i].max(S::zero());
            }
        }
        total
    }

    fn scale(&self) -> S {
        self.rhs
            .iter()
            .fold(S::one(), |acc, &b| acc.max(b.abs()))
    }

    /// Runs phase one if any artificial carries value, then phase two, then
    /// verifies the solution; on verification failure it refactorizes and
    /// resumes, giving up after a few attempts.
    pub fn optimize(&mut self) -> Result<LpSolution<S>, LpError> {
        if !self.have_state {
            self.cold_start();
        } else if self.xb.iter().any(|&v| v < S::from_f64(-1e-7)) {
            // A corrupted warm state would poison both phases; start over.
            self.cold_start();
        }

        let digest = row_digest(&self.senses, &self.rhs);
        let feas_tol = S::from_f64(FEASIBILITY_TOL) * self.scale();
        if self
            .basis
            .iter()
            .zip(&self.xb)
            .any(|(&bv, &v)| matches!(bv, BasisVar::Artificial { .. }) && v > feas_tol)
        {
            self.run_simplex(Phase::One)?;
            let infeas_tol = S::from_f64(DUALITY_GAP_TOL) * self.scale();
            if self.infeasibility() > infeas_tol {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    primal: Vec::new(),
                    duals: Vec::new(),
                    objective: S::infinity(),
                    basis: None,
                    row_digest: digest,
                    n_vars: self.n_vars(),
                });
            }
        }

        for attempt in 0..VERIFY_ATTEMPTS {
            match self.run_simplex(Phase::Two)? {
                LoopOutcome::Unbounded => {
                    return Ok(LpSolution {
                        status: LpStatus::Unbounded,
                        primal: Vec::new(),
                        duals: Vec::new(),
                        objective: S::neg_infinity(),
                        basis: None,
                        row_digest: digest,
                        n_vars: self.n_vars(),
                    });
                }
                LoopOutcome::Optimal => {}
            }
            if let Some(solution) = self.verified_solution(digest) {
                return Ok(solution);
            }
            if attempt + 1 < VERIFY_ATTEMPTS {
                self.refactor()?;
                self.recompute_xb();
            }
        }
        Err(LpError::Numerical(
            "optimal basis failed verification after refactorization".into(),
        ))
    }

    /// Extracts the solution and checks feasibility and strong duality.
    fn verified_solution(&mut self, digest: u64) -> Option<LpSolution<S>> {
        let m = self.n_rows();
        self.recompute_xb();
        let mut primal = vec![S::zero(); self.n_vars()];
        for (i, &bv) in self.basis.iter().enumerate() {
            if let BasisVar::Structural(j) = bv {
                primal[j] = self.xb[i].max(S::zero());
            }
        }

        let feas_tol = S::from_f64(FEASIBILITY_TOL) * self.scale();
        if self.xb.iter().any(|&v| v < -feas_tol) {
            return None;
        }
        let mut activity = vec![S::zero(); m];
        for (j, &xj) in primal.iter().enumerate() {
            if xj != S::zero() {
                for &(r, v) in &self.cols[j] {
                    activity[r] = activity[r] + v * xj;
                }
            }
        }
        for r in 0..m {
            let violation = match self.senses[r] {
                Sense::Geq => self.rhs[r] - activity[r],
                Sense::Eq => (activity[r] - self.rhs[r]).abs(),
            };
            if violation > feas_tol {
                return None;
            }
        }

        let duals = self.btran(Phase::Two);
        let primal_obj: S = primal
            .iter()
            .zip(&self.costs)
            .map(|(&x, &c)| x * c)
            .sum();
        let dual_obj: S = duals.iter().zip(&self.rhs).map(|(&y, &b)| y * b).sum();
        let gap_tol = S::from_f64(DUALITY_GAP_TOL) * (S::one() + primal_obj.abs());
        if (primal_obj - dual_obj).abs() > gap_tol {
            return None;
        }

        Some(LpSolution {
            status: LpStatus::Optimal,
            primal,
            duals,
            objective: primal_obj,
            basis: Some(Basis(self.basis.clone())),
            row_digest: digest,
            n_vars: self.n_vars(),
        })
    }
}
