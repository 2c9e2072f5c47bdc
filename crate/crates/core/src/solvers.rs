//! Tabu search over QUBO bit vectors and an exact branch-and-bound solver.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{validate, LoadingPlan, ValidationReport};
use crate::error::{Error, Result};
use crate::model::{ContainerType, ProblemInstance};
use crate::qubo::{PenaltyForm, QuadraticModel};

/// Largest `n * N` the exact solver accepts without `force`.
pub const EXACT_LIMIT: usize = 28;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Iterations per restart.
    pub max_iterations: usize,
    pub tabu_tenure: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Stop a restart as soon as its best energy reaches this value.
    pub target_energy: Option<f64>,
    #[serde(default)]
    pub space: SearchSpace,
}

/// Neighbourhood searched by [`tabu_solve`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchSpace {
    /// Flip position bits only; every slack group is held at the value that
    /// minimises its own penalty. Models without penalty terms fall back to
    /// [`SearchSpace::AllBits`].
    #[default]
    Positions,
    /// Flip any bit of the QUBO, slacks included.
    AllBits,
}

impl SolverParams {
    /// Defaults for a model with `num_vars` variables.
    pub fn for_size(num_vars: usize, seed: u64) -> Self {
        Self {
            max_iterations: (50 * num_vars).max(1),
            tabu_tenure: (num_vars / 4).max(10),
            restarts: 20,
            seed,
            target_energy: None,
            space: SearchSpace::default(),
        }
    }

    /// Defaults for the neighbourhood `tabu_solve` will use on `model`.
    ///
    /// Searching position bits only, the landscape has no slack plateaus, so
    /// a shorter budget over the position variables suffices: 4 restarts of
    /// `5 * positions` iterations with tenure `max(10, positions / 4)`.
    pub fn for_model(model: &QuadraticModel, seed: u64) -> Self {
        let positions = model.registry().num_position_vars();
        if model.terms().is_empty() || positions == 0 {
            return Self::for_size(model.num_vars(), seed);
        }
        Self {
            max_iterations: 5 * positions,
            tabu_tenure: (positions / 4).max(10),
            restarts: 4,
            ..Self::for_size(positions, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParams("max_iterations must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParams("restarts must be at least 1".into()));
        }
        if let Some(t) = self.target_energy {
            if t.is_nan() {
                return Err(Error::InvalidParams("target_energy is NaN".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSolution {
    pub bits: Vec<bool>,
    pub energy: f64,
    /// Iterations summed over all restarts.
    pub iterations_used: usize,
    /// Seconds.
    pub wall_time: f64,
}

/// Adjacency of the coefficient map in compressed rows, both directions.
#[derive(Debug, Clone)]
struct Csr {
    diag: Vec<f64>,
    start: Vec<usize>,
    neighbours: Vec<(usize, f64)>,
}

impl Csr {
    fn new(model: &QuadraticModel) -> Self {
        let n = model.num_vars();
        let mut diag = vec![0.0; n];
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for ((i, j), q) in model.coefficients() {
            if i == j {
                diag[i] += q;
            } else {
                rows[i].push((j, q));
                rows[j].push((i, q));
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut neighbours = Vec::new();
        for row in rows {
            start.push(neighbours.len());
            neighbours.extend(row);
        }
        start.push(neighbours.len());
        Self { diag, start, neighbours }
    }

    fn row(&self, k: usize) -> &[(usize, f64)] {
        &self.neighbours[self.start[k]..self.start[k + 1]]
    }
}

/// A bit vector with incrementally maintained energy and flip deltas.
#[derive(Debug, Clone)]
pub struct TabuState<'a> {
    model: &'a QuadraticModel,
    csr: std::sync::Arc<Csr>,
    bits: Vec<bool>,
    /// `field[k] = q_kk + sum_l q_kl z_l`, so flipping k changes the energy by `±field[k]`.
    field: Vec<f64>,
    energy: f64,
}

impl<'a> TabuState<'a> {
    pub fn new(model: &'a QuadraticModel, bits: Vec<bool>) -> Result<Self> {
        let csr = std::sync::Arc::new(Csr::new(model));
        Self::with_csr(model, csr, bits)
    }

    fn with_csr(model: &'a QuadraticModel, csr: std::sync::Arc<Csr>, bits: Vec<bool>) -> Result<Self> {
        let energy = model.energy(&bits)?;
        let mut field = csr.diag.clone();
        for (k, f) in field.iter_mut().enumerate() {
            *f += csr.row(k).iter().filter(|(l, _)| bits[*l]).map(|(_, q)| q).sum::<f64>();
        }
        Ok(Self { model, csr, bits, field, energy })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Energy change if bit `k` were flipped.
    pub fn delta(&self, k: usize) -> f64 {
        if self.bits[k] {
            -self.field[k]
        } else {
            self.field[k]
        }
    }

    pub fn flip(&mut self, k: usize) {
        let d = self.delta(k);
        self.energy += d;
        let sign = if self.bits[k] { -1.0 } else { 1.0 };
        self.bits[k] = !self.bits[k];
        for &(l, q) in self.csr.row(k) {
            self.field[l] += sign * q;
        }
    }

    /// Energy recomputed from scratch.
    pub fn exact_energy(&self) -> f64 {
        self.model.energy(&self.bits).expect("length matches")
    }
}

/// Moves available to the tabu loop.
trait Landscape {
    fn delta(&self, k: usize) -> f64;
    fn flip(&mut self, k: usize);
    fn energy(&self) -> f64;
    fn bits(&self) -> &[bool];
}

impl Landscape for TabuState<'_> {
    fn delta(&self, k: usize) -> f64 {
        TabuState::delta(self, k)
    }
    fn flip(&mut self, k: usize) {
        TabuState::flip(self, k)
    }
    fn energy(&self) -> f64 {
        self.energy
    }
    fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// A penalty square whose slack is kept at its best value.
#[derive(Debug, Clone)]
struct SlackTerm {
    weight: f64,
    sign: f64,
    granularity: f64,
    bound: f64,
}

impl SlackTerm {
    fn value(&self, residual: f64) -> f64 {
        let s = ((-residual * self.sign / self.granularity).round() * self.granularity).clamp(0.0, self.bound);
        let e = residual + self.sign * s;
        self.weight * e * e
    }
}

/// Position-only view of a penalty model: slack-free terms form a small
/// QUBO over the position bits and every slacked square contributes its
/// minimum over the slack grid.
#[derive(Debug)]
struct PositionModel {
    fixed: Csr,
    fixed_model: QuadraticModel,
    terms: Vec<SlackTerm>,
    constants: Vec<f64>,
    /// Per position variable, `(term, coefficient)` pairs.
    start: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

impl PositionModel {
    fn new(model: &QuadraticModel) -> Option<Self> {
        if model.terms().is_empty() {
            return None;
        }
        let registry = model.registry();
        let np = registry.num_position_vars();
        let mut fixed_terms = Vec::new();
        let mut terms = Vec::new();
        let mut constants = Vec::new();
        let mut per_var: Vec<Vec<(usize, f64)>> = vec![Vec::new(); np];
        for term in model.terms() {
            match (term.slack, &term.form) {
                (Some((gi, sign)), PenaltyForm::Square(expr)) => {
                    let group = &registry.slack_groups()[gi];
                    let t = terms.len();
                    terms.push(SlackTerm {
                        weight: term.weight,
                        sign,
                        granularity: group.granularity,
                        bound: group.bound,
                    });
                    constants.push(expr.constant);
                    for &(v, a) in &expr.terms {
                        if v < np {
                            per_var[v].push((t, a));
                        }
                    }
                }
                _ => fixed_terms.push(term.clone()),
            }
        }
        let fixed_model = QuadraticModel::from_terms(registry.clone(), fixed_terms);
        let fixed = Csr::new(&fixed_model);
        let mut start = Vec::with_capacity(np + 1);
        let mut entries = Vec::new();
        for row in per_var {
            start.push(entries.len());
            entries.extend(row);
        }
        start.push(entries.len());
        Some(Self { fixed, fixed_model, terms, constants, start, entries })
    }

    fn var_terms(&self, k: usize) -> &[(usize, f64)] {
        &self.entries[self.start[k]..self.start[k + 1]]
    }
}

struct PositionState<'a> {
    pm: &'a PositionModel,
    /// Full-length vector; slack bits stay clear during the search.
    bits: Vec<bool>,
    np: usize,
    field: Vec<f64>,
    residual: Vec<f64>,
    value: Vec<f64>,
    energy: f64,
}

impl<'a> PositionState<'a> {
    fn new(pm: &'a PositionModel, bits: Vec<bool>, np: usize) -> Self {
        let mut field = pm.fixed.diag[..np].to_vec();
        for (k, f) in field.iter_mut().enumerate() {
            *f += pm.fixed.row(k).iter().filter(|(l, _)| bits[*l]).map(|(_, q)| q).sum::<f64>();
        }
        let mut residual = pm.constants.clone();
        for k in (0..np).filter(|&k| bits[k]) {
            for &(t, a) in pm.var_terms(k) {
                residual[t] += a;
            }
        }
        let value: Vec<f64> = pm.terms.iter().zip(&residual).map(|(t, &r)| t.value(r)).collect();
        let energy = pm.fixed_model.energy(&bits).expect("length matches") + value.iter().sum::<f64>();
        Self { pm, bits, np, field, residual, value, energy }
    }
}

impl Landscape for PositionState<'_> {
    fn delta(&self, k: usize) -> f64 {
        let s = if self.bits[k] { -1.0 } else { 1.0 };
        let mut d = s * self.field[k];
        for &(t, a) in self.pm.var_terms(k) {
            d += self.pm.terms[t].value(self.residual[t] + s * a) - self.value[t];
        }
        d
    }

    fn flip(&mut self, k: usize) {
        self.energy += self.delta(k);
        let s = if self.bits[k] { -1.0 } else { 1.0 };
        self.bits[k] = !self.bits[k];
        for &(l, q) in self.pm.fixed.row(k) {
            self.field[l] += s * q;
        }
        for &(t, a) in self.pm.var_terms(k) {
            self.residual[t] += s * a;
            self.value[t] = self.pm.terms[t].value(self.residual[t]);
        }
    }

    fn energy(&self) -> f64 {
        self.energy
    }

    fn bits(&self) -> &[bool] {
        &self.bits[..self.np]
    }
}

/// Single-flip tabu with aspiration from the landscape's current state.
fn tabu_loop<L: Landscape>(state: &mut L, n: usize, params: &SolverParams) -> (Vec<bool>, usize) {
    let mut best_bits = state.bits().to_vec();
    let mut best = state.energy();
    let mut tabu_until = vec![0usize; n];
    let scale = |e: f64| 1e-9 * e.abs().max(1.0);
    let reached = |e: f64| params.target_energy.is_some_and(|t| e <= t);
    let mut iterations = 0;
    while iterations < params.max_iterations && !reached(best) {
        iterations += 1;
        let current = state.energy();
        let mut chosen: Option<(usize, f64)> = None;
        let mut fallback: Option<(usize, f64)> = None;
        for k in 0..n {
            let d = state.delta(k);
            let allowed = tabu_until[k] < iterations || current + d < best - scale(best);
            if allowed {
                if chosen.is_none_or(|(_, cd)| d < cd) {
                    chosen = Some((k, d));
                }
            } else if fallback.is_none_or(|(_, fd)| d < fd) {
                fallback = Some((k, d));
            }
        }
        let (k, _) = chosen.or(fallback).expect("at least one variable");
        state.flip(k);
        tabu_until[k] = iterations + params.tabu_tenure;
        if state.energy() < best - scale(best) {
            best = state.energy();
            best_bits.copy_from_slice(state.bits());
        }
    }
    (best_bits, iterations)
}

/// Result of one restart.
struct RestartOutcome {
    bits: Vec<bool>,
    energy: f64,
    iterations: usize,
}

fn restart_rng(params: &SolverParams, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(restart as u64);
    rng
}

fn run_restart(model: &QuadraticModel, csr: &std::sync::Arc<Csr>, params: &SolverParams, restart: usize) -> RestartOutcome {
    let n = model.num_vars();
    let mut rng = restart_rng(params, restart);
    let start: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    let mut state = TabuState::with_csr(model, csr.clone(), start).expect("length matches");
    let (bits, iterations) = tabu_loop(&mut state, n, params);
    let energy = model.energy(&bits).expect("length matches");
    RestartOutcome { bits, energy, iterations }
}

fn run_position_restart(model: &QuadraticModel, pm: &PositionModel, params: &SolverParams, restart: usize) -> RestartOutcome {
    let np = model.registry().num_position_vars();
    let mut rng = restart_rng(params, restart);
    let mut start = vec![false; model.num_vars()];
    for b in start.iter_mut().take(np) {
        *b = rng.random::<bool>();
    }
    let mut state = PositionState::new(pm, start, np);
    let (pos, iterations) = tabu_loop(&mut state, np, params);
    let mut bits = pos;
    bits.resize(model.num_vars(), false);
    model.complete_slacks(&mut bits);
    let energy = model.energy(&bits).expect("length matches");
    RestartOutcome { bits, energy, iterations }
}

/// Multi-start tabu search with aspiration.
///
/// Restarts run in parallel from independent random vectors; the lowest
/// energy wins, ties going to the lowest restart index. See
/// [`SearchSpace`] for the two neighbourhoods.
pub fn tabu_solve(model: &QuadraticModel, params: &SolverParams) -> Result<RawSolution> {
    params.validate()?;
    if model.num_vars() == 0 {
        return Err(Error::EmptyModel);
    }
    let clock = Instant::now();
    let position_model = match params.space {
        SearchSpace::Positions if model.registry().num_position_vars() > 0 => PositionModel::new(model),
        _ => None,
    };
    let outcomes: Vec<RestartOutcome> = match &position_model {
        Some(pm) => (0..params.restarts)
            .into_par_iter()
            .map(|r| run_position_restart(model, pm, params, r))
            .collect(),
        None => {
            let csr = std::sync::Arc::new(Csr::new(model));
            (0..params.restarts).into_par_iter().map(|r| run_restart(model, &csr, params, r)).collect()
        }
    };
    let iterations_used = outcomes.iter().map(|o| o.iterations).sum();
    let best = outcomes
        .into_iter()
        .reduce(|a, b| if b.energy < a.energy { b } else { a })
        .expect("at least one restart");
    Ok(RawSolution {
        bits: best.bits,
        energy: best.energy,
        iterations_used,
        wall_time: clock.elapsed().as_secs_f64(),
    })
}

/// Optimal plan found by exhaustive search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub plan: LoadingPlan,
    pub weight: f64,
    /// False only when no assignment (not even the empty plan) satisfies the
    /// active constraints; the plan is then empty.
    pub feasible: bool,
    pub report: ValidationReport,
}

struct Search<'a> {
    instance: &'a ProblemInstance,
    /// Container indices, heaviest first.
    order: Vec<usize>,
    /// Placement options per container (in `order`), each a list of 1-based positions.
    options: Vec<Vec<Vec<usize>>>,
    /// Mass still available from containers `order[k..]`.
    remaining: Vec<f64>,
    fill: Vec<f64>,
    cell_mass: Vec<f64>,
    stations: Vec<crate::model::ShearStation>,
    choice: Vec<usize>,
    eps: f64,
    best: Option<(f64, Vec<bool>)>,
}

impl Search<'_> {
    fn matrix_bits(&self) -> Vec<bool> {
        let n = self.instance.num_positions();
        let mut bits = vec![false; self.instance.num_containers() * n];
        for (k, &c) in self.choice.iter().enumerate() {
            for &j in &self.options[k][c] {
                bits[self.order[k] * n + j - 1] = true;
            }
        }
        bits
    }

    fn shear_ok(&self) -> bool {
        self.stations.iter().all(|st| {
            let v: f64 = st.cells.iter().map(|&(j, f)| f * self.cell_mass[j - 1]).sum();
            v <= st.limit + self.instance.tol(st.limit)
        })
    }

    fn leaf(&mut self, weight: f64) {
        let bits = self.matrix_bits();
        let better = match &self.best {
            None => true,
            Some((w, b)) => weight > w + self.eps || (weight >= w - self.eps && bits < *b),
        };
        if !better {
            return;
        }
        let n = self.instance.num_positions();
        let matrix: Vec<Vec<bool>> = bits.chunks(n.max(1)).map(|c| c.to_vec()).collect();
        let plan = LoadingPlan::from_matrix(self.instance, &matrix);
        let report = validate(&plan, self.instance).expect("plan built from the instance");
        if report.feasible_for(self.instance) {
            self.best = Some((weight, bits));
        }
    }

    fn descend(&mut self, k: usize, weight: f64) {
        if let Some((best, _)) = &self.best {
            let cap = self.instance.params().max_payload - weight;
            let bound = if self.instance.constraints().pl { self.remaining[k].min(cap) } else { self.remaining[k] };
            if weight + bound < best - self.eps {
                return;
            }
        }
        if k == self.order.len() {
            self.leaf(weight);
            return;
        }
        let pl = self.instance.constraints().pl;
        let sl = self.instance.constraints().sl;
        let c = &self.instance.containers()[self.order[k]];
        let (d, m) = (c.ctype.d(), c.cell_mass());
        let w_max = self.instance.params().max_payload;
        for o in 0..self.options[k].len() {
            let cells = self.options[k][o].clone();
            let added = m * cells.len() as f64;
            if pl && (weight + added > w_max + self.instance.tol(w_max)
                || cells.iter().any(|&j| self.fill[j - 1] + d > 1.0 + 1e-9))
            {
                continue;
            }
            for &j in &cells {
                self.fill[j - 1] += d;
                self.cell_mass[j - 1] += m;
            }
            if !sl || self.shear_ok() {
                self.choice.push(o);
                self.descend(k + 1, weight + added);
                self.choice.pop();
            }
            for &j in &cells {
                self.fill[j - 1] -= d;
                self.cell_mass[j - 1] -= m;
            }
        }
    }
}

/// Maximum-weight plan satisfying the instance's active constraints.
///
/// Enumerates physically shaped assignments (each container unloaded, on one
/// position, or for large containers on two adjacent positions) with
/// branch-and-bound pruning on capacity, overlap, shear and the remaining
/// mass. Ties go to the lexicographically smallest container-major bit
/// matrix. Refuses `n * N > 28` unless `force` is set.
pub fn exact_solve(instance: &ProblemInstance, force: bool) -> Result<ExactSolution> {
    let n = instance.num_positions();
    let vars = instance.num_containers() * n;
    if vars > EXACT_LIMIT && !force {
        return Err(Error::Intractable { vars, limit: EXACT_LIMIT });
    }
    let mut order: Vec<usize> = (0..instance.num_containers()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&instance.containers()[a], &instance.containers()[b]);
        cb.mass.total_cmp(&ca.mass).then(a.cmp(&b))
    });
    let options: Vec<Vec<Vec<usize>>> = order
        .iter()
        .map(|&i| {
            let mut opts = vec![Vec::new()];
            if instance.containers()[i].ctype == ContainerType::T3 {
                opts.extend((1..n).map(|j| vec![j, j + 1]));
            } else {
                opts.extend((1..=n).map(|j| vec![j]));
            }
            opts
        })
        .collect();
    let mut remaining = vec![0.0; order.len() + 1];
    for k in (0..order.len()).rev() {
        remaining[k] = remaining[k + 1] + instance.containers()[order[k]].mass;
    }
    let total = remaining[0];
    let mut search = Search {
        instance,
        order,
        options,
        remaining,
        fill: vec![0.0; n],
        cell_mass: vec![0.0; n],
        stations: instance.shear_stations(),
        choice: Vec::new(),
        eps: 1e-9 * total.max(1.0),
        best: None,
    };
    search.descend(0, 0.0);
    let (plan, feasible) = match search.best {
        Some((_, bits)) => {
            let matrix: Vec<Vec<bool>> = bits.chunks(n.max(1)).map(|c| c.to_vec()).collect();
            (LoadingPlan::from_matrix(instance, &matrix), true)
        }
        None => (LoadingPlan::empty(instance), false),
    };
    let report = validate(&plan, instance)?;
    Ok(ExactSolution { weight: report.loaded_weight, plan, feasible, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AircraftParams, ConstraintSet, ContainerSpec};
    use crate::qubo::VariableRegistry;

    #[test]
    fn single_variable_model() {
        let m = QuadraticModel::from_entries(VariableRegistry::new(1, 1), [(0, 0, -5.0)], 0.0);
        let s = tabu_solve(&m, &SolverParams::for_size(1, 3)).unwrap();
        assert_eq!(s.bits, vec![true]);
        assert_eq!(s.energy, -5.0);
    }

    #[test]
    fn target_energy_stops_early() {
        let m = QuadraticModel::from_entries(VariableRegistry::new(1, 1), [(0, 0, -5.0)], 0.0);
        let mut p = SolverParams::for_size(1, 3);
        p.max_iterations = 1000;
        p.restarts = 1;
        p.target_energy = Some(-5.0);
        let s = tabu_solve(&m, &p).unwrap();
        assert!(s.iterations_used < 1000);
        assert_eq!(s.energy, -5.0);
    }

    #[test]
    fn rejects_empty_model_and_bad_params() {
        let m = QuadraticModel::from_entries(VariableRegistry::new(0, 1), [], 0.0);
        assert!(matches!(tabu_solve(&m, &SolverParams::for_size(0, 1)), Err(Error::EmptyModel)));
        let one = QuadraticModel::from_entries(VariableRegistry::new(1, 1), [(0, 0, 1.0)], 0.0);
        let mut p = SolverParams::for_size(1, 1);
        p.restarts = 0;
        assert!(tabu_solve(&one, &p).is_err());
    }

    fn inst(specs: &[(u32, ContainerType, f64)], n: usize, w: f64) -> ProblemInstance {
        let params = AircraftParams { num_positions: n, max_payload: w, ..AircraftParams::reference() };
        let cs = specs.iter().map(|&(id, t, m)| ContainerSpec::new(id, t, m)).collect();
        ProblemInstance::new("t", cs, params, ConstraintSet::PL, None).unwrap()
    }

    #[test]
    fn exact_small_cases() {
        let one = exact_solve(&inst(&[(1, ContainerType::T1, 1234.0)], 1, 8000.0), false).unwrap();
        assert_eq!(one.weight, 1234.0);
        assert!(one.feasible);

        // T3 alone fills both positions; the T1 alone would be lighter
        let two = inst(&[(1, ContainerType::T3, 3000.0), (2, ContainerType::T1, 2000.0)], 2, 8000.0);
        let s = exact_solve(&two, false).unwrap();
        assert_eq!(s.weight, 3000.0);
        assert_eq!(s.plan.positions_of(1), Some(&[1, 2][..]));
        // with the T3 over capacity only the T1 fits
        let capped = inst(&[(1, ContainerType::T3, 3000.0), (2, ContainerType::T1, 2000.0)], 2, 2500.0);
        assert_eq!(exact_solve(&capped, false).unwrap().weight, 2000.0);

        let empty = exact_solve(&inst(&[], 3, 8000.0), false).unwrap();
        assert_eq!(empty.weight, 0.0);
        assert!(empty.plan.is_empty());
    }

    #[test]
    fn exact_guard() {
        let specs: Vec<_> = (1..=10).map(|k| (k, ContainerType::T1, 100.0)).collect();
        let big = inst(&specs, 4, 8000.0);
        assert!(matches!(exact_solve(&big, false), Err(Error::Intractable { vars: 40, .. })));
    }

    #[test]
    fn exact_tie_break_is_lexicographic() {
        let two = inst(&[(1, ContainerType::T1, 100.0)], 3, 8000.0);
        let s = exact_solve(&two, false).unwrap();
        // bit vectors 001 < 010 < 100: the container lands on the last position
        assert_eq!(s.plan.positions_of(1), Some(&[3][..]));
    }
}
