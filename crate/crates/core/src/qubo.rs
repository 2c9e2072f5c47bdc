//! QUBO assembly for the loading problem.
//!
//! Every constraint is first built as an unexpanded [`PenaltyTerm`] (a weight
//! times the square of a linear expression, or the degree-two contiguity
//! form) and then expanded into a sparse upper-triangular coefficient map.
//! Constant terms are kept in an explicit offset so the model energy equals
//! the true objective-plus-penalty value.
//!
//! Variable layout: position variable `p[i][j]` lives at `i * N + j` (both
//! 0-based); slack groups follow in allocation order.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ContainerType, ProblemInstance, ShearSide};

// Resolution used when searching for a common step between real values.
const GRID_QUANTUM: f64 = 1e-6;

/// Penalty family, one per constraint kind plus the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Objective,
    Overlap,
    Duplicate,
    Contiguity,
    Capacity,
    CogTarget,
    CogLower,
    CogUpper,
    ShearLeft,
    ShearRight,
}

impl Family {
    pub const PENALTIES: [Family; 9] = [
        Family::Overlap,
        Family::Duplicate,
        Family::Contiguity,
        Family::Capacity,
        Family::CogTarget,
        Family::CogLower,
        Family::CogUpper,
        Family::ShearLeft,
        Family::ShearRight,
    ];

    pub fn is_payload(self) -> bool {
        matches!(self, Family::Overlap | Family::Duplicate | Family::Contiguity | Family::Capacity)
    }
}

/// Identifies the constraint instance that owns a slack group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintTag {
    /// 1-based position.
    Overlap { position: usize },
    Duplicate { container: u32 },
    Capacity,
    CogLower,
    CogUpper,
    Shear { side: ShearSide, station: usize },
}

impl std::fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintTag::Overlap { position } => write!(f, "overlap@{position}"),
            ConstraintTag::Duplicate { container } => write!(f, "duplicate#{container}"),
            ConstraintTag::Capacity => f.write_str("capacity"),
            ConstraintTag::CogLower => f.write_str("cog_lower"),
            ConstraintTag::CogUpper => f.write_str("cog_upper"),
            ConstraintTag::Shear { side, station } => {
                let s = match side {
                    ShearSide::Left => "left",
                    ShearSide::Right => "right",
                    ShearSide::MidLeft => "mid_left",
                    ShearSide::MidRight => "mid_right",
                };
                write!(f, "shear_{s}@{station}")
            }
        }
    }
}

/// Binary-expanded slack for one inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackGroup {
    pub tag: ConstraintTag,
    pub coefficients: Vec<f64>,
    pub var_indices: Vec<usize>,
    /// Largest residual the group must represent.
    pub bound: f64,
    pub granularity: f64,
}

impl SlackGroup {
    /// Sum of coefficients over the set bits.
    pub fn value(&self, bits: &[bool]) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.var_indices)
            .filter(|(_, &v)| bits[v])
            .map(|(c, _)| c)
            .sum()
    }

    /// Set the group's bits to represent `value` (a grid multiple in `0..=bound`).
    pub fn encode(&self, value: f64, bits: &mut [bool]) {
        let g = self.granularity;
        let mut units = (value / g).round().max(0.0) as u64;
        for &v in &self.var_indices {
            bits[v] = false;
        }
        if self.coefficients.is_empty() {
            return;
        }
        let last = self.coefficients.len() - 1;
        let last_units = (self.coefficients[last] / g).round() as u64;
        if units >= last_units {
            bits[self.var_indices[last]] = true;
            units -= last_units;
        }
        for k in 0..last {
            if units & (1 << k) != 0 {
                bits[self.var_indices[k]] = true;
            }
        }
    }
}

/// Maps `(container, position)` pairs and slack groups onto flat indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableRegistry {
    num_containers: usize,
    num_positions: usize,
    slack_groups: Vec<SlackGroup>,
}

/// What a flat variable index refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VariableKind {
    /// Container index (0-based) and position (1-based).
    Position { container: usize, position: usize },
    Slack { group: usize, bit: usize },
}

impl VariableRegistry {
    pub fn new(num_containers: usize, num_positions: usize) -> Self {
        Self { num_containers, num_positions, slack_groups: Vec::new() }
    }

    pub fn num_containers(&self) -> usize {
        self.num_containers
    }

    pub fn num_positions(&self) -> usize {
        self.num_positions
    }

    pub fn num_position_vars(&self) -> usize {
        self.num_containers * self.num_positions
    }

    pub fn num_slack_vars(&self) -> usize {
        self.slack_groups.iter().map(|g| g.var_indices.len()).sum()
    }

    pub fn total_vars(&self) -> usize {
        self.num_position_vars() + self.num_slack_vars()
    }

    /// Flat index of `p[container][position]`, container 0-based, position 1-based.
    pub fn position_var(&self, container: usize, position: usize) -> usize {
        debug_assert!(container < self.num_containers && (1..=self.num_positions).contains(&position));
        container * self.num_positions + position - 1
    }

    pub fn slack_groups(&self) -> &[SlackGroup] {
        &self.slack_groups
    }

    pub fn kind(&self, index: usize) -> Option<VariableKind> {
        let np = self.num_position_vars();
        if index < np {
            return Some(VariableKind::Position {
                container: index / self.num_positions,
                position: index % self.num_positions + 1,
            });
        }
        let mut start = np;
        for (g, group) in self.slack_groups.iter().enumerate() {
            if index < start + group.var_indices.len() {
                return Some(VariableKind::Slack { group: g, bit: index - start });
            }
            start += group.var_indices.len();
        }
        None
    }

    /// Allocate a slack group covering `0..=bound` in steps of `granularity`.
    pub fn add_slack_group(&mut self, tag: ConstraintTag, bound: f64, granularity: f64) -> Result<usize> {
        let coefficients = slack_expansion(bound, granularity)?;
        let start = self.total_vars();
        let var_indices = (start..start + coefficients.len()).collect();
        self.slack_groups.push(SlackGroup { tag, coefficients, var_indices, bound, granularity });
        Ok(self.slack_groups.len() - 1)
    }
}

/// Capped binary expansion of a slack range `0..=ubar` with step `granularity`.
///
/// With `M = ubar / granularity` and `r = floor(log2 M)` the coefficients are
/// `granularity * [1, 2, .., 2^(r-1), M - (2^r - 1)]`, whose subset sums are
/// exactly the grid `{0, g, 2g, .., ubar}`.
pub fn slack_expansion(ubar: f64, granularity: f64) -> Result<Vec<f64>> {
    if !(granularity > 0.0) || !granularity.is_finite() {
        return Err(Error::InvalidSlack(format!("granularity must be positive, got {granularity}")));
    }
    if !ubar.is_finite() || ubar < -1e-9 * granularity {
        return Err(Error::InvalidSlack(format!("bound must be non-negative, got {ubar}")));
    }
    let ratio = ubar / granularity;
    let units = ratio.round();
    if (ratio - units).abs() > 1e-9 * units.max(1.0) {
        return Err(Error::InvalidSlack(format!(
            "bound {ubar} is not a multiple of granularity {granularity}"
        )));
    }
    if units > (1u64 << 52) as f64 {
        return Err(Error::InvalidSlack(format!("bound {ubar} needs more than 52 slack bits")));
    }
    let m = units as u64;
    if m == 0 {
        return Ok(Vec::new());
    }
    let r = 63 - m.leading_zeros();
    let mut out: Vec<f64> = (0..r).map(|k| granularity * (1u64 << k) as f64).collect();
    let last = m - ((1u64 << r) - 1);
    if last > 0 {
        out.push(granularity * last as f64);
    }
    Ok(out)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn grid_units(v: f64) -> Option<u64> {
    let s = v.abs() / GRID_QUANTUM;
    let r = s.round();
    if r > 9.0e15 || (s - r).abs() > 1e-3_f64.max(r * 1e-12) {
        return None;
    }
    Some(r as u64)
}

/// Finest common step of `values`, never coarser than `base`.
///
/// Falls back to `base` when the values have no common step at micro-unit
/// resolution; residuals below `base` are then not representable by slacks.
pub fn common_step(values: impl IntoIterator<Item = f64>, base: f64) -> f64 {
    let Some(mut g) = grid_units(base).filter(|&u| u > 0) else {
        return base;
    };
    for v in values {
        match grid_units(v) {
            Some(0) => {}
            Some(u) => g = gcd(g, u),
            None => return base,
        }
    }
    g as f64 * GRID_QUANTUM
}

fn floor_to_grid(v: f64, g: f64) -> f64 {
    ((v / g) + 1e-9).floor() * g
}

fn ceil_to_grid(v: f64, g: f64) -> f64 {
    ((v / g) - 1e-9).ceil() * g
}

/// Penalty weights `P` for every family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub p_overlap: f64,
    pub p_dup: f64,
    pub p_contig: f64,
    pub p_capacity: f64,
    pub p_cog_target: f64,
    pub p_cog_lower: f64,
    pub p_cog_upper: f64,
    pub p_shear_left: f64,
    pub p_shear_right: f64,
}

impl PenaltyWeights {
    /// Every family at `value`, then the structural relations applied.
    pub fn uniform(value: f64) -> Self {
        let mut w = Self {
            p_overlap: value,
            p_dup: value,
            p_contig: value,
            p_capacity: value,
            p_cog_target: value,
            p_cog_lower: value,
            p_cog_upper: value,
            p_shear_left: value,
            p_shear_right: value,
        };
        w.enforce_relations();
        w
    }

    /// All families at `value` with no relations enforced. Only for probing
    /// individual penalty functions; such weights fail [`validate`](Self::validate).
    pub fn unit_probe(value: f64) -> Self {
        Self {
            p_overlap: value,
            p_dup: value,
            p_contig: value,
            p_capacity: value,
            p_cog_target: value,
            p_cog_lower: value,
            p_cog_upper: value,
            p_shear_left: value,
            p_shear_right: value,
        }
    }

    /// Weights large enough that any single violation outweighs the whole
    /// objective: `(1 + sum t_i m_i)^2` for every family.
    pub fn dominant(instance: &ProblemInstance) -> Self {
        let total: f64 = instance.containers().iter().map(|c| c.cell_mass()).sum();
        Self::uniform((1.0 + total).powi(2))
    }

    /// Weights scaled to the natural residual unit of each family.
    ///
    /// With `M` the heaviest container, the placement families get `8M`
    /// (contiguity `2M`), so a single placement violation outweighs loading
    /// any container. Capacity and shear get `8M` per squared mass step. The
    /// centre-of-gravity target is a soft preference measured in units of the
    /// empty aircraft moment over one position, with the bounds at ten times
    /// the target weight.
    pub fn scaled(instance: &ProblemInstance) -> Self {
        let p = instance.params();
        let heaviest = instance.containers().iter().map(|c| c.mass).fold(0.0_f64, f64::max).max(1.0);
        let step = mass_granularity(instance);
        let hard = 8.0 * heaviest;
        let moment = (p.empty_mass * p.length / p.num_positions as f64).max(1.0);
        let p_cog_target = heaviest / (moment * moment);
        Self {
            p_overlap: hard,
            p_dup: hard,
            p_contig: 2.0 * heaviest,
            p_capacity: hard / (step * step),
            p_cog_target,
            p_cog_lower: 10.0 * p_cog_target,
            p_cog_upper: 10.0 * p_cog_target,
            p_shear_left: hard / (step * step),
            p_shear_right: hard / (step * step),
        }
    }

    /// `p_dup > 2 p_contig` and `p_cog_lower = p_cog_upper = 10 p_cog_target`.
    pub fn enforce_relations(&mut self) {
        self.p_dup = self.p_dup.max(2.000001 * self.p_contig);
        self.p_cog_lower = 10.0 * self.p_cog_target;
        self.p_cog_upper = self.p_cog_lower;
    }

    pub fn get(&self, family: Family) -> f64 {
        match family {
            Family::Objective => 1.0,
            Family::Overlap => self.p_overlap,
            Family::Duplicate => self.p_dup,
            Family::Contiguity => self.p_contig,
            Family::Capacity => self.p_capacity,
            Family::CogTarget => self.p_cog_target,
            Family::CogLower => self.p_cog_lower,
            Family::CogUpper => self.p_cog_upper,
            Family::ShearLeft => self.p_shear_left,
            Family::ShearRight => self.p_shear_right,
        }
    }

    fn set(&mut self, family: Family, value: f64) {
        match family {
            Family::Objective => {}
            Family::Overlap => self.p_overlap = value,
            Family::Duplicate => self.p_dup = value,
            Family::Contiguity => self.p_contig = value,
            Family::Capacity => self.p_capacity = value,
            Family::CogTarget => self.p_cog_target = value,
            Family::CogLower => self.p_cog_lower = value,
            Family::CogUpper => self.p_cog_upper = value,
            Family::ShearLeft => self.p_shear_left = value,
            Family::ShearRight => self.p_shear_right = value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for f in Family::PENALTIES {
            let v = self.get(f);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidWeights(format!("{f:?} weight must be positive, got {v}")));
            }
        }
        if !(self.p_dup > 2.0 * self.p_contig) {
            return Err(Error::InvalidWeights(format!(
                "p_dup ({}) must exceed 2 * p_contig ({})",
                self.p_dup, self.p_contig
            )));
        }
        if (self.p_cog_lower - self.p_cog_upper).abs() > 1e-9 * self.p_cog_lower.abs() {
            return Err(Error::InvalidWeights(format!(
                "p_cog_lower ({}) and p_cog_upper ({}) must be equal",
                self.p_cog_lower, self.p_cog_upper
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let w: Self = toml::from_str(s).map_err(|e| Error::Parse(e.to_string().replace('\n', " ")))?;
        w.validate()?;
        Ok(w)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("weights serialize")
    }
}

/// Sparse linear expression `sum a_k z_k + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinearExpr {
    pub fn eval(&self, bits: &[bool]) -> f64 {
        self.constant + self.terms.iter().filter(|(v, _)| bits[*v]).map(|(_, a)| a).sum::<f64>()
    }

    fn push(&mut self, var: usize, coeff: f64) {
        if coeff != 0.0 {
            self.terms.push((var, coeff));
        }
    }

    /// Terms with repeated variables merged, sorted by index.
    fn merged(&self) -> Vec<(usize, f64)> {
        let mut m: BTreeMap<usize, f64> = BTreeMap::new();
        for &(v, a) in &self.terms {
            *m.entry(v).or_insert(0.0) += a;
        }
        m.into_iter().filter(|(_, a)| *a != 0.0).collect()
    }
}

/// Unexpanded shape of a penalty (before weighting).
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyForm {
    /// `expr`
    Linear(LinearExpr),
    /// `expr^2`
    Square(LinearExpr),
    /// `sum a_k z_k + sum b_kl z_k z_l`
    Quadratic { linear: Vec<(usize, f64)>, pairs: Vec<(usize, usize, f64)> },
}

/// One weighted penalty (or the objective) in unexpanded form.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyTerm {
    pub family: Family,
    pub weight: f64,
    pub form: PenaltyForm,
    /// Owning slack group and the sign its sum enters the square with.
    pub slack: Option<(usize, f64)>,
}

impl PenaltyTerm {
    /// Weighted value evaluated from the unexpanded form.
    pub fn value(&self, bits: &[bool]) -> f64 {
        self.weight * self.raw_value(bits)
    }

    /// Unweighted value.
    pub fn raw_value(&self, bits: &[bool]) -> f64 {
        match &self.form {
            PenaltyForm::Linear(e) => e.eval(bits),
            PenaltyForm::Square(e) => {
                let r = e.eval(bits);
                r * r
            }
            PenaltyForm::Quadratic { linear, pairs } => {
                let l: f64 = linear.iter().filter(|(v, _)| bits[*v]).map(|(_, a)| a).sum();
                let q: f64 = pairs.iter().filter(|(a, b, _)| bits[*a] && bits[*b]).map(|(_, _, c)| c).sum();
                l + q
            }
        }
    }
}

fn square_term(family: Family, weight: f64, expr: LinearExpr, slack: Option<(usize, f64)>) -> PenaltyTerm {
    PenaltyTerm { family, weight, form: PenaltyForm::Square(expr), slack }
}

fn add_slack_to_expr(expr: &mut LinearExpr, group: &SlackGroup, sign: f64) {
    for (&v, &c) in group.var_indices.iter().zip(&group.coefficients) {
        expr.push(v, sign * c);
    }
}

/// Step shared by all per-cell masses, capped at the instance's mass step.
pub fn mass_granularity(instance: &ProblemInstance) -> f64 {
    common_step(instance.containers().iter().map(|c| c.cell_mass()), instance.params().mass_step)
}

/// Objective: `-t_i m_i` on every position variable.
pub fn build_objective(instance: &ProblemInstance, registry: &VariableRegistry) -> PenaltyTerm {
    let mut expr = LinearExpr::default();
    for (i, c) in instance.containers().iter().enumerate() {
        for j in 1..=instance.num_positions() {
            expr.push(registry.position_var(i, j), -c.cell_mass());
        }
    }
    PenaltyTerm { family: Family::Objective, weight: 1.0, form: PenaltyForm::Linear(expr), slack: None }
}

/// No-overlap at position `j` (1-based): `P (sum_i d_i p_ij + slack - 1)^2`.
pub fn build_no_overlap(
    instance: &ProblemInstance,
    j: usize,
    weights: &PenaltyWeights,
    registry: &mut VariableRegistry,
) -> Result<PenaltyTerm> {
    let g = instance.containers().iter().map(|c| c.ctype.d()).fold(1.0_f64, f64::min);
    let gi = registry.add_slack_group(ConstraintTag::Overlap { position: j }, 1.0, g)?;
    let mut expr = LinearExpr { terms: Vec::new(), constant: -1.0 };
    for (i, c) in instance.containers().iter().enumerate() {
        expr.push(registry.position_var(i, j), c.ctype.d());
    }
    add_slack_to_expr(&mut expr, &registry.slack_groups[gi], 1.0);
    Ok(square_term(Family::Overlap, weights.p_overlap, expr, Some((gi, 1.0))))
}

/// No-duplicates for container `i` (0-based): `P (t_i sum_j p_ij + slack - 1)^2`.
pub fn build_no_duplicates(
    instance: &ProblemInstance,
    i: usize,
    weights: &PenaltyWeights,
    registry: &mut VariableRegistry,
) -> Result<PenaltyTerm> {
    let c = &instance.containers()[i];
    let t = c.ctype.t();
    let gi = registry.add_slack_group(ConstraintTag::Duplicate { container: c.id }, 1.0, t)?;
    let mut expr = LinearExpr { terms: Vec::new(), constant: -1.0 };
    for j in 1..=instance.num_positions() {
        expr.push(registry.position_var(i, j), t);
    }
    add_slack_to_expr(&mut expr, &registry.slack_groups[gi], 1.0);
    Ok(square_term(Family::Duplicate, weights.p_dup, expr, Some((gi, 1.0))))
}

/// Contiguity for large container `i`: `P (1/2 sum_j p_ij - sum_j p_ij p_i,j+1)`.
///
/// Only sound together with the duplicates penalty and `p_dup > 2 p_contig`;
/// [`assemble`] enforces that relation.
pub fn build_contiguity(
    instance: &ProblemInstance,
    i: usize,
    weights: &PenaltyWeights,
    registry: &VariableRegistry,
) -> Result<PenaltyTerm> {
    let c = &instance.containers()[i];
    if c.ctype != ContainerType::T3 {
        return Err(Error::InvalidInstance(format!("container {} is not a large container", c.id)));
    }
    let n = instance.num_positions();
    let linear = (1..=n).map(|j| (registry.position_var(i, j), 0.5)).collect();
    let pairs = (1..n)
        .map(|j| (registry.position_var(i, j), registry.position_var(i, j + 1), -1.0))
        .collect();
    Ok(PenaltyTerm {
        family: Family::Contiguity,
        weight: weights.p_contig,
        form: PenaltyForm::Quadratic { linear, pairs },
        slack: None,
    })
}

/// Maximum capacity: `P (sum t_i m_i p_ij + slack - W_p)^2`.
///
/// Loads are multiples of the mass granularity `g`, so the bound is taken as
/// `W_p` rounded down to the grid; this is equivalent for every plan and
/// keeps feasible plans at exactly zero penalty.
pub fn build_capacity(
    instance: &ProblemInstance,
    weights: &PenaltyWeights,
    registry: &mut VariableRegistry,
) -> Result<PenaltyTerm> {
    let g = mass_granularity(instance);
    let bound = floor_to_grid(instance.params().max_payload, g);
    let gi = registry.add_slack_group(ConstraintTag::Capacity, bound, g)?;
    let mut expr = LinearExpr { terms: Vec::new(), constant: -bound };
    for (i, c) in instance.containers().iter().enumerate() {
        for j in 1..=instance.num_positions() {
            expr.push(registry.position_var(i, j), c.cell_mass());
        }
    }
    add_slack_to_expr(&mut expr, &registry.slack_groups[gi], 1.0);
    Ok(square_term(Family::Capacity, weights.p_capacity, expr, Some((gi, 1.0))))
}

/// Which centre-of-gravity penalty to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CogMode {
    Target,
    Lower,
    Upper,
}

/// Moment residual `sum t_i m_i (x_j - x_ref) p_ij + W_e (x_e - x_ref)` without slack.
fn cog_residual(instance: &ProblemInstance, registry: &VariableRegistry, x_ref: f64) -> LinearExpr {
    let p = instance.params();
    let mut expr = LinearExpr { terms: Vec::new(), constant: p.empty_mass * (p.empty_cog - x_ref) };
    for (i, c) in instance.containers().iter().enumerate() {
        for j in 1..=instance.num_positions() {
            expr.push(registry.position_var(i, j), c.cell_mass() * (instance.position_x(j) - x_ref));
        }
    }
    expr
}

/// Conservative largest lower-bound residual over physical plans: each
/// container's full mass at the most favourable position.
pub fn cog_slack_bound(instance: &ProblemInstance, mode: CogMode) -> f64 {
    let p = instance.params();
    let n = instance.num_positions();
    let payload: f64 = instance.containers().iter().map(|c| c.mass).sum();
    let (reach, empty) = match mode {
        CogMode::Lower => (instance.position_x(n) - p.cog_min, p.empty_mass * (p.empty_cog - p.cog_min)),
        CogMode::Upper => (p.cog_max - instance.position_x(1), p.empty_mass * (p.cog_max - p.empty_cog)),
        CogMode::Target => return 0.0,
    };
    (payload * reach.max(0.0) + empty).max(0.0)
}

/// Centre-of-gravity penalty.
///
/// Target: `P (xbar - x_t xund)^2`. Lower: `P (xbar - x_min xund - slack)^2`.
/// Upper: `P (xbar - x_max xund + slack)^2`, where `xbar - x xund` is the
/// moment residual about `x`. For the bound modes the constant is moved onto
/// the moment grid (floor for lower, ceiling for upper), which is equivalent
/// for every plan.
pub fn build_cog(
    instance: &ProblemInstance,
    mode: CogMode,
    weights: &PenaltyWeights,
    registry: &mut VariableRegistry,
) -> Result<PenaltyTerm> {
    let p = instance.params();
    match mode {
        CogMode::Target => {
            let expr = cog_residual(instance, registry, p.cog_target);
            Ok(square_term(Family::CogTarget, weights.p_cog_target, expr, None))
        }
        CogMode::Lower | CogMode::Upper => {
            let (x_ref, tag, family, weight, sign) = if mode == CogMode::Lower {
                (p.cog_min, ConstraintTag::CogLower, Family::CogLower, weights.p_cog_lower, -1.0)
            } else {
                (p.cog_max, ConstraintTag::CogUpper, Family::CogUpper, weights.p_cog_upper, 1.0)
            };
            let mut expr = cog_residual(instance, registry, x_ref);
            let g = common_step(expr.terms.iter().map(|t| t.1), p.mass_step);
            expr.constant = if mode == CogMode::Lower {
                floor_to_grid(expr.constant, g)
            } else {
                ceil_to_grid(expr.constant, g)
            };
            let bound = ceil_to_grid(cog_slack_bound(instance, mode), g);
            let gi = registry.add_slack_group(tag, bound, g)?;
            add_slack_to_expr(&mut expr, &registry.slack_groups[gi], sign);
            Ok(square_term(family, weight, expr, Some((gi, sign))))
        }
    }
}

/// Shear penalties, one per station: `P (S_side(u) + slack - S_max(x_u))^2`.
///
/// For odd N the two origin checks split the middle cell's mass between the
/// sides. Limits are rounded down to the mass grid like the capacity bound.
pub fn build_shear(
    instance: &ProblemInstance,
    weights: &PenaltyWeights,
    registry: &mut VariableRegistry,
) -> Result<Vec<PenaltyTerm>> {
    let g_full = mass_granularity(instance);
    let mut out = Vec::new();
    for st in instance.shear_stations() {
        // Origin checks carry half masses.
        let g = if matches!(st.side, ShearSide::MidLeft | ShearSide::MidRight) {
            common_step(instance.containers().iter().map(|c| 0.5 * c.cell_mass()), g_full)
        } else {
            g_full
        };
        let bound = floor_to_grid(st.limit, g).max(0.0);
        let tag = ConstraintTag::Shear { side: st.side, station: st.station };
        let gi = registry.add_slack_group(tag, bound, g)?;
        let mut expr = LinearExpr { terms: Vec::new(), constant: -bound };
        for (i, c) in instance.containers().iter().enumerate() {
            for &(j, factor) in &st.cells {
                expr.push(registry.position_var(i, j), factor * c.cell_mass());
            }
        }
        add_slack_to_expr(&mut expr, &registry.slack_groups[gi], 1.0);
        let (family, weight) = match st.side {
            ShearSide::Left | ShearSide::MidLeft => (Family::ShearLeft, weights.p_shear_left),
            ShearSide::Right | ShearSide::MidRight => (Family::ShearRight, weights.p_shear_right),
        };
        out.push(square_term(family, weight, expr, Some((gi, 1.0))));
    }
    Ok(out)
}

/// Knobs for [`assemble_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyOptions {
    /// Include the maximum-capacity penalty when PL is active.
    pub capacity: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { capacity: true }
    }
}

/// Build every penalty term for the instance's active constraints, allocating
/// slack groups in the order capacity, duplicates, overlaps, CoG, shear.
pub fn build_terms(
    instance: &ProblemInstance,
    weights: &PenaltyWeights,
    options: &AssemblyOptions,
) -> Result<(VariableRegistry, Vec<PenaltyTerm>)> {
    let mut registry = VariableRegistry::new(instance.num_containers(), instance.num_positions());
    let mut terms = vec![build_objective(instance, &registry)];
    let cs = instance.constraints();
    if cs.pl {
        if options.capacity {
            terms.push(build_capacity(instance, weights, &mut registry)?);
        }
        for i in 0..instance.num_containers() {
            terms.push(build_no_duplicates(instance, i, weights, &mut registry)?);
        }
        for (i, c) in instance.containers().iter().enumerate() {
            if c.ctype == ContainerType::T3 {
                terms.push(build_contiguity(instance, i, weights, &registry)?);
            }
        }
        for j in 1..=instance.num_positions() {
            terms.push(build_no_overlap(instance, j, weights, &mut registry)?);
        }
    }
    if cs.cl {
        for mode in [CogMode::Target, CogMode::Lower, CogMode::Upper] {
            terms.push(build_cog(instance, mode, weights, &mut registry)?);
        }
    }
    if cs.sl {
        terms.extend(build_shear(instance, weights, &mut registry)?);
    }
    Ok((registry, terms))
}

/// Sparse QUBO: upper-triangular coefficients plus a constant offset.
///
/// Energy is `sum_{(i,j)} q_ij z_i z_j + offset`; diagonal entries are the
/// linear terms and each unordered pair is stored once with its full
/// coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    coefficients: BTreeMap<(usize, usize), f64>,
    offset: f64,
    registry: VariableRegistry,
    terms: Vec<PenaltyTerm>,
}

impl QuadraticModel {
    /// Expand `terms` into coefficient form.
    pub fn from_terms(registry: VariableRegistry, terms: Vec<PenaltyTerm>) -> Self {
        let mut model = Self { coefficients: BTreeMap::new(), offset: 0.0, registry, terms: Vec::new() };
        for term in &terms {
            model.expand(term);
        }
        model.coefficients.retain(|_, v| *v != 0.0);
        model.terms = terms;
        model
    }

    /// Model from raw `(i, j, q)` entries in any orientation; repeated pairs add up.
    pub fn from_entries(
        registry: VariableRegistry,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
        offset: f64,
    ) -> Self {
        let mut model = Self { coefficients: BTreeMap::new(), offset, registry, terms: Vec::new() };
        for (i, j, q) in entries {
            model.add(i, j, q);
        }
        model.coefficients.retain(|_, v| *v != 0.0);
        model
    }

    fn add(&mut self, i: usize, j: usize, q: f64) {
        let key = if i <= j { (i, j) } else { (j, i) };
        *self.coefficients.entry(key).or_insert(0.0) += q;
    }

    fn expand(&mut self, term: &PenaltyTerm) {
        let w = term.weight;
        match &term.form {
            PenaltyForm::Linear(e) => {
                for (v, a) in e.merged() {
                    self.add(v, v, w * a);
                }
                self.offset += w * e.constant;
            }
            PenaltyForm::Square(e) => {
                let t = e.merged();
                let c = e.constant;
                for (k, &(vk, ak)) in t.iter().enumerate() {
                    // z^2 = z folds the square and the cross term with the constant onto the diagonal.
                    self.add(vk, vk, w * (ak * ak + 2.0 * c * ak));
                    for &(vl, al) in &t[k + 1..] {
                        self.add(vk, vl, w * 2.0 * ak * al);
                    }
                }
                self.offset += w * c * c;
            }
            PenaltyForm::Quadratic { linear, pairs } => {
                for &(v, a) in linear {
                    self.add(v, v, w * a);
                }
                for &(a, b, q) in pairs {
                    self.add(a, b, w * q);
                }
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.registry.total_vars()
    }

    pub fn num_terms(&self) -> usize {
        self.coefficients.len()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn registry(&self) -> &VariableRegistry {
        &self.registry
    }

    /// The unexpanded terms the model was built from (empty for raw models).
    pub fn terms(&self) -> &[PenaltyTerm] {
        &self.terms
    }

    /// Stored `((i, j), q)` entries in row-major order, `i <= j`.
    pub fn coefficients(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.coefficients.iter().map(|(&k, &v)| (k, v))
    }

    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.coefficients.get(&key).copied().unwrap_or(0.0)
    }

    /// `z^T Q z + offset`.
    pub fn energy(&self, bits: &[bool]) -> Result<f64> {
        if bits.len() != self.num_vars() {
            return Err(Error::LengthMismatch { expected: self.num_vars(), got: bits.len() });
        }
        let quad: f64 = self
            .coefficients
            .iter()
            .filter(|((i, j), _)| bits[*i] && bits[*j])
            .map(|(_, q)| q)
            .sum();
        Ok(quad + self.offset)
    }

    /// Per-family values from the unexpanded terms.
    pub fn breakdown(&self, bits: &[bool]) -> BTreeMap<Family, f64> {
        let mut out = BTreeMap::new();
        for t in &self.terms {
            *out.entry(t.family).or_insert(0.0) += t.value(bits);
        }
        out
    }

    /// Overwrite every slack group with the setting that minimises its own
    /// penalty for the current position bits.
    pub fn complete_slacks(&self, bits: &mut [bool]) {
        for term in &self.terms {
            let (Some((gi, sign)), PenaltyForm::Square(expr)) = (term.slack, &term.form) else {
                continue;
            };
            let group = &self.registry.slack_groups[gi];
            let slack_vars: std::collections::HashSet<usize> = group.var_indices.iter().copied().collect();
            let rest: f64 = expr.constant
                + expr
                    .terms
                    .iter()
                    .filter(|(v, _)| !slack_vars.contains(v) && bits[*v])
                    .map(|(_, a)| a)
                    .sum::<f64>();
            let g = group.granularity;
            let want = (-rest / sign / g).round() * g;
            group.encode(want.clamp(0.0, group.bound), bits);
        }
    }

    /// Write the sparse text format: a `p qubo <vars> <terms> <offset>` header
    /// followed by `i j q` lines, 0-based, `i <= j`, row-major.
    pub fn write_qubo<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "p qubo {} {} {}", self.num_vars(), self.num_terms(), self.offset)?;
        for (&(i, j), q) in &self.coefficients {
            writeln!(out, "{i} {j} {q}")?;
        }
        Ok(())
    }

    /// Variable map sidecar: one CSV row per flat index.
    pub fn write_variable_map<W: Write>(&self, instance: &ProblemInstance, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "kind", "container", "position", "constraint", "coefficient"])
            .map_err(|e| Error::Parse(e.to_string()))?;
        let reg = &self.registry;
        for idx in 0..reg.total_vars() {
            let row = match reg.kind(idx).expect("index in range") {
                VariableKind::Position { container, position } => [
                    idx.to_string(),
                    "position".into(),
                    instance.containers()[container].id.to_string(),
                    position.to_string(),
                    String::new(),
                    String::new(),
                ],
                VariableKind::Slack { group, bit } => {
                    let g = &reg.slack_groups[group];
                    [
                        idx.to_string(),
                        "slack".into(),
                        String::new(),
                        String::new(),
                        g.tag.to_string(),
                        g.coefficients[bit].to_string(),
                    ]
                }
            };
            w.write_record(&row).map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parsed form of the sparse text format.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboFile {
    pub num_vars: usize,
    pub offset: f64,
    pub entries: Vec<(usize, usize, f64)>,
}

impl QuboFile {
    pub fn energy(&self, bits: &[bool]) -> f64 {
        self.offset
            + self
                .entries
                .iter()
                .filter(|(i, j, _)| bits[*i] && bits[*j])
                .map(|(_, _, q)| q)
                .sum::<f64>()
    }
}

pub fn read_qubo<R: BufRead>(input: R) -> Result<QuboFile> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty qubo file".into()))??;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 || h[0] != "p" || h[1] != "qubo" {
        return Err(Error::Parse(format!("line 1: bad header '{header}'")));
    }
    let num = |s: &str, line: usize| -> Result<f64> {
        s.parse::<f64>().map_err(|_| Error::Parse(format!("line {line}: bad number '{s}'")))
    };
    let num_vars = num(h[2], 1)? as usize;
    let num_terms = num(h[3], 1)? as usize;
    let offset = num(h[4], 1)?;
    let mut entries = Vec::with_capacity(num_terms);
    for (k, line) in lines.enumerate() {
        let line = line?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        if f.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected 'i j q'", k + 2)));
        }
        let i = num(f[0], k + 2)? as usize;
        let j = num(f[1], k + 2)? as usize;
        if i > j || j >= num_vars {
            return Err(Error::Parse(format!("line {}: bad index pair ({i}, {j})", k + 2)));
        }
        entries.push((i, j, num(f[2], k + 2)?));
    }
    if entries.len() != num_terms {
        return Err(Error::Parse(format!("header declares {num_terms} terms, found {}", entries.len())));
    }
    Ok(QuboFile { num_vars, offset, entries })
}

/// Assemble the full model with default options.
pub fn assemble(instance: &ProblemInstance, weights: &PenaltyWeights) -> Result<QuadraticModel> {
    assemble_with(instance, weights, &AssemblyOptions::default())
}

pub fn assemble_with(
    instance: &ProblemInstance,
    weights: &PenaltyWeights,
    options: &AssemblyOptions,
) -> Result<QuadraticModel> {
    weights.validate()?;
    let (registry, terms) = build_terms(instance, weights, options)?;
    Ok(QuadraticModel::from_terms(registry, terms))
}

/// Calibrate weights by sampling uniform random bit vectors.
///
/// Each active family's weight is the mean absolute objective divided by the
/// family's mean unit-weight penalty; families that are inactive or never
/// positive on the samples get the mean absolute objective instead. The
/// structural relations are applied last.
pub fn calibrate_weights(instance: &ProblemInstance, samples: usize, seed: u64) -> Result<PenaltyWeights> {
    if samples == 0 {
        return Err(Error::InvalidParams("calibration needs at least one sample".into()));
    }
    let (registry, terms) = build_terms(instance, &PenaltyWeights::unit_probe(1.0), &AssemblyOptions::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = vec![false; registry.total_vars()];
    let mut obj_sum = 0.0;
    let mut fam_sum: BTreeMap<Family, f64> = BTreeMap::new();
    for _ in 0..samples {
        for b in bits.iter_mut() {
            *b = rng.random::<bool>();
        }
        for t in &terms {
            let v = t.raw_value(&bits);
            if t.family == Family::Objective {
                obj_sum += v.abs();
            } else {
                *fam_sum.entry(t.family).or_insert(0.0) += v;
            }
        }
    }
    let mean_obj = obj_sum / samples as f64;
    let fallback = if mean_obj > 0.0 { mean_obj } else { 1.0 };
    let mut w = PenaltyWeights::uniform(fallback);
    for f in Family::PENALTIES {
        let mean = fam_sum.get(&f).copied().unwrap_or(0.0) / samples as f64;
        let value = if mean > 0.0 && mean_obj > 0.0 { mean_obj / mean } else { fallback };
        w.set(f, value);
    }
    w.enforce_relations();
    Ok(w)
}
