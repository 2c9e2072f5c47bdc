//! Instance types and the closed-form geometry of the cargo hold.
//!
//! Positions are numbered `1..=N` from the nose. Coordinates are signed metres
//! along the fuselage with the origin at the middle of the payload area.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for mass and coordinate comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Container size class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContainerType {
    /// Medium: one full position.
    T1,
    /// Small: half a position.
    T2,
    /// Large: two adjacent positions.
    T3,
}

impl ContainerType {
    /// Objective coefficient: the share of the mass credited per occupied cell.
    pub fn t(self) -> f64 {
        match self {
            ContainerType::T1 | ContainerType::T2 => 1.0,
            ContainerType::T3 => 0.5,
        }
    }

    /// Occupancy coefficient: the share of a position the container uses.
    pub fn d(self) -> f64 {
        match self {
            ContainerType::T1 | ContainerType::T3 => 1.0,
            ContainerType::T2 => 0.5,
        }
    }

    /// Number of cells a loaded container of this class occupies.
    pub fn cells(self) -> usize {
        match self {
            ContainerType::T3 => 2,
            _ => 1,
        }
    }

    /// Numeric code used in instance files and container tables (1, 2, 3).
    pub fn code(self) -> u8 {
        match self {
            ContainerType::T1 => 1,
            ContainerType::T2 => 2,
            ContainerType::T3 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(ContainerType::T1),
            2 => Some(ContainerType::T2),
            3 => Some(ContainerType::T3),
            _ => None,
        }
    }
}

impl Serialize for ContainerType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for ContainerType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        ContainerType::from_code(code)
            .ok_or_else(|| serde::de::Error::custom(format!("container type must be 1, 2 or 3, got {code}")))
    }
}

/// `(t, d)` for a container class.
pub fn coefficients(ctype: ContainerType) -> (f64, f64) {
    (ctype.t(), ctype.d())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerSpec {
    pub id: u32,
    #[serde(rename = "type")]
    pub ctype: ContainerType,
    /// Kilograms.
    pub mass: f64,
}

impl ContainerSpec {
    pub fn new(id: u32, ctype: ContainerType, mass: f64) -> Self {
        Self { id, ctype, mass }
    }

    /// `t_i * m_i`, the mass credited for each occupied cell.
    pub fn cell_mass(&self) -> f64 {
        self.ctype.t() * self.mass
    }
}

/// Which constraint families are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub pl: bool,
    pub cl: bool,
    pub sl: bool,
}

impl ConstraintSet {
    pub const NONE: ConstraintSet = ConstraintSet { pl: false, cl: false, sl: false };
    pub const PL: ConstraintSet = ConstraintSet { pl: true, cl: false, sl: false };
    pub const PL_CL: ConstraintSet = ConstraintSet { pl: true, cl: true, sl: false };
    pub const PL_CL_SL: ConstraintSet = ConstraintSet { pl: true, cl: true, sl: true };

    pub fn validate(&self) -> Result<()> {
        if (self.cl || self.sl) && !self.pl {
            return Err(Error::field(
                "constraints",
                "cl and sl require pl to be active",
            ));
        }
        Ok(())
    }

    /// Short label such as `pl+cl`; `none` when nothing is active.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.pl {
            parts.push("pl");
        }
        if self.cl {
            parts.push("cl");
        }
        if self.sl {
            parts.push("sl");
        }
        if parts.is_empty() {
            "none".to_string()
        } else {
            parts.join("+")
        }
    }
}

impl std::str::FromStr for ConstraintSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(ConstraintSet::NONE),
            "pl" => Ok(ConstraintSet::PL),
            "pl+cl" => Ok(ConstraintSet::PL_CL),
            "pl+cl+sl" => Ok(ConstraintSet::PL_CL_SL),
            "pl+sl" => Ok(ConstraintSet { pl: true, cl: false, sl: true }),
            other => Err(Error::Parse(format!(
                "unknown constraint set '{other}' (expected pl, pl+cl, pl+cl+sl, pl+sl or none)"
            ))),
        }
    }
}

impl std::fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

/// Aircraft geometry and mass parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftParams {
    /// Number of positions N.
    pub num_positions: usize,
    /// Length of the payload area L, metres.
    pub length: f64,
    /// Maximum payload W_p, kilograms.
    pub max_payload: f64,
    /// Empty aircraft mass W_e, kilograms.
    pub empty_mass: f64,
    /// Empty aircraft centre of gravity, metres.
    pub empty_cog: f64,
    /// Shear limit at the origin.
    pub shear_max_0: f64,
    pub cog_min: f64,
    pub cog_max: f64,
    pub cog_target: f64,
    /// Smallest mass increment representable by capacity and shear slacks.
    pub mass_step: f64,
    /// Relative tolerance for feasibility comparisons.
    pub tolerance: f64,
}

impl AircraftParams {
    /// The 20-position reference aircraft with bounds derived from `L = 40`.
    pub fn reference() -> Self {
        let length = 40.0;
        Self {
            num_positions: 20,
            length,
            max_payload: 40000.0,
            empty_mass: 120000.0,
            empty_cog: 0.0,
            shear_max_0: 26000.0,
            cog_min: -0.1 * length,
            cog_max: 0.2 * length,
            cog_target: 0.1 * length,
            mass_step: 1.0,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Tabulated shear limit curve, linearly interpolated between points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearLimitTable {
    points: Vec<(f64, f64)>,
}

impl ShearLimitTable {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::field("shear_limit_table", "needs at least two points"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::field("shear_limit_table", format!("duplicate x = {}", w[0].0)));
            }
        }
        if let Some(p) = points.iter().find(|p| !(p.1 >= 0.0) || !p.0.is_finite()) {
            return Err(Error::field(
                "shear_limit_table",
                format!("invalid point ({}, {})", p.0, p.1),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn covers(&self, x: f64) -> bool {
        x >= self.points[0].0 && x <= self.points[self.points.len() - 1].0
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        if !self.covers(x) {
            return None;
        }
        let k = self.points.partition_point(|p| p.0 < x);
        if k == 0 {
            return Some(self.points[0].1);
        }
        let (x0, y0) = self.points[k - 1];
        let (x1, y1) = self.points[k];
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

/// Centre coordinate of position `j` (1-based): `(L/N)(j - N/2) - L/(2N)`.
pub fn cog_coordinate(j: usize, length: f64, num_positions: usize) -> Result<f64> {
    if j == 0 || j > num_positions {
        return Err(Error::IndexOutOfRange { index: j, max: num_positions });
    }
    let n = num_positions as f64;
    Ok(length / n * (j as f64 - n / 2.0) - length / (2.0 * n))
}

/// Boundary coordinate after position `u`: `(L/N)(u - N/2)`.
pub fn shear_coordinate(u: usize, length: f64, num_positions: usize) -> Result<f64> {
    if u == 0 || u > num_positions {
        return Err(Error::IndexOutOfRange { index: u, max: num_positions });
    }
    Ok(boundary(u, length, num_positions))
}

// Unchecked boundary coordinate; u = 0 is the nose.
fn boundary(u: usize, length: f64, num_positions: usize) -> f64 {
    let n = num_positions as f64;
    length / n * (u as f64 - n / 2.0)
}

/// Symmetric linear shear limit: `S0` at the origin falling to zero at `±L/2`.
pub fn shear_limit(x: f64, shear_max_0: f64, length: f64) -> Result<f64> {
    let half = length / 2.0;
    if x.abs() > half * (1.0 + DEFAULT_TOLERANCE) {
        return Err(Error::CoordinateOutOfRange { x, half });
    }
    let s = if x < 0.0 {
        shear_max_0 * (length + 2.0 * x) / length
    } else {
        shear_max_0 * (length - 2.0 * x) / length
    };
    Ok(s.max(0.0))
}

/// Side of the hold a shear station sums from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShearSide {
    Left,
    Right,
    /// Odd N only: left sum up to the middle cell plus half of it, at x = 0.
    MidLeft,
    /// Odd N only: half the middle cell plus the right sum, at x = 0.
    MidRight,
}

/// One shear check: which cells contribute, with what factor, against which limit.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearStation {
    /// Station index `u`; for the odd-N origin checks this is the middle cell.
    pub station: usize,
    pub side: ShearSide,
    pub x: f64,
    pub limit: f64,
    /// `(position, factor)` pairs, positions 1-based.
    pub cells: Vec<(usize, f64)>,
}

/// A fully specified loading scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    name: String,
    containers: Vec<ContainerSpec>,
    params: AircraftParams,
    constraints: ConstraintSet,
    shear_table: Option<ShearLimitTable>,
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        containers: Vec<ContainerSpec>,
        params: AircraftParams,
        constraints: ConstraintSet,
        shear_table: Option<ShearLimitTable>,
    ) -> Result<Self> {
        let inst = Self {
            name: name.into(),
            containers,
            params,
            constraints,
            shear_table,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        let p = &self.params;
        if p.num_positions == 0 {
            return Err(Error::field("parameters.N", "must be at least 1"));
        }
        let positive = [
            ("parameters.L", p.length),
            ("parameters.W_max", p.max_payload),
            ("parameters.W_e", p.empty_mass),
            ("parameters.S_max_0", p.shear_max_0),
            ("parameters.mass_step", p.mass_step),
        ];
        for (field, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::field(field, format!("must be positive, got {v}")));
            }
        }
        if !(p.tolerance >= 0.0) {
            return Err(Error::field("parameters.tolerance", "must be non-negative"));
        }
        for (field, v) in [
            ("parameters.x_cg_e", p.empty_cog),
            ("parameters.x_cg_min", p.cog_min),
            ("parameters.x_cg_max", p.cog_max),
            ("parameters.x_cg_target", p.cog_target),
        ] {
            if !v.is_finite() {
                return Err(Error::field(field, "must be finite"));
            }
        }
        if !(p.cog_min <= p.cog_target && p.cog_target <= p.cog_max) {
            return Err(Error::field(
                "parameters",
                format!(
                    "x_cg_min <= x_cg_target <= x_cg_max violated ({} / {} / {})",
                    p.cog_min, p.cog_target, p.cog_max
                ),
            ));
        }
        self.constraints.validate()?;
        let mut ids = std::collections::HashSet::new();
        for (k, c) in self.containers.iter().enumerate() {
            if !(c.mass > 0.0) || !c.mass.is_finite() {
                return Err(Error::field(
                    format!("containers[{k}].mass"),
                    format!("must be positive, got {}", c.mass),
                ));
            }
            if !ids.insert(c.id) {
                return Err(Error::field(format!("containers[{k}].id"), format!("duplicate id {}", c.id)));
            }
        }
        if let Some(table) = &self.shear_table {
            for st in self.shear_stations_unchecked() {
                if !table.covers(st.x) {
                    return Err(Error::field(
                        "shear_limit_table",
                        format!("does not cover station coordinate {}", st.x),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn containers(&self) -> &[ContainerSpec] {
        &self.containers
    }

    pub fn params(&self) -> &AircraftParams {
        &self.params
    }

    pub fn constraints(&self) -> ConstraintSet {
        self.constraints
    }

    pub fn shear_table(&self) -> Option<&ShearLimitTable> {
        self.shear_table.as_ref()
    }

    /// n
    pub fn num_containers(&self) -> usize {
        self.containers.len()
    }

    /// N
    pub fn num_positions(&self) -> usize {
        self.params.num_positions
    }

    /// Same scenario with a different active constraint set.
    pub fn with_constraints(&self, constraints: ConstraintSet) -> Result<Self> {
        constraints.validate()?;
        let mut out = self.clone();
        out.constraints = constraints;
        Ok(out)
    }

    pub fn with_name(&self, name: impl Into<String>) -> Self {
        let mut out = self.clone();
        out.name = name.into();
        out
    }

    pub fn container_index(&self, id: u32) -> Option<usize> {
        self.containers.iter().position(|c| c.id == id)
    }

    /// Coordinate of position `j` (1-based). Panics if `j` is out of range.
    pub fn position_x(&self, j: usize) -> f64 {
        cog_coordinate(j, self.params.length, self.params.num_positions)
            .expect("position index in range")
    }

    /// Shear limit at `x`, from the table when one is given.
    pub fn shear_limit_at(&self, x: f64) -> f64 {
        match &self.shear_table {
            Some(t) => t.eval(x).unwrap_or(0.0),
            None => shear_limit(x, self.params.shear_max_0, self.params.length).unwrap_or(0.0),
        }
    }

    /// Comparison slack for a quantity of magnitude `scale`.
    pub fn tol(&self, scale: f64) -> f64 {
        self.params.tolerance * scale.abs().max(1.0)
    }

    /// Every discretised shear check, in a fixed order: left stations, right
    /// stations, then the two origin checks when N is odd.
    pub fn shear_stations(&self) -> Vec<ShearStation> {
        self.shear_stations_unchecked()
    }

    fn shear_stations_unchecked(&self) -> Vec<ShearStation> {
        let n = self.params.num_positions;
        let len = self.params.length;
        let half = n / 2;
        let limit = |x: f64| match &self.shear_table {
            Some(t) => t.eval(x).unwrap_or(0.0),
            None => shear_limit(x, self.params.shear_max_0, len).unwrap_or(0.0),
        };
        let mut out = Vec::new();
        let (left_last, right_first) = if n % 2 == 0 { (half, half) } else { (half, half + 1) };
        for u in 1..=left_last {
            let x = boundary(u, len, n);
            out.push(ShearStation {
                station: u,
                side: ShearSide::Left,
                x,
                limit: limit(x),
                cells: (1..=u).map(|j| (j, 1.0)).collect(),
            });
        }
        for u in right_first.max(1)..n {
            let x = boundary(u, len, n);
            out.push(ShearStation {
                station: u,
                side: ShearSide::Right,
                x,
                limit: limit(x),
                cells: (u + 1..=n).map(|j| (j, 1.0)).collect(),
            });
        }
        if n % 2 == 1 {
            let mid = half + 1;
            let s0 = limit(0.0);
            let mut left: Vec<(usize, f64)> = (1..=half).map(|j| (j, 1.0)).collect();
            left.push((mid, 0.5));
            let mut right = vec![(mid, 0.5)];
            right.extend((mid + 1..=n).map(|j| (j, 1.0)));
            out.push(ShearStation { station: mid, side: ShearSide::MidLeft, x: 0.0, limit: s0, cells: left });
            out.push(ShearStation { station: mid, side: ShearSide::MidRight, x: 0.0, limit: s0, cells: right });
        }
        out
    }
}
