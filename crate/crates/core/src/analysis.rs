//! Decoding bit vectors into loading plans and checking them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ContainerType, ProblemInstance, ShearSide};
use crate::qubo::VariableRegistry;

/// Positions each container occupies, plus the inverse occupancy view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadingPlan {
    /// `occupancy[j - 1]` lists the ids of containers touching position `j`.
    pub occupancy: Vec<Vec<u32>>,
    /// `(id, positions)` in instance order, positions 1-based and ascending.
    pub placement: Vec<(u32, Vec<usize>)>,
}

impl LoadingPlan {
    pub fn empty(instance: &ProblemInstance) -> Self {
        Self {
            occupancy: vec![Vec::new(); instance.num_positions()],
            placement: instance.containers().iter().map(|c| (c.id, Vec::new())).collect(),
        }
    }

    /// Plan from `(id, positions)` pairs; unlisted containers stay unloaded.
    pub fn from_placements<I, P>(instance: &ProblemInstance, placements: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, P)>,
        P: IntoIterator<Item = usize>,
    {
        let n = instance.num_positions();
        let mut matrix = vec![vec![false; n]; instance.num_containers()];
        for (id, positions) in placements {
            let i = instance.container_index(id).ok_or(Error::UnknownContainer(id))?;
            for j in positions {
                if !(1..=n).contains(&j) {
                    return Err(Error::IndexOutOfRange { index: j, max: n });
                }
                matrix[i][j - 1] = true;
            }
        }
        Ok(Self::from_matrix(instance, &matrix))
    }

    /// Plan from a container-major occupancy matrix.
    pub fn from_matrix(instance: &ProblemInstance, matrix: &[Vec<bool>]) -> Self {
        let mut plan = Self::empty(instance);
        for (i, row) in matrix.iter().enumerate() {
            let id = instance.containers()[i].id;
            for (j0, &on) in row.iter().enumerate() {
                if on {
                    plan.placement[i].1.push(j0 + 1);
                    plan.occupancy[j0].push(id);
                }
            }
        }
        plan
    }

    /// Position bits `p[i][j]` flattened container-major.
    pub fn position_bits(&self) -> Vec<bool> {
        let n = self.occupancy.len();
        let mut bits = vec![false; self.placement.len() * n];
        for (i, (_, positions)) in self.placement.iter().enumerate() {
            for &j in positions {
                bits[i * n + j - 1] = true;
            }
        }
        bits
    }

    /// Full-length bit vector for `registry` with every slack bit cleared.
    pub fn to_bits(&self, registry: &VariableRegistry) -> Vec<bool> {
        let mut bits = self.position_bits();
        bits.resize(registry.total_vars(), false);
        bits
    }

    pub fn positions_of(&self, id: u32) -> Option<&[usize]> {
        self.placement.iter().find(|(c, _)| *c == id).map(|(_, p)| p.as_slice())
    }

    pub fn is_empty(&self) -> bool {
        self.placement.iter().all(|(_, p)| p.is_empty())
    }

    /// Check that every referenced container exists in `instance`.
    fn indices(&self, instance: &ProblemInstance) -> Result<Vec<usize>> {
        if self.occupancy.len() != instance.num_positions() {
            return Err(Error::InvalidPlan(format!(
                "plan has {} positions, instance has {}",
                self.occupancy.len(),
                instance.num_positions()
            )));
        }
        let mut out = Vec::with_capacity(self.placement.len());
        for (id, positions) in &self.placement {
            out.push(instance.container_index(*id).ok_or(Error::UnknownContainer(*id))?);
            if let Some(&j) = positions.iter().find(|&&j| j == 0 || j > instance.num_positions()) {
                return Err(Error::IndexOutOfRange { index: j, max: instance.num_positions() });
            }
        }
        for ids in &self.occupancy {
            if let Some(&id) = ids.iter().find(|id| instance.container_index(**id).is_none()) {
                return Err(Error::UnknownContainer(id));
            }
        }
        Ok(out)
    }
}

/// Extract the plan encoded in the position bits of `bits`.
pub fn decode(bits: &[bool], registry: &VariableRegistry, instance: &ProblemInstance) -> Result<LoadingPlan> {
    if bits.len() != registry.total_vars() {
        return Err(Error::LengthMismatch { expected: registry.total_vars(), got: bits.len() });
    }
    let n = instance.num_positions();
    let matrix: Vec<Vec<bool>> = (0..instance.num_containers())
        .map(|i| (1..=n).map(|j| bits[registry.position_var(i, j)]).collect())
        .collect();
    Ok(LoadingPlan::from_matrix(instance, &matrix))
}

/// Outcome of checking a plan against every constraint family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pl_valid: bool,
    pub cl_valid: bool,
    pub sl_valid: bool,
    pub shear_violations: usize,
    pub cog: f64,
    pub loaded_weight: f64,
    pub overlap_ok: bool,
    pub duplicates_ok: bool,
    pub contiguity_ok: bool,
    pub capacity_ok: bool,
}

impl ValidationReport {
    /// Valid for every family active in `instance`.
    pub fn feasible_for(&self, instance: &ProblemInstance) -> bool {
        let cs = instance.constraints();
        (!cs.pl || self.pl_valid) && (!cs.cl || self.cl_valid) && (!cs.sl || self.sl_valid)
    }
}

/// `sum t_i m_i p_ij` over the plan.
pub fn loaded_weight(plan: &LoadingPlan, instance: &ProblemInstance) -> f64 {
    plan.placement
        .iter()
        .filter_map(|(id, p)| instance.container_index(*id).map(|i| instance.containers()[i].cell_mass() * p.len() as f64))
        .sum()
}

/// Centre of gravity of payload plus empty aircraft, metres.
pub fn center_of_gravity(plan: &LoadingPlan, instance: &ProblemInstance) -> f64 {
    let p = instance.params();
    let mut moment = p.empty_mass * p.empty_cog;
    let mut mass = p.empty_mass;
    for (id, positions) in &plan.placement {
        let Some(i) = instance.container_index(*id) else { continue };
        let m = instance.containers()[i].cell_mass();
        for &j in positions {
            moment += m * instance.position_x(j);
            mass += m;
        }
    }
    moment / mass
}

/// One evaluated shear station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearCheck {
    pub station: usize,
    pub side: ShearSide,
    pub x: f64,
    pub value: f64,
    pub limit: f64,
    pub violated: bool,
}

/// Cumulative loaded mass at every station against its limit.
pub fn shear_profile(plan: &LoadingPlan, instance: &ProblemInstance) -> Vec<ShearCheck> {
    let mut cell_mass = vec![0.0; instance.num_positions()];
    for (id, positions) in &plan.placement {
        let Some(i) = instance.container_index(*id) else { continue };
        for &j in positions {
            cell_mass[j - 1] += instance.containers()[i].cell_mass();
        }
    }
    instance
        .shear_stations()
        .into_iter()
        .map(|st| {
            let value: f64 = st.cells.iter().map(|&(j, f)| f * cell_mass[j - 1]).sum();
            ShearCheck {
                station: st.station,
                side: st.side,
                x: st.x,
                value,
                limit: st.limit,
                violated: value > st.limit + instance.tol(st.limit),
            }
        })
        .collect()
}

/// Check a plan against payload, centre-of-gravity and shear limits.
///
/// Every field is computed regardless of which families the instance has
/// active.
pub fn validate(plan: &LoadingPlan, instance: &ProblemInstance) -> Result<ValidationReport> {
    let indices = plan.indices(instance)?;
    let params = instance.params();

    let mut fill = vec![0.0; instance.num_positions()];
    let mut duplicates_ok = true;
    let mut contiguity_ok = true;
    for (&i, (_, positions)) in indices.iter().zip(&plan.placement) {
        let c = &instance.containers()[i];
        for &j in positions {
            fill[j - 1] += c.ctype.d();
        }
        match c.ctype {
            ContainerType::T1 | ContainerType::T2 => duplicates_ok &= positions.len() <= 1,
            ContainerType::T3 => {
                let mut sorted = positions.clone();
                sorted.sort_unstable();
                match sorted.as_slice() {
                    [] => {}
                    [a, b] => contiguity_ok &= *b == *a + 1,
                    [_] => contiguity_ok = false,
                    _ => duplicates_ok = false,
                }
            }
        }
    }
    let overlap_ok = fill.iter().all(|&f| f <= 1.0 + 1e-9);
    let weight = loaded_weight(plan, instance);
    let capacity_ok = weight <= params.max_payload + instance.tol(params.max_payload);
    let cog = center_of_gravity(plan, instance);
    let cl_valid = cog >= params.cog_min - instance.tol(params.cog_min)
        && cog <= params.cog_max + instance.tol(params.cog_max);
    let shear_violations = shear_profile(plan, instance).iter().filter(|s| s.violated).count();
    Ok(ValidationReport {
        pl_valid: overlap_ok && duplicates_ok && contiguity_ok && capacity_ok,
        cl_valid,
        sl_valid: shear_violations == 0,
        shear_violations,
        cog,
        loaded_weight: weight,
        overlap_ok,
        duplicates_ok,
        contiguity_ok,
        capacity_ok,
    })
}
