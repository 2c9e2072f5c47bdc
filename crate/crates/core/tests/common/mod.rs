//! Independent reference implementations used by the integration tests.
//!
//! Everything here is written straight from the problem definitions and
//! avoids the crate's own evaluation paths; only the variable layout (which
//! flat index holds which slack bit) is read from the registry.

#![allow(dead_code)]

use std::path::PathBuf;

use airload::model::{AircraftParams, ConstraintSet, ContainerSpec, ContainerType, ProblemInstance, ShearSide};
use airload::qubo::{
    build_contiguity, build_no_duplicates, ConstraintTag, PenaltyWeights, QuadraticModel, VariableRegistry,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn instances_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances")
}

pub fn load(name: &str) -> ProblemInstance {
    airload::io::load_instance(&instances_dir().join(name)).expect("bundled instance parses")
}

pub fn t_of(ct: ContainerType) -> f64 {
    match ct {
        ContainerType::T1 | ContainerType::T2 => 1.0,
        ContainerType::T3 => 0.5,
    }
}

pub fn d_of(ct: ContainerType) -> f64 {
    match ct {
        ContainerType::T1 | ContainerType::T3 => 1.0,
        ContainerType::T2 => 0.5,
    }
}

/// Centre of position j (1-based).
pub fn x_pos(j: usize, l: f64, n: usize) -> f64 {
    l / n as f64 * (j as f64 - n as f64 / 2.0) - l / (2.0 * n as f64)
}

/// Boundary between positions u and u + 1.
pub fn x_bound(u: usize, l: f64, n: usize) -> f64 {
    l / n as f64 * (u as f64 - n as f64 / 2.0)
}

pub fn s_max(x: f64, s0: f64, l: f64) -> f64 {
    s0 * (l - 2.0 * x.abs()) / l
}

fn floor_g(v: f64, g: f64) -> f64 {
    ((v / g) + 1e-9).floor() * g
}

fn ceil_g(v: f64, g: f64) -> f64 {
    ((v / g) - 1e-9).ceil() * g
}

/// Position bits as a container-major matrix.
pub fn p_matrix(bits: &[bool], n: usize, npos: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..npos).map(|j| if bits[i * npos + j] { 1.0 } else { 0.0 }).collect()).collect()
}

/// Per-station shear sums by nested loops, in the order left stations,
/// right stations, then (odd N) the two origin checks.
pub fn shear_oracle(instance: &ProblemInstance, p: &[Vec<f64>]) -> Vec<(ShearSide, usize, f64, f64)> {
    let prm = instance.params();
    let n = prm.num_positions;
    let (l, s0) = (prm.length, prm.shear_max_0);
    let cs = instance.containers();
    let mass_at = |j: usize| -> f64 {
        let mut s = 0.0;
        for (i, c) in cs.iter().enumerate() {
            s += t_of(c.ctype) * c.mass * p[i][j - 1];
        }
        s
    };
    let mut out = Vec::new();
    if n % 2 == 0 {
        for u in 1..=n / 2 {
            let mut v = 0.0;
            for j in 1..=u {
                v += mass_at(j);
            }
            out.push((ShearSide::Left, u, v, s_max(x_bound(u, l, n), s0, l)));
        }
        for u in n / 2..n {
            let mut v = 0.0;
            for j in u + 1..=n {
                v += mass_at(j);
            }
            out.push((ShearSide::Right, u, v, s_max(x_bound(u, l, n), s0, l)));
        }
    } else {
        let h = n / 2;
        for u in 1..=h {
            let mut v = 0.0;
            for j in 1..=u {
                v += mass_at(j);
            }
            out.push((ShearSide::Left, u, v, s_max(x_bound(u, l, n), s0, l)));
        }
        for u in h + 1..n {
            let mut v = 0.0;
            for j in u + 1..=n {
                v += mass_at(j);
            }
            out.push((ShearSide::Right, u, v, s_max(x_bound(u, l, n), s0, l)));
        }
        let mid = h + 1;
        let mut left = 0.5 * mass_at(mid);
        for j in 1..mid {
            left += mass_at(j);
        }
        let mut right = 0.5 * mass_at(mid);
        for j in mid + 1..=n {
            right += mass_at(j);
        }
        out.push((ShearSide::MidLeft, mid, left, s0));
        out.push((ShearSide::MidRight, mid, right, s0));
    }
    out
}

fn slack_sum(bits: &[bool], registry: &VariableRegistry, tag: ConstraintTag) -> (f64, f64) {
    let g = registry.slack_groups().iter().find(|g| g.tag == tag).expect("slack group for tag");
    let s = g.coefficients.iter().zip(&g.var_indices).filter(|(_, &v)| bits[v]).map(|(c, _)| c).sum();
    (s, g.granularity)
}

/// Objective plus every active penalty, evaluated term by term.
pub fn energy_oracle(instance: &ProblemInstance, w: &PenaltyWeights, registry: &VariableRegistry, bits: &[bool]) -> f64 {
    let prm = instance.params();
    let n = prm.num_positions;
    let cs = instance.containers();
    let p = p_matrix(bits, cs.len(), n);
    let tm = |i: usize| t_of(cs[i].ctype) * cs[i].mass;
    let mut e = 0.0;
    for i in 0..cs.len() {
        for j in 0..n {
            e -= tm(i) * p[i][j];
        }
    }
    let set = instance.constraints();
    if set.pl {
        for j in 1..=n {
            let (s, _) = slack_sum(bits, registry, ConstraintTag::Overlap { position: j });
            let mut r = s - 1.0;
            for i in 0..cs.len() {
                r += d_of(cs[i].ctype) * p[i][j - 1];
            }
            e += w.p_overlap * r * r;
        }
        for (i, c) in cs.iter().enumerate() {
            let (s, _) = slack_sum(bits, registry, ConstraintTag::Duplicate { container: c.id });
            let r = t_of(c.ctype) * p[i].iter().sum::<f64>() + s - 1.0;
            e += w.p_dup * r * r;
            if c.ctype == ContainerType::T3 {
                let mut f = 0.5 * p[i].iter().sum::<f64>();
                for j in 0..n - 1 {
                    f -= p[i][j] * p[i][j + 1];
                }
                e += w.p_contig * f;
            }
        }
        let (s, g) = slack_sum(bits, registry, ConstraintTag::Capacity);
        let mut r = s - floor_g(prm.max_payload, g);
        for i in 0..cs.len() {
            for j in 0..n {
                r += tm(i) * p[i][j];
            }
        }
        e += w.p_capacity * r * r;
    }
    if set.cl {
        let moment = |x_ref: f64| -> f64 {
            let mut m = 0.0;
            for i in 0..cs.len() {
                for j in 1..=n {
                    m += tm(i) * p[i][j - 1] * (x_pos(j, prm.length, n) - x_ref);
                }
            }
            m
        };
        let rt = moment(prm.cog_target) + prm.empty_mass * (prm.empty_cog - prm.cog_target);
        e += w.p_cog_target * rt * rt;
        let (s, g) = slack_sum(bits, registry, ConstraintTag::CogLower);
        let rl = moment(prm.cog_min) + floor_g(prm.empty_mass * (prm.empty_cog - prm.cog_min), g) - s;
        e += w.p_cog_lower * rl * rl;
        let (s, g) = slack_sum(bits, registry, ConstraintTag::CogUpper);
        let ru = moment(prm.cog_max) + ceil_g(prm.empty_mass * (prm.empty_cog - prm.cog_max), g) + s;
        e += w.p_cog_upper * ru * ru;
    }
    if set.sl {
        for (side, u, value, limit) in shear_oracle(instance, &p) {
            let (s, g) = slack_sum(bits, registry, ConstraintTag::Shear { side, station: u });
            let r = value + s - floor_g(limit, g);
            let weight = match side {
                ShearSide::Left | ShearSide::MidLeft => w.p_shear_left,
                ShearSide::Right | ShearSide::MidRight => w.p_shear_right,
            };
            e += weight * r * r;
        }
    }
    e
}

/// Random small instance: `n` containers of mixed types on `npos` positions.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, npos: usize, set: ConstraintSet) -> ProblemInstance {
    let containers = (0..n)
        .map(|k| {
            let ct = ContainerType::from_code(rng.random_range(1..=3)).unwrap();
            let mass = rng.random_range(400..4000) as f64 + if rng.random_bool(0.3) { 0.5 } else { 0.0 };
            ContainerSpec::new(k as u32 + 1, ct, mass)
        })
        .collect();
    let params = AircraftParams {
        num_positions: npos,
        max_payload: rng.random_range(2000..9000) as f64,
        ..AircraftParams::reference()
    };
    ProblemInstance::new("rand", containers, params, set, None).unwrap()
}

pub fn random_weights(rng: &mut ChaCha8Rng) -> PenaltyWeights {
    let mut w = PenaltyWeights {
        p_overlap: rng.random_range(0.5..50.0),
        p_dup: rng.random_range(0.5..50.0),
        p_contig: rng.random_range(0.5..50.0),
        p_capacity: rng.random_range(0.001..2.0),
        p_cog_target: rng.random_range(1e-9..1e-6),
        p_cog_lower: 0.0,
        p_cog_upper: 0.0,
        p_shear_left: rng.random_range(0.001..2.0),
        p_shear_right: rng.random_range(0.001..2.0),
    };
    w.enforce_relations();
    w
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every PL-valid shape check written out directly.
pub fn pl_valid_oracle(instance: &ProblemInstance, p: &[Vec<f64>]) -> bool {
    let cs = instance.containers();
    let n = instance.num_positions();
    for j in 0..n {
        let fill: f64 = (0..cs.len()).map(|i| d_of(cs[i].ctype) * p[i][j]).sum();
        if fill > 1.0 {
            return false;
        }
    }
    let mut load = 0.0;
    for (i, c) in cs.iter().enumerate() {
        let occupied: Vec<usize> = (0..n).filter(|&j| p[i][j] > 0.5).collect();
        let ok = match c.ctype {
            ContainerType::T1 | ContainerType::T2 => occupied.len() <= 1,
            ContainerType::T3 => occupied.is_empty() || (occupied.len() == 2 && occupied[1] == occupied[0] + 1),
        };
        if !ok {
            return false;
        }
        load += t_of(c.ctype) * c.mass * occupied.len() as f64;
    }
    load <= instance.params().max_payload
}

/// Smallest PL penalty over every slack completion. Each slack group sits
/// in exactly one term, so groups are enumerated independently.
pub fn min_pl_penalty(model: &QuadraticModel, position_bits: &[bool]) -> f64 {
    let mut bits = position_bits.to_vec();
    bits.resize(model.num_vars(), false);
    let mut total = 0.0;
    for term in model.terms().iter().filter(|t| t.family.is_payload()) {
        let Some((gi, _)) = term.slack else {
            total += term.value(&bits);
            continue;
        };
        let vars = model.registry().slack_groups()[gi].var_indices.clone();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << vars.len()) {
            for (k, &v) in vars.iter().enumerate() {
                bits[v] = mask & (1 << k) != 0;
            }
            best = best.min(term.value(&bits));
        }
        total += best;
    }
    total
}

/// Duplicate plus contiguity penalty of one T3 container on `pattern`,
/// minimised over its slack bits.
pub fn best_slack_dup_plus_contig(w: &PenaltyWeights, pattern: &[bool]) -> f64 {
    let n = pattern.len();
    let params = AircraftParams { num_positions: n, ..AircraftParams::reference() };
    let inst = ProblemInstance::new("c", vec![ContainerSpec::new(1, ContainerType::T3, 1000.0)], params, ConstraintSet::PL, None).unwrap();
    let mut reg = VariableRegistry::new(1, n);
    let dup = build_no_duplicates(&inst, 0, w, &mut reg).unwrap();
    let contig = build_contiguity(&inst, 0, w, &reg).unwrap();
    let vars = reg.slack_groups()[0].var_indices.clone();
    let mut bits = pattern.to_vec();
    bits.resize(reg.total_vars(), false);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << vars.len()) {
        for (k, &v) in vars.iter().enumerate() {
            bits[v] = mask & (1 << k) != 0;
        }
        best = best.min(dup.value(&bits) + contig.value(&bits));
    }
    best
}
