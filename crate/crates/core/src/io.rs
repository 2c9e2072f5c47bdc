//! Instance documents (TOML) and container tables (CSV).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AircraftParams, ConstraintSet, ContainerSpec, ProblemInstance, ShearLimitTable, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParametersDoc {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "W_max")]
    w_max: f64,
    #[serde(rename = "W_e")]
    w_e: f64,
    #[serde(default)]
    x_cg_e: f64,
    #[serde(rename = "S_max_0")]
    s_max_0: f64,
    x_cg_min: f64,
    x_cg_max: f64,
    x_cg_target: f64,
    #[serde(default = "one")]
    mass_step: f64,
    #[serde(default = "default_tolerance")]
    tolerance: f64,
}

fn one() -> f64 {
    1.0
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintsDoc {
    #[serde(default)]
    pl: bool,
    #[serde(default)]
    cl: bool,
    #[serde(default)]
    sl: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShearPointDoc {
    x: f64,
    s_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    /// CSV container table, relative to the document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    containers_csv: Option<String>,
    parameters: ParametersDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constraints: Option<ConstraintsDoc>,
    #[serde(default)]
    containers: Vec<ContainerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shear_limit_table: Option<Vec<ShearPointDoc>>,
}

fn toml_error(e: toml::de::Error, text: &str) -> Error {
    let msg = e.message().replace('\n', " ");
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            Error::Parse(format!("line {line}: {msg}"))
        }
        None => Error::Parse(msg),
    }
}

/// Parse an instance document. `base_dir` resolves `containers_csv`.
pub fn parse_instance(text: &str, default_name: &str, base_dir: Option<&Path>) -> Result<ProblemInstance> {
    let doc: InstanceDoc = toml::from_str(text).map_err(|e| toml_error(e, text))?;
    let p = doc.parameters;
    let params = AircraftParams {
        num_positions: p.n,
        length: p.l,
        max_payload: p.w_max,
        empty_mass: p.w_e,
        empty_cog: p.x_cg_e,
        shear_max_0: p.s_max_0,
        cog_min: p.x_cg_min,
        cog_max: p.x_cg_max,
        cog_target: p.x_cg_target,
        mass_step: p.mass_step,
        tolerance: p.tolerance,
    };
    let constraints = doc
        .constraints
        .map(|c| ConstraintSet { pl: c.pl, cl: c.cl, sl: c.sl })
        .unwrap_or(ConstraintSet::PL);
    let mut containers = doc.containers;
    if let Some(csv_path) = doc.containers_csv {
        let path = match base_dir {
            Some(dir) => dir.join(&csv_path),
            None => csv_path.clone().into(),
        };
        let file = std::fs::File::open(&path)
            .map_err(|e| Error::field("containers_csv", format!("{}: {e}", path.display())))?;
        containers.extend(read_containers_csv(file)?);
    }
    let table = match doc.shear_limit_table {
        Some(points) => Some(
            ShearLimitTable::new(points.into_iter().map(|pt| (pt.x, pt.s_max)).collect())
                .map_err(|e| Error::field("shear_limit_table", e.to_string()))?,
        ),
        None => None,
    };
    ProblemInstance::new(doc.name.unwrap_or_else(|| default_name.to_string()), containers, params, constraints, table)
}

/// Read an instance document from disk; the default name is the file stem.
pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
    parse_instance(&text, stem, path.parent())
}

/// Serialize an instance as a self-contained document.
pub fn emit_instance(instance: &ProblemInstance) -> String {
    let p = instance.params();
    let cs = instance.constraints();
    let doc = InstanceDoc {
        name: Some(instance.name().to_string()),
        containers_csv: None,
        parameters: ParametersDoc {
            n: p.num_positions,
            l: p.length,
            w_max: p.max_payload,
            w_e: p.empty_mass,
            x_cg_e: p.empty_cog,
            s_max_0: p.shear_max_0,
            x_cg_min: p.cog_min,
            x_cg_max: p.cog_max,
            x_cg_target: p.cog_target,
            mass_step: p.mass_step,
            tolerance: p.tolerance,
        },
        constraints: Some(ConstraintsDoc { pl: cs.pl, cl: cs.cl, sl: cs.sl }),
        containers: instance.containers().to_vec(),
        shear_limit_table: instance
            .shear_table()
            .map(|t| t.points().iter().map(|&(x, s_max)| ShearPointDoc { x, s_max }).collect()),
    };
    toml::to_string(&doc).expect("instance serializes")
}

/// Container table with `id,type,mass` columns.
pub fn read_containers_csv<R: std::io::Read>(input: R) -> Result<Vec<ContainerSpec>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (k, row) in reader.deserialize::<ContainerSpec>().enumerate() {
        let spec = row.map_err(|e| Error::Parse(format!("containers csv row {}: {e}", k + 1)))?;
        out.push(spec);
    }
    Ok(out)
}

pub fn write_containers_csv<W: std::io::Write>(containers: &[ContainerSpec], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in containers {
        w.serialize(c).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ContainerType;

    const DOC: &str = r#"
name = "tiny"

[parameters]
N = 4
L = 40
W_max = 8000
W_e = 120000
S_max_0 = 26000
x_cg_min = -4
x_cg_max = 8
x_cg_target = 4

[constraints]
pl = true

[[containers]]
id = 1
type = 1
mass = 2134

[[containers]]
id = 2
type = 3
mass = 3132.5
"#;

    #[test]
    fn parses_document() {
        let inst = parse_instance(DOC, "x", None).unwrap();
        assert_eq!(inst.name(), "tiny");
        assert_eq!(inst.num_positions(), 4);
        assert_eq!(inst.containers()[1].ctype, ContainerType::T3);
        assert_eq!(inst.containers()[1].mass, 3132.5);
        assert_eq!(inst.params().empty_cog, 0.0);
        assert_eq!(inst.constraints(), ConstraintSet::PL);
    }

    #[test]
    fn round_trip() {
        let inst = parse_instance(DOC, "x", None).unwrap();
        let again = parse_instance(&emit_instance(&inst), "y", None).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn errors_are_addressed() {
        let bad_type = DOC.replace("type = 3", "type = 4");
        let e = parse_instance(&bad_type, "x", None).unwrap_err().to_string();
        assert!(e.contains("line"), "{e}");
        let bad_mass = DOC.replace("mass = 2134", "mass = -1");
        let e = parse_instance(&bad_mass, "x", None).unwrap_err().to_string();
        assert!(e.contains("containers[0].mass"), "{e}");
        let missing = DOC.replace("W_e = 120000\n", "");
        assert!(parse_instance(&missing, "x", None).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let cs = vec![ContainerSpec::new(1, ContainerType::T2, 986.0), ContainerSpec::new(2, ContainerType::T3, 3132.0)];
        let mut buf = Vec::new();
        write_containers_csv(&cs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "id,type,mass\n1,2,986.0\n2,3,3132.0\n");
        assert_eq!(read_containers_csv(&buf[..]).unwrap(), cs);
        assert!(read_containers_csv(&b"id,type,mass\n1,7,3\n"[..]).is_err());
    }
}
