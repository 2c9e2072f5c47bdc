//! Repeated seeded solver runs and their aggregation.

use serde::{Deserialize, Serialize};

use crate::analysis::{decode, shear_profile, validate, LoadingPlan, ShearCheck, ValidationReport};
use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::qubo::{assemble_with, AssemblyOptions, PenaltyWeights};
use crate::solvers::{tabu_solve, SolverParams};

/// Settings for [`run_benchmark`].
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub runs: usize,
    pub base_seed: u64,
    /// Solver settings; the seed is replaced per trial. Defaults by model size.
    pub solver: Option<SolverParams>,
    pub exact_optimum: Option<f64>,
    pub assembly: AssemblyOptions,
    /// Uniform bins across the hold before the bound markers are inserted.
    pub cog_bins: usize,
}

impl BenchConfig {
    pub fn new(runs: usize, base_seed: u64) -> Self {
        Self {
            runs,
            base_seed,
            solver: None,
            exact_optimum: None,
            assembly: AssemblyOptions::default(),
            cog_bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub constraints: String,
    #[serde(default)]
    pub wall_time: f64,
    pub energy: f64,
    pub report: ValidationReport,
    pub loaded_weight: f64,
    pub cog: f64,
    pub shear_violations: usize,
    /// Valid for every active family.
    pub feasible: bool,
    pub plan: LoadingPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Bins over `[lo, hi]` with `markers` added as extra edges; values
    /// outside the range land in the end bins.
    pub fn with_markers(lo: f64, hi: f64, bins: usize, markers: &[f64], values: impl IntoIterator<Item = f64>) -> Self {
        let bins = bins.max(1);
        let mut edges: Vec<f64> = (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect();
        edges.extend(markers.iter().copied().filter(|m| *m > lo && *m < hi));
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (hi - lo).abs().max(1.0));
        let mut counts = vec![0; edges.len() - 1];
        for v in values {
            let k = edges[1..edges.len() - 1].partition_point(|e| *e <= v);
            counts[k] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub instance: String,
    pub constraints: String,
    pub runs: usize,
    pub pct_pl_valid: f64,
    pub pct_cl_valid: f64,
    pub pct_sl_valid: f64,
    pub pct_feasible: f64,
    #[serde(default)]
    pub mean_time: f64,
    /// Over feasible runs; `None` when no run is feasible.
    pub max_weight: Option<f64>,
    pub mean_weight: Option<f64>,
    pub exact_optimum: Option<f64>,
    pub pct_optimal: Option<f64>,
    /// Mean distance of the CoG from its target over all runs.
    pub mean_cog_deviation: f64,
    pub cog_histogram: Histogram,
    /// Runs with 0, 1, 2 and at least 3 violated shear stations.
    pub shear_error_histogram: [usize; 4],
}

/// Plot-ready series for the best run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRun {
    pub trial: usize,
    pub shear_curve: Vec<ShearCheck>,
    pub occupancy: Vec<Vec<u32>>,
}

/// Everything one benchmark produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub summary: BenchmarkSummary,
    pub records: Vec<TrialRecord>,
    pub best: BestRun,
}

fn pct(count: usize, runs: usize) -> f64 {
    100.0 * count as f64 / runs as f64
}

/// Fold trial records into a summary.
pub fn summarize(
    instance: &ProblemInstance,
    records: &[TrialRecord],
    exact_optimum: Option<f64>,
    cog_bins: usize,
) -> BenchmarkSummary {
    let runs = records.len().max(1);
    let p = instance.params();
    let count = |f: &dyn Fn(&TrialRecord) -> bool| records.iter().filter(|r| f(r)).count();
    let feasible: Vec<f64> = records.iter().filter(|r| r.feasible).map(|r| r.loaded_weight).collect();
    let max_weight = feasible.iter().copied().reduce(f64::max);
    let mean_weight = (!feasible.is_empty()).then(|| feasible.iter().sum::<f64>() / feasible.len() as f64);
    let pct_optimal = exact_optimum.map(|opt| {
        let tol = instance.tol(opt).max(1e-6);
        pct(count(&|r| r.feasible && (r.loaded_weight - opt).abs() <= tol), runs)
    });
    let mut shear = [0; 4];
    for r in records {
        shear[r.shear_violations.min(3)] += 1;
    }
    let half = p.length / 2.0;
    BenchmarkSummary {
        instance: instance.name().to_string(),
        constraints: instance.constraints().label(),
        runs: records.len(),
        pct_pl_valid: pct(count(&|r| r.report.pl_valid), runs),
        pct_cl_valid: pct(count(&|r| r.report.cl_valid), runs),
        pct_sl_valid: pct(count(&|r| r.report.sl_valid), runs),
        pct_feasible: pct(feasible.len(), runs),
        mean_time: records.iter().map(|r| r.wall_time).sum::<f64>() / runs as f64,
        max_weight,
        mean_weight,
        exact_optimum,
        pct_optimal,
        mean_cog_deviation: records.iter().map(|r| (r.cog - p.cog_target).abs()).sum::<f64>() / runs as f64,
        cog_histogram: Histogram::with_markers(
            -half,
            half,
            cog_bins,
            &[p.cog_min, p.cog_target, p.cog_max],
            records.iter().map(|r| r.cog),
        ),
        shear_error_histogram: shear,
    }
}

/// Run `config.runs` seeded solves (seed `base_seed + i`) and aggregate them.
pub fn run_benchmark(
    instance: &ProblemInstance,
    weights: &PenaltyWeights,
    config: &BenchConfig,
) -> Result<BenchmarkReport> {
    if config.runs == 0 {
        return Err(Error::InvalidParams("runs must be at least 1".into()));
    }
    let model = assemble_with(instance, weights, &config.assembly)?;
    let template = config.solver.clone().unwrap_or_else(|| SolverParams::for_model(&model, config.base_seed));
    let mut records = Vec::with_capacity(config.runs);
    for trial in 0..config.runs {
        let seed = config.base_seed.wrapping_add(trial as u64);
        let params = SolverParams { seed, ..template.clone() };
        let sol = tabu_solve(&model, &params)?;
        let plan = decode(&sol.bits, model.registry(), instance)?;
        let report = validate(&plan, instance)?;
        records.push(TrialRecord {
            trial,
            seed,
            constraints: instance.constraints().label(),
            wall_time: sol.wall_time,
            energy: sol.energy,
            loaded_weight: report.loaded_weight,
            cog: report.cog,
            shear_violations: report.shear_violations,
            feasible: report.feasible_for(instance),
            report,
            plan,
        });
    }
    let summary = summarize(instance, &records, config.exact_optimum, config.cog_bins);
    let best = best_record(&records);
    let best = BestRun {
        trial: best.trial,
        shear_curve: shear_profile(&best.plan, instance),
        occupancy: best.plan.occupancy.clone(),
    };
    Ok(BenchmarkReport { summary, records, best })
}

/// Heaviest feasible run, else the lowest-energy run; ties to the earliest.
pub fn best_record(records: &[TrialRecord]) -> &TrialRecord {
    let key = |r: &TrialRecord| (r.feasible, if r.feasible { r.loaded_weight } else { -r.energy });
    records
        .iter()
        .reduce(|a, b| {
            let (ka, kb) = (key(a), key(b));
            if kb.0 > ka.0 || (kb.0 == ka.0 && kb.1 > ka.1) {
                b
            } else {
                a
            }
        })
        .expect("at least one record")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// One summary row in CSV, columns as in a results table.
    Tabular,
    /// JSON with summary, records and plot series.
    Structured,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Tabular => "csv",
            ReportFormat::Structured => "json",
        }
    }
}

/// `<instance>_<constraints>_<runs>`
pub fn report_stem(summary: &BenchmarkSummary) -> String {
    format!("{}_{}_{}", summary.instance, summary.constraints, summary.runs)
}

/// Render a report. Timing is left out unless `include_timing`, so that
/// reports for a fixed seed are byte-identical across invocations.
pub fn emit_report(report: &BenchmarkReport, format: ReportFormat, include_timing: bool) -> String {
    match format {
        ReportFormat::Structured => {
            let mut value = serde_json::to_value(report).expect("report serializes");
            if !include_timing {
                value["summary"].as_object_mut().expect("object").remove("mean_time");
                for r in value["records"].as_array_mut().expect("array") {
                    r.as_object_mut().expect("object").remove("wall_time");
                }
            }
            let mut s = serde_json::to_string_pretty(&value).expect("json");
            s.push('\n');
            s
        }
        ReportFormat::Tabular => {
            let s = &report.summary;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["instance", "constraints", "runs", "pl_valid_pct", "cl_valid_pct", "sl_valid_pct", "feasible_pct"];
            if include_timing {
                header.push("mean_time_s");
            }
            header.extend([
                "max_weight",
                "mean_weight",
                "optimal_pct",
                "shear_err_0_pct",
                "shear_err_1_pct",
                "shear_err_2_pct",
                "shear_err_3plus_pct",
                "mean_cog_deviation",
            ]);
            w.write_record(&header).expect("csv");
            let mut row = vec![
                s.instance.clone(),
                s.constraints.clone(),
                s.runs.to_string(),
                s.pct_pl_valid.to_string(),
                s.pct_cl_valid.to_string(),
                s.pct_sl_valid.to_string(),
                s.pct_feasible.to_string(),
            ];
            if include_timing {
                row.push(s.mean_time.to_string());
            }
            row.extend([opt(s.max_weight), opt(s.mean_weight), opt(s.pct_optimal)]);
            row.extend(s.shear_error_histogram.iter().map(|&c| pct(c, s.runs.max(1)).to_string()));
            row.push(s.mean_cog_deviation.to_string());
            w.write_record(&row).expect("csv");
            String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
        }
    }
}

/// Per-trial solver times as CSV.
pub fn emit_timing(report: &BenchmarkReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial", "seed", "wall_time_s"]).expect("csv");
    for r in &report.records {
        w.write_record([r.trial.to_string(), r.seed.to_string(), r.wall_time.to_string()]).expect("csv");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// Parse a structured report; missing timing fields read as zero.
pub fn parse_report(text: &str) -> Result<BenchmarkReport> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_markers_and_counts() {
        let h = Histogram::with_markers(-20.0, 20.0, 4, &[-4.0, 4.0, 8.0, 10.0], [-19.0, -4.0, 0.0, 5.0, 25.0]);
        assert_eq!(h.edges, vec![-20.0, -10.0, -4.0, 0.0, 4.0, 8.0, 10.0, 20.0]);
        assert_eq!(h.counts.iter().sum::<usize>(), 5);
        assert_eq!(h.counts, vec![1, 0, 1, 1, 1, 0, 1]);
    }
}
