//! Reference-front construction and metric reporting over persisted runs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::config::{ProblemReport, ReferenceConfig, ReportConfig};
use super::front_io::{atomic_write, read_front_csv};
use super::runner::RunRecord;
use crate::error::{Error, Result};
use crate::metrics::{
    build_reference, gamma_spread, hypervolume, performance_profile, purity, recall,
    reference_point, FrontPoint, MetricReport, ReferenceFront,
};
use crate::model::{ProblemInstance, SupportSet};
use crate::util::fmt_f64;

/// Merge persisted fronts into a reference front for one instance.
pub fn build_reference_from_csvs(cfg: &ReferenceConfig) -> Result<ReferenceFront> {
    let inst = load_instance(&cfg.instance)?;
    let mut runs = Vec::new();
    for path in &cfg.fronts {
        let points: Vec<FrontPoint> = read_front_csv(path, &inst.objectives)?
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        runs.push((path.display().to_string(), points));
    }
    build_reference(&runs)
}

/// Reference CSV: natural objective values, support, producing source.
pub fn write_reference_csv(
    path: &Path,
    reference: &ReferenceFront,
    inst: &ProblemInstance,
) -> Result<()> {
    let m = inst.objectives.len();
    let mut out = String::new();
    let mut header: Vec<String> = (0..m).map(|j| format!("f_{}", j + 1)).collect();
    header.push("support".into());
    out.push_str(&header.join(","));
    out.push('\n');
    let mut rows: Vec<(&FrontPoint, Vec<f64>)> = reference
        .points
        .iter()
        .map(|p| {
            let natural = crate::objectives::natural_values(&inst.objectives, &p.f);
            (p, natural)
        })
        .collect();
    rows.sort_by(|a, b| {
        a.0.support
            .cmp(&b.0.support)
            .then_with(|| a.1[0].total_cmp(&b.1[0]))
    });
    for (p, natural) in rows {
        let mut fields: Vec<String> = natural.iter().map(|v| fmt_f64(*v)).collect();
        fields.push(p.support.to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Read a reference CSV back (values converted to the internal convention).
pub fn read_reference_csv(path: &Path, inst: &ProblemInstance) -> Result<ReferenceFront> {
    let points: Vec<FrontPoint> = read_front_csv_relaxed(path, inst)?;
    Ok(ReferenceFront { points, sources: vec![path.display().to_string()] })
}

/// Reference CSVs have no decision-vector columns; reuse the front reader's
/// parsing with the slimmer schema.
fn read_front_csv_relaxed(path: &Path, inst: &ProblemInstance) -> Result<Vec<FrontPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .clone();
    let support_col = headers
        .iter()
        .position(|h| h == "support")
        .ok_or_else(|| Error::Data(format!("{}: missing support column", path.display())))?;
    let m = inst.objectives.len();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let mut internal = Vec::with_capacity(m);
        for (j, term) in inst.objectives.iter().enumerate() {
            let natural: f64 = record
                .get(j)
                .ok_or_else(|| Error::Data("missing objective column".into()))?
                .parse()
                .map_err(|e| Error::Data(format!("bad number: {e}")))?;
            internal.push(term.sign() * term.scale * natural);
        }
        let sup_text = record.get(support_col).unwrap_or("");
        let indices: Vec<usize> = if sup_text.is_empty() {
            Vec::new()
        } else {
            sup_text
                .split(';')
                .map(|t| t.parse::<usize>().map_err(|e| Error::Data(format!("{e}"))))
                .collect::<Result<_>>()?
        };
        out.push(FrontPoint { f: internal, support: SupportSet::new(indices) });
    }
    Ok(out)
}

fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    ProblemInstance::from_json(&text)
}

/// Per-problem data assembled for reporting: the selected front of each
/// solver plus the reference.
struct ProblemData {
    name: String,
    solver_fronts: BTreeMap<String, Vec<FrontPoint>>,
    reference: ReferenceFront,
}

fn assemble_problem(spec: &ProblemReport) -> Result<ProblemData> {
    let inst = load_instance(&spec.instance)?;
    let reference = read_reference_csv(&spec.reference, &inst)?;
    let mut records: Vec<RunRecord> = Vec::new();
    for path in &spec.runs {
        records.push(RunRecord::load(path)?);
    }
    // Pick the flagged seed per pipeline (falling back to best recorded
    // hypervolume, then first).
    let mut by_pipeline: BTreeMap<String, Vec<RunRecord>> = BTreeMap::new();
    for r in records {
        if r.instance != inst.name {
            return Err(Error::Config(format!(
                "run record for instance '{}' mixed into problem '{}'",
                r.instance, inst.name
            )));
        }
        by_pipeline.entry(r.pipeline.clone()).or_default().push(r);
    }
    let mut solver_fronts = BTreeMap::new();
    for (pipeline, runs) in by_pipeline {
        let chosen = runs
            .iter()
            .find(|r| r.selected)
            .or_else(|| {
                runs.iter().max_by(|a, b| {
                    a.hypervolume
                        .unwrap_or(f64::NEG_INFINITY)
                        .total_cmp(&b.hypervolume.unwrap_or(f64::NEG_INFINITY))
                })
            })
            .ok_or_else(|| Error::Config(format!("no runs for pipeline {pipeline}")))?;
        let points: Vec<FrontPoint> = read_front_csv(&chosen.front_csv, &inst.objectives)?
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        solver_fronts.insert(pipeline, points);
    }
    Ok(ProblemData { name: inst.name, solver_fronts, reference })
}

/// Produce metric and performance-profile CSVs for the configured problems.
/// Returns the per-(solver, problem) metric rows.
pub fn report(cfg: &ReportConfig) -> Result<Vec<MetricReport>> {
    if cfg.problems.is_empty() {
        return Err(Error::Config("report needs at least one problem".into()));
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut problems = Vec::new();
    for spec in &cfg.problems {
        problems.push(assemble_problem(spec)?);
    }
    let solver_names: BTreeSet<String> = problems
        .iter()
        .flat_map(|p| p.solver_fronts.keys().cloned())
        .collect();
    let solvers: Vec<String> = solver_names.into_iter().collect();

    let mut reports: Vec<MetricReport> = Vec::new();
    // Profile matrices: solver x problem, NaN for missing cells.
    let mut purity_matrix = vec![vec![f64::NAN; problems.len()]; solvers.len()];
    let mut hv_matrix = vec![vec![f64::NAN; problems.len()]; solvers.len()];
    let mut gamma_matrix = vec![vec![f64::NAN; problems.len()]; solvers.len()];

    for (p_idx, problem) in problems.iter().enumerate() {
        let present: Vec<&String> =
            solvers.iter().filter(|s| problem.solver_fronts.contains_key(*s)).collect();
        let fronts: Vec<Vec<Vec<f64>>> = present
            .iter()
            .map(|s| {
                problem.solver_fronts[*s]
                    .iter()
                    .map(|p| p.f.clone())
                    .collect()
            })
            .collect();
        // Purity is defined against competitors; a lone solver keeps all of
        // its points by convention.
        let purities = if fronts.len() >= 2 {
            purity(&fronts)?
        } else {
            vec![1.0; fronts.len()]
        };
        let mut all_for_ref = fronts.clone();
        all_for_ref.push(problem.reference.points.iter().map(|p| p.f.clone()).collect());
        let ref_point = reference_point(&all_for_ref)
            .ok_or_else(|| Error::Data("empty fronts for reference point".into()))?;
        let ref_supports = problem.reference.supports();
        for (k, solver) in present.iter().enumerate() {
            let front = &fronts[k];
            let hv = hypervolume(front, &ref_point);
            let gamma = gamma_spread(front);
            let supports: BTreeSet<SupportSet> = problem.solver_fronts[*solver]
                .iter()
                .map(|p| p.support.clone())
                .collect();
            let rec = recall(&supports, &ref_supports)?;
            let s_idx = solvers.iter().position(|s| s == *solver).unwrap();
            purity_matrix[s_idx][p_idx] = purities[k];
            hv_matrix[s_idx][p_idx] = hv;
            gamma_matrix[s_idx][p_idx] = gamma;
            reports.push(MetricReport {
                solver: (*solver).clone(),
                problem: problem.name.clone(),
                purity: purities[k],
                gamma_spread: gamma,
                hypervolume: hv,
                recall: rec,
            });
        }
    }

    // metrics.csv
    let mut out = String::from("solver,problem,purity,gamma,hv,recall\n");
    for r in &reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.solver,
            r.problem,
            fmt_f64(r.purity),
            fmt_f64(r.gamma_spread),
            fmt_f64(r.hypervolume),
            fmt_f64(r.recall)
        ));
    }
    atomic_write(&cfg.out_dir.join("metrics.csv"), out.as_bytes())?;

    for (name, matrix, higher) in [
        ("purity", &purity_matrix, true),
        ("hv", &hv_matrix, true),
        ("gamma", &gamma_matrix, false),
    ] {
        let curves = performance_profile(matrix, higher);
        let mut text = String::from("solver,tau,fraction\n");
        for (s_idx, curve) in curves.iter().enumerate() {
            for (tau, fraction) in curve {
                text.push_str(&format!(
                    "{},{},{}\n",
                    solvers[s_idx],
                    fmt_f64(*tau),
                    fmt_f64(*fraction)
                ));
            }
        }
        atomic_write(&cfg.out_dir.join(format!("profile_{name}.csv")), text.as_bytes())?;
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;
    use crate::harness::runner::run_pipeline;
    use crate::model::ProblemInstance;

    fn toy_instance_file(dir: &Path) -> std::path::PathBuf {
        let inst = crate::harness::runner::tests::toy_instance();
        let path = dir.join("toy.json");
        std::fs::write(&path, inst.to_json().unwrap()).unwrap();
        path
    }

    fn run(dir: &Path, instance: &Path, pipeline: &str) -> Vec<RunRecord> {
        let cfg = ExperimentConfig {
            instance: instance.to_path_buf(),
            pipeline: pipeline.to_string(),
            seeds: vec![1],
            phase1_budget_secs: 30.0,
            sfsd_budget_secs: 30.0,
            phase1_max_iters: Some(10),
            sfsd_max_iters: Some(50),
            scalarization_budget: 100,
            direction_budget: 100,
            nsma_refine_every: 2,
            nsma_refine_steps: 1,
            crowding_gate: 0.05,
            ga: Default::default(),
            out_dir: dir.join(format!("out-{pipeline}")),
        };
        run_pipeline(&cfg).unwrap()
    }

    #[test]
    fn toy_report_scores_recall_two_thirds_vs_one() {
        let dir = tempfile::tempdir().unwrap();
        let instance = toy_instance_file(dir.path());
        let scal = run(dir.path(), &instance, "scal+sfsd");
        let mohyb = run(dir.path(), &instance, "mohyb+sfsd");

        // Reference from both runs.
        let ref_cfg = ReferenceConfig {
            instance: instance.clone(),
            fronts: vec![scal[0].front_csv.clone(), mohyb[0].front_csv.clone()],
            out: dir.path().join("reference.csv"),
        };
        let reference = build_reference_from_csvs(&ref_cfg).unwrap();
        assert_eq!(reference.points.len(), 3);
        let inst_text = std::fs::read_to_string(&instance).unwrap();
        let inst = ProblemInstance::from_json(&inst_text).unwrap();
        write_reference_csv(&ref_cfg.out, &reference, &inst).unwrap();

        let report_cfg = ReportConfig {
            problems: vec![ProblemReport {
                instance: instance.clone(),
                reference: ref_cfg.out.clone(),
                runs: vec![
                    dir.path().join("out-scal+sfsd/scal+sfsd_seed1.json"),
                    dir.path().join("out-mohyb+sfsd/mohyb+sfsd_seed1.json"),
                ],
            }],
            out_dir: dir.path().join("report"),
        };
        let rows = report(&report_cfg).unwrap();
        assert_eq!(rows.len(), 2);
        let scal_row = rows.iter().find(|r| r.solver == "scal+sfsd").unwrap();
        let mohyb_row = rows.iter().find(|r| r.solver == "mohyb+sfsd").unwrap();
        assert!((scal_row.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((mohyb_row.recall - 1.0).abs() < 1e-12);
        assert!(dir.path().join("report/metrics.csv").exists());
        assert!(dir.path().join("report/profile_purity.csv").exists());
        assert!(dir.path().join("report/profile_hv.csv").exists());
        assert!(dir.path().join("report/profile_gamma.csv").exists());

        // Row count equals solvers x problems.
        let metrics = std::fs::read_to_string(dir.path().join("report/metrics.csv")).unwrap();
        assert_eq!(metrics.lines().count(), 1 + 2);
    }
}
