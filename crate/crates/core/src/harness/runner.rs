//! Seeded experiment runner: phase-1 initialization, pairing with super
//! supports, the optional exploration phase, and persistence of fronts and
//! run records. Each (pipeline, seed) cell is deterministic given its
//! configuration; cells may run on parallel threads (`SPARSEFRONT_THREADS`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, Phase1, PipelineId};
use super::front_io::{atomic_write, write_front_csv, FrontRow};
use crate::constraints::{build_polyhedron, is_feasible, Polyhedron};
use crate::descent::{lipschitz_bound, mohyb, MospdParams};
use crate::directions::common_direction;
use crate::error::{Error, Result};
use crate::evolutionary::{initial_population, nsga2_run, nsma_run, GaParams, RefineConfig};
use crate::metrics::{hypervolume, reference_point};
use crate::model::{
    nondominated_filter, super_supports, EvaluatedPoint, FrontList, ProblemInstance,
    SUPPORT_TOL,
};
use crate::objectives::{natural_values, ObjectiveSet, VectorObjective};
use crate::scalarization::{lambda_grid, scalarization_front};
use crate::sfsd::{sfsd_run, SfsdParams};
use crate::util::Budget;

/// Persisted description of one finished (pipeline, seed) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub pipeline: String,
    pub instance: String,
    pub seed: u64,
    pub wall_seconds: f64,
    pub front_csv: PathBuf,
    pub phase1_front_csv: PathBuf,
    /// Hypervolume of the final front against the cross-seed reference
    /// point; used to select the best seed.
    pub hypervolume: Option<f64>,
    /// True for the seed with maximal hypervolume within this pipeline run.
    pub selected: bool,
}

impl RunRecord {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).unwrap_or_default();
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

struct CellOutput {
    seed: u64,
    wall_seconds: f64,
    phase1_rows: Vec<FrontRow>,
    final_rows: Vec<FrontRow>,
    final_values: Vec<Vec<f64>>,
}

/// Run every seed of the configured pipeline, persist fronts and run
/// records, and return the records (best seed flagged).
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let id = cfg.validate()?;
    let text = std::fs::read_to_string(&cfg.instance)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", cfg.instance.display())))?;
    let inst = ProblemInstance::from_json(&text)?;
    let poly = build_polyhedron(&inst.constraints, &inst.model.beta)?;
    std::fs::create_dir_all(&cfg.out_dir)?;

    let threads: usize = std::env::var("SPARSEFRONT_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1);

    let mut cells: Vec<CellOutput> = Vec::with_capacity(cfg.seeds.len());
    if threads <= 1 || cfg.seeds.len() <= 1 {
        for &seed in &cfg.seeds {
            cells.push(run_cell(cfg, id, &inst, &poly, seed)?);
        }
    } else {
        let mut results: Vec<Option<Result<CellOutput>>> =
            (0..cfg.seeds.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            let chunks: Vec<Vec<(usize, u64)>> = {
                let mut buckets: Vec<Vec<(usize, u64)>> = vec![Vec::new(); threads];
                for (i, &seed) in cfg.seeds.iter().enumerate() {
                    buckets[i % threads].push((i, seed));
                }
                buckets
            };
            let mut handles = Vec::new();
            for chunk in chunks {
                let inst_ref = &inst;
                let poly_ref = &poly;
                handles.push(scope.spawn(move || {
                    chunk
                        .into_iter()
                        .map(|(i, seed)| (i, run_cell(cfg, id, inst_ref, poly_ref, seed)))
                        .collect::<Vec<_>>()
                }));
            }
            for handle in handles {
                for (i, res) in handle.join().expect("runner thread panicked") {
                    results[i] = Some(res);
                }
            }
        });
        for res in results.into_iter().flatten() {
            cells.push(res?);
        }
    }

    // Best-of-seeds by hypervolume against a common reference point.
    let fronts: Vec<Vec<Vec<f64>>> = cells.iter().map(|c| c.final_values.clone()).collect();
    let ref_point = reference_point(&fronts);
    let hvs: Vec<Option<f64>> = cells
        .iter()
        .map(|c| ref_point.as_ref().map(|r| hypervolume(&c.final_values, r)))
        .collect();
    let best = hvs
        .iter()
        .enumerate()
        .filter_map(|(i, hv)| hv.map(|v| (i, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i);

    let hash = config_hash(cfg);
    let mut records = Vec::with_capacity(cells.len());
    for (i, cell) in cells.into_iter().enumerate() {
        let stem = format!("{}_seed{}", id.name(), cell.seed);
        let front_csv = cfg.out_dir.join(format!("{stem}_front.csv"));
        let phase1_csv = cfg.out_dir.join(format!("{stem}_phase1.csv"));
        let with_lambda = id.phase1 == Phase1::Scal;
        write_front_csv(&phase1_csv, cell.phase1_rows, with_lambda)?;
        write_front_csv(&front_csv, cell.final_rows, false)?;
        let record = RunRecord {
            config_hash: hash.clone(),
            pipeline: id.name(),
            instance: inst.name.clone(),
            seed: cell.seed,
            wall_seconds: cell.wall_seconds,
            front_csv,
            phase1_front_csv: phase1_csv,
            hypervolume: hvs[i],
            selected: best == Some(i),
        };
        let record_path = cfg.out_dir.join(format!("{stem}.json"));
        atomic_write(&record_path, serde_json::to_string_pretty(&record)?.as_bytes())?;
        records.push(record);
    }
    Ok(records)
}

fn run_cell(
    cfg: &ExperimentConfig,
    id: PipelineId,
    inst: &ProblemInstance,
    poly: &Polyhedron,
    seed: u64,
) -> Result<CellOutput> {
    let clock = Budget::unlimited().start();
    let obj = ObjectiveSet::new(&inst.model, &inst.objectives)?;
    let phase1_secs = if id.long {
        cfg.phase1_budget_secs + cfg.sfsd_budget_secs
    } else {
        cfg.phase1_budget_secs
    };
    let phase1_budget = Budget {
        max_iters: cfg.phase1_max_iters,
        max_seconds: Some(phase1_secs),
    };

    // Phase 1: gather candidate points with their producing solver's name,
    // plus weight vectors for the scalarization front.
    let mut candidates: Vec<(DVector<f64>, String)> = Vec::new();
    let mut lambda_by_key: BTreeMap<Vec<u64>, Vec<f64>> = BTreeMap::new();
    match id.phase1 {
        Phase1::Scal => {
            let grid = lambda_grid(inst.objectives.len(), 2 * inst.n)?;
            let out = scalarization_front(
                &inst.model,
                &inst.objectives,
                poly,
                inst.s,
                &grid,
                cfg.scalarization_budget,
                seed,
            )?;
            for entry in out.front.entries() {
                if let Some(lam) = out.weights.get(&entry.id) {
                    lambda_by_key.insert(point_key(&entry.point.x), lam.clone());
                }
                candidates.push((entry.point.x.clone(), "scal".to_string()));
            }
        }
        Phase1::Mohyb => {
            let starts: Vec<DVector<f64>> = initial_population(&obj, poly, inst.s, seed)?
                .members
                .into_iter()
                .map(|m| m.x)
                .collect();
            let mut rng = crate::util::stream_rng(seed, "lipschitz", 0);
            let l = 1.1 * lipschitz_bound(&inst.model, &inst.objectives, &mut rng)?;
            let results = mohyb(
                &obj,
                &starts,
                poly,
                inst.s,
                l,
                cfg.phase1_max_iters.unwrap_or(50),
                cfg.direction_budget,
                &MospdParams::default(),
                &phase1_budget,
            )?;
            for r in results {
                candidates.push((r.reported_point(inst.s), "mohyb".to_string()));
            }
        }
        Phase1::Nsga2 | Phase1::Nsma => {
            let params = GaParams {
                pop_size: cfg.ga.pop_size.unwrap_or(100),
                crossover_prob: cfg.ga.crossover_prob.unwrap_or(0.9),
                mutation_prob: cfg.ga.mutation_prob,
                sbx_eta: cfg.ga.sbx_eta.unwrap_or(20.0),
                mutation_eta: cfg.ga.mutation_eta.unwrap_or(20.0),
                seed,
                budget: Budget {
                    max_iters: cfg.ga.max_generations.or(cfg.phase1_max_iters),
                    max_seconds: Some(phase1_secs),
                },
            };
            let pop = if id.phase1 == Phase1::Nsma {
                let mut rng = crate::util::stream_rng(seed, "lipschitz", 0);
                let l = 1.1 * lipschitz_bound(&inst.model, &inst.objectives, &mut rng)?;
                nsma_run(
                    &obj,
                    poly,
                    inst.s,
                    &params,
                    RefineConfig {
                        every: cfg.nsma_refine_every,
                        steps: cfg.nsma_refine_steps,
                        l,
                        dir_budget: cfg.direction_budget,
                    },
                )?
            } else {
                nsga2_run(&obj, poly, inst.s, &params)?
            };
            let origin = id.phase1.name().to_string();
            for member in pop.rank0() {
                candidates.push((member.x.clone(), origin.clone()));
            }
        }
    }

    // Pair with super supports and apply the global dominance filter.
    let mut evaluated: Vec<(DVector<f64>, DVector<f64>, crate::model::SupportSet, String)> =
        Vec::new();
    for (x, origin) in candidates {
        let report = is_feasible(&x, poly, inst.s, 1e-6);
        if !report.feasible {
            log::warn!(
                "phase-1 point from {origin} rejected: {}",
                report.violations[0]
            );
            continue;
        }
        let supports = super_supports(x.as_slice(), inst.s, SUPPORT_TOL)?;
        let support = supports.into_iter().next().expect("at least one super support");
        let f = obj.evaluate(&x)?;
        evaluated.push((x, f, support, origin));
    }
    if evaluated.is_empty() {
        return Err(Error::Numerical(format!(
            "phase 1 of {} produced no feasible points",
            id.name()
        )));
    }
    let values: Vec<Vec<f64>> = evaluated.iter().map(|e| e.1.as_slice().to_vec()).collect();
    let keep = nondominated_filter(&values)?;
    let mut x0 = FrontList::new();
    for pos in keep {
        let (x, f, support, origin) = evaluated[pos].clone();
        x0.insert(EvaluatedPoint::new(x, f, support), &origin);
    }

    let phase1_rows = front_rows(&x0, inst, poly, &obj, &lambda_by_key)?;

    let final_front = if id.with_sfsd && !id.long {
        let params = SfsdParams {
            theta_tol: crate::directions::THETA_TOL,
            crowding_gate: cfg.crowding_gate,
            budget: Budget {
                max_iters: cfg.sfsd_max_iters,
                max_seconds: Some(cfg.sfsd_budget_secs),
            },
            ..Default::default()
        };
        sfsd_run(&x0, &obj, poly, &params)?.front
    } else {
        x0
    };

    let final_rows = front_rows(&final_front, inst, poly, &obj, &BTreeMap::new())?;
    let final_values: Vec<Vec<f64>> = final_front
        .entries()
        .map(|e| e.point.f.as_slice().to_vec())
        .collect();
    Ok(CellOutput {
        seed,
        wall_seconds: clock.elapsed_seconds(),
        phase1_rows,
        final_rows,
        final_values,
    })
}

/// Quantized key for matching scalarization weights to front entries.
fn point_key(x: &DVector<f64>) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Materialize CSV rows for a front: natural objective values and a freshly
/// computed stationarity measure per entry.
fn front_rows(
    front: &FrontList,
    inst: &ProblemInstance,
    poly: &Polyhedron,
    obj: &ObjectiveSet<'_>,
    lambda_by_key: &BTreeMap<Vec<u64>, Vec<f64>>,
) -> Result<Vec<FrontRow>> {
    let mut rows = Vec::with_capacity(front.len());
    for entry in front.entries() {
        let grads = obj.jacobian(&entry.point.x)?;
        let dir = common_direction(&entry.point.x, &entry.point.support, &grads, poly)?;
        rows.push(FrontRow {
            f_natural: natural_values(&inst.objectives, entry.point.f.as_slice()),
            x: entry.point.x.as_slice().to_vec(),
            support: entry.point.support.clone(),
            theta: dir.theta,
            origin: entry.origin.clone(),
            lambda: lambda_by_key.get(&point_key(&entry.point.x)).cloned(),
        });
    }
    Ok(rows)
}
