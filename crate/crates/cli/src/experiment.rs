//! Builds the configured instance, computes the pseudo-oracle and runs every design.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ppds_core::problems::{
    build_gsr, build_mnr, build_unmix, gsr_data, gsr_metric, mnr_data, mnr_metric, unmix_data, unmix_metric,
};
use ppds_core::solver::{pseudo_oracle, solve, MetricHook, SolveOptions, StopRule};
use ppds_core::{ConvergenceLog, Error, PreconditionerPair, ProblemSpec};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, TaskConfig};

pub const SUMMARY_HEADER: [&str; 5] = ["design", "iters_to_stop", "seconds_to_stop", "final_metric", "cond_value"];

/// A problem instance ready to solve.
pub struct Instance {
    pub spec: ProblemSpec,
    pub metric: MetricHook,
}

pub fn build_instance(task: &TaskConfig) -> ppds_core::Result<Instance> {
    match task {
        TaskConfig::Mnr(c) => {
            let d = mnr_data(c)?;
            Ok(Instance {
                spec: build_mnr(c, &d.observed)?,
                metric: mnr_metric(d.truth, c.dims),
            })
        }
        TaskConfig::Unmix(c) => {
            let d = unmix_data(c)?;
            Ok(Instance {
                spec: build_unmix(c, &d.endmembers, &d.observed)?,
                metric: unmix_metric(d.truth),
            })
        }
        TaskConfig::Gsr(c) => {
            let d = gsr_data(c)?;
            Ok(Instance {
                spec: build_gsr(c, &d.graph, &d.mask, &d.observed)?,
                metric: gsr_metric(d.truth),
            })
        }
    }
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Done(Box<ConvergenceLog>),
    /// Construction or solve error.
    Failed(String),
    /// Design needs more memory than the materialization cap allows.
    Skipped(String),
}

#[derive(Debug, Clone)]
pub struct DesignRun {
    pub label: String,
    /// File stem of the per-design CSV.
    pub file_stem: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub runs: Vec<DesignRun>,
    /// Label of the design whose long run became the pseudo-oracle.
    pub oracle_design: Option<String>,
    /// Why no pseudo-oracle is available; RMSE and residual columns are then empty.
    pub oracle_error: Option<String>,
}

impl Report {
    pub fn any_failed(&self) -> bool {
        self.runs.iter().any(|r| matches!(r.outcome, Outcome::Failed(_)))
    }

    pub fn log(&self, label: &str) -> Option<&ConvergenceLog> {
        self.runs.iter().find(|r| r.label == label).and_then(|r| match &r.outcome {
            Outcome::Done(log) => Some(log.as_ref()),
            _ => None,
        })
    }

    /// Summary table rows in [`SUMMARY_HEADER`] order.
    pub fn summary_rows(&self) -> Vec<[String; 5]> {
        self.runs
            .iter()
            .map(|r| match &r.outcome {
                Outcome::Done(log) => {
                    let (iters, secs) = if log.stopped {
                        (log.iterations.to_string(), log.elapsed_s.to_string())
                    } else {
                        (String::new(), String::new())
                    };
                    let metric = log
                        .last()
                        .and_then(|rec| rec.metric)
                        .map(|m| m.value().map_or("inf".to_string(), |v| v.to_string()))
                        .unwrap_or_default();
                    let cond = log.cond_value.map(|c| c.to_string()).unwrap_or_default();
                    [r.label.clone(), iters, secs, metric, cond]
                }
                Outcome::Failed(why) => failure_row(&r.label, format!("FAILED({why})")),
                Outcome::Skipped(why) => failure_row(&r.label, format!("SKIPPED({why})")),
            })
            .collect()
    }

    pub fn write_summary(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(SUMMARY_HEADER)?;
        for row in self.summary_rows() {
            w.write_record(&row)?;
        }
        w.flush()
    }
}

fn failure_row(label: &str, status: String) -> [String; 5] {
    [label.to_string(), status, String::new(), String::new(), String::new()]
}

fn classify(e: Error) -> Outcome {
    match e {
        Error::Capacity { .. } => Outcome::Skipped(e.to_string()),
        other => Outcome::Failed(other.to_string()),
    }
}

/// Lowercase alphanumeric stem: `OVDP(beta=0.5)` becomes `ovdp_beta_0_5`.
pub fn file_stem(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let trimmed = out.trim_matches('_');
    if trimmed.is_empty() {
        "design".to_string()
    } else {
        trimmed.to_string()
    }
}

fn unique_stems(labels: &[String]) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for l in labels {
        let base = file_stem(l);
        let mut stem = base.clone();
        let mut k = 2;
        while seen.contains(&stem) || stem == "summary" {
            stem = format!("{base}_{k}");
            k += 1;
        }
        seen.push(stem);
    }
    seen
}

/// Runs the experiment without touching the file system.
pub fn run_designs(cfg: &ExperimentConfig) -> ppds_core::Result<Report> {
    let task = cfg.task_config()?;
    let inst = build_instance(&task)?;
    let choices = cfg.design_choices();
    let labels: Vec<String> = choices.iter().map(|c| c.tag().to_string()).collect();
    let stems = unique_stems(&labels);
    let built: Vec<ppds_core::Result<PreconditionerPair>> = choices.iter().map(|c| c.build(&inst.spec.grid)).collect();

    let usable: Vec<(usize, PreconditionerPair)> = built
        .iter()
        .enumerate()
        .filter_map(|(k, b)| b.as_ref().ok().map(|pc| (k, pc.clone())))
        .collect();
    let pairs: Vec<PreconditionerPair> = usable.iter().map(|(_, pc)| pc.clone()).collect();
    let (oracle, oracle_design, oracle_error) = if pairs.is_empty() {
        (None, None, Some("no design could be constructed".to_string()))
    } else {
        match pseudo_oracle(&inst.spec, &pairs, cfg.oracle_iters, cfg.feas_tol) {
            Ok(o) => {
                let label = labels[usable[o.design].0].clone();
                log::info!("pseudo-oracle from {label} (objective {:.10e})", o.objective);
                (Some(Arc::new(o.x)), Some(label), None)
            }
            Err(e) => {
                log::warn!("no pseudo-oracle: {e}");
                (None, None, Some(e.to_string()))
            }
        }
    };

    let opts = SolveOptions {
        max_iters: cfg.max_iters,
        stop: StopRule::NormalizedStep(cfg.stop_threshold),
        oracle,
        metric: Some(inst.metric.clone()),
        record_every: cfg.record_every,
        feas_tol: cfg.feas_tol,
        seed: cfg.seed,
        check_condition: true,
        ..Default::default()
    };
    let outcomes: Vec<Outcome> = built
        .into_par_iter()
        .map(|b| match b {
            Ok(pc) => match solve(&inst.spec, &pc, &opts) {
                Ok((_, log)) => Outcome::Done(Box::new(log)),
                Err(e) => classify(e),
            },
            Err(e) => classify(e),
        })
        .collect();

    let runs = labels
        .into_iter()
        .zip(stems)
        .zip(outcomes)
        .map(|((label, file_stem), outcome)| DesignRun {
            label,
            file_stem,
            outcome,
        })
        .collect();
    Ok(Report {
        runs,
        oracle_design,
        oracle_error,
    })
}

/// Runs the experiment and writes `<stem>.csv` per solved design plus `summary.csv`
/// into `cfg.output_dir`. Returns the report and the written paths.
pub fn run_experiment(cfg: &ExperimentConfig) -> ppds_core::Result<(Report, Vec<PathBuf>)> {
    let report = run_designs(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut written = Vec::new();
    for run in &report.runs {
        if let Outcome::Done(log) = &run.outcome {
            let path = cfg.output_dir.join(format!("{}.csv", run.file_stem));
            let f = std::io::BufWriter::new(fs::File::create(&path)?);
            log.write_csv(f)?;
            written.push(path);
        }
    }
    let summary = cfg.output_dir.join("summary.csv");
    report.write_summary(&summary)?;
    written.push(summary);
    Ok((report, written))
}
