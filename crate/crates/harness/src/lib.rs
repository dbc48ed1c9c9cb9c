//! Batch experiment runner: every victim AV case under every attack on
//! every scene, compared against the unattacked baseline.
//!
//! Output layout under the plan's output directory:
//!
//! ```text
//! {scene}/{av}/{condition}/metrics.csv   per-frame FP/FN/FT/MT and safety
//! {scene}/{av}/{condition}/tracks.csv    confirmed output tracks
//! {scene}/{av}/{condition}/safety.csv    perceived and true safety pairs
//! {scene}/{av}/{condition}/attacker.csv  attacker and receiver log
//! increments.csv                         per-scene increments over baseline
//! summary.csv                            increments averaged over scenes
//! manifest.json                          index of all of the above
//! ```

pub mod pipeline;
pub mod plan;
pub mod plot;

use std::path::{Path, PathBuf};

use lidarsec_core::config::ConfigError;
use lidarsec_core::metrics::{
    aggregate_table, increment_over_baseline, IncrementReport, MetricsError, SummaryRow,
};
use lidarsec_core::scene::SceneFileError;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use pipeline::{run_scene, ConditionRecord, LogRow, RunRecord, SceneRun, TargetCheck};
pub use plan::{Condition, ExperimentPlan, PlanFile};
pub use plot::{emit_plots, render_svg, PLOT_METRICS};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scene file not found: {0}")]
    MissingScene(PathBuf),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scene(#[from] SceneFileError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("writing {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("writing manifest: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn file(path: &Path, source: std::io::Error) -> Self {
        HarnessError::File {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Increments of one (scene, AV, condition) run over its baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementRow {
    pub scene: String,
    pub av: String,
    pub attack: String,
    pub fp_inc: f64,
    pub fn_inc: f64,
    pub ft_inc: f64,
    pub mt_inc: f64,
    pub unsafe_scene: bool,
}

impl IncrementRow {
    fn new(scene: &str, av: &str, attack: &str, r: IncrementReport) -> Self {
        Self {
            scene: scene.into(),
            av: av.into(),
            attack: attack.into(),
            fp_inc: r.fp_inc,
            fn_inc: r.fn_inc,
            ft_inc: r.ft_inc,
            mt_inc: r.mt_inc,
            unsafe_scene: r.unsafe_scene,
        }
    }

    pub fn report(&self) -> IncrementReport {
        IncrementReport {
            fp_inc: self.fp_inc,
            fn_inc: self.fn_inc,
            ft_inc: self.ft_inc,
            mt_inc: self.mt_inc,
            unsafe_scene: self.unsafe_scene,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub scenes: Vec<SceneRun>,
    pub increments: Vec<IncrementRow>,
    pub summary: Vec<SummaryRow>,
}

impl PlanOutcome {
    pub fn summary_row(&self, av: &str, attack: &str) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.av == av && r.attack == attack)
    }
}

/// Run the plan in memory; scenes run in parallel.
pub fn execute(plan: &ExperimentPlan) -> Result<PlanOutcome, HarnessError> {
    plan.validate()?;
    let conditions = plan.conditions();
    let scenes: Vec<SceneRun> = plan
        .seeded_scenes()
        .par_iter()
        .map(|s| {
            log::info!("running scene {}", s.name);
            run_scene(s, &conditions, &plan.avs, &plan.config)
        })
        .collect();

    let mut increments = Vec::new();
    for sr in &scenes {
        for &av in &plan.avs {
            let base = sr
                .run(av, Condition::Baseline)
                .expect("baseline always runs");
            for &c in &conditions[1..] {
                let run = sr.run(av, c).expect("every condition runs");
                let r = increment_over_baseline(&run.metrics, &base.metrics)?;
                increments.push(IncrementRow::new(&sr.scene, av.name(), c.name(), r));
            }
        }
    }
    let reports: Vec<IncrementReport> = increments.iter().map(IncrementRow::report).collect();
    let summary = aggregate_table(
        increments
            .iter()
            .zip(&reports)
            .map(|(r, rep)| (r.av.as_str(), r.attack.as_str(), rep)),
    );
    Ok(PlanOutcome {
        scenes,
        increments,
        summary,
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| HarnessError::file(path, e))
}

#[derive(Serialize)]
struct ManifestRun {
    scene: String,
    av: String,
    attack: String,
    dir: String,
    frames: usize,
}

#[derive(Serialize)]
struct ManifestCondition<'a> {
    scene: &'a str,
    attack: &'a str,
    frames: usize,
    integrity_pass: usize,
    contained: Option<bool>,
    target: Option<&'a TargetCheck>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    seed: Option<u64>,
    scenes: Vec<&'a str>,
    avs: Vec<&'a str>,
    conditions: Vec<&'a str>,
    config: &'a lidarsec_core::Config,
    increments: &'a str,
    summary: &'a str,
    runs: Vec<ManifestRun>,
    attacks: Vec<ManifestCondition<'a>>,
}

/// Write every per-run file, the increment and summary tables and the
/// manifest.
pub fn write_outcome(plan: &ExperimentPlan, outcome: &PlanOutcome) -> Result<(), HarnessError> {
    let root = &plan.output;
    let mkdir = |p: &Path| std::fs::create_dir_all(p).map_err(|e| HarnessError::file(p, e));
    mkdir(root)?;
    let mut runs = Vec::new();
    for sr in &outcome.scenes {
        for run in &sr.runs {
            let rel = format!("{}/{}/{}", sr.scene, run.av.name(), run.condition.name());
            let dir = root.join(&rel);
            mkdir(&dir)?;
            write_csv(&dir.join("metrics.csv"), &run.metrics)?;
            write_csv(&dir.join("tracks.csv"), &run.tracks)?;
            write_csv(&dir.join("safety.csv"), &run.safety)?;
            let log = sr.condition(run.condition).map_or(&[][..], |c| &c.log[..]);
            write_csv(&dir.join("attacker.csv"), log)?;
            runs.push(ManifestRun {
                scene: sr.scene.clone(),
                av: run.av.name().into(),
                attack: run.condition.name().into(),
                dir: rel,
                frames: run.metrics.len(),
            });
        }
    }
    write_csv(&root.join("increments.csv"), &outcome.increments)?;
    write_csv(&root.join("summary.csv"), &outcome.summary)?;

    let conditions = plan.conditions();
    let attacks = outcome
        .scenes
        .iter()
        .flat_map(|sr| {
            sr.conditions.iter().map(move |c| ManifestCondition {
                scene: &sr.scene,
                attack: c.condition.name(),
                frames: c.log.len(),
                integrity_pass: c.log.iter().filter(|l| l.zeta).count(),
                contained: c
                    .log
                    .iter()
                    .map(|l| l.contained)
                    .try_fold(true, |acc, x| x.map(|x| acc && x)),
                target: c.target.as_ref(),
            })
        })
        .collect();
    let manifest = Manifest {
        seed: plan.seed,
        scenes: outcome.scenes.iter().map(|s| s.scene.as_str()).collect(),
        avs: plan.avs.iter().map(|a| a.name()).collect(),
        conditions: conditions.iter().map(|c| c.name()).collect(),
        config: &plan.config,
        increments: "increments.csv",
        summary: "summary.csv",
        runs,
        attacks,
    };
    let path = root.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text + "\n").map_err(|e| HarnessError::file(&path, e))
}

/// Execute the plan and write its results.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutcome, HarnessError> {
    let outcome = execute(plan)?;
    write_outcome(plan, &outcome)?;
    Ok(outcome)
}

/// Read a summary table written by [`run_plan`].
pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, HarnessError> {
    let err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    r.deserialize().collect::<Result<_, _>>().map_err(err)
}
