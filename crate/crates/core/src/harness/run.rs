//! Experiment runs and their artifacts.
//!
//! A run directory holds:
//!
//! * `config.resolved`: the fully resolved config;
//! * `metrics.csv` (plus `noise.csv` for match runs): per-epoch or per-item
//!   rows;
//! * `events.jsonl`: one JSON object per notable event;
//! * `snapshots/`: weight fields (`NFW1`), fragment libraries (`NFL1`),
//!   model stores (`NFM1`), correspondence maps (CSV) and graymap/bitmap
//!   dumps;
//! * `summary.json`: acceptance scalars, threshold checks and the accepted
//!   flag;
//! * `run.json`: the [`RunRecord`], the only file carrying timestamps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind};
use super::experiments::{
    fragments_experiment, match_experiment, retinotopy_experiment, segment_experiment, select_experiment,
    train_field, Check,
};
use super::pnm::{write_pbm, write_pgm};
use crate::error::Result;
use crate::fragments::write_library;
use crate::substrate::write_snapshot;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "NETFRAG_OUT";
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub code_version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub out_dir: PathBuf,
    pub config_path: PathBuf,
    pub metrics_paths: Vec<PathBuf>,
    pub events_path: PathBuf,
    pub summary_path: PathBuf,
    /// Only meaningful for retinotopy runs.
    pub converged: Option<bool>,
    pub accepted: bool,
}

/// `config.out` if set, else `<root>/<kind>-<hash prefix>` with the root
/// taken from `NETFRAG_OUT` or [`DEFAULT_OUTPUT_ROOT`].
pub fn output_dir(config: &ExperimentConfig) -> PathBuf {
    if let Some(out) = &config.out {
        return out.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT), PathBuf::from);
    root.join(format!("{}-{}", config.kind, &config.hash()[..12]))
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

struct Artifacts {
    dir: PathBuf,
    events: String,
    metrics: Vec<PathBuf>,
}

impl Artifacts {
    fn event(&mut self, value: Value) {
        self.events.push_str(&value.to_string());
        self.events.push('\n');
    }

    fn metrics(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.metrics.push(path);
        Ok(())
    }

    fn snapshot_path(&self, name: &str) -> PathBuf {
        self.dir.join("snapshots").join(name)
    }
}

/// Outcome of one experiment body: summary scalars, checks and the
/// convergence flag.
struct Body {
    scalars: Vec<(String, Value)>,
    checks: Vec<Check>,
    converged: Option<bool>,
}

/// Runs the configured experiment and writes its artifacts. Thresholds
/// that fail only clear the accepted flag.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let started = now_ms();
    let dir = output_dir(config);
    fs::create_dir_all(dir.join("snapshots"))?;
    let hash = config.hash();
    let config_path = dir.join("config.resolved");
    fs::write(&config_path, config.resolved_text())?;
    let mut art = Artifacts {
        dir: dir.clone(),
        events: String::new(),
        metrics: Vec::new(),
    };
    art.event(json!({"event": "start", "kind": config.kind, "config_hash": hash}));
    let body = match config.kind {
        ExperimentKind::Retinotopy => run_retinotopy(config, &mut art)?,
        ExperimentKind::Fragments => run_fragments(config, &mut art)?,
        ExperimentKind::Segment => run_segment(config, &mut art)?,
        ExperimentKind::Select => run_select(config, &mut art)?,
        ExperimentKind::Match => run_match(config, &mut art)?,
    };
    let accepted = body.checks.iter().all(|c| c.passed);
    for c in &body.checks {
        art.event(json!({"event": "check", "name": c.name, "value": c.value, "target": c.target, "passed": c.passed}));
    }
    art.event(json!({"event": "end", "accepted": accepted}));
    let events_path = dir.join("events.jsonl");
    fs::write(&events_path, &art.events)?;
    let summary = json!({
        "kind": config.kind,
        "config_hash": hash,
        "code_version": env!("CARGO_PKG_VERSION"),
        "converged": body.converged,
        "accepted": accepted,
        "metrics": Value::Object(body.scalars.into_iter().collect()),
        "checks": body.checks,
    });
    let summary_path = dir.join("summary.json");
    fs::write(&summary_path, serde_json::to_string_pretty(&summary).unwrap_or_default() + "\n")?;
    let record = RunRecord {
        kind: config.kind,
        config_hash: hash,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        out_dir: dir.clone(),
        config_path,
        metrics_paths: art.metrics,
        events_path,
        summary_path,
        converged: body.converged,
        accepted,
    };
    fs::write(dir.join("run.json"), serde_json::to_string_pretty(&record).unwrap_or_default() + "\n")?;
    Ok(record)
}

fn scalar(name: &str, value: impl Into<Value>) -> (String, Value) {
    (name.to_string(), value.into())
}

fn run_retinotopy(config: &ExperimentConfig, art: &mut Artifacts) -> Result<Body> {
    let cfg = &config.selforg;
    let every = config.snapshot_every;
    let mut csv = String::from("epoch,dw_l1,neighbor_consistency,affine_order,mean_fan_in\n");
    let mut snapshots = Vec::new();
    let outcome = retinotopy_experiment(cfg, |m, field| {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            m.epoch, m.dw_l1, m.neighbor_consistency, m.affine_order, m.mean_fan_in
        );
        if every > 0 && (m.epoch + 1) % every == 0 {
            let name = format!("epoch_{:04}.nfw", m.epoch + 1);
            write_snapshot(field, art.snapshot_path(&name))?;
            snapshots.push((m.epoch + 1, name));
        }
        Ok(())
    })?;
    for (epoch, name) in snapshots {
        art.event(json!({"event": "snapshot", "epoch": epoch, "file": format!("snapshots/{name}")}));
    }
    write_snapshot(&outcome.field, art.snapshot_path("final.nfw"))?;
    art.event(json!({"event": "snapshot", "epoch": outcome.trace.epochs.len(), "file": "snapshots/final.nfw"}));
    if let Some(e) = outcome.trace.converged_epoch {
        art.event(json!({"event": "converged", "epoch": e}));
    }
    art.metrics("metrics.csv", &csv)?;
    let last = outcome.trace.last();
    Ok(Body {
        scalars: vec![
            scalar("epochs", outcome.trace.epochs.len()),
            scalar("neighbor_consistency", last.map_or(0.0, |m| m.neighbor_consistency)),
            scalar("affine_order", last.map_or(0.0, |m| m.affine_order)),
            scalar("final_dw_l1", last.map_or(0.0, |m| m.dw_l1)),
            scalar("mean_fan_in", last.map_or(0.0, |m| m.mean_fan_in)),
            scalar("max_fan_in", outcome.trace.max_fan_in),
            scalar("max_budget_error", outcome.trace.max_budget_error),
            scalar("converged_epoch", outcome.trace.converged_epoch),
        ],
        checks: outcome.checks(cfg),
        converged: Some(outcome.trace.converged),
    })
}

fn run_fragments(config: &ExperimentConfig, art: &mut Artifacts) -> Result<Body> {
    let outcome = fragments_experiment(&config.corpus, &config.fragments)?;
    write_snapshot(outcome.field.lateral(), art.snapshot_path("lateral.nfw"))?;
    write_library(&outcome.library, art.snapshot_path("library.nfl"))?;
    let mut csv = String::from("fragment,size,count,texture,jaccard_stripes_0,jaccard_stripes_90,jaccard_checker,jaccard_dots\n");
    for r in &outcome.records {
        let j = r.jaccard;
        let _ = writeln!(csv, "{},{},{},{},{},{},{},{}", r.id, r.size, r.count, r.texture, j[0], j[1], j[2], j[3]);
    }
    art.metrics("metrics.csv", &csv)?;
    art.event(json!({"event": "library", "fragments": outcome.library.len(), "file": "snapshots/library.nfl"}));
    let per = outcome.per_texture();
    Ok(Body {
        scalars: vec![
            scalar("fragments", outcome.library.len()),
            scalar("fragments_per_texture", per.to_vec()),
            scalar("same_texture_jaccard", outcome.same_mean()),
            scalar("cross_texture_jaccard", outcome.cross_mean()),
        ],
        checks: outcome.checks(),
        converged: None,
    })
}

fn run_segment(config: &ExperimentConfig, art: &mut Artifacts) -> Result<Body> {
    let field = train_field(&config.corpus, &config.fragments)?;
    let outcome = segment_experiment(&field, &config.fragments, &config.segment)?;
    let mut csv = String::from("scene,figure,ground,top,left,height,width,iou,degenerate,area\n");
    for (i, s) in outcome.scenes.iter().enumerate() {
        let r = s.rect;
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{},{},{},{},{}",
            s.figure,
            s.ground,
            r.top,
            r.left,
            r.height,
            r.width,
            s.iou,
            s.result.degenerate,
            s.result.area()
        );
        let size = s.image.rows();
        write_pgm(&s.image, art.snapshot_path(&format!("scene_{i:03}.pgm")))?;
        write_pbm(&s.result.mask, size, size, art.snapshot_path(&format!("mask_{i:03}.pbm")))?;
        if s.result.degenerate {
            art.event(json!({"event": "degenerate", "scene": i}));
        }
    }
    art.metrics("metrics.csv", &csv)?;
    Ok(Body {
        scalars: vec![
            scalar("scenes", outcome.scenes.len()),
            scalar("mean_iou", outcome.mean_iou()),
            scalar("min_iou", outcome.min_iou()),
        ],
        checks: outcome.checks(),
        converged: None,
    })
}

fn run_select(config: &ExperimentConfig, art: &mut Artifacts) -> Result<Body> {
    let field = train_field(&config.corpus, &config.fragments)?;
    let outcome = select_experiment(&field, &config.fragments, &config.select)?;
    let mut csv = String::from("bias,trial,first,second,first_size,second_size,winner,purity,loser_overlap,peeled\n");
    for t in &outcome.trials {
        let winner = t.winner.map_or_else(|| "none".to_string(), |w| w.to_string());
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{winner},{},{},{}",
            t.bias, t.trial, t.textures[0], t.textures[1], t.pattern_sizes[0], t.pattern_sizes[1], t.purity, t.loser_overlap, t.peeled
        );
    }
    art.metrics("metrics.csv", &csv)?;
    let mut scalars = vec![scalar("trials", config.select.trials)];
    for b in outcome.biases() {
        scalars.push(scalar(&format!("favoured_wins@{b}"), outcome.favoured_wins(b)));
    }
    let checks = outcome.checks();
    for c in &checks {
        scalars.push(scalar(&c.name, c.value));
    }
    Ok(Body {
        scalars,
        checks,
        converged: None,
    })
}

fn run_match(config: &ExperimentConfig, art: &mut Artifacts) -> Result<Body> {
    let outcome = match_experiment(&config.matching, &config.relax)?;
    outcome.store.store.write(art.snapshot_path("models.nfm"))?;
    let maps = art.dir.join("snapshots").join("maps");
    fs::create_dir_all(&maps)?;
    let mut csv = String::from(
        "query,sprite,scale,row,col,predicted,quality,est_row,est_col,est_scale,translation_error,scale_error,oracle_model,oracle_row,oracle_col,oracle_agrees\n",
    );
    for (i, q) in outcome.queries.iter().enumerate() {
        let oracle = q.oracle.as_ref().map_or_else(
            || ",,,".to_string(),
            |o| format!("{},{},{},{}", o.model, o.position.0, o.position.1, o.agrees),
        );
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{},{},{},{},{},{},{},{oracle}",
            q.sprite,
            q.scale,
            q.translation.0,
            q.translation.1,
            q.predicted,
            q.quality,
            q.estimated_translation.0,
            q.estimated_translation.1,
            q.estimated_scale,
            q.translation_error,
            q.scale_error
        );
        fs::write(maps.join(format!("query_{i:03}.csv")), q.map.to_csv())?;
    }
    art.metrics("metrics.csv", &csv)?;
    let mut noise = String::from("trial,best_quality,rejected\n");
    for (i, q) in outcome.noise_quality.iter().enumerate() {
        let _ = writeln!(noise, "{i},{q},{}", *q < outcome.tau_rej);
    }
    art.metrics("noise.csv", &noise)?;
    art.event(json!({"event": "store", "models": outcome.store.store.len(), "file": "snapshots/models.nfm"}));
    let (within_px, within_scale) = outcome.within_tolerance();
    let max_noise = outcome.noise_quality.iter().cloned().fold(0.0, f64::max);
    Ok(Body {
        scalars: vec![
            scalar("queries", outcome.queries.len()),
            scalar("rank1_accuracy", outcome.rank1()),
            scalar("mean_translation_error", outcome.mean_translation_error()),
            scalar("mean_scale_error", outcome.mean_scale_error()),
            scalar("translation_within_1px", within_px),
            scalar("scale_within_0.1", within_scale),
            scalar("oracle_agreement", outcome.oracle_agreement()),
            scalar("noise_rejection", outcome.noise_rejection()),
            scalar("max_noise_quality", max_noise),
        ],
        checks: outcome.checks(),
        converged: None,
    })
}

/// Reads a run's summary back as JSON.
pub fn read_summary(dir: impl AsRef<Path>) -> Result<Value> {
    let text = fs::read_to_string(dir.as_ref().join("summary.json"))?;
    serde_json::from_str(&text).map_err(|e| crate::NetfragError::Format(e.to_string()))
}
