//! Acceptance suite: runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each. A failing criterion is reported, not raised.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use netfrag_core::harness::{read_summary, run_experiment, ExperimentConfig, ExperimentKind};
use netfrag_core::selforg::{aligned_order, run_selforg, run_selforg_from, InitKind, SelfOrgConfig};
use netfrag_core::Result;
use serde_json::Value;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

/// Runs one experiment kind with default settings into `dir`.
fn run_kind(kind: ExperimentKind, dir: &Path) -> Result<(Value, Duration)> {
    let mut config = ExperimentConfig::new(kind);
    config.out = Some(dir.to_path_buf());
    let start = Instant::now();
    run_experiment(&config)?;
    Ok((read_summary(dir)?, start.elapsed()))
}

/// Every summary check of a run, rendered, and whether all passed.
fn summary_checks(summary: &Value) -> (bool, Vec<String>) {
    let mut all = true;
    let mut out = Vec::new();
    for c in summary["checks"].as_array().into_iter().flatten() {
        let passed = c["passed"].as_bool().unwrap_or(false);
        all &= passed;
        let op = if c["at_least"].as_bool().unwrap_or(true) { ">=" } else { "<=" };
        out.push(format!(
            "{} {} ({op} {}){}",
            c["name"].as_str().unwrap_or("?"),
            number(c["value"].as_f64().unwrap_or(f64::NAN)),
            number(c["target"].as_f64().unwrap_or(f64::NAN)),
            if passed { "" } else { " MISSED" }
        ));
    }
    (all, out)
}

fn number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e6 {
        format!("{v:.0}")
    } else if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        format!("{v:.4}")
    }
}

fn experiment_verdict(summary: &Value, elapsed: Duration, limit_s: Option<f64>) -> Verdict {
    let (mut passed, mut parts) = summary_checks(summary);
    let secs = elapsed.as_secs_f64();
    match limit_s {
        Some(limit) => {
            passed &= secs < limit;
            parts.push(format!("runtime {secs:.1}s (< {limit}s)"));
        }
        None => parts.push(format!("runtime {secs:.1}s")),
    }
    Verdict::new(passed, parts.join(", "))
}

fn criterion_1(dir: &Path) -> Result<Verdict> {
    let (summary, elapsed) = run_kind(ExperimentKind::Retinotopy, dir)?;
    let biased = experiment_verdict(&summary, elapsed, Some(120.0));
    let mut ordered = 0;
    let seeds = 1..=20u64;
    let count = seeds.clone().count();
    let mut orders = Vec::new();
    for seed in seeds {
        let config = SelfOrgConfig {
            polarity_bias: 0.0,
            init: InitKind::Uniform,
            seed,
            ..SelfOrgConfig::default()
        };
        let (field, _) = run_selforg(&config)?;
        let order = aligned_order(&field)?;
        orders.push(order);
        if order >= 0.9 {
            ordered += 1;
        }
    }
    let unbiased = ordered as f64 >= 0.8 * count as f64;
    let best = orders.iter().cloned().fold(0.0, f64::max);
    Ok(Verdict::new(
        biased.passed && unbiased,
        format!(
            "bias 0.2: {}; bias 0: {ordered}/{count} seeds with aligned order >= 0.9 (need >= 80%, best {best:.3})",
            biased.detail
        ),
    ))
}

fn epochs_text(converged: Option<usize>) -> String {
    converged.map_or_else(|| "no".to_string(), |e| (e + 1).to_string())
}

/// Attractor and budget/sparsity criteria share one converged run.
fn criteria_2_and_3() -> Result<(Verdict, Verdict)> {
    let config = SelfOrgConfig::default();
    let tolerance = config.tolerance_value();
    let mut fan_in = Vec::new();
    let (field, trace) = run_selforg_from(&config, config.initial_field()?, 0, |m, _| {
        fan_in.push((m.epoch, m.mean_fan_in));
        Ok(())
    })?;
    let continued = SelfOrgConfig {
        epochs: 5,
        stop_on_convergence: false,
        ..config.clone()
    };
    let (field_after, tail) = run_selforg_from(&continued, field, trace.epochs.len(), |m, _| {
        fan_in.push((m.epoch, m.mean_fan_in));
        Ok(())
    })?;
    let max_dw = tail.epochs.iter().map(|m| m.dw_l1).fold(0.0, f64::max);
    let stationary = trace.converged && tail.epochs.len() == 5 && max_dw < tolerance;

    let identity = SelfOrgConfig {
        init: InitKind::Identity,
        ..SelfOrgConfig::default()
    };
    let (id_field, id_trace) = run_selforg(&identity)?;
    let id_order = netfrag_core::selforg::affine_order(&id_field)?;
    let id_epoch = id_trace.converged_epoch.map(|e| e + 1);
    let identity_ok = id_epoch.is_some_and(|e| e <= 3) && id_order == 1.0;
    let c2 = Verdict::new(
        stationary && identity_ok,
        format!(
            "converged after {} epochs, max dW over 5 more epochs {max_dw:.4} (< {tolerance}); identity converged after {} epochs (<= 3) with order {id_order}",
            epochs_text(trace.converged_epoch),
            epochs_text(id_trace.converged_epoch)
        ),
    );

    let budget = trace.max_budget_error.max(tail.max_budget_error);
    let cap_ok = field_after.max_fan_in() <= config.fan_in_cap && trace.max_fan_in <= config.fan_in_cap;
    let pruned: Vec<f64> = fan_in
        .iter()
        .filter(|(e, _)| *e >= config.prune_start_epoch)
        .map(|(_, f)| *f)
        .collect();
    let monotone = pruned.windows(2).all(|w| w[1] <= w[0]);
    let c3 = Verdict::new(
        budget <= 1e-9 && cap_ok && monotone,
        format!(
            "max budget error {budget:.2e} (<= 1e-9), max fan-in {} (<= {}), mean fan-in non-increasing over {} pruned epochs: {monotone}",
            field_after.max_fan_in(),
            config.fan_in_cap,
            pruned.len()
        ),
    );
    Ok((c2, c3))
}

/// Files whose bytes must repeat: metrics, events, summary and snapshots.
fn artifact_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).into_iter().flatten().flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if !matches!(
                path.file_name().and_then(|n| n.to_str()),
                Some("run.json") | Some("config.resolved")
            ) {
                out.push(path.strip_prefix(dir).map(Path::to_path_buf).unwrap_or(path));
            }
        }
    }
    out.sort();
    out
}

fn criterion_8(first: &Path, second: &Path, kinds: &[ExperimentKind]) -> Result<Verdict> {
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for kind in kinds {
        let (a, b) = (first.join(kind.name()), second.join(kind.name()));
        run_kind(*kind, &b)?;
        let (fa, fb) = (artifact_files(&a), artifact_files(&b));
        if fa != fb || fa.is_empty() {
            mismatched.push(format!("{kind}: file sets differ"));
            continue;
        }
        for f in &fa {
            compared += 1;
            if fs::read(a.join(f))? != fs::read(b.join(f))? {
                mismatched.push(format!("{kind}: {}", f.display()));
            }
        }
    }
    Ok(Verdict::new(
        mismatched.is_empty(),
        format!(
            "{compared} artifact files compared across repeated runs of {} kinds; mismatches: {}",
            kinds.len(),
            if mismatched.is_empty() { "none".to_string() } else { mismatched.join("; ") }
        ),
    ))
}

fn verdict_or_error(result: Result<Verdict>) -> Verdict {
    result.unwrap_or_else(|e| Verdict::new(false, format!("hard error: {e}")))
}

fn main() {
    let root = tempfile::tempdir().expect("temporary directory");
    let (first, second) = (root.path().join("first"), root.path().join("second"));
    let kind_run = |kind: ExperimentKind, limit: Option<f64>| {
        verdict_or_error(
            run_kind(kind, &first.join(kind.name())).map(|(summary, t)| experiment_verdict(&summary, t, limit)),
        )
    };
    let mut verdicts = Vec::new();
    verdicts.push(("retinotopic self-organization", verdict_or_error(criterion_1(&first.join("retinotopy")))));
    let (c2, c3) = criteria_2_and_3().unwrap_or_else(|e| {
        let v = || Verdict::new(false, format!("hard error: {e}"));
        (v(), v())
    });
    verdicts.push(("attractor property", c2));
    verdicts.push(("budget and sparsity invariants", c3));
    verdicts.push(("fragment statistics", kind_run(ExperimentKind::Fragments, Some(300.0))));
    verdicts.push(("figure-ground", kind_run(ExperimentKind::Segment, None)));
    verdicts.push(("collective selection", kind_run(ExperimentKind::Select, None)));
    verdicts.push(("one-shot invariant recognition", kind_run(ExperimentKind::Match, Some(180.0))));
    verdicts.push((
        "end-to-end determinism",
        verdict_or_error(criterion_8(&first, &second, &ExperimentKind::ALL)),
    ));

    println!();
    let mut passed = 0;
    for (i, (name, v)) in verdicts.iter().enumerate() {
        passed += usize::from(v.passed);
        println!(
            "criterion {} {name}: {} | {}",
            i + 1,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {passed}/{} criteria passed", verdicts.len());
}
