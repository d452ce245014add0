//! `netfrag`: runs the reference experiments and the fragment and matching
//! tools from the command line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netfrag_core::fragments::{reactivation_jaccard, read_library, CorticalField};
use netfrag_core::harness::{
    build_sprite_store, evoke, output_dir, read_pgm, run_experiment, ExperimentConfig, ExperimentKind, RunRecord,
};
use netfrag_core::maplets::{recognize, ModelStore};
use netfrag_core::substrate::read_snapshot;
use netfrag_core::{NetfragError, Result};

#[derive(Parser)]
#[command(name = "netfrag", version, about = "Deterministic network self-organization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed of the section driving the experiment.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Epochs between weight snapshots; 0 keeps only the final one.
    #[arg(long)]
    snapshot_every: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Retina-to-tectum map formation.
    Retinotopy(RunArgs),
    /// Net-fragment tools; `train` runs the fragment statistics experiment.
    Fragments {
        #[arg(value_enum, default_value = "train")]
        action: FragmentAction,
        #[command(flatten)]
        run: RunArgs,
        /// Lateral weight snapshot (`evoke`).
        #[arg(long, required_if_eq("action", "evoke"))]
        field: Option<PathBuf>,
        /// Fragment library (`evoke`).
        #[arg(long, required_if_eq("action", "evoke"))]
        library: Option<PathBuf>,
        /// Graymap input (`evoke`).
        #[arg(long, required_if_eq("action", "evoke"))]
        image: Option<PathBuf>,
    },
    /// Figure-ground segmentation of object scenes.
    Segment(RunArgs),
    /// Collective selection between two ambiguous patterns.
    Select(RunArgs),
    /// Sprite recognition; `run` is the full query experiment.
    Match {
        #[arg(value_enum, default_value = "run")]
        action: MatchAction,
        #[command(flatten)]
        run: RunArgs,
        /// Model store (`query`).
        #[arg(long, required_if_eq("action", "query"))]
        store: Option<PathBuf>,
        /// Graymap query image (`query`).
        #[arg(long, required_if_eq("action", "query"))]
        image: Option<PathBuf>,
    },
    /// Runs every config matching a glob, several at a time.
    Sweep {
        #[arg(long)]
        configs: String,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FragmentAction {
    Train,
    Evoke,
    Segment,
    Select,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MatchAction {
    Run,
    Store,
    Query,
}

fn load_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::parse(&fs::read_to_string(path)?, Some(kind))?,
        None => ExperimentConfig::new(kind),
    };
    if let Some(seed) = args.seed {
        config.set_seed(seed);
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    if let Some(k) = args.snapshot_every {
        config.snapshot_every = k;
    }
    config.validate()?;
    Ok(config)
}

fn report(record: &RunRecord) {
    println!(
        "{} accepted={} config_hash={} out={}",
        record.kind,
        record.accepted,
        &record.config_hash[..12],
        record.out_dir.display()
    );
}

fn run(kind: ExperimentKind, args: &RunArgs) -> Result<()> {
    let record = run_experiment(&load_config(kind, args)?)?;
    report(&record);
    Ok(())
}

fn prepared_out(config: &ExperimentConfig) -> Result<PathBuf> {
    let dir = output_dir(config);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn fragments_evoke(args: &RunArgs, field: &Path, library: &Path, image: &Path) -> Result<()> {
    let config = load_config(ExperimentKind::Fragments, args)?;
    let cortical = CorticalField::from_lateral(read_snapshot(field)?, config.fragments.radius)?;
    let library = read_library(library)?;
    let stable = evoke(&read_pgm(image)?, &cortical, &config.fragments)?;
    let sheet = *cortical.sheet();
    let dir = prepared_out(&config)?;
    let mut units = String::from("unit,row,col,feature\n");
    for &u in &stable {
        let (row, col) = sheet.unit_coords(u);
        let _ = writeln!(units, "{u},{row},{col},{}", sheet.unit_parts(u).1);
    }
    fs::write(dir.join("stable.csv"), units)?;
    let mut table = String::from("fragment,size,count,jaccard\n");
    for f in &library {
        let j = reactivation_jaccard(f, &stable, &sheet, f.origin, config.fragments.max_shift);
        let _ = writeln!(table, "{},{},{},{j}", f.id, f.size(), f.count);
    }
    fs::write(dir.join("reactivation.csv"), table)?;
    println!("evoked {} units, scored {} fragments, out={}", stable.len(), library.len(), dir.display());
    Ok(())
}

fn match_store(args: &RunArgs) -> Result<()> {
    let config = load_config(ExperimentKind::Match, args)?;
    let store = build_sprite_store(&config.matching)?;
    let dir = prepared_out(&config)?;
    store.store.write(dir.join("models.nfm"))?;
    println!("stored {} models, out={}", store.store.len(), dir.display());
    Ok(())
}

fn match_query(args: &RunArgs, store: &Path, image: &Path) -> Result<()> {
    let config = load_config(ExperimentKind::Match, args)?;
    let store = ModelStore::read(store)?;
    let ranking = recognize(&read_pgm(image)?, &store, &config.relax)?;
    let dir = prepared_out(&config)?;
    let mut table = String::from("rank,id,label,quality,dx,dy,scale,accepted\n");
    for (rank, r) in ranking.iter().enumerate() {
        let m = &r.map;
        let accepted = m.quality >= config.matching.tau_rej;
        let _ = writeln!(
            table,
            "{rank},{},{},{},{},{},{},{accepted}",
            r.id, r.label, m.quality, m.translation.0, m.translation.1, m.scale
        );
    }
    fs::write(dir.join("ranking.csv"), table)?;
    let best = &ranking[0];
    fs::write(dir.join("map.csv"), best.map.to_csv())?;
    let verdict = if best.quality() >= config.matching.tau_rej { "match" } else { "rejected" };
    println!("{verdict}: model {} ({}) quality {:.3}, out={}", best.id, best.label, best.quality(), dir.display());
    Ok(())
}

fn sweep(pattern: &str, parallel: usize) -> Result<bool> {
    let paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| NetfragError::InvalidArgument(format!("bad glob {pattern:?}: {e}")))?
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| NetfragError::InvalidArgument(e.to_string()))?;
    if paths.is_empty() {
        return Err(NetfragError::InvalidArgument(format!("no config matches {pattern:?}")));
    }
    let configs = paths
        .iter()
        .map(|p| {
            ExperimentConfig::parse(&fs::read_to_string(p)?, None)
                .map_err(|e| NetfragError::InvalidArgument(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let next = AtomicUsize::new(0);
    let failures = Mutex::new(0usize);
    std::thread::scope(|scope| {
        for _ in 0..parallel.clamp(1, configs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(config) = configs.get(i) else { break };
                match run_experiment(config) {
                    Ok(record) => {
                        print!("{}: ", paths[i].display());
                        report(&record);
                    }
                    Err(e) => {
                        eprintln!("{}: error: {e}", paths[i].display());
                        *failures.lock().unwrap_or_else(|p| p.into_inner()) += 1;
                    }
                }
            });
        }
    });
    let failed = failures.into_inner().unwrap_or_else(|p| p.into_inner());
    Ok(failed == 0)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Retinotopy(args) => run(ExperimentKind::Retinotopy, &args)?,
        Command::Segment(args) => run(ExperimentKind::Segment, &args)?,
        Command::Select(args) => run(ExperimentKind::Select, &args)?,
        Command::Fragments {
            action,
            run: args,
            field,
            library,
            image,
        } => match (action, field, library, image) {
            (FragmentAction::Train, ..) => run(ExperimentKind::Fragments, &args)?,
            (FragmentAction::Segment, ..) => run(ExperimentKind::Segment, &args)?,
            (FragmentAction::Select, ..) => run(ExperimentKind::Select, &args)?,
            (FragmentAction::Evoke, Some(f), Some(l), Some(i)) => fragments_evoke(&args, &f, &l, &i)?,
            (FragmentAction::Evoke, ..) => {
                return Err(NetfragError::InvalidArgument("evoke needs --field, --library and --image".into()))
            }
        },
        Command::Match {
            action,
            run: args,
            store,
            image,
        } => match (action, store, image) {
            (MatchAction::Run, ..) => run(ExperimentKind::Match, &args)?,
            (MatchAction::Store, ..) => match_store(&args)?,
            (MatchAction::Query, Some(s), Some(i)) => match_query(&args, &s, &i)?,
            (MatchAction::Query, ..) => {
                return Err(NetfragError::InvalidArgument("query needs --store and --image".into()))
            }
        },
        Command::Sweep { configs, parallel } => return sweep(&configs, parallel),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("netfrag: {e}");
            ExitCode::FAILURE
        }
    }
}
