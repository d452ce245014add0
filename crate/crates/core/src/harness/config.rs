//! Experiment configuration files.
//!
//! The format is flat sectioned `key = value` text:
//!
//! ```text
//! # comment
//! kind = match
//! seed = 7
//!
//! [match]
//! queries = 100
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. A `[name]` line opens
//! a section and later keys are read as `name.key`; keys before the first
//! section are top-level. Keys may also be written fully qualified
//! (`match.queries = 100`) anywhere before the first section. Every key may
//! appear once, and unknown keys are errors. Lists are comma-separated and
//! optional numbers accept `auto`.
//!
//! The top-level `seed` sets the seed of the section that drives the chosen
//! experiment kind: `selforg.seed` for retinotopy, `corpus.seed` for
//! fragments, `segment.seed`, `select.seed` and `match.seed`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::textures::TextureKind;
use crate::error::{NetfragError, Result};
use crate::fragments::FragmentConfig;
use crate::maplets::RelaxParams;
use crate::selforg::{InitKind, SelfOrgConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Retinotopy,
    Fragments,
    Segment,
    Select,
    Match,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [Self::Retinotopy, Self::Fragments, Self::Segment, Self::Select, Self::Match];

    pub fn name(self) -> &'static str {
        match self {
            Self::Retinotopy => "retinotopy",
            Self::Fragments => "fragments",
            Self::Segment => "segment",
            Self::Select => "select",
            Self::Match => "match",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = NetfragError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| NetfragError::InvalidArgument(format!("unknown experiment kind {s:?}")))
    }
}

/// Texture corpus used to train the cortical field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusConfig {
    /// Image `i` shows texture `i % 4` in [`TextureKind::ALL`] order.
    pub images: usize,
    pub size: usize,
    pub jitter: f64,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            images: 200,
            size: 32,
            jitter: 0.1,
            seed: 42,
        }
    }
}

/// Object-on-background scenes for figure-ground.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentConfig {
    pub scenes: usize,
    pub size: usize,
    pub min_side: usize,
    pub max_side: usize,
    pub margin: usize,
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            scenes: 50,
            size: 32,
            min_side: 10,
            max_side: 14,
            margin: 4,
            jitter: 0.1,
            seed: 7,
        }
    }
}

/// Ambiguous two-pattern inputs for collective selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectConfig {
    pub trials: usize,
    /// Input biases in favour of the first pattern; every trial runs at each.
    pub biases: Vec<f64>,
    pub size: usize,
    pub jitter: f64,
    /// Trial `t` draws from stream `seed + t`.
    pub seed: u64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            trials: 20,
            biases: vec![0.2, 0.0],
            size: 32,
            jitter: 0.1,
            seed: 0,
        }
    }
}

/// Sprite store and query set for recognition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchConfig {
    /// Number of stored sprites, taken in file order.
    pub models: usize,
    pub size: usize,
    pub background: TextureKind,
    pub background_level: f64,
    pub jitter: f64,
    pub queries: usize,
    /// Largest per-axis offset of a query from the centred placement.
    pub max_shift: usize,
    pub query_scales: Vec<f64>,
    pub noise_trials: usize,
    /// Best quality below which a query counts as rejected.
    pub tau_rej: f64,
    pub seed: u64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            models: 10,
            size: 40,
            background: TextureKind::Dots,
            background_level: 0.0,
            jitter: 0.02,
            queries: 100,
            max_shift: 8,
            query_scales: vec![0.8, 1.0, 1.25],
            noise_trials: 100,
            tau_rej: 0.4,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub out: Option<PathBuf>,
    /// Epochs between weight snapshots; 0 keeps only the final one.
    pub snapshot_every: usize,
    pub selforg: SelfOrgConfig,
    pub fragments: FragmentConfig,
    pub corpus: CorpusConfig,
    pub segment: SegmentConfig,
    pub select: SelectConfig,
    pub matching: MatchConfig,
    pub relax: RelaxParams,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            out: None,
            snapshot_every: 10,
            selforg: SelfOrgConfig::default(),
            fragments: FragmentConfig::default(),
            corpus: CorpusConfig::default(),
            segment: SegmentConfig::default(),
            select: SelectConfig::default(),
            matching: MatchConfig::default(),
            relax: RelaxParams::default(),
        }
    }

    /// Seed of the section that drives the configured kind.
    pub fn seed(&self) -> u64 {
        match self.kind {
            ExperimentKind::Retinotopy => self.selforg.seed,
            ExperimentKind::Fragments => self.corpus.seed,
            ExperimentKind::Segment => self.segment.seed,
            ExperimentKind::Select => self.select.seed,
            ExperimentKind::Match => self.matching.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self.kind {
            ExperimentKind::Retinotopy => self.selforg.seed = seed,
            ExperimentKind::Fragments => self.corpus.seed = seed,
            ExperimentKind::Segment => self.segment.seed = seed,
            ExperimentKind::Select => self.select.seed = seed,
            ExperimentKind::Match => self.matching.seed = seed,
        }
    }

    /// Parses a config file. `kind` is required unless supplied by the
    /// caller; a file kind that disagrees with the caller's is an error.
    pub fn parse(text: &str, kind: Option<ExperimentKind>) -> Result<Self> {
        let entries = parse_entries(text)?;
        let declared = match entries.get("kind") {
            Some(v) => Some(v.parse::<ExperimentKind>().map_err(|e| config_error("kind", e.to_string()))?),
            None => None,
        };
        let kind = match (declared, kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(config_error("kind", format!("file declares {a} but {b} was requested")));
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(config_error("kind", "missing experiment kind")),
        };
        let mut config = Self::new(kind);
        let mut seed = None;
        for (key, value) in &entries {
            match key.as_str() {
                "kind" => {}
                "seed" => seed = Some(value.parse::<u64>().map_err(|e| config_error(key, e.to_string()))?),
                _ => config.assign(key, value)?,
            }
        }
        if let Some(s) = seed {
            config.set_seed(s);
        }
        config.validate()?;
        Ok(config)
    }

    /// Sets one fully qualified key from its text value.
    pub fn assign(&mut self, key: &str, value: &str) -> Result<()> {
        let mut found = false;
        let mut outcome = Ok(());
        self.visit(&mut |name, slot| {
            if name == key {
                found = true;
                outcome = slot.assign(value);
            }
        });
        if !found {
            return Err(config_error(key, "unknown key"));
        }
        outcome.map_err(|message| config_error(key, message))
    }

    /// Range checks for every section.
    pub fn validate(&self) -> Result<()> {
        let section = |name: &str, r: Result<()>| r.map_err(|e| config_error(name, e.to_string()));
        section("selforg", self.selforg.validate())?;
        section("fragments", self.fragments.validate())?;
        section("relax", self.relax.validate())?;
        let c = &self.corpus;
        check("corpus.images", c.images >= 4, "must be >= 4")?;
        check("corpus.size", c.size >= 16, "must be >= 16")?;
        check("corpus.jitter", (0.0..=1.0).contains(&c.jitter), "must lie in [0, 1]")?;
        let s = &self.segment;
        check("segment.size", s.size >= 16, "must be >= 16")?;
        check("segment.jitter", (0.0..=1.0).contains(&s.jitter), "must lie in [0, 1]")?;
        check(
            "segment.max_side",
            s.min_side >= 1 && s.min_side <= s.max_side && s.max_side + 2 * s.margin <= s.size,
            "needs 1 <= min_side <= max_side and max_side + 2 margin <= size",
        )?;
        let t = &self.select;
        check("select.size", t.size >= 16, "must be >= 16")?;
        check("select.jitter", (0.0..=1.0).contains(&t.jitter), "must lie in [0, 1]")?;
        check("select.biases", t.biases.iter().all(|b| (0.0..1.0).contains(b)), "biases must lie in [0, 1)")?;
        let m = &self.matching;
        check("match.models", (1..=super::SPRITE_COUNT).contains(&m.models), "must lie in 1..=10")?;
        check("match.jitter", (0.0..=1.0).contains(&m.jitter), "must lie in [0, 1]")?;
        check("match.background_level", (0.0..=1.0).contains(&m.background_level), "must lie in [0, 1]")?;
        check("match.tau_rej", (0.0..=1.0).contains(&m.tau_rej), "must lie in [0, 1]")?;
        check(
            "match.query_scales",
            !m.query_scales.is_empty() && m.query_scales.iter().all(|s| *s > 0.0 && s.is_finite()),
            "must be a non-empty list of positive numbers",
        )?;
        let largest = m.query_scales.iter().fold(1.0_f64, |a, b| a.max(*b));
        let side = super::sprites::scaled_side(largest);
        check(
            "match.max_shift",
            side + 2 * m.max_shift <= m.size,
            "largest query sprite shifted by max_shift must fit the scene",
        )?;
        Ok(())
    }

    /// Every key except `out`, sorted, with its resolved value.
    pub fn canonical_entries(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let mut this = self.clone();
        this.visit(&mut |name, slot| {
            if name != "out" {
                out.insert(name.to_string(), slot.render());
            }
        });
        out
    }

    /// Lowercase hex SHA-256 of the canonical entries, one `key=value` line
    /// each in key order.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.canonical_entries() {
            hasher.update(format!("{k}={v}\n").as_bytes());
        }
        hex::encode(hasher.finalize())
    }

    /// Fully resolved config in the file grammar; parsing it back yields an
    /// equal config.
    pub fn resolved_text(&self) -> String {
        let mut text = String::new();
        let mut current = String::new();
        let mut this = self.clone();
        this.visit(&mut |name, slot| {
            let (section, key) = name.split_once('.').unwrap_or(("", name));
            if name == "out" && slot.render().is_empty() {
                return;
            }
            if section != current {
                text.push_str(&format!("\n[{section}]\n"));
                current = section.to_string();
            }
            text.push_str(&format!("{key} = {}\n", slot.render()));
        });
        text
    }

    fn visit(&mut self, f: &mut dyn FnMut(&str, &mut dyn ConfigValue)) {
        f("kind", &mut self.kind);
        f("out", &mut self.out);
        f("snapshot_every", &mut self.snapshot_every);

        let s = &mut self.selforg;
        f("selforg.retina_rows", &mut s.retina_rows);
        f("selforg.retina_cols", &mut s.retina_cols);
        f("selforg.tectum_rows", &mut s.tectum_rows);
        f("selforg.tectum_cols", &mut s.tectum_cols);
        f("selforg.learning_rate", &mut s.learning_rate);
        f("selforg.learning_rate_final", &mut s.learning_rate_final);
        f("selforg.learning_rate_decay_epochs", &mut s.learning_rate_decay_epochs);
        f("selforg.budget", &mut s.budget);
        f("selforg.blob_radius", &mut s.blob_radius);
        f("selforg.settle_steps", &mut s.settle_steps);
        f("selforg.mass_cap", &mut s.mass_cap);
        f("selforg.epochs", &mut s.epochs);
        f("selforg.events_per_epoch", &mut s.events_per_epoch);
        f("selforg.exc_amp", &mut s.exc_amp);
        f("selforg.exc_radius", &mut s.exc_radius);
        f("selforg.inh_radius", &mut s.inh_radius);
        f("selforg.inhibition_start", &mut s.inhibition.start);
        f("selforg.inhibition_end", &mut s.inhibition.end);
        f("selforg.inhibition_ramp_epochs", &mut s.inhibition.ramp_epochs);
        f("selforg.init", &mut s.init);
        f("selforg.polarity_bias", &mut s.polarity_bias);
        f("selforg.init_noise", &mut s.init_noise);
        f("selforg.fan_in_cap", &mut s.fan_in_cap);
        f("selforg.prune_threshold", &mut s.prune_threshold);
        f("selforg.prune_start_epoch", &mut s.prune_start_epoch);
        f("selforg.tolerance", &mut s.tolerance);
        f("selforg.stop_on_convergence", &mut s.stop_on_convergence);
        f("selforg.seed", &mut s.seed);

        let g = &mut self.fragments;
        f("fragments.radius", &mut g.radius);
        f("fragments.budget", &mut g.budget);
        f("fragments.fan_in_cap", &mut g.fan_in_cap);
        f("fragments.learning_rate", &mut g.learning_rate);
        f("fragments.prune_every", &mut g.prune_every);
        f("fragments.exuberance", &mut g.exuberance);
        f("fragments.shuffle_seed", &mut g.shuffle_seed);
        f("fragments.theta0", &mut g.schedule.theta0);
        f("fragments.theta_growth", &mut g.schedule.growth);
        f("fragments.theta_max", &mut g.schedule.theta_max);
        f("fragments.settle_max_steps", &mut g.schedule.max_steps);
        f("fragments.lambda", &mut g.schedule.lambda);
        f("fragments.w_support", &mut g.w_support);
        f("fragments.merge_jaccard", &mut g.merge_jaccard);
        f("fragments.min_count", &mut g.min_count);
        f("fragments.min_size", &mut g.min_size);
        f("fragments.max_size", &mut g.max_size);
        f("fragments.tile", &mut g.tile);
        f("fragments.max_shift", &mut g.max_shift);

        let c = &mut self.corpus;
        f("corpus.images", &mut c.images);
        f("corpus.size", &mut c.size);
        f("corpus.jitter", &mut c.jitter);
        f("corpus.seed", &mut c.seed);

        let c = &mut self.segment;
        f("segment.scenes", &mut c.scenes);
        f("segment.size", &mut c.size);
        f("segment.min_side", &mut c.min_side);
        f("segment.max_side", &mut c.max_side);
        f("segment.margin", &mut c.margin);
        f("segment.jitter", &mut c.jitter);
        f("segment.seed", &mut c.seed);

        let c = &mut self.select;
        f("select.trials", &mut c.trials);
        f("select.biases", &mut c.biases);
        f("select.size", &mut c.size);
        f("select.jitter", &mut c.jitter);
        f("select.seed", &mut c.seed);

        let c = &mut self.matching;
        f("match.models", &mut c.models);
        f("match.size", &mut c.size);
        f("match.background", &mut c.background);
        f("match.background_level", &mut c.background_level);
        f("match.jitter", &mut c.jitter);
        f("match.queries", &mut c.queries);
        f("match.max_shift", &mut c.max_shift);
        f("match.query_scales", &mut c.query_scales);
        f("match.noise_trials", &mut c.noise_trials);
        f("match.tau_rej", &mut c.tau_rej);
        f("match.seed", &mut c.seed);

        let r = &mut self.relax;
        f("relax.scales", &mut r.scales);
        f("relax.iterations", &mut r.iterations);
        f("relax.eta", &mut r.eta);
        f("relax.beta", &mut r.beta);
        f("relax.epsilon0", &mut r.epsilon0);
        f("relax.tolerance", &mut r.tolerance);
        f("relax.k", &mut r.k);
    }
}

impl FromStr for ExperimentConfig {
    type Err = NetfragError;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, None)
    }
}

fn config_error(key: &str, message: impl Into<String>) -> NetfragError {
    NetfragError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn check(key: &str, ok: bool, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(config_error(key, message))
    }
}

/// Splits config text into fully qualified keys and raw values.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut entries = BTreeMap::new();
    let mut section: Option<String> = None;
    let mut seen_sections = BTreeSet::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = format!("line {}", number + 1);
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty() && !n.contains(['.', '=', '[', ']']))
                .ok_or_else(|| config_error(&at, format!("malformed section header {line:?}")))?;
            if !seen_sections.insert(name.to_string()) {
                return Err(config_error(name, "section appears twice"));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_error(&at, format!("expected key = value, found {line:?}")))?;
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(config_error(&at, format!("malformed key {key:?}")));
        }
        let full = match &section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        if entries.insert(full.clone(), value.trim().to_string()).is_some() {
            return Err(config_error(&full, "duplicate key"));
        }
    }
    Ok(entries)
}

trait ConfigValue {
    fn render(&self) -> String;
    fn assign(&mut self, text: &str) -> std::result::Result<(), String>;
}

fn parse_f64(text: &str) -> std::result::Result<f64, String> {
    let v: f64 = text.parse().map_err(|_| format!("expected a number, found {text:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite number, found {text:?}"))
    }
}

impl ConfigValue for f64 {
    fn render(&self) -> String {
        self.to_string()
    }

    fn assign(&mut self, text: &str) -> std::result::Result<(), String> {
        *self = parse_f64(text)?;
        Ok(())
    }
}

macro_rules! integer_value {
    ($($t:ty),*) => {$(
        impl ConfigValue for $t {
            fn render(&self) -> String {
                self.to_string()
            }

            fn assign(&mut self, text: &str) -> std::result::Result<(), String> {
                *self = text.parse().map_err(|_| format!("expected a nonnegative integer, found {text:?}"))?;
                Ok(())
            }
        }
    )*};
}

integer_value!(usize, u64);

impl ConfigValue for bool {
    fn render(&self) -> String {
        self.to_string()
    }

    fn assign(&mut self, text: &str) -> std::result::Result<(), String> {
        *self = text.parse().map_err(|_| format!("expected true or false, found {text:?}"))?;
        Ok(())
    }
}

impl ConfigValue for Option<f64> {
    fn render(&self) -> String {
        self.map_or_else(|| "auto".to_string(), |v| v.to_string())
    }

    fn assign(&mut self, text: &str) -> std::result::Result<(), String> {
        *self = if text == "auto" { None } else { Some(parse_f64(text)?) };
        Ok(())
    }
}

impl ConfigValue for Vec<f64> {
    fn render(&self) -> String {
        self.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
    }

    fn assign(&mut self, text: &str) -> std::result::Result<(), String> {
        *self = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(parse_f64)
            .collect::<std::result::Result<_, _>>()?;
        Ok(())
    }
}

impl ConfigValue for Option<PathBuf> {
    fn render(&self) -> String {
        self.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
    }

    fn assign(&mut self, text: &str) -> std::result::Result<(), String> {
        *self = (!text.is_empty()).then(|| PathBuf::from(text));
        Ok(())
    }
}

impl ConfigValue for ExperimentKind {
    fn render(&self) -> String {
        self.name().to_string()
    }

    fn assign(&mut self, text: &str) -> std::result::Result<(), String> {
        *self = text.parse().map_err(|e: NetfragError| e.to_string())?;
        Ok(())
    }
}

impl ConfigValue for TextureKind {
    fn render(&self) -> String {
        self.name().to_string()
    }

    fn assign(&mut self, text: &str) -> std::result::Result<(), String> {
        *self = text.parse().map_err(|e: NetfragError| e.to_string())?;
        Ok(())
    }
}

impl ConfigValue for InitKind {
    fn render(&self) -> String {
        match self {
            InitKind::Uniform => "uniform",
            InitKind::Polarity => "polarity",
            InitKind::Identity => "identity",
        }
        .to_string()
    }

    fn assign(&mut self, text: &str) -> std::result::Result<(), String> {
        *self = match text {
            "uniform" => InitKind::Uniform,
            "polarity" => InitKind::Polarity,
            "identity" => InitKind::Identity,
            _ => return Err(format!("expected uniform, polarity or identity, found {text:?}")),
        };
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_qualified_keys_agree() {
        let a = ExperimentConfig::parse("kind = match\n[match]\nqueries = 12\n", None).unwrap();
        let b = ExperimentConfig::parse("kind = match\nmatch.queries = 12\n", None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matching.queries, 12);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::parse("kind = retinotopy\n[selforg]\nalpa = 1\n", None).unwrap_err();
        assert!(err.to_string().contains("alpa"), "{err}");
    }

    #[test]
    fn duplicate_key_and_bad_value_rejected() {
        let dup = ExperimentConfig::parse("kind = select\nselect.trials = 2\n[select]\ntrials = 3\n", None);
        assert!(dup.unwrap_err().to_string().contains("select.trials"));
        let bad = ExperimentConfig::parse("kind = select\n[select]\ntrials = -1\n", None);
        assert!(bad.unwrap_err().to_string().contains("select.trials"));
        let range = ExperimentConfig::parse("kind = match\n[match]\nmax_shift = 30\n", None);
        assert!(range.unwrap_err().to_string().contains("match.max_shift"));
    }

    #[test]
    fn kind_conflicts_and_absence_are_errors() {
        assert!(ExperimentConfig::parse("kind = match\n", Some(ExperimentKind::Select)).is_err());
        assert!(ExperimentConfig::parse("", None).is_err());
        let c = ExperimentConfig::parse("", Some(ExperimentKind::Segment)).unwrap();
        assert_eq!(c.kind, ExperimentKind::Segment);
    }

    #[test]
    fn global_seed_targets_the_active_section() {
        let c = ExperimentConfig::parse("kind = fragments\nseed = 9\n", None).unwrap();
        assert_eq!((c.corpus.seed, c.selforg.seed), (9, 1));
        assert_eq!(c.seed(), 9);
    }

    #[test]
    fn resolved_text_round_trips() {
        let mut c = ExperimentConfig::new(ExperimentKind::Retinotopy);
        c.selforg.tolerance = Some(0.25);
        c.relax.scales = vec![0.5, 2.0];
        c.out = Some(PathBuf::from("somewhere"));
        let back = ExperimentConfig::parse(&c.resolved_text(), None).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn hash_ignores_output_directory() {
        let mut c = ExperimentConfig::new(ExperimentKind::Match);
        let h = c.hash();
        c.out = Some(PathBuf::from("elsewhere"));
        assert_eq!(c.hash(), h);
        c.matching.queries = 5;
        assert_ne!(c.hash(), h);
    }
}
