//! The five reference experiments as library calls, each returning its raw
//! records plus the scalars and threshold checks reported by a run.

use serde::Serialize;

use super::config::{CorpusConfig, MatchConfig, SegmentConfig, SelectConfig};
use super::oracle::oracle_cross_correlation;
use super::sprites::{noise_image, scaled_side, sprites, SpriteScene, SPRITE_SIDE};
use super::textures::{generate_object_scene, generate_texture_mosaic, random_rect, Rect, TextureKind};
use crate::error::Result;
use crate::fragments::{
    ambiguous_input, extract_fragments, figure_ground, initial_activity, lateral_learn, mask_iou, net_selection,
    pattern_drive, reactivation_jaccard, settle_fragments, CorticalField, FeatureBank, FigureGround, FragmentConfig,
    NetFragment,
};
use crate::maplets::{recognize, CorrespondenceMap, ModelStore, RelaxParams};
use crate::selforg::{run_selforg_from, EpochMetrics, RunTrace, SelfOrgConfig};
use crate::substrate::{Image, RngStream, WeightField};

/// One acceptance threshold applied to a reported scalar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    /// `true` for `value >= target`, `false` for `value <= target`.
    pub at_least: bool,
    pub passed: bool,
}

impl Check {
    pub fn at_least(name: &str, value: f64, target: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            target,
            at_least: true,
            passed: value >= target,
        }
    }

    pub fn at_most(name: &str, value: f64, target: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            target,
            at_least: false,
            passed: value <= target,
        }
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub struct RetinotopyOutcome {
    pub field: WeightField,
    pub trace: RunTrace,
}

impl RetinotopyOutcome {
    pub fn checks(&self, config: &SelfOrgConfig) -> Vec<Check> {
        let last = self.trace.last();
        vec![
            Check::at_least("neighbor_consistency", last.map_or(0.0, |m| m.neighbor_consistency), 0.9),
            Check::at_least("affine_order", last.map_or(0.0, |m| m.affine_order), 0.85),
            Check::at_most("epochs", self.trace.epochs.len() as f64, 200.0),
            Check::at_most("max_budget_error", self.trace.max_budget_error, 1e-9),
            Check::at_most("max_fan_in", self.trace.max_fan_in as f64, config.fan_in_cap as f64),
        ]
    }
}

/// Runs map formation from the configured initial field, handing every
/// epoch to `observer`.
pub fn retinotopy_experiment<F>(config: &SelfOrgConfig, observer: F) -> Result<RetinotopyOutcome>
where
    F: FnMut(&EpochMetrics, &WeightField) -> Result<()>,
{
    let (field, trace) = run_selforg_from(config, config.initial_field()?, 0, observer)?;
    Ok(RetinotopyOutcome { field, trace })
}

/// Texture corpus with labels indexing [`TextureKind::ALL`].
pub struct Corpus {
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
}

/// Draws the corpus from `rng`; image `i` shows texture `i % 4`.
pub fn generate_corpus(config: &CorpusConfig, rng: &mut RngStream) -> Result<Corpus> {
    let labels: Vec<usize> = (0..config.images).map(|i| i % TextureKind::ALL.len()).collect();
    let images = labels
        .iter()
        .map(|&l| generate_texture_mosaic(TextureKind::ALL[l], config.size, config.jitter, rng))
        .collect::<Result<_>>()?;
    Ok(Corpus { images, labels })
}

/// Lateral field learned from the configured corpus.
pub fn train_field(corpus: &CorpusConfig, config: &FragmentConfig) -> Result<CorticalField> {
    let mut rng = RngStream::new(corpus.seed, 11);
    lateral_learn(&generate_corpus(corpus, &mut rng)?.images, config)
}

/// Stable set evoked by `image` after settling.
pub fn evoke(image: &Image, field: &CorticalField, config: &FragmentConfig) -> Result<Vec<usize>> {
    let activity = initial_activity(image, &FeatureBank::new(), config)?;
    Ok(settle_fragments(&activity, field, &config.schedule)?.stable)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FragmentRecord {
    pub id: usize,
    pub size: usize,
    pub count: usize,
    /// Texture most of the fragment's occurrences came from.
    pub texture: TextureKind,
    /// Reactivation Jaccard against a fresh probe of each texture.
    pub jaccard: [f64; 4],
}

pub struct FragmentsOutcome {
    pub field: CorticalField,
    pub library: Vec<NetFragment>,
    pub records: Vec<FragmentRecord>,
}

impl FragmentsOutcome {
    pub fn per_texture(&self) -> [usize; 4] {
        let mut out = [0; 4];
        for r in &self.records {
            out[TextureKind::ALL.iter().position(|k| *k == r.texture).unwrap_or(0)] += 1;
        }
        out
    }

    fn split(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut same, mut cross) = (Vec::new(), Vec::new());
        for r in &self.records {
            for (t, &j) in r.jaccard.iter().enumerate() {
                if TextureKind::ALL[t] == r.texture {
                    same.push(j);
                } else {
                    cross.push(j);
                }
            }
        }
        (same, cross)
    }

    pub fn same_mean(&self) -> f64 {
        mean(self.split().0)
    }

    pub fn cross_mean(&self) -> f64 {
        mean(self.split().1)
    }

    pub fn checks(&self) -> Vec<Check> {
        let min_per_texture = self.per_texture().into_iter().min().unwrap_or(0);
        vec![
            Check::at_least("min_fragments_per_texture", min_per_texture as f64, 1.0),
            Check::at_least("same_texture_jaccard", self.same_mean(), 0.8),
            Check::at_most("cross_texture_jaccard", self.cross_mean(), 0.3),
        ]
    }
}

/// Learns the field, extracts the library and scores every fragment against
/// one fresh probe mosaic per texture drawn after the corpus from the same
/// stream.
pub fn fragments_experiment(corpus: &CorpusConfig, config: &FragmentConfig) -> Result<FragmentsOutcome> {
    let mut rng = RngStream::new(corpus.seed, 11);
    let data = generate_corpus(corpus, &mut rng)?;
    let field = lateral_learn(&data.images, config)?;
    let library = extract_fragments(&data.images, &field, config)?;
    let probes = TextureKind::ALL
        .iter()
        .map(|&k| evoke(&generate_texture_mosaic(k, corpus.size, corpus.jitter, &mut rng)?, &field, config))
        .collect::<Result<Vec<_>>>()?;
    let records = library
        .iter()
        .map(|f| {
            let mut votes = [0usize; 4];
            f.occurrences.iter().for_each(|&i| votes[data.labels[i]] += 1);
            let label = (0..4).rev().max_by_key(|&t| votes[t]).unwrap_or(0);
            let mut jaccard = [0.0; 4];
            for (t, probe) in probes.iter().enumerate() {
                jaccard[t] = reactivation_jaccard(f, probe, field.sheet(), f.origin, config.max_shift);
            }
            FragmentRecord {
                id: f.id,
                size: f.size(),
                count: f.count,
                texture: TextureKind::ALL[label],
                jaccard,
            }
        })
        .collect();
    Ok(FragmentsOutcome { field, library, records })
}

pub struct SceneRecord {
    pub figure: TextureKind,
    pub ground: TextureKind,
    pub rect: Rect,
    pub image: Image,
    pub truth: Vec<bool>,
    pub result: FigureGround,
    pub iou: f64,
}

pub struct SegmentOutcome {
    pub scenes: Vec<SceneRecord>,
}

impl SegmentOutcome {
    pub fn mean_iou(&self) -> f64 {
        mean(self.scenes.iter().map(|s| s.iou))
    }

    pub fn min_iou(&self) -> f64 {
        self.scenes.iter().map(|s| s.iou).fold(f64::INFINITY, f64::min).min(1.0)
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![Check::at_least("mean_iou", self.mean_iou(), 0.8), Check::at_least("min_iou", self.min_iou(), 0.6)]
    }
}

/// Segments scenes of one texture rectangle over a different texture.
pub fn segment_experiment(field: &CorticalField, config: &FragmentConfig, scenes: &SegmentConfig) -> Result<SegmentOutcome> {
    let mut rng = RngStream::new(scenes.seed, 3);
    let mut out = Vec::with_capacity(scenes.scenes);
    for _ in 0..scenes.scenes {
        let fg = rng.draw_index(4);
        let bg = (fg + 1 + rng.draw_index(3)) % 4;
        let rect = random_rect(scenes.size, scenes.min_side, scenes.max_side, scenes.margin, &mut rng)?;
        let (figure, ground) = (TextureKind::ALL[fg], TextureKind::ALL[bg]);
        let (image, truth) = generate_object_scene(figure, ground, rect, scenes.size, scenes.jitter, &mut rng)?;
        let result = figure_ground(&image, field, config)?;
        let iou = mask_iou(&result.mask, &truth);
        out.push(SceneRecord {
            figure,
            ground,
            rect,
            image,
            truth,
            result,
            iou,
        });
    }
    Ok(SegmentOutcome { scenes: out })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub bias: f64,
    pub trial: usize,
    /// Favoured and unfavoured textures.
    pub textures: [TextureKind; 2],
    pub pattern_sizes: [usize; 2],
    pub winner: Option<usize>,
    pub purity: f64,
    pub loser_overlap: f64,
    pub peeled: usize,
}

pub struct SelectOutcome {
    pub trials: Vec<TrialRecord>,
}

impl SelectOutcome {
    fn at(&self, bias: f64) -> impl Iterator<Item = &TrialRecord> {
        self.trials.iter().filter(move |t| t.bias == bias)
    }

    pub fn biases(&self) -> Vec<f64> {
        let mut b: Vec<f64> = Vec::new();
        for t in &self.trials {
            if !b.contains(&t.bias) {
                b.push(t.bias);
            }
        }
        b
    }

    /// Biased inputs need a pure winner in every trial, unbiased inputs a
    /// single winner.
    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        for b in self.biases() {
            let mixed = self.at(b).filter(|t| t.winner.is_none()).count();
            out.push(Check::at_most(&format!("mixed_trials@{b}"), mixed as f64, 0.0));
            if b > 0.0 {
                let purity = self.at(b).map(|t| t.purity).fold(f64::INFINITY, f64::min);
                let loser = self.at(b).map(|t| t.loser_overlap).fold(0.0, f64::max);
                out.push(Check::at_least(&format!("min_purity@{b}"), purity.min(1.0), 0.9));
                out.push(Check::at_most(&format!("max_loser_overlap@{b}"), loser, 0.1));
            }
        }
        out
    }

    pub fn favoured_wins(&self, bias: f64) -> usize {
        self.at(bias).filter(|t| t.winner == Some(0)).count()
    }
}

/// Each trial draws two different textures, settles one mosaic of each into
/// a pattern and runs selection on their blended drive at every bias.
pub fn select_experiment(field: &CorticalField, config: &FragmentConfig, select: &SelectConfig) -> Result<SelectOutcome> {
    let sheet = *field.sheet();
    let mut trials = Vec::new();
    for trial in 0..select.trials {
        let mut rng = RngStream::new(select.seed.wrapping_add(trial as u64), 21);
        let i = rng.draw_index(4);
        let j = (i + 1 + rng.draw_index(3)) % 4;
        let textures = [TextureKind::ALL[i], TextureKind::ALL[j]];
        let mut patterns = Vec::with_capacity(2);
        for kind in textures {
            let image = generate_texture_mosaic(kind, select.size, select.jitter, &mut rng)?;
            patterns.push(evoke(&image, field, config)?);
        }
        let drives = [pattern_drive(&patterns[0], sheet)?, pattern_drive(&patterns[1], sheet)?];
        for &bias in &select.biases {
            let input = ambiguous_input(&drives[0], &drives[1], bias)?;
            let o = net_selection(&input, field, [&patterns[0], &patterns[1]], config)?;
            trials.push(TrialRecord {
                bias,
                trial,
                textures,
                pattern_sizes: [patterns[0].len(), patterns[1].len()],
                winner: o.winner,
                purity: o.purity,
                loser_overlap: o.loser_overlap,
                peeled: o.peeled,
            });
        }
    }
    Ok(SelectOutcome { trials })
}

/// Stored sprites with what is needed to read maps back in pixel terms.
pub struct SpriteStore {
    pub store: ModelStore,
    /// Top-left pixel of every stored sprite.
    pub home: usize,
    /// Model-grid origin of every stored crop in the storing image's nodes.
    pub crop_origins: Vec<(usize, usize)>,
    /// Storing image cut to the sprite canvas, for the oracle.
    pub templates: Vec<Image>,
}

impl SpriteStore {
    /// Top-left sprite pixel and scale implied by a map of model `id`.
    pub fn placement(&self, id: usize, map: &CorrespondenceMap) -> (f64, f64) {
        let (cr, cc) = self.crop_origins[id];
        let home = self.home as f64;
        let s = map.scale;
        let row = map.translation.0 - s * (cr as f64 + 1.5 - home) + 1.5;
        let col = map.translation.1 - s * (cc as f64 + 1.5 - home) + 1.5;
        (row, col)
    }
}

fn scene(config: &MatchConfig, sprite: usize, translation: (i64, i64), scale: f64) -> SpriteScene {
    SpriteScene {
        sprite,
        translation,
        scale,
        size: config.size,
        background: config.background,
        background_level: config.background_level,
        jitter: config.jitter,
    }
}

/// Stores the first `models` sprites once each, centred at unit scale.
pub fn build_sprite_store(config: &MatchConfig) -> Result<SpriteStore> {
    let mut rng = RngStream::new(config.seed, 1);
    let home = (config.size - SPRITE_SIDE) / 2;
    let mut out = SpriteStore {
        store: ModelStore::new(),
        home,
        crop_origins: Vec::new(),
        templates: Vec::new(),
    };
    for id in 0..config.models {
        let (image, mask) = scene(config, id, (home as i64, home as i64), 1.0).render(&mut rng)?;
        out.store.store_model(&image, &mask, &sprites()[id].name)?;
        let size = config.size;
        let nodes = (1..size - 1).flat_map(|r| (1..size - 1).map(move |c| (r, c)));
        let on: Vec<(usize, usize)> = nodes.filter(|&(r, c)| mask[r * size + c]).map(|(r, c)| (r - 1, c - 1)).collect();
        let origin = (
            on.iter().map(|p| p.0).min().unwrap_or(0),
            on.iter().map(|p| p.1).min().unwrap_or(0),
        );
        out.crop_origins.push(origin);
        out.templates.push(image.crop(home, home, SPRITE_SIDE, SPRITE_SIDE)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub model: usize,
    pub position: (usize, usize),
    pub score: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryRecord {
    pub sprite: usize,
    pub scale: f64,
    pub translation: (i64, i64),
    pub predicted: u32,
    pub quality: f64,
    pub estimated_translation: (f64, f64),
    pub estimated_scale: f64,
    /// Euclidean distance between estimated and true top-left corner.
    pub translation_error: f64,
    pub scale_error: f64,
    /// Present for unit-scale queries.
    pub oracle: Option<OracleCheck>,
    #[serde(skip)]
    pub map: CorrespondenceMap,
}

impl QueryRecord {
    pub fn correct(&self) -> bool {
        self.predicted as usize == self.sprite
    }
}

pub struct MatchOutcome {
    pub store: SpriteStore,
    pub queries: Vec<QueryRecord>,
    /// Best quality reached on each pure-noise query.
    pub noise_quality: Vec<f64>,
    pub tau_rej: f64,
}

impl MatchOutcome {
    fn correct(&self) -> impl Iterator<Item = &QueryRecord> {
        self.queries.iter().filter(|q| q.correct())
    }

    pub fn rank1(&self) -> f64 {
        self.correct().count() as f64 / self.queries.len().max(1) as f64
    }

    pub fn mean_translation_error(&self) -> f64 {
        mean(self.correct().map(|q| q.translation_error))
    }

    pub fn mean_scale_error(&self) -> f64 {
        mean(self.correct().map(|q| q.scale_error))
    }

    /// Share of correct matches within one pixel and within 0.1 in scale.
    pub fn within_tolerance(&self) -> (f64, f64) {
        let n = self.correct().count().max(1) as f64;
        (
            self.correct().filter(|q| q.translation_error <= 1.0).count() as f64 / n,
            self.correct().filter(|q| q.scale_error <= 0.1).count() as f64 / n,
        )
    }

    pub fn oracle_agreement(&self) -> f64 {
        let checked: Vec<bool> = self.queries.iter().filter_map(|q| q.oracle.as_ref().map(|o| o.agrees)).collect();
        checked.iter().filter(|a| **a).count() as f64 / checked.len().max(1) as f64
    }

    pub fn noise_rejection(&self) -> f64 {
        let rejected = self.noise_quality.iter().filter(|q| **q < self.tau_rej).count();
        rejected as f64 / self.noise_quality.len().max(1) as f64
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_least("rank1_accuracy", self.rank1(), 0.9),
            Check::at_most("mean_translation_error", self.mean_translation_error(), 1.0),
            Check::at_most("mean_scale_error", self.mean_scale_error(), 0.1),
            Check::at_least("oracle_agreement", self.oracle_agreement(), 0.9),
            Check::at_least("noise_rejection", self.noise_rejection(), 0.95),
        ]
    }
}

/// Recognizes sprite queries and noise images against the sprite store.
/// Query `q` shows sprite `q % models` at a drawn scale, offset from the
/// centred placement by up to `max_shift` pixels per axis.
pub fn match_experiment(config: &MatchConfig, params: &RelaxParams) -> Result<MatchOutcome> {
    let store = build_sprite_store(config)?;
    let mut rng = RngStream::new(config.seed, 2);
    let span = 2 * config.max_shift + 1;
    let mut queries = Vec::with_capacity(config.queries);
    for q in 0..config.queries {
        let sprite = q % config.models;
        let scale = config.query_scales[rng.draw_index(config.query_scales.len())];
        let centre = ((config.size - scaled_side(scale)) / 2) as i64;
        let mut offset = || rng.draw_index(span) as i64 - config.max_shift as i64;
        let translation = (centre + offset(), centre + offset());
        let (image, _) = scene(config, sprite, translation, scale).render(&mut rng)?;
        let ranking = recognize(&image, &store.store, params)?;
        let best = &ranking[0];
        let estimated = store.placement(best.id as usize, &best.map);
        let translation_error =
            (estimated.0 - translation.0 as f64).hypot(estimated.1 - translation.1 as f64);
        let oracle = if scale == 1.0 {
            let mut top: Option<(usize, (usize, usize), f64)> = None;
            for (m, template) in store.templates.iter().enumerate() {
                let (at, score) = oracle_cross_correlation(template, &image)?;
                if top.map_or(true, |t| score > t.2) {
                    top = Some((m, at, score));
                }
            }
            top.map(|(model, position, score)| OracleCheck {
                model,
                position,
                score,
                agrees: model == best.id as usize
                    && (estimated.0 - position.0 as f64).hypot(estimated.1 - position.1 as f64) <= 1.0,
            })
        } else {
            None
        };
        queries.push(QueryRecord {
            sprite,
            scale,
            translation,
            predicted: best.id,
            quality: best.quality(),
            estimated_translation: estimated,
            estimated_scale: best.map.scale,
            translation_error,
            scale_error: (best.map.scale - scale).abs(),
            oracle,
            map: best.map.clone(),
        });
    }
    let mut noise_rng = RngStream::new(config.seed, 3);
    let noise_quality = (0..config.noise_trials)
        .map(|_| Ok(recognize(&noise_image(config.size, &mut noise_rng)?, &store.store, params)?[0].quality()))
        .collect::<Result<_>>()?;
    Ok(MatchOutcome {
        store,
        queries,
        noise_quality,
        tau_rej: config.tau_rej,
    })
}
