//! Experiment plumbing: stimulus generators, configuration files, oracles
//! and experiment runs.

pub mod config;
pub mod experiments;
pub mod oracle;
pub mod pnm;
pub mod run;
pub mod sprites;
pub mod textures;

pub use config::{CorpusConfig, ExperimentConfig, ExperimentKind, MatchConfig, SegmentConfig, SelectConfig};
pub use experiments::{
    build_sprite_store, evoke, fragments_experiment, generate_corpus, match_experiment, retinotopy_experiment,
    segment_experiment, select_experiment, train_field, Check, Corpus, FragmentsOutcome, MatchOutcome, QueryRecord,
    RetinotopyOutcome, SegmentOutcome, SelectOutcome, SpriteStore,
};
pub use oracle::oracle_cross_correlation;
pub use pnm::{decode_pgm, encode_pbm, encode_pgm, read_pgm, write_pbm, write_pgm};
pub use run::{output_dir, read_summary, run_experiment, RunRecord, OUTPUT_ROOT_VAR};
pub use sprites::{noise_image, scaled_sprite, sprites, Sprite, SpriteScene, SPRITE_COUNT, SPRITE_SIDE};
pub use textures::{generate_object_scene, generate_texture_mosaic, random_rect, Rect, TextureKind};
