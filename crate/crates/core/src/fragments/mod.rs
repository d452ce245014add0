//! Net fragments in a model visual field.
//!
//! Images are encoded by a fixed bank of 3x3 feature filters into a sheet of
//! (pixel, feature) units. Lateral excitatory weights between nearby units are
//! learned from co-activation over a corpus. Perception starts from an
//! exuberant activation and silences units under a rising global threshold
//! until only mutually supporting units remain. The survivors, grouped by
//! strong links, give recurring net fragments, coherent nets for
//! figure-ground, and a winner when two stored patterns compete.

pub mod features;
pub mod field;
pub mod library;
pub mod nets;
pub mod segment;
pub mod settle;

use serde::Serialize;

pub use features::{exuberant_init, feature_encode, feature_sheet, FeatureBank, BRIGHT, DARK, FEATURE_COUNT};
pub use field::{initial_activity, lateral_learn, lateral_learn_observed, CorticalField};
pub use library::{
    extract_fragments, library_from_str, library_to_string, reactivation_jaccard, read_library, write_library, Member,
    NetFragment,
};
pub use nets::{coherent_components, CoherentNet};
pub use segment::{
    ambiguous_input, figure_ground, mask_iou, net_selection, pattern_drive, FigureGround, SelectionOutcome,
};
pub use settle::{settle_fragments, SettleOutcome, ThresholdSchedule};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FragmentConfig {
    /// Lateral radius in nodes.
    pub radius: f64,
    /// Incoming lateral weight sum per unit.
    pub budget: f64,
    pub fan_in_cap: usize,
    pub learning_rate: f64,
    pub prune_every: usize,
    /// Fraction of features per node in the exuberant activation.
    pub exuberance: f64,
    pub shuffle_seed: u64,
    pub schedule: ThresholdSchedule,
    /// Minimum link weight joining two units of a net; `None` means
    /// `0.5 * budget / fan_in_cap`.
    pub w_support: Option<f64>,
    /// Canonical-set Jaccard at which pieces count as the same fragment.
    pub merge_jaccard: f64,
    /// Minimum number of images a fragment must occur in.
    pub min_count: usize,
    pub min_size: usize,
    pub max_size: usize,
    /// Tile side in nodes for cutting oversized components.
    pub tile: usize,
    /// Translation search range of re-evocation scoring.
    pub max_shift: usize,
}

impl Default for FragmentConfig {
    fn default() -> Self {
        Self {
            radius: 3.0,
            budget: 1.0,
            fan_in_cap: 12,
            learning_rate: 0.1,
            prune_every: 10,
            exuberance: 0.1,
            shuffle_seed: 1,
            schedule: ThresholdSchedule::default(),
            w_support: None,
            merge_jaccard: 0.6,
            min_count: 3,
            min_size: 5,
            max_size: 60,
            tile: 4,
            max_shift: 2,
        }
    }
}

impl FragmentConfig {
    pub fn support_threshold(&self) -> f64 {
        self.w_support
            .unwrap_or(0.5 * self.budget / self.fan_in_cap as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius >= 1.0 && self.radius.is_finite()) {
            return invalid(format!("radius {} must be >= 1", self.radius));
        }
        if !(self.budget > 0.0 && self.learning_rate > 0.0) {
            return invalid("budget and learning_rate must be > 0");
        }
        if self.fan_in_cap == 0 || self.prune_every == 0 || self.tile == 0 {
            return invalid("fan_in_cap, prune_every and tile must be >= 1");
        }
        if !(self.exuberance > 0.0 && self.exuberance <= 1.0) {
            return invalid(format!("exuberance {} must lie in (0, 1]", self.exuberance));
        }
        if !(self.support_threshold() >= 0.0) {
            return invalid("w_support must be >= 0");
        }
        if !(self.merge_jaccard > 0.0 && self.merge_jaccard <= 1.0) {
            return invalid("merge_jaccard must lie in (0, 1]");
        }
        if self.min_size == 0 || self.min_size > self.max_size {
            return invalid("fragment size bounds need 1 <= min_size <= max_size");
        }
        self.schedule.validate()
    }
}
