//! Lateral excitatory connectivity between feature units and its
//! statistical learning from an image corpus.

use super::features::{exuberant_init, feature_encode, feature_sheet, FeatureBank};
use super::FragmentConfig;
use crate::error::{invalid, Result};
use crate::selforg::{normalize_nonempty, prune};
use crate::substrate::{ActivityState, Image, RngStream, Sheet, WeightField};

/// Feature sheet plus short-range lateral weights between its units.
#[derive(Debug, Clone, PartialEq)]
pub struct CorticalField {
    lateral: WeightField,
    radius: f64,
}

impl CorticalField {
    pub fn new(sheet: Sheet, radius: f64) -> Result<Self> {
        if !(radius >= 1.0 && radius.is_finite()) {
            return invalid(format!("lateral radius {radius} must be >= 1"));
        }
        Ok(Self {
            lateral: WeightField::empty_lateral(sheet),
            radius,
        })
    }

    /// Wraps an existing lateral field, checking the radius bound.
    pub fn from_lateral(lateral: WeightField, radius: f64) -> Result<Self> {
        let mut field = Self::new(*lateral.post(), radius)?;
        if !lateral.is_lateral() {
            return invalid("cortical field needs a lateral weight field");
        }
        if let Some((post, pre, _)) = lateral.triples().find(|&(a, b, _)| !field.within_radius(a, b)) {
            return invalid(format!("lateral weight {pre} -> {post} exceeds radius {radius}"));
        }
        field.lateral = lateral;
        Ok(field)
    }

    pub fn sheet(&self) -> &Sheet {
        self.lateral.post()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn lateral(&self) -> &WeightField {
        &self.lateral
    }

    pub fn weight(&self, post: usize, pre: usize) -> f64 {
        self.lateral.weight(post, pre)
    }

    /// Larger of the two directed weights between `a` and `b`.
    pub fn link(&self, a: usize, b: usize) -> f64 {
        self.weight(a, b).max(self.weight(b, a))
    }

    pub fn within_radius(&self, a: usize, b: usize) -> bool {
        let s = self.sheet();
        let (ra, ca) = s.unit_coords(a);
        let (rb, cb) = s.unit_coords(b);
        let d2 = (ra as f64 - rb as f64).powi(2) + (ca as f64 - cb as f64).powi(2);
        d2 <= self.radius * self.radius
    }

    /// Largest node distance of any stored weight.
    pub fn max_link_distance(&self) -> f64 {
        let s = self.sheet();
        self.lateral
            .triples()
            .map(|(a, b, _)| {
                let (ra, ca) = s.unit_coords(a);
                let (rb, cb) = s.unit_coords(b);
                ((ra as f64 - rb as f64).powi(2) + (ca as f64 - cb as f64).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Node offsets within the lateral radius, the zero offset included.
    pub(crate) fn offsets(&self) -> Vec<(i64, i64)> {
        let reach = self.radius.floor() as i64;
        let mut out = Vec::new();
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                if ((dr * dr + dc * dc) as f64) <= self.radius * self.radius {
                    out.push((dr, dc));
                }
            }
        }
        out
    }

    /// Hebbian co-activation step: `w_uv += rate * a_u * a_v` in both
    /// directions for every pair of distinct active units within the radius.
    /// Returns the units whose incoming weights changed.
    pub fn hebbian_coactivation(&mut self, activity: &ActivityState, rate: f64) -> Result<Vec<usize>> {
        if !(rate > 0.0 && rate.is_finite()) {
            return invalid(format!("learning rate {rate} must be positive"));
        }
        if activity.sheet() != self.sheet() {
            return invalid("activity sheet does not match the cortical field");
        }
        let sheet = *self.sheet();
        let f = sheet.features();
        let a = activity.values();
        let offsets = self.offsets();
        let mut touched = Vec::new();
        for u in activity.active_set() {
            let (r, c) = sheet.unit_coords(u);
            let mut any = false;
            for &(dr, dc) in &offsets {
                let Some(node) = sheet.checked_node_id(r as i64 + dr, c as i64 + dc) else {
                    continue;
                };
                for v in node * f..(node + 1) * f {
                    if v != u && a[v] > 0.0 {
                        self.lateral.add_weight(u, v, rate * a[u] * a[v])?;
                        any = true;
                    }
                }
            }
            if any {
                touched.push(u);
            }
        }
        Ok(touched)
    }

    pub(crate) fn normalize(&mut self, budget: f64) -> Result<()> {
        normalize_nonempty(&mut self.lateral, budget)
    }

    pub(crate) fn prune(&mut self, cap: usize, budget: f64) -> Result<()> {
        prune(&mut self.lateral, cap, 0.0, budget)
    }
}

/// Exuberant activation of one image under the configured fraction.
pub fn initial_activity(image: &Image, bank: &FeatureBank, config: &FragmentConfig) -> Result<ActivityState> {
    exuberant_init(&feature_encode(image, bank)?, config.exuberance)
}

/// Learns lateral weights from `corpus`, visited in the order fixed by
/// `config.shuffle_seed`. Fan-in is capped every `prune_every` images and
/// once more at the end.
pub fn lateral_learn(corpus: &[Image], config: &FragmentConfig) -> Result<CorticalField> {
    lateral_learn_observed(corpus, config, |_, _| Ok(()))
}

/// [`lateral_learn`] with a callback after every image.
pub fn lateral_learn_observed<F>(corpus: &[Image], config: &FragmentConfig, mut observer: F) -> Result<CorticalField>
where
    F: FnMut(usize, &CorticalField) -> Result<()>,
{
    config.validate()?;
    let Some(first) = corpus.first() else {
        return invalid("lateral learning needs a non-empty corpus");
    };
    if corpus.iter().any(|im| im.rows() != first.rows() || im.cols() != first.cols()) {
        return invalid("corpus images must share one size");
    }
    let sheet = feature_sheet(first.rows(), first.cols())?;
    let mut field = CorticalField::new(sheet, config.radius)?;
    let bank = FeatureBank::new();
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    RngStream::new(config.shuffle_seed, 7).shuffle(&mut order);
    for (step, &idx) in order.iter().enumerate() {
        let activity = initial_activity(&corpus[idx], &bank, config)?;
        field.hebbian_coactivation(&activity, config.learning_rate)?;
        field.normalize(config.budget)?;
        if (step + 1) % config.prune_every == 0 {
            field.prune(config.fan_in_cap, config.budget)?;
        }
        observer(step, &field)?;
    }
    if order.len() % config.prune_every != 0 {
        field.prune(config.fan_in_cap, config.budget)?;
    }
    Ok(field)
}
