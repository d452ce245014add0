//! One-shot object models and recognition by maplet relaxation.
//!
//! A model is the feature field of a single exposure, cropped to its
//! foreground. Recognition links every model node to its most similar image
//! nodes, lets links that agree on a common displacement reinforce each other
//! under a few scale hypotheses, and ranks models by the quality of the smooth
//! map that emerges.

pub mod links;
pub mod relax;
pub mod store;

use serde::Serialize;

pub use links::{build_links, similarity, LinkSet, MapletLink};
pub use relax::{fit_similarity, relax, CorrespondenceMap, MapEntry, RelaxParams};
pub use store::{Model, ModelStore};

use crate::error::{invalid, Result};
use crate::fragments::{feature_encode, FeatureBank};
use crate::substrate::{ActivityState, Image};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recognition {
    pub id: u32,
    pub label: String,
    pub map: CorrespondenceMap,
}

impl Recognition {
    pub fn quality(&self) -> f64 {
        self.map.quality
    }
}

/// Matches an encoded image against every stored model, best first (quality
/// descending, ties to the lower id).
pub fn recognize_features(features: &ActivityState, store: &ModelStore, params: &RelaxParams) -> Result<Vec<Recognition>> {
    if store.is_empty() {
        return invalid("model store is empty");
    }
    params.validate()?;
    let mut out = Vec::with_capacity(store.len());
    for model in store.models() {
        let links = build_links(model, features, params.k)?;
        out.push(Recognition {
            id: model.id,
            label: model.label.clone(),
            map: relax(&links, params)?,
        });
    }
    out.sort_by(|a, b| b.quality().total_cmp(&a.quality()).then(a.id.cmp(&b.id)));
    Ok(out)
}

/// [`recognize_features`] on the raw feature encoding of `image`.
pub fn recognize(image: &Image, store: &ModelStore, params: &RelaxParams) -> Result<Vec<Recognition>> {
    recognize_features(&feature_encode(image, &FeatureBank::new())?, store, params)
}
