//! Maplet links: candidate correspondences between model and image nodes,
//! ranked by feature similarity.

use super::store::Model;
use crate::error::{invalid, Result};
use crate::substrate::{ActivityState, Sheet};

/// Cosine similarity of two nonnegative feature vectors; 0 when either is
/// zero.
pub fn similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return invalid(format!("feature lengths differ: {} vs {}", a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapletLink {
    pub image_node: usize,
    pub model_node: usize,
    /// Static fitness, the feature similarity of the two nodes.
    pub fitness: f64,
    /// Dynamic activity, initialized to the fitness.
    pub activity: f64,
}

/// Links grouped by model foreground node.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSet {
    pub model_sheet: Sheet,
    pub image_sheet: Sheet,
    /// Foreground model nodes, ascending.
    pub model_nodes: Vec<usize>,
    /// Links of `model_nodes[i]` are `links[offsets[i]..offsets[i + 1]]`,
    /// ordered by fitness descending, then image id ascending.
    pub offsets: Vec<usize>,
    pub links: Vec<MapletLink>,
}

impl LinkSet {
    pub fn links_of(&self, index: usize) -> &[MapletLink] {
        &self.links[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn range_of(&self, index: usize) -> std::ops::Range<usize> {
        self.offsets[index]..self.offsets[index + 1]
    }
}

/// For every model foreground node, keeps the `k` image nodes of highest
/// similarity (ties to the lower image id), clamped to the image size.
pub fn build_links(model: &Model, image: &ActivityState, k: usize) -> Result<LinkSet> {
    if k < 4 {
        return invalid(format!("link count K = {k} must be >= 4"));
    }
    let (ms, is) = (*model.sheet(), *image.sheet());
    if ms.features() != is.features() {
        return invalid("model and image feature counts differ");
    }
    let model_nodes = model.foreground();
    if model_nodes.is_empty() {
        return invalid("model has an empty foreground");
    }
    let keep = k.min(is.node_count());
    let mut offsets = vec![0];
    let mut links = Vec::with_capacity(model_nodes.len() * keep);
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(is.node_count());
    let rank = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    for &v in &model_nodes {
        let mv = model.features.node_features(v);
        scored.clear();
        for u in 0..is.node_count() {
            scored.push((similarity(mv, image.node_features(u))?, u));
        }
        if keep < scored.len() {
            scored.select_nth_unstable_by(keep - 1, rank);
            scored.truncate(keep);
        }
        scored.sort_by(rank);
        links.extend(scored.iter().map(|&(s, u)| MapletLink {
            image_node: u,
            model_node: v,
            fitness: s,
            activity: s,
        }));
        offsets.push(links.len());
    }
    Ok(LinkSet {
        model_sheet: ms,
        image_sheet: is,
        model_nodes,
        offsets,
        links,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maplets::ModelStore;
    use crate::substrate::{Image, RngStream};

    #[test]
    fn similarity_examples() {
        assert!((similarity(&[0.3, 0.4], &[0.3, 0.4]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let s = similarity(&[1.0, 1.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(similarity(&[0.0; 3], &[1.0; 3]).unwrap(), 0.0);
        assert!(similarity(&[1.0], &[1.0, 2.0]).is_err());
    }

    fn random_image(seed: u64, size: usize) -> Image {
        let mut rng = RngStream::new(seed, 2);
        Image::from_fn(size, size, |_, _| rng.draw_uniform()).unwrap()
    }

    fn model_of(image: &Image) -> ModelStore {
        let mut store = ModelStore::new();
        let n = image.rows() * image.cols();
        store.store_model(image, &vec![true; n], "m").unwrap();
        store
    }

    #[test]
    fn self_image_keeps_correct_link_with_fitness_one() {
        let image = random_image(1, 12);
        let store = model_of(&image);
        let model = &store.models()[0];
        let features = crate::fragments::feature_encode(&image, &crate::fragments::FeatureBank::new()).unwrap();
        let links = build_links(model, &features, 4).unwrap();
        for (i, &v) in links.model_nodes.iter().enumerate() {
            let l = links.links_of(i);
            assert_eq!(l.len(), 4);
            let hit = l.iter().find(|x| x.image_node == v).expect("identity link kept");
            assert!((hit.fitness - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_k_and_clamp() {
        let image = random_image(2, 10);
        let store = model_of(&image);
        let features = crate::fragments::feature_encode(&image, &crate::fragments::FeatureBank::new()).unwrap();
        assert!(build_links(&store.models()[0], &features, 3).is_err());
        let links = build_links(&store.models()[0], &features, 10_000).unwrap();
        assert_eq!(links.links_of(0).len(), 64);
    }
}
