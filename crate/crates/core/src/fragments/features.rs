//! Fixed 3x3 filter bank, feature encoding and exuberant initial activation.
//!
//! Feature ids: `2k` and `2k + 1` are the two polarities of the oriented edge
//! filter `k` (0, 45, 90 and 135 degrees), 8 is uniform bright and 9 uniform
//! dark. Pixels are centred on mid-gray before filtering, so a black patch
//! drives the dark feature and a mid-gray patch drives nothing.

use crate::error::{invalid, Result};
use crate::substrate::{ActivityState, Image, Sheet};

pub const FEATURE_COUNT: usize = 10;
pub const BRIGHT: usize = 8;
pub const DARK: usize = 9;
const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBank {
    filters: [[f64; 9]; FEATURE_COUNT],
}

impl Default for FeatureBank {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureBank {
    pub fn new() -> Self {
        let oriented: [[f64; 9]; 4] = [
            [-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            [-1.0, -1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 1.0],
            [-1.0, 0.0, 1.0, -1.0, 0.0, 1.0, -1.0, 0.0, 1.0],
            [0.0, -1.0, -1.0, 1.0, 0.0, -1.0, 1.0, 1.0, 0.0],
        ];
        let mut filters = [[0.0; 9]; FEATURE_COUNT];
        for (k, f) in oriented.iter().enumerate() {
            filters[2 * k] = *f;
            filters[2 * k + 1] = f.map(|x| -x);
        }
        filters[BRIGHT] = [1.0; 9];
        filters[DARK] = [-1.0; 9];
        for f in filters.iter_mut() {
            let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            f.iter_mut().for_each(|x| *x /= norm);
        }
        Self { filters }
    }

    pub fn filter(&self, feature: usize) -> &[f64; 9] {
        &self.filters[feature]
    }

    pub fn len(&self) -> usize {
        FEATURE_COUNT
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Rectified, contrast-normalized responses to one centred 3x3 patch.
    pub fn respond(&self, patch: &[f64; 9]) -> [f64; FEATURE_COUNT] {
        let norm = patch.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut out = [0.0; FEATURE_COUNT];
        if norm < ZERO_NORM {
            return out;
        }
        for (o, f) in out.iter_mut().zip(&self.filters) {
            let dot: f64 = f.iter().zip(patch).map(|(a, b)| a * b).sum();
            *o = (dot / norm).clamp(0.0, 1.0);
        }
        out
    }
}

/// Sheet of interior pixels of an image, one node per pixel.
pub fn feature_sheet(rows: usize, cols: usize) -> Result<Sheet> {
    if rows < 8 || cols < 8 {
        return invalid(format!("image {rows}x{cols} is smaller than 8x8"));
    }
    Sheet::new(rows - 2, cols - 2, FEATURE_COUNT)
}

/// Encodes every interior pixel's 3x3 neighbourhood through the bank.
pub fn feature_encode(image: &Image, bank: &FeatureBank) -> Result<ActivityState> {
    let sheet = feature_sheet(image.rows(), image.cols())?;
    let mut values = vec![0.0; sheet.unit_count()];
    for node in 0..sheet.node_count() {
        let (r, c) = sheet.coords(node);
        let mut patch = [0.0; 9];
        for dr in 0..3 {
            for dc in 0..3 {
                patch[3 * dr + dc] = image.get(r + dr, c + dc) - 0.5;
            }
        }
        let resp = bank.respond(&patch);
        values[node * FEATURE_COUNT..(node + 1) * FEATURE_COUNT].copy_from_slice(&resp);
    }
    ActivityState::from_values(sheet, values)
}

/// Initial over-complete activation: per node the `ceil(q * F)` strongest
/// nonzero features (ties to the lower id) plus every feature reaching 0.8 of
/// the node maximum. Active units keep their feedforward value; all others
/// are zero.
pub fn exuberant_init(features: &ActivityState, q: f64) -> Result<ActivityState> {
    if !(q > 0.0 && q <= 1.0) {
        return invalid(format!("exuberance fraction {q} must lie in (0, 1]"));
    }
    let sheet = *features.sheet();
    let f = sheet.features();
    let top = (q * f as f64).ceil() as usize;
    let mut values = vec![0.0; sheet.unit_count()];
    let mut order: Vec<usize> = Vec::with_capacity(f);
    for node in 0..sheet.node_count() {
        let resp = features.node_features(node);
        let max = resp.iter().cloned().fold(0.0, f64::max);
        if max <= 0.0 {
            continue;
        }
        order.clear();
        order.extend(0..f);
        order.sort_by(|&a, &b| resp[b].total_cmp(&resp[a]).then(a.cmp(&b)));
        for (rank, &k) in order.iter().enumerate() {
            let v = resp[k];
            if v > 0.0 && (rank < top || v >= 0.8 * max) {
                values[node * f + k] = v;
            }
        }
    }
    ActivityState::from_values(sheet, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::substrate::RngStream;

    #[test]
    fn filters_are_unit_norm() {
        let bank = FeatureBank::new();
        for k in 0..FEATURE_COUNT {
            let n: f64 = bank.filter(k).iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bright_constant_image_drives_only_uniform_bright() {
        let img = Image::filled(10, 10, 0.9).unwrap();
        let a = feature_encode(&img, &FeatureBank::new()).unwrap();
        for node in 0..a.sheet().node_count() {
            let v = a.node_features(node);
            assert!((v[BRIGHT] - 1.0).abs() < 1e-12);
            assert!(v.iter().enumerate().all(|(k, x)| k == BRIGHT || x.abs() < 1e-12));
        }
    }

    #[test]
    fn black_image_drives_only_uniform_dark() {
        let img = Image::filled(8, 8, 0.0).unwrap();
        let a = feature_encode(&img, &FeatureBank::new()).unwrap();
        for node in 0..a.sheet().node_count() {
            let v = a.node_features(node);
            assert!((v[DARK] - 1.0).abs() < 1e-12);
            assert!(v.iter().enumerate().all(|(k, x)| k == DARK || x.abs() < 1e-12));
        }
    }

    #[test]
    fn mid_gray_is_silent() {
        let img = Image::filled(8, 8, 0.5).unwrap();
        let a = feature_encode(&img, &FeatureBank::new()).unwrap();
        assert_eq!(a.total(), 0.0);
    }

    #[test]
    fn too_small_image_rejected() {
        assert!(feature_encode(&Image::filled(7, 9, 0.2).unwrap(), &FeatureBank::new()).is_err());
    }

    #[test]
    fn vertical_step_peaks_on_edge_column() {
        let img = Image::from_fn(12, 12, |_, c| if c >= 6 { 1.0 } else { 0.0 }).unwrap();
        let bank = FeatureBank::new();
        let a = feature_encode(&img, &bank).unwrap();
        let s = *a.sheet();
        // Direct convolution: interior column j covers image columns j..j+2,
        // so the step sits at the centre of column j = 5 and j = 4.
        let raw = |col: usize| -> f64 {
            let k = bank.filter(4);
            let mut dot = 0.0;
            let mut norm = 0.0;
            for dr in 0..3 {
                for dc in 0..3 {
                    let p = img.get(5 + dr, col + dc) - 0.5;
                    dot += k[3 * dr + dc] * p;
                    norm += p * p;
                }
            }
            (dot / norm.sqrt()).max(0.0)
        };
        let row: Vec<f64> = (0..s.cols()).map(|c| a.get(s.node_id(5, c), 4)).collect();
        for (c, v) in row.iter().enumerate() {
            assert!((v - raw(c)).abs() < 1e-12);
        }
        let best = row.iter().cloned().fold(0.0, f64::max);
        assert!(best > 0.8);
        let argmax: Vec<usize> = (0..row.len()).filter(|&c| row[c] == best).collect();
        assert!(argmax.iter().all(|&c| c == 4 || c == 5), "{argmax:?}");
    }

    fn random_image(seed: u64) -> Image {
        let mut rng = RngStream::new(seed, 3);
        Image::from_fn(10, 11, |_, _| rng.draw_uniform()).unwrap()
    }

    #[test]
    fn exuberance_with_q_one_keeps_all_nonzero() {
        let a = feature_encode(&random_image(1), &FeatureBank::new()).unwrap();
        let e = exuberant_init(&a, 1.0).unwrap();
        for (x, y) in a.values().iter().zip(e.values()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn exuberance_matches_brute_force_rule() {
        for seed in 0..20 {
            let a = feature_encode(&random_image(seed), &FeatureBank::new()).unwrap();
            let e = exuberant_init(&a, 0.2).unwrap();
            for node in 0..a.sheet().node_count() {
                let v = a.node_features(node);
                let max = v.iter().cloned().fold(0.0, f64::max);
                let mut expected = 0;
                for k in 0..FEATURE_COUNT {
                    let stronger = (0..FEATURE_COUNT)
                        .filter(|&j| v[j] > v[k] || (v[j] == v[k] && j < k))
                        .count();
                    if v[k] > 0.0 && (stronger < 2 || v[k] >= 0.8 * max) {
                        expected += 1;
                        assert_eq!(e.get(node, k), v[k]);
                    } else {
                        assert_eq!(e.get(node, k), 0.0);
                    }
                }
                assert!(expected >= 2 || v.iter().filter(|x| **x > 0.0).count() < 2);
            }
        }
    }

    #[test]
    fn exuberance_rejects_bad_fraction() {
        let a = feature_encode(&random_image(2), &FeatureBank::new()).unwrap();
        assert!(exuberant_init(&a, 0.0).is_err());
        assert!(exuberant_init(&a, 1.5).is_err());
    }
}
