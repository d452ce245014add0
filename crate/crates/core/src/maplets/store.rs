//! One-shot model storage and the `NFM1` store format.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic "NFM1" | count u32
//! | per model: id u32 | label_len u32 | label UTF-8 | rows u32 | cols u32 | F u32
//! |            rows*cols*F f64 features, row-major | mask bits packed LSB first
//! ```

use std::fs;
use std::path::Path;

use crate::error::{invalid, NetfragError, Result};
use crate::fragments::{feature_encode, FeatureBank};
use crate::substrate::{ActivityState, Image, Sheet};

pub const MAGIC: &[u8; 4] = b"NFM1";

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub id: u32,
    pub label: String,
    /// Feature field cropped to the foreground bounding box.
    pub features: ActivityState,
    /// Row-major foreground flag per node of `features`.
    pub mask: Vec<bool>,
}

impl Model {
    pub fn sheet(&self) -> &Sheet {
        self.features.sheet()
    }

    /// Foreground node ids, ascending.
    pub fn foreground(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&n| self.mask[n]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelStore {
    models: Vec<Model>,
}

impl ModelStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> &[Model] {
        &self.models
    }

    pub fn get(&self, id: u32) -> Option<&Model> {
        self.models.iter().find(|m| m.id == id)
    }

    /// Encodes `image` once, keeps the nodes whose centre pixel lies in the
    /// row-major pixel `mask`, crops to their bounding box and appends the
    /// model. Identical images stored twice get two ids.
    pub fn store_model(&mut self, image: &Image, mask: &[bool], label: &str) -> Result<u32> {
        let (rows, cols) = (image.rows(), image.cols());
        if mask.len() != rows * cols {
            return invalid(format!("mask has {} pixels, image {}", mask.len(), rows * cols));
        }
        let features = feature_encode(image, &FeatureBank::new())?;
        let sheet = *features.sheet();
        let node_mask: Vec<bool> = (0..sheet.node_count())
            .map(|n| {
                let (r, c) = sheet.coords(n);
                mask[(r + 1) * cols + c + 1]
            })
            .collect();
        self.store_features(&features, &node_mask, label)
    }

    /// Stores an arbitrary feature field with a node mask, cropped to the
    /// mask's bounding box.
    pub fn store_features(&mut self, features: &ActivityState, node_mask: &[bool], label: &str) -> Result<u32> {
        let sheet = *features.sheet();
        if node_mask.len() != sheet.node_count() {
            return invalid("node mask does not match the feature sheet");
        }
        if features.values().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return invalid("model features must be finite and nonnegative");
        }
        let fg: Vec<(usize, usize)> = (0..sheet.node_count())
            .filter(|&n| node_mask[n])
            .map(|n| sheet.coords(n))
            .collect();
        if fg.is_empty() {
            return invalid("model mask is empty");
        }
        let r0 = fg.iter().map(|p| p.0).min().unwrap_or(0);
        let r1 = fg.iter().map(|p| p.0).max().unwrap_or(0);
        let c0 = fg.iter().map(|p| p.1).min().unwrap_or(0);
        let c1 = fg.iter().map(|p| p.1).max().unwrap_or(0);
        let f = sheet.features();
        let crop = Sheet::new(r1 - r0 + 1, c1 - c0 + 1, f)?;
        let mut values = Vec::with_capacity(crop.unit_count());
        let mut mask = Vec::with_capacity(crop.node_count());
        for r in r0..=r1 {
            for c in c0..=c1 {
                let n = sheet.node_id(r, c);
                values.extend_from_slice(features.node_features(n));
                mask.push(node_mask[n]);
            }
        }
        let id = self.models.len() as u32;
        self.models.push(Model {
            id,
            label: label.to_string(),
            features: ActivityState::from_values(crop, values)?,
            mask,
        });
        Ok(id)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.models.len() as u32).to_le_bytes());
        for m in &self.models {
            let s = m.sheet();
            out.extend_from_slice(&m.id.to_le_bytes());
            out.extend_from_slice(&(m.label.len() as u32).to_le_bytes());
            out.extend_from_slice(m.label.as_bytes());
            for x in [s.rows(), s.cols(), s.features()] {
                out.extend_from_slice(&(x as u32).to_le_bytes());
            }
            for v in m.features.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            let mut packed = vec![0u8; m.mask.len().div_ceil(8)];
            for (i, _) in m.mask.iter().enumerate().filter(|(_, b)| **b) {
                packed[i / 8] |= 1 << (i % 8);
            }
            out.extend_from_slice(&packed);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(NetfragError::Format("model store magic mismatch".into()));
        }
        let count = r.u32()?;
        let mut models = Vec::new();
        for _ in 0..count {
            let id = r.u32()?;
            let len = r.u32()? as usize;
            let label = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| NetfragError::Format("model label is not UTF-8".into()))?;
            let (rows, cols, f) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
            let sheet = Sheet::new(rows, cols, f).map_err(|e| NetfragError::Format(e.to_string()))?;
            let mut values = Vec::with_capacity(sheet.unit_count());
            for _ in 0..sheet.unit_count() {
                let v = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
                if !v.is_finite() || v < 0.0 {
                    return Err(NetfragError::Format(format!("model {id} has feature value {v}")));
                }
                values.push(v);
            }
            let packed = r.take(sheet.node_count().div_ceil(8))?;
            let mask = (0..sheet.node_count()).map(|i| packed[i / 8] >> (i % 8) & 1 == 1).collect();
            if models.iter().any(|m: &Model| m.id == id) {
                return Err(NetfragError::Format(format!("duplicate model id {id}")));
            }
            models.push(Model {
                id,
                label,
                features: ActivityState::from_values(sheet, values)?,
                mask,
            });
        }
        if r.pos != bytes.len() {
            return Err(NetfragError::Format("trailing bytes after model store".into()));
        }
        Ok(Self { models })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(NetfragError::Format("model store truncated".into()));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_scene() -> (Image, Vec<bool>) {
        let mask: Vec<bool> = (0..16 * 16)
            .map(|i| (4..10).contains(&(i / 16)) && (5..11).contains(&(i % 16)))
            .collect();
        let image = Image::from_fn(16, 16, |r, c| if mask[r * 16 + c] { 0.9 } else { 0.1 }).unwrap();
        (image, mask)
    }

    #[test]
    fn store_crops_to_foreground_box() {
        let (image, mask) = square_scene();
        let mut store = ModelStore::new();
        let id = store.store_model(&image, &mask, "square").unwrap();
        let m = store.get(id).unwrap();
        assert_eq!((m.sheet().rows(), m.sheet().cols()), (6, 6));
        assert!(m.mask.iter().all(|b| *b));
    }

    #[test]
    fn identical_stores_get_distinct_ids() {
        let (image, mask) = square_scene();
        let mut store = ModelStore::new();
        let a = store.store_model(&image, &mask, "x").unwrap();
        let b = store.store_model(&image, &mask, "x").unwrap();
        assert_ne!(a, b);
        assert_eq!(store.len(), 2);
    }

    #[test]
    fn empty_mask_rejected() {
        let (image, _) = square_scene();
        assert!(ModelStore::new().store_model(&image, &[false; 256], "none").is_err());
    }

    #[test]
    fn bytes_round_trip_and_corruption_detected() {
        let (image, mask) = square_scene();
        let mut store = ModelStore::new();
        store.store_model(&image, &mask, "square").unwrap();
        store.store_model(&image, &mask, "ünïcode").unwrap();
        let bytes = store.to_bytes();
        assert_eq!(ModelStore::from_bytes(&bytes).unwrap(), store);
        assert!(ModelStore::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(ModelStore::from_bytes(&bad).is_err());
    }
}
