use crate::error::{invalid, NetfragError, Result};

/// A planar grid of nodes, each carrying `features` channels.
///
/// Nodes are numbered row-major; a *unit* is a `(node, feature)` pair numbered
/// `node * features + feature`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sheet {
    rows: usize,
    cols: usize,
    features: usize,
}

impl Sheet {
    pub fn new(rows: usize, cols: usize, features: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || features == 0 {
            return invalid(format!(
                "sheet dimensions must be positive, got {rows}x{cols}x{features}"
            ));
        }
        if rows.checked_mul(cols).and_then(|n| n.checked_mul(features)).map_or(true, |n| n > u32::MAX as usize) {
            return invalid("sheet too large for 32-bit unit ids");
        }
        Ok(Self {
            rows,
            cols,
            features,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn node_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn unit_count(&self) -> usize {
        self.node_count() * self.features
    }

    #[inline]
    pub fn node_id(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    /// Node id for possibly out-of-range signed coordinates.
    #[inline]
    pub fn checked_node_id(&self, row: i64, col: i64) -> Option<usize> {
        if row < 0 || col < 0 || row >= self.rows as i64 || col >= self.cols as i64 {
            None
        } else {
            Some(row as usize * self.cols + col as usize)
        }
    }

    #[inline]
    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node / self.cols, node % self.cols)
    }

    #[inline]
    pub fn unit_id(&self, node: usize, feature: usize) -> usize {
        node * self.features + feature
    }

    /// `(node, feature)` of a unit.
    #[inline]
    pub fn unit_parts(&self, unit: usize) -> (usize, usize) {
        (unit / self.features, unit % self.features)
    }

    /// Grid coordinates of the node carrying `unit`.
    #[inline]
    pub fn unit_coords(&self, unit: usize) -> (usize, usize) {
        self.coords(unit / self.features)
    }

    pub fn same_shape(&self, other: &Sheet) -> bool {
        self == other
    }

    /// Maps a coordinate on this sheet onto `target` with the affine map that
    /// sends corners to corners.
    pub fn map_coords_to(&self, target: &Sheet, row: f64, col: f64) -> (f64, f64) {
        let scale = |from: usize, to: usize| {
            if from > 1 {
                (to as f64 - 1.0) / (from as f64 - 1.0)
            } else {
                0.0
            }
        };
        (
            row * scale(self.rows, target.rows),
            col * scale(self.cols, target.cols),
        )
    }

    /// Corner-to-corner extent `(rows - 1, cols - 1)`.
    pub fn extent(&self) -> (f64, f64) {
        ((self.rows - 1) as f64, (self.cols - 1) as f64)
    }
}

/// Nonnegative activity over the units of a sheet.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityState {
    sheet: Sheet,
    values: Vec<f64>,
}

impl ActivityState {
    pub fn zeros(sheet: Sheet) -> Self {
        Self {
            sheet,
            values: vec![0.0; sheet.unit_count()],
        }
    }

    pub fn from_values(sheet: Sheet, values: Vec<f64>) -> Result<Self> {
        if values.len() != sheet.unit_count() {
            return invalid(format!(
                "activity has {} values, sheet has {} units",
                values.len(),
                sheet.unit_count()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(NetfragError::InvalidArgument(format!(
                "activity value at unit {i} is {} (must be finite and >= 0)",
                values[i]
            )));
        }
        Ok(Self { sheet, values })
    }

    pub fn sheet(&self) -> &Sheet {
        &self.sheet
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, node: usize, feature: usize) -> f64 {
        self.values[self.sheet.unit_id(node, feature)]
    }

    /// Units with strictly positive value, ascending.
    pub fn active_set(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Values of node `node` across all features.
    pub fn node_features(&self, node: usize) -> &[f64] {
        let f = self.sheet.features();
        &self.values[node * f..(node + 1) * f]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_ids() {
        let s = Sheet::new(4, 4, 1).unwrap();
        assert_eq!(s.node_count(), 16);
        assert_eq!(s.node_id(1, 2), 6);
        assert_eq!(s.coords(6), (1, 2));
    }

    #[test]
    fn multi_feature_sheet() {
        let s = Sheet::new(2, 3, 8).unwrap();
        assert_eq!(s.node_count(), 6);
        assert_eq!(s.unit_count(), 48);
        assert_eq!(s.unit_parts(s.unit_id(4, 7)), (4, 7));
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(
            Sheet::new(0, 3, 1),
            Err(NetfragError::InvalidArgument(_))
        ));
        assert!(Sheet::new(3, 3, 0).is_err());
    }

    #[test]
    fn id_coords_bijection() {
        let s = Sheet::new(7, 5, 3).unwrap();
        for i in 0..s.node_count() {
            let (r, c) = s.coords(i);
            assert_eq!(s.node_id(r, c), i);
        }
    }

    #[test]
    fn corner_affine_map() {
        let a = Sheet::new(16, 16, 1).unwrap();
        let b = Sheet::new(8, 8, 1).unwrap();
        assert_eq!(a.map_coords_to(&b, 15.0, 0.0), (7.0, 0.0));
        assert_eq!(b.map_coords_to(&a, 7.0, 7.0), (15.0, 15.0));
    }

    #[test]
    fn activity_rejects_negative_and_nan() {
        let s = Sheet::new(2, 2, 1).unwrap();
        assert!(ActivityState::from_values(s, vec![0.0, -1.0, 0.0, 0.0]).is_err());
        assert!(ActivityState::from_values(s, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        let a = ActivityState::from_values(s, vec![0.0, 0.5, 0.0, 2.0]).unwrap();
        assert_eq!(a.active_set(), vec![1, 3]);
    }
}
