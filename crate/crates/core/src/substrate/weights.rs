use std::f64::consts::PI;

use super::rng::RngStream;
use super::sheet::Sheet;
use crate::error::{invalid, NetfragError, Result};

/// One incoming connection of a post unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synapse {
    pub pre: u32,
    pub weight: f64,
}

/// Nonnegative connections from the units of `pre` onto the units of `post`,
/// stored as one adjacency list per post unit, sorted by pre id.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    pre: Sheet,
    post: Sheet,
    lateral: bool,
    incoming: Vec<Vec<Synapse>>,
}

/// How `init_weight_field` fills a fresh field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    UniformNoise,
    /// Uniform noise multiplied by `1 + bias * cos(pi * d / D)`, where `d` is
    /// the distance from the pre node to the affine image of the post node
    /// and `D` the diagonal of the pre sheet.
    PolarityBiased { bias: f64 },
    Identity,
}

impl WeightField {
    pub fn empty(pre: Sheet, post: Sheet) -> Self {
        Self {
            pre,
            post,
            lateral: false,
            incoming: vec![Vec::new(); post.unit_count()],
        }
    }

    /// An empty field of connections within one sheet; self-connections are refused.
    pub fn empty_lateral(sheet: Sheet) -> Self {
        Self {
            pre: sheet,
            post: sheet,
            lateral: true,
            incoming: vec![Vec::new(); sheet.unit_count()],
        }
    }

    /// Marks a field read from disk as lateral after checking the invariants.
    pub fn into_lateral(mut self) -> Result<Self> {
        if self.pre != self.post {
            return invalid("lateral field needs identical pre and post sheets");
        }
        for (post, row) in self.incoming.iter().enumerate() {
            if row.iter().any(|s| s.pre as usize == post) {
                return invalid(format!("self-connection on unit {post}"));
            }
        }
        self.lateral = true;
        Ok(self)
    }

    pub fn pre(&self) -> &Sheet {
        &self.pre
    }

    pub fn post(&self) -> &Sheet {
        &self.post
    }

    pub fn is_lateral(&self) -> bool {
        self.lateral
    }

    pub fn post_units(&self) -> usize {
        self.incoming.len()
    }

    pub fn incoming(&self, post: usize) -> &[Synapse] {
        &self.incoming[post]
    }

    pub(crate) fn incoming_mut(&mut self, post: usize) -> &mut Vec<Synapse> {
        &mut self.incoming[post]
    }

    pub fn weight(&self, post: usize, pre: usize) -> f64 {
        let row = &self.incoming[post];
        match row.binary_search_by_key(&(pre as u32), |s| s.pre) {
            Ok(i) => row[i].weight,
            Err(_) => 0.0,
        }
    }

    /// Sets one weight, inserting the synapse if needed. A zero weight removes it.
    pub fn set_weight(&mut self, post: usize, pre: usize, weight: f64) -> Result<()> {
        self.check_pair(post, pre)?;
        if !(weight.is_finite() && weight >= 0.0) {
            return invalid(format!("weight {weight} must be finite and >= 0"));
        }
        let row = &mut self.incoming[post];
        match row.binary_search_by_key(&(pre as u32), |s| s.pre) {
            Ok(i) if weight == 0.0 => {
                row.remove(i);
            }
            Ok(i) => row[i].weight = weight,
            Err(_) if weight == 0.0 => {}
            Err(i) => row.insert(
                i,
                Synapse {
                    pre: pre as u32,
                    weight,
                },
            ),
        }
        Ok(())
    }

    /// Adds `delta` to a weight, creating the synapse when absent.
    pub fn add_weight(&mut self, post: usize, pre: usize, delta: f64) -> Result<()> {
        let current = self.weight(post, pre);
        self.set_weight(post, pre, (current + delta).max(0.0))
    }

    fn check_pair(&self, post: usize, pre: usize) -> Result<()> {
        if post >= self.post.unit_count() || pre >= self.pre.unit_count() {
            return invalid(format!("unit pair ({post}, {pre}) out of range"));
        }
        if self.lateral && post == pre {
            return invalid(format!("self-connection on unit {post} in lateral field"));
        }
        Ok(())
    }

    /// Replaces an entire adjacency list. Entries must be sorted by pre id.
    pub(crate) fn replace_row(&mut self, post: usize, row: Vec<Synapse>) {
        debug_assert!(row.windows(2).all(|w| w[0].pre < w[1].pre));
        self.incoming[post] = row;
    }

    pub fn incoming_sum(&self, post: usize) -> f64 {
        self.incoming[post].iter().map(|s| s.weight).sum()
    }

    pub fn fan_in(&self, post: usize) -> usize {
        self.incoming[post].len()
    }

    pub fn mean_fan_in(&self) -> f64 {
        let total: usize = self.incoming.iter().map(Vec::len).sum();
        total as f64 / self.incoming.len() as f64
    }

    pub fn max_fan_in(&self) -> usize {
        self.incoming.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.incoming.iter().map(Vec::len).sum()
    }

    /// `(post, pre, weight)` triples in post-major, pre-ascending order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.incoming
            .iter()
            .enumerate()
            .flat_map(|(post, row)| row.iter().map(move |s| (post, s.pre as usize, s.weight)))
    }

    /// Sum of absolute weight differences against a field of the same shape.
    pub fn l1_distance(&self, other: &WeightField) -> f64 {
        let mut total = 0.0;
        for (a, b) in self.incoming.iter().zip(&other.incoming) {
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                match (a.get(i), b.get(j)) {
                    (Some(x), Some(y)) if x.pre == y.pre => {
                        total += (x.weight - y.weight).abs();
                        i += 1;
                        j += 1;
                    }
                    (Some(x), Some(y)) if x.pre < y.pre => {
                        total += x.weight;
                        i += 1;
                    }
                    (Some(_), Some(y)) => {
                        total += y.weight;
                        j += 1;
                    }
                    (Some(x), None) => {
                        total += x.weight;
                        i += 1;
                    }
                    (None, Some(y)) => {
                        total += y.weight;
                        j += 1;
                    }
                    (None, None) => unreachable!(),
                }
            }
        }
        total
    }

    /// `post = W * pre_activity`, summed in ascending pre order.
    pub fn propagate(&self, pre_activity: &[f64]) -> Vec<f64> {
        self.incoming
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| s.weight * pre_activity[s.pre as usize])
                    .sum()
            })
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.incoming
            .iter()
            .all(|row| row.iter().all(|s| s.weight.is_finite()))
    }

    pub(crate) fn from_rows(pre: Sheet, post: Sheet, lateral: bool, incoming: Vec<Vec<Synapse>>) -> Self {
        debug_assert_eq!(incoming.len(), post.unit_count());
        Self {
            pre,
            post,
            lateral,
            incoming,
        }
    }
}

/// Builds the initial retina-to-target connectivity.
///
/// Every mode leaves each post unit's incoming sum equal to `budget`.
pub fn init_weight_field(
    pre: Sheet,
    post: Sheet,
    mode: InitMode,
    budget: f64,
    noise_amplitude: f64,
    rng: &mut RngStream,
) -> Result<WeightField> {
    if !(0.0..1.0).contains(&noise_amplitude) {
        return invalid(format!("noise amplitude {noise_amplitude} outside [0, 1)"));
    }
    if !(budget.is_finite() && budget > 0.0) {
        return invalid(format!("budget {budget} must be positive"));
    }
    if pre.features() != post.features() {
        return invalid("pre and post sheets must carry the same feature count");
    }

    if let InitMode::Identity = mode {
        if pre != post {
            return invalid(format!(
                "identity init needs equal shapes, got {}x{} and {}x{}",
                pre.rows(),
                pre.cols(),
                post.rows(),
                post.cols()
            ));
        }
        let incoming = (0..post.unit_count())
            .map(|u| {
                vec![Synapse {
                    pre: u as u32,
                    weight: budget,
                }]
            })
            .collect();
        return Ok(WeightField::from_rows(pre, post, false, incoming));
    }

    let bias = match mode {
        InitMode::PolarityBiased { bias } => {
            if !(0.0..1.0).contains(&bias) {
                return invalid(format!("polarity bias {bias} outside [0, 1)"));
            }
            bias
        }
        _ => 0.0,
    };
    let n_pre = pre.unit_count();
    let (ext_r, ext_c) = pre.extent();
    let diagonal = (ext_r * ext_r + ext_c * ext_c).sqrt().max(1.0);
    let base = budget / n_pre as f64;

    let mut incoming = Vec::with_capacity(post.unit_count());
    for post_unit in 0..post.unit_count() {
        let (pr, pc) = post.unit_coords(post_unit);
        let (cr, cc) = post.map_coords_to(&pre, pr as f64, pc as f64);
        let mut row = Vec::with_capacity(n_pre);
        for pre_unit in 0..n_pre {
            let mut w = base * (1.0 + noise_amplitude * (2.0 * rng.draw_uniform() - 1.0));
            if bias > 0.0 {
                let (qr, qc) = pre.unit_coords(pre_unit);
                let d = ((qr as f64 - cr).powi(2) + (qc as f64 - cc).powi(2)).sqrt();
                w *= 1.0 + bias * (PI * d / diagonal).cos();
            }
            row.push(Synapse {
                pre: pre_unit as u32,
                weight: w,
            });
        }
        let sum: f64 = row.iter().map(|s| s.weight).sum();
        if sum <= 0.0 {
            return Err(NetfragError::DegenerateUnit { unit: post_unit });
        }
        let scale = budget / sum;
        row.iter_mut().for_each(|s| s.weight *= scale);
        incoming.push(row);
    }
    Ok(WeightField::from_rows(pre, post, false, incoming))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sheet(r: usize, c: usize) -> Sheet {
        Sheet::new(r, c, 1).unwrap()
    }

    #[test]
    fn identity_is_diagonal() {
        let s = sheet(4, 4);
        let mut rng = RngStream::new(0, 0);
        let w = init_weight_field(s, s, InitMode::Identity, 1.0, 0.0, &mut rng).unwrap();
        for u in 0..16 {
            assert_eq!(w.incoming(u), &[Synapse { pre: u as u32, weight: 1.0 }]);
            assert_eq!(w.incoming_sum(u), 1.0);
        }
    }

    #[test]
    fn identity_shape_mismatch() {
        let mut rng = RngStream::new(0, 0);
        let r = init_weight_field(sheet(4, 4), sheet(4, 5), InitMode::Identity, 1.0, 0.0, &mut rng);
        assert!(matches!(r, Err(NetfragError::InvalidArgument(_))));
    }

    #[test]
    fn noiseless_uniform_is_flat() {
        let mut rng = RngStream::new(0, 0);
        let w = init_weight_field(sheet(4, 4), sheet(3, 3), InitMode::UniformNoise, 2.0, 0.0, &mut rng)
            .unwrap();
        for (_, _, x) in w.triples() {
            assert!((x - 2.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn noisy_rows_sum_to_budget() {
        let mut rng = RngStream::new(4, 0);
        let w = init_weight_field(sheet(6, 5), sheet(5, 6), InitMode::UniformNoise, 1.5, 0.5, &mut rng)
            .unwrap();
        for u in 0..w.post_units() {
            assert!((w.incoming_sum(u) - 1.5).abs() <= 1.5 * 1e-9);
        }
    }

    #[test]
    fn polarity_bias_prefers_corresponding_node() {
        let s = sheet(8, 8);
        let mut rng = RngStream::new(1, 0);
        let w = init_weight_field(s, s, InitMode::PolarityBiased { bias: 0.1 }, 1.0, 0.0, &mut rng)
            .unwrap();
        // Oracle: evaluate (1 + b cos(pi d / D)) directly for the two nodes.
        let diag = (49.0f64 + 49.0).sqrt();
        for post in 0..64 {
            let (r, c) = s.coords(post);
            let anti = s.node_id(7 - r, 7 - c);
            assert!(w.weight(post, post) > w.weight(post, anti), "post {post}");
            let d = (((7 - 2 * r as i64).pow(2) + (7 - 2 * c as i64).pow(2)) as f64).sqrt();
            let ratio = (1.0 + 0.1) / (1.0 + 0.1 * (PI * d / diag).cos());
            assert!((w.weight(post, post) / w.weight(post, anti) - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn set_and_remove() {
        let s = sheet(2, 2);
        let mut w = WeightField::empty_lateral(s);
        assert!(w.set_weight(1, 1, 0.5).is_err());
        w.set_weight(1, 3, 0.5).unwrap();
        w.set_weight(1, 0, 0.25).unwrap();
        assert_eq!(w.incoming(1).iter().map(|s| s.pre).collect::<Vec<_>>(), vec![0, 3]);
        w.set_weight(1, 3, 0.0).unwrap();
        assert_eq!(w.fan_in(1), 1);
        assert!(w.set_weight(0, 1, -1.0).is_err());
    }

    #[test]
    fn l1_distance_handles_disjoint_support() {
        let s = sheet(2, 2);
        let mut a = WeightField::empty(s, s);
        let mut b = WeightField::empty(s, s);
        a.set_weight(0, 1, 0.5).unwrap();
        a.set_weight(0, 2, 0.25).unwrap();
        b.set_weight(0, 2, 0.5).unwrap();
        b.set_weight(0, 3, 1.0).unwrap();
        assert!((a.l1_distance(&b) - (0.5 + 0.25 + 1.0)).abs() < 1e-15);
        assert_eq!(a.l1_distance(&a), 0.0);
    }
}
