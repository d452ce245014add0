//! Topographic order and path-redundancy measurements.

use std::collections::BTreeSet;

use crate::error::{NetfragError, Result};
use crate::substrate::WeightField;

/// Weight-weighted centroid of the pre coordinates feeding `post_unit`.
pub fn receptive_center(field: &WeightField, post_unit: usize) -> Result<(f64, f64)> {
    let pre = field.pre();
    let (mut sr, mut sc, mut sw) = (0.0, 0.0, 0.0);
    for s in field.incoming(post_unit) {
        let (r, c) = pre.unit_coords(s.pre as usize);
        sr += s.weight * r as f64;
        sc += s.weight * c as f64;
        sw += s.weight;
    }
    if !(sw > 0.0) {
        return Err(NetfragError::DegenerateUnit { unit: post_unit });
    }
    Ok((sr / sw, sc / sw))
}

fn all_centers(field: &WeightField) -> Result<Vec<(f64, f64)>> {
    (0..field.post_units())
        .map(|u| receptive_center(field, u))
        .collect()
}

fn extent_ratio(field: &WeightField) -> f64 {
    let (pr, pc) = field.pre().extent();
    let (qr, qc) = field.post().extent();
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 1.0 };
    ratio(pr, qr).max(ratio(pc, qc)).max(f64::MIN_POSITIVE)
}

/// Distance tolerance used by the neighbour test: 1.5 grid units scaled by
/// the pre/post extent ratio.
pub fn neighbor_tolerance(field: &WeightField) -> f64 {
    1.5 * extent_ratio(field)
}

/// Fraction of 4-neighbour post pairs whose receptive centers lie within
/// [`neighbor_tolerance`] of each other.
pub fn neighbor_consistency(field: &WeightField) -> Result<f64> {
    let centers = all_centers(field)?;
    let post = field.post();
    let tol = neighbor_tolerance(field);
    let f = post.features();
    let (mut good, mut total) = (0usize, 0usize);
    for r in 0..post.rows() {
        for c in 0..post.cols() {
            for (nr, nc) in [(r + 1, c), (r, c + 1)] {
                if nr >= post.rows() || nc >= post.cols() {
                    continue;
                }
                for feat in 0..f {
                    let a = centers[post.unit_id(post.node_id(r, c), feat)];
                    let b = centers[post.unit_id(post.node_id(nr, nc), feat)];
                    total += 1;
                    if ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() <= tol {
                        good += 1;
                    }
                }
            }
        }
    }
    Ok(if total == 0 { 1.0 } else { good as f64 / total as f64 })
}

/// Least-squares affine fit `center ~ A * p + t` over post coordinates `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit {
    /// Row-major 2x2 linear part.
    pub linear: [[f64; 2]; 2],
    pub offset: [f64; 2],
    pub rms_residual: f64,
}

impl AffineFit {
    pub fn determinant(&self) -> f64 {
        self.linear[0][0] * self.linear[1][1] - self.linear[0][1] * self.linear[1][0]
    }
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    let scale = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    if d.abs() <= 1e-12 * scale.powi(3) {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut mk = m;
        for row in 0..3 {
            mk[row][k] = b[row];
        }
        *slot = det(&mk) / d;
    }
    Some(out)
}

/// Weighted least-squares affine fit of 2D targets on 2D sources.
pub fn fit_affine(points: &[((f64, f64), (f64, f64), f64)]) -> Result<AffineFit> {
    let mut m = [[0.0; 3]; 3];
    let mut br = [0.0; 3];
    let mut bc = [0.0; 3];
    let mut wsum = 0.0;
    for &((pr, pc), (tr, tc), w) in points {
        let x = [pr, pc, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += w * x[i] * x[j];
            }
            br[i] += w * x[i] * tr;
            bc[i] += w * x[i] * tc;
        }
        wsum += w;
    }
    let singular = || NetfragError::DegenerateGeometry("singular normal equations in affine fit".into());
    let row_coef = solve3(m, br).ok_or_else(singular)?;
    let col_coef = solve3(m, bc).ok_or_else(singular)?;
    let mut sq = 0.0;
    for &((pr, pc), (tr, tc), w) in points {
        let er = row_coef[0] * pr + row_coef[1] * pc + row_coef[2] - tr;
        let ec = col_coef[0] * pr + col_coef[1] * pc + col_coef[2] - tc;
        sq += w * (er * er + ec * ec);
    }
    Ok(AffineFit {
        linear: [[row_coef[0], row_coef[1]], [col_coef[0], col_coef[1]]],
        offset: [row_coef[2], col_coef[2]],
        rms_residual: if wsum > 0.0 { (sq / wsum).sqrt() } else { 0.0 },
    })
}

/// `max(0, 1 - rms / R_half) * min(1, |det A| / det_expected)` for the affine
/// fit from post coordinates to receptive centers.
pub fn affine_order(field: &WeightField) -> Result<f64> {
    let centers = all_centers(field)?;
    let post = field.post();
    let points: Vec<_> = centers
        .iter()
        .enumerate()
        .map(|(u, &c)| {
            let (r, cc) = post.unit_coords(u);
            ((r as f64, cc as f64), c, 1.0)
        })
        .collect();
    let fit = fit_affine(&points)?;
    let (pr, pc) = field.pre().extent();
    let (qr, qc) = post.extent();
    let r_half = 0.5 * pr.max(pc);
    let det_expected = (pr * pc) / (qr * qc);
    if !(r_half > 0.0 && det_expected > 0.0 && det_expected.is_finite()) {
        return Err(NetfragError::DegenerateGeometry(
            "sheets need at least two rows and two columns".into(),
        ));
    }
    let residual_term = (1.0 - fit.rms_residual / r_half).max(0.0);
    let det_term = (fit.determinant().abs() / det_expected).min(1.0);
    Ok(residual_term * det_term)
}

/// The symmetries of the post grid that map it onto itself, as coordinate maps.
fn grid_symmetries(rows: usize, cols: usize) -> Vec<Box<dyn Fn(usize, usize) -> (usize, usize)>> {
    let (r1, c1) = (rows - 1, cols - 1);
    let mut out: Vec<Box<dyn Fn(usize, usize) -> (usize, usize)>> = vec![
        Box::new(|r, c| (r, c)),
        Box::new(move |r, c| (r1 - r, c)),
        Box::new(move |r, c| (r, c1 - c)),
        Box::new(move |r, c| (r1 - r, c1 - c)),
    ];
    if rows == cols {
        out.push(Box::new(|r, c| (c, r)));
        out.push(Box::new(move |r, c| (c1 - c, r1 - r)));
        out.push(Box::new(move |r, c| (c, r1 - r)));
        out.push(Box::new(move |r, c| (c1 - c, r)));
    }
    out
}

/// Best fraction, over the symmetries of the post grid, of post units whose
/// receptive center lies within [`neighbor_tolerance`] of the affinely
/// corresponding pre position of the symmetric image of the unit.
pub fn aligned_order(field: &WeightField) -> Result<f64> {
    let centers = all_centers(field)?;
    let post = field.post();
    let pre = field.pre();
    let tol = neighbor_tolerance(field);
    let mut best: f64 = 0.0;
    for sym in grid_symmetries(post.rows(), post.cols()) {
        let good = centers
            .iter()
            .enumerate()
            .filter(|(u, c)| {
                let (r, cc) = post.unit_coords(*u);
                let (sr, sc) = sym(r, cc);
                let (er, ec) = post.map_coords_to(pre, sr as f64, sc as f64);
                ((c.0 - er).powi(2) + (c.1 - ec).powi(2)).sqrt() <= tol
            })
            .count();
        best = best.max(good as f64 / centers.len() as f64);
    }
    Ok(best)
}

/// Mean number of shared co-active neighbours over connected co-active pairs.
///
/// Connectivity is taken as undirected: `a` and `b` are neighbours if either
/// direction carries a positive weight.
pub fn path_redundancy(lateral: &WeightField, active_set: &[usize]) -> f64 {
    let active: BTreeSet<usize> = active_set.iter().copied().collect();
    let n = lateral.post_units();
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (post, pre, w) in lateral.triples() {
        if w > 0.0 && post != pre && active.contains(&post) && active.contains(&pre) {
            neighbors[post].insert(pre);
            neighbors[pre].insert(post);
        }
    }
    let (mut pairs, mut shared) = (0usize, 0usize);
    for &a in &active {
        for &b in neighbors[a].range(a + 1..) {
            pairs += 1;
            shared += neighbors[a].intersection(&neighbors[b]).count();
        }
    }
    if pairs == 0 {
        0.0
    } else {
        shared as f64 / pairs as f64
    }
}
