//! Exhaustive normalized cross-correlation, an independent reference for
//! translation estimates.

use crate::error::{invalid, Result};
use crate::substrate::Image;

/// Best integer placement `(row, col)` of `template` inside `image` by
/// normalized cross-correlation, with the lowest `(row, col)` winning ties.
/// Windows or templates without variance score 0.
pub fn oracle_cross_correlation(template: &Image, image: &Image) -> Result<((usize, usize), f64)> {
    let (th, tw) = (template.rows(), template.cols());
    let (ih, iw) = (image.rows(), image.cols());
    if th > ih || tw > iw {
        return invalid(format!("template {th}x{tw} larger than image {ih}x{iw}"));
    }
    let n = (th * tw) as f64;
    let tmean = template.pixels().iter().sum::<f64>() / n;
    let tdev: Vec<f64> = template.pixels().iter().map(|p| p - tmean).collect();
    let tnorm = tdev.iter().map(|d| d * d).sum::<f64>().sqrt();
    let mut best = ((0, 0), f64::NEG_INFINITY);
    for r in 0..=ih - th {
        for c in 0..=iw - tw {
            let mut sum = 0.0;
            let mut sq = 0.0;
            let mut cross = 0.0;
            for i in 0..th {
                for j in 0..tw {
                    let p = image.get(r + i, c + j);
                    sum += p;
                    sq += p * p;
                    cross += tdev[i * tw + j] * p;
                }
            }
            let var = (sq - sum * sum / n).max(0.0);
            let score = if tnorm > 0.0 && var > 1e-12 { cross / (tnorm * var.sqrt()) } else { 0.0 };
            if score > best.1 {
                best = ((r, c), score);
            }
        }
    }
    Ok(best)
}
