//! Relaxation of maplet links into a smooth correspondence map.
//!
//! Per scale hypothesis `s`, every link `(u, v)` is reinforced by the links
//! of the four grid neighbours `v'` of `v` whose image node `u'` keeps the
//! displacement consistent, `|(u - u') - s (v - v')| <= tolerance`. Activities
//! are renormalized per model node to a maximum of 1 after every step.

use std::fmt::Write as _;

use serde::Serialize;

use super::links::LinkSet;
use crate::error::{invalid, NetfragError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxParams {
    pub scales: Vec<f64>,
    pub iterations: usize,
    /// Mixing rate of each update, in (0, 1].
    pub eta: f64,
    /// Weight of neighbourhood support.
    pub beta: f64,
    /// Support floor that keeps fresh links alive at the first step.
    pub epsilon0: f64,
    /// Displacement-consistency tolerance in grid units.
    pub tolerance: f64,
    /// Links kept per model node.
    pub k: usize,
}

impl Default for RelaxParams {
    fn default() -> Self {
        Self {
            scales: vec![0.8, 1.0, 1.25],
            iterations: 30,
            eta: 0.5,
            beta: 1.0,
            epsilon0: 0.05,
            tolerance: 1.5,
            k: 20,
        }
    }
}

impl RelaxParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return invalid("relaxation needs at least one iteration");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return invalid(format!("eta {} must lie in (0, 1]", self.eta));
        }
        if self.scales.is_empty() || self.scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return invalid("scale hypotheses must be a non-empty list of positive numbers");
        }
        if !(self.beta >= 0.0 && self.epsilon0 >= 0.0 && self.tolerance > 0.0) {
            return invalid("beta and epsilon0 must be >= 0 and tolerance > 0");
        }
        if self.k < 4 {
            return invalid(format!("link count K = {} must be >= 4", self.k));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapEntry {
    pub model: (usize, usize),
    pub image: (usize, usize),
    /// Share of the winner in its model node's total link activity, zero
    /// outside the largest connected set of mutually consistent winners.
    pub confidence: f64,
    pub fitness: f64,
    /// Fraction of foreground 4-neighbours whose winners are consistent.
    pub smooth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrespondenceMap {
    /// One entry per model foreground node, in node order.
    pub entries: Vec<MapEntry>,
    pub quality: f64,
    pub smoothness: f64,
    /// Fitted offset (row, col) of `image ≈ scale * model + translation`.
    pub translation: (f64, f64),
    pub scale: f64,
    /// Scale hypothesis that produced the map.
    pub hypothesis: f64,
}

impl CorrespondenceMap {
    /// Entry rows `v_row,v_col,u_row,u_col,confidence`, then one summary
    /// line `summary,Q,smoothness,dx,dy,sigma` with dx the column offset.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("v_row,v_col,u_row,u_col,confidence\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{},{},{}", e.model.0, e.model.1, e.image.0, e.image.1, e.confidence);
        }
        let _ = writeln!(
            out,
            "summary,{},{},{},{},{}",
            self.quality, self.smoothness, self.translation.1, self.translation.0, self.scale
        );
        out
    }
}

fn consistent(u: (usize, usize), u2: (usize, usize), v: (usize, usize), v2: (usize, usize), scale: f64, tol: f64) -> bool {
    let dr = (u.0 as f64 - u2.0 as f64) - scale * (v.0 as f64 - v2.0 as f64);
    let dc = (u.1 as f64 - u2.1 as f64) - scale * (v.1 as f64 - v2.1 as f64);
    dr * dr + dc * dc <= tol * tol
}

struct Hypothesis {
    winners: Vec<usize>,
    confidence: Vec<f64>,
    smooth: Vec<f64>,
    quality: f64,
}

/// Foreground neighbour indices (into `links.model_nodes`) of every model node.
fn neighbour_indices(links: &LinkSet) -> Vec<Vec<usize>> {
    let ms = links.model_sheet;
    let mut index = vec![usize::MAX; ms.node_count()];
    for (i, &v) in links.model_nodes.iter().enumerate() {
        index[v] = i;
    }
    links
        .model_nodes
        .iter()
        .map(|&v| {
            let (r, c) = ms.coords(v);
            [(-1, 0), (1, 0), (0, -1), (0, 1)]
                .iter()
                .filter_map(|&(dr, dc)| ms.checked_node_id(r as i64 + dr, c as i64 + dc))
                .map(|n| index[n])
                .filter(|&j| j != usize::MAX)
                .collect()
        })
        .collect()
}

fn run_hypothesis(links: &LinkSet, neighbours: &[Vec<usize>], scale: f64, params: &RelaxParams) -> Result<Hypothesis> {
    let (ms, is) = (links.model_sheet, links.image_sheet);
    let n = links.links.len();
    let mut compat_start = Vec::with_capacity(n + 1);
    let mut compat = Vec::new();
    compat_start.push(0);
    for (i, &v) in links.model_nodes.iter().enumerate() {
        let vc = ms.coords(v);
        for l in links.links_of(i) {
            let uc = is.coords(l.image_node);
            for &j in &neighbours[i] {
                let v2 = ms.coords(links.model_nodes[j]);
                for idx in links.range_of(j) {
                    let u2 = is.coords(links.links[idx].image_node);
                    if consistent(uc, u2, vc, v2, scale, params.tolerance) {
                        compat.push(idx);
                    }
                }
            }
            compat_start.push(compat.len());
        }
    }
    let fitness: Vec<f64> = links.links.iter().map(|l| l.fitness).collect();
    let mut x: Vec<f64> = links.links.iter().map(|l| l.activity).collect();
    let mut next = vec![0.0; n];
    for step in 0..params.iterations {
        for l in 0..n {
            let support: f64 = compat[compat_start[l]..compat_start[l + 1]].iter().map(|&j| x[j]).sum();
            next[l] = (1.0 - params.eta) * x[l] + params.eta * fitness[l] * (params.epsilon0 + params.beta * support);
        }
        for i in 0..links.model_nodes.len() {
            let range = links.range_of(i);
            let max = next[range.clone()].iter().cloned().fold(0.0, f64::max);
            if max > 0.0 {
                next[range.clone()].iter_mut().for_each(|a| *a /= max);
            }
        }
        if let Some(bad) = next.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(NetfragError::NumericalFailure {
                epoch: step,
                detail: format!("link activity {bad} left [0, 1]"),
            });
        }
        std::mem::swap(&mut x, &mut next);
    }
    let mut winners = Vec::with_capacity(links.model_nodes.len());
    let mut confidence = Vec::with_capacity(links.model_nodes.len());
    for i in 0..links.model_nodes.len() {
        let range = links.range_of(i);
        let best = range
            .clone()
            .max_by(|&a, &b| {
                x[a].total_cmp(&x[b])
                    .then(links.links[b].image_node.cmp(&links.links[a].image_node))
            })
            .unwrap_or(range.start);
        let total: f64 = x[range].iter().sum();
        winners.push(best);
        confidence.push(if total > 0.0 { x[best] / total } else { 0.0 });
    }
    let smooth: Vec<f64> = (0..links.model_nodes.len())
        .map(|i| {
            if neighbours[i].is_empty() {
                return 0.0;
            }
            let vc = ms.coords(links.model_nodes[i]);
            let uc = is.coords(links.links[winners[i]].image_node);
            let ok = neighbours[i]
                .iter()
                .filter(|&&j| {
                    let v2 = ms.coords(links.model_nodes[j]);
                    let u2 = is.coords(links.links[winners[j]].image_node);
                    consistent(uc, u2, vc, v2, scale, params.tolerance)
                })
                .count();
            ok as f64 / neighbours[i].len() as f64
        })
        .collect();
    let component = largest_consistent_component(links, neighbours, &winners, scale, params.tolerance);
    for (i, c) in confidence.iter_mut().enumerate() {
        if !component[i] {
            *c = 0.0;
        }
    }
    let quality = winners
        .iter()
        .zip(&smooth)
        .map(|(&w, s)| fitness[w] * s)
        .sum::<f64>()
        / winners.len() as f64;
    Ok(Hypothesis {
        winners,
        confidence,
        smooth,
        quality,
    })
}

/// Flags the model nodes of the largest set connected through consistent
/// neighbouring winners (ties to the set holding the lowest index).
fn largest_consistent_component(
    links: &LinkSet,
    neighbours: &[Vec<usize>],
    winners: &[usize],
    scale: f64,
    tol: f64,
) -> Vec<bool> {
    let (ms, is) = (links.model_sheet, links.image_sheet);
    let n = winners.len();
    let coords = |i: usize| (ms.coords(links.model_nodes[i]), is.coords(links.links[winners[i]].image_node));
    let mut label = vec![usize::MAX; n];
    let mut best = (0, 0);
    let mut stack = Vec::new();
    for seed in 0..n {
        if label[seed] != usize::MAX {
            continue;
        }
        label[seed] = seed;
        stack.push(seed);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let (v, u) = coords(i);
            for &j in &neighbours[i] {
                let (v2, u2) = coords(j);
                if label[j] == usize::MAX && consistent(u, u2, v, v2, scale, tol) {
                    label[j] = seed;
                    stack.push(j);
                }
            }
        }
        if size > best.0 {
            best = (size, seed);
        }
    }
    label.iter().map(|&l| l == best.1).collect()
}

/// Weighted least-squares fit of `u ≈ s * v + t` with a scalar `s`.
pub fn fit_similarity(pairs: &[((f64, f64), (f64, f64), f64)], fallback_scale: f64) -> ((f64, f64), f64) {
    let wsum: f64 = pairs.iter().map(|p| p.2).sum();
    if wsum <= 0.0 {
        return ((0.0, 0.0), fallback_scale);
    }
    let mean = |f: &dyn Fn(&((f64, f64), (f64, f64), f64)) -> f64| pairs.iter().map(|p| p.2 * f(p)).sum::<f64>() / wsum;
    let (vr, vc) = (mean(&|p| p.0 .0), mean(&|p| p.0 .1));
    let (ur, uc) = (mean(&|p| p.1 .0), mean(&|p| p.1 .1));
    let mut num = 0.0;
    let mut den = 0.0;
    for &((a, b), (c, d), w) in pairs {
        num += w * ((a - vr) * (c - ur) + (b - vc) * (d - uc));
        den += w * ((a - vr).powi(2) + (b - vc).powi(2));
    }
    let scale = if den > 0.0 { num / den } else { fallback_scale };
    ((ur - scale * vr, uc - scale * vc), scale)
}

/// Relaxes the links under every scale hypothesis and returns the map of the
/// hypothesis with the highest quality (ties to the earlier hypothesis).
pub fn relax(links: &LinkSet, params: &RelaxParams) -> Result<CorrespondenceMap> {
    params.validate()?;
    if links.model_nodes.is_empty() {
        return invalid("link set has no model nodes");
    }
    let neighbours = neighbour_indices(links);
    let mut best: Option<(f64, Hypothesis)> = None;
    for &scale in &params.scales {
        let h = run_hypothesis(links, &neighbours, scale, params)?;
        if best.as_ref().is_none_or(|(_, b)| h.quality > b.quality) {
            best = Some((scale, h));
        }
    }
    let (hypothesis, h) = best.expect("at least one scale hypothesis");
    let (ms, is) = (links.model_sheet, links.image_sheet);
    let entries: Vec<MapEntry> = links
        .model_nodes
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let l = &links.links[h.winners[i]];
            MapEntry {
                model: ms.coords(v),
                image: is.coords(l.image_node),
                confidence: h.confidence[i],
                fitness: l.fitness,
                smooth: h.smooth[i],
            }
        })
        .collect();
    let pairs: Vec<_> = entries
        .iter()
        .map(|e| {
            (
                (e.model.0 as f64, e.model.1 as f64),
                (e.image.0 as f64, e.image.1 as f64),
                e.confidence,
            )
        })
        .collect();
    let (translation, scale) = fit_similarity(&pairs, hypothesis);
    let smoothness = h.smooth.iter().sum::<f64>() / h.smooth.len() as f64;
    Ok(CorrespondenceMap {
        entries,
        quality: h.quality,
        smoothness,
        translation,
        scale,
        hypothesis,
    })
}
