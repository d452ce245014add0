//! Figure-ground masks from coherent nets, and competition between two
//! stored pattern nets under balanced inhibition.

use serde::Serialize;

use super::features::FeatureBank;
use super::field::{initial_activity, CorticalField};
use super::nets::coherent_components;
use super::settle::{settle_fragments, support};
use super::FragmentConfig;
use crate::error::{invalid, Result};
use crate::substrate::{ActivityState, Image, Sheet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureGround {
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixel mask over the whole image.
    pub mask: Vec<bool>,
    /// No coherent component stands apart from the frame: the scene has no
    /// figure and the mask covers the interior.
    pub degenerate: bool,
    /// Units of the chosen component; zero when none was chosen.
    pub figure_units: usize,
    /// Mean lateral support per unit inside the figure and inside the rest
    /// of the stable set.
    pub figure_weight: f64,
    pub ground_weight: f64,
}

impl FigureGround {
    pub fn area(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Lateral weight each unit of `units` receives from the others, averaged
/// over the set; 0 for an empty set.
pub fn mean_internal_weight(units: &[usize], field: &CorticalField) -> f64 {
    if units.is_empty() {
        return 0.0;
    }
    let mut member = vec![false; field.sheet().unit_count()];
    units.iter().for_each(|&u| member[u] = true);
    let total: f64 = units
        .iter()
        .flat_map(|&u| field.lateral().incoming(u))
        .filter(|s| member[s.pre as usize])
        .map(|s| s.weight)
        .sum();
    total / units.len() as f64
}

fn touches_frame(units: &[usize], sheet: &Sheet) -> bool {
    units.iter().any(|&u| {
        let (r, c) = sheet.unit_coords(u);
        r == 0 || c == 0 || r + 1 == sheet.rows() || c + 1 == sheet.cols()
    })
}

/// Sets every false pixel not 4-connected to the image border.
pub fn fill_holes(mask: &mut [bool], rows: usize, cols: usize) {
    let mut outside = vec![false; mask.len()];
    let mut stack = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if (r == 0 || c == 0 || r + 1 == rows || c + 1 == cols) && !mask[i] {
                outside[i] = true;
                stack.push(i);
            }
        }
    }
    while let Some(i) = stack.pop() {
        let (r, c) = (i / cols, i % cols);
        let mut visit = |j: usize| {
            if !mask[j] && !outside[j] {
                outside[j] = true;
                stack.push(j);
            }
        };
        if r > 0 {
            visit(i - cols);
        }
        if r + 1 < rows {
            visit(i + cols);
        }
        if c > 0 {
            visit(i - 1);
        }
        if c + 1 < cols {
            visit(i + 1);
        }
    }
    for (m, o) in mask.iter_mut().zip(outside) {
        *m = !o;
    }
}

/// 4-neighbourhood closing (dilation then erosion) followed by hole filling.
pub fn close_mask(mask: &[bool], rows: usize, cols: usize) -> Vec<bool> {
    let at = |m: &[bool], r: i64, c: i64| -> Option<bool> {
        (r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols).then(|| m[r as usize * cols + c as usize])
    };
    let cross = [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)];
    let mut dilated = vec![false; mask.len()];
    for r in 0..rows {
        for c in 0..cols {
            dilated[r * cols + c] = cross
                .iter()
                .any(|(dr, dc)| at(mask, r as i64 + dr, c as i64 + dc) == Some(true));
        }
    }
    let mut closed = vec![false; mask.len()];
    for r in 0..rows {
        for c in 0..cols {
            closed[r * cols + c] = cross
                .iter()
                .all(|(dr, dc)| at(&dilated, r as i64 + dr, c as i64 + dc) != Some(false));
        }
    }
    fill_holes(&mut closed, rows, cols);
    closed
}

/// Pixel mask of a figure component: a pixel belongs to the figure when more
/// of the stable nodes whose 3x3 receptive fields cover it lie in `figure`
/// than outside it.
fn receptive_vote(figure: &[usize], stable: &[usize], sheet: &Sheet, rows: usize, cols: usize) -> Vec<bool> {
    let mut in_figure = vec![false; sheet.node_count()];
    let mut in_stable = vec![false; sheet.node_count()];
    figure.iter().for_each(|&u| in_figure[sheet.unit_parts(u).0] = true);
    stable.iter().for_each(|&u| in_stable[sheet.unit_parts(u).0] = true);
    let mut votes = vec![0i32; rows * cols];
    for node in (0..sheet.node_count()).filter(|&n| in_stable[n]) {
        let (r, c) = sheet.coords(node);
        let vote = if in_figure[node] { 1 } else { -1 };
        for dr in 0..3 {
            for dc in 0..3 {
                votes[(r + dr) * cols + c + dc] += vote;
            }
        }
    }
    votes.into_iter().map(|v| v > 0).collect()
}

/// Figure-ground segmentation of one scene. The figure is the largest
/// coherent component of the settled net that stays clear of the sheet
/// frame. Its pixels are found by receptive-field vote, then closed and
/// hole-filled. A blank scene yields an empty mask; a scene whose components
/// all reach the frame is flagged degenerate and covered over its interior.
pub fn figure_ground(image: &Image, field: &CorticalField, config: &FragmentConfig) -> Result<FigureGround> {
    let activity = initial_activity(image, &FeatureBank::new(), config)?;
    if activity.sheet() != field.sheet() {
        return invalid("scene does not match the cortical field");
    }
    let sheet = *field.sheet();
    let (rows, cols) = (image.rows(), image.cols());
    let stable = settle_fragments(&activity, field, &config.schedule)?.stable;
    let mut out = FigureGround {
        rows,
        cols,
        mask: vec![false; rows * cols],
        degenerate: false,
        figure_units: 0,
        figure_weight: 0.0,
        ground_weight: 0.0,
    };
    if stable.is_empty() {
        return Ok(out);
    }
    let net = coherent_components(&stable, field, config.support_threshold());
    let Some(k) = net.components.iter().position(|c| !touches_frame(c, &sheet)) else {
        out.degenerate = true;
        for r in 1..rows - 1 {
            for c in 1..cols - 1 {
                out.mask[r * cols + c] = true;
            }
        }
        return Ok(out);
    };
    let figure = &net.components[k];
    let labels = net.labels(sheet.unit_count());
    let ground: Vec<usize> = stable.iter().copied().filter(|&u| labels[u] != Some(k)).collect();
    out.mask = close_mask(&receptive_vote(figure, &stable, &sheet, rows, cols), rows, cols);
    out.figure_units = figure.len();
    out.figure_weight = mean_internal_weight(figure, field);
    out.ground_weight = mean_internal_weight(&ground, field);
    Ok(out)
}

/// Intersection over union of two equally sized masks; 1 when both are empty.
pub fn mask_iou(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Feedforward drive that evokes a stored pattern net: 1 on its units.
pub fn pattern_drive(pattern: &[usize], sheet: Sheet) -> Result<ActivityState> {
    let mut values = vec![0.0; sheet.unit_count()];
    for &u in pattern {
        if u >= values.len() {
            return invalid(format!("unit {u} outside the sheet"));
        }
        values[u] = 1.0;
    }
    ActivityState::from_values(sheet, values)
}

/// Pointwise maximum of two drives scaled by `1 + delta` and `1 - delta`.
pub fn ambiguous_input(first: &ActivityState, second: &ActivityState, delta: f64) -> Result<ActivityState> {
    if first.sheet() != second.sheet() {
        return invalid("drives must share a sheet");
    }
    if !(0.0..1.0).contains(&delta) {
        return invalid(format!("bias {delta} must lie in [0, 1)"));
    }
    let values = first
        .values()
        .iter()
        .zip(second.values())
        .map(|(a, b)| ((1.0 + delta) * a).max((1.0 - delta) * b))
        .collect();
    ActivityState::from_values(*first.sheet(), values)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionOutcome {
    /// Index of the winning pattern, `None` for a mixed or empty state.
    pub winner: Option<usize>,
    /// Fraction of the winner's units left active; 0 without a winner.
    pub purity: f64,
    /// Fraction of the loser's units left active; 0 without a winner.
    pub loser_overlap: f64,
    /// Fraction of each pattern left active.
    pub overlaps: [f64; 2],
    pub stable: Vec<usize>,
    /// Number of units silenced by the competitive phase.
    pub peeled: usize,
}

fn overlap(active: &[bool], pattern: &[usize]) -> f64 {
    if pattern.is_empty() {
        return 0.0;
    }
    pattern.iter().filter(|&&u| active[u]).count() as f64 / pattern.len() as f64
}

/// Settles an ambiguous input, then lets balanced inhibition hold total
/// activity to the size of the larger pattern: while the active set exceeds
/// that capacity or holds a unit below the threshold cap, the unit with the
/// least support (ties to the lower id) is silenced. The pattern with
/// stronger drive keeps its lateral support while the other loses it unit by
/// unit.
pub fn net_selection(
    input: &ActivityState,
    field: &CorticalField,
    patterns: [&[usize]; 2],
    config: &FragmentConfig,
) -> Result<SelectionOutcome> {
    let n = field.sheet().unit_count();
    if input.sheet() != field.sheet() {
        return invalid("input does not match the cortical field");
    }
    if patterns.iter().any(|p| p.is_empty() || p.iter().any(|&u| u >= n)) {
        return invalid("patterns must be non-empty unit sets of the field");
    }
    let mut in_first = vec![false; n];
    patterns[0].iter().for_each(|&u| in_first[u] = true);
    let shared = patterns[1].iter().filter(|&&u| in_first[u]).count();
    let smaller = patterns[0].len().min(patterns[1].len());
    if shared as f64 > 0.2 * smaller as f64 {
        return invalid(format!("patterns share {shared} of {smaller} units, more than 20%"));
    }
    let schedule = &config.schedule;
    let capacity = patterns[0].len().max(patterns[1].len());
    let mut active = settle_fragments(input, field, schedule)?.stable;
    let mut member = vec![false; n];
    active.iter().for_each(|&u| member[u] = true);
    let ff = input.values();
    let mut supports: Vec<f64> = active
        .iter()
        .map(|&u| support(u, ff, &member, field, schedule.lambda))
        .collect();
    let mut peeled = 0;
    loop {
        let weakest = supports
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(active[a.0].cmp(&active[b.0])))
            .map(|(i, s)| (i, *s));
        let Some((i, s)) = weakest else { break };
        if active.len() <= capacity && s >= schedule.theta_max {
            break;
        }
        let gone = active.swap_remove(i);
        supports.swap_remove(i);
        member[gone] = false;
        peeled += 1;
        for (k, &u) in active.iter().enumerate() {
            let w = field.weight(u, gone);
            if w > 0.0 {
                supports[k] -= schedule.lambda * w;
            }
        }
    }
    active.sort_unstable();
    let overlaps = [overlap(&member, patterns[0]), overlap(&member, patterns[1])];
    let mixed = overlaps[0] > 0.5 && overlaps[1] > 0.5;
    let winner = if mixed || (overlaps[0] == 0.0 && overlaps[1] == 0.0) {
        None
    } else if overlaps[0] >= overlaps[1] {
        Some(0)
    } else {
        Some(1)
    };
    let (purity, loser_overlap) = match winner {
        Some(w) => (overlaps[w], overlaps[1 - w]),
        None => (0.0, 0.0),
    };
    Ok(SelectionOutcome {
        winner,
        purity,
        loser_overlap,
        overlaps,
        stable: active,
        peeled,
    })
}
