//! Net fragments: small self-supporting unit sets that recur across a corpus.
//!
//! Library text format, one fragment per line after the `NFL1` header, tab
//! separated: `id`, `count`, `origin_row,origin_col`, members as
//! `row:col:feature` separated by spaces, internal edges as `i-j` (indices
//! into the member list) separated by spaces. Empty lists are written as `-`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::field::{initial_activity, CorticalField};
use super::features::FeatureBank;
use super::nets::{coherent_components, coherent_components_where};
use super::settle::settle_fragments;
use super::FragmentConfig;
use crate::error::{NetfragError, Result};
use crate::substrate::{Image, Sheet};

/// One unit of a fragment, relative to the fragment's bounding-box origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Member {
    pub row: usize,
    pub col: usize,
    pub feature: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetFragment {
    pub id: usize,
    /// Sorted canonical members.
    pub members: Vec<Member>,
    /// Pairs of member indices joined by a supporting lateral link.
    pub edges: Vec<(usize, usize)>,
    /// Number of corpus images in which the fragment occurred.
    pub count: usize,
    /// Corpus indices of those images, ascending; empty when read from text.
    pub occurrences: Vec<usize>,
    /// Node position of the bounding-box origin at the first occurrence.
    pub origin: (usize, usize),
}

impl NetFragment {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Height and width of the bounding box in nodes.
    pub fn extent(&self) -> (usize, usize) {
        let h = self.members.iter().map(|m| m.row).max().map_or(0, |r| r + 1);
        let w = self.members.iter().map(|m| m.col).max().map_or(0, |c| c + 1);
        (h, w)
    }

    /// Sheet units of the fragment placed with its origin at `(row, col)`;
    /// `None` for members falling off the sheet.
    pub fn place(&self, sheet: &Sheet, row: i64, col: i64) -> Vec<Option<usize>> {
        self.members
            .iter()
            .map(|m| {
                sheet
                    .checked_node_id(row + m.row as i64, col + m.col as i64)
                    .map(|node| sheet.unit_id(node, m.feature))
            })
            .collect()
    }
}

/// Canonical form of a unit set: members relative to the bounding-box origin,
/// plus that origin.
pub fn canonicalize(units: &[usize], sheet: &Sheet) -> (Vec<Member>, (usize, usize)) {
    let coords: Vec<(usize, usize, usize)> = units
        .iter()
        .map(|&u| {
            let (node, f) = sheet.unit_parts(u);
            let (r, c) = sheet.coords(node);
            (r, c, f)
        })
        .collect();
    let r0 = coords.iter().map(|x| x.0).min().unwrap_or(0);
    let c0 = coords.iter().map(|x| x.1).min().unwrap_or(0);
    let mut members: Vec<Member> = coords
        .iter()
        .map(|&(r, c, f)| Member {
            row: r - r0,
            col: c - c0,
            feature: f,
        })
        .collect();
    members.sort_unstable();
    (members, (r0, c0))
}

/// Jaccard index of two sorted, duplicate-free slices.
pub fn sorted_jaccard<T: Ord>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let common = sorted_intersection(a, b);
    common as f64 / (a.len() + b.len() - common) as f64
}

fn sorted_intersection<T: Ord>(a: &[T], b: &[T]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    common
}

/// Splits the stable set of one image into candidate pieces: connected
/// components, with components larger than `max_size` cut along a grid of
/// `tile x tile` nodes and re-labelled inside each tile.
pub fn fragment_pieces(stable: &[usize], field: &CorticalField, config: &FragmentConfig) -> Vec<Vec<usize>> {
    let sheet = *field.sheet();
    let w_support = config.support_threshold();
    let tile_of = |u: usize| {
        let (r, c) = sheet.unit_coords(u);
        (r / config.tile, c / config.tile)
    };
    let mut pieces = Vec::new();
    for comp in coherent_components(stable, field, w_support).components {
        if comp.len() <= config.max_size {
            pieces.push(comp);
            continue;
        }
        let split = coherent_components_where(&comp, field, w_support, |a, b| tile_of(a) == tile_of(b));
        pieces.extend(split.components);
    }
    pieces
}

fn internal_edges(units: &[usize], field: &CorticalField, w_support: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..units.len() {
        for j in i + 1..units.len() {
            if field.link(units[i], units[j]) >= w_support {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Settles every corpus image, canonicalizes the resulting pieces and merges
/// pieces whose canonical sets reach `merge_jaccard` into one fragment.
/// Keeps fragments seen in at least `min_count` images with size in
/// `[min_size, max_size]`; ids are assigned in order of first occurrence.
pub fn extract_fragments(corpus: &[Image], field: &CorticalField, config: &FragmentConfig) -> Result<Vec<NetFragment>> {
    config.validate()?;
    let bank = FeatureBank::new();
    let sheet = *field.sheet();
    let w_support = config.support_threshold();
    let mut library: Vec<NetFragment> = Vec::new();
    for (index, image) in corpus.iter().enumerate() {
        let activity = initial_activity(image, &bank, config)?;
        if activity.sheet() != field.sheet() {
            return Err(NetfragError::InvalidArgument(
                "corpus image does not match the cortical field".into(),
            ));
        }
        let outcome = settle_fragments(&activity, field, &config.schedule)?;
        let mut seen_here = vec![false; library.len()];
        for piece in fragment_pieces(&outcome.stable, field, config) {
            let (members, origin) = canonicalize(&piece, &sheet);
            let best = library
                .iter()
                .map(|f| sorted_jaccard(&f.members, &members))
                .enumerate()
                .filter(|(_, j)| *j >= config.merge_jaccard)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            match best {
                Some((k, _)) => {
                    if !seen_here[k] {
                        seen_here[k] = true;
                        library[k].count += 1;
                        library[k].occurrences.push(index);
                    }
                }
                None => {
                    let ordered = placed_units(&members, origin, &sheet);
                    library.push(NetFragment {
                        id: library.len(),
                        edges: internal_edges(&ordered, field, w_support),
                        members,
                        count: 1,
                        occurrences: vec![index],
                        origin,
                    });
                    seen_here.push(true);
                }
            }
        }
    }
    let mut kept: Vec<NetFragment> = library
        .into_iter()
        .filter(|f| f.count >= config.min_count && (config.min_size..=config.max_size).contains(&f.size()))
        .collect();
    for (i, f) in kept.iter_mut().enumerate() {
        f.id = i;
    }
    Ok(kept)
}

/// Sheet units of canonical `members` placed at `origin`, in member order.
fn placed_units(members: &[Member], origin: (usize, usize), sheet: &Sheet) -> Vec<usize> {
    members
        .iter()
        .map(|m| sheet.unit_id(sheet.node_id(origin.0 + m.row, origin.1 + m.col), m.feature))
        .collect()
}

/// Best Jaccard index between the fragment placed at `anchor` shifted by up
/// to `max_shift` nodes in each direction and the part of `stable` inside the
/// placed fragment's bounding box. `stable` must be sorted.
pub fn reactivation_jaccard(
    fragment: &NetFragment,
    stable: &[usize],
    sheet: &Sheet,
    anchor: (usize, usize),
    max_shift: usize,
) -> f64 {
    if fragment.members.is_empty() {
        return 0.0;
    }
    let (h, w) = fragment.extent();
    let s = max_shift as i64;
    let mut best = 0.0f64;
    for dr in -s..=s {
        for dc in -s..=s {
            let r0 = anchor.0 as i64 + dr;
            let c0 = anchor.1 as i64 + dc;
            let placed = fragment.place(sheet, r0, c0);
            let mut units: Vec<usize> = placed.iter().flatten().copied().collect();
            units.sort_unstable();
            let inside: Vec<usize> = stable
                .iter()
                .copied()
                .filter(|&u| {
                    let (r, c) = sheet.unit_coords(u);
                    let (r, c) = (r as i64, c as i64);
                    r >= r0 && r < r0 + h as i64 && c >= c0 && c < c0 + w as i64
                })
                .collect();
            let common = sorted_intersection(&units, &inside);
            let union = placed.len() + inside.len() - common;
            let j = if union == 0 { 0.0 } else { common as f64 / union as f64 };
            best = best.max(j);
        }
    }
    best
}

pub fn library_to_string(library: &[NetFragment]) -> String {
    let mut out = String::from("NFL1\n");
    for f in library {
        let members = if f.members.is_empty() {
            "-".to_string()
        } else {
            f.members
                .iter()
                .map(|m| format!("{}:{}:{}", m.row, m.col, m.feature))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let edges = if f.edges.is_empty() {
            "-".to_string()
        } else {
            f.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(out, "{}\t{}\t{},{}\t{}\t{}", f.id, f.count, f.origin.0, f.origin.1, members, edges);
    }
    out
}

fn parse_err<T>(line: usize, msg: impl std::fmt::Display) -> Result<T> {
    Err(NetfragError::Format(format!("fragment library line {line}: {msg}")))
}

pub fn library_from_str(text: &str) -> Result<Vec<NetFragment>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "NFL1")) => {}
        _ => return parse_err(1, "missing NFL1 header"),
    }
    let num = |line: usize, s: &str| -> Result<usize> {
        s.parse::<usize>()
            .or_else(|_| parse_err(line, format!("bad number {s:?}")))
    };
    let mut out = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return parse_err(n, format!("expected 5 fields, found {}", fields.len()));
        }
        let Some((or, oc)) = fields[2].split_once(',') else {
            return parse_err(n, "origin must be row,col");
        };
        let mut members = Vec::new();
        if fields[3] != "-" {
            for tok in fields[3].split(' ') {
                let parts: Vec<&str> = tok.split(':').collect();
                if parts.len() != 3 {
                    return parse_err(n, format!("bad member {tok:?}"));
                }
                members.push(Member {
                    row: num(n, parts[0])?,
                    col: num(n, parts[1])?,
                    feature: num(n, parts[2])?,
                });
            }
        }
        let mut edges = Vec::new();
        if fields[4] != "-" {
            for tok in fields[4].split(' ') {
                let Some((a, b)) = tok.split_once('-') else {
                    return parse_err(n, format!("bad edge {tok:?}"));
                };
                let (a, b) = (num(n, a)?, num(n, b)?);
                if a >= members.len() || b >= members.len() {
                    return parse_err(n, format!("edge {tok} outside member list"));
                }
                edges.push((a, b));
            }
        }
        out.push(NetFragment {
            id: num(n, fields[0])?,
            count: num(n, fields[1])?,
            origin: (num(n, or)?, num(n, oc)?),
            members,
            edges,
            occurrences: Vec::new(),
        });
    }
    Ok(out)
}

pub fn write_library(library: &[NetFragment], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, library_to_string(library))?;
    Ok(())
}

pub fn read_library(path: impl AsRef<Path>) -> Result<Vec<NetFragment>> {
    library_from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragments::features::FEATURE_COUNT;

    fn frag(members: &[(usize, usize, usize)]) -> NetFragment {
        NetFragment {
            id: 0,
            members: members.iter().map(|&(row, col, feature)| Member { row, col, feature }).collect(),
            edges: vec![],
            count: 1,
            occurrences: vec![],
            origin: (0, 0),
        }
    }

    fn sheet() -> Sheet {
        Sheet::new(12, 12, FEATURE_COUNT).unwrap()
    }

    fn units(s: &Sheet, at: (usize, usize), members: &[(usize, usize, usize)]) -> Vec<usize> {
        let mut v: Vec<usize> = members
            .iter()
            .map(|&(r, c, f)| s.unit_id(s.node_id(at.0 + r, at.1 + c), f))
            .collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn identical_sets_score_one() {
        let m = [(0, 0, 1), (0, 1, 2), (1, 1, 3)];
        let s = sheet();
        let j = reactivation_jaccard(&frag(&m), &units(&s, (4, 4), &m), &s, (4, 4), 2);
        assert_eq!(j, 1.0);
    }

    #[test]
    fn shifted_copy_is_found_within_range() {
        let m = [(0, 0, 1), (0, 1, 2), (1, 1, 3)];
        let s = sheet();
        let stable = units(&s, (6, 5), &m);
        assert_eq!(reactivation_jaccard(&frag(&m), &stable, &s, (4, 4), 2), 1.0);
        assert!(reactivation_jaccard(&frag(&m), &stable, &s, (2, 2), 2) < 1.0);
    }

    #[test]
    fn disjoint_sets_score_zero() {
        let m = [(0, 0, 1), (1, 0, 1)];
        let s = sheet();
        let stable = units(&s, (4, 4), &[(0, 0, 5), (1, 0, 5)]);
        assert_eq!(reactivation_jaccard(&frag(&m), &stable, &s, (4, 4), 2), 0.0);
    }

    #[test]
    fn half_overlap_scores_one_third() {
        let s = sheet();
        let f = frag(&[(0, 0, 0), (0, 1, 0)]);
        let stable = units(&s, (5, 5), &[(0, 1, 0), (0, 0, 4)]);
        assert!((reactivation_jaccard(&f, &stable, &s, (5, 5), 0) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_form_is_translation_invariant() {
        let s = sheet();
        let m = [(0, 2, 1), (1, 0, 4), (2, 1, 7)];
        let (a, oa) = canonicalize(&units(&s, (1, 1), &m), &s);
        let (b, ob) = canonicalize(&units(&s, (7, 5), &m), &s);
        assert_eq!(a, b);
        assert_eq!((oa, ob), ((1, 1), (7, 5)));
        assert_eq!(a[0], Member { row: 0, col: 2, feature: 1 });
    }

    #[test]
    fn text_format_round_trips() {
        let mut f = frag(&[(0, 0, 1), (0, 1, 2), (1, 1, 3)]);
        f.edges = vec![(0, 1), (1, 2)];
        f.count = 7;
        f.origin = (3, 4);
        let g = NetFragment { id: 1, members: vec![], edges: vec![], ..f.clone() };
        let text = library_to_string(&[f.clone(), g.clone()]);
        assert_eq!(library_from_str(&text).unwrap(), vec![f, g]);
    }

    #[test]
    fn malformed_text_rejected() {
        assert!(library_from_str("").is_err());
        assert!(library_from_str("NFL1\n0\t1\t0,0\t0:0:1\n").is_err());
        assert!(library_from_str("NFL1\n0\t1\t0,0\t0:0:1\t0-4\n").is_err());
        assert!(library_from_str("NFL1\n0\tx\t0,0\t0:0:1\t-\n").is_err());
    }
}
