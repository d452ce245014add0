//! Hebbian growth, budget normalization and pruning on weight fields.

use crate::error::{invalid, NetfragError, Result};
use crate::substrate::{Synapse, WeightField};

/// `w_ij += rate * post_i * pre_j` on existing synapses whose two ends are
/// both active. Pruned synapses do not regrow. Returns the post units touched.
pub fn hebbian_step(
    field: &mut WeightField,
    pre_activity: &[f64],
    post_activity: &[f64],
    rate: f64,
) -> Result<Vec<usize>> {
    if !(rate > 0.0 && rate.is_finite()) {
        return invalid(format!("learning rate {rate} must be positive"));
    }
    if pre_activity.len() != field.pre().unit_count() || post_activity.len() != field.post_units() {
        return invalid("activity lengths do not match the field's sheets");
    }
    let mut touched = Vec::new();
    for (post, &a_post) in post_activity.iter().enumerate() {
        if a_post <= 0.0 {
            continue;
        }
        let mut changed = false;
        for syn in field.incoming_mut(post).iter_mut() {
            let a_pre = pre_activity[syn.pre as usize];
            if a_pre > 0.0 {
                syn.weight += rate * a_post * a_pre;
                changed = true;
            }
        }
        if changed {
            touched.push(post);
        }
    }
    Ok(touched)
}

fn rescale_row(field: &mut WeightField, post: usize, budget: f64) -> Result<()> {
    let sum = field.incoming_sum(post);
    if !(sum > 0.0) {
        return Err(NetfragError::DegenerateUnit { unit: post });
    }
    let scale = budget / sum;
    field
        .incoming_mut(post)
        .iter_mut()
        .for_each(|s| s.weight *= scale);
    Ok(())
}

/// Divisively rescales every post unit's incoming weights to sum to `budget`.
pub fn normalize_incoming(field: &mut WeightField, budget: f64) -> Result<()> {
    check_budget(budget)?;
    if let Some(unit) = (0..field.post_units()).find(|&u| !(field.incoming_sum(u) > 0.0)) {
        return Err(NetfragError::DegenerateUnit { unit });
    }
    for post in 0..field.post_units() {
        rescale_row(field, post, budget)?;
    }
    Ok(())
}

/// Like [`normalize_incoming`] restricted to `units`.
pub fn normalize_units(field: &mut WeightField, units: &[usize], budget: f64) -> Result<()> {
    check_budget(budget)?;
    for &post in units {
        rescale_row(field, post, budget)?;
    }
    Ok(())
}

/// Normalizes every post unit that has any incoming weight; empty units are
/// left alone. Used for lateral fields that start out empty.
pub fn normalize_nonempty(field: &mut WeightField, budget: f64) -> Result<()> {
    check_budget(budget)?;
    for post in 0..field.post_units() {
        if field.fan_in(post) > 0 {
            rescale_row(field, post, budget)?;
        }
    }
    Ok(())
}

fn check_budget(budget: f64) -> Result<()> {
    if !(budget > 0.0 && budget.is_finite()) {
        return invalid(format!("budget {budget} must be positive"));
    }
    Ok(())
}

/// Removes weights below `w_min`, keeps at most `cap` of the largest
/// (ties to the lower pre id) and renormalizes the survivors to `budget`.
/// A unit whose weights all fall below `w_min` keeps its single strongest one.
pub fn prune(field: &mut WeightField, cap: usize, w_min: f64, budget: f64) -> Result<()> {
    if cap == 0 {
        return invalid("fan-in cap must be >= 1");
    }
    check_budget(budget)?;
    for post in 0..field.post_units() {
        let row = field.incoming(post);
        if row.is_empty() {
            continue;
        }
        let mut keep: Vec<Synapse> = row.iter().copied().filter(|s| s.weight >= w_min).collect();
        if keep.is_empty() {
            let best = row
                .iter()
                .copied()
                .max_by(|a, b| a.weight.total_cmp(&b.weight).then(b.pre.cmp(&a.pre)))
                .expect("row is non-empty");
            keep.push(best);
        }
        if keep.len() > cap {
            keep.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.pre.cmp(&b.pre)));
            keep.truncate(cap);
            keep.sort_by_key(|s| s.pre);
        }
        field.replace_row(post, keep);
        rescale_row(field, post, budget)?;
    }
    Ok(())
}
