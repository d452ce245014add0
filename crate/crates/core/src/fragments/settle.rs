//! Exuberance-then-silencing: a rising global threshold removes every unit
//! whose feedforward input plus lateral support from the current active set
//! falls short, until only mutually supporting units remain.

use serde::Serialize;

use super::field::CorticalField;
use crate::error::{invalid, Result};
use crate::substrate::ActivityState;

/// Margin within which a unit's support counts as sitting on the threshold.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSchedule {
    pub theta0: f64,
    pub growth: f64,
    pub theta_max: f64,
    pub max_steps: usize,
    /// Weight of lateral support relative to feedforward input.
    pub lambda: f64,
}

impl Default for ThresholdSchedule {
    fn default() -> Self {
        Self {
            theta0: 0.1,
            growth: 1.15,
            theta_max: 0.6,
            max_steps: 200,
            lambda: 1.0,
        }
    }
}

impl ThresholdSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return invalid(format!("threshold growth {} must be > 1", self.growth));
        }
        if !(self.theta0 > 0.0 && self.theta_max >= self.theta0 && self.theta_max.is_finite()) {
            return invalid("threshold schedule needs 0 < theta0 <= theta_max");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) || self.max_steps == 0 {
            return invalid("lambda must be >= 0 and max_steps >= 1");
        }
        Ok(())
    }

    pub fn at(&self, step: usize) -> f64 {
        let t = self.theta0 * self.growth.powi(step.min(i32::MAX as usize) as i32);
        t.min(self.theta_max)
    }

    /// Steps until the threshold first reaches its cap.
    pub fn steps_to_cap(&self) -> usize {
        (0..).find(|&t| self.at(t) >= self.theta_max).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettleOutcome {
    /// Surviving units, ascending.
    pub stable: Vec<usize>,
    /// Active-set size before each step, then the final size.
    pub sizes: Vec<usize>,
    /// Units whose support came within [`BOUNDARY_TOLERANCE`] of the
    /// threshold at the step they were judged; they are kept.
    pub boundary_ties: Vec<usize>,
}

impl SettleOutcome {
    pub fn steps(&self) -> usize {
        self.sizes.len() - 1
    }
}

/// Feedforward input plus `lambda` times the lateral weight `u` receives
/// from members of `member`.
pub fn support(u: usize, ff: &[f64], member: &[bool], field: &CorticalField, lambda: f64) -> f64 {
    let lateral: f64 = field
        .lateral()
        .incoming(u)
        .iter()
        .filter(|s| member[s.pre as usize])
        .map(|s| s.weight)
        .sum();
    ff[u] + lambda * lateral
}

/// Runs the shrinking threshold dynamics from the active units of `initial`.
pub fn settle_fragments(
    initial: &ActivityState,
    field: &CorticalField,
    schedule: &ThresholdSchedule,
) -> Result<SettleOutcome> {
    schedule.validate()?;
    if initial.sheet() != field.sheet() {
        return invalid("initial activity does not match the cortical field");
    }
    let ff = initial.values();
    let mut active = initial.active_set();
    let mut member = vec![false; ff.len()];
    active.iter().for_each(|&u| member[u] = true);
    let mut sizes = vec![active.len()];
    let mut boundary_ties = Vec::new();
    let cap_step = schedule.steps_to_cap();

    for step in 0..schedule.max_steps {
        if active.is_empty() {
            break;
        }
        let theta = schedule.at(step);
        let mut next = Vec::with_capacity(active.len());
        for &u in &active {
            let s = support(u, ff, &member, field, schedule.lambda);
            if (s - theta).abs() < BOUNDARY_TOLERANCE {
                boundary_ties.push(u);
            }
            if s >= theta - BOUNDARY_TOLERANCE {
                next.push(u);
            }
        }
        let unchanged = next.len() == active.len();
        for &u in &active {
            member[u] = false;
        }
        for &u in &next {
            member[u] = true;
        }
        active = next;
        sizes.push(active.len());
        if unchanged && step >= cap_step {
            break;
        }
    }
    boundary_ties.sort_unstable();
    boundary_ties.dedup();
    Ok(SettleOutcome {
        stable: active,
        sizes,
        boundary_ties,
    })
}
