//! Spontaneous retinal events and settling of target-sheet activity.

use crate::error::{invalid, Result};
use crate::substrate::{ActivityState, RngStream, Sheet};

/// Difference-of-Gaussians lateral interaction on grid distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateralKernel {
    pub exc_amp: f64,
    pub exc_radius: f64,
    pub inh_amp: f64,
    pub inh_radius: f64,
}

impl LateralKernel {
    pub fn new(exc_amp: f64, exc_radius: f64, inh_amp: f64, inh_radius: f64) -> Result<Self> {
        let k = Self {
            exc_amp,
            exc_radius,
            inh_amp,
            inh_radius,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.exc_amp, self.exc_radius, self.inh_amp, self.inh_radius]
            .iter()
            .all(|x| x.is_finite());
        if !all_finite || self.exc_amp < 0.0 || self.inh_amp < 0.0 {
            return invalid("kernel amplitudes must be finite and >= 0");
        }
        if !(self.exc_radius > 0.0 && self.inh_radius > self.exc_radius) {
            return invalid(format!(
                "kernel radii must satisfy inh > exc > 0, got exc {} inh {}",
                self.exc_radius, self.inh_radius
            ));
        }
        Ok(())
    }

    pub fn with_inhibition(mut self, inh_amp: f64) -> Self {
        self.inh_amp = inh_amp;
        self
    }
}

/// Gaussian blob with peak 1 at `center`, zero beyond `3 * radius`.
pub fn blob_at(sheet: &Sheet, center: (usize, usize), radius: f64) -> ActivityState {
    let cutoff2 = (3.0 * radius).powi(2);
    let denom = 2.0 * radius * radius;
    let mut values = vec![0.0; sheet.unit_count()];
    for node in 0..sheet.node_count() {
        let (r, c) = sheet.coords(node);
        let d2 = (r as f64 - center.0 as f64).powi(2) + (c as f64 - center.1 as f64).powi(2);
        if d2 <= cutoff2 {
            let v = (-d2 / denom).exp();
            for f in 0..sheet.features() {
                values[sheet.unit_id(node, f)] = v;
            }
        }
    }
    ActivityState::from_values(*sheet, values).expect("blob values are finite and nonnegative")
}

/// One correlated burst of spontaneous retinal activity, centered on a node
/// drawn uniformly. Returns the activity and the chosen center.
pub fn spontaneous_event(
    retina: &Sheet,
    blob_radius: f64,
    rng: &mut RngStream,
) -> Result<(ActivityState, (usize, usize))> {
    if !(blob_radius >= 1.0 && blob_radius.is_finite()) {
        return invalid(format!("blob radius {blob_radius} must be >= 1"));
    }
    let center = retina.coords(rng.draw_index(retina.node_count()));
    Ok((blob_at(retina, center, blob_radius), center))
}

/// Grid offsets within `3 * radius` with their Gaussian weights, excluding
/// the zero offset.
fn gaussian_offsets(radius: f64) -> Vec<(i64, i64, f64)> {
    let reach = (3.0 * radius).floor() as i64;
    let cutoff2 = (3.0 * radius).powi(2);
    let denom = 2.0 * radius * radius;
    let mut out = Vec::new();
    for dr in -reach..=reach {
        for dc in -reach..=reach {
            let d2 = (dr * dr + dc * dc) as f64;
            if (dr, dc) != (0, 0) && d2 <= cutoff2 {
                out.push((dr, dc, (-d2 / denom).exp()));
            }
        }
    }
    out
}

/// Smallest `theta >= 0` with `sum_i max(0, u_i - theta) <= mass_cap`.
pub fn global_threshold(input: &[f64], mass_cap: f64) -> f64 {
    let total: f64 = input.iter().filter(|u| **u > 0.0).sum();
    if total <= mass_cap {
        return 0.0;
    }
    let mut positive: Vec<f64> = input.iter().copied().filter(|u| *u > 0.0).collect();
    positive.sort_by(|a, b| b.total_cmp(a));
    // With the top k units active, theta = (sum_k - M) / k; pick the first k
    // for which the (k+1)-th value already lies below theta.
    let mut prefix = 0.0;
    for (k, &u) in positive.iter().enumerate() {
        prefix += u;
        let theta = (prefix - mass_cap) / (k + 1) as f64;
        let next = positive.get(k + 1).copied().unwrap_or(0.0);
        if theta >= next {
            return theta.max(0.0);
        }
    }
    0.0
}

/// Settles target-sheet activity under feedforward `drive`.
///
/// Each synchronous step computes
/// `a_i <- max(0, drive_i + E_i - I_i)` with
/// `E_i = A_e * sum_k g_e(d_ik) a_k` and
/// `I_i = A_i * sum_k g_i(d_ik) max(0, a_k - a_i)`. Inhibition only flows
/// from more active to less active units; under very strong inhibition the
/// strongest unit keeps its drive while its neighbours are silenced.
///
/// Global inhibition is a subtractive threshold, the smallest one that keeps
/// total activity at or below `mass_cap` (see [`global_threshold`]). It strips
/// the near-uniform baseline of the drive so activity stays localized.
pub fn settle(
    post: &Sheet,
    drive: &[f64],
    kernel: &LateralKernel,
    steps: usize,
    mass_cap: f64,
) -> Result<ActivityState> {
    kernel.validate()?;
    if steps == 0 {
        return invalid("settle needs at least one step");
    }
    if drive.len() != post.node_count() || post.features() != 1 {
        return invalid("drive must hold one value per node of a single-feature sheet");
    }
    if let Some(i) = drive.iter().position(|d| !d.is_finite()) {
        return invalid(format!("non-finite drive at node {i}"));
    }
    if !(mass_cap > 0.0) {
        return invalid("mass cap must be positive");
    }

    let exc = gaussian_offsets(kernel.exc_radius);
    let inh = gaussian_offsets(kernel.inh_radius);
    let n = post.node_count();
    let mut a = vec![0.0; n];
    let mut input = vec![0.0; n];
    let mut active: Vec<usize> = Vec::new();

    for _ in 0..steps {
        input.copy_from_slice(drive);
        active.clear();
        active.extend((0..n).filter(|&i| a[i] > 0.0));
        for &k in &active {
            let (kr, kc) = post.coords(k);
            let ak = a[k];
            if kernel.exc_amp > 0.0 {
                for &(dr, dc, g) in &exc {
                    if let Some(i) = post.checked_node_id(kr as i64 + dr, kc as i64 + dc) {
                        input[i] += kernel.exc_amp * g * ak;
                    }
                }
            }
            if kernel.inh_amp > 0.0 {
                for &(dr, dc, g) in &inh {
                    if let Some(i) = post.checked_node_id(kr as i64 + dr, kc as i64 + dc) {
                        let diff = ak - a[i];
                        if diff > 0.0 {
                            input[i] -= kernel.inh_amp * g * diff;
                        }
                    }
                }
            }
        }
        let theta = global_threshold(&input, mass_cap);
        for (ai, ui) in a.iter_mut().zip(&input) {
            *ai = (ui - theta).max(0.0);
        }
    }
    ActivityState::from_values(*post, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sheet(n: usize) -> Sheet {
        Sheet::new(n, n, 1).unwrap()
    }

    #[test]
    fn blob_peak_and_truncation() {
        let s = sheet(16);
        let b = blob_at(&s, (5, 5), 1.0);
        assert_eq!(b.get(s.node_id(5, 5), 0), 1.0);
        assert_eq!(b.get(s.node_id(8, 8), 0), 0.0);
        assert!(b.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn blob_mass_matches_gaussian_integral() {
        let s = sheet(16);
        let b = blob_at(&s, (8, 8), 2.0);
        let expected = 2.0 * std::f64::consts::PI * 4.0;
        assert!((b.total() - expected).abs() / expected < 0.15, "{}", b.total());
    }

    #[test]
    fn event_centers_are_uniform() {
        let s = sheet(16);
        let mut rng = RngStream::new(11, 3);
        let mut counts = vec![0usize; 256];
        let n = 10_000;
        for _ in 0..n {
            let (_, (r, c)) = spontaneous_event(&s, 1.0, &mut rng).unwrap();
            counts[s.node_id(r, c)] += 1;
        }
        let e = n as f64 / 256.0;
        let chi2: f64 = counts.iter().map(|&k| (k as f64 - e).powi(2) / e).sum();
        // 99th percentile of chi-square with 255 degrees of freedom.
        assert!(chi2 < 310.46, "chi2 {chi2}");
    }

    #[test]
    fn blob_radius_below_one_rejected() {
        let mut rng = RngStream::new(0, 0);
        assert!(spontaneous_event(&sheet(4), 0.5, &mut rng).is_err());
    }

    #[test]
    fn zero_drive_settles_to_zero() {
        let s = sheet(8);
        let k = LateralKernel::new(0.5, 1.0, 0.3, 2.0).unwrap();
        let a = settle(&s, &vec![0.0; 64], &k, 10, 5.0).unwrap();
        assert_eq!(a.total(), 0.0);
    }

    #[test]
    fn nan_drive_rejected() {
        let s = sheet(4);
        let k = LateralKernel::new(0.5, 1.0, 0.3, 2.0).unwrap();
        let mut d = vec![0.0; 16];
        d[3] = f64::NAN;
        assert!(settle(&s, &d, &k, 10, 5.0).is_err());
    }

    /// Straightforward O(n^2) iteration of the same update, used as oracle.
    fn settle_oracle(s: &Sheet, drive: &[f64], k: &LateralKernel, steps: usize, cap: f64) -> Vec<f64> {
        let n = s.node_count();
        let g = |d2: f64, r: f64| {
            if d2 > 0.0 && d2 <= (3.0 * r).powi(2) {
                (-d2 / (2.0 * r * r)).exp()
            } else {
                0.0
            }
        };
        let mut a = vec![0.0; n];
        for _ in 0..steps {
            let mut next = vec![0.0; n];
            for i in 0..n {
                let (ir, ic) = s.coords(i);
                let mut u = drive[i];
                for j in 0..n {
                    let (jr, jc) = s.coords(j);
                    let d2 = ((ir as f64 - jr as f64).powi(2)) + ((ic as f64 - jc as f64).powi(2));
                    u += k.exc_amp * g(d2, k.exc_radius) * a[j];
                    u -= k.inh_amp * g(d2, k.inh_radius) * (a[j] - a[i]).max(0.0);
                }
                next[i] = u;
            }
            // Bisection for the water-filling threshold.
            let mass = |t: f64| next.iter().map(|u| (u - t).max(0.0)).sum::<f64>();
            let (mut lo, mut hi) = (0.0, next.iter().cloned().fold(0.0, f64::max));
            if mass(0.0) > cap {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mass(mid) > cap { lo = mid } else { hi = mid }
                }
            } else {
                hi = 0.0;
            }
            a = next.iter().map(|u| (u - hi).max(0.0)).collect();
        }
        a
    }

    #[test]
    fn matches_direct_iteration() {
        let s = sheet(9);
        let mut rng = RngStream::new(2, 0);
        let drive: Vec<f64> = (0..81).map(|_| rng.draw_uniform() * 0.3).collect();
        let k = LateralKernel::new(0.4, 1.2, 0.8, 2.5).unwrap();
        for cap in [4.0, 1.0, 100.0] {
            let fast = settle(&s, &drive, &k, 6, cap).unwrap();
            let slow = settle_oracle(&s, &drive, &k, 6, cap);
            for (x, y) in fast.values().iter().zip(&slow) {
                assert!((x - y).abs() < 1e-9, "{x} {y}");
            }
            assert!(fast.total() <= cap * (1.0 + 1e-12));
        }
    }

    #[test]
    fn single_drive_spreads_with_excitation_radius() {
        let s = sheet(15);
        let mut drive = vec![0.0; 225];
        let center = s.node_id(7, 7);
        drive[center] = 1.0;
        let width = |r_e: f64| {
            let k = LateralKernel::new(0.3, r_e, 0.0, r_e + 1.0).unwrap();
            let a = settle(&s, &drive, &k, 5, 100.0).unwrap();
            let vals = a.values();
            let peak = (0..225).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
            assert_eq!(peak, center);
            let mass: f64 = vals.iter().sum();
            let var: f64 = (0..225)
                .map(|i| {
                    let (r, c) = s.coords(i);
                    vals[i] * ((r as f64 - 7.0).powi(2) + (c as f64 - 7.0).powi(2))
                })
                .sum::<f64>()
                / mass;
            var.sqrt()
        };
        let narrow = width(0.8);
        let wide = width(1.6);
        assert!(narrow > 0.0 && wide > narrow, "{narrow} {wide}");
    }

    #[test]
    fn strong_inhibition_leaves_argmax() {
        let s = sheet(8);
        let mut rng = RngStream::new(7, 1);
        let drive: Vec<f64> = (0..64).map(|_| 0.1 + rng.draw_uniform()).collect();
        let argmax = (0..64).max_by(|&i, &j| drive[i].total_cmp(&drive[j])).unwrap();
        let k = LateralKernel::new(0.1, 1.0, 1e6, 4.0).unwrap();
        let a = settle(&s, &drive, &k, 10, 1e9).unwrap();
        assert_eq!(a.active_set(), vec![argmax]);
        // Oracle agrees.
        let slow = settle_oracle(&s, &drive, &k, 10, 1e9);
        let survivors: Vec<usize> = (0..64).filter(|&i| slow[i] > 0.0).collect();
        assert_eq!(survivors, vec![argmax]);
    }
}
