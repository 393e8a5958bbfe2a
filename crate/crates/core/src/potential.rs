//! Piecewise-linear kicking potential with quantized slopes.
//!
//! The potential `V(θ)` is continuous and 2π-periodic, and its slope takes only
//! the values `j·η` where the channel `j(θ)` is `μ·sin(θ)/η` truncated toward
//! zero. Breakpoints sit at the solutions of `sin(θ) = m·η/μ`, `1 ≤ |m| ≤ J`,
//! with `J = floor(μ/η)`. As `η → 0` the potential converges to the smooth
//! kicked-rotor potential `μ(1 − cos θ)`.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("kick strength mu must be positive and finite, got {0}")]
    InvalidMu(f64),
    #[error("momentum quantum eta must be positive and finite, got {0}")]
    InvalidEta(f64),
}

/// A half-open arc `[start, start + len)` of the circle, `start ∈ [0, 2π)`.
///
/// Arcs may wrap through `2π`; `end()` is then larger than `2π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub len: f64,
}

impl Arc {
    pub fn end(&self) -> f64 {
        self.start + self.len
    }

    pub fn contains(&self, theta: f64) -> bool {
        let offset = (theta - self.start).rem_euclid(TAU);
        offset < self.len
    }
}

/// Reduces an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    if (0.0..TAU).contains(&theta) {
        return theta;
    }
    let r = theta - TAU * (theta * INV_TAU).floor();
    // rounding can land exactly on either end
    if r >= TAU {
        r - TAU
    } else if r < 0.0 {
        r + TAU
    } else {
        r
    }
}

const INV_TAU: f64 = 1.0 / TAU;

/// The channel potential: breakpoints, per-arc channels and cumulative values.
///
/// Immutable after construction; share it freely across threads.
#[derive(Debug, Clone)]
pub struct ChannelPotential {
    mu: f64,
    eta: f64,
    max_channel: i64,
    /// Sorted angles in `[0, 2π)` where the channel changes.
    breakpoints: Vec<f64>,
    /// `segment_channels[i]` is the channel on `[b_i, b_{i+1})`; the last
    /// entry covers the wrapping arc `[b_last, b_0 + 2π)`.
    segment_channels: Vec<i64>,
    /// `V(b_i)` with the normalization `V(0) = 0`.
    segment_values: Vec<f64>,
}

impl ChannelPotential {
    pub fn new(mu: f64, eta: f64) -> Result<Self, PotentialError> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(PotentialError::InvalidMu(mu));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(PotentialError::InvalidEta(eta));
        }
        let max_channel = (mu / eta).floor() as i64;

        let mut candidates = Vec::with_capacity(4 * max_channel as usize);
        for m in 1..=max_channel {
            let a = (m as f64 * eta / mu).min(1.0).asin();
            candidates.extend_from_slice(&[a, PI - a, PI + a, TAU - a]);
        }
        candidates.sort_by(f64::total_cmp);
        candidates.dedup();

        // Drop points where the channel does not actually change (the double
        // root at π/2 when μ/η is an integer).
        let channel_at = |t: f64| (mu * t.sin() / eta).trunc() as i64;
        let mut breakpoints = Vec::with_capacity(candidates.len());
        let mut segment_channels = Vec::with_capacity(candidates.len());
        let count = candidates.len();
        for i in 0..count {
            let prev_start = candidates[(i + count - 1) % count];
            let prev_end = if i == 0 { candidates[0] + TAU } else { candidates[i] };
            let next_end = if i + 1 == count { candidates[0] + TAU } else { candidates[i + 1] };
            let before = channel_at(0.5 * (prev_start + prev_end));
            let after = channel_at(0.5 * (candidates[i] + next_end));
            if before != after {
                breakpoints.push(candidates[i]);
                segment_channels.push(after);
            }
        }

        let mut segment_values = Vec::with_capacity(breakpoints.len());
        if let Some(&first) = breakpoints.first() {
            let wrap_channel = *segment_channels.last().expect("non-empty");
            let mut value = wrap_channel as f64 * eta * first;
            segment_values.push(value);
            for i in 1..breakpoints.len() {
                value += segment_channels[i - 1] as f64 * eta * (breakpoints[i] - breakpoints[i - 1]);
                segment_values.push(value);
            }
        }

        Ok(Self {
            mu,
            eta,
            max_channel,
            breakpoints,
            segment_channels,
            segment_values,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `J = floor(μ/η)`. When `μ/η` is an exact integer the extreme channels
    /// `±J` are attained only at the isolated points `π/2` and `3π/2`.
    pub fn max_channel(&self) -> i64 {
        self.max_channel
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segment_channels(&self) -> &[i64] {
        &self.segment_channels
    }

    /// `j(θ) = trunc(μ·sin θ / η)`, the hot-loop evaluation.
    ///
    /// At an exact breakpoint this returns the larger-|j| side, which is what
    /// truncating the exact value gives.
    #[inline]
    pub fn channel_index(&self, theta: f64) -> i64 {
        (self.mu * theta.sin() / self.eta).trunc() as i64
    }

    /// Same as [`channel_index`](Self::channel_index) but answered from the
    /// stored breakpoints by binary search.
    pub fn channel_index_lookup(&self, theta: f64) -> i64 {
        if self.breakpoints.is_empty() {
            return 0;
        }
        let theta = wrap_angle(theta);
        let seg = self.segment_of(theta);
        let here = self.segment_channels[seg];
        if self.breakpoints[seg] == theta {
            let prev = self.segment_channels[(seg + self.breakpoints.len() - 1) % self.breakpoints.len()];
            if prev.abs() > here.abs() {
                return prev;
            }
        }
        here
    }

    /// `V'(θ) = j(θ)·η`.
    #[inline]
    pub fn kick_impulse(&self, theta: f64) -> f64 {
        self.channel_index(theta) as f64 * self.eta
    }

    /// `V(θ) = ∫₀^θ V'(s) ds`, normalized so that `V(0) = 0`.
    pub fn potential_value(&self, theta: f64) -> f64 {
        if self.breakpoints.is_empty() {
            return 0.0;
        }
        let theta = wrap_angle(theta);
        if theta < self.breakpoints[0] {
            let wrap_channel = *self.segment_channels.last().expect("non-empty");
            return wrap_channel as f64 * self.eta * theta;
        }
        let seg = self.segment_of(theta);
        self.segment_values[seg]
            + self.segment_channels[seg] as f64 * self.eta * (theta - self.breakpoints[seg])
    }

    /// All maximal arcs of constant channel, paired with their channel.
    pub fn arcs(&self) -> Vec<(Arc, i64)> {
        let count = self.breakpoints.len();
        if count == 0 {
            return vec![(Arc { start: 0.0, len: TAU }, 0)];
        }
        (0..count)
            .map(|i| {
                let start = self.breakpoints[i];
                let end = if i + 1 == count { self.breakpoints[0] + TAU } else { self.breakpoints[i + 1] };
                (Arc { start, len: end - start }, self.segment_channels[i])
            })
            .collect()
    }

    /// The maximal arcs on which the channel equals `j`; empty when `|j| > J`.
    pub fn channel_intervals(&self, j: i64) -> Vec<Arc> {
        if j.abs() > self.max_channel {
            return Vec::new();
        }
        self.arcs()
            .into_iter()
            .filter(|&(_, c)| c == j)
            .map(|(arc, _)| arc)
            .collect()
    }

    // Index of the segment containing `theta` (already in [0, 2π)).
    fn segment_of(&self, theta: f64) -> usize {
        match self.breakpoints.partition_point(|&b| b <= theta) {
            0 => self.breakpoints.len() - 1,
            i => i - 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GM: f64 = 1.618_033_988_749_895;

    // Bisection on sin(θ) − target over [lo, hi], independent of asin.
    fn bisect_sin(target: f64, mut lo: f64, mut hi: f64) -> f64 {
        let f = |t: f64| t.sin() - target;
        let increasing = f(hi) > f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) < 0.0) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn fig1_parameters_breakpoints_match_root_finder() {
        let pot = ChannelPotential::new(3.0, 1.2).unwrap();
        assert_eq!(pot.max_channel(), 2);
        let first_quadrant: Vec<f64> =
            pot.breakpoints().iter().copied().filter(|&b| b <= PI / 2.0).collect();
        assert_eq!(first_quadrant.len(), 2);
        let r1 = bisect_sin(0.4, 0.0, PI / 2.0);
        let r2 = bisect_sin(0.8, 0.0, PI / 2.0);
        assert!((first_quadrant[0] - r1).abs() < 1e-12);
        assert!((first_quadrant[1] - r2).abs() < 1e-12);
        assert!((r1 - 0.411517).abs() < 1e-6);
        assert!((r2 - 0.927295).abs() < 1e-6);
        assert_eq!(pot.breakpoints().len(), 8);
        let mut channels: Vec<i64> = pot.segment_channels().to_vec();
        channels.sort();
        channels.dedup();
        assert_eq!(channels, vec![-2, -1, 0, 1, 2]);
    }

    #[test]
    fn weak_kick_has_a_single_flat_channel() {
        let pot = ChannelPotential::new(1.0, 2.0).unwrap();
        assert_eq!(pot.max_channel(), 0);
        assert!(pot.breakpoints().is_empty());
        for i in 0..100 {
            let t = i as f64 * 0.0631;
            assert_eq!(pot.channel_index(t), 0);
            assert_eq!(pot.potential_value(t), 0.0);
        }
        let arcs = pot.channel_intervals(0);
        assert_eq!(arcs.len(), 1);
        assert_eq!(arcs[0].len, TAU);
    }

    #[test]
    fn golden_mean_eta_gives_three_channels() {
        let pot = ChannelPotential::new(3.0, PI / GM).unwrap();
        assert_eq!(pot.max_channel(), 1);
        let mut channels: Vec<i64> = pot.segment_channels().to_vec();
        channels.sort();
        channels.dedup();
        assert_eq!(channels, vec![-1, 0, 1]);
    }

    #[test]
    fn rejects_non_positive_parameters() {
        assert_eq!(ChannelPotential::new(0.0, 1.0).unwrap_err(), PotentialError::InvalidMu(0.0));
        assert_eq!(ChannelPotential::new(1.0, -1.0).unwrap_err(), PotentialError::InvalidEta(-1.0));
        assert!(ChannelPotential::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn channel_and_impulse_examples() {
        let pot = ChannelPotential::new(3.0, 1.2).unwrap();
        assert_eq!(pot.channel_index(PI / 2.0), 2);
        assert_eq!(pot.channel_index(0.0), 0);
        assert_eq!(pot.channel_index(3.0 * PI / 2.0), -2);
        assert!((pot.kick_impulse(PI / 2.0) - 2.4).abs() < 1e-15);
        assert_eq!(pot.kick_impulse(0.0), 0.0);
        assert!((pot.kick_impulse(0.5) - 1.2).abs() < 1e-15);
        assert_eq!(pot.channel_index_lookup(PI / 2.0), 2);
        assert_eq!(pot.channel_index_lookup(3.0 * PI / 2.0), -2);
    }

    #[test]
    fn lookup_takes_larger_channel_at_breakpoints() {
        let pot = ChannelPotential::new(3.0, 1.2).unwrap();
        for (&b, _) in pot.breakpoints().iter().zip(pot.segment_channels()) {
            let j = pot.channel_index_lookup(b);
            let left = pot.channel_index_lookup(b - 1e-9);
            let right = pot.channel_index_lookup(b + 1e-9);
            assert_eq!(j.abs(), left.abs().max(right.abs()));
        }
    }

    #[test]
    fn potential_at_pi_matches_trapezoid_quadrature() {
        let pot = ChannelPotential::new(3.0, 1.2).unwrap();
        let steps = 1_000_000;
        let h = PI / steps as f64;
        let mut sum = 0.5 * (pot.kick_impulse(0.0) + pot.kick_impulse(PI));
        for i in 1..steps {
            sum += pot.kick_impulse(i as f64 * h);
        }
        let quad = sum * h;
        assert!((pot.potential_value(PI) - quad).abs() < 1e-6);
        assert_eq!(pot.potential_value(0.0), 0.0);
    }

    #[test]
    fn j_zero_arcs_for_fig1_parameters() {
        let pot = ChannelPotential::new(3.0, 1.2).unwrap();
        let a = 0.4f64.asin();
        let arcs = pot.channel_intervals(0);
        assert_eq!(arcs.len(), 2);
        let total: f64 = arcs.iter().map(|arc| arc.len).sum();
        assert!((total - 4.0 * a).abs() < 1e-12);
        assert!(arcs.iter().any(|arc| (arc.start - (PI - a)).abs() < 1e-12));
        assert!(arcs.iter().any(|arc| (arc.start - (TAU - a)).abs() < 1e-12));
        assert!(pot.channel_intervals(3).is_empty());
    }

    #[test]
    fn arcs_partition_the_circle() {
        for &(mu, eta) in &[(3.0, 1.2), (4.0, PI / GM), (1.0, 2.0), (7.3, 0.37), (2.4, 1.2)] {
            let pot = ChannelPotential::new(mu, eta).unwrap();
            let j_max = pot.max_channel();
            let total: f64 = (-j_max..=j_max)
                .flat_map(|j| pot.channel_intervals(j))
                .map(|arc| arc.len)
                .sum();
            assert!((total - TAU).abs() < 1e-12, "mu={mu} eta={eta} total={total}");
        }
    }

    #[test]
    fn potential_is_continuous_and_periodic() {
        for &(mu, eta) in &[(3.0, 1.2), (4.0, PI / GM), (7.3, 0.37)] {
            let pot = ChannelPotential::new(mu, eta).unwrap();
            let slope_bound = pot.max_channel() as f64 * eta;
            for &b in pot.breakpoints() {
                let eps = 1e-13;
                let jump = pot.potential_value(b + eps) - pot.potential_value(b - eps);
                assert!(jump.abs() < 1e-12 + 2.0 * eps * slope_bound, "jump {jump} at {b}");
            }
            let last = pot.potential_value(TAU - 1e-15);
            assert!(last.abs() < 1e-12, "V(2π⁻) = {last}");
        }
    }

    #[test]
    fn converges_to_smooth_kicked_rotor_potential() {
        let mu = 3.0;
        let sup_distance = |eta: f64| {
            let pot = ChannelPotential::new(mu, eta).unwrap();
            (0..4096)
                .map(|i| {
                    let t = TAU * i as f64 / 4096.0;
                    (pot.potential_value(t) - mu * (1.0 - t.cos())).abs()
                })
                .fold(0.0, f64::max)
        };
        let d: Vec<f64> = [0.5, 0.25, 0.125].iter().map(|&e| sup_distance(e)).collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    }

    proptest! {
        #[test]
        fn antisymmetry_under_half_turn(theta in 0.0..TAU, mu in 0.5f64..8.0, eta in 0.1f64..3.0) {
            let pot = ChannelPotential::new(mu, eta).unwrap();
            let shifted = wrap_angle(theta + PI);
            let near_break = pot.breakpoints().iter().any(|&b| {
                let d = (theta - b).rem_euclid(TAU);
                d.min(TAU - d) < 1e-9
            });
            prop_assume!(!near_break);
            prop_assert_eq!(pot.channel_index(shifted), -pot.channel_index(theta));
            prop_assert!(pot.channel_index(theta).abs() <= pot.max_channel());
        }

        #[test]
        fn fast_path_agrees_with_lookup(theta in 0.0..TAU, mu in 0.5f64..8.0, eta in 0.1f64..3.0) {
            let pot = ChannelPotential::new(mu, eta).unwrap();
            let near_break = pot.breakpoints().iter().any(|&b| {
                let d = (theta - b).rem_euclid(TAU);
                d.min(TAU - d) < 1e-9
            }) || (mu / eta).fract() < 1e-9;
            prop_assume!(!near_break);
            prop_assert_eq!(pot.channel_index(theta), pot.channel_index_lookup(theta));
        }
    }
}
