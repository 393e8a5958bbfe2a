//! Seeded ensembles: energy growth, momentum distributions and the smooth
//! kicked-rotor control.
//!
//! Trajectories are processed in fixed-size chunks. Each chunk reduces its
//! own trajectories in index order and chunk partials are combined in chunk
//! order, so results do not depend on the number of worker threads.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{step_reduced, DynamicsError, PhasePoint, ReducedState};
use crate::fit::fit_line;
use crate::potential::{wrap_angle, ChannelPotential};

const CHUNK: usize = 1024;

/// How initial momenta are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum InitialMomentum {
    /// Every trajectory starts at the same `p₀` (one quasi-momentum).
    Fixed(f64),
    /// `p₀` uniform on `(−η/2, η/2)`, which averages over quasi-momenta.
    UniformCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub size: usize,
    pub p0: InitialMomentum,
    pub seed: u64,
    pub kicks: u64,
    /// Trailing average length in kicks.
    pub window: usize,
    /// Ratio between consecutive recorded times.
    pub record_ratio: f64,
}

impl EnsembleSpec {
    pub fn new(size: usize, p0: InitialMomentum, seed: u64, kicks: u64) -> Self {
        Self {
            size,
            p0,
            seed,
            kicks,
            window: 100,
            record_ratio: 1.1,
        }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.size == 0 {
            return Err(DynamicsError::InvalidSpec("ensemble size must be at least 1".into()));
        }
        if self.kicks == 0 {
            return Err(DynamicsError::InvalidSpec("at least one kick is required".into()));
        }
        if self.window == 0 {
            return Err(DynamicsError::InvalidSpec("window must be at least 1".into()));
        }
        if self.window as u64 > self.kicks {
            return Err(DynamicsError::WindowTooLong {
                window: self.window,
                kicks: self.kicks,
            });
        }
        if !(self.record_ratio > 1.0 && self.record_ratio.is_finite()) {
            return Err(DynamicsError::InvalidSpec("record ratio must exceed 1".into()));
        }
        if let InitialMomentum::Fixed(p) = self.p0 {
            if !p.is_finite() {
                return Err(DynamicsError::InvalidSpec(format!("initial momentum {p} is not finite")));
            }
        }
        Ok(())
    }

    /// Geometric grid `1, …, kicks` with ratio `record_ratio`, always ending
    /// at `kicks`.
    pub fn record_times(&self) -> Vec<u64> {
        let mut times = Vec::new();
        let mut x = 1.0f64;
        while (x.round() as u64) < self.kicks {
            let t = x.round() as u64;
            if times.last() != Some(&t) {
                times.push(t);
            }
            x *= self.record_ratio;
        }
        times.push(self.kicks);
        times
    }

    /// The initial condition of trajectory `index`; depends only on
    /// `(seed, index)`.
    pub fn initial_point(&self, eta: f64, index: usize) -> PhasePoint {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let theta = rng.random::<f64>() * TAU;
        let p = match self.p0 {
            InitialMomentum::Fixed(p) => p,
            InitialMomentum::UniformCell => (rng.random::<f64>() - 0.5) * eta,
        };
        PhasePoint::new(theta, p)
    }
}

/// `⟨p²⟩` at the recorded times, raw and trailing-window averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub times: Vec<u64>,
    pub mean_p2: Vec<f64>,
    pub windowed_mean_p2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumHistogram {
    pub centers: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub bin_width: f64,
    /// Number of final kicks accumulated.
    pub window: usize,
}

fn chunk_ranges(size: usize) -> Vec<Range<usize>> {
    (0..size.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(size))
        .collect()
}

/// Per-chunk sums of `p²` at every kick `0..=kicks`.
fn chunk_energy_sums<S, I, A, M>(spec: &EnsembleSpec, init: I, advance: A, momentum: M) -> Vec<Vec<f64>>
where
    S: Send,
    I: Fn(usize) -> S + Sync,
    A: Fn(&mut S) + Sync,
    M: Fn(&S) -> f64 + Sync,
{
    let kicks = spec.kicks as usize;
    chunk_ranges(spec.size)
        .into_par_iter()
        .map(|range| {
            let mut states: Vec<S> = range.map(&init).collect();
            let mut sums = vec![0.0; kicks + 1];
            sums[0] = states.iter().map(|s| momentum(s).powi(2)).sum();
            for slot in sums.iter_mut().skip(1) {
                let mut acc = 0.0;
                for s in states.iter_mut() {
                    advance(s);
                    let p = momentum(s);
                    acc += p * p;
                }
                *slot = acc;
            }
            sums
        })
        .collect()
}

/// Neumaier-compensated combination of chunk partials, in the given order.
fn combine_chunks<'a>(chunks: impl Iterator<Item = &'a Vec<f64>>, len: usize) -> Vec<f64> {
    let mut sum = vec![0.0f64; len];
    let mut comp = vec![0.0f64; len];
    for chunk in chunks {
        for ((s, c), &x) in sum.iter_mut().zip(comp.iter_mut()).zip(chunk) {
            let t = *s + x;
            if s.abs() >= x.abs() {
                *c += (*s - t) + x;
            } else {
                *c += (x - t) + *s;
            }
            *s = t;
        }
    }
    sum.iter().zip(&comp).map(|(s, c)| s + c).collect()
}

fn series_from_means(spec: &EnsembleSpec, per_kick_mean: &[f64]) -> EnergySeries {
    let times = spec.record_times();
    let mean_p2 = times.iter().map(|&t| per_kick_mean[t as usize]).collect();
    let windowed_mean_p2 = times
        .iter()
        .map(|&t| {
            let t = t as usize;
            let lo = (t + 1).saturating_sub(spec.window).max(1);
            per_kick_mean[lo..=t].iter().sum::<f64>() / (t + 1 - lo) as f64
        })
        .collect();
    EnergySeries {
        times,
        mean_p2,
        windowed_mean_p2,
    }
}

fn reduced_initial(spec: &EnsembleSpec, eta: f64, index: usize) -> ReducedState {
    ReducedState::from_phase_point(spec.initial_point(eta, index), eta)
}

fn gtm_chunk_sums(pot: &ChannelPotential, spec: &EnsembleSpec) -> Vec<Vec<f64>> {
    let eta = pot.eta();
    chunk_energy_sums(
        spec,
        |i| reduced_initial(spec, eta, i),
        |s| *s = step_reduced(pot, *s),
        |s| s.momentum(eta),
    )
}

fn means(chunks: &[Vec<f64>], spec: &EnsembleSpec, reverse: bool) -> Vec<f64> {
    let len = spec.kicks as usize + 1;
    let total = if reverse {
        combine_chunks(chunks.iter().rev(), len)
    } else {
        combine_chunks(chunks.iter(), len)
    };
    total.into_iter().map(|s| s / spec.size as f64).collect()
}

/// Mean-square momentum of a seeded ensemble under the reduced map.
pub fn simulate_ensemble(pot: &ChannelPotential, spec: &EnsembleSpec) -> Result<EnergySeries, DynamicsError> {
    spec.validate()?;
    let chunks = gtm_chunk_sums(pot, spec);
    Ok(series_from_means(spec, &means(&chunks, spec, false)))
}

/// The same harness driven by the smooth kick `μ·sin θ`.
///
/// `cell` is the width used for [`InitialMomentum::UniformCell`] draws; pass
/// the `η` of the map being compared against.
pub fn standard_map_baseline(mu: f64, cell: f64, spec: &EnsembleSpec) -> Result<EnergySeries, DynamicsError> {
    spec.validate()?;
    let chunks = chunk_energy_sums(
        spec,
        |i| spec.initial_point(cell, i),
        |s| {
            s.p += mu * s.theta.sin();
            s.theta = wrap_angle(s.theta + s.p);
        },
        |s| s.p,
    );
    Ok(series_from_means(spec, &means(&chunks, spec, false)))
}

/// Normalized histogram of `p = β + n·η` accumulated over the final
/// `spec.window` kicks. Bins have width `η` centred on the momentum lattice
/// for a fixed `p₀`, and width `η/8` centred on multiples of `η/8` when
/// quasi-momentum is averaged.
pub fn momentum_distribution(
    pot: &ChannelPotential,
    spec: &EnsembleSpec,
) -> Result<MomentumHistogram, DynamicsError> {
    spec.validate()?;
    let eta = pot.eta();
    let (width, offset) = match spec.p0 {
        InitialMomentum::Fixed(p) => (eta, p.rem_euclid(eta)),
        InitialMomentum::UniformCell => (eta / 8.0, 0.0),
    };
    let first_recorded = spec.kicks - spec.window as u64 + 1;
    let bin = |p: f64| ((p - offset) / width).round() as i64;

    let partials: Vec<BTreeMap<i64, u64>> = chunk_ranges(spec.size)
        .into_par_iter()
        .map(|range| {
            let mut states: Vec<ReducedState> = range.map(|i| reduced_initial(spec, eta, i)).collect();
            let mut counts = BTreeMap::new();
            for t in 1..=spec.kicks {
                for s in states.iter_mut() {
                    *s = step_reduced(pot, *s);
                    if t >= first_recorded {
                        *counts.entry(bin(s.momentum(eta))).or_insert(0u64) += 1;
                    }
                }
            }
            counts
        })
        .collect();

    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for partial in partials {
        for (k, v) in partial {
            *counts.entry(k).or_insert(0) += v;
        }
    }
    let lo = *counts.keys().next().expect("at least one sample");
    let hi = *counts.keys().next_back().expect("at least one sample");
    // widen to a range symmetric about p = 0
    let reach = (offset + lo as f64 * width).abs().max((offset + hi as f64 * width).abs());
    let i_min = lo.min(((-reach - offset) / width).floor() as i64);
    let i_max = hi.max(((reach - offset) / width).ceil() as i64);

    let total: u64 = counts.values().sum();
    let centers = (i_min..=i_max).map(|i| offset + i as f64 * width).collect();
    let probabilities = (i_min..=i_max)
        .map(|i| counts.get(&i).copied().unwrap_or(0) as f64 / total as f64)
        .collect();
    Ok(MomentumHistogram {
        centers,
        probabilities,
        bin_width: width,
        window: spec.window,
    })
}

/// Least-squares slope of `ln y` against `ln t` for `t ∈ [t_lo, t_hi]`.
pub fn loglog_slope(times: &[u64], values: &[f64], window: (f64, f64)) -> Result<f64, DynamicsError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        let t = t as f64;
        if t < window.0 || t > window.1 {
            continue;
        }
        if t <= 0.0 || v <= 0.0 {
            return Err(DynamicsError::NonPositive { t, value: v });
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    if xs.len() < 3 {
        return Err(DynamicsError::DegenerateFit { points: xs.len() });
    }
    fit_line(&xs, &ys)
        .map(|f| f.slope)
        .ok_or(DynamicsError::DegenerateFit { points: xs.len() })
}

/// Growth exponent of the window-averaged `⟨p²⟩` over `[t_lo, t_hi]`.
pub fn growth_exponent(series: &EnergySeries, window: (f64, f64)) -> Result<f64, DynamicsError> {
    loglog_slope(&series.times, &series.windowed_mean_p2, window)
}

/// Least-squares `a` in `⟨p²⟩ ≈ a·t²` over `[t_lo, t_hi]`, from the
/// instantaneous (unwindowed) series.
pub fn quadratic_coefficient(series: &EnergySeries, window: (f64, f64)) -> Result<f64, DynamicsError> {
    let (mut num, mut den, mut points) = (0.0, 0.0, 0usize);
    for (&t, &v) in series.times.iter().zip(&series.mean_p2) {
        let t = t as f64;
        if t < window.0 || t > window.1 {
            continue;
        }
        num += v * t * t;
        den += t.powi(4);
        points += 1;
    }
    if points < 3 {
        return Err(DynamicsError::DegenerateFit { points });
    }
    Ok(num / den)
}
