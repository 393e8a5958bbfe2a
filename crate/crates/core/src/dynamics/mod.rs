//! Iteration of the quantized-kick map in its full and reduced forms.
//!
//! The full map is `p' = p + V'(θ)`, `θ' = θ + p'`. Because every kick is a
//! multiple of `η`, the quasi-momentum `β = p mod η` is conserved and the
//! reduced form tracks only the integer band `n` with `p = β + n·η`.

mod ensemble;

pub use ensemble::{
    growth_exponent, loglog_slope, momentum_distribution, quadratic_coefficient, simulate_ensemble, standard_map_baseline,
    EnergySeries, EnsembleSpec, InitialMomentum, MomentumHistogram,
};

use std::f64::consts::TAU;

use thiserror::Error;

use crate::potential::{wrap_angle, ChannelPotential};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid ensemble: {0}")]
    InvalidSpec(String),
    #[error("averaging window of {window} kicks exceeds the {kicks} simulated kicks")]
    WindowTooLong { window: usize, kicks: u64 },
    #[error("fit window holds {points} usable points, need at least 3")]
    DegenerateFit { points: usize },
    #[error("non-positive value {value} at t = {t} inside a log-log fit window")]
    NonPositive { t: f64, value: f64 },
}

/// A point of the full map. `theta` is kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub theta: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(theta: f64, p: f64) -> Self {
        Self {
            theta: wrap_angle(theta),
            p,
        }
    }
}

/// `(θ, n, β)` with `p = β + n·η`; `β` is fixed at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub theta: f64,
    pub n: i64,
    beta: f64,
}

impl ReducedState {
    pub fn new(theta: f64, n: i64, beta: f64) -> Self {
        Self {
            theta: wrap_angle(theta),
            n,
            beta,
        }
    }

    /// Splits a momentum into band and quasi-momentum `β ∈ [0, η)`.
    pub fn from_phase_point(point: PhasePoint, eta: f64) -> Self {
        let mut n = (point.p / eta).floor() as i64;
        let mut beta = point.p - n as f64 * eta;
        if beta >= eta {
            beta -= eta;
            n += 1;
        } else if beta < 0.0 {
            beta = 0.0;
        }
        Self::new(point.theta, n, beta)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn momentum(&self, eta: f64) -> f64 {
        self.beta + self.n as f64 * eta
    }

    pub fn to_phase_point(&self, eta: f64) -> PhasePoint {
        PhasePoint {
            theta: self.theta,
            p: self.momentum(eta),
        }
    }
}

/// One kick followed by one free rotation.
#[inline]
pub fn step(pot: &ChannelPotential, s: PhasePoint) -> PhasePoint {
    let p = s.p + pot.kick_impulse(s.theta);
    PhasePoint {
        theta: wrap_angle(s.theta + p),
        p,
    }
}

/// Explicit inverse of [`step`].
#[inline]
pub fn step_inverse(pot: &ChannelPotential, s: PhasePoint) -> PhasePoint {
    let theta = wrap_angle(s.theta - s.p);
    PhasePoint {
        theta,
        p: s.p - pot.kick_impulse(theta),
    }
}

/// The reduced map `n' = n + j(θ)`, `θ' = θ + β + n'·η`.
#[inline]
pub fn step_reduced(pot: &ChannelPotential, s: ReducedState) -> ReducedState {
    let n = s.n + pot.channel_index(s.theta);
    ReducedState {
        theta: wrap_angle(s.theta + s.beta + n as f64 * pot.eta()),
        n,
        beta: s.beta,
    }
}

/// Explicit inverse of [`step_reduced`].
#[inline]
pub fn step_reduced_inverse(pot: &ChannelPotential, s: ReducedState) -> ReducedState {
    let theta = wrap_angle(s.theta - s.beta - s.n as f64 * pot.eta());
    ReducedState {
        theta,
        n: s.n - pot.channel_index(theta),
        beta: s.beta,
    }
}

/// Full-map trajectory of `steps + 1` points with unreduced momentum.
pub fn trajectory(pot: &ChannelPotential, s0: PhasePoint, steps: usize) -> Vec<PhasePoint> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = PhasePoint::new(s0.theta, s0.p);
    out.push(s);
    for _ in 0..steps {
        s = step(pot, s);
        out.push(s);
    }
    out
}

/// Trajectory on the 2-torus: momentum reduced into `[0, 2π)`.
pub fn orbit_trace(pot: &ChannelPotential, s0: PhasePoint, steps: usize) -> Vec<PhasePoint> {
    trajectory(pot, s0, steps)
        .into_iter()
        .map(|s| PhasePoint {
            theta: s.theta,
            p: s.p.rem_euclid(TAU),
        })
        .collect()
}
