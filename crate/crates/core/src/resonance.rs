//! Exact analysis of the commensurate case.
//!
//! When `β·s = η·r` with `r, s` coprime, momenta and angles live on the
//! lattice `p = N·λ`, `θ = θ₀ + M·λ` with `λ = η/s = β/r`. If moreover
//! `λ = 2π·P/Q`, the integer map
//!
//! ```text
//! N' = N + Φ(M),   M' = M + N',   Φ(M) = λ⁻¹·V'(θ₀ + M·λ)
//! ```
//!
//! commutes with translations by `Q` in both variables and therefore acts as a
//! bijection of the `Q × Q` discrete torus. Every orbit is periodic, and an
//! orbit with momentum winding `L ≠ 0` gains on average `L·Q·λ/T` per kick.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::{wrap_angle, ChannelPotential};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonanceError {
    #[error("torus modulus Q must be at least 1, got {0}")]
    InvalidModulus(i64),
    #[error("{name} = {num}/{den} is not in lowest terms")]
    NotCoprime { name: &'static str, num: i64, den: i64 },
    #[error("quasi-momentum numerator r = {r} must lie in [0, s = {s})")]
    InvalidQuasiMomentum { r: i64, s: i64 },
    #[error("potential eta = {eta} does not equal s·2πP/Q = {expected}")]
    EtaMismatch { eta: f64, expected: f64 },
    #[error("integer orbit overflowed 64-bit range")]
    Overflow,
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

/// Lattice data of one commensurate configuration and its `Φ` table.
#[derive(Debug, Clone)]
pub struct ResonanceParams {
    p: i64,
    q: i64,
    r: i64,
    s: i64,
    lambda: f64,
    theta0: f64,
    phi: Vec<i64>,
}

impl ResonanceParams {
    /// `λ = 2πP/Q`, `η = s·λ` (checked against the potential) and `β = r·λ`.
    pub fn new(pot: &ChannelPotential, p: i64, q: i64, r: i64, s: i64, theta0: f64) -> Result<Self, ResonanceError> {
        if q < 1 {
            return Err(ResonanceError::InvalidModulus(q));
        }
        if gcd(p, q) != 1 {
            return Err(ResonanceError::NotCoprime { name: "P/Q", num: p, den: q });
        }
        if s < 1 || r < 0 || r >= s {
            return Err(ResonanceError::InvalidQuasiMomentum { r, s });
        }
        if gcd(r, s) != 1 {
            return Err(ResonanceError::NotCoprime { name: "r/s", num: r, den: s });
        }
        let lambda = TAU * p as f64 / q as f64;
        let expected = s as f64 * lambda;
        if (pot.eta() - expected).abs() > 1e-9 * expected.abs() {
            return Err(ResonanceError::EtaMismatch {
                eta: pot.eta(),
                expected,
            });
        }
        let theta0 = wrap_angle(theta0);
        let mut params = Self {
            p,
            q,
            r,
            s,
            lambda,
            theta0,
            phi: Vec::new(),
        };
        params.phi = (0..q).map(|m| s * pot.channel_index(params.angle(m))).collect();
        Ok(params)
    }

    pub fn modulus(&self) -> i64 {
        self.q
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.r as f64 * self.lambda
    }

    pub fn eta(&self) -> f64 {
        self.s as f64 * self.lambda
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn phi_table(&self) -> &[i64] {
        &self.phi
    }

    /// `Φ(M)`, periodic with period `Q`.
    #[inline]
    pub fn phi(&self, m: i64) -> i64 {
        self.phi[m.rem_euclid(self.q) as usize]
    }

    /// `θ₀ + M·λ mod 2π`, with `M·P` reduced modulo `Q` in integers first.
    pub fn angle(&self, m: i64) -> f64 {
        let residue = (m as i128 * self.p as i128).rem_euclid(self.q as i128) as f64;
        wrap_angle(self.theta0 + TAU * residue / self.q as f64)
    }

    /// Integer momentum `N` of a reduced band `n`: `p = β + n·η = (r + s·n)·λ`.
    pub fn lattice_momentum(&self, n: i64) -> i64 {
        self.r + self.s * n
    }
}

/// One application of the integer map.
pub fn integer_step(params: &ResonanceParams, n: i64, m: i64) -> Result<(i64, i64), ResonanceError> {
    let n_next = n.checked_add(params.phi(m)).ok_or(ResonanceError::Overflow)?;
    let m_next = m.checked_add(n_next).ok_or(ResonanceError::Overflow)?;
    Ok((n_next, m_next))
}

/// Explicit inverse: `M = M' − N'`, `N = N' − Φ(M)`.
pub fn integer_step_inverse(params: &ResonanceParams, n: i64, m: i64) -> Result<(i64, i64), ResonanceError> {
    let m_prev = m.checked_sub(n).ok_or(ResonanceError::Overflow)?;
    let n_prev = n.checked_sub(params.phi(m_prev)).ok_or(ResonanceError::Overflow)?;
    Ok((n_prev, m_prev))
}

/// Unwrapped integer orbit of `steps + 1` states.
pub fn integer_orbit(
    params: &ResonanceParams,
    n0: i64,
    m0: i64,
    steps: usize,
) -> Result<Vec<(i64, i64)>, ResonanceError> {
    let mut out = Vec::with_capacity(steps + 1);
    let (mut n, mut m) = (n0, m0);
    out.push((n, m));
    for _ in 0..steps {
        (n, m) = integer_step(params, n, m)?;
        out.push((n, m));
    }
    Ok(out)
}

/// Period and winding numbers of the torus orbit through a start state.
///
/// After `period` steps the unwrapped state is `(N₀ + L·Q, M₀ + K·Q)`. `T` and
/// `L` are shared by every state of the cycle; `K` depends on the start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusCycle {
    pub period: u64,
    pub k: i64,
    pub l: i64,
    pub start: (i64, i64),
}

pub fn find_cycle(params: &ResonanceParams, n0: i64, m0: i64) -> TorusCycle {
    let q = params.q as i128;
    let start = (n0 as i128, m0 as i128);
    let (mut n, mut m) = start;
    let mut period = 0u64;
    loop {
        n += params.phi(m.rem_euclid(q) as i64) as i128;
        m += n;
        period += 1;
        if (n - start.0).rem_euclid(q) == 0 && (m - start.1).rem_euclid(q) == 0 {
            break;
        }
    }
    TorusCycle {
        period,
        k: ((m - start.1) / q) as i64,
        l: ((n - start.0) / q) as i64,
        start: (n0.rem_euclid(params.q), m0.rem_euclid(params.q)),
    }
}

/// Mean momentum gain per kick, `L·Q·λ/T`.
pub fn ballistic_coefficient(cycle: &TorusCycle, params: &ResonanceParams) -> f64 {
    cycle.l as f64 * params.q as f64 * params.lambda / cycle.period as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensusMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub period: u64,
    pub k: i64,
    pub l: i64,
    /// Number of censused states on this cycle.
    pub states: u64,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleCensus {
    pub states: u64,
    pub ballistic_states: u64,
    pub ballistic_fraction: f64,
    pub mean_c2: f64,
    pub max_abs_c: f64,
    pub max_period: u64,
    pub cycles: Vec<CycleRecord>,
}

fn summarize(records: Vec<CycleRecord>) -> CycleCensus {
    let states: u64 = records.iter().map(|c| c.states).sum();
    let ballistic_states: u64 = records.iter().filter(|c| c.l != 0).map(|c| c.states).sum();
    let mean_c2 = records
        .iter()
        .map(|c| c.states as f64 * c.coefficient * c.coefficient)
        .sum::<f64>()
        / states.max(1) as f64;
    CycleCensus {
        states,
        ballistic_states,
        ballistic_fraction: ballistic_states as f64 / states.max(1) as f64,
        mean_c2,
        max_abs_c: records.iter().map(|c| c.coefficient.abs()).fold(0.0, f64::max),
        max_period: records.iter().map(|c| c.period).max().unwrap_or(0),
        cycles: records,
    }
}

/// Cycle statistics over the torus, either every state or a seeded sample.
pub fn cycle_census(params: &ResonanceParams, mode: CensusMode) -> CycleCensus {
    let q = params.q;
    match mode {
        CensusMode::Exhaustive => {
            let size = (q * q) as usize;
            let index = |n: i64, m: i64| (n.rem_euclid(q) * q + m.rem_euclid(q)) as usize;
            let mut visited = vec![false; size];
            let mut records = Vec::new();
            for start in 0..size {
                if visited[start] {
                    continue;
                }
                let (n0, m0) = ((start as i64) / q, (start as i64) % q);
                let cycle = find_cycle(params, n0, m0);
                let (mut n, mut m) = (n0, m0);
                for _ in 0..cycle.period {
                    visited[index(n, m)] = true;
                    n = (n + params.phi(m)).rem_euclid(q);
                    m = (m + n).rem_euclid(q);
                }
                records.push(CycleRecord {
                    period: cycle.period,
                    k: cycle.k,
                    l: cycle.l,
                    states: cycle.period,
                    coefficient: ballistic_coefficient(&cycle, params),
                });
            }
            summarize(records)
        }
        CensusMode::Sampled { count, seed } => {
            let records = (0..count)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    let cycle = find_cycle(params, rng.random_range(0..q), rng.random_range(0..q));
                    CycleRecord {
                        period: cycle.period,
                        k: cycle.k,
                        l: cycle.l,
                        states: 1,
                        coefficient: ballistic_coefficient(&cycle, params),
                    }
                })
                .collect();
            summarize(records)
        }
    }
}

/// First `μ` of an increasing scan whose exhaustive census has ballistic states.
pub fn ballistic_threshold(
    mus: &[f64],
    p: i64,
    q: i64,
    r: i64,
    s: i64,
    theta0: f64,
) -> Result<Option<f64>, ResonanceError> {
    let eta = s as f64 * TAU * p as f64 / q as f64;
    for &mu in mus {
        let pot = ChannelPotential::new(mu, eta).map_err(|_| ResonanceError::InvalidModulus(q))?;
        let params = ResonanceParams::new(&pot, p, q, r, s, theta0)?;
        if cycle_census(&params, CensusMode::Exhaustive).ballistic_states > 0 {
            return Ok(Some(mu));
        }
    }
    Ok(None)
}

/// Predicted `⟨p²⟩/t²` for an ensemble of `(θ₀, n₀)` starts: the mean of `c²`
/// over the cycles through `(N₀, 0)` of each start's own `Φ` table.
pub fn mean_square_coefficient(
    pot: &ChannelPotential,
    p: i64,
    q: i64,
    r: i64,
    s: i64,
    starts: &[(f64, i64)],
) -> Result<f64, ResonanceError> {
    let total = starts
        .par_iter()
        .map(|&(theta0, n0)| {
            let params = ResonanceParams::new(pot, p, q, r, s, theta0)?;
            let cycle = find_cycle(&params, params.lattice_momentum(n0), 0);
            Ok(ballistic_coefficient(&cycle, &params).powi(2))
        })
        .collect::<Result<Vec<f64>, ResonanceError>>()?;
    Ok(total.iter().sum::<f64>() / starts.len().max(1) as f64)
}
