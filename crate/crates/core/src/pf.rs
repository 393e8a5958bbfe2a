//! Unitary evolution of phase-space functions under the composition operator
//! of the quantized-kick map.
//!
//! A field `Ψ(θ_g, n)` lives on `G` equispaced angles and bands
//! `n ∈ [−N, N]`. One step is
//!
//! ```text
//! (UΨ)(θ, n) = Ψ(θ − a_n, n − 2·j(θ − a_n)),   a_n = η·n/2 + β.
//! ```
//!
//! Writing `g_n(φ) = Ψ(φ, n − 2·j(φ))`, the step is `g_n` translated by
//! `a_n`. The gather `g_n` is a per-angle translation in `n` and is applied
//! exactly on the grid; the translation in `θ` is a spectral phase ramp. Both
//! factors are unitary on the discrete field, so the norm is kept to rounding.
//!
//! Restricted to even bands `n = 2m` the operator moves a point mass at
//! `(θ, m)` to the image of the reduced map `m' = m + j(θ)`,
//! `θ' = θ + β + m'·η`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::{wrap_angle, ChannelPotential};

/// Boundary bands may hold at most this fraction of the norm before a step.
pub const LEAKAGE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PfError {
    #[error("grid size {0} must be a power of two and at least 4")]
    InvalidGrid(usize),
    #[error("band range ±{bands} must exceed twice the largest channel {max_channel}")]
    InvalidBands { bands: usize, max_channel: i64 },
    #[error("boundary bands hold {fraction:.3e} of the norm; increase the band range beyond ±{bands}")]
    Leakage { fraction: f64, bands: usize },
    #[error("expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("initial state has zero norm")]
    ZeroNorm,
    #[error("band {band} lies outside ±{bands}")]
    BandOutOfRange { band: i64, bands: usize },
}

/// Which band's shear offset multiplies the rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShearOrdering {
    /// `a_n` of the output band, as in the operator above.
    #[default]
    PreKick,
    /// Alternative factor order: shear each source band by its own offset,
    /// then gather at the output angle.
    PostKick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialState {
    /// Uniform in `θ` on a single band: only harmonic `k = 0` is occupied.
    UniformBand { band: i64 },
    /// Periodized Gaussian in `θ` on a single band.
    Gaussian { theta: f64, width: f64, band: i64 },
    /// One grid cell (the one nearest `theta`) of a single band.
    Point { theta: f64, band: i64 },
}

#[derive(Clone)]
struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// A phase-space field with its evolution parameters.
#[derive(Clone)]
pub struct PFField {
    grid: usize,
    bands: usize,
    pot: ChannelPotential,
    beta: f64,
    ordering: ShearOrdering,
    time: u64,
    data: Vec<Complex64>,
    /// `j(θ_g)` at the grid angles.
    channels: Vec<i64>,
    /// `e^{−i·k·a_n}` for every band, in FFT order.
    phases: Arc<Vec<Complex64>>,
    plans: Plans,
}

impl fmt::Debug for PFField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PFField")
            .field("grid", &self.grid)
            .field("bands", &self.bands)
            .field("mu", &self.pot.mu())
            .field("eta", &self.pot.eta())
            .field("beta", &self.beta)
            .field("ordering", &self.ordering)
            .field("time", &self.time)
            .finish_non_exhaustive()
    }
}

/// Signed harmonic of FFT slot `i`, in `[−G/2, G/2)`.
#[inline]
pub fn harmonic_of_slot(i: usize, grid: usize) -> i64 {
    if i < grid / 2 {
        i as i64
    } else {
        i as i64 - grid as i64
    }
}

impl PFField {
    /// A zero field on `grid` angles and bands `−bands..=bands`.
    pub fn new(
        pot: &ChannelPotential,
        beta: f64,
        grid: usize,
        bands: usize,
        ordering: ShearOrdering,
    ) -> Result<Self, PfError> {
        if grid < 4 || !grid.is_power_of_two() {
            return Err(PfError::InvalidGrid(grid));
        }
        if bands as i64 <= 2 * pot.max_channel() {
            return Err(PfError::InvalidBands {
                bands,
                max_channel: pot.max_channel(),
            });
        }
        let step = TAU / grid as f64;
        let channels = (0..grid).map(|g| pot.channel_index(g as f64 * step)).collect();
        let rows = 2 * bands + 1;
        let mut phases = Vec::with_capacity(rows * grid);
        for row in 0..rows {
            let n = row as i64 - bands as i64;
            let a = pot.eta() * n as f64 / 2.0 + beta;
            for i in 0..grid {
                let k = harmonic_of_slot(i, grid) as f64;
                phases.push(Complex64::from_polar(1.0, -k * a));
            }
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(grid),
            inverse: planner.plan_fft_inverse(grid),
        };
        Ok(Self {
            grid,
            bands,
            pot: pot.clone(),
            beta,
            ordering,
            time: 0,
            data: vec![Complex64::new(0.0, 0.0); rows * grid],
            channels,
            phases: Arc::new(phases),
            plans,
        })
    }

    /// A unit-norm field built from one of the preset initial states.
    pub fn with_initial(
        pot: &ChannelPotential,
        beta: f64,
        grid: usize,
        bands: usize,
        ordering: ShearOrdering,
        initial: &InitialState,
    ) -> Result<Self, PfError> {
        let mut field = Self::new(pot, beta, grid, bands, ordering)?;
        let step = TAU / grid as f64;
        match *initial {
            InitialState::UniformBand { band } => {
                let row = field.row_of(band)?;
                field.band_mut(row).fill(Complex64::new(1.0, 0.0));
            }
            InitialState::Gaussian { theta, width, band } => {
                let row = field.row_of(band)?;
                let centre = wrap_angle(theta);
                for (g, v) in field.band_mut(row).iter_mut().enumerate() {
                    let d = (g as f64 * step - centre).rem_euclid(TAU);
                    let d = d.min(TAU - d);
                    *v = Complex64::new((-d * d / (2.0 * width * width)).exp(), 0.0);
                }
            }
            InitialState::Point { theta, band } => {
                let row = field.row_of(band)?;
                let g = (wrap_angle(theta) / step).round() as usize % grid;
                field.band_mut(row)[g] = Complex64::new(1.0, 0.0);
            }
        }
        field.normalize()?;
        Ok(field)
    }

    /// A field from band-major samples (`(2·bands + 1)·grid` values, band
    /// `−bands` first), normalized to unit norm.
    pub fn from_samples(
        pot: &ChannelPotential,
        beta: f64,
        grid: usize,
        bands: usize,
        ordering: ShearOrdering,
        samples: Vec<Complex64>,
    ) -> Result<Self, PfError> {
        let mut field = Self::new(pot, beta, grid, bands, ordering)?;
        if samples.len() != field.data.len() {
            return Err(PfError::ShapeMismatch {
                expected: field.data.len(),
                got: samples.len(),
            });
        }
        field.data = samples;
        field.normalize()?;
        Ok(field)
    }

    fn normalize(&mut self) -> Result<(), PfError> {
        let norm = self.norm_squared().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(PfError::ZeroNorm);
        }
        self.data.iter_mut().for_each(|v| *v /= norm);
        Ok(())
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn potential(&self) -> &ChannelPotential {
        &self.pot
    }

    pub fn ordering(&self) -> ShearOrdering {
        self.ordering
    }

    pub fn cell_width(&self) -> f64 {
        TAU / self.grid as f64
    }

    pub fn theta(&self, g: usize) -> f64 {
        g as f64 * self.cell_width()
    }

    pub fn band_numbers(&self) -> impl Iterator<Item = i64> {
        let b = self.bands as i64;
        -b..=b
    }

    fn row_of(&self, band: i64) -> Result<usize, PfError> {
        if band.unsigned_abs() as usize > self.bands {
            return Err(PfError::BandOutOfRange {
                band,
                bands: self.bands,
            });
        }
        Ok((band + self.bands as i64) as usize)
    }

    fn band_mut(&mut self, row: usize) -> &mut [Complex64] {
        &mut self.data[row * self.grid..(row + 1) * self.grid]
    }

    /// Grid samples of band `n`.
    pub fn band(&self, n: i64) -> Option<&[Complex64]> {
        let row = self.row_of(n).ok()?;
        Some(&self.data[row * self.grid..(row + 1) * self.grid])
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.data
    }

    /// `Σ |Ψ|²·2π/G`.
    pub fn norm_squared(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_width()
    }

    fn band_mass(&self, row: usize) -> f64 {
        self.data[row * self.grid..(row + 1) * self.grid]
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            * self.cell_width()
    }

    /// Fraction of the norm in bands that a single step could push out of range.
    pub fn boundary_fraction(&self) -> f64 {
        let reach = 2 * self.pot.max_channel() as usize;
        let rows = 2 * self.bands + 1;
        let edge: f64 = (0..reach.max(1))
            .flat_map(|i| [i, rows - 1 - i])
            .map(|row| self.band_mass(row))
            .sum();
        edge / self.norm_squared().max(f64::MIN_POSITIVE)
    }

    fn check_leakage(&self) -> Result<(), PfError> {
        let fraction = self.boundary_fraction();
        if fraction > LEAKAGE_TOLERANCE {
            return Err(PfError::Leakage {
                fraction,
                bands: self.bands,
            });
        }
        Ok(())
    }

    /// `out(θ_g, n) = in(θ_g, n − sign·2·j(θ_g))`, zero outside the range.
    fn gather(&mut self, sign: i64) {
        let grid = self.grid;
        let rows = (2 * self.bands + 1) as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); self.data.len()];
        out.par_chunks_mut(grid).enumerate().for_each(|(row, dst)| {
            for (g, v) in dst.iter_mut().enumerate() {
                let src = row as i64 - sign * 2 * self.channels[g];
                if (0..rows).contains(&src) {
                    *v = self.data[src as usize * grid + g];
                }
            }
        });
        self.data = out;
    }

    /// Translates every band `n` by `sign·a_n` in `θ`.
    fn shear(&mut self, sign: f64) {
        let grid = self.grid;
        let scale = 1.0 / grid as f64;
        let phases = Arc::clone(&self.phases);
        let plans = self.plans.clone();
        self.data.par_chunks_mut(grid).enumerate().for_each_init(
            || vec![Complex64::new(0.0, 0.0); plans.forward.get_inplace_scratch_len()],
            |scratch, (row, band)| {
                if band.iter().all(|v| v.re == 0.0 && v.im == 0.0) {
                    return;
                }
                plans.forward.process_with_scratch(band, scratch);
                let ramp = &phases[row * grid..(row + 1) * grid];
                for (v, w) in band.iter_mut().zip(ramp) {
                    let w = if sign > 0.0 { *w } else { w.conj() };
                    *v *= w * scale;
                }
                plans.inverse.process_with_scratch(band, scratch);
            },
        );
    }

    /// One application of the operator.
    pub fn step(&mut self) -> Result<(), PfError> {
        self.check_leakage()?;
        match self.ordering {
            ShearOrdering::PreKick => {
                self.gather(1);
                self.shear(1.0);
            }
            ShearOrdering::PostKick => {
                self.shear(1.0);
                self.gather(1);
            }
        }
        self.time += 1;
        Ok(())
    }

    /// Explicit inverse of [`PFField::step`].
    pub fn step_inverse(&mut self) -> Result<(), PfError> {
        self.check_leakage()?;
        match self.ordering {
            ShearOrdering::PreKick => {
                self.shear(-1.0);
                self.gather(-1);
            }
            ShearOrdering::PostKick => {
                self.gather(-1);
                self.shear(-1.0);
            }
        }
        self.time = self.time.saturating_sub(1);
        Ok(())
    }

    /// Exact integral of `|Ψ(θ, n)|²` over `[lo, hi]` for the trigonometric
    /// interpolant of band `n`.
    pub fn window_mass(&self, n: i64, lo: f64, hi: f64) -> f64 {
        let Some(samples) = self.band(n) else {
            return 0.0;
        };
        let coeffs = spectrum(&self.plans, samples);
        let g = self.grid as i64;
        // overlap integrals of e^{i·d·θ} for every harmonic difference d
        let weight = |d: i64| -> Complex64 {
            if d == 0 {
                Complex64::new(hi - lo, 0.0)
            } else {
                let d = d as f64;
                (Complex64::from_polar(1.0, d * hi) - Complex64::from_polar(1.0, d * lo)) / Complex64::new(0.0, d)
            }
        };
        let weights: Vec<Complex64> = (-(g - 1)..g).map(weight).collect();
        let ks: Vec<i64> = (0..self.grid).map(|i| harmonic_of_slot(i, self.grid)).collect();
        let terms: Vec<Complex64> = (0..self.grid)
            .into_par_iter()
            .map(|a| {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..self.grid {
                    acc += coeffs[b].conj() * weights[(ks[a] - ks[b] + g - 1) as usize];
                }
                coeffs[a] * acc
            })
            .collect();
        // summed in slot order so the result does not depend on thread count
        let total: Complex64 = terms.iter().sum();
        total.re / TAU
    }
}

/// `f_k = √(2π)/G · Σ_g Ψ_g e^{−ikθ_g}` in FFT order.
fn spectrum(plans: &Plans, samples: &[Complex64]) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    plans.forward.process(&mut buf);
    let scale = (TAU).sqrt() / samples.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Amplitudes `f_{nk}` with `k` sorted over `[−G/2, G/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierTable {
    pub grid: usize,
    pub bands: usize,
    pub amplitudes: Vec<Complex64>,
}

impl FourierTable {
    pub fn harmonics(&self) -> std::ops::Range<i64> {
        -(self.grid as i64 / 2)..self.grid as i64 / 2
    }

    pub fn get(&self, n: i64, k: i64) -> Complex64 {
        let row = (n + self.bands as i64) as usize;
        let col = (k + self.grid as i64 / 2) as usize;
        self.amplitudes[row * self.grid + col]
    }
}

pub fn fourier_amplitudes(field: &PFField) -> FourierTable {
    let grid = field.grid;
    let half = grid / 2;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); field.data.len()];
    amplitudes
        .par_chunks_mut(grid)
        .zip(field.data.par_chunks(grid))
        .for_each(|(dst, src)| {
            let spec = spectrum(&field.plans, src);
            for (i, v) in spec.into_iter().enumerate() {
                dst[(harmonic_of_slot(i, grid) + half as i64) as usize] = v;
            }
        });
    FourierTable {
        grid,
        bands: field.bands,
        amplitudes,
    }
}

/// `P(k, t) = Σ_n |f_{nk}(t)|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicDistribution {
    pub k: Vec<i64>,
    pub p: Vec<f64>,
    pub time: u64,
}

pub fn harmonic_distribution(field: &PFField) -> HarmonicDistribution {
    let table = fourier_amplitudes(field);
    let mut p = vec![0.0; field.grid];
    for row in table.amplitudes.chunks(field.grid) {
        for (acc, v) in p.iter_mut().zip(row) {
            *acc += v.norm_sqr();
        }
    }
    HarmonicDistribution {
        k: table.harmonics().collect(),
        p,
        time: field.time,
    }
}

/// Normalized band marginal `Σ_θ |Ψ(θ, n)|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDistribution {
    pub n: Vec<i64>,
    pub p: Vec<f64>,
    pub time: u64,
}

pub fn band_distribution(field: &PFField) -> BandDistribution {
    let rows = 2 * field.bands + 1;
    let mass: Vec<f64> = (0..rows).map(|r| field.band_mass(r)).collect();
    let total: f64 = mass.iter().sum();
    BandDistribution {
        n: field.band_numbers().collect(),
        p: mass.iter().map(|m| m / total).collect(),
        time: field.time,
    }
}

/// `(Σ w)² / Σ w²`.
pub fn participation_number(weights: &[f64]) -> f64 {
    let sum: f64 = weights.iter().sum();
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    if sq == 0.0 {
        0.0
    } else {
        sum * sum / sq
    }
}

/// Width of the gap between the angle and the nearest breakpoint.
pub fn breakpoint_clearance(pot: &ChannelPotential, theta: f64) -> f64 {
    pot.breakpoints()
        .iter()
        .map(|&b| {
            let d = (theta - b).rem_euclid(TAU);
            d.min(TAU - d)
        })
        .fold(PI, f64::min)
}
