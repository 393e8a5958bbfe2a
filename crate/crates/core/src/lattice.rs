//! Two-dimensional tight-binding data for the kicked models.
//!
//! Sites are labelled by a momentum band `n` and a position harmonic `k`.
//! Hopping amplitudes are Fourier coefficients: of the channel indicators for
//! the quantized-kick map, of `tan(α·sinθ·sinφ)` or of the half kick
//! `e^{iα·sinθ·sinφ}` (`α = μ/ħ`) for the quantum kicked rotor. On-site
//! disorder enters through `χ_{nk}(ω) = [ω − (n·η/2 + β)·k]/2` and
//! `Z_{nk} = tan χ_{nk}`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::ChannelPotential;
use crate::resonance::gcd;

/// Largest FFT grid tried before giving up on convergence.
pub const MAX_FFT_GRID: usize = 4096;
/// Retained coefficients must move less than this when the grid doubles.
pub const FFT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("mu = {mu} ≥ π·hbar/2 = {limit}: tan has non-integrable singularities; use the half-kick table")]
    Singular { mu: f64, limit: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coefficients still change by {change:.2e} at FFT grid {grid}")]
    NotConverged { grid: usize, change: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingModel {
    Gtm,
    QkrTan,
    QkrHalfKick,
}

/// Hopping amplitudes `W̃(Δn, Δk)` for `|Δn| ≤ max_dn`, `|Δk| ≤ max_dk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTable {
    pub model: CouplingModel,
    pub mu: f64,
    /// `η` for the classical map, `ħ` for the rotor.
    pub scale: f64,
    pub max_dn: i64,
    pub max_dk: i64,
    /// Grid on which FFT-based tables converged.
    pub fft_grid: Option<usize>,
    values: Vec<Complex64>,
}

impl CouplingTable {
    fn width(&self) -> usize {
        (2 * self.max_dk + 1) as usize
    }

    /// Zero outside the stored range.
    pub fn get(&self, dn: i64, dk: i64) -> Complex64 {
        if dn.abs() > self.max_dn || dk.abs() > self.max_dk {
            return Complex64::new(0.0, 0.0);
        }
        self.values[(dn + self.max_dn) as usize * self.width() + (dk + self.max_dk) as usize]
    }

    pub fn magnitude(&self, dn: i64, dk: i64) -> f64 {
        self.get(dn, dk).norm()
    }

    pub fn phase(&self, dn: i64, dk: i64) -> f64 {
        self.get(dn, dk).arg()
    }

    /// `(Δn, Δk, W̃)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let w = self.width();
        self.values.iter().enumerate().map(move |(i, &v)| {
            ((i / w) as i64 - self.max_dn, (i % w) as i64 - self.max_dk, v)
        })
    }

    pub fn squared_sum(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// `(1/2π)∫_a^b e^{−ikθ} dθ`.
fn arc_coefficient(a: f64, b: f64, k: i64) -> Complex64 {
    if k == 0 {
        return Complex64::new((b - a) / TAU, 0.0);
    }
    let k = k as f64;
    (Complex64::from_polar(1.0, -k * a) - Complex64::from_polar(1.0, -k * b)) / Complex64::new(0.0, TAU * k)
}

/// Closed-form indicator coefficients over the arcs where `2·j(θ) = Δn`.
pub fn gtm_couplings(pot: &ChannelPotential, max_dk: i64) -> Result<CouplingTable, LatticeError> {
    if max_dk < 1 {
        return Err(LatticeError::InvalidParameter(format!("max_dk = {max_dk} must be at least 1")));
    }
    let max_dn = 2 * pot.max_channel();
    let width = (2 * max_dk + 1) as usize;
    let mut values = vec![Complex64::new(0.0, 0.0); (2 * max_dn + 1) as usize * width];
    values.par_chunks_mut(width).enumerate().for_each(|(row, out)| {
        let dn = row as i64 - max_dn;
        if dn % 2 != 0 {
            return;
        }
        let arcs = pot.channel_intervals(dn / 2);
        for (col, v) in out.iter_mut().enumerate() {
            let dk = col as i64 - max_dk;
            *v = arcs.iter().map(|arc| arc_coefficient(arc.start, arc.end(), dk)).sum();
        }
    });
    Ok(CouplingTable {
        model: CouplingModel::Gtm,
        mu: pot.mu(),
        scale: pot.eta(),
        max_dn,
        max_dk,
        fft_grid: None,
        values,
    })
}

/// Forward 2D DFT of a row-major `m × m` array, rows first.
fn fft2(data: &mut [Complex64], m: usize) {
    let fft = FftPlanner::new().plan_fft_forward(m);
    let rows = |data: &mut [Complex64]| {
        data.par_chunks_mut(m).for_each_init(
            || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            |scratch, row| fft.process_with_scratch(row, scratch),
        )
    };
    rows(data);
    transpose(data, m);
    rows(data);
    transpose(data, m);
}

fn transpose(data: &mut [Complex64], m: usize) {
    for r in 0..m {
        for c in r + 1..m {
            data.swap(r * m + c, c * m + r);
        }
    }
}

/// Coefficients of `f(θ, φ)` with `φ ↔ n` and `θ ↔ k` from an `m × m` grid.
fn sampled_coefficients(f: &(dyn Fn(f64, f64) -> Complex64 + Sync), m: usize, cutoff: i64) -> Vec<Complex64> {
    let h = TAU / m as f64;
    let mut data = vec![Complex64::new(0.0, 0.0); m * m];
    data.par_chunks_mut(m).enumerate().for_each(|(r, row)| {
        let phi = r as f64 * h;
        for (c, v) in row.iter_mut().enumerate() {
            *v = f(c as f64 * h, phi);
        }
    });
    fft2(&mut data, m);
    let scale = 1.0 / (m * m) as f64;
    let idx = |j: i64| j.rem_euclid(m as i64) as usize;
    let mut out = Vec::with_capacity(((2 * cutoff + 1) * (2 * cutoff + 1)) as usize);
    for n in -cutoff..=cutoff {
        for k in -cutoff..=cutoff {
            out.push(data[idx(n) * m + idx(k)] * scale);
        }
    }
    out
}

/// Doubles the grid from `start` until retained coefficients settle.
fn converged_coefficients(
    f: &(dyn Fn(f64, f64) -> Complex64 + Sync),
    start: usize,
    cutoff: i64,
) -> Result<(Vec<Complex64>, usize), LatticeError> {
    let mut m = start.max((4 * cutoff as usize + 4).next_power_of_two());
    let limit = MAX_FFT_GRID.max(2 * m);
    let mut previous = sampled_coefficients(f, m, cutoff);
    loop {
        let next = sampled_coefficients(f, 2 * m, cutoff);
        let change = previous
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        m *= 2;
        if change < FFT_TOLERANCE {
            return Ok((next, m));
        }
        if 2 * m > limit {
            return Err(LatticeError::NotConverged { grid: m, change });
        }
        previous = next;
    }
}

fn check_qkr(mu: f64, hbar: f64, cutoff: i64) -> Result<(), LatticeError> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(LatticeError::InvalidParameter(format!("mu = {mu}")));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(LatticeError::InvalidParameter(format!("hbar = {hbar}")));
    }
    if cutoff < 1 {
        return Err(LatticeError::InvalidParameter(format!("cutoff = {cutoff} must be at least 1")));
    }
    Ok(())
}

/// Coefficients of `tan(α·sinθ·sinφ)`; requires `μ < π·ħ/2`.
pub fn qkr_tan_couplings(mu: f64, hbar: f64, cutoff: i64, fft_grid: usize) -> Result<CouplingTable, LatticeError> {
    check_qkr(mu, hbar, cutoff)?;
    let limit = PI * hbar / 2.0;
    if mu >= limit {
        return Err(LatticeError::Singular { mu, limit });
    }
    let alpha = mu / hbar;
    let f = move |theta: f64, phi: f64| Complex64::new((alpha * theta.sin() * phi.sin()).tan(), 0.0);
    let (values, grid) = converged_coefficients(&f, fft_grid, cutoff)?;
    Ok(CouplingTable {
        model: CouplingModel::QkrTan,
        mu,
        scale: hbar,
        max_dn: cutoff,
        max_dk: cutoff,
        fft_grid: Some(grid),
        values,
    })
}

/// Coefficients of the half kick `e^{−iV/2}` with `V = −2α·sinθ·sinφ`.
pub fn qkr_halfkick_couplings(mu: f64, hbar: f64, cutoff: i64, fft_grid: usize) -> Result<CouplingTable, LatticeError> {
    check_qkr(mu, hbar, cutoff)?;
    let alpha = mu / hbar;
    let f = move |theta: f64, phi: f64| Complex64::from_polar(1.0, alpha * theta.sin() * phi.sin());
    let (values, grid) = converged_coefficients(&f, fft_grid, cutoff)?;
    Ok(CouplingTable {
        model: CouplingModel::QkrHalfKick,
        mu,
        scale: hbar,
        max_dn: cutoff,
        max_dk: cutoff,
        fft_grid: Some(grid),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    N,
    K,
}

/// For each `|offset|` along `axis`, the largest `|W̃|` over the other axis.
pub fn decay_profile(table: &CouplingTable, axis: Axis) -> Vec<(i64, f64)> {
    let (along, across) = match axis {
        Axis::N => (table.max_dn, table.max_dk),
        Axis::K => (table.max_dk, table.max_dn),
    };
    (0..=along)
        .map(|d| {
            let best = (-across..=across)
                .flat_map(|o| [d, -d].map(|s| if axis == Axis::N { table.magnitude(s, o) } else { table.magnitude(o, s) }))
                .fold(0.0, f64::max);
            (d, best)
        })
        .collect()
}

/// `η` and `β` as exact fractions of `2π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalPhases {
    pub eta: (i64, i64),
    pub beta: (i64, i64),
}

/// Generator of the on-site phases `χ_{nk}(ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnSitePhaseGen {
    pub eta: f64,
    pub beta: f64,
    pub omega: f64,
    rational: Option<RationalPhases>,
}

impl OnSitePhaseGen {
    pub fn new(eta: f64, beta: f64, omega: f64) -> Self {
        Self {
            eta,
            beta,
            omega,
            rational: None,
        }
    }

    /// `η = 2π·p/q`, `β = 2π·p'/q'`; `χ mod π` is then computed from integer
    /// residues and is exactly periodic in `n` and `k`.
    pub fn commensurate(eta: (i64, i64), beta: (i64, i64), omega: f64) -> Result<Self, LatticeError> {
        for (name, (p, q)) in [("eta", eta), ("beta", beta)] {
            if q < 1 {
                return Err(LatticeError::InvalidParameter(format!("{name} denominator {q}")));
            }
            let _ = p;
        }
        Ok(Self {
            eta: TAU * eta.0 as f64 / eta.1 as f64,
            beta: TAU * beta.0 as f64 / beta.1 as f64,
            omega,
            rational: Some(RationalPhases { eta, beta }),
        })
    }

    pub fn rational(&self) -> Option<RationalPhases> {
        self.rational
    }

    pub fn chi(&self, n: i64, k: i64) -> f64 {
        (self.omega - (n as f64 * self.eta / 2.0 + self.beta) * k as f64) / 2.0
    }

    /// `χ_{nk} mod π` in `[0, π)`.
    pub fn chi_mod_pi(&self, n: i64, k: i64) -> f64 {
        match self.rational {
            None => self.chi(n, k).rem_euclid(PI),
            Some(RationalPhases { eta: (p, q), beta: (pb, qb) }) => {
                // (n·η/2 + β)·k/2 = π·k·(n·p·qb + 2·pb·q) / (2·q·qb)
                let den = 2 * q as i128 * qb as i128;
                let num = k as i128 * (n as i128 * p as i128 * qb as i128 + 2 * pb as i128 * q as i128);
                let frac = num.rem_euclid(den) as f64 / den as f64;
                (self.omega / 2.0 - PI * frac).rem_euclid(PI)
            }
        }
    }

    /// Periods in `n` and `k` of `χ mod π` for a commensurate generator.
    pub fn periods(&self) -> Option<(i64, i64)> {
        let RationalPhases { eta: (p, q), beta: (pb, qb) } = self.rational?;
        let den = 2 * q * qb;
        let reduce = |a: i64| den / gcd(a, den).max(1);
        // n-period T: k·T·p·qb ≡ 0 mod den for all k; k-period: both terms vanish
        let n_period = reduce(p * qb);
        let k_period = lcm(reduce(p * qb), reduce(2 * pb * q));
        Some((n_period, k_period))
    }
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b).max(1) * b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnSite {
    pub chi: f64,
    /// `tan χ`, absent at a pole (`|cos χ| < 1e-12`).
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnSiteTable {
    pub n_range: Range<i64>,
    pub k_range: Range<i64>,
    pub entries: Vec<OnSite>,
}

impl OnSiteTable {
    pub fn get(&self, n: i64, k: i64) -> OnSite {
        let cols = (self.k_range.end - self.k_range.start) as usize;
        self.entries[(n - self.n_range.start) as usize * cols + (k - self.k_range.start) as usize]
    }

    pub fn poles(&self) -> usize {
        self.entries.iter().filter(|e| e.z.is_none()).count()
    }
}

pub fn onsite_sequence(gen: &OnSitePhaseGen, n_range: Range<i64>, k_range: Range<i64>) -> OnSiteTable {
    let entries = n_range
        .clone()
        .flat_map(|n| k_range.clone().map(move |k| (n, k)))
        .map(|(n, k)| {
            let chi = gen.chi(n, k);
            let reduced = gen.chi_mod_pi(n, k);
            let z = if (reduced - FRAC_PI_2).abs() < 1e-12 { None } else { Some(reduced.tan()) };
            OnSite { chi, z }
        })
        .collect();
    OnSiteTable {
        n_range,
        k_range,
        entries,
    }
}

/// Statistics of one 1D slice of `χ mod π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceStats {
    /// The fixed coordinate of the slice.
    pub fixed: i64,
    pub len: usize,
    /// Kolmogorov-Smirnov distance of `χ mod π` to uniform on `[0, π)`.
    pub ks: f64,
    /// Autocorrelation of `sign(tan χ)` at lags `1..=max_lag`.
    pub autocorr: Vec<f64>,
}

/// Slices along one axis and their combined statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceFamily {
    /// Axis that varies along each slice.
    pub varying: Axis,
    pub slices: Vec<SliceStats>,
    pub max_ks: f64,
    /// Autocorrelation at each lag averaged over the slices.
    pub mean_autocorr: Vec<f64>,
    /// Largest `|mean_autocorr|` beyond lag 1.
    pub max_mean_autocorr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudorandomnessReport {
    pub along_n: SliceFamily,
    pub along_k: SliceFamily,
}

/// KS distance of samples in `[0, 1)` to the uniform law.
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut u = samples.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Sample autocorrelation at lags `1..=max_lag`; a constant series gives 1.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n.max(1) as f64;
    let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    (1..=max_lag)
        .map(|lag| {
            if var == 0.0 {
                return 1.0;
            }
            if lag >= n {
                return 0.0;
            }
            (0..n - lag).map(|i| (x[i] - mean) * (x[i + lag] - mean)).sum::<f64>() / var
        })
        .collect()
}

/// KS distance and sign autocorrelation of a sequence of reduced phases in `[0, π)`.
pub fn slice_stats(fixed: i64, reduced: &[f64], max_lag: usize) -> SliceStats {
    let u: Vec<f64> = reduced.iter().map(|c| c / PI).collect();
    let signs: Vec<f64> = reduced.iter().map(|&c| if c < FRAC_PI_2 { 1.0 } else { -1.0 }).collect();
    SliceStats {
        fixed,
        len: reduced.len(),
        ks: ks_uniform(&u),
        autocorr: autocorrelation(&signs, max_lag),
    }
}

fn family(varying: Axis, slices: Vec<SliceStats>, max_lag: usize) -> SliceFamily {
    let count = slices.len().max(1) as f64;
    let mean_autocorr: Vec<f64> = (0..max_lag)
        .map(|l| slices.iter().map(|s| s.autocorr[l]).sum::<f64>() / count)
        .collect();
    SliceFamily {
        varying,
        max_ks: slices.iter().map(|s| s.ks).fold(0.0, f64::max),
        max_mean_autocorr: mean_autocorr.iter().skip(1).map(|v| v.abs()).fold(0.0, f64::max),
        mean_autocorr,
        slices,
    }
}

/// Slices of `χ mod π` with `n` varying over `n_range` (one per `k`) and with
/// `k` varying over `k_range` (one per `n`).
pub fn pseudorandomness_diagnostic(
    gen: &OnSitePhaseGen,
    n_range: Range<i64>,
    k_range: Range<i64>,
    max_lag: usize,
) -> PseudorandomnessReport {
    let along_n = k_range
        .clone()
        .into_par_iter()
        .map(|k| {
            let seq: Vec<f64> = n_range.clone().map(|n| gen.chi_mod_pi(n, k)).collect();
            slice_stats(k, &seq, max_lag)
        })
        .collect();
    let along_k = n_range
        .clone()
        .into_par_iter()
        .map(|n| {
            let seq: Vec<f64> = k_range.clone().map(|k| gen.chi_mod_pi(n, k)).collect();
            slice_stats(n, &seq, max_lag)
        })
        .collect();
    PseudorandomnessReport {
        along_n: family(Axis::N, along_n, max_lag),
        along_k: family(Axis::K, along_k, max_lag),
    }
}

/// The same statistics for `count` independent uniform sequences of length `len`.
pub fn uniform_control(len: usize, count: usize, max_lag: usize, seed: u64) -> SliceFamily {
    let slices = (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let seq: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * PI).collect();
            slice_stats(i as i64, &seq, max_lag)
        })
        .collect();
    family(Axis::N, slices, max_lag)
}

/// Amplitudes `Φ_{nk}` on a rectangle of sites, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePatch {
    pub n_range: Range<i64>,
    pub k_range: Range<i64>,
    pub values: Vec<Complex64>,
}

impl LatticePatch {
    pub fn get(&self, n: i64, k: i64) -> Complex64 {
        if !self.n_range.contains(&n) || !self.k_range.contains(&k) {
            return Complex64::new(0.0, 0.0);
        }
        let cols = (self.k_range.end - self.k_range.start) as usize;
        self.values[(n - self.n_range.start) as usize * cols + (k - self.k_range.start) as usize]
    }
}

/// Left-hand side of the lattice equation at site `(n, k)`.
///
/// Half-kick tables give `Σ |W̃_{n−n',k−k'}|·sin(χ_{n'k'} + φ_{n−n',k−k'})·Φ_{n'k'}`;
/// the tan table gives `Σ W_{n−n',k−k'}·Φ_{n'k'} + tan(χ_{nk})·Φ_{nk}`.
pub fn apply_row(table: &CouplingTable, gen: &OnSitePhaseGen, field: &LatticePatch, n: i64, k: i64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (dn, dk, w) in table.entries() {
        let (np, kp) = (n - dn, k - dk);
        let phi = field.get(np, kp);
        if w == Complex64::new(0.0, 0.0) || phi == Complex64::new(0.0, 0.0) {
            continue;
        }
        acc += match table.model {
            CouplingModel::QkrTan => w * phi,
            _ => phi * w.norm() * (gen.chi(np, kp) + w.arg()).sin(),
        };
    }
    if table.model == CouplingModel::QkrTan {
        acc += field.get(n, k) * gen.chi(n, k).tan();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GOLDEN_MEAN;

    // Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
    fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
        (0..order)
            .map(|i| {
                let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
                loop {
                    let (mut p0, mut p1) = (1.0, x);
                    for j in 2..=order {
                        let j = j as f64;
                        (p0, p1) = (p1, ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j);
                    }
                    let dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-15 {
                        return (x, 2.0 / ((1.0 - x * x) * dp * dp));
                    }
                }
            })
            .collect()
    }

    // Breakpoints of trunc(μ sinθ/η) found by bisection on a fine scan.
    fn bisected_breakpoints(mu: f64, eta: f64) -> Vec<f64> {
        let j = |t: f64| (mu * t.sin() / eta).trunc();
        let scan = 20_000;
        let mut out = Vec::new();
        for i in 0..scan {
            let (mut a, mut b) = (TAU * i as f64 / scan as f64, TAU * (i + 1) as f64 / scan as f64);
            if j(a) != j(b) {
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if j(m) == j(a) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                out.push(0.5 * (a + b));
            }
        }
        out
    }

    fn quadrature_coefficient(mu: f64, eta: f64, dn: i64, dk: i64, nodes: &[(f64, f64)]) -> Complex64 {
        let mut cuts = vec![0.0];
        cuts.extend(bisected_breakpoints(mu, eta));
        cuts.push(TAU);
        let mut total = Complex64::new(0.0, 0.0);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            if 2.0 * (mu * mid.sin() / eta).trunc() != dn as f64 {
                continue;
            }
            let pieces = ((b - a) * (dk.abs() as f64 + 1.0)).ceil() as usize * 2;
            let h = (b - a) / pieces as f64;
            for p in 0..pieces {
                let lo = a + p as f64 * h;
                for &(x, wt) in nodes {
                    let t = lo + 0.5 * h * (x + 1.0);
                    total += Complex64::from_polar(0.5 * h * wt, -(dk as f64) * t);
                }
            }
        }
        total / TAU
    }

    #[test]
    fn gtm_table_matches_quadrature() {
        let pot = ChannelPotential::new(3.0, 1.2).unwrap();
        let table = gtm_couplings(&pot, 300).unwrap();
        let expected = 4.0 * (0.4f64).asin() / TAU;
        assert!((table.get(0, 0).re - expected).abs() < 1e-12);
        assert!((table.get(0, 0).re - 0.261_979).abs() < 1e-6);
        let nodes = gauss_legendre(20);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let dn = 2 * rng.random_range(-2..=2);
            let dk = rng.random_range(-300..=300);
            let q = quadrature_coefficient(3.0, 1.2, dn, dk, &nodes);
            assert!((table.get(dn, dk) - q).norm() < 1e-10, "({dn},{dk})");
        }
    }

    #[test]
    fn gtm_table_structure() {
        let pot = ChannelPotential::new(3.0, 1.2).unwrap();
        let table = gtm_couplings(&pot, 64).unwrap();
        assert_eq!(table.max_dn, 4);
        let column: Complex64 = (-4..=4).map(|dn| table.get(dn, 0)).sum();
        assert!((column - 1.0).norm() < 1e-14);
        for dk in -64..=64 {
            for dn in [-3, -1, 1, 3, 5, 6, -6] {
                assert_eq!(table.get(dn, dk), Complex64::new(0.0, 0.0));
            }
            for dn in (-4..=4).step_by(2) {
                let w = table.get(dn, dk);
                assert!((table.get(dn, -dk) - w.conj()).norm() < 1e-14);
                let sign = if dk % 2 == 0 { 1.0 } else { -1.0 };
                assert!((table.get(-dn, -dk) - sign * w.conj()).norm() < 1e-14);
                assert!((table.get(-dn, -dk) - w).norm() < 1e-14);
            }
        }
        let profile = decay_profile(&table, Axis::N);
        assert!(profile.iter().all(|&(d, m)| (d <= 4) == (m > 0.0) || d % 2 == 1));
    }

    #[test]
    fn gtm_parseval_with_tail_bound() {
        let pot = ChannelPotential::new(3.0, 1.2).unwrap();
        let cutoff = 1 << 14;
        let table = gtm_couplings(&pot, cutoff).unwrap();
        for dn in (-4..=4).step_by(2) {
            let arcs = pot.channel_intervals(dn / 2);
            let measure: f64 = arcs.iter().map(|a| a.len).sum::<f64>() / TAU;
            let partial: f64 = (-cutoff..=cutoff).map(|dk| table.get(dn, dk).norm_sqr()).sum();
            // |W̃(Δk)| ≤ arcs/(π|Δk|), so the two tails hold at most 2(arcs/π)²/K
            let tail = 2.0 * (arcs.len() as f64 / PI).powi(2) / cutoff as f64;
            assert!(partial <= measure + 1e-8, "dn={dn}");
            assert!(measure - partial <= tail + 1e-8, "dn={dn}");
        }
    }

    // J_m(z) = (1/2π)∫ cos(mτ − z sinτ) dτ, trapezoid on the period.
    fn bessel_j(m: i64, z: f64) -> f64 {
        let pts = 256;
        (0..pts)
            .map(|i| {
                let t = TAU * i as f64 / pts as f64;
                (m as f64 * t - z * t.sin()).cos()
            })
            .sum::<f64>()
            / pts as f64
    }

    #[test]
    fn half_kick_matches_bessel_products() {
        let (mu, hbar) = (1.3, 0.7);
        let table = qkr_halfkick_couplings(mu, hbar, 12, 64).unwrap();
        let z = mu / hbar / 2.0;
        let i = Complex64::new(0.0, 1.0);
        for n in -12i64..=12 {
            for k in -12i64..=12 {
                let expected = if (k - n) % 2 != 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let (a, b) = ((k - n) / 2, (k + n) / 2);
                    i.powi(a as i32) * (-i).powi(b as i32) * bessel_j(a, z) * bessel_j(b, z)
                };
                assert!((table.get(n, k) - expected).norm() < 1e-12, "({n},{k})");
            }
        }
        assert!((table.squared_sum() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn qkr_trivial_limits() {
        let id = qkr_halfkick_couplings(0.0, 1.0, 4, 16).unwrap();
        for (dn, dk, w) in id.entries() {
            let expected = if dn == 0 && dk == 0 { 1.0 } else { 0.0 };
            assert!((w - expected).norm() < 1e-15);
        }
        let zero = qkr_tan_couplings(0.0, 1.0, 4, 16).unwrap();
        assert!(zero.entries().all(|(_, _, w)| w.norm() == 0.0));
        assert!(matches!(qkr_tan_couplings(2.0, 1.0, 4, 16), Err(LatticeError::Singular { .. })));
    }

    #[test]
    fn tan_table_parity_and_decay() {
        let table = qkr_tan_couplings(0.5, 1.0, 24, 1024).unwrap();
        assert!(table.fft_grid.unwrap() >= 1024);
        for (dn, dk, w) in table.entries() {
            if dn % 2 == 0 || dk % 2 == 0 {
                assert!(w.norm() < 1e-15, "({dn},{dk})");
            }
        }
        assert!(table.magnitude(1, 1) > 0.01);
        let far = table.entries().filter(|&(dn, dk, _)| dn.abs().max(dk.abs()) >= 20).map(|e| e.2.norm()).fold(0.0, f64::max);
        assert!(far < 1e-8, "{far}");
    }

    #[test]
    fn fft_grid_convergence() {
        let f = |t: f64, p: f64| Complex64::from_polar(1.0, 2.0 * t.sin() * p.sin());
        let (a, grid) = converged_coefficients(&f, 32, 8).unwrap();
        let b = sampled_coefficients(&f, grid * 2, 8);
        let change = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(change < FFT_TOLERANCE);
    }

    #[test]
    fn onsite_phases() {
        let gen = OnSitePhaseGen::new(PI / GOLDEN_MEAN, 0.3, 0.0);
        assert!((gen.chi(0, 5) + 0.3 * 5.0 / 2.0).abs() < 1e-15);
        let shifted = OnSitePhaseGen::new(PI / GOLDEN_MEAN, 0.3, 0.8);
        for n in -20..20 {
            assert_eq!(shifted.chi(n, 0), 0.4);
            for k in -20..20 {
                let d = shifted.chi(n, k) - gen.chi(n, k);
                assert!((d - 0.4).abs() < 1e-13 * (1.0 + gen.chi(n, k).abs()));
            }
        }
        let table = onsite_sequence(&gen, -3..3, -4..4);
        assert_eq!(table.entries.len(), 48);
        assert_eq!(table.get(2, -1).chi, gen.chi(2, -1));
        // ω = π puts k = 0 and (n, k) = (0, 1) on a pole
        let pole = onsite_sequence(&OnSitePhaseGen::new(1.0, 0.0, PI), 0..2, 0..2);
        assert!(pole.get(0, 0).z.is_none());
        assert!(pole.get(1, 1).z.is_some());
        assert_eq!(pole.poles(), 3);
    }

    #[test]
    fn commensurate_phases_are_periodic() {
        let gen = OnSitePhaseGen::commensurate((1, 5), (2, 7), 0.3).unwrap();
        let (tn, tk) = gen.periods().unwrap();
        for n in -40..40 {
            for k in -40..40 {
                assert_eq!(gen.chi_mod_pi(n, k), gen.chi_mod_pi(n + tn, k));
                assert_eq!(gen.chi_mod_pi(n, k), gen.chi_mod_pi(n, k + tk));
                assert_eq!(gen.chi_mod_pi(n, k), gen.chi_mod_pi(n + 2 * tn, k + 2 * tk));
                let d = (gen.chi_mod_pi(n, k) - gen.chi(n, k).rem_euclid(PI)).abs();
                assert!(d.min(PI - d) < 1e-9);
            }
        }
        // η = 2π/6, β = 0: χ mod π takes at most 2·6 values along any slice
        let gen = OnSitePhaseGen::commensurate((1, 6), (0, 1), 0.0).unwrap();
        for k in 1..4 {
            let mut values: Vec<u64> = (0..500).map(|n| gen.chi_mod_pi(n, k).to_bits()).collect();
            values.sort_unstable();
            values.dedup();
            assert!(values.len() <= 12);
        }
    }

    #[test]
    fn pseudorandom_statistics() {
        let constant = pseudorandomness_diagnostic(&OnSitePhaseGen::new(1.0, 0.0, 0.5), 0..100, 0..1, 3);
        let u = 0.25 / PI;
        assert!((constant.along_n.slices[0].ks - u.max(1.0 - u)).abs() < 1e-12);
        assert_eq!(constant.along_n.slices[0].autocorr, vec![1.0; 3]);

        let control = uniform_control(10_000, 8, 10, 1);
        assert!(control.max_ks < 0.02);
        assert!(control.max_mean_autocorr < 0.05);
        assert!((ks_uniform(&[0.5]) - 0.5).abs() < 1e-15);
        let alternating: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((autocorrelation(&alternating, 1)[0] + 0.99).abs() < 1e-12);
    }

    #[test]
    fn apply_row_on_single_site() {
        let table = qkr_halfkick_couplings(0.0, 1.0, 2, 16).unwrap();
        let gen = OnSitePhaseGen::new(1.0, 0.2, 0.4);
        let patch = LatticePatch {
            n_range: 0..1,
            k_range: 3..4,
            values: vec![Complex64::new(2.0, 0.0)],
        };
        let v = apply_row(&table, &gen, &patch, 0, 3);
        assert!((v.re - 2.0 * gen.chi(0, 3).sin()).abs() < 1e-14);
        assert_eq!(apply_row(&table, &gen, &patch, 1, 3), Complex64::new(0.0, 0.0));
        let tan = qkr_tan_couplings(0.0, 1.0, 2, 16).unwrap();
        let v = apply_row(&tan, &gen, &patch, 0, 3);
        assert!((v.re - 2.0 * gen.chi(0, 3).tan()).abs() < 1e-14);
    }
}
