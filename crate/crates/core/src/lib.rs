//! Generalized triangle maps: kicked-rotor dynamics with a piecewise-linear
//! potential whose slopes are integer multiples of a momentum quantum `η`.
//!
//! * [`potential`] builds the channel potential `V(θ)`.
//! * [`dynamics`] iterates the map and runs seeded ensembles.
//! * [`resonance`] analyses the commensurate case in exact integer arithmetic.
//! * [`pf`] evolves phase-space amplitudes under the Perron-Frobenius operator.
//! * [`lattice`] builds the 2D tight-binding couplings and on-site phases.
//! * [`cli`] parses configurations and runs the figure recipes.

pub mod cli;
pub mod dynamics;
pub mod fit;
pub mod lattice;
pub mod pf;
pub mod potential;
pub mod resonance;

/// The golden mean `(1 + √5)/2`.
pub const GOLDEN_MEAN: f64 = 1.618_033_988_749_895;
