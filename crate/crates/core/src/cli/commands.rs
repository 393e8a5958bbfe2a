//! Subcommand parameter tables and pipelines.

use std::f64::consts::TAU;

use serde_json::json;

use super::config::{choice, integer, real, signed, Kind, ParamSpec, RunConfig};
use super::output::{Cell, Output, Table};
use super::CliError;
use crate::dynamics::{
    growth_exponent, momentum_distribution, orbit_trace, simulate_ensemble, standard_map_baseline, EnergySeries,
    EnsembleSpec, InitialMomentum,
};
use crate::lattice::{
    decay_profile, gtm_couplings, pseudorandomness_diagnostic, qkr_halfkick_couplings, qkr_tan_couplings, Axis,
    CouplingTable, OnSitePhaseGen, SliceFamily,
};
use crate::pf::{
    band_distribution, harmonic_distribution, participation_number, InitialState, PFField, ShearOrdering,
};
use crate::potential::ChannelPotential;
use crate::resonance::{ballistic_coefficient, cycle_census, find_cycle, CensusMode, ResonanceParams};

const P0: ParamSpec = ParamSpec {
    key: "p0",
    default: Some("eta/2"),
    kind: Kind::RealOr(&["uniform"]),
    help: "initial momentum, or `uniform` on (-eta/2, eta/2)",
};

pub const POTENTIAL: &[ParamSpec] = &[
    real("mu", "3", "kick strength"),
    real("eta", "1.2", "momentum quantum"),
    integer("points", "4096", "angles sampled on [0, 2pi]"),
];

pub const SIMULATE: &[ParamSpec] = &[
    real("mu", "3", "kick strength"),
    real("eta", "pi/gm", "momentum quantum"),
    P0,
    integer("size", "100000", "ensemble size"),
    integer("kicks", "10000", "number of kicks"),
    integer("seed", "1", "RNG seed"),
    integer("window", "100", "trailing average length in kicks"),
    choice("map", "gtm", &["gtm", "standard"], "quantized kicks, or the smooth standard-map control"),
];

pub const HISTOGRAM: &[ParamSpec] = &[
    real("mu", "4", "kick strength"),
    real("eta", "pi/gm", "momentum quantum"),
    ParamSpec { default: Some("uniform"), ..P0 },
    integer("size", "100000", "ensemble size"),
    integer("kicks", "10000", "number of kicks"),
    integer("seed", "1", "RNG seed"),
    integer("window", "100", "kicks accumulated at the end of the run"),
];

pub const PORTRAIT: &[ParamSpec] = &[
    real("mu", "3", "kick strength"),
    real("eta", "pi/gm", "momentum quantum"),
    ParamSpec { default: Some("uniform"), ..P0 },
    integer("orbits", "64", "number of orbits"),
    integer("steps", "2000", "kicks per orbit"),
    integer("seed", "1", "RNG seed"),
];

pub const RESONANCE: &[ParamSpec] = &[
    real("mu", "5", "kick strength"),
    signed("p", "1", "numerator P of eta = 2pi s P/Q"),
    integer("q", "3", "denominator Q"),
    signed("r", "0", "quasi-momentum numerator, beta = r eta / s"),
    integer("s", "1", "quasi-momentum denominator"),
    real("theta0", "0.1", "angle offset of the torus"),
    choice("mode", "cycle", &["cycle", "census"], "one cycle, or statistics over the torus"),
    signed("n0", "0", "starting momentum index (cycle mode)"),
    signed("m0", "0", "starting angle index (cycle mode)"),
    integer("samples", "0", "census sample size; 0 visits every state"),
    integer("seed", "1", "RNG seed for sampled censuses"),
];

pub const PF: &[ParamSpec] = &[
    real("mu", "3", "kick strength"),
    real("eta", "pi/gm", "momentum quantum"),
    real("beta", "eta/sqrt2", "quasi-momentum"),
    integer("grid", "1024", "angle grid size (power of two)"),
    integer("bands", "256", "band range -bands..=bands"),
    integer("steps", "1000", "number of steps"),
    choice("init", "uniform", &["uniform", "gaussian", "point"], "initial state on band init_band"),
    real("init_theta", "1", "centre of gaussian and point states"),
    real("init_width", "0.2", "gaussian width"),
    signed("init_band", "0", "initial band"),
    choice("ordering", "pre-kick", &["pre-kick", "post-kick"], "which band's shear offset is applied"),
];

pub const LATTICE: &[ParamSpec] = &[
    choice("model", "gtm", &["gtm", "qkr-tan", "qkr-half"], "coupling model"),
    real("mu", "3", "kick strength"),
    real("eta", "1.2", "momentum quantum (gtm) and on-site phase slope"),
    real("hbar", "1", "effective Planck constant (qkr models)"),
    real("beta", "eta/sqrt2", "quasi-momentum of the on-site phases"),
    real("omega", "0", "quasi-energy"),
    integer("max_dk", "64", "harmonic cutoff of the gtm table"),
    integer("cutoff", "32", "offset cutoff of the qkr tables"),
    integer("fft_grid", "256", "starting FFT grid of the qkr tables"),
    choice("phases", "float", &["float", "rational"], "on-site phases from eta and beta, or from exact fractions of 2pi"),
    signed("eta_num", "1", "rational phases: eta = 2pi eta_num/eta_den"),
    integer("eta_den", "5", "rational phases: denominator of eta"),
    signed("beta_num", "1", "rational phases: beta = 2pi beta_num/beta_den"),
    integer("beta_den", "7", "rational phases: denominator of beta"),
    integer("extent", "256", "slice length of the pseudorandomness diagnostic"),
    integer("max_lag", "10", "largest autocorrelation lag"),
];

pub fn potential_of(cfg: &RunConfig) -> Result<ChannelPotential, CliError> {
    Ok(ChannelPotential::new(cfg.real("mu"), cfg.real("eta"))?)
}

pub fn initial_momentum(cfg: &RunConfig) -> InitialMomentum {
    match cfg.word("p0") {
        Some(_) => InitialMomentum::UniformCell,
        None => InitialMomentum::Fixed(cfg.real("p0")),
    }
}

pub fn ensemble_spec(cfg: &RunConfig, p0: InitialMomentum) -> Result<EnsembleSpec, CliError> {
    let spec = EnsembleSpec::new(cfg.integer("size") as usize, p0, cfg.integer("seed"), cfg.integer("kicks"))
        .with_window(cfg.integer("window") as usize);
    spec.validate()?;
    Ok(spec)
}

pub fn energy_table(series: &EnergySeries) -> Table {
    let mut t = Table::new(&["t", "mean_p2", "windowed_mean_p2"]);
    for i in 0..series.times.len() {
        t.push(vec![
            series.times[i].into(),
            series.mean_p2[i].into(),
            series.windowed_mean_p2[i].into(),
        ]);
    }
    t
}

pub fn potential(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let pot = potential_of(cfg)?;
    let points = cfg.integer("points");
    if points < 2 {
        return Err(CliError::Domain("points must be at least 2".into()));
    }
    let mut curve = Table::new(&["theta", "V", "dV"]);
    for i in 0..=points {
        let theta = TAU * i as f64 / points as f64;
        curve.push(vec![
            theta.into(),
            pot.potential_value(theta).into(),
            pot.kick_impulse(theta).into(),
        ]);
    }
    let mut breaks = Table::new(&["theta", "channel"]);
    for (b, j) in pot.breakpoints().iter().zip(pot.segment_channels()) {
        breaks.push(vec![(*b).into(), (*j).into()]);
    }
    Ok(vec![Output::table("potential", curve), Output::table("breakpoints", breaks)])
}

pub fn simulate(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let spec = ensemble_spec(cfg, initial_momentum(cfg))?;
    let series = match cfg.word("map") {
        Some("standard") => standard_map_baseline(cfg.real("mu"), cfg.real("eta"), &spec)?,
        _ => simulate_ensemble(&potential_of(cfg)?, &spec)?,
    };
    Ok(vec![Output::table("energy", energy_table(&series))])
}

pub fn histogram(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let spec = ensemble_spec(cfg, initial_momentum(cfg))?;
    let hist = momentum_distribution(&potential_of(cfg)?, &spec)?;
    let mut t = Table::new(&["bin_center", "probability"]);
    for (c, p) in hist.centers.iter().zip(&hist.probabilities) {
        t.push(vec![(*c).into(), (*p).into()]);
    }
    Ok(vec![Output::table("histogram", t)])
}

pub fn portrait(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let pot = potential_of(cfg)?;
    let orbits = cfg.integer("orbits") as usize;
    let spec = EnsembleSpec::new(orbits, initial_momentum(cfg), cfg.integer("seed"), 1);
    spec.validate()?;
    let mut t = Table::new(&["orbit", "t", "theta", "p_mod_2pi"]);
    for i in 0..orbits {
        let trace = orbit_trace(&pot, spec.initial_point(pot.eta(), i), cfg.integer("steps") as usize);
        for (step, s) in trace.iter().enumerate() {
            t.push(vec![(i as u64).into(), (step as u64).into(), s.theta.into(), s.p.into()]);
        }
    }
    Ok(vec![Output::table("portrait", t)])
}

fn resonance_params(cfg: &RunConfig, theta0: f64) -> Result<(ChannelPotential, ResonanceParams), CliError> {
    let (p, q, s) = (cfg.signed("p"), cfg.signed("q"), cfg.signed("s"));
    if q < 1 || s < 1 {
        return Err(CliError::Domain("q and s must be positive".into()));
    }
    let pot = ChannelPotential::new(cfg.real("mu"), s as f64 * TAU * p as f64 / q as f64)?;
    let params = ResonanceParams::new(&pot, p, q, cfg.signed("r"), s, theta0)?;
    Ok((pot, params))
}

pub fn resonance(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let (_, params) = resonance_params(cfg, cfg.real("theta0"))?;
    let header = json!({
        "P": cfg.signed("p"),
        "Q": cfg.signed("q"),
        "r": cfg.signed("r"),
        "s": cfg.signed("s"),
        "mu": cfg.real("mu"),
        "eta": params.eta(),
        "beta": params.beta(),
        "lambda": params.lambda(),
        "theta0": params.theta0(),
    });
    if cfg.word("mode") == Some("cycle") {
        let (n0, m0) = (cfg.signed("n0"), cfg.signed("m0"));
        let cycle = find_cycle(&params, params.lattice_momentum(n0), m0);
        let mut doc = header;
        doc["start"] = json!([cycle.start.0, cycle.start.1]);
        doc["T"] = cycle.period.into();
        doc["K"] = cycle.k.into();
        doc["L"] = cycle.l.into();
        doc["coefficient"] = ballistic_coefficient(&cycle, &params).into();
        return Ok(vec![Output::document("cycle", doc)]);
    }
    let mode = match cfg.integer("samples") {
        0 => CensusMode::Exhaustive,
        count => CensusMode::Sampled {
            count: count as usize,
            seed: cfg.integer("seed"),
        },
    };
    let census = cycle_census(&params, mode);
    let mut t = Table::new(&["T", "K", "L", "states", "coefficient"]);
    for c in &census.cycles {
        t.push(vec![c.period.into(), c.k.into(), c.l.into(), c.states.into(), c.coefficient.into()]);
    }
    let mut doc = header;
    doc["states"] = census.states.into();
    doc["ballistic_states"] = census.ballistic_states.into();
    doc["ballistic_fraction"] = census.ballistic_fraction.into();
    doc["mean_c2"] = census.mean_c2.into();
    doc["max_abs_c"] = census.max_abs_c.into();
    doc["max_period"] = census.max_period.into();
    doc["cycles"] = census.cycles.len().into();
    Ok(vec![Output::table("census", t), Output::document("census-summary", doc)])
}

/// `0, 1, 2, 5, 10, 20, 50, ...` up to and including `steps`.
pub fn snapshot_times(steps: u64) -> Vec<u64> {
    let mut out = vec![0];
    let mut decade = 1;
    'outer: loop {
        for m in [1, 2, 5] {
            let t = m * decade;
            if t >= steps {
                break 'outer;
            }
            out.push(t);
        }
        decade *= 10;
    }
    if steps > 0 {
        out.push(steps);
    }
    out
}

pub fn pf(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let pot = potential_of(cfg)?;
    let band = cfg.signed("init_band");
    let initial = match cfg.word("init") {
        Some("gaussian") => InitialState::Gaussian {
            theta: cfg.real("init_theta"),
            width: cfg.real("init_width"),
            band,
        },
        Some("point") => InitialState::Point {
            theta: cfg.real("init_theta"),
            band,
        },
        _ => InitialState::UniformBand { band },
    };
    let ordering = match cfg.word("ordering") {
        Some("post-kick") => ShearOrdering::PostKick,
        _ => ShearOrdering::PreKick,
    };
    let mut field = PFField::with_initial(
        &pot,
        cfg.real("beta"),
        cfg.integer("grid") as usize,
        cfg.integer("bands") as usize,
        ordering,
        &initial,
    )?;
    let steps = cfg.integer("steps");
    let snapshots = snapshot_times(steps);
    let mut summary = Table::new(&["t", "norm_drift", "harmonic_pn", "band_pn", "boundary_fraction"]);
    let mut harmonics = Table::new(&["t", "k", "p"]);
    let mut bands = Table::new(&["t", "n", "p"]);
    for t in 0..=steps {
        if t > 0 {
            field.step()?;
        }
        let h = harmonic_distribution(&field);
        let b = band_distribution(&field);
        summary.push(vec![
            t.into(),
            (field.norm_squared() - 1.0).into(),
            participation_number(&h.p).into(),
            participation_number(&b.p).into(),
            field.boundary_fraction().into(),
        ]);
        if snapshots.contains(&t) {
            for (k, p) in h.k.iter().zip(&h.p) {
                harmonics.push(vec![t.into(), (*k).into(), (*p).into()]);
            }
            for (n, p) in b.n.iter().zip(&b.p) {
                bands.push(vec![t.into(), (*n).into(), (*p).into()]);
            }
        }
    }
    Ok(vec![
        Output::table("pf-summary", summary),
        Output::table("pf-harmonics", harmonics),
        Output::table("pf-bands", bands),
    ])
}

fn family_json(f: &SliceFamily) -> serde_json::Value {
    json!({
        "slices": f.slices.len(),
        "max_ks": f.max_ks,
        "mean_autocorr": f.mean_autocorr,
        "max_mean_autocorr": f.max_mean_autocorr,
    })
}

pub fn lattice(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let (mu, hbar) = (cfg.real("mu"), cfg.real("hbar"));
    let cutoff = cfg.integer("cutoff") as i64;
    let fft_grid = cfg.integer("fft_grid") as usize;
    let table: CouplingTable = match cfg.word("model") {
        Some("qkr-tan") => qkr_tan_couplings(mu, hbar, cutoff, fft_grid)?,
        Some("qkr-half") => qkr_halfkick_couplings(mu, hbar, cutoff, fft_grid)?,
        _ => gtm_couplings(&potential_of(cfg)?, cfg.integer("max_dk") as i64)?,
    };
    let mut couplings = Table::new(&["dn", "dk", "re", "im", "abs", "phase"]);
    for (dn, dk, w) in table.entries() {
        couplings.push(vec![dn.into(), dk.into(), w.re.into(), w.im.into(), w.norm().into(), w.arg().into()]);
    }
    let mut decay = Table::new(&["axis", "offset", "max_abs"]);
    for (axis, name) in [(Axis::N, "n"), (Axis::K, "k")] {
        for (d, m) in decay_profile(&table, axis) {
            decay.push(vec![Cell::from(name), d.into(), m.into()]);
        }
    }
    let gen = match cfg.word("phases") {
        Some("rational") => OnSitePhaseGen::commensurate(
            (cfg.signed("eta_num"), cfg.signed("eta_den")),
            (cfg.signed("beta_num"), cfg.signed("beta_den")),
            cfg.real("omega"),
        )?,
        _ => OnSitePhaseGen::new(cfg.real("eta"), cfg.real("beta"), cfg.real("omega")),
    };
    let extent = cfg.integer("extent") as i64;
    let report = pseudorandomness_diagnostic(&gen, 0..extent, 0..extent, cfg.integer("max_lag") as usize);
    let doc = json!({
        "model": table.model,
        "mu": table.mu,
        "scale": table.scale,
        "max_dn": table.max_dn,
        "max_dk": table.max_dk,
        "fft_grid": table.fft_grid,
        "squared_sum": table.squared_sum(),
        "onsite": {
            "eta": gen.eta,
            "beta": gen.beta,
            "omega": gen.omega,
            "periods": gen.periods(),
            "along_n": family_json(&report.along_n),
            "along_k": family_json(&report.along_k),
        },
    });
    Ok(vec![
        Output::table("couplings", couplings),
        Output::table("decay", decay),
        Output::document("lattice-diagnostics", doc),
    ])
}

/// Late-decade growth exponent, or `None` when the run is too short to fit.
pub fn late_exponent(series: &EnergySeries, kicks: u64) -> Option<f64> {
    growth_exponent(series, (kicks as f64 / 10.0, kicks as f64)).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshots() {
        assert_eq!(snapshot_times(1000), [0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]);
        assert_eq!(snapshot_times(7), [0, 1, 2, 5, 7]);
        assert_eq!(snapshot_times(0), [0]);
    }
}
