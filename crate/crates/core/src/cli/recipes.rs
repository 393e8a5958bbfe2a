//! Figure-reproduction recipes built from the subcommand pipelines.

use std::f64::consts::TAU;

use serde_json::json;

use super::commands::{self, energy_table, ensemble_spec, late_exponent, potential_of};
use super::config::{integer, real, signed, ParamSpec, RunConfig};
use super::output::{Output, Table};
use super::CliError;
use crate::dynamics::{
    loglog_slope, quadratic_coefficient, simulate_ensemble, InitialMomentum, ReducedState,
};
use crate::potential::ChannelPotential;
use crate::resonance::{ballistic_coefficient, find_cycle, mean_square_coefficient, ResonanceParams};

pub struct Recipe {
    pub name: &'static str,
    pub about: &'static str,
    pub params: &'static [ParamSpec],
    pub run: fn(&RunConfig) -> Result<Vec<Output>, CliError>,
}

const FIG2: &[ParamSpec] = &[
    real("mu", "3", "kick strength"),
    real("eta", "pi/gm", "momentum quantum"),
    real("p0_a", "eta/2", "first fixed initial momentum"),
    real("p0_b", "eta/sqrt2", "second fixed initial momentum"),
    real("p0_c", "pi/sqrt3", "third fixed initial momentum"),
    integer("size", "100000", "ensemble size"),
    integer("kicks", "10000", "number of kicks"),
    integer("seed", "1", "RNG seed"),
    integer("window", "100", "trailing average length in kicks"),
];

const FIG3: &[ParamSpec] = &[real("mu", "4", "kick strength"), FIG2[1], FIG2[2], FIG2[3], FIG2[4], FIG2[5], FIG2[6], FIG2[7], FIG2[8]];

const FIG4: &[ParamSpec] = &[
    real("mu", "4", "kick strength"),
    real("eta", "pi/gm", "momentum quantum"),
    ParamSpec {
        key: "p0",
        default: Some("uniform"),
        kind: super::config::Kind::RealOr(&["uniform"]),
        help: "initial momentum, or `uniform` on (-eta/2, eta/2)",
    },
    integer("size", "100000", "ensemble size"),
    integer("kicks", "10000", "number of kicks"),
    integer("seed", "1", "RNG seed"),
    integer("window", "100", "kicks accumulated at the end of the run"),
];

const RESONANCE_DEMO: &[ParamSpec] = &[
    real("mu", "5", "kick strength"),
    signed("p", "1", "eta = 2pi P/Q"),
    integer("q", "3", "denominator Q"),
    real("theta0", "0.1", "angle offset of the reported cycle"),
    integer("size", "10000", "ensemble size"),
    integer("kicks", "10000", "number of kicks"),
    integer("seed", "11", "RNG seed"),
    integer("window", "100", "trailing average length in kicks"),
];

pub const RECIPES: &[Recipe] = &[
    Recipe {
        name: "fig1",
        about: "potential and its derivative for mu = 3, eta = 1.2",
        params: commands::POTENTIAL,
        run: fig1,
    },
    Recipe {
        name: "fig2",
        about: "energy growth for three initial momenta and the quasi-momentum average, mu = 3",
        params: FIG2,
        run: energy_curves,
    },
    Recipe {
        name: "fig3",
        about: "as fig2 with mu = 4",
        params: FIG3,
        run: energy_curves,
    },
    Recipe {
        name: "fig4",
        about: "quasi-momentum averaged momentum distribution, mu = 4",
        params: FIG4,
        run: fig4,
    },
    Recipe {
        name: "pf-spread",
        about: "Perron-Frobenius evolution of a uniform band: harmonic spreading, band localization",
        params: commands::PF,
        run: pf_spread,
    },
    Recipe {
        name: "resonance-demo",
        about: "ballistic growth at a commensurate eta against the cycle prediction",
        params: RESONANCE_DEMO,
        run: resonance_demo,
    },
];

pub fn find(name: &str) -> Option<&'static Recipe> {
    RECIPES.iter().find(|r| r.name == name)
}

fn renamed(prefix: &str, outputs: Vec<Output>) -> Vec<Output> {
    outputs
        .into_iter()
        .map(|mut o| {
            o.name = format!("{prefix}-{}", o.name);
            o
        })
        .collect()
}

fn fig1(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    Ok(renamed("fig1", commands::potential(cfg)?))
}

fn energy_curves(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let name = &cfg.command;
    let pot = potential_of(cfg)?;
    let kicks = cfg.integer("kicks");
    let columns = ["p0_a", "p0_b", "p0_c", "beta_averaged"];
    let mut curves = Vec::new();
    let mut fits = serde_json::Map::new();
    for col in columns {
        let p0 = match col {
            "beta_averaged" => InitialMomentum::UniformCell,
            key => InitialMomentum::Fixed(cfg.real(key)),
        };
        let series = simulate_ensemble(&pot, &ensemble_spec(cfg, p0)?)?;
        fits.insert(
            col.to_string(),
            json!({
                "late_exponent": late_exponent(&series, kicks),
                "final_windowed_mean_p2": series.windowed_mean_p2.last(),
            }),
        );
        curves.push(series);
    }
    let mut t = Table::new(&["t", "p0_a", "p0_b", "p0_c", "beta_averaged"]);
    for (i, &time) in curves[0].times.iter().enumerate() {
        let mut row = vec![time.into()];
        row.extend(curves.iter().map(|s| s.windowed_mean_p2[i].into()));
        t.push(row);
    }
    Ok(vec![
        Output::table(name.clone(), t),
        Output::document(format!("{name}-fits"), serde_json::Value::Object(fits)),
    ])
}

fn fig4(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    Ok(renamed("fig4", commands::histogram(cfg)?))
}

fn pf_spread(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    Ok(commands::pf(cfg)?
        .into_iter()
        .map(|mut o| {
            o.name = o.name.replacen("pf", "pf-spread", 1);
            o
        })
        .collect())
}

fn resonance_demo(cfg: &RunConfig) -> Result<Vec<Output>, CliError> {
    let (p, q) = (cfg.signed("p"), cfg.signed("q"));
    if q < 1 {
        return Err(CliError::Domain("q must be positive".into()));
    }
    let eta = TAU * p as f64 / q as f64;
    let pot = ChannelPotential::new(cfg.real("mu"), eta)?;
    let spec = ensemble_spec(cfg, InitialMomentum::Fixed(0.0))?;
    let series = simulate_ensemble(&pot, &spec)?;

    let kicks = spec.kicks as f64;
    let fit = (kicks / 10.0, kicks);
    let exponent = loglog_slope(&series.times, &series.mean_p2, fit)?;
    let fitted = quadratic_coefficient(&series, fit)?;
    let starts: Vec<(f64, i64)> = (0..spec.size)
        .map(|i| {
            let point = spec.initial_point(eta, i);
            (point.theta, ReducedState::from_phase_point(point, eta).n)
        })
        .collect();
    let predicted = mean_square_coefficient(&pot, p, q, 0, 1, &starts)?;

    let params = ResonanceParams::new(&pot, p, q, 0, 1, cfg.real("theta0"))?;
    let cycle = find_cycle(&params, 0, 0);
    let relative_error = (fitted - predicted).abs() / predicted;
    let doc = json!({
        "P": p,
        "Q": q,
        "mu": cfg.real("mu"),
        "eta": eta,
        "cycle": {
            "theta0": params.theta0(),
            "T": cycle.period,
            "K": cycle.k,
            "L": cycle.l,
            "coefficient": ballistic_coefficient(&cycle, &params),
        },
        "fit_window": [fit.0, fit.1],
        "growth_exponent": exponent,
        "fitted_coefficient": fitted,
        "predicted_mean_c2": predicted,
        "relative_error": relative_error,
    });
    Ok(vec![
        Output::table("resonance-demo", energy_table(&series)),
        Output::document("resonance-demo-prediction", doc),
    ])
}
