//! Model comparison: the full two-species Liouville dynamics, started with
//! intra-band coherences forced to zero, against the reduced
//! population/polarization model from matched initial data. The interesting
//! output is how far the populations drift apart and how much intra-band
//! coherence the full model grows from nothing.

use std::io::{self, Write};

use num_complex::Complex64 as C64;

use crate::config::{ConfigError, Scenario};
use crate::integrators::{simulate, Method, Model, SimError, State, StepperSpec};
use crate::linalg::CMatrix;
use crate::models::GhState;
use crate::output::format_sig;

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("compare requires a two_species scenario, got {model}")]
    WrongModel { model: &'static str },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Per-record comparison data plus run maxima.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub times: Vec<f64>,
    /// `|n^e_i(full) - n^e_i(reduced)|` per record and conduction level.
    pub electron_population_dev: Vec<Vec<f64>>,
    /// `|n^h_j(full) - n^h_j(reduced)|` per record and hole level.
    pub hole_population_dev: Vec<Vec<f64>>,
    /// Largest intra-band coherence magnitude in the full model per record.
    pub intraband_coherence: Vec<f64>,
    pub max_population_discrepancy: f64,
    pub max_intraband_coherence: f64,
}

fn zero_intraband_coherences(rho: &CMatrix, conduction: usize) -> CMatrix {
    CMatrix::from_fn(rho.rows(), rho.cols(), |a, b| {
        let intra_band = (a < conduction) == (b < conduction);
        if intra_band && a != b {
            C64::new(0.0, 0.0)
        } else {
            rho[(a, b)]
        }
    })
}

/// Runs the paired simulations from a `two_species` scenario.
pub fn run_comparison(scenario: &Scenario) -> Result<Comparison, CompareError> {
    let Model::TwoSpecies(system) = &scenario.model else {
        return Err(CompareError::WrongModel { model: scenario.model.name() });
    };
    let State::Density(rho0) = &scenario.initial else {
        return Err(CompareError::WrongModel { model: scenario.model.name() });
    };
    let nc = system.conduction_levels();
    let nv = system.valence_levels();

    let rho0 = zero_intraband_coherences(rho0, nc);
    let full = simulate(
        &scenario.model,
        State::Density(rho0.clone()),
        &scenario.field,
        &scenario.stepper,
    )?;

    let reduced_initial = GhState {
        n_e: (0..nc).map(|i| rho0[(i, i)].re).collect(),
        n_h: (0..nv).map(|j| 1.0 - rho0[(nc + j, nc + j)].re).collect(),
        p: rho0.block(0, nc, nc, nv),
    };
    let reduced_spec = StepperSpec { method: Method::Rk4, ..scenario.stepper };
    let reduced = simulate(
        &Model::GehrigHess(system.clone()),
        State::GehrigHess(reduced_initial),
        &scenario.field,
        &reduced_spec,
    )?;

    let mut comparison = Comparison {
        times: full.times.clone(),
        electron_population_dev: Vec::with_capacity(full.len()),
        hole_population_dev: Vec::with_capacity(full.len()),
        intraband_coherence: Vec::with_capacity(full.len()),
        max_population_discrepancy: 0.0,
        max_intraband_coherence: 0.0,
    };

    for (full_state, reduced_state) in full.states.iter().zip(&reduced.states) {
        let State::Density(rho) = full_state else { unreachable!() };
        let State::GehrigHess(gh) = reduced_state else { unreachable!() };

        let ne_dev: Vec<f64> =
            (0..nc).map(|i| (rho[(i, i)].re - gh.n_e[i]).abs()).collect();
        let nh_dev: Vec<f64> = (0..nv)
            .map(|j| ((1.0 - rho[(nc + j, nc + j)].re) - gh.n_h[j]).abs())
            .collect();

        let mut coherence = 0.0f64;
        for a in 0..nc + nv {
            for b in 0..nc + nv {
                let intra_band = (a < nc) == (b < nc);
                if intra_band && a != b {
                    coherence = coherence.max(rho[(a, b)].norm());
                }
            }
        }

        for &dev in ne_dev.iter().chain(&nh_dev) {
            comparison.max_population_discrepancy =
                comparison.max_population_discrepancy.max(dev);
        }
        comparison.max_intraband_coherence = comparison.max_intraband_coherence.max(coherence);
        comparison.electron_population_dev.push(ne_dev);
        comparison.hole_population_dev.push(nh_dev);
        comparison.intraband_coherence.push(coherence);
    }
    Ok(comparison)
}

/// CSV with one row per record: population discrepancies and the intra-band
/// coherence grown by the full model.
pub fn write_comparison_csv<W: Write>(
    writer: &mut W,
    comparison: &Comparison,
    precision: usize,
) -> io::Result<()> {
    let nc = comparison.electron_population_dev.first().map_or(0, Vec::len);
    let nv = comparison.hole_population_dev.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((0..nc).map(|i| format!("n_e_{i}_dev")));
    header.extend((0..nv).map(|j| format!("n_h_{j}_dev")));
    header.push("max_intraband_coherence".to_string());
    writeln!(writer, "{}", header.join(","))?;

    for (k, &t) in comparison.times.iter().enumerate() {
        let mut row = vec![format_sig(t, precision)];
        row.extend(comparison.electron_population_dev[k].iter().map(|&v| format_sig(v, precision)));
        row.extend(comparison.hole_population_dev[k].iter().map(|&v| format_sig(v, precision)));
        row.push(format_sig(comparison.intraband_coherence[k], precision));
        writeln!(writer, "{}", row.join(","))?;
    }
    Ok(())
}
