//! CSV rendering of trajectories: one row per record with the tracked state
//! entries (split into `_re`/`_im` columns) followed by the diagnostics.

use std::io::{self, Write};

use crate::integrators::{Model, State, Trajectory};

/// Formats with a fixed number of significant digits in scientific notation;
/// 17 digits round-trips f64.
pub fn format_sig(value: f64, significant_digits: usize) -> String {
    format!("{:.*e}", significant_digits.saturating_sub(1), value)
}

fn state_columns(model: &Model, trajectory: &Trajectory) -> Vec<String> {
    let mut columns = Vec::new();
    match trajectory.states.first() {
        Some(State::Density(rho)) => {
            for i in 0..rho.rows() {
                for j in i..rho.cols() {
                    columns.push(format!("rho_{i}_{j}_re"));
                    columns.push(format!("rho_{i}_{j}_im"));
                }
            }
        }
        Some(State::ElectronHole(state)) => {
            let nc = state.conduction_levels();
            let nh = state.hole_levels();
            for i in 0..nc {
                for j in i..nc {
                    columns.push(format!("rho_c_{i}_{j}_re"));
                    columns.push(format!("rho_c_{i}_{j}_im"));
                }
            }
            for i in 0..nh {
                for j in i..nh {
                    columns.push(format!("rho_h_{i}_{j}_re"));
                    columns.push(format!("rho_h_{i}_{j}_im"));
                }
            }
            for i in 0..nc {
                for j in 0..nh {
                    columns.push(format!("rho_ch_{i}_{j}_re"));
                    columns.push(format!("rho_ch_{i}_{j}_im"));
                }
            }
        }
        Some(State::GehrigHess(state)) => {
            for i in 0..state.n_e.len() {
                columns.push(format!("n_e_{i}"));
            }
            for j in 0..state.n_h.len() {
                columns.push(format!("n_h_{j}"));
            }
            // p_ji = rho^ch_ij: hole index first, conduction index second.
            for i in 0..state.p.rows() {
                for j in 0..state.p.cols() {
                    columns.push(format!("p_{j}_{i}_re"));
                    columns.push(format!("p_{j}_{i}_im"));
                }
            }
        }
        None => {}
    }
    let _ = model;
    columns
}

fn state_values(state: &State, out: &mut Vec<f64>) {
    match state {
        State::Density(rho) => {
            for i in 0..rho.rows() {
                for j in i..rho.cols() {
                    out.push(rho[(i, j)].re);
                    out.push(rho[(i, j)].im);
                }
            }
        }
        State::ElectronHole(state) => {
            for i in 0..state.conduction_levels() {
                for j in i..state.conduction_levels() {
                    out.push(state.rho_c[(i, j)].re);
                    out.push(state.rho_c[(i, j)].im);
                }
            }
            for i in 0..state.hole_levels() {
                for j in i..state.hole_levels() {
                    out.push(state.rho_h[(i, j)].re);
                    out.push(state.rho_h[(i, j)].im);
                }
            }
            for i in 0..state.conduction_levels() {
                for j in 0..state.hole_levels() {
                    out.push(state.rho_ch[(i, j)].re);
                    out.push(state.rho_ch[(i, j)].im);
                }
            }
        }
        State::GehrigHess(state) => {
            out.extend_from_slice(&state.n_e);
            out.extend_from_slice(&state.n_h);
            for i in 0..state.p.rows() {
                for j in 0..state.p.cols() {
                    out.push(state.p[(i, j)].re);
                    out.push(state.p[(i, j)].im);
                }
            }
        }
    }
}

/// Writes the trajectory as CSV: a header row, then per record the time, the
/// tracked entries (all populations and coherences), and the diagnostics
/// columns, with an extra degeneracy column for degenerate scenarios.
pub fn write_trajectory_csv<W: Write>(
    writer: &mut W,
    model: &Model,
    trajectory: &Trajectory,
    precision: usize,
) -> io::Result<()> {
    let degenerate = trajectory
        .diagnostics
        .first()
        .is_some_and(|record| record.degeneracy_bound_defect.is_some());

    let mut header = vec!["t".to_string()];
    header.extend(state_columns(model, trajectory));
    header.extend(
        ["hermiticity_defect", "trace_re", "trace_im", "min_eigenvalue", "coherence_bound_defect"]
            .map(String::from),
    );
    if degenerate {
        header.push("degeneracy_bound_defect".to_string());
    }
    writeln!(writer, "{}", header.join(","))?;

    let mut values = Vec::with_capacity(header.len());
    for ((time, state), record) in
        trajectory.times.iter().zip(&trajectory.states).zip(&trajectory.diagnostics)
    {
        values.clear();
        values.push(*time);
        state_values(state, &mut values);
        values.push(record.hermiticity_defect);
        values.push(record.trace.re);
        values.push(record.trace.im);
        values.push(record.min_eigenvalue);
        values.push(record.coherence_bound_defect);
        if degenerate {
            values.push(record.degeneracy_bound_defect.unwrap_or(0.0));
        }
        let row: Vec<String> = values.iter().map(|&v| format_sig(v, precision)).collect();
        writeln!(writer, "{}", row.join(","))?;
    }
    Ok(())
}
