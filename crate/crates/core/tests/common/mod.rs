//! Shared helpers for the integration and acceptance tests.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

/// Local maxima of a sampled signal, refined by parabolic interpolation of
/// the three points around each peak. Plateau edges and endpoints are
/// ignored.
pub fn find_peaks(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut peaks = Vec::new();
    for k in 1..values.len().saturating_sub(1) {
        if values[k] > values[k - 1] && values[k] >= values[k + 1] {
            let denom = values[k - 1] - 2.0 * values[k] + values[k + 1];
            let offset = if denom.abs() > 1e-300 {
                0.5 * (values[k - 1] - values[k + 1]) / denom
            } else {
                0.0
            };
            let dt = times[k + 1] - times[k];
            peaks.push(times[k] + offset * dt);
        }
    }
    peaks
}

/// Mean spacing between successive peaks.
pub fn mean_period(peaks: &[f64]) -> Option<f64> {
    if peaks.len() < 2 {
        return None;
    }
    Some((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}

/// Minimal CSV reader for the trajectory files this crate writes: a header
/// row of column names, then float rows.
pub struct Csv {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl Csv {
    pub fn parse(text: &str) -> Csv {
        let mut lines = text.lines();
        let columns: Vec<String> =
            lines.next().unwrap_or("").split(',').map(str::to_string).collect();
        let rows = lines
            .filter(|line| !line.is_empty())
            .map(|line| {
                line.split(',')
                    .map(|cell| cell.parse::<f64>().expect("numeric cell"))
                    .collect()
            })
            .collect();
        let index =
            columns.iter().enumerate().map(|(i, name)| (name.clone(), i)).collect();
        Csv { columns, rows, index }
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        let at = *self.index.get(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|row| row[at]).collect()
    }
}

/// Path to a committed scenario config at the workspace root.
pub fn workspace_config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .and_then(|p| p.parent())
        .expect("workspace root")
        .join("configs")
        .join(name)
}

/// Path to the compiled CLI binary.
pub fn qbloch_bin() -> &'static str {
    env!("CARGO_BIN_EXE_qbloch")
}
