//! State audits: quantifies the structural invariants (Hermiticity, trace,
//! positivity, coherence and degeneracy bounds) so tests and the CLI can
//! assert or report them. Auditing never mutates or repairs a state.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{hermitian_eig, CMatrix, LinalgError};
use crate::models::{condense, ModelError};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("audit expects a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error(
        "state dimension {dim} matches neither the expanded ({expanded}) nor the condensed \
         ({condensed}) degenerate index set"
    )]
    DegeneracyMismatch { dim: usize, expanded: usize, condensed: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Defect fields are max-norm violations, clamped at zero; a perfectly
/// structured state audits to all-zero defects.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub hermiticity_defect: f64,
    pub trace: C64,
    pub min_eigenvalue: f64,
    pub coherence_bound_defect: f64,
    pub population_min: f64,
    pub population_max: f64,
    /// Present only for degenerate scenarios.
    pub degeneracy_bound_defect: Option<f64>,
}

/// Audits a square state matrix. Electron-hole and reduced states are mapped
/// back to the composite density matrix by the caller before auditing.
///
/// When degeneracies are supplied the state is interpreted as living on the
/// expanded sub-level set (size `sum d_i`) or on the condensed set (size
/// `len(d)`), whichever matches, and the defect reports violations of
/// `rho^{++}_ii <= d_i`.
pub fn audit(
    state: &CMatrix,
    degeneracies: Option<&[usize]>,
) -> Result<DiagnosticsRecord, DiagnosticsError> {
    if !state.is_square() {
        return Err(DiagnosticsError::NotSquare { rows: state.rows(), cols: state.cols() });
    }
    let n = state.rows();
    let hermiticity_defect = state.hermiticity_defect();
    let trace = state.trace();
    let (eigenvalues, _) = hermitian_eig(&state.hermitized())?;
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);

    let mut coherence_bound_defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            // Clamp near-zero populations so roundoff below zero cannot
            // produce NaN under the square root.
            let bound = (state[(i, i)].re.max(0.0) * state[(j, j)].re.max(0.0)).sqrt();
            coherence_bound_defect = coherence_bound_defect.max(state[(i, j)].norm() - bound);
        }
    }
    coherence_bound_defect = coherence_bound_defect.max(0.0);

    let populations: Vec<f64> = (0..n).map(|i| state[(i, i)].re).collect();
    let population_min = populations.iter().copied().fold(f64::INFINITY, f64::min);
    let population_max = populations.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let degeneracy_bound_defect = match degeneracies {
        None => None,
        Some(d) => {
            let expanded: usize = d.iter().sum();
            let condensed = d.len();
            let summed_populations: Vec<f64> = if n == expanded {
                let sigma = condense(state, d)?;
                (0..condensed).map(|i| sigma[(i, i)].re * d[i] as f64).collect()
            } else if n == condensed {
                (0..condensed).map(|i| state[(i, i)].re * d[i] as f64).collect()
            } else {
                return Err(DiagnosticsError::DegeneracyMismatch { dim: n, expanded, condensed });
            };
            let defect = summed_populations
                .iter()
                .zip(d)
                .map(|(&rho_pp, &di)| (rho_pp - di as f64).max(0.0))
                .fold(0.0, f64::max);
            Some(defect)
        }
    };

    Ok(DiagnosticsRecord {
        hermiticity_defect,
        trace,
        min_eigenvalue,
        coherence_bound_defect,
        population_min,
        population_max,
        degeneracy_bound_defect,
    })
}
