//! Scenario configuration: TOML schema, validation with field-level error
//! messages, and construction of the runtime model, initial state, field and
//! stepper. The exact grammar is documented in `docs/CONFIG.md`.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{Envelope, FieldProfile, Pulse};
use crate::integrators::{Method, Model, State, StepperSpec};
use crate::linalg::CMatrix;
use crate::models::{
    to_electron_hole, CVec3, DensityMatrix, DipoleMatrix, GhState, ModelError, OneSpeciesSystem,
    TwoSpeciesSystem,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), message: message.into() }
    }
}

fn model_err(field: &str, err: ModelError) -> ConfigError {
    ConfigError::invalid(field, err.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    OneSpecies,
    DegenerateFdb,
    DegenerateCdb,
    TwoSpecies,
    ElectronHole,
    GehrigHess,
}

impl ModelKind {
    fn is_two_species(self) -> bool {
        matches!(self, ModelKind::TwoSpecies | ModelKind::ElectronHole | ModelKind::GehrigHess)
    }
}

/// One dipole entry; `value` holds three complex components as `[re, im]`
/// pairs. Intra-band matrices take the upper triangle and are completed
/// Hermitian; explicitly supplied conjugate entries are checked.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleEntryConfig {
    pub i: usize,
    pub j: usize,
    pub value: [[f64; 2]; 3],
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degeneracies: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dipole: Vec<DipoleEntryConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conduction_energies: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valence_energies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dipole_cc: Vec<DipoleEntryConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dipole_vv: Vec<DipoleEntryConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dipole_cv: Vec<DipoleEntryConfig>,
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    Ground,
    Inverted,
    Diagonal,
    Matrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    pub preset: PresetKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub populations: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    /// Degenerate scenarios zero intra-level coherences of an explicit
    /// matrix unless this is set; keeping them demonstrates how the
    /// condensed bound can fail.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub keep_intra_level_coherences: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub amplitude: [[f64; 2]; 3],
    #[serde(default)]
    pub carrier_frequency: f64,
    #[serde(default)]
    pub phase: f64,
    /// One of `constant`, `gaussian` (with `center`, `width`) or
    /// `rectangular` (with `start`, `stop`).
    pub envelope: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pulses: Vec<PulseConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    pub method: String,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_record_every() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_output_path")]
    pub path: String,
    #[serde(default = "default_precision")]
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { path: default_output_path(), precision: default_precision() }
    }
}

fn default_output_path() -> String {
    "trajectory.csv".to_string()
}

/// 17 significant digits round-trips f64 exactly.
fn default_precision() -> usize {
    17
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    pub system: SystemConfig,
    pub initial_state: InitialStateConfig,
    #[serde(default)]
    pub field: FieldConfig,
    pub stepper: StepperConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario configs always serialize")
    }
}

/// A fully validated, ready-to-run scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub model: Model,
    pub initial: State,
    pub field: FieldProfile,
    pub stepper: StepperSpec,
    pub output: OutputConfig,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ConfigError> {
    build_scenario(&ScenarioConfig::from_file(path)?)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    build_scenario(&ScenarioConfig::from_toml(text)?)
}

pub fn build_scenario(config: &ScenarioConfig) -> Result<Scenario, ConfigError> {
    let model = build_model(config)?;
    let initial = build_initial_state(config, &model)?;
    let field = build_field(&config.field)?;
    let stepper = build_stepper(&config.stepper)?;
    if config.output.precision == 0 || config.output.precision > 17 {
        return Err(ConfigError::invalid(
            "output.precision",
            format!("significant digits must lie in 1..=17, got {}", config.output.precision),
        ));
    }
    if stepper.method == Method::UnitaryMidpoint && !model.has_liouville_form() {
        return Err(ConfigError::invalid(
            "stepper.method",
            format!("the {} model has no Liouville form; use \"rk4\"", model.name()),
        ));
    }
    Ok(Scenario { model, initial, field, stepper, output: config.output.clone() })
}

fn to_c64(pair: [f64; 2]) -> C64 {
    C64::new(pair[0], pair[1])
}

fn to_cvec3(triple: &[[f64; 2]; 3]) -> CVec3 {
    [to_c64(triple[0]), to_c64(triple[1]), to_c64(triple[2])]
}

fn build_intraband_dipole(
    field: &str,
    levels: usize,
    entries: &[DipoleEntryConfig],
) -> Result<DipoleMatrix, ConfigError> {
    let mut dipole = DipoleMatrix::zeros(levels, levels);
    let mut seen = std::collections::HashSet::new();
    for entry in entries {
        let value = to_cvec3(&entry.value);
        if entry.i >= levels || entry.j >= levels {
            return Err(ConfigError::invalid(
                field,
                format!(
                    "entry ({}, {}) out of range for {} levels",
                    entry.i, entry.j, levels
                ),
            ));
        }
        if entry.i == entry.j {
            if value.iter().any(|z| z.norm() > 0.0) {
                return Err(ConfigError::invalid(
                    field,
                    format!(
                        "diagonal entry ({0}, {0}) must vanish: the dipole matrix requires \
                         M_kk = 0",
                        entry.i
                    ),
                ));
            }
            continue;
        }
        if !seen.insert((entry.i, entry.j)) {
            return Err(ConfigError::invalid(
                field,
                format!("entry ({}, {}) given more than once", entry.i, entry.j),
            ));
        }
        if seen.contains(&(entry.j, entry.i)) {
            // Both orientations supplied: check they are conjugates.
            let existing = *dipole.get(entry.i, entry.j);
            for axis in 0..3 {
                if (existing[axis] - value[axis]).norm() > 1e-12 {
                    return Err(ConfigError::invalid(
                        field,
                        format!(
                            "entries ({}, {}) and ({}, {}) are not Hermitian conjugates \
                             (M_ij* must equal M_ji)",
                            entry.j, entry.i, entry.i, entry.j
                        ),
                    ));
                }
            }
            continue;
        }
        dipole.set_hermitian_pair(entry.i, entry.j, value);
    }
    Ok(dipole)
}

fn build_rectangular_dipole(
    field: &str,
    rows: usize,
    cols: usize,
    entries: &[DipoleEntryConfig],
) -> Result<DipoleMatrix, ConfigError> {
    let mut dipole = DipoleMatrix::zeros(rows, cols);
    for entry in entries {
        if entry.i >= rows || entry.j >= cols {
            return Err(ConfigError::invalid(
                field,
                format!(
                    "entry ({}, {}) out of range for a {}x{} block",
                    entry.i, entry.j, rows, cols
                ),
            ));
        }
        dipole.set(entry.i, entry.j, to_cvec3(&entry.value));
    }
    Ok(dipole)
}

fn build_one_species(config: &ScenarioConfig) -> Result<OneSpeciesSystem, ConfigError> {
    let energies = config
        .system
        .energies
        .clone()
        .ok_or_else(|| ConfigError::invalid("system.energies", "required for this model"))?;
    if energies.is_empty() {
        return Err(ConfigError::invalid("system.energies", "must not be empty"));
    }
    let levels = energies.len();
    let dipole = build_intraband_dipole("system.dipole", levels, &config.system.dipole)?;
    let degeneracies = config.system.degeneracies.clone();
    if let Some(d) = &degeneracies {
        if d.len() != levels {
            return Err(ConfigError::invalid(
                "system.degeneracies",
                format!("expected {} entries, got {}", levels, d.len()),
            ));
        }
        if d.iter().any(|&x| x == 0) {
            return Err(ConfigError::invalid("system.degeneracies", "entries must be >= 1"));
        }
    }
    OneSpeciesSystem::new(energies, dipole, degeneracies, config.system.hbar)
        .map_err(|err| model_err("system", err))
}

fn build_two_species(config: &ScenarioConfig) -> Result<TwoSpeciesSystem, ConfigError> {
    let conduction = config.system.conduction_energies.clone().ok_or_else(|| {
        ConfigError::invalid("system.conduction_energies", "required for this model")
    })?;
    let valence = config.system.valence_energies.clone().ok_or_else(|| {
        ConfigError::invalid("system.valence_energies", "required for this model")
    })?;
    let (nc, nv) = (conduction.len(), valence.len());
    if nc == 0 || nv == 0 {
        return Err(ConfigError::invalid(
            "system.conduction_energies",
            "both bands need at least one level",
        ));
    }
    let dipole_cc = build_intraband_dipole("system.dipole_cc", nc, &config.system.dipole_cc)?;
    let dipole_vv = build_intraband_dipole("system.dipole_vv", nv, &config.system.dipole_vv)?;
    let dipole_cv =
        build_rectangular_dipole("system.dipole_cv", nc, nv, &config.system.dipole_cv)?;
    TwoSpeciesSystem::new(conduction, valence, dipole_cc, dipole_vv, dipole_cv, config.system.hbar)
        .map_err(|err| model_err("system", err))
}

fn build_model(config: &ScenarioConfig) -> Result<Model, ConfigError> {
    if config.model.is_two_species() {
        let system = build_two_species(config)?;
        Ok(match config.model {
            ModelKind::TwoSpecies => Model::TwoSpecies(system),
            ModelKind::ElectronHole => Model::ElectronHole(system),
            ModelKind::GehrigHess => Model::GehrigHess(system),
            _ => unreachable!(),
        })
    } else {
        let system = build_one_species(config)?;
        match config.model {
            ModelKind::OneSpecies => Ok(Model::OneSpecies(system)),
            ModelKind::DegenerateFdb => Ok(Model::DegenerateFdb(system)),
            ModelKind::DegenerateCdb => Ok(Model::DegenerateCdb(system)),
            _ => unreachable!(),
        }
    }
}

/// Diagonal populations for the named presets over a composite level set.
fn preset_populations(config: &ScenarioConfig, model: &Model) -> Result<Vec<f64>, ConfigError> {
    let dim = model.state_dim();
    match config.initial_state.preset {
        PresetKind::Ground | PresetKind::Inverted => {
            let inverted = config.initial_state.preset == PresetKind::Inverted;
            let mut populations = vec![0.0; dim];
            match model {
                Model::OneSpecies(sys) | Model::DegenerateCdb(sys) => {
                    let target = extreme_level(sys.energies(), inverted);
                    populations[target] = 1.0;
                }
                Model::DegenerateFdb(sys) => {
                    // Every sub-level of the selected level is filled.
                    let target = extreme_level(sys.energies(), inverted);
                    let mut offset = 0;
                    for (level, &d) in sys.degeneracies().iter().enumerate() {
                        if level == target {
                            for s in 0..d {
                                populations[offset + s] = 1.0;
                            }
                        }
                        offset += d;
                    }
                }
                Model::TwoSpecies(sys) | Model::ElectronHole(sys) | Model::GehrigHess(sys) => {
                    // Ground: full valence band, empty conduction band.
                    let nc = sys.conduction_levels();
                    for (index, population) in populations.iter_mut().enumerate() {
                        let in_conduction = index < nc;
                        *population = if in_conduction == inverted { 1.0 } else { 0.0 };
                    }
                }
            }
            Ok(populations)
        }
        PresetKind::Diagonal => {
            let populations = config.initial_state.populations.clone().ok_or_else(|| {
                ConfigError::invalid(
                    "initial_state.populations",
                    "required by the diagonal preset",
                )
            })?;
            match model {
                // Degenerate models accept per-level populations (replicated
                // over sub-levels) or per-sub-level populations.
                Model::DegenerateFdb(sys) if populations.len() == sys.levels() => {
                    let mut expanded = Vec::with_capacity(dim);
                    for (level, &d) in sys.degeneracies().iter().enumerate() {
                        expanded.extend(std::iter::repeat(populations[level]).take(d));
                    }
                    Ok(expanded)
                }
                _ if populations.len() == dim => Ok(populations),
                _ => Err(ConfigError::invalid(
                    "initial_state.populations",
                    format!("expected {} entries, got {}", dim, populations.len()),
                )),
            }
        }
        PresetKind::Matrix => unreachable!("matrix preset handled separately"),
    }
}

fn extreme_level(energies: &[f64], highest: bool) -> usize {
    let mut best = 0;
    for (index, &energy) in energies.iter().enumerate() {
        let better =
            if highest { energy > energies[best] } else { energy < energies[best] };
        if better {
            best = index;
        }
    }
    best
}

fn build_explicit_matrix(
    config: &ScenarioConfig,
    dim: usize,
) -> Result<CMatrix, ConfigError> {
    let rows = config.initial_state.matrix.as_ref().ok_or_else(|| {
        ConfigError::invalid("initial_state.matrix", "required by the matrix preset")
    })?;
    if rows.len() != dim || rows.iter().any(|row| row.len() != dim) {
        return Err(ConfigError::invalid(
            "initial_state.matrix",
            format!("expected a {dim}x{dim} matrix"),
        ));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| to_c64(rows[i][j])))
}

/// Zeroes the intra-level coherence entries of an expanded degenerate state.
fn zero_intra_level_coherences(rho: &mut CMatrix, degeneracies: &[usize]) {
    let mut offset = 0;
    for &d in degeneracies {
        for a in 0..d {
            for b in 0..d {
                if a != b {
                    rho[(offset + a, offset + b)] = C64::new(0.0, 0.0);
                }
            }
        }
        offset += d;
    }
}

fn build_initial_state(config: &ScenarioConfig, model: &Model) -> Result<State, ConfigError> {
    let dim = model.state_dim();
    let rho = if config.initial_state.preset == PresetKind::Matrix {
        let mut rho = build_explicit_matrix(config, dim)?;
        if let Model::DegenerateFdb(sys) = model {
            if !config.initial_state.keep_intra_level_coherences {
                zero_intra_level_coherences(&mut rho, sys.degeneracies());
            }
        }
        rho
    } else {
        let populations = preset_populations(config, model)?;
        CMatrix::diagonal(&populations.iter().map(|&p| C64::new(p, 0.0)).collect::<Vec<_>>())
    };

    // CDB initial data is sigma; its diagonal is bounded by 1 exactly like a
    // plain density matrix when intra-level coherences vanish, so the same
    // physical validation applies to every density-model state.
    let density =
        DensityMatrix::new(rho).map_err(|err| model_err("initial_state.matrix", err))?;
    density.validate_physical().map_err(|err| model_err("initial_state", err))?;
    let rho = density.into_matrix();

    match model {
        Model::OneSpecies(_)
        | Model::DegenerateFdb(_)
        | Model::DegenerateCdb(_)
        | Model::TwoSpecies(_) => Ok(State::Density(rho)),
        Model::ElectronHole(sys) => {
            let state =
                to_electron_hole(&rho, sys.conduction_levels(), sys.valence_levels())
                    .map_err(|err| model_err("initial_state", err))?;
            Ok(State::ElectronHole(state))
        }
        Model::GehrigHess(sys) => {
            let nc = sys.conduction_levels();
            let nv = sys.valence_levels();
            for a in 0..dim {
                for b in 0..dim {
                    let intra_band = (a < nc) == (b < nc);
                    if intra_band && a != b && rho[(a, b)].norm() > 0.0 {
                        return Err(ConfigError::invalid(
                            "initial_state.matrix",
                            "the reduced model assumes vanishing intra-band coherences; \
                             only diagonal intra-band entries and the cv block may be set",
                        ));
                    }
                }
            }
            let eh = to_electron_hole(&rho, nc, nv).map_err(|err| model_err("initial_state", err))?;
            let state = GhState {
                n_e: (0..nc).map(|i| eh.rho_c[(i, i)].re).collect(),
                n_h: (0..nv).map(|j| eh.rho_h[(j, j)].re).collect(),
                p: eh.rho_ch,
            };
            Ok(State::GehrigHess(state))
        }
    }
}

fn build_field(config: &FieldConfig) -> Result<FieldProfile, ConfigError> {
    let mut pulses = Vec::with_capacity(config.pulses.len());
    for (index, pulse) in config.pulses.iter().enumerate() {
        let field = format!("field.pulses[{index}]");
        let envelope = match pulse.envelope.as_str() {
            "constant" => Envelope::Constant,
            "gaussian" => {
                let center = pulse.center.ok_or_else(|| {
                    ConfigError::invalid(&field, "gaussian envelope requires `center`")
                })?;
                let width = pulse.width.ok_or_else(|| {
                    ConfigError::invalid(&field, "gaussian envelope requires `width`")
                })?;
                Envelope::Gaussian { center, width }
            }
            "rectangular" => {
                let start = pulse.start.ok_or_else(|| {
                    ConfigError::invalid(&field, "rectangular envelope requires `start`")
                })?;
                let stop = pulse.stop.ok_or_else(|| {
                    ConfigError::invalid(&field, "rectangular envelope requires `stop`")
                })?;
                Envelope::Rectangular { start, stop }
            }
            other => {
                return Err(ConfigError::invalid(
                    &field,
                    format!(
                        "unknown envelope {other:?}; expected constant, gaussian or rectangular"
                    ),
                ));
            }
        };
        let pulse = Pulse::new(
            to_cvec3(&pulse.amplitude),
            pulse.carrier_frequency,
            pulse.phase,
            envelope,
        )
        .map_err(|err| ConfigError::invalid(&field, err.to_string()))?;
        pulses.push(pulse);
    }
    Ok(FieldProfile::new(pulses))
}

fn build_stepper(config: &StepperConfig) -> Result<StepperSpec, ConfigError> {
    let method = match config.method.as_str() {
        "unitary_midpoint" => Method::UnitaryMidpoint,
        "rk4" => Method::Rk4,
        other => {
            return Err(ConfigError::invalid(
                "stepper.method",
                format!("unknown method {other:?}; expected unitary_midpoint or rk4"),
            ));
        }
    };
    let spec = StepperSpec {
        method,
        dt: config.dt,
        t_start: config.t_start,
        t_end: config.t_end,
        record_every: config.record_every,
    };
    spec.validate().map_err(|err| ConfigError::invalid("stepper", err.to_string()))?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
model = "one_species"

[system]
energies = [0.0, 1.0]

[[system.dipole]]
i = 0
j = 1
value = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]

[initial_state]
preset = "ground"

[stepper]
method = "unitary_midpoint"
dt = 0.01
t_start = 0.0
t_end = 1.0
"#;

    #[test]
    fn minimal_config_builds() {
        let scenario = parse_scenario(MINIMAL).unwrap();
        assert!(matches!(scenario.model, Model::OneSpecies(_)));
        let State::Density(rho) = &scenario.initial else { panic!("density expected") };
        assert!((rho[(0, 0)].re - 1.0).abs() < 1e-15);
        assert_eq!(scenario.output.precision, 17);
    }

    #[test]
    fn nonzero_dipole_diagonal_is_named_in_the_error() {
        let text = MINIMAL.replace("i = 0\nj = 1", "i = 1\nj = 1");
        let err = parse_scenario(&text).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("M_kk = 0"), "unexpected message: {message}");
        assert!(message.contains("system.dipole"));
    }

    #[test]
    fn inconsistent_conjugate_pair_rejected() {
        let text = format!(
            "{MINIMAL}\n[[system.dipole]]\ni = 1\nj = 0\nvalue = [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0]]\n"
        );
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("Hermitian conjugates"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("[stepper]", "typo_field = 3\n[stepper]");
        assert!(matches!(parse_scenario(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn method_model_mismatch_is_a_config_error() {
        let text = r#"
model = "gehrig_hess"

[system]
conduction_energies = [1.0]
valence_energies = [0.0]

[[system.dipole_cv]]
i = 0
j = 0
value = [[0.2, 0.0], [0.0, 0.0], [0.0, 0.0]]

[initial_state]
preset = "ground"

[stepper]
method = "unitary_midpoint"
dt = 0.01
t_start = 0.0
t_end = 1.0
"#;
        let err = parse_scenario(text).unwrap_err();
        assert!(err.to_string().contains("no Liouville form"));
    }

    #[test]
    fn unphysical_initial_matrix_rejected() {
        let text = r#"
model = "one_species"

[system]
energies = [0.0, 1.0]

[initial_state]
preset = "matrix"
matrix = [
    [[0.5, 0.0], [0.9, 0.0]],
    [[0.9, 0.0], [0.5, 0.0]],
]

[stepper]
method = "unitary_midpoint"
dt = 0.01
t_start = 0.0
t_end = 1.0
"#;
        let err = parse_scenario(text).unwrap_err();
        assert!(err.to_string().contains("positive"), "got: {err}");
    }

    #[test]
    fn degenerate_matrix_zeroes_intra_level_coherences_by_default() {
        let text = r#"
model = "degenerate_fdb"

[system]
energies = [0.0, 1.0]
degeneracies = [2, 1]

[initial_state]
preset = "matrix"
matrix = [
    [[0.5, 0.0], [0.2, 0.0], [0.0, 0.0]],
    [[0.2, 0.0], [0.5, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
]

[stepper]
method = "unitary_midpoint"
dt = 0.01
t_start = 0.0
t_end = 1.0
"#;
        let scenario = parse_scenario(text).unwrap();
        let State::Density(rho) = &scenario.initial else { panic!() };
        assert_eq!(rho[(0, 1)], C64::new(0.0, 0.0));

        let keep = text.replace(
            "preset = \"matrix\"",
            "preset = \"matrix\"\nkeep_intra_level_coherences = true",
        );
        let scenario = parse_scenario(&keep).unwrap();
        let State::Density(rho) = &scenario.initial else { panic!() };
        assert_eq!(rho[(0, 1)], C64::new(0.2, 0.0));
    }

    #[test]
    fn per_level_populations_expand_over_sub_levels() {
        let text = r#"
model = "degenerate_fdb"

[system]
energies = [0.0, 1.0]
degeneracies = [2, 1]

[initial_state]
preset = "diagonal"
populations = [1.0, 0.5]

[stepper]
method = "unitary_midpoint"
dt = 0.01
t_start = 0.0
t_end = 1.0
"#;
        let scenario = parse_scenario(text).unwrap();
        let State::Density(rho) = &scenario.initial else { panic!() };
        assert_eq!(rho.rows(), 3);
        assert!((rho[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((rho[(1, 1)].re - 1.0).abs() < 1e-15);
        assert!((rho[(2, 2)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn round_trip_serialization_is_idempotent() {
        let config = ScenarioConfig::from_toml(MINIMAL).unwrap();
        let once = config.to_toml();
        let twice = ScenarioConfig::from_toml(&once).unwrap().to_toml();
        assert_eq!(once, twice);
    }

    #[test]
    fn ground_preset_fills_the_valence_band_for_two_species() {
        let text = r#"
model = "two_species"

[system]
conduction_energies = [1.0, 2.0]
valence_energies = [0.0]

[initial_state]
preset = "ground"

[stepper]
method = "unitary_midpoint"
dt = 0.01
t_start = 0.0
t_end = 1.0
"#;
        let scenario = parse_scenario(text).unwrap();
        let State::Density(rho) = &scenario.initial else { panic!() };
        assert_eq!(rho[(0, 0)].re, 0.0);
        assert_eq!(rho[(1, 1)].re, 0.0);
        assert_eq!(rho[(2, 2)].re, 1.0);
    }
}
