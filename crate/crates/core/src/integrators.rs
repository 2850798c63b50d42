//! Time steppers and the trajectory driver.
//!
//! Liouville-form models evolve by unitary conjugation with the midpoint
//! exponential `U = exp(-i dt V(t + dt/2) / hbar)`, which preserves trace,
//! Hermiticity and the spectrum structurally at any step size. The closed
//! form `exp(-(i/hbar) int V)` it discretizes is exact only when the
//! potentials at different times commute (constant drive); for time-dependent
//! fields the midpoint step is its leading Magnus approximation and converges
//! at second order. The electron-hole and reduced models, which have no
//! Liouville structure, use classical fourth-order Runge-Kutta.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::diagnostics::{audit, DiagnosticsError, DiagnosticsRecord};
use crate::fields::FieldProfile;
use crate::linalg::{CMatrix, LinalgError};
pub use crate::linalg::hermitian_eig;
use crate::models::{
    condensed_system, eh_rhs, expand_degenerate, from_electron_hole, gh_rhs, gh_to_composite,
    liouville_rhs, potential_one_species, potential_two_species, CVec3, ElectronHoleState,
    GhState, ModelError, OneSpeciesSystem, TwoSpeciesSystem,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("stepper requires t_end > t_start, got [{t_start}, {t_end}]")]
    BadTimeWindow { t_start: f64, t_end: f64 },
    #[error("dt must be positive and no larger than the time window, got {dt}")]
    BadStepSize { dt: f64 },
    #[error("record_every must be at least 1")]
    BadRecordStride,
    #[error("the {model} model has no Liouville form; use the rk4 method")]
    MethodRequiresLiouvilleForm { model: &'static str },
    #[error("state dimension {got} does not match the model dimension {expected}")]
    StateDimensionMismatch { expected: usize, got: usize },
    #[error("state kind does not match the model")]
    StateKindMismatch,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    UnitaryMidpoint,
    Rk4,
}

/// Fixed-step integration window with a recording stride.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperSpec {
    pub method: Method,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl StepperSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.t_end > self.t_start) {
            return Err(SimError::BadTimeWindow { t_start: self.t_start, t_end: self.t_end });
        }
        let span = self.t_end - self.t_start;
        if !(self.dt > 0.0 && self.dt.is_finite() && self.dt <= span * (1.0 + 1e-12)) {
            return Err(SimError::BadStepSize { dt: self.dt });
        }
        if self.record_every == 0 {
            return Err(SimError::BadRecordStride);
        }
        Ok(())
    }

    fn step_count(&self) -> usize {
        let span = self.t_end - self.t_start;
        let ratio = span / self.dt;
        // Land exactly on t_end: an integer number of dt steps when the
        // window divides evenly, otherwise one truncated final step.
        if (ratio - ratio.round()).abs() < 1e-9 {
            (ratio.round() as usize).max(1)
        } else {
            ratio.ceil() as usize
        }
    }
}

/// The models the driver can march.
#[derive(Clone, Debug)]
pub enum Model {
    OneSpecies(OneSpeciesSystem),
    /// Degenerate dynamics on the full sub-level index set; the stored system
    /// carries the degeneracies and is expanded internally.
    DegenerateFdb(OneSpeciesSystem),
    /// Closed dynamics of the condensed variables `sigma`; the stored system
    /// carries the degeneracies used to rescale the dipole.
    DegenerateCdb(OneSpeciesSystem),
    TwoSpecies(TwoSpeciesSystem),
    ElectronHole(TwoSpeciesSystem),
    GehrigHess(TwoSpeciesSystem),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::OneSpecies(_) => "one_species",
            Model::DegenerateFdb(_) => "degenerate_fdb",
            Model::DegenerateCdb(_) => "degenerate_cdb",
            Model::TwoSpecies(_) => "two_species",
            Model::ElectronHole(_) => "electron_hole",
            Model::GehrigHess(_) => "gehrig_hess",
        }
    }

    /// Side length of the state the model evolves.
    pub fn state_dim(&self) -> usize {
        match self {
            Model::OneSpecies(sys) => sys.levels(),
            Model::DegenerateFdb(sys) => sys.expanded_levels(),
            Model::DegenerateCdb(sys) => sys.levels(),
            Model::TwoSpecies(sys) | Model::ElectronHole(sys) | Model::GehrigHess(sys) => {
                sys.total_levels()
            }
        }
    }

    pub fn hbar(&self) -> f64 {
        match self {
            Model::OneSpecies(sys) | Model::DegenerateFdb(sys) | Model::DegenerateCdb(sys) => {
                sys.hbar()
            }
            Model::TwoSpecies(sys) | Model::ElectronHole(sys) | Model::GehrigHess(sys) => {
                sys.hbar()
            }
        }
    }

    pub fn has_liouville_form(&self) -> bool {
        !matches!(self, Model::ElectronHole(_) | Model::GehrigHess(_))
    }

    fn degeneracies(&self) -> Option<&[usize]> {
        match self {
            Model::DegenerateFdb(sys) | Model::DegenerateCdb(sys) => Some(sys.degeneracies()),
            _ => None,
        }
    }
}

/// A recorded state: the density matrix itself for Liouville-form models, or
/// the transformed variables for the electron-hole and reduced models.
#[derive(Clone, Debug)]
pub enum State {
    Density(CMatrix),
    ElectronHole(ElectronHoleState),
    GehrigHess(GhState),
}

impl State {
    /// Composite density-matrix view of the state, used for audits.
    pub fn composite(&self) -> CMatrix {
        match self {
            State::Density(rho) => rho.clone(),
            State::ElectronHole(state) => from_electron_hole(state),
            State::GehrigHess(state) => gh_to_composite(state),
        }
    }
}

/// Time-stamped states plus one diagnostics record per recorded state.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub diagnostics: Vec<DiagnosticsRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// One unitary-conjugation step with the midpoint potential:
/// `rho <- U rho U^+` with `U = exp(-i dt V / hbar)`.
///
/// Trace, Hermiticity and the eigenvalue spectrum survive to roundoff, so
/// positivity is preserved in structure regardless of dt. The conjugation is
/// applied in factored form `W (D (W^+ rho W) D^+) W^+`: the eigenbasis `W`
/// gets one Newton-Schulz sweep (leaving an O(eps^2) orthogonality defect
/// instead of O(eps), which would otherwise bias the trace coherently over
/// long runs), and the diagonal of the phase conjugation cancels exactly.
pub fn step_unitary(
    rho: &CMatrix,
    v_mid: &CMatrix,
    dt: f64,
    hbar: f64,
) -> Result<CMatrix, SimError> {
    let (eigenvalues, vectors) = hermitian_eig(v_mid)?;
    let n = vectors.rows();

    // w <- w (3 I - w^+ w) / 2
    let mut correction = vectors.adjoint().dot(&vectors).scale(C64::new(-0.5, 0.0));
    for k in 0..n {
        correction[(k, k)] += 1.5;
    }
    let basis = vectors.dot(&correction);

    let mut rotated = basis.adjoint().dot(rho).dot(&basis);
    let phases: Vec<C64> = eigenvalues
        .iter()
        .map(|&lambda| C64::new(0.0, -lambda * dt / hbar).exp())
        .collect();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rotated[(i, j)] *= phases[i] * phases[j].conj();
            }
        }
    }
    Ok(basis.dot(&rotated).dot(&basis.adjoint()))
}

/// States a Runge-Kutta stage can scale and accumulate.
pub trait VectorState: Clone {
    /// `self += coeff * other`.
    fn scaled_add_assign(&mut self, coeff: f64, other: &Self);
}

impl VectorState for f64 {
    fn scaled_add_assign(&mut self, coeff: f64, other: &Self) {
        *self += coeff * other;
    }
}

impl VectorState for CMatrix {
    fn scaled_add_assign(&mut self, coeff: f64, other: &Self) {
        CMatrix::scaled_add_assign(self, coeff, other);
    }
}

impl VectorState for ElectronHoleState {
    fn scaled_add_assign(&mut self, coeff: f64, other: &Self) {
        self.rho_c.scaled_add_assign(coeff, &other.rho_c);
        self.rho_h.scaled_add_assign(coeff, &other.rho_h);
        self.rho_ch.scaled_add_assign(coeff, &other.rho_ch);
    }
}

impl VectorState for GhState {
    fn scaled_add_assign(&mut self, coeff: f64, other: &Self) {
        for (a, b) in self.n_e.iter_mut().zip(&other.n_e) {
            *a += coeff * b;
        }
        for (a, b) in self.n_h.iter_mut().zip(&other.n_h) {
            *a += coeff * b;
        }
        self.p.scaled_add_assign(coeff, &other.p);
    }
}

/// Classical fourth-order Runge-Kutta update over one step.
pub fn step_rk4<S: VectorState>(
    mut rhs: impl FnMut(f64, &S) -> S,
    state: &S,
    t: f64,
    dt: f64,
) -> S {
    let k1 = rhs(t, state);
    let mut y2 = state.clone();
    y2.scaled_add_assign(0.5 * dt, &k1);
    let k2 = rhs(t + 0.5 * dt, &y2);
    let mut y3 = state.clone();
    y3.scaled_add_assign(0.5 * dt, &k2);
    let k3 = rhs(t + 0.5 * dt, &y3);
    let mut y4 = state.clone();
    y4.scaled_add_assign(dt, &k3);
    let k4 = rhs(t + dt, &y4);

    let mut out = state.clone();
    out.scaled_add_assign(dt / 6.0, &k1);
    out.scaled_add_assign(dt / 3.0, &k2);
    out.scaled_add_assign(dt / 3.0, &k3);
    out.scaled_add_assign(dt / 6.0, &k4);
    out
}

struct Recorder<'a> {
    spec: &'a StepperSpec,
    degeneracies: Option<&'a [usize]>,
    trajectory: Trajectory,
}

impl<'a> Recorder<'a> {
    fn new(spec: &'a StepperSpec, degeneracies: Option<&'a [usize]>) -> Self {
        Self {
            spec,
            degeneracies,
            trajectory: Trajectory { times: Vec::new(), states: Vec::new(), diagnostics: Vec::new() },
        }
    }

    fn should_record(&self, step: usize, total: usize) -> bool {
        step == 0 || step == total || step % self.spec.record_every == 0
    }

    fn push(&mut self, t: f64, state: State) -> Result<(), SimError> {
        let record = audit(&state.composite(), self.degeneracies)?;
        self.trajectory.times.push(t);
        self.trajectory.states.push(state);
        self.trajectory.diagnostics.push(record);
        Ok(())
    }
}

/// Marches a model from `t_start` to `t_end` with a fixed step, recording
/// states and diagnostics every `record_every` steps and always at the final
/// time. The field is evaluated at step midpoints for the unitary method and
/// at the canonical stage nodes for Runge-Kutta.
pub fn simulate(
    model: &Model,
    initial: State,
    field: &FieldProfile,
    spec: &StepperSpec,
) -> Result<Trajectory, SimError> {
    spec.validate()?;
    if spec.method == Method::UnitaryMidpoint && !model.has_liouville_form() {
        return Err(SimError::MethodRequiresLiouvilleForm { model: model.name() });
    }

    match model {
        Model::OneSpecies(sys) => {
            let sys = sys.clone();
            run_density(model, initial, field, spec, move |e| potential_one_species(&sys, e))
        }
        Model::DegenerateFdb(sys) => {
            let expanded = expand_degenerate(sys);
            run_density(model, initial, field, spec, move |e| {
                potential_one_species(&expanded, e)
            })
        }
        Model::DegenerateCdb(sys) => {
            let condensed = condensed_system(sys);
            run_density(model, initial, field, spec, move |e| {
                potential_one_species(&condensed, e)
            })
        }
        Model::TwoSpecies(sys) => {
            let sys = sys.clone();
            run_density(model, initial, field, spec, move |e| potential_two_species(&sys, e))
        }
        Model::ElectronHole(sys) => {
            let State::ElectronHole(state) = initial else {
                return Err(SimError::StateKindMismatch);
            };
            if state.conduction_levels() != sys.conduction_levels()
                || state.hole_levels() != sys.valence_levels()
            {
                return Err(SimError::StateDimensionMismatch {
                    expected: sys.total_levels(),
                    got: state.conduction_levels() + state.hole_levels(),
                });
            }
            // Dimensions are checked above; the rhs cannot fail mid-run.
            let sys = sys.clone();
            run_rk4(model, state, field, spec, State::ElectronHole, move |t, s, f| {
                eh_rhs(s, &sys, f.evaluate(t)).expect("dimensions validated before the run")
            })
        }
        Model::GehrigHess(sys) => {
            let State::GehrigHess(state) = initial else {
                return Err(SimError::StateKindMismatch);
            };
            if state.n_e.len() != sys.conduction_levels()
                || state.n_h.len() != sys.valence_levels()
            {
                return Err(SimError::StateDimensionMismatch {
                    expected: sys.total_levels(),
                    got: state.n_e.len() + state.n_h.len(),
                });
            }
            let sys = sys.clone();
            run_rk4(model, state, field, spec, State::GehrigHess, move |t, s, f| {
                gh_rhs(s, &sys, f.evaluate(t)).expect("dimensions validated before the run")
            })
        }
    }
}

fn run_density(
    model: &Model,
    initial: State,
    field: &FieldProfile,
    spec: &StepperSpec,
    potential: impl Fn(CVec3) -> CMatrix,
) -> Result<Trajectory, SimError> {
    let State::Density(mut rho) = initial else {
        return Err(SimError::StateKindMismatch);
    };
    let dim = model.state_dim();
    if rho.rows() != dim || rho.cols() != dim {
        return Err(SimError::StateDimensionMismatch { expected: dim, got: rho.rows() });
    }
    let hbar = model.hbar();
    let total = spec.step_count();
    let mut recorder = Recorder::new(spec, model.degeneracies());
    recorder.push(spec.t_start, State::Density(rho.clone()))?;

    for step in 1..=total {
        let t_prev = spec.t_start + (step - 1) as f64 * spec.dt;
        let t_next = if step == total { spec.t_end } else { spec.t_start + step as f64 * spec.dt };
        let h = t_next - t_prev;
        match spec.method {
            Method::UnitaryMidpoint => {
                let v_mid = potential(field.evaluate(t_prev + 0.5 * h));
                rho = step_unitary(&rho, &v_mid, h, hbar)?;
            }
            Method::Rk4 => {
                rho = step_rk4(
                    |t, state: &CMatrix| {
                        liouville_rhs(&potential(field.evaluate(t)), state, hbar)
                            .expect("dimensions validated before the run")
                    },
                    &rho,
                    t_prev,
                    h,
                );
            }
        }
        if recorder.should_record(step, total) {
            recorder.push(t_next, State::Density(rho.clone()))?;
        }
    }
    Ok(recorder.trajectory)
}

fn run_rk4<S: VectorState>(
    model: &Model,
    mut state: S,
    field: &FieldProfile,
    spec: &StepperSpec,
    wrap: impl Fn(S) -> State,
    rhs: impl Fn(f64, &S, &FieldProfile) -> S,
) -> Result<Trajectory, SimError> {
    let total = spec.step_count();
    let mut recorder = Recorder::new(spec, model.degeneracies());
    recorder.push(spec.t_start, wrap(state.clone()))?;
    for step in 1..=total {
        let t_prev = spec.t_start + (step - 1) as f64 * spec.dt;
        let t_next = if step == total { spec.t_end } else { spec.t_start + step as f64 * spec.dt };
        let h = t_next - t_prev;
        state = step_rk4(|t, s: &S| rhs(t, s, field), &state, t_prev, h);
        if recorder.should_record(step, total) {
            recorder.push(t_next, wrap(state.clone()))?;
        }
    }
    Ok(recorder.trajectory)
}
