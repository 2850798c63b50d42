//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured figure (run with `cargo test --test acceptance -- --nocapture`
//! to see them). The thresholds are pinned in the assertions.

mod common;

use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qbloch::fields::{Envelope, FieldProfile, Pulse};
use qbloch::integrators::{hermitian_eig, simulate, Method, Model, State, StepperSpec};
use qbloch::linalg::CMatrix;
use qbloch::models::{
    condense, expand_degenerate, to_electron_hole, DipoleMatrix, ElectronHoleState,
    OneSpeciesSystem, TwoSpeciesSystem,
};
use qbloch::verification::{
    check_boson_equivalence, check_eh_consistency, check_one_species_generator,
    check_two_species_generator, random_one_species, random_two_species, trial_seed,
};

use common::{find_peaks, mean_period, qbloch_bin, workspace_config, Csv};

fn pass(criterion: u32, name: &str, detail: String) {
    println!("criterion {criterion:02} ({name}): PASS - {detail}");
}

fn cv(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn x_pol(value: f64) -> [C64; 3] {
    [cv(value, 0.0), cv(0.0, 0.0), cv(0.0, 0.0)]
}

const ORACLE_TRIALS: usize = 100;
const ORACLE_SEED: u64 = 0xA11CE;

#[test]
fn criterion_01_one_species_derivation_oracle() {
    let started = Instant::now();
    let mut max_dev = 0.0f64;
    for trial in 0..ORACLE_TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(ORACLE_SEED, trial));
        let levels = rng.gen_range(1..=3);
        let (system, field) = random_one_species(levels, &mut rng);
        let report = check_one_species_generator(&system, field).unwrap();
        max_dev = max_dev.max(report.max_rel_deviation);
    }
    let elapsed = started.elapsed();
    assert!(max_dev < 1e-10, "max relative deviation {max_dev:.3e} >= 1e-10");
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10 s");
    pass(
        1,
        "one-species derivation oracle",
        format!("{ORACLE_TRIALS} systems, max rel dev {max_dev:.3e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_boson_equivalence() {
    let mut max_dev = 0.0f64;
    for trial in 0..ORACLE_TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(ORACLE_SEED, trial));
        let levels = rng.gen_range(1..=3);
        let (system, field) = random_one_species(levels, &mut rng);
        let report = check_boson_equivalence(&system, field).unwrap();
        max_dev = max_dev.max(report.max_rel_deviation);
    }
    assert!(max_dev < 1e-12, "max relative deviation {max_dev:.3e} >= 1e-12");
    pass(
        2,
        "boson/fermion generator equivalence",
        format!("{ORACLE_TRIALS} systems, max rel dev {max_dev:.3e}"),
    );
}

#[test]
fn criterion_03_two_species_derivation_oracle() {
    let mut max_dev = 0.0f64;
    for trial in 0..ORACLE_TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(ORACLE_SEED ^ 0x7705, trial));
        let conduction = rng.gen_range(1..=2);
        let valence = rng.gen_range(1..=2);
        let (system, field) = random_two_species(conduction, valence, &mut rng);
        let report = check_two_species_generator(&system, field).unwrap();
        max_dev = max_dev.max(report.max_rel_deviation);
        let eh = check_eh_consistency(&system, field, &mut rng);
        max_dev = max_dev.max(eh.max_rel_deviation);
    }
    assert!(max_dev < 1e-10, "max relative deviation {max_dev:.3e} >= 1e-10");
    pass(
        3,
        "two-species derivation oracle",
        format!("{ORACLE_TRIALS} systems, max rel dev {max_dev:.3e}"),
    );
}

fn four_level_system() -> OneSpeciesSystem {
    let mut dipole = DipoleMatrix::zeros(4, 4);
    dipole.set_hermitian_pair(0, 1, [cv(0.6, 0.0), cv(0.0, 0.1), cv(0.0, 0.0)]);
    dipole.set_hermitian_pair(1, 2, [cv(0.5, -0.2), cv(0.0, 0.0), cv(0.1, 0.0)]);
    dipole.set_hermitian_pair(2, 3, [cv(0.4, 0.0), cv(0.2, 0.0), cv(0.0, 0.0)]);
    dipole.set_hermitian_pair(0, 2, [cv(0.3, 0.1), cv(0.0, 0.0), cv(0.0, 0.0)]);
    OneSpeciesSystem::new(vec![0.0, 0.7, 1.3, 2.1], dipole, None, 1.0).unwrap()
}

fn gaussian_drive(amplitude: f64, carrier: f64, center: f64, width: f64) -> FieldProfile {
    FieldProfile::new(vec![Pulse::new(
        x_pol(amplitude),
        carrier,
        0.0,
        Envelope::Gaussian { center, width },
    )
    .unwrap()])
}

#[test]
fn criterion_04_conservation_suite() {
    let system = four_level_system();
    let field = gaussian_drive(0.35, 0.7, 30.0, 8.0);
    let rho0 = CMatrix::diagonal(&[cv(1.0, 0.0), cv(0.7, 0.0), cv(0.3, 0.0), cv(0.0, 0.0)]);
    let spec = StepperSpec {
        method: Method::UnitaryMidpoint,
        dt: 1e-2,
        t_start: 0.0,
        t_end: 100.0,
        record_every: 100,
    };
    let trajectory =
        simulate(&Model::OneSpecies(system), State::Density(rho0.clone()), &field, &spec).unwrap();
    assert_eq!(
        (trajectory.times.last().unwrap() - 100.0).abs() < 1e-9,
        true,
        "10^4 steps of dt = 1e-2"
    );
    let initial_trace = rho0.trace();
    let dim = 4.0;
    let mut worst_drift = 0.0f64;
    let mut worst_defect = 0.0f64;
    let mut worst_eig = f64::INFINITY;
    let mut pop_range = (f64::INFINITY, f64::NEG_INFINITY);
    for record in &trajectory.diagnostics {
        worst_drift = worst_drift.max((record.trace - initial_trace).norm());
        worst_defect = worst_defect.max(record.hermiticity_defect);
        worst_eig = worst_eig.min(record.min_eigenvalue);
        pop_range.0 = pop_range.0.min(record.population_min);
        pop_range.1 = pop_range.1.max(record.population_max);
    }
    assert!(worst_drift < 1e-12 * dim, "trace drift {worst_drift:.3e}");
    assert!(worst_defect < 1e-12, "hermiticity defect {worst_defect:.3e}");
    assert!(worst_eig > -1e-11, "min eigenvalue {worst_eig:.3e}");
    assert!(pop_range.0 >= -1e-10 && pop_range.1 <= 1.0 + 1e-10, "populations {pop_range:?}");
    pass(
        4,
        "conservation suite",
        format!(
            "trace drift {worst_drift:.2e}, hermiticity {worst_defect:.2e}, min eig \
             {worst_eig:.2e}, populations [{:.2e}, 1 + {:.2e}]",
            pop_range.0,
            (pop_range.1 - 1.0).max(0.0)
        ),
    );
}

#[test]
fn criterion_05_complement_theorem() {
    let system = four_level_system();
    let field = gaussian_drive(0.4, 0.7, 15.0, 4.0);
    // A mixed state with spectrum inside [0, 1] so both rho and Id - rho are
    // physical; conjugating a diagonal by random eigenvectors adds coherences.
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0E0);
    let random_hermitian = CMatrix::from_fn(4, 4, |_, _| {
        cv(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
    .hermitized();
    let (_, basis) = hermitian_eig(&random_hermitian).unwrap();
    let spectrum =
        CMatrix::diagonal(&[cv(0.9, 0.0), cv(0.6, 0.0), cv(0.4, 0.0), cv(0.1, 0.0)]);
    let rho0 = basis.dot(&spectrum).dot(&basis.adjoint()).hermitized();
    let complement0 = CMatrix::identity(4).sub(&rho0);

    let spec = StepperSpec {
        method: Method::UnitaryMidpoint,
        dt: 1e-2,
        t_start: 0.0,
        t_end: 50.0,
        record_every: 50,
    };
    let model = Model::OneSpecies(system);
    let direct = simulate(&model, State::Density(rho0), &field, &spec).unwrap();
    let mirrored = simulate(&model, State::Density(complement0), &field, &spec).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in direct.states.iter().zip(&mirrored.states) {
        let (State::Density(rho), State::Density(complement)) = (a, b) else { unreachable!() };
        worst = worst.max(rho.add(complement).max_abs_diff(&CMatrix::identity(4)));
    }
    assert!(worst < 1e-10, "complement defect {worst:.3e}");
    pass(
        5,
        "complement theorem",
        format!("max |rho + rho_tilde - Id| = {worst:.3e} over {} records", direct.len()),
    );
}

fn cascade_system() -> OneSpeciesSystem {
    let mut dipole = DipoleMatrix::zeros(3, 3);
    dipole.set_hermitian_pair(0, 1, [cv(0.6, 0.0), cv(0.0, 0.1), cv(0.0, 0.0)]);
    dipole.set_hermitian_pair(1, 2, [cv(0.5, -0.2), cv(0.0, 0.0), cv(0.1, 0.0)]);
    dipole.set_hermitian_pair(0, 2, [cv(0.3, 0.0), cv(0.2, 0.0), cv(0.0, 0.0)]);
    OneSpeciesSystem::new(vec![0.0, 0.8, 1.7], dipole, Some(vec![1, 2, 3]), 1.0).unwrap()
}

#[test]
fn criterion_06_fdb_cdb_equivalence() {
    let system = cascade_system();
    let field = gaussian_drive(0.4, 0.8, 5.0, 1.5);
    // Per-level populations replicated over sub-levels; intra-level
    // coherences start at zero.
    let level_pops = [1.0, 0.6, 0.2];
    let mut expanded_pops = Vec::new();
    for (level, &d) in system.degeneracies().iter().enumerate() {
        expanded_pops.extend(std::iter::repeat(cv(level_pops[level], 0.0)).take(d));
    }
    let rho0 = CMatrix::diagonal(&expanded_pops);
    let sigma0 = condense(&rho0, system.degeneracies()).unwrap();

    let spec = StepperSpec {
        method: Method::UnitaryMidpoint,
        dt: 1e-3,
        t_start: 0.0,
        t_end: 10.0,
        record_every: 100,
    };
    let fdb =
        simulate(&Model::DegenerateFdb(system.clone()), State::Density(rho0), &field, &spec)
            .unwrap();
    let cdb =
        simulate(&Model::DegenerateCdb(system.clone()), State::Density(sigma0), &field, &spec)
            .unwrap();

    let mut worst = 0.0f64;
    for (a, b) in fdb.states.iter().zip(&cdb.states) {
        let (State::Density(rho), State::Density(sigma)) = (a, b) else { unreachable!() };
        let condensed = condense(rho, system.degeneracies()).unwrap();
        worst = worst.max(condensed.max_abs_diff(sigma));
    }
    assert!(worst < 1e-8, "condensed trajectories deviate by {worst:.3e}");

    let mut worst_bound = 0.0f64;
    for record in fdb.diagnostics.iter().chain(&cdb.diagnostics) {
        worst_bound = worst_bound.max(record.degeneracy_bound_defect.unwrap());
    }
    assert!(worst_bound < 1e-9, "degeneracy bound defect {worst_bound:.3e}");
    pass(
        6,
        "FDB/CDB equivalence",
        format!(
            "max |condense(FDB) - CDB| = {worst:.3e}, degeneracy bound defect {worst_bound:.3e}"
        ),
    );
}

fn eh_test_system() -> TwoSpeciesSystem {
    let mut m_cc = DipoleMatrix::zeros(2, 2);
    m_cc.set_hermitian_pair(0, 1, x_pol(0.2));
    let mut m_vv = DipoleMatrix::zeros(2, 2);
    m_vv.set_hermitian_pair(0, 1, x_pol(0.15));
    let mut m_cv = DipoleMatrix::zeros(2, 2);
    m_cv.set(0, 0, x_pol(0.3));
    m_cv.set(1, 1, x_pol(0.25));
    m_cv.set(0, 1, [cv(0.1, 0.05), cv(0.0, 0.0), cv(0.0, 0.0)]);
    TwoSpeciesSystem::new(vec![1.0, 1.3], vec![0.0, -0.2], m_cc, m_vv, m_cv, 1.0).unwrap()
}

#[test]
fn criterion_07_electron_hole_consistency() {
    let system = eh_test_system();
    let field = FieldProfile::new(vec![Pulse::new(
        x_pol(0.3),
        1.0,
        0.0,
        Envelope::Constant,
    )
    .unwrap()]);
    // Ground state: valence band full.
    let mut rho0 = CMatrix::zeros(4, 4);
    rho0[(2, 2)] = cv(1.0, 0.0);
    rho0[(3, 3)] = cv(1.0, 0.0);

    let spec = StepperSpec {
        method: Method::UnitaryMidpoint,
        dt: 1e-3,
        t_start: 0.0,
        t_end: 5.0,
        record_every: 50,
    };
    let liouville =
        simulate(&Model::TwoSpecies(system.clone()), State::Density(rho0.clone()), &field, &spec)
            .unwrap();

    let eh0 = to_electron_hole(&rho0, 2, 2).unwrap();
    let eh_spec = StepperSpec { method: Method::Rk4, ..spec };
    let transformed = simulate(
        &Model::ElectronHole(system.clone()),
        State::ElectronHole(eh0),
        &field,
        &eh_spec,
    )
    .unwrap();

    let mut worst = 0.0f64;
    for (a, b) in liouville.states.iter().zip(&transformed.states) {
        let State::Density(rho) = a else { unreachable!() };
        let State::ElectronHole(eh) = b else { unreachable!() };
        let mapped = to_electron_hole(rho, 2, 2).unwrap();
        worst = worst.max(mapped.rho_c.max_abs_diff(&eh.rho_c));
        worst = worst.max(mapped.rho_h.max_abs_diff(&eh.rho_h));
        worst = worst.max(mapped.rho_ch.max_abs_diff(&eh.rho_ch));
    }
    assert!(worst < 5e-6, "electron-hole trajectories deviate by {worst:.3e}");
    pass(
        7,
        "electron-hole consistency",
        format!("max componentwise deviation {worst:.3e} over {} records", liouville.len()),
    );
}

#[test]
fn criterion_08_rabi_period() {
    // Resonant drive: g = E . M_cv = 0.5 * 0.5, period pi hbar / |g| = 4 pi.
    let coupling = 0.25f64;
    let expected_period = std::f64::consts::PI / coupling;
    let mut m_cv = DipoleMatrix::zeros(1, 1);
    m_cv.set(0, 0, x_pol(0.5));
    let system = TwoSpeciesSystem::new(
        vec![1.0],
        vec![0.0],
        DipoleMatrix::zeros(1, 1),
        DipoleMatrix::zeros(1, 1),
        m_cv,
        1.0,
    )
    .unwrap();
    let field =
        FieldProfile::new(vec![Pulse::new(x_pol(0.5), 1.0, 0.0, Envelope::Constant).unwrap()]);
    let mut rho0 = CMatrix::zeros(2, 2);
    rho0[(1, 1)] = cv(1.0, 0.0);

    let dt = 5e-3;
    let spec = StepperSpec {
        method: Method::UnitaryMidpoint,
        dt,
        t_start: 0.0,
        t_end: 32.0,
        record_every: 1,
    };
    let model = Model::TwoSpecies(system);
    let run = simulate(&model, State::Density(rho0.clone()), &field, &spec).unwrap();
    let conduction: Vec<f64> = run
        .states
        .iter()
        .map(|s| {
            let State::Density(rho) = s else { unreachable!() };
            rho[(0, 0)].re
        })
        .collect();
    let max_pop = conduction.iter().copied().fold(0.0, f64::max);
    let min_pop = conduction.iter().copied().fold(1.0, f64::min);
    assert!(max_pop > 0.999, "transfer incomplete: max population {max_pop}");
    assert!(min_pop < 1e-3, "population never returns: min {min_pop}");

    let peaks = find_peaks(&run.times, &conduction);
    let period = mean_period(&peaks).expect("at least two population maxima");
    let rel_err = (period - expected_period).abs() / expected_period;
    assert!(rel_err < 1e-3, "period {period} vs {expected_period} ({rel_err:.2e})");

    // Independent oracle: fine-step Runge-Kutta at dt / 100 on the same
    // Liouville right-hand side.
    let oracle_spec = StepperSpec {
        method: Method::Rk4,
        dt: dt / 100.0,
        t_start: 0.0,
        t_end: 32.0,
        record_every: 100,
    };
    let oracle = simulate(&model, State::Density(rho0), &field, &oracle_spec).unwrap();
    let oracle_pop: Vec<f64> = oracle
        .states
        .iter()
        .map(|s| {
            let State::Density(rho) = s else { unreachable!() };
            rho[(0, 0)].re
        })
        .collect();
    let oracle_period =
        mean_period(&find_peaks(&oracle.times, &oracle_pop)).expect("oracle peaks");
    let oracle_err = (oracle_period - expected_period).abs() / expected_period;
    assert!(oracle_err < 1e-3, "oracle period {oracle_period} ({oracle_err:.2e})");
    pass(
        8,
        "Rabi period",
        format!(
            "period {period:.6} (analytic {expected_period:.6}, rel err {rel_err:.2e}; \
             fine-dt oracle {oracle_period:.6})"
        ),
    );
}

#[test]
fn criterion_09_order_of_convergence() {
    let mut dipole = DipoleMatrix::zeros(3, 3);
    dipole.set_hermitian_pair(0, 1, x_pol(0.6));
    dipole.set_hermitian_pair(1, 2, [cv(0.5, -0.2), cv(0.0, 0.0), cv(0.0, 0.0)]);
    let system = OneSpeciesSystem::new(vec![0.0, 0.9, 1.6], dipole, None, 1.0).unwrap();
    let field = gaussian_drive(0.5, 0.9, 1.0, 0.4);
    let rho0 = CMatrix::diagonal(&[cv(1.0, 0.0), cv(0.0, 0.0), cv(0.0, 0.0)]);
    let model = Model::OneSpecies(system);

    let final_state = |method: Method, dt: f64| {
        let spec =
            StepperSpec { method, dt, t_start: 0.0, t_end: 2.0, record_every: usize::MAX };
        let run = simulate(&model, State::Density(rho0.clone()), &field, &spec).unwrap();
        let State::Density(rho) = run.states.last().unwrap().clone() else { unreachable!() };
        rho
    };
    let reference = final_state(Method::Rk4, 2.0 / 8192.0);
    let error = |method: Method, dt: f64| final_state(method, dt).max_abs_diff(&reference);

    let midpoint_ratio = error(Method::UnitaryMidpoint, 0.08) / error(Method::UnitaryMidpoint, 0.04);
    assert!(
        (3.5..=4.5).contains(&midpoint_ratio),
        "unitary midpoint ratio {midpoint_ratio}"
    );
    let rk4_ratio = error(Method::Rk4, 0.1) / error(Method::Rk4, 0.05);
    assert!((14.0..=18.0).contains(&rk4_ratio), "rk4 ratio {rk4_ratio}");
    pass(
        9,
        "order of convergence",
        format!("unitary midpoint ratio {midpoint_ratio:.2}, rk4 ratio {rk4_ratio:.2}"),
    );
}

#[test]
fn criterion_10_gh_divergence_report() {
    let config = workspace_config("gh_compare.toml");
    let out_dir = tempfile::tempdir().unwrap();
    let run = || {
        let output = std::process::Command::new(qbloch_bin())
            .arg("compare")
            .arg(&config)
            .env("QBLOCH_OUTPUT_DIR", out_dir.path())
            .output()
            .expect("compare runs");
        assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
        let stdout = String::from_utf8(output.stdout).unwrap();
        let coherence: f64 = stdout
            .lines()
            .find_map(|line| line.strip_prefix("max intra-band coherence: "))
            .expect("coherence line in report")
            .trim()
            .parse()
            .expect("numeric coherence");
        let csv = std::fs::read(out_dir.path().join("gh_compare.csv")).unwrap();
        (coherence, csv)
    };
    let (coherence_a, csv_a) = run();
    let (coherence_b, csv_b) = run();
    assert!(coherence_a > 1e-3, "intra-band coherence growth {coherence_a:.3e} <= 1e-3");
    assert_eq!(coherence_a, coherence_b, "report is deterministic");
    assert_eq!(csv_a, csv_b, "CSV output is byte-identical across runs");
    pass(
        10,
        "reduced-model divergence report",
        format!("intra-band coherence grows to {coherence_a:.3e} from zero initial data"),
    );
}
