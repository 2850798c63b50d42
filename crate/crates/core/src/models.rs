//! Model data and hand-coded right-hand sides: one-species and two-species
//! potentials in Liouville form, degeneracy expansion and condensation, the
//! electron-hole change of variables, and the reduced population/polarization
//! system obtained by dropping intra-band coherences.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{hermitian_eig, CMatrix, LinalgError};

/// Complex 3-vector; used for field values and dipole-moment entries.
pub type CVec3 = [C64; 3];

pub const ZERO_VEC3: CVec3 = [C64::new(0.0, 0.0); 3];

/// Entrywise tolerance for dipole Hermiticity and zero-diagonal validation.
pub const DIPOLE_TOL: f64 = 1e-12;

/// Storage tolerance for density-matrix Hermiticity.
pub const DENSITY_HERMITICITY_TOL: f64 = 1e-13;

/// Slack allowed when checking positivity and population bounds of initial
/// data.
pub const PHYSICALITY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dipole matrix must be {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    DipoleShape { rows: usize, cols: usize, expected_rows: usize, expected_cols: usize },
    #[error("dipole is not Hermitian at entry ({i}, {j}): M_ij* must equal M_ji")]
    DipoleNotHermitian { i: usize, j: usize },
    #[error("dipole diagonal entry ({k}, {k}) is nonzero: M_kk = 0 is required")]
    DipoleDiagonalNonzero { k: usize },
    #[error("degeneracies must match the level count ({levels}) and be >= 1")]
    BadDegeneracies { levels: usize },
    #[error("hbar must be a positive finite number, got {value}")]
    BadHbar { value: f64 },
    #[error("energies must be non-empty and finite")]
    BadEnergies,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("density matrix is not Hermitian: defect {defect:.3e} exceeds {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("state is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("population {value:.6} at level {level} lies outside [0, 1]")]
    PopulationOutOfRange { level: usize, value: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Full complex dot product of a field value with a dipole entry,
/// `sum_a E_a M_a` (no conjugation).
pub fn dot_field(field: &CVec3, dipole: &CVec3) -> C64 {
    field[0] * dipole[0] + field[1] * dipole[1] + field[2] * dipole[2]
}

/// `Re(E) . M`: the componentwise real part of the field dotted with the
/// dipole entry. This is the combination `(E.M_ik + E*.M*_ki)/2` takes after
/// Hermitian recombination, and it keeps the assembled potential Hermitian.
pub fn re_dot_field(field: &CVec3, dipole: &CVec3) -> C64 {
    field[0].re * dipole[0] + field[1].re * dipole[1] + field[2].re * dipole[2]
}

/// Matrix of complex 3-vector dipole entries. Intra-band dipoles are square,
/// Hermitian entrywise, and zero on the diagonal; the inter-band block is
/// rectangular and unconstrained.
#[derive(Clone, Debug, PartialEq)]
pub struct DipoleMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<CVec3>,
}

impl DipoleMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![ZERO_VEC3; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, k: usize, l: usize) -> &CVec3 {
        &self.entries[k * self.cols + l]
    }

    pub fn set(&mut self, k: usize, l: usize, value: CVec3) {
        self.entries[k * self.cols + l] = value;
    }

    /// Sets `M_kl` and `M_lk = M_kl*` in one go.
    pub fn set_hermitian_pair(&mut self, k: usize, l: usize, value: CVec3) {
        self.set(k, l, value);
        self.set(l, k, [value[0].conj(), value[1].conj(), value[2].conj()]);
    }

    fn validate_intraband(&self, levels: usize) -> Result<(), ModelError> {
        if self.rows != levels || self.cols != levels {
            return Err(ModelError::DipoleShape {
                rows: self.rows,
                cols: self.cols,
                expected_rows: levels,
                expected_cols: levels,
            });
        }
        for k in 0..levels {
            let diag = self.get(k, k);
            if diag.iter().any(|z| z.norm() > DIPOLE_TOL) {
                return Err(ModelError::DipoleDiagonalNonzero { k });
            }
            for l in 0..levels {
                let a = self.get(k, l);
                let b = self.get(l, k);
                for axis in 0..3 {
                    if (a[axis].conj() - b[axis]).norm() > DIPOLE_TOL {
                        return Err(ModelError::DipoleNotHermitian { i: k, j: l });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Level energies, dipole matrix, per-level degeneracies and hbar for a
/// single electron species. The non-degenerate model is the special case of
/// all degeneracies equal to one.
#[derive(Clone, Debug)]
pub struct OneSpeciesSystem {
    energies: Vec<f64>,
    dipole: DipoleMatrix,
    degeneracies: Vec<usize>,
    hbar: f64,
}

impl OneSpeciesSystem {
    pub fn new(
        energies: Vec<f64>,
        dipole: DipoleMatrix,
        degeneracies: Option<Vec<usize>>,
        hbar: f64,
    ) -> Result<Self, ModelError> {
        if energies.is_empty() || energies.iter().any(|e| !e.is_finite()) {
            return Err(ModelError::BadEnergies);
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(ModelError::BadHbar { value: hbar });
        }
        let levels = energies.len();
        dipole.validate_intraband(levels)?;
        let degeneracies = degeneracies.unwrap_or_else(|| vec![1; levels]);
        if degeneracies.len() != levels || degeneracies.iter().any(|&d| d == 0) {
            return Err(ModelError::BadDegeneracies { levels });
        }
        Ok(Self { energies, dipole, degeneracies, hbar })
    }

    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dipole(&self) -> &DipoleMatrix {
        &self.dipole
    }

    pub fn degeneracies(&self) -> &[usize] {
        &self.degeneracies
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Size of the sub-level index set, `sum_i d_i`.
    pub fn expanded_levels(&self) -> usize {
        self.degeneracies.iter().sum()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degeneracies.iter().any(|&d| d > 1)
    }
}

/// Two electron species (conduction and valence) with intra- and inter-band
/// dipole blocks. Hole quantities are derived views: `eps^h_i = -eps^v_i`,
/// `M^h = M^v`, `M^ch = M^cv`; they are never stored independently.
#[derive(Clone, Debug)]
pub struct TwoSpeciesSystem {
    conduction_energies: Vec<f64>,
    valence_energies: Vec<f64>,
    dipole_cc: DipoleMatrix,
    dipole_vv: DipoleMatrix,
    dipole_cv: DipoleMatrix,
    hbar: f64,
}

impl TwoSpeciesSystem {
    pub fn new(
        conduction_energies: Vec<f64>,
        valence_energies: Vec<f64>,
        dipole_cc: DipoleMatrix,
        dipole_vv: DipoleMatrix,
        dipole_cv: DipoleMatrix,
        hbar: f64,
    ) -> Result<Self, ModelError> {
        if conduction_energies.is_empty()
            || valence_energies.is_empty()
            || conduction_energies.iter().chain(&valence_energies).any(|e| !e.is_finite())
        {
            return Err(ModelError::BadEnergies);
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(ModelError::BadHbar { value: hbar });
        }
        let (nc, nv) = (conduction_energies.len(), valence_energies.len());
        dipole_cc.validate_intraband(nc)?;
        dipole_vv.validate_intraband(nv)?;
        if dipole_cv.rows() != nc || dipole_cv.cols() != nv {
            return Err(ModelError::DipoleShape {
                rows: dipole_cv.rows(),
                cols: dipole_cv.cols(),
                expected_rows: nc,
                expected_cols: nv,
            });
        }
        Ok(Self { conduction_energies, valence_energies, dipole_cc, dipole_vv, dipole_cv, hbar })
    }

    pub fn conduction_levels(&self) -> usize {
        self.conduction_energies.len()
    }

    pub fn valence_levels(&self) -> usize {
        self.valence_energies.len()
    }

    pub fn total_levels(&self) -> usize {
        self.conduction_levels() + self.valence_levels()
    }

    pub fn conduction_energies(&self) -> &[f64] {
        &self.conduction_energies
    }

    pub fn valence_energies(&self) -> &[f64] {
        &self.valence_energies
    }

    /// Hole energies, `eps^h_i = -eps^v_i`.
    pub fn hole_energies(&self) -> Vec<f64> {
        self.valence_energies.iter().map(|&e| -e).collect()
    }

    pub fn dipole_cc(&self) -> &DipoleMatrix {
        &self.dipole_cc
    }

    pub fn dipole_vv(&self) -> &DipoleMatrix {
        &self.dipole_vv
    }

    pub fn dipole_cv(&self) -> &DipoleMatrix {
        &self.dipole_cv
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }
}

/// A Hermitian-validated density matrix; the constructor enforces the storage
/// invariant, [`DensityMatrix::validate_physical`] additionally checks
/// positivity and population bounds for initial data.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self, ModelError> {
        if !matrix.is_square() {
            return Err(ModelError::DimensionMismatch {
                expected: matrix.rows(),
                got: matrix.cols(),
            });
        }
        let defect = matrix.hermiticity_defect();
        if defect > DENSITY_HERMITICITY_TOL {
            return Err(ModelError::NotHermitian { defect, tol: DENSITY_HERMITICITY_TOL });
        }
        Ok(Self(matrix))
    }

    pub fn from_populations(populations: &[f64]) -> Self {
        Self(CMatrix::diagonal(
            &populations.iter().map(|&p| C64::new(p, 0.0)).collect::<Vec<_>>(),
        ))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Checks positivity and the fermionic population bounds, with
    /// [`PHYSICALITY_TOL`] slack for roundoff.
    pub fn validate_physical(&self) -> Result<(), ModelError> {
        let (eigenvalues, _) = hermitian_eig(&self.0.hermitized())?;
        if let Some(&min) = eigenvalues.first() {
            if min < -PHYSICALITY_TOL {
                return Err(ModelError::NotPositive { min_eigenvalue: min });
            }
        }
        for level in 0..self.dim() {
            let value = self.0[(level, level)].re;
            if !(-PHYSICALITY_TOL..=1.0 + PHYSICALITY_TOL).contains(&value) {
                return Err(ModelError::PopulationOutOfRange { level, value });
            }
        }
        Ok(())
    }
}

/// `V(t) = E + Re E(t) . M` for a one-species system; Hermitian by
/// construction.
pub fn potential_one_species(system: &OneSpeciesSystem, field: CVec3) -> CMatrix {
    let n = system.levels();
    CMatrix::from_fn(n, n, |k, l| {
        let mut v = re_dot_field(&field, system.dipole().get(k, l));
        if k == l {
            v += system.energies()[k];
        }
        v
    })
}

/// The block potential of the two-species model: intra-band blocks
/// `E^c + Re E . M^c` and `E^v + Re E . M^v`, inter-band block `E . M^cv`
/// (full complex field, no real part) with its conjugate transpose below.
pub fn potential_two_species(system: &TwoSpeciesSystem, field: CVec3) -> CMatrix {
    let nc = system.conduction_levels();
    let nv = system.valence_levels();
    let n = nc + nv;
    CMatrix::from_fn(n, n, |a, b| match (a < nc, b < nc) {
        (true, true) => {
            let mut v = re_dot_field(&field, system.dipole_cc().get(a, b));
            if a == b {
                v += system.conduction_energies()[a];
            }
            v
        }
        (false, false) => {
            let (i, j) = (a - nc, b - nc);
            let mut v = re_dot_field(&field, system.dipole_vv().get(i, j));
            if i == j {
                v += system.valence_energies()[i];
            }
            v
        }
        (true, false) => dot_field(&field, system.dipole_cv().get(a, b - nc)),
        (false, true) => dot_field(&field, system.dipole_cv().get(b, a - nc)).conj(),
    })
}

/// Liouville right-hand side, `drho/dt = -i/hbar (V rho - rho V)`.
pub fn liouville_rhs(potential: &CMatrix, rho: &CMatrix, hbar: f64) -> Result<CMatrix, ModelError> {
    if potential.rows() != rho.rows() || potential.cols() != rho.cols() || !rho.is_square() {
        return Err(ModelError::DimensionMismatch {
            expected: potential.rows(),
            got: rho.rows(),
        });
    }
    let commutator = potential.dot(rho).sub(&rho.dot(potential));
    Ok(commutator.scale(C64::new(0.0, -1.0 / hbar)))
}

/// Rewrites a degenerate system as the non-degenerate one-species model on
/// the sub-level index set `{(i, n) : n = 1..d_i}`: energies and dipole
/// entries depend only on the level, not the sub-level.
pub fn expand_degenerate(system: &OneSpeciesSystem) -> OneSpeciesSystem {
    let total = system.expanded_levels();
    let mut energies = Vec::with_capacity(total);
    let mut owner = Vec::with_capacity(total);
    for (i, &d) in system.degeneracies().iter().enumerate() {
        for _ in 0..d {
            energies.push(system.energies()[i]);
            owner.push(i);
        }
    }
    let mut dipole = DipoleMatrix::zeros(total, total);
    for a in 0..total {
        for b in 0..total {
            // Sub-levels of one level share wave functions, so intra-level
            // entries inherit M_ii = 0.
            dipole.set(a, b, *system.dipole().get(owner[a], owner[b]));
        }
    }
    OneSpeciesSystem::new(energies, dipole, None, system.hbar())
        .expect("expansion preserves system validity")
}

/// Sums a density matrix over sub-levels and rescales:
/// `sigma_ij = rho^{++}_ij / sqrt(d_i d_j)` with
/// `rho^{++}_ij = sum_{n,m} rho^{nm}_ij`.
pub fn condense(rho_expanded: &CMatrix, degeneracies: &[usize]) -> Result<CMatrix, ModelError> {
    let total: usize = degeneracies.iter().sum();
    if rho_expanded.rows() != total || rho_expanded.cols() != total {
        return Err(ModelError::DimensionMismatch { expected: total, got: rho_expanded.rows() });
    }
    let offsets: Vec<usize> = degeneracies
        .iter()
        .scan(0usize, |acc, &d| {
            let start = *acc;
            *acc += d;
            Some(start)
        })
        .collect();
    let n = degeneracies.len();
    Ok(CMatrix::from_fn(n, n, |i, j| {
        let mut sum = C64::new(0.0, 0.0);
        for a in 0..degeneracies[i] {
            for b in 0..degeneracies[j] {
                sum += rho_expanded[(offsets[i] + a, offsets[j] + b)];
            }
        }
        sum / ((degeneracies[i] * degeneracies[j]) as f64).sqrt()
    }))
}

/// The system whose ordinary Bloch dynamics governs the condensed variables:
/// same energies, dipole rescaled to `N_ij = M_ij sqrt(d_i d_j)`,
/// degeneracies reset to one.
pub fn condensed_system(system: &OneSpeciesSystem) -> OneSpeciesSystem {
    let n = system.levels();
    let mut dipole = DipoleMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let scale = ((system.degeneracies()[i] * system.degeneracies()[j]) as f64).sqrt();
            let m = system.dipole().get(i, j);
            dipole.set(i, j, [m[0] * scale, m[1] * scale, m[2] * scale]);
        }
    }
    OneSpeciesSystem::new(system.energies().to_vec(), dipole, None, system.hbar())
        .expect("rescaling preserves system validity")
}

/// Electron-hole variables: `rho^h = Id - transpose(rho^v)`,
/// `rho^ch = rho^cv` (conduction rows, hole columns).
#[derive(Clone, Debug, PartialEq)]
pub struct ElectronHoleState {
    pub rho_c: CMatrix,
    pub rho_h: CMatrix,
    pub rho_ch: CMatrix,
}

impl ElectronHoleState {
    pub fn conduction_levels(&self) -> usize {
        self.rho_c.rows()
    }

    pub fn hole_levels(&self) -> usize {
        self.rho_h.rows()
    }

    pub fn zeros(nc: usize, nh: usize) -> Self {
        Self {
            rho_c: CMatrix::zeros(nc, nc),
            rho_h: CMatrix::zeros(nh, nh),
            rho_ch: CMatrix::zeros(nc, nh),
        }
    }
}

/// Splits a composite density matrix into electron-hole variables.
pub fn to_electron_hole(
    rho_tot: &CMatrix,
    conduction: usize,
    valence: usize,
) -> Result<ElectronHoleState, ModelError> {
    if rho_tot.rows() != conduction + valence || !rho_tot.is_square() {
        return Err(ModelError::DimensionMismatch {
            expected: conduction + valence,
            got: rho_tot.rows(),
        });
    }
    let rho_v = rho_tot.block(conduction, conduction, valence, valence);
    let rho_h = CMatrix::identity(valence).sub(&rho_v.transpose());
    Ok(ElectronHoleState {
        rho_c: rho_tot.block(0, 0, conduction, conduction),
        rho_h,
        rho_ch: rho_tot.block(0, conduction, conduction, valence),
    })
}

/// Reassembles the composite density matrix from electron-hole variables;
/// exact inverse of [`to_electron_hole`].
pub fn from_electron_hole(state: &ElectronHoleState) -> CMatrix {
    let nc = state.conduction_levels();
    let nh = state.hole_levels();
    let mut rho = CMatrix::zeros(nc + nh, nc + nh);
    rho.set_block(0, 0, &state.rho_c);
    let rho_v = CMatrix::identity(nh).sub(&state.rho_h.transpose());
    rho.set_block(nc, nc, &rho_v);
    rho.set_block(0, nc, &state.rho_ch);
    rho.set_block(nc, 0, &state.rho_ch.adjoint());
    rho
}

/// Time derivative of the electron-hole variables. This is the direct
/// transcription of the transformed system (using `eps^h = -eps^v`,
/// `M^h = M^v`, `M^ch = M^cv`), which has lost the Liouville structure; it
/// must agree with the mapped two-species Liouville derivative.
pub fn eh_rhs(
    state: &ElectronHoleState,
    system: &TwoSpeciesSystem,
    field: CVec3,
) -> Result<ElectronHoleState, ModelError> {
    let nc = system.conduction_levels();
    let nh = system.valence_levels();
    if state.conduction_levels() != nc || state.hole_levels() != nh {
        return Err(ModelError::DimensionMismatch {
            expected: nc + nh,
            got: state.conduction_levels() + state.hole_levels(),
        });
    }
    let eps_c = system.conduction_energies();
    let eps_h = system.hole_energies();
    let m_c = system.dipole_cc();
    let m_h = system.dipole_vv();
    let m_ch = system.dipole_cv();
    let rho_c = &state.rho_c;
    let rho_h = &state.rho_h;
    let rho_ch = &state.rho_ch;
    // rho^hc is the conjugate transpose of rho^ch, materialized on demand.
    let rho_hc = |k: usize, j: usize| rho_ch[(j, k)].conj();

    let mut d_c = CMatrix::zeros(nc, nc);
    for i in 0..nc {
        for j in 0..nc {
            let mut acc = C64::new(eps_c[i] - eps_c[j], 0.0) * rho_c[(i, j)];
            for k in 0..nc {
                acc += re_dot_field(&field, m_c.get(i, k)) * rho_c[(k, j)];
                acc -= re_dot_field(&field, m_c.get(k, j)) * rho_c[(i, k)];
            }
            for k in 0..nh {
                acc += dot_field(&field, m_ch.get(i, k)) * rho_hc(k, j);
                acc -= dot_field(&field, m_ch.get(j, k)).conj() * rho_ch[(i, k)];
            }
            d_c[(i, j)] = acc;
        }
    }

    let mut d_h = CMatrix::zeros(nh, nh);
    for i in 0..nh {
        for j in 0..nh {
            let mut acc = C64::new(eps_h[i] - eps_h[j], 0.0) * rho_h[(i, j)];
            for k in 0..nh {
                acc += re_dot_field(&field, m_h.get(j, k)) * rho_h[(i, k)];
                acc -= re_dot_field(&field, m_h.get(k, i)) * rho_h[(k, j)];
            }
            for k in 0..nc {
                acc += dot_field(&field, m_ch.get(k, i)) * rho_hc(j, k);
                acc -= dot_field(&field, m_ch.get(k, j)).conj() * rho_ch[(k, i)];
            }
            d_h[(i, j)] = acc;
        }
    }

    let mut d_ch = CMatrix::zeros(nc, nh);
    for i in 0..nc {
        for j in 0..nh {
            let mut acc = C64::new(eps_c[i] + eps_h[j], 0.0) * rho_ch[(i, j)];
            for k in 0..nc {
                acc += re_dot_field(&field, m_c.get(i, k)) * rho_ch[(k, j)];
                acc -= dot_field(&field, m_ch.get(k, j)) * rho_c[(i, k)];
            }
            for k in 0..nh {
                acc -= re_dot_field(&field, m_h.get(k, j)) * rho_ch[(i, k)];
                let pauli = if j == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
                    - rho_h[(j, k)];
                acc += dot_field(&field, m_ch.get(i, k)) * pauli;
            }
            d_ch[(i, j)] = acc;
        }
    }

    let scale = C64::new(0.0, -1.0 / system.hbar());
    Ok(ElectronHoleState {
        rho_c: d_c.scale(scale),
        rho_h: d_h.scale(scale),
        rho_ch: d_ch.scale(scale),
    })
}

/// State of the reduced population/polarization model: electron populations
/// `n^e`, hole populations `n^h`, and the inter-band polarization stored as
/// `p[(i, j)] = rho^ch_ij` (conduction rows, hole columns).
#[derive(Clone, Debug, PartialEq)]
pub struct GhState {
    pub n_e: Vec<f64>,
    pub n_h: Vec<f64>,
    pub p: CMatrix,
}

impl GhState {
    pub fn zeros(nc: usize, nh: usize) -> Self {
        Self { n_e: vec![0.0; nc], n_h: vec![0.0; nh], p: CMatrix::zeros(nc, nh) }
    }
}

/// Time derivative of the reduced model obtained by imposing vanishing
/// intra-band coherences. The polarization equation keeps the `Re E . M^c`
/// and `M^h` rotation terms; populations evolve only through the inter-band
/// coupling.
pub fn gh_rhs(
    state: &GhState,
    system: &TwoSpeciesSystem,
    field: CVec3,
) -> Result<GhState, ModelError> {
    let nc = system.conduction_levels();
    let nh = system.valence_levels();
    if state.n_e.len() != nc || state.n_h.len() != nh {
        return Err(ModelError::DimensionMismatch {
            expected: nc + nh,
            got: state.n_e.len() + state.n_h.len(),
        });
    }
    let hbar = system.hbar();
    let eps_c = system.conduction_energies();
    let eps_h = system.hole_energies();
    let m_c = system.dipole_cc();
    let m_h = system.dipole_vv();
    let m_ch = system.dipole_cv();
    let p = &state.p;

    // i hbar dn = z - z*, so dn = 2 Im(z) / hbar stays real.
    let mut d_ne = vec![0.0; nc];
    for i in 0..nc {
        let mut z = C64::new(0.0, 0.0);
        for k in 0..nh {
            z += dot_field(&field, m_ch.get(i, k)) * p[(i, k)].conj();
        }
        d_ne[i] = 2.0 * z.im / hbar;
    }

    let mut d_nh = vec![0.0; nh];
    for j in 0..nh {
        let mut z = C64::new(0.0, 0.0);
        for k in 0..nc {
            z += dot_field(&field, m_ch.get(k, j)) * p[(k, j)].conj();
        }
        d_nh[j] = 2.0 * z.im / hbar;
    }

    let mut d_p = CMatrix::zeros(nc, nh);
    for i in 0..nc {
        for j in 0..nh {
            let mut acc = C64::new(eps_c[i] + eps_h[j], 0.0) * p[(i, j)];
            for k in 0..nc {
                acc += re_dot_field(&field, m_c.get(i, k)) * p[(k, j)];
            }
            for k in 0..nh {
                acc -= re_dot_field(&field, m_h.get(k, j)) * p[(i, k)];
            }
            acc += dot_field(&field, m_ch.get(i, j))
                * C64::new(1.0 - state.n_h[j] - state.n_e[i], 0.0);
            d_p[(i, j)] = acc;
        }
    }

    Ok(GhState {
        n_e: d_ne,
        n_h: d_nh,
        p: d_p.scale(C64::new(0.0, -1.0 / hbar)),
    })
}

/// Embeds a reduced-model state into the composite density matrix (diagonal
/// intra-band blocks, `rho^v = Id - diag(n^h)`).
pub fn gh_to_composite(state: &GhState) -> CMatrix {
    let nc = state.n_e.len();
    let nh = state.n_h.len();
    let mut rho = CMatrix::zeros(nc + nh, nc + nh);
    for i in 0..nc {
        rho[(i, i)] = C64::new(state.n_e[i], 0.0);
    }
    for j in 0..nh {
        rho[(nc + j, nc + j)] = C64::new(1.0 - state.n_h[j], 0.0);
    }
    rho.set_block(0, nc, &state.p);
    rho.set_block(nc, 0, &state.p.adjoint());
    rho
}
