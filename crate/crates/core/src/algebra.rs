//! Symbolic second-quantization engine.
//!
//! Operator expressions are sums of complex-weighted products of creation and
//! annihilation factors over one or two electron species. The engine normal
//! orders products under fermionic or bosonic rules, takes commutators,
//! reduces quadratic expressions to linear combinations of density-matrix
//! entries, and assembles the generator matrix of the induced density-matrix
//! flow. It is the mechanical re-derivation path against which the hand-coded
//! right-hand sides in [`crate::models`] are checked.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::CMatrix;
use crate::models::{dot_field, OneSpeciesSystem, TwoSpeciesSystem};

/// Canonical-form coefficients below this magnitude are dropped; they are
/// cancellation residue from floating-point delta terms.
pub const COEFF_PRUNE_TOL: f64 = 1e-15;

/// Default cap on the total level count accepted by [`derive_generator`].
/// The generator is a derivation oracle, not a production path.
pub const GENERATOR_LEVEL_LIMIT: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum AlgebraError {
    #[error("operands carry different statistics")]
    StatisticsMismatch,
    #[error("expectation does not close at quadratic order: residual term {term}")]
    NonClosedExpectation { term: String },
    #[error("hamiltonian kind {kind:?} does not apply to a {arity} system")]
    KindMismatch { kind: HamiltonianKind, arity: &'static str },
    #[error("{levels} levels exceed the generator limit of {limit}")]
    TooManyLevels { levels: usize, limit: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Species {
    Conduction,
    Valence,
}

/// A single creation or annihilation factor.
///
/// Hole operators never appear as a third species: `d_i = v_i^+` and
/// `d_i^+ = v_i` are represented through valence factors by the callers that
/// need them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OperatorFactor {
    pub species: Species,
    pub level: usize,
    pub dagger: bool,
}

impl OperatorFactor {
    pub fn create(species: Species, level: usize) -> Self {
        Self { species, level, dagger: true }
    }

    pub fn annihilate(species: Species, level: usize) -> Self {
        Self { species, level, dagger: false }
    }

    /// Sorting key inside a normal-ordered group: conduction before valence,
    /// then ascending level.
    fn group_key(&self) -> (Species, usize) {
        (self.species, self.level)
    }
}

impl fmt::Display for OperatorFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self.species {
            Species::Conduction => "c",
            Species::Valence => "v",
        };
        let dag = if self.dagger { "+" } else { "" };
        write!(f, "{letter}{dag}({})", self.level)
    }
}

/// Conduction creation factor `c^+_i`.
pub fn c_dag(level: usize) -> OperatorFactor {
    OperatorFactor::create(Species::Conduction, level)
}

/// Conduction annihilation factor `c_i`.
pub fn c_op(level: usize) -> OperatorFactor {
    OperatorFactor::annihilate(Species::Conduction, level)
}

/// Valence creation factor `v^+_i`.
pub fn v_dag(level: usize) -> OperatorFactor {
    OperatorFactor::create(Species::Valence, level)
}

/// Valence annihilation factor `v_i`.
pub fn v_op(level: usize) -> OperatorFactor {
    OperatorFactor::annihilate(Species::Valence, level)
}

/// A complex-weighted ordered product of factors. The empty product is a
/// scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMonomial {
    pub coefficient: C64,
    pub factors: Vec<OperatorFactor>,
}

impl OperatorMonomial {
    pub fn new(coefficient: C64, factors: Vec<OperatorFactor>) -> Self {
        Self { coefficient, factors }
    }

    pub fn scalar(coefficient: C64) -> Self {
        Self { coefficient, factors: Vec::new() }
    }
}

impl fmt::Display for OperatorMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+.6}{:+.6}i)", self.coefficient.re, self.coefficient.im)?;
        for factor in &self.factors {
            write!(f, " {factor}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistics {
    Fermion,
    Boson,
}

/// Sum of operator monomials under a fixed statistics tag.
#[derive(Clone, Debug)]
pub struct OperatorExpr {
    statistics: Statistics,
    terms: Vec<OperatorMonomial>,
}

impl OperatorExpr {
    pub fn new(statistics: Statistics) -> Self {
        Self { statistics, terms: Vec::new() }
    }

    pub fn scalar(statistics: Statistics, value: C64) -> Self {
        Self::from_monomials(statistics, vec![OperatorMonomial::scalar(value)])
    }

    pub fn from_factors(statistics: Statistics, factors: Vec<OperatorFactor>) -> Self {
        Self::from_monomials(statistics, vec![OperatorMonomial::new(C64::new(1.0, 0.0), factors)])
    }

    /// Zero-coefficient monomials are never stored.
    pub fn from_monomials(statistics: Statistics, terms: Vec<OperatorMonomial>) -> Self {
        let terms = terms.into_iter().filter(|m| m.coefficient.norm() > 0.0).collect();
        Self { statistics, terms }
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn terms(&self) -> &[OperatorMonomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &OperatorExpr) -> Result<OperatorExpr, AlgebraError> {
        if self.statistics != other.statistics {
            return Err(AlgebraError::StatisticsMismatch);
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(OperatorExpr::from_monomials(self.statistics, terms))
    }

    pub fn sub(&self, other: &OperatorExpr) -> Result<OperatorExpr, AlgebraError> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: C64) -> OperatorExpr {
        let terms = self
            .terms
            .iter()
            .map(|m| OperatorMonomial::new(m.coefficient * factor, m.factors.clone()))
            .collect();
        OperatorExpr::from_monomials(self.statistics, terms)
    }

    pub fn product(&self, other: &OperatorExpr) -> Result<OperatorExpr, AlgebraError> {
        if self.statistics != other.statistics {
            return Err(AlgebraError::StatisticsMismatch);
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut factors = Vec::with_capacity(a.factors.len() + b.factors.len());
                factors.extend_from_slice(&a.factors);
                factors.extend_from_slice(&b.factors);
                terms.push(OperatorMonomial::new(a.coefficient * b.coefficient, factors));
            }
        }
        Ok(OperatorExpr::from_monomials(self.statistics, terms))
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, term) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{term}")?;
        }
        Ok(())
    }
}

/// Rewrites an expression into canonical normal order: in every monomial all
/// daggered factors precede all undaggered ones, each group is sorted by
/// (species, level), and no two monomials share a factor sequence.
///
/// The rewriting uses `c_i c_j^+ = delta_ij - c_j^+ c_i` for fermions,
/// `c_i c_j^+ = delta_ij + c_j^+ c_i` for bosons, and lets factors of
/// different species commute. Under fermion statistics a repeated identical
/// factor annihilates the monomial.
pub fn normal_order(expr: &OperatorExpr) -> OperatorExpr {
    let mut canonical: BTreeMap<Vec<OperatorFactor>, C64> = BTreeMap::new();
    let mut queue: Vec<OperatorMonomial> = expr.terms.clone();

    'queue: while let Some(mut mono) = queue.pop() {
        'rewrite: loop {
            let len = mono.factors.len();
            for idx in 0..len.saturating_sub(1) {
                let a = mono.factors[idx];
                let b = mono.factors[idx + 1];
                match (a.dagger, b.dagger) {
                    // Annihilator left of a creator: rewrite or commute.
                    (false, true) => {
                        if a.species == b.species {
                            if a.level == b.level {
                                let mut contracted = mono.factors.clone();
                                contracted.remove(idx + 1);
                                contracted.remove(idx);
                                queue.push(OperatorMonomial::new(mono.coefficient, contracted));
                            }
                            if expr.statistics == Statistics::Fermion {
                                mono.coefficient = -mono.coefficient;
                            }
                        }
                        mono.factors.swap(idx, idx + 1);
                        continue 'rewrite;
                    }
                    // Within a group: sort, tracking fermionic signs.
                    (da, db) if da == db => {
                        if a == b {
                            if expr.statistics == Statistics::Fermion {
                                // Pauli: creating or annihilating the same
                                // electron twice gives zero.
                                continue 'queue;
                            }
                        } else if b.group_key() < a.group_key() {
                            if expr.statistics == Statistics::Fermion && a.species == b.species {
                                mono.coefficient = -mono.coefficient;
                            }
                            mono.factors.swap(idx, idx + 1);
                            continue 'rewrite;
                        }
                    }
                    (true, false) => {}
                    _ => unreachable!(),
                }
            }
            break;
        }
        *canonical.entry(mono.factors).or_insert(C64::new(0.0, 0.0)) += mono.coefficient;
    }

    let terms = canonical
        .into_iter()
        .filter(|(_, coefficient)| coefficient.norm() >= COEFF_PRUNE_TOL)
        .map(|(factors, coefficient)| OperatorMonomial::new(coefficient, factors))
        .collect();
    OperatorExpr { statistics: expr.statistics, terms }
}

/// Canonical form of `a b - b a`. Fails if the operands carry different
/// statistics tags.
pub fn commutator(a: &OperatorExpr, b: &OperatorExpr) -> Result<OperatorExpr, AlgebraError> {
    let ab = a.product(b)?;
    let ba = b.product(a)?;
    Ok(normal_order(&ab.sub(&ba)?))
}

/// Density-matrix block addressed by an expectation coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Block {
    Cc,
    Vv,
    Cv,
    Vc,
}

/// A linear combination `constant + sum coeff * rho^block_ij` obtained by
/// taking expectations of a canonical quadratic expression.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationForm {
    pub constant: C64,
    pub coefficients: BTreeMap<(Block, usize, usize), C64>,
}

/// Reduces a canonical expression to an [`ExpectationForm`] under the
/// conventions `rho^c_ij = <c_j^+ c_i>`, `rho^v_ij = <v_j^+ v_i>`,
/// `rho^cv_ij = <v_j^+ c_i>` and `rho^vc_ij = <c_j^+ v_i>`.
///
/// Any residual term that is neither a scalar nor a creator-annihilator pair
/// signals that the observable/Hamiltonian pair does not close at quadratic
/// order.
pub fn to_expectation(expr: &OperatorExpr) -> Result<ExpectationForm, AlgebraError> {
    let canonical = normal_order(expr);
    let mut constant = C64::new(0.0, 0.0);
    let mut coefficients: BTreeMap<(Block, usize, usize), C64> = BTreeMap::new();

    for term in canonical.terms() {
        match term.factors.as_slice() {
            [] => constant += term.coefficient,
            [x, y] if x.dagger && !y.dagger => {
                let block = match (y.species, x.species) {
                    (Species::Conduction, Species::Conduction) => Block::Cc,
                    (Species::Valence, Species::Valence) => Block::Vv,
                    (Species::Conduction, Species::Valence) => Block::Cv,
                    (Species::Valence, Species::Conduction) => Block::Vc,
                };
                *coefficients
                    .entry((block, y.level, x.level))
                    .or_insert(C64::new(0.0, 0.0)) += term.coefficient;
            }
            _ => {
                return Err(AlgebraError::NonClosedExpectation { term: term.to_string() });
            }
        }
    }

    coefficients.retain(|_, coefficient| coefficient.norm() > 0.0);
    Ok(ExpectationForm { constant, coefficients })
}

/// Hamiltonian pieces assembled by [`build_hamiltonian`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HamiltonianKind {
    /// One species: `sum_k eps_k c_k^+ c_k`.
    FreeElectron,
    /// One species: `1/2 sum_kl (E.M_kl c_k^+ c_l + E*.M*_kl c_l^+ c_k)`.
    Laser,
    /// Two species: `sum_k eps^c_k c_k^+ c_k`.
    FreeConduction,
    /// Two species: `sum_k eps^v_k v_k^+ v_k`.
    FreeValence,
    /// Two species, intra-band conduction laser term (with the 1/2 factor).
    LaserConduction,
    /// Two species, intra-band valence laser term (with the 1/2 factor).
    LaserValence,
    /// Two species, inter-band term `sum_kl (E.M^cv_kl c_k^+ v_l + c.c.)`;
    /// carries no 1/2 factor.
    LaserInterband,
}

/// A system description accepted by the algebra engine.
#[derive(Clone, Copy, Debug)]
pub enum SystemRef<'a> {
    One(&'a OneSpeciesSystem),
    Two(&'a TwoSpeciesSystem),
}

impl SystemRef<'_> {
    /// Total number of levels across species. Degeneracies are not expanded
    /// here; pass an explicitly expanded system to reason about sub-levels.
    pub fn total_levels(&self) -> usize {
        match self {
            SystemRef::One(sys) => sys.levels(),
            SystemRef::Two(sys) => sys.conduction_levels() + sys.valence_levels(),
        }
    }

    fn arity(&self) -> &'static str {
        match self {
            SystemRef::One(_) => "one-species",
            SystemRef::Two(_) => "two-species",
        }
    }
}

fn free_hamiltonian(
    statistics: Statistics,
    species: Species,
    energies: &[f64],
) -> OperatorExpr {
    let terms = energies
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            OperatorMonomial::new(
                C64::new(eps, 0.0),
                vec![OperatorFactor::create(species, k), OperatorFactor::annihilate(species, k)],
            )
        })
        .collect();
    OperatorExpr::from_monomials(statistics, terms)
}

/// Builds one Hamiltonian piece as an operator expression, with the field
/// already evaluated at a fixed time. Dot products contract the complex
/// 3-vector field with the complex 3-vector dipole entries.
pub fn build_hamiltonian(
    system: SystemRef,
    field: [C64; 3],
    kind: HamiltonianKind,
    statistics: Statistics,
) -> Result<OperatorExpr, AlgebraError> {
    let mismatch = |kind| AlgebraError::KindMismatch { kind, arity: system.arity() };
    match (system, kind) {
        (SystemRef::One(sys), HamiltonianKind::FreeElectron) => {
            Ok(free_hamiltonian(statistics, Species::Conduction, sys.energies()))
        }
        (SystemRef::One(sys), HamiltonianKind::Laser) => Ok(laser_intraband(
            statistics,
            Species::Conduction,
            sys.levels(),
            |k, l| dot_field(&field, sys.dipole().get(k, l)),
        )),
        (SystemRef::Two(sys), HamiltonianKind::FreeConduction) => {
            Ok(free_hamiltonian(statistics, Species::Conduction, sys.conduction_energies()))
        }
        (SystemRef::Two(sys), HamiltonianKind::FreeValence) => {
            Ok(free_hamiltonian(statistics, Species::Valence, sys.valence_energies()))
        }
        (SystemRef::Two(sys), HamiltonianKind::LaserConduction) => Ok(laser_intraband(
            statistics,
            Species::Conduction,
            sys.conduction_levels(),
            |k, l| dot_field(&field, sys.dipole_cc().get(k, l)),
        )),
        (SystemRef::Two(sys), HamiltonianKind::LaserValence) => Ok(laser_intraband(
            statistics,
            Species::Valence,
            sys.valence_levels(),
            |k, l| dot_field(&field, sys.dipole_vv().get(k, l)),
        )),
        (SystemRef::Two(sys), HamiltonianKind::LaserInterband) => {
            let mut terms = Vec::new();
            for k in 0..sys.conduction_levels() {
                for l in 0..sys.valence_levels() {
                    let g = dot_field(&field, sys.dipole_cv().get(k, l));
                    terms.push(OperatorMonomial::new(g, vec![c_dag(k), v_op(l)]));
                    terms.push(OperatorMonomial::new(g.conj(), vec![v_dag(l), c_op(k)]));
                }
            }
            Ok(OperatorExpr::from_monomials(statistics, terms))
        }
        (_, kind) => Err(mismatch(kind)),
    }
}

fn laser_intraband(
    statistics: Statistics,
    species: Species,
    levels: usize,
    coupling: impl Fn(usize, usize) -> C64,
) -> OperatorExpr {
    let mut terms = Vec::new();
    // Interactions are counted twice in the double sum, hence the 1/2.
    for k in 0..levels {
        for l in 0..levels {
            let g = coupling(k, l);
            terms.push(OperatorMonomial::new(
                0.5 * g,
                vec![OperatorFactor::create(species, k), OperatorFactor::annihilate(species, l)],
            ));
            terms.push(OperatorMonomial::new(
                0.5 * g.conj(),
                vec![OperatorFactor::create(species, l), OperatorFactor::annihilate(species, k)],
            ));
        }
    }
    OperatorExpr::from_monomials(statistics, terms)
}

/// The full in-scope Hamiltonian of a system at one field value.
pub fn total_hamiltonian(
    system: SystemRef,
    field: [C64; 3],
    statistics: Statistics,
) -> OperatorExpr {
    let kinds: &[HamiltonianKind] = match system {
        SystemRef::One(_) => &[HamiltonianKind::FreeElectron, HamiltonianKind::Laser],
        SystemRef::Two(_) => &[
            HamiltonianKind::FreeConduction,
            HamiltonianKind::FreeValence,
            HamiltonianKind::LaserConduction,
            HamiltonianKind::LaserValence,
            HamiltonianKind::LaserInterband,
        ],
    };
    let mut total = OperatorExpr::new(statistics);
    for &kind in kinds {
        let piece = build_hamiltonian(system, field, kind, statistics)
            .expect("kind list matches system arity");
        total = total.add(&piece).expect("uniform statistics");
    }
    total
}

/// The linear map `G` with `i hbar d/dt vec(rho) = G vec(rho) + constant`,
/// derived symbolically from the Heisenberg equation entry by entry.
///
/// The state is the composite density matrix (conduction levels first, then
/// valence), flattened row-major.
#[derive(Clone, Debug)]
pub struct Generator {
    dim: usize,
    matrix: CMatrix,
    constant: Vec<C64>,
}

impl Generator {
    /// Side length of the density matrix the generator acts on.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The `dim^2 x dim^2` generator matrix.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// The affine part; zero for every Hamiltonian in scope.
    pub fn constant(&self) -> &[C64] {
        &self.constant
    }

    /// Applies the generator to a density matrix, returning `i hbar drho/dt`.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        assert_eq!(rho.rows(), self.dim);
        assert_eq!(rho.cols(), self.dim);
        let n = self.dim;
        let mut out = CMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let row = a * n + b;
                let mut acc = self.constant[row];
                for ap in 0..n {
                    for bp in 0..n {
                        acc += self.matrix[(row, ap * n + bp)] * rho[(ap, bp)];
                    }
                }
                out[(a, b)] = acc;
            }
        }
        out
    }
}

fn composite_species(index: usize, conduction: usize) -> (Species, usize) {
    if index < conduction {
        (Species::Conduction, index)
    } else {
        (Species::Valence, index - conduction)
    }
}

fn composite_index(block: Block, i: usize, j: usize, conduction: usize) -> (usize, usize) {
    match block {
        Block::Cc => (i, j),
        Block::Cv => (i, conduction + j),
        Block::Vc => (conduction + i, j),
        Block::Vv => (conduction + i, conduction + j),
    }
}

/// Derives the generator with the default level cap of
/// [`GENERATOR_LEVEL_LIMIT`].
pub fn derive_generator(
    system: SystemRef,
    field: [C64; 3],
    statistics: Statistics,
) -> Result<Generator, AlgebraError> {
    derive_generator_with_limit(system, field, statistics, GENERATOR_LEVEL_LIMIT)
}

/// Derives the generator of the density-matrix flow: for every entry
/// `rho_ab` the row of `G` is `to_expectation(commutator(obs(a, b), H))`,
/// where `obs(a, b)` is the observable whose expectation is `rho_ab`.
pub fn derive_generator_with_limit(
    system: SystemRef,
    field: [C64; 3],
    statistics: Statistics,
    limit: usize,
) -> Result<Generator, AlgebraError> {
    let dim = system.total_levels();
    if dim > limit {
        return Err(AlgebraError::TooManyLevels { levels: dim, limit });
    }
    let conduction = match system {
        SystemRef::One(sys) => sys.levels(),
        SystemRef::Two(sys) => sys.conduction_levels(),
    };
    let hamiltonian = total_hamiltonian(system, field, statistics);

    let mut matrix = CMatrix::zeros(dim * dim, dim * dim);
    let mut constant = vec![C64::new(0.0, 0.0); dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            let (sp_a, lvl_a) = composite_species(a, conduction);
            let (sp_b, lvl_b) = composite_species(b, conduction);
            // rho_ab = <op_b^+ op_a>
            let observable = OperatorExpr::from_factors(
                statistics,
                vec![
                    OperatorFactor::create(sp_b, lvl_b),
                    OperatorFactor::annihilate(sp_a, lvl_a),
                ],
            );
            let derived = to_expectation(&commutator(&observable, &hamiltonian)?)?;
            let row = a * dim + b;
            constant[row] = derived.constant;
            for ((block, i, j), coefficient) in derived.coefficients {
                let (ap, bp) = composite_index(block, i, j, conduction);
                matrix[(row, ap * dim + bp)] += coefficient;
            }
        }
    }
    Ok(Generator { dim, matrix, constant })
}
