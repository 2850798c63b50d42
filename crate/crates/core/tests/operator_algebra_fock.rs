//! Independent check of the operator algebra against concrete Fock-space
//! matrices: rewriting an expression into normal order must not change the
//! operator it represents.
//!
//! Fermions act on 2^n-dimensional occupation-bit spaces with the
//! Jordan-Wigner sign (-1)^(occupied modes below i), one chain per species so
//! that conduction and valence factors commute as postulated. Bosons act on
//! per-mode occupations truncated at 3, which is exact as long as no monomial
//! creates more than twice on a mode and test states start with at most one
//! quantum per mode.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qbloch::algebra::{
    c_dag, c_op, normal_order, v_dag, v_op, OperatorExpr, OperatorFactor, OperatorMonomial,
    Species, Statistics,
};
use qbloch::linalg::CMatrix;

const BOSON_MAX_OCC: usize = 3;

fn one(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Matrix representation over `conduction_modes + valence_modes` fermionic
/// modes (levels `0..n` per species) or bosonic modes with truncated
/// occupation.
struct FockRep {
    statistics: Statistics,
    conduction_modes: usize,
    valence_modes: usize,
}

impl FockRep {
    fn dim(&self) -> usize {
        let modes = self.conduction_modes + self.valence_modes;
        match self.statistics {
            Statistics::Fermion => 1 << modes,
            Statistics::Boson => (BOSON_MAX_OCC + 1).pow(modes as u32),
        }
    }

    fn mode_of(&self, factor: &OperatorFactor) -> usize {
        match factor.species {
            Species::Conduction => factor.level,
            Species::Valence => self.conduction_modes + factor.level,
        }
    }

    fn factor_matrix(&self, factor: &OperatorFactor) -> CMatrix {
        match self.statistics {
            Statistics::Fermion => self.fermion_factor(factor),
            Statistics::Boson => self.boson_factor(factor),
        }
    }

    fn fermion_factor(&self, factor: &OperatorFactor) -> CMatrix {
        let dim = self.dim();
        let mode = self.mode_of(factor);
        let bit = 1usize << mode;
        // The sign string counts occupied modes below `mode` within the same
        // species chain; the other species contributes no string, making the
        // two species commute.
        let species_mask = match factor.species {
            Species::Conduction => (1usize << self.conduction_modes) - 1,
            Species::Valence => {
                ((1usize << self.valence_modes) - 1) << self.conduction_modes
            }
        };
        let below = (bit - 1) & species_mask;
        let mut m = CMatrix::zeros(dim, dim);
        for source in 0..dim {
            let occupied = source & bit != 0;
            let sign = if ((source & below).count_ones() % 2) == 0 { 1.0 } else { -1.0 };
            if factor.dagger && !occupied {
                m[(source | bit, source)] = one(sign);
            } else if !factor.dagger && occupied {
                m[(source & !bit, source)] = one(sign);
            }
        }
        m
    }

    fn boson_factor(&self, factor: &OperatorFactor) -> CMatrix {
        let dim = self.dim();
        let mode = self.mode_of(factor);
        let base = BOSON_MAX_OCC + 1;
        let stride = base.pow(mode as u32);
        let mut m = CMatrix::zeros(dim, dim);
        for source in 0..dim {
            let occ = (source / stride) % base;
            if factor.dagger {
                if occ < BOSON_MAX_OCC {
                    m[(source + stride, source)] = one(((occ + 1) as f64).sqrt());
                }
            } else if occ > 0 {
                m[(source - stride, source)] = one((occ as f64).sqrt());
            }
        }
        m
    }

    fn represent(&self, expr: &OperatorExpr) -> CMatrix {
        let dim = self.dim();
        let mut total = CMatrix::zeros(dim, dim);
        for term in expr.terms() {
            let mut product = CMatrix::identity(dim);
            for factor in &term.factors {
                product = product.dot(&self.factor_matrix(factor));
            }
            total.scaled_add_assign(1.0, &product.scale(term.coefficient));
        }
        total
    }

    /// Basis indices whose occupations are all at most one; boson
    /// comparisons are restricted to these source states so the truncation
    /// never bites.
    fn low_occupation_columns(&self) -> Vec<usize> {
        let modes = self.conduction_modes + self.valence_modes;
        match self.statistics {
            Statistics::Fermion => (0..self.dim()).collect(),
            Statistics::Boson => {
                let base = BOSON_MAX_OCC + 1;
                (0..self.dim())
                    .filter(|&idx| {
                        (0..modes).all(|m| (idx / base.pow(m as u32)) % base <= 1)
                    })
                    .collect()
            }
        }
    }
}

fn commutator_matrix(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b).sub(&b.dot(a))
}

fn anticommutator_matrix(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b).add(&b.dot(a))
}

#[test]
fn jordan_wigner_sign_convention() {
    let rep = FockRep { statistics: Statistics::Fermion, conduction_modes: 3, valence_modes: 0 };
    let create_1 = rep.factor_matrix(&c_dag(1));
    // Creating in mode 1 on |mode 0 occupied> crosses one occupied mode.
    assert_eq!(create_1[(0b011, 0b001)], one(-1.0));
    // On the vacuum there is no string.
    assert_eq!(create_1[(0b010, 0b000)], one(1.0));
    // On |mode 2 occupied> the string only counts modes below 1.
    assert_eq!(create_1[(0b110, 0b100)], one(1.0));
}

#[test]
fn fermion_commutation_rules_hold_in_representation() {
    let rep = FockRep { statistics: Statistics::Fermion, conduction_modes: 3, valence_modes: 0 };
    let dim = rep.dim();
    for i in 0..3 {
        for j in 0..3 {
            let ci = rep.factor_matrix(&c_op(i));
            let cj_dag = rep.factor_matrix(&c_dag(j));
            let anti = anticommutator_matrix(&ci, &cj_dag);
            let expected = if i == j {
                CMatrix::identity(dim)
            } else {
                CMatrix::zeros(dim, dim)
            };
            assert!(anti.max_abs_diff(&expected) < 1e-14, "{{c_{i}, c_{j}^+}}");
            let anti = anticommutator_matrix(&ci, &rep.factor_matrix(&c_op(j)));
            assert!(anti.max_abs() < 1e-14, "{{c_{i}, c_{j}}}");
        }
    }
}

#[test]
fn species_chains_commute() {
    let rep = FockRep { statistics: Statistics::Fermion, conduction_modes: 2, valence_modes: 2 };
    for c_factor in [c_dag(0), c_op(0), c_dag(1), c_op(1)] {
        for v_factor in [v_dag(0), v_op(0), v_dag(1), v_op(1)] {
            let a = rep.factor_matrix(&c_factor);
            let b = rep.factor_matrix(&v_factor);
            assert!(
                commutator_matrix(&a, &b).max_abs() < 1e-14,
                "[{c_factor:?}, {v_factor:?}] != 0"
            );
        }
    }
}

#[test]
fn boson_commutation_rules_hold_below_truncation() {
    let rep = FockRep { statistics: Statistics::Boson, conduction_modes: 2, valence_modes: 0 };
    let columns = rep.low_occupation_columns();
    for i in 0..2 {
        for j in 0..2 {
            let comm = commutator_matrix(
                &rep.factor_matrix(&c_op(i)),
                &rep.factor_matrix(&c_dag(j)),
            );
            let expected = if i == j { 1.0 } else { 0.0 };
            for &col in &columns {
                for row in 0..rep.dim() {
                    let want = if row == col { expected } else { 0.0 };
                    assert!(
                        (comm[(row, col)] - one(want)).norm() < 1e-14,
                        "[c_{i}, c_{j}^+] at ({row}, {col})"
                    );
                }
            }
        }
    }
}

fn random_factor(rng: &mut ChaCha8Rng, conduction_modes: usize, valence_modes: usize) -> OperatorFactor {
    let valence = valence_modes > 0 && rng.gen_bool(0.5);
    let (species, modes) = if valence {
        (Species::Valence, valence_modes)
    } else {
        (Species::Conduction, conduction_modes)
    };
    OperatorFactor { species, level: rng.gen_range(0..modes), dagger: rng.gen_bool(0.5) }
}

/// Random expression whose monomials create at most `max_creations_per_mode`
/// times on any single mode.
fn random_expr(
    rng: &mut ChaCha8Rng,
    statistics: Statistics,
    conduction_modes: usize,
    valence_modes: usize,
    max_creations_per_mode: usize,
) -> OperatorExpr {
    let n_terms = rng.gen_range(1..=4);
    let mut terms = Vec::with_capacity(n_terms);
    for _ in 0..n_terms {
        let degree = rng.gen_range(0..=4);
        let mut factors = Vec::with_capacity(degree);
        let mut creations = std::collections::HashMap::new();
        while factors.len() < degree {
            let factor = random_factor(rng, conduction_modes, valence_modes);
            if factor.dagger {
                let count = creations.entry((factor.species, factor.level)).or_insert(0usize);
                if *count >= max_creations_per_mode {
                    continue;
                }
                *count += 1;
            }
            factors.push(factor);
        }
        let coefficient = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        terms.push(OperatorMonomial::new(coefficient, factors));
    }
    OperatorExpr::from_monomials(statistics, terms)
}

#[test]
fn normal_ordering_preserves_the_fermion_representation() {
    let rep = FockRep { statistics: Statistics::Fermion, conduction_modes: 2, valence_modes: 2 };
    let mut rng = ChaCha8Rng::seed_from_u64(0xF0C5);
    for case in 0..60 {
        let expr = random_expr(&mut rng, Statistics::Fermion, 2, 2, 4);
        let direct = rep.represent(&expr);
        let ordered = rep.represent(&normal_order(&expr));
        let scale = direct.max_abs().max(1.0);
        assert!(
            direct.max_abs_diff(&ordered) < 1e-12 * scale,
            "case {case}: representation changed by normal ordering\n{expr}"
        );
    }
}

#[test]
fn normal_ordering_preserves_the_boson_representation() {
    let rep = FockRep { statistics: Statistics::Boson, conduction_modes: 2, valence_modes: 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(0xB050);
    let columns = rep.low_occupation_columns();
    for case in 0..40 {
        let expr = random_expr(&mut rng, Statistics::Boson, 2, 1, 2);
        let direct = rep.represent(&expr);
        let ordered = rep.represent(&normal_order(&expr));
        let scale = direct.max_abs().max(1.0);
        for &col in &columns {
            for row in 0..rep.dim() {
                assert!(
                    (direct[(row, col)] - ordered[(row, col)]).norm() < 1e-12 * scale,
                    "case {case}: entry ({row}, {col}) changed\n{expr}"
                );
            }
        }
    }
}

#[test]
fn pauli_rewrites_match_matrices() {
    // c_1 c_1^+ and 1 - c_1^+ c_1 are equal operators, and the canonical form
    // of the first is the second.
    let rep = FockRep { statistics: Statistics::Fermion, conduction_modes: 2, valence_modes: 0 };
    let lhs = OperatorExpr::from_factors(Statistics::Fermion, vec![c_op(1), c_dag(1)]);
    let rhs = OperatorExpr::from_monomials(
        Statistics::Fermion,
        vec![
            OperatorMonomial::scalar(one(1.0)),
            OperatorMonomial::new(one(-1.0), vec![c_dag(1), c_op(1)]),
        ],
    );
    assert!(rep.represent(&lhs).max_abs_diff(&rep.represent(&rhs)) < 1e-15);
}
