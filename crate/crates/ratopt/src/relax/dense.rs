//! Dense hierarchy: one moment sequence per rational term over all
//! variables, moment and localizing blocks per measure, one mass
//! normalization, and truncated moment-matching equalities tying every
//! measure to the first.

use crate::error::{Error, Result};
use crate::gmp::{RationalProgram, Relation, Sense};
use crate::polyalg::{monomials_up_to, Polynomial};
use crate::relax::{
    half_degree_up, min_order, normalize_constraint, normalize_fraction, push_localizing_block,
    push_moment_block, EqualityProvenance, MeasureInfo, MomentIndexing, RelaxationKind,
    SDPRelaxation,
};
use crate::sdpcore::{EqualityRow, SDPProblem};

/// Build the order-`k` dense relaxation. `matching_cap` optionally lowers
/// the degree of the moment-matching equalities below the formula maximum
/// `2(k - u_i)`.
pub fn build_dense(
    program: &RationalProgram,
    order: usize,
    matching_cap: Option<usize>,
) -> Result<SDPRelaxation> {
    let k_min = min_order(program);
    if order < k_min {
        return Err(Error::OrderTooLow {
            requested: order,
            minimum: k_min,
        });
    }
    let n = program.dimension;
    let all_vars: Vec<usize> = (0..n).collect();

    // fold terms sharing a denominator into one measure, then order
    // measures by ascending half denominator degree
    let mut groups: Vec<(Polynomial, Polynomial, f64, Vec<usize>)> = Vec::new();
    for (t_idx, term) in program.terms.iter().enumerate() {
        let (p_hat, q_hat, scale) = normalize_fraction(&term.numerator, &term.denominator);
        match groups.iter_mut().find(|(_, q, _, _)| *q == q_hat) {
            Some((p_acc, _, _, indices)) => {
                *p_acc = p_acc.add(&p_hat)?;
                indices.push(t_idx);
            }
            None => groups.push((p_hat, q_hat, scale, vec![t_idx])),
        }
    }
    groups.sort_by_key(|(_, q, _, indices)| (half_degree_up(q), indices[0]));

    let mut measures: Vec<MeasureInfo> = Vec::with_capacity(groups.len());
    let mut offset = 0usize;
    for (p_hat, q_hat, scale, indices) in groups {
        let indexing = MomentIndexing::new(all_vars.clone(), order, offset);
        offset += indexing.len();
        let u = half_degree_up(&q_hat);
        measures.push(MeasureInfo {
            term_indices: indices,
            indexing,
            numerator: p_hat,
            denominator: q_hat,
            denominator_scale: scale,
            half_denominator_degree: u,
            flat_offset: u,
        });
    }

    let mut problem = SDPProblem::new(offset);
    let mut block_provenance = Vec::new();
    let mut equality_provenance = Vec::new();

    // objective: sum of L_{y_i}(p_i), negated for maximization
    let sign = match program.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    for info in &measures {
        for (var, coef) in info
            .indexing
            .functional(&info.numerator, &crate::polyalg::Monomial::one(n))?
        {
            problem.objective[var] += sign * coef;
        }
    }

    // moment and localizing blocks; equality constraints localize as
    // two-sided rows instead of PSD pairs
    for (mi, info) in measures.iter().enumerate() {
        push_moment_block(&mut problem, &mut block_provenance, &info.indexing, mi);
    }
    for (ci, constraint) in program.constraints.iter().enumerate() {
        let g_hat = normalize_constraint(&constraint.poly);
        let r_half = half_degree_up(&g_hat);
        match constraint.relation {
            Relation::NonNegative => {
                for (mi, info) in measures.iter().enumerate() {
                    push_localizing_block(
                        &mut problem,
                        &mut block_provenance,
                        &info.indexing,
                        &g_hat,
                        mi,
                        ci,
                    );
                }
            }
            Relation::Zero => {
                let cap = 2 * (order - r_half.min(order)) as u32;
                for (mi, info) in measures.iter().enumerate() {
                    for shift in monomials_up_to(n, cap) {
                        let coeffs = info.indexing.functional(&g_hat, &shift)?;
                        problem.equalities.push(EqualityRow::new(coeffs, 0.0));
                        equality_provenance.push(EqualityProvenance::LocalizingEquality {
                            measure: mi,
                            constraint: ci,
                            shift,
                        });
                    }
                }
            }
        }
    }

    // mass normalization on the first measure
    let one = crate::polyalg::Monomial::one(n);
    problem.equalities.push(EqualityRow::new(
        measures[0].indexing.functional(&measures[0].denominator, &one)?,
        1.0,
    ));
    equality_provenance.push(EqualityProvenance::MassNormalization { measure: 0 });

    // moment matching against the first measure
    for mi in 1..measures.len() {
        let u_i = measures[mi].half_denominator_degree;
        let mut cap = 2 * (order - u_i.min(order));
        if let Some(user_cap) = matching_cap {
            cap = cap.min(user_cap);
        }
        for shift in monomials_up_to(n, cap as u32) {
            let lhs = measures[mi]
                .indexing
                .functional(&measures[mi].denominator, &shift)?;
            let rhs = measures[0]
                .indexing
                .functional(&measures[0].denominator, &shift)?;
            let mut coeffs = lhs;
            coeffs.extend(rhs.into_iter().map(|(v, c)| (v, -c)));
            problem.equalities.push(EqualityRow::new(coeffs, 0.0));
            equality_provenance.push(EqualityProvenance::MomentMatching {
                measure: mi,
                reference: 0,
                shift,
            });
        }
    }

    problem.normalize();
    problem.validate()?;
    Ok(SDPRelaxation {
        kind: RelaxationKind::Dense,
        order,
        matching_cap,
        sense: program.sense,
        problem,
        measures,
        block_provenance,
        equality_provenance,
        overlaps: Vec::new(),
        warnings: Vec::new(),
        epigraph: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmp::{ConstraintPoly, RationalTerm};
    use crate::polyalg::Monomial;
    use crate::relax::BlockProvenance;

    fn upoly(terms: &[(u32, f64)]) -> Polynomial {
        Polynomial::from_terms(1, terms.iter().map(|&(e, c)| (Monomial::new(vec![e]), c)))
            .unwrap()
    }

    /// The two-fraction univariate problem with slow unconstrained
    /// convergence: (1+x+x^2)/(1+x^2) + (1+x^2)/(1+2x^2).
    pub fn two_fraction_program() -> RationalProgram {
        let t1 = RationalTerm::new(
            upoly(&[(0, 1.0), (1, 1.0), (2, 1.0)]),
            upoly(&[(0, 1.0), (2, 1.0)]),
        )
        .unwrap();
        let t2 = RationalTerm::new(
            upoly(&[(0, 1.0), (2, 1.0)]),
            upoly(&[(0, 1.0), (2, 2.0)]),
        )
        .unwrap();
        RationalProgram::new(1, vec![t1, t2], Sense::Minimize).unwrap()
    }

    fn wilkinson(n: usize) -> RationalProgram {
        let terms: Vec<RationalTerm> = (1..=n)
            .map(|i| {
                RationalTerm::new(upoly(&[(0, 1.0)]), upoly(&[(2, 1.0), (0, i as f64)])).unwrap()
            })
            .collect();
        RationalProgram::new(1, terms, Sense::Maximize).unwrap()
    }

    #[test]
    fn order_gate() {
        let p = two_fraction_program();
        assert!(matches!(
            build_dense(&p, 0, None),
            Err(Error::OrderTooLow { minimum: 1, .. })
        ));
    }

    #[test]
    fn two_fraction_structure_at_k1() {
        let p = two_fraction_program();
        let relax = build_dense(&p, 1, None).unwrap();
        assert_eq!(relax.measures.len(), 2);
        // moment blocks are 2x2 over moments up to degree 2
        assert_eq!(relax.moment_block_sizes(), vec![2, 2]);
        // one normalization plus one matching equation (alpha = 0 only)
        assert_eq!(relax.problem.equalities.len(), 2);
        let matching: Vec<_> = relax
            .equality_provenance
            .iter()
            .filter(|e| matches!(e, EqualityProvenance::MomentMatching { .. }))
            .collect();
        assert_eq!(matching.len(), 1);
        // normalization pins L(q_1) with q_1 = 1 + x^2 (first term)
        match &relax.equality_provenance[0] {
            EqualityProvenance::MassNormalization { measure } => {
                assert_eq!(*measure, 0);
                assert_eq!(relax.measures[0].denominator, upoly(&[(0, 1.0), (2, 1.0)]));
            }
            other => panic!("unexpected provenance {:?}", other),
        }
    }

    #[test]
    fn wilkinson_structure_at_k1() {
        let relax = build_dense(&wilkinson(20), 1, None).unwrap();
        assert_eq!(relax.measures.len(), 20);
        assert_eq!(relax.moment_block_sizes(), vec![2; 20]);
        // 19 matching equations at alpha = 0, one normalization
        assert_eq!(relax.problem.equalities.len(), 20);
        assert_eq!(relax.problem.num_vars, 20 * 3);
    }

    #[test]
    fn polynomial_terms_merge_into_one_measure() {
        // four-variable example: three bilinear terms with q = 1 fold into
        // a single measure: one 15x15 moment block, three 5x5 localizing
        let n = 4;
        let term = |a: usize, b: usize| {
            RationalTerm::polynomial(
                Polynomial::variable(n, a)
                    .mul(&Polynomial::variable(n, b))
                    .unwrap(),
            )
        };
        let cons = |a: usize, b: usize, bound: f64| {
            let xa = Polynomial::variable(n, a);
            let xb = Polynomial::variable(n, b);
            ConstraintPoly::nonneg(
                Polynomial::constant(n, bound)
                    .sub(&xa.mul(&xa).unwrap())
                    .unwrap()
                    .sub(&xb.mul(&xb).unwrap())
                    .unwrap(),
            )
        };
        let p = RationalProgram::new(n, vec![term(0, 1), term(0, 2), term(0, 3)], Sense::Minimize)
            .unwrap()
            .with_constraints(vec![cons(0, 1, 1.0), cons(0, 2, 2.0), cons(0, 3, 3.0)])
            .unwrap();
        let relax = build_dense(&p, 2, None).unwrap();
        assert_eq!(relax.measures.len(), 1);
        assert_eq!(relax.measures[0].term_indices, vec![0, 1, 2]);
        assert_eq!(relax.moment_block_sizes(), vec![15]);
        assert_eq!(relax.localizing_block_sizes(), vec![5, 5, 5]);
    }

    #[test]
    fn moment_entry_law() {
        use rand::prelude::*;
        // reconstruct M_k(y) from a random y and compare each entry with
        // the monomial-sum evaluation it should reference
        let p = two_fraction_program();
        let relax = build_dense(&p, 3, None).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let y: Vec<f64> = (0..relax.problem.num_vars)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        for (bi, prov) in relax.block_provenance.iter().enumerate() {
            if let BlockProvenance::Moment { measure } = prov {
                let info = &relax.measures[*measure];
                let m = relax.problem.blocks[bi].materialize(&y);
                let rows = info.indexing.prefix_len(relax.order as u32);
                assert_eq!(m.nrows(), rows);
                for r in 0..rows {
                    for c in 0..rows {
                        let prod = info.indexing.basis[r].mul(&info.indexing.basis[c]);
                        let var = info.indexing.variable_of(&prod).unwrap();
                        assert!((m[(r, c)] - y[var]).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn localizing_entry_law() {
        use rand::prelude::*;
        let mut p = two_fraction_program();
        // constraint 4 - x^2 >= 0
        p = p
            .with_constraints(vec![ConstraintPoly::nonneg(upoly(&[(0, 4.0), (2, -1.0)]))])
            .unwrap();
        let relax = build_dense(&p, 3, None).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let y: Vec<f64> = (0..relax.problem.num_vars)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let mut seen = 0;
        for (bi, prov) in relax.block_provenance.iter().enumerate() {
            if let BlockProvenance::Localizing { measure, constraint } = prov {
                seen += 1;
                let info = &relax.measures[*measure];
                let g = normalize_constraint(&p.constraints[*constraint].poly);
                let m = relax.problem.blocks[bi].materialize(&y);
                for r in 0..m.nrows() {
                    for c in 0..m.ncols() {
                        let prod = info.indexing.basis[r].mul(&info.indexing.basis[c]);
                        let mut expect = 0.0;
                        for (mono, coef) in g.terms() {
                            let var = info.indexing.variable_of(&prod.mul(mono)).unwrap();
                            expect += coef * y[var];
                        }
                        assert!((m[(r, c)] - expect).abs() < 1e-12);
                    }
                }
            }
        }
        assert_eq!(seen, 2); // one localizing block per measure
    }

    #[test]
    fn matching_cap_limits_equalities() {
        let p = two_fraction_program();
        let free = build_dense(&p, 3, None).unwrap();
        let capped = build_dense(&p, 3, Some(1)).unwrap();
        let count = |r: &SDPRelaxation| {
            r.equality_provenance
                .iter()
                .filter(|e| matches!(e, EqualityProvenance::MomentMatching { .. }))
                .count()
        };
        assert_eq!(count(&free), 5); // alpha degree <= 2(3-1) = 4
        assert_eq!(count(&capped), 2); // alpha degree <= 1
    }

    #[test]
    fn equality_constraints_become_rows() {
        let mut p = two_fraction_program();
        p = p
            .with_constraints(vec![ConstraintPoly::zero(upoly(&[(1, 1.0), (0, -1.0)]))])
            .unwrap();
        let relax = build_dense(&p, 2, None).unwrap();
        // no localizing blocks, only rows: (x - 1) has half degree 1, so
        // shifts go up to degree 2(2-1) = 2: three shifts per measure
        assert!(relax.localizing_block_sizes().is_empty());
        let rows = relax
            .equality_provenance
            .iter()
            .filter(|e| matches!(e, EqualityProvenance::LocalizingEquality { .. }))
            .count();
        assert_eq!(rows, 6);
    }

    #[test]
    fn maximize_negates_objective() {
        let relax = build_dense(&wilkinson(3), 1, None).unwrap();
        // mass coefficients of each measure appear with sign -1
        let total: f64 = relax.problem.objective.iter().sum();
        assert!(total < 0.0);
        assert_eq!(relax.bound(-1.5), 1.5);
    }
}
