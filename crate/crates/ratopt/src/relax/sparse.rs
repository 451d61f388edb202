//! Sparse hierarchy: one moment sequence per clique over that clique's
//! variables, per-clique mass normalizations, and overlap linking through
//! the denominator-weighted moments. Shared variables are replicated per
//! measure rather than owned by a single sequence.

use crate::error::{Error, Result};
use crate::gmp::{check_rip, RationalProgram, Relation, Sense, SparsityPattern};
use crate::polyalg::{monomials_up_to, Monomial};
use crate::relax::{
    half_degree_up, min_order, normalize_constraint, normalize_fraction, push_localizing_block,
    push_moment_block, EqualityProvenance, MeasureInfo, MomentIndexing, OverlapInfo,
    RelaxationKind, SDPRelaxation,
};
use crate::sdpcore::{EqualityRow, SDPProblem};

/// Build the order-`k` sparse relaxation for a program with a sparsity
/// pattern. When the running intersection property fails the relaxation is
/// still built (bounds stay valid) but a warning is recorded, since the
/// convergence and extraction guarantees no longer apply.
pub fn build_sparse(
    program: &RationalProgram,
    pattern: &SparsityPattern,
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
    pattern.validate(program)?;

    let mut warnings = Vec::new();
    if let crate::gmp::RipVerdict::FailsAt(i) = check_rip(pattern) {
        warnings.push(format!(
            "running intersection property fails at clique {}; bounds remain valid but \
             convergence and extraction guarantees are lost",
            i
        ));
    }

    let n = program.dimension;
    let mut measures: Vec<MeasureInfo> = Vec::with_capacity(program.num_terms());
    let mut offset = 0usize;
    for (i, term) in program.terms.iter().enumerate() {
        let vars: Vec<usize> = pattern.cliques[i].iter().copied().collect();
        let (p_hat, q_hat, scale) = normalize_fraction(&term.numerator, &term.denominator);
        let p_local = p_hat.restrict(&vars)?;
        let q_local = q_hat.restrict(&vars)?;
        let indexing = MomentIndexing::new(vars, order, offset);
        offset += indexing.len();
        let u = half_degree_up(&q_local);
        // flatness offset per clique: the largest constraint half degree
        let v = pattern.assignment[i]
            .iter()
            .map(|&ci| half_degree_up(&program.constraints[ci].poly))
            .max()
            .unwrap_or(0);
        measures.push(MeasureInfo {
            term_indices: vec![i],
            indexing,
            numerator: p_local,
            denominator: q_local,
            denominator_scale: scale,
            half_denominator_degree: u,
            flat_offset: v,
        });
    }

    let mut problem = SDPProblem::new(offset);
    let mut block_provenance = Vec::new();
    let mut equality_provenance = Vec::new();

    let sign = match program.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    for info in &measures {
        let one = Monomial::one(info.indexing.local_dimension());
        for (var, coef) in info.indexing.functional(&info.numerator, &one)? {
            problem.objective[var] += sign * coef;
        }
    }

    for (mi, info) in measures.iter().enumerate() {
        push_moment_block(&mut problem, &mut block_provenance, &info.indexing, mi);
    }
    for (mi, info) in measures.iter().enumerate() {
        let vars: Vec<usize> = info.indexing.variables.clone();
        for &ci in &pattern.assignment[mi] {
            let constraint = &program.constraints[ci];
            let g_local = normalize_constraint(&constraint.poly).restrict(&vars)?;
            match constraint.relation {
                Relation::NonNegative => {
                    push_localizing_block(
                        &mut problem,
                        &mut block_provenance,
                        &info.indexing,
                        &g_local,
                        mi,
                        ci,
                    );
                }
                Relation::Zero => {
                    let r_half = half_degree_up(&g_local);
                    let cap = 2 * (order - r_half.min(order)) as u32;
                    for shift in monomials_up_to(info.indexing.local_dimension(), cap) {
                        let coeffs = info.indexing.functional(&g_local, &shift)?;
                        problem.equalities.push(EqualityRow::new(coeffs, 0.0));
                        equality_provenance.push(EqualityProvenance::LocalizingEquality {
                            measure: mi,
                            constraint: ci,
                            shift: shift.clone(),
                        });
                    }
                }
            }
        }
    }

    // every measure is normalized through its own denominator
    for (mi, info) in measures.iter().enumerate() {
        let one = Monomial::one(info.indexing.local_dimension());
        problem.equalities.push(EqualityRow::new(
            info.indexing.functional(&info.denominator, &one)?,
            1.0,
        ));
        equality_provenance.push(EqualityProvenance::MassNormalization { measure: mi });
    }

    // overlap linking: denominator-weighted moments agree on shared
    // variables; the degree-0 case is the pair of normalizations above
    let mut overlaps = Vec::new();
    let overlap_sets = pattern.overlaps();
    for i in 0..measures.len() {
        for &j in &overlap_sets[i] {
            let shared: Vec<usize> = pattern.cliques[i]
                .intersection(&pattern.cliques[j])
                .copied()
                .collect();
            overlaps.push(OverlapInfo {
                measure_a: i,
                measure_b: j,
                variables: shared.clone(),
            });
            let deg_q = measures[i]
                .denominator
                .degree()
                .max(measures[j].denominator.degree()) as usize;
            let mut cap = 2 * order - deg_q.min(2 * order);
            if let Some(user_cap) = matching_cap {
                cap = cap.min(user_cap);
            }
            for shift_shared in monomials_up_to(shared.len(), cap as u32) {
                if shift_shared.degree() == 0 {
                    continue;
                }
                // express the shared-variable shift in each measure's
                // local coordinates
                let shift_global = {
                    let mut exps = vec![0u32; n];
                    for (pos, &v) in shared.iter().enumerate() {
                        exps[v] = shift_shared.exponents()[pos];
                    }
                    Monomial::new(exps)
                };
                let local_shift = |info: &MeasureInfo| -> Monomial {
                    let mut exps = vec![0u32; info.indexing.local_dimension()];
                    for (pos, &v) in info.indexing.variables.iter().enumerate() {
                        exps[pos] = shift_global.exponents()[v];
                    }
                    Monomial::new(exps)
                };
                let lhs = measures[i]
                    .indexing
                    .functional(&measures[i].denominator, &local_shift(&measures[i]))?;
                let rhs = measures[j]
                    .indexing
                    .functional(&measures[j].denominator, &local_shift(&measures[j]))?;
                let mut coeffs = lhs;
                coeffs.extend(rhs.into_iter().map(|(v, c)| (v, -c)));
                problem.equalities.push(EqualityRow::new(coeffs, 0.0));
                equality_provenance.push(EqualityProvenance::MomentMatching {
                    measure: i,
                    reference: j,
                    shift: shift_global,
                });
            }
        }
    }

    problem.normalize();
    problem.validate()?;
    Ok(SDPRelaxation {
        kind: RelaxationKind::Sparse,
        order,
        matching_cap,
        sense: program.sense,
        problem,
        measures,
        block_provenance,
        equality_provenance,
        overlaps,
        warnings,
        epigraph: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmp::{infer_cliques, ConstraintPoly, RationalTerm};
    use crate::polyalg::Polynomial;
    use crate::relax::build_dense;

    /// The four-variable bilinear example with star-shaped cliques.
    pub fn four_variable_program() -> RationalProgram {
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
        RationalProgram::new(n, vec![term(0, 1), term(0, 2), term(0, 3)], Sense::Minimize)
            .unwrap()
            .with_constraints(vec![cons(0, 1, 1.0), cons(0, 2, 2.0), cons(0, 3, 3.0)])
            .unwrap()
    }

    #[test]
    fn four_variable_block_sizes() {
        let p = four_variable_program();
        let pat = infer_cliques(&p).unwrap();
        let relax = build_sparse(&p, &pat, 2, Some(3)).unwrap();
        assert_eq!(relax.moment_block_sizes(), vec![6, 6, 6]);
        assert_eq!(relax.localizing_block_sizes(), vec![3, 3, 3]);
        assert!(relax.warnings.is_empty());
        // three normalizations plus linking rows over the shared variable
        let normalizations = relax
            .equality_provenance
            .iter()
            .filter(|e| matches!(e, EqualityProvenance::MassNormalization { .. }))
            .count();
        assert_eq!(normalizations, 3);
        // pairs (1,2), (1,3), (2,3) share x1; shifts x1^1..x1^3
        let links = relax
            .equality_provenance
            .iter()
            .filter(|e| matches!(e, EqualityProvenance::MomentMatching { .. }))
            .count();
        assert_eq!(links, 9);
    }

    #[test]
    fn single_clique_matches_dense_structure() {
        // a one-term program over all variables degenerates to the dense
        // block structure
        let n = 3;
        let obj = Polynomial::variable(n, 0)
            .mul(&Polynomial::variable(n, 1))
            .unwrap()
            .add(&Polynomial::variable(n, 2))
            .unwrap();
        let p = RationalProgram::new(n, vec![RationalTerm::polynomial(obj)], Sense::Minimize)
            .unwrap()
            .with_constraints(vec![ConstraintPoly::nonneg(
                Polynomial::constant(n, 1.0)
                    .sub(
                        &Polynomial::variable(n, 0)
                            .mul(&Polynomial::variable(n, 0))
                            .unwrap(),
                    )
                    .unwrap(),
            )])
            .unwrap();
        let pat = infer_cliques(&p).unwrap();
        let sparse = build_sparse(&p, &pat, 2, None).unwrap();
        let dense = build_dense(&p, 2, None).unwrap();
        assert_eq!(sparse.moment_block_sizes(), dense.moment_block_sizes());
        assert_eq!(
            sparse.localizing_block_sizes(),
            dense.localizing_block_sizes()
        );
        assert_eq!(sparse.problem.num_vars, dense.problem.num_vars);
    }

    #[test]
    fn chain_linking_degree_cap() {
        // two rational terms with degree-4 denominators over cliques
        // {x1,x2}, {x2,x3}: at order 2 the linking degree cap is
        // 2k - deg q = 0, so only the normalizations tie the measures
        let n = 3;
        let term = |i: usize| {
            let xi = Polynomial::variable(n, i);
            let xi1 = Polynomial::variable(n, i + 1);
            let inner = xi1.sub(&xi.mul(&xi).unwrap()).unwrap();
            let shifted = xi.sub(&Polynomial::constant(n, 1.0)).unwrap();
            let q = inner
                .mul(&inner)
                .unwrap()
                .scale(100.0)
                .add(&shifted.mul(&shifted).unwrap())
                .unwrap()
                .add(&Polynomial::constant(n, 1.0))
                .unwrap();
            RationalTerm::new(Polynomial::constant(n, 1.0), q).unwrap()
        };
        let p = RationalProgram::new(n, vec![term(0), term(1)], Sense::Maximize).unwrap();
        let pat = infer_cliques(&p).unwrap();
        let relax = build_sparse(&p, &pat, 2, None).unwrap();
        let links = relax
            .equality_provenance
            .iter()
            .filter(|e| matches!(e, EqualityProvenance::MomentMatching { .. }))
            .count();
        assert_eq!(links, 0);
        assert_eq!(relax.overlaps.len(), 1);
        assert_eq!(relax.overlaps[0].variables, vec![1]);
        // at order 3 the cap becomes 2: shifts x2, x2^2
        let relax3 = build_sparse(&p, &pat, 3, None).unwrap();
        let links3 = relax3
            .equality_provenance
            .iter()
            .filter(|e| matches!(e, EqualityProvenance::MomentMatching { .. }))
            .count();
        assert_eq!(links3, 2);
    }

    #[test]
    fn rip_failure_warns_but_builds() {
        let n = 4;
        let term = |a: usize, b: usize| {
            RationalTerm::polynomial(
                Polynomial::variable(n, a)
                    .mul(&Polynomial::variable(n, b))
                    .unwrap(),
            )
        };
        // cliques {0,1}, {2,3}, {1,2} violate the running intersection
        let p = RationalProgram::new(n, vec![term(0, 1), term(2, 3), term(1, 2)], Sense::Minimize)
            .unwrap();
        let pat = infer_cliques(&p).unwrap();
        let relax = build_sparse(&p, &pat, 1, None).unwrap();
        assert_eq!(relax.warnings.len(), 1);
        assert!(relax.warnings[0].contains("running intersection"));
    }

    #[test]
    fn sparse_moment_entry_law() {
        use rand::prelude::*;
        let p = four_variable_program();
        let pat = infer_cliques(&p).unwrap();
        let relax = build_sparse(&p, &pat, 2, None).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let y: Vec<f64> = (0..relax.problem.num_vars)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        for (bi, prov) in relax.block_provenance.iter().enumerate() {
            if let crate::relax::BlockProvenance::Moment { measure } = prov {
                let info = &relax.measures[*measure];
                let m = relax.problem.blocks[bi].materialize(&y);
                for r in 0..m.nrows() {
                    for c in 0..m.ncols() {
                        let prod = info.indexing.basis[r].mul(&info.indexing.basis[c]);
                        let var = info.indexing.variable_of(&prod).unwrap();
                        assert!((m[(r, c)] - y[var]).abs() < 1e-14);
                    }
                }
            }
        }
    }
}
