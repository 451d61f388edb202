//! Epigraph lifting: one auxiliary variable per rational term bounds its
//! value, turning the program polynomial at the cost of extra variables.
//! Kept as a baseline for comparison with the direct moment approach.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::gmp::{
    ConstraintOrigin, ConstraintPoly, RationalProgram, RationalTerm, Relation, Sense,
    SparsityPattern,
};
use crate::polyalg::Polynomial;
use crate::relax::{build_dense, build_sparse, min_order, SDPRelaxation};

/// How the lifted constraints are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpigraphMode {
    /// `r_i q_i - p_i >= 0` (minimize) or `p_i - r_i q_i >= 0` (maximize).
    Inequality,
    /// `r_i q_i - p_i = 0`; numerically preferable.
    Equality,
}

/// Mapping from the lifted problem back to the original variables.
#[derive(Debug, Clone)]
pub struct EpigraphInfo {
    pub original_dimension: usize,
    /// Lifted variable index of each original term.
    pub lift_variables: Vec<usize>,
    pub mode: EpigraphMode,
}

/// Build the epigraph relaxation of order `k`. `bounds[i]` is the interval
/// the lifting variable of term `i` is boxed into (required; compactness of
/// the lifted set depends on it). With `sparse` the term cliques (from the
/// program's pattern, or term supports otherwise) are extended by one
/// lifting variable each; otherwise the relaxation is dense over `n + N`
/// variables with a single measure.
///
/// Returns the lifted program alongside the relaxation; certification runs
/// against the lifted program.
pub fn build_epigraph(
    program: &RationalProgram,
    order: usize,
    mode: EpigraphMode,
    bounds: &[(f64, f64)],
    sparse: bool,
    matching_cap: Option<usize>,
) -> Result<(RationalProgram, SDPRelaxation)> {
    let n = program.dimension;
    let num_terms = program.num_terms();
    if bounds.len() != num_terms {
        return Err(Error::modeling(
            "one lifting bound interval per term is required",
        ));
    }
    for &(lo, hi) in bounds {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::modeling(
                "lifting bounds must be finite nonempty intervals",
            ));
        }
    }
    let n_lift = n + num_terms;
    let embedding: Vec<usize> = (0..n).collect();

    // lifted constraints: user constraints verbatim, then the epigraph
    // couplings and the redundant box quadratics
    let mut constraints: Vec<ConstraintPoly> = Vec::new();
    for c in &program.constraints {
        constraints.push(ConstraintPoly {
            poly: c.poly.embed(n_lift, &embedding)?,
            relation: c.relation,
            origin: c.origin,
        });
    }
    let num_user = constraints.len();
    for (i, term) in program.terms.iter().enumerate() {
        let r_i = Polynomial::variable(n_lift, n + i);
        let p = term.numerator.embed(n_lift, &embedding)?;
        let q = term.denominator.embed(n_lift, &embedding)?;
        let coupling = r_i.mul(&q)?.sub(&p)?;
        let (poly, relation) = match (mode, program.sense) {
            (EpigraphMode::Equality, _) => (coupling, Relation::Zero),
            (EpigraphMode::Inequality, Sense::Minimize) => (coupling, Relation::NonNegative),
            (EpigraphMode::Inequality, Sense::Maximize) => {
                (coupling.scale(-1.0), Relation::NonNegative)
            }
        };
        constraints.push(ConstraintPoly {
            poly,
            relation,
            origin: ConstraintOrigin::EpigraphBound,
        });
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        let r_i = Polynomial::variable(n_lift, n + i);
        let above = r_i.sub(&Polynomial::constant(n_lift, lo))?;
        let below = Polynomial::constant(n_lift, hi).sub(&r_i)?;
        constraints.push(ConstraintPoly {
            poly: above.mul(&below)?,
            relation: Relation::NonNegative,
            origin: ConstraintOrigin::EpigraphBound,
        });
    }

    let info = EpigraphInfo {
        original_dimension: n,
        lift_variables: (n..n_lift).collect(),
        mode,
    };

    if sparse {
        // per-term cliques extended by the lifting variable
        let base_cliques: Vec<BTreeSet<usize>> = match &program.pattern {
            Some(pat) => pat.cliques.clone(),
            None => program
                .terms
                .iter()
                .map(|t| t.support().into_iter().collect())
                .collect(),
        };
        let mut cliques: Vec<BTreeSet<usize>> = base_cliques
            .into_iter()
            .enumerate()
            .map(|(i, mut c)| {
                c.insert(n + i);
                c
            })
            .collect();
        // uncovered original variables join the first clique
        let mut covered = vec![false; n];
        for c in &cliques {
            for &v in c {
                if v < n {
                    covered[v] = true;
                }
            }
        }
        for (v, &cov) in covered.iter().enumerate() {
            if !cov {
                cliques[0].insert(v);
            }
        }
        // assignment: user constraints follow the pattern when present,
        // else first covering clique; couplings and boxes go to their term
        let mut assignment: Vec<Vec<usize>> = vec![Vec::new(); num_terms];
        match &program.pattern {
            Some(pat) => {
                for (i, assigned) in pat.assignment.iter().enumerate() {
                    assignment[i].extend(assigned.iter().copied());
                }
            }
            None => {
                for ci in 0..num_user {
                    let support: BTreeSet<usize> =
                        constraints[ci].poly.support().into_iter().collect();
                    let home = cliques
                        .iter()
                        .position(|cl| support.is_subset(cl))
                        .ok_or_else(|| {
                            Error::modeling(format!(
                                "constraint {} does not fit any lifted clique; \
                                 provide an explicit sparsity pattern",
                                ci + 1
                            ))
                        })?;
                    assignment[home].push(ci);
                }
            }
        }
        for i in 0..num_terms {
            assignment[i].push(num_user + i); // coupling
            assignment[i].push(num_user + num_terms + i); // box quadratic
        }

        let terms: Vec<RationalTerm> = (0..num_terms)
            .map(|i| RationalTerm::polynomial(Polynomial::variable(n_lift, n + i)))
            .collect();
        let mut lifted = RationalProgram::new(n_lift, terms, program.sense)?
            .with_constraints(constraints)?;
        let pattern = SparsityPattern::new(cliques, assignment);
        pattern.validate(&lifted)?;
        lifted.pattern = Some(pattern.clone());

        let k = order.max(min_order(&lifted));
        let mut relax = build_sparse(&lifted, &pattern, k, matching_cap)?;
        relax.epigraph = Some(info);
        Ok((lifted, relax))
    } else {
        // one measure over (x, r) with the polynomial objective sum r_i
        let mut objective = Polynomial::zero(n_lift);
        for i in 0..num_terms {
            objective = objective.add(&Polynomial::variable(n_lift, n + i))?;
        }
        let lifted = RationalProgram::new(
            n_lift,
            vec![RationalTerm::polynomial(objective)],
            program.sense,
        )?
        .with_constraints(constraints)?;
        let k = order.max(min_order(&lifted));
        let mut relax = build_dense(&lifted, k, matching_cap)?;
        relax.epigraph = Some(info);
        Ok((lifted, relax))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::Monomial;

    fn upoly(terms: &[(u32, f64)]) -> Polynomial {
        Polynomial::from_terms(1, terms.iter().map(|&(e, c)| (Monomial::new(vec![e]), c)))
            .unwrap()
    }

    #[test]
    fn single_term_equality_mode() {
        // p = x^2, q = 1 on [-1, 1] with r in [0, 1]: constraint r - x^2 = 0
        let t = crate::gmp::RationalTerm::new(upoly(&[(2, 1.0)]), upoly(&[(0, 1.0)])).unwrap();
        let p = RationalProgram::new(1, vec![t], Sense::Minimize)
            .unwrap()
            .with_constraints(vec![ConstraintPoly::nonneg(upoly(&[(0, 1.0), (2, -1.0)]))])
            .unwrap();
        let (lifted, relax) =
            build_epigraph(&p, 1, EpigraphMode::Equality, &[(0.0, 1.0)], false, None).unwrap();
        assert_eq!(lifted.dimension, 2);
        assert_eq!(lifted.constraints.len(), 3);
        let coupling = &lifted.constraints[1];
        assert_eq!(coupling.relation, Relation::Zero);
        // r - x^2 at (x, r) = (0.5, 0.25) vanishes
        assert!(coupling.poly.eval(&[0.5, 0.25]).unwrap().abs() < 1e-15);
        assert_eq!(relax.measures.len(), 1);
        assert!(relax.epigraph.is_some());
    }

    #[test]
    fn maximize_flips_inequality_direction() {
        let t = crate::gmp::RationalTerm::new(upoly(&[(0, 1.0)]), upoly(&[(2, 1.0), (0, 1.0)]))
            .unwrap();
        let p = RationalProgram::new(1, vec![t], Sense::Maximize).unwrap();
        let (lifted, _) =
            build_epigraph(&p, 2, EpigraphMode::Inequality, &[(0.0, 1.0)], false, None).unwrap();
        // p - r q >= 0 must hold where r is below the fraction value
        let c = &lifted.constraints[0];
        assert_eq!(c.relation, Relation::NonNegative);
        assert!(c.poly.eval(&[0.0, 0.5]).unwrap() > 0.0); // f(0) = 1 > 0.5
        assert!(c.poly.eval(&[0.0, 1.5]).unwrap() < 0.0);
    }

    #[test]
    fn sparse_lifting_extends_cliques() {
        // three univariate fractions share x; sparse lifting gives cliques
        // {x, r_i} with pairwise overlap {x}
        let terms: Vec<crate::gmp::RationalTerm> = (1..=3)
            .map(|i| {
                crate::gmp::RationalTerm::new(
                    upoly(&[(0, 1.0)]),
                    upoly(&[(2, 1.0), (0, i as f64)]),
                )
                .unwrap()
            })
            .collect();
        let p = RationalProgram::new(1, terms, Sense::Maximize).unwrap();
        let (lifted, relax) = build_epigraph(
            &p,
            2,
            EpigraphMode::Equality,
            &[(0.0, 1.0); 3],
            true,
            None,
        )
        .unwrap();
        assert_eq!(lifted.dimension, 4);
        assert_eq!(relax.measures.len(), 3);
        for (i, m) in relax.measures.iter().enumerate() {
            assert_eq!(m.indexing.variables, vec![0, 1 + i]);
        }
        assert_eq!(relax.overlaps.len(), 3); // pairs (1,2), (1,3), (2,3)
        for o in &relax.overlaps {
            assert_eq!(o.variables, vec![0]);
        }
        // each clique carries its coupling and box constraint
        assert_eq!(relax.localizing_block_sizes().len(), 3);
    }

    #[test]
    fn bounds_are_mandatory() {
        let t = crate::gmp::RationalTerm::new(upoly(&[(0, 1.0)]), upoly(&[(2, 1.0), (0, 1.0)]))
            .unwrap();
        let p = RationalProgram::new(1, vec![t], Sense::Minimize).unwrap();
        assert!(build_epigraph(&p, 2, EpigraphMode::Equality, &[], false, None).is_err());
        assert!(build_epigraph(
            &p,
            2,
            EpigraphMode::Equality,
            &[(1.0, 1.0)],
            false,
            None
        )
        .is_err());
    }
}
