//! Clique structure over variables, constraint assignment, and the running
//! intersection property.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::gmp::RationalProgram;

/// Variable cliques (one per objective term) together with a partition of
/// the constraint indices across cliques.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    /// `cliques[i]` is the variable set of term `i`'s measure.
    pub cliques: Vec<BTreeSet<usize>>,
    /// `assignment[i]` holds the indices of constraints handled by clique
    /// `i`; the sets partition the program's constraint indices.
    pub assignment: Vec<Vec<usize>>,
}

impl SparsityPattern {
    pub fn new(cliques: Vec<BTreeSet<usize>>, assignment: Vec<Vec<usize>>) -> Self {
        SparsityPattern {
            cliques,
            assignment,
        }
    }

    pub fn num_cliques(&self) -> usize {
        self.cliques.len()
    }

    /// Overlap sets `U_i = { j > i : cliques i and j intersect }`.
    pub fn overlaps(&self) -> Vec<Vec<usize>> {
        let n = self.cliques.len();
        (0..n)
            .map(|i| {
                (i + 1..n)
                    .filter(|&j| !self.cliques[i].is_disjoint(&self.cliques[j]))
                    .collect()
            })
            .collect()
    }

    /// Structural validation against a program: clique count matches the
    /// term count, cliques cover every variable and every term's support,
    /// and the assignment partitions the constraint indices with each
    /// constraint supported on its clique.
    pub fn validate(&self, program: &RationalProgram) -> Result<()> {
        if self.cliques.len() != program.num_terms() {
            return Err(Error::modeling(format!(
                "{} cliques for {} terms",
                self.cliques.len(),
                program.num_terms()
            )));
        }
        if self.assignment.len() != self.cliques.len() {
            return Err(Error::modeling("assignment length differs from cliques"));
        }
        let mut covered = vec![false; program.dimension];
        for clique in &self.cliques {
            for &v in clique {
                if v >= program.dimension {
                    return Err(Error::modeling(format!(
                        "clique variable x{} out of range",
                        v + 1
                    )));
                }
                covered[v] = true;
            }
        }
        if covered.iter().any(|&c| !c) {
            return Err(Error::modeling("cliques do not cover every variable"));
        }
        for (i, term) in program.terms.iter().enumerate() {
            for v in term.support() {
                if !self.cliques[i].contains(&v) {
                    return Err(Error::modeling(format!(
                        "term {} uses x{} outside its clique",
                        i + 1,
                        v + 1
                    )));
                }
            }
        }
        let mut seen = vec![false; program.constraints.len()];
        for (i, assigned) in self.assignment.iter().enumerate() {
            for &j in assigned {
                if j >= program.constraints.len() {
                    return Err(Error::modeling(format!(
                        "assigned constraint index {} out of range",
                        j
                    )));
                }
                if seen[j] {
                    return Err(Error::modeling(format!(
                        "constraint {} assigned to two cliques",
                        j
                    )));
                }
                seen[j] = true;
                for v in program.constraints[j].poly.support() {
                    if !self.cliques[i].contains(&v) {
                        return Err(Error::modeling(format!(
                            "constraint {} uses x{} outside clique {}",
                            j,
                            v + 1,
                            i + 1
                        )));
                    }
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::modeling("some constraints are not assigned"));
        }
        Ok(())
    }
}

/// Result of the running intersection check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RipVerdict {
    Holds,
    /// Smallest clique index (1-based position in the ordering) at which
    /// the property fails.
    FailsAt(usize),
}

impl RipVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, RipVerdict::Holds)
    }
}

/// Running intersection property: for every `i >= 2` the intersection of
/// clique `i` with the union of the earlier cliques is contained in a
/// single earlier clique.
pub fn check_rip(pattern: &SparsityPattern) -> RipVerdict {
    let cliques = &pattern.cliques;
    let mut union: BTreeSet<usize> = BTreeSet::new();
    if let Some(first) = cliques.first() {
        union.extend(first.iter().copied());
    }
    for i in 1..cliques.len() {
        let meet: BTreeSet<usize> = cliques[i].intersection(&union).copied().collect();
        let contained = cliques[..i].iter().any(|cj| meet.is_subset(cj));
        if !contained {
            return RipVerdict::FailsAt(i + 1);
        }
        union.extend(cliques[i].iter().copied());
    }
    RipVerdict::Holds
}

/// Derive a sparsity pattern from term supports: clique `i` starts as the
/// support of term `i`, each constraint goes to the first clique containing
/// its support, and a constraint fitting no clique enlarges the clique with
/// the smallest covering union. This is a convenience heuristic; callers
/// must still verify the running intersection property.
pub fn infer_cliques(program: &RationalProgram) -> Result<SparsityPattern> {
    let mut cliques: Vec<BTreeSet<usize>> = program
        .terms
        .iter()
        .map(|t| t.support().into_iter().collect())
        .collect();
    for clique in cliques.iter_mut() {
        if clique.is_empty() {
            clique.insert(0);
        }
    }
    let mut assignment: Vec<Vec<usize>> = vec![Vec::new(); cliques.len()];
    for (j, c) in program.constraints.iter().enumerate() {
        let support: BTreeSet<usize> = c.poly.support().into_iter().collect();
        let home = cliques.iter().position(|cl| support.is_subset(cl));
        let i = match home {
            Some(i) => i,
            None => {
                // enlarge the clique whose union with the support is smallest
                let i = (0..cliques.len())
                    .min_by_key(|&i| cliques[i].union(&support).count())
                    .expect("at least one clique");
                cliques[i].extend(support.iter().copied());
                i
            }
        };
        assignment[i].push(j);
    }
    // variables appearing nowhere still need a home for coverage
    let mut covered = vec![false; program.dimension];
    for clique in &cliques {
        for &v in clique {
            covered[v] = true;
        }
    }
    for (v, &c) in covered.iter().enumerate() {
        if !c {
            cliques[0].insert(v);
        }
    }
    let pattern = SparsityPattern::new(cliques, assignment);
    pattern.validate(program)?;
    Ok(pattern)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmp::{ConstraintPoly, RationalTerm, Sense};
    use crate::polyalg::Polynomial;

    fn set(vals: &[usize]) -> BTreeSet<usize> {
        vals.iter().copied().collect()
    }

    fn pattern(cliques: &[&[usize]]) -> SparsityPattern {
        SparsityPattern::new(
            cliques.iter().map(|c| set(c)).collect(),
            vec![Vec::new(); cliques.len()],
        )
    }

    #[test]
    fn rip_star_holds() {
        let p = pattern(&[&[0, 1], &[0, 2], &[0, 3]]);
        assert_eq!(check_rip(&p), RipVerdict::Holds);
    }

    #[test]
    fn rip_single_clique() {
        let p = pattern(&[&[0, 1, 2, 3]]);
        assert_eq!(check_rip(&p), RipVerdict::Holds);
    }

    #[test]
    fn rip_failure_with_witness() {
        // I3 = {2, 3} meets {1,2} u {3,4} in {2, 3} which fits neither
        let p = pattern(&[&[0, 1], &[2, 3], &[1, 2]]);
        assert_eq!(check_rip(&p), RipVerdict::FailsAt(3));
    }

    #[test]
    fn rip_matches_brute_force_on_random_patterns() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let n = rng.random_range(1..=8usize);
            let num_cliques = rng.random_range(1..=6usize);
            let cliques: Vec<BTreeSet<usize>> = (0..num_cliques)
                .map(|_| {
                    let size = rng.random_range(1..=n);
                    let mut vars: Vec<usize> = (0..n).collect();
                    vars.shuffle(&mut rng);
                    vars.into_iter().take(size).collect()
                })
                .collect();
            let p = SparsityPattern::new(cliques.clone(), vec![Vec::new(); num_cliques]);

            // brute force: check every i and every candidate j directly
            let mut brute = RipVerdict::Holds;
            'outer: for i in 1..num_cliques {
                let mut union: BTreeSet<usize> = BTreeSet::new();
                for cj in &cliques[..i] {
                    union.extend(cj.iter().copied());
                }
                let meet: BTreeSet<usize> = cliques[i].intersection(&union).copied().collect();
                let mut ok = false;
                for cj in &cliques[..i] {
                    if meet.iter().all(|v| cj.contains(v)) {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    brute = RipVerdict::FailsAt(i + 1);
                    break 'outer;
                }
            }
            assert_eq!(check_rip(&p), brute);
        }
    }

    fn rosenbrock_chain(n: usize) -> RationalProgram {
        let terms: Vec<RationalTerm> = (0..n - 1)
            .map(|i| {
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
            })
            .collect();
        RationalProgram::new(n, terms, Sense::Maximize).unwrap()
    }

    #[test]
    fn infer_cliques_rosenbrock_chain() {
        let p = rosenbrock_chain(4);
        let pat = infer_cliques(&p).unwrap();
        assert_eq!(pat.cliques, vec![set(&[0, 1]), set(&[1, 2]), set(&[2, 3])]);
        assert!(check_rip(&pat).holds());
    }

    #[test]
    fn infer_cliques_single_term() {
        let obj = Polynomial::variable(3, 0)
            .mul(&Polynomial::variable(3, 1))
            .unwrap()
            .add(&Polynomial::variable(3, 2))
            .unwrap();
        let p = RationalProgram::new(3, vec![RationalTerm::polynomial(obj)], Sense::Minimize)
            .unwrap();
        let pat = infer_cliques(&p).unwrap();
        assert_eq!(pat.cliques, vec![set(&[0, 1, 2])]);
    }

    #[test]
    fn infer_cliques_four_variable_example() {
        // objective split as x1*x2, x1*x3, x1*x4 with one ball-like
        // constraint per pair
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
        let pat = infer_cliques(&p).unwrap();
        assert_eq!(pat.cliques, vec![set(&[0, 1]), set(&[0, 2]), set(&[0, 3])]);
        assert_eq!(pat.assignment, vec![vec![0], vec![1], vec![2]]);
        assert!(check_rip(&pat).holds());
    }

    #[test]
    fn infer_cliques_enlarges_for_wide_constraint() {
        // constraint coupling x1 and x3 fits no term support
        let n = 3;
        let t1 = RationalTerm::polynomial(Polynomial::variable(n, 0));
        let t2 = RationalTerm::polynomial(
            Polynomial::variable(n, 1)
                .mul(&Polynomial::variable(n, 2))
                .unwrap(),
        );
        let wide = ConstraintPoly::nonneg(
            Polynomial::constant(n, 1.0)
                .sub(&Polynomial::variable(n, 0))
                .unwrap()
                .sub(&Polynomial::variable(n, 2))
                .unwrap(),
        );
        let p = RationalProgram::new(n, vec![t1, t2], Sense::Minimize)
            .unwrap()
            .with_constraints(vec![wide])
            .unwrap();
        let pat = infer_cliques(&p).unwrap();
        pat.validate(&p).unwrap();
        // the wide constraint must land in a clique covering {x1, x3}
        let home = pat
            .assignment
            .iter()
            .position(|a| a.contains(&0))
            .unwrap();
        assert!(set(&[0, 2]).is_subset(&pat.cliques[home]));
    }

    #[test]
    fn infer_cliques_structurally_valid_on_random_programs() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.random_range(2..=6usize);
            let num_terms = rng.random_range(1..=4usize);
            let terms: Vec<RationalTerm> = (0..num_terms)
                .map(|_| {
                    let a = rng.random_range(0..n);
                    let b = rng.random_range(0..n);
                    RationalTerm::polynomial(
                        Polynomial::variable(n, a)
                            .mul(&Polynomial::variable(n, b))
                            .unwrap(),
                    )
                })
                .collect();
            let num_cons = rng.random_range(0..=3usize);
            let constraints: Vec<ConstraintPoly> = (0..num_cons)
                .map(|_| {
                    let a = rng.random_range(0..n);
                    let b = rng.random_range(0..n);
                    ConstraintPoly::nonneg(
                        Polynomial::constant(n, 1.0)
                            .sub(&Polynomial::variable(n, a))
                            .unwrap()
                            .sub(&Polynomial::variable(n, b))
                            .unwrap(),
                    )
                })
                .collect();
            let p = RationalProgram::new(n, terms, Sense::Minimize)
                .unwrap()
                .with_constraints(constraints)
                .unwrap();
            let pat = infer_cliques(&p).unwrap();
            pat.validate(&p).unwrap();
        }
    }
}
