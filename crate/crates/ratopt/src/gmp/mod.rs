//! Problem modeling: rational programs over semialgebraic sets, sparsity
//! patterns, compactness (ball) augmentation and denominator screening.

mod sparsity;

pub use sparsity::{check_rip, infer_cliques, RipVerdict, SparsityPattern};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::polyalg::{Polynomial, VariableScaling};

/// One summand `p / q` of the objective.
#[derive(Debug, Clone)]
pub struct RationalTerm {
    pub numerator: Polynomial,
    pub denominator: Polynomial,
}

impl RationalTerm {
    pub fn new(numerator: Polynomial, denominator: Polynomial) -> Result<Self> {
        if numerator.dimension() != denominator.dimension() {
            return Err(Error::modeling(
                "numerator and denominator dimensions differ",
            ));
        }
        if denominator.is_zero() {
            return Err(Error::modeling("denominator is the zero polynomial"));
        }
        Ok(RationalTerm {
            numerator,
            denominator,
        })
    }

    /// Polynomial term `p / 1`.
    pub fn polynomial(p: Polynomial) -> Self {
        let one = Polynomial::constant(p.dimension(), 1.0);
        RationalTerm {
            numerator: p,
            denominator: one,
        }
    }

    /// Union of numerator and denominator supports.
    pub fn support(&self) -> Vec<usize> {
        let mut seen = vec![false; self.numerator.dimension()];
        for j in self.numerator.support() {
            seen[j] = true;
        }
        for j in self.denominator.support() {
            seen[j] = true;
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.numerator.eval(x)? / self.denominator.eval(x)?)
    }
}

/// Relation of a constraint polynomial to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    NonNegative,
    Zero,
}

/// Where a constraint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintOrigin {
    User,
    Ball,
    EpigraphBound,
}

/// A single polynomial constraint `g >= 0` or `g = 0`.
#[derive(Debug, Clone)]
pub struct ConstraintPoly {
    pub poly: Polynomial,
    pub relation: Relation,
    pub origin: ConstraintOrigin,
}

impl ConstraintPoly {
    pub fn nonneg(poly: Polynomial) -> Self {
        ConstraintPoly {
            poly,
            relation: Relation::NonNegative,
            origin: ConstraintOrigin::User,
        }
    }

    pub fn zero(poly: Polynomial) -> Self {
        ConstraintPoly {
            poly,
            relation: Relation::Zero,
            origin: ConstraintOrigin::User,
        }
    }

    /// Does the point satisfy this constraint within `tol`?
    pub fn satisfied(&self, x: &[f64], tol: f64) -> Result<bool> {
        let v = self.poly.eval(x)?;
        Ok(match self.relation {
            Relation::NonNegative => v >= -tol,
            Relation::Zero => v.abs() <= tol,
        })
    }
}

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Full problem instance: minimize (or maximize) a sum of rational terms
/// over a basic semialgebraic set.
#[derive(Debug, Clone)]
pub struct RationalProgram {
    pub dimension: usize,
    pub terms: Vec<RationalTerm>,
    pub constraints: Vec<ConstraintPoly>,
    pub sense: Sense,
    pub pattern: Option<SparsityPattern>,
    pub scaling: Option<VariableScaling>,
}

impl RationalProgram {
    pub fn new(dimension: usize, terms: Vec<RationalTerm>, sense: Sense) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::modeling("a program needs at least one term"));
        }
        for t in &terms {
            if t.numerator.dimension() != dimension {
                return Err(Error::modeling("term dimension does not match program"));
            }
        }
        Ok(RationalProgram {
            dimension,
            terms,
            constraints: Vec::new(),
            sense,
            pattern: None,
            scaling: None,
        })
    }

    pub fn with_constraints(mut self, constraints: Vec<ConstraintPoly>) -> Result<Self> {
        for c in &constraints {
            if c.poly.dimension() != self.dimension {
                return Err(Error::modeling(
                    "constraint dimension does not match program",
                ));
            }
        }
        self.constraints = constraints;
        Ok(self)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Objective value at a point.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.eval(x)?;
        }
        Ok(acc)
    }

    /// Point feasibility against all constraints.
    pub fn feasible(&self, x: &[f64], tol: f64) -> Result<bool> {
        for c in &self.constraints {
            if !c.satisfied(x, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Largest degree among all numerators, denominators and constraints.
    pub fn max_degree(&self) -> u32 {
        let mut d = 0;
        for t in &self.terms {
            d = d.max(t.numerator.degree()).max(t.denominator.degree());
        }
        for c in &self.constraints {
            d = d.max(c.poly.degree());
        }
        d
    }

    /// Rewrite the whole program in scaled coordinates `x = a z + b`,
    /// remembering the scaling so results can be mapped back.
    pub fn into_scaled(mut self, scaling: VariableScaling) -> Result<Self> {
        if scaling.dimension() != self.dimension {
            return Err(Error::modeling("scaling dimension does not match program"));
        }
        for t in &mut self.terms {
            t.numerator = t.numerator.apply_scaling(&scaling)?;
            t.denominator = t.denominator.apply_scaling(&scaling)?;
        }
        for c in &mut self.constraints {
            c.poly = c.poly.apply_scaling(&scaling)?;
        }
        self.scaling = Some(scaling);
        Ok(self)
    }
}

/// How the compactness ball is added.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallMode {
    /// One constraint `M - |x|^2 >= 0` over all variables.
    Dense,
    /// One constraint `M - sum_{k in I_i} x_k^2 >= 0` per clique, assigned
    /// to that clique's constraint set.
    PerClique,
}

/// Append ball constraints certifying compactness of the feasible set.
pub fn add_ball_constraints(
    program: &RationalProgram,
    radius_squared: f64,
    mode: BallMode,
) -> Result<RationalProgram> {
    if !(radius_squared > 0.0) {
        return Err(Error::modeling("ball radius must be positive"));
    }
    let n = program.dimension;
    let ball_poly = |vars: &[usize]| -> Polynomial {
        let mut p = Polynomial::constant(n, radius_squared);
        for &j in vars {
            let xj = Polynomial::variable(n, j);
            p = p.sub(&xj.mul(&xj).unwrap()).unwrap();
        }
        p
    };
    let mut out = program.clone();
    match mode {
        BallMode::Dense => {
            let all: Vec<usize> = (0..n).collect();
            out.constraints.push(ConstraintPoly {
                poly: ball_poly(&all),
                relation: Relation::NonNegative,
                origin: ConstraintOrigin::Ball,
            });
        }
        BallMode::PerClique => {
            let pattern = out
                .pattern
                .clone()
                .ok_or_else(|| Error::modeling("per-clique ball needs a sparsity pattern"))?;
            let mut pattern = pattern;
            for (i, clique) in pattern.cliques.iter().enumerate() {
                let vars: Vec<usize> = clique.iter().copied().collect();
                out.constraints.push(ConstraintPoly {
                    poly: ball_poly(&vars),
                    relation: Relation::NonNegative,
                    origin: ConstraintOrigin::Ball,
                });
                pattern.assignment[i].push(out.constraints.len() - 1);
            }
            out.pattern = Some(pattern);
        }
    }
    Ok(out)
}

/// Outcome of the denominator-positivity screen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenominatorVerdict {
    /// Every sampled feasible point had positive denominators.
    Ok,
    /// Some sampled feasible point had a denominator <= 0.
    Suspect,
    /// No feasible sample was found, nothing can be said.
    Inconclusive,
}

/// Report of [`validate_denominators`]. This is a sampling screen, a
/// necessary condition only; it never certifies positivity.
#[derive(Debug, Clone)]
pub struct DenominatorReport {
    pub verdict: DenominatorVerdict,
    /// Minimum sampled denominator value per term (over feasible samples).
    pub min_values: Vec<f64>,
    pub feasible_samples: usize,
}

/// Sample the box, keep points feasible for all inequality constraints and
/// evaluate every denominator there.
pub fn validate_denominators(
    program: &RationalProgram,
    sample_count: usize,
    box_bounds: &[(f64, f64)],
    seed: u64,
) -> Result<DenominatorReport> {
    if sample_count == 0 {
        return Err(Error::modeling("sample count must be at least 1"));
    }
    if box_bounds.len() != program.dimension {
        return Err(Error::modeling("box bounds must cover every variable"));
    }
    for &(lo, hi) in box_bounds {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::modeling("box bounds must be finite intervals"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_values = vec![f64::INFINITY; program.num_terms()];
    let mut feasible_samples = 0usize;
    let mut suspect = false;
    for _ in 0..sample_count {
        let x: Vec<f64> = box_bounds
            .iter()
            .map(|&(lo, hi)| if lo == hi { lo } else { rng.random_range(lo..hi) })
            .collect();
        let ok = program
            .constraints
            .iter()
            .filter(|c| c.relation == Relation::NonNegative)
            .try_fold(true, |acc, c| -> Result<bool> {
                Ok(acc && c.poly.eval(&x)? >= 0.0)
            })?;
        if !ok {
            continue;
        }
        feasible_samples += 1;
        for (i, t) in program.terms.iter().enumerate() {
            let q = t.denominator.eval(&x)?;
            if q < min_values[i] {
                min_values[i] = q;
            }
            if q <= 0.0 {
                suspect = true;
            }
        }
    }
    let verdict = if feasible_samples == 0 {
        DenominatorVerdict::Inconclusive
    } else if suspect {
        DenominatorVerdict::Suspect
    } else {
        DenominatorVerdict::Ok
    };
    Ok(DenominatorReport {
        verdict,
        min_values,
        feasible_samples,
    })
}
