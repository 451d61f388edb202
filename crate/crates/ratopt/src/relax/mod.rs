//! Order-k semidefinite relaxations of rational programs: the dense
//! hierarchy with one moment sequence per term, the sparse hierarchy with
//! per-clique sequences linked on overlaps, and the epigraph-lifting
//! baseline.

mod dense;
mod epigraph;
mod sparse;

pub use dense::build_dense;
pub use epigraph::{build_epigraph, EpigraphInfo, EpigraphMode};
pub use sparse::build_sparse;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::gmp::{RationalProgram, Sense};
use crate::polyalg::{monomials_up_to, Monomial, Polynomial};
use crate::sdpcore::SDPProblem;

/// Monomial basis of one truncated moment sequence and the layout of its
/// scalar variables inside the stacked vector `y`.
#[derive(Debug, Clone)]
pub struct MomentIndexing {
    /// Global indices of the variables this measure sees, ascending.
    pub variables: Vec<usize>,
    /// Relaxation order `k`; the sequence holds moments of degree `<= 2k`.
    pub order: usize,
    /// Local monomials of degree `<= 2k`, graded order.
    pub basis: Vec<Monomial>,
    /// First scalar variable of this measure in the stacked vector.
    pub offset: usize,
    index: HashMap<Vec<u32>, usize>,
}

impl MomentIndexing {
    pub fn new(variables: Vec<usize>, order: usize, offset: usize) -> Self {
        let basis = monomials_up_to(variables.len(), 2 * order as u32);
        let index = basis
            .iter()
            .enumerate()
            .map(|(i, m)| (m.exponents().to_vec(), i))
            .collect();
        MomentIndexing {
            variables,
            order,
            basis,
            offset,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn local_dimension(&self) -> usize {
        self.variables.len()
    }

    /// Position of a local monomial in the basis.
    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m.exponents()).copied()
    }

    /// Stacked variable index of a local monomial.
    pub fn variable_of(&self, m: &Monomial) -> Option<usize> {
        self.position(m).map(|i| i + self.offset)
    }

    /// Monomials of degree `<= d` are a prefix of the graded basis.
    pub fn prefix_len(&self, d: u32) -> usize {
        self.basis.partition_point(|m| m.degree() <= d)
    }

    /// Sparse coefficients of `y -> L_y(shift * h)` over the stacked
    /// variables, for a local polynomial `h`.
    pub fn functional(&self, h: &Polynomial, shift: &Monomial) -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::with_capacity(h.num_terms());
        for (mono, coef) in h.terms() {
            let prod = mono.mul(shift);
            let var = self.variable_of(&prod).ok_or_else(|| {
                Error::modeling(format!(
                    "moment of degree {} exceeds the order-{} truncation",
                    prod.degree(),
                    self.order
                ))
            })?;
            out.push((var, coef));
        }
        Ok(out)
    }
}

/// One measure of a relaxation, with everything certification needs.
#[derive(Debug, Clone)]
pub struct MeasureInfo {
    /// Original term indices folded into this measure (dense building
    /// merges terms sharing a denominator).
    pub term_indices: Vec<usize>,
    pub indexing: MomentIndexing,
    /// Numerator in local coordinates, divided by the denominator scale.
    pub numerator: Polynomial,
    /// Denominator in local coordinates, scaled to unit max coefficient.
    pub denominator: Polynomial,
    /// Scale the original denominator was divided by.
    pub denominator_scale: f64,
    /// Half the denominator degree, rounded up.
    pub half_denominator_degree: usize,
    /// Degree offset of the flatness test for this measure.
    pub flat_offset: usize,
}

/// Where a PSD block comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockProvenance {
    Moment { measure: usize },
    Localizing { measure: usize, constraint: usize },
}

/// Where an equality row comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum EqualityProvenance {
    /// `L_{y_i}(q_i) = 1`.
    MassNormalization { measure: usize },
    /// `L_{y_i}(x^shift q_i) = L_{y_ref}(x^shift q_ref)` (dense matching or
    /// sparse overlap linking; `shift` is in global exponents).
    MomentMatching {
        measure: usize,
        reference: usize,
        shift: Monomial,
    },
    /// `L_{y_i}(x^shift h) = 0` for an equality constraint `h = 0`.
    LocalizingEquality {
        measure: usize,
        constraint: usize,
        shift: Monomial,
    },
}

/// A pair of measures linked over shared variables.
#[derive(Debug, Clone)]
pub struct OverlapInfo {
    pub measure_a: usize,
    pub measure_b: usize,
    /// Global indices of the shared variables.
    pub variables: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxationKind {
    Dense,
    Sparse,
}

/// An order-k SDP relaxation plus the provenance needed to interpret its
/// solution.
#[derive(Debug, Clone)]
pub struct SDPRelaxation {
    pub kind: RelaxationKind,
    pub order: usize,
    /// Degree cap applied to matching/linking equalities, if tighter than
    /// the formula maximum.
    pub matching_cap: Option<usize>,
    pub sense: Sense,
    /// The SDP in minimization form; for `Sense::Maximize` the objective
    /// vector is negated and bounds must be read through [`Self::bound`].
    pub problem: SDPProblem,
    pub measures: Vec<MeasureInfo>,
    pub block_provenance: Vec<BlockProvenance>,
    pub equality_provenance: Vec<EqualityProvenance>,
    pub overlaps: Vec<OverlapInfo>,
    pub warnings: Vec<String>,
    /// Present when this relaxation came from the epigraph lifting.
    pub epigraph: Option<EpigraphInfo>,
}

impl SDPRelaxation {
    /// User-sense bound from the internal minimization objective value.
    pub fn bound(&self, sdp_objective: f64) -> f64 {
        match self.sense {
            Sense::Minimize => sdp_objective,
            Sense::Maximize => -sdp_objective,
        }
    }

    /// Sizes of moment blocks, in measure order.
    pub fn moment_block_sizes(&self) -> Vec<usize> {
        self.block_provenance
            .iter()
            .zip(&self.problem.blocks)
            .filter(|(p, _)| matches!(p, BlockProvenance::Moment { .. }))
            .map(|(_, b)| b.size)
            .collect()
    }

    /// Sizes of localizing blocks.
    pub fn localizing_block_sizes(&self) -> Vec<usize> {
        self.block_provenance
            .iter()
            .zip(&self.problem.blocks)
            .filter(|(p, _)| matches!(p, BlockProvenance::Localizing { .. }))
            .map(|(_, b)| b.size)
            .collect()
    }

    /// Slice of the solution vector belonging to one measure.
    pub fn measure_moments<'a>(&self, y: &'a [f64], measure: usize) -> &'a [f64] {
        let info = &self.measures[measure];
        &y[info.indexing.offset..info.indexing.offset + info.indexing.len()]
    }
}

/// Smallest order `k` with `2k` at least the largest degree appearing in
/// the program; every builder rejects smaller orders.
pub fn min_order(program: &RationalProgram) -> usize {
    (program.max_degree() as usize).div_ceil(2)
}

/// Half-degree of a denominator, rounded up.
pub(crate) fn half_degree_up(p: &Polynomial) -> usize {
    (p.degree() as usize).div_ceil(2)
}

/// Divide numerator and denominator by the denominator's largest
/// coefficient magnitude; the fraction is unchanged and the moment
/// constraints stay well scaled.
pub(crate) fn normalize_fraction(
    numerator: &Polynomial,
    denominator: &Polynomial,
) -> (Polynomial, Polynomial, f64) {
    let scale = denominator.max_abs_coefficient();
    debug_assert!(scale > 0.0);
    (
        numerator.scale(1.0 / scale),
        denominator.scale(1.0 / scale),
        scale,
    )
}

/// Scale a constraint polynomial to unit max coefficient (sign preserved).
pub(crate) fn normalize_constraint(g: &Polynomial) -> Polynomial {
    let scale = g.max_abs_coefficient();
    if scale > 0.0 {
        g.scale(1.0 / scale)
    } else {
        g.clone()
    }
}

/// Append the moment block `M_k(y_i)` for one measure.
pub(crate) fn push_moment_block(
    problem: &mut SDPProblem,
    provenance: &mut Vec<BlockProvenance>,
    indexing: &MomentIndexing,
    measure: usize,
) {
    let rows = indexing.prefix_len(indexing.order as u32);
    let mut block = crate::sdpcore::Block::new(rows);
    for r in 0..rows {
        for c in r..rows {
            let prod = indexing.basis[r].mul(&indexing.basis[c]);
            let var = indexing
                .variable_of(&prod)
                .expect("product of degree-k monomials is within 2k");
            block.push(Some(var), r, c, 1.0);
        }
    }
    problem.blocks.push(block);
    provenance.push(BlockProvenance::Moment { measure });
}

/// Append the localizing block `M_{k-r}(g y_i)` for one measure and one
/// inequality constraint.
pub(crate) fn push_localizing_block(
    problem: &mut SDPProblem,
    provenance: &mut Vec<BlockProvenance>,
    indexing: &MomentIndexing,
    g_local: &Polynomial,
    measure: usize,
    constraint: usize,
) {
    let r_half = half_degree_up(g_local);
    if indexing.order < r_half {
        return;
    }
    let rows = indexing.prefix_len((indexing.order - r_half) as u32);
    let mut block = crate::sdpcore::Block::new(rows);
    for r in 0..rows {
        for c in r..rows {
            let prod = indexing.basis[r].mul(&indexing.basis[c]);
            for (mono, coef) in g_local.terms() {
                let full = prod.mul(mono);
                let var = indexing
                    .variable_of(&full)
                    .expect("localizing entries stay within the truncation");
                block.push(Some(var), r, c, coef);
            }
        }
    }
    problem.blocks.push(block);
    provenance.push(BlockProvenance::Localizing {
        measure,
        constraint,
    });
}
