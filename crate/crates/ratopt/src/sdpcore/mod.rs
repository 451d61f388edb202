//! Semidefinite programs in linear-matrix-inequality form, an embedded
//! primal-dual interior-point solver, and SDPA sparse-file interchange.
//!
//! A problem asks for `min c'y` subject to one affine positive-semidefinite
//! constraint per block, `A_0 + sum_a y_a A_a >= 0`, plus linear equalities
//! `B y = d`. This is the shape moment relaxations come in.

mod external;
mod presolve;
mod sdpa;
mod solver;

pub use external::solve_external;
pub use presolve::reduce_equalities;
pub use sdpa::{export_sdpa, import_sdpa};
pub use solver::solve;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One coefficient of an affine symmetric-matrix map. `var == None` marks
/// the constant matrix. Entries are stored upper-triangular (`row <= col`)
/// and implicitly mirrored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEntry {
    pub var: Option<usize>,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Affine symmetric-matrix map for one PSD block.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub size: usize,
    /// Diagonal blocks carry only `row == col` entries; the SDPA format
    /// writes them with a negative size marker.
    pub diagonal: bool,
    pub entries: Vec<BlockEntry>,
}

impl Block {
    pub fn new(size: usize) -> Self {
        Block {
            size,
            diagonal: false,
            entries: Vec::new(),
        }
    }

    pub fn diagonal(size: usize) -> Self {
        Block {
            size,
            diagonal: true,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, var: Option<usize>, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.size && col < self.size);
        debug_assert!(!self.diagonal || row == col);
        if value == 0.0 {
            return;
        }
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        self.entries.push(BlockEntry {
            var,
            row,
            col,
            value,
        });
    }

    /// Materialize the map at a point `y`.
    pub fn materialize(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for e in &self.entries {
            let coeff = match e.var {
                None => e.value,
                Some(a) => e.value * y[a],
            };
            m[(e.row, e.col)] += coeff;
            if e.row != e.col {
                m[(e.col, e.row)] += coeff;
            }
        }
        m
    }

    /// Frobenius inner product of a symmetric matrix with the coefficient
    /// matrix `A_a` of variable `a` (or the constant matrix for `None`).
    pub fn inner_with_coeff(&self, var: Option<usize>, m: &DMatrix<f64>) -> f64 {
        let mut acc = 0.0;
        for e in &self.entries {
            if e.var == var {
                acc += e.value * m[(e.row, e.col)];
                if e.row != e.col {
                    acc += e.value * m[(e.col, e.row)];
                }
            }
        }
        acc
    }

    /// Deterministic canonical ordering; merges duplicate coordinates.
    pub fn normalize(&mut self) {
        self.entries
            .sort_by_key(|e| (e.var.map_or(0, |v| v + 1), e.row, e.col));
        let mut merged: Vec<BlockEntry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match merged.last_mut() {
                Some(last) if last.var == e.var && last.row == e.row && last.col == e.col => {
                    last.value += e.value;
                }
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != 0.0);
        self.entries = merged;
    }
}

/// Sparse linear equality `sum coeffs . y = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualityRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl EqualityRow {
    pub fn new(mut coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        coeffs.sort_by_key(|&(a, _)| a);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (a, v) in coeffs {
            match merged.last_mut() {
                Some((b, acc)) if *b == a => *acc += v,
                _ => merged.push((a, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        EqualityRow {
            coeffs: merged,
            rhs,
        }
    }

    pub fn residual(&self, y: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(a, v)| v * y[a]).sum::<f64>() - self.rhs
    }
}

/// Standard-form SDP: `min c'y` with affine PSD blocks and equalities.
#[derive(Debug, Clone, PartialEq)]
pub struct SDPProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<Block>,
    pub equalities: Vec<EqualityRow>,
}

impl SDPProblem {
    pub fn new(num_vars: usize) -> Self {
        SDPProblem {
            num_vars,
            objective: vec![0.0; num_vars],
            blocks: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::modeling("objective length mismatch"));
        }
        for (b, block) in self.blocks.iter().enumerate() {
            for e in &block.entries {
                if e.row > e.col || e.col >= block.size {
                    return Err(Error::modeling(format!(
                        "block {}: entry ({}, {}) outside upper triangle of size {}",
                        b, e.row, e.col, block.size
                    )));
                }
                if let Some(a) = e.var {
                    if a >= self.num_vars {
                        return Err(Error::modeling(format!(
                            "block {}: variable index {} out of range",
                            b, a
                        )));
                    }
                }
                if block.diagonal && e.row != e.col {
                    return Err(Error::modeling(format!(
                        "block {}: off-diagonal entry in diagonal block",
                        b
                    )));
                }
            }
        }
        for (r, row) in self.equalities.iter().enumerate() {
            if row.coeffs.is_empty() {
                return Err(Error::modeling(format!("equality row {} is empty", r)));
            }
            for &(a, _) in &row.coeffs {
                if a >= self.num_vars {
                    return Err(Error::modeling(format!(
                        "equality row {}: variable index {} out of range",
                        r, a
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical entry ordering in every block.
    pub fn normalize(&mut self) {
        for b in &mut self.blocks {
            b.normalize();
        }
    }
}

/// Solver termination status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::NumericalFailure => "numerical-failure",
        };
        write!(f, "{}", s)
    }
}

/// Solver options. Defaults match the accuracy the certification layer
/// expects; its rank tolerances are far looser than the solver noise.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Reserved for randomized restarts; the default path is deterministic
    /// and never draws from it.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
            seed: 0,
        }
    }
}

/// Solver output.
#[derive(Debug, Clone)]
pub struct SDPSolution {
    pub status: SolveStatus,
    pub y: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    /// Relative duality gap at termination.
    pub gap: f64,
    pub iterations: usize,
    /// Minimum eigenvalue estimate of each materialized block at `y`.
    pub block_min_eig: Vec<f64>,
    /// Largest equality residual at `y`.
    pub eq_residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_materialize_symmetric() {
        let mut b = Block::new(2);
        b.push(None, 0, 0, 1.0);
        b.push(None, 1, 1, 1.0);
        b.push(Some(0), 0, 1, 1.0);
        let m = b.materialize(&[0.5]);
        assert_eq!(m[(0, 1)], 0.5);
        assert_eq!(m[(1, 0)], 0.5);
        assert_eq!(m[(0, 0)], 1.0);
    }

    #[test]
    fn block_normalize_merges_duplicates() {
        let mut b = Block::new(2);
        b.push(Some(1), 0, 1, 1.0);
        b.push(Some(0), 0, 0, 2.0);
        b.push(Some(1), 1, 0, 0.5);
        b.normalize();
        assert_eq!(b.entries.len(), 2);
        assert_eq!(b.entries[0].var, Some(0));
        assert_eq!(b.entries[1].value, 1.5);
    }

    #[test]
    fn equality_row_merges_and_orders() {
        let r = EqualityRow::new(vec![(3, 1.0), (1, 2.0), (3, -1.0)], 4.0);
        assert_eq!(r.coeffs, vec![(1, 2.0)]);
        assert_eq!(r.residual(&[0.0, 2.0, 0.0, 9.0]), 0.0);
    }

    #[test]
    fn validation_catches_bad_indices() {
        let mut p = SDPProblem::new(1);
        let mut b = Block::new(2);
        b.push(Some(0), 0, 1, 1.0);
        b.entries.push(BlockEntry {
            var: Some(5),
            row: 0,
            col: 0,
            value: 1.0,
        });
        p.blocks.push(b);
        assert!(p.validate().is_err());
    }
}
