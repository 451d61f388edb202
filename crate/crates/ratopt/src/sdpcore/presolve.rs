//! Equality presolve: drop linearly dependent rows so the KKT system stays
//! full rank. Moment relaxations routinely produce consistent-but-redundant
//! matching constraints (overlap linking is transitive).

use std::collections::BTreeMap;

use crate::sdpcore::EqualityRow;

/// Result of the reduction.
#[derive(Debug, Clone)]
pub struct ReducedEqualities {
    pub rows: Vec<EqualityRow>,
    /// Indices (into the original list) of the rows kept.
    pub kept: Vec<usize>,
    /// True when a dependent row had an inconsistent right-hand side; the
    /// equality system then has no solution.
    pub inconsistent: bool,
}

/// Sparse Gaussian elimination over the rows, in order. A row whose
/// coefficients vanish after elimination is dropped; if its right-hand side
/// does not also vanish the system is flagged inconsistent.
pub fn reduce_equalities(rows: &[EqualityRow], tol: f64) -> ReducedEqualities {
    struct Pivot {
        coeffs: BTreeMap<usize, f64>,
        rhs: f64,
        col: usize,
    }
    let mut pivots: Vec<Pivot> = Vec::new();
    let mut kept = Vec::new();
    let mut inconsistent = false;

    for (idx, row) in rows.iter().enumerate() {
        let mut work: BTreeMap<usize, f64> = row.coeffs.iter().copied().collect();
        let mut rhs = row.rhs;
        let scale = row
            .coeffs
            .iter()
            .map(|&(_, v)| v.abs())
            .fold(0.0f64, f64::max)
            .max(row.rhs.abs())
            .max(1.0);
        for p in &pivots {
            let factor = match work.get(&p.col) {
                Some(&v) => v,
                None => continue,
            };
            for (&c, &pv) in &p.coeffs {
                let e = work.entry(c).or_insert(0.0);
                *e -= factor * pv;
            }
            rhs -= factor * p.rhs;
            work.retain(|_, v| v.abs() > tol * scale * 1e-3);
        }
        // largest remaining coefficient becomes the pivot
        let best = work
            .iter()
            .map(|(&c, &v)| (c, v))
            .max_by(|a, b| {
                a.1.abs()
                    .partial_cmp(&b.1.abs())
                    .unwrap()
                    .then(b.0.cmp(&a.0))
            });
        match best {
            Some((col, val)) if val.abs() > tol * scale => {
                let inv = 1.0 / val;
                let coeffs: BTreeMap<usize, f64> =
                    work.iter().map(|(&c, &v)| (c, v * inv)).collect();
                pivots.push(Pivot {
                    coeffs,
                    rhs: rhs * inv,
                    col,
                });
                kept.push(idx);
            }
            _ => {
                if rhs.abs() > tol * scale * 1e3 {
                    inconsistent = true;
                }
            }
        }
    }
    ReducedEqualities {
        rows: kept.iter().map(|&i| rows[i].clone()).collect(),
        kept,
        inconsistent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[(usize, f64)], rhs: f64) -> EqualityRow {
        EqualityRow::new(coeffs.to_vec(), rhs)
    }

    #[test]
    fn keeps_independent_rows() {
        let rows = vec![row(&[(0, 1.0)], 1.0), row(&[(1, 1.0)], 2.0)];
        let r = reduce_equalities(&rows, 1e-10);
        assert_eq!(r.kept, vec![0, 1]);
        assert!(!r.inconsistent);
    }

    #[test]
    fn drops_transitive_duplicates() {
        // x0 = x1, x1 = x2, x0 = x2: third row is implied
        let rows = vec![
            row(&[(0, 1.0), (1, -1.0)], 0.0),
            row(&[(1, 1.0), (2, -1.0)], 0.0),
            row(&[(0, 1.0), (2, -1.0)], 0.0),
        ];
        let r = reduce_equalities(&rows, 1e-10);
        assert_eq!(r.kept, vec![0, 1]);
        assert!(!r.inconsistent);
    }

    #[test]
    fn flags_inconsistent_system() {
        let rows = vec![row(&[(0, 1.0)], 1.0), row(&[(0, 2.0)], 3.0)];
        let r = reduce_equalities(&rows, 1e-10);
        assert_eq!(r.kept, vec![0]);
        assert!(r.inconsistent);
    }

    #[test]
    fn random_rank_matches_dense_oracle() {
        use nalgebra::DMatrix;
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = rng.random_range(2..=6usize);
            let p = rng.random_range(1..=8usize);
            let base: Vec<Vec<f64>> = (0..p)
                .map(|_| (0..n).map(|_| rng.random_range(-2i32..=2) as f64).collect())
                .collect();
            let rows: Vec<EqualityRow> = base
                .iter()
                .map(|coeffs| {
                    row(
                        &coeffs
                            .iter()
                            .enumerate()
                            .filter(|(_, &v)| v != 0.0)
                            .map(|(i, &v)| (i, v))
                            .collect::<Vec<_>>(),
                        0.0,
                    )
                })
                .collect();
            let rows: Vec<EqualityRow> =
                rows.into_iter().filter(|r| !r.coeffs.is_empty()).collect();
            if rows.is_empty() {
                continue;
            }
            let dense = DMatrix::from_fn(rows.len(), n, |i, j| {
                rows[i]
                    .coeffs
                    .iter()
                    .find(|&&(c, _)| c == j)
                    .map_or(0.0, |&(_, v)| v)
            });
            let rank = dense.svd(false, false).rank(1e-9);
            let r = reduce_equalities(&rows, 1e-10);
            assert_eq!(r.kept.len(), rank, "rows {:?}", rows);
        }
    }
}
