//! Sparse multivariate polynomial arithmetic over `f64`.
//!
//! Monomials are dense exponent vectors compared in graded lexicographic
//! order (total degree first, then earlier variables first), which makes
//! moment-matrix indexing deterministic. Polynomials are coefficient maps
//! keyed by monomial; zero coefficients are never stored.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Power product `x^alpha` with a fixed ambient dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial { exponents }
    }

    /// The constant monomial `1` in `n` variables.
    pub fn one(n: usize) -> Self {
        Monomial {
            exponents: vec![0; n],
        }
    }

    /// The monomial `x_j` in `n` variables.
    pub fn variable(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        Monomial { exponents: e }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn dimension(&self) -> usize {
        self.exponents.len()
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    /// Product of two monomials (exponent-wise sum).
    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.dimension(), other.dimension());
        Monomial {
            exponents: self
                .exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Value of the monomial at a point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }

    /// Variables with a nonzero exponent.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.exponents
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(j, _)| j)
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    /// Graded lexicographic: lower total degree first; within a degree,
    /// the exponent vector that is lexicographically larger comes first
    /// (so `x1` precedes `x2`, and `x1^2` precedes `x1 x2`).
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exponents.cmp(&self.exponents))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return write!(f, "1");
        }
        let mut first = true;
        for (j, &e) in self.exponents.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "x{}", j + 1)?;
            if e > 1 {
                write!(f, "^{}", e)?;
            }
        }
        Ok(())
    }
}

/// All monomials in `n` variables of total degree at most `d`, in graded
/// lexicographic order. The list has `C(n + d, n)` elements.
pub fn monomials_up_to(n: usize, d: u32) -> Vec<Monomial> {
    assert!(n >= 1, "dimension must be positive");
    let mut out = Vec::with_capacity(binomial(n as u64 + d as u64, n as u64) as usize);
    let mut exps = vec![0u32; n];
    for deg in 0..=d {
        emit_degree(&mut exps, 0, deg, &mut out);
    }
    out
}

fn emit_degree(exps: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<Monomial>) {
    if pos + 1 == exps.len() {
        exps[pos] = remaining;
        out.push(Monomial::new(exps.clone()));
        exps[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        exps[pos] = e;
        emit_degree(exps, pos + 1, remaining - e, out);
        exps[pos] = 0;
    }
}

/// Binomial coefficient, exact for the small arguments used here.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Sparse multivariate polynomial with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dimension: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(dimension: usize) -> Self {
        Polynomial {
            dimension,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dimension: usize, value: f64) -> Self {
        let mut p = Polynomial::zero(dimension);
        if value != 0.0 {
            p.terms.insert(Monomial::one(dimension), value);
        }
        p
    }

    /// The polynomial `x_j`.
    pub fn variable(dimension: usize, j: usize) -> Self {
        assert!(j < dimension);
        let mut p = Polynomial::zero(dimension);
        p.terms.insert(Monomial::variable(dimension, j), 1.0);
        p
    }

    pub fn from_terms(
        dimension: usize,
        terms: impl IntoIterator<Item = (Monomial, f64)>,
    ) -> Result<Self> {
        let mut p = Polynomial::zero(dimension);
        for (m, c) in terms {
            if m.dimension() != dimension {
                return Err(Error::modeling(format!(
                    "monomial dimension {} does not match polynomial dimension {}",
                    m.dimension(),
                    dimension
                )));
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial by convention.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    /// Largest coefficient magnitude (0 for the zero polynomial).
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(entry) => {
                *entry += c;
                if *entry == 0.0 {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = Polynomial::zero(self.dimension);
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.dimension);
        for (m, c) in self.terms() {
            out.add_term(m.clone(), c * factor);
        }
        out
    }

    /// Direct term-by-term evaluation.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::modeling(format!(
                "point dimension {} does not match polynomial dimension {}",
                x.len(),
                self.dimension
            )));
        }
        Ok(self.terms().map(|(m, c)| c * m.eval(x)).sum())
    }

    /// Partial derivative with respect to variable `j`.
    pub fn partial(&self, j: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.dimension);
        for (m, c) in self.terms() {
            let e = m.exponents()[j];
            if e == 0 {
                continue;
            }
            let mut exps = m.exponents().to_vec();
            exps[j] -= 1;
            out.add_term(Monomial::new(exps), c * e as f64);
        }
        out
    }

    /// Gradient as a vector of polynomials, one per variable.
    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.dimension).map(|j| self.partial(j)).collect()
    }

    /// Variables appearing in at least one term.
    pub fn support(&self) -> Vec<usize> {
        let mut seen = vec![false; self.dimension];
        for (m, _) in self.terms() {
            for j in m.support() {
                seen[j] = true;
            }
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(j, _)| j)
            .collect()
    }

    /// Substitute `x_j = a_j z_j + b_j` and expand in the monomial basis.
    pub fn apply_scaling(&self, scaling: &VariableScaling) -> Result<Polynomial> {
        if scaling.dimension() != self.dimension {
            return Err(Error::modeling(
                "scaling dimension does not match polynomial dimension",
            ));
        }
        let n = self.dimension;
        let mut out = Polynomial::zero(n);
        for (m, c) in self.terms() {
            // expand prod_j (a_j z_j + b_j)^{e_j} one variable at a time
            let mut expanded = Polynomial::constant(n, c);
            for (j, &e) in m.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut linear = Polynomial::variable(n, j).scale(scaling.multiplier[j]);
                linear = linear.add(&Polynomial::constant(n, scaling.offset[j]))?;
                for _ in 0..e {
                    expanded = expanded.mul(&linear)?;
                }
            }
            out = out.add(&expanded)?;
        }
        Ok(out)
    }

    fn check_dim(&self, other: &Polynomial) -> Result<()> {
        if self.dimension != other.dimension {
            return Err(Error::modeling(format!(
                "polynomial dimensions {} and {} do not match",
                self.dimension, other.dimension
            )));
        }
        Ok(())
    }

    /// Re-express the polynomial over a superset of variables. `embedding[j]`
    /// is the index of local variable `j` in the larger space.
    pub fn embed(&self, new_dimension: usize, embedding: &[usize]) -> Result<Polynomial> {
        if embedding.len() != self.dimension {
            return Err(Error::modeling("embedding length mismatch"));
        }
        let mut out = Polynomial::zero(new_dimension);
        for (m, c) in self.terms() {
            let mut exps = vec![0u32; new_dimension];
            for (j, &e) in m.exponents().iter().enumerate() {
                exps[embedding[j]] = e;
            }
            out.add_term(Monomial::new(exps), c);
        }
        Ok(out)
    }

    /// Restrict to the variables listed in `kept` (ascending global indices).
    /// Fails if the polynomial involves a variable outside `kept`.
    pub fn restrict(&self, kept: &[usize]) -> Result<Polynomial> {
        let mut position = vec![usize::MAX; self.dimension];
        for (local, &global) in kept.iter().enumerate() {
            position[global] = local;
        }
        let mut out = Polynomial::zero(kept.len());
        for (m, c) in self.terms() {
            let mut exps = vec![0u32; kept.len()];
            for (j, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    if position[j] == usize::MAX {
                        return Err(Error::modeling(format!(
                            "variable x{} outside the restriction set",
                            j + 1
                        )));
                    }
                    exps[position[j]] = e;
                }
            }
            out.add_term(Monomial::new(exps), c);
        }
        Ok(out)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms() {
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
                first = false;
            } else if c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let a = c.abs();
            if m.is_constant() {
                write!(f, "{}", a)?;
            } else if a == 1.0 {
                write!(f, "{}", m)?;
            } else {
                write!(f, "{}*{}", a, m)?;
            }
        }
        Ok(())
    }
}

/// Per-variable affine change of variables `x_j = a_j z_j + b_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableScaling {
    pub multiplier: Vec<f64>,
    pub offset: Vec<f64>,
}

impl VariableScaling {
    pub fn new(multiplier: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        if multiplier.len() != offset.len() {
            return Err(Error::modeling("scaling multiplier/offset length mismatch"));
        }
        if multiplier.iter().any(|&a| a == 0.0 || !a.is_finite()) {
            return Err(Error::modeling("scaling multipliers must be finite and nonzero"));
        }
        if offset.iter().any(|&b| !b.is_finite()) {
            return Err(Error::modeling("scaling offsets must be finite"));
        }
        Ok(VariableScaling { multiplier, offset })
    }

    pub fn identity(n: usize) -> Self {
        VariableScaling {
            multiplier: vec![1.0; n],
            offset: vec![0.0; n],
        }
    }

    pub fn dimension(&self) -> usize {
        self.multiplier.len()
    }

    /// The scaling `z = (x - b) / a` undoing this one.
    pub fn inverse(&self) -> VariableScaling {
        VariableScaling {
            multiplier: self.multiplier.iter().map(|a| 1.0 / a).collect(),
            offset: self
                .offset
                .iter()
                .zip(&self.multiplier)
                .map(|(b, a)| -b / a)
                .collect(),
        }
    }

    /// Map a point from scaled coordinates back to original ones.
    pub fn to_original(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.multiplier.iter().zip(&self.offset))
            .map(|(&zj, (&a, &b))| a * zj + b)
            .collect()
    }

    /// Map an original-coordinate point into scaled coordinates.
    pub fn to_scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.multiplier.iter().zip(&self.offset))
            .map(|(&xj, (&a, &b))| (xj - b) / a)
            .collect()
    }
}
