//! Primal-dual path-following interior-point solver.
//!
//! The problem `min c'y : A_0 + sum_a y_a A_a >= 0 (per block), B y = d` is
//! embedded in a homogeneous self-dual model so that an identity-scaled
//! interior start always exists and infeasibility or unboundedness surfaces
//! as a ray instead of a numerical breakdown. Search directions follow the
//! dual-side linearization of the complementarity condition with Mehrotra
//! predictor-corrector steps; the Schur complement is factored by dense
//! Cholesky. Equalities enter the KKT system natively.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::sdpcore::{
    reduce_equalities, SDPProblem, SDPSolution, SolveOptions, SolveStatus,
};

/// Sparse coefficient list of one symmetric matrix (upper triangle).
type Coeffs = Vec<(usize, usize, f64)>;

struct BlockData {
    size: usize,
    constant: Coeffs,
    /// (variable index, coefficients), sorted by variable.
    vars: Vec<(usize, Coeffs)>,
}

impl BlockData {
    /// sum_a y_a A_a + t * A_0, materialized dense symmetric.
    fn affine(&self, y: &DVector<f64>, t: f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        add_sym(&mut m, &self.constant, t);
        for (a, coeffs) in &self.vars {
            add_sym(&mut m, coeffs, y[*a]);
        }
        m
    }
}

fn add_sym(m: &mut DMatrix<f64>, coeffs: &Coeffs, scale: f64) {
    if scale == 0.0 {
        return;
    }
    for &(r, c, v) in coeffs {
        m[(r, c)] += v * scale;
        if r != c {
            m[(c, r)] += v * scale;
        }
    }
}

/// Frobenius inner product of a sparse symmetric coefficient list with a
/// dense (not necessarily symmetric) matrix; the asymmetric part cancels
/// exactly as if the dense factor had been symmetrized.
fn inner(coeffs: &Coeffs, m: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for &(r, c, v) in coeffs {
        if r == c {
            acc += v * m[(r, c)];
        } else {
            acc += v * (m[(r, c)] + m[(c, r)]);
        }
    }
    acc
}

/// X * A * Sinv for sparse symmetric A, via rank-one accumulation.
fn sandwich(x: &DMatrix<f64>, coeffs: &Coeffs, sinv: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(n, n);
    for &(r, c, v) in coeffs {
        let xc = x.column(r);
        let sr = sinv.row(c);
        out.ger(v, &xc, &sr.transpose(), 1.0);
        if r != c {
            let xc = x.column(c);
            let sr = sinv.row(r);
            out.ger(v, &xc, &sr.transpose(), 1.0);
        }
    }
    out
}

struct Iterate {
    y: DVector<f64>,
    lam: DVector<f64>,
    x: Vec<DMatrix<f64>>,
    s: Vec<DMatrix<f64>>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dy: DVector<f64>,
    dlam: DVector<f64>,
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
    dtau: f64,
    dkappa: f64,
}

/// Largest step keeping `m + alpha dm` positive definite.
fn max_psd_step(m: &DMatrix<f64>, dm: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l();
    let t = l.solve_lower_triangular(dm)?;
    let w = l.solve_lower_triangular(&t.transpose())?;
    let sym = (&w + w.transpose()) * 0.5;
    let min_eig = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !min_eig.is_finite() {
        return None;
    }
    Some(if min_eig >= 0.0 { f64::INFINITY } else { -1.0 / min_eig })
}

pub fn solve(problem: &SDPProblem, options: &SolveOptions) -> SDPSolution {
    match solve_inner(problem, options) {
        Ok(sol) => sol,
        Err(partial) => partial,
    }
}

fn failure(problem: &SDPProblem, status: SolveStatus, y: Vec<f64>, iterations: usize) -> SDPSolution {
    let objective: f64 = problem.objective.iter().zip(&y).map(|(c, v)| c * v).sum();
    let block_min_eig = problem
        .blocks
        .iter()
        .map(|b| {
            let m = b.materialize(&y);
            if m.nrows() == 0 {
                0.0
            } else {
                SymmetricEigen::new(m)
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            }
        })
        .collect();
    let eq_residual = problem
        .equalities
        .iter()
        .map(|r| r.residual(&y).abs())
        .fold(0.0, f64::max);
    SDPSolution {
        status,
        y,
        objective,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        iterations,
        block_min_eig,
        eq_residual,
    }
}

fn solve_inner(problem: &SDPProblem, options: &SolveOptions) -> Result<SDPSolution, SDPSolution> {
    if problem.validate().is_err() {
        return Err(failure(
            problem,
            SolveStatus::NumericalFailure,
            vec![0.0; problem.num_vars],
            0,
        ));
    }
    let m = problem.num_vars;
    if m == 0 {
        return Ok(SDPSolution {
            status: SolveStatus::Optimal,
            y: Vec::new(),
            objective: 0.0,
            dual_objective: 0.0,
            gap: 0.0,
            iterations: 0,
            block_min_eig: vec![0.0; problem.blocks.len()],
            eq_residual: 0.0,
        });
    }

    // canonical entries, then split constant vs per-variable coefficients
    let mut normalized = problem.clone();
    normalized.normalize();
    let blocks: Vec<BlockData> = normalized
        .blocks
        .iter()
        .filter(|b| b.size > 0)
        .map(|b| {
            let mut constant = Vec::new();
            let mut per_var: std::collections::BTreeMap<usize, Coeffs> = Default::default();
            for e in &b.entries {
                match e.var {
                    None => constant.push((e.row, e.col, e.value)),
                    Some(a) => per_var.entry(a).or_default().push((e.row, e.col, e.value)),
                }
            }
            BlockData {
                size: b.size,
                constant,
                vars: per_var.into_iter().collect(),
            }
        })
        .collect();

    let reduced = reduce_equalities(&normalized.equalities, 1e-12);
    if reduced.inconsistent {
        return Ok(failure(
            problem,
            SolveStatus::Infeasible,
            vec![0.0; m],
            0,
        ));
    }
    let eq = reduced.rows;
    let p = eq.len();
    let c = DVector::from_column_slice(&normalized.objective);
    let d = DVector::from_fn(p, |r, _| eq[r].rhs);

    let nu: usize = blocks.iter().map(|b| b.size).sum();
    let norm_a0 = blocks
        .iter()
        .map(|b| b.constant.iter().map(|&(r, c_, v)| if r == c_ { v * v } else { 2.0 * v * v }).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    let norm_c = c.norm();
    let norm_d_inf = d.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));

    // identity-scaled interior start for the embedding
    let mut it = Iterate {
        y: DVector::zeros(m),
        lam: DVector::zeros(p),
        x: blocks.iter().map(|b| DMatrix::identity(b.size, b.size)).collect(),
        s: blocks.iter().map(|b| DMatrix::identity(b.size, b.size)).collect(),
        tau: 1.0,
        kappa: 1.0,
    };

    let b_apply = |y: &DVector<f64>| -> DVector<f64> {
        DVector::from_fn(p, |r, _| eq[r].coeffs.iter().map(|&(a, v)| v * y[a]).sum())
    };
    let bt_apply = |lam: &DVector<f64>| -> DVector<f64> {
        let mut out = DVector::zeros(m);
        for (r, row) in eq.iter().enumerate() {
            for &(a, v) in &row.coeffs {
                out[a] += v * lam[r];
            }
        }
        out
    };
    let adjoint = |x: &[DMatrix<f64>]| -> DVector<f64> {
        let mut out = DVector::zeros(m);
        for (b, block) in blocks.iter().enumerate() {
            for (a, coeffs) in &block.vars {
                out[*a] += inner(coeffs, &x[b]);
            }
        }
        out
    };
    let const_inner = |x: &[DMatrix<f64>]| -> f64 {
        blocks
            .iter()
            .enumerate()
            .map(|(b, block)| inner(&block.constant, &x[b]))
            .sum()
    };

    let mut last_status = SolveStatus::MaxIterations;
    let mut iterations = 0usize;
    let mut stagnant = 0usize;

    for iter in 0..options.max_iter {
        iterations = iter;

        // residuals of the self-dual system
        let f1: Vec<DMatrix<f64>> = blocks
            .iter()
            .enumerate()
            .map(|(b, block)| block.affine(&it.y, it.tau) - &it.s[b])
            .collect();
        let f2 = &c * it.tau - adjoint(&it.x) - bt_apply(&it.lam);
        let f3 = &d * it.tau - b_apply(&it.y);
        let f4 = d.dot(&it.lam) - c.dot(&it.y) - const_inner(&it.x) - it.kappa;

        let xs: f64 = blocks
            .iter()
            .enumerate()
            .map(|(b, _)| (&it.x[b] * &it.s[b]).trace())
            .sum();
        let mu = (xs + it.tau * it.kappa) / (nu as f64 + 1.0);

        // scaled optimality measures
        let tau = it.tau;
        let obj_p = c.dot(&it.y) / tau;
        let obj_d = (d.dot(&it.lam) - const_inner(&it.x)) / tau;
        let rel_gap = (obj_p - obj_d).abs() / (1.0 + obj_p.abs() + obj_d.abs());
        let pres = f1
            .iter()
            .map(|r| r.norm_squared())
            .sum::<f64>()
            .sqrt()
            / (tau * (1.0 + norm_a0));
        let dres = f2.norm() / (tau * (1.0 + norm_c));
        let eres = f3.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) / (tau * (1.0 + norm_d_inf));

        if pres <= options.feas_tol && dres <= options.feas_tol && eres <= options.feas_tol
            && rel_gap <= options.gap_tol
        {
            last_status = SolveStatus::Optimal;
            break;
        }

        // ray detection: tau collapsed while kappa stays alive, and the
        // candidate certificate is clean relative to its own scale
        if tau < 1e-8 && it.kappa > 1e-6 {
            let dual_pos = d.dot(&it.lam) - const_inner(&it.x);
            let infeas_res = (&f2 - &c * tau).norm(); // A*(X) + B'lam up to sign
            let primal_neg = -c.dot(&it.y);
            let primal_res = (f1.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt())
                .hypot(f3.norm());
            let infeas_ok = dual_pos > 1e-8 && infeas_res <= 1e-6 * dual_pos;
            let unbounded_ok = primal_neg > 1e-8 && primal_res <= 1e-6 * primal_neg;
            if infeas_ok && (!unbounded_ok || dual_pos >= primal_neg) {
                last_status = SolveStatus::Infeasible;
                break;
            }
            if unbounded_ok {
                last_status = SolveStatus::Unbounded;
                break;
            }
        }
        // both tau and kappa collapsing: the problem is solvable only in
        // the limit (unattained optimum); stop with what we have
        if mu < 1e-13 && tau < 1e-9 {
            last_status = SolveStatus::MaxIterations;
            break;
        }

        // factor the slacks
        let mut sinv = Vec::with_capacity(blocks.len());
        let mut ok = true;
        for s in &it.s {
            match Cholesky::new(s.clone()) {
                Some(ch) => sinv.push(ch.inverse()),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            last_status = SolveStatus::NumericalFailure;
            break;
        }

        // Schur complement and couplings shared by both solves
        let mut schur = DMatrix::<f64>::zeros(m, m);
        let mut n0 = DVector::<f64>::zeros(m);
        let mut h00 = 0.0f64;
        let mut f1_vec = DVector::<f64>::zeros(m);
        let mut f10 = 0.0f64;
        for (b, block) in blocks.iter().enumerate() {
            let u0 = sandwich(&it.x[b], &block.constant, &sinv[b]);
            let uf = &it.x[b] * &f1[b] * &sinv[b];
            for (ia, (a, coeffs_a)) in block.vars.iter().enumerate() {
                let ua = sandwich(&it.x[b], coeffs_a, &sinv[b]);
                for (e, coeffs_e) in block.vars.iter().take(ia + 1) {
                    let v = inner(coeffs_e, &ua);
                    schur[(*a, *e)] += v;
                    if a != e {
                        schur[(*e, *a)] += v;
                    }
                }
                n0[*a] += inner(coeffs_a, &u0);
                f1_vec[*a] += inner(coeffs_a, &uf);
            }
            h00 += inner(&block.constant, &u0);
            f10 += inner(&block.constant, &uf);
        }

        // factor with an escalating ridge if needed
        let diag_scale = (0..m).map(|i| schur[(i, i)].abs()).fold(0.0f64, f64::max).max(1.0);
        let mut chol_m = None;
        for ridge in [0.0, 1e-14, 1e-11, 1e-8] {
            let mut trym = schur.clone();
            if ridge > 0.0 {
                for i in 0..m {
                    trym[(i, i)] += ridge * diag_scale;
                }
            }
            if let Some(ch) = Cholesky::new(trym) {
                chol_m = Some(ch);
                break;
            }
        }
        let chol_m = match chol_m {
            Some(ch) => ch,
            None => {
                last_status = SolveStatus::NumericalFailure;
                break;
            }
        };

        // columns of B' and the tau coupling, premultiplied by M^{-1}
        let mut bt = DMatrix::<f64>::zeros(m, p);
        for (r, row) in eq.iter().enumerate() {
            for &(a, v) in &row.coeffs {
                bt[(a, r)] = v;
            }
        }
        let z_b = chol_m.solve(&bt);
        let ctau_col = &c + &n0;
        let z_c = chol_m.solve(&ctau_col);
        let (chol_g, have_eq) = if p > 0 {
            let g = bt.transpose() * &z_b;
            let mut chol_g = None;
            let gdiag = (0..p).map(|i| g[(i, i)].abs()).fold(0.0f64, f64::max).max(1.0);
            for ridge in [0.0, 1e-14, 1e-11, 1e-8] {
                let mut tryg = g.clone();
                if ridge > 0.0 {
                    for i in 0..p {
                        tryg[(i, i)] += ridge * gdiag;
                    }
                }
                if let Some(ch) = Cholesky::new(tryg) {
                    chol_g = Some(ch);
                    break;
                }
            }
            match chol_g {
                Some(ch) => (Some(ch), true),
                None => {
                    last_status = SolveStatus::NumericalFailure;
                    break;
                }
            }
        } else {
            (None, false)
        };

        // one bordered KKT solve for a given complementarity target
        let solve_direction = |rc: &[DMatrix<f64>], rc_t: f64| -> Option<Direction> {
            let mut t_vec = DVector::<f64>::zeros(m);
            let mut t0 = 0.0f64;
            let mut v_mats = Vec::with_capacity(blocks.len());
            for (b, block) in blocks.iter().enumerate() {
                let v = &rc[b] * &sinv[b];
                for (a, coeffs_a) in &block.vars {
                    t_vec[*a] += inner(coeffs_a, &v);
                }
                t0 += inner(&block.constant, &v);
                v_mats.push(v);
            }
            let g_y = -&f2 + &t_vec - &f1_vec;
            let g_lam = f3.clone();
            let g_tau = -f4 + t0 - f10 + rc_t / it.tau;

            let z_y = chol_m.solve(&g_y);
            // dy = z_y + Z_b dlam - z_c dtau
            let (w_c, w_y): (DVector<f64>, DVector<f64>) = if have_eq {
                let chol_g = chol_g.as_ref().unwrap();
                let rhs_c = bt.transpose() * &z_c + &d;
                let rhs_y = &g_lam - bt.transpose() * &z_y;
                (chol_g.solve(&rhs_c), chol_g.solve(&rhs_y))
            } else {
                (DVector::zeros(0), DVector::zeros(0))
            };
            // dlam = w_y + w_c dtau
            let dy_const = if have_eq { &z_y + &z_b * &w_y } else { z_y.clone() };
            let dy_tau = if have_eq { &z_b * &w_c - &z_c } else { -&z_c };

            // scalar row for dtau
            let coef_y = &n0 - &c;
            let mut den = h00 + it.kappa / it.tau;
            den += coef_y.dot(&dy_tau);
            let mut num = g_tau;
            num -= coef_y.dot(&dy_const);
            if have_eq {
                den += d.dot(&w_c);
                num -= d.dot(&w_y);
            }
            if !den.is_finite() || den.abs() < 1e-300 {
                return None;
            }
            let dtau = num / den;
            let dy = &dy_const + &dy_tau * dtau;
            let dlam = if have_eq { &w_y + &w_c * dtau } else { DVector::zeros(0) };

            let mut ds = Vec::with_capacity(blocks.len());
            let mut dx = Vec::with_capacity(blocks.len());
            for (b, block) in blocks.iter().enumerate() {
                let mut dsb = block.affine(&dy, dtau);
                dsb += &f1[b]; // ds = A(dy) + A0 dtau + F1
                let raw = &v_mats[b] - &it.x[b] * &dsb * &sinv[b];
                let dxb = (&raw + raw.transpose()) * 0.5;
                ds.push(dsb);
                dx.push(dxb);
            }
            let dkappa = (rc_t - it.kappa * dtau) / it.tau;
            if !dtau.is_finite() || !dkappa.is_finite() {
                return None;
            }
            Some(Direction {
                dy,
                dlam,
                dx,
                ds,
                dtau,
                dkappa,
            })
        };

        let step_bound = |dir: &Direction| -> Option<f64> {
            let mut alpha = f64::INFINITY;
            for b in 0..blocks.len() {
                alpha = alpha.min(max_psd_step(&it.x[b], &dir.dx[b])?);
                alpha = alpha.min(max_psd_step(&it.s[b], &dir.ds[b])?);
            }
            if dir.dtau < 0.0 {
                alpha = alpha.min(-it.tau / dir.dtau);
            }
            if dir.dkappa < 0.0 {
                alpha = alpha.min(-it.kappa / dir.dkappa);
            }
            Some(alpha)
        };

        // predictor: aim at zero residuals and zero complementarity
        let rc_aff: Vec<DMatrix<f64>> = blocks
            .iter()
            .enumerate()
            .map(|(b, _)| -(&it.x[b] * &it.s[b]))
            .collect();
        let aff = match solve_direction(&rc_aff, -it.tau * it.kappa) {
            Some(dirn) => dirn,
            None => {
                last_status = SolveStatus::NumericalFailure;
                break;
            }
        };
        let alpha_aff = match step_bound(&aff) {
            Some(a) => a.min(1.0),
            None => {
                last_status = SolveStatus::NumericalFailure;
                break;
            }
        };
        let mut xs_aff = (it.tau + alpha_aff * aff.dtau) * (it.kappa + alpha_aff * aff.dkappa);
        for b in 0..blocks.len() {
            let xa = &it.x[b] + &aff.dx[b] * alpha_aff;
            let sa = &it.s[b] + &aff.ds[b] * alpha_aff;
            xs_aff += (xa * sa).trace();
        }
        let mu_aff = (xs_aff / (nu as f64 + 1.0)).max(0.0);
        let sigma = ((mu_aff / mu).powi(3)).clamp(1e-8, 1.0);

        // corrector with the Mehrotra second-order term
        let rc_corr: Vec<DMatrix<f64>> = blocks
            .iter()
            .enumerate()
            .map(|(b, block)| {
                let mut rcb = -(&it.x[b] * &it.s[b]) - &aff.dx[b] * &aff.ds[b];
                for i in 0..block.size {
                    rcb[(i, i)] += sigma * mu;
                }
                rcb
            })
            .collect();
        let rc_t = sigma * mu - it.tau * it.kappa - aff.dtau * aff.dkappa;
        let dir = match solve_direction(&rc_corr, rc_t) {
            Some(dirn) => dirn,
            None => {
                last_status = SolveStatus::NumericalFailure;
                break;
            }
        };
        let alpha_max = match step_bound(&dir) {
            Some(a) => a,
            None => {
                last_status = SolveStatus::NumericalFailure;
                break;
            }
        };
        let alpha = (0.98 * alpha_max).min(1.0);
        if alpha < 1e-10 {
            stagnant += 1;
            if stagnant >= 3 {
                last_status = SolveStatus::MaxIterations;
                break;
            }
        } else {
            stagnant = 0;
        }

        it.y += &dir.dy * alpha;
        if p > 0 {
            it.lam += &dir.dlam * alpha;
        }
        for b in 0..blocks.len() {
            it.x[b] += &dir.dx[b] * alpha;
            it.s[b] += &dir.ds[b] * alpha;
            // keep exact symmetry against drift
            it.x[b] = (&it.x[b] + it.x[b].transpose()) * 0.5;
            it.s[b] = (&it.s[b] + it.s[b].transpose()) * 0.5;
        }
        it.tau += alpha * dir.dtau;
        it.kappa += alpha * dir.dkappa;

        if !it.tau.is_finite() || it.tau <= 0.0 || !it.kappa.is_finite() {
            last_status = SolveStatus::NumericalFailure;
            break;
        }
    }

    // scale back; for ray outcomes the vector is reported unscaled
    let y_out: Vec<f64> = match last_status {
        SolveStatus::Infeasible | SolveStatus::Unbounded => it.y.iter().copied().collect(),
        _ => it.y.iter().map(|v| v / it.tau).collect(),
    };
    let objective: f64 = problem.objective.iter().zip(&y_out).map(|(cv, v)| cv * v).sum();
    let dual_objective = (d.dot(&it.lam) - const_inner(&it.x)) / it.tau;
    let rel_gap = (objective - dual_objective).abs()
        / (1.0 + objective.abs() + dual_objective.abs());
    let block_min_eig: Vec<f64> = problem
        .blocks
        .iter()
        .map(|b| {
            let mmat = b.materialize(&y_out);
            if mmat.nrows() == 0 {
                0.0
            } else {
                SymmetricEigen::new(mmat)
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            }
        })
        .collect();
    let eq_residual = problem
        .equalities
        .iter()
        .map(|r| r.residual(&y_out).abs())
        .fold(0.0, f64::max);

    Ok(SDPSolution {
        status: last_status,
        y: y_out,
        objective,
        dual_objective,
        gap: rel_gap,
        iterations: iterations + 1,
        block_min_eig,
        eq_residual,
    })
}
