//! Best-effort bridge to an external SDPA-compatible solver binary.
//!
//! The problem is written in `.dat-s` form, the binary is invoked as
//! `solver <input> <output>`, and the output file is scanned for the
//! objective and variable vector in the SDPA result layout. Nothing in the
//! library depends on this path; it exists for cross-checking.

use std::path::Path;
use std::process::Command;

use crate::error::{Error, Result};
use crate::sdpcore::{export_sdpa, SDPProblem, SDPSolution, SolveStatus};

pub fn solve_external(problem: &SDPProblem, solver_path: &Path) -> Result<SDPSolution> {
    let dir = std::env::temp_dir().join(format!("ratopt-ext-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let input = dir.join("problem.dat-s");
    let output = dir.join("problem.out");
    std::fs::write(&input, export_sdpa(problem))?;

    let status = Command::new(solver_path)
        .arg(&input)
        .arg(&output)
        .output()
        .map_err(|e| Error::ExternalSolver(format!("failed to launch {:?}: {}", solver_path, e)))?;
    if !status.status.success() {
        return Err(Error::ExternalSolver(format!(
            "{:?} exited with {}",
            solver_path, status.status
        )));
    }
    let text = std::fs::read_to_string(&output)
        .map_err(|e| Error::ExternalSolver(format!("cannot read solver output: {}", e)))?;
    parse_sdpa_output(&text, problem)
}

fn parse_brace_vector(text: &str) -> Vec<f64> {
    text.chars()
        .map(|c| match c {
            '{' | '}' | ',' | '=' => ' ',
            other => other,
        })
        .collect::<String>()
        .split_whitespace()
        .filter_map(|t| t.parse().ok())
        .collect()
}

fn parse_sdpa_output(text: &str, problem: &SDPProblem) -> Result<SDPSolution> {
    let mut primal = None;
    let mut dual = None;
    let mut xvec: Option<Vec<f64>> = None;
    let mut phase_optimal = false;
    let mut collecting: Option<String> = None;
    for line in text.lines() {
        let line = line.trim();
        if let Some(buf) = collecting.as_mut() {
            buf.push(' ');
            buf.push_str(line);
            if line.contains('}') {
                xvec = Some(parse_brace_vector(collecting.take().unwrap().as_str()));
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("objValPrimal") {
            primal = rest.trim_start_matches(['=', ' ']).trim().parse::<f64>().ok();
        } else if let Some(rest) = line.strip_prefix("objValDual") {
            dual = rest.trim_start_matches(['=', ' ']).trim().parse::<f64>().ok();
        } else if line.starts_with("phase.value") && line.contains("pdOPT") {
            phase_optimal = true;
        } else if let Some(rest) = line.strip_prefix("xVec") {
            if rest.contains('}') {
                xvec = Some(parse_brace_vector(rest));
            } else {
                collecting = Some(rest.to_string());
            }
        }
    }
    let y = match xvec {
        Some(v) if v.len() == problem.num_vars => v,
        _ => {
            return Err(Error::ExternalSolver(
                "solver output did not contain an xVec of the right length".into(),
            ))
        }
    };
    // SDPA's primal corresponds to our minimization over y
    let objective = primal.unwrap_or_else(|| {
        problem
            .objective
            .iter()
            .zip(&y)
            .map(|(c, v)| c * v)
            .sum()
    });
    let dual_objective = dual.unwrap_or(objective);
    let gap = (objective - dual_objective).abs() / (1.0 + objective.abs() + dual_objective.abs());
    let block_min_eig = problem
        .blocks
        .iter()
        .map(|b| {
            let m = b.materialize(&y);
            nalgebra::SymmetricEigen::new(m)
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let eq_residual = problem
        .equalities
        .iter()
        .map(|r| r.residual(&y).abs())
        .fold(0.0, f64::max);
    Ok(SDPSolution {
        status: if phase_optimal {
            SolveStatus::Optimal
        } else {
            SolveStatus::MaxIterations
        },
        y,
        objective,
        dual_objective,
        gap,
        iterations: 0,
        block_min_eig,
        eq_residual,
    })
}
