//! SDPA sparse format (`.dat-s`) reader and writer.
//!
//! The file encodes `min c'x` subject to `X = sum_a x_a F_a - F_0, X >= 0`,
//! so our affine form `A_0 + sum_a y_a A_a >= 0` maps to `F_a = A_a` and
//! `F_0 = -A_0`. Equalities have no native encoding; the writer splits each
//! one into a paired diagonal entry (`g >= 0` and `-g >= 0`). The reader is
//! faithful to the file and never re-fuses such pairs.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::sdpcore::{Block, SDPProblem};

/// Serialize to SDPA sparse format. Numeric fields use the shortest decimal
/// representation that round-trips, so export is byte-stable.
pub fn export_sdpa(problem: &SDPProblem) -> String {
    let mut prob = problem.clone();
    prob.normalize();

    let has_eq = !prob.equalities.is_empty();
    let nblocks = prob.blocks.len() + usize::from(has_eq);
    let mut out = String::new();
    let _ = writeln!(out, "{}", prob.num_vars);
    let _ = writeln!(out, "{}", nblocks);
    let mut sizes: Vec<String> = prob
        .blocks
        .iter()
        .map(|b| {
            if b.diagonal {
                format!("-{}", b.size)
            } else {
                format!("{}", b.size)
            }
        })
        .collect();
    if has_eq {
        sizes.push(format!("-{}", 2 * prob.equalities.len()));
    }
    let _ = writeln!(out, "{}", sizes.join(" "));
    let _ = writeln!(
        out,
        "{}",
        prob.objective
            .iter()
            .map(|c| fmt_f64(*c))
            .collect::<Vec<_>>()
            .join(" ")
    );

    // entries sorted by (matno, blockno, row, col); matno 0 is F_0
    let mut lines: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (bi, block) in prob.blocks.iter().enumerate() {
        for e in &block.entries {
            let (matno, value) = match e.var {
                None => (0, -e.value), // F_0 = -A_0
                Some(a) => (a + 1, e.value),
            };
            lines.push((matno, bi + 1, e.row + 1, e.col + 1, value));
        }
    }
    if has_eq {
        let bno = prob.blocks.len() + 1;
        for (r, row) in prob.equalities.iter().enumerate() {
            let pos = 2 * r + 1;
            let neg = 2 * r + 2;
            for &(a, v) in &row.coeffs {
                lines.push((a + 1, bno, pos, pos, v));
                lines.push((a + 1, bno, neg, neg, -v));
            }
            if row.rhs != 0.0 {
                lines.push((0, bno, pos, pos, row.rhs));
                lines.push((0, bno, neg, neg, -row.rhs));
            }
        }
    }
    lines.sort_by(|a, b| {
        (a.0, a.1, a.2, a.3)
            .partial_cmp(&(b.0, b.1, b.2, b.3))
            .unwrap()
    });
    for (matno, blockno, i, j, v) in lines {
        if v == 0.0 {
            continue;
        }
        let _ = writeln!(out, "{} {} {} {} {}", matno, blockno, i, j, fmt_f64(v));
    }
    out
}

fn fmt_f64(v: f64) -> String {
    // Display produces the shortest round-trip decimal; canonicalize -0
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{}", v)
    }
}

/// Parse SDPA sparse format. Comment lines start with `"` or `*`.
pub fn import_sdpa(text: &str) -> Result<SDPProblem> {
    let mut header: Vec<(usize, &str)> = Vec::new();
    let mut entry_lines: Vec<(usize, &str)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('"') || line.starts_with('*') {
            continue;
        }
        if line.is_empty() {
            // the size and objective lines are legitimately blank when the
            // respective counts are zero
            if (2..4).contains(&header.len()) {
                header.push((lineno + 1, line));
            }
            continue;
        }
        if header.len() < 4 {
            header.push((lineno + 1, line));
        } else {
            entry_lines.push((lineno + 1, line));
        }
    }
    if header.len() < 4 {
        let last = text.lines().count();
        return Err(Error::Parse {
            line: last,
            column: 1,
            message: "incomplete SDPA header (need 4 non-comment lines)".into(),
        });
    }

    let parse_usize = |line: usize, tok: &str, what: &str| -> Result<usize> {
        tok.parse::<usize>().map_err(|_| Error::Parse {
            line,
            column: 1,
            message: format!("{}: expected a non-negative integer, got `{}`", what, tok),
        })
    };

    // header fields may be wrapped in the separators SDPA tolerates
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| match c {
                ',' | '{' | '}' | '(' | ')' => ' ',
                other => other,
            })
            .collect()
    };

    let (l1, h1) = header[0];
    let num_vars = parse_usize(
        l1,
        clean(h1).split_whitespace().next().unwrap_or(""),
        "variable count",
    )?;
    let (l2, h2) = header[1];
    let num_blocks = parse_usize(
        l2,
        clean(h2).split_whitespace().next().unwrap_or(""),
        "block count",
    )?;

    let (l3, h3) = header[2];
    let cleaned3 = clean(h3);
    let size_tokens: Vec<&str> = cleaned3.split_whitespace().collect();
    if size_tokens.len() < num_blocks {
        return Err(Error::Parse {
            line: l3,
            column: 1,
            message: format!(
                "expected {} block sizes, found {}",
                num_blocks,
                size_tokens.len()
            ),
        });
    }
    let mut blocks: Vec<Block> = Vec::with_capacity(num_blocks);
    for tok in size_tokens.iter().take(num_blocks) {
        let v: i64 = tok.parse().map_err(|_| Error::Parse {
            line: l3,
            column: 1,
            message: format!("block size `{}` is not an integer", tok),
        })?;
        if v == 0 {
            return Err(Error::Parse {
                line: l3,
                column: 1,
                message: "block size 0 is not allowed".into(),
            });
        }
        if v < 0 {
            blocks.push(Block::diagonal((-v) as usize));
        } else {
            blocks.push(Block::new(v as usize));
        }
    }

    let (l4, h4) = header[3];
    let cleaned4 = clean(h4);
    let obj_tokens: Vec<&str> = cleaned4.split_whitespace().collect();
    if obj_tokens.len() != num_vars {
        return Err(Error::Parse {
            line: l4,
            column: 1,
            message: format!(
                "objective has {} entries for {} variables",
                obj_tokens.len(),
                num_vars
            ),
        });
    }
    let mut objective = Vec::with_capacity(num_vars);
    for tok in obj_tokens {
        objective.push(tok.parse::<f64>().map_err(|_| Error::Parse {
            line: l4,
            column: 1,
            message: format!("objective entry `{}` is not numeric", tok),
        })?);
    }

    for (lineno, line) in entry_lines {
        let cleaned = clean(line);
        let toks: Vec<&str> = cleaned.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                column: 1,
                message: format!("expected `matno blockno i j value`, got {} fields", toks.len()),
            });
        }
        let matno = parse_usize(lineno, toks[0], "matno")?;
        let blockno = parse_usize(lineno, toks[1], "blockno")?;
        let i = parse_usize(lineno, toks[2], "row index")?;
        let j = parse_usize(lineno, toks[3], "column index")?;
        let value: f64 = toks[4].parse().map_err(|_| Error::Parse {
            line: lineno,
            column: 1,
            message: format!("entry value `{}` is not numeric", toks[4]),
        })?;
        if matno > num_vars {
            return Err(Error::Parse {
                line: lineno,
                column: 1,
                message: format!("matno {} exceeds variable count {}", matno, num_vars),
            });
        }
        if blockno == 0 || blockno > num_blocks {
            return Err(Error::Parse {
                line: lineno,
                column: 1,
                message: format!(
                    "entry references block {} but only {} blocks are declared",
                    blockno, num_blocks
                ),
            });
        }
        let block = &mut blocks[blockno - 1];
        if i == 0 || j == 0 || i > block.size || j > block.size {
            return Err(Error::Parse {
                line: lineno,
                column: 1,
                message: format!(
                    "index ({}, {}) outside block {} of size {}",
                    i, j, blockno, block.size
                ),
            });
        }
        if block.diagonal && i != j {
            return Err(Error::Parse {
                line: lineno,
                column: 1,
                message: format!("off-diagonal entry ({}, {}) in diagonal block {}", i, j, blockno),
            });
        }
        let (row, col) = (i.min(j) - 1, i.max(j) - 1);
        let (var, val) = if matno == 0 {
            (None, -value) // A_0 = -F_0
        } else {
            (Some(matno - 1), value)
        };
        block.push(var, row, col, val);
    }

    let mut problem = SDPProblem {
        num_vars,
        objective,
        blocks,
        equalities: Vec::new(),
    };
    problem.normalize();
    problem.validate()?;
    Ok(problem)
}
