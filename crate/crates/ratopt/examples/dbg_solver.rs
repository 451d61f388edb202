use ratopt::gmp::{RationalProgram, RationalTerm, Sense};
use ratopt::polyalg::{Monomial, Polynomial};
use ratopt::relax::build_dense;
use ratopt::sdpcore::{solve, SolveOptions};

fn upoly(terms: &[(u32, f64)]) -> Polynomial {
    Polynomial::from_terms(1, terms.iter().map(|&(e, c)| (Monomial::new(vec![e]), c))).unwrap()
}

fn main() {
    let t1 = RationalTerm::new(
        upoly(&[(0, 1.0), (1, 1.0), (2, 1.0)]),
        upoly(&[(0, 1.0), (2, 1.0)]),
    )
    .unwrap();
    let t2 = RationalTerm::new(upoly(&[(0, 1.0), (2, 1.0)]), upoly(&[(0, 1.0), (2, 2.0)])).unwrap();
    let program = RationalProgram::new(1, vec![t1, t2], Sense::Minimize).unwrap();
    let relax = build_dense(&program, 2, Some(2)).unwrap();
    println!("num_vars {}", relax.problem.num_vars);
    println!("objective {:?}", relax.problem.objective);
    for (i, b) in relax.problem.blocks.iter().enumerate() {
        println!("block {} size {} entries {:?}", i, b.size, b.entries);
    }
    for (i, e) in relax.problem.equalities.iter().enumerate() {
        println!("eq {}: {:?} = {}", i, e.coeffs, e.rhs);
    }
    let sol = solve(&relax.problem, &SolveOptions::default());
    println!(
        "status {:?} obj {} dual {} gap {} iters {}",
        sol.status, sol.objective, sol.dual_objective, sol.gap, sol.iterations
    );
    println!("y {:?}", sol.y);
}
