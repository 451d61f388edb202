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
    println!("ladder: 1.0000 1.0000 1.0170 1.0220 1.0633 1.0793 1.1264 1.1283 1.1286 1.1286");
    let opts = SolveOptions {
        max_iter: 400,
        ..SolveOptions::default()
    };
    for order in 1..=10usize {
        let relax = build_dense(&program, order, None).unwrap();
        let sol = solve(&relax.problem, &opts);
        println!(
            "order {:2} fullcap {:2}: primal {:.5} dual {:.5} gap {:.2e} {:?} iters {}",
            order,
            2 * (order - 1),
            sol.objective,
            sol.dual_objective,
            sol.gap,
            sol.status,
            sol.iterations
        );
    }
}
