//! Max-Cut on a 9-node graph. Writing x_i^2 == 1 with a monic monomial on
//! the left lets the relaxation substitute moments; x_i^2 - 1 == 0 keeps
//! them as equality rows, which presolve then eliminates.

use std::time::Instant;

use gpm::certify::{msol, CertifyParams};
use gpm::conic::{presolve_eliminate_equalities, to_conic, SolverParams};
use gpm::model::{GpmProblem, ModelContext, Relation};
use gpm::poly::Polynomial;
use gpm::relaxation::assemble;

fn graph() -> Vec<Vec<f64>> {
    let n = 9;
    let mut w = vec![vec![0.0; n]; n];
    let mut edge = |i: usize, j: usize| {
        w[i][j] = 1.0;
        w[j][i] = 1.0;
    };
    for i in 0..8 {
        edge(i, i + 1);
    }
    for i in 0..7 {
        edge(i, i + 2);
    }
    edge(0, 7);
    edge(1, 8);
    edge(0, 8);
    w
}

fn problem(substitute: bool) -> gpm::error::Result<GpmProblem> {
    let w = graph();
    let n = w.len();
    let mut ctx = ModelContext::new();
    let x = ctx.declare_vector("x", n)?;
    // x'Qx with Q = (diag(We) - W) / 4
    let mut cut = Polynomial::zero();
    for i in 0..n {
        let deg: f64 = w[i].iter().sum();
        cut = cut + (deg / 4.0) * x[i].pow(2);
        for j in 0..n {
            if i != j && w[i][j] != 0.0 {
                cut = cut - (w[i][j] / 4.0) * x[i] * x[j];
            }
        }
    }
    let mut p = GpmProblem::new(ctx);
    p.maximize(cut)?;
    for xi in x {
        if substitute {
            p.subject_to(xi.pow(2), Relation::Eq, 1.0.into())?;
        } else {
            p.subject_to(xi.pow(2) - 1.0, Relation::Eq, 0.0.into())?;
        }
    }
    Ok(p)
}

fn main() -> gpm::error::Result<()> {
    let sub = problem(true)?;
    print!("{}", assemble(&sub, Some(3))?.report.log());

    let plain = assemble(&problem(false)?, Some(3))?;
    println!();
    print!("{}", plain.report);
    let reduced = presolve_eliminate_equalities(&to_conic(&plain)).expect("consistent equalities");
    println!(
        "presolve: {} free parameters, {} redundant equality rows",
        reduced.problem.m(),
        reduced.dependent_rows
    );

    let t = Instant::now();
    let mut p = sub;
    let res = msol(&mut p, Some(3), &SolverParams::default(), &CertifyParams::default())?;
    println!("max cut bound {:.4} (status {}) in {:.1} s", res.objective, res.status, t.elapsed().as_secs_f64());
    Ok(())
}
