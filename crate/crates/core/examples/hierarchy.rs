//! A nonconvex quadratic program solved by relaxations of growing order.
//! Bounds increase until the order-4 relaxation is exact and certified.

use gpm::certify::{msol, CertifyParams};
use gpm::conic::SolverParams;
use gpm::model::{GpmProblem, ModelContext, Relation};

fn main() -> gpm::error::Result<()> {
    let mut ctx = ModelContext::new();
    let x = ctx.declare_vector("x", 3)?;
    let mut p = GpmProblem::new(ctx);
    p.minimize(-2.0 * x[0] + x[1] - x[2])?;
    let g = 24.0 - 20.0 * x[0] + 9.0 * x[1] - 13.0 * x[2] + 4.0 * x[0].pow(2) - 4.0 * x[0] * x[1]
        + 4.0 * x[0] * x[2]
        + 2.0 * x[1].pow(2)
        - 2.0 * x[1] * x[2]
        + 2.0 * x[2].pow(2);
    p.subject_to(g, Relation::Ge, 0.0.into())?;
    p.subject_to(x[0] + x[1] + x[2], Relation::Le, 4.0.into())?;
    p.subject_to(3.0 * x[1] + x[2], Relation::Le, 6.0.into())?;
    for (v, hi) in [(x[0], Some(2.0)), (x[1], None), (x[2], Some(3.0))] {
        p.subject_to(v.poly(), Relation::Ge, 0.0.into())?;
        if let Some(hi) = hi {
            p.subject_to(v.poly(), Relation::Le, hi.into())?;
        }
    }

    for r in 1..=4 {
        let res = msol(&mut p, Some(r), &SolverParams::default(), &CertifyParams::default())?;
        let rep = &res.sdp.report;
        println!(
            "order {r}: {:>3} variables, {:<16} status {:>2}  bound {:.4}",
            rep.decision_variables,
            rep.psd_summary(),
            res.status,
            res.objective
        );
        for e in &res.extraction {
            for pt in &e.points {
                println!("          minimizer ({:.4}, {:.4}, {:.4})", pt[0], pt[1], pt[2]);
            }
        }
    }
    Ok(())
}
