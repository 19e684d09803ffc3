//! Lower bounds on the minimal time to steer a double integrator from
//! (1, 1) to the origin with |u| <= 1 and velocity >= -1.
//!
//! Time is rescaled by T = 3.5 so the occupation measure m1 lives on
//! [0, 1]; its mass times T bounds the minimal time from below. The
//! terminal measure m2 is pinned at the origin, and the moment equations
//! are Liouville's equation tested against monomials of degree d.

use gpm::certify::{msol, CertifyParams};
use gpm::conic::SolverParams;
use gpm::model::{GpmProblem, ModelContext, MomentConstraint, MomentExpr, Relation};
use gpm::poly::{poly_diff, PolyMatrix};

const T: f64 = 3.5;

fn problem(d: u32) -> gpm::error::Result<GpmProblem> {
    let mut ctx = ModelContext::new();
    let x1 = ctx.declare_vector("x1", 2)?;
    let u1 = ctx.declare_scalar("u1")?;
    let m1 = ctx.new_measure(&[x1[0], x1[1], u1])?;
    let x2 = ctx.declare_vector("x2", 2)?;
    ctx.new_measure(&x2)?;

    let g1 = ctx.mmon(&x1, d)?;
    let g2 = ctx.mmon(&x2, d)?;
    // test functions at the initial state (1, 1)
    let g0 = g1.eval_with(|_| Some(1.0))?;
    let f = PolyMatrix::column(vec![x1[1].poly().scale(T), u1.poly().scale(T)]);

    let mut p = GpmProblem::new(ctx);
    let time = p.ctx().mass(m1)?;
    p.minimize(time)?;
    p.subject_to(u1.pow(2), Relation::Le, 1.0.into())?;
    p.subject_to(x1[1].poly(), Relation::Ge, (-1.0).into())?;
    p.subject_to(x2[0].pow(2) + x2[1].pow(2), Relation::Le, 0.0.into())?;
    let terminal = p.ctx().mom_matrix(&g2)?;
    for (k, g) in g1.entries().iter().enumerate() {
        let lie = poly_diff(g, &x1).matmul(&f)?.entries()[0].clone();
        let rhs = if lie.is_zero() { MomentExpr::zero() } else { p.ctx().mom(&lie)? };
        p.add_moment(MomentConstraint::new(terminal[k].clone() - g0[k], Relation::Eq, rhs))?;
    }
    Ok(p)
}

fn main() -> gpm::error::Result<()> {
    for d in [2, 4, 6] {
        let mut p = problem(d)?;
        let res = msol(&mut p, None, &SolverParams::default(), &CertifyParams::default())?;
        println!(
            "d = {d}: order {}, {} variables, solver {:?}, time bound {:.4}",
            res.sdp.order,
            res.sdp.report.decision_variables,
            res.solution.status,
            T * res.objective
        );
    }
    Ok(())
}
