//! Minimizing a rational function (x^2 - 2x) / (x^2 + 2x + 1): the
//! denominator normalizes the measure through a moment constraint instead
//! of a unit mass.

use gpm::certify::{msol, CertifyParams};
use gpm::conic::SolverParams;
use gpm::model::{GpmProblem, ModelContext, MomentConstraint, MomentExpr, Relation};

fn main() -> gpm::error::Result<()> {
    let mut ctx = ModelContext::new();
    let x = ctx.declare_scalar("x")?;
    let g0 = x.pow(2) - 2.0 * x;
    let h0 = ctx.mom(&(x.pow(2) + 2.0 * x + 1.0))?;
    println!("normalization: {} == 1", ctx.fmt_moment(&h0));

    let mut p = GpmProblem::new(ctx);
    p.minimize(g0)?;
    p.add_moment(MomentConstraint::new(h0, Relation::Eq, MomentExpr::constant(1.0)))?;
    let res = msol(&mut p, None, &SolverParams::default(), &CertifyParams::default())?;
    println!("mass fixed to one: {:?}", res.sdp.report.mass_set_to_one);
    println!("status = {}  obj = {:.4}", res.status, res.objective);
    println!("x = {:?}", p.ctx().eval_poly(&x.poly())?);
    Ok(())
}
