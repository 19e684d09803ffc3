//! Building blocks of a moment problem: measures, moment expressions,
//! support and moment constraints, and the errors for mixing measures.

use gpm::model::{GpmProblem, ModelContext, MomentConstraint, MomentExpr, Relation};
use gpm::poly::PolyMatrix;

fn main() -> gpm::error::Result<()> {
    let mut ctx = ModelContext::new();
    let x = ctx.declare_scalar("x")?;
    let m1 = ctx.measure_of(x)?;
    let y = ctx.declare_vector("y", 2)?;
    let m2 = ctx.new_measure(&y)?;
    println!("x on measure {m1}, y on measure {m2}");

    println!("{}", ctx.fmt_moment(&ctx.mom(&(1.0 + 2.0 * x + 3.0 * x.pow(2)))?));
    let yy = PolyMatrix::from_vars(&y).matmul(&PolyMatrix::from_vars(&y).transpose())?;
    for e in ctx.mom_matrix(&yy)? {
        println!("  {}", ctx.fmt_moment(&e));
    }
    println!("1 + mom(x) = {}", ctx.fmt_moment(&(MomentExpr::constant(1.0) + ctx.mom(&x.poly())?)));
    println!("mass(y)    = {}", ctx.fmt_moment(&ctx.mass_of(&y)?));

    if let Err(e) = ctx.mom(&(x * y[0])) {
        println!("mom(x*y(1)): {e}");
    }
    let mx = ctx.mom(&x.poly())?;
    let my = ctx.mom(&y[0].poly())?;
    if let Err(e) = mx.checked_mul(&my) {
        println!("mom(x)*mom(y(1)): {e}");
    }

    let lhs = ctx.mom(&(x.pow(2) + 2.0))?;
    let rhs = MomentExpr::constant(1.0) + ctx.mom(&(y[0].pow(3) * y[1]))?;
    let mut p = GpmProblem::new(ctx);
    p.add_moment(MomentConstraint::new(lhs, Relation::Eq, rhs))?;
    p.subject_to(2.0 * x.pow(2) + x.pow(3), Relation::Eq, 2.0 + x)?;
    p.subject_to(y[0].pow(2) + y[1].pow(2), Relation::Le, 1.0.into())?;
    if let Err(e) = p.subject_to(x + y[0], Relation::Le, 1.0.into()) {
        println!("x + y(1) <= 1: {e}");
    }
    println!("{} support and {} moment constraints", p.support_constraints().len(), p.moment_constraints().len());
    Ok(())
}
