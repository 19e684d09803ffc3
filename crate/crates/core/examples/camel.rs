//! Global minimum of the six-hump camel back function, with the two
//! minimizers read off the moment matrix.

use gpm::certify::{msol, CertifyParams};
use gpm::conic::SolverParams;
use gpm::model::{GpmProblem, ModelContext};

fn main() -> gpm::error::Result<()> {
    let mut ctx = ModelContext::new();
    let x1 = ctx.declare_scalar("x1")?;
    let x2 = ctx.declare_scalar("x2")?;
    let g0 = 4.0 * x1.pow(2) + x1 * x2 - 4.0 * x2.pow(2) - 2.1 * x1.pow(4) + 4.0 * x2.pow(4) + x1.pow(6) / 3.0;
    println!("g0 = {}", ctx.fmt_poly(&g0));

    let mut p = GpmProblem::new(ctx);
    p.minimize(g0)?;
    // order defaults to half the degree: 3
    let res = msol(&mut p, None, &SolverParams::default(), &CertifyParams::default())?;
    print!("{}", res.sdp.report);
    println!("status = {}  obj = {:.4}", res.status, res.objective);

    // with status 1 the atoms become the measure's support
    let ctx = p.ctx();
    println!("x1 at minimizers: {:?}", ctx.eval_poly(&x1.poly())?);
    println!("x2 at minimizers: {:?}", ctx.eval_poly(&x2.poly())?);
    for (m, y) in res.moment_vector(1)?.iter().take(6) {
        println!("  y[{}] = {y:.4}", ctx.fmt_monomial(m));
    }
    Ok(())
}
