//! Models written in the text format: parse, print, build and solve.

use gpm::certify::{msol, CertifyParams};
use gpm::conic::SolverParams;
use gpm::dsl::{parse, parse_model};

const MODEL: &str = "
# two measures tied by moment constraints
var x;
measure m2;
var y[2];
min mom(x^2 + 2);
mom(x^2 + 2) == 1 + mom(y(1)^3*y(2));
mass(x) + mass(y) <= 2;
2*x^2 + x^3 == 2 + x;   # x in {1, -1, -2}
x^2 <= 4;
y(1)^2 + y(2)^2 <= 1;
";

fn main() -> gpm::error::Result<()> {
    print!("{}", parse(MODEL)?);

    let mut m = parse_model(MODEL)?;
    let res = msol(&mut m.problem, m.order, &SolverParams::default(), &CertifyParams::default())?;
    println!("status = {}  obj = {:.4}", res.status, res.objective);
    for e in &res.extraction {
        println!("measure {}: atoms {:.4?} weights {:.4?}", e.measure, e.points, e.weights);
    }

    // errors point at the offending statement
    for bad in ["var x;\nmin x +* 1;", "var x; measure m; var y;\nmin mom(x*y);"] {
        println!("{}", parse_model(bad).unwrap_err());
    }
    Ok(())
}
