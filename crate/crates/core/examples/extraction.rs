//! Recovering the atoms of a discrete measure from its moments alone: a
//! flat moment matrix has a factorization whose multiplication matrices
//! share eigenvectors at the atoms.

use gpm::certify::{check_flatness, extract_points, CertifyParams};
use gpm::model::{GpmProblem, ModelContext};
use gpm::relaxation::assemble;

fn main() -> gpm::error::Result<()> {
    let atoms = vec![vec![0.5, -0.25], vec![-0.75, 0.5], vec![0.0, 1.0]];
    let weights = vec![0.2, 0.3, 0.5];

    let mut ctx = ModelContext::new();
    let x = ctx.declare_vector("x", 2)?;
    let mut p = GpmProblem::new(ctx);
    p.minimize(x[0].poly())?;
    let sdp = assemble(&p, Some(3))?;

    // moments of the planted measure, one per relaxation variable
    let y: Vec<f64> = sdp
        .moment_vars
        .iter()
        .map(|(_, m)| {
            atoms
                .iter()
                .zip(&weights)
                .map(|(a, w)| w * m.eval(&|v| x.iter().position(|&u| u == v).map(|k| a[k])).unwrap())
                .sum()
        })
        .collect();

    let params = CertifyParams::default();
    let flat = check_flatness(&sdp, 1, &y, params.rank_tol)?;
    println!("ranks by order {:?}, flat at order {}: {}", flat.ranks, flat.order, flat.flat);
    match extract_points(&sdp, 1, &y, &flat, &params) {
        Some(e) => {
            for (pt, w) in e.points.iter().zip(&e.weights) {
                println!("atom ({:.4}, {:.4}) weight {w:.4}", pt[0], pt[1]);
            }
            println!("moment residual {:.1e}", e.residual);
        }
        None => println!("extraction failed"),
    }
    Ok(())
}
