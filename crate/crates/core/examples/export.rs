//! Writing a relaxation as SDPA and JSON, reading it back and solving the
//! imported problem.

use gpm::conic::{presolve_eliminate_equalities, read_json, read_sdpa, solve, to_conic, write_json, write_sdpa, SolverParams};
use gpm::dsl::parse_model;
use gpm::relaxation::assemble;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = parse_model(
        "var x;
         min x^2 - 2*x;
         mom(x^2 + 2*x + 1) == 1;",
    )?;
    let sdp = assemble(&model.problem, model.order)?;
    let cp = to_conic(&sdp);
    let dir = std::env::temp_dir();

    // JSON keeps equality rows as a free cone
    let json = dir.join("rational.json");
    write_json(&cp, &json)?;
    assert_eq!(read_json(&json)?, cp);

    // SDPA has no free cone, so equalities are eliminated first
    let reduced = presolve_eliminate_equalities(&cp).expect("consistent equalities");
    let sdpa = dir.join("rational.dat-s");
    write_sdpa(&reduced.problem, &sdpa)?;
    println!("{}", std::fs::read_to_string(&sdpa)?);

    let back = read_sdpa(&sdpa)?;
    let sol = solve(&back, &SolverParams::default());
    println!("imported SDPA: {:?}, objective {:.4}", sol.status, sol.objective);
    let sol = solve(&read_json(&json)?, &SolverParams::default());
    println!("imported JSON: {:?}, objective {:.4}", sol.status, sol.objective);
    Ok(())
}
