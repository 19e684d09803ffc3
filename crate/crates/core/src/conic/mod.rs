//! Conic form of a moment relaxation and its file formats.
//!
//! Problems are stored in the SeDuMi convention. The primal is
//! `min cᵀx  s.t.  Ax = b, x ∈ K` and the dual is
//! `max bᵀy  s.t.  c − Aᵀy ∈ K`, where `K` is a product of a free cone, a
//! nonnegative orthant and PSD cones (vectorised column-major, full `n²`
//! entries). The dual variables `y` are the decision variables of the
//! relaxation.

mod json;
mod presolve;
mod sdpa;
mod solver;

pub use json::{from_json, read_json, to_json, write_json};
pub use presolve::{presolve, presolve_eliminate_equalities, Presolved};
pub use sdpa::{from_sdpa, read_sdpa, to_sdpa, write_sdpa};
pub use solver::{solve, solve_standard, ConicSolution, SolveStatus, SolverParams};

use serde::{Deserialize, Serialize};

use crate::model::Direction;
use crate::relaxation::MomentSdp;

/// Cone dimensions: `f` free, `l` nonnegative, PSD blocks of sizes `s`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub f: usize,
    pub l: usize,
    pub s: Vec<usize>,
}

impl ConeSpec {
    /// Length of a vectorised point of the cone.
    pub fn dim(&self) -> usize {
        self.f + self.l + self.s.iter().map(|n| n * n).sum::<usize>()
    }

    /// Column offset of each PSD block.
    pub fn psd_offsets(&self) -> Vec<usize> {
        let mut off = self.f + self.l;
        self.s
            .iter()
            .map(|n| {
                let o = off;
                off += n * n;
                o
            })
            .collect()
    }
}

/// Conic program in SeDuMi form. `a` holds one sparse row per dual
/// variable, with column indices sorted. The objective of the originating
/// moment problem is `±bᵀy + offset` (minus for minimisation).
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProblem {
    pub cone: ConeSpec,
    pub a: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub offset: f64,
    pub sense: Direction,
}

impl ConicProblem {
    /// Number of dual variables.
    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Objective of the moment problem for dual value `bᵀy`.
    pub fn objective_from_dual(&self, bty: f64) -> f64 {
        sense_sign(self.sense) * bty + self.offset
    }

    /// `c − Aᵀy`.
    pub fn slack(&self, y: &[f64]) -> Vec<f64> {
        let mut s = self.c.clone();
        for (row, &yi) in self.a.iter().zip(y) {
            for &(k, v) in row {
                s[k] -= v * yi;
            }
        }
        s
    }

    pub fn nnz(&self) -> usize {
        self.a.iter().map(Vec::len).sum()
    }
}

pub(crate) fn sense_sign(sense: Direction) -> f64 {
    match sense {
        Direction::Min => -1.0,
        Direction::Max => 1.0,
    }
}

/// Converts an assembled relaxation to conic form. Equality rows become
/// the free cone, inequality rows the orthant, and each matrix block a PSD
/// cone; `y` coincides with the relaxation's decision variables.
pub fn to_conic(sdp: &MomentSdp) -> ConicProblem {
    let cone = ConeSpec {
        f: sdp.eq_rows.len(),
        l: sdp.ineq_rows.len(),
        s: sdp.blocks.iter().map(|b| b.size).collect(),
    };
    let m = sdp.num_free;
    let mut a: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut c = vec![0.0; cone.dim()];
    let mut put = |col: usize, form: &crate::affine::Affine| {
        c[col] = form.constant;
        for &(j, v) in form.coeffs() {
            a[j].push((col, -v));
        }
    };
    for (k, row) in sdp.eq_rows.iter().chain(&sdp.ineq_rows).enumerate() {
        put(k, row);
    }
    for (block, off) in sdp.blocks.iter().zip(cone.psd_offsets()) {
        let n = block.size;
        for j in 0..n {
            for i in 0..n {
                put(off + j * n + i, block.entry(i, j));
            }
        }
    }
    for row in &mut a {
        row.sort_by_key(|&(k, _)| k);
    }
    let sign = sense_sign(sdp.direction);
    let mut b = vec![0.0; m];
    for &(j, v) in sdp.objective.coeffs() {
        b[j] = sign * v;
    }
    ConicProblem {
        cone,
        a,
        b,
        c,
        offset: sdp.objective.constant,
        sense: sdp.direction,
    }
}
