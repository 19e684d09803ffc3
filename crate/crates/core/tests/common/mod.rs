//! Seeded property cases shared by the proptest suites and the acceptance
//! run. Each returns a description of the first violated check.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gpm::certify::{check_flatness, extract_points, numeric_rank, CertifyParams};
use gpm::conic::{from_json, from_sdpa, solve, to_json, to_sdpa, ConeSpec, ConicProblem, ConicSolution, SolveStatus, SolverParams};
use gpm::model::{Direction, GpmProblem, ModelContext};
use gpm::poly::{Monomial, Polynomial, Var};
use gpm::relaxation::{assemble, MomentSdp};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Relaxation over `n` variables at order `r` with no constraints.
pub fn free_relaxation(n: usize, r: usize) -> (MomentSdp, Vec<Var>) {
    let mut ctx = ModelContext::new();
    let x = ctx.declare_vector("x", n).unwrap();
    let mut p = GpmProblem::new(ctx);
    p.minimize(x.iter().fold(Polynomial::zero(), |acc, v| acc + v.poly())).unwrap();
    (assemble(&p, Some(r)).unwrap(), x)
}

/// Moments of `Σ w_k δ_{p_k}` in the order of the relaxation's variables.
pub fn planted_moments(sdp: &MomentSdp, vars: &[Var], atoms: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    sdp.moment_vars
        .iter()
        .map(|(_, m)| {
            atoms
                .iter()
                .zip(weights)
                .map(|(p, w)| w * m.eval(&|v| vars.iter().position(|&u| u == v).map(|k| p[k])).unwrap())
                .sum()
        })
        .collect()
}

pub fn basis_len(n: usize, d: usize) -> usize {
    (1..=n).fold(1, |acc, i| acc * (d + i) / i)
}

/// Atoms in [-1, 1]^n at pairwise distance at least 0.3, with weights in
/// [0.2, 1] summing to one.
pub fn random_atoms(rng: &mut ChaCha8Rng, n: usize, k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut atoms: Vec<Vec<f64>> = Vec::new();
    while atoms.len() < k {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let far = atoms
            .iter()
            .all(|q| q.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>() > 0.09);
        if far {
            atoms.push(p);
        }
    }
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    (atoms, w.into_iter().map(|v| v / total).collect())
}

/// `k <= 4` atoms in dimension `n <= 3` are recovered from their moments.
pub fn planted_extraction(seed: u64, n: usize, k: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (atoms, weights) = random_atoms(&mut rng, n, k);
    // k atoms on a line only separate at degree k-1, so order k makes
    // M_r and M_{r-1} both rank k in every configuration
    let (sdp, x) = free_relaxation(n, k);
    let y = planted_moments(&sdp, &x, &atoms, &weights);
    // exact moments: a tight rank threshold is fair, the default one is
    // sized for solver output
    let params = CertifyParams { rank_tol: 1e-8, ..CertifyParams::default() };
    let flat = check_flatness(&sdp, 1, &y, params.rank_tol).map_err(|e| e.to_string())?;
    ensure!(flat.flat && flat.rank == k, "ranks {:?} for {k} atoms", flat.ranks);
    let e = extract_points(&sdp, 1, &y, &flat, &params).ok_or("extraction failed")?;
    ensure!(e.points.len() == k, "{} points for {k} atoms", e.points.len());
    for (p, w) in atoms.iter().zip(&weights) {
        let hit = e.points.iter().zip(&e.weights).any(|(q, v)| {
            q.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-6) && (v - w).abs() < 1e-6
        });
        ensure!(hit, "atom {p:?} (weight {w}) not among {:?}", e.points);
    }
    Ok(())
}

/// The order-`r` moment matrix of a `k`-atomic measure is PSD of rank at
/// most `k`.
pub fn discrete_moment_matrix(seed: u64, n: usize, k: usize, r: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (atoms, weights) = random_atoms(&mut rng, n, k);
    let (sdp, x) = free_relaxation(n, r);
    let y = planted_moments(&sdp, &x, &atoms, &weights);
    let m = sdp.moment_matrix_values(1, r, &y).map_err(|e| e.to_string())?.1;
    ensure!(m.nrows() == basis_len(n, r), "size {}", m.nrows());
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let scale = m.amax().max(1.0);
    ensure!(eig.min() > -1e-10 * scale, "min eigenvalue {}", eig.min());
    let rank = numeric_rank(&m, 1e-9);
    ensure!(rank <= k, "rank {rank} above {k} atoms");
    Ok(())
}

pub fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

pub fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

fn min_problem(cone: ConeSpec, a: Vec<Vec<(usize, f64)>>, b: Vec<f64>, c: Vec<f64>) -> ConicProblem {
    ConicProblem { cone, a, b, c, offset: 0.0, sense: Direction::Min }
}

// A row of A for the symmetric matrix `m` placed in the PSD block at `off`.
fn push_block(row: &mut Vec<(usize, f64)>, m: &DMatrix<f64>, off: usize) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..n {
            if m[(i, j)] != 0.0 {
                row.push((off + j * n + i, m[(i, j)]));
            }
        }
    }
}

/// Weak duality, a closed gap, primal residuals and cone membership of
/// both `x` and `c - A'y`.
pub fn certificates(p: &ConicProblem, s: &ConicSolution) -> Check {
    let cx: f64 = p.c.iter().zip(&s.x).map(|(c, x)| c * x).sum();
    let by: f64 = p.b.iter().zip(&s.y).map(|(b, y)| b * y).sum();
    let scale = 1.0 + cx.abs() + by.abs();
    ensure!(by <= cx + 1e-7 * scale, "weak duality: b'y {by} > c'x {cx}");
    ensure!((cx - by).abs() < 1e-6 * scale, "gap: c'x {cx} vs b'y {by}");
    for (row, b) in p.a.iter().zip(&p.b) {
        let ax: f64 = row.iter().map(|&(k, v)| v * s.x[k]).sum();
        ensure!((ax - b).abs() < 1e-7 * (1.0 + b.abs()), "Ax - b = {}", ax - b);
    }
    let slack = p.slack(&s.y);
    for k in p.cone.f..p.cone.f + p.cone.l {
        ensure!(s.x[k] > -1e-8 && slack[k] > -1e-8, "orthant entry {k}: x {} s {}", s.x[k], slack[k]);
    }
    for (&n, &off) in p.cone.s.iter().zip(&p.cone.psd_offsets()) {
        for v in [&s.x, &slack] {
            let m = DMatrix::from_column_slice(n, n, &v[off..off + n * n]);
            let m = (&m + m.transpose()) * 0.5;
            let e = SymmetricEigen::new(m).eigenvalues.min();
            ensure!(e > -1e-7, "PSD block eigenvalue {e}");
        }
    }
    Ok(())
}

/// `min <C,X> + c'x  s.t.  tr X + Σx = 1` has optimum `min(λ_min(C), min c)`.
pub fn eigenvalue_oracle(seed: u64, n: usize, l: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cm = random_sym(&mut rng, n);
    let cl: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut c = cl.clone();
    c.extend(cm.iter());
    let mut row: Vec<(usize, f64)> = (0..l).map(|k| (k, 1.0)).collect();
    push_block(&mut row, &DMatrix::identity(n, n), l);
    let p = min_problem(ConeSpec { f: 0, l, s: vec![n] }, vec![row], vec![1.0], c);
    let s = solve(&p, &SolverParams::default());
    ensure!(s.status == SolveStatus::Solved, "status {:?}", s.status);
    let oracle = cl.iter().cloned().fold(SymmetricEigen::new(cm).eigenvalues.min(), f64::min);
    let cx: f64 = p.c.iter().zip(&s.x).map(|(c, x)| c * x).sum();
    ensure!((cx - oracle).abs() < 1e-6, "optimum {cx} vs oracle {oracle}");
    certificates(&p, &s)
}

/// Random SDP with strictly feasible primal and dual points by
/// construction, so the optimal gap is zero.
pub fn strictly_feasible_sdp(seed: u64, m: usize, n1: usize, n2: usize, l: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // the IPM assumes A has full row rank
    let m = m.min(l + n1 * (n1 + 1) / 2 + n2 * (n2 + 1) / 2);
    let cone = ConeSpec { f: 0, l, s: vec![n1, n2] };
    let offs = cone.psd_offsets();
    let x0_lp: Vec<f64> = (0..l).map(|_| rng.random_range(0.5..2.0)).collect();
    let x0 = [random_pd(&mut rng, n1), random_pd(&mut rng, n2)];
    let mut a = Vec::new();
    let mut b = Vec::new();
    for _ in 0..m {
        let mut row: Vec<(usize, f64)> = (0..l).map(|k| (k, rng.random_range(-1.0..1.0))).collect();
        let mut bi: f64 = row.iter().map(|&(k, v)| v * x0_lp[k]).sum();
        for (blk, &off) in x0.iter().zip(&offs) {
            let ai = random_sym(&mut rng, blk.nrows());
            bi += ai.dot(blk);
            push_block(&mut row, &ai, off);
        }
        a.push(row);
        b.push(bi);
    }
    // c = A'y0 + s0 with s0 interior
    let y0: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut c = vec![0.0; cone.dim()];
    for ck in c.iter_mut().take(l) {
        *ck = rng.random_range(0.5..2.0);
    }
    for (&off, &n) in offs.iter().zip(&cone.s) {
        let s0 = random_pd(&mut rng, n);
        c[off..off + n * n].copy_from_slice(s0.as_slice());
    }
    for (row, yi) in a.iter().zip(&y0) {
        for &(k, v) in row {
            c[k] += v * yi;
        }
    }
    let p = min_problem(cone, a, b, c);
    let s = solve(&p, &SolverParams::default());
    ensure!(s.status == SolveStatus::Solved, "status {:?}", s.status);
    certificates(&p, &s)
}

/// Random conic problem with symmetric PSD data.
pub fn random_conic(seed: u64, f: usize, l: usize, s: Vec<usize>, m: usize, max: bool) -> ConicProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cone = ConeSpec { f, l, s };
    let offs = cone.psd_offsets();
    let sym_vec = |rng: &mut ChaCha8Rng| {
        let mut v = vec![0.0; cone.dim()];
        for vk in v.iter_mut().take(f + l) {
            if rng.random_bool(0.6) {
                *vk = rng.random_range(-3.0..3.0);
            }
        }
        for (&n, &off) in cone.s.iter().zip(&offs) {
            for j in 0..n {
                for i in 0..=j {
                    if rng.random_bool(0.6) {
                        let x: f64 = rng.random_range(-3.0..3.0);
                        v[off + j * n + i] = x;
                        v[off + i * n + j] = x;
                    }
                }
            }
        }
        v
    };
    let c = sym_vec(&mut rng);
    let a = (0..m)
        .map(|_| sym_vec(&mut rng).into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect())
        .collect();
    let b = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
    ConicProblem {
        cone,
        a,
        b,
        c,
        offset: rng.random_range(-2.0..2.0),
        sense: if max { Direction::Max } else { Direction::Min },
    }
}

/// JSON always round-trips exactly; SDPA does when there is no free cone
/// and refuses otherwise.
pub fn file_round_trips(p: &ConicProblem) -> Check {
    let json = to_json(p).map_err(|e| e.to_string())?;
    ensure!(from_json(&json).map_err(|e| e.to_string())? == *p, "JSON round trip differs");
    match to_sdpa(p) {
        Ok(text) => {
            ensure!(p.cone.f == 0, "SDPA accepted a free cone");
            ensure!(from_sdpa(&text).map_err(|e| e.to_string())? == *p, "SDPA round trip differs");
        }
        Err(_) => ensure!(p.cone.f > 0, "SDPA refused a problem without free cone"),
    }
    Ok(())
}

pub fn build_poly(x: &[Var], terms: &[(Vec<u32>, f64)]) -> Polynomial {
    terms.iter().fold(Polynomial::zero(), |acc, (e, c)| acc + Polynomial::monomial(Monomial::from_exponents(x, e), *c))
}

/// Evaluation respects `+`, `-`, `*` and powers.
pub fn ring_homomorphism(p: &[(Vec<u32>, f64)], q: &[(Vec<u32>, f64)], pt: &[f64], k: u32) -> Check {
    let mut ctx = ModelContext::new();
    let x = ctx.declare_vector("x", pt.len()).unwrap();
    let (p, q) = (build_poly(&x, p), build_poly(&x, q));
    let at: BTreeMap<Var, f64> = x.iter().cloned().zip(pt.iter().cloned()).collect();
    let ev = |r: &Polynomial| r.eval(&at).unwrap();
    let (a, b) = (ev(&p), ev(&q));
    let close = |u: f64, v: f64| (u - v).abs() < 1e-9 * (1.0 + v.abs());
    ensure!(close(ev(&(&p + &q)), a + b), "sum");
    ensure!(close(ev(&(&p - &q)), a - b), "difference");
    ensure!(close(ev(&(&p * &q)), a * b), "product");
    ensure!(close(ev(&p.pow(k)), a.powi(k as i32)), "power {k}");
    let copy = p.clone();
    ensure!((&p - &copy).is_zero(), "p - p is not zero");
    Ok(())
}

/// Product rule and agreement with central differences, in the first
/// variable.
pub fn derivative_checks(p: &[(Vec<u32>, f64)], q: &[(Vec<u32>, f64)], pt: &[f64]) -> Check {
    let mut ctx = ModelContext::new();
    let x = ctx.declare_vector("x", pt.len()).unwrap();
    let (p, q) = (build_poly(&x, p), build_poly(&x, q));
    let v = x[0];
    let lhs = (&p * &q).diff(v);
    let rhs = &(&p.diff(v) * &q) + &(&p * &q.diff(v));
    ensure!((&lhs - &rhs).terms().all(|(_, c)| c.abs() < 1e-9), "product rule");
    let at = |h: f64| -> BTreeMap<Var, f64> {
        x.iter().zip(pt).enumerate().map(|(i, (&xi, &pi))| (xi, if i == 0 { pi + h } else { pi })).collect()
    };
    let h = 1e-5;
    let fd = (p.eval(&at(h)).unwrap() - p.eval(&at(-h)).unwrap()) / (2.0 * h);
    let exact = p.diff(v).eval(&at(0.0)).unwrap();
    ensure!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "central difference {fd} vs {exact}");
    Ok(())
}

/// Random polynomial terms over `vars` variables from a seed.
pub fn random_terms(rng: &mut ChaCha8Rng, vars: usize) -> Vec<(Vec<u32>, f64)> {
    let n = rng.random_range(0..6);
    (0..n)
        .map(|_| ((0..vars).map(|_| rng.random_range(0..3)).collect(), rng.random_range(-3.0..3.0)))
        .collect()
}
