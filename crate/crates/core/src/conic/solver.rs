//! Primal-dual interior point method for [`ConicProblem`].
//!
//! Infeasible path-following with the HKM search direction and Mehrotra's
//! predictor-corrector. The Schur complement `M_ij = tr(A_i X A_j S⁻¹)`
//! is formed from the sparse rows of `A`, one PSD block at a time, and
//! factored densely.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{presolve, ConicProblem};

#[derive(Clone, Debug)]
pub struct SolverParams {
    /// Target for the relative gap and the scaled residuals.
    pub eps: f64,
    pub max_iter: usize,
    /// Fraction of the step to the cone boundary.
    pub step_fraction: f64,
    /// Smallest diagonal regularization tried on the Schur complement,
    /// relative to its largest diagonal entry.
    pub reg_floor: f64,
    /// Print one line per iteration to stderr.
    pub verbose: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            eps: 1e-9,
            max_iter: 100,
            step_fraction: 0.98,
            reg_floor: 1e-12,
            verbose: false,
        }
    }
}

impl SolverParams {
    /// Defaults, with `eps` overridden by the `GPM_EPS` environment variable.
    pub fn from_env() -> Self {
        let mut p = SolverParams::default();
        if let Some(eps) = std::env::var("GPM_EPS").ok().and_then(|s| s.trim().parse().ok()) {
            p.eps = eps;
        }
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    /// Converged to the requested accuracy.
    Solved,
    /// Stalled with residuals within a thousand times the target.
    Inaccurate,
    /// The dual (moment) side has no feasible point.
    Infeasible,
    /// The dual (moment) objective is unbounded.
    Unbounded,
    /// No usable iterate.
    Failed,
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Dual variables: the decision variables of the relaxation.
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    /// `cᵀx`.
    pub primal_obj: f64,
    /// `bᵀy`.
    pub dual_obj: f64,
    /// Objective of the moment problem at `y`.
    pub objective: f64,
    pub iterations: usize,
    pub pinf: f64,
    pub dinf: f64,
    pub gap: f64,
    pub seconds: f64,
}

/// Solves `p` after [`presolve`]: the free cone is eliminated and the
/// cones are facially reduced.
pub fn solve(p: &ConicProblem, params: &SolverParams) -> ConicSolution {
    let start = Instant::now();
    let Some(pre) = presolve(p) else {
        return ConicSolution {
            status: SolveStatus::Infeasible,
            y: vec![0.0; p.m()],
            x: vec![0.0; p.n()],
            s: p.c.clone(),
            primal_obj: 0.0,
            dual_obj: 0.0,
            objective: f64::NAN,
            iterations: 0,
            pinf: f64::NAN,
            dinf: f64::NAN,
            gap: f64::NAN,
            seconds: start.elapsed().as_secs_f64(),
        };
    };
    let inner = solve_standard(&pre.problem, params);
    let y = pre.recover(&inner.y);
    let x = pre.recover_primal(&inner.x, p.n());
    let s = p.slack(&y);
    let dual_obj: f64 = p.b.iter().zip(&y).map(|(b, y)| b * y).sum();
    ConicSolution {
        objective: p.objective_from_dual(dual_obj),
        dual_obj,
        y,
        x,
        s,
        seconds: start.elapsed().as_secs_f64(),
        ..inner
    }
}

struct BlockData {
    size: usize,
    offset: usize,
    c: DMatrix<f64>,
    // constraints touching the block with their entries (row, col, value),
    // both triangles
    cons: Vec<(usize, Vec<(usize, usize, f64)>)>,
    // distinct rows of each constraint's entries
    cons_rows: Vec<Vec<usize>>,
}

struct Data {
    m: usize,
    nl: usize,
    c_lp: DVector<f64>,
    // per LP column: (constraint, value)
    lp_cols: Vec<Vec<(usize, f64)>>,
    blocks: Vec<BlockData>,
    b: DVector<f64>,
    norm_b: f64,
    norm_c: f64,
}

#[derive(Clone)]
struct Iterate {
    xl: DVector<f64>,
    xs: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    sl: DVector<f64>,
    ss: Vec<DMatrix<f64>>,
}

impl Data {
    fn new(p: &ConicProblem) -> Self {
        let nl = p.cone.l;
        let lo = p.cone.f;
        let offsets = p.cone.psd_offsets();
        let mut blocks: Vec<BlockData> = p
            .cone
            .s
            .iter()
            .zip(&offsets)
            .map(|(&n, &off)| BlockData {
                size: n,
                offset: off,
                c: DMatrix::from_column_slice(n, n, &p.c[off..off + n * n]),
                cons: Vec::new(),
                cons_rows: Vec::new(),
            })
            .collect();
        let mut lp_cols = vec![Vec::new(); nl];
        for (i, row) in p.a.iter().enumerate() {
            let mut bi = 0;
            let mut cur: Vec<(usize, usize, f64)> = Vec::new();
            let flush = |bi: usize, cur: &mut Vec<(usize, usize, f64)>, blocks: &mut Vec<BlockData>| {
                if !cur.is_empty() {
                    let mut rows: Vec<usize> = cur.iter().map(|e| e.0).collect();
                    rows.sort_unstable();
                    rows.dedup();
                    blocks[bi].cons.push((i, std::mem::take(cur)));
                    blocks[bi].cons_rows.push(rows);
                }
            };
            for &(k, v) in row {
                if k < lo {
                    continue;
                }
                if k < lo + nl {
                    lp_cols[k - lo].push((i, v));
                    continue;
                }
                while k >= blocks[bi].offset + blocks[bi].size * blocks[bi].size {
                    flush(bi, &mut cur, &mut blocks);
                    bi += 1;
                }
                let n = blocks[bi].size;
                let r = k - blocks[bi].offset;
                cur.push((r % n, r / n, v));
            }
            if !blocks.is_empty() {
                flush(bi, &mut cur, &mut blocks);
            }
        }
        let c_lp = DVector::from_column_slice(&p.c[lo..lo + nl]);
        let b = DVector::from_column_slice(&p.b);
        let norm_b = b.norm();
        let norm_c = (c_lp.norm_squared() + blocks.iter().map(|bd| bd.c.norm_squared()).sum::<f64>()).sqrt();
        Data {
            m: p.m(),
            nl,
            c_lp,
            lp_cols,
            blocks,
            b,
            norm_b,
            norm_c,
        }
    }

    fn nu(&self) -> f64 {
        (self.nl + self.blocks.iter().map(|b| b.size).sum::<usize>()) as f64
    }

    // A(x)
    fn apply_a(&self, xl: &DVector<f64>, xs: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (k, col) in self.lp_cols.iter().enumerate() {
            for &(i, v) in col {
                out[i] += v * xl[k];
            }
        }
        for (bd, x) in self.blocks.iter().zip(xs) {
            for (i, entries) in &bd.cons {
                out[*i] += entries.iter().map(|&(r, c, v)| v * x[(r, c)]).sum::<f64>();
            }
        }
        out
    }

    // Aᵀy
    fn apply_at(&self, y: &DVector<f64>) -> (DVector<f64>, Vec<DMatrix<f64>>) {
        let mut l = DVector::zeros(self.nl);
        for (k, col) in self.lp_cols.iter().enumerate() {
            l[k] = col.iter().map(|&(i, v)| v * y[i]).sum();
        }
        let s = self
            .blocks
            .iter()
            .map(|bd| {
                let mut m = DMatrix::zeros(bd.size, bd.size);
                for (i, entries) in &bd.cons {
                    for &(r, c, v) in entries {
                        m[(r, c)] += v * y[*i];
                    }
                }
                m
            })
            .collect();
        (l, s)
    }

    fn primal_obj(&self, it: &Iterate) -> f64 {
        self.c_lp.dot(&it.xl) + self.blocks.iter().zip(&it.xs).map(|(bd, x)| bd.c.dot(x)).sum::<f64>()
    }

    fn schur(&self, it: &Iterate, zinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.m;
        let mut mat = DMatrix::zeros(m, m);
        for (k, col) in self.lp_cols.iter().enumerate() {
            let d = it.xl[k] / it.sl[k];
            for &(i, vi) in col {
                for &(j, vj) in col {
                    mat[(i, j)] += d * vi * vj;
                }
            }
        }
        for ((bd, x), z) in self.blocks.iter().zip(&it.xs).zip(zinv) {
            let n = bd.size;
            let mut t = DMatrix::zeros(n, n);
            let mut p = DMatrix::zeros(n, n);
            for ((i, ei), rows) in bd.cons.iter().zip(&bd.cons_rows) {
                // t = A_i Z on the rows A_i touches, p = X A_i Z
                for &r in rows {
                    t.row_mut(r).fill(0.0);
                }
                for &(r, c, v) in ei {
                    for q in 0..n {
                        t[(r, q)] += v * z[(c, q)];
                    }
                }
                p.fill(0.0);
                for q in 0..n {
                    for &r in rows {
                        let trq = t[(r, q)];
                        if trq != 0.0 {
                            for pp in 0..n {
                                p[(pp, q)] += x[(pp, r)] * trq;
                            }
                        }
                    }
                }
                for (j, ej) in &bd.cons {
                    if j < i {
                        continue;
                    }
                    let v: f64 = ej.iter().map(|&(r, c, w)| w * p[(r, c)]).sum();
                    mat[(*i, *j)] += v;
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                mat[(i, j)] = mat[(j, i)];
            }
        }
        mat
    }
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    Cholesky::new(m.clone()).map(|c| c.inverse())
}

// Largest step keeping x + a dx in the PSD cone (infinity if unbounded).
fn max_step_psd(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(ch) = Cholesky::new(x.clone()) else { return 0.0 };
    let l = ch.l();
    let Some(li) = l.clone().try_inverse() else { return 0.0 };
    let w = sym(&li * dx * li.transpose());
    let lmin = SymmetricEigen::new(w).eigenvalues.min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn max_step_lp(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

// Cholesky factor of the Schur complement, regularized if needed, with
// iterative refinement against the unregularized matrix.
struct SchurFactor {
    m: DMatrix<f64>,
    chol: Option<Cholesky<f64, nalgebra::Dyn>>,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl SchurFactor {
    fn new(m: DMatrix<f64>, floor: f64) -> Self {
        let scale = m.diagonal().iter().fold(0.0f64, |a, &d| a.max(d.abs())).max(1e-300);
        let mut reg = 0.0;
        for _ in 0..6 {
            let mut mm = m.clone();
            if reg > 0.0 {
                for i in 0..mm.nrows() {
                    mm[(i, i)] += reg * scale;
                }
            }
            if let Some(ch) = Cholesky::new(mm) {
                return SchurFactor { m, chol: Some(ch), lu: None };
            }
            reg = if reg == 0.0 { floor } else { reg * 100.0 };
        }
        let lu = Some(m.clone().lu());
        SchurFactor { m, chol: None, lu }
    }

    fn raw_solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        match (&self.chol, &self.lu) {
            (Some(ch), _) => Some(ch.solve(rhs)),
            (None, Some(lu)) => lu.solve(rhs),
            _ => None,
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut x = self.raw_solve(rhs)?;
        let norm = rhs.norm();
        for _ in 0..3 {
            let r = rhs - &self.m * &x;
            if r.norm() <= 1e-15 * norm {
                break;
            }
            x += self.raw_solve(&r)?;
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

struct Direction {
    dxl: DVector<f64>,
    dxs: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    dsl: DVector<f64>,
    dss: Vec<DMatrix<f64>>,
}

/// Solves a problem whose free cone is empty. Dual variables are scaled
/// internally so that every row of `A` has unit norm.
pub fn solve_standard(p: &ConicProblem, params: &SolverParams) -> ConicSolution {
    assert_eq!(p.cone.f, 0, "free cone must be eliminated first");
    let scale: Vec<f64> = p
        .a
        .iter()
        .map(|r| {
            let n = r.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
            if n > 0.0 { 1.0 / n } else { 1.0 }
        })
        .collect();
    let mut scaled = p.clone();
    for ((row, b), d) in scaled.a.iter_mut().zip(scaled.b.iter_mut()).zip(&scale) {
        row.iter_mut().for_each(|e| e.1 *= d);
        *b *= d;
    }
    let mut sol = solve_unscaled(&scaled, params);
    sol.y.iter_mut().zip(&scale).for_each(|(y, d)| *y *= d);
    sol
}

fn solve_unscaled(p: &ConicProblem, params: &SolverParams) -> ConicSolution {
    let start = Instant::now();
    let d = Data::new(p);
    let m = d.m;

    if m == 0 {
        return trivial_solution(p, &d, start);
    }

    // starting point: scaled identities
    let a_norms: Vec<f64> = p.a.iter().map(|r| r.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()).collect();
    let init = |n: usize, c_norm: f64| -> (f64, f64) {
        let nf = n as f64;
        let amax = a_norms.iter().cloned().fold(0.0, f64::max);
        let xi = p
            .b
            .iter()
            .zip(&a_norms)
            .map(|(b, a)| (1.0 + b.abs()) / (1.0 + a))
            .fold(0.0, f64::max);
        let xi = (nf * xi).max(nf.sqrt()).max(10.0);
        let eta = ((1.0 + amax.max(c_norm)) / nf.sqrt()).max(nf.sqrt()).max(10.0);
        (xi, eta)
    };
    let (xl0, sl0) = init(d.nl.max(1), d.c_lp.norm());
    let mut it = Iterate {
        xl: DVector::from_element(d.nl, xl0),
        sl: DVector::from_element(d.nl, sl0),
        xs: Vec::new(),
        ss: Vec::new(),
        y: DVector::zeros(m),
    };
    for bd in &d.blocks {
        let (xi, eta) = init(bd.size, bd.c.norm());
        it.xs.push(DMatrix::identity(bd.size, bd.size) * xi);
        it.ss.push(DMatrix::identity(bd.size, bd.size) * eta);
    }

    let nu = d.nu();
    // AAᵀ, to pull primal directions back onto A dX = rp
    let gram = {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.n()];
        for (i, row) in p.a.iter().enumerate() {
            for &(k, v) in row {
                cols[k].push((i, v));
            }
        }
        let mut g = DMatrix::zeros(m, m);
        for col in &cols {
            for &(i, vi) in col {
                for &(j, vj) in col {
                    g[(i, j)] += vi * vj;
                }
            }
        }
        SchurFactor::new(g, params.reg_floor)
    };
    let mut best: Option<(f64, Iterate, [f64; 3])> = None;
    let mut min_err_it: Option<(f64, Iterate, [f64; 3])> = None;
    let mut deteriorated = false;
    let mut min_err = f64::INFINITY;
    let mut mu_at_progress = f64::INFINITY;
    let mut min_err_at_progress = f64::INFINITY;
    let mut min_feas = f64::INFINITY;
    let mut iterations = 0;
    let mut status = SolveStatus::Failed;
    let mut stall = 0;
    for iter in 0..=params.max_iter {
        iterations = iter;
        let ax = d.apply_a(&it.xl, &it.xs);
        let rp = &d.b - &ax;
        let (atl, ats) = d.apply_at(&it.y);
        let rdl = &d.c_lp - &atl - &it.sl;
        let rds: Vec<DMatrix<f64>> = d
            .blocks
            .iter()
            .zip(&ats)
            .zip(&it.ss)
            .map(|((bd, a), s)| &bd.c - a - s)
            .collect();
        let pobj = d.primal_obj(&it);
        let dobj = d.b.dot(&it.y);
        let pinf = rp.norm() / (1.0 + d.norm_b);
        let dinf = (rdl.norm_squared() + rds.iter().map(|r| r.norm_squared()).sum::<f64>()).sqrt()
            / (1.0 + d.norm_c);
        // complementarity rather than pobj − dobj, which crosses zero
        // while the iterates are still infeasible
        let mu = (it.xl.dot(&it.sl) + it.xs.iter().zip(&it.ss).map(|(x, s)| x.dot(s)).sum::<f64>()) / nu;
        let gap = (mu * nu).abs() / (1.0 + pobj.abs() + dobj.abs());
        let err = pinf.max(dinf).max(gap);
        if params.verbose {
            eprintln!("{iter:3} pobj {pobj:+.8e} dobj {dobj:+.8e} pinf {pinf:.2e} dinf {dinf:.2e} gap {gap:.2e}");
        }
        // later iterates win unless clearly worse: when the optimum is only
        // approached at infinity the gap stalls while the objective improves
        min_err = min_err.min(err);
        if err <= 10.0 * min_err {
            best = Some((err, it.clone(), [pinf, dinf, gap]));
        }
        if err <= min_err_it.as_ref().map_or(f64::INFINITY, |b| b.0) {
            min_err_it = Some((err, it.clone(), [pinf, dinf, gap]));
        }
        if err < 0.9 * min_err_at_progress || mu < 0.7 * mu_at_progress {
            min_err_at_progress = min_err;
            mu_at_progress = mu;
            stall = 0;
        } else {
            stall += 1;
        }
        if err <= params.eps {
            status = SolveStatus::Solved;
            break;
        }
        // certificates of infeasibility
        let xnorm = (it.xl.norm_squared() + it.xs.iter().map(|x| x.norm_squared()).sum::<f64>()).sqrt();
        if -pobj > 0.0 && xnorm > 1e8 && ax.norm() / -pobj < 1e-8 * (1.0 + d.norm_b) {
            status = SolveStatus::Infeasible;
            break;
        }
        let ynorm = it.y.norm();
        if dobj > 0.0 && ynorm > 1e8 {
            let aty_s = ((&atl + &it.sl).norm_squared()
                + ats.iter().zip(&it.ss).map(|(a, s)| (a + s).norm_squared()).sum::<f64>())
            .sqrt();
            if aty_s / dobj < 1e-8 * (1.0 + d.norm_c) {
                status = SolveStatus::Unbounded;
                break;
            }
        }
        // iterates running off to infinity lose feasibility to rounding
        let feas = pinf.max(dinf);
        min_feas = min_feas.min(feas);
        if feas > params.eps && feas > 100.0 * min_feas {
            if params.verbose {
                eprintln!("    stop: feasibility deteriorated");
            }
            deteriorated = true;
            break;
        }
        if iter == params.max_iter || stall >= 15 {
            if params.verbose {
                eprintln!("    stop: iteration limit or stall (mu {mu:.2e})");
            }
            break;
        }

        let Some(zinv) = it.ss.iter().map(inverse_spd).collect::<Option<Vec<_>>>() else {
            if params.verbose {
                eprintln!("    stop: dual slack lost definiteness");
            }
            break;
        };
        let schur = SchurFactor::new(d.schur(&it, &zinv), params.reg_floor);

        // direction for a given complementarity target
        let direction = |rcl: &DVector<f64>, rcs: &[DMatrix<f64>]| -> Option<Direction> {
            // rhs = rp − A(Rc) + A(sym(X rd Z))
            let tl: DVector<f64> =
                DVector::from_fn(d.nl, |k, _| rcl[k] - it.xl[k] * rdl[k] / it.sl[k]);
            let ts: Vec<DMatrix<f64>> = rcs
                .iter()
                .zip(&it.xs)
                .zip(&rds)
                .zip(&zinv)
                .map(|(((rc, x), rd), z)| rc - sym(x * rd * z))
                .collect();
            let rhs = &rp - d.apply_a(&tl, &ts);
            let dy = schur.solve(&rhs)?;
            let (al, as_) = d.apply_at(&dy);
            let dsl = &rdl - al;
            let dss: Vec<DMatrix<f64>> = rds.iter().zip(&as_).map(|(rd, a)| rd - a).collect();
            let mut dxl = DVector::from_fn(d.nl, |k, _| rcl[k] - it.xl[k] * dsl[k] / it.sl[k]);
            let mut dxs: Vec<DMatrix<f64>> = rcs
                .iter()
                .zip(&it.xs)
                .zip(&dss)
                .zip(&zinv)
                .map(|(((rc, x), ds), z)| rc - sym(x * ds * z))
                .collect();
            let r = &rp - d.apply_a(&dxl, &dxs);
            if r.norm() > 0.0 {
                let w = gram.solve(&r)?;
                let (gl, gs) = d.apply_at(&w);
                dxl += gl;
                for (dx, g) in dxs.iter_mut().zip(gs) {
                    *dx += g;
                }
            }
            Some(Direction { dxl, dxs, dy, dsl, dss })
        };
        let steps = |dir: &Direction| -> (f64, f64) {
            let mut ap = max_step_lp(&it.xl, &dir.dxl);
            let mut ad = max_step_lp(&it.sl, &dir.dsl);
            for (x, dx) in it.xs.iter().zip(&dir.dxs) {
                ap = ap.min(max_step_psd(x, dx));
            }
            for (s, ds) in it.ss.iter().zip(&dir.dss) {
                ad = ad.min(max_step_psd(s, ds));
            }
            (ap, ad)
        };

        // predictor
        let rcl: DVector<f64> = -&it.xl;
        let rcs: Vec<DMatrix<f64>> = it.xs.iter().map(|x| -x).collect();
        let Some(aff) = direction(&rcl, &rcs) else { break };
        let (ap, ad) = steps(&aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mut comp = 0.0;
        for k in 0..d.nl {
            comp += (it.xl[k] + ap * aff.dxl[k]) * (it.sl[k] + ad * aff.dsl[k]);
        }
        for b in 0..d.blocks.len() {
            comp += (&it.xs[b] + &aff.dxs[b] * ap).dot(&(&it.ss[b] + &aff.dss[b] * ad));
        }
        let mu_aff = (comp / nu).max(0.0);
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // corrector
        let rcl = DVector::from_fn(d.nl, |k, _| {
            sigma * mu / it.sl[k] - it.xl[k] - aff.dxl[k] * aff.dsl[k] / it.sl[k]
        });
        let rcs: Vec<DMatrix<f64>> = (0..d.blocks.len())
            .map(|b| &zinv[b] * (sigma * mu) - &it.xs[b] - sym(&aff.dxs[b] * &aff.dss[b] * &zinv[b]))
            .collect();
        let Some(dir) = direction(&rcl, &rcs) else { break };
        let (ap, ad) = steps(&dir);
        let gamma = params.step_fraction.min(0.9 + 0.09 * ap.min(ad).min(1.0));
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if params.verbose {
            eprintln!("    sigma {sigma:.2e} ap {ap:.3} ad {ad:.3}");
        }
        if ap < 1e-10 && ad < 1e-10 {
            break;
        }
        it.xl += &dir.dxl * ap;
        it.sl += &dir.dsl * ad;
        it.y += &dir.dy * ad;
        for b in 0..d.blocks.len() {
            it.xs[b] = sym(&it.xs[b] + &dir.dxs[b] * ap);
            it.ss[b] = sym(&it.ss[b] + &dir.dss[b] * ad);
        }
    }

    let chosen = if deteriorated { min_err_it } else { best };
    let (err, best_it, [pinf, dinf, gap]) = chosen.expect("at least one iterate");
    let final_it = match status {
        SolveStatus::Infeasible | SolveStatus::Unbounded => it,
        _ => best_it,
    };
    if status == SolveStatus::Failed && err <= params.eps * 1e3 {
        status = SolveStatus::Inaccurate;
    }
    finish(p, &d, final_it, status, iterations, [pinf, dinf, gap], start)
}

fn finish(
    p: &ConicProblem,
    d: &Data,
    it: Iterate,
    status: SolveStatus,
    iterations: usize,
    [pinf, dinf, gap]: [f64; 3],
    start: Instant,
) -> ConicSolution {
    let mut x = vec![0.0; p.n()];
    let lo = p.cone.f;
    x[lo..lo + d.nl].copy_from_slice(it.xl.as_slice());
    for (bd, xb) in d.blocks.iter().zip(&it.xs) {
        x[bd.offset..bd.offset + bd.size * bd.size].copy_from_slice(xb.as_slice());
    }
    let y: Vec<f64> = it.y.iter().cloned().collect();
    let dual_obj = d.b.dot(&it.y);
    ConicSolution {
        status,
        primal_obj: d.primal_obj(&it),
        dual_obj,
        objective: p.objective_from_dual(dual_obj),
        s: p.slack(&y),
        y,
        x,
        iterations,
        pinf,
        dinf,
        gap,
        seconds: start.elapsed().as_secs_f64(),
    }
}

// No dual variables: feasibility of c alone.
fn trivial_solution(p: &ConicProblem, d: &Data, start: Instant) -> ConicSolution {
    let mut feasible = d.c_lp.iter().all(|&v| v >= -1e-9);
    for bd in &d.blocks {
        let e = SymmetricEigen::new(sym(bd.c.clone())).eigenvalues.min();
        feasible &= e >= -1e-9 * (1.0 + bd.c.norm());
    }
    ConicSolution {
        status: if feasible { SolveStatus::Solved } else { SolveStatus::Infeasible },
        y: Vec::new(),
        x: vec![0.0; p.n()],
        s: p.c.clone(),
        primal_obj: 0.0,
        dual_obj: 0.0,
        objective: p.offset,
        iterations: 0,
        pinf: 0.0,
        dinf: 0.0,
        gap: 0.0,
        seconds: start.elapsed().as_secs_f64(),
    }
}
