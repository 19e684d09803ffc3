//! Optimality certificates and minimizer extraction.
//!
//! After a relaxation is solved, each measure's moment matrix is tested for
//! a flat truncation (`rank M_s = rank M_{s−v}`). When one is found, the
//! atoms of the measure are recovered from multiplication matrices in the
//! column space of `M_s`, and their weights by nonnegative least squares.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conic::{presolve_eliminate_equalities, solve, to_conic, ConicSolution, SolveStatus, SolverParams};
use crate::error::Result;
use crate::model::{GpmProblem, Label};
use crate::poly::Monomial;
use crate::relaxation::{assemble, MeasureIndex, MomentSdp};

#[derive(Clone, Debug)]
pub struct CertifyParams {
    /// Relative singular value threshold for numerical rank.
    pub rank_tol: f64,
    /// Feasibility tolerance for extracted points, scaled by `1 + |rhs|`.
    pub feas_tol: f64,
    /// Relative tolerance between the bound and the reconstructed objective.
    pub obj_tol: f64,
    /// Tolerance on reconstructed moments, relative to `max(1, ‖y‖∞)`.
    pub moment_tol: f64,
    pub seed: u64,
    pub retries: usize,
}

impl Default for CertifyParams {
    fn default() -> Self {
        CertifyParams {
            rank_tol: 1e-3,
            feas_tol: 1e-4,
            obj_tol: 1e-4,
            moment_tol: 1e-3,
            seed: 0x6770_6d31,
            retries: 3,
        }
    }
}

/// Number of singular values above `tol · max(σ₁, 1)`. A value just below
/// the threshold that is close to its predecessor is counted as well.
pub fn numeric_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let thr = tol * sv[0].max(1.0);
    let mut r = sv.iter().take_while(|&&s| s > thr).count();
    while r > 0 && r < sv.len() && sv[r] > 0.5 * sv[r - 1] {
        r += 1;
    }
    r
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flatness {
    pub measure: Label,
    pub flat: bool,
    /// Truncation order `s` at which the test was decided.
    pub order: usize,
    pub rank: usize,
    pub base_rank: usize,
    /// Ranks of `M_0 .. M_r`.
    pub ranks: Vec<usize>,
}

/// Half degree used for flatness: the largest `ceil(deg g / 2)` over the
/// measure's localizing constraints, at least 1.
pub fn flatness_shift(sdp: &MomentSdp, label: Label) -> usize {
    sdp.residual_support
        .iter()
        .filter(|c| c.measure == label)
        .map(|c| (c.normalized().0.degree() as usize).div_ceil(2))
        .fold(1, usize::max)
}

/// Searches truncation orders `s = r, r−1, …, v` for `rank M_s = rank M_{s−v}`.
/// A rank-one `M_r` is flat immediately.
pub fn check_flatness(sdp: &MomentSdp, label: Label, y: &[f64], tol: f64) -> Result<Flatness> {
    let r = sdp.order;
    let v = flatness_shift(sdp, label);
    let (_, full) = sdp.moment_matrix_values(label, r, y)?;
    let mut ranks = Vec::with_capacity(r + 1);
    for s in 0..=r {
        let n = sdp.measure(label)?.basis(s).len();
        ranks.push(numeric_rank(&full.view((0, 0), (n, n)).into_owned(), tol));
    }
    let mut out = Flatness {
        measure: label,
        flat: false,
        order: r,
        rank: ranks[r],
        base_rank: ranks[r.saturating_sub(v)],
        ranks: ranks.clone(),
    };
    if ranks[r] == 1 {
        out.flat = true;
        out.base_rank = 1;
        return Ok(out);
    }
    for s in (v..=r).rev() {
        if ranks[s] == ranks[s - v] && ranks[s] > 0 {
            out.flat = true;
            out.order = s;
            out.rank = ranks[s];
            out.base_rank = ranks[s - v];
            break;
        }
    }
    Ok(out)
}

/// Atoms recovered for one measure. Coordinates follow the measure's
/// variable order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub measure: Label,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub rank: usize,
    pub base_rank: usize,
    /// Largest moment mismatch, relative to `max(1, ‖y‖∞)`.
    pub residual: f64,
    pub tolerance: f64,
}

/// Extracts the atoms of a measure from a flat truncation. Returns `None`
/// when the procedure fails (complex eigenvalues, missing rows, or a moment
/// mismatch above tolerance after all retries).
pub fn extract_points(
    sdp: &MomentSdp,
    label: Label,
    y: &[f64],
    flat: &Flatness,
    params: &CertifyParams,
) -> Option<ExtractionResult> {
    if !flat.flat {
        return None;
    }
    let idx = sdp.measure(label).ok()?;
    let s = flat.order;
    let rank = flat.rank;
    let (basis, m) = sdp.moment_matrix_values(label, s, y).ok()?;

    // M ≈ V Vᵀ
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let n = basis.len();
    let mut v = DMatrix::zeros(n, rank);
    for (k, &e) in order.iter().take(rank).enumerate() {
        let lam = eig.eigenvalues[e].max(0.0).sqrt();
        v.set_column(k, &(eig.eigenvectors.column(e) * lam));
    }

    // pivot rows, scanned in basis order
    let pivots = select_rows(&v, rank)?;
    let vp = DMatrix::from_fn(rank, rank, |i, j| v[(pivots[i], j)]);
    let vp_inv = vp.try_inverse()?;
    let u = &v * vp_inv;
    let pos = |m: &Monomial| basis.iter().position(|b| b == m);

    // multiplication matrices
    let vars = &idx.vars;
    let mut mult = Vec::with_capacity(vars.len());
    for &x in vars {
        let mut nx = DMatrix::zeros(rank, rank);
        for (k, &p) in pivots.iter().enumerate() {
            let prod = basis[p].mul(&Monomial::var(x));
            let red = idx.reduction(&prod)?;
            for (rep, c) in red.terms() {
                let row = pos(rep)?;
                for j in 0..rank {
                    nx[(k, j)] += c * u[(row, j)];
                }
            }
        }
        mult.push(nx);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<ExtractionResult> = None;
    for _ in 0..=params.retries {
        let mut lambda: Vec<f64> = (0..vars.len()).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = lambda.iter().sum();
        lambda.iter_mut().for_each(|l| *l /= total);
        let mut comb = DMatrix::zeros(rank, rank);
        for (l, nx) in lambda.iter().zip(&mult) {
            comb += nx * *l;
        }
        let Some(schur) = Schur::try_new(comb, f64::EPSILON, 1000) else { continue };
        let (q, t) = schur.unpack();
        if (0..rank.saturating_sub(1)).any(|i| t[(i + 1, i)].abs() > 1e-8 * (1.0 + t.norm())) {
            continue;
        }
        let mut points = Vec::with_capacity(rank);
        for j in 0..rank {
            let qj = q.column(j);
            let coords: Vec<f64> = mult.iter().map(|nx| qj.dot(&(nx * qj))).collect();
            points.push(coords);
        }
        let (weights, residual) = fit_weights(idx, y, s, &points)?;
        let res = ExtractionResult {
            measure: label,
            points,
            weights,
            rank,
            base_rank: flat.base_rank,
            residual,
            tolerance: params.rank_tol,
        };
        let better = best.as_ref().is_none_or(|b| res.residual < b.residual);
        if better {
            best = Some(res);
        }
        if best.as_ref().unwrap().residual <= params.moment_tol {
            break;
        }
    }
    let mut best = best?;
    if best.residual > params.moment_tol {
        return None;
    }
    sort_points(&mut best);
    Some(best)
}

// Greedy selection of linearly independent rows of `v` in row order.
fn select_rows(v: &DMatrix<f64>, rank: usize) -> Option<Vec<usize>> {
    let scale = (0..v.nrows()).map(|i| v.row(i).norm()).fold(0.0, f64::max);
    if rank == 0 || scale == 0.0 {
        return None;
    }
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut rows = Vec::new();
    for i in 0..v.nrows() {
        let mut r: DVector<f64> = v.row(i).transpose();
        for b in &basis {
            let d = b.dot(&r);
            r -= b * d;
        }
        for b in &basis {
            let d = b.dot(&r);
            r -= b * d;
        }
        let nr = r.norm();
        if nr > 1e-3 * scale {
            basis.push(r / nr);
            rows.push(i);
            if rows.len() == rank {
                return Some(rows);
            }
        }
    }
    None
}

// Weights by nonnegative least squares on representative moments of degree
// at most 2s; returns them with the scaled max mismatch.
fn fit_weights(idx: &MeasureIndex, y: &[f64], s: usize, points: &[Vec<f64>]) -> Option<(Vec<f64>, f64)> {
    let reps: Vec<&Monomial> = idx.reps.iter().filter(|m| m.degree() as usize <= 2 * s).collect();
    let target: Vec<f64> = reps.iter().map(|m| y[idx.rep_var(m).unwrap()]).collect();
    let eval = |m: &Monomial, p: &[f64]| -> f64 {
        m.eval(&|v| idx.vars.iter().position(|&w| w == v).map(|k| p[k])).unwrap_or(f64::NAN)
    };
    let a = DMatrix::from_fn(reps.len(), points.len(), |i, j| eval(reps[i], &points[j]));
    let b = DVector::from_vec(target.clone());
    if a.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let w = nnls(&a, &b);
    let fit = &a * &w;
    let ymax = target.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let residual = fit.iter().zip(&target).map(|(f, t)| (f - t).abs()).fold(0.0, f64::max) / ymax;
    Some((w.iter().cloned().collect(), residual))
}

/// Lawson-Hanson nonnegative least squares: `min ‖Ax − b‖, x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);
    for _ in 0..3 * n + 10 {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        passive[j] = true;
        loop {
            let z = ls_on(a, b, &passive);
            if (0..n).all(|k| !passive[k] || z[k] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = 1.0f64;
            for k in 0..n {
                if passive[k] && z[k] <= 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z[k]));
                }
            }
            x = &x + (z - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k].abs() <= 1e-15 {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

fn ls_on(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&k| passive[k]).collect();
    let sub = DMatrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])]);
    let sol = sub.svd(true, true).solve(b, 1e-14).unwrap_or_else(|_| DVector::zeros(cols.len()));
    let mut z = DVector::zeros(passive.len());
    for (j, &k) in cols.iter().enumerate() {
        z[k] = sol[j];
    }
    z
}

// Points in decreasing lexicographic order, weights alongside.
fn sort_points(res: &mut ExtractionResult) {
    let mut pairs: Vec<(Vec<f64>, f64)> = res.points.drain(..).zip(res.weights.drain(..)).collect();
    pairs.sort_by(|a, b| {
        for (x, y) in a.0.iter().zip(&b.0) {
            let c = y.total_cmp(x);
            if c.is_ne() {
                return c;
            }
        }
        std::cmp::Ordering::Equal
    });
    for (p, w) in pairs {
        res.points.push(p);
        res.weights.push(w);
    }
}

/// Outcome of [`msol`].
#[derive(Clone, Debug)]
pub struct MsolResult {
    /// 1: certified with extracted minimizers; 0: bound only; −1: failure.
    pub status: i32,
    /// The SDP bound (the moment objective at the solver's point).
    pub objective: f64,
    pub sdp: MomentSdp,
    pub solution: ConicSolution,
    /// Value of every moment variable of `sdp`.
    pub moments: Vec<f64>,
    pub flatness: Vec<Flatness>,
    pub extraction: Vec<ExtractionResult>,
    /// Free parameters left after presolve.
    pub presolved_variables: usize,
}

impl MsolResult {
    /// Numeric moment matrix of a measure at the full relaxation order.
    pub fn moment_matrix(&self, label: Label) -> Result<DMatrix<f64>> {
        Ok(self.sdp.moment_matrix_values(label, self.sdp.order, &self.moments)?.1)
    }

    /// Solved values of the representative moments of a measure, mass first.
    pub fn moment_vector(&self, label: Label) -> Result<Vec<(Monomial, f64)>> {
        let idx = self.sdp.measure(label)?;
        Ok(idx
            .reps
            .iter()
            .map(|m| (m.clone(), self.moments[idx.rep_var(m).unwrap()]))
            .collect())
    }
}

/// Certification verdict for a solved relaxation.
pub fn certify(
    problem: &GpmProblem,
    sdp: &MomentSdp,
    extraction: &[ExtractionResult],
    sdp_objective: f64,
    params: &CertifyParams,
) -> i32 {
    let labels: Vec<Label> = sdp.measures.iter().map(|m| m.label).collect();
    if labels.iter().any(|l| !extraction.iter().any(|e| e.measure == *l && !e.points.is_empty())) {
        return 0;
    }
    let ctx = problem.ctx();
    for e in extraction {
        let Ok(measure) = ctx.measure(e.measure) else { return 0 };
        let vars = measure.vars();
        for c in problem.support_constraints().iter().filter(|c| c.measure == e.measure) {
            for p in &e.points {
                let ok = c.satisfied_at(|v| vars.iter().position(|&w| w == v).map(|k| p[k]), params.feas_tol);
                if !matches!(ok, Ok(true)) {
                    return 0;
                }
            }
        }
    }
    let Some(obj) = problem.objective() else { return 0 };
    let mut value = obj.expr.constant_part();
    for (label, poly) in obj.expr.terms() {
        let Some(e) = extraction.iter().find(|e| e.measure == label) else { return 0 };
        let Ok(measure) = ctx.measure(label) else { return 0 };
        let vars = measure.vars();
        for (p, w) in e.points.iter().zip(&e.weights) {
            match poly.eval_with(|v| vars.iter().position(|&x| x == v).map(|k| p[k])) {
                Ok(f) => value += w * f,
                Err(_) => return 0,
            }
        }
    }
    if (value - sdp_objective).abs() > params.obj_tol * sdp_objective.abs().max(1.0) {
        return 0;
    }
    1
}

/// Assembles, solves and certifies the order-`r` relaxation (default order
/// when `None`). With status 1 the extracted atoms are stored as the
/// measures' supports.
pub fn msol(
    problem: &mut GpmProblem,
    order: Option<usize>,
    solver: &SolverParams,
    params: &CertifyParams,
) -> Result<MsolResult> {
    let sdp = assemble(problem, order)?;
    let cp = to_conic(&sdp);
    let presolved_variables = if cp.cone.f > 0 {
        presolve_eliminate_equalities(&cp).map_or(0, |p| p.problem.m())
    } else {
        cp.m()
    };
    let solution = solve(&cp, solver);
    let moments = sdp.moment_values(&solution.y);
    let objective = solution.objective;
    let usable = matches!(solution.status, SolveStatus::Solved | SolveStatus::Inaccurate);
    let mut result = MsolResult {
        status: -1,
        objective,
        sdp,
        solution,
        moments,
        flatness: Vec::new(),
        extraction: Vec::new(),
        presolved_variables,
    };
    if !usable {
        return Ok(result);
    }
    let labels: Vec<Label> = result.sdp.measures.iter().map(|m| m.label).collect();
    for &label in &labels {
        let flat = check_flatness(&result.sdp, label, &result.moments, params.rank_tol)?;
        if let Some(e) = extract_points(&result.sdp, label, &result.moments, &flat, params) {
            result.extraction.push(e);
        }
        result.flatness.push(flat);
    }
    result.status = certify(problem, &result.sdp, &result.extraction, objective, params);
    if result.status == 1 {
        for e in &result.extraction {
            problem
                .ctx_mut()
                .set_support(e.measure, e.points.clone(), Some(e.weights.clone()))?;
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks() {
        assert_eq!(numeric_rank(&DMatrix::identity(5, 5), 1e-3), 5);
        assert_eq!(numeric_rank(&DMatrix::zeros(4, 4), 1e-3), 0);
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(numeric_rank(&(&v * v.transpose()), 1e-3), 1);
    }

    #[test]
    fn nnls_matches_known_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, -1.0, 1.0]);
        let x = nnls(&a, &b);
        // unconstrained optimum has x2 < 0; clamped solution is (1.5, 0)
        assert!((x[0] - 1.5).abs() < 1e-12 && x[1] == 0.0, "{x}");
    }
}
