//! Elimination of the free cone.
//!
//! A free-cone column `k` of `c − Aᵀy` says `Σ_j A[j,k] y_j = c_k`. The
//! system is brought to reduced row echelon form by sparse Gauss-Jordan
//! elimination, giving `y = y0 + N z` over the non-pivot variables `z`,
//! and the problem is rewritten in `z`.
//!
//! [`presolve`] alternates this with a partial facial reduction: when a
//! nonnegative slack or PSD diagonal can only be nonpositive, it and the
//! variables in it vanish, and a zero diagonal empties its row and column.
//! Moment matrices of measures pinned to a point (`x'x <= 0`) otherwise
//! leave the feasible set without interior.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{sense_sign, ConeSpec, ConicProblem};

const PIVOT_THRESHOLD: f64 = 0.1;
const RANK_TOL: f64 = 1e-10;

/// Result of [`presolve_eliminate_equalities`].
#[derive(Clone, Debug)]
pub struct Presolved {
    /// Problem in the reduced variables, with an empty free cone.
    pub problem: ConicProblem,
    /// Equality rows that were redundant.
    pub dependent_rows: usize,
    /// Variables fixed at zero by facial reduction.
    pub fixed_zero: usize,
    y0: Vec<f64>,
    // original variable -> combination of reduced variables
    map: Vec<Vec<(usize, f64)>>,
    // reduced cone column -> original column
    cols: Vec<usize>,
}

impl Presolved {
    /// Number of variables of the original problem.
    pub fn original_dim(&self) -> usize {
        self.y0.len()
    }

    /// Original `y` for reduced values `z`.
    pub fn recover(&self, z: &[f64]) -> Vec<f64> {
        self.y0
            .iter()
            .zip(&self.map)
            .map(|(y0, row)| y0 + row.iter().map(|&(k, v)| v * z[k]).sum::<f64>())
            .collect()
    }

    /// Original primal vector for a reduced one; dropped columns are zero.
    pub fn recover_primal(&self, x: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&k, &v) in self.cols.iter().zip(x) {
            if k < n {
                out[k] = v;
            }
        }
        out
    }

    // self followed by `next`, which presolved self.problem
    fn then(self, next: Presolved) -> Presolved {
        let map: Vec<Vec<(usize, f64)>> = self
            .map
            .iter()
            .map(|row| {
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                for &(q, w) in row {
                    for &(r, v) in &next.map[q] {
                        *acc.entry(r).or_insert(0.0) += w * v;
                    }
                }
                acc.into_iter().filter(|&(_, v)| v != 0.0).collect()
            })
            .collect();
        let y0 = self
            .y0
            .iter()
            .zip(&self.map)
            .map(|(y0, row)| y0 + row.iter().map(|&(q, w)| w * next.y0[q]).sum::<f64>())
            .collect();
        Presolved {
            problem: next.problem,
            dependent_rows: self.dependent_rows + next.dependent_rows,
            fixed_zero: self.fixed_zero + next.fixed_zero,
            y0,
            map,
            cols: next.cols.iter().map(|&k| self.cols[k]).collect(),
        }
    }

    fn identity(p: &ConicProblem) -> Presolved {
        Presolved {
            problem: p.clone(),
            dependent_rows: 0,
            fixed_zero: 0,
            y0: vec![0.0; p.m()],
            map: (0..p.m()).map(|j| vec![(j, 1.0)]).collect(),
            cols: (0..p.n()).collect(),
        }
    }
}

/// Eliminates the free cone and applies facial reduction until neither
/// changes the problem. Returns `None` when the equalities are
/// inconsistent.
pub fn presolve(p: &ConicProblem) -> Option<Presolved> {
    let mut acc = Presolved::identity(p);
    loop {
        let Some((q, keep, fixed)) = facial_step(&acc.problem) else {
            if acc.problem.cone.f > 0 {
                let next = presolve_eliminate_equalities(&acc.problem)?;
                acc = acc.then(next);
                if facial_step(&acc.problem).is_some() {
                    continue;
                }
            }
            return Some(acc);
        };
        // free columns of q are new equalities with no original column
        let f = q.cone.f;
        let mut cols = vec![usize::MAX; f];
        cols.extend(keep.iter().map(|&k| acc.cols[k]));
        acc = Presolved {
            problem: q,
            fixed_zero: acc.fixed_zero + fixed,
            cols,
            ..acc
        };
    }
}

// One round of facial reduction. Returns the problem with the implied
// equalities appended to the free cone, reduced LP and PSD cones, the
// origin of each non-free column and the number of variables fixed at zero.
fn facial_step(p: &ConicProblem) -> Option<(ConicProblem, Vec<usize>, usize)> {
    let f0 = p.cone.f;
    let n = p.n();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (j, row) in p.a.iter().enumerate() {
        for &(k, v) in row {
            cols[k].push((j, v));
        }
    }
    let l = p.cone.l;
    let offsets = p.cone.psd_offsets();
    // nonnegative atoms: LP columns and PSD diagonals
    let mut atoms: Vec<usize> = (f0..f0 + l).collect();
    for (&sz, &off) in p.cone.s.iter().zip(&offsets) {
        atoms.extend((0..sz).map(|i| off + i * sz + i));
    }
    // sign of y_j implied by an atom `-v y_j >= 0`
    let mut sign: HashMap<usize, f64> = HashMap::new();
    let mut zero: BTreeSet<usize> = BTreeSet::new();
    for &k in &atoms {
        if let [(j, v)] = cols[k][..] {
            if p.c[k] == 0.0 {
                let s = -v.signum();
                match sign.get(&j) {
                    Some(&t) if t != s => {
                        zero.insert(j);
                    }
                    _ => {
                        sign.insert(j, s);
                    }
                }
            }
        }
    }
    for &k in &atoms {
        if p.c[k] != 0.0 || cols[k].len() < 2 {
            continue;
        }
        let nonpositive = cols[k]
            .iter()
            .all(|&(j, v)| sign.get(&j).is_some_and(|&s| -v * s < 0.0));
        if nonpositive {
            zero.extend(cols[k].iter().map(|e| e.0));
        }
    }
    if zero.is_empty() {
        return None;
    }

    let vanishes = |k: usize| p.c[k] == 0.0 && cols[k].iter().all(|e| zero.contains(&e.0));
    // implied equalities, as (c, column entries)
    let live = |k: usize| -> Vec<(usize, f64)> { cols[k].iter().filter(|e| !zero.contains(&e.0)).cloned().collect() };
    let mut eqs: Vec<(f64, Vec<(usize, f64)>)> = (0..f0).map(|k| (p.c[k], live(k))).collect();
    eqs.extend(zero.iter().map(|&j| (0.0, vec![(j, 1.0)])));
    let mut keep: Vec<usize> = Vec::new();
    let mut new_l = 0;
    for k in f0..f0 + l {
        let trivial = cols[k].iter().all(|e| zero.contains(&e.0)) && p.c[k] >= 0.0;
        if !trivial {
            keep.push(k);
            new_l += 1;
        }
    }
    let mut new_s = Vec::new();
    for (&sz, &off) in p.cone.s.iter().zip(&offsets) {
        let dead: Vec<bool> = (0..sz).map(|i| vanishes(off + i * sz + i)).collect();
        for i in (0..sz).filter(|&i| dead[i]) {
            for q in (0..sz).filter(|&q| q != i && !(dead[q] && q < i)) {
                let k = off + q * sz + i;
                let entries = live(k);
                if p.c[k] != 0.0 || !entries.is_empty() {
                    eqs.push((p.c[k], entries));
                }
            }
        }
        let alive: Vec<usize> = (0..sz).filter(|&i| !dead[i]).collect();
        if alive.is_empty() {
            continue;
        }
        for &q in &alive {
            for &i in &alive {
                keep.push(off + q * sz + i);
            }
        }
        new_s.push(alive.len());
    }

    let f = eqs.len();
    let mut c: Vec<f64> = eqs.iter().map(|e| e.0).collect();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.m()];
    for (k, (_, entries)) in eqs.iter().enumerate() {
        for &(j, v) in entries {
            rows[j].push((k, v));
        }
    }
    for (nk, &k) in keep.iter().enumerate() {
        c.push(p.c[k]);
        for &(j, v) in &cols[k] {
            if !zero.contains(&j) {
                rows[j].push((f + nk, v));
            }
        }
    }
    let q = ConicProblem {
        cone: ConeSpec { f, l: new_l, s: new_s },
        a: rows,
        b: p.b.clone(),
        c,
        offset: p.offset,
        sense: p.sense,
    };
    Some((q, keep, zero.len()))
}

// Pivot row: y_p = constant + Σ coeff * y_q over non-pivot q.
struct PivotRow {
    constant: f64,
    terms: BTreeMap<usize, f64>,
}

/// Eliminates the free cone. Returns `None` when the equalities are
/// inconsistent. Dual variables that end up in no constraint and carry no
/// objective are fixed at zero.
pub fn presolve_eliminate_equalities(p: &ConicProblem) -> Option<Presolved> {
    let m = p.m();
    let f = p.cone.f;
    // equality columns as rows over y
    let mut eqs: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); f];
    for (j, row) in p.a.iter().enumerate() {
        for &(k, v) in row {
            if k < f {
                eqs[k].insert(j, v);
            }
        }
    }

    let mut pivots: HashMap<usize, PivotRow> = HashMap::new();
    // non-pivot variable -> pivots whose rows mention it
    let mut users: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    let mut dependent = 0;
    for (k, eq) in eqs.into_iter().enumerate() {
        let scale = eq.values().fold(0.0f64, |s, v| s.max(v.abs())).max(p.c[k].abs());
        // reduce by current pivots
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        let mut rhs = p.c[k];
        for (j, v) in eq {
            match pivots.get(&j) {
                Some(pr) => {
                    rhs -= v * pr.constant;
                    for (&q, &w) in &pr.terms {
                        *row.entry(q).or_insert(0.0) += v * w;
                    }
                }
                None => *row.entry(j).or_insert(0.0) += v,
            }
        }
        let big = row.values().fold(0.0f64, |s, v| s.max(v.abs()));
        if big <= RANK_TOL * scale.max(1.0) {
            if rhs.abs() > 1e-8 * (1.0 + scale) {
                return None;
            }
            dependent += 1;
            continue;
        }
        row.retain(|_, v| v.abs() > RANK_TOL * big);
        let piv = *row
            .iter()
            .filter(|(_, v)| v.abs() >= PIVOT_THRESHOLD * big)
            .map(|(j, _)| j)
            .next_back()
            .expect("row has an entry of maximal size");
        let pv = row.remove(&piv).unwrap();
        let new = PivotRow {
            constant: rhs / pv,
            terms: row.into_iter().map(|(q, v)| (q, -v / pv)).collect(),
        };
        // substitute into rows that used the new pivot
        if let Some(us) = users.remove(&piv) {
            for u in us {
                let pr = pivots.get_mut(&u).unwrap();
                let Some(w) = pr.terms.remove(&piv) else { continue };
                pr.constant += w * new.constant;
                for (&q, &v) in &new.terms {
                    let e = pr.terms.entry(q).or_insert(0.0);
                    *e += w * v;
                    if e.abs() <= 1e-12 * (w * v).abs() {
                        pr.terms.remove(&q);
                    } else {
                        users.entry(q).or_default().insert(u);
                    }
                }
            }
        }
        for &q in new.terms.keys() {
            users.entry(q).or_default().insert(piv);
        }
        pivots.insert(piv, new);
    }

    // reduced variables are the non-pivots
    let mut new_index = vec![usize::MAX; m];
    let mut nz = 0;
    for (j, slot) in new_index.iter_mut().enumerate() {
        if !pivots.contains_key(&j) {
            *slot = nz;
            nz += 1;
        }
    }
    let mut y0 = vec![0.0; m];
    let mut map: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for j in 0..m {
        match pivots.get(&j) {
            Some(pr) => {
                y0[j] = pr.constant;
                map[j] = pr.terms.iter().map(|(&q, &v)| (new_index[q], v)).collect();
            }
            None => map[j] = vec![(new_index[j], 1.0)],
        }
    }

    // c' = c − Aᵀy0, A' = NᵀA, b' = Nᵀb (free columns dropped)
    let n_new = p.n() - f;
    let mut c = vec![0.0; n_new];
    c.copy_from_slice(&p.c[f..]);
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); nz];
    let mut b = vec![0.0; nz];
    let mut bty0 = 0.0;
    for j in 0..m {
        bty0 += p.b[j] * y0[j];
        for &(k, v) in &p.a[j] {
            if k >= f {
                c[k - f] -= v * y0[j];
            }
        }
        for &(q, w) in &map[j] {
            b[q] += w * p.b[j];
            for &(k, v) in &p.a[j] {
                if k >= f {
                    *rows[q].entry(k - f).or_insert(0.0) += w * v;
                }
            }
        }
    }
    let mut a: Vec<Vec<(usize, f64)>> = rows
        .into_iter()
        .map(|r| r.into_iter().filter(|&(_, v)| v != 0.0).collect())
        .collect();

    // variables in no constraint: keep them only if they carry objective
    let keep: Vec<bool> = (0..nz).map(|q| !a[q].is_empty() || b[q] != 0.0).collect();
    let mut renum = vec![usize::MAX; nz];
    let mut kept = 0;
    for q in 0..nz {
        if keep[q] {
            renum[q] = kept;
            kept += 1;
        }
    }
    let mut qi = 0;
    a.retain(|_| {
        let k = keep[qi];
        qi += 1;
        k
    });
    let b: Vec<f64> = b.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(v, _)| v).collect();
    for row in &mut map {
        row.retain(|&(q, _)| keep[q]);
        for e in row.iter_mut() {
            e.0 = renum[e.0];
        }
    }

    let problem = ConicProblem {
        cone: ConeSpec {
            f: 0,
            l: p.cone.l,
            s: p.cone.s.clone(),
        },
        a,
        b,
        c,
        offset: p.offset + sense_sign(p.sense) * bty0,
        sense: p.sense,
    };
    Some(Presolved {
        problem,
        dependent_rows: dependent,
        fixed_zero: 0,
        y0,
        map,
        cols: (f..p.n()).collect(),
    })
}
