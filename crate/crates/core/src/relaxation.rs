//! Moment SDP relaxations of a [`GpmProblem`].
//!
//! At order `r` every measure contributes the moments of its monomials of
//! degree at most `2r`. Equalities whose left-hand side is an isolated monic
//! monomial are used as rewrite rules (support level) or as direct bindings
//! of one moment (moment level); the surviving monomials are the
//! representatives, and the moments that are not bound are the decision
//! variables. Moment matrices, localizing matrices and linear rows are
//! expressed as [`Affine`] forms in those variables.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::affine::Affine;
use crate::error::{Error, Result};
use crate::model::{
    Direction, GpmProblem, Label, MomentConstraint, MomentExpr, Relation, SupportConstraint,
};
use crate::poly::{monomial_basis, Monomial, Polynomial, Var};

/// Support-level rewrite rule `lhs -> rhs` for one measure.
#[derive(Clone, Debug, PartialEq)]
pub struct SubstitutionRule {
    pub measure: Label,
    pub lhs: Monomial,
    pub rhs: Polynomial,
}

/// Moment-level binding `∫ monomial dμ_measure = value`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentBinding {
    pub measure: Label,
    pub monomial: Monomial,
    pub value: MomentExpr,
}

/// Equalities split into rewrite rules, moment bindings and what remains.
#[derive(Clone, Debug, Default)]
pub struct Substitutions {
    pub rules: Vec<SubstitutionRule>,
    pub bindings: Vec<MomentBinding>,
    pub residual_support: Vec<SupportConstraint>,
    pub residual_moment: Vec<MomentConstraint>,
}

/// Lowest relaxation order: half the largest degree in the problem data,
/// rounded up, and at least 1.
pub fn default_order(problem: &GpmProblem) -> usize {
    let mut d = 0u32;
    if let Some(o) = problem.objective() {
        d = d.max(o.expr.degree());
    }
    for c in problem.support_constraints() {
        d = d.max(c.degree());
    }
    for c in problem.moment_constraints() {
        d = d.max(c.lhs.degree()).max(c.rhs.degree());
    }
    (d as usize).div_ceil(2).max(1)
}

// largest degree of the objective and constraint data on one measure
fn data_degree(problem: &GpmProblem, label: Label) -> u32 {
    let term = |e: &MomentExpr| e.term(label).map_or(0, |p| p.degree());
    let mut d = problem.objective().map_or(0, |o| term(&o.expr));
    for c in problem.support_constraints() {
        if c.measure == label {
            d = d.max(c.degree());
        }
    }
    for c in problem.moment_constraints() {
        d = d.max(term(&c.lhs)).max(term(&c.rhs));
    }
    d
}

/// Appends `mass == 1` when the problem involves a single measure whose
/// moments are not otherwise constrained.
pub fn apply_default_mass(problem: &GpmProblem) -> GpmProblem {
    let mut out = problem.clone();
    if let Some(label) = default_mass_label(problem) {
        let mass = problem.ctx().mass(label).expect("active measure exists");
        out.add_moment(MomentConstraint::new(mass, Relation::Eq, MomentExpr::constant(1.0)))
            .expect("active measure exists");
    }
    out
}

fn default_mass_label(problem: &GpmProblem) -> Option<Label> {
    let labels = problem.active_labels();
    if labels.len() != 1 {
        return None;
    }
    let label = *labels.iter().next()?;
    let referenced = problem
        .moment_constraints()
        .iter()
        .any(|c| c.labels().contains(&label));
    (!referenced).then_some(label)
}

/// Splits the problem's equalities into substitutions and residual
/// constraints. Rules are inter-reduced; a rule whose right-hand side
/// cannot be reduced consistently is demoted to a residual equality.
pub fn extract_substitution_rules(problem: &GpmProblem) -> Result<Substitutions> {
    let mut out = Substitutions::default();
    let mut candidates: Vec<SubstitutionRule> = Vec::new();
    for c in problem.support_constraints() {
        match (c.rel, c.lhs.as_monic_monomial()) {
            (Relation::Eq, Some(m)) if m.degree() >= 1 => candidates.push(SubstitutionRule {
                measure: c.measure,
                lhs: m.clone(),
                rhs: c.rhs.clone(),
            }),
            _ => out.residual_support.push(c.clone()),
        }
    }
    let (rules, demoted) = inter_reduce(candidates)?;
    out.rules = rules;
    out.residual_support.extend(demoted.into_iter().map(rule_as_constraint));

    for c in problem.moment_constraints() {
        match binding_of(c) {
            Some(b) => out.bindings.push(b),
            None => out.residual_moment.push(c.clone()),
        }
    }
    Ok(out)
}

fn binding_of(c: &MomentConstraint) -> Option<MomentBinding> {
    if c.rel != Relation::Eq || c.lhs.constant_part() != 0.0 {
        return None;
    }
    let mut terms = c.lhs.terms();
    let (label, p) = terms.next()?;
    if terms.next().is_some() {
        return None;
    }
    let m = p.as_monic_monomial()?;
    Some(MomentBinding {
        measure: label,
        monomial: m.clone(),
        value: c.rhs.clone(),
    })
}

fn rule_as_constraint(r: SubstitutionRule) -> SupportConstraint {
    SupportConstraint {
        measure: r.measure,
        lhs: Polynomial::from(r.lhs),
        rel: Relation::Eq,
        rhs: r.rhs,
    }
}

const RULE_BUDGET: usize = 10_000;

fn inter_reduce(
    candidates: Vec<SubstitutionRule>,
) -> Result<(Vec<SubstitutionRule>, Vec<SubstitutionRule>)> {
    let mut accepted: Vec<SubstitutionRule> = Vec::new();
    let mut demoted = Vec::new();
    for cand in candidates {
        if let Some(a) = accepted
            .iter()
            .find(|a| a.measure == cand.measure && a.lhs == cand.lhs)
        {
            if a.rhs == cand.rhs {
                continue;
            }
            return Err(Error::InconsistentSubstitutions);
        }
        let same: Vec<&SubstitutionRule> = accepted
            .iter()
            .filter(|a| a.measure == cand.measure)
            .collect();
        if same.iter().any(|a| a.lhs.divides(&cand.lhs) || cand.lhs.divides(&a.lhs)) {
            demoted.push(cand);
            continue;
        }
        let rhs = match reduce_plain(&cand.rhs, &same) {
            Some(p) => p,
            None => {
                demoted.push(cand);
                continue;
            }
        };
        if rhs.terms().any(|(m, _)| cand.lhs.divides(m)) {
            demoted.push(cand);
            continue;
        }
        let rule = SubstitutionRule { rhs, ..cand };
        let mut keep = Vec::with_capacity(accepted.len() + 1);
        for a in accepted {
            if a.measure != rule.measure {
                keep.push(a);
                continue;
            }
            match reduce_plain(&a.rhs, &[&rule]) {
                Some(p) if !p.terms().any(|(m, _)| a.lhs.divides(m)) => {
                    keep.push(SubstitutionRule { rhs: p, ..a })
                }
                _ => demoted.push(a),
            }
        }
        keep.push(rule);
        accepted = keep;
    }
    Ok((accepted, demoted))
}

// Rewrites `p` with `rules` until no rule applies. None when the step
// budget runs out.
fn reduce_plain(p: &Polynomial, rules: &[&SubstitutionRule]) -> Option<Polynomial> {
    let mut cur = p.clone();
    for _ in 0..RULE_BUDGET {
        let hit = cur.terms().find_map(|(m, c)| {
            rules
                .iter()
                .find_map(|r| r.lhs.quotient_of(m).map(|q| (m.clone(), c, q, *r)))
        });
        let Some((m, c, q, rule)) = hit else {
            return Some(cur);
        };
        cur.add_term(m, -c);
        cur += &rule.rhs.mul_monomial(&q).scale(c);
    }
    None
}

// Monomial reduction under the rules of one measure with a degree cap.
struct Reducer<'a> {
    rules: Vec<&'a SubstitutionRule>,
    cap: u32,
    memo: HashMap<Monomial, Polynomial>,
    in_progress: HashSet<Monomial>,
    steps: usize,
    budget: usize,
    abandoned: BTreeSet<usize>,
}

impl<'a> Reducer<'a> {
    fn new(rules: Vec<&'a SubstitutionRule>, cap: u32, nvars: usize) -> Self {
        let budget = 10 * binomial(nvars + cap as usize, nvars).max(1);
        Reducer {
            rules,
            cap,
            memo: HashMap::new(),
            in_progress: HashSet::new(),
            steps: 0,
            budget,
            abandoned: BTreeSet::new(),
        }
    }

    fn reduce(&mut self, m: &Monomial) -> Result<Polynomial> {
        if let Some(p) = self.memo.get(m) {
            return Ok(p.clone());
        }
        let hit = self
            .rules
            .iter()
            .enumerate()
            .find_map(|(k, r)| r.lhs.quotient_of(m).map(|q| (k, q)));
        let Some((k, q)) = hit else {
            let p = Polynomial::from(m.clone());
            self.memo.insert(m.clone(), p.clone());
            return Ok(p);
        };
        let rule = self.rules[k];
        let images: Vec<(Monomial, f64)> = rule
            .rhs
            .terms()
            .map(|(t, c)| (t.mul(&q), c))
            .collect();
        if images.iter().any(|(t, _)| t.degree() > self.cap) {
            self.abandoned.insert(k);
            let p = Polynomial::from(m.clone());
            self.memo.insert(m.clone(), p.clone());
            return Ok(p);
        }
        self.in_progress.insert(m.clone());
        let mut out = Polynomial::zero();
        for (t, c) in images {
            self.steps += 1;
            if self.steps > self.budget || self.in_progress.contains(&t) {
                return Err(Error::SubstitutionNotTerminating);
            }
            out += &self.reduce(&t)?.scale(c);
        }
        self.in_progress.remove(m);
        self.memo.insert(m.clone(), out.clone());
        Ok(out)
    }
}

/// Reduces `m` under `rules` (all of one measure), never producing monomials
/// of degree above `degree_cap`. A rewrite that would exceed the cap is
/// abandoned and leaves the monomial as it is.
pub fn reduce_monomial(
    m: &Monomial,
    rules: &[SubstitutionRule],
    degree_cap: u32,
) -> Result<Polynomial> {
    let nvars = rules
        .iter()
        .flat_map(|r| r.lhs.vars().chain(r.rhs.vars()))
        .chain(m.vars())
        .collect::<BTreeSet<Var>>()
        .len();
    let mut red = Reducer::new(rules.iter().collect(), degree_cap, nvars);
    red.reduce(m)
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Moment bookkeeping for one measure.
#[derive(Clone, Debug)]
pub struct MeasureIndex {
    pub label: Label,
    pub vars: Vec<Var>,
    /// Number of raw monomials of degree at most `2r`.
    pub raw_monomials: usize,
    /// Representative monomials in graded lex order.
    pub reps: Vec<Monomial>,
    rep_var: HashMap<Monomial, usize>,
    reduction: HashMap<Monomial, Polynomial>,
    lowered: HashMap<Monomial, Affine>,
    /// Largest half-degree of the measure's support constraints, at least 1.
    pub constraint_half_degree: usize,
}

impl MeasureIndex {
    /// Global moment-variable index of a representative.
    pub fn rep_var(&self, m: &Monomial) -> Option<usize> {
        self.rep_var.get(m).copied()
    }

    /// Reduction of a raw monomial of degree at most `2r` over representatives.
    pub fn reduction(&self, m: &Monomial) -> Option<&Polynomial> {
        self.reduction.get(m)
    }

    /// Moment of a raw monomial as an affine form in the decision variables.
    pub fn moment(&self, m: &Monomial) -> Option<&Affine> {
        self.lowered.get(m)
    }

    /// Representatives of degree at most `s`: the basis of the order-`s`
    /// moment matrix.
    pub fn basis(&self, s: usize) -> Vec<Monomial> {
        self.reps
            .iter()
            .filter(|m| m.degree() as usize <= s)
            .cloned()
            .collect()
    }

    fn lower_poly(&self, p: &Polynomial, shift: &Monomial) -> Result<Affine> {
        let mut out = Affine::zero();
        for (m, c) in p.terms() {
            let mm = m.mul(shift);
            let a = self.lowered.get(&mm).ok_or(Error::ConstraintDegree)?;
            out.axpy(c, a);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Moment { measure: Label },
    Localizing { measure: Label, constraint: usize },
}

/// Symmetric matrix whose entries are affine in the decision variables.
#[derive(Clone, Debug)]
pub struct PsdBlock {
    pub kind: BlockKind,
    pub size: usize,
    entries: Vec<Affine>,
}

impl PsdBlock {
    fn from_upper<F: FnMut(usize, usize) -> Result<Affine>>(
        kind: BlockKind,
        size: usize,
        mut f: F,
    ) -> Result<Self> {
        let mut entries = vec![Affine::zero(); size * size];
        for i in 0..size {
            for j in i..size {
                let a = f(i, j)?;
                if i != j {
                    entries[j * size + i] = a.clone();
                }
                entries[i * size + j] = a;
            }
        }
        Ok(PsdBlock {
            kind,
            size,
            entries,
        })
    }

    pub fn entry(&self, i: usize, j: usize) -> &Affine {
        &self.entries[i * self.size + j]
    }

    pub fn eval(&self, z: &[f64]) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.size, self.size, |i, j| self.entry(i, j).eval(z))
    }
}

/// Counts reported after assembly, mirroring the usual log block.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AssemblyReport {
    pub measure_labels: Vec<Label>,
    pub order: usize,
    pub decision_variables: usize,
    pub linear_equalities: usize,
    pub linear_inequalities: usize,
    pub psd_blocks: Vec<usize>,
    pub total_monomials: usize,
    pub monomials_after_substitution: usize,
    pub support_constraints: usize,
    pub substitutions: usize,
    pub moment_constraints: usize,
    pub mass_set_to_one: Option<Label>,
    pub measures: Vec<MeasureLog>,
}

/// Per-measure line of the build log.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MeasureLog {
    pub label: Label,
    /// Largest degree of the problem data on this measure.
    pub max_degree: u32,
    pub variables: usize,
    /// Monomials of degree at most twice the relaxation order.
    pub moments: usize,
}

impl AssemblyReport {
    /// Block sizes grouped by runs, e.g. `35x35+8x(20x20)`.
    pub fn psd_summary(&self) -> String {
        format_blocks(&self.psd_blocks)
    }

    /// Step-by-step build log, ending with the summary block.
    pub fn log(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line("Define moment SDP problem".into());
        line("  Valid objective function".into());
        if self.substitutions > 0 {
            line(format!(
                "  Number of support constraints = {} including {} substitutions",
                self.support_constraints, self.substitutions
            ));
        } else {
            line(format!("  Number of support constraints = {}", self.support_constraints));
        }
        line(format!("  Number of moment constraints = {}", self.moment_constraints));
        for m in &self.measures {
            line(format!("Measure #{}", m.label));
            line(format!("  Maximum degree = {}", m.max_degree));
            line(format!("  Number of variables = {}", m.variables));
            line(format!("  Number of moments = {}", m.moments));
        }
        line(format!("Order of SDP relaxation = {}", self.order));
        if let Some(l) = self.mass_set_to_one {
            line(format!("Mass of measure {l} set to one"));
        }
        line(format!("Total number of monomials = {}", self.total_monomials));
        line("Perform moment substitutions".into());
        if self.substitutions > 0 {
            line("Perform support substitutions".into());
        }
        line(format!("Number of monomials after substitution = {}", self.monomials_after_substitution));
        line("Generate moment and support constraints".into());
        line("Generate moment SDP problem".into());
        out.push_str(&self.to_string());
        out
    }
}

pub fn format_blocks(sizes: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < sizes.len() {
        let s = sizes[i];
        let mut k = i;
        while k < sizes.len() && sizes[k] == s {
            k += 1;
        }
        let run = k - i;
        if run == 1 {
            parts.push(format!("{s}x{s}"));
        } else {
            parts.push(format!("{run}x({s}x{s})"));
        }
        i = k;
    }
    parts.join("+")
}

impl fmt::Display for AssemblyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Moment SDP problem")?;
        let labels: Vec<String> = self.measure_labels.iter().map(|l| l.to_string()).collect();
        if labels.len() == 1 {
            writeln!(f, "  Measure label             = {}", labels[0])?;
        } else {
            writeln!(f, "  Measure labels            = {}", labels.join(","))?;
        }
        writeln!(f, "  Relaxation order          = {}", self.order)?;
        writeln!(f, "  Decision variables        = {}", self.decision_variables)?;
        if self.linear_equalities > 0 {
            writeln!(f, "  Linear equalities         = {}", self.linear_equalities)?;
        }
        if self.linear_inequalities > 0 {
            writeln!(f, "  Linear inequalities       = {}", self.linear_inequalities)?;
        }
        if !self.psd_blocks.is_empty() {
            writeln!(f, "  Semidefinite inequalities = {}", self.psd_summary())?;
        }
        Ok(())
    }
}

/// Order-`r` moment relaxation of a problem.
#[derive(Clone, Debug)]
pub struct MomentSdp {
    pub order: usize,
    pub direction: Direction,
    pub measures: Vec<MeasureIndex>,
    /// (measure, representative) of every moment variable.
    pub moment_vars: Vec<(Label, Monomial)>,
    /// Each moment variable as an affine form in the decision variables.
    pub moment_affine: Vec<Affine>,
    pub num_free: usize,
    pub blocks: Vec<PsdBlock>,
    /// Rows `a(z) == 0`.
    pub eq_rows: Vec<Affine>,
    /// Rows `a(z) >= 0`.
    pub ineq_rows: Vec<Affine>,
    pub objective: Affine,
    pub objective_expr: MomentExpr,
    pub rules: Vec<SubstitutionRule>,
    /// Support constraints lowered as localizing data, per measure.
    pub residual_support: Vec<SupportConstraint>,
    /// All support constraints of the problem.
    pub support: Vec<SupportConstraint>,
    pub report: AssemblyReport,
}

impl MomentSdp {
    pub fn measure(&self, label: Label) -> Result<&MeasureIndex> {
        self.measures
            .iter()
            .find(|m| m.label == label)
            .ok_or(Error::UnknownMeasure(label))
    }

    /// Values of all moment variables for decision values `z`.
    pub fn moment_values(&self, z: &[f64]) -> Vec<f64> {
        self.moment_affine.iter().map(|a| a.eval(z)).collect()
    }

    /// Representative moments of a measure in basis order, mass first.
    pub fn mvec(&self, label: Label) -> Result<Vec<(Monomial, Affine)>> {
        let idx = self.measure(label)?;
        Ok(idx
            .reps
            .iter()
            .map(|m| (m.clone(), self.moment_affine[idx.rep_var[m]].clone()))
            .collect())
    }

    /// Symbolic moment matrix of order `s <= r` with its row basis.
    pub fn moment_matrix(&self, label: Label, s: usize) -> Result<(Vec<Monomial>, PsdBlock)> {
        let idx = self.measure(label)?;
        let basis = idx.basis(s.min(self.order));
        let block = PsdBlock::from_upper(BlockKind::Moment { measure: label }, basis.len(), |i, j| {
            idx.lower_poly(&Polynomial::one(), &basis[i].mul(&basis[j]))
        })?;
        Ok((basis, block))
    }

    /// Numeric order-`s` moment matrix for moment-variable values `y`.
    pub fn moment_matrix_values(
        &self,
        label: Label,
        s: usize,
        y: &[f64],
    ) -> Result<(Vec<Monomial>, nalgebra::DMatrix<f64>)> {
        let idx = self.measure(label)?;
        let basis = idx.basis(s.min(self.order));
        let n = basis.len();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.raw_moment_value(idx, &basis[i].mul(&basis[j]), y)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok((basis, m))
    }

    /// Value of the moment of a raw monomial (degree at most `2r`) given
    /// moment-variable values `y`.
    pub fn raw_moment_value(&self, idx: &MeasureIndex, m: &Monomial, y: &[f64]) -> Result<f64> {
        let red = idx.reduction(m).ok_or(Error::ConstraintDegree)?;
        Ok(red.terms().map(|(rep, c)| c * y[idx.rep_var[rep]]).sum())
    }

    /// Numeric moment matrix of order `r` at decision values `z`.
    pub fn mmat_numeric(&self, label: Label, z: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        let y = self.moment_values(z);
        Ok(self.moment_matrix_values(label, self.order, &y)?.1)
    }

    /// Lowers a moment expression (degree at most `2r`) to the decision
    /// variables.
    pub fn lower(&self, e: &MomentExpr) -> Result<Affine> {
        let mut out = Affine::constant(e.constant_part());
        for (label, p) in e.terms() {
            out.axpy(1.0, &self.measure(label)?.lower_poly(p, &Monomial::one())?);
        }
        Ok(out)
    }
}

/// Builds the order-`r` relaxation (default: [`default_order`]).
pub fn assemble(problem: &GpmProblem, order: Option<usize>) -> Result<MomentSdp> {
    let objective = problem.objective().ok_or(Error::NoObjective)?.clone();
    let minimal = default_order(problem);
    let r = order.unwrap_or(minimal);
    if r < minimal {
        return Err(Error::OrderTooLow { order: r, minimal });
    }
    let cap = 2 * r as u32;
    let mass_label = default_mass_label(problem);
    let problem = apply_default_mass(problem);
    let subs = extract_substitution_rules(&problem)?;
    let ctx = problem.ctx();
    let labels: Vec<Label> = problem.active_labels().into_iter().collect();

    // representatives and reductions
    let mut measures = Vec::new();
    let mut moment_vars: Vec<(Label, Monomial)> = Vec::new();
    let mut residual_support = subs.residual_support.clone();
    for &label in &labels {
        let vars: Vec<Var> = ctx.measure(label)?.vars().to_vec();
        let rules: Vec<&SubstitutionRule> = subs.rules.iter().filter(|r| r.measure == label).collect();
        let raw = monomial_basis(&vars, cap);
        let mut red = Reducer::new(rules.clone(), cap, vars.len());
        let mut reduction = HashMap::with_capacity(raw.len());
        for m in &raw {
            let p = red.reduce(m)?;
            reduction.insert(m.clone(), p);
        }
        for &k in &red.abandoned {
            residual_support.push(rule_as_constraint(rules[k].clone()));
        }
        let mut reps: Vec<Monomial> = raw
            .iter()
            .filter(|m| reduction[*m].as_monic_monomial() == Some(*m))
            .cloned()
            .collect();
        reps.sort();
        let mut rep_var = HashMap::with_capacity(reps.len());
        for m in &reps {
            rep_var.insert(m.clone(), moment_vars.len());
            moment_vars.push((label, m.clone()));
        }
        measures.push(MeasureIndex {
            label,
            vars,
            raw_monomials: raw.len(),
            reps,
            rep_var,
            reduction,
            lowered: HashMap::new(),
            constraint_half_degree: 1,
        });
    }
    let nmom = moment_vars.len();
    let find = |label: Label| labels.iter().position(|&l| l == label);

    // moment-level bindings, resolved to forms over unbound moment variables
    let raw_lower = |e: &MomentExpr, measures: &[MeasureIndex]| -> Result<Affine> {
        let mut out = Affine::constant(e.constant_part());
        for (label, p) in e.terms() {
            let idx = &measures[find(label).ok_or(Error::UnknownMeasure(label))?];
            for (m, c) in p.terms() {
                let red = idx.reduction.get(m).ok_or(Error::ConstraintDegree)?;
                for (rep, rc) in red.terms() {
                    out.axpy(c * rc, &Affine::var(idx.rep_var[rep]));
                }
            }
        }
        Ok(out)
    };
    let mut bound: HashMap<usize, Affine> = HashMap::new();
    let mut residual_moment = subs.residual_moment.clone();
    let mut bindings_applied = 0usize;
    for b in &subs.bindings {
        let constraint = MomentConstraint::new(
            MomentExpr::integral(b.measure, Polynomial::from(b.monomial.clone())),
            Relation::Eq,
            b.value.clone(),
        );
        let idx = &measures[find(b.measure).ok_or(Error::UnknownMeasure(b.measure))?];
        let target = idx
            .reduction
            .get(&b.monomial)
            .and_then(|p| p.as_monic_monomial())
            .and_then(|m| idx.rep_var.get(m).copied());
        let Some(v) = target else {
            residual_moment.push(constraint);
            continue;
        };
        let resolve = |a: &Affine, bound: &HashMap<usize, Affine>| {
            a.compose(|j| bound.get(&j).cloned().unwrap_or_else(|| Affine::var(j)))
        };
        let value = resolve(&raw_lower(&b.value, &measures)?, &bound);
        if let Some(prev) = bound.get(&v) {
            if prev.key() == value.key() {
                continue;
            }
            if prev.is_constant() && value.is_constant() {
                return Err(Error::InconsistentSubstitutions);
            }
            residual_moment.push(constraint);
            continue;
        }
        if value.coeff(v) != 0.0 {
            residual_moment.push(constraint);
            continue;
        }
        for a in bound.values_mut() {
            let c = a.coeff(v);
            if c != 0.0 {
                a.axpy(-c, &Affine::var(v));
                a.axpy(c, &value);
            }
        }
        bound.insert(v, value);
        bindings_applied += 1;
    }

    // decision variables are the unbound moments
    let mut free_of = vec![usize::MAX; nmom];
    let mut num_free = 0;
    for (j, slot) in free_of.iter_mut().enumerate() {
        if !bound.contains_key(&j) {
            *slot = num_free;
            num_free += 1;
        }
    }
    let moment_affine: Vec<Affine> = (0..nmom)
        .map(|j| match bound.get(&j) {
            Some(a) => a.compose(|k| Affine::var(free_of[k])),
            None => Affine::var(free_of[j]),
        })
        .collect();
    for idx in measures.iter_mut() {
        let mut lowered = HashMap::with_capacity(idx.reduction.len());
        for (m, p) in &idx.reduction {
            let mut a = Affine::zero();
            for (rep, c) in p.terms() {
                a.axpy(c, &moment_affine[idx.rep_var[rep]]);
            }
            lowered.insert(m.clone(), a);
        }
        idx.lowered = lowered;
    }

    // half degrees of support constraints
    for c in &residual_support {
        let (g, _) = c.normalized();
        let v = (g.degree() as usize).div_ceil(2);
        if v > r {
            return Err(Error::ConstraintDegree);
        }
        if let Some(i) = find(c.measure) {
            measures[i].constraint_half_degree = measures[i].constraint_half_degree.max(v);
        }
    }

    // moment matrices
    let mut blocks = Vec::new();
    let mut ineq_rows = Vec::new();
    let mut eq_rows = Vec::new();
    for idx in &measures {
        let basis = idx.basis(r);
        let one = Polynomial::one();
        let block = PsdBlock::from_upper(BlockKind::Moment { measure: idx.label }, basis.len(), |i, j| {
            idx.lower_poly(&one, &basis[i].mul(&basis[j]))
        })?;
        if block.size == 1 {
            ineq_rows.push(block.entry(0, 0).clone());
        } else if block.size > 1 {
            blocks.push(block);
        }
    }

    // localizing data
    for (ci, c) in residual_support.iter().enumerate() {
        let idx = &measures[find(c.measure).ok_or(Error::UnknownMeasure(c.measure))?];
        let (g, rel) = c.normalized();
        let v = (g.degree() as usize).div_ceil(2);
        let basis = idx.basis(r - v);
        match rel {
            Relation::Eq => {
                for i in 0..basis.len() {
                    for j in i..basis.len() {
                        eq_rows.push(idx.lower_poly(&g, &basis[i].mul(&basis[j]))?);
                    }
                }
            }
            _ => {
                let kind = BlockKind::Localizing {
                    measure: c.measure,
                    constraint: ci,
                };
                let block = PsdBlock::from_upper(kind, basis.len(), |i, j| {
                    idx.lower_poly(&g, &basis[i].mul(&basis[j]))
                })?;
                if block.size == 1 {
                    ineq_rows.push(block.entry(0, 0).clone());
                } else {
                    blocks.push(block);
                }
            }
        }
    }

    // linear moment constraints
    let lower_expr = |e: &MomentExpr| -> Result<Affine> {
        let mut out = Affine::constant(e.constant_part());
        for (label, p) in e.terms() {
            let idx = &measures[find(label).ok_or(Error::UnknownMeasure(label))?];
            out.axpy(1.0, &idx.lower_poly(p, &Monomial::one())?);
        }
        Ok(out)
    };
    for c in &residual_moment {
        let (e, rel) = c.normalized();
        let a = lower_expr(&e)?;
        match rel {
            Relation::Eq => eq_rows.push(a),
            _ => ineq_rows.push(a),
        }
    }
    let objective_affine = lower_expr(&objective.expr)?;

    let eq_rows = dedup_rows(eq_rows, true);
    let ineq_rows = dedup_rows(ineq_rows, false);

    let report = AssemblyReport {
        measure_labels: labels.clone(),
        order: r,
        decision_variables: num_free,
        linear_equalities: eq_rows.len(),
        linear_inequalities: ineq_rows.len(),
        psd_blocks: blocks.iter().map(|b| b.size).collect(),
        total_monomials: measures.iter().map(|m| m.raw_monomials).sum(),
        monomials_after_substitution: num_free,
        support_constraints: problem.support_constraints().len(),
        substitutions: subs.rules.len(),
        moment_constraints: problem.moment_constraints().len() - mass_label.is_some() as usize,
        mass_set_to_one: mass_label,
        measures: measures
            .iter()
            .map(|m| MeasureLog {
                label: m.label,
                max_degree: data_degree(&problem, m.label),
                variables: m.vars.len(),
                moments: m.raw_monomials,
            })
            .collect(),
    };
    let _ = bindings_applied;

    Ok(MomentSdp {
        order: r,
        direction: objective.direction,
        measures,
        moment_vars,
        moment_affine,
        num_free,
        blocks,
        eq_rows,
        ineq_rows,
        objective: objective_affine,
        objective_expr: objective.expr,
        rules: subs.rules,
        residual_support,
        support: problem.support_constraints().to_vec(),
        report,
    })
}

// Drops exact duplicates and rows that hold trivially.
fn dedup_rows(rows: Vec<Affine>, equality: bool) -> Vec<Affine> {
    let mut seen = HashSet::new();
    rows.into_iter()
        .filter(|a| {
            if a.is_constant() {
                let trivially_true = if equality { a.constant == 0.0 } else { a.constant >= 0.0 };
                if trivially_true {
                    return false;
                }
            }
            seen.insert(a.key())
        })
        .collect()
}
