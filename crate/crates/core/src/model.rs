//! Measures, moments and constraints of a generalized problem of moments.
//!
//! A [`ModelContext`] owns every declared variable and groups them into
//! measures labelled `1, 2, ...` in creation order. Moment expressions,
//! support constraints and moment constraints are validated against the
//! context when they are built, and a [`GpmProblem`] collects them together
//! with an objective.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::poly::{monomial_basis, Monomial, PolyMatrix, Polynomial, Var};

/// Measure label, starting at 1.
pub type Label = u32;

#[derive(Clone, Debug)]
struct VarInfo {
    name: String,
    measure: Label,
}

/// Finite atomic support assigned to a measure. Point coordinates follow the
/// measure's variable order.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSupport {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteSupport {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Clone, Debug)]
pub struct Measure {
    label: Label,
    vars: Vec<Var>,
    support: Option<DiscreteSupport>,
}

impl Measure {
    pub fn label(&self) -> Label {
        self.label
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn support(&self) -> Option<&DiscreteSupport> {
        self.support.as_ref()
    }
}

/// Owner of variables and measures. Replaces a global workspace: dropping
/// the context drops everything declared in it.
#[derive(Clone, Debug, Default)]
pub struct ModelContext {
    vars: Vec<VarInfo>,
    measures: Vec<Measure>,
    names: HashMap<String, Vec<Var>>,
    next_label: Label,
    current: Option<Label>,
}

impl ModelContext {
    pub fn new() -> Self {
        ModelContext {
            next_label: 1,
            ..Default::default()
        }
    }

    /// Declares a `rows x cols` array of variables named `name`, `name(i)` or
    /// `name(i,j)`, in column-major order. Variables join `measure`, or the
    /// most recently created measure when `None`.
    pub fn declare_vars(
        &mut self,
        name: &str,
        shape: (usize, usize),
        measure: Option<Label>,
    ) -> Result<Vec<Var>> {
        if self.names.contains_key(name) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        let label = match measure {
            Some(l) => {
                self.measure_index(l)?;
                l
            }
            None => match self.current {
                Some(l) if self.measure_index(l).is_ok() => l,
                _ => self.new_measure(&[])?,
            },
        };
        let (rows, cols) = shape;
        let mut out = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                let full = match (rows, cols) {
                    (1, 1) => name.to_string(),
                    (_, 1) => format!("{name}({})", i + 1),
                    (1, _) => format!("{name}({})", j + 1),
                    _ => format!("{name}({},{})", i + 1, j + 1),
                };
                let v = Var::new(self.vars.len() as u32);
                self.vars.push(VarInfo {
                    name: full,
                    measure: label,
                });
                out.push(v);
            }
        }
        let idx = self.measure_index(label)?;
        self.measures[idx].vars.extend_from_slice(&out);
        self.names.insert(name.to_string(), out.clone());
        Ok(out)
    }

    pub fn declare_scalar(&mut self, name: &str) -> Result<Var> {
        Ok(self.declare_vars(name, (1, 1), None)?[0])
    }

    pub fn declare_vector(&mut self, name: &str, n: usize) -> Result<Vec<Var>> {
        self.declare_vars(name, (n, 1), None)
    }

    /// Moves `vars` into a fresh measure, which becomes the current one.
    /// Measures left without variables are dropped; labels are never reused.
    pub fn new_measure(&mut self, vars: &[Var]) -> Result<Label> {
        for &v in vars {
            self.var_info(v)?;
        }
        let label = self.next_label;
        self.next_label += 1;
        let mut touched = BTreeSet::new();
        for &v in vars {
            let old = self.vars[v.id() as usize].measure;
            if let Ok(i) = self.measure_index(old) {
                self.measures[i].vars.retain(|&w| w != v);
                self.measures[i].support = None;
                touched.insert(old);
            }
            self.vars[v.id() as usize].measure = label;
        }
        self.measures
            .retain(|m| !(touched.contains(&m.label) && m.vars.is_empty()));
        let mut owned: Vec<Var> = vars.to_vec();
        owned.dedup();
        self.measures.push(Measure {
            label,
            vars: owned,
            support: None,
        });
        self.current = Some(label);
        Ok(label)
    }

    pub fn measures(&self) -> &[Measure] {
        &self.measures
    }

    pub fn labels(&self) -> Vec<Label> {
        self.measures.iter().map(|m| m.label).collect()
    }

    pub fn measure(&self, label: Label) -> Result<&Measure> {
        self.measure_index(label).map(|i| &self.measures[i])
    }

    fn measure_index(&self, label: Label) -> Result<usize> {
        self.measures
            .iter()
            .position(|m| m.label == label)
            .ok_or(Error::UnknownMeasure(label))
    }

    fn var_info(&self, v: Var) -> Result<&VarInfo> {
        self.vars
            .get(v.id() as usize)
            .ok_or_else(|| Error::UnknownVariable(v.to_string()))
    }

    pub fn var_name(&self, v: Var) -> String {
        self.vars
            .get(v.id() as usize)
            .map(|i| i.name.clone())
            .unwrap_or_else(|| v.to_string())
    }

    /// Variables declared under `name`, in declaration order.
    pub fn lookup(&self, name: &str) -> Option<&[Var]> {
        self.names.get(name).map(Vec::as_slice)
    }

    /// Variable with the given display name, e.g. `x(2)`.
    pub fn var_by_name(&self, full: &str) -> Option<Var> {
        self.vars
            .iter()
            .position(|i| i.name == full)
            .map(|i| Var::new(i as u32))
    }

    pub fn measure_of(&self, v: Var) -> Result<Label> {
        Ok(self.var_info(v)?.measure)
    }

    /// Labels of the measures owning the variables of `p`.
    pub fn measures_of(&self, p: &Polynomial) -> Result<BTreeSet<Label>> {
        p.vars().into_iter().map(|v| self.measure_of(v)).collect()
    }

    fn single_measure_of_vars(&self, vars: &[Var]) -> Result<Option<Label>> {
        let labels: BTreeSet<Label> = vars
            .iter()
            .map(|&v| self.measure_of(v))
            .collect::<Result<_>>()?;
        match labels.len() {
            0 => Ok(None),
            1 => Ok(labels.into_iter().next()),
            _ => Err(Error::VarsFromSeveralMeasures),
        }
    }

    /// Vector of monomials of degree at most `d` in `vars`, which must all
    /// belong to one measure.
    pub fn mmon(&self, vars: &[Var], d: u32) -> Result<PolyMatrix> {
        self.single_measure_of_vars(vars)?;
        Ok(PolyMatrix::column(
            monomial_basis(vars, d).into_iter().map(Polynomial::from).collect(),
        ))
    }

    pub fn fmt_poly(&self, p: &Polynomial) -> String {
        p.fmt_with(&|v| self.var_name(v))
    }

    pub fn fmt_monomial(&self, m: &Monomial) -> String {
        m.fmt_with(&|v| self.var_name(v))
    }

    pub fn fmt_moment(&self, e: &MomentExpr) -> String {
        let mut parts = Vec::new();
        if e.constant != 0.0 || e.terms.is_empty() {
            parts.push(crate::poly::format_coeff(e.constant));
        }
        for (label, p) in &e.terms {
            parts.push(format!("I[{}]d[{}]", self.fmt_poly(p), label));
        }
        parts.join("+").replace("+-", "-")
    }

    /// `∫ p dμ_k` for the unique measure `k` of the variables of `p`.
    pub fn mom(&self, p: &Polynomial) -> Result<MomentExpr> {
        if p.is_zero() {
            return Ok(MomentExpr::zero());
        }
        let labels = self.measures_of(p)?;
        match labels.len() {
            0 => Err(Error::ConstantMoment),
            1 => Ok(MomentExpr::integral(*labels.iter().next().unwrap(), p.clone())),
            _ => Err(Error::InvalidPartitioning),
        }
    }

    /// `∫ p dμ_label`; constants are allowed since the measure is explicit.
    pub fn mom_in(&self, label: Label, p: &Polynomial) -> Result<MomentExpr> {
        self.measure_index(label)?;
        for l in self.measures_of(p)? {
            if l != label {
                return Err(Error::InvalidPartitioning);
            }
        }
        Ok(MomentExpr::integral(label, p.clone()))
    }

    /// Entrywise moments of a polynomial matrix, row-major. Constant entries
    /// integrate against the measure of the other entries when that measure
    /// is unique.
    pub fn mom_matrix(&self, m: &PolyMatrix) -> Result<Vec<MomentExpr>> {
        let mut all = BTreeSet::new();
        for p in m.entries() {
            all.extend(self.measures_of(p)?);
        }
        let shared = (all.len() == 1).then(|| *all.iter().next().unwrap());
        m.entries()
            .iter()
            .map(|p| match (p.is_constant(), shared) {
                (true, Some(l)) if !p.is_zero() => self.mom_in(l, p),
                _ => self.mom(p),
            })
            .collect()
    }

    /// `∫ 1 dμ_label`.
    pub fn mass(&self, label: Label) -> Result<MomentExpr> {
        self.measure_index(label)?;
        Ok(MomentExpr::integral(label, Polynomial::one()))
    }

    /// Mass of the measure owning `vars`.
    pub fn mass_of(&self, vars: &[Var]) -> Result<MomentExpr> {
        match self.single_measure_of_vars(vars)? {
            Some(l) => self.mass(l),
            None => Err(Error::ConstantMoment),
        }
    }

    /// Support constraint `lhs rel rhs`; both sides must live on one measure.
    pub fn support_constraint(
        &self,
        lhs: Polynomial,
        rel: Relation,
        rhs: Polynomial,
    ) -> Result<SupportConstraint> {
        let mut labels = self.measures_of(&lhs)?;
        labels.extend(self.measures_of(&rhs)?);
        match labels.len() {
            0 => Err(Error::ConstantSupport),
            1 => Ok(SupportConstraint {
                measure: *labels.iter().next().unwrap(),
                lhs,
                rel,
                rhs,
            }),
            _ => Err(Error::SeveralMeasures),
        }
    }

    /// Entrywise support constraints between two equally shaped matrices.
    pub fn support_constraints(
        &self,
        lhs: &PolyMatrix,
        rel: Relation,
        rhs: &PolyMatrix,
    ) -> Result<Vec<SupportConstraint>> {
        if lhs.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch("support constraint operands".into()));
        }
        lhs.entries()
            .iter()
            .zip(rhs.entries())
            .map(|(a, b)| self.support_constraint(a.clone(), rel, b.clone()))
            .collect()
    }

    /// Makes the measure owning `vars` discrete. Each point lists one
    /// coordinate per entry of `vars`; `vars` must be exactly the variables
    /// of that measure. Weights default to `1/N`.
    pub fn assign(
        &mut self,
        vars: &[Var],
        points: &[Vec<f64>],
        weights: Option<Vec<f64>>,
    ) -> Result<Label> {
        let label = self
            .single_measure_of_vars(vars)?
            .ok_or_else(|| Error::DimensionMismatch("no variables to assign".into()))?;
        let idx = self.measure_index(label)?;
        let mvars = self.measures[idx].vars.clone();
        let given: BTreeSet<Var> = vars.iter().copied().collect();
        let owned: BTreeSet<Var> = mvars.iter().copied().collect();
        if given != owned || vars.len() != mvars.len() {
            return Err(Error::DimensionMismatch(format!(
                "measure {label} has {} variables, {} given",
                mvars.len(),
                vars.len()
            )));
        }
        let order: Vec<usize> = mvars
            .iter()
            .map(|v| vars.iter().position(|w| w == v).unwrap())
            .collect();
        let mut pts = Vec::with_capacity(points.len());
        for p in points {
            if p.len() != vars.len() {
                return Err(Error::DimensionMismatch(format!(
                    "point of dimension {} for {} variables",
                    p.len(),
                    vars.len()
                )));
            }
            pts.push(order.iter().map(|&k| p[k]).collect());
        }
        self.set_support(label, pts, weights)?;
        Ok(label)
    }

    /// Assigns support points given in the measure's own variable order.
    pub fn set_support(
        &mut self,
        label: Label,
        points: Vec<Vec<f64>>,
        weights: Option<Vec<f64>>,
    ) -> Result<()> {
        let idx = self.measure_index(label)?;
        let n = self.measures[idx].vars.len();
        if points.iter().any(|p| p.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "measure {label} points must have {n} coordinates"
            )));
        }
        let weights = match weights {
            Some(w) => {
                if w.len() != points.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} weights for {} points",
                        w.len(),
                        points.len()
                    )));
                }
                w
            }
            None => vec![1.0 / points.len().max(1) as f64; points.len()],
        };
        self.measures[idx].support = Some(DiscreteSupport { points, weights });
        Ok(())
    }

    pub fn clear_support(&mut self, label: Label) -> Result<()> {
        let idx = self.measure_index(label)?;
        self.measures[idx].support = None;
        Ok(())
    }

    pub fn support(&self, label: Label) -> Result<&DiscreteSupport> {
        self.measure(label)?.support.as_ref().ok_or(Error::NoDiscreteSupport)
    }

    /// Point coordinates of a discrete measure, one vector per atom.
    pub fn support_points(&self, label: Label) -> Result<&[Vec<f64>]> {
        Ok(&self.support(label)?.points)
    }

    /// Values of `p` at each atom of the measure owning its variables.
    pub fn eval_poly(&self, p: &Polynomial) -> Result<Vec<f64>> {
        let labels = self.measures_of(p)?;
        match labels.len() {
            0 => Err(Error::ConstantMoment),
            1 => self.eval_poly_on(*labels.iter().next().unwrap(), p),
            _ => Err(Error::VarsFromSeveralMeasures),
        }
    }

    /// Values of `p` at each atom of measure `label`.
    pub fn eval_poly_on(&self, label: Label, p: &Polynomial) -> Result<Vec<f64>> {
        let m = self.measure(label)?;
        let sup = m.support.as_ref().ok_or(Error::NoDiscreteSupport)?;
        sup.points
            .iter()
            .map(|pt| {
                p.eval_with(|v| m.vars.iter().position(|&w| w == v).map(|k| pt[k]))
                    .map_err(|_| Error::UnassignedVariable(self.fmt_poly(p)))
            })
            .collect()
    }

    /// Value of a moment expression when every measure it integrates
    /// against is discrete: `c + Σ_k Σ_j w_kj p_k(x_kj)`.
    pub fn eval_moment(&self, e: &MomentExpr) -> Result<f64> {
        let mut acc = e.constant;
        for (&label, p) in &e.terms {
            let w = &self.support(label)?.weights;
            let vals = self.eval_poly_on(label, p)?;
            acc += w.iter().zip(vals).map(|(w, v)| w * v).sum::<f64>();
        }
        Ok(acc)
    }
}

/// Linear combination of integrals over measures plus a constant:
/// `constant + Σ_k ∫ p_k dμ_k`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MomentExpr {
    constant: f64,
    terms: BTreeMap<Label, Polynomial>,
}

impl MomentExpr {
    pub fn zero() -> Self {
        MomentExpr::default()
    }

    pub fn constant(c: f64) -> Self {
        MomentExpr {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    pub(crate) fn integral(label: Label, p: Polynomial) -> Self {
        let mut terms = BTreeMap::new();
        if !p.is_zero() {
            terms.insert(label, p);
        }
        MomentExpr {
            constant: 0.0,
            terms,
        }
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (Label, &Polynomial)> + '_ {
        self.terms.iter().map(|(&l, p)| (l, p))
    }

    pub fn term(&self, label: Label) -> Option<&Polynomial> {
        self.terms.get(&label)
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        self.terms.keys().copied().collect()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.values().map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, s: f64) -> MomentExpr {
        let mut out = MomentExpr::constant(self.constant * s);
        for (&l, p) in &self.terms {
            let q = p.scale(s);
            if !q.is_zero() {
                out.terms.insert(l, q);
            }
        }
        out
    }

    /// Product of two moment expressions; only defined when one side is a
    /// plain constant.
    pub fn checked_mul(&self, rhs: &MomentExpr) -> Result<MomentExpr> {
        if self.is_constant() {
            Ok(rhs.scale(self.constant))
        } else if rhs.is_constant() {
            Ok(self.scale(rhs.constant))
        } else {
            Err(Error::InvalidMomentProduct)
        }
    }

    fn combine(&self, rhs: &MomentExpr, sign: f64) -> MomentExpr {
        let mut out = self.clone();
        out.constant += sign * rhs.constant;
        for (&l, p) in &rhs.terms {
            let entry = out.terms.entry(l).or_default();
            if sign > 0.0 {
                *entry += p;
            } else {
                *entry -= p;
            }
            if entry.is_zero() {
                out.terms.remove(&l);
            }
        }
        out
    }
}

impl Add<&MomentExpr> for &MomentExpr {
    type Output = MomentExpr;
    fn add(self, rhs: &MomentExpr) -> MomentExpr {
        self.combine(rhs, 1.0)
    }
}

impl Sub<&MomentExpr> for &MomentExpr {
    type Output = MomentExpr;
    fn sub(self, rhs: &MomentExpr) -> MomentExpr {
        self.combine(rhs, -1.0)
    }
}

impl Add for MomentExpr {
    type Output = MomentExpr;
    fn add(self, rhs: MomentExpr) -> MomentExpr {
        self.combine(&rhs, 1.0)
    }
}

impl Sub for MomentExpr {
    type Output = MomentExpr;
    fn sub(self, rhs: MomentExpr) -> MomentExpr {
        self.combine(&rhs, -1.0)
    }
}

impl Add<f64> for MomentExpr {
    type Output = MomentExpr;
    fn add(mut self, rhs: f64) -> MomentExpr {
        self.constant += rhs;
        self
    }
}

impl Add<MomentExpr> for f64 {
    type Output = MomentExpr;
    fn add(self, mut rhs: MomentExpr) -> MomentExpr {
        rhs.constant += self;
        rhs
    }
}

impl Sub<f64> for MomentExpr {
    type Output = MomentExpr;
    fn sub(mut self, rhs: f64) -> MomentExpr {
        self.constant -= rhs;
        self
    }
}

impl Sub<MomentExpr> for f64 {
    type Output = MomentExpr;
    fn sub(self, rhs: MomentExpr) -> MomentExpr {
        MomentExpr::constant(self) - rhs
    }
}

impl Mul<MomentExpr> for f64 {
    type Output = MomentExpr;
    fn mul(self, rhs: MomentExpr) -> MomentExpr {
        rhs.scale(self)
    }
}

impl Mul<f64> for MomentExpr {
    type Output = MomentExpr;
    fn mul(self, rhs: f64) -> MomentExpr {
        self.scale(rhs)
    }
}

impl Neg for MomentExpr {
    type Output = MomentExpr;
    fn neg(self) -> MomentExpr {
        self.scale(-1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "==",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        })
    }
}

/// Restriction of the support of one measure. Sides are kept exactly as
/// written: substitution rules are only read off a raw left-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportConstraint {
    pub measure: Label,
    pub lhs: Polynomial,
    pub rel: Relation,
    pub rhs: Polynomial,
}

impl SupportConstraint {
    /// `(g, rel')` with `g rel' 0`, where `rel'` is `>=` or `==`.
    pub fn normalized(&self) -> (Polynomial, Relation) {
        match self.rel {
            Relation::Le => (&self.rhs - &self.lhs, Relation::Ge),
            rel => (&self.lhs - &self.rhs, rel),
        }
    }

    pub fn degree(&self) -> u32 {
        self.lhs.degree().max(self.rhs.degree())
    }

    /// True when the point `value` satisfies the constraint up to
    /// `tol * (1 + |rhs|)`.
    pub fn satisfied_at<F: Fn(Var) -> Option<f64> + Copy>(&self, value: F, tol: f64) -> Result<bool> {
        let l = self.lhs.eval_with(value)?;
        let r = self.rhs.eval_with(value)?;
        let slack = tol * (1.0 + r.abs());
        Ok(match self.rel {
            Relation::Eq => (l - r).abs() <= slack,
            Relation::Le => l <= r + slack,
            Relation::Ge => l >= r - slack,
        })
    }
}

/// Linear relation between moment expressions, possibly across measures.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentConstraint {
    pub lhs: MomentExpr,
    pub rel: Relation,
    pub rhs: MomentExpr,
}

impl MomentConstraint {
    pub fn new(lhs: MomentExpr, rel: Relation, rhs: MomentExpr) -> Self {
        MomentConstraint { lhs, rel, rhs }
    }

    /// Entrywise constraints between equally long expression vectors.
    pub fn vector(lhs: Vec<MomentExpr>, rel: Relation, rhs: Vec<MomentExpr>) -> Result<Vec<Self>> {
        if lhs.len() != rhs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} moment expressions against {}",
                lhs.len(),
                rhs.len()
            )));
        }
        Ok(lhs
            .into_iter()
            .zip(rhs)
            .map(|(l, r)| MomentConstraint::new(l, rel, r))
            .collect())
    }

    /// `(lhs - rhs, rel)` with `<=` flipped to `>=`.
    pub fn normalized(&self) -> (MomentExpr, Relation) {
        match self.rel {
            Relation::Le => (&self.rhs - &self.lhs, Relation::Ge),
            rel => (&self.lhs - &self.rhs, rel),
        }
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        let mut l = self.lhs.labels();
        l.extend(self.rhs.labels());
        l
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Min,
    Max,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Min => "min",
            Direction::Max => "max",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub direction: Direction,
    pub expr: MomentExpr,
}

/// Anything usable as an objective: a moment expression, or a polynomial
/// that is integrated against its own measure.
pub enum ObjectiveTarget {
    Moment(MomentExpr),
    Poly(Polynomial),
}

impl From<MomentExpr> for ObjectiveTarget {
    fn from(e: MomentExpr) -> Self {
        ObjectiveTarget::Moment(e)
    }
}

impl From<Polynomial> for ObjectiveTarget {
    fn from(p: Polynomial) -> Self {
        ObjectiveTarget::Poly(p)
    }
}

/// A generalized problem of moments: one objective, support constraints per
/// measure and linear moment constraints.
#[derive(Clone, Debug)]
pub struct GpmProblem {
    ctx: ModelContext,
    objective: Option<Objective>,
    support: Vec<SupportConstraint>,
    moments: Vec<MomentConstraint>,
}

impl GpmProblem {
    pub fn new(ctx: ModelContext) -> Self {
        GpmProblem {
            ctx,
            objective: None,
            support: Vec::new(),
            moments: Vec::new(),
        }
    }

    pub fn ctx(&self) -> &ModelContext {
        &self.ctx
    }

    pub fn ctx_mut(&mut self) -> &mut ModelContext {
        &mut self.ctx
    }

    pub fn into_ctx(self) -> ModelContext {
        self.ctx
    }

    pub fn set_objective<T: Into<ObjectiveTarget>>(&mut self, direction: Direction, target: T) -> Result<&Objective> {
        if self.objective.is_some() {
            return Err(Error::ObjectiveAlreadySet);
        }
        let expr = match target.into() {
            ObjectiveTarget::Moment(e) => e,
            ObjectiveTarget::Poly(p) => self.ctx.mom(&p)?,
        };
        self.check_labels(expr.labels())?;
        self.objective = Some(Objective { direction, expr });
        Ok(self.objective.as_ref().unwrap())
    }

    pub fn minimize<T: Into<ObjectiveTarget>>(&mut self, target: T) -> Result<&Objective> {
        self.set_objective(Direction::Min, target)
    }

    pub fn maximize<T: Into<ObjectiveTarget>>(&mut self, target: T) -> Result<&Objective> {
        self.set_objective(Direction::Max, target)
    }

    pub fn add_support(&mut self, c: SupportConstraint) -> Result<()> {
        self.check_labels([c.measure].into())?;
        self.support.push(c);
        Ok(())
    }

    /// Builds and adds `lhs rel rhs` as a support constraint.
    pub fn subject_to(&mut self, lhs: Polynomial, rel: Relation, rhs: Polynomial) -> Result<()> {
        let c = self.ctx.support_constraint(lhs, rel, rhs)?;
        self.add_support(c)
    }

    pub fn add_moment(&mut self, c: MomentConstraint) -> Result<()> {
        self.check_labels(c.labels())?;
        self.moments.push(c);
        Ok(())
    }

    fn check_labels(&self, labels: BTreeSet<Label>) -> Result<()> {
        for l in labels {
            self.ctx.measure(l)?;
        }
        Ok(())
    }

    pub fn objective(&self) -> Option<&Objective> {
        self.objective.as_ref()
    }

    pub fn support_constraints(&self) -> &[SupportConstraint] {
        &self.support
    }

    pub fn moment_constraints(&self) -> &[MomentConstraint] {
        &self.moments
    }

    /// Measures that appear in the objective or any constraint.
    pub fn active_labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        if let Some(o) = &self.objective {
            out.extend(o.expr.labels());
        }
        out.extend(self.support.iter().map(|c| c.measure));
        for c in &self.moments {
            out.extend(c.labels());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> (ModelContext, Var, Vec<Var>) {
        let mut ctx = ModelContext::new();
        let x = ctx.declare_scalar("x").unwrap();
        let y = ctx.declare_vector("y", 2).unwrap();
        (ctx, x, y)
    }

    #[test]
    fn declarations_and_names() {
        let mut ctx = ModelContext::new();
        let x = ctx.declare_scalar("x").unwrap();
        assert_eq!(ctx.var_name(x), "x");
        assert_eq!(ctx.measure_of(x).unwrap(), 1);
        let z = ctx.declare_vars("z", (3, 2), None).unwrap();
        let names: Vec<String> = z.iter().map(|&v| ctx.var_name(v)).collect();
        assert_eq!(names, ["z(1,1)", "z(2,1)", "z(3,1)", "z(1,2)", "z(2,2)", "z(3,2)"]);
        assert!(matches!(ctx.declare_vector("x", 3), Err(Error::DuplicateName(_))));
    }

    #[test]
    fn regrouping_into_new_measure() {
        let (mut ctx, x, y) = session();
        assert_eq!(ctx.measure(1).unwrap().vars().len(), 3);
        let m2 = ctx.new_measure(&y).unwrap();
        assert_eq!(m2, 2);
        assert_eq!(ctx.measure(1).unwrap().vars(), &[x]);
        assert_eq!(ctx.measure(2).unwrap().vars(), y.as_slice());
        assert_eq!(ctx.labels(), vec![1, 2]);
    }

    #[test]
    fn emptied_measure_is_dropped_without_relabeling() {
        let mut ctx = ModelContext::new();
        let x = ctx.declare_vector("x", 2).unwrap();
        let l = ctx.new_measure(&x).unwrap();
        assert_eq!(l, 2);
        assert_eq!(ctx.labels(), vec![2]);
        let e = ctx.new_measure(&[]).unwrap();
        assert_eq!(e, 3);
        let u = ctx.declare_scalar("u").unwrap();
        assert_eq!(ctx.measure_of(u).unwrap(), 3);
    }

    #[test]
    fn moments_and_errors() {
        let (mut ctx, x, y) = session();
        ctx.new_measure(&y).unwrap();
        let e = ctx.mom(&(1.0 + 2.0 * x + 3.0 * x.pow(2))).unwrap();
        assert_eq!(ctx.fmt_moment(&e), "I[1+2x+3x^2]d[1]");
        let one_plus = 1.0 + ctx.mom(&x.poly()).unwrap();
        assert_eq!(ctx.fmt_moment(&one_plus), "1+I[x]d[1]");
        assert_ne!(one_plus, ctx.mom(&(1.0 + x)).unwrap());
        let err = ctx.mom(&(x * y[0])).unwrap_err();
        assert_eq!(err.to_string(), "Invalid partitioning of measures in moments");
        let a = ctx.mom(&x.poly()).unwrap();
        let b = ctx.mom(&y[0].poly()).unwrap();
        assert_eq!(a.checked_mul(&b).unwrap_err().to_string(), "Invalid moment product");
        assert!(matches!(ctx.mom(&Polynomial::one()), Err(Error::ConstantMoment)));
    }

    #[test]
    fn moment_matrix_of_outer_product() {
        let (mut ctx, _x, y) = session();
        ctx.new_measure(&y).unwrap();
        let v = PolyMatrix::from_vars(&y);
        let yy = v.matmul(&v.transpose()).unwrap();
        let m = ctx.mom_matrix(&yy).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(ctx.fmt_moment(&m[1]), "I[y(1)y(2)]d[2]");
    }

    #[test]
    fn mass_notations_agree() {
        let (mut ctx, x, y) = session();
        ctx.new_measure(&y).unwrap();
        let a = ctx.mass(2).unwrap();
        let b = ctx.mass_of(&y).unwrap();
        assert_eq!(a, b);
        assert_eq!(ctx.fmt_moment(&a), "I[1]d[2]");
        assert_eq!(ctx.fmt_moment(&ctx.mass_of(&[x]).unwrap()), "I[1]d[1]");
        assert!(matches!(ctx.mass(7), Err(Error::UnknownMeasure(7))));
        let s = ctx.mass(1).unwrap() + ctx.mass(2).unwrap();
        assert_eq!(ctx.fmt_moment(&s), "I[1]d[1]+I[1]d[2]");
    }

    #[test]
    fn support_constraints() {
        let (mut ctx, x, y) = session();
        ctx.new_measure(&y).unwrap();
        let disk = ctx
            .support_constraint(y[0].pow(2) + y[1].pow(2), Relation::Le, Polynomial::one())
            .unwrap();
        assert_eq!(disk.measure, 2);
        let err = ctx
            .support_constraint(x + y[0], Relation::Le, Polynomial::one())
            .unwrap_err();
        assert_eq!(err.to_string(), "Invalid reference to several measures");
        let eq = ctx
            .support_constraint(2.0 * x.pow(2) + x.pow(3), Relation::Eq, 2.0 + x)
            .unwrap();
        let (g, rel) = eq.normalized();
        assert_eq!(rel, Relation::Eq);
        assert_eq!(g, (x - 1.0) * (x + 1.0) * (x + 2.0));
    }

    #[test]
    fn moment_constraint_normalization() {
        let (mut ctx, x, y) = session();
        ctx.new_measure(&y).unwrap();
        let lhs = ctx.mom(&(x.pow(2) + 2.0)).unwrap();
        let rhs = 1.0 + ctx.mom(&(y[0].pow(3) * y[1])).unwrap();
        assert_eq!(ctx.fmt_moment(&lhs), "I[2+x^2]d[1]");
        assert_eq!(ctx.fmt_moment(&rhs), "1+I[y(1)^3y(2)]d[2]");
        let c = MomentConstraint::new(lhs, Relation::Le, rhs);
        let (g, rel) = c.normalized();
        assert_eq!(rel, Relation::Ge);
        assert_eq!(g.constant_part(), 1.0);
        assert_eq!(c.labels(), [1, 2].into());
    }

    #[test]
    fn objectives() {
        let (ctx, x, y) = session();
        let mut p = GpmProblem::new(ctx);
        p.maximize(x.pow(2) + 2.0).unwrap();
        assert_eq!(p.objective().unwrap().direction, Direction::Max);
        assert!(matches!(p.minimize(x.poly()), Err(Error::ObjectiveAlreadySet)));
        let mut q = GpmProblem::new(p.ctx().clone());
        assert!(matches!(q.minimize(x * y[0]), Ok(_)));
        let mut ctx = ModelContext::new();
        let a = ctx.declare_scalar("a").unwrap();
        let b = ctx.declare_scalar("b").unwrap();
        ctx.new_measure(&[b]).unwrap();
        let mut r = GpmProblem::new(ctx);
        assert!(matches!(r.minimize(a * b), Err(Error::InvalidPartitioning)));
    }

    #[test]
    fn assignment_and_evaluation() {
        let (mut ctx, x, y) = session();
        ctx.new_measure(&y).unwrap();
        ctx.assign(&[x], &[vec![2.0]], None).unwrap();
        assert_eq!(ctx.eval_poly(&x.poly()).unwrap(), vec![2.0]);
        assert_eq!(ctx.eval_poly(&(1.0 - 2.0 * x + 3.0 * x.pow(2))).unwrap(), vec![9.0]);
        assert_eq!(ctx.eval_moment(&ctx.mass(1).unwrap()).unwrap(), 1.0);
        let pts = vec![vec![-1.0, 1.0 / 3.0], vec![2.0, 0.25], vec![0.0, -2.0]];
        ctx.assign(&y, &pts, None).unwrap();
        assert_eq!(ctx.support_points(2).unwrap(), pts.as_slice());
        assert_eq!(ctx.eval_poly_on(2, &Polynomial::constant(5.0)).unwrap(), vec![5.0; 3]);
        assert!(matches!(
            ctx.assign(&y, &[vec![1.0]], None),
            Err(Error::DimensionMismatch(_))
        ));
        let mut fresh = ModelContext::new();
        let t = fresh.declare_scalar("t").unwrap();
        assert!(matches!(fresh.eval_poly(&t.poly()), Err(Error::NoDiscreteSupport)));
    }

    #[test]
    fn mmon_rejects_mixed_measures() {
        let (mut ctx, x, y) = session();
        ctx.new_measure(&y).unwrap();
        assert_eq!(ctx.mmon(&y, 2).unwrap().nrows(), 6);
        assert!(matches!(ctx.mmon(&[x, y[0]], 2), Err(Error::VarsFromSeveralMeasures)));
    }
}
