//! Text front end for moment problems.
//!
//! ```text
//! # camel back
//! var x1; var x2;
//! min 4*x1^2 + x1*x2 - 4*x2^2 - 2.1*x1^4 + 4*x2^4 + (1/3)*x1^6;
//! order 3;
//! ```
//!
//! Statements end with `;` (optional after the last one). A constraint is a
//! moment constraint when either side mentions `mom(` or `mass(`, and a
//! support constraint otherwise. `var` without `in` joins the measure of the
//! last `measure` statement, or measure 1. Comments run from `#` or `%` to
//! the end of the line.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{
    Direction, GpmProblem, Label, ModelContext, MomentConstraint, MomentExpr, ObjectiveTarget,
    Relation,
};
use crate::poly::Polynomial;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// `x`, `x(i)` or `x(i,j)`, 1-based.
    Var { name: String, index: Vec<usize> },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Mom(Box<Expr>),
    /// `mass(m)` for a measure or variable name.
    Mass(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Var {
        name: String,
        shape: Option<(usize, Option<usize>)>,
        measure: Option<String>,
    },
    Measure(String),
    Objective(Direction, Expr),
    Constraint(Expr, Relation, Expr),
    Order(usize),
    /// Points in the variable order of the named measure or variable array.
    Assign(String, Vec<Vec<f64>>),
}

/// Parsed model file. Equality ignores source positions.
#[derive(Clone, Debug)]
pub struct Model {
    pub stmts: Vec<Stmt>,
    /// (line, column) of each statement.
    pub spans: Vec<(usize, usize)>,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.stmts == other.stmts
    }
}

impl Expr {
    /// True when the expression mentions `mom` or `mass`.
    pub fn has_moments(&self) -> bool {
        match self {
            Expr::Mom(_) | Expr::Mass(_) => true,
            Expr::Num(_) | Expr::Var { .. } => false,
            Expr::Neg(e) | Expr::Pow(e, _) => e.has_moments(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.has_moments() || b.has_moments()
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var { name, index } => {
                write!(f, "{name}")?;
                if !index.is_empty() {
                    let idx: Vec<String> = index.iter().map(|i| i.to_string()).collect();
                    write!(f, "({})", idx.join(","))?;
                }
                Ok(())
            }
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_at(f, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, "{}", if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.fmt_at(f, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "{}", if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                b.fmt_at(f, 3)
            }
            Expr::Pow(e, k) => {
                e.fmt_at(f, 5)?;
                write!(f, "^{k}")
            }
            Expr::Mom(e) => {
                write!(f, "mom(")?;
                e.fmt_at(f, 0)?;
                write!(f, ")")
            }
            Expr::Mass(m) => write!(f, "mass({m})"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Var { name, shape, measure } => {
                write!(f, "var {name}")?;
                match shape {
                    Some((n, None)) => write!(f, "[{n}]")?,
                    Some((r, Some(c))) => write!(f, "[{r},{c}]")?,
                    None => {}
                }
                if let Some(m) = measure {
                    write!(f, " in {m}")?;
                }
                write!(f, ";")
            }
            Stmt::Measure(m) => write!(f, "measure {m};"),
            Stmt::Objective(d, e) => write!(f, "{d} {e};"),
            Stmt::Constraint(a, r, b) => write!(f, "{a} {r} {b};"),
            Stmt::Order(r) => write!(f, "order {r};"),
            Stmt::Assign(name, pts) => {
                let pts: Vec<String> = pts
                    .iter()
                    .map(|p| {
                        let c: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                        format!("({})", c.join(", "))
                    })
                    .collect();
                write!(f, "assign {name} = {};", pts.join(", "))
            }
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.stmts {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Int(u64),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(v) => write!(f, "`{v}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const SYMBOLS: [&str; 16] = [
    "==", "<=", ">=", "+", "-", "*", "/", "^", "(", ")", "[", "]", ",", ";", "=", ".",
];

fn lex(text: &str) -> Result<Vec<(Tok, usize, usize)>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' || c == '%' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), ln + 1, col));
                continue;
            }
            if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
                let start = i;
                let mut float = false;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    float = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        float = true;
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let bad = || Error::Parse { line: ln + 1, col, msg: format!("invalid number `{s}`") };
                let tok = if float {
                    Tok::Num(s.parse().map_err(|_| bad())?)
                } else {
                    match s.parse::<u64>() {
                        Ok(v) => Tok::Int(v),
                        Err(_) => Tok::Num(s.parse().map_err(|_| bad())?),
                    }
                };
                out.push((tok, ln + 1, col));
                continue;
            }
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    out.push((Tok::Sym(s), ln + 1, col));
                    i += s.len();
                }
                None => {
                    return Err(Error::Parse { line: ln + 1, col, msg: format!("unexpected character `{c}`") })
                }
            }
        }
    }
    let end = text.lines().count().max(1);
    out.push((Tok::Eof, end, text.lines().last().map_or(1, |l| l.chars().count() + 1)));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (_, line, col) = self.toks[self.pos];
        Err(Error::Parse { line, col, msg: msg.into() })
    }

    fn eat(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(t) if *t == s) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            t => self.err(format!("expected a name, found {t}")),
        }
    }

    fn int(&mut self) -> Result<usize> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(v as usize)
            }
            t => self.err(format!("expected an integer, found {t}")),
        }
    }

    fn end_stmt(&mut self) -> Result<()> {
        if self.eat(";") || matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.err(format!("expected `;`, found {}", self.peek()))
        }
    }

    fn model(&mut self) -> Result<Model> {
        let mut stmts = Vec::new();
        let mut spans = Vec::new();
        loop {
            while self.eat(";") {}
            if matches!(self.peek(), Tok::Eof) {
                break;
            }
            let (_, line, col) = self.toks[self.pos];
            stmts.push(self.stmt()?);
            spans.push((line, col));
        }
        Ok(Model { stmts, spans })
    }

    fn stmt(&mut self) -> Result<Stmt> {
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => String::new(),
        };
        let s = match kw.as_str() {
            "var" => {
                self.next();
                let name = self.ident()?;
                let shape = if self.eat("[") {
                    let n = self.int()?;
                    let c = if self.eat(",") { Some(self.int()?) } else { None };
                    self.expect("]")?;
                    if n == 0 || c == Some(0) {
                        return self.err("array dimensions must be positive");
                    }
                    Some((n, c))
                } else {
                    None
                };
                let measure = if matches!(self.peek(), Tok::Ident(s) if s == "in") {
                    self.next();
                    Some(self.ident()?)
                } else {
                    None
                };
                Stmt::Var { name, shape, measure }
            }
            "measure" => {
                self.next();
                Stmt::Measure(self.ident()?)
            }
            "min" | "max" => {
                self.next();
                let dir = if kw == "min" { Direction::Min } else { Direction::Max };
                Stmt::Objective(dir, self.expr()?)
            }
            "order" => {
                self.next();
                Stmt::Order(self.int()?)
            }
            "assign" => {
                self.next();
                let name = self.ident()?;
                self.expect("=")?;
                let mut pts = vec![self.point()?];
                while self.eat(",") {
                    pts.push(self.point()?);
                }
                Stmt::Assign(name, pts)
            }
            _ => {
                let lhs = self.expr()?;
                let rel = match self.next() {
                    Tok::Sym("==") => Relation::Eq,
                    Tok::Sym("<=") => Relation::Le,
                    Tok::Sym(">=") => Relation::Ge,
                    t => {
                        self.pos -= 1;
                        return self.err(format!("expected `==`, `<=` or `>=`, found {t}"));
                    }
                };
                Stmt::Constraint(lhs, rel, self.expr()?)
            }
        };
        self.end_stmt()?;
        Ok(s)
    }

    fn signed_number(&mut self) -> Result<f64> {
        let neg = if self.eat("-") {
            true
        } else {
            self.eat("+");
            false
        };
        let v = match self.next() {
            Tok::Int(v) => v as f64,
            Tok::Num(v) => v,
            t => {
                self.pos -= 1;
                return self.err(format!("expected a number, found {t}"));
            }
        };
        Ok(if neg { -v } else { v })
    }

    fn point(&mut self) -> Result<Vec<f64>> {
        self.expect("(")?;
        let mut p = vec![self.signed_number()?];
        while self.eat(",") {
            p.push(self.signed_number()?);
        }
        self.expect(")")?;
        Ok(p)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            if self.eat("+") {
                e = Expr::Add(Box::new(e), Box::new(self.term()?));
            } else if self.eat("-") {
                e = Expr::Sub(Box::new(e), Box::new(self.term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        loop {
            if self.eat("*") {
                e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
            } else if self.eat("/") {
                e = Expr::Div(Box::new(e), Box::new(self.unary()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat("+") {
            return self.unary();
        }
        let base = self.primary()?;
        if self.eat("^") {
            let k = self.int()?;
            if matches!(self.peek(), Tok::Sym("^")) {
                return self.err("chained `^` is ambiguous; use parentheses");
            }
            return Ok(Expr::Pow(Box::new(base), k as u32));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.next() {
            Tok::Int(v) => Ok(Expr::Num(v as f64)),
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(name) if name == "mom" => {
                self.expect("(")?;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(Expr::Mom(Box::new(e)))
            }
            Tok::Ident(name) if name == "mass" => {
                self.expect("(")?;
                let m = self.ident()?;
                self.expect(")")?;
                Ok(Expr::Mass(m))
            }
            Tok::Ident(name) => {
                let mut index = Vec::new();
                if self.eat("(") {
                    index.push(self.int()?);
                    if self.eat(",") {
                        index.push(self.int()?);
                    }
                    self.expect(")")?;
                    if index.contains(&0) {
                        return self.err("indices start at 1");
                    }
                }
                Ok(Expr::Var { name, index })
            }
            t => {
                self.pos -= 1;
                self.err(format!("expected an expression, found {t}"))
            }
        }
    }
}

/// Parses model text into statements.
pub fn parse(text: &str) -> Result<Model> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    p.model()
}

/// A model turned into a problem.
#[derive(Clone, Debug)]
pub struct ParsedModel {
    pub problem: GpmProblem,
    /// Relaxation order requested by the file, if any.
    pub order: Option<usize>,
    /// Labels of the named measures.
    pub measures: HashMap<String, Label>,
}

/// Parses and lowers model text.
pub fn parse_model(text: &str) -> Result<ParsedModel> {
    parse(text)?.lower()
}

enum Value {
    Poly(Polynomial),
    Moment(MomentExpr),
}

struct Lowering<'a> {
    ctx: &'a ModelContext,
    measures: &'a HashMap<String, Label>,
}

impl Lowering<'_> {
    fn var(&self, name: &str, index: &[usize]) -> Result<Polynomial> {
        let vars = self.ctx.lookup(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        let full = match index {
            [] if vars.len() == 1 => return Ok(vars[0].poly()),
            [] => return Err(Error::DimensionMismatch(format!("`{name}` has {} entries; index it", vars.len()))),
            [i] => format!("{name}({i})"),
            [i, j] => format!("{name}({i},{j})"),
            _ => unreachable!("parser accepts at most two indices"),
        };
        match self.ctx.var_by_name(&full) {
            Some(v) => Ok(v.poly()),
            // x(k) on a matrix: column-major linear index
            None if index.len() == 1 && index[0] <= vars.len() => Ok(vars[index[0] - 1].poly()),
            None => Err(Error::UnknownVariable(full)),
        }
    }

    fn value(&self, e: &Expr) -> Result<Value> {
        use Value::{Moment, Poly};
        Ok(match e {
            Expr::Num(v) => Poly(Polynomial::constant(*v)),
            Expr::Var { name, index } => Poly(self.var(name, index)?),
            Expr::Neg(a) => match self.value(a)? {
                Poly(p) => Poly(-p),
                Moment(m) => Moment(-m),
            },
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let sub = matches!(e, Expr::Sub(..));
                match (self.value(a)?, self.value(b)?) {
                    (Poly(p), Poly(q)) => Poly(if sub { &p - &q } else { &p + &q }),
                    (x, y) => {
                        let (x, y) = (self.moment(x)?, self.moment(y)?);
                        Moment(if sub { x - y } else { x + y })
                    }
                }
            }
            Expr::Mul(a, b) => match (self.value(a)?, self.value(b)?) {
                (Poly(p), Poly(q)) => Poly(&p * &q),
                (Moment(m), Poly(p)) | (Poly(p), Moment(m)) => Moment(m.scale(constant(&p)?)),
                (Moment(m), Moment(n)) => Moment(m.checked_mul(&n)?),
            },
            Expr::Div(a, b) => {
                let d = match self.value(b)? {
                    Poly(p) => constant(&p)?,
                    Moment(m) if m.is_constant() => m.constant_part(),
                    Moment(_) => return Err(Error::InvalidMomentProduct),
                };
                match self.value(a)? {
                    Poly(p) => Poly(p.scale(1.0 / d)),
                    Moment(m) => Moment(m.scale(1.0 / d)),
                }
            }
            Expr::Pow(a, k) => match self.value(a)? {
                Poly(p) => Poly(p.pow(*k)),
                Moment(m) => {
                    let mut acc = MomentExpr::constant(1.0);
                    for _ in 0..*k {
                        acc = acc.checked_mul(&m)?;
                    }
                    Moment(acc)
                }
            },
            Expr::Mom(a) => match self.value(a)? {
                Poly(p) => Moment(self.ctx.mom(&p)?),
                Moment(_) => return Err(Error::InvalidMomentProduct),
            },
            Expr::Mass(name) => match self.measures.get(name) {
                Some(&l) => Moment(self.ctx.mass(l)?),
                None => {
                    let vars = self.ctx.lookup(name).ok_or_else(|| Error::UnknownVariable(name.clone()))?;
                    Moment(self.ctx.mass_of(vars)?)
                }
            },
        })
    }

    fn moment(&self, v: Value) -> Result<MomentExpr> {
        match v {
            Value::Moment(m) => Ok(m),
            Value::Poly(p) if p.is_constant() => Ok(MomentExpr::constant(p.constant_term())),
            Value::Poly(_) => Err(Error::DimensionMismatch(
                "polynomial outside mom() in a moment expression".into(),
            )),
        }
    }
}

fn constant(p: &Polynomial) -> Result<f64> {
    if p.is_constant() {
        Ok(p.constant_term())
    } else {
        Err(Error::DimensionMismatch("division by a non-constant polynomial".into()))
    }
}

impl Model {
    /// Builds the problem statement by statement, as the equivalent API
    /// calls would. Errors carry the statement position.
    pub fn lower(&self) -> Result<ParsedModel> {
        let mut problem = GpmProblem::new(ModelContext::new());
        let mut measures: HashMap<String, Label> = HashMap::new();
        let mut order = None;
        for (stmt, &(line, col)) in self.stmts.iter().zip(&self.spans) {
            let at = |e: Error| Error::At { line, col, source: Box::new(e) };
            match stmt {
                Stmt::Var { name, shape, measure } => {
                    let label = match measure {
                        Some(m) => Some(*measures.get(m).ok_or_else(|| {
                            Error::Parse { line, col, msg: format!("unknown measure `{m}`") }
                        })?),
                        None => None,
                    };
                    let shape = match shape {
                        None => (1, 1),
                        Some((n, None)) => (*n, 1),
                        Some((r, Some(c))) => (*r, *c),
                    };
                    problem.ctx_mut().declare_vars(name, shape, label).map_err(at)?;
                }
                Stmt::Measure(name) => {
                    if measures.contains_key(name) || problem.ctx().lookup(name).is_some() {
                        return Err(at(Error::DuplicateName(name.clone())));
                    }
                    let l = problem.ctx_mut().new_measure(&[]).map_err(at)?;
                    measures.insert(name.clone(), l);
                }
                Stmt::Objective(dir, e) => {
                    let lw = Lowering { ctx: problem.ctx(), measures: &measures };
                    let target = match lw.value(e).map_err(at)? {
                        Value::Poly(p) => ObjectiveTarget::from(p),
                        Value::Moment(m) => ObjectiveTarget::from(m),
                    };
                    problem.set_objective(*dir, target).map_err(at)?;
                }
                Stmt::Constraint(a, rel, b) => {
                    let lw = Lowering { ctx: problem.ctx(), measures: &measures };
                    if a.has_moments() || b.has_moments() {
                        let lhs = lw.value(a).and_then(|v| lw.moment(v)).map_err(at)?;
                        let rhs = lw.value(b).and_then(|v| lw.moment(v)).map_err(at)?;
                        problem.add_moment(MomentConstraint::new(lhs, *rel, rhs)).map_err(at)?;
                    } else {
                        let poly = |v: Value| match v {
                            Value::Poly(p) => p,
                            Value::Moment(_) => unreachable!("no moments on either side"),
                        };
                        let lhs = poly(lw.value(a).map_err(at)?);
                        let rhs = poly(lw.value(b).map_err(at)?);
                        problem.subject_to(lhs, *rel, rhs).map_err(at)?;
                    }
                }
                Stmt::Order(r) => order = Some(*r),
                Stmt::Assign(name, pts) => {
                    let ctx = problem.ctx_mut();
                    match measures.get(name) {
                        Some(&l) => ctx.set_support(l, pts.clone(), None).map_err(at)?,
                        None => {
                            let vars = ctx
                                .lookup(name)
                                .ok_or_else(|| at(Error::UnknownVariable(name.clone())))?
                                .to_vec();
                            ctx.assign(&vars, pts, None).map_err(at)?;
                        }
                    }
                }
            }
        }
        Ok(ParsedModel { problem, order, measures })
    }
}
