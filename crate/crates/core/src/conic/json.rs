//! JSON form of a [`ConicProblem`]: `A` as 0-based triplets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ConeSpec, ConicProblem};
use crate::error::{Error, Result};
use crate::model::Direction;

#[derive(Serialize, Deserialize)]
struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConicJson {
    m: usize,
    cone: ConeSpec,
    #[serde(rename = "A")]
    a: Triplets,
    b: Vec<f64>,
    c: Vec<f64>,
    #[serde(default)]
    offset: f64,
    #[serde(default = "default_sense")]
    sense: String,
}

fn default_sense() -> String {
    "min".into()
}

pub fn to_json(p: &ConicProblem) -> Result<String> {
    let mut t = Triplets {
        rows: Vec::new(),
        cols: Vec::new(),
        vals: Vec::new(),
    };
    for (i, row) in p.a.iter().enumerate() {
        for &(k, v) in row {
            t.rows.push(i);
            t.cols.push(k);
            t.vals.push(v);
        }
    }
    let j = ConicJson {
        m: p.m(),
        cone: p.cone.clone(),
        a: t,
        b: p.b.clone(),
        c: p.c.clone(),
        offset: p.offset,
        sense: match p.sense {
            Direction::Min => "min".into(),
            Direction::Max => "max".into(),
        },
    };
    Ok(serde_json::to_string_pretty(&j)?)
}

pub fn from_json(text: &str) -> Result<ConicProblem> {
    let j: ConicJson = serde_json::from_str(text)?;
    let bad = |msg: String| Error::Format { line: 0, msg };
    let n = j.cone.dim();
    if j.b.len() != j.m || j.c.len() != n {
        return Err(bad(format!(
            "expected b of length {} and c of length {n}, got {} and {}",
            j.m,
            j.b.len(),
            j.c.len()
        )));
    }
    if j.a.rows.len() != j.a.cols.len() || j.a.rows.len() != j.a.vals.len() {
        return Err(bad("A triplet arrays differ in length".into()));
    }
    let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); j.m];
    for ((&r, &c), &v) in j.a.rows.iter().zip(&j.a.cols).zip(&j.a.vals) {
        if r >= j.m || c >= n {
            return Err(bad(format!("A entry ({r}, {c}) out of range")));
        }
        *rows[r].entry(c).or_insert(0.0) += v;
    }
    let sense = match j.sense.as_str() {
        "min" => Direction::Min,
        "max" => Direction::Max,
        s => return Err(bad(format!("unknown sense `{s}`"))),
    };
    Ok(ConicProblem {
        cone: j.cone,
        a: rows.into_iter().map(|r| r.into_iter().collect()).collect(),
        b: j.b,
        c: j.c,
        offset: j.offset,
        sense,
    })
}

pub fn write_json(p: &ConicProblem, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(p)?)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<ConicProblem> {
    from_json(&std::fs::read_to_string(path)?)
}
