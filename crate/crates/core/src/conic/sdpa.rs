//! SDPA sparse format (`.dat-s`).
//!
//! SDPA solves `min Σ c_i x_i  s.t.  Σ F_i x_i − F_0 ⪰ 0`. With `x = y` this
//! is the dual of a [`ConicProblem`] for `F_0 = −C`, `F_i = −A_i` and
//! `c = −b`. The nonnegative orthant is written as a diagonal block of
//! negative size, first. The moment objective's offset and sense are kept
//! in a comment line.

use std::fmt::Write as _;
use std::path::Path;

use super::{ConeSpec, ConicProblem};
use crate::error::{Error, Result};
use crate::model::Direction;

/// Renders `p` in SDPA sparse format. The free cone must be empty.
pub fn to_sdpa(p: &ConicProblem) -> Result<String> {
    if p.cone.f > 0 {
        return Err(Error::FreeVariables);
    }
    let mut out = String::new();
    let sense = match p.sense {
        Direction::Min => "min",
        Direction::Max => "max",
    };
    writeln!(out, "\"gpm sense={sense} offset={:.17e}", p.offset).unwrap();
    let m = p.m();
    let mut structure: Vec<i64> = Vec::new();
    if p.cone.l > 0 {
        structure.push(-(p.cone.l as i64));
    }
    structure.extend(p.cone.s.iter().map(|&n| n as i64));
    writeln!(out, "{m}").unwrap();
    writeln!(out, "{}", structure.len()).unwrap();
    writeln!(
        out,
        "{}",
        structure.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
    )
    .unwrap();
    writeln!(
        out,
        "{}",
        p.b.iter().map(|b| format!("{:.16e}", -b)).collect::<Vec<_>>().join(" ")
    )
    .unwrap();

    let block_of = column_locator(&p.cone);
    let entry = |out: &mut String, matno: usize, k: usize, v: f64| {
        if v == 0.0 {
            return;
        }
        if let Some((blk, i, j)) = block_of(k) {
            if i <= j {
                writeln!(out, "{matno} {blk} {} {} {:.16e}", i + 1, j + 1, v).unwrap();
            }
        }
    };
    for (k, &c) in p.c.iter().enumerate() {
        entry(&mut out, 0, k, -c);
    }
    for (i, row) in p.a.iter().enumerate() {
        for &(k, v) in row {
            entry(&mut out, i + 1, k, -v);
        }
    }
    Ok(out)
}

// column -> (1-based block, row, col) in the SDPA block structure
fn column_locator(cone: &ConeSpec) -> impl Fn(usize) -> Option<(usize, usize, usize)> + '_ {
    let offsets = cone.psd_offsets();
    let lp_blocks = usize::from(cone.l > 0);
    move |k| {
        if k < cone.l {
            return Some((1, k, k));
        }
        for (b, (&n, &off)) in cone.s.iter().zip(&offsets).enumerate() {
            if k >= off && k < off + n * n {
                let r = k - off;
                return Some((b + 1 + lp_blocks, r % n, r / n));
            }
        }
        None
    }
}

pub fn write_sdpa(p: &ConicProblem, path: &Path) -> Result<()> {
    std::fs::write(path, to_sdpa(p)?)?;
    Ok(())
}

pub fn read_sdpa(path: &Path) -> Result<ConicProblem> {
    from_sdpa(&std::fs::read_to_string(path)?)
}

struct Tokens<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn numbers(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        while self.pos < self.lines.len() {
            let (ln, l) = self.lines[self.pos];
            self.pos += 1;
            let toks: Vec<&str> = l
                .split(|c: char| c.is_whitespace() || "{}(),".contains(c))
                .filter(|t| !t.is_empty())
                .collect();
            if !toks.is_empty() {
                return Ok((ln, toks));
            }
        }
        Err(Error::Format {
            line: self.lines.last().map_or(0, |l| l.0),
            msg: format!("missing {what}"),
        })
    }
}

fn parse<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Format {
        line,
        msg: format!("invalid number `{tok}`"),
    })
}

/// Parses SDPA sparse input. Negative-size blocks are merged into one
/// nonnegative orthant.
pub fn from_sdpa(text: &str) -> Result<ConicProblem> {
    let mut sense = Direction::Min;
    let mut offset = 0.0;
    let mut lines = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let t = l.trim_start();
        if let Some(rest) = t.strip_prefix('"').or_else(|| t.strip_prefix('*')) {
            for kv in rest.split_whitespace() {
                match kv.split_once('=') {
                    Some(("sense", "max")) => sense = Direction::Max,
                    Some(("offset", v)) => offset = v.parse().unwrap_or(0.0),
                    _ => {}
                }
            }
            continue;
        }
        lines.push((i + 1, l));
    }
    let mut tk = Tokens { lines, pos: 0 };
    let (ln, t) = tk.numbers("number of constraints")?;
    let m: usize = parse(ln, t[0])?;
    let (ln, t) = tk.numbers("number of blocks")?;
    let nblocks: usize = parse(ln, t[0])?;
    let mut structure: Vec<i64> = Vec::new();
    while structure.len() < nblocks {
        let (ln, t) = tk.numbers("block structure")?;
        for tok in t {
            if structure.len() < nblocks {
                structure.push(parse(ln, tok)?);
            }
        }
    }
    let mut cvec: Vec<f64> = Vec::new();
    while cvec.len() < m {
        let (ln, t) = tk.numbers("objective vector")?;
        for tok in t {
            if cvec.len() < m {
                cvec.push(parse(ln, tok)?);
            }
        }
    }

    // block -> (is_lp, offset within the lp part or psd index)
    let mut l = 0usize;
    let mut s = Vec::new();
    let mut place = Vec::new();
    for &b in &structure {
        if b < 0 {
            place.push((true, l, (-b) as usize));
            l += (-b) as usize;
        } else if b > 0 {
            place.push((false, s.len(), b as usize));
            s.push(b as usize);
        } else {
            return Err(Error::Format { line: 0, msg: "zero block size".into() });
        }
    }
    let cone = ConeSpec { f: 0, l, s };
    let offsets = cone.psd_offsets();
    let mut c = vec![0.0; cone.dim()];
    let mut a: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); m];
    while tk.pos < tk.lines.len() {
        let (ln, t) = tk.numbers("entry")?;
        if t.len() < 5 {
            return Err(Error::Format { line: ln, msg: "expected `matno blkno i j value`".into() });
        }
        let matno: usize = parse(ln, t[0])?;
        let blk: usize = parse(ln, t[1])?;
        let i: usize = parse(ln, t[2])?;
        let j: usize = parse(ln, t[3])?;
        let v: f64 = parse(ln, t[4])?;
        if matno > m || blk == 0 || blk > place.len() || i == 0 || j == 0 {
            return Err(Error::Format { line: ln, msg: "entry index out of range".into() });
        }
        let (is_lp, idx, n) = place[blk - 1];
        if i > n || j > n {
            return Err(Error::Format { line: ln, msg: "entry index out of range".into() });
        }
        let cols: Vec<usize> = if is_lp {
            if i != j {
                return Err(Error::Format { line: ln, msg: "off-diagonal entry in diagonal block".into() });
            }
            vec![idx + i - 1]
        } else {
            let off = offsets[idx];
            let (i, j) = (i - 1, j - 1);
            if i == j {
                vec![off + j * n + i]
            } else {
                vec![off + j * n + i, off + i * n + j]
            }
        };
        for col in cols {
            if matno == 0 {
                c[col] = -v;
            } else {
                a[matno - 1].insert(col, -v);
            }
        }
    }
    Ok(ConicProblem {
        cone,
        a: a.into_iter().map(|r| r.into_iter().collect()).collect(),
        b: cvec.into_iter().map(|v| -v).collect(),
        c,
        offset,
        sense,
    })
}
