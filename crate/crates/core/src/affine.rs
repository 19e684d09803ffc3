//! Affine forms `c + Σ a_j z_j` over decision variables.

use std::collections::HashMap;

/// Sparse affine form. Coefficients are sorted by variable index and never
/// exactly zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Affine {
    pub constant: f64,
    coeffs: Vec<(usize, f64)>,
}

impl Affine {
    pub fn zero() -> Self {
        Affine::default()
    }

    pub fn constant(c: f64) -> Self {
        Affine {
            constant: c,
            coeffs: Vec::new(),
        }
    }

    pub fn var(j: usize) -> Self {
        Affine {
            constant: 0.0,
            coeffs: vec![(j, 1.0)],
        }
    }

    pub fn from_parts(constant: f64, coeffs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut map: HashMap<usize, f64> = HashMap::new();
        for (j, a) in coeffs {
            *map.entry(j).or_insert(0.0) += a;
        }
        let mut coeffs: Vec<(usize, f64)> = map.into_iter().filter(|&(_, a)| a != 0.0).collect();
        coeffs.sort_by_key(|&(j, _)| j);
        Affine { constant, coeffs }
    }

    pub fn coeffs(&self) -> &[(usize, f64)] {
        &self.coeffs
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.coeffs.is_empty()
    }

    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|i| self.coeffs[i].1)
            .unwrap_or(0.0)
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Affine) {
        if s == 0.0 {
            return;
        }
        self.constant += s * other.constant;
        if other.coeffs.is_empty() {
            return;
        }
        let mut out = Vec::with_capacity(self.coeffs.len() + other.coeffs.len());
        let (mut i, mut k) = (0, 0);
        let a = &self.coeffs;
        let b = &other.coeffs;
        while i < a.len() || k < b.len() {
            let next = match (a.get(i), b.get(k)) {
                (Some(&(ja, va)), Some(&(jb, vb))) => {
                    if ja < jb {
                        i += 1;
                        (ja, va)
                    } else if jb < ja {
                        k += 1;
                        (jb, s * vb)
                    } else {
                        i += 1;
                        k += 1;
                        (ja, va + s * vb)
                    }
                }
                (Some(&(ja, va)), None) => {
                    i += 1;
                    (ja, va)
                }
                (None, Some(&(jb, vb))) => {
                    k += 1;
                    (jb, s * vb)
                }
                (None, None) => unreachable!(),
            };
            if next.1 != 0.0 {
                out.push(next);
            }
        }
        self.coeffs = out;
    }

    pub fn scaled(&self, s: f64) -> Affine {
        let mut out = Affine::zero();
        out.axpy(s, self);
        out
    }

    pub fn sub(&self, other: &Affine) -> Affine {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|&(j, a)| a * z[j]).sum::<f64>()
    }

    /// Replaces every variable `j` by `map(j)`.
    pub fn compose<F: Fn(usize) -> Affine>(&self, map: F) -> Affine {
        let mut out = Affine::constant(self.constant);
        for &(j, a) in &self.coeffs {
            out.axpy(a, &map(j));
        }
        out
    }

    /// Bit-exact key used to deduplicate identical rows.
    pub(crate) fn key(&self) -> (u64, Vec<(usize, u64)>) {
        (
            self.constant.to_bits(),
            self.coeffs.iter().map(|&(j, a)| (j, a.to_bits())).collect(),
        )
    }
}
