//! Multivariate polynomials `F(y_1, …, y_k) = Σ c · Π y_j^{e_j}`.
//!
//! JSON form: a list of `[c, [e_1, …, e_k]]` terms.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(f64, Vec<u32>)>) -> Self {
        Polynomial { terms }
    }

    /// `F(y) = c` in `k` variables.
    pub fn constant(c: f64, k: usize) -> Self {
        Polynomial::new(vec![(c, vec![0; k])])
    }

    /// `F(y) = y_i` in `k` variables.
    pub fn variable(i: usize, k: usize) -> Self {
        let mut e = vec![0; k];
        e[i] = 1;
        Polynomial::new(vec![(1.0, e)])
    }

    pub fn terms(&self) -> &[(f64, Vec<u32>)] {
        &self.terms
    }

    /// Number of variables, or `None` for an empty polynomial.
    pub fn arity(&self) -> Option<usize> {
        self.terms.first().map(|t| t.1.len())
    }

    pub fn check_arity(&self, k: usize) -> Result<()> {
        match self.terms.iter().find(|t| t.1.len() != k) {
            Some(t) => Err(invalid(format!("polynomial term {:?} has {} exponents, expected {k}", t.1, t.1.len()))),
            None => Ok(()),
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(y).map(|(&p, &v)| v.powi(p as i32)).product::<f64>())
            .sum()
    }

    pub fn partial(&self, i: usize) -> Polynomial {
        Polynomial::new(
            self.terms
                .iter()
                .filter(|t| t.1[i] > 0)
                .map(|(c, e)| {
                    let mut e = e.clone();
                    let p = e[i];
                    e[i] -= 1;
                    (c * p as f64, e)
                })
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        let mut sorted: Vec<(Vec<u32>, f64)> = self.terms.iter().map(|(c, e)| (e.clone(), *c)).collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            let mut sum = 0.0;
            while j < sorted.len() && sorted[j].0 == sorted[i].0 {
                sum += sorted[j].1;
                j += 1;
            }
            if sum != 0.0 {
                return false;
            }
            i = j;
        }
        true
    }

    /// `F(y)·G(z)` in the concatenated variables `(y, z)`.
    pub fn tensor(&self, other: &Polynomial, k_self: usize, k_other: usize) -> Polynomial {
        let mut terms = Vec::new();
        for (a, e) in &self.terms {
            for (b, f) in &other.terms {
                let mut g = e.clone();
                g.resize(k_self, 0);
                let mut f = f.clone();
                f.resize(k_other, 0);
                g.extend(f);
                terms.push((a * b, g));
            }
        }
        Polynomial::new(terms)
    }

    /// `F(y) + G(z)` in the concatenated variables `(y, z)`.
    pub fn direct_sum(&self, other: &Polynomial, k_self: usize, k_other: usize) -> Polynomial {
        let mut terms = Vec::new();
        for (a, e) in &self.terms {
            let mut g = e.clone();
            g.resize(k_self + k_other, 0);
            terms.push((*a, g));
        }
        for (b, f) in &other.terms {
            let mut g = vec![0; k_self];
            g.extend(f.iter().copied());
            g.resize(k_self + k_other, 0);
            terms.push((*b, g));
        }
        Polynomial::new(terms)
    }

    /// Multiplies every coefficient by `a`.
    pub fn scaled(mut self, a: f64) -> Polynomial {
        for t in &mut self.terms {
            t.0 *= a;
        }
        self
    }
}
