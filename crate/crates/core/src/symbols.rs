//! Polynomial phase-space symbols with exact calculus and a text parser.
//!
//! Hamiltonians and observables are restricted to polynomials in
//! `(x_1..x_N, p_1..p_N)`: every bidirectional-derivative series in the
//! star-product algebra then terminates exactly, so no truncation enters on
//! the symbol side of any product.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

/// Exponent multi-index over the 2N phase-space axes (x.., p..).
pub type MultiExp = Vec<u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct PolySymbol {
    n_dof: usize,
    terms: BTreeMap<MultiExp, f64>,
}

impl PolySymbol {
    pub fn zero(n_dof: usize) -> Self {
        PolySymbol { n_dof, terms: BTreeMap::new() }
    }

    pub fn constant(n_dof: usize, c: f64) -> Self {
        let mut s = Self::zero(n_dof);
        s.add_term(vec![0; 2 * n_dof], c);
        s
    }

    /// The coordinate monomial for one axis (axis < N: position, else momentum).
    pub fn var(n_dof: usize, axis: usize) -> Self {
        let mut exp = vec![0u32; 2 * n_dof];
        exp[axis] = 1;
        let mut s = Self::zero(n_dof);
        s.add_term(exp, 1.0);
        s
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    pub fn n_axes(&self) -> usize {
        2 * self.n_dof
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiExp, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, exp: MultiExp, coef: f64) {
        assert_eq!(exp.len(), 2 * self.n_dof);
        let entry = self.terms.entry(exp).or_insert(0.0);
        *entry += coef;
        if *entry == 0.0 {
            let key = self.terms.iter().find(|(_, &c)| c == 0.0).map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn add(&self, other: &PolySymbol) -> PolySymbol {
        assert_eq!(self.n_dof, other.n_dof);
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> PolySymbol {
        if s == 0.0 {
            return PolySymbol::zero(self.n_dof);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out
    }

    pub fn mul(&self, other: &PolySymbol) -> PolySymbol {
        assert_eq!(self.n_dof, other.n_dof);
        let mut out = PolySymbol::zero(self.n_dof);
        for (ea, ca) in self.terms() {
            for (eb, cb) in other.terms() {
                let exp: MultiExp = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(exp, ca * cb);
            }
        }
        out
    }

    /// Exact partial derivative along one axis.
    pub fn derivative(&self, axis: usize) -> PolySymbol {
        let mut out = PolySymbol::zero(self.n_dof);
        for (e, c) in self.terms() {
            if e[axis] > 0 {
                let mut exp = e.clone();
                exp[axis] -= 1;
                out.add_term(exp, c * e[axis] as f64);
            }
        }
        out
    }

    pub fn derivative_multi(&self, orders: &[u32]) -> PolySymbol {
        let mut out = self.clone();
        for (axis, &ord) in orders.iter().enumerate() {
            for _ in 0..ord {
                out = out.derivative(axis);
            }
        }
        out
    }

    /// Apply `exp(sum_a s_a/2 d^2/dz_a^2)` with signed per-axis variances; the
    /// series terminates at half the degree. Positive `s_a = w_a^2` realizes
    /// the differential form of the Gaussian smoothing operator, negative
    /// values its exact inverse on polynomials.
    pub fn gauss_smoothed(&self, signed_variances: &[f64]) -> PolySymbol {
        assert_eq!(signed_variances.len(), self.n_axes());
        let mut total = self.clone();
        let mut term = self.clone();
        let mut k = 1.0;
        loop {
            // apply (sum_a s_a/2 d_a^2) / k to the previous term
            let mut next = PolySymbol::zero(self.n_dof);
            for (a, &s) in signed_variances.iter().enumerate() {
                if s != 0.0 {
                    let d2 = term.derivative(a).derivative(a);
                    next = next.add(&d2.scale(0.5 * s / k));
                }
            }
            if next.is_zero() {
                break;
            }
            total = total.add(&next);
            term = next;
            k += 1.0;
        }
        total
    }

    /// Husimi symbol of a Weyl/classical symbol: the smoothing operator with
    /// the grid's width pairs.
    pub fn husimi_symbol(&self, grid: &Grid) -> PolySymbol {
        let w = grid.axis_widths();
        let s: Vec<f64> = w.iter().map(|wi| wi * wi).collect();
        self.gauss_smoothed(&s)
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in self.terms() {
            let mut m = c;
            for (a, &ex) in e.iter().enumerate() {
                m *= point[a].powi(ex as i32);
            }
            acc += m;
        }
        acc
    }

    pub fn eval_on_grid(&self, grid: &Arc<Grid>) -> Field {
        assert_eq!(self.n_axes(), grid.n_axes(), "symbol/grid dof mismatch");
        Field::from_fn(grid, |z| self.eval(z))
    }

    /// Exact translated polynomial `q(z) = self(z - delta)`.
    pub fn shifted(&self, delta: &[f64]) -> PolySymbol {
        assert_eq!(delta.len(), self.n_axes());
        let mut out = PolySymbol::zero(self.n_dof);
        for (e, c) in self.terms() {
            // expand prod_a (z_a - d_a)^{e_a}
            let mut partial = vec![(vec![0u32; self.n_axes()], c)];
            for (a, &ex) in e.iter().enumerate() {
                let mut next = Vec::new();
                for (base, coef) in &partial {
                    for j in 0..=ex {
                        let mut be = base.clone();
                        be[a] += j;
                        let binom = binomial(ex, j);
                        next.push((be, coef * binom * (-delta[a]).powi((ex - j) as i32)));
                    }
                }
                partial = next;
            }
            for (exp, coef) in partial {
                out.add_term(exp, coef);
            }
        }
        out
    }

    /// Lift to a larger dof count (new axes unused).
    pub fn promote(&self, n_dof: usize) -> PolySymbol {
        assert!(n_dof >= self.n_dof);
        let mut out = PolySymbol::zero(n_dof);
        for (e, c) in self.terms() {
            let mut exp = vec![0u32; 2 * n_dof];
            exp[..self.n_dof].copy_from_slice(&e[..self.n_dof]);
            exp[n_dof..n_dof + self.n_dof].copy_from_slice(&e[self.n_dof..]);
            out.add_term(exp, c);
        }
        out
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

impl fmt::Display for PolySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms() {
            let neg = c < 0.0;
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            let mut factors: Vec<String> = Vec::new();
            for (a, &ex) in e.iter().enumerate() {
                if ex == 0 {
                    continue;
                }
                let name = if self.n_dof == 1 {
                    if a == 0 { "x".to_string() } else { "p".to_string() }
                } else if a < self.n_dof {
                    format!("x{}", a + 1)
                } else {
                    format!("p{}", a - self.n_dof + 1)
                };
                if ex == 1 {
                    factors.push(name);
                } else {
                    factors.push(format!("{name}^{ex}"));
                }
            }
            if factors.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{mag}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

// ---- parser -----------------------------------------------------------------

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, expected: &[&str]) -> Result<T> {
        Err(Error::Parse {
            offset: self.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9') | Some(b'.')) {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err(&["number", "variable"]);
        }
        // optional exponent
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            let digits = self.pos;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = mark; // bare 'e' is not an exponent
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map_err(|_| Error::Parse {
            offset: start,
            expected: vec!["number".to_string()],
        })
    }

    fn uint(&mut self) -> Result<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err(&["integer"]);
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse::<u32>()
            .map_err(|_| Error::Parse { offset: start, expected: vec!["integer".to_string()] })
    }

    /// variable -> (is_momentum, dof index 0-based, explicit index?)
    fn variable(&mut self) -> Result<(bool, usize)> {
        let is_p = match self.peek() {
            Some(b'x') => false,
            Some(b'p') => true,
            _ => return self.err(&["number", "variable"]),
        };
        self.pos += 1;
        let dof = if matches!(self.peek(), Some(b'0'..=b'9')) {
            let idx_pos = self.pos;
            let idx = self.uint()?;
            if idx == 0 {
                return Err(Error::Parse {
                    offset: idx_pos,
                    expected: vec!["dof index >= 1".to_string()],
                });
            }
            (idx - 1) as usize
        } else {
            0
        };
        Ok((is_p, dof))
    }

    /// factor as (coefficient, sparse exponent map keyed (is_p, dof))
    fn factor(&mut self, exps: &mut BTreeMap<(bool, usize), u32>, coef: &mut f64) -> Result<()> {
        match self.peek() {
            Some(b'0'..=b'9') | Some(b'.') => {
                *coef *= self.number()?;
            }
            Some(b'x') | Some(b'p') => {
                let v = self.variable()?;
                let mut power = 1u32;
                self.skip_ws();
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    self.skip_ws();
                    power = self.uint()?;
                }
                *exps.entry(v).or_insert(0) += power;
            }
            _ => return self.err(&["number", "variable"])?,
        }
        Ok(())
    }

    fn term(&mut self) -> Result<(f64, BTreeMap<(bool, usize), u32>)> {
        let mut coef = 1.0;
        let mut exps = BTreeMap::new();
        self.factor(&mut exps, &mut coef)?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    self.skip_ws();
                    self.factor(&mut exps, &mut coef)?;
                }
                None | Some(b'+') | Some(b'-') => break,
                Some(_) => return self.err(&["*", "+", "-", "end of input"]),
            }
        }
        Ok((coef, exps))
    }
}

/// Parse the polynomial grammar: signed terms of `coef * x^a * p^b`, with
/// `x`,`p` for one dof or `x1..xN`,`p1..pN` in general. Whitespace-insensitive;
/// `^` is the exponent and `*` the product. The inferred dof count is the
/// largest index mentioned.
pub fn parse_poly(text: &str) -> Result<PolySymbol> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let mut raw: Vec<(f64, BTreeMap<(bool, usize), u32>)> = Vec::new();
    p.skip_ws();
    if p.peek().is_none() {
        return p.err(&["number", "variable"]);
    }
    let mut sign = 1.0;
    if p.peek() == Some(b'-') {
        sign = -1.0;
        p.pos += 1;
    } else if p.peek() == Some(b'+') {
        p.pos += 1;
    }
    loop {
        p.skip_ws();
        let (c, e) = p.term()?;
        raw.push((sign * c, e));
        p.skip_ws();
        match p.peek() {
            None => break,
            Some(b'+') => {
                sign = 1.0;
                p.pos += 1;
            }
            Some(b'-') => {
                sign = -1.0;
                p.pos += 1;
            }
            Some(_) => return p.err(&["+", "-", "end of input"]),
        }
    }
    let n_dof = raw
        .iter()
        .flat_map(|(_, e)| e.keys().map(|&(_, d)| d + 1))
        .max()
        .unwrap_or(1)
        .max(1);
    let mut out = PolySymbol::zero(n_dof);
    for (c, e) in raw {
        let mut exp = vec![0u32; 2 * n_dof];
        for (&(is_p, dof), &pw) in &e {
            let axis = if is_p { n_dof + dof } else { dof };
            exp[axis] += pw;
        }
        out.add_term(exp, c);
    }
    Ok(out)
}
