//! Star-product calculus on the phase-space grid.
//!
//! Products pair a polynomial left operand (exact derivatives) with a grid
//! field right operand (spectral derivatives). A [`Pairing`] is a finite
//! bidirectional-derivative series; exponentials of the Poisson and smoothing
//! generators terminate at the left polynomial's degree, so the smoothing
//! product, Moyal product, and their composition are all evaluated without
//! truncation error on the polynomial side.
//!
//! Products between two grid fields (needed for purity diagnostics, where the
//! left operand is a state) go through [`moyal_star_fields`], a twisted
//! convolution over retained spectral modes that is exact for band-limited
//! inputs.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::ArrayD;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{lowpass_in_place, Field, ScalarKind};
use crate::grid::Grid;
use crate::symbols::{MultiExp, PolySymbol};

/// Relative spectral floor below which modes are zeroed in field-field star
/// products and in Gaussian deconvolution; keeps high-order Fourier
/// multipliers from amplifying the FFT noise floor.
pub const DEFAULT_SPECTRAL_FILTER: f64 = 1e-14;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A finite bidirectional-derivative series: terms `coeff * (d^L left)(d^R right)`.
#[derive(Debug, Clone)]
pub struct Pairing {
    n_axes: usize,
    terms: BTreeMap<(MultiExp, MultiExp), Complex64>,
}

impl Pairing {
    pub fn identity(n_axes: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((vec![0; n_axes], vec![0; n_axes]), ONE);
        Pairing { n_axes, terms }
    }

    pub fn zero(n_axes: usize) -> Self {
        Pairing { n_axes, terms: BTreeMap::new() }
    }

    fn insert(&mut self, left: MultiExp, right: MultiExp, c: Complex64) {
        let e = self.terms.entry((left.clone(), right.clone())).or_insert(Complex64::default());
        *e += c;
        if e.norm() == 0.0 {
            self.terms.remove(&(left, right));
        }
    }

    /// The Poisson-bracket generator: `sum_n (dx_n <-> dp_n) - (dp_n <-> dx_n)`.
    pub fn poisson(n_dof: usize) -> Self {
        let n_axes = 2 * n_dof;
        let mut p = Pairing::zero(n_axes);
        for n in 0..n_dof {
            let mut lx = vec![0; n_axes];
            lx[n] = 1;
            let mut rp = vec![0; n_axes];
            rp[n_dof + n] = 1;
            p.insert(lx.clone(), rp.clone(), ONE);
            p.insert(rp, lx, -ONE);
        }
        p
    }

    /// The smoothing generator: `sum_a w_a^2 (d_a <-> d_a)`.
    pub fn smoothing(grid: &Grid) -> Self {
        let n_axes = grid.n_axes();
        let mut p = Pairing::zero(n_axes);
        for (a, w) in grid.axis_widths().iter().enumerate() {
            let mut e = vec![0; n_axes];
            e[a] = 1;
            p.insert(e.clone(), e, Complex64::new(w * w, 0.0));
        }
        p
    }

    /// Swap the left and right derivative slots.
    pub fn transpose(&self) -> Self {
        let mut out = Pairing::zero(self.n_axes);
        for ((l, r), &c) in &self.terms {
            out.insert(r.clone(), l.clone(), c);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Pairing) -> Self {
        assert_eq!(self.n_axes, other.n_axes);
        let mut out = self.clone();
        for ((l, r), &c) in &other.terms {
            out.insert(l.clone(), r.clone(), c);
        }
        out
    }

    /// Series product, pruning terms whose total left order exceeds `left_cap`.
    pub fn mul_capped(&self, other: &Pairing, left_cap: u32) -> Self {
        assert_eq!(self.n_axes, other.n_axes);
        let mut out = Pairing::zero(self.n_axes);
        for ((l1, r1), &c1) in &self.terms {
            let o1: u32 = l1.iter().sum();
            for ((l2, r2), &c2) in &other.terms {
                let o2: u32 = l2.iter().sum();
                if o1 + o2 > left_cap {
                    continue;
                }
                let l: MultiExp = l1.iter().zip(l2).map(|(a, b)| a + b).collect();
                let r: MultiExp = r1.iter().zip(r2).map(|(a, b)| a + b).collect();
                out.insert(l, r, c1 * c2);
            }
        }
        out
    }

    /// `sum_k c(k) self^k`, pruned at the left order cap (every generator term
    /// carries at least one left derivative, so powers beyond the cap vanish).
    pub fn power_series(&self, coeff: impl Fn(u32) -> Complex64, left_cap: u32) -> Self {
        let mut out = Pairing::identity(self.n_axes).scale(coeff(0));
        let mut power = Pairing::identity(self.n_axes);
        for k in 1..=left_cap {
            power = power.mul_capped(self, left_cap);
            if power.terms.is_empty() {
                break;
            }
            let c = coeff(k);
            if c.norm() > 0.0 {
                out = out.add(&power.scale(c));
            }
        }
        out
    }

    /// `exp(self)` truncated at the left order cap.
    pub fn exp_capped(&self, left_cap: u32) -> Self {
        let mut fact = 1.0;
        let facts: Vec<f64> = (0..=left_cap)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                fact
            })
            .collect();
        self.power_series(|k| ONE / facts[k as usize], left_cap)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiExp, &MultiExp, Complex64)> {
        self.terms.iter().map(|((l, r), &c)| (l, r, c))
    }
}

/// Evaluate a pairing between two polynomials exactly; returns the real and
/// imaginary parts. This is the symbolic route used to cross-check the
/// grid-field products on operands where periodization would pollute a
/// pointwise comparison.
pub fn apply_pairing_polys(
    pairing: &Pairing,
    a: &PolySymbol,
    b: &PolySymbol,
) -> (PolySymbol, PolySymbol) {
    let mut re = PolySymbol::zero(a.n_dof());
    let mut im = PolySymbol::zero(a.n_dof());
    for (l, r, c) in pairing.terms() {
        let da = a.derivative_multi(l);
        let db = b.derivative_multi(r);
        if da.is_zero() || db.is_zero() {
            continue;
        }
        let prod = da.mul(&db);
        re = re.add(&prod.scale(c.re));
        im = im.add(&prod.scale(c.im));
    }
    (re, im)
}

/// Evaluate a pairing between a polynomial and a field.
pub fn apply_pairing(pairing: &Pairing, a: &PolySymbol, q: &Field) -> Result<Field> {
    if a.n_axes() != q.grid().n_axes() {
        return Err(Error::LengthMismatch("symbol/grid dof count".into()));
    }
    let series = OperatorSeries::from_pairing(pairing, a);
    series.prepare(q.grid()).apply(q)
}

/// Smoothing product `a (.) q`: exp of the width-weighted bidirectional
/// generator, exact termination at `deg a`.
pub fn smoothing_product(a: &PolySymbol, q: &Field) -> Result<Field> {
    let pairing = Pairing::smoothing(q.grid()).exp_capped(a.degree());
    apply_pairing(&pairing, a, q)
}

/// Moyal product `a * q = exp(i hbar Lambda / 2)` applied between a polynomial
/// and a field; complex-valued in general.
pub fn moyal_product(a: &PolySymbol, q: &Field) -> Result<Field> {
    let grid = q.grid();
    let gen = Pairing::poisson(grid.n_dof()).scale(Complex64::new(0.0, grid.hbar() / 2.0));
    apply_pairing(&gen.exp_capped(a.degree()), a, q)
}

/// Husimi star `a *_H q`: the Moyal and smoothing bidirectional exponentials
/// combined into one terminating series.
pub fn husimi_star(a: &PolySymbol, q: &Field) -> Result<Field> {
    let grid = q.grid();
    let gen = Pairing::poisson(grid.n_dof())
        .scale(Complex64::new(0.0, grid.hbar() / 2.0))
        .add(&Pairing::smoothing(grid));
    apply_pairing(&gen.exp_capped(a.degree()), a, q)
}

/// Classical Poisson bracket `h /\ q`.
pub fn poisson_apply(h: &PolySymbol, q: &Field) -> Result<Field> {
    let pairing = Pairing::poisson(q.grid().n_dof());
    apply_pairing(&pairing, h, q)
}

// ---- operator series ----------------------------------------------------------

/// An operator with polynomial coefficient functions and right-acting spectral
/// derivative slots: `sum_t c_t a_t(p, x) d^{R_t}`.
#[derive(Debug, Clone)]
pub struct OperatorSeries {
    n_axes: usize,
    terms: Vec<(Complex64, PolySymbol, MultiExp)>,
}

impl OperatorSeries {
    pub fn new(n_axes: usize) -> Self {
        OperatorSeries { n_axes, terms: Vec::new() }
    }

    pub fn from_poly(a: &PolySymbol) -> Self {
        OperatorSeries { n_axes: a.n_axes(), terms: vec![(ONE, a.clone(), vec![0; a.n_axes()])] }
    }

    /// Expand a pairing against a left polynomial: left derivatives become
    /// exact coefficient polynomials, right orders stay as operator slots.
    pub fn from_pairing(pairing: &Pairing, a: &PolySymbol) -> Self {
        let mut terms = Vec::new();
        for (l, r, c) in pairing.terms() {
            let coef = a.derivative_multi(l);
            if !coef.is_zero() {
                terms.push((c, coef, r.clone()));
            }
        }
        OperatorSeries { n_axes: a.n_axes(), terms }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(Complex64, PolySymbol, MultiExp)] {
        &self.terms
    }

    pub fn push(&mut self, coeff: Complex64, poly: PolySymbol, orders: MultiExp) {
        assert_eq!(poly.n_axes(), self.n_axes);
        assert_eq!(orders.len(), self.n_axes);
        if !poly.is_zero() && coeff.norm() > 0.0 {
            self.terms.push((coeff, poly, orders));
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for (c, _, _) in &mut out.terms {
            *c *= s;
        }
        out
    }

    pub fn add(&self, other: &OperatorSeries) -> Self {
        assert_eq!(self.n_axes, other.n_axes);
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out
    }

    pub fn sub(&self, other: &OperatorSeries) -> Self {
        self.add(&other.scale(-ONE))
    }

    /// Differentiate the explicit phase-space dependence of the coefficient
    /// functions (the right-acting slots are untouched).
    pub fn coefficient_derivative(&self, axis: usize) -> Self {
        let mut terms = Vec::new();
        for (c, poly, r) in &self.terms {
            let d = poly.derivative(axis);
            if !d.is_zero() {
                terms.push((*c, d, r.clone()));
            }
        }
        OperatorSeries { n_axes: self.n_axes, terms }
    }

    /// Compose with a pairing acting between this operator's coefficients and
    /// the right operand (e.g. the smoothing product in `dG/dz (.) q`).
    pub fn compose_pairing(&self, pairing: &Pairing) -> Self {
        let mut terms = Vec::new();
        for (c1, poly, r1) in &self.terms {
            for (l2, r2, c2) in pairing.terms() {
                let coef = poly.derivative_multi(l2);
                if coef.is_zero() {
                    continue;
                }
                let r: MultiExp = r1.iter().zip(r2).map(|(a, b)| a + b).collect();
                terms.push((c1 * c2, coef, r));
            }
        }
        OperatorSeries { n_axes: self.n_axes, terms }
    }

    pub fn max_coefficient_degree(&self) -> u32 {
        self.terms.iter().map(|(_, p, _)| p.degree()).max().unwrap_or(0)
    }

    /// Evaluate coefficient polynomials on a grid and fold terms sharing a
    /// derivative slot, for repeated fast application.
    pub fn prepare(&self, grid: &Arc<Grid>) -> PreparedOperator {
        let mut folded: BTreeMap<MultiExp, ArrayD<Complex64>> = BTreeMap::new();
        for (c, poly, r) in &self.terms {
            let coef = poly.eval_on_grid(grid);
            let entry = folded
                .entry(r.clone())
                .or_insert_with(|| ArrayD::zeros(ndarray::IxDyn(&grid.shape())));
            ndarray::Zip::from(entry).and(coef.values()).for_each(|e, v| *e += c * v);
        }
        let all_real = folded.values().all(|arr| arr.iter().all(|c| c.im == 0.0));
        PreparedOperator { grid: grid.clone(), slots: folded.into_iter().collect(), all_real }
    }
}

/// An [`OperatorSeries`] with coefficients sampled on a grid.
pub struct PreparedOperator {
    grid: Arc<Grid>,
    slots: Vec<(MultiExp, ArrayD<Complex64>)>,
    all_real: bool,
}

impl PreparedOperator {
    pub fn apply(&self, q: &Field) -> Result<Field> {
        if q.grid().shape() != self.grid.shape() {
            return Err(Error::GridMismatch);
        }
        let mut out = Field::zeros(q.grid(), ScalarKind::Complex);
        for (orders, coef) in &self.slots {
            let dq = q.spectral_derivative_multi(orders)?;
            ndarray::Zip::from(out.values_mut())
                .and(coef)
                .and(dq.values())
                .for_each(|o, c, d| *o += c * d);
        }
        Ok(if self.all_real && q.kind() == ScalarKind::Real { out.into_real() } else { out })
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }
}

// ---- Hamilton generator and flux ----------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Quantum,
    Classical,
}

/// The Hamilton generator as an operator series. `h` must already be a Husimi
/// symbol. Quantum: `G = h sinc(hbar Lambda / 2)` expanded as
/// `1 - (hbar Lambda/2)^2/6 + (hbar Lambda/2)^4/120 - ...`, terminating on
/// polynomials. Classical: `G = h`.
pub fn hamilton_generator(h: &PolySymbol, kind: GeneratorKind, grid: &Grid) -> OperatorSeries {
    match kind {
        GeneratorKind::Classical => OperatorSeries::from_poly(h),
        GeneratorKind::Quantum => {
            let lam = Pairing::poisson(grid.n_dof());
            let half = grid.hbar() / 2.0;
            let deg = h.degree();
            let mut fact = vec![1.0f64; (deg + 2) as usize];
            for i in 1..fact.len() {
                fact[i] = fact[i - 1] * i as f64;
            }
            // sinc(x) = sum_m (-1)^m x^(2m) / (2m+1)!
            let sinc = lam.power_series(
                |k| {
                    if k % 2 == 1 {
                        Complex64::default()
                    } else {
                        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                        Complex64::new(sign * half.powi(k as i32) / fact[(k + 1) as usize], 0.0)
                    }
                },
                deg,
            );
            OperatorSeries::from_pairing(&sinc, h)
        }
    }
}

/// Flux components `J_{x_n} = (dG/dp_n) (.) q`, `J_{p_n} = -(dG/dx_n) (.) q`,
/// where the generator gradient differentiates the explicit coefficient
/// dependence only, and `(.)` is the smoothing product against `q`.
pub fn generator_flux_components(
    h: &PolySymbol,
    q: &Field,
    kind: GeneratorKind,
) -> Result<Vec<Field>> {
    let grid = q.grid();
    if h.n_axes() != grid.n_axes() {
        return Err(Error::LengthMismatch("symbol/grid dof count".into()));
    }
    let gen = hamilton_generator(h, kind, grid);
    let smooth = Pairing::smoothing(grid).exp_capped(gen.max_coefficient_degree());
    let n = grid.n_dof();
    let mut components = Vec::with_capacity(2 * n);
    for dof in 0..n {
        let d = gen.coefficient_derivative(grid.p_axis(dof)).compose_pairing(&smooth);
        components.push(d.prepare(grid).apply(q)?);
    }
    for dof in 0..n {
        let d = gen.coefficient_derivative(grid.x_axis(dof)).compose_pairing(&smooth);
        components.push(d.prepare(grid).apply(q)?.scale_real(-1.0));
    }
    Ok(components)
}

/// `G (.) q` — the generator applied through the smoothing product (the
/// quantity paired with labels in the action integrand).
pub fn generator_smooth_apply(h: &PolySymbol, q: &Field, kind: GeneratorKind) -> Result<Field> {
    let grid = q.grid();
    let gen = hamilton_generator(h, kind, grid);
    let smooth = Pairing::smoothing(grid).exp_capped(gen.max_coefficient_degree());
    gen.compose_pairing(&smooth).prepare(grid).apply(q)
}

// ---- field-field star products (one dof) ---------------------------------------

/// Moyal product of two grid fields via twisted convolution of their retained
/// spectral modes; exact for band-limited inputs. Modes below `rel_filter`
/// of each spectral peak are dropped.
pub fn moyal_star_fields(f: &Field, g: &Field, rel_filter: f64) -> Result<Field> {
    f.same_grid(g)?;
    let grid = f.grid();
    if grid.n_dof() != 1 {
        return Err(Error::UnsupportedDofCount(grid.n_dof()));
    }
    let hbar = grid.hbar();
    let (mx, mp) = (grid.axis(0).count, grid.axis(1).count);
    let norm = 1.0 / (mx * mp) as f64;

    let mut fh = f.spectrum();
    fh.mapv_inplace(|c| c * norm);
    lowpass_in_place(&mut fh, rel_filter);
    let mut gh = g.spectrum();
    gh.mapv_inplace(|c| c * norm);
    lowpass_in_place(&mut gh, rel_filter);

    // retained f modes as a sparse list, g modes as a dense bounding box
    let ax = grid.axis(0);
    let ap = grid.axis(1);
    let mut fmodes: Vec<(i64, i64, Complex64)> = Vec::new();
    for (idx, c) in fh.indexed_iter() {
        if c.norm() > 0.0 {
            fmodes.push((ax.mode(idx[0]), ap.mode(idx[1]), *c));
        }
    }
    let mut gx = (i64::MAX, i64::MIN);
    let mut gp = (i64::MAX, i64::MIN);
    for (idx, c) in gh.indexed_iter() {
        if c.norm() > 0.0 {
            let a = ax.mode(idx[0]);
            let b = ap.mode(idx[1]);
            gx = (gx.0.min(a), gx.1.max(a));
            gp = (gp.0.min(b), gp.1.max(b));
        }
    }
    if fmodes.is_empty() || gx.0 > gx.1 {
        return Ok(Field::zeros(grid, ScalarKind::Complex));
    }
    let gnx = (gx.1 - gx.0 + 1) as usize;
    let gnp = (gp.1 - gp.0 + 1) as usize;
    let mut gbox = vec![Complex64::default(); gnx * gnp];
    for (idx, c) in gh.indexed_iter() {
        if c.norm() > 0.0 {
            let a = (ax.mode(idx[0]) - gx.0) as usize;
            let b = (ap.mode(idx[1]) - gp.0) as usize;
            gbox[a * gnp + b] = *c;
        }
    }

    let fx_lo = fmodes.iter().map(|m| m.0).min().unwrap();
    let fx_hi = fmodes.iter().map(|m| m.0).max().unwrap();
    let fp_lo = fmodes.iter().map(|m| m.1).min().unwrap();
    let fp_hi = fmodes.iter().map(|m| m.1).max().unwrap();
    let ox_lo = fx_lo + gx.0;
    let op_lo = fp_lo + gp.0;
    let onx = (fx_hi + gx.1 - ox_lo + 1) as usize;
    let onp = (fp_hi + gp.1 - op_lo + 1) as usize;
    let mut obox = vec![Complex64::default(); onx * onp];

    let dkx = 2.0 * std::f64::consts::PI / ax.len();
    let dkp = 2.0 * std::f64::consts::PI / ap.len();
    // phase exp(-i hbar/2 (k'_x k''_p - k'_p k''_x)), separable over the g box
    let mut phase_p = vec![Complex64::default(); gnp];
    let mut phase_x = vec![Complex64::default(); gnx];
    for &(fx_m, fp_m, fc) in &fmodes {
        let kfx = dkx * fx_m as f64;
        let kfp = dkp * fp_m as f64;
        for (j, ph) in phase_p.iter_mut().enumerate() {
            let kgp = dkp * (gp.0 + j as i64) as f64;
            *ph = Complex64::from_polar(1.0, -0.5 * hbar * kfx * kgp);
        }
        for (i, ph) in phase_x.iter_mut().enumerate() {
            let kgx = dkx * (gx.0 + i as i64) as f64;
            *ph = Complex64::from_polar(1.0, 0.5 * hbar * kfp * kgx);
        }
        let row0 = (fx_m + gx.0 - ox_lo) as usize;
        let col0 = (fp_m + gp.0 - op_lo) as usize;
        for i in 0..gnx {
            let base = fc * phase_x[i];
            let orow = &mut obox[(row0 + i) * onp + col0..(row0 + i) * onp + col0 + gnp];
            let grow = &gbox[i * gnp..(i + 1) * gnp];
            for (o, (ph, gm)) in orow.iter_mut().zip(phase_p.iter().zip(grow)) {
                *o += base * ph * gm;
            }
        }
    }

    // alias-fold the output box onto the grid's spectral lattice
    let mut spec: ArrayD<Complex64> = ArrayD::zeros(ndarray::IxDyn(&[mx, mp]));
    for i in 0..onx {
        let a = (ox_lo + i as i64).rem_euclid(mx as i64) as usize;
        for j in 0..onp {
            let b = (op_lo + j as i64).rem_euclid(mp as i64) as usize;
            spec[[a, b]] += obox[i * onp + j];
        }
    }
    let scale = (mx * mp) as f64;
    spec.mapv_inplace(|c| c * scale);
    Ok(Field::from_spectrum(grid, spec, ScalarKind::Complex))
}

/// Husimi star of two fields through the Wigner-plane conjugation
/// `f *_H g = K[(K^-1 f) * (K^-1 g)]` with filtered deconvolution.
pub fn husimi_star_fields(f: &Field, g: &Field, rel_filter: f64) -> Result<Field> {
    let w = f.grid().axis_widths();
    let fw = f.gaussian_unsmooth(&w, rel_filter)?;
    let gw = g.gaussian_unsmooth(&w, rel_filter)?;
    moyal_star_fields(&fw, &gw, rel_filter)?.gaussian_smooth(&w)
}
