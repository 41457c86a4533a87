//! Construction of Wigner, Husimi, and classical phase-space states, purity
//! diagnostics, and expectation values.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::algebra::{
    husimi_star_fields, moyal_star_fields, smoothing_product, DEFAULT_SPECTRAL_FILTER,
};
use crate::error::{Error, Result};
use crate::field::{Field, ScalarKind};
use crate::grid::Grid;
use crate::symbols::PolySymbol;

/// Mass fraction allowed outside the inner 80% of the box at construction.
pub const BOUNDARY_MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Wigner,
    Husimi,
    ClassicalDensity,
    ClassicalHusimi,
}

impl Representation {
    pub fn is_husimi_kind(self) -> bool {
        matches!(self, Representation::Husimi | Representation::ClassicalHusimi)
    }

    pub fn is_quantum(self) -> bool {
        matches!(self, Representation::Wigner | Representation::Husimi)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Wigner => "wigner",
            Representation::Husimi => "husimi",
            Representation::ClassicalDensity => "classical_density",
            Representation::ClassicalHusimi => "classical_husimi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wigner" => Ok(Representation::Wigner),
            "husimi" => Ok(Representation::Husimi),
            "classical_density" => Ok(Representation::ClassicalDensity),
            "classical_husimi" => Ok(Representation::ClassicalHusimi),
            other => Err(Error::KindError(format!("unknown representation '{other}'"))),
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct State {
    pub field: Field,
    pub representation: Representation,
    pub provenance: String,
}

impl State {
    /// Wrap a field, enforcing normalization, the boundary-mass guard, and
    /// nonnegativity for the distribution-like representations.
    pub fn new(field: Field, representation: Representation, provenance: &str) -> Result<State> {
        let norm = field.phase_integral_real();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::StateInvariant(format!("normalization {norm} != 1")));
        }
        let bm = field.boundary_mass_fraction();
        if bm > BOUNDARY_MASS_TOL {
            return Err(Error::BoundaryLeak { mass: bm, t: 0.0 });
        }
        if representation != Representation::Wigner {
            let min = field.min_real();
            let max = field.max_abs();
            if min < -1e-10 * max {
                return Err(Error::StateInvariant(format!(
                    "{representation} state has negative samples: min {min:.3e}"
                )));
            }
        }
        Ok(State { field, representation, provenance: provenance.to_string() })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.field.grid()
    }

    /// Gaussian-smooth with the grid widths, moving Wigner to Husimi and the
    /// classical density to its Husimi image.
    pub fn to_husimi(&self) -> Result<State> {
        let target = match self.representation {
            Representation::Wigner => Representation::Husimi,
            Representation::ClassicalDensity => Representation::ClassicalHusimi,
            r => return Ok(State { field: self.field.clone(), representation: r, provenance: self.provenance.clone() }),
        };
        let smoothed = self.field.gaussian_smooth(&self.grid().axis_widths())?;
        State::new(smoothed, target, &format!("smooth({})", self.provenance))
    }
}

fn check_center(grid: &Grid, center: &[f64]) -> Result<()> {
    if center.len() != grid.n_axes() || !grid.contains(center) {
        return Err(Error::CenterOutOfBox(center.to_vec()));
    }
    Ok(())
}

fn normalized(mut field: Field) -> Field {
    let norm = field.phase_integral_real();
    field = field.scale_real(1.0 / norm);
    field
}

/// Wigner function of a squeezed coherent state centered at
/// `(x_c.., p_c..)` with per-dof position width `w_c`:
/// `prod_n (1/pi hbar) exp(-(x-x_c)^2/w_c^2 - (p-p_c)^2 w_c^2 / hbar^2)`.
pub fn coherent_wigner(grid: &Arc<Grid>, center: &[f64], w_c: &[f64]) -> Result<State> {
    check_center(grid, center)?;
    if w_c.len() != grid.n_dof() || w_c.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::LengthMismatch("coherent widths".into()));
    }
    let hbar = grid.hbar();
    let n = grid.n_dof();
    let field = Field::from_fn(grid, |z| {
        let mut v = 1.0;
        for dof in 0..n {
            let dx = z[dof] - center[dof];
            let dp = z[n + dof] - center[n + dof];
            let wc2 = w_c[dof] * w_c[dof];
            v *= (1.0 / (PI * hbar)) * (-dx * dx / wc2 - dp * dp * wc2 / (hbar * hbar)).exp();
        }
        v
    });
    State::new(normalized(field), Representation::Wigner, "coherent_wigner")
}

/// Husimi function of the squeezed coherent state: the Gaussian smoothing of
/// its Wigner function with the grid widths.
pub fn coherent_husimi(grid: &Arc<Grid>, center: &[f64], w_c: &[f64]) -> Result<State> {
    let w = coherent_wigner(grid, center, w_c)?;
    let smoothed = w.field.gaussian_smooth(&grid.axis_widths())?;
    State::new(normalized(smoothed), Representation::Husimi, "coherent_husimi")
}

/// The classical pure-state blob: a Gaussian with the grid's width pairs,
/// `prod_n 1/(2 pi w_p w_x) exp(-(p-p_c)^2/(2 w_p^2) - (x-x_c)^2/(2 w_x^2))`.
pub fn classical_blob(grid: &Arc<Grid>, center: &[f64]) -> Result<State> {
    check_center(grid, center)?;
    let n = grid.n_dof();
    let field = Field::from_fn(grid, |z| {
        let mut v = 1.0;
        for dof in 0..n {
            let w = grid.dof_widths(dof);
            let dx = z[dof] - center[dof];
            let dp = z[n + dof] - center[n + dof];
            v *= (1.0 / (2.0 * PI * w.w_p * w.w_x))
                * (-dp * dp / (2.0 * w.w_p * w.w_p) - dx * dx / (2.0 * w.w_x * w.w_x)).exp();
        }
        v
    });
    State::new(normalized(field), Representation::ClassicalHusimi, "classical_blob")
}

/// Wigner function of the n-th harmonic-oscillator eigenstate (unit mass and
/// frequency, requires `hbar = 1`): `((-1)^n / pi) L_n(2 r^2) exp(-r^2)`,
/// stationary under oscillator propagation.
pub fn fock_wigner(grid: &Arc<Grid>, n_level: usize) -> Result<State> {
    if n_level > 4 {
        return Err(Error::UnsupportedLevel(n_level));
    }
    if (grid.hbar() - 1.0).abs() > 1e-12 {
        return Err(Error::StateInvariant("oscillator eigenstates assume hbar = 1".into()));
    }
    if grid.n_dof() != 1 {
        return Err(Error::UnsupportedDofCount(grid.n_dof()));
    }
    let field = Field::from_fn(grid, |z| {
        let r2 = z[0] * z[0] + z[1] * z[1];
        let sign = if n_level % 2 == 0 { 1.0 } else { -1.0 };
        (sign / PI) * laguerre(n_level, 2.0 * r2) * (-r2).exp()
    });
    State::new(normalized(field), Representation::Wigner, &format!("fock_wigner({n_level})"))
}

fn laguerre(n: usize, x: f64) -> f64 {
    // three-term recurrence: (k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}
    let mut lkm1 = 1.0;
    if n == 0 {
        return lkm1;
    }
    let mut lk = 1.0 - x;
    for k in 1..n {
        let next = ((2.0 * k as f64 + 1.0 - x) * lk - k as f64 * lkm1) / (k as f64 + 1.0);
        lkm1 = lk;
        lk = next;
    }
    lk
}

/// Convex combination of states sharing a grid and representation.
pub fn mixture(parts: &[(f64, &State)]) -> Result<State> {
    if parts.is_empty() {
        return Err(Error::LengthMismatch("empty mixture".into()));
    }
    let total: f64 = parts.iter().map(|(w, _)| w).sum();
    if parts.iter().any(|(w, _)| *w < 0.0) || total <= 0.0 {
        return Err(Error::StateInvariant("mixture weights must be nonnegative".into()));
    }
    let rep = parts[0].1.representation;
    let grid = parts[0].1.grid().clone();
    let mut field = Field::zeros(&grid, ScalarKind::Real);
    for (w, s) in parts {
        if s.representation != rep {
            return Err(Error::Representation {
                got: s.representation.to_string(),
                needs: rep.to_string(),
            });
        }
        field.axpy(num_complex::Complex64::new(w / total, 0.0), &s.field)?;
    }
    State::new(field, rep, "mixture")
}

/// Relative L2 norm of `(2 pi hbar)^N (s * s) - s` with the representation's
/// star product; the classical representations carry no purity notion and are
/// rejected.
pub fn purity_residual(s: &State) -> Result<f64> {
    purity_residual_filtered(s, DEFAULT_SPECTRAL_FILTER)
}

pub fn purity_residual_filtered(s: &State, rel_filter: f64) -> Result<f64> {
    let grid = s.grid();
    let scale = (2.0 * PI * grid.hbar()).powi(grid.n_dof() as i32);
    let ss = match s.representation {
        Representation::Wigner => moyal_star_fields(&s.field, &s.field, rel_filter)?,
        Representation::Husimi => husimi_star_fields(&s.field, &s.field, rel_filter)?,
        r => {
            return Err(Error::Representation {
                got: r.to_string(),
                needs: "wigner | husimi".to_string(),
            })
        }
    };
    let resid = ss.scale_real(scale).sub(&s.field)?;
    Ok(resid.l2_norm() / s.field.l2_norm())
}

/// Mean value of a polynomial observable. Wigner and classical densities pair
/// the Weyl symbol pointwise; Husimi-kind states pair the Husimi symbol
/// through the smoothing product.
pub fn expectation(o: &PolySymbol, s: &State) -> Result<f64> {
    let grid = s.grid();
    let o = if o.n_dof() < grid.n_dof() { o.promote(grid.n_dof()) } else { o.clone() };
    if o.n_axes() != grid.n_axes() {
        return Err(Error::LengthMismatch("observable dof count".into()));
    }
    let value = match s.representation {
        Representation::Wigner | Representation::ClassicalDensity => {
            o.eval_on_grid(grid).mul_pointwise(&s.field)?.phase_integral()
        }
        Representation::Husimi | Representation::ClassicalHusimi => {
            let oh = o.husimi_symbol(grid);
            smoothing_product(&oh, &s.field)?.phase_integral()
        }
    };
    Ok(value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::parse_poly;

    fn grid256() -> Arc<Grid> {
        Grid::symmetric(1, 256, 10.0, 1.0).unwrap()
    }

    #[test]
    fn coherent_wigner_peak_and_mass() {
        let g = grid256();
        let s = coherent_wigner(&g, &[0.0, 0.0], &[1.0]).unwrap();
        let peak = s.field.values()[[128, 128]].re;
        assert!((peak - 1.0 / PI).abs() < 1e-10);
        assert!((s.field.phase_integral_real() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_out_of_box_rejected() {
        let g = grid256();
        assert!(matches!(
            coherent_wigner(&g, &[11.0, 0.0], &[1.0]),
            Err(Error::CenterOutOfBox(_))
        ));
        // inside the box but leaking over the inner-80% guard
        assert!(matches!(
            coherent_wigner(&g, &[9.0, 0.0], &[1.0]),
            Err(Error::BoundaryLeak { .. })
        ));
    }

    #[test]
    fn coherent_husimi_peak_and_positivity() {
        let g = grid256();
        let s = coherent_husimi(&g, &[0.0, 0.0], &[1.0]).unwrap();
        let peak = s.field.values()[[128, 128]].re;
        assert!((peak - 1.0 / (2.0 * PI)).abs() < 1e-10);
        assert!(s.field.min_real() >= -1e-10 * s.field.max_abs());
        assert!((s.field.phase_integral_real() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_husimi_matches_quadrature_convolution() {
        // brute-force convolution of the Wigner state with the kernel at a few
        // sample points
        let g = grid256();
        let w = coherent_wigner(&g, &[0.0, 0.0], &[1.0]).unwrap();
        let q = coherent_husimi(&g, &[0.0, 0.0], &[1.0]).unwrap();
        let widths = g.dof_widths(0);
        let dv = g.volume_element();
        for &(ix, ip) in &[(128usize, 128usize), (140, 128), (128, 110), (150, 150), (100, 120)] {
            let x0 = g.axis(0).coord(ix);
            let p0 = g.axis(1).coord(ip);
            let mut conv = 0.0;
            for (idx, v) in w.field.values().indexed_iter() {
                let dx = x0 - g.axis(0).coord(idx[0]);
                let dp = p0 - g.axis(1).coord(idx[1]);
                conv += v.re
                    * (1.0 / (2.0 * PI * widths.w_p * widths.w_x))
                    * (-dp * dp / (2.0 * widths.w_p * widths.w_p)
                        - dx * dx / (2.0 * widths.w_x * widths.w_x))
                        .exp()
                    * dv;
            }
            let got = q.field.values()[[ix, ip]].re;
            assert!((got - conv).abs() < 1e-8, "({ix},{ip}): {got} vs {conv}");
        }
    }

    #[test]
    fn blob_peak_mass_and_variance() {
        let g = grid256();
        let s = classical_blob(&g, &[0.0, 0.0]).unwrap();
        let peak = s.field.values()[[128, 128]].re;
        assert!((peak - 1.0 / PI).abs() < 1e-10);
        assert!((s.field.phase_integral_real() - 1.0).abs() < 1e-12);
        let x2 = parse_poly("x^2").unwrap().eval_on_grid(&g);
        let var = x2.mul_pointwise(&s.field).unwrap().phase_integral_real();
        assert!((var - 0.5).abs() < 1e-10);
    }

    #[test]
    fn fock_ground_state_is_coherent() {
        let g = grid256();
        let f0 = fock_wigner(&g, 0).unwrap();
        let c = coherent_wigner(&g, &[0.0, 0.0], &[1.0]).unwrap();
        assert!(f0.field.sup_distance(&c.field) < 1e-12);
    }

    #[test]
    fn fock_one_minimum_is_minus_inv_pi() {
        let g = grid256();
        let f1 = fock_wigner(&g, 1).unwrap();
        let min = f1.field.min_real();
        assert!((min + 1.0 / PI).abs() < 1e-9, "min {min}");
        assert!(f1.field.values()[[128, 128]].re < 0.0);
        assert!(matches!(fock_wigner(&g, 5), Err(Error::UnsupportedLevel(5))));
    }

    #[test]
    fn smoothed_fock_one_is_nonnegative() {
        let g = grid256();
        let f1 = fock_wigner(&g, 1).unwrap();
        let q = f1.to_husimi().unwrap();
        assert!(q.field.min_real() >= -1e-10 * q.field.max_abs());
    }

    #[test]
    fn purity_of_coherent_states() {
        let g = grid256();
        let w = coherent_wigner(&g, &[0.0, 0.0], &[1.0]).unwrap();
        assert!(purity_residual(&w).unwrap() < 1e-8);
        let q = coherent_husimi(&g, &[0.0, 0.0], &[1.0]).unwrap();
        assert!(purity_residual(&q).unwrap() < 1e-8);
    }

    #[test]
    fn purity_flags_mixture_and_blob() {
        let g = grid256();
        let a = coherent_wigner(&g, &[-2.0, 0.0], &[1.0]).unwrap();
        let b = coherent_wigner(&g, &[2.0, 0.0], &[1.0]).unwrap();
        let mix = mixture(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert!(purity_residual(&mix).unwrap() > 0.1);

        let mut blob = classical_blob(&g, &[0.0, 0.0]).unwrap();
        assert!(matches!(purity_residual(&blob), Err(Error::Representation { .. })));
        blob.representation = Representation::Husimi;
        assert!(purity_residual(&blob).unwrap() > 0.5);
    }

    #[test]
    fn expectation_values_agree_across_representations() {
        let g = grid256();
        let w = coherent_wigner(&g, &[0.0, 0.0], &[1.0]).unwrap();
        let q = coherent_husimi(&g, &[0.0, 0.0], &[1.0]).unwrap();
        let one = PolySymbol::constant(1, 1.0);
        assert!((expectation(&one, &w).unwrap() - 1.0).abs() < 1e-10);
        let x2 = parse_poly("x^2").unwrap();
        assert!((expectation(&x2, &w).unwrap() - 0.5).abs() < 1e-9);
        assert!((expectation(&x2, &q).unwrap() - 0.5).abs() < 1e-9);
        let ho = parse_poly("0.5*p^2 + 0.5*x^2").unwrap();
        assert!((expectation(&ho, &w).unwrap() - 0.5).abs() < 1e-9);
        assert!((expectation(&ho, &q).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn wigner_husimi_expectations_match_to_degree_four() {
        let g = grid256();
        let w = coherent_wigner(&g, &[1.0, 0.5], &[1.0]).unwrap();
        let q = coherent_husimi(&g, &[1.0, 0.5], &[1.0]).unwrap();
        for text in ["x", "p", "x^2", "x*p", "p^2", "x^3", "x^4", "p^4", "x^2*p^2"] {
            let o = parse_poly(text).unwrap();
            let ew = expectation(&o, &w).unwrap();
            let eq = expectation(&o, &q).unwrap();
            assert!((ew - eq).abs() < 1e-8, "{text}: {ew} vs {eq}");
        }
    }
}
