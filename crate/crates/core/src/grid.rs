//! Discretized 2N-dimensional phase space.
//!
//! Axes are ordered `x_1..x_N, p_1..p_N`; every axis is periodic with the
//! upper bound excluded. Spectral operations on [`crate::field::Field`] all
//! reduce to Fourier multipliers on this lattice.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative slack allowed on `w_x * w_p = hbar/2` before construction fails.
pub const WIDTH_PRODUCT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub count: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub count: usize,
    pub lower: f64,
    pub upper: f64,
    pub spacing: f64,
}

impl Axis {
    pub fn len(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lower + self.spacing * i as f64
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.coord(i)).collect()
    }

    /// Angular wavenumbers in FFT order; `k_m = 2 pi m / L` with
    /// `m = 0..count/2-1, -count/2..-1`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * std::f64::consts::PI / self.len();
        (0..self.count)
            .map(|i| {
                let m = if i <= self.count / 2 - 1 { i as i64 } else { i as i64 - self.count as i64 };
                dk * m as f64
            })
            .collect()
    }

    /// Signed mode integer for FFT bin `i`.
    pub fn mode(&self, i: usize) -> i64 {
        if i <= self.count / 2 - 1 {
            i as i64
        } else {
            i as i64 - self.count as i64
        }
    }
}

/// Per-dof pair of smoothing widths with `w_x * w_p = hbar/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofWidths {
    pub w_x: f64,
    pub w_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n_dof: usize,
    axes: Vec<Axis>,
    hbar: f64,
    widths: Vec<DofWidths>,
}

impl Grid {
    /// Build a grid from per-axis specs (ordered `x_1..x_N, p_1..p_N`),
    /// `hbar`, and per-dof width pairs.
    ///
    /// Width pairs are accepted when `w_x * w_p` is within
    /// [`WIDTH_PRODUCT_REL_TOL`] of `hbar/2` and then renormalized
    /// (`w_p := hbar / (2 w_x)`) so the stored product is exact.
    pub fn new(axes: &[AxisSpec], hbar: f64, widths: &[(f64, f64)]) -> Result<Arc<Grid>> {
        if axes.is_empty() || axes.len() % 2 != 0 {
            return Err(Error::BadAxis {
                axis: axes.len(),
                reason: "need a nonzero even number of axes (x_1..x_N, p_1..p_N)".into(),
            });
        }
        let n_dof = axes.len() / 2;
        if hbar <= 0.0 || !hbar.is_finite() {
            return Err(Error::BadAxis { axis: 0, reason: format!("hbar must be positive, got {hbar}") });
        }
        if widths.len() != n_dof {
            return Err(Error::LengthMismatch(format!(
                "{} width pairs for {} dofs",
                widths.len(),
                n_dof
            )));
        }
        let mut built = Vec::with_capacity(axes.len());
        for (i, spec) in axes.iter().enumerate() {
            if spec.count < 8 || !spec.count.is_power_of_two() {
                return Err(Error::BadAxis {
                    axis: i,
                    reason: format!("count must be a power of two >= 8, got {}", spec.count),
                });
            }
            if !(spec.upper > spec.lower) || !spec.lower.is_finite() || !spec.upper.is_finite() {
                return Err(Error::BadAxis {
                    axis: i,
                    reason: format!("bounds inverted or non-finite: [{}, {})", spec.lower, spec.upper),
                });
            }
            built.push(Axis {
                count: spec.count,
                lower: spec.lower,
                upper: spec.upper,
                spacing: (spec.upper - spec.lower) / spec.count as f64,
            });
        }
        let target = hbar / 2.0;
        let mut norm_widths = Vec::with_capacity(n_dof);
        for (dof, &(w_x, w_p)) in widths.iter().enumerate() {
            if !(w_x > 0.0) || !(w_p > 0.0) {
                return Err(Error::WidthConstraintViolated { dof, product: w_x * w_p, target });
            }
            let product = w_x * w_p;
            if (product - target).abs() > WIDTH_PRODUCT_REL_TOL * target {
                return Err(Error::WidthConstraintViolated { dof, product, target });
            }
            norm_widths.push(DofWidths { w_x, w_p: target / w_x });
        }
        Ok(Arc::new(Grid { n_dof, axes: built, hbar, widths: norm_widths }))
    }

    /// Square box `[-half, half)^2N` with `count` points per axis and
    /// symmetric widths `w_x = w_p = sqrt(hbar/2)`.
    pub fn symmetric(n_dof: usize, count: usize, half: f64, hbar: f64) -> Result<Arc<Grid>> {
        let spec = AxisSpec { count, lower: -half, upper: half };
        let w = (hbar / 2.0).sqrt();
        Grid::new(&vec![spec; 2 * n_dof], hbar, &vec![(w, w); n_dof])
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    pub fn n_axes(&self) -> usize {
        2 * self.n_dof
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn x_axis(&self, dof: usize) -> usize {
        dof
    }

    pub fn p_axis(&self, dof: usize) -> usize {
        self.n_dof + dof
    }

    pub fn dof_widths(&self, dof: usize) -> DofWidths {
        self.widths[dof]
    }

    /// Smoothing widths ordered per axis (`w_x1.., w_p1..`).
    pub fn axis_widths(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_axes());
        out.extend(self.widths.iter().map(|w| w.w_x));
        out.extend(self.widths.iter().map(|w| w.w_p));
        out
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn volume_element(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    pub fn total_points(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.n_axes()
            && point.iter().zip(&self.axes).all(|(&c, a)| c >= a.lower && c < a.upper)
    }

    pub fn center(&self) -> Vec<f64> {
        self.axes.iter().map(|a| 0.5 * (a.lower + a.upper)).collect()
    }
}
