//! Scalar fields sampled on a [`Grid`] and their spectral calculus.

use std::sync::Arc;

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fftplan::{fft_all, fft_axis};
use crate::grid::Grid;

/// Imaginary residue (relative to the max magnitude) tolerated on fields that
/// promise a real result.
pub const REAL_RESIDUE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    Real,
    Complex,
}

#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    data: ArrayD<Complex64>,
    kind: ScalarKind,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>, kind: ScalarKind) -> Field {
        Field { grid: grid.clone(), data: ArrayD::zeros(IxDyn(&grid.shape())), kind }
    }

    pub fn constant(grid: &Arc<Grid>, value: f64) -> Field {
        let mut f = Field::zeros(grid, ScalarKind::Real);
        f.data.fill(Complex64::new(value, 0.0));
        f
    }

    /// Sample a real function of the phase-space point.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Field {
        let mut out = Field::zeros(grid, ScalarKind::Real);
        let mut coords = vec![0.0; grid.n_axes()];
        for (idx, v) in out.data.indexed_iter_mut() {
            for (a, c) in coords.iter_mut().enumerate() {
                *c = grid.axis(a).coord(idx[a]);
            }
            *v = Complex64::new(f(&coords), 0.0);
        }
        out
    }

    pub fn from_fn_complex(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> Complex64) -> Field {
        let mut out = Field::zeros(grid, ScalarKind::Complex);
        let mut coords = vec![0.0; grid.n_axes()];
        for (idx, v) in out.data.indexed_iter_mut() {
            for (a, c) in coords.iter_mut().enumerate() {
                *c = grid.axis(a).coord(idx[a]);
            }
            *v = f(&coords);
        }
        out
    }

    pub fn from_data(grid: &Arc<Grid>, data: ArrayD<Complex64>, kind: ScalarKind) -> Result<Field> {
        if data.shape() != grid.shape().as_slice() {
            return Err(Error::LengthMismatch(format!(
                "data shape {:?} vs grid shape {:?}",
                data.shape(),
                grid.shape()
            )));
        }
        Ok(Field { grid: grid.clone(), data, kind })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn kind(&self) -> ScalarKind {
        self.kind
    }

    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut ArrayD<Complex64> {
        self.kind = ScalarKind::Complex;
        &mut self.data
    }

    pub fn real_values(&self) -> ArrayD<f64> {
        self.data.mapv(|c| c.re)
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, c| m.max(c.im.abs()))
    }

    pub fn min_real(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, c| m.min(c.re))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.volume_element()).sqrt()
    }

    /// Max-norm distance to another field.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Declare the field real: verifies the imaginary residue against
    /// [`REAL_RESIDUE_TOL`] and drops it.
    pub fn into_real(mut self) -> Field {
        let scale = self.max_abs();
        let resid = self.max_imag_abs();
        debug_assert!(
            resid <= REAL_RESIDUE_TOL * scale.max(f64::MIN_POSITIVE),
            "imaginary residue {resid:.3e} exceeds {REAL_RESIDUE_TOL:.0e} * {scale:.3e}"
        );
        self.data.mapv_inplace(|c| Complex64::new(c.re, 0.0));
        self.kind = ScalarKind::Real;
        self
    }

    /// Project onto the real subspace. For spectral operations on real inputs
    /// this is exact: taking the real part after the inverse transform equals
    /// Hermitian-symmetrizing the output spectrum, which removes nothing but
    /// FFT roundoff asymmetry.
    fn project_real(mut self) -> Field {
        self.data.mapv_inplace(|c| Complex64::new(c.re, 0.0));
        self.kind = ScalarKind::Real;
        self
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field { grid: self.grid.clone(), data: self.data.mapv(&f), kind: ScalarKind::Complex }
    }

    pub fn scale(&self, s: Complex64) -> Field {
        let mut out = self.clone();
        out.data.mapv_inplace(|c| c * s);
        if s.im != 0.0 {
            out.kind = ScalarKind::Complex;
        }
        out
    }

    pub fn scale_real(&self, s: f64) -> Field {
        let mut out = self.clone();
        out.data.mapv_inplace(|c| c * s);
        out
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let mut out = self.clone();
        out.data += &other.data;
        if other.kind == ScalarKind::Complex {
            out.kind = ScalarKind::Complex;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let mut out = self.clone();
        out.data -= &other.data;
        if other.kind == ScalarKind::Complex {
            out.kind = ScalarKind::Complex;
        }
        Ok(out)
    }

    /// `self += c * other`, in place.
    pub fn axpy(&mut self, c: Complex64, other: &Field) -> Result<()> {
        self.same_grid(other)?;
        ndarray::Zip::from(&mut self.data).and(&other.data).for_each(|a, b| *a += c * b);
        if other.kind == ScalarKind::Complex || c.im != 0.0 {
            self.kind = ScalarKind::Complex;
        }
        Ok(())
    }

    pub fn mul_pointwise(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let mut out = self.clone();
        ndarray::Zip::from(&mut out.data).and(&other.data).for_each(|a, b| *a *= b);
        if other.kind == ScalarKind::Complex {
            out.kind = ScalarKind::Complex;
        }
        Ok(out)
    }

    /// Riemann sum times the phase-space volume element; spectrally exact for
    /// band-limited periodic integrands.
    pub fn phase_integral(&self) -> Complex64 {
        self.data.sum() * self.grid.volume_element()
    }

    pub fn phase_integral_real(&self) -> f64 {
        self.phase_integral().re
    }

    /// Fraction of |f| mass lying outside the central 80% of the box.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let grid = &self.grid;
        let mut outside = 0.0;
        let mut total = 0.0;
        for (idx, v) in self.data.indexed_iter() {
            let mag = v.norm();
            total += mag;
            let mut out = false;
            for a in 0..grid.n_axes() {
                let ax = grid.axis(a);
                let c = ax.coord(idx[a]);
                let margin = 0.1 * ax.len();
                if c < ax.lower + margin || c >= ax.upper - margin {
                    out = true;
                    break;
                }
            }
            if out {
                outside += mag;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }

    // ---- spectral operations -------------------------------------------------

    pub fn spectrum(&self) -> ArrayD<Complex64> {
        let mut s = self.data.clone();
        fft_all(&mut s, false);
        s
    }

    pub fn from_spectrum(grid: &Arc<Grid>, mut spec: ArrayD<Complex64>, kind: ScalarKind) -> Field {
        fft_all(&mut spec, true);
        let f = Field { grid: grid.clone(), data: spec, kind: ScalarKind::Complex };
        if kind == ScalarKind::Real {
            f.project_real()
        } else {
            f
        }
    }

    /// Fourier differentiation of the given order along one axis; exact for
    /// band-limited inputs. The Nyquist mode is zeroed for odd orders.
    pub fn spectral_derivative(&self, axis: usize, order: u32) -> Result<Field> {
        if axis >= self.grid.n_axes() {
            return Err(Error::AxisOutOfRange(axis));
        }
        let mut data = self.data.clone();
        fft_axis(&mut data, axis, false);
        let ax = self.grid.axis(axis);
        let ks = ax.wavenumbers();
        let nyquist = ax.count / 2;
        let mult: Vec<Complex64> = ks
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                if order % 2 == 1 && i == nyquist {
                    Complex64::new(0.0, 0.0)
                } else {
                    (Complex64::new(0.0, k)).powu(order)
                }
            })
            .collect();
        for (idx, v) in data.indexed_iter_mut() {
            *v *= mult[idx[axis]];
        }
        fft_axis(&mut data, axis, true);
        let out = Field { grid: self.grid.clone(), data, kind: ScalarKind::Complex };
        Ok(if self.kind == ScalarKind::Real { out.project_real() } else { out })
    }

    /// Derivative of a mixed multi-order (one entry per axis).
    pub fn spectral_derivative_multi(&self, orders: &[u32]) -> Result<Field> {
        if orders.len() != self.grid.n_axes() {
            return Err(Error::LengthMismatch("derivative multi-order".into()));
        }
        let mut out = self.clone();
        for (axis, &ord) in orders.iter().enumerate() {
            if ord > 0 {
                out = out.spectral_derivative(axis, ord)?;
            }
        }
        Ok(out)
    }

    /// Convolution with the product-Gaussian kernel of per-axis widths,
    /// computed by Fourier multiplication with `exp(-k^2 w^2 / 2)` per axis.
    /// Preserves the phase-space integral and is translation-invariant.
    pub fn gaussian_smooth(&self, widths: &[f64]) -> Result<Field> {
        if widths.len() != self.grid.n_axes() {
            return Err(Error::LengthMismatch("smoothing widths".into()));
        }
        let mut spec = self.spectrum();
        self.apply_gauss_multiplier(&mut spec, widths, 1.0);
        Ok(Field::from_spectrum(&self.grid, spec, self.kind))
    }

    /// Deconvolution of the product-Gaussian kernel. Modes whose magnitude is
    /// below `rel_floor` times the spectral peak are zeroed first; without the
    /// floor the inverse multiplier amplifies the FFT noise floor beyond any
    /// usable level.
    pub fn gaussian_unsmooth(&self, widths: &[f64], rel_floor: f64) -> Result<Field> {
        if widths.len() != self.grid.n_axes() {
            return Err(Error::LengthMismatch("smoothing widths".into()));
        }
        let mut spec = self.spectrum();
        lowpass_in_place(&mut spec, rel_floor);
        self.apply_gauss_multiplier(&mut spec, widths, -1.0);
        Ok(Field::from_spectrum(&self.grid, spec, self.kind))
    }

    fn apply_gauss_multiplier(&self, spec: &mut ArrayD<Complex64>, widths: &[f64], sign: f64) {
        let kvecs: Vec<Vec<f64>> =
            (0..self.grid.n_axes()).map(|a| self.grid.axis(a).wavenumbers()).collect();
        for (idx, v) in spec.indexed_iter_mut() {
            if v.norm() == 0.0 {
                continue; // the inverse multiplier overflows on filtered modes
            }
            let mut e = 0.0;
            for (a, kv) in kvecs.iter().enumerate() {
                let k = kv[idx[a]];
                e += 0.5 * k * k * widths[a] * widths[a];
            }
            let m = (sign * -e).exp();
            *v = if m.is_finite() { *v * m } else { Complex64::default() };
        }
    }

    /// Solve `laplacian(U) = -(f - mean f)` on the torus; the zero mode is
    /// projected out so U has zero mean.
    pub fn poisson_solve(&self) -> Result<Field> {
        let mut spec = self.spectrum();
        let kvecs: Vec<Vec<f64>> =
            (0..self.grid.n_axes()).map(|a| self.grid.axis(a).wavenumbers()).collect();
        for (idx, v) in spec.indexed_iter_mut() {
            let k2: f64 = kvecs.iter().enumerate().map(|(a, kv)| kv[idx[a]] * kv[idx[a]]).sum();
            if k2 == 0.0 {
                *v = Complex64::default();
            } else {
                *v /= k2;
            }
        }
        Ok(Field::from_spectrum(&self.grid, spec, self.kind))
    }

    /// Rigid translation `f(z) -> f(z - delta)` via phase multiplication;
    /// exact for the trigonometric interpolant.
    pub fn shift(&self, delta: &[f64]) -> Result<Field> {
        if delta.len() != self.grid.n_axes() {
            return Err(Error::LengthMismatch("shift vector".into()));
        }
        let mut spec = self.spectrum();
        let kvecs: Vec<Vec<f64>> =
            (0..self.grid.n_axes()).map(|a| self.grid.axis(a).wavenumbers()).collect();
        for (idx, v) in spec.indexed_iter_mut() {
            let mut phase = 0.0;
            for (a, kv) in kvecs.iter().enumerate() {
                phase -= kv[idx[a]] * delta[a];
            }
            *v *= Complex64::from_polar(1.0, phase);
        }
        Ok(Field::from_spectrum(&self.grid, spec, self.kind))
    }
}

/// Zero all spectral modes below `rel` times the peak magnitude.
pub fn lowpass_in_place(spec: &mut ArrayD<Complex64>, rel: f64) {
    let peak = spec.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let floor = rel * peak;
    spec.mapv_inplace(|c| if c.norm() < floor { Complex64::default() } else { c });
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid_1d(count: usize, half: f64) -> Arc<Grid> {
        Grid::symmetric(1, count, half, 1.0).unwrap()
    }

    #[test]
    fn derivative_of_commensurate_sine() {
        let g = grid_1d(64, 8.0);
        let k = 2.0 * PI / 16.0 * 3.0;
        let f = Field::from_fn(&g, |z| (k * z[0]).sin());
        let d = f.spectral_derivative(0, 1).unwrap();
        let expect = Field::from_fn(&g, |z| k * (k * z[0]).cos());
        assert!(d.sup_distance(&expect) < 1e-12);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = grid_1d(16, 4.0);
        let f = Field::constant(&g, 3.25);
        for order in 1..=3 {
            assert!(f.spectral_derivative(0, order).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn second_derivative_of_gaussian() {
        // d2/dx2 exp(-x^2/2) = (x^2 - 1) exp(-x^2/2), on [-10, 10) x 256.
        let spec = crate::grid::AxisSpec { count: 256, lower: -10.0, upper: 10.0 };
        let g = Grid::new(&[spec, spec], 1.0, &[((0.5f64).sqrt(), (0.5f64).sqrt())]).unwrap();
        let f = Field::from_fn(&g, |z| (-z[0] * z[0] / 2.0).exp());
        let d2 = f.spectral_derivative(0, 2).unwrap();
        let expect = Field::from_fn(&g, |z| (z[0] * z[0] - 1.0) * (-z[0] * z[0] / 2.0).exp());
        assert!(d2.sup_distance(&expect) < 1e-10);
    }

    #[test]
    fn smoothing_adds_gaussian_variances() {
        let g = grid_1d(128, 8.0);
        let s2 = 0.8;
        let f = Field::from_fn(&g, |z| (-(z[0] * z[0] + z[1] * z[1]) / (2.0 * s2)).exp());
        let w = 0.6;
        let sm = f.gaussian_smooth(&[w, w]).unwrap();
        let t2 = s2 + w * w;
        let expect = Field::from_fn(&g, |z| {
            (s2 / t2) * (-(z[0] * z[0] + z[1] * z[1]) / (2.0 * t2)).exp()
        });
        assert!(sm.sup_distance(&expect) < 1e-12);
        let mass_in = f.phase_integral_real();
        let mass_out = sm.phase_integral_real();
        assert!((mass_in - mass_out).abs() < 1e-12 * mass_in.abs());
    }

    #[test]
    fn smoothing_of_grid_delta_reproduces_kernel() {
        let g = grid_1d(256, 8.0);
        let mut f = Field::zeros(&g, ScalarKind::Real);
        let mid = [128usize, 128usize];
        f.values_mut()[IxDyn(&mid)] = Complex64::new(1.0 / g.volume_element(), 0.0);
        let w = g.axis_widths();
        let sm = f.gaussian_smooth(&w).unwrap();
        let kernel = Field::from_fn(&g, |z| {
            let wx = w[0];
            let wp = w[1];
            (1.0 / (2.0 * PI * wx * wp))
                * (-z[0] * z[0] / (2.0 * wx * wx) - z[1] * z[1] / (2.0 * wp * wp)).exp()
        });
        assert!(sm.sup_distance(&kernel) < 1e-8);
    }

    #[test]
    fn smoothing_semigroup() {
        let g = grid_1d(128, 8.0);
        let f = Field::from_fn(&g, |z| (-(z[0] * z[0] + 0.5 * z[1] * z[1])).exp() * (1.0 + z[0]));
        let w1 = 0.4;
        let w2 = 0.3;
        let a = f.gaussian_smooth(&[w1, w1]).unwrap().gaussian_smooth(&[w2, w2]).unwrap();
        let w12 = (w1 * w1 + w2 * w2).sqrt();
        let b = f.gaussian_smooth(&[w12, w12]).unwrap();
        assert!(a.sup_distance(&b) < 1e-10);
    }

    #[test]
    fn derivative_commutes_with_smoothing() {
        let g = grid_1d(128, 8.0);
        let f = Field::from_fn(&g, |z| (-(z[0] * z[0] + z[1] * z[1])).exp() * z[1]);
        let w = [0.5, 0.5];
        let a = f.gaussian_smooth(&w).unwrap().spectral_derivative(0, 1).unwrap();
        let b = f.spectral_derivative(0, 1).unwrap().gaussian_smooth(&w).unwrap();
        assert!(a.sup_distance(&b) < 1e-10);
    }

    #[test]
    fn poisson_inverts_sine() {
        let g = grid_1d(64, 8.0);
        let k = 2.0 * PI / 16.0 * 2.0;
        let f = Field::from_fn(&g, |z| (k * z[0]).sin());
        let u = f.poisson_solve().unwrap();
        let expect = Field::from_fn(&g, |z| (k * z[0]).sin() / (k * k));
        assert!(u.sup_distance(&expect) < 1e-12);
    }

    #[test]
    fn poisson_of_zero_is_zero() {
        let g = grid_1d(16, 4.0);
        let u = Field::zeros(&g, ScalarKind::Real).poisson_solve().unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn poisson_product_mode() {
        let g = grid_1d(64, 8.0);
        let k1 = 2.0 * PI / 16.0 * 2.0;
        let k2 = 2.0 * PI / 16.0 * 3.0;
        let f = Field::from_fn(&g, |z| (k1 * z[0]).cos() * (k2 * z[1]).cos());
        let u = f.poisson_solve().unwrap();
        let expect = Field::from_fn(&g, |z| (k1 * z[0]).cos() * (k2 * z[1]).cos() / (k1 * k1 + k2 * k2));
        assert!(u.sup_distance(&expect) < 1e-12);
        // residual check: laplacian(U) + (f - mean) = 0
        let lap = u
            .spectral_derivative(0, 2)
            .unwrap()
            .add(&u.spectral_derivative(1, 2).unwrap())
            .unwrap();
        let resid = lap.add(&f).unwrap();
        assert!(resid.max_abs() < 1e-10 * f.max_abs());
    }

    #[test]
    fn integral_of_odd_function_vanishes() {
        let g = grid_1d(64, 8.0);
        let f = Field::from_fn(&g, |z| z[0] * (-(z[0] * z[0] + z[1] * z[1]) / 2.0).exp());
        assert!(f.phase_integral_real().abs() < 1e-12);
    }

    #[test]
    fn gaussian_second_moment() {
        let g = grid_1d(128, 8.0);
        let f = Field::from_fn(&g, |z| {
            (1.0 / (2.0 * PI)) * (-(z[0] * z[0] + z[1] * z[1]) / 2.0).exp() * z[0] * z[0]
        });
        assert!((f.phase_integral_real() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shift_translates_gaussian_exactly() {
        let g = grid_1d(128, 8.0);
        let f = Field::from_fn(&g, |z| (-(z[0] * z[0] + z[1] * z[1])).exp());
        let sh = f.shift(&[0.3, -0.7]).unwrap();
        let expect =
            Field::from_fn(&g, |z| (-((z[0] - 0.3).powi(2) + (z[1] + 0.7).powi(2))).exp());
        assert!(sh.sup_distance(&expect) < 1e-11);
    }
}
