//! Off-lattice evaluation of real grid fields: spectral zero-padding refines
//! the lattice (exact for band-limited fields), a separable Catmull-Rom
//! stencil interpolates on the refined lattice.

use ndarray::{ArrayD, Dimension, IxDyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fftplan::fft_axis;
use crate::field::{Field, ScalarKind};

pub const DEFAULT_REFINE_FACTOR: usize = 4;

#[derive(Debug, Clone)]
pub struct RefinedField {
    lowers: Vec<f64>,
    spacings: Vec<f64>,
    shape: Vec<usize>,
    data: ArrayD<f64>,
}

impl RefinedField {
    /// Refine a real field by the given per-axis oversampling factor.
    pub fn build(field: &Field, factor: usize) -> Result<RefinedField> {
        if field.kind() != ScalarKind::Real {
            return Err(Error::StateInvariant("interpolation expects a real field".into()));
        }
        let grid = field.grid();
        let factor = factor.max(1);
        let mut data = field.values().clone();
        for axis in 0..grid.n_axes() {
            data = upsample_axis(data, axis, factor);
        }
        let lowers = grid.axes().iter().map(|a| a.lower).collect();
        let spacings = grid.axes().iter().map(|a| a.spacing / factor as f64).collect();
        let shape = data.shape().to_vec();
        Ok(RefinedField { lowers, spacings, shape, data: data.mapv(|c| c.re) })
    }

    /// Interpolated value at an arbitrary point (periodic wrap).
    pub fn eval(&self, point: &[f64]) -> f64 {
        let d = self.shape.len();
        debug_assert_eq!(point.len(), d);
        // per-axis base index and Catmull-Rom weights
        let mut base = vec![0isize; d];
        let mut weights = vec![[0.0f64; 4]; d];
        for a in 0..d {
            let u = (point[a] - self.lowers[a]) / self.spacings[a];
            let i0 = u.floor();
            let t = u - i0;
            base[a] = i0 as isize;
            let t2 = t * t;
            let t3 = t2 * t;
            weights[a] = [
                0.5 * (-t3 + 2.0 * t2 - t),
                0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
                0.5 * (-3.0 * t3 + 4.0 * t2 + t),
                0.5 * (t3 - t2),
            ];
        }
        let mut idx = vec![0usize; d];
        let mut acc = 0.0;
        let corners = 4usize.pow(d as u32);
        for c in 0..corners {
            let mut w = 1.0;
            let mut cc = c;
            for a in 0..d {
                let o = cc % 4;
                cc /= 4;
                w *= weights[a][o];
                let n = self.shape[a] as isize;
                idx[a] = (base[a] + o as isize - 1).rem_euclid(n) as usize;
            }
            acc += w * self.data[IxDyn(&idx)];
        }
        acc
    }
}

/// Zero-pad the spectrum along one axis by `factor`, splitting the Nyquist
/// bin symmetrically so real fields stay real.
fn upsample_axis(mut data: ArrayD<Complex64>, axis: usize, factor: usize) -> ArrayD<Complex64> {
    if factor == 1 {
        return data;
    }
    let m = data.shape()[axis];
    fft_axis(&mut data, axis, false);
    let mut shape = data.shape().to_vec();
    shape[axis] = m * factor;
    let mut padded: ArrayD<Complex64> = ArrayD::zeros(IxDyn(&shape));
    let big = m * factor;
    for (idx, &v) in data.indexed_iter() {
        let i = idx[axis];
        let mut dest = idx.slice().to_vec();
        if i < m / 2 {
            dest[axis] = i;
            padded[IxDyn(&dest)] = v;
        } else if i == m / 2 {
            dest[axis] = m / 2;
            padded[IxDyn(&dest)] = v * 0.5;
            dest[axis] = big - m / 2;
            padded[IxDyn(&dest)] = v * 0.5;
        } else {
            dest[axis] = big - (m - i);
            padded[IxDyn(&dest)] = v;
        }
    }
    fft_axis(&mut padded, axis, true);
    padded.mapv_inplace(|c| c * factor as f64);
    padded
}
