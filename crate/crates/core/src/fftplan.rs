//! Cached rustfft plans plus lane-wise ND transforms.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{ArrayD, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        cell.borrow_mut()
            .entry((len, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                let dir = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
                planner.plan_fft(len, dir)
            })
            .clone()
    })
}

/// Unnormalized transform along one axis. The inverse carries the 1/len factor,
/// so `fft_axis` followed by `ifft_axis` is the identity.
pub fn fft_axis(data: &mut ArrayD<Complex64>, axis: usize, inverse: bool) {
    let len = data.shape()[axis];
    let fft = plan(len, inverse);
    let mut scratch = vec![Complex64::default(); len];
    let norm = 1.0 / len as f64;
    for mut lane in data.lanes_mut(Axis(axis)) {
        for (s, v) in scratch.iter_mut().zip(lane.iter()) {
            *s = *v;
        }
        fft.process(&mut scratch);
        if inverse {
            for (v, s) in lane.iter_mut().zip(scratch.iter()) {
                *v = *s * norm;
            }
        } else {
            for (v, s) in lane.iter_mut().zip(scratch.iter()) {
                *v = *s;
            }
        }
    }
}

pub fn fft_all(data: &mut ArrayD<Complex64>, inverse: bool) {
    for axis in 0..data.ndim() {
        fft_axis(data, axis, inverse);
    }
}
