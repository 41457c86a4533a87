//! Time propagation of all four representations via their Liouville equations.

use num_complex::Complex64;

use crate::algebra::{OperatorSeries, Pairing};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::states::{Representation, State};
use crate::symbols::PolySymbol;

/// Mass fraction outside the inner 80% box that aborts a propagation.
pub const BOUNDARY_LEAK_TOL: f64 = 1e-6;
/// Norm drift allowed across a trajectory record.
pub const NORM_DRIFT_TOL: f64 = 1e-8;

/// Time-ordered record of a propagated state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub hamiltonian: PolySymbol,
    pub representation: Representation,
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
    pub dt: f64,
    pub save_every: usize,
    pub scheme: &'static str,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> State {
        State {
            field: self.fields[i].clone(),
            representation: self.representation,
            provenance: format!("trajectory[{i}]"),
        }
    }

    pub fn grid(&self) -> &std::sync::Arc<Grid> {
        self.fields[0].grid()
    }
}

/// The right-hand-side operator of the Liouville equation in the given
/// representation, as a terminating series acting on the state field.
///
/// - Wigner: `(2/hbar) H sin(hbar Lambda / 2) W` (the Moyal bracket
///   `-(i/hbar)(H*W - W*H)` resummed to a real series),
/// - Husimi: the same odd series composed with the smoothing exponential and
///   the Husimi symbol of H,
/// - classical density: `H /\ P`,
/// - classical Husimi: `H_husimi /\ (.) Q` (Poisson then smoothing).
pub fn liouville_operator(
    h: &PolySymbol,
    representation: Representation,
    grid: &Grid,
) -> OperatorSeries {
    let n_dof = grid.n_dof();
    let lam = Pairing::poisson(n_dof);
    let half = grid.hbar() / 2.0;
    let bracket = |deg: u32| {
        let mut fact = vec![1.0f64; (deg + 1).max(2) as usize];
        for i in 1..fact.len() {
            fact[i] = fact[i - 1] * i as f64;
        }
        // (2/hbar) sin(hbar Lambda / 2) = sum_m (-1)^m (hbar/2)^(2m) Lambda^(2m+1) / (2m+1)!
        lam.power_series(
            |k| {
                if k % 2 == 0 {
                    Complex64::default()
                } else {
                    let m = (k - 1) / 2;
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    Complex64::new(sign * half.powi((k - 1) as i32) / fact[k as usize], 0.0)
                }
            },
            deg,
        )
    };
    match representation {
        Representation::Wigner => OperatorSeries::from_pairing(&bracket(h.degree()), h),
        Representation::ClassicalDensity => OperatorSeries::from_pairing(&lam, h),
        Representation::Husimi => {
            let hh = h.husimi_symbol(grid);
            let pairing = bracket(hh.degree())
                .mul_capped(&Pairing::smoothing(grid).exp_capped(hh.degree()), hh.degree());
            OperatorSeries::from_pairing(&pairing, &hh)
        }
        Representation::ClassicalHusimi => {
            let hh = h.husimi_symbol(grid);
            let pairing =
                lam.mul_capped(&Pairing::smoothing(grid).exp_capped(hh.degree()), hh.degree());
            OperatorSeries::from_pairing(&pairing, &hh)
        }
    }
}

/// Evaluate the Liouville right-hand side for one state.
pub fn liouville_rhs(h: &PolySymbol, s: &State) -> Result<Field> {
    let op = liouville_operator(h, s.representation, s.grid());
    op.prepare(s.grid()).apply(&s.field)
}

/// Fixed-step RK4 propagation with snapshots every `save_every` steps
/// (endpoints always included). Fails with `BlowUp` on non-finite samples and
/// `BoundaryLeak` when mass escapes the inner 80% box.
pub fn propagate(
    h: &PolySymbol,
    s0: &State,
    t_final: f64,
    dt: f64,
    save_every: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !t_final.is_finite() || t_final < 0.0 {
        return Err(Error::LengthMismatch(format!("bad time span t={t_final}, dt={dt}")));
    }
    let save_every = save_every.max(1);
    let grid = s0.grid().clone();
    let h = if h.n_dof() < grid.n_dof() { h.promote(grid.n_dof()) } else { h.clone() };
    let op = liouville_operator(&h, s0.representation, &grid).prepare(&grid);

    let steps = (t_final / dt).round() as usize;
    let mut field = s0.field.clone();
    let mut times = vec![0.0];
    let mut fields = vec![field.clone()];
    let guard = |f: &Field, t: f64| -> Result<()> {
        if !f.is_finite() {
            return Err(Error::BlowUp(t));
        }
        let leak = f.boundary_mass_fraction();
        if leak > BOUNDARY_LEAK_TOL {
            return Err(Error::BoundaryLeak { mass: leak, t });
        }
        Ok(())
    };
    for step in 0..steps {
        let t = step as f64 * dt;
        let k1 = op.apply(&field)?;
        let mut y = field.clone();
        y.axpy(Complex64::new(dt / 2.0, 0.0), &k1)?;
        let k2 = op.apply(&y)?;
        y = field.clone();
        y.axpy(Complex64::new(dt / 2.0, 0.0), &k2)?;
        let k3 = op.apply(&y)?;
        y = field.clone();
        y.axpy(Complex64::new(dt, 0.0), &k3)?;
        let k4 = op.apply(&y)?;
        field.axpy(Complex64::new(dt / 6.0, 0.0), &k1)?;
        field.axpy(Complex64::new(dt / 3.0, 0.0), &k2)?;
        field.axpy(Complex64::new(dt / 3.0, 0.0), &k3)?;
        field.axpy(Complex64::new(dt / 6.0, 0.0), &k4)?;
        let t_next = t + dt;
        if (step + 1) % save_every == 0 || step + 1 == steps {
            guard(&field, t_next)?;
            let norm = field.phase_integral_real();
            if (norm - 1.0).abs() > NORM_DRIFT_TOL {
                return Err(Error::StateInvariant(format!(
                    "norm drifted to {norm} at t = {t_next}"
                )));
            }
            times.push(t_next);
            fields.push(field.clone());
        }
    }
    Ok(Trajectory {
        hamiltonian: h,
        representation: s0.representation,
        times,
        fields,
        dt,
        save_every,
        scheme: "rk4",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{coherent_husimi, coherent_wigner, expectation, fock_wigner};
    use crate::symbols::parse_poly;
    use std::sync::Arc;

    fn grid64() -> Arc<Grid> {
        Grid::symmetric(1, 64, 9.0, 1.0).unwrap()
    }

    #[test]
    fn zero_hamiltonian_keeps_snapshots_identical() {
        let g = grid64();
        let s = coherent_wigner(&g, &[1.0, 0.0], &[1.0]).unwrap();
        let h = PolySymbol::zero(1);
        let traj = propagate(&h, &s, 0.1, 1e-2, 2).unwrap();
        for f in &traj.fields {
            assert!(f.sup_distance(&s.field) == 0.0);
        }
    }

    #[test]
    fn ho_ground_state_rhs_vanishes() {
        let g = grid64();
        let s = fock_wigner(&g, 0).unwrap();
        let h = parse_poly("0.5*p^2 + 0.5*x^2").unwrap();
        let rhs = liouville_rhs(&h, &s).unwrap();
        assert!(rhs.max_abs() < 1e-10);
    }

    #[test]
    fn wigner_and_classical_rhs_agree_for_quadratic_h() {
        let g = grid64();
        let s = coherent_wigner(&g, &[1.0, 0.0], &[1.0]).unwrap();
        let h = parse_poly("0.5*p^2 + 0.5*x^2").unwrap();
        let quantum = liouville_rhs(&h, &s).unwrap();
        let mut classical_state = s.clone();
        classical_state.representation = Representation::ClassicalDensity;
        let classical = liouville_rhs(&h, &classical_state).unwrap();
        assert!(quantum.sup_distance(&classical) < 1e-12);
    }

    #[test]
    fn coherent_state_rotates_with_unit_frequency() {
        let g = grid64();
        let s = coherent_wigner(&g, &[1.0, 0.0], &[1.0]).unwrap();
        let h = parse_poly("0.5*p^2 + 0.5*x^2").unwrap();
        let traj = propagate(&h, &s, std::f64::consts::FRAC_PI_2, 1e-3, 100).unwrap();
        let x = parse_poly("x").unwrap();
        let p = parse_poly("p").unwrap();
        for i in [traj.len() / 2, traj.len() - 1] {
            let t = traj.times[i];
            let st = traj.state(i);
            let ex = expectation(&x, &st).unwrap();
            let ep = expectation(&p, &st).unwrap();
            assert!((ex - t.cos()).abs() < 1e-6, "<x>({t}) = {ex}");
            assert!((ep + t.sin()).abs() < 1e-6, "<p>({t}) = {ep}");
        }
    }

    #[test]
    fn fock_state_is_stationary_under_oscillator() {
        let g = grid64();
        let s = fock_wigner(&g, 1).unwrap();
        let h = parse_poly("0.5*p^2 + 0.5*x^2").unwrap();
        let traj = propagate(&h, &s, 1.0, 1e-3, 1000).unwrap();
        let last = &traj.fields[traj.len() - 1];
        assert!(last.sup_distance(&s.field) < 1e-8);
    }

    #[test]
    fn husimi_evolution_is_smoothed_wigner_evolution() {
        let g = Grid::symmetric(1, 128, 10.0, 1.0).unwrap();
        let s = coherent_wigner(&g, &[1.0, 0.0], &[1.0]).unwrap();
        let h = parse_poly("0.5*p^2 + 0.5*x^2").unwrap();
        let t = 0.5;
        let wig = propagate(&h, &s, t, 1e-3, 500).unwrap();
        let smoothed_end = wig.fields[wig.len() - 1].gaussian_smooth(&g.axis_widths()).unwrap();
        let q0 = coherent_husimi(&g, &[1.0, 0.0], &[1.0]).unwrap();
        let hus = propagate(&h, &q0, t, 1e-3, 500).unwrap();
        assert!(hus.fields[hus.len() - 1].sup_distance(&smoothed_end) < 1e-9);
    }

    #[test]
    fn energy_and_norm_conserved() {
        let g = grid64();
        let s = coherent_wigner(&g, &[1.0, 0.0], &[1.0]).unwrap();
        let h = parse_poly("0.5*p^2 + 0.5*x^2").unwrap();
        let traj = propagate(&h, &s, 1.0, 1e-3, 200).unwrap();
        let e0 = expectation(&h, &traj.state(0)).unwrap();
        for i in 0..traj.len() {
            let st = traj.state(i);
            let e = expectation(&h, &st).unwrap();
            assert!((e - e0).abs() < 1e-7 * e0.abs());
            assert!((st.field.phase_integral_real() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn blowup_is_reported() {
        // a wildly unstable step size on the quartic blows up to non-finite values
        let g = grid64();
        let s = coherent_wigner(&g, &[1.0, 0.0], &[1.0]).unwrap();
        let h = parse_poly("0.5*p^2 + 0.25*x^4").unwrap();
        let err = propagate(&h, &s, 10.0, 0.5, 1).unwrap_err();
        assert!(
            matches!(err, Error::BlowUp(_))
                || matches!(err, Error::BoundaryLeak { .. })
                || matches!(err, Error::StateInvariant(_)),
            "unexpected: {err:?}"
        );
    }
}
