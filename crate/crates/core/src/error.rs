use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("axis {axis}: {reason}")]
    BadAxis { axis: usize, reason: String },

    #[error(
        "width constraint violated for dof {dof}: w_x*w_p = {product:.12e}, required hbar/2 = {target:.12e}"
    )]
    WidthConstraintViolated { dof: usize, product: f64, target: f64 },

    #[error("axis {0} out of range")]
    AxisOutOfRange(usize),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("parse error at byte {offset}: expected {}", expected.join(" | "))]
    Parse { offset: usize, expected: Vec<String> },

    #[error("operation undefined for representation {got} (needs {needs})")]
    Representation { got: String, needs: String },

    #[error("center {0:?} lies outside the box")]
    CenterOutOfBox(Vec<f64>),

    #[error("unsupported oscillator level {0} (levels 0..=4 available)")]
    UnsupportedLevel(usize),

    #[error("non-finite sample at t = {0}")]
    BlowUp(f64),

    #[error("boundary leak at t = {t}: mass fraction {mass:.3e} outside inner box")]
    BoundaryLeak { mass: f64, t: f64 },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("gauge kind error: {0}")]
    KindError(String),

    #[error("radial quadrature not converged: doubling nodes moved the flux by {0:.3e}")]
    QuadratureNonConvergent(f64),

    #[error("mask dominates: unmasked region carries only {0:.6} of state mass")]
    MaskDominates(f64),

    #[error("field-field star products are implemented for n_dof = 1, got {0}")]
    UnsupportedDofCount(usize),

    #[error("state invariant violated: {0}")]
    StateInvariant(String),

    #[error("snapshot i/o: {0}")]
    Snapshot(String),
}
