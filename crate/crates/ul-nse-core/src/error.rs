use thiserror::Error;

/// Errors raised by field construction and the numerical operators.
#[derive(Error, Debug)]
pub enum Error {
    #[error("field contains non-finite values (first at index {0:?})")]
    NonFinite((usize, usize)),

    #[error("grids do not match: {0}x{0} (L={1}) vs {2}x{2} (L={3})")]
    GridMismatch(usize, f64, usize, f64),

    #[error("grid size {0} is not a power of two >= 8")]
    BadGridSize(usize),

    #[error("box length {0} is not positive")]
    BadBoxLength(f64),

    #[error("mean of field is {0:.3e}, exceeds tolerance {1:.1e}: inversion is ill-posed")]
    NonZeroMean(f64, f64),

    #[error("ball radius {0} exceeds half the box length {1}: mask self-overlaps")]
    BallTooLarge(f64, f64),

    #[error("field is not divergence free: max |div| = {0:.3e} (tolerance {1:.1e})")]
    NotDivergenceFree(f64, f64),

    #[error("support violation: field mass {0:.3e} outside the allowed region {1}")]
    SupportViolation(f64, String),

    #[error("kernel is singular at x = 0")]
    KernelSingularity,

    #[error("tail of the weight integral beyond the box is {0:.2}% of the value; enlarge the box (need < {1:.0}%)")]
    WeightTail(f64, f64),

    #[error("dyadic index {0} outside representable range [{1}, {2}]")]
    DyadicRange(i32, i32, i32),

    #[error("solver produced non-finite values at step {step} (t = {t:.6}), max |u| = {max_u:.3e}")]
    SolverBlowup { step: usize, t: f64, max_u: f64 },

    #[error("time step {dt} violates the CFL bound {bound:.3e} = h / (2 max|u|)")]
    CflViolation { dt: f64, bound: f64 },

    #[error("exponent p = {0} is not in [1, inf]")]
    BadExponent(f64),

    #[error("empty center set")]
    EmptyCenters,

    #[error("snapshot i/o: {0}")]
    SnapshotIo(#[from] std::io::Error),

    #[error("snapshot format: {0}")]
    SnapshotFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
