//! Periodic grid fields on a square box approximating the plane.
//!
//! A `ScalarField` stores samples of a real function on an n x n grid over
//! `[-L/2, L/2)^2` together with a lazily computed spectral representation.
//! All differential operators act through the discrete Fourier transform and
//! are exact on band-limited data. The forward transform is unnormalized; the
//! inverse carries the 1/n^2 factor.

use crate::error::{Error, Result};
use crate::fft;
use ndarray::Array2;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::sync::OnceLock;

/// Relative tolerance for the zero-mean preconditions of the inverse
/// Laplacian and the Biot-Savart recovery.
pub const MEAN_TOL: f64 = 1e-10;

/// Square periodic grid: n samples per axis over a box of side `box_length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::BadGridSize(n));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::BadBoxLength(box_length));
        }
        Ok(Grid { n, box_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Grid spacing h = L/n.
    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Physical coordinate of sample index k along one axis: -L/2 + k h.
    pub fn coord(&self, k: usize) -> f64 {
        -0.5 * self.box_length + k as f64 * self.spacing()
    }

    /// Physical point of the sample (i, j); axis 0 is x1, axis 1 is x2.
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.coord(i), self.coord(j)]
    }

    /// Physical wavenumber of spectral index k along one axis.
    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length * fft::signed_index(k, self.n) as f64
    }

    /// Minimum-image displacement on the torus.
    pub fn min_image(&self, d: f64) -> f64 {
        d - self.box_length * (d / self.box_length).round()
    }

    /// Torus distance between two physical points.
    pub fn distance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let dx = self.min_image(a[0] - b[0]);
        let dy = self.min_image(a[1] - b[1]);
        dx.hypot(dy)
    }

    /// Visit every grid point within torus distance `r` of `x0`.
    /// The callback receives (i, j, torus distance to x0).
    pub fn for_ball(&self, x0: [f64; 2], r: f64, mut f: impl FnMut(usize, usize, f64)) {
        let h = self.spacing();
        let n = self.n as i64;
        let lo_i = ((x0[0] + 0.5 * self.box_length - r) / h).floor() as i64;
        let hi_i = ((x0[0] + 0.5 * self.box_length + r) / h).ceil() as i64;
        let lo_j = ((x0[1] + 0.5 * self.box_length - r) / h).floor() as i64;
        let hi_j = ((x0[1] + 0.5 * self.box_length + r) / h).ceil() as i64;
        for ii in lo_i..=hi_i.min(lo_i + n - 1) {
            let i = ii.rem_euclid(n) as usize;
            let dx = self.min_image(self.coord(i) - x0[0]);
            for jj in lo_j..=hi_j.min(lo_j + n - 1) {
                let j = jj.rem_euclid(n) as usize;
                let dy = self.min_image(self.coord(j) - x0[1]);
                let d = dx.hypot(dy);
                if d <= r {
                    f(i, j, d);
                }
            }
        }
    }
}

/// Scalar samples plus a lazily computed spectrum.
#[derive(Debug)]
pub struct ScalarField {
    grid: Grid,
    values: Array2<f64>,
    spectrum: OnceLock<Array2<Complex64>>,
}

impl Clone for ScalarField {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        ScalarField {
            grid: self.grid,
            values: self.values.clone(),
            spectrum,
        }
    }
}

impl ScalarField {
    pub fn new(grid: Grid, values: Array2<f64>) -> Result<Self> {
        if values.nrows() != grid.n() || values.ncols() != grid.n() {
            return Err(Error::GridMismatch(
                grid.n(),
                grid.box_length(),
                values.nrows(),
                grid.box_length(),
            ));
        }
        for ((i, j), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite((i, j)));
            }
        }
        Ok(ScalarField {
            grid,
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: Array2::zeros((grid.n(), grid.n())),
            spectrum: OnceLock::new(),
        }
    }

    /// Sample a function of the physical point.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = Array2::from_shape_fn((grid.n(), grid.n()), |(i, j)| f(grid.point(i, j)));
        ScalarField::new(grid, values)
    }

    /// Rebuild samples from spectral coefficients (inverse transform).
    pub fn from_spectrum(grid: Grid, coeffs: Array2<Complex64>) -> Result<Self> {
        if coeffs.nrows() != grid.n() || coeffs.ncols() != grid.n() {
            return Err(Error::GridMismatch(
                grid.n(),
                grid.box_length(),
                coeffs.nrows(),
                grid.box_length(),
            ));
        }
        let values = fft::inverse(&coeffs);
        let field = ScalarField::new(grid, values)?;
        let _ = field.spectrum.set(coeffs);
        Ok(field)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Unnormalized DFT coefficients, computed on first use and cached.
    pub fn spectrum(&self) -> &Array2<Complex64> {
        self.spectrum.get_or_init(|| fft::forward(&self.values))
    }

    pub fn mean(&self) -> f64 {
        self.values.sum() / (self.grid.n() * self.grid.n()) as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Box L2 norm, (h^2 sum f^2)^(1/2).
    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.spacing();
        (self.values.iter().map(|v| v * v).sum::<f64>() * h * h).sqrt()
    }

    /// Apply a diagonal spectral multiplier m(xi1, xi2).
    pub fn apply_multiplier(&self, m: impl Fn(f64, f64) -> Complex64) -> ScalarField {
        let n = self.grid.n();
        let spec = self.spectrum();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            let k1 = self.grid.wavenumber(i);
            for j in 0..n {
                let k2 = self.grid.wavenumber(j);
                out[[i, j]] = spec[[i, j]] * m(k1, k2);
            }
        }
        ScalarField::from_spectrum(self.grid, out).expect("multiplier output must be well-formed")
    }

    /// Partial derivative along axis 0 or 1 (spectral, Nyquist mode dropped).
    pub fn derivative(&self, axis: usize) -> ScalarField {
        let n = self.grid.n();
        let nyq = n / 2;
        let spec = self.spectrum();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let k = if axis == 0 { i } else { j };
                if k == nyq {
                    continue;
                }
                let xi = self.grid.wavenumber(if axis == 0 { i } else { j });
                out[[i, j]] = spec[[i, j]] * Complex64::new(0.0, xi);
            }
        }
        ScalarField::from_spectrum(self.grid, out).expect("derivative output must be well-formed")
    }

    pub fn gradient(&self) -> VectorField {
        VectorField::new(self.derivative(0), self.derivative(1))
            .expect("gradient components share the grid")
    }

    /// Perpendicular gradient (d2 f, -d1 f); always divergence free.
    pub fn perp_gradient(&self) -> VectorField {
        let d1 = self.derivative(0);
        let d2 = self.derivative(1);
        VectorField::new(d2, d1.scale(-1.0)).expect("components share the grid")
    }

    pub fn laplacian(&self) -> ScalarField {
        self.apply_multiplier(|k1, k2| Complex64::new(-(k1 * k1 + k2 * k2), 0.0))
    }

    /// Inverse Laplacian on the zero-mean subspace. Rejects inputs whose mean
    /// exceeds `MEAN_TOL` relative to the field amplitude.
    pub fn inv_laplacian_meanzero(&self) -> Result<ScalarField> {
        let tol = MEAN_TOL * (1.0 + self.max_abs());
        let mean = self.mean();
        if mean.abs() > tol {
            return Err(Error::NonZeroMean(mean, tol));
        }
        Ok(self.apply_multiplier(|k1, k2| {
            let k2sum = k1 * k1 + k2 * k2;
            if k2sum == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(-1.0 / k2sum, 0.0)
            }
        }))
    }

    /// 2/3-rule truncation: zero all modes with max(|k1|,|k2|) > n/3.
    pub fn dealias(&self) -> ScalarField {
        let n = self.grid.n();
        let cap = (n / 3) as i64;
        let spec = self.spectrum();
        let mut out = spec.clone();
        for i in 0..n {
            let k1 = fft::signed_index(i, n).abs();
            for j in 0..n {
                let k2 = fft::signed_index(j, n).abs();
                if k1.max(k2) > cap {
                    out[[i, j]] = Complex64::new(0.0, 0.0);
                }
            }
        }
        ScalarField::from_spectrum(self.grid, out).expect("dealias output must be well-formed")
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        ScalarField::new(self.grid, self.values.mapv(|v| c * v)).expect("scaling stays finite")
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.check_same_grid(other)?;
        ScalarField::new(self.grid, &self.values + &other.values)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.check_same_grid(other)?;
        ScalarField::new(self.grid, &self.values - &other.values)
    }

    /// Pointwise product with 2/3-rule dealiasing of inputs and output.
    pub fn multiply_dealiased(&self, other: &ScalarField) -> Result<ScalarField> {
        self.check_same_grid(other)?;
        let a = self.dealias();
        let b = other.dealias();
        let prod = ScalarField::new(self.grid, &a.values * &b.values)?;
        Ok(prod.dealias())
    }

    fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                self.grid.n(),
                self.grid.box_length(),
                other.grid.n(),
                other.grid.box_length(),
            ));
        }
        Ok(())
    }
}

/// Two scalar components on a shared grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    u1: ScalarField,
    u2: ScalarField,
}

impl VectorField {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Result<Self> {
        if u1.grid != u2.grid {
            return Err(Error::GridMismatch(
                u1.grid.n(),
                u1.grid.box_length(),
                u2.grid.n(),
                u2.grid.box_length(),
            ));
        }
        Ok(VectorField { u1, u2 })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            u1: ScalarField::zeros(grid),
            u2: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Self> {
        let u1 = ScalarField::from_fn(grid, |p| f(p)[0])?;
        let u2 = ScalarField::from_fn(grid, |p| f(p)[1])?;
        VectorField::new(u1, u2)
    }

    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    pub fn component(&self, axis: usize) -> &ScalarField {
        if axis == 0 {
            &self.u1
        } else {
            &self.u2
        }
    }

    pub fn divergence(&self) -> ScalarField {
        self.u1
            .derivative(0)
            .add(&self.u2.derivative(1))
            .expect("components share the grid")
    }

    /// rot u = d1 u2 - d2 u1.
    pub fn rotation(&self) -> ScalarField {
        self.u2
            .derivative(0)
            .sub(&self.u1.derivative(1))
            .expect("components share the grid")
    }

    pub fn laplacian(&self) -> VectorField {
        VectorField::new(self.u1.laplacian(), self.u2.laplacian())
            .expect("components share the grid")
    }

    pub fn dealias(&self) -> VectorField {
        VectorField::new(self.u1.dealias(), self.u2.dealias()).expect("components share the grid")
    }

    pub fn scale(&self, c: f64) -> VectorField {
        VectorField::new(self.u1.scale(c), self.u2.scale(c)).expect("components share the grid")
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        VectorField::new(self.u1.add(&other.u1)?, self.u2.add(&other.u2)?)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        VectorField::new(self.u1.sub(&other.u1)?, self.u2.sub(&other.u2)?)
    }

    pub fn add_constant(&self, c: [f64; 2]) -> VectorField {
        let grid = *self.grid();
        let u1 = ScalarField::new(grid, self.u1.values().mapv(|v| v + c[0]))
            .expect("finite shift stays finite");
        let u2 = ScalarField::new(grid, self.u2.values().mapv(|v| v + c[1]))
            .expect("finite shift stays finite");
        VectorField { u1, u2 }
    }

    pub fn mean(&self) -> [f64; 2] {
        [self.u1.mean(), self.u2.mean()]
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.grid().n();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                m = m.max(self.magnitude_at(i, j));
            }
        }
        m
    }

    pub fn l2_norm(&self) -> f64 {
        let h = self.grid().spacing();
        let s: f64 = self
            .u1
            .values()
            .iter()
            .zip(self.u2.values().iter())
            .map(|(a, b)| a * a + b * b)
            .sum();
        (s * h * h).sqrt()
    }

    pub fn magnitude_at(&self, i: usize, j: usize) -> f64 {
        self.u1.values()[[i, j]].hypot(self.u2.values()[[i, j]])
    }
}

/// Anything with a pointwise magnitude sampled on a grid: scalars, vectors,
/// and the velocity tensor. Ball-restricted norms are defined through this.
pub trait SampledField {
    fn sample_grid(&self) -> &Grid;
    fn magnitude(&self, i: usize, j: usize) -> f64;
}

impl SampledField for ScalarField {
    fn sample_grid(&self) -> &Grid {
        &self.grid
    }
    fn magnitude(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]].abs()
    }
}

impl SampledField for VectorField {
    fn sample_grid(&self) -> &Grid {
        self.grid()
    }
    fn magnitude(&self, i: usize, j: usize) -> f64 {
        self.magnitude_at(i, j)
    }
}

/// L^p norm over the disk of radius `r` around `x0` (midpoint quadrature with
/// periodic wrapping); p = infinity returns the mask maximum.
pub fn ball_norm<F: SampledField + ?Sized>(f: &F, p: f64, r: f64, x0: [f64; 2]) -> Result<f64> {
    let grid = f.sample_grid();
    if !(r > 0.0) {
        return Err(Error::BallTooLarge(r, grid.box_length() / 2.0));
    }
    if r > grid.box_length() / 2.0 {
        return Err(Error::BallTooLarge(r, grid.box_length() / 2.0));
    }
    if !(p >= 1.0) {
        return Err(Error::BadExponent(p));
    }
    let h = grid.spacing();
    if p.is_infinite() {
        let mut m: f64 = 0.0;
        grid.for_ball(x0, r, |i, j, _| m = m.max(f.magnitude(i, j)));
        return Ok(m);
    }
    let mut acc = 0.0;
    grid.for_ball(x0, r, |i, j, _| acc += f.magnitude(i, j).powf(p));
    Ok((acc * h * h).powf(1.0 / p))
}

/// Box L^p norm (quadrature over the whole grid); p = infinity is the max.
pub fn box_norm<F: SampledField + ?Sized>(f: &F, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::BadExponent(p));
    }
    let grid = f.sample_grid();
    let n = grid.n();
    if p.is_infinite() {
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                m = m.max(f.magnitude(i, j));
            }
        }
        return Ok(m);
    }
    let h = grid.spacing();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += f.magnitude(i, j).powf(p);
        }
    }
    Ok((acc * h * h).powf(1.0 / p))
}

/// Velocity from vorticity on the torus: u = perp_grad(Theta) with
/// Theta = -inv_laplacian(omega). Requires zero-mean omega.
pub fn biot_savart(omega: &ScalarField) -> Result<VectorField> {
    let theta = omega.inv_laplacian_meanzero()?.scale(-1.0);
    Ok(theta.perp_gradient())
}

const SNAPSHOT_MAGIC: &[u8; 6] = b"ULNSE1";

/// Write a field snapshot: magic "ULNSE1", u32 n, f64 L, then n*n row-major
/// f64 values, all little-endian.
pub fn write_snapshot<W: Write>(mut w: W, f: &ScalarField) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(f.grid().n() as u32).to_le_bytes())?;
    w.write_all(&f.grid().box_length().to_le_bytes())?;
    for v in f.values().iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<ScalarField> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::SnapshotFormat(format!(
            "bad magic {:?}, expected ULNSE1",
            magic
        )));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let box_length = f64::from_le_bytes(b8);
    let grid = Grid::new(n, box_length)?;
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            r.read_exact(&mut b8)?;
            values[[i, j]] = f64::from_le_bytes(b8);
        }
    }
    ScalarField::new(grid, values)
}
