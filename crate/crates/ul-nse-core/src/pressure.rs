//! The pressure-gradient operator grad P(w) for w = u (x) u, its spectral
//! (torus) evaluation, and the near/far kernel splitting that mirrors the
//! whole-space convolution structure.
//!
//! The singular kernel is K_ij(x) = (|x|^2 delta_ij - 2 x_i x_j) / (2 pi |x|^4).
//! The splitting localizes K with a radial cut-off psi_R (1 inside R/4, 0
//! outside R/2): the near part acts spectrally through a multiplier obtained
//! from a 1D Bessel integral, the far part is a smooth integrable kernel
//! integrated directly in physical space.

use crate::error::{Error, Result};
use crate::fields::{ball_norm, Grid, SampledField, ScalarField, VectorField};
use crate::weights::{smoothstep, CenterGrid, EstimateReport, WeightFamily};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Evaluate the pressure kernel matrix K_ij at x != 0.
pub fn kernel_eval(x: [f64; 2]) -> Result<[[f64; 2]; 2]> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return Err(Error::KernelSingularity);
    }
    let r4 = r2 * r2;
    let c = 1.0 / (2.0 * PI * r4);
    Ok([
        [c * (r2 - 2.0 * x[0] * x[0]), c * (-2.0 * x[0] * x[1])],
        [c * (-2.0 * x[1] * x[0]), c * (r2 - 2.0 * x[1] * x[1])],
    ])
}

/// Gradient of the kernel: dK_ij/dz_k, homogeneous of degree -3.
fn kernel_gradient(z: [f64; 2]) -> [[[f64; 2]; 2]; 2] {
    let r2 = z[0] * z[0] + z[1] * z[1];
    let r4 = r2 * r2;
    let r6 = r4 * r2;
    let di = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut out = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i][j][k] = -di(i, j) * z[k] / (PI * r4)
                    - (di(i, k) * z[j] + di(j, k) * z[i]) / (PI * r4)
                    + 4.0 * z[i] * z[j] * z[k] / (PI * r6);
            }
        }
    }
    out
}

/// Symmetric 2x2 tensor field, the container for u (x) u.
#[derive(Debug, Clone)]
pub struct SymTensorField {
    grid: Grid,
    xx: ScalarField,
    xy: ScalarField,
    yy: ScalarField,
}

impl SymTensorField {
    /// Build from components; the off-diagonal pair is symmetrized.
    pub fn new(xx: ScalarField, xy: ScalarField, yx: ScalarField, yy: ScalarField) -> Result<Self> {
        let grid = *xx.grid();
        let sym = xy.add(&yx)?.scale(0.5);
        Ok(SymTensorField {
            grid,
            xx,
            xy: sym,
            yy,
        })
    }

    /// The velocity tensor u (x) u with dealiased products.
    pub fn from_velocity(u: &VectorField) -> Result<Self> {
        let u1 = u.component(0);
        let u2 = u.component(1);
        Ok(SymTensorField {
            grid: *u.grid(),
            xx: u1.multiply_dealiased(u1)?,
            xy: u1.multiply_dealiased(u2)?,
            yy: u2.multiply_dealiased(u2)?,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        SymTensorField {
            grid,
            xx: ScalarField::zeros(grid),
            xy: ScalarField::zeros(grid),
            yy: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> [f64; 3]) -> Result<Self> {
        Ok(SymTensorField {
            grid,
            xx: ScalarField::from_fn(grid, |p| f(p)[0])?,
            xy: ScalarField::from_fn(grid, |p| f(p)[1])?,
            yy: ScalarField::from_fn(grid, |p| f(p)[2])?,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarField {
        match (i, j) {
            (0, 0) => &self.xx,
            (1, 1) => &self.yy,
            _ => &self.xy,
        }
    }
}

impl SampledField for SymTensorField {
    fn sample_grid(&self) -> &Grid {
        &self.grid
    }
    /// Frobenius magnitude, with the off-diagonal counted twice.
    fn magnitude(&self, i: usize, j: usize) -> f64 {
        let a = self.xx.values()[[i, j]];
        let b = self.xy.values()[[i, j]];
        let c = self.yy.values()[[i, j]];
        (a * a + 2.0 * b * b + c * c).sqrt()
    }
}

/// The pressure potential on the torus: p_hat = sum_ij xi_i xi_j w_ij / |xi|^2
/// (zero mode dropped), so that div grad p = sum_ij d_i d_j w_ij.
pub fn pressure_potential(w: &SymTensorField) -> ScalarField {
    let grid = w.grid;
    let n = grid.n();
    let sxx = w.xx.spectrum();
    let sxy = w.xy.spectrum();
    let syy = w.yy.spectrum();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        let k1 = grid.wavenumber(i);
        for j in 0..n {
            let k2 = grid.wavenumber(j);
            let q = k1 * k1 + k2 * k2;
            if q == 0.0 {
                continue;
            }
            let num =
                sxx[[i, j]] * (k1 * k1) + sxy[[i, j]] * (2.0 * k1 * k2) + syy[[i, j]] * (k2 * k2);
            out[[i, j]] = num / q;
        }
    }
    ScalarField::from_spectrum(grid, out).expect("potential is well-formed")
}

/// Spectral evaluation of grad P(w) on the torus.
pub fn grad_p_spectral(w: &SymTensorField) -> VectorField {
    pressure_potential(w).gradient()
}

/// Splitting scale and radial cut-off profile for the kernel decomposition:
/// psi is 1 for |z| <= R/4, 0 for |z| >= R/2, smoothstep between.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub r: f64,
}

impl SplitSpec {
    pub fn new(r: f64) -> Self {
        SplitSpec { r }
    }

    /// psi_R at distance d.
    pub fn psi(&self, d: f64) -> f64 {
        smoothstep(2.0 - 4.0 * d / self.r)
    }

    fn psi_deriv(&self, d: f64) -> f64 {
        let t = 2.0 - 4.0 * d / self.r;
        if t <= 0.0 || t >= 1.0 {
            0.0
        } else {
            -(4.0 / self.r) * 6.0 * t * (1.0 - t)
        }
    }

    /// Gradient of the far-field kernel (1 - psi_R) K, indexed [i][l][j] for
    /// the j-derivative of component (i, l).
    fn tail_kernel_gradient(&self, z: [f64; 2]) -> [[[f64; 2]; 2]; 2] {
        let d = z[0].hypot(z[1]);
        if d <= self.r / 4.0 {
            return [[[0.0; 2]; 2]; 2];
        }
        let one_m = 1.0 - self.psi(d);
        let dpsi = self.psi_deriv(d);
        let k = kernel_eval(z).expect("z away from the origin");
        let dk = kernel_gradient(z);
        let mut out = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for l in 0..2 {
                for j in 0..2 {
                    out[i][l][j] = -dpsi * z[j] / d * k[i][l] + one_m * dk[i][l][j];
                }
            }
        }
        out
    }
}

/// J2 by the integral representation (1/pi) int_0^pi cos(2 tau - x sin tau)
/// d tau; trapezoid, spectrally accurate once the oscillations are resolved.
fn bessel_j2(x: f64) -> f64 {
    let m = 64 + (4.0 * x.abs()) as usize;
    let h = PI / m as f64;
    let end: f64 = 2.0 * PI - x * (PI).sin();
    let mut acc = 0.5 * (1.0 + end.cos());
    for k in 1..m {
        let tau = k as f64 * h;
        acc += (2.0 * tau - x * tau.sin()).cos();
    }
    acc * h / PI
}

/// 4-point Lagrange interpolation on a uniform table starting at 0.
fn table_interp(table: &[f64], step: f64, x: f64) -> f64 {
    let t = x / step;
    let i = (t.floor() as isize).clamp(1, table.len() as isize - 3) as usize;
    let s = t - i as f64;
    let (a, b, c, d) = (table[i - 1], table[i], table[i + 1], table[i + 2]);
    let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    a * w0 + b * w1 + c * w2 + d * w3
}

/// The radial factor of the near-field multiplier,
/// g(a) = int_0^(1/2) psi(s) J2(a s) / s ds. The full multiplier is
/// m_il(xi) = delta_il/2 + c_il g(R |xi|) with c_11 = cos 2phi = -c_22 and
/// c_12 = sin 2phi; it approaches the Riesz symbol xi_i xi_l / |xi|^2 as
/// R|xi| grows, which pins both the delta term and the angular factors.
struct NearFieldMultiplier {
    g_table: Vec<f64>,
    step: f64,
}

impl NearFieldMultiplier {
    fn build(a_max: f64) -> Self {
        let step = 0.05;
        let len = (a_max / step).ceil() as usize + 4;
        let jstep = 0.02;
        let jlen = (a_max * 0.5 / jstep).ceil() as usize + 8;
        let jtab: Vec<f64> = (0..jlen)
            .into_par_iter()
            .map(|k| bessel_j2(k as f64 * jstep))
            .collect();
        let simpson_n = 2048usize;
        let ds = 0.5 / simpson_n as f64;
        let unit_psi = |s: f64| smoothstep(2.0 - 4.0 * s);
        let g_table: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|ka| {
                let a = ka as f64 * step;
                let integrand = |s: f64| {
                    if s == 0.0 {
                        0.0
                    } else {
                        unit_psi(s) * table_interp(&jtab, jstep, a * s) / s
                    }
                };
                let mut acc = integrand(0.0) + integrand(0.5);
                for k in 1..simpson_n {
                    let wgt = if k % 2 == 1 { 4.0 } else { 2.0 };
                    acc += wgt * integrand(k as f64 * ds);
                }
                acc * ds / 3.0
            })
            .collect();
        NearFieldMultiplier { g_table, step }
    }

    fn g(&self, a: f64) -> f64 {
        table_interp(&self.g_table, self.step, a)
    }

    /// (m_11, m_12, m_22) at wavenumber (k1, k2) and scale r.
    fn eval(&self, r: f64, k1: f64, k2: f64) -> (f64, f64, f64) {
        let q = k1 * k1 + k2 * k2;
        if q == 0.0 {
            return (0.5, 0.0, 0.5);
        }
        let g = self.g(r * q.sqrt());
        let cos2 = (k1 * k1 - k2 * k2) / q;
        let sin2 = 2.0 * k1 * k2 / q;
        (0.5 + cos2 * g, sin2 * g, 0.5 - cos2 * g)
    }
}

/// Refine fields onto a `factor`-times finer grid by spectral zero padding
/// (exact trigonometric interpolation).
fn upsample(
    grid: Grid,
    fields: [&ScalarField; 3],
    factor: usize,
) -> (Grid, Array2<f64>, Array2<f64>, Array2<f64>) {
    if factor == 1 {
        return (
            grid,
            fields[0].values().clone(),
            fields[1].values().clone(),
            fields[2].values().clone(),
        );
    }
    let n = grid.n();
    let nf = n * factor;
    let fgrid = Grid::new(nf, grid.box_length()).expect("upsampled grid is valid");
    let scale = (factor * factor) as f64;
    let mut out = Vec::with_capacity(3);
    for f in fields {
        let spec = f.spectrum();
        let mut padded = Array2::zeros((nf, nf));
        for i in 0..n {
            let si = fft_wrap(i, n, nf);
            for j in 0..n {
                let sj = fft_wrap(j, n, nf);
                padded[[si, sj]] = spec[[i, j]] * scale;
            }
        }
        out.push(crate::fft::inverse(&padded));
    }
    let yy = out.pop().unwrap();
    let xy = out.pop().unwrap();
    let xx = out.pop().unwrap();
    (fgrid, xx, xy, yy)
}

/// Map a coarse-grid spectral index to the fine grid (same signed wavenumber).
fn fft_wrap(k: usize, n: usize, nf: usize) -> usize {
    if k <= n / 2 {
        k
    } else {
        nf - (n - k)
    }
}

fn embed_padded(grid: Grid, f: &ScalarField) -> (Grid, Array2<f64>) {
    let n = grid.n();
    let padded = Grid::new(2 * n, 2.0 * grid.box_length()).expect("padded grid is valid");
    let mut values = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            values[[i + n / 2, j + n / 2]] = f.values()[[i, j]];
        }
    }
    (padded, values)
}

/// The tensor must vanish within `margin` of the box boundary.
fn check_support_margin(w: &SymTensorField, margin: f64) -> Result<()> {
    let grid = w.grid;
    let half = grid.box_length() / 2.0;
    let mut outside: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for i in 0..grid.n() {
        for j in 0..grid.n() {
            let p = grid.point(i, j);
            let m = w.magnitude(i, j);
            peak = peak.max(m);
            if p[0].abs() > half - margin || p[1].abs() > half - margin {
                outside = outside.max(m);
            }
        }
    }
    if outside > 1e-12 * peak.max(1e-300) {
        return Err(Error::SupportViolation(
            outside,
            format!("margin {margin} from the boundary"),
        ));
    }
    Ok(())
}

/// grad P(w) for compactly supported w through the near/far kernel
/// splitting: the psi_R-localized singular part acts spectrally on a 2x
/// padded box, the smooth differentiated tail is integrated pointwise.
pub fn grad_p_kernel_split(w: &SymTensorField, spec: SplitSpec) -> Result<VectorField> {
    let grid = w.grid;
    check_support_margin(w, spec.r)?;
    let n = grid.n();

    // near part on the padded box
    let (pgrid, xx) = embed_padded(grid, &w.xx);
    let (_, xy) = embed_padded(grid, &w.xy);
    let (_, yy) = embed_padded(grid, &w.yy);
    let sxx = crate::fft::forward(&xx);
    let sxy = crate::fft::forward(&xy);
    let syy = crate::fft::forward(&yy);
    let np = pgrid.n();
    let k_max = (2.0f64).sqrt() * pgrid.wavenumber(np / 2 - 1).abs();
    let mult = NearFieldMultiplier::build(spec.r * k_max + 2.0);
    let mut p1 = Array2::zeros((np, np));
    let mut p2 = Array2::zeros((np, np));
    let nyq = np / 2;
    for i in 0..np {
        let k1 = pgrid.wavenumber(i);
        for j in 0..np {
            let k2 = pgrid.wavenumber(j);
            let (m11, m12, m22) = mult.eval(spec.r, k1, k2);
            let ph = sxx[[i, j]] * m11 + sxy[[i, j]] * (2.0 * m12) + syy[[i, j]] * m22;
            if i != nyq {
                p1[[i, j]] = ph * Complex64::new(0.0, k1);
            }
            if j != nyq {
                p2[[i, j]] = ph * Complex64::new(0.0, k2);
            }
        }
    }
    let near1 = crate::fft::inverse(&p1);
    let near2 = crate::fft::inverse(&p2);

    // Far part by direct quadrature over the support of w. The integrand
    // varies on the scale R/4 of the cut-off transition, so the source grid
    // is refined by trigonometric interpolation until that band carries at
    // least ~8 quadrature points.
    let factor = ((8.0 * grid.spacing() / (spec.r / 4.0)).ceil() as usize).clamp(1, 4);
    let factor = factor.next_power_of_two();
    let fine = upsample(grid, [&w.xx, &w.xy, &w.yy], factor);
    let (fgrid, fxx, fxy, fyy) = fine;
    let nf = fgrid.n();
    let mut peak: f64 = 0.0;
    for i in 0..nf {
        for j in 0..nf {
            let m2 = fxx[[i, j]].powi(2) + 2.0 * fxy[[i, j]].powi(2) + fyy[[i, j]].powi(2);
            peak = peak.max(m2);
        }
    }
    let peak = peak.sqrt();
    let mut supp = Vec::new();
    for i in 0..nf {
        for j in 0..nf {
            let m2 = fxx[[i, j]].powi(2) + 2.0 * fxy[[i, j]].powi(2) + fyy[[i, j]].powi(2);
            if m2.sqrt() > 1e-12 * peak {
                let pt = fgrid.point(i, j);
                supp.push([pt[0], pt[1], fxx[[i, j]], fxy[[i, j]], fyy[[i, j]]]);
            }
        }
    }
    let h2 = fgrid.spacing() * fgrid.spacing();
    // contracted tail kernel: with S = K:w and T_j = (dK:w)_j,
    // a_j = -psi'(d) z_j/d S + (1 - psi) T_j, where
    //   S   = tr(w)/(2 pi r^2) - Q/(pi r^4), Q = z.w.z
    //   T_j = -tr(w) z_j/(pi r^4) - 2 (w z)_j/(pi r^4) + 4 z_j Q/(pi r^6)
    let quarter = spec.r / 4.0;
    let q2 = quarter * quarter;
    let inv_pi = 1.0 / PI;
    let rows: Vec<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let y = grid.point(i, j);
                let mut a1 = 0.0;
                let mut a2 = 0.0;
                for s in &supp {
                    let z0 = y[0] - s[0];
                    let z1 = y[1] - s[1];
                    let r2 = z0 * z0 + z1 * z1;
                    if r2 <= q2 {
                        continue;
                    }
                    let (wxx, wxy, wyy) = (s[2], s[3], s[4]);
                    let tr = wxx + wyy;
                    let qf = z0 * z0 * wxx + 2.0 * z0 * z1 * wxy + z1 * z1 * wyy;
                    let inv_r2 = 1.0 / r2;
                    let inv_r4 = inv_r2 * inv_r2;
                    let wz0 = wxx * z0 + wxy * z1;
                    let wz1 = wxy * z0 + wyy * z1;
                    let t_common = (4.0 * qf * inv_r2 - tr) * inv_pi * inv_r4;
                    let t0 = z0 * t_common - 2.0 * wz0 * inv_pi * inv_r4;
                    let t1 = z1 * t_common - 2.0 * wz1 * inv_pi * inv_r4;
                    let d = r2.sqrt();
                    if d >= spec.r / 2.0 {
                        a1 += t0;
                        a2 += t1;
                    } else {
                        let one_m = 1.0 - spec.psi(d);
                        let dpsi = spec.psi_deriv(d);
                        let sker = 0.5 * tr * inv_pi * inv_r2 - qf * inv_pi * inv_r4;
                        let c = -dpsi / d * sker;
                        a1 += c * z0 + one_m * t0;
                        a2 += c * z1 + one_m * t1;
                    }
                }
                row.push((a1 * h2, a2 * h2));
            }
            row
        })
        .collect();

    let mut v1 = Array2::zeros((n, n));
    let mut v2 = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let (f1, f2) = rows[i][j];
            v1[[i, j]] = near1[[i + n / 2, j + n / 2]] + f1;
            v2[[i, j]] = near2[[i + n / 2, j + n / 2]] + f2;
        }
    }
    VectorField::new(ScalarField::new(grid, v1)?, ScalarField::new(grid, v2)?)
}

/// The subtraction constant p_{x0}: the far-field potential evaluated at the
/// window center, int (1 - psi_R(x - x0)) K_il(x - x0) w_il(x) dx.
pub fn subtraction_constant(w: &SymTensorField, spec: SplitSpec, x0: [f64; 2]) -> f64 {
    let grid = w.grid;
    let n = grid.n();
    let h2 = grid.spacing() * grid.spacing();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                let p = grid.point(i, j);
                let z = [grid.min_image(p[0] - x0[0]), grid.min_image(p[1] - x0[1])];
                let d = z[0].hypot(z[1]);
                if d <= spec.r / 4.0 {
                    continue;
                }
                let fac = 1.0 - spec.psi(d);
                if fac == 0.0 {
                    continue;
                }
                let k = kernel_eval(z).expect("z away from the origin");
                acc += fac
                    * (k[0][0] * w.xx.values()[[i, j]]
                        + 2.0 * k[0][1] * w.xy.values()[[i, j]]
                        + k[1][1] * w.yy.values()[[i, j]]);
            }
            acc
        })
        .collect();
    rows.iter().sum::<f64>() * h2
}

/// Divergence tolerance for the test-field precondition of the weighted
/// pressure bound.
pub const DIV_FREE_TOL: f64 = 1e-8;

/// Measure the weighted pressure estimate: the pairing |(grad P(w), phi v)|
/// against the theta-weighted local norm of w times the cutoff-weighted
/// L^q norm of v. Also reports the subtraction constant p_{x0}.
pub fn lemma02_bound(
    w: &SymTensorField,
    v: &VectorField,
    r: f64,
    x0: [f64; 2],
    p: f64,
    q: f64,
) -> Result<EstimateReport> {
    if !(p > 1.0) || !(q > 1.0) || (1.0 / p + 1.0 / q - 1.0).abs() > 1e-12 {
        return Err(Error::BadExponent(p));
    }
    let grid = w.grid;
    let div = v.divergence().max_abs();
    if div > DIV_FREE_TOL {
        return Err(Error::NotDivergenceFree(div, DIV_FREE_TOL));
    }

    let grad_p = grad_p_spectral(w);
    let phi = WeightFamily::cutoff(r, x0);
    let h2 = grid.spacing() * grid.spacing();

    let mut lhs = 0.0;
    let mut vq = 0.0;
    grid.for_ball(x0, 2.0 * r, |i, j, d| {
        let pv = phi.profile(d);
        let dot = grad_p.component(0).values()[[i, j]] * v.component(0).values()[[i, j]]
            + grad_p.component(1).values()[[i, j]] * v.component(1).values()[[i, j]];
        lhs += pv * dot;
        vq += pv.powf(q / 2.0) * v.magnitude_at(i, j).powf(q);
    });
    let lhs = (lhs * h2).abs();
    let v_norm = (vq * h2).powf(1.0 / q);

    let theta = WeightFamily::theta_scaled(r, x0);
    let centers = CenterGrid::coarsened(&grid, r);
    let terms: Vec<f64> = centers
        .centers
        .par_iter()
        .map(|&c| Ok(theta.eval(&grid, c) * ball_norm(w, p, r, c)?))
        .collect::<Result<_>>()?;
    let w_integral = terms.iter().sum::<f64>() * centers.cell_area;
    let rhs = w_integral * v_norm;

    let p_x0 = subtraction_constant(w, SplitSpec::new(r), x0);
    Ok(EstimateReport::new("lemma02_pressure", lhs, rhs)
        .with_param("R", r)
        .with_param("x0", format!("({:.3};{:.3})", x0[0], x0[1]))
        .with_param("p", p)
        .with_param("q", q)
        .with_param("p_x0", format!("{:.6e}", p_x0)))
}
