//! Dyadic frequency blocks, Besov norms, Riesz operators, Helmholtz
//! recovery from divergence and rotation, and the interpolation inequalities
//! built on them.
//!
//! Block j filters the annulus |xi| ~ 2^j through psi(xi/2^j) with
//! psi(xi) = phi0(xi/2) - phi0(xi); phi0 is a radial quintic smoothstep that
//! is 1 for |xi| <= 1/2 and 0 for |xi| >= 1. The representable range is tied
//! to the grid: 2^{j_max} stays below the dealias cap and 2^{j_min} at or
//! below the lowest nonzero frequency, so the partition of unity telescopes
//! exactly on every resolved mode.

use crate::error::{Error, Result};
use crate::fields::{box_norm, Grid, ScalarField, VectorField};
use crate::weights::EstimateReport;
use ndarray::Array2;
use num_complex::Complex64;

/// Quintic smoothstep: 0 below 0, 6t^5 - 15t^4 + 10t^3 on [0,1], 1 above.
fn smootherstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

/// Dyadic block range and low-pass profile for a given grid.
#[derive(Debug, Clone, Copy)]
pub struct DyadicSpec {
    pub j_min: i32,
    pub j_max: i32,
}

impl DyadicSpec {
    /// Range representable on the grid: 2^{j_max} below the dealias cap,
    /// 2^{j_min} at the lowest nonzero frequency 2 pi / L.
    pub fn for_grid(grid: &Grid) -> Self {
        let k_low = 2.0 * std::f64::consts::PI / grid.box_length();
        let k_cap = k_low * (grid.n() as f64 / 3.0);
        DyadicSpec {
            j_min: k_low.log2().ceil() as i32,
            j_max: k_cap.log2().floor() as i32,
        }
    }

    /// Radial low-pass profile: 1 for |xi| <= 1/2, 0 for |xi| >= 1.
    pub fn phi0(&self, xi: f64) -> f64 {
        smootherstep(2.0 - 2.0 * xi.abs())
    }

    /// Annulus profile psi(xi) = phi0(xi/2) - phi0(xi), nonnegative.
    pub fn psi(&self, xi: f64) -> f64 {
        self.phi0(xi / 2.0) - self.phi0(xi)
    }

    fn check(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::DyadicRange(j, self.j_min, self.j_max));
        }
        Ok(())
    }
}

fn radial_multiplier(f: &ScalarField, m: impl Fn(f64) -> f64) -> ScalarField {
    f.apply_multiplier(|k1, k2| Complex64::new(m(k1.hypot(k2)), 0.0))
}

/// The dyadic block Delta_j f (multiplier psi(|xi|/2^j)).
pub fn dyadic_block(f: &ScalarField, j: i32, spec: &DyadicSpec) -> Result<ScalarField> {
    spec.check(j)?;
    let scale = (2.0f64).powi(j);
    Ok(radial_multiplier(f, |r| spec.psi(r / scale)))
}

/// The low-pass part S_j f (multiplier phi0(|xi|/2^j)).
pub fn lowpass_block(f: &ScalarField, j: i32, spec: &DyadicSpec) -> Result<ScalarField> {
    spec.check(j)?;
    let scale = (2.0f64).powi(j);
    Ok(radial_multiplier(f, |r| spec.phi0(r / scale)))
}

/// Besov norm over the representable block range. The homogeneous variant
/// sums 2^{sigma j} ||Delta_j f||_p over j in [j_min, j_max]; the
/// inhomogeneous one adds ||S_{j_min} f||_p as the low-frequency term.
pub fn besov_norm(
    f: &ScalarField,
    sigma: f64,
    p: f64,
    q: f64,
    homogeneous: bool,
    spec: &DyadicSpec,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::BadExponent(p));
    }
    if !(q >= 1.0) {
        return Err(Error::BadExponent(q));
    }
    let mut terms = Vec::new();
    for j in spec.j_min..=spec.j_max {
        let block = dyadic_block(f, j, spec)?;
        terms.push((2.0f64).powf(sigma * j as f64) * box_norm(&block, p)?);
    }
    let block_part = if q.is_infinite() {
        terms.iter().fold(0.0f64, |m, t| m.max(*t))
    } else {
        terms.iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    };
    if homogeneous {
        Ok(block_part)
    } else {
        let low = lowpass_block(f, spec.j_min, spec)?;
        Ok(box_norm(&low, p)? + block_part)
    }
}

/// Composition of Riesz operators R_i R_j, multiplier -xi_i xi_j / |xi|^2
/// (zero mode dropped).
pub fn riesz_compose(f: &ScalarField, i: usize, j: usize) -> ScalarField {
    f.apply_multiplier(|k1, k2| {
        let q = k1 * k1 + k2 * k2;
        if q == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let ki = if i == 0 { k1 } else { k2 };
        let kj = if j == 0 { k1 } else { k2 };
        Complex64::new(-ki * kj / q, 0.0)
    })
}

/// Recover the velocity with prescribed divergence h1 and rotation h2
/// (both zero mean): u1_hat = -i(xi1 h1 - xi2 h2)/|xi|^2,
/// u2_hat = -i(xi2 h1 + xi1 h2)/|xi|^2.
pub fn helmholtz_recover(h1: &ScalarField, h2: &ScalarField) -> Result<VectorField> {
    let grid = *h1.grid();
    let n = grid.n();
    let s1 = h1.spectrum();
    let s2 = h2.spectrum();
    let mut u1 = Array2::zeros((n, n));
    let mut u2 = Array2::zeros((n, n));
    for i in 0..n {
        let k1 = grid.wavenumber(i);
        for j in 0..n {
            let k2 = grid.wavenumber(j);
            let q = k1 * k1 + k2 * k2;
            if q == 0.0 {
                continue;
            }
            let mi = Complex64::new(0.0, -1.0 / q);
            u1[[i, j]] = mi * (s1[[i, j]] * k1 - s2[[i, j]] * k2);
            u2[[i, j]] = mi * (s1[[i, j]] * k2 + s2[[i, j]] * k1);
        }
    }
    VectorField::new(
        ScalarField::from_spectrum(grid, u1)?,
        ScalarField::from_spectrum(grid, u2)?,
    )
}

/// Which interpolation inequality to measure.
#[derive(Debug, Clone, Copy)]
pub enum InterpolationVariant {
    /// ||u||_{L3} <= C ||u||_{L2}^{5/6} (||rot u||_inf + ||div u||_inf)^{1/6}
    L3,
    /// ||u||_inf <= C ||u||_{L2}^theta (||rot u||_p + ||div u||_p)^{1-theta},
    /// theta = 1/2 - 1/(2(p-1)), for 2 < p < infinity.
    LinfP(f64),
}

/// Measure the compact-support interpolation inequality on a field that
/// vanishes outside the 2R-ball around x0.
pub fn interpolation_check(
    u: &VectorField,
    r: f64,
    x0: [f64; 2],
    variant: InterpolationVariant,
) -> Result<EstimateReport> {
    let grid = *u.grid();
    // support check
    let mut outside: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for i in 0..grid.n() {
        for j in 0..grid.n() {
            let m = u.magnitude_at(i, j);
            peak = peak.max(m);
            if grid.distance(grid.point(i, j), x0) > 2.0 * r {
                outside = outside.max(m);
            }
        }
    }
    if outside > 1e-10 * peak.max(1e-300) {
        return Err(Error::SupportViolation(
            outside,
            format!("outside the 2R-ball, R = {r}"),
        ));
    }

    let rot = u.rotation();
    let div = u.divergence();
    let l2 = u.l2_norm();
    match variant {
        InterpolationVariant::L3 => {
            let lhs = box_norm(u, 3.0)?;
            let rhs = l2.powf(5.0 / 6.0)
                * (rot.max_abs() + div.max_abs()).powf(1.0 / 6.0);
            Ok(EstimateReport::new("interpolation_l3", lhs, rhs)
                .with_param("R", r)
                .with_param("x0", format!("({:.3};{:.3})", x0[0], x0[1])))
        }
        InterpolationVariant::LinfP(p) => {
            if !(p > 2.0) || p.is_infinite() {
                return Err(Error::BadExponent(p));
            }
            let theta = 0.5 - 1.0 / (2.0 * (p - 1.0));
            let lhs = u.max_abs();
            let rhs = l2.powf(theta)
                * (box_norm(&rot, p)? + box_norm(&div, p)?).powf(1.0 - theta);
            Ok(EstimateReport::new("interpolation_linf", lhs, rhs)
                .with_param("R", r)
                .with_param("p", p)
                .with_param("theta", format!("{theta:.4}")))
        }
    }
}

/// Bernstein ratios for block j: derivative control on Delta_j and the
/// p-to-q norm comparison on S_j. Degenerate (zero) denominators yield a
/// report marked skipped=1 with zero ratios.
pub fn bernstein_check(
    f: &ScalarField,
    j: i32,
    p: f64,
    q: f64,
    spec: &DyadicSpec,
) -> Result<EstimateReport> {
    if !(1.0 <= p && p <= q) {
        return Err(Error::BadExponent(p));
    }
    let block = dyadic_block(f, j, spec)?;
    let grad = block.gradient();
    let two_j = (2.0f64).powi(j);
    let num1 = box_norm(&block, p)?;
    let den1 = box_norm(&grad, p)? / two_j;

    let low = lowpass_block(f, j, spec)?;
    let num2 = box_norm(&low, q)?;
    let den2 = two_j.powf(2.0 / p - 2.0 / q) * box_norm(&low, p)?;

    if den1 == 0.0 || den2 == 0.0 {
        return Ok(EstimateReport::new("bernstein", 0.0, 0.0)
            .with_param("j", j)
            .with_param("skipped", 1));
    }
    let ratio1 = num1 / den1;
    let ratio2 = num2 / den2;
    Ok(
        EstimateReport::new("bernstein", ratio1.max(ratio2), 1.0)
            .with_param("j", j)
            .with_param("p", p)
            .with_param("q", q)
            .with_param("ratio_grad", format!("{ratio1:.6}"))
            .with_param("ratio_pq", format!("{ratio2:.6}")),
    )
}
