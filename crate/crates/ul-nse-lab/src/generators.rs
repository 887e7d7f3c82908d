//! Named initial-data and forcing generators. All randomness flows through
//! a seeded ChaCha stream so runs are reproducible bit for bit.

use crate::config::{ForcingConfig, InitialConfig};
use anyhow::{bail, Context, Result};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use ul_nse_core::solver::{init_state, init_state_from_vorticity, SolverState};
use ul_nse_core::{Grid, ScalarField, VectorField};

fn white_noise(grid: Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    let values = Array2::from_shape_fn((grid.n(), grid.n()), |_| rng.gen_range(-1.0..1.0));
    ScalarField::new(grid, values).expect("noise is finite")
}

/// Band-passed stream function: white noise filtered to 0 < |k| <= cap
/// modes, with an optional spectral slope.
fn filtered_stream(grid: Grid, rng: &mut ChaCha8Rng, k_cap: usize, slope: f64) -> ScalarField {
    let k_low = 2.0 * PI / grid.box_length();
    let cap = (k_cap as f64 * k_low).min(k_low * grid.n() as f64 / 3.0);
    white_noise(grid, rng).apply_multiplier(|k1, k2| {
        let k = k1.hypot(k2);
        if k > 0.0 && k <= cap {
            Complex64::new(k.powf(slope), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Divergence-free velocity with max |u| normalized to `amp`.
fn stream_velocity(psi: &ScalarField, amp: f64) -> VectorField {
    let u = psi.perp_gradient();
    let peak = u.max_abs();
    if peak == 0.0 {
        u
    } else {
        u.scale(amp / peak)
    }
}

/// Build the initial solver state for a named generator.
pub fn initial_state(grid: Grid, init: &InitialConfig, seed: u64) -> Result<SolverState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = init.amplitude;
    let l = grid.box_length();
    let state = match init.kind.as_str() {
        "zero" => init_state(&VectorField::zeros(grid))?,
        "taylor_green" => {
            // wavelength pinned near 2 pi regardless of the box size
            let m = (l / (2.0 * PI)).round().max(1.0);
            let q = 2.0 * PI * m / l;
            let u = VectorField::from_fn(grid, |p| {
                [
                    amp * (q * p[0]).sin() * (q * p[1]).cos(),
                    -amp * (q * p[0]).cos() * (q * p[1]).sin(),
                ]
            })?;
            init_state(&u)?
        }
        "random_band" => {
            let psi = filtered_stream(grid, &mut rng, init.k_cap.max(1), 0.0);
            init_state(&stream_velocity(&psi, amp))?
        }
        "rough_highfreq" => {
            // velocity spectrum ~ 1/k up to the dealias cap
            let cap = grid.n() / 3;
            let psi = filtered_stream(grid, &mut rng, cap, -2.0);
            init_state(&stream_velocity(&psi, amp))?
        }
        "random_bump" => {
            // Gaussian stream bump: compactly supported to machine precision
            let sigma = l / 16.0;
            let cx = rng.gen_range(-l / 16.0..l / 16.0);
            let cy = rng.gen_range(-l / 16.0..l / 16.0);
            let phase = rng.gen_range(0.0..2.0 * PI);
            let psi = ScalarField::from_fn(grid, |p| {
                let r2 = (p[0] - cx).powi(2) + (p[1] - cy).powi(2);
                (-r2 / (2.0 * sigma * sigma)).exp() * (2.0 * (p[0] - cx) / sigma + phase).cos()
            })?;
            init_state(&stream_velocity(&psi, amp))?
        }
        "sinusoidal_nondecaying" => {
            let m = init.k_cap.max(1) as f64;
            let u = VectorField::from_fn(grid, |p| {
                [
                    amp * (2.0 * PI * m * p[1] / l).sin(),
                    amp * (2.0 * PI * m * p[0] / l).sin(),
                ]
            })?;
            init_state(&u)?
        }
        "snapshot" => {
            let file = std::fs::File::open(&init.path)
                .with_context(|| format!("snapshot {}", init.path))?;
            let omega = ul_nse_core::read_snapshot(std::io::BufReader::new(file))?;
            if *omega.grid() != grid {
                bail!(
                    "snapshot grid {}x{} (L = {}) does not match configured grid",
                    omega.grid().n(),
                    omega.grid().n(),
                    omega.grid().box_length()
                );
            }
            init_state_from_vorticity(&omega, [0.0, 0.0])?
        }
        other => bail!("unknown initial data generator {other:?}"),
    };
    Ok(state)
}

/// Build the (divergence-free) forcing field.
pub fn forcing_field(grid: Grid, forcing: &ForcingConfig, seed: u64) -> Result<VectorField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5eed));
    let l = grid.box_length();
    let constant = [forcing.gx, forcing.gy];
    let osc = match forcing.kind.as_str() {
        "zero" | "constant" => VectorField::zeros(grid),
        "sinusoidal" => {
            // Kolmogorov-style shear forcing, divergence free with bounded rot
            let q = 2.0 * PI * forcing.k.max(1) as f64 / l;
            VectorField::from_fn(grid, |p| [forcing.amplitude * (q * p[1]).sin(), 0.0])?
        }
        "random_smooth" => {
            let psi = filtered_stream(grid, &mut rng, forcing.k.max(1), 0.0);
            stream_velocity(&psi, forcing.amplitude)
        }
        other => bail!("unknown forcing kind {other:?}"),
    };
    Ok(osc.add_constant(constant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ForcingConfig, InitialConfig};

    fn grid() -> Grid {
        Grid::new(64, 16.0 * PI).unwrap()
    }

    #[test]
    fn generators_produce_divergence_free_states() {
        for kind in [
            "zero",
            "taylor_green",
            "random_band",
            "rough_highfreq",
            "random_bump",
            "sinusoidal_nondecaying",
        ] {
            let init = InitialConfig {
                kind: kind.into(),
                ..Default::default()
            };
            let s = initial_state(grid(), &init, 7).unwrap();
            assert!(
                s.u.divergence().max_abs() < 1e-8,
                "{kind}: div {}",
                s.u.divergence().max_abs()
            );
        }
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let init = InitialConfig {
            kind: "random_band".into(),
            ..Default::default()
        };
        let a = initial_state(grid(), &init, 42).unwrap();
        let b = initial_state(grid(), &init, 42).unwrap();
        assert_eq!(a.omega.values(), b.omega.values());
        let c = initial_state(grid(), &init, 43).unwrap();
        assert!(c.omega.sub(&a.omega).unwrap().max_abs() > 0.0);
    }

    #[test]
    fn forcing_divergence_free_with_bounded_rot() {
        for kind in ["zero", "constant", "sinusoidal", "random_smooth"] {
            let f = ForcingConfig {
                kind: kind.into(),
                gx: 0.1,
                gy: -0.05,
                amplitude: 0.2,
                k: 3,
            };
            let g = forcing_field(grid(), &f, 11).unwrap();
            assert!(g.divergence().max_abs() < 1e-8, "{kind}");
            assert!(g.rotation().max_abs().is_finite());
        }
        // constant forcing has zero rotation
        let f = ForcingConfig {
            kind: "constant".into(),
            gx: 0.3,
            gy: 0.2,
            amplitude: 0.0,
            k: 1,
        };
        let g = forcing_field(grid(), &f, 1).unwrap();
        assert!(g.rotation().max_abs() < 1e-12);
    }
}
