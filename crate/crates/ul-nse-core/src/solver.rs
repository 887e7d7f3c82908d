//! Time integration of the damped Navier-Stokes equations in vorticity form,
//!     d_t omega + (u . grad) omega + alpha omega - Lap omega = rot g,
//! with viscosity 1 and velocity recovered from omega through the stream
//! function plus a separately evolved mean.
//!
//! The scheme is an integrating-factor Heun step: the linear part
//! exp(-(|k|^2 + alpha) dt) is exact in spectral space, the transport term is
//! advanced by explicit second-order Runge-Kutta inside the factor, and every
//! quadratic product is dealiased by the 2/3 rule. The k = 0 velocity mode is
//! carried as a closed-form ODE (the torus mean is invisible to the
//! vorticity), which reproduces the linearly growing u = t g solution exactly
//! for constant forcing.

use crate::error::{Error, Result};
use crate::fields::{biot_savart, Grid, ScalarField, VectorField};
use crate::weights::{ul_norm_default, z_functional};
use ndarray::Array2;
use num_complex::Complex64;

/// Divergence tolerance on forcing and initial velocity.
pub const DIV_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Damping coefficient alpha >= 0; alpha = 0 is the classical system.
    pub alpha: f64,
    pub grid: Grid,
    /// Macro time step; sub-stepping refines it when the CFL bound demands.
    pub dt: f64,
    pub t_end: f64,
    /// Divergence-free forcing, constant in time.
    pub forcing: VectorField,
    /// Steps between diagnostic samples.
    pub diag_every: usize,
    /// Ball scale for the uniformly-local and Z diagnostics.
    pub diag_r: f64,
    /// Fixed center for the Z diagnostic.
    pub diag_center: [f64; 2],
}

impl SolverConfig {
    pub fn new(grid: Grid, alpha: f64, dt: f64, t_end: f64, forcing: VectorField) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::BadExponent(dt));
        }
        let div = forcing.divergence().max_abs();
        if div > DIV_TOL {
            return Err(Error::NotDivergenceFree(div, DIV_TOL));
        }
        Ok(SolverConfig {
            alpha,
            grid,
            dt,
            t_end,
            forcing,
            diag_every: 50,
            diag_r: (grid.box_length() / 8.0).min(4.0),
            diag_center: [0.0, 0.0],
        })
    }
}

/// Vorticity, time, mean velocity, and the cached velocity field.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub omega: ScalarField,
    pub t: f64,
    pub mean_u: [f64; 2],
    pub u: VectorField,
}

impl SolverState {
    fn assemble(omega: ScalarField, t: f64, mean_u: [f64; 2]) -> Result<Self> {
        let u = biot_savart(&omega)?.add_constant(mean_u);
        Ok(SolverState {
            omega,
            t,
            mean_u,
            u,
        })
    }
}

/// Initial state from a divergence-free velocity field.
pub fn init_state(u0: &VectorField) -> Result<SolverState> {
    let div = u0.divergence().max_abs();
    if div > DIV_TOL {
        return Err(Error::NotDivergenceFree(div, DIV_TOL));
    }
    let omega = u0.rotation().dealias();
    SolverState::assemble(omega, 0.0, u0.mean())
}

/// Initial state from a zero-mean vorticity field and a mean velocity.
pub fn init_state_from_vorticity(omega0: &ScalarField, mean_u: [f64; 2]) -> Result<SolverState> {
    let tol = crate::fields::MEAN_TOL * (1.0 + omega0.max_abs());
    if omega0.mean().abs() > tol {
        return Err(Error::NonZeroMean(omega0.mean(), tol));
    }
    SolverState::assemble(omega0.dealias(), 0.0, mean_u)
}

/// One diagnostics row of a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct DiagRow {
    pub t: f64,
    pub omega_inf: f64,
    pub u_ul_r: f64,
    pub z: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub div_res: f64,
    pub mean_u: [f64; 2],
}

/// Time series of diagnostics with strictly increasing t.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub rows: Vec<DiagRow>,
}

impl Trajectory {
    pub const CSV_HEADER: &'static str =
        "t,omega_inf,u_ulR,Z,energy,enstrophy,div_res,mean_u1,mean_u2";

    fn push(&mut self, row: DiagRow) {
        if let Some(last) = self.rows.last() {
            assert!(row.t > last.t, "trajectory time must increase");
        }
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:.9e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                r.t,
                r.omega_inf,
                r.u_ul_r,
                r.z,
                r.energy,
                r.enstrophy,
                r.div_res,
                r.mean_u[0],
                r.mean_u[1]
            ));
        }
        out
    }
}

/// Result of a run: the trajectory so far, the final state when the run
/// completed, and the error when it aborted.
#[derive(Debug)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub final_state: Option<SolverState>,
    pub error: Option<Error>,
}

struct Stepper {
    grid: Grid,
    alpha: f64,
    kx: Vec<f64>,
    dealias_cap: i64,
    rot_g_hat: Array2<Complex64>,
    mean_g: [f64; 2],
    mean_u0: [f64; 2],
    omega_hat: Array2<Complex64>,
    t: f64,
    steps_taken: usize,
    lin_cache: Option<(f64, Array2<f64>)>,
}

impl Stepper {
    fn new(cfg: &SolverConfig, s0: &SolverState) -> Self {
        let grid = cfg.grid;
        let n = grid.n();
        let kx: Vec<f64> = (0..n).map(|i| grid.wavenumber(i)).collect();
        let rot_g_hat = cfg.forcing.rotation().dealias().spectrum().clone();
        Stepper {
            grid,
            alpha: cfg.alpha,
            kx,
            dealias_cap: (n / 3) as i64,
            rot_g_hat,
            mean_g: cfg.forcing.mean(),
            mean_u0: s0.mean_u,
            omega_hat: s0.omega.dealias().spectrum().clone(),
            t: s0.t,
            steps_taken: 0,
            lin_cache: None,
        }
    }

    /// Closed-form mean velocity at time t (exact for constant forcing).
    fn mean_u(&self, t: f64) -> [f64; 2] {
        let decay = (-self.alpha * t).exp();
        let ramp = if self.alpha > 0.0 {
            (1.0 - decay) / self.alpha
        } else {
            t
        };
        [
            self.mean_u0[0] * decay + self.mean_g[0] * ramp,
            self.mean_u0[1] * decay + self.mean_g[1] * ramp,
        ]
    }

    fn velocity_fields(&self, omega_hat: &Array2<Complex64>, t: f64) -> (Array2<f64>, Array2<f64>) {
        let n = self.grid.n();
        let mut u1h = Array2::zeros((n, n));
        let mut u2h = Array2::zeros((n, n));
        for i in 0..n {
            let k1 = self.kx[i];
            for j in 0..n {
                let k2 = self.kx[j];
                let q = k1 * k1 + k2 * k2;
                if q == 0.0 {
                    continue;
                }
                let th = omega_hat[[i, j]] / q;
                u1h[[i, j]] = th * Complex64::new(0.0, k2);
                u2h[[i, j]] = th * Complex64::new(0.0, -k1);
            }
        }
        let mean = self.mean_u(t);
        let mut u1 = crate::fft::inverse(&u1h);
        let mut u2 = crate::fft::inverse(&u2h);
        u1.mapv_inplace(|v| v + mean[0]);
        u2.mapv_inplace(|v| v + mean[1]);
        (u1, u2)
    }

    /// Spectral right-hand side F = -dealias((u . grad) omega) + rot g.
    fn rhs(&self, omega_hat: &Array2<Complex64>, t: f64) -> Array2<Complex64> {
        let n = self.grid.n();
        let (u1, u2) = self.velocity_fields(omega_hat, t);
        let mut dxh = Array2::zeros((n, n));
        let mut dyh = Array2::zeros((n, n));
        let nyq = n / 2;
        for i in 0..n {
            let k1 = self.kx[i];
            for j in 0..n {
                let k2 = self.kx[j];
                if i != nyq {
                    dxh[[i, j]] = omega_hat[[i, j]] * Complex64::new(0.0, k1);
                }
                if j != nyq {
                    dyh[[i, j]] = omega_hat[[i, j]] * Complex64::new(0.0, k2);
                }
            }
        }
        let wx = crate::fft::inverse(&dxh);
        let wy = crate::fft::inverse(&dyh);
        let mut adv = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                adv[[i, j]] = -(u1[[i, j]] * wx[[i, j]] + u2[[i, j]] * wy[[i, j]]);
            }
        }
        let mut advh = crate::fft::forward(&adv);
        for i in 0..n {
            let a1 = crate::fft::signed_index(i, n).abs();
            for j in 0..n {
                let a2 = crate::fft::signed_index(j, n).abs();
                if a1.max(a2) > self.dealias_cap {
                    advh[[i, j]] = Complex64::new(0.0, 0.0);
                }
            }
        }
        // the transport term integrates to zero; keep the mean mode exact
        advh[[0, 0]] = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                advh[[i, j]] += self.rot_g_hat[[i, j]];
            }
        }
        advh
    }

    fn linear_factor(&mut self, dt: f64) -> &Array2<f64> {
        let rebuild = match &self.lin_cache {
            Some((cached_dt, _)) => *cached_dt != dt,
            None => true,
        };
        if rebuild {
            let n = self.grid.n();
            let mut e = Array2::zeros((n, n));
            for i in 0..n {
                let k1 = self.kx[i];
                for j in 0..n {
                    let k2 = self.kx[j];
                    e[[i, j]] = (-(k1 * k1 + k2 * k2 + self.alpha) * dt).exp();
                }
            }
            self.lin_cache = Some((dt, e));
        }
        &self.lin_cache.as_ref().unwrap().1
    }

    fn max_speed(&self) -> f64 {
        let (u1, u2) = self.velocity_fields(&self.omega_hat, self.t);
        let mut m: f64 = 0.0;
        for (a, b) in u1.iter().zip(u2.iter()) {
            m = m.max(a.hypot(*b));
        }
        m
    }

    /// One macro step of size dt, sub-divided to honor dt_sub <= h/(2 max|u|).
    fn step(&mut self, dt: f64) -> Result<()> {
        let umax = self.max_speed();
        if !umax.is_finite() {
            return Err(Error::SolverBlowup {
                step: self.steps_taken,
                t: self.t,
                max_u: umax,
            });
        }
        let bound = self.grid.spacing() / (2.0 * umax.max(1e-12));
        let substeps = (dt / bound).ceil().max(1.0) as usize;
        let dt_sub = dt / substeps as f64;
        for _ in 0..substeps {
            self.heun_substep(dt_sub)?;
        }
        self.steps_taken += 1;
        Ok(())
    }

    fn heun_substep(&mut self, dt: f64) -> Result<()> {
        let n = self.grid.n();
        let f0 = self.rhs(&self.omega_hat, self.t);
        self.linear_factor(dt);
        let e = &self.lin_cache.as_ref().unwrap().1;
        let mut stage = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                stage[[i, j]] = (self.omega_hat[[i, j]] + f0[[i, j]] * dt) * e[[i, j]];
            }
        }
        let f1 = self.rhs(&stage, self.t + dt);
        for i in 0..n {
            for j in 0..n {
                let predictor = (self.omega_hat[[i, j]] + f0[[i, j]] * (0.5 * dt)) * e[[i, j]];
                self.omega_hat[[i, j]] = predictor + f1[[i, j]] * (0.5 * dt);
            }
        }
        self.t += dt;
        let w00 = self.omega_hat[[0, 0]];
        if !w00.re.is_finite() || !w00.im.is_finite() {
            return Err(Error::SolverBlowup {
                step: self.steps_taken,
                t: self.t,
                max_u: f64::NAN,
            });
        }
        Ok(())
    }

    fn state(&self) -> Result<SolverState> {
        let omega = ScalarField::from_spectrum(self.grid, self.omega_hat.clone())?;
        SolverState::assemble(omega, self.t, self.mean_u(self.t))
    }
}

/// Advance a state by one macro time step.
pub fn step(s: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
    let mut stepper = Stepper::new(cfg, s);
    stepper.step(cfg.dt)?;
    stepper.state()
}

fn diagnostics(state: &SolverState, cfg: &SolverConfig) -> Result<DiagRow> {
    let u_ul_r = ul_norm_default(&state.u, 2.0, cfg.diag_r)?;
    let z = z_functional(&state.u, cfg.diag_r.max(1.0), cfg.diag_center)?;
    Ok(DiagRow {
        t: state.t,
        omega_inf: state.omega.max_abs(),
        u_ul_r,
        z,
        energy: state.u.l2_norm().powi(2),
        enstrophy: state.omega.l2_norm().powi(2),
        div_res: state.u.divergence().max_abs(),
        mean_u: state.mean_u,
    })
}

/// Integrate to t_end, recording diagnostics every `diag_every` steps and
/// calling the observer on each recorded state. On failure the trajectory
/// accumulated so far is returned alongside the error.
pub fn run_with(
    cfg: &SolverConfig,
    s0: &SolverState,
    mut observer: impl FnMut(&SolverState),
) -> RunOutcome {
    let mut trajectory = Trajectory::default();
    let mut stepper = Stepper::new(cfg, s0);

    let record = |stepper: &Stepper,
                  trajectory: &mut Trajectory,
                  observer: &mut dyn FnMut(&SolverState)|
     -> Result<()> {
        let state = stepper.state()?;
        trajectory.push(diagnostics(&state, cfg)?);
        observer(&state);
        Ok(())
    };

    if let Err(e) = record(&stepper, &mut trajectory, &mut observer) {
        return RunOutcome {
            trajectory,
            final_state: None,
            error: Some(e),
        };
    }

    let total_steps = (cfg.t_end / cfg.dt).round() as usize;
    for k in 1..=total_steps {
        if let Err(e) = stepper.step(cfg.dt) {
            return RunOutcome {
                trajectory,
                final_state: None,
                error: Some(e),
            };
        }
        if k % cfg.diag_every == 0 || k == total_steps {
            if let Err(e) = record(&stepper, &mut trajectory, &mut observer) {
                return RunOutcome {
                    trajectory,
                    final_state: None,
                    error: Some(e),
                };
            }
        }
    }
    match stepper.state() {
        Ok(final_state) => RunOutcome {
            trajectory,
            final_state: Some(final_state),
            error: None,
        },
        Err(e) => RunOutcome {
            trajectory,
            final_state: None,
            error: Some(e),
        },
    }
}

/// `run_with` without an observer.
pub fn run(cfg: &SolverConfig, s0: &SolverState) -> RunOutcome {
    run_with(cfg, s0, |_| {})
}
