//! Time integration of the coupled Navier-Stokes/Allen-Cahn system on a 2D
//! grid with energy diagnostics.
//!
//! Two discretizations sit behind the same state type:
//!
//! * a periodic Fourier-spectral solver (collocated, dealiased quadratic
//!   terms, exact Leray projection) for convergence studies, and
//! * a bounded-domain MAC solver (staggered velocities, cell-centered order
//!   parameter and pressure) with `(v, c) = (0, -1)` wall conditions.
//!
//! Both use the same first-order splitting: the order parameter advances with
//! an implicit Laplacian and a stabilized explicit potential term, then the
//! momentum equation advances semi-implicitly (constant-coefficient implicit
//! viscosity, explicit variable-viscosity correction, explicit convection and
//! capillary force) followed by a pressure projection to discrete
//! divergence-free.

use crate::field::{BoundaryTag, Grid2, ScalarField2D};
use crate::geometry::Interface;
use crate::num::fourier::{wavenumber, Fft2};
use crate::profile::DoubleWell;
use ndarray::Array2;
use rustfft::num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("time step {dt:.3e} rejected; suggested stable step {suggested:.3e}")]
    StepRejected { dt: f64, suggested: f64 },
    #[error("linear solver failed to converge: {0}")]
    NonConvergence(String),
    #[error("no zero crossing of the order parameter")]
    NoCrossing,
    #[error("zero level set has {0} components; expected a single closed curve")]
    MultipleComponents(usize),
}

/// Which algebraic form of the capillary force to assemble. The two differ by
/// a pure gradient and must agree after Leray projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapillaryForm {
    /// `-eps div(grad c (x) grad c)`.
    Tensor,
    /// `-eps (lap c) grad c`.
    Laplace,
}

#[derive(Clone)]
pub struct ModelParams {
    pub epsilon: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub well: Arc<dyn DoubleWell>,
    /// Time step; `<= 0` selects the stability-based default.
    pub dt: f64,
    /// Evolve the velocity; otherwise pure Allen-Cahn dynamics.
    pub coupled: bool,
    pub capillary: CapillaryForm,
}

impl std::fmt::Debug for ModelParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelParams")
            .field("epsilon", &self.epsilon)
            .field("nu_plus", &self.nu_plus)
            .field("nu_minus", &self.nu_minus)
            .field("dt", &self.dt)
            .field("coupled", &self.coupled)
            .field("capillary", &self.capillary)
            .finish()
    }
}

impl ModelParams {
    pub fn standard(epsilon: f64) -> Self {
        Self {
            epsilon,
            nu_plus: 1.0,
            nu_minus: 1.0,
            well: Arc::new(crate::profile::QuarticWell),
            dt: 0.0,
            coupled: true,
            capillary: CapillaryForm::Tensor,
        }
    }

    /// Smooth monotone viscosity blend with `nu(1) = nu_plus`,
    /// `nu(-1) = nu_minus`, saturating outside `[-1, 1]` so transient
    /// overshoots cannot produce nonphysical values.
    pub fn viscosity(&self, c: f64) -> f64 {
        let t = ((1.0 + c) * 0.5).clamp(0.0, 1.0);
        let s = t * t * (3.0 - 2.0 * t);
        self.nu_minus + (self.nu_plus - self.nu_minus) * s
    }

    pub fn nu_max(&self) -> f64 {
        self.nu_plus.max(self.nu_minus)
    }

    /// Stabilization constant: an upper bound for `|f''|` over the clamped
    /// range of the order parameter.
    pub fn stabilization(&self) -> f64 {
        let mut s = 0.0_f64;
        let mut c = -1.5;
        while c <= 1.5 {
            s = s.max(self.well.d2f(c).abs());
            c += 0.01;
        }
        s
    }
}

/// Coupled solver state. In the spectral mode all fields are collocated
/// (`nx x ny`); in the MAC mode `u` lives on x-faces (`(nx+1) x ny`) and `v`
/// on y-faces (`nx x (ny+1)`).
#[derive(Debug, Clone)]
pub struct SimState {
    pub c: Array2<f64>,
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub p: Array2<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolverStats {
    pub steps: usize,
    pub clamp_events: usize,
    pub last_div_norm: f64,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub interfacial: f64,
    pub total: f64,
    pub dissipation_rate: f64,
}

// =============================== spectral mode ===============================

pub struct SpectralSolver {
    pub grid: Grid2,
    pub params: ModelParams,
    pub state: SimState,
    pub stats: SolverStats,
    plan: Fft2,
    pad_plan: Fft2,
    kx: Vec<f64>,
    ky: Vec<f64>,
}

impl SpectralSolver {
    pub fn new(grid: Grid2, params: ModelParams, c0: ScalarField2D) -> Self {
        assert_eq!(grid.offset, 0.0, "spectral mode uses the collocated layout");
        let (nx, ny) = (grid.nx, grid.ny);
        let plan = Fft2::new(nx, ny);
        let pad_plan = Fft2::new(3 * nx / 2, 3 * ny / 2);
        let kx = (0..nx)
            .map(|i| wavenumber(i, nx) as f64 * 2.0 * std::f64::consts::PI / grid.lx)
            .collect();
        let ky = (0..ny)
            .map(|j| wavenumber(j, ny) as f64 * 2.0 * std::f64::consts::PI / grid.ly)
            .collect();
        let state = SimState {
            c: c0.data,
            u: Array2::zeros((nx, ny)),
            v: Array2::zeros((nx, ny)),
            p: Array2::zeros((nx, ny)),
            t: 0.0,
        };
        Self {
            grid,
            params,
            state,
            stats: SolverStats::default(),
            plan,
            pad_plan,
            kx,
            ky,
        }
    }

    fn hat(&self, data: &Array2<f64>) -> Vec<Complex64> {
        self.plan.forward(data.as_slice().unwrap())
    }

    /// Derivative multiplier in x with the Nyquist bin zeroed (a real signal
    /// has no consistent odd-derivative content there).
    #[inline]
    fn ikx(&self, i: usize) -> Complex64 {
        if self.grid.nx % 2 == 0 && i == self.grid.nx / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, self.kx[i])
        }
    }

    #[inline]
    fn iky(&self, j: usize) -> Complex64 {
        if self.grid.ny % 2 == 0 && j == self.grid.ny / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, self.ky[j])
        }
    }

    fn real(&self, hat: Vec<Complex64>) -> Array2<f64> {
        Array2::from_shape_vec((self.grid.nx, self.grid.ny), self.plan.inverse_real(hat)).unwrap()
    }

    fn grad_hat(&self, hat: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut gx = vec![Complex64::new(0.0, 0.0); nx * ny];
        let mut gy = gx.clone();
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                gx[idx] = self.ikx(i) * hat[idx];
                gy[idx] = self.iky(j) * hat[idx];
            }
        }
        (gx, gy)
    }

    fn lap_hat(&self, hat: &[Complex64]) -> Vec<Complex64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut out = vec![Complex64::new(0.0, 0.0); nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                out[idx] = -(self.kx[i] * self.kx[i] + self.ky[j] * self.ky[j]) * hat[idx];
            }
        }
        out
    }

    /// Dealiased pointwise product of two spectra (3/2 zero padding), as a
    /// spectrum on the base grid. Exact Galerkin truncation for quadratic
    /// nonlinearities.
    fn mul_dealiased(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let (mx, my) = (self.pad_plan.nx, self.pad_plan.ny);
        // The shared +/-Nyquist bin is ambiguous under differentiation and is
        // excluded from products entirely (standard dealiasing hygiene).
        let nyq_x = |i: usize| nx % 2 == 0 && i == nx / 2;
        let nyq_y = |j: usize| ny % 2 == 0 && j == ny / 2;
        let pad = |hat: &[Complex64]| -> Vec<Complex64> {
            let mut out = vec![Complex64::new(0.0, 0.0); mx * my];
            for i in 0..nx {
                if nyq_x(i) {
                    continue;
                }
                let ip = pad_index(i, nx, mx);
                for j in 0..ny {
                    if nyq_y(j) {
                        continue;
                    }
                    let jp = pad_index(j, ny, my);
                    out[ip * my + jp] = hat[i * ny + j];
                }
            }
            out
        };
        let mut pa = pad(a);
        let mut pb = pad(b);
        self.pad_plan.inverse_inplace(&mut pa);
        self.pad_plan.inverse_inplace(&mut pb);
        let mut prod: Vec<Complex64> = pa
            .iter()
            .zip(&pb)
            .map(|(x, y)| Complex64::new(x.re * y.re, 0.0))
            .collect();
        self.pad_plan.forward_inplace(&mut prod);
        let scale = (nx * ny) as f64 / (mx * my) as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); nx * ny];
        for i in 0..nx {
            if nyq_x(i) {
                continue;
            }
            let ip = pad_index(i, nx, mx);
            for j in 0..ny {
                if nyq_y(j) {
                    continue;
                }
                let jp = pad_index(j, ny, my);
                out[i * ny + j] = prod[ip * my + jp] * scale;
            }
        }
        out
    }

    /// Capillary force spectrum for the requested form. Quadratic products
    /// are fully dealiased so the two forms differ by an exact gradient.
    fn capillary_hat(
        &self,
        c_hat: &[Complex64],
        form: CapillaryForm,
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let eps = self.params.epsilon;
        let (gx, gy) = self.grad_hat(c_hat);
        match form {
            CapillaryForm::Tensor => {
                let t11 = self.mul_dealiased(&gx, &gx);
                let t12 = self.mul_dealiased(&gx, &gy);
                let t22 = self.mul_dealiased(&gy, &gy);
                let (nx, ny) = (self.grid.nx, self.grid.ny);
                let mut fx = vec![Complex64::new(0.0, 0.0); nx * ny];
                let mut fy = fx.clone();
                for i in 0..nx {
                    for j in 0..ny {
                        let idx = i * ny + j;
                        let ikx = self.ikx(i);
                        let iky = self.iky(j);
                        fx[idx] = -eps * (ikx * t11[idx] + iky * t12[idx]);
                        fy[idx] = -eps * (ikx * t12[idx] + iky * t22[idx]);
                    }
                }
                (fx, fy)
            }
            CapillaryForm::Laplace => {
                // Laplacian as the divergence of the (Nyquist-consistent)
                // gradient, so the two capillary forms differ by an exact
                // discrete gradient.
                let (nx, ny) = (self.grid.nx, self.grid.ny);
                let mut lc = vec![Complex64::new(0.0, 0.0); nx * ny];
                for i in 0..nx {
                    for j in 0..ny {
                        let idx = i * ny + j;
                        lc[idx] = self.ikx(i) * gx[idx] + self.iky(j) * gy[idx];
                    }
                }
                let fx = self.mul_dealiased(&lc, &gx);
                let fy = self.mul_dealiased(&lc, &gy);
                (
                    fx.into_iter().map(|z| -eps * z).collect(),
                    fy.into_iter().map(|z| -eps * z).collect(),
                )
            }
        }
    }

    /// Skew-symmetric convection `1/2 [(v . grad) w + div(v w)]`, dealiased;
    /// energy-neutral under the discrete inner product.
    fn convection_hat(
        &self,
        u_hat: &[Complex64],
        v_hat: &[Complex64],
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let n = nx * ny;
        let (ux, uy) = self.grad_hat(u_hat);
        let (vx, vy) = self.grad_hat(v_hat);
        let a_u = add_c(
            &self.mul_dealiased(u_hat, &ux),
            &self.mul_dealiased(v_hat, &uy),
        );
        let a_v = add_c(
            &self.mul_dealiased(u_hat, &vx),
            &self.mul_dealiased(v_hat, &vy),
        );
        let uu = self.mul_dealiased(u_hat, u_hat);
        let uv = self.mul_dealiased(u_hat, v_hat);
        let vv = self.mul_dealiased(v_hat, v_hat);
        let mut d_u = vec![Complex64::new(0.0, 0.0); n];
        let mut d_v = d_u.clone();
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                let ikx = self.ikx(i);
                let iky = self.iky(j);
                d_u[idx] = ikx * uu[idx] + iky * uv[idx];
                d_v[idx] = ikx * uv[idx] + iky * vv[idx];
            }
        }
        let cx: Vec<Complex64> = (0..n).map(|k| 0.5 * (a_u[k] + d_u[k])).collect();
        let cy: Vec<Complex64> = (0..n).map(|k| 0.5 * (a_v[k] + d_v[k])).collect();
        (cx, cy)
    }

    /// Variable-viscosity correction `div(2 (nu(c) - nu_max) D v)`; added to
    /// the implicit `nu_max lap v` this reproduces `div(2 nu D v)` on the
    /// discrete divergence-free subspace.
    fn viscous_correction_hat(
        &mut self,
        c: &Array2<f64>,
        u_hat: &[Complex64],
        v_hat: &[Complex64],
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let n = nx * ny;
        let nu_hat_field: Vec<Complex64> = {
            let mut clamp_events = 0usize;
            let vals: Vec<f64> = c
                .iter()
                .map(|&cc| {
                    if cc.abs() > 1.5 {
                        clamp_events += 1;
                    }
                    self.params.viscosity(cc) - self.params.nu_max()
                })
                .collect();
            self.stats.clamp_events += clamp_events;
            self.plan.forward(&vals)
        };
        let (ux, uy) = self.grad_hat(u_hat);
        let (vx, vy) = self.grad_hat(v_hat);
        let d11: Vec<Complex64> = ux.iter().map(|z| 2.0 * z).collect();
        let d12: Vec<Complex64> = uy.iter().zip(&vx).map(|(a, b)| a + b).collect();
        let d22: Vec<Complex64> = vy.iter().map(|z| 2.0 * z).collect();
        let s11 = self.mul_dealiased(&nu_hat_field, &d11);
        let s12 = self.mul_dealiased(&nu_hat_field, &d12);
        let s22 = self.mul_dealiased(&nu_hat_field, &d22);
        let mut fx = vec![Complex64::new(0.0, 0.0); n];
        let mut fy = fx.clone();
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                let ikx = self.ikx(i);
                let iky = self.iky(j);
                fx[idx] = ikx * s11[idx] + iky * s12[idx];
                fy[idx] = ikx * s12[idx] + iky * s22[idx];
            }
        }
        (fx, fy)
    }

    /// Stability-based default step: the epsilon-scaled relaxation limit and
    /// the advective limit, with safety 0.4.
    pub fn auto_dt(&self) -> f64 {
        let eps = self.params.epsilon;
        let h = self.grid.hx().min(self.grid.hy());
        let vmax = self
            .state
            .u
            .iter()
            .zip(self.state.v.iter())
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0_f64, f64::max);
        let adv = if vmax > 0.0 { h / vmax } else { f64::INFINITY };
        0.4 * (eps * eps).min(adv)
    }

    pub fn step(&mut self) -> Result<(), SolverError> {
        let dt = if self.params.dt > 0.0 {
            self.params.dt
        } else {
            self.auto_dt()
        };
        let suggested = self.auto_dt();
        if dt > 4.0 * suggested {
            return Err(SolverError::StepRejected { dt, suggested });
        }
        let eps = self.params.epsilon;
        let s_stab = self.params.stabilization();
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let n = nx * ny;

        // ---- Allen-Cahn update ----
        let c_hat = self.hat(&self.state.c);
        let mut rhs_hat = {
            let conv = if self.params.coupled {
                let (gx, gy) = self.grad_hat(&c_hat);
                let u_hat = self.hat(&self.state.u);
                let v_hat = self.hat(&self.state.v);
                add_c(
                    &self.mul_dealiased(&u_hat, &gx),
                    &self.mul_dealiased(&v_hat, &gy),
                )
            } else {
                vec![Complex64::new(0.0, 0.0); n]
            };
            let fp: Vec<f64> = self
                .state
                .c
                .iter()
                .map(|&cc| self.params.well.df(cc))
                .collect();
            let fp_hat = self.plan.forward(&fp);
            (0..n)
                .map(|k| {
                    (1.0 + dt * s_stab / (eps * eps)) * c_hat[k]
                        - dt * (fp_hat[k] / (eps * eps) + conv[k])
                })
                .collect::<Vec<_>>()
        };
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                let k2 = self.kx[i] * self.kx[i] + self.ky[j] * self.ky[j];
                rhs_hat[idx] /= Complex64::new(1.0 + dt * s_stab / (eps * eps) + dt * k2, 0.0);
            }
        }
        let c_new_hat = rhs_hat;
        let c_new = self.real(c_new_hat.clone());

        // ---- momentum update ----
        if self.params.coupled {
            let u_hat = self.hat(&self.state.u);
            let v_hat = self.hat(&self.state.v);
            let (conv_x, conv_y) = self.convection_hat(&u_hat, &v_hat);
            let (visc_x, visc_y) = self.viscous_correction_hat(&c_new, &u_hat, &v_hat);
            let (cap_x, cap_y) = self.capillary_hat(&c_new_hat, self.params.capillary);
            let nu_hat = self.params.nu_max();
            let mut star_x = vec![Complex64::new(0.0, 0.0); n];
            let mut star_y = star_x.clone();
            for i in 0..nx {
                for j in 0..ny {
                    let idx = i * ny + j;
                    let k2 = self.kx[i] * self.kx[i] + self.ky[j] * self.ky[j];
                    let denom = Complex64::new(1.0 + dt * nu_hat * k2, 0.0);
                    star_x[idx] =
                        (u_hat[idx] + dt * (-conv_x[idx] + visc_x[idx] + cap_x[idx])) / denom;
                    star_y[idx] =
                        (v_hat[idx] + dt * (-conv_y[idx] + visc_y[idx] + cap_y[idx])) / denom;
                }
            }
            // Leray projection and pressure recovery: v_new = v* - dt grad p.
            let mut p_hat = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..nx {
                for j in 0..ny {
                    let idx = i * ny + j;
                    let k2 = self.kx[i] * self.kx[i] + self.ky[j] * self.ky[j];
                    if k2 == 0.0 {
                        continue;
                    }
                    let div = self.ikx(i) * star_x[idx] + self.iky(j) * star_y[idx];
                    // v_new = v* - dt grad p with div v_new = 0:
                    // p_hat = -div_hat / (k^2 dt)
                    let phat = -div / (k2 * dt);
                    p_hat[idx] = phat;
                    star_x[idx] -= dt * self.ikx(i) * phat;
                    star_y[idx] -= dt * self.iky(j) * phat;
                }
            }
            self.state.u = self.real(star_x);
            self.state.v = self.real(star_y);
            self.state.p = self.real(p_hat);
        }

        self.state.c = c_new;
        self.state.t += dt;
        self.stats.steps += 1;
        self.stats.last_div_norm = self.divergence_max();
        Ok(())
    }

    pub fn divergence_max(&self) -> f64 {
        let u_hat = self.hat(&self.state.u);
        let v_hat = self.hat(&self.state.v);
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut div_hat = vec![Complex64::new(0.0, 0.0); nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                div_hat[idx] = self.ikx(i) * u_hat[idx] + self.iky(j) * v_hat[idx];
            }
        }
        self.real(div_hat)
            .iter()
            .fold(0.0_f64, |m, &x| m.max(x.abs()))
    }

    /// Chemical potential `mu = -eps lap c + f'(c)/eps` with the spectral
    /// Laplacian (the same operator the stepper uses).
    pub fn chemical_potential(&self) -> ScalarField2D {
        let c_hat = self.hat(&self.state.c);
        let lc = self.real(self.lap_hat(&c_hat));
        let eps = self.params.epsilon;
        let mut out = ScalarField2D::zeros(self.grid, BoundaryTag::Periodic);
        for ((i, j), val) in out.data.indexed_iter_mut() {
            *val = -eps * lc[(i, j)] + self.params.well.df(self.state.c[(i, j)]) / eps;
        }
        out
    }

    pub fn energy(&self) -> EnergyReport {
        let eps = self.params.epsilon;
        let area = self.grid.cell_area();
        let c_hat = self.hat(&self.state.c);
        let (gx_h, gy_h) = self.grad_hat(&c_hat);
        let gx = self.real(gx_h);
        let gy = self.real(gy_h);
        let mu = self.chemical_potential();

        let u_hat = self.hat(&self.state.u);
        let v_hat = self.hat(&self.state.v);
        let (ux_h, uy_h) = self.grad_hat(&u_hat);
        let (vx_h, vy_h) = self.grad_hat(&v_hat);
        let ux = self.real(ux_h);
        let uy = self.real(uy_h);
        let vx = self.real(vx_h);
        let vy = self.real(vy_h);

        let mut kin = 0.0;
        let mut int = 0.0;
        let mut diss = 0.0;
        for i in 0..self.grid.nx {
            for j in 0..self.grid.ny {
                let uu = self.state.u[(i, j)];
                let vv = self.state.v[(i, j)];
                kin += 0.5 * (uu * uu + vv * vv);
                let cc = self.state.c[(i, j)];
                int += 0.5 * eps * (gx[(i, j)].powi(2) + gy[(i, j)].powi(2))
                    + self.params.well.f(cc) / eps;
                let d11 = ux[(i, j)];
                let d12 = 0.5 * (uy[(i, j)] + vx[(i, j)]);
                let d22 = vy[(i, j)];
                let dnorm2 = d11 * d11 + 2.0 * d12 * d12 + d22 * d22;
                diss += 2.0 * self.params.viscosity(cc) * dnorm2 + mu.data[(i, j)].powi(2) / eps;
            }
        }
        EnergyReport {
            kinetic: kin * area,
            interfacial: int * area,
            total: (kin + int) * area,
            dissipation_rate: diss * area,
        }
    }

    /// Relative Leray-projected distance between the two capillary forms.
    pub fn capillary_equivalence_check(&self) -> f64 {
        let c_hat = self.hat(&self.state.c);
        let (ax, ay) = self.capillary_hat(&c_hat, CapillaryForm::Tensor);
        let (bx, by) = self.capillary_hat(&c_hat, CapillaryForm::Laplace);
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                let dx = ax[idx] - bx[idx];
                let dy = ay[idx] - by[idx];
                let kxe = self.ikx(i).im;
                let kye = self.iky(j).im;
                let k2 = kxe * kxe + kye * kye;
                let (px, py) = if k2 == 0.0 {
                    (dx, dy)
                } else {
                    let kd = (kxe * dx + kye * dy) / k2;
                    (dx - kxe * kd, dy - kye * kd)
                };
                num += px.norm_sqr() + py.norm_sqr();
                den += ax[idx].norm_sqr() + ay[idx].norm_sqr();
            }
        }
        (num / den.max(1e-300)).sqrt()
    }

    pub fn scalar_field(&self) -> ScalarField2D {
        ScalarField2D {
            grid: self.grid,
            data: self.state.c.clone(),
            bc: BoundaryTag::Periodic,
        }
    }
}

fn pad_index(i: usize, n: usize, m: usize) -> usize {
    let k = wavenumber(i, n);
    if k >= 0 {
        k as usize
    } else {
        (m as i64 + k) as usize
    }
}

fn add_c(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

// ================================= MAC mode =================================

/// Bounded-domain staggered-grid solver with `(v, c)|_wall = (0, -1)`.
pub struct MacSolver {
    pub grid: Grid2,
    pub params: ModelParams,
    pub state: SimState,
    pub stats: SolverStats,
}

impl MacSolver {
    pub fn new(grid: Grid2, params: ModelParams, c0: ScalarField2D) -> Self {
        assert_eq!(grid.offset, 0.5, "MAC mode uses the cell-centered layout");
        let (nx, ny) = (grid.nx, grid.ny);
        let state = SimState {
            c: c0.data,
            u: Array2::zeros((nx + 1, ny)),
            v: Array2::zeros((nx, ny + 1)),
            p: Array2::zeros((nx, ny)),
            t: 0.0,
        };
        Self {
            grid,
            params,
            state,
            stats: SolverStats::default(),
        }
    }

    #[inline]
    fn cwall(&self) -> f64 {
        -1.0
    }

    /// Ghost-aware sample of c (cell-centered Dirichlet walls).
    fn c_at(&self, i: isize, j: isize) -> f64 {
        let (nx, ny) = (self.grid.nx as isize, self.grid.ny as isize);
        if i >= 0 && i < nx && j >= 0 && j < ny {
            self.state.c[(i as usize, j as usize)]
        } else {
            let ii = i.clamp(0, nx - 1) as usize;
            let jj = j.clamp(0, ny - 1) as usize;
            2.0 * self.cwall() - self.state.c[(ii, jj)]
        }
    }

    fn lap_c(&self, i: usize, j: usize) -> f64 {
        let h2 = self.grid.hx() * self.grid.hx();
        let (i, j) = (i as isize, j as isize);
        (self.c_at(i + 1, j) + self.c_at(i - 1, j) + self.c_at(i, j + 1) + self.c_at(i, j - 1)
            - 4.0 * self.c_at(i, j))
            / h2
    }

    /// Ghost-aware velocity samples (no-slip walls).
    fn u_at(&self, i: isize, j: isize) -> f64 {
        let (nxf, ny) = ((self.grid.nx + 1) as isize, self.grid.ny as isize);
        if i < 0 || i >= nxf {
            return 0.0;
        }
        if j >= 0 && j < ny {
            self.state.u[(i as usize, j as usize)]
        } else {
            let jj = j.clamp(0, ny - 1) as usize;
            -self.state.u[(i as usize, jj)]
        }
    }

    fn v_at(&self, i: isize, j: isize) -> f64 {
        let (nx, nyf) = (self.grid.nx as isize, (self.grid.ny + 1) as isize);
        if j < 0 || j >= nyf {
            return 0.0;
        }
        if i >= 0 && i < nx {
            self.state.v[(i as usize, j as usize)]
        } else {
            let ii = i.clamp(0, nx - 1) as usize;
            -self.state.v[(ii, j as usize)]
        }
    }

    pub fn auto_dt(&self) -> f64 {
        let eps = self.params.epsilon;
        let h = self.grid.hx().min(self.grid.hy());
        let vmax = self
            .state
            .u
            .iter()
            .chain(self.state.v.iter())
            .fold(0.0_f64, |m, &x| m.max(x.abs()));
        let adv = if vmax > 0.0 { h / vmax } else { f64::INFINITY };
        0.4 * (eps * eps).min(adv)
    }

    pub fn step(&mut self) -> Result<(), SolverError> {
        let dt = if self.params.dt > 0.0 {
            self.params.dt
        } else {
            self.auto_dt()
        };
        let suggested = self.auto_dt();
        if dt > 4.0 * suggested {
            return Err(SolverError::StepRejected { dt, suggested });
        }
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let h = self.grid.hx();
        let eps = self.params.epsilon;
        let s_stab = self.params.stabilization();

        // ---- Allen-Cahn: implicit Laplacian via CG ----
        let mut rhs = Array2::zeros((nx, ny));
        for i in 0..nx {
            for j in 0..ny {
                let c = self.state.c[(i, j)];
                let conv = if self.params.coupled {
                    let uc = 0.5 * (self.state.u[(i, j)] + self.state.u[(i + 1, j)]);
                    let vc = 0.5 * (self.state.v[(i, j)] + self.state.v[(i, j + 1)]);
                    let (ii, jj) = (i as isize, j as isize);
                    let dcdx = (self.c_at(ii + 1, jj) - self.c_at(ii - 1, jj)) / (2.0 * h);
                    let dcdy = (self.c_at(ii, jj + 1) - self.c_at(ii, jj - 1)) / (2.0 * h);
                    uc * dcdx + vc * dcdy
                } else {
                    0.0
                };
                rhs[(i, j)] = c + dt * s_stab / (eps * eps) * c
                    - dt * self.params.well.df(c) / (eps * eps)
                    - dt * conv;
            }
        }
        // Ghost closure c_ghost = 2 c_wall - c_interior: the constant part
        // moves to the RHS, the homogeneous part flips the interior sign.
        let diag_shift = 1.0 + dt * s_stab / (eps * eps);
        let apply = |x: &Array2<f64>| -> Array2<f64> {
            let mut out = Array2::zeros((nx, ny));
            let h2 = h * h;
            for i in 0..nx {
                for j in 0..ny {
                    let mut lap = -4.0 * x[(i, j)];
                    lap += if i + 1 < nx { x[(i + 1, j)] } else { -x[(i, j)] };
                    lap += if i > 0 { x[(i - 1, j)] } else { -x[(i, j)] };
                    lap += if j + 1 < ny { x[(i, j + 1)] } else { -x[(i, j)] };
                    lap += if j > 0 { x[(i, j - 1)] } else { -x[(i, j)] };
                    out[(i, j)] = diag_shift * x[(i, j)] - dt * lap / h2;
                }
            }
            out
        };
        let wall = 2.0 * self.cwall();
        for i in 0..nx {
            rhs[(i, 0)] += dt * wall / (h * h);
            rhs[(i, ny - 1)] += dt * wall / (h * h);
        }
        for j in 0..ny {
            rhs[(0, j)] += dt * wall / (h * h);
            rhs[(nx - 1, j)] += dt * wall / (h * h);
        }
        let c_new = conjugate_gradient(&apply, &rhs, &self.state.c, 1e-12, 600)
            .map_err(SolverError::NonConvergence)?;

        // ---- momentum ----
        if self.params.coupled {
            let nu_hat = self.params.nu_max();
            let mut fu = Array2::zeros((nx + 1, ny));
            let mut fv = Array2::zeros((nx, ny + 1));
            self.explicit_momentum_forces(&c_new, &mut fu, &mut fv);

            let apply_u = |x: &Array2<f64>| -> Array2<f64> {
                let mut out = Array2::zeros((nx + 1, ny));
                let h2 = h * h;
                for i in 1..nx {
                    for j in 0..ny {
                        let xe = x[(i + 1, j)];
                        let xw = x[(i - 1, j)];
                        let xn = if j + 1 < ny { x[(i, j + 1)] } else { -x[(i, j)] };
                        let xs = if j > 0 { x[(i, j - 1)] } else { -x[(i, j)] };
                        let lap = (xe + xw + xn + xs - 4.0 * x[(i, j)]) / h2;
                        out[(i, j)] = x[(i, j)] - dt * nu_hat * lap;
                    }
                }
                out
            };
            let apply_v = |x: &Array2<f64>| -> Array2<f64> {
                let mut out = Array2::zeros((nx, ny + 1));
                let h2 = h * h;
                for i in 0..nx {
                    for j in 1..ny {
                        let xn = x[(i, j + 1)];
                        let xs = x[(i, j - 1)];
                        let xe = if i + 1 < nx { x[(i + 1, j)] } else { -x[(i, j)] };
                        let xw = if i > 0 { x[(i - 1, j)] } else { -x[(i, j)] };
                        let lap = (xe + xw + xn + xs - 4.0 * x[(i, j)]) / h2;
                        out[(i, j)] = x[(i, j)] - dt * nu_hat * lap;
                    }
                }
                out
            };
            let mut rhs_u = Array2::zeros((nx + 1, ny));
            for i in 1..nx {
                for j in 0..ny {
                    rhs_u[(i, j)] = self.state.u[(i, j)] + dt * fu[(i, j)];
                }
            }
            let mut rhs_v = Array2::zeros((nx, ny + 1));
            for i in 0..nx {
                for j in 1..ny {
                    rhs_v[(i, j)] = self.state.v[(i, j)] + dt * fv[(i, j)];
                }
            }
            let u_star = conjugate_gradient(&apply_u, &rhs_u, &self.state.u, 1e-12, 600)
                .map_err(SolverError::NonConvergence)?;
            let v_star = conjugate_gradient(&apply_v, &rhs_v, &self.state.v, 1e-12, 600)
                .map_err(SolverError::NonConvergence)?;

            // ---- projection: cosine-transform Poisson with Neumann walls ----
            let mut div = Array2::zeros((nx, ny));
            for i in 0..nx {
                for j in 0..ny {
                    div[(i, j)] = (u_star[(i + 1, j)] - u_star[(i, j)] + v_star[(i, j + 1)]
                        - v_star[(i, j)])
                        / h;
                }
            }
            let phi = poisson_neumann_dct(&div, h);
            let mut u_new = u_star;
            let mut v_new = v_star;
            for i in 1..nx {
                for j in 0..ny {
                    u_new[(i, j)] -= (phi[(i, j)] - phi[(i - 1, j)]) / h;
                }
            }
            for i in 0..nx {
                for j in 1..ny {
                    v_new[(i, j)] -= (phi[(i, j)] - phi[(i, j - 1)]) / h;
                }
            }
            self.state.u = u_new;
            self.state.v = v_new;
            self.state.p = phi.mapv(|x| x / dt);
        }

        self.state.c = c_new;
        self.state.t += dt;
        self.stats.steps += 1;
        self.stats.last_div_norm = self.divergence_max();
        Ok(())
    }

    fn explicit_momentum_forces(
        &mut self,
        c: &Array2<f64>,
        fu: &mut Array2<f64>,
        fv: &mut Array2<f64>,
    ) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let h = self.grid.hx();
        let eps = self.params.epsilon;
        let nu_hat = self.params.nu_max();
        let c_ghost = |i: isize, j: isize| -> f64 {
            if i >= 0 && (i as usize) < nx && j >= 0 && (j as usize) < ny {
                c[(i as usize, j as usize)]
            } else {
                let ii = i.clamp(0, nx as isize - 1) as usize;
                let jj = j.clamp(0, ny as isize - 1) as usize;
                2.0 * self.cwall() - c[(ii, jj)]
            }
        };
        let mut clamp_events = 0usize;
        let params = self.params.clone();
        let mut nu_of = |cc: f64| -> f64 {
            if cc.abs() > 1.5 {
                clamp_events += 1;
            }
            params.viscosity(cc)
        };

        // u faces (interior i = 1..nx)
        for i in 1..nx {
            for j in 0..ny {
                let (ii, jj) = (i as isize, j as isize);
                let u_c = self.state.u[(i, j)];
                let u_e = 0.5 * (u_c + self.u_at(ii + 1, jj));
                let u_w = 0.5 * (u_c + self.u_at(ii - 1, jj));
                let u_n = 0.5 * (u_c + self.u_at(ii, jj + 1));
                let u_s = 0.5 * (u_c + self.u_at(ii, jj - 1));
                let v_ne = 0.5 * (self.v_at(ii, jj + 1) + self.v_at(ii - 1, jj + 1));
                let v_se = 0.5 * (self.v_at(ii, jj) + self.v_at(ii - 1, jj));
                let conv = (u_e * u_e - u_w * u_w) / h + (u_n * v_ne - u_s * v_se) / h;

                let nu_e = nu_of(c_ghost(ii, jj));
                let nu_w = nu_of(c_ghost(ii - 1, jj));
                let dudx_e = (self.u_at(ii + 1, jj) - u_c) / h;
                let dudx_w = (u_c - self.u_at(ii - 1, jj)) / h;
                let nu_n = 0.25
                    * (nu_of(c_ghost(ii, jj))
                        + nu_of(c_ghost(ii - 1, jj))
                        + nu_of(c_ghost(ii, jj + 1))
                        + nu_of(c_ghost(ii - 1, jj + 1)));
                let nu_s = 0.25
                    * (nu_of(c_ghost(ii, jj))
                        + nu_of(c_ghost(ii - 1, jj))
                        + nu_of(c_ghost(ii, jj - 1))
                        + nu_of(c_ghost(ii - 1, jj - 1)));
                let dudy_n = (self.u_at(ii, jj + 1) - u_c) / h;
                let dudy_s = (u_c - self.u_at(ii, jj - 1)) / h;
                let dvdx_n = (self.v_at(ii, jj + 1) - self.v_at(ii - 1, jj + 1)) / h;
                let dvdx_s = (self.v_at(ii, jj) - self.v_at(ii - 1, jj)) / h;
                let visc_full = (2.0 * nu_e * dudx_e - 2.0 * nu_w * dudx_w) / h
                    + (nu_n * (dudy_n + dvdx_n) - nu_s * (dudy_s + dvdx_s)) / h;
                let lap_u = {
                    let xe = self.u_at(ii + 1, jj);
                    let xw = self.u_at(ii - 1, jj);
                    let xn = self.u_at(ii, jj + 1);
                    let xs = self.u_at(ii, jj - 1);
                    (xe + xw + xn + xs - 4.0 * u_c) / (h * h)
                };
                let visc_corr = visc_full - nu_hat * lap_u;

                let cap = match self.params.capillary {
                    CapillaryForm::Tensor => {
                        let t11_e = {
                            let d = (c_ghost(ii + 1, jj) - c_ghost(ii - 1, jj)) / (2.0 * h);
                            d * d
                        };
                        let t11_w = {
                            let d = (c_ghost(ii, jj) - c_ghost(ii - 2, jj)) / (2.0 * h);
                            d * d
                        };
                        let t12 = |jc: isize| -> f64 {
                            let dcdx = (c_ghost(ii, jc) + c_ghost(ii, jc - 1)
                                - c_ghost(ii - 1, jc)
                                - c_ghost(ii - 1, jc - 1))
                                / (2.0 * h);
                            let dcdy = (c_ghost(ii, jc) + c_ghost(ii - 1, jc)
                                - c_ghost(ii, jc - 1)
                                - c_ghost(ii - 1, jc - 1))
                                / (2.0 * h);
                            dcdx * dcdy
                        };
                        -eps * ((t11_e - t11_w) / h + (t12(jj + 1) - t12(jj)) / h)
                    }
                    CapillaryForm::Laplace => {
                        let lap_e = self.lap_c_of(c, ii, jj);
                        let lap_w = self.lap_c_of(c, ii - 1, jj);
                        let dcdx = (c_ghost(ii, jj) - c_ghost(ii - 1, jj)) / h;
                        -eps * 0.5 * (lap_e + lap_w) * dcdx
                    }
                };
                fu[(i, j)] = -conv + visc_corr + cap;
            }
        }

        // v faces (interior j = 1..ny)
        for i in 0..nx {
            for j in 1..ny {
                let (ii, jj) = (i as isize, j as isize);
                let v_c = self.state.v[(i, j)];
                let v_n = 0.5 * (v_c + self.v_at(ii, jj + 1));
                let v_s = 0.5 * (v_c + self.v_at(ii, jj - 1));
                let v_e = 0.5 * (v_c + self.v_at(ii + 1, jj));
                let v_w = 0.5 * (v_c + self.v_at(ii - 1, jj));
                let u_ne = 0.5 * (self.u_at(ii + 1, jj) + self.u_at(ii + 1, jj - 1));
                let u_nw = 0.5 * (self.u_at(ii, jj) + self.u_at(ii, jj - 1));
                let conv = (v_e * u_ne - v_w * u_nw) / h + (v_n * v_n - v_s * v_s) / h;

                let nu_n = nu_of(c_ghost(ii, jj));
                let nu_s = nu_of(c_ghost(ii, jj - 1));
                let dvdy_n = (self.v_at(ii, jj + 1) - v_c) / h;
                let dvdy_s = (v_c - self.v_at(ii, jj - 1)) / h;
                let nu_e = 0.25
                    * (nu_of(c_ghost(ii, jj))
                        + nu_of(c_ghost(ii, jj - 1))
                        + nu_of(c_ghost(ii + 1, jj))
                        + nu_of(c_ghost(ii + 1, jj - 1)));
                let nu_w = 0.25
                    * (nu_of(c_ghost(ii, jj))
                        + nu_of(c_ghost(ii, jj - 1))
                        + nu_of(c_ghost(ii - 1, jj))
                        + nu_of(c_ghost(ii - 1, jj - 1)));
                let dvdx_e = (self.v_at(ii + 1, jj) - v_c) / h;
                let dvdx_w = (v_c - self.v_at(ii - 1, jj)) / h;
                let dudy_e = (self.u_at(ii + 1, jj) - self.u_at(ii + 1, jj - 1)) / h;
                let dudy_w = (self.u_at(ii, jj) - self.u_at(ii, jj - 1)) / h;
                let visc_full = (2.0 * nu_n * dvdy_n - 2.0 * nu_s * dvdy_s) / h
                    + (nu_e * (dvdx_e + dudy_e) - nu_w * (dvdx_w + dudy_w)) / h;
                let lap_v = {
                    let xn = self.v_at(ii, jj + 1);
                    let xs = self.v_at(ii, jj - 1);
                    let xe = self.v_at(ii + 1, jj);
                    let xw = self.v_at(ii - 1, jj);
                    (xe + xw + xn + xs - 4.0 * v_c) / (h * h)
                };
                let visc_corr = visc_full - nu_hat * lap_v;

                let cap = match self.params.capillary {
                    CapillaryForm::Tensor => {
                        let t22_n = {
                            let d = (c_ghost(ii, jj + 1) - c_ghost(ii, jj - 1)) / (2.0 * h);
                            d * d
                        };
                        let t22_s = {
                            let d = (c_ghost(ii, jj) - c_ghost(ii, jj - 2)) / (2.0 * h);
                            d * d
                        };
                        let t12 = |ic: isize| -> f64 {
                            let dcdx = (c_ghost(ic, jj) + c_ghost(ic, jj - 1)
                                - c_ghost(ic - 1, jj)
                                - c_ghost(ic - 1, jj - 1))
                                / (2.0 * h);
                            let dcdy = (c_ghost(ic, jj) + c_ghost(ic - 1, jj)
                                - c_ghost(ic, jj - 1)
                                - c_ghost(ic - 1, jj - 1))
                                / (2.0 * h);
                            dcdx * dcdy
                        };
                        -eps * ((t12(ii + 1) - t12(ii)) / h + (t22_n - t22_s) / h)
                    }
                    CapillaryForm::Laplace => {
                        let lap_n = self.lap_c_of(c, ii, jj);
                        let lap_s = self.lap_c_of(c, ii, jj - 1);
                        let dcdy = (c_ghost(ii, jj) - c_ghost(ii, jj - 1)) / h;
                        -eps * 0.5 * (lap_n + lap_s) * dcdy
                    }
                };
                fv[(i, j)] = -conv + visc_corr + cap;
            }
        }
        self.stats.clamp_events += clamp_events;
    }

    fn lap_c_of(&self, c: &Array2<f64>, i: isize, j: isize) -> f64 {
        let (nx, ny) = (self.grid.nx as isize, self.grid.ny as isize);
        let h2 = self.grid.hx() * self.grid.hx();
        let g = |ii: isize, jj: isize| -> f64 {
            if ii >= 0 && ii < nx && jj >= 0 && jj < ny {
                c[(ii as usize, jj as usize)]
            } else {
                let ic = ii.clamp(0, nx - 1) as usize;
                let jc = jj.clamp(0, ny - 1) as usize;
                2.0 * self.cwall() - c[(ic, jc)]
            }
        };
        (g(i + 1, j) + g(i - 1, j) + g(i, j + 1) + g(i, j - 1) - 4.0 * g(i, j)) / h2
    }

    pub fn divergence_max(&self) -> f64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let h = self.grid.hx();
        let mut worst = 0.0_f64;
        for i in 0..nx {
            for j in 0..ny {
                let d = (self.state.u[(i + 1, j)] - self.state.u[(i, j)] + self.state.v[(i, j + 1)]
                    - self.state.v[(i, j)])
                    / h;
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Chemical potential with the same ghost-aware 5-point Laplacian as the
    /// stepper.
    pub fn chemical_potential(&self) -> ScalarField2D {
        let eps = self.params.epsilon;
        let mut out = ScalarField2D::zeros(self.grid, BoundaryTag::DirichletConst(-1.0));
        for i in 0..self.grid.nx {
            for j in 0..self.grid.ny {
                out.data[(i, j)] =
                    -eps * self.lap_c(i, j) + self.params.well.df(self.state.c[(i, j)]) / eps;
            }
        }
        out
    }

    pub fn energy(&self) -> EnergyReport {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let h = self.grid.hx();
        let area = self.grid.cell_area();
        let eps = self.params.epsilon;
        let mu = self.chemical_potential();
        let mut kin = 0.0;
        let mut int = 0.0;
        let mut diss = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                let uc = 0.5 * (self.state.u[(i, j)] + self.state.u[(i + 1, j)]);
                let vc = 0.5 * (self.state.v[(i, j)] + self.state.v[(i, j + 1)]);
                kin += 0.5 * (uc * uc + vc * vc);
                let (ii, jj) = (i as isize, j as isize);
                let gx = (self.c_at(ii + 1, jj) - self.c_at(ii - 1, jj)) / (2.0 * h);
                let gy = (self.c_at(ii, jj + 1) - self.c_at(ii, jj - 1)) / (2.0 * h);
                let cc = self.state.c[(i, j)];
                int += 0.5 * eps * (gx * gx + gy * gy) + self.params.well.f(cc) / eps;
                let d11 = (self.state.u[(i + 1, j)] - self.state.u[(i, j)]) / h;
                let d22 = (self.state.v[(i, j + 1)] - self.state.v[(i, j)]) / h;
                let dudy = (self.u_at(ii, jj + 1) + self.u_at(ii + 1, jj + 1)
                    - self.u_at(ii, jj - 1)
                    - self.u_at(ii + 1, jj - 1))
                    / (4.0 * h);
                let dvdx = (self.v_at(ii + 1, jj) + self.v_at(ii + 1, jj + 1)
                    - self.v_at(ii - 1, jj)
                    - self.v_at(ii - 1, jj + 1))
                    / (4.0 * h);
                let d12 = 0.5 * (dudy + dvdx);
                let dnorm2 = d11 * d11 + 2.0 * d12 * d12 + d22 * d22;
                diss += 2.0 * self.params.viscosity(cc) * dnorm2 + mu.data[(i, j)].powi(2) / eps;
            }
        }
        EnergyReport {
            kinetic: kin * area,
            interfacial: int * area,
            total: (kin + int) * area,
            dissipation_rate: diss * area,
        }
    }

    /// Worst reconstructed wall value: `u`, `v` on the boundary faces and `c`
    /// midway between ghost and first interior cell.
    pub fn wall_values_max_defect(&self) -> f64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut worst = 0.0_f64;
        for j in 0..ny {
            worst = worst.max(self.state.u[(0, j)].abs());
            worst = worst.max(self.state.u[(nx, j)].abs());
            let jj = j as isize;
            let cw = 0.5 * (self.c_at(-1, jj) + self.c_at(0, jj));
            worst = worst.max((cw - self.cwall()).abs());
            let ce = 0.5 * (self.c_at(nx as isize, jj) + self.c_at(nx as isize - 1, jj));
            worst = worst.max((ce - self.cwall()).abs());
        }
        for i in 0..nx {
            worst = worst.max(self.state.v[(i, 0)].abs());
            worst = worst.max(self.state.v[(i, ny)].abs());
        }
        worst
    }

    pub fn scalar_field(&self) -> ScalarField2D {
        ScalarField2D {
            grid: self.grid,
            data: self.state.c.clone(),
            bc: BoundaryTag::DirichletConst(-1.0),
        }
    }
}

/// Unpreconditioned conjugate gradients for SPD grid operators.
fn conjugate_gradient(
    apply: &dyn Fn(&Array2<f64>) -> Array2<f64>,
    rhs: &Array2<f64>,
    x0: &Array2<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Array2<f64>, String> {
    let mut x = x0.clone();
    let mut r = rhs - &apply(&x);
    let mut p = r.clone();
    let mut rs = r.iter().map(|v| v * v).sum::<f64>();
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    for _ in 0..max_iter {
        if rs.sqrt() / rhs_norm < tol {
            return Ok(x);
        }
        let ap = apply(&p);
        let pap = p.iter().zip(ap.iter()).map(|(a, b)| a * b).sum::<f64>();
        if pap <= 0.0 {
            return Err("operator lost positive definiteness".into());
        }
        let alpha = rs / pap;
        x = &x + &p.mapv(|v| alpha * v);
        r = &r - &ap.mapv(|v| alpha * v);
        let rs_new = r.iter().map(|v| v * v).sum::<f64>();
        let beta = rs_new / rs;
        p = &r + &p.mapv(|v| beta * v);
        rs = rs_new;
    }
    if rs.sqrt() / rhs_norm < 1e-8 {
        Ok(x)
    } else {
        Err(format!(
            "CG stalled at relative residual {:.3e}",
            rs.sqrt() / rhs_norm
        ))
    }
}

/// Direct solve of the cell-centered Neumann Poisson problem `lap phi = rhs`
/// by cosine transforms; the mean of `phi` is fixed to zero.
fn poisson_neumann_dct(rhs: &Array2<f64>, h: f64) -> Array2<f64> {
    use crate::num::fourier::{dct2, dct3};
    let (nx, ny) = rhs.dim();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(nx);
    for i in 0..nx {
        let row: Vec<f64> = (0..ny).map(|j| rhs[(i, j)]).collect();
        rows.push(dct2(&row));
    }
    let mut hat = Array2::zeros((nx, ny));
    for j in 0..ny {
        let col: Vec<f64> = (0..nx).map(|i| rows[i][j]).collect();
        let t = dct2(&col);
        for i in 0..nx {
            hat[(i, j)] = t[i];
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            let lx = (2.0 * (std::f64::consts::PI * i as f64 / nx as f64).cos() - 2.0) / (h * h);
            let ly = (2.0 * (std::f64::consts::PI * j as f64 / ny as f64).cos() - 2.0) / (h * h);
            let lam = lx + ly;
            if i == 0 && j == 0 {
                hat[(0, 0)] = 0.0;
            } else {
                hat[(i, j)] /= lam;
            }
        }
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(ny);
    for j in 0..ny {
        let col: Vec<f64> = (0..nx).map(|i| hat[(i, j)]).collect();
        cols.push(dct3(&col));
    }
    let mut out = Array2::zeros((nx, ny));
    for i in 0..nx {
        let row: Vec<f64> = (0..ny).map(|j| cols[j][i]).collect();
        let t = dct3(&row);
        for j in 0..ny {
            out[(i, j)] = t[j];
        }
    }
    let mean = out.sum() / (nx * ny) as f64;
    out.mapv(|x| x - mean)
}

// ============================ level-set extraction ===========================

/// Extract the zero level set of a sampled field as a closed interface:
/// marching squares with linear subcell interpolation, chained into a loop,
/// resampled uniformly in arclength and low-pass filtered.
pub fn zero_level_set(field: &ScalarField2D, n_nodes: usize) -> Result<Interface, SolverError> {
    let g = field.grid;
    let (nx, ny) = (g.nx, g.ny);
    let periodic = matches!(field.bc, BoundaryTag::Periodic);
    let val = |i: usize, j: usize| field.data[(i % nx, j % ny)];
    let cell_range_x = if periodic { nx } else { nx - 1 };
    let cell_range_y = if periodic { ny } else { ny - 1 };

    type EdgeKey = (usize, usize, bool);
    let crossing = |a: f64, b: f64| -> Option<f64> {
        if (a > 0.0) != (b > 0.0) {
            Some(a / (a - b))
        } else {
            None
        }
    };
    let mut segments: Vec<(EdgeKey, EdgeKey)> = vec![];
    let mut points: std::collections::HashMap<EdgeKey, [f64; 2]> = std::collections::HashMap::new();
    for i in 0..cell_range_x {
        for j in 0..cell_range_y {
            let c00 = val(i, j);
            let c10 = val(i + 1, j);
            let c01 = val(i, j + 1);
            let c11 = val(i + 1, j + 1);
            let mut crossings: Vec<EdgeKey> = vec![];
            if let Some(t) = crossing(c00, c10) {
                let key = (i, j, true);
                points.insert(key, [g.x(i) + t * g.hx(), g.y(j)]);
                crossings.push(key);
            }
            if let Some(t) = crossing(c01, c11) {
                let key = (i, j + 1, true);
                let yy = g.y0 + ((j + 1) as f64 + g.offset) * g.hy();
                points.insert(key, [g.x(i) + t * g.hx(), yy]);
                crossings.push(key);
            }
            if let Some(t) = crossing(c00, c01) {
                let key = (i, j, false);
                points.insert(key, [g.x(i), g.y(j) + t * g.hy()]);
                crossings.push(key);
            }
            if let Some(t) = crossing(c10, c11) {
                let key = (i + 1, j, false);
                let xx = g.x0 + ((i + 1) as f64 + g.offset) * g.hx();
                points.insert(key, [xx, g.y(j) + t * g.hy()]);
                crossings.push(key);
            }
            match crossings.len() {
                0 => {}
                2 => segments.push((crossings[0], crossings[1])),
                4 => {
                    // saddle cell: resolve by the center average
                    let center = 0.25 * (c00 + c10 + c01 + c11);
                    let bottom = (i, j, true);
                    let top = (i, j + 1, true);
                    let left = (i, j, false);
                    let right = (i + 1, j, false);
                    if (center > 0.0) == (c00 > 0.0) {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((bottom, left));
                        segments.push((top, right));
                    }
                }
                _ => {}
            }
        }
    }
    if segments.is_empty() {
        return Err(SolverError::NoCrossing);
    }

    // Chain segments into loops via shared edge keys.
    let mut adjacency: std::collections::HashMap<EdgeKey, Vec<usize>> =
        std::collections::HashMap::new();
    for (idx, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(idx);
        adjacency.entry(*b).or_default().push(idx);
    }
    let mut used = vec![false; segments.len()];
    let mut loops: Vec<Vec<EdgeKey>> = vec![];
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        let mut path = vec![segments[start].0, segments[start].1];
        used[start] = true;
        loop {
            let tail = *path.last().unwrap();
            let next = adjacency
                .get(&tail)
                .and_then(|list| list.iter().find(|&&k| !used[k]).copied());
            match next {
                Some(k) => {
                    used[k] = true;
                    let (a, b) = segments[k];
                    let nxt = if a == tail { b } else { a };
                    if nxt == path[0] {
                        break;
                    }
                    path.push(nxt);
                }
                None => break,
            }
        }
        loops.push(path);
    }
    if loops.len() > 1 {
        loops.sort_by_key(|l| std::cmp::Reverse(l.len()));
        // a tiny fragment is grid noise; a substantial second loop is real
        if loops[1].len() > loops[0].len() / 8 {
            return Err(SolverError::MultipleComponents(loops.len()));
        }
    }
    let polyline: Vec<[f64; 2]> = loops[0].iter().map(|k| points[k]).collect();
    if polyline.len() < 8 {
        return Err(SolverError::NoCrossing);
    }

    // Resample uniformly in arclength.
    let mut cum = vec![0.0];
    for w in polyline.windows(2) {
        let d = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
        cum.push(cum.last().unwrap() + d);
    }
    let closing = {
        let a = polyline.last().unwrap();
        let b = &polyline[0];
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    };
    let total = cum.last().unwrap() + closing;
    let m = polyline.len();
    let sample = |target: f64| -> [f64; 2] {
        let t = target % total;
        let mut lo = 0usize;
        while lo + 1 < m && cum[lo + 1] <= t {
            lo += 1;
        }
        let (a, b, t0, t1) = if lo + 1 < m {
            (polyline[lo], polyline[lo + 1], cum[lo], cum[lo + 1])
        } else {
            (polyline[m - 1], polyline[0], cum[m - 1], total)
        };
        let frac = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        [a[0] + frac * (b[0] - a[0]), a[1] + frac * (b[1] - a[1])]
    };
    let mut nodes: Vec<[f64; 2]> = (0..n_nodes)
        .map(|k| sample(total * k as f64 / n_nodes as f64))
        .collect();

    // Orient so the normal (left of the tangent) points into the positive
    // phase.
    {
        let mid = n_nodes / 2;
        let a = nodes[mid];
        let b = nodes[(mid + 1) % n_nodes];
        let tx = b[0] - a[0];
        let ty = b[1] - a[1];
        let nlen = (tx * tx + ty * ty).sqrt().max(1e-300);
        let nxv = -ty / nlen;
        let nyv = tx / nlen;
        let off = 2.0 * g.hx();
        let probe = [a[0] + off * nxv, a[1] + off * nyv];
        let eval = |p: [f64; 2]| -> f64 {
            crate::num::interp::bicubic_periodic(
                field.data.as_slice().unwrap(),
                nx,
                ny,
                g.hx(),
                g.hy(),
                p[0] - g.x0 - g.offset * g.hx(),
                p[1] - g.y0 - g.offset * g.hy(),
            )
        };
        if eval(probe) < 0.0 {
            nodes.reverse();
        }
    }

    // Low-pass: drop the top third of the spectrum to smooth marching noise.
    let iface = Interface::new(nodes, 0.0).map_err(|_| SolverError::NoCrossing)?;
    let reduced = iface.resample(2 * n_nodes / 3);
    Ok(reduced.resample(n_nodes))
}
