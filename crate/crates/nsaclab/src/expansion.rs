//! Assembly of expansion terms and auxiliary fields: the blended leading
//! velocity, the auxiliary reaction/jump fields used to enforce compatibility
//! off the interface, the blended approximate order parameter, and parabolic
//! equations for height functions on the evolving interface.

use crate::field::{BoundaryTag, Grid2, ScalarField2D};
use crate::geometry::{InterfaceMotion, PeriodicFn, StretchedCoords, TubularMap};
use crate::inner_ode::{solve_linearized, InnerOdeError, LineRhs};
use crate::num::fourier::deriv_periodic;
use crate::num::quad::trapezoid;
use crate::num::{add, dot, scale, sub, Vec2};
use crate::profile::{DoubleWell, Profile};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("interface width {eps} is not resolved inside the tube (delta = {delta})")]
    LayerUnresolved { eps: f64, delta: f64 },
    #[error("time step {dt:.3e} unstable for the explicit terms; suggested {suggested:.3e}")]
    DtUnstable { dt: f64, suggested: f64 },
    #[error(transparent)]
    Ode(#[from] InnerOdeError),
}

// ----------------------------- height functions ------------------------------

/// Periodic height function with its time history.
#[derive(Debug, Clone)]
pub struct HeightFunction {
    pub times: Vec<f64>,
    pub snapshots: Vec<PeriodicFn>,
}

impl HeightFunction {
    pub fn new(t0: f64, h0: PeriodicFn) -> Self {
        Self {
            times: vec![t0],
            snapshots: vec![h0],
        }
    }

    pub fn current(&self) -> &PeriodicFn {
        self.snapshots.last().unwrap()
    }

    pub fn current_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn push(&mut self, t: f64, h: PeriodicFn) {
        self.times.push(t);
        self.snapshots.push(h);
    }
}

// --------------------------- leading-order velocity --------------------------

/// The blended transition-layer velocity
/// `v0(rho, x) = v_plus(x) eta(rho) + v_minus(x) (1 - eta(rho))`.
pub struct LeadingVelocity<'a> {
    pub v_plus: &'a dyn Fn(Vec2) -> Vec2,
    pub v_minus: &'a dyn Fn(Vec2) -> Vec2,
    pub eta: &'a Profile,
}

impl LeadingVelocity<'_> {
    pub fn eval(&self, rho: f64, x: Vec2) -> Vec2 {
        let e = self.eta.eval(rho);
        add(scale((self.v_plus)(x), e), scale((self.v_minus)(x), 1.0 - e))
    }
}

// ------------------------------ auxiliary fields -----------------------------

/// The compatibility field built from the kinematic defect
/// `N(x) = lap d - v0 . grad d - d_t d`: quotient `N/d` off the interface and
/// the normal derivative of `N` on it, blended across a thin band so the 0/0
/// is never evaluated.
pub struct G0Field<'a> {
    pub tub: &'a TubularMap,
    /// Extended leading velocity (rho-independent extension).
    pub velocity: &'a dyn Fn(Vec2) -> Vec2,
    /// Normal velocity of the interface at parameter `s`.
    pub normal_speed: &'a dyn Fn(f64) -> f64,
    /// Half-width of the on-interface branch activation band.
    pub band: f64,
}

impl G0Field<'_> {
    /// The defect `N` at tube coordinates `(r, s)`; `d_t d = -V(P(x))`.
    fn defect(&self, r: f64, s: f64) -> f64 {
        let x = self.tube_point(r, s);
        let (_, n) = self.tub.interface.tangent_normal(s).expect("valid curve");
        let lap_d = self.tub.laplacian_sd_at(r, s);
        lap_d - dot((self.velocity)(x), n) + (self.normal_speed)(s)
    }

    fn tube_point(&self, r: f64, s: f64) -> Vec2 {
        let p = self.tub.interface.point(s);
        let (_, n) = self.tub.interface.tangent_normal(s).expect("valid curve");
        add(p, scale(n, r))
    }

    /// Off-interface branch `N/d`.
    pub fn off_gamma(&self, r: f64, s: f64) -> f64 {
        self.defect(r, s) / r
    }

    /// On-interface branch: normal derivative of the defect, by 4th-order
    /// centered differences along the fiber.
    pub fn on_gamma(&self, s: f64) -> f64 {
        let step = self.band.max(1e-6);
        let f = |r: f64| self.defect(r, s);
        (-f(2.0 * step) + 8.0 * f(step) - 8.0 * f(-step) + f(-2.0 * step)) / (12.0 * step)
    }

    /// Blended evaluation at a point of the tube.
    pub fn eval(&self, x: Vec2) -> Result<f64, crate::geometry::GeometryError> {
        let (r, s) = self.tub.project(x)?;
        Ok(self.eval_coords(r, s))
    }

    pub fn eval_coords(&self, r: f64, s: f64) -> f64 {
        let switch = 3.0 * self.band;
        if r.abs() >= switch {
            self.off_gamma(r, s)
        } else {
            // Cubic blend between the on-branch value (plus its linear
            // continuation) and the quotient branch.
            let w = {
                let t = r.abs() / switch;
                t * t * (3.0 - 2.0 * t)
            };
            let near = self.on_gamma(s) + 0.5 * r * self.second_normal_derivative(s);
            if r.abs() < 1e-12 {
                near
            } else {
                (1.0 - w) * near + w * self.off_gamma(r, s)
            }
        }
    }

    fn second_normal_derivative(&self, s: f64) -> f64 {
        let step = self.band.max(1e-6);
        let f = |r: f64| self.defect(r, s);
        (f(step) - 2.0 * f(0.0) + f(-step)) / (step * step)
    }
}

/// The velocity-jump field: `(v_plus - v_minus)/d` off the interface, normal
/// derivative of the jump on it.
pub struct U0Field<'a> {
    pub tub: &'a TubularMap,
    pub v_plus: &'a dyn Fn(Vec2) -> Vec2,
    pub v_minus: &'a dyn Fn(Vec2) -> Vec2,
    pub band: f64,
}

impl U0Field<'_> {
    fn jump(&self, x: Vec2) -> Vec2 {
        sub((self.v_plus)(x), (self.v_minus)(x))
    }

    fn tube_point(&self, r: f64, s: f64) -> Vec2 {
        let p = self.tub.interface.point(s);
        let (_, n) = self.tub.interface.tangent_normal(s).expect("valid curve");
        add(p, scale(n, r))
    }

    pub fn off_gamma(&self, r: f64, s: f64) -> Vec2 {
        scale(self.jump(self.tube_point(r, s)), 1.0 / r)
    }

    pub fn on_gamma(&self, s: f64) -> Vec2 {
        let step = self.band.max(1e-6);
        let f = |r: f64| self.jump(self.tube_point(r, s));
        let a = f(2.0 * step);
        let b = f(step);
        let c = f(-step);
        let d = f(-2.0 * step);
        [
            (-a[0] + 8.0 * b[0] - 8.0 * c[0] + d[0]) / (12.0 * step),
            (-a[1] + 8.0 * b[1] - 8.0 * c[1] + d[1]) / (12.0 * step),
        ]
    }

    pub fn eval(&self, x: Vec2) -> Result<Vec2, crate::geometry::GeometryError> {
        let (r, s) = self.tub.project(x)?;
        let switch = 3.0 * self.band;
        if r.abs() >= switch {
            Ok(self.off_gamma(r, s))
        } else if r.abs() < 1e-12 {
            Ok(self.on_gamma(s))
        } else {
            let t = r.abs() / switch;
            let w = t * t * (3.0 - 2.0 * t);
            let near = self.on_gamma(s);
            let far = self.off_gamma(r, s);
            Ok(add(scale(near, 1.0 - w), scale(far, w)))
        }
    }
}

// --------------------------- approximate solution ----------------------------

/// Pointwise leading-order blended field value: cut off transition profile
/// inside the tube, pure phases outside.
pub fn leading_order_value(eps: f64, d: f64, theta: &Profile, zeta: &Profile) -> f64 {
    let z = zeta.eval(d);
    let bulk = if d >= 0.0 { 1.0 } else { -1.0 };
    if z == 0.0 {
        bulk
    } else {
        z * theta.eval(d / eps) + (1.0 - z) * bulk
    }
}

/// Blended approximate order parameter and its optional highest-order
/// correction block.
pub struct ApproxSolution<'a> {
    pub eps: f64,
    pub tub: &'a TubularMap,
    pub theta: &'a Profile,
    pub zeta: &'a Profile,
}

impl ApproxSolution<'_> {
    pub fn new<'a>(
        eps: f64,
        tub: &'a TubularMap,
        theta: &'a Profile,
        zeta: &'a Profile,
    ) -> Result<ApproxSolution<'a>, ExpansionError> {
        if eps > tub.delta {
            return Err(ExpansionError::LayerUnresolved { eps, delta: tub.delta });
        }
        Ok(ApproxSolution { eps, tub, theta, zeta })
    }

    /// Sample the leading-order field on a grid.
    pub fn leading_field(&self, grid: Grid2) -> ScalarField2D {
        let mut out = ScalarField2D::zeros(grid, BoundaryTag::Periodic);
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                let (sd, _) = self.tub.project_clamped([grid.x(i), grid.y(j)]);
                out.data[(i, j)] = leading_order_value(self.eps, sd.value, self.theta, self.zeta);
            }
        }
        out
    }

    /// Leading-order field plus the highest-order correction
    /// `(eps^{N-1/2} theta'(rho) + eps^{N+3/2} d_rho c2(rho, s)) h(s)`
    /// inside the cutoff blend.
    pub fn corrected_field(
        &self,
        grid: Grid2,
        sc: &StretchedCoords,
        c2: &C2Batch,
        h_high: &PeriodicFn,
        order_n: usize,
    ) -> ScalarField2D {
        let mut out = ScalarField2D::zeros(grid, BoundaryTag::Periodic);
        let amp_lead = self.eps.powf(order_n as f64 - 0.5);
        let amp_corr = self.eps.powf(order_n as f64 + 1.5);
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                let x = [grid.x(i), grid.y(j)];
                let (sd, s) = self.tub.project_clamped(x);
                let d = sd.value;
                let z = self.zeta.eval(d);
                let bulk = if d >= 0.0 { 1.0 } else { -1.0 };
                if z == 0.0 {
                    out.data[(i, j)] = bulk;
                    continue;
                }
                let rho = sc.rho_from_coords(d, s);
                let inner = self.theta.eval(rho)
                    + (amp_lead * self.theta.eval_deriv(rho) + amp_corr * c2.d_rho(rho, s))
                        * h_high.eval(s);
                out.data[(i, j)] = z * inner + (1.0 - z) * bulk;
            }
        }
        out
    }
}

/// Interfacial part of the diffuse energy of a periodic field:
/// `int (eps/2 |grad c|^2 + f(c)/eps)`, gradients spectral.
pub fn interfacial_energy(field: &ScalarField2D, eps: f64, well: &dyn DoubleWell) -> f64 {
    let g = field.grid;
    let plan = crate::num::fourier::Fft2::new(g.nx, g.ny);
    let data: Vec<f64> = field.data.iter().copied().collect();
    let hat = plan.forward(&data);
    let mut gx_hat = hat.clone();
    let mut gy_hat = hat;
    for i in 0..g.nx {
        let kx = crate::num::fourier::wavenumber(i, g.nx) as f64 * 2.0 * std::f64::consts::PI / g.lx;
        for j in 0..g.ny {
            let ky =
                crate::num::fourier::wavenumber(j, g.ny) as f64 * 2.0 * std::f64::consts::PI / g.ly;
            let idx = i * g.ny + j;
            let v = gx_hat[idx];
            gx_hat[idx] = rustfft::num_complex::Complex64::new(0.0, kx) * v;
            gy_hat[idx] = rustfft::num_complex::Complex64::new(0.0, ky) * gy_hat[idx];
        }
    }
    let gx = plan.inverse_real(gx_hat);
    let gy = plan.inverse_real(gy_hat);
    let mut acc = 0.0;
    for (k, &c) in field.data.iter().enumerate() {
        acc += 0.5 * eps * (gx[k] * gx[k] + gy[k] * gy[k]) + well.f(c) / eps;
    }
    acc * g.cell_area()
}

// ------------------------------ the c2 fiber ODE -----------------------------

/// Per-parameter solutions of the second-order fiber corrector equation
/// `-c2'' + f''(theta_0) c2 = |grad_G h1|^2 theta_0'' - theta_0' rho g0`.
/// By linearity only two base solutions are needed:
/// `c2(rho, s) = |grad_G h1(s)|^2 wa(rho) + g0(s) wb(rho)`.
pub struct C2Batch {
    pub wa: Profile,
    pub wb: Profile,
    pub grad_h1_sq: PeriodicFn,
    pub g0: PeriodicFn,
}

impl C2Batch {
    pub fn build(
        p: &Profile,
        well: &dyn DoubleWell,
        grad_h1_sq: PeriodicFn,
        g0: PeriodicFn,
    ) -> Result<Self, InnerOdeError> {
        // Lemma form is w'' - f'' w = A, so the equation becomes
        // c2'' - f'' c2 = -|grad h1|^2 theta'' + g0 rho theta'.
        let a1 = LineRhs::new(
            p.grid,
            p.values.iter().map(|&v| -well.df(v)).collect(),
            (0.0, 0.0),
            1.0,
        );
        let a2 = LineRhs::new(
            p.grid,
            p.grid
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, &rho)| rho * p.deriv[i])
                .collect(),
            (0.0, 0.0),
            1.0,
        );
        let wa = solve_linearized(&a1, p, well)?;
        let wb = solve_linearized(&a2, p, well)?;
        Ok(Self {
            wa,
            wb,
            grad_h1_sq,
            g0,
        })
    }

    pub fn value(&self, rho: f64, s: f64) -> f64 {
        self.grad_h1_sq.eval(s) * self.wa.eval(rho) + self.g0.eval(s) * self.wb.eval(rho)
    }

    pub fn d_rho(&self, rho: f64, s: f64) -> f64 {
        self.grad_h1_sq.eval(s) * self.wa.eval_deriv(rho) + self.g0.eval(s) * self.wb.eval_deriv(rho)
    }
}

// ------------------------- surface parabolic equations -----------------------

/// Solve `D_t h + w_tau . grad_G h - lap_G h + a h = g` on the torus with an
/// integrating-factor RK2 scheme: the uniform part of the Laplace-Beltrami
/// operator is integrated exactly in Fourier space, advection/reaction and
/// the variable-metric correction go explicit.
///
/// `w_tau`, `a`, `g` are interface-parameter functions of `(s, t)`; `w_tau`
/// is the tangential advecting speed (the normal component of an advecting
/// field does not act on a parameter function).
#[allow(clippy::too_many_arguments)]
pub fn surface_parabolic_solve(
    motion: &dyn InterfaceMotion,
    w_tau: &dyn Fn(f64, f64) -> f64,
    a: &dyn Fn(f64, f64) -> f64,
    g: &dyn Fn(f64, f64) -> f64,
    h0: PeriodicFn,
    t0: f64,
    t_end: f64,
    dt: f64,
) -> Result<HeightFunction, ExpansionError> {
    let n = h0.len();
    let mut hist = HeightFunction::new(t0, h0);
    let steps = ((t_end - t0) / dt).round() as usize;

    // Explicit-term stability guard (advection on the spectral grid plus
    // reaction), checked against the worst coefficient at t0.
    let iface0 = motion.at(t0);
    let min_speed = (0..n)
        .map(|j| iface0.speed(j as f64 / n as f64))
        .fold(f64::INFINITY, f64::min);
    let wmax = (0..n)
        .map(|j| (w_tau(j as f64 / n as f64, t0)).abs())
        .fold(0.0_f64, f64::max);
    let amax = (0..n)
        .map(|j| (a(j as f64 / n as f64, t0)).abs())
        .fold(0.0_f64, f64::max);
    let k_max = std::f64::consts::PI * n as f64; // d/ds of the highest mode
    let advective_limit = if wmax > 0.0 {
        min_speed / (wmax * k_max)
    } else {
        f64::INFINITY
    };
    let reaction_limit = if amax > 0.0 { 1.0 / amax } else { f64::INFINITY };
    let suggested = 0.9 * advective_limit.min(reaction_limit);
    if dt > suggested && suggested.is_finite() {
        return Err(ExpansionError::DtUnstable { dt, suggested });
    }

    for m in 0..steps {
        let t = t0 + m as f64 * dt;
        let t_next = t + dt;
        let iface_mid = motion.at(t + 0.5 * dt);
        let speeds_mid: Vec<f64> = (0..n).map(|j| iface_mid.speed(j as f64 / n as f64)).collect();
        let mean_speed = speeds_mid.iter().sum::<f64>() / n as f64;

        let explicit = |h: &PeriodicFn, tt: f64, iface: &crate::geometry::Interface| -> Vec<f64> {
            let dh = deriv_periodic(&h.values, 1, 1.0);
            let d2h = deriv_periodic(&h.values, 2, 1.0);
            let lap_full = crate::geometry::surface_laplace(iface, h);
            (0..n)
                .map(|j| {
                    let s = j as f64 / n as f64;
                    let sp = iface.speed(s);
                    // variable-metric correction: full operator minus the
                    // uniform part handled by the integrating factor
                    let lap_uniform = d2h[j] / (mean_speed * mean_speed);
                    let corr = lap_full.values[j] - lap_uniform;
                    -w_tau(s, tt) * dh[j] / sp - a(s, tt) * h.values[j] + g(s, tt) + corr
                })
                .collect()
        };

        let iface_now = motion.at(t);
        let iface_next = motion.at(t_next);
        let h_now = hist.current().clone();

        let k1 = explicit(&h_now, t, &iface_now);
        let pred_vals = apply_integrating_factor(&h_now.values, &k1, dt, mean_speed, 1.0);
        let pred = PeriodicFn::new(pred_vals);
        let k2 = explicit(&pred, t_next, &iface_next);

        // h^{n+1} = E h^n + dt/2 (E k1 + k2)
        let zero = vec![0.0; n];
        let e_h = apply_integrating_factor(&h_now.values, &zero, dt, mean_speed, 0.0);
        let e_k1 = apply_integrating_factor(&k1, &zero, dt, mean_speed, 0.0);
        let vals: Vec<f64> = (0..n)
            .map(|j| e_h[j] + 0.5 * dt * (e_k1[j] + k2[j]))
            .collect();
        hist.push(t_next, PeriodicFn::new(vals));
    }
    Ok(hist)
}

/// `out = E (h + dt_scale * dt * k)` where `E` multiplies mode `k` by
/// `exp(-(2 pi k / speed)^2 dt)`.
fn apply_integrating_factor(h: &[f64], k: &[f64], dt: f64, speed: f64, dt_scale: f64) -> Vec<f64> {
    use rustfft::num_complex::Complex64;
    let n = h.len();
    let mut hat: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(h[j] + dt_scale * dt * k[j], 0.0))
        .collect();
    crate::num::fourier::fft_forward(n).process(&mut hat);
    for (j, z) in hat.iter_mut().enumerate() {
        let kk = crate::num::fourier::wavenumber(j, n) as f64;
        let lam = (2.0 * std::f64::consts::PI * kk / speed).powi(2);
        *z *= Complex64::new((-lam * dt).exp(), 0.0);
    }
    crate::num::fourier::fft_inverse(n).process(&mut hat);
    hat.into_iter().map(|z| z.re / n as f64).collect()
}

// ------------------------------ height evolutions ----------------------------

/// First-order height equation: the tangential trace of the leading velocity
/// advects, the kinematic defect field reacts, and the forcing combines the
/// normal trace of the next-order velocity with the (odd, hence vanishing)
/// transverse moment of the first inhomogeneity.
///
/// `D_t h1 + v0_tau . grad_G h1 - lap_G h1 + g0 h1
///    = -sigma0^{-1} int n.v1 theta'^2 + sigma0^{-1} int Btilde theta'`,
/// with `Btilde = -theta' rho g0` so its moment is `-g0 int rho theta'^2`.
#[allow(clippy::too_many_arguments)]
pub fn h1_evolution(
    motion: &dyn InterfaceMotion,
    v0_tau: &dyn Fn(f64, f64) -> f64,
    nv1: &dyn Fn(f64, f64) -> f64,
    g0: &dyn Fn(f64, f64) -> f64,
    p: &Profile,
    n_nodes: usize,
    t_end: f64,
    dt: f64,
) -> Result<HeightFunction, ExpansionError> {
    let h = p.grid.h();
    let thp2: Vec<f64> = p.deriv.iter().map(|d| d * d).collect();
    let sigma0 = trapezoid(&thp2, h);
    let rho_thp2: Vec<f64> = p
        .grid
        .nodes()
        .iter()
        .zip(&p.deriv)
        .map(|(&rho, &d)| rho * d * d)
        .collect();
    let odd_moment = trapezoid(&rho_thp2, h);

    let forcing = move |s: f64, t: f64| -> f64 {
        (-nv1(s, t) * sigma0 - g0(s, t) * odd_moment) / sigma0
    };
    // Initial value is zero by construction of the expansion.
    surface_parabolic_solve(
        motion,
        v0_tau,
        g0,
        &forcing,
        PeriodicFn::zero(n_nodes),
        0.0,
        t_end,
        dt,
    )
}

/// The highest-order height equation
/// `D_t h - v_tau . grad_G h - lap_G h - g0 h = n.u` with zero initial data.
#[allow(clippy::too_many_arguments)]
pub fn h_high_evolution(
    motion: &dyn InterfaceMotion,
    v_tau: &dyn Fn(f64, f64) -> f64,
    g0: &dyn Fn(f64, f64) -> f64,
    nu_trace: &dyn Fn(f64, f64) -> f64,
    n_nodes: usize,
    t_end: f64,
    dt: f64,
) -> Result<HeightFunction, ExpansionError> {
    surface_parabolic_solve(
        motion,
        &|s, t| -v_tau(s, t),
        &|s, t| -g0(s, t),
        nu_trace,
        PeriodicFn::zero(n_nodes),
        0.0,
        t_end,
        dt,
    )
}
