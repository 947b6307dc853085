//! Double-well potentials, the optimal transition profile, cutoff functions
//! and the scalar constants entering the expansion formulas.
//!
//! The optimal profile solves `-w'' + f'(w) = 0` on the line with limits
//! `±1` and `w(0) = 0`. For the standard quartic well `f(c) = (c^2-1)^2/8`
//! the solution is `tanh(rho/2)`, which every solver here is tested against.

use crate::num::cheb;
use crate::num::interp::quintic_uniform;
use crate::num::quad::{linear_fit, trapezoid};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("Newton iteration on the collocation system stalled (residual {residual:.3e})")]
    NonconvergentBvp { residual: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A smooth double-well potential with minima at `±1`.
pub trait DoubleWell: Send + Sync {
    fn f(&self, c: f64) -> f64;
    fn df(&self, c: f64) -> f64;
    fn d2f(&self, c: f64) -> f64;
    fn d3f(&self, c: f64) -> f64;
}

/// The standard quartic well `f(c) = (c^2 - 1)^2 / 8`.
///
/// `f''(±1) = 1`, `f''(0) = -1/2`, and the optimal profile is `tanh(rho/2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuarticWell;

impl DoubleWell for QuarticWell {
    fn f(&self, c: f64) -> f64 {
        let t = c * c - 1.0;
        t * t / 8.0
    }
    fn df(&self, c: f64) -> f64 {
        0.5 * c * (c * c - 1.0)
    }
    fn d2f(&self, c: f64) -> f64 {
        0.5 * (3.0 * c * c - 1.0)
    }
    fn d3f(&self, c: f64) -> f64 {
        3.0 * c
    }
}

/// Uniform grid on `[-half_width, half_width]` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGrid {
    pub half_width: f64,
    pub n: usize,
}

impl LineGrid {
    pub fn new(half_width: f64, n: usize) -> Self {
        assert!(n >= 8 && half_width > 0.0);
        Self { half_width, n }
    }

    #[inline]
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }
}

type AnalyticFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tabulated function on a truncated line with far-field limits and decay
/// metadata. Evaluation interpolates the table inside `[-L, L]` and follows
/// the fitted exponential tail outside; an optional analytic backing makes
/// piecewise-exact functions (like the cutoff) evaluate without interpolation
/// error.
#[derive(Clone)]
pub struct Profile {
    pub grid: LineGrid,
    pub values: Vec<f64>,
    pub deriv: Vec<f64>,
    /// `(limit at -inf, limit at +inf)`.
    pub far_limits: (f64, f64),
    pub decay_rate: f64,
    /// Tail amplitudes: `w(rho) ~ limit -/+ C exp(-alpha |rho|)` fitted on the
    /// outer thirds; `(c_minus, c_plus)` are signed.
    pub tail_coeff: (f64, f64),
    analytic: Option<(AnalyticFn, AnalyticFn)>,
}

impl std::fmt::Debug for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Profile")
            .field("grid", &self.grid)
            .field("far_limits", &self.far_limits)
            .field("decay_rate", &self.decay_rate)
            .finish()
    }
}

impl Profile {
    pub fn from_table(
        grid: LineGrid,
        values: Vec<f64>,
        deriv: Vec<f64>,
        far_limits: (f64, f64),
        decay_rate: f64,
    ) -> Self {
        let tail_coeff = fit_tail_coeffs(&grid, &values, far_limits, decay_rate);
        Self {
            grid,
            values,
            deriv,
            far_limits,
            decay_rate,
            tail_coeff,
            analytic: None,
        }
    }

    /// Build from closures for value and derivative; the table is still
    /// populated so dumps and quadrature see the same function.
    pub fn from_analytic<F, G>(grid: LineGrid, f: F, df: G, far_limits: (f64, f64), decay_rate: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let values: Vec<f64> = grid.nodes().iter().map(|&x| f(x)).collect();
        let deriv: Vec<f64> = grid.nodes().iter().map(|&x| df(x)).collect();
        let mut p = Self::from_table(grid, values, deriv, far_limits, decay_rate);
        p.analytic = Some((Arc::new(f), Arc::new(df)));
        p
    }

    pub fn eval(&self, rho: f64) -> f64 {
        if let Some((f, _)) = &self.analytic {
            return f(rho);
        }
        let l = self.grid.half_width;
        if rho > l {
            self.far_limits.1 - self.tail_coeff.1 * (-self.decay_rate * rho).exp()
        } else if rho < -l {
            self.far_limits.0 + self.tail_coeff.0 * (self.decay_rate * rho).exp()
        } else {
            quintic_uniform(&self.values, -l, self.grid.h(), rho)
        }
    }

    pub fn eval_deriv(&self, rho: f64) -> f64 {
        if let Some((_, df)) = &self.analytic {
            return df(rho);
        }
        let l = self.grid.half_width;
        if rho > l {
            self.decay_rate * self.tail_coeff.1 * (-self.decay_rate * rho).exp()
        } else if rho < -l {
            self.decay_rate * self.tail_coeff.0 * (self.decay_rate * rho).exp()
        } else {
            quintic_uniform(&self.deriv, -l, self.grid.h(), rho)
        }
    }
}

fn fit_tail_coeffs(grid: &LineGrid, values: &[f64], far_limits: (f64, f64), alpha: f64) -> (f64, f64) {
    // Tail amplitude from the outermost nodes; robust against sign.
    let l = grid.half_width;
    let n = grid.n;
    let cm = (values[0] - far_limits.0) * (alpha * (-l)).exp().recip();
    let cp = (far_limits.1 - values[n - 1]) * (-alpha * l).exp().recip();
    (cm, cp)
}

// --------------------------- optimal profile -------------------------------

/// Solve `-w'' + f'(w) = 0`, `w(±inf) = ±1`, `w(0) = 0` by damped Newton on a
/// Chebyshev collocation system over `[-L, L]` with Robin closures matching
/// the exponential tails, then resample onto a uniform grid of `n` nodes.
pub fn optimal_profile(well: &dyn DoubleWell, l: f64, n: usize) -> Result<Profile, ProfileError> {
    let alpha_p = well.d2f(1.0);
    let alpha_m = well.d2f(-1.0);
    if alpha_p <= 0.0 || alpha_m <= 0.0 {
        return Err(ProfileError::InvalidParameter(
            "double well must be nondegenerate at the minima".into(),
        ));
    }
    if n < 256 {
        return Err(ProfileError::InvalidParameter("need at least 256 output nodes".into()));
    }
    if l < 20.0 / alpha_p.sqrt().min(alpha_m.sqrt()) {
        return Err(ProfileError::InvalidParameter(format!(
            "truncation half-width {l} too small for the well's decay rate"
        )));
    }

    // Collocation size: resolution grows weakly with L; 0 must be a node.
    let mut m = ((l * 18.0) as usize).max(301);
    if m % 2 == 0 {
        m += 1;
    }
    let nodes = cheb::lobatto_nodes(m, -l, l);
    let d1 = cheb::diff_matrix(&nodes);
    let d2 = &d1 * &d1;
    let mid = m / 2; // node at rho = 0 (m odd)
    debug_assert!(nodes[mid].abs() < 1e-9);

    let am = alpha_m.sqrt();
    let ap = alpha_p.sqrt();
    // Initial guess with the right decay scale.
    let mut w = DVector::from_iterator(m, nodes.iter().map(|&x| (0.5 * (ap + am) / 2.0 * x).tanh()));

    // Bordered Newton: unknowns (w, lambda) with the translation generator w'
    // absorbing the near-null direction, plus the normalization w(0) = 0.
    let mut converged = false;
    let mut last_res = f64::INFINITY;
    for _ in 0..60 {
        let wp = &d1 * &w;
        let mut residual = DVector::zeros(m + 1);
        for i in 1..m - 1 {
            let lap: f64 = (&d2 * &w)[i];
            residual[i] = lap - well.df(w[i]);
        }
        // Robin rows: w'(-L) - a_m (w(-L) + 1) = 0, w'(L) + a_p (w(L) - 1) = 0.
        residual[0] = wp[0] - am * (w[0] + 1.0);
        residual[m - 1] = wp[m - 1] + ap * (w[m - 1] - 1.0);
        residual[m] = w[mid];

        // The roundoff floor of the spectral second-derivative matrix sits
        // near 1e-10 at these resolutions; anything below 1e-9 is converged.
        last_res = residual.amax();
        if last_res < 1e-9 {
            converged = true;
            break;
        }

        let mut jac = DMatrix::zeros(m + 1, m + 1);
        for i in 1..m - 1 {
            for j in 0..m {
                jac[(i, j)] = d2[(i, j)];
            }
            jac[(i, i)] -= well.d2f(w[i]);
        }
        for j in 0..m {
            jac[(0, j)] = d1[(0, j)];
            jac[(m - 1, j)] = d1[(m - 1, j)];
        }
        jac[(0, 0)] -= am;
        jac[(m - 1, m - 1)] += ap;
        jac[(m, mid)] = 1.0;
        // Border column: translation direction.
        for i in 0..m {
            jac[(i, m)] = wp[i];
        }

        let lu = jac.lu();
        let delta = match lu.solve(&(-&residual)) {
            Some(d) => d,
            None => return Err(ProfileError::NonconvergentBvp { residual: last_res }),
        };

        // Backtracking damping on the residual norm.
        let mut step = 1.0;
        let base_norm = residual.norm();
        loop {
            let mut trial = w.clone();
            for i in 0..m {
                trial[i] += step * delta[i];
            }
            let trial_res = bvp_residual_norm(well, &d1, &d2, &trial, am, ap, mid);
            if trial_res < base_norm || step < 1e-4 {
                w = trial;
                break;
            }
            step *= 0.5;
        }
    }
    if !converged {
        return Err(ProfileError::NonconvergentBvp { residual: last_res });
    }

    let wp = &d1 * &w;
    let grid = LineGrid::new(l, n);
    let w_slice: Vec<f64> = w.iter().copied().collect();
    let wp_slice: Vec<f64> = wp.iter().copied().collect();
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| cheb::bary_eval(&nodes, &w_slice, x))
        .collect();
    let mut deriv: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| cheb::bary_eval(&nodes, &wp_slice, x))
        .collect();
    continue_derivative_tails(&grid, &mut deriv, am, ap);

    Ok(Profile::from_table(grid, values, deriv, (-1.0, 1.0), ap))
}

/// Below the spectral roundoff floor the collocation derivative is noise;
/// continue it by the exponential tail instead (matched at the last reliable
/// node) so the stored derivative stays positive and monotone.
fn continue_derivative_tails(grid: &LineGrid, deriv: &mut [f64], alpha_m: f64, alpha_p: f64) {
    let floor = 1e-10;
    let n = grid.n;
    if let Some(i_star) = (0..n).rev().find(|&i| deriv[i] >= floor) {
        for i in i_star + 1..n {
            deriv[i] = deriv[i_star] * (-alpha_p * (grid.node(i) - grid.node(i_star))).exp();
        }
    }
    if let Some(i_star) = (0..n).find(|&i| deriv[i] >= floor) {
        for i in 0..i_star {
            deriv[i] = deriv[i_star] * (-alpha_m * (grid.node(i_star) - grid.node(i)).abs()).exp();
        }
    }
}

fn bvp_residual_norm(
    well: &dyn DoubleWell,
    d1: &DMatrix<f64>,
    d2: &DMatrix<f64>,
    w: &DVector<f64>,
    am: f64,
    ap: f64,
    mid: usize,
) -> f64 {
    let m = w.len();
    let wp = d1 * w;
    let lap = d2 * w;
    let mut sq = 0.0;
    for i in 1..m - 1 {
        sq += (lap[i] - well.df(w[i])).powi(2);
    }
    sq += (wp[0] - am * (w[0] + 1.0)).powi(2);
    sq += (wp[m - 1] + ap * (w[m - 1] - 1.0)).powi(2);
    sq += w[mid].powi(2);
    sq.sqrt()
}

/// Fit the exponential approach rate of `values -> limit` on the outer third
/// of the positive axis: least squares on `log|values - limit|`.
pub fn fit_decay_rate(grid: &LineGrid, values: &[f64], _limit_m: f64, limit_p: f64) -> Option<f64> {
    let n = grid.n;
    let start = n - n / 3;
    let mut xs = vec![];
    let mut ys = vec![];
    for i in start..n {
        let gap = (limit_p - values[i]).abs();
        if gap > 1e-300 {
            xs.push(grid.node(i));
            ys.push(gap.ln());
        }
    }
    if xs.len() < 4 {
        return None;
    }
    let (_, slope, _) = linear_fit(&xs, &ys);
    Some(-slope)
}

// ------------------------------- constants ---------------------------------

/// Surface tension `sigma = int w'(rho)^2 d rho` by trapezoid quadrature with
/// the analytic exponential tail beyond the truncation.
pub fn surface_tension(p: &Profile) -> f64 {
    let sq: Vec<f64> = p.deriv.iter().map(|d| d * d).collect();
    let bulk = trapezoid(&sq, p.grid.h());
    // Tail: derivative ~ alpha C e^{-alpha|rho|}; integral of its square.
    let a = p.decay_rate;
    let tail_p = (a * p.tail_coeff.1).powi(2) * (-2.0 * a * p.grid.half_width).exp() / (2.0 * a);
    let tail_m = (a * p.tail_coeff.0).powi(2) * (-2.0 * a * p.grid.half_width).exp() / (2.0 * a);
    bulk + tail_p + tail_m
}

/// The constants of the expansion formulas.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ExpansionConstants {
    /// `int nu(theta_0) eta'(rho) d rho`.
    pub sigma_eta: f64,
    /// Normalization used in the evolution equations: `int theta_0'(rho)^2 d rho`.
    pub sigma0: f64,
    /// The literal `int eta'(rho)^2 d rho` reading, exposed for comparison.
    pub sigma0_eta_sq: f64,
    /// `int eta(rho) theta_0'(rho)^2 d rho`.
    pub sigma2: f64,
}

/// Quadrature of the expansion constants. `sigma0` carries the `theta_0'`
/// normalization that the compatibility conditions pair with `int B theta_0'`;
/// the `eta'` reading is reported alongside under its own name.
pub fn expansion_constants(
    p: &Profile,
    eta: &Profile,
    visc: &dyn Fn(f64) -> f64,
) -> ExpansionConstants {
    let grid = &p.grid;
    let h = grid.h();
    let mut nu_etap = vec![0.0; grid.n];
    let mut etap_sq = vec![0.0; grid.n];
    let mut eta_thp2 = vec![0.0; grid.n];
    let mut thp2 = vec![0.0; grid.n];
    for i in 0..grid.n {
        let rho = grid.node(i);
        let ep = eta.eval_deriv(rho);
        let tp = p.deriv[i];
        nu_etap[i] = visc(p.values[i]) * ep;
        etap_sq[i] = ep * ep;
        eta_thp2[i] = eta.eval(rho) * tp * tp;
        thp2[i] = tp * tp;
    }
    ExpansionConstants {
        sigma_eta: trapezoid(&nu_etap, h),
        sigma0: trapezoid(&thp2, h),
        sigma0_eta_sq: trapezoid(&etap_sq, h),
        sigma2: trapezoid(&eta_thp2, h),
    }
}

// ------------------------------ blend and cutoff ----------------------------

/// Default monotone blend `eta(rho) = (1 + tanh rho)/2`: 0 at `-inf`, 1 at
/// `+inf`, smooth and strictly monotone.
pub fn eta_blend(grid: LineGrid) -> Profile {
    Profile::from_analytic(
        grid,
        |rho| 0.5 * (1.0 + rho.tanh()),
        |rho| 0.5 / rho.cosh().powi(2),
        (0.0, 1.0),
        2.0,
    )
}

/// Exact-support variant: `eta = 0` on `(-inf, -1]`, `1` on `[1, inf)`,
/// strictly increasing in between, C-infinity everywhere.
pub fn eta_exact_support(grid: LineGrid) -> Profile {
    Profile::from_analytic(
        grid,
        |rho| smooth_step01(0.5 * (rho + 1.0)),
        |rho| 0.5 * smooth_step01_deriv(0.5 * (rho + 1.0)),
        (0.0, 1.0),
        2.0,
    )
}

fn bump(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn bump_deriv(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp() / (t * t)
    }
}

/// C-infinity monotone step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step01(t: f64) -> f64 {
    let a = bump(t);
    let b = bump(1.0 - t);
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        1.0
    } else {
        a / (a + b)
    }
}

pub fn smooth_step01_deriv(t: f64) -> f64 {
    let a = bump(t);
    let b = bump(1.0 - t);
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        let da = bump_deriv(t);
        let db = -bump_deriv(1.0 - t);
        (da * (a + b) - a * (da + db)) / (a + b).powi(2)
    }
}

/// Smooth cutoff: `zeta = 1` for `|z| <= delta`, `0` for `|z| >= 2 delta`,
/// with `0 <= -z zeta'(z) <= 4` in the transition (asserted at construction).
pub fn cutoff_zeta(delta: f64) -> Profile {
    assert!(delta > 0.0, "cutoff width must be positive");
    let value = move |z: f64| {
        let t = (z.abs() - delta) / delta;
        1.0 - smooth_step01(t)
    };
    let deriv = move |z: f64| {
        let t = (z.abs() - delta) / delta;
        -smooth_step01_deriv(t) * z.signum() / delta
    };
    let grid = LineGrid::new(2.5 * delta, 1025);
    let p = Profile::from_analytic(grid, value, deriv, (0.0, 0.0), 1.0 / delta);
    // eq-level constraint on the transition slope.
    let mut worst: f64 = 0.0;
    for i in 0..4096 {
        let z = delta + (i as f64 + 0.5) / 4096.0 * delta;
        for zz in [z, -z] {
            let v = -zz * p.eval_deriv(zz);
            assert!(v >= -1e-12, "cutoff slope has the wrong sign at {zz}");
            worst = worst.max(v);
        }
    }
    assert!(worst <= 4.0, "cutoff slope bound violated: {worst}");
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta0() -> Profile {
        optimal_profile(&QuarticWell, 30.0, 4097).expect("profile solve")
    }

    #[test]
    fn optimal_profile_matches_tanh() {
        let p = theta0();
        let mut sup = 0.0_f64;
        for i in 0..p.grid.n {
            let rho = p.grid.node(i);
            sup = sup.max((p.values[i] - (rho / 2.0).tanh()).abs());
        }
        assert!(sup <= 1e-8, "sup error {sup:.3e}");
        assert!(p.eval(0.0).abs() <= 1e-10);
    }

    #[test]
    fn profile_ode_residual_small() {
        // Independent check: differentiate the tabulated derivative numerically
        // and plug into the equation.
        let p = theta0();
        let h = p.grid.h();
        let mut sup = 0.0_f64;
        for i in 2..p.grid.n - 2 {
            let w2 = (-p.deriv[i + 2] + 8.0 * p.deriv[i + 1] - 8.0 * p.deriv[i - 1] + p.deriv[i - 2])
                / (12.0 * h);
            let res = w2 - QuarticWell.df(p.values[i]);
            sup = sup.max(res.abs());
        }
        assert!(sup < 1e-7, "residual {sup:.3e}");
    }

    #[test]
    fn equipartition_holds() {
        let p = theta0();
        let mut sup = 0.0_f64;
        for i in 0..p.grid.n {
            let e = 0.5 * p.deriv[i] * p.deriv[i] - QuarticWell.f(p.values[i]);
            sup = sup.max(e.abs());
        }
        assert!(sup <= 1e-8, "equipartition residual {sup:.3e}");
    }

    #[test]
    fn derivative_positive_and_decay_rate_near_one() {
        let p = theta0();
        assert!(p.deriv.iter().all(|&d| d > 0.0));
        let alpha = fit_decay_rate(&p.grid, &p.values, -1.0, 1.0).unwrap();
        assert!((alpha - 1.0).abs() < 0.02, "fitted decay {alpha}");
    }

    #[test]
    fn surface_tension_standard_well() {
        let p = theta0();
        // Independent analytic oracle: int sech^4 u du = 4/3, so
        // int (1/4) sech^4(rho/2) d rho = 2/3.
        let grid = &p.grid;
        let oracle: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&r| 0.25 / (r / 2.0).cosh().powi(4))
            .collect();
        let oracle_val = trapezoid(&oracle, grid.h());
        assert!((oracle_val - 2.0 / 3.0).abs() < 1e-12);
        let sigma = surface_tension(&p);
        assert!((sigma - 2.0 / 3.0).abs() <= 1e-10, "sigma = {sigma:.12}");
    }

    #[test]
    fn surface_tension_scales_with_stretching() {
        // theta(lambda rho) has sigma scaled by lambda.
        let p = theta0();
        let lam = 1.7;
        let grid = p.grid;
        let vals: Vec<f64> = grid.nodes().iter().map(|&r| p.eval(lam * r)).collect();
        let der: Vec<f64> = grid.nodes().iter().map(|&r| lam * p.eval_deriv(lam * r)).collect();
        let q = Profile::from_table(grid, vals, der, (-1.0, 1.0), lam);
        let sigma = surface_tension(&q);
        assert!((sigma - lam * 2.0 / 3.0).abs() < 1e-8, "sigma = {sigma}");
    }

    #[test]
    fn surface_tension_zero_for_constant() {
        let grid = LineGrid::new(30.0, 512);
        let q = Profile::from_table(grid, vec![1.0; 512], vec![0.0; 512], (1.0, 1.0), 1.0);
        assert_eq!(surface_tension(&q), 0.0);
    }

    #[test]
    fn sigma_via_equipartition_matches() {
        let p = theta0();
        let vals: Vec<f64> = p.values.iter().map(|&v| 2.0 * QuarticWell.f(v)).collect();
        let via_f = trapezoid(&vals, p.grid.h());
        assert!((via_f - surface_tension(&p)).abs() < 1e-8);
    }

    #[test]
    fn interpolation_consistency_under_refinement() {
        let coarse = optimal_profile(&QuarticWell, 30.0, 2049).unwrap();
        let fine = optimal_profile(&QuarticWell, 30.0, 4097).unwrap();
        let mut sup = 0.0_f64;
        for k in 0..1000 {
            let rho = -29.0 + 58.0 * k as f64 / 999.0;
            sup = sup.max((coarse.eval(rho) - fine.eval(rho)).abs());
        }
        assert!(sup < 1e-9, "refinement drift {sup:.3e}");
    }

    #[test]
    fn expansion_constants_standard() {
        let p = theta0();
        let eta = eta_blend(p.grid);
        // nu constant: sigma_eta = nu * (eta(+inf) - eta(-inf)) = nu.
        let c = expansion_constants(&p, &eta, &|_| 3.25);
        assert!((c.sigma_eta - 3.25).abs() < 1e-10);
        // Point symmetry of eta and even theta0'^2: sigma2 = sigma / 2.
        assert!((c.sigma2 - 1.0 / 3.0).abs() < 1e-10);
        // theta0' reading: sigma0 = sigma = 2/3.
        assert!((c.sigma0 - 2.0 / 3.0).abs() < 1e-10);
        // eta' reading differs; for (1+tanh)/2 it is 1/3.
        assert!((c.sigma0_eta_sq - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn eta_exact_support_is_exact() {
        let eta = eta_exact_support(LineGrid::new(30.0, 1025));
        assert_eq!(eta.eval(-1.0), 0.0);
        assert_eq!(eta.eval(1.0), 1.0);
        assert_eq!(eta.eval(-5.0), 0.0);
        assert!(eta.eval(0.0) > 0.0 && eta.eval(0.0) < 1.0);
    }

    #[test]
    fn cutoff_satisfies_constraints() {
        let delta = 0.2;
        let z = cutoff_zeta(delta);
        assert_eq!(z.eval(0.0), 1.0);
        assert_eq!(z.eval(2.0 * delta), 0.0);
        assert_eq!(z.eval(-2.0 * delta), 0.0);
        assert_eq!(z.eval(0.9 * delta), 1.0);
        let mid = z.eval(1.5 * delta);
        assert!(mid > 0.0 && mid < 1.0);
    }
}
