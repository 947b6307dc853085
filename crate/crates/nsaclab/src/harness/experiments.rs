//! The experiment runners behind the CLI subcommands. Every runner writes
//! CSV/JSON artifacts into the output directory and returns the list of file
//! names; `run` wraps them with a manifest.

use super::{fit_rate, io, HarnessError, RunConfig};
use crate::diffuse::{zero_level_set, MacSolver, SpectralSolver};
use crate::expansion::{h1_evolution, leading_order_value, C2Batch, G0Field};
use crate::field::{BoundaryTag, Grid2, ScalarField2D};
use crate::geometry::{Interface, PeriodicFn, StaticMotion};
use crate::profile::{cutoff_zeta, eta_blend, expansion_constants, optimal_profile, DoubleWell, QuarticWell};
use crate::sharp::{mean_radius, FrontTracker};
use crate::spectral::{min_eigenvalue, min_eigenvalue_line, LinearizedOperator};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Run `n_items` independent jobs on up to `threads` workers, collecting the
/// results in index order (so downstream files are scheduling-independent).
fn run_indexed<T, F>(n_items: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let results: Mutex<Vec<Option<T>>> = Mutex::new((0..n_items).map(|_| None).collect());
    let counter = AtomicUsize::new(0);
    let workers = threads.clamp(1, n_items.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = counter.fetch_add(1, Ordering::SeqCst);
                if idx >= n_items {
                    break;
                }
                let value = f(idx);
                results.lock().unwrap()[idx] = Some(value);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|x| x.expect("all items computed"))
        .collect()
}

// --------------------------------- profile ----------------------------------

pub fn run_profile(config: &RunConfig, out: &Path) -> Result<Vec<String>, HarnessError> {
    let theta = optimal_profile(&QuarticWell, config.profile.half_width, config.profile.nodes)?;
    let eta = eta_blend(theta.grid);
    let consts = expansion_constants(&theta, &eta, &|_| 1.0);
    let sigma = crate::profile::surface_tension(&theta);

    io::write_profile_csv(&out.join("theta0.csv"), &theta)?;
    io::write_profile_csv(&out.join("eta.csv"), &eta)?;
    let summary = serde_json::json!({
        "sigma": sigma,
        "sigma_eta_unit_viscosity": consts.sigma_eta,
        "sigma0": consts.sigma0,
        "sigma0_eta_sq": consts.sigma0_eta_sq,
        "sigma2": consts.sigma2,
        "decay_rate": theta.decay_rate,
        "half_width": config.profile.half_width,
        "nodes": config.profile.nodes,
    });
    std::fs::write(
        out.join("constants.json"),
        serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    Ok(vec![
        "theta0.csv".into(),
        "eta.csv".into(),
        "constants.json".into(),
    ])
}

// --------------------------------- simulate ---------------------------------

fn initial_field(config: &RunConfig, grid: Grid2, bc: BoundaryTag) -> Result<ScalarField2D, HarnessError> {
    let tub = config.build_tube()?;
    let theta = optimal_profile(&QuarticWell, config.profile.half_width, 2049)?;
    let zeta = cutoff_zeta(config.effective_delta());
    let eps = config.model.epsilon;
    Ok(ScalarField2D::from_fn(grid, bc, |x, y| {
        let d = tub.signed_distance([x, y]).value;
        leading_order_value(eps, d, &theta, &zeta)
    }))
}

pub fn run_simulate(config: &RunConfig, out: &Path) -> Result<Vec<String>, HarnessError> {
    let [nx, ny] = config.domain.cells;
    let [lx, ly] = config.domain.size;
    let t_end = config.model.t_end;
    let mut rows = vec![];
    let mut outputs = vec![];

    let record = |rows: &mut Vec<Vec<f64>>,
                  t: f64,
                  e: crate::diffuse::EnergyReport,
                  div: f64,
                  radius: f64| {
        rows.push(vec![
            t,
            e.kinetic,
            e.interfacial,
            e.total,
            e.dissipation_rate,
            div,
            radius,
        ]);
    };

    if config.domain.scheme == "spectral" {
        let grid = Grid2::periodic(nx, ny, lx, ly);
        let c0 = initial_field(config, grid, BoundaryTag::Periodic)?;
        let mut solver = SpectralSolver::new(grid, config.model_params(), c0);
        let every = ((t_end / solver_dt(&solver.params, solver.auto_dt())) as usize / 200).max(1);
        let mut k = 0usize;
        while solver.state.t < t_end - 1e-14 {
            solver.step()?;
            if k % every == 0 {
                let radius = zero_level_set(&solver.scalar_field(), 128)
                    .map(|i| mean_radius(&i))
                    .unwrap_or(f64::NAN);
                record(&mut rows, solver.state.t, solver.energy(), solver.divergence_max(), radius);
            }
            k += 1;
        }
        io::write_field(&out.join("field_final.nslb"), &solver.scalar_field(), solver.state.t)?;
        outputs.push("field_final.nslb".into());
        if let Ok(iface) = zero_level_set(&solver.scalar_field(), 128) {
            io::write_interface_csv(&out.join("interface_final.csv"), &iface)?;
            outputs.push("interface_final.csv".into());
        }
    } else {
        let grid = Grid2::cell_centered(nx, ny, lx, ly);
        let c0 = initial_field(config, grid, BoundaryTag::DirichletConst(-1.0))?;
        let mut solver = MacSolver::new(grid, config.model_params(), c0);
        let every = ((t_end / solver_dt(&solver.params, solver.auto_dt())) as usize / 200).max(1);
        let mut k = 0usize;
        while solver.state.t < t_end - 1e-14 {
            solver.step()?;
            if k % every == 0 {
                let radius = zero_level_set(&solver.scalar_field(), 128)
                    .map(|i| mean_radius(&i))
                    .unwrap_or(f64::NAN);
                record(&mut rows, solver.state.t, solver.energy(), solver.divergence_max(), radius);
            }
            k += 1;
        }
        io::write_field(&out.join("field_final.nslb"), &solver.scalar_field(), solver.state.t)?;
        outputs.push("field_final.nslb".into());
    }

    io::write_csv(
        &out.join("diagnostics.csv"),
        "t,kinetic,interfacial,total,dissipation,div_norm,radius",
        &rows,
    )?;
    outputs.push("diagnostics.csv".into());
    Ok(outputs)
}

fn solver_dt(params: &crate::diffuse::ModelParams, auto: f64) -> f64 {
    if params.dt > 0.0 {
        params.dt
    } else {
        auto
    }
}

// ----------------------------------- mcf ------------------------------------

pub fn run_mcf(config: &RunConfig, out: &Path) -> Result<Vec<String>, HarnessError> {
    let iface = config.build_interface()?;
    let r0 = mean_radius(&iface);
    let zero_vel = |_x: crate::num::Vec2, _t: f64| [0.0, 0.0];
    let mut tracker = FrontTracker::new(iface, &zero_vel, true);
    let dt = if config.model.dt > 0.0 {
        config.model.dt
    } else {
        2e-5 * r0 * r0
    };
    let t_end = config.model.t_end;
    let mut rows = vec![];
    let mut t = 0.0;
    while t < t_end - 1e-14 {
        tracker.step(dt.min(t_end - t))?;
        t = tracker.state.time;
        let iface = &tracker.state.interface;
        let exact = (r0 * r0 - 2.0 * t).max(0.0).sqrt();
        rows.push(vec![t, mean_radius(iface), iface.area(), iface.length(), exact]);
    }
    io::write_csv(&out.join("mcf.csv"), "t,radius,area,length,exact_radius", &rows)?;
    io::write_interface_csv(&out.join("interface_final.csv"), &tracker.state.interface)?;
    Ok(vec!["mcf.csv".into(), "interface_final.csv".into()])
}

// --------------------------------- converge ---------------------------------

pub struct ConvergeItem {
    pub eps: f64,
    pub cells: usize,
    pub radius: f64,
    pub reference: f64,
    pub error: f64,
    pub final_field: ScalarField2D,
}

/// One Allen-Cahn shrinking-circle run at a given epsilon and resolution,
/// compared against the front-tracking reference radius at the final time.
pub fn converge_item(
    center: [f64; 2],
    r0: f64,
    domain: [f64; 2],
    delta: f64,
    eps: f64,
    cells: usize,
    t_end: f64,
    reference_radius: f64,
) -> Result<ConvergeItem, HarnessError> {
    let grid = Grid2::periodic(cells, cells, domain[0], domain[1]);
    let theta = optimal_profile(&QuarticWell, 30.0, 2049)?;
    let zeta = cutoff_zeta(delta);
    let c0 = ScalarField2D::from_fn(grid, BoundaryTag::Periodic, |x, y| {
        let d = r0 - ((x - center[0]).powi(2) + (y - center[1]).powi(2)).sqrt();
        leading_order_value(eps, d, &theta, &zeta)
    });
    let mut params = crate::diffuse::ModelParams::standard(eps);
    params.coupled = false;
    params.dt = 0.05 * eps * eps;
    let steps = (t_end / params.dt).round() as usize;
    params.dt = t_end / steps as f64;
    let mut solver = SpectralSolver::new(grid, params, c0);
    for _ in 0..steps {
        solver.step()?;
    }
    let iface = zero_level_set(&solver.scalar_field(), 128)?;
    let radius = mean_radius(&iface);
    Ok(ConvergeItem {
        eps,
        cells,
        radius,
        reference: reference_radius,
        error: (radius - reference_radius).abs(),
        final_field: solver.scalar_field(),
    })
}

/// Front-tracking reference radius for the shrinking circle at `t_end`.
pub fn mcf_reference_radius(r0: f64, nodes: usize, t_end: f64) -> Result<f64, HarnessError> {
    let iface = Interface::circle([0.0, 0.0], r0, nodes, 0.0);
    let zero_vel = |_x: crate::num::Vec2, _t: f64| [0.0, 0.0];
    let mut tracker = FrontTracker::new(iface, &zero_vel, true);
    tracker.run_to(t_end, 2e-5 * r0 * r0)?;
    Ok(mean_radius(&tracker.state.interface))
}

pub fn run_converge(config: &RunConfig, out: &Path) -> Result<Vec<String>, HarnessError> {
    let r0 = config.geometry.radius;
    let center = config.geometry.center;
    let t_end = config.model.t_end;
    let delta = config.effective_delta();
    let domain = config.domain.size;
    let reference = mcf_reference_radius(r0, config.geometry.nodes, t_end)?;

    let items: Vec<Result<ConvergeItem, HarnessError>> = run_indexed(
        config.sweep.epsilons.len(),
        config.run.threads,
        |idx| {
            converge_item(
                center,
                r0,
                domain,
                delta,
                config.sweep.epsilons[idx],
                config.sweep.grids[idx],
                t_end,
                reference,
            )
        },
    );
    let mut rows = vec![];
    let mut points = vec![];
    for item in items {
        let item = item?;
        rows.push(vec![
            item.eps,
            item.cells as f64,
            item.radius,
            item.reference,
            item.error,
        ]);
        points.push((item.eps, item.error));
    }
    io::write_csv(&out.join("errors.csv"), "eps,cells,radius,reference,error", &rows)?;
    let report = fit_rate(&points, Some(1.5))?;
    std::fs::write(
        out.join("rate.json"),
        serde_json::to_string_pretty(&report).unwrap(),
    )?;
    Ok(vec!["errors.csv".into(), "rate.json".into()])
}

// --------------------------------- spectrum ---------------------------------

pub struct SpectrumItem {
    pub eps: f64,
    pub lambda_min: f64,
    pub residual: f64,
}

pub fn spectrum_item(
    center: [f64; 2],
    r0: f64,
    domain: [f64; 2],
    delta: f64,
    eps: f64,
    cells: usize,
    seed: u64,
) -> Result<SpectrumItem, HarnessError> {
    let grid = Grid2::periodic(cells, cells, domain[0], domain[1]);
    let theta = optimal_profile(&QuarticWell, 30.0, 2049)?;
    let zeta = cutoff_zeta(delta);
    let c_a = ScalarField2D::from_fn(grid, BoundaryTag::Periodic, |x, y| {
        let d = r0 - ((x - center[0]).powi(2) + (y - center[1]).powi(2)).sqrt();
        leading_order_value(eps, d, &theta, &zeta)
    });
    let op = LinearizedOperator::from_field(&c_a, eps, &QuarticWell);
    let (lambda, vec) = min_eigenvalue(&op, 1e-6, seed)?;
    let residual = op.residual_norm(&vec, lambda);
    Ok(SpectrumItem {
        eps,
        lambda_min: lambda,
        residual,
    })
}

pub fn run_spectrum(config: &RunConfig, out: &Path) -> Result<Vec<String>, HarnessError> {
    let r0 = config.geometry.radius;
    let center = config.geometry.center;
    let delta = config.effective_delta();
    let domain = config.domain.size;
    let grids: Vec<usize> = if config.sweep.grids.len() == config.sweep.epsilons.len() {
        config.sweep.grids.clone()
    } else {
        // resolve eps/h >= 4 automatically
        config
            .sweep
            .epsilons
            .iter()
            .map(|&e| {
                let h = e / 4.0;
                let n = (domain[0] / h).ceil() as usize;
                n.next_power_of_two().max(64)
            })
            .collect()
    };

    let items: Vec<Result<SpectrumItem, HarnessError>> = run_indexed(
        config.sweep.epsilons.len(),
        config.run.threads,
        |idx| {
            spectrum_item(
                center,
                r0,
                domain,
                delta,
                config.sweep.epsilons[idx],
                grids[idx],
                config.run.seed,
            )
        },
    );
    let mut rows = vec![];
    let mut neg_points = vec![];
    for (k, item) in items.into_iter().enumerate() {
        let item = item?;
        rows.push(vec![item.eps, grids[k] as f64, item.lambda_min, item.residual]);
        if item.lambda_min < 0.0 {
            neg_points.push((item.eps, -item.lambda_min));
        }
    }
    io::write_csv(&out.join("spectrum.csv"), "eps,cells,lambda_min,residual", &rows)?;

    // 1D zero-mode check.
    let theta = optimal_profile(&QuarticWell, 30.0, 4097)?;
    let l = 20.0;
    let n = 4001;
    let h = 2.0 * l / (n - 1) as f64;
    let potential: Vec<f64> = (0..n)
        .map(|i| QuarticWell.d2f(theta.eval(-l + i as f64 * h)))
        .collect();
    let (lam0, vec0) = min_eigenvalue_line(&potential, h);
    let tp: Vec<f64> = (0..n).map(|i| theta.eval_deriv(-l + i as f64 * h)).collect();
    let cosine = {
        let num: f64 = vec0.iter().zip(&tp).map(|(a, b)| a * b).sum();
        let na: f64 = vec0.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb: f64 = tp.iter().map(|a| a * a).sum::<f64>().sqrt();
        (num / (na * nb)).abs()
    };
    let exponent = if neg_points.len() >= 3 {
        Some(fit_rate(&neg_points, None)?.order)
    } else {
        None
    };
    let summary = serde_json::json!({
        "line_zero_mode_lambda": lam0,
        "line_zero_mode_cosine_distance": 1.0 - cosine,
        "neg_lambda_eps_exponent": exponent,
    });
    std::fs::write(
        out.join("spectrum_summary.json"),
        serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    Ok(vec!["spectrum.csv".into(), "spectrum_summary.json".into()])
}

// --------------------------------- expansion --------------------------------

pub fn run_expansion(config: &RunConfig, out: &Path) -> Result<Vec<String>, HarnessError> {
    let tub = config.build_tube()?;
    let r = config.geometry.radius;
    let n_s = config.geometry.nodes;
    let theta = optimal_profile(&QuarticWell, config.profile.half_width, config.profile.nodes)?;

    // Kinematic defect field for the pure curvature flow of the circle.
    let vel = |_x: crate::num::Vec2| [0.0, 0.0];
    let speed = move |_s: f64| 1.0 / r;
    let band = 0.02 * r;
    let g0 = G0Field {
        tub: &tub,
        velocity: &vel,
        normal_speed: &speed,
        band,
    };
    let mut rows = vec![];
    for j in 0..n_s {
        let s = j as f64 / n_s as f64;
        let on = g0.on_gamma(s);
        rows.push(vec![s, on, -1.0 / (r * r)]);
    }
    io::write_csv(&out.join("g0.csv"), "s,g0_on_gamma,exact", &rows)?;

    // Fiber corrector base solutions.
    let c2 = C2Batch::build(
        &theta,
        &QuarticWell,
        PeriodicFn::constant(1.0, n_s),
        PeriodicFn::constant(1.0, n_s),
    )?;
    let c2_rows: Vec<Vec<f64>> = (0..theta.grid.n)
        .step_by(8)
        .map(|i| {
            let rho = theta.grid.node(i);
            vec![rho, c2.wa.values[i], c2.wb.values[i]]
        })
        .collect();
    io::write_csv(&out.join("c2_base.csv"), "rho,wa,wb", &c2_rows)?;

    // First-order height equation on the static circle with zero traces.
    let motion = StaticMotion(tub.interface.clone());
    let g0_on: Vec<f64> = (0..n_s)
        .map(|j| g0.on_gamma(j as f64 / n_s as f64))
        .collect();
    let g0_fn = PeriodicFn::new(g0_on);
    let hist = h1_evolution(
        &motion,
        &|_, _| 0.0,
        &|_, _| 0.0,
        &move |s, _| g0_fn.eval(s),
        &theta,
        n_s,
        config.model.t_end.min(0.05),
        1e-3,
    )?;
    io::write_height_csv(&out.join("h1.csv"), &hist)?;

    Ok(vec!["g0.csv".into(), "c2_base.csv".into(), "h1.csv".into()])
}
