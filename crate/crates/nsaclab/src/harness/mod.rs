//! Configuration, experiment orchestration, rate fitting and report emission.

pub mod experiments;
pub mod io;

use crate::geometry::{GeometryError, Interface, TubularMap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("rate fit rejected: {0}")]
    NonPositiveError(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("solver error: {0}")]
    Solver(String),
}

impl From<crate::diffuse::SolverError> for HarnessError {
    fn from(e: crate::diffuse::SolverError) -> Self {
        HarnessError::Solver(e.to_string())
    }
}

impl From<crate::sharp::SharpError> for HarnessError {
    fn from(e: crate::sharp::SharpError) -> Self {
        HarnessError::Solver(e.to_string())
    }
}

impl From<crate::profile::ProfileError> for HarnessError {
    fn from(e: crate::profile::ProfileError) -> Self {
        HarnessError::Solver(e.to_string())
    }
}

impl From<crate::expansion::ExpansionError> for HarnessError {
    fn from(e: crate::expansion::ExpansionError) -> Self {
        HarnessError::Solver(e.to_string())
    }
}

impl From<crate::inner_ode::InnerOdeError> for HarnessError {
    fn from(e: crate::inner_ode::InnerOdeError) -> Self {
        HarnessError::Solver(e.to_string())
    }
}

impl From<crate::spectral::SpectralError> for HarnessError {
    fn from(e: crate::spectral::SpectralError) -> Self {
        HarnessError::Solver(e.to_string())
    }
}

// ------------------------------- configuration ------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Profile,
    Simulate,
    Mcf,
    Converge,
    Spectrum,
    Expansion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

fn default_seed() -> u64 {
    1
}
fn default_threads() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(default = "default_shape")]
    pub shape: String, // circle | ellipse | csv
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_center")]
    pub center: [f64; 2],
    #[serde(default = "default_axes")]
    pub semi_axes: [f64; 2],
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Tube half-width; 0 selects a quarter of the smallest curvature radius.
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub csv_path: String,
}

fn default_shape() -> String {
    "circle".into()
}
fn default_radius() -> f64 {
    0.5
}
fn default_center() -> [f64; 2] {
    [1.0, 1.0]
}
fn default_axes() -> [f64; 2] {
    [0.5, 0.3]
}
fn default_nodes() -> usize {
    128
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            shape: default_shape(),
            radius: default_radius(),
            center: default_center(),
            semi_axes: default_axes(),
            nodes: default_nodes(),
            delta: 0.0,
            csv_path: String::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default = "default_size")]
    pub size: [f64; 2],
    #[serde(default = "default_cells")]
    pub cells: [usize; 2],
    #[serde(default = "default_scheme")]
    pub scheme: String, // spectral | mac
}

fn default_size() -> [f64; 2] {
    [2.0, 2.0]
}
fn default_cells() -> [usize; 2] {
    [128, 128]
}
fn default_scheme() -> String {
    "spectral".into()
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            size: default_size(),
            cells: default_cells(),
            scheme: default_scheme(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    #[serde(default = "default_nu")]
    pub nu_plus: f64,
    #[serde(default = "default_nu")]
    pub nu_minus: f64,
    #[serde(default)]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_true")]
    pub coupled: bool,
    #[serde(default = "default_capillary")]
    pub capillary: String, // tensor | laplace
}

fn default_eps() -> f64 {
    0.05
}
fn default_nu() -> f64 {
    1.0
}
fn default_t_end() -> f64 {
    0.01
}
fn default_true() -> bool {
    true
}
fn default_capillary() -> String {
    "tensor".into()
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            epsilon: default_eps(),
            nu_plus: default_nu(),
            nu_minus: default_nu(),
            dt: 0.0,
            t_end: default_t_end(),
            coupled: true,
            capillary: default_capillary(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_profile_nodes")]
    pub nodes: usize,
}

fn default_half_width() -> f64 {
    30.0
}
fn default_profile_nodes() -> usize {
    4097
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            half_width: default_half_width(),
            nodes: default_profile_nodes(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub grids: Vec<usize>,
    #[serde(default)]
    pub dts: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Field-level validation; returns warnings for soft issues.
    pub fn validate(&self) -> Result<Vec<String>, HarnessError> {
        let mut warnings = vec![];
        if self.run.threads == 0 {
            return Err(HarnessError::Config("run.threads must be at least 1".into()));
        }
        match self.geometry.shape.as_str() {
            "circle" | "ellipse" | "csv" => {}
            other => {
                return Err(HarnessError::Config(format!(
                    "geometry.shape: unknown shape '{other}' (circle|ellipse|csv)"
                )))
            }
        }
        if self.geometry.shape == "csv" && self.geometry.csv_path.is_empty() {
            return Err(HarnessError::Config(
                "geometry.csv_path required for shape = \"csv\"".into(),
            ));
        }
        if self.geometry.radius <= 0.0 {
            return Err(HarnessError::Config("geometry.radius must be positive".into()));
        }
        if self.geometry.nodes < 8 {
            return Err(HarnessError::Config("geometry.nodes must be at least 8".into()));
        }
        match self.domain.scheme.as_str() {
            "spectral" | "mac" => {}
            other => {
                return Err(HarnessError::Config(format!(
                    "domain.scheme: unknown scheme '{other}' (spectral|mac)"
                )))
            }
        }
        match self.model.capillary.as_str() {
            "tensor" | "laplace" => {}
            other => {
                return Err(HarnessError::Config(format!(
                    "model.capillary: unknown form '{other}' (tensor|laplace)"
                )))
            }
        }
        if self.domain.cells[0] < 8 || self.domain.cells[1] < 8 {
            return Err(HarnessError::Config("domain.cells must be at least 8".into()));
        }
        if self.model.epsilon <= 0.0 {
            return Err(HarnessError::Config("model.epsilon must be positive".into()));
        }
        // epsilon / tube compatibility: in experiments that build layered
        // fields, every referenced epsilon must satisfy eps <= delta / 4.
        let uses_layer_fields = matches!(
            self.run.kind,
            ExperimentKind::Simulate
                | ExperimentKind::Converge
                | ExperimentKind::Spectrum
                | ExperimentKind::Expansion
        );
        if uses_layer_fields {
            let delta = self.effective_delta();
            let mut all_eps = vec![self.model.epsilon];
            all_eps.extend_from_slice(&self.sweep.epsilons);
            for &eps in &all_eps {
                if eps > delta / 4.0 + 1e-12 {
                    return Err(HarnessError::Config(format!(
                        "epsilon {eps} exceeds delta/4 = {}; widen geometry.delta",
                        delta / 4.0
                    )));
                }
            }
        }
        // Soft warning when the configured tube is wider than the validated
        // quarter-curvature-radius bound (the projection is then only
        // single-valued where the caller guarantees it).
        let r_min = self.min_curvature_radius_estimate();
        if self.geometry.delta > 0.25 * r_min {
            warnings.push(format!(
                "geometry.delta = {} exceeds the validated bound {} (quarter of the \
                 smallest curvature radius); the tube map is used unchecked",
                self.geometry.delta,
                0.25 * r_min
            ));
        }
        match self.run.kind {
            ExperimentKind::Converge | ExperimentKind::Spectrum => {
                if self.sweep.epsilons.is_empty() {
                    return Err(HarnessError::Config(
                        "sweep.epsilons must be nonempty for converge/spectrum runs".into(),
                    ));
                }
                if self.run.kind == ExperimentKind::Converge
                    && self.sweep.grids.len() != self.sweep.epsilons.len()
                {
                    return Err(HarnessError::Config(
                        "sweep.grids must match sweep.epsilons in length".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(warnings)
    }

    pub fn effective_delta(&self) -> f64 {
        if self.geometry.delta > 0.0 {
            self.geometry.delta
        } else {
            0.25 * self.min_curvature_radius_estimate()
        }
    }

    fn min_curvature_radius_estimate(&self) -> f64 {
        match self.geometry.shape.as_str() {
            "circle" => self.geometry.radius,
            "ellipse" => {
                let [a, b] = self.geometry.semi_axes;
                // min curvature radius of an ellipse: b^2/a at the ends of the
                // major axis (a >= b)
                let (a, b) = if a >= b { (a, b) } else { (b, a) };
                b * b / a
            }
            _ => self.geometry.radius,
        }
    }

    /// Build the configured interface.
    pub fn build_interface(&self) -> Result<Interface, HarnessError> {
        match self.geometry.shape.as_str() {
            "circle" => Ok(Interface::circle(
                self.geometry.center,
                self.geometry.radius,
                self.geometry.nodes,
                0.0,
            )),
            "ellipse" => Ok(Interface::ellipse(
                self.geometry.center,
                self.geometry.semi_axes[0],
                self.geometry.semi_axes[1],
                self.geometry.nodes,
                0.0,
            )),
            "csv" => {
                let iface = io::read_interface_csv(std::path::Path::new(&self.geometry.csv_path))?;
                Ok(iface)
            }
            other => Err(HarnessError::Config(format!("unknown shape {other}"))),
        }
    }

    pub fn build_tube(&self) -> Result<TubularMap, HarnessError> {
        let iface = self.build_interface()?;
        let delta = self.effective_delta();
        let bound = 0.25 * iface.min_curvature_radius();
        if delta <= bound {
            Ok(TubularMap::with_delta(iface, delta)?)
        } else {
            Ok(TubularMap::with_delta_unchecked(iface, delta))
        }
    }

    pub fn model_params(&self) -> crate::diffuse::ModelParams {
        let mut p = crate::diffuse::ModelParams::standard(self.model.epsilon);
        p.nu_plus = self.model.nu_plus;
        p.nu_minus = self.model.nu_minus;
        p.dt = self.model.dt;
        p.coupled = self.model.coupled;
        p.capillary = if self.model.capillary == "laplace" {
            crate::diffuse::CapillaryForm::Laplace
        } else {
            crate::diffuse::CapillaryForm::Tensor
        };
        p
    }
}

// -------------------------------- rate fitting -------------------------------

/// Convergence-rate fit of an error table against epsilon (or any refinement
/// parameter): least squares on the log-log data.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub points: Vec<(f64, f64)>,
    /// fitted order p in `e ~ C eps^p`
    pub order: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// standard error of the fitted order (68% band)
    pub order_stderr: f64,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
}

pub fn fit_rate(points: &[(f64, f64)], threshold: Option<f64>) -> Result<RateReport, HarnessError> {
    if points.len() < 3 {
        return Err(HarnessError::NonPositiveError(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    for &(eps, err) in points {
        if !(eps > 0.0) || !(err > 0.0) {
            return Err(HarnessError::NonPositiveError(format!(
                "non-positive entry (eps = {eps}, error = {err})"
            )));
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (intercept, slope, r2) = crate::num::quad::linear_fit(&xs, &ys);
    // standard error of the slope
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let stderr = if n > 2.0 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let pass = threshold.map(|t| slope >= t);
    Ok(RateReport {
        points: points.to_vec(),
        order: slope,
        intercept,
        r_squared: r2,
        order_stderr: stderr,
        threshold,
        pass,
    })
}

// ---------------------------- interface comparison ---------------------------

/// Hausdorff and rms normal distance between two closed curves, by normal
/// projection of each curve's nodes onto the other (falling back to the
/// symmetric point-cloud Hausdorff distance when projection fails).
pub fn compare_interfaces(a: &Interface, b: &Interface) -> (f64, f64) {
    fn directed(from: &Interface, onto: &Interface) -> Option<(f64, f64)> {
        let delta = onto.min_curvature_radius().max(1e-6);
        let tub = TubularMap::with_delta_unchecked(onto.clone(), delta);
        let mut worst = 0.0_f64;
        let mut sum_sq = 0.0;
        for p in from.nodes() {
            match tub.project(*p) {
                Ok((r, _)) => {
                    worst = worst.max(r.abs());
                    sum_sq += r * r;
                }
                Err(_) => return None,
            }
        }
        Some((worst, (sum_sq / from.node_count() as f64).sqrt()))
    }
    match (directed(a, b), directed(b, a)) {
        (Some((h1, l1)), Some((h2, l2))) => (h1.max(h2), l1.max(l2)),
        _ => {
            // point-cloud fallback
            let cloud = |xs: &Interface, ys: &Interface| -> f64 {
                xs.nodes()
                    .iter()
                    .map(|p| {
                        ys.nodes()
                            .iter()
                            .map(|q| crate::num::norm(crate::num::sub(*p, *q)))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(0.0_f64, f64::max)
            };
            let h = cloud(a, b).max(cloud(b, a));
            (h, h)
        }
    }
}

// ----------------------------------- driver ----------------------------------

/// Execute the configured experiment, writing artifacts under `out_dir`.
pub fn run(config: &RunConfig, out_dir: &std::path::Path) -> Result<io::Manifest, HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let warnings = config.validate()?;
    let start = std::time::Instant::now();
    let outputs = match config.run.kind {
        ExperimentKind::Profile => experiments::run_profile(config, out_dir)?,
        ExperimentKind::Simulate => experiments::run_simulate(config, out_dir)?,
        ExperimentKind::Mcf => experiments::run_mcf(config, out_dir)?,
        ExperimentKind::Converge => experiments::run_converge(config, out_dir)?,
        ExperimentKind::Spectrum => experiments::run_spectrum(config, out_dir)?,
        ExperimentKind::Expansion => experiments::run_expansion(config, out_dir)?,
    };
    let manifest = io::Manifest {
        config_hash: io::config_hash(config),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        kind: format!("{:?}", config.run.kind).to_lowercase(),
        seed: config.run.seed,
        threads: config.run.threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
        warnings,
    };
    io::write_manifest(out_dir, &manifest)?;
    Ok(manifest)
}
