//! Experiment configuration: TOML with one table per module.
//!
//! ```toml
//! seed = 42
//! epsilon = 0.3
//!
//! [flow]
//! domain = "torus-grid"
//! target = "sphere"
//! region = "constrained"
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_EPSILON: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrassmannSection {
    pub n: usize,
    pub p: usize,
    /// Singular values of the tangent coefficients, largest first.
    pub lambda: Vec<f64>,
    /// Points along the geodesic, excluding `t = 0`.
    pub samples: usize,
    /// Random base configurations for `grassmann region`.
    pub configs: usize,
}

impl Default for GrassmannSection {
    fn default() -> Self {
        Self {
            n: 4,
            p: 2,
            lambda: vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            samples: 16,
            configs: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SphereSection {
    /// Dimension of `S^m`.
    pub m: usize,
    pub samples: usize,
    /// Circle parameter of the removed leaf.
    pub leaf: f64,
}

impl Default for SphereSection {
    fn default() -> Self {
        Self {
            m: 3,
            samples: 10_000,
            leaf: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadricSection {
    pub n: usize,
    pub samples: usize,
}

impl Default for QuadricSection {
    fn default() -> Self {
        Self { n: 4, samples: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    TorusGrid,
    Icosphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Sphere,
    SphereProduct,
    Grassmann24,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionMode {
    None,
    Watch,
    Constrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    Cap,
    Identity,
    GreatCircle,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub domain: Domain,
    pub target: Target,
    pub region: RegionMode,
    #[serde(default = "FlowSection::default_init")]
    pub init: Init,
    #[serde(default = "FlowSection::default_grid")]
    pub nu: usize,
    #[serde(default = "FlowSection::default_grid")]
    pub nv: usize,
    #[serde(default = "FlowSection::default_level")]
    pub level: usize,
    #[serde(default = "FlowSection::default_m")]
    pub m: usize,
    #[serde(default = "FlowSection::default_m")]
    pub m1: usize,
    #[serde(default = "FlowSection::default_m")]
    pub m2: usize,
    #[serde(default = "FlowSection::default_scale")]
    pub scale: f64,
    #[serde(default = "FlowSection::default_cap_radius")]
    pub cap_radius: f64,
    /// Defaults to 0.2 on torus grids and 0.1 on icospheres.
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default = "FlowSection::default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "FlowSection::default_tension_tol")]
    pub tension_tol: f64,
    #[serde(default = "FlowSection::default_oscillation_tol")]
    pub oscillation_tol: f64,
    #[serde(default = "FlowSection::default_trace_every")]
    pub trace_every: usize,
}

impl FlowSection {
    fn default_init() -> Init {
        Init::Cap
    }
    fn default_grid() -> usize {
        32
    }
    fn default_level() -> usize {
        3
    }
    fn default_m() -> usize {
        2
    }
    fn default_scale() -> f64 {
        1.0
    }
    fn default_cap_radius() -> f64 {
        0.4
    }
    fn default_max_iters() -> usize {
        50_000
    }
    fn default_tension_tol() -> f64 {
        1e-6
    }
    fn default_oscillation_tol() -> f64 {
        1e-2
    }
    fn default_trace_every() -> usize {
        100
    }

    pub fn step(&self) -> f64 {
        self.step.unwrap_or(match self.domain {
            Domain::TorusGrid => 0.2,
            Domain::Icosphere => 0.1,
        })
    }
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            domain: Domain::TorusGrid,
            target: Target::Sphere,
            region: RegionMode::Constrained,
            init: Self::default_init(),
            nu: Self::default_grid(),
            nv: Self::default_grid(),
            level: Self::default_level(),
            m: Self::default_m(),
            m1: Self::default_m(),
            m2: Self::default_m(),
            scale: Self::default_scale(),
            cap_radius: Self::default_cap_radius(),
            step: None,
            max_iters: Self::default_max_iters(),
            tension_tol: Self::default_tension_tol(),
            oscillation_tol: Self::default_oscillation_tol(),
            trace_every: Self::default_trace_every(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaussKind {
    Equator,
    CliffordTorus,
    GeneralizedClifford,
    LatitudeSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditKind {
    Sphere,
    Grassmann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussSection {
    pub kind: GaussKind,
    pub k: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub radius: f64,
    /// Extra ambient dimensions added by equatorial inclusion.
    pub extra: usize,
    pub resolution: usize,
    pub region: AuditKind,
    /// 1-based axes `(x̄, V)` of the circle whose orthogonal subsphere is the barrier.
    pub axes: [usize; 2],
    pub h1_zero: bool,
}

impl Default for GaussSection {
    fn default() -> Self {
        Self {
            kind: GaussKind::CliffordTorus,
            k: 2,
            m: 3,
            p: 1,
            q: 1,
            radius: 0.8,
            extra: 0,
            resolution: 32,
            region: AuditKind::Sphere,
            axes: [1, 3],
            h1_zero: false,
        }
    }
}

/// A fully populated, validated experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub grassmann: GrassmannSection,
    #[serde(default)]
    pub sphere: SphereSection,
    #[serde(default)]
    pub quadric: QuadricSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub gauss: GaussSection,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            epsilon: DEFAULT_EPSILON,
            grassmann: GrassmannSection::default(),
            sphere: SphereSection::default(),
            quadric: QuadricSection::default(),
            flow: FlowSection::default(),
            gauss: GaussSection::default(),
        }
    }
}

fn range(ok: bool, key: &str, msg: impl std::fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(format!("{key}: {msg}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        range(
            self.epsilon > 0.0 && self.epsilon < FRAC_PI_2,
            "epsilon",
            format!("{} outside (0, π/2)", self.epsilon),
        )?;

        let g = &self.grassmann;
        range(g.n >= 2 && g.n <= 12, "grassmann.n", format!("{} outside [2, 12]", g.n))?;
        range(
            g.p >= 1 && g.p < g.n,
            "grassmann.p",
            format!("{} outside [1, n-1]", g.p),
        )?;
        let m = g.p.min(g.n - g.p);
        range(
            !g.lambda.is_empty() && g.lambda.len() <= m,
            "grassmann.lambda",
            format!("needs between 1 and {m} values"),
        )?;
        range(
            g.lambda.iter().all(|l| l.is_finite() && *l > 0.0) && g.lambda.windows(2).all(|w| w[0] >= w[1]),
            "grassmann.lambda",
            "values must be positive and non-increasing",
        )?;
        range(g.samples <= 100_000, "grassmann.samples", "at most 100000")?;
        range(g.configs <= 100_000, "grassmann.configs", "at most 100000")?;

        let s = &self.sphere;
        range(s.m >= 2 && s.m <= 8, "sphere.m", format!("{} outside [2, 8]", s.m))?;
        range(s.samples <= 1_000_000, "sphere.samples", "at most 1000000")?;
        range(s.leaf.is_finite(), "sphere.leaf", "must be finite")?;

        let q = &self.quadric;
        range(q.n >= 3 && q.n <= 12, "quadric.n", format!("{} outside [3, 12]", q.n))?;
        range(q.samples <= 1_000_000, "quadric.samples", "at most 1000000")?;

        let f = &self.flow;
        range(
            f.nu >= 8 && f.nv >= 8 && f.nu * f.nv <= 1 << 20,
            "flow.nu",
            "grid sizes must be at least 8",
        )?;
        range(
            (2..=8).contains(&f.level),
            "flow.level",
            format!("{} outside [2, 8]", f.level),
        )?;
        range(
            f.m >= 1 && f.m1 >= 1 && f.m2 >= 1,
            "flow.m",
            "target dimensions must be at least 1",
        )?;
        range(f.scale > 0.0 && f.scale.is_finite(), "flow.scale", "must be positive")?;
        range(
            f.cap_radius > 0.0 && f.cap_radius < std::f64::consts::PI,
            "flow.cap_radius",
            "outside (0, π)",
        )?;
        range(f.step() > 0.0 && f.step().is_finite(), "flow.step", "must be positive")?;
        range(f.tension_tol > 0.0, "flow.tension_tol", "must be positive")?;
        range(f.oscillation_tol > 0.0, "flow.oscillation_tol", "must be positive")?;
        range(f.trace_every >= 1, "flow.trace_every", "must be at least 1")?;
        range(
            f.region == RegionMode::None || f.target == Target::Sphere,
            "flow.region",
            "barrier regions need target = \"sphere\"",
        )?;

        let a = &self.gauss;
        range(
            (2..=256).contains(&a.resolution),
            "gauss.resolution",
            "outside [2, 256]",
        )?;
        range(
            a.axes[0] != a.axes[1] && a.axes.iter().all(|&i| i >= 1),
            "gauss.axes",
            "need two distinct 1-based axes",
        )?;
        Ok(())
    }
}

/// Parses and validates a configuration; a `[flow]` table must name its domain, target and region.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| CliError::usage(one_line(&e.to_string())))?;
    if let Some(flow) = table.get("flow").and_then(|f| f.as_table()) {
        for key in ["domain", "target", "region"] {
            if !flow.contains_key(key) {
                return Err(CliError::usage(format!("missing required key flow.{key}")));
            }
        }
    }
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::usage(one_line(&e.to_string())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serialises every field, defaults included.
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("configuration is always representable")
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
