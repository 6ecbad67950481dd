//! Run configuration: flat bracketed sections in TOML syntax.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use neckflow_core::flow::{BoundaryMode, FlowConfig};
use neckflow_core::geometry::{BoundaryData, EmbeddedManifold, SigmaMethod};
use neckflow_core::grid::{DomainKind, DomainSpec};
use neckflow_core::neck::{CurveOptions, NeckOptions, RescaleOptions};
use neckflow_core::oracles::{GeodesicSpec, SyntheticFamily};
use neckflow_core::AmbientVector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error at `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Num(f64),
    Str(String),
    Bool(bool),
    List(Vec<f64>),
}

/// Key/value parameters of one section, tracking which keys were read so that
/// leftovers can be reported as unknown.
#[derive(Debug, Clone)]
pub struct Params {
    section: String,
    values: BTreeMap<String, ParamValue>,
    used: BTreeSet<String>,
}

impl Params {
    pub fn new(section: &str, values: BTreeMap<String, ParamValue>) -> Self {
        Self {
            section: section.to_string(),
            values,
            used: BTreeSet::new(),
        }
    }

    fn from_toml(section: &str, table: &toml::Table) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (k, v) in table {
            let key = format!("{section}.{k}");
            let pv = match v {
                toml::Value::Integer(i) => ParamValue::Num(*i as f64),
                toml::Value::Float(f) => ParamValue::Num(*f),
                toml::Value::String(s) => ParamValue::Str(s.clone()),
                toml::Value::Boolean(b) => ParamValue::Bool(*b),
                toml::Value::Array(items) => ParamValue::List(
                    items
                        .iter()
                        .map(|x| match x {
                            toml::Value::Integer(i) => Ok(*i as f64),
                            toml::Value::Float(f) => Ok(*f),
                            _ => Err(ConfigError::new(&key, "lists must hold numbers")),
                        })
                        .collect::<Result<_, _>>()?,
                ),
                _ => return Err(ConfigError::new(key, "nested tables are not supported")),
            };
            values.insert(k.clone(), pv);
        }
        Ok(Self::new(section, values))
    }

    /// Parses `k=v,k=v`; values are numbers, `a;b;c` lists, true/false or bare strings.
    pub fn from_inline(section: &str, text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| ConfigError::new(format!("{section}.{item}"), "expected key=value"))?;
            let (k, v) = (k.trim(), v.trim());
            let pv = if v.contains(';') {
                ParamValue::List(
                    v.split(';')
                        .map(|x| {
                            x.trim()
                                .parse::<f64>()
                                .map_err(|_| ConfigError::new(format!("{section}.{k}"), "bad list entry"))
                        })
                        .collect::<Result<_, _>>()?,
                )
            } else if let Ok(x) = v.parse::<f64>() {
                ParamValue::Num(x)
            } else if v == "true" || v == "false" {
                ParamValue::Bool(v == "true")
            } else {
                ParamValue::Str(v.to_string())
            };
            values.insert(k.to_string(), pv);
        }
        Ok(Self::new(section, values))
    }

    pub fn key(&self, k: &str) -> String {
        format!("{}.{}", self.section, k)
    }

    pub fn contains(&self, k: &str) -> bool {
        self.values.contains_key(k)
    }

    fn take(&mut self, k: &str) -> Option<ParamValue> {
        self.used.insert(k.to_string());
        self.values.get(k).cloned()
    }

    pub fn opt_f64(&mut self, k: &str) -> Result<Option<f64>, ConfigError> {
        match self.take(k) {
            None => Ok(None),
            Some(ParamValue::Num(x)) if x.is_finite() => Ok(Some(x)),
            Some(_) => Err(ConfigError::new(self.key(k), "expected a finite number")),
        }
    }

    pub fn f64_or(&mut self, k: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.opt_f64(k)?.unwrap_or(default))
    }

    pub fn req_f64(&mut self, k: &str) -> Result<f64, ConfigError> {
        self.opt_f64(k)?
            .ok_or_else(|| ConfigError::new(self.key(k), "missing required number"))
    }

    fn integer(&mut self, k: &str) -> Result<Option<i64>, ConfigError> {
        match self.opt_f64(k)? {
            None => Ok(None),
            Some(x) if x.fract() == 0.0 && x.abs() < 9e15 => Ok(Some(x as i64)),
            Some(_) => Err(ConfigError::new(self.key(k), "expected an integer")),
        }
    }

    pub fn usize_or(&mut self, k: &str, default: usize) -> Result<usize, ConfigError> {
        match self.integer(k)? {
            None => Ok(default),
            Some(i) if i >= 0 => Ok(i as usize),
            Some(_) => Err(ConfigError::new(self.key(k), "expected a nonnegative integer")),
        }
    }

    pub fn req_usize(&mut self, k: &str) -> Result<usize, ConfigError> {
        if !self.contains(k) {
            return Err(ConfigError::new(self.key(k), "missing required integer"));
        }
        self.usize_or(k, 0)
    }

    pub fn i32_or(&mut self, k: &str, default: i32) -> Result<i32, ConfigError> {
        match self.integer(k)? {
            None => Ok(default),
            Some(i) if i.abs() < i32::MAX as i64 => Ok(i as i32),
            Some(_) => Err(ConfigError::new(self.key(k), "integer out of range")),
        }
    }

    pub fn u64_or(&mut self, k: &str, default: u64) -> Result<u64, ConfigError> {
        match self.integer(k)? {
            None => Ok(default),
            Some(i) if i >= 0 => Ok(i as u64),
            Some(_) => Err(ConfigError::new(self.key(k), "expected a nonnegative integer")),
        }
    }

    pub fn opt_str(&mut self, k: &str) -> Result<Option<String>, ConfigError> {
        match self.take(k) {
            None => Ok(None),
            Some(ParamValue::Str(s)) => Ok(Some(s)),
            Some(_) => Err(ConfigError::new(self.key(k), "expected a string")),
        }
    }

    pub fn req_str(&mut self, k: &str) -> Result<String, ConfigError> {
        self.opt_str(k)?
            .ok_or_else(|| ConfigError::new(self.key(k), "missing required name"))
    }

    pub fn bool_or(&mut self, k: &str, default: bool) -> Result<bool, ConfigError> {
        match self.take(k) {
            None => Ok(default),
            Some(ParamValue::Bool(b)) => Ok(b),
            Some(_) => Err(ConfigError::new(self.key(k), "expected true or false")),
        }
    }

    pub fn opt_list(&mut self, k: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.take(k) {
            None => Ok(None),
            Some(ParamValue::List(v)) => Ok(Some(v)),
            Some(ParamValue::Num(x)) => Ok(Some(vec![x])),
            Some(_) => Err(ConfigError::new(self.key(k), "expected a list of numbers")),
        }
    }

    /// Fails on the first key that was never read.
    pub fn finish(&self) -> Result<(), ConfigError> {
        match self.values.keys().find(|k| !self.used.contains(*k)) {
            Some(k) => Err(ConfigError::new(self.key(k), "unknown key")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldSpec {
    Sphere { dim: usize, radius: f64 },
    Ellipsoid { axes: Vec<f64> },
    FlatTorus { r1: f64, r2: f64 },
}

impl ManifoldSpec {
    pub fn parse(p: &mut Params) -> Result<Self, ConfigError> {
        let name = p.req_str("name")?;
        let spec = match name.as_str() {
            "sphere" => {
                let dim = p.usize_or("dim", 3)?;
                let radius = p.f64_or("radius", 1.0)?;
                if dim < 2 {
                    return Err(ConfigError::new(p.key("dim"), "ambient dimension must be at least 2"));
                }
                if !(radius > 0.0) {
                    return Err(ConfigError::new(p.key("radius"), "radius must be positive"));
                }
                ManifoldSpec::Sphere { dim, radius }
            }
            "ellipsoid" => {
                let axes = p
                    .opt_list("axes")?
                    .ok_or_else(|| ConfigError::new(p.key("axes"), "missing semi-axes"))?;
                if axes.len() < 2 || axes.iter().any(|a| !(*a > 0.0)) {
                    return Err(ConfigError::new(p.key("axes"), "need at least two positive semi-axes"));
                }
                ManifoldSpec::Ellipsoid { axes }
            }
            "flat_torus" => {
                let r1 = p.f64_or("r1", 1.0)?;
                let r2 = p.f64_or("r2", 1.0)?;
                if !(r1 > 0.0 && r2 > 0.0) {
                    return Err(ConfigError::new(p.key("r1"), "radii must be positive"));
                }
                ManifoldSpec::FlatTorus { r1, r2 }
            }
            other => return Err(ConfigError::new(p.key("name"), format!("unknown manifold `{other}`"))),
        };
        Ok(spec)
    }

    pub fn build(&self) -> EmbeddedManifold {
        match self {
            ManifoldSpec::Sphere { dim, radius } => EmbeddedManifold::sphere(*dim, *radius),
            ManifoldSpec::Ellipsoid { axes } => EmbeddedManifold::ellipsoid(axes),
            ManifoldSpec::FlatTorus { r1, r2 } => EmbeddedManifold::flat_torus(*r1, *r2),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            ManifoldSpec::Sphere { dim, .. } => *dim,
            ManifoldSpec::Ellipsoid { axes } => axes.len(),
            ManifoldSpec::FlatTorus { .. } => 4,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            ManifoldSpec::Sphere { radius, .. } => *radius,
            _ => 1.0,
        }
    }

    /// Inline `k=v` form, used in snapshot headers.
    pub fn to_inline(&self) -> String {
        match self {
            ManifoldSpec::Sphere { dim, radius } => format!("name=sphere,dim={dim},radius={radius:e}"),
            ManifoldSpec::Ellipsoid { axes } => format!("name=ellipsoid,axes={}", join_list(axes)),
            ManifoldSpec::FlatTorus { r1, r2 } => format!("name=flat_torus,r1={r1:e},r2={r2:e}"),
        }
    }
}

fn join_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub normal: Vec<f64>,
    pub height: f64,
    pub method: Option<SigmaMethod>,
    pub delta0: Option<f64>,
}

impl BoundarySpec {
    pub fn equator(dim: usize) -> Self {
        let mut normal = vec![0.0; dim];
        normal[dim - 1] = 1.0;
        Self {
            normal,
            height: 0.0,
            method: None,
            delta0: None,
        }
    }

    pub fn parse(p: &mut Params, dim: usize) -> Result<Self, ConfigError> {
        let name = p.req_str("name")?;
        let mut spec = Self::equator(dim);
        match name.as_str() {
            "equator" => {}
            "subsphere" | "latitude" => {
                if let Some(n) = p.opt_list("normal")? {
                    if n.len() != dim {
                        return Err(ConfigError::new(p.key("normal"), format!("expected {dim} entries")));
                    }
                    spec.normal = n;
                }
                spec.height = p.f64_or("height", 0.0)?;
            }
            other => return Err(ConfigError::new(p.key("name"), format!("unknown boundary `{other}`"))),
        }
        spec.method = match p.opt_str("method")?.as_deref() {
            None => None,
            Some("linear") => Some(SigmaMethod::LinearReflection),
            Some("shooting") => Some(SigmaMethod::GeodesicShooting {
                steps: p.usize_or("steps", 16)?.max(1),
            }),
            Some(other) => return Err(ConfigError::new(p.key("method"), format!("unknown method `{other}`"))),
        };
        spec.delta0 = p.opt_f64("delta0")?;
        Ok(spec)
    }

    pub fn build(&self, manifold: &EmbeddedManifold) -> Result<BoundaryData, ConfigError> {
        BoundaryData::subsphere(
            manifold,
            AmbientVector::from_slice(&self.normal),
            self.height,
            self.method,
            self.delta0,
        )
        .map_err(|e| ConfigError::new("boundary", e.to_string()))
    }

    pub fn to_inline(&self) -> String {
        let mut s = format!(
            "name=subsphere,normal={},height={:e}",
            join_list(&self.normal),
            self.height
        );
        match self.method {
            Some(SigmaMethod::LinearReflection) => s.push_str(",method=linear"),
            Some(SigmaMethod::GeodesicShooting { steps }) => s.push_str(&format!(",method=shooting,steps={steps}")),
            None => {}
        }
        if let Some(d) = self.delta0 {
            s.push_str(&format!(",delta0={d:e}"));
        }
        s
    }
}

/// Reads the parameters of a named synthetic family. `radius` is the target
/// sphere radius used for default geodesics.
pub fn parse_family(name: &str, p: &mut Params, dim: usize, radius: f64) -> Result<SyntheticFamily, ConfigError> {
    let vector = |p: &mut Params, k: &str, default: AmbientVector| -> Result<AmbientVector, ConfigError> {
        match p.opt_list(k)? {
            None => Ok(default),
            Some(v) if v.len() == dim => Ok(AmbientVector::from_slice(&v)),
            Some(_) => Err(ConfigError::new(p.key(k), format!("expected {dim} entries"))),
        }
    };
    if dim < 2 {
        return Err(ConfigError::new(p.key("family"), "target dimension too small"));
    }
    let geodesic = |p: &mut Params| -> Result<GeodesicSpec, ConfigError> {
        let eq = GeodesicSpec::equator(dim, radius);
        Ok(GeodesicSpec {
            base: vector(p, "base", eq.base)?,
            direction: vector(p, "direction", eq.direction)?,
        })
    };
    let family = match name {
        "winding" => SyntheticFamily::WindingMap {
            m: p.i32_or("m", 1)?,
            phase_amplitude: p.f64_or("phase_amplitude", 0.0)?,
        },
        "k_loop" => SyntheticFamily::KLoop {
            m: p.i32_or("m", 1)?,
            phase_amplitude: p.f64_or("phase_amplitude", 0.0)?,
        },
        "constant" => SyntheticFamily::ConstantMap {
            point: match p.opt_list("point")? {
                Some(v) if v.len() == dim => AmbientVector::from_slice(&v),
                Some(_) => return Err(ConfigError::new(p.key("point"), format!("expected {dim} entries"))),
                None => return Err(ConfigError::new(p.key("point"), "missing point")),
            },
        },
        "geodesic_neck" => SyntheticFamily::GeodesicNeck {
            lambda: p.req_f64("lambda")?,
            geodesic: geodesic(p)?,
        },
        "perturbed_neck" => SyntheticFamily::PerturbedNeck {
            lambda: p.req_f64("lambda")?,
            amplitude: p.f64_or("amplitude", 0.1)?,
            decay: p.f64_or("decay", 1.0)?,
            seed: p.u64_or("seed", 0)?,
            geodesic: geodesic(p)?,
        },
        "conformal_exp" => SyntheticFamily::ConformalExp {
            epsilon: p.req_f64("epsilon")?,
        },
        other => return Err(ConfigError::new(p.key("family"), format!("unknown family `{other}`"))),
    };
    Ok(family)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Family(SyntheticFamily),
    Snapshot(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub amplitude: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct NeckSettings {
    pub rescale: RescaleOptions,
    pub options: NeckOptions,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub name: String,
    pub domain: DomainSpec,
    pub manifold: ManifoldSpec,
    pub boundary: Option<BoundarySpec>,
    pub initial: InitialData,
    pub perturbation: Option<Perturbation>,
    pub a0: f64,
    pub b0: f64,
    pub flow: FlowConfig,
    pub neck: NeckSettings,
    pub output_dir: PathBuf,
    pub snapshot_name: String,
}

const SECTIONS: [&str; 8] = [
    "domain", "manifold", "boundary", "initial", "metric", "flow", "neck", "output",
];

fn section(root: &toml::Table, name: &str) -> Result<Option<Params>, ConfigError> {
    match root.get(name) {
        None => Ok(None),
        Some(toml::Value::Table(t)) => Params::from_toml(name, t).map(Some),
        Some(_) => Err(ConfigError::new(name, "expected a [section]")),
    }
}

fn required(root: &toml::Table, name: &str) -> Result<Params, ConfigError> {
    section(root, name)?.ok_or_else(|| ConfigError::new(name, "missing section"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<file>", format!("cannot read {}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, &stem, base)
    }

    /// `base` resolves relative snapshot paths in `[initial]`.
    pub fn parse(text: &str, default_name: &str, base: &Path) -> Result<Self, ConfigError> {
        let root: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::new("<syntax>", e.message().to_string()))?;
        if let Some(k) = root.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(ConfigError::new(k.as_str(), "unknown section"));
        }

        let mut p = required(&root, "domain")?;
        let kind = match p.req_str("kind")?.as_str() {
            "torus" => DomainKind::ClosedTorus,
            "cylinder" => DomainKind::FreeBoundaryCylinder,
            other => {
                return Err(ConfigError::new(
                    "domain.kind",
                    format!("unknown domain kind `{other}`"),
                ))
            }
        };
        let n1 = p.req_usize("n1")?;
        let n2 = p.req_usize("n2")?;
        let x2_length = p.f64_or("x2_length", 1.0)?;
        p.finish()?;
        let domain = DomainSpec::new(kind, n1, n2, x2_length).map_err(|e| ConfigError::new("domain", e.to_string()))?;

        let mut p = section(&root, "manifold")?.unwrap_or_else(|| Params::new("manifold", BTreeMap::new()));
        let manifold = ManifoldSpec::parse(&mut p)?;
        p.finish()?;
        let dim = manifold.ambient_dim();

        let boundary = match section(&root, "boundary")? {
            Some(mut p) => {
                if !matches!(manifold, ManifoldSpec::Sphere { .. }) {
                    return Err(ConfigError::new("boundary.name", "boundaries need a sphere target"));
                }
                let b = BoundarySpec::parse(&mut p, dim)?;
                p.finish()?;
                Some(b)
            }
            None => None,
        };
        if kind == DomainKind::FreeBoundaryCylinder && boundary.is_none() {
            return Err(ConfigError::new("boundary.name", "cylinder domains need a boundary"));
        }

        let mut p = required(&root, "initial")?;
        let family = p.req_str("family")?;
        let initial = if family == "snapshot" {
            let rel = p.req_str("path")?;
            InitialData::Snapshot(base.join(rel))
        } else {
            InitialData::Family(parse_family(&family, &mut p, dim, manifold.radius())?)
        };
        let amp = p.f64_or("perturbation", 0.0)?;
        let seed = p.u64_or("perturbation_seed", 0)?;
        let perturbation = (amp != 0.0).then_some(Perturbation { amplitude: amp, seed });
        p.finish()?;

        let mut p = section(&root, "metric")?.unwrap_or_else(|| Params::new("metric", BTreeMap::new()));
        let a0 = p.f64_or("a0", 0.0)?;
        let b0 = p.f64_or("b0", 1.0)?;
        if !(b0 > 0.0) {
            return Err(ConfigError::new("metric.b0", "b0 must be positive"));
        }
        p.finish()?;

        let mut p = section(&root, "neck")?.unwrap_or_else(|| Params::new("neck", BTreeMap::new()));
        let rd = RescaleOptions::default();
        let rescale = RescaleOptions {
            rho_threshold: p.f64_or("rho_threshold", rd.rho_threshold)?,
            min_nodes_per_unit: p.usize_or("min_nodes_per_unit", rd.min_nodes_per_unit)?,
            min_fiber_nodes: p.usize_or("min_fiber_nodes", rd.min_fiber_nodes)?,
        };
        let nd = NeckOptions::default();
        let cd = CurveOptions::default();
        let neck_curve = CurveOptions {
            trim_exponent: p.f64_or("trim_exponent", cd.trim_exponent)?,
            velocity_floor: p.f64_or("velocity_floor", cd.velocity_floor)?,
            geodesic_like: false,
        };
        let decay_c = p.f64_or("decay_c", nd.decay_c)?;
        p.finish()?;

        let mut p = section(&root, "flow")?.unwrap_or_else(|| Params::new("flow", BTreeMap::new()));
        let fd = FlowConfig::default();
        let flow = FlowConfig {
            dt_safety: p.f64_or("dt_safety", fd.dt_safety)?,
            t_end: p.f64_or("t_end", fd.t_end)?,
            eps0: p.f64_or("eps0", fd.eps0)?,
            record_every: p.usize_or("record_every", fd.record_every)?,
            boundary: BoundaryMode::None,
            b_min: p.f64_or("b_min", fd.b_min)?,
            b_max: p.f64_or("b_max", fd.b_max)?,
            rho_threshold: rescale.rho_threshold,
            rescale,
            max_monitor_nodes: p.usize_or("max_monitor_nodes", fd.max_monitor_nodes)?,
        };
        p.finish()?;
        if !(flow.dt_safety > 0.0 && flow.dt_safety <= 1.0) {
            return Err(ConfigError::new("flow.dt_safety", "must lie in (0, 1]"));
        }
        if !(flow.t_end >= 0.0) {
            return Err(ConfigError::new("flow.t_end", "must be nonnegative"));
        }
        if !(flow.eps0 > 0.0) {
            return Err(ConfigError::new("flow.eps0", "must be positive"));
        }
        if flow.record_every == 0 {
            return Err(ConfigError::new("flow.record_every", "must be at least 1"));
        }
        if !(flow.b_min > 0.0 && flow.b_min < b0 && b0 < flow.b_max) {
            return Err(ConfigError::new("flow.b_min", "need 0 < b_min < b0 < b_max"));
        }

        let mut p = section(&root, "output")?.unwrap_or_else(|| Params::new("output", BTreeMap::new()));
        let output_dir = PathBuf::from(p.opt_str("dir")?.unwrap_or_else(|| default_name.to_string()));
        let snapshot_name = p.opt_str("snapshot")?.unwrap_or_else(|| "final_state.snap".to_string());
        p.finish()?;

        Ok(Self {
            name: default_name.to_string(),
            domain,
            manifold,
            boundary,
            initial,
            perturbation,
            a0,
            b0,
            neck: NeckSettings {
                rescale,
                options: NeckOptions {
                    curve: neck_curve,
                    eps0: flow.eps0,
                    decay_c,
                },
            },
            flow,
            output_dir,
            snapshot_name,
        })
    }

    /// Output directory after applying the NECKFLOW_OUT override.
    pub fn resolved_output_dir(&self) -> PathBuf {
        resolve_output(&self.output_dir)
    }
}

/// With NECKFLOW_OUT set, `dir` is re-rooted under it (absolute paths keep only
/// their last component); otherwise `dir` is used as given.
pub fn resolve_output(dir: &Path) -> PathBuf {
    match std::env::var_os("NECKFLOW_OUT") {
        Some(root) if !root.is_empty() => {
            let root = PathBuf::from(root);
            if dir.is_absolute() {
                root.join(dir.file_name().unwrap_or_default())
            } else {
                root.join(dir)
            }
        }
        _ => dir.to_path_buf(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[domain]
kind = "torus"
n1 = 32
n2 = 8

[manifold]
name = "sphere"

[initial]
family = "winding"
m = 1
phase_amplitude = 0.1

[metric]
a0 = 0.0
b0 = 1.0

[flow]
t_end = 0.5
b_min = 0.02
"#;

    #[test]
    fn parses_a_basic_config() {
        let c = RunConfig::parse(BASIC, "basic", Path::new(".")).unwrap();
        assert_eq!(c.domain.n1, 32);
        assert_eq!(c.flow.b_min, 0.02);
        assert_eq!(c.output_dir, PathBuf::from("basic"));
        assert!(matches!(
            c.initial,
            InitialData::Family(SyntheticFamily::WindingMap { m: 1, .. })
        ));
    }

    #[test]
    fn missing_manifold_name_is_named() {
        let text = BASIC.replace("name = \"sphere\"", "");
        let e = RunConfig::parse(&text, "x", Path::new(".")).unwrap_err();
        assert_eq!(e.key, "manifold.name");
    }

    #[test]
    fn unknown_keys_and_sections_are_named() {
        let e = RunConfig::parse(&format!("{BASIC}\n[extra]\nx = 1\n"), "x", Path::new(".")).unwrap_err();
        assert_eq!(e.key, "extra");
        let text = BASIC.replace("t_end = 0.5", "t_end = 0.5\nfoo = 2");
        let e = RunConfig::parse(&text, "x", Path::new(".")).unwrap_err();
        assert_eq!(e.key, "flow.foo");
        let text = BASIC.replace("t_end = 0.5", "t_end = \"long\"");
        let e = RunConfig::parse(&text, "x", Path::new(".")).unwrap_err();
        assert_eq!(e.key, "flow.t_end");
    }

    #[test]
    fn cylinder_needs_boundary() {
        let text = BASIC.replace("\"torus\"", "\"cylinder\"");
        let e = RunConfig::parse(&text, "x", Path::new(".")).unwrap_err();
        assert_eq!(e.key, "boundary.name");
    }

    #[test]
    fn inline_params() {
        let mut p = Params::from_inline("input", "lambda=0.05, T=20,point=0;0;1,fiber=interval").unwrap();
        assert_eq!(p.req_f64("lambda").unwrap(), 0.05);
        assert_eq!(p.opt_list("point").unwrap(), Some(vec![0.0, 0.0, 1.0]));
        assert_eq!(p.req_str("fiber").unwrap(), "interval");
        assert_eq!(p.finish().unwrap_err().key, "input.T");
    }

    #[test]
    fn boundary_round_trips_inline() {
        let b = BoundarySpec {
            normal: vec![0.0, 0.0, 1.0],
            height: 0.3,
            method: Some(SigmaMethod::GeodesicShooting { steps: 20 }),
            delta0: Some(0.2),
        };
        let mut p = Params::from_inline("boundary", &b.to_inline()).unwrap();
        assert_eq!(BoundarySpec::parse(&mut p, 3).unwrap(), b);
        p.finish().unwrap();
    }
}
