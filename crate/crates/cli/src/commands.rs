use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use neckflow_core::cylinder::Fiber;
use neckflow_core::flow::{self, BoundaryMode, FlowState, RunOutcome, RunStatus};
use neckflow_core::geometry::{BoundaryData, EmbeddedManifold};
use neckflow_core::grid::{DomainKind, FlatMetric, MapField};
use neckflow_core::neck::{
    analyze_neck, chart_frame, rescale_to_standard, Degeneration, NeckOptions, NeckReport, NeckSource, RescaleOptions,
};
use neckflow_core::oracles::{generate_cylinder, generate_on_domain, ResolvedFamily};
use neckflow_core::AmbientVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{parse_family, resolve_output, BoundarySpec, InitialData, ManifoldSpec, Params, RunConfig};
use crate::io::{self, num};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub status: RunStatus,
    pub output_dir: PathBuf,
    pub records: usize,
    pub message: Option<String>,
}

impl RunSummary {
    /// Finished and Degenerated are normal ends of a run.
    pub fn is_success(&self) -> bool {
        matches!(self.status, RunStatus::Finished | RunStatus::Degenerated)
    }
}

/// Smooth seeded perturbation: every ambient component gets a random combination of
/// the lowest Fourier modes in x¹ and x², then the map is projected back.
fn perturb(
    u: &MapField,
    amplitude: f64,
    seed: u64,
    manifold: &EmbeddedManifold,
    boundary: Option<&BoundaryData>,
) -> Result<MapField, CliError> {
    let d = u.domain;
    let dim = u.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef: Vec<[f64; 4]> = (0..dim)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
        .collect();
    let x2_freq = if d.is_torus() { 2.0 * PI } else { PI / d.x2_length };
    let mut out = u.clone();
    for j in 0..d.n2 {
        for i in 0..d.n1 {
            let (s1, c1) = (2.0 * PI * d.x1(i)).sin_cos();
            let c2 = (x2_freq * d.x2(j)).cos();
            let s2 = (x2_freq * d.x2(j)).sin();
            let mut delta = AmbientVector::zeros(dim);
            for (c, w) in coef.iter().enumerate() {
                delta[c] = w[0] * c1 + w[1] * s1 + w[2] * c2 + w[3] * s2;
            }
            let k = d.index(i, j);
            let mut p = manifold.project(&u.values[k].axpy(amplitude, &delta))?;
            if let (Some(b), false) = (boundary, d.is_torus()) {
                if d.is_boundary_row(j) {
                    p = b.submanifold_project(&p)?;
                }
            }
            out.values[k] = p;
        }
    }
    Ok(out)
}

pub fn initial_state(
    cfg: &RunConfig,
    manifold: &EmbeddedManifold,
    boundary: Option<&BoundaryData>,
) -> Result<FlowState, CliError> {
    let mut u = match &cfg.initial {
        InitialData::Family(f) => generate_on_domain(f, cfg.domain, manifold, boundary)?,
        InitialData::Snapshot(path) => {
            let snap = io::read_snapshot(path)?;
            if snap.state.u.domain != cfg.domain {
                return Err(CliError::Config(crate::ConfigError::new(
                    "initial.path",
                    "snapshot domain does not match [domain]",
                )));
            }
            if snap.manifold != cfg.manifold {
                return Err(CliError::Config(crate::ConfigError::new(
                    "initial.path",
                    "snapshot target does not match [manifold]",
                )));
            }
            snap.state.u
        }
    };
    if let Some(p) = &cfg.perturbation {
        u = perturb(&u, p.amplitude, p.seed, manifold, boundary)?;
    }
    Ok(FlowState {
        u,
        g: FlatMetric::new(cfg.a0, cfg.b0)?,
        time: 0.0,
        step_index: 0,
    })
}

fn config_json(cfg: &RunConfig) -> Value {
    let f = &cfg.flow;
    json!({
        "name": cfg.name,
        "domain": {
            "kind": if cfg.domain.is_torus() { "torus" } else { "cylinder" },
            "n1": cfg.domain.n1,
            "n2": cfg.domain.n2,
            "x2_length": num(cfg.domain.x2_length),
        },
        "manifold": cfg.manifold.to_inline(),
        "boundary": cfg.boundary.as_ref().map(|b| Value::String(b.to_inline())).unwrap_or(Value::Null),
        "initial": match &cfg.initial {
            InitialData::Family(fam) => Value::String(format!("{fam:?}")),
            InitialData::Snapshot(p) => Value::String(format!("snapshot {}", p.display())),
        },
        "perturbation": cfg.perturbation.as_ref().map(|p| json!({"amplitude": num(p.amplitude), "seed": p.seed})).unwrap_or(Value::Null),
        "metric": {"a0": num(cfg.a0), "b0": num(cfg.b0)},
        "flow": {
            "dt_safety": num(f.dt_safety),
            "t_end": num(f.t_end),
            "eps0": num(f.eps0),
            "record_every": f.record_every,
            "b_min": num(f.b_min),
            "b_max": num(f.b_max),
            "max_monitor_nodes": f.max_monitor_nodes,
        },
        "neck": {
            "rho_threshold": num(cfg.neck.rescale.rho_threshold),
            "min_nodes_per_unit": cfg.neck.rescale.min_nodes_per_unit,
            "min_fiber_nodes": cfg.neck.rescale.min_fiber_nodes,
            "trim_exponent": num(cfg.neck.options.curve.trim_exponent),
            "velocity_floor": num(cfg.neck.options.curve.velocity_floor),
            "decay_c": num(cfg.neck.options.decay_c),
        },
    })
}

fn conventions() -> Value {
    json!({
        "metric": "g = (1/b)[[1, a], [a, a^2 + b^2]] on the unit square, det g = 1",
        "energy": "E = 1/2 int |du|_g^2 dA, compact forward differences",
        "rho": "fiber length of the standard chart: shortest lattice vector (torus), 1/sqrt(b) (type I), sqrt(b) x2_length (type II)",
        "t_half": "pi area / rho^2 (circle fiber), pi area / (2 rho^2) (interval fiber)",
        "fiber_period": "2 pi (circle), pi (interval)",
        "time_step": "dt = safety / (2 (g^11/h1^2 + g^22/h2^2 + |g^12|/(h1 h2)))",
        "float_format": "17 significant digits",
    })
}

pub fn write_run_outputs(cfg: &RunConfig, outcome: &RunOutcome, dir: &Path) -> Result<(), CliError> {
    io::ensure_dir(dir)?;
    io::write_timeseries(&dir.join("timeseries.csv"), &outcome.records)?;
    io::write_monitors(&dir.join("monitors.csv"), &outcome.monitors)?;
    io::write_snapshot(
        &dir.join(&cfg.snapshot_name),
        &io::Snapshot {
            state: outcome.final_state.clone(),
            manifold: cfg.manifold.clone(),
            boundary: cfg.boundary.clone(),
        },
    )?;
    let fs = &outcome.final_state;
    let meta = json!({
        "status": outcome.status.name(),
        "message": outcome.message.clone().map(Value::String).unwrap_or(Value::Null),
        "steps": fs.step_index,
        "final_time": num(fs.time),
        "final_metric": {"a": num(fs.g.a), "b": num(fs.g.b)},
        "records": outcome.records.len(),
        "concentration_slabs": outcome.concentration_slabs.iter().map(|(a, b)| json!([num(*a), num(*b)])).collect::<Vec<_>>(),
        "snapshot": cfg.snapshot_name,
        "conventions": conventions(),
        "versions": {"neckflow": VERSION, "snapshot_format": 1},
        "config": config_json(cfg),
    });
    io::write_json(&dir.join("run_meta.json"), &meta)
}

pub fn build_target(
    manifold: &ManifoldSpec,
    boundary: Option<&BoundarySpec>,
) -> Result<(EmbeddedManifold, Option<BoundaryData>), CliError> {
    let n = manifold.build();
    let b = boundary.map(|b| b.build(&n)).transpose()?;
    Ok((n, b))
}

pub fn execute_config(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let (manifold, boundary) = build_target(&cfg.manifold, cfg.boundary.as_ref())?;
    let state = initial_state(cfg, &manifold, boundary.as_ref())?;
    let mut flow_cfg = cfg.flow.clone();
    if cfg.domain.kind == DomainKind::FreeBoundaryCylinder {
        flow_cfg.boundary = BoundaryMode::FreeBoundary(boundary.clone().expect("cylinder configs carry a boundary"));
    }
    let outcome = flow::run(state, &flow_cfg, &manifold)?;
    let dir = cfg.resolved_output_dir();
    write_run_outputs(cfg, &outcome, &dir)?;
    Ok(RunSummary {
        status: outcome.status,
        output_dir: dir,
        records: outcome.records.len(),
        message: outcome.message,
    })
}

pub fn cmd_run(config: &Path) -> Result<RunSummary, CliError> {
    execute_config(&RunConfig::load(config)?)
}

#[derive(Debug, Clone)]
pub struct NeckCommand {
    pub degeneration: Degeneration,
    pub out: Option<PathBuf>,
    pub rescale: RescaleOptions,
    pub options: NeckOptions,
}

impl NeckCommand {
    pub fn new(degeneration: Degeneration) -> Self {
        Self {
            degeneration,
            out: None,
            rescale: RescaleOptions::default(),
            options: NeckOptions::default(),
        }
    }
}

pub fn parse_degeneration(s: &str) -> Result<Degeneration, CliError> {
    match s {
        "torus" => Ok(Degeneration::Torus),
        "I" | "i" => Ok(Degeneration::TypeI),
        "II" | "ii" => Ok(Degeneration::TypeII),
        other => Err(CliError::Usage(format!(
            "unknown degeneration type `{other}` (torus, I, II)"
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct NeckOutcome {
    pub report: NeckReport,
    pub output_dir: PathBuf,
}

/// `family:key=value,...` on the standard cylinder. Reserved keys: `T` (half-length,
/// required), `nodes_per_unit` (8), `nth`, `dim` (3), `radius` (1), `k_height` (0).
fn synthetic_field(
    spec: &str,
    degeneration: Degeneration,
) -> Result<
    (
        neckflow_core::neck::StandardCylinderField,
        Vec<AmbientVector>,
        EmbeddedManifold,
        Option<BoundaryData>,
    ),
    CliError,
> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut p = Params::from_inline("input", rest)?;
    let t_half = p.req_f64("T")?;
    let per_unit = p.f64_or("nodes_per_unit", 8.0)?;
    let dim = p.usize_or("dim", 3)?;
    let radius = p.f64_or("radius", 1.0)?;
    let k_height = p.f64_or("k_height", 0.0)?;
    let fiber = match degeneration {
        Degeneration::TypeII => Fiber::Interval,
        _ => Fiber::Circle,
    };
    let nth = p.usize_or(
        "nth",
        match fiber {
            Fiber::Circle => 32,
            Fiber::Interval => 33,
        },
    )?;
    if !(per_unit > 0.0) {
        return Err(CliError::Config(crate::ConfigError::new(
            "input.nodes_per_unit",
            "must be positive",
        )));
    }
    let family = parse_family(name, &mut p, dim, radius)?;
    p.finish()?;
    let manifold_spec = ManifoldSpec::Sphere { dim, radius };
    let boundary_spec = (fiber == Fiber::Interval).then(|| BoundarySpec {
        height: k_height,
        ..BoundarySpec::equator(dim)
    });
    let (manifold, boundary) = build_target(&manifold_spec, boundary_spec.as_ref())?;
    let nt = (2.0 * t_half * per_unit).ceil() as usize + 1;
    let v = generate_cylinder(&family, t_half, nt, nth, fiber, &manifold, boundary.as_ref())?;
    let tau = ResolvedFamily::new(family, &manifold, boundary.as_ref(), fiber)?.exact_tension(&v)?;
    Ok((v, tau, manifold, boundary))
}

pub fn cmd_neck(input: &str, cmd: &NeckCommand) -> Result<NeckOutcome, CliError> {
    let path = Path::new(input);
    let mut meta = Map::new();
    meta.insert("input".into(), Value::String(input.to_string()));
    let deg_name = match cmd.degeneration {
        Degeneration::Torus => "torus",
        Degeneration::TypeI => "I",
        Degeneration::TypeII => "II",
    };
    meta.insert("degeneration".into(), Value::String(deg_name.into()));
    let (v, tau, manifold, boundary) = if path.is_file() {
        let snap = io::read_snapshot(path)?;
        let kind = snap.state.u.domain.kind;
        match (kind, cmd.degeneration) {
            (DomainKind::ClosedTorus, Degeneration::Torus)
            | (DomainKind::FreeBoundaryCylinder, Degeneration::TypeI | Degeneration::TypeII) => {}
            _ => {
                return Err(CliError::Usage(format!(
                    "degeneration type {deg_name} does not match the snapshot domain"
                )))
            }
        }
        let (manifold, boundary) = build_target(&snap.manifold, snap.boundary.as_ref())?;
        let frame = chart_frame(kind, snap.state.u.domain.x2_length, &snap.state.g, cmd.degeneration)?;
        meta.insert("t_formula".into(), Value::String(frame.t_formula.to_string()));
        meta.insert("rho".into(), num(frame.rho));
        meta.insert("snapshot_time".into(), num(snap.state.time));
        let source = NeckSource::Domain {
            u: snap.state.u,
            g: snap.state.g,
        };
        let v = rescale_to_standard(&source, cmd.degeneration, &manifold, boundary.as_ref(), &cmd.rescale)?;
        (v, None, manifold, boundary)
    } else if input.contains(':') {
        let (v, tau, m, b) = synthetic_field(input, cmd.degeneration)?;
        meta.insert("t_formula".into(), Value::String("given".into()));
        (v, Some(tau), m, b)
    } else {
        return Err(CliError::Usage(format!(
            "`{input}` is neither a snapshot file nor a synthetic spec `family:key=value,...`"
        )));
    };
    meta.insert("nt".into(), json!(v.nt));
    meta.insert("nth".into(), json!(v.nth));
    let report = analyze_neck(&v, tau.as_deref(), &manifold, boundary.as_ref(), &cmd.options)?;
    let default_dir = match path.file_stem().and_then(|s| s.to_str()) {
        Some(stem) if path.is_file() => format!("neck_{stem}"),
        _ => format!("neck_{}", input.split(':').next().unwrap_or("synthetic")),
    };
    let dir = resolve_output(cmd.out.as_deref().unwrap_or(Path::new(&default_dir)));
    io::ensure_dir(&dir)?;
    let mut meta_full = meta;
    meta_full.insert("versions".into(), json!({"neckflow": VERSION}));
    io::write_json(&dir.join("neck_report.json"), &io::neck_report_json(&report, meta_full))?;
    io::write_curve_csv(&dir.join("curve.csv"), &report.curve)?;
    Ok(NeckOutcome {
        report,
        output_dir: dir,
    })
}

#[derive(Debug)]
pub struct SweepEntry {
    pub config: PathBuf,
    pub result: Result<RunSummary, CliError>,
}

/// Runs every config matching `pattern` in parallel. Configs must resolve to
/// distinct output directories.
pub fn cmd_sweep(pattern: &str, jobs: Option<usize>) -> Result<Vec<SweepEntry>, CliError> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| CliError::Usage(format!("bad glob `{pattern}`: {e}")))?
        .filter_map(|p| p.ok())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no configs match `{pattern}`")));
    }
    let configs: Vec<(PathBuf, Result<RunConfig, CliError>)> = paths
        .into_iter()
        .map(|p| {
            let c = RunConfig::load(&p).map_err(CliError::from);
            (p, c)
        })
        .collect();
    let mut seen = std::collections::BTreeMap::new();
    for (p, c) in &configs {
        if let Ok(c) = c {
            if let Some(other) = seen.insert(c.resolved_output_dir(), p.clone()) {
                return Err(CliError::Usage(format!(
                    "{} and {} write to the same output directory",
                    other.display(),
                    p.display()
                )));
            }
        }
    }
    let work = || {
        configs
            .into_par_iter()
            .map(|(config, c)| SweepEntry {
                result: c.and_then(|c| execute_config(&c)),
                config,
            })
            .collect::<Vec<_>>()
    };
    let entries = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(work),
        None => work(),
    };
    Ok(entries)
}
