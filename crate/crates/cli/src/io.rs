//! CSV, JSON and snapshot files. Floats are written with 17 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use neckflow_core::flow::{FlowRecord, FlowState, MonitorRecord};
use neckflow_core::grid::{DomainKind, DomainSpec, FlatMetric, MapField};
use neckflow_core::neck::NeckReport;
use neckflow_core::AmbientVector;
use serde_json::{json, Map, Value};

use crate::config::{BoundarySpec, ManifoldSpec, Params};
use crate::CliError;

pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// JSON number with 17 significant digits; non-finite values become null.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::from_str(&fmt_num(x)).unwrap_or(Value::Null)
    } else {
        Value::Null
    }
}

pub fn num_list(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_rows<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl Iterator<Item = [f64; N]>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|x| fmt_num(*x)))
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_timeseries(path: &Path, records: &[FlowRecord]) -> Result<(), CliError> {
    write_rows(path, FlowRecord::COLUMNS, records.iter().map(|r| r.values()))
}

pub fn write_monitors(path: &Path, monitors: &[MonitorRecord]) -> Result<(), CliError> {
    write_rows(path, MonitorRecord::COLUMNS, monitors.iter().map(|r| r.values()))
}

/// A parsed numeric CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers: Vec<String> = r
        .headers()
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::Schema(format!("{}: non-numeric entry in row {}", path.display(), line + 1)))?;
        if row.len() != headers.len() {
            return Err(CliError::Schema(format!("{}: ragged row {}", path.display(), line + 1)));
        }
        rows.push(row);
    }
    Ok(Table { headers, rows })
}

/// A saved flow state together with the target and boundary it lives on.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub state: FlowState,
    pub manifold: ManifoldSpec,
    pub boundary: Option<BoundarySpec>,
}

const SNAPSHOT_MAGIC: &str = "neckflow-snapshot 1";

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<(), CliError> {
    let s = &snap.state;
    let d = s.u.domain;
    let mut out = String::new();
    out.push_str(SNAPSHOT_MAGIC);
    out.push('\n');
    let kind = if d.is_torus() { "torus" } else { "cylinder" };
    out.push_str(&format!("domain {kind} {} {} {}\n", d.n1, d.n2, fmt_num(d.x2_length)));
    out.push_str(&format!("metric {} {}\n", fmt_num(s.g.a), fmt_num(s.g.b)));
    out.push_str(&format!("time {} {}\n", fmt_num(s.time), s.step_index));
    out.push_str(&format!("manifold {}\n", snap.manifold.to_inline()));
    match &snap.boundary {
        Some(b) => out.push_str(&format!("boundary {}\n", b.to_inline())),
        None => out.push_str("boundary none\n"),
    }
    out.push_str(&format!("nodes {} {}\n", s.u.values.len(), s.u.dim()));
    for (k, v) in s.u.values.iter().enumerate() {
        out.push_str(&k.to_string());
        for x in v.as_slice() {
            out.push(' ');
            out.push_str(&fmt_num(*x));
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let bad = |what: &str| CliError::Schema(format!("{}: {what}", path.display()));
    let mut lines = text.lines();
    if lines.next() != Some(SNAPSHOT_MAGIC) {
        return Err(bad("not a neckflow snapshot"));
    }
    let mut header = |tag: &str| -> Result<Vec<String>, CliError> {
        let line = lines.next().ok_or_else(|| bad(&format!("missing `{tag}` line")))?;
        let mut it = line.splitn(2, ' ');
        if it.next() != Some(tag) {
            return Err(bad(&format!("expected `{tag}` line")));
        }
        Ok(it.next().unwrap_or("").split_whitespace().map(str::to_string).collect())
    };
    let f = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
    let n = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("bad integer `{s}`")));

    let dom = header("domain")?;
    if dom.len() != 4 {
        return Err(bad("domain line needs kind n1 n2 x2_length"));
    }
    let kind = match dom[0].as_str() {
        "torus" => DomainKind::ClosedTorus,
        "cylinder" => DomainKind::FreeBoundaryCylinder,
        _ => return Err(bad("unknown domain kind")),
    };
    let domain = DomainSpec::new(kind, n(&dom[1])?, n(&dom[2])?, f(&dom[3])?).map_err(|e| bad(&e.to_string()))?;
    let met = header("metric")?;
    if met.len() != 2 {
        return Err(bad("metric line needs a b"));
    }
    let g = FlatMetric::new(f(&met[0])?, f(&met[1])?).map_err(|e| bad(&e.to_string()))?;
    let tm = header("time")?;
    if tm.len() != 2 {
        return Err(bad("time line needs time step"));
    }
    let (time, step_index) = (f(&tm[0])?, n(&tm[1])?);
    let man = header("manifold")?.join(" ");
    let manifold = ManifoldSpec::parse(&mut Params::from_inline("manifold", &man).map_err(CliError::Config)?)
        .map_err(CliError::Config)?;
    let bnd = header("boundary")?.join(" ");
    let boundary = if bnd == "none" {
        None
    } else {
        let mut p = Params::from_inline("boundary", &bnd).map_err(CliError::Config)?;
        Some(BoundarySpec::parse(&mut p, manifold.ambient_dim()).map_err(CliError::Config)?)
    };
    let nodes = header("nodes")?;
    if nodes.len() != 2 {
        return Err(bad("nodes line needs count dim"));
    }
    let (count, dim) = (n(&nodes[0])?, n(&nodes[1])?);
    if count != domain.len() || dim != manifold.ambient_dim() {
        return Err(bad("node count or dimension does not match the header"));
    }
    let mut values = vec![AmbientVector::zeros(dim); count];
    let mut seen = vec![false; count];
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != dim + 1 {
            return Err(bad("node line has the wrong number of entries"));
        }
        let k = n(parts[0])?;
        if k >= count || seen[k] {
            return Err(bad(&format!("node index {k} out of range or repeated")));
        }
        seen[k] = true;
        for c in 0..dim {
            values[k][c] = f(parts[c + 1])?;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(bad("missing node lines"));
    }
    Ok(Snapshot {
        state: FlowState {
            u: MapField {
                domain,
                values,
                manifold_tag: man,
            },
            g,
            time,
            step_index,
        },
        manifold,
        boundary,
    })
}

/// Report fields plus convention metadata.
pub fn neck_report_json(report: &NeckReport, meta: Map<String, Value>) -> Value {
    let l = &report.energy_ledger;
    let d = &report.decay;
    let curve: Vec<Value> = report
        .curve
        .iter()
        .map(|(s, p)| json!({"s": num(*s), "point": num_list(p.as_slice())}))
        .collect();
    let mut obj = json!({
        "alpha": num(report.alpha),
        "drift": num(report.drift),
        "mu": num(report.mu),
        "curve": curve,
        "length": num(report.length),
        "residual_l1": num(report.residual_l1),
        "energy_ledger": {
            "E_total": num(l.e_total),
            "E_identity_prediction": num(l.e_identity_prediction),
            "ratio": num(l.ratio),
            "alpha_T": num(l.alpha_t),
            "identity_multiple": num(l.identity_multiple),
            "prediction_ratio": num(l.prediction_ratio),
            "phi_l1": num(l.phi_l1),
            "max_window_energy": num(l.max_window_energy),
        },
        "velocity_norm": num(report.velocity_norm),
        "full_length": num(report.full_length),
        "collar_length": num(report.collar_length),
        "collar_oscillation": num(report.collar_oscillation),
        "residual_per_length": num(report.residual_per_length),
        "dist_to_k": report.dist_to_k.map(num).unwrap_or(Value::Null),
        "decay": {
            "admissible_c": num(d.admissible_c),
            "fixed_c": num(d.fixed_c),
            "violation_fraction": num(d.violation_fraction),
            "fitted_rate": num(d.fitted_rate),
            "floor": num(d.floor),
            "e_total": num(d.e_total),
        },
        "t_half": num(report.t_half),
        "trim_width": num(report.trim_width),
        "fiber": report.fiber.name(),
        "fiber_period": num(report.fiber.length()),
        "provenance": report.provenance.name(),
    });
    if let Value::Object(o) = &mut obj {
        o.extend(meta);
    }
    obj
}

pub fn write_curve_csv(path: &Path, curve: &[(f64, AmbientVector)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let dim = curve.first().map(|(_, p)| p.dim()).unwrap_or(0);
    let mut header = vec!["s".to_string()];
    header.extend((1..=dim).map(|k| format!("y{k}")));
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for (s, p) in curve {
        let mut row = vec![fmt_num(*s)];
        row.extend(p.as_slice().iter().map(|x| fmt_num(*x)));
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
