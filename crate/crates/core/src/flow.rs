//! Explicit time integration of the coupled map / metric flow on the torus and
//! the free-boundary cylinder, with per-record diagnostics and monitors.

use crate::diagnostics::{
    energy_from_forms, hopf_from_forms, l2_norm, pohozaev, slice_energy_profile, standard_tension, tension_along_l1,
    tension_field_with_ghosts,
};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryData, EmbeddedManifold};
use crate::grid::{dirichlet_forms, stable_dt, DomainKind, FlatMetric, GhostRows, MapField};
use crate::neck::{chart_frame, rescale_unchecked, Degeneration, RescaleOptions};

#[derive(Clone, Debug)]
pub enum BoundaryMode {
    None,
    FreeBoundary(BoundaryData),
}

impl BoundaryMode {
    pub fn data(&self) -> Option<&BoundaryData> {
        match self {
            BoundaryMode::None => None,
            BoundaryMode::FreeBoundary(b) => Some(b),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowConfig {
    pub dt_safety: f64,
    pub t_end: f64,
    /// Concentration threshold ε₀ on unit-window energies.
    pub eps0: f64,
    pub record_every: usize,
    pub boundary: BoundaryMode,
    pub b_min: f64,
    pub b_max: f64,
    /// Window energies only count as concentration once ρ is below this.
    pub rho_threshold: f64,
    pub rescale: RescaleOptions,
    /// Standard-cylinder monitors are skipped above this many nodes.
    pub max_monitor_nodes: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt_safety: 0.9,
            t_end: 1.0,
            eps0: 0.25,
            record_every: 10,
            boundary: BoundaryMode::None,
            b_min: 1e-6,
            b_max: 1e6,
            rho_threshold: 0.3,
            rescale: RescaleOptions::default(),
            max_monitor_nodes: 4_000_000,
        }
    }
}

impl FlowConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "dt_safety must lie in (0,1], got {}",
                self.dt_safety
            )));
        }
        if !(self.eps0 > 0.0) {
            return Err(Error::InvalidInput("eps0 must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be at least 1".into()));
        }
        if !(self.b_min > 0.0 && self.b_min < self.b_max) {
            return Err(Error::InvalidInput("need 0 < b_min < b_max".into()));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::InvalidInput("t_end must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub u: MapField,
    pub g: FlatMetric,
    pub time: f64,
    pub step_index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowRecord {
    pub time: f64,
    pub a: f64,
    pub b: f64,
    pub rho: f64,
    pub energy: f64,
    pub tau_l2: f64,
    pub tau_l1: f64,
    pub phi_re: f64,
    pub phi_im: f64,
    pub alpha: f64,
    pub alpha_drift: f64,
    pub max_unit_window_energy: f64,
    pub dissipation_residual: f64,
}

impl FlowRecord {
    pub const COLUMNS: [&'static str; 13] = [
        "time",
        "a",
        "b",
        "rho",
        "E",
        "tau_l2",
        "tau_l1",
        "Phi_re",
        "Phi_im",
        "alpha",
        "alpha_drift",
        "max_unit_window_energy",
        "dissipation_residual",
    ];

    pub fn values(&self) -> [f64; 13] {
        [
            self.time,
            self.a,
            self.b,
            self.rho,
            self.energy,
            self.tau_l2,
            self.tau_l1,
            self.phi_re,
            self.phi_im,
            self.alpha,
            self.alpha_drift,
            self.max_unit_window_energy,
            self.dissipation_residual,
        ]
    }

    /// ¼|Φ|².
    pub fn metric_dissipation(&self) -> f64 {
        0.25 * (self.phi_re * self.phi_re + self.phi_im * self.phi_im)
    }
}

/// Hypothesis ratios and constraint checks logged alongside each record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorRecord {
    pub time: f64,
    pub tau_over_rho: f64,
    pub tau_l1_over_rho3: f64,
    pub max_manifold_distance: f64,
    pub max_boundary_distance: f64,
    /// max |P_{TK}(∂u/∂x²)| over the boundary rows (one-sided second-order stencil).
    pub boundary_normal_defect: f64,
}

impl MonitorRecord {
    pub const COLUMNS: [&'static str; 6] = [
        "time",
        "tau_over_rho",
        "tau_l1_over_rho3",
        "max_manifold_distance",
        "max_boundary_distance",
        "boundary_normal_defect",
    ];

    pub fn values(&self) -> [f64; 6] {
        [
            self.time,
            self.tau_over_rho,
            self.tau_l1_over_rho3,
            self.max_manifold_distance,
            self.max_boundary_distance,
            self.boundary_normal_defect,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Finished,
    Degenerated,
    ConcentrationDetected,
    BoundaryEscape,
    NonFinite,
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Finished => "Finished",
            RunStatus::Degenerated => "Degenerated",
            RunStatus::ConcentrationDetected => "ConcentrationDetected",
            RunStatus::BoundaryEscape => "BoundaryEscape",
            RunStatus::NonFinite => "NonFinite",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<FlowRecord>,
    pub monitors: Vec<MonitorRecord>,
    pub status: RunStatus,
    pub final_state: FlowState,
    pub message: Option<String>,
    /// Energy-concentration t-slabs of the standard chart when concentration stopped the run.
    pub concentration_slabs: Vec<(f64, f64)>,
}

/// (da/dt, db/dt) = (−b∫[a|u₁|² − u₁·u₂], −½∫[(b² − a²)|u₁|² + 2a u₁·u₂ − |u₂|²]).
pub fn metric_rhs(u: &MapField, g: &FlatMetric) -> Result<(f64, f64)> {
    if !(g.b > 0.0) {
        return Err(Error::DegenerateMetric {
            b: g.b,
            b_min: 0.0,
            b_max: f64::INFINITY,
        });
    }
    Ok(metric_rhs_from_forms(g.a, g.b, dirichlet_forms(u)))
}

fn metric_rhs_from_forms(a: f64, b: f64, [p, q, r]: [f64; 3]) -> (f64, f64) {
    (-b * (a * p - r), -0.5 * ((b * b - a * a) * p + 2.0 * a * r - q))
}

/// Projects the cylinder's endpoint rows onto K and builds ghost rows σ(mirror row).
pub fn enforce_free_boundary(u: &MapField, boundary: &BoundaryData) -> Result<(MapField, GhostRows)> {
    let d = u.domain;
    if d.kind != DomainKind::FreeBoundaryCylinder {
        return Err(Error::InvalidInput("free boundary needs a cylinder domain".into()));
    }
    let mut out = u.clone();
    for j in [0, d.n2 - 1] {
        for i in 0..d.n1 {
            let idx = d.index(i, j);
            out.values[idx] = boundary.submanifold_project(&u.values[idx])?;
        }
    }
    let lower = (0..d.n1)
        .map(|i| boundary.sigma(&out.at(i, 1)))
        .collect::<Result<Vec<_>>>()?;
    let upper = (0..d.n1)
        .map(|i| boundary.sigma(&out.at(i, d.n2 - 2)))
        .collect::<Result<Vec<_>>>()?;
    Ok((out, GhostRows { lower, upper }))
}

fn ghosts_for(u: &MapField, cfg: &FlowConfig) -> Result<Option<GhostRows>> {
    match (&cfg.boundary, u.domain.kind) {
        (BoundaryMode::FreeBoundary(b), DomainKind::FreeBoundaryCylinder) => Ok(Some(enforce_free_boundary(u, b)?.1)),
        _ => Ok(None),
    }
}

/// Chart used for ρ and the standard-cylinder monitors.
pub fn monitor_degeneration(u: &MapField, g: &FlatMetric) -> Degeneration {
    match u.domain.kind {
        DomainKind::ClosedTorus => Degeneration::Torus,
        DomainKind::FreeBoundaryCylinder => {
            let circle = 1.0 / g.b.sqrt();
            let interval = g.b.sqrt() * u.domain.x2_length;
            if circle <= interval {
                Degeneration::TypeI
            } else {
                Degeneration::TypeII
            }
        }
    }
}

/// Step size the stability rule gives for the current state.
pub fn time_step(state: &FlowState, cfg: &FlowConfig) -> f64 {
    stable_dt(&state.u.domain, &state.g, cfg.dt_safety)
}

/// One explicit step of length `dt`: metric by RK2 midpoint with the map frozen,
/// map by u ← Π_N(u + dt·τ), then boundary enforcement.
pub fn step_with_dt(state: &FlowState, cfg: &FlowConfig, manifold: &EmbeddedManifold, dt: f64) -> Result<FlowState> {
    let u = &state.u;
    let g = state.g;
    let ghosts = ghosts_for(u, cfg)?;
    let tau = tension_field_with_ghosts(u, &g, manifold, ghosts.as_ref())?;

    let forms = dirichlet_forms(u);
    let (ka, kb) = metric_rhs_from_forms(g.a, g.b, forms);
    let (ma, mb) = (g.a + 0.5 * dt * ka, g.b + 0.5 * dt * kb);
    let (ka2, kb2) = metric_rhs_from_forms(ma, mb, forms);
    let (a_new, b_new) = (g.a + dt * ka2, g.b + dt * kb2);
    if !a_new.is_finite() || !b_new.is_finite() {
        return Err(Error::NonFiniteValue {
            context: "metric update".into(),
        });
    }
    if !(b_new > cfg.b_min && b_new < cfg.b_max) {
        return Err(Error::DegenerateMetric {
            b: b_new,
            b_min: cfg.b_min,
            b_max: cfg.b_max,
        });
    }

    let mut next = u.clone();
    for (v, t) in next.values.iter_mut().zip(&tau) {
        let moved = v.axpy(dt, t);
        if !moved.is_finite() {
            return Err(Error::NonFiniteValue {
                context: "map update".into(),
            });
        }
        *v = manifold.project(&moved)?;
    }
    if let (BoundaryMode::FreeBoundary(b), DomainKind::FreeBoundaryCylinder) = (&cfg.boundary, u.domain.kind) {
        next = enforce_free_boundary(&next, b)?.0;
    }
    Ok(FlowState {
        u: next,
        g: FlatMetric { a: a_new, b: b_new },
        time: state.time + dt,
        step_index: state.step_index + 1,
    })
}

/// One step with the stability-limited dt, clipped so that t_end is hit exactly.
pub fn step(state: &FlowState, cfg: &FlowConfig, manifold: &EmbeddedManifold) -> Result<FlowState> {
    let dt = time_step(state, cfg).min(cfg.t_end - state.time);
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("no time left before t_end".into()));
    }
    step_with_dt(state, cfg, manifold, dt)
}

/// |ΔE/Δt + ‖τ‖² + ¼|Φ|²| with the dissipation terms averaged over the two records.
pub fn dissipation_residual(prev: &FlowRecord, next: &FlowRecord) -> f64 {
    let dt = next.time - prev.time;
    let de = (next.energy - prev.energy) / dt;
    let tau = 0.5 * (prev.tau_l2 * prev.tau_l2 + next.tau_l2 * next.tau_l2);
    let phi = 0.5 * (prev.metric_dissipation() + next.metric_dissipation());
    (de + tau + phi).abs()
}

/// Diagnostics of a state; `prev` supplies the dissipation residual.
pub fn record_state(
    state: &FlowState,
    cfg: &FlowConfig,
    manifold: &EmbeddedManifold,
    prev: Option<&FlowRecord>,
) -> Result<(FlowRecord, MonitorRecord, Vec<(f64, f64)>)> {
    let u = &state.u;
    let g = state.g;
    let forms = dirichlet_forms(u);
    let energy = energy_from_forms(&g, forms);
    let phi = hopf_from_forms(&g, forms);
    let ghosts = ghosts_for(u, cfg)?;
    let tau = tension_field_with_ghosts(u, &g, manifold, ghosts.as_ref())?;
    let degeneration = monitor_degeneration(u, &g);
    let frame = chart_frame(u.domain.kind, u.domain.x2_length, &g, degeneration)?;
    let tau_l2 = l2_norm(&tau, u);
    let tau_l1 = tension_along_l1(u, &g, &tau, frame.fiber_vector);

    let per_unit = cfg.rescale.min_nodes_per_unit as f64;
    let estimate = (2.0 * frame.t_half * per_unit + (u.domain.n1 + u.domain.n2) as f64)
        * (u.domain.n1.max(u.domain.n2).max(cfg.rescale.min_fiber_nodes) + 1) as f64;
    let (mut alpha, mut alpha_drift, mut window, mut slabs) = (f64::NAN, f64::NAN, f64::NAN, Vec::new());
    if estimate <= cfg.max_monitor_nodes as f64 {
        let v = rescale_unchecked(u, &g, degeneration, manifold, cfg.boundary.data(), &cfg.rescale)?;
        let tau_std = standard_tension(&v, manifold)?;
        let poh = pohozaev(&v, &tau_std);
        alpha = poh.alpha;
        alpha_drift = poh.drift;
        let profile = slice_energy_profile(&v, 1.0);
        window = profile.iter().fold(0.0f64, |m, p| m.max(p.1));
        for (t, e) in profile {
            if e > cfg.eps0 {
                match slabs.last_mut() {
                    Some((_, hi)) if t - 0.5 <= *hi => *hi = t + 0.5,
                    _ => slabs.push((t - 0.5, t + 0.5)),
                }
            }
        }
    }

    let mut rec = FlowRecord {
        time: state.time,
        a: g.a,
        b: g.b,
        rho: frame.rho,
        energy,
        tau_l2,
        tau_l1,
        phi_re: phi.re,
        phi_im: phi.im,
        alpha,
        alpha_drift,
        max_unit_window_energy: window,
        dissipation_residual: f64::NAN,
    };
    if let Some(p) = prev {
        rec.dissipation_residual = dissipation_residual(p, &rec);
    }

    let mut max_manifold_distance = 0.0f64;
    for v in &u.values {
        max_manifold_distance = max_manifold_distance.max(manifold.distance(v)?);
    }
    let (mut max_boundary_distance, mut boundary_normal_defect) = (0.0f64, 0.0f64);
    if let (Some(b), DomainKind::FreeBoundaryCylinder) = (cfg.boundary.data(), u.domain.kind) {
        let d = u.domain;
        let h = d.h2();
        for i in 0..d.n1 {
            for j in [0, d.n2 - 1] {
                let p = u.at(i, j);
                max_boundary_distance = max_boundary_distance.max(p.distance(&b.submanifold_project(&p)?));
                let (p1, p2) = if j == 0 {
                    (u.at(i, 1), u.at(i, 2))
                } else {
                    (u.at(i, j - 1), u.at(i, j - 2))
                };
                // outward normal derivative, one-sided second order
                let dn = (p1.scale(4.0) - p.scale(3.0) - p2).scale(-0.5 / h);
                boundary_normal_defect = boundary_normal_defect.max(b.tangent_project_k(&p, &dn).norm());
            }
        }
    }
    let mon = MonitorRecord {
        time: state.time,
        tau_over_rho: tau_l2 / frame.rho,
        tau_l1_over_rho3: tau_l1 / frame.rho.powi(3),
        max_manifold_distance,
        max_boundary_distance,
        boundary_normal_defect,
    };
    Ok((rec, mon, slabs))
}

/// Rejects initial data off N (or with boundary rows off K) by more than the tolerance.
pub fn validate_initial(state: &FlowState, cfg: &FlowConfig, manifold: &EmbeddedManifold) -> Result<()> {
    cfg.validate()?;
    if state.u.dim() != manifold.ambient_dim() {
        return Err(Error::InvalidInput("map dimension does not match the manifold".into()));
    }
    if !(state.g.b > cfg.b_min && state.g.b < cfg.b_max) {
        return Err(Error::DegenerateMetric {
            b: state.g.b,
            b_min: cfg.b_min,
            b_max: cfg.b_max,
        });
    }
    let tol = manifold.tolerance();
    for v in &state.u.values {
        if !v.is_finite() {
            return Err(Error::NonFiniteValue {
                context: "initial data".into(),
            });
        }
        let distance = manifold.distance(v)?;
        if distance > tol {
            return Err(Error::PointOffManifold { distance });
        }
    }
    if let (Some(b), DomainKind::FreeBoundaryCylinder) = (cfg.boundary.data(), state.u.domain.kind) {
        let d = state.u.domain;
        for j in [0, d.n2 - 1] {
            for i in 0..d.n1 {
                let p = state.u.at(i, j);
                let distance = p.distance(&b.submanifold_project(&p)?);
                if distance > tol {
                    return Err(Error::InvalidInput(format!(
                        "boundary node ({i},{j}) is {distance:e} away from K"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn status_for(err: &Error) -> RunStatus {
    match err {
        Error::DegenerateMetric { .. } => RunStatus::Degenerated,
        Error::OutsideTubularNeighborhood { .. } => RunStatus::BoundaryEscape,
        _ => RunStatus::NonFinite,
    }
}

/// Steps until t_end or a terminal status. Records are taken at step 0, every
/// `record_every` steps, and at the final state.
pub fn run(initial: FlowState, cfg: &FlowConfig, manifold: &EmbeddedManifold) -> Result<RunOutcome> {
    validate_initial(&initial, cfg, manifold)?;
    let mut state = initial;
    let mut records = Vec::new();
    let mut monitors = Vec::new();
    let (rec, mon, slabs) = record_state(&state, cfg, manifold, None)?;
    records.push(rec);
    monitors.push(mon);
    let outcome = |state: FlowState, records, monitors, status, message, concentration_slabs| RunOutcome {
        records,
        monitors,
        status,
        final_state: state,
        message,
        concentration_slabs,
    };
    if rec.max_unit_window_energy > cfg.eps0 && rec.rho < cfg.rho_threshold {
        return Ok(outcome(
            state,
            records,
            monitors,
            RunStatus::ConcentrationDetected,
            None,
            slabs,
        ));
    }
    let mut recorded_at = state.step_index;
    while state.time < cfg.t_end {
        let next = match step(&state, cfg, manifold) {
            Ok(n) => n,
            Err(e) => {
                let status = status_for(&e);
                if recorded_at != state.step_index {
                    if let Ok((rec, mon, _)) = record_state(&state, cfg, manifold, records.last()) {
                        records.push(rec);
                        monitors.push(mon);
                    }
                }
                return Ok(outcome(
                    state,
                    records,
                    monitors,
                    status,
                    Some(e.to_string()),
                    Vec::new(),
                ));
            }
        };
        state = next;
        let last = state.time >= cfg.t_end;
        if state.step_index % cfg.record_every == 0 || last {
            let (rec, mon, slabs) = match record_state(&state, cfg, manifold, records.last()) {
                Ok(r) => r,
                Err(e) => {
                    let status = status_for(&e);
                    return Ok(outcome(
                        state,
                        records,
                        monitors,
                        status,
                        Some(e.to_string()),
                        Vec::new(),
                    ));
                }
            };
            recorded_at = state.step_index;
            records.push(rec);
            monitors.push(mon);
            if rec.max_unit_window_energy > cfg.eps0 && rec.rho < cfg.rho_threshold {
                return Ok(outcome(
                    state,
                    records,
                    monitors,
                    RunStatus::ConcentrationDetected,
                    None,
                    slabs,
                ));
            }
        }
    }
    Ok(outcome(state, records, monitors, RunStatus::Finished, None, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;
    use crate::vector::AmbientVector;
    use std::f64::consts::PI;

    fn v3(x: f64, y: f64, z: f64) -> AmbientVector {
        AmbientVector::from_slice(&[x, y, z])
    }

    fn winding(n1: usize, n2: usize) -> MapField {
        let d = DomainSpec::torus(n1, n2).unwrap();
        MapField::from_fn(d, "sphere", |x1, _| {
            v3((2.0 * PI * x1).cos(), (2.0 * PI * x1).sin(), 0.0)
        })
    }

    #[test]
    fn metric_rhs_examples() {
        let d = DomainSpec::torus(16, 16).unwrap();
        let c = MapField::from_fn(d, "sphere", |_, _| v3(0.0, 1.0, 0.0));
        assert_eq!(metric_rhs(&c, &FlatMetric::new(0.3, 2.0).unwrap()).unwrap(), (0.0, 0.0));
        let w = winding(256, 8);
        let (da, db) = metric_rhs(&w, &FlatMetric::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(da, 0.0);
        assert!((db + 2.0 * PI * PI).abs() < 2e-3, "{db}");
        let (p, m) = (
            metric_rhs(&w, &FlatMetric::new(0.4, 1.0).unwrap()).unwrap().0,
            metric_rhs(&w, &FlatMetric::new(-0.4, 1.0).unwrap()).unwrap().0,
        );
        assert!((p + m).abs() < 1e-12 && p != 0.0);
    }

    #[test]
    fn constant_map_is_a_fixed_point() {
        let s = EmbeddedManifold::unit_sphere(3);
        let d = DomainSpec::torus(8, 8).unwrap();
        let c = MapField::from_fn(d, "sphere", |_, _| v3(0.0, 0.0, 1.0));
        let state = FlowState {
            u: c.clone(),
            g: FlatMetric::new(0.0, 1.0).unwrap(),
            time: 0.0,
            step_index: 0,
        };
        let cfg = FlowConfig {
            t_end: 0.05,
            ..FlowConfig::default()
        };
        let out = run(state, &cfg, &s).unwrap();
        assert_eq!(out.status, RunStatus::Finished);
        assert_eq!(out.final_state.u, c);
        assert_eq!(out.final_state.g, FlatMetric::new(0.0, 1.0).unwrap());
        assert!((out.final_state.time - 0.05).abs() < 1e-15);
        assert!(out.records.iter().all(|r| r.energy == 0.0));
    }

    #[test]
    fn winding_step_moves_only_the_metric() {
        let s = EmbeddedManifold::unit_sphere(3);
        let u = winding(64, 8);
        let state = FlowState {
            u: u.clone(),
            g: FlatMetric::new(0.0, 1.0).unwrap(),
            time: 0.0,
            step_index: 0,
        };
        let cfg = FlowConfig::default();
        let dt = time_step(&state, &cfg);
        let next = step(&state, &cfg, &s).unwrap();
        let moved = next
            .u
            .values
            .iter()
            .zip(&u.values)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max);
        assert!(moved < 1e-12);
        // ḃ = −½b²P, P = 4π²(1 − O(h²)) from the compact forms
        let p = dirichlet_forms(&u)[0];
        let h = u.domain.h1();
        assert!((p - 4.0 * PI * PI).abs() < 4.0 * PI * PI * (2.0 * PI * h).powi(2) / 10.0);
        assert!(((next.g.b - 1.0) / dt + 0.5 * p).abs() < 4.0 * PI.powi(4) * dt);
    }

    #[test]
    fn off_manifold_initial_data_is_rejected() {
        let s = EmbeddedManifold::unit_sphere(3);
        let mut u = winding(16, 16);
        u.values[5] = u.values[5].scale(1.001);
        let state = FlowState {
            u,
            g: FlatMetric::new(0.0, 1.0).unwrap(),
            time: 0.0,
            step_index: 0,
        };
        assert!(matches!(
            run(state, &FlowConfig::default(), &s),
            Err(Error::PointOffManifold { .. })
        ));
    }

    #[test]
    fn free_boundary_enforcement_fixes_k_valued_fields() {
        let s = EmbeddedManifold::unit_sphere(3);
        let b = BoundaryData::equator(&s).unwrap();
        let d = DomainSpec::cylinder(16, 9).unwrap();
        let u = MapField::from_fn(d, "sphere", |x1, _| {
            v3((2.0 * PI * x1).cos(), (2.0 * PI * x1).sin(), 0.0)
        });
        let (out, ghosts) = enforce_free_boundary(&u, &b).unwrap();
        for (p, q) in out.values.iter().zip(&u.values) {
            assert!(p.distance(q) < 1e-15);
        }
        for i in 0..16 {
            assert_eq!(ghosts.lower[i], u.at(i, 1));
        }
        // a pure-normal drift δ of a boundary node is removed to first order
        let mut drifted = u.clone();
        let delta = 1e-4;
        drifted.values[3] = s.project(&(u.values[3] + v3(0.0, 0.0, delta))).unwrap();
        let (fixed, _) = enforce_free_boundary(&drifted, &b).unwrap();
        let shift = fixed.values[3].distance(&drifted.values[3]);
        assert!((shift - delta).abs() < delta * delta * 10.0);
    }
}
