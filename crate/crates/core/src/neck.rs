//! Neck analysis: rescaling a degenerating state to the standard cylinder, the
//! σ-extension across the boundary, the mean curve, its length and geodesic-like
//! residual, the energy-identity ledger and the decay-envelope check.

use std::f64::consts::PI;

use crate::cylinder::{cumulative_trapezoid, interpolate_uniform};
pub use crate::cylinder::{Fiber, Provenance, StandardCylinderField};
use crate::diagnostics::{
    hopf_l1, oscillation, pohozaev, slice_energy_profile, standard_energy, standard_tension, standard_tension_norms,
};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryData, EmbeddedManifold};
use crate::grid::{DomainKind, FlatMetric, MapField};
use crate::vector::AmbientVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degeneration {
    Torus,
    TypeI,
    TypeII,
}

impl Degeneration {
    pub fn provenance(&self) -> Provenance {
        match self {
            Degeneration::Torus => Provenance::Torus,
            Degeneration::TypeI => Provenance::TypeI,
            Degeneration::TypeII => Provenance::TypeII,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaleOptions {
    pub rho_threshold: f64,
    pub min_nodes_per_unit: usize,
    pub min_fiber_nodes: usize,
}

impl Default for RescaleOptions {
    fn default() -> Self {
        Self {
            rho_threshold: 0.3,
            min_nodes_per_unit: 2,
            min_fiber_nodes: 16,
        }
    }
}

/// How the standard cylinder sits inside the (θ¹, θ²) plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartFrame {
    /// Lattice vector (or interval) spanning one fiber, in (θ¹, θ²).
    pub fiber_vector: [f64; 2],
    /// Unit direction of increasing t, in (θ¹, θ²).
    pub long_direction: [f64; 2],
    pub rho: f64,
    pub fiber: Fiber,
    pub t_half: f64,
    /// Standard-cylinder length per unit of θ-length.
    pub scale: f64,
    pub t_formula: &'static str,
}

pub fn chart_frame(kind: DomainKind, x2_length: f64, g: &FlatMetric, degeneration: Degeneration) -> Result<ChartFrame> {
    let s = g.b.sqrt();
    let along_first = |rho: f64| ([rho, 0.0], [0.0, 1.0]);
    let (fiber_vector, long_direction, fiber, area) = match (degeneration, kind) {
        (Degeneration::Torus, DomainKind::ClosedTorus) => {
            let shift = g.a - g.a.round();
            let first = [1.0 / s, 0.0];
            let second = [shift / s, s];
            let len = |v: [f64; 2]| v[0].hypot(v[1]);
            if len(first) <= len(second) {
                let (f, l) = along_first(1.0 / s);
                (f, l, Fiber::Circle, 1.0)
            } else {
                let n = len(second);
                (second, [second[1] / n, -second[0] / n], Fiber::Circle, 1.0)
            }
        }
        (Degeneration::TypeI, DomainKind::FreeBoundaryCylinder) => {
            let (f, l) = along_first(1.0 / s);
            (f, l, Fiber::Circle, x2_length)
        }
        (Degeneration::TypeII, DomainKind::FreeBoundaryCylinder) => {
            ([0.0, s * x2_length], [1.0, 0.0], Fiber::Interval, x2_length)
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "degeneration {degeneration:?} does not apply to a {kind:?} domain"
            )))
        }
    };
    let rho = fiber_vector[0].hypot(fiber_vector[1]);
    let scale = fiber.length() / rho;
    let (t_half, t_formula) = match fiber {
        Fiber::Circle => (PI * area / (rho * rho), "T = pi * area / rho^2"),
        Fiber::Interval => (PI * area / (2.0 * rho * rho), "T = pi * area / (2 rho^2)"),
    };
    Ok(ChartFrame {
        fiber_vector,
        long_direction,
        rho,
        fiber,
        t_half,
        scale,
        t_formula,
    })
}

/// Periodic-in-x¹ bilinear interpolation of a domain field (periodic or clamped in x²).
pub fn sample_bilinear(u: &MapField, x: [f64; 2]) -> AmbientVector {
    let d = u.domain;
    let s1 = (x[0] / d.h1()).rem_euclid(d.n1 as f64);
    let i0 = (s1.floor() as usize) % d.n1;
    let f1 = s1 - s1.floor();
    let i1 = (i0 + 1) % d.n1;
    let (j0, j1, f2) = match d.kind {
        DomainKind::ClosedTorus => {
            let s2 = (x[1] / d.h2()).rem_euclid(d.n2 as f64);
            let j0 = (s2.floor() as usize) % d.n2;
            (j0, (j0 + 1) % d.n2, s2 - s2.floor())
        }
        DomainKind::FreeBoundaryCylinder => {
            let s2 = (x[1] / d.h2()).clamp(0.0, (d.n2 - 1) as f64);
            let j0 = (s2.floor() as usize).min(d.n2 - 2);
            (j0, j0 + 1, s2 - j0 as f64)
        }
    };
    u.at(i0, j0).scale((1.0 - f1) * (1.0 - f2))
        + u.at(i1, j0).scale(f1 * (1.0 - f2))
        + u.at(i0, j1).scale((1.0 - f1) * f2)
        + u.at(i1, j1).scale(f1 * f2)
}

/// Input to the neck pipeline: a domain state or an already-standard field.
#[derive(Clone, Debug)]
pub enum NeckSource {
    Domain { u: MapField, g: FlatMetric },
    Standard(StandardCylinderField),
}

/// Resamples onto the standard cylinder after checking that the metric has degenerated.
pub fn rescale_to_standard(
    source: &NeckSource,
    degeneration: Degeneration,
    manifold: &EmbeddedManifold,
    boundary: Option<&BoundaryData>,
    opts: &RescaleOptions,
) -> Result<StandardCylinderField> {
    match source {
        NeckSource::Standard(v) => Ok(v.clone()),
        NeckSource::Domain { u, g } => {
            let frame = chart_frame(u.domain.kind, u.domain.x2_length, g, degeneration)?;
            if frame.rho >= opts.rho_threshold {
                return Err(Error::NotDegenerate {
                    rho: frame.rho,
                    threshold: opts.rho_threshold,
                });
            }
            rescale_unchecked(u, g, degeneration, manifold, boundary, opts)
        }
    }
}

/// Resampling without the degeneration check; used by the flow monitors.
pub fn rescale_unchecked(
    u: &MapField,
    g: &FlatMetric,
    degeneration: Degeneration,
    manifold: &EmbeddedManifold,
    boundary: Option<&BoundaryData>,
    opts: &RescaleOptions,
) -> Result<StandardCylinderField> {
    let d = u.domain;
    let frame = chart_frame(d.kind, d.x2_length, g, degeneration)?;
    let fiber_along_x1 = frame.fiber_vector[1] == 0.0;
    let (native_fiber, native_long) = if fiber_along_x1 { (d.n1, d.n2) } else { (d.n2, d.n1) };
    let nt = (native_long + 1).max((2.0 * frame.t_half * opts.min_nodes_per_unit as f64).ceil() as usize + 1);
    let nth = match frame.fiber {
        Fiber::Circle => native_fiber.max(opts.min_fiber_nodes),
        Fiber::Interval => native_fiber.max(opts.min_fiber_nodes + 1),
    };
    let f_hat = [frame.fiber_vector[0] / frame.rho, frame.fiber_vector[1] / frame.rho];
    let s_hat = frame.long_direction;
    let mut values = Vec::with_capacity(nt * nth);
    let probe =
        StandardCylinderField::from_fn(frame.t_half, nt, nth, frame.fiber, degeneration.provenance(), |_, _| {
            AmbientVector::zeros(u.dim())
        })?;
    for k in 0..nt {
        let along = (probe.t(k) + frame.t_half) / frame.scale;
        for j in 0..nth {
            let across = probe.theta(j) / frame.scale;
            let th = [
                along * s_hat[0] + across * f_hat[0],
                along * s_hat[1] + across * f_hat[1],
            ];
            let mut p = manifold.project(&sample_bilinear(u, g.from_theta(th)))?;
            if frame.fiber == Fiber::Interval && (j == 0 || j == nth - 1) {
                if let Some(b) = boundary {
                    p = b.submanifold_project(&p)?;
                }
            }
            values.push(p);
        }
    }
    StandardCylinderField::from_values(frame.t_half, nt, nth, frame.fiber, degeneration.provenance(), values)
}

/// σ-reflected extension of an interval-fiber field to the full circle:
/// û(t, θ) = σ(v(t, 2π − θ)) for θ ∈ (π, 2π).
pub fn extend_across_boundary(v: &StandardCylinderField, boundary: &BoundaryData) -> Result<StandardCylinderField> {
    if v.fiber != Fiber::Interval {
        return Err(Error::InvalidInput("extension needs an interval fiber".into()));
    }
    let m = v.nth;
    let full = 2 * (m - 1);
    let mut values = Vec::with_capacity(v.nt * full);
    for k in 0..v.nt {
        for j in 0..full {
            if j < m {
                values.push(v.at(k, j));
            } else {
                values.push(boundary.sigma(&v.at(k, full - j))?);
            }
        }
    }
    StandardCylinderField::from_values(v.t_half, v.nt, full, Fiber::Circle, v.provenance, values)
}

/// Fiber average per slice (an ambient curve, not projected to N).
pub fn mean_curve(v: &StandardCylinderField) -> Result<Vec<AmbientVector>> {
    if v.fiber != Fiber::Circle {
        return Err(Error::InvalidInput("mean curve needs a circle fiber".into()));
    }
    Ok((0..v.nt)
        .map(|k| {
            let mut acc = AmbientVector::zeros(v.dim());
            for p in v.slice(k) {
                acc += *p;
            }
            acc.scale(1.0 / v.nth as f64)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveOptions {
    pub trim_exponent: f64,
    /// Speeds below `velocity_floor·√|α|` count as slow.
    pub velocity_floor: f64,
    /// Include ½D²σ in the residual.
    pub geodesic_like: bool,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            trim_exponent: 0.25,
            velocity_floor: 1e-3,
            geodesic_like: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveAnalysis {
    /// Length over the trimmed window.
    pub length: f64,
    pub full_length: f64,
    pub collar_length: f64,
    pub residual_l1: f64,
    pub residual_per_length: f64,
    pub velocity_norm: f64,
    pub window: (f64, f64),
    pub slow_fraction: f64,
    /// (arclength from the window start, curve point) at the nodes inside the window.
    pub samples: Vec<(f64, AmbientVector)>,
    pub dist_to_k: Option<f64>,
}

fn curve_derivatives(curve: &[AmbientVector], h: f64) -> (Vec<AmbientVector>, Vec<AmbientVector>) {
    let n = curve.len();
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for k in 0..n {
        let first = if k == 0 {
            curve[1].scale(4.0) - curve[0].scale(3.0) - curve[2]
        } else if k == n - 1 {
            curve[k].scale(3.0) - curve[k - 1].scale(4.0) + curve[k - 2]
        } else {
            curve[k + 1] - curve[k - 1]
        };
        d1.push(first.scale(0.5 / h));
        let second = if k == 0 {
            curve[0].scale(2.0) - curve[1].scale(5.0) + curve[2].scale(4.0) - curve[3]
        } else if k == n - 1 {
            curve[k].scale(2.0) - curve[k - 1].scale(5.0) + curve[k - 2].scale(4.0) - curve[k - 3]
        } else {
            curve[k + 1] + curve[k - 1] - curve[k].scale(2.0)
        };
        d2.push(second.scale(1.0 / (h * h)));
    }
    (d1, d2)
}

/// Length, geodesic(-like) residual and normalized speed of a curve sampled on the
/// uniform t-grid of [−T, T].
pub fn arclength_and_residual(
    curve: &[AmbientVector],
    t_half: f64,
    alpha: f64,
    manifold: &EmbeddedManifold,
    boundary: Option<&BoundaryData>,
    opts: &CurveOptions,
) -> Result<CurveAnalysis> {
    let n = curve.len();
    if n < 5 {
        return Err(Error::InvalidInput("curve needs at least five samples".into()));
    }
    let h = 2.0 * t_half / (n - 1) as f64;
    let (vel, acc) = curve_derivatives(curve, h);
    let speed: Vec<f64> = vel.iter().map(|v| v.norm()).collect();
    let cumulative = cumulative_trapezoid(&speed, h);
    let trim = t_half.powf(opts.trim_exponent);
    let (w0, w1) = (-t_half + trim, t_half - trim);
    if w0 >= w1 {
        return Err(Error::InvalidInput(format!("trimmed window is empty for T = {t_half}")));
    }
    let at = |t: f64| interpolate_uniform(&cumulative, -t_half, h, t);
    let length = at(w1) - at(w0);
    let full_length = *cumulative.last().unwrap();
    let inside: Vec<usize> = (0..n)
        .filter(|&k| {
            let t = -t_half + k as f64 * h;
            t >= w0 - 1e-12 && t <= w1 + 1e-12
        })
        .collect();
    let floor = opts.velocity_floor * alpha.abs().sqrt() + 1e-12;
    let slow = inside.iter().filter(|&&k| speed[k] < floor).count();
    let slow_fraction = slow as f64 / inside.len().max(1) as f64;
    if slow_fraction > 0.1 {
        return Err(Error::DegenerateVelocity { length, slow_fraction });
    }

    let mut defect = Vec::with_capacity(inside.len());
    for &k in &inside {
        if speed[k] < floor {
            defect.push(0.0);
            continue;
        }
        let v = vel[k];
        let a = acc[k];
        let sp2 = speed[k] * speed[k];
        let curvature = (a - v.scale(a.dot(&v) / sp2)).scale(1.0 / sp2);
        let p = manifold.project(&curve[k])?;
        let us = v.scale(1.0 / speed[k]);
        let mut r = curvature + manifold.second_fundamental_form_unchecked(&p, &us, &us);
        if opts.geodesic_like {
            let b = boundary.ok_or_else(|| Error::InvalidInput("geodesic-like residual needs boundary data".into()))?;
            let ut = manifold.tangent_project_unchecked(&p, &us);
            r -= b.d2_sigma(&p, &ut, &ut)?.scale(0.5);
        }
        // ds = |u̇| dt
        defect.push(r.norm() * speed[k]);
    }
    let mut residual_l1 = 0.0;
    for w in defect.windows(2) {
        residual_l1 += 0.5 * h * (w[0] + w[1]);
    }
    let velocity_norm = if alpha != 0.0 {
        inside.iter().map(|&k| speed[k]).sum::<f64>() / inside.len() as f64 / alpha.abs().sqrt()
    } else {
        f64::NAN
    };
    let s0 = at(w0);
    let samples = inside.iter().map(|&k| (cumulative[k] - s0, curve[k])).collect();
    let dist_to_k = match boundary {
        Some(b) => {
            let mut worst = 0.0f64;
            for &k in &inside {
                let p = manifold.project(&curve[k])?;
                worst = worst.max(curve[k].distance(&b.submanifold_project(&p)?));
            }
            Some(worst)
        }
        None => None,
    };
    Ok(CurveAnalysis {
        length,
        full_length,
        collar_length: full_length - length,
        residual_l1,
        residual_per_length: if length > 0.0 { residual_l1 / length } else { f64::NAN },
        velocity_norm,
        window: (w0, w1),
        slow_fraction,
        samples,
        dist_to_k,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyLedger {
    pub e_total: f64,
    pub alpha_t: f64,
    /// 4 for a circle fiber, 2 for an interval fiber.
    pub identity_multiple: f64,
    /// identity_multiple · α · T.
    pub e_identity_prediction: f64,
    /// E_total / (α T).
    pub ratio: f64,
    /// E_total / e_identity_prediction.
    pub prediction_ratio: f64,
    pub phi_l1: f64,
    pub max_window_energy: f64,
}

/// Maximal t-slabs whose unit windows carry more than `eps0` energy.
pub fn concentration_slabs(v: &StandardCylinderField, eps0: f64) -> Vec<(f64, f64)> {
    let mut slabs: Vec<(f64, f64)> = Vec::new();
    for (t, e) in slice_energy_profile(v, 1.0) {
        if e > eps0 {
            let (lo, hi) = (t - 0.5, t + 0.5);
            match slabs.last_mut() {
                Some(last) if lo <= last.1 => last.1 = hi,
                _ => slabs.push((lo, hi)),
            }
        }
    }
    slabs
}

pub fn energy_identity_ledger(v: &StandardCylinderField, alpha: f64, eps0: f64) -> Result<EnergyLedger> {
    let slabs = concentration_slabs(v, eps0);
    if !slabs.is_empty() {
        return Err(Error::ConcentrationPresent { slabs });
    }
    let max_window_energy = slice_energy_profile(v, 1.0).iter().fold(0.0f64, |m, (_, e)| m.max(*e));
    let e_total = standard_energy(v);
    let alpha_t = alpha * v.t_half;
    let identity_multiple = match v.fiber {
        Fiber::Circle => 4.0,
        Fiber::Interval => 2.0,
    };
    let e_identity_prediction = identity_multiple * alpha_t;
    Ok(EnergyLedger {
        e_total,
        alpha_t,
        identity_multiple,
        e_identity_prediction,
        ratio: e_total / alpha_t,
        prediction_ratio: e_total / e_identity_prediction,
        phi_l1: hopf_l1(v),
        max_window_energy,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    /// Smallest C with W(t) ≤ C·(E e^{−d/6} + floor) on every window.
    pub admissible_c: f64,
    pub fixed_c: f64,
    /// Fraction of windows violating the envelope with `fixed_c`.
    pub violation_fraction: f64,
    /// Exponential decay rate of the window energies away from their peak.
    pub fitted_rate: f64,
    pub floor: f64,
    pub e_total: f64,
}

/// Tests the windows [t−1, t+1] against E·e^{−d/6} + (|α| + ‖τ·v_t‖_{L¹} + ‖τ‖²_{L²}),
/// d the distance of t to the ends of the cylinder.
pub fn decay_profile_check(v: &StandardCylinderField, tau: &[AmbientVector], alpha: f64, fixed_c: f64) -> DecayReport {
    let windows = slice_energy_profile(v, 2.0);
    let e_total = standard_energy(v);
    let (tau_l2, tau_l1) = standard_tension_norms(v, tau);
    let floor = alpha.abs() + tau_l1 + tau_l2 * tau_l2;
    let mut admissible_c = 0.0f64;
    let mut violations = 0usize;
    for &(t, w) in &windows {
        let d = (t + v.t_half).min(v.t_half - t);
        let env = e_total * (-d / 6.0).exp() + floor;
        if w > 0.0 {
            admissible_c = admissible_c.max(if env > 0.0 { w / env } else { f64::INFINITY });
        }
        if w > fixed_c * env {
            violations += 1;
        }
    }
    DecayReport {
        admissible_c,
        fixed_c,
        violation_fraction: violations as f64 / windows.len().max(1) as f64,
        fitted_rate: fit_decay_rate(&windows),
        floor,
        e_total,
    }
}

fn fit_decay_rate(windows: &[(f64, f64)]) -> f64 {
    if windows.len() < 3 {
        return f64::NAN;
    }
    let mut sorted: Vec<f64> = windows.iter().map(|w| w.1).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    let (tp, wp) = windows
        .iter()
        .fold((0.0, f64::NEG_INFINITY), |m, &(t, w)| if w > m.1 { (t, w) } else { m });
    let excess = wp - median;
    if !(excess > 0.0) {
        return f64::NAN;
    }
    let pts: Vec<(f64, f64)> = windows
        .iter()
        .filter(|&&(t, w)| (t - tp).abs() >= 1.0 && w - median > 1e-8 * excess)
        .map(|&(t, w)| ((t - tp).abs(), (w - median).ln()))
        .collect();
    if pts.len() < 3 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    -sxy / sxx
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeckOptions {
    pub curve: CurveOptions,
    pub eps0: f64,
    pub decay_c: f64,
}

impl Default for NeckOptions {
    fn default() -> Self {
        Self {
            curve: CurveOptions::default(),
            eps0: 0.25,
            decay_c: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeckReport {
    pub alpha: f64,
    pub drift: f64,
    pub mu: f64,
    pub curve: Vec<(f64, AmbientVector)>,
    pub length: f64,
    pub residual_l1: f64,
    pub energy_ledger: EnergyLedger,
    pub velocity_norm: f64,
    pub full_length: f64,
    pub collar_length: f64,
    pub collar_oscillation: f64,
    pub residual_per_length: f64,
    pub dist_to_k: Option<f64>,
    pub t_half: f64,
    pub trim_width: f64,
    pub fiber: Fiber,
    pub provenance: Provenance,
    pub decay: DecayReport,
}

/// The full pipeline on a standard-cylinder field. `tau` defaults to the
/// finite-difference tension of `v`.
pub fn analyze_neck(
    v: &StandardCylinderField,
    tau: Option<&[AmbientVector]>,
    manifold: &EmbeddedManifold,
    boundary: Option<&BoundaryData>,
    opts: &NeckOptions,
) -> Result<NeckReport> {
    let computed;
    let tau = match tau {
        Some(t) => t,
        None => {
            computed = standard_tension(v, manifold)?;
            &computed
        }
    };
    let poh = pohozaev(v, tau);
    let energy_ledger = energy_identity_ledger(v, poh.alpha, opts.eps0)?;
    let decay = decay_profile_check(v, tau, poh.alpha, opts.decay_c);
    let circle = match v.fiber {
        Fiber::Circle => v.clone(),
        Fiber::Interval => extend_across_boundary(
            v,
            boundary.ok_or_else(|| Error::InvalidInput("interval fibers need boundary data".into()))?,
        )?,
    };
    let curve = mean_curve(&circle)?;
    let mut curve_opts = opts.curve;
    curve_opts.geodesic_like = v.fiber == Fiber::Interval || v.provenance == Provenance::TypeII;
    let analysis = arclength_and_residual(&curve, v.t_half, poh.alpha, manifold, boundary, &curve_opts)?;
    let trim_width = v.t_half.powf(curve_opts.trim_exponent);
    let collar_oscillation =
        oscillation(v, -v.t_half, -v.t_half + trim_width).max(oscillation(v, v.t_half - trim_width, v.t_half));
    Ok(NeckReport {
        alpha: poh.alpha,
        drift: poh.drift,
        mu: poh.alpha.abs().sqrt() * v.t_half,
        curve: analysis.samples,
        length: analysis.length,
        residual_l1: analysis.residual_l1,
        energy_ledger,
        velocity_norm: analysis.velocity_norm,
        full_length: analysis.full_length,
        collar_length: analysis.collar_length,
        collar_oscillation,
        residual_per_length: analysis.residual_per_length,
        dist_to_k: analysis.dist_to_k,
        t_half: v.t_half,
        trim_width,
        fiber: v.fiber,
        provenance: v.provenance,
        decay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::energy;
    use crate::grid::DomainSpec;

    fn v3(x: f64, y: f64, z: f64) -> AmbientVector {
        AmbientVector::from_slice(&[x, y, z])
    }

    fn neck(lambda: f64, t_half: f64, fiber: Fiber, per_unit: usize, nth: usize) -> StandardCylinderField {
        let nt = (2.0 * t_half * per_unit as f64).round() as usize + 1;
        StandardCylinderField::from_fn(t_half, nt, nth, fiber, Provenance::Synthetic, |t, _| {
            v3((lambda * t).cos(), (lambda * t).sin(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn chart_half_length_examples() {
        let g = FlatMetric::new(0.0, 0.01).unwrap();
        let f = chart_frame(DomainKind::ClosedTorus, 1.0, &g, Degeneration::Torus).unwrap();
        assert!((f.rho - 0.1).abs() < 1e-15);
        assert!((f.t_half - 100.0 * PI).abs() < 1e-9);
        assert_eq!(f.fiber, Fiber::Circle);
        let f = chart_frame(DomainKind::FreeBoundaryCylinder, 1.0, &g, Degeneration::TypeII).unwrap();
        assert!((f.t_half - 50.0 * PI).abs() < 1e-9);
        let g = FlatMetric::new(0.0, 100.0).unwrap();
        let f = chart_frame(DomainKind::FreeBoundaryCylinder, 1.0, &g, Degeneration::TypeI).unwrap();
        assert!((f.t_half - 100.0 * PI).abs() < 1e-9);
        assert!(chart_frame(DomainKind::ClosedTorus, 1.0, &g, Degeneration::TypeII).is_err());
    }

    #[test]
    fn rescale_checks_degeneration_and_passes_standard_fields() {
        let s = EmbeddedManifold::unit_sphere(3);
        let t = DomainSpec::torus(16, 16).unwrap();
        let u = MapField::from_fn(t, "sphere", |_, _| v3(1.0, 0.0, 0.0));
        let src = NeckSource::Domain {
            u,
            g: FlatMetric::new(0.0, 1.0).unwrap(),
        };
        let err = rescale_to_standard(&src, Degeneration::Torus, &s, None, &RescaleOptions::default());
        assert!(matches!(err, Err(Error::NotDegenerate { .. })));
        let v = neck(0.1, 10.0, Fiber::Circle, 4, 8);
        let back = rescale_to_standard(
            &NeckSource::Standard(v.clone()),
            Degeneration::Torus,
            &s,
            None,
            &RescaleOptions::default(),
        )
        .unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn rescale_preserves_energy() {
        let s = EmbeddedManifold::unit_sphere(3);
        let d = DomainSpec::torus(128, 32).unwrap();
        let u = MapField::from_fn(d, "sphere", |x1, x2| {
            let p = v3(
                (2.0 * PI * x1).cos(),
                (2.0 * PI * x1).sin(),
                0.2 * (2.0 * PI * x2).sin(),
            );
            p.scale(1.0 / p.norm())
        });
        let g = FlatMetric::new(0.0, 0.05).unwrap();
        let opts = RescaleOptions {
            min_nodes_per_unit: 4,
            ..RescaleOptions::default()
        };
        let v = rescale_to_standard(
            &NeckSource::Domain { u: u.clone(), g },
            Degeneration::Torus,
            &s,
            None,
            &opts,
        )
        .unwrap();
        let e0 = energy(&u, &g).unwrap();
        let e1 = standard_energy(&v);
        assert!((e0 - e1).abs() / e0 < 0.02, "{e0} vs {e1}");
    }

    #[test]
    fn extension_examples() {
        let s = EmbeddedManifold::unit_sphere(3);
        let b = BoundaryData::equator(&s).unwrap();
        let v = neck(0.1, 5.0, Fiber::Interval, 4, 9);
        let ext = extend_across_boundary(&v, &b).unwrap();
        assert_eq!(ext.nth, 16);
        for k in 0..v.nt {
            for j in 0..ext.nth {
                assert!(ext.at(k, j).distance(&v.at(k, 0)) < 1e-15);
            }
            for j in 0..v.nth {
                assert_eq!(ext.at(k, j), v.at(k, j));
            }
        }
        let c = mean_curve(&ext).unwrap();
        assert!(c[3].distance(&v.at(3, 0)) < 1e-15);
    }

    #[test]
    fn mean_curve_of_winding_vanishes() {
        let v = StandardCylinderField::from_fn(2.0, 9, 32, Fiber::Circle, Provenance::Synthetic, |_, th| {
            v3(th.cos(), th.sin(), 0.0)
        })
        .unwrap();
        assert!(mean_curve(&v).unwrap().iter().all(|p| p.norm() < 1e-15));
    }

    #[test]
    fn synthetic_neck_lengths() {
        let s = EmbeddedManifold::unit_sphere(3);
        let b = BoundaryData::equator(&s).unwrap();
        let half = neck(0.05, 20.0, Fiber::Interval, 16, 9);
        let rep = analyze_neck(&half, None, &s, Some(&b), &NeckOptions::default()).unwrap();
        assert!((rep.full_length - 2.0).abs() < 1e-3);
        let trim = 20f64.powf(0.25);
        assert!((rep.length - 2.0 * 0.05 * (20.0 - trim)).abs() < 1e-3);
        assert!((rep.velocity_norm - 1.0 / PI.sqrt()).abs() < 1e-3);
        assert!(rep.residual_per_length < 1e-4);
        let closed = neck(0.05, 20.0, Fiber::Circle, 16, 8);
        let rep = analyze_neck(&closed, None, &s, None, &NeckOptions::default()).unwrap();
        assert!((rep.velocity_norm - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-3);
        assert!((rep.full_length - 2.0f64.sqrt() / PI.sqrt() * rep.mu).abs() < 2e-3);
    }

    #[test]
    fn constant_curve_is_point_like() {
        let s = EmbeddedManifold::unit_sphere(3);
        let c = vec![v3(1.0, 0.0, 0.0); 41];
        let err = arclength_and_residual(&c, 10.0, 0.0, &s, None, &CurveOptions::default());
        match err {
            Err(Error::DegenerateVelocity { length, slow_fraction }) => {
                assert_eq!(length, 0.0);
                assert_eq!(slow_fraction, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ledger_examples() {
        let closed = neck(0.1, 10.0, Fiber::Circle, 16, 8);
        let l = energy_identity_ledger(&closed, 2.0 * PI * 0.01, 0.25).unwrap();
        assert!((l.e_total - 0.6283).abs() < 1e-3);
        assert!((l.ratio - 1.0).abs() < 1e-3);
        assert_eq!(l.identity_multiple, 4.0);
        let half = neck(0.1, 10.0, Fiber::Interval, 16, 9);
        let l = energy_identity_ledger(&half, PI * 0.01, 0.25).unwrap();
        assert!((l.e_total - 0.3142).abs() < 1e-3);
        assert!(matches!(
            energy_identity_ledger(&half, PI * 0.01, 0.01),
            Err(Error::ConcentrationPresent { .. })
        ));
    }

    #[test]
    fn decay_check_on_trivial_fields() {
        let z = StandardCylinderField::from_fn(5.0, 41, 8, Fiber::Circle, Provenance::Synthetic, |_, _| {
            v3(0.0, 0.0, 1.0)
        })
        .unwrap();
        let tau = vec![AmbientVector::zeros(3); z.values.len()];
        let r = decay_profile_check(&z, &tau, 0.0, 10.0);
        assert_eq!(r.admissible_c, 0.0);
        assert_eq!(r.violation_fraction, 0.0);
        let n = neck(0.1, 10.0, Fiber::Circle, 16, 8);
        let tau = vec![AmbientVector::zeros(3); n.values.len()];
        let r = decay_profile_check(&n, &tau, 2.0 * PI * 0.01, 10.0);
        assert!(r.admissible_c < 10.0 && r.admissible_c > 0.1);
    }
}
