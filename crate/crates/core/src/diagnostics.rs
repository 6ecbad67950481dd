//! Energy, tension, Hopf differential, Pohozaev constants, window energies and
//! oscillation, on the domain grid and on the standard cylinder.

use crate::cylinder::{cumulative_trapezoid, interpolate_uniform, StandardCylinderField};
use crate::error::{Error, Result};
use crate::geometry::EmbeddedManifold;
use crate::grid::{
    dirichlet_forms, gradient, integrate, laplace_beltrami, metric_inverse_and_coords, FlatMetric, GhostRows, MapField,
};
use crate::vector::AmbientVector;

/// Φ = ∫_M φ(u) dM.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfIntegral {
    pub re: f64,
    pub im: f64,
}

impl HopfIntegral {
    pub fn norm_sq(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PohozaevReport {
    pub alpha_per_slice: Vec<f64>,
    pub alpha: f64,
    pub drift: f64,
    /// −2∫_{[0,t]×fiber} τ·∂_t u for every slice.
    pub tension_correction: Vec<f64>,
}

/// E(u, g_{a,b}) = (1/2b)∫[(a²+b²)|u₁|² + |u₂|² − 2a u₁·u₂].
pub fn energy(u: &MapField, g: &FlatMetric) -> Result<f64> {
    metric_inverse_and_coords(g, 0.0, f64::INFINITY)?;
    let [p, q, r] = dirichlet_forms(u);
    Ok(energy_from_forms(g, [p, q, r]))
}

pub(crate) fn energy_from_forms(g: &FlatMetric, [p, q, r]: [f64; 3]) -> f64 {
    let (a, b) = (g.a, g.b);
    ((a * a + b * b) * p + q - 2.0 * a * r) / (2.0 * b)
}

/// Hopf integral from the Dirichlet forms, evaluated in (θ¹, θ²) coordinates.
pub(crate) fn hopf_from_forms(g: &FlatMetric, [p, q, r]: [f64; 3]) -> HopfIntegral {
    let (a, b) = (g.a, g.b);
    HopfIntegral {
        re: ((b * b - a * a) * p + 2.0 * a * r - q) / b,
        im: -2.0 * (r - a * p),
    }
}

pub fn hopf_integral(u: &MapField, g: &FlatMetric) -> Result<HopfIntegral> {
    metric_inverse_and_coords(g, 0.0, f64::INFINITY)?;
    Ok(hopf_from_forms(g, dirichlet_forms(u)))
}

/// τ(u, g) with the cylinder's rows beyond the endpoints closed by even reflection.
pub fn tension_field(u: &MapField, g: &FlatMetric, manifold: &EmbeddedManifold) -> Result<Vec<AmbientVector>> {
    tension_field_with_ghosts(u, g, manifold, None)
}

/// τ = P_T(Δ_g u), which equals Δ_g u + A(u)(∇u, ∇u) for exact derivatives.
pub fn tension_field_with_ghosts(
    u: &MapField,
    g: &FlatMetric,
    manifold: &EmbeddedManifold,
    ghosts: Option<&GhostRows>,
) -> Result<Vec<AmbientVector>> {
    let lap = laplace_beltrami(u, g, ghosts)?;
    u.values
        .iter()
        .zip(&lap)
        .map(|(p, l)| {
            let t = manifold.tangent_project(p, l)?;
            if !t.is_finite() {
                return Err(Error::NonFiniteValue {
                    context: "tension field".into(),
                });
            }
            Ok(t)
        })
        .collect()
}

/// Δ_g u + g^{αβ} A(u)(∂_α u, ∂_β u) without the final tangent projection. Its normal
/// component is a pure discretization defect.
pub fn tension_field_raw(
    u: &MapField,
    g: &FlatMetric,
    manifold: &EmbeddedManifold,
    ghosts: Option<&GhostRows>,
) -> Result<Vec<AmbientVector>> {
    let inv = metric_inverse_and_coords(g, 0.0, f64::INFINITY)?.inverse;
    let lap = laplace_beltrami(u, g, ghosts)?;
    let grad = gradient(u);
    u.values
        .iter()
        .zip(lap.iter().zip(&grad))
        .map(|(p, (l, d))| {
            let a11 = manifold.second_fundamental_form(p, &d[0], &d[0])?;
            let a22 = manifold.second_fundamental_form(p, &d[1], &d[1])?;
            let a12 = manifold.second_fundamental_form(p, &d[0], &d[1])?;
            Ok(*l + a11.scale(inv[0][0]) + a22.scale(inv[1][1]) + a12.scale(2.0 * inv[0][1]))
        })
        .collect()
}

/// (∂u/∂θ¹, ∂u/∂θ²) per node.
pub fn theta_derivatives(u: &MapField, g: &FlatMetric) -> Vec<[AmbientVector; 2]> {
    let s = g.b.sqrt();
    gradient(u)
        .into_iter()
        .map(|[d1, d2]| [d1.scale(s), (d2 - d1.scale(g.a)).scale(1.0 / s)])
        .collect()
}

/// ‖f‖_{L²} of a nodal vector field on the domain.
pub fn l2_norm(values: &[AmbientVector], u: &MapField) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v.norm_sq()).collect();
    integrate(&sq, &u.domain).sqrt()
}

/// ‖τ·∂_s u‖_{L¹} where s is the unit direction in (θ¹, θ²) orthogonal to `fiber`.
pub fn tension_along_l1(u: &MapField, g: &FlatMetric, tau: &[AmbientVector], fiber: [f64; 2]) -> f64 {
    let n = (fiber[0] * fiber[0] + fiber[1] * fiber[1]).sqrt();
    let s = [fiber[1] / n, -fiber[0] / n];
    let dth = theta_derivatives(u, g);
    let vals: Vec<f64> = dth
        .iter()
        .zip(tau)
        .map(|(d, t)| t.dot(&(d[0].scale(s[0]) + d[1].scale(s[1]))).abs())
        .collect();
    integrate(&vals, &u.domain)
}

/// Per-node energy density ½(|v_t|² + |v_θ|²) on the standard cylinder.
pub fn standard_energy_density(v: &StandardCylinderField) -> Vec<f64> {
    let dt = v.d_t();
    let dq = v.d_theta();
    dt.iter()
        .zip(&dq)
        .map(|(a, b)| 0.5 * (a.norm_sq() + b.norm_sq()))
        .collect()
}

pub fn standard_energy(v: &StandardCylinderField) -> f64 {
    v.integrate(&standard_energy_density(v))
}

/// φ = (|v_t|² − |v_θ|², −2 v_t·v_θ) per node.
pub fn hopf(v: &StandardCylinderField) -> Vec<(f64, f64)> {
    let dt = v.d_t();
    let dq = v.d_theta();
    dt.iter()
        .zip(&dq)
        .map(|(a, b)| (a.norm_sq() - b.norm_sq(), -2.0 * a.dot(b)))
        .collect()
}

pub fn hopf_integral_standard(v: &StandardCylinderField) -> HopfIntegral {
    let phi = hopf(v);
    let re: Vec<f64> = phi.iter().map(|p| p.0).collect();
    let im: Vec<f64> = phi.iter().map(|p| p.1).collect();
    HopfIntegral {
        re: v.integrate(&re),
        im: v.integrate(&im),
    }
}

/// ‖φ‖_{L¹}.
pub fn hopf_l1(v: &StandardCylinderField) -> f64 {
    let abs: Vec<f64> = hopf(v).iter().map(|p| p.0.hypot(p.1)).collect();
    v.integrate(&abs)
}

/// Tangential part of the finite-difference Laplacian on the standard cylinder.
pub fn standard_tension(v: &StandardCylinderField, manifold: &EmbeddedManifold) -> Result<Vec<AmbientVector>> {
    let lap = v.laplacian();
    v.values
        .iter()
        .zip(&lap)
        .map(|(p, l)| Ok(manifold.tangent_project_unchecked(&manifold.project(p)?, l)))
        .collect()
}

/// (‖τ‖_{L²}, ‖τ·∂_t v‖_{L¹}) on the standard cylinder.
pub fn standard_tension_norms(v: &StandardCylinderField, tau: &[AmbientVector]) -> (f64, f64) {
    let dt = v.d_t();
    let sq: Vec<f64> = tau.iter().map(|t| t.norm_sq()).collect();
    let l1: Vec<f64> = tau.iter().zip(&dt).map(|(t, d)| t.dot(d).abs()).collect();
    (v.integrate(&sq).sqrt(), v.integrate(&l1))
}

/// Slice Pohozaev constants corrected by the cumulative tension term anchored at t = 0.
pub fn pohozaev(v: &StandardCylinderField, tau: &[AmbientVector]) -> PohozaevReport {
    let dt = v.d_t();
    let dq = v.d_theta();
    let raw: Vec<f64> = dt.iter().zip(&dq).map(|(a, b)| a.norm_sq() - b.norm_sq()).collect();
    let work: Vec<f64> = tau.iter().zip(&dt).map(|(t, d)| t.dot(d)).collect();
    let slices = v.fiber_integrals(&raw);
    let flux = v.fiber_integrals(&work);
    let cumulative = cumulative_trapezoid(&flux, v.ht());
    let anchor = interpolate_uniform(&cumulative, -v.t_half, v.ht(), 0.0);
    let tension_correction: Vec<f64> = cumulative.iter().map(|c| -2.0 * (c - anchor)).collect();
    let alpha_per_slice: Vec<f64> = slices.iter().zip(&tension_correction).map(|(s, c)| s + c).collect();
    let alpha = alpha_per_slice.iter().sum::<f64>() / alpha_per_slice.len() as f64;
    let drift = alpha_per_slice.iter().fold(0.0f64, |m, x| m.max((x - alpha).abs()));
    PohozaevReport {
        alpha_per_slice,
        alpha,
        drift,
        tension_correction,
    }
}

/// Energies of the windows [t − width/2, t + width/2] × fiber, for every slice
/// centre t whose window fits inside [−T, T]. Returns (centre, energy) pairs.
pub fn slice_energy_profile(v: &StandardCylinderField, width: f64) -> Vec<(f64, f64)> {
    let density = standard_energy_density(v);
    let per_slice = v.fiber_integrals(&density);
    let cumulative = cumulative_trapezoid(&per_slice, v.ht());
    let (t0, h) = (-v.t_half, v.ht());
    (0..v.nt)
        .map(|k| v.t(k))
        .filter(|t| t - 0.5 * width >= -v.t_half - 1e-12 && t + 0.5 * width <= v.t_half + 1e-12)
        .map(|t| {
            let hi = interpolate_uniform(&cumulative, t0, h, t + 0.5 * width);
            let lo = interpolate_uniform(&cumulative, t0, h, t - 0.5 * width);
            (t, hi - lo)
        })
        .collect()
}

/// Largest distance between two values of `v` with t in [t0, t1].
pub fn oscillation(v: &StandardCylinderField, t0: f64, t1: f64) -> f64 {
    let pts: Vec<AmbientVector> = (0..v.nt)
        .filter(|&k| v.t(k) >= t0 - 1e-12 && v.t(k) <= t1 + 1e-12)
        .flat_map(|k| v.slice(k).iter().copied())
        .collect();
    let mut best = 0.0f64;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            best = best.max(p.distance(q));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::{Fiber, Provenance};
    use crate::grid::DomainSpec;
    use std::f64::consts::PI;

    fn v3(x: f64, y: f64, z: f64) -> AmbientVector {
        AmbientVector::from_slice(&[x, y, z])
    }

    fn winding(d: DomainSpec) -> MapField {
        MapField::from_fn(d, "sphere", |x1, _| {
            v3((2.0 * PI * x1).cos(), (2.0 * PI * x1).sin(), 0.0)
        })
    }

    fn neck(lambda: f64, t_half: f64, fiber: Fiber, per_unit: usize, nth: usize) -> StandardCylinderField {
        let nt = (2.0 * t_half * per_unit as f64).round() as usize + 1;
        StandardCylinderField::from_fn(t_half, nt, nth, fiber, Provenance::Synthetic, |t, _| {
            v3((lambda * t).cos(), (lambda * t).sin(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn energy_examples() {
        let s = EmbeddedManifold::unit_sphere(3);
        let t = DomainSpec::torus(64, 8).unwrap();
        let g = FlatMetric::new(0.0, 1.0).unwrap();
        let c = MapField::from_fn(t, "sphere", |_, _| v3(0.0, 0.0, 1.0));
        assert_eq!(energy(&c, &g).unwrap(), 0.0);
        let w = winding(t);
        let e = energy(&w, &g).unwrap();
        assert!((e - 2.0 * PI * PI).abs() < 2.0 * PI * PI * 4.0 * PI * PI / (3.0 * 64.0 * 64.0));
        // E(u, g_{0,b}) = b·P/2 for x²-independent u, P from direct quadrature
        let g2 = FlatMetric::new(0.0, 0.25).unwrap();
        let p = dirichlet_forms(&w)[0];
        assert!((energy(&w, &g2).unwrap() - 0.125 * p).abs() < 1e-12);
        let tau = tension_field(&c, &g, &s).unwrap();
        assert!(tau.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn winding_map_is_discretely_harmonic() {
        let s = EmbeddedManifold::unit_sphere(3);
        let t = DomainSpec::torus(64, 8).unwrap();
        let tau = tension_field(&winding(t), &FlatMetric::new(0.0, 1.0).unwrap(), &s).unwrap();
        assert!(l2_norm(&tau, &winding(t)) < 1e-10);
    }

    #[test]
    fn energy_matches_theta_coordinates() {
        // ½∫|∇u|² in (θ¹,θ²) coordinates with central derivatives; the two
        // discretizations differ by O(h²)
        let g = FlatMetric::new(0.3, 0.7).unwrap();
        let mut prev = None;
        for n in [32, 64] {
            let t = DomainSpec::torus(n, n).unwrap();
            let u = MapField::from_fn(t, "sphere", |x1, x2| {
                let p = v3(
                    (2.0 * PI * x1).cos(),
                    (2.0 * PI * x1).sin(),
                    0.3 * (2.0 * PI * x2).sin(),
                );
                p.scale(1.0 / p.norm())
            });
            let dth = theta_derivatives(&u, &g);
            let dens: Vec<f64> = dth.iter().map(|d| 0.5 * (d[0].norm_sq() + d[1].norm_sq())).collect();
            let gap = (energy(&u, &g).unwrap() - integrate(&dens, &t)).abs();
            if let Some(p) = prev {
                let r: f64 = p / gap;
                assert!((3.0..5.0).contains(&r), "ratio {r}");
            }
            prev = Some(gap);
        }
    }

    #[test]
    fn raw_tension_normal_defect_is_small() {
        let s = EmbeddedManifold::unit_sphere(3);
        let t = DomainSpec::torus(64, 64).unwrap();
        let g = FlatMetric::new(0.2, 1.3).unwrap();
        let u = MapField::from_fn(t, "sphere", |x1, x2| {
            let p = v3(
                (2.0 * PI * x1).cos() + 0.2 * (2.0 * PI * x2).cos(),
                (2.0 * PI * x1).sin(),
                0.5 * (2.0 * PI * x2).sin(),
            );
            p.scale(1.0 / p.norm())
        });
        let raw = tension_field_raw(&u, &g, &s, None).unwrap();
        let defect = u
            .values
            .iter()
            .zip(&raw)
            .map(|(p, r)| r.dot(p).abs())
            .fold(0.0, f64::max);
        assert!(defect < 0.5, "normal defect {defect}");
    }

    #[test]
    fn hopf_examples() {
        let v = neck(0.1, 10.0, Fiber::Circle, 16, 16);
        let phi = hopf(&v);
        assert!(phi.iter().all(|p| (p.0 - 0.01).abs() < 1e-5 && p.1.abs() < 1e-12));
        let big = hopf_integral_standard(&v);
        assert!((big.re - 1.25664).abs() < 1e-4, "{}", big.re);
        // the torus Hopf integral of the winding map equals 4π² at (a,b) = (0,1)
        let t = DomainSpec::torus(64, 8).unwrap();
        let h = hopf_integral(&winding(t), &FlatMetric::new(0.0, 1.0).unwrap()).unwrap();
        assert!((h.re - 4.0 * PI * PI).abs() < 0.05 && h.im.abs() < 1e-12);
    }

    #[test]
    fn pohozaev_examples() {
        let half = neck(0.1, 10.0, Fiber::Interval, 16, 17);
        let tau = vec![AmbientVector::zeros(3); half.values.len()];
        let rep = pohozaev(&half, &tau);
        assert!((rep.alpha - PI * 0.01).abs() < 1e-5, "{}", rep.alpha);
        let closed = neck(0.1, 10.0, Fiber::Circle, 16, 16);
        assert!((pohozaev(&closed, &tau).alpha - 2.0 * PI * 0.01).abs() < 1e-5);
        let wind = StandardCylinderField::from_fn(3.0, 49, 64, Fiber::Circle, Provenance::Synthetic, |_, th| {
            v3(th.cos(), th.sin(), 0.0)
        })
        .unwrap();
        let rep = pohozaev(&wind, &vec![AmbientVector::zeros(3); wind.values.len()]);
        let h = wind.hth();
        assert!((rep.alpha + 2.0 * PI * (h.sin() / h).powi(2)).abs() < 1e-12);
        assert!((rep.alpha + 2.0 * PI).abs() < 2.0 * PI * h * h / 2.0);
        assert!(rep.drift < 1e-12);
    }

    #[test]
    fn window_energies_and_oscillation() {
        let half = neck(0.1, 10.0, Fiber::Interval, 16, 17);
        let w2 = slice_energy_profile(&half, 2.0);
        assert!(w2.iter().all(|(_, e)| (e - 0.0314159).abs() < 1e-5));
        let w1 = slice_energy_profile(&half, 1.0);
        assert!(w1.iter().all(|(_, e)| (e - 0.5 * 0.0314159).abs() < 1e-5));
        let osc = oscillation(&half, -1.0, 1.0);
        assert!((osc - 2.0 * (0.1f64).sin()).abs() < 1e-12);
        assert!((osc - 0.2).abs() < 1e-3);
        let c = StandardCylinderField::from_fn(2.0, 9, 8, Fiber::Circle, Provenance::Synthetic, |_, _| {
            v3(1.0, 0.0, 0.0)
        })
        .unwrap();
        assert!(slice_energy_profile(&c, 1.0).iter().all(|(_, e)| *e == 0.0));
    }
}
