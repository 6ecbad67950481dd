use std::f64::consts::PI;

use neckflow_core::cylinder::{Fiber, Provenance, StandardCylinderField};
use neckflow_core::diagnostics::{energy, hopf_integral, pohozaev, standard_energy};
use neckflow_core::flow::{step, FlowConfig, FlowState};
use neckflow_core::geometry::{BoundaryData, EmbeddedManifold, SigmaMethod};
use neckflow_core::grid::{metric_inverse_and_coords, stable_dt, DomainSpec, FlatMetric, MapField};
use neckflow_core::oracles::{generate_cylinder, GeodesicSpec, ResolvedFamily, SyntheticFamily};
use neckflow_core::AmbientVector;
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = AmbientVector> {
    prop::array::uniform3(-2.0f64..2.0).prop_map(|a| AmbientVector::from_slice(&a))
}

fn vec4() -> impl Strategy<Value = AmbientVector> {
    prop::array::uniform4(-2.0f64..2.0).prop_map(|a| AmbientVector::from_slice(&a))
}

fn targets() -> Vec<EmbeddedManifold> {
    vec![
        EmbeddedManifold::unit_sphere(3),
        EmbeddedManifold::sphere(3, 2.0),
        EmbeddedManifold::ellipsoid(&[1.0, 1.3, 0.8]),
    ]
}

// smallest curvature radius of each target
const REACH: [f64; 3] = [1.0, 2.0, 0.64 / 1.3];

/// A point of N and an ambient point at signed normal offset `frac·reach` from it.
fn tubular_pair(which: usize, dir: &AmbientVector, frac: f64) -> (AmbientVector, AmbientVector) {
    let n = &targets()[which];
    let far = dir.normalized().unwrap().scale(4.0);
    let p = n.project(&far).unwrap();
    let normal = (far - p).normalized().unwrap();
    (p, p.axpy(frac * REACH[which], &normal))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent(dir in vec3(), frac in -0.8f64..2.0, which in 0usize..3) {
        prop_assume!(dir.norm() > 0.1);
        let n = &targets()[which];
        let (foot, x) = tubular_pair(which, &dir, frac);
        let p = n.project(&x).unwrap();
        prop_assert!(p.distance(&foot) < 1e-9);
        prop_assert!(n.project(&p).unwrap().distance(&p) < 1e-10);
        prop_assert!(n.distance(&p).unwrap() < 1e-10);
    }

    #[test]
    fn torus_projection_is_idempotent(x in vec4()) {
        let n = EmbeddedManifold::flat_torus(1.0, 0.7);
        prop_assume!(x[0].hypot(x[1]) > 0.3 && x[2].hypot(x[3]) > 0.3);
        let p = n.project(&x).unwrap();
        prop_assert!(n.project(&p).unwrap().distance(&p) < 1e-12);
    }

    #[test]
    fn second_fundamental_form_is_normal_and_symmetric(dir in vec3(), y in vec3(), z in vec3(), which in 0usize..3) {
        prop_assume!(dir.norm() > 0.1);
        let n = &targets()[which];
        let u = tubular_pair(which, &dir, 0.0).0;
        let a = n.tangent_project(&u, &y).unwrap();
        let b = n.tangent_project(&u, &z).unwrap();
        let ab = n.second_fundamental_form(&u, &a, &b).unwrap();
        let ba = n.second_fundamental_form(&u, &b, &a).unwrap();
        let scale = 1.0 + a.norm() * b.norm();
        prop_assert!(ab.distance(&ba) < 1e-9 * scale);
        prop_assert!(n.tangent_project_unchecked(&u, &ab).norm() < 1e-8 * scale);
    }

    #[test]
    fn tangent_projection_is_idempotent(dir in vec3(), y in vec3(), which in 0usize..3) {
        prop_assume!(dir.norm() > 0.1);
        let n = &targets()[which];
        let u = tubular_pair(which, &dir, 0.0).0;
        let p = n.tangent_project(&u, &y).unwrap();
        prop_assert!(n.tangent_project(&u, &p).unwrap().distance(&p) < 1e-10 * (1.0 + y.norm()));
    }

    #[test]
    fn reflection_is_an_involution(
        phi in 0.0f64..2.0 * PI,
        frac in -0.9f64..0.9,
        height in -0.4f64..0.4,
        shoot in any::<bool>(),
    ) {
        let n = EmbeddedManifold::unit_sphere(3);
        let method = if shoot { Some(SigmaMethod::GeodesicShooting { steps: 32 }) } else { None };
        let b = BoundaryData::subsphere(&n, AmbientVector::basis(3, 2), height, method, None).unwrap();
        // move off K along the meridian by a geodesic distance inside the tube
        let rho = (1.0 - height * height).sqrt();
        let k = AmbientVector::from_slice(&[rho * phi.cos(), rho * phi.sin(), height]);
        let meridian = AmbientVector::from_slice(&[-height * phi.cos(), -height * phi.sin(), rho]);
        let d = frac * b.delta0();
        let y = k.scale(d.cos()).axpy(d.sin(), &meridian);
        prop_assert!((b.distance_to_k(&y).unwrap() - d.abs()).abs() < 1e-12);
        let s = b.sigma(&y).unwrap();
        prop_assert!(b.sigma(&s).unwrap().distance(&y) < 1e-10);
        prop_assert!(n.distance(&s).unwrap() < 1e-10);
        prop_assert!((b.distance_to_k(&s).unwrap() - b.distance_to_k(&y).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn metric_coordinates_round_trip(a in -3.0f64..3.0, b in 1e-3f64..1e3, x in prop::array::uniform2(-5.0f64..5.0)) {
        let g = FlatMetric::new(a, b).unwrap();
        let back = g.from_theta(g.to_theta(x));
        prop_assert!((back[0] - x[0]).abs() < 1e-9 * (1.0 + x[0].abs()) * (1.0 + a.abs()) * b.max(1.0 / b).sqrt());
        prop_assert!((back[1] - x[1]).abs() < 1e-9 * (1.0 + x[1].abs()) * b.max(1.0 / b).sqrt());
        prop_assert!(g.rho() <= 1.0 && g.rho() > 0.0);
        let frame = metric_inverse_and_coords(&g, 1e-6, 1e6).unwrap();
        let m = g.matrix();
        // g⁻¹ g = id
        for r in 0..2 {
            for c in 0..2 {
                let e: f64 = (0..2).map(|k| frame.inverse[r][k] * m[k][c]).sum();
                let want = if r == c { 1.0 } else { 0.0 };
                prop_assert!((e - want).abs() < 1e-8 * (1.0 + a * a) * b.max(1.0 / b));
            }
        }
    }

    #[test]
    fn energy_is_nonnegative_and_bounds_hopf(a in -1.0f64..1.0, b in 0.2f64..5.0, m in 1i32..3, eps in 0.0f64..0.5) {
        let n = EmbeddedManifold::unit_sphere(3);
        let d = DomainSpec::torus(32, 16).unwrap();
        let u = MapField::from_fn(d, "sphere", |x1, x2| {
            let psi = 2.0 * PI * m as f64 * x1 + eps * (2.0 * PI * x2).sin();
            n.project(&AmbientVector::from_slice(&[psi.cos(), psi.sin(), eps * (2.0 * PI * x2).cos()])).unwrap()
        });
        let g = FlatMetric::new(a, b).unwrap();
        let e = energy(&u, &g).unwrap();
        let phi = hopf_integral(&u, &g).unwrap();
        prop_assert!(e >= 0.0);
        // |Φ| ≤ 2E pointwise, hence after integration
        prop_assert!(phi.norm_sq().sqrt() <= 2.0 * e + 1e-9);
    }

    #[test]
    fn stable_dt_is_positive_and_shrinks_with_resolution(a in -2.0f64..2.0, b in 1e-2f64..1e2) {
        let g = FlatMetric::new(a, b).unwrap();
        let coarse = stable_dt(&DomainSpec::torus(16, 16).unwrap(), &g, 0.9);
        let fine = stable_dt(&DomainSpec::torus(32, 32).unwrap(), &g, 0.9);
        prop_assert!(coarse > 0.0 && fine > 0.0);
        prop_assert!((coarse / fine - 4.0).abs() < 1e-9);
    }

    #[test]
    fn flow_step_stays_on_target(eps in 0.0f64..0.3, a in -0.5f64..0.5, b in 0.5f64..2.0) {
        let n = EmbeddedManifold::unit_sphere(3);
        let d = DomainSpec::torus(16, 16).unwrap();
        let u = MapField::from_fn(d, "sphere", |x1, x2| {
            let psi = 2.0 * PI * x1;
            n.project(&AmbientVector::from_slice(&[psi.cos(), psi.sin(), eps * (2.0 * PI * x2).sin()])).unwrap()
        });
        let state = FlowState { u, g: FlatMetric::new(a, b).unwrap(), time: 0.0, step_index: 0 };
        let next = step(&state, &FlowConfig::default(), &n).unwrap();
        for v in &next.u.values {
            prop_assert!(n.distance(v).unwrap() < 1e-12);
        }
        prop_assert!(next.time > state.time);
    }

    #[test]
    fn pohozaev_constant_is_flat_for_harmonic_necks(lambda in 0.01f64..0.5, t_half in 2.0f64..8.0) {
        let n = EmbeddedManifold::unit_sphere(3);
        let fam = SyntheticFamily::GeodesicNeck { lambda, geodesic: GeodesicSpec::equator(3, 1.0) };
        let v = generate_cylinder(&fam, t_half, 65, 16, Fiber::Circle, &n, None).unwrap();
        let r = ResolvedFamily::new(fam, &n, None, Fiber::Circle).unwrap();
        let tau = r.exact_tension(&v).unwrap();
        let rep = pohozaev(&v, &tau);
        // only the one-sided end stencils see the curvature of γ, at second order
        let lh = lambda * v.ht();
        prop_assert!(rep.drift <= lh * lh * rep.alpha, "drift {} alpha {}", rep.drift, rep.alpha);
        let interior = &rep.alpha_per_slice[1..v.nt - 1];
        let spread = interior.iter().cloned().fold(f64::MIN, f64::max) - interior.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!(spread < 1e-9);
    }

    #[test]
    fn standard_energy_scales_with_length(lambda in 0.01f64..0.5, t_half in 2.0f64..8.0) {
        // E = ½·λ²·2T·2π for a geodesic neck of unit-speed λ
        let v = StandardCylinderField::from_fn(t_half, 129, 8, Fiber::Circle, Provenance::Synthetic, |t, _| {
            AmbientVector::from_slice(&[(lambda * t).cos(), (lambda * t).sin(), 0.0])
        }).unwrap();
        let e = standard_energy(&v);
        let exact = 2.0 * PI * lambda * lambda * t_half;
        // central t-differences see λ²(1 − (λh)²/3)
        let h = 2.0 * t_half / 128.0;
        prop_assert!((e - exact).abs() <= 0.5 * (lambda * h).powi(2) * exact);
    }
}
