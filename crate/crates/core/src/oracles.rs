//! Closed-form map families and brute-force checkers used as independent oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cylinder::{Fiber, Provenance, StandardCylinderField};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryData, EmbeddedManifold, ManifoldKind};
use crate::grid::{DomainKind, DomainSpec, MapField};
use crate::vector::AmbientVector;

/// A great circle through `base` with initial direction `direction`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicSpec {
    pub base: AmbientVector,
    pub direction: AmbientVector,
}

impl GeodesicSpec {
    /// The circle through e₀ heading along e₁.
    pub fn equator(dim: usize, radius: f64) -> Self {
        Self {
            base: AmbientVector::basis(dim, 0).scale(radius),
            direction: AmbientVector::basis(dim, 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SyntheticFamily {
    /// u(t, θ) = γ(λt).
    GeodesicNeck {
        lambda: f64,
        geodesic: GeodesicSpec,
    },
    /// u = (cos ψ, sin ψ, 0) with ψ = mθ + ε sin θ (cylinder) or 2πm x¹ + ε sin 2πx¹ (domain).
    WindingMap {
        m: i32,
        phase_amplitude: f64,
    },
    ConstantMap {
        point: AmbientVector,
    },
    /// Π_N(γ(λt) + amplitude·sech(t)^decay·(seeded smooth θ-profile)).
    PerturbedNeck {
        lambda: f64,
        amplitude: f64,
        decay: f64,
        seed: u64,
        geodesic: GeodesicSpec,
    },
    /// Inverse stereographic image of z = ε e^{t + iθ}: conformal and harmonic.
    ConformalExp {
        epsilon: f64,
    },
    /// A loop around the boundary circle K, x²-independent on the domain.
    KLoop {
        m: i32,
        phase_amplitude: f64,
    },
}

impl SyntheticFamily {
    pub fn name(&self) -> &'static str {
        match self {
            SyntheticFamily::GeodesicNeck { .. } => "geodesic_neck",
            SyntheticFamily::WindingMap { .. } => "winding",
            SyntheticFamily::ConstantMap { .. } => "constant",
            SyntheticFamily::PerturbedNeck { .. } => "perturbed_neck",
            SyntheticFamily::ConformalExp { .. } => "conformal_exp",
            SyntheticFamily::KLoop { .. } => "k_loop",
        }
    }
}

#[derive(Clone, Debug)]
struct Mode {
    k: f64,
    direction: usize,
    cos_coef: f64,
    sin_coef: f64,
}

/// A family bound to a target, optional boundary and fiber type, ready to evaluate.
#[derive(Clone, Debug)]
pub struct ResolvedFamily {
    family: SyntheticFamily,
    manifold: EmbeddedManifold,
    fiber: Fiber,
    radius: f64,
    /// Orthonormal (p̂, v̂) of the geodesic plane, or (e₁, e₂) of a circle's plane.
    plane: [AmbientVector; 2],
    center: AmbientVector,
    circle_radius: f64,
    /// Unit vectors orthogonal to the plane; the K-normal comes first when present.
    normals: Vec<AmbientVector>,
    modes: Vec<Mode>,
}

const SPEC_TOL: f64 = 1e-9;

fn orthonormal_complement(dim: usize, span: &[AmbientVector]) -> Vec<AmbientVector> {
    let mut basis: Vec<AmbientVector> = span.to_vec();
    let mut out = Vec::new();
    for k in 0..dim {
        let mut e = AmbientVector::basis(dim, k);
        for b in &basis {
            e = e.axpy(-e.dot(b), b);
        }
        if let Some(n) = e.normalized() {
            if e.norm() > 1e-8 {
                basis.push(n);
                out.push(n);
            }
        }
    }
    out
}

impl ResolvedFamily {
    pub fn new(
        family: SyntheticFamily,
        manifold: &EmbeddedManifold,
        boundary: Option<&BoundaryData>,
        fiber: Fiber,
    ) -> Result<Self> {
        let dim = manifold.ambient_dim();
        let not_in = |reason: String| Error::SpecNotInManifold { reason };
        let radius = manifold.sphere_radius().unwrap_or(0.0);
        let mut resolved = Self {
            family: family.clone(),
            manifold: manifold.clone(),
            fiber,
            radius,
            plane: [AmbientVector::basis(dim, 0), AmbientVector::basis(dim, 1)],
            center: AmbientVector::zeros(dim),
            circle_radius: radius,
            normals: Vec::new(),
            modes: Vec::new(),
        };
        let need_sphere = || {
            if radius > 0.0 {
                Ok(())
            } else {
                Err(not_in(format!(
                    "the {} family needs a round sphere target",
                    family.name()
                )))
            }
        };
        match &family {
            SyntheticFamily::ConstantMap { point } => {
                if point.dim() != dim {
                    return Err(not_in("constant point has the wrong dimension".into()));
                }
                let d = manifold.distance(point)?;
                if d > SPEC_TOL {
                    return Err(not_in(format!("constant point is {d:e} away from N")));
                }
                if fiber == Fiber::Interval {
                    if let Some(b) = boundary {
                        if point.distance(&b.submanifold_project(point)?) > SPEC_TOL {
                            return Err(not_in("constant point is not on K".into()));
                        }
                    }
                }
            }
            SyntheticFamily::GeodesicNeck { geodesic, .. } | SyntheticFamily::PerturbedNeck { geodesic, .. } => {
                need_sphere()?;
                if geodesic.base.dim() != dim || geodesic.direction.dim() != dim {
                    return Err(not_in("geodesic has the wrong dimension".into()));
                }
                let d = manifold.distance(&geodesic.base)?;
                if d > SPEC_TOL {
                    return Err(not_in(format!("geodesic base is {d:e} away from N")));
                }
                let p = geodesic.base.scale(1.0 / geodesic.base.norm());
                let v = geodesic
                    .direction
                    .normalized()
                    .ok_or_else(|| not_in("geodesic direction is zero".into()))?;
                if v.dot(&p).abs() > SPEC_TOL {
                    return Err(not_in("geodesic direction is not tangent to N".into()));
                }
                resolved.plane = [p, v];
                let mut normals = orthonormal_complement(dim, &[p, v]);
                if fiber == Fiber::Interval {
                    let b = boundary.ok_or_else(|| not_in("interval fibers need boundary data".into()))?;
                    let n = b.normal();
                    if b.height().abs() > SPEC_TOL || n.dot(&p).abs() > SPEC_TOL || n.dot(&v).abs() > SPEC_TOL {
                        return Err(not_in("the great circle does not lie in K".into()));
                    }
                    normals = orthonormal_complement(dim, &[p, v, n]);
                    normals.insert(0, n);
                }
                resolved.normals = normals;
                if let SyntheticFamily::PerturbedNeck { seed, .. } = &family {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    for k in 1..=3 {
                        for direction in 0..=resolved.normals.len() {
                            let scale = 1.0 / (k * k) as f64;
                            resolved.modes.push(Mode {
                                k: k as f64,
                                direction,
                                cos_coef: rng.gen_range(-1.0..1.0) * scale,
                                sin_coef: rng.gen_range(-1.0..1.0) * scale,
                            });
                        }
                    }
                }
            }
            SyntheticFamily::WindingMap { .. } => {
                need_sphere()?;
                if fiber == Fiber::Interval {
                    return Err(not_in("winding maps are defined on circle fibers".into()));
                }
                resolved.plane = [AmbientVector::basis(dim, 0), AmbientVector::basis(dim, 1)];
            }
            SyntheticFamily::ConformalExp { epsilon } => {
                need_sphere()?;
                if dim < 3 || fiber == Fiber::Interval || !(*epsilon > 0.0) {
                    return Err(not_in(
                        "conformal family needs a sphere in dimension ≥ 3, a circle fiber and ε > 0".into(),
                    ));
                }
            }
            SyntheticFamily::KLoop { .. } => {
                let b = boundary.ok_or_else(|| not_in("K-loops need boundary data".into()))?;
                let n = b.normal();
                let c = b.height();
                let e = orthonormal_complement(dim, &[n]);
                resolved.center = n.scale(c);
                resolved.circle_radius = (radius * radius - c * c).sqrt();
                resolved.plane = [e[0], e[1]];
            }
        }
        if let ManifoldKind::LevelSet(_) = manifold.kind() {
            if !matches!(family, SyntheticFamily::ConstantMap { .. }) {
                return Err(not_in("only constant maps are available on level-set targets".into()));
            }
        }
        Ok(resolved)
    }

    pub fn family(&self) -> &SyntheticFamily {
        &self.family
    }

    fn great_circle(&self, s: f64) -> (AmbientVector, AmbientVector) {
        let r = self.radius;
        let [p, v] = self.plane;
        let (c, si) = ((s / r).cos(), (s / r).sin());
        (p.scale(r * c) + v.scale(r * si), v.scale(c) - p.scale(si))
    }

    fn circle_point(&self, psi: f64) -> AmbientVector {
        let [e1, e2] = self.plane;
        self.center + e1.scale(self.circle_radius * psi.cos()) + e2.scale(self.circle_radius * psi.sin())
    }

    /// Closed form on the standard cylinder.
    pub fn eval_standard(&self, t: f64, theta: f64) -> Result<AmbientVector> {
        match &self.family {
            SyntheticFamily::ConstantMap { point } => Ok(*point),
            SyntheticFamily::GeodesicNeck { lambda, .. } => Ok(self.great_circle(lambda * t).0),
            SyntheticFamily::WindingMap { m, phase_amplitude } => {
                Ok(self.circle_point(*m as f64 * theta + phase_amplitude * theta.sin()))
            }
            SyntheticFamily::KLoop { m, phase_amplitude } => {
                Ok(self.circle_point(*m as f64 * theta + phase_amplitude * theta.sin()))
            }
            SyntheticFamily::ConformalExp { epsilon } => {
                let rho = epsilon * t.exp();
                let (x, y) = (rho * theta.cos(), rho * theta.sin());
                let q = rho * rho;
                let mut out = AmbientVector::zeros(self.manifold.ambient_dim());
                out[0] = 2.0 * x / (1.0 + q);
                out[1] = 2.0 * y / (1.0 + q);
                out[2] = (q - 1.0) / (1.0 + q);
                Ok(out.scale(self.radius))
            }
            SyntheticFamily::PerturbedNeck {
                lambda,
                amplitude,
                decay,
                ..
            } => {
                let (point, tangent) = self.great_circle(lambda * t);
                let envelope = amplitude * (1.0 / t.cosh()).powf(*decay);
                let mut offset = AmbientVector::zeros(point.dim());
                for mode in &self.modes {
                    let dir = if mode.direction == 0 {
                        tangent
                    } else {
                        self.normals[mode.direction - 1]
                    };
                    let profile = match self.fiber {
                        Fiber::Circle => {
                            mode.cos_coef * (mode.k * theta).cos() + mode.sin_coef * (mode.k * theta).sin()
                        }
                        // the K-normal direction vanishes on the boundary, the others are even
                        Fiber::Interval if mode.direction == 1 => mode.sin_coef * (mode.k * theta).sin(),
                        Fiber::Interval => mode.cos_coef * (mode.k * theta).cos(),
                    };
                    offset = offset.axpy(profile, &dir);
                }
                self.manifold.project(&point.axpy(envelope, &offset))
            }
        }
    }

    /// Closed form on the domain grid. Necks use t = (2x¹ − 1)π/λ so that γ closes
    /// once, and θ = 2πx² (torus) or θ = πx²/L (cylinder).
    pub fn eval_domain(&self, domain: &DomainSpec, x1: f64, x2: f64) -> Result<AmbientVector> {
        let theta = match domain.kind {
            DomainKind::ClosedTorus => 2.0 * std::f64::consts::PI * x2,
            DomainKind::FreeBoundaryCylinder => std::f64::consts::PI * x2 / domain.x2_length,
        };
        let two_pi = 2.0 * std::f64::consts::PI;
        match &self.family {
            SyntheticFamily::WindingMap { m, phase_amplitude } | SyntheticFamily::KLoop { m, phase_amplitude } => {
                Ok(self.circle_point(two_pi * *m as f64 * x1 + phase_amplitude * (two_pi * x1).sin()))
            }
            SyntheticFamily::ConstantMap { point } => Ok(*point),
            SyntheticFamily::GeodesicNeck { lambda, .. } | SyntheticFamily::PerturbedNeck { lambda, .. } => {
                let t_half = std::f64::consts::PI * self.radius / lambda;
                self.eval_standard((2.0 * x1 - 1.0) * t_half, theta)
            }
            SyntheticFamily::ConformalExp { .. } => Err(Error::InvalidInput(
                "the conformal family lives on the standard cylinder only".into(),
            )),
        }
    }

    /// τ at (t, θ) from sixth-order central differences of the closed form.
    pub fn exact_tension_at(&self, t: f64, theta: f64) -> Result<AmbientVector> {
        const H: f64 = 1e-2;
        const W: [f64; 4] = [-49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0];
        let center = self.eval_standard(t, theta)?;
        let mut lap = center.scale(2.0 * W[0]);
        for (k, w) in W.iter().enumerate().skip(1) {
            let o = k as f64 * H;
            let s = self.eval_standard(t + o, theta)?
                + self.eval_standard(t - o, theta)?
                + self.eval_standard(t, theta + o)?
                + self.eval_standard(t, theta - o)?;
            lap = lap.axpy(*w, &s);
        }
        Ok(self
            .manifold
            .tangent_project_unchecked(&center, &lap.scale(1.0 / (H * H))))
    }

    pub fn exact_tension(&self, v: &StandardCylinderField) -> Result<Vec<AmbientVector>> {
        let mut out = Vec::with_capacity(v.values.len());
        for k in 0..v.nt {
            for j in 0..v.nth {
                out.push(self.exact_tension_at(v.t(k), v.theta(j))?);
            }
        }
        Ok(out)
    }

    /// (∂_t u, ∂_θ u) by fourth-order central differences of the closed form.
    fn derivatives_at(&self, t: f64, theta: f64, h: f64) -> Result<(AmbientVector, AmbientVector)> {
        let d = |f: &dyn Fn(f64) -> Result<AmbientVector>| -> Result<AmbientVector> {
            Ok((f(-2.0 * h)? - f(2.0 * h)? + (f(h)? - f(-h)?).scale(8.0)).scale(1.0 / (12.0 * h)))
        };
        let dt = d(&|o| self.eval_standard(t + o, theta))?;
        let dq = d(&|o| self.eval_standard(t, theta + o))?;
        Ok((dt, dq))
    }
}

pub fn generate_cylinder(
    family: &SyntheticFamily,
    t_half: f64,
    nt: usize,
    nth: usize,
    fiber: Fiber,
    manifold: &EmbeddedManifold,
    boundary: Option<&BoundaryData>,
) -> Result<StandardCylinderField> {
    let r = ResolvedFamily::new(family.clone(), manifold, boundary, fiber)?;
    let probe = StandardCylinderField::from_fn(t_half, nt, nth, fiber, Provenance::Synthetic, |_, _| {
        AmbientVector::zeros(manifold.ambient_dim())
    })?;
    let mut values = Vec::with_capacity(nt * nth);
    for k in 0..nt {
        for j in 0..nth {
            values.push(r.eval_standard(probe.t(k), probe.theta(j))?);
        }
    }
    StandardCylinderField::from_values(t_half, nt, nth, fiber, Provenance::Synthetic, values)
}

pub fn generate_on_domain(
    family: &SyntheticFamily,
    domain: DomainSpec,
    manifold: &EmbeddedManifold,
    boundary: Option<&BoundaryData>,
) -> Result<MapField> {
    let fiber = match domain.kind {
        DomainKind::ClosedTorus => Fiber::Circle,
        DomainKind::FreeBoundaryCylinder => Fiber::Interval,
    };
    let fiber = match family {
        SyntheticFamily::WindingMap { .. } | SyntheticFamily::KLoop { .. } => Fiber::Circle,
        _ => fiber,
    };
    let r = ResolvedFamily::new(family.clone(), manifold, boundary, fiber)?;
    let mut values = Vec::with_capacity(domain.len());
    for j in 0..domain.n2 {
        for i in 0..domain.n1 {
            values.push(r.eval_domain(&domain, domain.x1(i), domain.x2(j))?);
        }
    }
    Ok(MapField {
        domain,
        values,
        manifold_tag: manifold.describe(),
    })
}

/// Per-slice Pohozaev constants of a synthetic family on a grid twice as fine as `v`,
/// with fourth-order derivatives of the closed form, Simpson quadrature and the
/// exact tension. One value per slice of `v`.
pub fn brute_force_alpha(family: &ResolvedFamily, v: &StandardCylinderField) -> Result<Vec<f64>> {
    let nt = 2 * (v.nt - 1) + 1;
    let (nth, interval) = match v.fiber {
        Fiber::Circle => (2 * v.nth, false),
        Fiber::Interval => (2 * (v.nth - 1) + 1, true),
    };
    let ht = 2.0 * v.t_half / (nt - 1) as f64;
    let hth = match v.fiber {
        Fiber::Circle => 2.0 * std::f64::consts::PI / nth as f64,
        Fiber::Interval => std::f64::consts::PI / (nth - 1) as f64,
    };
    let fiber_weight = |j: usize| -> f64 {
        if !interval {
            hth
        } else if j == 0 || j == nth - 1 {
            hth / 3.0
        } else if j % 2 == 1 {
            4.0 * hth / 3.0
        } else {
            2.0 * hth / 3.0
        }
    };
    let step = 1e-3;
    let mut slice_raw = Vec::with_capacity(nt);
    let mut slice_flux = Vec::with_capacity(nt);
    for k in 0..nt {
        let t = -v.t_half + k as f64 * ht;
        let (mut raw, mut flux) = (0.0, 0.0);
        for j in 0..nth {
            let th = j as f64 * hth;
            let (dt, dq) = family.derivatives_at(t, th, step)?;
            let tau = family.exact_tension_at(t, th)?;
            let w = fiber_weight(j);
            raw += w * (dt.norm_sq() - dq.norm_sq());
            flux += w * tau.dot(&dt);
        }
        slice_raw.push(raw);
        slice_flux.push(flux);
    }
    // cumulative Simpson at even fine indices, i.e. at the slices of `v`
    let mut cumulative = vec![0.0; v.nt];
    for k in 1..v.nt {
        let i = 2 * k;
        cumulative[k] = cumulative[k - 1] + ht / 3.0 * (slice_flux[i - 2] + 4.0 * slice_flux[i - 1] + slice_flux[i]);
    }
    let anchor = crate::cylinder::interpolate_uniform(&cumulative, -v.t_half, v.ht(), 0.0);
    Ok((0..v.nt)
        .map(|k| slice_raw[2 * k] - 2.0 * (cumulative[k] - anchor))
        .collect())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GeometryCheck {
    pub samples: usize,
    pub projection_idempotency: f64,
    pub tangent_idempotency: f64,
    /// max |A(u)(X,Y) + D²Π(u)(X,Y)| / (|X||Y|).
    pub second_fundamental_form_error: f64,
    /// max |P_T A(u)(X,Y)| / (|X||Y|).
    pub second_fundamental_form_tangential: f64,
    /// max |DΠ − DΠᵀ| at points of N.
    pub projection_asymmetry: f64,
    pub sigma_involution: f64,
    pub sigma_fixes_k: f64,
    /// max | dist(σ(y), K) − dist(y, K) |.
    pub sigma_distance_defect: f64,
    /// max |Dσ(V) − V| (V ∈ TK) and |Dσ(ξ) + ξ| (ξ ⊥ TK in TN) at points of K.
    pub d_sigma_error: f64,
    /// max |D²σ| from second differences of σ (meaningful as an error for great subspheres).
    pub d2_sigma_fd_norm: f64,
    /// max |d2_sigma − second differences of σ|.
    pub d2_sigma_error: f64,
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> AmbientVector {
    loop {
        let mut v = AmbientVector::zeros(dim);
        for k in 0..dim {
            v[k] = rng.gen_range(-1.0..1.0);
        }
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v.scale(1.0 / n);
        }
    }
}

/// Finite-difference audit of the geometric kernel at `samples` seeded random points.
pub fn fd_check_geometry(
    manifold: &EmbeddedManifold,
    boundary: Option<&BoundaryData>,
    samples: usize,
    seed: u64,
) -> Result<GeometryCheck> {
    const H: f64 = 1e-4;
    let dim = manifold.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GeometryCheck {
        samples,
        ..GeometryCheck::default()
    };
    let scale = manifold.sphere_radius().unwrap_or(1.0);
    for _ in 0..samples {
        let u = manifold.project(&random_unit(&mut rng, dim).scale(scale))?;
        // off-manifold point inside the tube
        let off = u + random_unit(&mut rng, dim).scale(0.3 * manifold.tubular_radius() * rng.gen_range(0.0..1.0));
        let p = manifold.project(&off)?;
        out.projection_idempotency = out.projection_idempotency.max(manifold.project(&p)?.distance(&p));

        let x = manifold.tangent_project(&u, &random_unit(&mut rng, dim))?;
        let y = manifold.tangent_project(&u, &random_unit(&mut rng, dim))?;
        let tx = manifold.tangent_project(&u, &x)?;
        out.tangent_idempotency = out.tangent_idempotency.max(tx.distance(&x));
        let a = manifold.second_fundamental_form(&u, &x, &y)?;
        let pi = |z: AmbientVector| manifold.project(&z);
        let d2 =
            (pi(u + x.scale(H) + y.scale(H))? - pi(u + x.scale(H) - y.scale(H))? - pi(u - x.scale(H) + y.scale(H))?
                + pi(u - x.scale(H) - y.scale(H))?)
            .scale(1.0 / (4.0 * H * H));
        let norm = (x.norm() * y.norm()).max(1e-300);
        out.second_fundamental_form_error = out.second_fundamental_form_error.max((a + d2).norm() / norm);
        out.second_fundamental_form_tangential = out
            .second_fundamental_form_tangential
            .max(manifold.tangent_project_unchecked(&u, &a).norm() / norm);

        let mut jac = vec![vec![0.0; dim]; dim];
        for (c, col) in (0..dim).map(|c| (c, AmbientVector::basis(dim, c))) {
            let d = (pi(u + col.scale(H))? - pi(u - col.scale(H))?).scale(0.5 / H);
            for r in 0..dim {
                jac[r][c] = d[r];
            }
        }
        for r in 0..dim {
            for c in 0..dim {
                out.projection_asymmetry = out.projection_asymmetry.max((jac[r][c] - jac[c][r]).abs());
            }
        }

        if let Some(b) = boundary {
            let foot = b.submanifold_project(&u)?;
            let conormal = b.conormal(&foot);
            let r = scale;
            let dist = rng.gen_range(-0.9..0.9) * b.delta0();
            let y_pt = foot.scale((dist / r).cos()) + conormal.scale(r * (dist / r).sin());
            let s = b.sigma(&y_pt)?;
            out.sigma_involution = out.sigma_involution.max(b.sigma(&s)?.distance(&y_pt));
            out.sigma_distance_defect = out
                .sigma_distance_defect
                .max((b.distance_to_k(&s)? - b.distance_to_k(&y_pt)?).abs());
            out.sigma_fixes_k = out.sigma_fixes_k.max(b.sigma(&foot)?.distance(&foot));

            let vt = b.tangent_project_k(&foot, &random_unit(&mut rng, dim));
            out.d_sigma_error = out.d_sigma_error.max(b.d_sigma(&foot, &vt)?.distance(&vt));
            out.d_sigma_error = out.d_sigma_error.max((b.d_sigma(&foot, &conormal)? + conormal).norm());

            let v = manifold.tangent_project(&y_pt, &random_unit(&mut rng, dim))?;
            let fd = {
                let hh = 1e-3;
                let c = b.sigma_extended(&y_pt)?;
                (b.sigma_extended(&y_pt.axpy(hh, &v))? + b.sigma_extended(&y_pt.axpy(-hh, &v))? - c.scale(2.0))
                    .scale(1.0 / (hh * hh))
            };
            out.d2_sigma_fd_norm = out.d2_sigma_fd_norm.max(fd.norm());
            out.d2_sigma_error = out.d2_sigma_error.max(b.d2_sigma(&y_pt, &v, &v)?.distance(&fd));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{energy, pohozaev, standard_tension_norms, tension_field};
    use crate::grid::FlatMetric;
    use std::f64::consts::PI;

    fn sphere() -> EmbeddedManifold {
        EmbeddedManifold::unit_sphere(3)
    }

    fn neck_family(lambda: f64) -> SyntheticFamily {
        SyntheticFamily::GeodesicNeck {
            lambda,
            geodesic: GeodesicSpec::equator(3, 1.0),
        }
    }

    #[test]
    fn geodesic_neck_is_harmonic_with_closed_alpha() {
        let s = sphere();
        let v = generate_cylinder(&neck_family(0.1), 10.0, 161, 16, Fiber::Circle, &s, None).unwrap();
        let r = ResolvedFamily::new(neck_family(0.1), &s, None, Fiber::Circle).unwrap();
        let tau = r.exact_tension(&v).unwrap();
        assert!(standard_tension_norms(&v, &tau).0 < 1e-8);
        assert!((pohozaev(&v, &tau).alpha - 2.0 * PI * 0.01).abs() < 1e-5);
    }

    #[test]
    fn winding_on_torus_has_closed_energy() {
        let s = sphere();
        let d = DomainSpec::torus(128, 8).unwrap();
        let u = generate_on_domain(
            &SyntheticFamily::WindingMap {
                m: 1,
                phase_amplitude: 0.0,
            },
            d,
            &s,
            None,
        )
        .unwrap();
        let g = FlatMetric::new(0.0, 1.0).unwrap();
        assert!((energy(&u, &g).unwrap() - 2.0 * PI * PI).abs() < 0.01);
        let tau = tension_field(&u, &g, &s).unwrap();
        assert!(tau.iter().all(|t| t.norm() < 1e-9));
    }

    #[test]
    fn constant_map_has_no_structure() {
        let s = sphere();
        let fam = SyntheticFamily::ConstantMap {
            point: AmbientVector::from_slice(&[0.0, 0.0, 1.0]),
        };
        let v = generate_cylinder(&fam, 3.0, 25, 8, Fiber::Circle, &s, None).unwrap();
        let r = ResolvedFamily::new(fam.clone(), &s, None, Fiber::Circle).unwrap();
        let tau = r.exact_tension(&v).unwrap();
        assert!(tau.iter().all(|t| t.norm() == 0.0));
        assert!(brute_force_alpha(&r, &v).unwrap().iter().all(|a| *a == 0.0));
        let off = SyntheticFamily::ConstantMap {
            point: AmbientVector::from_slice(&[0.0, 0.0, 1.1]),
        };
        assert!(matches!(
            ResolvedFamily::new(off, &s, None, Fiber::Circle),
            Err(Error::SpecNotInManifold { .. })
        ));
    }

    #[test]
    fn brute_force_alpha_examples() {
        let s = sphere();
        let b = BoundaryData::equator(&s).unwrap();
        let r = ResolvedFamily::new(neck_family(0.1), &s, Some(&b), Fiber::Interval).unwrap();
        let v = generate_cylinder(&neck_family(0.1), 5.0, 41, 9, Fiber::Interval, &s, Some(&b)).unwrap();
        for a in brute_force_alpha(&r, &v).unwrap() {
            assert!((a - 0.0314159).abs() < 1e-6, "{a}");
        }
        let fam = SyntheticFamily::WindingMap {
            m: 2,
            phase_amplitude: 0.0,
        };
        let r = ResolvedFamily::new(fam.clone(), &s, None, Fiber::Circle).unwrap();
        let v = generate_cylinder(&fam, 2.0, 9, 32, Fiber::Circle, &s, None).unwrap();
        for a in brute_force_alpha(&r, &v).unwrap() {
            assert!((a + 2.0 * PI * 4.0).abs() < 1e-5, "{a}");
        }
    }

    #[test]
    fn geodesic_outside_k_is_rejected() {
        let s = sphere();
        let b = BoundaryData::equator(&s).unwrap();
        let tilted = SyntheticFamily::GeodesicNeck {
            lambda: 0.1,
            geodesic: GeodesicSpec {
                base: AmbientVector::from_slice(&[1.0, 0.0, 0.0]),
                direction: AmbientVector::from_slice(&[0.0, 0.6, 0.8]),
            },
        };
        assert!(matches!(
            ResolvedFamily::new(tilted, &s, Some(&b), Fiber::Interval),
            Err(Error::SpecNotInManifold { .. })
        ));
    }

    #[test]
    fn perturbed_neck_is_seeded_and_keeps_k() {
        let s = sphere();
        let b = BoundaryData::equator(&s).unwrap();
        let fam = SyntheticFamily::PerturbedNeck {
            lambda: 0.2,
            amplitude: 0.05,
            decay: 1.0,
            seed: 7,
            geodesic: GeodesicSpec::equator(3, 1.0),
        };
        let v1 = generate_cylinder(&fam, 4.0, 33, 9, Fiber::Interval, &s, Some(&b)).unwrap();
        let v2 = generate_cylinder(&fam, 4.0, 33, 9, Fiber::Interval, &s, Some(&b)).unwrap();
        assert_eq!(v1, v2);
        for k in 0..v1.nt {
            for j in [0, v1.nth - 1] {
                assert!(v1.at(k, j)[2].abs() < 1e-15);
            }
        }
    }

    #[test]
    fn conformal_family_has_vanishing_hopf() {
        let s = sphere();
        let fam = SyntheticFamily::ConformalExp { epsilon: 1e-3 };
        let r = ResolvedFamily::new(fam.clone(), &s, None, Fiber::Circle).unwrap();
        let v = generate_cylinder(&fam, 3.0, 97, 64, Fiber::Circle, &s, None).unwrap();
        let tau = r.exact_tension(&v).unwrap();
        assert!(tau.iter().all(|t| t.norm() < 1e-9));
        let (dt, dq) = r.derivatives_at(1.0, 0.3, 1e-3).unwrap();
        assert!((dt.norm_sq() - dq.norm_sq()).abs() < 1e-12 && dt.dot(&dq).abs() < 1e-12);
    }

    #[test]
    fn geometry_check_on_sphere_and_equator() {
        let s = sphere();
        let b = BoundaryData::equator(&s).unwrap();
        let c = fd_check_geometry(&s, Some(&b), 50, 3).unwrap();
        assert!(c.projection_idempotency < 1e-12);
        assert!(c.second_fundamental_form_error < 1e-6);
        assert!(c.second_fundamental_form_tangential < 1e-12);
        assert!(c.projection_asymmetry < 1e-7);
        assert!(c.sigma_involution < 1e-12);
        assert!(c.d_sigma_error < 1e-12);
        assert!(c.d2_sigma_fd_norm < 1e-7);
    }
}
