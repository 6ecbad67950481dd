//! Target manifolds embedded in Euclidean space: nearest-point projection,
//! tangent projection and second fundamental form.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::vector::AmbientVector;

/// A smooth defining function `f` with `N = {f = 0}` and `∇f ≠ 0` on `N`.
pub trait LevelFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &AmbientVector) -> f64;
    fn gradient(&self, x: &AmbientVector) -> AmbientVector;
    /// Hessian of `f` at `x` applied to `v`.
    fn hessian_apply(&self, x: &AmbientVector, v: &AmbientVector) -> AmbientVector;
    fn describe(&self) -> String;
}

/// Axis-aligned ellipsoid `Σ x_k²/a_k² = 1`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    pub axes: Vec<f64>,
}

impl LevelFunction for Ellipsoid {
    fn dim(&self) -> usize {
        self.axes.len()
    }

    fn value(&self, x: &AmbientVector) -> f64 {
        self.axes
            .iter()
            .enumerate()
            .map(|(k, a)| x[k] * x[k] / (a * a))
            .sum::<f64>()
            - 1.0
    }

    fn gradient(&self, x: &AmbientVector) -> AmbientVector {
        let mut g = AmbientVector::zeros(self.dim());
        for (k, a) in self.axes.iter().enumerate() {
            g[k] = 2.0 * x[k] / (a * a);
        }
        g
    }

    fn hessian_apply(&self, _x: &AmbientVector, v: &AmbientVector) -> AmbientVector {
        let mut h = AmbientVector::zeros(self.dim());
        for (k, a) in self.axes.iter().enumerate() {
            h[k] = 2.0 * v[k] / (a * a);
        }
        h
    }

    fn describe(&self) -> String {
        let axes: Vec<String> = self.axes.iter().map(|a| format!("{a}")).collect();
        format!("ellipsoid({})", axes.join(","))
    }
}

/// Newton settings and defining function of a level-set manifold.
#[derive(Clone, Debug)]
pub struct LevelSet {
    pub function: Arc<dyn LevelFunction>,
    pub max_iterations: usize,
    pub newton_tolerance: f64,
    pub tubular_radius: f64,
}

#[derive(Clone, Debug)]
pub enum ManifoldKind {
    AnalyticSphere {
        radius: f64,
    },
    /// Product of two planar circles in ℝ⁴ with radii `r1`, `r2`.
    AnalyticFlatTorusEmbedding {
        r1: f64,
        r2: f64,
    },
    LevelSet(LevelSet),
}

#[derive(Clone, Debug)]
pub struct EmbeddedManifold {
    ambient_dim: usize,
    tolerance: f64,
    kind: ManifoldKind,
}

const DEFAULT_TOLERANCE: f64 = 1e-12;

impl EmbeddedManifold {
    pub fn sphere(ambient_dim: usize, radius: f64) -> Self {
        assert!(radius > 0.0, "sphere radius must be positive");
        Self {
            ambient_dim,
            tolerance: DEFAULT_TOLERANCE,
            kind: ManifoldKind::AnalyticSphere { radius },
        }
    }

    pub fn unit_sphere(ambient_dim: usize) -> Self {
        Self::sphere(ambient_dim, 1.0)
    }

    pub fn flat_torus(r1: f64, r2: f64) -> Self {
        assert!(r1 > 0.0 && r2 > 0.0, "torus radii must be positive");
        Self {
            ambient_dim: 4,
            tolerance: DEFAULT_TOLERANCE,
            kind: ManifoldKind::AnalyticFlatTorusEmbedding { r1, r2 },
        }
    }

    pub fn level_set(function: Arc<dyn LevelFunction>, tubular_radius: f64) -> Self {
        Self {
            ambient_dim: function.dim(),
            tolerance: DEFAULT_TOLERANCE,
            kind: ManifoldKind::LevelSet(LevelSet {
                function,
                max_iterations: 50,
                newton_tolerance: 1e-12,
                tubular_radius,
            }),
        }
    }

    pub fn ellipsoid(axes: &[f64]) -> Self {
        let min_axis = axes.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_axis = axes.iter().cloned().fold(0.0, f64::max);
        // focal distance of the most curved normal section
        let radius = 0.5 * min_axis * min_axis / max_axis;
        Self::level_set(Arc::new(Ellipsoid { axes: axes.to_vec() }), radius)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    pub fn sphere_radius(&self) -> Option<f64> {
        match self.kind {
            ManifoldKind::AnalyticSphere { radius } => Some(radius),
            _ => None,
        }
    }

    /// Distance from `N` within which the nearest-point projection is smooth.
    pub fn tubular_radius(&self) -> f64 {
        match &self.kind {
            ManifoldKind::AnalyticSphere { radius } => *radius,
            ManifoldKind::AnalyticFlatTorusEmbedding { r1, r2 } => r1.min(*r2),
            ManifoldKind::LevelSet(ls) => ls.tubular_radius,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ManifoldKind::AnalyticSphere { radius } => {
                format!("sphere(dim={},radius={})", self.ambient_dim, radius)
            }
            ManifoldKind::AnalyticFlatTorusEmbedding { r1, r2 } => {
                format!("flat_torus(r1={r1},r2={r2})")
            }
            ManifoldKind::LevelSet(ls) => ls.function.describe(),
        }
    }

    fn check_dim(&self, x: &AmbientVector) -> Result<()> {
        if x.dim() != self.ambient_dim {
            return Err(Error::InvalidInput(format!(
                "vector of dimension {} for a manifold in dimension {}",
                x.dim(),
                self.ambient_dim
            )));
        }
        Ok(())
    }

    /// Nearest-point projection Π_N.
    pub fn project(&self, x: &AmbientVector) -> Result<AmbientVector> {
        self.check_dim(x)?;
        if !x.is_finite() {
            return Err(Error::NonFiniteValue {
                context: "projection input".into(),
            });
        }
        match &self.kind {
            ManifoldKind::AnalyticSphere { radius } => {
                let n = x.norm();
                if n == 0.0 {
                    return Err(Error::NoConvergence {
                        iterations: 0,
                        residual: *radius,
                    });
                }
                Ok(x.scale(radius / n))
            }
            ManifoldKind::AnalyticFlatTorusEmbedding { r1, r2 } => {
                let n1 = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let n2 = (x[2] * x[2] + x[3] * x[3]).sqrt();
                if n1 == 0.0 || n2 == 0.0 {
                    return Err(Error::NoConvergence {
                        iterations: 0,
                        residual: r1.min(*r2),
                    });
                }
                Ok(AmbientVector::from_slice(&[
                    r1 * x[0] / n1,
                    r1 * x[1] / n1,
                    r2 * x[2] / n2,
                    r2 * x[3] / n2,
                ]))
            }
            ManifoldKind::LevelSet(ls) => project_level_set(ls, x),
        }
    }

    /// Euclidean distance from `x` to `N`.
    pub fn distance(&self, x: &AmbientVector) -> Result<f64> {
        Ok(x.distance(&self.project(x)?))
    }

    fn check_on_manifold(&self, u: &AmbientVector) -> Result<()> {
        let d = self.distance(u)?;
        if d > 100.0 * self.tolerance {
            return Err(Error::PointOffManifold { distance: d });
        }
        Ok(())
    }

    /// Orthonormal basis of the normal space at (the projection of) `u`.
    fn normal_basis(&self, u: &AmbientVector) -> ([AmbientVector; 2], usize) {
        let d = self.ambient_dim;
        match &self.kind {
            ManifoldKind::AnalyticSphere { .. } => {
                let n = u.normalized().unwrap_or_else(|| AmbientVector::basis(d, 0));
                ([n, n], 1)
            }
            ManifoldKind::AnalyticFlatTorusEmbedding { .. } => {
                let n1 = AmbientVector::from_slice(&[u[0], u[1], 0.0, 0.0])
                    .normalized()
                    .unwrap_or_else(|| AmbientVector::basis(4, 0));
                let n2 = AmbientVector::from_slice(&[0.0, 0.0, u[2], u[3]])
                    .normalized()
                    .unwrap_or_else(|| AmbientVector::basis(4, 2));
                ([n1, n2], 2)
            }
            ManifoldKind::LevelSet(ls) => {
                let n = ls
                    .function
                    .gradient(u)
                    .normalized()
                    .unwrap_or_else(|| AmbientVector::basis(d, 0));
                ([n, n], 1)
            }
        }
    }

    /// Tangent projection without verifying that `u` lies on `N`.
    pub fn tangent_project_unchecked(&self, u: &AmbientVector, x: &AmbientVector) -> AmbientVector {
        let (basis, count) = self.normal_basis(u);
        let mut out = *x;
        for n in basis.iter().take(count) {
            out = out.axpy(-out.dot(n), n);
        }
        out
    }

    /// Orthogonal projection of `x` onto `T_u N`.
    pub fn tangent_project(&self, u: &AmbientVector, x: &AmbientVector) -> Result<AmbientVector> {
        self.check_dim(x)?;
        self.check_on_manifold(u)?;
        Ok(self.tangent_project_unchecked(u, x))
    }

    /// Second fundamental form without verifying that `u` lies on `N`.
    /// Arguments are tangent-projected first, so ambient vectors are accepted.
    pub fn second_fundamental_form_unchecked(
        &self,
        u: &AmbientVector,
        x: &AmbientVector,
        y: &AmbientVector,
    ) -> AmbientVector {
        let xt = self.tangent_project_unchecked(u, x);
        let yt = self.tangent_project_unchecked(u, y);
        match &self.kind {
            ManifoldKind::AnalyticSphere { radius } => {
                let n = u.normalized().unwrap_or_else(|| AmbientVector::basis(u.dim(), 0));
                n.scale(xt.dot(&yt) / radius)
            }
            ManifoldKind::AnalyticFlatTorusEmbedding { r1, r2 } => {
                let (basis, _) = self.normal_basis(u);
                let s1 = xt[0] * yt[0] + xt[1] * yt[1];
                let s2 = xt[2] * yt[2] + xt[3] * yt[3];
                basis[0].scale(s1 / r1) + basis[1].scale(s2 / r2)
            }
            ManifoldKind::LevelSet(ls) => {
                let g = ls.function.gradient(u);
                let gn = g.norm();
                let hy = ls.function.hessian_apply(u, &yt);
                g.scale(xt.dot(&hy) / (gn * gn))
            }
        }
    }

    /// A(u)(X,Y) = −D²Π_N(u)(X,Y) for tangent X, Y.
    pub fn second_fundamental_form(
        &self,
        u: &AmbientVector,
        x: &AmbientVector,
        y: &AmbientVector,
    ) -> Result<AmbientVector> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        self.check_on_manifold(u)?;
        Ok(self.second_fundamental_form_unchecked(u, x, y))
    }

    /// Geodesic exponential map by fixed-step RK4 on c'' = −A(c)(c',c').
    pub fn exp_map(&self, p: &AmbientVector, v: &AmbientVector, steps: usize) -> Result<AmbientVector> {
        let (c, _) = self.integrate_geodesic(p, v, 1.0, steps, |_, _| {})?;
        self.project(&c)
    }

    /// Integrates the geodesic equation from `p` with velocity `v` up to parameter `t_end`,
    /// calling `visit(position, velocity)` after every step.
    pub fn integrate_geodesic(
        &self,
        p: &AmbientVector,
        v: &AmbientVector,
        t_end: f64,
        steps: usize,
        mut visit: impl FnMut(&AmbientVector, &AmbientVector),
    ) -> Result<(AmbientVector, AmbientVector)> {
        let accel = |x: &AmbientVector, w: &AmbientVector| -> Result<AmbientVector> {
            let base = self.project(x)?;
            Ok(-self.second_fundamental_form_unchecked(&base, w, w))
        };
        let h = t_end / steps as f64;
        let mut x = *p;
        let mut w = *v;
        for _ in 0..steps {
            let k1x = w;
            let k1w = accel(&x, &w)?;
            let k2x = w.axpy(0.5 * h, &k1w);
            let k2w = accel(&x.axpy(0.5 * h, &k1x), &k2x)?;
            let k3x = w.axpy(0.5 * h, &k2w);
            let k3w = accel(&x.axpy(0.5 * h, &k2x), &k3x)?;
            let k4x = w.axpy(h, &k3w);
            let k4w = accel(&x.axpy(h, &k3x), &k4x)?;
            x = x + (k1x + 2.0 * k2x + 2.0 * k3x + k4x).scale(h / 6.0);
            w = w + (k1w + 2.0 * k2w + 2.0 * k3w + k4w).scale(h / 6.0);
            visit(&x, &w);
        }
        Ok((x, w))
    }

    /// Inverse exponential map by shooting: finds tangent `v` at `p` with exp_p(v) = y.
    pub fn log_map(&self, p: &AmbientVector, y: &AmbientVector, steps: usize) -> Result<AmbientVector> {
        let target = self.project(y)?;
        let mut v = self.tangent_project_unchecked(p, &(target - *p));
        if v.norm() == 0.0 {
            return Ok(v);
        }
        let scale = p.norm().max(1.0);
        let mut best = f64::INFINITY;
        let mut stalled = 0;
        for it in 0..200 {
            let e = self.exp_map(p, &v, steps)? - target;
            let r = e.norm();
            if r <= 1e-15 * scale {
                return Ok(v);
            }
            if r >= best {
                stalled += 1;
                if stalled >= 3 {
                    if best <= 1e-12 * scale {
                        return Ok(v);
                    }
                    return Err(Error::NoConvergence {
                        iterations: it,
                        residual: best,
                    });
                }
            } else {
                best = r;
                stalled = 0;
            }
            v -= self.tangent_project_unchecked(p, &e);
        }
        if best <= 1e-12 * scale {
            Ok(v)
        } else {
            Err(Error::NoConvergence {
                iterations: 200,
                residual: best,
            })
        }
    }
}

fn project_level_set(ls: &LevelSet, x: &AmbientVector) -> Result<AmbientVector> {
    let f = &ls.function;
    let d = f.dim();
    let scale = x.norm().max(1.0);

    let residual = |y: &AmbientVector, mu: f64| -> (AmbientVector, f64, f64) {
        let g = f.gradient(y);
        let r1 = *y - *x + g.scale(mu);
        let r2 = f.value(y);
        let norm = (r1.norm_sq() + r2 * r2).sqrt();
        (r1, r2, norm)
    };

    // start from one Newton step on f along its gradient
    let g0 = f.gradient(x);
    let gg = g0.norm_sq();
    if gg == 0.0 {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: f.value(x).abs(),
        });
    }
    let mut y = x.axpy(-f.value(x) / gg, &g0);
    let gy = f.gradient(&y);
    let mut mu = -(y - *x).dot(&gy) / gy.norm_sq().max(f64::MIN_POSITIVE);
    let (mut r1, mut r2, mut rn) = residual(&y, mu);
    let mut converged_at: Option<usize> = None;

    for it in 0..ls.max_iterations {
        if rn <= ls.newton_tolerance * scale && converged_at.is_none() {
            converged_at = Some(it);
        }
        // two polishing iterations past the tolerance bring the result to round-off
        if let Some(c) = converged_at {
            if it >= c + 2 || rn == 0.0 {
                break;
            }
        }
        let g = f.gradient(&y);
        let mut jac = DMatrix::<f64>::zeros(d + 1, d + 1);
        for k in 0..d {
            let hk = f.hessian_apply(&y, &AmbientVector::basis(d, k));
            for i in 0..d {
                jac[(i, k)] = mu * hk[i];
            }
            jac[(k, k)] += 1.0;
            jac[(k, d)] = g[k];
            jac[(d, k)] = g[k];
        }
        let mut rhs = DVector::<f64>::zeros(d + 1);
        for i in 0..d {
            rhs[i] = -r1[i];
        }
        rhs[d] = -r2;
        let Some(step) = jac.lu().solve(&rhs) else {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: rn,
            });
        };
        let mut dy = AmbientVector::zeros(d);
        for i in 0..d {
            dy[i] = step[i];
        }
        let dmu = step[d];

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let y_try = y.axpy(lambda, &dy);
            let mu_try = mu + lambda * dmu;
            let (t1, t2, tn) = residual(&y_try, mu_try);
            if tn < rn || (converged_at.is_some() && tn <= rn) {
                y = y_try;
                mu = mu_try;
                r1 = t1;
                r2 = t2;
                rn = tn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            if converged_at.is_some() {
                break;
            }
            return Err(Error::NoConvergence {
                iterations: it,
                residual: rn,
            });
        }
    }
    if rn <= ls.newton_tolerance * scale {
        Ok(y)
    } else {
        Err(Error::NoConvergence {
            iterations: ls.max_iterations,
            residual: rn,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v3(x: f64, y: f64, z: f64) -> AmbientVector {
        AmbientVector::from_slice(&[x, y, z])
    }

    #[test]
    fn sphere_projection_examples() {
        let s = EmbeddedManifold::unit_sphere(3);
        assert_eq!(s.project(&v3(2.0, 0.0, 0.0)).unwrap(), v3(1.0, 0.0, 0.0));
        assert_eq!(s.project(&v3(1.0, 0.0, 0.0)).unwrap(), v3(1.0, 0.0, 0.0));
        let p = s.project(&v3(0.6, 0.0, 0.8)).unwrap();
        assert_abs_diff_eq!(p.distance(&v3(0.6, 0.0, 0.8)), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn tangent_projection_examples() {
        let s = EmbeddedManifold::unit_sphere(3);
        let u = v3(1.0, 0.0, 0.0);
        assert_eq!(s.tangent_project(&u, &v3(0.0, 1.0, 0.0)).unwrap(), v3(0.0, 1.0, 0.0));
        assert_eq!(s.tangent_project(&u, &v3(1.0, 0.0, 0.0)).unwrap(), v3(0.0, 0.0, 0.0));
        assert_eq!(s.tangent_project(&u, &v3(3.0, 4.0, 0.0)).unwrap(), v3(0.0, 4.0, 0.0));
        assert!(matches!(
            s.tangent_project(&v3(2.0, 0.0, 0.0), &u),
            Err(Error::PointOffManifold { .. })
        ));
    }

    #[test]
    fn sphere_second_fundamental_form_points_inward_along_geodesics() {
        // a great circle c(s) = (cos s, sin s, 0) has c'' = −c = −A(c)(c',c')
        let s = EmbeddedManifold::unit_sphere(3);
        let a = s
            .second_fundamental_form(&v3(1.0, 0.0, 0.0), &v3(0.0, 1.0, 0.0), &v3(0.0, 1.0, 0.0))
            .unwrap();
        assert_abs_diff_eq!(a.distance(&v3(1.0, 0.0, 0.0)), 0.0, epsilon = 1e-15);
        let z = s
            .second_fundamental_form(&v3(0.0, 0.0, 1.0), &v3(1.0, 0.0, 0.0), &v3(0.0, 1.0, 0.0))
            .unwrap();
        assert_eq!(z.norm(), 0.0);
        let zero = s
            .second_fundamental_form(&v3(0.0, 0.0, 1.0), &v3(1.0, 0.0, 0.0), &v3(0.0, 0.0, 0.0))
            .unwrap();
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn ellipsoid_projection_is_orthogonal() {
        let e = EmbeddedManifold::ellipsoid(&[1.0, 1.5, 0.8]);
        let x = v3(0.9, 0.7, 0.5);
        let p = e.project(&x).unwrap();
        let ManifoldKind::LevelSet(ls) = e.kind() else {
            unreachable!()
        };
        assert!(ls.function.value(&p).abs() < 1e-13);
        // x − p is normal: its tangent part vanishes
        assert!(e.tangent_project(&p, &(x - p)).unwrap().norm() < 1e-12);
        let pp = e.project(&p).unwrap();
        assert!(pp.distance(&p) < 1e-14);
    }

    #[test]
    fn exp_and_log_are_inverse_on_sphere() {
        let s = EmbeddedManifold::unit_sphere(3);
        let p = v3(1.0, 0.0, 0.0);
        let v = v3(0.0, 0.3, 0.2);
        let y = s.exp_map(&p, &v, 32).unwrap();
        let exact = p.scale(v.norm().cos()) + v.scale(v.norm().sin() / v.norm());
        assert!(y.distance(&exact) < 1e-8);
        let w = s.log_map(&p, &y, 32).unwrap();
        assert!(w.distance(&v) < 1e-13);
    }
}
