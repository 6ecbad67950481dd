//! Target manifold N, boundary submanifold K and pointwise geometric operators.

mod boundary;
mod manifold;

pub use boundary::{BoundaryData, SigmaMethod};
pub use manifold::{Ellipsoid, EmbeddedManifold, LevelFunction, LevelSet, ManifoldKind};

use crate::error::{Error, Result};
use crate::vector::AmbientVector;

/// Right-hand side of the geodesic-like curve equation:
/// `−A(u)(v,v) + ½ D²σ(u)(v,v)`. Without boundary data this is the geodesic equation.
pub fn geodesic_like_rhs(
    manifold: &EmbeddedManifold,
    boundary: Option<&BoundaryData>,
    u: &AmbientVector,
    v: &AmbientVector,
) -> Result<AmbientVector> {
    let a = manifold.second_fundamental_form(u, v, v)?;
    let mut rhs = -a;
    if let Some(b) = boundary {
        rhs += b.d2_sigma(u, v, v)?.scale(0.5);
    }
    Ok(rhs)
}

/// Integrates `u'' = geodesic_like_rhs(u, u')` by classical RK4 over parameter
/// length `length`, returning the `steps + 1` positions.
pub fn integrate_geodesic_like(
    manifold: &EmbeddedManifold,
    boundary: Option<&BoundaryData>,
    u0: &AmbientVector,
    v0: &AmbientVector,
    length: f64,
    steps: usize,
) -> Result<Vec<AmbientVector>> {
    if steps == 0 {
        return Err(Error::InvalidInput("integration needs at least one step".into()));
    }
    let rhs = |x: &AmbientVector, w: &AmbientVector| -> Result<AmbientVector> {
        let base = manifold.project(x)?;
        let tw = manifold.tangent_project_unchecked(&base, w);
        let mut r = -manifold.second_fundamental_form_unchecked(&base, &tw, &tw);
        if let Some(b) = boundary {
            r += b.d2_sigma(&base, &tw, &tw)?.scale(0.5);
        }
        Ok(r)
    };
    let h = length / steps as f64;
    let mut x = *u0;
    let mut w = *v0;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x);
    for _ in 0..steps {
        let k1x = w;
        let k1w = rhs(&x, &w)?;
        let k2x = w.axpy(0.5 * h, &k1w);
        let k2w = rhs(&x.axpy(0.5 * h, &k1x), &k2x)?;
        let k3x = w.axpy(0.5 * h, &k2w);
        let k3w = rhs(&x.axpy(0.5 * h, &k2x), &k3x)?;
        let k4x = w.axpy(h, &k3w);
        let k4w = rhs(&x.axpy(h, &k3x), &k4x)?;
        x = x + (k1x + 2.0 * k2x + 2.0 * k3x + k4x).scale(h / 6.0);
        w = w + (k1w + 2.0 * k2w + 2.0 * k3w + k4w).scale(h / 6.0);
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v3(x: f64, y: f64, z: f64) -> AmbientVector {
        AmbientVector::from_slice(&[x, y, z])
    }

    #[test]
    fn geodesic_like_rhs_examples() {
        let s = EmbeddedManifold::unit_sphere(3);
        let b = BoundaryData::equator(&s).unwrap();
        let u = v3(1.0, 0.0, 0.0);
        let v = v3(0.0, 1.0, 0.0);
        let r = geodesic_like_rhs(&s, Some(&b), &u, &v).unwrap();
        assert!(r.distance(&v3(-1.0, 0.0, 0.0)) < 1e-15);
        let zero = geodesic_like_rhs(&s, Some(&b), &u, &v3(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(zero.norm(), 0.0);
        let neg = geodesic_like_rhs(&s, Some(&b), &u, &(-v)).unwrap();
        assert_eq!(neg, r);
    }

    #[test]
    fn great_circle_stays_on_equator() {
        let s = EmbeddedManifold::unit_sphere(3);
        let b = BoundaryData::equator(&s).unwrap();
        let path = integrate_geodesic_like(&s, Some(&b), &v3(1.0, 0.0, 0.0), &v3(0.0, 1.0, 0.0), 1.0, 100).unwrap();
        let end = path.last().unwrap();
        assert!(end[2].abs() < 1e-15);
        assert!(end.distance(&v3(1f64.cos(), 1f64.sin(), 0.0)) < 1e-9);
    }
}
