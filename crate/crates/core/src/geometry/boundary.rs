//! Boundary submanifold K ⊂ N and the geodesic reflection σ across it.
//!
//! K is a subsphere `{y ∈ N : y·n = c}` of a round sphere N. For `c = 0` the
//! reflection is the linear map `y ↦ y − 2(y·n)n`; otherwise σ is computed by
//! shooting geodesics, σ(y) = exp_{y'}(−exp⁻¹_{y'} y) with y' = Π_K(y).

use crate::error::{Error, Result};
use crate::geometry::manifold::EmbeddedManifold;
use crate::vector::AmbientVector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaMethod {
    LinearReflection,
    GeodesicShooting { steps: usize },
}

#[derive(Clone, Debug)]
pub struct BoundaryData {
    manifold: EmbeddedManifold,
    radius: f64,
    normal: AmbientVector,
    height: f64,
    method: SigmaMethod,
    delta0: f64,
}

const D_SIGMA_STEP: f64 = 1e-3;
const D2_SIGMA_STEP: f64 = 1e-4;
const DEFAULT_SHOOTING_STEPS: usize = 16;

impl BoundaryData {
    /// Great subsphere orthogonal to the last coordinate axis, with the linear reflection.
    pub fn equator(manifold: &EmbeddedManifold) -> Result<Self> {
        let d = manifold.ambient_dim();
        Self::subsphere(manifold, AmbientVector::basis(d, d - 1), 0.0, None, None)
    }

    /// Subsphere `{y·normal = height}`. `method = None` picks the linear reflection for
    /// great subspheres and geodesic shooting otherwise.
    pub fn subsphere(
        manifold: &EmbeddedManifold,
        normal: AmbientVector,
        height: f64,
        method: Option<SigmaMethod>,
        delta0: Option<f64>,
    ) -> Result<Self> {
        let radius = manifold
            .sphere_radius()
            .ok_or_else(|| Error::InvalidInput("boundary submanifolds are supported for sphere targets only".into()))?;
        let normal = normal
            .normalized()
            .ok_or_else(|| Error::InvalidInput("subsphere normal must be nonzero".into()))?;
        if normal.dim() != manifold.ambient_dim() {
            return Err(Error::InvalidInput("subsphere normal has wrong dimension".into()));
        }
        if height.abs() >= radius {
            return Err(Error::InvalidInput(format!(
                "subsphere height {height} must be smaller than the radius {radius}"
            )));
        }
        let method = method.unwrap_or(if height == 0.0 {
            SigmaMethod::LinearReflection
        } else {
            SigmaMethod::GeodesicShooting {
                steps: DEFAULT_SHOOTING_STEPS,
            }
        });
        if method == SigmaMethod::LinearReflection && height != 0.0 {
            return Err(Error::InvalidInput(
                "the linear reflection requires a great subsphere (height 0)".into(),
            ));
        }
        let mut data = Self {
            manifold: manifold.clone(),
            radius,
            normal,
            height,
            method,
            delta0: 0.0,
        };
        data.delta0 = match delta0 {
            Some(d) if d > 0.0 => d,
            Some(d) => return Err(Error::InvalidInput(format!("delta0 must be positive, got {d}"))),
            // the linear reflection is valid on the whole open tube up to the poles
            None if method == SigmaMethod::LinearReflection => data.focal_radius(),
            None => 0.3 * data.focal_radius(),
        };
        Ok(data)
    }

    pub fn manifold(&self) -> &EmbeddedManifold {
        &self.manifold
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn method(&self) -> SigmaMethod {
        self.method
    }

    pub fn normal(&self) -> AmbientVector {
        self.normal
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// Distance along normal geodesics of K in N to the first focal point.
    pub fn focal_radius(&self) -> f64 {
        let colatitude = (self.height / self.radius).acos();
        self.radius * colatitude.min(std::f64::consts::PI - colatitude)
    }

    pub fn describe(&self) -> String {
        let n: Vec<String> = self.normal.as_slice().iter().map(|x| format!("{x}")).collect();
        let method = match self.method {
            SigmaMethod::LinearReflection => "linear".to_string(),
            SigmaMethod::GeodesicShooting { steps } => format!("shooting({steps})"),
        };
        format!(
            "subsphere(normal=[{}],height={},sigma={},delta0={})",
            n.join(","),
            self.height,
            method,
            self.delta0
        )
    }

    fn k_radius(&self) -> f64 {
        (self.radius * self.radius - self.height * self.height).sqrt()
    }

    /// Nearest point of K (along N's meridians through the K-axis).
    pub fn submanifold_project(&self, y: &AmbientVector) -> Result<AmbientVector> {
        let w = y.axpy(-y.dot(&self.normal), &self.normal);
        let wn = w.norm();
        if wn <= 1e-14 * self.radius {
            return Err(Error::OutsideTubularNeighborhood {
                distance: self.focal_radius(),
                delta0: self.delta0,
            });
        }
        Ok(self.normal.scale(self.height) + w.scale(self.k_radius() / wn))
    }

    /// Geodesic distance in N from `y` (projected to N) to K.
    pub fn distance_to_k(&self, y: &AmbientVector) -> Result<f64> {
        let on_n = self.manifold.project(y)?;
        let yk = self.submanifold_project(&on_n)?;
        let chord = on_n.distance(&yk);
        Ok(2.0 * self.radius * (0.5 * chord / self.radius).min(1.0).asin())
    }

    /// Euclidean distance from an ambient point to K.
    pub fn ambient_distance_to_k(&self, y: &AmbientVector) -> Result<f64> {
        Ok(y.distance(&self.submanifold_project(y)?))
    }

    /// Projection of `x` onto T_yK for `y` on K.
    pub fn tangent_project_k(&self, y: &AmbientVector, x: &AmbientVector) -> AmbientVector {
        let radial = y.normalized().unwrap_or(self.normal);
        let mut out = x.axpy(-x.dot(&radial), &radial);
        let conormal = self.normal.axpy(-self.normal.dot(&radial), &radial);
        if let Some(c) = conormal.normalized() {
            out = out.axpy(-out.dot(&c), &c);
        }
        out
    }

    /// Unit normal of K inside N at a point of K, pointing towards increasing `y·n`.
    pub fn conormal(&self, y: &AmbientVector) -> AmbientVector {
        let radial = y.normalized().unwrap_or(self.normal);
        self.normal
            .axpy(-self.normal.dot(&radial), &radial)
            .normalized()
            .unwrap_or(self.normal)
    }

    fn check_tubular(&self, y: &AmbientVector) -> Result<()> {
        let d = self.distance_to_k(y)?;
        if d >= self.delta0 {
            return Err(Error::OutsideTubularNeighborhood {
                distance: d,
                delta0: self.delta0,
            });
        }
        Ok(())
    }

    /// The involution σ on K_{δ0}.
    pub fn sigma(&self, y: &AmbientVector) -> Result<AmbientVector> {
        self.check_tubular(y)?;
        self.sigma_unchecked(y)
    }

    fn sigma_unchecked(&self, y: &AmbientVector) -> Result<AmbientVector> {
        match self.method {
            SigmaMethod::LinearReflection => Ok(y.axpy(-2.0 * y.dot(&self.normal), &self.normal)),
            SigmaMethod::GeodesicShooting { steps } => {
                let on_n = self.manifold.project(y)?;
                let foot = self.submanifold_project(&on_n)?;
                if on_n.distance(&foot) == 0.0 {
                    return Ok(foot);
                }
                let v = self.manifold.log_map(&foot, &on_n, steps)?;
                self.manifold.exp_map(&foot, &(-v), steps)
            }
        }
    }

    /// Degree-one homogeneous extension of σ to a neighborhood of N in ambient space;
    /// reduces to the linear reflection for great subspheres.
    pub fn sigma_extended(&self, x: &AmbientVector) -> Result<AmbientVector> {
        let n = x.norm();
        if n == 0.0 {
            return Err(Error::InvalidInput("cannot extend sigma to the origin".into()));
        }
        Ok(self.sigma_unchecked(&x.scale(self.radius / n))?.scale(n / self.radius))
    }

    /// Dσ(y)(V).
    pub fn d_sigma(&self, y: &AmbientVector, v: &AmbientVector) -> Result<AmbientVector> {
        self.check_tubular(y)?;
        match self.method {
            SigmaMethod::LinearReflection => Ok(v.axpy(-2.0 * v.dot(&self.normal), &self.normal)),
            SigmaMethod::GeodesicShooting { .. } => {
                let vn = v.norm();
                if vn == 0.0 {
                    return Ok(AmbientVector::zeros(v.dim()));
                }
                let e = v.scale(1.0 / vn);
                let central = |h: f64| -> Result<AmbientVector> {
                    let plus = self.sigma_extended(&y.axpy(h, &e))?;
                    let minus = self.sigma_extended(&y.axpy(-h, &e))?;
                    Ok((plus - minus).scale(0.5 / h))
                };
                let coarse = central(D_SIGMA_STEP)?;
                let fine = central(0.5 * D_SIGMA_STEP)?;
                Ok((fine.scale(4.0) - coarse).scale(vn / 3.0))
            }
        }
    }

    fn d2_sigma_diag(&self, y: &AmbientVector, v: &AmbientVector) -> Result<AmbientVector> {
        let vn = v.norm();
        if vn == 0.0 {
            return Ok(AmbientVector::zeros(v.dim()));
        }
        let e = v.scale(1.0 / vn);
        let center = self.sigma_extended(y)?;
        let second = |h: f64| -> Result<AmbientVector> {
            let plus = self.sigma_extended(&y.axpy(h, &e))?;
            let minus = self.sigma_extended(&y.axpy(-h, &e))?;
            Ok((plus + minus - center.scale(2.0)).scale(1.0 / (h * h)))
        };
        let coarse = second(D2_SIGMA_STEP)?;
        let fine = second(0.5 * D2_SIGMA_STEP)?;
        Ok((fine.scale(4.0) - coarse).scale(vn * vn / 3.0))
    }

    /// D²σ(y)(V,W) of the homogeneous extension.
    pub fn d2_sigma(&self, y: &AmbientVector, v: &AmbientVector, w: &AmbientVector) -> Result<AmbientVector> {
        self.check_tubular(y)?;
        match self.method {
            SigmaMethod::LinearReflection => Ok(AmbientVector::zeros(y.dim())),
            SigmaMethod::GeodesicShooting { .. } => {
                let plus = self.d2_sigma_diag(y, &(*v + *w))?;
                let minus = self.d2_sigma_diag(y, &(*v - *w))?;
                Ok((plus - minus).scale(0.25))
            }
        }
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
    fn equator_reflection_examples() {
        let s = EmbeddedManifold::unit_sphere(3);
        let b = BoundaryData::equator(&s).unwrap();
        assert_eq!(b.sigma(&v3(0.6, 0.0, 0.8)).unwrap(), v3(0.6, 0.0, -0.8));
        assert_eq!(b.sigma(&v3(1.0, 0.0, 0.0)).unwrap(), v3(1.0, 0.0, 0.0));
        let twice = b.sigma(&b.sigma(&v3(0.6, 0.0, 0.8)).unwrap()).unwrap();
        assert_eq!(twice, v3(0.6, 0.0, 0.8));
        let y = v3(1.0, 0.0, 0.0);
        assert_eq!(b.d_sigma(&y, &v3(0.0, 1.0, 0.0)).unwrap(), v3(0.0, 1.0, 0.0));
        assert_eq!(b.d_sigma(&y, &v3(0.0, 0.0, 1.0)).unwrap(), v3(0.0, 0.0, -1.0));
        assert_eq!(
            b.d2_sigma(&y, &v3(0.0, 1.0, 0.0), &v3(0.0, 0.0, 1.0)).unwrap().norm(),
            0.0
        );
        assert_abs_diff_eq!(b.delta0(), std::f64::consts::FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn equator_outside_tube_is_rejected() {
        let s = EmbeddedManifold::unit_sphere(3);
        let b = BoundaryData::equator(&s).unwrap();
        assert!(matches!(
            b.sigma(&v3(0.0, 0.0, 1.0)),
            Err(Error::OutsideTubularNeighborhood { .. })
        ));
    }

    #[test]
    fn numeric_sigma_matches_linear_on_equator() {
        let s = EmbeddedManifold::unit_sphere(3);
        let numeric = BoundaryData::subsphere(
            &s,
            v3(0.0, 0.0, 1.0),
            0.0,
            Some(SigmaMethod::GeodesicShooting { steps: 16 }),
            None,
        )
        .unwrap();
        let y = s.project(&v3(0.7, 0.3, 0.25)).unwrap();
        let exact = v3(y[0], y[1], -y[2]);
        assert!(numeric.sigma(&y).unwrap().distance(&exact) < 1e-7);
    }

    #[test]
    fn latitude_reflection_matches_meridian_angles() {
        // independent closed form: reflect the latitude angle across the circle's latitude
        let s = EmbeddedManifold::unit_sphere(3);
        let c = 0.3_f64;
        let b = BoundaryData::subsphere(&s, v3(0.0, 0.0, 1.0), c, None, None).unwrap();
        let phi_k = c.asin();
        let lon = 0.4_f64;
        let phi = phi_k + 0.2;
        let y = v3(phi.cos() * lon.cos(), phi.cos() * lon.sin(), phi.sin());
        let phi_r = 2.0 * phi_k - phi;
        let expected = v3(phi_r.cos() * lon.cos(), phi_r.cos() * lon.sin(), phi_r.sin());
        let got = b.sigma(&y).unwrap();
        assert!(got.distance(&expected) < 1e-8, "{got:?} vs {expected:?}");
        let back = b.sigma(&got).unwrap();
        assert!(back.distance(&y) < 1e-12);
    }
}
