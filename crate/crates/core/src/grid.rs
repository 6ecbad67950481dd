//! Discrete domains, the flat unit-area metric family g_{a,b}, finite-difference
//! operators and quadrature.
//!
//! Coordinates: x¹ ∈ [0,1) is always periodic. On the closed torus x² ∈ [0,1) is
//! periodic; on the free-boundary cylinder x² ∈ [0, L] is endpoint-inclusive.

use crate::error::{Error, Result};
use crate::vector::AmbientVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    ClosedTorus,
    FreeBoundaryCylinder,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub n1: usize,
    pub n2: usize,
    /// Length of the x² interval (1 on the torus).
    pub x2_length: f64,
}

impl DomainSpec {
    pub fn torus(n1: usize, n2: usize) -> Result<Self> {
        Self::new(DomainKind::ClosedTorus, n1, n2, 1.0)
    }

    pub fn cylinder(n1: usize, n2: usize) -> Result<Self> {
        Self::new(DomainKind::FreeBoundaryCylinder, n1, n2, 1.0)
    }

    pub fn new(kind: DomainKind, n1: usize, n2: usize, x2_length: f64) -> Result<Self> {
        if n1 < 8 || n2 < 8 {
            return Err(Error::InvalidInput(format!(
                "grid counts must be at least 8, got {n1}x{n2}"
            )));
        }
        if !(x2_length > 0.0) {
            return Err(Error::InvalidInput("x2 length must be positive".into()));
        }
        if kind == DomainKind::ClosedTorus && x2_length != 1.0 {
            return Err(Error::InvalidInput("the torus is the unit square lattice".into()));
        }
        Ok(Self {
            kind,
            n1,
            n2,
            x2_length,
        })
    }

    pub fn is_torus(&self) -> bool {
        self.kind == DomainKind::ClosedTorus
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h1(&self) -> f64 {
        1.0 / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        match self.kind {
            DomainKind::ClosedTorus => 1.0 / self.n2 as f64,
            DomainKind::FreeBoundaryCylinder => self.x2_length / (self.n2 - 1) as f64,
        }
    }

    pub fn x1(&self, i: usize) -> f64 {
        i as f64 * self.h1()
    }

    pub fn x2(&self, j: usize) -> f64 {
        j as f64 * self.h2()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n1 + i
    }

    /// Quadrature weight of a node in row `j`.
    pub fn weight(&self, j: usize) -> f64 {
        let w = self.h1() * self.h2();
        match self.kind {
            DomainKind::FreeBoundaryCylinder if j == 0 || j == self.n2 - 1 => 0.5 * w,
            _ => w,
        }
    }

    pub fn area(&self) -> f64 {
        self.x2_length
    }

    /// True for rows on the cylinder boundary.
    pub fn is_boundary_row(&self, j: usize) -> bool {
        self.kind == DomainKind::FreeBoundaryCylinder && (j == 0 || j == self.n2 - 1)
    }
}

/// The flat metric g_{a,b} = (1/b)[[1, a], [a, a² + b²]], determinant one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatMetric {
    pub a: f64,
    pub b: f64,
}

impl FlatMetric {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!("invalid metric parameters a={a}, b={b}")));
        }
        Ok(Self { a, b })
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (a, b) = (self.a, self.b);
        [[1.0 / b, a / b], [a / b, (a * a + b * b) / b]]
    }

    /// Proxy for the length of the shortest closed geodesic of the unit-area torus.
    pub fn rho(&self) -> f64 {
        let s = self.b.sqrt();
        s.min(1.0 / s)
    }

    pub fn to_theta(&self, x: [f64; 2]) -> [f64; 2] {
        let s = self.b.sqrt();
        [(x[0] + self.a * x[1]) / s, s * x[1]]
    }

    pub fn from_theta(&self, th: [f64; 2]) -> [f64; 2] {
        let s = self.b.sqrt();
        let x2 = th[1] / s;
        [s * th[0] - self.a * x2, x2]
    }
}

/// Inverse metric g^{ij} and the linear map to isothermal coordinates (θ¹, θ²).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricFrame {
    pub inverse: [[f64; 2]; 2],
    pub transform: [[f64; 2]; 2],
}

pub fn metric_inverse_and_coords(g: &FlatMetric, b_min: f64, b_max: f64) -> Result<MetricFrame> {
    if !(g.b > b_min) || !(g.b < b_max) {
        return Err(Error::DegenerateMetric { b: g.b, b_min, b_max });
    }
    let (a, b) = (g.a, g.b);
    let s = b.sqrt();
    Ok(MetricFrame {
        inverse: [[(a * a + b * b) / b, -a / b], [-a / b, 1.0 / b]],
        transform: [[1.0 / s, a / s], [0.0, s]],
    })
}

/// A discrete map from the domain grid into the ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct MapField {
    pub domain: DomainSpec,
    pub values: Vec<AmbientVector>,
    pub manifold_tag: String,
}

impl MapField {
    pub fn from_fn(
        domain: DomainSpec,
        manifold_tag: impl Into<String>,
        mut f: impl FnMut(f64, f64) -> AmbientVector,
    ) -> Self {
        let mut values = Vec::with_capacity(domain.len());
        for j in 0..domain.n2 {
            for i in 0..domain.n1 {
                values.push(f(domain.x1(i), domain.x2(j)));
            }
        }
        Self {
            domain,
            values,
            manifold_tag: manifold_tag.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> AmbientVector {
        self.values[self.domain.index(i, j)]
    }
}

/// Values just outside the cylinder's x²-endpoints (rows j = −1 and j = n2).
#[derive(Clone, Debug, PartialEq)]
pub struct GhostRows {
    pub lower: Vec<AmbientVector>,
    pub upper: Vec<AmbientVector>,
}

impl GhostRows {
    /// Even reflection across the endpoints (plain Neumann closure).
    pub fn even(u: &MapField) -> Self {
        let d = u.domain;
        Self {
            lower: (0..d.n1).map(|i| u.at(i, 1)).collect(),
            upper: (0..d.n1).map(|i| u.at(i, d.n2 - 2)).collect(),
        }
    }
}

struct Neighbors<'a> {
    u: &'a MapField,
    ghosts: Option<&'a GhostRows>,
}

impl Neighbors<'_> {
    #[inline]
    fn get(&self, i: isize, j: isize) -> AmbientVector {
        let d = &self.u.domain;
        let n1 = d.n1 as isize;
        let n2 = d.n2 as isize;
        let ii = i.rem_euclid(n1) as usize;
        match d.kind {
            DomainKind::ClosedTorus => self.u.at(ii, j.rem_euclid(n2) as usize),
            DomainKind::FreeBoundaryCylinder => {
                if j < 0 {
                    self.ghosts.expect("ghost rows").lower[ii]
                } else if j >= n2 {
                    self.ghosts.expect("ghost rows").upper[ii]
                } else {
                    self.u.at(ii, j as usize)
                }
            }
        }
    }
}

/// First derivatives (∂u/∂x¹, ∂u/∂x²) per node: central differences, and one-sided
/// second-order stencils at the cylinder x²-endpoints.
pub fn gradient(u: &MapField) -> Vec<[AmbientVector; 2]> {
    let d = u.domain;
    let nb = Neighbors { u, ghosts: None };
    let (h1, h2) = (d.h1(), d.h2());
    let mut out = Vec::with_capacity(d.len());
    for j in 0..d.n2 {
        for i in 0..d.n1 {
            let (ii, jj) = (i as isize, j as isize);
            let d1 = (nb.get(ii + 1, jj) - nb.get(ii - 1, jj)).scale(0.5 / h1);
            let d2 = if d.kind == DomainKind::FreeBoundaryCylinder && j == 0 {
                (u.at(i, 1).scale(4.0) - u.at(i, 0).scale(3.0) - u.at(i, 2)).scale(0.5 / h2)
            } else if d.kind == DomainKind::FreeBoundaryCylinder && j == d.n2 - 1 {
                (u.at(i, j).scale(3.0) - u.at(i, j - 1).scale(4.0) + u.at(i, j - 2)).scale(0.5 / h2)
            } else {
                (nb.get(ii, jj + 1) - nb.get(ii, jj - 1)).scale(0.5 / h2)
            };
            out.push([d1, d2]);
        }
    }
    out
}

/// Per-node quadratic forms (|u₁|², |u₂|², u₁·u₂) built so that their weighted sums
/// are exactly the edge sums whose variation is the compact Laplacian. The squares
/// average forward and backward differences; the mixed product uses central ones.
pub fn compact_squares(u: &MapField) -> Vec<[f64; 3]> {
    let d = u.domain;
    let nb = Neighbors { u, ghosts: None };
    let (h1, h2) = (d.h1(), d.h2());
    let grad = gradient(u);
    let mut out = Vec::with_capacity(d.len());
    for j in 0..d.n2 {
        for i in 0..d.n1 {
            let (ii, jj) = (i as isize, j as isize);
            let c = u.at(i, j);
            let f1 = (nb.get(ii + 1, jj) - c).norm_sq();
            let b1 = (c - nb.get(ii - 1, jj)).norm_sq();
            let s11 = 0.5 * (f1 + b1) / (h1 * h1);
            let s22 = match d.kind {
                DomainKind::ClosedTorus => {
                    let f2 = (nb.get(ii, jj + 1) - c).norm_sq();
                    let b2 = (c - nb.get(ii, jj - 1)).norm_sq();
                    0.5 * (f2 + b2) / (h2 * h2)
                }
                DomainKind::FreeBoundaryCylinder => {
                    if j == 0 {
                        (u.at(i, 1) - c).norm_sq() / (h2 * h2)
                    } else if j == d.n2 - 1 {
                        (c - u.at(i, j - 1)).norm_sq() / (h2 * h2)
                    } else {
                        let f2 = (u.at(i, j + 1) - c).norm_sq();
                        let b2 = (c - u.at(i, j - 1)).norm_sq();
                        0.5 * (f2 + b2) / (h2 * h2)
                    }
                }
            };
            let g = grad[d.index(i, j)];
            out.push([s11, s22, g[0].dot(&g[1])]);
        }
    }
    out
}

/// The three Dirichlet integrals (∫|u₁|², ∫|u₂|², ∫u₁·u₂) in x-coordinates.
pub fn dirichlet_forms(u: &MapField) -> [f64; 3] {
    let d = u.domain;
    let sq = compact_squares(u);
    let mut acc = [0.0; 3];
    for j in 0..d.n2 {
        let w = d.weight(j);
        for i in 0..d.n1 {
            let s = sq[d.index(i, j)];
            for k in 0..3 {
                acc[k] += w * s[k];
            }
        }
    }
    acc
}

/// Δ_g u = g^{αβ}∂_α∂_β u with the 9-point constant-coefficient stencil. On the
/// cylinder the rows beyond the endpoints come from `ghosts` (even reflection if absent).
pub fn laplace_beltrami(u: &MapField, g: &FlatMetric, ghosts: Option<&GhostRows>) -> Result<Vec<AmbientVector>> {
    let frame = metric_inverse_and_coords(g, 0.0, f64::INFINITY)?;
    let d = u.domain;
    let even;
    let ghosts = match (d.kind, ghosts) {
        (DomainKind::FreeBoundaryCylinder, None) => {
            even = GhostRows::even(u);
            Some(&even)
        }
        (_, gh) => gh,
    };
    let nb = Neighbors { u, ghosts };
    let (h1, h2) = (d.h1(), d.h2());
    let c11 = frame.inverse[0][0] / (h1 * h1);
    let c22 = frame.inverse[1][1] / (h2 * h2);
    let c12 = 2.0 * frame.inverse[0][1] / (4.0 * h1 * h2);
    let mut out = Vec::with_capacity(d.len());
    for j in 0..d.n2 {
        for i in 0..d.n1 {
            let (ii, jj) = (i as isize, j as isize);
            let c = u.at(i, j);
            let l11 = nb.get(ii + 1, jj) + nb.get(ii - 1, jj) - c.scale(2.0);
            let l22 = nb.get(ii, jj + 1) + nb.get(ii, jj - 1) - c.scale(2.0);
            let l12 = nb.get(ii + 1, jj + 1) - nb.get(ii + 1, jj - 1) - nb.get(ii - 1, jj + 1) + nb.get(ii - 1, jj - 1);
            out.push(l11.scale(c11) + l22.scale(c22) + l12.scale(c12));
        }
    }
    Ok(out)
}

/// Composite quadrature of a nodal scalar field: uniform sums in periodic
/// directions, trapezoid across the cylinder's x² interval.
pub fn integrate(values: &[f64], domain: &DomainSpec) -> f64 {
    assert_eq!(values.len(), domain.len(), "field size does not match the domain");
    let mut total = 0.0;
    for j in 0..domain.n2 {
        let w = domain.weight(j);
        let row: f64 = values[j * domain.n1..(j + 1) * domain.n1].iter().sum();
        total += w * row;
    }
    total
}

/// Stable explicit time step for the map update: the per-direction parabolic CFL
/// bound of the constant-coefficient operator, scaled by `safety`.
pub fn stable_dt(domain: &DomainSpec, g: &FlatMetric, safety: f64) -> f64 {
    let inv = [[(g.a * g.a + g.b * g.b) / g.b, -g.a / g.b], [-g.a / g.b, 1.0 / g.b]];
    let (h1, h2) = (domain.h1(), domain.h2());
    let bound = inv[0][0] / (h1 * h1) + inv[1][1] / (h2 * h2) + inv[0][1].abs() / (h1 * h2);
    safety / (2.0 * bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v3(x: f64, y: f64, z: f64) -> AmbientVector {
        AmbientVector::from_slice(&[x, y, z])
    }

    #[test]
    fn metric_frame_examples() {
        let f = metric_inverse_and_coords(&FlatMetric::new(0.0, 1.0).unwrap(), 1e-6, 1e6).unwrap();
        assert_eq!(f.inverse, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(f.transform, [[1.0, 0.0], [0.0, 1.0]]);
        let f = metric_inverse_and_coords(&FlatMetric::new(0.0, 4.0).unwrap(), 1e-6, 1e6).unwrap();
        assert_eq!(f.transform, [[0.5, 0.0], [0.0, 2.0]]);
        let g = FlatMetric::new(0.7, 0.3).unwrap();
        let f = metric_inverse_and_coords(&g, 1e-6, 1e6).unwrap();
        let det = f.inverse[0][0] * f.inverse[1][1] - f.inverse[0][1] * f.inverse[1][0];
        assert!((det - 1.0).abs() < 1e-14);
        assert!(matches!(
            metric_inverse_and_coords(&FlatMetric::new(0.0, 1e-7).unwrap(), 1e-6, 1e6),
            Err(Error::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn transform_pulls_metric_back_to_identity() {
        // Lᵀ L = g for the coordinate map θ = L x
        let g = FlatMetric::new(-0.4, 2.5).unwrap();
        let l = metric_inverse_and_coords(&g, 1e-6, 1e6).unwrap().transform;
        let m = g.matrix();
        for r in 0..2 {
            for c in 0..2 {
                let ltl = l[0][r] * l[0][c] + l[1][r] * l[1][c];
                assert!((ltl - m[r][c]).abs() < 1e-14);
            }
        }
        let x = [0.3, 0.8];
        let back = g.from_theta(g.to_theta(x));
        assert!((back[0] - x[0]).abs() < 1e-15 && (back[1] - x[1]).abs() < 1e-15);
    }

    #[test]
    fn integrate_examples() {
        let t = DomainSpec::torus(16, 12).unwrap();
        assert!((integrate(&vec![1.0; t.len()], &t) - 1.0).abs() < 1e-14);
        let f = MapField::from_fn(t, "", |x1, _| v3((2.0 * PI * x1).sin().powi(2), 0.0, 0.0));
        let vals: Vec<f64> = f.values.iter().map(|v| v[0]).collect();
        assert!((integrate(&vals, &t) - 0.5).abs() < 1e-14);
        let c = DomainSpec::new(DomainKind::FreeBoundaryCylinder, 16, 9, PI).unwrap();
        assert!((integrate(&vec![1.0; c.len()], &c) - PI).abs() < 1e-14);
    }

    #[test]
    fn winding_gradient_magnitude() {
        let t = DomainSpec::torus(64, 8).unwrap();
        let f = MapField::from_fn(t, "", |x1, _| v3((2.0 * PI * x1).cos(), (2.0 * PI * x1).sin(), 0.0));
        let g = gradient(&f);
        let h = t.h1();
        let expected = (2.0 * PI * h).sin() / h;
        for d in &g {
            assert!((d[0].norm() - expected).abs() < 1e-12);
            assert_eq!(d[1].norm(), 0.0);
        }
        assert!((expected - 2.0 * PI).abs() < 4.0 * PI.powi(3) * h * h);
    }

    #[test]
    fn one_sided_stencil_exact_for_quadratics() {
        let c = DomainSpec::cylinder(8, 9).unwrap();
        let f = MapField::from_fn(c, "", |_, x2| v3(x2 * x2, 3.0 * x2, 1.0));
        let g = gradient(&f);
        for j in [0, c.n2 - 1] {
            let x2 = c.x2(j);
            let d = g[c.index(3, j)][1];
            assert!((d[0] - 2.0 * x2).abs() < 1e-12);
            assert!((d[1] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_of_eigenfunction() {
        let mut prev = None;
        for n in [16, 32] {
            let t = DomainSpec::torus(n, n).unwrap();
            let f = MapField::from_fn(t, "", |x1, _| v3((2.0 * PI * x1).sin(), 0.0, 0.0));
            let l = laplace_beltrami(&f, &FlatMetric::new(0.0, 1.0).unwrap(), None).unwrap();
            let err = f
                .values
                .iter()
                .zip(&l)
                .map(|(u, lu)| (lu[0] + 4.0 * PI * PI * u[0]).abs())
                .fold(0.0, f64::max);
            if let Some(p) = prev {
                let ratio: f64 = p / err;
                assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
            }
            prev = Some(err);
        }
    }

    #[test]
    fn laplacian_mixed_term_matches_theta_coordinates() {
        // u = sin(2π(x¹ + x²)) is an eigenfunction of both Δ_g and its stencil; the
        // discrete symbol is known in closed form
        let g = FlatMetric::new(1.0, 1.0).unwrap();
        let inv = metric_inverse_and_coords(&g, 1e-6, 1e6).unwrap().inverse;
        let mut prev = None;
        for n in [32, 64] {
            let t = DomainSpec::torus(n, n).unwrap();
            let h = t.h1();
            let k = 2.0 * PI;
            let symbol = inv[0][0] * 2.0 * (1.0 - (k * h).cos()) / (h * h)
                + inv[1][1] * 2.0 * (1.0 - (k * h).cos()) / (h * h)
                + 2.0 * inv[0][1] * (k * h).sin().powi(2) / (h * h);
            let f = MapField::from_fn(t, "", |x1, x2| v3((k * (x1 + x2)).sin(), 0.0, 0.0));
            let l = laplace_beltrami(&f, &g, None).unwrap();
            let mut err: f64 = 0.0;
            for (u, lu) in f.values.iter().zip(&l) {
                assert!((lu[0] + symbol * u[0]).abs() < 1e-9);
                let exact = k * k * (inv[0][0] + 2.0 * inv[0][1] + inv[1][1]);
                err = err.max((lu[0] + exact * u[0]).abs());
            }
            if let Some(p) = prev {
                let ratio: f64 = p / err;
                assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
            }
            prev = Some(err);
        }
    }

    #[test]
    fn stable_dt_isotropic_reduces_to_quarter_h_squared() {
        let t = DomainSpec::torus(16, 16).unwrap();
        let dt = stable_dt(&t, &FlatMetric::new(0.0, 1.0).unwrap(), 1.0);
        assert!((dt - t.h1() * t.h1() / 4.0).abs() < 1e-15);
    }
}
