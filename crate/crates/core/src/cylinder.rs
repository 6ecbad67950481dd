//! Fields on the standard cylinder [−T, T] × fiber, the chart in which Pohozaev
//! constants, neck curves and window energies are measured.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::vector::AmbientVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fiber {
    /// θ ∈ [0, 2π), periodic.
    Circle,
    /// θ ∈ [0, π], endpoint-inclusive; endpoint rows lie on K.
    Interval,
}

impl Fiber {
    pub fn length(&self) -> f64 {
        match self {
            Fiber::Circle => 2.0 * PI,
            Fiber::Interval => PI,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Fiber::Circle => "circle",
            Fiber::Interval => "interval",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    TypeI,
    TypeII,
    Torus,
    Synthetic,
}

impl Provenance {
    pub fn name(&self) -> &'static str {
        match self {
            Provenance::TypeI => "I",
            Provenance::TypeII => "II",
            Provenance::Torus => "torus",
            Provenance::Synthetic => "synthetic",
        }
    }
}

/// Values on an endpoint-inclusive t-grid of `nt` slices, each slice holding `nth`
/// fiber nodes. Storage is slice-major: `values[k * nth + j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardCylinderField {
    pub t_half: f64,
    pub fiber: Fiber,
    pub provenance: Provenance,
    pub nt: usize,
    pub nth: usize,
    pub values: Vec<AmbientVector>,
}

impl StandardCylinderField {
    pub fn from_fn(
        t_half: f64,
        nt: usize,
        nth: usize,
        fiber: Fiber,
        provenance: Provenance,
        mut f: impl FnMut(f64, f64) -> AmbientVector,
    ) -> Result<Self> {
        let mut field = Self {
            t_half,
            fiber,
            provenance,
            nt,
            nth,
            values: Vec::new(),
        };
        field.validate_shape()?;
        field.values.reserve(nt * nth);
        for k in 0..nt {
            let t = field.t(k);
            for j in 0..nth {
                field.values.push(f(t, field.theta(j)));
            }
        }
        Ok(field)
    }

    pub fn from_values(
        t_half: f64,
        nt: usize,
        nth: usize,
        fiber: Fiber,
        provenance: Provenance,
        values: Vec<AmbientVector>,
    ) -> Result<Self> {
        let field = Self {
            t_half,
            fiber,
            provenance,
            nt,
            nth,
            values,
        };
        field.validate_shape()?;
        if field.values.len() != nt * nth {
            return Err(Error::InvalidInput(format!(
                "expected {} values, got {}",
                nt * nth,
                field.values.len()
            )));
        }
        Ok(field)
    }

    fn validate_shape(&self) -> Result<()> {
        if !(self.t_half > 1.0) || !self.t_half.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cylinder half-length must exceed 1, got {}",
                self.t_half
            )));
        }
        if self.nt < 5 || self.nth < 4 {
            return Err(Error::InvalidInput(format!(
                "cylinder grid too small: {}x{}",
                self.nt, self.nth
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    pub fn ht(&self) -> f64 {
        2.0 * self.t_half / (self.nt - 1) as f64
    }

    pub fn hth(&self) -> f64 {
        match self.fiber {
            Fiber::Circle => 2.0 * PI / self.nth as f64,
            Fiber::Interval => PI / (self.nth - 1) as f64,
        }
    }

    pub fn t(&self, k: usize) -> f64 {
        -self.t_half + k as f64 * self.ht()
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.hth()
    }

    #[inline]
    pub fn at(&self, k: usize, j: usize) -> AmbientVector {
        self.values[k * self.nth + j]
    }

    pub fn slice(&self, k: usize) -> &[AmbientVector] {
        &self.values[k * self.nth..(k + 1) * self.nth]
    }

    /// Fiber quadrature weight of node `j` (uniform for the circle, trapezoid for the interval).
    pub fn fiber_weight(&self, j: usize) -> f64 {
        let h = self.hth();
        match self.fiber {
            Fiber::Interval if j == 0 || j == self.nth - 1 => 0.5 * h,
            _ => h,
        }
    }

    /// Trapezoid weight of slice `k` along t.
    pub fn t_weight(&self, k: usize) -> f64 {
        let h = self.ht();
        if k == 0 || k == self.nt - 1 {
            0.5 * h
        } else {
            h
        }
    }

    /// ∫ over the fiber of a nodal scalar, slice by slice.
    pub fn fiber_integrals(&self, density: &[f64]) -> Vec<f64> {
        (0..self.nt)
            .map(|k| {
                (0..self.nth)
                    .map(|j| self.fiber_weight(j) * density[k * self.nth + j])
                    .sum()
            })
            .collect()
    }

    /// ∫ over the whole cylinder of a nodal scalar.
    pub fn integrate(&self, density: &[f64]) -> f64 {
        self.fiber_integrals(density)
            .iter()
            .enumerate()
            .map(|(k, s)| self.t_weight(k) * s)
            .sum()
    }

    /// ∂_t per node: central differences inside, one-sided second order at t = ±T.
    pub fn d_t(&self) -> Vec<AmbientVector> {
        let h = self.ht();
        let n = self.nt;
        let mut out = Vec::with_capacity(self.values.len());
        for k in 0..n {
            for j in 0..self.nth {
                let d = if k == 0 {
                    self.at(1, j).scale(4.0) - self.at(0, j).scale(3.0) - self.at(2, j)
                } else if k == n - 1 {
                    self.at(k, j).scale(3.0) - self.at(k - 1, j).scale(4.0) + self.at(k - 2, j)
                } else {
                    self.at(k + 1, j) - self.at(k - 1, j)
                };
                out.push(d.scale(0.5 / h));
            }
        }
        out
    }

    /// ∂_θ per node: periodic central differences on the circle, one-sided second
    /// order at the interval endpoints.
    pub fn d_theta(&self) -> Vec<AmbientVector> {
        let h = self.hth();
        let m = self.nth;
        let mut out = Vec::with_capacity(self.values.len());
        for k in 0..self.nt {
            for j in 0..m {
                let d = match self.fiber {
                    Fiber::Circle => self.at(k, (j + 1) % m) - self.at(k, (j + m - 1) % m),
                    Fiber::Interval if j == 0 => self.at(k, 1).scale(4.0) - self.at(k, 0).scale(3.0) - self.at(k, 2),
                    Fiber::Interval if j == m - 1 => {
                        self.at(k, j).scale(3.0) - self.at(k, j - 1).scale(4.0) + self.at(k, j - 2)
                    }
                    Fiber::Interval => self.at(k, j + 1) - self.at(k, j - 1),
                };
                out.push(d.scale(0.5 / h));
            }
        }
        out
    }

    /// v_tt + v_θθ: three-point stencils inside, four-point one-sided ones at
    /// non-periodic edges.
    pub fn laplacian(&self) -> Vec<AmbientVector> {
        let (ht, hth) = (self.ht(), self.hth());
        let (n, m) = (self.nt, self.nth);
        let second =
            |a: AmbientVector, b: AmbientVector, c: AmbientVector, h: f64| (a + c - b.scale(2.0)).scale(1.0 / (h * h));
        let edge = |p0: AmbientVector, p1: AmbientVector, p2: AmbientVector, p3: AmbientVector, h: f64| {
            (p0.scale(2.0) - p1.scale(5.0) + p2.scale(4.0) - p3).scale(1.0 / (h * h))
        };
        let mut out = Vec::with_capacity(self.values.len());
        for k in 0..n {
            for j in 0..m {
                let vtt = if k == 0 {
                    edge(self.at(0, j), self.at(1, j), self.at(2, j), self.at(3, j), ht)
                } else if k == n - 1 {
                    edge(
                        self.at(k, j),
                        self.at(k - 1, j),
                        self.at(k - 2, j),
                        self.at(k - 3, j),
                        ht,
                    )
                } else {
                    second(self.at(k - 1, j), self.at(k, j), self.at(k + 1, j), ht)
                };
                let vqq = match self.fiber {
                    Fiber::Circle => second(self.at(k, (j + m - 1) % m), self.at(k, j), self.at(k, (j + 1) % m), hth),
                    Fiber::Interval if j == 0 => edge(self.at(k, 0), self.at(k, 1), self.at(k, 2), self.at(k, 3), hth),
                    Fiber::Interval if j == m - 1 => edge(
                        self.at(k, j),
                        self.at(k, j - 1),
                        self.at(k, j - 2),
                        self.at(k, j - 3),
                        hth,
                    ),
                    Fiber::Interval => second(self.at(k, j - 1), self.at(k, j), self.at(k, j + 1), hth),
                };
                out.push(vtt + vqq);
            }
        }
        out
    }
}

/// Cumulative trapezoid of equally spaced samples, starting at zero.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Piecewise-linear interpolation of equally spaced samples `ys` (abscissae
/// `x0 + k h`), clamped to the sampled range.
pub fn interpolate_uniform(ys: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = ys.len();
    let s = ((x - x0) / h).clamp(0.0, (n - 1) as f64);
    let k = (s.floor() as usize).min(n - 2);
    let f = s - k as f64;
    ys[k] * (1.0 - f) + ys[k + 1] * f
}
