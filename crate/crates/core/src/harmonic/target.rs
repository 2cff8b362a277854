//! Target manifolds isometrically embedded in Euclidean space, and maps into them.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DVector;
use rand::Rng;

use crate::error::{invalid, GeomError, Result};
use crate::sampling::unit_vector;

use super::mesh::{DomainMesh, MeshSpec};

/// Round targets: a unit sphere, or a product of two round spheres of radius `scale`.
///
/// `Grassmann24` is `G⁺_{2,4}` through the Hodge splitting, i.e. `S² × S²`
/// with both factors of radius `1/√2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetManifold {
    Sphere { m: usize },
    SphereProduct { m1: usize, m2: usize, scale: f64 },
    Grassmann24,
}

impl TargetManifold {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TargetManifold::Sphere { m: 0 } => invalid("target sphere must have dimension >= 1"),
            TargetManifold::SphereProduct { m1, m2, scale } => {
                if m1 == 0 || m2 == 0 {
                    invalid("product factors must have dimension >= 1")
                } else if !(scale > 0.0 && scale.is_finite()) {
                    invalid(format!("product scale {scale} must be positive"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Factor slices `(start, len)` with their radius.
    fn factors(&self) -> impl Iterator<Item = (usize, usize, f64)> {
        let pair = match *self {
            TargetManifold::Sphere { m } => [Some((0, m + 1, 1.0)), None],
            TargetManifold::SphereProduct { m1, m2, scale } => {
                [Some((0, m1 + 1, scale)), Some((m1 + 1, m2 + 1, scale))]
            }
            TargetManifold::Grassmann24 => [Some((0, 3, FRAC_1_SQRT_2)), Some((3, 3, FRAC_1_SQRT_2))],
        };
        pair.into_iter().flatten()
    }

    pub fn ambient_dim(&self) -> usize {
        self.factors().map(|f| f.1).sum()
    }

    /// Nearest-point projection: each factor is rescaled to its radius.
    pub fn project(&self, x: &mut [f64]) -> Result<()> {
        for (start, len, r) in self.factors() {
            let f = &mut x[start..start + len];
            let norm = f.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !(norm > 1e-300) || !norm.is_finite() {
                return Err(GeomError::Degenerate("cannot project the zero vector".into()));
            }
            f.iter_mut().for_each(|c| *c *= r / norm);
        }
        Ok(())
    }

    /// Removes the normal components of `v` at `x`.
    pub fn tangent_project(&self, x: &[f64], v: &mut [f64]) {
        for (start, len, r) in self.factors() {
            let xs = &x[start..start + len];
            let vs = &mut v[start..start + len];
            let c = xs.iter().zip(vs.iter()).map(|(a, b)| a * b).sum::<f64>() / (r * r);
            vs.iter_mut().zip(xs).for_each(|(b, a)| *b -= c * a);
        }
    }

    /// Largest deviation of the factor norms from their radii.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.factors()
            .map(|(start, len, r)| {
                let norm = x[start..start + len].iter().map(|c| c * c).sum::<f64>().sqrt();
                (norm - r).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Intrinsic distance: `r·angle` per factor, combined in the product metric.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.factors()
            .map(|(start, len, r)| {
                let (mut dm, mut dp) = (0.0, 0.0);
                for (a, b) in x[start..start + len].iter().zip(&y[start..start + len]) {
                    dm += (a - b) * (a - b);
                    dp += (a + b) * (a + b);
                }
                let d = 2.0 * r * dm.sqrt().atan2(dp.sqrt());
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// A uniformly random point of the target.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.ambient_dim());
        for (_, len, r) in self.factors() {
            out.extend(unit_vector(rng, len).iter().map(|c| c * r));
        }
        out
    }
}

/// One target point per mesh vertex, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMap {
    dim: usize,
    data: Vec<f64>,
}

impl DiscreteMap {
    pub fn new(target: &TargetManifold, values: Vec<Vec<f64>>) -> Result<Self> {
        let dim = target.ambient_dim();
        let mut data = Vec::with_capacity(values.len() * dim);
        for (i, v) in values.iter().enumerate() {
            if v.len() != dim {
                return invalid(format!("value {i} has length {}, expected {dim}", v.len()));
            }
            let r = target.residual(v);
            if !(r <= 1e-9) {
                return invalid(format!("value {i} is off the target by {r:.3e}"));
            }
            data.extend_from_slice(v);
        }
        Ok(Self { dim, data })
    }

    pub(crate) fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        Self { dim, data }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, v: usize) -> &[f64] {
        &self.data[v * self.dim..(v + 1) * self.dim]
    }

    pub fn values(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub(crate) fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn constant(mesh: &DomainMesh, target: &TargetManifold, point: &[f64]) -> Result<Self> {
        Self::new(target, vec![point.to_vec(); mesh.len()])
    }

    /// The inclusion of the icosphere vertices into `S²`.
    pub fn identity(mesh: &DomainMesh) -> Result<Self> {
        if !matches!(mesh.spec(), MeshSpec::Icosphere { .. }) {
            return invalid("identity map needs an icosphere domain");
        }
        Self::new(
            &TargetManifold::Sphere { m: 2 },
            mesh.points().iter().map(|p| p.to_vec()).collect(),
        )
    }

    /// `(u, v) ↦ (cos u, sin u, 0)` on a torus grid.
    pub fn great_circle(mesh: &DomainMesh) -> Result<Self> {
        if !matches!(mesh.spec(), MeshSpec::TorusGrid { .. }) {
            return invalid("great-circle map needs a torus domain");
        }
        Self::new(
            &TargetManifold::Sphere { m: 2 },
            mesh.points()
                .iter()
                .map(|p| vec![p[0].cos(), p[0].sin(), 0.0])
                .collect(),
        )
    }

    /// Independent random values in the geodesic cap `B(center, radius)` of a sphere target.
    pub fn random_cap<R: Rng + ?Sized>(mesh: &DomainMesh, center: &[f64], radius: f64, rng: &mut R) -> Result<Self> {
        let c = DVector::from_column_slice(center);
        if (c.norm() - 1.0).abs() > 1e-9 {
            return invalid("cap center must be a unit vector");
        }
        if !(radius > 0.0 && radius < std::f64::consts::PI) {
            return invalid(format!("cap radius {radius} outside (0, π)"));
        }
        let m = c.len() - 1;
        let target = TargetManifold::Sphere { m };
        let values = (0..mesh.len())
            .map(|_| {
                let mut u = unit_vector(rng, m + 1);
                let d = u.dot(&c);
                u.axpy(-d, &c, 1.0);
                let u = u.normalize();
                let theta = radius * rng.random::<f64>().powf(1.0 / m as f64);
                (c.scale(theta.cos()) + u.scale(theta.sin())).iter().copied().collect()
            })
            .collect();
        Self::new(&target, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::seeded;

    #[test]
    fn projection_lands_on_target() {
        let mut rng = seeded(41);
        for t in [
            TargetManifold::Sphere { m: 3 },
            TargetManifold::SphereProduct {
                m1: 2,
                m2: 1,
                scale: 0.7,
            },
            TargetManifold::Grassmann24,
        ] {
            for _ in 0..100 {
                let mut x: Vec<f64> = crate::sampling::gaussian_vector(&mut rng, t.ambient_dim())
                    .iter()
                    .copied()
                    .collect();
                t.project(&mut x).unwrap();
                assert!(t.residual(&x) < 1e-12);
            }
            let mut zero = vec![0.0; t.ambient_dim()];
            assert!(t.project(&mut zero).is_err());
        }
    }

    #[test]
    fn tangent_projection_is_orthogonal() {
        let mut rng = seeded(42);
        let t = TargetManifold::Grassmann24;
        let x = t.random_point(&mut rng);
        let mut v: Vec<f64> = crate::sampling::gaussian_vector(&mut rng, 6).iter().copied().collect();
        t.tangent_project(&x, &mut v);
        let a: f64 = (0..3).map(|i| x[i] * v[i]).sum();
        let b: f64 = (3..6).map(|i| x[i] * v[i]).sum();
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
    }

    #[test]
    fn grassmann_distance_matches_principal_angles() {
        use crate::exterior::Frame;
        use crate::grassmann::{geodesic_distance, GrassmannPoint};
        use crate::quadric::split_s2xs2;
        let mut rng = seeded(43);
        let t = TargetManifold::Grassmann24;
        for _ in 0..50 {
            let pick = |rng: &mut crate::sampling::SeededRng| {
                let q = crate::sampling::special_orthogonal(rng, 4);
                GrassmannPoint::new(Frame::from_matrix(q.columns(0, 2).into_owned()).unwrap())
            };
            let (w1, w2) = (pick(&mut rng), pick(&mut rng));
            let embed = |w: &GrassmannPoint| {
                let (a, b) = split_s2xs2(w).unwrap();
                a.iter().chain(b.iter()).map(|c| c * FRAC_1_SQRT_2).collect::<Vec<_>>()
            };
            let d = t.distance(&embed(&w1), &embed(&w2));
            assert!((d - geodesic_distance(&w1, &w2).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn cap_values_stay_in_cap() {
        let mesh = super::super::mesh::torus_grid(8, 8).unwrap();
        let mut rng = seeded(44);
        let map = DiscreteMap::random_cap(&mesh, &[1.0, 0.0, 0.0], 0.4, &mut rng).unwrap();
        let t = TargetManifold::Sphere { m: 2 };
        for v in map.values() {
            assert!(t.distance(v, &[1.0, 0.0, 0.0]) <= 0.4 + 1e-12);
        }
    }
}
