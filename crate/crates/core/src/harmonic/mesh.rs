//! Compact domains: periodic grids on the flat torus and icospheres.

use std::collections::HashMap;
use std::f64::consts::TAU;

use nalgebra::Vector3;

use crate::error::{GeomError, Result};

/// Which builder produced a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeshSpec {
    TorusGrid { nu: usize, nv: usize },
    Icosphere { level: usize },
}

/// Vertices with symmetric positive edge weights and lumped masses.
///
/// Torus vertices store their parameters `(u, v, 0)`; icosphere vertices
/// store their unit position.
#[derive(Debug, Clone)]
pub struct DomainMesh {
    spec: MeshSpec,
    points: Vec<[f64; 3]>,
    edges: Vec<(usize, usize, f64)>,
    faces: Vec<Vec<usize>>,
    masses: Vec<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl DomainMesh {
    pub fn spec(&self) -> MeshSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.neighbors[v]
    }

    /// Sum of incident edge weights.
    pub fn degree(&self, v: usize) -> f64 {
        self.neighbors[v].iter().map(|(_, w)| w).sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.points.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(u, _) in &self.neighbors[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn assemble(
        spec: MeshSpec,
        points: Vec<[f64; 3]>,
        edges: Vec<(usize, usize, f64)>,
        faces: Vec<Vec<usize>>,
        masses: Vec<f64>,
    ) -> Self {
        let mut neighbors = vec![Vec::new(); points.len()];
        for &(a, b, w) in &edges {
            neighbors[a].push((b, w));
            neighbors[b].push((a, w));
        }
        Self {
            spec,
            points,
            edges,
            faces,
            masses,
            neighbors,
        }
    }
}

pub fn build_domain(spec: MeshSpec) -> Result<DomainMesh> {
    match spec {
        MeshSpec::TorusGrid { nu, nv } => torus_grid(nu, nv),
        MeshSpec::Icosphere { level } => icosphere(level),
    }
}

/// Periodic `nu × nv` grid on `[0, 2π)²` with the flat five-point stencil.
///
/// Edge weights are `h_v/h_u` along `u` and `h_u/h_v` along `v`, masses
/// `h_u·h_v`, so that the weighted sums approximate the flat Dirichlet integral.
pub fn torus_grid(nu: usize, nv: usize) -> Result<DomainMesh> {
    if nu < 8 || nv < 8 {
        return Err(GeomError::Config(format!(
            "torus grid {nu}x{nv}: both sizes must be at least 8"
        )));
    }
    let (hu, hv) = (TAU / nu as f64, TAU / nv as f64);
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut edges = Vec::with_capacity(2 * nu * nv);
    let mut faces = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            points.push([i as f64 * hu, j as f64 * hv, 0.0]);
            edges.push((id(i, j), id(i + 1, j), hv / hu));
            edges.push((id(i, j), id(i, j + 1), hu / hv));
            faces.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let masses = vec![hu * hv; nu * nv];
    Ok(DomainMesh::assemble(
        MeshSpec::TorusGrid { nu, nv },
        points,
        edges,
        faces,
        masses,
    ))
}

fn cot(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.dot(b) / a.cross(b).norm()
}

/// Subdivided icosahedron projected to the unit sphere, with cotangent weights
/// `½(cot α + cot β)` and barycentric lumped masses.
pub fn icosphere(level: usize) -> Result<DomainMesh> {
    if level < 2 {
        return Err(GeomError::Config(format!(
            "icosphere level {level}: must be at least 2"
        )));
    }
    if level > 8 {
        return Err(GeomError::Config(format!(
            "icosphere level {level}: at most 8 supported"
        )));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vector3::from(*p).normalize())
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                verts.push((verts[a] + verts[b]).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }

    let mut weights: HashMap<(usize, usize), f64> = HashMap::new();
    let mut masses = vec![0.0; verts.len()];
    for &[a, b, c] in &tris {
        let (pa, pb, pc) = (verts[a], verts[b], verts[c]);
        let area = 0.5 * (pb - pa).cross(&(pc - pa)).norm();
        for v in [a, b, c] {
            masses[v] += area / 3.0;
        }
        for (i, j, k) in [(a, b, c), (b, c, a), (c, a, b)] {
            let w = 0.5 * cot(&(verts[i] - verts[k]), &(verts[j] - verts[k]));
            *weights.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
        }
    }
    let mut edges: Vec<(usize, usize, f64)> = weights.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    edges.sort_by_key(|e| (e.0, e.1));
    let points = verts.iter().map(|v| [v.x, v.y, v.z]).collect();
    let faces = tris.iter().map(|t| t.to_vec()).collect();
    Ok(DomainMesh::assemble(
        MeshSpec::Icosphere { level },
        points,
        edges,
        faces,
        masses,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn torus_combinatorics() {
        let m = torus_grid(8, 8).unwrap();
        assert_eq!(m.len(), 64);
        assert_eq!(m.edges().len(), 128);
        assert_eq!(m.euler_characteristic(), 0);
        assert!(m.is_connected());
        assert!(m.edges().iter().all(|e| e.2 > 0.0));
        assert!((m.total_mass() - 4.0 * PI * PI).abs() < 1e-12);
        assert!(torus_grid(4, 8).is_err());
    }

    #[test]
    fn icosphere_combinatorics() {
        let m = icosphere(2).unwrap();
        assert_eq!(m.len(), 162);
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.is_connected());
        assert!(icosphere(1).is_err());
    }

    #[test]
    fn icosphere_area() {
        let m = icosphere(4).unwrap();
        assert_eq!(m.len(), 10 * 256 + 2);
        assert!((m.total_mass() / (4.0 * PI) - 1.0).abs() < 0.01);
        assert!(m.edges().iter().all(|e| e.2 > 0.0));
    }
}
