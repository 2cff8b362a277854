//! Parametrised submanifolds of round spheres, their Gauss maps and region audits.
//!
//! Normals are oriented so that `det(position, tangents, normals) > 0` in the
//! ambient space. For a hypersurface the Gauss map is the unit normal, a point
//! of the same sphere; in codimension two it is the oriented normal plane.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GeomError, Result};
use crate::exterior::{complete_from_standard, gram_schmidt, Frame};
use crate::grassmann::{GrassmannPoint, MainRegion};
use crate::harmonic::{DiscreteMap, DomainMesh, MeshSpec, TargetManifold};
use crate::sphere::{SpherePoint, SphereTubeRegion};

/// Finite-difference step for second derivatives.
pub const FD_STEP: f64 = 1e-4;

/// The verdict when every hypothesis holds.
pub const VERDICT_MET: &str = "hypotheses-met (conclusion: totally geodesic expected)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ImmersionKind {
    /// The great `S^k` in the first `k+1` coordinates of `S^m`.
    Equator { k: usize, m: usize },
    /// `(cos u, sin u, cos v, sin v)/√2` in `S³`.
    CliffordTorus,
    /// `S^p(√(p/(p+q))) × S^q(√(q/(p+q)))` in `S^{p+q+1}`.
    GeneralizedClifford { p: usize, q: usize },
    /// The distance sphere `{(r·y, √(1−r²)) : y ∈ S^k}` in `S^{k+1}`.
    LatitudeSphere { k: usize, radius: f64 },
    /// `inner` composed with the equatorial inclusion into a sphere with `extra` more dimensions.
    Included { inner: Box<ImmersionKind>, extra: usize },
    /// Sampled surface on the periodic grid `2π·(i/nu, j/nv)`, row-major in `i`.
    UserGrid {
        nu: usize,
        nv: usize,
        points: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Param {
    /// Polar angle in `(0, π)`, sampled at cell centres.
    Polar,
    /// Periodic angle in `[0, 2π)`.
    Periodic,
}

fn hyperspherical_params(k: usize) -> Vec<Param> {
    let mut out = vec![Param::Polar; k.saturating_sub(1)];
    out.push(Param::Periodic);
    out
}

/// Point of `S^k` from `k` hyperspherical angles (the last one periodic), or its
/// derivative in angle `diff`.
fn hyperspherical(angles: &[f64], diff: Option<usize>) -> Vec<f64> {
    let k = angles.len();
    let mut out = Vec::with_capacity(k + 1);
    let mut prod = 1.0;
    for (j, &a) in angles.iter().enumerate() {
        let head = if diff == Some(j) { -a.sin() } else { a.cos() };
        out.push(if diff.is_some_and(|l| l < j) || diff == Some(j) || diff.is_none() {
            prod * head
        } else {
            0.0
        });
        prod *= if diff == Some(j) { a.cos() } else { a.sin() };
    }
    out.push(prod);
    if let Some(l) = diff {
        out.iter_mut().take(l).for_each(|c| *c = 0.0);
    }
    out
}

impl ImmersionKind {
    pub fn label(&self) -> String {
        match self {
            ImmersionKind::Equator { k, m } => format!("equator(k={k},m={m})"),
            ImmersionKind::CliffordTorus => "clifford-torus".into(),
            ImmersionKind::GeneralizedClifford { p, q } => format!("generalized-clifford(p={p},q={q})"),
            ImmersionKind::LatitudeSphere { k, radius } => format!("latitude-sphere(k={k},r={radius})"),
            ImmersionKind::Included { inner, extra } => format!("included({},+{extra})", inner.label()),
            ImmersionKind::UserGrid { nu, nv, .. } => format!("user-grid({nu}x{nv})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ImmersionKind::Equator { k, m } if *k == 0 || k >= m => {
                invalid(format!("equator needs 1 <= k < m, got k={k}, m={m}"))
            }
            ImmersionKind::GeneralizedClifford { p, q } if *p == 0 || *q == 0 => {
                invalid("generalized Clifford factors need dimension >= 1")
            }
            ImmersionKind::LatitudeSphere { k, radius } => {
                if *k == 0 {
                    invalid("latitude sphere needs k >= 1")
                } else if !(*radius > 0.0 && *radius <= 1.0) {
                    invalid(format!("latitude radius {radius} outside (0, 1]"))
                } else {
                    Ok(())
                }
            }
            ImmersionKind::Included { inner, .. } => inner.validate(),
            ImmersionKind::UserGrid { nu, nv, points } => {
                if *nu < 4 || *nv < 4 || points.len() != nu * nv {
                    return invalid(format!("user grid needs {nu}x{nv} >= 4x4 points, got {}", points.len()));
                }
                let dim = points[0].len();
                if dim < 3 {
                    return invalid("user grid points need at least 3 coordinates");
                }
                for (i, p) in points.iter().enumerate() {
                    let norm = p.iter().map(|c| c * c).sum::<f64>().sqrt();
                    if p.len() != dim || (norm - 1.0).abs() > 1e-10 {
                        return invalid(format!("user grid point {i} is not a unit vector of length {dim}"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Dimension `k` of the submanifold.
    pub fn dim(&self) -> usize {
        match self {
            ImmersionKind::Equator { k, .. } => *k,
            ImmersionKind::CliffordTorus => 2,
            ImmersionKind::GeneralizedClifford { p, q } => p + q,
            ImmersionKind::LatitudeSphere { k, .. } => *k,
            ImmersionKind::Included { inner, .. } => inner.dim(),
            ImmersionKind::UserGrid { .. } => 2,
        }
    }

    /// Ambient dimension `m + 1` of the sphere `S^m`.
    pub fn ambient_dim(&self) -> usize {
        match self {
            ImmersionKind::Equator { m, .. } => m + 1,
            ImmersionKind::CliffordTorus => 4,
            ImmersionKind::GeneralizedClifford { p, q } => p + q + 2,
            ImmersionKind::LatitudeSphere { k, .. } => k + 2,
            ImmersionKind::Included { inner, extra } => inner.ambient_dim() + extra,
            ImmersionKind::UserGrid { points, .. } => points[0].len(),
        }
    }

    /// Codimension inside the sphere.
    pub fn codim(&self) -> usize {
        self.ambient_dim() - 1 - self.dim()
    }

    fn params(&self) -> Vec<Param> {
        match self {
            ImmersionKind::Equator { k, .. } | ImmersionKind::LatitudeSphere { k, .. } => hyperspherical_params(*k),
            ImmersionKind::CliffordTorus | ImmersionKind::UserGrid { .. } => vec![Param::Periodic; 2],
            ImmersionKind::GeneralizedClifford { p, q } => {
                let mut out = hyperspherical_params(*p);
                out.extend(hyperspherical_params(*q));
                out
            }
            ImmersionKind::Included { inner, .. } => inner.params(),
        }
    }

    /// Sample grid: `n` points per parameter, polar angles at cell centres.
    pub fn grid(&self, n: usize) -> Vec<Vec<f64>> {
        if let ImmersionKind::UserGrid { nu, nv, .. } = self {
            return (0..nu * nv)
                .map(|idx| {
                    vec![
                        TAU * (idx / nv) as f64 / *nu as f64,
                        TAU * (idx % nv) as f64 / *nv as f64,
                    ]
                })
                .collect();
        }
        let axes: Vec<Vec<f64>> = self
            .params()
            .iter()
            .map(|p| match p {
                Param::Polar => (0..n).map(|i| PI * (i as f64 + 0.5) / n as f64).collect(),
                Param::Periodic => (0..n).map(|i| TAU * i as f64 / n as f64).collect(),
            })
            .collect();
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|head| {
                    axis.iter().map(move |&a| {
                        let mut h = head.clone();
                        h.push(a);
                        h
                    })
                })
                .collect();
        }
        out
    }

    /// Sample counts per parameter for a grid of resolution `n`.
    pub fn grid_shape(&self, n: usize) -> Vec<usize> {
        match self {
            ImmersionKind::UserGrid { nu, nv, .. } => vec![*nu, *nv],
            _ => vec![n; self.dim()],
        }
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.dim() {
            return invalid(format!("expected {} parameters, got {}", self.dim(), params.len()));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return invalid("non-finite parameter");
        }
        Ok(())
    }

    fn user_node(&self, params: &[f64]) -> Result<(usize, usize)> {
        let ImmersionKind::UserGrid { nu, nv, .. } = self else {
            unreachable!("only called for user grids")
        };
        let fu = params[0].rem_euclid(TAU) / TAU * *nu as f64;
        let fv = params[1].rem_euclid(TAU) / TAU * *nv as f64;
        let (iu, iv) = (fu.round(), fv.round());
        if (fu - iu).abs() > 1e-9 || (fv - iv).abs() > 1e-9 {
            return invalid("user grids are only evaluated at their nodes");
        }
        Ok((iu as usize % nu, iv as usize % nv))
    }

    pub fn position(&self, params: &[f64]) -> Result<DVector<f64>> {
        self.check_params(params)?;
        if matches!(self, ImmersionKind::UserGrid { .. }) {
            self.user_node(params)?;
        }
        Ok(self.position_unchecked(params))
    }

    fn position_unchecked(&self, params: &[f64]) -> DVector<f64> {
        match self {
            ImmersionKind::Equator { m, .. } => {
                let mut x = hyperspherical(params, None);
                x.resize(m + 1, 0.0);
                DVector::from_vec(x)
            }
            ImmersionKind::CliffordTorus => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let (u, v) = (params[0], params[1]);
                DVector::from_vec(vec![s * u.cos(), s * u.sin(), s * v.cos(), s * v.sin()])
            }
            ImmersionKind::GeneralizedClifford { p, q } => {
                let (r1, r2) = clifford_radii(*p, *q);
                let a = hyperspherical(&params[..*p], None);
                let b = hyperspherical(&params[*p..], None);
                DVector::from_iterator(p + q + 2, a.iter().map(|c| r1 * c).chain(b.iter().map(|c| r2 * c)))
            }
            ImmersionKind::LatitudeSphere { k, radius } => {
                let y = hyperspherical(params, None);
                let mut x: Vec<f64> = y.iter().map(|c| radius * c).collect();
                x.push((1.0 - radius * radius).max(0.0).sqrt());
                debug_assert_eq!(x.len(), k + 2);
                DVector::from_vec(x)
            }
            ImmersionKind::Included { inner, extra } => {
                let x = inner.position_unchecked(params);
                let n = x.len();
                DVector::from_fn(n + extra, |i, _| if i < n { x[i] } else { 0.0 })
            }
            ImmersionKind::UserGrid { nv, points, .. } => {
                let (i, j) = self.user_node(params).expect("node parameters");
                DVector::from_column_slice(&points[i * nv + j])
            }
        }
    }

    /// Partial derivatives of the position, one per parameter.
    pub fn tangents(&self, params: &[f64]) -> Result<Vec<DVector<f64>>> {
        self.check_params(params)?;
        if let ImmersionKind::UserGrid { nu, nv, points } = self {
            let (i, j) = self.user_node(params)?;
            let at = |a: usize, b: usize| DVector::from_column_slice(&points[(a % nu) * nv + (b % nv)]);
            let (hu, hv) = (TAU / *nu as f64, TAU / *nv as f64);
            return Ok(vec![
                (at(i + 1, j) - at(i + nu - 1, j)) / (2.0 * hu),
                (at(i, j + 1) - at(i, j + nv - 1)) / (2.0 * hv),
            ]);
        }
        Ok((0..self.dim()).map(|l| self.tangent_unchecked(params, l)).collect())
    }

    fn tangent_unchecked(&self, params: &[f64], l: usize) -> DVector<f64> {
        match self {
            ImmersionKind::Equator { m, .. } => {
                let mut x = hyperspherical(params, Some(l));
                x.resize(m + 1, 0.0);
                DVector::from_vec(x)
            }
            ImmersionKind::CliffordTorus => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let (u, v) = (params[0], params[1]);
                if l == 0 {
                    DVector::from_vec(vec![-s * u.sin(), s * u.cos(), 0.0, 0.0])
                } else {
                    DVector::from_vec(vec![0.0, 0.0, -s * v.sin(), s * v.cos()])
                }
            }
            ImmersionKind::GeneralizedClifford { p, q } => {
                let (r1, r2) = clifford_radii(*p, *q);
                let (a, b) = if l < *p {
                    (
                        hyperspherical(&params[..*p], Some(l))
                            .iter()
                            .map(|c| r1 * c)
                            .collect::<Vec<_>>(),
                        vec![0.0; q + 1],
                    )
                } else {
                    (
                        vec![0.0; p + 1],
                        hyperspherical(&params[*p..], Some(l - p))
                            .iter()
                            .map(|c| r2 * c)
                            .collect(),
                    )
                };
                DVector::from_iterator(p + q + 2, a.into_iter().chain(b))
            }
            ImmersionKind::LatitudeSphere { radius, .. } => {
                let mut x: Vec<f64> = hyperspherical(params, Some(l)).iter().map(|c| radius * c).collect();
                x.push(0.0);
                DVector::from_vec(x)
            }
            ImmersionKind::Included { inner, extra } => {
                let t = inner.tangent_unchecked(params, l);
                let n = t.len();
                DVector::from_fn(n + extra, |i, _| if i < n { t[i] } else { 0.0 })
            }
            ImmersionKind::UserGrid { .. } => unreachable!("handled in tangents"),
        }
    }

    /// Oriented orthonormal basis of the normal space of `M` inside `T S^m`.
    pub fn normal_frame(&self, params: &[f64]) -> Result<Vec<DVector<f64>>> {
        let x = self.position(params)?;
        let tangents = self.tangents(params)?;
        let mut span = vec![x];
        span.extend(tangents);
        let basis = gram_schmidt(&span).map_err(|_| GeomError::ImmersionDegeneracy(params.to_vec()))?;
        let mut normals = complete_from_standard(&basis.vectors(), self.ambient_dim());
        let mut cols = span;
        cols.extend(normals.iter().cloned());
        if DMatrix::from_columns(&cols).determinant() < 0.0 {
            normals[0].neg_mut();
        }
        Ok(normals)
    }
}

fn clifford_radii(p: usize, q: usize) -> (f64, f64) {
    let s = (p + q) as f64;
    ((p as f64 / s).sqrt(), (q as f64 / s).sqrt())
}

/// A submanifold together with the resolution of its sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricImmersion {
    pub kind: ImmersionKind,
    pub resolution: usize,
}

impl ParametricImmersion {
    pub fn new(kind: ImmersionKind, resolution: usize) -> Result<Self> {
        kind.validate()?;
        if resolution < 2 {
            return invalid("grid resolution must be at least 2");
        }
        Ok(Self { kind, resolution })
    }

    pub fn grid(&self) -> Vec<Vec<f64>> {
        self.kind.grid(self.resolution)
    }

    pub fn grid_shape(&self) -> Vec<usize> {
        self.kind.grid_shape(self.resolution)
    }
}

/// Unit normal of a hypersurface of `S^m`, as a point of `S^m`.
pub fn hypersurface_gauss(kind: &ImmersionKind, params: &[f64]) -> Result<SpherePoint> {
    if kind.codim() != 1 {
        return invalid(format!(
            "hypersurface Gauss map needs codimension 1, got {}",
            kind.codim()
        ));
    }
    SpherePoint::new(kind.normal_frame(params)?.remove(0))
}

/// Oriented normal plane of a codimension-two submanifold of `S^m`, in `G⁺_{2,m+1}`.
pub fn normal_plane_gauss(kind: &ImmersionKind, params: &[f64]) -> Result<GrassmannPoint> {
    if kind.codim() != 2 {
        return invalid(format!(
            "normal-plane Gauss map needs codimension 2, got {}",
            kind.codim()
        ));
    }
    Ok(GrassmannPoint::new(Frame::new(&kind.normal_frame(params)?)?))
}

/// `|H| = |tr II| / k` from differences of the tangent fields.
pub fn mean_curvature_norm(kind: &ImmersionKind, params: &[f64]) -> Result<f64> {
    let x = kind.position(params)?;
    let tangents = kind.tangents(params)?;
    let k = kind.dim();
    let g = DMatrix::from_fn(k, k, |i, j| tangents[i].dot(&tangents[j]));
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::ImmersionDegeneracy(params.to_vec()))?;
    let steps = match kind {
        ImmersionKind::UserGrid { nu, nv, .. } => vec![TAU / *nu as f64, TAU / *nv as f64],
        _ => vec![FD_STEP; k],
    };
    let mut trace = DVector::zeros(x.len());
    for j in 0..k {
        let mut plus = params.to_vec();
        let mut minus = params.to_vec();
        plus[j] += steps[j];
        minus[j] -= steps[j];
        let tp = kind.tangents(&plus)?;
        let tm = kind.tangents(&minus)?;
        for i in 0..k {
            let second = (&tp[i] - &tm[i]) / (2.0 * steps[j]);
            trace += second * g_inv[(i, j)];
        }
    }
    // keep only the part normal to M inside the sphere
    let mut span = vec![x];
    span.extend(tangents);
    let basis = gram_schmidt(&span).map_err(|_| GeomError::ImmersionDegeneracy(params.to_vec()))?;
    for b in basis.vectors() {
        let c = b.dot(&trace);
        trace.axpy(-c, &b, 1.0);
    }
    Ok(trace.norm() / k as f64)
}

/// Hypersurface Gauss map of a doubly periodic surface sampled on a torus grid.
pub fn gauss_map_on_torus(kind: &ImmersionKind, mesh: &DomainMesh) -> Result<(DiscreteMap, TargetManifold)> {
    let MeshSpec::TorusGrid { nu, nv } = mesh.spec() else {
        return invalid("Gauss maps are sampled on torus grids");
    };
    if kind.params() != vec![Param::Periodic; 2] {
        return invalid(format!("{} is not parametrised by a torus", kind.label()));
    }
    if let ImmersionKind::UserGrid { nu: gu, nv: gv, .. } = kind {
        if (*gu, *gv) != (nu, nv) {
            return invalid("user grid and mesh sizes differ");
        }
    }
    let target = TargetManifold::Sphere {
        m: kind.ambient_dim() - 1,
    };
    let values = mesh
        .points()
        .par_iter()
        .map(|p| hypersurface_gauss(kind, &[p[0], p[1]]).map(|s| s.coords().iter().copied().collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok((DiscreteMap::new(&target, values)?, target))
}

/// The barrier region a Gauss image is audited against.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum AuditRegion {
    /// Hypersurfaces: the unit normal must avoid the thickened barrier subsphere.
    Sphere(SphereTubeRegion),
    /// Codimension two: the normal plane must lie in the swept Grassmannian region.
    Grassmann(MainRegion),
}

impl AuditRegion {
    pub fn epsilon(&self) -> f64 {
        match self {
            AuditRegion::Sphere(r) => r.epsilon(),
            AuditRegion::Grassmann(r) => r.epsilon(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussAudit {
    pub kind: String,
    pub grid: Vec<usize>,
    pub epsilon: f64,
    pub min_margin: f64,
    pub worst_point: Vec<f64>,
    pub h1_zero_asserted: bool,
    pub verdict: String,
}

/// Signed margin of the Gauss image at one parameter point.
pub fn audit_margin(kind: &ImmersionKind, region: &AuditRegion, params: &[f64]) -> Result<f64> {
    match region {
        AuditRegion::Sphere(r) => {
            if r.ambient_dim() != kind.ambient_dim() {
                return invalid("region and Gauss target have different dimensions");
            }
            Ok(r.signed_margin(&hypersurface_gauss(kind, params)?))
        }
        AuditRegion::Grassmann(r) => {
            let base = r.direction().base();
            if base.p() != 2 || base.n() != kind.ambient_dim() {
                return invalid("region and Gauss target have different dimensions");
            }
            r.margin(&normal_plane_gauss(kind, params)?)
        }
    }
}

/// Evaluates the Gauss map on the sample grid and reports the smallest margin.
pub fn gauss_image_audit(
    imm: &ParametricImmersion,
    region: &AuditRegion,
    h1_zero_asserted: bool,
) -> Result<GaussAudit> {
    let grid = imm.grid();
    let margins = grid
        .par_iter()
        .map(|p| audit_margin(&imm.kind, region, p))
        .collect::<Result<Vec<f64>>>()?;
    let (worst, min_margin) = margins
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| GeomError::InvalidInput("empty grid".into()))?;
    let mut failed = Vec::new();
    if !(min_margin > 0.0) {
        failed.push("gauss-image (min_margin <= 0)");
    }
    if !h1_zero_asserted {
        failed.push("topology (H1(M)=0 not asserted)");
    }
    let verdict = if failed.is_empty() {
        VERDICT_MET.to_string()
    } else {
        format!("hypotheses-failed: {}", failed.join("; "))
    };
    Ok(GaussAudit {
        kind: imm.kind.label(),
        grid: imm.grid_shape(),
        epsilon: region.epsilon(),
        min_margin,
        worst_point: grid[worst].clone(),
        h1_zero_asserted,
        verdict,
    })
}
