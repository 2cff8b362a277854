//! Round-sphere geometry and the tube barrier regions on `S^m`.
//!
//! A [`SphereTubeRegion`] is the complement of the closed `ε`-thickening of the
//! codimension-two great subsphere orthogonal to a great circle `Γ`. The same
//! set is swept out by the leaves `∂B(Γ(t), π/2 − ε)`, one for each `t` on the
//! circle; [`tube_region_contains`] uses the closed form and
//! [`sweepout_leaf_find`] uses the leaves.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{invalid, GeomError, Result};
use crate::exterior::{complete_from_standard, FRAME_TOL};
use crate::graph::UnionFind;
use crate::sampling::{seeded, unit_vector};

/// Half-width of the band around a region boundary where membership is not asserted.
pub const BOUNDARY_BAND: f64 = 1e-6;

/// Convexity radius of every round sphere.
pub const SPHERE_CONVEXITY_RADIUS: f64 = FRAC_PI_2;

/// A point of the unit sphere `S^m ⊂ R^{m+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint(DVector<f64>);

impl SpherePoint {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.is_empty() {
            return invalid("empty sphere point");
        }
        let norm = coords.norm();
        if !((norm - 1.0).abs() <= FRAME_TOL) {
            return invalid(format!("sphere point has norm {norm}"));
        }
        Ok(Self(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    /// Radial projection of a nonzero vector.
    pub fn normalize(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return invalid("cannot normalise a zero vector");
        }
        Ok(Self(v / norm))
    }

    /// `e_i` in `R^{ambient}`.
    pub fn basis(ambient: usize, i: usize) -> Self {
        let mut v = DVector::zeros(ambient);
        v[i] = 1.0;
        Self(v)
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    /// Ambient dimension `m + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.0.len()
    }

    pub fn antipode(&self) -> Self {
        Self(-&self.0)
    }
}

fn check_orthonormal(vectors: &[DVector<f64>], what: &str) -> Result<()> {
    for (i, a) in vectors.iter().enumerate() {
        if (a.norm() - 1.0).abs() > FRAME_TOL {
            return invalid(format!("{what}: vector {i} is not unit"));
        }
        for (j, b) in vectors.iter().enumerate().skip(i + 1) {
            if a.dot(b).abs() > FRAME_TOL {
                return invalid(format!("{what}: vectors {i} and {j} are not orthogonal"));
            }
        }
    }
    Ok(())
}

/// Orthonormal normals `z₀..z_α` cutting out the great subsphere
/// `{a : ⟨z_i, a⟩ = 0 for all i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsphereFlag {
    ambient: usize,
    normals: Vec<DVector<f64>>,
}

impl SubsphereFlag {
    pub fn new(ambient: usize, normals: Vec<DVector<f64>>) -> Result<Self> {
        if normals.iter().any(|z| z.len() != ambient) {
            return invalid("flag normal has the wrong dimension");
        }
        if normals.len() > ambient {
            return invalid("more flag normals than ambient dimensions");
        }
        check_orthonormal(&normals, "subsphere flag")?;
        Ok(Self { ambient, normals })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn normals(&self) -> &[DVector<f64>] {
        &self.normals
    }

    /// `(|Px|, |x − Px|)` for `P` the projection onto the normal span.
    pub fn split_norms(&self, x: &DVector<f64>) -> (f64, f64) {
        let mut proj = DVector::zeros(x.len());
        for z in &self.normals {
            proj.axpy(z.dot(x), z, 1.0);
        }
        let rest = x - &proj;
        (proj.norm(), rest.norm())
    }
}

/// The great circle `Γ(t) = cos(t)·x̄ + sin(t)·V`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreatCircle {
    base: SpherePoint,
    direction: DVector<f64>,
}

impl GreatCircle {
    pub fn new(base: SpherePoint, direction: DVector<f64>) -> Result<Self> {
        if direction.len() != base.ambient_dim() {
            return invalid("circle direction has the wrong dimension");
        }
        check_orthonormal(&[base.0.clone(), direction.clone()], "great circle")?;
        Ok(Self { base, direction })
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn direction(&self) -> &DVector<f64> {
        &self.direction
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.ambient_dim()
    }

    pub fn point(&self, t: f64) -> SpherePoint {
        circle_point(self, t)
    }

    pub fn velocity(&self, t: f64) -> DVector<f64> {
        let (s, c) = t.sin_cos();
        self.base.0.scale(-s) + self.direction.scale(c)
    }

    /// The flag `{x̄, V}` whose subsphere is the barrier of the tube region.
    pub fn barrier_flag(&self) -> SubsphereFlag {
        SubsphereFlag {
            ambient: self.ambient_dim(),
            normals: vec![self.base.0.clone(), self.direction.clone()],
        }
    }
}

/// `S^m ∖ (S^{m−2})_ε` for the barrier subsphere orthogonal to a great circle.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereTubeRegion {
    circle: GreatCircle,
    epsilon: f64,
}

impl SphereTubeRegion {
    pub fn new(circle: GreatCircle, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < FRAC_PI_2) {
            return invalid(format!("epsilon {epsilon} outside (0, π/2)"));
        }
        Ok(Self { circle, epsilon })
    }

    pub fn circle(&self) -> &GreatCircle {
        &self.circle
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn ambient_dim(&self) -> usize {
        self.circle.ambient_dim()
    }

    /// Radius of the sweeping balls, `π/2 − ε`; strictly below the convexity radius.
    pub fn ball_radius(&self) -> f64 {
        FRAC_PI_2 - self.epsilon
    }

    pub fn barrier_flag(&self) -> SubsphereFlag {
        self.circle.barrier_flag()
    }

    /// Distance to the barrier minus `ε`: positive inside, negative in the thickening.
    pub fn signed_margin(&self, x: &SpherePoint) -> f64 {
        let (p, q) = self.barrier_flag().split_norms(&x.0);
        p.atan2(q) - self.epsilon
    }

    /// Uniform point on the leaf `∂B(Γ(t), π/2 − ε)`.
    pub fn leaf_point<R: rand::Rng + ?Sized>(&self, t: f64, rng: &mut R) -> SpherePoint {
        let center = self.circle.point(t).0;
        let mut u = unit_vector(rng, self.ambient_dim());
        let c = u.dot(&center);
        u.axpy(-c, &center, 1.0);
        let u = u.normalize();
        let r = self.ball_radius();
        SpherePoint(center.scale(r.cos()) + u.scale(r.sin()))
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return invalid(format!("ambient dimensions differ: {a} vs {b}"));
    }
    Ok(())
}

/// Great-circle distance, in `[0, π]`.
pub fn sphere_distance(x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    check_dims(x.ambient_dim(), y.ambient_dim())?;
    Ok(chord_angle(&x.0, &y.0))
}

/// Angle between unit vectors via `2·atan2(|x−y|, |x+y|)`, accurate near 0 and π.
pub(crate) fn chord_angle(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let (mut dm, mut dp) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y.iter()) {
        dm += (a - b) * (a - b);
        dp += (a + b) * (a + b);
    }
    2.0 * dm.sqrt().atan2(dp.sqrt())
}

pub fn circle_point(c: &GreatCircle, t: f64) -> SpherePoint {
    let (s, co) = t.sin_cos();
    SpherePoint(c.base.0.scale(co) + c.direction.scale(s))
}

/// Distance from `x` to the great subsphere cut out by `f`, in `[0, π/2]`.
pub fn subsphere_distance(x: &SpherePoint, f: &SubsphereFlag) -> Result<f64> {
    check_dims(x.ambient_dim(), f.ambient_dim())?;
    let (p, q) = f.split_norms(&x.0);
    Ok(p.atan2(q))
}

/// Closed-form membership: distance to the barrier subsphere at least `ε`.
pub fn tube_region_contains(r: &SphereTubeRegion, x: &SpherePoint) -> bool {
    r.signed_margin(x) >= -1e-12
}

const LEAF_GRID: usize = 4096;
const LEAF_TOL: f64 = 1e-9;

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Refines a grid extremum of a periodic function; returns `(t, f(t))`.
pub(crate) fn refine_extremum<F: Fn(f64) -> f64>(
    f: &F,
    grid: &[f64],
    step: f64,
    maximize: bool,
    tol: f64,
) -> (f64, f64) {
    let sign = if maximize { -1.0 } else { 1.0 };
    let (k, _) = grid
        .iter()
        .enumerate()
        .min_by(|a, b| (sign * a.1).total_cmp(&(sign * b.1)))
        .expect("non-empty grid");
    let t0 = k as f64 * step;
    let t = golden_section(|t| sign * f(t), t0 - step, t0 + step, tol);
    let (ft, f0) = (f(t), grid[k]);
    if sign * ft <= sign * f0 {
        (t, ft)
    } else {
        (t0, f0)
    }
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) <= 0 <= f(hi), not necessarily lo < hi
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// All `t ∈ [0, 2π)` whose leaf `∂B(Γ(t), π/2 − ε)` passes through `x`.
///
/// The distance `t ↦ d(x, Γ(t))` is monotone between its minimum and maximum,
/// so each of the two arcs holds at most one root. Empty exactly when `x` lies
/// in the barrier thickening.
pub fn sweepout_leaf_find(r: &SphereTubeRegion, x: &SpherePoint) -> Vec<f64> {
    let radius = r.ball_radius();
    let g = |t: f64| chord_angle(&x.0, &r.circle.point(t).0) - radius;
    let step = TAU / LEAF_GRID as f64;
    let grid: Vec<f64> = (0..LEAF_GRID).map(|k| g(k as f64 * step)).collect();
    let (t_min, g_min) = refine_extremum(&g, &grid, step, false, 1e-12);
    let (mut t_max, g_max) = refine_extremum(&g, &grid, step, true, 1e-12);

    let mut roots = Vec::new();
    if g_min > LEAF_TOL || g_max < -LEAF_TOL {
        return roots;
    }
    if g_min > 0.0 {
        roots.push(t_min.rem_euclid(TAU));
        return roots;
    }
    while t_max < t_min {
        t_max += TAU;
    }
    while t_max > t_min + TAU {
        t_max -= TAU;
    }
    // increasing arc t_min → t_max, decreasing arc t_max → t_min + 2π
    for (lo, hi) in [(t_min, t_max), (t_min + TAU, t_max)] {
        let t = bisect(&g, lo, hi);
        if g(t).abs() <= LEAF_TOL {
            roots.push(t.rem_euclid(TAU));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    roots
}

/// Region for a flag `x₁..x_{k−1}` and a point `x₀` orthogonal to it: the circle
/// through `x̄` with `Γ(π/2) = x₀` and `Γ(t) ⊥ x_i` for every `t`.
///
/// `x̄` is the first standard basis vector with a nonzero residual after
/// projecting off `span{x₀, x₁, …}`, so the result depends only on that span.
pub fn build_maximal_set_region(
    interior_flag: &SubsphereFlag,
    x0: &SpherePoint,
    epsilon: f64,
) -> Result<SphereTubeRegion> {
    let n = x0.ambient_dim();
    check_dims(n, interior_flag.ambient_dim())?;
    for (i, z) in interior_flag.normals().iter().enumerate() {
        if z.dot(&x0.0).abs() > FRAME_TOL {
            return invalid(format!("x0 is not orthogonal to flag normal {i}"));
        }
    }
    let mut span = vec![x0.0.clone()];
    span.extend(interior_flag.normals().iter().cloned());
    let completion = complete_from_standard(&span, n);
    let base = completion
        .into_iter()
        .next()
        .ok_or(GeomError::DegenerateFlag(span.len()))?;
    let circle = GreatCircle::new(SpherePoint(base), x0.0.clone())?;
    SphereTubeRegion::new(circle, epsilon)
}

/// Tunables of [`region_disconnection_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisconnectionParams {
    /// Neighbours per point in the kNN graph.
    pub neighbors: usize,
    /// Edge cutoff as a multiple of the expected sample spacing.
    pub cutoff_factor: f64,
    /// Points within this distance of the removed leaf are dropped.
    pub leaf_band: f64,
    /// Interior samples per edge when testing that an edge avoids the leaf.
    pub segment_checks: usize,
    pub min_surviving: usize,
    /// Components holding fewer than this fraction of the kept points count as
    /// sampling fragments rather than components.
    pub min_component_fraction: f64,
}

impl Default for DisconnectionParams {
    fn default() -> Self {
        Self {
            neighbors: 12,
            cutoff_factor: 3.0,
            leaf_band: 1e-2,
            segment_checks: 8,
            min_surviving: 100,
            min_component_fraction: 5e-3,
        }
    }
}

/// Volume of the unit sphere `S^m`.
pub fn sphere_volume(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => TAU,
        _ => TAU / (m as f64 - 1.0) * sphere_volume(m - 2),
    }
}

/// Outcome of a connectivity experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Connectivity {
    pub components: usize,
    /// Sizes of the counted components, largest first.
    pub component_sizes: Vec<usize>,
    /// Points in pieces below the size threshold.
    pub fragments: usize,
    pub kept: usize,
    pub draws: usize,
    pub cutoff: f64,
}

/// Counts connected components of the sampled region, optionally with the leaf
/// `∂B(Γ(t0), π/2 − ε)` removed.
///
/// Samples are uniform on `S^m` (rejection into the region). An edge joins two
/// kNN neighbours closer than the cutoff whose connecting arc neither enters
/// the leaf band nor changes side of the leaf.
pub fn region_disconnection_check(
    r: &SphereTubeRegion,
    t0: Option<f64>,
    samples: usize,
    seed: u64,
    params: &DisconnectionParams,
) -> Result<Connectivity> {
    if samples < 1000 {
        return invalid(format!("need at least 1000 samples, got {samples}"));
    }
    let ambient = r.ambient_dim();
    let m = ambient - 1;
    let mut rng = seeded(seed);
    let mut points = Vec::with_capacity(samples);
    let mut draws = 0usize;
    while points.len() < samples {
        draws += 1;
        if draws > 1000 * samples {
            return Err(GeomError::InsufficientSampling {
                kept: points.len(),
                needed: samples,
            });
        }
        let x = SpherePoint(unit_vector(&mut rng, ambient));
        if tube_region_contains(r, &x) {
            points.push(x.0);
        }
    }

    let radius = r.ball_radius();
    let center = t0.map(|t| r.circle.point(t).0);
    let side = |x: &DVector<f64>| -> Option<f64> { center.as_ref().map(|c| chord_angle(x, c) - radius) };
    if center.is_some() {
        points.retain(|x| side(x).is_some_and(|s| s.abs() >= params.leaf_band));
    }
    if points.len() < params.min_surviving {
        return Err(GeomError::InsufficientSampling {
            kept: points.len(),
            needed: params.min_surviving,
        });
    }

    let spacing = (sphere_volume(m) / draws as f64).powf(1.0 / m as f64);
    let cutoff = params.cutoff_factor * spacing;
    // chordal threshold equivalent to the geodesic cutoff
    let chord_cut = 2.0 * (0.5 * cutoff.min(PI)).sin();

    let admissible = |a: &DVector<f64>, b: &DVector<f64>| -> bool {
        let Some(sa) = side(a) else { return true };
        let sb = side(b).unwrap_or(sa);
        if sa.signum() != sb.signum() {
            return false;
        }
        let steps = params.segment_checks + 1;
        (1..steps).all(|s| {
            let lam = s as f64 / steps as f64;
            let mid = (a.scale(1.0 - lam) + b.scale(lam)).normalize();
            side(&mid).is_some_and(|v| v.signum() == sa.signum() && v.abs() >= params.leaf_band)
        })
    };

    let k = params.neighbors;
    let edges: Vec<(usize, usize)> = (0..points.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let xi = &points[i];
            let mut near: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, xj)| ((xi - xj).norm(), j))
                .filter(|&(d, _)| d < chord_cut)
                .collect();
            if near.len() > k {
                near.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0));
                near.truncate(k);
            }
            near.into_iter()
                .filter(|&(_, j)| admissible(xi, &points[j]))
                .map(move |(_, j)| (i, j))
                .collect::<Vec<_>>()
        })
        .collect();

    let mut uf = UnionFind::new(points.len());
    for (i, j) in edges {
        uf.union(i, j);
    }
    let min_size = (params.min_component_fraction * points.len() as f64).ceil() as usize;
    let (component_sizes, small): (Vec<usize>, Vec<usize>) =
        uf.set_sizes().into_iter().partition(|&s| s >= min_size.max(1));
    Ok(Connectivity {
        components: component_sizes.len(),
        component_sizes,
        fragments: small.iter().sum(),
        kept: points.len(),
        draws,
        cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::seeded;

    fn e(n: usize, i: usize) -> DVector<f64> {
        SpherePoint::basis(n, i).0
    }

    fn s3_region(eps: f64) -> SphereTubeRegion {
        let circle = GreatCircle::new(SpherePoint::basis(4, 0), e(4, 3)).unwrap();
        SphereTubeRegion::new(circle, eps).unwrap()
    }

    #[test]
    fn distance_cases() {
        let a = SpherePoint::basis(3, 0);
        let b = SpherePoint::basis(3, 1);
        assert!((sphere_distance(&a, &b).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((sphere_distance(&a, &a.antipode()).unwrap() - PI).abs() < 1e-15);
        assert_eq!(sphere_distance(&a, &a).unwrap(), 0.0);
        assert!(sphere_distance(&a, &SpherePoint::basis(4, 0)).is_err());
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let mut rng = seeded(1);
        for _ in 0..1000 {
            let [x, y, z] = [0; 3].map(|_| SpherePoint(unit_vector(&mut rng, 4)));
            let xy = sphere_distance(&x, &y).unwrap();
            let yz = sphere_distance(&y, &z).unwrap();
            let xz = sphere_distance(&x, &z).unwrap();
            assert!(xz <= xy + yz + 1e-12);
        }
    }

    #[test]
    fn circle_points() {
        let c = GreatCircle::new(SpherePoint::basis(3, 0), e(3, 1)).unwrap();
        assert_eq!(c.point(0.0), SpherePoint::basis(3, 0));
        assert!((c.point(FRAC_PI_2).0 - e(3, 1)).norm() < 1e-15);
        assert!((c.point(PI).0 + e(3, 0)).norm() < 1e-15);
        for k in 0..50 {
            let t = 0.13 * k as f64;
            let p = c.point(t).0;
            assert!((p.norm() - 1.0).abs() < 1e-15);
            let h = 1e-6;
            let fd = (c.point(t + h).0 - c.point(t - h).0) / (2.0 * h);
            assert!(p.dot(&fd).abs() < 1e-6);
            assert!((fd - c.velocity(t)).norm() < 1e-6);
        }
    }

    #[test]
    fn subsphere_distance_cases() {
        let f = SubsphereFlag::new(4, vec![e(4, 0), e(4, 1)]).unwrap();
        let d = subsphere_distance(&SpherePoint::basis(4, 0), &f).unwrap();
        assert!((d - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(subsphere_distance(&SpherePoint::basis(4, 3), &f).unwrap(), 0.0);
    }

    #[test]
    fn subsphere_distance_matches_sampling() {
        // brute force over points of the subsphere {x0 = x1 = 0} ≅ S¹ in the last two coords
        let f = SubsphereFlag::new(4, vec![e(4, 0), e(4, 1)]).unwrap();
        let mut rng = seeded(2);
        let subsphere: Vec<SpherePoint> = (0..100_000)
            .map(|k| {
                let t = TAU * k as f64 / 100_000.0;
                SpherePoint(DVector::from_vec(vec![0.0, 0.0, t.cos(), t.sin()]))
            })
            .collect();
        for _ in 0..5 {
            let x = SpherePoint(unit_vector(&mut rng, 4));
            let brute = subsphere
                .iter()
                .map(|y| sphere_distance(&x, y).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!((brute - subsphere_distance(&x, &f).unwrap()).abs() < 2e-3);
        }
    }

    #[test]
    fn subsphere_distance_monotone_in_flag() {
        let mut rng = seeded(4);
        let small = SubsphereFlag::new(5, vec![e(5, 0)]).unwrap();
        let big = SubsphereFlag::new(5, vec![e(5, 0), e(5, 2)]).unwrap();
        for _ in 0..200 {
            let x = SpherePoint(unit_vector(&mut rng, 5));
            assert!(subsphere_distance(&x, &big).unwrap() >= subsphere_distance(&x, &small).unwrap());
        }
    }

    #[test]
    fn tube_membership_cases() {
        let r = s3_region(0.3);
        assert!(tube_region_contains(&r, &SpherePoint::basis(4, 0)));
        assert!(!tube_region_contains(&r, &SpherePoint::basis(4, 1)));
        assert!(!tube_region_contains(&r, &SpherePoint::basis(4, 2)));
        assert!(SphereTubeRegion::new(r.circle().clone(), 2.0).is_err());
        assert!(SphereTubeRegion::new(r.circle().clone(), 0.0).is_err());
    }

    #[test]
    fn leaf_through_constructed_point() {
        let r = s3_region(0.3);
        // generic point at distance π/2 − ε from Γ(0) = e1
        let rad = r.ball_radius();
        let dir = DVector::from_vec(vec![0.0, 0.6, 0.0, 0.8]).normalize();
        let x = SpherePoint(e(4, 0).scale(rad.cos()) + dir.scale(rad.sin()));
        let roots = sweepout_leaf_find(&r, &x);
        assert_eq!(roots.len(), 2);
        assert!(roots.iter().any(|&t| t.min(TAU - t) < 1e-9));
    }

    #[test]
    fn barrier_points_have_no_leaf() {
        let r = s3_region(0.3);
        let x = SpherePoint(DVector::from_vec(vec![0.0, 0.6, 0.8, 0.0]));
        assert!(sweepout_leaf_find(&r, &x).is_empty());
    }

    #[test]
    fn generic_points_have_two_leaves() {
        // dense-grid oracle: count sign changes of d(x, Γ(t)) − r on 10⁵ points
        let r = s3_region(0.3);
        let mut rng = seeded(5);
        let mut checked = 0;
        while checked < 40 {
            let x = SpherePoint(unit_vector(&mut rng, 4));
            if r.signed_margin(&x).abs() < 1e-3 {
                continue;
            }
            let n = 100_000;
            let vals: Vec<f64> = (0..n)
                .map(|k| {
                    let t = TAU * k as f64 / n as f64;
                    sphere_distance(&x, &r.circle().point(t)).unwrap() - r.ball_radius()
                })
                .collect();
            let changes = (0..n).filter(|&k| (vals[k] > 0.0) != (vals[(k + 1) % n] > 0.0)).count();
            let roots = sweepout_leaf_find(&r, &x);
            assert_eq!(roots.len(), changes);
            assert_eq!(roots.is_empty(), !tube_region_contains(&r, &x));
            if tube_region_contains(&r, &x) {
                assert_eq!(roots.len(), 2);
            }
            checked += 1;
        }
    }

    #[test]
    fn leaves_lie_inside_region() {
        let r = s3_region(0.3);
        let mut rng = seeded(6);
        for k in 0..1000 {
            let t = TAU * k as f64 / 1000.0;
            let y = r.leaf_point(t, &mut rng);
            assert!(r.signed_margin(&y) >= -1e-12);
        }
    }

    #[test]
    fn maximal_set_region_on_s2_reduces_to_half_equator_setup() {
        let flag = SubsphereFlag::new(3, vec![]).unwrap();
        let x0 = SpherePoint::basis(3, 2);
        let r = build_maximal_set_region(&flag, &x0, 0.2).unwrap();
        assert!((r.circle().point(FRAC_PI_2).0 - x0.coords()).norm() < 1e-15);
        assert_eq!(r.circle().base(), &SpherePoint::basis(3, 0));
        // barrier is the antipodal pair ±e2
        let (p, _) = r.barrier_flag().split_norms(&e(3, 1));
        assert!(p < 1e-15);
    }

    #[test]
    fn maximal_set_region_respects_flag() {
        let mut rng = seeded(7);
        let basis = crate::sampling::special_orthogonal(&mut rng, 6);
        let cols: Vec<DVector<f64>> = (0..6).map(|j| basis.column(j).into_owned()).collect();
        let flag = SubsphereFlag::new(6, cols[1..4].to_vec()).unwrap();
        let x0 = SpherePoint::new(cols[0].clone()).unwrap();
        let r = build_maximal_set_region(&flag, &x0, 0.3).unwrap();
        assert!((r.circle().point(FRAC_PI_2).0 - x0.coords()).norm() < 1e-14);
        for k in 0..100 {
            let g = r.circle().point(0.07 * k as f64).0;
            for z in flag.normals() {
                assert!(g.dot(z).abs() < 1e-12);
            }
        }
        // order of the flag normals does not matter
        let mut rev = cols[1..4].to_vec();
        rev.reverse();
        let r2 = build_maximal_set_region(&SubsphereFlag::new(6, rev).unwrap(), &x0, 0.3).unwrap();
        assert!((r2.circle().base().coords() - r.circle().base().coords()).norm() < 1e-9);
        // full flag leaves no room
        let full = SubsphereFlag::new(6, cols[1..6].to_vec()).unwrap();
        assert_eq!(
            build_maximal_set_region(&full, &x0, 0.3).unwrap_err(),
            GeomError::DegenerateFlag(6)
        );
    }

    #[test]
    fn sphere_volumes() {
        assert!((sphere_volume(2) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn disconnection_small_run() {
        let r = s3_region(0.3);
        let p = DisconnectionParams::default();
        let intact = region_disconnection_check(&r, None, 4000, 11, &p).unwrap();
        assert_eq!(intact.components, 1);
        let cut = region_disconnection_check(&r, Some(0.4), 4000, 11, &p).unwrap();
        assert_eq!(cut.components, 2);
        assert_eq!(cut.component_sizes.iter().sum::<usize>() + cut.fragments, cut.kept);
        let raw = DisconnectionParams {
            min_component_fraction: 0.0,
            ..p
        };
        let all = region_disconnection_check(&r, Some(0.4), 4000, 11, &raw).unwrap();
        assert_eq!(all.fragments, 0);
        assert!(all.components >= cut.components);
        assert!(region_disconnection_check(&r, None, 10, 11, &p).is_err());
    }
}
