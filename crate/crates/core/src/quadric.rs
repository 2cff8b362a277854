//! The complex quadric model of `G⁺_{2,k+2}`.
//!
//! An oriented plane with orthonormal frame `(v, w)` maps to `[v + i·w]` on
//! `Q_k = {Σ z_j² = 0} ⊂ CP^{k+1}`. Off the hyperplane `H = {z₁ − i·z₂ = 0}`
//! the quadric is a copy of `C^k` through the Hoffman-Osserman chart. For
//! `k = 2` the Hodge star on `Λ²(R⁴)` splits `G⁺_{2,4}` as `S² × S²`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;

use crate::error::{invalid, GeomError, Result};
use crate::exterior::{gram_schmidt, is_simple, PVector};
use crate::grassmann::GrassmannPoint;

/// Relative quadric residual accepted by [`QuadricPoint::new`].
pub const QUADRIC_TOL: f64 = 1e-10;

/// Relative distance to `H` below which the chart is undefined.
pub const CHART_GUARD: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A nonzero homogeneous representative of a point of `CP^{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint {
    z: Vec<Complex64>,
}

impl ProjectivePoint {
    pub fn new(z: Vec<Complex64>) -> Result<Self> {
        if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return invalid("non-finite homogeneous coordinate");
        }
        if !(cnorm(&z) > 1e-12) {
            return invalid("homogeneous coordinates vanish");
        }
        Ok(Self { z })
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn norm(&self) -> f64 {
        cnorm(&self.z)
    }

    /// `1 − |⟨a, b⟩| / (|a||b|)`; zero iff the points agree.
    pub fn projective_gap(&self, other: &Self) -> f64 {
        1.0 - hermitian(&self.z, &other.z).norm() / (self.norm() * other.norm())
    }

    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        Self::new(self.z.iter().map(|z| z * c).collect())
    }
}

/// A point of `Q_k`: `|Σ z_j²| ≤ 1e-10 · |z|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadricPoint(ProjectivePoint);

impl QuadricPoint {
    pub fn new(z: Vec<Complex64>) -> Result<Self> {
        let p = ProjectivePoint::new(z)?;
        let r = quadric_residual(p.coords());
        if r > QUADRIC_TOL {
            return Err(GeomError::NotOnQuadric(r));
        }
        Ok(Self(p))
    }

    pub fn projective(&self) -> &ProjectivePoint {
        &self.0
    }

    pub fn coords(&self) -> &[Complex64] {
        self.0.coords()
    }

    /// `k` for `Q_k ⊂ CP^{k+1}`.
    pub fn k(&self) -> usize {
        self.0.len() - 2
    }
}

/// Affine coordinates `ξ ∈ C^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub xi: Vec<Complex64>,
}

impl ChartPoint {
    pub fn new(xi: Vec<Complex64>) -> Result<Self> {
        if xi.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return invalid("non-finite chart coordinate");
        }
        Ok(Self { xi })
    }
}

fn cnorm(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `Σ conj(a_j) b_j`.
fn hermitian(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `|Σ z_j²| / |z|²`.
pub fn quadric_residual(z: &[Complex64]) -> f64 {
    let s: Complex64 = z.iter().map(|c| c * c).sum();
    s.norm() / cnorm(z).powi(2)
}

/// `[v + i·w]` for the orthonormal frame `(v, w)` of `w`.
pub fn grassmann_to_quadric(w: &GrassmannPoint) -> Result<QuadricPoint> {
    if w.p() != 2 {
        return Err(GeomError::Unsupported(format!(
            "quadric model needs 2-planes, got p = {}",
            w.p()
        )));
    }
    let f = w.frame().matrix();
    let z = (0..w.n()).map(|j| Complex64::new(f[(j, 0)], f[(j, 1)])).collect();
    QuadricPoint::new(z)
}

/// Inverse of [`grassmann_to_quadric`]: rescale to `|z|² = 2`, read off `(Re z, Im z)`.
pub fn quadric_to_grassmann(q: &QuadricPoint) -> Result<GrassmannPoint> {
    let z = q.coords();
    let s = std::f64::consts::SQRT_2 / cnorm(z);
    let v = DVector::from_iterator(z.len(), z.iter().map(|c| c.re * s));
    let w = DVector::from_iterator(z.len(), z.iter().map(|c| c.im * s));
    Ok(GrassmannPoint::new(gram_schmidt(&[v, w])?))
}

/// `(|z₁ − i·z₂|, |z₁ + i·z₂|) / |z|`: distances-like margins to `H` and `H'`.
pub fn hyperplane_margins(q: &QuadricPoint) -> (f64, f64) {
    let z = q.coords();
    let n = cnorm(z);
    ((z[0] - I * z[1]).norm() / n, (z[0] + I * z[1]).norm() / n)
}

/// `ξ_j = z_{j+2} / (z₁ − i·z₂)`.
pub fn ho_chart(q: &QuadricPoint) -> Result<ChartPoint> {
    let z = q.coords();
    let d = z[0] - I * z[1];
    let margin = d.norm() / cnorm(z);
    if !(margin > CHART_GUARD) {
        return Err(GeomError::ChartDomain(margin));
    }
    ChartPoint::new(z[2..].iter().map(|c| c / d).collect())
}

/// `(1 − Σξ², i(1 + Σξ²), 2ξ)`, the representative with `(z₁ − i·z₂)/2 = 1`.
pub fn ho_chart_inv(x: &ChartPoint) -> Result<QuadricPoint> {
    let s: Complex64 = x.xi.iter().map(|c| c * c).sum();
    let mut z = Vec::with_capacity(x.xi.len() + 2);
    z.push(1.0 - s);
    z.push(I * (1.0 + s));
    z.extend(x.xi.iter().map(|c| 2.0 * c));
    QuadricPoint::new(z)
}

/// Distance for `ds² = 2 Σ_{j<l} |z_j dz_l − z_l dz_j|² / |z|⁴`, i.e. `√2` times
/// the Fubini-Study angle.
pub fn fs_distance(a: &ProjectivePoint, b: &ProjectivePoint) -> Result<f64> {
    if a.len() != b.len() {
        return invalid("projective points of different dimension");
    }
    let (na, nb) = (a.norm(), b.norm());
    let ua: Vec<Complex64> = a.coords().iter().map(|c| c / na).collect();
    let ub: Vec<Complex64> = b.coords().iter().map(|c| c / nb).collect();
    let c = hermitian(&ua, &ub);
    let perp: Vec<Complex64> = ub.iter().zip(&ua).map(|(y, x)| y - c * x).collect();
    Ok(std::f64::consts::SQRT_2 * cnorm(&perp).atan2(c.norm()))
}

// (12, 13, 14, 23, 24, 34)
const P12: usize = 0;
const P13: usize = 1;
const P14: usize = 2;
const P23: usize = 3;
const P24: usize = 4;
const P34: usize = 5;

/// Self-dual and anti-self-dual coordinates of a unit simple bivector of `R⁴`.
///
/// Bases: `(e₁₂ ± e₃₄)/√2`, `(e₁₃ ∓ e₂₄)/√2`, `(e₁₄ ± e₂₃)/√2`; each part is
/// scaled by `√2` onto the unit sphere.
pub fn split_pvector(p: &PVector) -> Result<(Vector3<f64>, Vector3<f64>)> {
    if p.dim() != 4 || p.grade() != 2 {
        return invalid("splitting needs a bivector of R^4");
    }
    if (p.norm() - 1.0).abs() > 1e-9 || !is_simple(p, 1e-9)? {
        return invalid("bivector is not a unit simple bivector");
    }
    let c = p.coords();
    let a = Vector3::new(c[P12] + c[P34], c[P13] - c[P24], c[P14] + c[P23]);
    let b = Vector3::new(c[P12] - c[P34], c[P13] + c[P24], c[P14] - c[P23]);
    Ok((a, b))
}

/// `G⁺_{2,4} → S² × S²`.
pub fn split_s2xs2(w: &GrassmannPoint) -> Result<(Vector3<f64>, Vector3<f64>)> {
    split_pvector(w.plucker())
}

/// Inverse of [`split_s2xs2`].
pub fn join_s2xs2(a: &Vector3<f64>, b: &Vector3<f64>) -> Result<GrassmannPoint> {
    if (a.norm() - 1.0).abs() > 1e-9 || (b.norm() - 1.0).abs() > 1e-9 {
        return invalid("factors must be unit vectors");
    }
    let mut c = [0.0; 6];
    c[P12] = 0.5 * (a[0] + b[0]);
    c[P34] = 0.5 * (a[0] - b[0]);
    c[P13] = 0.5 * (a[1] + b[1]);
    c[P24] = 0.5 * (b[1] - a[1]);
    c[P14] = 0.5 * (a[2] + b[2]);
    c[P23] = 0.5 * (a[2] - b[2]);
    plane_of_bivector(&PVector::new(4, 2, c.to_vec())?)
}

/// Oriented plane of a simple bivector `x ∧ y`, read off the skew matrix `x yᵀ − y xᵀ`.
pub fn plane_of_bivector(p: &PVector) -> Result<GrassmannPoint> {
    if p.grade() != 2 {
        return Err(GeomError::UnsupportedGrade(p.grade()));
    }
    if !is_simple(p, 1e-9)? {
        return invalid("bivector is not simple");
    }
    let n = p.dim();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = p.get(&[i, j]);
            m[(i, j)] = v;
            m[(j, i)] = -v;
        }
    }
    let (j, _) = m
        .column_iter()
        .map(|c| c.norm())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("n >= 2");
    let x = m.column(j).normalize();
    let y = -(&m * &x);
    Ok(GrassmannPoint::new(gram_schmidt(&[x, y])?))
}

/// Both factors avoid the `ε`-caps around `±axis`: `|⟨a, axis_a⟩| ≤ cos ε` and likewise for `b`.
pub fn product_region_contains(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    axis_a: &Vector3<f64>,
    axis_b: &Vector3<f64>,
    epsilon: f64,
) -> bool {
    let c = epsilon.cos();
    a.dot(axis_a).abs() <= c && b.dot(axis_b).abs() <= c
}

/// The point `[1 : i : 0 : … : 0]`, image of `e₁ ∧ e₂`.
pub fn quadric_origin(k: usize) -> QuadricPoint {
    let mut z = vec![Complex64::new(0.0, 0.0); k + 2];
    z[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    z[1] = Complex64::new(0.0, FRAC_1_SQRT_2);
    QuadricPoint::new(z).expect("on the quadric")
}
