//! The oriented Grassmannian `G⁺_{p,n}` of oriented `p`-planes in `Rⁿ`.
//!
//! Tangent vectors at `w = e₁∧…∧e_p` are written `X = Σ A_{iα} η_{iα}` with
//! `η_{iα}` the wedge of the frame with `e_i` replaced by `n_α`. Along the
//! geodesic the frame moves with velocity `N·Aᵀ`, so the singular value
//! decomposition of `A` rotates both frames into the canonical form in which
//! each `e'_i` turns towards `n'_i` at angular speed `λ_i`.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, GeomError, Result};
use crate::exterior::{complete_from_standard, plucker, wedge_columns, Frame, PVector, FRAME_TOL};
use crate::sphere::refine_extremum;

/// Singular values at or below this are treated as zero.
pub const RANK_EPS: f64 = 1e-12;

/// Half-width of the band in which [`bg_contains`] reports [`BallMembership::Boundary`].
pub const BALL_BAND: f64 = 1e-9;

/// Default number of `t` samples for [`main_region_contains`].
pub const DEFAULT_REGION_GRID: usize = 2048;

/// An oriented `p`-plane with its Plücker vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannPoint {
    frame: Frame,
    plucker: PVector,
}

impl GrassmannPoint {
    pub fn new(frame: Frame) -> Self {
        let plucker = plucker(&frame);
        Self { frame, plucker }
    }

    pub fn from_vectors(vectors: &[DVector<f64>]) -> Result<Self> {
        Ok(Self::new(Frame::new(vectors)?))
    }

    /// `e_1 ∧ … ∧ e_p` in `Rⁿ`.
    pub fn standard(n: usize, p: usize) -> Result<Self> {
        Ok(Self::new(Frame::standard(n, p)?))
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn plucker(&self) -> &PVector {
        &self.plucker
    }

    pub fn n(&self) -> usize {
        self.frame.dim()
    }

    pub fn p(&self) -> usize {
        self.frame.len()
    }

    /// Deterministic orthonormal basis of the orthogonal complement.
    pub fn normal_frame(&self) -> Frame {
        let normals = complete_from_standard(&self.frame.vectors(), self.n());
        Frame::new(&normals).expect("complement of a proper subspace is non-empty")
    }

    /// Same oriented plane, frame replaced by `F·Q` with `Q ∈ SO(p)`.
    pub fn regauge(&self, q: &DMatrix<f64>) -> Result<Self> {
        if q.determinant() < 0.0 {
            return invalid("gauge change must preserve orientation");
        }
        Ok(Self::new(self.frame.rotate(q)?))
    }

    /// The plane with the opposite orientation.
    pub fn reversed(&self) -> Self {
        let mut mat = self.frame.matrix().clone();
        mat.column_mut(0).neg_mut();
        Self::new(Frame::from_matrix(mat).expect("sign change keeps orthonormality"))
    }
}

fn check_pair(a: &GrassmannPoint, b: &GrassmannPoint) -> Result<()> {
    if a.n() != b.n() || a.p() != b.p() {
        return invalid(format!(
            "Grassmannians differ: G({}, {}) vs G({}, {})",
            a.p(),
            a.n(),
            b.p(),
            b.n()
        ));
    }
    Ok(())
}

fn check_normals(w: &GrassmannPoint, normals: &Frame) -> Result<()> {
    if normals.dim() != w.n() {
        return invalid("normal frame has the wrong ambient dimension");
    }
    let cross = w.frame().matrix().transpose() * normals.matrix();
    let worst = cross.abs().max();
    if worst > FRAME_TOL {
        return invalid(format!("normal frame is not orthogonal to the plane ({worst:.3e})"));
    }
    Ok(())
}

/// The basis `η_{iα}`, `i`-major: `η_{11}, η_{12}, …, η_{21}, …`.
pub fn eta_basis(w: &GrassmannPoint, normal_frame: &Frame) -> Result<Vec<PVector>> {
    check_normals(w, normal_frame)?;
    let mut out = Vec::with_capacity(w.p() * normal_frame.len());
    for i in 0..w.p() {
        for a in 0..normal_frame.len() {
            let mut mat = w.frame().matrix().clone();
            mat.set_column(i, &normal_frame.matrix().column(a));
            out.push(wedge_columns(&mat));
        }
    }
    Ok(out)
}

/// Canonical data of a tangent vector: `A = Σ_i λ_i (Eᵀe'_i)(Nᵀn'_i)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kozlov {
    pub rank: usize,
    /// Positive values, descending.
    pub lambda: Vec<f64>,
    /// `E·U`: a positively oriented frame of the same plane.
    pub tangent_frame: DMatrix<f64>,
    /// `N·W`: the rotated normal frame.
    pub normal_frame: DMatrix<f64>,
}

impl Kozlov {
    pub fn rotated_tangent_frame(&self) -> Vec<DVector<f64>> {
        (0..self.rank)
            .map(|i| self.tangent_frame.column(i).into_owned())
            .collect()
    }

    pub fn rotated_normal_frame(&self) -> Vec<DVector<f64>> {
        (0..self.rank)
            .map(|i| self.normal_frame.column(i).into_owned())
            .collect()
    }
}

/// A tangent vector at a [`GrassmannPoint`], stored by its `p×(n−p)` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannTangent {
    base: GrassmannPoint,
    normals: Frame,
    coeffs: DMatrix<f64>,
    kozlov: Kozlov,
}

impl GrassmannTangent {
    /// Coefficients against the deterministic complement [`GrassmannPoint::normal_frame`].
    pub fn from_coeffs(base: &GrassmannPoint, coeffs: DMatrix<f64>) -> Result<Self> {
        kozlov_canonical(base, &base.normal_frame(), coeffs)
    }

    pub fn base(&self) -> &GrassmannPoint {
        &self.base
    }

    pub fn normals(&self) -> &Frame {
        &self.normals
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn kozlov(&self) -> &Kozlov {
        &self.kozlov
    }

    pub fn rank(&self) -> usize {
        self.kozlov.rank
    }

    pub fn lambda(&self) -> &[f64] {
        &self.kozlov.lambda
    }

    /// `|X|`, the Frobenius norm of the coefficients.
    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= FRAME_TOL
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        kozlov_canonical(&self.base, &self.normals, self.coeffs.scale(s))
    }

    pub fn unit(&self) -> Self {
        if self.is_unit() {
            return self.clone();
        }
        self.scaled(1.0 / self.norm()).expect("nonzero tangent")
    }

    /// `X` as an element of `Λ_p(Rⁿ)`.
    pub fn to_pvector(&self) -> PVector {
        let eta = eta_basis(&self.base, &self.normals).expect("validated at construction");
        let q = self.normals.len();
        let mut acc = PVector::zero(self.base.n(), self.base.p());
        for (k, h) in eta.iter().enumerate() {
            acc = acc.add(&h.scale(self.coeffs[(k / q, k % q)])).expect("same grade");
        }
        acc
    }

    /// Frame velocity `N·Aᵀ` at `t = 0`.
    pub fn frame_velocity(&self) -> DMatrix<f64> {
        self.normals.matrix() * self.coeffs.transpose()
    }

    /// Coefficients rebuilt from the canonical data.
    pub fn rebuild_coeffs(&self) -> DMatrix<f64> {
        let k = &self.kozlov;
        let mut m = DMatrix::zeros(self.base.n(), self.base.n());
        for i in 0..k.rank {
            m += k.tangent_frame.column(i) * k.normal_frame.column(i).transpose() * k.lambda[i];
        }
        self.base.frame().matrix().transpose() * m * self.normals.matrix()
    }

    /// The same tangent vector after regauging the plane frame by `q` and the
    /// normal frame by `s`.
    pub fn regauge(&self, q: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<Self> {
        let base = self.base.regauge(q)?;
        let normals = self.normals.rotate(s)?;
        kozlov_canonical(&base, &normals, q.transpose() * &self.coeffs * s)
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Kozlov canonical form of `X = Σ A_{iα} η_{iα}` at `w`.
///
/// Values are sorted descending; ties are ordered by the rotated tangent
/// vectors compared lexicographically. The first nonzero entry of each
/// `e'_i` with `λ_i > 0` is made positive and `det U = +1`, so `E·U` is a
/// positively oriented frame of `w`.
pub fn kozlov_canonical(w: &GrassmannPoint, normals: &Frame, coeffs: DMatrix<f64>) -> Result<GrassmannTangent> {
    check_normals(w, normals)?;
    let (p, q) = (w.p(), normals.len());
    if p + q != w.n() {
        return invalid(format!("need {} normals, got {q}", w.n() - p));
    }
    if coeffs.shape() != (p, q) {
        return invalid(format!("coefficients must be {p}x{q}, got {:?}", coeffs.shape()));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return invalid("non-finite tangent coefficients");
    }
    if coeffs.norm() <= RANK_EPS {
        return Err(GeomError::ZeroTangent);
    }

    let (u_thin, sigma, w_thin) = jacobi_svd(&coeffs);
    let m = sigma.len();

    let mut order: Vec<usize> = (0..m).collect();
    let e = w.frame().matrix();
    let cols: Vec<DVector<f64>> = (0..m).map(|i| e * u_thin.column(i)).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (sigma[a], sigma[b]);
        if (sa - sb).abs() <= RANK_EPS {
            lex_cmp(cols[a].as_slice(), cols[b].as_slice())
        } else {
            sb.total_cmp(&sa)
        }
    });
    let rank = sigma.iter().filter(|&&s| s > RANK_EPS).count();
    let order = &order[..rank];

    let mut u_cols: Vec<DVector<f64>> = order.iter().map(|&i| u_thin.column(i).into_owned()).collect();
    let mut w_cols: Vec<DVector<f64>> = order.iter().map(|&i| w_thin.column(i).into_owned()).collect();
    let lambda: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();

    for i in 0..rank {
        let rotated = e * &u_cols[i];
        if let Some(first) = rotated.iter().find(|c| c.abs() > 1e-12) {
            if *first < 0.0 {
                u_cols[i].neg_mut();
                w_cols[i].neg_mut();
            }
        }
    }
    u_cols.extend(complete_from_standard(&u_cols, p));
    w_cols.extend(complete_from_standard(&w_cols, q));
    let mut u = DMatrix::from_columns(&u_cols);
    let mut wm = DMatrix::from_columns(&w_cols);
    if u.determinant() < 0.0 {
        u.column_mut(p - 1).neg_mut();
        if p - 1 < rank {
            wm.column_mut(p - 1).neg_mut();
        }
    }

    let kozlov = Kozlov {
        rank,
        lambda,
        tangent_frame: e * &u,
        normal_frame: normals.matrix() * &wm,
    };
    Ok(GrassmannTangent {
        base: w.clone(),
        normals: normals.clone(),
        coeffs,
        kozlov,
    })
}

/// Thin SVD `A = U·diag(σ)·Wᵀ` by one-sided Jacobi rotations, unordered.
///
/// Reconstructs to a few ulps, which the bidiagonal QR iteration in nalgebra
/// does not for small matrices.
fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let transposed = a.nrows() < a.ncols();
    let mut g = if transposed { a.transpose() } else { a.clone() };
    let c = g.ncols();
    let mut v = DMatrix::<f64>::identity(c, c);
    for _ in 0..80 {
        let mut rotated = false;
        for i in 0..c {
            for j in i + 1..c {
                let alpha = g.column(i).norm_squared();
                let beta = g.column(j).norm_squared();
                let gamma = g.column(i).dot(&g.column(j));
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for m in [&mut g, &mut v] {
                    for r in 0..m.nrows() {
                        let (x, y) = (m[(r, i)], m[(r, j)]);
                        m[(r, i)] = cs * x - sn * y;
                        m[(r, j)] = sn * x + cs * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..c).map(|k| g.column(k).norm()).collect();
    for (k, s) in sigma.iter().enumerate() {
        if *s > 0.0 {
            g.column_mut(k).unscale_mut(*s);
        }
    }
    if transposed {
        (v, sigma, g)
    } else {
        (g, sigma, v)
    }
}

/// `w_X(t)`: the geodesic with initial velocity `X`, traversed at speed `|X|`.
pub fn exp_map(x: &GrassmannTangent, t: f64) -> GrassmannPoint {
    let k = &x.kozlov;
    let mut mat = k.tangent_frame.clone();
    for i in 0..k.rank {
        let (s, c) = (k.lambda[i] * t).sin_cos();
        let col = k.tangent_frame.column(i) * c + k.normal_frame.column(i) * s;
        mat.set_column(i, &col);
    }
    GrassmannPoint::new(Frame::from_matrix(mat).expect("rotation of an orthonormal frame"))
}

/// Arc-length geodesic. Non-unit `X` is rescaled; the flag reports when that happened.
pub fn grassmann_geodesic(x: &GrassmannTangent, t: f64) -> (GrassmannPoint, bool) {
    if x.is_unit() {
        (exp_map(x, t), false)
    } else {
        (exp_map(x, t / x.norm()), true)
    }
}

/// Principal angles, descending, and the geodesic distance `sqrt(Σθ²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngles {
    pub angles: Vec<f64>,
    pub distance: f64,
}

impl PrincipalAngles {
    /// `θ₁ + θ₂`, with `θ₂ = 0` when `p = 1`.
    pub fn top_two_sum(&self) -> f64 {
        self.angles.iter().take(2).sum()
    }
}

/// Oriented principal angles between two planes.
///
/// Angles come from the singular value decomposition of `F₁ᵀF₂`, computed as
/// `atan2(sin, cos)` for accuracy at both ends. When `det(F₁ᵀF₂) < 0` the
/// orientations disagree and the largest angle `θ` is replaced by `π − θ`.
pub fn principal_angles(w1: &GrassmannPoint, w2: &GrassmannPoint) -> Result<PrincipalAngles> {
    check_pair(w1, w2)?;
    let f1 = w1.frame().matrix();
    let f2 = w2.frame().matrix();
    let m = f1.transpose() * f2;
    let det = m.determinant();
    let svd = m.svd(true, true);
    let y = svd.u.expect("requested");
    let z = svd.v_t.expect("requested").transpose();
    let mut angles: Vec<f64> = (0..w1.p())
        .map(|i| {
            let s = svd.singular_values[i];
            let a = f1 * y.column(i);
            let b = f2 * z.column(i);
            (b - a * s).norm().atan2(s)
        })
        .collect();
    angles.sort_by(|a, b| b.total_cmp(a));
    if det < 0.0 {
        angles[0] = PI - angles[0];
        angles.sort_by(|a, b| b.total_cmp(a));
    }
    let distance = angles.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok(PrincipalAngles { angles, distance })
}

pub fn geodesic_distance(w1: &GrassmannPoint, w2: &GrassmannPoint) -> Result<f64> {
    Ok(principal_angles(w1, w2)?.distance)
}

/// `t_X = π / (2(λ₁ + λ₂))` for the unit tangent in the direction of `X`.
pub fn t_max(x: &GrassmannTangent) -> f64 {
    let l = x.lambda();
    let top = l[0] + l.get(1).copied().unwrap_or(0.0);
    FRAC_PI_2 * x.norm() / top
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallMembership {
    Inside,
    Boundary,
    Outside,
}

/// Membership in the convex set `B_G(w)` shrunk by `shrink`, via `θ₁ + θ₂` against `π/2 − shrink`.
pub fn bg_contains(w: &GrassmannPoint, w2: &GrassmannPoint, shrink: f64) -> Result<BallMembership> {
    if !(0.0..FRAC_PI_2).contains(&shrink) {
        return invalid(format!("shrink {shrink} outside [0, π/2)"));
    }
    let s = principal_angles(w, w2)?.top_two_sum();
    let level = FRAC_PI_2 - shrink;
    Ok(if (s - level).abs() <= BALL_BAND {
        BallMembership::Boundary
    } else if s < level {
        BallMembership::Inside
    } else {
        BallMembership::Outside
    })
}

/// Range of `s(t) = θ₁ + θ₂` between `w_{X₁}(t)` and a fixed plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub t_min: f64,
    pub s_min: f64,
    pub t_max: f64,
    pub s_max: f64,
}

/// The region swept by the boundaries of the shrunk balls `B_G(w_{X₁}(t))`,
/// `t ∈ [0, 2π)`, along a rank-one direction `X₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct MainRegion {
    direction: GrassmannTangent,
    epsilon: f64,
    grid: usize,
}

impl MainRegion {
    pub fn new(x1: &GrassmannTangent, epsilon: f64) -> Result<Self> {
        Self::with_grid(x1, epsilon, DEFAULT_REGION_GRID)
    }

    pub fn with_grid(x1: &GrassmannTangent, epsilon: f64, grid: usize) -> Result<Self> {
        if x1.rank() != 1 {
            return Err(GeomError::InvalidDirection(x1.rank()));
        }
        if !(epsilon > 0.0 && epsilon < FRAC_PI_2) {
            return invalid(format!("epsilon {epsilon} outside (0, π/2)"));
        }
        if grid < 16 {
            return invalid(format!("grid of {grid} points is too coarse"));
        }
        Ok(Self {
            direction: x1.unit(),
            epsilon,
            grid,
        })
    }

    pub fn direction(&self) -> &GrassmannTangent {
        &self.direction
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Level `π/2 − ε` of the shrunk ball boundaries.
    pub fn level(&self) -> f64 {
        FRAC_PI_2 - self.epsilon
    }

    pub fn center(&self, t: f64) -> GrassmannPoint {
        exp_map(&self.direction, t)
    }

    pub fn sweep_range(&self, w2: &GrassmannPoint) -> Result<SweepRange> {
        check_pair(self.direction.base(), w2)?;
        let s = |t: f64| {
            principal_angles(&self.center(t), w2)
                .expect("checked dimensions")
                .top_two_sum()
        };
        let step = TAU / self.grid as f64;
        let samples: Vec<f64> = (0..self.grid).map(|k| s(k as f64 * step)).collect();
        let (t_min, s_min) = refine_extremum(&s, &samples, step, false, 1e-10);
        let (t_max, s_max) = refine_extremum(&s, &samples, step, true, 1e-10);
        Ok(SweepRange {
            t_min: t_min.rem_euclid(TAU),
            s_min,
            t_max: t_max.rem_euclid(TAU),
            s_max,
        })
    }

    /// Signed distance in `s` from the attained range to the level; nonnegative iff member.
    pub fn margin(&self, w2: &GrassmannPoint) -> Result<f64> {
        let r = self.sweep_range(w2)?;
        Ok((self.level() - r.s_min).min(r.s_max - self.level()))
    }

    pub fn contains(&self, w2: &GrassmannPoint) -> Result<bool> {
        Ok(self.margin(w2)? >= 0.0)
    }
}

/// Membership in the swept region for `X₁` at its base point.
pub fn main_region_contains(x1: &GrassmannTangent, epsilon: f64, w2: &GrassmannPoint) -> Result<bool> {
    MainRegion::new(x1, epsilon)?.contains(w2)
}
