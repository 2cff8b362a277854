//! Exterior powers `Λ_p(Rⁿ)` in lexicographic multi-index coordinates.
//!
//! A [`PVector`] stores its `C(n, p)` coordinates against the basis
//! `e_{i1} ∧ … ∧ e_{ip}` with `i1 < … < ip`, enumerated lexicographically.
//! That layout is also the on-disk layout of every Plücker vector the crate
//! writes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GeomError, Result};

/// Tolerance for orthonormality of frames at construction.
pub const FRAME_TOL: f64 = 1e-9;

/// Smallest admissible singular value when orthonormalising.
pub const RANK_TOL: f64 = 1e-10;

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All strictly increasing `p`-subsets of `0..n`, lexicographically ordered.
pub fn multi_indices(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, p));
    if p > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        out.push(idx.clone());
        // advance the rightmost index that still has room
        let Some(i) = (0..p).rev().find(|&i| idx[i] < n - p + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..p {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Position of a strictly increasing multi-index in the lexicographic order.
pub fn multi_index_rank(idx: &[usize], n: usize) -> usize {
    let p = idx.len();
    let mut rank = 0;
    let mut prev = 0;
    for (slot, &i) in idx.iter().enumerate() {
        for skipped in prev..i {
            rank += binomial(n - 1 - skipped, p - 1 - slot);
        }
        prev = i + 1;
    }
    rank
}

/// An element of `Λ_p(Rⁿ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PVector {
    n: usize,
    p: usize,
    coords: Vec<f64>,
}

impl PVector {
    pub fn new(n: usize, p: usize, coords: Vec<f64>) -> Result<Self> {
        if p == 0 || p > n {
            return invalid(format!("grade {p} out of range for dimension {n}"));
        }
        if coords.len() != binomial(n, p) {
            return invalid(format!(
                "expected {} coordinates for Λ_{p}(R^{n}), got {}",
                binomial(n, p),
                coords.len()
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return invalid("non-finite p-vector coordinate");
        }
        Ok(Self { n, p, coords })
    }

    pub fn zero(n: usize, p: usize) -> Self {
        Self {
            n,
            p,
            coords: vec![0.0; binomial(n, p)],
        }
    }

    /// The basis blade `e_{i1} ∧ … ∧ e_{ip}` for a strictly increasing index list.
    pub fn basis(n: usize, idx: &[usize]) -> Result<Self> {
        if idx.windows(2).any(|w| w[0] >= w[1]) || idx.iter().any(|&i| i >= n) {
            return invalid(format!("{idx:?} is not a strictly increasing index into 0..{n}"));
        }
        let mut out = Self::zero(n, idx.len());
        out.coords[multi_index_rank(idx, n)] = 1.0;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grade(&self) -> usize {
        self.p
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinate at a strictly increasing multi-index.
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.coords[multi_index_rank(idx, self.n)]
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            p: self.p,
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_space(self, other)?;
        Ok(Self {
            n: self.n,
            p: self.p,
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_same_space(a: &PVector, b: &PVector) -> Result<()> {
    if a.n != b.n || a.p != b.p {
        return invalid(format!(
            "p-vectors live in different spaces: Λ_{}(R^{}) vs Λ_{}(R^{})",
            a.p, a.n, b.p, b.n
        ));
    }
    Ok(())
}

/// Induced inner product on `Λ_p(Rⁿ)`.
pub fn pinner(a: &PVector, b: &PVector) -> Result<f64> {
    check_same_space(a, b)?;
    Ok(a.coords.iter().zip(&b.coords).map(|(x, y)| x * y).sum())
}

pub fn pnorm(a: &PVector) -> f64 {
    a.norm()
}

fn determinant(m: DMatrix<f64>) -> f64 {
    match m.nrows() {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => m.determinant(),
    }
}

/// `v_1 ∧ … ∧ v_p`: the coordinate at `I` is the `p×p` minor on rows `I`.
pub fn wedge(vectors: &[DVector<f64>]) -> Result<PVector> {
    let p = vectors.len();
    if p == 0 {
        return invalid("wedge of an empty list");
    }
    let n = vectors[0].len();
    if vectors.iter().any(|v| v.len() != n) {
        return invalid("wedge factors have different dimensions");
    }
    if p > n {
        return invalid(format!("cannot wedge {p} vectors in R^{n}"));
    }
    let mat = DMatrix::from_columns(vectors);
    Ok(wedge_columns(&mat))
}

/// Wedge of the columns of an `n×p` matrix.
pub(crate) fn wedge_columns(mat: &DMatrix<f64>) -> PVector {
    let (n, p) = mat.shape();
    let coords = multi_indices(n, p)
        .iter()
        .map(|rows| determinant(mat.select_rows(rows.iter())))
        .collect();
    PVector { n, p, coords }
}

/// An ordered orthonormal `p`-tuple in `Rⁿ`, stored as the columns of an `n×p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    mat: DMatrix<f64>,
}

impl Frame {
    /// Validates orthonormality to [`FRAME_TOL`]; never re-orthonormalises.
    pub fn from_matrix(mat: DMatrix<f64>) -> Result<Self> {
        let (n, p) = mat.shape();
        if p == 0 || p > n {
            return invalid(format!("frame of {p} vectors in R^{n}"));
        }
        let gram = mat.transpose() * &mat;
        for i in 0..p {
            for j in 0..p {
                let target = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - target).abs() > FRAME_TOL {
                    return invalid(format!("frame is not orthonormal: <v{i}, v{j}> = {:.3e}", gram[(i, j)]));
                }
            }
        }
        Ok(Self { mat })
    }

    pub fn new(vectors: &[DVector<f64>]) -> Result<Self> {
        if vectors.is_empty() {
            return invalid("empty frame");
        }
        let n = vectors[0].len();
        if vectors.iter().any(|v| v.len() != n) {
            return invalid("frame vectors have different dimensions");
        }
        Self::from_matrix(DMatrix::from_columns(vectors))
    }

    /// First `p` standard basis vectors of `Rⁿ`.
    pub fn standard(n: usize, p: usize) -> Result<Self> {
        if p == 0 || p > n {
            return invalid(format!("frame of {p} vectors in R^{n}"));
        }
        Ok(Self {
            mat: DMatrix::identity(n, p),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn len(&self) -> usize {
        self.mat.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.mat.ncols() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.mat.column(i).into_owned()
    }

    pub fn vectors(&self) -> Vec<DVector<f64>> {
        (0..self.len()).map(|i| self.vector(i)).collect()
    }

    /// `F · Q` for a `p×p` orthogonal `Q`.
    pub fn rotate(&self, q: &DMatrix<f64>) -> Result<Self> {
        if q.shape() != (self.len(), self.len()) {
            return invalid("rotation has the wrong shape");
        }
        Self::from_matrix(&self.mat * q)
    }
}

/// Orthonormalises a linearly independent tuple, preserving span and orientation.
pub fn gram_schmidt(vectors: &[DVector<f64>]) -> Result<Frame> {
    if vectors.is_empty() {
        return invalid("empty input");
    }
    let n = vectors[0].len();
    if vectors.iter().any(|v| v.len() != n) {
        return invalid("vectors have different dimensions");
    }
    if vectors.len() > n {
        return Err(GeomError::Degenerate(format!(
            "{} vectors in R^{n} are dependent",
            vectors.len()
        )));
    }
    let mat = DMatrix::from_columns(vectors);
    let smallest = mat
        .clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(smallest > RANK_TOL) {
        return Err(GeomError::Degenerate(format!(
            "smallest singular value {smallest:.3e} below {RANK_TOL:e}"
        )));
    }
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        // two passes keep FᵀF = I to rounding level
        for _ in 0..2 {
            for u in &out {
                let c = u.dot(&w);
                w.axpy(-c, u, 1.0);
            }
        }
        let norm = w.norm();
        out.push(w / norm);
    }
    Ok(Frame {
        mat: DMatrix::from_columns(&out),
    })
}

/// Orthonormal basis of the orthogonal complement of `span(frame)`, built by
/// sweeping the standard basis in order. Deterministic for a given span.
pub fn orthogonal_complement(frame: &Frame) -> Vec<DVector<f64>> {
    complete_from_standard(&frame.vectors(), frame.dim())
}

/// Extends an orthonormal list by standard basis vectors projected off the
/// current span, taken in index order.
pub(crate) fn complete_from_standard(basis: &[DVector<f64>], n: usize) -> Vec<DVector<f64>> {
    let mut span: Vec<DVector<f64>> = basis.to_vec();
    let mut out = Vec::new();
    for j in 0..n {
        if span.len() == n {
            break;
        }
        let mut w = DVector::zeros(n);
        w[j] = 1.0;
        for _ in 0..2 {
            for u in &span {
                let c = u.dot(&w);
                w.axpy(-c, u, 1.0);
            }
        }
        let norm = w.norm();
        if norm > 1e-6 {
            let w = w / norm;
            span.push(w.clone());
            out.push(w);
        }
    }
    out
}

/// Unit Plücker vector of an oriented frame.
pub fn plucker(frame: &Frame) -> PVector {
    wedge_columns(frame.matrix())
}

/// Decomposability test for bivectors: `|a ∧ a| ≤ tol · |a|²`.
pub fn is_simple(a: &PVector, tol: f64) -> Result<bool> {
    if a.p != 2 {
        return Err(GeomError::UnsupportedGrade(a.p));
    }
    let sq = wedge_square(a);
    let norm = sq.iter().map(|c| c * c).sum::<f64>().sqrt();
    Ok(norm <= tol * pinner(a, a)?)
}

/// Coordinates of `a ∧ a` in `Λ_4(Rⁿ)` for a bivector `a`.
pub(crate) fn wedge_square(a: &PVector) -> Vec<f64> {
    let n = a.n;
    multi_indices(n, 4)
        .iter()
        .map(|q| {
            let (i, j, k, l) = (q[0], q[1], q[2], q[3]);
            2.0 * (a.get(&[i, j]) * a.get(&[k, l]) - a.get(&[i, k]) * a.get(&[j, l]) + a.get(&[i, l]) * a.get(&[j, k]))
        })
        .collect()
}
