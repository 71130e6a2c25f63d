//! Dense complex linear algebra at small fixed dimension.
//!
//! Matrices are nalgebra `DMatrix<Complex64>`; every binary operation checks
//! dimensions. On top of that this module provides Hermitian projections
//! (tracked together with an orthonormal basis of their image), the
//! diagonal-stripping map `ξ ↦ ξ_*`, and a pivot-checked linear solve.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RVector = DVector<f64>;

/// The imaginary unit.
pub const IM: C64 = C64::new(0.0, 1.0);

/// Max-norm tolerance for the idempotency, self-adjointness and realness
/// residuals of a projection.
pub const PROJECTION_TOL: f64 = 1e-12;

/// Relative singular-value threshold for independence of spanning columns.
pub const RANK_TOL: f64 = 1e-10;

/// Relative pivot threshold below which a solve is declared singular.
pub const PIVOT_TOL: f64 = 1e-14;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Max-norm `max |a_ij|` over any matrix or vector.
pub fn max_abs<'a>(entries: impl IntoIterator<Item = &'a C64>) -> f64 {
    entries.into_iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest imaginary part in magnitude.
pub fn max_imag<'a>(entries: impl IntoIterator<Item = &'a C64>) -> f64 {
    entries.into_iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn real_vector(v: &RVector) -> CVector {
    v.map(|x| C64::new(x, 0.0))
}

pub fn real_part(v: &CVector) -> RVector {
    v.map(|z| z.re)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `ξ_* := ξ − Σ ξ_ii e_ii`: zero the diagonal, keep everything else.
pub fn star_reduce(xi: &CMatrix) -> CMatrix {
    assert!(xi.is_square(), "star_reduce needs a square matrix");
    let mut out = xi.clone();
    out.fill_diagonal(C64::new(0.0, 0.0));
    out
}

/// Solve `A X = B` by LU with partial pivoting.
pub fn solve_linear(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "solve_linear: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let scale = max_abs(a);
    let lu = a.clone().lu();
    let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |m, z| m.min(z.norm()));
    let ratio = if scale > 0.0 { min_pivot / scale } else { 0.0 };
    if !(ratio > PIVOT_TOL * a.nrows() as f64) {
        return Err(Error::Singular(ratio));
    }
    lu.solve(b).ok_or(Error::Singular(ratio))
}

pub fn solve_vector(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let x = solve_linear(a, &CMatrix::from_column_slice(b.len(), 1, b.as_slice()))?;
    Ok(CVector::from_column_slice(x.as_slice()))
}

/// A Hermitian projection `π = π² = π*` of `C^n`, stored together with an
/// orthonormal basis of its image.
#[derive(Clone, Debug)]
pub struct HermitianProjection {
    matrix: CMatrix,
    basis: CMatrix,
    rank: usize,
    is_real: bool,
}

impl HermitianProjection {
    /// The Hermitian projection onto the column span of `v`, i.e.
    /// `V (V*V)^{-1} V*`. Computed from a QR basis of the columns.
    pub fn onto_span(v: &CMatrix) -> Result<Self> {
        let (n, k) = v.shape();
        if k == 0 {
            return Ok(Self::zero(n));
        }
        if k > n {
            return Err(Error::RankDeficient { sigma_min: 0.0, threshold: 0.0 });
        }
        if v.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidProjection("spanning matrix has non-finite entries".into()));
        }
        let sv = singular_values(v);
        let threshold = RANK_TOL * sv[0];
        let sigma_min = sv[k - 1];
        if !(sigma_min > threshold) {
            return Err(Error::RankDeficient { sigma_min, threshold });
        }
        let q = v.clone().qr().q();
        let matrix = &q * q.adjoint();
        Self::validated(matrix, q)
    }

    /// Wrap an explicit matrix, checking that it is a Hermitian projection.
    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!("projection must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        let svd = m.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let cols: Vec<_> = (0..svd.singular_values.len())
            .filter(|&j| svd.singular_values[j] > 0.5)
            .map(|j| u.column(j).into_owned())
            .collect();
        let basis = if cols.is_empty() { CMatrix::zeros(n, 0) } else { CMatrix::from_columns(&cols) };
        Self::validated(m.clone(), basis)
    }

    pub fn zero(n: usize) -> Self {
        Self { matrix: CMatrix::zeros(n, n), basis: CMatrix::zeros(n, 0), rank: 0, is_real: true }
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: identity(n), basis: identity(n), rank: n, is_real: true }
    }

    fn validated(mut matrix: CMatrix, basis: CMatrix) -> Result<Self> {
        let idempotency = max_abs(&(&matrix * &matrix - &matrix));
        let adjointness = max_abs(&(&matrix - matrix.adjoint()));
        if !(idempotency < PROJECTION_TOL) || !(adjointness < PROJECTION_TOL) {
            return Err(Error::InvalidProjection(format!(
                "|π²-π| = {idempotency:e}, |π-π*| = {adjointness:e}"
            )));
        }
        let trace = matrix.trace().re;
        let rank = trace.round();
        if (trace - rank).abs() > 1e-8 || rank as usize != basis.ncols() {
            return Err(Error::InvalidProjection(format!(
                "trace {trace} does not match image dimension {}",
                basis.ncols()
            )));
        }
        let is_real = max_imag(&matrix) < PROJECTION_TOL;
        if is_real {
            matrix.iter_mut().for_each(|z| z.im = 0.0);
        }
        Ok(Self { matrix, basis, rank: rank as usize, is_real })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Orthonormal basis of the image, `n × rank`.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    /// `π^⊥ = I − π`.
    pub fn complement(&self) -> Self {
        let m = identity(self.dim()) - &self.matrix;
        Self::from_matrix(&m).expect("complement of a valid projection is a projection")
    }

    /// `π̄`, the projection onto the conjugate image.
    pub fn conj(&self) -> Self {
        if self.is_real {
            return self.clone();
        }
        Self {
            matrix: self.matrix.conjugate(),
            basis: self.basis.conjugate(),
            rank: self.rank,
            is_real: false,
        }
    }

    /// Projection onto `A (Im π)`.
    pub fn transported(&self, a: &CMatrix) -> Result<Self> {
        Self::onto_span(&(a * &self.basis))
    }

    /// `‖π − π'‖_max`.
    pub fn distance(&self, other: &Self) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }

    /// `‖π v‖_2`.
    pub fn apply_norm(&self, v: &CVector) -> f64 {
        (&self.matrix * v).norm()
    }
}

/// Free-function form of [`HermitianProjection::onto_span`].
pub fn project_onto_span(v: &CMatrix) -> Result<HermitianProjection> {
    HermitianProjection::onto_span(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(entries: &[C64]) -> CMatrix {
        CMatrix::from_column_slice(entries.len(), 1, entries)
    }

    #[test]
    fn projection_onto_coordinate_axis() {
        let p = project_onto_span(&col(&[c64(1.0, 0.0), c64(0.0, 0.0)])).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(max_abs(&(p.matrix() - expected)) < 1e-15);
        assert_eq!(p.rank(), 1);
        assert!(p.is_real());
    }

    #[test]
    fn projection_onto_diagonal_line() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = project_onto_span(&col(&[c64(s, 0.0), c64(s, 0.0)])).unwrap();
        for z in p.matrix().iter() {
            assert!((z - c64(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn projection_onto_complex_line_matches_hand_computation() {
        // V = (1, i)ᵗ: V*V = 2, so π = V V* / 2 with (V V*)_{jk} = v_j conj(v_k).
        let v = [c64(1.0, 0.0), c64(0.0, 1.0)];
        let mut expected = CMatrix::zeros(2, 2);
        for j in 0..2 {
            for k in 0..2 {
                expected[(j, k)] = v[j] * v[k].conj() / 2.0;
            }
        }
        assert!((expected[(0, 1)] - c64(0.0, -0.5)).norm() < 1e-16);
        assert!((expected[(1, 0)] - c64(0.0, 0.5)).norm() < 1e-16);
        let p = project_onto_span(&col(&v)).unwrap();
        assert!(max_abs(&(p.matrix() - expected)) < 1e-15);
        assert!(!p.is_real());
    }

    #[test]
    fn dependent_columns_are_rejected() {
        let v = CMatrix::from_row_slice(
            3,
            2,
            &[c64(1.0, 0.0), c64(2.0, 0.0), c64(1.0, 1.0), c64(2.0, 2.0), c64(0.0, 0.0), c64(0.0, 0.0)],
        );
        assert!(matches!(project_onto_span(&v), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn from_matrix_rejects_non_projection() {
        let m = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        assert!(matches!(HermitianProjection::from_matrix(&m), Err(Error::InvalidProjection(_))));
    }

    #[test]
    fn star_reduce_examples() {
        let id = identity(3);
        assert_eq!(star_reduce(&id), CMatrix::zeros(3, 3));
        let m = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0), c64(4.0, 0.0)]);
        let r = star_reduce(&m);
        assert_eq!(r, CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0), c64(0.0, 0.0)]));
    }

    #[test]
    fn star_reduce_of_projection_keeps_off_diagonal() {
        let v = col(&[c64(1.0, 0.0), c64(0.3, -0.2), c64(-0.4, 0.9)]);
        let p = project_onto_span(&v).unwrap();
        let r = star_reduce(p.matrix());
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    assert_eq!(r[(i, j)], c64(0.0, 0.0));
                } else {
                    assert_eq!(r[(i, j)], p.matrix()[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn solve_examples() {
        let b = CMatrix::from_row_slice(2, 2, &[c64(1.0, 2.0), c64(3.0, 0.0), c64(0.0, -1.0), c64(5.0, 5.0)]);
        assert_eq!(solve_linear(&identity(2), &b).unwrap(), b);
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(2.0, 0.0), c64(4.0, 0.0)]));
        let x = solve_vector(&a, &CVector::from_vec(vec![c64(2.0, 0.0), c64(4.0, 0.0)])).unwrap();
        assert!((x[0] - c64(1.0, 0.0)).norm() < 1e-15 && (x[1] - c64(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_solve_is_reported() {
        let a = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(2.0, 0.0), c64(2.0, 0.0), c64(4.0, 0.0)]);
        assert!(matches!(solve_linear(&a, &identity(2)), Err(Error::Singular(_))));
    }

    fn cmatrix(n: usize, m: usize) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * m)
            .prop_map(move |e| CMatrix::from_iterator(n, m, e.into_iter().map(|(a, b)| c64(a, b))))
    }

    proptest! {
        #[test]
        fn solve_residual_is_small(a in cmatrix(4, 4), b in cmatrix(4, 2)) {
            // Diagonal shift keeps A well conditioned.
            let a = a + identity(4) * c64(4.0, 0.0);
            let x = solve_linear(&a, &b).unwrap();
            prop_assert!(max_abs(&(&a * &x - &b)) < 1e-12);
        }

        #[test]
        fn projection_ignores_change_of_basis(v in cmatrix(4, 2), g in cmatrix(2, 2)) {
            let g = g + identity(2) * c64(3.0, 0.0);
            let p = project_onto_span(&v);
            prop_assume!(p.is_ok());
            let p = p.unwrap();
            prop_assume!(singular_values(&v)[1] > 1e-3);
            let q = project_onto_span(&(&v * g)).unwrap();
            prop_assert!(p.distance(&q) < 1e-12);
        }

        #[test]
        fn reflection_through_projection_is_unitary(v in cmatrix(3, 2)) {
            prop_assume!(singular_values(&v)[1] > 1e-3);
            let p = project_onto_span(&v).unwrap();
            let r = identity(3) - p.matrix() * c64(2.0, 0.0);
            prop_assert!(max_abs(&(r.adjoint() * &r - identity(3))) < 1e-12);
            prop_assert_eq!(p.rank(), 2);
        }

        #[test]
        fn star_reduce_is_linear_and_idempotent(a in cmatrix(3, 3), b in cmatrix(3, 3), s in -2.0f64..2.0) {
            let once = star_reduce(&a);
            prop_assert_eq!(star_reduce(&once), once.clone());
            let lhs = star_reduce(&(&a + &b * c64(s, 0.0)));
            let rhs = once + star_reduce(&b) * c64(s, 0.0);
            prop_assert!(max_abs(&(lhs - rhs)) < 1e-15);
        }
    }
}
