//! Two-qubit state representation.
//!
//! States live in the computational basis `|00>, |01>, |10>, |11>` with the
//! Pauli convention `sigma_1 = X`, `sigma_2 = Y`, `sigma_3 = Z`. A state can be
//! moved between its 4x4 matrix form and its Fano form
//!
//! ```text
//! rho = 1/4 (I⊗I + a·sigma⊗I + I⊗b·sigma + sum_ij t_ij sigma_i⊗sigma_j)
//! ```
//!
//! and reduced to the local-unitary invariants consumed by the measures.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix3, Matrix4, SymmetricEigen, Vector3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<Complex64>;
pub type Mat4 = Matrix4<Complex64>;

/// Single physicality epsilon used by every validation step.
pub const PHYSICALITY_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Pauli matrix `sigma_k`, with `k = 0` the identity.
pub fn pauli(k: usize) -> Mat2 {
    match k {
        0 => Mat2::new(ONE, ZERO, ZERO, ONE),
        1 => Mat2::new(ZERO, ONE, ONE, ZERO),
        2 => Mat2::new(ZERO, -I, I, ZERO),
        3 => Mat2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("pauli index {k} out of range"),
    }
}

pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// `Tr(rho * P)` for `P = sigma_i ⊗ sigma_j`.
fn pauli_expectation(rho: &Mat4, i: usize, j: usize) -> Complex64 {
    let p = kron(&pauli(i), &pauli(j));
    let mut acc = ZERO;
    for r in 0..4 {
        for c in 0..4 {
            acc += rho[(r, c)] * p[(c, r)];
        }
    }
    acc
}

fn hermitian_spectrum(m: &Mat4) -> SymmetricEigen<Complex64, nalgebra::U4> {
    SymmetricEigen::new(*m)
}

/// A validated two-qubit density matrix: Hermitian, unit trace, positive
/// semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: Mat4,
}

impl DensityMatrix {
    /// Validates a raw matrix. Eigenvalues in `[-1e-9, 0)` are clamped to zero
    /// and the trace is renormalized afterwards.
    pub fn new(raw: Mat4) -> Result<Self> {
        let mut deviation: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                deviation = deviation.max((raw[(r, c)] - raw[(c, r)].conj()).norm());
            }
        }
        if !deviation.is_finite() || deviation > PHYSICALITY_TOL {
            return Err(Error::NotHermitian {
                deviation,
                tol: PHYSICALITY_TOL,
            });
        }
        let tr = raw.trace();
        if (tr - ONE).norm() > PHYSICALITY_TOL {
            return Err(Error::TraceNotOne {
                re: tr.re,
                im: tr.im,
                tol: PHYSICALITY_TOL,
            });
        }

        let herm = (raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = hermitian_spectrum(&herm);
        let min = eig.eigenvalues.min();
        if min < -PHYSICALITY_TOL {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
                tol: PHYSICALITY_TOL,
            });
        }
        let m = if min < 0.0 {
            let clamped = eig.eigenvalues.map(|x| Complex64::new(x.max(0.0), 0.0));
            let v = &eig.eigenvectors;
            v * Mat4::from_diagonal(&clamped) * v.adjoint()
        } else {
            herm
        };
        let tr = m.trace().re;
        Ok(Self { m: m.unscale(tr) })
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: Mat4::identity().unscale(4.0),
        }
    }

    /// Projector onto a (not necessarily normalized) pure state.
    pub fn from_pure(psi: &Vector4<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Domain("pure state vector has zero norm".into()));
        }
        let psi = psi.unscale(norm);
        Self::new(psi * psi.adjoint())
    }

    pub fn bell(which: BellState) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = |x: f64| Complex64::new(x, 0.0);
        let psi = match which {
            BellState::PhiPlus => Vector4::new(c(h), ZERO, ZERO, c(h)),
            BellState::PhiMinus => Vector4::new(c(h), ZERO, ZERO, c(-h)),
            BellState::PsiPlus => Vector4::new(ZERO, c(h), c(h), ZERO),
            BellState::PsiMinus => Vector4::new(ZERO, c(h), c(-h), ZERO),
        };
        Self::from_pure(&psi).expect("Bell states are normalized")
    }

    /// Werner state `w |Psi-><Psi-| + (1 - w) I/4` for `w` in `[0, 1]`.
    pub fn werner(w: f64) -> Result<Self> {
        check_werner_parameter(w)?;
        let singlet = Self::bell(BellState::PsiMinus);
        let m = singlet.m * Complex64::new(w, 0.0) + Mat4::identity() * Complex64::new((1.0 - w) / 4.0, 0.0);
        Self::new(m)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    /// `(U_A ⊗ U_B) rho (U_A ⊗ U_B)^dagger`.
    pub fn apply_local_unitary(&self, ua: &Mat2, ub: &Mat2) -> Result<Self> {
        let u = kron(ua, ub);
        Self::new(u * self.m * u.adjoint())
    }

    /// Convex combination `p * self + (1 - p) * other`.
    pub fn mix(&self, p: f64, other: &DensityMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("mixing weight {p} outside [0, 1]")));
        }
        Self::new(self.m * Complex64::new(p, 0.0) + other.m * Complex64::new(1.0 - p, 0.0))
    }

    pub fn fano(&self) -> FanoForm {
        FanoForm::decompose(self)
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Real eigenvalues, sorted descending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = hermitian_spectrum(&self.m);
        let mut out = [0.0; 4];
        for (o, e) in out.iter_mut().zip(eig.eigenvalues.iter()) {
            *o = *e;
        }
        out.sort_by(|a, b| b.total_cmp(a));
        out
    }
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

pub fn eigvals_hermitian(rho: &DensityMatrix) -> [f64; 4] {
    rho.eigenvalues()
}

pub(crate) fn check_werner_parameter(w: f64) -> Result<()> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::Domain(format!("Werner parameter w = {w} outside [0, 1]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellState {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl FromStr for BellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi+" => Ok(Self::PhiPlus),
            "phi-" => Ok(Self::PhiMinus),
            "psi+" => Ok(Self::PsiPlus),
            "psi-" => Ok(Self::PsiMinus),
            other => Err(Error::InvalidDocument(format!(
                "unknown Bell state {other:?}; expected phi+, phi-, psi+ or psi-"
            ))),
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PhiPlus => "phi+",
            Self::PhiMinus => "phi-",
            Self::PsiPlus => "psi+",
            Self::PsiMinus => "psi-",
        })
    }
}

/// Local Bloch vectors and correlation matrix of a two-qubit state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FanoDoc", into = "FanoDoc")]
pub struct FanoForm {
    a: Vector3<f64>,
    b: Vector3<f64>,
    t: Matrix3<f64>,
}

impl FanoForm {
    /// Checks the norm bounds `|a|, |b| <= 1` and `a^2 + b^2 + |T|_F^2 <= 3`.
    /// Physicality beyond these bounds is only checked by [`FanoForm::compose`].
    pub fn new(a: Vector3<f64>, b: Vector3<f64>, t: Matrix3<f64>) -> Result<Self> {
        let finite = a.iter().chain(b.iter()).chain(t.iter()).all(|x| x.is_finite());
        if !finite {
            return Err(Error::FanoOutOfBounds("non-finite component".into()));
        }
        if a.norm() > 1.0 + PHYSICALITY_TOL {
            return Err(Error::FanoOutOfBounds(format!("|a| = {} > 1", a.norm())));
        }
        if b.norm() > 1.0 + PHYSICALITY_TOL {
            return Err(Error::FanoOutOfBounds(format!("|b| = {} > 1", b.norm())));
        }
        let total = a.norm_squared() + b.norm_squared() + t.norm_squared();
        if total > 3.0 + PHYSICALITY_TOL {
            return Err(Error::FanoOutOfBounds(format!("a^2 + b^2 + |T|_F^2 = {total} > 3")));
        }
        Ok(Self { a, b, t })
    }

    /// Canonical form with diagonal correlation matrix `diag(c)`.
    pub fn canonical(a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>) -> Result<Self> {
        Self::new(a, b, Matrix3::from_diagonal(&c))
    }

    pub fn decompose(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let a = Vector3::from_fn(|i, _| pauli_expectation(m, i + 1, 0).re);
        let b = Vector3::from_fn(|j, _| pauli_expectation(m, 0, j + 1).re);
        let t = Matrix3::from_fn(|i, j| pauli_expectation(m, i + 1, j + 1).re);
        Self { a, b, t }
    }

    pub fn compose(&self) -> Result<DensityMatrix> {
        let re = |x: f64| Complex64::new(x, 0.0);
        let mut m = kron(&pauli(0), &pauli(0));
        for i in 0..3 {
            m += kron(&pauli(i + 1), &pauli(0)) * re(self.a[i]);
            m += kron(&pauli(0), &pauli(i + 1)) * re(self.b[i]);
            for j in 0..3 {
                m += kron(&pauli(i + 1), &pauli(j + 1)) * re(self.t[(i, j)]);
            }
        }
        DensityMatrix::new(m * re(0.25))
    }

    pub fn a(&self) -> &Vector3<f64> {
        &self.a
    }

    pub fn b(&self) -> &Vector3<f64> {
        &self.b
    }

    pub fn t(&self) -> &Matrix3<f64> {
        &self.t
    }

    /// `1/4 (1 + a^2 + b^2 + |T|_F^2)`.
    pub fn purity(&self) -> f64 {
        0.25 * (1.0 + self.a.norm_squared() + self.b.norm_squared() + self.t.norm_squared())
    }

    pub fn canonical_coefficients(&self) -> CanonicalCoefficients {
        CanonicalCoefficients::from_correlation(&self.t)
    }
}

pub fn fano_decompose(rho: &DensityMatrix) -> FanoForm {
    FanoForm::decompose(rho)
}

pub fn fano_compose(f: &FanoForm) -> Result<DensityMatrix> {
    f.compose()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FanoDoc {
    a: [f64; 3],
    b: [f64; 3],
    #[serde(rename = "T")]
    t: [[f64; 3]; 3],
}

impl TryFrom<FanoDoc> for FanoForm {
    type Error = Error;

    fn try_from(doc: FanoDoc) -> Result<Self> {
        FanoForm::new(
            Vector3::from(doc.a),
            Vector3::from(doc.b),
            Matrix3::from_fn(|i, j| doc.t[i][j]),
        )
    }
}

impl From<FanoForm> for FanoDoc {
    fn from(f: FanoForm) -> Self {
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = f.t[(i, j)];
            }
        }
        FanoDoc {
            a: f.a.into(),
            b: f.b.into(),
            t,
        }
    }
}

/// Singular values of the correlation matrix, sorted descending.
///
/// The measures only consume `c^2 = sum sigma_i^2` and `c_min = sigma_3`,
/// both invariant under local unitaries and under the sign ambiguity of the
/// canonical diagonal form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCoefficients {
    pub sigma: [f64; 3],
    pub c_sq: f64,
    pub c_min: f64,
}

impl CanonicalCoefficients {
    pub fn from_correlation(t: &Matrix3<f64>) -> Self {
        let sv = t.singular_values();
        let mut sigma = [sv[0].abs(), sv[1].abs(), sv[2].abs()];
        sigma.sort_by(|a, b| b.total_cmp(a));
        Self::from_sorted(sigma)
    }

    /// Builds coefficients from given singular values (any order, any sign).
    pub fn from_singular_values(values: [f64; 3]) -> Result<Self> {
        let mut sigma = values.map(f64::abs);
        if sigma.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCoefficients("non-finite value".into()));
        }
        sigma.sort_by(|a, b| b.total_cmp(a));
        let c = Self::from_sorted(sigma);
        if c.sigma[0] > 1.0 + PHYSICALITY_TOL {
            return Err(Error::InvalidCoefficients(format!(
                "largest singular value {} > 1",
                c.sigma[0]
            )));
        }
        if c.c_sq > 3.0 + PHYSICALITY_TOL {
            return Err(Error::InvalidCoefficients(format!("c^2 = {} > 3", c.c_sq)));
        }
        Ok(c)
    }

    fn from_sorted(sigma: [f64; 3]) -> Self {
        Self {
            sigma,
            c_sq: sigma.iter().map(|s| s * s).sum(),
            c_min: sigma[2],
        }
    }
}

pub fn canonical_coefficients(f: &FanoForm) -> CanonicalCoefficients {
    f.canonical_coefficients()
}

/// Diagonal entries and anti-diagonal moduli of an X state after its phases
/// have been removed by a local `e^{-i phi sigma_3}` rotation on each qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XStateParams {
    pub d: [f64; 4],
    pub r14: f64,
    pub r23: f64,
}

const OFF_X: [(usize, usize); 8] = [(0, 1), (0, 2), (1, 0), (1, 3), (2, 0), (2, 3), (3, 1), (3, 2)];

impl XStateParams {
    pub fn new(d: [f64; 4], r14: f64, r23: f64) -> Result<Self> {
        let sum: f64 = d.iter().sum();
        if (sum - 1.0).abs() > PHYSICALITY_TOL {
            return Err(Error::InvalidXState(format!("diagonal sums to {sum}")));
        }
        if let Some(x) = d.iter().find(|x| **x < -PHYSICALITY_TOL) {
            return Err(Error::InvalidXState(format!("negative diagonal entry {x}")));
        }
        if r14 < 0.0 || r23 < 0.0 {
            return Err(Error::InvalidXState("negative anti-diagonal modulus".into()));
        }
        let outer = (d[0].max(0.0) * d[3].max(0.0)).sqrt();
        let inner = (d[1].max(0.0) * d[2].max(0.0)).sqrt();
        if r14 > outer + PHYSICALITY_TOL {
            return Err(Error::InvalidXState(format!(
                "|rho_14| = {r14} > sqrt(rho_11 rho_44) = {outer}"
            )));
        }
        if r23 > inner + PHYSICALITY_TOL {
            return Err(Error::InvalidXState(format!(
                "|rho_23| = {r23} > sqrt(rho_22 rho_33) = {inner}"
            )));
        }
        Ok(Self { d, r14, r23 })
    }

    /// Reads the X-state parameters off `rho`, failing if any off-X entry is
    /// larger than `tol`.
    pub fn reduce(rho: &DensityMatrix, tol: f64) -> Result<Self> {
        for &(row, col) in &OFF_X {
            let magnitude = rho.entry(row, col).norm();
            if magnitude > tol {
                return Err(Error::NotXState {
                    row: row + 1,
                    col: col + 1,
                    magnitude,
                    tol,
                });
            }
        }
        let d = [0, 1, 2, 3].map(|k| rho.entry(k, k).re);
        Self::new(d, rho.entry(0, 3).norm(), rho.entry(1, 2).norm())
    }

    /// The real X-state matrix with `|rho_14|` and `|rho_23|` on the anti-diagonal.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let re = |x: f64| Complex64::new(x, 0.0);
        let mut m = Mat4::from_diagonal(&Vector4::from(self.d.map(re)));
        m[(0, 3)] = re(self.r14);
        m[(3, 0)] = re(self.r14);
        m[(1, 2)] = re(self.r23);
        m[(2, 1)] = re(self.r23);
        DensityMatrix::new(m)
    }
}

pub fn x_reduce(rho: &DensityMatrix, tol: f64) -> Result<XStateParams> {
    XStateParams::reduce(rho, tol)
}

/// `U = U_+ ⊗ U_-` with `U_± = exp(-i phi_± sigma_3)` and
/// `phi_± = (phi_14 ± phi_23) / 4`; conjugating an X state by `U` makes its
/// anti-diagonal real and non-negative.
pub fn x_phase_unitary(rho: &DensityMatrix) -> Mat4 {
    let phi14 = rho.entry(0, 3).arg();
    let phi23 = rho.entry(1, 2).arg();
    let phase = |phi: f64| {
        Mat2::new(
            Complex64::from_polar(1.0, -phi),
            ZERO,
            ZERO,
            Complex64::from_polar(1.0, phi),
        )
    };
    kron(&phase(0.25 * (phi14 + phi23)), &phase(0.25 * (phi14 - phi23)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_entry_diff(a: &Mat4, b: &Mat4) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn maximally_mixed_is_valid() {
        let rho = DensityMatrix::new(Mat4::identity().unscale(4.0)).unwrap();
        assert_eq!(rho, DensityMatrix::maximally_mixed());
        assert_abs_diff_eq!(rho.purity(), 0.25, epsilon = 1e-15);
        for l in rho.eigenvalues() {
            assert_abs_diff_eq!(l, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn phi_plus_projector_is_valid() {
        let mut m = Mat4::zeros();
        for (r, col) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(r, col)] = c(0.5, 0.0);
        }
        let rho = DensityMatrix::new(m).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-14);
        let ev = rho.eigenvalues();
        assert_abs_diff_eq!(ev[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[3], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        let m = Mat4::from_diagonal(&Vector4::new(c(0.6, 0.0), c(0.3, 0.0), c(0.2, 0.0), c(-0.1, 0.0)));
        match DensityMatrix::new(m) {
            Err(Error::NotPositive { min_eigenvalue, .. }) => {
                assert_abs_diff_eq!(min_eigenvalue, -0.1, epsilon = 1e-12)
            }
            other => panic!("expected NotPositive, got {other:?}"),
        }
    }

    #[test]
    fn rejects_non_hermitian_and_bad_trace() {
        let mut m = Mat4::identity().unscale(4.0);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian { .. })));
        let m = Mat4::identity().unscale(2.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::TraceNotOne { .. })));
    }

    #[test]
    fn clamps_tiny_negative_eigenvalue() {
        let m = Mat4::from_diagonal(&Vector4::new(
            c(0.5, 0.0),
            c(0.5 + 5e-10, 0.0),
            c(0.0, 0.0),
            c(-5e-10, 0.0),
        ));
        let rho = DensityMatrix::new(m).unwrap();
        assert!(rho.eigenvalues()[3] >= 0.0);
        assert_abs_diff_eq!(rho.matrix().trace().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn fano_of_phi_plus_and_werner() {
        let f = DensityMatrix::bell(BellState::PhiPlus).fano();
        assert_abs_diff_eq!(f.a().norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.b().norm(), 0.0, epsilon = 1e-15);
        let expected = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
        assert_abs_diff_eq!((f.t() - expected).amax(), 0.0, epsilon = 1e-14);

        let w = 0.37;
        let f = DensityMatrix::werner(w).unwrap().fano();
        assert_abs_diff_eq!(f.a().norm() + f.b().norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((f.t() + Matrix3::identity() * w).amax(), 0.0, epsilon = 1e-14);

        let f = DensityMatrix::maximally_mixed().fano();
        assert_eq!(f.t().amax(), 0.0);
    }

    #[test]
    fn compose_werner_spectrum() {
        let f = FanoForm::canonical(Vector3::zeros(), Vector3::zeros(), Vector3::repeat(-0.5)).unwrap();
        let ev = f.compose().unwrap().eigenvalues();
        assert_abs_diff_eq!(ev[0], 0.625, epsilon = 1e-14);
        for l in &ev[1..] {
            assert_abs_diff_eq!(*l, 0.125, epsilon = 1e-14);
        }
        let zero = FanoForm::canonical(Vector3::zeros(), Vector3::zeros(), Vector3::zeros()).unwrap();
        assert_abs_diff_eq!(
            max_entry_diff(
                zero.compose().unwrap().matrix(),
                DensityMatrix::maximally_mixed().matrix()
            ),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn compose_rejects_unphysical_correlations() {
        // eigenvalues of 1/4 (I + XX + YY + ZZ) are {1/2, 1/2, 1/2, -1/2}
        let f = FanoForm::canonical(Vector3::zeros(), Vector3::zeros(), Vector3::repeat(1.0)).unwrap();
        match f.compose() {
            Err(Error::NotPositive { min_eigenvalue, .. }) => {
                assert_abs_diff_eq!(min_eigenvalue, -0.5, epsilon = 1e-12)
            }
            other => panic!("expected NotPositive, got {other:?}"),
        }
        assert!(FanoForm::new(Vector3::new(1.5, 0.0, 0.0), Vector3::zeros(), Matrix3::zeros()).is_err());
    }

    #[test]
    fn canonical_coefficients_examples() {
        let c = CanonicalCoefficients::from_correlation(&Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0)));
        assert_eq!(c.sigma, [1.0, 1.0, 1.0]);
        assert_abs_diff_eq!(c.c_sq, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.c_min, 1.0, epsilon = 1e-14);

        let c = CanonicalCoefficients::from_correlation(&(Matrix3::identity() * -0.8));
        for s in c.sigma {
            assert_abs_diff_eq!(s, 0.8, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(c.c_sq, 1.92, epsilon = 1e-14);
        assert_abs_diff_eq!(c.c_min, 0.8, epsilon = 1e-14);
    }

    #[test]
    fn purity_examples() {
        assert_abs_diff_eq!(DensityMatrix::werner(0.6).unwrap().purity(), 0.52, epsilon = 1e-14);
        assert_abs_diff_eq!(DensityMatrix::bell(BellState::PsiPlus).purity(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn werner_eigenvalues() {
        let ev = DensityMatrix::werner(0.8).unwrap().eigenvalues();
        assert_abs_diff_eq!(ev[0], 0.85, epsilon = 1e-14);
        for l in &ev[1..] {
            assert_abs_diff_eq!(*l, 0.05, epsilon = 1e-14);
        }
        assert!(DensityMatrix::werner(1.2).is_err());
    }

    #[test]
    fn x_reduce_werner() {
        let w = 0.8;
        let x = XStateParams::reduce(&DensityMatrix::werner(w).unwrap(), 1e-12).unwrap();
        let expected = [(1.0 - w) / 4.0, (1.0 + w) / 4.0, (1.0 + w) / 4.0, (1.0 - w) / 4.0];
        for (got, want) in x.d.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(x.r14, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.r23, w / 2.0, epsilon = 1e-14);
    }

    fn phased_x_state() -> DensityMatrix {
        let mut m = Mat4::from_diagonal(&Vector4::new(c(0.3, 0.0), c(0.2, 0.0), c(0.4, 0.0), c(0.1, 0.0)));
        let r23 = Complex64::from_polar(0.25, std::f64::consts::PI / 3.0);
        let r14 = Complex64::from_polar(0.1, -std::f64::consts::PI / 5.0);
        m[(1, 2)] = r23;
        m[(2, 1)] = r23.conj();
        m[(0, 3)] = r14;
        m[(3, 0)] = r14.conj();
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn x_reduce_absorbs_phases() {
        let rho = phased_x_state();
        let x = x_reduce(&rho, 1e-12).unwrap();
        assert_abs_diff_eq!(x.r23, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(x.r14, 0.1, epsilon = 1e-15);
        assert_eq!(x.d, [0.3, 0.2, 0.4, 0.1]);

        // applying U explicitly yields the real form
        let u = x_phase_unitary(&rho);
        let rotated = u * rho.matrix() * u.adjoint();
        let real = x.to_density().unwrap();
        assert_abs_diff_eq!(max_entry_diff(&rotated, real.matrix()), 0.0, epsilon = 1e-15);

        let (ea, eb) = (rho.eigenvalues(), real.eigenvalues());
        for k in 0..4 {
            assert_abs_diff_eq!(ea[k], eb[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn x_reduce_rejects_off_x_entries() {
        let mut m = DensityMatrix::maximally_mixed().matrix().clone_owned();
        m[(0, 1)] = c(0.05, 0.0);
        m[(1, 0)] = c(0.05, 0.0);
        let rho = DensityMatrix::new(m).unwrap();
        assert!(matches!(
            x_reduce(&rho, 1e-3),
            Err(Error::NotXState { row: 1, col: 2, .. })
        ));
    }

    #[test]
    fn fano_json_uses_row_major_t() {
        let t = Matrix3::new(0.1, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3);
        let f = FanoForm::new(Vector3::zeros(), Vector3::new(0.0, 0.0, 0.1), t).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(
            json,
            r#"{"a":[0.0,0.0,0.0],"b":[0.0,0.0,0.1],"T":[[0.1,0.2,0.0],[0.0,0.0,0.0],[0.0,0.0,0.3]]}"#
        );
        let back: FanoForm = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }

    fn arb_state() -> impl Strategy<Value = DensityMatrix> {
        proptest::collection::vec(-1.0f64..1.0, 32).prop_map(|xs| {
            let g = Mat4::from_fn(|r, col| c(xs[2 * (4 * r + col)], xs[2 * (4 * r + col) + 1]));
            let m = g * g.adjoint();
            let tr = m.trace().re;
            DensityMatrix::new(m.unscale(tr)).unwrap()
        })
    }

    fn arb_su2() -> impl Strategy<Value = Mat2> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("nonzero quaternion", |(a, b, cc, d)| {
                a * a + b * b + cc * cc + d * d > 1e-3
            })
            .prop_map(|(a, b, cc, d)| {
                let n = (a * a + b * b + cc * cc + d * d).sqrt();
                let (a, b, cc, d) = (a / n, b / n, cc / n, d / n);
                Mat2::new(c(a, -d), c(-cc, -b), c(cc, -b), c(a, d))
            })
    }

    proptest! {
        #[test]
        fn compose_decompose_round_trip(rho in arb_state()) {
            let f = rho.fano();
            let back = f.compose().unwrap();
            prop_assert!(max_entry_diff(back.matrix(), rho.matrix()) <= 1e-12);
            let f2 = back.fano();
            prop_assert!((f2.t() - f.t()).amax() <= 1e-12);
            prop_assert!((f2.a() - f.a()).amax() <= 1e-12);
            prop_assert!((f2.b() - f.b()).amax() <= 1e-12);
        }

        #[test]
        fn purity_matches_fano_form(rho in arb_state()) {
            prop_assert!((rho.purity() - rho.fano().purity()).abs() <= 1e-12);
            prop_assert!(rho.purity() >= 0.25 - 1e-12 && rho.purity() <= 1.0 + 1e-9);
            let ev = rho.eigenvalues();
            prop_assert!((ev.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(ev.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn local_unitary_invariance(rho in arb_state(), ua in arb_su2(), ub in arb_su2()) {
            let moved = rho.apply_local_unitary(&ua, &ub).unwrap();
            let (c0, c1) = (rho.fano().canonical_coefficients(), moved.fano().canonical_coefficients());
            for k in 0..3 {
                prop_assert!((c0.sigma[k] - c1.sigma[k]).abs() <= 1e-9);
            }
            prop_assert!((rho.purity() - moved.purity()).abs() <= 1e-9);
            let (e0, e1) = (rho.eigenvalues(), moved.eigenvalues());
            for k in 0..4 {
                prop_assert!((e0[k] - e1[k]).abs() <= 1e-9);
            }
        }

        #[test]
        fn coefficients_invariant_under_row_rotation(
            rho in arb_state(),
            axis in proptest::array::uniform3(-3.0f64..3.0),
        ) {
            let f = rho.fano();
            let r = nalgebra::Rotation3::new(Vector3::from(axis));
            let rotated = r.matrix() * f.t();
            let (c0, c1) = (f.canonical_coefficients(), CanonicalCoefficients::from_correlation(&rotated));
            for k in 0..3 {
                prop_assert!((c0.sigma[k] - c1.sigma[k]).abs() <= 1e-12);
            }
        }
    }
}
