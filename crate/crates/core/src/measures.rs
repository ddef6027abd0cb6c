//! Closed-form steering, nonlocality and entanglement quantifiers.
//!
//! Steering in the n-setting scenario is the normalized maximal violation
//!
//! ```text
//! S_n = max{0, (Λ_n - 1) / (sqrt(n) - 1)},   Λ_2 = sqrt(c^2 - c_min^2),   Λ_3 = c
//! ```
//!
//! where `c^2` and `c_min` come from [`CanonicalCoefficients`]. The CHSH
//! nonlocality `N_2` uses the same expression as `S_2`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::{Schur, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{
    check_werner_parameter, kron, pauli, CanonicalCoefficients, DensityMatrix, FanoForm, XStateParams, PHYSICALITY_TOL,
};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Tolerance on imaginary parts and negative real parts of the spectrum of
/// `rho * rho_tilde`.
pub const SPECTRUM_TOL: f64 = 1e-8;
/// Eigenvalues of a density matrix below this are rounding noise.
const NULL_EIGENVALUE: f64 = 1e-14;

/// `max_mu F_2` for both the CJWR and the CHSH-like steering functional.
pub fn f2_closed(c: &CanonicalCoefficients) -> f64 {
    (c.c_sq - c.c_min * c.c_min).max(0.0).sqrt()
}

/// `max_mu F_3` of the CJWR functional.
pub fn f3_closed(c: &CanonicalCoefficients) -> f64 {
    c.c_sq.max(0.0).sqrt()
}

fn normalized_violation(lambda: f64, f_max: f64) -> f64 {
    ((lambda - 1.0) / (f_max - 1.0)).clamp(0.0, 1.0)
}

pub fn steering_s2(c: &CanonicalCoefficients) -> f64 {
    normalized_violation(f2_closed(c), SQRT_2)
}

pub fn steering_s3(c: &CanonicalCoefficients) -> f64 {
    normalized_violation(f3_closed(c), SQRT_3)
}

/// CHSH nonlocality; identical to [`steering_s2`].
pub fn nonlocality_n2(c: &CanonicalCoefficients) -> f64 {
    steering_s2(c)
}

/// Sum of the two largest eigenvalues of `T^T T`.
pub fn horodecki_m(f: &FanoForm) -> f64 {
    let t = f.t();
    let eig = SymmetricEigen::new(t.transpose() * t);
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    (ev[0] + ev[1]).max(0.0)
}

/// Maximal CHSH value `2 sqrt(M_T)`; the CHSH inequality is violated iff this exceeds 2.
pub fn bell_chsh_max(f: &FanoForm) -> f64 {
    2.0 * horodecki_m(f).sqrt()
}

/// Wootters concurrence from the spectrum of `rho (sigma_y ⊗ sigma_y) rho^* (sigma_y ⊗ sigma_y)`.
///
/// The product is not Hermitian, so its eigenvalues come from a complex Schur
/// decomposition.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    let yy = kron(&pauli(2), &pauli(2));
    let m = rho.matrix();
    let tilde = yy * m.map(|z| z.conj()) * yy;
    let product = m * tilde;
    let eigs = Schur::new(product).eigenvalues().ok_or(Error::SpectrumNotReal {
        re: f64::NAN,
        im: f64::NAN,
    })?;
    for z in eigs.iter() {
        real_root(*z)?;
    }

    // The square roots of the spectrum are the singular values of
    // tau = X^T (Y⊗Y) X with rho = X X^†. Taking them directly avoids the
    // sqrt of rounding-level eigenvalues for rank-deficient states.
    let eigen = SymmetricEigen::new(*m);
    let mut x = eigen.eigenvectors;
    for (k, p) in eigen.eigenvalues.iter().enumerate() {
        let p = if *p < NULL_EIGENVALUE { 0.0 } else { *p };
        x.column_mut(k).scale_mut(p.sqrt());
    }
    let tau = x.transpose() * yy * x;
    let mut roots: Vec<f64> = tau.singular_values().iter().copied().collect();
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok((roots[0] - roots[1] - roots[2] - roots[3]).clamp(0.0, 1.0))
}

fn real_root(z: Complex64) -> Result<f64> {
    if z.im.abs() > SPECTRUM_TOL || z.re < -SPECTRUM_TOL || !z.re.is_finite() {
        return Err(Error::SpectrumNotReal { re: z.re, im: z.im });
    }
    Ok(z.re.max(0.0).sqrt())
}

/// Concurrence of an X state, `2 max{0, |rho_23| - sqrt(rho_11 rho_44), |rho_14| - sqrt(rho_22 rho_33)}`.
pub fn x_concurrence(x: &XStateParams) -> f64 {
    let d = x.d.map(|v| v.max(0.0));
    let outer = x.r23 - (d[0] * d[3]).sqrt();
    let inner = x.r14 - (d[1] * d[2]).sqrt();
    (2.0 * outer.max(inner).max(0.0)).min(1.0)
}

/// Concurrence of the canonical X state with `a = (0,0,a3)`, `b = (0,0,b3)`,
/// `T = diag(c)`, via `E = 1/2 max{0, chi_+, chi_-}` with
/// `chi_± = |c1 ± c2| - sqrt((1 ± c3)^2 - (a3 ± b3)^2)`.
pub fn canonical_x_concurrence(a3: f64, b3: f64, c: [f64; 3]) -> Result<f64> {
    let chi = |sign: f64| -> Result<f64> {
        let radicand = (1.0 + sign * c[2]).powi(2) - (a3 + sign * b3).powi(2);
        if radicand < -PHYSICALITY_TOL {
            return Err(Error::Unphysical(format!(
                "(1 ± c3)^2 < (a3 ± b3)^2 for sign {sign}: radicand {radicand}"
            )));
        }
        Ok((c[0] + sign * c[1]).abs() - radicand.max(0.0).sqrt())
    };
    let (plus, minus) = (chi(1.0)?, chi(-1.0)?);
    FanoForm::canonical(Vector3::new(0.0, 0.0, a3), Vector3::new(0.0, 0.0, b3), Vector3::from(c))
        .and_then(|f| f.compose())
        .map_err(|e| Error::Unphysical(e.to_string()))?;
    Ok((0.5 * plus.max(minus).max(0.0)).min(1.0))
}

/// `max{0, 2 lambda_1 - 1}` for a Bell-diagonal state with largest eigenvalue `lambda_1`.
pub fn bell_diagonal_concurrence(lambda1: f64) -> f64 {
    (2.0 * lambda1 - 1.0).max(0.0)
}

/// Three-setting steering of a Bell-diagonal state from its purity,
/// `max{0, (sqrt(4P - 1) - 1) / (sqrt(3) - 1)}`.
pub fn s3_from_purity(purity: f64) -> Result<f64> {
    if !(0.25 - PHYSICALITY_TOL..=1.0 + PHYSICALITY_TOL).contains(&purity) {
        return Err(Error::Domain(format!("purity {purity} outside [0.25, 1]")));
    }
    let lambda = (4.0 * purity - 1.0).max(0.0).sqrt();
    Ok(normalized_violation(lambda, SQRT_3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub f2: f64,
    pub f3: f64,
    pub s2: f64,
    pub s3: f64,
    pub n2: f64,
    pub m_horodecki: f64,
    pub b_max: f64,
    pub concurrence: f64,
    pub purity: f64,
}

impl MeasureReport {
    pub const CSV_HEADER: &'static str = "f2,f3,s2,s3,n2,m_horodecki,b_max,concurrence,purity";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.f2, self.f3, self.s2, self.s3, self.n2, self.m_horodecki, self.b_max, self.concurrence, self.purity
        )
    }
}

pub fn analyze(rho: &DensityMatrix) -> Result<MeasureReport> {
    let fano = rho.fano();
    let c = fano.canonical_coefficients();
    let m_horodecki = horodecki_m(&fano);
    Ok(MeasureReport {
        f2: f2_closed(&c),
        f3: f3_closed(&c),
        s2: steering_s2(&c),
        s3: steering_s3(&c),
        n2: nonlocality_n2(&c),
        m_horodecki,
        b_max: 2.0 * m_horodecki.sqrt(),
        concurrence: concurrence(rho)?,
        purity: rho.purity(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WernerReport {
    pub w: f64,
    pub e: f64,
    pub s3: f64,
    pub s2: f64,
    pub n2: f64,
    pub n3: f64,
    pub purity: f64,
    pub lambda1: f64,
}

impl WernerReport {
    pub const CSV_HEADER: &'static str = "w,e,s3,s2,n2,n3,purity,lambda1";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.w, self.e, self.s3, self.s2, self.n2, self.n3, self.purity, self.lambda1
        )
    }
}

/// Bell-3322 nonlocality of a Werner state, `max{0, 5w - 4}`.
pub fn werner_n3(w: f64) -> Result<f64> {
    check_werner_parameter(w)?;
    Ok((5.0 * w - 4.0).max(0.0))
}

/// All Werner-state analytics from closed forms in `w`.
pub fn werner_report(w: f64) -> Result<WernerReport> {
    check_werner_parameter(w)?;
    let lambda1 = (1.0 + 3.0 * w) / 4.0;
    let s2 = normalized_violation(w * SQRT_2, SQRT_2);
    Ok(WernerReport {
        w,
        e: bell_diagonal_concurrence(lambda1),
        s3: normalized_violation(w * SQRT_3, SQRT_3),
        s2,
        n2: s2,
        n3: werner_n3(w)?,
        purity: (1.0 + 3.0 * w * w) / 4.0,
        lambda1,
    })
}

/// Werner parameters at which each quantity first becomes positive.
pub mod werner_thresholds {
    pub const ENTANGLEMENT: f64 = 1.0 / 3.0;
    pub const STEERING_3: f64 = 0.577_350_269_189_625_8;
    pub const CHSH: f64 = super::FRAC_1_SQRT_2;
    pub const BELL_3322: f64 = 0.8;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{BellState, Mat4};
    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix3, Vector4};

    fn coeffs(s: [f64; 3]) -> CanonicalCoefficients {
        CanonicalCoefficients::from_singular_values(s).unwrap()
    }

    /// Concurrence through the Hermitian matrix `sqrt(rho) rho_tilde sqrt(rho)`,
    /// whose eigenvalues equal those of `rho rho_tilde`.
    fn concurrence_hermitian_route(rho: &DensityMatrix) -> f64 {
        let m = rho.matrix();
        let eig = SymmetricEigen::new(*m);
        let sqrt_diag = eig.eigenvalues.map(|x| Complex64::new(x.max(0.0).sqrt(), 0.0));
        let sqrt_rho = eig.eigenvectors * Mat4::from_diagonal(&sqrt_diag) * eig.eigenvectors.adjoint();
        let yy = kron(&pauli(2), &pauli(2));
        let tilde = yy * m.map(|z| z.conj()) * yy;
        let h = sqrt_rho * tilde * sqrt_rho;
        let h = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let mut roots: Vec<f64> = SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .map(|x| x.max(0.0).sqrt())
            .collect();
        roots.sort_by(|a, b| b.total_cmp(a));
        (roots[0] - roots[1] - roots[2] - roots[3]).max(0.0)
    }

    #[test]
    fn closed_forms_for_bell_werner_and_product() {
        let bell = coeffs([1.0, 1.0, 1.0]);
        assert_abs_diff_eq!(f2_closed(&bell), SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(f3_closed(&bell), SQRT_3, epsilon = 1e-15);
        assert_eq!(steering_s2(&bell), 1.0);
        assert_eq!(steering_s3(&bell), 1.0);

        let w = coeffs([0.8; 3]);
        assert_abs_diff_eq!(f2_closed(&w), 1.28f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(f3_closed(&w), 0.8 * SQRT_3, epsilon = 1e-15);
        assert_abs_diff_eq!(steering_s3(&w), 0.526_794_919_243_111_7, epsilon = 1e-12);
        assert_abs_diff_eq!(steering_s2(&w), 0.317_157_287_525_380_4, epsilon = 1e-12);

        let product = coeffs([0.0; 3]);
        assert_eq!(f2_closed(&product), 0.0);
        assert_eq!(steering_s3(&product), 0.0);

        let edge = coeffs([1.0, 0.0, 0.0]);
        assert_eq!(f3_closed(&edge), 1.0);
        assert_eq!(steering_s3(&edge), 0.0);
    }

    #[test]
    fn steering_vanishes_at_three_setting_threshold() {
        let w = werner_thresholds::STEERING_3;
        assert!(steering_s3(&coeffs([w; 3])) <= 1e-15);
        assert_eq!(werner_report(w).unwrap().s3, 0.0);
    }

    #[test]
    fn horodecki_and_bell_max() {
        let bell = DensityMatrix::bell(BellState::PhiPlus).fano();
        assert_abs_diff_eq!(horodecki_m(&bell), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(bell_chsh_max(&bell), 2.0 * SQRT_2, epsilon = 1e-14);

        let w = 0.43;
        let f = DensityMatrix::werner(w).unwrap().fano();
        assert_abs_diff_eq!(horodecki_m(&f), 2.0 * w * w, epsilon = 1e-14);
        let f = DensityMatrix::werner(FRAC_1_SQRT_2).unwrap().fano();
        assert_abs_diff_eq!(bell_chsh_max(&f), 2.0, epsilon = 1e-14);
        assert_eq!(bell_chsh_max(&DensityMatrix::maximally_mixed().fano()), 0.0);
    }

    #[test]
    fn horodecki_uses_singular_values_for_non_symmetric_t() {
        let t = Matrix3::new(0.0, 0.6, 0.0, -0.3, 0.0, 0.0, 0.0, 0.0, 0.2);
        let f = FanoForm::new(Vector3::zeros(), Vector3::zeros(), t).unwrap();
        assert_abs_diff_eq!(horodecki_m(&f), 0.36 + 0.09, epsilon = 1e-14);
    }

    #[test]
    fn n2_examples() {
        assert_eq!(nonlocality_n2(&coeffs([1.0; 3])), 1.0);
        assert_abs_diff_eq!(
            nonlocality_n2(&coeffs([0.8; 3])),
            0.317_157_287_525_380_4,
            epsilon = 1e-12
        );
        assert_eq!(nonlocality_n2(&coeffs([0.5; 3])), 0.0);
    }

    #[test]
    fn concurrence_examples() {
        for which in [
            BellState::PhiPlus,
            BellState::PhiMinus,
            BellState::PsiPlus,
            BellState::PsiMinus,
        ] {
            assert_abs_diff_eq!(concurrence(&DensityMatrix::bell(which)).unwrap(), 1.0, epsilon = 1e-12);
        }
        let c = |x: f64| Complex64::new(x, 0.0);
        let psi = Vector4::new(c(0.9f64.sqrt()), c(0.0), c(0.0), c(0.1f64.sqrt()));
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        assert_abs_diff_eq!(concurrence(&rho).unwrap(), 0.6, epsilon = 1e-12);
        // the oracle route takes square roots of rounding-level eigenvalues
        assert_abs_diff_eq!(concurrence_hermitian_route(&rho), 0.6, epsilon = 1e-7);
        let x = XStateParams::reduce(&rho, 1e-12).unwrap();
        assert_abs_diff_eq!(x_concurrence(&x), 0.6, epsilon = 1e-12);

        assert_abs_diff_eq!(
            concurrence(&DensityMatrix::werner(0.8).unwrap()).unwrap(),
            0.7,
            epsilon = 1e-12
        );
        assert_eq!(concurrence(&DensityMatrix::maximally_mixed()).unwrap(), 0.0);
    }

    #[test]
    fn x_concurrence_examples() {
        let werner = XStateParams::new([0.05, 0.45, 0.45, 0.05], 0.0, 0.4).unwrap();
        assert_abs_diff_eq!(x_concurrence(&werner), 0.7, epsilon = 1e-15);
        let mixed = XStateParams::new([0.25; 4], 0.0, 0.0).unwrap();
        assert_eq!(x_concurrence(&mixed), 0.0);
        let phi = XStateParams::new([0.5, 0.0, 0.0, 0.5], 0.5, 0.0).unwrap();
        assert_eq!(x_concurrence(&phi), 1.0);
    }

    #[test]
    fn canonical_x_concurrence_examples() {
        assert_abs_diff_eq!(
            canonical_x_concurrence(0.0, 0.0, [-0.8; 3]).unwrap(),
            0.7,
            epsilon = 1e-15
        );
        assert_eq!(canonical_x_concurrence(0.0, 0.0, [0.0; 3]).unwrap(), 0.0);
        assert!(matches!(
            canonical_x_concurrence(0.9, 0.9, [0.0, 0.0, 0.0]),
            Err(Error::Unphysical(_))
        ));
        assert!(matches!(
            canonical_x_concurrence(0.0, 0.0, [1.0; 3]),
            Err(Error::Unphysical(_))
        ));
    }

    #[test]
    fn local_bloch_vectors_never_decrease_x_concurrence() {
        let grid = [-0.6, -0.3, 0.0, 0.3, 0.6];
        let mut checked = 0;
        for &c1 in &grid {
            for &c2 in &grid {
                for &c3 in &grid {
                    let c = [c1, c2, c3];
                    let (Ok(with), Ok(without)) = (
                        canonical_x_concurrence(0.2, 0.2, c),
                        canonical_x_concurrence(0.0, 0.0, c),
                    ) else {
                        continue;
                    };
                    assert!(with >= without - 1e-15, "c = {c:?}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn bell_diagonal_and_purity_forms() {
        assert_abs_diff_eq!(bell_diagonal_concurrence(0.85), 0.7, epsilon = 1e-15);
        assert_eq!(bell_diagonal_concurrence(0.5), 0.0);
        assert_eq!(bell_diagonal_concurrence(1.0), 1.0);

        assert_eq!(s3_from_purity(0.25).unwrap(), 0.0);
        assert_abs_diff_eq!(s3_from_purity(0.73).unwrap(), 0.526_794_919_243_111_7, epsilon = 1e-12);
        assert_eq!(s3_from_purity(0.5).unwrap(), 0.0);
        assert!(matches!(s3_from_purity(1.2), Err(Error::Domain(_))));
        assert!(matches!(s3_from_purity(0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn werner_report_values() {
        // frozen from an independent eigen/SVD evaluation of the Werner matrix
        let r = werner_report(0.9).unwrap();
        assert_abs_diff_eq!(r.e, 0.85, epsilon = 1e-12);
        assert_abs_diff_eq!(r.s3, 0.763_397_459_621_556, epsilon = 1e-12);
        assert_abs_diff_eq!(r.s2, 0.658_578_643_762_690, epsilon = 1e-12);
        assert_abs_diff_eq!(r.n3, 0.5, epsilon = 1e-12);

        assert_eq!(werner_report(0.8).unwrap().n3, 0.0);
        assert_eq!(werner_report(1.0 / 3.0).unwrap().e, 0.0);
        assert!(matches!(werner_report(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn werner_report_matches_general_pipeline() {
        for k in 0..=20 {
            let w = k as f64 / 20.0;
            let r = werner_report(w).unwrap();
            let a = analyze(&DensityMatrix::werner(w).unwrap()).unwrap();
            assert_abs_diff_eq!(r.e, a.concurrence, epsilon = 1e-9);
            assert_abs_diff_eq!(r.s2, a.s2, epsilon = 1e-12);
            assert_abs_diff_eq!(r.s3, a.s3, epsilon = 1e-12);
            assert_abs_diff_eq!(r.purity, a.purity, epsilon = 1e-12);
            assert!(r.n3 == 0.0 || r.n2 > 0.0);
            assert!(r.s3 == 0.0 || r.e > 0.0);
        }
    }

    #[test]
    fn analyze_examples() {
        let r = analyze(&DensityMatrix::bell(BellState::PhiPlus)).unwrap();
        assert_abs_diff_eq!(r.s2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.s3, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.concurrence, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.b_max, 2.0 * SQRT_2, epsilon = 1e-12);

        let r = analyze(&DensityMatrix::maximally_mixed()).unwrap();
        assert_eq!((r.s2, r.s3, r.n2, r.concurrence, r.b_max), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_abs_diff_eq!(r.purity, 0.25, epsilon = 1e-15);

        let r = analyze(&DensityMatrix::werner(0.6).unwrap()).unwrap();
        assert_abs_diff_eq!(r.concurrence, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(r.s3, 0.053_589_838_486_224_1, epsilon = 1e-12);
        assert_eq!(r.s2, 0.0);
        assert_eq!(r.s2, r.n2);
    }

    #[test]
    fn concurrence_routes_agree_on_mixed_states() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let mut seed = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..200 {
            let g = Mat4::from_fn(|_, _| c(next(), next()));
            let m = g * g.adjoint();
            let tr = m.trace().re;
            let rho = DensityMatrix::new(m.unscale(tr)).unwrap();
            assert_abs_diff_eq!(
                concurrence(&rho).unwrap(),
                concurrence_hermitian_route(&rho),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn measures_ignore_local_bloch_vectors() {
        let c = Vector3::new(-0.5, -0.45, -0.4);
        let base = FanoForm::canonical(Vector3::zeros(), Vector3::zeros(), c).unwrap();
        let shifted = FanoForm::canonical(Vector3::new(0.0, 0.0, 0.1), Vector3::new(0.0, 0.0, -0.05), c).unwrap();
        shifted.compose().unwrap();
        let (c0, c1) = (base.canonical_coefficients(), shifted.canonical_coefficients());
        assert_eq!(steering_s2(&c0), steering_s2(&c1));
        assert_eq!(steering_s3(&c0), steering_s3(&c1));
    }
}
