//! Setting-dependent values of the steering and Bell functionals.
//!
//! Every functional is evaluated from the Fano form: with Alice direction `u`
//! and Bob direction `v`, `<u·sigma ⊗ v·sigma> = u^T T v`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::FanoForm;

/// Tolerance on unit norms and on orthogonality of Bob's directions.
pub const SETTING_TOL: f64 = 1e-12;

fn check_unit(label: &str, vs: &[Vector3<f64>]) -> Result<()> {
    for (i, v) in vs.iter().enumerate() {
        let dev = (v.norm() - 1.0).abs();
        if dev.is_nan() || dev > SETTING_TOL {
            return Err(Error::SettingConstraintViolated(format!(
                "|{label}_{}| deviates from 1 by {dev:e}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Steering scenario `mu = {u_1..u_n, v_1..v_n}` with orthonormal `v_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SettingDoc", into = "SettingDoc")]
pub struct SteeringSetting {
    u: Vec<Vector3<f64>>,
    v: Vec<Vector3<f64>>,
}

impl SteeringSetting {
    pub fn new(u: Vec<Vector3<f64>>, v: Vec<Vector3<f64>>) -> Result<Self> {
        let n = u.len();
        if !(2..=3).contains(&n) || v.len() != n {
            return Err(Error::SettingConstraintViolated(format!(
                "steering setting needs n = 2 or 3 directions per side, got {} and {}",
                u.len(),
                v.len()
            )));
        }
        check_unit("u", &u)?;
        check_unit("v", &v)?;
        for i in 0..n {
            for j in i + 1..n {
                let dot = v[i].dot(&v[j]);
                if dot.is_nan() || dot.abs() > SETTING_TOL {
                    return Err(Error::SettingConstraintViolated(format!(
                        "v_{} · v_{} = {dot:e}, Bob's directions must be orthonormal",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { u, v })
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self) -> &[Vector3<f64>] {
        &self.u
    }

    pub fn v(&self) -> &[Vector3<f64>] {
        &self.v
    }
}

/// Bell scenario with 2 or 3 unconstrained unit directions per party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SettingDoc", into = "SettingDoc")]
pub struct BellSetting {
    x: Vec<Vector3<f64>>,
    y: Vec<Vector3<f64>>,
}

impl BellSetting {
    pub fn new(x: Vec<Vector3<f64>>, y: Vec<Vector3<f64>>) -> Result<Self> {
        if !(2..=3).contains(&x.len()) || y.len() != x.len() {
            return Err(Error::SettingConstraintViolated(format!(
                "Bell setting needs 2 or 3 directions per party, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        check_unit("x", &x)?;
        check_unit("y", &y)?;
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[Vector3<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[Vector3<f64>] {
        &self.y
    }
}

/// Either kind of setting; serializes as `{"u": [...], "v": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Setting {
    Steering(SteeringSetting),
    Bell(BellSetting),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingDoc {
    u: Vec<[f64; 3]>,
    v: Vec<[f64; 3]>,
}

fn to_vectors(xs: Vec<[f64; 3]>) -> Vec<Vector3<f64>> {
    xs.into_iter().map(Vector3::from).collect()
}

fn to_arrays(xs: Vec<Vector3<f64>>) -> Vec<[f64; 3]> {
    xs.into_iter().map(Into::into).collect()
}

impl TryFrom<SettingDoc> for SteeringSetting {
    type Error = Error;
    fn try_from(doc: SettingDoc) -> Result<Self> {
        SteeringSetting::new(to_vectors(doc.u), to_vectors(doc.v))
    }
}

impl From<SteeringSetting> for SettingDoc {
    fn from(s: SteeringSetting) -> Self {
        SettingDoc {
            u: to_arrays(s.u),
            v: to_arrays(s.v),
        }
    }
}

impl TryFrom<SettingDoc> for BellSetting {
    type Error = Error;
    fn try_from(doc: SettingDoc) -> Result<Self> {
        BellSetting::new(to_vectors(doc.u), to_vectors(doc.v))
    }
}

impl From<BellSetting> for SettingDoc {
    fn from(s: BellSetting) -> Self {
        SettingDoc {
            u: to_arrays(s.x),
            v: to_arrays(s.y),
        }
    }
}

/// `<u·sigma ⊗ v·sigma> = u^T T v`.
pub fn correlator(f: &FanoForm, u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    u.dot(&(f.t() * v))
}

/// CJWR functional `F_n = |sum_i <A_i ⊗ B_i>| / sqrt(n)`.
pub fn f_cjwr(f: &FanoForm, s: &SteeringSetting) -> f64 {
    cjwr_from_directions(f, &s.u, &s.v)
}

pub(crate) fn cjwr_from_directions(f: &FanoForm, u: &[Vector3<f64>], v: &[Vector3<f64>]) -> f64 {
    let sum: f64 = u.iter().zip(v).map(|(u, v)| correlator(f, u, v)).sum();
    sum.abs() / (u.len() as f64).sqrt()
}

/// CHSH-like steering functional `(sqrt(f_+) + sqrt(f_-)) / 2` with
/// `f_± = <(A_1 ± A_2) ⊗ B_1>^2 + <(A_1 ± A_2) ⊗ B_2>^2`.
pub fn f_chsh_steering(f: &FanoForm, s: &SteeringSetting) -> Result<f64> {
    if s.n() != 2 {
        return Err(Error::InvalidFunctionalForScenario(format!(
            "CHSH-like steering needs n = 2, got n = {}",
            s.n()
        )));
    }
    Ok(chsh_steering_from_directions(f, &s.u, &s.v))
}

pub(crate) fn chsh_steering_from_directions(f: &FanoForm, u: &[Vector3<f64>], v: &[Vector3<f64>]) -> f64 {
    let c = |i: usize, j: usize| correlator(f, &u[i], &v[j]);
    let (c11, c12, c21, c22) = (c(0, 0), c(0, 1), c(1, 0), c(1, 1));
    let f_plus = (c11 + c21).powi(2) + (c12 + c22).powi(2);
    let f_minus = (c11 - c21).powi(2) + (c12 - c22).powi(2);
    0.5 * (f_plus.sqrt() + f_minus.sqrt())
}

/// `<B_CHSH>` for `B = x_1·sigma ⊗ (y_1 + y_2)·sigma + x_2·sigma ⊗ (y_1 - y_2)·sigma`.
pub fn chsh_bell_value(f: &FanoForm, s: &BellSetting) -> Result<f64> {
    if s.n() != 2 {
        return Err(Error::InvalidFunctionalForScenario(format!(
            "CHSH needs 2 + 2 directions, got {} + {}",
            s.x.len(),
            s.y.len()
        )));
    }
    Ok(chsh_bell_from_directions(f, &s.x, &s.y))
}

pub(crate) fn chsh_bell_from_directions(f: &FanoForm, x: &[Vector3<f64>], y: &[Vector3<f64>]) -> f64 {
    let t = f.t();
    x[0].dot(&(t * (y[0] + y[1]))) + x[1].dot(&(t * (y[0] - y[1])))
}

/// Sign pattern of the joint terms `p(A_i B_j)` in I_3322, indexed `[i][j]`.
pub(crate) const I3322_SIGNS: [[f64; 3]; 3] = [[1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [1.0, -1.0, 0.0]];

/// `p(A_i B_j) = Tr(M_i ⊗ M_j rho)` with `M = (1 + n·sigma)/2`.
pub fn joint_probability(f: &FanoForm, u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    0.25 * (1.0 + u.dot(f.a()) + v.dot(f.b()) + correlator(f, u, v))
}

pub fn alice_marginal(f: &FanoForm, u: &Vector3<f64>) -> f64 {
    0.5 * (1.0 + u.dot(f.a()))
}

pub fn bob_marginal(f: &FanoForm, v: &Vector3<f64>) -> f64 {
    0.5 * (1.0 + v.dot(f.b()))
}

/// Bell-3322 expression; the local bound is 0.
pub fn i3322_value(f: &FanoForm, s: &BellSetting) -> Result<f64> {
    if s.n() != 3 {
        return Err(Error::InvalidFunctionalForScenario(format!(
            "I3322 needs 3 + 3 directions, got {} + {}",
            s.x.len(),
            s.y.len()
        )));
    }
    Ok(i3322_from_directions(f, &s.x, &s.y))
}

pub(crate) fn i3322_from_directions(f: &FanoForm, x: &[Vector3<f64>], y: &[Vector3<f64>]) -> f64 {
    let mut value = 0.0;
    for (i, signs) in I3322_SIGNS.iter().enumerate() {
        for (j, sign) in signs.iter().enumerate() {
            if *sign != 0.0 {
                value += sign * joint_probability(f, &x[i], &y[j]);
            }
        }
    }
    value - alice_marginal(f, &x[0]) - bob_marginal(f, &y[1]) - 2.0 * bob_marginal(f, &y[0])
}
