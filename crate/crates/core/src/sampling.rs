//! Seeded random states and measurement settings.
//!
//! Every sample is a pure function of `(seed, index)`: the generator for
//! sample `index` is a ChaCha stream keyed by the seed (and a per-purpose
//! domain tag) with stream number `index`, so samples can be produced in any
//! order or in parallel without changing their values.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Matrix3, Rotation3, UnitQuaternion, Vector3, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequalities::{BellSetting, Setting, SteeringSetting};
use crate::optimizer::Functional;
use crate::state::{DensityMatrix, FanoForm, Mat2, Mat4};

pub const MAX_REJECTIONS: usize = 1000;

/// Domain tags separating the random streams used for different purposes.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub(crate) enum Domain {
    State = 1,
    Setting = 2,
    Restart = 3,
    Campaign = 4,
}

pub(crate) fn stream_rng(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let key = seed ^ (domain as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Derives an independent 64-bit seed for sub-task `index`.
pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    stream_rng(seed, Domain::Campaign, index).random()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    PureHaar,
    GinibreMixed,
    BellDiagonal,
    XState,
    WernerGrid,
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::InvalidConfig(format!("unknown sampler kind {s:?}")))
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("kind serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    /// Number of Ginibre columns; only used by `ginibre_mixed`.
    pub rank: usize,
    pub seed: u64,
    pub count: u64,
}

impl SamplerSpec {
    pub fn new(kind: SamplerKind, rank: usize, seed: u64, count: u64) -> Result<Self> {
        if !(1..=4).contains(&rank) {
            return Err(Error::InvalidConfig(format!("rank {rank} outside 1..=4")));
        }
        if count == 0 {
            return Err(Error::InvalidConfig("count must be at least 1".into()));
        }
        Ok(Self {
            kind,
            rank,
            seed,
            count,
        })
    }

    pub fn sample(&self, index: u64) -> Result<DensityMatrix> {
        sample_state(self, index)
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

pub fn sample_state(spec: &SamplerSpec, index: u64) -> Result<DensityMatrix> {
    if index >= spec.count {
        return Err(Error::InvalidConfig(format!(
            "sample index {index} out of range for count {}",
            spec.count
        )));
    }
    let mut rng = stream_rng(spec.seed, Domain::State, index);
    match spec.kind {
        SamplerKind::PureHaar => {
            let psi = Vector4::from_fn(|_, _| complex_gaussian(&mut rng));
            DensityMatrix::from_pure(&psi)
        }
        SamplerKind::GinibreMixed => {
            let g = DMatrix::from_fn(4, spec.rank, |_, _| complex_gaussian(&mut rng));
            let m = &g * g.adjoint();
            let m = Mat4::from_fn(|r, c| m[(r, c)]);
            let tr = m.trace().re;
            DensityMatrix::new(m.unscale(tr))
        }
        SamplerKind::BellDiagonal => {
            for _ in 0..MAX_REJECTIONS {
                let c = Vector3::from_fn(|_, _| rng.random_range(-1.0..=1.0));
                let Ok(f) = FanoForm::canonical(Vector3::zeros(), Vector3::zeros(), c) else {
                    continue;
                };
                if let Ok(rho) = f.compose() {
                    return Ok(rho);
                }
            }
            Err(Error::ExhaustedRejection {
                attempts: MAX_REJECTIONS,
            })
        }
        SamplerKind::XState => {
            let mut block = || {
                let g = Matrix2::from_fn(|_, _| complex_gaussian(&mut rng));
                g * g.adjoint()
            };
            let (outer, inner) = (block(), block());
            // outer block acts on |00>,|11>; inner on |01>,|10>
            let mut m = Mat4::zeros();
            for (i, p) in [0usize, 3].into_iter().enumerate() {
                for (j, q) in [0usize, 3].into_iter().enumerate() {
                    m[(p, q)] = outer[(i, j)];
                }
            }
            for (i, p) in [1usize, 2].into_iter().enumerate() {
                for (j, q) in [1usize, 2].into_iter().enumerate() {
                    m[(p, q)] = inner[(i, j)];
                }
            }
            let tr = m.trace().re;
            DensityMatrix::new(m.unscale(tr))
        }
        SamplerKind::WernerGrid => {
            let w = if spec.count == 1 {
                1.0
            } else {
                index as f64 / (spec.count - 1) as f64
            };
            DensityMatrix::werner(w)
        }
    }
}

/// Uniform point on the unit sphere.
pub fn uniform_sphere(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| gaussian(rng));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Haar-random rotation.
pub fn uniform_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    loop {
        let q = nalgebra::Quaternion::new(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
        if q.norm() > 1e-12 {
            return UnitQuaternion::from_quaternion(q).to_rotation_matrix();
        }
    }
}

/// Haar-random element of SU(2).
pub fn haar_su2(rng: &mut impl Rng) -> Mat2 {
    loop {
        let q = [gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng)];
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            let [a, b, c, d] = q.map(|x| x / n);
            return Mat2::new(
                Complex64::new(a, -d),
                Complex64::new(-c, -b),
                Complex64::new(c, -b),
                Complex64::new(a, d),
            );
        }
    }
}

/// Orthonormal columns of `m`, restored by Gram-Schmidt.
pub(crate) fn orthonormal_columns(m: &Matrix3<f64>, count: usize) -> Vec<Vector3<f64>> {
    let mut out: Vec<Vector3<f64>> = Vec::with_capacity(count);
    for k in 0..count {
        let mut v = m.column(k).into_owned();
        for prev in &out {
            v -= prev * prev.dot(&v);
        }
        out.push(v.normalize());
    }
    out
}

/// Random setting for `scenario`, uniform on the sphere for free directions
/// and Haar-random for orthonormal tuples.
pub fn sample_setting(scenario: Functional, seed: u64, index: u64) -> Setting {
    let mut rng = stream_rng(seed, Domain::Setting, index);
    let spheres = |rng: &mut ChaCha8Rng, n: usize| (0..n).map(|_| uniform_sphere(rng)).collect::<Vec<_>>();
    match scenario {
        Functional::Cjwr2 | Functional::Cjwr3 | Functional::ChshSteer => {
            let n = scenario.scenario_size();
            let u = spheres(&mut rng, n);
            let v = orthonormal_columns(uniform_rotation(&mut rng).matrix(), n);
            Setting::Steering(SteeringSetting::new(u, v).expect("sampled steering setting is valid"))
        }
        Functional::ChshBell | Functional::I3322 => {
            let n = scenario.scenario_size();
            let x = spheres(&mut rng, n);
            let y = spheres(&mut rng, n);
            Setting::Bell(BellSetting::new(x, y).expect("sampled Bell setting is valid"))
        }
    }
}

/// Spherical angles `(theta, phi)` of a unit vector.
pub(crate) fn sphere_angles(v: &Vector3<f64>) -> (f64, f64) {
    (v.z.clamp(-1.0, 1.0).acos(), v.y.atan2(v.x))
}
