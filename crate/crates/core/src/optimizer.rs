//! Derivative-free maximization of the functionals over measurement settings.
//!
//! Free unit vectors are parametrized by spherical angles `(theta, phi)`;
//! Bob's orthonormal steering directions are the first `n` columns of a
//! rotation given in axis-angle form. The flattened parameter vector is
//! searched with a Hooke-Jeeves pattern search (coordinate polls plus pattern
//! moves, geometric step shrinking), restarted from Haar-random settings.
//! Restart `k` draws its start from stream `k` of the seed, so the result does
//! not depend on how restarts are scheduled across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Rotation3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequalities::{
    chsh_bell_from_directions, chsh_steering_from_directions, cjwr_from_directions, f_chsh_steering, f_cjwr,
    i3322_from_directions, BellSetting, Setting, SteeringSetting,
};
use crate::measures::{bell_chsh_max, f2_closed, f3_closed};
use crate::sampling::{orthonormal_columns, sphere_angles, stream_rng, uniform_rotation, uniform_sphere, Domain};
use crate::state::FanoForm;

/// Upper tolerance on `found - closed`.
pub const SOUNDNESS_TOL: f64 = 1e-9;
pub const DEFAULT_REACH_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Cjwr2,
    Cjwr3,
    ChshSteer,
    ChshBell,
    #[serde(alias = "bell3322")]
    I3322,
}

impl Functional {
    pub const ALL: [Functional; 5] = [
        Functional::Cjwr2,
        Functional::Cjwr3,
        Functional::ChshSteer,
        Functional::ChshBell,
        Functional::I3322,
    ];

    /// Functionals with a closed-form maximum.
    pub const WITH_CLOSED_FORM: [Functional; 4] = [
        Functional::Cjwr2,
        Functional::Cjwr3,
        Functional::ChshSteer,
        Functional::ChshBell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Functional::Cjwr2 => "cjwr2",
            Functional::Cjwr3 => "cjwr3",
            Functional::ChshSteer => "chsh_steer",
            Functional::ChshBell => "chsh_bell",
            Functional::I3322 => "i3322",
        }
    }

    /// Measurements per party.
    pub fn scenario_size(self) -> usize {
        match self {
            Functional::Cjwr3 | Functional::I3322 => 3,
            _ => 2,
        }
    }

    fn is_steering(self) -> bool {
        matches!(self, Functional::Cjwr2 | Functional::Cjwr3 | Functional::ChshSteer)
    }

    /// Length of the flattened parameter vector.
    pub fn dimension(self) -> usize {
        let n = self.scenario_size();
        if self.is_steering() {
            2 * n + 3
        } else {
            4 * n
        }
    }

    pub fn closed_form(self, f: &FanoForm) -> Option<f64> {
        let c = f.canonical_coefficients();
        match self {
            Functional::Cjwr2 | Functional::ChshSteer => Some(f2_closed(&c)),
            Functional::Cjwr3 => Some(f3_closed(&c)),
            Functional::ChshBell => Some(bell_chsh_max(f)),
            Functional::I3322 => None,
        }
    }

    pub fn evaluate(self, f: &FanoForm, setting: &Setting) -> Result<f64> {
        let mismatch = || {
            Error::InvalidFunctionalForScenario(format!(
                "{} needs {} settings per party on the {} side",
                self.name(),
                self.scenario_size(),
                if self.is_steering() { "steering" } else { "Bell" }
            ))
        };
        match (self, setting) {
            (Functional::Cjwr2 | Functional::Cjwr3, Setting::Steering(s)) if s.n() == self.scenario_size() => {
                Ok(f_cjwr(f, s))
            }
            (Functional::ChshSteer, Setting::Steering(s)) => f_chsh_steering(f, s),
            (Functional::ChshBell, Setting::Bell(s)) => crate::inequalities::chsh_bell_value(f, s),
            (Functional::I3322, Setting::Bell(s)) => crate::inequalities::i3322_value(f, s),
            _ => Err(mismatch()),
        }
    }

    /// Value at a parameter vector, without building a [`Setting`].
    pub fn value_at(self, f: &FanoForm, params: &[f64]) -> f64 {
        let n = self.scenario_size();
        let mut first = [Vector3::zeros(); 3];
        let mut second = [Vector3::zeros(); 3];
        for (k, dir) in first.iter_mut().take(n).enumerate() {
            *dir = unit_from_angles(params[2 * k], params[2 * k + 1]);
        }
        if self.is_steering() {
            let rot = rotation_from_params(&params[2 * n..2 * n + 3]);
            for (k, dir) in second.iter_mut().take(n).enumerate() {
                *dir = rot.matrix().column(k).into_owned();
            }
        } else {
            for (k, dir) in second.iter_mut().take(n).enumerate() {
                *dir = unit_from_angles(params[2 * (n + k)], params[2 * (n + k) + 1]);
            }
        }
        let (u, v) = (&first[..n], &second[..n]);
        match self {
            Functional::Cjwr2 | Functional::Cjwr3 => cjwr_from_directions(f, u, v),
            Functional::ChshSteer => chsh_steering_from_directions(f, u, v),
            Functional::ChshBell => chsh_bell_from_directions(f, u, v),
            Functional::I3322 => i3322_from_directions(f, u, v),
        }
    }

    pub fn setting_from_params(self, params: &[f64]) -> Setting {
        let n = self.scenario_size();
        let first: Vec<_> = (0..n)
            .map(|k| unit_from_angles(params[2 * k], params[2 * k + 1]))
            .collect();
        if self.is_steering() {
            let rot = rotation_from_params(&params[2 * n..2 * n + 3]);
            let v = orthonormal_columns(rot.matrix(), n);
            Setting::Steering(SteeringSetting::new(first, v).expect("rotation columns are orthonormal"))
        } else {
            let second = (0..n)
                .map(|k| unit_from_angles(params[2 * (n + k)], params[2 * (n + k) + 1]))
                .collect();
            Setting::Bell(BellSetting::new(first, second).expect("angle parametrization yields unit vectors"))
        }
    }

    fn random_start(self, seed: u64, restart: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, Domain::Restart, restart);
        let n = self.scenario_size();
        let spheres = if self.is_steering() { n } else { 2 * n };
        let mut params = Vec::with_capacity(self.dimension());
        for _ in 0..spheres {
            let (theta, phi) = sphere_angles(&uniform_sphere(&mut rng));
            params.extend([theta, phi]);
        }
        if self.is_steering() {
            params.extend(uniform_rotation(&mut rng).scaled_axis().iter());
        }
        params
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cjwr2" => Ok(Functional::Cjwr2),
            "cjwr3" => Ok(Functional::Cjwr3),
            "chsh_steer" => Ok(Functional::ChshSteer),
            "chsh_bell" => Ok(Functional::ChshBell),
            "i3322" | "bell3322" => Ok(Functional::I3322),
            "chsh_steer3" => Err(Error::InvalidFunctionalForScenario(
                "the CHSH-like steering functional is defined for n = 2 only".into(),
            )),
            other => Err(Error::InvalidConfig(format!(
                "unknown functional {other:?}; expected cjwr2, cjwr3, chsh_steer, chsh_bell or i3322"
            ))),
        }
    }
}

fn unit_from_angles(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

fn rotation_from_params(axis_angle: &[f64]) -> Rotation3<f64> {
    Rotation3::new(Vector3::new(axis_angle[0], axis_angle[1], axis_angle[2]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub init_step: f64,
    pub shrink: f64,
    pub tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 500,
            init_step: 0.5,
            shrink: 0.6,
            tol: 1e-7,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_owned()));
        if self.restarts == 0 {
            return bad("restarts must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.init_step > 0.0 && self.init_step.is_finite()) {
            return bad("init_step must be positive");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad("tol must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub functional: Functional,
    pub best_value: f64,
    pub best_setting: Setting,
    pub best_restart: usize,
    pub restarts: usize,
    pub evaluations: u64,
    /// Whether the best restart ended with its step below `tol`.
    pub converged: bool,
    pub final_step: f64,
    pub closed_form: Option<f64>,
    /// `best_value - closed_form`.
    pub gap_to_oracle: Option<f64>,
}

struct SearchOutcome {
    params: Vec<f64>,
    value: f64,
    evaluations: u64,
    final_step: f64,
    converged: bool,
}

/// Hooke-Jeeves pattern search, maximizing.
fn pattern_search(objective: impl Fn(&[f64]) -> f64, start: Vec<f64>, cfg: &OptimizerConfig) -> SearchOutcome {
    let mut evaluations = 0u64;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        objective(x)
    };

    // coordinate poll around x; returns the improved point and its value
    fn explore(eval: &mut impl FnMut(&[f64]) -> f64, mut x: Vec<f64>, mut fx: f64, step: f64) -> (Vec<f64>, f64) {
        for i in 0..x.len() {
            let orig = x[i];
            x[i] = orig + step;
            let up = eval(&x);
            if up > fx {
                fx = up;
                continue;
            }
            x[i] = orig - step;
            let down = eval(&x);
            if down > fx {
                fx = down;
                continue;
            }
            x[i] = orig;
        }
        (x, fx)
    }

    let mut f_base = eval(&start);
    let mut base = start;
    let mut step = cfg.init_step;
    let mut iters = 0;
    let mut converged = false;

    while iters < cfg.max_iters {
        iters += 1;
        let (x, fx) = explore(&mut eval, base.clone(), f_base, step);
        if fx > f_base {
            let mut prev = std::mem::replace(&mut base, x);
            f_base = fx;
            while iters < cfg.max_iters {
                iters += 1;
                let pattern: Vec<f64> = base.iter().zip(&prev).map(|(b, p)| 2.0 * b - p).collect();
                let fp = eval(&pattern);
                let (xp, fxp) = explore(&mut eval, pattern, fp, step);
                if fxp > f_base {
                    prev = std::mem::replace(&mut base, xp);
                    f_base = fxp;
                } else {
                    break;
                }
            }
        } else {
            step *= cfg.shrink;
            if step < cfg.tol {
                converged = true;
                break;
            }
        }
    }

    SearchOutcome {
        params: base,
        value: f_base,
        evaluations,
        final_step: step,
        converged,
    }
}

/// Maximizes `functional` over measurement settings for the state `f`.
///
/// The result is the best over all restarts; ties go to the lowest restart
/// index.
pub fn maximize(functional: Functional, f: &FanoForm, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    let outcomes: Vec<SearchOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let start = functional.random_start(cfg.seed, k as u64);
            pattern_search(|p| functional.value_at(f, p), start, cfg)
        })
        .collect();

    let mut best = 0;
    for (k, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best].value {
            best = k;
        }
    }
    let evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    let winner = &outcomes[best];
    let closed_form = functional.closed_form(f);
    Ok(OptimizationResult {
        functional,
        best_value: winner.value,
        best_setting: functional.setting_from_params(&winner.params),
        best_restart: best,
        restarts: cfg.restarts,
        evaluations,
        converged: winner.converged,
        final_step: winner.final_step,
        closed_form,
        gap_to_oracle: closed_form.map(|c| winner.value - c),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightnessRecord {
    pub functional: Functional,
    pub closed: f64,
    pub found: f64,
    /// `closed - found`; non-negative up to rounding.
    pub gap: f64,
    /// `gap <= reach_tol`.
    pub reached: bool,
}

/// Compares the optimizer against the closed form of every functional that has one.
///
/// Fails with [`Error::TightnessViolation`] when the optimizer finds a value
/// above a closed-form maximum.
pub fn certify_tightness(
    f: &FanoForm,
    cfg: &OptimizerConfig,
    reach_tol: f64,
) -> Result<BTreeMap<Functional, TightnessRecord>> {
    let mut out = BTreeMap::new();
    for functional in Functional::WITH_CLOSED_FORM {
        let result = maximize(functional, f, cfg)?;
        let closed = result.closed_form.expect("functional has a closed form");
        let found = result.best_value;
        if found > closed + SOUNDNESS_TOL {
            return Err(Error::TightnessViolation {
                functional: functional.name().to_owned(),
                found,
                closed,
                excess: found - closed,
            });
        }
        let gap = closed - found;
        out.insert(
            functional,
            TightnessRecord {
                functional,
                closed,
                found,
                gap,
                reached: gap <= reach_tol,
            },
        );
    }
    Ok(out)
}
