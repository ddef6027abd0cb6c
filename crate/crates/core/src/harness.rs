//! Seeded Monte Carlo campaigns over the closed forms and the optimizer.
//!
//! Trials are evaluated in parallel and combined with order-independent
//! reductions (counts, maxima, lowest-index counterexample), so a report is a
//! pure function of its inputs regardless of thread count. Only
//! `wall_time_ms` varies between runs.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::document::StateDocument;
use crate::error::{Error, Result};
use crate::inequalities::Setting;
use crate::measures::{analyze, werner_report, WernerReport};
use crate::optimizer::{certify_tightness, maximize, Functional, OptimizerConfig, TightnessRecord, SOUNDNESS_TOL};
use crate::sampling::{derive_seed, sample_setting, SamplerKind, SamplerSpec};
use crate::state::DensityMatrix;

/// Required median of the closed-form minus optimizer gaps.
pub const MEDIAN_REACH_TOL: f64 = 1e-5;
/// Slack on `|S_2 - N_2|`.
pub const FORMULA_EQUALITY_TOL: f64 = 1e-15;
/// Slack on `E >= S_3` and threshold for treating `S_3` as positive.
pub const HIERARCHY_TOL: f64 = 1e-9;
/// Best I3322 value the optimizer must reach for the singlet.
pub const I3322_SINGLET_MAX: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub index: u64,
    pub check: String,
    pub detail: String,
    pub state: StateDocument,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functional: Option<Functional>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub setting: Option<Setting>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignReport {
    pub campaign: String,
    pub seed: u64,
    pub trials: u64,
    pub failures: u64,
    /// Worst `max(0, found - closed)` over all trials.
    pub max_bound_gap: f64,
    /// Worst numerical violation of a hierarchy relation.
    pub max_hierarchy_violation: f64,
    pub wall_time_ms: u64,
    pub sampler: SamplerSpec,
    pub stats: BTreeMap<String, f64>,
    pub counterexample: Option<Counterexample>,
}

impl CampaignReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::CampaignFailed(Box::new(self)))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// JSON with `wall_time_ms` zeroed, for reproducibility comparisons.
    pub fn deterministic_json(&self) -> String {
        CampaignReport {
            wall_time_ms: 0,
            ..self.clone()
        }
        .to_json()
    }

    pub fn counterexample_json(&self) -> String {
        match &self.counterexample {
            Some(c) => serde_json::to_string(c).expect("counterexamples serialize"),
            None => "none".to_owned(),
        }
    }
}

#[derive(Debug, Default)]
struct Tally {
    trials: u64,
    failures: u64,
    max_bound_gap: f64,
    max_violation: f64,
    counts: BTreeMap<&'static str, u64>,
    maxima: BTreeMap<&'static str, f64>,
    first: Option<Counterexample>,
}

impl Tally {
    fn count(&mut self, key: &'static str) {
        *self.counts.entry(key).or_default() += 1;
    }

    fn track_max(&mut self, key: &'static str, value: f64) {
        let slot = self.maxima.entry(key).or_insert(f64::NEG_INFINITY);
        *slot = slot.max(value);
    }

    fn fail(&mut self, c: Counterexample) {
        self.failures += 1;
        if self.first.as_ref().is_none_or(|f| c.index < f.index) {
            self.first = Some(c);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        self.failures += other.failures;
        self.max_bound_gap = self.max_bound_gap.max(other.max_bound_gap);
        self.max_violation = self.max_violation.max(other.max_violation);
        for (k, v) in other.counts {
            *self.counts.entry(k).or_default() += v;
        }
        for (k, v) in other.maxima {
            self.track_max(k, v);
        }
        if let Some(c) = other.first {
            if self.first.as_ref().is_none_or(|f| c.index < f.index) {
                self.first = Some(c);
            }
        }
        self
    }

    fn into_report(self, campaign: &str, seed: u64, sampler: SamplerSpec, started: Instant) -> CampaignReport {
        let mut stats: BTreeMap<String, f64> = BTreeMap::new();
        for (k, v) in self.counts {
            stats.insert(k.to_owned(), v as f64);
        }
        for (k, v) in self.maxima {
            stats.insert(k.to_owned(), v);
        }
        CampaignReport {
            campaign: campaign.to_owned(),
            seed,
            trials: self.trials,
            failures: self.failures,
            max_bound_gap: self.max_bound_gap,
            max_hierarchy_violation: self.max_violation,
            wall_time_ms: started.elapsed().as_millis() as u64,
            sampler,
            stats,
            counterexample: self.first,
        }
    }
}

fn counterexample(
    index: u64,
    check: &str,
    detail: String,
    rho: &DensityMatrix,
    functional: Option<Functional>,
    setting: Option<Setting>,
) -> Counterexample {
    Counterexample {
        index,
        check: check.to_owned(),
        detail,
        state: StateDocument::from_density(rho),
        functional,
        setting,
    }
}

fn state_failure(index: u64, err: Error) -> Counterexample {
    Counterexample {
        index,
        check: "sample".to_owned(),
        detail: err.to_string(),
        state: StateDocument::from_density(&DensityMatrix::maximally_mixed()),
        functional: None,
        setting: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TightnessOptions {
    pub n_states: u64,
    pub settings_per_state: u64,
    /// Number of leading states passed through `certify_tightness`.
    pub certify_states: u64,
    pub reach_tol: f64,
    pub rank: usize,
    pub seed: u64,
}

impl Default for TightnessOptions {
    fn default() -> Self {
        Self {
            n_states: 10_000,
            settings_per_state: 100,
            certify_states: 100,
            reach_tol: crate::optimizer::DEFAULT_REACH_TOL,
            rank: 2,
            seed: 0,
        }
    }
}

fn setting_index(state: u64, settings_per_state: u64, k: u64, functional: Functional) -> u64 {
    (state * settings_per_state + k) * 8 + functional as u64
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Random settings never beat the closed-form maxima, and the optimizer
/// reaches them on a leading subsample of states.
pub fn tightness_campaign(opts: &TightnessOptions, cfg: &OptimizerConfig) -> Result<CampaignReport> {
    cfg.validate()?;
    let started = Instant::now();
    let sampler = SamplerSpec {
        kind: SamplerKind::GinibreMixed,
        rank: opts.rank,
        seed: opts.seed,
        count: opts.n_states,
    };
    if opts.n_states > 0 {
        SamplerSpec::new(sampler.kind, sampler.rank, sampler.seed, sampler.count)?;
    }

    let tally = (0..opts.n_states)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally::default();
            let rho = match sampler.sample(i) {
                Ok(rho) => rho,
                Err(e) => {
                    t.fail(state_failure(i, e));
                    return t;
                }
            };
            let f = rho.fano();
            let closed: Vec<f64> = Functional::WITH_CLOSED_FORM
                .iter()
                .map(|fun| fun.closed_form(&f).expect("closed form exists"))
                .collect();
            for k in 0..opts.settings_per_state {
                for (fun, bound) in Functional::WITH_CLOSED_FORM.iter().zip(&closed) {
                    let setting = sample_setting(*fun, opts.seed, setting_index(i, opts.settings_per_state, k, *fun));
                    let value = fun.evaluate(&f, &setting).expect("sampled setting matches functional");
                    // CHSH can be negative; the Horodecki bound covers |<B>|
                    let value = if *fun == Functional::ChshBell {
                        value.abs()
                    } else {
                        value
                    };
                    t.trials += 1;
                    t.max_bound_gap = t.max_bound_gap.max(value - bound);
                    if *fun == Functional::ChshBell {
                        t.track_max("max_abs_chsh_bell", value);
                    }
                    if value > bound + SOUNDNESS_TOL {
                        t.fail(counterexample(
                            i,
                            "bound",
                            format!("{fun} value {value} exceeds closed form {bound}"),
                            &rho,
                            Some(*fun),
                            Some(setting),
                        ));
                    }
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    let certify_count = opts.certify_states.min(opts.n_states);
    let certified: Vec<(u64, Result<BTreeMap<Functional, TightnessRecord>>)> = (0..certify_count)
        .into_par_iter()
        .map(|i| {
            let rho = sampler.sample(i).expect("sampled above");
            let cfg_i = OptimizerConfig {
                seed: derive_seed(cfg.seed, i),
                ..*cfg
            };
            (i, certify_tightness(&rho.fano(), &cfg_i, opts.reach_tol))
        })
        .collect();

    let mut tally = tally;
    let mut gaps: BTreeMap<Functional, Vec<f64>> = BTreeMap::new();
    for (i, outcome) in certified {
        let rho = sampler.sample(i).expect("sampled above");
        match outcome {
            Ok(records) => {
                for (fun, rec) in records {
                    gaps.entry(fun).or_default().push(rec.gap);
                    tally.max_bound_gap = tally.max_bound_gap.max(-rec.gap);
                    if !rec.reached {
                        tally.fail(counterexample(
                            i,
                            "reach",
                            format!("{fun}: optimizer found {} but closed form is {}", rec.found, rec.closed),
                            &rho,
                            Some(fun),
                            None,
                        ));
                    }
                }
            }
            Err(e) => tally.fail(counterexample(i, "soundness", e.to_string(), &rho, None, None)),
        }
    }

    let mut report = tally.into_report("tightness", opts.seed, sampler, started);
    report.stats.insert("certified_states".into(), certify_count as f64);
    report.stats.entry("max_abs_chsh_bell".into()).or_insert(0.0);
    for (fun, mut g) in gaps {
        let max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let med = median(&mut g);
        report.stats.insert(format!("reach_median_gap_{fun}"), med);
        report.stats.insert(format!("reach_max_gap_{fun}"), max);
        if med > MEDIAN_REACH_TOL {
            report.failures += 1;
        }
    }
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    report.into_result()
}

const HIERARCHY_COUNTS: [&str; 5] = [
    "states_s2_positive",
    "states_s3_positive",
    "states_entangled",
    "witness_s3_without_s2",
    "witness_entangled_without_s3",
];

/// Checks `S_2 = N_2`, `S_2 > 0 ⇒ S_3 > 0`, `S_3 > 0 ⇒ E > 0` and `E >= S_3`
/// on every sampled state.
pub fn hierarchy_campaign(sampler: &SamplerSpec) -> Result<CampaignReport> {
    let started = Instant::now();
    let tally = (0..sampler.count)
        .into_par_iter()
        .map(|i| {
            let mut t = Tally {
                trials: 1,
                ..Tally::default()
            };
            let rho = match sampler.sample(i) {
                Ok(rho) => rho,
                Err(e) => {
                    t.fail(state_failure(i, e));
                    return t;
                }
            };
            let m = match analyze(&rho) {
                Ok(m) => m,
                Err(e) => {
                    t.fail(counterexample(i, "analyze", e.to_string(), &rho, None, None));
                    return t;
                }
            };
            let formula_gap = (m.s2 - m.n2).abs();
            t.max_bound_gap = formula_gap;
            t.max_violation = (m.s3 - m.concurrence).max(formula_gap).max(0.0);
            let mut violations = Vec::new();
            if formula_gap > FORMULA_EQUALITY_TOL {
                violations.push(format!("|S2 - N2| = {formula_gap:e}"));
            }
            if m.s2 > 0.0 && m.s3 <= 0.0 {
                violations.push(format!("S2 = {} > 0 but S3 = {}", m.s2, m.s3));
            }
            if m.s3 > HIERARCHY_TOL && m.concurrence <= 0.0 {
                violations.push(format!("S3 = {} > 0 but E = {}", m.s3, m.concurrence));
            }
            if m.concurrence < m.s3 - HIERARCHY_TOL {
                violations.push(format!("E = {} < S3 = {}", m.concurrence, m.s3));
            }
            if !violations.is_empty() {
                t.fail(counterexample(i, "hierarchy", violations.join("; "), &rho, None, None));
            }
            if m.s2 > 0.0 {
                t.count("states_s2_positive");
            }
            if m.s3 > 0.0 {
                t.count("states_s3_positive");
            }
            if m.concurrence > 0.0 {
                t.count("states_entangled");
            }
            if m.s3 > 0.0 && m.s2 == 0.0 {
                t.count("witness_s3_without_s2");
            }
            if m.concurrence > HIERARCHY_TOL && m.s3 == 0.0 {
                t.count("witness_entangled_without_s3");
            }
            t
        })
        .reduce(Tally::default, Tally::merge);
    let mut report = tally.into_report("hierarchy", sampler.seed, *sampler, started);
    for key in HIERARCHY_COUNTS {
        report.stats.entry(key.to_owned()).or_insert(0.0);
    }
    report.into_result()
}

/// Werner analytics on `steps + 1` evenly spaced points of `[w_min, w_max]`.
pub fn werner_scan(w_min: f64, w_max: f64, steps: usize) -> Result<Vec<WernerReport>> {
    if !(0.0 <= w_min && w_min <= w_max && w_max <= 1.0) {
        return Err(Error::Domain(format!(
            "Werner scan needs 0 <= from <= to <= 1, got [{w_min}, {w_max}]"
        )));
    }
    if steps == 0 {
        return Ok(vec![werner_report(w_min)?]);
    }
    (0..=steps)
        .map(|i| werner_report(w_min + (w_max - w_min) * i as f64 / steps as f64))
        .collect()
}

pub fn write_werner_csv(rows: &[WernerReport], mut out: impl Write) -> Result<()> {
    writeln!(out, "{}", WernerReport::CSV_HEADER)?;
    for row in rows {
        writeln!(out, "{}", row.csv_row())?;
    }
    Ok(())
}

/// `k` evenly spaced points on `[0, 1]`.
pub fn unit_grid(k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..k).map(|i| i as f64 / (k - 1) as f64).collect(),
    }
}

/// The optimized I3322 value on Werner states stays below `5w/4 - 1`, and
/// reaches 1/4 for the singlet.
pub fn i3322_envelope_campaign(w_grid: &[f64], cfg: &OptimizerConfig) -> Result<CampaignReport> {
    cfg.validate()?;
    if let Some(w) = w_grid.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return Err(Error::Domain(format!("grid point {w} outside [0, 1]")));
    }
    let started = Instant::now();
    let sampler = SamplerSpec {
        kind: SamplerKind::WernerGrid,
        rank: 1,
        seed: cfg.seed,
        count: w_grid.len() as u64,
    };
    let results: Vec<(f64, Result<_>)> = w_grid
        .par_iter()
        .enumerate()
        .map(|(i, &w)| {
            let cfg_i = OptimizerConfig {
                seed: derive_seed(cfg.seed, i as u64),
                ..*cfg
            };
            let rho = DensityMatrix::werner(w).expect("grid checked");
            (w, maximize(Functional::I3322, &rho.fano(), &cfg_i))
        })
        .collect();

    let mut tally = Tally::default();
    let mut stats = BTreeMap::new();
    let mut max_shortfall: f64 = 0.0;
    for (i, (w, outcome)) in results.into_iter().enumerate() {
        let rho = DensityMatrix::werner(w).expect("grid checked");
        tally.trials += 1;
        let r = match outcome {
            Ok(r) => r,
            Err(e) => {
                tally.fail(counterexample(i as u64, "optimize", e.to_string(), &rho, None, None));
                continue;
            }
        };
        let bound = 1.25 * w - 1.0;
        let excess = r.best_value - bound;
        tally.max_bound_gap = tally.max_bound_gap.max(excess);
        max_shortfall = max_shortfall.max(-excess);
        stats.insert(format!("best_i3322_w{w:.4}"), r.best_value);
        if excess > SOUNDNESS_TOL {
            tally.fail(counterexample(
                i as u64,
                "envelope",
                format!("I3322 = {} exceeds 5w/4 - 1 = {bound}", r.best_value),
                &rho,
                Some(Functional::I3322),
                Some(r.best_setting.clone()),
            ));
        }
        if w == 1.0 && r.best_value < I3322_SINGLET_MAX - crate::optimizer::DEFAULT_REACH_TOL {
            tally.fail(counterexample(
                i as u64,
                "attainment",
                format!("best I3322 for the singlet is {}, expected >= 0.249", r.best_value),
                &rho,
                Some(Functional::I3322),
                Some(r.best_setting),
            ));
        }
    }
    let mut report = tally.into_report("i3322_envelope", cfg.seed, sampler, started);
    report.stats = stats;
    report
        .stats
        .insert("max_shortfall_below_envelope".into(), max_shortfall);
    report.into_result()
}
