//! Run-by-run simulation of a projective measurement apparatus.
//!
//! A run has two stages. Stage 1 draws `u₁` and samples the microscopic
//! property `j` of the primary observable from `Tr(ρ P_j)`; the primary
//! pointer is set to `j`. Two further uniforms are then drawn, one per
//! handle setting. Only now is the handle read: its uniform `u₂` samples the
//! secondary outcome `k` from the conditional `Tr(ρ P_j Q_k) / Tr(ρ P_j)` of
//! the PDI it selects.
//!
//! Because `u₁` is consumed before the handle is consulted, replaying a seed
//! with the other handle setting reproduces the primary pointer exactly: the
//! primary outcome of a run does not depend on which compatible observable
//! is measured alongside it.
//!
//! Pointer positions are plain integers (block indices in canonical
//! descending eigenvalue order). The apparatus Hilbert space, its ready
//! state and the "broken apparatus" pointer subspace are not modeled.
//!
//! Seeds: every run owns a [`Xoshiro256PlusPlus`] seeded through SplitMix64
//! (`seed_from_u64`). Run `i` of a batch with base seed `s` uses seed
//! `s ^ i`. The second particle of a two-apparatus run uses the same
//! generator advanced by one `jump()` (2¹²⁸ steps), so the two streams never
//! overlap.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::contexts::observable_pdis;
use crate::error::{Error, Result};
use crate::scenario::{validate_density, Scenario, SCENARIO_TOL};
use crate::spectral::{born_probability, born_weight, commutes, DensityOperator, Pdi};

/// Tolerance on the normalization of sampling distributions.
pub const SAMPLING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Handle {
    B,
    C,
}

impl Handle {
    fn slot(self) -> usize {
        match self {
            Handle::B => 0,
            Handle::C => 1,
        }
    }
}

impl fmt::Display for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Handle::B => "B",
            Handle::C => "C",
        })
    }
}

impl FromStr for Handle {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "B" | "b" => Ok(Handle::B),
            "C" | "c" => Ok(Handle::C),
            other => Err(format!("unknown handle `{other}`")),
        }
    }
}

/// Measures the primary observable together with one of two secondary
/// observables, chosen by the handle.
#[derive(Debug, Clone, PartialEq)]
pub struct Apparatus {
    primary: Pdi,
    secondary: [Pdi; 2],
    handle: Handle,
    pointer_map: Vec<usize>,
}

impl Apparatus {
    /// Rejects secondaries that do not commute blockwise with the primary.
    pub fn new(primary: Pdi, secondary_b: Pdi, secondary_c: Pdi, handle: Handle, tol: f64) -> Result<Self> {
        for (name, sec) in [("B", &secondary_b), ("C", &secondary_c)] {
            for p in primary.blocks() {
                for q in sec.blocks() {
                    if !commutes(p.projector.matrix(), q.projector.matrix(), tol)? {
                        return Err(Error::Incompatible(format!(
                            "secondary PDI {name} does not commute with the primary PDI"
                        )));
                    }
                }
            }
        }
        let pointer_map = (0..primary.len()).collect();
        Ok(Self {
            primary,
            secondary: [secondary_b, secondary_c],
            handle,
            pointer_map,
        })
    }

    /// Apparatus built from three labeled observables of a scenario.
    pub fn from_scenario(s: &Scenario, primary: &str, b: &str, c: &str, handle: Handle) -> Result<Self> {
        let pdis = observable_pdis(s)?;
        let find = |label: &str| {
            s.index_of(label).map(|i| pdis[i].clone()).ok_or_else(|| Error::Validation {
                label: label.into(),
                reason: "no such observable".into(),
            })
        };
        Self::new(find(primary)?, find(b)?, find(c)?, handle, crate::spectral::DEFAULT_COMMUTE_TOL)
    }

    /// The standard `A` / `B` / `C` apparatus.
    pub fn abc(s: &Scenario, handle: Handle) -> Result<Self> {
        Self::from_scenario(s, "A", "B", "C", handle)
    }

    pub fn with_handle(&self, handle: Handle) -> Self {
        Self { handle, ..self.clone() }
    }

    /// Replaces the property → pointer wiring (identity by default).
    pub fn with_pointer_map(&self, map: Vec<usize>) -> Result<Self> {
        let mut sorted = map.clone();
        sorted.sort_unstable();
        if sorted != (0..self.primary.len()).collect::<Vec<_>>() {
            return Err(Error::OutOfRange("pointer map must be a permutation of the blocks".into()));
        }
        Ok(Self {
            pointer_map: map,
            ..self.clone()
        })
    }

    pub fn primary(&self) -> &Pdi {
        &self.primary
    }

    pub fn secondary(&self, handle: Handle) -> &Pdi {
        &self.secondary[handle.slot()]
    }

    pub fn handle(&self) -> Handle {
        self.handle
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub handle: Handle,
    /// Sampled block index of the primary PDI.
    pub property: usize,
    pub pointer1: usize,
    pub pointer2: usize,
    /// Stage-1 distribution the property was drawn from.
    pub probabilities: Vec<f64>,
}

/// One line of a JSON-lines run log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seed: u64,
    pub handle: Handle,
    pub property: usize,
    pub pointer1: usize,
    pub pointer2: usize,
}

impl From<&RunRecord> for LogRecord {
    fn from(r: &RunRecord) -> Self {
        Self {
            seed: r.seed,
            handle: r.handle,
            property: r.property,
            pointer1: r.pointer1,
            pointer2: r.pointer2,
        }
    }
}

impl RunRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&LogRecord::from(self)).expect("log record serializes")
    }
}

/// First index whose cumulative probability exceeds `u`. Values of `u` at or
/// beyond the total mass fall on the last block with positive probability.
fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return j;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn stage_one_distribution(rho: &DensityOperator, pdi: &Pdi) -> Result<Vec<f64>> {
    let probs = pdi
        .blocks()
        .iter()
        .map(|b| born_probability(rho, &b.projector))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SAMPLING_TOL {
        return Err(Error::DegenerateDistribution { total });
    }
    Ok(probs)
}

/// Inverse-CDF sample of a block of `pdi` from its Born distribution.
pub fn sample_property(rho: &DensityOperator, pdi: &Pdi, u: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::OutOfRange(format!("uniform draw {u} outside [0, 1)")));
    }
    Ok(inverse_cdf(&stage_one_distribution(rho, pdi)?, u))
}

/// Sampling tables of an apparatus under a fixed state, computed once and
/// reused for every run.
#[derive(Debug, Clone)]
pub struct Experiment {
    primary: Vec<f64>,
    /// `conditional[handle][j]`, `None` when `Tr(ρ P_j)` vanishes.
    conditional: [Vec<Option<Vec<f64>>>; 2],
    secondary_len: [usize; 2],
    pointer_map: Vec<usize>,
}

impl Experiment {
    pub fn new(rho: &DensityOperator, app: &Apparatus) -> Result<Self> {
        let primary = stage_one_distribution(rho, &app.primary)?;
        let mut conditional: [Vec<Option<Vec<f64>>>; 2] = [Vec::new(), Vec::new()];
        for handle in [Handle::B, Handle::C] {
            let sec = app.secondary(handle);
            conditional[handle.slot()] = app
                .primary
                .blocks()
                .iter()
                .zip(&primary)
                .map(|(p, &pj)| {
                    if pj <= SAMPLING_TOL {
                        return Ok(None);
                    }
                    let joint = sec
                        .blocks()
                        .iter()
                        .map(|q| {
                            let m = (p.projector.matrix() * q.projector.matrix()).hermitian_part();
                            Ok(born_weight(rho, &m)?.max(0.0) / pj)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Some(joint))
                })
                .collect::<Result<Vec<_>>>()?;
        }
        Ok(Self {
            primary,
            conditional,
            secondary_len: [app.secondary[0].len(), app.secondary[1].len()],
            pointer_map: app.pointer_map.clone(),
        })
    }

    pub fn primary_distribution(&self) -> &[f64] {
        &self.primary
    }

    /// Born joint `Pr(j, k)` under `handle`, row-major with `k` fastest.
    pub fn joint_distribution(&self, handle: Handle) -> Vec<f64> {
        self.conditional[handle.slot()]
            .iter()
            .zip(&self.primary)
            .flat_map(|(cond, &pj)| match cond {
                Some(c) => c.iter().map(|ck| pj * ck).collect::<Vec<_>>(),
                None => vec![0.0; self.secondary_len[handle.slot()]],
            })
            .collect()
    }

    fn run_with(&self, rng: &mut Xoshiro256PlusPlus, seed: u64, handle: Handle) -> Result<RunRecord> {
        let u1: f64 = rng.random();
        let property = inverse_cdf(&self.primary, u1);
        let pointer1 = self.pointer_map[property];

        // The handle is read only after the property is fixed.
        let u2: [f64; 2] = [rng.random(), rng.random()];
        let u2 = u2[handle.slot()];
        let cond = self.conditional[handle.slot()][property]
            .as_ref()
            .ok_or(Error::ZeroConditional {
                index: property,
                weight: self.primary[property],
            })?;
        let pointer2 = inverse_cdf(cond, u2);
        Ok(RunRecord {
            seed,
            handle,
            property,
            pointer1,
            pointer2,
            probabilities: self.primary.clone(),
        })
    }

    pub fn run(&self, seed: u64, handle: Handle) -> Result<RunRecord> {
        self.run_with(&mut Xoshiro256PlusPlus::seed_from_u64(seed), seed, handle)
    }

    /// Runs `runs` experiments with seeds `base ^ i`.
    pub fn batch(&self, base: u64, runs: usize, handle: Handle) -> Result<Vec<RunRecord>> {
        (0..runs).map(|i| self.run(run_seed(base, i), handle)).collect()
    }

    /// The same seed replayed under both handle settings.
    pub fn counterfactual_pair(&self, seed: u64) -> Result<(RunRecord, RunRecord)> {
        Ok((self.run(seed, Handle::B)?, self.run(seed, Handle::C)?))
    }
}

/// Seed of run `i` in a batch with base seed `base`.
pub fn run_seed(base: u64, i: usize) -> u64 {
    base ^ i as u64
}

/// One run at the apparatus's current handle setting.
pub fn run_experiment(s: &Scenario, app: &Apparatus, seed: u64) -> Result<RunRecord> {
    Experiment::new(s.rho(), app)?.run(seed, app.handle)
}

/// Replays `seed` with the handle at `B` and at `C`.
pub fn counterfactual_pair(s: &Scenario, app: &Apparatus, seed: u64) -> Result<(RunRecord, RunRecord)> {
    Experiment::new(s.rho(), app)?.counterfactual_pair(seed)
}

/// Fraction of pairs whose primary pointers agree.
pub fn primary_agreement(pairs: &[(RunRecord, RunRecord)]) -> f64 {
    if pairs.is_empty() {
        return 1.0;
    }
    let agree = pairs.iter().filter(|(b, c)| b.pointer1 == c.pointer1).count();
    agree as f64 / pairs.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub block: usize,
    pub runs: usize,
    pub passed: bool,
}

/// Prepares `P_block / rank` and checks that every run leaves the primary
/// pointer at `block`.
pub fn calibrate(s: &Scenario, app: &Apparatus, block: usize, runs: usize, seed: u64) -> Result<CalibrationReport> {
    let target = app.primary.blocks().get(block).ok_or_else(|| {
        Error::OutOfRange(format!("block {block} of a {}-block PDI", app.primary.len()))
    })?;
    if target.projector.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: target.projector.dim(),
        });
    }
    let rank = target.projector.rank().max(1) as f64;
    let rho = validate_density(&target.projector.matrix().scale(1.0 / rank), SCENARIO_TOL)?;
    let exp = Experiment::new(&rho, app)?;
    for i in 0..runs {
        let rec = exp.run(run_seed(seed, i), app.handle)?;
        if rec.pointer1 != block {
            return Err(Error::CalibrationFailure {
                run: i + 1,
                pointer: rec.pointer1,
                expected: block,
            });
        }
    }
    Ok(CalibrationReport {
        block,
        runs,
        passed: true,
    })
}

/// The property a pointer reading reveals: `Pr(P_k | M_j) = δ_jk`.
pub fn infer_property(r: &RunRecord) -> usize {
    r.pointer1
}

/// Two identically prepared particles measured at once, the first by the
/// `{A, B}` apparatus and the second by the `{A, C}` apparatus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRecord {
    pub seed: u64,
    pub first: RunRecord,
    pub second: RunRecord,
}

impl PairedRecord {
    /// `(a₁, b, a₂, c)` as pointer indices.
    pub fn outcome(&self) -> [usize; 4] {
        [
            self.first.pointer1,
            self.first.pointer2,
            self.second.pointer1,
            self.second.pointer2,
        ]
    }
}

/// Two-particle experiment over a fixed apparatus; see [`two_apparatus_run`].
#[derive(Debug, Clone)]
pub struct TwoApparatus {
    experiment: Experiment,
}

impl TwoApparatus {
    /// Uses the scenario's `A`, `B`, `C` observables.
    pub fn new(s: &Scenario) -> Result<Self> {
        Self::from_apparatus(s.rho(), &Apparatus::abc(s, Handle::B)?)
    }

    /// Particle 1 sees the handle at `B`, particle 2 at `C`.
    pub fn from_apparatus(rho: &DensityOperator, app: &Apparatus) -> Result<Self> {
        Ok(Self {
            experiment: Experiment::new(rho, app)?,
        })
    }

    pub fn experiment(&self) -> &Experiment {
        &self.experiment
    }

    pub fn run(&self, seed: u64) -> Result<PairedRecord> {
        let mut first_rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut second_rng = first_rng.clone();
        second_rng.jump();
        Ok(PairedRecord {
            seed,
            first: self.experiment.run_with(&mut first_rng, seed, Handle::B)?,
            second: self.experiment.run_with(&mut second_rng, seed, Handle::C)?,
        })
    }

    pub fn batch(&self, base: u64, runs: usize) -> Result<Vec<PairedRecord>> {
        (0..runs).map(|i| self.run(run_seed(base, i))).collect()
    }
}

/// One paired run on the scenario's `A`, `B`, `C` observables; the joint
/// law is `Tr(ρ P_j Q_k) · Tr(ρ P_j′ R_l)`.
pub fn two_apparatus_run(s: &Scenario, seed: u64) -> Result<PairedRecord> {
    TwoApparatus::new(s)?.run(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyCell {
    pub outcome: Vec<usize>,
    pub count: u64,
    pub frequency: f64,
}

/// Counts per outcome tuple, sorted by tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub total: u64,
    pub cells: Vec<FrequencyCell>,
}

impl FrequencyTable {
    pub fn from_outcomes<I: IntoIterator<Item = Vec<usize>>>(outcomes: I) -> Result<Self> {
        let mut counts = std::collections::BTreeMap::new();
        let mut total = 0u64;
        for o in outcomes {
            *counts.entry(o).or_insert(0u64) += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::EmptyInput);
        }
        let cells = counts
            .into_iter()
            .map(|(outcome, count)| FrequencyCell {
                outcome,
                count,
                frequency: count as f64 / total as f64,
            })
            .collect();
        Ok(Self { total, cells })
    }

    pub fn count(&self, outcome: &[usize]) -> u64 {
        self.cells
            .iter()
            .find(|c| c.outcome == outcome)
            .map_or(0, |c| c.count)
    }

    pub fn frequency(&self, outcome: &[usize]) -> f64 {
        self.count(outcome) as f64 / self.total as f64
    }
}

/// Frequencies of `(pointer1, pointer2)` over records sharing one handle.
pub fn empirical_frequencies(records: &[RunRecord]) -> Result<FrequencyTable> {
    let first = records.first().ok_or(Error::EmptyInput)?;
    if records.iter().any(|r| r.handle != first.handle) {
        return Err(Error::MixedHandles);
    }
    FrequencyTable::from_outcomes(records.iter().map(|r| vec![r.pointer1, r.pointer2]))
}
