//! Experiment drivers: estimator validation against exact m-local entropy,
//! the grid that relates exact m-local entropy to learner KL, and a
//! perturbation-trend study on strongly local automata.
//!
//! Every driver is a pure function of its protocol. Automata run in parallel,
//! but results are always emitted in protocol order.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{m_local_entropy, next_symbol_entropy, LogBase, DEFAULT_CONTEXT_BUDGET};
use crate::error::{Error, Result};
use crate::generate::{local_cycle_dpfsa, random_dpfsa, GenConfig, LocalCycleConfig};
use crate::matrices::TransitionMatrices;
use crate::ngram::{heldout_cross_entropy, kl_estimate, plugin_m_local_entropy, Smoothing, SmoothedModel};
use crate::perturb::{perturb_corpus, Family, PerturbationSpec};
use crate::pfsa::Pfsa;
use crate::rng::SplitMix64;
use crate::sample::{sample_corpus, split_corpus, Corpus};
use crate::stats::{ols_fit, pearson, permutation_test, LineFit, PermutationTest};

/// First line of every records CSV.
pub const RECORDS_HEADER: &str = "# locent-records v1";
/// First line of the estimator-validation CSVs.
pub const TABLE1_HEADER: &str = "# locent-table1 v1";

/// A seed derived from `seed` and a key path, so that each automaton and
/// corpus gets an independent, reproducible stream.
pub fn derive_seed(seed: u64, key: &[u64]) -> u64 {
    SplitMix64::keyed(seed, key).next_u64()
}

fn write_csv<T: Serialize>(header: &str, rows: &[T], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{header}")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<T: for<'de> Deserialize<'de>>(header: &str, input: &mut dyn Read) -> Result<Vec<T>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let first = text.lines().next().unwrap_or_default();
    if first.trim() != header {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {header:?}, found {first:?}"),
        });
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}

// ---------------------------------------------------------------------------
// estimator validation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Table1Protocol {
    pub num_states: Vec<usize>,
    pub alphabet_sizes: Vec<usize>,
    pub topology_seeds: Vec<u64>,
    pub weight_seeds: Vec<u64>,
    pub target_mean_length: f64,
    /// Corpora are nested: each smaller corpus is a prefix of the largest.
    pub corpus_sizes: Vec<usize>,
    pub orders: Vec<usize>,
    pub sample_seed: u64,
    pub log_base: LogBase,
    pub context_budget: u128,
}

impl Default for Table1Protocol {
    fn default() -> Self {
        Self {
            num_states: vec![8, 16],
            alphabet_sizes: vec![32, 48],
            topology_seeds: vec![1, 2],
            weight_seeds: vec![101, 102],
            target_mean_length: 20.0,
            corpus_sizes: vec![50_000, 200_000],
            orders: vec![2, 3, 4, 5],
            sample_seed: 2024,
            log_base: LogBase::Nats,
            context_budget: DEFAULT_CONTEXT_BUDGET,
        }
    }
}

impl Table1Protocol {
    pub fn configs(&self) -> Vec<GenConfig> {
        let mut out = Vec::new();
        for &num_states in &self.num_states {
            for &alphabet_size in &self.alphabet_sizes {
                for &topology_seed in &self.topology_seeds {
                    for &weight_seed in &self.weight_seeds {
                        out.push(GenConfig {
                            num_states,
                            alphabet_size,
                            target_mean_length: self.target_mean_length,
                            topology_seed,
                            weight_seed,
                            ..Default::default()
                        });
                    }
                }
            }
        }
        out
    }
}

/// One automaton, order and corpus size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Measurement {
    pub automaton: usize,
    pub fingerprint: String,
    pub num_states: usize,
    pub alphabet_size: usize,
    pub topology_seed: u64,
    pub weight_seed: u64,
    pub sample_seed: u64,
    pub m: usize,
    pub corpus_size: usize,
    pub exact: f64,
    pub estimate: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub log_base: LogBase,
}

/// Errors aggregated over automata for one `(m, corpus_size)` cell. Relative
/// errors are in percent; `*_sd` are sample standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub m: usize,
    pub corpus_size: usize,
    pub automata: usize,
    pub mae: f64,
    pub mae_sd: f64,
    pub mre_percent: f64,
    pub mre_percent_sd: f64,
    pub log_base: LogBase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Result {
    pub rows: Vec<Table1Row>,
    pub measurements: Vec<Table1Measurement>,
}

impl Table1Result {
    pub fn row(&self, m: usize, corpus_size: usize) -> Option<&Table1Row> {
        self.rows
            .iter()
            .find(|r| r.m == m && r.corpus_size == corpus_size)
    }

    pub fn write_rows(&self, out: &mut dyn Write) -> Result<()> {
        write_csv(TABLE1_HEADER, &self.rows, out)
    }

    pub fn write_measurements(&self, out: &mut dyn Write) -> Result<()> {
        write_csv(TABLE1_HEADER, &self.measurements, out)
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run_table1(protocol: &Table1Protocol) -> Result<Table1Result> {
    let Some(&largest) = protocol.corpus_sizes.iter().max() else {
        return Err(Error::InvalidConfig("no corpus sizes".into()));
    };
    let base = protocol.log_base;
    let per_automaton = protocol
        .configs()
        .into_par_iter()
        .enumerate()
        .map(|(index, config)| -> Result<Vec<Table1Measurement>> {
            let pfsa = random_dpfsa(&config)?;
            let mats = TransitionMatrices::new(&pfsa)?;
            let sample_seed = derive_seed(protocol.sample_seed, &[index as u64]);
            let full = sample_corpus(&pfsa, largest, sample_seed)?;
            let fingerprint = pfsa.fingerprint();
            let mut out = Vec::new();
            for &m in &protocol.orders {
                let exact = m_local_entropy(&pfsa, &mats, m, protocol.context_budget)?
                    .in_base(base)
                    .value;
                for &size in &protocol.corpus_sizes {
                    let corpus = split_corpus(&full, &[size])?.remove(0);
                    let estimate = plugin_m_local_entropy(&corpus, m, base)?.value;
                    let abs_error = (estimate - exact).abs();
                    out.push(Table1Measurement {
                        automaton: index,
                        fingerprint: fingerprint.clone(),
                        num_states: config.num_states,
                        alphabet_size: config.alphabet_size,
                        topology_seed: config.topology_seed,
                        weight_seed: config.weight_seed,
                        sample_seed,
                        m,
                        corpus_size: size,
                        exact,
                        estimate,
                        abs_error,
                        rel_error: abs_error / exact,
                        log_base: base,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let measurements: Vec<Table1Measurement> = per_automaton.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for &m in &protocol.orders {
        for &size in &protocol.corpus_sizes {
            let cell: Vec<&Table1Measurement> = measurements
                .iter()
                .filter(|x| x.m == m && x.corpus_size == size)
                .collect();
            let abs: Vec<f64> = cell.iter().map(|x| x.abs_error).collect();
            let rel: Vec<f64> = cell.iter().map(|x| 100.0 * x.rel_error).collect();
            let (mae, mae_sd) = mean_sd(&abs);
            let (mre_percent, mre_percent_sd) = mean_sd(&rel);
            rows.push(Table1Row {
                m,
                corpus_size: size,
                automata: cell.len(),
                mae,
                mae_sd,
                mre_percent,
                mre_percent_sd,
                log_base: base,
            });
        }
    }
    Ok(Table1Result { rows, measurements })
}

// ---------------------------------------------------------------------------
// grid

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCell {
    pub num_states: usize,
    pub alphabet_size: usize,
}

impl GridCell {
    pub fn label(&self) -> String {
        format!("{}x{}", self.num_states, self.alphabet_size)
    }
}

/// The smoothed n-gram learner. Its order is chosen per automaton from
/// `candidate_orders` by validation cross-entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerSpec {
    pub smoothing: Smoothing,
    pub candidate_orders: Vec<usize>,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        Self {
            smoothing: Smoothing::default(),
            candidate_orders: vec![2, 3, 4, 5, 6],
        }
    }
}

impl LearnerSpec {
    pub fn name(&self) -> String {
        format!("ngram[{}]", self.smoothing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridProtocol {
    pub cells: Vec<GridCell>,
    pub topologies: usize,
    pub weightings: usize,
    pub target_mean_length: f64,
    pub train_size: usize,
    pub valid_size: usize,
    pub test_size: usize,
    pub learner: LearnerSpec,
    pub orders: Vec<usize>,
    pub seed: u64,
    pub log_base: LogBase,
    pub context_budget: u128,
}

impl Default for GridProtocol {
    fn default() -> Self {
        Self {
            cells: vec![GridCell {
                num_states: 16,
                alphabet_size: 32,
            }],
            topologies: 5,
            weightings: 5,
            target_mean_length: 20.0,
            train_size: 20_000,
            valid_size: 5_000,
            test_size: 5_000,
            learner: LearnerSpec::default(),
            orders: vec![2, 3, 4, 5],
            seed: 0,
            log_base: LogBase::Nats,
            context_budget: DEFAULT_CONTEXT_BUDGET,
        }
    }
}

impl GridProtocol {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: GridProtocol = serde_json::from_str(text)?;
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if self.learner.candidate_orders.is_empty() || self.learner.candidate_orders.contains(&0) {
            return Err(Error::InvalidConfig("learner needs candidate orders ≥ 1".into()));
        }
        if self.learner.smoothing == Smoothing::Mle {
            return Err(Error::InvalidConfig("the learner must be smoothed".into()));
        }
        if self.train_size == 0 || self.valid_size == 0 || self.test_size == 0 {
            return Err(Error::InvalidConfig("split sizes must be positive".into()));
        }
        Ok(())
    }

    /// Every automaton of the grid, in emission order.
    pub fn automata(&self) -> Vec<GridAutomaton> {
        let mut out = Vec::new();
        for (c, cell) in self.cells.iter().enumerate() {
            for t in 0..self.topologies {
                let topology_seed = derive_seed(self.seed, &[c as u64, t as u64]);
                for w in 0..self.weightings {
                    let weight_seed = derive_seed(self.seed, &[c as u64, t as u64, w as u64, 1]);
                    let sample_seed = derive_seed(self.seed, &[c as u64, t as u64, w as u64, 2]);
                    out.push(GridAutomaton {
                        cell: cell.label(),
                        index: t * self.weightings + w,
                        config: GenConfig {
                            num_states: cell.num_states,
                            alphabet_size: cell.alphabet_size,
                            target_mean_length: self.target_mean_length,
                            topology_seed,
                            weight_seed,
                            ..Default::default()
                        },
                        sample_seed,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAutomaton {
    pub cell: String,
    pub index: usize,
    pub config: GenConfig,
    pub sample_seed: u64,
}

/// One `(automaton, m)` measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub cell: String,
    pub automaton: usize,
    pub fingerprint: String,
    pub num_states: usize,
    pub alphabet_size: usize,
    pub topology_seed: u64,
    pub weight_seed: u64,
    pub sample_seed: u64,
    pub target_mean_length: f64,
    pub m: usize,
    pub exact_mlocal: f64,
    /// Plug-in estimate on the training and validation splits together.
    pub estimated_mlocal: f64,
    pub next_symbol_entropy: f64,
    pub learner: String,
    pub learner_order: usize,
    pub learner_ce: f64,
    pub kl: f64,
    pub train_size: usize,
    pub valid_size: usize,
    pub test_size: usize,
    pub log_base: LogBase,
}

/// Samples splits from `pfsa`, selects and scores the learner and measures
/// the exact and estimated m-local entropies. One record per protocol order.
pub fn evaluate_automaton(
    pfsa: &Pfsa,
    cell: &str,
    automaton: usize,
    config: &GenConfig,
    sample_seed: u64,
    protocol: &GridProtocol,
) -> Result<Vec<ExperimentRecord>> {
    let base = protocol.log_base;
    let mats = TransitionMatrices::new(pfsa)?;
    let total = protocol.train_size + protocol.valid_size + protocol.test_size;
    let corpus = sample_corpus(pfsa, total, sample_seed)?;
    let splits = split_corpus(
        &corpus,
        &[protocol.train_size, protocol.valid_size, protocol.test_size],
    )?;
    let (train, valid, test) = (&splits[0], &splits[1], &splits[2]);

    let mut best: Option<(f64, SmoothedModel)> = None;
    for &order in &protocol.learner.candidate_orders {
        let model = SmoothedModel::train(train, order, protocol.learner.smoothing)?;
        let ce = heldout_cross_entropy(&model, valid, base)?;
        if best.as_ref().is_none_or(|(b, _)| ce < *b) {
            best = Some((ce, model));
        }
    }
    let (_, model) = best.expect("candidate orders are nonempty");
    let learner_ce = heldout_cross_entropy(&model, test, base)?;
    let next = next_symbol_entropy(pfsa, &mats)?.in_base(base).value;
    let kl = kl_estimate(learner_ce, next);
    let train_valid = Corpus::concat([train, valid]);
    let fingerprint = pfsa.fingerprint();

    protocol
        .orders
        .iter()
        .map(|&m| {
            Ok(ExperimentRecord {
                cell: cell.to_string(),
                automaton,
                fingerprint: fingerprint.clone(),
                num_states: pfsa.num_states(),
                alphabet_size: pfsa.alphabet_size(),
                topology_seed: config.topology_seed,
                weight_seed: config.weight_seed,
                sample_seed,
                target_mean_length: config.target_mean_length,
                m,
                exact_mlocal: m_local_entropy(pfsa, &mats, m, protocol.context_budget)?
                    .in_base(base)
                    .value,
                estimated_mlocal: plugin_m_local_entropy(&train_valid, m, base)?.value,
                next_symbol_entropy: next,
                learner: protocol.learner.name(),
                learner_order: model.order(),
                learner_ce,
                kl,
                train_size: protocol.train_size,
                valid_size: protocol.valid_size,
                test_size: protocol.test_size,
                log_base: base,
            })
        })
        .collect()
}

pub fn run_grid(protocol: &GridProtocol) -> Result<Vec<ExperimentRecord>> {
    protocol.check()?;
    let per_automaton = protocol
        .automata()
        .into_par_iter()
        .map(|a| {
            let pfsa = random_dpfsa(&a.config)?;
            evaluate_automaton(&pfsa, &a.cell, a.index, &a.config, a.sample_seed, protocol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_automaton.into_iter().flatten().collect())
}

pub fn write_records(records: &[ExperimentRecord], out: &mut dyn Write) -> Result<()> {
    write_csv(RECORDS_HEADER, records, out)
}

pub fn read_records(input: &mut dyn Read) -> Result<Vec<ExperimentRecord>> {
    read_csv(RECORDS_HEADER, input)
}

// ---------------------------------------------------------------------------
// statistics over records

/// A numeric column of the records, optionally restricted to one order:
/// `mlocal:3`, `estimated:3`, `kl`, `ce`, `next`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnSpec {
    pub column: Column,
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    ExactMlocal,
    EstimatedMlocal,
    Kl,
    LearnerCe,
    NextSymbolEntropy,
}

impl FromStr for ColumnSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, m) = match s.split_once(':') {
            Some((n, m)) => (
                n,
                Some(m.parse::<usize>().map_err(|_| {
                    Error::InvalidConfig(format!("bad order in column {s:?}"))
                })?),
            ),
            None => (s, None),
        };
        let column = match name {
            "mlocal" | "exact_mlocal" => Column::ExactMlocal,
            "estimated" | "estimated_mlocal" => Column::EstimatedMlocal,
            "kl" => Column::Kl,
            "ce" | "learner_ce" => Column::LearnerCe,
            "next" | "next_symbol_entropy" => Column::NextSymbolEntropy,
            _ => return Err(Error::InvalidConfig(format!("unknown column {s:?}"))),
        };
        if matches!(column, Column::ExactMlocal | Column::EstimatedMlocal) && m.is_none() {
            return Err(Error::InvalidConfig(format!(
                "column {name} needs an order, e.g. {name}:3"
            )));
        }
        Ok(ColumnSpec { column, m })
    }
}

impl ColumnSpec {
    fn value(&self, r: &ExperimentRecord) -> f64 {
        match self.column {
            Column::ExactMlocal => r.exact_mlocal,
            Column::EstimatedMlocal => r.estimated_mlocal,
            Column::Kl => r.kl,
            Column::LearnerCe => r.learner_ce,
            Column::NextSymbolEntropy => r.next_symbol_entropy,
        }
    }

    /// One value per `(cell, automaton)`, keyed for joining.
    fn by_automaton(&self, records: &[ExperimentRecord]) -> BTreeMap<(String, usize), f64> {
        let mut out = BTreeMap::new();
        for r in records {
            if self.m.is_none_or(|m| m == r.m) {
                out.entry((r.cell.clone(), r.automaton))
                    .or_insert_with(|| self.value(r));
            }
        }
        out
    }
}

/// Paired `(x, y)` values per automaton, ordered by `(cell, automaton)`.
pub fn paired_columns(
    records: &[ExperimentRecord],
    x: ColumnSpec,
    y: ColumnSpec,
) -> Vec<(String, f64, f64)> {
    let xs = x.by_automaton(records);
    let ys = y.by_automaton(records);
    xs.into_iter()
        .filter_map(|(key, xv)| ys.get(&key).map(|&yv| (key.0, xv, yv)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSummary {
    pub group: String,
    pub points: usize,
    pub r: f64,
    pub fit: LineFit,
    pub permutation: Option<PermutationTest>,
}

/// Pearson r and OLS fit over the given points, plus a permutation test when
/// `shuffles > 0`.
pub fn summarize(group: &str, points: &[(f64, f64)], shuffles: usize, seed: u64) -> Result<StatsSummary> {
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    Ok(StatsSummary {
        group: group.to_string(),
        points: points.len(),
        r: pearson(&xs, &ys)?,
        fit: ols_fit(&xs, &ys)?,
        permutation: if shuffles > 0 {
            Some(permutation_test(&xs, &ys, shuffles, seed)?)
        } else {
            None
        },
    })
}

// ---------------------------------------------------------------------------
// perturbation trend

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrendProtocol {
    pub automata: usize,
    pub alphabet_size: usize,
    pub successor_prob: f64,
    pub target_mean_length: f64,
    pub corpus_size: usize,
    pub shuffle_seeds: usize,
    pub window_sizes: Vec<usize>,
    pub m: usize,
    pub seed: u64,
    pub log_base: LogBase,
}

impl Default for TrendProtocol {
    fn default() -> Self {
        Self {
            automata: 5,
            alphabet_size: 8,
            successor_prob: 0.9,
            target_mean_length: 20.0,
            corpus_size: 5_000,
            shuffle_seeds: 20,
            window_sizes: vec![3, 4, 5, 6, 7],
            m: 3,
            seed: 0,
            log_base: LogBase::Nats,
        }
    }
}

/// Mean and standard error of the plug-in entropy over shuffle seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeedSummary {
    pub mean: f64,
    pub std_error: f64,
}

impl SeedSummary {
    fn of(xs: &[f64]) -> Self {
        let (mean, sd) = mean_sd(xs);
        Self {
            mean,
            std_error: sd / (xs.len() as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendResult {
    pub automaton: usize,
    pub base: f64,
    /// `(k, summary)` in protocol order.
    pub k_local: Vec<(usize, SeedSummary)>,
    pub deterministic_shuffle: SeedSummary,
    pub reverse: f64,
    pub even_odd: f64,
    pub odd_even: f64,
}

/// Plug-in m-local entropy of corpora from strongly local automata, before
/// and after each perturbation.
pub fn run_perturbation_trend(protocol: &TrendProtocol) -> Result<Vec<TrendResult>> {
    let base = protocol.log_base;
    let m = protocol.m;
    (0..protocol.automata)
        .into_par_iter()
        .map(|i| {
            let pfsa = local_cycle_dpfsa(&LocalCycleConfig {
                alphabet_size: protocol.alphabet_size,
                successor_prob: protocol.successor_prob,
                target_mean_length: protocol.target_mean_length,
                seed: derive_seed(protocol.seed, &[i as u64, 0]),
            })?;
            let corpus = sample_corpus(&pfsa, protocol.corpus_size, derive_seed(protocol.seed, &[i as u64, 1]))?;
            let h = |c: &Corpus| plugin_m_local_entropy(c, m, base).map(|r| r.value);
            let fixed = |family: Family| -> Result<f64> {
                h(&perturb_corpus(&corpus, &PerturbationSpec { family, seed: 0, k: None })?)
            };
            let over_seeds = |family: Family, k: Option<usize>| -> Result<SeedSummary> {
                let values = (0..protocol.shuffle_seeds as u64)
                    .map(|seed| {
                        let seed = derive_seed(protocol.seed, &[i as u64, 2, seed]);
                        h(&perturb_corpus(&corpus, &PerturbationSpec { family, seed, k })?)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(SeedSummary::of(&values))
            };
            Ok(TrendResult {
                automaton: i,
                base: h(&corpus)?,
                k_local: protocol
                    .window_sizes
                    .iter()
                    .map(|&k| Ok((k, over_seeds(Family::KLocal, Some(k))?)))
                    .collect::<Result<Vec<_>>>()?,
                deterministic_shuffle: over_seeds(Family::DeterministicShuffle, None)?,
                reverse: fixed(Family::Reverse)?,
                even_odd: fixed(Family::EvenOdd)?,
                odd_even: fixed(Family::OddEven)?,
            })
        })
        .collect()
}
