//! Grid sweeps over synthetic Gaussian pairs, one CSV row per
//! (grid point, variant).

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use grc_core::codecs;
use grc_core::engine::{derive_seed, encode, Encoder};
use grc_core::{gaussian_pair_for_targets, DistributionPair, SplitRule};
use rayon::prelude::*;
use thiserror::Error;

use crate::knn::kl_bias_estimate;
use crate::stats::{ks_test, summarize, Summary};

/// Above this `D_∞` the global rule is skipped unless explicitly requested.
pub const GLOBAL_DINF_LIMIT: f64 = 10.0;
pub const MIN_SEEDS: usize = 100;

pub const HEADER: [&str; 18] = [
    "dkl_target",
    "dinf_target",
    "variant",
    "n",
    "mean_steps",
    "se_steps",
    "mean_bits",
    "se_bits",
    "ks_p",
    "mean_depth",
    "se_depth",
    "mean_path_bits",
    "se_path_bits",
    "d_max",
    "kl_bias",
    "se_kl_bias",
    "mode",
    "skipped",
];

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("encoding failed at D_KL = {dkl}, D_inf = {dinf}, {variant}, seed {seed}: {message}")]
    Run { dkl: f64, dinf: f64, variant: SplitRule, seed: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed sweep CSV: {0}")]
    Schema(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    RuntimeVsDinf,
    CodelengthVsDkl,
    BiasVsExtraBits,
    Unbiasedness,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::RuntimeVsDinf => "runtime_vs_dinf",
            Mode::CodelengthVsDkl => "codelength_vs_dkl",
            Mode::BiasVsExtraBits => "bias_vs_extra_bits",
            Mode::Unbiasedness => "unbiasedness",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Mode::RuntimeVsDinf, Mode::CodelengthVsDkl, Mode::BiasVsExtraBits, Mode::Unbiasedness]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

/// A `D_∞` grid entry: absolute, or a gap above `D_KL` written `+g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DinfSpec {
    Absolute(f64),
    Gap(f64),
}

impl DinfSpec {
    pub fn resolve(&self, dkl: f64) -> f64 {
        match *self {
            DinfSpec::Absolute(v) => v,
            DinfSpec::Gap(g) => dkl + g,
        }
    }
}

impl FromStr for DinfSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse = |t: &str| t.parse::<f64>().map_err(|e| format!("bad D_inf value {s:?}: {e}"));
        match s.strip_prefix('+') {
            Some(gap) => parse(gap).map(DinfSpec::Gap),
            None => parse(s).map(DinfSpec::Absolute),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub mode: Mode,
    pub dkl: Vec<f64>,
    pub dinf: Vec<DinfSpec>,
    pub seeds_per_point: usize,
    pub seed_base: u64,
    pub variants: Vec<SplitRule>,
    /// Depth limits; `None` is exact GRC. In bias mode entries are extra bits
    /// above `D_KL`.
    pub d_max: Vec<Option<u64>>,
    pub include_slow_global: bool,
}

impl SweepConfig {
    pub fn new(mode: Mode, dkl: Vec<f64>, dinf: Vec<DinfSpec>) -> Self {
        Self {
            mode,
            dkl,
            dinf,
            seeds_per_point: 4000,
            seed_base: 0,
            variants: vec![SplitRule::Global, SplitRule::SampleSplit, SplitRule::Dyadic],
            d_max: vec![None],
            include_slow_global: false,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.dkl.is_empty() || self.dinf.is_empty() || self.variants.is_empty() || self.d_max.is_empty() {
            return Err(SweepError::Config("grids must be nonempty".into()));
        }
        if self.seeds_per_point < MIN_SEEDS {
            return Err(SweepError::Config(format!("seeds per point must be at least {MIN_SEEDS}")));
        }
        Ok(())
    }
}

/// Outcome of a single encode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunRecord {
    pub steps: u64,
    pub depth: u64,
    /// Length of the serialized payload.
    pub bits: usize,
    pub path_bits: f64,
    pub sample: f64,
    pub accepted: bool,
}

/// Encodes and serializes one run; the codelength is measured on the actual
/// codeword.
pub fn run_once(pair: &DistributionPair, rule: SplitRule, seed: u64, d_max: Option<u64>) -> Result<RunRecord, String> {
    let result = encode(pair, rule, seed, d_max).map_err(|e| e.to_string())?;
    let code = codecs::payload(&result, pair.proposal()).map_err(|e| e.to_string())?;
    Ok(RunRecord {
        steps: result.steps(),
        depth: result.depth,
        bits: code.len(),
        path_bits: result.path_cost_bits(),
        sample: result.sample,
        accepted: result.accepted,
    })
}

/// Seed of run `i` at every grid point, so that points share randomness.
pub fn run_seed(seed_base: u64, i: u64) -> u64 {
    derive_seed(seed_base, i)
}

/// Runs `n` encodes in parallel; the output is in seed order.
pub fn run_point(
    pair: &DistributionPair,
    rule: SplitRule,
    n: usize,
    seed_base: u64,
    d_max: Option<u64>,
) -> Result<Vec<RunRecord>, (u64, String)> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let seed = run_seed(seed_base, i);
            run_once(pair, rule, seed, d_max).map_err(|e| (seed, e))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub mode: Mode,
    pub dkl_target: f64,
    pub dinf_target: f64,
    pub variant: SplitRule,
    pub n: usize,
    pub steps: Option<Summary>,
    pub bits: Option<Summary>,
    pub depth: Option<Summary>,
    pub path_bits: Option<Summary>,
    pub ks_p: Option<f64>,
    pub d_max: Option<u64>,
    pub kl_bias: Option<Summary>,
    pub skipped: Option<String>,
}

impl SweepRow {
    fn skipped(mode: Mode, dkl: f64, dinf: f64, variant: SplitRule, d_max: Option<u64>, reason: String) -> Self {
        Self {
            mode,
            dkl_target: dkl,
            dinf_target: dinf,
            variant,
            n: 0,
            steps: None,
            bits: None,
            depth: None,
            path_bits: None,
            ks_p: None,
            d_max,
            kl_bias: None,
            skipped: Some(reason),
        }
    }

    pub fn from_runs(
        mode: Mode,
        pair: &DistributionPair,
        dkl: f64,
        dinf: f64,
        variant: SplitRule,
        d_max: Option<u64>,
        runs: &[RunRecord],
    ) -> Self {
        let col = |f: fn(&RunRecord) -> f64| summarize(&runs.iter().map(f).collect::<Vec<_>>());
        let samples: Vec<f64> = runs.iter().map(|r| r.sample).collect();
        Self {
            mode,
            dkl_target: dkl,
            dinf_target: dinf,
            variant,
            n: runs.len(),
            steps: Some(col(|r| r.steps as f64)),
            bits: Some(col(|r| r.bits as f64)),
            depth: Some(col(|r| r.depth as f64)),
            path_bits: Some(col(|r| r.path_bits)),
            ks_p: Some(ks_test(&samples, |x| pair.target().cdf(x)).p_value),
            d_max,
            kl_bias: None,
            skipped: None,
        }
    }

    pub fn record(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mean = |s: &Option<Summary>| num(s.map(|s| s.mean));
        let se = |s: &Option<Summary>| num(s.map(|s| s.se));
        vec![
            self.dkl_target.to_string(),
            self.dinf_target.to_string(),
            self.variant.name().to_string(),
            self.n.to_string(),
            mean(&self.steps),
            se(&self.steps),
            mean(&self.bits),
            se(&self.bits),
            num(self.ks_p),
            mean(&self.depth),
            se(&self.depth),
            mean(&self.path_bits),
            se(&self.path_bits),
            self.d_max.map(|d| d.to_string()).unwrap_or_else(|| "inf".into()),
            mean(&self.kl_bias),
            se(&self.kl_bias),
            self.mode.name().to_string(),
            self.skipped.clone().unwrap_or_default(),
        ]
    }
}

/// Runs every (point, variant, depth limit) of the grid in order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, SweepError> {
    config.validate()?;
    let mut rows = Vec::new();
    for &dkl in &config.dkl {
        for spec in &config.dinf {
            let dinf = spec.resolve(dkl);
            let pair = gaussian_pair_for_targets(dkl, dinf);
            for &variant in &config.variants {
                for &limit in &config.d_max {
                    let d_max = match config.mode {
                        Mode::BiasVsExtraBits => limit.map(|extra| dkl.round() as u64 + extra),
                        _ => limit,
                    };
                    let pair = match &pair {
                        Ok(p) => p,
                        Err(e) => {
                            rows.push(SweepRow::skipped(config.mode, dkl, dinf, variant, d_max, e.to_string()));
                            continue;
                        }
                    };
                    if variant == SplitRule::Global && dinf > GLOBAL_DINF_LIMIT && !config.include_slow_global {
                        let reason = format!("GRCG excluded above D_inf = {GLOBAL_DINF_LIMIT} bits");
                        rows.push(SweepRow::skipped(config.mode, dkl, dinf, variant, d_max, reason));
                        continue;
                    }
                    let runs = run_point(pair, variant, config.seeds_per_point, config.seed_base, d_max).map_err(
                        |(seed, message)| SweepError::Run { dkl, dinf, variant, seed, message },
                    )?;
                    let mut row = SweepRow::from_runs(config.mode, pair, dkl, dinf, variant, d_max, &runs);
                    if config.mode == Mode::BiasVsExtraBits {
                        row.kl_bias = Some(bias_of_runs(pair, &runs, config.seed_base));
                    }
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

/// Group size and count of the bias protocol.
pub const BIAS_GROUP_SIZE: usize = 200;
pub const BIAS_GROUPS: usize = 10;

/// KL bias of the first `BIAS_GROUPS × BIAS_GROUP_SIZE` runs, grouped in
/// seed order.
pub fn bias_of_runs(pair: &DistributionPair, runs: &[RunRecord], seed: u64) -> Summary {
    let groups: Vec<Vec<f64>> = runs
        .chunks(BIAS_GROUP_SIZE)
        .take(BIAS_GROUPS)
        .filter(|c| c.len() == BIAS_GROUP_SIZE)
        .map(|c| c.iter().map(|r| r.sample).collect())
        .collect();
    kl_bias_estimate(&groups, pair.target(), seed).0
}

/// Depth-limited bias study: one row per extra-bit budget plus one exact row.
pub fn run_bias(
    dkl: f64,
    dinf: f64,
    extra_bits: &[u64],
    seed_base: u64,
) -> Result<Vec<SweepRow>, SweepError> {
    let pair = gaussian_pair_for_targets(dkl, dinf).map_err(|e| SweepError::Config(e.to_string()))?;
    let n = BIAS_GROUPS * BIAS_GROUP_SIZE;
    let limits = extra_bits
        .iter()
        .map(|&d| Some(dkl.round() as u64 + d))
        .chain(std::iter::once(None));
    let mut rows = Vec::new();
    for d_max in limits {
        let runs = run_point(&pair, SplitRule::Dyadic, n, seed_base, d_max).map_err(|(seed, message)| {
            SweepError::Run { dkl, dinf, variant: SplitRule::Dyadic, seed, message }
        })?;
        let mut row = SweepRow::from_runs(Mode::BiasVsExtraBits, &pair, dkl, dinf, SplitRule::Dyadic, d_max, &runs);
        row.kl_bias = Some(bias_of_runs(&pair, &runs, seed_base));
        rows.push(row);
    }
    Ok(rows)
}

/// Contraction of the sample-splitting partition: mean `P(S_d)` for
/// `d = 0..=depth`, following the partition regardless of acceptance.
pub fn contraction_profile(pair: &DistributionPair, depth: usize, n: usize, seed_base: u64) -> Vec<Summary> {
    let traces: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut enc = Encoder::new(pair, SplitRule::SampleSplit, run_seed(seed_base, i), None);
            let mut masses = vec![enc.state().proposal_mass];
            for _ in 0..depth {
                let (x, randoms) = enc.draw();
                enc.reject(x, randoms.u_branch).expect("sample split never degenerates");
                masses.push(enc.state().proposal_mass);
            }
            masses
        })
        .collect();
    (0..=depth)
        .map(|d| summarize(&traces.iter().map(|t| t[d]).collect::<Vec<_>>()))
        .collect()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Parsed CSV: header-checked string records.
pub struct Table {
    pub rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn column(&self, name: &str) -> usize {
        HEADER.iter().position(|h| *h == name).expect("known column")
    }

    pub fn get<'a>(&self, row: &'a csv::StringRecord, name: &str) -> &'a str {
        row.get(self.column(name)).unwrap_or("")
    }

    pub fn number(&self, row: &csv::StringRecord, name: &str) -> Option<f64> {
        self.get(row, name).parse().ok()
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<Table, SweepError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = r.records();
    let header = records.next().ok_or_else(|| SweepError::Schema("empty file".into()))??;
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(SweepError::Schema(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let rows = records.collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(SweepError::Schema("no data rows".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != HEADER.len()) {
        return Err(SweepError::Schema(format!("row with {} fields", bad.len())));
    }
    Ok(Table { rows })
}
