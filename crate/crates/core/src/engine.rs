//! Greedy rejection coding encoder and decoder.
//!
//! For a unimodal density ratio `r = dQ/dP` the measure-valued recursion
//! collapses to three scalars per step: the level `L_d`, the unaccounted
//! target mass `1 - T_d = ∫_{S_d} (r - L_d)_+ dP` and the proposal mass of the
//! active interval `P(S_d)`. With those, a proposal `x ~ P|S_d` is accepted
//! with probability `clip(P(S_d) (r(x) - L_d) / (1 - T_d), 0, 1)`, and after a
//! rejection the level moves to `L_{d+1} = L_d + (1 - T_d) / P(S_d)`.
//!
//! Every random quantity is a pure function of `(seed, heap index)`, which
//! lets the decoder replay exactly the nodes on the accepted path without
//! simulating any rejected branch.

use thiserror::Error;

use crate::distributions::{Distribution1D, DistributionPair};
use crate::partition::{split_dyadic, split_global, split_sample, HeapIndex, Interval, PartitionError, SplitRule};

/// Hard step cap; reaching it means the inputs violated the coding contract.
pub const MAX_STEPS: u64 = 1_000_000;

/// Unaccounted mass below which the run is treated as exhausted.
pub const EXHAUSTION_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("all target mass ruled out at step {step}")]
    Degenerate { step: u64 },
    #[error("both children of the active interval carry no residual mass at step {step}")]
    DegenerateBranch { step: u64 },
    #[error("no acceptance within {0} steps")]
    NonTermination(u64),
    #[error("heap index {0} leads into a zero-mass interval")]
    InvalidIndex(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// The three uniforms attached to one tree node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeRandoms {
    pub u_sample: f64,
    pub u_accept: f64,
    pub u_branch: f64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const LANES: [u64; 3] = [0xA076_1D64_78BD_642F, 0xE703_7ED1_A0B4_28DB, 0x8EBC_6AF0_9C88_C6E3];

/// SplitMix64 output function.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps 53 random bits to the open unit interval.
fn to_unit(h: u64) -> f64 {
    ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Counter-based uniforms for node `index` under `seed`.
///
/// The key absorbs the seed and then each little-endian 64-bit limb of the
/// index through SplitMix64; lane `k` finalises `key ^ LANES[k]`. The output
/// depends only on integer arithmetic, so it is identical on every platform.
pub fn node_randoms(seed: u64, index: &HeapIndex) -> NodeRandoms {
    let mut key = mix64(seed ^ GOLDEN);
    for limb in index.limbs() {
        key = mix64(key ^ limb).wrapping_add(GOLDEN);
    }
    NodeRandoms {
        u_sample: to_unit(mix64(key ^ LANES[0])),
        u_accept: to_unit(mix64(key ^ LANES[1])),
        u_branch: to_unit(mix64(key ^ LANES[2])),
    }
}

/// Independent stream seed for lane `lane` of a base seed.
pub fn derive_seed(seed: u64, lane: u64) -> u64 {
    mix64(mix64(seed ^ 0xD1B5_4A32_D192_ED03) ^ lane.wrapping_mul(GOLDEN))
}

/// Encoder state at the start of step `step`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderState {
    pub step: u64,
    pub index: HeapIndex,
    pub interval: Interval,
    pub level: f64,
    /// `1 - T_d`, kept directly so that small values stay precise.
    pub unaccounted: f64,
    pub proposal_mass: f64,
}

impl EncoderState {
    pub fn initial() -> Self {
        Self {
            step: 0,
            index: HeapIndex::ROOT,
            interval: Interval::REAL_LINE,
            level: 0.0,
            unaccounted: 1.0,
            proposal_mass: 1.0,
        }
    }

    /// Target mass ruled out so far, `T_d`.
    pub fn ruled_out(&self) -> f64 {
        1.0 - self.unaccounted
    }
}

pub fn accept_prob(pair: &DistributionPair, state: &EncoderState, x: f64) -> Result<f64, EngineError> {
    if state.unaccounted <= EXHAUSTION_TOL {
        return Err(EngineError::Degenerate { step: state.step });
    }
    let excess = pair.density_ratio(x) - state.level;
    if excess <= 0.0 {
        return Ok(0.0);
    }
    let beta = state.proposal_mass * excess / state.unaccounted;
    Ok(beta.clamp(0.0, 1.0))
}

/// `L_{d+1} = L_d + (1 - T_d) / P(S_d)`.
pub fn next_level(state: &EncoderState) -> f64 {
    state.level + state.unaccounted / state.proposal_mass
}

/// Level and unaccounted mass after moving to `next_interval`: returns
/// `(L_{d+1}, 1 - T_{d+1})`.
pub fn advance_level(pair: &DistributionPair, state: &EncoderState, next_interval: &Interval) -> (f64, f64) {
    let level = next_level(state);
    let unaccounted = pair
        .residual_mass(next_interval, level)
        .min(state.unaccounted);
    (level, unaccounted)
}

/// Probability of taking the right child under the dyadic process, with the
/// split already computed.
fn dyadic_probability(
    pair: &DistributionPair,
    level: f64,
    left: &Interval,
    right: &Interval,
    step: u64,
) -> Result<(f64, f64, f64), EngineError> {
    let res_l = pair.residual_mass(left, level);
    let res_r = pair.residual_mass(right, level);
    let total = res_l + res_r;
    if total <= 0.0 {
        return Err(EngineError::DegenerateBranch { step });
    }
    Ok((res_r / total, res_l, res_r))
}

/// Right-branch probability of the dyadic process at `state`.
pub fn dyadic_branch_probability(pair: &DistributionPair, state: &EncoderState) -> Result<f64, EngineError> {
    let (left, right) = split_dyadic(&state.interval, pair.proposal())
        .map_err(|_| EngineError::DegenerateBranch { step: state.step })?;
    dyadic_probability(pair, next_level(state), &left, &right, state.step).map(|(p, _, _)| p)
}

/// Partitioning step after `x_rejected` was rejected at `state`. Returns the
/// branch bit and the state for step `d + 1`.
pub fn branch_choice(
    pair: &DistributionPair,
    rule: SplitRule,
    state: &EncoderState,
    x_rejected: f64,
    u_branch: f64,
) -> Result<(bool, EncoderState), EngineError> {
    let proposal = pair.proposal();
    let level = next_level(state);
    let (bit, interval, unaccounted) = match rule {
        SplitRule::Global => {
            let (keep, _) = split_global(&state.interval);
            (false, keep, pair.residual_mass(&keep, level))
        }
        SplitRule::SampleSplit => {
            let (left, right) = split_sample(&state.interval, x_rejected)?;
            let bit = x_rejected <= pair.ratio_mode_extended();
            let child = if bit { right } else { left };
            (bit, child, pair.residual_mass(&child, level))
        }
        SplitRule::Dyadic => {
            let (left, right) = split_dyadic(&state.interval, proposal)
                .map_err(|_| EngineError::DegenerateBranch { step: state.step })?;
            let (p, res_l, res_r) = dyadic_probability(pair, level, &left, &right, state.step)?;
            let bit = u_branch < p;
            if bit {
                (true, right, res_r)
            } else {
                (false, left, res_l)
            }
        }
    };
    let next = EncoderState {
        step: state.step + 1,
        index: state.index.child(bit),
        proposal_mass: proposal.mass(&interval),
        interval,
        level,
        unaccounted: unaccounted.min(state.unaccounted),
    };
    Ok((bit, next))
}

/// Output of one encoding run.
#[derive(Clone, Debug, PartialEq)]
pub struct RecResult {
    pub rule: SplitRule,
    pub sample: f64,
    pub heap_index: HeapIndex,
    /// Number of rejections before the returned draw, `D*`.
    pub depth: u64,
    /// `false` only when the run stopped at the depth limit.
    pub accepted: bool,
    /// Active intervals `S_0, ..., S_{D*}`.
    pub bound_trace: Vec<Interval>,
    /// `P(S_{D*})`.
    pub proposal_mass: f64,
}

impl RecResult {
    /// Number of proposals drawn, `D* + 1`.
    pub fn steps(&self) -> u64 {
        self.depth + 1
    }

    /// `-log2 P(S_{D*})`.
    pub fn path_cost_bits(&self) -> f64 {
        0.0 - self.proposal_mass.log2()
    }
}

/// Step-by-step encoder. [`encode`] drives it to completion; the stepping
/// interface is public so that callers can inspect intermediate states.
pub struct Encoder<'a> {
    pair: &'a DistributionPair,
    rule: SplitRule,
    seed: u64,
    d_max: Option<u64>,
    state: EncoderState,
    trace: Vec<Interval>,
}

impl<'a> Encoder<'a> {
    pub fn new(pair: &'a DistributionPair, rule: SplitRule, seed: u64, d_max: Option<u64>) -> Self {
        Self {
            pair,
            rule,
            seed,
            d_max,
            state: EncoderState::initial(),
            trace: vec![Interval::REAL_LINE],
        }
    }

    pub fn state(&self) -> &EncoderState {
        &self.state
    }

    /// Proposal drawn at the current node, with the node's uniforms.
    pub fn draw(&self) -> (f64, NodeRandoms) {
        let randoms = node_randoms(self.seed, &self.state.index);
        let x = self
            .pair
            .proposal()
            .quantile_within(&self.state.interval, randoms.u_sample);
        (x, randoms)
    }

    fn finish(&mut self, sample: f64, accepted: bool) -> RecResult {
        RecResult {
            rule: self.rule,
            sample,
            heap_index: self.state.index.clone(),
            depth: self.state.step,
            accepted,
            bound_trace: std::mem::take(&mut self.trace),
            proposal_mass: self.state.proposal_mass,
        }
    }

    /// Runs one accept/reject step; returns the result on termination.
    pub fn step(&mut self) -> Result<Option<RecResult>, EngineError> {
        let (x, randoms) = self.draw();
        let beta = match accept_prob(self.pair, &self.state, x) {
            Ok(beta) => beta,
            Err(EngineError::Degenerate { .. }) => return Ok(Some(self.finish(x, true))),
            Err(e) => return Err(e),
        };
        if randoms.u_accept <= beta {
            return Ok(Some(self.finish(x, true)));
        }
        if self.d_max == Some(self.state.step) {
            return Ok(Some(self.finish(x, false)));
        }
        if self.state.step + 1 >= MAX_STEPS {
            return Err(EngineError::NonTermination(MAX_STEPS));
        }
        match self.reject(x, randoms.u_branch) {
            Ok(()) => Ok(None),
            Err(EngineError::DegenerateBranch { .. }) => Ok(Some(self.finish(x, true))),
            Err(e) => Err(e),
        }
    }

    /// Applies the partitioning step for a rejected `x`, whether or not the
    /// acceptance test actually failed.
    pub fn reject(&mut self, x: f64, u_branch: f64) -> Result<(), EngineError> {
        let (_, next) = branch_choice(self.pair, self.rule, &self.state, x, u_branch)?;
        self.trace.push(next.interval);
        self.state = next;
        Ok(())
    }

    pub fn run(mut self) -> Result<RecResult, EngineError> {
        loop {
            if let Some(result) = self.step()? {
                return Ok(result);
            }
        }
    }
}

/// Encodes one sample of the pair's target. `d_max = None` runs exact GRC.
pub fn encode(
    pair: &DistributionPair,
    rule: SplitRule,
    seed: u64,
    d_max: Option<u64>,
) -> Result<RecResult, EngineError> {
    Encoder::new(pair, rule, seed, d_max).run()
}

/// Replays the partition along the root-to-`index` path. Only the proposal
/// is needed.
pub fn replay_interval(
    proposal: &Distribution1D,
    rule: SplitRule,
    seed: u64,
    index: &HeapIndex,
) -> Result<Interval, EngineError> {
    let invalid = || EngineError::InvalidIndex(index.to_string());
    let mut interval = Interval::REAL_LINE;
    let mut node = HeapIndex::ROOT;
    for level in 0..index.depth() {
        let bit = index.path_bit(level);
        let (left, right) = match rule {
            SplitRule::Global => split_global(&interval),
            SplitRule::SampleSplit => {
                let u = node_randoms(seed, &node).u_sample;
                split_sample(&interval, proposal.quantile_within(&interval, u))?
            }
            SplitRule::Dyadic => split_dyadic(&interval, proposal).map_err(|_| invalid())?,
        };
        interval = if bit { right } else { left };
        if interval.is_empty() || proposal.mass(&interval) <= 0.0 {
            return Err(invalid());
        }
        node = node.child(bit);
    }
    Ok(interval)
}

pub fn decode(
    proposal: &Distribution1D,
    rule: SplitRule,
    seed: u64,
    index: &HeapIndex,
) -> Result<f64, EngineError> {
    let interval = replay_interval(proposal, rule, seed, index)?;
    let u = node_randoms(seed, index).u_sample;
    Ok(proposal.quantile_within(&interval, u))
}
