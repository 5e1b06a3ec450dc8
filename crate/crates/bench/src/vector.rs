//! Dimensionwise coding of a vector of independent pairs with the dyadic
//! rule, comparing Elias δ against fitted ζ coding of the heap indices.
//!
//! Each lane's ζ exponent is fitted on a calibration set of runs that does
//! not overlap the test seeds; the exponents are treated as metadata shared
//! with the receiver. All lanes of one vector share a single ζ session.

use grc_core::codecs::{self, BitString, CodecError, ZetaModel};
use grc_core::engine::{decode, derive_seed, encode};
use grc_core::{DistributionPair, SplitRule};
use rayon::prelude::*;

const CALIBRATION_TAG: u64 = 0xCA11_B4A7_E000_0001;

#[derive(Clone, Debug)]
pub struct VectorOptions {
    pub calibration_runs: usize,
    pub test_vectors: usize,
}

impl Default for VectorOptions {
    fn default() -> Self {
        Self { calibration_runs: 1000, test_vectors: 200 }
    }
}

#[derive(Clone, Debug)]
pub struct LaneReport {
    pub lane: usize,
    pub dkl: f64,
    /// Fitted exponent; `None` when the lane falls back to δ coding.
    pub exponent: Option<f64>,
    pub mean_delta_bits: f64,
    pub mean_zeta_ideal_bits: f64,
    pub mean_grcd_bits: f64,
    /// `mean_delta_bits - D_KL`.
    pub delta_overhead: f64,
    pub error: Option<String>,
}

impl LaneReport {
    fn failed(lane: usize, dkl: f64, error: String) -> Self {
        Self {
            lane,
            dkl,
            exponent: None,
            mean_delta_bits: f64::NAN,
            mean_zeta_ideal_bits: f64::NAN,
            mean_grcd_bits: f64::NAN,
            delta_overhead: f64::NAN,
            error: Some(error),
        }
    }
}

/// One coded vector.
#[derive(Clone, Debug)]
pub struct VectorCode {
    pub indices: Vec<Option<u64>>,
    pub delta: BitString,
    pub zeta: BitString,
}

#[derive(Clone, Debug)]
pub struct VectorReport {
    pub lanes: Vec<LaneReport>,
    /// Per-lane fitting outcome: the exponent, `None` for a δ fallback.
    pub fits: Vec<Result<Option<f64>, String>>,
    pub codes: Vec<VectorCode>,
    /// Mean bits per vector over working lanes.
    pub mean_delta_total: f64,
    pub mean_zeta_total: f64,
    pub sum_dkl: f64,
    pub sum_log_dkl: f64,
}

pub fn lane_seed(seed: u64, vector: u64, lane: usize) -> u64 {
    derive_seed(derive_seed(seed, vector), lane as u64)
}

fn calibration_seed(seed: u64, run: u64, lane: usize) -> u64 {
    lane_seed(seed ^ CALIBRATION_TAG, run, lane)
}

fn heap_index(pair: &DistributionPair, seed: u64) -> Result<u64, String> {
    let r = encode(pair, SplitRule::Dyadic, seed, None).map_err(|e| e.to_string())?;
    r.heap_index
        .to_u64()
        .filter(|&n| n <= codecs::zeta::DEFAULT_N_MAX)
        .ok_or_else(|| format!("heap index at depth {} exceeds the coded range", r.depth))
}

fn fit_lane(pair: &DistributionPair, seed: u64, lane: usize, runs: usize) -> Result<Option<ZetaModel>, String> {
    let logs = (0..runs as u64)
        .map(|c| heap_index(pair, calibration_seed(seed, c, lane)).map(|n| (n as f64).log2()))
        .collect::<Result<Vec<_>, _>>()?;
    match codecs::fit_zeta(&logs) {
        Ok(m) => Ok(Some(m)),
        Err(CodecError::Unfittable { .. }) => Ok(None),
        Err(e) => Err(e.to_string()),
    }
}

/// Codes `options.test_vectors` vectors of samples from `pairs`.
pub fn encode_vector(pairs: &[DistributionPair], seed: u64, options: &VectorOptions) -> VectorReport {
    let fitted: Vec<Result<Option<ZetaModel>, String>> = pairs
        .par_iter()
        .enumerate()
        .map(|(lane, pair)| fit_lane(pair, seed, lane, options.calibration_runs))
        .collect();

    let codes: Vec<(VectorCode, Vec<Result<u64, String>>)> = (0..options.test_vectors as u64)
        .into_par_iter()
        .map(|v| {
            let per_lane: Vec<Result<u64, String>> = pairs
                .iter()
                .enumerate()
                .map(|(lane, pair)| match &fitted[lane] {
                    Ok(_) => heap_index(pair, lane_seed(seed, v, lane)),
                    Err(e) => Err(e.clone()),
                })
                .collect();
            let mut delta = BitString::new();
            let mut items = Vec::new();
            for (lane, n) in per_lane.iter().enumerate() {
                if let Ok(n) = *n {
                    codecs::write_delta(n, &mut delta).expect("indices are positive");
                    match &fitted[lane] {
                        Ok(Some(model)) if n <= model.n_max() => items.push((n, model)),
                        _ => {}
                    }
                }
            }
            // Lanes without a model keep their δ code inside the ζ stream.
            let mut zeta = codecs::zeta_encode_sequence(&items).expect("indices within support");
            for (lane, n) in per_lane.iter().enumerate() {
                if let (Ok(n), Ok(None)) = (n, &fitted[lane]) {
                    codecs::write_delta(*n, &mut zeta).expect("indices are positive");
                }
            }
            let indices = per_lane.iter().map(|r| r.as_ref().ok().copied()).collect();
            (VectorCode { indices, delta, zeta }, per_lane)
        })
        .collect();

    let t = options.test_vectors.max(1) as f64;
    let lanes = pairs
        .iter()
        .enumerate()
        .map(|(lane, pair)| {
            let dkl = pair.kl_divergence();
            let observed: Result<Vec<u64>, String> = codes.iter().map(|(_, l)| l[lane].clone()).collect();
            let (model, ns) = match (&fitted[lane], observed) {
                (Ok(model), Ok(ns)) => (model.clone(), ns),
                (Err(e), _) => return LaneReport::failed(lane, dkl, e.clone()),
                (_, Err(e)) => return LaneReport::failed(lane, dkl, e),
            };
            let mean_delta_bits = ns.iter().map(|&n| codecs::delta_len(n) as f64).sum::<f64>() / t;
            let mean_zeta_ideal_bits = match &model {
                Some(m) => ns.iter().map(|&n| m.ideal_len(n)).sum::<f64>() / t,
                None => mean_delta_bits,
            };
            let mean_grcd_bits = ns
                .iter()
                .map(|&n| {
                    let d = 63 - n.leading_zeros() as u64;
                    (codecs::gamma_len(d + 1) as u64 + d) as f64
                })
                .sum::<f64>()
                / t;
            LaneReport {
                lane,
                dkl,
                exponent: model.as_ref().map(|m| m.exponent()),
                mean_delta_bits,
                mean_zeta_ideal_bits,
                mean_grcd_bits,
                delta_overhead: mean_delta_bits - dkl,
                error: None,
            }
        })
        .collect::<Vec<_>>();

    let mean_delta_total = codes.iter().map(|(c, _)| c.delta.len() as f64).sum::<f64>() / t;
    let mean_zeta_total = codes.iter().map(|(c, _)| c.zeta.len() as f64).sum::<f64>() / t;
    let working: Vec<&LaneReport> = lanes.iter().filter(|l| l.error.is_none()).collect();
    VectorReport {
        fits: fitted.iter().map(|f| f.as_ref().map(|m| m.as_ref().map(|m| m.exponent())).map_err(Clone::clone)).collect(),
        sum_dkl: working.iter().map(|l| l.dkl).sum(),
        sum_log_dkl: working.iter().map(|l| (l.dkl + 1.0).log2()).sum(),
        lanes,
        codes: codes.into_iter().map(|(c, _)| c).collect(),
        mean_delta_total,
        mean_zeta_total,
    }
}

/// Decodes vector `v` of a report back to samples, one per working lane.
pub fn decode_vector(
    pairs: &[DistributionPair],
    report: &VectorReport,
    seed: u64,
    v: usize,
) -> Result<Vec<Option<f64>>, String> {
    let code = &report.codes[v];
    let models: Vec<Option<ZetaModel>> = report
        .fits
        .iter()
        .map(|f| match f {
            Ok(Some(e)) => Some(ZetaModel::new(*e).expect("fitted exponent is valid")),
            _ => None,
        })
        .collect();
    let zeta_lanes: Vec<usize> = (0..pairs.len())
        .filter(|&l| code.indices[l].is_some() && models[l].is_some())
        .collect();
    let mut reader = code.zeta.reader();
    let refs: Vec<&ZetaModel> = zeta_lanes.iter().map(|&l| models[l].as_ref().unwrap()).collect();
    let decoded = codecs::zeta_decode_sequence(&mut reader, &refs).map_err(|e| e.to_string())?;
    let mut indices: Vec<Option<u64>> = vec![None; pairs.len()];
    for (&l, &n) in zeta_lanes.iter().zip(&decoded) {
        indices[l] = Some(n);
    }
    for (l, slot) in indices.iter_mut().enumerate() {
        if code.indices[l].is_some() && matches!(report.fits[l], Ok(None)) {
            *slot = Some(codecs::read_delta(&mut reader).map_err(|e| e.to_string())?);
        }
    }
    indices
        .iter()
        .enumerate()
        .map(|(lane, n)| {
            n.map(|n| {
                let idx = grc_core::HeapIndex::new(n).map_err(|e| e.to_string())?;
                decode(pairs[lane].proposal(), SplitRule::Dyadic, lane_seed(seed, v as u64, lane), &idx)
                    .map_err(|e| e.to_string())
            })
            .transpose()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use grc_core::{gaussian_pair_for_targets, Distribution1D};

    #[test]
    fn identical_pairs_code_index_one_everywhere() {
        let same = DistributionPair::new(Distribution1D::standard_gaussian(), Distribution1D::standard_gaussian()).unwrap();
        let pairs = vec![same; 8];
        let opts = VectorOptions { calibration_runs: 100, test_vectors: 20 };
        let report = encode_vector(&pairs, 1, &opts);
        assert!(report.codes.iter().all(|c| c.indices.iter().all(|&n| n == Some(1))));
        assert_eq!(report.mean_delta_total, 8.0);
        let model = ZetaModel::new(report.lanes[0].exponent.unwrap()).unwrap();
        let one = codecs::zeta_encode_sequence(&[(1, &model); 8]).unwrap().len() as f64;
        assert_eq!(report.mean_zeta_total, one);
    }

    #[test]
    fn vector_round_trip() {
        let pairs: Vec<_> = (0..10).map(|i| gaussian_pair_for_targets(0.1 + 0.2 * i as f64, 1.5 + 0.2 * i as f64).unwrap()).collect();
        let opts = VectorOptions { calibration_runs: 200, test_vectors: 10 };
        let report = encode_vector(&pairs, 5, &opts);
        for v in 0..10 {
            let xs = decode_vector(&pairs, &report, 5, v).unwrap();
            for (lane, x) in xs.iter().enumerate() {
                let r = encode(&pairs[lane], SplitRule::Dyadic, lane_seed(5, v as u64, lane), None).unwrap();
                assert_eq!(x.unwrap().to_bits(), r.sample.to_bits());
            }
        }
    }

    #[test]
    fn overhead_within_per_dimension_bound() {
        let pairs: Vec<_> = (0..20).map(|i| gaussian_pair_for_targets(0.2 + 0.25 * i as f64, 2.5 + 0.25 * i as f64).unwrap()).collect();
        let report = encode_vector(&pairs, 2, &VectorOptions { calibration_runs: 300, test_vectors: 300 });
        for lane in &report.lanes {
            let cap = 2.0 * (lane.dkl + 1.0).log2() + 6.0;
            assert!(lane.delta_overhead >= 0.0 && lane.delta_overhead <= cap, "{lane:?}");
        }
    }
}
