//! Threshold checks on sweep output, shared by `--check` and the acceptance
//! suite.

use std::collections::BTreeMap;
use std::f64::consts::LOG2_E;

use grc_core::SplitRule;

use crate::stats::ols_slope;
use crate::sweep::{Mode, SweepRow};

pub const KS_ALPHA: f64 = 1e-3;
/// Step-bound constant for the sample-splitting rule, `2 / log2(4/3)`.
pub const GRCS_STEP_SLOPE: f64 = 4.82;
pub const FLAT_SLOPE_LIMIT: f64 = 0.1;
pub const GLOBAL_GROWTH: f64 = 1.8;

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub check: &'static str,
    pub detail: String,
}

fn violation(check: &'static str, detail: String) -> Violation {
    Violation { check, detail }
}

/// `D_KL + 2 log2(D_KL + 1) + 11`.
pub fn codelength_bound(dkl: f64) -> f64 {
    dkl + 2.0 * (dkl + 1.0).log2() + 11.0
}

/// `D_KL + log2 e`.
pub fn path_cost_bound(dkl: f64) -> f64 {
    dkl + LOG2_E
}

pub fn grcs_step_bound(dkl: f64) -> f64 {
    GRCS_STEP_SLOPE * dkl + 4.0
}

fn exact(row: &SweepRow) -> bool {
    row.d_max.is_none() && row.skipped.is_none()
}

/// Checks that apply to each row on its own.
pub fn check_rows(rows: &[SweepRow]) -> Vec<Violation> {
    let mut out = Vec::new();
    for row in rows.iter().filter(|r| exact(r)) {
        let at = format!("D_KL={} D_inf={} {}", row.dkl_target, row.dinf_target, row.variant);
        if let Some(p) = row.ks_p {
            if p < KS_ALPHA {
                out.push(violation("unbiasedness", format!("{at}: KS p = {p:.3e}")));
            }
        }
        let (steps, bits, path) = (row.steps.unwrap(), row.bits.unwrap(), row.path_bits.unwrap());
        if row.variant == SplitRule::SampleSplit {
            let bound = grcs_step_bound(row.dkl_target);
            if steps.mean > bound + 3.0 * steps.se {
                out.push(violation("grcs_step_bound", format!("{at}: mean steps {:.3} > {bound:.3} + 3se", steps.mean)));
            }
            let bound = path_cost_bound(row.dkl_target);
            if path.mean > bound + 3.0 * path.se {
                out.push(violation("path_cost_bound", format!("{at}: mean -log2 P(S_D) {:.3} > {bound:.3} + 3se", path.mean)));
            }
        }
        if row.variant != SplitRule::Global {
            let bound = codelength_bound(row.dkl_target);
            if bits.mean > bound {
                out.push(violation("codelength_bound", format!("{at}: mean bits {:.3} > {bound:.3}", bits.mean)));
            }
        }
    }
    out
}

/// Groups exact rows of a runtime sweep by (D_KL, variant), sorted by D_inf.
fn runtime_series(rows: &[SweepRow]) -> BTreeMap<(String, &'static str), Vec<(f64, f64)>> {
    let mut series: BTreeMap<(String, &'static str), Vec<(f64, f64)>> = BTreeMap::new();
    for row in rows.iter().filter(|r| exact(r) && r.mode == Mode::RuntimeVsDinf) {
        series
            .entry((row.dkl_target.to_string(), row.variant.name()))
            .or_default()
            .push((row.dinf_target, row.steps.unwrap().mean));
    }
    for s in series.values_mut() {
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    series
}

/// Least-squares slope of mean steps against `D_∞` per (D_KL, variant).
pub fn runtime_slopes(rows: &[SweepRow]) -> Vec<(String, &'static str, f64)> {
    runtime_series(rows)
        .into_iter()
        .filter(|(_, pts)| pts.len() >= 2)
        .map(|((dkl, v), pts)| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            (dkl, v, ols_slope(&xs, &ys))
        })
        .collect()
}

fn global_points(rows: &[SweepRow], lo: f64, hi: f64) -> Vec<(String, Vec<(f64, f64)>)> {
    runtime_series(rows)
        .into_iter()
        .filter(|((_, v), _)| *v == SplitRule::Global.name())
        .map(|((dkl, _), pts)| (dkl, pts.into_iter().filter(|p| p.0 >= lo && p.0 <= hi).collect()))
        .collect()
}

/// Ratios of mean steps between consecutive `D_∞` grid points one bit apart
/// inside `[lo, hi]`, for the global rule.
pub fn global_growth_ratios(rows: &[SweepRow], lo: f64, hi: f64) -> Vec<(String, f64, f64)> {
    let mut out = Vec::new();
    for (dkl, pts) in global_points(rows, lo, hi) {
        for w in pts.windows(2) {
            if (w[1].0 - w[0].0 - 1.0).abs() < 1e-9 {
                out.push((dkl.clone(), w[1].0, w[1].1 / w[0].1));
            }
        }
    }
    out
}

/// Growth factor per bit of `D_∞` for the global rule: `2^b` with `b` the
/// least-squares slope of `log2(mean steps)` over `[lo, hi]`. Returns the
/// factor and the number of points fitted.
pub fn global_growth_rate(rows: &[SweepRow], lo: f64, hi: f64) -> Vec<(String, f64, usize)> {
    global_points(rows, lo, hi)
        .into_iter()
        .filter(|(_, pts)| pts.len() >= 2)
        .map(|(dkl, pts)| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().map(|p| (p.0, p.1.log2())).unzip();
            (dkl, ols_slope(&xs, &ys).exp2(), pts.len())
        })
        .collect()
}

/// Whole-sweep checks of a runtime sweep.
pub fn check_runtime(rows: &[SweepRow]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (dkl, v, slope) in runtime_slopes(rows) {
        if v != SplitRule::Global.name() && slope.abs() >= FLAT_SLOPE_LIMIT {
            out.push(violation("runtime_flatness", format!("D_KL={dkl} {v}: slope {slope:.4} steps/bit")));
        }
    }
    for (dkl, rate, n) in global_growth_rate(rows, 4.0, 9.0) {
        if rate < GLOBAL_GROWTH {
            out.push(violation("global_growth", format!("D_KL={dkl}: steps grow {rate:.3}x per bit over {n} points")));
        }
    }
    out
}

/// Bias rows: nonincreasing in the extra bits up to `2 se`, and the largest
/// budget within `3 se` of the exact row.
pub fn check_bias(rows: &[SweepRow]) -> Vec<Violation> {
    let mut limited: Vec<(u64, f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.d_max?, r.kl_bias?.mean, r.kl_bias?.se)))
        .collect();
    limited.sort_by_key(|r| r.0);
    let mut out = Vec::new();
    for w in limited.windows(2) {
        let tol = 2.0 * w[0].2.max(w[1].2);
        if w[1].1 > w[0].1 + tol {
            out.push(violation(
                "bias_monotone",
                format!("bias rises from {:.4} (D_max={}) to {:.4} (D_max={})", w[0].1, w[0].0, w[1].1, w[1].0),
            ));
        }
    }
    let exact_bias = rows.iter().find(|r| r.d_max.is_none()).and_then(|r| r.kl_bias);
    if let (Some(last), Some(ex)) = (limited.last(), exact_bias) {
        if (last.1 - ex.mean).abs() > 3.0 * last.2.max(ex.se) {
            out.push(violation("bias_converges", format!("largest budget {:.4} vs exact {:.4}", last.1, ex.mean)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Summary;

    fn row(variant: SplitRule, dinf: f64, steps: f64, d_max: Option<u64>, bias: Option<f64>) -> SweepRow {
        let s = |mean| Some(Summary { mean, se: 0.01, n: 1000 });
        SweepRow {
            mode: Mode::RuntimeVsDinf,
            dkl_target: 2.0,
            dinf_target: dinf,
            variant,
            n: 1000,
            steps: s(steps),
            bits: s(5.0),
            depth: s(steps - 1.0),
            path_bits: s(2.0),
            ks_p: Some(0.5),
            d_max,
            kl_bias: bias.and_then(s),
            skipped: None,
        }
    }

    #[test]
    fn bounds_have_expected_values() {
        assert!((codelength_bound(3.0) - 18.0).abs() < 1e-12);
        assert!((grcs_step_bound(1.0) - 8.82).abs() < 1e-12);
        assert!((2.0 / (4.0f64 / 3.0).log2() - GRCS_STEP_SLOPE).abs() < 5e-3);
    }

    #[test]
    fn row_checks_flag_each_bound() {
        let mut r = row(SplitRule::SampleSplit, 4.0, 20.0, None, None);
        r.ks_p = Some(1e-4);
        r.bits = Some(Summary { mean: 30.0, se: 0.1, n: 10 });
        r.path_bits = Some(Summary { mean: 5.0, se: 0.1, n: 10 });
        let found: Vec<&str> = check_rows(&[r]).iter().map(|v| v.check).collect();
        assert_eq!(found, ["unbiasedness", "grcs_step_bound", "path_cost_bound", "codelength_bound"]);
        assert!(check_rows(&[row(SplitRule::Dyadic, 4.0, 3.0, None, None)]).is_empty());
    }

    #[test]
    fn runtime_checks_flag_slope_and_growth() {
        let rows: Vec<SweepRow> = (4..=7)
            .flat_map(|d| {
                let d = d as f64;
                [row(SplitRule::Dyadic, d, 3.0 + 0.2 * d, None, None), row(SplitRule::Global, d, 2f64.powf(d), None, None)]
            })
            .collect();
        let found: Vec<&str> = check_runtime(&rows).iter().map(|v| v.check).collect();
        assert_eq!(found, ["runtime_flatness"]);
        let ratios = global_growth_ratios(&rows, 4.0, 9.0);
        assert_eq!(ratios.len(), 3);
        assert!(ratios.iter().all(|r| (r.2 - 2.0).abs() < 1e-12));
        let rate = global_growth_rate(&rows, 4.0, 9.0);
        assert_eq!(rate.len(), 1);
        assert!((rate[0].1 - 2.0).abs() < 1e-12 && rate[0].2 == 4);

        let mut slow = rows.clone();
        for r in slow.iter_mut().filter(|r| r.variant == SplitRule::Global) {
            r.steps = Some(Summary { mean: 1.5f64.powf(r.dinf_target), se: 0.01, n: 1000 });
        }
        assert!(check_runtime(&slow).iter().any(|v| v.check == "global_growth"));
    }

    #[test]
    fn bias_checks() {
        let good: Vec<SweepRow> = (1..=4)
            .map(|d| row(SplitRule::Dyadic, 5.0, 3.0, Some(d), Some(0.1 / d as f64)))
            .chain([row(SplitRule::Dyadic, 5.0, 3.0, None, Some(0.02))])
            .collect();
        assert!(check_bias(&good).is_empty());
        let mut bad = good.clone();
        bad[2].kl_bias = Some(Summary { mean: 0.5, se: 0.01, n: 10 });
        let found: Vec<&str> = check_bias(&bad).iter().map(|v| v.check).collect();
        assert_eq!(found, ["bias_monotone"]);
    }
}
