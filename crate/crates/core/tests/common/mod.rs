#![allow(dead_code)]

pub mod oracle;

use proptest::prelude::*;
use spectra_core::LadderSpec;

/// Ladder satisfying the common-ratio condition by construction: random
/// step and gap lengths, weights `tau / len_k` with `tau = 1 / Σ 1/len_k`.
pub fn ladder_from_parts(steps: &[f64], gaps: &[f64]) -> LadderSpec {
    let total: f64 = steps.iter().chain(gaps).sum();
    let mut intervals = Vec::with_capacity(steps.len());
    let mut a = 0.0;
    for (k, s) in steps.iter().enumerate() {
        let b = if k + 1 == steps.len() {
            1.0
        } else {
            a + s / total
        };
        intervals.push((a, b));
        if k < gaps.len() {
            a = b + gaps[k] / total;
        }
    }
    let lens: Vec<f64> = intervals.iter().map(|(a, b)| b - a).collect();
    let tau = 1.0 / lens.iter().map(|l| 1.0 / l).sum::<f64>();
    let weights: Vec<f64> = lens.iter().map(|l| tau / l).collect();
    LadderSpec::from_floats(&intervals, &weights).expect("generated ladder is valid")
}

pub fn arb_ladder() -> impl Strategy<Value = LadderSpec> {
    (2usize..=4)
        .prop_flat_map(|m| {
            (
                prop::collection::vec(0.2f64..1.0, m),
                prop::collection::vec(0.2f64..1.0, m - 1),
            )
        })
        .prop_map(|(steps, gaps)| ladder_from_parts(&steps, &gaps))
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
