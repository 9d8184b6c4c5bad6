mod common;

use num_rational::BigRational;
use spectra_core::asymptotics::{l2_distance, profile_on, window_periodicity};
use spectra_core::{
    assemble, convergence_report, counting, disc_count_bound, discretize, even_ladder, spectrum,
    LadderSpec, StringSystem,
};

fn neumann(spec: &LadderSpec, g: usize) -> StringSystem {
    assemble(&discretize(spec, g).unwrap(), 0.0, 0.0).unwrap()
}

#[test]
fn profiles_are_monotone_step_functions() {
    let spec = even_ladder(3, &BigRational::new(1.into(), 5.into())).unwrap();
    let sys = neumann(&spec, 6);
    for k in 0..=4 {
        let p = profile_on(&sys, &spec, k, 256);
        assert!(p.sigma.windows(2).all(|w| w[0] <= w[1]));
        let scale = 3f64.powi(k as i32);
        assert!(p
            .sigma
            .iter()
            .all(|v| ((v * scale) - (v * scale).round()).abs() < 1e-9));
    }
}

#[test]
fn window_periodicity_cantor_g10() {
    let spec = LadderSpec::cantor();
    let sys = neumann(&spec, 10);
    let top = counting(&sys, (spec.nu() * 6.0).exp()) + 2;
    let eigs = spectrum(&sys, top.min(sys.len() - 1)).unwrap();
    for k in 0..6 {
        let lo = profile_on(&sys, &spec, k, 512);
        let hi = profile_on(&sys, &spec, k + 1, 512);
        let check = window_periodicity(&spec, &eigs, &lo, &hi);
        assert!(check.checked > 0);
        assert_eq!(check.mismatches, 0, "k={k}: {check:?}");
    }
}

#[test]
fn resampling_changes_l2_within_quadrature_bound() {
    let spec = LadderSpec::cantor();
    let sys = neumann(&spec, 9);
    for grid in [128, 256, 512] {
        for k in 0..5 {
            let coarse = l2_distance(
                &profile_on(&sys, &spec, k + 1, grid),
                &profile_on(&sys, &spec, k, grid),
            );
            let fine = l2_distance(
                &profile_on(&sys, &spec, k + 1, 2 * grid),
                &profile_on(&sys, &spec, k, 2 * grid),
            );
            let jump = 0.5f64.powi(k as i32);
            let bound = 2.0 * spec.nu() / grid as f64 * jump;
            assert!(
                (coarse - fine).abs() < bound.max(1e-15) * 4.0,
                "grid={grid} k={k}: {coarse} vs {fine}"
            );
        }
    }
}

#[test]
fn disc_counts_stay_below_bound() {
    let spec = LadderSpec::cantor();
    for k in 0..=6 {
        let b = disc_count_bound(&spec, 8, k).unwrap();
        assert!(b.holds(), "{b:?}");
    }
    let three = even_ladder(3, &BigRational::new(1.into(), 5.into())).unwrap();
    for k in 0..=3 {
        assert!(disc_count_bound(&three, 5, k).unwrap().holds());
    }
}

#[test]
fn report_fields_have_expected_lengths() {
    let r = convergence_report(&LadderSpec::cantor(), 7, 4, 128).unwrap();
    assert_eq!(r.l2_diff.len(), 4);
    assert_eq!(r.diff_measure.len(), 4);
    assert_eq!(r.scaled_l2.len(), 4);
    assert_eq!(r.singularity_product.len(), 4);
    assert_eq!(r.amplitude.len(), 5);
    assert!(r.diff_measure.iter().all(|&x| (0.0..=r.nu).contains(&x)));
    let v = serde_json::to_value(&r).unwrap();
    assert!(v["scaled_l2"].is_array());
}

#[test]
fn window_periodicity_cantor_g8_k2() {
    let spec = LadderSpec::cantor();
    let sys = neumann(&spec, 8);
    let eigs = spectrum(&sys, sys.len() - 1).unwrap();
    let lo = profile_on(&sys, &spec, 2, 512);
    let hi = profile_on(&sys, &spec, 3, 512);
    let check = window_periodicity(&spec, &eigs, &lo, &hi);
    assert!(check.checked > 0 && check.mismatches == 0, "{check:?}");
}
