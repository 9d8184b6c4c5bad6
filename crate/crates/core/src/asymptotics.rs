//! Counting function and its renormalized profiles over one period.
//!
//! `σ_k(t) = m^{-k} N(e^{kν + t})` for `t ∈ [0, ν]`, and
//! `s_k(t) = e^{-Dt} σ_k(t)`. All profiles of one report are read from the
//! same generation-`g` Neumann system.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SpectraError};
use crate::ladder::LadderSpec;
use crate::renorm::system;
use crate::stieltjes::{eigenvalue, sturm_count, BoundaryCondition, Spectrum, StringSystem};

/// Generations kept between the finest window `k` and the discretization
/// depth `g`.
pub const TRUST_MARGIN: usize = 2;
pub const DEFAULT_GRID: usize = 512;

const COUNT_SLACK: f64 = 1e-12;
const COUNT_FLOOR: f64 = 1e-250;

/// `N(λ) = #{n : λ_n ≤ λ}`, right-continuous.
pub fn counting(sys: &StringSystem, lambda: f64) -> usize {
    let probe = if lambda >= 0.0 {
        (lambda * (1.0 + COUNT_SLACK)).max(COUNT_FLOOR)
    } else {
        lambda * (1.0 - COUNT_SLACK)
    };
    sturm_count(sys, probe.next_up())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaProfile {
    pub k: usize,
    pub nu: f64,
    pub dim: f64,
    pub grid: Vec<f64>,
    pub sigma: Vec<f64>,
    pub s: Vec<f64>,
    /// Jump points of `N` in `(e^{kν}, e^{(k+1)ν}]`.
    pub disc_count: usize,
    pub generation: usize,
    pub margin: usize,
}

fn check_margin(k: usize, g: usize) -> Result<()> {
    if k + TRUST_MARGIN > g {
        return Err(SpectraError::Margin {
            k,
            g,
            margin: TRUST_MARGIN,
        });
    }
    Ok(())
}

fn neumann_system(spec: &LadderSpec, g: usize) -> Result<StringSystem> {
    system(spec, g, BoundaryCondition::NEUMANN)
}

pub fn sigma_profile(
    spec: &LadderSpec,
    g: usize,
    k: usize,
    grid_size: usize,
) -> Result<SigmaProfile> {
    check_margin(k, g)?;
    let sys = neumann_system(spec, g)?;
    Ok(profile_on(&sys, spec, k, grid_size))
}

/// Profile of window `k` on an already assembled Neumann system.
pub fn profile_on(
    sys: &StringSystem,
    spec: &LadderSpec,
    k: usize,
    grid_size: usize,
) -> SigmaProfile {
    let grid_size = grid_size.max(1);
    let nu = spec.nu();
    let dim = spec.dim();
    let scale = (spec.m() as f64).powi(k as i32);
    // The exponent is formed as ν·(k + i/grid) so the right end of window k
    // and the left end of window k + 1 are the same float.
    let exponent = |i: usize| nu * (k as f64 + i as f64 / grid_size as f64);
    let grid: Vec<f64> = (0..=grid_size)
        .map(|i| nu * (i as f64 / grid_size as f64))
        .collect();
    let sigma: Vec<f64> = (0..=grid_size)
        .into_par_iter()
        .map(|i| counting(sys, exponent(i).exp()) as f64 / scale)
        .collect();
    let s = grid
        .iter()
        .zip(&sigma)
        .map(|(t, v)| (-dim * t).exp() * v)
        .collect();
    let disc_count = counting(sys, exponent(grid_size).exp()) - counting(sys, exponent(0).exp());
    SigmaProfile {
        k,
        nu,
        dim,
        grid,
        sigma,
        s,
        disc_count,
        generation: sys.atoms().generation(),
        margin: TRUST_MARGIN,
    }
}

impl SigmaProfile {
    /// `max s - min s` over the grid.
    pub fn amplitude(&self) -> f64 {
        let max = self.s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.s.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Trapezoid `L2[0, ν]` norm of `a - b` on a shared uniform grid.
pub fn l2_distance(a: &SigmaProfile, b: &SigmaProfile) -> f64 {
    let d: Vec<f64> = a
        .sigma
        .iter()
        .zip(&b.sigma)
        .map(|(x, y)| (x - y).powi(2))
        .collect();
    let h = a.nu / (d.len() - 1) as f64;
    let sum: f64 = d.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
    sum.sqrt()
}

/// Grid estimate of the measure of `{t : a(t) ≠ b(t)}`.
pub fn mismatch_measure(a: &SigmaProfile, b: &SigmaProfile) -> f64 {
    let differ = a.sigma.iter().zip(&b.sigma).filter(|(x, y)| x != y).count();
    differ as f64 / a.sigma.len() as f64 * a.nu
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub g: usize,
    pub k_max: usize,
    pub grid_size: usize,
    pub nu: f64,
    pub dim: f64,
    /// `‖σ_{k+1} - σ_k‖_{L2[0,ν]}`, `k = 0..k_max`.
    pub l2_diff: Vec<f64>,
    /// Measure of `{σ_{k+1} ≠ σ_k}`.
    pub diff_measure: Vec<f64>,
    /// `m^k ‖σ_{k+1} - σ_k‖`.
    pub scaled_l2: Vec<f64>,
    /// `(disc_count_k + 2) ‖σ_{k_max} - σ_k‖`.
    pub singularity_product: Vec<f64>,
    /// `max s_k - min s_k`, `k = 0..=k_max`.
    pub amplitude: Vec<f64>,
    pub disc_count: Vec<usize>,
}

pub fn convergence_report(
    spec: &LadderSpec,
    g: usize,
    k_max: usize,
    grid_size: usize,
) -> Result<ConvergenceReport> {
    check_margin(k_max, g)?;
    let sys = neumann_system(spec, g)?;
    let profiles: Vec<SigmaProfile> = (0..=k_max)
        .map(|k| profile_on(&sys, spec, k, grid_size))
        .collect();
    Ok(report_from_profiles(spec, g, grid_size, &profiles))
}

pub fn report_from_profiles(
    spec: &LadderSpec,
    g: usize,
    grid_size: usize,
    profiles: &[SigmaProfile],
) -> ConvergenceReport {
    let k_max = profiles.len() - 1;
    let m = spec.m() as f64;
    let l2_diff: Vec<f64> = profiles
        .windows(2)
        .map(|w| l2_distance(&w[1], &w[0]))
        .collect();
    let diff_measure = profiles
        .windows(2)
        .map(|w| mismatch_measure(&w[1], &w[0]))
        .collect();
    let scaled_l2 = l2_diff
        .iter()
        .enumerate()
        .map(|(k, d)| m.powi(k as i32) * d)
        .collect();
    let limit = &profiles[k_max];
    let singularity_product = profiles[..k_max]
        .iter()
        .map(|p| (p.disc_count as f64 + 2.0) * l2_distance(limit, p))
        .collect();
    ConvergenceReport {
        g,
        k_max,
        grid_size,
        nu: spec.nu(),
        dim: spec.dim(),
        l2_diff,
        diff_measure,
        scaled_l2,
        singularity_product,
        amplitude: profiles.iter().map(SigmaProfile::amplitude).collect(),
        disc_count: profiles.iter().map(|p| p.disc_count).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscCountBound {
    pub k: usize,
    pub count: usize,
    /// `m^{k+c} + 1`, saturating.
    pub bound: u128,
    pub c: u32,
    /// Generation-`g` stand-in for the first nonzero Neumann eigenvalue.
    pub lambda1: f64,
    /// Whether `c` was raised to 1.
    pub clamped: bool,
}

impl DiscCountBound {
    pub fn holds(&self) -> bool {
        (self.count as u128) <= self.bound
    }
}

/// Jump count of `N` in window `k` against `m^{k+c} + 1`, with `c` the
/// smallest integer above `(1 - ln λ_1)/ν`, raised to at least 1.
pub fn disc_count_bound(spec: &LadderSpec, g: usize, k: usize) -> Result<DiscCountBound> {
    check_margin(k, g)?;
    let sys = neumann_system(spec, g)?;
    let lambda1 = eigenvalue(&sys, 1)?;
    let nu = spec.nu();
    let raw = ((1.0 - lambda1.ln()) / nu).floor() + 1.0;
    let clamped = raw < 1.0;
    let c = raw.max(1.0) as u32;
    let bound = (spec.m() as u128)
        .checked_pow(k as u32 + c)
        .and_then(|p| p.checked_add(1))
        .unwrap_or(u128::MAX);
    let count = counting(&sys, (nu * (k + 1) as f64).exp()) - counting(&sys, (nu * k as f64).exp());
    Ok(DiscCountBound {
        k,
        count,
        bound,
        c,
        lambda1,
        clamped,
    })
}

/// Outcome of comparing `σ_k` and `σ_{k+1}` on the grid points that fall
/// strictly between `λ_{m(n+1)-1}` and `λ_{m(n+1)}` after scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowCheck {
    pub checked: usize,
    pub mismatches: usize,
}

/// `spectrum` must contain every eigenvalue up to `e^{(k+2)ν}` plus one.
pub fn window_periodicity(
    spec: &LadderSpec,
    spectrum: &Spectrum,
    lower: &SigmaProfile,
    upper: &SigmaProfile,
) -> WindowCheck {
    let m = spec.m();
    let lam = &spectrum.eigenvalues;
    let k = lower.k;
    let grid_size = lower.grid.len() - 1;
    let mut check = WindowCheck {
        checked: 0,
        mismatches: 0,
    };
    for i in 0..=grid_size {
        let x = (spec.nu() * ((k + 1) as f64 + i as f64 / grid_size as f64)).exp();
        let below = lam.partition_point(|&l| l < x);
        if below == 0 || below % m != 0 || below >= lam.len() || x >= lam[below] {
            continue;
        }
        check.checked += 1;
        if lower.sigma[i] != upper.sigma[i] {
            check.mismatches += 1;
        }
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::discretize;
    use crate::stieltjes::{assemble, spectrum};

    #[test]
    fn inclusive_counts() {
        let sys = assemble(&discretize(&LadderSpec::cantor(), 1).unwrap(), 0.0, 0.0).unwrap();
        assert_eq!(counting(&sys, 6.0), 2);
        assert_eq!(counting(&sys, 0.0), 1);
        assert_eq!(counting(&sys, 5.999999), 1);
        assert_eq!(counting(&sys, -1.0), 0);
    }

    #[test]
    fn counting_at_eigenvalues() {
        for g in 0..=4 {
            let sys = assemble(&discretize(&LadderSpec::cantor(), g).unwrap(), 0.0, 0.0).unwrap();
            let s = spectrum(&sys, sys.len() - 1).unwrap();
            for (n, &l) in s.eigenvalues.iter().enumerate() {
                assert_eq!(counting(&sys, l), n + 1);
            }
        }
    }

    #[test]
    fn margin_enforced() {
        let spec = LadderSpec::cantor();
        assert!(matches!(
            sigma_profile(&spec, 4, 3, 16),
            Err(SpectraError::Margin { .. })
        ));
        assert!(matches!(
            convergence_report(&spec, 4, 3, 16),
            Err(SpectraError::Margin { .. })
        ));
        assert!(matches!(
            disc_count_bound(&spec, 4, 3),
            Err(SpectraError::Margin { .. })
        ));
    }

    #[test]
    fn low_window_starts_at_one() {
        let spec = LadderSpec::cantor();
        let p = sigma_profile(&spec, 6, 0, 64).unwrap();
        let sys = neumann_system(&spec, 6).unwrap();
        let lambda1 = eigenvalue(&sys, 1).unwrap();
        for (t, v) in p.grid.iter().zip(&p.sigma) {
            if t.exp() < lambda1 {
                assert_eq!(*v, 1.0);
            }
        }
        for (i, (s, v)) in p.s.iter().zip(&p.sigma).enumerate() {
            let expect = (-p.dim * p.grid[i]).exp() * v;
            assert!((s - expect).abs() <= 1e-15 * expect.abs());
        }
    }

    #[test]
    fn adjacent_windows_share_endpoint() {
        let spec = LadderSpec::cantor();
        let sys = neumann_system(&spec, 6).unwrap();
        for k in 0..4 {
            let a = profile_on(&sys, &spec, k, 32);
            let b = profile_on(&sys, &spec, k + 1, 32);
            assert_eq!(2.0 * b.sigma[0], a.sigma[32]);
            assert!(a.sigma.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn empty_report() {
        let r = convergence_report(&LadderSpec::cantor(), 4, 0, 32).unwrap();
        assert!(r.l2_diff.is_empty() && r.scaled_l2.is_empty() && r.singularity_product.is_empty());
        assert_eq!(r.amplitude.len(), 1);
    }

    #[test]
    fn disc_count_windows() {
        let spec = LadderSpec::cantor();
        let b = disc_count_bound(&spec, 8, 2).unwrap();
        assert!(b.holds(), "{b:?}");
        let sys = neumann_system(&spec, 8).unwrap();
        let b0 = disc_count_bound(&spec, 8, 0).unwrap();
        assert_eq!(
            b0.count,
            counting(&sys, spec.nu().exp()) - counting(&sys, 1.0)
        );
        // λ_1 ≈ 6.9 > e, so the raw exponent is below 1 and gets clamped.
        assert!(b0.clamped && b0.c == 1);
    }
}
