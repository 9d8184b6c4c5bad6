//! Renormalization checks across generations.
//!
//! Because the generation-`(g + 1)` atoms are the images of the
//! generation-`g` atoms under the `S_k`, the Neumann eigenvector of index
//! `n` glued into `m` rescaled copies is an exact eigenvector of index `mn`
//! one generation up, with eigenvalue divided by `tau`. The Robin version
//! only yields an inequality, checked here with the prescribed parameters.

use rayon::prelude::*;
use serde::Serialize;

use crate::discretize::{atom_count, discretize};
use crate::error::{Result, SpectraError};
use crate::ladder::LadderSpec;
use crate::stieltjes::{
    eigenvalues_unresolved, spectrum, sturm_count, BoundaryCondition, Spectrum, StringSystem,
};

/// Relative tolerance for identities and one-sided slack for inequalities.
pub const RENORM_TOL: f64 = 1e-9;
/// Absolute tolerance for the `λ_0 = 0` row of the periodicity check.
pub const ZERO_TOL: f64 = 1e-12;
const MAX_OFFENDERS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    Periodicity,
    Quasiperiodicity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Offender {
    pub n: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenormReport {
    pub theorem: Theorem,
    pub g: usize,
    pub n_max: usize,
    pub max_error: f64,
    pub pass: bool,
    pub offenders: Vec<Offender>,
    #[serde(skip)]
    pub tolerance: f64,
}

impl RenormReport {
    fn from_rows(theorem: Theorem, g: usize, n_max: usize, rows: Vec<f64>, tol: f64) -> Self {
        let max_error = rows.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut offenders: Vec<Offender> = rows
            .into_iter()
            .enumerate()
            .map(|(n, value)| Offender { n, value })
            .collect();
        offenders.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.n.cmp(&b.n)));
        offenders.truncate(MAX_OFFENDERS);
        RenormReport {
            theorem,
            g,
            n_max,
            max_error,
            pass: max_error <= tol,
            offenders,
            tolerance: tol,
        }
    }
}

/// The Robin parameters `(γ1, γ2)` of the quasiperiodicity estimate:
/// `γ1 = max_k 2/gap_k` and `γ2 = γ1 · min(|I_1|, |I_m|)`.
pub fn gammas(spec: &LadderSpec) -> (f64, f64) {
    let gamma1 = spec
        .gaps_f64()
        .into_iter()
        .map(|gap| 2.0 / gap)
        .fold(0.0, f64::max);
    let iv = spec.intervals_f64();
    let first = iv[0].1 - iv[0].0;
    let last = iv[iv.len() - 1].1 - iv[iv.len() - 1].0;
    (gamma1, gamma1 * first.min(last))
}

pub(crate) fn system(spec: &LadderSpec, g: usize, bc: BoundaryCondition) -> Result<StringSystem> {
    StringSystem::new(discretize(spec, g)?, bc)
}

fn check_index(spec: &LadderSpec, g: usize, n_max: usize) -> Result<()> {
    let len = atom_count(spec, g)?;
    atom_count(spec, g + 1)?;
    if n_max >= len {
        return Err(SpectraError::Index { index: n_max, len });
    }
    Ok(())
}

/// Checks `τ λ^{(g+1)}_{mn} = λ^{(g)}_n` for `n ≤ n_max` on Neumann spectra.
pub fn verify_periodicity(spec: &LadderSpec, g: usize, n_max: usize) -> Result<RenormReport> {
    verify_periodicity_tol(spec, g, n_max, RENORM_TOL)
}

pub fn verify_periodicity_tol(
    spec: &LadderSpec,
    g: usize,
    n_max: usize,
    tol: f64,
) -> Result<RenormReport> {
    check_index(spec, g, n_max)?;
    let m = spec.m();
    let coarse = eigenvalues_unresolved(&system(spec, g, BoundaryCondition::NEUMANN)?, n_max)?;
    let fine =
        eigenvalues_unresolved(&system(spec, g + 1, BoundaryCondition::NEUMANN)?, m * n_max)?;
    let rows = (0..=n_max)
        .map(|n| {
            let lhs = spec.tau() * fine[m * n];
            let rhs = coarse[n];
            if n == 0 {
                // Both vanish; compared absolutely.
                lhs.abs().max(rhs.abs())
            } else {
                (lhs / rhs - 1.0).abs()
            }
        })
        .collect::<Vec<f64>>();
    let zero_ok = rows[0] <= ZERO_TOL;
    let mut report = RenormReport::from_rows(Theorem::Periodicity, g, n_max, rows, tol);
    report.pass = zero_ok && report.offenders.iter().all(|o| o.n == 0 || o.value <= tol);
    Ok(report)
}

/// Checks `τ μ_{m(n+1)-1} ≤ λ_n`, with `λ` from the `γ1` problem at
/// generation `g` and `μ` from the `γ2` problem at generation `g + 1`.
/// The reported error is `max_n (τ μ_{m(n+1)-1} / λ_n - 1)`.
pub fn verify_quasiperiodicity(spec: &LadderSpec, g: usize, n_max: usize) -> Result<RenormReport> {
    verify_quasiperiodicity_tol(spec, g, n_max, RENORM_TOL)
}

pub fn verify_quasiperiodicity_tol(
    spec: &LadderSpec,
    g: usize,
    n_max: usize,
    tol: f64,
) -> Result<RenormReport> {
    check_index(spec, g, n_max)?;
    let m = spec.m();
    let (gamma1, gamma2) = gammas(spec);
    let lambda = eigenvalues_unresolved(
        &system(spec, g, BoundaryCondition::symmetric(gamma1))?,
        n_max,
    )?;
    let mu = eigenvalues_unresolved(
        &system(spec, g + 1, BoundaryCondition::symmetric(gamma2))?,
        m * (n_max + 1) - 1,
    )?;
    let rows = (0..=n_max)
        .map(|n| spec.tau() * mu[m * (n + 1) - 1] / lambda[n] - 1.0)
        .collect();
    Ok(RenormReport::from_rows(
        Theorem::Quasiperiodicity,
        g,
        n_max,
        rows,
        tol,
    ))
}

/// Largest difference of the two counting functions over `lambda_grid`.
pub fn bc_counting_shift(a: &StringSystem, b: &StringSystem, lambda_grid: &[f64]) -> Result<usize> {
    if a.atoms() != b.atoms() {
        return Err(SpectraError::Mismatch);
    }
    Ok(lambda_grid
        .par_iter()
        .map(|&l| sturm_count(a, l).abs_diff(sturm_count(b, l)))
        .max()
        .unwrap_or(0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogDistance {
    /// `|ln μ_n - ln λ_n|` for `n = 1..=K`.
    pub terms: Vec<f64>,
    /// Running sums of `terms`.
    pub partial_sums: Vec<f64>,
}

impl LogDistance {
    pub fn total(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }
}

/// Partial sums of `|ln μ_n - ln λ_n|`, `λ` Neumann and `μ` Robin with
/// `(gamma0, gamma1)`, both on generation `g`.
pub fn log_distance_partial_sums(
    spec: &LadderSpec,
    g: usize,
    gamma0: f64,
    gamma1: f64,
    k: usize,
) -> Result<LogDistance> {
    let len = atom_count(spec, g)?;
    if k >= len {
        return Err(SpectraError::Index { index: k, len });
    }
    let atoms = discretize(spec, g)?;
    let neumann = spectrum(
        &StringSystem::new(atoms.clone(), BoundaryCondition::NEUMANN)?,
        k,
    )?;
    let robin = spectrum(
        &StringSystem::new(atoms, BoundaryCondition::robin(gamma0, gamma1))?,
        k,
    )?;
    let terms: Vec<f64> = (1..=k)
        .map(|n| (robin.eigenvalues[n].ln() - neumann.eigenvalues[n].ln()).abs())
        .collect();
    let partial_sums = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    Ok(LogDistance {
        terms,
        partial_sums,
    })
}

/// Margins of the strict orderings `μ2_{m(n+1)-1} > μ2_{mn} > λ_{mn}` and
/// `μ1_n > λ_n` on one generation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub g: usize,
    /// Smallest relative margin `(upper - lower) / upper` over all rows.
    pub min_margin: f64,
    pub pass: bool,
}

pub fn verify_ordering_chain(spec: &LadderSpec, g: usize) -> Result<OrderingReport> {
    let atoms = discretize(spec, g)?;
    let (gamma1, gamma2) = gammas(spec);
    let full = |bc| -> Result<Spectrum> {
        let sys = StringSystem::new(atoms.clone(), bc)?;
        spectrum(&sys, sys.len() - 1)
    };
    let lambda = full(BoundaryCondition::NEUMANN)?;
    let mu1 = full(BoundaryCondition::symmetric(gamma1))?;
    let mu2 = full(BoundaryCondition::symmetric(gamma2))?;
    let m = spec.m();
    let len = lambda.len();
    let margin = |upper: f64, lower: f64| (upper - lower) / upper;
    let mut min_margin = f64::INFINITY;
    for n in 0..len {
        min_margin = min_margin.min(margin(mu1.eigenvalues[n], lambda.eigenvalues[n]));
        if m * (n + 1) - 1 < len {
            let top = mu2.eigenvalues[m * (n + 1) - 1];
            let mid = mu2.eigenvalues[m * n];
            min_margin = min_margin.min(margin(mid, lambda.eigenvalues[m * n]));
            if m * (n + 1) - 1 > m * n {
                min_margin = min_margin.min(margin(top, mid));
            }
        }
    }
    Ok(OrderingReport {
        g,
        min_margin,
        pass: min_margin > 0.0,
    })
}
