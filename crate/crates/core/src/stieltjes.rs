//! Finite Stieltjes strings.
//!
//! For an atomic measure the generalized eigenfunctions are linear between
//! atoms, so the quadratic form reduces to a spring chain: an interior spring
//! of stiffness `1/ℓ_i` between consecutive atoms and two boundary springs
//! `γ0/(1 + γ0 x_1)` and `γ1/(1 + γ1 (1 - x_N))` coming from the Robin
//! conditions. The pencil `(K, M)` is symmetric tridiagonal with a diagonal
//! positive mass matrix.

use rayon::prelude::*;
use serde::Serialize;

use crate::discretize::AtomicMeasure;
use crate::error::{Result, SpectraError};

/// Relative bisection tolerance for eigenvalues.
pub const REL_TOL: f64 = 1e-13;
/// Absolute floor of the bisection tolerance.
pub const ABS_TOL: f64 = 1e-300;

const PIVOT_REL: f64 = 1e-14;
const PIVOT_FLOOR: f64 = 1e-300;
const ZERO_THRESHOLD: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-8;
const PARALLEL_SPLIT: usize = 64;

/// Robin parameters; Neumann is `γ0 = γ1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryCondition {
    pub gamma0: f64,
    pub gamma1: f64,
}

impl BoundaryCondition {
    pub const NEUMANN: BoundaryCondition = BoundaryCondition {
        gamma0: 0.0,
        gamma1: 0.0,
    };

    pub fn robin(gamma0: f64, gamma1: f64) -> Self {
        BoundaryCondition { gamma0, gamma1 }
    }

    pub fn symmetric(gamma: f64) -> Self {
        BoundaryCondition {
            gamma0: gamma,
            gamma1: gamma,
        }
    }

    pub fn is_neumann(&self) -> bool {
        self.gamma0 == 0.0 && self.gamma1 == 0.0
    }
}

#[derive(Debug, Clone)]
pub struct StringSystem {
    atoms: AtomicMeasure,
    bc: BoundaryCondition,
    /// `N + 1` springs; atom `i` sits between springs `i` and `i + 1`.
    springs: Vec<f64>,
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

pub fn assemble(measure: &AtomicMeasure, gamma0: f64, gamma1: f64) -> Result<StringSystem> {
    let bc = BoundaryCondition::robin(gamma0, gamma1);
    StringSystem::new(measure.clone(), bc)
}

impl StringSystem {
    pub fn new(atoms: AtomicMeasure, bc: BoundaryCondition) -> Result<Self> {
        let ok = |g: f64| g >= 0.0 && g.is_finite();
        if !ok(bc.gamma0) || !ok(bc.gamma1) {
            return Err(SpectraError::Domain(format!(
                "Robin parameters must be finite and non-negative, got ({}, {})",
                bc.gamma0, bc.gamma1
            )));
        }
        let x = atoms.positions();
        let n = x.len();
        let mut springs = Vec::with_capacity(n + 1);
        springs.push(bc.gamma0 / (1.0 + bc.gamma0 * x[0]));
        springs.extend(x.windows(2).map(|w| 1.0 / (w[1] - w[0])));
        springs.push(bc.gamma1 / (1.0 + bc.gamma1 * (1.0 - x[n - 1])));
        let diag = springs.windows(2).map(|w| w[0] + w[1]).collect();
        let offdiag = springs[1..n].iter().map(|k| -k).collect();
        Ok(StringSystem {
            atoms,
            bc,
            springs,
            diag,
            offdiag,
        })
    }

    pub fn atoms(&self) -> &AtomicMeasure {
        &self.atoms
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Diagonal of the stiffness matrix.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal of the stiffness matrix, `-1/ℓ_i`.
    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn masses(&self) -> &[f64] {
        self.atoms.masses()
    }

    /// Gershgorin bound for the mass-normalized matrix: every eigenvalue is
    /// at most this value.
    pub fn upper_bound(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 {
                    self.offdiag[i - 1].abs()
                } else {
                    0.0
                };
                let right = if i + 1 < n {
                    self.offdiag[i].abs()
                } else {
                    0.0
                };
                (self.diag[i].abs() + left + right) / self.masses()[i]
            })
            .fold(0.0, f64::max)
    }

    /// `‖K‖_∞`.
    pub fn stiffness_scale(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 {
                    self.offdiag[i - 1].abs()
                } else {
                    0.0
                };
                let right = if i + 1 < n {
                    self.offdiag[i].abs()
                } else {
                    0.0
                };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    /// `(K - λM) u`.
    pub fn apply_shifted(&self, lambda: f64, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = (self.diag[i] - lambda * self.masses()[i]) * u[i];
                if i > 0 {
                    v += self.offdiag[i - 1] * u[i - 1];
                }
                if i + 1 < n {
                    v += self.offdiag[i] * u[i + 1];
                }
                v
            })
            .collect()
    }
}

/// Number of pencil eigenvalues strictly below `lambda`.
///
/// Counts negative pivots of the `LDLᵀ` factorization of `K - λM`, written
/// in spring form: with `e_0 = k_0 - λ m_0`, pivot `d_i = k_{i+1} + e_i`
/// and `e_{i+1} = k_{i+1} e_i / d_i - λ m_{i+1}`. No diagonal sum is ever
/// formed, so the kernel of the Neumann problem is detected exactly. A pivot
/// below `1e-14` of its row scale is replaced by `+guard`, which keeps the
/// count strict when `λ` is itself an eigenvalue.
pub fn sturm_count(sys: &StringSystem, lambda: f64) -> usize {
    let k = &sys.springs;
    let m = sys.masses();
    let n = m.len();
    let mut count = 0;
    let mut e = k[0] - lambda * m[0];
    for i in 0..n {
        let spring = k[i + 1];
        let mut d = spring + e;
        let guard = (PIVOT_REL * (spring.abs() + e.abs())).max(PIVOT_FLOOR);
        if d.abs() < guard {
            d = guard;
        }
        if d < 0.0 {
            count += 1;
        }
        if i + 1 < n {
            e = spring * (e / d) - lambda * m[i + 1];
        }
    }
    count
}

fn converged(lo: f64, hi: f64) -> bool {
    let mid = 0.5 * (lo + hi);
    hi - lo <= REL_TOL * hi.abs().max(lo.abs()) + ABS_TOL || mid <= lo || mid >= hi
}

/// Bisection for `λ_n` given `count(lo) ≤ n < count(hi)`.
fn bisect(sys: &StringSystem, n: usize, mut lo: f64, mut hi: f64) -> f64 {
    while !converged(lo, hi) {
        let mid = 0.5 * (lo + hi);
        if sturm_count(sys, mid) > n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn initial_bracket(sys: &StringSystem) -> f64 {
    sys.upper_bound() * (1.0 + 1e-10) + f64::MIN_POSITIVE
}

/// `λ_n`, eigenvalues numbered from zero in ascending order.
pub fn eigenvalue(sys: &StringSystem, n: usize) -> Result<f64> {
    if n >= sys.len() {
        return Err(SpectraError::Index {
            index: n,
            len: sys.len(),
        });
    }
    if n == 0 && sys.bc.is_neumann() {
        return Ok(0.0);
    }
    Ok(bisect(sys, n, 0.0, initial_bracket(sys)))
}

/// Ascending eigenvalues of one pencil, with the boundary conditions and
/// tolerances they were computed under.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub bc: BoundaryCondition,
    pub generation: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        self.eigenvalues.get(n).copied()
    }
}

/// Eigenvalues `λ_0 ..= λ_{n_max}`.
///
/// Brackets are split recursively at Sturm-count evaluations until each
/// holds a single eigenvalue, which is then bisected on its own. The
/// schedule depends only on the system, not on the thread count. Two
/// eigenvalues closer than the combined tolerance raise `Cluster`.
pub fn spectrum(sys: &StringSystem, n_max: usize) -> Result<Spectrum> {
    let eigenvalues = eigenvalues_upto(sys, n_max, true)?;
    for (i, w) in eigenvalues.windows(2).enumerate() {
        let tol = |x: f64| REL_TOL * x.abs() + ABS_TOL;
        if w[1] - w[0] <= tol(w[0]) + tol(w[1]) {
            return Err(SpectraError::Cluster(i, i + 1));
        }
    }
    Ok(Spectrum {
        eigenvalues,
        bc: sys.bc,
        generation: sys.atoms.generation(),
        rel_tol: REL_TOL,
        abs_tol: ABS_TOL,
    })
}

/// Same bisection schedule as [`spectrum`], but eigenvalues that cannot be
/// separated in double precision are returned at their common value
/// instead of raising `Cluster`. Meant for index-wise comparisons.
pub fn eigenvalues_unresolved(sys: &StringSystem, n_max: usize) -> Result<Vec<f64>> {
    eigenvalues_upto(sys, n_max, false)
}

fn eigenvalues_upto(sys: &StringSystem, n_max: usize, strict: bool) -> Result<Vec<f64>> {
    if n_max >= sys.len() {
        return Err(SpectraError::Index {
            index: n_max,
            len: sys.len(),
        });
    }
    let end = n_max + 1;
    let hi = initial_bracket(sys);
    let mut eigenvalues = Vec::with_capacity(end);
    let first = if sys.bc.is_neumann() {
        eigenvalues.push(0.0);
        1
    } else {
        0
    };
    eigenvalues.extend(split(sys, 0.0, hi, first, sys.len(), end, strict)?);
    Ok(eigenvalues)
}

/// Eigenvalues with indices in `clo..min(chi, end)`, all lying in `[lo, hi)`.
fn split(
    sys: &StringSystem,
    lo: f64,
    hi: f64,
    clo: usize,
    chi: usize,
    end: usize,
    strict: bool,
) -> Result<Vec<f64>> {
    if clo >= chi || clo >= end {
        return Ok(Vec::new());
    }
    if chi - clo == 1 {
        return Ok(vec![bisect(sys, clo, lo, hi)]);
    }
    if converged(lo, hi) {
        if strict {
            return Err(SpectraError::Cluster(clo, clo + 1));
        }
        return Ok(vec![0.5 * (lo + hi); chi.min(end) - clo]);
    }
    let mid = 0.5 * (lo + hi);
    let cmid = sturm_count(sys, mid).clamp(clo, chi);
    let (left, right) = if chi - clo > PARALLEL_SPLIT {
        rayon::join(
            || split(sys, lo, mid, clo, cmid, end, strict),
            || split(sys, mid, hi, cmid, chi, end, strict),
        )
    } else {
        (
            split(sys, lo, mid, clo, cmid, end, strict),
            split(sys, mid, hi, cmid, chi, end, strict),
        )
    };
    let mut out = left?;
    out.extend(right?);
    Ok(out)
}

/// Full spectra for several systems at once.
pub fn spectra(systems: &[StringSystem]) -> Result<Vec<Spectrum>> {
    systems
        .par_iter()
        .map(|s| spectrum(s, s.len() - 1))
        .collect()
}

/// Unit eigenvector at a converged eigenvalue.
///
/// Uses a twisted factorization of `K - λM` in spring form: forward pivots
/// `d_i` from the top, backward pivots `b_i` from the bottom, and the twist
/// index `r` where `γ_r = e_r + f_r + λ m_r` is smallest. With `u_r = 1`,
/// `u_i = k_{i+1} u_{i+1} / d_i` above the twist and `u_i = k_i u_{i-1} / b_i`
/// below it, so every entry is a product of ratios and keeps its sign and
/// relative accuracy even far out in an exponentially small tail. The first
/// entry above the zero threshold is made positive.
pub fn eigenvector(sys: &StringSystem, lambda: f64) -> Result<Vec<f64>> {
    let n = sys.len();
    let k = &sys.springs;
    let mass = sys.masses();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let guarded = |spring: f64, e: f64| {
        let d = spring + e;
        let guard = (PIVOT_REL * (spring.abs() + e.abs())).max(PIVOT_FLOOR);
        if d.abs() < guard {
            guard
        } else {
            d
        }
    };
    let mut e = vec![0.0; n];
    let mut d = vec![0.0; n];
    e[0] = k[0] - lambda * mass[0];
    for i in 0..n {
        d[i] = guarded(k[i + 1], e[i]);
        if i + 1 < n {
            e[i + 1] = k[i + 1] * (e[i] / d[i]) - lambda * mass[i + 1];
        }
    }
    let mut f = vec![0.0; n];
    let mut b = vec![0.0; n];
    f[n - 1] = k[n] - lambda * mass[n - 1];
    for i in (0..n).rev() {
        b[i] = guarded(k[i], f[i]);
        if i > 0 {
            f[i - 1] = k[i] * (f[i] / b[i]) - lambda * mass[i - 1];
        }
    }
    let twist = (0..n)
        .min_by(|&i, &j| {
            let gi = (e[i] + f[i] + lambda * mass[i]).abs();
            let gj = (e[j] + f[j] + lambda * mass[j]).abs();
            gi.total_cmp(&gj)
        })
        .unwrap_or(0);
    let mut u = vec![0.0; n];
    u[twist] = 1.0;
    for i in (0..twist).rev() {
        u[i] = k[i + 1] * u[i + 1] / d[i];
    }
    for i in twist + 1..n {
        u[i] = k[i] * u[i - 1] / b[i];
    }
    if !u.iter().all(|x| x.is_finite()) {
        return Err(SpectraError::NoConverge(lambda));
    }
    normalize(&mut u);
    let scale = sys.stiffness_scale() + lambda.abs() * mass.iter().fold(0.0, |a: f64, &b| a.max(b));
    if norm(&sys.apply_shifted(lambda, &u)) > RESIDUAL_TOL * scale {
        return Err(SpectraError::NoConverge(lambda));
    }
    orient(&mut u);
    Ok(u)
}

fn norm(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(u: &mut [f64]) {
    let s = norm(u);
    u.iter_mut().for_each(|x| *x /= s);
}

fn orient(u: &mut [f64]) {
    let max = u.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
    if let Some(first) = u.iter().find(|x| x.abs() > ZERO_THRESHOLD * max) {
        if *first < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Strict sign alternations, ignoring entries below `1e-10` of the largest.
pub fn sign_changes(u: &[f64]) -> Result<usize> {
    alternations(u, ZERO_THRESHOLD)
}

/// Strict sign alternations over every nonzero entry.
///
/// Meant for vectors from [`eigenvector`], whose small entries are accurate
/// to working precision relative to themselves: an exponentially localized
/// mode keeps sign changes in its tail that [`sign_changes`] discards.
pub fn oscillation_count(u: &[f64]) -> Result<usize> {
    alternations(u, 0.0)
}

fn alternations(u: &[f64], rel: f64) -> Result<usize> {
    let max = u.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
    if max.is_nan() || max <= 0.0 {
        return Err(SpectraError::ZeroVec);
    }
    let threshold = (rel * max).max(f64::MIN_POSITIVE);
    let mut signs = u
        .iter()
        .filter(|x| x.abs() >= threshold)
        .map(|x| x.is_sign_positive());
    let Some(mut last) = signs.next() else {
        return Err(SpectraError::ZeroVec);
    };
    let mut changes = 0;
    for s in signs {
        if s != last {
            changes += 1;
            last = s;
        }
    }
    Ok(changes)
}
