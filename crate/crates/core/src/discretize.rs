//! Atomic approximations of the self-similar measure.
//!
//! Generation `g` has one atom per cylinder `S_{w_1} ∘ … ∘ S_{w_g}([0, 1])`,
//! placed at the cylinder midpoint and carrying the cylinder mass. Positions
//! are built by pushing generation `g - 1` through each `S_k`, so the
//! generation-`(g + 1)` atoms are literally the images of the generation-`g`
//! atoms, bit for bit.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::error::{Result, SpectraError};
use crate::ladder::{LadderSpec, Scalar};

/// Default atom-count limit, `2^24`.
pub const DEFAULT_CAPACITY: usize = 1 << 24;

static CAPACITY: AtomicUsize = AtomicUsize::new(DEFAULT_CAPACITY);

pub fn capacity() -> usize {
    CAPACITY.load(Ordering::Relaxed)
}

pub fn set_capacity(limit: usize) {
    CAPACITY.store(limit, Ordering::Relaxed);
}

/// Number of atoms `m^g` after checking it against the capacity limit.
pub fn atom_count(spec: &LadderSpec, g: usize) -> Result<usize> {
    let limit = capacity();
    let atoms = (spec.m() as u128)
        .checked_pow(g as u32)
        .unwrap_or(u128::MAX);
    if atoms > limit as u128 {
        return Err(SpectraError::Capacity { atoms, limit });
    }
    Ok(atoms as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder<T> {
    pub lo: T,
    pub hi: T,
    pub mass: T,
}

/// The `m^g` cylinders of generation `g`, left to right.
pub fn cylinders<T: Scalar>(spec: &LadderSpec, g: usize) -> Result<Vec<Cylinder<T>>> {
    atom_count(spec, g)?;
    let steps = spec.steps::<T>()?;
    let mut level = vec![Cylinder {
        lo: T::zero(),
        hi: T::one(),
        mass: T::one(),
    }];
    for _ in 0..g {
        level = steps
            .par_iter()
            .flat_map_iter(|s| {
                level.iter().map(move |c| Cylinder {
                    lo: s.map(&c.lo),
                    hi: s.map(&c.hi),
                    mass: s.weight.clone() * c.mass.clone(),
                })
            })
            .collect();
    }
    Ok(level)
}

/// Generation-`g` atomic measure: ascending positions in `(0, 1)` with
/// positive masses.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    positions: Vec<f64>,
    masses: Vec<f64>,
    generation: usize,
}

impl AtomicMeasure {
    /// Builds a measure from explicit atoms, checking ordering and positivity.
    pub fn new(positions: Vec<f64>, masses: Vec<f64>, generation: usize) -> Result<Self> {
        if positions.is_empty() || positions.len() != masses.len() {
            return Err(SpectraError::Domain(format!(
                "{} positions and {} masses",
                positions.len(),
                masses.len()
            )));
        }
        if !positions.iter().all(|&x| x > 0.0 && x < 1.0)
            || !positions.windows(2).all(|w| w[0] < w[1])
        {
            return Err(SpectraError::Domain(
                "positions must ascend strictly inside (0, 1)".into(),
            ));
        }
        if !masses.iter().all(|&m| m > 0.0 && m.is_finite()) {
            return Err(SpectraError::Domain("masses must be positive".into()));
        }
        Ok(AtomicMeasure {
            positions,
            masses,
            generation,
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// First moment `∫ t dρ_g(t)`.
    pub fn mean(&self) -> f64 {
        self.positions
            .iter()
            .zip(&self.masses)
            .map(|(x, m)| x * m)
            .sum()
    }
}

/// Midpoint lumping of the generation-`g` cylinders.
pub fn discretize(spec: &LadderSpec, g: usize) -> Result<AtomicMeasure> {
    let n = atom_count(spec, g)?;
    let steps = spec.steps::<f64>()?;
    let mut positions = vec![0.5];
    let mut masses = vec![1.0];
    for _ in 0..g {
        let (p, w): (Vec<Vec<f64>>, Vec<Vec<f64>>) = steps
            .par_iter()
            .map(|s| {
                (
                    positions.iter().map(|x| s.map(x)).collect(),
                    masses.iter().map(|m| s.weight * m).collect(),
                )
            })
            .unzip();
        positions = p.concat();
        masses = w.concat();
    }
    debug_assert_eq!(positions.len(), n);
    Ok(AtomicMeasure {
        positions,
        masses,
        generation: g,
    })
}

#[cfg(test)]
mod tests {
    use num_bigint::BigInt;
    use num_rational::BigRational;

    use super::*;
    use crate::ladder::even_ladder;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn cyl(lo: (i64, i64), hi: (i64, i64), mass: (i64, i64)) -> Cylinder<BigRational> {
        Cylinder {
            lo: r(lo.0, lo.1),
            hi: r(hi.0, hi.1),
            mass: r(mass.0, mass.1),
        }
    }

    #[test]
    fn cantor_cylinders() {
        let spec = LadderSpec::cantor();
        assert_eq!(
            cylinders::<BigRational>(&spec, 0).unwrap(),
            vec![cyl((0, 1), (1, 1), (1, 1))]
        );
        assert_eq!(
            cylinders::<BigRational>(&spec, 1).unwrap(),
            vec![cyl((0, 1), (1, 3), (1, 2)), cyl((2, 3), (1, 1), (1, 2))]
        );
        assert_eq!(
            cylinders::<BigRational>(&spec, 2).unwrap(),
            vec![
                cyl((0, 1), (1, 9), (1, 4)),
                cyl((2, 9), (1, 3), (1, 4)),
                cyl((2, 3), (7, 9), (1, 4)),
                cyl((8, 9), (1, 1), (1, 4)),
            ]
        );
    }

    #[test]
    fn cantor_atoms() {
        let spec = LadderSpec::cantor();
        let g0 = discretize(&spec, 0).unwrap();
        assert_eq!((g0.positions(), g0.masses()), (&[0.5][..], &[1.0][..]));
        let g1 = discretize(&spec, 1).unwrap();
        assert_eq!(g1.masses(), &[0.5, 0.5]);
        for (x, e) in g1.positions().iter().zip([1.0 / 6.0, 5.0 / 6.0]) {
            assert!((x - e).abs() < 1e-15);
        }
        let g2 = discretize(&spec, 2).unwrap();
        assert_eq!(g2.masses(), &[0.25; 4]);
        for (x, e) in g2.positions().iter().zip([1.0, 5.0, 13.0, 17.0]) {
            assert!((x - e / 18.0).abs() < 1e-15);
        }
    }

    #[test]
    fn midpoints_match_cylinders() {
        let spec = even_ladder(3, &r(1, 5)).unwrap();
        let cyls = cylinders::<BigRational>(&spec, 3).unwrap();
        let atoms = discretize(&spec, 3).unwrap();
        for (c, (x, m)) in cyls
            .iter()
            .zip(atoms.positions().iter().zip(atoms.masses()))
        {
            let mid = (c.lo.clone() + c.hi.clone()) / r(2, 1);
            assert!((x - mid.to_f64()).abs() < 1e-15);
            assert!((m - c.mass.to_f64()).abs() < 1e-15);
        }
        let total = cyls.iter().fold(r(0, 1), |acc, c| acc + c.mass.clone());
        assert_eq!(total, r(1, 1));
    }

    #[test]
    fn capacity_limit() {
        let spec = LadderSpec::cantor();
        assert!(matches!(
            discretize(&spec, 25),
            Err(SpectraError::Capacity { atoms, limit }) if atoms == 1 << 25 && limit == DEFAULT_CAPACITY
        ));
        assert!(matches!(
            cylinders::<f64>(&spec, 200),
            Err(SpectraError::Capacity { .. })
        ));
    }

    #[test]
    fn explicit_measure_checks() {
        assert!(AtomicMeasure::new(vec![0.2, 0.1], vec![0.5, 0.5], 0).is_err());
        assert!(AtomicMeasure::new(vec![0.0, 0.5], vec![0.5, 0.5], 0).is_err());
        assert!(AtomicMeasure::new(vec![0.2, 0.5], vec![0.5, 0.0], 0).is_err());
        assert!(AtomicMeasure::new(vec![0.2], vec![0.5, 0.5], 0).is_err());
        assert!(AtomicMeasure::new(vec![0.2, 0.5], vec![0.5, 0.5], 0).is_ok());
    }
}
