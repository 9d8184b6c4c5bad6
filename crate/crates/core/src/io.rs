//! CSV text for atoms, spectra and σ-profiles.
//!
//! Floats are written with 17 significant digits so they read back to the
//! same double.

use crate::asymptotics::SigmaProfile;
use crate::discretize::AtomicMeasure;
use crate::error::{Result, SpectraError};
use crate::stieltjes::Spectrum;

pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn atoms_csv(measure: &AtomicMeasure) -> String {
    let mut out = String::from("x,mass\n");
    for (x, m) in measure.positions().iter().zip(measure.masses()) {
        out.push_str(&format!("{},{}\n", fmt17(*x), fmt17(*m)));
    }
    out
}

pub fn parse_atoms_csv(text: &str, generation: usize) -> Result<AtomicMeasure> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next().map(str::trim) {
        Some("x,mass") => {}
        other => {
            return Err(SpectraError::NonNumeric(format!(
                "bad atoms header {other:?}"
            )))
        }
    }
    let mut positions = Vec::new();
    let mut masses = Vec::new();
    for line in lines {
        let (x, m) = line
            .split_once(',')
            .ok_or_else(|| SpectraError::NonNumeric(line.to_string()))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| SpectraError::NonNumeric(s.to_string()))
        };
        positions.push(parse(x)?);
        masses.push(parse(m)?);
    }
    AtomicMeasure::new(positions, masses, generation)
}

pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut out = String::from("index,lambda\n");
    for (n, l) in spectrum.eigenvalues.iter().enumerate() {
        out.push_str(&format!("{n},{}\n", fmt17(*l)));
    }
    out
}

pub fn sigma_csv(profiles: &[SigmaProfile]) -> String {
    let mut out = String::from("k,t,sigma,s\n");
    for p in profiles {
        for ((t, sigma), s) in p.grid.iter().zip(&p.sigma).zip(&p.s) {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.k,
                fmt17(*t),
                fmt17(*sigma),
                fmt17(*s)
            ));
        }
    }
    out
}
