//! Dense reference eigenvalues.
//!
//! The pencil is reduced to the mass-normalized symmetric matrix
//! `A = M^{-1/2} K M^{-1/2}`. Roots are bracketed through the leading
//! principal minors `p_k(λ) = det(A_k - λ I)`: the number of sign changes in
//! `p_0, ..., p_N` equals the number of roots below `λ`. A cyclic Jacobi
//! solver on the dense matrix cross-checks the bracketing. Nothing here
//! shares code with the Sturm-count solver.

use spectra_core::StringSystem;

pub fn normalized_matrix(sys: &StringSystem) -> Vec<Vec<f64>> {
    let m = sys.masses();
    let n = m.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = sys.diag()[i] / m[i];
    }
    for (i, e) in sys.offdiag().iter().enumerate() {
        let v = e / (m[i] * m[i + 1]).sqrt();
        a[i][i + 1] = v;
        a[i + 1][i] = v;
    }
    a
}

pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                if apq.abs() <= 1e-300 + f64::EPSILON * 1e-3 * (a[p][p] * a[q][q]).abs().sqrt() {
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (head, tail) = a.split_at_mut(q);
                for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (apk, aqk) = (*x, *y);
                    *x = c * apk - s * aqk;
                    *y = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eigs.sort_by(f64::total_cmp);
    eigs
}

pub struct Minors {
    a: Vec<f64>,
    b2: Vec<f64>,
}

impl Minors {
    pub fn from_system(sys: &StringSystem) -> Self {
        let m = sys.masses();
        let a = sys.diag().iter().zip(m).map(|(d, w)| d / w).collect();
        let b2 = sys
            .offdiag()
            .iter()
            .enumerate()
            .map(|(i, e)| e * e / (m[i] * m[i + 1]))
            .collect();
        Minors { a, b2 }
    }

    /// Sign changes in `p_0(λ), ..., p_N(λ)`; a vanishing `p_k` takes the
    /// sign opposite to `p_{k-1}`.
    pub fn roots_below(&self, lambda: f64) -> usize {
        let mut prev = 1.0;
        let mut cur = self.a[0] - lambda;
        let mut changes = 0;
        let mut last_sign = 1.0;
        for k in 0..self.a.len() {
            if k > 0 {
                let next = (self.a[k] - lambda) * cur - self.b2[k - 1] * prev;
                prev = cur;
                cur = next;
            }
            let sign = if cur == 0.0 { -last_sign } else { cur.signum() };
            if sign != last_sign {
                changes += 1;
            }
            last_sign = sign;
            let s = cur.abs().max(prev.abs());
            if s > 1e100 || (s < 1e-100 && s > 0.0) {
                prev /= s;
                cur /= s;
            }
        }
        changes
    }

    fn bounds(&self) -> (f64, f64) {
        let n = self.a.len();
        let mut hi: f64 = 0.0;
        let mut lo: f64 = 0.0;
        for i in 0..n {
            let r = if i > 0 { self.b2[i - 1].sqrt() } else { 0.0 }
                + if i + 1 < n { self.b2[i].sqrt() } else { 0.0 };
            hi = hi.max(self.a[i] + r);
            lo = lo.min(self.a[i] - r);
        }
        (lo - 1.0, hi * 1.01 + 1.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let (lo0, hi0) = self.bounds();
        (0..self.a.len())
            .map(|n| {
                let (mut lo, mut hi) = (lo0, hi0);
                loop {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break mid;
                    }
                    if self.roots_below(mid) > n {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
            })
            .collect()
    }
}

pub fn dense_eigenvalues(sys: &StringSystem) -> Vec<f64> {
    Minors::from_system(sys).eigenvalues()
}

/// Strict and inclusive counts read off a sorted eigenvalue list.
pub fn counts(eigs: &[f64], lambda: f64) -> (usize, usize) {
    (
        eigs.iter().filter(|&&l| l < lambda).count(),
        eigs.iter().filter(|&&l| l <= lambda).count(),
    )
}
