//! Generalized Cantor ladders.
//!
//! A ladder is given by `m` disjoint steps `I_k = [a_k, b_k]` covering the
//! ends of `[0, 1]` and positive weights `rho_k` summing to one. The affine
//! maps `S_k(t) = a_k + (b_k - a_k) t` and the weights define the contraction
//! `S` whose fixed point is the ladder function `C`. Only ladders where every
//! product `rho_k (b_k - a_k)` equals one common value `tau` are accepted.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Result, SpectraError};

const FLOAT_TOL: f64 = 1e-12;

/// A ladder parameter: an exact rational or a binary float.
#[derive(Debug, Clone, PartialEq)]
pub enum Number {
    Exact(BigRational),
    Float(f64),
}

impl Number {
    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => rational_to_f64(r),
            Number::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }

    pub fn ratio(num: i64, den: i64) -> Number {
        Number::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn from_json(v: &Value) -> Result<Number> {
        match v {
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Number::Exact(BigRational::from_integer(BigInt::from(i))))
                } else if let Some(x) = n.as_f64() {
                    Ok(Number::Float(x))
                } else {
                    Err(SpectraError::NonNumeric(n.to_string()))
                }
            }
            Value::String(s) => s.parse(),
            other => Err(SpectraError::NonNumeric(other.to_string())),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Number::Exact(_) => Value::String(self.to_string()),
            Number::Float(x) => serde_json::json!(x),
        }
    }
}

impl FromStr for Number {
    type Err = SpectraError;

    /// Accepts `p/q`, integers and plain decimals (all exact), falling back
    /// to a float parse for anything else numeric such as `1e-3`.
    fn from_str(s: &str) -> Result<Number> {
        let s = s.trim();
        let bad = || SpectraError::NonNumeric(s.to_string());
        if let Some((p, q)) = s.split_once('/') {
            let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            return Ok(Number::Exact(BigRational::new(p, q)));
        }
        if let Some(r) = parse_decimal(s) {
            return Ok(Number::Exact(r));
        }
        match s.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Number::Float(x)),
            _ => Err(bad()),
        }
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num = BigInt::from_str(&digits).ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) if r.denom().is_one() => write!(f, "{}", r.numer()),
            Number::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Number::Float(x) => write!(f, "{x}"),
        }
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

/// Arithmetic used for ladder geometry: `f64`, or `BigRational` when every
/// input is exact.
pub trait Scalar: Clone + PartialOrd + Num + fmt::Debug + Send + Sync {
    /// `None` when the number cannot be represented faithfully.
    fn from_number(n: &Number) -> Option<Self>;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_number(n: &Number) -> Option<Self> {
        Some(n.to_f64())
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_number(n: &Number) -> Option<Self> {
        match n {
            Number::Exact(r) => Some(r.clone()),
            Number::Float(_) => None,
        }
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
}

/// Unvalidated ladder as read from a JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawLadder {
    pub intervals: Vec<Vec<Value>>,
    pub weights: Vec<Value>,
}

impl RawLadder {
    pub fn from_json_str(s: &str) -> Result<RawLadder> {
        serde_json::from_str(s).map_err(|e| SpectraError::NonNumeric(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<RawLadder> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpectraError::NonNumeric(format!("{}: {e}", path.display())))?;
        RawLadder::from_json_str(&text)
    }
}

/// One affine piece of the ladder in a chosen arithmetic.
#[derive(Debug, Clone)]
pub struct Step<T> {
    pub a: T,
    pub b: T,
    pub weight: T,
    /// Sum of the weights of the steps to the left.
    pub offset: T,
}

impl<T: Scalar> Step<T> {
    pub fn len(&self) -> T {
        self.b.clone() - self.a.clone()
    }

    /// `S_k(t) = a_k + (b_k - a_k) t`.
    pub fn map(&self, t: &T) -> T {
        self.a.clone() + self.len() * t.clone()
    }

    pub fn cumulative(&self) -> T {
        self.offset.clone() + self.weight.clone()
    }
}

/// A validated generalized Cantor ladder with its derived constants.
#[derive(Debug, Clone)]
pub struct LadderSpec {
    intervals: Vec<(Number, Number)>,
    weights: Vec<Number>,
    exact: bool,
    tau: f64,
    tau_exact: Option<BigRational>,
    nu: f64,
    dim: f64,
}

/// Parse and validate a raw ladder description.
pub fn validate_ladder(raw: &RawLadder) -> Result<LadderSpec> {
    let intervals = raw
        .intervals
        .iter()
        .map(|pair| match pair.as_slice() {
            [a, b] => Ok((Number::from_json(a)?, Number::from_json(b)?)),
            _ => Err(SpectraError::Geometry(format!(
                "interval must have two endpoints, got {}",
                pair.len()
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    let weights = raw
        .weights
        .iter()
        .map(Number::from_json)
        .collect::<Result<Vec<_>>>()?;
    LadderSpec::new(intervals, weights)
}

/// Even ladder: `m` steps of equal length separated by equal gaps, all
/// weights `1/m`.
pub fn even_ladder(m: usize, step_length: &BigRational) -> Result<LadderSpec> {
    if m < 2 {
        return Err(SpectraError::Geometry(format!(
            "need at least 2 steps, got {m}"
        )));
    }
    let mm = BigRational::from_integer(BigInt::from(m));
    if !step_length.is_positive() || step_length.clone() * mm.clone() >= BigRational::one() {
        return Err(SpectraError::Geometry(format!(
            "step length {step_length} must lie in (0, 1/{m})"
        )));
    }
    let gap = (BigRational::one() - step_length.clone() * mm.clone())
        / BigRational::from_integer(BigInt::from(m - 1));
    let mut intervals = Vec::with_capacity(m);
    let mut a = BigRational::zero();
    for k in 0..m {
        let b = if k + 1 == m {
            BigRational::one()
        } else {
            a.clone() + step_length.clone()
        };
        intervals.push((Number::Exact(a.clone()), Number::Exact(b.clone())));
        a = b + gap.clone();
    }
    let weights = vec![Number::Exact(BigRational::one() / mm); m];
    LadderSpec::new(intervals, weights)
}

impl LadderSpec {
    pub fn new(intervals: Vec<(Number, Number)>, weights: Vec<Number>) -> Result<LadderSpec> {
        let m = intervals.len();
        if m < 2 {
            return Err(SpectraError::Geometry(format!(
                "need at least 2 steps, got {m}"
            )));
        }
        if weights.len() != m {
            return Err(SpectraError::Geometry(format!(
                "{m} intervals but {} weights",
                weights.len()
            )));
        }
        let exact = weights.iter().all(Number::is_exact)
            && intervals.iter().all(|(a, b)| a.is_exact() && b.is_exact());
        let tau_exact = if exact {
            Some(check::<BigRational>(&intervals, &weights, |x, y| x == y)?)
        } else {
            check::<f64>(&intervals, &weights, |x, y| {
                (x - y).abs() <= FLOAT_TOL * x.abs().max(y.abs())
            })?;
            None
        };
        let tau = match &tau_exact {
            Some(t) => rational_to_f64(t),
            None => {
                let taus: Vec<f64> = intervals
                    .iter()
                    .zip(&weights)
                    .map(|((a, b), w)| w.to_f64() * (b.to_f64() - a.to_f64()))
                    .collect();
                taus.iter().sum::<f64>() / taus.len() as f64
            }
        };
        let nu = -tau.ln();
        let dim = (m as f64).ln() / nu;
        Ok(LadderSpec {
            intervals,
            weights,
            exact,
            tau,
            tau_exact,
            nu,
            dim,
        })
    }

    /// Float-mode constructor, mostly for generated ladders.
    pub fn from_floats(intervals: &[(f64, f64)], weights: &[f64]) -> Result<LadderSpec> {
        LadderSpec::new(
            intervals
                .iter()
                .map(|&(a, b)| (Number::Float(a), Number::Float(b)))
                .collect(),
            weights.iter().map(|&w| Number::Float(w)).collect(),
        )
    }

    pub fn cantor() -> LadderSpec {
        even_ladder(2, &BigRational::new(BigInt::from(1), BigInt::from(3)))
            .expect("classical Cantor ladder is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<LadderSpec> {
        validate_ladder(&RawLadder::from_path(path)?)
    }

    pub fn m(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn intervals(&self) -> &[(Number, Number)] {
        &self.intervals
    }

    pub fn weights(&self) -> &[Number] {
        &self.weights
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tau_exact(&self) -> Option<&BigRational> {
        self.tau_exact.as_ref()
    }

    /// Period of the oscillating factor, `-ln tau`.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Spectral exponent `ln m / nu`.
    pub fn dim(&self) -> f64 {
        self.dim
    }

    pub fn intervals_f64(&self) -> Vec<(f64, f64)> {
        self.intervals
            .iter()
            .map(|(a, b)| (a.to_f64(), b.to_f64()))
            .collect()
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(Number::to_f64).collect()
    }

    /// Lengths of the `m - 1` gaps between consecutive steps.
    pub fn gaps_f64(&self) -> Vec<f64> {
        let iv = self.intervals_f64();
        iv.windows(2).map(|w| w[1].0 - w[0].1).collect()
    }

    /// The steps in arithmetic `T`; rational arithmetic needs exact inputs.
    pub fn steps<T: Scalar>(&self) -> Result<Vec<Step<T>>> {
        let conv = |n: &Number| {
            T::from_number(n).ok_or_else(|| {
                SpectraError::Domain("exact arithmetic requested on a float ladder".into())
            })
        };
        let mut offset = T::zero();
        let mut steps = Vec::with_capacity(self.m());
        for ((a, b), w) in self.intervals.iter().zip(&self.weights) {
            let weight = conv(w)?;
            steps.push(Step {
                a: conv(a)?,
                b: conv(b)?,
                weight: weight.clone(),
                offset: offset.clone(),
            });
            offset = offset + weight;
        }
        Ok(steps)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "intervals": self
                .intervals
                .iter()
                .map(|(a, b)| Value::Array(vec![a.to_json(), b.to_json()]))
                .collect::<Vec<_>>(),
            "weights": self.weights.iter().map(Number::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Runs the weight, geometry and common-ratio checks in arithmetic `T`,
/// returning the common ratio.
fn check<T: Scalar + fmt::Display>(
    intervals: &[(Number, Number)],
    weights: &[Number],
    same: impl Fn(&T, &T) -> bool,
) -> Result<T> {
    let conv = |n: &Number| T::from_number(n).expect("caller picked a faithful arithmetic");
    let iv: Vec<(T, T)> = intervals.iter().map(|(a, b)| (conv(a), conv(b))).collect();
    let w: Vec<T> = weights.iter().map(conv).collect();

    if let Some(bad) = w.iter().find(|x| **x <= T::zero()) {
        return Err(SpectraError::WeightSum(format!(
            "weight {bad} is not positive"
        )));
    }
    let sum = w.iter().cloned().fold(T::zero(), |acc, x| acc + x);
    if !same(&sum, &T::one()) {
        return Err(SpectraError::WeightSum(sum.to_string()));
    }

    if !iv[0].0.is_zero() {
        return Err(SpectraError::Geometry(format!(
            "a_1 = {} must be 0",
            iv[0].0
        )));
    }
    if !iv[iv.len() - 1].1.is_one() {
        return Err(SpectraError::Geometry(format!(
            "b_m = {} must be 1",
            iv[iv.len() - 1].1
        )));
    }
    for (k, (a, b)) in iv.iter().enumerate() {
        if a >= b {
            return Err(SpectraError::Geometry(format!(
                "step {} is empty: [{a}, {b}]",
                k + 1
            )));
        }
    }
    for (k, pair) in iv.windows(2).enumerate() {
        if pair[0].1 >= pair[1].0 {
            return Err(SpectraError::Geometry(format!(
                "gap after step {} is empty: b = {}, next a = {}",
                k + 1,
                pair[0].1,
                pair[1].0
            )));
        }
    }

    let taus: Vec<T> = iv
        .iter()
        .zip(&w)
        .map(|((a, b), w)| w.clone() * (b.clone() - a.clone()))
        .collect();
    if let Some(t) = taus.iter().find(|t| !same(t, &taus[0])) {
        return Err(SpectraError::TauMismatch(format!("{} vs {}", taus[0], t)));
    }
    Ok(taus[0].clone())
}

/// Continuous piecewise-linear function on `[0, 1]` stored by its
/// breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<T> {
    points: Vec<(T, T)>,
}

impl<T: Scalar> PiecewiseLinear<T> {
    pub fn new(points: Vec<(T, T)>) -> Result<Self> {
        let ok = points.len() >= 2
            && points[0].0.is_zero()
            && points[points.len() - 1].0.is_one()
            && points.windows(2).all(|w| w[0].0 < w[1].0);
        if !ok {
            return Err(SpectraError::Domain(
                "breakpoints must ascend strictly from x = 0 to x = 1".into(),
            ));
        }
        Ok(PiecewiseLinear { points })
    }

    pub fn identity() -> Self {
        PiecewiseLinear {
            points: vec![(T::zero(), T::zero()), (T::one(), T::one())],
        }
    }

    pub fn breakpoints(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn eval(&self, t: &T) -> T {
        let pts = &self.points;
        let j = pts.partition_point(|(x, _)| x <= t).clamp(1, pts.len() - 1);
        let (x0, y0) = &pts[j - 1];
        let (x1, y1) = &pts[j];
        y0.clone()
            + (y1.clone() - y0.clone()) * (t.clone() - x0.clone()) / (x1.clone() - x0.clone())
    }

    /// Sup-norm distance; exact because the difference is linear between
    /// the merged breakpoints.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.points
            .iter()
            .chain(&other.points)
            .map(|(x, _)| (self.eval(x).to_f64() - other.eval(x).to_f64()).abs())
            .fold(0.0, f64::max)
    }
}

/// One application of the ladder contraction to `f`.
///
/// `f` must satisfy `f(0) = 0` and `f(1) = 1`, which keeps the image
/// continuous: on `I_k` it is `offset_k + rho_k f(S_k^{-1} x)`, and on the
/// gap after `I_k` it is the constant `offset_k + rho_k`.
pub fn apply_s<T: Scalar>(f: &PiecewiseLinear<T>, spec: &LadderSpec) -> Result<PiecewiseLinear<T>> {
    let pts = f.breakpoints();
    if !pts[0].1.is_zero() || !pts[pts.len() - 1].1.is_one() {
        return Err(SpectraError::Domain(
            "apply_s needs f(0) = 0 and f(1) = 1".into(),
        ));
    }
    let steps = spec.steps::<T>()?;
    let mut out = Vec::with_capacity(pts.len() * steps.len());
    for step in &steps {
        out.extend(pts.iter().map(|(x, y)| {
            (
                step.map(x),
                step.offset.clone() + step.weight.clone() * y.clone(),
            )
        }));
    }
    Ok(PiecewiseLinear { points: out })
}

/// Value at `t` of the `g`-th iterate of the contraction applied to the
/// identity, evaluated by descending through the cylinder containing `t`.
pub fn evaluate_c<T: Scalar>(spec: &LadderSpec, t: T, g: usize) -> Result<T> {
    if !(t >= T::zero() && t <= T::one()) {
        return Err(SpectraError::Domain(format!("t = {t:?} outside [0, 1]")));
    }
    let steps = spec.steps::<T>()?;
    let mut t = t;
    let mut value = T::zero();
    let mut scale = T::one();
    for _ in 0..g {
        // t lies in some step or in the gap right after it.
        let k = steps.partition_point(|s| s.a <= t).max(1) - 1;
        let step = &steps[k];
        if t > step.b {
            return Ok(value + scale * step.cumulative());
        }
        value = value + scale.clone() * step.offset.clone();
        scale = scale * step.weight.clone();
        t = (t - step.a.clone()) / step.len();
    }
    Ok(value + scale * t)
}

/// Distance bound between the `g`-th iterate and the limit `C`, from the
/// contraction factor `max rho_k`.
pub fn c_error_bound(spec: &LadderSpec, g: usize) -> Result<f64> {
    let id = PiecewiseLinear::<f64>::identity();
    let first = apply_s(&id, spec)?;
    let q = spec.weights_f64().into_iter().fold(0.0, f64::max);
    Ok(q.powi(g as i32) / (1.0 - q) * id.sup_distance(&first))
}
