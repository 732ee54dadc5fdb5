//! Zeros of sampled functions, their simple/double classification, and
//! the nodal profile (zero count and sign near `t = 0`) that decides class
//! membership of eigenfunctions and branch points.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{derivative, e_norm, DerivOrder, SampledFn};
use crate::scalar::Real;

/// Functions with `e_norm` at or below this value are treated as zero.
pub const TRIVIAL_TOL: f64 = 1e-12;
/// Relative size of a sample, against `max|u|`, below which a node with
/// same-sign neighbours is a touch-zero candidate.
pub const TOUCH_TOL: f64 = 1e-6;
/// Relative size of `(u', u'', u''')`, against `e_norm(u)`, below which a
/// zero is double.
pub const DOUBLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_real<T: Real>(self) -> T {
        T::lit(self.as_f64())
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn of<T: Real>(x: T) -> Self {
        if x < T::zero() {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "pos" | "1" | "+1" => Ok(Sign::Plus),
            "-" | "minus" | "neg" | "-1" => Ok(Sign::Minus),
            _ => Err(Error::InvalidInput(format!("sign must be + or -, got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroKind {
    GeneralizedSimple,
    GeneralizedDouble,
}

/// How a zero was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroSource {
    /// Sign change between consecutive samples.
    Crossing,
    /// Small local minimum of `|u|` without a sign change.
    Touch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroCandidate<T> {
    pub t: T,
    pub source: ZeroSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroRecord<T> {
    #[serde(rename = "t")]
    pub t_star: T,
    pub kind: ZeroKind,
    /// Estimates of `(u', u'', u''')` at `t_star`.
    pub derivs: [T; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalProfile<T> {
    pub count: usize,
    pub sigma: Sign,
    pub zeros: Vec<ZeroRecord<T>>,
    pub is_nodal: bool,
    /// Touch zeros that classified as simple; these cannot occur on
    /// nontrivial solutions and are reported rather than counted.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<T>,
}

impl<T: Real> NodalProfile<T> {
    pub fn has_double_zero(&self) -> bool {
        self.zeros.iter().any(|z| z.kind == ZeroKind::GeneralizedDouble)
    }

    /// Whether the profile places the function in the class with `k - 1`
    /// simple zeros and sign `sigma` near `t = 0`.
    pub fn in_class(&self, k: usize, sigma: Sign) -> bool {
        self.is_nodal && self.count + 1 == k && self.sigma == sigma
    }
}

fn ensure_nontrivial<T: Real>(u: &SampledFn<T>) -> Result<()> {
    if e_norm(u).value <= T::lit(TRIVIAL_TOL) {
        return Err(Error::TrivialFunction);
    }
    Ok(())
}

/// Root in `[0, 1]` of the quadratic through `(-1, a)`, `(0, b)`, `(1, c)`,
/// given that `b` and `c` have opposite signs.
fn quadratic_root<T: Real>(a: T, b: T, c: T) -> T {
    let half = T::lit(0.5);
    let qa = half * (a + c) - b;
    let qb = half * (c - a);
    let linear = b / (b - c);
    let disc = qb * qb - T::lit(4.0) * qa * b;
    if qa.abs() <= T::epsilon() * (qb.abs() + b.abs() + c.abs()) || disc < T::zero() {
        return linear;
    }
    let q = -half * (qb + qb.signum() * disc.sqrt());
    let candidates = [q / qa, if q != T::zero() { b / q } else { linear }];
    candidates
        .into_iter()
        .find(|s| s.is_finite() && *s >= T::zero() && *s <= T::one())
        .unwrap_or(linear)
}

/// Interior zeros of `u`: one per sign change of consecutive interior
/// samples (refined by local quadratic interpolation, or placed at the
/// midpoint of a run of exactly-zero samples) plus touch candidates.
/// Endpoint zeros are not reported.
pub fn find_zeros<T: Real>(u: &SampledFn<T>) -> Result<Vec<ZeroCandidate<T>>> {
    ensure_nontrivial(u)?;
    let v = u.values();
    let grid = u.grid();
    let h = grid.h();
    let last = grid.last();
    let mut out = Vec::new();

    let mut prev: Option<usize> = None;
    for i in 1..last {
        if v[i] == T::zero() {
            continue;
        }
        if let Some(p) = prev {
            if (v[p] > T::zero()) != (v[i] > T::zero()) {
                let t = if i == p + 1 {
                    let s = quadratic_root(v[p - 1], v[p], v[i]);
                    grid.node(p) + s * h
                } else {
                    T::lit(0.5) * (grid.node(p + 1) + grid.node(i - 1))
                };
                out.push(ZeroCandidate {
                    t,
                    source: ZeroSource::Crossing,
                });
            }
        }
        prev = Some(i);
    }

    let tol = T::lit(TOUCH_TOL) * u.max_abs();
    for i in 2..last.saturating_sub(1) {
        let (l, c, r) = (v[i - 1], v[i], v[i + 1]);
        let same_side = (l > T::zero() && r > T::zero()) || (l < T::zero() && r < T::zero());
        let no_crossing = c == T::zero() || (c > T::zero()) == (l > T::zero());
        if same_side && no_crossing && c.abs() < tol && c.abs() <= l.abs() && c.abs() <= r.abs() {
            out.push(ZeroCandidate {
                t: grid.node(i),
                source: ZeroSource::Touch,
            });
        }
    }
    out.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    Ok(out)
}

/// Number of interior sign changes of the raw samples.
pub fn sign_changes<T: Real>(u: &SampledFn<T>) -> usize {
    let v = u.values();
    let nonzero: Vec<bool> = v[1..v.len() - 1]
        .iter()
        .filter(|x| **x != T::zero())
        .map(|x| *x > T::zero())
        .collect();
    nonzero.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Classifies a zero by the size of `(u', u'', u''')` there, relative to
/// `e_norm(u)`.
pub fn classify_zero<T: Real>(u: &SampledFn<T>, t_star: T) -> Result<ZeroRecord<T>> {
    if !(t_star > T::zero() && t_star < T::one()) {
        return Err(Error::OutOfDomain(t_star.to_f64_lossy()));
    }
    let derivs = [DerivOrder::First, DerivOrder::Second, DerivOrder::Third]
        .map(|k| derivative(u, k).interpolate(t_star));
    Ok(classify_with(derivs, t_star, e_norm(u).value))
}

fn classify_with<T: Real>(derivs: [T; 3], t_star: T, scale: T) -> ZeroRecord<T> {
    let size = derivs.iter().fold(T::zero(), |m, d| m.max(d.abs()));
    let kind = if size < T::lit(DOUBLE_TOL) * scale {
        ZeroKind::GeneralizedDouble
    } else {
        ZeroKind::GeneralizedSimple
    };
    ZeroRecord { t_star, kind, derivs }
}

/// Zero count, classification and sign near `t = 0`.
pub fn nodal_profile<T: Real>(u: &SampledFn<T>) -> Result<NodalProfile<T>> {
    let candidates = find_zeros(u)?;
    let d = [DerivOrder::First, DerivOrder::Second, DerivOrder::Third].map(|k| derivative(u, k));
    let scale = e_norm(u).value;
    let mut zeros = Vec::with_capacity(candidates.len());
    let mut anomalies = Vec::new();
    for c in candidates {
        let rec = classify_with(
            [d[0].interpolate(c.t), d[1].interpolate(c.t), d[2].interpolate(c.t)],
            c.t,
            scale,
        );
        match (c.source, rec.kind) {
            (ZeroSource::Touch, ZeroKind::GeneralizedSimple) => anomalies.push(c.t),
            _ => zeros.push(rec),
        }
    }
    let v = u.values();
    let first = v[1..v.len() - 1].iter().find(|x| **x != T::zero()).copied();
    let sigma = Sign::of(first.unwrap_or(T::one()));
    let is_nodal = zeros.iter().all(|z| z.kind == ZeroKind::GeneralizedSimple);
    Ok(NodalProfile {
        count: zeros.len(),
        sigma,
        zeros,
        is_nodal,
        anomalies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn sampled(n: usize, f: impl Fn(f64) -> f64) -> SampledFn<f64> {
        SampledFn::from_fn(Grid::new(n).unwrap(), f)
    }

    fn ts(z: &[ZeroCandidate<f64>]) -> Vec<f64> {
        z.iter().map(|c| c.t).collect()
    }

    #[test]
    fn sine_zeros() {
        let z = find_zeros(&sampled(999, |t| (2.0 * PI * t).sin())).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0].t - 0.5).abs() < 1e-6);
        let z = ts(&find_zeros(&sampled(1000, |t| (3.0 * PI * t).sin())).unwrap());
        assert_eq!(z.len(), 2);
        assert!((z[0] - 1.0 / 3.0).abs() < 1e-6 && (z[1] - 2.0 / 3.0).abs() < 1e-6, "{z:?}");
    }

    #[test]
    fn quadratic_refinement_beats_linear() {
        // zero off-node, curved function
        let z = ts(&find_zeros(&sampled(37, |t| (t - 0.4123) * (t + 0.3))).unwrap());
        assert_eq!(z.len(), 1);
        assert!((z[0] - 0.4123).abs() < 1e-12, "{z:?}");
    }

    #[test]
    fn trivial_rejected() {
        assert_eq!(find_zeros(&sampled(20, |_| 0.0)), Err(Error::TrivialFunction));
        assert_eq!(nodal_profile(&sampled(20, |_| 0.0)), Err(Error::TrivialFunction));
    }

    #[test]
    fn classify_cases() {
        let u = sampled(1999, |t| (2.0 * PI * t).sin());
        let r = classify_zero(&u, 0.5).unwrap();
        assert_eq!(r.kind, ZeroKind::GeneralizedSimple);
        assert!((r.derivs[0] + 2.0 * PI).abs() < 1e-4);

        let quartic = sampled(1999, |t| (t * (1.0 - t)).powi(2) * (t - 0.5).powi(4));
        assert_eq!(classify_zero(&quartic, 0.5).unwrap().kind, ZeroKind::GeneralizedDouble);
        let cubic = sampled(1999, |t| (t * (1.0 - t)).powi(2) * (t - 0.5).powi(3));
        let r = classify_zero(&cubic, 0.5).unwrap();
        assert_eq!(r.kind, ZeroKind::GeneralizedSimple);
        assert!((r.derivs[2] - 6.0 * 0.0625).abs() < 1e-4);

        assert_eq!(classify_zero(&u, 0.0), Err(Error::OutOfDomain(0.0)));
        assert_eq!(classify_zero(&u, 1.2), Err(Error::OutOfDomain(1.2)));
    }

    #[test]
    fn profiles() {
        let p = nodal_profile(&sampled(500, |t| (PI * t).sin())).unwrap();
        assert_eq!((p.count, p.sigma, p.is_nodal), (0, Sign::Plus, true));
        let p = nodal_profile(&sampled(500, |t| -(2.0 * PI * t).sin())).unwrap();
        assert_eq!((p.count, p.sigma), (1, Sign::Minus));
        assert!(p.in_class(2, Sign::Minus));
    }

    #[test]
    fn touch_zero_double_is_counted() {
        let u = sampled(1999, |t| (t * (1.0 - t)).powi(2) * (t - 0.5).powi(4));
        let z = find_zeros(&u).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].source, ZeroSource::Touch);
        let p = nodal_profile(&u).unwrap();
        assert_eq!(p.count, 1);
        assert!(!p.is_nodal && p.has_double_zero());
    }

    #[test]
    fn simple_touch_is_an_anomaly() {
        // |u| has a small minimum that is not a genuine zero of all derivatives
        let u = sampled(199, |t| (PI * t).sin() * ((t - 0.5).powi(2) + 1e-12));
        let p = nodal_profile(&u).unwrap();
        assert_eq!(p.count, 0);
        assert_eq!(p.anomalies.len(), 1);
    }

    #[test]
    fn exact_zero_sample_is_one_crossing() {
        // sin(2πt) on a grid containing t = 0.5 exactly
        let mut u = sampled(9, |t| (2.0 * PI * t).sin());
        u.values_mut()[5] = 0.0;
        let z = ts(&find_zeros(&u).unwrap());
        assert_eq!(z, vec![0.5]);
    }

    #[test]
    fn sign_parsing() {
        assert_eq!("+".parse::<Sign>().unwrap(), Sign::Plus);
        assert_eq!("-".parse::<Sign>().unwrap(), Sign::Minus);
        assert!("x".parse::<Sign>().is_err());
        assert_eq!(Sign::Plus.flip(), Sign::Minus);
    }

    #[test]
    fn profile_json_shape() {
        let p = nodal_profile(&sampled(99, |t| (2.0 * PI * t).sin())).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["count"], 1);
        assert_eq!(v["sigma"], "+");
        assert_eq!(v["zeros"][0]["kind"], "GeneralizedSimple");
        assert!(v["zeros"][0]["t"].is_number());
    }
}
