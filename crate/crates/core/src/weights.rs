//! Weight families: radial weights h(r) on [0, inf) inducing the measure
//! r^{N-1} h(r) dr, and line weights w(s) on R. Provides evaluation, mass
//! (with analytic divergence classification for power-type tails) and medians.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::quad::{self, Bound, QuadError, QuadratureSpec};

/// Surface measure of the unit sphere in R^N.
pub fn surface(n: u32) -> f64 {
    let nf = n as f64;
    2.0 * std::f64::consts::PI.powf(nf / 2.0) / gamma(nf / 2.0)
}

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("weight argument out of domain: {0}")]
    DomainError(f64),
    #[error("weight is singular at r = 0 (negative origin exponent)")]
    SingularAtZero,
    #[error("mass is infinite")]
    MassInfinite,
    #[error("numerical integral exceeded the overflow cap without an analytic divergence proof")]
    Inconclusive,
    #[error("median {median} violates the analytic bracket [{lo}, {hi}]")]
    BracketViolation { median: f64, lo: f64, hi: f64 },
    #[error("invalid weight family: {0}")]
    InvalidFamily(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Variant selector for the linearized-flow weight triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarenblattVariant {
    W1,
    W2,
    W2Eps { eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum RadialWeightKind {
    /// h(r) = r^gamma (1 + r^beta)^alpha, beta > 0.
    PowerType { gamma: f64, beta: f64, alpha: f64 },
    /// h(r) = exp(-rate * r), rate > 0.
    Exponential { rate: f64 },
    /// Weights arising from linearizing the rescaled fast-diffusion flow
    /// around the stationary algebraic profile; see the fastdiff module.
    BarenblattLinearized {
        m: f64,
        p: f64,
        variant: BarenblattVariant,
    },
    /// Piecewise-linear interpolation of (r, h) nodes, zero outside the range.
    Tabulated { nodes: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialWeightFamily {
    #[serde(flatten)]
    pub kind: RadialWeightKind,
    pub dimension: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MassVerdict {
    Finite(f64),
    Infinite,
}

impl MassVerdict {
    pub fn finite(&self) -> Option<f64> {
        match self {
            MassVerdict::Finite(v) => Some(*v),
            MassVerdict::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassAndMedian {
    pub mass: f64,
    pub median: f64,
    /// Achieved absolute error of the half-mass equation at the median.
    pub tolerance: f64,
}

/// Asymptotic tail behaviour of a weight, used for analytic divergence proofs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Identically zero beyond some radius.
    Zero,
    /// ~ c * r^e.
    Power(f64),
    /// ~ c * exp(-rate * r), rate > 0.
    ExpDecay(f64),
    /// ~ exp(-r^2/2) scale decay.
    GaussianDecay,
}

impl Tail {
    /// Is r^{shift} * w(r) integrable near infinity?
    pub fn integrable_with_power(self, shift: f64) -> bool {
        match self {
            Tail::Zero | Tail::ExpDecay(_) | Tail::GaussianDecay => true,
            Tail::Power(e) => e + shift < -1.0,
        }
    }
}

fn barenblatt_exponents(m: f64, p: f64) -> (f64, f64) {
    // (kappa, sigma)
    let sigma = m + (p - 2.0) / (p - 1.0);
    let kappa = (1.0 - m * (p - 1.0)) / (p * m);
    (kappa, sigma)
}

impl RadialWeightFamily {
    pub fn new(kind: RadialWeightKind, dimension: u32) -> Result<Self, WeightError> {
        let fam = Self { kind, dimension };
        fam.validate()?;
        Ok(fam)
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        if self.dimension < 1 {
            return Err(WeightError::InvalidFamily("dimension must be >= 1".into()));
        }
        match &self.kind {
            RadialWeightKind::PowerType { beta, .. } => {
                if !(*beta > 0.0) {
                    return Err(WeightError::InvalidFamily("beta must be > 0".into()));
                }
            }
            RadialWeightKind::Exponential { rate } => {
                if !(*rate > 0.0) {
                    return Err(WeightError::InvalidFamily("rate must be > 0".into()));
                }
            }
            RadialWeightKind::BarenblattLinearized { m, p, variant } => {
                if !(*p > 1.0 && *m > 0.0) {
                    return Err(WeightError::InvalidFamily("need p > 1 and m > 0".into()));
                }
                let (kappa, sigma) = barenblatt_exponents(*m, *p);
                if !(kappa > 0.0) || sigma == 1.0 {
                    return Err(WeightError::InvalidFamily(
                        "parameters outside the fast-diffusion window".into(),
                    ));
                }
                if let BarenblattVariant::W2Eps { eps } = variant {
                    if !(*eps > 0.0 && *eps < 1.0) {
                        return Err(WeightError::InvalidFamily("eps must be in (0,1)".into()));
                    }
                }
            }
            RadialWeightKind::Tabulated { nodes } => {
                if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(WeightError::InvalidFamily(
                        "tabulated nodes must be strictly increasing in r".into(),
                    ));
                }
                if nodes.iter().any(|&(r, h)| r < 0.0 || h < 0.0 || !h.is_finite()) {
                    return Err(WeightError::InvalidFamily(
                        "tabulated nodes must have r >= 0 and finite h >= 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// h(r). Total on r > 0; at r = 0 a negative origin exponent is reported
    /// as SingularAtZero rather than returning an overflowed sample.
    pub fn evaluate(&self, r: f64) -> Result<f64, WeightError> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(WeightError::DomainError(r));
        }
        if r == 0.0 && self.origin_exponent() < 0.0 {
            return Err(WeightError::SingularAtZero);
        }
        Ok(self.evaluate_unchecked(r))
    }

    /// h(r) for r > 0 without the domain checks (may over/underflow near 0).
    pub fn evaluate_unchecked(&self, r: f64) -> f64 {
        match &self.kind {
            RadialWeightKind::PowerType { gamma, beta, alpha } => {
                r.powf(*gamma) * (1.0 + r.powf(*beta)).powf(*alpha)
            }
            RadialWeightKind::Exponential { rate } => (-rate * r).exp(),
            RadialWeightKind::BarenblattLinearized { m, p, variant } => {
                let (kappa, sigma) = barenblatt_exponents(*m, *p);
                let core = 1.0 + kappa * r.powf(p / (p - 1.0));
                match variant {
                    BarenblattVariant::W1 => core.powf((2.0 - sigma) / (sigma - 1.0)) / m,
                    BarenblattVariant::W2 => {
                        r.powf((p - 2.0) / (p - 1.0)) * core.powf(1.0 / (sigma - 1.0))
                    }
                    BarenblattVariant::W2Eps { eps } => {
                        core.powf(1.0 / (sigma - 1.0))
                            * (eps + r.powf(1.0 / (p - 1.0))).powf(-(2.0 - p))
                    }
                }
            }
            RadialWeightKind::Tabulated { nodes } => {
                let n = nodes.len();
                if n == 0 || r < nodes[0].0 || r > nodes[n - 1].0 {
                    return 0.0;
                }
                let idx = nodes.partition_point(|&(x, _)| x <= r);
                if idx == n {
                    return nodes[n - 1].1;
                }
                let (r0, h0) = nodes[idx - 1];
                let (r1, h1) = nodes[idx];
                h0 + (h1 - h0) * (r - r0) / (r1 - r0)
            }
        }
    }

    /// Exponent e with h(r) ~ c r^e as r -> 0+.
    pub fn origin_exponent(&self) -> f64 {
        match &self.kind {
            RadialWeightKind::PowerType { gamma, .. } => *gamma,
            RadialWeightKind::Exponential { .. } => 0.0,
            RadialWeightKind::BarenblattLinearized { m, p, variant } => match variant {
                BarenblattVariant::W1 => 0.0,
                BarenblattVariant::W2 => (*p - 2.0) / (*p - 1.0),
                BarenblattVariant::W2Eps { .. } => {
                    let _ = m;
                    0.0
                }
            },
            RadialWeightKind::Tabulated { .. } => 0.0,
        }
    }

    /// Tail behaviour of h as r -> inf.
    pub fn tail(&self) -> Tail {
        match &self.kind {
            RadialWeightKind::PowerType { gamma, beta, alpha } => {
                Tail::Power(gamma + alpha * beta)
            }
            RadialWeightKind::Exponential { rate } => Tail::ExpDecay(*rate),
            RadialWeightKind::BarenblattLinearized { m, p, variant } => {
                let (_, sigma) = barenblatt_exponents(*m, *p);
                let pp = p / (p - 1.0);
                let e = match variant {
                    BarenblattVariant::W1 => pp * (2.0 - sigma) / (sigma - 1.0),
                    BarenblattVariant::W2 => (p - 2.0) / (p - 1.0) + pp / (sigma - 1.0),
                    BarenblattVariant::W2Eps { .. } => {
                        pp / (sigma - 1.0) - (2.0 - p) / (p - 1.0)
                    }
                };
                Tail::Power(e)
            }
            RadialWeightKind::Tabulated { .. } => Tail::Zero,
        }
    }

    /// Points where the radial density r^{N-1} h(r) may blow up.
    pub fn singular_points(&self) -> Vec<f64> {
        if self.origin_exponent() + (self.dimension as f64 - 1.0) < 0.0 {
            vec![0.0]
        } else {
            vec![]
        }
    }

    /// Radial density r^{N-1} h(r) (no sphere-surface factor).
    pub fn radial_density(&self, r: f64) -> f64 {
        if r <= 0.0 {
            // The density extends by its limit at 0 when integrable.
            return if self.origin_exponent() + (self.dimension as f64 - 1.0) > 0.0 {
                0.0
            } else if self.origin_exponent() + (self.dimension as f64 - 1.0) == 0.0 {
                self.evaluate_unchecked(1e-300) * 1e-300f64.powi(self.dimension as i32 - 1)
            } else {
                f64::INFINITY
            };
        }
        r.powi(self.dimension as i32 - 1) * self.evaluate_unchecked(r)
    }

    /// Is the radial measure finite at the origin and at infinity? Analytic
    /// for all parametric kinds; Tabulated is finite by compact support.
    fn mass_classification(&self) -> (bool, bool) {
        let n = self.dimension as f64;
        let origin_ok = n + self.origin_exponent() > 0.0;
        let tail_ok = self.tail().integrable_with_power(n - 1.0);
        (origin_ok, tail_ok)
    }

    /// H1 = |S^{N-1}| * int_0^inf r^{N-1} h(r) dr, or an Infinite verdict from
    /// the exponent analysis.
    pub fn mass(&self) -> Result<MassVerdict, WeightError> {
        self.validate()?;
        let (origin_ok, tail_ok) = self.mass_classification();
        if !origin_ok || !tail_ok {
            return Ok(MassVerdict::Infinite);
        }
        let spec = QuadratureSpec::default();
        let res = quad::integrate(
            |r| self.radial_density(r),
            Bound::Finite(0.0),
            Bound::PosInf,
            &self.singular_points(),
            &spec,
        )?;
        if !res.value.is_finite() || res.value > 1e300 {
            return Err(WeightError::Inconclusive);
        }
        Ok(MassVerdict::Finite(surface(self.dimension) * res.value))
    }

    /// Cumulative radial measure |S^{N-1}| * int_0^x r^{N-1} h dr.
    pub fn cdf(&self, x: f64, spec: &QuadratureSpec) -> Result<f64, WeightError> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        let res = quad::integrate(
            |r| self.radial_density(r),
            Bound::Finite(0.0),
            Bound::Finite(x),
            &self.singular_points(),
            spec,
        )?;
        Ok(surface(self.dimension) * res.value)
    }

    /// Median of the radial measure: infimum of the set where the cumulative
    /// measure reaches half the mass. For PowerType with N+gamma > 0 and
    /// N+gamma+alpha*beta < 0 the analytic two-sided bracket is asserted.
    pub fn median(&self) -> Result<MassAndMedian, WeightError> {
        if matches!(self.mass()?, MassVerdict::Infinite) {
            return Err(WeightError::MassInfinite);
        }
        // The CDF and the half-mass target must come from the same tolerance,
        // otherwise the mass error dominates the median error budget.
        let spec = QuadratureSpec {
            rel_tol: 1e-12,
            ..QuadratureSpec::default()
        };
        let mass = surface(self.dimension)
            * quad::integrate(
                |r| self.radial_density(r),
                Bound::Finite(0.0),
                Bound::PosInf,
                &self.singular_points(),
                &spec,
            )?
            .value;
        if !(mass > 0.0) {
            return Err(WeightError::InvalidFamily("zero mass".into()));
        }
        let half = 0.5 * mass;
        let tol = 1e-10 * mass;

        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        while self.cdf(hi, &spec)? < half {
            hi *= 2.0;
            if hi > 1e200 {
                return Err(WeightError::Inconclusive);
            }
        }
        let mut mid = 0.5 * (lo + hi);
        let mut achieved = f64::INFINITY;
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let c = self.cdf(mid, &spec)?;
            achieved = (c - half).abs();
            if achieved <= tol {
                break;
            }
            if c < half {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.abs() {
                break;
            }
        }

        if let RadialWeightKind::PowerType { gamma, beta, alpha } = self.kind {
            let n = self.dimension as f64;
            let a = n + gamma;
            let b = n + gamma + alpha * beta;
            if a > 0.0 && b < 0.0 {
                let lo_b = (a / (2f64.powf(alpha.abs() + 1.0) * b.abs())).powf(1.0 / a);
                let hi_b = 2f64.powf((alpha.abs() + 1.0) / b.abs());
                if mid < lo_b * (1.0 - 1e-9) || mid > hi_b * (1.0 + 1e-9) {
                    return Err(WeightError::BracketViolation {
                        median: mid,
                        lo: lo_b,
                        hi: hi_b,
                    });
                }
            }
        }

        Ok(MassAndMedian {
            mass,
            median: mid,
            tolerance: achieved,
        })
    }
}

// ---------------------------------------------------------------------------
// Line weights.
// ---------------------------------------------------------------------------

/// A nonnegative weight on the whole line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum LineWeight {
    /// exp(-rate |s|).
    Exponential { rate: f64 },
    /// exp(-s^2 / 2).
    Gaussian,
    /// |s|^gamma (1 + |s|^beta)^alpha.
    SymmetricPower { gamma: f64, beta: f64, alpha: f64 },
    /// |s - center|^exponent.
    PowerAt { center: f64, exponent: f64 },
    /// s^{N-1+extra_power} h(s) for s > 0, zero for s <= 0.
    RadialDensity {
        family: RadialWeightFamily,
        extra_power: f64,
    },
    Scaled { factor: f64, inner: Box<LineWeight> },
    /// inner(-s).
    Reflected { inner: Box<LineWeight> },
}

impl LineWeight {
    pub fn half_line(family: RadialWeightFamily) -> Self {
        LineWeight::RadialDensity {
            family,
            extra_power: 0.0,
        }
    }

    pub fn scaled(factor: f64, inner: LineWeight) -> Self {
        LineWeight::Scaled {
            factor,
            inner: Box::new(inner),
        }
    }

    pub fn reflected(inner: LineWeight) -> Self {
        LineWeight::Reflected {
            inner: Box::new(inner),
        }
    }

    /// Total evaluation; may return +inf at declared singular points.
    pub fn evaluate(&self, s: f64) -> f64 {
        match self {
            LineWeight::Exponential { rate } => (-rate * s.abs()).exp(),
            LineWeight::Gaussian => (-0.5 * s * s).exp(),
            LineWeight::SymmetricPower { gamma, beta, alpha } => {
                let r = s.abs();
                r.powf(*gamma) * (1.0 + r.powf(*beta)).powf(*alpha)
            }
            LineWeight::PowerAt { center, exponent } => (s - center).abs().powf(*exponent),
            LineWeight::RadialDensity {
                family,
                extra_power,
            } => {
                if s <= 0.0 {
                    0.0
                } else {
                    s.powf(family.dimension as f64 - 1.0 + extra_power)
                        * family.evaluate_unchecked(s)
                }
            }
            LineWeight::Scaled { factor, inner } => factor * inner.evaluate(s),
            LineWeight::Reflected { inner } => inner.evaluate(-s),
        }
    }

    /// Points where the weight or its dual power may blow up or lose
    /// smoothness; used to steer quadrature panels.
    pub fn singular_points(&self) -> Vec<f64> {
        match self {
            LineWeight::Exponential { .. } | LineWeight::Gaussian => vec![0.0],
            LineWeight::SymmetricPower { .. } => vec![0.0],
            LineWeight::PowerAt { center, .. } => vec![*center],
            LineWeight::RadialDensity { .. } => vec![0.0],
            LineWeight::Scaled { inner, .. } => inner.singular_points(),
            LineWeight::Reflected { inner } => {
                inner.singular_points().iter().map(|s| -s).collect()
            }
        }
    }

    /// Tail behaviour toward +inf (positive = true) or -inf.
    pub fn tail(&self, positive: bool) -> Tail {
        match self {
            LineWeight::Exponential { rate } => Tail::ExpDecay(*rate),
            LineWeight::Gaussian => Tail::GaussianDecay,
            LineWeight::SymmetricPower { gamma, beta, alpha } => {
                Tail::Power(gamma + alpha * beta)
            }
            LineWeight::PowerAt { exponent, .. } => Tail::Power(*exponent),
            LineWeight::RadialDensity {
                family,
                extra_power,
            } => {
                if positive {
                    let shift = family.dimension as f64 - 1.0 + extra_power;
                    match family.tail() {
                        Tail::Power(e) => Tail::Power(e + shift),
                        t => t,
                    }
                } else {
                    Tail::Zero
                }
            }
            LineWeight::Scaled { inner, .. } => inner.tail(positive),
            LineWeight::Reflected { inner } => inner.tail(!positive),
        }
    }

    /// Exponent e with w(s) ~ c |s - x|^e as s -> x, when the local behaviour
    /// is a known power; None means locally bounded, positive, smooth enough.
    pub fn local_exponent(&self, x: f64) -> Option<f64> {
        match self {
            LineWeight::Exponential { .. } | LineWeight::Gaussian => None,
            LineWeight::SymmetricPower { gamma, .. } => {
                if x == 0.0 && *gamma != 0.0 {
                    Some(*gamma)
                } else {
                    None
                }
            }
            LineWeight::PowerAt { center, exponent } => {
                if x == *center {
                    Some(*exponent)
                } else {
                    None
                }
            }
            LineWeight::RadialDensity {
                family,
                extra_power,
            } => {
                if x == 0.0 {
                    Some(family.origin_exponent() + family.dimension as f64 - 1.0 + extra_power)
                } else {
                    None
                }
            }
            LineWeight::Scaled { inner, .. } => inner.local_exponent(x),
            LineWeight::Reflected { inner } => inner.local_exponent(-x),
        }
    }

    /// Is the weight identically zero on one side (support bounded there)?
    pub fn vanishes_beyond(&self, positive: bool) -> bool {
        matches!(self.tail(positive), Tail::Zero)
    }
}

/// Integral of a line weight over R, with analytic divergence detection.
pub fn line_mass(w: &LineWeight) -> Result<MassVerdict, WeightError> {
    for dir in [true, false] {
        if !w.tail(dir).integrable_with_power(0.0) {
            return Ok(MassVerdict::Infinite);
        }
    }
    let spec = QuadratureSpec::default();
    let res = quad::integrate(
        |s| w.evaluate(s),
        Bound::NegInf,
        Bound::PosInf,
        &w.singular_points(),
        &spec,
    )?;
    if !res.value.is_finite() {
        return Err(WeightError::Inconclusive);
    }
    Ok(MassVerdict::Finite(res.value))
}

/// Median of a line weight (infimum convention on flat plateaus).
pub fn line_median(w: &LineWeight) -> Result<MassAndMedian, WeightError> {
    if matches!(line_mass(w)?, MassVerdict::Infinite) {
        return Err(WeightError::MassInfinite);
    }
    let spec = QuadratureSpec {
        rel_tol: 1e-12,
        ..QuadratureSpec::default()
    };
    let sing = w.singular_points();
    let mass = quad::integrate(
        |s| w.evaluate(s),
        Bound::NegInf,
        Bound::PosInf,
        &sing,
        &spec,
    )?
    .value;
    if !(mass > 0.0) {
        return Err(WeightError::InvalidFamily("zero mass".into()));
    }
    let half = 0.5 * mass;
    let tol = 1e-10 * mass;
    let cdf = |x: f64| -> Result<f64, WeightError> {
        let res = quad::integrate(
            |s| w.evaluate(s),
            Bound::NegInf,
            Bound::Finite(x),
            &sing,
            &spec,
        )?;
        Ok(res.value)
    };

    let mut lo = -1.0f64;
    let mut hi = 1.0f64;
    while cdf(lo)? > half {
        lo *= 2.0;
        if lo < -1e200 {
            return Err(WeightError::Inconclusive);
        }
    }
    while cdf(hi)? < half {
        hi *= 2.0;
        if hi > 1e200 {
            return Err(WeightError::Inconclusive);
        }
    }
    let mut mid = 0.5 * (lo + hi);
    let mut achieved = f64::INFINITY;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let c = cdf(mid)?;
        achieved = (c - half).abs();
        if achieved <= tol {
            break;
        }
        if c < half {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * (hi.abs() + lo.abs() + 1.0) {
            break;
        }
    }
    Ok(MassAndMedian {
        mass,
        median: mid,
        tolerance: achieved,
    })
}

/// Domain tag for an inequality's weight pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Line,
    RadialRn { n: u32 },
}

/// The pair (w1, w2) entering a Poincare/Hardy-type inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPair {
    pub left: LineWeight,
    pub right: LineWeight,
    pub domain: Domain,
    pub q: f64,
}

impl WeightPair {
    pub fn validate(&self) -> Result<(), WeightError> {
        if !(self.q > 1.0 && self.q.is_finite()) {
            return Err(WeightError::InvalidFamily("q must lie in (1, inf)".into()));
        }
        Ok(())
    }
}
