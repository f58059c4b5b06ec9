//! Constructive Hardy-inequality machinery: derive a weight pair (w1, w2)
//! with constant q^q from a radial profile g whose theta-Laplacian has
//! constant sign, plus closed-form family constants for the power-type
//! profile g(r) = r^{gamma+2} (1 + r^beta)^alpha.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimal_search::TestFunction;
use crate::quad::{self, QuadError, QuadratureSpec};
use crate::weights::surface;

#[derive(Debug, Error)]
pub enum HardyConstructError {
    #[error("theta-Laplacian changes sign on (0, inf); the construction needs a constant sign")]
    SignNotConstant,
    #[error("parameter condition violated: {0}")]
    ConditionsViolated(String),
    #[error("tabulated profile has too few nodes for second differences")]
    NotDifferentiable,
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ProfileKind {
    /// g(r) = r^{gamma+2} (1 + r^beta)^alpha, beta > 0.
    PowerTypeG { gamma: f64, beta: f64, alpha: f64 },
    /// Radial samples (r, g(r)); derivatives by central differences.
    Tabulated { nodes: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaLaplaceProfile {
    #[serde(flatten)]
    pub kind: ProfileKind,
    pub theta: f64,
    pub q: f64,
    pub dimension: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    Nonnegative,
    Nonpositive,
    Mixed,
}

impl ThetaLaplaceProfile {
    pub fn validate(&self) -> Result<(), HardyConstructError> {
        if !(self.theta > 1.0 && self.theta.is_finite()) {
            return Err(HardyConstructError::InvalidProfile("theta must be > 1".into()));
        }
        if !(self.q > 1.0 && self.q.is_finite()) {
            return Err(HardyConstructError::InvalidProfile("q must be > 1".into()));
        }
        if self.dimension < 1 {
            return Err(HardyConstructError::InvalidProfile("dimension >= 1".into()));
        }
        match &self.kind {
            ProfileKind::PowerTypeG { beta, .. } => {
                if !(*beta > 0.0) {
                    return Err(HardyConstructError::InvalidProfile("beta must be > 0".into()));
                }
            }
            ProfileKind::Tabulated { nodes } => {
                if nodes.len() < 3 {
                    return Err(HardyConstructError::NotDifferentiable);
                }
                if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(HardyConstructError::InvalidProfile(
                        "tabulated nodes must be strictly increasing".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn g(&self, r: f64) -> f64 {
        match &self.kind {
            ProfileKind::PowerTypeG { gamma, beta, alpha } => {
                r.powf(gamma + 2.0) * (1.0 + r.powf(*beta)).powf(*alpha)
            }
            ProfileKind::Tabulated { nodes } => interp(nodes, r),
        }
    }

    /// g'(r) for r > 0.
    pub fn g_prime(&self, r: f64) -> f64 {
        match &self.kind {
            ProfileKind::PowerTypeG { gamma, beta, alpha } => {
                let c = gamma + 2.0;
                let s = r.powf(*beta);
                let a = c + (c + alpha * beta) * s;
                r.powf(c - 1.0) * (1.0 + s).powf(alpha - 1.0) * a
            }
            ProfileKind::Tabulated { nodes } => {
                let h = local_h(nodes, r);
                (interp(nodes, r + h) - interp(nodes, r - h)) / (2.0 * h)
            }
        }
    }

    /// g''(r) for r > 0.
    pub fn g_second(&self, r: f64) -> f64 {
        match &self.kind {
            ProfileKind::PowerTypeG { gamma, beta, alpha } => {
                let c = gamma + 2.0;
                let d = c + alpha * beta;
                let s = r.powf(*beta);
                let a = c + d * s;
                let b = (c - 1.0) * (1.0 + s) * a
                    + (alpha - 1.0) * beta * s * a
                    + d * beta * s * (1.0 + s);
                r.powf(c - 2.0) * (1.0 + s).powf(alpha - 2.0) * b
            }
            ProfileKind::Tabulated { nodes } => {
                let h = local_h(nodes, r);
                (interp(nodes, r + h) - 2.0 * interp(nodes, r) + interp(nodes, r - h)) / (h * h)
            }
        }
    }

    /// Radial theta-Laplacian
    /// div(|grad g|^{theta-2} grad g) = |g'|^{theta-2} ((theta-1) g'' + (N-1) g'/r).
    pub fn theta_laplacian(&self, r: f64) -> Result<f64, HardyConstructError> {
        self.validate()?;
        if !(r > 0.0) {
            return Err(HardyConstructError::InvalidProfile("need r > 0".into()));
        }
        let gp = self.g_prime(r);
        let gpp = self.g_second(r);
        let n = self.dimension as f64;
        Ok(gp.abs().powf(self.theta - 2.0) * ((self.theta - 1.0) * gpp + (n - 1.0) * gp / r))
    }

    /// Coefficients (q0, q1, q2) of the sign polynomial Q(s) with
    /// (theta-1) g'' + (N-1) g'/r = r^{c-2} (1+s)^{alpha-2} Q(s), s = r^beta.
    /// Only defined for the power-type profile.
    pub fn sign_polynomial(&self) -> Option<(f64, f64, f64)> {
        let ProfileKind::PowerTypeG { gamma, beta, alpha } = self.kind else {
            return None;
        };
        let n = self.dimension as f64;
        let th = self.theta;
        let c = gamma + 2.0;
        let d = c + alpha * beta;
        let q0 = (th - 1.0) * (c - 1.0) * c + (n - 1.0) * c;
        let q1 = (th - 1.0) * ((c - 1.0) * (c + d) + (alpha - 1.0) * beta * c + d * beta)
            + (n - 1.0) * (c + d);
        let q2 = d * ((th - 1.0) * (c - 1.0 + (alpha - 1.0) * beta + beta) + (n - 1.0));
        Some((q0, q1, q2))
    }
}

fn interp(nodes: &[(f64, f64)], r: f64) -> f64 {
    let n = nodes.len();
    if n == 0 || r <= nodes[0].0 {
        return nodes.first().map_or(0.0, |&(_, v)| v);
    }
    if r >= nodes[n - 1].0 {
        return nodes[n - 1].1;
    }
    let idx = nodes.partition_point(|&(x, _)| x <= r);
    let (x0, v0) = nodes[idx - 1];
    let (x1, v1) = nodes[idx];
    v0 + (v1 - v0) * (r - x0) / (x1 - x0)
}

fn local_h(nodes: &[(f64, f64)], r: f64) -> f64 {
    let span = nodes[nodes.len() - 1].0 - nodes[0].0;
    (1e-4 * span).max(1e-9 * (r.abs() + 1.0))
}

/// Sign of a quadratic on the open half-line (0, inf). Simple roots inside
/// flip the sign; double roots only touch zero.
fn quadratic_sign_on_halfline(q0: f64, q1: f64, q2: f64) -> SignClass {
    let eval = |s: f64| q2 * s * s + q1 * s + q0;
    let mut roots: Vec<f64> = Vec::new();
    if q2.abs() > 1e-14 * (q0.abs() + q1.abs() + q2.abs()) {
        let disc = q1 * q1 - 4.0 * q2 * q0;
        if disc > 0.0 {
            let sq = disc.sqrt();
            roots.push((-q1 - sq) / (2.0 * q2));
            roots.push((-q1 + sq) / (2.0 * q2));
        }
        // disc == 0: double root, no sign change
    } else if q1.abs() > 1e-14 * (q0.abs() + q1.abs()) {
        roots.push(-q0 / q1);
    } else {
        return if q0 > 0.0 {
            SignClass::Nonnegative
        } else if q0 < 0.0 {
            SignClass::Nonpositive
        } else {
            SignClass::Mixed
        };
    }
    let tol = 1e-12;
    if roots.iter().any(|&r| r > tol && r.is_finite() && {
        // simple root strictly inside: sign flips across it
        let eps = 1e-6 * (r + 1.0);
        eval(r - eps) * eval(r + eps) < 0.0
    }) {
        return SignClass::Mixed;
    }
    // Constant sign: probe away from any roots.
    let probe = [1e-9, 1.0, 1e9]
        .iter()
        .map(|&s| eval(s))
        .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
    if probe >= 0.0 {
        SignClass::Nonnegative
    } else {
        SignClass::Nonpositive
    }
}

/// A derived Hardy weight pair: w1 = |Lap_theta g|,
/// w2 = |grad g|^{q(theta-1)} |Lap_theta g|^{1-q}, constant C_H = q^q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyDerivation {
    pub profile: ThetaLaplaceProfile,
    /// Exactly q^q.
    pub c_h: f64,
    pub sign: SignClass,
    /// inf over s >= 0 of |Q(s)|/(1+s)^2 (theta = 2 power-type only).
    pub c1: Option<f64>,
    /// sup over s >= 0 of f(s)^q (|Q(s)|/(1+s)^2)^{1-q} (theta = 2 only).
    pub c2: Option<f64>,
    /// q^q c2/c1: constant for the family pair (h, r^q h).
    pub c_h_family: Option<f64>,
    /// True when the family constant is optimal (closed-form regime).
    pub optimal: bool,
    pub condition_note: String,
}

impl HardyDerivation {
    pub fn w1(&self, r: f64) -> f64 {
        self.profile.theta_laplacian(r).map_or(f64::NAN, f64::abs)
    }

    pub fn w2(&self, r: f64) -> f64 {
        let lap = self.profile.theta_laplacian(r).unwrap_or(f64::NAN).abs();
        if lap == 0.0 {
            // Impossible under the constant-sign checks; trapped anyway.
            return f64::INFINITY;
        }
        let gp = self.profile.g_prime(r).abs();
        let q = self.profile.q;
        gp.powf(q * (self.profile.theta - 1.0)) * lap.powf(1.0 - q)
    }
}

/// Build the Hardy derivation for a profile, checking the constant-sign
/// hypothesis and (for theta = 2 power-type) the closed-form constants.
pub fn derive_hardy(profile: &ThetaLaplaceProfile) -> Result<HardyDerivation, HardyConstructError> {
    profile.validate()?;
    let q = profile.q;
    let n = profile.dimension as f64;

    let (sign, c1c2): (SignClass, Option<(f64, f64, bool, String)>) = match profile.kind {
        ProfileKind::PowerTypeG { gamma, beta, alpha } => {
            let (q0, q1, q2) = profile.sign_polynomial().unwrap();
            let sign = quadratic_sign_on_halfline(q0, q1, q2);
            if sign == SignClass::Mixed {
                return Err(HardyConstructError::SignNotConstant);
            }
            // The gradient factor A(s) = (gamma+2) + (eta_shift+2) s must not
            // vanish at an interior radius, or w2 degenerates there.
            let c = gamma + 2.0;
            let eta_shift = alpha * beta + gamma;
            let d = eta_shift + 2.0;
            if c * d < 0.0 {
                return Err(HardyConstructError::ConditionsViolated(
                    "sgn(alpha*beta+gamma+2) != sgn(gamma+2): the gradient vanishes at an \
                     interior radius"
                        .into(),
                ));
            }
            let closed = if (profile.theta - 2.0).abs() < 1e-12 {
                if d.abs() < c.abs() - 1e-12 {
                    return Err(HardyConstructError::ConditionsViolated(
                        "|alpha*beta+gamma+2| >= |gamma+2| fails".into(),
                    ));
                }
                if gamma + n <= 0.0 {
                    return Err(HardyConstructError::ConditionsViolated(
                        "gamma + N > 0 fails".into(),
                    ));
                }
                if eta_shift + n <= 0.0 {
                    return Err(HardyConstructError::ConditionsViolated(
                        "alpha*beta + gamma + N > 0 fails".into(),
                    ));
                }
                let curly = |s: f64| {
                    let qs = q2 * s * s + q1 * s + q0;
                    qs.abs() / ((1.0 + s) * (1.0 + s))
                };
                let f_ratio = |s: f64| (d * s + c).abs() / (1.0 + s);
                let opt_condition = alpha * beta + 2.0 * (gamma + 1.0) + n <= 1e-12;
                if opt_condition {
                    // Monotonicity analysis: the infimum of curly sits at
                    // s -> inf and the supremum of f^q curly^{1-q} too.
                    let c1 = (-alpha * beta - gamma - 2.0) * (eta_shift + n);
                    let c2 = d.abs() * (eta_shift + n).powf(1.0 - q);
                    Some((
                        c1,
                        c2,
                        true,
                        "closed forms: attained in the limit s -> inf".into(),
                    ))
                } else {
                    // Numeric inf/sup on a log grid in s; the bound still
                    // holds, only optimality is lost.
                    let mut c1 = curly(0.0).min(q2.abs());
                    let mut c2: f64 = 0.0;
                    let npts = 100_000usize;
                    for k in 0..=npts {
                        let s = 1e-8 * (1e16f64).powf(k as f64 / npts as f64);
                        let cv = curly(s);
                        c1 = c1.min(cv);
                        if cv > 0.0 {
                            c2 = c2.max(f_ratio(s).powf(q) * cv.powf(1.0 - q));
                        }
                    }
                    // Limits at the endpoints of the half-line.
                    if q2.abs() > 0.0 {
                        c2 = c2.max(d.abs().powf(q) * q2.abs().powf(1.0 - q));
                    }
                    if q0.abs() > 0.0 {
                        c2 = c2.max(c.abs().powf(q) * q0.abs().powf(1.0 - q));
                    }
                    Some((c1, c2, false, "numeric inf/sup on a 1e5-point log grid".into()))
                }
            } else {
                None
            };
            (sign, closed)
        }
        ProfileKind::Tabulated { ref nodes } => {
            let lo = nodes[0].0.max(1e-9);
            let hi = nodes[nodes.len() - 1].0;
            let mut pos = false;
            let mut neg = false;
            for k in 0..=2000 {
                let r = lo + (hi - lo) * k as f64 / 2000.0;
                if r <= 0.0 {
                    continue;
                }
                let v = profile.theta_laplacian(r)?;
                if v > 1e-12 {
                    pos = true;
                }
                if v < -1e-12 {
                    neg = true;
                }
            }
            if pos && neg {
                return Err(HardyConstructError::SignNotConstant);
            }
            let sign = if neg {
                SignClass::Nonpositive
            } else {
                SignClass::Nonnegative
            };
            (sign, None)
        }
    };

    let (c1, c2, optimal, note) = match c1c2 {
        Some((c1, c2, optimal, note)) => (Some(c1), Some(c2), optimal, note),
        None => (
            None,
            None,
            false,
            "family constants only derived for the theta = 2 power-type profile".into(),
        ),
    };
    let c_h_family = match (c1, c2) {
        (Some(c1v), Some(c2v)) if c1v > 0.0 => Some(q.powf(q) * c2v / c1v),
        _ => None,
    };
    Ok(HardyDerivation {
        profile: profile.clone(),
        c_h: q.powf(q),
        sign,
        c1,
        c2,
        c_h_family,
        optimal,
        condition_note: note,
    })
}

/// Exclusion interval endpoints p_-(N), p_+(N) = 3/2 -/+ sqrt((N-7)/(N+1))/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PRange {
    pub p_minus: Option<f64>,
    pub p_plus: Option<f64>,
    /// False for N <= 7: no exclusion interval exists.
    pub applicable: bool,
}

pub fn corollary_p_range(n: u32) -> PRange {
    if n < 7 {
        return PRange {
            p_minus: None,
            p_plus: None,
            applicable: false,
        };
    }
    let nf = n as f64;
    let half_width = 0.5 * ((nf - 7.0) / (nf + 1.0)).sqrt();
    PRange {
        p_minus: Some(1.5 - half_width),
        p_plus: Some(1.5 + half_width),
        applicable: n > 7,
    }
}

/// The power-type profile whose derivation realizes the p-Laplace
/// asymptotics weights: gamma = -p', beta = p', alpha = -(p-1)/(2-p).
pub fn asymptotics_profile(p: f64, n: u32, q: f64) -> Result<ThetaLaplaceProfile, HardyConstructError> {
    if !(p > 1.0 && p < 2.0) {
        return Err(HardyConstructError::InvalidProfile(
            "need 1 < p < 2 for the asymptotics profile".into(),
        ));
    }
    let pp = p / (p - 1.0);
    Ok(ThetaLaplaceProfile {
        kind: ProfileKind::PowerTypeG {
            gamma: -pp,
            beta: pp,
            alpha: -(p - 1.0) / (2.0 - p),
        },
        theta: 2.0,
        q,
        dimension: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// lhs/rhs, defined as 0 when both sides vanish.
    pub ratio: f64,
}

/// Evaluate both sides of the derived inequality on a compactly supported
/// radial piecewise-linear test function.
pub fn verify_hardy_sample(
    derivation: &HardyDerivation,
    phi: &TestFunction,
) -> Result<SampleCheck, HardyConstructError> {
    let n = derivation.profile.dimension;
    let q = derivation.profile.q;
    let spec = QuadratureSpec::with_rel_tol(1e-9);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..phi.n_cells() {
        let (r0, r1) = (phi.grid[i], phi.grid[i + 1]);
        if r1 <= 0.0 {
            continue;
        }
        let r0 = r0.max(0.0);
        let slope = phi.slope(i);
        let sing: Vec<f64> = if r0 == 0.0 { vec![0.0] } else { vec![] };
        let lf = |r: f64| {
            phi.evaluate(r).abs().powf(q) * derivation.w1(r) * r.powi(n as i32 - 1)
        };
        lhs += quad::integrate_finite(lf, r0, r1, &sing, &spec)?.value;
        if slope != 0.0 {
            let rf = |r: f64| {
                slope.abs().powf(q) * derivation.w2(r) * r.powi(n as i32 - 1)
            };
            rhs += quad::integrate_finite(rf, r0, r1, &sing, &spec)?.value;
        }
    }
    let s = surface(n);
    lhs *= s;
    rhs *= s * derivation.c_h;
    let ratio = if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    };
    Ok(SampleCheck { lhs, rhs, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_profile(theta: f64, q: f64, n: u32) -> ThetaLaplaceProfile {
        ThetaLaplaceProfile {
            kind: ProfileKind::PowerTypeG {
                gamma: 0.0,
                beta: 1.0,
                alpha: 0.0,
            },
            theta,
            q,
            dimension: n,
        }
    }

    #[test]
    fn laplacian_of_square_profile() {
        // g = r^2, theta = 2, N = 3: Lap g = 2N = 6 at every r
        let p = quadratic_profile(2.0, 2.0, 3);
        for r in [0.1, 1.0, 7.0] {
            assert!((p.theta_laplacian(r).unwrap() - 6.0).abs() < 1e-12);
        }
        // theta = 3: r^{-2} (r^2 (2r)^2)' = 16 r
        let p3 = quadratic_profile(3.0, 2.0, 3);
        assert!((p3.theta_laplacian(1.0).unwrap() - 16.0).abs() < 1e-10);
        assert!((p3.theta_laplacian(2.0).unwrap() - 32.0).abs() < 1e-10);
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        let p = ThetaLaplaceProfile {
            kind: ProfileKind::PowerTypeG {
                gamma: 0.0,
                beta: 2.0,
                alpha: -1.0,
            },
            theta: 2.0,
            q: 2.0,
            dimension: 3,
        };
        for r in [0.3, 1.0, 2.5] {
            let h = 1e-5 * r;
            let gp = (p.g(r + h) - p.g(r - h)) / (2.0 * h);
            let gpp = (p.g(r + h) - 2.0 * p.g(r) + p.g(r - h)) / (h * h);
            let fd = gpp + 2.0 * gp / r;
            let exact = p.theta_laplacian(r).unwrap();
            assert!(
                (fd - exact).abs() < 1e-5 * exact.abs().max(1.0),
                "r={r}: fd {fd} vs exact {exact}"
            );
        }
    }

    #[test]
    fn sign_polynomial_matches_quadratic_expansion() {
        // theta = 2 coefficients against the closed-form expansion in terms
        // of eta_shift = alpha*beta + gamma.
        for (gamma, beta, alpha, n) in [
            (-1.5f64, 2.0f64, -2.0f64, 5u32),
            (0.5, 1.5, -3.0, 3),
            (-2.0, 3.0, -1.5, 7),
        ] {
            let p = ThetaLaplaceProfile {
                kind: ProfileKind::PowerTypeG { gamma, beta, alpha },
                theta: 2.0,
                q: 2.0,
                dimension: n,
            };
            let (q0, q1, q2) = p.sign_polynomial().unwrap();
            let nf = n as f64;
            let eta = alpha * beta + gamma;
            let a = (eta + 2.0) * (eta + nf);
            let b = (eta + 2.0) * (eta + nf) + (gamma + 2.0) * (gamma + nf)
                - alpha * beta * (alpha - 1.0) * beta;
            let c = (gamma + 2.0) * (gamma + nf);
            assert!((q2 - a).abs() < 1e-9 * (1.0 + a.abs()), "q2 {q2} vs {a}");
            assert!((q1 - b).abs() < 1e-9 * (1.0 + b.abs()), "q1 {q1} vs {b}");
            assert!((q0 - c).abs() < 1e-9 * (1.0 + c.abs()), "q0 {q0} vs {c}");
        }
    }

    #[test]
    fn derive_square_profile_matches_classical_constant() {
        let d = derive_hardy(&quadratic_profile(2.0, 2.0, 3)).unwrap();
        assert_eq!(d.c_h, 4.0);
        assert_eq!(d.sign, SignClass::Nonnegative);
        assert!((d.w1(2.0) - 6.0).abs() < 1e-12);
        // w2 = (2r)^2 / 6
        assert!((d.w2(2.0) - 16.0 / 6.0).abs() < 1e-10);
        // family constant (q/(alpha*beta+gamma+N))^q = (2/3)^2
        let fam = d.c_h_family.unwrap();
        assert!((fam - 4.0 / 9.0).abs() < 1e-10, "family {fam}");
    }

    #[test]
    fn corollary_weights_give_constant_four() {
        let p = asymptotics_profile(1.5, 7, 2.0).unwrap();
        let d = derive_hardy(&p).unwrap();
        assert!(d.optimal);
        let fam = d.c_h_family.unwrap();
        assert!((fam - 4.0).abs() < 1e-9, "family {fam}");
    }

    #[test]
    fn condition_violations_detected() {
        // sgn(alpha*beta+gamma+2) != sgn(gamma+2)
        let p = ThetaLaplaceProfile {
            kind: ProfileKind::PowerTypeG {
                gamma: 0.0,
                beta: 2.0,
                alpha: -2.0,
            },
            theta: 2.0,
            q: 2.0,
            dimension: 3,
        };
        assert!(matches!(
            derive_hardy(&p),
            Err(HardyConstructError::ConditionsViolated(_))
                | Err(HardyConstructError::SignNotConstant)
        ));
    }

    #[test]
    fn p_range_values() {
        let r7 = corollary_p_range(7);
        assert_eq!(r7.p_minus.unwrap(), 1.5);
        assert_eq!(r7.p_plus.unwrap(), 1.5);
        assert!(!r7.applicable);
        let r8 = corollary_p_range(8);
        assert!((r8.p_minus.unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((r8.p_plus.unwrap() - 5.0 / 3.0).abs() < 1e-12);
        assert!(r8.applicable);
        let r5 = corollary_p_range(5);
        assert!(!r5.applicable);
        assert!(r5.p_minus.is_none());
    }

    #[test]
    fn sample_check_zero_function() {
        let d = derive_hardy(&quadratic_profile(2.0, 2.0, 3)).unwrap();
        let phi = TestFunction::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.0, 0.0]).unwrap();
        let s = verify_hardy_sample(&d, &phi).unwrap();
        assert_eq!(s.ratio, 0.0);
    }

    #[test]
    fn sample_check_hat_function() {
        let d = derive_hardy(&quadratic_profile(2.0, 2.0, 3)).unwrap();
        let phi = TestFunction::new(vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0]).unwrap();
        let s = verify_hardy_sample(&d, &phi).unwrap();
        assert!(s.lhs > 0.0 && s.rhs > 0.0);
        assert!(s.ratio <= 1.0 + 1e-6, "ratio {}", s.ratio);
    }

    #[test]
    fn rescaled_family_ratio_trend() {
        // Under the asymptotics weights the rescaled hats phi(s x) push the
        // quotient toward its optimal value as the support spreads out.
        let p = asymptotics_profile(1.5, 7, 2.0).unwrap();
        let d = derive_hardy(&p).unwrap();
        let mut last = 0.0;
        for scale in [1.0, 4.0, 16.0] {
            let grid: Vec<f64> = (0..=60)
                .map(|i| 0.5 * scale * 1.1f64.powi(i) / 1.1f64.powi(60) * 300.0)
                .collect();
            let mut grid = grid;
            grid.dedup();
            let values: Vec<f64> = grid
                .iter()
                .enumerate()
                .map(|(i, _)| {
                    if i == grid.len() - 1 {
                        0.0
                    } else {
                        1.0 - i as f64 / 60.0
                    }
                })
                .collect();
            let phi = TestFunction::new(grid, values).unwrap();
            let s = verify_hardy_sample(&d, &phi).unwrap();
            assert!(s.ratio <= 1.0 + 1e-6);
            last = s.ratio;
        }
        assert!(last > 0.0);
    }
}
