//! Radial solver for the rescaled doubly nonlinear fast-diffusion equation
//!
//!   dv/dtau = div( m^{p-1} v^{(1-m)(1-p)} |grad v|^{p-2} grad v + y v )
//!
//! with Barenblatt profiles, relative entropy and Fisher information traces,
//! and empirical extraction of the entropy decay rate. The finite-volume
//! scheme is well balanced: drift face velocities are derived from the
//! discrete diffusive flux of the sampled Barenblatt profile, so the sampled
//! profile is an exact fixed point of the step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FastDiffError {
    #[error("parameters outside the fast diffusion range: {0}")]
    RangeViolation(String),
    #[error("state lost positivity at cell {cell}")]
    PositivityLoss { cell: usize },
    #[error("step rejected even at dtau = {dtau:e} after {retries} halvings")]
    StabilityViolation { dtau: f64, retries: usize },
    #[error("initial datum is not sandwiched between the reference profiles")]
    NotSandwiched,
    #[error("mass matching bisection failed to bracket")]
    MassMatchFailed,
    #[error("exponential fit unreliable: r2 = {r2}")]
    FitUnreliable { r2: f64 },
}

/// Parameters of the doubly nonlinear equation du/dt = div(|grad u^m|^{p-2} grad u^m)
/// restricted to the fast diffusion range, plus the Barenblatt parameter D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DnleParams {
    pub m: f64,
    pub p: f64,
    pub dimension: u32,
    /// Barenblatt parameter of the reference profile.
    pub d: f64,
    pub sigma: f64,
    pub vartheta: f64,
}

impl DnleParams {
    pub fn new(m: f64, p: f64, dimension: u32, d: f64) -> Result<Self, FastDiffError> {
        if !(m > 0.0 && m.is_finite()) || !(p > 1.0 && p.is_finite()) {
            return Err(FastDiffError::RangeViolation(
                "need m > 0 and p > 1".into(),
            ));
        }
        if dimension < 3 {
            return Err(FastDiffError::RangeViolation("need N >= 3".into()));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(FastDiffError::RangeViolation("need D > 0".into()));
        }
        let n = dimension as f64;
        let mp1 = m * (p - 1.0);
        // Strict fast diffusion window (N-p)/p < m(p-1) < (N-p+1)/N.
        if !(mp1 > (n - p) / p && mp1 < (n - p + 1.0) / n) {
            return Err(FastDiffError::RangeViolation(format!(
                "m(p-1) = {mp1} outside ({}, {})",
                (n - p) / p,
                (n - p + 1.0) / n
            )));
        }
        let sigma = m + (p - 2.0) / (p - 1.0);
        let vartheta = p - n * (1.0 - mp1);
        if vartheta <= 0.0 {
            return Err(FastDiffError::RangeViolation("vartheta <= 0".into()));
        }
        Ok(Self {
            m,
            p,
            dimension,
            d,
            sigma,
            vartheta,
        })
    }

    pub fn with_d(&self, d: f64) -> Self {
        Self { d, ..*self }
    }

    fn k_coeff(&self) -> f64 {
        (1.0 - self.m * (self.p - 1.0)) / (self.m * self.p)
    }

    fn profile_exponent(&self) -> f64 {
        (self.p - 1.0) / (self.m * (self.p - 1.0) - 1.0)
    }

    /// Barenblatt profile B_D(|x|) of the rescaled flow.
    pub fn barenblatt(&self, r: f64) -> f64 {
        self.barenblatt_d(self.d, r)
    }

    pub fn barenblatt_d(&self, d: f64, r: f64) -> f64 {
        let pp = self.p / (self.p - 1.0);
        (d + self.k_coeff() * r.abs().powf(pp)).powf(self.profile_exponent())
    }

    /// Expansion factor R(t) of the self-similar change of variables.
    pub fn expansion(&self, t: f64) -> f64 {
        (1.0 + self.vartheta * t).powf(1.0 / self.vartheta)
    }

    /// Entropy density m/(sigma(sigma-1)) (v^s - b^s - s b^{s-1}(v-b)); the
    /// prefactor is negative for sigma in (0,1) and the bracket nonpositive
    /// by concavity, so the product is nonnegative.
    fn entropy_density(&self, v: f64, b: f64) -> f64 {
        let s = self.sigma;
        let pref = self.m / (s * (s - 1.0));
        let val = pref * (v.powf(s) - b.powf(s) - s * b.powf(s - 1.0) * (v - b));
        val.max(0.0)
    }

    /// Nonlinear pressure q(v) = m v^{sigma-1}/(sigma-1); the flux rewrites
    /// as v (|grad q|^{p-2} grad q + y).
    fn pressure(&self, v: f64) -> f64 {
        self.m * v.powf(self.sigma - 1.0) / (self.sigma - 1.0)
    }
}

/// (t, x, u) -> (tau, y, v) with tau = log R(t), y = x/R(t), v = R^N u.
pub fn self_similar_forward(params: &DnleParams, t: f64, x: f64, u: f64) -> (f64, f64, f64) {
    let r = params.expansion(t);
    (r.ln(), x / r, r.powi(params.dimension as i32) * u)
}

/// Exact inverse of self_similar_forward.
pub fn self_similar_inverse(params: &DnleParams, tau: f64, y: f64, v: f64) -> (f64, f64, f64) {
    let r = tau.exp();
    let t = (r.powf(params.vartheta) - 1.0) / params.vartheta;
    (t, y * r, v / r.powi(params.dimension as i32))
}

/// Cell-centered radial state on [0, R_max].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialState {
    pub centers: Vec<f64>,
    pub v: Vec<f64>,
    pub tau: f64,
}

/// Precomputed grid geometry and well-balanced face data for a fixed
/// reference Barenblatt parameter params.d.
pub struct RadialSolver {
    pub params: DnleParams,
    faces: Vec<f64>,
    pub centers: Vec<f64>,
    /// Cell volumes (r_{j+1}^N - r_j^N)/N; the angular factor is dropped
    /// consistently from every integral.
    vol: Vec<f64>,
    /// Face areas r_j^{N-1}.
    area: Vec<f64>,
    /// Center-to-center distances per interior/boundary face.
    dc: Vec<f64>,
    /// Reference profile at cell centers and at the boundary ghost center.
    b_ref: Vec<f64>,
    b_ghost: f64,
    /// Well-balanced drift velocity per face (consistent with +r).
    c_face: Vec<f64>,
    eps_reg: f64,
}

impl RadialSolver {
    pub fn new(params: DnleParams, n_cells: usize, r_max: Option<f64>) -> Self {
        assert!(n_cells >= 8);
        let r_max = r_max
            .unwrap_or_else(|| 40.0 * params.d.powf((params.p - 1.0) / params.p));
        let n = params.dimension as i32;
        // Quadratically graded faces resolve the profile core near 0.
        let faces: Vec<f64> = (0..=n_cells)
            .map(|j| r_max * (j as f64 / n_cells as f64).powi(2))
            .collect();
        let centers: Vec<f64> = (0..n_cells)
            .map(|i| 0.5 * (faces[i] + faces[i + 1]))
            .collect();
        let vol: Vec<f64> = (0..n_cells)
            .map(|i| (faces[i + 1].powi(n) - faces[i].powi(n)) / n as f64)
            .collect();
        let area: Vec<f64> = faces.iter().map(|&r| r.powi(n - 1)).collect();
        let ghost_center = faces[n_cells] + (faces[n_cells] - centers[n_cells - 1]);
        let mut dc = vec![0.0; n_cells + 1];
        for j in 1..n_cells {
            dc[j] = centers[j] - centers[j - 1];
        }
        dc[n_cells] = ghost_center - centers[n_cells - 1];
        let b_ref: Vec<f64> = centers.iter().map(|&r| params.barenblatt(r)).collect();
        let b_ghost = params.barenblatt(ghost_center);
        let eps_reg = 1e-8;
        let mut solver = Self {
            params,
            faces,
            centers,
            vol,
            area,
            dc,
            b_ref,
            b_ghost,
            c_face: Vec::new(),
            eps_reg,
        };
        // Drift velocity chosen so the total face flux of the sampled
        // reference profile vanishes identically (well-balanced scheme).
        let b = solver.b_ref.clone();
        let diff = solver.diffusive_fluxes(&b, &b);
        let mut c_face = vec![0.0; n_cells + 1];
        for j in 1..=n_cells {
            // Upwind value of the outward drift is the inner cell.
            c_face[j] = -diff[j] / b[j - 1];
        }
        solver.c_face = c_face;
        solver
    }

    pub fn n_cells(&self) -> usize {
        self.centers.len()
    }

    pub fn r_max(&self) -> f64 {
        *self.faces.last().unwrap()
    }

    /// Reference profile sampled on this grid, for an arbitrary parameter d.
    pub fn sample_barenblatt(&self, d: f64) -> Vec<f64> {
        self.centers
            .iter()
            .map(|&r| self.params.barenblatt_d(d, r))
            .collect()
    }

    /// Discrete radial mass (angular factor dropped).
    pub fn mass(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.vol).map(|(a, b)| a * b).sum()
    }

    /// Diffusive flux per face with coefficient frozen at `coef_v` and the
    /// gradient taken from `grad_v`. Face 0 carries zero flux; the last face
    /// uses the Dirichlet ghost value of the reference profile.
    fn diffusive_fluxes(&self, coef_v: &[f64], grad_v: &[f64]) -> Vec<f64> {
        let n = self.n_cells();
        let mut flux = vec![0.0; n + 1];
        for j in 1..=n {
            let (lo, hi) = self.face_pair(grad_v, j);
            let g = (hi - lo) / self.dc[j];
            flux[j] = self.face_coefficient(coef_v, j) * g;
        }
        flux
    }

    fn face_pair(&self, v: &[f64], j: usize) -> (f64, f64) {
        let n = self.n_cells();
        if j < n {
            (v[j - 1], v[j])
        } else {
            (v[n - 1], self.b_ghost)
        }
    }

    /// Coefficient of the pressure-form diffusive flux F_d = v_f phi(dq) dq
    /// written against the v-gradient: F_d = coef * (v_hi - v_lo)/dc. The
    /// secant of the pressure q(v) keeps the two forms identical.
    fn face_coefficient(&self, v: &[f64], j: usize) -> f64 {
        let p = self.params.p;
        let (vlo, vhi) = self.face_pair(v, j);
        let vf = 0.5 * (vlo + vhi);
        let (qlo, qhi) = (self.params.pressure(vlo), self.params.pressure(vhi));
        let dq = (qhi - qlo) / self.dc[j];
        let phi = (self.eps_reg * self.eps_reg + dq * dq).powf((p - 2.0) / 2.0);
        let secant = if (vhi - vlo).abs() > 1e-12 * vf {
            (qhi - qlo) / (vhi - vlo)
        } else {
            self.params.m * vf.powf(self.params.sigma - 2.0)
        };
        vf * phi * secant
    }

    fn drift_fluxes(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n_cells();
        let mut flux = vec![0.0; n + 1];
        for j in 1..=n {
            flux[j] = self.c_face[j] * v[j - 1];
        }
        flux
    }

    /// dv/dtau of the semi-discrete system (used by the explicit reference).
    fn rhs(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n_cells();
        let diff = self.diffusive_fluxes(v, v);
        let drift = self.drift_fluxes(v);
        (0..n)
            .map(|i| {
                (self.area[i + 1] * (diff[i + 1] + drift[i + 1])
                    - self.area[i] * (diff[i] + drift[i]))
                    / self.vol[i]
            })
            .collect()
    }

    /// Stable step size for the explicit drift part.
    pub fn cfl_dtau(&self) -> f64 {
        let n = self.n_cells();
        let mut dt = f64::INFINITY;
        for i in 0..n {
            let out = self.area[i + 1] * self.c_face[i + 1].abs()
                + self.area[i] * self.c_face[i].abs();
            if out > 0.0 {
                dt = dt.min(self.vol[i] / out);
            }
        }
        0.4 * dt
    }

    /// Stable step size when the diffusion is also treated explicitly
    /// (reference integrator only).
    pub fn explicit_dtau(&self, v: &[f64]) -> f64 {
        let n = self.n_cells();
        let mut dt = self.cfl_dtau();
        for i in 0..n {
            let mut k = 0.0;
            for j in [i, i + 1] {
                if j >= 1 && j <= n {
                    k += self.area[j] * self.face_coefficient(v, j) / self.dc[j];
                }
            }
            if k > 0.0 {
                dt = dt.min(0.2 * self.vol[i] / k);
            }
        }
        dt
    }

    fn attempt_step(&self, v: &[f64], dtau: f64) -> Option<(Vec<f64>, f64)> {
        let n = self.n_cells();
        // Frozen diffusion coefficients and gradient signs from the current
        // state; drift fully explicit.
        let mut coef = vec![0.0; n + 1];
        for j in 1..=n {
            coef[j] = self.face_coefficient(v, j);
        }
        let drift = self.drift_fluxes(v);
        // Tridiagonal system (vol/dtau + K) v_new = vol/dtau v - div(drift) + ghost term.
        let mut diag = vec![0.0; n];
        let mut lower = vec![0.0; n.saturating_sub(1)];
        let mut upper = vec![0.0; n.saturating_sub(1)];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            diag[i] = self.vol[i] / dtau;
            rhs[i] = self.vol[i] / dtau * v[i]
                + (self.area[i + 1] * drift[i + 1] - self.area[i] * drift[i]);
        }
        for j in 1..n {
            let k = self.area[j] * coef[j] / self.dc[j];
            diag[j - 1] += k;
            diag[j] += k;
            lower[j - 1] -= k;
            upper[j - 1] -= k;
        }
        // Boundary face: implicit in v[n-1], Dirichlet ghost contribution.
        let kb = self.area[n] * coef[n] / self.dc[n];
        diag[n - 1] += kb;
        rhs[n - 1] += kb * self.b_ghost;
        let v_new = thomas(&lower, &diag, &upper, &rhs)?;
        if v_new.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return None;
        }
        // Signed mass gained through the outer boundary, for the mass ledger.
        let g_b = (self.b_ghost - v_new[n - 1]) / self.dc[n];
        let boundary_flux = self.area[n] * (coef[n] * g_b + drift[n]);
        Some((v_new, boundary_flux * dtau))
    }

    /// One semi-implicit step. Returns the new state and the signed mass
    /// gained through the outer boundary during the step. The requested dtau
    /// is halved on rejection, up to 20 times.
    pub fn step(
        &self,
        state: &RadialState,
        dtau: f64,
    ) -> Result<(RadialState, f64), FastDiffError> {
        if let Some(cell) = state.v.iter().position(|x| !(*x > 0.0)) {
            return Err(FastDiffError::PositivityLoss { cell });
        }
        let mut dt = dtau;
        for retry in 0..=20 {
            let mut v = state.v.clone();
            let mut gained = 0.0;
            let mut remaining = dtau;
            let mut ok = true;
            while remaining > 1e-300 {
                let h = dt.min(remaining);
                match self.attempt_step(&v, h) {
                    Some((vn, out)) => {
                        v = vn;
                        gained += out;
                        remaining -= h;
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Ok((
                    RadialState {
                        centers: self.centers.clone(),
                        v,
                        tau: state.tau + dtau,
                    },
                    gained,
                ));
            }
            dt *= 0.5;
            if retry == 20 {
                break;
            }
        }
        Err(FastDiffError::StabilityViolation {
            dtau: dt,
            retries: 20,
        })
    }

    /// Forward-Euler reference integrator (self-convergence oracle).
    pub fn step_explicit(&self, state: &RadialState, dtau: f64) -> Result<RadialState, FastDiffError> {
        let rhs = self.rhs(&state.v);
        let mut v = state.v.clone();
        for (i, x) in v.iter_mut().enumerate() {
            *x += dtau * rhs[i];
            if !(*x > 0.0) || !x.is_finite() {
                return Err(FastDiffError::PositivityLoss { cell: i });
            }
        }
        Ok(RadialState {
            centers: self.centers.clone(),
            v,
            tau: state.tau + dtau,
        })
    }

    /// Relative entropy E[v | B_ref] on the grid.
    pub fn relative_entropy(&self, v: &[f64]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n_cells() {
            e += self.params.entropy_density(v[i], self.b_ref[i]) * self.vol[i];
        }
        e.max(0.0)
    }

    /// Discrete Fisher information: sum over faces of
    /// v_f (dq_v - dq_B)(|dq_v|^{p-2} dq_v - |dq_B|^{p-2} dq_B) r^{N-1} dr,
    /// nonnegative term by term.
    pub fn fisher_information(&self, v: &[f64]) -> f64 {
        let n = self.n_cells();
        let p = self.params.p;
        let mut total = 0.0;
        for j in 1..=n {
            let (vlo, vhi, blo, bhi) = if j < n {
                (v[j - 1], v[j], self.b_ref[j - 1], self.b_ref[j])
            } else {
                (v[n - 1], self.b_ghost, self.b_ref[n - 1], self.b_ghost)
            };
            let dqv = (self.params.pressure(vhi) - self.params.pressure(vlo)) / self.dc[j];
            let dqb = (self.params.pressure(bhi) - self.params.pressure(blo)) / self.dc[j];
            let phiv = dqv.abs().powf(p - 2.0) * dqv;
            let phib = dqb.abs().powf(p - 2.0) * dqb;
            let vf = 0.5 * (vlo + vhi);
            let term = vf * (dqv - dqb) * (phiv - phib) * self.area[j] * self.dc[j];
            total += term.max(0.0);
        }
        total
    }

    /// L1 distance to the reference profile on the grid.
    pub fn l1_distance(&self, v: &[f64]) -> f64 {
        v.iter()
            .zip(&self.b_ref)
            .zip(&self.vol)
            .map(|((a, b), w)| (a - b).abs() * w)
            .sum()
    }
}

/// Thomas solve; returns None on a non-positive pivot.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if diag[0] == 0.0 {
        return None;
    }
    if n > 1 {
        c[0] = upper[0] / diag[0];
    }
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i - 1] * c[i - 1];
        if m == 0.0 || !m.is_finite() {
            return None;
        }
        if i < n - 1 {
            c[i] = upper[i] / m;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Some(x)
}

/// Initial datum descriptors sandwiched between two Barenblatt profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum U0Spec {
    /// u0 = B_d; the run reports AlreadyStationary.
    Barenblatt { d: f64 },
    /// u0(r) = lambda(r) B_{d0} + (1 - lambda(r)) B_{d1}, lambda = 0.5 + 0.4 cos r.
    Mixture { d0: f64, d1: f64 },
}

impl U0Spec {
    fn evaluate(&self, params: &DnleParams, r: f64) -> f64 {
        match *self {
            U0Spec::Barenblatt { d } => params.barenblatt_d(d, r),
            U0Spec::Mixture { d0, d1 } => {
                let lam = 0.5 + 0.4 * r.cos();
                lam * params.barenblatt_d(d0, r) + (1.0 - lam) * params.barenblatt_d(d1, r)
            }
        }
    }

    fn d_bounds(&self) -> (f64, f64) {
        match *self {
            U0Spec::Barenblatt { d } => (d, d),
            U0Spec::Mixture { d0, d1 } => (d0.min(d1), d0.max(d1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub tau: f64,
    pub entropy: f64,
    pub fisher: f64,
    pub l1_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrace {
    pub samples: Vec<TraceSample>,
    /// Fitted decay rate of E (absent when already stationary).
    pub fitted_mu: Option<f64>,
    /// lambda = mu / vartheta.
    pub lambda: Option<f64>,
    pub fit_window: (f64, f64),
    pub fit_r2: Option<f64>,
    /// Trace-wide Csiszar-Kullback constant: max of l1^2 / E.
    pub c_ck: Option<f64>,
    pub already_stationary: bool,
    /// Mass-matched Barenblatt parameter.
    pub d_star: f64,
    /// Relative mass defect over the run after boundary-flux accounting.
    pub mass_defect: f64,
}

/// Match the discrete grid mass of the sampled Barenblatt to a target by
/// monotone bisection on D.
pub fn match_mass(solver: &RadialSolver, target: f64) -> Result<f64, FastDiffError> {
    let mass_of = |d: f64| solver.mass(&solver.sample_barenblatt(d));
    let mut lo = solver.params.d;
    let mut hi = solver.params.d;
    // Mass decreases in D.
    for _ in 0..200 {
        if mass_of(lo) >= target {
            break;
        }
        lo *= 0.5;
    }
    for _ in 0..200 {
        if mass_of(hi) <= target {
            break;
        }
        hi *= 2.0;
    }
    if mass_of(lo) < target || mass_of(hi) > target {
        return Err(FastDiffError::MassMatchFailed);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass_of(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Evolve u0 to tau_end, record the entropy trace and fit the decay rate on
/// the last half of the trace.
pub fn run_and_fit(
    u0: &U0Spec,
    params: &DnleParams,
    n_cells: usize,
    tau_end: f64,
) -> Result<EntropyTrace, FastDiffError> {
    let (d_lo, d_hi) = u0.d_bounds();
    // Grid sized from the midpoint parameter, then the reference profile is
    // mass-matched on that fixed grid.
    let grid_params = params.with_d(0.5 * (d_lo + d_hi));
    let pre = RadialSolver::new(grid_params, n_cells, None);
    let u0_vals: Vec<f64> = pre.centers.iter().map(|&r| u0.evaluate(params, r)).collect();
    // Sandwich check against the outer profiles.
    let b_hi = pre.sample_barenblatt(d_lo);
    let b_lo = pre.sample_barenblatt(d_hi);
    for i in 0..n_cells {
        if !(u0_vals[i] >= b_lo[i] * (1.0 - 1e-12) && u0_vals[i] <= b_hi[i] * (1.0 + 1e-12)) {
            return Err(FastDiffError::NotSandwiched);
        }
    }
    let d_star = match_mass(&pre, pre.mass(&u0_vals))?;
    let solver = RadialSolver::new(params.with_d(d_star), n_cells, Some(pre.r_max()));
    let mass0 = solver.mass(&u0_vals);

    let mut state = RadialState {
        centers: solver.centers.clone(),
        v: u0_vals,
        tau: 0.0,
    };
    let e0 = solver.relative_entropy(&state.v);
    let scale = solver.relative_entropy(&solver.sample_barenblatt(0.5 * d_star));
    let mut samples = vec![TraceSample {
        tau: 0.0,
        entropy: e0,
        fisher: solver.fisher_information(&state.v),
        l1_distance: solver.l1_distance(&state.v),
    }];
    if e0 <= 1e-13 * scale.max(1e-300) {
        return Ok(EntropyTrace {
            samples,
            fitted_mu: None,
            lambda: None,
            fit_window: (0.0, tau_end),
            fit_r2: None,
            c_ck: None,
            already_stationary: true,
            d_star,
            mass_defect: 0.0,
        });
    }

    let dtau_rec = (tau_end / 200.0).max(1e-3);
    let dtau = solver.cfl_dtau().min(dtau_rec);
    let mut gain_total = 0.0;
    let mut tau = 0.0;
    while tau < tau_end - 1e-12 {
        let target = (tau + dtau_rec).min(tau_end);
        while state.tau < target - 1e-12 {
            let h = dtau.min(target - state.tau);
            let (next, out) = solver.step(&state, h)?;
            state = next;
            gain_total += out;
        }
        tau = target;
        samples.push(TraceSample {
            tau: state.tau,
            entropy: solver.relative_entropy(&state.v),
            fisher: solver.fisher_information(&state.v),
            l1_distance: solver.l1_distance(&state.v),
        });
    }
    let mass_defect = ((solver.mass(&state.v) - gain_total - mass0) / mass0).abs();

    // Least-squares fit of ln E over the last half of the trace.
    let t_lo = 0.5 * tau_end;
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.tau >= t_lo && s.entropy > 0.0)
        .map(|s| (s.tau, s.entropy.ln()))
        .collect();
    let (mu, r2) = fit_line(&pts);
    let c_ck = samples
        .iter()
        .filter(|s| s.entropy > 1e-300)
        .map(|s| s.l1_distance * s.l1_distance / s.entropy)
        .fold(0.0f64, f64::max);
    let trace = EntropyTrace {
        samples,
        fitted_mu: Some(-mu),
        lambda: Some(-mu / params.vartheta),
        fit_window: (t_lo, tau_end),
        fit_r2: Some(r2),
        c_ck: Some(c_ck),
        already_stationary: false,
        d_star,
        mass_defect,
    };
    if r2 < 0.99 {
        return Err(FastDiffError::FitUnreliable { r2 });
    }
    Ok(trace)
}

/// Least-squares slope and r^2 of y against x.
fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (0.0, 0.0);
    }
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    (slope, r2)
}
