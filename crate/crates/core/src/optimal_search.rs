//! Empirical estimation of optimal inequality constants by maximizing the
//! Rayleigh quotient over compactly supported piecewise-linear test functions:
//! a generalized-eigenvalue path for q = 2 and a subgradient ascent for other
//! q, both seeded from a truncated-dual-primitive witness. Every reported
//! value is the independently integrated quotient of a concrete test
//! function, hence a valid lower bound for the optimal constant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{self, Bound, QuadError, QuadratureSpec};
use crate::weights::{line_mass, line_median, MassVerdict, WeightError, WeightPair};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),
    #[error("stiffness degenerates on cell {0}: w2 integrates to zero there")]
    DegenerateStiffness(usize),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("no witness with quotient above threshold found within budget")]
    WitnessNotFound,
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Compactly supported piecewise-linear function on a 1D grid. The function
/// is linear between nodes and zero outside [grid.first, grid.last].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl TestFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self, SearchError> {
        if grid.len() != values.len() {
            return Err(SearchError::InvalidTestFunction(
                "grid and values must have equal length".into(),
            ));
        }
        if grid.len() < 2 {
            return Err(SearchError::InvalidTestFunction(
                "need at least two nodes".into(),
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SearchError::InvalidTestFunction(
                "grid must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SearchError::InvalidTestFunction(
                "values must be finite".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x < self.grid[0] || x > self.grid[n - 1] {
            return 0.0;
        }
        let idx = self.grid.partition_point(|&g| g <= x);
        if idx == 0 {
            return self.values[0];
        }
        if idx == n {
            return self.values[n - 1];
        }
        let (x0, x1) = (self.grid[idx - 1], self.grid[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    /// Constant slope on cell i (between grid[i] and grid[i+1]).
    pub fn slope(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / (self.grid[i + 1] - self.grid[i])
    }

    pub fn n_cells(&self) -> usize {
        self.grid.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Eigen,
    FixedPointAscent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighEstimate {
    /// Independently integrated quotient of the maximizer.
    pub value: f64,
    pub maximizer: TestFunction,
    pub iterations: usize,
    pub converged: bool,
    pub method: Method,
    /// Top eigenvalue had (near-)multiplicity; any maximizer returned.
    pub multiplicity: bool,
    pub notes: Vec<String>,
}

// ---------------------------------------------------------------------------
// Shared discretization caches.
// ---------------------------------------------------------------------------

// 8-point Gauss-Legendre on [-1, 1].
const GAUSS_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GAUSS_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

struct Disc {
    grid: Vec<f64>,
    /// Gauss abscissae and w1-weighted Gauss weights per cell.
    gx: Vec<[f64; 8]>,
    gw1: Vec<[f64; 8]>,
    /// Accurate cell integrals of w1, w2 and the dual w2^{-1/(q-1)}.
    cell_w1: Vec<f64>,
    cell_w2: Vec<f64>,
    cell_dual: Vec<f64>,
    /// w1 mass outside the grid: (left of grid[0], right of grid[n-1]).
    w1_out: (f64, f64),
    q: f64,
    /// Line problems subtract the w1-weighted mean; radial ones do not.
    mean_projection: bool,
    /// DOF layout: line = nodes 1..n-2; radial = nodes 0..n-2.
    free_left: bool,
}

impl Disc {
    fn n_dof(&self) -> usize {
        let n = self.grid.len();
        if self.free_left {
            n - 1
        } else {
            n - 2
        }
    }

    fn dof_to_node(&self, i: usize) -> usize {
        if self.free_left {
            i
        } else {
            i + 1
        }
    }

    fn full_values(&self, dof: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let mut v = vec![0.0; n];
        for (i, &x) in dof.iter().enumerate() {
            v[self.dof_to_node(i)] = x;
        }
        v
    }

    fn w1_total(&self) -> f64 {
        self.cell_w1.iter().sum::<f64>() + self.w1_out.0 + self.w1_out.1
    }

    /// Quotient from caches; f given as full node values.
    fn cheap_quotient(&self, values: &[f64]) -> f64 {
        let q = self.q;
        let n_cells = self.grid.len() - 1;
        let mean = if self.mean_projection {
            let mut fm = 0.0;
            for j in 0..n_cells {
                let (x0, x1) = (self.grid[j], self.grid[j + 1]);
                let (v0, v1) = (values[j], values[j + 1]);
                for g in 0..8 {
                    let t = (self.gx[j][g] - x0) / (x1 - x0);
                    fm += self.gw1[j][g] * (v0 + (v1 - v0) * t);
                }
            }
            fm / self.w1_total()
        } else {
            0.0
        };
        let mut num = 0.0;
        for j in 0..n_cells {
            let (x0, x1) = (self.grid[j], self.grid[j + 1]);
            let (v0, v1) = (values[j], values[j + 1]);
            for g in 0..8 {
                let t = (self.gx[j][g] - x0) / (x1 - x0);
                num += self.gw1[j][g] * (v0 + (v1 - v0) * t - mean).abs().powf(q);
            }
        }
        // Outside the support f = 0.
        num += mean.abs().powf(q) * (self.w1_out.0 + self.w1_out.1);
        if self.free_left {
            // Radial: constant extension of the left value to the origin.
            num += values[0].abs().powf(q) * self.w1_out.0;
        }
        let mut den = 0.0;
        for j in 0..n_cells {
            let h = self.grid[j + 1] - self.grid[j];
            let s = (values[j + 1] - values[j]) / h;
            den += s.abs().powf(q) * self.cell_w2[j];
        }
        if den <= 0.0 {
            return 0.0;
        }
        num / den
    }

    /// Gradient of ln(num) - ln(den) with respect to the DOF vector.
    fn grad_log_quotient(&self, dof: &[f64]) -> Vec<f64> {
        let q = self.q;
        let values = self.full_values(dof);
        let n_cells = self.grid.len() - 1;
        let n_dof = self.n_dof();
        let w_total = self.w1_total();

        // Mean and its gradient.
        let mut mean = 0.0;
        let mut dmean = vec![0.0; n_dof];
        if self.mean_projection {
            for j in 0..n_cells {
                let (x0, x1) = (self.grid[j], self.grid[j + 1]);
                for g in 0..8 {
                    let t = (self.gx[j][g] - x0) / (x1 - x0);
                    mean += self.gw1[j][g] * (values[j] + (values[j + 1] - values[j]) * t);
                    for (node, phi) in [(j, 1.0 - t), (j + 1, t)] {
                        if let Some(i) = self.node_to_dof(node) {
                            dmean[i] += self.gw1[j][g] * phi;
                        }
                    }
                }
            }
            mean /= w_total;
            for d in dmean.iter_mut() {
                *d /= w_total;
            }
        }

        let mut num = 0.0;
        let mut dnum = vec![0.0; n_dof];
        for j in 0..n_cells {
            let (x0, x1) = (self.grid[j], self.grid[j + 1]);
            for g in 0..8 {
                let t = (self.gx[j][g] - x0) / (x1 - x0);
                let f = values[j] + (values[j + 1] - values[j]) * t - mean;
                let a = f.abs();
                num += self.gw1[j][g] * a.powf(q);
                if a > 0.0 {
                    let coeff = self.gw1[j][g] * q * a.powf(q - 1.0) * f.signum();
                    for (node, phi) in [(j, 1.0 - t), (j + 1, t)] {
                        if let Some(i) = self.node_to_dof(node) {
                            dnum[i] += coeff * phi;
                        }
                    }
                    for i in 0..n_dof {
                        if dmean[i] != 0.0 {
                            dnum[i] -= coeff * dmean[i];
                        }
                    }
                }
            }
        }
        let out = self.w1_out.0 + self.w1_out.1;
        if self.mean_projection && mean.abs() > 0.0 && out > 0.0 {
            num += mean.abs().powf(q) * out;
            let coeff = q * mean.abs().powf(q - 1.0) * mean.signum() * out;
            for i in 0..n_dof {
                dnum[i] += coeff * dmean[i];
            }
        }
        if self.free_left && values[0].abs() > 0.0 && self.w1_out.0 > 0.0 {
            num += values[0].abs().powf(q) * self.w1_out.0;
            if let Some(i) = self.node_to_dof(0) {
                dnum[i] +=
                    q * values[0].abs().powf(q - 1.0) * values[0].signum() * self.w1_out.0;
            }
        }

        let mut den = 0.0;
        let mut dden = vec![0.0; n_dof];
        for j in 0..n_cells {
            let h = self.grid[j + 1] - self.grid[j];
            let s = (values[j + 1] - values[j]) / h;
            let a = s.abs();
            den += a.powf(q) * self.cell_w2[j];
            if a > 0.0 {
                let coeff = q * a.powf(q - 1.0) * s.signum() * self.cell_w2[j] / h;
                if let Some(i) = self.node_to_dof(j + 1) {
                    dden[i] += coeff;
                }
                if let Some(i) = self.node_to_dof(j) {
                    dden[i] -= coeff;
                }
            }
        }

        let mut grad = vec![0.0; n_dof];
        if num > 0.0 && den > 0.0 {
            for i in 0..n_dof {
                grad[i] = dnum[i] / num - dden[i] / den;
            }
        }
        grad
    }

    fn node_to_dof(&self, node: usize) -> Option<usize> {
        let n = self.grid.len();
        if node == n - 1 {
            return None;
        }
        if self.free_left {
            Some(node)
        } else if node == 0 {
            None
        } else {
            Some(node - 1)
        }
    }
}

fn build_disc<F1, F2>(
    grid: Vec<f64>,
    w1: &F1,
    w2: &F2,
    q: f64,
    w1_out: (f64, f64),
    mean_projection: bool,
    free_left: bool,
    singular_left: bool,
) -> Result<Disc, SearchError>
where
    F1: Fn(f64) -> f64,
    F2: Fn(f64) -> f64,
{
    let spec = QuadratureSpec::with_rel_tol(1e-9);
    let n_cells = grid.len() - 1;
    let mut gx = Vec::with_capacity(n_cells);
    let mut gw1 = Vec::with_capacity(n_cells);
    let mut cell_w1 = Vec::with_capacity(n_cells);
    let mut cell_w2 = Vec::with_capacity(n_cells);
    let mut cell_dual = Vec::with_capacity(n_cells);
    let ex = 1.0 / (q - 1.0);
    for j in 0..n_cells {
        let (x0, x1) = (grid[j], grid[j + 1]);
        let half = 0.5 * (x1 - x0);
        let mid = 0.5 * (x0 + x1);
        let mut xs = [0.0; 8];
        let mut ws = [0.0; 8];
        for g in 0..8 {
            xs[g] = mid + half * GAUSS_X[g];
            ws[g] = half * GAUSS_W[g] * w1(xs[g]).max(0.0);
            if !ws[g].is_finite() {
                ws[g] = 0.0;
            }
        }
        gx.push(xs);
        gw1.push(ws);
        let sing: Vec<f64> = if j == 0 && singular_left {
            vec![x0]
        } else {
            vec![]
        };
        cell_w1.push(quad::integrate_finite(&w1, x0, x1, &sing, &spec)?.value.max(0.0));
        let w2v = quad::integrate_finite(&w2, x0, x1, &sing, &spec)?.value.max(0.0);
        if w2v <= 0.0 {
            return Err(SearchError::DegenerateStiffness(j));
        }
        cell_w2.push(w2v);
        let dual_int = quad::integrate_finite(
            |x| {
                let v = w2(x);
                if v <= 0.0 {
                    f64::INFINITY
                } else {
                    v.powf(-ex)
                }
            },
            x0,
            x1,
            &sing,
            &spec,
        );
        cell_dual.push(match dual_int {
            Ok(r) if r.value.is_finite() => r.value.min(1e200),
            _ => 1e200,
        });
    }
    Ok(Disc {
        grid,
        gx,
        gw1,
        cell_w1,
        cell_w2,
        cell_dual,
        w1_out,
        q,
        mean_projection,
        free_left,
    })
}

// ---------------------------------------------------------------------------
// Witness initialization: truncated primitive of the dual weight.
// ---------------------------------------------------------------------------

/// Discrete Muckenhoupt witness on the grid. For each candidate plateau node
/// t*, the dual primitive rises from `anchor` to t*, stays flat, and descends
/// to zero in the dual metric toward the far end. The returned DOF vector
/// realizes (a constant multiple of) the best discrete product T * S^{q-1}.
fn witness_dof(disc: &Disc, anchor_node: usize, rightward: bool) -> Vec<f64> {
    let n = disc.grid.len();
    let n_cells = n - 1;
    let q = disc.q;
    // Cumulative dual from the anchor in the sweep direction, and w1 tail
    // beyond each node in the sweep direction.
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    if rightward {
        for j in anchor_node..n_cells {
            s[j + 1] = (s[j] + disc.cell_dual[j]).min(1e250);
        }
        t[n - 1] = disc.w1_out.1;
        for j in (0..n_cells).rev() {
            t[j] = t[j + 1] + disc.cell_w1[j];
        }
    } else {
        for j in (0..anchor_node).rev() {
            s[j] = (s[j + 1] + disc.cell_dual[j]).min(1e250);
        }
        t[0] = disc.w1_out.0;
        for j in 0..n_cells {
            t[j + 1] = t[j] + disc.cell_w1[j];
        }
    }
    // Best plateau start.
    let mut best_node = anchor_node;
    let mut best = 0.0;
    let range: Box<dyn Iterator<Item = usize>> = if rightward {
        Box::new(anchor_node..n)
    } else {
        Box::new(0..=anchor_node)
    };
    for k in range {
        if s[k] >= 1e250 {
            continue;
        }
        let p = t[k] * s[k].powf(q - 1.0);
        if p > best {
            best = p;
            best_node = k;
        }
    }
    let plateau = s[best_node];
    let mut vals = vec![0.0; n];
    if plateau <= 0.0 {
        // No usable witness; single interior hat as a fallback.
        vals[n / 2] = 1.0;
    } else if rightward {
        for k in anchor_node..n {
            vals[k] = s[k].min(plateau);
        }
        // Descend to zero over the far part of the grid in the dual metric.
        let dn = (best_node + 1).max(n - 1 - (n - 1 - best_node) / 4);
        let down_total: f64 = disc.cell_dual[dn.min(n_cells)..n_cells]
            .iter()
            .map(|d| d.min(1e250))
            .sum();
        if down_total > 0.0 && dn < n - 1 {
            let mut acc = 0.0;
            for k in dn..n {
                vals[k] = plateau * (1.0 - acc / down_total).max(0.0);
                if k < n_cells {
                    acc += disc.cell_dual[k].min(1e250);
                }
            }
        } else {
            for (k, v) in vals.iter_mut().enumerate().take(n).skip(dn) {
                *v *= 1.0 - (k - dn) as f64 / (n - 1 - dn).max(1) as f64;
            }
        }
        vals[n - 1] = 0.0;
    } else {
        for k in 0..=anchor_node {
            vals[k] = s[k].min(plateau);
        }
        let dn = best_node.saturating_sub(best_node / 4).min(best_node);
        let down_total: f64 = disc.cell_dual[0..dn.max(0)]
            .iter()
            .map(|d| d.min(1e250))
            .sum();
        if down_total > 0.0 && dn > 0 {
            let mut acc = 0.0;
            for k in (0..=dn).rev() {
                vals[k] = plateau * (1.0 - acc / down_total).max(0.0);
                if k > 0 {
                    acc += disc.cell_dual[k - 1].min(1e250);
                }
            }
        }
        vals[0] = 0.0;
    }
    if !disc.free_left {
        vals[0] = 0.0;
    }
    vals[n - 1] = 0.0;
    let mut dof = vec![0.0; disc.n_dof()];
    for (i, d) in dof.iter_mut().enumerate() {
        *d = vals[disc.dof_to_node(i)];
    }
    let m = dof.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if m > 0.0 {
        for d in dof.iter_mut() {
            *d /= m;
        }
    }
    dof
}

// ---------------------------------------------------------------------------
// q = 2: generalized eigenvalue by power iteration on K^{-1} A.
// ---------------------------------------------------------------------------

struct Tridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiag {
    fn mul(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = self.diag[i] * v[i];
            if i > 0 {
                y[i] += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                y[i] += self.off[i] * v[i + 1];
            }
        }
        y
    }

    /// Thomas solve (the stiffness matrix is SPD for positive weights).
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = self.off.first().copied().unwrap_or(0.0) / self.diag[0];
        d[0] = b[0] / self.diag[0];
        for i in 1..n {
            let m = self.diag[i] - self.off[i - 1] * c[i - 1];
            if i < n - 1 {
                c[i] = self.off[i] / m;
            }
            d[i] = (b[i] - self.off[i - 1] * d[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }
}

struct EigenProblem {
    mass: Tridiag,
    m_vec: Vec<f64>,
    w_total: f64,
    stiff: Tridiag,
    mean_projection: bool,
}

impl EigenProblem {
    fn apply_a(&self, v: &[f64]) -> Vec<f64> {
        let mut y = self.mass.mul(v);
        if self.mean_projection {
            let mv: f64 = self.m_vec.iter().zip(v).map(|(a, b)| a * b).sum();
            for i in 0..y.len() {
                y[i] -= self.m_vec[i] * mv / self.w_total;
            }
        }
        y
    }

    fn rayleigh(&self, v: &[f64]) -> f64 {
        let av = self.apply_a(v);
        let kv = self.stiff.mul(v);
        let num: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().zip(&kv).map(|(a, b)| a * b).sum();
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    fn power_iterate(&self, start: &[f64], deflate: Option<&[f64]>) -> (Vec<f64>, f64, usize, bool) {
        let n = start.len();
        let mut v = start.to_vec();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let k_inner = |a: &[f64], b: &[f64]| -> f64 {
            let kb = self.stiff.mul(b);
            a.iter().zip(&kb).map(|(x, y)| x * y).sum()
        };
        if norm(&v) == 0.0 {
            v = vec![1.0; n];
        }
        let mut lambda = self.rayleigh(&v);
        let mut iterations = 0;
        let mut converged = false;
        for it in 0..800 {
            iterations = it + 1;
            let mut y = self.stiff.solve(&self.apply_a(&v));
            if let Some(d) = deflate {
                let proj = k_inner(&y, d) / k_inner(d, d).max(1e-300);
                for i in 0..n {
                    y[i] -= proj * d[i];
                }
            }
            let ny = norm(&y);
            if ny == 0.0 {
                break;
            }
            for x in y.iter_mut() {
                *x /= ny;
            }
            let new_lambda = self.rayleigh(&y);
            let done = (new_lambda - lambda).abs() <= 1e-12 * new_lambda.abs().max(1e-300);
            v = y;
            lambda = new_lambda;
            if done && it > 3 {
                converged = true;
                break;
            }
        }
        (v, lambda, iterations, converged)
    }
}

fn assemble_eigen<F1, F2>(
    disc: &Disc,
    w1: &F1,
    w2: &F2,
) -> Result<EigenProblem, SearchError>
where
    F1: Fn(f64) -> f64,
    F2: Fn(f64) -> f64,
{
    let spec = QuadratureSpec::with_rel_tol(1e-9);
    let grid = &disc.grid;
    let n = grid.len();
    let n_dof = disc.n_dof();
    let mut mdiag = vec![0.0; n_dof];
    let mut moff = vec![0.0; n_dof.saturating_sub(1)];
    let mut mvec = vec![0.0; n_dof];
    let mut kdiag = vec![0.0; n_dof];
    let mut koff = vec![0.0; n_dof.saturating_sub(1)];
    for j in 0..n - 1 {
        let (x0, x1) = (grid[j], grid[j + 1]);
        let h = x1 - x0;
        let sing: Vec<f64> = if j == 0 && !disc.mean_projection && x0 <= 0.0 {
            vec![x0]
        } else {
            vec![]
        };
        let phi0 = |x: f64| (x1 - x) / h;
        let phi1 = |x: f64| (x - x0) / h;
        let m00 = quad::integrate_finite(|x| phi0(x) * phi0(x) * w1(x), x0, x1, &sing, &spec)?.value;
        let m01 = quad::integrate_finite(|x| phi0(x) * phi1(x) * w1(x), x0, x1, &sing, &spec)?.value;
        let m11 = quad::integrate_finite(|x| phi1(x) * phi1(x) * w1(x), x0, x1, &sing, &spec)?.value;
        let l0 = quad::integrate_finite(|x| phi0(x) * w1(x), x0, x1, &sing, &spec)?.value;
        let l1 = quad::integrate_finite(|x| phi1(x) * w1(x), x0, x1, &sing, &spec)?.value;
        let k_cell = disc.cell_w2[j] / (h * h);
        let d0 = disc.node_to_dof(j);
        let d1 = disc.node_to_dof(j + 1);
        if let Some(i) = d0 {
            mdiag[i] += m00.max(0.0);
            mvec[i] += l0.max(0.0);
            kdiag[i] += k_cell;
        }
        if let Some(i) = d1 {
            mdiag[i] += m11.max(0.0);
            mvec[i] += l1.max(0.0);
            kdiag[i] += k_cell;
        }
        if let (Some(i0), Some(i1)) = (d0, d1) {
            debug_assert_eq!(i1, i0 + 1);
            moff[i0] += m01.max(0.0);
            koff[i0] -= k_cell;
        }
        let _ = w2;
    }
    // Radial case: lumped origin mass attaches to the free left node.
    if disc.free_left && disc.w1_out.0 > 0.0 {
        mdiag[0] += disc.w1_out.0;
        mvec[0] += disc.w1_out.0;
    }
    Ok(EigenProblem {
        mass: Tridiag {
            diag: mdiag,
            off: moff,
        },
        m_vec: mvec,
        w_total: disc.w1_total(),
        stiff: Tridiag {
            diag: kdiag,
            off: koff,
        },
        mean_projection: disc.mean_projection,
    })
}

// ---------------------------------------------------------------------------
// q != 2: subgradient ascent on the log-quotient.
// ---------------------------------------------------------------------------

fn ascent(disc: &Disc, start: Vec<f64>, max_iters: usize) -> (Vec<f64>, usize, bool) {
    let mut dof = start;
    let mut j_cur = disc.cheap_quotient(&disc.full_values(&dof));
    if !(j_cur > 0.0) {
        return (dof, 0, false);
    }
    let mut j_log = j_cur.ln();
    let mut converged = false;
    let mut iterations = 0;
    let mut step = 0.5;
    for it in 0..max_iters {
        iterations = it + 1;
        let grad = disc.grad_log_quotient(&dof);
        let gnorm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            converged = true;
            break;
        }
        let vnorm = dof
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
            .max(1e-12);
        let mut improved = false;
        let mut t = step;
        for _ in 0..40 {
            let cand: Vec<f64> = dof
                .iter()
                .zip(&grad)
                .map(|(v, g)| v + t * vnorm * g / gnorm)
                .collect();
            let jc = disc.cheap_quotient(&disc.full_values(&cand));
            if jc > 0.0 && jc.ln() > j_log {
                let gain = jc.ln() - j_log;
                dof = cand;
                j_log = jc.ln();
                j_cur = jc;
                improved = true;
                step = (t * 2.0).min(1.0);
                if gain < 1e-8 {
                    converged = true;
                }
                break;
            }
            t *= 0.5;
        }
        if !improved {
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    let _ = j_cur;
    // Normalize the maximizer.
    let m = dof.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if m > 0.0 {
        for d in dof.iter_mut() {
            *d /= m;
        }
    }
    (dof, iterations, converged)
}

// ---------------------------------------------------------------------------
// Public estimation entry points.
// ---------------------------------------------------------------------------

/// Graded symmetric grid around `center` covering [center-span, center+span].
pub fn line_grid(center: f64, span: f64, n_nodes: usize) -> Vec<f64> {
    let half = n_nodes.max(16) / 2;
    let mut g = vec![center];
    let d0 = span * 1e-5;
    for k in 0..half {
        let off = d0 * (span / d0).powf(k as f64 / (half - 1) as f64);
        g.push(center + off);
        g.push(center - off);
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Geometric radial grid on [r_lo, r_hi].
pub fn radial_grid(r_lo: f64, r_hi: f64, n_nodes: usize) -> Vec<f64> {
    let n = n_nodes.max(16);
    (0..n)
        .map(|k| r_lo * (r_hi / r_lo).powf(k as f64 / (n - 1) as f64))
        .collect()
}

/// Accurate Rayleigh quotient of a test function for a line pair.
pub fn poincare_quotient(pair: &WeightPair, f: &TestFunction) -> Result<f64, SearchError> {
    pair.validate()?;
    let q = pair.q;
    let spec = QuadratureSpec::with_rel_tol(1e-10);
    let w_total = match line_mass(&pair.left)? {
        MassVerdict::Finite(v) => v,
        MassVerdict::Infinite => return Err(SearchError::PreconditionViolated(
            "w1 must be integrable for the Poincare quotient".into(),
        )),
    };
    let sing1 = pair.left.singular_points();
    let mut f_mass = 0.0;
    let mut w_supp = 0.0;
    for j in 0..f.n_cells() {
        let (x0, x1) = (f.grid[j], f.grid[j + 1]);
        f_mass += quad::integrate_finite(
            |x| f.evaluate(x) * pair.left.evaluate(x),
            x0,
            x1,
            &sing1,
            &spec,
        )?
        .value;
        w_supp +=
            quad::integrate_finite(|x| pair.left.evaluate(x), x0, x1, &sing1, &spec)?.value;
    }
    let mean = f_mass / w_total;
    let mut num = mean.abs().powf(q) * (w_total - w_supp).max(0.0);
    for j in 0..f.n_cells() {
        let (x0, x1) = (f.grid[j], f.grid[j + 1]);
        num += quad::integrate_finite(
            |x| (f.evaluate(x) - mean).abs().powf(q) * pair.left.evaluate(x),
            x0,
            x1,
            &sing1,
            &spec,
        )?
        .value;
    }
    let sing2 = pair.right.singular_points();
    let mut den = 0.0;
    for j in 0..f.n_cells() {
        let s = f.slope(j).abs();
        if s == 0.0 {
            continue;
        }
        let (x0, x1) = (f.grid[j], f.grid[j + 1]);
        den += s.powf(q)
            * quad::integrate_finite(|x| pair.right.evaluate(x), x0, x1, &sing2, &spec)?.value;
    }
    if den <= 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// Accurate radial Hardy quotient (no mean subtraction): the test function is
/// extended by its left value down to the origin.
pub fn radial_hardy_quotient(
    w1: &dyn Fn(f64) -> f64,
    w2: &dyn Fn(f64) -> f64,
    dimension: u32,
    q: f64,
    f: &TestFunction,
) -> Result<f64, SearchError> {
    let spec = QuadratureSpec::with_rel_tol(1e-10);
    let nm1 = dimension as i32 - 1;
    let mut num = 0.0;
    // Constant extension over [0, grid[0]].
    if f.grid[0] > 0.0 && f.values[0] != 0.0 {
        let lump = quad::integrate_finite(
            |r| w1(r) * r.powi(nm1),
            0.0,
            f.grid[0],
            &[0.0],
            &spec,
        )?
        .value;
        num += f.values[0].abs().powf(q) * lump;
    }
    for j in 0..f.n_cells() {
        let (x0, x1) = (f.grid[j], f.grid[j + 1]);
        num += quad::integrate_finite(
            |r| f.evaluate(r).abs().powf(q) * w1(r) * r.powi(nm1),
            x0,
            x1,
            &[],
            &spec,
        )?
        .value;
    }
    let mut den = 0.0;
    for j in 0..f.n_cells() {
        let s = f.slope(j).abs();
        if s == 0.0 {
            continue;
        }
        let (x0, x1) = (f.grid[j], f.grid[j + 1]);
        den += s.powf(q)
            * quad::integrate_finite(|r| w2(r) * r.powi(nm1), x0, x1, &[], &spec)?.value;
    }
    if den <= 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

fn run_search(
    disc: &Disc,
    mut seeds: Vec<Vec<f64>>,
    eigen: EigenProblem,
) -> (Vec<f64>, usize, bool, bool, Method) {
    if (disc.q - 2.0).abs() < 1e-12 {
        let problem = eigen;
        let mut best: Option<(Vec<f64>, f64, usize, bool)> = None;
        for seed in &seeds {
            let r = problem.power_iterate(seed, None);
            if best.as_ref().map_or(true, |b| r.1 > b.1) {
                best = Some(r);
            }
        }
        let (v, lambda, iters, converged) = best.unwrap();
        // Multiplicity probe: deflated second eigenvalue.
        let mut alt = vec![0.0; v.len()];
        for (i, a) in alt.iter_mut().enumerate() {
            *a = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        let (_, lambda2, _, _) = problem.power_iterate(&alt, Some(&v));
        let multiplicity = lambda2 >= lambda * (1.0 - 1e-6) && lambda > 0.0;
        (v, iters, converged, multiplicity, Method::Eigen)
    } else {
        // The eigen matrices do not depend on q, so the q = 2 eigenvector is
        // a strong extra seed for nearby exponents.
        let (eigen_seed, _, _, _) = eigen.power_iterate(&seeds[0], None);
        seeds.push(eigen_seed);
        let mut best: Option<(Vec<f64>, usize, bool, f64)> = None;
        for seed in seeds {
            let (v, iters, conv) = ascent(disc, seed, 500);
            let j = disc.cheap_quotient(&disc.full_values(&v));
            if best.as_ref().map_or(true, |b| j > b.3) {
                best = Some((v, iters, conv, j));
            }
        }
        let (v, iters, conv, _) = best.unwrap();
        (v, iters, conv, false, Method::FixedPointAscent)
    }
}

fn perturbed_seeds(base: Vec<Vec<f64>>, n_dof: usize, restarts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = base;
    let template = out[0].clone();
    while out.len() < restarts {
        let mut v = template.clone();
        for x in v.iter_mut() {
            *x *= 1.0 + 0.1 * (rng.gen::<f64>() - 0.5);
            *x += 0.02 * (rng.gen::<f64>() - 0.5);
        }
        if v.iter().all(|&x| x == 0.0) {
            v[n_dof / 2] = 1.0;
        }
        out.push(v);
    }
    out
}

/// Estimate the optimal constant of the line Poincare inequality by
/// Rayleigh-quotient maximization over piecewise-linear test functions on a
/// graded grid covering [median - span, median + span].
pub fn estimate_poincare_constant(
    pair: &WeightPair,
    n_nodes: usize,
    span: f64,
    seed: u64,
) -> Result<RayleighEstimate, SearchError> {
    pair.validate()?;
    if n_nodes < 16 {
        return Err(SearchError::PreconditionViolated("n_nodes >= 16".into()));
    }
    let mm = line_median(&pair.left)?;
    let grid = line_grid(mm.median, span, n_nodes);
    estimate_poincare_on_grid(pair, grid, seed)
}

/// Same as estimate_poincare_constant on an explicit grid (used for nested
/// refinement checks).
pub fn estimate_poincare_on_grid(
    pair: &WeightPair,
    grid: Vec<f64>,
    seed: u64,
) -> Result<RayleighEstimate, SearchError> {
    let q = pair.q;
    let spec = QuadratureSpec::with_rel_tol(1e-9);
    let w1f = |x: f64| pair.left.evaluate(x);
    let w2f = |x: f64| pair.right.evaluate(x);
    let sing1 = pair.left.singular_points();
    let first = grid[0];
    let last = *grid.last().unwrap();
    let left_out = quad::integrate(&w1f, Bound::NegInf, Bound::Finite(first), &sing1, &spec)?
        .value
        .max(0.0);
    let right_out = quad::integrate(&w1f, Bound::Finite(last), Bound::PosInf, &sing1, &spec)?
        .value
        .max(0.0);
    let disc = build_disc(
        grid,
        &w1f,
        &w2f,
        q,
        (left_out, right_out),
        true,
        false,
        false,
    )?;
    // Witnesses on both sides of the median node (closest node to center).
    let center = disc.grid.len() / 2;
    let seeds = perturbed_seeds(
        vec![
            witness_dof(&disc, center, true),
            witness_dof(&disc, center, false),
        ],
        disc.n_dof(),
        4,
        seed.wrapping_add(7),
    );
    let eigen = assemble_eigen(&disc, &w1f, &w2f)?;
    let (dof, iterations, converged, multiplicity, method) = run_search(&disc, seeds, eigen);
    let maximizer = TestFunction::new(disc.grid.clone(), disc.full_values(&dof))?;
    let value = poincare_quotient(pair, &maximizer)?;
    let mut notes = Vec::new();
    if multiplicity {
        notes.push("top eigenvalue has near-multiplicity; any maximizer returned".into());
    }
    Ok(RayleighEstimate {
        value,
        maximizer,
        iterations,
        converged,
        method,
        multiplicity,
        notes,
    })
}

/// Estimate the optimal radial Hardy constant for plain radial weights
/// (w1, w2) on R^N (the r^{N-1} measure factor is added internally). Also
/// records the quotient trend of the maximizer under dilations f(s x).
pub fn estimate_hardy_constant(
    w1: &dyn Fn(f64) -> f64,
    w2: &dyn Fn(f64) -> f64,
    dimension: u32,
    q: f64,
    n_nodes: usize,
    span: f64,
    seed: u64,
) -> Result<RayleighEstimate, SearchError> {
    if n_nodes < 16 {
        return Err(SearchError::PreconditionViolated("n_nodes >= 16".into()));
    }
    let grid = radial_grid((1e-4f64).min(span * 1e-8), span, n_nodes);
    let nm1 = dimension as i32 - 1;
    let w1d = |r: f64| w1(r) * r.powi(nm1);
    let w2d = |r: f64| w2(r) * r.powi(nm1);
    let spec = QuadratureSpec::with_rel_tol(1e-9);
    let origin_lump = quad::integrate_finite(&w1d, 0.0, grid[0], &[0.0], &spec)
        .map(|r| r.value.max(0.0))
        .unwrap_or(0.0);
    let disc = build_disc(grid, &w1d, &w2d, q, (origin_lump, 0.0), false, true, true)?;
    // Hardy witnesses: plateau-from-origin (f free at 0, dual primitive
    // decreasing toward the right end) and the mirror orientation.
    let n = disc.grid.len();
    let seeds = perturbed_seeds(
        vec![
            witness_dof(&disc, n - 1, false),
            witness_dof(&disc, 0, true),
        ],
        disc.n_dof(),
        4,
        seed.wrapping_add(11),
    );
    let eigen = assemble_eigen(&disc, &w1d, &w2d)?;
    let (dof, iterations, converged, multiplicity, method) = run_search(&disc, seeds, eigen);
    let maximizer = TestFunction::new(disc.grid.clone(), disc.full_values(&dof))?;
    let value = radial_hardy_quotient(w1, w2, dimension, q, &maximizer)?;
    let mut notes = Vec::new();
    if multiplicity {
        notes.push("top eigenvalue has near-multiplicity; any maximizer returned".into());
    }
    // Rescaling trend f(s x): the quotient along dilations of the maximizer.
    let mut trend = Vec::new();
    for s in [2.0, 4.0] {
        let grid_s: Vec<f64> = maximizer.grid.iter().map(|&r| r / s).collect();
        if let Ok(fs) = TestFunction::new(grid_s, maximizer.values.clone()) {
            if let Ok(qv) = radial_hardy_quotient(w1, w2, dimension, q, &fs) {
                trend.push(qv);
            }
        }
    }
    notes.push(format!(
        "rescaling trend (quotient of maximizer under x -> s x, s = 2, 4): {:?}",
        trend
    ));
    Ok(RayleighEstimate {
        value,
        maximizer,
        iterations,
        converged,
        method,
        multiplicity,
        notes,
    })
}

/// When line certification fails, exhibit a concrete test function with a
/// huge quotient, following the truncated-primitive witness construction on
/// the divergent side.
pub fn counterexample_search(
    pair: &WeightPair,
    budget: usize,
) -> Result<TestFunction, SearchError> {
    let report = crate::criteria::certify_poincare_line(pair).map_err(|e| {
        SearchError::PreconditionViolated(format!("certification failed to run: {e}"))
    })?;
    if report.holds {
        return Err(SearchError::PreconditionViolated(
            "certification holds; no counterexample exists".into(),
        ));
    }
    let plus_diverges = report
        .b_plus
        .as_ref()
        .map(|b| !b.value.is_finite())
        .unwrap_or(false);
    let eta = report.median;
    let threshold = 1e3;
    for k in 0..budget.max(1) {
        let span = 8.0 * (eta.abs() + 1.0) * 2f64.powi(k as i32);
        let grid = line_grid(eta, span, 256);
        let pairq = pair.q;
        let w1f = |x: f64| pair.left.evaluate(x);
        let w2f = |x: f64| pair.right.evaluate(x);
        let disc = match build_disc(grid, &w1f, &w2f, pairq, (0.0, 0.0), true, false, false) {
            Ok(d) => d,
            Err(_) => continue,
        };
        let center = disc.grid.len() / 2;
        let dof = witness_dof(&disc, center, plus_diverges);
        let f = TestFunction::new(disc.grid.clone(), disc.full_values(&dof))?;
        let quotient = poincare_quotient(pair, &f)?;
        if quotient > threshold {
            return Ok(f);
        }
    }
    Err(SearchError::WitnessNotFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria;
    use crate::weights::{Domain, LineWeight};

    fn pair(left: LineWeight, right: LineWeight, q: f64) -> WeightPair {
        WeightPair {
            left,
            right,
            domain: Domain::Line,
            q,
        }
    }

    #[test]
    fn piecewise_linear_evaluation() {
        let f = TestFunction::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.evaluate(0.5), 0.5);
        assert_eq!(f.evaluate(1.5), 0.5);
        assert_eq!(f.evaluate(-1.0), 0.0);
        assert_eq!(f.evaluate(3.0), 0.0);
        assert_eq!(f.slope(0), 1.0);
        assert_eq!(f.slope(1), -1.0);
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(TestFunction::new(vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
        assert!(TestFunction::new(vec![0.0], vec![0.0]).is_err());
        assert!(TestFunction::new(vec![0.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn gaussian_spectral_gap() {
        // w1 = w2 = exp(-x^2/2): the optimal constant is 1 (Hermite gap).
        let p = pair(LineWeight::Gaussian, LineWeight::Gaussian, 2.0);
        let est = estimate_poincare_constant(&p, 256, 12.0, 0).unwrap();
        assert!(est.converged);
        assert!(
            (est.value - 1.0).abs() < 0.02,
            "estimate {} should be within 2% of 1",
            est.value
        );
        assert!(est.value <= 1.0 + 1e-6, "Rayleigh estimate cannot exceed the optimum");
    }

    #[test]
    fn double_exponential_in_sandwich() {
        let p = pair(
            LineWeight::Exponential { rate: 1.0 },
            LineWeight::Exponential { rate: 1.0 },
            2.0,
        );
        let est = estimate_poincare_constant(&p, 256, 40.0, 0).unwrap();
        let rep = criteria::certify_poincare_line(&p).unwrap();
        let lo = rep.lower_bound.unwrap();
        let up = rep.upper_bound.unwrap();
        assert!(
            est.value >= lo * 0.95 && est.value <= up * 1.05,
            "estimate {} outside [{lo}, {up}]",
            est.value
        );
    }

    #[test]
    fn lower_bound_validity() {
        // The reported value reproduces under independent quadrature.
        let p = pair(LineWeight::Gaussian, LineWeight::Gaussian, 2.0);
        let est = estimate_poincare_constant(&p, 128, 10.0, 0).unwrap();
        let again = poincare_quotient(&p, &est.maximizer).unwrap();
        assert!((again - est.value).abs() <= 1e-6 * est.value);
    }

    #[test]
    fn refinement_monotone_on_nested_grids() {
        let p = pair(LineWeight::Gaussian, LineWeight::Gaussian, 2.0);
        let coarse = line_grid(0.0, 10.0, 64);
        let mut fine = coarse.clone();
        for w in coarse.windows(2) {
            fine.push(0.5 * (w[0] + w[1]));
        }
        fine.sort_by(f64::total_cmp);
        let e1 = estimate_poincare_on_grid(&p, coarse, 0).unwrap();
        let e2 = estimate_poincare_on_grid(&p, fine, 0).unwrap();
        assert!(e2.value >= e1.value - 1e-8, "{} < {}", e2.value, e1.value);
    }

    #[test]
    fn ascent_path_agrees_with_eigen_near_q_two() {
        let p2 = pair(LineWeight::Gaussian, LineWeight::Gaussian, 2.0);
        let p2eps = pair(LineWeight::Gaussian, LineWeight::Gaussian, 2.0 + 1e-9);
        let a = estimate_poincare_constant(&p2, 96, 10.0, 0).unwrap();
        let b = estimate_poincare_constant(&p2eps, 96, 10.0, 0).unwrap();
        assert_eq!(a.method, Method::Eigen);
        assert_eq!(b.method, Method::FixedPointAscent);
        assert!(
            (a.value - b.value).abs() < 0.01 * a.value,
            "eigen {} vs ascent {}",
            a.value,
            b.value
        );
    }

    #[test]
    fn counterexample_found_for_divergent_pair() {
        let p = pair(
            LineWeight::Exponential { rate: 1.0 },
            LineWeight::Exponential { rate: 2.0 },
            2.0,
        );
        let witness = counterexample_search(&p, 8).unwrap();
        let quotient = poincare_quotient(&p, &witness).unwrap();
        assert!(quotient > 1e3);
    }

    #[test]
    fn counterexample_rejected_when_certified() {
        let p = pair(
            LineWeight::Exponential { rate: 1.0 },
            LineWeight::Exponential { rate: 1.0 },
            2.0,
        );
        assert!(matches!(
            counterexample_search(&p, 4),
            Err(SearchError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn radial_hardy_classical_constant() {
        // w1 = 1, w2 = r^2, N = 3, q = 2: optimal constant (q/N)^q = 4/9.
        let w1 = |_r: f64| 1.0;
        let w2 = |r: f64| r * r;
        let est = estimate_hardy_constant(&w1, &w2, 3, 2.0, 256, 1e8, 0).unwrap();
        assert!(
            est.value > 0.95 * 4.0 / 9.0 && est.value <= 4.0 / 9.0 + 1e-6,
            "estimate {} vs 4/9",
            est.value
        );
    }
}
