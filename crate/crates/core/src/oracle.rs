//! Direct collocation of the integro-differential equation of motion. This
//! solver never uses the fourth-order reduction and serves as the reference
//! for the closed form.
//!
//! At every interior node the discrete equation is
//!
//! ```text
//! m (q[i-1] - 2 q[i] + q[i+1]) / h^2 + (A' - 2B)(s_i) q[i]
//!   - P(s_i) q[0] - Q(s_i) q[n-1]
//!   - F(s_i) sum_{j<=i} c_ij alpha(s_i, s_j) q[j]
//!   - sum_{j>=i} c_ij alpha(s_j, s_i) F(s_j) q[j]  =  D(s_i) - C'(s_i)
//! ```
//!
//! with trapezoid weights `c_ij` on the partial ranges. For the oscillator
//! this is `m q'' + k q + k~ sum_j w_j alpha(s_i, s_j) q[j] = 0`. Two more
//! rows fix `q(0)` and either `q(t)` or the one-sided second-order
//! difference `(-3 q[0] + 4 q[1] - q[2]) / 2h` for `q'(0)`.
//!
//! Systems are solved by dense LU with partial pivoting. For the oscillator
//! with the exponential kernel there is also an O(n) banded path: the
//! matrix `E_ij = rho^|i-j|`, `rho = exp(-gamma h)`, has a tridiagonal
//! inverse, so introducing `u = E W q` as extra unknowns gives a banded
//! system of size `2n`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::BoundaryData;
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, Path};
use crate::kernel::MemoryKernel;
use crate::lagrangian::{Lagrangian, OscillatorParams, ReducedLagrangian, ToReduced};
use crate::quadrature::trapezoid_weights;

/// Systems whose equilibrated LU has a pivot ratio below this are reported
/// as singular.
const PIVOT_RATIO_MIN: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Banded for the oscillator with exponential kernel, dense otherwise.
    #[default]
    Auto,
    Dense,
    Banded,
}

/// A dense collocation system.
#[derive(Debug, Clone)]
pub struct CollocationSystem {
    pub grid: Grid,
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Rows holding the two boundary conditions.
    pub condition_rows: [usize; 2],
}

/// Oracle output with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub path: Path,
    pub method: SolverMethod,
    /// `min |U_ii| / max |U_ii|` after row equilibration; a cheap
    /// conditioning indicator.
    pub pivot_ratio: f64,
}

impl CollocationSystem {
    /// System for the oscillator with an arbitrary kernel (`gamma` in
    /// `params` is ignored).
    pub fn oscillator(
        params: &OscillatorParams,
        kernel: &MemoryKernel,
        grid: Grid,
        boundary: BoundaryData,
    ) -> Result<CollocationSystem> {
        let mut spec = params.to_reduced(grid.t_end())?;
        spec.kernel = kernel.clone();
        CollocationSystem::reduced(&spec, grid, boundary)
    }

    pub fn reduced(spec: &ReducedLagrangian, grid: Grid, boundary: BoundaryData) -> Result<CollocationSystem> {
        spec.validate()?;
        check_size(&grid)?;
        check_boundary(boundary)?;
        let n = grid.len();
        let h = grid.step();
        let kernel = &spec.kernel;
        let f: Vec<f64> = spec.f.sample(&grid);
        let inertia = spec.m / (h * h);
        // Rows: 0 -> q(0), 1 -> second condition, 2.. -> interior nodes 1..n-1.
        let interior: Vec<(Vec<f64>, f64)> = (1..n - 1)
            .into_par_iter()
            .map(|i| -> Result<(Vec<f64>, f64)> {
                let s = grid.node(i);
                let mut row = vec![0.0; n];
                row[i - 1] += inertia;
                row[i] += -2.0 * inertia + spec.a.derivative(s) - 2.0 * spec.b.value(s);
                row[i + 1] += inertia;
                row[0] -= spec.initial_anchor.value(s);
                row[n - 1] -= spec.final_anchor.value(s);
                match kernel {
                    MemoryKernel::DiracLimit => row[i] -= 0.5 * f[i] + 0.5 * f[i],
                    _ => {
                        for j in 0..=i {
                            let c = if j == 0 || j == i { 0.5 * h } else { h };
                            row[j] -= f[i] * c * kernel.node_eval(&grid, i, j)?;
                        }
                        for j in i..n {
                            let c = if j == i || j == n - 1 { 0.5 * h } else { h };
                            row[j] -= c * kernel.node_eval(&grid, j, i)? * f[j];
                        }
                    }
                }
                Ok((row, spec.d.value(s) - spec.c.derivative(s)))
            })
            .collect::<Result<_>>()?;
        let mut matrix = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        matrix[(0, 0)] = 1.0;
        match boundary {
            BoundaryData::Initial { q0, v0 } => {
                rhs[0] = q0;
                matrix[(1, 0)] = -1.5 / h;
                matrix[(1, 1)] = 2.0 / h;
                matrix[(1, 2)] = -0.5 / h;
                rhs[1] = v0;
            }
            BoundaryData::TwoPoint { q0, q_bar } => {
                rhs[0] = q0;
                matrix[(1, n - 1)] = 1.0;
                rhs[1] = q_bar;
            }
        }
        for (k, (row, b)) in interior.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                matrix[(k + 2, j)] = v;
            }
            rhs[k + 2] = b;
        }
        Ok(CollocationSystem {
            grid,
            matrix,
            rhs,
            condition_rows: [0, 1],
        })
    }

    /// Dense LU with partial pivoting after row equilibration.
    pub fn solve(&self) -> Result<OracleSolution> {
        let mut a = self.matrix.clone();
        let mut b = self.rhs.clone();
        for i in 0..a.nrows() {
            let s = a.row(i).iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if s == 0.0 {
                return Err(Error::IllPosed(format!("collocation row {i} vanishes")));
            }
            a.row_mut(i).scale_mut(1.0 / s);
            b[i] /= s;
        }
        let lu = a.lu();
        let diag = lu.u().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
        let pivot_ratio = lo / hi;
        if !(pivot_ratio > PIVOT_RATIO_MIN) {
            return Err(Error::IllPosed(format!(
                "collocation matrix is numerically singular (pivot ratio {pivot_ratio:.3e})"
            )));
        }
        let x = lu
            .solve(&b)
            .ok_or_else(|| Error::IllPosed("collocation LU solve failed".into()))?;
        let path = Path::new(self.grid, x.iter().copied().collect())
            .map_err(|_| Error::IllPosed("collocation solution is not finite".into()))?;
        Ok(OracleSolution {
            path,
            method: SolverMethod::Dense,
            pivot_ratio,
        })
    }
}

fn check_size(grid: &Grid) -> Result<()> {
    if grid.len() < 5 {
        return Err(invalid(format!("the collocation oracle needs n >= 5, got {}", grid.len())));
    }
    Ok(())
}

fn check_boundary(boundary: BoundaryData) -> Result<()> {
    let ok = match boundary {
        BoundaryData::Initial { q0, v0 } => q0.is_finite() && v0.is_finite(),
        BoundaryData::TwoPoint { q0, q_bar } => q0.is_finite() && q_bar.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(invalid("boundary data must be finite"))
    }
}

/// Solves the oscillator equation with `kernel` on `n` nodes.
pub fn solve_integro(
    params: &OscillatorParams,
    kernel: &MemoryKernel,
    boundary: BoundaryData,
    t_end: f64,
    n: usize,
    method: SolverMethod,
) -> Result<OracleSolution> {
    params.validate()?;
    kernel.validate()?;
    let grid = Grid::uniform(t_end, n)?;
    check_size(&grid)?;
    check_boundary(boundary)?;
    let banded = match (method, kernel) {
        (SolverMethod::Dense, _) => false,
        (_, MemoryKernel::Exponential { .. }) => true,
        (SolverMethod::Banded, _) => {
            return Err(Error::UnsupportedKernel(
                "the banded solver needs the exponential kernel".into(),
            ))
        }
        (SolverMethod::Auto, _) => false,
    };
    if banded {
        solve_banded(params, kernel.gamma().unwrap_or(params.gamma), grid, boundary)
    } else {
        CollocationSystem::oscillator(params, kernel, grid, boundary)?.solve()
    }
}

/// Initial-value problem `q(0) = q0`, `q'(0) = v0`.
pub fn solve_integro_ivp(
    params: &OscillatorParams,
    kernel: &MemoryKernel,
    q0: f64,
    v0: f64,
    t_end: f64,
    n: usize,
) -> Result<Path> {
    let b = BoundaryData::Initial { q0, v0 };
    Ok(solve_integro(params, kernel, b, t_end, n, SolverMethod::Auto)?.path)
}

/// Two-point problem `q(0) = q0`, `q(t) = q_bar`.
pub fn solve_integro_bvp(
    params: &OscillatorParams,
    kernel: &MemoryKernel,
    q0: f64,
    q_bar: f64,
    t_end: f64,
    n: usize,
) -> Result<Path> {
    let b = BoundaryData::TwoPoint { q0, q_bar };
    Ok(solve_integro(params, kernel, b, t_end, n, SolverMethod::Auto)?.path)
}

/// Dense solve of the reduced equation of motion. The anchor terms make it
/// depend on `q(0)` and `q(t)`, which stay unknowns of the system.
pub fn solve_reduced(spec: &ReducedLagrangian, boundary: BoundaryData, t_end: f64, n: usize) -> Result<Path> {
    let grid = Grid::uniform(t_end, n)?;
    Ok(CollocationSystem::reduced(spec, grid, boundary)?.solve()?.path)
}

/// Row-major band storage with room for the fill-in of partial pivoting.
struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    fn new(n: usize, kl: usize, ku: usize) -> BandMatrix {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    fn scale_row(&mut self, i: usize, s: f64, rhs: &mut [f64]) {
        let start = i * self.width;
        for v in &mut self.data[start..start + self.width] {
            *v *= s;
        }
        rhs[i] *= s;
    }

    fn row_max(&self, i: usize) -> f64 {
        let start = i * self.width;
        self.data[start..start + self.width].iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Gaussian elimination with partial pivoting; returns the solution and
    /// the pivot ratio.
    fn solve(mut self, mut b: Vec<f64>) -> Result<(Vec<f64>, f64)> {
        let n = self.n;
        let reach = self.kl + self.ku;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let p = (k..=last)
                .max_by(|&a, &c| self.get(a, k).abs().total_cmp(&self.get(c, k).abs()))
                .unwrap_or(k);
            let pivot = self.get(p, k);
            if pivot == 0.0 {
                return Err(Error::IllPosed(format!("zero pivot in banded solve at column {k}")));
            }
            let right = (k + reach).min(n - 1);
            if p != k {
                for j in k..=right {
                    let (a, c) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, c);
                }
                b.swap(k, p);
            }
            lo = lo.min(pivot.abs());
            hi = hi.max(pivot.abs());
            for i in k + 1..=last {
                let l = self.get(i, k) / pivot;
                if l == 0.0 {
                    continue;
                }
                for j in k..=right {
                    let v = self.get(k, j);
                    self.add(i, j, -l * v);
                }
                b[i] -= l * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let right = (k + reach).min(n - 1);
            let mut acc = b[k];
            for (j, xj) in x.iter().enumerate().take(right + 1).skip(k + 1) {
                acc -= self.get(k, j) * xj;
            }
            x[k] = acc / self.get(k, k);
        }
        Ok((x, lo / hi))
    }
}

/// O(n) solve of the oscillator with exponential kernel. Unknowns are
/// interleaved as `(q_0, u_0, q_1, u_1, ...)` with `u = E W q`, so that the
/// memory term at node `i` is `(gamma / 2) u_i`.
fn solve_banded(params: &OscillatorParams, gamma: f64, grid: Grid, boundary: BoundaryData) -> Result<OracleSolution> {
    let n = grid.len();
    let h = grid.step();
    let rho = (-gamma * h).exp();
    let w = trapezoid_weights(n, h);
    let size = 2 * n;
    let mut a = BandMatrix::new(size, 5, 3);
    let mut rhs = vec![0.0; size];
    let q = |i: usize| 2 * i;
    let u = |i: usize| 2 * i + 1;

    // (E^-1 (1 - rho^2)) u = (1 - rho^2) W q at even slots.
    for i in 0..n {
        let row = 2 * i;
        let diag = if i == 0 || i == n - 1 { 1.0 } else { 1.0 + rho * rho };
        a.add(row, u(i), diag);
        if i > 0 {
            a.add(row, u(i - 1), -rho);
        }
        if i + 1 < n {
            a.add(row, u(i + 1), -rho);
        }
        a.add(row, q(i), -(1.0 - rho * rho) * w[i]);
    }
    let inertia = params.m / (h * h);
    let memory = 0.5 * params.k_tilde * gamma;
    let mut interior = |row: usize, i: usize| {
        a.add(row, q(i - 1), inertia);
        a.add(row, q(i), -2.0 * inertia + params.k);
        a.add(row, q(i + 1), inertia);
        a.add(row, u(i), memory);
    };
    match boundary {
        BoundaryData::Initial { q0, v0 } => {
            for i in 1..n - 1 {
                interior(2 * (i + 1) + 1, i);
            }
            a.add(1, q(0), 1.0);
            rhs[1] = q0;
            a.add(3, q(0), -1.5 / h);
            a.add(3, q(1), 2.0 / h);
            a.add(3, q(2), -0.5 / h);
            rhs[3] = v0;
        }
        BoundaryData::TwoPoint { q0, q_bar } => {
            for i in 1..n - 1 {
                interior(2 * i + 1, i);
            }
            a.add(1, q(0), 1.0);
            rhs[1] = q0;
            a.add(2 * n - 1, q(n - 1), 1.0);
            rhs[2 * n - 1] = q_bar;
        }
    }
    for i in 0..size {
        let s = a.row_max(i);
        if s == 0.0 {
            return Err(Error::IllPosed(format!("banded row {i} vanishes")));
        }
        a.scale_row(i, 1.0 / s, &mut rhs);
    }
    let (z, pivot_ratio) = a.solve(rhs)?;
    if !(pivot_ratio > PIVOT_RATIO_MIN) {
        return Err(Error::IllPosed(format!(
            "banded collocation system is numerically singular (pivot ratio {pivot_ratio:.3e})"
        )));
    }
    let qs: Vec<f64> = (0..n).map(|i| z[q(i)]).collect();
    let path = Path::new(grid, qs).map_err(|_| Error::IllPosed("collocation solution is not finite".into()))?;
    Ok(OracleSolution {
        path,
        method: SolverMethod::Banded,
        pivot_ratio,
    })
}

/// Observed convergence order from a refinement sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEstimate {
    pub sizes: Vec<usize>,
    /// Error measures, one per refinement step.
    pub errors: Vec<f64>,
    /// Order between consecutive error measures.
    pub orders: Vec<f64>,
    /// Order of the finest pair.
    pub order: Option<f64>,
    /// Set when errors vanish or fail to decrease, so no order can be read.
    pub inconclusive: bool,
}

impl ConvergenceEstimate {
    /// `errors[k]` belongs to grid `sizes[k]`; consecutive grids must be
    /// nested.
    pub fn from_errors(sizes: Vec<usize>, errors: Vec<f64>) -> Result<ConvergenceEstimate> {
        if sizes.len() != errors.len() || sizes.len() < 2 {
            return Err(invalid("need at least two (size, error) pairs"));
        }
        let mut orders = Vec::new();
        let mut inconclusive = false;
        for k in 0..sizes.len() - 1 {
            let ratio = (sizes[k + 1] - 1) as f64 / (sizes[k] - 1) as f64;
            let (e0, e1) = (errors[k], errors[k + 1]);
            if !(e0 > 0.0 && e1 > 0.0 && e1 < e0) || ratio <= 1.0 {
                inconclusive = true;
                continue;
            }
            orders.push((e0 / e1).ln() / ratio.ln());
        }
        let order = if inconclusive { None } else { orders.last().copied() };
        Ok(ConvergenceEstimate {
            sizes,
            errors,
            orders,
            order,
            inconclusive,
        })
    }
}

/// Self-convergence: solves on each size in `sizes` (nested grids, at least
/// three) and measures `max |q_{k+1} - q_k|` on the coarser nodes.
pub fn estimate_convergence(
    sizes: &[usize],
    mut solve: impl FnMut(usize) -> Result<Path>,
) -> Result<ConvergenceEstimate> {
    if sizes.len() < 3 {
        return Err(invalid("convergence estimation needs at least three grid sizes"));
    }
    for pair in sizes.windows(2) {
        if pair[1] <= pair[0] || (pair[1] - 1) % (pair[0] - 1) != 0 {
            return Err(invalid(format!("grid sizes {} and {} are not nested", pair[0], pair[1])));
        }
    }
    let paths = sizes.iter().map(|&n| solve(n)).collect::<Result<Vec<_>>>()?;
    let diffs = paths
        .windows(2)
        .map(|pair| {
            let stride = (pair[1].grid().len() - 1) / (pair[0].grid().len() - 1);
            let (c, f) = (pair[0].positions(), pair[1].positions());
            c.iter()
                .enumerate()
                .fold(0.0_f64, |m, (i, x)| m.max((x - f[i * stride]).abs()))
        })
        .collect();
    ConvergenceEstimate::from_errors(sizes[..sizes.len() - 1].to_vec(), diffs)
}

/// Dense check that a path satisfies the reduced equation of motion in the
/// same discretization the oracle uses, returning the largest row residual.
pub fn collocation_residual(spec: &ReducedLagrangian, path: &Path, boundary: BoundaryData) -> Result<f64> {
    let sys = CollocationSystem::reduced(spec, *path.grid(), boundary)?;
    let x = DVector::from_column_slice(path.positions());
    let r = &sys.matrix * x - &sys.rhs;
    Ok(r.iter().skip(2).fold(0.0, |m, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::solve_closed_form;
    use crate::variational::oscillator_residual;

    fn osc(m: f64, k: f64, kt: f64, g: f64) -> OscillatorParams {
        OscillatorParams::new(m, k, kt, g).unwrap()
    }

    #[test]
    fn rest_state_is_zero() {
        let p = osc(1.0, 1.0, 2.0, 1.0);
        for method in [SolverMethod::Dense, SolverMethod::Banded] {
            let s = solve_integro(&p, &p.exponential_kernel(), BoundaryData::Initial { q0: 0.0, v0: 0.0 }, 5.0, 51, method)
                .unwrap();
            assert_eq!(s.path.max_abs(), 0.0);
        }
    }

    #[test]
    fn small_grids_rejected() {
        let p = osc(1.0, 1.0, 2.0, 1.0);
        assert!(matches!(
            solve_integro_ivp(&p, &p.exponential_kernel(), 0.0, 1.0, 1.0, 4),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn local_oscillator_converges() {
        let p = osc(1.0, 1.0, 0.0, 1.0);
        let err = |n: usize| {
            let path = solve_integro_ivp(&p, &p.exponential_kernel(), 0.0, 1.0, 3.0, n).unwrap();
            let g = *path.grid();
            path.positions()
                .iter()
                .zip(g.nodes())
                .fold(0.0_f64, |m, (q, s)| m.max((q - s.sin()).abs()))
        };
        let ratio = err(201) / err(401);
        assert!((ratio - 4.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn banded_matches_dense() {
        let p = osc(1.3, 0.7, 2.5, 0.8);
        let k = p.exponential_kernel();
        for b in [BoundaryData::Initial { q0: 0.3, v0: -1.0 }, BoundaryData::TwoPoint { q0: 0.3, q_bar: 0.5 }] {
            let d = solve_integro(&p, &k, b, 6.0, 301, SolverMethod::Dense).unwrap();
            let f = solve_integro(&p, &k, b, 6.0, 301, SolverMethod::Banded).unwrap();
            let diff = d.path.max_difference(&f.path).unwrap();
            assert!(diff <= 1e-10 * d.path.max_abs(), "{diff}");
        }
    }

    #[test]
    fn oracle_residual_vanishes_in_its_own_discretization() {
        let p = osc(1.0, 1.0, 2.0, 1.0);
        let path = solve_integro_ivp(&p, &p.exponential_kernel(), 0.0, 1.0, 4.0, 201).unwrap();
        let r = oscillator_residual(&p, &path).unwrap();
        let scale = path.acceleration().iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        assert!(r.norm_inf <= 1e-9 * scale, "{}", r.norm_inf);
    }

    #[test]
    fn ivp_bvp_round_trip() {
        let p = osc(1.0, 1.0, 2.0, 1.0);
        let k = p.exponential_kernel();
        let ivp = solve_integro_ivp(&p, &k, 0.2, 1.0, 5.0, 401).unwrap();
        let q_bar = *ivp.positions().last().unwrap();
        let bvp = solve_integro_bvp(&p, &k, 0.2, q_bar, 5.0, 401).unwrap();
        assert!(ivp.max_difference(&bvp).unwrap() <= 1e-8 * ivp.max_abs());
    }

    #[test]
    fn matches_closed_form() {
        let p = osc(1.0, 1.0, 2.0, 1.0);
        let path = solve_integro_ivp(&p, &p.exponential_kernel(), 0.0, 1.0, 10.0, 2001).unwrap();
        let exact = solve_closed_form(&p, 0.0, 1.0, 10.0).unwrap().sample(path.grid()).unwrap();
        let diff = path.max_difference(&exact).unwrap();
        assert!(diff < 5e-5 * exact.max_abs(), "{diff}");
    }

    #[test]
    fn self_convergence_order() {
        let p = osc(1.0, 1.0, 2.0, 1.0);
        let k = p.exponential_kernel();
        let est = estimate_convergence(&[251, 501, 1001], |n| solve_integro_ivp(&p, &k, 0.0, 1.0, 10.0, n)).unwrap();
        let order = est.order.unwrap();
        assert!((order - 2.0).abs() < 0.2, "{est:?}");
        let zero = estimate_convergence(&[11, 21, 41], |n| solve_integro_ivp(&p, &k, 0.0, 0.0, 1.0, n)).unwrap();
        assert!(zero.inconclusive && zero.order.is_none());
        assert!(estimate_convergence(&[11, 20, 41], |n| solve_integro_ivp(&p, &k, 0.0, 0.0, 1.0, n)).is_err());
    }

    #[test]
    fn dirac_kernel_is_the_local_limit() {
        let p = osc(1.0, 1.0, 3.0, 1.0);
        let path = solve_integro_ivp(&p, &MemoryKernel::DiracLimit, 0.0, 1.0, 2.0, 401).unwrap();
        let w = 2.0_f64;
        let err = path
            .positions()
            .iter()
            .zip(path.grid().nodes())
            .fold(0.0_f64, |m, (q, s)| m.max((q - (w * s).sin() / w).abs()));
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn tabulated_kernel_matches_exponential() {
        let p = osc(1.0, 1.0, 2.0, 1.5);
        let g = Grid::uniform(3.0, 121).unwrap();
        let tab = crate::kernel::TabulatedKernel::from_fn(g, |t, s| 0.75 * (-1.5 * (t - s).abs()).exp()).unwrap();
        let a = solve_integro_ivp(&p, &MemoryKernel::Tabulated(tab), 0.0, 1.0, 3.0, 121).unwrap();
        let b = solve_integro_ivp(&p, &p.exponential_kernel(), 0.0, 1.0, 3.0, 121).unwrap();
        assert!(a.max_difference(&b).unwrap() < 1e-10);
    }

    #[test]
    fn reduced_system_with_anchors_is_satisfied() {
        let mut spec = crate::lagrangian::GeneralLagrangian::free(1.0, MemoryKernel::exponential(1.0).unwrap());
        spec.b = -0.5;
        spec.e = 0.4;
        spec.h = 0.3;
        spec.f = -1.0;
        let red = spec.to_reduced(3.0).unwrap();
        let b = BoundaryData::TwoPoint { q0: 0.1, q_bar: -0.2 };
        let path = solve_reduced(&red, b, 3.0, 201).unwrap();
        assert!(collocation_residual(&red, &path, b).unwrap() < 1e-8);
        assert!((path.positions()[200] + 0.2).abs() < 1e-12);
    }
}
