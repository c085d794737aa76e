//! Generalized momentum and Hamiltonian of the reduced form.
//!
//! With `p = dS/dq'(s) = m q' + A q + C` the Hamiltonian is the functional
//!
//! ```text
//! H[q, p] = -S[q, q'(p)] + int_0^t p q'(p) ds,    q'(p) = (p - A q - C) / m,
//! ```
//!
//! whose density, after substituting `q'(p)`, is
//!
//! ```text
//! p^2/2m - (A/m) q p + (A^2/2m - B) q^2 - (C/m) p + (A C/m - D) q + C^2/2m
//!   - F q int_0^s alpha(s, r) q(r) dr.
//! ```
//!
//! `D` includes the anchor terms `P q(0) + Q q(t)`. A variant with
//! `A/2m` in place of `A^2/2m` and `(A C - D)/m` in place of `A C/m - D`
//! is kept for comparison; it only agrees when `A = 0` and `m = 1`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{velocity, Grid, Path};
use crate::lagrangian::{
    action, action_with_velocity, perturbation_gradient, position_gradient_fixed_velocity, Endpoints, Lagrangian,
    ReducedLagrangian, ToReduced,
};
use crate::quadrature::{dot, QuadratureRule};

/// Positions and momenta sampled on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePath {
    grid: Grid,
    q: Vec<f64>,
    p: Vec<f64>,
}

impl PhasePath {
    pub fn new(grid: Grid, q: Vec<f64>, p: Vec<f64>) -> Result<PhasePath> {
        if q.len() != grid.len() || p.len() != grid.len() {
            return Err(invalid("positions and momenta must both match the grid"));
        }
        if q.iter().chain(&p).any(|x| !x.is_finite()) {
            return Err(invalid("phase path values must be finite"));
        }
        Ok(PhasePath { grid, q, p })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn positions(&self) -> &[f64] {
        &self.q
    }

    pub fn momenta(&self) -> &[f64] {
        &self.p
    }

    /// `s,q,p` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,q,p\n");
        for (i, s) in self.grid.nodes().into_iter().enumerate() {
            let _ = writeln!(out, "{s:.16e},{:.16e},{:.16e}", self.q[i], self.p[i]);
        }
        out
    }
}

/// Which closed-form Hamiltonian density to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianDensity {
    /// The Legendre transform of the reduced Lagrangian.
    #[default]
    Legendre,
    /// The published density with `A/2m` and `(A C - D)/m`.
    Published,
}

fn reduced_for<L: ToReduced + ?Sized>(form: &L, grid: &Grid) -> Result<ReducedLagrangian> {
    let spec = form.to_reduced(grid.t_end())?;
    spec.validate()?;
    Ok(spec)
}

/// `p = m q' + A q + C`, with `q'` from finite differences.
pub fn momentum<L: ToReduced + ?Sized>(form: &L, path: &Path) -> Result<Vec<f64>> {
    let spec = reduced_for(form, path.grid())?;
    let v = path.velocity();
    Ok(path
        .grid()
        .nodes()
        .into_iter()
        .zip(path.positions().iter().zip(&v))
        .map(|(s, (q, v))| spec.m * v + spec.a.value(s) * q + spec.c.value(s))
        .collect())
}

/// `q'(p) = (p - A q - C) / m`.
pub fn velocity_from_momentum(spec: &ReducedLagrangian, grid: &Grid, q: &[f64], p: &[f64]) -> Vec<f64> {
    grid.nodes()
        .into_iter()
        .zip(q.iter().zip(p))
        .map(|(s, (q, p))| (p - spec.a.value(s) * q - spec.c.value(s)) / spec.m)
        .collect()
}

/// `H = -S[q, q'(p)] + int p q'(p)`.
pub fn generalized_hamiltonian<L: ToReduced + ?Sized>(
    form: &L,
    phase: &PhasePath,
    rule: QuadratureRule,
) -> Result<f64> {
    let spec = reduced_for(form, &phase.grid)?;
    hamiltonian_of(&spec, &phase.grid, &phase.q, &phase.p, rule)
}

fn hamiltonian_of(spec: &ReducedLagrangian, grid: &Grid, q: &[f64], p: &[f64], rule: QuadratureRule) -> Result<f64> {
    let v = velocity_from_momentum(spec, grid, q, p);
    let s = action_with_velocity(spec, grid, q, &v, rule)?;
    let pv: Vec<f64> = p.iter().zip(&v).map(|(a, b)| a * b).collect();
    Ok(-s + dot(&rule.weights(grid)?, &pv))
}

/// Quadrature of a closed-form Hamiltonian density, minus the endpoint
/// term of the action.
pub fn analytic_hamiltonian<L: ToReduced + ?Sized>(
    form: &L,
    phase: &PhasePath,
    rule: QuadratureRule,
    density: HamiltonianDensity,
) -> Result<f64> {
    let spec = reduced_for(form, &phase.grid)?;
    let grid = phase.grid;
    let (q, p) = (&phase.q, &phase.p);
    let n = q.len();
    let ends = Endpoints {
        start: q[0],
        end: q[n - 1],
    };
    let past = spec.kernel.past_integrals(&grid, q)?;
    let m = spec.m;
    let dens: Vec<f64> = (0..n)
        .map(|i| {
            let s = grid.node(i);
            let (a, b, c) = (spec.a.value(s), spec.b.value(s), spec.c.value(s));
            let d = spec.effective_forcing(s, ends);
            let (qq, pp) = (q[i], p[i]);
            let (q2, q1) = match density {
                HamiltonianDensity::Legendre => (a * a / (2.0 * m) - b, a * c / m - d),
                HamiltonianDensity::Published => (a / (2.0 * m) - b, (a * c - d) / m),
            };
            pp * pp / (2.0 * m) - a / m * qq * pp + q2 * qq * qq - c / m * pp + q1 * qq + c * c / (2.0 * m)
                - spec.f.value(s) * qq * past[i]
        })
        .collect();
    Ok(dot(&rule.weights(&grid)?, &dens) - spec.boundary.value(ends))
}

/// Discrete Hamilton equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonResiduals {
    /// `dH/dp(s) - q'(s)` with `q'` from finite differences of the positions.
    pub r_p: Vec<f64>,
    /// `dH/dq(s) + dS/dq(s)`, the action derivative taken at fixed velocity
    /// samples `q'(p)`.
    pub r_q: Vec<f64>,
}

impl HamiltonResiduals {
    /// Largest `|r_p|` and `|r_q|` over interior nodes.
    pub fn interior_max(&self) -> (f64, f64) {
        let n = self.r_p.len();
        let m = |v: &[f64]| v[1..n - 1].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        (m(&self.r_p), m(&self.r_q))
    }
}

/// Both Hamilton residuals from weight-normalised central differences,
/// the same scheme as [`crate::lagrangian::functional_gradient`].
pub fn hamilton_residuals<L: ToReduced + ?Sized>(
    form: &L,
    phase: &PhasePath,
    rule: QuadratureRule,
    h: f64,
) -> Result<HamiltonResiduals> {
    let spec = reduced_for(form, &phase.grid)?;
    let grid = phase.grid;
    let (q, p) = (&phase.q, &phase.p);
    let dh_dp = perturbation_gradient(&grid, p, rule, h, |pp| hamiltonian_of(&spec, &grid, q, pp, rule))?;
    let dh_dq = perturbation_gradient(&grid, q, rule, h, |qq| hamiltonian_of(&spec, &grid, qq, p, rule))?;
    let v = velocity_from_momentum(&spec, &grid, q, p);
    let ds_dq = position_gradient_fixed_velocity(&spec, &grid, q, &v, rule, h)?;
    let qdot = velocity(&grid, q);
    Ok(HamiltonResiduals {
        r_p: dh_dp.iter().zip(&qdot).map(|(a, b)| a - b).collect(),
        r_q: dh_dq.iter().zip(&ds_dq).map(|(a, b)| a + b).collect(),
    })
}

/// `|(-H + int p q') - S|` for `p = momentum(path)`.
pub fn legendre_roundtrip<L: ToReduced + ?Sized>(form: &L, path: &Path, rule: QuadratureRule) -> Result<f64> {
    let spec = reduced_for(form, path.grid())?;
    let grid = *path.grid();
    let p = momentum(&spec, path)?;
    let phase = PhasePath::new(grid, path.positions().to_vec(), p)?;
    let h = hamiltonian_of(&spec, &grid, &phase.q, &phase.p, rule)?;
    let v = velocity_from_momentum(&spec, &grid, &phase.q, &phase.p);
    let pv: Vec<f64> = phase.p.iter().zip(&v).map(|(a, b)| a * b).collect();
    let recovered = -h + dot(&rule.weights(&grid)?, &pv);
    Ok((recovered - action(&spec, path, rule)?).abs())
}
