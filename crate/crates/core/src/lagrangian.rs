//! Quadratic time-non-local Lagrangians and their actions.
//!
//! Three forms are supported:
//!
//! * [`GeneralLagrangian`]: constant coefficients `A..H` with four memory
//!   terms pairing `q(s)` or `q'(s)` against `q(r)` or `q'(r)` for `r < s`;
//! * [`ReducedLagrangian`]: time-dependent coefficients with a single memory
//!   term `F(s) q(s) int_0^s alpha(s, r) q(r) dr`, obtained from the general
//!   form by integrating the velocity memory terms by parts;
//! * [`OscillatorParams`]: the harmonic oscillator with an exponential memory
//!   coupling.
//!
//! Actions are computed on sampled paths (velocities from finite
//! differences) or, for closed-form paths, with composite Gauss-Legendre
//! rules that are accurate to rounding.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{velocity, Grid, Path};
use crate::kernel::MemoryKernel;
use crate::quadrature::{dot, GaussLegendre, QuadratureRule};

/// `scale * exp(rate * s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub scale: f64,
    pub rate: f64,
}

/// A coefficient function of time: a polynomial plus a sum of exponentials.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeFunction {
    /// Coefficients in increasing powers of `s`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polynomial: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exponentials: Vec<ExpTerm>,
}

impl TimeFunction {
    pub fn zero() -> TimeFunction {
        TimeFunction::default()
    }

    pub fn constant(c: f64) -> TimeFunction {
        TimeFunction {
            polynomial: if c == 0.0 { Vec::new() } else { vec![c] },
            exponentials: Vec::new(),
        }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> TimeFunction {
        TimeFunction {
            polynomial: coeffs,
            exponentials: Vec::new(),
        }
    }

    pub fn exponential(scale: f64, rate: f64) -> TimeFunction {
        TimeFunction {
            polynomial: Vec::new(),
            exponentials: if scale == 0.0 { Vec::new() } else { vec![ExpTerm { scale, rate }] },
        }
    }

    pub fn plus(mut self, other: TimeFunction) -> TimeFunction {
        if self.polynomial.len() < other.polynomial.len() {
            self.polynomial.resize(other.polynomial.len(), 0.0);
        }
        for (a, b) in self.polynomial.iter_mut().zip(&other.polynomial) {
            *a += b;
        }
        self.exponentials.extend(other.exponentials);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.polynomial.iter().all(|&c| c == 0.0) && self.exponentials.iter().all(|e| e.scale == 0.0)
    }

    pub fn value(&self, s: f64) -> f64 {
        let poly = self.polynomial.iter().rev().fold(0.0, |acc, &c| acc * s + c);
        poly + self.exponentials.iter().map(|e| e.scale * (e.rate * s).exp()).sum::<f64>()
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let poly = self
            .polynomial
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (p, &c)| acc * s + p as f64 * c);
        poly + self
            .exponentials
            .iter()
            .map(|e| e.scale * e.rate * (e.rate * s).exp())
            .sum::<f64>()
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.nodes().into_iter().map(|s| self.value(s)).collect()
    }

    fn is_finite(&self) -> bool {
        self.polynomial.iter().all(|c| c.is_finite())
            && self.exponentials.iter().all(|e| e.scale.is_finite() && e.rate.is_finite())
    }
}

/// Endpoint values of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoints {
    pub start: f64,
    pub end: f64,
}

/// Everything a Lagrangian density may depend on at time `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalValues {
    pub s: f64,
    pub q: f64,
    pub v: f64,
    /// `int_0^s alpha(s, r) q(r) dr`.
    pub past_q: f64,
    /// `int_0^s alpha(s, r) q'(r) dr`.
    pub past_v: f64,
}

/// A Lagrangian whose action is `int_0^t L ds` plus an endpoint-only term.
pub trait Lagrangian {
    fn mass(&self) -> f64;
    fn kernel(&self) -> Cow<'_, MemoryKernel>;
    /// Whether the density reads `past_v`.
    fn uses_velocity_history(&self) -> bool {
        false
    }
    fn density(&self, x: &LocalValues, ends: Endpoints) -> f64;
    /// Contribution to the action that depends on the endpoints alone.
    fn boundary_term(&self, _ends: Endpoints) -> f64 {
        0.0
    }
    fn validate(&self) -> Result<()>;
}

/// Conversion to the single-memory-term form.
pub trait ToReduced {
    fn to_reduced(&self, t_end: f64) -> Result<ReducedLagrangian>;
}

/// Harmonic oscillator with exponential memory:
/// `L = m q'^2 / 2 - k q^2 / 2 - k~ q(s) int_0^s alpha(s, r) q(r) dr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub m: f64,
    pub k: f64,
    #[serde(rename = "ktilde")]
    pub k_tilde: f64,
    pub gamma: f64,
}

impl OscillatorParams {
    pub fn new(m: f64, k: f64, k_tilde: f64, gamma: f64) -> Result<OscillatorParams> {
        let p = OscillatorParams { m, k, k_tilde, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<OscillatorParams> {
        OscillatorParams::new(self.m, self.k, self.k_tilde, gamma)
    }

    /// Angular frequency of the `gamma -> infinity` limit, `sqrt((k + k~) / m)`.
    pub fn local_frequency(&self) -> f64 {
        ((self.k + self.k_tilde) / self.m).sqrt()
    }

    pub fn exponential_kernel(&self) -> MemoryKernel {
        MemoryKernel::Exponential { gamma: self.gamma }
    }
}

impl Lagrangian for OscillatorParams {
    fn mass(&self) -> f64 {
        self.m
    }

    fn kernel(&self) -> Cow<'_, MemoryKernel> {
        Cow::Owned(self.exponential_kernel())
    }

    fn density(&self, x: &LocalValues, _ends: Endpoints) -> f64 {
        0.5 * self.m * x.v * x.v - 0.5 * self.k * x.q * x.q - self.k_tilde * x.q * x.past_q
    }

    fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(invalid(format!("mass must be positive, got {}", self.m)));
        }
        if !(self.k.is_finite() && self.k_tilde.is_finite()) {
            return Err(invalid("spring constants must be finite"));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(invalid(format!("kernel cutoff gamma must be positive, got {}", self.gamma)));
        }
        Ok(())
    }
}

impl ToReduced for OscillatorParams {
    fn to_reduced(&self, _t_end: f64) -> Result<ReducedLagrangian> {
        self.validate()?;
        Ok(ReducedLagrangian {
            m: self.m,
            a: TimeFunction::zero(),
            b: TimeFunction::constant(-0.5 * self.k),
            c: TimeFunction::zero(),
            d: TimeFunction::zero(),
            f: TimeFunction::constant(-self.k_tilde),
            kernel: self.exponential_kernel(),
            initial_anchor: TimeFunction::zero(),
            final_anchor: TimeFunction::zero(),
            boundary: BoundaryRemainder::default(),
        })
    }
}

/// General second-order Lagrangian with constant coefficients:
///
/// ```text
/// L = m q'^2/2 + A q q' + B q^2 + C q' + D q
///   + int_0^s alpha(s, r) (E q(s) q'(r) + F q(s) q(r) + G q'(s) q(r) + H q'(s) q'(r)) dr
/// ```
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralLagrangian {
    pub m: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub kernel: MemoryKernel,
}

#[derive(Deserialize)]
struct GeneralLagrangianRepr {
    m: f64,
    #[serde(rename = "A")]
    a: Option<f64>,
    #[serde(rename = "B")]
    b: Option<f64>,
    #[serde(rename = "C")]
    c: Option<f64>,
    #[serde(rename = "D")]
    d: Option<f64>,
    #[serde(rename = "E")]
    e: Option<f64>,
    #[serde(rename = "F")]
    f: Option<f64>,
    #[serde(rename = "G")]
    g: Option<f64>,
    #[serde(rename = "H")]
    h: Option<f64>,
    /// Alternative to the named fields: `[A, B, C, D, E, F, G, H]`.
    coeffs: Option<[f64; 8]>,
    kernel: MemoryKernel,
}

impl<'de> Deserialize<'de> for GeneralLagrangian {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GeneralLagrangianRepr::deserialize(d)?;
        let named = [r.a, r.b, r.c, r.d, r.e, r.f, r.g, r.h];
        let c = match r.coeffs {
            Some(_) if named.iter().any(Option::is_some) => {
                return Err(serde::de::Error::custom(
                    "give either \"coeffs\" or the named coefficients A..H, not both",
                ))
            }
            Some(c) => c,
            None => named.map(|x| x.unwrap_or(0.0)),
        };
        let spec = GeneralLagrangian {
            m: r.m,
            a: c[0],
            b: c[1],
            c: c[2],
            d: c[3],
            e: c[4],
            f: c[5],
            g: c[6],
            h: c[7],
            kernel: r.kernel,
        };
        spec.validate().map_err(serde::de::Error::custom)?;
        Ok(spec)
    }
}

impl GeneralLagrangian {
    /// All-zero coefficients with the given mass and kernel.
    pub fn free(m: f64, kernel: MemoryKernel) -> GeneralLagrangian {
        GeneralLagrangian {
            m,
            a: 0.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
            e: 0.0,
            f: 0.0,
            g: 0.0,
            h: 0.0,
            kernel,
        }
    }
}

impl Lagrangian for GeneralLagrangian {
    fn mass(&self) -> f64 {
        self.m
    }

    fn kernel(&self) -> Cow<'_, MemoryKernel> {
        Cow::Borrowed(&self.kernel)
    }

    fn uses_velocity_history(&self) -> bool {
        self.e != 0.0 || self.h != 0.0
    }

    fn density(&self, x: &LocalValues, _ends: Endpoints) -> f64 {
        let (q, v) = (x.q, x.v);
        0.5 * self.m * v * v
            + self.a * q * v
            + self.b * q * q
            + self.c * v
            + self.d * q
            + self.e * q * x.past_v
            + self.f * q * x.past_q
            + self.g * v * x.past_q
            + self.h * v * x.past_v
    }

    fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(invalid(format!("mass must be positive, got {}", self.m)));
        }
        let c = [self.a, self.b, self.c, self.d, self.e, self.f, self.g, self.h];
        if c.iter().any(|x| !x.is_finite()) {
            return Err(invalid("Lagrangian coefficients must be finite"));
        }
        self.kernel.validate()
    }
}

impl ToReduced for GeneralLagrangian {
    fn to_reduced(&self, t_end: f64) -> Result<ReducedLagrangian> {
        reduce_general(self, t_end)
    }
}

/// Quadratic form in the endpoint values:
/// `start_sq q(0)^2 + end_sq q(t)^2 + cross q(0) q(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryRemainder {
    pub start_sq: f64,
    pub end_sq: f64,
    pub cross: f64,
}

impl BoundaryRemainder {
    pub fn value(&self, ends: Endpoints) -> f64 {
        self.start_sq * ends.start * ends.start
            + self.end_sq * ends.end * ends.end
            + self.cross * ends.start * ends.end
    }

    pub fn is_zero(&self) -> bool {
        self.start_sq == 0.0 && self.end_sq == 0.0 && self.cross == 0.0
    }
}

/// Reduced Lagrangian
///
/// ```text
/// L = m q'^2/2 + A(s) q q' + B(s) q^2 + C(s) q' + D(s) q
///   + (P(s) q(0) + Q(s) q(t)) q(s)
///   + F(s) q(s) int_0^s alpha(s, r) q(r) dr
/// ```
///
/// `P` (`initial_anchor`) and `Q` (`final_anchor`) collect the terms that
/// integration by parts leaves coupled to the endpoint values. For a fixed
/// endpoint problem they act as extra linear forcing `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedLagrangian {
    pub m: f64,
    #[serde(rename = "A", default)]
    pub a: TimeFunction,
    #[serde(rename = "B", default)]
    pub b: TimeFunction,
    #[serde(rename = "C", default)]
    pub c: TimeFunction,
    #[serde(rename = "D", default)]
    pub d: TimeFunction,
    #[serde(rename = "F", default)]
    pub f: TimeFunction,
    pub kernel: MemoryKernel,
    #[serde(default)]
    pub initial_anchor: TimeFunction,
    #[serde(default)]
    pub final_anchor: TimeFunction,
    #[serde(default)]
    pub boundary: BoundaryRemainder,
}

impl ReducedLagrangian {
    /// Free particle of mass `m`: every coefficient zero.
    pub fn free(m: f64, kernel: MemoryKernel) -> ReducedLagrangian {
        ReducedLagrangian {
            m,
            a: TimeFunction::zero(),
            b: TimeFunction::zero(),
            c: TimeFunction::zero(),
            d: TimeFunction::zero(),
            f: TimeFunction::zero(),
            kernel,
            initial_anchor: TimeFunction::zero(),
            final_anchor: TimeFunction::zero(),
            boundary: BoundaryRemainder::default(),
        }
    }

    /// Linear forcing `D(s) + P(s) q(0) + Q(s) q(t)` seen by the equation of
    /// motion once the endpoints are fixed.
    pub fn effective_forcing(&self, s: f64, ends: Endpoints) -> f64 {
        self.d.value(s) + self.initial_anchor.value(s) * ends.start + self.final_anchor.value(s) * ends.end
    }
}

impl Lagrangian for ReducedLagrangian {
    fn mass(&self) -> f64 {
        self.m
    }

    fn kernel(&self) -> Cow<'_, MemoryKernel> {
        Cow::Borrowed(&self.kernel)
    }

    fn density(&self, x: &LocalValues, ends: Endpoints) -> f64 {
        let (s, q, v) = (x.s, x.q, x.v);
        0.5 * self.m * v * v
            + self.a.value(s) * q * v
            + self.b.value(s) * q * q
            + self.c.value(s) * v
            + self.effective_forcing(s, ends) * q
            + self.f.value(s) * q * x.past_q
    }

    fn boundary_term(&self, ends: Endpoints) -> f64 {
        self.boundary.value(ends)
    }

    fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(invalid(format!("mass must be positive, got {}", self.m)));
        }
        let all = [&self.a, &self.b, &self.c, &self.d, &self.f, &self.initial_anchor, &self.final_anchor];
        if all.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coefficient functions must be finite"));
        }
        self.kernel.validate()
    }
}

impl ToReduced for ReducedLagrangian {
    fn to_reduced(&self, _t_end: f64) -> Result<ReducedLagrangian> {
        Ok(self.clone())
    }
}

/// Eliminates the velocity memory terms `E`, `G`, `H` of a general
/// Lagrangian by integrating by parts, so that only a position-position
/// memory term remains.
///
/// With the exponential kernel, `d/dr alpha(s, r) = gamma alpha(s, r)` and
/// `d/ds alpha(s, r) = -gamma alpha(s, r)` for `r < s`, and
/// `alpha(s, s) = gamma / 2`. Writing `I(s) = int_0^s alpha(s, r) q(r) dr`:
///
/// * `int_0^s alpha q' dr = (gamma/2) q(s) - alpha(s, 0) q(0) - gamma I(s)`;
/// * `int_0^t q' I ds = q(t) I(t) - int_0^t q ((gamma/2) q - gamma I) ds`;
/// * the `H` term combines both and leaves `(H gamma / 4)(q(t)^2 - q(0)^2)`
///   and `-(H gamma / 2) q(0) (e^{-gamma t} q(t) - q(0))` as endpoint-only
///   pieces.
///
/// The result satisfies `S_general[q] = S_reduced[q] + boundary(q(0), q(t))`
/// for every path.
pub fn reduce_general(spec: &GeneralLagrangian, t_end: f64) -> Result<ReducedLagrangian> {
    spec.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(invalid(format!("t_end must be positive, got {t_end}")));
    }
    let gamma = match spec.kernel {
        MemoryKernel::Exponential { gamma } => gamma,
        _ if spec.e == 0.0 && spec.g == 0.0 && spec.h == 0.0 => {
            return Ok(ReducedLagrangian {
                m: spec.m,
                a: TimeFunction::constant(spec.a),
                b: TimeFunction::constant(spec.b),
                c: TimeFunction::constant(spec.c),
                d: TimeFunction::constant(spec.d),
                f: TimeFunction::constant(spec.f),
                kernel: spec.kernel.clone(),
                initial_anchor: TimeFunction::zero(),
                final_anchor: TimeFunction::zero(),
                boundary: BoundaryRemainder::default(),
            })
        }
        _ => {
            return Err(Error::UnsupportedKernel(
                "velocity memory terms can only be integrated by parts for the exponential kernel".into(),
            ))
        }
    };
    let (e, g, h) = (spec.e, spec.g, spec.h);
    let half = 0.5 * gamma;
    let b = spec.b + (e - g) * half + h * gamma * half;
    let f = spec.f - e * gamma + g * gamma - h * gamma * gamma;
    // -(E + H gamma) alpha(s, 0) and (G - H gamma) alpha(t, s).
    let initial_anchor = TimeFunction::exponential(-(e + h * gamma) * half, -gamma);
    let final_anchor = TimeFunction::exponential((g - h * gamma) * half * (-gamma * t_end).exp(), gamma);
    let boundary = BoundaryRemainder {
        start_sq: -0.25 * h * gamma + 0.5 * h * gamma,
        end_sq: 0.25 * h * gamma,
        cross: -0.5 * h * gamma * (-gamma * t_end).exp(),
    };
    Ok(ReducedLagrangian {
        m: spec.m,
        a: TimeFunction::constant(spec.a),
        b: TimeFunction::constant(b),
        c: TimeFunction::constant(spec.c),
        d: TimeFunction::constant(spec.d),
        f: TimeFunction::constant(f),
        kernel: spec.kernel.clone(),
        initial_anchor,
        final_anchor,
        boundary,
    })
}

/// Action of a sampled path; velocities come from [`Path::velocity`].
pub fn action<L: Lagrangian + ?Sized>(form: &L, path: &Path, rule: QuadratureRule) -> Result<f64> {
    action_with_velocity(form, path.grid(), path.positions(), &path.velocity(), rule)
}

/// Action with positions and velocities supplied independently.
pub fn action_with_velocity<L: Lagrangian + ?Sized>(
    form: &L,
    grid: &Grid,
    q: &[f64],
    v: &[f64],
    rule: QuadratureRule,
) -> Result<f64> {
    if q.len() != grid.len() || v.len() != grid.len() {
        return Err(invalid("position and velocity samples must match the grid"));
    }
    let w = rule.weights(grid)?;
    let dens = densities(form, grid, q, v)?;
    let ends = Endpoints {
        start: q[0],
        end: q[q.len() - 1],
    };
    Ok(dot(&w, &dens) + form.boundary_term(ends))
}

fn densities<L: Lagrangian + ?Sized>(form: &L, grid: &Grid, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let kernel = form.kernel();
    let past_q = kernel.past_integrals(grid, q)?;
    let past_v = if form.uses_velocity_history() {
        kernel.past_integrals(grid, v)?
    } else {
        vec![0.0; q.len()]
    };
    let ends = Endpoints {
        start: q[0],
        end: q[q.len() - 1],
    };
    Ok((0..q.len())
        .map(|i| {
            form.density(
                &LocalValues {
                    s: grid.node(i),
                    q: q[i],
                    v: v[i],
                    past_q: past_q[i],
                    past_v: past_v[i],
                },
                ends,
            )
        })
        .collect())
}

/// Composite Gauss-Legendre resolution for [`action_smooth`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothQuadrature {
    pub panels: usize,
    pub order: usize,
}

impl Default for SmoothQuadrature {
    fn default() -> Self {
        SmoothQuadrature { panels: 24, order: 16 }
    }
}

/// Action of a closed-form path `q`, `v = q'`. Both the outer integral and
/// the inner history integrals use composite Gauss-Legendre rules, which is
/// accurate to rounding for smooth paths and kernels that are smooth on
/// `r < s`.
pub fn action_smooth<L, Q, V>(form: &L, q: Q, v: V, t_end: f64, quad: SmoothQuadrature) -> Result<f64>
where
    L: Lagrangian + ?Sized,
    Q: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
{
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(invalid(format!("t_end must be positive, got {t_end}")));
    }
    let gl = GaussLegendre::new(quad.order);
    let kernel = form.kernel();
    let ends = Endpoints {
        start: q(0.0),
        end: q(t_end),
    };
    let mut failure: Option<Error> = None;
    let history = |s: f64, x: &dyn Fn(f64) -> f64| -> Result<f64> {
        match &*kernel {
            MemoryKernel::DiracLimit => Ok(0.5 * x(s)),
            _ => {
                let panels = ((quad.panels as f64 * s / t_end).ceil() as usize).max(1);
                let mut err = None;
                let val = gl.integrate(0.0, s, panels, |r| match kernel.eval(s, r) {
                    Ok(a) => a * x(r),
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                });
                err.map_or(Ok(val), Err)
            }
        }
    };
    let total = gl.integrate(0.0, t_end, quad.panels, |s| {
        let past_q = history(s, &q);
        let past_v = if form.uses_velocity_history() { history(s, &v) } else { Ok(0.0) };
        match (past_q, past_v) {
            (Ok(pq), Ok(pv)) => form.density(
                &LocalValues {
                    s,
                    q: q(s),
                    v: v(s),
                    past_q: pq,
                    past_v: pv,
                },
                ends,
            ),
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(total + form.boundary_term(ends)),
    }
}

/// Discrete functional derivative `dS/dq(s_i)` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientProfile {
    pub values: Vec<f64>,
    /// Nodes whose value mixes in endpoint stencils and boundary terms: the
    /// endpoints themselves and the two neighbours on each side, which feel
    /// the one-sided velocity stencil.
    pub flagged: Vec<bool>,
}

impl GradientProfile {
    /// Indices of the unflagged nodes.
    pub fn clean_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.flagged.iter().enumerate().filter(|(_, f)| !**f).map(|(i, _)| i)
    }
}

/// `g_i = [S(q + h e_i) - S(q - h e_i)] / (2 h w_i)`, with `w_i` the weight
/// of node `i` in `rule`. The action is quadratic in `q`, so the central
/// difference is exact up to rounding and `h` only needs to match the scale
/// of the path.
pub fn functional_gradient<L: Lagrangian + ?Sized>(
    form: &L,
    path: &Path,
    rule: QuadratureRule,
    h: f64,
) -> Result<GradientProfile> {
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid(format!("perturbation size must be positive, got {h}")));
    }
    let grid = *path.grid();
    let w = rule.weights(&grid)?;
    let mut q = path.positions().to_vec();
    let n = q.len();
    let mut values = vec![0.0; n];
    for i in 0..n {
        let orig = q[i];
        q[i] = orig + h;
        let plus = action_with_velocity(form, &grid, &q, &velocity(&grid, &q), rule)?;
        q[i] = orig - h;
        let minus = action_with_velocity(form, &grid, &q, &velocity(&grid, &q), rule)?;
        q[i] = orig;
        values[i] = (plus - minus) / (2.0 * h * w[i]);
    }
    let flagged = (0..n).map(|i| i < 3 || i + 3 >= n).collect();
    Ok(GradientProfile { values, flagged })
}

/// Functional derivative with respect to the velocity samples, holding the
/// positions fixed: `dS/dv(s_i)`.
pub fn velocity_gradient<L: Lagrangian + ?Sized>(
    form: &L,
    grid: &Grid,
    q: &[f64],
    v: &[f64],
    rule: QuadratureRule,
    h: f64,
) -> Result<Vec<f64>> {
    perturbation_gradient(grid, v, rule, h, |vv| action_with_velocity(form, grid, q, vv, rule))
}

/// Functional derivative with respect to the position samples, holding the
/// velocity samples fixed.
pub fn position_gradient_fixed_velocity<L: Lagrangian + ?Sized>(
    form: &L,
    grid: &Grid,
    q: &[f64],
    v: &[f64],
    rule: QuadratureRule,
    h: f64,
) -> Result<Vec<f64>> {
    perturbation_gradient(grid, q, rule, h, |qq| action_with_velocity(form, grid, qq, v, rule))
}

pub(crate) fn perturbation_gradient(
    grid: &Grid,
    x: &[f64],
    rule: QuadratureRule,
    h: f64,
    f: impl Fn(&[f64]) -> Result<f64>,
) -> Result<Vec<f64>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid(format!("perturbation size must be positive, got {h}")));
    }
    let w = rule.weights(grid)?;
    let mut x = x.to_vec();
    let mut out = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let plus = f(&x)?;
        x[i] = orig - h;
        let minus = f(&x)?;
        x[i] = orig;
        out[i] = (plus - minus) / (2.0 * h * w[i]);
    }
    Ok(out)
}
