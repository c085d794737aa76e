//! Closed-form solution of the oscillator with exponential memory.
//!
//! Differentiating `m q'' = -k q - k~ int_0^t alpha(s, r) q(r) dr` twice
//! and eliminating the memory integral gives the fourth-order equation
//!
//! ```text
//! q'''' - c2 q'' + c0 q = 0,    c2 = gamma^2 - k/m,    c0 = -gamma^2 (k + k~)/m.
//! ```
//!
//! Its solutions only solve the original equation if two consistency
//! conditions hold, one at each end of the interval:
//!
//! ```text
//! q'''(0) + (k/m) q'(0) =  gamma (q''(0) + (k/m) q(0))
//! q'''(t) + (k/m) q'(t) = -gamma (q''(t) + (k/m) q(t))
//! ```
//!
//! Two alternative coefficient pairs and one alternative pair of conditions
//! that appear in the published treatment are available through
//! [`CharacteristicVariant`] and [`ConsistencyVariant`] so they can be tested
//! against the collocation oracle. Only the derived ones reproduce it.
//!
//! The solution is expanded over `exp(x1 (s - t))`, `exp(-x1 s)`,
//! `exp(x2 (s - t))`, `exp(-x2 s)`. With principal square roots every basis
//! function has modulus at most one on `[0, t]`, so nothing overflows for
//! stiff parameters.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, Path};
use crate::lagrangian::{Lagrangian, OscillatorParams};

/// Which `(c2, c0)` pair to use in `q'''' - c2 q'' + c0 q = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharacteristicVariant {
    /// `(gamma^2 - k/m, -gamma^2 (k + k~)/m)`, from differentiating the
    /// equation of motion.
    #[default]
    Derived,
    /// `(k/m + gamma^2, gamma^2 (k + k~)/m)` as printed with the published
    /// fourth-order equation.
    PublishedOde,
    /// `(gamma^2 - 2k/m, -gamma^2 k~/m)`, the polynomial whose roots are the
    /// published root formula. Equal to the derived pair at `k = 0`.
    PublishedRoots,
}

/// Which pair of consistency conditions to impose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyVariant {
    #[default]
    Derived,
    /// The printed conditions: the `k/m` terms carry the opposite sign.
    Published,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicCoefficients {
    pub c2: f64,
    pub c0: f64,
}

impl CharacteristicCoefficients {
    /// `x^4 - c2 x^2 + c0`.
    pub fn polynomial(&self, x: Complex64) -> Complex64 {
        let x2 = x * x;
        x2 * x2 - self.c2 * x2 + self.c0
    }
}

pub fn characteristic_coefficients(params: &OscillatorParams) -> Result<CharacteristicCoefficients> {
    characteristic_coefficients_variant(params, CharacteristicVariant::Derived)
}

pub fn characteristic_coefficients_variant(
    params: &OscillatorParams,
    variant: CharacteristicVariant,
) -> Result<CharacteristicCoefficients> {
    params.validate()?;
    let g2 = params.gamma * params.gamma;
    let km = params.k / params.m;
    let ktm = params.k_tilde / params.m;
    Ok(match variant {
        CharacteristicVariant::Derived => CharacteristicCoefficients {
            c2: g2 - km,
            c0: -g2 * (km + ktm),
        },
        CharacteristicVariant::PublishedOde => CharacteristicCoefficients {
            c2: km + g2,
            c0: g2 * (km + ktm),
        },
        CharacteristicVariant::PublishedRoots => CharacteristicCoefficients {
            c2: g2 - 2.0 * km,
            c0: -g2 * ktm,
        },
    })
}

/// Roots `x1`, `x2` with `x1^2`, `x2^2` the two roots of `y^2 - c2 y + c0`
/// and `Re(x1^2) >= Re(x2^2)`; each `x` is the principal square root.
pub fn roots(cc: &CharacteristicCoefficients) -> Result<(Complex64, Complex64)> {
    let CharacteristicCoefficients { c2, c0 } = *cc;
    if !(c2.is_finite() && c0.is_finite()) {
        return Err(invalid("characteristic coefficients must be finite"));
    }
    let disc = c2 * c2 - 4.0 * c0;
    let scale = (c2 * c2).max(c0.abs()).max(f64::MIN_POSITIVE);
    if disc.abs() <= 1e-12 * scale {
        return Err(Error::DegenerateRoots(format!(
            "double root of the characteristic polynomial (c2 = {c2}, c0 = {c0})"
        )));
    }
    let (y1, y2) = if disc > 0.0 {
        // Stable form: avoid cancelling c2 against the square root.
        let big = 0.5 * (c2 + c2.signum() * disc.sqrt());
        let small = if big != 0.0 { c0 / big } else { 0.0 };
        let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
        (Complex64::new(hi, 0.0), Complex64::new(lo, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(0.5 * c2, im), Complex64::new(0.5 * c2, -im))
    };
    Ok((y1.sqrt(), y2.sqrt()))
}

/// `w0 q + w1 q' + w2 q'' + w3 q''' = 0` at time `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCondition {
    pub at: f64,
    pub weights: [f64; 4],
}

impl ConsistencyCondition {
    /// Value of the condition for the given derivatives `[q, q', q'', q''']`.
    pub fn apply(&self, derivs: [f64; 4]) -> f64 {
        self.weights.iter().zip(derivs).map(|(w, d)| w * d).sum()
    }
}

pub fn consistency_conditions(
    params: &OscillatorParams,
    t_end: f64,
    variant: ConsistencyVariant,
) -> [ConsistencyCondition; 2] {
    let g = params.gamma;
    let km = match variant {
        ConsistencyVariant::Derived => params.k / params.m,
        ConsistencyVariant::Published => -params.k / params.m,
    };
    [
        ConsistencyCondition {
            at: 0.0,
            weights: [-g * km, km, -g, 1.0],
        },
        ConsistencyCondition {
            at: t_end,
            weights: [g * km, km, g, 1.0],
        },
    ]
}

/// The two conditions that come from the variational problem itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryData {
    /// `q(0) = q0`, `q'(0) = v0`.
    Initial { q0: f64, v0: f64 },
    /// `q(0) = q0`, `q(t) = q_bar`.
    TwoPoint { q0: f64, q_bar: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolveOptions {
    pub characteristic: CharacteristicVariant,
    pub consistency: ConsistencyVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSolution {
    pub params: OscillatorParams,
    pub t_end: f64,
    pub roots: [Complex64; 2],
    /// Amplitudes of `exp(x1 (s - t))`, `exp(-x1 s)`, `exp(x2 (s - t))`,
    /// `exp(-x2 s)`.
    pub coeffs: [Complex64; 4],
    pub boundary: BoundaryData,
    pub options: SolveOptions,
}

/// Relative tolerance on the imaginary part of evaluated derivatives.
const REALNESS_TOL: f64 = 1e-10;

pub fn solve_closed_form(params: &OscillatorParams, q0: f64, v0: f64, t_end: f64) -> Result<ClosedFormSolution> {
    solve_closed_form_with(params, BoundaryData::Initial { q0, v0 }, t_end, SolveOptions::default())
}

pub fn solve_closed_form_with(
    params: &OscillatorParams,
    boundary: BoundaryData,
    t_end: f64,
    options: SolveOptions,
) -> Result<ClosedFormSolution> {
    params.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(invalid(format!("t_end must be positive and finite, got {t_end}")));
    }
    let (q0, second, second_value) = match boundary {
        BoundaryData::Initial { q0, v0 } => (q0, (0.0, 1), v0),
        BoundaryData::TwoPoint { q0, q_bar } => (q0, (t_end, 0), q_bar),
    };
    if !(q0.is_finite() && second_value.is_finite()) {
        return Err(invalid("boundary data must be finite"));
    }
    let cc = characteristic_coefficients_variant(params, options.characteristic)?;
    let (x1, x2) = roots(&cc)?;
    let conds = consistency_conditions(params, t_end, options.consistency);

    let basis_row = |s: f64, order: u32| -> [Complex64; 4] { basis(x1, x2, t_end, s, order) };
    let condition_row = |c: &ConsistencyCondition| -> [Complex64; 4] {
        let mut row = [Complex64::new(0.0, 0.0); 4];
        for (order, w) in c.weights.iter().enumerate() {
            for (r, b) in row.iter_mut().zip(basis_row(c.at, order as u32)) {
                *r += *w * b;
            }
        }
        row
    };
    let rows = [
        basis_row(0.0, 0),
        basis_row(second.0, second.1),
        condition_row(&conds[0]),
        condition_row(&conds[1]),
    ];
    let rhs = [q0, second_value, 0.0, 0.0];

    // Equilibrate rows, then columns, before judging singularity.
    let mut a = Matrix4::from_fn(|i, j| rows[i][j]);
    let mut b = Vector4::from_fn(|i, _| Complex64::new(rhs[i], 0.0));
    for i in 0..4 {
        let s = (0..4).map(|j| a[(i, j)].norm()).fold(0.0, f64::max);
        if s == 0.0 {
            return Err(Error::DegenerateProblem(format!("row {i} of the boundary system vanishes")));
        }
        for j in 0..4 {
            a[(i, j)] /= s;
        }
        b[i] /= s;
    }
    let mut col_scale = [1.0; 4];
    for (j, cs) in col_scale.iter_mut().enumerate() {
        let s = (0..4).map(|i| a[(i, j)].norm()).fold(0.0, f64::max);
        if s == 0.0 {
            return Err(Error::DegenerateProblem(format!("basis function {j} drops out of the boundary system")));
        }
        *cs = s;
        for i in 0..4 {
            a[(i, j)] /= s;
        }
    }
    let lu = a.lu();
    let det = lu.determinant().norm();
    if !(det >= 1e-12) {
        return Err(Error::DegenerateProblem(format!(
            "boundary system is singular (equilibrated |det| = {det:.3e})"
        )));
    }
    let y = lu
        .solve(&b)
        .ok_or_else(|| Error::DegenerateProblem("LU solve of the boundary system failed".into()))?;
    let coeffs = [0, 1, 2, 3].map(|j| y[j] / col_scale[j]);

    let sol = ClosedFormSolution {
        params: params.clone(),
        t_end,
        roots: [x1, x2],
        coeffs,
        boundary,
        options,
    };
    sol.check_constraints(&rows, &rhs)?;
    Ok(sol)
}

/// Order-`order` derivatives of the four basis functions at `s`.
fn basis(x1: Complex64, x2: Complex64, t_end: f64, s: f64, order: u32) -> [Complex64; 4] {
    let grow = |x: Complex64| x.powu(order) * (x * (s - t_end)).exp();
    let decay = |x: Complex64| (-x).powu(order) * (-x * s).exp();
    [grow(x1), decay(x1), grow(x2), decay(x2)]
}

impl ClosedFormSolution {
    /// Real part of the `order`-th derivative at `s`. The imaginary part
    /// must be negligible next to the sizes of the individual terms.
    pub fn eval(&self, s: f64, order: u32) -> Result<f64> {
        if order > 4 {
            return Err(invalid(format!("derivative order must be at most 4, got {order}")));
        }
        let tol = 1e-12 * self.t_end;
        if !(s >= -tol && s <= self.t_end + tol) {
            return Err(Error::Domain(format!("s = {s} outside [0, {}]", self.t_end)));
        }
        let s = s.clamp(0.0, self.t_end);
        let (value, size) = self.raw(s, order);
        if value.im.abs() > REALNESS_TOL * size.max(f64::MIN_POSITIVE) {
            return Err(Error::Consistency(format!(
                "closed-form value at s = {s} has imaginary part {:.3e} (terms of size {size:.3e})",
                value.im
            )));
        }
        Ok(value.re)
    }

    fn raw(&self, s: f64, order: u32) -> (Complex64, f64) {
        let terms = basis(self.roots[0], self.roots[1], self.t_end, s, order);
        let mut value = Complex64::new(0.0, 0.0);
        let mut size = 0.0;
        for (a, b) in self.coeffs.iter().zip(terms) {
            let t = a * b;
            value += t;
            size += t.norm();
        }
        (value, size)
    }

    /// `[q, q', q'', q''']` at `s`.
    pub fn derivatives(&self, s: f64) -> Result<[f64; 4]> {
        Ok([self.eval(s, 0)?, self.eval(s, 1)?, self.eval(s, 2)?, self.eval(s, 3)?])
    }

    pub fn sample(&self, grid: &Grid) -> Result<Path> {
        self.check_grid(grid)?;
        let q = grid.nodes().into_iter().map(|s| self.eval(s, 0)).collect::<Result<Vec<_>>>()?;
        Path::new(*grid, q)
    }

    /// Sampled `q'`.
    pub fn sample_velocity(&self, grid: &Grid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        grid.nodes().into_iter().map(|s| self.eval(s, 1)).collect()
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if (grid.t_end() - self.t_end).abs() > 1e-12 * self.t_end {
            return Err(invalid(format!(
                "grid ends at {} but the solution at {}",
                grid.t_end(),
                self.t_end
            )));
        }
        Ok(())
    }

    /// Residual of the two consistency conditions used to build the
    /// solution, relative to the size of their terms.
    pub fn consistency_residuals(&self, variant: ConsistencyVariant) -> Result<[f64; 2]> {
        let conds = consistency_conditions(&self.params, self.t_end, variant);
        let mut out = [0.0; 2];
        for (o, c) in out.iter_mut().zip(&conds) {
            let d = self.derivatives(c.at)?;
            let size: f64 = c.weights.iter().zip(d).map(|(w, x)| (w * x).abs()).sum();
            *o = c.apply(d).abs() / size.max(f64::MIN_POSITIVE);
        }
        Ok(out)
    }

    fn check_constraints(&self, rows: &[[Complex64; 4]; 4], rhs: &[f64; 4]) -> Result<()> {
        let tols = [1e-10, 1e-10, 1e-9, 1e-9];
        for ((row, target), tol) in rows.iter().zip(rhs).zip(tols) {
            let v: Complex64 = self.coeffs.iter().zip(row).map(|(a, b)| a * b).sum();
            let coeff_norm: f64 = self.coeffs.iter().map(|a| a.norm()).sum();
            let row_norm = row.iter().map(|b| b.norm()).fold(0.0, f64::max);
            let size = target.abs() + coeff_norm * row_norm;
            if (v - target).norm() > tol * size.max(f64::MIN_POSITIVE) {
                return Err(Error::Consistency(format!(
                    "closed-form coefficients violate a boundary row by {:.3e}",
                    (v - target).norm()
                )));
            }
        }
        Ok(())
    }

    /// JSON record with roots and amplitudes as `[re, im]` pairs and the
    /// basis convention spelled out.
    pub fn to_json(&self) -> serde_json::Value {
        let pair = |z: &Complex64| serde_json::json!([z.re, z.im]);
        serde_json::json!({
            "params": self.params,
            "t_end": self.t_end,
            "basis": "exp(x1 (s - t_end)), exp(-x1 s), exp(x2 (s - t_end)), exp(-x2 s)",
            "roots": self.roots.iter().map(pair).collect::<Vec<_>>(),
            "coeffs": self.coeffs.iter().map(pair).collect::<Vec<_>>(),
            "boundary": self.boundary,
            "options": self.options,
        })
    }
}

/// `lim_{gamma -> inf} -c0/c2`: the squared frequency that the fourth-order
/// equation reduces to for a very short memory. The equation of motion
/// demands `(k + k~)/m`; a negative value means exponential growth.
pub fn large_gamma_stiffness(params: &OscillatorParams, variant: CharacteristicVariant) -> Result<f64> {
    let scale = ((params.k.abs() + params.k_tilde.abs()) / params.m).sqrt().max(1.0);
    let far = params.with_gamma(1e8 * scale)?;
    let cc = characteristic_coefficients_variant(&far, variant)?;
    Ok(-cc.c0 / cc.c2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn osc(m: f64, k: f64, kt: f64, g: f64) -> OscillatorParams {
        OscillatorParams::new(m, k, kt, g).unwrap()
    }

    #[test]
    fn clean_roots() {
        let cc = characteristic_coefficients(&osc(1.0, 1.0, 2.0, 1.0)).unwrap();
        assert_eq!((cc.c2, cc.c0), (0.0, -3.0));
        let (x1, x2) = roots(&cc).unwrap();
        let r = 3.0_f64.powf(0.25);
        assert_relative_eq!(x1.re, r, max_relative = 1e-14);
        assert!(x1.im.abs() < 1e-15);
        assert!(x2.re.abs() < 1e-15);
        assert_relative_eq!(x2.im, r, max_relative = 1e-14);
    }

    #[test]
    fn memoryless_roots() {
        let (x1, x2) = roots(&characteristic_coefficients(&osc(1.0, 0.0, 0.0, 1.5)).unwrap()).unwrap();
        assert_relative_eq!(x1.re, 1.5, max_relative = 1e-15);
        assert_eq!(x2, Complex64::new(0.0, 0.0));
        assert!(matches!(
            solve_closed_form(&osc(1.0, 0.0, 0.0, 1.5), 0.0, 1.0, 1.0),
            Err(Error::DegenerateProblem(_))
        ));
    }

    #[test]
    fn local_factorisation() {
        // k~ = 0: (x^2 - gamma^2)(x^2 + k/m).
        let p = osc(2.0, 3.0, 0.0, 0.7);
        let cc = characteristic_coefficients(&p).unwrap();
        for x in [Complex64::new(0.3, 0.1), Complex64::new(-1.2, 2.0)] {
            let expected = (x * x - 0.49) * (x * x + 1.5);
            assert!((cc.polynomial(x) - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn double_root_is_reported() {
        let cc = CharacteristicCoefficients { c2: 2.0, c0: 1.0 };
        assert!(matches!(roots(&cc), Err(Error::DegenerateRoots(_))));
    }

    #[test]
    fn complex_discriminant() {
        let cc = CharacteristicCoefficients { c2: 1.0, c0: 3.0 };
        let (x1, x2) = roots(&cc).unwrap();
        for x in [x1, x2] {
            assert!(cc.polynomial(x).norm() < 1e-12);
            assert!(x.re >= 0.0);
        }
    }

    #[test]
    fn rest_state() {
        let sol = solve_closed_form(&osc(1.0, 1.0, 2.0, 1.0), 0.0, 0.0, 10.0).unwrap();
        assert!(sol.coeffs.iter().all(|c| c.norm() == 0.0));
        assert_eq!(sol.eval(3.0, 0).unwrap(), 0.0);
    }

    #[test]
    fn local_oscillator_has_no_gamma_modes() {
        let sol = solve_closed_form(&osc(1.0, 1.0, 0.0, 1.0), 0.0, 1.0, 5.0).unwrap();
        assert!(sol.coeffs[0].norm() <= 1e-10 && sol.coeffs[1].norm() <= 1e-10);
        for s in [0.0, 0.5, 2.0, 4.9] {
            assert!((sol.eval(s, 0).unwrap() - s.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_data_and_conditions() {
        let sol = solve_closed_form(&osc(1.0, 1.0, 2.0, 1.0), 0.3, -0.7, 10.0).unwrap();
        assert_relative_eq!(sol.eval(0.0, 0).unwrap(), 0.3, max_relative = 1e-10);
        assert_relative_eq!(sol.eval(0.0, 1).unwrap(), -0.7, max_relative = 1e-10);
        let r = sol.consistency_residuals(ConsistencyVariant::Derived).unwrap();
        assert!(r[0] < 1e-9 && r[1] < 1e-9, "{r:?}");
        let cc = characteristic_coefficients(&sol.params).unwrap();
        for s in [0.1, 3.3, 9.9] {
            let q4 = sol.eval(s, 4).unwrap();
            let rhs = cc.c2 * sol.eval(s, 2).unwrap() - cc.c0 * sol.eval(s, 0).unwrap();
            assert!((q4 - rhs).abs() <= 1e-8 * q4.abs().max(1.0));
        }
    }

    #[test]
    fn stiff_parameters_do_not_overflow() {
        let sol = solve_closed_form(&osc(1.0, 1.0, 1e6, 1.0), 0.0, 1.0, 15.0).unwrap();
        let g = Grid::uniform(15.0, 3001).unwrap();
        let p = sol.sample(&g).unwrap();
        assert!(p.max_abs() > 1e-4 && p.max_abs() < 1.0);
    }

    #[test]
    fn two_point_problem() {
        let p = osc(1.0, 1.0, 2.0, 1.0);
        let ivp = solve_closed_form(&p, 0.2, 1.0, 4.0).unwrap();
        let q_bar = ivp.eval(4.0, 0).unwrap();
        let bvp = solve_closed_form_with(&p, BoundaryData::TwoPoint { q0: 0.2, q_bar }, 4.0, SolveOptions::default())
            .unwrap();
        for s in [0.0, 1.0, 2.5, 4.0] {
            assert!((ivp.eval(s, 0).unwrap() - bvp.eval(s, 0).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn domain_checks() {
        let sol = solve_closed_form(&osc(1.0, 1.0, 2.0, 1.0), 0.0, 1.0, 2.0).unwrap();
        assert!(matches!(sol.eval(2.5, 0), Err(Error::Domain(_))));
        assert!(sol.eval(1.0, 5).is_err());
        assert!(sol.sample(&Grid::uniform(3.0, 11).unwrap()).is_err());
    }

    #[test]
    fn large_gamma_limits() {
        let p = osc(1.0, 1.0, 2.0, 1.0);
        let d = large_gamma_stiffness(&p, CharacteristicVariant::Derived).unwrap();
        let o = large_gamma_stiffness(&p, CharacteristicVariant::PublishedOde).unwrap();
        assert_relative_eq!(d, 3.0, max_relative = 1e-6);
        assert_relative_eq!(o, -3.0, max_relative = 1e-6);
    }

    #[test]
    fn json_has_pairs() {
        let sol = solve_closed_form(&osc(1.0, 1.0, 2.0, 1.0), 0.0, 1.0, 2.0).unwrap();
        let v = sol.to_json();
        assert_eq!(v["roots"][0].as_array().unwrap().len(), 2);
        assert!(v["basis"].as_str().unwrap().contains("exp(-x1 s)"));
        let back: ClosedFormSolution = serde_json::from_str(&serde_json::to_string(&sol).unwrap()).unwrap();
        assert_eq!(back, sol);
    }
}
