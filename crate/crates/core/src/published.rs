//! The published closed-form expressions for the oscillator, transcribed
//! term by term, with a comparison against the derived solver.
//!
//! Nothing here is rescaled or repaired: `cosh` and `sinh` are evaluated
//! as printed, so large `x1 t` overflows and is reported as a range error.
//! The initial position is called `q0` throughout.
//!
//! The printed solution is
//!
//! ```text
//! q(s) = (b1 sinh x1 s + b2 cosh x1 s + b3 sinh x2 s + b4 cosh x2 s) / d
//! ```
//!
//! with `b2 = q0 d - b4`. In general `d` and the `b_i` are complex (for
//! `k~ > 0`, `x2` is imaginary and so is `d`); only their ratios enter `q`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::closed_form::{
    characteristic_coefficients_variant, roots, solve_closed_form_with, BoundaryData, CharacteristicCoefficients,
    CharacteristicVariant, SolveOptions,
};
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, Path};
use crate::lagrangian::{Lagrangian, OscillatorParams};
use crate::variational::oscillator_residual;

type C = Complex64;

/// Largest `Re(x) t` for which `cosh` and `sinh` stay finite.
const OVERFLOW_LIMIT: f64 = 700.0;

/// Roots as printed:
/// `x_i = sqrt(gamma^2/2 - k/m + (-1)^(i+1) sqrt((gamma^2/2 - k/m)^2 + gamma^2 k~/m))`.
pub fn appendix_roots(params: &OscillatorParams) -> Result<(C, C)> {
    params.validate()?;
    let half = C::new(params.gamma * params.gamma / 2.0 - params.k / params.m, 0.0);
    let inner = (half * half + params.gamma * params.gamma * params.k_tilde / params.m).sqrt();
    Ok(((half + inner).sqrt(), (half - inner).sqrt()))
}

/// Inputs shared by every printed expression.
#[derive(Debug, Clone, Copy)]
struct Symbols {
    x1: C,
    x2: C,
    /// `k / m`.
    km: C,
    gamma: C,
    q0: C,
    v0: C,
    t: f64,
}

impl Symbols {
    fn ch1(&self) -> C {
        (self.x1 * self.t).cosh()
    }
    fn sh1(&self) -> C {
        (self.x1 * self.t).sinh()
    }
    fn ch2(&self) -> C {
        (self.x2 * self.t).cosh()
    }
    fn sh2(&self) -> C {
        (self.x2 * self.t).sinh()
    }
    /// `k/m + x1^2`.
    fn p1(&self) -> C {
        self.km + self.x1 * self.x1
    }
    /// `k/m + x2^2`.
    fn p2(&self) -> C {
        self.km + self.x2 * self.x2
    }
}

// d = (x1^2 - x2^2) [ d1 + d2 + d3 ]

fn d_term1(y: &Symbols) -> C {
    -2.0 * y.x1 * y.x2 * y.p2() * y.gamma * y.ch2()
}

fn d_term2(y: &Symbols) -> C {
    y.p1() * y.x2 * (2.0 * y.x1 * y.gamma * y.ch1() + (y.x1 * y.x1 + y.gamma * y.gamma) * y.sh1())
}

fn d_term3(y: &Symbols) -> C {
    -y.x1 * y.p2() * (y.x2 * y.x2 + y.gamma * y.gamma) * y.sh2()
}

fn denominator(y: &Symbols) -> C {
    (y.x1 * y.x1 - y.x2 * y.x2) * (d_term1(y) + d_term2(y) + d_term3(y))
}

// b1 = (k/m + x2^2) [ b1_1 + b1_2 + b1_3 ]

fn b1_term1(y: &Symbols) -> C {
    let (x1, x2, g) = (y.x1, y.x2, y.gamma);
    -x2 * g * (y.v0 * (-y.km + x1 * x1 - 2.0 * x2 * x2) + y.q0 * y.p1() * g) * y.ch2()
}

fn b1_term2(y: &Symbols) -> C {
    let (x1, x2, g) = (y.x1, y.x2, y.gamma);
    -y.p1() * x2 * (y.v0 - y.q0 * g) * (g * y.ch1() + x1 * y.sh1())
}

fn b1_term3(y: &Symbols) -> C {
    let (x1, x2, g) = (y.x1, y.x2, y.gamma);
    (y.v0 * x2 * x2 * y.p2() - y.q0 * y.p1() * x2 * x2 * g + y.v0 * (-x1 * x1 + x2 * x2) * g * g) * y.sh2()
}

fn b1(y: &Symbols) -> C {
    y.p2() * (b1_term1(y) + b1_term2(y) + b1_term3(y))
}

// b3 = x1 (k/m + x1^2) [ b3_1 + b3_2 + b3_3 + b3_4 ]

fn b3_term1(y: &Symbols) -> C {
    let g = y.gamma;
    y.p2() * g * (-y.v0 + y.q0 * g) * y.ch2()
}

fn b3_term2(y: &Symbols) -> C {
    let (x1, x2, g) = (y.x1, y.x2, y.gamma);
    -x1 * g * (y.v0 * (-y.km - 2.0 * x1 * x1 + x2 * x2) + y.q0 * y.p2() * g) * y.ch1()
}

fn b3_term3(y: &Symbols) -> C {
    let (x1, x2, g) = (y.x1, y.x2, y.gamma);
    -(-y.v0 * x1 * x1 * y.p1() + y.q0 * x1 * x1 * y.p2() * g + y.v0 * (-x1 * x1 + x2 * x2) * g * g) * y.sh1()
}

fn b3_term4(y: &Symbols) -> C {
    let (x1, x2, g) = (y.x1, y.x2, y.gamma);
    -x1 * x2 * y.p1() * y.p2() * (y.v0 - y.q0 * g) * y.sh2()
}

fn b3(y: &Symbols) -> C {
    y.x1 * y.p1() * (b3_term1(y) + b3_term2(y) + b3_term3(y) + b3_term4(y))
}

// b4 = (k/m + x1^2) [ b4_1 + b4_2 + b4_3 ]

fn b4_term1(y: &Symbols) -> C {
    let (x1, x2, g) = (y.x1, y.x2, y.gamma);
    x1 * x2 * (-y.v0 * y.p2() - y.q0 * (-y.km - 2.0 * x1 * x1 + x2 * x2) * g) * y.ch1()
}

fn b4_term2(y: &Symbols) -> C {
    let (x1, x2, g) = (y.x1, y.x2, y.gamma);
    x2 * (-y.v0 * y.p2() * g + y.q0 * (y.km * g * g + x1 * x1 * (x1 * x1 - x2 * x2 + g * g))) * y.sh1()
}

fn b4_term3(y: &Symbols) -> C {
    let (x1, x2, g) = (y.x1, y.x2, y.gamma);
    x1 * y.p2() * (y.v0 - y.q0 * g) * (x2 * y.ch2() + g * y.sh2())
}

fn b4(y: &Symbols) -> C {
    y.p1() * (b4_term1(y) + b4_term2(y) + b4_term3(y))
}

/// The printed roots, denominator and numerators for one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixSolution {
    pub params: OscillatorParams,
    pub q0: f64,
    pub v0: f64,
    pub t_end: f64,
    pub roots: [C; 2],
    pub d: C,
    pub b: [C; 4],
}

impl AppendixSolution {
    /// `a_i = b_i / d`.
    pub fn amplitudes(&self) -> [C; 4] {
        self.b.map(|b| b / self.d)
    }

    /// The `order`-th derivative (0 or 1) of the printed expansion, as a
    /// complex number.
    pub fn eval_complex(&self, s: f64, order: u32) -> Result<C> {
        if order > 1 {
            return Err(invalid("only q and q' are available for the printed solution"));
        }
        let [x1, x2] = self.roots;
        let [a1, a2, a3, a4] = self.amplitudes();
        let (s1, c1, s2, c2) = ((x1 * s).sinh(), (x1 * s).cosh(), (x2 * s).sinh(), (x2 * s).cosh());
        let v = if order == 0 {
            a1 * s1 + a2 * c1 + a3 * s2 + a4 * c2
        } else {
            x1 * (a1 * c1 + a2 * s1) + x2 * (a3 * c2 + a4 * s2)
        };
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Range(format!("printed solution is not finite at s = {s}")));
        }
        Ok(v)
    }

    /// Real part on `grid`, and the largest imaginary part seen.
    pub fn sample(&self, grid: &Grid) -> Result<(Path, f64)> {
        let mut q = Vec::with_capacity(grid.len());
        let mut max_im = 0.0_f64;
        for s in grid.nodes() {
            let v = self.eval_complex(s, 0)?;
            max_im = max_im.max(v.im.abs());
            q.push(v.re);
        }
        Ok((Path::new(*grid, q)?, max_im))
    }
}

/// Evaluates the printed `d` and `b1..b4`.
pub fn appendix_solution(params: &OscillatorParams, q0: f64, v0: f64, t_end: f64) -> Result<AppendixSolution> {
    params.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(invalid(format!("t_end must be positive and finite, got {t_end}")));
    }
    let (x1, x2) = appendix_roots(params)?;
    for x in [x1, x2] {
        if x.re.abs() * t_end > OVERFLOW_LIMIT {
            return Err(Error::Range(format!(
                "cosh/sinh of x t = {:.1} overflow; the printed formulas are not rescaled",
                x.re * t_end
            )));
        }
    }
    let y = Symbols {
        x1,
        x2,
        km: C::new(params.k / params.m, 0.0),
        gamma: C::new(params.gamma, 0.0),
        q0: C::new(q0, 0.0),
        v0: C::new(v0, 0.0),
        t: t_end,
    };
    let d = denominator(&y);
    let size = (y.x1 * y.x1 - y.x2 * y.x2).norm() * (d_term1(&y).norm() + d_term2(&y).norm() + d_term3(&y).norm());
    if !(d.norm() > 1e-12 * size) || d.norm() == 0.0 {
        return Err(Error::DegenerateProblem(format!("printed denominator d = {d} vanishes")));
    }
    let (b1, b3, b4) = (b1(&y), b3(&y), b4(&y));
    let b2 = y.q0 * d - b4;
    let out = AppendixSolution {
        params: params.clone(),
        q0,
        v0,
        t_end,
        roots: [x1, x2],
        d,
        b: [b1, b2, b3, b4],
    };
    if out.b.iter().any(|b| !(b.re.is_finite() && b.im.is_finite())) || !(d.re.is_finite() && d.im.is_finite()) {
        return Err(Error::Range("printed coefficients overflow".into()));
    }
    Ok(out)
}

/// Outcome of comparing one printed formula with its derived counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaVerdict {
    Matches,
    Differs,
    Degenerate,
}

/// Side-by-side numbers for the printed and derived oscillator solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedComparison {
    pub params: OscillatorParams,
    pub q0: f64,
    pub v0: f64,
    pub t_end: f64,
    pub n: usize,
    pub derived_polynomial: CharacteristicCoefficients,
    /// The polynomial whose roots the printed root formula gives.
    pub published_polynomial: CharacteristicCoefficients,
    pub derived_roots: Option<[C; 2]>,
    pub published_roots: [C; 2],
    /// Largest relative difference between matching roots.
    pub root_difference: Option<f64>,
    pub roots_verdict: FormulaVerdict,
    /// Interior residual of the integro-differential equation divided by
    /// `max |m q''|`, for the derived closed form.
    pub derived_residual: Option<f64>,
    /// The same with the printed root set plugged into the derived
    /// boundary system.
    pub published_roots_residual: Option<f64>,
    /// The same for the printed solution itself.
    pub published_solution_residual: Option<f64>,
    /// Why the printed solution could not be evaluated, if it could not.
    pub published_solution_error: Option<String>,
    pub published_initial_velocity: Option<f64>,
    /// Largest `|Im q|` of the printed solution on the grid.
    pub published_max_imaginary: Option<f64>,
    /// `max |q_printed - q_derived|` on the grid.
    pub solution_difference: Option<f64>,
    pub solution_verdict: FormulaVerdict,
}

/// Residual of the integro-differential equation relative to the size of
/// its inertial term. Zero paths give zero.
pub fn relative_oscillator_residual(params: &OscillatorParams, path: &Path) -> Result<f64> {
    let res = oscillator_residual(params, path)?;
    let acc = path.acceleration();
    let scale = acc.iter().fold(0.0_f64, |m, a| m.max((params.m * a).abs()));
    Ok(if res.norm_inf == 0.0 { 0.0 } else { res.norm_inf / scale.max(f64::MIN_POSITIVE) })
}

pub fn compare_published_vs_derived(
    params: &OscillatorParams,
    q0: f64,
    v0: f64,
    t_end: f64,
    n: usize,
) -> Result<PublishedComparison> {
    params.validate()?;
    let grid = Grid::uniform(t_end, n)?;
    let derived_polynomial = characteristic_coefficients_variant(params, CharacteristicVariant::Derived)?;
    let published_polynomial = characteristic_coefficients_variant(params, CharacteristicVariant::PublishedRoots)?;
    let (p1, p2) = appendix_roots(params)?;
    let derived_roots = roots(&derived_polynomial).ok().map(|(a, b)| [a, b]);
    let root_difference = derived_roots.map(|[a, b]| {
        let rel = |x: C, y: C| (x - y).norm() / x.norm().max(y.norm()).max(f64::MIN_POSITIVE);
        rel(a, p1).max(rel(b, p2))
    });
    let roots_verdict = match root_difference {
        None => FormulaVerdict::Degenerate,
        Some(d) if d <= 1e-12 => FormulaVerdict::Matches,
        Some(_) => FormulaVerdict::Differs,
    };

    let boundary = BoundaryData::Initial { q0, v0 };
    let residual_for = |characteristic| -> Option<(Path, f64)> {
        let options = SolveOptions {
            characteristic,
            ..SolveOptions::default()
        };
        let sol = solve_closed_form_with(params, boundary, t_end, options).ok()?;
        let path = sol.sample(&grid).ok()?;
        let r = relative_oscillator_residual(params, &path).ok()?;
        Some((path, r))
    };
    let derived = residual_for(CharacteristicVariant::Derived);
    let published_roots_residual = residual_for(CharacteristicVariant::PublishedRoots).map(|(_, r)| r);

    let mut cmp = PublishedComparison {
        params: params.clone(),
        q0,
        v0,
        t_end,
        n,
        derived_polynomial,
        published_polynomial,
        derived_roots,
        published_roots: [p1, p2],
        root_difference,
        roots_verdict,
        derived_residual: derived.as_ref().map(|(_, r)| *r),
        published_roots_residual,
        published_solution_residual: None,
        published_solution_error: None,
        published_initial_velocity: None,
        published_max_imaginary: None,
        solution_difference: None,
        solution_verdict: FormulaVerdict::Degenerate,
    };
    let printed = appendix_solution(params, q0, v0, t_end).and_then(|sol| {
        let (path, im) = sol.sample(&grid)?;
        Ok((sol.eval_complex(0.0, 1)?.re, path, im))
    });
    match printed {
        Err(e) => cmp.published_solution_error = Some(e.to_string()),
        Ok((v, path, im)) => {
            cmp.published_initial_velocity = Some(v);
            cmp.published_max_imaginary = Some(im);
            cmp.published_solution_residual = relative_oscillator_residual(params, &path).ok();
            if let Some((reference, _)) = &derived {
                let diff = path.max_difference(reference)?;
                let scale = reference.max_abs().max(path.max_abs());
                cmp.solution_difference = Some(diff);
                cmp.solution_verdict = if diff <= 1e-8 * scale.max(f64::MIN_POSITIVE) || scale == 0.0 {
                    FormulaVerdict::Matches
                } else {
                    FormulaVerdict::Differs
                };
            }
        }
    }
    Ok(cmp)
}
