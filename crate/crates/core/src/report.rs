//! The validation suite: every solver and formula checked against an
//! independent oracle, with the numbers and tolerances that decide each
//! verdict.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::closed_form::{
    large_gamma_stiffness, solve_closed_form, solve_closed_form_with, BoundaryData, CharacteristicVariant,
    ClosedFormSolution, ConsistencyVariant, SolveOptions,
};
use crate::error::{invalid, Result};
use crate::grid::{Grid, Path};
use crate::hamiltonian::{
    analytic_hamiltonian, generalized_hamiltonian, hamilton_residuals, legendre_roundtrip, HamiltonianDensity,
    PhasePath,
};
use crate::kernel::{KernelArgumentOrder, MemoryKernel, TabulatedKernel};
use crate::lagrangian::{
    action, action_smooth, functional_gradient, GeneralLagrangian, Lagrangian, OscillatorParams, SmoothQuadrature,
    ToReduced,
};
use crate::oracle::{solve_integro, ConvergenceEstimate, SolverMethod};
use crate::published::{appendix_solution, compare_published_vs_derived, FormulaVerdict, PublishedComparison};
use crate::quadrature::QuadratureRule;
use crate::variational::el_residual_analytic;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// A non-normative variant disagrees with its oracle.
    Differs,
    Inconclusive,
}

/// One oracle comparison. The verdict is `value <= tolerance`, read as
/// pass/fail for normative checks and pass/differs otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub oracle: String,
    pub variant: String,
    pub normative: bool,
    pub value: f64,
    pub tolerance: f64,
    pub metrics: BTreeMap<String, f64>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(name: &str, oracle: &str, variant: &str, normative: bool) -> Check {
        Check {
            name: name.into(),
            oracle: oracle.into(),
            variant: variant.into(),
            normative,
            value: f64::NAN,
            tolerance: 0.0,
            metrics: BTreeMap::new(),
            verdict: Verdict::Inconclusive,
            note: None,
        }
    }

    fn metric(mut self, key: &str, v: f64) -> Check {
        self.metrics.insert(key.into(), v);
        self
    }

    fn judge(mut self, value: f64, tolerance: f64) -> Check {
        self.value = value;
        self.tolerance = tolerance;
        self.verdict = match (value <= tolerance, self.normative) {
            (true, _) => Verdict::Pass,
            (false, true) => Verdict::Fail,
            (false, false) => Verdict::Differs,
        };
        self
    }

    fn failed(mut self, why: impl ToString) -> Check {
        self.verdict = if self.normative { Verdict::Fail } else { Verdict::Inconclusive };
        self.note = Some(why.to_string());
        self
    }

    fn noted(mut self, note: impl ToString) -> Check {
        self.note = Some(note.to_string());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// What the suite runs on. Defaults are the desk-scale oscillator
/// `m = 1, k = 1, k~ = 2, gamma = 1` on `[0, 10]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub params: OscillatorParams,
    pub boundary: BoundaryData,
    pub t_end: f64,
    pub n: usize,
    /// The consistency conditions treated as normative.
    pub consistency: ConsistencyVariant,
    /// The kernel argument order treated as normative.
    pub kernel_order: KernelArgumentOrder,
    /// The Hamiltonian density treated as normative.
    pub hamiltonian_density: HamiltonianDensity,
    /// Number of random paths and Lagrangians for the variational checks.
    pub random_paths: usize,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            params: OscillatorParams {
                m: 1.0,
                k: 1.0,
                k_tilde: 2.0,
                gamma: 1.0,
            },
            boundary: BoundaryData::Initial { q0: 0.0, v0: 1.0 },
            t_end: 10.0,
            n: 2001,
            consistency: ConsistencyVariant::Derived,
            kernel_order: KernelArgumentOrder::IntegrationTimeFirst,
            hamiltonian_density: HamiltonianDensity::Legendre,
            random_paths: 3,
            seed: 7,
        }
    }
}

impl ValidationConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(invalid(format!("t_end must be positive and finite, got {}", self.t_end)));
        }
        if self.n < 9 || (self.n - 1) % 4 != 0 {
            return Err(invalid(format!("n must be at least 9 with n - 1 divisible by 4, got {}", self.n)));
        }
        if self.random_paths == 0 {
            return Err(invalid("random_paths must be at least 1"));
        }
        let (a, b) = match self.boundary {
            BoundaryData::Initial { q0, v0 } => (q0, v0),
            BoundaryData::TwoPoint { q0, q_bar } => (q0, q_bar),
        };
        if !(a.is_finite() && b.is_finite()) {
            return Err(invalid("boundary data must be finite"));
        }
        Ok(())
    }
}

/// A refinement table attached to the check it supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub check: String,
    #[serde(flatten)]
    pub estimate: ConvergenceEstimate,
}

/// Which members of each variant family agree with their oracle.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub consistency: Vec<String>,
    pub characteristic: Vec<String>,
    pub kernel_order: Vec<String>,
    pub hamiltonian_density: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub config: ValidationConfig,
    pub checks: Vec<Check>,
    pub convergence: Vec<ConvergenceTable>,
    pub variants: VariantSummary,
    pub published_comparison: Option<PublishedComparison>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn normative_failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.normative && !c.passed())
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `c0 + c1 s/T + sum_j a_j sin(j pi s/T + phi_j)`, a smooth path with
/// closed-form derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPath {
    pub t_end: f64,
    pub offset: f64,
    pub slope: f64,
    pub modes: Vec<(f64, f64)>,
}

impl SmoothPath {
    pub fn random(rng: &mut impl Rng, t_end: f64) -> SmoothPath {
        SmoothPath {
            t_end,
            offset: rng.gen_range(-1.0..1.0),
            slope: rng.gen_range(-1.0..1.0),
            modes: (0..3)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect(),
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        let w = std::f64::consts::PI / self.t_end;
        self.offset
            + self.slope * s / self.t_end
            + self
                .modes
                .iter()
                .enumerate()
                .map(|(j, (a, phi))| a * ((j + 1) as f64 * w * s + phi).sin())
                .sum::<f64>()
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let w = std::f64::consts::PI / self.t_end;
        self.slope / self.t_end
            + self
                .modes
                .iter()
                .enumerate()
                .map(|(j, (a, phi))| {
                    let f = (j + 1) as f64 * w;
                    a * f * (f * s + phi).cos()
                })
                .sum::<f64>()
    }

    pub fn sample(&self, grid: Grid) -> Result<Path> {
        Path::from_fn(grid, |s| self.value(s))
    }
}

/// General Lagrangian with coefficients drawn from `[-1, 1]`, `m` from
/// `[0.5, 2]` and an exponential kernel with `gamma` from `[0.5, 2]`.
pub fn random_general_lagrangian(rng: &mut impl Rng) -> GeneralLagrangian {
    let mut c = || rng.gen_range(-1.0..1.0);
    let (a, b, cc, d, e, f, g, h) = (c(), c(), c(), c(), c(), c(), c(), c());
    GeneralLagrangian {
        m: rng.gen_range(0.5..2.0),
        a,
        b,
        c: cc,
        d,
        e,
        f,
        g,
        h,
        kernel: MemoryKernel::Exponential {
            gamma: rng.gen_range(0.5..2.0),
        },
    }
}

fn rel(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

fn initial_data(b: BoundaryData) -> Option<(f64, f64)> {
    match b {
        BoundaryData::Initial { q0, v0 } => Some((q0, v0)),
        BoundaryData::TwoPoint { .. } => None,
    }
}

fn consistency_name(v: ConsistencyVariant) -> &'static str {
    match v {
        ConsistencyVariant::Derived => "derived",
        ConsistencyVariant::Published => "published",
    }
}

fn characteristic_name(v: CharacteristicVariant) -> &'static str {
    match v {
        CharacteristicVariant::Derived => "derived",
        CharacteristicVariant::PublishedOde => "published_ode",
        CharacteristicVariant::PublishedRoots => "published_roots",
    }
}

fn order_name(o: KernelArgumentOrder) -> &'static str {
    match o {
        KernelArgumentOrder::IntegrationTimeFirst => "integration_time_first",
        KernelArgumentOrder::EvaluationTimeFirst => "evaluation_time_first",
    }
}

/// Judges the order read from the finest pair of errors against
/// `target +- tol`. Errors that vanish identically (the rest state) pass
/// trivially; errors that grow give a negative order.
fn order_check(check: Check, sizes: Vec<usize>, errors: Vec<f64>, target: f64, tol: f64) -> Result<(Check, ConvergenceTable)> {
    let name = check.name.clone();
    let estimate = ConvergenceEstimate::from_errors(sizes, errors)?;
    let k = estimate.errors.len() - 1;
    let (e0, e1) = (estimate.errors[k - 1], estimate.errors[k]);
    let ratio = (estimate.sizes[k] - 1) as f64 / (estimate.sizes[k - 1] - 1) as f64;
    let check = if e0 == 0.0 && e1 == 0.0 {
        check.judge(0.0, tol).noted("errors vanish identically")
    } else if e0 > 0.0 && e1 > 0.0 {
        let p = (e0 / e1).ln() / ratio.ln();
        check.metric("order", p).judge((p - target).abs(), tol)
    } else {
        check.failed("one error vanishes and the other does not")
    };
    Ok((check, ConvergenceTable { check: name, estimate }))
}

struct Suite {
    cfg: ValidationConfig,
    checks: Vec<Check>,
    convergence: Vec<ConvergenceTable>,
    rng: ChaCha8Rng,
}

impl Suite {
    fn push(&mut self, c: Check) {
        log::debug!("{}: {:?} (value {:e}, tolerance {:e})", c.name, c.verdict, c.value, c.tolerance);
        self.checks.push(c);
    }

    fn push_order(&mut self, r: Result<(Check, ConvergenceTable)>, fallback: Check) {
        match r {
            Ok((c, t)) => {
                self.push(c);
                self.convergence.push(t);
            }
            Err(e) => self.push(fallback.failed(e)),
        }
    }

    fn oracle_path(&self, n: usize) -> Result<Path> {
        let p = &self.cfg.params;
        let sol = solve_integro(&p, &p.exponential_kernel(), self.cfg.boundary, self.cfg.t_end, n, SolverMethod::Auto)?;
        Ok(sol.path)
    }

    fn closed(&self, options: SolveOptions) -> Result<ClosedFormSolution> {
        solve_closed_form_with(&self.cfg.params, self.cfg.boundary, self.cfg.t_end, options)
    }

    fn closed_form_residual(&mut self, reference: &ClosedFormSolution) {
        let cfg = &self.cfg;
        let base = Check::new("closed_form_residual", "integro-differential residual", "derived", true);
        let residual = |n: usize| -> Result<f64> {
            let path = reference.sample(&Grid::uniform(cfg.t_end, n)?)?;
            crate::published::relative_oscillator_residual(&cfg.params, &path)
        };
        let coarse_n = (cfg.n - 1) / 2 + 1;
        match (residual(cfg.n), residual(coarse_n)) {
            (Ok(fine), Ok(coarse)) => {
                // 1e-5 at n = 4001, scaled with h^2.
                let tol = 1e-5 * (4000.0 / (cfg.n - 1) as f64).powi(2);
                self.push(base.clone().metric("coarse_residual", coarse).judge(fine, tol));
                let ratio_check = Check::new("closed_form_residual_ratio", "grid refinement", "derived", true);
                let ratio = if fine == 0.0 && coarse == 0.0 { 4.0 } else { coarse / fine };
                self.push(
                    ratio_check
                        .metric("fine", fine)
                        .metric("coarse", coarse)
                        .metric("ratio", ratio)
                        .judge((ratio - 4.0).abs(), 0.5),
                );
            }
            (Err(e), _) | (_, Err(e)) => self.push(base.failed(e)),
        }
    }

    fn compare(&self, oracle: &Path, name: &str, variant: &str, normative: bool, options: SolveOptions) -> Check {
        let scale = oracle.max_abs();
        let c = Check::new(name, "collocation oracle", variant, normative);
        match self.closed(options).and_then(|s| s.sample(oracle.grid())) {
            Ok(path) => match path.max_difference(oracle) {
                Ok(d) => c.metric("max_abs_q", scale).metric("max_difference", d).judge(rel(d, scale), 1e-3),
                Err(e) => c.failed(e),
            },
            Err(e) => c.failed(e),
        }
    }

    /// Closed form with each variant against the collocation oracle; the
    /// normative variants also get an observed convergence order.
    fn oracle_agreement(&mut self, oracle: &Path) {
        for v in [ConsistencyVariant::Derived, ConsistencyVariant::Published] {
            let name = format!("consistency_conditions/{}", consistency_name(v));
            let options = SolveOptions {
                consistency: v,
                ..SolveOptions::default()
            };
            let c = self.compare(oracle, &name, consistency_name(v), v == self.cfg.consistency, options);
            self.push(c);
        }
        for v in [
            CharacteristicVariant::Derived,
            CharacteristicVariant::PublishedOde,
            CharacteristicVariant::PublishedRoots,
        ] {
            let name = format!("characteristic_coefficients/{}", characteristic_name(v));
            let options = SolveOptions {
                characteristic: v,
                consistency: self.cfg.consistency,
            };
            let c = self.compare(oracle, &name, characteristic_name(v), v == CharacteristicVariant::Derived, options);
            self.push(c);
        }

        let base = Check::new("oracle_convergence_order", "closed form on refined grids", "derived", true);
        let sizes: Vec<usize> = [4, 2, 1].iter().map(|d| (self.cfg.n - 1) / d + 1).collect();
        let options = SolveOptions {
            consistency: self.cfg.consistency,
            ..SolveOptions::default()
        };
        let errors = self.closed(options).and_then(|sol| {
            sizes
                .iter()
                .map(|&n| {
                    let path = if n == self.cfg.n { oracle.clone() } else { self.oracle_path(n)? };
                    path.max_difference(&sol.sample(path.grid())?)
                })
                .collect::<Result<Vec<f64>>>()
        });
        let r = errors.and_then(|e| order_check(base.clone(), sizes, e, 2.0, 0.2));
        self.push_order(r, base);
    }

    fn large_gamma(&mut self) {
        let p = &self.cfg.params.clone();
        let target = (p.k + p.k_tilde) / p.m;
        for v in [CharacteristicVariant::Derived, CharacteristicVariant::PublishedOde] {
            let name = format!("large_gamma_limit/{}", characteristic_name(v));
            let c = Check::new(&name, "local equation of motion", characteristic_name(v), v == CharacteristicVariant::Derived);
            let c = match large_gamma_stiffness(p, v) {
                Ok(w2) => c
                    .metric("limit_stiffness", w2)
                    .metric("expected", target)
                    .judge(rel((w2 - target).abs(), target.abs().max(1.0)), 1e-6),
                Err(e) => c.failed(e),
            };
            self.push(c);
        }
    }

    fn local_limits(&mut self) {
        let p = self.cfg.params.clone();
        let (q0, v0) = initial_data(self.cfg.boundary).unwrap_or((0.0, 1.0));
        let t = self.cfg.t_end;

        let c = Check::new("local_limit_no_memory", "harmonic oscillator", "derived", true);
        let n = self.cfg.n;
        let run = || -> Result<(f64, f64)> {
            let local = OscillatorParams::new(p.m, p.k, 0.0, p.gamma)?;
            let sol = solve_closed_form(&local, q0, v0, t)?;
            let w = (p.k / p.m).sqrt();
            let grid = Grid::uniform(t, n)?;
            let exact = Path::from_fn(grid, |s| q0 * (w * s).cos() + v0 / w * (w * s).sin())?;
            let spurious = sol.coeffs[0].norm().max(sol.coeffs[1].norm());
            Ok((sol.sample(&grid)?.max_difference(&exact)?, spurious))
        };
        let amp = q0.abs().max(v0.abs()).max(1.0);
        let c = if p.k > 0.0 {
            match run() {
                Ok((d, spurious)) => {
                    let c = c.metric("max_difference", d).metric("spurious_amplitude", spurious);
                    // Both bounds at once: the spurious-mode bound is the tighter.
                    c.judge((d / 1e-6).max(spurious / 1e-10) / amp, 1.0)
                }
                Err(e) => c.failed(e),
            }
        } else {
            Check { normative: false, ..c }.failed("needs k > 0")
        };
        self.push(c);

        let c = Check::new("local_limit_large_gamma", "local frequency sqrt((k + k~)/m)", "derived", true);
        let w = p.local_frequency();
        let c = if w > 0.0 {
            match p.with_gamma(1e3 * w).and_then(|far| solve_closed_form(&far, q0, v0, t)) {
                Ok(sol) => {
                    let x2 = sol.roots[1].norm();
                    c.metric("abs_x2", x2).metric("local_frequency", w).judge((x2 - w).abs() / w, 1e-2)
                }
                Err(e) => c.failed(e),
            }
        } else {
            Check { normative: false, ..c }.failed("needs k + k~ > 0")
        };
        self.push(c);
    }

    fn rest_state(&mut self) {
        let p = self.cfg.params.clone();
        let t = self.cfg.t_end;
        let n = self.cfg.n;
        let grid = match Grid::uniform(t, n) {
            Ok(g) => g,
            Err(e) => return self.push(Check::new("rest_state/closed_form", "zero trajectory", "derived", true).failed(e)),
        };
        let closed = solve_closed_form(&p, 0.0, 0.0, t).and_then(|s| s.sample(&grid)).map(|x| x.max_abs());
        let oracle = solve_integro(&p, &p.exponential_kernel(), BoundaryData::Initial { q0: 0.0, v0: 0.0 }, t, n, SolverMethod::Auto)
            .map(|s| s.path.max_abs());
        let printed = appendix_solution(&p, 0.0, 0.0, t).and_then(|s| s.sample(&grid)).map(|(x, _)| x.max_abs());
        for (name, r) in [("closed_form", closed), ("oracle", oracle), ("appendix", printed)] {
            let c = Check::new(&format!("rest_state/{name}"), "zero trajectory", name, true);
            self.push(match r {
                Ok(m) => c.judge(m, 0.0),
                Err(e) => c.failed(e),
            });
        }
    }

    fn action_equality(&mut self) {
        let t = self.cfg.t_end.min(4.0);
        let mut worst = 0.0_f64;
        let c = Check::new("action_equality", "Gauss-Legendre action of both forms", "derived", true);
        for _ in 0..self.cfg.random_paths {
            let form = random_general_lagrangian(&mut self.rng);
            let path = SmoothPath::random(&mut self.rng, t);
            let r = form.to_reduced(t).and_then(|red| {
                let q = |s| path.value(s);
                let v = |s| path.derivative(s);
                let quad = SmoothQuadrature::default();
                Ok((action_smooth(&form, q, v, t, quad)?, action_smooth(&red, q, v, t, quad)?))
            });
            match r {
                Ok((a, b)) => worst = worst.max(rel((a - b).abs(), a.abs().max(b.abs()))),
                Err(e) => return self.push(c.failed(e)),
            }
        }
        self.push(c.metric("paths", self.cfg.random_paths as f64).judge(worst, 1e-8));
    }

    fn gradient_order(&mut self) {
        let t = self.cfg.t_end.min(4.0);
        let base = Check::new("gradient_vs_analytic", "numerical functional derivative", "derived", true);
        let sizes = vec![41, 81];
        let mut worst = 0.0_f64;
        let mut table = None;
        for _ in 0..self.cfg.random_paths {
            let form = random_general_lagrangian(&mut self.rng);
            let path = SmoothPath::random(&mut self.rng, t);
            let errors = sizes
                .iter()
                .map(|&n| {
                    let p = path.sample(Grid::uniform(t, n)?)?;
                    crate::variational::gradient_vs_analytic(&form, &p, QuadratureRule::Trapezoid)
                })
                .collect::<Result<Vec<f64>>>();
            match errors.and_then(|e| order_check(base.clone(), sizes.clone(), e, 2.0, 0.3)) {
                Ok((c, t)) => {
                    if !c.passed() || c.value >= worst {
                        worst = c.value;
                        table = Some(t);
                    }
                    if !c.passed() {
                        return self.push(c);
                    }
                }
                Err(e) => return self.push(base.failed(e)),
            }
        }
        self.push(base.metric("paths", self.cfg.random_paths as f64).judge(worst, 0.3));
        self.convergence.extend(table);
    }

    /// An asymmetric tabulated kernel separates the two argument orders:
    /// only one of them makes the analytic residual the gradient of the
    /// action.
    fn kernel_order(&mut self) {
        let t = 2.0;
        let sizes = vec![41, 81];
        let run = |order: KernelArgumentOrder| -> Result<Vec<f64>> {
            sizes
                .iter()
                .map(|&n| {
                    let grid = Grid::uniform(t, n)?;
                    let kernel = TabulatedKernel::from_fn(grid, |a, b| (1.0 + 0.5 * a) * (-(a - b).abs()).exp())?;
                    let form = GeneralLagrangian {
                        b: -0.5,
                        f: -1.0,
                        ..GeneralLagrangian::free(1.0, MemoryKernel::Tabulated(kernel))
                    };
                    let path = Path::from_fn(grid, |s| 0.4 + (1.3 * s).sin())?;
                    let g = functional_gradient(&form, &path, QuadratureRule::Trapezoid, 1e-2)?;
                    let r = el_residual_analytic(&form.to_reduced(t)?, &path, order)?;
                    Ok(g.clean_nodes().map(|i| (g.values[i] + r.r[i - 1]).abs()).fold(0.0, f64::max))
                })
                .collect()
        };
        for order in [KernelArgumentOrder::IntegrationTimeFirst, KernelArgumentOrder::EvaluationTimeFirst] {
            let base = Check::new(
                &format!("kernel_argument_order/{}", order_name(order)),
                "numerical functional derivative",
                order_name(order),
                order == self.cfg.kernel_order,
            );
            let r = run(order).and_then(|e| order_check(base.clone(), sizes.clone(), e, 2.0, 0.3));
            self.push_order(r, base);
        }
    }

    fn hamiltonian(&mut self, reference: &ClosedFormSolution) {
        let rule = QuadratureRule::Trapezoid;
        let t = self.cfg.t_end.min(4.0);

        let c = Check::new("legendre_roundtrip", "action of the same path", "derived", true);
        let mut worst = 0.0_f64;
        for _ in 0..self.cfg.random_paths {
            let form = random_general_lagrangian(&mut self.rng);
            let path = SmoothPath::random(&mut self.rng, t);
            let r = Grid::uniform(t, 201).and_then(|g| {
                let p = path.sample(g)?;
                let s = action(&form.to_reduced(t)?, &p, rule)?;
                Ok(rel(legendre_roundtrip(&form, &p, rule)?, s.abs()))
            });
            match r {
                Ok(d) => worst = worst.max(d),
                Err(e) => return self.push(c.failed(e)),
            }
        }
        self.push(c.judge(worst, 1e-12));

        // p = m q' from the exact velocity: dH/dp differs from the finite
        // differences of q by their truncation error.
        let base = Check::new("hamilton_velocity_equation", "finite differences of the closed form", "derived", true);
        let params = self.cfg.params.clone();
        let sizes: Vec<usize> = vec![201, 401, 801];
        let errors = sizes
            .iter()
            .map(|&n| {
                let grid = Grid::uniform(reference.t_end, n)?;
                let q = reference.sample(&grid)?.into_positions();
                let p: Vec<f64> = reference.sample_velocity(&grid)?.iter().map(|v| params.m * v).collect();
                let phase = PhasePath::new(grid, q, p.clone())?;
                let h = 1e-2 * p.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
                let r = hamilton_residuals(&params, &phase, rule, h)?;
                Ok(r.interior_max().0)
            })
            .collect::<Result<Vec<f64>>>();
        let r = errors.and_then(|e| order_check(base.clone(), sizes, e, 2.0, 0.3));
        self.push_order(r, base);

        let c = Check::new("hamilton_position_equation", "action derivative at fixed velocity", "derived", true);
        let mut worst = 0.0_f64;
        for _ in 0..self.cfg.random_paths {
            let form = random_general_lagrangian(&mut self.rng);
            let (qp, pp) = (SmoothPath::random(&mut self.rng, t), SmoothPath::random(&mut self.rng, t));
            let r = Grid::uniform(t, 101).and_then(|g| {
                let phase = PhasePath::new(g, qp.sample(g)?.into_positions(), pp.sample(g)?.into_positions())?;
                let res = hamilton_residuals(&form, &phase, rule, 1e-2)?;
                Ok(res.interior_max().1)
            });
            match r {
                Ok(d) => worst = worst.max(d),
                Err(e) => return self.push(c.failed(e)),
            }
        }
        self.push(c.judge(worst, 1e-8));

        let mut deviation = [0.0_f64; 2];
        let mut err = None;
        for _ in 0..self.cfg.random_paths {
            let mut form = random_general_lagrangian(&mut self.rng);
            if form.a.abs() < 0.1 {
                form.a = 0.5;
            }
            let (qp, pp) = (SmoothPath::random(&mut self.rng, t), SmoothPath::random(&mut self.rng, t));
            let r = Grid::uniform(t, 201).and_then(|g| {
                let phase = PhasePath::new(g, qp.sample(g)?.into_positions(), pp.sample(g)?.into_positions())?;
                let h = generalized_hamiltonian(&form, &phase, rule)?;
                let mut out = [0.0; 2];
                for (k, d) in [HamiltonianDensity::Legendre, HamiltonianDensity::Published].into_iter().enumerate() {
                    out[k] = rel((analytic_hamiltonian(&form, &phase, rule, d)? - h).abs(), h.abs().max(1.0));
                }
                Ok(out)
            });
            match r {
                Ok([a, b]) => deviation = [deviation[0].max(a), deviation[1].max(b)],
                Err(e) => err = Some(e),
            }
        }
        let densities = [("legendre", HamiltonianDensity::Legendre), ("published", HamiltonianDensity::Published)];
        for (k, (name, density)) in densities.into_iter().enumerate() {
            let normative = density == self.cfg.hamiltonian_density;
            let c = Check::new(&format!("hamiltonian_density/{name}"), "Legendre transform of the action", name, normative);
            self.push(match &err {
                Some(e) => c.failed(e),
                None => c.judge(deviation[k], 1e-10),
            });
        }
    }

    fn published(&mut self) -> Option<PublishedComparison> {
        let p = self.cfg.params.clone();
        let c = Check::new("appendix_roots_without_spring", "derived characteristic roots", "published", true);
        let c = match OscillatorParams::new(p.m, 0.0, p.k_tilde, p.gamma)
            .and_then(|z| compare_published_vs_derived(&z, 0.0, 1.0, self.cfg.t_end, 201))
        {
            Ok(cmp) => match (cmp.roots_verdict, cmp.root_difference) {
                (FormulaVerdict::Degenerate, _) | (_, None) => c.failed("degenerate roots"),
                (_, Some(d)) => c.judge(d, 1e-12),
            },
            Err(e) => c.failed(e),
        };
        self.push(c);

        let Some((q0, v0)) = initial_data(self.cfg.boundary) else {
            self.push(
                Check::new("appendix_solution", "derived closed form", "published", false)
                    .failed("the printed solution is an initial-value solution"),
            );
            return None;
        };
        match compare_published_vs_derived(&p, q0, v0, self.cfg.t_end, self.cfg.n) {
            Ok(cmp) => {
                let mut c = Check::new("appendix_roots", "derived characteristic roots", "published", false);
                if let Some(d) = cmp.root_difference {
                    c = c.judge(d, 1e-12);
                } else {
                    c = c.failed("degenerate roots");
                }
                for (key, v) in [
                    ("derived_residual", cmp.derived_residual),
                    ("published_roots_residual", cmp.published_roots_residual),
                ] {
                    if let Some(v) = v {
                        c = c.metric(key, v);
                    }
                }
                let satisfied = match (cmp.derived_residual, cmp.published_roots_residual) {
                    (Some(d), Some(pr)) if d <= 1e-5 && pr > 1e-5 => "derived roots satisfy the equation of motion",
                    (Some(d), Some(pr)) if d <= 1e-5 && pr <= 1e-5 => "both root sets satisfy the equation of motion",
                    (_, Some(pr)) if pr <= 1e-5 => "printed roots satisfy the equation of motion",
                    _ => "neither root set satisfies the equation of motion",
                };
                self.push(c.noted(satisfied));

                let c = Check::new("appendix_solution", "derived closed form", "published", false);
                let c = match (cmp.solution_difference, &cmp.published_solution_error) {
                    (_, Some(e)) => c.failed(e),
                    (Some(d), None) => {
                        let mut c = c.metric("max_difference", d);
                        for (key, v) in [
                            ("residual", cmp.published_solution_residual),
                            ("initial_velocity", cmp.published_initial_velocity),
                            ("max_imaginary", cmp.published_max_imaginary),
                        ] {
                            if let Some(v) = v {
                                c = c.metric(key, v);
                            }
                        }
                        let scale = q0.abs().max(v0.abs()).max(1.0);
                        c.judge(d / scale, 1e-8)
                    }
                    (None, None) => c.failed("no derived reference"),
                };
                self.push(c);
                Some(cmp)
            }
            Err(e) => {
                self.push(Check::new("appendix_solution", "derived closed form", "published", false).failed(e));
                None
            }
        }
    }

    fn variants(&self) -> VariantSummary {
        let agreeing = |prefix: &str| -> Vec<String> {
            self.checks
                .iter()
                .filter(|c| c.name.starts_with(prefix) && c.passed())
                .map(|c| c.variant.clone())
                .collect()
        };
        VariantSummary {
            consistency: agreeing("consistency_conditions/"),
            characteristic: agreeing("characteristic_coefficients/"),
            kernel_order: agreeing("kernel_argument_order/"),
            hamiltonian_density: agreeing("hamiltonian_density/"),
        }
    }
}

/// Runs the full suite. Only an invalid configuration or a failure of the
/// normative solvers themselves is an error; everything else is recorded
/// as a verdict.
pub fn run_validation(cfg: &ValidationConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let mut suite = Suite {
        cfg: cfg.clone(),
        checks: Vec::new(),
        convergence: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };
    let reference = suite.closed(SolveOptions::default())?;
    let oracle = suite.oracle_path(cfg.n)?;

    suite.closed_form_residual(&reference);
    suite.oracle_agreement(&oracle);
    suite.large_gamma();
    suite.local_limits();
    suite.rest_state();
    suite.action_equality();
    suite.gradient_order();
    suite.kernel_order();
    suite.hamiltonian(&reference);
    let published_comparison = suite.published();

    let variants = suite.variants();
    let passed = suite.checks.iter().filter(|c| c.normative).all(Check::passed);
    Ok(ValidationReport {
        schema_version: SCHEMA_VERSION,
        tool: "tnl".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        checks: suite.checks,
        convergence: suite.convergence,
        variants,
        published_comparison,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let report = run_validation(&ValidationConfig::default()).unwrap();
        let failures: Vec<_> = report.normative_failures().collect();
        assert!(failures.is_empty(), "{failures:#?}");
        assert!(report.passed);
        assert!(report.checks.len() >= 12);
        assert_eq!(report.variants.consistency, ["derived"]);
        assert_eq!(report.variants.characteristic, ["derived"]);
        assert_eq!(report.variants.kernel_order, ["integration_time_first"]);
        assert_eq!(report.variants.hamiltonian_density, ["legendre"]);
    }

    #[test]
    fn published_conditions_as_normative_fail() {
        let cfg = ValidationConfig {
            consistency: ConsistencyVariant::Published,
            ..ValidationConfig::default()
        };
        let report = run_validation(&cfg).unwrap();
        assert!(!report.passed);
        let c = report.check("consistency_conditions/published").unwrap();
        assert!(c.normative && c.verdict == Verdict::Fail);
    }

    #[test]
    fn zero_trajectory_passes() {
        let cfg = ValidationConfig {
            boundary: BoundaryData::Initial { q0: 0.0, v0: 0.0 },
            n: 401,
            ..ValidationConfig::default()
        };
        let report = run_validation(&cfg).unwrap();
        for name in ["closed_form_residual", "closed_form_residual_ratio", "oracle_convergence_order", "rest_state/oracle"] {
            assert!(report.check(name).unwrap().passed(), "{name}");
        }
    }

    #[test]
    fn bad_config() {
        let cfg = ValidationConfig {
            n: 100,
            ..ValidationConfig::default()
        };
        assert!(run_validation(&cfg).is_err());
    }

    #[test]
    fn config_json_defaults() {
        let cfg: ValidationConfig = serde_json::from_str(r#"{"t_end": 5.0}"#).unwrap();
        assert_eq!(cfg.t_end, 5.0);
        assert_eq!(cfg.n, 2001);
        assert!(serde_json::from_str::<ValidationConfig>(r#"{"nope": 1}"#).is_err());
    }

    #[test]
    fn smooth_path_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = SmoothPath::random(&mut rng, 3.0);
        let h = 1e-6;
        for s in [0.1, 1.2, 2.9] {
            let fd = (p.value(s + h) - p.value(s - h)) / (2.0 * h);
            assert!((fd - p.derivative(s)).abs() < 1e-8);
        }
    }
}
