//! Trajectory diagnostics: periods and amplitudes, the transient before the
//! motion settles into harmonic oscillation, and sweeps over the memory
//! cutoff compared with the local oscillator of spring constant `k + k~`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::{solve_closed_form, ClosedFormSolution};
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, Path};
use crate::lagrangian::{Lagrangian, OscillatorParams};
use crate::quadrature::QuadratureRule;

/// Relative spread of crossing intervals accepted as settled.
const SETTLED_TOL: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodAmplitude {
    pub period: f64,
    pub amplitude: f64,
    pub crossings: usize,
}

/// Zero crossings, interpolated linearly between nodes.
#[derive(Debug, Clone, Default, PartialEq)]
struct Crossings {
    up: Vec<f64>,
    down: Vec<f64>,
}

fn crossings(path: &Path, lo: f64, hi: f64) -> Crossings {
    let s = path.grid().nodes();
    let q = path.positions();
    let mut out = Crossings::default();
    for i in 0..q.len() - 1 {
        let (a, b) = (q[i], q[i + 1]);
        let up = a <= 0.0 && b > 0.0;
        let down = a >= 0.0 && b < 0.0;
        if !(up || down) {
            continue;
        }
        let t = s[i] + (s[i + 1] - s[i]) * a / (a - b);
        if t < lo || t > hi {
            continue;
        }
        if up {
            out.up.push(t);
        } else {
            out.down.push(t);
        }
    }
    out
}

/// Local extrema strictly inside `[lo, hi]`, refined by a parabola through
/// the three nodes around each discrete extremum.
fn extrema(path: &Path, lo: f64, hi: f64) -> Vec<f64> {
    let s = path.grid().nodes();
    let q = path.positions();
    let mut out = Vec::new();
    for i in 1..q.len() - 1 {
        if s[i] < lo || s[i] > hi {
            continue;
        }
        let (a, b, c) = (q[i - 1], q[i], q[i + 1]);
        let is_max = b > a && b >= c;
        let is_min = b < a && b <= c;
        if !(is_max || is_min) {
            continue;
        }
        let curv = a - 2.0 * b + c;
        let peak = if curv != 0.0 { b - (c - a) * (c - a) / (8.0 * curv) } else { b };
        out.push(peak.abs());
    }
    out
}

fn mean_spacing(t: &[f64]) -> Option<(f64, usize)> {
    (t.len() >= 2).then(|| ((t[t.len() - 1] - t[0]) / (t.len() - 1) as f64, t.len() - 1))
}

/// Period from the mean spacing of same-direction zero crossings (up and
/// down crossings pooled) and amplitude from the mean `|extremum|` inside
/// `window`.
pub fn estimate_period_amplitude(path: &Path, window: (f64, f64)) -> Result<PeriodAmplitude> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(invalid(format!("window [{lo}, {hi}] is empty")));
    }
    let c = crossings(path, lo, hi);
    let total = c.up.len() + c.down.len();
    if total < 3 {
        return Err(Error::InsufficientData(format!(
            "{total} zero crossings in [{lo}, {hi}], need at least 3"
        )));
    }
    let (mut span, mut count) = (0.0, 0usize);
    for dir in [&c.up, &c.down] {
        if let Some((mean, k)) = mean_spacing(dir) {
            span += mean * k as f64;
            count += k;
        }
    }
    if count == 0 {
        return Err(Error::InsufficientData("no pair of same-direction crossings".into()));
    }
    let peaks = extrema(path, lo, hi);
    if peaks.is_empty() {
        return Err(Error::InsufficientData("no extrema in the window".into()));
    }
    Ok(PeriodAmplitude {
        period: span / count as f64,
        amplitude: peaks.iter().sum::<f64>() / peaks.len() as f64,
        crossings: total,
    })
}

/// The three regimes of a trajectory with memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub gamma: f64,
    /// Earliest time after which the running period estimate stays within
    /// 2% of its last value. `None` when the motion never settles.
    pub transient_end: Option<f64>,
    pub stabilized: bool,
    pub longtime_period: Option<f64>,
    pub longtime_amplitude: Option<f64>,
    /// `2 pi / |x2|`, the period of the oscillating root.
    pub root_period: Option<f64>,
    /// `2 pi sqrt(m / (k + k~))`.
    pub local_period: f64,
    /// `v0 sqrt(m / (k + k~))`.
    pub local_amplitude: f64,
    /// Start of the end layer excluded from the analysis, where the mode
    /// anchored at the final time shows up.
    pub end_layer_start: f64,
    /// `max |q - q_local|` over the first quarter local period, relative
    /// to the local amplitude: how closely the motion starts out local.
    pub early_deviation: Option<f64>,
}

/// Classical oscillator with spring constant `k + k~` and the same initial
/// data.
pub fn local_reference(params: &OscillatorParams, q0: f64, v0: f64, s: f64) -> f64 {
    let w = params.local_frequency();
    q0 * (w * s).cos() + v0 / w * (w * s).sin()
}

/// Stage analysis of a closed-form trajectory sampled on `n` nodes.
pub fn detect_stages(sol: &ClosedFormSolution, n: usize) -> Result<StageReport> {
    let t = sol.t_end;
    let grid = Grid::uniform(t, n)?;
    let path = sol.sample(&grid)?;
    let params = &sol.params;
    let (q0, v0) = (sol.eval(0.0, 0)?, sol.eval(0.0, 1)?);
    let local_period = 2.0 * std::f64::consts::PI / params.local_frequency();
    let local_amplitude = (q0 * q0 + (v0 / params.local_frequency()).powi(2)).sqrt();
    let [x1, x2] = sol.roots;
    let layer = if x1.re > 0.0 { (1e6_f64).ln() / x1.re } else { f64::INFINITY };
    let end_layer_start = t - layer.min(t / 3.0);
    let root_period = (x2.im.abs() > 0.0).then(|| 2.0 * std::f64::consts::PI / x2.im.abs());

    let early_window = 0.25 * local_period;
    let early_deviation = if local_amplitude > 0.0 && early_window <= t {
        let dev = grid
            .nodes()
            .into_iter()
            .zip(path.positions())
            .take_while(|(s, _)| *s <= early_window)
            .fold(0.0_f64, |m, (s, q)| m.max((q - local_reference(params, q0, v0, s)).abs()));
        Some(dev / local_amplitude)
    } else {
        None
    };

    // Running period estimate: twice the spacing of consecutive crossings,
    // so a short interval still holds enough estimates.
    let c = crossings(&path, 0.0, end_layer_start);
    let mut all = [c.up, c.down].concat();
    all.sort_by(f64::total_cmp);
    let intervals: Vec<f64> = all.windows(2).map(|w| 2.0 * (w[1] - w[0])).collect();
    let mut report = StageReport {
        gamma: params.gamma,
        transient_end: None,
        stabilized: false,
        longtime_period: None,
        longtime_amplitude: None,
        root_period,
        local_period,
        local_amplitude,
        end_layer_start,
        early_deviation,
    };
    if intervals.len() < 2 {
        return Ok(report);
    }
    let last = intervals[intervals.len() - 1];
    let settled = |x: &f64| (x - last).abs() <= SETTLED_TOL * last;
    // First index from which every interval is settled.
    let mut k = intervals.len() - 1;
    while k > 0 && settled(&intervals[k - 1]) {
        k -= 1;
    }
    if k == intervals.len() - 1 {
        // Only the final interval agrees with itself: not settled.
        return Ok(report);
    }
    let transient_end = if k == 0 { 0.0 } else { all[k] };
    report.transient_end = Some(transient_end);
    report.stabilized = true;
    match estimate_period_amplitude(&path, (transient_end, end_layer_start)) {
        Ok(pa) => {
            report.longtime_period = Some(pa.period);
            report.longtime_amplitude = Some(pa.amplitude);
        }
        Err(Error::InsufficientData(_)) => {
            report.longtime_period = Some(intervals[k..].iter().sum::<f64>() / (intervals.len() - k) as f64);
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// One row of a cutoff sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub gamma: f64,
    /// `||q - q_local||_2` on the common grid (trapezoid).
    pub l2_distance: f64,
    /// `||q_local||_2` on the same grid.
    pub local_norm: f64,
    /// `max |q|` over the last third of the interval.
    pub late_max_abs: f64,
    pub stages: StageReport,
    #[serde(skip)]
    pub path: Option<Path>,
}

/// Closed-form trajectories for every `gamma` in `gammas` (positive and
/// increasing), compared with the local reference on an `n`-node grid.
/// Entries are computed in parallel on the current rayon pool.
pub fn gamma_sweep(
    params: &OscillatorParams,
    gammas: &[f64],
    q0: f64,
    v0: f64,
    t_end: f64,
    n: usize,
) -> Result<Vec<SweepEntry>> {
    if gammas.is_empty() {
        return Err(invalid("the gamma list is empty"));
    }
    if gammas.iter().any(|g| !(g.is_finite() && *g > 0.0)) || gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("gamma values must be positive and strictly increasing"));
    }
    params.validate()?;
    let grid = Grid::uniform(t_end, n)?;
    let reference: Vec<f64> = grid.nodes().into_iter().map(|s| local_reference(params, q0, v0, s)).collect();
    let rule = QuadratureRule::Trapezoid;
    let local_norm = rule
        .integrate(&grid, &reference.iter().map(|x| x * x).collect::<Vec<_>>())?
        .sqrt();
    gammas
        .par_iter()
        .map(|&gamma| {
            let p = params.with_gamma(gamma)?;
            let sol = solve_closed_form(&p, q0, v0, t_end)?;
            let path = sol.sample(&grid)?;
            let (a, b) = (sol.eval(0.0, 0)?, sol.eval(0.0, 1)?);
            if (a - q0).abs() > 1e-10 * q0.abs().max(1.0) || (b - v0).abs() > 1e-10 * v0.abs().max(1.0) {
                return Err(Error::Consistency(format!(
                    "trajectory at gamma = {gamma} misses its initial data"
                )));
            }
            let sq: Vec<f64> = path.positions().iter().zip(&reference).map(|(x, y)| (x - y) * (x - y)).collect();
            let l2_distance = rule.integrate(&grid, &sq)?.sqrt();
            let late_max_abs = grid
                .nodes()
                .into_iter()
                .zip(path.positions())
                .filter(|(s, _)| *s >= 2.0 * t_end / 3.0)
                .fold(0.0_f64, |m, (_, q)| m.max(q.abs()));
            Ok(SweepEntry {
                gamma,
                l2_distance,
                local_norm,
                late_max_abs,
                stages: detect_stages(&sol, n)?,
                path: Some(path),
            })
        })
        .collect()
}

/// Whether the L2 distances decrease strictly along the sweep.
pub fn distances_strictly_decreasing(entries: &[SweepEntry]) -> bool {
    entries.windows(2).all(|w| w[1].l2_distance < w[0].l2_distance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn osc(m: f64, k: f64, kt: f64, g: f64) -> OscillatorParams {
        OscillatorParams::new(m, k, kt, g).unwrap()
    }

    #[test]
    fn pure_sinusoid() {
        let g = Grid::uniform(20.0, 20001).unwrap();
        let p = Path::from_fn(g, |s| (2.0 * s).sin()).unwrap();
        for window in [(0.0, 7.0), (3.3, 12.0), (1.0, 19.5)] {
            let pa = estimate_period_amplitude(&p, window).unwrap();
            assert!((pa.period / std::f64::consts::PI - 1.0).abs() < 1e-4, "{pa:?}");
            assert!((pa.amplitude - 1.0).abs() < 1e-4, "{pa:?}");
        }
    }

    #[test]
    fn too_few_crossings() {
        let g = Grid::uniform(1.0, 101).unwrap();
        let p = Path::from_fn(g, |s| (2.0 * s).sin()).unwrap();
        assert!(matches!(estimate_period_amplitude(&p, (0.1, 1.0)), Err(Error::InsufficientData(_))));
        assert!(estimate_period_amplitude(&p, (1.0, 0.5)).is_err());
    }

    #[test]
    fn local_solution_period() {
        let p = osc(2.0, 3.0, 0.0, 1.0);
        let sol = solve_closed_form(&p, 0.0, 1.0, 30.0).unwrap();
        let path = sol.sample(&Grid::uniform(30.0, 30001).unwrap()).unwrap();
        let pa = estimate_period_amplitude(&path, (0.0, 30.0)).unwrap();
        let expected = 2.0 * std::f64::consts::PI * (2.0_f64 / 3.0).sqrt();
        assert!((pa.period / expected - 1.0).abs() < 1e-4);
        let st = detect_stages(&sol, 30001).unwrap();
        assert!(st.stabilized);
        assert_eq!(st.transient_end, Some(0.0));
    }

    #[test]
    fn rest_state_never_stabilizes() {
        let sol = solve_closed_form(&osc(1.0, 1.0, 2.0, 1.0), 0.0, 0.0, 10.0).unwrap();
        let st = detect_stages(&sol, 1001).unwrap();
        assert!(!st.stabilized && st.transient_end.is_none());
    }

    #[test]
    fn stiff_trajectory_settles_at_root_frequency() {
        let sol = solve_closed_form(&osc(1.0, 1.0, 1e6, 1.0), 0.0, 1.0, 2.0).unwrap();
        let st = detect_stages(&sol, 20001).unwrap();
        assert!(st.stabilized);
        let period = st.longtime_period.unwrap();
        assert!((period / st.root_period.unwrap() - 1.0).abs() < 5e-3, "{st:?}");
        assert!(period > st.local_period);
        assert!(st.longtime_amplitude.unwrap() > st.local_amplitude);
    }

    #[test]
    fn sweep_validation() {
        let p = osc(1.0, 1.0, 2.0, 1.0);
        assert!(gamma_sweep(&p, &[], 0.0, 1.0, 1.0, 11).is_err());
        assert!(gamma_sweep(&p, &[0.5, 0.3], 0.0, 1.0, 1.0, 11).is_err());
        assert!(gamma_sweep(&p, &[-1.0], 0.0, 1.0, 1.0, 11).is_err());
    }

    #[test]
    fn large_cutoff_approaches_local_motion() {
        let p = osc(1.0, 1.0, 2.0, 1.0);
        let gamma = 1e3 * 3.0_f64.sqrt();
        let e = gamma_sweep(&p, &[gamma], 0.0, 1.0, 10.0, 4001).unwrap();
        assert!(e[0].l2_distance <= 0.01 * e[0].local_norm, "{} {}", e[0].l2_distance, e[0].local_norm);
    }
}
