use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use tnl_core::{BoundaryData, ConsistencyVariant, HamiltonianDensity, KernelArgumentOrder, OscillatorParams};

use crate::args::{Method, Options, Variant};
use crate::failure::Failure;

/// A fully resolved run: flags over config file over per-command defaults.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub params: OscillatorParams,
    pub boundary: BoundaryData,
    pub t_end: f64,
    pub n: usize,
    pub method: Method,
    pub consistency: ConsistencyVariant,
    pub kernel_order: KernelArgumentOrder,
    pub hamiltonian_density: HamiltonianDensity,
    pub gammas: Vec<f64>,
    pub jobs: Option<usize>,
    pub out: PathBuf,
}

/// Desk-scale oscillator used by `solve` and `validate`.
pub fn desk_defaults() -> Options {
    Options {
        m: Some(1.0),
        k: Some(1.0),
        ktilde: Some(2.0),
        gamma: Some(1.0),
        q0: Some(0.0),
        t_end: Some(10.0),
        n: Some(2001),
        ..Options::default()
    }
}

/// Parameters of the figures: a stiff memory coupling on a short interval.
pub fn figure_defaults() -> Options {
    Options {
        m: Some(1.0),
        k: Some(1.0),
        ktilde: Some(1e6),
        gamma: Some(1.0),
        q0: Some(0.0),
        t_end: Some(2.0),
        n: Some(20001),
        gammas: Some(vec![0.1, 0.3, 0.7]),
        ..Options::default()
    }
}

/// The boundary datum besides `q0`.
enum Second {
    Velocity(f64),
    Final(f64),
}

fn load(path: &PathBuf) -> Result<Options, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("bad config {}: {e}", path.display())))
}

pub fn resolve(flags: Options, defaults: Options) -> Result<RunConfig, Failure> {
    let file = match &flags.config {
        Some(p) => load(p)?,
        None => Options::default(),
    };
    // The boundary mode comes from the flags if they name one, else from
    // the file; the two modes never mix.
    let mode = match (flags.v0, flags.qbar, file.v0, file.qbar) {
        (_, Some(q), _, _) => Second::Final(q),
        (Some(v), None, _, _) => Second::Velocity(v),
        (None, None, Some(_), Some(_)) => return Err(Failure::input("config sets both v0 and qbar")),
        (None, None, _, Some(q)) => Second::Final(q),
        (None, None, Some(v), None) => Second::Velocity(v),
        (None, None, None, None) => Second::Velocity(1.0),
    };
    let o = flags.or(file).or(defaults);
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Failure::input(format!("missing --{name}")));
    let params = OscillatorParams::new(need(o.m, "m")?, need(o.k, "k")?, need(o.ktilde, "ktilde")?, need(o.gamma, "gamma")?)?;
    let q0 = need(o.q0, "q0")?;
    let boundary = match mode {
        Second::Final(q_bar) => BoundaryData::TwoPoint { q0, q_bar },
        Second::Velocity(v0) => BoundaryData::Initial { q0, v0 },
    };
    let t_end = need(o.t_end, "t-end")?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Failure::input(format!("--t-end must be positive, got {t_end}")));
    }
    let n = o.n.ok_or_else(|| Failure::input("missing --n"))?;
    if n < 5 {
        return Err(Failure::input(format!("--n must be at least 5, got {n}")));
    }
    if o.jobs == Some(0) {
        return Err(Failure::input("--jobs must be at least 1"));
    }
    Ok(RunConfig {
        params,
        boundary,
        t_end,
        n,
        method: o.method.unwrap_or(Method::Closed),
        consistency: match o.variant_consistency {
            Some(Variant::Paper) => ConsistencyVariant::Published,
            _ => ConsistencyVariant::Derived,
        },
        kernel_order: match o.variant_kernel_order {
            Some(Variant::Paper) => KernelArgumentOrder::EvaluationTimeFirst,
            _ => KernelArgumentOrder::IntegrationTimeFirst,
        },
        hamiltonian_density: match o.variant_hamiltonian {
            Some(Variant::Paper) => HamiltonianDensity::Published,
            _ => HamiltonianDensity::Legendre,
        },
        gammas: o.gammas.unwrap_or_default(),
        jobs: o.jobs,
        out: o.out.unwrap_or_else(|| PathBuf::from(".")),
    })
}
