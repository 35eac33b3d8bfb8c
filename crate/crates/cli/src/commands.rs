//! One function per subcommand. Each returns an [`Outcome`]; `main` turns it
//! into stdout lines, an optional JSON artifact and an exit code.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use szego_core::certify::{run_criterion, CriterionOutcome, Scale};
use szego_core::compose::{compose_zn, verify_flow_commutation};
use szego_core::dynamics::{integrate, SimulationConfig};
use szego_core::hardy::conserved;
use szego_core::operators::{spectral_report, verify_lax_at, DEFAULT_RANK_TOL};
use szego_core::sampling::{random_geometric, random_state, seeded};
use szego_core::steady::{build_steady, steady_check, steady_residuals, theta_grid, SteadyV3Params};
use szego_core::traveling::{build_profile, residual_traveling, Family, TravelingWaveSpec};
use szego_core::v3::{instability_experiment_with, InstabilityConfig, V3State};
use szego_core::{Error as CoreError, HardyCoefficients, C64};

use crate::config::{usage, CliError};

pub struct Outcome {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub params: Value,
    pub result: Value,
    pub failures: Vec<String>,
    pub lines: Vec<String>,
    pub out: Option<PathBuf>,
    /// False when stdout carries data that a verdict line would corrupt.
    pub verdict: bool,
}

/// JSON artifact layout shared by every subcommand.
#[derive(Serialize)]
struct Artifact<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    params: &'a Value,
    passed: bool,
    failures: &'a [String],
    result: &'a Value,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn write_artifact(&self, path: &Path) -> Result<(), CliError> {
        let art = Artifact {
            tool: "szego",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.seed,
            params: &self.params,
            passed: self.passed(),
            failures: &self.failures,
            result: &self.result,
        };
        write_json(path, &art)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Failed(e.to_string()))?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| CliError::Failed(e.to_string()))
}

fn read_state(path: &Path) -> Result<HardyCoefficients, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    if jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Initial data `b + cz/(1 - pz)`; defaults to `b = 0.3+0.1i, c = 1, p = 0.4`.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(default, deny_unknown_fields)]
pub struct V3Args {
    #[arg(long, allow_hyphen_values = true)]
    pub b_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b_im: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c_im: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p_im: Option<f64>,
}

impl V3Args {
    fn state(&self) -> Result<V3State, CliError> {
        let s = V3State::new(
            C64::new(self.b_re.unwrap_or(0.3), self.b_im.unwrap_or(0.1)),
            C64::new(self.c_re.unwrap_or(1.0), self.c_im.unwrap_or(0.0)),
            C64::new(self.p_re.unwrap_or(0.4), self.p_im.unwrap_or(0.0)),
        )?;
        Ok(s)
    }
}

/// `--in state.json` if given, otherwise the `V(3)` flags at `trunc`.
fn initial_state(input: &Option<PathBuf>, v3: &V3Args, trunc: usize) -> Result<(HardyCoefficients, Value), CliError> {
    match input {
        Some(p) => Ok((read_state(p)?, json!({ "in": p }))),
        None => {
            let s = v3.state()?;
            Ok((s.to_hardy(trunc), json!({ "b": s.b, "c": s.c, "p": s.p })))
        }
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// Initial state as {"trunc", "re", "im"}.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub v3: V3Args,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub trunc: Option<usize>,
    /// Steps between monitor snapshots.
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub tol_drift: Option<f64>,
    /// Number of K_u² eigenvalues recorded per snapshot.
    #[arg(long)]
    pub n_k2: Option<usize>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub jsonl: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn simulate(a: &SimulateArgs) -> Result<Outcome, CliError> {
    let d = SimulationConfig::default();
    let cfg = SimulationConfig {
        dt: a.dt.unwrap_or(d.dt),
        t_final: a.t_final.unwrap_or(d.t_final),
        trunc: a.trunc.unwrap_or(d.trunc),
        monitor_stride: a.stride.unwrap_or(d.monitor_stride),
        tol_drift: a.tol_drift.unwrap_or(d.tol_drift),
        n_k2_eigs: a.n_k2.unwrap_or(d.n_k2_eigs),
    };
    cfg.validate()?;
    let (u0, source) = initial_state(&a.input, &a.v3, cfg.trunc)?;
    let params = json!({ "initial": source, "config": cfg });
    let mut out = Outcome {
        command: "simulate",
        seed: None,
        params,
        result: Value::Null,
        failures: Vec::new(),
        lines: Vec::new(),
        out: a.out.clone(),
        verdict: true,
    };
    let traj = match integrate(&u0, &cfg) {
        Ok(t) => t,
        Err(e @ (CoreError::DriftExceeded { .. } | CoreError::NonFinite { .. })) => {
            out.failures.push(e.to_string());
            out.result = json!({ "error": e.to_string() });
            return Ok(out);
        }
        Err(e) => return Err(e.into()),
    };
    let header = vec![
        "szego simulate".to_string(),
        "seed=none".to_string(),
        format!("params={}", out.params),
    ];
    if let Some(p) = &a.csv {
        let f = File::create(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        traj.write_csv(BufWriter::new(f), &header).map_err(|e| CliError::Failed(e.to_string()))?;
    }
    if let Some(p) = &a.jsonl {
        let f = File::create(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        traj.write_jsonl(BufWriter::new(f)).map_err(|e| CliError::Failed(e.to_string()))?;
    }
    let last = traj.invariants.last().copied();
    out.lines.push(format!(
        "steps {}  snapshots {}  drift Q {:.3e}  M {:.3e}  E {:.3e}",
        traj.steps,
        traj.len(),
        traj.drift.q,
        traj.drift.m,
        traj.drift.e
    ));
    out.result = json!({
        "steps": traj.steps,
        "step_size": traj.step_size,
        "snapshots": traj.len(),
        "drift": traj.drift,
        "final_invariants": last,
        "final_state": traj.final_state(),
    });
    Ok(out)
}

// ---------------------------------------------------------------- verify-tw

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyTwArgs {
    /// I, II, or both when omitted.
    #[arg(long, value_delimiter = ',')]
    pub family: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda_re: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_im: Option<f64>,
    #[arg(long, alias = "p", value_delimiter = ',', allow_hyphen_values = true)]
    pub p_re: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub p_im: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub n_comp: Option<Vec<usize>>,
    /// Truncation; by default 256, raised to the next power of two when the
    /// profile tail needs it.
    #[arg(long)]
    pub trunc: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct TwRow {
    spec: TravelingWaveSpec,
    trunc: usize,
    residual: f64,
    passed: bool,
}

pub fn verify_tw(a: &VerifyTwArgs) -> Result<Outcome, CliError> {
    let families: Vec<Family> = match &a.family {
        Some(v) => v.iter().map(|s| s.parse::<Family>().map_err(usage)).collect::<Result<_, _>>()?,
        None => vec![Family::I, Family::II],
    };
    let lambdas = a.lambda_re.clone().unwrap_or_else(|| vec![0.5, 1.0]);
    let ps = a.p_re.clone().unwrap_or_else(|| vec![0.2, 0.5, 0.8]);
    let ns = a.n_comp.clone().unwrap_or_else(|| vec![1, 2, 3]);
    let tol = a.tol.unwrap_or(1e-9);
    let mut specs = Vec::new();
    for &f in &families {
        for &l in &lambdas {
            for &p in &ps {
                for &n in &ns {
                    let spec = TravelingWaveSpec::new(
                        f,
                        C64::new(l, a.lambda_im.unwrap_or(0.0)),
                        C64::new(p, a.p_im.unwrap_or(0.0)),
                        n,
                    )?;
                    let trunc = a.trunc.unwrap_or_else(|| spec.min_trunc().max(256).next_power_of_two());
                    specs.push((spec, trunc));
                }
            }
        }
    }
    let rows: Vec<Result<TwRow, CoreError>> = pool(a.jobs.unwrap_or(1))?.install(|| {
        specs
            .par_iter()
            .map(|&(spec, trunc)| {
                let v0 = build_profile(&spec, trunc)?;
                let residual = residual_traveling(&v0, spec.omega, spec.c);
                Ok(TwRow { spec, trunc, residual, passed: residual < tol })
            })
            .collect()
    });
    let rows: Vec<TwRow> = rows.into_iter().collect::<Result<_, _>>()?;
    let mut out = Outcome {
        command: "verify-tw",
        seed: None,
        params: json!({ "tol": tol, "cases": rows.len() }),
        result: Value::Null,
        failures: Vec::new(),
        lines: Vec::new(),
        out: a.out.clone(),
        verdict: true,
    };
    for r in &rows {
        let s = &r.spec;
        let label = format!("family {} lambda {} p {} N {}", s.family, s.lambda, s.p, s.n);
        out.lines.push(format!(
            "{label:<52} M {:>5}  omega {:>14.6}  c {:>12.6}  residual {:.3e}  {}",
            r.trunc,
            s.omega,
            s.c,
            r.residual,
            if r.passed { "ok" } else { "FAIL" }
        ));
        if !r.passed {
            out.failures.push(format!("{label}: residual {:e}", r.residual));
        }
    }
    out.result = json!({ "rows": rows });
    Ok(out)
}

// ---------------------------------------------------------------- spectral

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub v3: V3Args,
    /// Truncation used for the V(3) flags.
    #[arg(long)]
    pub trunc: Option<usize>,
    /// Relative rank threshold.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Operator dimension for the Lax residuals; defaults to the truncation.
    #[arg(long)]
    pub lax_dim: Option<usize>,
    #[arg(long)]
    pub lax_tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn spectral(a: &SpectralArgs) -> Result<Outcome, CliError> {
    let (u, source) = initial_state(&a.input, &a.v3, a.trunc.unwrap_or(128))?;
    let tol = a.tol.unwrap_or(DEFAULT_RANK_TOL);
    let lax_tol = a.lax_tol.unwrap_or(1e-9);
    let report = spectral_report(&u, tol)?;
    let lax = verify_lax_at(&u, a.lax_dim.unwrap_or(u.trunc()), 64)?;
    let mut out = Outcome {
        command: "spectral",
        seed: None,
        params: json!({ "initial": source, "tol": tol, "lax_tol": lax_tol, "lax_dim": lax.dim }),
        result: json!({ "report": report, "lax": lax }),
        failures: Vec::new(),
        lines: Vec::new(),
        out: a.out.clone(),
        verdict: true,
    };
    out.lines.push(format!("rank H {}  rank K {}  support {}", report.rank_h, report.rank_k, report.support));
    for d in &report.dominance {
        out.lines.push(format!(
            "  s² {:.12e}  {:?}  dim E {}  dim F {}",
            d.s2, d.label, d.dim_e, d.dim_f
        ));
    }
    out.lines.push(format!("Lax residuals K {:.3e}  H {:.3e} (dim {}, block {})", lax.k, lax.h, lax.dim, lax.block));
    if report.unresolved {
        out.lines.push("spectrum clustered: dominance labels unresolved".into());
    }
    for (name, v) in [("K Lax residual", lax.k), ("H Lax residual", lax.h)] {
        if !(v < lax_tol) {
            out.failures.push(format!("{name} {v:e} >= {lax_tol:e}"));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- instability

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(default, deny_unknown_fields)]
pub struct InstabilityArgs {
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn instability(a: &InstabilityArgs) -> Result<Outcome, CliError> {
    let d = InstabilityConfig::default();
    let cfg = InstabilityConfig {
        r: a.r.unwrap_or(d.r),
        gamma: a.gamma.unwrap_or(d.gamma),
        eps0: a.eps0.unwrap_or(d.eps0),
        dt: a.dt.unwrap_or(d.dt),
        t_final: a.t_final.unwrap_or(d.t_final),
    };
    let mut failures = Vec::new();
    let report = match instability_experiment_with(&cfg) {
        Ok(r) => r,
        Err(e @ CoreError::NoEscape { .. }) => {
            failures.push(e.to_string());
            match e {
                CoreError::NoEscape { report, .. } => *report,
                _ => unreachable!(),
            }
        }
        Err(e) => return Err(e.into()),
    };
    let exit = |t: Option<f64>| t.map_or("none".to_string(), |t| format!("{t:.4}"));
    let lines = vec![
        format!(
            "(dy/dt)²(0): predicted {:.6e}  measured {:.6e}  rel. error {:.3e}",
            report.predicted_dy2, report.measured_dy2, report.relative_error
        ),
        format!(
            "δℰ {:.6e}  order under γ/2: δℰ {:.4}  (dy/dt)² {:.4}",
            report.delta_ecal, report.delta_ecal_order, report.dy2_order
        ),
        format!(
            "threshold {:.3e}  forward exit {} max|y| {:.3e}  backward exit {} max|y| {:.3e}",
            report.threshold,
            exit(report.forward.exit_time),
            report.forward.max_abs_y,
            exit(report.backward.exit_time),
            report.backward.max_abs_y
        ),
    ];
    Ok(Outcome {
        command: "instability",
        seed: None,
        params: to_value(&cfg),
        result: to_value(&report),
        failures,
        lines,
        out: a.out.clone(),
        verdict: true,
    })
}

// ---------------------------------------------------------------- steady

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyArgs {
    /// θ in [0, π/3); defaults to π/6.
    #[arg(long)]
    pub theta: Option<f64>,
    /// The modulus λ.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Also check the truncated coefficients at `--trunc`.
    #[arg(long)]
    pub verify: bool,
    #[arg(long)]
    pub trunc: Option<usize>,
    /// Sweep `n` equally spaced θ on [0, π/3) instead of a single θ.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn steady(a: &SteadyArgs) -> Result<Outcome, CliError> {
    let lambda = a.scale.unwrap_or(1.0);
    let (ang_a, ang_b) = (a.a.unwrap_or(0.0), a.b.unwrap_or(0.0));
    let tol = a.tol.unwrap_or(1e-11);
    let trunc = a.trunc.unwrap_or(512);
    let thetas = match a.grid {
        Some(n) if n > 0 => theta_grid(n),
        Some(_) => return Err(usage("--grid must be at least 1")),
        None => vec![a.theta.unwrap_or(PI / 6.0)],
    };
    let params: Vec<SteadyV3Params> = thetas
        .iter()
        .map(|&t| SteadyV3Params::new(lambda, ang_a, ang_b, t))
        .collect::<Result<_, _>>()?;
    let verify = a.verify;
    let rows: Vec<Result<Value, CoreError>> = pool(a.jobs.unwrap_or(1))?.install(|| {
        params
            .par_iter()
            .map(|p| {
                let res = steady_residuals(p)?;
                let coeff = if verify {
                    Some(steady_check(&build_steady(p, trunc)?, tol))
                } else {
                    None
                };
                Ok(json!({
                    "params": p,
                    "constants": p.constants(),
                    "closed_form": res,
                    "coefficients": coeff,
                }))
            })
            .collect()
    });
    let rows: Vec<Value> = rows.into_iter().collect::<Result<_, _>>()?;
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for r in &rows {
        let theta = r["params"]["theta"].as_f64().unwrap_or(f64::NAN);
        let j = r["closed_form"]["j_abs"].as_f64().unwrap_or(f64::NAN);
        let rhs = r["closed_form"]["rhs_norm"].as_f64().unwrap_or(f64::NAN);
        let p_abs = r["closed_form"]["p_abs"].as_f64().unwrap_or(f64::NAN);
        let mut line = format!("theta {theta:.6}  |P| {p_abs:.6}  |J| {j:.3e}  ‖rhs‖ {rhs:.3e}");
        if !(j < tol && rhs < tol) {
            failures.push(format!("theta {theta}: closed-form |J| {j:e}, ‖rhs‖ {rhs:e}"));
        }
        if let Some(c) = r["coefficients"].as_object() {
            let cj = c["j_abs"].as_f64().unwrap_or(f64::NAN);
            let cr = c["rhs_norm"].as_f64().unwrap_or(f64::NAN);
            line.push_str(&format!("  M={trunc}: |J| {cj:.3e}  ‖rhs‖ {cr:.3e}"));
            if !(cj < tol && cr < tol) {
                failures.push(format!("theta {theta}: coefficient |J| {cj:e}, ‖rhs‖ {cr:e}"));
            }
        }
        lines.push(line);
    }
    Ok(Outcome {
        command: "steady",
        seed: None,
        params: json!({ "scale": lambda, "a": ang_a, "b": ang_b, "tol": tol, "trunc": trunc, "verify": verify }),
        result: json!({ "rows": rows }),
        failures,
        lines,
        out: a.out.clone(),
        verdict: true,
    })
}

// ---------------------------------------------------------------- compose

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ComposeArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Where the composed state goes; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Writes the state itself rather than a report artifact.
pub fn compose(a: &ComposeArgs) -> Result<Outcome, CliError> {
    let n = a.n.ok_or_else(|| usage("--n is required"))?;
    let input = a.input.as_ref().ok_or_else(|| usage("--in is required"))?;
    let u = read_state(input)?;
    let w = compose_zn(&u, n)?;
    let mut lines = Vec::new();
    match &a.out {
        Some(p) => {
            write_json(p, &w)?;
            lines.push(format!("trunc {} -> {}  wrote {}", u.trunc(), w.trunc(), p.display()));
        }
        None => lines.push(serde_json::to_string(&w).map_err(|e| CliError::Failed(e.to_string()))?),
    }
    Ok(Outcome {
        command: "compose",
        seed: None,
        params: json!({ "n": n, "in": input }),
        result: Value::Null,
        failures: Vec::new(),
        lines,
        out: None,
        verdict: a.out.is_some(),
    })
}

// ---------------------------------------------------------------- compose-check

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ComposeCheckArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub v3: V3Args,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub trunc: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn compose_check(a: &ComposeCheckArgs) -> Result<Outcome, CliError> {
    let trunc = a.trunc.unwrap_or(64);
    let (u0, source) = initial_state(&a.input, &a.v3, trunc)?;
    let cfg = SimulationConfig {
        dt: a.dt.unwrap_or(1e-3),
        t_final: a.t_final.unwrap_or(2.0),
        trunc,
        monitor_stride: 100,
        tol_drift: 1.0,
        n_k2_eigs: 0,
    };
    cfg.validate()?;
    let ns = a.n.clone().unwrap_or_else(|| vec![2, 3]);
    let tol = a.tol.unwrap_or(1e-6);
    let results: Vec<Result<Value, CoreError>> = pool(a.jobs.unwrap_or(1))?.install(|| {
        ns.par_iter()
            .map(|&n| {
                let flow = verify_flow_commutation(&u0, n, &cfg)?;
                let w = compose_zn(&u0, n)?;
                let (a, b) = (conserved(&u0), conserved(&w));
                Ok(json!({
                    "n": n,
                    "max_gap": flow.max_gap,
                    "isometry_defect": (w.norm() - u0.norm()).abs(),
                    "j_defect": (a.j - b.j).norm(),
                    "flow": flow,
                }))
            })
            .collect()
    });
    let rows: Vec<Value> = results.into_iter().collect::<Result<_, _>>()?;
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for r in &rows {
        let gap = r["max_gap"].as_f64().unwrap_or(f64::NAN);
        lines.push(format!(
            "N {}  max gap {gap:.3e}  isometry defect {:.3e}  J defect {:.3e}",
            r["n"],
            r["isometry_defect"].as_f64().unwrap_or(f64::NAN),
            r["j_defect"].as_f64().unwrap_or(f64::NAN)
        ));
        if !(gap < tol) {
            failures.push(format!("N {}: gap {gap:e} >= {tol:e}", r["n"]));
        }
    }
    Ok(Outcome {
        command: "compose-check",
        seed: None,
        params: json!({ "initial": source, "config": cfg, "tol": tol }),
        result: json!({ "rows": rows }),
        failures,
        lines,
        out: a.out.clone(),
        verdict: true,
    })
}

// ---------------------------------------------------------------- gn-check

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(default, deny_unknown_fields)]
pub struct GnCheckArgs {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_trunc: Option<usize>,
    /// Geometric states checked for equality.
    #[arg(long)]
    pub geometric: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Samples per block; block `i` draws from stream `i` of the seed, so the
/// result does not depend on `--jobs`.
const GN_BLOCK: usize = 1000;

#[derive(Serialize, Clone, Copy, Default)]
struct GnBlock {
    samples: usize,
    violations: usize,
    worst_ratio: f64,
}

pub fn gn_check(a: &GnCheckArgs) -> Result<Outcome, CliError> {
    let samples = a.samples.unwrap_or(10_000);
    let seed = a.seed.unwrap_or(0);
    let max_trunc = a.max_trunc.unwrap_or(64);
    let geometric = a.geometric.unwrap_or(100);
    let tol = a.tol.unwrap_or(1e-12);
    if max_trunc == 0 {
        return Err(usage("--max-trunc must be at least 1"));
    }
    let blocks = samples.div_ceil(GN_BLOCK);
    let per_block: Vec<GnBlock> = pool(a.jobs.unwrap_or(1))?.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = seeded(seed);
                rng.set_stream(b as u64);
                let count = GN_BLOCK.min(samples - b * GN_BLOCK);
                let mut out = GnBlock { samples: count, ..Default::default() };
                for _ in 0..count {
                    let inv = conserved(&random_state(&mut rng, max_trunc));
                    let bound = inv.gagliardo_bound();
                    out.worst_ratio = out.worst_ratio.max(inv.e / bound);
                    if inv.e > bound * (1.0 + tol) {
                        out.violations += 1;
                    }
                }
                out
            })
            .collect()
    });
    let violations: usize = per_block.iter().map(|b| b.violations).sum();
    let worst_ratio = per_block.iter().map(|b| b.worst_ratio).fold(0.0, f64::max);

    let mut rng = seeded(seed);
    rng.set_stream(u64::MAX);
    let mut worst_eq: f64 = 0.0;
    for _ in 0..geometric {
        let (_, _, u) = random_geometric(&mut rng, 0.9, 512);
        let inv = conserved(&u);
        worst_eq = worst_eq.max((inv.e - inv.gagliardo_bound()).abs() / inv.gagliardo_bound());
    }

    let mut failures = Vec::new();
    if violations > 0 {
        failures.push(format!("{violations} violations of E <= Q²(Q+M)/2"));
    }
    if !(worst_eq < tol) {
        failures.push(format!("geometric equality off by {worst_eq:e}"));
    }
    Ok(Outcome {
        command: "gn-check",
        seed: Some(seed),
        params: json!({ "samples": samples, "max_trunc": max_trunc, "geometric": geometric, "tol": tol, "block": GN_BLOCK }),
        result: json!({
            "violations": violations,
            "max_ratio": worst_ratio,
            "geometric_max_rel_gap": worst_eq,
            "blocks": per_block,
        }),
        lines: vec![
            format!("seed {seed}  samples {samples}  violations {violations}  max E/bound {worst_ratio:.15}"),
            format!("geometric states {geometric}  max rel. |E - bound| {worst_eq:.3e}"),
        ],
        failures,
        out: a.out.clone(),
        verdict: true,
    })
}

// ---------------------------------------------------------------- certify

#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyArgs {
    /// Shorter integrations and smaller samples.
    #[arg(long)]
    pub quick: bool,
    /// Criterion ids to run; all twelve by default.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<u8>>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn certify(a: &CertifyArgs) -> Result<Outcome, CliError> {
    let scale = if a.quick { Scale::Quick } else { Scale::Full };
    let ids = a.only.clone().unwrap_or_else(|| (1..=12).collect());
    if let Some(bad) = ids.iter().find(|&&i| !(1..=12).contains(&i)) {
        return Err(usage(format!("no criterion {bad}; expected 1..=12")));
    }
    let outcomes: Vec<CriterionOutcome> = pool(a.jobs.unwrap_or(1))?.install(|| {
        ids.par_iter()
            .map(|&i| run_criterion(i, scale).expect("id checked above"))
            .collect()
    });
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for o in &outcomes {
        lines.push(o.to_string().trim_end().to_string());
        if !o.passed() {
            failures.push(o.summary_line());
        }
    }
    let matrix: Vec<Value> = outcomes
        .iter()
        .map(|o| json!({ "id": o.id, "title": o.title, "passed": o.passed() }))
        .collect();
    Ok(Outcome {
        command: "certify",
        seed: None,
        params: json!({ "scale": scale, "criteria": ids }),
        result: json!({ "matrix": matrix, "outcomes": outcomes }),
        failures,
        lines,
        out: a.out.clone(),
        verdict: true,
    })
}
