use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ficut_core::certsynth::{write_certificate, Certificate, CertificateFile};
use ficut_core::hp::eval::{Environment, State};
use ficut_core::hp::{parse_model, Model};
use ficut_core::icp::IcpConfig;
use ficut_core::linalg::{identity, mat_mul, max_abs_diff, transpose};
use ficut_core::proof::{linear_matrix, lyap_linear, run_tactics, synth_barrier, Status, TacticConfig};
use ficut_core::sim::{sample_runs, SimConfig};

#[derive(Parser)]
#[command(name = "ficut", version, about = "Safety proofs for hybrid programs by forward invariant cuts")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a tactic script against a model; exit 0 if closed, 2 if open.
    Prove {
        model: PathBuf,
        tactics: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        delta: f64,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Write the JSON proof report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write every icp query issued into this directory.
        #[arg(long)]
        dump_queries: Option<PathBuf>,
    },
    /// Synthesize a certificate for one mode.
    Synth {
        model: PathBuf,
        #[arg(long)]
        mode: String,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// Sample runs of a named program and write the longest one as CSV.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        program: String,
        /// Initial state, e.g. "x1=1,x2=1,M=q0".
        #[arg(long)]
        init: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Duration budget per continuous evolution.
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        /// Integrator step.
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    LyapLinear,
    BarrierLp,
}

fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        bail!("--{name} must be positive, got {v}");
    }
    Ok(())
}

fn prove(model: &Path, tactics: &Path, delta: f64, eps: f64, report: Option<&Path>, dump: Option<&Path>) -> Result<ExitCode> {
    positive("delta", delta)?;
    positive("eps", eps)?;
    let m = load_model(model)?;
    let script = std::fs::read_to_string(tactics).with_context(|| format!("reading {}", tactics.display()))?;
    let cfg = TacticConfig {
        delta,
        eps,
        icp: IcpConfig::default(),
        base_dir: tactics.parent().map(Path::to_path_buf).unwrap_or_default(),
        dump_queries: dump.is_some(),
    };
    let run = run_tactics(&m, &script, &cfg).map_err(|e| anyhow!("{}: {e}", tactics.display()))?;
    let root = &run.root;
    let stats = root.total_stats();
    let doc = json!({
        "model": model.file_name().map(|s| s.to_string_lossy()),
        "tactics": tactics.file_name().map(|s| s.to_string_lossy()),
        "delta": delta,
        "eps": eps,
        "box_budget": cfg.icp.max_boxes,
        "status": root.status,
        "stats": stats,
        "proof": root,
    });
    if let Some(p) = report {
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(dir) = dump {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, text) in &run.dumps {
            std::fs::write(dir.join(format!("{name}.smt")), text)?;
        }
    }
    eprintln!("{} queries, {} boxes", stats.queries, stats.boxes);
    match &root.status {
        Status::Closed => {
            println!("closed: {}", root.goal);
            Ok(ExitCode::SUCCESS)
        }
        s => {
            println!("{}: {}", if matches!(s, Status::Failed { .. }) { "failed" } else { "open" }, root.goal);
            for leaf in root.unclosed_leaves() {
                let why = match &leaf.status {
                    Status::Open { reason } | Status::Failed { reason } => reason.as_str(),
                    Status::Closed => "",
                };
                println!("  [{}] {}\n      {why}", leaf.rule, leaf.goal);
            }
            Ok(ExitCode::from(2))
        }
    }
}

fn fmt_matrix(p: &[Vec<f64>]) -> String {
    p.iter().map(|r| r.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("; ")
}

fn synth(model: &Path, mode: &str, method: Method, degree: u32, seed: u64, delta: f64, out: &Path) -> Result<ExitCode> {
    positive("delta", delta)?;
    let m = load_model(model)?;
    let mut prov = vec![("mode".to_string(), mode.to_string())];
    let cert = match method {
        Method::LyapLinear => {
            let (ode, q) = lyap_linear(&m, mode)?;
            let a = linear_matrix(&ode).expect("lyap_linear checked linearity");
            let lhs = mat_mul(&transpose(&a), &q.p);
            let sum: Vec<Vec<f64>> = lhs.iter().zip(mat_mul(&q.p, &a)).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect();
            let neg_i: Vec<Vec<f64>> = identity(a.len()).into_iter().map(|r| r.into_iter().map(|x| -x).collect()).collect();
            println!("P = [{}]", fmt_matrix(&q.p));
            println!("residual max|A^T P + P A + I| = {:.3e}", max_abs_diff(&sum, &neg_i));
            prov.extend([("method".into(), "lyap-linear".into()), ("Q".into(), "identity".into())]);
            Certificate::Quadratic(q)
        }
        Method::BarrierLp => {
            let syn = synth_barrier(&m, mode, degree, seed, delta, IcpConfig::default())?;
            match syn.outcome {
                Ok(s) => {
                    println!("verified by icp at delta = {delta} after {} iteration(s), {} counterexample(s)", s.iterations, s.counterexamples.len());
                    prov.extend([
                        ("method".into(), "barrier-lp".into()),
                        ("degree".into(), degree.to_string()),
                        ("seed".into(), seed.to_string()),
                        ("delta".into(), delta.to_string()),
                    ]);
                    Certificate::Barrier(s.cert)
                }
                Err(f) => {
                    eprintln!("synthesis failed: {f}");
                    return Ok(ExitCode::from(2));
                }
            }
        }
    };
    let text = write_certificate(&CertificateFile { provenance: prov, cert });
    std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn parse_init(m: &Model, init: &str) -> Result<(State, Environment)> {
    let mut state = State::new();
    let mut env = Environment::new();
    for item in init.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| anyhow!("expected name=value, got `{item}`"))?;
        let (k, v) = (k.trim(), v.trim());
        let val = match v.parse::<f64>() {
            Ok(x) => x,
            Err(_) => m.mode_value(v).ok_or_else(|| anyhow!("`{v}` is neither a number nor a mode name"))?,
        };
        if m.is_logical_var(k) {
            env.insert(k.to_string(), val);
        } else if m.is_state_var(k) || m.is_mode_var(k) {
            state.insert(k.to_string(), val);
        } else {
            bail!("`{k}` is not a declared variable");
        }
    }
    let missing: Vec<&str> =
        m.state_vars.iter().chain(m.mode_vars.keys()).filter(|v| !state.contains_key(*v) && !m.is_logical_var(v)).map(String::as_str).collect();
    if !missing.is_empty() {
        bail!("no initial value for {}", missing.join(", "));
    }
    Ok((state, env))
}

fn simulate(model: &Path, program: &str, init: &str, seed: u64, t_max: f64, step: f64, out: &Path) -> Result<ExitCode> {
    let m = load_model(model)?;
    let Some(p) = m.program(program) else {
        bail!("unknown program `{program}`; available: {}", m.program_names().join(", "));
    };
    let (x0, env) = parse_init(&m, init)?;
    let cfg = SimConfig {
        h: step,
        t_max,
        seed,
        havoc_ranges: m.domain.clone(),
        mode_vars: m.mode_vars.keys().cloned().collect(),
        ..Default::default()
    };
    let runs = sample_runs(p, &x0, &env, &cfg)?;
    for w in &runs.warnings {
        eprintln!("warning: {w}");
    }
    let mut vars: Vec<String> = m.state_vars.clone();
    vars.extend(m.mode_vars.keys().filter(|v| !m.is_state_var(v)).cloned());
    let longest = runs
        .traces
        .iter()
        .fold(None::<&ficut_core::sim::Trace>, |best, t| match best {
            Some(b) if b.samples.len() >= t.samples.len() => Some(b),
            _ => Some(t),
        })
        .ok_or_else(|| anyhow!("no run of `{program}` from the given state passes its tests"))?;
    std::fs::write(out, longest.to_csv(&vars)).with_context(|| format!("writing {}", out.display()))?;
    let switches = runs.traces.iter().flat_map(|t| &t.events).filter(|e| e.kind == ficut_core::sim::EventKind::ModeSwitch).count();
    eprintln!(
        "{} run(s); longest has {} sample(s) up to t = {}; {switches} mode switch(es) overall",
        runs.traces.len(),
        longest.samples.len(),
        longest.end_time()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let res = match &cli.cmd {
        Cmd::Prove { model, tactics, delta, eps, report, dump_queries } => {
            prove(model, tactics, *delta, *eps, report.as_deref(), dump_queries.as_deref())
        }
        Cmd::Synth { model, mode, method, degree, seed, delta, output } => synth(model, mode, *method, *degree, *seed, *delta, output),
        Cmd::Simulate { model, program, init, seed, t_max, step, output } => simulate(model, program, init, *seed, *t_max, *step, output),
    };
    match res {
        Ok(code) => {
            eprintln!("done in {:.2?}", start.elapsed());
            code
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
