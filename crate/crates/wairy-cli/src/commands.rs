//! Command dispatch: construct, classify, enumerate, shift-matrix, solve,
//! append, curve, and the verification suites.
//!
//! Exit codes: 0 success, 1 negative verdict (with a JSON body), 2 usage
//! error, 3 internal inconsistency (failed verification).

use crate::config::{parse_kv, KvConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::path::PathBuf;
use wairy::classify::{append_one_cycle, classify, enumerate_admissible};
use wairy::dilaton::{normalize_to_airy_form, shift_matrix, shifted_composite_mode};
use wairy::scalar::CycloScalar;
use wairy::solver::{residual_check, solve, structure_from_json_str, AiryStructure};
use wairy::verify;
use wairy::weyl::Window;
use wairy::wmodes::{BuiltinPsi, TwistSpec};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "wairy",
    version,
    about = "Exact engine for W(gl_r) quantum Airy structures from twisted bosonic modes"
)]
pub struct Cli {
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Output rendering.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Cycle length of the twist.
    #[arg(long)]
    pub rho: Option<u32>,
    /// Number of cycles.
    #[arg(long)]
    pub n: Option<u32>,
    /// Dilaton shift index.
    #[arg(long)]
    pub s: Option<u32>,
    /// "roots" for Q_j = w^j, or an explicit JSON array of scalars.
    #[arg(long)]
    pub shifts: Option<String>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Mode-index bound of the materialization window.
    #[arg(long)]
    pub window_modes: Option<i64>,
    /// Degree bound of the materialization window.
    #[arg(long)]
    pub window_degree: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Materialize the shifted mode operators H^i_m.
    Construct {
        #[command(flatten)]
        spec: SpecArgs,
        /// Only this operator label i (all of 1..=r otherwise).
        #[arg(long)]
        i: Option<u32>,
        /// Materialize modes with m from the subalgebra bound up to here.
        #[arg(long)]
        m_max: Option<i64>,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Decide whether the data yields a quantum r-Airy structure.
    Classify {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Tabulate all admissible (rho, n, s) with n*rho <= r-max.
    Enumerate {
        #[arg(long)]
        r_max: Option<u32>,
    },
    /// The shift matrix with its determinant and invertibility.
    ShiftMatrix {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Solve H_k Z = 0 for the free-energy coefficients.
    Solve {
        #[command(flatten)]
        spec: SpecArgs,
        /// Grading-degree cutoff for the free energy.
        #[arg(long)]
        degree: Option<u32>,
        /// Solve a structure from JSON instead of the pipeline.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Cover the variables x^mu_q for q up to here.
        #[arg(long)]
        q_cover: Option<u32>,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Append a one-cycle with no extra dilaton shift.
    Append {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        m_max: Option<i64>,
        #[command(flatten)]
        window: WindowArgs,
        /// Include the materialized operators in the output.
        #[arg(long)]
        emit_operators: bool,
    },
    /// Emit the reducible spectral curve of admissible data.
    Curve {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Run a named verification suite (or "all").
    Verify { suite: String },
}

#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub exit: i32,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Internal(m) => write!(f, "error: {m}"),
        }
    }
}

fn verbose() -> bool {
    std::env::var("WAIRY_VERBOSE").map_or(false, |v| v != "0" && !v.is_empty())
}

struct Merged {
    cfg: KvConfig,
}

impl Merged {
    fn u32_of(&self, flag: Option<u32>, key: &str) -> Result<Option<u32>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.cfg.get_parsed(key).map_err(CliError::Usage),
        }
    }

    fn required_u32(&self, flag: Option<u32>, key: &str) -> Result<u32, CliError> {
        self.u32_of(flag, key)?
            .ok_or_else(|| CliError::Usage(format!("missing --{key}")))
    }

    fn i64_of(&self, flag: Option<i64>, key: &str, default: i64) -> Result<i64, CliError> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self
                .cfg
                .get_parsed(key)
                .map_err(CliError::Usage)?
                .unwrap_or(default)),
        }
    }

    fn string_of(&self, flag: Option<String>, key: &str, default: &str) -> String {
        flag.or_else(|| self.cfg.get(key).map(str::to_string))
            .unwrap_or_else(|| default.to_string())
    }
}

fn parse_shifts(raw: &str, rho: u32, n: u32, s: u32) -> Result<TwistSpec, CliError> {
    if raw == "roots" {
        return Ok(TwistSpec::with_root_shifts(rho, n, s));
    }
    let v: Value = serde_json::from_str(raw)
        .map_err(|e| CliError::Usage(format!("--shifts is neither \"roots\" nor JSON: {e}")))?;
    let arr = v
        .as_array()
        .ok_or_else(|| CliError::Usage("--shifts JSON must be an array of scalars".into()))?;
    let q: Vec<CycloScalar> = arr
        .iter()
        .map(|x| CycloScalar::from_json(x).map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    TwistSpec::new(rho, n, s, q).map_err(|e| CliError::Usage(e.to_string()))
}

fn spec_of(merged: &Merged, spec: SpecArgs) -> Result<TwistSpec, CliError> {
    let rho = merged.required_u32(spec.rho, "rho")?;
    let n = merged.required_u32(spec.n, "n")?;
    let s = merged.required_u32(spec.s, "s")?;
    if rho == 0 || n == 0 || s == 0 {
        return Err(CliError::Usage("rho, n, s must be positive".into()));
    }
    let shifts = merged.string_of(spec.shifts, "shifts", "roots");
    parse_shifts(&shifts, rho, n, s)
}

fn window_of(merged: &Merged, w: WindowArgs, def_modes: i64, def_degree: u32) -> Result<Window, CliError> {
    let modes = merged.i64_of(w.window_modes, "window_modes", def_modes)?;
    let degree = merged
        .u32_of(w.window_degree, "window_degree")?
        .unwrap_or(def_degree);
    if modes < 1 {
        return Err(CliError::Usage("window_modes must be >= 1".into()));
    }
    Ok(Window::new(modes, degree))
}

fn scalar_text(x: &CycloScalar) -> String {
    format!("{x}")
}

fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Json => value.to_string(),
        Format::Text => {
            let mut out = String::new();
            render_text(value, 0, &mut out);
            out
        }
    }
}

fn render_text(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                match val {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_text(val, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {val}\n")),
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}-\n"));
                        render_text(item, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}- {item}\n")),
                }
            }
        }
        _ => out.push_str(&format!("{pad}{v}\n")),
    }
}

fn verdict_json(v: &wairy::classify::ClassificationVerdict) -> Value {
    json!({
        "version": VERSION,
        "admissible": v.admissible,
        "case": v.case_label.map(|c| c.as_str()),
        "partition": v.partition.as_ref().map(|p| p.to_json()),
        "requirements": v.requirements.iter().map(|r| r.as_str()).collect::<Vec<_>>(),
        "reason": v.reason.map(|r| r.as_str()),
    })
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config: {e}")))?;
            parse_kv(&text).map_err(CliError::Usage)?
        }
        None => KvConfig::empty(),
    };
    let merged = Merged { cfg };
    let format = cli.format.unwrap_or(match merged.cfg.get("format") {
        Some("text") => Format::Text,
        _ => Format::Json,
    });

    let (value, exit) = match cli.command {
        Command::Classify { spec } => {
            let spec = spec_of(&merged, spec)?;
            if spec.n < 2 {
                return Err(CliError::Usage("classification needs n >= 2".into()));
            }
            let verdict = classify(spec.rho, spec.n, spec.s, spec.shifts());
            let exit = if verdict.admissible { 0 } else { 1 };
            (verdict_json(&verdict), exit)
        }
        Command::Enumerate { r_max } => {
            let r_max = merged.required_u32(r_max, "r_max")?;
            if r_max < 4 {
                return Err(CliError::Usage("r_max must be >= 4".into()));
            }
            let rows: Vec<String> = enumerate_admissible(r_max)
                .into_iter()
                .map(|e| {
                    json!({
                        "rho": e.rho, "n": e.n, "s": e.s, "r": e.r,
                        "case": e.case_label.as_str(),
                    })
                    .to_string()
                })
                .collect();
            // JSON lines: emit directly.
            return Ok(Outcome {
                body: rows.join("\n") + "\n",
                exit: 0,
            });
        }
        Command::ShiftMatrix { spec } => {
            let spec = spec_of(&merged, spec)?;
            let m = shift_matrix(spec.rho, spec.shifts());
            let det = m
                .matrix
                .determinant()
                .map_err(|e| CliError::Internal(e.to_string()))?;
            let invertible = !det.is_zero();
            let rows_text: Vec<Vec<String>> = (0..m.matrix.n_rows())
                .map(|r| {
                    (0..m.matrix.n_cols())
                        .map(|c| scalar_text(m.matrix.get(r, c)))
                        .collect()
                })
                .collect();
            let body = json!({
                "version": VERSION,
                "matrix": m.matrix.to_json(),
                "matrix_text": rows_text,
                "invertible": invertible,
                "det": det.to_json(),
                "det_text": scalar_text(&det),
            });
            (body, 0)
        }
        Command::Construct {
            spec,
            i,
            m_max,
            window,
        } => {
            let spec = spec_of(&merged, spec)?;
            let r = spec.r();
            let m_max = merged.i64_of(m_max, "m_max", 3)?;
            let win = window_of(&merged, window, 2 * (m_max.abs() + r as i64 + 2), r)?;
            let labels: Vec<u32> = match i {
                Some(i) if i >= 1 && i <= r => vec![i],
                Some(i) => {
                    return Err(CliError::Usage(format!("i must be in 1..={r}, got {i}")))
                }
                None => (1..=r).collect(),
            };
            let mut ops = Vec::new();
            for i in labels {
                let (k, l) = spec.reindex(i).map_err(|e| CliError::Usage(e.to_string()))?;
                let lower = wairy::classify::subalgebra_bound(spec.rho, spec.s, k, l);
                for m in lower..=m_max {
                    if verbose() {
                        eprintln!("materializing H^{i}_{m}");
                    }
                    let op = shifted_composite_mode(&spec, &BuiltinPsi, i, m, win)
                        .map_err(|e| CliError::Internal(e.to_string()))?;
                    ops.push(json!({"i": i, "m": m, "op": op.to_json()}));
                }
            }
            (json!({"version": VERSION, "operators": ops}), 0)
        }
        Command::Solve {
            spec,
            degree,
            input,
            q_cover,
            window,
        } => {
            let cutoff = merged
                .u32_of(degree, "degree")?
                .unwrap_or(5)
                .max(3);
            let structure = match input {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::Usage(format!("cannot read input: {e}")))?;
                    structure_from_json_str(&text)
                        .map_err(|e| CliError::Usage(e.to_string()))?
                }
                None => {
                    let spec = spec_of(&merged, spec)?;
                    let q_cover = merged
                        .u32_of(q_cover, "q_cover")?
                        .unwrap_or(cutoff + 2);
                    let win = window_of(
                        &merged,
                        window,
                        (3 * (q_cover + spec.r()) as i64) / 2 + 4,
                        cutoff.max(spec.r()),
                    )?;
                    let ops = normalize_to_airy_form(&spec, &BuiltinPsi, win, q_cover)
                        .map_err(|e| CliError::Internal(e.to_string()))?;
                    AiryStructure::new(ops, spec.ctx(), spec.r())
                        .map_err(|e| CliError::Internal(e.to_string()))?
                }
            };
            if verbose() {
                eprintln!(
                    "solving {} operators to degree {cutoff}",
                    structure.ops().len()
                );
            }
            let fe = solve(&structure, cutoff).map_err(|e| CliError::Internal(e.to_string()))?;
            let report = residual_check(&structure, &fe, cutoff)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            let body = json!({
                "version": VERSION,
                "convention": "entry (hbar_half=h, vars=sigma) stands for hbar^((h-2)/2) F[h,sigma] x^sigma / |sigma|!",
                "degree_cutoff": cutoff,
                "coefficients": fe.to_json(),
                "residual_clean": report.clean(),
            });
            let exit = if report.clean() { 0 } else { 3 };
            (body, exit)
        }
        Command::Append {
            spec,
            m_max,
            window,
            emit_operators,
        } => {
            let spec = spec_of(&merged, spec)?;
            let m_max = merged.i64_of(m_max, "m_max", 4)?;
            let win = window_of(&merged, window, 2 * (m_max.abs() + spec.r() as i64 + 2), spec.r() + 1)?;
            match append_one_cycle(&spec, &BuiltinPsi, win, m_max)
                .map_err(|e| CliError::Internal(e.to_string()))?
            {
                Ok(appended) => {
                    let mut body = json!({
                        "version": VERSION,
                        "accepted": true,
                        "lambda_tilde": appended.lambda_tilde.to_json(),
                        "r_new": appended.r_new,
                        "new_cycle": appended.new_cycle,
                        "bounds": appended.bounds,
                        "operator_count": appended.operators.len(),
                    });
                    if emit_operators {
                        body["operators"] = Value::Array(
                            appended
                                .operators
                                .iter()
                                .map(|(i, m, op)| json!({"i": i, "m": m, "op": op.to_json()}))
                                .collect(),
                        );
                    }
                    (body, 0)
                }
                Err(rej) => {
                    let body = match rej {
                        wairy::classify::AppendRejection::ZeroShift { cycle } => json!({
                            "version": VERSION,
                            "accepted": false,
                            "reason": "ZeroShift",
                            "cycle": cycle,
                        }),
                        wairy::classify::AppendRejection::NoPartitionExtension {
                            achievable,
                            required,
                        } => json!({
                            "version": VERSION,
                            "accepted": false,
                            "reason": "NoPartitionExtension",
                            "achievable": achievable,
                            "required": required,
                        }),
                    };
                    (body, 1)
                }
            }
        }
        Command::Curve { spec } => {
            let spec = spec_of(&merged, spec)?;
            match wairy::speccurve::curve_for(spec.rho, spec.n, spec.s) {
                Ok((curve, components)) => {
                    let verified = wairy::speccurve::verify_factorization(&curve);
                    let body = json!({
                        "version": VERSION,
                        "polynomial": curve.to_json(),
                        "polynomial_text": curve.to_string(),
                        "factors_text": curve
                            .factors
                            .as_ref()
                            .map(|fs| fs.iter().map(|f| f.to_string()).collect::<Vec<_>>()),
                        "factors": curve
                            .factors
                            .as_ref()
                            .map(|fs| fs.iter().map(|f| f.to_json()).collect::<Vec<_>>()),
                        "verified": verified,
                        "components": components
                            .iter()
                            .map(|c| json!({"rho": c.rho, "s": c.s, "q": c.q.to_json()}))
                            .collect::<Vec<_>>(),
                    });
                    let exit = if verified { 0 } else { 3 };
                    (body, exit)
                }
                Err(e) => (
                    json!({"version": VERSION, "error": e.to_string()}),
                    1,
                ),
            }
        }
        Command::Verify { suite } => {
            let reports = if suite == "all" {
                verify::all_suites()
            } else {
                match verify::suite_by_name(&suite) {
                    Some(r) => vec![r],
                    None => {
                        return Err(CliError::Usage(format!(
                            "unknown suite {suite:?}; expected one of example-gl4, \
                             leading-oracle, vieta, classification-table, residuals, all"
                        )))
                    }
                }
            };
            let mut lines = Vec::new();
            let mut all_clean = true;
            for r in &reports {
                for c in &r.checks {
                    lines.push(format!(
                        "{} {}: {}",
                        if c.pass { "ok  " } else { "FAIL" },
                        r.suite,
                        c.label
                    ));
                }
                lines.push(format!(
                    "suite {}: {}/{} checks passed",
                    r.suite,
                    r.passed(),
                    r.checks.len()
                ));
                all_clean &= r.clean();
            }
            let exit = if all_clean { 0 } else { 3 };
            return Ok(Outcome {
                body: lines.join("\n") + "\n",
                exit,
            });
        }
    };
    Ok(Outcome {
        body: render(&value, format) + if format == Format::Json { "\n" } else { "" },
        exit,
    })
}

/// Parse the argument vector and run; the entry point for tests.
pub fn run_from_args<I, T>(args: I) -> Result<Outcome, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(cli)
}
