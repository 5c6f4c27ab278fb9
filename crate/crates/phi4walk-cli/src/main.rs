//! `phi4walk` command-line front end.
//!
//! Every command writes one artifact, to standard output or to
//! `--out DIR/<command>.<json|csv>`.  Exit codes: `0` success, `1` a check
//! failed, `2` usage or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use phi4walk::edge::{self, LipatovConstants};
use phi4walk::feynman::{gamma_g0_mc, FeynmanGraph, GammaCache, McConfig};
use phi4walk::graph::{self, BalancedMatrix};
use phi4walk::series::CoefficientTable;
use phi4walk::transform::{self, LRoute};
use phi4walk::verify::{self, VerifyConfig};
use phi4walk::walk::{self, CountConvention, MultiplicityConvention, VisitConvention, WalkKind};
use phi4walk::weights;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] phi4walk::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "phi4walk", version, about = "Eulerian weights, d=2 Feynman integrals, modified Borel transforms and planar walk statistics")]
struct Cli {
    /// Output format (each command has its own default).
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Write `<command>.<ext>` into this directory instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct McArgs {
    /// Monte Carlo sample budget per integral.
    #[arg(long, default_value_t = McConfig::default().max_samples)]
    samples: u64,
    /// Random seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

impl McArgs {
    fn config(self) -> CliResult<McConfig> {
        if self.samples == 0 {
            return usage("--samples must be positive");
        }
        Ok(McConfig {
            seed: self.seed,
            max_samples: self.samples,
            ..McConfig::default()
        })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Canonical matrices of MF(r, p, w) with their symmetry data.
    Enumerate {
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0)]
        p: usize,
        #[arg(long, default_value_t = 2)]
        w: u32,
        /// Largest allowed entry.
        #[arg(long, default_value_t = 2)]
        cap: u32,
    },
    /// Weight polynomials with Syf, gr and Eul.
    Weights {
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, default_value_t = 0)]
        p: usize,
        /// A single matrix `{"q": …, "rows": […]}` instead of the enumeration.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Γ_G(0) of every vacuum graph at order r.
    Integrate {
        #[arg(long)]
        r: usize,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Perturbative coefficients up to the given order.
    Coeffs {
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Moments E(ν^j) from the characteristic-function series.
    Moments {
        #[arg(long, value_parser = parse_which)]
        dist: u8,
        #[arg(long, default_value_t = 4)]
        j: usize,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Borel-identity table on a grid of (s, R).
    TransformCheck {
        /// JSON list of `[re s, im s, R]` triples; defaults to the built-in grid.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// ζ coefficient streams against the perturbative series.
    Zeta {
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Rising-edge density f_i(x) on a grid of x < 0.
    Edge {
        #[arg(long, value_parser = parse_which)]
        which: u8,
        /// `a:b:n` — n equally spaced points from a to b.
        #[arg(long, allow_hyphen_values = true)]
        x_grid: String,
        /// Constants `{"I1":…, "I4":…, "I6":…, "DL":…, "DT":…}`.
        #[arg(long, conflicts_with = "synthetic")]
        config: Option<PathBuf>,
        /// Use the built-in synthetic (non-physical) constants.
        #[arg(long)]
        synthetic: bool,
    },
    /// Moments of the rescaled multiple-point-range statistic.
    Walk {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        batch: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = MultArg::VisitCount)]
        multiplicity: MultArg,
        /// Count the starting point at time 0.
        #[arg(long)]
        include_start: bool,
    },
    /// Every acceptance check, as a machine-readable report.
    VerifyAll {
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// A JSON `VerifyConfig`; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Small preset (order 3, short walks) for smoke runs.
        #[arg(long, conflicts_with = "config")]
        quick: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Closed,
    Free,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MultArg {
    VisitCount,
    Degree,
}

fn parse_which(s: &str) -> std::result::Result<u8, String> {
    match s {
        "0" => Ok(0),
        "2" => Ok(2),
        _ => Err(format!("expected 0 or 2, got {s:?}")),
    }
}

/// A command's artifact and whether its checks passed.
struct Output {
    name: &'static str,
    body: Body,
    ok: bool,
}

enum Body {
    Value { value: Value, default: Format },
    /// Pre-rendered JSON and CSV.
    Rendered { json: String, csv: String },
}

fn output(name: &'static str, value: Value, default: Format) -> Output {
    Output {
        name,
        body: Body::Value { value, default },
        ok: true,
    }
}

fn read(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn cplx(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn table(order: usize, mc: McArgs) -> CliResult<CoefficientTable> {
    if !(2..=4).contains(&order) {
        return usage(format!("--order must be in 2..=4, got {order}"));
    }
    let mut cache = GammaCache::new(mc.config()?);
    Ok(CoefficientTable::compute(order, &mut cache)?)
}

fn run(cmd: &Command) -> CliResult<Output> {
    match *cmd {
        Command::Enumerate { r, p, w, cap } => {
            let list = graph::enumerate_mf(r, p, w, cap)?
                .iter()
                .enumerate()
                .map(|(id, f)| {
                    let (syf, gr) = graph::symmetry(f, r, p)?;
                    Ok(json!({"id": id, "q": f.q(), "rows": f.rows(), "syf": syf, "gr": gr}))
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(output("enumerate", Value::Array(list), Format::Json))
        }
        Command::Weights { r, p, ref matrix } => {
            let (fs, r) = match (matrix, r) {
                (Some(path), _) => {
                    let f = BalancedMatrix::from_json(&read(path)?)?;
                    if f.q() < p {
                        return usage(format!("matrix has q = {} < p = {p}", f.q()));
                    }
                    let r = f.q() - p;
                    (vec![f], r)
                }
                (None, Some(r)) => (graph::enumerate_mf(r, p, 2, 2)?, r),
                (None, None) => return usage("weights needs --r or --matrix"),
            };
            let list = fs
                .iter()
                .enumerate()
                .map(|(id, f)| {
                    let poly = weights::wei_partition(f, p)?;
                    let coeffs: Map<String, Value> =
                        poly.terms().map(|(k, c)| (k.to_string(), Value::String(c.to_string()))).collect();
                    let (syf, gr) = graph::symmetry(f, r, p)?;
                    Ok(json!({
                        "id": id,
                        "rows": f.rows(),
                        "wei": coeffs,
                        "syf": syf,
                        "gr": gr,
                        "eul": graph::euler_count(f)?.to_string(),
                    }))
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(output("weights", Value::Array(list), Format::Json))
        }
        Command::Integrate { r, mc } => {
            let cfg = mc.config()?;
            let rows = graph::enumerate_mf(r, 0, 2, 2)?
                .iter()
                .enumerate()
                .map(|(id, f)| {
                    let g = FeynmanGraph::from_directed(&graph::graph_of_matrix(f));
                    let q = gamma_g0_mc(&g, &cfg)?;
                    Ok(json!({"matrix_id": id, "gamma_g0": q.re(), "stderr": q.stderr, "n_eval": q.n_eval}))
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(output("integrate", Value::Array(rows), Format::Csv))
        }
        Command::Coeffs { order, mc } => {
            let t = table(order, mc)?;
            let sigma_u = t.sigma_u();
            let zeta2 = transform::zeta_closure(2, &t, LRoute::ClosedForm)?.zeta;
            let rows = (2..=order)
                .map(|r| {
                    json!({
                        "r": r,
                        "gamma0_r1": t.gamma0[r].value,
                        "gamma0_r1_err": t.gamma0[r].stderr,
                        "gC_r0": t.gc[r].value,
                        "gC_r0_err": t.gc[r].stderr,
                        "sigmaU_r0": sigma_u.coeffs[r].re,
                        "sigmaU_r0_err": sigma_u.errs[r],
                        "zeta2_r": zeta2.coeffs[r].re,
                        "zeta2_r_err": zeta2.errs[r],
                    })
                })
                .collect();
            Ok(output("coeffs", Value::Array(rows), Format::Json))
        }
        Command::Moments { dist, j, order, mc } => {
            if j > order {
                return usage(format!("--j {j} exceeds --order {order}"));
            }
            let t = table(order, mc)?;
            let rows = t
                .moments(dist)?
                .into_iter()
                .filter(|m| m.j <= j)
                .map(|m| json!({"dist": dist, "j": m.j, "re": m.re, "im": m.im, "stderr": m.stderr}))
                .collect();
            Ok(output("moments", Value::Array(rows), Format::Json))
        }
        Command::TransformCheck { ref grid } => {
            let points: Vec<(Complex64, u32)> = match grid {
                None => transform::borel_grid(),
                Some(path) => {
                    let raw: Vec<(f64, f64, u32)> = serde_json::from_str(&read(path)?)?;
                    raw.into_iter().map(|(re, im, r)| (Complex64::new(re, im), r)).collect()
                }
            };
            let mut ok = true;
            let rows = points
                .into_iter()
                .map(|(s, r)| {
                    let b = transform::borel_identity(s, r, 0)?;
                    ok &= b.pass;
                    Ok(json!({"s_re": s.re, "s_im": s.im, "R": r, "rel_diff": b.rel_diff, "pass": b.pass}))
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(Output {
                ok,
                ..output("transform-check", Value::Array(rows), Format::Csv)
            })
        }
        Command::Zeta { order, mc } => {
            let t = table(order, mc)?;
            let mut rows = Vec::new();
            for route in [LRoute::Moments, LRoute::ClosedForm] {
                for which in [0u8, 2] {
                    let z = transform::zeta_closure(which, &t, route)?;
                    for r in 0..=order {
                        rows.push(json!({
                            "which": which,
                            "route": format!("{route:?}"),
                            "r": r,
                            "zeta": cplx(z.zeta.coeffs[r]),
                            "zeta_err": z.zeta.errs[r],
                            "perturbative": z.reference.coeffs[r].re,
                            "perturbative_err": z.reference.errs[r],
                            "sigma": z.sigma[r],
                        }));
                    }
                }
            }
            Ok(output("zeta", Value::Array(rows), Format::Json))
        }
        Command::Edge {
            which,
            ref x_grid,
            ref config,
            synthetic,
        } => {
            let consts = match (config, synthetic) {
                (Some(path), _) => LipatovConstants::from_json(&read(path)?)?,
                (None, true) => LipatovConstants::synthetic(),
                (None, false) => {
                    return usage(
                        "edge needs --config FILE with the constants I1, I4, I6, DL, DT (or --synthetic)",
                    )
                }
            };
            let xs = parse_grid(x_grid)?;
            let rows = xs
                .into_iter()
                .map(|x| Ok(json!({"x": x, "f": edge::edge_density(which, x, &consts)?})))
                .collect::<CliResult<Vec<_>>>()?;
            Ok(output("edge", Value::Array(rows), Format::Csv))
        }
        Command::Walk {
            kind,
            n,
            k,
            batch,
            seed,
            multiplicity,
            include_start,
        } => {
            let kind = match kind {
                KindArg::Closed => WalkKind::Closed,
                KindArg::Free => WalkKind::Free,
            };
            let conv = CountConvention {
                visits: if include_start { VisitConvention::IncludeStart } else { VisitConvention::ExcludeStart },
                multiplicity: match multiplicity {
                    MultArg::VisitCount => MultiplicityConvention::VisitCount,
                    MultArg::Degree => MultiplicityConvention::Degree,
                },
            };
            let b = walk::beta_statistic(kind, n, k, batch, seed, conv)?;
            let mut v = serde_json::to_value(&b)?;
            v["convention"] = serde_json::to_value(conv)?;
            Ok(output("walk", v, Format::Json))
        }
        Command::VerifyAll {
            order,
            seed,
            ref config,
            quick,
        } => {
            let mut cfg = match config {
                Some(path) => VerifyConfig::from_json(&read(path)?)?,
                None if quick => VerifyConfig::quick(),
                None => VerifyConfig::default(),
            };
            if let Some(o) = order {
                cfg.order = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if !(2..=4).contains(&cfg.order) {
                return usage(format!("--order must be in 2..=4, got {}", cfg.order));
            }
            let report = verify::run(&cfg)?;
            Ok(Output {
                name: "verify-all",
                body: Body::Rendered {
                    json: report.to_json() + "\n",
                    csv: report.to_csv(),
                },
                ok: report.all_pass,
            })
        }
    }
}

/// Parses `a:b:n` into `n` equally spaced points.
fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Usage(format!("--x-grid expects a:b:n, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    match n {
        0 => Err(bad()),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
    }
}

/// CSV for a JSON array of flat objects (header from the first object) or a
/// single object (`key,value` rows).  Nested values are written as JSON.
fn to_csv(v: &Value) -> String {
    fn cell(v: &Value) -> String {
        let s = match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s
        }
    }
    let mut out = String::new();
    match v {
        Value::Array(items) => {
            let keys: Vec<String> = match items.first() {
                Some(Value::Object(m)) => m.keys().cloned().collect(),
                _ => Vec::new(),
            };
            out.push_str(&keys.join(","));
            out.push('\n');
            for item in items {
                let row: Vec<String> = keys.iter().map(|k| cell(item.get(k).unwrap_or(&Value::Null))).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        Value::Object(m) => {
            out.push_str("key,value\n");
            for (k, val) in m {
                out.push_str(&format!("{},{}\n", cell(&Value::String(k.clone())), cell(val)));
            }
        }
        other => {
            out.push_str(&cell(other));
            out.push('\n');
        }
    }
    out
}

fn emit(out: &Output, format: Option<Format>, dir: Option<&PathBuf>) -> CliResult<()> {
    let (text, fmt) = match &out.body {
        Body::Value { value, default } => {
            let fmt = format.unwrap_or(*default);
            let text = match fmt {
                Format::Json => serde_json::to_string_pretty(value)? + "\n",
                Format::Csv => to_csv(value),
            };
            (text, fmt)
        }
        Body::Rendered { json, csv } => match format.unwrap_or(Format::Json) {
            Format::Json => (json.clone(), Format::Json),
            Format::Csv => (csv.clone(), Format::Csv),
        },
    };
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let ext = if fmt == Format::Json { "json" } else { "csv" };
            std::fs::write(dir.join(format!("{}.{ext}", out.name)), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = run(&cli.command).and_then(|out| {
        emit(&out, cli.format, cli.out.as_ref())?;
        Ok(out.ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
