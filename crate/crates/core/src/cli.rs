//! Command-line front end. Every JSON output is an envelope
//! `{"kind", "manifest", "result"}`; CSV outputs written with `--out` get a
//! sidecar `<out>.manifest.json`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Tolerances;
use crate::diagnostics::{
    decay_series, diagnose, discontinuity_certificate, matrix_element_series, vanishing_index, DecayRow,
    DiagnosticsOptions, MelementRow,
};
use crate::dyadic::DyadicRational;
use crate::ensembles::{genericity_scan, pauli_stabilizer_isometry, so3_isometry, summarize, EnsembleConfig};
use crate::error::{Error, Result};
use crate::linalg::{basis_vector, haar_isometry, vector_from_pairs, Isometry, StateVector};
use crate::thompson::ThompsonElement;
use crate::ttn::rotation_matrix_element;

pub const THREADS_ENV: &str = "DYADIC_LIMIT_THREADS";
pub const VANISHING_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "dyadic-limit", version, about = "Continuity diagnostics for tree-network representations of Thompson's group T")]
pub struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Eigenvalue-1 counting tolerance and condition margin.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a Haar-random isometry and print it as JSON.
    Sample(Source),
    /// Full diagnostics report for one isometry.
    Check {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
        #[command(flatten)]
        states: States,
    },
    /// Decay series ‖R^k(x)‖ as CSV.
    Decay {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
    },
    /// Rotated matrix elements M_k as CSV.
    Melement {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
        #[arg(long, value_enum, default_value_t = Mode::Transfer)]
        mode: Mode,
        #[command(flatten)]
        states: States,
    },
    /// Diagnostics over a range of Haar seeds.
    Scan {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
        /// Also write the per-seed CSV summary here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Reports for the explicit example isometries.
    Example {
        #[command(subcommand)]
        which: Example,
    },
    /// Thompson group utilities.
    Thompson {
        #[command(subcommand)]
        verb: ThompsonVerb,
    },
}

#[derive(Debug, Args)]
struct Source {
    #[arg(long, required_unless_present = "isometry")]
    d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Load the isometry from a JSON file instead of sampling.
    #[arg(long, conflicts_with = "d")]
    isometry: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct States {
    /// φ as a JSON list of [re, im] pairs (default: first basis vector).
    #[arg(long)]
    phi: Option<String>,
    /// ψ as a JSON list of [re, im] pairs (default: first basis vector).
    #[arg(long)]
    psi: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Transfer,
    Direct,
    Both,
}

#[derive(Debug, Subcommand)]
enum Example {
    So3 {
        #[arg(long, default_value_t = 8)]
        kmax: usize,
    },
    Stabilizer {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
    },
}

#[derive(Debug, Subcommand)]
enum ThompsonVerb {
    /// Evaluate f(t). Elements are JSON text or @path.
    Eval {
        #[arg(long)]
        f: String,
        #[arg(long)]
        t: String,
    },
    /// f ∘ g.
    Compose {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
    },
    Inverse {
        #[arg(long)]
        f: String,
    },
    /// sup_t of the circle distance between f(t) and t.
    Distance {
        #[arg(long)]
        f: String,
    },
    /// The rotation t ↦ t + 2^-k.
    Rotation {
        #[arg(long)]
        k: u32,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config: Value,
    pub version: String,
    pub timestamp: String,
    pub seeds: Vec<u64>,
}

/// `SOURCE_DATE_EPOCH` pins the timestamp so identical runs are byte-identical.
fn timestamp() -> String {
    let fixed = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse::<i64>().ok());
    let when = fixed
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
        .unwrap_or_else(chrono::Utc::now);
    when.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

struct Ctx {
    argv: Vec<String>,
    out: Option<PathBuf>,
    tol: Tolerances,
}

impl Ctx {
    fn manifest(&self, config: Value, seeds: Vec<u64>) -> RunManifest {
        RunManifest {
            command_line: self.argv.clone(),
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp(),
            seeds,
        }
    }

    fn write(&self, path: Option<&Path>, text: &str) -> Result<()> {
        match path {
            Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit_json<T: Serialize>(&self, kind: &str, manifest: RunManifest, result: &T) -> Result<()> {
        let doc = json!({ "kind": kind, "manifest": manifest, "result": result });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        self.write(self.out.as_deref(), &text)
    }

    fn emit_csv(&self, manifest: RunManifest, csv_text: &str) -> Result<()> {
        if let Some(out) = &self.out {
            let mut side = out.clone().into_os_string();
            side.push(".manifest.json");
            let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))? + "\n";
            self.write(Some(Path::new(&side)), &text)?;
        }
        self.write(self.out.as_deref(), csv_text)
    }
}

/// Serializes rows to CSV with a header line.
pub fn emit_plot_data<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Loads an isometry from a bare `{d, matrix}` object or from a `sample` envelope.
pub fn load_isometry(path: &Path) -> Result<Isometry> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(inner) = value.get_mut("result") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))
}

fn resolve(source: &Source) -> Result<(Isometry, String, Vec<u64>)> {
    match (&source.isometry, source.d) {
        (Some(path), _) => Ok((load_isometry(path)?, format!("file:{}", path.display()), Vec::new())),
        (None, Some(d)) => Ok((haar_isometry(d, source.seed)?, crate::ensembles::haar_source(d, source.seed), vec![source.seed])),
        (None, None) => Err(Error::Parse("either --d or --isometry is required".into())),
    }
}

fn parse_state(arg: Option<&str>, d: usize) -> Result<StateVector> {
    let Some(text) = arg else {
        return Ok(basis_vector(d, 0));
    };
    let pairs: Vec<[f64; 2]> = serde_json::from_str(text).map_err(|e| Error::Parse(format!("state vector: {e}")))?;
    let v = vector_from_pairs(&pairs)?;
    if v.len() != d {
        return Err(Error::DimensionMismatch { expected: format!("vector in C^{d}"), got: format!("length {}", v.len()) });
    }
    Ok(v)
}

fn parse_element(arg: &str) -> Result<ThompsonElement> {
    let text = match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?,
        None => arg.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("Thompson element: {e}")))
}

fn source_config(source: &Source) -> Value {
    json!({ "d": source.d, "seed": source.seed, "isometry": source.isometry })
}

#[derive(Serialize)]
struct BothRow {
    k: usize,
    re: f64,
    im: f64,
    abs: f64,
    hoelder_bound: f64,
    direct_re: f64,
    direct_im: f64,
    abs_diff: f64,
}

#[derive(Serialize)]
struct ScanRow {
    seed: u64,
    norm_x: f64,
    norm_gamma: f64,
    det: f64,
    condition: bool,
}

fn scan_thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|s| s.parse().ok()).filter(|&n| n > 0)
}

fn execute(cli: Cli, argv: Vec<String>) -> Result<()> {
    let mut tol = Tolerances::default();
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Precondition(format!("--tol {t} must lie in (0, 1)")));
        }
        tol.eigen_one = t;
        tol.condition = t;
    }
    let ctx = Ctx { argv, out: cli.out.clone(), tol };

    match cli.command {
        Command::Sample(source) => {
            let (v, _, seeds) = resolve(&source)?;
            ctx.emit_json("isometry", ctx.manifest(source_config(&source), seeds), &v)
        }
        Command::Check { source, kmax, states } => {
            let (v, label, seeds) = resolve(&source)?;
            let opts = DiagnosticsOptions {
                kmax,
                phi: Some(parse_state(states.phi.as_deref(), v.d())?),
                psi: Some(parse_state(states.psi.as_deref(), v.d())?),
                tol: ctx.tol,
            };
            let report = diagnose(&v, &label, &opts)?;
            let mut config = source_config(&source);
            config["kmax"] = json!(kmax);
            config["tol"] = json!(ctx.tol);
            ctx.emit_json("report", ctx.manifest(config, seeds), &report)
        }
        Command::Decay { source, kmax } => {
            let (v, _, seeds) = resolve(&source)?;
            let series = decay_series(&v, kmax, &ctx.tol)?;
            let rows: Vec<DecayRow> = series
                .norms
                .iter()
                .zip(series.closed_bounds())
                .enumerate()
                .map(|(k, (&norm, bound))| DecayRow { k, norm, bound })
                .collect();
            let mut config = source_config(&source);
            config["kmax"] = json!(kmax);
            ctx.emit_csv(ctx.manifest(config, seeds), &emit_plot_data(&rows)?)
        }
        Command::Melement { source, kmax, mode, states } => {
            let (v, _, seeds) = resolve(&source)?;
            let phi = parse_state(states.phi.as_deref(), v.d())?;
            let psi = parse_state(states.psi.as_deref(), v.d())?;
            let series = matrix_element_series(&v, &phi, &psi, kmax, &ctx.tol)?;
            if let Some(kstar) = vanishing_index(&series, VANISHING_THRESHOLD) {
                eprintln!("# k_star={kstar} (|M_k| < {VANISHING_THRESHOLD:e} for k_star <= k <= {kmax})");
            } else {
                eprintln!("# k_star=none (|M_{kmax}| >= {VANISHING_THRESHOLD:e})");
            }
            let text = match mode {
                Mode::Transfer => emit_plot_data(&series.iter().map(MelementRow::from).collect::<Vec<_>>())?,
                Mode::Direct | Mode::Both => {
                    let mut direct = Vec::with_capacity(kmax);
                    for k in 1..=kmax {
                        direct.push(rotation_matrix_element(&v, &phi, &psi, k as u32)?);
                    }
                    if mode == Mode::Direct {
                        let rows: Vec<MelementRow> = series
                            .iter()
                            .zip(&direct)
                            .map(|(m, z)| MelementRow { k: m.k, re: z.re, im: z.im, abs: z.norm(), hoelder_bound: m.hoelder_bound })
                            .collect();
                        emit_plot_data(&rows)?
                    } else {
                        let rows: Vec<BothRow> = series
                            .iter()
                            .zip(&direct)
                            .map(|(m, z)| BothRow {
                                k: m.k,
                                re: m.value.re,
                                im: m.value.im,
                                abs: m.value.norm(),
                                hoelder_bound: m.hoelder_bound,
                                direct_re: z.re,
                                direct_im: z.im,
                                abs_diff: (m.value - z).norm(),
                            })
                            .collect();
                        emit_plot_data(&rows)?
                    }
                }
            };
            let mut config = source_config(&source);
            config["kmax"] = json!(kmax);
            config["mode"] = json!(mode);
            config["phi"] = json!(crate::linalg::vector_to_pairs(&phi));
            config["psi"] = json!(crate::linalg::vector_to_pairs(&psi));
            ctx.emit_csv(ctx.manifest(config, seeds), &text)
        }
        Command::Scan { d, samples, seed, kmax, csv: csv_path } => {
            let cfg = EnsembleConfig { d, num_samples: samples, base_seed: seed, kmax, tol: ctx.tol };
            let reports = match scan_thread_count() {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Precondition(e.to_string()))?
                    .install(|| genericity_scan(&cfg))?,
                None => genericity_scan(&cfg)?,
            };
            let summary = summarize(d, &reports);
            if summary.failures > 0 {
                eprintln!("# {} of {} samples violate the intersection condition (min margin {:e})", summary.failures, samples, summary.min_margin);
            }
            let seeds: Vec<u64> = cfg.seeds().collect();
            let manifest = ctx.manifest(serde_json::to_value(&cfg).map_err(|e| Error::Io(e.to_string()))?, seeds.clone());
            if let Some(path) = csv_path {
                let rows: Vec<ScanRow> = seeds
                    .iter()
                    .zip(&reports)
                    .map(|(&seed, r)| ScanRow { seed, norm_x: r.norm_x, norm_gamma: r.norm_gamma, det: r.genericity_det, condition: r.condition_holds })
                    .collect();
                ctx.write(Some(&path), &emit_plot_data(&rows)?)?;
            }
            ctx.emit_json("scan", manifest, &json!({ "summary": summary, "reports": reports }))
        }
        Command::Example { which } => {
            let (v, label, kmax) = match which {
                Example::So3 { kmax } => (so3_isometry(), "so3".to_string(), kmax),
                Example::Stabilizer { d, kmax } => (pauli_stabilizer_isometry(d)?, format!("stabilizer:d={d}"), kmax),
            };
            let opts = DiagnosticsOptions { kmax, phi: None, psi: None, tol: ctx.tol };
            let report = diagnose(&v, &label, &opts)?;
            let cert = discontinuity_certificate(&v, &ctx.tol)?;
            debug_assert_eq!(cert.discontinuous, report.certificate);
            ctx.emit_json("report", ctx.manifest(json!({ "example": label, "kmax": kmax }), Vec::new()), &report)
        }
        Command::Thompson { verb } => {
            let (config, result) = match verb {
                ThompsonVerb::Eval { f, t } => {
                    let el = parse_element(&f)?;
                    let t: DyadicRational = t.parse()?;
                    (json!({ "verb": "eval", "f": el, "t": t }), json!(el.evaluate(t)?))
                }
                ThompsonVerb::Compose { f, g } => {
                    let (fe, ge) = (parse_element(&f)?, parse_element(&g)?);
                    let h = fe.compose(&ge)?;
                    (json!({ "verb": "compose", "f": fe, "g": ge }), json!(h))
                }
                ThompsonVerb::Inverse { f } => {
                    let el = parse_element(&f)?;
                    (json!({ "verb": "inverse", "f": el }), json!(el.inverse()))
                }
                ThompsonVerb::Distance { f } => {
                    let el = parse_element(&f)?;
                    (json!({ "verb": "distance", "f": el }), json!(el.circle_distance_to_identity()?))
                }
                ThompsonVerb::Rotation { k } => (json!({ "verb": "rotation", "k": k }), json!(ThompsonElement::rotation(k)?)),
            };
            ctx.emit_json("thompson", ctx.manifest(config, Vec::new()), &result)
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = argv.iter().skip(1).map(|s| s.to_string_lossy().into_owned()).collect();
    match execute(cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
