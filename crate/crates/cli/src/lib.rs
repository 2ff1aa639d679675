//! Command-line driver for the rank computations.
//!
//! Exit status: 0 on success, 1 when a checked inequality fails, 2 on usage,
//! input or budget errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use trirank::analytic::{analytic_rank, bias_char_sum, min_entropy};
use trirank::biascx::{closeness_report, complexity_bound, extremal_pair};
use trirank::decomp::{slice_decompose, verify_decomposition, DecomposeOptions, DecompositionDoc};
use trirank::geometric::geometric_rank_with;
use trirank::slicerank::{evaluate_chain, slice_rank, slice_rank_bounds, slice_rank_exact};
use trirank::variety::{estimate_dim, sz_check};
use trirank::{parse_poly_system, parse_tensor, write_tensor, Axis, Budget, Check, Field, FieldDesignation, GrOptions, Tensor3};

pub mod corpus;
pub mod report;

use report::{DecompSummary, RankReport, TensorId, Timings, SCHEMA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "trirank", version, about = "Analytic, geometric and slice rank of 3-tensors over finite fields")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Field to work in, `p^k`; tensors over a prime subfield are lifted.
    #[arg(long, global = true)]
    pub field: Option<String>,
    #[arg(long, global = true, default_value_t = 3)]
    pub kmax: u32,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Largest number of points enumerated exactly.
    #[arg(long, global = true, env = "TRIRANK_BUDGET")]
    pub budget: Option<u128>,
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    #[arg(long, global = true)]
    pub k_limit: Option<u32>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Add wall-clock timings to reports (makes them non-reproducible).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analytic rank from the exact zero count.
    Ar {
        #[arg(long)]
        tensor: PathBuf,
        /// Write the output distribution as CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
        /// Also report the bias as a character sum.
        #[arg(long)]
        bias: bool,
    },
    /// Geometric rank through the rank stratification of slices.
    Gr {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, default_value = "x")]
        axis: Axis,
        /// Skip the kernel-codimension cross-check.
        #[arg(long)]
        no_cross_check: bool,
    },
    /// Slice rank, exact where feasible.
    Sr {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, conflicts_with = "bounds")]
        exact: bool,
        /// Only the interval from AR, GR and the dimension bound.
        #[arg(long)]
        bounds: bool,
    },
    /// AR, GR, SR and the inequalities between them.
    Chain {
        #[arg(long)]
        tensor: PathBuf,
        /// Also build and verify a slice decomposition.
        #[arg(long)]
        decompose: bool,
        #[arg(long, default_value_t = 3)]
        kwork: u32,
    },
    /// Explicit slice decomposition over an extension field.
    Decompose {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, default_value_t = 3)]
        kwork: u32,
    },
    /// Check a decomposition file against a tensor.
    Verify {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        decomp: PathBuf,
    },
    /// Point-count bound for a polynomial system.
    Szcheck {
        /// Polynomials in x1..xn separated by `;`.
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        nvars: usize,
    },
    /// Agreement probability of two bilinear maps and the rank trade-off.
    Closeness {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
    },
    /// Extremal pair for the closeness trade-off.
    Extremal {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        n: usize,
        /// Writes `<prefix>_f.t` and `<prefix>_g.t`.
        #[arg(long)]
        out_prefix: Option<PathBuf>,
    },
    /// Multiplication-count upper bound `n * SR` with min-entropy.
    Complexity {
        #[arg(long)]
        tensor: PathBuf,
    },
    /// Batch of chain reports with a summary.
    Corpus {
        /// TOML corpus description.
        #[arg(long, required_unless_present = "builtin")]
        spec: Option<PathBuf>,
        #[arg(long)]
        builtin: bool,
        /// Directory for per-item reports and summary.csv.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        decompose: bool,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

/// Settings shared by every subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub field: Option<FieldDesignation>,
    pub kmax: u32,
    pub k_work: u32,
    pub budget: Budget,
    pub seed: u64,
    pub decompose: bool,
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            field: None,
            kmax: 3,
            k_work: 3,
            budget: Budget::default(),
            seed: 0,
            decompose: false,
            timings: false,
        }
    }
}

#[derive(Debug)]
pub struct CliError(pub String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

type CliResult = Result<i32, CliError>;

impl RunConfig {
    fn from_common(c: &CommonArgs) -> Result<RunConfig, CliError> {
        let mut budget = Budget::default();
        if let Some(b) = c.budget {
            budget.exact = b;
        }
        if let Some(s) = c.samples {
            budget.samples = s;
        }
        if let Some(k) = c.k_limit {
            budget.k_limit = k;
        }
        if budget.exact == 0 || budget.samples == 0 || budget.k_limit == 0 {
            return Err(CliError("budgets must be positive".into()));
        }
        if c.kmax < 2 {
            return Err(CliError("--kmax must be at least 2".into()));
        }
        let field = c.field.as_deref().map(str::parse).transpose()?;
        Ok(RunConfig {
            field,
            kmax: c.kmax,
            k_work: 3,
            budget,
            seed: c.seed,
            decompose: false,
            timings: c.timings,
        })
    }

    fn target_field(&self) -> Result<Option<Field>, CliError> {
        Ok(self.field.map(Field::from_designation).transpose()?)
    }

    fn require_field(&self) -> Result<Field, CliError> {
        self.target_field()?.ok_or_else(|| CliError("--field is required".into()))
    }

    fn load(&self, path: &Path) -> Result<Tensor3, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
        let t = parse_tensor(&text).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
        match self.target_field()? {
            Some(f) if &f != t.field() => Ok(t.lift(&f)?),
            _ => Ok(t),
        }
    }
}

/// Chain report for one tensor, with an optional decomposition.
pub fn analyze(id: &str, t: &Tensor3, cfg: &RunConfig, seed: u64, decompose: bool) -> trirank::Result<RankReport> {
    let start = Instant::now();
    let ar = analytic_rank(t, &cfg.budget)?;
    let ar_time = start.elapsed();
    let start = Instant::now();
    let gr = geometric_rank_with(
        t,
        &GrOptions {
            kmax: cfg.kmax,
            seed,
            budget: cfg.budget.clone(),
            ..GrOptions::default()
        },
    )?;
    let gr_time = start.elapsed();
    let start = Instant::now();
    let sr = slice_rank(t, &cfg.budget, Some(&ar), Some(&gr))?;
    let sr_time = start.elapsed();
    let mut decompose_time = None;
    let decomposition = if decompose {
        let start = Instant::now();
        let opts = DecomposeOptions {
            k_work: cfg.k_work,
            seed,
            kmax: cfg.kmax,
            budget: cfg.budget.clone(),
        };
        let d = slice_decompose(t, &opts, Some(&gr))?;
        let verified = verify_decomposition(t, &d);
        decompose_time = Some(Timings::ms(start.elapsed()));
        Some(DecompSummary::new(&d, verified))
    } else {
        None
    };
    let timings = cfg.timings.then(|| Timings {
        ar_ms: Timings::ms(ar_time),
        gr_ms: Timings::ms(gr_time),
        sr_ms: Timings::ms(sr_time),
        decompose_ms: decompose_time,
    });
    Ok(RankReport {
        schema: SCHEMA,
        tensor: TensorId::new(id, t),
        chain: evaluate_chain(sr, gr, ar),
        decomposition,
        timings,
    })
}

struct Output<'a> {
    path: Option<&'a Path>,
    stdout: &'a mut dyn Write,
}

impl Output<'_> {
    fn emit(&mut self, text: &str) -> Result<(), CliError> {
        match self.path {
            Some(p) => fs::write(p, text).map_err(|e| CliError(format!("{}: {e}", p.display()))),
            None => Ok(self.stdout.write_all(text.as_bytes())?),
        }
    }

    fn json<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.emit(&s)
    }
}

fn label(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

#[derive(Serialize)]
struct ArOut {
    schema: u32,
    tensor: TensorId,
    ar: trirank::ARValue,
    ar_ceil: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    bias: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_entropy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    argmax_is_zero: Option<bool>,
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    schema: u32,
    tensor: &'a TensorId,
    #[serde(flatten)]
    body: T,
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let mut cfg = RunConfig::from_common(&cli.common)?;
    let mut o = Output {
        path: cli.common.out.as_deref(),
        stdout: out,
    };
    let csv_mode = cli.common.format == Format::Csv;
    match cli.command {
        Command::Ar { tensor, histogram, bias } => {
            let t = cfg.load(&tensor)?;
            let ar = analytic_rank(&t, &cfg.budget)?;
            let bias = if bias {
                let b = bias_char_sum(&t, &cfg.budget)?;
                Some([b.re, b.im])
            } else {
                None
            };
            let (mut me, mut zero) = (None, None);
            if let Some(path) = histogram {
                let h = min_entropy(&t, &cfg.budget)?;
                let file = fs::File::create(&path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
                h.write_csv(std::io::BufWriter::new(file))?;
                me = Some(h.me);
                zero = Some(h.argmax_is_zero);
            }
            let rep = ArOut {
                schema: SCHEMA,
                tensor: TensorId::new(&label(&tensor), &t),
                ar_ceil: ar.ceil(),
                ar,
                bias,
                min_entropy: me,
                argmax_is_zero: zero,
            };
            if csv_mode {
                o.emit(&format!(
                    "id,zero_count,domain_exp,q,ar,ar_ceil\n{},{},{},{},{:.12},{}\n",
                    rep.tensor.id, rep.ar.zero_count, rep.ar.domain_exp, rep.ar.q, rep.ar.value, rep.ar_ceil
                ))?;
            } else {
                o.json(&rep)?;
            }
            Ok(EXIT_OK)
        }
        Command::Gr {
            tensor,
            axis,
            no_cross_check,
        } => {
            let t = cfg.load(&tensor)?;
            let gr = geometric_rank_with(
                &t,
                &GrOptions {
                    kmax: cfg.kmax,
                    axis,
                    cross_check: !no_cross_check,
                    seed: cfg.seed,
                    budget: cfg.budget.clone(),
                    ..GrOptions::default()
                },
            )?;
            let id = TensorId::new(&label(&tensor), &t);
            if csv_mode {
                o.emit(&format!(
                    "id,axis,gr,argmin_r,stable,consistent,k_reached\n{},{},{},{},{},{},{}\n",
                    id.id,
                    gr.axis,
                    gr.gr,
                    gr.argmin_r,
                    gr.stable,
                    gr.consistent.map_or(String::new(), |c| c.to_string()),
                    gr.k_reached
                ))?;
            } else {
                o.json(&Wrapped {
                    schema: SCHEMA,
                    tensor: &id,
                    body: serde_json::json!({ "gr": gr }),
                })?;
            }
            Ok(EXIT_OK)
        }
        Command::Sr { tensor, exact, bounds } => {
            let t = cfg.load(&tensor)?;
            let sr = if exact {
                slice_rank_exact(&t, &cfg.budget)?
            } else if bounds {
                let ar = analytic_rank(&t, &cfg.budget)?;
                let gr = geometric_rank_with(
                    &t,
                    &GrOptions {
                        kmax: cfg.kmax,
                        seed: cfg.seed,
                        budget: cfg.budget.clone(),
                        cross_check: false,
                        ..GrOptions::default()
                    },
                )?;
                slice_rank_bounds(&t, Some(&ar), Some(&gr))
            } else {
                let ar = analytic_rank(&t, &cfg.budget).ok();
                slice_rank(&t, &cfg.budget, ar.as_ref(), None)?
            };
            let id = TensorId::new(&label(&tensor), &t);
            if csv_mode {
                o.emit(&format!("id,sr_lo,sr_hi,method\n{},{},{},{:?}\n", id.id, sr.lo, sr.hi, sr.method))?;
            } else {
                o.json(&Wrapped {
                    schema: SCHEMA,
                    tensor: &id,
                    body: serde_json::json!({ "sr": sr }),
                })?;
            }
            Ok(EXIT_OK)
        }
        Command::Chain {
            tensor,
            decompose,
            kwork,
        } => {
            cfg.k_work = kwork;
            let t = cfg.load(&tensor)?;
            let rep = analyze(&label(&tensor), &t, &cfg, cfg.seed, decompose)?;
            if csv_mode {
                let mut buf = Vec::new();
                report::write_rows(&mut buf, &[report::SummaryRow::from_report(&rep)])?;
                o.emit(&String::from_utf8(buf)?)?;
            } else {
                o.json(&rep)?;
            }
            if rep.failed() {
                writeln!(err, "chain check failed for {}", rep.tensor.id)?;
                return Ok(EXIT_CHECK_FAILED);
            }
            Ok(EXIT_OK)
        }
        Command::Decompose { tensor, kwork } => {
            let t = cfg.load(&tensor)?;
            let opts = DecomposeOptions {
                k_work: kwork,
                seed: cfg.seed,
                kmax: cfg.kmax,
                budget: cfg.budget.clone(),
            };
            let d = slice_decompose(&t, &opts, None)?;
            o.json(&DecompositionDoc::from_decomposition(&d))?;
            writeln!(
                err,
                "{} terms over {}{}",
                d.len(),
                d.working_field.designation(),
                match d.within_bound {
                    Some(false) => " (exceeds 2 GR)",
                    _ => "",
                }
            )?;
            Ok(if d.within_bound == Some(false) {
                EXIT_CHECK_FAILED
            } else {
                EXIT_OK
            })
        }
        Command::Verify { tensor, decomp } => {
            let t = cfg.load(&tensor)?;
            let text = fs::read_to_string(&decomp).map_err(|e| CliError(format!("{}: {e}", decomp.display())))?;
            let doc: DecompositionDoc = serde_json::from_str(&text)?;
            let d = doc.to_decomposition()?;
            let ok = verify_decomposition(&t, &d);
            o.json(&serde_json::json!({
                "schema": SCHEMA,
                "verified": ok,
                "terms": d.len(),
                "working_field": d.working_field.designation().to_string(),
            }))?;
            Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Szcheck { system, nvars } => {
            let field = cfg.require_field()?;
            let text = fs::read_to_string(&system).map_err(|e| CliError(format!("{}: {e}", system.display())))?;
            let s = parse_poly_system(&text, &field, nvars)?;
            let est = estimate_dim(&s, cfg.kmax, &cfg.budget, cfg.seed)?;
            match sz_check(&s, &est, &cfg.budget) {
                Ok(sz) => {
                    o.json(&serde_json::json!({ "schema": SCHEMA, "estimate": est, "sz": sz }))?;
                    Ok(if sz.holds { EXIT_OK } else { EXIT_CHECK_FAILED })
                }
                Err(trirank::Error::UnstableEstimate) => {
                    o.json(&serde_json::json!({ "schema": SCHEMA, "estimate": est, "sz": null }))?;
                    writeln!(err, "dimension estimate did not stabilise; raise --kmax")?;
                    Ok(EXIT_ERROR)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Closeness { f, g } => {
            let tf = cfg.load(&f)?;
            let tg = cfg.load(&g)?;
            let rep = closeness_report(&tf, &tg, &cfg.budget)?;
            o.json(&serde_json::json!({ "schema": SCHEMA, "closeness": rep }))?;
            Ok(closeness_exit(&rep))
        }
        Command::Extremal { r, t, n, out_prefix } => {
            let field = cfg.require_field()?;
            let (tf, tg) = extremal_pair(&field, r, t, n)?;
            if let Some(prefix) = out_prefix {
                let name = |suffix: &str| {
                    let mut s = prefix.clone().into_os_string();
                    s.push(suffix);
                    PathBuf::from(s)
                };
                for (path, tensor) in [(name("_f.t"), &tf), (name("_g.t"), &tg)] {
                    fs::write(&path, write_tensor(tensor)).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
                }
            }
            let rep = closeness_report(&tf, &tg, &cfg.budget)?;
            o.json(&serde_json::json!({ "schema": SCHEMA, "r": r, "t": t, "n": n, "closeness": rep }))?;
            Ok(closeness_exit(&rep))
        }
        Command::Complexity { tensor } => {
            let t = cfg.load(&tensor)?;
            let c = complexity_bound(&t, &cfg.budget)?;
            let id = TensorId::new(&label(&tensor), &t);
            o.json(&Wrapped {
                schema: SCHEMA,
                tensor: &id,
                body: serde_json::json!({
                    "n": c.n,
                    "sr": c.sr,
                    "multiplications_upper_bound": c.bound,
                    "multiplications_upper_bound_hi": c.bound_hi,
                    "ar": c.ar,
                    "min_entropy": c.me.me,
                    "me_equals_ar_log2q": c.me_identity,
                }),
            })?;
            Ok(EXIT_OK)
        }
        Command::Corpus {
            spec,
            builtin,
            out_dir,
            decompose,
            jobs,
        } => {
            cfg.decompose = decompose;
            let (spec, base) = match spec {
                Some(path) if !builtin => {
                    let text = fs::read_to_string(&path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
                    let spec: corpus::CorpusSpec = toml::from_str(&text)?;
                    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                    (spec, base)
                }
                _ => (corpus::builtin(), PathBuf::new()),
            };
            let run = corpus::run_corpus(&spec, &base, &cfg, jobs);
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir)?;
                for (i, (id, res)) in run.reports.iter().enumerate() {
                    if let Ok(r) = res {
                        let mut s = serde_json::to_string_pretty(r)?;
                        s.push('\n');
                        fs::write(dir.join(format!("{i:03}_{}.json", sanitize(id))), s)?;
                    }
                }
                let file = fs::File::create(dir.join("summary.csv"))?;
                report::write_rows(file, &run.rows)?;
            }
            if csv_mode {
                let mut buf = Vec::new();
                report::write_rows(&mut buf, &run.rows)?;
                o.emit(&String::from_utf8(buf)?)?;
            } else {
                o.json(&run.summary)?;
            }
            for (id, res) in &run.reports {
                if let Err(e) = res {
                    writeln!(err, "{id}: {e}")?;
                }
            }
            Ok(if run.summary.failed > 0 {
                EXIT_CHECK_FAILED
            } else {
                EXIT_OK
            })
        }
    }
}

fn closeness_exit(rep: &trirank::ClosenessReport) -> i32 {
    if rep.holds_subadditive == Check::Fail || rep.holds_diff_ar == Check::Fail {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    }
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Runs with explicit output streams; returns the exit status.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_ERROR;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(CliError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
