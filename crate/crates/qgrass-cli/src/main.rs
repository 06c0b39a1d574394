//! `qgrass` — reproducible tables and verification reports for exact
//! harmonic analysis on Grassmannians over finite fields.
//!
//! Output contract: a fixed-schema record `{command, q, n, seed, rows}`;
//! counts and rationals are decimal strings (`"1395"`, `"35/16"`) so outputs
//! survive consumers without big-integer support; floating point appears
//! only in columns suffixed `_approx` or named after an approximation. The
//! same seed and flags produce byte-identical output. Exit codes: 0 success,
//! 1 verification failure, 2 usage error.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use qgrass::gf::FieldSpec;
use qgrass::grassmann::{
    gl_count, grassmannian_count, mu_n, orbit_count, orbit_index, Grassmannian,
};
use qgrass::qseries::{orbit_weight, total_mass_float, QRat};
use qgrass::spectral::{
    asc_eigencheck, finite_averaging_matrix, hahn_eigencheck, hahn_eigenvalue, markov_walk,
    mc_orbit_distribution, occupancy, stationary_frequencies,
};
use qgrass::verify::{rat_to_f64, run_suite, SUITES};

#[derive(Parser)]
#[command(
    name = "qgrass",
    version,
    about = "Exact counting, invariant measures and spectra on Grassmannians over F_q"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for the report table.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Cardinalities: GL sizes, the Grassmannian Gr(2n, n), its parabolic
    /// orbits, and their normalized measures.
    Count {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: usize,
        /// Cross-check the closed forms by full enumeration.
        #[arg(long)]
        verify_by_enumeration: bool,
    },
    /// List every subspace of Gr(2n, k) as RREF basis rows.
    Enumerate {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: usize,
        /// Subspace dimension (defaults to n).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Orbit weights w(k), partial sums, and the limiting total mass.
    Measure {
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 12)]
        kmax: usize,
    },
    /// Eigenvalue reports: the q-Hahn operator at finite n, or the infinite
    /// averaging kernel (--infinite).
    Spectrum {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        infinite: bool,
        #[arg(long, default_value_t = 8)]
        jmax: usize,
        /// Truncation depth for infinite-model residual checks.
        #[arg(long = "K", default_value_t = 30)]
        kcap: usize,
    },
    /// Monte Carlo orbit distribution on Gr(2n, n) against the exact law.
    Sample {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate the averaging Markov chain and compare occupancy with the
    /// stationary law.
    Walk {
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 1_000_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Starting orbit index.
        #[arg(long, default_value_t = 0)]
        k: usize,
    },
    /// Run the verification suites; nonzero exit on any failure.
    Verify {
        /// Suite name, or "all".
        #[arg(long, default_value = "all")]
        suite: String,
        /// Restrict q-parameterized suites to one field order.
        #[arg(long)]
        q: Option<u64>,
    },
}

#[derive(Serialize)]
struct Output<R: Serialize> {
    command: String,
    q: Option<String>,
    n: Option<String>,
    seed: Option<String>,
    rows: Vec<R>,
}

/// Row types know their CSV column set; JSON uses the same field order.
trait CsvRow: Serialize {
    fn headers() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

fn qr_string(r: &QRat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn f(x: f64) -> String {
    format!("{x:.9}")
}

#[derive(Serialize)]
struct CountRow {
    k: String,
    count: String,
    mu: String,
}

impl CsvRow for CountRow {
    fn headers() -> &'static [&'static str] {
        &["k", "count", "mu"]
    }
    fn fields(&self) -> Vec<String> {
        vec![self.k.clone(), self.count.clone(), self.mu.clone()]
    }
}

#[derive(Serialize)]
struct EnumerateRow {
    index: String,
    basis: String,
}

impl CsvRow for EnumerateRow {
    fn headers() -> &'static [&'static str] {
        &["index", "basis"]
    }
    fn fields(&self) -> Vec<String> {
        vec![self.index.clone(), self.basis.clone()]
    }
}

#[derive(Serialize)]
struct MeasureRow {
    k: String,
    weight: String,
    weight_approx: String,
    partial_sum_approx: String,
}

impl CsvRow for MeasureRow {
    fn headers() -> &'static [&'static str] {
        &["k", "weight", "weight_approx", "partial_sum_approx"]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.k.clone(),
            self.weight.clone(),
            self.weight_approx.clone(),
            self.partial_sum_approx.clone(),
        ]
    }
}

#[derive(Serialize)]
struct SpectrumRow {
    j: String,
    eigenvalue: String,
    eigenvalue_approx: String,
    max_residual: String,
    averaging_eigenvalue_approx: String,
}

impl CsvRow for SpectrumRow {
    fn headers() -> &'static [&'static str] {
        &[
            "j",
            "eigenvalue",
            "eigenvalue_approx",
            "max_residual",
            "averaging_eigenvalue_approx",
        ]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.j.clone(),
            self.eigenvalue.clone(),
            self.eigenvalue_approx.clone(),
            self.max_residual.clone(),
            self.averaging_eigenvalue_approx.clone(),
        ]
    }
}

#[derive(Serialize)]
struct SampleRow {
    k: String,
    count: String,
    empirical: String,
    exact: String,
    exact_approx: String,
    standard_error: String,
}

impl CsvRow for SampleRow {
    fn headers() -> &'static [&'static str] {
        &["k", "count", "empirical", "exact", "exact_approx", "standard_error"]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.k.clone(),
            self.count.clone(),
            self.empirical.clone(),
            self.exact.clone(),
            self.exact_approx.clone(),
            self.standard_error.clone(),
        ]
    }
}

#[derive(Serialize)]
struct WalkRow {
    k: String,
    occupancy: String,
    stationary_approx: String,
}

impl CsvRow for WalkRow {
    fn headers() -> &'static [&'static str] {
        &["k", "occupancy", "stationary_approx"]
    }
    fn fields(&self) -> Vec<String> {
        vec![self.k.clone(), self.occupancy.clone(), self.stationary_approx.clone()]
    }
}

#[derive(Serialize)]
struct VerifyRow {
    suite: String,
    status: String,
    detail: String,
}

impl CsvRow for VerifyRow {
    fn headers() -> &'static [&'static str] {
        &["suite", "status", "detail"]
    }
    fn fields(&self) -> Vec<String> {
        vec![self.suite.clone(), self.status.clone(), self.detail.clone()]
    }
}

fn render<R: CsvRow>(format: Format, out: &Output<R>) -> String {
    match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(out).expect("serializable");
            text.push('\n');
            text
        }
        Format::Csv => {
            let mut text = R::headers().join(",");
            text.push('\n');
            for row in &out.rows {
                let quoted: Vec<String> = row.fields().iter().map(|f| csv_quote(f)).collect();
                text.push_str(&quoted.join(","));
                text.push('\n');
            }
            text
        }
    }
}

/// Quote a CSV field when it contains a delimiter, quote or newline.
fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn emit<R: CsvRow>(cli_out: &Option<PathBuf>, format: Format, out: &Output<R>) -> Result<(), String> {
    let text = render(format, out);
    match cli_out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| format!("writing {}: {e}", path.display()))
        }
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| format!("writing stdout: {e}"))
        }
    }
}

fn field(q: u64) -> Result<FieldSpec, String> {
    FieldSpec::of_order(q).map_err(|e| format!("--q {q}: {e}"))
}

fn cmd_count(
    q: u64,
    n: usize,
    verify_by_enumeration: bool,
) -> Result<(Output<CountRow>, i32), String> {
    let spec = field(q)?;
    let mut rows = Vec::new();
    rows.push(CountRow {
        k: "gl(n)".into(),
        count: gl_count(n, q).to_string(),
        mu: String::new(),
    });
    rows.push(CountRow {
        k: "gl(2n)".into(),
        count: gl_count(2 * n, q).to_string(),
        mu: String::new(),
    });
    let mut tallies: Option<Vec<u64>> = None;
    if verify_by_enumeration {
        let mut t = vec![0u64; n + 1];
        let stream = Grassmannian::new(&spec, 2 * n, n)
            .enumerate()
            .map_err(|e| format!("enumeration: {e}"))?;
        for l in stream {
            t[orbit_index(&l, n)] += 1;
        }
        tallies = Some(t);
    }
    for k in 0..=n {
        let count = orbit_count(n, k, q);
        if let Some(t) = &tallies {
            if t[k].to_string() != count.to_string() {
                return Err(format!(
                    "enumeration mismatch at k={k}: counted {} vs closed form {count}",
                    t[k]
                ));
            }
        }
        rows.push(CountRow {
            k: k.to_string(),
            count: count.to_string(),
            mu: qr_string(&mu_n(&count, n, q)),
        });
    }
    let total = grassmannian_count(2 * n, n, q);
    rows.push(CountRow {
        k: "total".into(),
        count: total.to_string(),
        mu: qr_string(&mu_n(&total, n, q)),
    });
    if verify_by_enumeration {
        rows.push(CountRow {
            k: "enumeration-check".into(),
            count: "passed".into(),
            mu: String::new(),
        });
    }
    Ok((
        Output {
            command: "count".into(),
            q: Some(q.to_string()),
            n: Some(n.to_string()),
            seed: None,
            rows,
        },
        0,
    ))
}

fn cmd_enumerate(q: u64, n: usize, k: Option<usize>) -> Result<(Output<EnumerateRow>, i32), String> {
    let spec = field(q)?;
    let k = k.unwrap_or(n);
    if k > 2 * n {
        return Err(format!("--k {k} exceeds the ambient dimension {}", 2 * n));
    }
    let stream = Grassmannian::new(&spec, 2 * n, k)
        .enumerate()
        .map_err(|e| format!("enumeration: {e}"))?;
    let rows = stream
        .enumerate()
        .map(|(i, l)| {
            let basis = (0..l.dim())
                .map(|r| {
                    l.basis()
                        .row_codes(r)
                        .iter()
                        .map(|c| c.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect::<Vec<_>>()
                .join(";");
            EnumerateRow {
                index: i.to_string(),
                basis,
            }
        })
        .collect();
    Ok((
        Output {
            command: "enumerate".into(),
            q: Some(q.to_string()),
            n: Some(n.to_string()),
            seed: None,
            rows,
        },
        0,
    ))
}

fn cmd_measure(q: u64, kmax: usize) -> Result<(Output<MeasureRow>, i32), String> {
    field(q)?;
    let mut rows = Vec::new();
    let mut partial = 0.0f64;
    for k in 0..=kmax {
        let w = orbit_weight(k, q);
        partial += rat_to_f64(&w);
        rows.push(MeasureRow {
            k: k.to_string(),
            weight: qr_string(&w),
            weight_approx: f(rat_to_f64(&w)),
            partial_sum_approx: f(partial),
        });
    }
    let limit = total_mass_float(q);
    rows.push(MeasureRow {
        k: "limit".into(),
        weight: String::new(),
        weight_approx: f(limit),
        partial_sum_approx: f(partial),
    });
    rows.push(MeasureRow {
        k: "gap".into(),
        weight: String::new(),
        weight_approx: f((limit - partial).abs()),
        partial_sum_approx: String::new(),
    });
    Ok((
        Output {
            command: "measure".into(),
            q: Some(q.to_string()),
            n: None,
            seed: None,
            rows,
        },
        0,
    ))
}

fn cmd_spectrum(
    q: u64,
    n: Option<usize>,
    infinite: bool,
    jmax: usize,
    kcap: usize,
) -> Result<(Output<SpectrumRow>, i32), String> {
    field(q)?;
    if infinite == n.is_some() {
        return Err("spectrum needs exactly one of --n or --infinite".into());
    }
    let mut rows = Vec::new();
    if let Some(n) = n {
        if n < 1 {
            return Err("--n must be at least 1".into());
        }
        let averaging = finite_averaging_matrix(n, q).ok();
        let avg_eigs = averaging.as_ref().map(|a| a.eigenvalues());
        for j in 0..=n.min(jmax) {
            let lambda = hahn_eigenvalue(j, n, q);
            let residuals = hahn_eigencheck(j, n, q).map_err(|e| format!("eigencheck: {e}"))?;
            let max_residual = residuals
                .iter()
                .map(|r| rat_to_f64(r).abs())
                .fold(0.0, f64::max);
            rows.push(SpectrumRow {
                j: j.to_string(),
                eigenvalue: qr_string(&lambda),
                eigenvalue_approx: f(rat_to_f64(&lambda)),
                max_residual: f(max_residual),
                averaging_eigenvalue_approx: avg_eigs
                    .as_ref()
                    .and_then(|e| e.get(j))
                    .map(|&x| f(x))
                    .unwrap_or_default(),
            });
        }
    } else {
        for j in 0..=jmax {
            let residuals = asc_eigencheck(j, q, kcap);
            let max_residual = residuals
                .iter()
                .map(|r| rat_to_f64(r).abs())
                .fold(0.0, f64::max);
            let eigen = QRat::new(1.into(), (q as i64).pow(j as u32).into());
            rows.push(SpectrumRow {
                j: j.to_string(),
                eigenvalue: qr_string(&eigen),
                eigenvalue_approx: f(rat_to_f64(&eigen)),
                max_residual: f(max_residual),
                averaging_eigenvalue_approx: String::new(),
            });
        }
    }
    Ok((
        Output {
            command: "spectrum".into(),
            q: Some(q.to_string()),
            n: n.map(|v| v.to_string()),
            seed: None,
            rows,
        },
        0,
    ))
}

fn cmd_sample(q: u64, n: usize, samples: u64, seed: u64) -> Result<(Output<SampleRow>, i32), String> {
    field(q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = mc_orbit_distribution(n, q, samples, &mut rng);
    let rows = (0..=n)
        .map(|k| SampleRow {
            k: k.to_string(),
            count: d.counts[k].to_string(),
            empirical: f(d.empirical(k)),
            exact: qr_string(&d.exact[k]),
            exact_approx: f(d.exact_f64(k)),
            standard_error: f(d.standard_error(k)),
        })
        .collect();
    Ok((
        Output {
            command: "sample".into(),
            q: Some(q.to_string()),
            n: Some(n.to_string()),
            seed: Some(seed.to_string()),
            rows,
        },
        0,
    ))
}

fn cmd_walk(q: u64, steps: usize, seed: u64, k0: usize) -> Result<(Output<WalkRow>, i32), String> {
    field(q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let traj = markov_walk(q, k0, steps, &mut rng);
    let occ = occupancy(&traj);
    let stationary = stationary_frequencies(q, occ.len() - 1);
    let rows = occ
        .iter()
        .enumerate()
        .map(|(k, &o)| WalkRow {
            k: k.to_string(),
            occupancy: f(o),
            stationary_approx: f(stationary[k]),
        })
        .collect();
    Ok((
        Output {
            command: "walk".into(),
            q: Some(q.to_string()),
            n: None,
            seed: Some(seed.to_string()),
            rows,
        },
        0,
    ))
}

fn cmd_verify(suite: &str, q: Option<u64>) -> Result<(Output<VerifyRow>, i32), String> {
    let names: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&suite) {
        vec![suite]
    } else {
        return Err(format!(
            "unknown suite '{suite}'; available: all, {}",
            SUITES.join(", ")
        ));
    };
    let mut rows = Vec::new();
    let mut failed = false;
    for name in names {
        let start = Instant::now();
        let report = run_suite(name, q).expect("known suite");
        let elapsed = start.elapsed();
        let status = if report.passed { "PASS" } else { "FAIL" };
        eprintln!("{status} {name} ({:.2}s)", elapsed.as_secs_f64());
        for line in &report.details {
            eprintln!("    {line}");
        }
        failed |= !report.passed;
        rows.push(VerifyRow {
            suite: name.to_string(),
            status: status.to_string(),
            detail: report.details.join(" | "),
        });
    }
    Ok((
        Output {
            command: "verify".into(),
            q: q.map(|v| v.to_string()),
            n: None,
            seed: None,
            rows,
        },
        i32::from(failed),
    ))
}

fn run(cli: Cli) -> Result<i32, String> {
    let format = cli.format;
    let out = cli.out.clone();
    match cli.command {
        Command::Count {
            q,
            n,
            verify_by_enumeration,
        } => {
            let (table, code) = cmd_count(q, n, verify_by_enumeration)?;
            emit(&out, format, &table)?;
            Ok(code)
        }
        Command::Enumerate { q, n, k } => {
            let (table, code) = cmd_enumerate(q, n, k)?;
            emit(&out, format, &table)?;
            Ok(code)
        }
        Command::Measure { q, kmax } => {
            let (table, code) = cmd_measure(q, kmax)?;
            emit(&out, format, &table)?;
            Ok(code)
        }
        Command::Spectrum {
            q,
            n,
            infinite,
            jmax,
            kcap,
        } => {
            let (table, code) = cmd_spectrum(q, n, infinite, jmax, kcap)?;
            emit(&out, format, &table)?;
            Ok(code)
        }
        Command::Sample {
            q,
            n,
            samples,
            seed,
        } => {
            let (table, code) = cmd_sample(q, n, samples, seed)?;
            emit(&out, format, &table)?;
            Ok(code)
        }
        Command::Walk { q, steps, seed, k } => {
            let (table, code) = cmd_walk(q, steps, seed, k)?;
            emit(&out, format, &table)?;
            Ok(code)
        }
        Command::Verify { suite, q } => {
            let (table, code) = cmd_verify(&suite, q)?;
            emit(&out, format, &table)?;
            Ok(code)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(message) => {
            eprintln!("error: {message}");
            std::process::exit(2);
        }
    }
}
