//! `icp`: invariant causal prediction with simultaneous true discovery bounds.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use icp_core::bounds::TdBounds;
use icp_core::check::run_oracle_check;
use icp_core::io::{load_csv, write_bounds_csv, write_mean_bounds_csv};
use icp_core::sim::{CoverageStudy, NoiseScale};
use icp_core::{build_pvalue_table, AggregatedPValues, DiscoveryReport, IcpError, PValueTable, SubsetMask, TestConfig};
use serde_json::{json, Map, Value};

type Result<T, E = IcpError> = std::result::Result<T, E>;

#[derive(Parser, Debug)]
#[command(name = "icp", version, about = "Invariant causal prediction with true discovery bounds")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// CSV file with predictors, a response column and an environment column
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Precomputed p-value table (JSON or binary) used instead of --input
    #[arg(long, global = true, conflicts_with = "input")]
    table: Option<PathBuf>,
    /// Name of the response column
    #[arg(long, global = true)]
    response: Option<String>,
    /// Name of the environment column
    #[arg(long, global = true)]
    env: Option<String>,
    #[arg(long, global = true, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Only test sets with at most K predictors; larger sets are treated as rejected
    #[arg(long, global = true, value_name = "K")]
    max_set_size: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SigmaAs {
    Variance,
    StdDev,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Aggregated p-values p*_i and p~*_i for every predictor
    Pvalues {
        /// Also save the full p-value table (JSON, or binary if the name ends in .bin)
        #[arg(long)]
        save_table: Option<PathBuf>,
    },
    /// ICP discovery set and its thresholded equivalents
    Discover,
    /// Simultaneous lower bounds on true discoveries
    Bounds {
        /// Sets of 1-based predictor indices separated by `;`, e.g. "1,3;2,5,7"
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        sets: Option<String>,
        /// Every subset of predictors
        #[arg(long)]
        all: bool,
        /// With --all, also write the plot-ready CSV here
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
    /// Inclusion-minimal sets known to contain a causal predictor
    DefiningSets {
        #[arg(long, default_value_t = 1000)]
        max_report: usize,
        /// Largest defining set size to search
        #[arg(long)]
        max_size: Option<usize>,
    },
    /// Coverage study on random linear Gaussian SEMs
    Simulate {
        #[arg(long, default_value_t = 500)]
        reps: usize,
        /// Directory for report.json and the averaged-bounds CSV
        #[arg(long)]
        out: Option<PathBuf>,
        /// How the sampled sigma entries scale the noise
        #[arg(long, value_enum, default_value_t = SigmaAs::Variance)]
        sigma_as: SigmaAs,
        /// Keep per-replication records in the report
        #[arg(long)]
        records: bool,
    },
    /// Check the bound shortcut against direct search and closed testing on random tables
    OracleCheck {
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Comma-separated levels checked on every table
        #[arg(long, default_value = "0.01,0.05,0.2")]
        alphas: String,
    },
}

struct Loaded {
    table: PValueTable,
    names: Vec<String>,
}

enum Failure {
    Core(IcpError),
    Coded { code: &'static str, message: String },
}

macro_rules! into_failure {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Core(e.into())
            }
        }
    )*};
}

into_failure!(IcpError, io::Error, csv::Error, serde_json::Error);

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("USAGE", &e.kind().to_string(), Some(&e.to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            report_error(e.code(), &e.to_string(), None);
            ExitCode::FAILURE
        }
        Err(Failure::Coded { code, message }) => {
            report_error(code, &message, None);
            ExitCode::FAILURE
        }
    }
}

fn report_error(code: &str, message: &str, detail: Option<&str>) {
    let mut err = json!({ "code": code, "message": message });
    if let Some(d) = detail {
        err["detail"] = Value::from(d.trim_end());
    }
    eprintln!("{}", json!({ "error": err }));
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let g = &cli.global;
    if !(g.alpha > 0.0 && g.alpha < 1.0) {
        return Err(IcpError::Config(format!("alpha must lie in (0, 1), got {}", g.alpha)).into());
    }
    let mut out = io::stdout().lock();
    match &cli.command {
        Command::Pvalues { save_table } => {
            let loaded = load(g)?;
            if let Some(path) = save_table {
                save(&loaded.table, path, g.alpha)?;
            }
            pvalues(&loaded, g, &mut out)?;
        }
        Command::Discover => {
            let loaded = load(g)?;
            let report = DiscoveryReport::new(&loaded.table, g.alpha)?.to_named(&loaded.names);
            match g.format {
                Format::Json => emit_json(&mut out, &serde_json::to_value(report)?)?,
                Format::Csv => {
                    let mut w = csv_writer(&mut out, &["set", "predictors"])?;
                    for (label, set) in
                        [("s_icp", &report.s_icp), ("s_tilde", &report.s_tilde), ("s_hat", &report.s_hat)]
                    {
                        w.write_record([label, &set.join(" ")])?;
                    }
                    w.flush()?;
                }
            }
        }
        Command::Bounds { sets, all, csv_out } => {
            let loaded = load(g)?;
            let bounds = TdBounds::new(&loaded.table, g.alpha)?;
            let results = if *all {
                bounds.all_results()
            } else {
                let masks = parse_sets(sets.as_deref().unwrap_or(""), loaded.table.m())?;
                bounds.bounds_for(&masks)?
            };
            match g.format {
                Format::Json => {
                    let named: Vec<_> = results.iter().map(|b| b.to_named(&loaded.names)).collect();
                    emit_json(&mut out, &serde_json::to_value(named)?)?;
                    if let (true, Some(path)) = (*all, csv_out) {
                        write_bounds_csv(&results, &loaded.names, fs::File::create(path)?)?;
                    }
                }
                Format::Csv => write_bounds_csv(&results, &loaded.names, &mut out)?,
            }
        }
        Command::DefiningSets { max_report, max_size } => {
            let loaded = load(g)?;
            let found = TdBounds::new(&loaded.table, g.alpha)?.defining_sets(*max_report, *max_size)?;
            let named: Vec<Vec<&str>> = found.sets.iter().map(|s| s.names(&loaded.names)).collect();
            match g.format {
                Format::Json => {
                    emit_json(&mut out, &json!({ "alpha": g.alpha, "sets": named, "truncated": found.truncated }))?
                }
                Format::Csv => {
                    let mut w = csv_writer(&mut out, &["set_size", "set"])?;
                    for s in &named {
                        w.write_record([s.len().to_string(), s.join(" ")])?;
                    }
                    w.flush()?;
                }
            }
            if found.truncated {
                eprintln!("warning: stopped after {max_report} defining sets; raise --max-report to see more");
            }
        }
        Command::Simulate { reps, out: dir, sigma_as, records } => {
            json_only(g, "simulate")?;
            let mut study = CoverageStudy::new(*reps, g.alpha, g.seed);
            study.params.noise_scale = match sigma_as {
                SigmaAs::Variance => NoiseScale::Variance,
                SigmaAs::StdDev => NoiseScale::StdDev,
            };
            study.keep_records = *records;
            let report = study.run()?;
            let value = serde_json::to_value(&report)?;
            if let Some(dir) = dir {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("report.json"), serde_json::to_string_pretty(&value)?)?;
                let csv = fs::File::create(dir.join("mean_bounds.csv"))?;
                write_mean_bounds_csv(&report.mean_td_lower, &report.mean_fd_upper, &report.predictor_names, csv)?;
            }
            emit_json(&mut out, &value)?;
        }
        Command::OracleCheck { m, trials, alphas } => {
            json_only(g, "oracle-check")?;
            let levels = parse_alphas(alphas)?;
            let report = run_oracle_check(*m, *trials, &levels, g.seed)?;
            let mismatches = report.total_mismatches();
            let mut value = serde_json::to_value(&report)?;
            value["alphas"] = json!(levels);
            value["total_mismatches"] = json!(mismatches);
            value["passed"] = json!(mismatches == 0);
            emit_json(&mut out, &value)?;
            if mismatches > 0 {
                return Err(Failure::Coded {
                    code: "ORACLE_MISMATCH",
                    message: format!("{mismatches} disagreements between equivalent formulations"),
                });
            }
        }
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("ICP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| IcpError::Config(format!("ICP_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| IcpError::Config(format!("cannot size thread pool: {e}")))
}

fn load(g: &Global) -> Result<Loaded> {
    if let Some(path) = &g.table {
        let table = read_table(path)?;
        let names = (1..=table.m()).map(|i| format!("X{i}")).collect();
        return Ok(Loaded { table, names });
    }
    let Some(path) = &g.input else {
        return Err(IcpError::Config("provide --input (CSV) or --table (p-value table)".into()));
    };
    let (Some(response), Some(env)) = (&g.response, &g.env) else {
        return Err(IcpError::Config("--input requires --response and --env".into()));
    };
    let data = load_csv(path, response, env)?.data;
    if let Some(k) = g.max_set_size.filter(|&k| k < data.m()) {
        eprintln!(
            "warning: --max-set-size {k} < {} predictors; larger sets are treated as rejected (p = 0), \
             so coverage is not guaranteed if the causal set has more than {k} members",
            data.m()
        );
    }
    let cfg = TestConfig::new(g.alpha)?;
    let table = build_pvalue_table(&data, &cfg, g.max_set_size)?;
    Ok(Loaded { table, names: data.names().to_vec() })
}

fn read_table(path: &Path) -> Result<PValueTable> {
    let bytes = fs::read(path)?;
    if bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{') {
        let value: Value = serde_json::from_slice(&bytes)?;
        Ok(PValueTable::from_json(&value)?.0)
    } else {
        PValueTable::read_binary(bytes.as_slice())
    }
}

fn save(table: &PValueTable, path: &Path, alpha: f64) -> Result<()> {
    if path.extension().is_some_and(|e| e == "bin") {
        table.write_binary(io::BufWriter::new(fs::File::create(path)?))
    } else {
        fs::write(path, serde_json::to_string_pretty(&table.to_json(Some(alpha)))?)?;
        Ok(())
    }
}

fn pvalues(loaded: &Loaded, g: &Global, out: &mut impl Write) -> Result<()> {
    let agg = AggregatedPValues::new(&loaded.table);
    let p_tilde = agg.p_tilde_all(g.alpha)?;
    match g.format {
        Format::Json => {
            let named = |vals: &[f64]| -> Map<String, Value> {
                loaded.names.iter().cloned().zip(vals.iter().map(|&v| Value::from(v))).collect()
            };
            emit_json(
                out,
                &json!({
                    "alpha": g.alpha,
                    "p_star": named(agg.p_star_all()),
                    "p_tilde": named(&p_tilde),
                    "all_rejected": agg.all_rejected(g.alpha),
                }),
            )
        }
        Format::Csv => {
            let mut w = csv_writer(out, &["predictor", "p_star", "p_tilde"])?;
            for ((name, p), pt) in loaded.names.iter().zip(agg.p_star_all()).zip(&p_tilde) {
                w.write_record([name.clone(), format!("{p:?}"), format!("{pt:?}")])?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn parse_sets(spec: &str, m: usize) -> Result<Vec<SubsetMask>> {
    spec.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|set| {
            let idx = set
                .split(',')
                .map(|i| {
                    i.trim()
                        .parse::<usize>()
                        .map_err(|_| IcpError::Config(format!("bad predictor index `{}` in --sets", i.trim())))
                })
                .collect::<Result<Vec<_>>>()?;
            SubsetMask::from_one_based(&idx, m)
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| if v.is_empty() { Err(IcpError::Config("--sets lists no sets".into())) } else { Ok(v) })
}

fn parse_alphas(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .ok()
                .filter(|a| *a > 0.0 && *a < 1.0)
                .ok_or_else(|| IcpError::Config(format!("bad level `{}` in --alphas", a.trim())))
        })
        .collect()
}

fn json_only(g: &Global, cmd: &str) -> Result<()> {
    if g.format == Format::Csv {
        return Err(IcpError::Config(format!("`{cmd}` only produces JSON")));
    }
    Ok(())
}

fn csv_writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

fn emit_json(out: &mut impl Write, value: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}
