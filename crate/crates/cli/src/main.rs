mod plot;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sfcsim::harness::{compare, read_measured, read_trace, summarize, sweep, threads_from_env, write_sweep, write_trace};
use sfcsim::scenario::{builtin_case, load_scenario, units::parse_real_quantity, units::Dimension, BUILTIN_CASES};
use sfcsim::{Scenario, TraceSet};
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "sfcsim", version, about = "Phasor-domain simulator of a static frequency converter in a 16.7 Hz railway grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario file (TOML).
    #[arg(long, value_name = "FILE")]
    scenario: Option<PathBuf>,
    /// Builtin validation case, 1 to 4.
    #[arg(long, value_name = "N")]
    case: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its trace and plots.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory.
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
        /// Enable conditional integration on the voltage and angle regulators.
        #[arg(long)]
        anti_windup: bool,
    },
    /// Compare a simulated trace with a measured recording.
    Compare {
        /// Simulated trace CSV.
        #[arg(long, value_name = "FILE")]
        trace: PathBuf,
        /// Measured CSV with columns time_s, u_pu, i_pu.
        #[arg(long, value_name = "FILE")]
        measured: PathBuf,
        /// Largest time shift searched when aligning, e.g. "100 ms".
        #[arg(long, value_name = "TIME", default_value = "100 ms")]
        max_offset: String,
        /// Write the key-value report here instead of standard output.
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// List the builtin validation cases.
    Cases,
    /// Run a scenario once per parameter value, in parallel.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Parameter as section.key, e.g. load.p or fault.duration.
        #[arg(long, value_name = "PATH")]
        param: String,
        /// Comma-separated values with units, e.g. "1 MW,2 MW,3 MW".
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        values: Vec<String>,
        /// CSV output file; standard output when omitted.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e
                .chain()
                .any(|c| c.downcast_ref::<sfcsim::Error>().is_some_and(|s| s.is_numerical()));
            ExitCode::from(if numerical { EXIT_NUMERICAL } else { EXIT_INPUT })
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            source,
            out,
            anti_windup,
        } => run(&source, &out, anti_windup),
        Command::Compare {
            trace,
            measured,
            max_offset,
            report,
        } => compare_cmd(&trace, &measured, &max_offset, report.as_deref()),
        Command::Cases => cases(),
        Command::Sweep {
            source,
            param,
            values,
            out,
        } => sweep_cmd(&source, &param, &values, out.as_deref()),
    }
}

/// Scenario and the directory relative paths inside it refer to.
fn load(source: &Source) -> Result<(Scenario, PathBuf)> {
    match (&source.scenario, source.case) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let sc = load_scenario(&text).with_context(|| format!("loading {}", path.display()))?;
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((sc, dir))
        }
        (None, Some(n)) => Ok((builtin_case(n)?, PathBuf::new())),
        (None, None) => bail!("either --scenario or --case is required"),
    }
}

fn write_plots(trace: &TraceSet, sc: &Scenario, dir: &Path) -> Result<()> {
    let name = &sc.name;
    plot::write_svg(
        trace,
        &plot::Series {
            title: &format!("{name}: PoC16 voltage"),
            y_label: "|U| (p.u.)",
            values: &trace.u_mag,
            limit: None,
        },
        &dir.join(format!("{name}_voltage.svg")),
    )?;
    plot::write_svg(
        trace,
        &plot::Series {
            title: &format!("{name}: inverter current"),
            y_label: "|I| (p.u.)",
            values: &trace.i_mag,
            limit: Some((sc.gains.i_max, "current limit")),
        },
        &dir.join(format!("{name}_current.svg")),
    )
}

fn run(source: &Source, out: &Path, anti_windup: bool) -> Result<()> {
    let (mut sc, base_dir) = load(source)?;
    if anti_windup {
        sc.gains.anti_windup_voltage = true;
        sc.gains.anti_windup_angle = true;
    }
    let result = sc.run_with_stats(&sc.config).with_context(|| format!("simulating {}", sc.name))?;
    let trace = &result.trace;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let csv_path = out.join(format!("{}_trace.csv", sc.name));
    let file = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_trace(trace, BufWriter::new(file))?;
    write_plots(trace, &sc, out)?;

    let s = summarize(trace)?;
    println!("{}: {} samples, {} steps ({} rejected)", sc.name, trace.len(), result.stats.accepted_steps, result.stats.rejected_steps);
    println!(
        "  pre-fault |U| {:.4}  min |U| {:.4}  max |I| {:.4}  max |E| {:.4}  post-fault overshoot {:.4}  limiting {:.3} s",
        s.pre_fault_u, s.min_u, s.max_i, s.max_e, s.overshoot, s.limiting_time_s
    );
    println!("  wrote {}", csv_path.display());

    if let Some(m) = &sc.measured {
        let path = base_dir.join(m);
        let file = fs::File::open(&path).with_context(|| format!("reading {}", path.display()))?;
        let measured = read_measured(file).with_context(|| format!("reading {}", path.display()))?;
        let report = compare(trace, &measured, 0.1)?;
        print!("{}", report.to_table());
        let rp = out.join(format!("{}_report.toml", sc.name));
        fs::write(&rp, report.to_key_value()).with_context(|| format!("writing {}", rp.display()))?;
    }
    Ok(())
}

fn compare_cmd(trace: &Path, measured: &Path, max_offset: &str, report: Option<&Path>) -> Result<()> {
    let max_offset = parse_real_quantity(max_offset, Dimension::Time).map_err(anyhow::Error::msg).context("--max-offset")?;
    let open = |p: &Path| fs::File::open(p).with_context(|| format!("reading {}", p.display()));
    let sim = read_trace(open(trace)?).with_context(|| format!("reading {}", trace.display()))?;
    let meas = read_measured(open(measured)?).with_context(|| format!("reading {}", measured.display()))?;
    let r = compare(&sim, &meas, max_offset)?;
    print!("{}", r.to_table());
    match report {
        Some(p) => fs::write(p, r.to_key_value()).with_context(|| format!("writing {}", p.display()))?,
        None => print!("\n{}", r.to_key_value()),
    }
    Ok(())
}

fn cases() -> Result<()> {
    println!(
        "{:<6}{:>10}{:>18}{:>10}{:>10}{:>10}{:>8}",
        "case", "duration", "fault impedance", "position", "load", "onset", "t_end"
    );
    for n in 1..=BUILTIN_CASES {
        let sc = builtin_case(n)?;
        let f = &sc.faults[0];
        let z = f.impedance.to_pu(&sc.base);
        println!(
            "{:<6}{:>7.0} ms{:>14} p.u.{:>7.0} km{:>7.2} MW{:>8.1} s{:>6.2} s",
            n,
            f.duration_s * 1e3,
            format!("{}{:+}j", z.re, z.im),
            f.pos_km,
            sc.load.p_mw,
            f.start_s,
            sc.config.t_end
        );
    }
    let g = builtin_case(1)?.gains;
    println!(
        "shared: i_max {} p.u., e_max {} p.u., voltage/angle PI kp {} ki {}, limiter PI kp {} ki {}, anti-windup {}",
        g.i_max,
        g.e_max,
        g.kp_v,
        g.ki_v,
        g.kp_cl,
        g.ki_cl,
        if g.anti_windup_voltage { "on" } else { "off" }
    );
    Ok(())
}

fn sweep_cmd(source: &Source, param: &str, values: &[String], out: Option<&Path>) -> Result<()> {
    if values.is_empty() {
        bail!("--values must list at least one value");
    }
    let (sc, _) = load(source)?;
    let values: Vec<String> = values.iter().map(|v| v.trim().to_string()).collect();
    let points = sweep(&sc, param, &values, threads_from_env())?;
    match out {
        Some(p) => {
            let file = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            write_sweep(&points, BufWriter::new(file))?;
        }
        None => write_sweep(&points, std::io::stdout().lock())?,
    }
    let failed = points.iter().filter(|p| p.summary.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed; see the status column", points.len());
    }
    Ok(())
}
