use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use scl_core::hamiltonian::HamiltonianSpec;
use scl_core::propagator::{spacing_scale, Window};
use scl_core::state::FourierState;
use scl_core::wigner::{density_modes, difference_set, mode_box, weyl_pair};
use scl_lab::fit::FitKind;
use scl_lab::report::sweep_fit;
use scl_lab::spec::{Ladder, SymbolSpec};
use scl_lab::{default_spec, emit_report, run_scenario, Format, LabError, ScenarioName, ScenarioSpec, SweepReport};

#[derive(Parser)]
#[command(name = "scl", version, about = "Semiclassical Schrödinger lab on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitArg {
    Loglog,
    Limit,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its report.
    Scenario {
        name: ScenarioName,
        /// Scenario spec replacing the bundled defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        jmin: Option<u32>,
        #[arg(long)]
        jmax: Option<u32>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Writes both formats when omitted.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Run a scenario and fit one observable over the ladder.
    Sweep {
        name: ScenarioName,
        #[arg(long)]
        observable: String,
        #[arg(long, value_enum, default_value = "loglog")]
        fit: FitArg,
        /// Abscissa column.
        #[arg(long, default_value = "h")]
        x: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        jmin: Option<u32>,
        #[arg(long)]
        jmax: Option<u32>,
    },
    /// Spacing scale of a Hamiltonian over a momentum window.
    Spacing {
        /// Hamiltonian spec JSON.
        #[arg(long)]
        hamiltonian: PathBuf,
        /// `2^-J` or a decimal.
        #[arg(long)]
        h: String,
        /// Box bounds `lo1,hi1,lo2,hi2,...`.
        #[arg(long, conflicts_with = "ball")]
        r#box: Option<String>,
        /// Ball `c1,...,cd,radius`.
        #[arg(long)]
        ball: Option<String>,
    },
    /// Weyl pairing of a state dump with a symbol spec.
    Pair {
        /// State as JSON lines `{"k":[..],"re":..,"im":..}`.
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        h: String,
        /// Symbol spec JSON `{"terms":[{"m":[..],"re":..,"im":..,"gradient":[..]}]}`.
        #[arg(long)]
        symbol: PathBuf,
    },
    /// Density Fourier coefficients of a state dump, as CSV on stdout.
    Density {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        h: String,
        /// Modes in the box of this radius; the full difference set when omitted.
        #[arg(long)]
        radius: Option<i64>,
    },
    /// List the bundled scenarios.
    List,
}

enum Failure {
    Assertions,
    Error(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Error(e.to_string())
    }
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("SCL_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertions) => ExitCode::from(2),
        Err(Failure::Error(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn parse_h(s: &str) -> Result<f64, Failure> {
    let h = match s.strip_prefix("2^-") {
        Some(j) => 2f64.powi(-j.parse::<i32>().map_err(|e| Failure::Error(format!("bad exponent in '{s}': {e}")))?),
        None => s.parse::<f64>().map_err(|e| Failure::Error(format!("bad h '{s}': {e}")))?,
    };
    if !(h > 0.0) {
        return Err(Failure::Error(format!("h must be positive, got {s}")));
    }
    Ok(h)
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| Failure::Error(format!("bad number '{x}': {e}")))).collect()
}

fn load_spec(name: ScenarioName, config: Option<&Path>, jmin: Option<u32>, jmax: Option<u32>) -> Result<ScenarioSpec, Failure> {
    let mut spec = match config {
        Some(p) => ScenarioSpec::load(p)?,
        None => default_spec(name),
    };
    if spec.name != name {
        return Err(Failure::Error(format!("config describes {}, not {name}", spec.name)));
    }
    spec.ladder = Ladder { jmin: jmin.unwrap_or(spec.ladder.jmin), jmax: jmax.unwrap_or(spec.ladder.jmax) };
    Ok(spec)
}

fn print_checks(report: &SweepReport) {
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
}

fn write_all(report: &SweepReport, out: &Path, format: Option<FormatArg>) -> Result<(), Failure> {
    let formats: &[Format] = match format {
        Some(FormatArg::Csv) => &[Format::Csv],
        Some(FormatArg::Json) => &[Format::Json],
        None => &[Format::Csv, Format::Json],
    };
    for f in formats {
        for p in emit_report(report, out, *f)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn scenario_failure(e: LabError, out: &Path, format: Option<FormatArg>) -> Failure {
    if let Some(partial) = &e.partial {
        if let Err(Failure::Error(msg)) = write_all(partial, out, format) {
            eprintln!("could not flush partial rows: {msg}");
        }
    }
    Failure::Error(e.to_string())
}

fn read_state(path: &Path, h: f64) -> Result<FourierState, Failure> {
    Ok(FourierState::read_jsonl(h, BufReader::new(File::open(path)?))?)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Scenario { name, config, jmin, jmax, out, format } => {
            let spec = load_spec(name, config.as_deref(), jmin, jmax)?;
            let report = run_scenario(&spec).map_err(|e| scenario_failure(e, &out, format))?;
            write_all(&report, &out, format)?;
            print_checks(&report);
            if !report.passed() {
                return Err(Failure::Assertions);
            }
        }
        Command::Sweep { name, observable, fit, x, config, jmin, jmax } => {
            let spec = load_spec(name, config.as_deref(), jmin, jmax)?;
            let report = run_scenario(&spec)?;
            let kind = match fit {
                FitArg::Loglog => FitKind::LoglogSlope,
                FitArg::Limit => FitKind::LimitExtrapolation,
            };
            let f = sweep_fit(&report, &observable, &x, kind)?;
            println!("{}", serde_json::to_string_pretty(&f)?);
        }
        Command::Spacing { hamiltonian, h, r#box, ball } => {
            let model = serde_json::from_reader::<_, HamiltonianSpec>(BufReader::new(File::open(&hamiltonian)?))?.build()?;
            let h = parse_h(&h)?;
            let window = match (r#box, ball) {
                (Some(b), _) => {
                    let v = parse_list(&b)?;
                    if v.len() % 2 != 0 {
                        return Err(Failure::Error("--box takes lo,hi pairs".into()));
                    }
                    Window::Box { lo: v.iter().step_by(2).copied().collect(), hi: v.iter().skip(1).step_by(2).copied().collect() }
                }
                (None, Some(b)) => {
                    let mut v = parse_list(&b)?;
                    let radius = v.pop().ok_or_else(|| Failure::Error("--ball needs a center and a radius".into()))?;
                    Window::Ball { center: v, radius }
                }
                (None, None) => return Err(Failure::Error("give --box or --ball".into())),
            };
            let s = spacing_scale(&model, h, &window)?;
            println!("tau_h = {}", s.tau);
            match &s.min_gap {
                Some(g) => println!("min_gap = {}", scl_core::lattice::format_rational(g)),
                None => println!("min_gap = none"),
            }
            println!("points = {}", s.points);
            println!("distinct = {}", s.distinct);
        }
        Command::Pair { state, h, symbol } => {
            let u = read_state(&state, parse_h(&h)?)?;
            let spec: SymbolSpec = serde_json::from_reader(BufReader::new(File::open(&symbol)?))?;
            let a = spec.build(u.dim())?;
            let v = weyl_pair(&u, &a)?;
            println!("{} {}", scl_core::fmt::sci(v.re), scl_core::fmt::sci(v.im));
        }
        Command::Density { state, h, radius } => {
            let u = read_state(&state, parse_h(&h)?)?;
            let modes = match radius {
                Some(r) => mode_box(u.dim(), r),
                None => difference_set(&u),
            };
            let r = density_modes(&u, &modes)?;
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            r.write_csv(&mut lock)?;
            lock.flush()?;
        }
        Command::List => {
            for n in ScenarioName::ALL {
                let s = default_spec(n);
                println!("{n}  j = {}..{}", s.ladder.jmin, s.ladder.jmax);
            }
        }
    }
    Ok(())
}
