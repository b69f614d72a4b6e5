use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use polsim::config::{dump_config, load_config, ExperimentConfig};
use polsim::sweep::{run_sweep, selftest, write_sweep_csv, SweepMode, SweepSpec, DEFAULT_MC_SAMPLES};
use polsim::tomography::{default_settings, read_counts_table, simulate_counts, write_counts_table, TomographyRun};
use polsim::{zwm, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_RANGE: u8 = 3;
const EXIT_SELFTEST: u8 = 4;

#[derive(Parser)]
#[command(name = "polsim", version, about = "Partial polarization from path distinguishability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degree of polarization over a (γ, |T|) grid, as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: SweepMode,
        /// Rotation angles in degrees, comma separated.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        gamma: Vec<f64>,
        /// Attenuator transmissions |T|, comma separated.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        t: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        replicates: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Photons per polarizer setting in montecarlo mode.
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        samples: u64,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Echo the validated configuration to stderr.
        #[arg(long)]
        print_config: bool,
    },
    /// Cross-check the analytic, Fock-space and single-photon models.
    Selftest,
    /// Reconstruct the coherence matrix from a counts table.
    Tomo {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Detector parameters (dark_cps, time_s); defaults if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Simulate a counts table for the configured device.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<SweepMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parameter { .. } => EXIT_RANGE,
            _ => EXIT_CONFIG,
        };
        Failure::new(code, e.to_string())
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    load_config(path).map_err(|e| Failure::new(e.exit_code() as u8, e.to_string()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep {
            config,
            mode,
            gamma,
            t,
            replicates,
            seed,
            samples,
            out,
            print_config,
        } => {
            let cfg = load(&config)?;
            if print_config {
                eprint!("{}", dump_config(&cfg));
            }
            let spec = SweepSpec {
                gamma_deg: gamma,
                t_abs: t,
                mode,
                replicates,
                seed,
                mc_samples: samples,
            };
            spec.validate()?;
            let rows = run_sweep(&cfg, &spec).map_err(|e| Failure::new(EXIT_CONFIG, e.to_string()))?;
            write_sweep_csv(output(out.as_deref())?, &rows)?;
        }
        Command::Selftest => {
            let checks = selftest().map_err(|e| Failure::new(EXIT_SELFTEST, e.to_string()))?;
            let mut ok = true;
            for c in &checks {
                let status = if c.passed() { "PASS" } else { "FAIL" };
                println!("{status} {} (max error {:e}, tolerance {:e})", c.name, c.max_error, c.tolerance);
                ok &= c.passed();
            }
            if !ok {
                return Err(Failure::new(EXIT_SELFTEST, "self-test failed"));
            }
        }
        Command::Tomo { counts, out, config } => {
            let detector = match config {
                Some(p) => load(&p)?.detector,
                None => ExperimentConfig::default().detector,
            };
            let file = File::open(&counts).map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", counts.display())))?;
            let (settings, raw) = read_counts_table(file)?;
            let run = TomographyRun::from_raw(settings, raw, &detector)?;
            write_reconstruction(output(Some(&out))?, &run)?;
        }
        Command::Simulate { config, seed, out } => {
            let cfg = load(&config)?;
            let g = zwm::numeric_coherence(&cfg.zwm)?;
            let g = g.scaled(1.0 / g.trace());
            let settings = default_settings();
            let counts = simulate_counts(&g, &settings, &cfg.detector, seed)?;
            write_counts_table(output(out.as_deref())?, &settings, &counts)?;
        }
    }
    Ok(())
}

fn write_reconstruction(mut w: impl Write, run: &TomographyRun) -> Result<(), Failure> {
    let g = &run.reconstruction.matrix;
    let io = |e: io::Error| Failure::new(EXIT_CONFIG, e.to_string());
    let mut rows = vec![
        ("gxx", g.gxx.re.to_string()),
        ("gyy", g.gyy.re.to_string()),
        ("gxy_re", g.gxy.re.to_string()),
        ("gxy_im", g.gxy.im.to_string()),
        ("log_likelihood", run.reconstruction.log_likelihood.to_string()),
    ];
    match run.p_estimate {
        Some(p) => {
            rows.push(("p_value", p.to_string()));
            rows.push(("p_stderr", run.p_stderr()?.to_string()));
            let s = g.stokes()?;
            rows.extend([
                ("s0", s.s0.to_string()),
                ("s1", s.s1.to_string()),
                ("s2", s.s2.to_string()),
                ("s3", s.s3.to_string()),
            ]);
        }
        None => rows.push(("p_value", "NaN".into())),
    }
    writeln!(w, "quantity,value").map_err(io)?;
    for (k, v) in rows {
        writeln!(w, "{k},{v}").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("polsim: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
