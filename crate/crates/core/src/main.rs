use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stimqkd::harness::{sweep, write_outputs, Preset, ScenarioConfig};
use stimqkd::mub::{build_mub_pair, synthesize_states, verify_mub, verify_states, diameter_spread};
use stimqkd::turbulence::{structure_function_estimate, theoretical_structure, ScreenGenerator};
use stimqkd::{analytic_diameter, idler_diameter_curve, optimize_probe_waist, q_max, secure_key_rate, Error, Grid, StimConfig};

#[derive(Parser)]
#[command(name = "stimqkd", version, about = "Spatial-mode QKD through turbulence: prepare-and-measure vs stimulated PDC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write results.csv and manifest.toml.
    Simulate {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare the sampled phase structure function with Kolmogorov theory.
    ValidateScreens {
        #[arg(long)]
        d_over_r0: f64,
        #[arg(long, default_value_t = 172)]
        terms: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 256)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Match probe and idler diameters at the end of the channel.
    OptimizeWaist {
        #[arg(long)]
        zt: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        lmax: u32,
        #[arg(long, default_value_t = 11)]
        points: usize,
    },
    /// Mutually unbiased bases.
    Mub {
        #[command(subcommand)]
        action: MubAction,
    },
    /// Secure key rate and its error threshold.
    Keyrate {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        qer: f64,
    },
}

#[derive(Subcommand)]
enum MubAction {
    /// Certify the basis pair for a dimension.
    Check {
        #[arg(long)]
        dim: usize,
        /// Also certify OAM fields sampled on a grid of this many points per side.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Print coefficient matrices as `re,im` pairs, one basis vector per line.
    Export {
        #[arg(long)]
        dim: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Io(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Simulate { config, preset, out: dir, threads } => {
            let cfg = match (config, preset) {
                (Some(path), _) => ScenarioConfig::load(&path)?,
                (None, Some(p)) => ScenarioConfig::preset(p),
                (None, None) => return Err(Error::Config("either --config or --preset is required".into())),
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            let result = pool.install(|| sweep(&cfg))?;
            write_outputs(&cfg, &result, &dir)?;
            writeln!(out, "{} points written to {}", result.rows.len(), dir.display())?;
            for f in &result.failures {
                writeln!(out, "failed: {} d={} D/r0={}: {}", f.scheme, f.d, f.d_over_r0, f.message)?;
            }
            Ok(match (result.rows.is_empty(), result.failures.is_empty()) {
                (_, true) => 0,
                (true, false) => 2,
                (false, false) => 3,
            })
        }
        Command::ValidateScreens { d_over_r0, terms, count, samples, seed } => {
            let aperture = 0.06;
            let grid = Grid::with_extent(samples, aperture)?;
            let generator = ScreenGenerator::new(grid, aperture, terms)?;
            let r0 = aperture / d_over_r0;
            let screens = (0..count)
                .map(|i| generator.sample(stimqkd::seed::derive(seed, &[i as u64]), r0))
                .collect::<Result<Vec<_>, _>>()?;
            let seps: Vec<f64> = (1..=9).map(|i| aperture * 0.05 * (i as f64 + 1.0)).collect();
            writeln!(out, "r_m,D_est,D_theory")?;
            for p in structure_function_estimate(&screens, &seps)? {
                writeln!(out, "{},{},{}", p.r, p.estimate, theoretical_structure(p.r, r0))?;
            }
            Ok(0)
        }
        Command::OptimizeWaist { zt, gamma, lambda, lmax, points } => {
            let w_b = optimize_probe_waist(zt, gamma, lambda, lmax)?;
            writeln!(out, "# w_B_m={w_b}")?;
            let cfg = StimConfig::degenerate(gamma, w_b / gamma, lambda)?;
            let zs: Vec<f64> = (0..points.max(2)).map(|i| zt * i as f64 / (points.max(2) - 1) as f64).collect();
            writeln!(out, "z_m,D_probe,D_idler")?;
            for s in idler_diameter_curve(&cfg, lmax, &zs)? {
                writeln!(out, "{},{},{}", s.z, s.probe, s.idler)?;
            }
            Ok(0)
        }
        Command::Mub { action: MubAction::Check { dim, samples } } => {
            let set = build_mub_pair(dim)?;
            let labels: Vec<&str> = set.bases.iter().map(|b| b.generator_label.as_str()).collect();
            writeln!(out, "d={dim} bases: {}", labels.join(", "))?;
            let report = verify_mub(&set, 1e-10);
            writeln!(out, "{report}")?;
            let mut ok = report.passed;
            if let Some(n) = samples {
                let w0 = 0.01;
                let lmax = set.oam_range.iter().map(|l| l.unsigned_abs()).max().unwrap_or(0) as i32;
                let grid = Grid::with_extent(n, 5.0 * analytic_diameter(w0, lmax, 0.0, 810e-9)?)?;
                let states = synthesize_states(&set, w0, 810e-9, grid)?;
                let fields = verify_states(&states, 1e-3)?;
                writeln!(out, "sampled fields ({n}x{n}):\n{fields}")?;
                writeln!(out, "diameter spread: {:.3e}", diameter_spread(&states)?)?;
                ok &= fields.passed;
            }
            Ok(if ok { 0 } else { 2 })
        }
        Command::Mub { action: MubAction::Export { dim } } => {
            let set = build_mub_pair(dim)?;
            for b in &set.bases {
                writeln!(out, "# basis {}", b.generator_label)?;
                for j in 0..dim {
                    let v: Vec<String> = b.vector(j).iter().map(|c| format!("{},{}", c.re, c.im)).collect();
                    writeln!(out, "{}", v.join(","))?;
                }
            }
            Ok(0)
        }
        Command::Keyrate { dim, qer } => {
            writeln!(out, "r={}", secure_key_rate(dim, qer)?)?;
            writeln!(out, "q_max={}", q_max(dim)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
