use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use spectra_core::asymptotics::DEFAULT_GRID;
use spectra_core::io::{atoms_csv, fmt17, parse_atoms_csv, sigma_csv, spectrum_csv};
use spectra_core::renorm::{verify_periodicity_tol, verify_quasiperiodicity_tol, RENORM_TOL};
use spectra_core::{
    bc_counting_shift, convergence_report, counting, discretize, evaluate_c, gammas, set_capacity,
    sigma_profile, spectrum, AtomicMeasure, BoundaryCondition, LadderSpec, SpectraError,
    StringSystem,
};

#[derive(Parser)]
#[command(
    name = "spectra",
    version,
    about = "Spectra of Krein strings on self-similar Cantor-type measures"
)]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a ladder file and print τ, ν and D.
    Validate { ladder: PathBuf },
    /// Sample the ladder function C on a uniform grid of [0, 1].
    EvalC {
        ladder: PathBuf,
        #[arg(long)]
        gen: usize,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Atoms of the generation-g midpoint discretization.
    Discretize {
        ladder: PathBuf,
        #[arg(long)]
        gen: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues λ_0 ..= λ_max-index.
    Spectrum {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        max_index: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Counting function N(λ), eigenvalues ≤ λ.
    Count {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
    },
    /// Renormalized counting profiles σ_k and s_k.
    Sigma {
        ladder: PathBuf,
        #[arg(long)]
        gen: usize,
        #[arg(long, value_parser = parse_k_range)]
        k: KRange,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a renormalization identity; exits 2 when it fails.
    Verify {
        theorem: TheoremArg,
        ladder: PathBuf,
        #[arg(long)]
        gen: usize,
        #[arg(long, alias = "max-index")]
        n_max: Option<usize>,
        #[arg(long, default_value_t = RENORM_TOL, allow_negative_numbers = true)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest counting-function shift between Neumann and the chosen conditions.
    CompareBc {
        #[command(flatten)]
        system: SystemArgs,
        /// Number of log-spaced λ samples.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence diagnostics of σ_k for k = 0..=k_max.
    Report {
        ladder: PathBuf,
        #[arg(long)]
        gen: usize,
        #[arg(long, value_parser = parse_k_range)]
        k: KRange,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SystemArgs {
    ladder: PathBuf,
    #[arg(long)]
    gen: usize,
    #[arg(long, value_enum, default_value_t = BcArg::Neumann)]
    bc: BcArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    gamma0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    gamma1: f64,
    /// Read atoms from a CSV written by `discretize` instead of building them.
    #[arg(long)]
    atoms: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BcArg {
    Neumann,
    Robin,
    AutoGamma1,
    AutoGamma2,
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoremArg {
    Periodicity,
    Quasi,
}

#[derive(Clone, Copy, Debug)]
struct KRange {
    lo: usize,
    hi: usize,
}

fn parse_k_range(s: &str) -> Result<KRange, String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad k '{t}': {e}"))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let k = parse(s)?;
            (k, k)
        }
    };
    if lo > hi {
        return Err(format!("empty k range {s}"));
    }
    Ok(KRange { lo, hi })
}

/// A verification that ran to completion and failed; its report is already out.
struct Failed;

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("verification failed")
    }
}

impl std::fmt::Debug for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(self, f)
    }
}

impl std::error::Error for Failed {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.downcast_ref::<Failed>().is_some() {
                return ExitCode::from(2);
            }
            eprintln!("error: {e:#}");
            match e.downcast_ref::<SpectraError>() {
                Some(se) if se.is_numerical() => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    if let Ok(cap) = std::env::var("SPECTRA_CAPACITY") {
        let cap: usize = cap
            .trim()
            .parse()
            .with_context(|| format!("SPECTRA_CAPACITY='{cap}'"))?;
        set_capacity(cap);
    }

    match cli.command {
        Command::Validate { ladder } => {
            let spec = load(&ladder)?;
            let tau = match spec.tau_exact() {
                Some(t) => t.to_string(),
                None => fmt17(spec.tau()),
            };
            println!("m={}", spec.m());
            println!("tau={tau}");
            println!("nu={:.6} ({})", spec.nu(), fmt17(spec.nu()));
            println!("D={:.6} ({})", spec.dim(), fmt17(spec.dim()));
            println!("mode={}", if spec.is_exact() { "exact" } else { "float" });
        }
        Command::EvalC {
            ladder,
            gen,
            grid,
            out,
        } => {
            let spec = load(&ladder)?;
            if grid == 0 {
                bail!("--grid must be positive");
            }
            let mut text = String::from("t,c\n");
            for i in 0..=grid {
                let t = i as f64 / grid as f64;
                let c = evaluate_c(&spec, t, gen)?;
                text.push_str(&format!("{},{}\n", fmt17(t), fmt17(c)));
            }
            emit(out.as_deref(), &text)?;
        }
        Command::Discretize { ladder, gen, out } => {
            let spec = load(&ladder)?;
            emit(out.as_deref(), &atoms_csv(&discretize(&spec, gen)?))?;
        }
        Command::Spectrum {
            system,
            max_index,
            out,
        } => {
            let sys = build_system(&system)?;
            let n_max = max_index.unwrap_or(sys.len() - 1);
            emit(out.as_deref(), &spectrum_csv(&spectrum(&sys, n_max)?))?;
        }
        Command::Count { system, lambda } => {
            let sys = build_system(&system)?;
            println!("{}", counting(&sys, lambda));
        }
        Command::Sigma {
            ladder,
            gen,
            k,
            grid,
            out,
        } => {
            let spec = load(&ladder)?;
            let profiles = (k.lo..=k.hi)
                .map(|k| sigma_profile(&spec, gen, k, grid))
                .collect::<Result<Vec<_>, _>>()?;
            emit(out.as_deref(), &sigma_csv(&profiles))?;
        }
        Command::Verify {
            theorem,
            ladder,
            gen,
            n_max,
            tol,
            out,
        } => {
            let spec = load(&ladder)?;
            let n_max = n_max.unwrap_or_else(|| spec.m().pow(gen as u32) - 1);
            let report = match theorem {
                TheoremArg::Periodicity => verify_periodicity_tol(&spec, gen, n_max, tol)?,
                TheoremArg::Quasi => verify_quasiperiodicity_tol(&spec, gen, n_max, tol)?,
            };
            emit(
                out.as_deref(),
                &(serde_json::to_string_pretty(&report)? + "\n"),
            )?;
            if !report.pass {
                return Err(Failed.into());
            }
        }
        Command::CompareBc { system, grid, out } => {
            if grid < 2 {
                bail!("--grid must be at least 2");
            }
            let other = build_system(&system)?;
            let neumann = StringSystem::new(other.atoms().clone(), BoundaryCondition::NEUMANN)?;
            let top = neumann.upper_bound().max(other.upper_bound()) * 1.5;
            let bottom = 1e-2f64.min(top / 10.0);
            let lambdas: Vec<f64> = (0..grid)
                .map(|i| (bottom.ln() + (top / bottom).ln() * i as f64 / (grid - 1) as f64).exp())
                .collect();
            let shift = bc_counting_shift(&neumann, &other, &lambdas)?;
            let bc = other.bc();
            let report = serde_json::json!({
                "gamma0": bc.gamma0,
                "gamma1": bc.gamma1,
                "samples": grid,
                "max_shift": shift,
                "pass": shift <= 2,
            });
            emit(
                out.as_deref(),
                &(serde_json::to_string_pretty(&report)? + "\n"),
            )?;
            if shift > 2 {
                return Err(Failed.into());
            }
        }
        Command::Report {
            ladder,
            gen,
            k,
            grid,
            out,
        } => {
            let spec = load(&ladder)?;
            let report = convergence_report(&spec, gen, k.hi, grid)?;
            emit(
                out.as_deref(),
                &(serde_json::to_string_pretty(&report)? + "\n"),
            )?;
        }
    }
    Ok(())
}

fn load(path: &Path) -> anyhow::Result<LadderSpec> {
    Ok(LadderSpec::from_path(path)?)
}

fn build_system(args: &SystemArgs) -> anyhow::Result<StringSystem> {
    let spec = load(&args.ladder)?;
    let atoms: AtomicMeasure = match &args.atoms {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_atoms_csv(&text, args.gen)?
        }
        None => discretize(&spec, args.gen)?,
    };
    let (g1, g2) = gammas(&spec);
    let bc = match args.bc {
        BcArg::Neumann => BoundaryCondition::NEUMANN,
        BcArg::Robin => BoundaryCondition::robin(args.gamma0, args.gamma1),
        BcArg::AutoGamma1 => BoundaryCondition::symmetric(g1),
        BcArg::AutoGamma2 => BoundaryCondition::symmetric(g2),
    };
    if !matches!(args.bc, BcArg::Robin) && (args.gamma0 != 0.0 || args.gamma1 != 0.0) {
        return Err(anyhow!("--gamma0/--gamma1 only apply with --bc robin"));
    }
    Ok(StringSystem::new(atoms, bc)?)
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    let Some(path) = path else {
        std::io::stdout().write_all(text.as_bytes())?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating file in {}", dir.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
