//! Command-line front end. [`run`] parses arguments, dispatches and maps
//! outcomes to exit codes: 0 success, 2 tolerance breach, 3 sampler stall,
//! 64 usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::chaos::{spectrum, SpectralMethod, SpectrumOptions};
use crate::cumulants::{cumulant_via_graphs, exact_rule, univariate_cumulant, variance_direct, MAX_UNIVARIATE_ORDER};
use crate::error::Error;
use crate::graphs::MAX_M;
use crate::harness::{load_config, run_experiment};
use crate::kernel::{kernel_residuals, KernelSpec};
use crate::sampler::{sample_replicate, SamplerOptions, DEFAULT_MAX_POINTS, DEFAULT_MAX_TRIALS};
use crate::sphere::{product_quadrature, SpherePoint};
use crate::stats::TestFunction;
use crate::theory::chaos_profile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_BREACH: i32 = 2;
pub const EXIT_STALL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Largest level the `sample` command accepts.
pub const MAX_SAMPLE_N: usize = 24;

#[derive(Debug, Parser)]
#[command(name = "spheredpp", version, about = "Spectral projection DPPs on spheres: sampling, cumulants, limit laws")]
pub struct Cli {
    /// Worker threads; defaults to the number of physical cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FKind {
    Cap,
    Pair,
    Triangle,
    Constant,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quadrature residuals of the kernel's reproducing identities.
    KernelCheck {
        d: usize,
        n: usize,
        resolution: usize,
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Draws configurations and writes one file per replicate.
    Sample {
        d: usize,
        n: usize,
        count: usize,
        seed: u64,
        #[arg(default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_TRIALS)]
        max_trials: u64,
    },
    /// Cumulant of `L_n f` from the graph expansion, with cross-checks.
    CumulantOracle {
        d: usize,
        n: usize,
        fkind: FKind,
        /// Radius for indicators, value for the constant function.
        delta: f64,
        m: usize,
        k: usize,
        #[arg(long, default_value_t = 24)]
        resolution: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Eigenvalues of the chaos operator for a zonal pair margin.
    ChaosSpectrum {
        d: usize,
        fkind: FKind,
        delta: f64,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Also write every level as TSV.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Runs the experiments of a configuration file.
    Experiment {
        config: PathBuf,
        /// Only this run.
        #[arg(long)]
        run: Option<String>,
        /// Base directory for relative output paths.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn test_function(d: usize, kind: FKind, delta: f64, k: usize) -> Result<TestFunction, Error> {
    let expect = |want: usize| {
        if k == want {
            Ok(())
        } else {
            Err(Error::Domain(format!("{kind:?} has k = {want}, got k = {k}")))
        }
    };
    match kind {
        FKind::Cap => {
            expect(1)?;
            TestFunction::cap_indicator(SpherePoint::north_pole(d), delta)
        }
        FKind::Pair => {
            expect(2)?;
            TestFunction::pair_indicator(d, delta)
        }
        FKind::Triangle => {
            expect(3)?;
            TestFunction::triangle_indicator(d, delta)
        }
        FKind::Constant => TestFunction::constant(d, k, delta),
    }
}

fn default_arity(kind: FKind) -> usize {
    match kind {
        FKind::Cap => 1,
        FKind::Pair | FKind::Constant => 2,
        FKind::Triangle => 3,
    }
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::SamplerStall { .. } => EXIT_STALL,
        Error::Truncation { .. } => EXIT_BREACH,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let jobs = cli.jobs.unwrap_or_else(num_cpus::get_physical).max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    pool.install(|| match dispatch(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_for(&e)
        }
    })
}

fn dispatch(cmd: &Command, out: &mut (dyn Write + Send)) -> Result<i32, Error> {
    match cmd {
        Command::KernelCheck { d, n, resolution, pairs, seed, tol } => kernel_check(*d, *n, *resolution, *pairs, *seed, *tol, out),
        Command::Sample { d, n, count, seed, out: dir, max_trials } => sample(*d, *n, *count, *seed, dir, *max_trials, out),
        Command::CumulantOracle { d, n, fkind, delta, m, k, resolution, tol } => {
            cumulant_oracle(*d, *n, *fkind, *delta, *m, *k, *resolution, *tol, out)
        }
        Command::ChaosSpectrum { d, fkind, delta, top, epsilon, tol, tsv } => {
            chaos_spectrum(*d, *fkind, *delta, *top, *epsilon, *tol, tsv.as_ref(), out)
        }
        Command::Experiment { config, run, out_dir } => experiment(config, run.as_deref(), out_dir, out),
    }
}

fn kernel_check(d: usize, n: usize, res: usize, pairs: usize, seed: u64, tol: f64, out: &mut (dyn Write + Send)) -> Result<i32, Error> {
    let spec = KernelSpec::new(d, n)?;
    let r = kernel_residuals(&spec, res, pairs, seed)?;
    writeln!(out, "d = {d}  n = {n}  k_n = {}  s_d = {:.15}", spec.k_n, spec.s_d)?;
    writeln!(out, "hilbert-schmidt residual  {:.3e}", r.hilbert_schmidt)?;
    writeln!(out, "reproducing residual      {:.3e}", r.reproducing)?;
    writeln!(out, "orthogonality residual    {:.3e}", r.orthogonality)?;
    Ok(match r.breach(tol) {
        Some((name, v)) => {
            writeln!(out, "FAIL: {name} residual {v:.3e} exceeds {tol:.1e}")?;
            EXIT_BREACH
        }
        None => {
            writeln!(out, "ok (tolerance {tol:.1e})")?;
            EXIT_OK
        }
    })
}

fn sample(d: usize, n: usize, count: usize, seed: u64, dir: &PathBuf, max_trials: u64, out: &mut (dyn Write + Send)) -> Result<i32, Error> {
    if n > MAX_SAMPLE_N {
        return Err(Error::Envelope(format!("n = {n} is above the sampling limit {MAX_SAMPLE_N}")));
    }
    let spec = KernelSpec::new(d, n)?;
    let opts = SamplerOptions { max_points: DEFAULT_MAX_POINTS, max_trials };
    fs::create_dir_all(dir)?;
    let mut rejections = Vec::with_capacity(count);
    for r in 0..count {
        let c = sample_replicate(&spec, seed, r as u64, &opts)?;
        let path = dir.join(format!("sample_d{d}_n{n}_seed{seed}_{r:05}.txt"));
        c.write_to(fs::File::create(&path)?)?;
        rejections.push(c.rejection_count);
    }
    let total: u64 = rejections.iter().sum();
    let max = rejections.iter().copied().max().unwrap_or(0);
    writeln!(out, "wrote {count} configurations of {} points to {}", spec.k_n, dir.display())?;
    writeln!(
        out,
        "rejections: total {total}, mean {:.2} per configuration, max {max}",
        total as f64 / count.max(1) as f64
    )?;
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cumulant_oracle(
    d: usize,
    n: usize,
    kind: FKind,
    delta: f64,
    m: usize,
    k: usize,
    res: usize,
    tol: f64,
    out: &mut (dyn Write + Send),
) -> Result<i32, Error> {
    if m == 0 || m > MAX_M {
        return Err(Error::Domain(format!("m must lie in 1..={MAX_M}")));
    }
    let f = test_function(d, kind, delta, k)?;
    let spec = KernelSpec::new(d, n)?;
    let quad = exact_rule(&f, &spec, &product_quadrature(d, res)?)?;
    let q = cumulant_via_graphs(&f, m, &spec, &quad)?;
    writeln!(out, "Q_{m} = {q:.15e}  (graphs; d = {d}, n = {n}, k_n = {}, k = {k})", spec.k_n)?;
    let mut worst = 0.0f64;
    if k == 1 && m <= MAX_UNIVARIATE_ORDER {
        let u = univariate_cumulant(&f, m, &spec, &quad)?;
        let rel = (q - u).abs() / u.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        writeln!(out, "Q_{m} = {u:.15e}  (trace formula)  relative gap {rel:.2e}")?;
    }
    if m == 2 {
        let v = variance_direct(&f, &spec, &quad)?;
        let rel = (q - v).abs() / v.abs().max(1e-300);
        if v != 0.0 || q.abs() > 1e-12 {
            worst = worst.max(rel);
        }
        writeln!(out, "Q_2 = {v:.15e}  (variance double integral)  relative gap {rel:.2e}")?;
    }
    Ok(if worst > tol {
        writeln!(out, "FAIL: cross-check gap {worst:.2e} exceeds {tol:.1e}")?;
        EXIT_BREACH
    } else {
        EXIT_OK
    })
}

#[allow(clippy::too_many_arguments)]
fn chaos_spectrum(
    d: usize,
    kind: FKind,
    delta: f64,
    top: usize,
    epsilon: f64,
    tol: f64,
    tsv: Option<&PathBuf>,
    out: &mut (dyn Write + Send),
) -> Result<i32, Error> {
    let f = test_function(d, kind, delta, default_arity(kind))?;
    let quad = product_quadrature(d, 16)?;
    let g = chaos_profile(&f, &quad)?;
    let opts = SpectrumOptions { epsilon, ..Default::default() };
    let fh = spectrum(&g, SpectralMethod::FunkHecke, &opts)?;
    let ny = if d == 2 { Some(spectrum(&g, SpectralMethod::Nystrom, &opts)?) } else { None };
    writeln!(out, "sum z^2 = {:.12e}  (explicit levels plus tail {:.3e})", fh.hs_norm_sq, fh.truncation.tail_sq)?;
    writeln!(out, "{:>4}  {:>22}  {:>22}  {:>10}", "j", "funk-hecke", "nystrom", "rel-gap")?;
    let a = fh.top(top);
    let b = ny.as_ref().map(|s| s.top(top));
    let mut worst = 0.0f64;
    for (j, &v) in a.iter().enumerate() {
        match b.as_ref().and_then(|b| b.get(j)) {
            Some(&w) => {
                let rel = (v - w).abs() / v.abs();
                worst = worst.max(rel);
                writeln!(out, "{:>4}  {v:>22.15e}  {w:>22.15e}  {rel:>10.2e}", j + 1)?;
            }
            None => writeln!(out, "{:>4}  {v:>22.15e}  {:>22}  {:>10}", j + 1, "n/a", "n/a")?,
        }
    }
    if let Some(path) = tsv {
        fh.write_tsv(fs::File::create(path)?)?;
    }
    Ok(if worst > tol {
        writeln!(out, "FAIL: methods disagree by {worst:.2e} (tolerance {tol:.1e})")?;
        EXIT_BREACH
    } else {
        EXIT_OK
    })
}

fn experiment(config: &Path, only: Option<&str>, out_dir: &Path, out: &mut (dyn Write + Send)) -> Result<i32, Error> {
    let runs = load_config(config)?;
    if let Some(name) = only {
        if !runs.contains_key(name) {
            return Err(Error::Config(format!("no run named {name}")));
        }
    }
    let mut code = EXIT_OK;
    for (name, cfg) in runs.iter().filter(|(n, _)| only.is_none_or(|o| o == n.as_str())) {
        let report = run_experiment(name, cfg)?;
        let path = out_dir.join(cfg.output.clone().unwrap_or_else(|| PathBuf::from(format!("{name}.csv"))));
        let sidecar = report.write_files(&path)?;
        writeln!(out, "[{name}] {} rows -> {} (+ {})", report.rows.len(), path.display(), sidecar.display())?;
        for r in &report.rows {
            writeln!(
                out,
                "  n = {:>3}  mean {:.6e}  q2 {:.6e}  pred_var {:.6e}  ks {:.4} ({})",
                r.n, r.mean, r.q2, r.pred_var, r.ks, r.ks_target
            )?;
        }
        if let Some(fit) = report.variance_fit {
            writeln!(out, "  variance exponent {:.3} (expected {:.3})", fit.exponent, fit.expected)?;
        }
        if let Some(msg) = &report.failure {
            writeln!(out, "  stopped early: {msg}")?;
            code = code.max(if report.stalled { EXIT_STALL } else { EXIT_BREACH });
        }
        if let Some(t) = report.ks_threshold {
            if let Some(r) = report.rows.iter().find(|r| r.ks > t) {
                writeln!(out, "  FAIL: ks {:.4} at n = {} exceeds {t}", r.ks, r.n)?;
                code = code.max(EXIT_BREACH);
            }
        }
    }
    Ok(code)
}
