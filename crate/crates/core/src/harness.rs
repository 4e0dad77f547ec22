//! Monte Carlo experiments: sweeps over `n`, empirical cumulants with
//! jackknife errors, standardization, KS distances and report files.
//!
//! A configuration file holds one or more runs, each in a `[run.NAME]` table:
//!
//! ```toml
//! [run.chaos_pair]
//! d = 2
//! n = [8, 12, 16]
//! function = "pair"
//! delta = 0.8
//! replicates = 5000
//! seed = 7
//! mode = "chaos"
//! output = "chaos_pair.csv"
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::chaos::{sample_limit_law_par, spectrum, ChaosSpectrum, SpectralMethod, SpectrumOptions};
use crate::cumulants::{cumulant_via_graphs, exact_rule};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::partitions::cumulants_from_moments;
use crate::sampler::{map_replicates, replicate_stream, SamplerOptions, DEFAULT_MAX_POINTS, DEFAULT_MAX_TRIALS};
use crate::special::loglog_fit;
use crate::sphere::{product_quadrature, SpherePoint};
use crate::stats::{evaluate_config, Kind, TestFunction};
use crate::theory::{
    chaos_profile, is_degenerate, predicted_mean, predicted_variance_chaos, predicted_variance_clt,
    standardization_constants,
};

pub const CSV_HEADER: &str = "n,k_n,replicates,mean,mean_se,q2,q2_se,q3,q3_se,q4,q4_se,pred_mean,pred_var,ks,ks_target,seed";

/// Stream offset for lattice jitter draws, keeping them apart from sampling.
const JITTER_SALT: u64 = 0x6a69_7474_6572;
/// Stream offset for limit-law draws.
const LIMIT_SALT: u64 = 0x6c69_6d69_7473;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Clt,
    Chaos,
    MeanOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionKind {
    Cap,
    Pair,
    Triangle,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Center {
    #[default]
    Empirical,
    Predicted,
}

fn default_resolution() -> usize {
    32
}
fn default_true() -> bool {
    true
}
fn default_limit_draws() -> usize {
    1_000_000
}
fn default_value() -> f64 {
    1.0
}
fn default_max_points() -> u64 {
    DEFAULT_MAX_POINTS
}
fn default_max_trials() -> u64 {
    DEFAULT_MAX_TRIALS
}

/// One `[run.NAME]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    #[serde(rename = "n")]
    pub n_list: Vec<usize>,
    pub function: FunctionKind,
    /// Radius for the indicator kinds.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Arity of the constant function.
    #[serde(default)]
    pub k: Option<usize>,
    /// Value of the constant function.
    #[serde(default = "default_value")]
    pub value: f64,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    pub mode: Mode,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub center: Center,
    /// Spread lattice-valued statistics uniformly over one lattice cell before KS.
    #[serde(default = "default_true")]
    pub jitter: bool,
    #[serde(default = "default_limit_draws")]
    pub limit_draws: usize,
    #[serde(default)]
    pub ks_threshold: Option<f64>,
    /// Also evaluate the graph-sum `Q_2` at each `n`.
    #[serde(default)]
    pub oracle: bool,
    #[serde(default = "default_max_points")]
    pub max_points: u64,
    #[serde(default = "default_max_trials")]
    pub max_trials: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    run: BTreeMap<String, ExperimentConfig>,
}

/// Parses a configuration file's text into its named runs.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, ExperimentConfig>> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if file.run.is_empty() {
        return Err(Error::Config("no [run.NAME] tables".into()));
    }
    for (name, cfg) in &file.run {
        cfg.validate().map_err(|e| Error::Config(format!("run {name}: {e}")))?;
    }
    Ok(file.run)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, ExperimentConfig>> {
    parse_config(&fs::read_to_string(path)?)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::UnsupportedDimension(self.d));
        }
        if self.replicates < 100 {
            return Err(Error::Config(format!("replicates = {} is below the minimum of 100", self.replicates)));
        }
        if self.n_list.is_empty() {
            return Err(Error::Config("n list is empty".into()));
        }
        for &n in &self.n_list {
            let spec = KernelSpec::new(self.d, n)?;
            if spec.k_n > self.max_points {
                return Err(Error::Envelope(format!(
                    "n = {n} gives k_n = {} above the sampling cap {}",
                    spec.k_n, self.max_points
                )));
            }
        }
        if self.function != FunctionKind::Constant && self.delta.is_none() {
            return Err(Error::Config("indicator functions need delta".into()));
        }
        if self.limit_draws < 10 {
            return Err(Error::Config("limit_draws must be at least 10".into()));
        }
        self.test_function().map(|_| ())
    }

    pub fn test_function(&self) -> Result<TestFunction> {
        let delta = self.delta.unwrap_or(0.0);
        match self.function {
            FunctionKind::Cap => TestFunction::cap_indicator(SpherePoint::north_pole(self.d), delta),
            FunctionKind::Pair => TestFunction::pair_indicator(self.d, delta),
            FunctionKind::Triangle => TestFunction::triangle_indicator(self.d, delta),
            FunctionKind::Constant => TestFunction::constant(self.d, self.k.unwrap_or(1), self.value),
        }
    }

    /// Spacing of the lattice the statistic lives on, if any.
    fn lattice_spacing(&self, f: &TestFunction) -> Option<f64> {
        match f.kind {
            Kind::CapIndicator { .. } => Some(1.0),
            Kind::PairIndicator { .. } => Some(2.0),
            Kind::TriangleIndicator { .. } => Some(6.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CumulantEstimate {
    pub order: usize,
    pub value: f64,
    /// Leave-one-out jackknife standard error.
    pub se: f64,
    pub replicates: usize,
    /// Set when the data are constant.
    pub degenerate: bool,
}

/// Plug-in cumulants `Q_1..Q_max_order` from sample moments, with jackknife
/// errors computed from leave-one-out power sums.
pub fn empirical_cumulants(samples: &[f64], max_order: usize) -> Result<Vec<CumulantEstimate>> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 samples, got {n}")));
    }
    if max_order == 0 || max_order > 4 {
        return Err(Error::Domain(format!("cumulant order must lie in 1..=4, got {max_order}")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let constant = samples.iter().all(|&x| x == samples[0]);
    if constant {
        return Ok((1..=max_order)
            .map(|order| CumulantEstimate {
                order,
                value: if order == 1 { samples[0] } else { 0.0 },
                se: 0.0,
                replicates: n,
                degenerate: true,
            })
            .collect());
    }
    let centered: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let mut sums = vec![0.0; max_order];
    for &y in &centered {
        let mut p = 1.0;
        for s in sums.iter_mut() {
            p *= y;
            *s += p;
        }
    }
    let estimate = |s: &[f64], count: f64| -> Result<Vec<f64>> {
        let m: Vec<f64> = s.iter().map(|v| v / count).collect();
        cumulants_from_moments(&m)
    };
    let full = estimate(&sums, n as f64)?;
    let loo: Vec<Vec<f64>> = centered
        .par_iter()
        .map(|&y| {
            let mut s = sums.clone();
            let mut p = 1.0;
            for v in s.iter_mut() {
                p *= y;
                *v -= p;
            }
            estimate(&s, (n - 1) as f64)
        })
        .collect::<Result<_>>()?;
    Ok((0..max_order)
        .map(|j| {
            let avg = loo.iter().map(|c| c[j]).sum::<f64>() / n as f64;
            let var = loo.iter().map(|c| (c[j] - avg).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
            CumulantEstimate {
                order: j + 1,
                value: if j == 0 { full[0] + mean } else { full[j] },
                se: var.sqrt(),
                replicates: n,
                degenerate: false,
            }
        })
        .collect())
}

/// `sup_x |F_n(x) - cdf(x)|`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    d
}

/// Two-sample KS distance between empirical laws.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub k_n: u64,
    pub replicates: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub q2: f64,
    pub q2_se: f64,
    pub q3: f64,
    pub q3_se: f64,
    pub q4: f64,
    pub q4_se: f64,
    pub pred_mean: f64,
    pub pred_var: f64,
    pub ks: f64,
    pub ks_target: String,
    pub seed: u64,
    pub center: f64,
    pub scale: f64,
    pub oracle_q2: Option<f64>,
}

impl ReportRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.k_n,
            self.replicates,
            self.mean,
            self.mean_se,
            self.q2,
            self.q2_se,
            self.q3,
            self.q3_se,
            self.q4,
            self.q4_se,
            self.pred_mean,
            self.pred_var,
            self.ks,
            self.ks_target,
            self.seed
        )
    }

    /// `|Q_3| / Q_2^{3/2}`.
    pub fn skewness(&self) -> f64 {
        self.q3.abs() / self.q2.powf(1.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    /// `(d-1)` in the Gaussian regime, `(d-1)(2k-2)` in the chaos regime.
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub variance_fit: Option<ScalingFit>,
    /// `sum z_j^2` of the chaos spectrum, when one was computed.
    pub hs_norm_sq: Option<f64>,
    pub ks_threshold: Option<f64>,
    /// Message of the error that cut the sweep short.
    pub failure: Option<String>,
    pub stalled: bool,
    pub version: String,
    pub wall_seconds: f64,
}

struct Regime {
    spectrum: Option<ChaosSpectrum>,
    limit: Option<Vec<f64>>,
}

fn prepare_regime(cfg: &ExperimentConfig, f: &TestFunction) -> Result<Regime> {
    let quad = product_quadrature(cfg.d, cfg.resolution)?;
    let degenerate = is_degenerate(f, &quad)?;
    match cfg.mode {
        Mode::Clt if degenerate => {
            Err(Error::Degenerate("F is constant; this statistic belongs to the chaos mode".into()))
        }
        Mode::Chaos if !degenerate => {
            Err(Error::NonDegenerate("F is not constant; this statistic belongs to the clt mode".into()))
        }
        Mode::Chaos => {
            let g = chaos_profile(f, &quad)?;
            let spec = spectrum(&g, SpectralMethod::FunkHecke, &SpectrumOptions::default())?;
            let limit = sample_limit_law_par(&spec, cfg.seed.wrapping_add(LIMIT_SALT), cfg.limit_draws);
            Ok(Regime { spectrum: Some(spec), limit: Some(limit) })
        }
        _ => Ok(Regime { spectrum: None, limit: None }),
    }
}

fn jittered(values: &[f64], spacing: f64, seed: u64) -> Vec<f64> {
    values
        .par_iter()
        .enumerate()
        .map(|(r, &v)| {
            let mut rng = replicate_stream(seed.wrapping_add(JITTER_SALT), r as u64);
            v + spacing * (rng.random::<f64>() - 0.5)
        })
        .collect()
}

fn predicted_variance(
    cfg: &ExperimentConfig,
    f: &TestFunction,
    spec: &KernelSpec,
    regime: &Regime,
) -> Result<f64> {
    let quad = exact_rule(f, spec, &product_quadrature(cfg.d, cfg.resolution)?)?;
    match (&regime.spectrum, cfg.mode) {
        (Some(s), _) => predicted_variance_chaos(f, spec, s, &quad),
        (None, Mode::MeanOnly) => match predicted_variance_clt(f, spec, &quad) {
            Ok(v) => Ok(v),
            Err(Error::Degenerate(_)) if f.k >= 2 => {
                let g = chaos_profile(f, &quad)?;
                let s = spectrum(&g, SpectralMethod::FunkHecke, &SpectrumOptions::default())?;
                predicted_variance_chaos(f, spec, &s, &quad)
            }
            Err(Error::Degenerate(_)) => Ok(0.0),
            Err(e) => Err(e),
        },
        _ => predicted_variance_clt(f, spec, &quad),
    }
}

fn run_one(cfg: &ExperimentConfig, f: &TestFunction, n: usize, regime: &Regime) -> Result<ReportRow> {
    let spec = KernelSpec::new(cfg.d, n)?;
    let opts = SamplerOptions { max_points: cfg.max_points, max_trials: cfg.max_trials };
    let values: Vec<f64> =
        map_replicates(&spec, cfg.seed, cfg.replicates, &opts, |c| evaluate_config(c, f))?.into_iter().collect::<Result<_>>()?;
    let q = empirical_cumulants(&values, 4)?;
    let quad = exact_rule(f, &spec, &product_quadrature(cfg.d, cfg.resolution)?)?;
    let pred_mean = predicted_mean(f, &spec, &quad)?;
    let pred_var = predicted_variance(cfg, f, &spec, regime)?;
    let spread = match (cfg.jitter, cfg.lattice_spacing(f)) {
        (true, Some(h)) => jittered(&values, h, cfg.seed ^ n as u64),
        _ => values.clone(),
    };
    let (center, scale, ks, ks_target) = match cfg.mode {
        Mode::Clt => {
            let m = spread.iter().sum::<f64>() / spread.len() as f64;
            let sd = (spread.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (spread.len() - 1) as f64).sqrt();
            let z: Vec<f64> = spread.iter().map(|v| (v - m) / sd).collect();
            (m, sd, ks_distance(&z, standard_normal_cdf), "normal")
        }
        Mode::Chaos => {
            let c = match cfg.center {
                Center::Empirical => q[0].value,
                Center::Predicted => pred_mean,
            };
            let st = standardization_constants(&spec, f.k, c)?;
            let z: Vec<f64> = spread.iter().map(|&v| st.apply(v)).collect();
            let limit = regime.limit.as_deref().unwrap_or(&[]);
            (st.center, st.scale, ks_two_sample(&z, limit), "chaos-limit")
        }
        Mode::MeanOnly => (q[0].value, 1.0, f64::NAN, "none"),
    };
    let oracle_q2 = if cfg.oracle { Some(cumulant_via_graphs(f, 2, &spec, &quad)?) } else { None };
    Ok(ReportRow {
        n,
        k_n: spec.k_n,
        replicates: cfg.replicates,
        mean: q[0].value,
        mean_se: q[0].se,
        q2: q[1].value,
        q2_se: q[1].se,
        q3: q[2].value,
        q3_se: q[2].se,
        q4: q[3].value,
        q4_se: q[3].se,
        pred_mean,
        pred_var,
        ks,
        ks_target: ks_target.into(),
        seed: cfg.seed,
        center,
        scale,
        oracle_q2,
    })
}

fn variance_fit(cfg: &ExperimentConfig, f: &TestFunction, rows: &[ReportRow]) -> Option<ScalingFit> {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.q2 > 0.0).map(|r| (r.n as f64, r.q2)).collect();
    if pts.len() < 2 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (intercept, exponent) = loglog_fit(&xs, &ys);
    let dm1 = (cfg.d - 1) as f64;
    let expected = match cfg.mode {
        Mode::Chaos => dm1 * (2.0 * f.k as f64 - 2.0),
        _ => dm1,
    };
    Some(ScalingFit { exponent, intercept, expected })
}

/// Runs every `n` of the sweep. Configuration problems are returned as
/// errors; a failure during the sweep ends it and is recorded in the report
/// next to the rows already finished.
pub fn run_experiment(name: &str, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let f = cfg.test_function()?;
    let regime = prepare_regime(cfg, &f)?;
    let mut rows = Vec::new();
    let mut failure = None;
    let mut stalled = false;
    for &n in &cfg.n_list {
        match run_one(cfg, &f, n, &regime) {
            Ok(row) => rows.push(row),
            Err(e) => {
                stalled = matches!(e, Error::SamplerStall { .. });
                failure = Some(format!("n = {n}: {e}"));
                break;
            }
        }
    }
    Ok(ExperimentReport {
        name: name.to_string(),
        config: cfg.clone(),
        variance_fit: variance_fit(cfg, &f, &rows),
        rows,
        hs_norm_sq: regime.spectrum.as_ref().map(|s| s.hs_norm_sq),
        ks_threshold: cfg.ks_threshold,
        failure,
        stalled,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

impl ExperimentReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(out, "{}", r.csv_line())?;
        }
        Ok(())
    }

    /// Writes the CSV to `path` and the metadata to `path` with a `.json` extension.
    pub fn write_files(&self, path: &Path) -> Result<PathBuf> {
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        self.write_csv(fs::File::create(path)?)?;
        let sidecar = path.with_extension("json");
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(&sidecar, json)?;
        Ok(sidecar)
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{ChiSquared, Distribution, StandardNormal};

    #[test]
    fn constant_data_gives_zero_cumulants() {
        let q = empirical_cumulants(&[3.0; 50], 4).unwrap();
        assert_eq!(q[0].value, 3.0);
        for e in &q[1..] {
            assert_eq!(e.value, 0.0);
            assert_eq!(e.se, 0.0);
            assert!(e.degenerate);
        }
    }

    #[test]
    fn gaussian_and_chi_square_cumulants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g: Vec<f64> = (0..200_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let q = empirical_cumulants(&g, 4).unwrap();
        assert!(q[2].value.abs() < 4.0 * q[2].se);
        assert!(q[3].value.abs() < 4.0 * q[3].se);
        let chi = ChiSquared::new(1.0).unwrap();
        let c: Vec<f64> = (0..200_000).map(|_| chi.sample(&mut rng)).collect();
        let q = empirical_cumulants(&c, 3).unwrap();
        assert!((q[1].value - 2.0).abs() < 4.0 * q[1].se, "{:?}", q[1]);
        assert!((q[2].value - 8.0).abs() < 4.0 * q[2].se, "{:?}", q[2]);
    }

    #[test]
    fn jackknife_matches_textbook_mean_error() {
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let q = empirical_cumulants(&xs, 2).unwrap();
        let m = xs.iter().sum::<f64>() / 40.0;
        let s2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 39.0;
        assert!((q[0].se - (s2 / 40.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ks_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(ks_distance(&g, standard_normal_cdf) < 0.02);
        assert!(ks_distance(&[0.0; 20], standard_normal_cdf) >= 0.5);
        let wide: Vec<f64> = g.iter().map(|x| 2.0 * x).collect();
        assert!(ks_distance(&wide, standard_normal_cdf) > 0.1);
        assert!(ks_two_sample(&g, &g) == 0.0);
        assert!(ks_two_sample(&g, &wide) > 0.1);
    }

    #[test]
    fn parses_config_and_rejects_unknown_keys() {
        let text = "[run.a]\nd = 2\nn = [4, 5]\nfunction = \"cap\"\ndelta = 1.0\nreplicates = 100\nseed = 1\nmode = \"clt\"\n";
        let runs = parse_config(text).unwrap();
        assert_eq!(runs["a"].n_list, vec![4, 5]);
        assert!(parse_config(&format!("{text}bogus = 1\n")).is_err());
        assert!(parse_config(&text.replace("replicates = 100", "replicates = 10")).is_err());
        assert!(parse_config(&text.replace("[4, 5]", "[40]")).is_err());
    }

    #[test]
    fn constant_statistic_is_deterministic() {
        let text = "[run.c]\nd = 2\nn = [5]\nfunction = \"constant\"\nk = 2\nreplicates = 100\nseed = 3\nmode = \"mean-only\"\n";
        let cfg = &parse_config(text).unwrap()["c"];
        let rep = run_experiment("c", cfg).unwrap();
        assert!(rep.failure.is_none(), "{:?}", rep.failure);
        let r = &rep.rows[0];
        assert_eq!(r.mean, 110.0);
        assert_eq!(r.q2, 0.0);
        assert!((r.pred_mean - 110.0).abs() < 1e-9);
        let mut csv = Vec::new();
        rep.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with(CSV_HEADER));
    }

    #[test]
    fn modes_refuse_the_wrong_regime() {
        let base = "[run.x]\nd = 2\nn = [4]\nreplicates = 100\nseed = 1\n";
        let clt_pair = format!("{base}function = \"pair\"\ndelta = 0.8\nmode = \"clt\"\n");
        let cfg = &parse_config(&clt_pair).unwrap()["x"];
        assert!(matches!(run_experiment("x", cfg), Err(Error::Degenerate(_))));
        let chaos_cap = format!("{base}function = \"cap\"\ndelta = 0.8\nmode = \"chaos\"\n");
        let cfg = &parse_config(&chaos_cap).unwrap()["x"];
        assert!(matches!(run_experiment("x", cfg), Err(Error::NonDegenerate(_))));
    }

    #[test]
    fn reports_are_reproducible() {
        let text = "[run.r]\nd = 2\nn = [3]\nfunction = \"cap\"\ndelta = 1.0\nreplicates = 200\nseed = 9\nmode = \"clt\"\n";
        let cfg = &parse_config(text).unwrap()["r"];
        let a = run_experiment("r", cfg).unwrap();
        let b = run_experiment("r", cfg).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn stall_is_salvaged() {
        let text = "[run.s]\nd = 2\nn = [2, 6]\nfunction = \"cap\"\ndelta = 1.0\nreplicates = 100\nseed = 2\nmode = \"clt\"\nmax_trials = 1\n";
        let cfg = &parse_config(text).unwrap()["s"];
        let rep = run_experiment("s", cfg).unwrap();
        assert!(rep.failure.is_some());
        assert!(rep.stalled);
    }
}
