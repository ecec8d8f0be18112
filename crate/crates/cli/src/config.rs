//! Run configuration: defaults, `key = value` files and flag overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use clap::Args;
use serde::Serialize;

use toral::discretize::PairSampling;
use toral::entropy::{BreakRule, Partition};
use toral::geometry::{Interval, Rect};
use toral::{Error, Rational, ToralMatrix};

pub const SCHEMA: &str = "toral.experiment/1";

/// Options shared by every subcommand. Each can also be set in the file
/// given by `--config` under the same name; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// key = value configuration file
    #[arg(long)]
    pub config: Option<String>,
    /// Matrix entries t11 t12 t21 t22
    #[arg(long, num_args = 4, allow_negative_numbers = true, value_names = ["T11", "T12", "T21", "T22"])]
    pub matrix: Option<Vec<i64>>,
    /// Comma-separated lattice sizes N
    #[arg(long)]
    pub lattice_sizes: Option<String>,
    /// Largest time step n (or j for egorov)
    #[arg(long)]
    pub n_max: Option<u32>,
    /// Localization horizon n
    #[arg(long)]
    pub horizon: Option<u32>,
    /// Scaling exponent gamma > 1
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Separation d0 for localization checks
    #[arg(long)]
    pub d0: Option<f64>,
    /// "halves", "quadrants", or rectangles "x0,x1,y0,y1;..." with rational endpoints
    #[arg(long)]
    pub partition: Option<String>,
    /// Snap the partition onto each lattice (true/false)
    #[arg(long)]
    pub snap: Option<bool>,
    /// "map" or "identity"
    #[arg(long)]
    pub dynamics: Option<String>,
    /// Monte Carlo samples for the classical entropy
    #[arg(long)]
    pub samples: Option<usize>,
    /// Boundary samples for brute-force diameters
    #[arg(long)]
    pub boundary_samples: Option<usize>,
    /// Sampled pairs or orbits for localize
    #[arg(long)]
    pub trials: Option<usize>,
    /// "uniform" or "near:<radius>"
    #[arg(long)]
    pub sampling: Option<String>,
    /// Mesh points per lattice spacing for L2 norms
    #[arg(long)]
    pub grid_factor: Option<usize>,
    /// Quadrature points per cell side for discretization
    #[arg(long)]
    pub quadrature: Option<usize>,
    /// Observable "sin:k1,k2" = sin(2 pi (k1 x1 + k2 x2))
    #[arg(long)]
    pub observable: Option<String>,
    /// Breaking rule "auto", "per-step:<v>" or "absolute:<v>"
    #[arg(long)]
    pub threshold: Option<String>,
    /// Random seed (required by stochastic subcommands)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent
    #[arg(long)]
    pub output: Option<String>,
    /// Manifest file for entropy runs; defaults to <output>.json
    #[arg(long)]
    pub manifest: Option<String>,
}

/// The fully resolved configuration, echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub schema: &'static str,
    pub command: String,
    pub matrix: [i64; 4],
    pub lattice_sizes: Vec<u64>,
    pub n_max: u32,
    pub horizon: u32,
    pub gamma: f64,
    pub d0: f64,
    pub partition: String,
    pub snap: bool,
    pub dynamics: String,
    pub samples: usize,
    pub boundary_samples: usize,
    pub trials: usize,
    pub sampling: String,
    pub grid_factor: usize,
    pub quadrature: usize,
    pub observable: String,
    pub threshold: String,
    pub seed: Option<u64>,
    pub output: Option<String>,
    pub manifest: Option<String>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, Error> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, Error> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| invalid(format!("config line {}: expected key = value", no + 1)))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

struct Source {
    file: BTreeMap<String, String>,
}

impl Source {
    fn get<T: std::str::FromStr>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, Error> {
        Ok(self.get_opt(key, flag)?.unwrap_or(default))
    }

    fn get_opt<T: std::str::FromStr>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, Error> {
        let from_file = self.file.remove(key);
        match (flag, from_file) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(s)) => s.parse().map(Some).map_err(|_| invalid(format!("bad value for {key}: {s}"))),
            (None, None) => Ok(None),
        }
    }
}

impl ExperimentConfig {
    pub fn resolve(command: &str, flags: &Flags) -> Result<Self, Error> {
        let file = match &flags.config {
            Some(p) => read_config_file(Path::new(p))?,
            None => BTreeMap::new(),
        };
        let mut src = Source { file };
        let matrix_text = flags.matrix.as_ref().map(|m| m.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
        let matrix = parse_matrix(&src.get("matrix", matrix_text, "2 1 1 1".into())?)?;
        let sizes_text: String = src.get("lattice-sizes", flags.lattice_sizes.clone(), "256".into())?;
        let lattice_sizes = sizes_text
            .split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|_| invalid(format!("bad lattice size {s:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = Self {
            schema: SCHEMA,
            command: command.to_string(),
            matrix,
            lattice_sizes,
            n_max: src.get("n-max", flags.n_max, 10)?,
            horizon: src.get("horizon", flags.horizon, 4)?,
            gamma: src.get("gamma", flags.gamma, 2.0)?,
            d0: src.get("d0", flags.d0, 0.1)?,
            partition: src.get("partition", flags.partition.clone(), "quadrants".into())?,
            snap: src.get("snap", flags.snap, true)?,
            dynamics: src.get("dynamics", flags.dynamics.clone(), "map".into())?,
            samples: src.get("samples", flags.samples, 1_000_000)?,
            boundary_samples: src.get("boundary-samples", flags.boundary_samples, 100_000)?,
            trials: src.get("trials", flags.trials, 100_000)?,
            sampling: src.get("sampling", flags.sampling.clone(), "uniform".into())?,
            grid_factor: src.get("grid-factor", flags.grid_factor, 2)?,
            quadrature: src.get("quadrature", flags.quadrature, 4)?,
            observable: src.get("observable", flags.observable.clone(), "sin:1,0".into())?,
            threshold: src.get("threshold", flags.threshold.clone(), "auto".into())?,
            seed: src.get_opt("seed", flags.seed)?,
            output: src.get_opt("output", flags.output.clone())?,
            manifest: src.get_opt("manifest", flags.manifest.clone())?,
        };
        if let Some(k) = src.file.keys().next() {
            return Err(invalid(format!("unknown config key {k:?}")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Error> {
        self.toral_matrix()?;
        if self.lattice_sizes.is_empty() || self.lattice_sizes.iter().any(|&n| n < 2) {
            return Err(invalid("lattice sizes must be at least 2"));
        }
        if !(self.gamma > 1.0) {
            return Err(invalid(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if !(self.d0 > 0.0) {
            return Err(invalid(format!("d0 must be positive, got {}", self.d0)));
        }
        if self.grid_factor == 0 || self.quadrature == 0 {
            return Err(invalid("grid-factor and quadrature must be positive"));
        }
        if !matches!(self.dynamics.as_str(), "map" | "identity") {
            return Err(invalid(format!("unknown dynamics {:?}", self.dynamics)));
        }
        parse_partition(&self.partition)?;
        self.pair_sampling()?;
        self.fourier_mode()?;
        self.break_rule()?;
        Ok(())
    }

    pub fn toral_matrix(&self) -> Result<ToralMatrix, Error> {
        let [a, b, c, d] = self.matrix;
        ToralMatrix::new(a, b, c, d)
    }

    pub fn require_seed(&self) -> Result<u64, Error> {
        self.seed.ok_or_else(|| invalid(format!("{} needs --seed", self.command)))
    }

    pub fn partition(&self) -> Result<Partition, Error> {
        parse_partition(&self.partition)
    }

    pub fn pair_sampling(&self) -> Result<PairSampling, Error> {
        match self.sampling.split_once(':') {
            None if self.sampling == "uniform" => Ok(PairSampling::Uniform),
            Some(("near", r)) => match r.parse::<f64>() {
                Ok(radius) if radius > 0.0 => Ok(PairSampling::Near { radius }),
                _ => Err(invalid(format!("bad radius in {:?}", self.sampling))),
            },
            _ => Err(invalid(format!("unknown sampling {:?}", self.sampling))),
        }
    }

    pub fn fourier_mode(&self) -> Result<(i64, i64), Error> {
        let bad = || invalid(format!("observable must be sin:k1,k2, got {:?}", self.observable));
        let rest = self.observable.strip_prefix("sin:").ok_or_else(bad)?;
        let (a, b) = rest.split_once(',').ok_or_else(bad)?;
        Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
    }

    pub fn break_rule(&self) -> Result<BreakRule, Error> {
        let bad = || invalid(format!("unknown threshold {:?}", self.threshold));
        if self.threshold == "auto" {
            return Ok(BreakRule::default_for(&self.toral_matrix()?));
        }
        let (kind, v) = self.threshold.split_once(':').ok_or_else(bad)?;
        let v: f64 = v.parse().map_err(|_| bad())?;
        match kind {
            "per-step" => Ok(BreakRule::PerStep(v)),
            "absolute" => Ok(BreakRule::Absolute(v)),
            _ => Err(bad()),
        }
    }

    /// `# key=value` header lines for CSV outputs.
    pub fn csv_header(&self, schema: &str) -> String {
        let json = serde_json::to_string(self).expect("serializable");
        format!("# schema={schema}\n# config={json}\n")
    }
}

fn parse_matrix(s: &str) -> Result<[i64; 4], Error> {
    let v: Vec<i64> = s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| invalid(format!("bad matrix entry {t:?}"))))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| invalid("matrix needs exactly 4 entries"))
}

fn parse_rational(s: &str) -> Result<Rational, Error> {
    let s = s.trim();
    let bad = || invalid(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (i128, i128) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if b == 0 {
                return Err(bad());
            }
            Ok(Rational::new(a, b))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn parse_partition(s: &str) -> Result<Partition, Error> {
    match s {
        "halves" => Ok(Partition::halves()),
        "quadrants" => Ok(Partition::quadrants()),
        _ => {
            let rects = s
                .split(';')
                .map(|r| {
                    let v: Vec<Rational> = r.split(',').map(parse_rational).collect::<Result<_, _>>()?;
                    if v.len() != 4 {
                        return Err(Error::InvalidPartition(format!("rectangle {r:?} needs x0,x1,y0,y1")));
                    }
                    Ok(Rect::new(Interval::new(v[0], v[1])?, Interval::new(v[2], v[3])?))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Partition::from_rects(rects)
        }
    }
}
