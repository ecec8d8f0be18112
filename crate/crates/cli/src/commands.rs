//! Subcommand bodies. Each returns its primary output, and entropy runs also
//! a JSON manifest; nothing here touches stdout or the filesystem.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use toral::discretize::{
    discretize_aw, egorov_defect_with, verify_dynamical_localization, verify_orbit_shadowing, Fourier,
};
use toral::entropy::{
    cs_probabilities, entropy_components, theorem3_comparison, ComparisonConfig, Dynamics,
    PartitionSpec, ProbabilityTable,
};
use toral::maps::{breaking_time_estimate, classify, diameter_bruteforce, diameter_formula, scaling_function};
use toral::scalar::rational_to_real;
use toral::{Error, LatticeConfig};

use crate::config::ExperimentConfig;

pub struct Output {
    pub body: String,
    pub manifest: Option<String>,
}

impl Output {
    fn body(body: String) -> Self {
        Self { body, manifest: None }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

/// Shortest round-trip decimal, so equal values print identically.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn cmd_classify(cfg: &ExperimentConfig) -> Result<Output, Error> {
    let t = cfg.toral_matrix()?;
    let s = classify::<f64>(&t);
    let mut text = String::new();
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
    writeln!(text, "matrix = {t}").unwrap();
    writeln!(text, "family = {}", s.family.name()).unwrap();
    writeln!(text, "semitrace = {}", s.semitrace).unwrap();
    writeln!(text, "lambda = {}", opt(s.lambda)).unwrap();
    writeln!(text, "xi = {:.6}", s.xi).unwrap();
    writeln!(text, "eta = {:.6}", s.eta).unwrap();
    writeln!(text, "sin_beta = {}", opt(s.sin_beta)).unwrap();
    writeln!(text, "shear = {}", opt(s.shear)).unwrap();
    writeln!(text, "phi = {}", opt(s.phi)).unwrap();
    let mut breaking = Vec::new();
    for &n in &cfg.lattice_sizes {
        let b = breaking_time_estimate(&s, n, cfg.gamma)?;
        writeln!(text, "breaking_time(N = {n}, gamma = {}) = {}", cfg.gamma, serde_json::to_string(&b).unwrap())
            .unwrap();
        breaking.push(json!({ "lattice_n": n, "estimate": b }));
    }
    let scaling: Vec<f64> = (0..=cfg.n_max as u64).map(|n| scaling_function(&s, n)).collect();
    let doc = json!({
        "schema": "toral.classify/1",
        "config": cfg,
        "spectral": s,
        "scaling": scaling,
        "breaking_times": breaking,
    });
    text.push_str(&serde_json::to_string(&doc).expect("serializable"));
    text.push('\n');
    Ok(Output::body(text))
}

pub fn cmd_diameters(cfg: &ExperimentConfig) -> Result<Output, Error> {
    let t = cfg.toral_matrix()?;
    let s = classify::<f64>(&t);
    let mut out = cfg.csv_header("toral.diameters/1");
    out.push_str("n,formula,bruteforce,rel_err\n");
    for n in 0..=cfg.n_max {
        let f = diameter_formula(&s, n);
        let b = diameter_bruteforce::<f64>(&t, n, cfg.boundary_samples)?;
        writeln!(out, "{n},{},{},{}", num(f), num(b), num((f - b).abs() / b)).unwrap();
    }
    Ok(Output::body(out))
}

pub fn cmd_localize(cfg: &ExperimentConfig) -> Result<Output, Error> {
    let t = cfg.toral_matrix()?;
    let seed = cfg.require_seed()?;
    let sampling = cfg.pair_sampling()?;
    let mut runs = Vec::new();
    for &n in &cfg.lattice_sizes {
        let lattice = LatticeConfig::new(n)?;
        let loc = verify_dynamical_localization(&t, &lattice, cfg.horizon, cfg.gamma, cfg.d0, cfg.trials, seed, sampling)?;
        let shadow = match verify_orbit_shadowing(&t, &lattice, cfg.horizon, cfg.trials, seed) {
            Ok(r) => json!(r),
            Err(e @ Error::ThresholdUnmet { .. }) => json!({ "skipped": e.to_string() }),
            Err(e) => return Err(e),
        };
        runs.push(json!({ "localization": loc, "shadowing": shadow }));
    }
    let doc = json!({ "schema": "toral.localize/1", "config": cfg, "runs": runs });
    Ok(Output::body(to_json(&doc)))
}

pub fn cmd_egorov(cfg: &ExperimentConfig) -> Result<Output, Error> {
    let t = cfg.toral_matrix()?;
    let (k1, k2) = cfg.fourier_mode()?;
    let f = Fourier { k1, k2 };
    let mut out = cfg.csv_header("toral.egorov/1");
    out.push_str("j,N,defect\n");
    for &n in &cfg.lattice_sizes {
        let lattice = LatticeConfig::new(n)?;
        let disc = discretize_aw::<f64, _>(&f, &lattice, cfg.quadrature);
        let grid = usize::try_from(n).ok().and_then(|n| n.checked_mul(cfg.grid_factor)).ok_or(
            Error::CapacityExceeded { what: "mesh size", requested: n as u128 * cfg.grid_factor as u128, limit: usize::MAX as u128 },
        )?;
        for j in 0..=cfg.n_max {
            let d = egorov_defect_with(&t, &f, &disc, j as i64, grid)?;
            writeln!(out, "{j},{n},{}", num(d)).unwrap();
        }
    }
    Ok(Output::body(out))
}

pub fn cmd_entropy(cfg: &ExperimentConfig) -> Result<Output, Error> {
    let t = cfg.toral_matrix()?;
    let seed = cfg.require_seed()?;
    let partition = cfg.partition()?;
    let mut out = cfg.csv_header("toral.entropy/1");
    out.push_str("n,N,S_cs,S_ks,gap,rate\n");
    let manifest = if cfg.dynamics == "identity" {
        let mut runs = Vec::new();
        for &n in &cfg.lattice_sizes {
            let lattice = LatticeConfig::new(n)?;
            let (p, snap) = if cfg.snap { partition.snap(&lattice)? } else { (partition.clone(), 0.into()) };
            let s = (1..=cfg.n_max)
                .map(|k| Ok(cs_probabilities(&Dynamics::Identity, &lattice, &p, k)?.entropy::<f64>()))
                .collect::<Result<Vec<f64>, Error>>()?;
            // the identity refinement is the partition itself
            let areas = p.areas().into_iter().enumerate().map(|(i, a)| (i as u64, a)).collect();
            let s_mu = ProbabilityTable::from_entries(1, p.len() as u32, areas)?.entropy::<f64>();
            for (i, &v) in s.iter().enumerate() {
                let k = i as u32 + 1;
                let gap = (v - s_mu).abs() / k as f64;
                writeln!(out, "{k},{n},{},{},{},{}", num(v), num(s_mu), num(gap), num(v / k as f64)).unwrap();
            }
            runs.push(json!({
                "lattice_n": n,
                "partition": p.describe(),
                "snap_distance": rational_to_real::<f64>(&snap),
                "s_cs": s,
                "s_mu": s_mu,
            }));
        }
        json!({ "schema": "toral.entropy-manifest/1", "config": cfg, "dynamics": "identity", "runs": runs })
    } else {
        let spec = if cfg.snap { PartitionSpec::Snapped(partition) } else { PartitionSpec::Fixed(partition) };
        let config = ComparisonConfig {
            n_max: cfg.n_max,
            lattice_sizes: cfg.lattice_sizes.clone(),
            samples: cfg.samples,
            seed,
            rule: cfg.break_rule()?,
        };
        let report = theorem3_comparison(&t, &spec, &config)?;
        let mut components = Vec::new();
        for run in &report.runs {
            for (i, (&sc, &sk)) in run.s_cs.iter().zip(&run.ks.entropy).enumerate() {
                let k = i as u32 + 1;
                writeln!(out, "{k},{},{},{},{},{}", run.lattice_n, num(sc), num(sk), num(run.gap[i]), num(sc / k as f64))
                    .unwrap();
            }
            let lattice = LatticeConfig::new(run.lattice_n)?;
            let (p, _) = spec.resolve(&lattice)?;
            components.push(json!({
                "lattice_n": run.lattice_n,
                "components": entropy_components(&t, &lattice, &p, cfg.n_max)?,
            }));
        }
        json!({
            "schema": "toral.entropy-manifest/1",
            "config": cfg,
            "dynamics": "map",
            "report": report,
            "components_at_n_max": components,
        })
    };
    Ok(Output { body: out, manifest: Some(to_json(&manifest)) })
}
