//! Run manifests, the shared execution path and run comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::presets::{Check, Outcome};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub preset: String,
    pub statement: String,
    pub config: BTreeMap<String, String>,
    /// SHA-256 of the preset name, the resolved config and the versions.
    pub input_hash: String,
    pub versions: BTreeMap<String, String>,
    pub wall_clock_s: f64,
    pub steps: u64,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    /// Output file name to SHA-256 of its content.
    pub outputs: BTreeMap<String, String>,
    pub pass: bool,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let p = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let text = std::fs::read_to_string(&p).map_err(|e| Error::Usage(format!("{}: {e}", p.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// One line per check, then a verdict line.
    pub fn summary(&self) -> String {
        let mut s = format!("{}: {}\n", self.preset, self.statement);
        for c in &self.checks {
            let _ = writeln!(s, "  [{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let _ = writeln!(
            s,
            "  {} in {:.2} s, {} steps",
            if self.pass {
                "all checks passed"
            } else {
                "some checks FAILED"
            },
            self.wall_clock_s,
            self.steps
        );
        s
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("osgood-core".to_string(), osgood_core::VERSION.to_string()),
        ("osgood-lab".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ])
}

fn input_hash(label: &str, config: &BTreeMap<String, String>, versions: &BTreeMap<String, String>) -> String {
    let mut s = format!("{label}\n");
    for (k, v) in config {
        let _ = writeln!(s, "{k}={v}");
    }
    for (k, v) in versions {
        let _ = writeln!(s, "version {k}={v}");
    }
    sha256_hex(s.as_bytes())
}

/// Runs `f`, writes its artifacts and the manifest under `out` when given.
pub fn execute(
    label: &str,
    statement: &str,
    config: BTreeMap<String, String>,
    out: Option<&Path>,
    f: impl FnOnce() -> Result<Outcome>,
) -> Result<RunManifest> {
    let start = Instant::now();
    let outcome = f()?;
    let wall_clock_s = start.elapsed().as_secs_f64();
    let versions = versions();
    let mut outputs = BTreeMap::new();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    for (name, bytes) in &outcome.artifacts {
        if name == MANIFEST_FILE || outputs.contains_key(name) {
            return Err(Error::Usage(format!("duplicate output name {name:?}")));
        }
        outputs.insert(name.clone(), sha256_hex(bytes));
        if let Some(dir) = out {
            std::fs::write(dir.join(name), bytes)?;
        }
    }
    let pass = !outcome.checks.is_empty() && outcome.checks.iter().all(|c| c.pass);
    let m = RunManifest {
        preset: label.to_string(),
        statement: statement.to_string(),
        input_hash: input_hash(label, &config, &versions),
        config,
        versions,
        wall_clock_s,
        steps: outcome.steps,
        checks: outcome.checks,
        metrics: outcome.metrics,
        outputs,
        pass,
    };
    if let Some(dir) = out {
        let mut s = serde_json::to_string_pretty(&m)?;
        s.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), s)?;
    }
    Ok(m)
}

pub fn run_preset(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let p = cfg.preset;
    execute(p.name(), p.statement(), cfg.params.echo(), cfg.out.as_deref(), || {
        p.run(&cfg.params)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDiff {
    pub name: String,
    pub a: f64,
    pub b: f64,
    /// `|a - b| / max(|a|, |b|)`, zero when both vanish.
    pub rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub preset: String,
    pub same_inputs: bool,
    pub metrics: Vec<MetricDiff>,
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
    /// Outputs whose content hashes differ, or that exist in one run only.
    pub changed_outputs: Vec<String>,
    pub verdict_changes: Vec<String>,
    pub max_rel: f64,
}

impl DiffReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,a,b,rel_diff\n");
        for d in &self.metrics {
            let _ = writeln!(s, "{},{:.15e},{:.15e},{:.3e}", d.name, d.a, d.b, d.rel);
        }
        s
    }

    pub fn identical(&self) -> bool {
        self.max_rel == 0.0
            && self.only_in_a.is_empty()
            && self.only_in_b.is_empty()
            && self.changed_outputs.is_empty()
            && self.verdict_changes.is_empty()
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let s = a.abs().max(b.abs());
    if s == 0.0 || !s.is_finite() {
        f64::INFINITY
    } else {
        (a - b).abs() / s
    }
}

pub fn compare_runs(a: &RunManifest, b: &RunManifest) -> Result<DiffReport> {
    if a.preset != b.preset {
        return Err(Error::Usage(format!(
            "cannot compare runs of {:?} and {:?}",
            a.preset, b.preset
        )));
    }
    let mut metrics = Vec::new();
    let mut only_in_a = Vec::new();
    for (k, &va) in &a.metrics {
        match b.metrics.get(k) {
            Some(&vb) => metrics.push(MetricDiff {
                name: k.clone(),
                a: va,
                b: vb,
                rel: rel_diff(va, vb),
            }),
            None => only_in_a.push(k.clone()),
        }
    }
    let only_in_b = b.metrics.keys().filter(|k| !a.metrics.contains_key(*k)).cloned().collect();
    let mut names: Vec<&String> = a.outputs.keys().chain(b.outputs.keys()).collect();
    names.sort();
    names.dedup();
    let changed_outputs = names
        .into_iter()
        .filter(|n| a.outputs.get(*n) != b.outputs.get(*n))
        .cloned()
        .collect();
    let verdicts = |m: &RunManifest| -> BTreeMap<String, bool> { m.checks.iter().map(|c| (c.name.clone(), c.pass)).collect() };
    let (va, vb) = (verdicts(a), verdicts(b));
    let verdict_changes = va
        .iter()
        .filter(|(k, v)| vb.get(*k) != Some(v))
        .map(|(k, _)| k.clone())
        .chain(vb.keys().filter(|k| !va.contains_key(*k)).cloned())
        .collect();
    let max_rel = metrics.iter().map(|d| d.rel).fold(0.0, f64::max);
    Ok(DiffReport {
        preset: a.preset.clone(),
        same_inputs: a.input_hash == b.input_hash,
        metrics,
        only_in_a,
        only_in_b,
        changed_outputs,
        verdict_changes,
        max_rel,
    })
}

/// Loads `manifest.json` from two run directories and compares them.
pub fn compare_dirs(a: &Path, b: &Path) -> Result<DiffReport> {
    compare_runs(&RunManifest::load(a)?, &RunManifest::load(b)?)
}

pub fn default_out(label: &str) -> PathBuf {
    PathBuf::from("runs").join(label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::check;

    fn fake(metric: f64) -> Result<Outcome> {
        let mut o = Outcome::default();
        o.checks.push(check("c", true, ""));
        o.metrics.insert("m".into(), metric);
        o.artifacts.push(("x.csv".into(), format!("{metric}\n").into_bytes()));
        Ok(o)
    }

    #[test]
    fn hash_is_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn compare_reports_relative_diffs() {
        let a = execute("p", "s", BTreeMap::new(), None, || fake(1.0)).unwrap();
        let b = execute("p", "s", BTreeMap::new(), None, || fake(1.1)).unwrap();
        let d = compare_runs(&a, &a).unwrap();
        assert!(d.identical() && d.same_inputs);
        let d = compare_runs(&a, &b).unwrap();
        assert!((d.max_rel - 0.1 / 1.1).abs() < 1e-12);
        assert_eq!(d.changed_outputs, vec!["x.csv".to_string()]);
        let c = execute("q", "s", BTreeMap::new(), None, || fake(1.0)).unwrap();
        assert!(matches!(compare_runs(&a, &c), Err(Error::Usage(_))));
    }

    #[test]
    fn no_checks_is_not_a_pass() {
        let m = execute("p", "s", BTreeMap::new(), None, || Ok(Outcome::default())).unwrap();
        assert!(!m.pass);
    }
}
