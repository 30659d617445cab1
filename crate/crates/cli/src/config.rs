//! TOML experiment configuration. Unknown keys are rejected everywhere so a
//! typo in a sweep axis cannot silently fall back to a default.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use assist_core::corpus::{default_ontology, NoiseSpec};
use assist_core::dialogue::Ontology;
use assist_core::pipeline::{Composition, PseudoPrevious, TrainPlan};
use assist_core::theory::TheoremConfig;
use assist_core::tracker::TrackerConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Ontology file: a JSON list of `[slot, [values...]]`, so slot order is
/// explicit.
type OntologyFile = Vec<(String, Vec<String>)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Run directory. Relative paths resolve against `ASSIST_OUTPUT_ROOT`
    /// when set, else the working directory.
    pub output_dir: PathBuf,
    /// Concurrent sweep points; `ASSIST_WORKERS` overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub ontology: OntologySource,
    pub corpus: CorpusConfig,
    pub noise: NoiseConfig,
    pub tracker: TrackerConfig,
    pub aux: TrainPlan,
    pub primary: TrainPlan,
    #[serde(default)]
    pub pseudo_previous: PseudoPrevious,
    pub sweeps: SweepConfig,
    /// Named Monte Carlo theorem checks.
    #[serde(default)]
    pub theorem: BTreeMap<String, TheoremConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologySource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// JSON list of `[slot, [values...]]`; `none`/`dontcare` are added.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub train: usize,
    pub clean: usize,
    pub test: usize,
    pub max_turns: usize,
    pub seed: u64,
    pub split_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoisePreset {
    HighNoise,
    LowNoise,
    Standard,
    Clean,
    Custom { p_missing: f64, p_spurious: f64, p_wrong: f64 },
}

impl NoisePreset {
    pub fn spec(&self, seed: u64) -> Result<NoiseSpec> {
        Ok(match *self {
            NoisePreset::HighNoise => NoiseSpec::high_noise(seed),
            NoisePreset::LowNoise => NoiseSpec::low_noise(seed),
            NoisePreset::Standard => NoiseSpec::standard(seed),
            NoisePreset::Clean => NoiseSpec::clean(seed),
            NoisePreset::Custom { p_missing, p_spurious, p_wrong } => NoiseSpec::new(p_missing, p_spurious, p_wrong, seed)?,
        })
    }
}

impl fmt::Display for NoisePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoisePreset::HighNoise => f.write_str("high-noise"),
            NoisePreset::LowNoise => f.write_str("low-noise"),
            NoisePreset::Standard => f.write_str("standard"),
            NoisePreset::Clean => f.write_str("clean"),
            NoisePreset::Custom { p_missing, p_spurious, p_wrong } => write!(f, "custom-{p_missing}-{p_spurious}-{p_wrong}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Noise of the training corpus in every pipeline stage.
    pub preset: NoisePreset,
    /// Second level for the alpha sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast: Option<NoisePreset>,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn presets(&self) -> Vec<NoisePreset> {
        let mut v = vec![self.preset];
        if let Some(c) = self.contrast {
            if c != self.preset {
                v.push(c);
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alpha_grid: Vec<f64>,
    /// Fractions of the clean pool, each a prefix of the next.
    pub clean_fractions: Vec<f64>,
    #[serde(default)]
    pub excluded_domains: Vec<String>,
    pub compositions: Vec<Composition>,
    /// Alpha for sweeps other than the alpha sweep; the alpha sweep's best
    /// value on the main noise preset when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Parses and validates. A relative ontology path is taken relative to
    /// the config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(p) = &cfg.ontology.path {
            if p.is_relative() {
                cfg.ontology.path = Some(path.parent().unwrap_or(Path::new(".")).join(p));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let o = self.ontology()?;
        if self.corpus.train == 0 || self.corpus.clean == 0 || self.corpus.test == 0 || self.corpus.max_turns == 0 {
            return bad("corpus sizes and max_turns must be positive".into());
        }
        self.tracker.validate()?;
        self.aux.validate()?;
        self.primary.validate()?;
        for p in self.noise.presets() {
            p.spec(self.noise.seed)?;
        }
        let unit = |xs: &[f64], name: &str, open_zero: bool| -> Result<()> {
            if xs.is_empty() {
                return bad(format!("{name} is empty"));
            }
            for &x in xs {
                if !(0.0..=1.0).contains(&x) || (open_zero && x == 0.0) {
                    return bad(format!("{name}: {x} outside the allowed range"));
                }
            }
            Ok(())
        };
        unit(&self.sweeps.alpha_grid, "sweeps.alpha_grid", false)?;
        unit(&self.sweeps.clean_fractions, "sweeps.clean_fractions", true)?;
        if let Some(a) = self.sweeps.alpha {
            unit(&[a], "sweeps.alpha", false)?;
        }
        if self.sweeps.compositions.is_empty() || self.sweeps.compositions.iter().any(|c| c.is_empty()) {
            return bad("sweeps.compositions must list non-empty modes".into());
        }
        let domains = o.domains();
        for d in &self.sweeps.excluded_domains {
            if !domains.contains(d) {
                return bad(format!("sweeps.excluded_domains: unknown domain {d:?}"));
            }
        }
        for (name, t) in &self.theorem {
            t.proxy.validate()?;
            if t.draws < 2 || t.n_dialogues == 0 {
                return bad(format!("theorem.{name}: need at least 2 draws and 1 dialogue"));
            }
        }
        Ok(())
    }

    pub fn ontology(&self) -> Result<Arc<Ontology>> {
        match (&self.ontology.preset, &self.ontology.path) {
            (Some(p), None) if p == "default" => Ok(Arc::new(default_ontology())),
            (Some(p), None) => Err(CliError::Config(format!("unknown ontology preset {p:?}"))),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("ontology {}: {e}", path.display())))?;
                let entries: OntologyFile = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("ontology {}: {e}", path.display())))?;
                Ok(Arc::new(Ontology::normalized(entries)?))
            }
            _ => Err(CliError::Config("ontology needs exactly one of `preset` or `path`".into())),
        }
    }

    /// Hash of everything that can change a result (not the output
    /// location or worker count).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.workers = None;
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }

    pub fn seeds(&self) -> BTreeMap<String, u64> {
        let mut s = BTreeMap::from([
            ("corpus".to_string(), self.corpus.seed),
            ("split".to_string(), self.corpus.split_seed),
            ("noise".to_string(), self.noise.seed),
            ("tracker".to_string(), self.tracker.seed),
            ("aux".to_string(), self.aux.seed),
            ("primary".to_string(), self.primary.seed),
        ]);
        for (name, t) in &self.theorem {
            s.insert(format!("theorem.{name}"), t.seed);
        }
        s
    }

    pub fn run_dir(&self) -> PathBuf {
        match std::env::var_os("ASSIST_OUTPUT_ROOT") {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }

    pub fn workers(&self) -> Result<usize> {
        let w = match std::env::var("ASSIST_WORKERS") {
            Ok(v) => v.parse::<usize>().map_err(|_| CliError::Config(format!("ASSIST_WORKERS={v:?} is not a count")))?,
            Err(_) => self.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        };
        if w == 0 {
            return Err(CliError::Config("workers must be positive".into()));
        }
        Ok(w)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
