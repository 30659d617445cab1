//! Pipeline stages over a run directory. Each stage's artifacts live under
//! a directory named after the stage; the manifest is only written from
//! the coordinating thread, after the workers of a batch have finished.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use assist_core::corpus::{filter_by_domain, generate_corpus, inject_noise, split_counts};
use assist_core::dialogue::{Corpus, Ontology, Vocabulary};
use assist_core::metrics::{evaluate, EvalOptions, MetricsReport};
use assist_core::pipeline::{evaluate_model, generate_pseudo, train_auxiliary, train_primary, Composition, LabelBundle, TrainOptions, TrainPlan};
use assist_core::theory::verify_theorem;
use assist_core::tracker::{TrackerConfig, TrackerModel};
use assist_core::Execution;
use log::info;
use serde::Serialize;
use serde_json::json;

use crate::config::{sha256_hex, ExperimentConfig, NoisePreset};
use crate::error::{CliError, Result};
use crate::manifest::{outputs_intact, Manifest, Outputs, StageRecord};
use crate::table::{metric_series, Axis, PlotSpec, SweepRow, SweepTable};

pub const GEN_CORPUS: &str = "gen-corpus";

/// Which clean dialogues an auxiliary model sees.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CleanSubset {
    /// Leading fraction of the clean pool, so smaller sets nest in larger.
    Fraction(f64),
    /// The clean pool minus every dialogue touching the domain.
    WithoutDomain(String),
}

impl CleanSubset {
    pub fn tag(&self) -> String {
        match self {
            CleanSubset::Fraction(f) if *f == 1.0 => "full".into(),
            CleanSubset::Fraction(f) => format!("clean-{f}"),
            CleanSubset::WithoutDomain(d) => format!("no-{d}"),
        }
    }
}

/// One primary training run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arm {
    pub noise: NoisePreset,
    pub composition: Composition,
    pub alpha: f64,
    /// Auxiliary model behind the pseudo labels, when the composition has P.
    pub aux: Option<String>,
}

impl Arm {
    pub fn new(noise: NoisePreset, composition: Composition, alpha: f64, aux: &str) -> Self {
        let mixed = composition.t && composition.p;
        Self {
            noise,
            composition,
            alpha: if mixed { alpha } else if composition.p { 1.0 } else { 0.0 },
            aux: composition.p.then(|| aux.to_string()),
        }
    }

    pub fn name(&self) -> String {
        let mut s = format!("{}/{}", self.noise, self.composition);
        if self.composition.t && self.composition.p {
            s.push_str(&format!("/alpha={}", self.alpha));
        }
        if let Some(a) = &self.aux {
            s.push_str(&format!("/aux={a}"));
        }
        s
    }

    pub fn train_stage(&self) -> String {
        format!("train-primary/{}", self.name())
    }

    pub fn eval_stage(&self) -> String {
        format!("eval/{}", self.name())
    }
}

pub fn noise_stage(p: &NoisePreset) -> String {
    format!("inject-noise/{p}")
}

pub fn aux_stage(tag: &str) -> String {
    format!("train-aux/{tag}")
}

pub fn pseudo_stage(tag: &str, p: &NoisePreset) -> String {
    format!("gen-pseudo/{tag}/{p}")
}

struct Job<T> {
    name: String,
    params: serde_json::Value,
    inputs: Vec<String>,
    item: T,
}

pub struct Runner {
    pub cfg: ExperimentConfig,
    pub root: PathBuf,
    pub ontology: Arc<Ontology>,
    pub manifest: Manifest,
    /// Rerun stages even when their cache entry is valid.
    pub force: bool,
    exec: Execution,
    #[cfg(feature = "parallel")]
    pool: rayon::ThreadPool,
}

impl Runner {
    pub fn open(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let root = cfg.run_dir();
        std::fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        let mut manifest = Manifest::load_or_default(&root)?;
        manifest.config_hash = cfg.hash();
        manifest.seeds = cfg.seeds();
        let workers = cfg.workers()?;
        info!("run directory {} ({workers} workers)", root.display());
        Ok(Self {
            ontology: cfg.ontology()?,
            root,
            manifest,
            force: false,
            exec: Execution::Parallel,
            #[cfg(feature = "parallel")]
            pool: rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?,
            cfg,
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn read(&self, rel: &str) -> Result<Vec<u8>> {
        let p = self.path(rel);
        std::fs::read(&p).map_err(|e| CliError::io(p, e))
    }

    fn load_corpus(&self, rel: &str) -> Result<Corpus> {
        let c = Corpus::from_json(&String::from_utf8_lossy(&self.read(rel)?))?;
        if c.ontology.content_hash() != self.ontology.content_hash() {
            return Err(CliError::Artifact(format!("{rel}: ontology differs from the config")));
        }
        // Share the config's ontology so model/corpus checks are cheap.
        Ok(Corpus { ontology: self.ontology.clone(), dialogues: c.dialogues })
    }

    pub fn corpus(&self, part: &str) -> Result<Corpus> {
        self.load_corpus(&format!("{GEN_CORPUS}/{part}.json"))
    }

    pub fn noisy(&self, p: &NoisePreset) -> Result<Corpus> {
        self.load_corpus(&format!("{}/train.json", noise_stage(p)))
    }

    fn vocabulary(&self, train: &Corpus, clean: &Corpus) -> Vocabulary {
        Vocabulary::build(&self.ontology, [train, clean])
    }

    pub fn metrics(&self, eval_stage: &str) -> Result<MetricsReport> {
        Ok(serde_json::from_slice(&self.read(&format!("{eval_stage}/metrics.json"))?)?)
    }

    fn save_manifest(&self) -> Result<()> {
        self.manifest.save(&self.root)
    }

    fn key(&self, job_name: &str, params: &serde_json::Value, inputs: &[String]) -> Result<String> {
        let mut ups = Vec::with_capacity(inputs.len());
        for i in inputs {
            let rec = self.manifest.require(i)?;
            if let Some(missing) = rec.outputs.keys().find(|rel| !self.path(rel).exists()) {
                return Err(CliError::Dependency { stage: i.clone(), detail: format!("artifact {missing} is missing") });
            }
            ups.push((i.clone(), rec.digest()));
        }
        Ok(sha256_hex(json!({ "stage": job_name, "params": params, "inputs": ups }).to_string().as_bytes()))
    }

    /// Runs the jobs that are not cache hits (concurrently, up to the
    /// worker count) and records them. Successful jobs are recorded even
    /// when another job of the batch fails.
    fn run_jobs<T: Sync>(&mut self, jobs: Vec<Job<T>>, f: impl Fn(&Runner, &T, &mut Outputs) -> Result<()> + Sync) -> Result<()> {
        let mut pending = Vec::new();
        for job in jobs {
            let key = self.key(&job.name, &job.params, &job.inputs)?;
            let hit = !self.force
                && self
                    .manifest
                    .stages
                    .get(&job.name)
                    .is_some_and(|r| r.key == key && outputs_intact(&self.root, r));
            if hit {
                info!("{}: cached", job.name);
            } else {
                pending.push((job, key));
            }
        }
        let this: &Runner = self;
        let run_one = |(job, _): &(Job<T>, String)| -> Result<Outputs> {
            let t0 = Instant::now();
            info!("{}: running", job.name);
            let mut out = Outputs::new(&this.root);
            f(this, &job.item, &mut out)?;
            info!("{}: done in {:.1}s", job.name, t0.elapsed().as_secs_f64());
            Ok(out)
        };
        #[cfg(feature = "parallel")]
        let results: Vec<Result<Outputs>> = {
            use rayon::prelude::*;
            self.pool.install(|| pending.par_iter().map(run_one).collect())
        };
        #[cfg(not(feature = "parallel"))]
        let results: Vec<Result<Outputs>> = pending.iter().map(run_one).collect();

        let mut first_err = None;
        for ((job, key), res) in pending.into_iter().zip(results) {
            match res {
                Ok(out) => {
                    self.manifest.stages.insert(job.name, StageRecord { key, inputs: job.inputs, outputs: out.into_files() });
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        self.save_manifest()?;
        first_err.map_or(Ok(()), Err)
    }

    fn run_one(&mut self, name: &str, params: serde_json::Value, inputs: Vec<String>, f: impl Fn(&Runner, &mut Outputs) -> Result<()> + Sync) -> Result<()> {
        let job = Job { name: name.to_string(), params, inputs, item: () };
        self.run_jobs(vec![job], |r, _, out| f(r, out))
    }

    // ---- pipeline stages -------------------------------------------------

    pub fn gen_corpus(&mut self) -> Result<()> {
        let params = json!({ "ontology": self.ontology.content_hash(), "corpus": self.cfg.corpus });
        self.run_one(GEN_CORPUS, params, vec![], |r, out| {
            let c = r.cfg.corpus;
            let all = generate_corpus(&r.ontology, c.train + c.clean + c.test, c.max_turns, c.seed)?;
            let split = split_counts(&all, [c.train, c.clean, c.test], c.split_seed)?;
            for (name, part) in [("train", &split.train), ("clean", &split.clean), ("test", &split.test)] {
                out.write(&format!("{GEN_CORPUS}/{name}.json"), part.to_json()?.as_bytes())?;
            }
            Ok(())
        })
    }

    /// Corrupts the training split once per configured noise preset.
    pub fn inject_noise(&mut self) -> Result<()> {
        let jobs = self
            .cfg
            .noise
            .presets()
            .into_iter()
            .map(|p| Job {
                name: noise_stage(&p),
                params: json!({ "spec": p.spec(self.cfg.noise.seed).expect("validated") }),
                inputs: vec![GEN_CORPUS.to_string()],
                item: p,
            })
            .collect();
        self.run_jobs(jobs, |r, p, out| {
            let truth = r.corpus("train")?;
            let spec = p.spec(r.cfg.noise.seed)?;
            let (noisy, log) = inject_noise(&truth, &spec)?;
            let dir = noise_stage(p);
            out.write(&format!("{dir}/train.json"), noisy.to_json()?.as_bytes())?;
            out.write(&format!("{dir}/log.jsonl"), log.to_jsonl()?.as_bytes())?;
            let vanilla = evaluate(&noisy.state_table(), &truth.state_table(), &r.ontology, EvalOptions::default())?;
            out.write_json(
                &format!("{dir}/summary.json"),
                &json!({ "spec": spec, "counts": log.counts(), "vanilla_vs_truth": vanilla }),
            )
        })
    }

    fn aux_model(&self, train: &Corpus, clean: &Corpus) -> Result<TrackerModel> {
        let config = TrackerConfig { seed: self.cfg.aux.seed, ..self.cfg.tracker.clone() };
        Ok(TrackerModel::new(config, self.ontology.clone(), self.vocabulary(train, clean))?)
    }

    fn clean_subset(&self, clean: &Corpus, subset: &CleanSubset) -> Result<Corpus> {
        let c = match subset {
            CleanSubset::Fraction(f) => {
                let n = ((f * clean.dialogues.len() as f64) + 1e-9).floor() as usize;
                clean.with_dialogues(clean.dialogues[..n].to_vec())
            }
            CleanSubset::WithoutDomain(d) => filter_by_domain(clean, d),
        };
        if c.dialogues.is_empty() {
            return Err(CliError::Config(format!("clean subset {} is empty", subset.tag())));
        }
        Ok(c)
    }

    /// Auxiliary models, selected on their own clean subset.
    pub fn train_aux(&mut self, subsets: &[CleanSubset]) -> Result<()> {
        let jobs = subsets
            .iter()
            .map(|s| Job {
                name: aux_stage(&s.tag()),
                params: json!({ "subset": s, "tracker": self.cfg.tracker, "plan": self.cfg.aux }),
                inputs: vec![GEN_CORPUS.to_string()],
                item: s.clone(),
            })
            .collect();
        self.run_jobs(jobs, |r, s, out| {
            let (train, pool, test) = (r.corpus("train")?, r.corpus("clean")?, r.corpus("test")?);
            let clean = r.clean_subset(&pool, s)?;
            let mut model = r.aux_model(&train, &pool)?;
            let report = train_auxiliary(&mut model, &clean, &clean, &r.cfg.aux, r.exec)?;
            let dir = aux_stage(&s.tag());
            out.write(&format!("{dir}/model.json"), serde_json::to_string(&model.to_checkpoint())?.as_bytes())?;
            out.write_json(&format!("{dir}/train_report.json"), &report)?;
            out.write_json(&format!("{dir}/test_metrics.json"), &evaluate_model(&model, &test, r.exec)?)?;
            out.write_json(&format!("{dir}/subset.json"), &json!({ "subset": s, "dialogues": clean.dialogues.len() }))
        })
    }

    /// Pseudo labels of each auxiliary model on each preset's corpus.
    pub fn gen_pseudo(&mut self, tags: &[String], presets: &[NoisePreset]) -> Result<()> {
        let mut jobs = Vec::new();
        for t in tags {
            for p in presets {
                jobs.push(Job {
                    name: pseudo_stage(t, p),
                    params: json!({ "previous": self.cfg.pseudo_previous }),
                    inputs: vec![GEN_CORPUS.to_string(), aux_stage(t), noise_stage(p)],
                    item: (t.clone(), *p),
                });
            }
        }
        self.run_jobs(jobs, |r, (t, p), out| {
            let model = TrackerModel::load(&r.path(&format!("{}/model.json", aux_stage(t))), r.ontology.clone())?;
            let noisy = r.noisy(p)?;
            let truth = r.corpus("train")?;
            let pseudo = generate_pseudo(&model, &noisy, r.cfg.pseudo_previous, r.exec)?;
            let bundle = LabelBundle::new(&noisy, pseudo, Some(&truth))?;
            let dir = pseudo_stage(t, p);
            out.write(&format!("{dir}/bundle.jsonl"), bundle.to_jsonl()?.as_bytes())?;
            // Reporting only: label quality against the true states.
            let gold = truth.state_table();
            let quality = json!({
                "pseudo_vs_truth": evaluate(&bundle.pseudo_table(), &gold, &r.ontology, EvalOptions::default())?,
                "vanilla_vs_truth": evaluate(&noisy.state_table(), &gold, &r.ontology, EvalOptions::default())?,
            });
            out.write_json(&format!("{dir}/quality.json"), &quality)
        })
    }

    fn arm_plan(&self, arm: &Arm) -> TrainPlan {
        TrainPlan { composition: arm.composition, alpha: arm.alpha, ..self.cfg.primary.clone() }
    }

    /// Trains and evaluates primary models. Selection uses the full clean
    /// pool; evaluation the test split.
    pub fn run_arms(&mut self, arms: &[Arm]) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        let arms: Vec<Arm> = arms.iter().filter(|a| seen.insert(a.name())).cloned().collect();
        let jobs = arms
            .iter()
            .map(|a| {
                let mut inputs = vec![GEN_CORPUS.to_string(), noise_stage(&a.noise)];
                if let Some(t) = &a.aux {
                    inputs.push(pseudo_stage(t, &a.noise));
                }
                Job {
                    name: a.train_stage(),
                    params: json!({ "arm": a, "tracker": self.cfg.tracker, "plan": self.arm_plan(a) }),
                    inputs,
                    item: a.clone(),
                }
            })
            .collect();
        self.run_jobs(jobs, |r, a, out| {
            let (train, pool) = (r.corpus("train")?, r.corpus("clean")?);
            let noisy = r.noisy(&a.noise)?;
            let bundle = match &a.aux {
                Some(t) => {
                    let text = String::from_utf8_lossy(&r.read(&format!("{}/bundle.jsonl", pseudo_stage(t, &a.noise)))?).into_owned();
                    Some(LabelBundle::from_jsonl(&text)?)
                }
                None => None,
            };
            let mut model = TrackerModel::new(r.cfg.tracker.clone(), r.ontology.clone(), r.vocabulary(&train, &pool))?;
            let opts = TrainOptions { exec: r.exec, verify_decomposition: false };
            let report = train_primary(&mut model, &noisy, bundle.as_ref(), Some(&pool), &pool, &r.arm_plan(a), opts)?;
            let dir = a.train_stage();
            out.write(&format!("{dir}/model.json"), serde_json::to_string(&model.to_checkpoint())?.as_bytes())?;
            out.write_json(&format!("{dir}/train_report.json"), &report)
        })?;
        let jobs = arms
            .iter()
            .map(|a| Job {
                name: a.eval_stage(),
                params: json!({}),
                inputs: vec![GEN_CORPUS.to_string(), a.train_stage()],
                item: a.clone(),
            })
            .collect();
        self.run_jobs(jobs, |r, a, out| {
            let model = TrackerModel::load(&r.path(&format!("{}/model.json", a.train_stage())), r.ontology.clone())?;
            let m = evaluate_model(&model, &r.corpus("test")?, r.exec)?;
            let dir = a.eval_stage();
            out.write_json(&format!("{dir}/metrics.json"), &m)?;
            out.write(&format!("{dir}/per_slot_errors.csv"), m.per_slot_csv().as_bytes())
        })
    }

    /// The arm of the `[primary]` plan.
    pub fn main_arm(&self) -> Arm {
        Arm::new(self.cfg.noise.preset, self.cfg.primary.composition, self.cfg.primary.alpha, "full")
    }

    pub fn train_main(&mut self) -> Result<()> {
        let arm = self.main_arm();
        self.run_arms(std::slice::from_ref(&arm))
    }

    // ---- sweeps ----------------------------------------------------------

    fn write_tables(&mut self, stage: &str, tables: &[SweepTable]) -> Result<()> {
        let inputs: Vec<String> = tables.iter().flat_map(|t| t.rows.iter().map(|r| r.eval.clone())).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let tables = tables.to_vec();
        self.run_one(stage, json!({ "tables": tables }), inputs, |r, out| {
            for t in &tables {
                let csv = t.render(&|e| r.metrics(e))?;
                out.write(&format!("{stage}/{}", t.csv_file()), &csv)?;
                out.write_json(&format!("{stage}/{}", t.rows_file()), t)?;
                out.write_json(&format!("{stage}/{}", t.plot_file()), &t.plot)?;
            }
            Ok(())
        })
    }

    fn alpha_table(&self, p: &NoisePreset) -> SweepTable {
        let name = format!("alpha_{p}");
        SweepTable {
            rows: self
                .cfg
                .sweeps
                .alpha_grid
                .iter()
                .map(|&a| SweepRow {
                    labels: vec![a.to_string()],
                    eval: Arm::new(*p, Composition::TP, a, "full").eval_stage(),
                })
                .collect(),
            label_columns: vec!["alpha".into()],
            plot: PlotSpec {
                title: format!("T+P test accuracy against alpha ({p})"),
                kind: "line".into(),
                data: format!("{name}.csv"),
                x: Axis { column: "alpha".into(), label: "alpha (weight of pseudo labels)".into() },
                y: Axis { column: "value".into(), label: "accuracy".into() },
                series: metric_series(),
                group_by: None,
            },
            name,
        }
    }

    pub fn sweep_alpha(&mut self) -> Result<()> {
        let presets = self.cfg.noise.presets();
        let arms: Vec<Arm> = presets
            .iter()
            .flat_map(|p| self.cfg.sweeps.alpha_grid.iter().map(move |&a| Arm::new(*p, Composition::TP, a, "full")))
            .collect();
        self.run_arms(&arms)?;
        let tables: Vec<SweepTable> = presets.iter().map(|p| self.alpha_table(p)).collect();
        self.write_tables("sweep-alpha", &tables)
    }

    /// `sweeps.alpha`, or the alpha with the highest test JGA in the alpha
    /// sweep on the main preset (earliest grid point on ties).
    pub fn best_alpha(&self) -> Result<f64> {
        if let Some(a) = self.cfg.sweeps.alpha {
            return Ok(a);
        }
        self.manifest.require("sweep-alpha")?;
        let table = self.alpha_table(&self.cfg.noise.preset);
        let mut best: Option<(f64, f64)> = None;
        for (row, &a) in table.rows.iter().zip(&self.cfg.sweeps.alpha_grid) {
            let j = self.metrics(&row.eval)?.joint_goal_accuracy;
            if best.map_or(true, |(bj, _)| j > bj) {
                best = Some((j, a));
            }
        }
        Ok(best.expect("grid is non-empty").1)
    }

    fn mode_row(&self, arm: &Arm, extra: Vec<String>) -> SweepRow {
        let mut labels = extra;
        labels.push(arm.composition.to_string());
        labels.push(if arm.composition.t && arm.composition.p { arm.alpha.to_string() } else { String::new() });
        SweepRow { labels, eval: arm.eval_stage() }
    }

    pub fn sweep_composition(&mut self) -> Result<()> {
        let alpha = self.best_alpha()?;
        let p = self.cfg.noise.preset;
        let arms: Vec<Arm> = self.cfg.sweeps.compositions.iter().map(|&c| Arm::new(p, c, alpha, "full")).collect();
        self.run_arms(&arms)?;
        let name = "composition".to_string();
        let table = SweepTable {
            rows: arms.iter().map(|a| self.mode_row(a, vec![])).collect(),
            label_columns: vec!["mode".into(), "alpha".into()],
            plot: PlotSpec {
                title: format!("Training-set compositions ({p})"),
                kind: "bar".into(),
                data: format!("{name}.csv"),
                x: Axis { column: "mode".into(), label: "training set".into() },
                y: Axis { column: "value".into(), label: "accuracy".into() },
                series: metric_series(),
                group_by: None,
            },
            name,
        };
        self.write_tables("sweep-composition", &[table])
    }

    pub fn sweep_clean_size(&mut self) -> Result<()> {
        let alpha = self.best_alpha()?;
        let p = self.cfg.noise.preset;
        let subsets: Vec<CleanSubset> = self.cfg.sweeps.clean_fractions.iter().map(|&f| CleanSubset::Fraction(f)).collect();
        let tags: Vec<String> = subsets.iter().map(CleanSubset::tag).collect();
        self.train_aux(&subsets)?;
        self.gen_pseudo(&tags, &[p])?;
        let t = Arm::new(p, Composition::T, 0.0, "full");
        let mut arms = vec![t.clone()];
        let mut rows = Vec::new();
        let pool = self.corpus("clean")?;
        for (s, tag) in subsets.iter().zip(&tags) {
            let n = self.clean_subset(&pool, s)?.dialogues.len();
            let CleanSubset::Fraction(f) = s else { unreachable!() };
            for arm in [t.clone(), Arm::new(p, Composition::P, alpha, tag), Arm::new(p, Composition::TP, alpha, tag)] {
                rows.push(self.mode_row(&arm, vec![f.to_string(), n.to_string()]));
                arms.push(arm);
            }
        }
        self.run_arms(&arms)?;
        let name = "clean_size".to_string();
        let table = SweepTable {
            rows,
            label_columns: vec!["fraction".into(), "clean_dialogues".into(), "mode".into(), "alpha".into()],
            plot: PlotSpec {
                title: format!("Test JGA against clean-set size ({p})"),
                kind: "line".into(),
                data: format!("{name}.csv"),
                x: Axis { column: "fraction".into(), label: "fraction of the clean pool".into() },
                y: Axis { column: "jga".into(), label: "joint goal accuracy".into() },
                series: vec![crate::table::Series { column: "jga".into(), label: "joint goal accuracy".into() }],
                group_by: Some("mode".into()),
            },
            name,
        };
        self.write_tables("sweep-clean-size", &[table])
    }

    pub fn sweep_domain(&mut self) -> Result<()> {
        let alpha = self.best_alpha()?;
        let p = self.cfg.noise.preset;
        let subsets: Vec<CleanSubset> = self.cfg.sweeps.excluded_domains.iter().map(|d| CleanSubset::WithoutDomain(d.clone())).collect();
        let tags: Vec<String> = subsets.iter().map(CleanSubset::tag).collect();
        self.train_aux(&subsets)?;
        self.gen_pseudo(&tags, &[p])?;
        let pool = self.corpus("clean")?;
        let mut arms = vec![Arm::new(p, Composition::TP, alpha, "full")];
        let mut rows = vec![SweepRow { labels: vec!["none".into(), pool.dialogues.len().to_string()], eval: arms[0].eval_stage() }];
        for (s, tag) in subsets.iter().zip(&tags) {
            let arm = Arm::new(p, Composition::TP, alpha, tag);
            let CleanSubset::WithoutDomain(d) = s else { unreachable!() };
            rows.push(SweepRow { labels: vec![d.clone(), self.clean_subset(&pool, s)?.dialogues.len().to_string()], eval: arm.eval_stage() });
            arms.push(arm);
        }
        self.run_arms(&arms)?;
        let name = "domain".to_string();
        let table = SweepTable {
            rows,
            label_columns: vec!["excluded_domain".into(), "clean_dialogues".into()],
            plot: PlotSpec {
                title: format!("T+P with a domain removed from the clean set ({p}, alpha={alpha})"),
                kind: "bar".into(),
                data: format!("{name}.csv"),
                x: Axis { column: "excluded_domain".into(), label: "domain missing from the clean set".into() },
                y: Axis { column: "value".into(), label: "accuracy".into() },
                series: metric_series(),
                group_by: None,
            },
            name,
        };
        self.write_tables("sweep-domain", &[table])
    }

    pub fn verify_theorem(&mut self) -> Result<()> {
        let jobs = self
            .cfg
            .theorem
            .iter()
            .map(|(name, t)| Job {
                name: format!("verify-theorem/{name}"),
                params: json!({ "ontology": self.ontology.content_hash(), "config": t }),
                inputs: vec![],
                item: (name.clone(), t.clone()),
            })
            .collect();
        self.run_jobs(jobs, |r, (name, t), out| {
            let report = verify_theorem(t, &r.ontology, r.exec)?;
            let dir = format!("verify-theorem/{name}");
            out.write(&format!("{dir}/report.json"), report.to_json()?.as_bytes())?;
            out.write(&format!("{dir}/curve.csv"), report.curve_csv().as_bytes())?;
            out.write_json(&format!("{dir}/curve.plot.json"), &theorem_plot(name))
        })
    }

    /// Every stage, in dependency order.
    pub fn run_all(&mut self) -> Result<()> {
        let presets = self.cfg.noise.presets();
        self.gen_corpus()?;
        self.inject_noise()?;
        self.train_aux(&[CleanSubset::Fraction(1.0)])?;
        self.gen_pseudo(&["full".to_string()], &presets)?;
        self.train_main()?;
        self.sweep_alpha()?;
        self.sweep_composition()?;
        self.sweep_clean_size()?;
        if !self.cfg.sweeps.excluded_domains.is_empty() {
            self.sweep_domain()?;
        }
        self.verify_theorem()?;
        crate::report::report(self).map(|_| ())
    }
}

pub fn theorem_plot(name: &str) -> PlotSpec {
    PlotSpec {
        title: format!("Combined-label error against alpha ({name})"),
        kind: "line".into(),
        data: "curve.csv".into(),
        x: Axis { column: "alpha".into(), label: "alpha".into() },
        y: Axis { column: "value".into(), label: "mean squared distance to the true labels".into() },
        series: vec![
            crate::table::Series { column: "empirical".into(), label: "Monte Carlo mean".into() },
            crate::table::Series { column: "fitted".into(), label: "closed form from the endpoints".into() },
        ],
        group_by: None,
    }
}
