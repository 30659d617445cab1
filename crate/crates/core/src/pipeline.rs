//! Auxiliary training on clean data, pseudo-label generation, label
//! combination, and primary training under the T / C / P compositions.

use std::fmt;
use std::str::FromStr;

use assist_numeric::{adamw_step, AdamWConfig, Checkpoint, Graph, Gradients, WarmupSchedule};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dialogue::{Corpus, Dialogue, DialogueStates, Ontology, Sample, SoftLabelSet, State};
use crate::exec::{self, Execution};
use crate::metrics::{evaluate, EvalOptions, MetricsReport};
use crate::rng;
use crate::tracker::{PreviousState, TrackerModel};
use crate::{Error, Result};

/// Vanilla, pseudo and (optionally) true labels for one dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleDialogue {
    pub id: String,
    pub vanilla: Vec<State>,
    pub pseudo: Vec<State>,
    pub truth: Option<Vec<State>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelBundle {
    pub ontology_hash: String,
    pub dialogues: Vec<BundleDialogue>,
}

/// One JSON line of a serialized bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct BundleLine {
    dialogue_id: String,
    turn: usize,
    vanilla: State,
    pseudo: State,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truth: Option<State>,
}

impl LabelBundle {
    /// Pairs the noisy corpus labels with `pseudo` (aligned with the
    /// corpus dialogues); `truth` is attached only for reporting.
    pub fn new(noisy: &Corpus, pseudo: Vec<Vec<State>>, truth: Option<&Corpus>) -> Result<Self> {
        if pseudo.len() != noisy.dialogues.len() {
            return Err(Error::Schema("pseudo labels do not cover the corpus".into()));
        }
        if let Some(t) = truth {
            if t.dialogues.len() != noisy.dialogues.len() {
                return Err(Error::Schema("true labels do not cover the corpus".into()));
            }
        }
        let dialogues = noisy
            .dialogues
            .iter()
            .zip(pseudo)
            .enumerate()
            .map(|(i, (d, p))| {
                if p.len() != d.turns.len() {
                    return Err(Error::Schema(format!("dialogue {}: pseudo turn count", d.id)));
                }
                for s in &p {
                    noisy.ontology.validate_state(s)?;
                }
                let truth = match truth {
                    Some(t) => {
                        let td = &t.dialogues[i];
                        if td.id != d.id || td.turns.len() != d.turns.len() {
                            return Err(Error::Schema(format!("dialogue {}: true labels misaligned", d.id)));
                        }
                        Some(td.states())
                    }
                    None => None,
                };
                Ok(BundleDialogue {
                    id: d.id.clone(),
                    vanilla: d.states(),
                    pseudo: p,
                    truth,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ontology_hash: noisy.ontology.content_hash(),
            dialogues,
        })
    }

    /// Checks that the bundle covers exactly the dialogues and turns of `corpus`.
    pub fn check_covers(&self, corpus: &Corpus) -> Result<()> {
        if self.ontology_hash != corpus.ontology.content_hash() {
            return Err(Error::Schema("bundle ontology differs from corpus".into()));
        }
        if self.dialogues.len() != corpus.dialogues.len() {
            return Err(Error::Schema("bundle and corpus differ in dialogues".into()));
        }
        for (b, d) in self.dialogues.iter().zip(&corpus.dialogues) {
            if b.id != d.id || b.vanilla.len() != d.turns.len() || b.pseudo.len() != d.turns.len() {
                return Err(Error::Schema(format!("bundle misaligned at dialogue {}", d.id)));
            }
        }
        Ok(())
    }

    pub fn pseudo_table(&self) -> Vec<DialogueStates> {
        self.dialogues
            .iter()
            .map(|d| DialogueStates {
                id: d.id.clone(),
                states: d.pseudo.clone(),
            })
            .collect()
    }

    /// One line per (dialogue, turn), turns 1-based.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = serde_json::to_string(&serde_json::json!({ "ontology_hash": self.ontology_hash }))?;
        out.push('\n');
        for d in &self.dialogues {
            for t in 0..d.vanilla.len() {
                let line = BundleLine {
                    dialogue_id: d.id.clone(),
                    turn: t + 1,
                    vanilla: d.vanilla[t].clone(),
                    pseudo: d.pseudo[t].clone(),
                    truth: d.truth.as_ref().map(|x| x[t].clone()),
                };
                out.push_str(&serde_json::to_string(&line)?);
                out.push('\n');
            }
        }
        Ok(out)
    }

    pub fn from_jsonl(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            ontology_hash: String,
        }
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header: Header = serde_json::from_str(lines.next().ok_or_else(|| Error::Schema("empty bundle".into()))?)?;
        let mut dialogues: Vec<BundleDialogue> = Vec::new();
        for l in lines {
            let b: BundleLine = serde_json::from_str(l)?;
            let fresh = dialogues.last().map_or(true, |d| d.id != b.dialogue_id);
            if fresh {
                if b.turn != 1 {
                    return Err(Error::Schema(format!("dialogue {} does not start at turn 1", b.dialogue_id)));
                }
                dialogues.push(BundleDialogue {
                    id: b.dialogue_id.clone(),
                    vanilla: Vec::new(),
                    pseudo: Vec::new(),
                    truth: b.truth.as_ref().map(|_| Vec::new()),
                });
            }
            let d = dialogues.last_mut().expect("pushed above");
            if b.turn != d.vanilla.len() + 1 {
                return Err(Error::Schema(format!("dialogue {}: turn {} out of order", d.id, b.turn)));
            }
            d.vanilla.push(b.vanilla);
            d.pseudo.push(b.pseudo);
            match (&mut d.truth, b.truth) {
                (Some(t), Some(x)) => t.push(x),
                (None, None) => {}
                _ => return Err(Error::Schema(format!("dialogue {}: inconsistent truth coverage", d.id))),
            }
        }
        Ok(Self {
            ontology_hash: header.ontology_hash,
            dialogues,
        })
    }
}

/// Subset of {T, C, P}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Composition {
    pub t: bool,
    pub c: bool,
    pub p: bool,
}

impl Composition {
    pub const T: Self = Self { t: true, c: false, p: false };
    pub const P: Self = Self { t: false, c: false, p: true };
    pub const TP: Self = Self { t: true, c: false, p: true };
    pub const TC: Self = Self { t: true, c: true, p: false };
    pub const TCP: Self = Self { t: true, c: true, p: true };

    pub fn is_empty(&self) -> bool {
        !(self.t || self.c || self.p)
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [(self.t, "T"), (self.c, "C"), (self.p, "P")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for Composition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut c = Self { t: false, c: false, p: false };
        for part in s.split('+') {
            let flag = match part.trim() {
                "T" => &mut c.t,
                "C" => &mut c.c,
                "P" => &mut c.p,
                other => return Err(Error::Config(format!("unknown composition part {other:?} in {s:?}"))),
            };
            if *flag {
                return Err(Error::Config(format!("repeated {part} in {s:?}")));
            }
            *flag = true;
        }
        Ok(c)
    }
}

impl Serialize for Composition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Composition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainPlan {
    pub alpha: f64,
    pub composition: Composition,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub peak_lr: f64,
    pub warmup_proportion: f64,
    pub weight_decay: f64,
    /// Evaluate the selection corpus every this many epochs (the last
    /// epoch is always evaluated).
    #[serde(default = "one")]
    pub eval_every: usize,
}

fn one() -> usize {
    1
}

impl TrainPlan {
    pub fn new(composition: Composition, alpha: f64, epochs: usize, seed: u64) -> Self {
        Self {
            alpha,
            composition,
            epochs,
            batch_size: 8,
            seed,
            peak_lr: 3e-4,
            warmup_proportion: 0.1,
            weight_decay: 0.01,
            eval_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.composition.is_empty() {
            return Err(Error::Config("empty composition".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::Config("epochs, batch_size and eval_every must be positive".into()));
        }
        if !(self.peak_lr > 0.0) || !(0.0..=1.0).contains(&self.warmup_proportion) || self.weight_decay < 0.0 {
            return Err(Error::Config("invalid optimizer settings".into()));
        }
        Ok(())
    }

    fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            weight_decay: self.weight_decay,
            ..AdamWConfig::default()
        }
    }
}

/// `α·pseudo + (1−α)·vanilla`, per slot.
pub fn combine_labels(pseudo: &SoftLabelSet, vanilla: &SoftLabelSet, alpha: f64, ontology: &Ontology) -> Result<SoftLabelSet> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    let vectors = pseudo
        .vectors()
        .iter()
        .zip(vanilla.vectors())
        .map(|(p, v)| p.iter().zip(v).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect())
        .collect();
    SoftLabelSet::new(ontology, vectors)
}

/// Training target for one sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Hard(State),
    /// Combined label `α·e(pseudo) + (1−α)·e(vanilla)`.
    Mixed { pseudo: State, vanilla: State, alpha: f64 },
}

#[derive(Debug, Clone)]
pub struct Example<'a> {
    pub dialogue: &'a Dialogue,
    /// 1-based turn.
    pub turn: usize,
    pub previous_state: State,
    pub target: Target,
}

impl Example<'_> {
    fn sample(&self) -> Sample<'_> {
        Sample {
            dialogue_id: &self.dialogue.id,
            turn_index: self.turn,
            context: &self.dialogue.turns[..self.turn],
            previous_state: self.previous_state.clone(),
            labels: match &self.target {
                Target::Hard(s) => s.clone(),
                Target::Mixed { vanilla, .. } => vanilla.clone(),
            },
        }
    }
}

fn examples_from_states<'a>(dialogue: &'a Dialogue, previous: &[State], make: impl Fn(usize) -> Target) -> Vec<Example<'a>> {
    let n = dialogue.turns.len();
    (1..=n)
        .map(|t| Example {
            dialogue,
            turn: t,
            previous_state: if t == 1 {
                vec![0; previous.first().map_or(0, Vec::len)]
            } else {
                previous[t - 2].clone()
            },
            target: make(t - 1),
        })
        .collect()
}

/// Training samples for a composition. The previous-state input follows
/// the label source: vanilla for T and T+P, pseudo for P alone, and true
/// labels for clean samples.
pub fn build_examples<'a>(
    noisy: &'a Corpus,
    bundle: Option<&LabelBundle>,
    clean: Option<&'a Corpus>,
    plan: &TrainPlan,
) -> Result<Vec<Example<'a>>> {
    plan.validate()?;
    let comp = plan.composition;
    if comp.p {
        bundle
            .ok_or_else(|| Error::Config("composition with P needs pseudo labels".into()))?
            .check_covers(noisy)?;
    }
    let mut out = Vec::new();
    if comp.t || comp.p {
        for (i, d) in noisy.dialogues.iter().enumerate() {
            let vanilla = d.states();
            match (comp.t, comp.p) {
                (true, false) => out.extend(examples_from_states(d, &vanilla, |k| Target::Hard(vanilla[k].clone()))),
                (false, true) => {
                    let pseudo = &bundle.expect("checked").dialogues[i].pseudo;
                    out.extend(examples_from_states(d, pseudo, |k| Target::Hard(pseudo[k].clone())))
                }
                _ => {
                    let pseudo = &bundle.expect("checked").dialogues[i].pseudo;
                    out.extend(examples_from_states(d, &vanilla, |k| Target::Mixed {
                        pseudo: pseudo[k].clone(),
                        vanilla: vanilla[k].clone(),
                        alpha: plan.alpha,
                    }))
                }
            }
        }
    }
    if comp.c {
        let clean = clean
            .filter(|c| !c.dialogues.is_empty())
            .ok_or_else(|| Error::Config("composition with C needs a non-empty clean corpus".into()))?;
        if clean.ontology.content_hash() != noisy.ontology.content_hash() {
            return Err(Error::Schema("clean and noisy ontologies differ".into()));
        }
        for d in &clean.dialogues {
            let truth = d.states();
            out.extend(examples_from_states(d, &truth, |k| Target::Hard(truth[k].clone())));
        }
    }
    Ok(out)
}

/// Examples for the auxiliary model: every clean turn with true labels.
pub fn clean_examples(clean: &Corpus) -> Vec<Example<'_>> {
    clean
        .dialogues
        .iter()
        .flat_map(|d| {
            let truth = d.states();
            examples_from_states(d, &truth, |k| Target::Hard(truth[k].clone()))
        })
        .collect()
}

/// Per-batch record of a training step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: u64,
    pub lr: f64,
    /// Mean per-sample loss on the batch (summed over slots).
    pub loss: f64,
    /// For batches of combined targets: mean pseudo-target and
    /// vanilla-target losses under the same dropout masks.
    pub decomposition: Option<(f64, f64)>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub selection_jga: Option<f64>,
    pub selection_slot_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
    /// 0-based epoch whose checkpoint was returned.
    pub best_epoch: usize,
    pub best_selection_jga: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOptions {
    pub exec: Execution,
    /// Recompute the two hard-label losses on combined-label batches.
    pub verify_decomposition: bool,
}

fn one_hot_rows(o: &Ontology, state: &[usize]) -> Vec<Vec<f64>> {
    state
        .iter()
        .enumerate()
        .map(|(s, &v)| {
            let mut e = vec![0.0; o.num_candidates(s)];
            e[v] = 1.0;
            e
        })
        .collect()
}

fn target_vectors(o: &Ontology, t: &Target) -> Vec<Vec<f64>> {
    match t {
        Target::Hard(s) => one_hot_rows(o, s),
        Target::Mixed { pseudo, vanilla, alpha } => one_hot_rows(o, pseudo)
            .into_iter()
            .zip(one_hot_rows(o, vanilla))
            .map(|(p, v)| p.iter().zip(&v).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect())
            .collect(),
    }
}

/// Loss and gradients of one example; the dropout stream is keyed by
/// `(seed, epoch, example index)` so recomputation sees identical masks.
fn example_loss(model: &TrackerModel, ex: &Example<'_>, targets: &[Vec<f64>], seed: u64, epoch: usize, index: usize, grads: bool) -> Result<(f64, Option<Gradients>)> {
    let ids = model.input_ids(&ex.sample())?;
    let mut r = rng::rng(rng::derive_seed(seed, &[b"dropout", &(epoch as u64).to_le_bytes(), &(index as u64).to_le_bytes()]));
    let mut g = Graph::new(&model.store);
    let lp = model.slot_log_probs(&mut g, &ids, Some(&mut r))?;
    let loss = model.soft_loss(&mut g, &lp, targets)?;
    let value = g.value(loss).item();
    if !value.is_finite() {
        return Err(Error::Numerical(format!("non-finite loss {value}")));
    }
    let gr = if grads { Some(g.backward(loss)?) } else { None };
    Ok((value, gr))
}

/// Mini-batch AdamW with linear warmup/decay. After each evaluated epoch
/// the selection corpus is decoded with predicted previous states; the
/// checkpoint with the highest joint goal accuracy is kept, ties broken by
/// slot accuracy and then by the earliest epoch, and loaded into `model`
/// on return.
pub fn train(
    model: &mut TrackerModel,
    examples: &[Example<'_>],
    selection: &Corpus,
    plan: &TrainPlan,
    opts: TrainOptions,
) -> Result<TrainReport> {
    plan.validate()?;
    if examples.is_empty() {
        return Err(Error::Config("no training examples".into()));
    }
    if selection.dialogues.is_empty() {
        return Err(Error::Config("empty selection corpus".into()));
    }
    let o = model.ontology.clone();
    let steps_per_epoch = examples.len().div_ceil(plan.batch_size);
    let schedule = WarmupSchedule {
        peak_lr: plan.peak_lr,
        warmup_proportion: plan.warmup_proportion,
        total_steps: (steps_per_epoch * plan.epochs) as u64,
    };
    let adamw = plan.adamw();
    let mut report = TrainReport {
        steps: Vec::new(),
        epochs: Vec::new(),
        best_epoch: 0,
        best_selection_jga: f64::NEG_INFINITY,
    };
    let mut best: Option<Checkpoint> = None;
    let mut best_key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut step: u64 = 0;
    let mut order: Vec<usize> = (0..examples.len()).collect();

    for epoch in 0..plan.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream_indexed(plan.seed, "shuffle", epoch as u64));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(plan.batch_size) {
            let m: &TrackerModel = model;
            let results = exec::map(opts.exec, batch, |&i| -> Result<(f64, Gradients, Option<(f64, f64)>)> {
                let ex = &examples[i];
                let targets = target_vectors(&o, &ex.target);
                let (loss, grads) = example_loss(m, ex, &targets, plan.seed, epoch, i, true)?;
                let parts = match (&ex.target, opts.verify_decomposition) {
                    (Target::Mixed { pseudo, vanilla, .. }, true) => {
                        let (lp, _) = example_loss(m, ex, &one_hot_rows(&o, pseudo), plan.seed, epoch, i, false)?;
                        let (lv, _) = example_loss(m, ex, &one_hot_rows(&o, vanilla), plan.seed, epoch, i, false)?;
                        Some((lp, lv))
                    }
                    _ => None,
                };
                Ok((loss, grads.expect("requested"), parts))
            });
            let mut total = Gradients::default();
            let mut loss_sum = 0.0;
            let mut parts_sum: Option<(f64, f64)> = None;
            for r in results {
                let (loss, grads, parts) = r?;
                loss_sum += loss;
                total.merge(grads);
                if let Some((a, b)) = parts {
                    let acc = parts_sum.get_or_insert((0.0, 0.0));
                    acc.0 += a;
                    acc.1 += b;
                }
            }
            let n = batch.len() as f64;
            model.store.zero_grad();
            model.store.accumulate(&total, 1.0 / n);
            let lr = schedule.lr_at(step);
            adamw_step(&mut model.store, lr, &adamw);
            let alpha = batch.iter().find_map(|&i| match examples[i].target {
                Target::Mixed { alpha, .. } => Some(alpha),
                Target::Hard(_) => None,
            });
            report.steps.push(StepRecord {
                epoch,
                step,
                lr,
                loss: loss_sum / n,
                decomposition: parts_sum.map(|(a, b)| (a / n, b / n)),
                alpha,
            });
            epoch_loss += loss_sum;
            step += 1;
        }
        let evaluate_now = (epoch + 1) % plan.eval_every == 0 || epoch + 1 == plan.epochs;
        let (selection_jga, selection_slot_accuracy) = if evaluate_now {
            let r = evaluate_model(model, selection, opts.exec)?;
            let key = (r.joint_goal_accuracy, r.slot_accuracy);
            if best.is_none() || key > best_key {
                best_key = key;
                report.best_selection_jga = r.joint_goal_accuracy;
                report.best_epoch = epoch;
                best = Some(Checkpoint::from_store(&model.store));
            }
            (Some(r.joint_goal_accuracy), Some(r.slot_accuracy))
        } else {
            (None, None)
        };
        report.epochs.push(EpochRecord {
            epoch,
            mean_loss: epoch_loss / examples.len() as f64,
            selection_jga,
            selection_slot_accuracy,
        });
    }
    model.load_params(&best.expect("last epoch is always evaluated"))?;
    Ok(report)
}

/// Metrics of `model` against the labels stored in `corpus`, decoding with
/// predicted previous states.
pub fn evaluate_model(model: &TrackerModel, corpus: &Corpus, exec: Execution) -> Result<MetricsReport> {
    let preds = model.predict_corpus(corpus, exec)?;
    let table: Vec<DialogueStates> = corpus
        .dialogues
        .iter()
        .zip(preds)
        .map(|(d, states)| DialogueStates { id: d.id.clone(), states })
        .collect();
    evaluate(&table, &corpus.state_table(), &corpus.ontology, EvalOptions::default())
}

/// Trains a fresh auxiliary tracker on the clean corpus, selecting the
/// epoch by joint goal accuracy on `selection`.
pub fn train_auxiliary(
    model: &mut TrackerModel,
    clean: &Corpus,
    selection: &Corpus,
    plan: &TrainPlan,
    exec: Execution,
) -> Result<TrainReport> {
    if clean.dialogues.is_empty() {
        return Err(Error::Config("auxiliary training needs a non-empty clean corpus".into()));
    }
    model.check_ontology(&clean.ontology)?;
    let examples = clean_examples(clean);
    train(model, &examples, selection, plan, TrainOptions { exec, verify_decomposition: false })
}

/// How the previous-state input is formed while generating pseudo labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PseudoPrevious {
    /// The auxiliary model's own prediction for the previous turn.
    #[default]
    Predicted,
    /// The corpus (vanilla) label of the previous turn.
    Vanilla,
}

/// Pseudo labels for every turn of every dialogue of `noisy`.
pub fn generate_pseudo(model: &TrackerModel, noisy: &Corpus, previous: PseudoPrevious, exec: Execution) -> Result<Vec<Vec<State>>> {
    model.check_ontology(&noisy.ontology)?;
    match previous {
        PseudoPrevious::Predicted => model.predict_corpus(noisy, exec),
        PseudoPrevious::Vanilla => model.predict_corpus_teacher_forced(noisy, exec),
    }
}

/// Pseudo labels with the model's predicted previous state (convenience
/// over [`generate_pseudo`] for callers that hold a dialogue).
pub fn pseudo_for_dialogue(model: &TrackerModel, d: &Dialogue) -> Result<Vec<State>> {
    model.predict_dialogue(d, PreviousState::Predicted)
}

/// Trains the primary tracker on the composition's training stream.
pub fn train_primary(
    model: &mut TrackerModel,
    noisy: &Corpus,
    bundle: Option<&LabelBundle>,
    clean: Option<&Corpus>,
    selection: &Corpus,
    plan: &TrainPlan,
    opts: TrainOptions,
) -> Result<TrainReport> {
    model.check_ontology(&noisy.ontology)?;
    let examples = build_examples(noisy, bundle, clean, plan)?;
    train(model, &examples, selection, plan, opts)
}
