//! Slot-attention tracker: a small trainable context encoder, a frozen
//! label encoder for slot and value strings, multi-head slot attention,
//! a linear + layer-norm projection, and distance-based value matching.

use std::path::Path;
use std::sync::Arc;

use assist_numeric::{
    neg_distances, softmax_rows, Checkpoint, Dropout, Graph, LayerNorm, Linear, MultiHeadAttention, ParamId,
    ParameterStore, Tensor, Var,
};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::dialogue::{build_input_sequence, tokenize, Corpus, Dialogue, Ontology, Sample, State, Vocabulary, CLS, SEP};
use crate::exec::{self, Execution};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads_encoder: usize,
    pub n_heads_slot_attention: usize,
    /// Feed-forward inner width.
    pub d_ff: usize,
    pub max_len: usize,
    pub dropout: f64,
    /// Probability of replacing a non-marker input token by `[UNK]` in training.
    pub word_dropout: f64,
    /// Standard deviation of the random weight initialization.
    pub init_std: f64,
    /// Initialization scale of the frozen label encoder's attention
    /// value/output projections. Much larger than `init_std`, so the
    /// `[CLS]` readout is dominated by the label tokens and candidate
    /// vectors are well separated.
    pub label_init_std: f64,
    /// Initialization scale of the slot-attention projections. With the
    /// generic small scale every slot query starts out attending uniformly
    /// and all slots receive the same vector.
    pub slot_attention_init_std: f64,
    pub seed: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            d_model: 64,
            n_layers: 2,
            n_heads_encoder: 4,
            n_heads_slot_attention: 4,
            d_ff: 256,
            max_len: 128,
            dropout: 0.1,
            word_dropout: 0.1,
            init_std: 0.02,
            label_init_std: 0.5,
            slot_attention_init_std: 0.2,
            seed: 0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.n_layers == 0 || self.d_ff == 0 {
            return Err(Error::Config("d_model, n_layers and d_ff must be positive".into()));
        }
        for h in [self.n_heads_encoder, self.n_heads_slot_attention] {
            if h == 0 || self.d_model % h != 0 {
                return Err(Error::Config(format!("d_model {} not divisible by {h} heads", self.d_model)));
            }
        }
        if self.max_len < 8 {
            return Err(Error::Config(format!("max_len {} < 8", self.max_len)));
        }
        for (name, p) in [("dropout", self.dropout), ("word_dropout", self.word_dropout)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} outside [0, 1)")));
            }
        }
        if !(self.init_std > 0.0) || !(self.label_init_std > 0.0) || !(self.slot_attention_init_std > 0.0) {
            return Err(Error::Config("initialization scales must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Block {
    attn: MultiHeadAttention,
    ln1: LayerNorm,
    ff_in: Linear,
    ff_out: Linear,
    ln2: LayerNorm,
}

/// Token + position + segment embeddings followed by post-norm
/// transformer blocks.
#[derive(Debug, Clone)]
pub struct Encoder {
    tok: ParamId,
    pos: ParamId,
    seg: ParamId,
    ln: LayerNorm,
    blocks: Vec<Block>,
    max_len: usize,
}

impl Encoder {
    /// `mix_std` initializes the token embeddings and the attention
    /// value/output projections, every other weight uses `cfg.init_std`.
    fn new<R: Rng>(store: &mut ParameterStore, prefix: &str, vocab_len: usize, cfg: &TrackerConfig, mix_std: f64, r: &mut R) -> Result<Self> {
        let std = cfg.init_std;
        let d = cfg.d_model;
        let tok = store.add_normal(format!("{prefix}.tok"), &[vocab_len, d], mix_std, r);
        let pos = store.add(format!("{prefix}.pos"), sinusoid(cfg.max_len, d, std), true);
        let seg = store.add_normal(format!("{prefix}.seg"), &[2, d], std, r);
        let ln = LayerNorm::new(store, &format!("{prefix}.emb_ln"), d);
        let mut blocks = Vec::with_capacity(cfg.n_layers);
        for l in 0..cfg.n_layers {
            let p = format!("{prefix}.layer{l}");
            let attn = MultiHeadAttention::new(store, &format!("{p}.attn"), d, cfg.n_heads_encoder, r)?;
            reinit(store, &[attn.query.weight, attn.key.weight], std, r);
            reinit(store, &[attn.value.weight, attn.output.weight], mix_std, r);
            let ln1 = LayerNorm::new(store, &format!("{p}.ln1"), d);
            let ff_in = Linear::new(store, &format!("{p}.ff_in"), d, cfg.d_ff, r);
            let ff_out = Linear::new(store, &format!("{p}.ff_out"), cfg.d_ff, d, r);
            reinit(store, &[ff_in.weight, ff_out.weight], std, r);
            let ln2 = LayerNorm::new(store, &format!("{p}.ln2"), d);
            blocks.push(Block {
                attn,
                ln1,
                ff_in,
                ff_out,
                ln2,
            });
        }
        Ok(Self {
            tok,
            pos,
            seg,
            ln,
            blocks,
            max_len: cfg.max_len,
        })
    }

    /// `n×d` hidden states. `dropout` is `Some` only in training mode.
    pub fn forward(&self, g: &mut Graph<'_>, ids: &[usize], segments: &[usize], mut dropout: Option<&mut Dropout<'_>>) -> Result<Var> {
        let n = ids.len();
        if n == 0 || n > self.max_len || segments.len() != n {
            return Err(Error::Config(format!("input of {n} tokens (max_len {})", self.max_len)));
        }
        let tok = g.param(self.tok);
        let pos = g.param(self.pos);
        let seg = g.param(self.seg);
        let e = g.gather(tok, ids)?;
        let positions: Vec<usize> = (0..n).collect();
        let p = g.gather(pos, &positions)?;
        let s = g.gather(seg, segments)?;
        let x = g.add(e, p)?;
        let x = g.add(x, s)?;
        let mut x = self.ln.forward(g, x)?;
        if let Some(d) = dropout.as_deref_mut() {
            x = d.apply(g, x)?;
        }
        for b in &self.blocks {
            let mut a = b.attn.forward(g, x, x, x, dropout.as_deref_mut())?;
            if let Some(d) = dropout.as_deref_mut() {
                a = d.apply(g, a)?;
            }
            let r = g.add(x, a)?;
            x = b.ln1.forward(g, r)?;
            let h = b.ff_in.forward(g, x)?;
            let h = g.gelu(h);
            let mut f = b.ff_out.forward(g, h)?;
            if let Some(d) = dropout.as_deref_mut() {
                f = d.apply(g, f)?;
            }
            let r = g.add(x, f)?;
            x = b.ln2.forward(g, r)?;
        }
        Ok(x)
    }
}

/// Sinusoidal position table with amplitude `scale`; odd widths leave the
/// last column zero.
fn sinusoid(len: usize, d: usize, scale: f64) -> Tensor {
    let mut t = Tensor::zeros(&[len, d]);
    let data = t.data_mut();
    for p in 0..len {
        for i in 0..d / 2 {
            let w = p as f64 / 10000f64.powf(2.0 * i as f64 / d as f64);
            data[p * d + 2 * i] = scale * w.sin();
            data[p * d + 2 * i + 1] = scale * w.cos();
        }
    }
    t
}

fn reinit<R: Rng>(store: &mut ParameterStore, ids: &[ParamId], std: f64, r: &mut R) {
    use rand_distr::StandardNormal;
    for &id in ids {
        for x in store.get_mut(id).value.data_mut() {
            *x = std * r.sample::<f64, _>(StandardNormal);
        }
    }
}

/// Segment 0 up to and including the first `[SEP]`, 1 afterwards.
pub fn segment_ids(ids: &[usize]) -> Vec<usize> {
    let split = ids.iter().position(|&i| i == Vocabulary::SEP_ID).map_or(1, |p| p + 1);
    (0..ids.len()).map(|i| usize::from(i >= split)).collect()
}

/// The tracker. Trainable parameters live in `store`; the label encoder's
/// parameters live in a separate store that no training graph ever sees,
/// and its outputs for every slot and candidate are cached at construction.
#[derive(Debug, Clone)]
pub struct TrackerModel {
    pub config: TrackerConfig,
    pub ontology: Arc<Ontology>,
    pub vocab: Vocabulary,
    pub store: ParameterStore,
    encoder: Encoder,
    slot_attention: MultiHeadAttention,
    projection: Linear,
    projection_ln: LayerNorm,
    label_store: ParameterStore,
    label_encoder: Encoder,
    slot_vectors: Arc<Tensor>,
    value_vectors: Vec<Arc<Tensor>>,
}

impl TrackerModel {
    /// Random initialization from `config.seed`. The label encoder has the
    /// context encoder's architecture with its own random weights, frozen.
    pub fn new(config: TrackerConfig, ontology: Arc<Ontology>, vocab: Vocabulary) -> Result<Self> {
        config.validate()?;
        if ontology.num_slots() == 0 {
            return Err(Error::Config("empty ontology".into()));
        }
        let d = config.d_model;
        let mut store = ParameterStore::new();
        let mut r = rng::stream(config.seed, "tracker-init");
        let encoder = Encoder::new(&mut store, "encoder", vocab.len(), &config, config.init_std, &mut r)?;
        let mut label_store = ParameterStore::new();
        let label_encoder = Encoder::new(
            &mut label_store,
            "label_encoder",
            vocab.len(),
            &config,
            config.label_init_std,
            &mut rng::stream(config.seed, "label-encoder-init"),
        )?;
        let slot_attention = MultiHeadAttention::new(&mut store, "slot_attention", d, config.n_heads_slot_attention, &mut r)?;
        reinit(
            &mut store,
            &[slot_attention.query.weight, slot_attention.key.weight, slot_attention.value.weight, slot_attention.output.weight],
            config.slot_attention_init_std,
            &mut r,
        );
        let projection = Linear::new(&mut store, "projection", d, d, &mut r);
        reinit(&mut store, &[projection.weight], config.init_std, &mut r);
        let projection_ln = LayerNorm::new(&mut store, "projection_ln", d);

        let mut model = Self {
            config,
            ontology,
            vocab,
            store,
            encoder,
            slot_attention,
            projection,
            projection_ln,
            label_store,
            label_encoder,
            slot_vectors: Arc::new(Tensor::zeros(&[0])),
            value_vectors: Vec::new(),
        };
        model.cache_label_vectors()?;
        Ok(model)
    }

    fn cache_label_vectors(&mut self) -> Result<()> {
        let o = self.ontology.clone();
        let slots: Vec<Vec<f64>> = o.slots().iter().map(|s| self.encode_label(s)).collect::<Result<_>>()?;
        self.slot_vectors = Arc::new(Tensor::from_rows(&slots)?);
        self.value_vectors = (0..o.num_slots())
            .map(|s| {
                let rows = o.candidates(s).iter().map(|v| self.encode_label(v)).collect::<Result<Vec<_>>>()?;
                Ok(Arc::new(Tensor::from_rows(&rows)?))
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Frozen encoder output at `[CLS]` for `[CLS] text [SEP]`.
    pub fn encode_label(&self, text: &str) -> Result<Vec<f64>> {
        let mut tokens = vec![CLS.to_string()];
        tokens.extend(tokenize(text).map(str::to_string));
        tokens.push(SEP.to_string());
        tokens.truncate(self.config.max_len);
        let ids = self.vocab.ids(&tokens);
        let segs = vec![0; ids.len()];
        let mut g = Graph::new(&self.label_store);
        let h = self.label_encoder.forward(&mut g, &ids, &segs, None)?;
        Ok(g.value(h).row(0).to_vec())
    }

    pub fn label_store(&self) -> &ParameterStore {
        &self.label_store
    }

    pub fn slot_vectors(&self) -> &Tensor {
        &self.slot_vectors
    }

    pub fn value_vectors(&self, slot: usize) -> &Tensor {
        &self.value_vectors[slot]
    }

    /// Input ids for a sample, left-truncated to `max_len`.
    pub fn input_ids(&self, sample: &Sample<'_>) -> Result<Vec<usize>> {
        let tokens = build_input_sequence(sample, &self.ontology, self.config.max_len)?;
        Ok(self.vocab.ids(&tokens))
    }

    /// `H_t` in eval mode.
    pub fn encode_context(&self, tokens: &[String]) -> Result<Tensor> {
        if tokens.len() > self.config.max_len {
            return Err(Error::Config(format!("{} tokens exceed max_len {}", tokens.len(), self.config.max_len)));
        }
        let ids = self.vocab.ids(tokens);
        let mut g = Graph::new(&self.store);
        let h = self.encoder.forward(&mut g, &ids, &segment_ids(&ids), None)?;
        Ok(g.value(h).clone())
    }

    /// `g = LayerNorm(Linear(MultiHead(h_s, H, H)))` for every row of `queries`.
    fn project_slots(&self, g: &mut Graph<'_>, queries: Var, hidden: Var, dropout: Option<&mut Dropout<'_>>) -> Result<Var> {
        let a = self.slot_attention.forward(g, queries, hidden, hidden, dropout)?;
        let p = self.projection.forward(g, a)?;
        Ok(self.projection_ln.forward(g, p)?)
    }

    /// Slot-specific vector for a single query `h_s` against `hidden` (n×d).
    pub fn slot_specific_vector(&self, h_s: &[f64], hidden: &Tensor) -> Result<Vec<f64>> {
        let mut g = Graph::new(&self.store);
        let q = g.input(Tensor::row_vector(h_s.to_vec()));
        let h = g.input(hidden.clone());
        let out = self.project_slots(&mut g, q, h, None)?;
        Ok(g.value(out).row(0).to_vec())
    }

    /// Per-slot `1×K_s` rows of log-probabilities. `train` carries the
    /// dropout stream in training mode.
    pub fn slot_log_probs(&self, g: &mut Graph<'_>, ids: &[usize], train: Option<&mut dyn RngCore>) -> Result<Vec<Var>> {
        let cfg = &self.config;
        let (ids, mut dropout) = match train {
            Some(r) => {
                let ids: Vec<usize> = ids
                    .iter()
                    .map(|&i| {
                        let marker = i <= Vocabulary::SEP_ID;
                        if !marker && cfg.word_dropout > 0.0 && r.gen::<f64>() < cfg.word_dropout {
                            Vocabulary::UNK_ID
                        } else {
                            i
                        }
                    })
                    .collect();
                (ids, Some(Dropout { p: cfg.dropout, rng: r }))
            }
            None => (ids.to_vec(), None),
        };
        let segs = segment_ids(&ids);
        let hidden = self.encoder.forward(g, &ids, &segs, dropout.as_mut())?;
        let queries = g.input((*self.slot_vectors).clone());
        let gs = self.project_slots(g, queries, hidden, dropout.as_mut())?;
        (0..self.ontology.num_slots())
            .map(|s| {
                let row = g.row(gs, s)?;
                let nd = g.neg_distances(row, self.value_vectors[s].clone())?;
                Ok(g.log_softmax(nd))
            })
            .collect()
    }

    /// Sum over slots of `−Σ_k w_k log p(k)`.
    pub fn soft_loss(&self, g: &mut Graph<'_>, log_probs: &[Var], targets: &[Vec<f64>]) -> Result<Var> {
        if targets.len() != log_probs.len() {
            return Err(Error::Schema(format!("{} targets for {} slots", targets.len(), log_probs.len())));
        }
        let terms = log_probs
            .iter()
            .zip(targets)
            .map(|(&lp, t)| {
                let w: Vec<f64> = t.iter().map(|x| -x).collect();
                Ok(g.weighted_sum(lp, w)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(g.sum_scalars(&terms)?)
    }

    pub fn hard_targets(&self, targets: &[usize]) -> Result<Vec<Vec<f64>>> {
        if targets.len() != self.ontology.num_slots() {
            return Err(Error::Schema(format!("{} targets for {} slots", targets.len(), self.ontology.num_slots())));
        }
        self.ontology.validate_state(targets)?;
        Ok(targets
            .iter()
            .enumerate()
            .map(|(s, &v)| {
                let mut e = vec![0.0; self.ontology.num_candidates(s)];
                e[v] = 1.0;
                e
            })
            .collect())
    }

    fn check_soft(&self, targets: &[Vec<f64>]) -> Result<()> {
        if targets.len() != self.ontology.num_slots() {
            return Err(Error::Schema(format!("{} targets for {} slots", targets.len(), self.ontology.num_slots())));
        }
        for (s, t) in targets.iter().enumerate() {
            if t.len() != self.ontology.num_candidates(s) {
                return Err(Error::Schema(format!("slot {s}: target of length {}", t.len())));
            }
        }
        Ok(())
    }

    /// `Σ_s −log p(target_s)` in eval mode.
    pub fn loss_hard(&self, sample: &Sample<'_>, targets: &[usize]) -> Result<f64> {
        let t = self.hard_targets(targets)?;
        self.loss_soft_vectors(sample, &t)
    }

    /// `Σ_s −Σ_k v_k log p(k)` in eval mode.
    pub fn loss_soft(&self, sample: &Sample<'_>, targets: &crate::dialogue::SoftLabelSet) -> Result<f64> {
        self.loss_soft_vectors(sample, targets.vectors())
    }

    fn loss_soft_vectors(&self, sample: &Sample<'_>, targets: &[Vec<f64>]) -> Result<f64> {
        self.check_soft(targets)?;
        let ids = self.input_ids(sample)?;
        let mut g = Graph::new(&self.store);
        let lp = self.slot_log_probs(&mut g, &ids, None)?;
        let loss = self.soft_loss(&mut g, &lp, targets)?;
        Ok(g.value(loss).item())
    }

    /// Per-slot value distributions and argmin-distance predictions.
    pub fn predict_ids(&self, ids: &[usize]) -> Result<(State, Vec<Vec<f64>>)> {
        let mut g = Graph::new(&self.store);
        let hidden = self.encoder.forward(&mut g, ids, &segment_ids(ids), None)?;
        let queries = g.input((*self.slot_vectors).clone());
        let gs = self.project_slots(&mut g, queries, hidden, None)?;
        let gt = g.value(gs);
        let mut state = Vec::with_capacity(self.ontology.num_slots());
        let mut dists = Vec::with_capacity(self.ontology.num_slots());
        for s in 0..self.ontology.num_slots() {
            let row = gt.row(s);
            state.push(predict(row, &self.value_vectors[s])?);
            dists.push(value_distribution(row, &self.value_vectors[s])?);
        }
        Ok((state, dists))
    }

    pub fn predict_sample(&self, sample: &Sample<'_>) -> Result<State> {
        Ok(self.predict_ids(&self.input_ids(sample)?)?.0)
    }

    /// Predicted states for every turn. With [`PreviousState::Predicted`]
    /// each turn's previous-state input is the model's own prediction for
    /// the turn before; with `Given` it is read from `given`.
    pub fn predict_dialogue(&self, dialogue: &Dialogue, previous: PreviousState<'_>) -> Result<Vec<State>> {
        let o = &self.ontology;
        let mut out: Vec<State> = Vec::with_capacity(dialogue.turns.len());
        for t in 1..=dialogue.turns.len() {
            let previous_state = match previous {
                PreviousState::Predicted => {
                    if t == 1 {
                        o.empty_state()
                    } else {
                        out[t - 2].clone()
                    }
                }
                PreviousState::Given(states) => {
                    if t == 1 {
                        o.empty_state()
                    } else {
                        states[t - 2].clone()
                    }
                }
            };
            let sample = Sample {
                dialogue_id: &dialogue.id,
                turn_index: t,
                context: &dialogue.turns[..t],
                previous_state,
                labels: o.empty_state(),
            };
            out.push(self.predict_sample(&sample)?);
        }
        Ok(out)
    }

    /// Predictions for a whole corpus using predicted previous states.
    pub fn predict_corpus(&self, corpus: &Corpus, exec: Execution) -> Result<Vec<Vec<State>>> {
        self.check_ontology(&corpus.ontology)?;
        exec::map(exec, &corpus.dialogues, |d| self.predict_dialogue(d, PreviousState::Predicted))
            .into_iter()
            .collect()
    }

    /// Teacher-forced predictions: previous state from the corpus labels.
    pub fn predict_corpus_teacher_forced(&self, corpus: &Corpus, exec: Execution) -> Result<Vec<Vec<State>>> {
        self.check_ontology(&corpus.ontology)?;
        exec::map(exec, &corpus.dialogues, |d| {
            let states = d.states();
            self.predict_dialogue(d, PreviousState::Given(&states))
        })
        .into_iter()
        .collect()
    }

    pub fn check_ontology(&self, other: &Ontology) -> Result<()> {
        if other.content_hash() != self.ontology.content_hash() {
            return Err(Error::Schema("ontology does not match the model".into()));
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> TrackerCheckpoint {
        TrackerCheckpoint {
            config: self.config.clone(),
            ontology_hash: self.ontology.content_hash(),
            vocabulary: self.vocab.clone(),
            params: Checkpoint::from_store(&self.store),
        }
    }

    /// Rebuilds a model from a checkpoint, refusing a different ontology.
    pub fn from_checkpoint(ckpt: &TrackerCheckpoint, ontology: Arc<Ontology>) -> Result<Self> {
        if ckpt.ontology_hash != ontology.content_hash() {
            return Err(Error::Schema(format!(
                "checkpoint ontology {} does not match {}",
                ckpt.ontology_hash,
                ontology.content_hash()
            )));
        }
        let mut vocab = ckpt.vocabulary.clone();
        vocab.reindex();
        let mut model = Self::new(ckpt.config.clone(), ontology, vocab)?;
        ckpt.params.apply(&mut model.store)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&self.to_checkpoint())?)?;
        Ok(())
    }

    pub fn load(path: &Path, ontology: Arc<Ontology>) -> Result<Self> {
        let ckpt: TrackerCheckpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_checkpoint(&ckpt, ontology)
    }

    /// Replaces the trainable parameter values (same layout).
    pub fn load_params(&mut self, params: &Checkpoint) -> Result<()> {
        Ok(params.apply(&mut self.store)?)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PreviousState<'a> {
    Predicted,
    Given(&'a [State]),
}

/// Checkpoint header plus parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerCheckpoint {
    pub config: TrackerConfig,
    pub ontology_hash: String,
    pub vocabulary: Vocabulary,
    pub params: Checkpoint,
}

/// `softmax(−‖g − h_v‖)` over candidate rows.
pub fn value_distribution(g: &[f64], candidates: &Tensor) -> Result<Vec<f64>> {
    if candidates.rows() == 0 || candidates.len() == 0 {
        return Err(Error::Schema("empty candidate list".into()));
    }
    let nd = Tensor::row_vector(neg_distances(g, candidates));
    Ok(softmax_rows(&nd).into_data())
}

/// Index of the nearest candidate; ties go to the lowest index.
pub fn predict(g: &[f64], candidates: &Tensor) -> Result<usize> {
    if candidates.rows() == 0 || candidates.len() == 0 {
        return Err(Error::Schema("empty candidate list".into()));
    }
    let nd = neg_distances(g, candidates);
    let mut best = 0;
    for (i, &x) in nd.iter().enumerate() {
        if x > nd[best] {
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_softmax_two_candidates() {
        let c = Tensor::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let p = value_distribution(&[0.0, 0.0], &c).unwrap();
        let e = (-1.0f64).exp();
        assert!((p[0] - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((p[1] - e / (1.0 + e)).abs() < 1e-12);
        assert_eq!(predict(&[0.0, 0.0], &c).unwrap(), 0);
    }

    #[test]
    fn equidistant_ties_pick_zero() {
        let c = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let p = value_distribution(&[0.0, 0.0], &c).unwrap();
        for x in &p {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(predict(&[0.0, 0.0], &c).unwrap(), 0);
    }

    #[test]
    fn empty_candidates_error() {
        let c = Tensor::zeros(&[0, 2]);
        assert!(value_distribution(&[0.0, 0.0], &c).is_err());
        assert!(predict(&[0.0, 0.0], &c).is_err());
    }

    #[test]
    fn segments_split_after_first_sep() {
        assert_eq!(segment_ids(&[2, 7, 3, 8, 3]), vec![0, 0, 0, 1, 1]);
        assert_eq!(segment_ids(&[2, 7]), vec![0, 1]);
    }

    #[test]
    fn config_validation() {
        let mut c = TrackerConfig::default();
        assert!(c.validate().is_ok());
        c.n_heads_slot_attention = 3;
        assert!(c.validate().is_err());
        let c = TrackerConfig {
            max_len: 7,
            ..TrackerConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
