//! Ontologies, dialogues, per-turn states and label vectors.
//!
//! States are dense: one candidate index per ontology slot, in ontology slot
//! order, with index 0 meaning `"none"`.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const NONE: &str = "none";
pub const DONTCARE: &str = "dontcare";
pub const NONE_INDEX: usize = 0;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

/// One candidate index per slot, in ontology order.
pub type State = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    slots: Vec<String>,
    candidates: Vec<Vec<String>>,
    slot_index: HashMap<String, usize>,
    value_index: Vec<HashMap<String, usize>>,
}

impl Ontology {
    /// Validates slot uniqueness, duplicate-free candidate lists, `"none"`
    /// at index 0 and the presence of `"dontcare"`.
    pub fn new(entries: Vec<(String, Vec<String>)>) -> Result<Self> {
        let mut slots = Vec::with_capacity(entries.len());
        let mut candidates = Vec::with_capacity(entries.len());
        let mut slot_index = HashMap::new();
        let mut value_index = Vec::with_capacity(entries.len());
        for (slot, values) in entries {
            if slot_index.insert(slot.clone(), slots.len()).is_some() {
                return Err(Error::Schema(format!("duplicate slot {slot}")));
            }
            if values.first().map(String::as_str) != Some(NONE) {
                return Err(Error::Schema(format!("slot {slot}: \"none\" must be candidate 0")));
            }
            if !values.iter().any(|v| v == DONTCARE) {
                return Err(Error::Schema(format!("slot {slot}: missing \"dontcare\"")));
            }
            let mut idx = HashMap::with_capacity(values.len());
            for (i, v) in values.iter().enumerate() {
                if idx.insert(v.clone(), i).is_some() {
                    return Err(Error::Schema(format!("slot {slot}: duplicate value {v}")));
                }
            }
            slots.push(slot);
            candidates.push(values);
            value_index.push(idx);
        }
        Ok(Self {
            slots,
            candidates,
            slot_index,
            value_index,
        })
    }

    /// Like [`Ontology::new`] but inserts `"none"` at the front and appends
    /// `"dontcare"` where missing. Used when loading external data.
    pub fn normalized(entries: Vec<(String, Vec<String>)>) -> Result<Self> {
        let fixed = entries
            .into_iter()
            .map(|(slot, values)| {
                let mut out = vec![NONE.to_string()];
                out.extend(values.into_iter().filter(|v| v != NONE));
                if !out.iter().any(|v| v == DONTCARE) {
                    out.push(DONTCARE.to_string());
                }
                (slot, out)
            })
            .collect();
        Self::new(fixed)
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn candidates(&self, slot: usize) -> &[String] {
        &self.candidates[slot]
    }

    pub fn num_candidates(&self, slot: usize) -> usize {
        self.candidates[slot].len()
    }

    pub fn slot_index(&self, slot: &str) -> Option<usize> {
        self.slot_index.get(slot).copied()
    }

    pub fn value_index(&self, slot: usize, value: &str) -> Option<usize> {
        self.value_index[slot].get(value).copied()
    }

    pub fn dontcare_index(&self, slot: usize) -> usize {
        self.value_index[slot][DONTCARE]
    }

    /// Domain prefix of a `domain-slotname` identifier.
    pub fn domain_of(slot: &str) -> &str {
        slot.split_once('-').map_or(slot, |(d, _)| d)
    }

    /// Distinct domains in first-appearance order.
    pub fn domains(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for s in &self.slots {
            let d = Self::domain_of(s);
            if seen.insert(d.to_string()) {
                out.push(d.to_string());
            }
        }
        out
    }

    pub fn empty_state(&self) -> State {
        vec![NONE_INDEX; self.slots.len()]
    }

    pub fn validate_state(&self, state: &[usize]) -> Result<()> {
        if state.len() != self.slots.len() {
            return Err(Error::Schema(format!(
                "state covers {} slots, ontology has {}",
                state.len(),
                self.slots.len()
            )));
        }
        for (s, &v) in state.iter().enumerate() {
            if v >= self.candidates[s].len() {
                return Err(Error::Schema(format!(
                    "slot {}: value index {v} out of {} candidates",
                    self.slots[s],
                    self.candidates[s].len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_map(&self) -> IndexMap<String, Vec<String>> {
        self.slots
            .iter()
            .cloned()
            .zip(self.candidates.iter().cloned())
            .collect()
    }

    /// Stable content hash of slots and candidate lists (hex SHA-256).
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for (s, c) in self.slots.iter().zip(&self.candidates) {
            h.update(s.as_bytes());
            h.update([0u8]);
            for v in c {
                h.update(v.as_bytes());
                h.update([1u8]);
            }
            h.update([2u8]);
        }
        hex::encode(h.finalize())
    }
}

impl Serialize for Ontology {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ontology {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = IndexMap::<String, Vec<String>>::deserialize(d)?;
        Ontology::normalized(map.into_iter().collect()).map_err(serde::de::Error::custom)
    }
}

/// Whitespace tokenization.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub system: String,
    pub user: String,
    pub state: State,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub id: String,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    pub fn states(&self) -> Vec<State> {
        self.turns.iter().map(|t| t.state.clone()).collect()
    }
}

/// An ontology plus dialogues whose states index into it.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub ontology: Arc<Ontology>,
    pub dialogues: Vec<Dialogue>,
}

impl Corpus {
    pub fn new(ontology: Arc<Ontology>, dialogues: Vec<Dialogue>) -> Result<Self> {
        let c = Self {
            ontology,
            dialogues,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for d in &self.dialogues {
            if !ids.insert(d.id.as_str()) {
                return Err(Error::Schema(format!("duplicate dialogue id {}", d.id)));
            }
            if d.turns.is_empty() {
                return Err(Error::Schema(format!("dialogue {} has no turns", d.id)));
            }
            for t in &d.turns {
                self.ontology.validate_state(&t.state)?;
            }
        }
        Ok(())
    }

    pub fn num_turns(&self) -> usize {
        self.dialogues.iter().map(|d| d.turns.len()).sum()
    }

    pub fn with_dialogues(&self, dialogues: Vec<Dialogue>) -> Corpus {
        Corpus {
            ontology: self.ontology.clone(),
            dialogues,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&CorpusFile::from_corpus(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: CorpusFile = serde_json::from_str(s)?;
        file.into_corpus()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Per-dialogue state sequences, in corpus order.
    pub fn state_table(&self) -> Vec<DialogueStates> {
        self.dialogues
            .iter()
            .map(|d| DialogueStates {
                id: d.id.clone(),
                states: d.states(),
            })
            .collect()
    }
}

/// State sequence of one dialogue (gold, noisy, pseudo or predicted).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueStates {
    pub id: String,
    pub states: Vec<State>,
}

#[derive(Serialize, Deserialize)]
struct CorpusFile {
    ontology: Ontology,
    dialogues: Vec<DialogueFile>,
}

#[derive(Serialize, Deserialize)]
struct DialogueFile {
    id: String,
    turns: Vec<TurnFile>,
}

#[derive(Serialize, Deserialize)]
struct TurnFile {
    system: String,
    user: String,
    #[serde(default)]
    state: IndexMap<String, String>,
}

impl CorpusFile {
    fn from_corpus(c: &Corpus) -> Self {
        let o = &c.ontology;
        Self {
            ontology: (**o).clone(),
            dialogues: c
                .dialogues
                .iter()
                .map(|d| DialogueFile {
                    id: d.id.clone(),
                    turns: d
                        .turns
                        .iter()
                        .map(|t| TurnFile {
                            system: t.system.clone(),
                            user: t.user.clone(),
                            state: state_to_map(o, &t.state),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    fn into_corpus(self) -> Result<Corpus> {
        let o = Arc::new(self.ontology);
        let dialogues = self
            .dialogues
            .into_iter()
            .map(|d| {
                let turns = d
                    .turns
                    .into_iter()
                    .map(|t| {
                        Ok(Turn {
                            system: t.system,
                            user: t.user,
                            state: state_from_map(&o, &t.state)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Dialogue { id: d.id, turns })
            })
            .collect::<Result<Vec<_>>>()?;
        Corpus::new(o, dialogues)
    }
}

/// Slot → value map omitting `"none"` slots.
pub fn state_to_map(o: &Ontology, state: &[usize]) -> IndexMap<String, String> {
    state
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != NONE_INDEX)
        .map(|(s, &v)| (o.slots()[s].clone(), o.candidates(s)[v].clone()))
        .collect()
}

pub fn state_from_map(o: &Ontology, map: &IndexMap<String, String>) -> Result<State> {
    let mut state = o.empty_state();
    for (slot, value) in map {
        let s = o
            .slot_index(slot)
            .ok_or_else(|| Error::Schema(format!("unknown slot {slot}")))?;
        state[s] = o
            .value_index(s, value)
            .ok_or_else(|| Error::Schema(format!("slot {slot}: unknown value {value}")))?;
    }
    Ok(state)
}

/// One training sample: the dialogue context up to turn `t` (1-based).
#[derive(Debug, Clone)]
pub struct Sample<'a> {
    pub dialogue_id: &'a str,
    pub turn_index: usize,
    /// Turns `1..=t`.
    pub context: &'a [Turn],
    /// State at turn `t-1`; all-none for `t = 1`.
    pub previous_state: State,
    pub labels: State,
}

impl<'a> Sample<'a> {
    /// Sample for turn `t` with labels and previous state taken from
    /// `states` (any label source aligned with the dialogue's turns).
    pub fn from_states(
        dialogue: &'a Dialogue,
        t: usize,
        states: &[State],
        ontology: &Ontology,
    ) -> Result<Self> {
        if t == 0 || t > dialogue.turns.len() || states.len() != dialogue.turns.len() {
            return Err(Error::Schema(format!(
                "turn {t} of dialogue {} ({} turns, {} states)",
                dialogue.id,
                dialogue.turns.len(),
                states.len()
            )));
        }
        let previous_state = if t == 1 {
            ontology.empty_state()
        } else {
            states[t - 2].clone()
        };
        Ok(Self {
            dialogue_id: &dialogue.id,
            turn_index: t,
            context: &dialogue.turns[..t],
            previous_state,
            labels: states[t - 1].clone(),
        })
    }

    pub fn current_turn(&self) -> &Turn {
        &self.context[self.turn_index - 1]
    }
}

/// `[CLS] X_{t-1} B_{t-1} [SEP] R_t U_t [SEP]`, left-truncated to `max_len`
/// with `[CLS]` kept at position 0. `B_{t-1}` lists non-none slots in
/// ontology order as `slot value...`.
pub fn build_input_sequence(sample: &Sample<'_>, ontology: &Ontology, max_len: usize) -> Result<Vec<String>> {
    if max_len < 8 {
        return Err(Error::Config(format!("max_len {max_len} < 8")));
    }
    ontology.validate_state(&sample.previous_state)?;
    if sample.context.len() != sample.turn_index || sample.turn_index == 0 {
        return Err(Error::Schema("context length must equal turn index".into()));
    }
    let mut body: Vec<String> = Vec::new();
    for turn in &sample.context[..sample.turn_index - 1] {
        body.extend(tokenize(&turn.system).map(str::to_string));
        body.extend(tokenize(&turn.user).map(str::to_string));
    }
    for (s, &v) in sample.previous_state.iter().enumerate() {
        if v != NONE_INDEX {
            body.push(ontology.slots()[s].clone());
            body.extend(tokenize(&ontology.candidates(s)[v]).map(str::to_string));
        }
    }
    body.push(SEP.to_string());
    let current = sample.current_turn();
    body.extend(tokenize(&current.system).map(str::to_string));
    body.extend(tokenize(&current.user).map(str::to_string));
    body.push(SEP.to_string());

    let keep = max_len - 1;
    let start = body.len().saturating_sub(keep);
    let mut out = Vec::with_capacity(body.len() - start + 1);
    out.push(CLS.to_string());
    out.extend(body.drain(start..));
    Ok(out)
}

/// Closed vocabulary; ids 0..4 are `[PAD] [UNK] [CLS] [SEP]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub const PAD_ID: usize = 0;
    pub const UNK_ID: usize = 1;
    pub const CLS_ID: usize = 2;
    pub const SEP_ID: usize = 3;

    /// Markers, then every slot id, candidate token and corpus token,
    /// sorted for determinism.
    pub fn build<'a>(ontology: &Ontology, corpora: impl IntoIterator<Item = &'a Corpus>) -> Self {
        let mut words = BTreeSet::new();
        for (s, slot) in ontology.slots().iter().enumerate() {
            words.insert(slot.clone());
            for v in ontology.candidates(s) {
                words.extend(tokenize(v).map(str::to_string));
            }
        }
        for c in corpora {
            for d in &c.dialogues {
                for t in &d.turns {
                    words.extend(tokenize(&t.system).map(str::to_string));
                    words.extend(tokenize(&t.user).map(str::to_string));
                }
            }
        }
        let mut tokens: Vec<String> = [PAD, UNK, CLS, SEP].iter().map(|s| s.to_string()).collect();
        tokens.extend(words.into_iter().filter(|w| ![PAD, UNK, CLS, SEP].contains(&w.as_str())));
        Self::from_tokens(tokens)
    }

    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, index }
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn reindex(&mut self) {
        self.index = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(Self::UNK_ID)
    }

    pub fn ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }
}

/// Per-slot probability vectors over candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelSet {
    vectors: Vec<Vec<f64>>,
}

impl SoftLabelSet {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(ontology: &Ontology, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.len() != ontology.num_slots() {
            return Err(Error::Schema(format!(
                "{} label vectors for {} slots",
                vectors.len(),
                ontology.num_slots()
            )));
        }
        for (s, v) in vectors.iter().enumerate() {
            if v.len() != ontology.num_candidates(s) {
                return Err(Error::Schema(format!(
                    "slot {}: vector length {} vs {} candidates",
                    ontology.slots()[s],
                    v.len(),
                    ontology.num_candidates(s)
                )));
            }
            if v.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::Schema(format!("slot {}: negative mass", ontology.slots()[s])));
            }
            let total: f64 = v.iter().sum();
            if (total - 1.0).abs() > Self::TOLERANCE {
                return Err(Error::Schema(format!(
                    "slot {}: mass sums to {total}",
                    ontology.slots()[s]
                )));
            }
        }
        Ok(Self { vectors })
    }

    /// One-hot vectors for a full state.
    pub fn from_state(ontology: &Ontology, state: &[usize]) -> Result<Self> {
        ontology.validate_state(state)?;
        let vectors = state
            .iter()
            .enumerate()
            .map(|(s, &v)| one_hot(s, v, ontology))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { vectors })
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn slot(&self, s: usize) -> &[f64] {
        &self.vectors[s]
    }
}

/// Length-`|V_s|` vector with 1 at `value_index`.
pub fn one_hot(slot: usize, value_index: usize, ontology: &Ontology) -> Result<Vec<f64>> {
    if slot >= ontology.num_slots() {
        return Err(Error::Schema(format!("slot index {slot} out of range")));
    }
    let k = ontology.num_candidates(slot);
    if value_index >= k {
        return Err(Error::Schema(format!(
            "value index {value_index} out of {k} candidates for {}",
            ontology.slots()[slot]
        )));
    }
    let mut v = vec![0.0; k];
    v[value_index] = 1.0;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn toy_ontology() -> Ontology {
        Ontology::new(vec![
            ("hotel-stars".into(), strs(&["none", "dontcare", "3", "4"])),
            ("hotel-area".into(), strs(&["none", "dontcare", "north"])),
            ("taxi-leaveat".into(), strs(&["none", "dontcare", "10:00"])),
        ])
        .unwrap()
    }

    #[test]
    fn ontology_invariants() {
        assert!(Ontology::new(vec![("a-b".into(), strs(&["dontcare", "none"]))]).is_err());
        assert!(Ontology::new(vec![("a-b".into(), strs(&["none", "x"]))]).is_err());
        assert!(Ontology::new(vec![("a-b".into(), strs(&["none", "dontcare", "x", "x"]))]).is_err());
        assert!(Ontology::new(vec![
            ("a-b".into(), strs(&["none", "dontcare"])),
            ("a-b".into(), strs(&["none", "dontcare"]))
        ])
        .is_err());
        let n = Ontology::normalized(vec![("a-b".into(), strs(&["x", "none"]))]).unwrap();
        assert_eq!(n.candidates(0), &strs(&["none", "x", "dontcare"])[..]);
    }

    #[test]
    fn domains_in_order() {
        assert_eq!(toy_ontology().domains(), vec!["hotel", "taxi"]);
    }

    #[test]
    fn one_hot_examples() {
        let o = Ontology::new(vec![("a-b".into(), strs(&["none", "dontcare", "x"]))]).unwrap();
        assert_eq!(one_hot(0, 0, &o).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(one_hot(0, 2, &o).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(one_hot(0, 5, &o).is_err());
    }

    #[test]
    fn soft_labels_validate() {
        let o = toy_ontology();
        assert!(SoftLabelSet::new(&o, vec![vec![0.5, 0.5, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).is_ok());
        assert!(SoftLabelSet::new(&o, vec![vec![0.5, 0.6, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).is_err());
        assert!(SoftLabelSet::new(&o, vec![vec![1.5, -0.5, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).is_err());
    }

    fn dialogue() -> Dialogue {
        Dialogue {
            id: "d1".into(),
            turns: vec![
                Turn {
                    system: "hi".into(),
                    user: "book hotel".into(),
                    state: vec![3, 0, 0],
                },
                Turn {
                    system: "ok".into(),
                    user: "north please".into(),
                    state: vec![3, 2, 0],
                },
            ],
        }
    }

    #[test]
    fn first_turn_sequence() {
        let o = toy_ontology();
        let d = dialogue();
        let s = Sample::from_states(&d, 1, &d.states(), &o).unwrap();
        let seq = build_input_sequence(&s, &o, 64).unwrap();
        assert_eq!(seq, strs(&["[CLS]", "[SEP]", "hi", "book", "hotel", "[SEP]"]));
    }

    #[test]
    fn second_turn_sequence_contains_previous_state() {
        let o = toy_ontology();
        let d = dialogue();
        let s = Sample::from_states(&d, 2, &d.states(), &o).unwrap();
        let seq = build_input_sequence(&s, &o, 64).unwrap();
        assert_eq!(
            seq,
            strs(&["[CLS]", "hi", "book", "hotel", "hotel-stars", "4", "[SEP]", "ok", "north", "please", "[SEP]"])
        );
        // max_len equal to the full length is a no-op.
        assert_eq!(build_input_sequence(&s, &o, seq.len()).unwrap(), seq);
        // Left truncation drops the oldest tokens after [CLS].
        let cut = build_input_sequence(&s, &o, 8).unwrap();
        assert_eq!(cut, strs(&["[CLS]", "hotel-stars", "4", "[SEP]", "ok", "north", "please", "[SEP]"]));
    }

    #[test]
    fn sequence_rejects_bad_state() {
        let o = toy_ontology();
        let d = dialogue();
        let mut s = Sample::from_states(&d, 2, &d.states(), &o).unwrap();
        s.previous_state[0] = 9;
        assert!(matches!(build_input_sequence(&s, &o, 64), Err(Error::Schema(_))));
        assert!(matches!(build_input_sequence(&s, &o, 7), Err(Error::Config(_))));
    }

    #[test]
    fn corpus_json_round_trip() {
        let o = Arc::new(toy_ontology());
        let c = Corpus::new(o, vec![dialogue()]).unwrap();
        let json = c.to_json().unwrap();
        assert!(json.contains("\"hotel-stars\":\"4\""));
        assert!(!json.contains("\"hotel-area\":\"none\""));
        assert_eq!(Corpus::from_json(&json).unwrap(), c);
    }

    #[test]
    fn vocabulary_markers_first() {
        let o = toy_ontology();
        let c = Corpus::new(Arc::new(o.clone()), vec![dialogue()]).unwrap();
        let v = Vocabulary::build(&o, [&c]);
        assert_eq!(v.id(CLS), Vocabulary::CLS_ID);
        assert_eq!(v.id(SEP), Vocabulary::SEP_ID);
        assert_eq!(v.id("never-seen"), Vocabulary::UNK_ID);
        assert_ne!(v.id("north"), Vocabulary::UNK_ID);
    }
}
