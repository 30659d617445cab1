//! Synthetic multi-domain corpora with known true states, controlled label
//! corruption, and corpus splitting.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dialogue::{Corpus, Dialogue, Ontology, State, Turn, DONTCARE, NONE, NONE_INDEX};
use crate::exec::{self, Execution};
use crate::rng;
use crate::{Error, Result};

/// Five domains and thirty slots in the MultiWOZ layout, 5–6 candidates
/// each (including `none` and `dontcare`).
pub fn default_ontology() -> Ontology {
    let areas = ["centre", "north", "south", "east"];
    let days = ["monday", "tuesday", "friday", "saturday"];
    let people = ["1", "2", "3", "4"];
    let stay = ["1", "2", "3", "5"];
    let times = ["09:00", "11:30", "14:00", "17:30"];
    let yes_no = ["yes", "no", "free"];
    let price = ["cheap", "moderate", "expensive"];
    let places = ["airport", "museum_road", "market_square", "river_lane"];
    let stations = ["cambridge", "london", "ely", "norwich"];
    let attraction_names = ["kettles_yard", "botanic_garden", "fitzwilliam", "corn_exchange"];
    let attraction_types = ["museum", "park", "college", "theatre"];
    let hotel_names = ["acorn_house", "ashley_hotel", "gonville_hotel", "lensfield_hotel"];
    let hotel_types = ["hotel", "guesthouse", "lodge"];
    let stars = ["2", "3", "4", "5"];
    let foods = ["italian", "chinese", "indian", "british"];
    let restaurant_names = ["pizza_hut", "golden_wok", "curry_garden", "the_eagle"];

    let spec: Vec<(&str, &[&str])> = vec![
        ("attraction-area", &areas),
        ("attraction-name", &attraction_names),
        ("attraction-type", &attraction_types),
        ("hotel-area", &areas),
        ("hotel-book_day", &days),
        ("hotel-book_people", &people),
        ("hotel-book_stay", &stay),
        ("hotel-internet", &yes_no),
        ("hotel-name", &hotel_names),
        ("hotel-parking", &yes_no),
        ("hotel-pricerange", &price),
        ("hotel-stars", &stars),
        ("hotel-type", &hotel_types),
        ("restaurant-area", &areas),
        ("restaurant-book_day", &days),
        ("restaurant-book_people", &people),
        ("restaurant-book_time", &times),
        ("restaurant-food", &foods),
        ("restaurant-name", &restaurant_names),
        ("restaurant-pricerange", &price),
        ("taxi-arriveby", &times),
        ("taxi-departure", &places),
        ("taxi-destination", &places),
        ("taxi-leaveat", &times),
        ("train-arriveby", &times),
        ("train-book_people", &people),
        ("train-day", &days),
        ("train-departure", &stations),
        ("train-destination", &stations),
        ("train-leaveat", &times),
    ];
    let entries = spec
        .into_iter()
        .map(|(slot, values)| {
            let mut v = vec![NONE.to_string(), DONTCARE.to_string()];
            v.extend(values.iter().map(|s| s.to_string()));
            (slot.to_string(), v)
        })
        .collect();
    Ontology::new(entries).expect("default ontology is well formed")
}

/// `"hotel-book_people"` → `"hotel book people"`.
fn slot_phrase(slot: &str) -> String {
    slot.replace(['-', '_'], " ")
}

const USER_LEADS: &[&str] = &["i want", "i need", "please set", "can you find", "i would like", "make it"];
const USER_TAILS: &[&str] = &["", "please", "thanks", "if possible"];
const SYSTEM_OPENERS: &[&str] = &["hello how can i help", "welcome what do you need", "hi there"];
const SYSTEM_GENERIC: &[&str] = &["ok noted", "anything else", "sure what else", "got it", "what else do you need"];
const USER_IDLE: &[&str] = &["thanks that is all for now", "let me think", "ok great"];
const USER_ACCEPT: &[&str] = &["yes that works", "sounds good", "yes please"];

/// Parameters of [`generate_corpus`] beyond the ontology and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Probability that a non-initial turn changes no slot.
    pub p_idle_turn: f64,
    /// Probability that a turn carries a second change.
    pub p_second_change: f64,
    /// Probability that a change overwrites an already-set slot.
    pub p_overwrite: f64,
    /// Probability that the system utterance offers the first change.
    pub p_system_offer: f64,
    pub p_dontcare: f64,
    pub p_switch_domain: f64,
    pub max_domains: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            p_idle_turn: 0.1,
            p_second_change: 0.4,
            p_overwrite: 0.15,
            p_system_offer: 0.25,
            p_dontcare: 0.05,
            p_switch_domain: 0.25,
            max_domains: 3,
        }
    }
}

/// Generates `n_dialogues` template dialogues of 1..=`max_turns` turns.
/// Every state change is verbalized (`domain slot words value`) in that
/// turn's system or user utterance, and states accumulate across turns.
pub fn generate_corpus(ontology: &Ontology, n_dialogues: usize, max_turns: usize, seed: u64) -> Result<Corpus> {
    generate_corpus_with(ontology, n_dialogues, max_turns, seed, &GeneratorConfig::default(), Execution::Parallel)
}

pub fn generate_corpus_with(
    ontology: &Ontology,
    n_dialogues: usize,
    max_turns: usize,
    seed: u64,
    cfg: &GeneratorConfig,
    exec: Execution,
) -> Result<Corpus> {
    if ontology.num_slots() == 0 {
        return Err(Error::Config("empty ontology".into()));
    }
    if max_turns == 0 {
        return Err(Error::Config("max_turns must be at least 1".into()));
    }
    let domains = ontology.domains();
    if domains.len() < 2 {
        return Err(Error::Config("generator needs at least two domains".into()));
    }
    let by_domain: Vec<Vec<usize>> = domains
        .iter()
        .map(|d| {
            (0..ontology.num_slots())
                .filter(|&s| Ontology::domain_of(&ontology.slots()[s]) == d)
                .collect()
        })
        .collect();
    let dialogues = exec::map_range(exec, n_dialogues, |i| {
        let id = format!("dlg-{i:05}");
        let mut r = rng::stream(seed, &id);
        generate_dialogue(ontology, &by_domain, id, max_turns, cfg, &mut r)
    });
    Corpus::new(Arc::new(ontology.clone()), dialogues)
}

fn generate_dialogue<R: Rng>(
    o: &Ontology,
    by_domain: &[Vec<usize>],
    id: String,
    max_turns: usize,
    cfg: &GeneratorConfig,
    r: &mut R,
) -> Dialogue {
    let n_turns = r.gen_range(1..=max_turns);
    let mut order: Vec<usize> = (0..by_domain.len()).collect();
    order.shuffle(r);
    order.truncate(r.gen_range(1..=cfg.max_domains.min(order.len()).max(1)));
    let mut current = 0;
    let mut state = o.empty_state();
    let mut turns = Vec::with_capacity(n_turns);

    for t in 0..n_turns {
        let idle = t > 0 && r.gen_bool(cfg.p_idle_turn);
        let mut changes: Vec<(usize, usize)> = Vec::new();
        if !idle {
            if t > 0 && current + 1 < order.len() && r.gen_bool(cfg.p_switch_domain) {
                current += 1;
            }
            let n_changes = if r.gen_bool(cfg.p_second_change) { 2 } else { 1 };
            for _ in 0..n_changes {
                let slots = &by_domain[order[current]];
                let unset: Vec<usize> = slots
                    .iter()
                    .copied()
                    .filter(|&s| state[s] == NONE_INDEX && !changes.iter().any(|c| c.0 == s))
                    .collect();
                let set: Vec<usize> = slots
                    .iter()
                    .copied()
                    .filter(|&s| state[s] != NONE_INDEX && !changes.iter().any(|c| c.0 == s))
                    .collect();
                let slot = if !unset.is_empty() && (set.is_empty() || !r.gen_bool(cfg.p_overwrite)) {
                    unset[r.gen_range(0..unset.len())]
                } else if !set.is_empty() {
                    set[r.gen_range(0..set.len())]
                } else {
                    continue;
                };
                let value = draw_value(o, slot, state[slot], cfg, r);
                changes.push((slot, value));
            }
            if changes.is_empty() && current + 1 < order.len() {
                current += 1;
            }
        }
        for &(s, v) in &changes {
            state[s] = v;
        }
        let (system, user) = verbalize(o, t, &changes, cfg, r);
        turns.push(Turn {
            system,
            user,
            state: state.clone(),
        });
    }
    Dialogue { id, turns }
}

/// Non-none value different from `current`.
fn draw_value<R: Rng>(o: &Ontology, slot: usize, current: usize, cfg: &GeneratorConfig, r: &mut R) -> usize {
    let dc = o.dontcare_index(slot);
    if current != dc && r.gen_bool(cfg.p_dontcare) {
        return dc;
    }
    let options: Vec<usize> = (1..o.num_candidates(slot)).filter(|&v| v != dc && v != current).collect();
    options[r.gen_range(0..options.len())]
}

fn mention(o: &Ontology, slot: usize, value: usize) -> String {
    format!("{} {}", slot_phrase(&o.slots()[slot]), o.candidates(slot)[value])
}

fn pick<'a, R: Rng>(xs: &[&'a str], r: &mut R) -> &'a str {
    xs[r.gen_range(0..xs.len())]
}

fn verbalize<R: Rng>(o: &Ontology, t: usize, changes: &[(usize, usize)], cfg: &GeneratorConfig, r: &mut R) -> (String, String) {
    let opener = if t == 0 { pick(SYSTEM_OPENERS, r) } else { pick(SYSTEM_GENERIC, r) };
    if changes.is_empty() {
        return (opener.to_string(), pick(USER_IDLE, r).to_string());
    }
    let mentions: Vec<String> = changes.iter().map(|&(s, v)| mention(o, s, v)).collect();
    if t > 0 && r.gen_bool(cfg.p_system_offer) {
        let system = format!("how about {}", mentions[0]);
        let mut user = pick(USER_ACCEPT, r).to_string();
        if mentions.len() > 1 {
            user = format!("{user} and {}", mentions[1..].join(" and "));
        }
        return (system, user);
    }
    let tail = pick(USER_TAILS, r);
    let mut user = format!("{} {}", pick(USER_LEADS, r), mentions.join(" and "));
    if !tail.is_empty() {
        user = format!("{user} {tail}");
    }
    (opener.to_string(), user)
}

/// Per-site corruption probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Drop a turn-active update (label keeps the previous labeled value).
    pub p_missing: f64,
    /// Per turn, set one unmentioned none-valued slot to a random value.
    pub p_spurious: f64,
    /// Replace an active slot's value by another non-none candidate.
    pub p_wrong: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(p_missing: f64, p_spurious: f64, p_wrong: f64, seed: u64) -> Result<Self> {
        let s = Self {
            p_missing,
            p_spurious,
            p_wrong,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_missing", self.p_missing), ("p_spurious", self.p_spurious), ("p_wrong", self.p_wrong)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn clean(seed: u64) -> Self {
        Self {
            p_missing: 0.0,
            p_spurious: 0.0,
            p_wrong: 0.0,
            seed,
        }
    }

    /// Default mix.
    pub fn standard(seed: u64) -> Self {
        Self {
            p_missing: 0.15,
            p_spurious: 0.05,
            p_wrong: 0.10,
            seed,
        }
    }

    pub fn high_noise(seed: u64) -> Self {
        Self {
            p_missing: 0.3,
            p_spurious: 0.1,
            p_wrong: 0.2,
            seed,
        }
    }

    pub fn low_noise(seed: u64) -> Self {
        Self {
            p_missing: 0.08,
            p_spurious: 0.03,
            p_wrong: 0.05,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Missing,
    Spurious,
    Wrong,
    /// Difference inherited from an earlier corruption in the same dialogue.
    Carried,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseEntry {
    pub dialogue_id: String,
    /// 0-based turn index.
    pub turn: usize,
    pub slot: String,
    pub kind: NoiseKind,
    /// True value index at this site.
    pub original: usize,
    /// Corrupted value index at this site.
    pub noisy: usize,
}

/// Every site where noisy and clean labels differ, one entry each.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseLog {
    pub entries: Vec<NoiseEntry>,
}

impl NoiseLog {
    pub fn counts(&self) -> BTreeMap<NoiseKind, usize> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(e.kind).or_insert(0) += 1;
        }
        m
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(s: &str) -> Result<Self> {
        let entries = s
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }
}

/// Corrupts state labels only. Labels are rebuilt turn by turn, so a
/// corruption persists in later turns until the slot is updated again;
/// such inherited differences are logged as [`NoiseKind::Carried`].
pub fn inject_noise(corpus: &Corpus, spec: &NoiseSpec) -> Result<(Corpus, NoiseLog)> {
    inject_noise_with(corpus, spec, Execution::Parallel)
}

pub fn inject_noise_with(corpus: &Corpus, spec: &NoiseSpec, exec: Execution) -> Result<(Corpus, NoiseLog)> {
    spec.validate()?;
    corpus.validate()?;
    let o = &corpus.ontology;
    let results = exec::map(exec, &corpus.dialogues, |d| {
        let mut r = rng::stream(spec.seed, &d.id);
        corrupt_dialogue(o, d, spec, &mut r)
    });
    let mut dialogues = Vec::with_capacity(results.len());
    let mut entries = Vec::new();
    for (d, log) in results {
        dialogues.push(d);
        entries.extend(log);
    }
    Ok((corpus.with_dialogues(dialogues), NoiseLog { entries }))
}

fn corrupt_dialogue<R: Rng>(o: &Ontology, d: &Dialogue, spec: &NoiseSpec, r: &mut R) -> (Dialogue, Vec<NoiseEntry>) {
    let n = o.num_slots();
    let mut true_prev = o.empty_state();
    let mut noisy_prev = o.empty_state();
    let mut turns = Vec::with_capacity(d.turns.len());
    let mut log = Vec::new();

    for (t, turn) in d.turns.iter().enumerate() {
        let truth = &turn.state;
        let mut noisy = noisy_prev.clone();
        let mut fresh: Vec<Option<NoiseKind>> = vec![None; n];
        for s in 0..n {
            if truth[s] == true_prev[s] {
                continue;
            }
            // Active site.
            if noisy_prev[s] != truth[s] && spec.p_missing > 0.0 && r.gen_bool(spec.p_missing) {
                fresh[s] = Some(NoiseKind::Missing);
                continue;
            }
            noisy[s] = truth[s];
            if spec.p_wrong > 0.0 && r.gen_bool(spec.p_wrong) {
                let options: Vec<usize> = (1..o.num_candidates(s)).filter(|&v| v != truth[s]).collect();
                if !options.is_empty() {
                    noisy[s] = options[r.gen_range(0..options.len())];
                    fresh[s] = Some(NoiseKind::Wrong);
                }
            }
        }
        if spec.p_spurious > 0.0 {
            let eligible: Vec<usize> = spurious_eligible(truth, &true_prev, &noisy_prev);
            if !eligible.is_empty() && r.gen_bool(spec.p_spurious) {
                let s = eligible[r.gen_range(0..eligible.len())];
                noisy[s] = r.gen_range(1..o.num_candidates(s));
                fresh[s] = Some(NoiseKind::Spurious);
            }
        }
        for s in 0..n {
            if noisy[s] != truth[s] {
                log.push(NoiseEntry {
                    dialogue_id: d.id.clone(),
                    turn: t,
                    slot: o.slots()[s].clone(),
                    kind: fresh[s].unwrap_or(NoiseKind::Carried),
                    original: truth[s],
                    noisy: noisy[s],
                });
            }
        }
        turns.push(Turn {
            system: turn.system.clone(),
            user: turn.user.clone(),
            state: noisy.clone(),
        });
        true_prev = truth.clone();
        noisy_prev = noisy;
    }
    (
        Dialogue {
            id: d.id.clone(),
            turns,
        },
        log,
    )
}

/// Slots that are inactive this turn and none in both the true state and
/// the previous noisy label.
pub fn spurious_eligible(truth: &State, true_prev: &State, noisy_prev: &State) -> Vec<usize> {
    (0..truth.len())
        .filter(|&s| truth[s] == true_prev[s] && truth[s] == NONE_INDEX && noisy_prev[s] == NONE_INDEX)
        .collect()
}

/// Train / clean / test partition at dialogue level.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit {
    pub train: Corpus,
    pub clean: Corpus,
    pub test: Corpus,
}

impl CorpusSplit {
    /// The clean partition, or a configuration error if it is empty.
    pub fn require_clean(&self) -> Result<&Corpus> {
        if self.clean.dialogues.is_empty() {
            return Err(Error::Config("clean partition is empty".into()));
        }
        Ok(&self.clean)
    }
}

/// Shuffles dialogues with `seed` and takes `floor(f_i · n)` for each part.
pub fn split_corpus(corpus: &Corpus, fractions: [f64; 3], seed: u64) -> Result<CorpusSplit> {
    if fractions.iter().any(|f| !(*f >= 0.0)) || fractions.iter().sum::<f64>() > 1.0 + 1e-12 {
        return Err(Error::Config(format!("invalid split fractions {fractions:?}")));
    }
    let n = corpus.dialogues.len();
    let counts = fractions.map(|f| (f * n as f64 + 1e-9).floor() as usize);
    split_counts(corpus, counts, seed)
}

pub fn split_counts(corpus: &Corpus, counts: [usize; 3], seed: u64) -> Result<CorpusSplit> {
    let n = corpus.dialogues.len();
    if counts.iter().sum::<usize>() > n {
        return Err(Error::Config(format!("split {counts:?} exceeds {n} dialogues")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, "split"));
    let take = |range: std::ops::Range<usize>| {
        let mut idx: Vec<usize> = order[range].to_vec();
        idx.sort_unstable();
        corpus.with_dialogues(idx.into_iter().map(|i| corpus.dialogues[i].clone()).collect())
    };
    let a = counts[0];
    let b = a + counts[1];
    let c = b + counts[2];
    Ok(CorpusSplit {
        train: take(0..a),
        clean: take(a..b),
        test: take(b..c),
    })
}

/// Removes every dialogue whose state ever sets a slot of `domain`.
pub fn filter_by_domain(corpus: &Corpus, domain: &str) -> Corpus {
    let o = &corpus.ontology;
    let slots: Vec<usize> = (0..o.num_slots())
        .filter(|&s| Ontology::domain_of(&o.slots()[s]) == domain)
        .collect();
    corpus.with_dialogues(
        corpus
            .dialogues
            .iter()
            .filter(|d| !d.turns.iter().any(|t| slots.iter().any(|&s| t.state[s] != NONE_INDEX)))
            .cloned()
            .collect(),
    )
}
