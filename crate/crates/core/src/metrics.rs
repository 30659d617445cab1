//! Joint goal accuracy, joint turn accuracy, slot accuracy and per-slot
//! error rates over full predicted states.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dialogue::{DialogueStates, Ontology, NONE};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Drop turns without active slots from the joint turn accuracy
    /// denominator instead of counting them correct.
    pub exclude_empty_active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub turns: usize,
    pub joint_correct: usize,
    /// Turns with at least one active slot.
    pub active_turns: usize,
    pub turn_correct: usize,
    /// Denominator of joint turn accuracy.
    pub turn_denominator: usize,
    /// Correct turns per slot, in ontology order.
    pub slot_correct: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub joint_goal_accuracy: f64,
    pub joint_turn_accuracy: f64,
    pub slot_accuracy: f64,
    pub per_slot_error_rate: IndexMap<String, f64>,
    pub counts: Counts,
}

impl MetricsReport {
    fn from_counts(o: &Ontology, counts: Counts) -> Self {
        let n = counts.turns as f64;
        let per_slot_error_rate: IndexMap<String, f64> = o
            .slots()
            .iter()
            .zip(&counts.slot_correct)
            .map(|(s, &c)| (s.clone(), 1.0 - c as f64 / n))
            .collect();
        let slot_accuracy = if o.num_slots() == 0 {
            1.0
        } else {
            counts.slot_correct.iter().map(|&c| c as f64 / n).sum::<f64>() / o.num_slots() as f64
        };
        let joint_turn_accuracy = if counts.turn_denominator == 0 {
            1.0
        } else {
            counts.turn_correct as f64 / counts.turn_denominator as f64
        };
        Self {
            joint_goal_accuracy: counts.joint_correct as f64 / n,
            joint_turn_accuracy,
            slot_accuracy,
            per_slot_error_rate,
            counts,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `slot,error_rate` rows in ontology order.
    pub fn per_slot_csv(&self) -> String {
        let mut out = String::from("slot,error_rate\n");
        for (s, e) in &self.per_slot_error_rate {
            out.push_str(&format!("{s},{e}\n"));
        }
        out
    }
}

fn check_coverage<'a>(
    predictions: &'a [DialogueStates],
    gold: &[DialogueStates],
    o: &Ontology,
) -> Result<HashMap<&'a str, &'a DialogueStates>> {
    if gold.is_empty() || gold.iter().all(|d| d.states.is_empty()) {
        return Err(Error::Schema("nothing to evaluate".into()));
    }
    let by_id: HashMap<&str, &DialogueStates> = predictions.iter().map(|d| (d.id.as_str(), d)).collect();
    if by_id.len() != predictions.len() || predictions.len() != gold.len() {
        return Err(Error::Schema("predictions and gold cover different dialogues".into()));
    }
    for g in gold {
        let p = by_id
            .get(g.id.as_str())
            .ok_or_else(|| Error::Schema(format!("no prediction for dialogue {}", g.id)))?;
        if p.states.len() != g.states.len() {
            return Err(Error::Schema(format!("dialogue {}: turn counts differ", g.id)));
        }
        for s in p.states.iter().chain(&g.states) {
            o.validate_state(s)?;
        }
    }
    Ok(by_id)
}

/// Metrics over matched (dialogue, turn) pairs. A slot is active at a
/// turn when its gold value differs from the gold value one turn earlier
/// (all-none before the first turn).
pub fn evaluate(predictions: &[DialogueStates], gold: &[DialogueStates], o: &Ontology, opts: EvalOptions) -> Result<MetricsReport> {
    let by_id = check_coverage(predictions, gold, o)?;
    let n_slots = o.num_slots();
    let mut c = Counts {
        slot_correct: vec![0; n_slots],
        ..Counts::default()
    };
    let empty = o.empty_state();
    for g in gold {
        let p = by_id[g.id.as_str()];
        let mut prev = &empty;
        for (gs, ps) in g.states.iter().zip(&p.states) {
            c.turns += 1;
            let mut all = true;
            let mut active = false;
            let mut active_ok = true;
            for s in 0..n_slots {
                let ok = gs[s] == ps[s];
                all &= ok;
                c.slot_correct[s] += usize::from(ok);
                if gs[s] != prev[s] {
                    active = true;
                    active_ok &= ok;
                }
            }
            c.joint_correct += usize::from(all);
            c.active_turns += usize::from(active);
            if active || !opts.exclude_empty_active {
                c.turn_denominator += 1;
                c.turn_correct += usize::from(active_ok);
            }
            prev = gs;
        }
    }
    Ok(MetricsReport::from_counts(o, c))
}

/// Independent reimplementation of [`evaluate`] over string-keyed maps,
/// computing each metric in its own loop.
pub fn brute_force_oracle(
    predictions: &[DialogueStates],
    gold: &[DialogueStates],
    o: &Ontology,
    opts: EvalOptions,
) -> Result<MetricsReport> {
    for st in predictions.iter().chain(gold).flat_map(|d| &d.states) {
        if st.len() != o.num_slots() || st.iter().enumerate().any(|(s, &v)| v >= o.num_candidates(s)) {
            return Err(Error::Schema("state outside the ontology".into()));
        }
    }
    type Table = HashMap<(String, usize), HashMap<String, String>>;
    let to_table = |ds: &[DialogueStates]| -> Table {
        let mut t = HashMap::new();
        for d in ds {
            for (i, st) in d.states.iter().enumerate() {
                let m = o
                    .slots()
                    .iter()
                    .enumerate()
                    .map(|(s, name)| (name.clone(), o.candidates(s)[st[s]].clone()))
                    .collect();
                t.insert((d.id.clone(), i), m);
            }
        }
        t
    };
    let pred = to_table(predictions);
    let gold_t = to_table(gold);
    let keys: HashSet<&(String, usize)> = gold_t.keys().collect();
    let pred_keys: HashSet<&(String, usize)> = pred.keys().collect();
    let gold_turns: usize = gold.iter().map(|d| d.states.len()).sum();
    let pred_turns: usize = predictions.iter().map(|d| d.states.len()).sum();
    if keys.is_empty() || keys != pred_keys || gold_turns != keys.len() || pred_turns != keys.len() {
        return Err(Error::Schema("coverage mismatch or empty corpus".into()));
    }
    let turns = keys.len();

    let mut joint = 0;
    for k in &keys {
        if o.slots().iter().all(|s| gold_t[*k][s] == pred[*k][s]) {
            joint += 1;
        }
    }

    let mut slot_correct = Vec::new();
    for s in o.slots() {
        let mut n = 0;
        for k in &keys {
            if gold_t[*k][s] == pred[*k][s] {
                n += 1;
            }
        }
        slot_correct.push(n);
    }

    let mut active_turns = 0;
    let mut turn_correct = 0;
    let mut denominator = 0;
    for k in &keys {
        let (id, t) = (&k.0, k.1);
        let mut active = Vec::new();
        for s in o.slots() {
            let before = if t == 0 { NONE.to_string() } else { gold_t[&(id.clone(), t - 1)][s].clone() };
            if gold_t[*k][s] != before {
                active.push(s);
            }
        }
        if !active.is_empty() {
            active_turns += 1;
        }
        if active.is_empty() && opts.exclude_empty_active {
            continue;
        }
        denominator += 1;
        if active.iter().all(|s| gold_t[*k][*s] == pred[*k][*s]) {
            turn_correct += 1;
        }
    }
    let n = turns as f64;
    let mut per_slot_error_rate = IndexMap::new();
    let mut acc_sum = 0.0;
    for (i, s) in o.slots().iter().enumerate() {
        per_slot_error_rate.insert(s.clone(), 1.0 - slot_correct[i] as f64 / n);
        acc_sum += slot_correct[i] as f64 / n;
    }
    Ok(MetricsReport {
        joint_goal_accuracy: joint as f64 / n,
        joint_turn_accuracy: if denominator == 0 { 1.0 } else { turn_correct as f64 / denominator as f64 },
        slot_accuracy: if o.num_slots() == 0 { 1.0 } else { acc_sum / o.num_slots() as f64 },
        per_slot_error_rate,
        counts: Counts {
            turns,
            joint_correct: joint,
            active_turns,
            turn_correct,
            turn_denominator: denominator,
            slot_correct,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn onto() -> Ontology {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Ontology::new(vec![
            ("a-x".into(), v(&["none", "dontcare", "p", "q"])),
            ("a-y".into(), v(&["none", "dontcare", "p"])),
            ("b-z".into(), v(&["none", "dontcare", "r"])),
        ])
        .unwrap()
    }

    fn ds(id: &str, states: Vec<Vec<usize>>) -> DialogueStates {
        DialogueStates {
            id: id.into(),
            states,
        }
    }

    #[test]
    fn one_error_in_two_turns() {
        let o = onto();
        let gold = vec![ds("d", vec![vec![2, 0, 0], vec![2, 2, 0]])];
        let pred = vec![ds("d", vec![vec![2, 0, 0], vec![2, 0, 0]])];
        let r = evaluate(&pred, &gold, &o, EvalOptions::default()).unwrap();
        assert_eq!(r.joint_goal_accuracy, 0.5);
        assert!((r.slot_accuracy - (1.0 + 0.5 + 1.0) / 3.0).abs() < 1e-15);
        assert_eq!(r.per_slot_error_rate["a-y"], 0.5);
        assert_eq!(r, brute_force_oracle(&pred, &gold, &o, EvalOptions::default()).unwrap());
    }

    #[test]
    fn stale_error_on_inactive_turn() {
        let o = onto();
        let gold = vec![ds("d", vec![vec![2, 0, 0], vec![2, 0, 0]])];
        let pred = vec![ds("d", vec![vec![2, 0, 0], vec![2, 0, 2]])];
        let r = evaluate(&pred, &gold, &o, EvalOptions::default()).unwrap();
        assert_eq!(r.joint_goal_accuracy, 0.5);
        assert_eq!(r.joint_turn_accuracy, 1.0);
        let ex = evaluate(&pred, &gold, &o, EvalOptions { exclude_empty_active: true }).unwrap();
        assert_eq!(ex.counts.turn_denominator, 1);
        assert_eq!(ex.joint_turn_accuracy, 1.0);
    }

    #[test]
    fn coverage_errors() {
        let o = onto();
        let gold = vec![ds("d", vec![vec![0, 0, 0]])];
        assert!(evaluate(&[], &[], &o, EvalOptions::default()).is_err());
        assert!(evaluate(&[ds("e", vec![vec![0, 0, 0]])], &gold, &o, EvalOptions::default()).is_err());
        assert!(evaluate(&[ds("d", vec![vec![0, 0, 9]])], &gold, &o, EvalOptions::default()).is_err());
        assert!(brute_force_oracle(&[], &[], &o, EvalOptions::default()).is_err());
    }

    #[test]
    fn csv_in_slot_order() {
        let o = onto();
        let gold = vec![ds("d", vec![vec![2, 0, 0]])];
        let r = evaluate(&gold, &gold, &o, EvalOptions::default()).unwrap();
        assert_eq!(r.per_slot_csv(), "slot,error_rate\na-x,0\na-y,0\nb-z,0\n");
    }
}
