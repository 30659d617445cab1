use std::sync::Arc;

use assist_core::corpus::{default_ontology, filter_by_domain, generate_corpus, generate_corpus_with, split_corpus, split_counts, GeneratorConfig};
use assist_core::dialogue::{Corpus, Ontology};
use assist_core::Execution;

fn phrase(o: &Ontology, s: usize, v: usize) -> String {
    format!("{} {}", o.slots()[s].replace(['-', '_'], " "), o.candidates(s)[v])
}

#[test]
fn every_change_is_mentioned_verbatim() {
    let o = Arc::new(default_ontology());
    let c = generate_corpus(&o, 500, 6, 17).unwrap();
    let mut changes = 0;
    for d in &c.dialogues {
        assert!((1..=6).contains(&d.turns.len()));
        let mut prev = o.empty_state();
        for t in &d.turns {
            let text = format!(" {} {} ", t.system, t.user);
            for s in 0..o.num_slots() {
                if t.state[s] != prev[s] {
                    changes += 1;
                    assert_ne!(t.state[s], 0, "a slot never reverts to none");
                    let m = format!(" {} ", phrase(&o, s, t.state[s]));
                    assert!(text.contains(&m), "{}: missing '{m}' in '{text}'", d.id);
                }
            }
            prev = t.state.clone();
        }
    }
    assert!(changes > 500);
}

#[test]
fn deterministic_in_seed_and_execution() {
    let o = Arc::new(default_ontology());
    let cfg = GeneratorConfig::default();
    let a = generate_corpus_with(&o, 100, 5, 3, &cfg, Execution::Sequential).unwrap();
    let b = generate_corpus_with(&o, 100, 5, 3, &cfg, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let c = generate_corpus(&o, 100, 5, 4).unwrap();
    assert_ne!(a, c);
}

#[test]
fn json_round_trip() {
    let o = Arc::new(default_ontology());
    let c = generate_corpus(&o, 20, 4, 1).unwrap();
    let back = Corpus::from_json(&c.to_json().unwrap()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn splits_are_disjoint_and_sized() {
    let o = Arc::new(default_ontology());
    let c = generate_corpus(&o, 200, 4, 2).unwrap();
    let s = split_counts(&c, [120, 40, 40], 9).unwrap();
    assert_eq!((s.train.dialogues.len(), s.clean.dialogues.len(), s.test.dialogues.len()), (120, 40, 40));
    let mut ids: Vec<&str> = [&s.train, &s.clean, &s.test].iter().flat_map(|p| p.dialogues.iter().map(|d| d.id.as_str())).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), 200);
    assert_eq!(split_counts(&c, [120, 40, 40], 9).unwrap(), s);
    let f = split_corpus(&c, [0.5, 0.25, 0.25], 9).unwrap();
    assert_eq!(f.train.dialogues.len(), 100);
    assert!(split_counts(&c, [150, 40, 40], 9).is_err());
    assert!(split_corpus(&c, [0.6, 0.3, 0.3], 9).is_err());
}

#[test]
fn domain_filter_removes_dialogues_touching_the_domain() {
    let o = Arc::new(default_ontology());
    let c = generate_corpus(&o, 200, 5, 5).unwrap();
    let f = filter_by_domain(&c, "hotel");
    assert!(!f.dialogues.is_empty() && f.dialogues.len() < c.dialogues.len());
    let touches = |d: &assist_core::dialogue::Dialogue| {
        d.turns.iter().any(|t| (0..o.num_slots()).any(|s| t.state[s] != 0 && Ontology::domain_of(&o.slots()[s]) == "hotel"))
    };
    assert!(f.dialogues.iter().all(|d| !touches(d)));
    assert_eq!(f.dialogues.len(), c.dialogues.iter().filter(|d| !touches(d)).count());
}
