//! Checks the bundled sample catalog against its schema directly from the
//! raw JSON, without going through the library loader.

mod support;

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;
use support::SAMPLE;

fn raw() -> Value {
    serde_json::from_str(SAMPLE).expect("fixture is JSON")
}

fn dimensions(v: &Value) -> BTreeMap<String, String> {
    v["entities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            (
                e["id"].as_str().unwrap().to_string(),
                e["dimension"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

#[test]
fn top_level_keys() {
    let v = raw();
    let keys: BTreeSet<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        BTreeSet::from(["entities", "objects", "topos_edges", "thema_edges"])
    );
    assert_eq!(v["objects"].as_array().unwrap().len(), 12);
}

#[test]
fn entities_are_unique_and_well_formed() {
    let v = raw();
    let mut seen = BTreeSet::new();
    for e in v["entities"].as_array().unwrap() {
        let id = e["id"].as_str().unwrap();
        assert!(seen.insert(id), "duplicate {id}");
        assert!(e["label"].as_str().is_some_and(|l| !l.is_empty()), "{id}");
        let payload = e["payload"].as_object().unwrap();
        match e["dimension"].as_str().unwrap() {
            "Chronos" => {
                assert!(id.starts_with("chronos."));
                assert!(payload["century"].is_i64());
            }
            "Topos" => {
                assert!(id.starts_with("topos."));
                assert!(payload["territory"].is_string());
            }
            "Thema" => {
                assert!(id.starts_with("thema."));
                assert!(payload["concept"].is_string());
            }
            other => panic!("{id}: unknown dimension {other}"),
        }
        assert_eq!(payload.len(), 1, "{id}");
    }
}

#[test]
fn objects_tag_every_dimension() {
    let v = raw();
    let dims = dimensions(&v);
    let mut seen = BTreeSet::new();
    for o in v["objects"].as_array().unwrap() {
        let id = o["id"].as_str().unwrap();
        assert!(seen.insert(id), "duplicate {id}");
        assert!(o["name"].is_string() && o["description"].is_string());
        let tagged: BTreeSet<&str> = o["entities"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| {
                dims.get(e.as_str().unwrap())
                    .unwrap_or_else(|| panic!("{id}: dangling {e}"))
                    .as_str()
            })
            .collect();
        assert_eq!(tagged, BTreeSet::from(["Chronos", "Thema", "Topos"]), "{id}");
    }
}

#[test]
fn edges_stay_inside_their_dimension() {
    let v = raw();
    let dims = dimensions(&v);
    for (key, dim) in [("topos_edges", "Topos"), ("thema_edges", "Thema")] {
        let mut seen = BTreeSet::new();
        for pair in v[key].as_array().unwrap() {
            let a = pair[0].as_str().unwrap();
            let b = pair[1].as_str().unwrap();
            assert_ne!(a, b);
            assert_eq!(dims[a], dim, "{a}");
            assert_eq!(dims[b], dim, "{b}");
            assert!(seen.insert((a.min(b), a.max(b))), "duplicate edge {a} {b}");
        }
    }
}

#[test]
fn loader_agrees_with_raw_counts() {
    let v = raw();
    let c = support::sample();
    assert_eq!(c.entity_count(), v["entities"].as_array().unwrap().len());
    assert_eq!(c.object_count(), v["objects"].as_array().unwrap().len());
}
