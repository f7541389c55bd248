mod common;

use std::sync::OnceLock;

use hvd::service::AppState;
use hvd::{Mode, Store};
use serde_json::json;

struct Fixture {
    base: String,
    ids: Vec<String>,
    size: usize,
    _dir: tempfile::TempDir,
}

/// One read-mostly service over a 150-record store.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let c = common::corpus(50, 16, 21);
        let e = common::engine(&c, 1024, &[Mode::Mv, Mode::Sv]);
        let store = Store::new(dir.path().join("store"));
        store.save_engine(&e).unwrap();
        let ids = c.records.iter().map(|r| r.id.clone()).collect();
        let size = e.len();
        let base = common::spawn(AppState::new(e, Some(store), None));
        Fixture { base, ids, size, _dir: dir }
    })
}

fn writable() -> (String, tempfile::TempDir, Store) {
    let dir = tempfile::tempdir().unwrap();
    let c = common::corpus(20, 16, 22);
    let e = common::engine(&c, 1024, &[Mode::Mv, Mode::Sv]);
    let store = Store::new(dir.path().join("store"));
    store.save_engine(&e).unwrap();
    let base = common::spawn(AppState::new(e, Some(store.clone()), None));
    (base, dir, store)
}

#[test]
fn query_by_example_finds_itself() {
    let f = fixture();
    // a compound sits about 0.34 from each bound filler, so SV uses its default
    for (mode, fuzz) in [("mv", json!({"text": 0.0})), ("sv", json!({}))] {
        for id in [&f.ids[0], &f.ids[77]] {
            let (s, r) = common::post(
                &f.base,
                "/api/rfi",
                &json!({"constraints": {"text": {"example": id}}, "fuzziness": fuzz, "mode": mode}),
            );
            assert_eq!(s, 200, "{r}");
            assert!(common::ids(&r).contains(id), "{mode}: {r}");
        }
    }
}

#[test]
fn adding_a_constraint_never_grows_the_result() {
    let f = fixture();
    let base = json!({"constraints": {"text": {"example": f.ids[3]}}, "fuzziness": {"text": 0.47}, "mode": "mv"});
    let (_, wide) = common::post(&f.base, "/api/rfi", &base);
    let mut narrowed = base.clone();
    narrowed["constraints"]["language"] = json!("en-uk");
    let (_, narrow) = common::post(&f.base, "/api/rfi", &narrowed);
    let wide = common::ids(&wide);
    assert!(common::ids(&narrow).iter().all(|id| wide.contains(id)));
}

#[test]
fn widening_fuzziness_never_shrinks_the_result() {
    let f = fixture();
    let mut last = 0;
    for t in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5] {
        let (_, r) = common::post(
            &f.base,
            "/api/rfi",
            &json!({"constraints": {"location": "london", "sentiment_class": "positive"},
                    "fuzziness": {"location": t, "sentiment": t}, "mode": "mv"}),
        );
        let n = r["total"].as_u64().unwrap() as usize;
        assert!(n >= last, "{t}: {n} < {last}");
        last = n;
    }
}

#[test]
fn fully_open_fuzziness_returns_the_whole_store() {
    let f = fixture();
    let (s, r) = common::post(
        &f.base,
        "/api/rfi",
        &json!({"constraints": {"time_range": ["2022-01-01T00:00:00Z", "2022-12-31T23:59:59Z"]},
                "fuzziness": {"created_at": 1.0}, "mode": "mv"}),
    );
    assert_eq!(s, 200, "{r}");
    assert_eq!(r["total"].as_u64().unwrap() as usize, f.size);
    assert_eq!(r["store_size"].as_u64().unwrap() as usize, f.size);
    for m in r["matches"].as_array().unwrap() {
        for d in m["distances"].as_array().unwrap() {
            assert!((0.0..=1.0).contains(&d.as_f64().unwrap()));
        }
    }
}

#[test]
fn identical_requests_get_identical_responses() {
    let f = fixture();
    let body = json!({"constraints": {"text": {"example": f.ids[9]}, "language": "fr-fr"}, "mode": "sv"});
    let (_, a) = common::post(&f.base, "/api/rfi", &body);
    let (_, b) = common::post(&f.base, "/api/rfi", &body);
    assert_eq!(a["matches"], b["matches"]);
    assert_eq!(a["token"], b["token"]);
    assert_eq!(a["queries"], b["queries"]);
}

#[test]
fn aggregations_partition_the_match_set() {
    let f = fixture();
    let (_, r) = common::post(
        &f.base,
        "/api/rfi",
        &json!({"constraints": {"text": {"example": f.ids[5]}}, "fuzziness": {"text": 0.45}, "mode": "mv"}),
    );
    let total = r["total"].as_u64().unwrap();
    assert!(total > 0);
    let token = r["token"].as_str().unwrap();
    let (s, v) = common::get(&f.base, &format!("/api/aggregations?token={token}&kind=volume&bucket=1w"));
    assert_eq!(s, 200, "{v}");
    assert_eq!(v["kind"], "volume");
    let sum: u64 = v["data"].as_array().unwrap().iter().map(|p| p["count"].as_u64().unwrap()).sum();
    assert_eq!(sum, total);

    let (s, v) = common::get(&f.base, &format!("/api/aggregations?token={token}&kind=sentiment_over_time&bucket=30d"));
    assert_eq!(s, 200);
    for p in v["data"].as_array().unwrap() {
        let mean: f64 = p["mean"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
        assert!((mean - 1.0).abs() < 1e-6);
    }

    let (s, v) = common::get(&f.base, &format!("/api/aggregations?token={token}&kind=word_frequencies"));
    assert_eq!(s, 200);
    assert!(v["data"].as_array().unwrap().len() <= 100);
}

#[test]
fn word_frequencies_of_one_record_are_its_tokens() {
    let f = fixture();
    let (_, rec) = common::get(&f.base, &format!("/api/records/{}", f.ids[0]));
    let text = rec["text"].as_str().unwrap().to_string();
    let (s, v) = common::get(&f.base, &format!("/api/aggregations?ids={}&kind=word_frequencies", f.ids[0]));
    assert_eq!(s, 200);
    let mut want = std::collections::BTreeMap::<String, u64>::new();
    for t in hvd::aggregate::tokens(&text) {
        *want.entry(t).or_default() += 1;
    }
    let got: std::collections::BTreeMap<String, u64> = v["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| (w["token"].as_str().unwrap().to_string(), w["count"].as_u64().unwrap()))
        .collect();
    assert_eq!(got, want);

    let (_, empty) = common::get(&f.base, "/api/aggregations?ids=&kind=volume&bucket=1d");
    assert_eq!(empty["data"], json!([]));
}

#[test]
fn errors_carry_code_and_status() {
    let f = fixture();
    let (s, e) = common::get(&f.base, "/api/records/nope");
    assert_eq!(s, 404);
    assert_eq!(e["code"], "not_found");
    assert!(e["message"].as_str().is_some());

    let (s, e) = common::post(&f.base, "/api/rfi", &json!({"constraints": {}}));
    assert_eq!(s, 400, "{e}");

    let (s, _) = common::post(&f.base, "/api/rfi", &json!({"constraints": {"text": {"example": "missing"}}}));
    assert_eq!(s, 404);

    let (s, _) = common::post(&f.base, "/api/rfi", &json!({"constraints": {"text": "free text"}}));
    assert!(s == 400 || s == 409 || s == 502, "{s}");

    let (s, _) = common::get(&f.base, "/api/aggregations?token=ffff&kind=volume&bucket=1d");
    assert_eq!(s, 404);
    let (s, _) = common::get(&f.base, &format!("/api/aggregations?ids={}&kind=volume&bucket=0s", f.ids[0]));
    assert_eq!(s, 400);
}

#[test]
fn config_and_health_describe_the_store() {
    let f = fixture();
    let (s, c) = common::get(&f.base, "/api/config");
    assert_eq!(s, 200);
    assert_eq!(c["dimension"], 1024);
    assert_eq!(c["store_size"].as_u64().unwrap() as usize, f.size);
    assert!(c["attributes"].as_array().unwrap().iter().any(|a| a == "text"));
    assert!(c["defaults"]["mv"]["text"].as_f64().is_some());
    assert!(c["defaults"]["sv"]["text"].as_f64().is_some());
    let (s, h) = common::get(&f.base, "/api/health");
    assert_eq!(s, 200);
    assert_eq!(h["status"], "ok");
}

#[test]
fn ingest_is_idempotent_and_atomic() {
    let (base, _dir, store) = writable();
    let rec = |id: &str, emb: usize| {
        json!({"id": id, "text": "fresh post about the harbour", "language": "en-uk",
               "created_at": "2022-06-01T12:00:00Z", "text_embedding": vec![0.25; emb]})
    };
    let (s, r) = common::post(&base, "/api/ingest", &json!({"records": [rec("n1", 16), rec("n2", 16)]}));
    assert_eq!(s, 200, "{r}");
    assert_eq!(r["accepted"], 2);
    let (_, again) = common::post(&base, "/api/ingest", &json!({"records": [rec("n1", 16), rec("n2", 16)]}));
    assert_eq!(again["accepted"], 0);
    assert_eq!(again["duplicates"], 2);

    let (_, h) = common::get(&base, "/api/health");
    let size = h["records"].as_u64().unwrap();
    let on_disk = std::fs::read(store.sv_index_path()).unwrap();
    let (s, e) = common::post(&base, "/api/ingest", &json!({"records": [rec("n3", 16), rec("n4", 8)]}));
    assert_eq!(s, 409, "{e}");
    let (_, h) = common::get(&base, "/api/health");
    assert_eq!(h["records"].as_u64().unwrap(), size);
    assert_eq!(common::get(&base, "/api/records/n3").0, 404);
    assert_eq!(std::fs::read(store.sv_index_path()).unwrap(), on_disk);

    let (s, r) = common::post(
        &base,
        "/api/ingest",
        &json!({"records": [{"id": "jp", "text": "x", "language": "日本", "created_at": "2022-06-01T00:00:00Z"}]}),
    );
    assert_eq!(s, 200);
    assert_eq!(r["accepted"], 0);
    assert_eq!(r["rejected"][0]["id"], "jp");

    // new records are immediately queryable
    let (_, q) = common::post(
        &base,
        "/api/rfi",
        &json!({"constraints": {"text": {"example": "n1"}}, "fuzziness": {"text": 0.0}, "mode": "mv"}),
    );
    assert!(common::ids(&q).contains(&"n1".to_string()));
    assert_eq!(store.load_engine().unwrap().len() as u64, size);
}

#[test]
fn api_key_guards_data_routes() {
    let c = common::corpus(5, 16, 23);
    let e = common::engine(&c, 1024, &[Mode::Mv]);
    let base = common::spawn(AppState::new(e, None, None).with_api_key(Some("s3cret".into())));
    assert_eq!(common::get(&base, "/api/health").0, 200);
    assert_eq!(common::get(&base, "/api/config").0, 401);
    assert_eq!(common::post(&base, "/api/rfi", &json!({"constraints": {"language": "en-uk"}})).0, 401);
    let mut r = common::agent()
        .get(&format!("{base}/api/config"))
        .header("x-api-key", "s3cret")
        .call()
        .unwrap();
    assert_eq!(r.status().as_u16(), 200);
    let _ = r.body_mut().read_to_string();
}
