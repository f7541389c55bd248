#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use hvd::service::{router, AppState};
use hvd::synth::{synth_corpus, write_corpus, SyntheticCorpus, SyntheticCorpusConfig};
use hvd::{ConfigBuilder, Engine, Mode, Store};

/// A small synthetic corpus with short embeddings.
pub fn corpus(per_topic: usize, embedding_dim: usize, seed: u64) -> SyntheticCorpus {
    synth_corpus(&SyntheticCorpusConfig {
        per_topic,
        embedding_dim,
        seed,
        ..Default::default()
    })
    .unwrap()
}

pub fn engine(c: &SyntheticCorpus, dim: usize, modes: &[Mode]) -> Engine {
    let cfg = ConfigBuilder::new(dim, 1)
        .embedding_dim(c.config.embedding_dim)
        .modes(modes)
        .time_range(c.config.start, c.config.end)
        .build()
        .unwrap();
    let (e, rep) = Engine::build(cfg, c.records.clone()).unwrap();
    assert!(rep.rejected.is_empty(), "{:?}", rep.rejected);
    e
}

/// Writes `c` as input files under `dir`, returning the records path.
pub fn write_input(dir: &Path, c: &SyntheticCorpus) -> std::path::PathBuf {
    let out = dir.join("corpus.jsonl");
    write_corpus(c, &out).unwrap();
    out
}

/// Serves `state` on an ephemeral port from a background runtime.
pub fn spawn(state: AppState) -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(Arc::new(state));
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    format!("http://{addr}")
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(120)))
        .build()
        .into()
}

pub fn post(base: &str, path: &str, body: &serde_json::Value) -> (u16, serde_json::Value) {
    let mut r = agent().post(&format!("{base}{path}")).send_json(body).unwrap();
    let status = r.status().as_u16();
    (status, r.body_mut().read_json().unwrap())
}

pub fn get(base: &str, path: &str) -> (u16, serde_json::Value) {
    let mut r = agent().get(&format!("{base}{path}")).call().unwrap();
    let status = r.status().as_u16();
    (status, r.body_mut().read_json().unwrap())
}

pub fn ids(resp: &serde_json::Value) -> Vec<String> {
    resp["matches"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["id"].as_str().unwrap().to_string())
        .collect()
}

pub fn open_store(dir: &Path) -> Store {
    Store::new(dir.join("store"))
}
