#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use symenv_server::{router, AppState, Store};

pub struct TestServer {
    pub base: String,
    pub store: Arc<Store>,
}

/// Serves a fresh store on an ephemeral port from a background thread.
pub fn start(write_hold: Duration) -> TestServer {
    let store = Arc::new(Store::new(Duration::from_secs(3600)));
    let state = AppState { store: store.clone(), write_hold };
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            symenv_server::routes::serve(listener, router(state, None), std::future::pending()).await.unwrap();
        });
    });
    let addr = rx.recv().unwrap();
    TestServer { base: format!("http://{addr}"), store }
}

impl TestServer {
    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }
}
