//! Local stand-in for a VQA endpoint, used by the integration tests and the
//! `mock-server` subcommand.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use base64::Engine;
use sha2::{Digest, Sha256};

use super::oracle::{ReplayOracle, VqaRequest, VqaResponse};
use super::{augment_dataset, AcquisitionError, DatasetManifest};
use crate::question_grid::Question;
use crate::seeded_rng;

type Responder = dyn Fn(&[u8], &str) -> Option<String> + Send + Sync;

/// Maps (augmented image, question text) back to a recorded answer.
///
/// The augmented PNGs are regenerated from the manifest and seed exactly as
/// a `collect` run with the same seed would produce them.
pub struct ReplayResponder {
    by_pixels: HashMap<[u8; 32], (String, usize)>,
    by_text: HashMap<String, usize>,
    replay: ReplayOracle,
}

impl ReplayResponder {
    pub fn new(
        manifest: &DatasetManifest,
        image_root: &Path,
        questions: &[Question],
        n_aug: usize,
        seed: u64,
        replay: ReplayOracle,
    ) -> Result<Self, AcquisitionError> {
        let pngs = augment_dataset(manifest, image_root, n_aug, &mut seeded_rng(seed))?;
        let mut by_pixels = HashMap::new();
        for (entry, variants) in manifest.entries.iter().zip(&pngs) {
            for (aug, png) in variants.iter().enumerate() {
                let key: [u8; 32] = Sha256::digest(png).into();
                // Identical pixels answer as the first image that produced them.
                by_pixels
                    .entry(key)
                    .or_insert_with(|| (entry.image_id.clone(), aug));
            }
        }
        let by_text = questions.iter().map(|q| (q.text.clone(), q.id)).collect();
        Ok(ReplayResponder {
            by_pixels,
            by_text,
            replay,
        })
    }

    pub fn respond(&self, png: &[u8], question: &str) -> Option<String> {
        let key: [u8; 32] = Sha256::digest(png).into();
        let (image_id, aug) = self.by_pixels.get(&key)?;
        let qid = *self.by_text.get(question)?;
        self.replay.get(image_id, *aug, qid).map(str::to_string)
    }
}

pub struct MockVqaServer {
    server: Arc<tiny_http::Server>,
    addr: SocketAddr,
    requests: Arc<AtomicUsize>,
    workers: Vec<JoinHandle<()>>,
}

impl MockVqaServer {
    /// Binds `bind` (use port 0 for an ephemeral port). Unknown
    /// (image, question) pairs get HTTP 404.
    pub fn start<F>(bind: &str, workers: usize, responder: F) -> Result<Self, AcquisitionError>
    where
        F: Fn(&[u8], &str) -> Option<String> + Send + Sync + 'static,
    {
        let server =
            tiny_http::Server::http(bind).map_err(|e| AcquisitionError::Server(e.to_string()))?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| AcquisitionError::Server("not bound to an IP socket".into()))?;
        let server = Arc::new(server);
        let requests = Arc::new(AtomicUsize::new(0));
        let responder: Arc<Responder> = Arc::new(responder);
        let workers = (0..workers.max(1))
            .map(|_| {
                let server = Arc::clone(&server);
                let requests = Arc::clone(&requests);
                let responder = Arc::clone(&responder);
                std::thread::spawn(move || {
                    while let Ok(request) = server.recv() {
                        requests.fetch_add(1, Ordering::SeqCst);
                        handle(request, responder.as_ref());
                    }
                })
            })
            .collect();
        Ok(MockVqaServer {
            server,
            addr,
            requests,
            workers,
        })
    }

    pub fn replaying(bind: &str, responder: ReplayResponder) -> Result<Self, AcquisitionError> {
        Self::start(bind, 4, move |png, q| responder.respond(png, q))
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    /// Blocks until the server is shut down from another thread or process exit.
    pub fn join(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for MockVqaServer {
    fn drop(&mut self) {
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn handle(mut request: tiny_http::Request, responder: &Responder) {
    use tiny_http::{Header, Method, Response};

    let reply = |status: u16, body: String| {
        let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
        Response::from_string(body)
            .with_status_code(status)
            .with_header(header)
    };
    if request.method() != &Method::Post || request.url() != "/vqa" {
        let _ = request.respond(reply(404, r#"{"error":"not found"}"#.into()));
        return;
    }
    let parsed: Result<VqaRequest, _> = serde_json::from_reader(request.as_reader());
    let response = match parsed {
        Err(e) => reply(
            400,
            serde_json::json!({ "error": e.to_string() }).to_string(),
        ),
        Ok(body) => match base64::engine::general_purpose::STANDARD.decode(&body.image) {
            Err(e) => reply(
                400,
                serde_json::json!({ "error": e.to_string() }).to_string(),
            ),
            Ok(png) => match responder(&png, &body.question) {
                Some(answer) => reply(
                    200,
                    serde_json::to_string(&VqaResponse { answer }).expect("response serializes"),
                ),
                None => reply(404, r#"{"error":"no recorded answer"}"#.into()),
            },
        },
    };
    let _ = request.respond(response);
}
