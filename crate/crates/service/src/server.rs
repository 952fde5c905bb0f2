//! TCP outsourcing server: caches `(P, T)` per session and answers queries.
//!
//! Messages are unauthenticated; run the server behind an authenticated
//! channel.

use std::fmt;
use std::io::{self, BufReader, BufWriter};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use twog2t::group::PrimeGroup;
use twog2t::lab::attack_partial_sum;
use twog2t::msm::msm_dual;
use twog2t::protocol::QueryResponse;
use twog2t::wire::{
    self, decode_query, decode_setup_upload, error_frame, response_frame, setup_ack_frame, ErrorCode, Frame,
    MessageType, WireError,
};

use crate::store::{SessionStore, DEFAULT_CAPACITY};

/// Largest accepted frame payload (128 MiB).
pub const DEFAULT_MAX_FRAME: usize = 1 << 27;

/// Fault injection for exercising the client's reject paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ServerMode {
    #[default]
    Honest,
    /// The first query of each session gets `A + Q` with an honest `B`.
    CorruptFirst,
    /// `A` and `B` over the first index only.
    PartialSum,
    /// Honest `A`, uniformly random `B`.
    RandomB,
}

impl ServerMode {
    pub const ALL: [ServerMode; 4] =
        [ServerMode::Honest, ServerMode::CorruptFirst, ServerMode::PartialSum, ServerMode::RandomB];

    pub fn name(self) -> &'static str {
        match self {
            ServerMode::Honest => "honest",
            ServerMode::CorruptFirst => "corrupt-first",
            ServerMode::PartialSum => "partial-sum",
            ServerMode::RandomB => "random-b",
        }
    }
}

impl fmt::Display for ServerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ServerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ServerMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown server mode `{s}`"))
    }
}

#[derive(Debug, Clone)]
pub struct ServerConfig<G: PrimeGroup> {
    pub group: G,
    pub mode: ServerMode,
    pub capacity: usize,
    /// Bases used for uploads that carry only `T`.
    pub default_bases: Option<Arc<Vec<G::Element>>>,
    pub max_frame: usize,
}

impl<G: PrimeGroup> ServerConfig<G> {
    pub fn new(group: G) -> Self {
        Self { group, mode: ServerMode::Honest, capacity: DEFAULT_CAPACITY, default_bases: None, max_frame: DEFAULT_MAX_FRAME }
    }
}

/// Connection-independent request handling.
pub struct Server<G: PrimeGroup> {
    config: ServerConfig<G>,
    store: Mutex<SessionStore<G::Element>>,
}

impl<G: PrimeGroup> Server<G> {
    pub fn new(config: ServerConfig<G>) -> Self {
        let store = Mutex::new(SessionStore::new(config.capacity));
        Self { config, store }
    }

    pub fn config(&self) -> &ServerConfig<G> {
        &self.config
    }

    pub fn session_count(&self) -> usize {
        self.lock_store().len()
    }

    fn lock_store(&self) -> std::sync::MutexGuard<'_, SessionStore<G::Element>> {
        self.store.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    /// Answers one request frame. Every failure becomes an ERROR frame.
    pub fn handle(&self, frame: Frame) -> Frame {
        match frame.msg_type {
            MessageType::SetupUpload => self.handle_setup(&frame.payload),
            MessageType::Query => self.handle_query(&frame.payload),
            other => error_frame(ErrorCode::Malformed, &format!("unexpected {other:?} from client")),
        }
    }

    fn handle_setup(&self, payload: &[u8]) -> Frame {
        let group = &self.config.group;
        let (session, setup) = match decode_setup_upload(group, payload) {
            Ok(v) => v,
            Err(e) => return error_frame(ErrorCode::Malformed, &e.to_string()),
        };
        let n = setup.merged.len();
        let bases = match (setup.bases, &self.config.default_bases) {
            (Some(p), _) => Arc::new(p),
            (None, Some(p)) if p.len() == n => Arc::clone(p),
            (None, Some(p)) => {
                return error_frame(
                    ErrorCode::MissingBases,
                    &format!("server bases have length {}, upload has {n}", p.len()),
                )
            }
            (None, None) => return error_frame(ErrorCode::MissingBases, "no bases uploaded and none configured"),
        };
        match self.lock_store().insert(session, bases, setup.merged) {
            Ok(()) => {
                log::debug!("session {session}: stored n={n}");
                setup_ack_frame(&session)
            }
            Err(e) => error_frame(ErrorCode::CapacityExceeded, &e.to_string()),
        }
    }

    fn handle_query(&self, payload: &[u8]) -> Frame {
        let group = &self.config.group;
        let query = match decode_query(group, payload) {
            Ok(q) => q,
            Err(e) => return error_frame(ErrorCode::Malformed, &e.to_string()),
        };
        let Some(session) = self.lock_store().get(&query.session) else {
            return error_frame(ErrorCode::UnknownSession, &format!("unknown session {}", query.session));
        };
        if query.x.len() != session.len() {
            return error_frame(
                ErrorCode::LengthMismatch,
                &format!("session has n={}, query has n={}", session.len(), query.x.len()),
            );
        }
        let previous = session.record_query();
        match self.respond(&session.bases, &session.merged, &query.x, previous) {
            Ok(resp) => response_frame(group, &resp),
            Err(e) => error_frame(ErrorCode::Internal, &e.to_string()),
        }
    }

    fn respond(
        &self,
        bases: &[G::Element],
        merged: &[G::Element],
        x: &[G::Scalar],
        previous_queries: u64,
    ) -> twog2t::Result<QueryResponse<G::Element>> {
        let g = &self.config.group;
        let n = x.len();
        Ok(match self.config.mode {
            ServerMode::Honest => {
                let (a, b) = msm_dual(g, bases, merged, x)?;
                QueryResponse { a, b }
            }
            ServerMode::CorruptFirst => {
                let (a, b) = msm_dual(g, bases, merged, x)?;
                if previous_queries == 0 {
                    QueryResponse { a: g.add(&a, &g.fixed_point()), b }
                } else {
                    QueryResponse { a, b }
                }
            }
            ServerMode::PartialSum if n > 1 => attack_partial_sum(g, bases, merged, x, 1)?,
            // With one index the only strict prefix is empty.
            ServerMode::PartialSum => QueryResponse { a: g.identity(), b: g.identity() },
            ServerMode::RandomB => {
                let (a, _) = msm_dual(g, bases, merged, x)?;
                QueryResponse { a, b: g.random_element(&mut rand::thread_rng()) }
            }
        })
    }

    /// Serves one connection until the peer closes it or the stream breaks.
    /// Malformed frames get an ERROR reply and the connection stays open.
    pub fn serve_connection(&self, stream: TcpStream) -> io::Result<()> {
        stream.set_nodelay(true)?;
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = BufWriter::new(stream);
        loop {
            let reply = match Frame::read_from(&mut reader, self.config.max_frame) {
                Ok(frame) => self.handle(frame),
                Err(WireError::Io(e)) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(()),
                Err(e) if e.is_fatal() => {
                    let _ = error_frame(ErrorCode::Malformed, &e.to_string()).write_to(&mut writer);
                    return Err(io::Error::new(io::ErrorKind::InvalidData, e.to_string()));
                }
                Err(e) => error_frame(ErrorCode::Malformed, &e.to_string()),
            };
            reply.write_to(&mut writer).map_err(|e| match e {
                wire::WireError::Io(io) => io,
                other => io::Error::new(io::ErrorKind::InvalidData, other.to_string()),
            })?;
        }
    }
}

/// A server accepting connections on a background thread.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections. Open connections finish on their own.
    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}

/// Binds `addr` and serves each connection on its own thread.
pub fn spawn<G: PrimeGroup>(addr: impl ToSocketAddrs, server: Arc<Server<G>>) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let stop_flag = Arc::clone(&stop);
    let thread = thread::Builder::new().name("twog2t-accept".into()).spawn(move || {
        accept_loop(listener, server, &stop_flag);
    })?;
    Ok(ServerHandle { addr, stop, thread: Some(thread) })
}

/// Blocking accept loop for the foreground `serve` command. `on_bound`
/// receives the bound address before the first accept.
pub fn serve_forever<G: PrimeGroup>(
    addr: impl ToSocketAddrs,
    server: Arc<Server<G>>,
    on_bound: impl FnOnce(SocketAddr),
) -> io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    on_bound(listener.local_addr()?);
    accept_loop(listener, server, &AtomicBool::new(false));
    Ok(())
}

fn accept_loop<G: PrimeGroup>(listener: TcpListener, server: Arc<Server<G>>, stop: &AtomicBool) {
    for stream in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let server = Arc::clone(&server);
        let spawned = thread::Builder::new().name("twog2t-conn".into()).spawn(move || {
            let peer = stream.peer_addr().ok();
            if let Err(e) = server.serve_connection(stream) {
                log::debug!("connection {peer:?} closed: {e}");
            }
        });
        if let Err(e) = spawned {
            log::warn!("cannot spawn connection thread: {e}");
        }
    }
}
