//! Client workflow: setup once, then query and verify.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use twog2t::group::PrimeGroup;
use twog2t::lab::trial_rng;
use twog2t::protocol::{client_verify, merged_bases, setup, SecretKey};
use twog2t::wire::{ErrorCode, SessionId};

use crate::client::{Client, ClientError};
use crate::files;
use crate::server::{self, Server, ServerConfig, ServerMode};

/// Seeded runs draw bases, key material and queries from these streams of
/// [`trial_rng`].
pub const BASES_STREAM: u64 = 0;
pub const KEY_STREAM: u64 = 1;
pub const QUERY_STREAM: u64 = 2;

pub const EXIT_ACCEPT: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_REJECT: i32 = 2;

#[derive(Debug, Clone)]
pub struct OutsourceConfig {
    /// Server address; `None` starts a local server on a loopback port.
    pub connect: Option<String>,
    pub n: usize,
    pub queries: usize,
    pub key_file: Option<PathBuf>,
    pub bases_file: Option<PathBuf>,
    /// Deterministic bases, key and queries. Without a seed everything comes
    /// from OS entropy.
    pub seed: Option<u64>,
    /// Behaviour of the local server when `connect` is `None`.
    pub server_mode: ServerMode,
    /// Send `P` along with `T`. Disable when the server was started with the
    /// same bases file.
    pub upload_bases: bool,
}

impl Default for OutsourceConfig {
    fn default() -> Self {
        Self {
            connect: None,
            n: 1024,
            queries: 1,
            key_file: None,
            bases_file: None,
            seed: None,
            server_mode: ServerMode::Honest,
            upload_bases: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryOutcome {
    pub index: usize,
    pub accepted: bool,
    /// Encoding of the accepted output `A`.
    pub output: Option<Vec<u8>>,
    pub verify_time: Duration,
}

#[derive(Debug, Clone)]
pub struct OutsourceReport {
    pub session: SessionId,
    pub uploads: usize,
    pub queries: Vec<QueryOutcome>,
}

impl OutsourceReport {
    pub fn rejected(&self) -> bool {
        self.queries.iter().any(|q| !q.accepted)
    }

    pub fn exit_code(&self) -> i32 {
        if self.rejected() {
            EXIT_REJECT
        } else {
            EXIT_ACCEPT
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OutsourceError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Protocol(#[from] twog2t::Error),
    #[error("{0}")]
    Config(String),
}

fn rng_for(seed: Option<u64>, stream: u64) -> ChaCha20Rng {
    match seed {
        Some(seed) => trial_rng(seed, stream),
        None => ChaCha20Rng::from_entropy(),
    }
}

fn load_or_generate_bases<G: PrimeGroup>(group: &G, config: &OutsourceConfig) -> Result<Vec<G::Element>, OutsourceError> {
    if let Some(path) = config.bases_file.as_ref().filter(|p| p.exists()) {
        let bases = files::read_bases(path, group)?;
        if bases.len() != config.n {
            return Err(OutsourceError::Config(format!(
                "bases file holds {} elements but --n is {}",
                bases.len(),
                config.n
            )));
        }
        return Ok(bases);
    }
    let mut rng = rng_for(config.seed, BASES_STREAM);
    let bases: Vec<_> = (0..config.n).map(|_| group.random_element(&mut rng)).collect();
    if let Some(path) = &config.bases_file {
        files::write_bases(path, group, &bases)?;
    }
    Ok(bases)
}

/// Loads the persisted key and session, or runs a fresh setup. Returns the
/// key, the session id, and whether the session is already on the server.
fn load_or_setup<G: PrimeGroup>(
    group: &G,
    bases: &[G::Element],
    config: &OutsourceConfig,
) -> Result<(SecretKey<G>, SessionId, bool), OutsourceError> {
    let mut rng = rng_for(config.seed, KEY_STREAM);
    if let Some(path) = config.key_file.as_ref().filter(|p| p.exists()) {
        let key = files::load_key(path, group)?;
        if key.len() != bases.len() {
            return Err(OutsourceError::Config(format!("key file is for n={}, bases have n={}", key.len(), bases.len())));
        }
        return Ok(match files::load_session(path) {
            Ok(session) => (key, session, true),
            Err(_) => (key, SessionId::random(&mut rng), false),
        });
    }
    let (key, _) = setup(group, bases.to_vec(), &mut rng)?;
    if let Some(path) = &config.key_file {
        files::save_key(path, group, &key)?;
    }
    Ok((key, SessionId::random(&mut rng), false))
}

struct Uploader<'a, G: PrimeGroup> {
    group: &'a G,
    bases: &'a [G::Element],
    key: &'a SecretKey<G>,
    session: SessionId,
    with_bases: bool,
    key_file: Option<&'a PathBuf>,
    count: usize,
}

impl<G: PrimeGroup> Uploader<'_, G> {
    fn upload(&mut self, client: &mut Client<G>) -> Result<(), OutsourceError> {
        let merged = merged_bases(self.group, self.bases, self.key.r(), self.key.rho())?;
        client.upload(&self.session, self.with_bases.then_some(self.bases), &merged)?;
        if let Some(path) = self.key_file {
            files::save_session(path, &self.session)?;
        }
        self.count += 1;
        Ok(())
    }
}

/// Runs setup (unless a persisted session exists) and `queries` verified
/// queries, writing one line per query to `out`. Stops at the first reject.
/// An unknown-session error triggers one re-upload and a retry.
pub fn run_outsource<G: PrimeGroup>(
    group: G,
    config: &OutsourceConfig,
    out: &mut dyn Write,
) -> Result<OutsourceReport, OutsourceError> {
    if config.n == 0 {
        return Err(OutsourceError::Config("--n must be positive".into()));
    }
    let bases = load_or_generate_bases(&group, config)?;
    let (key, session, on_server) = load_or_setup(&group, &bases, config)?;

    let _local_server;
    let mut client = match &config.connect {
        Some(addr) => Client::connect(group.clone(), addr.as_str())?,
        None => {
            let mut server_config = ServerConfig::new(group.clone());
            server_config.mode = config.server_mode;
            let handle = server::spawn("127.0.0.1:0", Arc::new(Server::new(server_config)))?;
            let addr = handle.local_addr();
            _local_server = handle;
            Client::connect(group.clone(), addr)?
        }
    };

    let mut uploader = Uploader {
        group: &group,
        bases: &bases,
        key: &key,
        session,
        with_bases: config.upload_bases,
        key_file: config.key_file.as_ref(),
        count: 0,
    };
    if !on_server {
        uploader.upload(&mut client)?;
    }

    let mut rng = rng_for(config.seed, QUERY_STREAM);
    let mut outcomes = Vec::with_capacity(config.queries);
    for index in 0..config.queries {
        let x: Vec<_> = (0..config.n).map(|_| group.sample_scalar(&mut rng)).collect();
        let resp = match client.query(&session, &x) {
            Err(e) if e.server_code() == Some(ErrorCode::UnknownSession) => {
                log::info!("server does not know session {session}; uploading again");
                uploader.upload(&mut client)?;
                client.query(&session, &x)?
            }
            other => other?,
        };
        let record = client_verify(&group, &key, &x, &resp)?;
        let output = record.verdict.output().map(|a| group.encode_element(a));
        match &output {
            Some(a) => writeln!(out, "query {index}: accept A={}", hex::encode(a))?,
            None => writeln!(out, "query {index}: reject")?,
        }
        let accepted = output.is_some();
        outcomes.push(QueryOutcome { index, accepted, output, verify_time: record.total_time });
        if !accepted {
            break;
        }
    }
    Ok(OutsourceReport { session, uploads: uploader.count, queries: outcomes })
}
