//! On-disk formats.
//!
//! Key file: `magic (8) || version (1) || q (32, little-endian) || n (8,
//! big-endian) || r (32) || n × ρ_i (32 each)`, created with mode 0600.
//! The session id lives next to it in `<key file>.session` as hex.
//!
//! Bases file: `n (8, big-endian) || n × 32-byte element`.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use twog2t::group::{PrimeGroup, SLOT_BYTES};
use twog2t::protocol::SecretKey;
use twog2t::wire::SessionId;

pub const KEY_MAGIC: [u8; 8] = *b"2G2TKEY\0";
pub const KEY_VERSION: u8 = 0x01;
const KEY_HEADER: usize = 8 + 1 + 32 + 8;

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn order_bytes<G: PrimeGroup>(group: &G) -> [u8; 32] {
    let mut out = [0u8; 32];
    let le = group.order().to_bytes_le();
    out[..le.len()].copy_from_slice(&le);
    out
}

#[cfg(unix)]
fn create_private(path: &Path) -> io::Result<fs::File> {
    use std::os::unix::fs::OpenOptionsExt;
    OpenOptions::new().write(true).create(true).truncate(true).mode(0o600).open(path)
}

#[cfg(not(unix))]
fn create_private(path: &Path) -> io::Result<fs::File> {
    OpenOptions::new().write(true).create(true).truncate(true).open(path)
}

pub fn save_key<G: PrimeGroup>(path: &Path, group: &G, key: &SecretKey<G>) -> io::Result<()> {
    let mut out = Vec::with_capacity(KEY_HEADER + (key.len() + 1) * SLOT_BYTES);
    out.extend_from_slice(&KEY_MAGIC);
    out.push(KEY_VERSION);
    out.extend_from_slice(&order_bytes(group));
    out.extend_from_slice(&(key.len() as u64).to_be_bytes());
    out.extend_from_slice(&group.scalar_to_bytes(key.r()));
    for rho in key.rho() {
        out.extend_from_slice(&group.scalar_to_bytes(rho));
    }
    let mut file = create_private(path)?;
    file.write_all(&out)?;
    file.sync_all()
}

pub fn load_key<G: PrimeGroup>(path: &Path, group: &G) -> io::Result<SecretKey<G>> {
    let bytes = fs::read(path)?;
    if bytes.len() < KEY_HEADER + SLOT_BYTES {
        return Err(invalid("key file is truncated"));
    }
    if bytes[..8] != KEY_MAGIC {
        return Err(invalid("not a key file"));
    }
    if bytes[8] != KEY_VERSION {
        return Err(invalid(format!("unsupported key file version {}", bytes[8])));
    }
    if bytes[9..41] != order_bytes(group) {
        return Err(invalid("key file belongs to a different group"));
    }
    let n = u64::from_be_bytes(bytes[41..49].try_into().expect("8 bytes"));
    let expected = usize::try_from(n)
        .ok()
        .and_then(|n| n.checked_add(1)?.checked_mul(SLOT_BYTES)?.checked_add(KEY_HEADER));
    if n == 0 || expected != Some(bytes.len()) {
        return Err(invalid("key file length does not match its header"));
    }
    let mut scalars = bytes[KEY_HEADER..].chunks_exact(SLOT_BYTES).map(|c| {
        group.scalar_from_bytes(c.try_into().expect("slot")).map_err(|_| invalid("non-canonical scalar in key file"))
    });
    let r = scalars.next().expect("length checked")?;
    let rho = scalars.collect::<io::Result<Vec<_>>>()?;
    Ok(SecretKey::new(r, rho))
}

pub fn session_path(key_path: &Path) -> PathBuf {
    let mut name = key_path.as_os_str().to_owned();
    name.push(".session");
    PathBuf::from(name)
}

pub fn save_session(key_path: &Path, session: &SessionId) -> io::Result<()> {
    fs::write(session_path(key_path), format!("{session}\n"))
}

pub fn load_session(key_path: &Path) -> io::Result<SessionId> {
    let text = fs::read_to_string(session_path(key_path))?;
    SessionId::from_hex(&text).ok_or_else(|| invalid("malformed session file"))
}

pub fn encode_bases<G: PrimeGroup>(group: &G, bases: &[G::Element]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + bases.len() * SLOT_BYTES);
    out.extend_from_slice(&(bases.len() as u64).to_be_bytes());
    for p in bases {
        out.extend_from_slice(&group.element_to_slot(p));
    }
    out
}

pub fn decode_bases<G: PrimeGroup>(group: &G, bytes: &[u8]) -> io::Result<Vec<G::Element>> {
    let header: [u8; 8] = bytes.get(..8).and_then(|h| h.try_into().ok()).ok_or_else(|| invalid("bases file is truncated"))?;
    let n = u64::from_be_bytes(header);
    let body = &bytes[8..];
    if n == 0 || (body.len() / SLOT_BYTES) as u64 != n || !body.len().is_multiple_of(SLOT_BYTES) {
        return Err(invalid("bases file length does not match its header"));
    }
    body.chunks_exact(SLOT_BYTES)
        .enumerate()
        .map(|(i, c)| {
            group.element_from_slot(c.try_into().expect("slot")).map_err(|_| invalid(format!("invalid element {i}")))
        })
        .collect()
}

pub fn write_bases<G: PrimeGroup>(path: &Path, group: &G, bases: &[G::Element]) -> io::Result<()> {
    fs::write(path, encode_bases(group, bases))
}

pub fn read_bases<G: PrimeGroup>(path: &Path, group: &G) -> io::Result<Vec<G::Element>> {
    decode_bases(group, &fs::read(path)?)
}
