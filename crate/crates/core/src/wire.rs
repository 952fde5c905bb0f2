//! Framed binary messages between client and server.
//!
//! Every message is `type (1) || version (1) || payload_len (4, big-endian) ||
//! payload`. Counts are 8-byte big-endian; group elements and scalars occupy
//! 32-byte slots in their canonical encodings.
//!
//! | type | payload |
//! |------|---------|
//! | `0x01` SETUP_UPLOAD | `session_id (16) \|\| setup body` |
//! | `0x02` QUERY | `session_id (16) \|\| n (8) \|\| n × scalar` |
//! | `0x03` RESPONSE | `A \|\| B` (64 bytes), or `session_id` acknowledging a setup |
//! | `0x04` ERROR | `code (1) \|\| UTF-8 message` |
//!
//! The setup body is `flags (1, bit0 = P present) || n (8) || n × T || [n × P]`.
//!
//! Nothing here encrypts or authenticates: the channel is assumed authentic.
//! There is no encoder for the client's secret key.

use std::fmt;
use std::io::{self, Read, Write};

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::group::{PrimeGroup, SLOT_BYTES};
use crate::protocol::QueryResponse;

pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 6;
pub const SESSION_ID_LEN: usize = 16;
/// Largest vector length accepted in a setup or query.
pub const MAX_ELEMENTS: u64 = 1 << 32;
/// Size of an encoded response payload.
pub const RESPONSE_LEN: usize = 2 * SLOT_BYTES;

const FLAG_BASES_PRESENT: u8 = 0x01;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("truncated message: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("unknown message type 0x{0:02x}")]
    UnknownType(u8),
    #[error("unsupported protocol version 0x{0:02x}")]
    UnsupportedVersion(u8),
    #[error("unexpected message type {0:?}")]
    UnexpectedType(MessageType),
    #[error("payload of {0} bytes exceeds the limit")]
    PayloadTooLarge(u64),
    #[error("vector length {0} outside 1..=2^32")]
    BadCount(u64),
    #[error("unknown setup flags 0x{0:02x}")]
    BadFlags(u8),
    #[error("invalid group element at index {0}")]
    InvalidElement(usize),
    #[error("invalid scalar at index {0}")]
    InvalidScalar(usize),
    #[error("bases and merged bases differ in length")]
    BasesLengthMismatch,
    #[error("unknown error code 0x{0:02x}")]
    UnknownErrorCode(u8),
    #[error("error message is not valid UTF-8")]
    BadErrorMessage,
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl WireError {
    /// Whether the byte stream can no longer be trusted to be in sync.
    pub fn is_fatal(&self) -> bool {
        matches!(self, WireError::Io(_) | WireError::PayloadTooLarge(_))
    }
}

pub type WireResult<T> = std::result::Result<T, WireError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MessageType {
    SetupUpload = 0x01,
    Query = 0x02,
    Response = 0x03,
    Error = 0x04,
}

impl TryFrom<u8> for MessageType {
    type Error = WireError;

    fn try_from(b: u8) -> WireResult<Self> {
        match b {
            0x01 => Ok(MessageType::SetupUpload),
            0x02 => Ok(MessageType::Query),
            0x03 => Ok(MessageType::Response),
            0x04 => Ok(MessageType::Error),
            other => Err(WireError::UnknownType(other)),
        }
    }
}

/// Client-chosen identifier binding queries to a setup.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId(pub [u8; SESSION_ID_LEN]);

impl SessionId {
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut id = [0u8; SESSION_ID_LEN];
        rng.fill_bytes(&mut id);
        Self(id)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let mut id = [0u8; SESSION_ID_LEN];
        hex::decode_to_slice(s.trim(), &mut id).ok()?;
        Some(Self(id))
    }
}

impl fmt::Debug for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionId({})", self.to_hex())
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MessageType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(msg_type: MessageType, payload: Vec<u8>) -> Self {
        Self { msg_type, payload }
    }

    pub fn encode(&self) -> WireResult<Vec<u8>> {
        let len = u32::try_from(self.payload.len())
            .map_err(|_| WireError::PayloadTooLarge(self.payload.len() as u64))?;
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.push(self.msg_type as u8);
        out.push(VERSION);
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Decodes exactly one frame occupying all of `buf`.
    pub fn decode(buf: &[u8]) -> WireResult<Self> {
        let header: &[u8; HEADER_LEN] = buf
            .get(..HEADER_LEN)
            .and_then(|h| h.try_into().ok())
            .ok_or(WireError::Truncated { needed: HEADER_LEN, available: buf.len() })?;
        let len = u32::from_be_bytes(header[2..6].try_into().expect("4 bytes")) as usize;
        let body = &buf[HEADER_LEN..];
        if body.len() < len {
            return Err(WireError::Truncated { needed: HEADER_LEN + len, available: buf.len() });
        }
        if body.len() > len {
            return Err(WireError::TrailingBytes(body.len() - len));
        }
        Self::validate(header, body.to_vec())
    }

    /// Reads one frame. The payload is consumed before the type and version
    /// are validated, so a rejected frame leaves the stream in sync.
    pub fn read_from<R: Read>(reader: &mut R, max_payload: usize) -> WireResult<Self> {
        let mut header = [0u8; HEADER_LEN];
        reader.read_exact(&mut header)?;
        let len = u32::from_be_bytes(header[2..6].try_into().expect("4 bytes"));
        if len as usize > max_payload {
            return Err(WireError::PayloadTooLarge(len as u64));
        }
        let mut payload = vec![0u8; len as usize];
        reader.read_exact(&mut payload)?;
        Self::validate(&header, payload)
    }

    pub fn write_to<W: Write>(&self, writer: &mut W) -> WireResult<()> {
        writer.write_all(&self.encode()?)?;
        writer.flush()?;
        Ok(())
    }

    fn validate(header: &[u8; HEADER_LEN], payload: Vec<u8>) -> WireResult<Self> {
        let msg_type = MessageType::try_from(header[0])?;
        if header[1] != VERSION {
            return Err(WireError::UnsupportedVersion(header[1]));
        }
        Ok(Self { msg_type, payload })
    }

    pub fn expect(self, msg_type: MessageType) -> WireResult<Vec<u8>> {
        if self.msg_type == msg_type {
            Ok(self.payload)
        } else {
            Err(WireError::UnexpectedType(self.msg_type))
        }
    }
}

/// Sequential reader over a payload.
struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> WireResult<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(WireError::Truncated {
            needed: self.pos.saturating_add(n),
            available: self.buf.len(),
        })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> WireResult<&'a [u8; N]> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }

    fn u8(&mut self) -> WireResult<u8> {
        Ok(self.take(1)?[0])
    }

    fn count(&mut self) -> WireResult<usize> {
        let n = u64::from_be_bytes(*self.array::<8>()?);
        if n == 0 || n > MAX_ELEMENTS {
            return Err(WireError::BadCount(n));
        }
        usize::try_from(n).map_err(|_| WireError::BadCount(n))
    }

    /// Checks that `n` slots are present before decoding any of them, so a
    /// hostile count cannot trigger a large allocation.
    fn ensure_slots(&self, n: usize) -> WireResult<()> {
        let needed = n.checked_mul(SLOT_BYTES).and_then(|b| b.checked_add(self.pos));
        match needed {
            Some(end) if end <= self.buf.len() => Ok(()),
            _ => Err(WireError::Truncated {
                needed: needed.unwrap_or(usize::MAX),
                available: self.buf.len(),
            }),
        }
    }

    fn elements<G: PrimeGroup>(&mut self, group: &G, n: usize) -> WireResult<Vec<G::Element>> {
        self.ensure_slots(n)?;
        (0..n)
            .map(|i| group.element_from_slot(self.array()?).map_err(|_| WireError::InvalidElement(i)))
            .collect()
    }

    fn scalars<G: PrimeGroup>(&mut self, group: &G, n: usize) -> WireResult<Vec<G::Scalar>> {
        self.ensure_slots(n)?;
        (0..n)
            .map(|i| group.scalar_from_bytes(self.array()?).map_err(|_| WireError::InvalidScalar(i)))
            .collect()
    }

    fn finish(self) -> WireResult<()> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            extra => Err(WireError::TrailingBytes(extra)),
        }
    }
}

fn check_count(n: usize) -> WireResult<()> {
    if n == 0 || n as u64 > MAX_ELEMENTS {
        return Err(WireError::BadCount(n as u64));
    }
    Ok(())
}

/// Decoded setup body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetupPayload<E> {
    pub merged: Vec<E>,
    pub bases: Option<Vec<E>>,
}

/// Setup body: `flags || n || T || [P]`.
pub fn encode_setup<G: PrimeGroup>(
    group: &G,
    bases: Option<&[G::Element]>,
    merged: &[G::Element],
) -> WireResult<Vec<u8>> {
    check_count(merged.len())?;
    if bases.is_some_and(|p| p.len() != merged.len()) {
        return Err(WireError::BasesLengthMismatch);
    }
    let slots = merged.len() * if bases.is_some() { 2 } else { 1 };
    let mut out = Vec::with_capacity(9 + slots * SLOT_BYTES);
    out.push(if bases.is_some() { FLAG_BASES_PRESENT } else { 0 });
    out.extend_from_slice(&(merged.len() as u64).to_be_bytes());
    for t in merged {
        out.extend_from_slice(&group.element_to_slot(t));
    }
    for p in bases.into_iter().flatten() {
        out.extend_from_slice(&group.element_to_slot(p));
    }
    Ok(out)
}

pub fn decode_setup<G: PrimeGroup>(group: &G, payload: &[u8]) -> WireResult<SetupPayload<G::Element>> {
    let mut cur = Cursor::new(payload);
    let flags = cur.u8()?;
    if flags & !FLAG_BASES_PRESENT != 0 {
        return Err(WireError::BadFlags(flags));
    }
    let n = cur.count()?;
    let merged = cur.elements(group, n)?;
    let bases = if flags & FLAG_BASES_PRESENT != 0 { Some(cur.elements(group, n)?) } else { None };
    cur.finish()?;
    Ok(SetupPayload { merged, bases })
}

/// SETUP_UPLOAD frame: `session_id || setup body`.
pub fn setup_upload_frame<G: PrimeGroup>(
    group: &G,
    session: &SessionId,
    bases: Option<&[G::Element]>,
    merged: &[G::Element],
) -> WireResult<Frame> {
    let body = encode_setup(group, bases, merged)?;
    let mut payload = Vec::with_capacity(SESSION_ID_LEN + body.len());
    payload.extend_from_slice(&session.0);
    payload.extend_from_slice(&body);
    Ok(Frame::new(MessageType::SetupUpload, payload))
}

pub fn decode_setup_upload<G: PrimeGroup>(
    group: &G,
    payload: &[u8],
) -> WireResult<(SessionId, SetupPayload<G::Element>)> {
    let mut cur = Cursor::new(payload);
    let session = SessionId(*cur.array()?);
    Ok((session, decode_setup(group, &payload[cur.pos..])?))
}

/// RESPONSE frame acknowledging a setup.
pub fn setup_ack_frame(session: &SessionId) -> Frame {
    Frame::new(MessageType::Response, session.0.to_vec())
}

pub fn decode_setup_ack(payload: &[u8]) -> WireResult<SessionId> {
    let mut cur = Cursor::new(payload);
    let id = SessionId(*cur.array()?);
    cur.finish()?;
    Ok(id)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPayload<S> {
    pub session: SessionId,
    pub x: Vec<S>,
}

/// Query payload: `session_id || n || x`.
pub fn encode_query<G: PrimeGroup>(group: &G, session: &SessionId, x: &[G::Scalar]) -> Vec<u8> {
    let mut out = Vec::with_capacity(SESSION_ID_LEN + 8 + x.len() * SLOT_BYTES);
    out.extend_from_slice(&session.0);
    out.extend_from_slice(&(x.len() as u64).to_be_bytes());
    for s in x {
        out.extend_from_slice(&group.scalar_to_bytes(s));
    }
    out
}

pub fn decode_query<G: PrimeGroup>(group: &G, payload: &[u8]) -> WireResult<QueryPayload<G::Scalar>> {
    let mut cur = Cursor::new(payload);
    let session = SessionId(*cur.array()?);
    let n = cur.count()?;
    let x = cur.scalars(group, n)?;
    cur.finish()?;
    Ok(QueryPayload { session, x })
}

pub fn query_frame<G: PrimeGroup>(group: &G, session: &SessionId, x: &[G::Scalar]) -> Frame {
    Frame::new(MessageType::Query, encode_query(group, session, x))
}

/// Response payload: `A || B`, always [`RESPONSE_LEN`] bytes.
pub fn encode_response<G: PrimeGroup>(group: &G, resp: &QueryResponse<G::Element>) -> Vec<u8> {
    let mut out = Vec::with_capacity(RESPONSE_LEN);
    out.extend_from_slice(&group.element_to_slot(&resp.a));
    out.extend_from_slice(&group.element_to_slot(&resp.b));
    out
}

pub fn decode_response<G: PrimeGroup>(group: &G, payload: &[u8]) -> WireResult<QueryResponse<G::Element>> {
    let mut cur = Cursor::new(payload);
    let a = group.element_from_slot(cur.array()?).map_err(|_| WireError::InvalidElement(0))?;
    let b = group.element_from_slot(cur.array()?).map_err(|_| WireError::InvalidElement(1))?;
    cur.finish()?;
    Ok(QueryResponse { a, b })
}

pub fn response_frame<G: PrimeGroup>(group: &G, resp: &QueryResponse<G::Element>) -> Frame {
    Frame::new(MessageType::Response, encode_response(group, resp))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ErrorCode {
    UnknownSession = 0x01,
    LengthMismatch = 0x02,
    Malformed = 0x03,
    CapacityExceeded = 0x04,
    MissingBases = 0x05,
    Internal = 0x06,
}

impl TryFrom<u8> for ErrorCode {
    type Error = WireError;

    fn try_from(b: u8) -> WireResult<Self> {
        Ok(match b {
            0x01 => ErrorCode::UnknownSession,
            0x02 => ErrorCode::LengthMismatch,
            0x03 => ErrorCode::Malformed,
            0x04 => ErrorCode::CapacityExceeded,
            0x05 => ErrorCode::MissingBases,
            0x06 => ErrorCode::Internal,
            other => return Err(WireError::UnknownErrorCode(other)),
        })
    }
}

pub fn error_frame(code: ErrorCode, message: &str) -> Frame {
    let mut payload = Vec::with_capacity(1 + message.len());
    payload.push(code as u8);
    payload.extend_from_slice(message.as_bytes());
    Frame::new(MessageType::Error, payload)
}

pub fn decode_error(payload: &[u8]) -> WireResult<(ErrorCode, String)> {
    let (&code, rest) = payload.split_first().ok_or(WireError::Truncated { needed: 1, available: 0 })?;
    let message = std::str::from_utf8(rest).map_err(|_| WireError::BadErrorMessage)?;
    Ok((ErrorCode::try_from(code)?, message.to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Ristretto255, ToyElement, ToyGroup, ToyScalar};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn points(n: usize, seed: u64) -> Vec<curve25519_dalek::RistrettoPoint> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..n).map(|_| Ristretto255.random_element(&mut rng)).collect()
    }

    #[test]
    fn setup_sizes() {
        let g = Ristretto255;
        let t = points(2, 1);
        assert_eq!(encode_setup(&g, None, &t[..1]).unwrap().len(), 41);
        assert_eq!(encode_setup(&g, Some(&t), &t).unwrap().len(), 137);
        assert!(matches!(encode_setup(&g, None, &[]), Err(WireError::BadCount(0))));
        assert!(matches!(encode_setup(&g, Some(&t[..1]), &t), Err(WireError::BasesLengthMismatch)));
    }

    #[test]
    fn query_sizes() {
        let g = Ristretto255;
        let id = SessionId([7; 16]);
        let x = vec![g.scalar_one(); 3];
        assert_eq!(encode_query(&g, &id, &x).len(), 120);
        let empty = encode_query(&g, &id, &[]);
        assert!(matches!(decode_query(&g, &empty), Err(WireError::BadCount(0))));
    }

    #[test]
    fn response_is_64_bytes() {
        let g = Ristretto255;
        let p = points(2, 2);
        let resp = QueryResponse { a: p[0], b: p[1] };
        let bytes = encode_response(&g, &resp);
        assert_eq!(bytes.len(), 64);
        assert_eq!(decode_response(&g, &bytes).unwrap(), resp);

        let toy = ToyGroup::new(251).unwrap();
        let bytes = encode_response(&toy, &QueryResponse { a: ToyElement(3), b: ToyElement(250) });
        assert_eq!(bytes.len(), 64);
    }

    #[test]
    fn non_canonical_response_rejected() {
        let g = Ristretto255;
        let p = points(1, 3);
        let mut bytes = encode_response(&g, &QueryResponse { a: p[0], b: p[0] });
        bytes[32..].copy_from_slice(&[0xff; 32]);
        assert!(matches!(decode_response(&g, &bytes), Err(WireError::InvalidElement(1))));
        bytes[..32].copy_from_slice(&{
            let mut one = [0u8; 32];
            one[0] = 1;
            one
        });
        assert!(matches!(decode_response(&g, &bytes), Err(WireError::InvalidElement(0))));
    }

    #[test]
    fn frame_header_validation() {
        let frame = Frame::new(MessageType::Query, vec![1, 2, 3]);
        let bytes = frame.encode().unwrap();
        assert_eq!(bytes, vec![0x02, 0x01, 0, 0, 0, 3, 1, 2, 3]);
        assert_eq!(Frame::decode(&bytes).unwrap(), frame);

        let mut bad_type = bytes.clone();
        bad_type[0] = 0x09;
        assert!(matches!(Frame::decode(&bad_type), Err(WireError::UnknownType(0x09))));
        let mut bad_version = bytes.clone();
        bad_version[1] = 0x02;
        assert!(matches!(Frame::decode(&bad_version), Err(WireError::UnsupportedVersion(2))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(Frame::decode(&extra), Err(WireError::TrailingBytes(1))));
    }

    #[test]
    fn stream_stays_in_sync_after_bad_frame() {
        let mut bytes = Frame::new(MessageType::Query, vec![9; 5]).encode().unwrap();
        bytes[1] = 0x7f;
        bytes.extend(Frame::new(MessageType::Error, vec![1]).encode().unwrap());
        let mut reader = bytes.as_slice();
        assert!(matches!(Frame::read_from(&mut reader, 1024), Err(WireError::UnsupportedVersion(0x7f))));
        assert_eq!(Frame::read_from(&mut reader, 1024).unwrap().msg_type, MessageType::Error);
        let big = Frame::new(MessageType::Query, vec![0; 100]).encode().unwrap();
        let err = Frame::read_from(&mut big.as_slice(), 50).unwrap_err();
        assert!(err.is_fatal());
    }

    #[test]
    fn hostile_count_does_not_allocate() {
        let g = Ristretto255;
        let mut payload = vec![0u8; 16];
        payload.extend_from_slice(&MAX_ELEMENTS.to_be_bytes());
        assert!(matches!(decode_query(&g, &payload), Err(WireError::Truncated { .. })));
        payload[16..24].copy_from_slice(&(MAX_ELEMENTS + 1).to_be_bytes());
        assert!(matches!(decode_query(&g, &payload), Err(WireError::BadCount(_))));
    }

    #[test]
    fn setup_upload_and_ack() {
        let g = Ristretto255;
        let t = points(3, 4);
        let id = SessionId([0xab; 16]);
        let frame = setup_upload_frame(&g, &id, None, &t).unwrap();
        assert_eq!(frame.payload.len(), 16 + 9 + 96);
        let (sid, setup) = decode_setup_upload(&g, &frame.payload).unwrap();
        assert_eq!(sid, id);
        assert_eq!(setup, SetupPayload { merged: t, bases: None });
        assert_eq!(decode_setup_ack(&setup_ack_frame(&id).payload).unwrap(), id);
        assert!(decode_setup_ack(&[1; 64]).is_err());
        let mut flags = frame.payload.clone();
        flags[16] = 0x02;
        assert!(matches!(decode_setup_upload(&g, &flags), Err(WireError::BadFlags(2))));
    }

    #[test]
    fn error_messages() {
        let frame = error_frame(ErrorCode::UnknownSession, "no such session");
        assert_eq!(frame.payload[0], 0x01);
        assert_eq!(decode_error(&frame.payload).unwrap(), (ErrorCode::UnknownSession, "no such session".into()));
        assert!(matches!(decode_error(&[0x99]), Err(WireError::UnknownErrorCode(0x99))));
        assert!(decode_error(&[]).is_err());
    }

    #[test]
    fn session_hex() {
        let id = SessionId(std::array::from_fn(|i| i as u8 * 17));
        assert_eq!(SessionId::from_hex(&id.to_hex()), Some(id));
        assert_eq!(SessionId::from_hex("zz"), None);
    }

    fn toy() -> ToyGroup {
        ToyGroup::new(251).unwrap()
    }

    proptest! {
        #[test]
        fn toy_messages_round_trip(
            t in prop::collection::vec(0u64..251, 1..40),
            with_p in any::<bool>(),
            x in prop::collection::vec(0u64..251, 1..40),
            a in 0u64..251, b in 0u64..251,
            id in any::<[u8; 16]>(),
        ) {
            let g = toy();
            let t: Vec<_> = t.into_iter().map(ToyElement).collect();
            let p: Vec<_> = t.iter().rev().copied().collect();
            let bases = with_p.then_some(p.as_slice());
            let body = encode_setup(&g, bases, &t).unwrap();
            let decoded = decode_setup(&g, &body).unwrap();
            prop_assert_eq!(decoded, SetupPayload { merged: t.clone(), bases: bases.map(<[_]>::to_vec) });

            let x: Vec<_> = x.into_iter().map(ToyScalar).collect();
            let q = encode_query(&g, &SessionId(id), &x);
            prop_assert_eq!(decode_query(&g, &q).unwrap(), QueryPayload { session: SessionId(id), x });

            let resp = QueryResponse { a: ToyElement(a), b: ToyElement(b) };
            prop_assert_eq!(decode_response(&g, &encode_response(&g, &resp)).unwrap(), resp);

            let frame = Frame::new(MessageType::Query, q.clone());
            prop_assert_eq!(Frame::decode(&frame.encode().unwrap()).unwrap(), frame);
        }

        #[test]
        fn truncation_is_always_an_error(n in 1usize..6, cut in 1usize..400) {
            let g = Ristretto255;
            let t = points(n, n as u64);
            let body = encode_setup(&g, Some(&t), &t).unwrap();
            let cut = cut.min(body.len());
            prop_assert!(decode_setup(&g, &body[..body.len() - cut]).is_err());

            let q = encode_query(&g, &SessionId([1; 16]), &vec![g.scalar_one(); n]);
            let qcut = cut.min(q.len());
            prop_assert!(decode_query(&g, &q[..q.len() - qcut]).is_err());

            let r = encode_response(&g, &QueryResponse { a: t[0], b: t[0] });
            let rcut = cut.min(r.len());
            prop_assert!(decode_response(&g, &r[..r.len() - rcut]).is_err());

            let framed = Frame::new(MessageType::Query, q).encode().unwrap();
            let fcut = cut.min(framed.len());
            prop_assert!(Frame::decode(&framed[..framed.len() - fcut]).is_err());
        }
    }
}
