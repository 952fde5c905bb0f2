use std::io::{self, BufReader, BufWriter};
use std::net::{TcpStream, ToSocketAddrs};

use twog2t::group::PrimeGroup;
use twog2t::protocol::QueryResponse;
use twog2t::wire::{
    decode_error, decode_response, decode_setup_ack, query_frame, setup_upload_frame, ErrorCode, Frame, MessageType,
    SessionId, WireError,
};

use crate::server::DEFAULT_MAX_FRAME;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(#[from] io::Error),
    #[error("wire: {0}")]
    Wire(WireError),
    #[error("server error {code:?}: {message}")]
    Server { code: ErrorCode, message: String },
    #[error("setup acknowledged for session {0}, expected another")]
    AckMismatch(SessionId),
}

impl From<WireError> for ClientError {
    fn from(e: WireError) -> Self {
        match e {
            WireError::Io(io) => ClientError::Transport(io),
            other => ClientError::Wire(other),
        }
    }
}

impl ClientError {
    pub fn server_code(&self) -> Option<ErrorCode> {
        match self {
            ClientError::Server { code, .. } => Some(*code),
            _ => None,
        }
    }
}

/// One connection to an outsourcing server.
pub struct Client<G: PrimeGroup> {
    group: G,
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    max_frame: usize,
}

impl<G: PrimeGroup> Client<G> {
    pub fn connect(group: G, addr: impl ToSocketAddrs) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self {
            group,
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
            max_frame: DEFAULT_MAX_FRAME,
        })
    }

    /// Sends a frame and returns the reply unchanged, ERROR frames included.
    pub fn exchange(&mut self, frame: &Frame) -> Result<Frame, ClientError> {
        frame.write_to(&mut self.writer)?;
        Ok(Frame::read_from(&mut self.reader, self.max_frame)?)
    }

    /// Like [`exchange`](Self::exchange), but turns ERROR replies into
    /// [`ClientError::Server`] and returns the RESPONSE payload.
    fn request(&mut self, frame: &Frame) -> Result<Vec<u8>, ClientError> {
        let reply = self.exchange(frame)?;
        match reply.msg_type {
            MessageType::Response => Ok(reply.payload),
            MessageType::Error => {
                let (code, message) = decode_error(&reply.payload)?;
                Err(ClientError::Server { code, message })
            }
            other => Err(ClientError::Wire(WireError::UnexpectedType(other))),
        }
    }

    pub fn upload(
        &mut self,
        session: &SessionId,
        bases: Option<&[G::Element]>,
        merged: &[G::Element],
    ) -> Result<(), ClientError> {
        let frame = setup_upload_frame(&self.group, session, bases, merged)?;
        let acked = decode_setup_ack(&self.request(&frame)?)?;
        if acked != *session {
            return Err(ClientError::AckMismatch(acked));
        }
        Ok(())
    }

    /// The raw RESPONSE payload for a query.
    pub fn query_payload(&mut self, session: &SessionId, x: &[G::Scalar]) -> Result<Vec<u8>, ClientError> {
        self.request(&query_frame(&self.group, session, x))
    }

    pub fn query(&mut self, session: &SessionId, x: &[G::Scalar]) -> Result<QueryResponse<G::Element>, ClientError> {
        let payload = self.query_payload(session, x)?;
        Ok(decode_response(&self.group, &payload)?)
    }
}
