//! The boundary between an agent and a world: what the character can see,
//! the commands it can issue, and a line-oriented wire protocol so the same
//! agent can drive a world in-process or over a socket.

mod codec;
mod los;
mod observe;
mod session;

pub use codec::{
    decode_request, decode_response, encode_request, encode_response, DecodeError, Request, RequestBody, Response,
};
pub use los::{line_of_sight, line_of_sight_by, supercover};
pub use observe::{observe, CellView, LevelInfo, Observation};
pub use session::{
    serve_session, serve_tcp, spawn_tcp_server, EnvError, EnvSession, Executed, LevelSet, RemoteClient, SessionState,
    Transport,
};

pub use crate::world::{Command, CommandResult};
