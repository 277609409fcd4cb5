use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::codec::{
    decode_request, decode_response, encode_request, encode_response, salvage_id, DecodeError, Request, RequestBody,
    Response,
};
use super::observe::{observe, LevelInfo, Observation};
use crate::world::{Command, CommandResult, WorldState};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("transport: {0}")]
    Transport(#[from] io::Error),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("{0}")]
    Env(String),
}

/// Where level files come from: a directory of `<name>.lvl` files, plus any
/// levels registered in memory.
#[derive(Debug, Clone, Default)]
pub struct LevelSet {
    dir: Option<PathBuf>,
    inline: BTreeMap<String, String>,
}

impl LevelSet {
    pub fn from_dir(dir: impl Into<PathBuf>) -> Self {
        LevelSet {
            dir: Some(dir.into()),
            inline: BTreeMap::new(),
        }
    }

    /// The levels shipped with this crate.
    pub fn bundled() -> Self {
        let mut set = LevelSet::default();
        for (name, text) in crate::fixtures::LEVELS {
            set = set.with_level(*name, *text);
        }
        set
    }

    pub fn with_level(mut self, name: impl Into<String>, text: impl Into<String>) -> Self {
        self.inline.insert(name.into(), text.into());
        self
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Path a named level would be read from, if the set is directory-backed.
    pub fn path_of(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{name}.lvl")))
    }

    pub fn source(&self, name: &str) -> Result<String, String> {
        if let Some(text) = self.inline.get(name) {
            return Ok(text.clone());
        }
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(format!("invalid level name {name:?}"));
        }
        match self.path_of(name) {
            Some(path) => {
                std::fs::read_to_string(&path).map_err(|e| format!("cannot read level {}: {e}", path.display()))
            }
            None => Err(format!("unknown level {name:?}")),
        }
    }

    pub fn load(&self, name: &str, seed: u64) -> Result<WorldState, String> {
        let text = self.source(name)?;
        WorldState::load(&text, seed).map_err(|e| format!("level {name:?}: {e}"))
    }
}

/// Reply to an `execute` request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Executed {
    pub result: CommandResult,
    pub tick: u64,
}

/// Server-side state of one session: at most one world at a time.
#[derive(Debug)]
pub struct SessionState {
    levels: Arc<LevelSet>,
    world: Option<WorldState>,
}

impl SessionState {
    pub fn new(levels: Arc<LevelSet>) -> Self {
        SessionState { levels, world: None }
    }

    pub fn world(&self) -> Option<&WorldState> {
        self.world.as_ref()
    }

    fn world_mut(&mut self) -> Result<&mut WorldState, String> {
        self.world.as_mut().ok_or_else(|| "no level loaded".to_string())
    }

    pub fn load(&mut self, name: &str, seed: u64) -> Result<LevelInfo, String> {
        let world = self.levels.load(name, seed)?;
        let info = LevelInfo::of(&world);
        self.world = Some(world);
        Ok(info)
    }

    pub fn spawn(&mut self, station: &str) -> Result<Observation, String> {
        let world = self.world_mut()?;
        world.spawn_at_station(station).map_err(|e| e.to_string())?;
        Ok(observe(world))
    }

    pub fn observe(&self) -> Result<Observation, String> {
        self.world
            .as_ref()
            .map(observe)
            .ok_or_else(|| "no level loaded".to_string())
    }

    pub fn execute(&mut self, cmd: &Command) -> Result<Executed, String> {
        let world = self.world_mut()?;
        let result = world.apply_command(cmd);
        Ok(Executed {
            result,
            tick: world.tick,
        })
    }

    pub fn handle(&mut self, req: &Request) -> Response {
        fn to_value<T: Serialize>(r: Result<T, String>) -> Result<Value, String> {
            r.map(|v| serde_json::to_value(v).expect("payload serializes"))
        }
        let result = match &req.body {
            RequestBody::Observe => to_value(self.observe()),
            RequestBody::Execute(cmd) => to_value(self.execute(cmd)),
            RequestBody::Load { name, seed } => to_value(self.load(name, *seed)),
            RequestBody::Spawn { station } => to_value(self.spawn(station)),
        };
        Response { id: req.id, result }
    }
}

/// Client side of the wire protocol.
pub struct RemoteClient {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    next_id: u64,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient").field("next_id", &self.next_id).finish()
    }
}

impl RemoteClient {
    pub fn new(reader: impl BufRead + Send + 'static, writer: impl Write + Send + 'static) -> Self {
        RemoteClient {
            reader: Box::new(reader),
            writer: Box::new(writer),
            next_id: 1,
        }
    }

    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        Ok(RemoteClient::new(reader, stream))
    }

    pub fn call(&mut self, body: RequestBody) -> Result<Value, EnvError> {
        let id = self.next_id;
        self.next_id += 1;
        self.writer.write_all(&encode_request(&Request { id, body }))?;
        self.writer.flush()?;
        let mut line = Vec::new();
        if self.reader.read_until(b'\n', &mut line)? == 0 {
            return Err(EnvError::Protocol("connection closed".to_string()));
        }
        let resp = decode_response(&line)?;
        if resp.id != id {
            return Err(EnvError::Protocol(format!(
                "response id {} does not echo request id {id}",
                resp.id
            )));
        }
        resp.result.map_err(EnvError::Env)
    }
}

#[derive(Debug)]
pub enum Transport {
    InProcess(SessionState),
    Remote(RemoteClient),
}

static SESSION_IDS: AtomicU64 = AtomicU64::new(1);

/// A strict request/response handle on one environment, local or remote.
#[derive(Debug)]
pub struct EnvSession {
    pub id: u64,
    transport: Transport,
    info: Option<LevelInfo>,
}

impl EnvSession {
    pub fn in_process(levels: Arc<LevelSet>) -> Self {
        Self::with_transport(Transport::InProcess(SessionState::new(levels)))
    }

    pub fn remote(client: RemoteClient) -> Self {
        Self::with_transport(Transport::Remote(client))
    }

    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, EnvError> {
        Ok(Self::remote(RemoteClient::connect(addr)?))
    }

    fn with_transport(transport: Transport) -> Self {
        EnvSession {
            id: SESSION_IDS.fetch_add(1, Ordering::Relaxed),
            transport,
            info: None,
        }
    }

    /// Direct world access; only available in-process.
    pub fn world(&self) -> Option<&WorldState> {
        match &self.transport {
            Transport::InProcess(s) => s.world(),
            Transport::Remote(_) => None,
        }
    }

    fn remote_call<T: for<'de> Deserialize<'de>>(client: &mut RemoteClient, body: RequestBody) -> Result<T, EnvError> {
        let value = client.call(body)?;
        serde_json::from_value(value).map_err(|e| EnvError::Protocol(format!("unexpected payload: {e}")))
    }

    /// Static facts about the most recently loaded level.
    pub fn level_info(&self) -> Option<&LevelInfo> {
        self.info.as_ref()
    }

    pub fn load(&mut self, name: &str, seed: u64) -> Result<LevelInfo, EnvError> {
        let info: LevelInfo = match &mut self.transport {
            Transport::InProcess(s) => s.load(name, seed).map_err(EnvError::Env)?,
            Transport::Remote(c) => Self::remote_call(
                c,
                RequestBody::Load {
                    name: name.to_string(),
                    seed,
                },
            )?,
        };
        self.info = Some(info.clone());
        Ok(info)
    }

    pub fn spawn(&mut self, station: &str) -> Result<Observation, EnvError> {
        match &mut self.transport {
            Transport::InProcess(s) => s.spawn(station).map_err(EnvError::Env),
            Transport::Remote(c) => Self::remote_call(
                c,
                RequestBody::Spawn {
                    station: station.to_string(),
                },
            ),
        }
    }

    pub fn observe(&mut self) -> Result<Observation, EnvError> {
        match &mut self.transport {
            Transport::InProcess(s) => s.observe().map_err(EnvError::Env),
            Transport::Remote(c) => Self::remote_call(c, RequestBody::Observe),
        }
    }

    pub fn execute(&mut self, cmd: &Command) -> Result<Executed, EnvError> {
        match &mut self.transport {
            Transport::InProcess(s) => s.execute(cmd).map_err(EnvError::Env),
            Transport::Remote(c) => Self::remote_call(c, RequestBody::Execute(cmd.clone())),
        }
    }
}

/// Serves one session over a line stream until EOF. Malformed requests get
/// an error response and the session continues.
pub fn serve_session(levels: Arc<LevelSet>, mut reader: impl BufRead, mut writer: impl Write) -> io::Result<()> {
    let mut state = SessionState::new(levels);
    let mut line = Vec::new();
    loop {
        line.clear();
        if reader.read_until(b'\n', &mut line)? == 0 {
            return Ok(());
        }
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let resp = match decode_request(&line) {
            Ok(req) => state.handle(&req),
            Err(e) => Response {
                id: salvage_id(&line),
                result: Err(e.to_string()),
            },
        };
        writer.write_all(&encode_response(&resp))?;
        writer.flush()?;
    }
}

/// Accepts connections forever, one thread and one isolated world per
/// connection.
pub fn serve_tcp(listener: TcpListener, levels: Arc<LevelSet>) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let levels = Arc::clone(&levels);
        thread::spawn(move || {
            let _ = stream.set_nodelay(true);
            let Ok(read_half) = stream.try_clone() else {
                return;
            };
            // A broken connection only ends its own session.
            let _ = serve_session(levels, BufReader::new(read_half), stream);
        });
    }
    Ok(())
}

/// Binds `addr` and serves in a background thread. Returns the bound address.
pub fn spawn_tcp_server(levels: Arc<LevelSet>, addr: impl ToSocketAddrs) -> io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    thread::spawn(move || serve_tcp(listener, levels));
    Ok(local)
}
