//! Newline-delimited JSON wire format.
//!
//! ```text
//! {"id":1,"op":"observe","arg":null}
//! {"id":1,"ok":true,"data":{...}}
//! {"id":2,"ok":false,"error":"no level loaded"}
//! ```
//!
//! Field order is fixed by the struct layouts below, so encoding is
//! canonical: equal messages always produce equal bytes.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::world::Command;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("decode error at byte {offset}: {message}")]
pub struct DecodeError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RequestBody {
    Observe,
    Execute(Command),
    Load { name: String, seed: u64 },
    Spawn { station: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: u64,
    pub body: RequestBody,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub id: u64,
    pub result: Result<Value, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRequest {
    id: u64,
    op: String,
    #[serde(default)]
    arg: Value,
}

#[derive(Serialize, Deserialize)]
struct LoadArg {
    name: String,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResponse {
    id: u64,
    ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    data: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn line(json: String) -> Vec<u8> {
    let mut bytes = json.into_bytes();
    bytes.push(b'\n');
    bytes
}

pub fn encode_request(req: &Request) -> Vec<u8> {
    let (op, arg) = match &req.body {
        RequestBody::Observe => ("observe", Value::Null),
        RequestBody::Execute(cmd) => ("execute", serde_json::to_value(cmd).expect("command serializes")),
        RequestBody::Load { name, seed } => (
            "load",
            serde_json::to_value(LoadArg {
                name: name.clone(),
                seed: *seed,
            })
            .expect("load arg serializes"),
        ),
        RequestBody::Spawn { station } => ("spawn", Value::String(station.clone())),
    };
    let raw = RawRequest {
        id: req.id,
        op: op.to_string(),
        arg,
    };
    line(serde_json::to_string(&raw).expect("request serializes"))
}

pub fn encode_response(resp: &Response) -> Vec<u8> {
    let raw = match &resp.result {
        Ok(data) => RawResponse {
            id: resp.id,
            ok: true,
            data: Some(data.clone()),
            error: None,
        },
        Err(e) => RawResponse {
            id: resp.id,
            ok: false,
            data: None,
            error: Some(e.clone()),
        },
    };
    line(serde_json::to_string(&raw).expect("response serializes"))
}

fn split_line(bytes: &[u8]) -> Result<&str, DecodeError> {
    let Some((&b'\n', body)) = bytes.split_last() else {
        return Err(DecodeError {
            offset: bytes.len(),
            message: "truncated line: missing newline terminator".to_string(),
        });
    };
    if let Some(pos) = body.iter().position(|b| *b == b'\n') {
        return Err(DecodeError {
            offset: pos,
            message: "more than one line".to_string(),
        });
    }
    std::str::from_utf8(body).map_err(|e| DecodeError {
        offset: e.valid_up_to(),
        message: "invalid UTF-8".to_string(),
    })
}

fn json_error(text: &str, e: serde_json::Error) -> DecodeError {
    // Single-line input, so the column is a 1-based byte index.
    let offset = e.column().saturating_sub(1).min(text.len());
    DecodeError {
        offset,
        message: e.to_string(),
    }
}

fn semantic(message: impl Into<String>) -> DecodeError {
    DecodeError {
        offset: 0,
        message: message.into(),
    }
}

pub fn decode_request(bytes: &[u8]) -> Result<Request, DecodeError> {
    let text = split_line(bytes)?;
    let raw: RawRequest = serde_json::from_str(text).map_err(|e| json_error(text, e))?;
    let body = match raw.op.as_str() {
        "observe" => {
            if !raw.arg.is_null() {
                return Err(semantic("observe takes no argument"));
            }
            RequestBody::Observe
        }
        "execute" => {
            RequestBody::Execute(serde_json::from_value(raw.arg).map_err(|e| semantic(format!("bad command: {e}")))?)
        }
        "load" => {
            let arg: LoadArg =
                serde_json::from_value(raw.arg).map_err(|e| semantic(format!("bad load argument: {e}")))?;
            RequestBody::Load {
                name: arg.name,
                seed: arg.seed,
            }
        }
        "spawn" => match raw.arg {
            Value::String(station) => RequestBody::Spawn { station },
            _ => return Err(semantic("spawn takes a station name")),
        },
        other => return Err(semantic(format!("unknown op {other:?}"))),
    };
    Ok(Request { id: raw.id, body })
}

pub fn decode_response(bytes: &[u8]) -> Result<Response, DecodeError> {
    let text = split_line(bytes)?;
    let raw: RawResponse = serde_json::from_str(text).map_err(|e| json_error(text, e))?;
    let result = match (raw.ok, raw.data, raw.error) {
        (true, Some(data), None) => Ok(data),
        (false, None, Some(error)) => Err(error),
        _ => return Err(semantic("response must carry data when ok and error otherwise")),
    };
    Ok(Response { id: raw.id, result })
}

/// Best-effort id recovery from a malformed request, so the error response
/// can still echo it.
pub fn salvage_id(bytes: &[u8]) -> u64 {
    #[derive(Deserialize)]
    struct IdOnly {
        id: u64,
    }
    std::str::from_utf8(bytes)
        .ok()
        .and_then(|t| serde_json::from_str::<IdOnly>(t.trim_end()).ok())
        .map_or(0, |r| r.id)
}
