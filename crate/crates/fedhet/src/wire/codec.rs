//! Frame layout (all integers big-endian, parameter floats little-endian
//! IEEE-754 in ParamSet entry order):
//!
//! ```text
//! frame     := magic "FEDHET01" | len u32 | tag u8 | body
//! hello     := tag 0x01 | client_id u32 | n_train u32
//! broadcast := tag 0x02 | round u32 | kind u8 | optimizer u8 | mu f32le
//!              | lr f32le | local_epochs u32 | batch_size u32
//!              | experiment_seed u64 | n_params u32 | params (n x f32le)
//! update    := tag 0x03 | round u32 | client_id u32 | tau u32 | n u32
//!              | n_params u32 | delta (n x f32le)
//! stop      := tag 0x04 | reason u8 | msg_len u32 | msg (utf-8)
//! ```
//!
//! `len` counts everything after the length field (tag plus body) and is
//! capped at 256 MiB. Reason codes: 0 target_met, 1 round_limit, 2 aborted.

use std::io::{Read, Write};

use byteorder::{BigEndian, ByteOrder, LittleEndian};

use crate::error::{Error, Result};
use crate::experiment::StopReason;
use crate::fed::{AlgorithmConfig, AlgorithmKind};
use crate::nn::OptimizerKind;

pub const MAGIC: &[u8; 8] = b"FEDHET01";
pub const MAX_PAYLOAD: usize = 256 * 1024 * 1024;

const TAG_HELLO: u8 = 0x01;
const TAG_BROADCAST: u8 = 0x02;
const TAG_UPDATE: u8 = 0x03;
const TAG_STOP: u8 = 0x04;

/// Why a coordinator ended the session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopKind {
    TargetMet,
    RoundLimit,
    Aborted,
}

impl From<StopReason> for StopKind {
    fn from(r: StopReason) -> Self {
        match r {
            StopReason::TargetMet => StopKind::TargetMet,
            StopReason::RoundLimit => StopKind::RoundLimit,
        }
    }
}

impl StopKind {
    fn code(self) -> u8 {
        match self {
            StopKind::TargetMet => 0,
            StopKind::RoundLimit => 1,
            StopKind::Aborted => 2,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(StopKind::TargetMet),
            1 => Ok(StopKind::RoundLimit),
            2 => Ok(StopKind::Aborted),
            other => Err(Error::WireProtocol(format!("unknown stop reason {other}"))),
        }
    }
}

impl std::fmt::Display for StopKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopKind::TargetMet => write!(f, "target_met"),
            StopKind::RoundLimit => write!(f, "round_limit"),
            StopKind::Aborted => write!(f, "aborted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Hello {
        client_id: u32,
        n_train: u32,
    },
    Broadcast {
        round: u32,
        kind: AlgorithmKind,
        optimizer: OptimizerKind,
        mu: f32,
        lr: f32,
        local_epochs: u32,
        batch_size: u32,
        experiment_seed: u64,
        params: Vec<f32>,
    },
    Update {
        round: u32,
        client_id: u32,
        tau: u32,
        n: u32,
        delta: Vec<f32>,
    },
    Stop {
        reason: StopKind,
        message: String,
    },
}

impl Message {
    pub fn broadcast(round: u32, cfg: &AlgorithmConfig, seed: u64, params: Vec<f32>) -> Message {
        Message::Broadcast {
            round,
            kind: cfg.kind,
            optimizer: cfg.optimizer,
            mu: cfg.mu,
            lr: cfg.lr,
            local_epochs: cfg.local_epochs as u32,
            batch_size: cfg.batch_size as u32,
            experiment_seed: seed,
            params,
        }
    }
}

fn kind_code(kind: AlgorithmKind) -> u8 {
    match kind {
        AlgorithmKind::FedAvg => 0,
        AlgorithmKind::FedProx => 1,
        AlgorithmKind::FedNova => 2,
        AlgorithmKind::FedMix => 3,
    }
}

fn kind_from_code(code: u8) -> Result<AlgorithmKind> {
    match code {
        0 => Ok(AlgorithmKind::FedAvg),
        1 => Ok(AlgorithmKind::FedProx),
        2 => Ok(AlgorithmKind::FedNova),
        3 => Ok(AlgorithmKind::FedMix),
        other => Err(Error::WireProtocol(format!("unknown algorithm code {other}"))),
    }
}

fn optimizer_code(kind: OptimizerKind) -> u8 {
    match kind {
        OptimizerKind::Sgd => 0,
        OptimizerKind::Adam => 1,
    }
}

fn optimizer_from_code(code: u8) -> Result<OptimizerKind> {
    match code {
        0 => Ok(OptimizerKind::Sgd),
        1 => Ok(OptimizerKind::Adam),
        other => Err(Error::WireProtocol(format!("unknown optimizer code {other}"))),
    }
}

fn push_f32s(out: &mut Vec<u8>, values: &[f32]) {
    let start = out.len();
    out.resize(start + values.len() * 4, 0);
    LittleEndian::write_f32_into(values, &mut out[start..]);
}

/// Encode a message as a complete frame (magic, length, tag, body).
pub fn encode(msg: &Message) -> Result<Vec<u8>> {
    let mut body = Vec::new();
    let tag = match msg {
        Message::Hello { client_id, n_train } => {
            body.extend_from_slice(&client_id.to_be_bytes());
            body.extend_from_slice(&n_train.to_be_bytes());
            TAG_HELLO
        }
        Message::Broadcast {
            round,
            kind,
            optimizer,
            mu,
            lr,
            local_epochs,
            batch_size,
            experiment_seed,
            params,
        } => {
            if params.is_empty() {
                return Err(Error::WireProtocol(
                    "broadcast with a zero-parameter model".into(),
                ));
            }
            body.extend_from_slice(&round.to_be_bytes());
            body.push(kind_code(*kind));
            body.push(optimizer_code(*optimizer));
            body.extend_from_slice(&mu.to_le_bytes());
            body.extend_from_slice(&lr.to_le_bytes());
            body.extend_from_slice(&local_epochs.to_be_bytes());
            body.extend_from_slice(&batch_size.to_be_bytes());
            body.extend_from_slice(&experiment_seed.to_be_bytes());
            body.extend_from_slice(&(params.len() as u32).to_be_bytes());
            push_f32s(&mut body, params);
            TAG_BROADCAST
        }
        Message::Update {
            round,
            client_id,
            tau,
            n,
            delta,
        } => {
            if delta.is_empty() {
                return Err(Error::WireProtocol(
                    "update with a zero-parameter delta".into(),
                ));
            }
            body.extend_from_slice(&round.to_be_bytes());
            body.extend_from_slice(&client_id.to_be_bytes());
            body.extend_from_slice(&tau.to_be_bytes());
            body.extend_from_slice(&n.to_be_bytes());
            body.extend_from_slice(&(delta.len() as u32).to_be_bytes());
            push_f32s(&mut body, delta);
            TAG_UPDATE
        }
        Message::Stop { reason, message } => {
            body.push(reason.code());
            body.extend_from_slice(&(message.len() as u32).to_be_bytes());
            body.extend_from_slice(message.as_bytes());
            TAG_STOP
        }
    };

    let len = 1 + body.len();
    if len > MAX_PAYLOAD {
        return Err(Error::WireOversize {
            len,
            max: MAX_PAYLOAD,
        });
    }
    let mut frame = Vec::with_capacity(12 + body.len());
    frame.extend_from_slice(MAGIC);
    frame.extend_from_slice(&(len as u32).to_be_bytes());
    frame.push(tag);
    frame.extend_from_slice(&body);
    Ok(frame)
}

/// Decode a complete frame. Every malformed input yields an error, never a
/// partial message.
pub fn decode(frame: &[u8]) -> Result<Message> {
    if frame.len() < 13 {
        return Err(Error::WireLengthMismatch {
            declared: 13,
            found: frame.len(),
        });
    }
    if &frame[..8] != MAGIC {
        let mut found = [0u8; 8];
        found.copy_from_slice(&frame[..8]);
        return Err(Error::WireBadMagic { found });
    }
    let len = BigEndian::read_u32(&frame[8..12]) as usize;
    if len > MAX_PAYLOAD {
        return Err(Error::WireOversize {
            len,
            max: MAX_PAYLOAD,
        });
    }
    if frame.len() != 12 + len {
        return Err(Error::WireLengthMismatch {
            declared: 12 + len,
            found: frame.len(),
        });
    }
    let tag = frame[12];
    let body = &frame[13..];
    let mut r = Reader { buf: body, pos: 0 };
    let msg = match tag {
        TAG_HELLO => Message::Hello {
            client_id: r.u32()?,
            n_train: r.u32()?,
        },
        TAG_BROADCAST => {
            let round = r.u32()?;
            let kind = kind_from_code(r.u8()?)?;
            let optimizer = optimizer_from_code(r.u8()?)?;
            let mu = r.f32()?;
            let lr = r.f32()?;
            let local_epochs = r.u32()?;
            let batch_size = r.u32()?;
            let experiment_seed = r.u64()?;
            let n_params = r.u32()? as usize;
            if n_params == 0 {
                return Err(Error::WireProtocol(
                    "broadcast with a zero-parameter model".into(),
                ));
            }
            let params = r.f32s(n_params)?;
            Message::Broadcast {
                round,
                kind,
                optimizer,
                mu,
                lr,
                local_epochs,
                batch_size,
                experiment_seed,
                params,
            }
        }
        TAG_UPDATE => {
            let round = r.u32()?;
            let client_id = r.u32()?;
            let tau = r.u32()?;
            let n = r.u32()?;
            let n_params = r.u32()? as usize;
            if n_params == 0 {
                return Err(Error::WireProtocol(
                    "update with a zero-parameter delta".into(),
                ));
            }
            let delta = r.f32s(n_params)?;
            Message::Update {
                round,
                client_id,
                tau,
                n,
                delta,
            }
        }
        TAG_STOP => {
            let reason = StopKind::from_code(r.u8()?)?;
            let msg_len = r.u32()? as usize;
            let bytes = r.bytes(msg_len)?;
            let message = String::from_utf8(bytes.to_vec())
                .map_err(|e| Error::WireProtocol(format!("stop message not utf-8: {e}")))?;
            Message::Stop { reason, message }
        }
        other => return Err(Error::WireUnknownTag { tag: other }),
    };
    r.finish()?;
    Ok(msg)
}

/// Write one framed message to a stream.
pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> Result<()> {
    let frame = encode(msg)?;
    w.write_all(&frame)?;
    w.flush()?;
    Ok(())
}

/// Read one framed message from a stream.
pub fn read_message<R: Read>(r: &mut R) -> Result<Message> {
    let mut head = [0u8; 12];
    r.read_exact(&mut head)?;
    if &head[..8] != MAGIC {
        let mut found = [0u8; 8];
        found.copy_from_slice(&head[..8]);
        return Err(Error::WireBadMagic { found });
    }
    let len = BigEndian::read_u32(&head[8..12]) as usize;
    if len == 0 || len > MAX_PAYLOAD {
        return Err(Error::WireOversize {
            len,
            max: MAX_PAYLOAD,
        });
    }
    let mut frame = Vec::with_capacity(12 + len);
    frame.extend_from_slice(&head);
    frame.resize(12 + len, 0);
    r.read_exact(&mut frame[12..])?;
    decode(&frame)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::WireLengthMismatch {
                declared: self.pos + n,
                found: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(BigEndian::read_u32(self.take(4)?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(BigEndian::read_u64(self.take(8)?))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(LittleEndian::read_f32(self.take(4)?))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n * 4)?;
        let mut out = vec![0f32; n];
        LittleEndian::read_f32_into(bytes, &mut out);
        Ok(out)
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        self.take(n)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::WireLengthMismatch {
                declared: self.pos,
                found: self.buf.len(),
            });
        }
        Ok(())
    }
}
