//! Optional multi-process mode: a coordinator and client processes exchange
//! broadcast/update frames over TCP, bit-equivalent to in-process runs.

mod codec;
mod peer;

pub use codec::{decode, encode, read_message, write_message, Message, StopKind, MAGIC, MAX_PAYLOAD};
pub use peer::{client_loop, serve, serve_on, ServeOptions};
