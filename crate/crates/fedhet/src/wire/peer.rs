use std::net::{TcpListener, TcpStream};
use std::time::{Duration, Instant};

use crate::data::ClientShard;
use crate::error::{Error, Result};
use crate::experiment::{build_shards, run_loop, ClientPool, RoundRecord, RunConfig};
use crate::fed::{local_train, AlgorithmConfig, ClientUpdate, GlobalModel};
use crate::nn::{param_sub, ModelSpec};
use crate::rng::client_stream;
use crate::wire::codec::{read_message, write_message, Message, StopKind};

#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// How long to wait for all clients to say hello. Round-trip reads
    /// during training wait indefinitely; a disconnect aborts the run.
    pub connect_timeout: Duration,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            connect_timeout: Duration::from_secs(30),
        }
    }
}

/// Bind `listen` and run the experiment with remote clients.
pub fn serve(
    source: &crate::data::LabeledDataset,
    cfg: &RunConfig,
    listen: &str,
    opts: &ServeOptions,
) -> Result<Vec<RoundRecord>> {
    let listener = TcpListener::bind(listen)?;
    serve_on(source, cfg, listener, opts)
}

/// Run the experiment on an already-bound listener. Exactly
/// `cfg.num_clients()` distinct hellos must arrive before the timeout.
///
/// The coordinator owns evaluation: it rebuilds every shard from the
/// config, so the records are bit-identical to an in-process run of the
/// same config.
pub fn serve_on(
    source: &crate::data::LabeledDataset,
    cfg: &RunConfig,
    listener: TcpListener,
    opts: &ServeOptions,
) -> Result<Vec<RoundRecord>> {
    cfg.validate()?;
    let shards = build_shards(source, cfg)?;
    let conns = accept_clients(&listener, &shards, opts)?;
    let mut pool = RemoteClients {
        conns,
        cfg: &cfg.algorithm,
        model: &cfg.model,
        experiment_seed: cfg.experiment_seed,
    };
    let records = run_loop(cfg, &shards, &mut pool);

    let stop = match &records {
        Ok(rs) => match rs.last().and_then(|r| r.stop) {
            Some(reason) => Message::Stop {
                reason: reason.into(),
                message: String::new(),
            },
            None => Message::Stop {
                reason: StopKind::RoundLimit,
                message: String::new(),
            },
        },
        Err(e) => Message::Stop {
            reason: StopKind::Aborted,
            message: e.to_string(),
        },
    };
    for conn in &mut pool.conns {
        let _ = write_message(conn, &stop);
    }
    records
}

fn accept_clients(
    listener: &TcpListener,
    shards: &[ClientShard],
    opts: &ServeOptions,
) -> Result<Vec<TcpStream>> {
    let expected = shards.len();
    let deadline = Instant::now() + opts.connect_timeout;
    listener.set_nonblocking(true)?;
    let mut slots: Vec<Option<TcpStream>> = (0..expected).map(|_| None).collect();
    let mut connected = 0usize;
    while connected < expected {
        match listener.accept() {
            Ok((mut stream, _)) => {
                stream.set_nodelay(true)?;
                stream.set_read_timeout(Some(opts.connect_timeout))?;
                match read_message(&mut stream) {
                    Ok(Message::Hello { client_id, n_train }) => {
                        let id = client_id as usize;
                        if id >= expected {
                            refuse(&mut stream, format!("client id {id} out of range (expected < {expected})"));
                        } else if slots[id].is_some() {
                            refuse(&mut stream, format!("duplicate client id {id}"));
                        } else if n_train as usize != shards[id].train.len() {
                            refuse(
                                &mut stream,
                                format!(
                                    "client {id} reports {n_train} training samples, config says {}",
                                    shards[id].train.len()
                                ),
                            );
                        } else {
                            // Round reads block until the update arrives;
                            // a disconnect surfaces as an io error.
                            stream.set_read_timeout(None)?;
                            slots[id] = Some(stream);
                            connected += 1;
                        }
                    }
                    Ok(_) => refuse(&mut stream, "expected hello".into()),
                    Err(_) => {} // bad handshake; drop the connection
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(Error::WireAcceptTimeout {
                        connected,
                        expected,
                    });
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(slots.into_iter().map(|s| s.expect("all slots filled")).collect())
}

fn refuse(stream: &mut TcpStream, why: String) {
    let _ = write_message(
        stream,
        &Message::Stop {
            reason: StopKind::Aborted,
            message: why,
        },
    );
}

struct RemoteClients<'a> {
    conns: Vec<TcpStream>,
    cfg: &'a AlgorithmConfig,
    model: &'a ModelSpec,
    experiment_seed: u64,
}

impl ClientPool for RemoteClients<'_> {
    fn round_updates(&mut self, round: usize, global: &GlobalModel) -> Result<Vec<ClientUpdate>> {
        let broadcast = Message::broadcast(
            round as u32,
            self.cfg,
            self.experiment_seed,
            global.params.flatten(),
        );
        for conn in &mut self.conns {
            write_message(conn, &broadcast)?;
        }
        // Each connection buffers its client's update; draining them in
        // client-id order keeps aggregation deterministic regardless of
        // arrival order.
        let mut updates = Vec::with_capacity(self.conns.len());
        for (id, conn) in self.conns.iter_mut().enumerate() {
            match read_message(conn)? {
                Message::Update {
                    round: echoed,
                    client_id,
                    tau,
                    n,
                    delta,
                } => {
                    if echoed as usize != round {
                        return Err(Error::WireProtocol(format!(
                            "client {id} answered round {echoed}, expected {round}"
                        )));
                    }
                    if client_id as usize != id {
                        return Err(Error::WireProtocol(format!(
                            "update from client {client_id} on connection {id}"
                        )));
                    }
                    updates.push(ClientUpdate {
                        client_id: id,
                        delta: self.model.params_from_flat(&delta)?,
                        tau: tau as usize,
                        n: n as usize,
                    });
                }
                other => {
                    return Err(Error::WireProtocol(format!(
                        "client {id} sent {other:?} instead of an update"
                    )))
                }
            }
        }
        Ok(updates)
    }
}

/// Single-threaded client loop: hello, then train on each broadcast until
/// the coordinator says stop. Returns the stop reason.
pub fn client_loop(
    connect: &str,
    client_id: usize,
    model: &ModelSpec,
    shard: &ClientShard,
    connect_timeout: Duration,
) -> Result<StopKind> {
    let mut stream = connect_with_retry(connect, connect_timeout)?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(None)?;
    write_message(
        &mut stream,
        &Message::Hello {
            client_id: client_id as u32,
            n_train: shard.train.len() as u32,
        },
    )?;
    loop {
        match read_message(&mut stream)? {
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
                let global = model.params_from_flat(&params)?;
                let cfg = AlgorithmConfig {
                    kind,
                    mu,
                    local_epochs: local_epochs as usize,
                    batch_size: batch_size as usize,
                    lr,
                    optimizer,
                };
                let mut rng = client_stream(experiment_seed, round as u64, client_id as u64);
                let outcome =
                    local_train(global.clone(), &global, model, &shard.train, &cfg, &mut rng)?;
                let delta = param_sub(&outcome.params, &global)?;
                write_message(
                    &mut stream,
                    &Message::Update {
                        round,
                        client_id: client_id as u32,
                        tau: outcome.tau as u32,
                        n: shard.train.len() as u32,
                        delta: delta.flatten(),
                    },
                )?;
            }
            Message::Stop { reason, message } => {
                if reason == StopKind::Aborted {
                    return Err(Error::WireProtocol(format!(
                        "coordinator aborted: {message}"
                    )));
                }
                return Ok(reason);
            }
            other => {
                return Err(Error::WireProtocol(format!(
                    "unexpected message from coordinator: {other:?}"
                )))
            }
        }
    }
}

fn connect_with_retry(addr: &str, timeout: Duration) -> Result<TcpStream> {
    let deadline = Instant::now() + timeout;
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) => {
                if Instant::now() >= deadline {
                    return Err(Error::io(e));
                }
                std::thread::sleep(Duration::from_millis(20));
            }
        }
    }
}
