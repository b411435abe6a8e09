use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::broadcast;
use tokio::task::JoinSet;
use tokio::time::MissedTickBehavior;
use tokio_tungstenite::tungstenite::{Message, Utf8Bytes};

use crate::session::{Submission, TeleopSession};
use crate::wire::{encode, parse_frame, CommandMsg, ServerMsg};

pub const DEFAULT_PORT: u16 = 8090;
pub const PORT_ENV: &str = "SAFEFILTER_TELEOP_PORT";
pub const DEFAULT_TICK_HZ: f64 = 50.0;

#[derive(Debug, thiserror::Error)]
pub enum BridgeError {
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("{PORT_ENV}={0:?} is not a port number")]
    BadPort(String),
    #[error("tick rate must be finite and > 0, got {0}")]
    BadTickRate(f64),
    #[error("simulation fault at t = {t:.3} s: {source}")]
    Sim {
        t: f64,
        #[source]
        source: safefilter::Error,
    },
}

/// Port from [`PORT_ENV`], else [`DEFAULT_PORT`].
pub fn default_port() -> Result<u16, BridgeError> {
    match std::env::var(PORT_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| BridgeError::BadPort(v)),
        Err(_) => Ok(DEFAULT_PORT),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BridgeConfig {
    pub addr: SocketAddr,
    /// Wall-clock tick rate. Each tick advances the simulation by the
    /// scenario's `dt`, so real time only when `tick_hz · dt = 1`.
    pub tick_hz: f64,
}

impl BridgeConfig {
    pub fn localhost(port: u16) -> Self {
        BridgeConfig {
            addr: SocketAddr::from(([127, 0, 0, 1], port)),
            tick_hz: DEFAULT_TICK_HZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BridgeStats {
    pub ticks: u64,
    pub accepted: u64,
    pub stale: u64,
    pub malformed: u64,
    pub clients: u64,
    pub min_h: f64,
    /// Largest deviation of a tick interval from the period, as a fraction of it.
    pub max_jitter: f64,
}

/// Single-slot command mailbox with overwrite semantics.
#[derive(Default)]
struct Shared {
    slot: Mutex<Option<CommandMsg>>,
    stale: AtomicU64,
    malformed: AtomicU64,
    clients: AtomicU64,
}

impl Shared {
    fn deposit(&self, cmd: CommandMsg) {
        let mut slot = self.slot.lock().expect("mailbox lock");
        match *slot {
            Some(held) if held.seq >= cmd.seq => {
                self.stale.fetch_add(1, Ordering::Relaxed);
            }
            _ => *slot = Some(cmd),
        }
    }

    fn take(&self) -> Option<CommandMsg> {
        self.slot.lock().expect("mailbox lock").take()
    }
}

pub struct Bridge {
    listener: TcpListener,
    session: TeleopSession,
    tick_hz: f64,
}

impl Bridge {
    pub async fn bind(session: TeleopSession, config: BridgeConfig) -> Result<Self, BridgeError> {
        if !(config.tick_hz.is_finite() && config.tick_hz > 0.0) {
            return Err(BridgeError::BadTickRate(config.tick_hz));
        }
        let listener = TcpListener::bind(config.addr).await.map_err(|source| BridgeError::Bind {
            addr: config.addr,
            source,
        })?;
        Ok(Bridge {
            listener,
            session,
            tick_hz: config.tick_hz,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    /// Serves until `shutdown` resolves. Returns the counters and the
    /// session, whose log holds every tick.
    pub async fn run(self, shutdown: impl Future<Output = ()>) -> Result<(BridgeStats, TeleopSession), BridgeError> {
        let Bridge {
            listener,
            mut session,
            tick_hz,
        } = self;
        let period = Duration::from_secs_f64(1.0 / tick_hz);
        let scene = Utf8Bytes::from(encode(&ServerMsg::Scene(session.scene_msg(tick_hz))));
        let shared = Arc::new(Shared::default());
        let (tx, _) = broadcast::channel::<Utf8Bytes>(256);
        let mut clients = JoinSet::new();
        let mut stats = BridgeStats {
            ticks: 0,
            accepted: 0,
            stale: 0,
            malformed: 0,
            clients: 0,
            min_h: f64::INFINITY,
            max_jitter: 0.0,
        };

        let mut interval = tokio::time::interval(period);
        interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
        let mut last_tick: Option<Instant> = None;
        tokio::pin!(shutdown);

        let result = loop {
            tokio::select! {
                _ = &mut shutdown => break Ok(()),
                accepted = listener.accept() => {
                    if let Ok((stream, _)) = accepted {
                        clients.spawn(serve_client(stream, scene.clone(), tx.subscribe(), shared.clone()));
                    }
                }
                _ = interval.tick() => {
                    let now = Instant::now();
                    if let Some(prev) = last_tick {
                        let jitter = ((now - prev).as_secs_f64() - period.as_secs_f64()).abs() / period.as_secs_f64();
                        stats.max_jitter = stats.max_jitter.max(jitter);
                    }
                    last_tick = Some(now);

                    // at most one command per tick: the newest in the mailbox
                    if let Some(cmd) = shared.take() {
                        match session.submit(&cmd) {
                            Submission::Accepted => stats.accepted += 1,
                            Submission::Stale => {
                                shared.stale.fetch_add(1, Ordering::Relaxed);
                            }
                        }
                    }
                    let t = session.time();
                    match session.tick() {
                        Ok(msg) => {
                            stats.ticks += 1;
                            stats.min_h = stats.min_h.min(msg.h);
                            // no receivers is fine
                            let _ = tx.send(Utf8Bytes::from(encode(&ServerMsg::State(msg))));
                        }
                        Err(source) => break Err(BridgeError::Sim { t, source }),
                    }
                }
            }
        };
        clients.abort_all();
        stats.stale = shared.stale.load(Ordering::Relaxed);
        stats.malformed = shared.malformed.load(Ordering::Relaxed);
        stats.clients = shared.clients.load(Ordering::Relaxed);
        result.map(|()| (stats, session))
    }
}

async fn serve_client(
    stream: TcpStream,
    scene: Utf8Bytes,
    mut states: broadcast::Receiver<Utf8Bytes>,
    shared: Arc<Shared>,
) {
    let Ok(ws) = tokio_tungstenite::accept_async(stream).await else {
        return;
    };
    shared.clients.fetch_add(1, Ordering::Relaxed);
    let (mut sink, mut source) = ws.split();
    if sink.send(Message::Text(scene)).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            state = states.recv() => match state {
                Ok(line) => {
                    if sink.send(Message::Text(line)).await.is_err() {
                        break;
                    }
                }
                // a slow client skips ticks rather than stalling the loop
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            },
            incoming = source.next() => match incoming {
                Some(Ok(Message::Text(frame))) => {
                    for parsed in parse_frame(frame.as_str()) {
                        match parsed {
                            Ok(cmd) => shared.deposit(cmd),
                            Err(_) => {
                                shared.malformed.fetch_add(1, Ordering::Relaxed);
                            }
                        }
                    }
                }
                Some(Ok(Message::Binary(_))) => {
                    shared.malformed.fetch_add(1, Ordering::Relaxed);
                }
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                Some(Ok(_)) => {}
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mailbox_keeps_the_newest_command() {
        let shared = Shared::default();
        shared.deposit(CommandMsg { vx: 1.0, vy: 0.0, seq: 5 });
        shared.deposit(CommandMsg { vx: 2.0, vy: 0.0, seq: 4 });
        shared.deposit(CommandMsg { vx: 3.0, vy: 0.0, seq: 6 });
        assert_eq!(shared.take().map(|c| c.seq), Some(6));
        assert_eq!(shared.take(), None);
        assert_eq!(shared.stale.load(Ordering::Relaxed), 1);
    }

    #[test]
    fn port_comes_from_the_environment() {
        // the only test touching the variable
        std::env::remove_var(PORT_ENV);
        assert_eq!(default_port().unwrap(), DEFAULT_PORT);
        std::env::set_var(PORT_ENV, "9123");
        assert_eq!(default_port().unwrap(), 9123);
        std::env::set_var(PORT_ENV, "harbor");
        assert!(matches!(default_port(), Err(BridgeError::BadPort(_))));
        std::env::remove_var(PORT_ENV);
    }
}
