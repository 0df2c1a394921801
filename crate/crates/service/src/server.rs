use std::future::Future;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use lineharp_core::session::{MixerSink, PluckSource, SessionError};
use lineharp_core::{LineSet, MappingConfig, MixerConfig, PluckFeedback, Point2, Session};
use thiserror::Error;
use tokio::sync::{mpsc, watch};
use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;

use crate::engine::Engine;
use crate::protocol::{encode_audio_frame, ClientMessage, ConfigUpdate, DatasetSummary, ServerMessage, ServiceStats};

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub mapping: MappingConfig,
    pub sample_rate: u32,
    pub block_frames: usize,
    pub dynamic_scaling: bool,
    /// Period of unsolicited stats frames; `None` disables them.
    pub stats_interval: Option<Duration>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            mapping: MappingConfig::default(),
            sample_rate: 44100,
            block_frames: 256,
            dynamic_scaling: true,
            stats_interval: Some(Duration::from_secs(1)),
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Audio(#[from] lineharp_core::audio_io::AudioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct AppState {
    cfg: ServiceConfig,
    summary: DatasetSummary,
    dataset_json: String,
    engine: Engine,
    session: Mutex<Session<MixerSink>>,
    busy: AtomicBool,
    connections: AtomicU64,
    sequence_gaps: AtomicU64,
    shutdown: watch::Sender<bool>,
}

impl AppState {
    fn session(&self) -> MutexGuard<'_, Session<MixerSink>> {
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn stats(&self) -> ServiceStats {
        self.stats_with(self.session().warnings())
    }

    /// For callers already holding the session lock.
    fn stats_with(&self, session_warnings: u64) -> ServiceStats {
        ServiceStats {
            mixer: self.engine.mixer_stats(),
            stream: self.engine.stream_stats(),
            dropped_blocks: self.engine.dropped_blocks(),
            sequence_gaps: self.sequence_gaps.load(Ordering::Relaxed),
            connected: self.busy.load(Ordering::Relaxed),
            connections: self.connections.load(Ordering::Relaxed),
            session_warnings,
        }
    }

    /// Seconds of audio already handed to the render thread's future.
    fn next_block_time(&self) -> f64 {
        let frames = self.engine.mixer_stats().frames_rendered + self.engine.block_frames as u64;
        frames as f64 / self.engine.sample_rate
    }
}

/// A running engine plus the dataset it sonifies. The render thread starts on
/// construction and keeps running across client connections.
#[derive(Clone)]
pub struct Service {
    state: Arc<AppState>,
}

impl Service {
    pub fn new(lineset: LineSet, cfg: ServiceConfig) -> Result<Self, ServiceError> {
        let sr = cfg.sample_rate as f64;
        cfg.mapping
            .validate(sr)
            .map_err(|e| ServiceError::Config(e.to_string()))?;
        let engine = Engine::start(
            MixerConfig {
                sample_rate: sr,
                mapping: cfg.mapping,
                ..MixerConfig::default()
            },
            cfg.block_frames,
        )?;
        engine.trigger().set_scaling_enabled(cfg.dynamic_scaling);
        let summary = DatasetSummary::of(&lineset);
        let dataset_json = lineset.to_canonical_json();
        let session = Session::new(lineset, cfg.mapping, MixerSink::new(engine.trigger().clone(), sr));
        Ok(Self {
            state: Arc::new(AppState {
                cfg,
                summary,
                dataset_json,
                engine,
                session: Mutex::new(session),
                busy: AtomicBool::new(false),
                connections: AtomicU64::new(0),
                sequence_gaps: AtomicU64::new(0),
                shutdown: watch::channel(false).0,
            }),
        })
    }

    pub fn stats(&self) -> ServiceStats {
        self.state.stats()
    }

    pub fn router(&self) -> Router {
        Router::new()
            .route("/session", get(session_socket))
            .route("/stats", get(stats))
            .route("/dataset", get(dataset))
            .with_state(Arc::clone(&self.state))
    }

    /// Serves until `shutdown` resolves, then closes any open session socket.
    pub async fn serve(
        self,
        listener: tokio::net::TcpListener,
        shutdown: impl Future<Output = ()> + Send + 'static,
    ) -> std::io::Result<()> {
        let state = Arc::clone(&self.state);
        let signal = async move {
            shutdown.await;
            state.shutdown.send_replace(true);
        };
        axum::serve(listener, self.router())
            .with_graceful_shutdown(signal)
            .await
    }
}

async fn stats(State(state): State<Arc<AppState>>) -> Json<ServiceStats> {
    Json(state.stats())
}

async fn dataset(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], state.dataset_json.clone())
}

async fn session_socket(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| async move {
        if state.busy.swap(true, Ordering::AcqRel) {
            reject(socket).await;
            return;
        }
        state.connections.fetch_add(1, Ordering::Relaxed);
        let mut conn = Connection::new(Arc::clone(&state));
        conn.run(socket).await;
        conn.finish();
        state.busy.store(false, Ordering::Release);
    })
}

async fn reject(mut socket: WebSocket) {
    let busy = ServerMessage::Busy {
        message: "another client is connected".into(),
    };
    let _ = socket.send(Message::Text(busy.to_json().into())).await;
    let _ = socket.send(Message::Close(None)).await;
}

struct Connection {
    state: Arc<AppState>,
    /// Client clock offset is fixed by the first timed message.
    clock_set: bool,
    last_seq: Option<u64>,
    delayed_tx: mpsc::UnboundedSender<ServerMessage>,
    delayed_rx: mpsc::UnboundedReceiver<ServerMessage>,
    timers: Vec<JoinHandle<()>>,
}

impl Connection {
    fn new(state: Arc<AppState>) -> Self {
        let (delayed_tx, delayed_rx) = mpsc::unbounded_channel();
        Self {
            state,
            clock_set: false,
            last_seq: None,
            delayed_tx,
            delayed_rx,
            timers: Vec::new(),
        }
    }

    async fn run(&mut self, mut socket: WebSocket) {
        let state = Arc::clone(&self.state);
        let hello = ServerMessage::Hello {
            dataset: state.summary.clone(),
            sample_rate: state.cfg.sample_rate,
            block_frames: state.cfg.block_frames,
        };
        if send_text(&mut socket, &hello).await.is_err() {
            return;
        }
        state.engine.discard_backlog();

        let block = Duration::from_secs_f64(state.cfg.block_frames as f64 / state.cfg.sample_rate as f64);
        let mut audio_tick = tokio::time::interval(block / 2);
        audio_tick.set_missed_tick_behavior(MissedTickBehavior::Skip);
        let stats_period = state.cfg.stats_interval.unwrap_or(Duration::from_secs(3600));
        let mut stats_tick = tokio::time::interval_at(tokio::time::Instant::now() + stats_period, stats_period);
        let mut shutdown = state.shutdown.subscribe();
        if *shutdown.borrow() {
            return;
        }

        loop {
            tokio::select! {
                incoming = socket.recv() => {
                    let text = match incoming {
                        Some(Ok(Message::Text(text))) => text,
                        Some(Ok(Message::Binary(_))) => {
                            let reply = ServerMessage::Error { message: "binary frames are not accepted".into() };
                            if send_text(&mut socket, &reply).await.is_err() {
                                break;
                            }
                            continue;
                        }
                        Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                        Some(Ok(_)) => continue,
                    };
                    let replies = self.handle_text(text.as_str());
                    for reply in replies {
                        if send_text(&mut socket, &reply).await.is_err() {
                            return;
                        }
                    }
                }
                Some(msg) = self.delayed_rx.recv() => {
                    if send_text(&mut socket, &msg).await.is_err() {
                        break;
                    }
                }
                _ = audio_tick.tick() => {
                    if self.pump_audio(&mut socket).await.is_err() {
                        break;
                    }
                }
                _ = stats_tick.tick(), if state.cfg.stats_interval.is_some() => {
                    if send_text(&mut socket, &ServerMessage::Stats(state.stats())).await.is_err() {
                        break;
                    }
                }
                _ = shutdown.changed() => {
                    let _ = socket.send(Message::Close(None)).await;
                    break;
                }
            }
        }
    }

    async fn pump_audio(&mut self, socket: &mut WebSocket) -> Result<(), axum::Error> {
        while let Some(block) = self.state.engine.next_block() {
            if let Some(last) = self.last_seq {
                let missing = block.seq.saturating_sub(last + 1);
                self.state.sequence_gaps.fetch_add(missing, Ordering::Relaxed);
            }
            self.last_seq = Some(block.seq);
            let frame = encode_audio_frame(block.seq, &block.samples);
            self.state.engine.recycle(block.samples);
            socket.send(Message::Binary(frame.into())).await?;
        }
        Ok(())
    }

    /// Maps client time onto the render clock, anchored on the first timed
    /// message so that it sounds at the start of the next block.
    fn sync_clock(&mut self, session: &mut Session<MixerSink>, t: f64) {
        if !self.clock_set {
            session.sink_mut().offset = self.state.next_block_time() - t;
            self.clock_set = true;
        }
    }

    /// Client time for messages that carry none.
    fn client_now(&mut self, session: &mut Session<MixerSink>) -> f64 {
        if !self.clock_set {
            self.sync_clock(session, 0.0);
            return 0.0;
        }
        let estimate = self.state.next_block_time() - session.sink().offset;
        session.cursor().map_or(estimate, |(_, t)| estimate.max(t))
    }

    fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        let message: ClientMessage = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(e) => {
                return vec![ServerMessage::Error {
                    message: format!("malformed message: {e}"),
                }]
            }
        };
        let state = Arc::clone(&self.state);
        let mut session = state.session();
        match message {
            ClientMessage::Cursor { t, x, y } => {
                self.sync_clock(&mut session, t);
                let warnings = session.warnings();
                let plucks = session.on_cursor_move(Point2::new(x, y), t);
                if session.warnings() > warnings {
                    return vec![ServerMessage::Error {
                        message: format!("cursor event at t={t} ignored: time went backwards or position is not finite"),
                    }];
                }
                plucks.into_iter().map(ServerMessage::Pluck).collect()
            }
            ClientMessage::Lens { t, lens } => {
                if let Some(t) = t {
                    self.sync_clock(&mut session, t);
                }
                let applied = lens.to_lens().map_err(SessionError::from).and_then(|l| session.set_lens(l));
                match applied {
                    Ok(_) => vec![ServerMessage::Lens { lens }],
                    Err(e) => vec![ServerMessage::Error { message: e.to_string() }],
                }
            }
            ClientMessage::Playback { t } => {
                let t = match t {
                    Some(t) => {
                        self.sync_clock(&mut session, t);
                        t
                    }
                    None => self.client_now(&mut session),
                };
                let highlight = session.highlight();
                match session.start_lens_playback(t) {
                    Ok(schedule) => {
                        for s in schedule {
                            let pluck = PluckFeedback::from_note(&s.note, s.position, PluckSource::Playback, highlight);
                            self.send_at(pluck, s.onset - t);
                        }
                        Vec::new()
                    }
                    Err(e) => vec![ServerMessage::Error { message: e.to_string() }],
                }
            }
            ClientMessage::Config(update) => match apply_config(&state, &mut session, update) {
                Ok(()) => vec![ServerMessage::Stats(state.stats_with(session.warnings()))],
                Err(message) => vec![ServerMessage::Error { message }],
            },
        }
    }

    fn send_at(&mut self, pluck: PluckFeedback, delay: f64) {
        let tx = self.delayed_tx.clone();
        if delay <= 0.0 {
            let _ = tx.send(ServerMessage::Pluck(pluck));
            return;
        }
        self.timers.retain(|h| !h.is_finished());
        self.timers.push(tokio::spawn(async move {
            tokio::time::sleep(Duration::from_secs_f64(delay)).await;
            let _ = tx.send(ServerMessage::Pluck(pluck));
        }));
    }

    /// Leaves the engine running and the session ready for the next client.
    fn finish(&mut self) {
        for t in self.timers.drain(..) {
            t.abort();
        }
        self.state.session().reset();
    }
}

fn apply_config(state: &AppState, session: &mut Session<MixerSink>, update: ConfigUpdate) -> Result<(), String> {
    if let Some(spacing) = update.playback_spacing {
        session.set_playback_spacing(spacing).map_err(|e| e.to_string())?;
    }
    if let Some(on) = update.dynamic_scaling {
        state.engine.trigger().set_scaling_enabled(on);
    }
    if let Some(on) = update.highlight {
        session.set_highlight(on);
    }
    Ok(())
}

async fn send_text(socket: &mut WebSocket, msg: &ServerMessage) -> Result<(), axum::Error> {
    socket.send(Message::Text(msg.to_json().into())).await
}
