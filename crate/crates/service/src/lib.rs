//! Real-time bridge between a browser client and the lineharp engine.
//!
//! One [`Service`] owns one render thread and at most one interactive session.
//! Routes: `GET /session` (WebSocket), `GET /stats`, `GET /dataset`.

mod engine;
pub mod protocol;
mod server;

pub use protocol::{
    decode_audio_frame, encode_audio_frame, ClientMessage, ConfigUpdate, DatasetSummary, ServerMessage, ServiceStats,
};
pub use server::{Service, ServiceConfig, ServiceError};
