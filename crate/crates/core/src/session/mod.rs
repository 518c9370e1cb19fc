//! Episodes: sense, evaluate the controller circuit, act, and hand ASK
//! requests to a human or a scripted policy.

mod episode;
mod service;
mod trace;

pub use episode::{
    run_to_completion, AskPolicy, AskRequest, Backend, Episode, EpisodeConfig, EpisodeStatus,
    EpisodeTrace, StepOutcome, DEFAULT_MAX_STEPS,
};
pub use service::{serve, Request, Response, Service, PORT_ENV};
pub use trace::{read_trace, replay, write_trace, TraceRecord};
