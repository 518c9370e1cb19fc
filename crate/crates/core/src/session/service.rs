//! Newline-delimited JSON protocol for live episodes, and a TCP front end.
//!
//! Each connection owns at most one episode. Messages on a connection are
//! handled strictly in arrival order.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use serde::{Deserialize, Serialize};

use super::episode::{AskPolicy, Episode, EpisodeConfig, EpisodeStatus, StepOutcome, DEFAULT_MAX_STEPS};
use super::trace::TraceRecord;
use crate::error::Error;
use crate::gridworld::{Pose, Terminal};
use crate::synth::{Controller, Direction};

/// Environment variable consulted for the listening port.
pub const PORT_ENV: &str = "QBOT_PORT";

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Request {
    Start {
        map: String,
        #[serde(default)]
        max_steps: Option<usize>,
        #[serde(default)]
        seed: u64,
    },
    Step,
    Answer {
        direction: Direction,
    },
    State,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingAsk {
    pub step: usize,
    pub clear: Vec<Direction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Response {
    Record(TraceRecord),
    Ask {
        step: usize,
        clear: Vec<Direction>,
    },
    Terminal {
        status: Terminal,
    },
    Error {
        code: String,
        message: String,
    },
    State {
        /// Map rendered with the robot marker.
        map: String,
        width: usize,
        height: usize,
        pose: Pose,
        status: String,
        pending: Option<PendingAsk>,
        steps: usize,
    },
}

impl Response {
    fn error(e: &Error) -> Self {
        Response::Error {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("response serializes");
        s.push('\n');
        s
    }
}

/// Protocol state for one connection.
#[derive(Debug)]
pub struct Service {
    controller: Arc<Controller>,
    episode: Option<Episode>,
}

impl Service {
    pub fn new(controller: Arc<Controller>) -> Self {
        Service {
            controller,
            episode: None,
        }
    }

    pub fn episode(&self) -> Option<&Episode> {
        self.episode.as_ref()
    }

    /// Handles one raw protocol line.
    pub fn handle_line(&mut self, line: &str) -> Vec<Response> {
        match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle(req),
            Err(e) => vec![Response::Error {
                code: "bad_request".into(),
                message: e.to_string(),
            }],
        }
    }

    pub fn handle(&mut self, req: Request) -> Vec<Response> {
        match req {
            Request::Start {
                map,
                max_steps,
                seed,
            } => {
                let mut config = EpisodeConfig::new(map, AskPolicy::Interactive);
                config.max_steps = max_steps.unwrap_or(DEFAULT_MAX_STEPS);
                config.seed = seed;
                match Episode::start_with(config, Arc::clone(&self.controller)) {
                    Ok(ep) => {
                        self.episode = Some(ep);
                        let mut out = vec![self.snapshot()];
                        out.extend(self.terminal_notice());
                        out
                    }
                    Err(e) => vec![Response::error(&e)],
                }
            }
            Request::State => match self.episode {
                Some(_) => vec![self.snapshot()],
                None => vec![no_episode()],
            },
            Request::Step => {
                let Some(ep) = self.episode.as_mut() else {
                    return vec![no_episode()];
                };
                match ep.step() {
                    Ok(StepOutcome::Ask(req)) => vec![Response::Ask {
                        step: req.step,
                        clear: req.clear,
                    }],
                    Ok(StepOutcome::Record(r)) => self.with_terminal(r),
                    Err(e) => vec![Response::error(&e)],
                }
            }
            Request::Answer { direction } => {
                let Some(ep) = self.episode.as_mut() else {
                    return vec![no_episode()];
                };
                match ep.answer(direction) {
                    Ok(r) => self.with_terminal(r),
                    Err(e) => vec![Response::error(&e)],
                }
            }
        }
    }

    fn with_terminal(&self, r: TraceRecord) -> Vec<Response> {
        let mut out = vec![Response::Record(r)];
        out.extend(self.terminal_notice());
        out
    }

    fn terminal_notice(&self) -> Option<Response> {
        match self.episode.as_ref()?.status() {
            EpisodeStatus::Finished(status) => Some(Response::Terminal { status }),
            _ => None,
        }
    }

    fn snapshot(&self) -> Response {
        let ep = self.episode.as_ref().expect("snapshot needs an episode");
        Response::State {
            map: ep.map().render(Some(ep.pose())),
            width: ep.map().width(),
            height: ep.map().height(),
            pose: ep.pose(),
            status: ep.status().to_string(),
            pending: ep.pending().map(|p| PendingAsk {
                step: p.step,
                clear: p.clear.clone(),
            }),
            steps: ep.records().len(),
        }
    }
}

fn no_episode() -> Response {
    Response::Error {
        code: "no_episode".into(),
        message: "send a start message first".into(),
    }
}

fn handle_connection(stream: TcpStream, controller: Arc<Controller>) -> io::Result<()> {
    let mut writer = stream.try_clone()?;
    let mut service = Service::new(controller);
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for resp in service.handle_line(&line) {
            writer.write_all(resp.to_line().as_bytes())?;
        }
        writer.flush()?;
    }
    Ok(())
}

/// Accepts connections forever, one thread and one episode per connection.
pub fn serve(listener: TcpListener, controller: Arc<Controller>) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let controller = Arc::clone(&controller);
        thread::spawn(move || {
            // A dropped client only ends its own connection.
            let _ = handle_connection(stream, controller);
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const T_FR: &str = "####\n#>.#\n#.##\n####\n";

    fn service() -> Service {
        Service::new(Arc::new(Controller::builtin().unwrap()))
    }

    fn start_line(map: &str) -> String {
        serde_json::json!({"type": "start", "map": map}).to_string()
    }

    #[test]
    fn protocol_flow() {
        let mut s = service();
        assert!(matches!(&s.handle_line(r#"{"type":"step"}"#)[..], [Response::Error { code, .. }] if code == "no_episode"));
        let r = s.handle_line(&start_line(T_FR));
        assert!(matches!(&r[..], [Response::State { status, .. }] if status == "RUNNING"));
        let r = s.handle_line(r#"{"type":"step"}"#);
        assert_eq!(r, [Response::Ask { step: 0, clear: vec![Direction::Front, Direction::Right] }]);
        assert_eq!(
            r[0].to_line(),
            "{\"type\":\"ask\",\"step\":0,\"clear\":[\"F\",\"R\"]}\n"
        );
        let r = s.handle_line(r#"{"type":"step"}"#);
        assert!(matches!(&r[..], [Response::Error { code, .. }] if code == "state"));
        let r = s.handle_line(r#"{"type":"answer","direction":"L"}"#);
        assert!(matches!(&r[..], [Response::Error { code, .. }] if code == "invalid_choice"));
        let r = s.handle_line(r#"{"type":"state"}"#);
        assert!(matches!(&r[..], [Response::State { pending: Some(p), .. }] if p.clear.len() == 2));
        let r = s.handle_line(r#"{"type":"answer","direction":"R"}"#);
        let [Response::Record(rec)] = &r[..] else { panic!("{r:?}") };
        assert_eq!(rec.ask_choice, Some(Direction::Right));
        assert!(r[0].to_line().starts_with("{\"type\":\"record\",\"step\":0,"));
    }

    #[test]
    fn terminal_follows_record() {
        let mut s = service();
        s.handle_line(&start_line("###\n#^#\n###\n"));
        let r = s.handle_line(r#"{"type":"step"}"#);
        assert_eq!(r.len(), 2);
        assert_eq!(r[1], Response::Terminal { status: Terminal::Airborne });
        assert_eq!(r[1].to_line(), "{\"type\":\"terminal\",\"status\":\"AIRBORNE\"}\n");
    }

    #[test]
    fn bad_requests() {
        let mut s = service();
        for line in ["nope", r#"{"type":"fly"}"#, r#"{"type":"answer","direction":"Q"}"#] {
            assert!(matches!(&s.handle_line(line)[..], [Response::Error { code, .. }] if code == "bad_request"));
        }
        let r = s.handle_line(&start_line("..."));
        assert!(matches!(&r[..], [Response::Error { code, .. }] if code == "parse"));
    }
}
