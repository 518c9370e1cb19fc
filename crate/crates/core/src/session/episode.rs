use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use super::trace::TraceRecord;
use crate::error::{Error, Result};
use crate::gridworld::{
    apply_action, interpret, load_map, resolve_ask, sense, Action, GridMap, Motion, Pose, Terminal,
};
use crate::synth::{ControlOutcome, Controller, Direction, SensorWord};

pub const DEFAULT_MAX_STEPS: usize = 1000;

/// Who answers ASK requests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AskPolicy {
    /// Answers arrive through [`Episode::answer`].
    Interactive,
    /// Answers consumed in order; running out is an error.
    Scripted(Vec<Direction>),
    /// First clear direction in F, B, L, R order.
    FirstClear,
}

impl FromStr for AskPolicy {
    type Err = Error;

    /// `interactive`, `first-clear` or `script:FBL...`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interactive" => Ok(AskPolicy::Interactive),
            "first-clear" => Ok(AskPolicy::FirstClear),
            _ => {
                let body = s.strip_prefix("script:").ok_or_else(|| {
                    Error::parse(1, 1, format!("unknown policy `{s}`; use first-clear or script:FBL..."))
                })?;
                body.chars()
                    .enumerate()
                    .map(|(i, c)| {
                        Direction::from_letter(c).ok_or_else(|| {
                            Error::parse(1, i + 8, format!("`{c}` is not one of F, B, L, R"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(AskPolicy::Scripted)
            }
        }
    }
}

/// Which execution path evaluates the controller each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Classical bitstring propagation.
    #[default]
    Basis,
    /// Full 8192-amplitude state vector, measured with the episode seed.
    StateVector,
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub map: String,
    pub max_steps: usize,
    pub ask_policy: AskPolicy,
    pub seed: u64,
    pub backend: Backend,
}

impl EpisodeConfig {
    pub fn new(map: impl Into<String>, ask_policy: AskPolicy) -> Self {
        EpisodeConfig {
            map: map.into(),
            max_steps: DEFAULT_MAX_STEPS,
            ask_policy,
            seed: 0,
            backend: Backend::Basis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AskRequest {
    pub step: usize,
    pub clear: Vec<Direction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeStatus {
    Running,
    AwaitingAnswer,
    Finished(Terminal),
}

impl fmt::Display for EpisodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpisodeStatus::Running => f.write_str("RUNNING"),
            EpisodeStatus::AwaitingAnswer => f.write_str("AWAITING_ANSWER"),
            EpisodeStatus::Finished(t) => t.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Record(TraceRecord),
    Ask(AskRequest),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeTrace {
    pub records: Vec<TraceRecord>,
    pub terminal: Option<Terminal>,
}

#[derive(Debug)]
pub struct Episode {
    controller: Arc<Controller>,
    map: GridMap,
    start: Pose,
    pose: Pose,
    config: EpisodeConfig,
    records: Vec<TraceRecord>,
    status: EpisodeStatus,
    pending: Option<(AskRequest, SensorWord)>,
    script_pos: usize,
}

impl Episode {
    /// Parses the map and synthesizes and lowers the built-in controller.
    pub fn start(config: EpisodeConfig) -> Result<Self> {
        let (map, pose) = load_map(&config.map)?;
        Self::with_controller(map, pose, config, Arc::new(Controller::builtin()?))
    }

    /// Starts on an already-built controller (shared read-only between episodes).
    pub fn start_with(config: EpisodeConfig, controller: Arc<Controller>) -> Result<Self> {
        let (map, pose) = load_map(&config.map)?;
        Self::with_controller(map, pose, config, controller)
    }

    fn with_controller(
        map: GridMap,
        pose: Pose,
        config: EpisodeConfig,
        controller: Arc<Controller>,
    ) -> Result<Self> {
        if !map.is_free(pose.x, pose.y) {
            return Err(Error::Structural("robot starts on a blocked cell".into()));
        }
        let status = if config.max_steps == 0 {
            EpisodeStatus::Finished(Terminal::StepLimit)
        } else {
            EpisodeStatus::Running
        };
        Ok(Episode {
            controller,
            map,
            start: pose,
            pose,
            config,
            records: Vec::new(),
            status,
            pending: None,
            script_pos: 0,
        })
    }

    pub fn status(&self) -> EpisodeStatus {
        self.status
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn start_pose(&self) -> Pose {
        self.start
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn pending(&self) -> Option<&AskRequest> {
        self.pending.as_ref().map(|(r, _)| r)
    }

    pub fn controller(&self) -> &Arc<Controller> {
        &self.controller
    }

    pub fn policy(&self) -> &AskPolicy {
        &self.config.ask_policy
    }

    pub fn trace(&self) -> EpisodeTrace {
        EpisodeTrace {
            records: self.records.clone(),
            terminal: match self.status {
                EpisodeStatus::Finished(t) => Some(t),
                _ => None,
            },
        }
    }

    fn step_index(&self) -> usize {
        self.records.len()
    }

    fn evaluate(&self, sensors: SensorWord) -> Result<ControlOutcome> {
        match self.config.backend {
            Backend::Basis => self.controller.evaluate(sensors),
            Backend::StateVector => self
                .controller
                .evaluate_state_vector(sensors, self.config.seed ^ self.step_index() as u64),
        }
    }

    /// Senses, runs the controller and either moves or raises an ASK.
    pub fn step(&mut self) -> Result<StepOutcome> {
        match self.status {
            EpisodeStatus::Running => {}
            EpisodeStatus::AwaitingAnswer => {
                return Err(Error::State("an ASK is pending; answer it first".into()))
            }
            EpisodeStatus::Finished(t) => {
                return Err(Error::State(format!("episode already ended ({t})")))
            }
        }
        let sensors = sense(&self.map, self.pose);
        let outcome = self.evaluate(sensors)?;
        match interpret(&outcome)? {
            Action::Ask => {
                let req = AskRequest {
                    step: self.step_index(),
                    clear: sensors.clear_directions(),
                };
                self.pending = Some((req.clone(), sensors));
                self.status = EpisodeStatus::AwaitingAnswer;
                Ok(StepOutcome::Ask(req))
            }
            action => self.execute(sensors, outcome, action, None).map(StepOutcome::Record),
        }
    }

    /// Resolves the pending ASK by re-running the controller on the one-hot word for `d`.
    pub fn answer(&mut self, d: Direction) -> Result<TraceRecord> {
        let Some((_, sensors)) = self.pending.as_ref() else {
            return Err(Error::State("no ASK is pending".into()));
        };
        let sensors = *sensors;
        let one_hot = resolve_ask(sensors, d)?;
        let outcome = self.evaluate(one_hot)?;
        let action = interpret(&outcome)?;
        if action != Action::toward(d) {
            return Err(Error::CorruptController(format!(
                "one-hot word {one_hot} produced {action}, expected {}",
                Action::toward(d)
            )));
        }
        self.pending = None;
        self.status = EpisodeStatus::Running;
        self.execute(sensors, outcome, action, Some(d))
    }

    fn execute(
        &mut self,
        sensors: SensorWord,
        outcome: ControlOutcome,
        action: Action,
        ask_choice: Option<Direction>,
    ) -> Result<TraceRecord> {
        let before = self.pose;
        let mut terminal = match apply_action(&self.map, before, action)? {
            Motion::Moved(p) => {
                self.pose = p;
                None
            }
            Motion::Terminal(t, p) => {
                self.pose = p;
                Some(t)
            }
        };
        if terminal.is_none() && self.records.len() + 1 >= self.config.max_steps {
            terminal = Some(Terminal::StepLimit);
        }
        let record = TraceRecord {
            step: self.step_index(),
            pose: before,
            sensors: sensors.to_string(),
            output: outcome.format_table_iv(),
            action,
            ask_choice,
            terminal,
        };
        if let Some(t) = terminal {
            self.status = EpisodeStatus::Finished(t);
        }
        self.records.push(record.clone());
        Ok(record)
    }

    /// Answer chosen by a non-interactive policy.
    fn policy_choice(&mut self, req: &AskRequest) -> Result<Direction> {
        match &self.config.ask_policy {
            AskPolicy::Interactive => Err(Error::State(
                "interactive policy needs an external answer".into(),
            )),
            AskPolicy::FirstClear => Ok(req.clear[0]),
            AskPolicy::Scripted(script) => {
                let d = *script
                    .get(self.script_pos)
                    .ok_or(Error::Policy { step: req.step })?;
                self.script_pos += 1;
                Ok(d)
            }
        }
    }

    /// Steps until terminal, answering ASKs from the configured policy.
    pub fn run(&mut self) -> Result<EpisodeTrace> {
        if self.config.ask_policy == AskPolicy::Interactive {
            return Err(Error::State(
                "interactive episodes cannot run headless".into(),
            ));
        }
        while let EpisodeStatus::Running = self.status {
            if let StepOutcome::Ask(req) = self.step()? {
                let d = self.policy_choice(&req)?;
                self.answer(d)?;
            }
        }
        Ok(self.trace())
    }
}

/// Starts an episode and runs it headless to its terminal status.
pub fn run_to_completion(config: EpisodeConfig) -> Result<EpisodeTrace> {
    Episode::start(config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SensorWord;

    const CORRIDOR: &str = "#####\n#>..#\n#####\n";
    const WALLED: &str = "###\n#^#\n###\n";
    const T_FR: &str = "####\n#>.#\n#.##\n####\n";
    const PLAZA: &str = ".....\n.....\n..^..\n.....\n.....\n";

    fn cfg(map: &str, policy: AskPolicy) -> EpisodeConfig {
        EpisodeConfig::new(map, policy)
    }

    #[test]
    fn start_examples() {
        let ep = Episode::start(cfg(CORRIDOR, AskPolicy::Interactive)).unwrap();
        assert_eq!(ep.status(), EpisodeStatus::Running);
        assert!(matches!(
            Episode::start(cfg("###\n#.#\n", AskPolicy::Interactive)),
            Err(Error::Parse { .. })
        ));
        let mut c = cfg(CORRIDOR, AskPolicy::FirstClear);
        c.max_steps = 0;
        let mut ep = Episode::start(c).unwrap();
        assert_eq!(ep.status(), EpisodeStatus::Finished(Terminal::StepLimit));
        assert!(matches!(ep.step(), Err(Error::State(_))));
    }

    #[test]
    fn corridor_first_step_moves_forward() {
        let mut ep = Episode::start(cfg(CORRIDOR, AskPolicy::Interactive)).unwrap();
        let StepOutcome::Record(r) = ep.step().unwrap() else {
            panic!("expected a record")
        };
        assert_eq!((r.sensors.as_str(), r.output.as_str(), r.action), ("1000", "000101", Action::Forward));
    }

    #[test]
    fn walled_cell_lifts_off() {
        let trace = run_to_completion(cfg(WALLED, AskPolicy::FirstClear)).unwrap();
        assert_eq!(trace.records.len(), 1);
        let r = &trace.records[0];
        assert_eq!((r.sensors.as_str(), r.output.as_str()), ("0000", "010000"));
        assert_eq!(r.terminal, Some(Terminal::Airborne));
        assert_eq!(trace.terminal, Some(Terminal::Airborne));
    }

    #[test]
    fn junction_asks_front_right() {
        let mut ep = Episode::start(cfg(T_FR, AskPolicy::Interactive)).unwrap();
        assert_eq!(
            ep.step().unwrap(),
            StepOutcome::Ask(AskRequest { step: 0, clear: vec![Direction::Front, Direction::Right] })
        );
        assert!(matches!(ep.step(), Err(Error::State(_))));
        assert!(matches!(ep.answer(Direction::Left), Err(Error::InvalidChoice(_))));
        assert!(ep.pending().is_some());
        let r = ep.answer(Direction::Right).unwrap();
        assert_eq!((r.action, r.ask_choice), (Action::TurnRight, Some(Direction::Right)));
        assert_eq!(r.output, "000001");
        assert!(matches!(ep.answer(Direction::Right), Err(Error::State(_))));
    }

    #[test]
    fn answer_examples_in_plaza() {
        let mut ep = Episode::start(cfg(PLAZA, AskPolicy::Interactive)).unwrap();
        let StepOutcome::Ask(req) = ep.step().unwrap() else { panic!() };
        assert_eq!(req.clear, Direction::ALL);
        let r = ep.answer(Direction::Back).unwrap();
        assert_eq!(r.action, Action::Backward);
        assert_eq!(ep.pose(), Pose::new(2, 3, crate::gridworld::Heading::N));
    }

    #[test]
    fn front_left_answer_left_turns() {
        let map = "#.#\n.^#\n###\n";
        let mut ep = Episode::start(cfg(map, AskPolicy::Interactive)).unwrap();
        let StepOutcome::Ask(req) = ep.step().unwrap() else { panic!() };
        assert_eq!(req.clear, [Direction::Front, Direction::Left]);
        assert!(matches!(ep.answer(Direction::Right), Err(Error::InvalidChoice(_))));
        assert_eq!(ep.answer(Direction::Left).unwrap().action, Action::TurnLeft);
    }

    #[test]
    fn answer_reruns_the_circuit() {
        let mut ep = Episode::start(cfg(PLAZA, AskPolicy::Interactive)).unwrap();
        ep.step().unwrap();
        let before = ep.controller().evaluations();
        ep.answer(Direction::Left).unwrap();
        assert_eq!(ep.controller().evaluations(), before + 1);
    }

    #[test]
    fn straight_corridor_hand_simulated() {
        // 4 free cells, robot at the west dead end facing east.
        let map = "######\n#>...#\n######\n";
        let mut c = cfg(map, AskPolicy::FirstClear);
        c.max_steps = 6;
        let trace = run_to_completion(c).unwrap();
        let summary: Vec<(&str, Action, Option<Direction>)> = trace
            .records
            .iter()
            .map(|r| (r.sensors.as_str(), r.action, r.ask_choice))
            .collect();
        use Action::*;
        use Direction::*;
        assert_eq!(
            summary,
            [
                ("1000", Forward, None),
                ("1100", Forward, Some(Front)),
                ("1100", Forward, Some(Front)),
                ("0100", Backward, None),
                ("1100", Forward, Some(Front)),
                ("0100", Backward, None),
            ]
        );
        assert_eq!(trace.terminal, Some(Terminal::StepLimit));
    }

    #[test]
    fn plaza_first_clear_prefers_front() {
        let mut c = cfg(PLAZA, AskPolicy::FirstClear);
        c.max_steps = 10;
        let trace = run_to_completion(c).unwrap();
        for r in trace.records.iter().filter(|r| r.ask_choice.is_some()) {
            let s: SensorWord = r.sensors.parse().unwrap();
            if s.front {
                assert_eq!(r.ask_choice, Some(Direction::Front));
            }
        }
    }

    #[test]
    fn script_exhaustion_reports_step() {
        let err = run_to_completion(cfg(PLAZA, AskPolicy::Scripted(vec![Direction::Front]))).unwrap_err();
        assert_eq!(err, Error::Policy { step: 1 });
    }

    #[test]
    fn interactive_cannot_run_headless() {
        assert!(matches!(
            run_to_completion(cfg(PLAZA, AskPolicy::Interactive)),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("first-clear".parse::<AskPolicy>().unwrap(), AskPolicy::FirstClear);
        assert_eq!(
            "script:FBL".parse::<AskPolicy>().unwrap(),
            AskPolicy::Scripted(vec![Direction::Front, Direction::Back, Direction::Left])
        );
        assert!("script:FX".parse::<AskPolicy>().is_err());
        assert!("random".parse::<AskPolicy>().is_err());
    }

    #[test]
    fn state_vector_backend_agrees() {
        let mut a = cfg(PLAZA, AskPolicy::FirstClear);
        a.max_steps = 5;
        let mut b = a.clone();
        b.backend = Backend::StateVector;
        b.seed = 99;
        assert_eq!(run_to_completion(a).unwrap(), run_to_completion(b).unwrap());
    }
}
