//! JSONL persistence and tamper-checking replay of episode traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{interpret, kinematics, resolve_ask, sense, Action, GridMap, Pose, Terminal};
use crate::synth::{ControlOutcome, Controller, Direction, SensorWord};

/// One executed decision. `pose` is where the robot stood when it sensed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub step: usize,
    pub pose: Pose,
    /// `S1S2S3S4`.
    pub sensors: String,
    /// `ASK MU MR_B MR_A ML_B ML_A`.
    pub output: String,
    pub action: Action,
    pub ask_choice: Option<Direction>,
    pub terminal: Option<Terminal>,
}

impl TraceRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace record serializes")
    }
}

/// One JSON object per line, each newline-terminated.
pub fn write_trace(records: &[TraceRecord]) -> String {
    records
        .iter()
        .map(|r| {
            let mut line = r.to_json();
            line.push('\n');
            line
        })
        .collect()
}

/// Parses a JSONL trace. Blank lines are skipped; an empty document is an empty trace.
pub fn read_trace(text: &str) -> Result<Vec<TraceRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Trace {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Checks every record against `controller` and rebuilds the pose sequence.
///
/// With a map and start pose, sensing, occupancy and goal entry are checked as
/// well. Returns the pose before each step followed by the final pose.
pub fn replay(
    records: &[TraceRecord],
    controller: &Controller,
    world: Option<(&GridMap, Pose)>,
) -> Result<Vec<Pose>> {
    let mut poses = Vec::with_capacity(records.len() + 1);
    let mut expected_pose = world.map(|(_, start)| start);

    for (i, r) in records.iter().enumerate() {
        let line = i + 1;
        let fail = |message: String| Error::Trace { line, message };

        if r.step != i {
            return Err(fail(format!("step {} out of sequence, expected {i}", r.step)));
        }
        if let Some(p) = expected_pose {
            if r.pose != p {
                return Err(fail(format!("pose {} does not follow from previous step ({p})", r.pose)));
            }
        }
        if r.terminal.is_some() && line != records.len() {
            return Err(fail("terminal status before the last record".into()));
        }

        let sensors: SensorWord = r.sensors.parse().map_err(|e: Error| fail(e.to_string()))?;
        if let Some((map, _)) = world {
            let sensed = sense(map, r.pose);
            if sensed != sensors {
                return Err(fail(format!("sensors {sensors} but the map reads {sensed}")));
            }
        }

        let recorded = ControlOutcome::parse_table_iv(&r.output).map_err(|e| fail(e.to_string()))?;
        if !recorded.is_single_decision() {
            return Err(fail(format!("output {} is not a controller output", r.output)));
        }
        let computed = match r.ask_choice {
            None => controller.evaluate(sensors)?,
            Some(d) => {
                let first = controller.evaluate(sensors)?;
                if !first.ask {
                    return Err(fail(format!(
                        "ask_choice {d} recorded but sensors {sensors} do not raise an ASK"
                    )));
                }
                controller.evaluate(resolve_ask(sensors, d).map_err(|e| fail(e.to_string()))?)?
            }
        };
        if computed != recorded {
            return Err(fail(format!(
                "output {} but the controller computes {computed}",
                r.output
            )));
        }
        let action = interpret(&computed)?;
        if action != r.action || action == Action::Ask {
            return Err(fail(format!("action {} but the controller decides {action}", r.action)));
        }

        let next = kinematics(r.pose, action).unwrap_or(r.pose);
        if let Some((map, _)) = world {
            if !map.is_free(next.x, next.y) {
                return Err(fail(format!("{action} enters a blocked cell")));
            }
        }
        let airborne = action == Action::LiftOff;
        let at_goal = world.is_some_and(|(m, _)| !airborne && m.goal() == Some((next.x, next.y)));
        match r.terminal {
            Some(Terminal::Airborne) if !airborne => {
                return Err(fail("AIRBORNE without lift-off".into()))
            }
            Some(Terminal::Goal) if world.is_some() && !at_goal => {
                return Err(fail("GOAL recorded off the goal cell".into()))
            }
            None if airborne || at_goal => {
                return Err(fail("missing terminal status".into()))
            }
            _ => {}
        }

        poses.push(r.pose);
        expected_pose = Some(next);
    }
    if let Some(p) = expected_pose {
        poses.push(p);
    }
    Ok(poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{load_map, Heading};
    use crate::session::{run_to_completion, AskPolicy, EpisodeConfig};

    const MAP: &str = "#####\n#...#\n##.##\n##^##\n#####\n";

    fn run() -> Vec<TraceRecord> {
        let mut c = EpisodeConfig::new(MAP, AskPolicy::Scripted(vec![Direction::Front, Direction::Left]));
        c.max_steps = 4;
        run_to_completion(c).unwrap().records
    }

    #[test]
    fn persist_then_replay() {
        let records = run();
        let text = write_trace(&records);
        assert_eq!(text.lines().count(), records.len());
        let back = read_trace(&text).unwrap();
        assert_eq!(back, records);
        let ctl = Controller::builtin().unwrap();
        let (m, start) = load_map(MAP).unwrap();
        let poses = replay(&back, &ctl, Some((&m, start))).unwrap();
        assert_eq!(poses.len(), records.len() + 1);
        assert_eq!(replay(&back, &ctl, None).unwrap(), poses);
    }

    #[test]
    fn schema_is_exact() {
        let r = TraceRecord {
            step: 0,
            pose: Pose::new(1, 2, Heading::W),
            sensors: "0010".into(),
            output: "000100".into(),
            action: Action::TurnLeft,
            ask_choice: Some(Direction::Left),
            terminal: Some(Terminal::StepLimit),
        };
        assert_eq!(
            r.to_json(),
            r#"{"step":0,"pose":{"x":1,"y":2,"heading":"W"},"sensors":"0010","output":"000100","action":"TurnLeft","ask_choice":"L","terminal":"STEP_LIMIT"}"#
        );
    }

    #[test]
    fn mu_and_ask_together_rejected() {
        let mut records = run();
        records[0].output = "110000".into();
        let err = replay(&records, &Controller::builtin().unwrap(), None).unwrap_err();
        assert!(matches!(err, Error::Trace { line: 1, .. }), "{err}");
    }

    #[test]
    fn tampered_fields_rejected() {
        let ctl = Controller::builtin().unwrap();
        let base = run();
        let mut t = base.clone();
        t[1].output = "000100".into();
        assert!(replay(&t, &ctl, None).is_err());
        let mut t = base.clone();
        t[1].pose.x += 1;
        assert!(matches!(replay(&t, &ctl, None), Err(Error::Trace { line: 2, .. })));
        let mut t = base.clone();
        t[0].step = 5;
        assert!(replay(&t, &ctl, None).is_err());
        let mut t = base.clone();
        t[0].terminal = Some(Terminal::Goal);
        assert!(replay(&t, &ctl, None).is_err());
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(read_trace("{}\n"), Err(Error::Trace { line: 1, .. })));
        let good = write_trace(&run());
        let bad = format!("{good}not json\n");
        assert!(matches!(read_trace(&bad), Err(Error::Trace { line, .. }) if line == good.lines().count() + 1));
        let extra = good.replacen("\"step\":0", "\"step\":0,\"extra\":1", 1);
        assert!(read_trace(&extra).is_err());
    }

    #[test]
    fn empty_trace() {
        assert!(read_trace("").unwrap().is_empty());
        assert!(replay(&[], &Controller::builtin().unwrap(), None).unwrap().is_empty());
    }
}
