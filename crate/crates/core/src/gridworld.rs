//! Occupancy-grid environment: body-frame sensing and wheel-command motion.
//!
//! Coordinates: `x` grows rightward, `y` grows downward. Cells outside the
//! map count as obstacles.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{ControlOutcome, Direction, MotorState, SensorWord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    N,
    E,
    S,
    W,
}

impl Heading {
    /// 90° counterclockwise.
    pub fn left(self) -> Self {
        match self {
            Heading::N => Heading::W,
            Heading::W => Heading::S,
            Heading::S => Heading::E,
            Heading::E => Heading::N,
        }
    }

    /// 90° clockwise.
    pub fn right(self) -> Self {
        match self {
            Heading::N => Heading::E,
            Heading::E => Heading::S,
            Heading::S => Heading::W,
            Heading::W => Heading::N,
        }
    }

    pub fn reverse(self) -> Self {
        self.left().left()
    }

    pub fn delta(self) -> (i64, i64) {
        match self {
            Heading::N => (0, -1),
            Heading::E => (1, 0),
            Heading::S => (0, 1),
            Heading::W => (-1, 0),
        }
    }

    /// Map heading of a body-frame direction.
    pub fn toward(self, d: Direction) -> Self {
        match d {
            Direction::Front => self,
            Direction::Back => self.reverse(),
            Direction::Left => self.left(),
            Direction::Right => self.right(),
        }
    }

    fn marker(self) -> char {
        match self {
            Heading::N => '^',
            Heading::E => '>',
            Heading::S => 'v',
            Heading::W => '<',
        }
    }

    fn from_marker(c: char) -> Option<Self> {
        match c {
            '^' => Some(Heading::N),
            '>' => Some(Heading::E),
            'v' => Some(Heading::S),
            '<' => Some(Heading::W),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub x: i64,
    pub y: i64,
    pub heading: Heading,
}

impl Pose {
    pub fn new(x: i64, y: i64, heading: Heading) -> Self {
        Pose { x, y, heading }
    }

    fn step(self, h: Heading) -> (i64, i64) {
        let (dx, dy) = h.delta();
        (self.x + dx, self.y + dy)
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}) {:?}", self.x, self.y, self.heading)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    obstacles: Vec<bool>,
    goal: Option<(i64, i64)>,
}

impl GridMap {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Structural("map must be at least 1x1".into()));
        }
        Ok(GridMap {
            width,
            height,
            obstacles: vec![false; width * height],
            goal: None,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn goal(&self) -> Option<(i64, i64)> {
        self.goal
    }

    pub fn set_goal(&mut self, goal: Option<(i64, i64)>) {
        self.goal = goal;
    }

    fn offset(&self, x: i64, y: i64) -> Option<usize> {
        let in_bounds = (0..self.width as i64).contains(&x) && (0..self.height as i64).contains(&y);
        in_bounds.then(|| y as usize * self.width + x as usize)
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        self.offset(x, y).is_some()
    }

    /// Out-of-bounds cells are blocked.
    pub fn is_free(&self, x: i64, y: i64) -> bool {
        self.offset(x, y).is_some_and(|i| !self.obstacles[i])
    }

    pub fn set_obstacle(&mut self, x: i64, y: i64, blocked: bool) {
        if let Some(i) = self.offset(x, y) {
            self.obstacles[i] = blocked;
        }
    }

    /// Text form with `robot` drawn at its pose, if given.
    pub fn render(&self, robot: Option<Pose>) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height as i64 {
            for x in 0..self.width as i64 {
                let c = match robot {
                    Some(p) if (p.x, p.y) == (x, y) => p.heading.marker(),
                    _ if self.goal == Some((x, y)) => 'G',
                    _ if self.is_free(x, y) => '.',
                    _ => '#',
                };
                out.push(c);
            }
            out.push('\n');
        }
        out
    }
}

/// Parses a map document: `#` obstacle, `.` free, `G` goal,
/// `^ > v <` robot start facing N/E/S/W.
pub fn load_map(text: &str) -> Result<(GridMap, Pose)> {
    let rows: Vec<&str> = text.lines().collect();
    let rows = match rows.iter().rposition(|r| !r.is_empty()) {
        Some(last) => &rows[..=last],
        None => return Err(Error::parse(1, 1, "empty map")),
    };
    let width = rows[0].chars().count();
    if width == 0 {
        return Err(Error::parse(1, 1, "empty map row"));
    }
    let mut map = GridMap::new(width, rows.len())?;
    let mut robot: Option<(Pose, usize, usize)> = None;
    let mut goal_at: Option<(usize, usize)> = None;

    for (y, row) in rows.iter().enumerate() {
        let row_len = row.chars().count();
        if row_len != width {
            return Err(Error::parse(
                y + 1,
                row_len.min(width) + 1,
                format!("row has {row_len} cells, expected {width}"),
            ));
        }
        for (x, c) in row.chars().enumerate() {
            let (line, col) = (y + 1, x + 1);
            let (xi, yi) = (x as i64, y as i64);
            match c {
                '#' => map.set_obstacle(xi, yi, true),
                '.' => {}
                'G' => {
                    if let Some((gl, gc)) = goal_at {
                        return Err(Error::parse(
                            line,
                            col,
                            format!("second goal; first at line {gl}, column {gc}"),
                        ));
                    }
                    goal_at = Some((line, col));
                    map.goal = Some((xi, yi));
                }
                _ => match Heading::from_marker(c) {
                    Some(h) => {
                        if let Some((_, rl, rc)) = robot {
                            return Err(Error::parse(
                                line,
                                col,
                                format!("second robot marker; first at line {rl}, column {rc}"),
                            ));
                        }
                        robot = Some((Pose::new(xi, yi, h), line, col));
                    }
                    None => {
                        return Err(Error::parse(line, col, format!("unknown map character {c:?}")))
                    }
                },
            }
        }
    }
    let (pose, _, _) = robot.ok_or_else(|| Error::parse(1, 1, "map has no robot marker"))?;
    Ok((map, pose))
}

/// Reads the four body-frame neighbors; a bit is set when that cell is in bounds and free.
pub fn sense(map: &GridMap, pose: Pose) -> SensorWord {
    let mut w = SensorWord::default();
    for d in Direction::ALL {
        let (x, y) = pose.step(pose.heading.toward(d));
        w.set(d, map.is_free(x, y));
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Forward,
    Backward,
    TurnLeft,
    TurnRight,
    LiftOff,
    Ask,
}

impl Action {
    /// The single move that heads toward a body-frame direction.
    pub fn toward(d: Direction) -> Self {
        match d {
            Direction::Front => Action::Forward,
            Direction::Back => Action::Backward,
            Direction::Left => Action::TurnLeft,
            Direction::Right => Action::TurnRight,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Maps a decoded controller readout to one action.
pub fn interpret(o: &ControlOutcome) -> Result<Action> {
    use MotorState::*;
    if !o.is_single_decision() {
        return Err(Error::CorruptController(format!(
            "outcome {o} does not name exactly one decision"
        )));
    }
    if o.mu {
        return Ok(Action::LiftOff);
    }
    if o.ask {
        return Ok(Action::Ask);
    }
    match (o.ml, o.mr) {
        (Forward, Forward) => Ok(Action::Forward),
        (Backward, Backward) => Ok(Action::Backward),
        (Stop, Forward) => Ok(Action::TurnLeft),
        (Forward, Stop) => Ok(Action::TurnRight),
        (ml, mr) => Err(Error::CorruptController(format!(
            "motor combination ({ml:?}, {mr:?}) has no action"
        ))),
    }
}

/// Terminal outcomes of a move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Terminal {
    Airborne,
    Goal,
    StepLimit,
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Terminal::Airborne => "AIRBORNE",
            Terminal::Goal => "GOAL",
            Terminal::StepLimit => "STEP_LIMIT",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motion {
    Moved(Pose),
    Terminal(Terminal, Pose),
}

impl Motion {
    pub fn pose(self) -> Pose {
        match self {
            Motion::Moved(p) | Motion::Terminal(_, p) => p,
        }
    }
}

/// Pose reached by `a`, without consulting the map.
///
/// Turns rotate 90° and then advance one cell along the new heading; Backward
/// retreats one cell and keeps the heading.
pub fn kinematics(pose: Pose, a: Action) -> Option<Pose> {
    let (heading, dir) = match a {
        Action::Forward => (pose.heading, pose.heading),
        Action::Backward => (pose.heading, pose.heading.reverse()),
        Action::TurnLeft => (pose.heading.left(), pose.heading.left()),
        Action::TurnRight => (pose.heading.right(), pose.heading.right()),
        Action::LiftOff | Action::Ask => return None,
    };
    let (x, y) = pose.step(dir);
    Some(Pose::new(x, y, heading))
}

/// Executes `a` on `map`.
pub fn apply_action(map: &GridMap, pose: Pose, a: Action) -> Result<Motion> {
    match a {
        Action::Ask => Err(Error::Contract("Ask must be resolved before moving".into())),
        Action::LiftOff => Ok(Motion::Terminal(Terminal::Airborne, pose)),
        _ => {
            let next = kinematics(pose, a).expect("movement action");
            if !map.is_free(next.x, next.y) {
                return Err(Error::Contract(format!(
                    "{a} from {pose} enters blocked cell ({},{})",
                    next.x, next.y
                )));
            }
            if map.goal() == Some((next.x, next.y)) {
                Ok(Motion::Terminal(Terminal::Goal, next))
            } else {
                Ok(Motion::Moved(next))
            }
        }
    }
}

/// One-hot sensor word for the human's chosen direction.
pub fn resolve_ask(s: SensorWord, chosen: Direction) -> Result<SensorWord> {
    if !s.get(chosen) {
        return Err(Error::InvalidChoice(format!(
            "direction {chosen} is blocked (sensors {s})"
        )));
    }
    Ok(SensorWord::only(chosen))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> SensorWord {
        s.parse().unwrap()
    }

    #[test]
    fn load_examples() {
        let (m, p) = load_map("...\n.^.\n...\n").unwrap();
        assert_eq!((m.width(), m.height()), (3, 3));
        assert_eq!(p, Pose::new(1, 1, Heading::N));

        assert!(matches!(load_map("#.#\n"), Err(Error::Parse { .. })));
        let (_, p) = load_map("#>#\n").unwrap();
        assert_eq!(p, Pose::new(1, 0, Heading::E));

        let (m, _) = load_map("v.G\n").unwrap();
        assert_eq!(m.goal(), Some((2, 0)));
    }

    #[test]
    fn load_errors_carry_position() {
        assert_eq!(
            load_map("..\n.\n>.\n").unwrap_err(),
            Error::parse(2, 2, "row has 1 cells, expected 2")
        );
        assert!(matches!(load_map(">.<\n"), Err(Error::Parse { line: 1, column: 3, .. })));
        assert!(matches!(load_map(">x\n"), Err(Error::Parse { line: 1, column: 2, .. })));
        assert!(matches!(load_map(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn render_round_trip() {
        let doc = "#####\n#.^G#\n#...#\n#####\n";
        let (m, p) = load_map(doc).unwrap();
        assert_eq!(m.render(Some(p)), doc);
        let (m, p) = load_map(doc.trim_end()).unwrap();
        assert_eq!(m.render(Some(p)), doc);
    }

    #[test]
    fn sense_examples() {
        let (m, p) = load_map("#.#\n#^#\n###\n").unwrap();
        assert_eq!(sense(&m, p), w("1000"));
        let east = Pose { heading: Heading::E, ..p };
        assert_eq!(sense(&m, east), w("0010"));
        let (m, p) = load_map("..>\n").unwrap();
        assert!(!sense(&m, p).front);
    }

    #[test]
    fn interpret_examples() {
        let both = |ml, mr| ControlOutcome { ml, mr, ..ControlOutcome::OFF };
        use MotorState::*;
        assert_eq!(interpret(&both(Forward, Forward)).unwrap(), Action::Forward);
        assert_eq!(interpret(&both(Stop, Forward)).unwrap(), Action::TurnLeft);
        assert_eq!(interpret(&both(Forward, Stop)).unwrap(), Action::TurnRight);
        assert_eq!(interpret(&both(Backward, Backward)).unwrap(), Action::Backward);
        assert_eq!(
            interpret(&ControlOutcome { mu: true, ..ControlOutcome::OFF }).unwrap(),
            Action::LiftOff
        );
        assert!(matches!(interpret(&ControlOutcome::OFF), Err(Error::CorruptController(_))));
        assert!(interpret(&both(Backward, Forward)).is_err());
        assert!(interpret(&ControlOutcome { mu: true, ask: true, ..ControlOutcome::OFF }).is_err());
    }

    #[test]
    fn motion_examples() {
        let m = GridMap::new(5, 5).unwrap();
        let p = Pose::new(2, 3, Heading::N);
        assert_eq!(apply_action(&m, p, Action::Forward).unwrap(), Motion::Moved(Pose::new(2, 2, Heading::N)));
        assert_eq!(apply_action(&m, p, Action::TurnLeft).unwrap(), Motion::Moved(Pose::new(1, 3, Heading::W)));
        assert_eq!(apply_action(&m, p, Action::TurnRight).unwrap(), Motion::Moved(Pose::new(3, 3, Heading::E)));
        assert_eq!(apply_action(&m, p, Action::Backward).unwrap(), Motion::Moved(Pose::new(2, 4, Heading::N)));
        assert_eq!(apply_action(&m, p, Action::LiftOff).unwrap(), Motion::Terminal(Terminal::Airborne, p));
        assert!(apply_action(&m, p, Action::Ask).is_err());
    }

    #[test]
    fn blocked_move_is_contract_violation() {
        let (m, p) = load_map("#\n^\n").unwrap();
        assert!(matches!(apply_action(&m, p, Action::Forward), Err(Error::Contract(_))));
        let (m, p) = load_map("^\n").unwrap();
        assert!(matches!(apply_action(&m, p, Action::Forward), Err(Error::Contract(_))));
    }

    #[test]
    fn entering_goal() {
        let (m, p) = load_map(">G\n").unwrap();
        assert_eq!(
            apply_action(&m, p, Action::Forward).unwrap(),
            Motion::Terminal(Terminal::Goal, Pose::new(1, 0, Heading::E))
        );
    }

    #[test]
    fn resolve_examples() {
        assert_eq!(resolve_ask(w("1010"), Direction::Left).unwrap(), w("0010"));
        assert_eq!(resolve_ask(w("1111"), Direction::Back).unwrap(), w("0100"));
        assert!(matches!(resolve_ask(w("1010"), Direction::Right), Err(Error::InvalidChoice(_))));
    }
}
