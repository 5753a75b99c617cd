//! The two cube-tidying environments.
//!
//! Three coloured cubes sit on a table next to three boxes of the same
//! colours. The arm can take one cube at a time and drop it in a box or back
//! on the table. `Tidy1` rewards having every cube in its own box. `Tidy2`
//! adds a three-LED lamp that tracks the red, green, blue placement order;
//! any error switches the lamp off and only a full sequence pays.
//!
//! Actions that do not apply in a state (taking while holding, placing with
//! an empty hand) are self-transitions, so every state keeps the full action
//! set. Reaching the goal pays one unit and puts every cube back on the
//! table.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{ActionId, StateId, NUM_ACTIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CubePlace {
    Table,
    RedBox,
    GreenBox,
    BlueBox,
    Hand,
}

impl CubePlace {
    pub const ALL: [CubePlace; 5] = [
        CubePlace::Table,
        CubePlace::RedBox,
        CubePlace::GreenBox,
        CubePlace::BlueBox,
        CubePlace::Hand,
    ];

    pub fn is_box(self) -> bool {
        matches!(self, CubePlace::RedBox | CubePlace::GreenBox | CubePlace::BlueBox)
    }
}

/// Cube colours, in the order the second task wants them boxed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Cube {
    Red,
    Green,
    Blue,
}

impl Cube {
    pub const ALL: [Cube; 3] = [Cube::Red, Cube::Green, Cube::Blue];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn own_box(self) -> CubePlace {
        match self {
            Cube::Red => CubePlace::RedBox,
            Cube::Green => CubePlace::GreenBox,
            Cube::Blue => CubePlace::BlueBox,
        }
    }
}

/// The seven arm actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    TakeRed,
    TakeGreen,
    TakeBlue,
    PlaceInRed,
    PlaceInGreen,
    PlaceInBlue,
    PlaceOnTable,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [
        Action::TakeRed,
        Action::TakeGreen,
        Action::TakeBlue,
        Action::PlaceInRed,
        Action::PlaceInGreen,
        Action::PlaceInBlue,
        Action::PlaceOnTable,
    ];

    pub fn id(self) -> ActionId {
        ActionId::new(self as usize).expect("seven actions")
    }

    pub fn from_id(id: ActionId) -> Action {
        Action::ALL[id.index()]
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::TakeRed => "TAKE_RED",
            Action::TakeGreen => "TAKE_GREEN",
            Action::TakeBlue => "TAKE_BLUE",
            Action::PlaceInRed => "PLACE_IN_RED",
            Action::PlaceInGreen => "PLACE_IN_GREEN",
            Action::PlaceInBlue => "PLACE_IN_BLUE",
            Action::PlaceOnTable => "PLACE_ON_TABLE",
        }
    }

    /// Where the held cube ends up, for the four placing actions.
    pub fn destination(self) -> Option<CubePlace> {
        match self {
            Action::PlaceInRed => Some(CubePlace::RedBox),
            Action::PlaceInGreen => Some(CubePlace::GreenBox),
            Action::PlaceInBlue => Some(CubePlace::BlueBox),
            Action::PlaceOnTable => Some(CubePlace::Table),
            _ => None,
        }
    }

    pub fn taken_cube(self) -> Option<Cube> {
        match self {
            Action::TakeRed => Some(Cube::Red),
            Action::TakeGreen => Some(Cube::Green),
            Action::TakeBlue => Some(Cube::Blue),
            _ => None,
        }
    }

    /// The action that drops a cube into its own box.
    pub fn drop_into_own_box(cube: Cube) -> Action {
        match cube {
            Cube::Red => Action::PlaceInRed,
            Cube::Green => Action::PlaceInGreen,
            Cube::Blue => Action::PlaceInBlue,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Action::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown action {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Tidy1,
    Tidy2,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Tidy1 => "tidy1",
            TaskKind::Tidy2 => "tidy2",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tidy1" => Ok(TaskKind::Tidy1),
            "tidy2" => Ok(TaskKind::Tidy2),
            _ => Err(Error::Config(format!("unknown task {s:?}"))),
        }
    }
}

/// Positions of the three cubes plus the LED counter (always 0 in `Tidy1`).
///
/// Field order gives the canonical lexicographic state ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TidyState {
    pub red: CubePlace,
    pub green: CubePlace,
    pub blue: CubePlace,
    #[serde(default)]
    pub leds: u8,
}

impl TidyState {
    pub fn initial() -> Self {
        TidyState {
            red: CubePlace::Table,
            green: CubePlace::Table,
            blue: CubePlace::Table,
            leds: 0,
        }
    }

    pub fn place(&self, cube: Cube) -> CubePlace {
        match cube {
            Cube::Red => self.red,
            Cube::Green => self.green,
            Cube::Blue => self.blue,
        }
    }

    fn set_place(&mut self, cube: Cube, place: CubePlace) {
        match cube {
            Cube::Red => self.red = place,
            Cube::Green => self.green = place,
            Cube::Blue => self.blue = place,
        }
    }

    pub fn held(&self) -> Option<Cube> {
        Cube::ALL.into_iter().find(|&c| self.place(c) == CubePlace::Hand)
    }

    fn all_in_own_boxes(&self) -> bool {
        Cube::ALL.into_iter().all(|c| self.place(c) == c.own_box())
    }

    /// Hand holds at most one cube; LEDs agree with the boxed prefix of the
    /// red, green, blue sequence.
    pub fn is_legal(&self, kind: TaskKind) -> bool {
        let in_hand = Cube::ALL
            .into_iter()
            .filter(|&c| self.place(c) == CubePlace::Hand)
            .count();
        if in_hand > 1 {
            return false;
        }
        match kind {
            TaskKind::Tidy1 => self.leds == 0,
            TaskKind::Tidy2 => {
                self.leds <= 3
                    && Cube::ALL[..self.leds as usize]
                        .iter()
                        .all(|&c| self.place(c) == c.own_box())
            }
        }
    }
}

impl Default for TidyState {
    fn default() -> Self {
        TidyState::initial()
    }
}

pub fn initial_state(_kind: TaskKind) -> TidyState {
    TidyState::initial()
}

/// Outcome of one action on a raw configuration, before the goal reset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    /// Configuration the action produced. Equals the goal configuration on
    /// terminal steps, where the observed next state is the reset state.
    pub reached: TidyState,
    pub next: TidyState,
    pub reward: f64,
    pub terminal: bool,
}

/// Pure dynamics of both tasks.
pub fn transition(kind: TaskKind, s: &TidyState, a: Action) -> Result<Transition> {
    if !s.is_legal(kind) {
        return Err(Error::IllegalState);
    }
    let mut reached = *s;
    if let Some(cube) = a.taken_cube() {
        // a cube can be taken from the table or out of any box
        if s.held().is_none() {
            reached.set_place(cube, CubePlace::Hand);
            if kind == TaskKind::Tidy2 && cube.index() < s.leds as usize {
                // pulling a validated cube out breaks the sequence
                reached.leds = 0;
            }
        }
    } else if let (Some(cube), Some(dest)) = (s.held(), a.destination()) {
        reached.set_place(cube, dest);
        if kind == TaskKind::Tidy2 && dest.is_box() {
            if dest == cube.own_box() && cube.index() == s.leds as usize {
                reached.leds = s.leds + 1;
            } else {
                reached.leds = 0;
            }
        }
    }
    let terminal = match kind {
        TaskKind::Tidy1 => reached.all_in_own_boxes(),
        TaskKind::Tidy2 => reached.leds == 3,
    };
    Ok(Transition {
        reached,
        next: if terminal { TidyState::initial() } else { reached },
        reward: if terminal { 1.0 } else { 0.0 },
        terminal,
    })
}

/// Whether a simulated teacher would applaud `a` in `s`: the held cube goes
/// into its own box and, for `Tidy2`, it is the next cube of the sequence.
pub fn relevant_action(kind: TaskKind, s: &TidyState, a: Action) -> bool {
    correct_drop(kind, s) == Some(a)
}

/// Drop a teacher would choose for the held cube, if any.
pub fn correct_drop(kind: TaskKind, s: &TidyState) -> Option<Action> {
    let cube = s.held()?;
    match kind {
        TaskKind::Tidy1 => Some(Action::drop_into_own_box(cube)),
        TaskKind::Tidy2 => (cube.index() == s.leds as usize).then(|| Action::drop_into_own_box(cube)),
    }
}

/// All placements of `cubes` cubes over the five places with at most one in
/// the hand, in lexicographic order.
pub fn legal_configurations(cubes: usize) -> Vec<Vec<CubePlace>> {
    let mut out = vec![Vec::new()];
    for _ in 0..cubes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                CubePlace::ALL.into_iter().filter_map(move |p| {
                    let mut next = prefix.clone();
                    next.push(p);
                    let hands = next.iter().filter(|&&q| q == CubePlace::Hand).count();
                    (hands <= 1).then_some(next)
                })
            })
            .collect();
    }
    out
}

/// Configurations reachable from the initial state, counting the goal
/// configurations a terminal step passes through before the reset.
pub fn reachable_states(kind: TaskKind) -> BTreeSet<TidyState> {
    let start = initial_state(kind);
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for a in Action::ALL {
            let t = transition(kind, &s, a).expect("reachable states are legal");
            for n in [t.reached, t.next] {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
    }
    seen
}

/// Canonically ordered state list for a task.
pub fn enumerate_states(kind: TaskKind) -> Vec<TidyState> {
    match kind {
        TaskKind::Tidy1 => legal_configurations(3)
            .into_iter()
            .map(|c| TidyState {
                red: c[0],
                green: c[1],
                blue: c[2],
                leds: 0,
            })
            .collect(),
        TaskKind::Tidy2 => reachable_states(kind).into_iter().collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub next: StateId,
    pub reward: f64,
    pub terminal: bool,
}

/// A task with its state enumeration and precomputed transition table.
#[derive(Debug, Clone)]
pub struct TidyTask {
    kind: TaskKind,
    states: Vec<TidyState>,
    index: HashMap<TidyState, StateId>,
    table: Vec<[StepResult; NUM_ACTIONS]>,
}

impl TidyTask {
    pub fn new(kind: TaskKind) -> Self {
        let states = enumerate_states(kind);
        let index: HashMap<TidyState, StateId> = states
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, StateId(i)))
            .collect();
        let table = states
            .iter()
            .map(|s| {
                Action::ALL.map(|a| {
                    let t = transition(kind, s, a).expect("enumerated states are legal");
                    StepResult {
                        next: index[&t.next],
                        reward: t.reward,
                        terminal: t.terminal,
                    }
                })
            })
            .collect();
        TidyTask {
            kind,
            states,
            index,
            table,
        }
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[TidyState] {
        &self.states
    }

    pub fn state(&self, id: StateId) -> Result<&TidyState> {
        self.states.get(id.0).ok_or(Error::UnknownState(id.0))
    }

    pub fn id_of(&self, s: &TidyState) -> Result<StateId> {
        self.index.get(s).copied().ok_or(Error::IllegalState)
    }

    pub fn initial(&self) -> StateId {
        self.index[&initial_state(self.kind)]
    }

    pub fn step(&self, s: StateId, a: ActionId) -> Result<StepResult> {
        self.table
            .get(s.0)
            .map(|row| row[a.index()])
            .ok_or(Error::UnknownState(s.0))
    }

    pub fn relevant(&self, s: StateId, a: ActionId) -> bool {
        self.states
            .get(s.0)
            .is_some_and(|st| relevant_action(self.kind, st, Action::from_id(a)))
    }

    pub fn correct_drop(&self, s: StateId) -> Option<ActionId> {
        let st = self.states.get(s.0)?;
        correct_drop(self.kind, st).map(Action::id)
    }

    pub fn holding(&self, s: StateId) -> bool {
        self.states.get(s.0).is_some_and(|st| st.held().is_some())
    }

    /// Full transition table as `state,action,next_state,reward` CSV.
    pub fn write_transitions_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state", "action", "next_state", "reward"])?;
        for (s, row) in self.table.iter().enumerate() {
            for (a, step) in row.iter().enumerate() {
                w.write_record([
                    s.to_string(),
                    a.to_string(),
                    step.next.to_string(),
                    step.reward.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
