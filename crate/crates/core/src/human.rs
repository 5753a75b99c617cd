//! Simulated teachers.
//!
//! A teacher either congratulates relevant placements, which biases the next
//! decision in the same situation, or takes over the drop whenever the arm
//! holds a cube. Teachers spend a finite interaction budget and forget each
//! opportunity independently with a fixed probability.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{ActionId, RngStream, StateId, NUM_ACTIONS};
use crate::meta::ControllerKind;
use crate::tidy::{TaskKind, TidyTask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionMode {
    None,
    Congrats,
    Takeover,
}

impl InteractionMode {
    pub fn name(self) -> &'static str {
        match self {
            InteractionMode::None => "none",
            InteractionMode::Congrats => "congrats",
            InteractionMode::Takeover => "takeover",
        }
    }
}

impl fmt::Display for InteractionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InteractionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(InteractionMode::None),
            "congrats" => Ok(InteractionMode::Congrats),
            "takeover" => Ok(InteractionMode::Takeover),
            _ => Err(Error::Config(format!("unknown interaction mode {s:?}"))),
        }
    }
}

/// What the teacher did at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanEvent {
    #[default]
    None,
    CongratsDelivered,
    CongratsForgotten,
    TakeoverDelivered,
    TakeoverForgotten,
}

impl HumanEvent {
    pub fn name(self) -> &'static str {
        match self {
            HumanEvent::None => "none",
            HumanEvent::CongratsDelivered => "congrats_delivered",
            HumanEvent::CongratsForgotten => "congrats_forgotten",
            HumanEvent::TakeoverDelivered => "takeover_delivered",
            HumanEvent::TakeoverForgotten => "takeover_forgotten",
        }
    }
}

/// `G(s,a)`: whether the last execution of `(s,a)` was congratulated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongratsFlags {
    flags: Vec<[bool; NUM_ACTIONS]>,
}

impl CongratsFlags {
    pub fn new(num_states: usize) -> Self {
        CongratsFlags {
            flags: vec![[false; NUM_ACTIONS]; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.flags.len()
    }

    pub fn row(&self, s: StateId) -> &[bool; NUM_ACTIONS] {
        &self.flags[s.0]
    }

    pub fn get(&self, s: StateId, a: ActionId) -> bool {
        self.flags[s.0][a.index()]
    }

    pub fn set(&mut self, s: StateId, a: ActionId, value: bool) {
        self.flags[s.0][a.index()] = value;
    }

    pub fn count_set(&self) -> usize {
        self.flags.iter().flatten().filter(|&&g| g).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanModel {
    pub mode: InteractionMode,
    budget: u32,
    pub forget_prob: f64,
    rng: RngStream,
}

impl HumanModel {
    pub fn new(mode: InteractionMode, budget: u32, forget_prob: f64, rng: RngStream) -> Result<Self> {
        if !(0.0..=1.0).contains(&forget_prob) {
            return Err(Error::Config(format!("forget probability {forget_prob} outside [0, 1]")));
        }
        Ok(HumanModel {
            mode,
            budget,
            forget_prob,
            rng,
        })
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    /// One eligible opportunity: spends a unit of budget unless forgotten.
    fn attend(&mut self) -> bool {
        if self.rng.next_unit() >= self.forget_prob {
            self.budget -= 1;
            true
        } else {
            false
        }
    }

    /// Updates `G(s,a)` after `a` was executed in `s`.
    ///
    /// The flag always reflects the latest execution only: anything but a
    /// delivered congratulation clears it.
    pub fn observe_and_congratulate(
        &mut self,
        flags: &mut CongratsFlags,
        task: &TidyTask,
        s: StateId,
        a: ActionId,
    ) -> HumanEvent {
        if self.mode != InteractionMode::Congrats {
            return HumanEvent::None;
        }
        let event = if self.budget > 0 && task.relevant(s, a) {
            if self.attend() {
                HumanEvent::CongratsDelivered
            } else {
                HumanEvent::CongratsForgotten
            }
        } else {
            HumanEvent::None
        };
        flags.set(s, a, event == HumanEvent::CongratsDelivered);
        event
    }

    /// Chooses the drop for a held cube, replacing the proposal.
    ///
    /// Abstains when the hand is empty, the budget is spent, or (second task)
    /// the held cube is not the next one in the sequence.
    pub fn maybe_takeover(&mut self, task: &TidyTask, s: StateId, _proposed: ActionId) -> (Option<ActionId>, HumanEvent) {
        if self.mode != InteractionMode::Takeover || self.budget == 0 {
            return (None, HumanEvent::None);
        }
        let Some(drop) = task.correct_drop(s) else {
            return (None, HumanEvent::None);
        };
        if self.attend() {
            (Some(drop), HumanEvent::TakeoverDelivered)
        } else {
            (None, HumanEvent::TakeoverForgotten)
        }
    }
}

/// Interaction budgets used when a configuration does not set one.
pub fn default_budget(controller: ControllerKind, mode: InteractionMode, kind: TaskKind) -> u32 {
    use ControllerKind::*;
    match (mode, kind) {
        (InteractionMode::None, _) => 0,
        (InteractionMode::Congrats, TaskKind::Tidy1) => match controller {
            Mf => 300,
            Mb => 50,
            Rnd => 20,
            Ec => 30,
        },
        (InteractionMode::Takeover, TaskKind::Tidy1) => match controller {
            Mf => 200,
            Mb | Rnd | Ec => 50,
        },
        (_, TaskKind::Tidy2) => 300,
    }
}
