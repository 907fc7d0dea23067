//! Global dialogue state accumulated across both subtasks, and its
//! fixed-width feature encoding.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::domain::{
    check_with, joint_constraints, Constraint, DialogueAct, Intent, SlotName, SlotSet, Speaker,
    SubtaskId,
};
use crate::error::{DomainError, KbError};
use crate::kb::Kb;

/// Bumped whenever the layout produced by [`DialogueState::featurize`] changes.
pub const FEATURE_SCHEMA_VERSION: u32 = 1;
pub const FEATURE_WIDTH: usize = 93;
pub const FEATURE_WIDTH_WITH_SUBTASK: usize = FEATURE_WIDTH + SubtaskId::COUNT;

const USER_INTENT: usize = 0;
const AGENT_INTENT: usize = USER_INTENT + Intent::COUNT;
const USER_INFORMED: usize = AGENT_INTENT + Intent::COUNT;
const AGENT_INFORMED: usize = USER_INFORMED + SlotName::COUNT;
const PENDING: usize = AGENT_INFORMED + SlotName::COUNT;
const FILLED: usize = PENDING + SlotName::COUNT;
const BOOKED: usize = FILLED + SlotName::COUNT;
const VIOLATION: usize = BOOKED + SubtaskId::COUNT;
const KB_BUCKET: usize = VIOLATION + 4;
const TURN: usize = KB_BUCKET + 4 * SubtaskId::COUNT;
const _: () = assert!(TURN + 1 == FEATURE_WIDTH);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DialogueState {
    pub turn: usize,
    pub user_informed: BTreeMap<SlotName, String>,
    pub agent_informed: BTreeMap<SlotName, String>,
    pub user_requested: SlotSet,
    pub agent_requested: SlotSet,
    pub filled_requests: SlotSet,
    pub last_user_act: Option<DialogueAct>,
    pub last_agent_act: Option<DialogueAct>,
    pub kb_count_flight: usize,
    pub kb_count_hotel: usize,
    pub booked: [bool; SubtaskId::COUNT],
    pub constraint_violations: Vec<Constraint>,
    pub max_turn: usize,
}

impl DialogueState {
    pub fn new(kb: &Kb, max_turn: usize) -> Self {
        DialogueState {
            turn: 0,
            user_informed: BTreeMap::new(),
            agent_informed: BTreeMap::new(),
            user_requested: SlotSet::empty(),
            agent_requested: SlotSet::empty(),
            filled_requests: SlotSet::empty(),
            last_user_act: None,
            last_agent_act: None,
            kb_count_flight: kb.flights.len(),
            kb_count_hotel: kb.hotels.len(),
            booked: [false; SubtaskId::COUNT],
            constraint_violations: Vec::new(),
            max_turn,
        }
    }

    pub fn kb_count(&self, g: SubtaskId) -> usize {
        match g {
            SubtaskId::BookFlightTicket => self.kb_count_flight,
            SubtaskId::ReserveHotel => self.kb_count_hotel,
        }
    }

    pub fn is_booked(&self, g: SubtaskId) -> bool {
        self.booked[g.index()]
    }

    /// User requests the agent has not answered yet.
    pub fn pending_requests(&self) -> impl Iterator<Item = SlotName> + '_ {
        self.user_requested
            .iter()
            .filter(|s| !self.filled_requests.contains(*s))
    }

    /// Value of a slot as the joint-constraint check sees it: the user's
    /// value wins over the agent's.
    pub fn merged_value(&self, slot: SlotName) -> Option<&str> {
        self.user_informed
            .get(&slot)
            .or_else(|| self.agent_informed.get(&slot))
            .map(String::as_str)
    }

    pub fn has_violation_involving(&self, g: SubtaskId) -> bool {
        self.constraint_violations.iter().any(|c| c.involves_subtask(g))
    }

    /// User-side query constraints for a subtask.
    pub fn user_constraints(&self, g: SubtaskId) -> impl Iterator<Item = (SlotName, &str)> {
        self.user_informed
            .iter()
            .filter(move |(s, _)| s.subtask() == g && s.is_queryable())
            .map(|(s, v)| (*s, v.as_str()))
    }

    /// Returns the state after recording `act`.
    pub fn update(&self, act: &DialogueAct, kb: &Kb) -> Result<Self, DomainError> {
        let mut next = self.clone();
        next.apply(act, kb)?;
        Ok(next)
    }

    /// In-place form of [`DialogueState::update`].
    pub fn apply(&mut self, act: &DialogueAct, kb: &Kb) -> Result<(), DomainError> {
        act.validate_values()?;
        let carries_values = matches!(
            act.intent,
            Intent::Inform | Intent::Request | Intent::ConfirmAnswer | Intent::Deny
        );
        match act.speaker {
            Speaker::User => {
                let mut user_changed = false;
                if carries_values {
                    for (slot, value) in act.valued_slots() {
                        let prev = self.user_informed.insert(slot, value.to_string());
                        if prev.as_deref() != Some(value) {
                            user_changed = true;
                            self.booked[slot.subtask().index()] = false;
                        }
                    }
                }
                if act.intent == Intent::Request {
                    for slot in act.requested_slots() {
                        self.user_requested.insert(slot);
                    }
                }
                if user_changed {
                    self.recount(kb);
                    self.retract_stale_answers()?;
                }
                self.last_user_act = Some(act.clone());
            }
            Speaker::Agent => {
                if act.intent == Intent::Inform {
                    for (slot, value) in act.valued_slots() {
                        self.agent_informed.insert(slot, value.to_string());
                        if self.user_requested.contains(slot) {
                            self.filled_requests.insert(slot);
                        }
                    }
                }
                if act.intent == Intent::Request {
                    for slot in act.requested_slots() {
                        self.agent_requested.insert(slot);
                    }
                }
                if act.intent == Intent::Book {
                    if let Some(g) = act.subtask() {
                        let found = kb
                            .count_with(g, self.user_constraints(g))
                            .map_err(kb_to_domain)?;
                        self.booked[g.index()] = found > 0;
                    }
                }
                self.last_agent_act = Some(act.clone());
            }
        }
        self.constraint_violations = check_with(|s| self.merged_value(s))?;
        self.turn += 1;
        Ok(())
    }

    /// Drops agent answers that the user's newer constraints contradict, so
    /// the corresponding requests become pending again.
    fn retract_stale_answers(&mut self) -> Result<(), DomainError> {
        for c in check_with(|s| self.merged_value(s))? {
            for slot in [c.left, c.right] {
                if !self.user_informed.contains_key(&slot) && self.agent_informed.remove(&slot).is_some() {
                    self.filled_requests.remove(slot);
                }
            }
        }
        Ok(())
    }

    fn recount(&mut self, kb: &Kb) {
        let count = |g| kb.count_with(g, self.user_constraints(g)).unwrap_or(0);
        let (flight, hotel) = (count(SubtaskId::BookFlightTicket), count(SubtaskId::ReserveHotel));
        self.kb_count_flight = flight;
        self.kb_count_hotel = hotel;
    }

    pub fn featurize(&self) -> Vec<f64> {
        let mut out = vec![0.0; FEATURE_WIDTH];
        self.featurize_into(&mut out);
        out
    }

    pub fn featurize_with_subtask(&self, g: SubtaskId) -> Vec<f64> {
        let mut out = vec![0.0; FEATURE_WIDTH_WITH_SUBTASK];
        self.featurize_into(&mut out[..FEATURE_WIDTH]);
        out[FEATURE_WIDTH + g.index()] = 1.0;
        out
    }

    /// Writes the 93-wide encoding into `out`, which must be that wide.
    pub fn featurize_into(&self, out: &mut [f64]) {
        assert_eq!(out.len(), FEATURE_WIDTH);
        out.fill(0.0);
        if let Some(a) = &self.last_user_act {
            out[USER_INTENT + a.intent.index()] = 1.0;
        }
        if let Some(a) = &self.last_agent_act {
            out[AGENT_INTENT + a.intent.index()] = 1.0;
        }
        for s in self.user_informed.keys() {
            out[USER_INFORMED + s.index()] = 1.0;
        }
        for s in self.agent_informed.keys() {
            out[AGENT_INFORMED + s.index()] = 1.0;
        }
        for s in self.pending_requests() {
            out[PENDING + s.index()] = 1.0;
        }
        for s in self.filled_requests.iter() {
            out[FILLED + s.index()] = 1.0;
        }
        for g in SubtaskId::ALL {
            if self.booked[g.index()] {
                out[BOOKED + g.index()] = 1.0;
            }
            let bucket = match self.kb_count(g) {
                0 => 0,
                1 => 1,
                2..=5 => 2,
                _ => 3,
            };
            out[KB_BUCKET + 4 * g.index() + bucket] = 1.0;
        }
        for (i, c) in joint_constraints().iter().enumerate() {
            if self.constraint_violations.contains(c) {
                out[VIOLATION + i] = 1.0;
            }
        }
        let horizon = (2 * self.max_turn).max(1) as f64;
        out[TURN] = (self.turn as f64 / horizon).min(1.0);
    }
}

fn kb_to_domain(e: KbError) -> DomainError {
    match e {
        KbError::Domain(d) => d,
        other => DomainError::InvalidAct(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{default_city_pool, generate_kb};

    fn kb() -> Kb {
        generate_kb(3, 60, 30, &default_city_pool(), 0.7).unwrap()
    }

    #[test]
    fn fresh_state() {
        let kb = kb();
        let s = DialogueState::new(&kb, 60);
        assert_eq!(s.turn, 0);
        assert!(s.constraint_violations.is_empty());
        assert_eq!(s.kb_count_flight, 60);
        let f = s.featurize();
        assert_eq!(f.len(), FEATURE_WIDTH);
        assert!(f[USER_INFORMED..BOOKED].iter().all(|&x| x == 0.0));
        assert_eq!(s.featurize_with_subtask(SubtaskId::ReserveHotel).len(), FEATURE_WIDTH + 2);
    }

    #[test]
    fn user_inform_recounts() {
        let kb = kb();
        let city = kb.flights[0].dst_city.clone();
        let s = DialogueState::new(&kb, 60)
            .update(&DialogueAct::inform(Speaker::User, SlotName::DstCity, &city), &kb)
            .unwrap();
        let expected = kb.flights.iter().filter(|f| f.dst_city == city).count();
        assert_eq!(s.kb_count_flight, expected);
        assert_eq!(s.turn, 1);
    }

    #[test]
    fn agent_inform_fills_pending_request() {
        let kb = kb();
        let s = DialogueState::new(&kb, 60)
            .update(&DialogueAct::request(Speaker::User, SlotName::Price), &kb)
            .unwrap()
            .update(&DialogueAct::inform(Speaker::Agent, SlotName::Price, "1399"), &kb)
            .unwrap();
        assert!(s.filled_requests.contains(SlotName::Price));
        assert_eq!(s.pending_requests().count(), 0);
    }

    #[test]
    fn thanks_only_moves_the_turn() {
        let kb = kb();
        let s = DialogueState::new(&kb, 60);
        let t = s.update(&DialogueAct::new(Speaker::User, Intent::Thanks), &kb).unwrap();
        let mut expected = s.clone();
        expected.turn = 1;
        expected.last_user_act = t.last_user_act.clone();
        assert_eq!(t, expected);
    }

    #[test]
    fn three_informs_set_three_bits() {
        let kb = kb();
        let mut s = DialogueState::new(&kb, 60);
        for (slot, v) in [
            (SlotName::OrCity, "Paris"),
            (SlotName::NumberOfPeople, "2"),
            (SlotName::HotelCity, "Lima"),
        ] {
            s.apply(&DialogueAct::inform(Speaker::User, slot, v), &kb).unwrap();
        }
        let f = s.featurize();
        let bits: f64 = f[USER_INFORMED..USER_INFORMED + SlotName::COUNT].iter().sum();
        assert_eq!(bits, 3.0);
    }

    #[test]
    fn violations_follow_the_merged_view() {
        let kb = kb();
        let mut s = DialogueState::new(&kb, 60);
        s.apply(&DialogueAct::inform(Speaker::User, SlotName::NumberOfPeople, "2"), &kb)
            .unwrap();
        s.apply(
            &DialogueAct::inform(Speaker::User, SlotName::HotelNumberOfPeople, "3"),
            &kb,
        )
        .unwrap();
        assert_eq!(s.constraint_violations, vec![joint_constraints()[1]]);
        assert!(s.has_violation_involving(SubtaskId::ReserveHotel));
        s.apply(
            &DialogueAct::inform(Speaker::User, SlotName::HotelNumberOfPeople, "2"),
            &kb,
        )
        .unwrap();
        assert!(s.constraint_violations.is_empty());
    }

    #[test]
    fn contradicted_answers_are_retracted() {
        let kb = kb();
        let mut s = DialogueState::new(&kb, 60);
        s.apply(&DialogueAct::request(Speaker::User, SlotName::HotelDateCheckout), &kb)
            .unwrap();
        s.apply(&DialogueAct::inform(Speaker::Agent, SlotName::HotelDateCheckout, "07/15"), &kb)
            .unwrap();
        assert_eq!(s.pending_requests().count(), 0);
        s.apply(&DialogueAct::inform(Speaker::User, SlotName::ReturnDateDep, "07/20"), &kb)
            .unwrap();
        assert!(s.agent_informed.contains_key(&SlotName::HotelDateCheckout));

        s.apply(&DialogueAct::inform(Speaker::User, SlotName::ReturnDateDep, "06/12"), &kb)
            .unwrap();
        assert!(s.constraint_violations.is_empty());
        assert!(!s.agent_informed.contains_key(&SlotName::HotelDateCheckout));
        assert_eq!(s.pending_requests().collect::<Vec<_>>(), vec![SlotName::HotelDateCheckout]);
    }

    #[test]
    fn malformed_acts_are_rejected() {
        let kb = kb();
        let s = DialogueState::new(&kb, 60);
        let bad = DialogueAct::inform(Speaker::User, SlotName::DepartDateDep, "soon");
        assert!(s.update(&bad, &kb).is_err());
        let bad = DialogueAct::new(Speaker::User, Intent::Thanks).with_slot(SlotName::Seat, "x");
        assert!(matches!(s.update(&bad, &kb), Err(DomainError::InvalidAct(_))));
    }

    #[test]
    fn booking_needs_a_match_and_user_change_unbooks() {
        let kb = kb();
        let f = &kb.flights[0];
        let mut s = DialogueState::new(&kb, 60);
        s.apply(&DialogueAct::inform(Speaker::User, SlotName::DstCity, &f.dst_city), &kb)
            .unwrap();
        s.apply(&DialogueAct::new(Speaker::Agent, Intent::Book).with_slot(SlotName::Price, "1"), &kb)
            .unwrap();
        assert!(s.is_booked(SubtaskId::BookFlightTicket));
        s.apply(&DialogueAct::inform(Speaker::User, SlotName::DstCity, "Nowhere"), &kb)
            .unwrap();
        assert!(!s.is_booked(SubtaskId::BookFlightTicket));
        s.apply(&DialogueAct::new(Speaker::Agent, Intent::Book).with_slot(SlotName::Price, "1"), &kb)
            .unwrap();
        assert!(!s.is_booked(SubtaskId::BookFlightTicket));
    }
}
