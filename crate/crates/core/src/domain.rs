//! Slots, subtasks, dialogue acts, user goals and the cross-subtask slot
//! constraints shared by the rest of the crate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

/// The two subtasks of the travel-planning composite task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubtaskId {
    #[serde(rename = "book-flight-ticket")]
    BookFlightTicket,
    #[serde(rename = "reserve-hotel")]
    ReserveHotel,
}

impl SubtaskId {
    pub const ALL: [SubtaskId; 2] = [SubtaskId::BookFlightTicket, SubtaskId::ReserveHotel];
    pub const COUNT: usize = 2;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<SubtaskId> {
        Self::ALL.get(i).copied()
    }

    pub fn other(self) -> SubtaskId {
        match self {
            SubtaskId::BookFlightTicket => SubtaskId::ReserveHotel,
            SubtaskId::ReserveHotel => SubtaskId::BookFlightTicket,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SubtaskId::BookFlightTicket => "book-flight-ticket",
            SubtaskId::ReserveHotel => "reserve-hotel",
        }
    }

    pub fn slots(self) -> impl Iterator<Item = SlotName> {
        SlotName::ALL.into_iter().filter(move |s| s.subtask() == self)
    }

    /// Slot holding the price of a booked item of this subtask.
    pub fn price_slot(self) -> SlotName {
        match self {
            SubtaskId::BookFlightTicket => SlotName::Price,
            SubtaskId::ReserveHotel => SlotName::HotelPrice,
        }
    }
}

impl fmt::Display for SubtaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubtaskId {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "book-flight-ticket" | "flight" => Ok(SubtaskId::BookFlightTicket),
            "reserve-hotel" | "hotel" => Ok(SubtaskId::ReserveHotel),
            other => Err(DomainError::UnknownName(other.to_string())),
        }
    }
}

/// What kind of value a slot carries; decides parsing and comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    City,
    Date,
    Time,
    Count,
    Seat,
    Name,
    Price,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SlotName {
    #[serde(rename = "or_city")]
    OrCity,
    #[serde(rename = "dst_city")]
    DstCity,
    #[serde(rename = "depart_date_dep")]
    DepartDateDep,
    #[serde(rename = "depart_time_dep")]
    DepartTimeDep,
    #[serde(rename = "return_date_dep")]
    ReturnDateDep,
    #[serde(rename = "return_time_dep")]
    ReturnTimeDep,
    #[serde(rename = "numberofpeople")]
    NumberOfPeople,
    #[serde(rename = "seat")]
    Seat,
    #[serde(rename = "price")]
    Price,
    #[serde(rename = "hotel_city")]
    HotelCity,
    #[serde(rename = "hotel_numberofpeople")]
    HotelNumberOfPeople,
    #[serde(rename = "hotel_date_checkin")]
    HotelDateCheckin,
    #[serde(rename = "hotel_date_checkout")]
    HotelDateCheckout,
    #[serde(rename = "hotel_name")]
    HotelName,
    #[serde(rename = "hotel_price")]
    HotelPrice,
}

impl SlotName {
    pub const COUNT: usize = 15;

    pub const ALL: [SlotName; SlotName::COUNT] = [
        SlotName::OrCity,
        SlotName::DstCity,
        SlotName::DepartDateDep,
        SlotName::DepartTimeDep,
        SlotName::ReturnDateDep,
        SlotName::ReturnTimeDep,
        SlotName::NumberOfPeople,
        SlotName::Seat,
        SlotName::Price,
        SlotName::HotelCity,
        SlotName::HotelNumberOfPeople,
        SlotName::HotelDateCheckin,
        SlotName::HotelDateCheckout,
        SlotName::HotelName,
        SlotName::HotelPrice,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<SlotName> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SlotName::OrCity => "or_city",
            SlotName::DstCity => "dst_city",
            SlotName::DepartDateDep => "depart_date_dep",
            SlotName::DepartTimeDep => "depart_time_dep",
            SlotName::ReturnDateDep => "return_date_dep",
            SlotName::ReturnTimeDep => "return_time_dep",
            SlotName::NumberOfPeople => "numberofpeople",
            SlotName::Seat => "seat",
            SlotName::Price => "price",
            SlotName::HotelCity => "hotel_city",
            SlotName::HotelNumberOfPeople => "hotel_numberofpeople",
            SlotName::HotelDateCheckin => "hotel_date_checkin",
            SlotName::HotelDateCheckout => "hotel_date_checkout",
            SlotName::HotelName => "hotel_name",
            SlotName::HotelPrice => "hotel_price",
        }
    }

    pub fn subtask(self) -> SubtaskId {
        if self.index() < SlotName::HotelCity.index() {
            SubtaskId::BookFlightTicket
        } else {
            SubtaskId::ReserveHotel
        }
    }

    pub fn kind(self) -> SlotKind {
        use SlotName::*;
        match self {
            OrCity | DstCity | HotelCity => SlotKind::City,
            DepartDateDep | ReturnDateDep | HotelDateCheckin | HotelDateCheckout => SlotKind::Date,
            DepartTimeDep | ReturnTimeDep => SlotKind::Time,
            NumberOfPeople | HotelNumberOfPeople => SlotKind::Count,
            Seat => SlotKind::Seat,
            HotelName => SlotKind::Name,
            Price | HotelPrice => SlotKind::Price,
        }
    }

    /// Slots a user can state as a constraint, and hence the agent can ask for.
    pub fn is_user_informable(self) -> bool {
        use SlotName::*;
        matches!(
            self,
            OrCity
                | DstCity
                | DepartDateDep
                | ReturnDateDep
                | NumberOfPeople
                | Seat
                | HotelCity
                | HotelNumberOfPeople
                | HotelDateCheckin
                | HotelDateCheckout
        )
    }

    /// Slots the agent can answer from the knowledge base.
    pub fn is_agent_answerable(self) -> bool {
        use SlotName::*;
        matches!(
            self,
            DepartTimeDep
                | ReturnTimeDep
                | ReturnDateDep
                | Seat
                | Price
                | HotelDateCheckout
                | HotelName
                | HotelPrice
        )
    }

    /// Slots accepted as knowledge-base query constraints.
    pub fn is_queryable(self) -> bool {
        !matches!(self, SlotName::Price | SlotName::HotelPrice)
    }
}

impl fmt::Display for SlotName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SlotName {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SlotName::ALL
            .into_iter()
            .find(|slot| slot.as_str() == s)
            .ok_or_else(|| DomainError::UnknownName(s.to_string()))
    }
}

/// Compact set of slots backed by a bitmask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SlotSet(u16);

impl SlotSet {
    pub const fn empty() -> Self {
        SlotSet(0)
    }

    pub fn insert(&mut self, slot: SlotName) -> bool {
        let had = self.contains(slot);
        self.0 |= 1 << slot.index();
        !had
    }

    pub fn remove(&mut self, slot: SlotName) -> bool {
        let had = self.contains(slot);
        self.0 &= !(1 << slot.index());
        had
    }

    pub fn contains(&self, slot: SlotName) -> bool {
        self.0 & (1 << slot.index()) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(&self, other: &SlotSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = SlotName> + '_ {
        SlotName::ALL.into_iter().filter(move |s| self.contains(*s))
    }
}

impl FromIterator<SlotName> for SlotSet {
    fn from_iter<I: IntoIterator<Item = SlotName>>(iter: I) -> Self {
        let mut set = SlotSet::empty();
        for slot in iter {
            set.insert(slot);
        }
        set
    }
}

impl Serialize for SlotSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for SlotSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let slots = Vec::<SlotName>::deserialize(deserializer)?;
        Ok(slots.into_iter().collect())
    }
}

/// Calendar day as month and day-of-month; ordering is chronological.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthDay {
    pub month: u8,
    pub day: u8,
}

impl MonthDay {
    pub fn new(month: u8, day: u8) -> Option<Self> {
        ((1..=12).contains(&month) && (1..=31).contains(&day)).then_some(MonthDay { month, day })
    }

    /// Accepts `MM/DD`, `M/D` and `MM-DD`.
    pub fn parse(text: &str) -> Option<Self> {
        let (m, d) = text.trim().split_once(['/', '-'])?;
        let month = m.parse::<u8>().ok()?;
        let day = d.parse::<u8>().ok()?;
        if m.is_empty() || d.is_empty() || m.len() > 2 || d.len() > 2 {
            return None;
        }
        MonthDay::new(month, day)
    }
}

impl fmt::Display for MonthDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}/{:02}", self.month, self.day)
    }
}

impl Serialize for MonthDay {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthDay {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        MonthDay::parse(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid MM/DD date `{text}`")))
    }
}

/// A slot value after parsing according to its [`SlotKind`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ParsedValue {
    Text(String),
    Date(MonthDay),
    Count(u32),
}

fn parse_hhmm(text: &str) -> Option<(u8, u8)> {
    let (h, m) = text.split_once(':')?;
    let hour = h.parse::<u8>().ok()?;
    let minute = m.parse::<u8>().ok()?;
    (hour < 24 && minute < 60 && m.len() == 2).then_some((hour, minute))
}

/// Parses a value for `slot`, failing when it is not well formed for the slot.
pub fn parse_value(slot: SlotName, value: &str) -> Result<ParsedValue, DomainError> {
    let malformed = || DomainError::MalformedValue {
        slot,
        value: value.to_string(),
    };
    let trimmed = value.trim();
    if trimmed.is_empty() {
        return Err(malformed());
    }
    match slot.kind() {
        SlotKind::Date => MonthDay::parse(trimmed)
            .map(ParsedValue::Date)
            .ok_or_else(malformed),
        SlotKind::Count | SlotKind::Price => match trimmed.parse::<u32>() {
            Ok(n) if n > 0 => Ok(ParsedValue::Count(n)),
            _ => Err(malformed()),
        },
        SlotKind::Time => parse_hhmm(trimmed)
            .map(|_| ParsedValue::Text(trimmed.to_string()))
            .ok_or_else(malformed),
        SlotKind::Seat => Ok(ParsedValue::Text(trimmed.to_ascii_lowercase())),
        SlotKind::City | SlotKind::Name => Ok(ParsedValue::Text(trimmed.to_string())),
    }
}

/// Canonical text form of a well-formed value (dates zero padded).
pub fn normalize_value(slot: SlotName, value: &str) -> Result<String, DomainError> {
    Ok(match parse_value(slot, value)? {
        ParsedValue::Date(d) => d.to_string(),
        ParsedValue::Count(n) => n.to_string(),
        ParsedValue::Text(_) => value.trim().to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    Inform,
    Request,
    ConfirmQuestion,
    ConfirmAnswer,
    NotAvailable,
    Book,
    Deny,
    Thanks,
    Closing,
}

impl Intent {
    pub const COUNT: usize = 9;

    pub const ALL: [Intent; Intent::COUNT] = [
        Intent::Inform,
        Intent::Request,
        Intent::ConfirmQuestion,
        Intent::ConfirmAnswer,
        Intent::NotAvailable,
        Intent::Book,
        Intent::Deny,
        Intent::Thanks,
        Intent::Closing,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Intent::Inform => "inform",
            Intent::Request => "request",
            Intent::ConfirmQuestion => "confirm_question",
            Intent::ConfirmAnswer => "confirm_answer",
            Intent::NotAvailable => "not_available",
            Intent::Book => "book",
            Intent::Deny => "deny",
            Intent::Thanks => "thanks",
            Intent::Closing => "closing",
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One turn's communicative act.
///
/// Under `request`, empty-valued slots are the requested ones; nonempty
/// entries on a request act are informs riding along with the question
/// (the simulated user's opening turn uses this).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DialogueAct {
    pub speaker: Speaker,
    pub intent: Intent,
    #[serde(default)]
    pub slots: BTreeMap<SlotName, String>,
}

impl DialogueAct {
    pub fn new(speaker: Speaker, intent: Intent) -> Self {
        DialogueAct {
            speaker,
            intent,
            slots: BTreeMap::new(),
        }
    }

    pub fn with_slot(mut self, slot: SlotName, value: impl Into<String>) -> Self {
        self.slots.insert(slot, value.into());
        self
    }

    pub fn inform(speaker: Speaker, slot: SlotName, value: impl Into<String>) -> Self {
        DialogueAct::new(speaker, Intent::Inform).with_slot(slot, value)
    }

    pub fn request(speaker: Speaker, slot: SlotName) -> Self {
        DialogueAct::new(speaker, Intent::Request).with_slot(slot, "")
    }

    /// Slots carrying a value (informed content).
    pub fn valued_slots(&self) -> impl Iterator<Item = (SlotName, &str)> {
        self.slots
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| (*k, v.as_str()))
    }

    /// Slots asked for (empty value under a request act).
    pub fn requested_slots(&self) -> impl Iterator<Item = SlotName> + '_ {
        self.slots
            .iter()
            .filter(|(_, v)| v.is_empty())
            .map(|(k, _)| *k)
    }

    /// The subtask all slots of this act belong to, if there is exactly one.
    pub fn subtask(&self) -> Option<SubtaskId> {
        let mut subtasks = self.slots.keys().map(|s| s.subtask());
        let first = subtasks.next()?;
        subtasks.all(|g| g == first).then_some(first)
    }

    /// Checks the structural invariants of an act.
    pub fn validate(&self) -> Result<(), DomainError> {
        let invalid = |reason: &str| Err(DomainError::InvalidAct(reason.to_string()));
        match self.intent {
            Intent::Request => {
                if self.requested_slots().next().is_none() {
                    return invalid("request carries no requested (empty-valued) slot");
                }
            }
            Intent::Inform => {
                if self.slots.is_empty() {
                    return invalid("inform carries no slot");
                }
                if self.slots.values().any(|v| v.is_empty()) {
                    return invalid("inform carries an empty value");
                }
            }
            Intent::Thanks | Intent::Closing => {
                if !self.slots.is_empty() {
                    return invalid("thanks/closing must carry no slots");
                }
            }
            _ => {
                if self.slots.values().any(|v| v.is_empty()) {
                    return invalid("empty values are only allowed under request");
                }
            }
        }
        Ok(())
    }

    /// Structural invariants plus per-slot value well-formedness.
    pub fn validate_values(&self) -> Result<(), DomainError> {
        self.validate()?;
        for (slot, value) in self.valued_slots() {
            parse_value(slot, value)
                .map_err(|_| DomainError::InvalidAct(format!("malformed value `{value}` for {slot}")))?;
        }
        Ok(())
    }
}

/// Single-line JSON wire form of an act.
pub fn serialize_act(act: &DialogueAct) -> String {
    serde_json::to_string(act).expect("dialogue acts always serialize")
}

pub fn parse_act(text: &str) -> Result<DialogueAct, DomainError> {
    let act: DialogueAct = serde_json::from_str(text).map_err(|e| DomainError::Parse {
        position: e.column(),
        reason: e.to_string(),
    })?;
    act.validate().map_err(|e| DomainError::Parse {
        position: 0,
        reason: e.to_string(),
    })?;
    Ok(act)
}

/// What a simulated or human user wants out of the dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserGoal {
    /// Candidate values per constraint slot; one value is a hard constraint,
    /// several a soft one, tried in list order.
    pub inform: BTreeMap<SlotName, Vec<String>>,
    pub request: BTreeSet<SlotName>,
    #[serde(rename = "first_subtask", default)]
    pub preferred_first_subtask: Option<SubtaskId>,
}

impl UserGoal {
    pub fn is_soft(&self, slot: SlotName) -> bool {
        self.inform.get(&slot).is_some_and(|v| v.len() >= 2)
    }

    pub fn soft_slots(&self) -> impl Iterator<Item = SlotName> + '_ {
        self.inform
            .iter()
            .filter(|(_, v)| v.len() >= 2)
            .map(|(k, _)| *k)
    }

    pub fn inform_slots_of(&self, g: SubtaskId) -> impl Iterator<Item = SlotName> + '_ {
        self.inform.keys().copied().filter(move |s| s.subtask() == g)
    }

    pub fn request_slots_of(&self, g: SubtaskId) -> impl Iterator<Item = SlotName> + '_ {
        self.request.iter().copied().filter(move |s| s.subtask() == g)
    }

    pub fn touches(&self, g: SubtaskId) -> bool {
        self.inform_slots_of(g).next().is_some() || self.request_slots_of(g).next().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    Equality,
    LessOrEqual,
    GreaterOrEqual,
}

/// A cross-subtask slot constraint: `left <kind> right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub id: &'static str,
    pub kind: ConstraintKind,
    pub left: SlotName,
    pub right: SlotName,
}

impl Constraint {
    pub fn involves(&self, slot: SlotName) -> bool {
        self.left == slot || self.right == slot
    }

    pub fn involves_subtask(&self, g: SubtaskId) -> bool {
        self.left.subtask() == g || self.right.subtask() == g
    }

    /// Evaluates the predicate on two raw values.
    pub fn holds(&self, left: &str, right: &str) -> Result<bool, DomainError> {
        let l = parse_value(self.left, left)?;
        let r = parse_value(self.right, right)?;
        Ok(match self.kind {
            ConstraintKind::Equality => l == r,
            ConstraintKind::LessOrEqual => l <= r,
            ConstraintKind::GreaterOrEqual => l >= r,
        })
    }
}

const JOINT_CONSTRAINTS: [Constraint; 4] = [
    Constraint {
        id: "C1",
        kind: ConstraintKind::Equality,
        left: SlotName::HotelCity,
        right: SlotName::DstCity,
    },
    Constraint {
        id: "C2",
        kind: ConstraintKind::Equality,
        left: SlotName::HotelNumberOfPeople,
        right: SlotName::NumberOfPeople,
    },
    Constraint {
        id: "C3",
        kind: ConstraintKind::GreaterOrEqual,
        left: SlotName::HotelDateCheckin,
        right: SlotName::DepartDateDep,
    },
    Constraint {
        id: "C4",
        kind: ConstraintKind::LessOrEqual,
        left: SlotName::HotelDateCheckout,
        right: SlotName::ReturnDateDep,
    },
];

pub fn joint_constraints() -> &'static [Constraint] {
    &JOINT_CONSTRAINTS
}

/// Constraints whose both sides are assigned and whose predicate fails.
pub fn check_joint_constraints(
    assignment: &BTreeMap<SlotName, String>,
) -> Result<Vec<Constraint>, DomainError> {
    check_with(|slot| assignment.get(&slot).map(String::as_str))
}

/// Same as [`check_joint_constraints`] over an arbitrary lookup.
pub fn check_with<'a>(
    lookup: impl Fn(SlotName) -> Option<&'a str>,
) -> Result<Vec<Constraint>, DomainError> {
    let mut violated = Vec::new();
    for c in joint_constraints() {
        let (Some(l), Some(r)) = (lookup(c.left), lookup(c.right)) else {
            continue;
        };
        if !c.holds(l, r)? {
            violated.push(*c);
        }
    }
    Ok(violated)
}

/// Checks the goal invariants and that some choice of soft values satisfies
/// every joint constraint among the informed slots.
pub fn validate_goal(goal: &UserGoal) -> Result<(), DomainError> {
    let invalid = |reason: String| Err(DomainError::InvalidGoal(reason));

    for (slot, values) in &goal.inform {
        if values.is_empty() {
            return invalid(format!("inform slot {slot} has no candidate values"));
        }
        if !slot.is_user_informable() {
            return invalid(format!("{slot} cannot be informed by a user"));
        }
        for v in values {
            if parse_value(*slot, v).is_err() {
                return invalid(format!("malformed value `{v}` for {slot}"));
            }
        }
    }
    if let Some(slot) = goal.request.iter().find(|s| goal.inform.contains_key(s)) {
        return invalid(format!("{slot} is both informed and requested"));
    }
    for g in SubtaskId::ALL {
        if !goal.touches(g) {
            return invalid(format!("goal has no slot for subtask {g}"));
        }
    }

    // Only slots taking part in some constraint need enumeration.
    let relevant: Vec<(SlotName, &Vec<String>)> = goal
        .inform
        .iter()
        .filter(|(s, _)| joint_constraints().iter().any(|c| c.involves(**s)))
        .map(|(s, v)| (*s, v))
        .collect();
    let mut choice = vec![0usize; relevant.len()];
    loop {
        let assigned: BTreeMap<SlotName, String> = relevant
            .iter()
            .zip(&choice)
            .map(|((s, vals), &i)| (*s, vals[i].clone()))
            .collect();
        if check_joint_constraints(&assigned)?.is_empty() {
            return Ok(());
        }
        // Odometer increment over the cross product.
        let mut k = 0;
        loop {
            if k == choice.len() {
                return invalid("no choice of soft values satisfies the joint constraints".into());
            }
            choice[k] += 1;
            if choice[k] < relevant[k].1.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}
