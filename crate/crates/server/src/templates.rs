//! Template-based rendering of dialogue acts into English.

use std::collections::BTreeMap;

use hdm_core::domain::{DialogueAct, Intent, SlotName, Speaker};

/// How an act's slots are used by its template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Shape {
    /// No slots.
    Bare,
    /// Slot/value pairs, rendered as `{values}`.
    Values,
    /// Slot names only, rendered as `{slots}`.
    Slots,
    /// A request with informs riding along: `{values}` and `{slots}`.
    Mixed,
}

impl Shape {
    pub fn of(act: &DialogueAct) -> Shape {
        let has_values = act.valued_slots().next().is_some();
        let has_requests = act.intent == Intent::Request && act.requested_slots().next().is_some();
        match (act.intent, has_values, has_requests) {
            (_, false, false) => Shape::Bare,
            (Intent::Request, true, true) => Shape::Mixed,
            (Intent::Request, false, true) => Shape::Slots,
            _ => Shape::Values,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TemplateTable {
    templates: BTreeMap<(Speaker, Intent, Shape), &'static str>,
}

pub fn slot_label(slot: SlotName) -> &'static str {
    match slot {
        SlotName::OrCity => "departure city",
        SlotName::DstCity => "destination city",
        SlotName::DepartDateDep => "departure date",
        SlotName::DepartTimeDep => "departure time",
        SlotName::ReturnDateDep => "return date",
        SlotName::ReturnTimeDep => "return time",
        SlotName::NumberOfPeople => "number of travellers",
        SlotName::Seat => "seat class",
        SlotName::Price => "flight price",
        SlotName::HotelCity => "hotel city",
        SlotName::HotelNumberOfPeople => "number of hotel guests",
        SlotName::HotelDateCheckin => "check-in date",
        SlotName::HotelDateCheckout => "check-out date",
        SlotName::HotelName => "hotel name",
        SlotName::HotelPrice => "hotel price",
    }
}

impl Default for TemplateTable {
    fn default() -> Self {
        use Intent::*;
        use Shape::*;
        use Speaker::{Agent, User};
        let mut t = BTreeMap::new();
        let entries: &[(Speaker, Intent, Shape, &str)] = &[
            (Agent, Request, Slots, "What is your {slots}?"),
            (Agent, Request, Mixed, "With {values}, what is your {slots}?"),
            (Agent, Inform, Values, "The {values}."),
            (Agent, NotAvailable, Values, "Sorry, nothing is available with {values}."),
            (Agent, NotAvailable, Bare, "Sorry, nothing is available for that."),
            (Agent, Book, Values, "Done, I have booked it. The {values}."),
            (Agent, Book, Bare, "Done, I have booked it."),
            (Agent, ConfirmQuestion, Values, "Just to confirm: {values}?"),
            (Agent, ConfirmAnswer, Values, "Yes, {values}."),
            (Agent, Deny, Bare, "I'm afraid I can't do that."),
            (Agent, Thanks, Bare, "Thank you!"),
            (Agent, Closing, Bare, "Thank you for planning your trip with us. Goodbye!"),
            (User, Inform, Values, "The {values}."),
            (User, Request, Slots, "What is the {slots}?"),
            (User, Request, Mixed, "My {values}. What is the {slots}?"),
            (User, ConfirmQuestion, Values, "Is the {values}?"),
            (User, ConfirmAnswer, Values, "Yes, the {values}."),
            (User, Book, Bare, "Please book it."),
            (User, Book, Values, "Please book it with {values}."),
            (User, Deny, Bare, "No, that's not what I want."),
            (User, Deny, Values, "No, not {values}."),
            (User, Thanks, Bare, "Thanks!"),
            (User, Closing, Bare, "Bye."),
            (User, NotAvailable, Values, "That doesn't work for me: {values}."),
        ];
        for (speaker, intent, shape, text) in entries {
            t.insert((*speaker, *intent, *shape), *text);
        }
        TemplateTable { templates: t }
    }
}

impl TemplateTable {
    pub fn get(&self, speaker: Speaker, intent: Intent, shape: Shape) -> Option<&'static str> {
        self.templates.get(&(speaker, intent, shape)).copied()
    }

    /// Renders an act; falls back to a generic wording for shapes without a
    /// dedicated template.
    pub fn render(&self, act: &DialogueAct) -> String {
        let shape = Shape::of(act);
        let values = act
            .valued_slots()
            .map(|(s, v)| format!("{} is {}", slot_label(s), v))
            .collect::<Vec<_>>()
            .join(", ");
        let slots = act
            .requested_slots()
            .map(slot_label)
            .collect::<Vec<_>>()
            .join(" and ");
        match self.get(act.speaker, act.intent, shape) {
            Some(t) => t.replace("{values}", &values).replace("{slots}", &slots),
            None if values.is_empty() => format!("({})", act.intent),
            None => format!("({}: {})", act.intent, values),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_and_inform() {
        let t = TemplateTable::default();
        let ask = DialogueAct::request(Speaker::Agent, SlotName::OrCity);
        assert_eq!(t.render(&ask), "What is your departure city?");
        let tell = DialogueAct::inform(Speaker::Agent, SlotName::Price, "420");
        assert_eq!(t.render(&tell), "The flight price is 420.");
    }

    #[test]
    fn shapes() {
        let bare = DialogueAct::new(Speaker::User, Intent::Thanks);
        assert_eq!(Shape::of(&bare), Shape::Bare);
        let mixed = DialogueAct::request(Speaker::User, SlotName::Price).with_slot(SlotName::OrCity, "Boston");
        assert_eq!(Shape::of(&mixed), Shape::Mixed);
        assert_eq!(
            TemplateTable::default().render(&mixed),
            "My departure city is Boston. What is the flight price?"
        );
    }
}
