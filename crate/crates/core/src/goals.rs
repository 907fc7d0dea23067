//! User-goal sampling against a knowledge base.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{validate_goal, MonthDay, SlotName, SubtaskId, UserGoal};
use crate::error::{DomainError, Error, Result};
use crate::kb::Kb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UserType {
    A,
    B,
    C,
}

impl UserType {
    pub const ALL: [UserType; 3] = [UserType::A, UserType::B, UserType::C];

    pub fn preferred_first(self) -> Option<SubtaskId> {
        match self {
            UserType::A => None,
            UserType::B => Some(SubtaskId::BookFlightTicket),
            UserType::C => Some(SubtaskId::ReserveHotel),
        }
    }
}

impl fmt::Display for UserType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UserType::A => "A",
            UserType::B => "B",
            UserType::C => "C",
        })
    }
}

impl FromStr for UserType {
    type Err = DomainError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(UserType::A),
            "B" | "b" => Ok(UserType::B),
            "C" | "c" => Ok(UserType::C),
            other => Err(DomainError::UnknownName(other.to_string())),
        }
    }
}

/// Flight/hotel index pairs from which a jointly consistent goal can be built.
pub fn compatible_pairs(kb: &Kb) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (fi, f) in kb.flights.iter().enumerate() {
        if f.seats_available == 0 {
            continue;
        }
        for (hi, h) in kb.hotels.iter().enumerate() {
            if h.capacity() > 0 && h.covers(f) {
                pairs.push((fi, hi));
            }
        }
    }
    pairs
}

const MAX_ATTEMPTS: usize = 500;
/// Probability that a soft slot's first choice is the unavailable one.
pub const UNAVAILABLE_FIRST_PROB: f64 = 0.75;

fn soft_values(bad: String, good: String, rng: &mut impl Rng) -> Vec<String> {
    if rng.gen_bool(UNAVAILABLE_FIRST_PROB) {
        vec![bad, good]
    } else {
        vec![good, bad]
    }
}

pub fn sample_goal(user_type: UserType, kb: &Kb, seed: u64) -> Result<UserGoal> {
    let pairs = compatible_pairs(kb);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_goal_from(user_type, kb, &pairs, &mut rng)
}

pub fn sample_goal_from(
    user_type: UserType,
    kb: &Kb,
    pairs: &[(usize, usize)],
    rng: &mut impl Rng,
) -> Result<UserGoal> {
    if pairs.is_empty() {
        return Err(Error::config("kb", "no flight has a covering hotel"));
    }
    for _ in 0..MAX_ATTEMPTS {
        let &(fi, hi) = pairs.choose(rng).unwrap();
        if let Some(goal) = build_goal(user_type, kb, fi, hi, rng) {
            debug_assert!(validate_goal(&goal).is_ok());
            return Ok(goal);
        }
    }
    Err(Error::config(
        "kb",
        format!("could not build a type {user_type} goal from this knowledge base"),
    ))
}

fn build_goal(
    user_type: UserType,
    kb: &Kb,
    fi: usize,
    hi: usize,
    rng: &mut impl Rng,
) -> Option<UserGoal> {
    use SlotName::*;
    let f = &kb.flights[fi];
    let h = &kb.hotels[hi];
    let people = rng.gen_range(1..=f.seats_available.min(h.capacity()).min(4));

    let mut inform: BTreeMap<SlotName, Vec<String>> = BTreeMap::new();
    let mut put = |slot: SlotName, v: String| {
        inform.insert(slot, vec![v]);
    };
    put(OrCity, f.or_city.clone());
    put(DstCity, f.dst_city.clone());
    put(DepartDateDep, f.depart_date_dep.to_string());
    put(NumberOfPeople, people.to_string());
    if rng.gen_bool(0.5) {
        put(Seat, f.seat.as_str().to_string());
    }
    if rng.gen_bool(0.3) {
        put(ReturnDateDep, f.return_date_dep.to_string());
    }
    put(HotelCity, h.hotel_city.clone());
    put(HotelNumberOfPeople, people.to_string());
    put(HotelDateCheckin, f.depart_date_dep.to_string());
    if rng.gen_bool(0.3) {
        put(HotelDateCheckout, f.return_date_dep.to_string());
    }

    let mut request = BTreeSet::new();
    for g in SubtaskId::ALL {
        let candidates: Vec<SlotName> = g
            .slots()
            .filter(|s| s.is_agent_answerable() && !inform.contains_key(s))
            .collect();
        let mut chosen: Vec<SlotName> = candidates
            .iter()
            .copied()
            .filter(|s| rng.gen_bool(if *s == g.price_slot() { 0.8 } else { 0.35 }))
            .collect();
        if chosen.is_empty() {
            chosen.push(*candidates.choose(rng)?);
        }
        request.extend(chosen);
    }

    match user_type {
        UserType::A => {}
        UserType::B => soften_flight(kb, &mut inform, rng)?,
        UserType::C => soften_hotel(kb, &mut inform, rng)?,
    }

    let goal = UserGoal {
        inform,
        request,
        preferred_first_subtask: user_type.preferred_first(),
    };
    validate_goal(&goal).ok()?;
    Some(goal)
}

fn query_empty_with(
    kb: &Kb,
    g: SubtaskId,
    inform: &BTreeMap<SlotName, Vec<String>>,
    slot: SlotName,
    value: &str,
) -> bool {
    let constraints = inform
        .iter()
        .filter(|(s, _)| s.subtask() == g && s.is_queryable())
        .map(|(s, v)| (*s, if *s == slot { value } else { v[0].as_str() }));
    kb.count_with(g, constraints).map(|n| n == 0).unwrap_or(false)
}

/// Adds an unavailable alternative to one flight slot.
fn soften_flight(
    kb: &Kb,
    inform: &mut BTreeMap<SlotName, Vec<String>>,
    rng: &mut impl Rng,
) -> Option<()> {
    let mut slots = [SlotName::OrCity, SlotName::Seat];
    slots.shuffle(rng);
    for slot in slots {
        let good = match inform.get(&slot) {
            Some(v) => v[0].clone(),
            None => continue,
        };
        let mut pool: Vec<String> = kb.value_pool(slot).into_iter().filter(|v| *v != good).collect();
        pool.shuffle(rng);
        let bad = pool
            .into_iter()
            .filter(|v| slot != SlotName::OrCity || Some(v) != inform.get(&SlotName::DstCity).map(|d| &d[0]))
            .find(|v| query_empty_with(kb, SubtaskId::BookFlightTicket, inform, slot, v));
        if let Some(bad) = bad {
            inform.insert(slot, soft_values(bad, good, rng));
            return Some(());
        }
    }
    None
}

/// Adds an unavailable check-in date alternative that still respects the joint
/// constraints.
fn soften_hotel(
    kb: &Kb,
    inform: &mut BTreeMap<SlotName, Vec<String>>,
    rng: &mut impl Rng,
) -> Option<()> {
    let good = inform.get(&SlotName::HotelDateCheckin)?[0].clone();
    let depart = MonthDay::parse(&good)?;
    let latest = inform
        .get(&SlotName::HotelDateCheckout)
        .and_then(|v| MonthDay::parse(&v[0]))
        .map(|d| if d.month == depart.month { d.day } else { 28 })
        .unwrap_or(28);
    let mut days: Vec<u8> = (depart.day + 1..=latest.min(28)).collect();
    days.shuffle(rng);
    let bad = days.into_iter().map(|d| MonthDay::new(depart.month, d).unwrap().to_string()).find(|v| {
        query_empty_with(kb, SubtaskId::ReserveHotel, inform, SlotName::HotelDateCheckin, v)
    })?;
    inform.insert(SlotName::HotelDateCheckin, soft_values(bad, good, rng));
    Some(())
}

/// Draws `n` goals with user types in proportion `mix` (A, B, C).
pub fn generate_goal_corpus(n: usize, mix: [f64; 3], kb: &Kb, seed: u64) -> Result<Vec<UserGoal>> {
    if n == 0 {
        return Err(Error::InvalidCount("corpus size must be positive"));
    }
    let total: f64 = mix.iter().sum();
    if mix.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::config("mix", "proportions must be nonnegative and sum to 1"));
    }
    let pairs = compatible_pairs(kb);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut goals = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.gen();
        let user_type = if u < mix[0] {
            UserType::A
        } else if u < mix[0] + mix[1] {
            UserType::B
        } else {
            UserType::C
        };
        let user_type = match user_type {
            UserType::C if mix[2] == 0.0 => UserType::B,
            t => t,
        };
        goals.push(sample_goal_from(user_type, kb, &pairs, &mut rng)?);
    }
    Ok(goals)
}

pub fn goals_to_json(goals: &[UserGoal]) -> String {
    serde_json::to_string_pretty(goals).expect("goals serialize")
}

pub fn goals_from_json(text: &str) -> Result<Vec<UserGoal>> {
    let goals: Vec<UserGoal> = serde_json::from_str(text)?;
    for g in &goals {
        validate_goal(g)?;
    }
    Ok(goals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{default_city_pool, generate_kb};

    fn kb() -> Kb {
        generate_kb(5, 120, 60, &default_city_pool(), 0.7).unwrap()
    }

    #[test]
    fn type_shapes() {
        let kb = kb();
        for seed in 0..30 {
            let a = sample_goal(UserType::A, &kb, seed).unwrap();
            assert!(a.inform.values().all(|v| v.len() == 1));
            assert_eq!(a.preferred_first_subtask, None);
            let b = sample_goal(UserType::B, &kb, seed).unwrap();
            assert_eq!(b.preferred_first_subtask, Some(SubtaskId::BookFlightTicket));
            assert!(b.soft_slots().any(|s| s.subtask() == SubtaskId::BookFlightTicket));
            let c = sample_goal(UserType::C, &kb, seed).unwrap();
            assert!(c.soft_slots().any(|s| s.subtask() == SubtaskId::ReserveHotel));
            for g in [&a, &b, &c] {
                validate_goal(g).unwrap();
            }
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let kb = kb();
        assert_eq!(
            sample_goal(UserType::B, &kb, 9).unwrap(),
            sample_goal(UserType::B, &kb, 9).unwrap()
        );
    }

    #[test]
    fn corpus_mix() {
        let kb = kb();
        let goals = generate_goal_corpus(10, [0.0, 1.0, 0.0], &kb, 1).unwrap();
        assert_eq!(goals.len(), 10);
        assert!(goals
            .iter()
            .all(|g| g.preferred_first_subtask == Some(SubtaskId::BookFlightTicket)));
        assert!(generate_goal_corpus(0, [1.0, 0.0, 0.0], &kb, 1).is_err());
        let text = goals_to_json(&goals);
        assert_eq!(goals_from_json(&text).unwrap(), goals);
    }
}
