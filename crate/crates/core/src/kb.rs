//! Synthetic flight and hotel database with a slot-constraint query engine.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{parse_value, MonthDay, ParsedValue, SlotName, SubtaskId};
use crate::error::KbError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Seat {
    Economy,
    Business,
}

impl Seat {
    pub fn as_str(self) -> &'static str {
        match self {
            Seat::Economy => "Economy",
            Seat::Business => "Business",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlightRecord {
    pub or_city: String,
    pub dst_city: String,
    pub depart_date_dep: MonthDay,
    pub return_date_dep: MonthDay,
    pub depart_time_dep: String,
    pub return_time_dep: String,
    pub seat: Seat,
    pub seats_available: u32,
    pub price: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HotelRecord {
    pub hotel_name: String,
    pub hotel_city: String,
    pub hotel_date_checkin: MonthDay,
    pub hotel_date_checkout: MonthDay,
    pub rooms_available: u32,
    pub capacity_per_room: u32,
    pub hotel_price: u32,
}

impl HotelRecord {
    pub fn capacity(&self) -> u32 {
        self.rooms_available * self.capacity_per_room
    }

    pub fn window_contains(&self, day: MonthDay) -> bool {
        self.hotel_date_checkin <= day && day <= self.hotel_date_checkout
    }

    pub fn covers(&self, flight: &FlightRecord) -> bool {
        self.hotel_city == flight.dst_city
            && self.window_contains(flight.depart_date_dep)
            && self.window_contains(flight.return_date_dep)
    }
}

impl FlightRecord {
    /// Value of an answerable or queryable flight slot.
    pub fn value(&self, slot: SlotName) -> Option<String> {
        use SlotName::*;
        Some(match slot {
            OrCity => self.or_city.clone(),
            DstCity => self.dst_city.clone(),
            DepartDateDep => self.depart_date_dep.to_string(),
            ReturnDateDep => self.return_date_dep.to_string(),
            DepartTimeDep => self.depart_time_dep.clone(),
            ReturnTimeDep => self.return_time_dep.clone(),
            Seat => self.seat.as_str().to_string(),
            Price => self.price.to_string(),
            NumberOfPeople => self.seats_available.to_string(),
            _ => return None,
        })
    }
}

impl HotelRecord {
    pub fn value(&self, slot: SlotName) -> Option<String> {
        use SlotName::*;
        Some(match slot {
            HotelName => self.hotel_name.clone(),
            HotelCity => self.hotel_city.clone(),
            HotelDateCheckin => self.hotel_date_checkin.to_string(),
            HotelDateCheckout => self.hotel_date_checkout.to_string(),
            HotelPrice => self.hotel_price.to_string(),
            HotelNumberOfPeople => self.capacity().to_string(),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordRef<'a> {
    Flight(&'a FlightRecord),
    Hotel(&'a HotelRecord),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kb {
    pub flights: Vec<FlightRecord>,
    pub hotels: Vec<HotelRecord>,
    #[serde(default)]
    pub seed: u64,
}

pub const DEFAULT_CITIES: [&str; 10] = [
    "Campinas", "Cancun", "Toronto", "LA", "Honolulu", "Paris", "Tokyo", "Berlin", "Lima", "Seoul",
];

const TIMES: [&str; 8] = [
    "06:30", "08:15", "10:00", "12:45", "14:20", "16:00", "18:30", "21:10",
];

const HOTEL_WORDS: [&str; 16] = [
    "Tropic", "Grand", "Harbor", "Plaza", "Summit", "Lotus", "Royal", "Garden", "Vista", "Palm",
    "Crown", "Bay", "Maple", "Coral", "Aurora", "Sierra",
];

/// Builds a deterministic synthetic database.
///
/// With probability `coverage` a flight is drawn inside the availability
/// window of an existing hotel in its destination city, so that solvable
/// composite goals exist.
pub fn generate_kb(
    seed: u64,
    n_flights: usize,
    n_hotels: usize,
    city_pool: &[String],
    coverage: f64,
) -> Result<Kb, KbError> {
    if n_flights == 0 || n_hotels == 0 {
        return Err(KbError::InvalidParams("record counts must be positive".into()));
    }
    if city_pool.is_empty() {
        return Err(KbError::InvalidParams("city pool is empty".into()));
    }
    if !(0.0..=1.0).contains(&coverage) {
        return Err(KbError::InvalidParams(format!("coverage {coverage} outside [0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut names = BTreeSet::new();
    let mut hotels = Vec::with_capacity(n_hotels);
    for _ in 0..n_hotels {
        let city = city_pool.choose(&mut rng).unwrap().clone();
        let month = rng.gen_range(6..=10);
        let start = rng.gen_range(1..=14);
        let len = rng.gen_range(7..=14);
        let mut name = format!("Hotel {}", HOTEL_WORDS.choose(&mut rng).unwrap());
        let mut k = 2;
        while names.contains(&name) {
            name = format!("Hotel {} {}", HOTEL_WORDS.choose(&mut rng).unwrap(), k);
            k += 1;
        }
        names.insert(name.clone());
        hotels.push(HotelRecord {
            hotel_name: name,
            hotel_city: city,
            hotel_date_checkin: MonthDay::new(month, start).unwrap(),
            hotel_date_checkout: MonthDay::new(month, start + len).unwrap(),
            rooms_available: if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=4) },
            capacity_per_room: rng.gen_range(1..=4),
            hotel_price: rng.gen_range(80..=1500),
        });
    }

    let mut flights = Vec::with_capacity(n_flights);
    for _ in 0..n_flights {
        let (dst, depart, ret) = if rng.gen_bool(coverage) {
            let h = hotels.choose(&mut rng).unwrap();
            let (month, lo, hi) = (
                h.hotel_date_checkin.month,
                h.hotel_date_checkin.day,
                h.hotel_date_checkout.day,
            );
            let d = rng.gen_range(lo..=hi - 2);
            let r = rng.gen_range(d + 1..=hi);
            (
                h.hotel_city.clone(),
                MonthDay::new(month, d).unwrap(),
                MonthDay::new(month, r).unwrap(),
            )
        } else {
            let month = rng.gen_range(6..=10);
            let d = rng.gen_range(1..=20);
            let r = rng.gen_range(d + 1..=d + 8);
            (
                city_pool.choose(&mut rng).unwrap().clone(),
                MonthDay::new(month, d).unwrap(),
                MonthDay::new(month, r).unwrap(),
            )
        };
        let or_city = loop {
            let c = city_pool.choose(&mut rng).unwrap();
            if *c != dst || city_pool.len() == 1 {
                break c.clone();
            }
        };
        flights.push(FlightRecord {
            or_city,
            dst_city: dst,
            depart_date_dep: depart,
            return_date_dep: ret,
            depart_time_dep: TIMES.choose(&mut rng).unwrap().to_string(),
            return_time_dep: TIMES.choose(&mut rng).unwrap().to_string(),
            seat: if rng.gen_bool(0.5) { Seat::Economy } else { Seat::Business },
            seats_available: if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=6) },
            price: rng.gen_range(150..=2500),
        });
    }

    Ok(Kb {
        flights,
        hotels,
        seed,
    })
}

pub fn default_city_pool() -> Vec<String> {
    DEFAULT_CITIES.iter().map(|c| c.to_string()).collect()
}

#[derive(Debug, Clone)]
enum Pred {
    OrCity(String),
    DstCity(String),
    DepartDate(MonthDay),
    ReturnDate(MonthDay),
    DepartTime(String),
    ReturnTime(String),
    Seats(u32),
    SeatClass(String),
    HotelCity(String),
    Checkin(MonthDay),
    Checkout(MonthDay),
    Guests(u32),
    HotelName(String),
}

impl Pred {
    fn compile(subtask: SubtaskId, slot: SlotName, value: &str) -> Result<Pred, KbError> {
        use SlotName::*;
        if slot.subtask() != subtask || !slot.is_queryable() {
            return Err(KbError::UnknownSlot(slot));
        }
        let parsed = parse_value(slot, value)?;
        let text = || value.trim().to_string();
        let date = || match parsed {
            ParsedValue::Date(d) => d,
            _ => unreachable!("date slots parse to dates"),
        };
        let count = || match parsed {
            ParsedValue::Count(n) => n,
            _ => unreachable!("count slots parse to counts"),
        };
        Ok(match slot {
            OrCity => Pred::OrCity(text()),
            DstCity => Pred::DstCity(text()),
            DepartDateDep => Pred::DepartDate(date()),
            ReturnDateDep => Pred::ReturnDate(date()),
            DepartTimeDep => Pred::DepartTime(text()),
            ReturnTimeDep => Pred::ReturnTime(text()),
            NumberOfPeople => Pred::Seats(count()),
            Seat => Pred::SeatClass(value.trim().to_ascii_lowercase()),
            HotelCity => Pred::HotelCity(text()),
            HotelDateCheckin => Pred::Checkin(date()),
            HotelDateCheckout => Pred::Checkout(date()),
            HotelNumberOfPeople => Pred::Guests(count()),
            HotelName => Pred::HotelName(text()),
            Price | HotelPrice => unreachable!("price slots are rejected above"),
        })
    }

    fn matches_flight(&self, f: &FlightRecord) -> bool {
        match self {
            Pred::OrCity(c) => f.or_city == *c,
            Pred::DstCity(c) => f.dst_city == *c,
            Pred::DepartDate(d) => f.depart_date_dep == *d,
            Pred::ReturnDate(d) => f.return_date_dep == *d,
            Pred::DepartTime(t) => f.depart_time_dep == *t,
            Pred::ReturnTime(t) => f.return_time_dep == *t,
            Pred::Seats(n) => f.seats_available >= *n,
            Pred::SeatClass(s) => f.seat.as_str().eq_ignore_ascii_case(s),
            _ => false,
        }
    }

    fn matches_hotel(&self, h: &HotelRecord) -> bool {
        match self {
            Pred::HotelCity(c) => h.hotel_city == *c,
            Pred::Checkin(d) | Pred::Checkout(d) => h.window_contains(*d),
            Pred::Guests(n) => h.capacity() >= *n,
            Pred::HotelName(n) => h.hotel_name == *n,
            _ => false,
        }
    }
}

impl Kb {
    pub fn len_of(&self, subtask: SubtaskId) -> usize {
        match subtask {
            SubtaskId::BookFlightTicket => self.flights.len(),
            SubtaskId::ReserveHotel => self.hotels.len(),
        }
    }

    pub fn record(&self, subtask: SubtaskId, index: usize) -> Option<RecordRef<'_>> {
        match subtask {
            SubtaskId::BookFlightTicket => self.flights.get(index).map(RecordRef::Flight),
            SubtaskId::ReserveHotel => self.hotels.get(index).map(RecordRef::Hotel),
        }
    }

    /// Indices of all records satisfying every constraint, in insertion order.
    pub fn matching_indices<'v>(
        &self,
        subtask: SubtaskId,
        constraints: impl IntoIterator<Item = (SlotName, &'v str)>,
    ) -> Result<Vec<usize>, KbError> {
        let preds = constraints
            .into_iter()
            .map(|(slot, value)| Pred::compile(subtask, slot, value))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(match subtask {
            SubtaskId::BookFlightTicket => self
                .flights
                .iter()
                .enumerate()
                .filter(|(_, f)| preds.iter().all(|p| p.matches_flight(f)))
                .map(|(i, _)| i)
                .collect(),
            SubtaskId::ReserveHotel => self
                .hotels
                .iter()
                .enumerate()
                .filter(|(_, h)| preds.iter().all(|p| p.matches_hotel(h)))
                .map(|(i, _)| i)
                .collect(),
        })
    }

    pub fn query(
        &self,
        subtask: SubtaskId,
        constraints: &BTreeMap<SlotName, String>,
    ) -> Result<Vec<RecordRef<'_>>, KbError> {
        let idx = self.matching_indices(subtask, constraints.iter().map(|(k, v)| (*k, v.as_str())))?;
        Ok(idx
            .into_iter()
            .map(|i| self.record(subtask, i).expect("index from scan"))
            .collect())
    }

    pub fn count_matches(
        &self,
        subtask: SubtaskId,
        constraints: &BTreeMap<SlotName, String>,
    ) -> Result<usize, KbError> {
        self.count_with(subtask, constraints.iter().map(|(k, v)| (*k, v.as_str())))
    }

    pub fn count_with<'v>(
        &self,
        subtask: SubtaskId,
        constraints: impl IntoIterator<Item = (SlotName, &'v str)>,
    ) -> Result<usize, KbError> {
        let preds = constraints
            .into_iter()
            .map(|(slot, value)| Pred::compile(subtask, slot, value))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(match subtask {
            SubtaskId::BookFlightTicket => self
                .flights
                .iter()
                .filter(|f| preds.iter().all(|p| p.matches_flight(f)))
                .count(),
            SubtaskId::ReserveHotel => self
                .hotels
                .iter()
                .filter(|h| preds.iter().all(|p| p.matches_hotel(h)))
                .count(),
        })
    }

    /// Checks record invariants.
    pub fn validate(&self) -> Result<(), KbError> {
        for (i, f) in self.flights.iter().enumerate() {
            if f.return_date_dep < f.depart_date_dep {
                return Err(KbError::InvalidRecord(format!("flight {i}: return before departure")));
            }
            if f.price == 0 {
                return Err(KbError::InvalidRecord(format!("flight {i}: price must be positive")));
            }
            for (slot, v) in [
                (SlotName::DepartTimeDep, &f.depart_time_dep),
                (SlotName::ReturnTimeDep, &f.return_time_dep),
                (SlotName::OrCity, &f.or_city),
                (SlotName::DstCity, &f.dst_city),
            ] {
                parse_value(slot, v).map_err(|e| KbError::InvalidRecord(format!("flight {i}: {e}")))?;
            }
        }
        for (i, h) in self.hotels.iter().enumerate() {
            if h.hotel_date_checkout < h.hotel_date_checkin {
                return Err(KbError::InvalidRecord(format!("hotel {i}: window ends before it starts")));
            }
            if h.hotel_price == 0 {
                return Err(KbError::InvalidRecord(format!("hotel {i}: price must be positive")));
            }
            if h.hotel_name.trim().is_empty() || h.hotel_city.trim().is_empty() {
                return Err(KbError::InvalidRecord(format!("hotel {i}: empty name or city")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Kb, KbError> {
        let kb: Kb = serde_json::from_str(text).map_err(|e| KbError::InvalidRecord(e.to_string()))?;
        kb.validate()?;
        Ok(kb)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("kb serializes")
    }

    /// Distinct legal values for a slot, used by the noise model.
    pub fn value_pool(&self, slot: SlotName) -> Vec<String> {
        let mut values = BTreeSet::new();
        match slot.kind() {
            crate::domain::SlotKind::Count => {
                values.extend((1..=6).map(|n| n.to_string()));
            }
            _ => {
                let from_flights = self.flights.iter().filter_map(|f| f.value(slot));
                let from_hotels = self.hotels.iter().filter_map(|h| h.value(slot));
                values.extend(from_flights);
                values.extend(from_hotels);
                if matches!(slot, SlotName::HotelCity | SlotName::OrCity | SlotName::DstCity) {
                    values.extend(self.flights.iter().map(|f| f.dst_city.clone()));
                    values.extend(self.hotels.iter().map(|h| h.hotel_city.clone()));
                }
                if slot == SlotName::Seat {
                    values = ["Economy", "Business"].iter().map(|s| s.to_string()).collect();
                }
            }
        }
        values.into_iter().collect()
    }
}

/// Per-episode record of held bookings. The master [`Kb`] is never mutated;
/// availability seen through the shadow is reduced by the holds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BookingShadow {
    holds: [Option<(usize, u32)>; 2],
}

impl BookingShadow {
    pub fn held(&self, subtask: SubtaskId) -> Option<usize> {
        self.holds[subtask.index()].map(|(i, _)| i)
    }

    pub fn release(&mut self, subtask: SubtaskId) {
        self.holds[subtask.index()] = None;
    }

    /// Holds the first record matching `constraints` that still has room for
    /// `people`; any previous hold for the subtask is released first.
    pub fn book<'v>(
        &mut self,
        kb: &Kb,
        subtask: SubtaskId,
        constraints: impl IntoIterator<Item = (SlotName, &'v str)>,
        people: u32,
    ) -> Result<Option<usize>, KbError> {
        self.release(subtask);
        let candidates = kb.matching_indices(subtask, constraints)?;
        let chosen = candidates.into_iter().find(|&i| {
            let available = match kb.record(subtask, i) {
                Some(RecordRef::Flight(f)) => f.seats_available,
                Some(RecordRef::Hotel(h)) => h.capacity(),
                None => 0,
            };
            available >= people.max(1)
        });
        if let Some(i) = chosen {
            self.holds[subtask.index()] = Some((i, people.max(1)));
        }
        Ok(chosen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_flight_kb() -> Kb {
        Kb {
            flights: vec![FlightRecord {
                or_city: "Campinas".into(),
                dst_city: "Cancun".into(),
                depart_date_dep: MonthDay::new(9, 20).unwrap(),
                return_date_dep: MonthDay::new(9, 26).unwrap(),
                depart_time_dep: "10:00".into(),
                return_time_dep: "16:00".into(),
                seat: Seat::Business,
                seats_available: 3,
                price: 1399,
            }],
            hotels: vec![HotelRecord {
                hotel_name: "Hotel Tropic".into(),
                hotel_city: "Cancun".into(),
                hotel_date_checkin: MonthDay::new(9, 18).unwrap(),
                hotel_date_checkout: MonthDay::new(9, 28).unwrap(),
                rooms_available: 2,
                capacity_per_room: 2,
                hotel_price: 1091,
            }],
            seed: 0,
        }
    }

    fn c(pairs: &[(SlotName, &str)]) -> BTreeMap<SlotName, String> {
        pairs.iter().map(|(s, v)| (*s, v.to_string())).collect()
    }

    #[test]
    fn generation_is_deterministic_and_sized() {
        let pool = default_city_pool();
        let a = generate_kb(7, 50, 30, &pool, 0.7).unwrap();
        let b = generate_kb(7, 50, 30, &pool, 0.7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.flights.len(), 50);
        assert_eq!(a.hotels.len(), 30);
        a.validate().unwrap();
    }

    #[test]
    fn full_coverage_gives_every_flight_a_hotel() {
        let kb = generate_kb(11, 80, 20, &default_city_pool(), 1.0).unwrap();
        for f in &kb.flights {
            assert!(kb.hotels.iter().any(|h| h.covers(f)), "{f:?} uncovered");
        }
    }

    #[test]
    fn query_examples() {
        let kb = one_flight_kb();
        let hit = kb
            .query(SubtaskId::BookFlightTicket, &c(&[(SlotName::DstCity, "Cancun")]))
            .unwrap();
        assert_eq!(hit, vec![RecordRef::Flight(&kb.flights[0])]);
        assert_eq!(kb.query(SubtaskId::BookFlightTicket, &BTreeMap::new()).unwrap().len(), 1);
        assert!(kb
            .query(SubtaskId::BookFlightTicket, &c(&[(SlotName::DstCity, "Paris")]))
            .unwrap()
            .is_empty());
        assert_eq!(
            kb.count_matches(SubtaskId::BookFlightTicket, &c(&[(SlotName::DstCity, "Cancun")])),
            Ok(1)
        );
        let empty = Kb {
            flights: vec![],
            hotels: vec![],
            seed: 0,
        };
        assert_eq!(empty.count_matches(SubtaskId::ReserveHotel, &BTreeMap::new()), Ok(0));
        assert_eq!(
            kb.count_matches(SubtaskId::BookFlightTicket, &c(&[(SlotName::HotelCity, "Cancun")])),
            Err(KbError::UnknownSlot(SlotName::HotelCity))
        );
        assert_eq!(
            kb.count_matches(SubtaskId::BookFlightTicket, &c(&[(SlotName::Price, "1399")])),
            Err(KbError::UnknownSlot(SlotName::Price))
        );
    }

    #[test]
    fn people_and_window_semantics() {
        let kb = one_flight_kb();
        let hotel = SubtaskId::ReserveHotel;
        assert_eq!(kb.count_matches(hotel, &c(&[(SlotName::HotelNumberOfPeople, "4")])), Ok(1));
        assert_eq!(kb.count_matches(hotel, &c(&[(SlotName::HotelNumberOfPeople, "5")])), Ok(0));
        assert_eq!(kb.count_matches(hotel, &c(&[(SlotName::HotelDateCheckin, "9/20")])), Ok(1));
        assert_eq!(kb.count_matches(hotel, &c(&[(SlotName::HotelDateCheckout, "09/29")])), Ok(0));
        let flight = SubtaskId::BookFlightTicket;
        assert_eq!(kb.count_matches(flight, &c(&[(SlotName::NumberOfPeople, "3")])), Ok(1));
        assert_eq!(kb.count_matches(flight, &c(&[(SlotName::NumberOfPeople, "4")])), Ok(0));
        assert_eq!(kb.count_matches(flight, &c(&[(SlotName::Seat, "business")])), Ok(1));
    }

    #[test]
    fn loader_rejects_bad_records() {
        let mut kb = one_flight_kb();
        kb.flights[0].return_date_dep = MonthDay::new(9, 1).unwrap();
        let text = serde_json::to_string(&kb).unwrap();
        assert!(matches!(Kb::from_json(&text), Err(KbError::InvalidRecord(_))));
        let good = one_flight_kb();
        assert_eq!(Kb::from_json(&good.to_json()).unwrap(), good);
    }

    #[test]
    fn shadow_holds_do_not_touch_the_master() {
        let kb = one_flight_kb();
        let before = kb.clone();
        let mut shadow = BookingShadow::default();
        let held = shadow
            .book(&kb, SubtaskId::BookFlightTicket, [(SlotName::DstCity, "Cancun")], 3)
            .unwrap();
        assert_eq!(held, Some(0));
        assert_eq!(shadow.held(SubtaskId::BookFlightTicket), Some(0));
        let too_many = shadow
            .book(&kb, SubtaskId::BookFlightTicket, [(SlotName::DstCity, "Cancun")], 4)
            .unwrap();
        assert_eq!(too_many, None);
        assert_eq!(kb, before);
    }
}
