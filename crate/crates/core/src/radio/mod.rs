//! Self-announce radio phraseology and METAR decoding.

mod metar;
mod phrase;

pub use metar::{generate_metar, parse_metar, MetarError, MetarReport, MetarTime, Visibility};
pub use phrase::{digit_word, generate_call, parse_call, spell_runway};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{AirfieldModel, PatternLeg, PatternSide};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioError {
    #[error("unparseable call: {raw:?}")]
    Unparseable { raw: String },
    #[error("invalid call: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IntentKind {
    Landing,
    LowApproach,
    Takeoff,
    RemainInPattern,
    ChangeRunway,
    None,
}

impl IntentKind {
    /// Intents flown as a full-stop landing.
    pub fn is_landing(self) -> bool {
        matches!(self, IntentKind::Landing | IntentKind::ChangeRunway | IntentKind::None)
    }

    pub fn requires_runway(self) -> bool {
        matches!(self, IntentKind::Landing | IntentKind::LowApproach | IntentKind::ChangeRunway)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PilotIntent {
    pub kind: IntentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runway: Option<String>,
}

impl PilotIntent {
    pub fn none() -> Self {
        PilotIntent { kind: IntentKind::None, runway: None }
    }

    pub fn new(kind: IntentKind, runway: Option<&str>) -> Self {
        PilotIntent { kind, runway: runway.map(str::to_string) }
    }

    pub fn landing(runway: &str) -> Self {
        PilotIntent::new(IntentKind::Landing, Some(runway))
    }

    pub fn validate(&self) -> Result<(), RadioError> {
        if self.kind.requires_runway() && self.runway.is_none() {
            return Err(RadioError::Invalid(format!("{:?} requires a runway", self.kind)));
        }
        if self.kind == IntentKind::None && self.runway.is_some() {
            return Err(RadioError::Invalid("intent NONE carries no runway".into()));
        }
        if let Some(r) = &self.runway {
            validate_runway(r)?;
        }
        Ok(())
    }
}

impl fmt::Display for PilotIntent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.runway {
            Some(r) => write!(f, "{:?} {r}", self.kind),
            None => write!(f, "{:?}", self.kind),
        }
    }
}

pub(crate) fn validate_runway(r: &str) -> Result<(), RadioError> {
    let ok = r.len() == 2
        && r.bytes().all(|b| b.is_ascii_digit())
        && (1..=36).contains(&r.parse::<u32>().unwrap_or(0));
    if ok {
        Ok(())
    } else {
        Err(RadioError::Invalid(format!("runway designator {r:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cardinal {
    North,
    Northeast,
    East,
    Southeast,
    South,
    Southwest,
    West,
    Northwest,
}

impl Cardinal {
    pub const ALL: [Cardinal; 8] = [
        Cardinal::North,
        Cardinal::Northeast,
        Cardinal::East,
        Cardinal::Southeast,
        Cardinal::South,
        Cardinal::Southwest,
        Cardinal::West,
        Cardinal::Northwest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Cardinal::North => "north",
            Cardinal::Northeast => "northeast",
            Cardinal::East => "east",
            Cardinal::Southeast => "southeast",
            Cardinal::South => "south",
            Cardinal::Southwest => "southwest",
            Cardinal::West => "west",
            Cardinal::Northwest => "northwest",
        }
    }

    pub fn bearing_deg(self) -> f64 {
        Cardinal::ALL.iter().position(|c| *c == self).unwrap_or(0) as f64 * 45.0
    }

    /// Nearest of the eight compass points to a bearing.
    pub fn from_bearing(deg: f64) -> Cardinal {
        let i = ((deg.rem_euclid(360.0) + 22.5) / 45.0).floor() as usize % 8;
        Cardinal::ALL[i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PositionReport {
    Leg {
        leg: PatternLeg,
        /// Only reported for downwind ("left downwind").
        #[serde(default, skip_serializing_if = "Option::is_none")]
        side: Option<PatternSide>,
        runway: String,
    },
    Bearing {
        distance_nm: u32,
        cardinal: Cardinal,
        #[serde(default)]
        inbound: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CallQuality {
    #[default]
    Full,
    LowConfidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioCall {
    pub airfield_name: String,
    pub callsign: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<PositionReport>,
    pub intent: PilotIntent,
    #[serde(default)]
    pub raw_text: String,
    #[serde(default)]
    pub quality: CallQuality,
}

impl RadioCall {
    pub fn new(airfield_name: &str, callsign: &str, position: Option<PositionReport>, intent: PilotIntent) -> Self {
        RadioCall {
            airfield_name: airfield_name.to_uppercase(),
            callsign: callsign.to_uppercase(),
            position,
            intent,
            raw_text: String::new(),
            quality: CallQuality::Full,
        }
    }

    /// Equality ignoring the raw text.
    pub fn same_content(&self, other: &RadioCall) -> bool {
        self.airfield_name == other.airfield_name
            && self.callsign == other.callsign
            && self.position == other.position
            && self.intent == other.intent
            && self.quality == other.quality
    }

    pub fn validate(&self) -> Result<(), RadioError> {
        self.intent.validate()?;
        let cs = &self.callsign;
        if !(2..=10).contains(&cs.len()) || !cs.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit()) {
            return Err(RadioError::Invalid(format!("callsign {cs:?}")));
        }
        let name = &self.airfield_name;
        if name.is_empty() || !name.split(' ').all(|w| !w.is_empty() && w.bytes().all(|b| b.is_ascii_uppercase())) {
            return Err(RadioError::Invalid(format!("airfield name {name:?}")));
        }
        match &self.position {
            Some(PositionReport::Leg { leg, side, runway }) => {
                validate_runway(runway)?;
                if side.is_some() && *leg != PatternLeg::Downwind {
                    return Err(RadioError::Invalid("only downwind reports a side".into()));
                }
            }
            Some(PositionReport::Bearing { distance_nm, .. }) => {
                if *distance_nm > 99 {
                    return Err(RadioError::Invalid("distance above 99 nm".into()));
                }
            }
            None => {}
        }
        Ok(())
    }
}

/// Intent a listener should assume from a call.
pub fn intent_of_call(call: &RadioCall, airfield: &AirfieldModel) -> PilotIntent {
    let _ = airfield;
    if call.quality == CallQuality::LowConfidence {
        return PilotIntent::none();
    }
    if call.intent.kind != IntentKind::None {
        return call.intent.clone();
    }
    match &call.position {
        Some(PositionReport::Leg { runway, .. }) => PilotIntent::new(IntentKind::RemainInPattern, Some(runway)),
        _ => PilotIntent::none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intent_inference() {
        let af = AirfieldModel::butler();
        let c = parse_call("butler traffic, cessna three two one, ten miles north, inbound, landing runway zero eight, butler")
            .unwrap();
        assert_eq!(intent_of_call(&c, &af), PilotIntent::landing("08"));
        let c = parse_call("butler traffic, robot one, left downwind runway two six, butler").unwrap();
        assert_eq!(intent_of_call(&c, &af), PilotIntent::new(IntentKind::RemainInPattern, Some("26")));
        let c = parse_call("butler traffic, robot one, left downwind runway two six, uh landing, butler").unwrap();
        assert_eq!(c.quality, CallQuality::LowConfidence);
        assert_eq!(intent_of_call(&c, &af), PilotIntent::none());
    }

    #[test]
    fn cardinal_rounding() {
        assert_eq!(Cardinal::from_bearing(350.0), Cardinal::North);
        assert_eq!(Cardinal::from_bearing(50.0), Cardinal::Northeast);
        assert_eq!(Cardinal::from_bearing(-90.0), Cardinal::West);
        assert_eq!(Cardinal::West.bearing_deg(), 270.0);
    }

    #[test]
    fn intent_invariants() {
        assert!(PilotIntent::new(IntentKind::Landing, None).validate().is_err());
        assert!(PilotIntent::new(IntentKind::Takeoff, None).validate().is_ok());
        assert!(PilotIntent::new(IntentKind::Landing, Some("37")).validate().is_err());
    }
}
