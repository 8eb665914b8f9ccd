use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{WindDirection, WindState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetarError {
    #[error("malformed METAR: missing {0}")]
    Malformed(&'static str),
    #[error("invalid METAR {field}: {value:?}")]
    Invalid { field: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetarTime {
    pub day: u8,
    pub hour: u8,
    pub minute: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    StatuteMiles(f64),
    Cavok,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetarReport {
    pub station: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<MetarTime>,
    pub wind: WindState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility: Option<Visibility>,
    /// Groups after the visibility, verbatim.
    #[serde(default)]
    pub remainder: String,
}

const METERS_PER_SM: f64 = 1609.344;

fn is_station(tok: &str) -> bool {
    tok.len() == 4
        && tok.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit())
        && tok.as_bytes()[0].is_ascii_uppercase()
}

fn parse_time(tok: &str) -> Option<MetarTime> {
    let digits = tok.strip_suffix('Z')?;
    if digits.len() != 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let n = |i: usize| digits[i..i + 2].parse::<u8>().ok();
    let t = MetarTime { day: n(0)?, hour: n(2)?, minute: n(4)? };
    ((1..=31).contains(&t.day) && t.hour < 24 && t.minute < 60).then_some(t)
}

fn parse_wind(tok: &str) -> Option<Result<WindState, MetarError>> {
    let body = tok.strip_suffix("KT")?;
    if body.len() < 5 || !body.is_ascii() {
        return None;
    }
    let (dir, rest) = body.split_at(3);
    let (speed, gust) = match rest.split_once('G') {
        Some((s, g)) => (s, Some(g)),
        None => (rest, None),
    };
    let num = |s: &str| (matches!(s.len(), 2 | 3) && s.bytes().all(|b| b.is_ascii_digit())).then(|| s.parse::<u32>().ok()).flatten();
    let speed = num(speed)?;
    let gust = match gust {
        Some(g) => Some(num(g)?),
        None => None,
    };
    let direction = if dir == "VRB" {
        WindDirection::Variable
    } else {
        if !dir.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let d: u32 = dir.parse().ok()?;
        if d > 360 {
            return Some(Err(MetarError::Invalid { field: "wind direction", value: tok.into() }));
        }
        WindDirection::Degrees((d % 360) as f64)
    };
    if gust.is_some_and(|g| g < speed) {
        return Some(Err(MetarError::Invalid { field: "wind gust", value: tok.into() }));
    }
    Some(Ok(WindState { direction, speed_kt: speed as f64, gust_kt: gust.map(|g| g as f64) }))
}

fn parse_fraction(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((n, d)) => {
            let (n, d): (f64, f64) = (n.parse().ok()?, d.parse().ok()?);
            (d > 0.0).then(|| n / d)
        }
        None => s.parse::<u32>().ok().map(f64::from),
    }
}

/// Visibility from one or two tokens; returns the value and tokens used.
fn parse_visibility(tok: &str, next: Option<&str>) -> Option<(Visibility, usize)> {
    if tok == "CAVOK" {
        return Some((Visibility::Cavok, 1));
    }
    if tok.len() == 4 && tok.bytes().all(|b| b.is_ascii_digit()) {
        let m: f64 = tok.parse().ok()?;
        let sm = if tok == "9999" { 10_000.0 } else { m } / METERS_PER_SM;
        return Some((Visibility::StatuteMiles(sm), 1));
    }
    if let Some(frac) = next.and_then(|n| n.strip_suffix("SM")) {
        if tok.bytes().all(|b| b.is_ascii_digit()) && frac.contains('/') {
            let whole: f64 = tok.parse().ok()?;
            return Some((Visibility::StatuteMiles(whole + parse_fraction(frac)?), 2));
        }
    }
    let v = tok.strip_suffix("SM")?;
    let v = v.trim_start_matches(['M', 'P']);
    Some((Visibility::StatuteMiles(parse_fraction(v)?), 1))
}

/// Decodes station, time, wind and visibility; everything else is kept in
/// `remainder`.
pub fn parse_metar(text: &str) -> Result<MetarReport, MetarError> {
    let mut toks: Vec<&str> = text.split_whitespace().collect();
    if matches!(toks.first(), Some(&"METAR") | Some(&"SPECI")) {
        toks.remove(0);
    }
    let mut i = 0;
    let station = match toks.first() {
        Some(t) if is_station(t) => t.to_string(),
        _ => return Err(MetarError::Malformed("station")),
    };
    i += 1;
    let time = toks.get(i).and_then(|t| parse_time(t));
    if time.is_some() {
        i += 1;
    }
    let mut prefix: Vec<&str> = Vec::new();
    let wind = loop {
        let Some(tok) = toks.get(i) else { return Err(MetarError::Malformed("wind")) };
        i += 1;
        match parse_wind(tok) {
            Some(w) => break w?,
            None if matches!(*tok, "AUTO" | "COR" | "NIL") => prefix.push(tok),
            None => return Err(MetarError::Malformed("wind")),
        }
    };
    let mut rest: Vec<&str> = prefix;
    // Variable wind sector such as 240V300 stays in the remainder.
    let mut visibility = None;
    let mut j = i;
    if toks.get(j).is_some_and(|t| t.len() == 7 && t.as_bytes()[3] == b'V') {
        rest.push(toks[j]);
        j += 1;
    }
    if let Some(tok) = toks.get(j) {
        if let Some((v, used)) = parse_visibility(tok, toks.get(j + 1).copied()) {
            visibility = Some(v);
            j += used;
        }
    }
    rest.extend(&toks[j.min(toks.len())..]);
    Ok(MetarReport { station, time, wind, visibility, remainder: rest.join(" ") })
}

fn format_miles(sm: f64) -> String {
    let q = (sm * 4.0).round() as u32;
    let (whole, frac) = (q / 4, q % 4);
    let frac = ["", "1/4", "1/2", "3/4"][frac as usize];
    match (whole, frac) {
        (w, "") => format!("{w}SM"),
        (0, f) => format!("{f}SM"),
        (w, f) => format!("{w} {f}SM"),
    }
}

/// Canonical METAR text for a report. Visibility is rounded to quarter miles.
pub fn generate_metar(r: &MetarReport) -> String {
    let mut parts = vec![r.station.clone()];
    if let Some(t) = r.time {
        parts.push(format!("{:02}{:02}{:02}Z", t.day, t.hour, t.minute));
    }
    let dir = match r.wind.direction {
        WindDirection::Variable => "VRB".to_string(),
        WindDirection::Degrees(d) => format!("{:03}", d.round() as u32 % 360),
    };
    let gust = r.wind.gust_kt.map(|g| format!("G{:02}", g.round() as u32)).unwrap_or_default();
    parts.push(format!("{dir}{:02}{gust}KT", r.wind.speed_kt.round() as u32));
    match r.visibility {
        Some(Visibility::Cavok) => parts.push("CAVOK".into()),
        Some(Visibility::StatuteMiles(sm)) => parts.push(format_miles(sm)),
        None => {}
    }
    if !r.remainder.is_empty() {
        parts.push(r.remainder.clone());
    }
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn butler_example() {
        let r = parse_metar("KBTP 121855Z 26012KT 10SM CLR 22/12 A3002").unwrap();
        assert_eq!(r.station, "KBTP");
        assert_eq!(r.time, Some(MetarTime { day: 12, hour: 18, minute: 55 }));
        assert_eq!(r.wind, WindState::from_deg(260.0, 12.0));
        assert_eq!(r.visibility, Some(Visibility::StatuteMiles(10.0)));
        assert_eq!(r.remainder, "CLR 22/12 A3002");
    }

    #[test]
    fn gusts_and_variable() {
        let r = parse_metar("KBTP 121855Z 26012G20KT 10SM CLR").unwrap();
        assert_eq!(r.wind.gust_kt, Some(20.0));
        let r = parse_metar("KBTP 121855Z VRB03KT 9999").unwrap();
        assert_eq!(r.wind.direction, WindDirection::Variable);
        assert_eq!(r.wind.speed_kt, 3.0);
        assert!(r.wind.is_calm());
    }

    #[test]
    fn missing_fields() {
        assert_eq!(parse_metar(""), Err(MetarError::Malformed("station")));
        assert_eq!(parse_metar("kbtp 121855Z 26012KT"), Err(MetarError::Malformed("station")));
        assert_eq!(parse_metar("KBTP 121855Z 10SM CLR"), Err(MetarError::Malformed("wind")));
        assert!(matches!(parse_metar("KBTP 121855Z 26020G10KT"), Err(MetarError::Invalid { .. })));
    }

    #[test]
    fn visibility_forms() {
        let v = |s: &str| parse_metar(&format!("KBTP 121855Z 00000KT {s} RMK")).unwrap().visibility;
        assert_eq!(v("1/2SM"), Some(Visibility::StatuteMiles(0.5)));
        assert_eq!(v("1 1/2SM"), Some(Visibility::StatuteMiles(1.5)));
        assert_eq!(v("P6SM"), Some(Visibility::StatuteMiles(6.0)));
        assert_eq!(v("CAVOK"), Some(Visibility::Cavok));
        let r = parse_metar("METAR KBTP 121855Z AUTO 26012KT 240V300 3SM BR").unwrap();
        assert_eq!(r.visibility, Some(Visibility::StatuteMiles(3.0)));
        assert_eq!(r.remainder, "AUTO 240V300 BR");
    }

    proptest! {
        #[test]
        fn round_trip(
            day in 1u8..=28, hour in 0u8..24, minute in 0u8..60,
            dir in proptest::option::of(0u32..36), speed in 0u32..60, gust in proptest::option::of(0u32..30),
            quarters in proptest::option::of(0u32..60), cavok in any::<bool>(),
        ) {
            let wind = WindState {
                direction: dir.map(|d| WindDirection::Degrees(d as f64 * 10.0)).unwrap_or(WindDirection::Variable),
                speed_kt: speed as f64,
                gust_kt: gust.map(|g| (speed + g) as f64),
            };
            let visibility = match (quarters, cavok) {
                (None, true) => Some(Visibility::Cavok),
                (None, false) => None,
                (Some(q), _) => Some(Visibility::StatuteMiles(q as f64 / 4.0)),
            };
            let r = MetarReport {
                station: "KBTP".into(),
                time: Some(MetarTime { day, hour, minute }),
                wind,
                visibility,
                remainder: "CLR A3002".into(),
            };
            let back = parse_metar(&generate_metar(&r)).unwrap();
            prop_assert_eq!(back, r);
        }

        #[test]
        fn never_panics(s in "\\PC*") {
            let _ = parse_metar(&s);
        }
    }
}
