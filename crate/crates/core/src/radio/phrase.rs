use super::{
    validate_runway, CallQuality, Cardinal, IntentKind, PilotIntent, PositionReport, RadioCall, RadioError,
};
use crate::geo::{PatternLeg, PatternSide};

const DIGITS: [&str; 10] = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "niner"];

const NUMBERS: [&str; 21] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
    "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
];

const PHONETIC: [&str; 26] = [
    "alfa", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliett", "kilo", "lima",
    "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey",
    "xray", "yankee", "zulu",
];

const RESERVED: [&str; 18] = [
    "traffic", "runway", "miles", "mile", "inbound", "landing", "low", "approach", "departing", "changing", "to",
    "remaining", "upwind", "crosswind", "downwind", "base", "final", "nine",
];

/// Spoken form of a single digit.
pub fn digit_word(d: u8) -> &'static str {
    DIGITS[(d % 10) as usize]
}

fn digit_of(word: &str) -> Option<u8> {
    match word {
        "nine" => Some(9),
        w => DIGITS.iter().position(|d| *d == w).map(|i| i as u8),
    }
}

fn letter_of(word: &str) -> Option<char> {
    let w = match word {
        "alpha" => "alfa",
        "juliet" => "juliett",
        "x-ray" => "xray",
        w => w,
    };
    PHONETIC.iter().position(|p| *p == w).map(|i| (b'A' + i as u8) as char)
}

/// `"26"` → `"two six"`.
pub fn spell_runway(designator: &str) -> String {
    designator
        .bytes()
        .filter(u8::is_ascii_digit)
        .map(|b| digit_word(b - b'0'))
        .collect::<Vec<_>>()
        .join(" ")
}

fn spell_digits(s: &str) -> Vec<&'static str> {
    s.bytes().filter(u8::is_ascii_digit).map(|b| digit_word(b - b'0')).collect()
}

/// Digits from spelled digit words and/or numerals.
fn parse_digits(words: &[&str]) -> Option<String> {
    if words.is_empty() {
        return None;
    }
    let mut out = String::new();
    for w in words {
        if let Some(d) = digit_of(w) {
            out.push((b'0' + d) as char);
        } else if w.bytes().all(|b| b.is_ascii_digit()) {
            out.push_str(w);
        } else {
            return None;
        }
    }
    Some(out)
}

fn parse_runway(words: &[&str]) -> Option<String> {
    let digits = parse_digits(words)?;
    validate_runway(&digits).ok()?;
    Some(digits)
}

fn parse_distance(words: &[&str]) -> Option<u32> {
    if let [w] = words {
        if let Some(n) = NUMBERS.iter().position(|n| n == w) {
            return Some(n as u32);
        }
    }
    let d = parse_digits(words)?;
    if d.len() > 2 {
        return None;
    }
    d.parse().ok()
}

fn parse_leg(words: &[&str]) -> Option<(PatternLeg, Option<PatternSide>)> {
    Some(match words {
        ["upwind"] => (PatternLeg::Upwind, None),
        ["crosswind"] => (PatternLeg::Crosswind, None),
        ["downwind"] => (PatternLeg::Downwind, None),
        ["left", "downwind"] => (PatternLeg::Downwind, Some(PatternSide::Left)),
        ["right", "downwind"] => (PatternLeg::Downwind, Some(PatternSide::Right)),
        ["base"] => (PatternLeg::Base, None),
        ["final"] => (PatternLeg::Final, None),
        _ => return None,
    })
}

fn split_runway<'a>(words: &'a [&'a str]) -> Option<(&'a [&'a str], &'a [&'a str])> {
    let i = words.iter().position(|w| *w == "runway")?;
    Some((&words[..i], &words[i + 1..]))
}

fn parse_position(words: &[&str]) -> Option<PositionReport> {
    if let Some((head, rwy)) = split_runway(words) {
        let (leg, side) = parse_leg(head)?;
        return Some(PositionReport::Leg { leg, side, runway: parse_runway(rwy)? });
    }
    let mi = words.iter().position(|w| *w == "miles" || *w == "mile")?;
    let distance_nm = parse_distance(&words[..mi])?;
    let cardinal = match &words[mi + 1..] {
        [c] => *Cardinal::ALL.iter().find(|k| k.as_str() == *c)?,
        _ => return None,
    };
    Some(PositionReport::Bearing { distance_nm, cardinal, inbound: false })
}

fn parse_intent(words: &[&str]) -> Option<PilotIntent> {
    let with_rwy = |kind, rest: &[&str]| -> Option<PilotIntent> {
        match rest {
            ["runway", r @ ..] => Some(PilotIntent { kind, runway: Some(parse_runway(r)?) }),
            _ => None,
        }
    };
    match words {
        ["landing", rest @ ..] => with_rwy(IntentKind::Landing, rest),
        ["low", "approach", rest @ ..] => with_rwy(IntentKind::LowApproach, rest),
        ["changing", "to", rest @ ..] => with_rwy(IntentKind::ChangeRunway, rest),
        ["departing"] => Some(PilotIntent::new(IntentKind::Takeoff, None)),
        ["departing", rest @ ..] => with_rwy(IntentKind::Takeoff, rest),
        ["remaining", "in", "the", "pattern"] => Some(PilotIntent::new(IntentKind::RemainInPattern, None)),
        ["remaining", "in", "the", "pattern", rest @ ..] => with_rwy(IntentKind::RemainInPattern, rest),
        _ => None,
    }
}

fn parse_callsign(words: &[&str]) -> Option<String> {
    let mut out = String::new();
    for w in words {
        if RESERVED.contains(w) && digit_of(w).is_none() {
            return None;
        }
        if let Some(d) = digit_of(w) {
            out.push((b'0' + d) as char);
        } else if let Some(c) = letter_of(w) {
            out.push(c);
        } else if w.bytes().all(|b| b.is_ascii_alphanumeric()) {
            out.push_str(&w.to_ascii_uppercase());
        } else {
            return None;
        }
    }
    ((2..=10).contains(&out.len())).then_some(out)
}

fn speak_callsign(cs: &str) -> Vec<String> {
    let mut out = Vec::new();
    let bytes = cs.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let digit = bytes[i].is_ascii_digit();
        let mut j = i;
        while j < bytes.len() && bytes[j].is_ascii_digit() == digit {
            j += 1;
        }
        let run = &cs[i..j];
        if digit {
            out.extend(spell_digits(run).into_iter().map(String::from));
        } else {
            let lower = run.to_ascii_lowercase();
            let ambiguous = run.len() == 1
                || letter_of(&lower).is_some()
                || digit_of(&lower).is_some()
                || RESERVED.contains(&lower.as_str())
                || NUMBERS.contains(&lower.as_str());
            if ambiguous {
                out.extend(run.bytes().map(|b| PHONETIC[(b.to_ascii_uppercase() - b'A') as usize].to_string()));
            } else {
                out.push(lower);
            }
        }
        i = j;
    }
    out
}

/// Parses a self-announce broadcast.
///
/// The text must open with `"<airfield> traffic"`. Clauses after the first
/// one that does not parse are dropped and the call is flagged
/// [`CallQuality::LowConfidence`] with intent NONE.
pub fn parse_call(text: &str) -> Result<RadioCall, RadioError> {
    let unparseable = || RadioError::Unparseable { raw: text.to_string() };
    let lower = text.trim().trim_end_matches('.').to_lowercase();
    let clauses: Vec<Vec<&str>> = lower.split(',').map(|c| c.split_whitespace().collect()).collect();
    let first = clauses.first().ok_or_else(unparseable)?;
    let name_words = match first.split_last() {
        Some((&"traffic", name)) if !name.is_empty() => name,
        _ => return Err(unparseable()),
    };
    if !name_words.iter().all(|w| w.bytes().all(|b| b.is_ascii_lowercase())) {
        return Err(unparseable());
    }
    let airfield_name = name_words.join(" ").to_uppercase();

    let rest = &clauses[1..];
    let (body, closed) = match rest.split_last() {
        Some((last, body)) if last.as_slice() == name_words => (body, true),
        _ => (rest, false),
    };

    let mut call = RadioCall {
        airfield_name,
        callsign: String::new(),
        position: None,
        intent: PilotIntent::none(),
        raw_text: text.to_string(),
        quality: CallQuality::Full,
    };
    let mut have_intent = false;
    let mut ok = closed;
    for clause in body {
        let words = clause.as_slice();
        if words == ["inbound"] {
            if let Some(PositionReport::Bearing { inbound: inbound @ false, .. }) = call.position.as_mut() {
                *inbound = true;
                continue;
            }
        } else if call.position.is_none() && !have_intent {
            if let Some(p) = parse_position(words) {
                call.position = Some(p);
                continue;
            }
        }
        if !have_intent {
            if let Some(i) = parse_intent(words) {
                call.intent = i;
                have_intent = true;
                continue;
            }
        }
        if call.callsign.is_empty() && call.position.is_none() && !have_intent {
            if let Some(cs) = parse_callsign(words) {
                call.callsign = cs;
                continue;
            }
        }
        ok = false;
        break;
    }
    if call.callsign.is_empty() {
        ok = false;
    }
    if !ok {
        call.quality = CallQuality::LowConfidence;
        call.intent = PilotIntent::none();
    }
    Ok(call)
}

/// Canonical phraseology for a call. Fails on calls violating the intent or
/// callsign invariants.
pub fn generate_call(call: &RadioCall) -> Result<String, RadioError> {
    call.validate()?;
    let name = call.airfield_name.to_lowercase();
    let mut clauses = vec![format!("{name} traffic"), speak_callsign(&call.callsign).join(" ")];
    match &call.position {
        Some(PositionReport::Leg { leg, side, runway }) => {
            let leg = match (leg, side) {
                (PatternLeg::Downwind, Some(PatternSide::Left)) => "left downwind".to_string(),
                (PatternLeg::Downwind, Some(PatternSide::Right)) => "right downwind".to_string(),
                (l, _) => l.as_str().to_lowercase(),
            };
            clauses.push(format!("{leg} runway {}", spell_runway(runway)));
        }
        Some(PositionReport::Bearing { distance_nm, cardinal, inbound }) => {
            let d = match NUMBERS.get(*distance_nm as usize) {
                Some(w) => w.to_string(),
                None => spell_digits(&distance_nm.to_string()).join(" "),
            };
            clauses.push(format!("{d} miles {}", cardinal.as_str()));
            if *inbound {
                clauses.push("inbound".into());
            }
        }
        None => {}
    }
    let rwy = call.intent.runway.as_deref().map(spell_runway);
    let intent = match (call.intent.kind, rwy) {
        (IntentKind::None, _) => None,
        (IntentKind::Landing, Some(r)) => Some(format!("landing runway {r}")),
        (IntentKind::LowApproach, Some(r)) => Some(format!("low approach runway {r}")),
        (IntentKind::ChangeRunway, Some(r)) => Some(format!("changing to runway {r}")),
        (IntentKind::Takeoff, Some(r)) => Some(format!("departing runway {r}")),
        (IntentKind::Takeoff, None) => Some("departing".into()),
        (IntentKind::RemainInPattern, Some(r)) => Some(format!("remaining in the pattern runway {r}")),
        (IntentKind::RemainInPattern, None) => Some("remaining in the pattern".into()),
        (k, None) => return Err(RadioError::Invalid(format!("{k:?} requires a runway"))),
    };
    clauses.extend(intent);
    clauses.push(name);
    Ok(clauses.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stage_one_call() {
        let c = parse_call("butler traffic, cessna three two one, ten miles north, inbound, landing runway zero eight, butler")
            .unwrap();
        assert_eq!(c.airfield_name, "BUTLER");
        assert_eq!(c.callsign, "CESSNA321");
        assert_eq!(
            c.position,
            Some(PositionReport::Bearing { distance_nm: 10, cardinal: Cardinal::North, inbound: true })
        );
        assert_eq!(c.intent, PilotIntent::landing("08"));
        assert_eq!(c.quality, CallQuality::Full);
    }

    #[test]
    fn low_approach_call() {
        let c = parse_call("Butler traffic, robot one, left downwind runway two six, low approach runway two six, Butler")
            .unwrap();
        assert_eq!(c.callsign, "ROBOT1");
        assert_eq!(
            c.position,
            Some(PositionReport::Leg { leg: PatternLeg::Downwind, side: Some(PatternSide::Left), runway: "26".into() })
        );
        assert_eq!(c.intent, PilotIntent::new(IntentKind::LowApproach, Some("26")));
    }

    #[test]
    fn unparseable_prefix() {
        assert!(matches!(parse_call("hello world"), Err(RadioError::Unparseable { .. })));
        assert!(matches!(parse_call(""), Err(RadioError::Unparseable { .. })));
        assert!(matches!(parse_call("traffic, cessna one"), Err(RadioError::Unparseable { .. })));
    }

    #[test]
    fn numerals_accepted() {
        let c = parse_call("butler traffic, n 1 2 3, 5 miles south, landing runway 26, butler").unwrap();
        assert_eq!(c.callsign, "N123");
        assert_eq!(c.intent, PilotIntent::landing("26"));
        let c = parse_call("butler traffic, cessna three two one, landing runway two niner, butler").unwrap();
        assert_eq!(c.intent, PilotIntent::landing("29"));
    }

    #[test]
    fn canonical_base_call() {
        let c = RadioCall::new(
            "BUTLER",
            "N123",
            Some(PositionReport::Leg { leg: PatternLeg::Base, side: None, runway: "26".into() }),
            PilotIntent::landing("26"),
        );
        assert_eq!(
            generate_call(&c).unwrap(),
            "butler traffic, november one two three, base runway two six, landing runway two six, butler"
        );
    }

    #[test]
    fn change_runway_phrase() {
        let c = RadioCall::new("BUTLER", "CESSNA321", None, PilotIntent::new(IntentKind::ChangeRunway, Some("26")));
        let t = generate_call(&c).unwrap();
        assert!(t.contains("changing to runway two six"), "{t}");
        assert_eq!(parse_call(&t).unwrap().intent, c.intent);
    }

    #[test]
    fn generate_rejects_invalid() {
        let mut c = RadioCall::new("BUTLER", "N123", None, PilotIntent::new(IntentKind::Landing, None));
        assert!(generate_call(&c).is_err());
        c.intent = PilotIntent::none();
        c.callsign = "N".into();
        assert!(generate_call(&c).is_err());
    }

    #[test]
    fn digit_table_is_bijective() {
        for d in 0..10u8 {
            assert_eq!(digit_of(digit_word(d)), Some(d));
        }
        let mut words: Vec<_> = DIGITS.to_vec();
        words.sort();
        words.dedup();
        assert_eq!(words.len(), 10);
        assert_eq!(digit_word(9), "niner");
    }

    #[test]
    fn awkward_callsigns_round_trip() {
        for cs in ["AB", "NINE9", "ALFA1", "TEN", "BASE2", "X1Y2Z3", "CESSNA321", "N123"] {
            let c = RadioCall::new("BUTLER", cs, None, PilotIntent::none());
            let t = generate_call(&c).unwrap();
            assert_eq!(parse_call(&t).unwrap().callsign, cs, "{t}");
        }
    }

    proptest! {
        #[test]
        fn parse_never_panics(s in "\\PC*") {
            let _ = parse_call(&s);
        }

        #[test]
        fn traffic_prefix_fuzz(tail in "[a-z ,]{0,60}") {
            let _ = parse_call(&format!("butler traffic,{tail}"));
        }
    }
}
