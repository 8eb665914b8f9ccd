//! Canonical CTAF phraseology in both directions.

use ctaf_sim::geo::{PatternLeg, PatternSide};
use ctaf_sim::radio::{generate_call, parse_call, Cardinal, IntentKind, PilotIntent, PositionReport, RadioCall};

fn main() {
    let calls = [
        RadioCall::new(
            "BUTLER",
            "N321",
            Some(PositionReport::Bearing { distance_nm: 5, cardinal: Cardinal::North, inbound: true }),
            PilotIntent::landing("08"),
        ),
        RadioCall::new(
            "BUTLER",
            "ROBOT1",
            Some(PositionReport::Leg { leg: PatternLeg::Downwind, side: Some(PatternSide::Left), runway: "26".into() }),
            PilotIntent::new(IntentKind::LowApproach, Some("26")),
        ),
        RadioCall::new("BUTLER", "N321", None, PilotIntent::new(IntentKind::ChangeRunway, Some("26"))),
    ];
    for c in &calls {
        let text = generate_call(c).unwrap();
        let back = parse_call(&text).unwrap();
        println!("{text}\n  -> {} {}, same content: {}", back.callsign, back.intent, back.same_content(c));
    }

    for text in ["Butler traffic, cessna 1 2 3, 10 miles south, landing runway 26, butler", "hello world"] {
        match parse_call(text) {
            Ok(c) => println!("{text:?}\n  -> {} {} ({:?})", c.callsign, c.intent, c.quality),
            Err(e) => println!("{text:?}\n  -> {e}"),
        }
    }
}
