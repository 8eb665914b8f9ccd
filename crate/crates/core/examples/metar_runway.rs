//! Decodes METARs and picks the runway with the most headwind.

use ctaf_sim::geo::{preferred_runway, AirfieldModel};
use ctaf_sim::radio::parse_metar;

fn main() {
    let field = AirfieldModel::butler();
    for text in [
        "KBTP 121855Z 26012KT 10SM CLR 22/12 A3002",
        "KBTP 121855Z 07008G15KT 6SM BR SCT010 18/16 A2992",
        "KBTP 121855Z 00000KT 10SM CLR 22/12 A3002",
        "KBTP 121855Z VRB03KT 10SM CLR 22/12 A3002",
        "KBTP 121855Z 35010KT 10SM CLR 22/12 A3002",
    ] {
        let m = parse_metar(text).unwrap();
        let rw = preferred_runway(&field, &m.wind);
        println!("{text}\n  wind {:?} {} kt gust {:?} -> runway {}", m.wind.direction, m.wind.speed_kt, m.wind.gust_kt, rw.designator);
    }
}
