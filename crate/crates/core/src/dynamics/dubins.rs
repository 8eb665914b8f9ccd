//! Shortest curvature-bounded paths between planar poses.
//!
//! Internally angles are counter-clockwise radians from east, so a left
//! (counter-clockwise) arc increases the internal angle while decreasing
//! the compass heading.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::geo::wrap_deg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading_deg: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, heading_deg: f64) -> Self {
        Pose2 { x, y, heading_deg }
    }

    fn theta(&self) -> f64 {
        mod2pi(PI / 2.0 - self.heading_deg.to_radians())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    Left,
    Straight,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DubinsWord {
    Lsl,
    Rsr,
    Lsr,
    Rsl,
    Rlr,
    Lrl,
}

impl DubinsWord {
    pub const ALL: [DubinsWord; 6] = [
        DubinsWord::Lsl,
        DubinsWord::Rsr,
        DubinsWord::Lsr,
        DubinsWord::Rsl,
        DubinsWord::Rlr,
        DubinsWord::Lrl,
    ];

    pub fn segments(self) -> [SegmentKind; 3] {
        use SegmentKind::*;
        match self {
            DubinsWord::Lsl => [Left, Straight, Left],
            DubinsWord::Rsr => [Right, Straight, Right],
            DubinsWord::Lsr => [Left, Straight, Right],
            DubinsWord::Rsl => [Right, Straight, Left],
            DubinsWord::Rlr => [Right, Left, Right],
            DubinsWord::Lrl => [Left, Right, Left],
        }
    }
}

/// Accepts tiny negative squares produced by rounding on tangent configurations.
fn nonneg(v: f64) -> Option<f64> {
    if v < -1e-10 {
        None
    } else {
        Some(v.max(0.0))
    }
}

fn mod2pi(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DubinsPath {
    pub start: Pose2,
    pub radius: f64,
    pub word: DubinsWord,
    /// Segment lengths normalized by the turn radius.
    pub params: [f64; 3],
}

/// Normalized segment lengths of one word, if that word admits a solution.
///
/// `d` is the start-goal distance over the radius; `a` and `b` are the start
/// and goal angles relative to the start-goal line.
pub fn word_params(word: DubinsWord, d: f64, a: f64, b: f64) -> Option<[f64; 3]> {
    let (sa, sb, ca, cb) = (a.sin(), b.sin(), a.cos(), b.cos());
    let c_ab = (a - b).cos();
    match word {
        DubinsWord::Lsl => {
            let p2 = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sa - sb);
            let p2 = nonneg(p2)?;
            let tmp = (cb - ca).atan2(d + sa - sb);
            Some([mod2pi(tmp - a), p2.sqrt(), mod2pi(b - tmp)])
        }
        DubinsWord::Rsr => {
            let p2 = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sb - sa);
            let p2 = nonneg(p2)?;
            let tmp = (ca - cb).atan2(d - sa + sb);
            Some([mod2pi(a - tmp), p2.sqrt(), mod2pi(tmp - b)])
        }
        DubinsWord::Lsr => {
            let p2 = -2.0 + d * d + 2.0 * c_ab + 2.0 * d * (sa + sb);
            let p2 = nonneg(p2)?;
            let p = p2.sqrt();
            let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
            Some([mod2pi(tmp - a), p, mod2pi(tmp - mod2pi(b))])
        }
        DubinsWord::Rsl => {
            let p2 = -2.0 + d * d + 2.0 * c_ab - 2.0 * d * (sa + sb);
            let p2 = nonneg(p2)?;
            let p = p2.sqrt();
            let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
            Some([mod2pi(a - tmp), p, mod2pi(b - tmp)])
        }
        DubinsWord::Rlr => {
            let tmp = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0;
            if tmp.abs() > 1.0 + 1e-12 {
                return None;
            }
            let phi = (ca - cb).atan2(d - sa + sb);
            let p = mod2pi(TAU - tmp.clamp(-1.0, 1.0).acos());
            let t = mod2pi(a - phi + mod2pi(p / 2.0));
            Some([t, p, mod2pi(a - b - t + mod2pi(p))])
        }
        DubinsWord::Lrl => {
            let tmp = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0;
            if tmp.abs() > 1.0 + 1e-12 {
                return None;
            }
            let phi = (ca - cb).atan2(d + sa - sb);
            let p = mod2pi(TAU - tmp.clamp(-1.0, 1.0).acos());
            let t = mod2pi(-a - phi + p / 2.0);
            Some([t, p, mod2pi(mod2pi(b) - a - t + mod2pi(p))])
        }
    }
}

fn relative(start: &Pose2, goal: &Pose2, radius: f64) -> (f64, f64, f64) {
    let dx = goal.x - start.x;
    let dy = goal.y - start.y;
    let d = dx.hypot(dy) / radius;
    let phi = if d > 0.0 { dy.atan2(dx) } else { 0.0 };
    (d, mod2pi(start.theta() - phi), mod2pi(goal.theta() - phi))
}

/// Shortest Dubins path for one specific word.
pub fn dubins_word_path(start: Pose2, goal: Pose2, radius: f64, word: DubinsWord) -> Option<DubinsPath> {
    let (d, a, b) = relative(&start, &goal, radius);
    word_params(word, d, a, b).map(|params| DubinsPath { start, radius, word, params })
}

/// Shortest of the six Dubins words. `radius` must be positive.
pub fn dubins_path(start: Pose2, goal: Pose2, radius: f64) -> DubinsPath {
    let (d, a, b) = relative(&start, &goal, radius);
    let mut best: Option<DubinsPath> = None;
    for word in DubinsWord::ALL {
        if let Some(params) = word_params(word, d, a, b) {
            let cand = DubinsPath { start, radius, word, params };
            if best.is_none_or(|bp| cand.length() < bp.length() - 1e-12) {
                best = Some(cand);
            }
        }
    }
    best.unwrap_or(DubinsPath { start, radius, word: DubinsWord::Lsl, params: [0.0; 3] })
}

impl DubinsPath {
    pub fn length(&self) -> f64 {
        (self.params[0] + self.params[1] + self.params[2]) * self.radius
    }

    /// `(kind, length_m)` for each of the three segments.
    pub fn segments(&self) -> [(SegmentKind, f64); 3] {
        let kinds = self.word.segments();
        [
            (kinds[0], self.params[0] * self.radius),
            (kinds[1], self.params[1] * self.radius),
            (kinds[2], self.params[2] * self.radius),
        ]
    }

    /// Pose after travelling `s` meters along the path, clamped at the end.
    pub fn sample(&self, s: f64) -> Pose2 {
        let mut s = s.clamp(0.0, self.length());
        let (mut x, mut y, mut th) = (self.start.x, self.start.y, self.start.theta());
        for (kind, len) in self.segments() {
            let l = s.min(len);
            (x, y, th) = advance(x, y, th, kind, l, self.radius);
            s -= l;
            if s <= 0.0 {
                break;
            }
        }
        Pose2::new(x, y, wrap_deg(90.0 - th.to_degrees()))
    }

    pub fn end(&self) -> Pose2 {
        self.sample(self.length())
    }
}

fn advance(x: f64, y: f64, th: f64, kind: SegmentKind, l: f64, r: f64) -> (f64, f64, f64) {
    match kind {
        SegmentKind::Straight => (x + l * th.cos(), y + l * th.sin(), th),
        SegmentKind::Left => {
            let nth = th + l / r;
            (x + r * (nth.sin() - th.sin()), y - r * (nth.cos() - th.cos()), nth)
        }
        SegmentKind::Right => {
            let nth = th - l / r;
            (x - r * (nth.sin() - th.sin()), y + r * (nth.cos() - th.cos()), nth)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::angle_diff_deg;
    use proptest::prelude::*;

    /// Polyline length from fine sampling; chord error stays below 1e-7 relative.
    fn sampled_length(p: &DubinsPath) -> f64 {
        let step = p.radius * 1e-3;
        let n = (p.length() / step).ceil().max(1.0) as usize;
        let mut total = 0.0;
        let mut prev = p.sample(0.0);
        for i in 1..=n {
            let q = p.sample(p.length() * i as f64 / n as f64);
            total += (q.x - prev.x).hypot(q.y - prev.y);
            prev = q;
        }
        total
    }

    #[test]
    fn straight_ahead() {
        let p = dubins_path(Pose2::new(0.0, 0.0, 90.0), Pose2::new(1000.0, 0.0, 90.0), 200.0);
        assert!((p.length() - 1000.0).abs() / 1000.0 < 1e-6);
        assert_eq!(p.segments()[1].0, SegmentKind::Straight);
    }

    #[test]
    fn u_turn_is_half_circle() {
        let p = dubins_path(Pose2::new(0.0, 0.0, 90.0), Pose2::new(0.0, 400.0, 270.0), 200.0);
        let want = PI * 200.0;
        assert!((p.length() - want).abs() / want < 1e-6, "{}", p.length());
    }

    #[test]
    fn quarter_right_arc() {
        let p = dubins_path(Pose2::new(0.0, 0.0, 0.0), Pose2::new(200.0, 200.0, 90.0), 200.0);
        let want = PI * 100.0;
        assert!((p.length() - want).abs() / want < 1e-6, "{}", p.length());
    }

    #[test]
    fn degenerate_is_zero_length() {
        let p = dubins_path(Pose2::new(5.0, 5.0, 33.0), Pose2::new(5.0, 5.0, 33.0), 100.0);
        assert!(p.length() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn endpoints_lengths_and_optimality(
            x0 in -2000.0f64..2000.0, y0 in -2000.0f64..2000.0, h0 in 0.0f64..360.0,
            x1 in -2000.0f64..2000.0, y1 in -2000.0f64..2000.0, h1 in 0.0f64..360.0,
            r in 50.0f64..600.0,
        ) {
            let s = Pose2::new(x0, y0, h0);
            let g = Pose2::new(x1, y1, h1);
            let p = dubins_path(s, g, r);
            let end = p.end();
            prop_assert!((end.x - x1).abs() < 1e-6 * r.max(1.0) * 10.0);
            prop_assert!((end.y - y1).abs() < 1e-6 * r.max(1.0) * 10.0);
            prop_assert!(angle_diff_deg(end.heading_deg, h1).abs() < 1e-6);
            prop_assert!(p.length() + 1e-9 >= (x1 - x0).hypot(y1 - y0));
            let sampled = sampled_length(&p);
            prop_assert!((sampled - p.length()).abs() <= 1e-6 * p.length().max(1e-9));
            for w in DubinsWord::ALL {
                if let Some(q) = dubins_word_path(s, g, r, w) {
                    let e = q.end();
                    // Only words that actually reach the goal compete.
                    if (e.x - x1).abs() < 1e-5 && (e.y - y1).abs() < 1e-5 {
                        prop_assert!(p.length() <= q.length() + 1e-9);
                    }
                }
            }
        }
    }
}
