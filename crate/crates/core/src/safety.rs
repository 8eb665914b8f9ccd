//! Projected-distance safety filter over planned primitive sequences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    apply_for, default_primitive_set, AircraftState, MotionPrimitive, Turn, PRIMITIVE_DURATION_S,
};
use crate::geo::{LocalPoint, PatternSide};
use crate::planner::{Plan, PlanStatus};
use crate::predict::AgentBelief;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SafetyError {
    #[error("invalid safety config: {0}")]
    Config(String),
}

/// Substitution costs. A swap pays for every component it changes, and the
/// first `early_steps` positions pay `early_factor` times more.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviationWeights {
    pub turn: f64,
    pub vertical: f64,
    pub speed: f64,
    pub early_factor: f64,
    pub early_steps: usize,
}

impl Default for DeviationWeights {
    fn default() -> Self {
        DeviationWeights { turn: 1.0, vertical: 1.0, speed: 0.5, early_factor: 2.0, early_steps: 2 }
    }
}

impl DeviationWeights {
    pub fn swap_cost(&self, from: &MotionPrimitive, to: &MotionPrimitive, step: usize) -> f64 {
        let mut c = 0.0;
        if from.turn != to.turn {
            c += self.turn;
        }
        if from.vertical != to.vertical {
            c += self.vertical;
        }
        if from.speed_cmd != to.speed_cmd {
            c += self.speed;
        }
        if step < self.early_steps {
            c * self.early_factor
        } else {
            c
        }
    }
}

/// Rejects candidates that turn against the pattern side for `max_run` or
/// more consecutive primitives while within `band_m` of pattern altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskyManeuver {
    pub pattern_side: PatternSide,
    pub pattern_altitude_m: f64,
    #[serde(default = "default_band")]
    pub band_m: f64,
    #[serde(default = "default_run")]
    pub max_run: usize,
}

fn default_band() -> f64 {
    60.0
}

fn default_run() -> usize {
    3
}

impl RiskyManeuver {
    pub fn new(pattern_side: PatternSide, pattern_altitude_m: f64) -> Self {
        RiskyManeuver { pattern_side, pattern_altitude_m, band_m: default_band(), max_run: default_run() }
    }

    fn against(&self, turn: Turn) -> bool {
        matches!(
            (self.pattern_side, turn),
            (PatternSide::Left, Turn::Right) | (PatternSide::Right, Turn::Left)
        )
    }

    /// `start_z[k]` is the altitude at the start of primitive `k`.
    pub fn is_risky(&self, primitives: &[MotionPrimitive], start_z: &[f64]) -> bool {
        let mut run = 0;
        for (p, z) in primitives.iter().zip(start_z) {
            if self.against(p.turn) && (z - self.pattern_altitude_m).abs() <= self.band_m {
                run += 1;
                if run >= self.max_run {
                    return true;
                }
            } else {
                run = 0;
            }
        }
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafetyConfig {
    pub d_safe_m: f64,
    pub h_safe_m: f64,
    pub horizon_s: f64,
    pub stride_s: f64,
    pub deviation_weights: DeviationWeights,
    /// Candidate evaluations allowed per call before settling for the best
    /// one found.
    pub max_candidates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub risky: Option<RiskyManeuver>,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        SafetyConfig {
            d_safe_m: 300.0,
            h_safe_m: 100.0,
            horizon_s: 60.0,
            stride_s: 1.0,
            deviation_weights: DeviationWeights::default(),
            max_candidates: 8000,
            risky: None,
        }
    }
}

impl SafetyConfig {
    pub fn validate(&self) -> Result<(), SafetyError> {
        let bad = |m: &str| Err(SafetyError::Config(m.to_string()));
        if !(self.d_safe_m > 0.0 && self.h_safe_m > 0.0) {
            return bad("separation floors must be positive");
        }
        if !(self.stride_s > 0.0 && self.stride_s <= PRIMITIVE_DURATION_S) {
            return bad("stride must be in (0, primitive duration]");
        }
        let n = self.horizon_s / self.stride_s;
        if !(self.horizon_s > 0.0 && (n - n.round()).abs() < 1e-9) {
            return bad("stride must divide the horizon");
        }
        if self.max_candidates == 0 {
            return bad("max_candidates must be positive");
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.horizon_s / PRIMITIVE_DURATION_S).ceil() as usize
    }
}

/// Constant-velocity samples from `state`, `t = 0` included, clamped to the
/// ground. Times are absolute.
pub fn extrapolate_linear(state: &AircraftState, horizon_s: f64, stride_s: f64) -> Vec<(f64, LocalPoint)> {
    let n = (horizon_s / stride_s).round() as usize;
    (0..=n).map(|k| sample_linear(state, state.time_s + k as f64 * stride_s)).collect()
}

fn sample_linear(state: &AircraftState, t: f64) -> (f64, LocalPoint) {
    let (vx, vy, vz) = state.velocity();
    let dt = t - state.time_s;
    let p = state.position;
    (t, LocalPoint::new(p.x + vx * dt, p.y + vy * dt, (p.z + vz * dt).max(0.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntruderPath {
    pub agent_id: String,
    pub samples: Vec<(f64, LocalPoint)>,
}

impl IntruderPath {
    /// Linear extrapolation of the belief's last observed state, sampled at
    /// the ego's times.
    pub fn from_belief(b: &AgentBelief, times: &[f64]) -> Self {
        IntruderPath {
            agent_id: b.agent_id.clone(),
            samples: times.iter().map(|&t| sample_linear(&b.last_state, t)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// `f64::INFINITY` when no intruder comes within the vertical floor.
    pub min_distance_m: f64,
    pub time_of_min_s: f64,
    pub violating_agent: Option<String>,
    pub safe: bool,
}

/// Minimum horizontal distance to any intruder over the instants where the
/// vertical separation is below `h_safe`. Each segment between samples is
/// refined with the closed-form closest approach of the two linear pieces.
pub fn min_projected_distance(
    ego: &[(f64, LocalPoint)],
    intruders: &[IntruderPath],
    cfg: &SafetyConfig,
) -> SeparationReport {
    let mut best = (f64::INFINITY, ego.first().map(|e| e.0).unwrap_or(0.0), None::<usize>);
    for (j, intr) in intruders.iter().enumerate() {
        let n = ego.len().min(intr.samples.len());
        let mut consider = |d: f64, t: f64, dz: f64| {
            if dz.abs() < cfg.h_safe_m && d < best.0 {
                best = (d, t, Some(j));
            }
        };
        for k in 0..n {
            let (t, e) = ego[k];
            let o = intr.samples[k].1;
            consider(e.horizontal_distance(&o), t, e.z - o.z);
            if k + 1 < n {
                let (t1, e1) = ego[k + 1];
                let o1 = intr.samples[k + 1].1;
                let (rx, ry) = (e.x - o.x, e.y - o.y);
                let (dx, dy) = (e1.x - o1.x - rx, e1.y - o1.y - ry);
                let dd = dx * dx + dy * dy;
                if dd > 0.0 {
                    let s = -(rx * dx + ry * dy) / dd;
                    if s > 0.0 && s < 1.0 {
                        let dz = (e.z - o.z) + s * ((e1.z - o1.z) - (e.z - o.z));
                        consider((rx + s * dx).hypot(ry + s * dy), t + s * (t1 - t), dz);
                    }
                }
            }
        }
    }
    SeparationReport {
        min_distance_m: best.0,
        time_of_min_s: best.1,
        violating_agent: best.2.filter(|_| best.0 < cfg.d_safe_m).map(|j| intruders[j].agent_id.clone()),
        safe: best.0 >= cfg.d_safe_m,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub plan: Plan,
    pub modified: bool,
    pub report: SeparationReport,
    pub candidates_checked: usize,
}

/// One substitution candidate: `(position, primitive id)` pairs, sorted by
/// position.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub cost: f64,
    pub swaps: Vec<(usize, u8)>,
}

/// All one- and two-primitive substitutions of `base`, in search order:
/// cost, then number of swaps, then positions and ids.
pub fn candidates(base: &[u8], set: &[MotionPrimitive], w: &DeviationWeights) -> Vec<Candidate> {
    let singles: Vec<(usize, u8, f64)> = base
        .iter()
        .enumerate()
        .flat_map(|(k, &orig)| {
            set.iter()
                .filter(move |p| p.id != orig)
                .map(move |p| (k, p.id, w.swap_cost(&set[orig as usize], p, k)))
        })
        .collect();
    let mut out: Vec<Candidate> = singles.iter().map(|&(k, id, cost)| Candidate { cost, swaps: vec![(k, id)] }).collect();
    for (i, a) in singles.iter().enumerate() {
        for b in &singles[i + 1..] {
            if b.0 > a.0 {
                out.push(Candidate { cost: a.2 + b.2, swaps: vec![(a.0, a.1), (b.0, b.1)] });
            }
        }
    }
    out.sort_by(|x, y| {
        x.cost
            .total_cmp(&y.cost)
            .then(x.swaps.len().cmp(&y.swaps.len()))
            .then_with(|| x.swaps.cmp(&y.swaps))
    });
    out
}

/// The plan's primitives padded with straight-and-level to cover the horizon.
pub fn padded_primitives(plan: &Plan, cfg: &SafetyConfig) -> Vec<u8> {
    let mut p = plan.primitives.clone();
    while p.len() < cfg.steps() {
        p.push(0);
    }
    p
}

/// Samples at the config stride plus the altitude at each primitive start.
fn fly(start: &AircraftState, prims: &[u8], set: &[MotionPrimitive], plan: &Plan, cfg: &SafetyConfig) -> (Vec<(f64, LocalPoint)>, Vec<f64>) {
    let mut s = *start;
    let mut path = vec![(s.time_s, s.position)];
    let mut start_z = Vec::with_capacity(prims.len());
    let end = start.time_s + cfg.horizon_s;
    for &id in prims {
        start_z.push(s.position.z);
        let prim = &set[id as usize];
        let n = (prim.duration_s / cfg.stride_s).round().max(1.0) as usize;
        for _ in 0..n {
            if s.time_s >= end - 1e-9 {
                break;
            }
            s = apply_for(&s, prim, cfg.stride_s, cfg.stride_s, &plan.limits);
            path.push((s.time_s, s.position));
        }
    }
    (path, start_z)
}

/// Separation of the horizon-padded plan from `from_time_s` on, against
/// linearly extrapolated intruders.
pub fn check_plan(plan: &Plan, intruders: &[AgentBelief], cfg: &SafetyConfig, from_time_s: f64) -> SeparationReport {
    let set = default_primitive_set(&plan.limits);
    let (path, _) = fly(&plan.start, &padded_primitives(plan, cfg), &set, plan, cfg);
    let path: Vec<(f64, LocalPoint)> = path.into_iter().filter(|p| p.0 >= from_time_s - 1e-9).collect();
    let times: Vec<f64> = path.iter().map(|p| p.0).collect();
    let intr: Vec<IntruderPath> = intruders.iter().map(|b| IntruderPath::from_belief(b, &times)).collect();
    min_projected_distance(&path, &intr, cfg)
}

/// Checks `plan` against linearly extrapolated intruders and, when it is
/// unsafe, returns the cheapest substitution that restores separation.
///
/// When no candidate is safe, the one with the largest minimum distance is
/// returned with [`PlanStatus::Degraded`]. The returned plan carries a fresh
/// path; its rule trace is left for the caller to re-evaluate.
pub fn filter_plan(plan: &Plan, intruders: &[AgentBelief], cfg: &SafetyConfig) -> FilterOutcome {
    let set = default_primitive_set(&plan.limits);
    let base = padded_primitives(plan, cfg);
    let (path, _) = fly(&plan.start, &base, &set, plan, cfg);
    let times: Vec<f64> = path.iter().map(|p| p.0).collect();
    let intr: Vec<IntruderPath> = intruders.iter().map(|b| IntruderPath::from_belief(b, &times)).collect();
    let report = min_projected_distance(&path, &intr, cfg);
    if report.safe {
        return FilterOutcome { plan: plan.clone(), modified: false, report, candidates_checked: 0 };
    }

    let mut best = (report.clone(), base.clone());
    let mut checked = 0;
    for c in candidates(&base, &set, &cfg.deviation_weights) {
        if checked >= cfg.max_candidates {
            break;
        }
        checked += 1;
        let mut prims = base.clone();
        for &(k, id) in &c.swaps {
            prims[k] = id;
        }
        let (p, start_z) = fly(&plan.start, &prims, &set, plan, cfg);
        if let Some(r) = &cfg.risky {
            let ps: Vec<MotionPrimitive> = prims.iter().map(|&i| set[i as usize]).collect();
            if r.is_risky(&ps, &start_z) {
                continue;
            }
        }
        let rep = min_projected_distance(&p, &intr, cfg);
        if rep.safe {
            return FilterOutcome { plan: rebuild(plan, prims, PlanStatus::Nominal), modified: true, report: rep, candidates_checked: checked };
        }
        if rep.min_distance_m > best.0.min_distance_m {
            best = (rep, prims);
        }
    }
    let (rep, prims) = best;
    FilterOutcome { plan: rebuild(plan, prims, PlanStatus::Degraded), modified: true, report: rep, candidates_checked: checked }
}

fn rebuild(plan: &Plan, primitives: Vec<u8>, status: PlanStatus) -> Plan {
    let mut out = Plan::unscored(&plan.start, plan.limits, primitives, &plan.goal_runway);
    out.robustness = plan.robustness;
    out.most_likely_branch = plan.most_likely_branch.clone();
    out.status = status;
    out
}
