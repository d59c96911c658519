//! Event-driven evolution of a piecewise-constant solution on `(0, M)`:
//! pairwise interactions, rarefaction fans, boundary absorption, probe
//! crossings and generation bookkeeping.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riemann::{front_speed, lax_state, solve_riemann, Family, LagState};

pub type FrontId = u64;

/// Collisions closer in time than this count as simultaneous.
pub const SIMULTANEITY_TOL: f64 = 1e-12;
/// Default speed perturbation, as a multiple of `eta`.
pub const DEFAULT_JITTER: f64 = 1e-9;

const MAX_PERTURBATIONS: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrontKind {
    Shock,
    Rarefaction,
}

impl FrontKind {
    pub fn of(eps: f64) -> Self {
        if eps < 0.0 {
            FrontKind::Shock
        } else {
            FrontKind::Rarefaction
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrontStatus {
    Active,
    StandbyLeft,
    StandbyRight,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Front {
    pub id: FrontId,
    pub y: f64,
    pub family: Family,
    pub eps: f64,
    pub kind: FrontKind,
    pub speed: f64,
    pub gen: u32,
    pub status: FrontStatus,
    pub exit_time: Option<f64>,
}

/// An active front together with the states on either side of it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontView {
    pub id: FrontId,
    pub y: f64,
    pub family: Family,
    pub eps: f64,
    pub speed: f64,
    pub gen: u32,
    pub left: LagState,
    pub right: LagState,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveRecord {
    pub id: FrontId,
    pub family: Family,
    pub eps: f64,
    pub gen: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EventKind {
    Interaction { left: FrontId, right: FrontId, y: f64 },
    BoundaryExit { front: FrontId, side: Side },
    ProbeCrossing { probe: usize, front: FrontId },
    TimeStep(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EventDetail {
    /// Fronts of different families pass through each other unchanged.
    Crossing {
        incoming: [WaveRecord; 2],
        outgoing: [WaveRecord; 2],
    },
    /// Fronts of one family merge into a surviving wave plus a reflected one.
    SameFamily {
        family: Family,
        incoming: [WaveRecord; 2],
        surviving: Option<WaveRecord>,
        reflected: Option<WaveRecord>,
        left: LagState,
        right: LagState,
    },
    Exit {
        side: Side,
        wave: WaveRecord,
    },
    ProbeCrossing {
        probe: usize,
        wave: WaveRecord,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessedEvent {
    pub time: f64,
    pub y: f64,
    pub detail: EventDetail,
    /// Cell states created by the event.
    pub new_states: Vec<LagState>,
}

/// One constant piece of the initial data in mass coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagCell {
    pub mass: f64,
    pub state: LagState,
}

/// A front to be placed by a full rebuild of the pattern.
#[derive(Clone, Copy, Debug)]
pub(crate) struct NewFront {
    pub id: Option<FrontId>,
    pub family: Family,
    pub eps: f64,
    pub gen: u32,
    pub y: f64,
    pub right: LagState,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DroppedLedger {
    pub count: u64,
    pub strength: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackerStats {
    pub interactions: u64,
    pub crossings: u64,
    pub exits_left: u64,
    pub exits_right: u64,
    pub probe_crossings: u64,
    pub perturbations: u64,
    pub max_active: usize,
}

impl TrackerStats {
    pub fn events(&self) -> u64 {
        self.interactions + self.crossings + self.exits_left + self.exits_right
    }
}

#[derive(Clone, Debug)]
struct Node {
    id: FrontId,
    family: Family,
    eps: f64,
    gen: u32,
    speed: f64,
    y0: f64,
    t0: f64,
    right: LagState,
    prev: Option<usize>,
    next: Option<usize>,
    version: u64,
    alive: bool,
    perturbations: u8,
}

#[derive(Clone, Copy, Debug)]
enum Target {
    Pair { left: usize, right: usize, lv: u64, rv: u64 },
    Exit { node: usize, version: u64, side: Side },
    Probe { probe: usize, pversion: u64, node: usize, version: u64 },
}

#[derive(Clone, Copy, Debug)]
struct Scheduled {
    time: f64,
    rank: u8,
    seq: u64,
    target: Target,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed so that the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.rank.cmp(&self.rank)).then(other.seq.cmp(&self.seq))
    }
}

#[derive(Clone, Debug)]
struct Probe {
    y: f64,
    /// Last front strictly left of the probe.
    left: Option<usize>,
    version: u64,
}

#[derive(Clone, Debug)]
pub struct WavePattern {
    t: f64,
    alpha: f64,
    mass: f64,
    eta: f64,
    left_state: LagState,
    nodes: Vec<Node>,
    free: Vec<usize>,
    head: Option<usize>,
    tail: Option<usize>,
    len: usize,
    standby_left: Vec<Front>,
    standby_right: Vec<Front>,
    dropped: DroppedLedger,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    versions: u64,
    next_id: FrontId,
    probes: Vec<Probe>,
    jitter: f64,
    event_cap: u64,
    time_step: Option<f64>,
    steps_done: u64,
    stats: TrackerStats,
}

/// Splits a rarefaction of strength `eps` into `floor(eps/eta) + 1` equal pieces.
pub fn split_rarefaction(eps: f64, eta: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::NonPositiveInput(eps));
    }
    if !(eta > 0.0) {
        return Err(Error::NonPositiveInput(eta));
    }
    let n = (eps / eta).floor() as usize + 1;
    Ok(vec![eps / n as f64; n])
}

/// Appends the fronts of one elementary wave starting from `from`; returns
/// the state reached. Rarefactions are split into fans.
#[allow(clippy::too_many_arguments)]
fn push_wave(
    out: &mut Vec<NewFront>,
    family: Family,
    eps: f64,
    y: f64,
    from: LagState,
    to: LagState,
    alpha: f64,
    eta: f64,
) -> Result<()> {
    if eps == 0.0 {
        return Ok(());
    }
    let pieces = if eps > 0.0 { split_rarefaction(eps, eta)? } else { vec![eps] };
    let mut state = from;
    let last = pieces.len() - 1;
    for (k, piece) in pieces.into_iter().enumerate() {
        state = if k == last { to } else { lax_state(family, state, piece, alpha) };
        out.push(NewFront { id: None, family, eps: piece, gen: 1, y, right: state });
    }
    Ok(())
}

pub fn init_pattern(cells: &[LagCell], alpha: f64, eta: f64) -> Result<WavePattern> {
    if cells.is_empty() {
        return Err(Error::EmptyDomain(0.0));
    }
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveInput(alpha));
    }
    if !(eta > 0.0) {
        return Err(Error::NonPositiveInput(eta));
    }
    for c in cells {
        c.state.check()?;
        if !(c.mass > 0.0) {
            return Err(Error::EmptyDomain(c.mass));
        }
    }
    let mass: f64 = cells.iter().map(|c| c.mass).sum();
    let mut fronts = Vec::new();
    let mut y = 0.0;
    for pair in cells.windows(2) {
        y += pair[0].mass;
        let (l, r) = (pair[0].state, pair[1].state);
        let w = solve_riemann(l, r, alpha)?;
        push_wave(&mut fronts, Family::One, w.eps1, y, l, w.middle, alpha, eta)?;
        push_wave(&mut fronts, Family::Two, w.eps2, y, w.middle, r, alpha, eta)?;
    }
    let mut pattern = WavePattern::empty(alpha, mass, eta, cells[0].state);
    pattern.rebuild(cells[0].state, fronts)?;
    Ok(pattern)
}

impl WavePattern {
    fn empty(alpha: f64, mass: f64, eta: f64, left_state: LagState) -> Self {
        Self {
            t: 0.0,
            alpha,
            mass,
            eta,
            left_state,
            nodes: Vec::new(),
            free: Vec::new(),
            head: None,
            tail: None,
            len: 0,
            standby_left: Vec::new(),
            standby_right: Vec::new(),
            dropped: DroppedLedger::default(),
            queue: BinaryHeap::new(),
            seq: 0,
            versions: 0,
            next_id: 0,
            probes: Vec::new(),
            jitter: DEFAULT_JITTER,
            event_cap: u64::MAX,
            time_step: None,
            steps_done: 0,
            stats: TrackerStats::default(),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stats(&self) -> TrackerStats {
        self.stats
    }

    pub fn standby_left(&self) -> &[Front] {
        &self.standby_left
    }

    pub fn standby_right(&self) -> &[Front] {
        &self.standby_right
    }

    pub fn dropped(&self) -> DroppedLedger {
        self.dropped
    }

    pub(crate) fn record_dropped(&mut self, strength: f64) {
        self.dropped.count += 1;
        self.dropped.strength += strength;
    }

    pub fn set_jitter(&mut self, jitter: f64) {
        self.jitter = jitter;
    }

    pub fn set_event_cap(&mut self, cap: u64) {
        self.event_cap = cap;
    }

    /// Declares the time-step spacing so that `next_event` reports time steps.
    pub fn set_time_step(&mut self, dt: f64) {
        self.time_step = Some(dt);
    }

    pub fn steps_done(&self) -> u64 {
        self.steps_done
    }

    pub(crate) fn mark_step_done(&mut self) {
        self.steps_done += 1;
    }

    pub fn add_probe(&mut self, y: f64) -> usize {
        self.probes.push(Probe { y, left: None, version: 0 });
        let p = self.probes.len() - 1;
        self.locate_probe(p);
        self.schedule_probe(p);
        p
    }

    pub fn probe_positions(&self) -> Vec<f64> {
        self.probes.iter().map(|p| p.y).collect()
    }

    pub fn left_boundary_state(&self) -> LagState {
        self.left_state
    }

    pub fn right_boundary_state(&self) -> LagState {
        self.tail.map_or(self.left_state, |n| self.nodes[n].right)
    }

    fn iter_nodes(&self) -> NodeIter<'_> {
        NodeIter { pattern: self, cur: self.head }
    }

    fn pos(&self, n: usize, t: f64) -> f64 {
        let node = &self.nodes[n];
        node.y0 + node.speed * (t - node.t0)
    }

    fn left_of(&self, n: usize) -> LagState {
        self.nodes[n].prev.map_or(self.left_state, |p| self.nodes[p].right)
    }

    fn record(&self, n: usize) -> WaveRecord {
        let node = &self.nodes[n];
        WaveRecord { id: node.id, family: node.family, eps: node.eps, gen: node.gen }
    }

    pub fn fronts(&self) -> Vec<Front> {
        self.iter_nodes()
            .map(|n| {
                let node = &self.nodes[n];
                Front {
                    id: node.id,
                    y: self.pos(n, self.t).clamp(0.0, self.mass),
                    family: node.family,
                    eps: node.eps,
                    kind: FrontKind::of(node.eps),
                    speed: node.speed,
                    gen: node.gen,
                    status: FrontStatus::Active,
                    exit_time: None,
                }
            })
            .collect()
    }

    pub fn front_views(&self) -> Vec<FrontView> {
        let mut left = self.left_state;
        self.iter_nodes()
            .map(|n| {
                let node = &self.nodes[n];
                let view = FrontView {
                    id: node.id,
                    y: self.pos(n, self.t).clamp(0.0, self.mass),
                    family: node.family,
                    eps: node.eps,
                    speed: node.speed,
                    gen: node.gen,
                    left,
                    right: node.right,
                };
                left = node.right;
                view
            })
            .collect()
    }

    /// Cell states from left to right; one more than the number of fronts.
    pub fn states(&self) -> Vec<LagState> {
        std::iter::once(self.left_state).chain(self.iter_nodes().map(|n| self.nodes[n].right)).collect()
    }

    /// Cell boundaries in mass coordinates: `0`, the front positions, `M`.
    pub fn cell_bounds(&self) -> Vec<f64> {
        let mut ys = Vec::with_capacity(self.len + 2);
        ys.push(0.0);
        ys.extend(self.iter_nodes().map(|n| self.pos(n, self.t).clamp(0.0, self.mass)));
        ys.push(self.mass);
        ys
    }

    /// Checks states against strengths and the ordering of positions.
    pub fn check_consistency(&self, tol: f64) -> Result<()> {
        let mut prev_y = 0.0;
        for v in self.front_views() {
            let expect = lax_state(v.family, v.left, v.eps, self.alpha);
            let du = (expect.u - v.right.u).abs() / v.right.u;
            let dv = (expect.v - v.right.v).abs() / (1.0 + v.right.v.abs());
            if du > tol || dv > tol {
                return Err(Error::InconsistentPattern(format!(
                    "front {} states disagree with strength (du = {du:e}, dv = {dv:e})",
                    v.id
                )));
            }
            if v.y + 1e-12 < prev_y {
                return Err(Error::InconsistentPattern(format!("front {} out of order", v.id)));
            }
            if v.eps == 0.0 {
                return Err(Error::InconsistentPattern(format!("front {} has zero strength", v.id)));
            }
            prev_y = v.y;
        }
        Ok(())
    }

    fn alloc(&mut self, node: Node) -> usize {
        if let Some(i) = self.free.pop() {
            self.nodes[i] = node;
            i
        } else {
            self.nodes.push(node);
            self.nodes.len() - 1
        }
    }

    fn release(&mut self, n: usize) {
        self.nodes[n].alive = false;
        self.free.push(n);
    }

    fn bump(&mut self) -> u64 {
        self.versions += 1;
        self.versions
    }

    fn fresh_id(&mut self) -> FrontId {
        self.next_id += 1;
        self.next_id
    }

    #[allow(clippy::too_many_arguments)]
    fn make_node(
        &mut self,
        id: Option<FrontId>,
        family: Family,
        eps: f64,
        gen: u32,
        y: f64,
        left: LagState,
        right: LagState,
    ) -> Result<Node> {
        let id = match id {
            Some(id) => id,
            None => self.fresh_id(),
        };
        Ok(Node {
            id,
            family,
            eps,
            gen,
            speed: front_speed(family, eps, left, right, self.alpha)?,
            y0: y,
            t0: self.t,
            right,
            prev: None,
            next: None,
            version: self.bump(),
            alive: true,
            perturbations: 0,
        })
    }

    /// Replaces every active front. Used at initialization and time steps.
    pub(crate) fn rebuild(&mut self, left_state: LagState, fronts: Vec<NewFront>) -> Result<()> {
        self.nodes.clear();
        self.free.clear();
        self.queue.clear();
        self.head = None;
        self.tail = None;
        self.len = 0;
        self.left_state = left_state;
        let mut left = left_state;
        let mut prev: Option<usize> = None;
        for f in fronts {
            let mut node = self.make_node(f.id, f.family, f.eps, f.gen, f.y, left, f.right)?;
            node.prev = prev;
            left = f.right;
            let idx = self.alloc(node);
            match prev {
                Some(p) => self.nodes[p].next = Some(idx),
                None => self.head = Some(idx),
            }
            prev = Some(idx);
            self.len += 1;
        }
        self.tail = prev;
        self.stats.max_active = self.stats.max_active.max(self.len);
        let mut cur = self.head;
        while let Some(n) = cur {
            if let Some(m) = self.nodes[n].next {
                self.schedule_pair(n, m);
            }
            cur = self.nodes[n].next;
        }
        self.schedule_exits();
        for p in 0..self.probes.len() {
            self.locate_probe(p);
            self.schedule_probe(p);
        }
        Ok(())
    }

    /// Applies `f` to every cell state, left to right, then rebuilds speeds and the schedule.
    pub(crate) fn map_states(&mut self, mut f: impl FnMut(usize, LagState) -> LagState) -> Result<()> {
        let views = self.front_views();
        let left = f(0, self.left_state);
        let fronts = views
            .iter()
            .enumerate()
            .map(|(i, v)| NewFront {
                id: Some(v.id),
                family: v.family,
                eps: v.eps,
                gen: v.gen,
                y: v.y,
                right: f(i + 1, v.right),
            })
            .collect();
        self.rebuild(left, fronts)
    }

    fn push(&mut self, time: f64, rank: u8, target: Target) {
        self.seq += 1;
        self.queue.push(Scheduled { time, rank, seq: self.seq, target });
    }

    fn collision_time(&self, l: usize, r: usize) -> Option<f64> {
        let (sl, sr) = (self.nodes[l].speed, self.nodes[r].speed);
        if sl <= sr {
            return None;
        }
        let gap = (self.pos(r, self.t) - self.pos(l, self.t)).max(0.0);
        Some(self.t + gap / (sl - sr))
    }

    fn schedule_pair(&mut self, l: usize, r: usize) {
        if let Some(time) = self.collision_time(l, r) {
            let (lv, rv) = (self.nodes[l].version, self.nodes[r].version);
            self.push(time, 2, Target::Pair { left: l, right: r, lv, rv });
        }
    }

    fn schedule_exits(&mut self) {
        if let Some(h) = self.head {
            let s = self.nodes[h].speed;
            if s < 0.0 {
                let time = self.t + self.pos(h, self.t).max(0.0) / -s;
                let version = self.nodes[h].version;
                self.push(time, 0, Target::Exit { node: h, version, side: Side::Left });
            }
        }
        if let Some(tl) = self.tail {
            let s = self.nodes[tl].speed;
            if s > 0.0 {
                let time = self.t + (self.mass - self.pos(tl, self.t)).max(0.0) / s;
                let version = self.nodes[tl].version;
                self.push(time, 0, Target::Exit { node: tl, version, side: Side::Right });
            }
        }
    }

    fn probe_right(&self, p: usize) -> Option<usize> {
        match self.probes[p].left {
            Some(l) => self.nodes[l].next,
            None => self.head,
        }
    }

    fn locate_probe(&mut self, p: usize) {
        let y = self.probes[p].y;
        let mut left = None;
        let mut cur = self.head;
        while let Some(n) = cur {
            if self.pos(n, self.t) < y {
                left = Some(n);
                cur = self.nodes[n].next;
            } else {
                break;
            }
        }
        self.set_probe_left(p, left);
    }

    fn set_probe_left(&mut self, p: usize, left: Option<usize>) {
        let v = self.bump();
        self.probes[p].left = left;
        self.probes[p].version = v;
    }

    fn schedule_probe(&mut self, p: usize) {
        let y = self.probes[p].y;
        let pversion = self.probes[p].version;
        if let Some(l) = self.probes[p].left {
            let s = self.nodes[l].speed;
            if s > 0.0 {
                let time = self.t + (y - self.pos(l, self.t)).max(0.0) / s;
                let version = self.nodes[l].version;
                self.push(time, 1, Target::Probe { probe: p, pversion, node: l, version });
            }
        }
        if let Some(r) = self.probe_right(p) {
            let s = self.nodes[r].speed;
            if s < 0.0 {
                let time = self.t + (self.pos(r, self.t) - y).max(0.0) / -s;
                let version = self.nodes[r].version;
                self.push(time, 1, Target::Probe { probe: p, pversion, node: r, version });
            }
        }
    }

    fn valid(&self, s: &Scheduled) -> bool {
        let live = |n: usize, v: u64| self.nodes[n].alive && self.nodes[n].version == v;
        match s.target {
            Target::Pair { left, right, lv, rv } => {
                live(left, lv) && live(right, rv) && self.nodes[left].next == Some(right)
            }
            Target::Exit { node, version, side } => {
                live(node, version)
                    && match side {
                        Side::Left => self.head == Some(node),
                        Side::Right => self.tail == Some(node),
                    }
            }
            Target::Probe { probe, pversion, node, version } => {
                live(node, version) && self.probes[probe].version == pversion
            }
        }
    }

    /// Earliest valid scheduled front event, after breaking detected
    /// simultaneous collisions of three or more fronts.
    fn peek_valid(&mut self) -> Option<Scheduled> {
        loop {
            let top = *self.queue.peek()?;
            if !self.valid(&top) {
                self.queue.pop();
                continue;
            }
            if let Target::Pair { left, right, .. } = top.target {
                if self.break_simultaneity(left, right, top.time) {
                    continue;
                }
            }
            return Some(top);
        }
    }

    fn break_simultaneity(&mut self, l: usize, r: usize, time: f64) -> bool {
        let near = |t: Option<f64>| t.is_some_and(|t| (t - time).abs() <= SIMULTANEITY_TOL);
        let mut triple: Vec<usize> = Vec::new();
        if let Some(p) = self.nodes[l].prev {
            if near(self.collision_time(p, l)) {
                triple = vec![p, l, r];
            }
        }
        if triple.is_empty() {
            if let Some(n) = self.nodes[r].next {
                if near(self.collision_time(r, n)) {
                    triple = vec![l, r, n];
                }
            }
        }
        if triple.is_empty() {
            return false;
        }
        let (k, &youngest) = triple.iter().enumerate().max_by_key(|(_, &n)| self.nodes[n].id).unwrap();
        if self.nodes[youngest].perturbations >= MAX_PERTURBATIONS {
            return false;
        }
        let delta = self.jitter * self.eta;
        let sign = if k == 0 { -1.0 } else { 1.0 };
        self.perturb(youngest, sign * delta);
        true
    }

    fn perturb(&mut self, n: usize, delta: f64) {
        let y = self.pos(n, self.t);
        let v = self.bump();
        let node = &mut self.nodes[n];
        node.y0 = y;
        node.t0 = self.t;
        node.speed += delta;
        node.version = v;
        node.perturbations += 1;
        self.stats.perturbations += 1;
        if let Some(p) = self.nodes[n].prev {
            self.schedule_pair(p, n);
        }
        if let Some(m) = self.nodes[n].next {
            self.schedule_pair(n, m);
        }
        self.schedule_exits();
        for p in 0..self.probes.len() {
            if self.probes[p].left == Some(n) || self.probe_right(p) == Some(n) {
                self.schedule_probe(p);
            }
        }
    }

    fn to_event(&self, s: &Scheduled) -> Event {
        let kind = match s.target {
            Target::Pair { left, right, .. } => EventKind::Interaction {
                left: self.nodes[left].id,
                right: self.nodes[right].id,
                y: self.pos(left, s.time).clamp(0.0, self.mass),
            },
            Target::Exit { node, side, .. } => EventKind::BoundaryExit { front: self.nodes[node].id, side },
            Target::Probe { probe, node, .. } => EventKind::ProbeCrossing { probe, front: self.nodes[node].id },
        };
        Event { time: s.time, kind }
    }

    fn next_step_time(&self) -> Option<(u64, f64)> {
        self.time_step.map(|dt| {
            let n = self.steps_done + 1;
            (n, n as f64 * dt)
        })
    }

    /// Earliest event with time `<= t_stop`. Front events at the same time as
    /// a time step come first.
    pub fn next_event(&mut self, t_stop: f64) -> Result<Option<Event>> {
        let front = self.peek_valid().filter(|s| s.time <= t_stop);
        let step = self.next_step_time().filter(|&(_, ts)| ts <= t_stop);
        Ok(match (front, step) {
            (Some(s), Some((n, ts))) if ts < s.time => Some(Event { time: ts, kind: EventKind::TimeStep(n) }),
            (Some(s), _) => Some(self.to_event(&s)),
            (None, Some((n, ts))) => Some(Event { time: ts, kind: EventKind::TimeStep(n) }),
            (None, None) => None,
        })
    }

    /// Processes all front events with time `<= t_target` and moves the
    /// pattern to `t_target`. Time steps are left to the caller.
    pub fn advance(&mut self, t_target: f64) -> Result<Vec<ProcessedEvent>> {
        let mut out = Vec::new();
        self.advance_with(t_target, |e| out.push(e))?;
        Ok(out)
    }

    /// Like `advance`, handing each processed event to `sink`.
    pub fn advance_with(&mut self, t_target: f64, mut sink: impl FnMut(ProcessedEvent)) -> Result<()> {
        while let Some(s) = self.peek_valid() {
            if s.time > t_target {
                break;
            }
            self.queue.pop();
            let ev = self.process(s)?;
            sink(ev);
            if self.stats.events() > self.event_cap {
                return Err(Error::EventCapExceeded { cap: self.event_cap, t: self.t });
            }
        }
        if t_target > self.t {
            self.t = t_target;
        }
        Ok(())
    }

    fn process(&mut self, s: Scheduled) -> Result<ProcessedEvent> {
        if s.time > self.t {
            self.t = s.time;
        }
        match s.target {
            Target::Pair { left, right, .. } => self.interact(left, right),
            Target::Exit { node, side, .. } => self.exit(node, side),
            Target::Probe { probe, node, .. } => Ok(self.cross_probe(probe, node)),
        }
    }

    fn find(&self, id: FrontId) -> Result<usize> {
        self.iter_nodes().find(|&n| self.nodes[n].id == id).ok_or(Error::UnknownFront(id))
    }

    /// Resolves the collision of adjacent fronts `a` (left) and `b` (right) at time `t`.
    pub fn resolve_interaction(&mut self, a: FrontId, b: FrontId, t: f64) -> Result<ProcessedEvent> {
        let l = self.find(a)?;
        let r = self.find(b)?;
        if self.nodes[l].next != Some(r) {
            return Err(Error::NonAdjacentFronts(a, b));
        }
        if t > self.t {
            self.t = t;
        }
        self.interact(l, r)
    }

    /// Absorbs `front` into the standby ledger of `side` at the current time.
    pub fn absorb_at_boundary(&mut self, front: FrontId, side: Side) -> Result<ProcessedEvent> {
        let n = self.find(front)?;
        let at_end = match side {
            Side::Left => self.head == Some(n) && self.pos(n, self.t) <= 1e-9,
            Side::Right => self.tail == Some(n) && self.pos(n, self.t) >= self.mass - 1e-9,
        };
        if !at_end {
            return Err(Error::NotAtBoundary(front));
        }
        self.exit(n, side)
    }

    fn unlink(&mut self, first: usize, last: usize) -> (Option<usize>, Option<usize>) {
        let p = self.nodes[first].prev;
        let nx = self.nodes[last].next;
        let mut cur = Some(first);
        while let Some(c) = cur {
            cur = if c == last { None } else { self.nodes[c].next };
            self.release(c);
            self.len -= 1;
        }
        match p {
            Some(p) => self.nodes[p].next = nx,
            None => self.head = nx,
        }
        match nx {
            Some(n) => self.nodes[n].prev = p,
            None => self.tail = p,
        }
        (p, nx)
    }

    fn link_between(&mut self, p: Option<usize>, nx: Option<usize>, nodes: Vec<Node>) -> Vec<usize> {
        let mut idxs = Vec::with_capacity(nodes.len());
        let mut prev = p;
        for mut node in nodes {
            node.prev = prev;
            node.next = nx;
            let i = self.alloc(node);
            match prev {
                Some(q) => self.nodes[q].next = Some(i),
                None => self.head = Some(i),
            }
            prev = Some(i);
            idxs.push(i);
            self.len += 1;
        }
        match nx {
            Some(n) => self.nodes[n].prev = prev,
            None => self.tail = prev,
        }
        self.stats.max_active = self.stats.max_active.max(self.len);
        idxs
    }

    fn interact(&mut self, l: usize, r: usize) -> Result<ProcessedEvent> {
        let t = self.t;
        let y = (0.5 * (self.pos(l, t) + self.pos(r, t))).clamp(0.0, self.mass);
        let left = self.left_of(l);
        let right = self.nodes[r].right;
        let (a, b) = (self.record(l), self.record(r));
        // (id, family, eps, gen, right state)
        let mut outs: Vec<(Option<FrontId>, Family, f64, u32, LagState)> = Vec::new();
        let detail_same = if a.family != b.family {
            let middle = lax_state(b.family, left, b.eps, self.alpha);
            outs.push((Some(b.id), b.family, b.eps, b.gen, middle));
            outs.push((Some(a.id), a.family, a.eps, a.gen, right));
            None
        } else {
            let w = solve_riemann(left, right, self.alpha)?;
            let fam = a.family;
            let g_surv = a.gen.min(b.gen);
            let g_refl = a.gen.max(b.gen) + 1;
            let present: Vec<Family> = [Family::One, Family::Two].into_iter().filter(|&f| w.eps(f) != 0.0).collect();
            for (k, &f) in present.iter().enumerate() {
                let state = if k + 1 == present.len() { right } else { w.middle };
                let gen = if f == fam { g_surv } else { g_refl };
                let eps = w.eps(f);
                if eps > self.eta * (1.0 + 1e-9) {
                    return Err(Error::RarefactionTooLarge { eps, eta: self.eta, t });
                }
                outs.push((None, f, eps, gen, state));
            }
            Some(fam)
        };

        // With no outgoing wave the merged cell keeps the left state; the
        // mismatch with `right` is below the zero-wave threshold.
        let (p, nx) = self.unlink(l, r);
        let mut nodes = Vec::with_capacity(outs.len());
        let mut prev_state = left;
        for &(id, f, eps, gen, state) in &outs {
            let id = match id {
                Some(id) => Some(id),
                None => Some(self.fresh_id()),
            };
            nodes.push(self.make_node(id, f, eps, gen, y, prev_state, state)?);
            prev_state = state;
        }
        let idxs = self.link_between(p, nx, nodes);
        let new_states: Vec<LagState> = outs.iter().map(|o| o.4).collect();

        // Reschedule around the new fronts.
        let mut chain: Vec<usize> = Vec::new();
        chain.extend(p);
        chain.extend(idxs.iter().copied());
        chain.extend(nx);
        for w in chain.windows(2) {
            self.schedule_pair(w[0], w[1]);
        }
        self.schedule_exits();
        for q in 0..self.probes.len() {
            let pl = self.probes[q].left;
            if pl == p || pl == Some(l) || pl == Some(r) {
                let yq = self.probes[q].y;
                let new_left = if y < yq { idxs.last().copied().or(p) } else { p };
                self.set_probe_left(q, new_left);
                self.schedule_probe(q);
            }
        }

        let records: Vec<WaveRecord> = idxs.iter().map(|&i| self.record(i)).collect();
        let detail = match detail_same {
            None => {
                self.stats.crossings += 1;
                EventDetail::Crossing { incoming: [a, b], outgoing: [records[0], records[1]] }
            }
            Some(fam) => {
                self.stats.interactions += 1;
                EventDetail::SameFamily {
                    family: fam,
                    incoming: [a, b],
                    surviving: records.iter().copied().find(|w| w.family == fam),
                    reflected: records.iter().copied().find(|w| w.family != fam),
                    left,
                    right,
                }
            }
        };
        Ok(ProcessedEvent { time: t, y, detail, new_states })
    }

    fn exit(&mut self, n: usize, side: Side) -> Result<ProcessedEvent> {
        let wave = self.record(n);
        let node = self.nodes[n].clone();
        let y = match side {
            Side::Left => {
                self.left_state = node.right;
                0.0
            }
            Side::Right => self.mass,
        };
        let probes_before: Vec<(usize, Option<usize>)> =
            self.probes.iter().enumerate().map(|(i, p)| (i, p.left)).collect();
        let prev = node.prev;
        self.unlink(n, n);
        let front = Front {
            id: node.id,
            y,
            family: node.family,
            eps: node.eps,
            kind: FrontKind::of(node.eps),
            speed: node.speed,
            gen: node.gen,
            status: match side {
                Side::Left => FrontStatus::StandbyLeft,
                Side::Right => FrontStatus::StandbyRight,
            },
            exit_time: Some(self.t),
        };
        match side {
            Side::Left => {
                self.standby_left.push(front);
                self.stats.exits_left += 1;
            }
            Side::Right => {
                self.standby_right.push(front);
                self.stats.exits_right += 1;
            }
        }
        self.schedule_exits();
        for (q, pl) in probes_before {
            let affected = match side {
                Side::Left => pl.is_none() || pl == Some(n),
                Side::Right => pl == prev || pl == Some(n),
            };
            if affected {
                let new_left = if pl == Some(n) { prev } else { pl };
                self.set_probe_left(q, new_left);
                self.schedule_probe(q);
            }
        }
        let boundary = match side {
            Side::Left => self.left_state,
            Side::Right => self.right_boundary_state(),
        };
        Ok(ProcessedEvent { time: self.t, y, detail: EventDetail::Exit { side, wave }, new_states: vec![boundary] })
    }

    fn cross_probe(&mut self, p: usize, n: usize) -> ProcessedEvent {
        let wave = self.record(n);
        let new_left = if self.nodes[n].speed > 0.0 { self.nodes[n].prev } else { Some(n) };
        self.set_probe_left(p, new_left);
        self.schedule_probe(p);
        self.stats.probe_crossings += 1;
        ProcessedEvent {
            time: self.t,
            y: self.probes[p].y,
            detail: EventDetail::ProbeCrossing { probe: p, wave },
            new_states: Vec::new(),
        }
    }
}

struct NodeIter<'a> {
    pattern: &'a WavePattern,
    cur: Option<usize>,
}

impl Iterator for NodeIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let n = self.cur?;
        self.cur = self.pattern.nodes[n].next;
        Some(n)
    }
}
