//! Plan auditing and execution.
//!
//! Execution processes events in causal order of their points, ties broken by
//! plan index. Adversary views and reconstructions are derived from the final
//! global state: a consumed token stands for the tokens it turned into, and a
//! slot whose pad key or teleport outcome was not collected is twirled.

use crate::error::{Error, Result};
use crate::geometry::{causal_leq, segment_meets_diamond, segment_meets_diamond_sampled, Diamond, Point, Polyline, Region};
use crate::model::{set_label, CallPattern, TaskSpec};
use crate::planner::{DecodeScheme, Event, Predicate, ProtocolPlan, Scheme, REFERENCE, SECRET};
use crate::qsim::{compare, maximally_entangled, maximally_mixed, weyl, QState, C};
use crate::schemes::{code23_decode, code23_encode, xor_mm_split_rng, ClassicalKey, QotpKey};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

const EPS: f64 = 1e-9;
/// Sample spacing for worldline tests outside 1+1.
pub const SAMPLE_STEP: f64 = 1e-2;

// ---------------------------------------------------------------------------
// geometry helpers

fn dist(a: &Point, b: &Point) -> f64 {
    let dt = a.t - b.t;
    (dt * dt + a.x.iter().zip(&b.x).map(|(p, q)| (p - q) * (p - q)).sum::<f64>()).sqrt()
}

fn same_point(a: &Point, b: &Point) -> bool {
    dist(a, b) <= EPS * (1.0 + a.t.abs().max(b.t.abs()))
}

fn passes_through(line: &Polyline, p: &Point) -> bool {
    let v = &line.vertices;
    if v.len() == 1 {
        return same_point(&v[0], p);
    }
    v.windows(2).any(|w| {
        let ab = dist(&w[0], &w[1]);
        (dist(&w[0], p) + dist(p, &w[1]) - ab).abs() <= EPS * (1.0 + ab)
    })
}

/// Whether a worldline meets a region: exact in 1+1, sampled otherwise.
pub fn worldline_intersects(line: &Polyline, region: &Region) -> bool {
    let v = &line.vertices;
    let segs: Vec<(&Point, &Point)> = if v.len() == 1 { vec![(&v[0], &v[0])] } else { v.windows(2).map(|w| (&w[0], &w[1])).collect() };
    region.diamonds.iter().any(|d: &Diamond| {
        segs.iter().any(|(p, q)| if d.dim() == 1 { segment_meets_diamond(p, q, d) } else { segment_meets_diamond_sampled(p, q, d, SAMPLE_STEP) })
    })
}

fn leq(p: &Point, q: &Point) -> bool {
    causal_leq(p, q).unwrap_or(false)
}

// ---------------------------------------------------------------------------
// ordering

/// Causal order of event points, ties broken by plan index.
pub fn execution_order(plan: &ProtocolPlan) -> Vec<usize> {
    let n = plan.events.len();
    let pts: Vec<&Point> = plan.events.iter().map(|e| e.point()).collect();
    let before = |i: usize, j: usize| {
        if same_point(pts[i], pts[j]) {
            i < j
        } else {
            leq(pts[i], pts[j])
        }
    };
    let mut indeg = vec![0usize; n];
    for (j, d) in indeg.iter_mut().enumerate() {
        *d = (0..n).filter(|&i| i != j && before(i, j)).count();
    }
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let next = (0..n).find(|&k| !done[k] && indeg[k] == 0).expect("precedence is acyclic");
        done[next] = true;
        order.push(next);
        for j in 0..n {
            if !done[j] && before(next, j) {
                indeg[j] -= 1;
            }
        }
    }
    order
}

// ---------------------------------------------------------------------------
// audits

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{:<11} {}", c.name, if c.passed { "ok" } else { "FAILED" })?;
            for d in &c.detail {
                writeln!(f, "    {d}")?;
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct AuditTok {
    quantum: bool,
    /// Possible positions across branches; empty once consumed.
    at: Vec<Point>,
    lines: Vec<Polyline>,
}

/// Static audit of a plan: causal worldlines, past-visible predicates,
/// linear use of quantum tokens and avoidance of designated regions.
pub fn validate_plan(plan: &ProtocolPlan, task: &TaskSpec) -> AuditReport {
    let mut causal = Vec::new();
    let mut visible = Vec::new();
    let mut linear = Vec::new();
    let mut avoid = Vec::new();
    let mut toks: BTreeMap<String, AuditTok> = BTreeMap::new();
    toks.insert(SECRET.into(), AuditTok { quantum: true, at: vec![plan.start.clone()], lines: vec![Polyline::new(vec![plan.start.clone()])] });

    let unauth: BTreeMap<String, Region> = task
        .unauthorized_regions()
        .map(|rs| rs.into_iter().map(|r| (r.name.clone(), r)).collect())
        .unwrap_or_default();

    let check_line = |i: usize, what: &str, l: &Polyline, out: &mut Vec<String>| {
        if l.vertices.is_empty() {
            out.push(format!("event {i}: empty {what}"));
        } else if let Some(k) = l.first_non_causal_segment() {
            out.push(format!("event {i}: {what} segment {k} is not future-directed causal"));
        }
    };
    let check_pred = |i: usize, p: &Predicate, at: &Point, out: &mut Vec<String>| {
        for bit in p.bits() {
            match task.diamond(&bit) {
                None => out.push(format!("event {i}: predicate reads unknown diamond {bit}")),
                Some(d) if !leq(&d.c, at) => out.push(format!("event {i}: call bit of {bit} is not in the past of {at}")),
                _ => {}
            }
        }
    };

    fn quantum_at(toks: &BTreeMap<String, AuditTok>, id: &str, p: &Point, i: usize, out: &mut Vec<String>) -> bool {
        match toks.get(id) {
            None => {
                out.push(format!("event {i}: unknown token {id}"));
                false
            }
            Some(t) if !t.quantum => {
                out.push(format!("event {i}: {id} is not a quantum token"));
                false
            }
            Some(t) if t.at.is_empty() => {
                out.push(format!("event {i}: {id} used after it was consumed"));
                false
            }
            Some(t) if !t.at.iter().any(|q| same_point(q, p)) => {
                out.push(format!("event {i}: {id} is not at {p}"));
                false
            }
            _ => true,
        }
    }
    fn classical_at(toks: &BTreeMap<String, AuditTok>, id: &str, p: &Point, i: usize, out: &mut Vec<String>) {
        match toks.get(id) {
            None => out.push(format!("event {i}: unknown token {id}")),
            Some(t) if t.quantum => out.push(format!("event {i}: quantum token {id} used as classical data")),
            Some(t) if !t.lines.iter().any(|l| passes_through(l, p)) => out.push(format!("event {i}: {id} does not pass through {p}")),
            _ => {}
        }
    }
    fn fresh(toks: &mut BTreeMap<String, AuditTok>, id: &str, t: AuditTok, i: usize, out: &mut Vec<String>) {
        if toks.contains_key(id) {
            out.push(format!("event {i}: token {id} created twice"));
        }
        toks.insert(id.to_string(), t);
    }

    for i in execution_order(plan) {
        match &plan.events[i] {
            Event::CreateEntangled { a, b, at, .. } => {
                for id in [a, b] {
                    let t = AuditTok { quantum: true, at: vec![at.clone()], lines: vec![Polyline::new(vec![at.clone()])] };
                    fresh(&mut toks, id, t, i, &mut linear);
                }
            }
            Event::MoveToken { token, worldline } => {
                check_line(i, "worldline", worldline, &mut causal);
                let start = &worldline.vertices[0];
                match toks.get_mut(token) {
                    None => linear.push(format!("event {i}: unknown token {token}")),
                    Some(t) if t.quantum => {
                        if t.at.is_empty() {
                            linear.push(format!("event {i}: {token} moved after it was consumed"));
                        } else if let Some(k) = t.at.iter().position(|q| same_point(q, start)) {
                            t.at[k] = worldline.end().expect("non-empty").clone();
                            t.lines.push(worldline.clone());
                        } else {
                            causal.push(format!("event {i}: {token} does not start its worldline where it is"));
                        }
                    }
                    Some(t) => {
                        if !t.lines.iter().any(|l| passes_through(l, start)) {
                            causal.push(format!("event {i}: {token} does not start its worldline where it is"));
                        }
                        t.lines.push(worldline.clone());
                    }
                }
            }
            Event::BellMeasure { input, resource, target, outcome, at } => {
                if input == resource {
                    linear.push(format!("event {i}: {input} measured with itself"));
                }
                for id in [input, resource] {
                    if quantum_at(&toks, id, at, i, &mut linear) {
                        toks.get_mut(id.as_str()).expect("checked").at.clear();
                    }
                }
                match toks.get(target) {
                    Some(t) if t.quantum && !t.at.is_empty() => {}
                    _ => linear.push(format!("event {i}: teleport target {target} is not a live quantum token")),
                }
                fresh(&mut toks, outcome, AuditTok { quantum: false, at: vec![], lines: vec![Polyline::new(vec![at.clone()])] }, i, &mut linear);
            }
            Event::BroadcastClassical { token, at, routes } => {
                classical_at(&toks, token, at, i, &mut linear);
                for r in routes {
                    check_line(i, &format!("route {}", r.id), &r.worldline, &mut causal);
                    if r.worldline.vertices.first().is_none_or(|p| !same_point(p, at)) {
                        causal.push(format!("event {i}: route {} does not start at {at}", r.id));
                    }
                    if let Some(label) = &r.avoid {
                        match unauth.get(label) {
                            None => avoid.push(format!("event {i}: route {} names unknown region {label}", r.id)),
                            Some(reg) if worldline_intersects(&r.worldline, reg) => {
                                avoid.push(format!("event {i}: route {} enters {label}", r.id))
                            }
                            _ => {}
                        }
                    }
                    fresh(&mut toks, &r.id, AuditTok { quantum: false, at: vec![], lines: vec![r.worldline.clone()] }, i, &mut linear);
                }
            }
            Event::EncodeScheme { scheme, inputs, outputs, at } => match scheme {
                Scheme::EdgeCode { .. } => {
                    if inputs.len() != 1 {
                        linear.push(format!("event {i}: encoding takes one input"));
                    }
                    for id in inputs {
                        if quantum_at(&toks, id, at, i, &mut linear) {
                            toks.get_mut(id.as_str()).expect("checked").at.clear();
                        }
                    }
                    for o in outputs {
                        let t = AuditTok { quantum: true, at: vec![at.clone()], lines: vec![Polyline::new(vec![at.clone()])] };
                        fresh(&mut toks, o, t, i, &mut linear);
                    }
                }
                Scheme::KeyGen { .. } | Scheme::XorSplit { .. } => {
                    for id in inputs {
                        classical_at(&toks, id, at, i, &mut linear);
                    }
                    for o in outputs {
                        fresh(&mut toks, o, AuditTok { quantum: false, at: vec![], lines: vec![Polyline::new(vec![at.clone()])] }, i, &mut linear);
                    }
                }
                Scheme::Qotp => {
                    match inputs.split_first() {
                        Some((q, keys)) => {
                            quantum_at(&toks, q, at, i, &mut linear);
                            for k in keys {
                                classical_at(&toks, k, at, i, &mut linear);
                            }
                            if outputs.len() != 1 || &outputs[0] != q {
                                linear.push(format!("event {i}: padding must act in place"));
                            }
                        }
                        None => linear.push(format!("event {i}: padding without input")),
                    }
                }
            },
            Event::ConditionalRoute { token, at, predicate, if_true, if_false } => {
                check_pred(i, predicate, at, &mut visible);
                for (what, l) in [("then branch", if_true), ("else branch", if_false)] {
                    check_line(i, what, l, &mut causal);
                    if l.vertices.first().is_none_or(|p| !same_point(p, at)) {
                        causal.push(format!("event {i}: {what} does not start at {at}"));
                    }
                }
                if quantum_at(&toks, token, at, i, &mut linear) {
                    let t = toks.get_mut(token.as_str()).expect("checked");
                    let k = t.at.iter().position(|q| same_point(q, at)).expect("checked");
                    t.at.remove(k);
                    for l in [if_true, if_false] {
                        t.at.push(l.end().expect("non-empty").clone());
                        t.lines.push(l.clone());
                    }
                }
            }
            Event::HandOver { tokens, at, predicate, .. } => {
                check_pred(i, predicate, at, &mut visible);
                for id in tokens {
                    match toks.get(id.as_str()) {
                        Some(t) if t.quantum => {
                            if quantum_at(&toks, id, at, i, &mut linear) {
                                let t = toks.get_mut(id.as_str()).expect("checked");
                                let k = t.at.iter().position(|q| same_point(q, at)).expect("checked");
                                t.at.remove(k);
                            }
                        }
                        _ => classical_at(&toks, id, at, i, &mut linear),
                    }
                }
            }
        }
    }
    let mk = |name, detail: Vec<String>| AuditCheck { name, passed: detail.is_empty(), detail };
    AuditReport {
        checks: vec![mk("causal", causal), mk("predicates", visible), mk("linearity", linear), mk("avoidance", avoid)],
    }
}

// ---------------------------------------------------------------------------
// execution

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    /// The named region (or set label) collects every token whose worldline meets it.
    Access(String),
    /// Calls are made; the collected material is what gets handed over.
    Calls(CallPattern),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub seed: u64,
}

impl Scenario {
    pub fn access(name: &str, seed: u64) -> Self {
        Scenario { kind: ScenarioKind::Access(name.into()), seed }
    }

    pub fn calls(pattern: CallPattern, seed: u64) -> Self {
        Scenario { kind: ScenarioKind::Calls(pattern), seed }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Content {
    Key { key: String, value: ClassicalKey },
    KeyShare { key: String, group: usize, index: usize, m: usize, value: ClassicalKey },
    Outcome { outcome: String, value: (usize, usize) },
}

#[derive(Clone, Debug, PartialEq)]
enum MaskSource {
    Key(String),
    Outcome(String),
}

#[derive(Clone, Debug, PartialEq)]
struct Mask {
    source: MaskSource,
    undo: DMatrix<C>,
}

#[derive(Clone, Debug)]
struct Tok {
    quantum: bool,
    lines: Vec<Polyline>,
    pos: Point,
    consumed: bool,
    handed: bool,
    successors: Vec<String>,
    masks: Vec<Mask>,
    content: Option<Content>,
}

impl Tok {
    fn new(quantum: bool, at: &Point, content: Option<Content>) -> Self {
        Tok {
            quantum,
            lines: vec![Polyline::new(vec![at.clone()])],
            pos: at.clone(),
            consumed: false,
            handed: false,
            successors: Vec::new(),
            masks: Vec::new(),
            content,
        }
    }

    fn present_at(&self, p: &Point) -> bool {
        if self.quantum {
            !self.consumed && !self.handed && same_point(&self.pos, p)
        } else {
            self.lines.iter().any(|l| passes_through(l, p))
        }
    }
}

struct Run<'a> {
    plan: &'a ProtocolPlan,
    d: usize,
    toks: BTreeMap<String, Tok>,
    state: Option<QState>,
    /// Entangled pairs not yet placed in the state.
    pending: BTreeMap<String, String>,
    rng: ChaCha8Rng,
    calls: CallPattern,
    handed: Vec<(String, String)>,
    log: Vec<String>,
}

impl<'a> Run<'a> {
    fn audit_err(&self, index: usize, what: String) -> Error {
        Error::Audit { index, what }
    }

    fn tok(&self, id: &str, i: usize) -> Result<&Tok> {
        self.toks.get(id).ok_or_else(|| self.audit_err(i, format!("unknown token {id}")))
    }

    fn require_quantum(&self, id: &str, at: &Point, i: usize) -> Result<()> {
        let t = self.tok(id, i)?;
        if !t.quantum || !t.present_at(at) {
            return Err(self.audit_err(i, format!("quantum token {id} is not available at {at}")));
        }
        Ok(())
    }

    fn require_classical(&self, id: &str, at: &Point, i: usize) -> Result<&Content> {
        let t = self.tok(id, i)?;
        if t.quantum || !t.present_at(at) {
            return Err(self.audit_err(i, format!("classical token {id} is not available at {at}")));
        }
        t.content.as_ref().ok_or_else(|| self.audit_err(i, format!("{id} carries no value")))
    }

    fn ensure(&mut self, slot: &str) -> Result<()> {
        let Some(partner) = self.pending.remove(slot) else { return Ok(()) };
        self.pending.remove(&partner);
        if let Some(s) = &self.state {
            self.state = Some(s.tensor(&maximally_entangled(self.d, slot, &partner)?)?);
        }
        Ok(())
    }

    fn step(&mut self, i: usize) -> Result<String> {
        let e = &self.plan.events[i];
        match e {
            Event::CreateEntangled { a, b, at, .. } => {
                for id in [a, b] {
                    if self.toks.contains_key(id) {
                        return Err(self.audit_err(i, format!("token {id} created twice")));
                    }
                    self.toks.insert(id.clone(), Tok::new(true, at, None));
                }
                self.pending.insert(a.clone(), b.clone());
                self.pending.insert(b.clone(), a.clone());
                Ok("created".into())
            }
            Event::MoveToken { token, worldline } => {
                let start = &worldline.vertices[0];
                let t = self.tok(token, i)?;
                if !t.present_at(start) {
                    return Err(self.audit_err(i, format!("{token} is not at {start}")));
                }
                let t = self.toks.get_mut(token).expect("checked");
                t.lines.push(worldline.clone());
                t.pos = worldline.end().expect("non-empty").clone();
                Ok("moved".into())
            }
            Event::BellMeasure { input, resource, target, outcome, at } => {
                self.require_quantum(input, at, i)?;
                self.require_quantum(resource, at, i)?;
                let tt = self.tok(target, i)?;
                if !tt.quantum || tt.consumed {
                    return Err(self.audit_err(i, format!("teleport target {target} is not live")));
                }
                let (a, b) = if self.state.is_some() {
                    for s in [input, resource, target] {
                        self.ensure(s)?;
                    }
                    let st = self.state.take().expect("checked");
                    let (ab, rest) = st.bell_measure_discard(input, resource, &mut self.rng)?;
                    self.state = Some(rest.ok_or_else(|| Error::Internal("measurement consumed the whole state".into()))?);
                    ab
                } else {
                    (self.rng.gen_range(0..self.d), self.rng.gen_range(0..self.d))
                };
                let mut masks = self.toks[input].masks.clone();
                masks.push(Mask { source: MaskSource::Outcome(outcome.clone()), undo: weyl(self.d, a, b) });
                self.toks.get_mut(target).expect("checked").masks = masks;
                for (id, succ) in [(input, vec![target.clone(), outcome.clone()]), (resource, vec![])] {
                    let t = self.toks.get_mut(id).expect("checked");
                    t.consumed = true;
                    t.successors = succ;
                }
                let content = Content::Outcome { outcome: outcome.clone(), value: (a, b) };
                self.toks.insert(outcome.clone(), Tok::new(false, at, Some(content)));
                Ok(format!("outcome=({a},{b})"))
            }
            Event::BroadcastClassical { token, at, routes } => {
                let content = self.require_classical(token, at, i)?.clone();
                for r in routes {
                    let mut t = Tok::new(false, at, Some(content.clone()));
                    t.lines = vec![r.worldline.clone()];
                    t.pos = r.worldline.end().expect("non-empty").clone();
                    self.toks.insert(r.id.clone(), t);
                }
                Ok(format!("copies={}", routes.len()))
            }
            Event::EncodeScheme { scheme, inputs, outputs, at } => self.encode(i, scheme, inputs, outputs, at),
            Event::ConditionalRoute { token, at, predicate, if_true, if_false } => {
                self.require_quantum(token, at, i)?;
                let branch = predicate.eval(&self.calls);
                let path = if branch { if_true } else { if_false };
                let t = self.toks.get_mut(token).expect("checked");
                t.lines.push(path.clone());
                t.pos = path.end().expect("non-empty").clone();
                Ok(format!("branch={}", if branch { "then" } else { "else" }))
            }
            Event::HandOver { diamond, tokens, at, predicate } => {
                if !predicate.eval(&self.calls) {
                    return Ok("withheld".into());
                }
                let mut given = Vec::new();
                for id in tokens {
                    let t = self.tok(id, i)?;
                    if t.present_at(at) {
                        if t.quantum {
                            self.toks.get_mut(id).expect("checked").handed = true;
                        }
                        self.handed.push((diamond.clone(), id.clone()));
                        given.push(id.clone());
                    }
                }
                Ok(format!("handed=[{}]", given.join(",")))
            }
        }
    }

    fn encode(&mut self, i: usize, scheme: &Scheme, inputs: &[String], outputs: &[String], at: &Point) -> Result<String> {
        match scheme {
            Scheme::EdgeCode { n } => {
                let [input] = inputs else { return Err(self.audit_err(i, "encoding takes one input".into())) };
                self.require_quantum(input, at, i)?;
                if outputs.len() != crate::schemes::share_count(*n).max(1) {
                    return Err(self.audit_err(i, "wrong number of shares".into()));
                }
                if *n > 3 {
                    self.state = None;
                } else if let Some(st) = &self.state {
                    let next = if *n == 2 {
                        let mut s = st.clone();
                        s.relabel(input, &outputs[0])?;
                        s
                    } else {
                        code23_encode(st, input, [&outputs[0], &outputs[1], &outputs[2]])?
                    };
                    self.state = Some(next);
                }
                let masks = self.toks[input].masks.clone();
                for o in outputs {
                    let mut t = Tok::new(true, at, None);
                    t.masks = masks.clone();
                    self.toks.insert(o.clone(), t);
                }
                let t = self.toks.get_mut(input).expect("checked");
                t.consumed = true;
                t.successors = outputs.to_vec();
                Ok(format!("shares={}", outputs.len()))
            }
            Scheme::KeyGen { bytes } => {
                let [out] = outputs else { return Err(self.audit_err(i, "key generation has one output".into())) };
                let value = QotpKey::random(bytes / 2, self.d, &mut self.rng).to_classical();
                let content = Content::Key { key: out.clone(), value };
                self.toks.insert(out.clone(), Tok::new(false, at, Some(content)));
                Ok("key".into())
            }
            Scheme::XorSplit { m } => {
                let [input] = inputs else { return Err(self.audit_err(i, "split takes one input".into())) };
                let Content::Key { key, value } = self.require_classical(input, at, i)?.clone() else {
                    return Err(self.audit_err(i, format!("{input} is not a key")));
                };
                if outputs.len() != *m {
                    return Err(self.audit_err(i, "wrong number of key shares".into()));
                }
                let parts = xor_mm_split_rng(&value, *m, &mut self.rng)?;
                for (index, (o, v)) in outputs.iter().zip(parts).enumerate() {
                    let content = Content::KeyShare { key: key.clone(), group: i, index, m: *m, value: v };
                    self.toks.insert(o.clone(), Tok::new(false, at, Some(content)));
                }
                Ok(format!("parts={m}"))
            }
            Scheme::Qotp => {
                let Some((q, keys)) = inputs.split_first() else { return Err(self.audit_err(i, "padding without input".into())) };
                self.require_quantum(q, at, i)?;
                let mut contents = Vec::new();
                for k in keys {
                    contents.push(self.require_classical(k, at, i)?.clone());
                }
                let (key, value) = key_from(&contents).ok_or_else(|| self.audit_err(i, format!("key material for {q} is incomplete")))?;
                let pad = QotpKey::from_classical(&value, self.d)?;
                let &(a, b) = pad.pairs.first().ok_or_else(|| self.audit_err(i, "empty pad key".into()))?;
                if let Some(st) = &self.state {
                    self.state = Some(st.apply(&[q], &weyl(self.d, a, b))?);
                }
                let t = self.toks.get_mut(q).expect("checked");
                t.masks.push(Mask { source: MaskSource::Key(key), undo: weyl(self.d, a, b).adjoint() });
                Ok("padded".into())
            }
        }
    }
}

/// Recover a key from a full key copy or a complete share group.
fn key_from(contents: &[Content]) -> Option<(String, ClassicalKey)> {
    for c in contents {
        if let Content::Key { key, value } = c {
            return Some((key.clone(), value.clone()));
        }
    }
    let mut groups: BTreeMap<usize, (String, usize, BTreeMap<usize, ClassicalKey>)> = BTreeMap::new();
    for c in contents {
        if let Content::KeyShare { key, group, index, m, value } = c {
            groups.entry(*group).or_insert_with(|| (key.clone(), *m, BTreeMap::new())).2.insert(*index, value.clone());
        }
    }
    for (key, m, parts) in groups.into_values() {
        if parts.len() == m {
            let mut bytes = parts[&0].bytes.clone();
            for p in parts.values().skip(1) {
                for (b, x) in bytes.iter_mut().zip(&p.bytes) {
                    *b ^= x;
                }
            }
            return Some((key, ClassicalKey { bytes }));
        }
    }
    None
}

/// Result of running a plan in one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    /// Tokens available to the collecting party, after lineage closure.
    pub collected: Vec<String>,
    /// `(diamond, token)` pairs handed over, in execution order.
    pub handed: Vec<(String, String)>,
    /// One line per executed event, `index kind result`.
    pub log: Vec<String>,
    /// Labels of decoder recipes whose material was fully collected.
    pub reconstructing: Vec<String>,
    /// Fidelity of the first reconstructing recipe with the reference.
    pub fidelity: Option<f64>,
    /// Trace distance of the collected view from (view restricted to shares) ⊗ maximally mixed reference.
    pub factorization_distance: Option<f64>,
    /// Whether two reconstructing recipes use disjoint share sets.
    pub disjoint_copies: bool,
    pub symbolic: bool,
}

struct Finished {
    outcome: Outcome,
    state: Option<QState>,
    carriers: Vec<String>,
    masks: BTreeMap<String, Vec<Mask>>,
}

fn access_region(task: &TaskSpec, name: &str) -> Result<Region> {
    if let Some(r) = task.region(name) {
        return Ok(r.clone());
    }
    for (sets, regions) in [(&task.authorized, task.authorized_regions()?), (&task.unauthorized, task.unauthorized_regions()?)] {
        for (s, r) in sets.iter().zip(regions) {
            if set_label(s) == name {
                return Ok(r);
            }
        }
    }
    if let Some(d) = task.diamond(name) {
        return Region::new(name, vec![d.clone()]);
    }
    Err(Error::InvalidTask(format!("no region or set named {name}")))
}

fn run(plan: &ProtocolPlan, task: &TaskSpec, scenario: &Scenario) -> Result<Finished> {
    let d = plan.secret_dim;
    let calls = match &scenario.kind {
        ScenarioKind::Calls(p) => {
            p.validate(task)?;
            p.clone()
        }
        ScenarioKind::Access(_) => CallPattern::default(),
    };
    let mut toks = BTreeMap::new();
    toks.insert(SECRET.to_string(), Tok::new(true, &plan.start, None));
    let mut r = Run {
        plan,
        d,
        toks,
        state: Some(maximally_entangled(d, SECRET, REFERENCE)?),
        pending: BTreeMap::new(),
        rng: ChaCha8Rng::seed_from_u64(scenario.seed),
        calls,
        handed: Vec::new(),
        log: Vec::new(),
    };
    for i in execution_order(plan) {
        let res = r.step(i)?;
        r.log.push(format!("{i} {} {res}", plan.events[i].kind_name()));
    }

    // what the collecting party holds
    let mut collected: BTreeSet<String> = match &scenario.kind {
        ScenarioKind::Access(name) => {
            let region = access_region(task, name)?;
            r.toks.iter().filter(|(_, t)| t.lines.iter().any(|l| worldline_intersects(l, &region))).map(|(k, _)| k.clone()).collect()
        }
        ScenarioKind::Calls(_) => r.handed.iter().map(|(_, t)| t.clone()).collect(),
    };
    let mut stack: Vec<String> = collected.iter().cloned().collect();
    while let Some(id) = stack.pop() {
        for s in r.toks[&id].successors.clone() {
            if collected.insert(s.clone()) {
                stack.push(s);
            }
        }
    }

    let contents: Vec<Content> = collected.iter().filter_map(|id| r.toks[id].content.clone()).collect();
    let known_outcomes: BTreeSet<String> = contents
        .iter()
        .filter_map(|c| if let Content::Outcome { outcome, .. } = c { Some(outcome.clone()) } else { None })
        .collect();
    let mut known_keys: BTreeSet<String> = BTreeSet::new();
    let mut groups: BTreeMap<usize, (String, usize, BTreeSet<usize>)> = BTreeMap::new();
    for c in &contents {
        match c {
            Content::Key { key, .. } => {
                known_keys.insert(key.clone());
            }
            Content::KeyShare { key, group, index, m, .. } => {
                groups.entry(*group).or_insert_with(|| (key.clone(), *m, BTreeSet::new())).2.insert(*index);
            }
            Content::Outcome { .. } => {}
        }
    }
    for (key, m, got) in groups.into_values() {
        if got.len() == m {
            known_keys.insert(key);
        }
    }
    let lifted = |t: &Tok| {
        t.masks.iter().all(|mk| match &mk.source {
            MaskSource::Key(k) => known_keys.contains(k),
            MaskSource::Outcome(o) => known_outcomes.contains(o),
        })
    };

    let final_slot = |start: &str| -> String {
        let mut cur = start.to_string();
        loop {
            let t = &r.toks[&cur];
            match t.successors.iter().find(|s| r.toks[*s].quantum) {
                Some(next) if t.consumed => cur = next.clone(),
                _ => return cur,
            }
        }
    };
    let carriers: Vec<String> = plan.decoder.shares.iter().map(|s| final_slot(s)).collect();
    let usable = |slot: &str| collected.contains(slot) && lifted(&r.toks[slot]);
    let complete: Vec<&crate::planner::Recipe> =
        plan.decoder.recipes.iter().filter(|rc| rc.shares.iter().all(|&k| usable(&carriers[k - 1]))).collect();
    let disjoint_copies = complete.iter().enumerate().any(|(a, x)| {
        complete[a + 1..].iter().any(|y| x.shares.iter().all(|k| !y.shares.contains(k)))
    });

    let symbolic = r.state.is_none();
    let mut fidelity = None;
    let mut factorization_distance = None;
    let mut masks = BTreeMap::new();
    for c in &carriers {
        masks.insert(c.clone(), r.toks[c].masks.clone());
    }
    if !symbolic {
        let live: Vec<String> = r
            .toks
            .iter()
            .filter(|(id, t)| t.quantum && !t.consumed && collected.contains(*id))
            .map(|(id, _)| id.clone())
            .collect();
        for s in &live {
            r.ensure(s)?;
        }
        for s in &carriers {
            r.ensure(s)?;
        }
        let state = r.state.clone().expect("statevector mode");
        factorization_distance = Some(view_distance(&state, &live, |s| lifted(&r.toks[s]), d)?);
        if let Some(rc) = complete.first() {
            fidelity = Some(reconstruct(&state, &plan.decoder.scheme, &carriers, &rc.shares, &masks, d)?);
        }
    }
    Ok(Finished {
        outcome: Outcome {
            collected: collected.into_iter().collect(),
            handed: r.handed,
            log: r.log,
            reconstructing: complete.iter().map(|rc| rc.label.clone()).collect(),
            fidelity,
            factorization_distance,
            disjoint_copies,
            symbolic,
        },
        state: r.state,
        carriers,
        masks,
    })
}

fn view_distance(state: &QState, live: &[String], lifted: impl Fn(&str) -> bool, d: usize) -> Result<f64> {
    if live.is_empty() {
        return Ok(0.0);
    }
    let mut keep: Vec<&str> = live.iter().map(|s| s.as_str()).collect();
    keep.push(REFERENCE);
    let mut view = state.partial_trace(&keep)?.permuted(&keep)?;
    for s in live {
        if !lifted(s) {
            view = view.twirl(s)?;
        }
    }
    let shares = view.partial_trace(&keep[..keep.len() - 1])?.permuted(&keep[..keep.len() - 1])?;
    let product = shares.tensor(&maximally_mixed(REFERENCE, d)?)?;
    Ok(compare(&view, &product)?.1)
}

fn undo_masks(mut st: QState, carriers: &[String], masks: &BTreeMap<String, Vec<Mask>>) -> Result<QState> {
    for c in carriers {
        for mk in masks[c].iter().rev() {
            st = st.apply(&[c], &mk.undo)?;
        }
    }
    Ok(st)
}

fn reconstruct(
    state: &QState,
    scheme: &DecodeScheme,
    carriers: &[String],
    pair: &[usize],
    masks: &BTreeMap<String, Vec<Mask>>,
    d: usize,
) -> Result<f64> {
    let used: Vec<String> = pair.iter().map(|&k| carriers[k - 1].clone()).collect();
    let st = undo_masks(state.clone(), &used, masks)?;
    let (st, secret) = match scheme {
        DecodeScheme::Single => (st, used[0].clone()),
        DecodeScheme::Code23 => {
            let labels = [carriers[0].as_str(), carriers[1].as_str(), carriers[2].as_str()];
            (code23_decode(&st, labels, pair)?, used[0].clone())
        }
        DecodeScheme::Symbolic { .. } => return Err(Error::Unsupported("symbolic codes have no state".into())),
    };
    let got = st.partial_trace(&[&secret, REFERENCE])?.permuted(&[&secret, REFERENCE])?;
    Ok(compare(&got, &maximally_entangled(d, &secret, REFERENCE)?)?.0)
}

/// Run a plan under one scenario.
pub fn execute(plan: &ProtocolPlan, task: &TaskSpec, scenario: &Scenario) -> Result<Outcome> {
    Ok(run(plan, task, scenario)?.outcome)
}

// ---------------------------------------------------------------------------
// transfer runs

#[derive(Clone, Debug, PartialEq)]
pub struct TransferReport {
    /// 1 or 2.
    pub receiver: usize,
    pub calls: CallPattern,
    /// Share indices (1-based) handed to the receiver.
    pub received: Vec<usize>,
    pub fidelity: f64,
    /// Probability that the leftover pair passes the entanglement test.
    pub test_pass: f64,
    pub outcome: Outcome,
}

/// Honest transfer run: a seeded coin picks the receiver, who calls two random
/// pairs; the other party calls its diamond in the remaining pair.
pub fn run_transfer(plan: &ProtocolPlan, task: &TaskSpec, seed: u64) -> Result<TransferReport> {
    let pairs = task.pit_pairs()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_7ea5);
    let receiver = rng.gen_range(1..=2usize);
    let skip = rng.gen_range(0..3usize);
    let mut called: Vec<&str> = Vec::new();
    for (k, (x1, x2)) in pairs.iter().enumerate() {
        let mine = if receiver == 1 { x1 } else { x2 };
        let theirs = if receiver == 1 { x2 } else { x1 };
        called.push(if k == skip { theirs } else { mine });
    }
    let calls = CallPattern::from_called(task, &called)?;
    let fin = run(plan, task, &Scenario::calls(calls.clone(), seed))?;
    let state = fin.state.clone().ok_or_else(|| Error::Internal("transfer runs in statevector mode".into()))?;
    let suffix = receiver.to_string();
    let mut received: Vec<usize> = fin
        .outcome
        .handed
        .iter()
        .filter(|(d, _)| d.ends_with(&suffix))
        .filter_map(|(_, t)| fin.carriers.iter().position(|c| c == t).map(|k| k + 1))
        .collect();
    received.sort_unstable();
    if received.len() != 2 {
        return Err(Error::Internal(format!("receiver got {} shares", received.len())));
    }
    let fidelity = reconstruct(&state, &DecodeScheme::Code23, &fin.carriers, &received, &fin.masks, 3)?;
    let labels = [fin.carriers[0].as_str(), fin.carriers[1].as_str(), fin.carriers[2].as_str()];
    let decoded = code23_decode(&state, labels, &received)?;
    let excluded = (1..=3).find(|k| !received.contains(k)).expect("two of three");
    let test_pass = chi_test(&decoded, labels[received[1] - 1], labels[excluded - 1])?;
    Ok(TransferReport { receiver, calls, received, fidelity, test_pass, outcome: fin.outcome })
}

fn chi_vector() -> Result<nalgebra::DVector<C>> {
    Ok(maximally_entangled(3, "x", "y")?.amplitudes().expect("pure").clone())
}

fn chi_test(state: &QState, first: &str, second: &str) -> Result<f64> {
    state.overlap_probability(&[first, second], &chi_vector()?)
}

/// Pass probability of the entanglement test when the sender prepares two
/// independent encodings and hands each party shares from its own copy.
pub fn transfer_two_encodings_test(pair: &[usize]) -> Result<f64> {
    let labels = ["s1", "s2", "s3"];
    let one = code23_encode(&maximally_entangled(3, "A", "R")?, "A", labels)?;
    let decoded = code23_decode(&one, labels, pair)?;
    let excluded = (1..=3).find(|k| !pair.contains(k)).ok_or_else(|| Error::Scheme("pair must leave one share out".into()))?;
    let mut hi = pair.to_vec();
    hi.sort_unstable();
    let mine = decoded.partial_trace(&[labels[hi[1] - 1]])?;
    let other_labels = ["t1", "t2", "t3"];
    let two = code23_encode(&maximally_entangled(3, "B", "Q")?, "B", other_labels)?;
    let theirs = two.partial_trace(&[other_labels[excluded - 1]])?;
    let joint = mine.tensor(&theirs)?;
    chi_test(&joint, labels[hi[1] - 1], other_labels[excluded - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;
    use crate::planner::plan_task;

    #[test]
    fn order_respects_causality() {
        let t = fixtures::load("FIG1").unwrap();
        let plan = plan_task(&t).unwrap();
        let order = execution_order(&plan);
        for (a, &i) in order.iter().enumerate() {
            for &j in &order[a + 1..] {
                let (p, q) = (plan.events[i].point(), plan.events[j].point());
                assert!(same_point(p, q) || !leq(q, p));
            }
        }
    }

    #[test]
    fn point_on_polyline() {
        let l = Polyline::new(vec![Point::p1(0.0, 0.0), Point::p1(2.0, 1.0), Point::p1(3.0, 1.0)]);
        assert!(passes_through(&l, &Point::p1(1.0, 0.5)));
        assert!(passes_through(&l, &Point::p1(2.5, 1.0)));
        assert!(!passes_through(&l, &Point::p1(1.0, 0.0)));
    }
}
