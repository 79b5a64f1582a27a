//! Protocol synthesis for feasible tasks.

use crate::error::{Error, Result};
use crate::feasibility::{check_assembly, check_localize_exclude, check_summoning, Verdict};
use crate::geometry::{causal_leq, extract_escape_path, Diamond, Point, Polyline, Region};
use crate::model::{set_label, CallPattern, SummoningVariant, TaskKind, TaskSpec};
use crate::schemes::{edge_code_build, share_count, qubit_cost_formula};
use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

pub const SECRET: &str = "A";
pub const REFERENCE: &str = "R";
/// Bytes of pad key per qudit: one Weyl pair.
pub const PAD_KEY_BYTES: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    True,
    Call(String),
    NoCall(String),
    And(Vec<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    pub fn eval(&self, calls: &CallPattern) -> bool {
        match self {
            Predicate::True => true,
            Predicate::Call(d) => calls.is_called(d),
            Predicate::NoCall(d) => !calls.is_called(d),
            Predicate::And(ps) => ps.iter().all(|p| p.eval(calls)),
            Predicate::Not(p) => !p.eval(calls),
        }
    }

    /// Diamonds whose call bits the predicate reads.
    pub fn bits(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_bits(&mut out);
        out
    }

    fn collect_bits(&self, out: &mut BTreeSet<String>) {
        match self {
            Predicate::True => {}
            Predicate::Call(d) | Predicate::NoCall(d) => {
                out.insert(d.clone());
            }
            Predicate::And(ps) => ps.iter().for_each(|p| p.collect_bits(out)),
            Predicate::Not(p) => p.collect_bits(out),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::True => f.write_str("true"),
            Predicate::Call(d) => write!(f, "call({d})"),
            Predicate::NoCall(d) => write!(f, "nocall({d})"),
            Predicate::And(ps) => {
                let parts: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
                write!(f, "and({})", parts.join(","))
            }
            Predicate::Not(p) => write!(f, "not({p})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// One share per edge of the complete graph on `n` vertices.
    EdgeCode { n: usize },
    /// Fresh uniformly random classical key.
    KeyGen { bytes: usize },
    /// XOR sharing of the single input into the outputs.
    XorSplit { m: usize },
    /// Pad the first input (quantum) with the key carried by the remaining inputs.
    Qotp,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::EdgeCode { n } => write!(f, "edge_code({n})"),
            Scheme::KeyGen { bytes } => write!(f, "keygen({bytes})"),
            Scheme::XorSplit { m } => write!(f, "xor_split({m})"),
            Scheme::Qotp => f.write_str("qotp"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    pub id: String,
    pub worldline: Polyline,
    /// Label of the unauthorized region this copy must avoid.
    pub avoid: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    CreateEntangled { d: usize, a: String, b: String, at: Point },
    MoveToken { token: String, worldline: Polyline },
    /// Bell measurement of `input` with `resource`; the state lands on `target`.
    BellMeasure { input: String, resource: String, target: String, outcome: String, at: Point },
    /// Copies of a classical token sent along the given routes.
    BroadcastClassical { token: String, at: Point, routes: Vec<Route> },
    EncodeScheme { scheme: Scheme, inputs: Vec<String>, outputs: Vec<String>, at: Point },
    ConditionalRoute { token: String, at: Point, predicate: Predicate, if_true: Polyline, if_false: Polyline },
    HandOver { diamond: String, tokens: Vec<String>, at: Point, predicate: Predicate },
}

impl Event {
    pub fn point(&self) -> &Point {
        match self {
            Event::MoveToken { worldline, .. } => &worldline.vertices[0],
            Event::CreateEntangled { at, .. }
            | Event::BellMeasure { at, .. }
            | Event::BroadcastClassical { at, .. }
            | Event::EncodeScheme { at, .. }
            | Event::ConditionalRoute { at, .. }
            | Event::HandOver { at, .. } => at,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Event::CreateEntangled { .. } => "create_entangled",
            Event::MoveToken { .. } => "move",
            Event::BellMeasure { .. } => "bell_measure",
            Event::BroadcastClassical { .. } => "broadcast",
            Event::EncodeScheme { .. } => "encode",
            Event::ConditionalRoute { .. } => "route",
            Event::HandOver { .. } => "hand_over",
        }
    }
}

fn path_str(p: &Polyline) -> String {
    let parts: Vec<String> = p.vertices.iter().map(|v| v.to_string()).collect();
    parts.join("->")
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.kind_name();
        match self {
            Event::CreateEntangled { d, a, b, at } => write!(f, "{name} d={d} a={a} b={b} at={at}"),
            Event::MoveToken { token, worldline } => write!(f, "{name} token={token} path={}", path_str(worldline)),
            Event::BellMeasure { input, resource, target, outcome, at } => {
                write!(f, "{name} input={input} resource={resource} target={target} outcome={outcome} at={at}")
            }
            Event::BroadcastClassical { token, at, routes } => {
                let rs: Vec<String> = routes
                    .iter()
                    .map(|r| format!("{}:{}:avoid={}", r.id, path_str(&r.worldline), r.avoid.as_deref().unwrap_or("-")))
                    .collect();
                write!(f, "{name} token={token} at={at} routes=[{}]", rs.join("; "))
            }
            Event::EncodeScheme { scheme, inputs, outputs, at } => {
                write!(f, "{name} scheme={scheme} inputs=[{}] outputs=[{}] at={at}", inputs.join(","), outputs.join(","))
            }
            Event::ConditionalRoute { token, at, predicate, if_true, if_false } => write!(
                f,
                "{name} token={token} at={at} if={predicate} then={} else={}",
                path_str(if_true),
                path_str(if_false)
            ),
            Event::HandOver { diamond, tokens, at, predicate } => {
                write!(f, "{name} diamond={diamond} tokens=[{}] at={at} if={predicate}", tokens.join(","))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecodeScheme {
    /// The single share is the secret.
    Single,
    /// Three-share threshold code; recipes name two shares.
    Code23,
    /// Possession-level edge code without a state-vector realization.
    Symbolic { n: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recipe {
    pub label: String,
    /// 1-based indices into `Decoder::shares`.
    pub shares: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoder {
    pub scheme: DecodeScheme,
    /// Share tokens as created by the encoding.
    pub shares: Vec<String>,
    pub recipes: Vec<Recipe>,
}

/// Directed causal-connection graph between authorized regions or sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalGraph {
    pub vertices: Vec<String>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl CausalGraph {
    pub fn from_diamond_sets(names: Vec<String>, sets: &[Vec<Diamond>]) -> CausalGraph {
        let mut edges = BTreeSet::new();
        for (i, a) in sets.iter().enumerate() {
            for (j, b) in sets.iter().enumerate() {
                if i != j && a.iter().any(|x| b.iter().any(|y| causal_leq(&x.c, &y.r).unwrap_or(false))) {
                    edges.insert((i, j));
                }
            }
        }
        CausalGraph { vertices: names, edges }
    }

    pub fn is_complete(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| (i + 1..n).all(|j| self.edges.contains(&(i, j)) || self.edges.contains(&(j, i))))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolPlan {
    pub kind: TaskKind,
    pub secret_dim: usize,
    pub start: Point,
    pub origin: Point,
    pub events: Vec<Event>,
    pub decoder: Decoder,
    pub graph: Option<CausalGraph>,
}

impl ProtocolPlan {
    /// Human-readable event log, one event per line.
    pub fn to_log(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "plan kind={} secret_dim={} start={} origin={}", self.kind.keyword(), self.secret_dim, self.start, self.origin);
        for (i, e) in self.events.iter().enumerate() {
            let _ = writeln!(out, "{i} {e}");
        }
        let scheme = match &self.decoder.scheme {
            DecodeScheme::Single => "single".to_string(),
            DecodeScheme::Code23 => "code23".to_string(),
            DecodeScheme::Symbolic { n } => format!("symbolic({n})"),
        };
        let _ = writeln!(out, "decoder scheme={scheme} shares=[{}]", self.decoder.shares.join(","));
        for r in &self.decoder.recipes {
            let idx: Vec<String> = r.shares.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(out, "recipe {} shares={}", r.label, idx.join(","));
        }
        out
    }

    pub fn quantum_share_count(&self) -> usize {
        self.decoder.shares.len()
    }
}

fn refuse(v: &Verdict) -> Error {
    Error::Refused(format!("task is {v}"))
}

fn join_uv(p: &Point, q: &Point) -> Point {
    let (pu, pv) = p.uv();
    let (qu, qv) = q.uv();
    Point::from_uv(pu.max(qu), pv.max(qv))
}

fn leq(p: &Point, q: &Point) -> bool {
    causal_leq(p, q).unwrap_or(false)
}

fn line(points: Vec<Point>) -> Polyline {
    let mut v: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if v.last() != Some(&p) {
            v.push(p);
        }
    }
    Polyline::new(v)
}

/// A point in the causal past of every listed point, well below all of them.
fn far_past(points: &[&Point], dim: usize) -> Point {
    if dim == 1 {
        let (us, vs): (Vec<f64>, Vec<f64>) = points.iter().map(|p| p.uv()).unzip();
        let span = |xs: &[f64]| {
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi - lo)
        };
        let (ulo, uspan) = span(&us);
        let (vlo, vspan) = span(&vs);
        let margin = 2.0 + 2.0 * uspan.max(vspan);
        return Point::from_uv(ulo - margin, vlo - margin);
    }
    let k = points.len() as f64;
    let centre: Vec<f64> = (0..dim).map(|i| points.iter().map(|p| p.x[i]).sum::<f64>() / k).collect();
    let c = Point { t: 0.0, x: centre.clone() };
    let reach = points.iter().map(|p| p.spatial_distance(&c)).fold(0.0, f64::max);
    let tmin = points.iter().map(|p| p.t).fold(f64::INFINITY, f64::min);
    Point { t: tmin - reach - 1.0, x: centre }
}

struct Builder {
    events: Vec<Event>,
    origin: Point,
    start: Point,
    d: usize,
}

impl Builder {
    fn push(&mut self, e: Event) {
        self.events.push(e);
    }

    fn mv(&mut self, token: &str, points: Vec<Point>) {
        let wl = line(points);
        if wl.vertices.len() > 1 {
            self.push(Event::MoveToken { token: token.into(), worldline: wl });
        }
    }

    /// Teleport `input` (at the start point) onto a fresh partner sent to `dest`.
    /// Returns the partner and outcome token names.
    fn teleport(&mut self, tag: &str, input: &str, partner_path: Vec<Point>) -> (String, String) {
        let (e, f, o) = (format!("E{tag}"), format!("F{tag}"), format!("o{tag}"));
        self.push(Event::CreateEntangled { d: self.d, a: e.clone(), b: f.clone(), at: self.origin.clone() });
        self.mv(&e, vec![self.origin.clone(), self.start.clone()]);
        let mut path = vec![self.origin.clone()];
        path.extend(partner_path);
        self.mv(&f, path);
        self.push(Event::BellMeasure {
            input: input.into(),
            resource: e,
            target: f.clone(),
            outcome: o.clone(),
            at: self.start.clone(),
        });
        (f, o)
    }

    fn broadcast(&mut self, token: &str, at: Point, routes: Vec<(String, Vec<Point>, Option<String>)>) {
        let routes = routes
            .into_iter()
            .map(|(id, pts, avoid)| Route { id, worldline: line(pts), avoid })
            .collect();
        self.push(Event::BroadcastClassical { token: token.into(), at, routes });
    }
}

fn edge_units(n: usize) -> Result<Vec<Vec<usize>>> {
    if n == 1 {
        return Ok(vec![vec![0]]);
    }
    Ok(edge_code_build(n)?.edges.iter().map(|&(i, j)| vec![i - 1, j - 1]).collect())
}

fn unit_tag(ends: &[usize]) -> String {
    ends.iter().map(|e| (e + 1).to_string()).collect()
}

fn decoder_for(n: usize, shares: Vec<String>, labels: &[String]) -> Result<Decoder> {
    let (scheme, recipes) = match n {
        1 | 2 => (DecodeScheme::Single, labels.iter().map(|l| Recipe { label: l.clone(), shares: vec![1] }).collect()),
        _ => {
            let code = edge_code_build(n)?;
            let scheme = if n == 3 { DecodeScheme::Code23 } else { DecodeScheme::Symbolic { n } };
            let recipes = (1..=n)
                .map(|v| Recipe { label: labels[v - 1].clone(), shares: code.star(v).into_iter().map(|k| k + 1).collect() })
                .collect();
            (scheme, recipes)
        }
    };
    Ok(Decoder { scheme, shares, recipes })
}

/// Encode the secret; returns share token names (one per unit).
fn encode_secret(b: &mut Builder, n: usize, units: &[Vec<usize>]) -> Vec<String> {
    if n == 1 {
        return vec![SECRET.to_string()];
    }
    let shares: Vec<String> = units.iter().map(|u| format!("S{}", unit_tag(u))).collect();
    b.push(Event::EncodeScheme {
        scheme: Scheme::EdgeCode { n },
        inputs: vec![SECRET.into()],
        outputs: shares.clone(),
        at: b.start.clone(),
    });
    shares
}

// ---------------------------------------------------------------------------
// localize-exclude

/// Points `[s, p, q]` of a monotone curve from `s` through `a` then `b`.
fn direct_path(s: &Point, a: &Region, b: &Region) -> Option<Vec<Point>> {
    for da in &a.diamonds {
        let p = join_uv(s, &da.c);
        if !leq(&p, &da.r) {
            continue;
        }
        for db in &b.diamonds {
            let q = join_uv(&p, &db.c);
            if leq(&q, &db.r) {
                return Some(vec![s.clone(), p, q]);
            }
        }
    }
    None
}

fn reachable_point(s: &Point, a: &Region) -> Option<Point> {
    a.diamonds.iter().find(|d| leq(s, &d.r)).map(|d| join_uv(s, &d.c))
}

pub fn plan_localize_exclude(t: &TaskSpec) -> Result<ProtocolPlan> {
    let verdict = check_localize_exclude(t)?;
    if !verdict.feasible {
        return Err(refuse(&verdict));
    }
    if t.dim != 1 {
        return Err(Error::Unsupported("localize-exclude planning needs escape paths, available in 1+1 only".into()));
    }
    let auth = t.authorized_regions()?;
    let unauth = t.unauthorized_regions()?;
    let (n, m) = (auth.len(), unauth.len());
    let mut pts: Vec<&Point> = vec![&t.start];
    for r in auth.iter().chain(&unauth) {
        for d in &r.diamonds {
            pts.push(&d.c);
            pts.push(&d.r);
        }
    }
    let origin = far_past(&pts, 1);
    let mut b = Builder { events: Vec::new(), origin: origin.clone(), start: t.start.clone(), d: t.secret_dim };
    let units = edge_units(n)?;
    let start_region = Region::point("s", t.start.clone());

    // key material first: it lives in the far past
    let mut pad_inputs: Vec<Vec<String>> = vec![Vec::new(); units.len()];
    if m > 0 {
        for (ui, ends) in units.iter().enumerate() {
            let tag = unit_tag(ends);
            let key = format!("k{tag}");
            b.push(Event::EncodeScheme {
                scheme: Scheme::KeyGen { bytes: PAD_KEY_BYTES },
                inputs: vec![],
                outputs: vec![key.clone()],
                at: origin.clone(),
            });
            let mut targets: Vec<(String, &Region)> = vec![("s".into(), &start_region)];
            targets.extend(ends.iter().map(|&e| (format!("v{}", e + 1), &auth[e])));
            for (copy, target) in targets {
                let parts: Vec<String> = (1..=m).map(|l| format!("{key}.{copy}.{l}")).collect();
                b.push(Event::EncodeScheme {
                    scheme: Scheme::XorSplit { m },
                    inputs: vec![key.clone()],
                    outputs: parts.clone(),
                    at: origin.clone(),
                });
                for (l, part) in parts.iter().enumerate() {
                    let esc = extract_escape_path(target, &unauth[l])?
                        .ok_or_else(|| Error::Internal(format!("no escape path through {} avoiding {}", target.name, unauth[l].name)))?;
                    let mut path = vec![origin.clone()];
                    path.extend(esc.vertices);
                    let id = format!("{part}.r");
                    if copy == "s" {
                        pad_inputs[ui].push(id.clone());
                    }
                    b.broadcast(part, origin.clone(), vec![(id, path, Some(unauth[l].name.clone()))]);
                }
            }
        }
    }

    let shares = encode_secret(&mut b, n, &units);
    for (ui, ends) in units.iter().enumerate() {
        let tag = unit_tag(ends);
        let share = &shares[ui];
        if m > 0 {
            let mut inputs = vec![share.clone()];
            inputs.extend(pad_inputs[ui].iter().cloned());
            b.push(Event::EncodeScheme { scheme: Scheme::Qotp, inputs, outputs: vec![share.clone()], at: t.start.clone() });
        }
        if ends.len() == 1 {
            let p = reachable_point(&t.start, &auth[ends[0]])
                .ok_or_else(|| Error::Internal("authorized region not reachable".into()))?;
            b.mv(share, vec![t.start.clone(), p]);
            continue;
        }
        let (ra, rb) = (&auth[ends[0]], &auth[ends[1]]);
        if let Some(path) = direct_path(&t.start, ra, rb).or_else(|| direct_path(&t.start, rb, ra)) {
            b.mv(share, path);
            continue;
        }
        // teleport onto a partner that passes through both regions
        let mut partner = None;
        'outer: for (x, y) in [(ra, rb), (rb, ra)] {
            for dx in &x.diamonds {
                for dy in &y.diamonds {
                    if leq(&dx.c, &dy.r) {
                        partner = Some(vec![dx.c.clone(), join_uv(&dx.c, &dy.c)]);
                        break 'outer;
                    }
                }
            }
        }
        let partner = partner.ok_or_else(|| Error::Internal(format!("regions of unit {tag} are not connected")))?;
        let (_, o) = b.teleport(&tag, share, partner);
        let routes = ends
            .iter()
            .enumerate()
            .map(|(k, &e)| {
                let p = reachable_point(&t.start, &auth[e]).ok_or_else(|| Error::Internal("authorized region not reachable".into()))?;
                Ok((format!("{o}.{}", k + 1), vec![t.start.clone(), p], None))
            })
            .collect::<Result<Vec<_>>>()?;
        b.broadcast(&o, t.start.clone(), routes);
    }

    let labels: Vec<String> = t.authorized.iter().map(|s| set_label(s)).collect();
    let graph = CausalGraph::from_diamond_sets(labels.clone(), &auth.iter().map(|r| r.diamonds.clone()).collect::<Vec<_>>());
    Ok(ProtocolPlan {
        kind: t.kind,
        secret_dim: t.secret_dim,
        start: t.start.clone(),
        origin,
        events: b.events,
        decoder: decoder_for(n, shares, &labels)?,
        graph: Some(graph),
    })
}

// ---------------------------------------------------------------------------
// assembly and summoning

struct Named<'a> {
    name: &'a str,
    d: &'a Diamond,
}

fn named<'a>(t: &'a TaskSpec, names: &'a [String]) -> Vec<Named<'a>> {
    names.iter().filter_map(|n| t.diamond(n).map(|d| Named { name: n, d })).collect()
}

fn all_points(t: &TaskSpec) -> Vec<&Point> {
    let mut pts = vec![&t.start];
    for d in &t.diamonds {
        pts.push(&d.diamond.c);
        pts.push(&d.diamond.r);
    }
    pts
}

/// Diamond set hand-over construction shared by assembly and summoning.
fn diamond_set_plan(t: &TaskSpec, sets: &[Vec<String>], unauth: &[Vec<String>]) -> Result<ProtocolPlan> {
    let n = sets.len();
    let m = unauth.len();
    let origin = far_past(&all_points(t), t.dim);
    let mut b = Builder { events: Vec::new(), origin: origin.clone(), start: t.start.clone(), d: t.secret_dim };
    let units = edge_units(n)?;
    let s = t.start.clone();

    // key material
    let mut pad_inputs: Vec<Vec<String>> = vec![Vec::new(); units.len()];
    if m > 0 {
        for (ui, ends) in units.iter().enumerate() {
            let tag = unit_tag(ends);
            let key = format!("k{tag}");
            b.push(Event::EncodeScheme {
                scheme: Scheme::KeyGen { bytes: PAD_KEY_BYTES },
                inputs: vec![],
                outputs: vec![key.clone()],
                at: origin.clone(),
            });
            let at_s = format!("{key}.s");
            b.broadcast(&key, origin.clone(), vec![(at_s.clone(), vec![origin.clone(), s.clone()], None)]);
            pad_inputs[ui].push(at_s);
            for &e in ends {
                let copy = format!("v{}", e + 1);
                let parts: Vec<String> = (1..=m).map(|l| format!("{key}.{copy}.{l}")).collect();
                b.push(Event::EncodeScheme {
                    scheme: Scheme::XorSplit { m },
                    inputs: vec![key.clone()],
                    outputs: parts.clone(),
                    at: origin.clone(),
                });
                for (l, part) in parts.iter().enumerate() {
                    let (dstar, predicate) = key_release(t, &sets[e], &unauth[l])?;
                    let r = t.diamond(&dstar).expect("validated").r.clone();
                    let id = format!("{part}.r");
                    b.broadcast(part, origin.clone(), vec![(id.clone(), vec![origin.clone(), r.clone()], None)]);
                    b.push(Event::HandOver { diamond: dstar, tokens: vec![id], at: r, predicate });
                }
            }
        }
    }

    let shares = encode_secret(&mut b, n, &units);
    for (ui, ends) in units.iter().enumerate() {
        let tag = unit_tag(ends);
        let share = shares[ui].clone();
        if m > 0 {
            let mut inputs = vec![share.clone()];
            inputs.extend(pad_inputs[ui].iter().cloned());
            b.push(Event::EncodeScheme { scheme: Scheme::Qotp, inputs, outputs: vec![share.clone()], at: s.clone() });
        }
        let (hub, other) = choose_hub(t, sets, ends)?;
        let (hd, od) = (t.diamond(&hub).expect("validated").clone(), t.diamond(&other).expect("validated").clone());
        let carrier = if leq(&s, &hd.c) {
            b.mv(&share, vec![s.clone(), hd.c.clone()]);
            share
        } else {
            let (f, o) = b.teleport(&tag, &share, vec![hd.c.clone()]);
            let mut routes = Vec::new();
            let mut handovers = Vec::new();
            for (k, &e) in ends.iter().enumerate() {
                let target = named(t, &sets[e])
                    .into_iter()
                    .find(|x| leq(&s, &x.d.r))
                    .ok_or_else(|| Error::Internal("no return point after the start".into()))?;
                let id = format!("{o}.{}", k + 1);
                routes.push((id.clone(), vec![s.clone(), target.d.r.clone()], None));
                handovers.push(Event::HandOver {
                    diamond: target.name.to_string(),
                    tokens: vec![id],
                    at: target.d.r.clone(),
                    predicate: Predicate::Call(target.name.to_string()),
                });
            }
            b.broadcast(&o, s.clone(), routes);
            handovers.into_iter().for_each(|h| b.push(h));
            f
        };
        if hub == other {
            b.mv(&carrier, vec![hd.c.clone(), hd.r.clone()]);
            b.push(Event::HandOver { diamond: hub.clone(), tokens: vec![carrier], at: hd.r.clone(), predicate: Predicate::Call(hub) });
        } else {
            b.push(Event::ConditionalRoute {
                token: carrier.clone(),
                at: hd.c.clone(),
                predicate: Predicate::Call(hub.clone()),
                if_true: line(vec![hd.c.clone(), hd.r.clone()]),
                if_false: line(vec![hd.c.clone(), od.r.clone()]),
            });
            b.push(Event::HandOver { diamond: hub.clone(), tokens: vec![carrier.clone()], at: hd.r.clone(), predicate: Predicate::Call(hub) });
            b.push(Event::HandOver { diamond: other.clone(), tokens: vec![carrier], at: od.r.clone(), predicate: Predicate::Call(other) });
        }
    }

    let labels: Vec<String> = sets.iter().map(|x| set_label(x)).collect();
    let diamond_sets: Vec<Vec<Diamond>> = sets.iter().map(|x| named(t, x).iter().map(|n| n.d.clone()).collect()).collect();
    Ok(ProtocolPlan {
        kind: t.kind,
        secret_dim: t.secret_dim,
        start: s,
        origin,
        events: b.events,
        decoder: decoder_for(n, shares, &labels)?,
        graph: Some(CausalGraph::from_diamond_sets(labels, &diamond_sets)),
    })
}

/// Hub diamond whose call point precedes the other diamond's return point.
/// Hubs reachable directly from the start point are preferred.
fn choose_hub(t: &TaskSpec, sets: &[Vec<String>], ends: &[usize]) -> Result<(String, String)> {
    let mut candidates = Vec::new();
    let pairs: Vec<(usize, usize)> = if ends.len() == 1 { vec![(ends[0], ends[0])] } else { vec![(ends[0], ends[1]), (ends[1], ends[0])] };
    for (x, y) in pairs {
        for dx in named(t, &sets[x]) {
            for dy in named(t, &sets[y]) {
                if (ends.len() == 1 && dx.name != dy.name) || !leq(&dx.d.c, &dy.d.r) {
                    continue;
                }
                candidates.push((dx.name.to_string(), dy.name.to_string(), leq(&t.start, &dx.d.c)));
            }
        }
    }
    candidates
        .iter()
        .find(|c| c.2)
        .or_else(|| candidates.first())
        .map(|c| (c.0.clone(), c.1.clone()))
        .ok_or_else(|| Error::Internal("sets are not causally connected".into()))
}

/// Where and when a key share for set `a` may be released without helping `u`.
fn key_release(t: &TaskSpec, a: &[String], u: &[String]) -> Result<(String, Predicate)> {
    let uset: BTreeSet<&String> = u.iter().collect();
    if let Some(d) = a.iter().find(|d| !uset.contains(d)) {
        return Ok((d.clone(), Predicate::Call(d.clone())));
    }
    let aset: BTreeSet<&String> = a.iter().collect();
    let rest: Vec<&String> = u.iter().filter(|x| !aset.contains(x)).collect();
    for d in a {
        let dr = &t.diamond(d).expect("validated").r;
        let visible: Vec<&String> = rest.iter().copied().filter(|x| leq(&t.diamond(x).expect("validated").c, dr)).collect();
        if !visible.is_empty() {
            let mut ps = vec![Predicate::Call(d.clone())];
            ps.extend(visible.into_iter().map(|x| Predicate::NoCall(x.clone())));
            return Ok((d.clone(), Predicate::And(ps)));
        }
    }
    Err(Error::Unsupported(format!(
        "no diamond of {} sees a call point of {}; only the opposite causal direction holds",
        set_label(a),
        set_label(u)
    )))
}

pub fn plan_assembly(t: &TaskSpec) -> Result<ProtocolPlan> {
    let verdict = check_assembly(t)?;
    if !verdict.feasible {
        return Err(refuse(&verdict));
    }
    diamond_set_plan(t, &t.authorized, &t.unauthorized)
}

pub fn plan_summoning(t: &TaskSpec) -> Result<ProtocolPlan> {
    let TaskKind::Summoning(variant) = t.kind else {
        return Err(Error::InvalidTask("expected a summoning task".into()));
    };
    let verdict = check_summoning(t)?;
    if variant == SummoningVariant::UnrestrictedCallSingleReturn {
        if !verdict.feasible {
            return Err(refuse(&verdict));
        }
        return Err(Error::Unsupported("no construction is implemented for unrestricted-call single-return summoning".into()));
    }
    if !verdict.feasible {
        return Err(refuse(&verdict));
    }
    if variant == SummoningVariant::ManyCallManyReturn {
        return diamond_set_plan(t, &t.authorized_sets(), &[]);
    }
    match t.diamonds.len() {
        2 => teleport_pair_plan(t),
        3 => match rotation_order(t) {
            Some(order) => rotation_plan(t, &order),
            None => diamond_set_plan(t, &t.authorized_sets(), &[]),
        },
        _ => diamond_set_plan(t, &t.authorized_sets(), &[]),
    }
}

/// Two diamonds: teleport from the start point onto a partner held at the hub's
/// call point, routed by the hub's call bit.
fn teleport_pair_plan(t: &TaskSpec) -> Result<ProtocolPlan> {
    let (d1, d2) = (&t.diamonds[0], &t.diamonds[1]);
    let (hub, other) = if leq(&d1.diamond.c, &d2.diamond.r) { (d1, d2) } else { (d2, d1) };
    let origin = far_past(&all_points(t), t.dim);
    let s = t.start.clone();
    let mut b = Builder { events: Vec::new(), origin: origin.clone(), start: s.clone(), d: t.secret_dim };
    let (f, o) = b.teleport("", SECRET, vec![hub.diamond.c.clone()]);
    let copies: Vec<(String, String, Point)> = [hub, other]
        .iter()
        .map(|d| (format!("{o}.{}", d.name), d.name.clone(), d.diamond.r.clone()))
        .collect();
    b.broadcast(&o, s.clone(), copies.iter().map(|(id, _, r)| (id.clone(), vec![s.clone(), r.clone()], None)).collect());
    b.push(Event::ConditionalRoute {
        token: f.clone(),
        at: hub.diamond.c.clone(),
        predicate: Predicate::Call(hub.name.clone()),
        if_true: line(vec![hub.diamond.c.clone(), hub.diamond.r.clone()]),
        if_false: line(vec![hub.diamond.c.clone(), other.diamond.r.clone()]),
    });
    for (id, name, r) in copies {
        b.push(Event::HandOver {
            diamond: name.clone(),
            tokens: vec![f.clone(), id],
            at: r,
            predicate: Predicate::Call(name),
        });
    }
    let labels = vec![hub.name.clone(), other.name.clone()];
    Ok(ProtocolPlan {
        kind: t.kind,
        secret_dim: t.secret_dim,
        start: s,
        origin,
        events: b.events,
        decoder: Decoder {
            scheme: DecodeScheme::Single,
            shares: vec![SECRET.into()],
            recipes: labels.into_iter().map(|l| Recipe { label: l, shares: vec![1] }).collect(),
        },
        graph: None,
    })
}

/// Cyclic order (i0, i1, i2) with each call point preceding the next return point,
/// every call point in the future of the start point.
fn rotation_order(t: &TaskSpec) -> Option<[usize; 3]> {
    if t.secret_dim != 3 || !t.diamonds.iter().all(|d| leq(&t.start, &d.diamond.c)) {
        return None;
    }
    let ok = |o: [usize; 3]| (0..3).all(|k| leq(&t.diamonds[o[k]].diamond.c, &t.diamonds[o[(k + 1) % 3]].diamond.r));
    [[0, 1, 2], [0, 2, 1]].into_iter().find(|&o| ok(o))
}

/// Three shares, one per call point; each goes to its own return point when
/// called and to the next one otherwise.
fn rotation_plan(t: &TaskSpec, order: &[usize; 3]) -> Result<ProtocolPlan> {
    let origin = far_past(&all_points(t), t.dim);
    let s = t.start.clone();
    let mut b = Builder { events: Vec::new(), origin: origin.clone(), start: s.clone(), d: 3 };
    let shares: Vec<String> = (1..=3).map(|i| format!("S{i}")).collect();
    b.push(Event::EncodeScheme { scheme: Scheme::EdgeCode { n: 3 }, inputs: vec![SECRET.into()], outputs: shares.clone(), at: s.clone() });
    // share k belongs to diamond order[k]
    for k in 0..3 {
        let here = &t.diamonds[order[k]];
        let next = &t.diamonds[order[(k + 1) % 3]];
        b.mv(&shares[k], vec![s.clone(), here.diamond.c.clone()]);
        b.push(Event::ConditionalRoute {
            token: shares[k].clone(),
            at: here.diamond.c.clone(),
            predicate: Predicate::Call(here.name.clone()),
            if_true: line(vec![here.diamond.c.clone(), here.diamond.r.clone()]),
            if_false: line(vec![here.diamond.c.clone(), next.diamond.r.clone()]),
        });
    }
    let mut recipes = Vec::new();
    for k in 0..3 {
        let here = &t.diamonds[order[k]];
        let prev = (k + 2) % 3;
        b.push(Event::HandOver {
            diamond: here.name.clone(),
            tokens: vec![shares[k].clone(), shares[prev].clone()],
            at: here.diamond.r.clone(),
            predicate: Predicate::Call(here.name.clone()),
        });
        let mut idx = vec![k + 1, prev + 1];
        idx.sort_unstable();
        recipes.push(Recipe { label: here.name.clone(), shares: idx });
    }
    recipes.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(ProtocolPlan {
        kind: t.kind,
        secret_dim: 3,
        start: s,
        origin,
        events: b.events,
        decoder: Decoder { scheme: DecodeScheme::Code23, shares, recipes },
        graph: None,
    })
}

/// Transfer protocol on three pairs of diamonds.
pub fn plan_pit(t: &TaskSpec) -> Result<ProtocolPlan> {
    if t.kind != TaskKind::PartyIndependentTransfer {
        return Err(Error::InvalidTask("expected a party_independent_transfer task".into()));
    }
    if t.secret_dim != 3 {
        return Err(Error::Refused("transfer needs a qutrit secret".into()));
    }
    let pairs = t.pit_pairs()?;
    let d = |n: &str| t.diamond(n).expect("validated");
    for (x1, x2) in &pairs {
        let (a, b) = (d(x1), d(x2));
        if !(leq(&t.start, &a.c) && leq(&a.c, &b.r) && leq(&b.c, &a.r)) {
            return Err(Error::Refused(format!("wrong diamond topology: pair {x1}/{x2} is not mutually connected from the start")));
        }
        for (y1, y2) in &pairs {
            if y1 == x1 {
                continue;
            }
            for (p, q) in [(x1, y1), (x1, y2), (x2, y1), (x2, y2)] {
                if crate::geometry::diamonds_connected(d(p), d(q)) {
                    return Err(Error::Refused(format!("wrong diamond topology: {p} and {q} are causally connected")));
                }
            }
        }
    }
    let origin = far_past(&all_points(t), t.dim);
    let s = t.start.clone();
    let mut b = Builder { events: Vec::new(), origin: origin.clone(), start: s.clone(), d: 3 };
    let shares: Vec<String> = pairs.iter().map(|(x1, _)| format!("S_{}", &x1[..x1.len() - 1])).collect();
    b.push(Event::EncodeScheme { scheme: Scheme::EdgeCode { n: 3 }, inputs: vec![SECRET.into()], outputs: shares.clone(), at: s.clone() });
    for ((x1, x2), share) in pairs.iter().zip(&shares) {
        let (a, bb) = (d(x1), d(x2));
        b.mv(share, vec![s.clone(), a.c.clone()]);
        b.push(Event::ConditionalRoute {
            token: share.clone(),
            at: a.c.clone(),
            predicate: Predicate::Call(x1.clone()),
            if_true: line(vec![a.c.clone(), a.r.clone()]),
            if_false: line(vec![a.c.clone(), bb.r.clone()]),
        });
        b.push(Event::HandOver {
            diamond: x1.clone(),
            tokens: vec![share.clone()],
            at: a.r.clone(),
            predicate: Predicate::And(vec![Predicate::Call(x1.clone()), Predicate::NoCall(x2.clone())]),
        });
        b.push(Event::HandOver {
            diamond: x2.clone(),
            tokens: vec![share.clone()],
            at: bb.r.clone(),
            predicate: Predicate::And(vec![Predicate::Call(x2.clone()), Predicate::NoCall(x1.clone())]),
        });
    }
    let tags: Vec<String> = shares.iter().map(|s| s[2..].to_string()).collect();
    let recipes = [(1, 2), (1, 3), (2, 3)]
        .iter()
        .map(|&(i, j)| Recipe { label: format!("{}{}", tags[i - 1], tags[j - 1]), shares: vec![i, j] })
        .collect();
    Ok(ProtocolPlan {
        kind: t.kind,
        secret_dim: 3,
        start: s,
        origin,
        events: b.events,
        decoder: Decoder { scheme: DecodeScheme::Code23, shares, recipes },
        graph: None,
    })
}

/// Plan any supported task.
pub fn plan_task(t: &TaskSpec) -> Result<ProtocolPlan> {
    match t.kind {
        TaskKind::LocalizeExclude => plan_localize_exclude(t),
        TaskKind::StateAssembly => plan_assembly(t),
        TaskKind::Summoning(_) => plan_summoning(t),
        TaskKind::PartyIndependentTransfer => plan_pit(t),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    pub n: usize,
    pub m: usize,
    pub key_bits: usize,
    /// One share per pair of authorized regions.
    pub quantum_shares: usize,
    /// Qubit count quoted for qubit secrets, 2·C(n,2).
    pub qubits: usize,
    /// Classical bits moved under XOR sharing: three key copies per share, split m ways.
    pub xor_bits: usize,
    /// Order-of-magnitude estimate m²·n²·log₂(m) under threshold sharing.
    pub shamir_bits_asymptotic: f64,
}

pub fn scheme_cost(n: usize, m: usize, key_bits: usize) -> Result<CostReport> {
    if n < 2 {
        return Err(Error::InvalidTask("cost report needs at least two authorized regions".into()));
    }
    let shares = share_count(n);
    let log_m = if m > 1 { (m as f64).log2() } else { 0.0 };
    Ok(CostReport {
        n,
        m,
        key_bits,
        quantum_shares: shares,
        qubits: qubit_cost_formula(n),
        xor_bits: 3 * m * shares * key_bits,
        shamir_bits_asymptotic: (m * m * n * n) as f64 * log_m,
    })
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "authorized regions      {}", self.n)?;
        writeln!(f, "unauthorized regions    {}", self.m)?;
        writeln!(f, "key bits per share      {}", self.key_bits)?;
        writeln!(f, "quantum shares          {}", self.quantum_shares)?;
        writeln!(f, "qubits (2*C(n,2))       {}", self.qubits)?;
        writeln!(f, "xor classical bits      {}", self.xor_bits)?;
        write!(f, "threshold bits (asymptotic, m^2 n^2 log m) {:.1}", self.shamir_bits_asymptotic)
    }
}
