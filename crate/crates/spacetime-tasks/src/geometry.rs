//! Causal structure of flat spacetime: points, closed causal diamonds, regions,
//! and the exact 1+1 escape predicate.

use crate::error::{Error, Result};
use std::fmt;

/// A spacetime event. `x` holds the spatial coordinates; units have c = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub t: f64,
    pub x: Vec<f64>,
}

impl Point {
    pub fn new(t: f64, x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidTask("a point needs at least one spatial coordinate".into()));
        }
        if !t.is_finite() || x.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point { t, x })
    }

    /// Point in 1+1 dimensions.
    pub fn p1(t: f64, x: f64) -> Self {
        Point { t, x: vec![x] }
    }

    /// Point in 1+1 dimensions from light-cone coordinates u = t - x, v = t + x.
    pub fn from_uv(u: f64, v: f64) -> Self {
        Point::p1(0.5 * (u + v), 0.5 * (v - u))
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Light-cone coordinates of a 1+1 point.
    pub fn uv(&self) -> (f64, f64) {
        debug_assert_eq!(self.dim(), 1);
        (self.t - self.x[0], self.t + self.x[0])
    }

    pub fn spatial_distance(&self, other: &Point) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn lerp(&self, other: &Point, s: f64) -> Point {
        Point {
            t: self.t + s * (other.t - self.t),
            x: self.x.iter().zip(&other.x).map(|(a, b)| a + s * (b - a)).collect(),
        }
    }

    fn euclid_len(&self, other: &Point) -> f64 {
        let dt = other.t - self.t;
        (dt * dt + self.spatial_distance(other).powi(2)).sqrt()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.t)?;
        for c in &self.x {
            write!(f, ",{c}")?;
        }
        write!(f, ")")
    }
}

fn check_dims(p: &Point, q: &Point) -> Result<()> {
    if p.dim() != q.dim() {
        Err(Error::DimMismatch(p.dim(), q.dim()))
    } else {
        Ok(())
    }
}

/// `p ≼ q`: q lies in the closed causal future of p.
pub fn causal_leq(p: &Point, q: &Point) -> Result<bool> {
    check_dims(p, q)?;
    Ok(leq_unchecked(p, q))
}

fn leq_unchecked(p: &Point, q: &Point) -> bool {
    if p.dim() == 1 {
        let (up, vp) = p.uv();
        let (uq, vq) = q.uv();
        uq >= up && vq >= vp
    } else {
        q.t - p.t >= p.spatial_distance(q)
    }
}

/// Closed causal diamond J⁺(c) ∩ J⁻(r).
#[derive(Clone, Debug, PartialEq)]
pub struct Diamond {
    pub c: Point,
    pub r: Point,
}

impl Diamond {
    pub fn new(c: Point, r: Point) -> Result<Self> {
        if !causal_leq(&c, &r)? {
            return Err(Error::InvalidTask(format!("diamond not causal: {c} does not precede {r}")));
        }
        Ok(Diamond { c, r })
    }

    pub fn point(p: Point) -> Self {
        Diamond { c: p.clone(), r: p }
    }

    /// Diamond in 1+1 from its light-cone box.
    pub fn from_box(u: (f64, f64), v: (f64, f64)) -> Result<Self> {
        if u.0 > u.1 || v.0 > v.1 {
            return Err(Error::InvalidTask("box bounds reversed".into()));
        }
        Diamond::new(Point::from_uv(u.0, v.0), Point::from_uv(u.1, v.1))
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    /// `[u_min, u_max, v_min, v_max]` for a 1+1 diamond.
    pub fn uv_box(&self) -> [f64; 4] {
        let (uc, vc) = self.c.uv();
        let (ur, vr) = self.r.uv();
        [uc, ur, vc, vr]
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim() && leq_unchecked(&self.c, p) && leq_unchecked(p, &self.r)
    }

    pub fn is_point(&self) -> bool {
        self.c == self.r
    }
}

/// A finite union of closed diamonds.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub name: String,
    pub dim: usize,
    pub diamonds: Vec<Diamond>,
}

impl Region {
    pub fn new(name: impl Into<String>, diamonds: Vec<Diamond>) -> Result<Self> {
        let name = name.into();
        let first = diamonds
            .first()
            .ok_or_else(|| Error::InvalidTask(format!("region {name} has no diamonds")))?;
        let dim = first.dim();
        if let Some(d) = diamonds.iter().find(|d| d.dim() != dim) {
            return Err(Error::DimMismatch(dim, d.dim()));
        }
        Ok(Region { name, dim, diamonds })
    }

    pub fn point(name: impl Into<String>, p: Point) -> Self {
        Region { name: name.into(), dim: p.dim(), diamonds: vec![Diamond::point(p)] }
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.diamonds.iter().any(|d| d.contains(p))
    }

    /// Union of several regions under a new name.
    pub fn union<'a>(name: impl Into<String>, parts: impl IntoIterator<Item = &'a Region>) -> Result<Self> {
        Region::new(name, parts.into_iter().flat_map(|r| r.diamonds.iter().cloned()).collect())
    }
}

/// Ordered vertices of a piecewise-linear worldline.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polyline {
    pub vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Self {
        Polyline { vertices }
    }

    /// Index of the first segment that is not future-directed causal.
    pub fn first_non_causal_segment(&self) -> Option<usize> {
        self.vertices
            .windows(2)
            .position(|w| w[0].dim() != w[1].dim() || !leq_unchecked(&w[0], &w[1]))
    }

    pub fn start(&self) -> Option<&Point> {
        self.vertices.first()
    }

    pub fn end(&self) -> Option<&Point> {
        self.vertices.last()
    }
}

fn check_region_dims(a: &Region, b: &Region) -> Result<()> {
    if a.dim != b.dim {
        Err(Error::DimMismatch(a.dim, b.dim))
    } else {
        Ok(())
    }
}

/// Some point of one diamond is causally related to some point of the other.
pub fn diamonds_connected(a: &Diamond, b: &Diamond) -> bool {
    leq_unchecked(&a.c, &b.r) || leq_unchecked(&b.c, &a.r)
}

pub fn regions_causally_connected(a: &Region, b: &Region) -> Result<bool> {
    check_region_dims(a, b)?;
    Ok(a.diamonds.iter().any(|d1| b.diamonds.iter().any(|d2| diamonds_connected(d1, d2))))
}

pub fn region_in_future(s: &Point, a: &Region) -> Result<bool> {
    if s.dim() != a.dim {
        return Err(Error::DimMismatch(s.dim(), a.dim));
    }
    Ok(a.diamonds.iter().any(|d| leq_unchecked(s, &d.r)))
}

// ---------------------------------------------------------------------------
// Exact escape search in 1+1.
//
// Sorted breakpoints b_0 < … < b_{k-1} split an axis into 2k+1 slots: even
// slot 2i is the open interval (b_{i-1}, b_i), odd slot 2i+1 is the point b_i.
// A plane element is a pair of slots. Monotone curves move between elements
// one slot at a time per axis; a simultaneous step on both axes is only
// possible when both axes go interval→point or both go point→interval.

struct Axis {
    bps: Vec<f64>,
}

impl Axis {
    fn new(mut vals: Vec<f64>) -> Self {
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        Axis { bps: vals }
    }

    fn slots(&self) -> usize {
        2 * self.bps.len() + 1
    }

    /// Does slot `k` meet the closed interval `[lo, hi]`?
    fn meets(&self, k: usize, lo: f64, hi: f64) -> bool {
        if k % 2 == 1 {
            let b = self.bps[k / 2];
            lo <= b && b <= hi
        } else {
            let i = k / 2;
            let left = if i == 0 { f64::NEG_INFINITY } else { self.bps[i - 1] };
            let right = if i == self.bps.len() { f64::INFINITY } else { self.bps[i] };
            lo < right && hi > left
        }
    }

    fn representative(&self, k: usize, margin: f64) -> f64 {
        let n = self.bps.len();
        if k % 2 == 1 {
            self.bps[k / 2]
        } else if k == 0 {
            self.bps[0] - margin
        } else if k == 2 * n {
            self.bps[n - 1] + margin
        } else {
            0.5 * (self.bps[k / 2 - 1] + self.bps[k / 2])
        }
    }
}

struct Arrangement {
    ua: Axis,
    va: Axis,
    free: Vec<bool>,
    target: Vec<bool>,
}

type Links = Vec<Option<usize>>;

impl Arrangement {
    fn build(through: &[Diamond], avoiding: &[Diamond]) -> Result<Self> {
        for d in through.iter().chain(avoiding) {
            if d.dim() != 1 {
                return Err(Error::Unsupported(
                    "exact escape search is 1+1 only; supply a witness curve instead".into(),
                ));
            }
        }
        let boxes_t: Vec<[f64; 4]> = through.iter().map(Diamond::uv_box).collect();
        let boxes_o: Vec<[f64; 4]> = avoiding.iter().map(Diamond::uv_box).collect();
        let all = boxes_t.iter().chain(&boxes_o);
        let ua = Axis::new(all.clone().flat_map(|b| [b[0], b[1]]).collect());
        let va = Axis::new(all.flat_map(|b| [b[2], b[3]]).collect());
        let (nu, nv) = (ua.slots(), va.slots());
        let mut free = vec![true; nu * nv];
        let mut target = vec![false; nu * nv];
        for a in 0..nu {
            for b in 0..nv {
                let hit = |bx: &[f64; 4]| ua.meets(a, bx[0], bx[1]) && va.meets(b, bx[2], bx[3]);
                free[a * nv + b] = !boxes_o.iter().any(hit);
                target[a * nv + b] = boxes_t.iter().any(hit);
            }
        }
        Ok(Arrangement { ua, va, free, target })
    }

    fn nv(&self) -> usize {
        self.va.slots()
    }

    fn nu(&self) -> usize {
        self.ua.slots()
    }

    /// Reachability from the lower-left corner (`forward`) or to the upper-right
    /// corner (`!forward`), with the predecessor used for path recovery.
    fn sweep(&self, forward: bool) -> (Vec<bool>, Vec<Option<usize>>) {
        let (nu, nv) = (self.nu(), self.nv());
        let mut reach = vec![false; nu * nv];
        let mut link = vec![None; nu * nv];
        let order: Vec<(usize, usize)> = (0..nu).flat_map(|a| (0..nv).map(move |b| (a, b))).collect();
        let iter: Box<dyn Iterator<Item = &(usize, usize)>> =
            if forward { Box::new(order.iter()) } else { Box::new(order.iter().rev()) };
        for &(a, b) in iter {
            let idx = a * nv + b;
            if !self.free[idx] {
                continue;
            }
            let is_corner = if forward { a == 0 && b == 0 } else { a == nu - 1 && b == nv - 1 };
            if is_corner {
                reach[idx] = true;
                continue;
            }
            let mut cands: Vec<(usize, usize)> = Vec::with_capacity(3);
            if forward {
                if a > 0 {
                    cands.push((a - 1, b));
                }
                if b > 0 {
                    cands.push((a, b - 1));
                }
                if a > 0 && b > 0 && a % 2 == b % 2 {
                    cands.push((a - 1, b - 1));
                }
            } else {
                if a + 1 < nu {
                    cands.push((a + 1, b));
                }
                if b + 1 < nv {
                    cands.push((a, b + 1));
                }
                if a + 1 < nu && b + 1 < nv && a % 2 == b % 2 {
                    cands.push((a + 1, b + 1));
                }
            }
            for (pa, pb) in cands {
                let p = pa * nv + pb;
                if reach[p] {
                    reach[idx] = true;
                    link[idx] = Some(p);
                    break;
                }
            }
        }
        (reach, link)
    }

    fn meeting_element(&self) -> Option<(usize, Links, Links)> {
        let (fwd, flink) = self.sweep(true);
        let (bwd, blink) = self.sweep(false);
        (0..fwd.len())
            .find(|&i| self.target[i] && fwd[i] && bwd[i])
            .map(|i| (i, flink, blink))
    }
}

pub fn escape_exists_diamonds(through: &[Diamond], avoiding: &[Diamond]) -> Result<bool> {
    if through.is_empty() {
        return Ok(false);
    }
    Ok(Arrangement::build(through, avoiding)?.meeting_element().is_some())
}

/// Whether some inextendible causal curve meets `through` while staying out of
/// the closed set `avoiding`. Equivalently, `through` is not contained in the
/// domain of dependence of `avoiding`.
pub fn escape_exists(through: &Region, avoiding: &Region) -> Result<bool> {
    check_region_dims(through, avoiding)?;
    escape_exists_diamonds(&through.diamonds, &avoiding.diamonds)
}

pub fn extract_escape_path_diamonds(through: &[Diamond], avoiding: &[Diamond]) -> Result<Option<Polyline>> {
    if through.is_empty() {
        return Ok(None);
    }
    let arr = Arrangement::build(through, avoiding)?;
    let Some((meet, flink, blink)) = arr.meeting_element() else {
        return Ok(None);
    };
    let mut chain = vec![meet];
    let mut cur = meet;
    while let Some(p) = flink[cur] {
        chain.push(p);
        cur = p;
    }
    chain.reverse();
    cur = meet;
    while let Some(n) = blink[cur] {
        chain.push(n);
        cur = n;
    }
    let span = {
        let b = &arr.ua.bps;
        let c = &arr.va.bps;
        (b[b.len() - 1] - b[0]).max(c[c.len() - 1] - c[0])
    };
    let margin = 1.0 + span;
    let nv = arr.nv();
    let mut pts: Vec<(f64, f64)> = chain
        .iter()
        .map(|&i| (arr.ua.representative(i / nv, margin), arr.va.representative(i % nv, margin)))
        .collect();
    pts.dedup();
    Ok(Some(Polyline::new(simplify(pts).into_iter().map(|(u, v)| Point::from_uv(u, v)).collect())))
}

/// A concrete escaping worldline, clipped to a box beyond all breakpoints.
pub fn extract_escape_path(through: &Region, avoiding: &Region) -> Result<Option<Polyline>> {
    check_region_dims(through, avoiding)?;
    extract_escape_path_diamonds(&through.diamonds, &avoiding.diamonds)
}

fn simplify(pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - b.1) - (b.1 - a.1) * (p.0 - b.0);
            if cross == 0.0 {
                out.pop();
            }
        }
        out.push(p);
    }
    out
}

/// Exact test of a straight 1+1 segment against a closed diamond; grazing counts.
pub fn segment_meets_diamond(p: &Point, q: &Point, d: &Diamond) -> bool {
    let (u0, v0) = p.uv();
    let (u1, v1) = q.uv();
    let [ul, uh, vl, vh] = d.uv_box();
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for (a, b, l, h) in [(u0, u1, ul, uh), (v0, v1, vl, vh)] {
        let da = b - a;
        if da == 0.0 {
            if a < l || a > h {
                return false;
            }
        } else {
            let (s0, s1) = ((l - a) / da, (h - a) / da);
            let (s0, s1) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
            lo = lo.max(s0);
            hi = hi.min(s1);
        }
    }
    lo <= hi
}

/// Sampled membership test of a segment against a diamond in any dimension.
pub fn segment_meets_diamond_sampled(p: &Point, q: &Point, d: &Diamond, step: f64) -> bool {
    let n = (p.euclid_len(q) / step).ceil().max(1.0) as usize;
    (0..=n).any(|k| d.contains(&p.lerp(q, k as f64 / n as f64)))
}

/// Slack used when deciding that a sample lies in the target set.
const THROUGH_SLACK: f64 = 1e-9;

fn near_contains(d: &Diamond, p: &Point) -> bool {
    d.contains(p) || {
        let grow = |q: &Point, s: f64| Point { t: q.t + s, x: q.x.clone() };
        Diamond { c: grow(&d.c, -THROUGH_SLACK), r: grow(&d.r, THROUGH_SLACK) }.contains(p)
    }
}

/// Checks a user-supplied witness curve. In 1+1 each segment is tested exactly;
/// in higher dimensions segments are sampled at spacing at most `step`, so
/// avoidance there is only as reliable as the sampling resolution.
pub fn verify_witness_curve(curve: &Polyline, through: &Region, avoiding: &Region, step: f64) -> Result<bool> {
    if curve.vertices.is_empty() {
        return Err(Error::InvalidTask("empty witness curve".into()));
    }
    if step.is_nan() || step <= 0.0 {
        return Err(Error::InvalidTask("sampling step must be positive".into()));
    }
    for v in &curve.vertices {
        if v.dim() != through.dim {
            return Err(Error::DimMismatch(v.dim(), through.dim));
        }
    }
    check_region_dims(through, avoiding)?;
    if let Some(segment) = curve.first_non_causal_segment() {
        return Err(Error::NotCausalCurve { segment });
    }
    if through.dim == 1 {
        // exact per-segment tests; a single vertex is its own segment
        let segs: Vec<(&Point, &Point)> = if curve.vertices.len() == 1 {
            vec![(&curve.vertices[0], &curve.vertices[0])]
        } else {
            curve.vertices.windows(2).map(|w| (&w[0], &w[1])).collect()
        };
        let meets = |r: &Region| segs.iter().any(|(p, q)| r.diamonds.iter().any(|d| segment_meets_diamond(p, q, d)));
        return Ok(meets(through) && !meets(avoiding));
    }
    let mut samples: Vec<Point> = vec![curve.vertices[0].clone()];
    for w in curve.vertices.windows(2) {
        let n = (w[0].euclid_len(&w[1]) / step).ceil().max(1.0) as usize;
        samples.extend((1..=n).map(|k| w[0].lerp(&w[1], k as f64 / n as f64)));
    }
    let hits = samples.iter().any(|p| through.diamonds.iter().any(|d| near_contains(d, p)));
    let enters = samples.iter().any(|p| avoiding.contains(p));
    Ok(hits && !enters)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(name: &str, u: (f64, f64), v: (f64, f64)) -> Region {
        Region::new(name, vec![Diamond::from_box(u, v).unwrap()]).unwrap()
    }

    #[test]
    fn causal_order_examples() {
        assert!(causal_leq(&Point::p1(0.0, 0.0), &Point::p1(2.0, 1.0)).unwrap());
        assert!(!causal_leq(&Point::p1(0.0, 0.0), &Point::p1(1.0, 2.0)).unwrap());
        let p = Point::new(0.0, vec![0.0, 0.0]).unwrap();
        let q = Point::new(1.5, vec![1.0, 0.0]).unwrap();
        assert!(causal_leq(&p, &q).unwrap());
        assert!(matches!(causal_leq(&p, &Point::p1(1.0, 0.0)), Err(Error::DimMismatch(2, 1))));
    }

    #[test]
    fn fig1_relations() {
        let a1 = bx("A1", (9.0, 11.0), (-1.0, 1.0));
        let a2 = bx("A2", (9.0, 11.0), (19.0, 21.0));
        let u1 = bx("U1", (1.0, 21.0), (9.0, 13.0));
        let s = Point::p1(0.0, 0.0);
        assert!(regions_causally_connected(&a1, &a2).unwrap());
        assert!(region_in_future(&s, &a1).unwrap());
        assert_eq!(a1.diamonds[0].r, Point::p1(6.0, -5.0));
        assert!(escape_exists(&Region::point("s", s.clone()), &u1).unwrap());
        assert!(escape_exists(&a1, &u1).unwrap());
        assert!(escape_exists(&a2, &u1).unwrap());
        let path = extract_escape_path(&Region::point("s", s), &u1).unwrap().unwrap();
        assert!(path.first_non_causal_segment().is_none());
    }

    #[test]
    fn fig11_not_connected() {
        let d1 = bx("D1", (2.0, 4.0), (-2.0, 0.0));
        let d2 = bx("D2", (-2.0, 0.0), (2.0, 4.0));
        assert!(!regions_causally_connected(&d1, &d2).unwrap());
        assert!(regions_causally_connected(&d1, &d1).unwrap());
    }

    #[test]
    fn point_inside_obstacle_cannot_escape() {
        let u = bx("U", (0.0, 4.0), (0.0, 4.0));
        let p = Region::point("p", Point::from_uv(2.0, 2.0));
        assert!(!escape_exists(&p, &u).unwrap());
        assert!(extract_escape_path(&p, &u).unwrap().is_none());
        let corner = Region::point("q", Point::from_uv(4.0, 4.0));
        assert!(!escape_exists(&corner, &u).unwrap());
    }

    #[test]
    fn corner_contact_blocks() {
        // two boxes touching at a corner form a wall together with the target squeezed between
        let obstacles = vec![
            Diamond::from_box((0.0, 2.0), (2.0, 4.0)).unwrap(),
            Diamond::from_box((2.0, 4.0), (0.0, 2.0)).unwrap(),
        ];
        let below = vec![Diamond::point(Point::from_uv(1.0, 1.0))];
        // any curve through (1,1) must later pass the corner (2,2) or one of the boxes
        assert!(!escape_exists_diamonds(&below, &obstacles).unwrap());
        let beside = vec![Diamond::point(Point::from_uv(5.0, 1.0))];
        assert!(escape_exists_diamonds(&beside, &obstacles).unwrap());
    }

    #[test]
    fn obstacle_free_is_straight() {
        let t = bx("T", (1.0, 2.0), (1.0, 2.0));
        let far = bx("F", (100.0, 101.0), (-100.0, -99.0));
        let path = extract_escape_path(&t, &far).unwrap().unwrap();
        assert!(verify_witness_curve(&path, &t, &far, 0.25).unwrap());
    }

    #[test]
    fn witness_curve_checks() {
        let t = bx("T", (0.0, 2.0), (0.0, 2.0));
        let far = bx("F", (50.0, 51.0), (50.0, 51.0));
        let up = Polyline::new(vec![Point::p1(-1.0, 0.0), Point::p1(3.0, 0.0)]);
        assert!(verify_witness_curve(&up, &t, &far, 0.1).unwrap());
        let down = Polyline::new(vec![Point::p1(3.0, 0.0), Point::p1(-1.0, 0.0)]);
        assert!(matches!(
            verify_witness_curve(&down, &t, &far, 0.1),
            Err(Error::NotCausalCurve { segment: 0 })
        ));
        // 2+1: c_0 at angle 0, r_1 at angle 60 degrees, elapsed time 1.5
        let c0 = Point::new(0.0, vec![1.0, 0.0]).unwrap();
        let a = 60f64.to_radians();
        let r1 = Point::new(1.5, vec![a.cos(), a.sin()]).unwrap();
        let d = Region::new("D", vec![Diamond::new(c0.clone(), r1.clone()).unwrap()]).unwrap();
        let obst = Region::point("o", Point::new(10.0, vec![0.0, 0.0]).unwrap());
        let seg = Polyline::new(vec![c0, r1]);
        assert!(verify_witness_curve(&seg, &d, &obst, 0.05).unwrap());
    }

    #[test]
    fn segment_box_examples() {
        let d = Diamond::from_box((1.0, 21.0), (9.0, 13.0)).unwrap();
        let p = Point::from_uv(0.0, 0.0);
        let q = Point::from_uv(22.0, 0.0);
        assert!(!segment_meets_diamond(&p, &q, &d));
        let a = Point::from_uv(0.0, 10.0);
        let b = Point::from_uv(30.0, 10.0);
        assert!(segment_meets_diamond(&a, &b, &d));
        let g0 = Point::from_uv(0.0, 9.0);
        let g1 = Point::from_uv(30.0, 9.0);
        assert!(segment_meets_diamond(&g0, &g1, &d));
    }
}
