//! Static SVG spacetime diagrams: time up, first spatial axis to the right.

use crate::geometry::{Diamond, Point, Polyline};
use crate::model::{TaskKind, TaskSpec};
use crate::planner::{Event, ProtocolPlan, Scheme};
use std::collections::BTreeSet;
use std::fmt::Write as _;

const SIZE: f64 = 480.0;
const PAD: f64 = 40.0;
const BLUE: &str = "#1f5fd1";
const RED: &str = "#d12f1f";
const YELLOW: &str = "#f2c200";

struct Frame {
    xmin: f64,
    tmin: f64,
    scale: f64,
}

impl Frame {
    fn fit(points: &[&Point]) -> Frame {
        let xs: Vec<f64> = points.iter().map(|p| p.x[0]).collect();
        let ts: Vec<f64> = points.iter().map(|p| p.t).collect();
        let lo = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (xmin, xmax, tmin, tmax) = (lo(&xs), hi(&xs), lo(&ts), hi(&ts));
        let span = (xmax - xmin).max(tmax - tmin).max(1e-6);
        Frame { xmin, tmin, scale: (SIZE - 2.0 * PAD) / span }
    }

    fn xy(&self, p: &Point) -> (f64, f64) {
        (PAD + (p.x[0] - self.xmin) * self.scale, SIZE - PAD - (p.t - self.tmin) * self.scale)
    }
}

fn corners(d: &Diamond) -> [Point; 4] {
    // projection onto (t, x0)
    let c = Point::p1(d.c.t, d.c.x[0]);
    let r = Point::p1(d.r.t, d.r.x[0]);
    let (cu, cv) = c.uv();
    let (ru, rv) = r.uv();
    [c, Point::from_uv(ru, cv), r, Point::from_uv(cu, rv)]
}

fn polygon(f: &Frame, d: &Diamond) -> String {
    let pts: Vec<String> = corners(d)
        .iter()
        .map(|p| {
            let (x, y) = f.xy(p);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    pts.join(" ")
}

fn polyline(f: &Frame, l: &Polyline) -> String {
    let pts: Vec<String> = l
        .vertices
        .iter()
        .map(|p| {
            let (x, y) = f.xy(p);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    pts.join(" ")
}

/// Render a task, optionally overlaying a plan's worldlines.
pub fn render_svg(task: &TaskSpec, plan: Option<&ProtocolPlan>) -> String {
    let mut pts: Vec<&Point> = vec![&task.start];
    for r in &task.regions {
        for d in &r.diamonds {
            pts.push(&d.c);
            pts.push(&d.r);
        }
    }
    for d in &task.diamonds {
        pts.push(&d.diamond.c);
        pts.push(&d.diamond.r);
    }
    let frame = Frame::fit(&pts);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(out, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<g class="axes" stroke="black"><line x1="{PAD}" y1="{b}" x2="{e}" y2="{b}"/><line x1="{PAD}" y1="{b}" x2="{PAD}" y2="{PAD}"/><text x="{tx}" y="{ty}" font-size="14">x</text><text x="{lx}" y="{ly}" font-size="14">t</text></g>"#,
        b = SIZE - PAD,
        e = SIZE - PAD,
        tx = SIZE - PAD + 6.0,
        ty = SIZE - PAD + 4.0,
        lx = PAD - 4.0,
        ly = PAD - 8.0,
    );

    let (auth, unauth): (BTreeSet<String>, BTreeSet<String>) = match task.kind {
        TaskKind::LocalizeExclude => (
            task.authorized.iter().flatten().cloned().collect(),
            task.unauthorized.iter().flatten().cloned().collect(),
        ),
        _ => (task.diamond_names().into_iter().collect(), BTreeSet::new()),
    };
    let mut region = |name: &str, ds: &[&Diamond], class: &str, colour: &str| {
        let _ = writeln!(out, r#"<g class="region {class}" stroke="{colour}" stroke-dasharray="6 4" fill="{colour}" fill-opacity="0.08">"#);
        for d in ds {
            let _ = writeln!(out, r#"<polygon points="{}"/>"#, polygon(&frame, d));
        }
        let (x, y) = frame.xy(&ds[0].r);
        let _ = writeln!(out, r#"<text x="{:.3}" y="{:.3}" font-size="12" stroke="none" fill="{colour}">{name}</text>"#, x + 4.0, y);
        let _ = writeln!(out, "</g>");
    };
    if task.kind == TaskKind::LocalizeExclude {
        for r in &task.regions {
            let ds: Vec<&Diamond> = r.diamonds.iter().collect();
            if auth.contains(&r.name) {
                region(&r.name, &ds, "authorized", BLUE);
            } else if unauth.contains(&r.name) {
                region(&r.name, &ds, "unauthorized", RED);
            }
        }
    } else {
        for d in &task.diamonds {
            region(&d.name, &[&d.diamond], "authorized", BLUE);
        }
    }

    if let Some(plan) = plan {
        for e in &plan.events {
            match e {
                Event::MoveToken { worldline, .. } => path(&mut out, &frame, worldline, false),
                Event::BroadcastClassical { routes, .. } => routes.iter().for_each(|r| path(&mut out, &frame, &r.worldline, true)),
                Event::ConditionalRoute { if_true, if_false, .. } => {
                    path(&mut out, &frame, if_true, false);
                    path(&mut out, &frame, if_false, false);
                }
                Event::EncodeScheme { scheme: Scheme::EdgeCode { .. }, at, .. } | Event::BellMeasure { at, .. } => {
                    let (x, y) = frame.xy(at);
                    let _ = writeln!(out, r#"<rect class="operation" x="{:.3}" y="{:.3}" width="6" height="6" fill="black"/>"#, x - 3.0, y - 3.0);
                }
                _ => {}
            }
        }
    }

    let (sx, sy) = frame.xy(&task.start);
    let _ = writeln!(out, r#"<circle class="start" cx="{sx:.3}" cy="{sy:.3}" r="5" fill="{YELLOW}" stroke="black"/>"#);
    out.push_str("</svg>\n");
    out
}

fn path(out: &mut String, frame: &Frame, l: &Polyline, classical: bool) {
    let pts = polyline(frame, l);
    if classical {
        // double-struck: wide dark stroke with a white core
        let _ = writeln!(out, r#"<polyline class="classical" points="{pts}" fill="none" stroke="black" stroke-width="3"/>"#);
        let _ = writeln!(out, r#"<polyline points="{pts}" fill="none" stroke="white" stroke-width="1"/>"#);
    } else {
        let _ = writeln!(out, r#"<polyline class="quantum" points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>"#);
    }
}
