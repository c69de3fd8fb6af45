//! SVG drawing of a stage: a segment per interval, a brace per bridge.

use std::fmt::Write;

use thickset::constructions::CounterexampleSidecar;
use thickset::rational::{self, Rational};
use thickset::stage::{self, CantorStage, Side};

pub struct Options {
    pub log: bool,
    pub braces: bool,
}

const WIDTH: f64 = 1200.0;
const MARGIN: f64 = 40.0;
const ROW: f64 = 14.0;
const AXIS_PAD: f64 = 40.0;

struct Scale {
    lo: f64,
    hi: f64,
    log: Option<f64>,
}

impl Scale {
    fn warp(&self, x: f64) -> f64 {
        match self.log {
            Some(theta) => x.signum() * (1.0 + x.abs() / theta).log10(),
            None => x,
        }
    }

    fn px(&self, x: &Rational) -> f64 {
        let (a, b) = (self.warp(self.lo), self.warp(self.hi));
        let span = if b > a { b - a } else { 1.0 };
        MARGIN + (self.warp(rational::to_f64(x)) - a) / span * (WIDTH - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn svg(stage: &CantorStage, parts: Option<&CounterexampleSidecar>, opts: &Options) -> String {
    let reports = if opts.braces { stage::all_bridges(stage) } else { Vec::new() };
    let mut lengths: Vec<Rational> = stage.gap_lengths();
    lengths.sort();
    lengths.dedup();
    lengths.reverse();
    let rows = lengths.len().max(1);

    // symlog threshold: the smallest positive interval or gap length
    let theta = stage
        .intervals()
        .iter()
        .map(|iv| iv.length())
        .chain(stage.gap_lengths())
        .filter(rational::is_positive)
        .min()
        .map(|l| rational::to_f64(&l))
        .unwrap_or(1.0);
    let scale = Scale {
        lo: rational::to_f64(stage.min()),
        hi: rational::to_f64(stage.max()),
        log: opts.log.then_some(theta),
    };

    let axis_y = AXIS_PAD + ROW * (2 * rows) as f64 + 10.0;
    let height = axis_y + 60.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(
        out,
        r#"<style>.interval{{stroke:#000;stroke-width:4}}.brace{{fill:none;stroke:#36c;stroke-width:1}}.label{{font:12px sans-serif}}</style>"#
    );
    let _ = writeln!(out, r#"<g class="intervals">"#);
    for iv in stage.intervals() {
        let (x1, x2) = (scale.px(iv.lo()), scale.px(iv.hi()));
        let _ = writeln!(
            out,
            r#"<line class="interval" x1="{x1:.3}" y1="{axis_y}" x2="{:.3}" y2="{axis_y}" data-lo="{}" data-hi="{}"/>"#,
            x2.max(x1 + 0.5),
            iv.lo(),
            iv.hi()
        );
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g class="bridges">"#);
    for r in &reports {
        let gap_len = r.gap.length().unwrap();
        let rank = lengths.iter().position(|l| l == &gap_len).unwrap_or(0);
        // larger gaps sit higher; left and right bridges alternate sub-rows
        let sub = match r.side {
            Side::Left => 0,
            Side::Right => 1,
        };
        let y = axis_y - 12.0 - ROW * (2 * (rows - 1 - rank) + sub) as f64;
        let (x1, x2) = (scale.px(r.bridge.lo()), scale.px(r.bridge.hi()));
        let mid = (x1 + x2) / 2.0;
        let _ = writeln!(
            out,
            r#"<path class="brace" d="M{x1:.3},{:.3} L{x1:.3},{y:.3} L{mid:.3},{y:.3} L{mid:.3},{:.3} M{mid:.3},{y:.3} L{x2:.3},{y:.3} L{x2:.3},{:.3}" data-endpoint="{}" data-side="{}"/>"#,
            y + 4.0,
            y - 3.0,
            y + 4.0,
            r.endpoint,
            if sub == 0 { "left" } else { "right" }
        );
    }
    let _ = writeln!(out, "</g>");

    if let Some(p) = parts {
        let _ = writeln!(out, r#"<g class="labels">"#);
        for (name, iv) in p.labels() {
            let x = scale.px(&iv.midpoint());
            let y = if name.starts_with('G') { axis_y + 36.0 } else { axis_y + 20.0 };
            let _ = writeln!(
                out,
                r#"<text class="label" x="{x:.3}" y="{y}" text-anchor="middle">{}</text>"#,
                escape(name)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(
        out,
        r#"<text class="label" x="{MARGIN}" y="{}">{}</text>"#,
        height - 8.0,
        escape(&format!("[{}, {}]{}", stage.min(), stage.max(), if opts.log { " symlog" } else { "" }))
    );
    out.push_str("</svg>");
    out
}
