//! SVG 1.1 rendering of a placement.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{effective_dims, Layer, PlacementProblem, PlacementSolution, Rect};

#[derive(Debug, Clone, Default)]
pub struct SvgOptions {
    /// Extra rectangle to outline, such as the top-layer contour.
    pub contour: Option<Rect>,
    pub title: Option<String>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// IC outline, optional board and contour, IC pins, components colored by
/// layer, and a line from every close-to-pin component to its pin.
pub fn render_svg(problem: &PlacementProblem, sol: &PlacementSolution, opts: &SvgOptions) -> String {
    let ic = problem.ic_outline().rect();
    let comps = problem.components();
    let rects: Vec<(Rect, Layer, &str)> = comps
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (w, h) = effective_dims(c.width, c.height, sol.r[i]);
            (Rect::centered(sol.x[i], sol.y[i], w, h), c.layer, c.id.as_str())
        })
        .collect();

    let mut frame = ic;
    let mut grow = |r: &Rect| {
        frame = Rect::new(frame.x0.min(r.x0), frame.y0.min(r.y0), frame.x1.max(r.x1), frame.y1.max(r.y1));
    };
    if let Some(b) = problem.board_outline() {
        grow(&b.rect());
    }
    if let Some(c) = &opts.contour {
        grow(c);
    }
    for (r, _, _) in &rects {
        grow(r);
    }
    let margin = 0.05 * frame.width().max(frame.height());
    let (fx0, fy1) = (frame.x0 - margin, frame.y1 + margin);
    let (vw, vh) = (frame.width() + 2.0 * margin, frame.height() + 2.0 * margin);
    // SVG y grows downward.
    let tx = |x: f64| x - fx0;
    let ty = |y: f64| fy1 - y;
    let stroke = 0.002 * vw.max(vh);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {vw} {vh}" width="800" height="{}">"#,
        (800.0 * vh / vw).round()
    );
    let _ = writeln!(
        s,
        "<style>.board{{fill:none;stroke:#555;stroke-dasharray:4}} .ic{{fill:#eee;stroke:#222}} \
         .contour{{fill:none;stroke:#999;stroke-dasharray:2}} .top{{fill:#3b7dd8;fill-opacity:0.6;stroke:#1d4f95}} \
         .bottom{{fill:#d8703b;fill-opacity:0.45;stroke:#8f3f15}} .pin{{fill:#222}} .closetopin{{stroke:#c0176b}}</style>"
    );
    if let Some(t) = &opts.title {
        let _ = writeln!(s, "<title>{}</title>", escape(t));
    }
    let rect = |s: &mut String, class: &str, r: &Rect, extra: &str| {
        let _ = writeln!(
            s,
            r#"<rect class="{class}" x="{}" y="{}" width="{}" height="{}" stroke-width="{stroke}"{extra}/>"#,
            tx(r.x0),
            ty(r.y1),
            r.width(),
            r.height()
        );
    };
    if let Some(b) = problem.board_outline() {
        rect(&mut s, "board", &b.rect(), "");
    }
    rect(&mut s, "ic", &ic, "");
    if let Some(c) = &opts.contour {
        rect(&mut s, "contour", c, "");
    }
    for layer in [Layer::Bottom, Layer::Top] {
        let class = match layer {
            Layer::Top => "component top",
            Layer::Bottom => "component bottom",
        };
        for (r, l, id) in &rects {
            if *l == layer {
                rect(&mut s, class, r, &format!(r#" data-id="{}""#, escape(id)));
            }
        }
    }
    let pin_r = 0.004 * vw.max(vh);
    for p in problem.ic_pins() {
        let _ = writeln!(
            s,
            r#"<circle class="pin" cx="{}" cy="{}" r="{pin_r}" data-id="{}"/>"#,
            tx(p.x),
            ty(p.y),
            escape(&p.id)
        );
    }
    for (i, c) in comps.iter().enumerate() {
        let Some(pin) = c.close_to_pin_target.as_ref().and_then(|id| problem.pin_index(id)) else {
            continue;
        };
        let p = &problem.ic_pins()[pin];
        let _ = writeln!(
            s,
            r#"<line class="closetopin" x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="{}"/>"#,
            tx(sol.x[i]),
            ty(sol.y[i]),
            tx(p.x),
            ty(p.y),
            2.0 * stroke
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(problem: &PlacementProblem, sol: &PlacementSolution, opts: &SvgOptions, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_svg(problem, sol, opts)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Component, IcPin, Net, Outline, SpacingRules};

    #[test]
    fn empty_problem_draws_outline_only() {
        let p = PlacementProblem::new(vec![], vec![], vec![], Outline::new(10.0, 5.0).unwrap(), None, SpacingRules::default()).unwrap();
        let svg = render_svg(&p, &PlacementSolution::from_problem(&p), &SvgOptions::default());
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 1);
        assert!(svg.contains(r#"class="ic""#));
    }

    #[test]
    fn layers_pins_and_markers() {
        let comps = vec![
            Component::new("T&1", 1.0, 1.0, Layer::Top),
            Component::new("B1", 1.0, 1.0, Layer::Bottom),
            Component::new("B2", 1.0, 2.0, Layer::Bottom),
        ];
        let pins = vec![IcPin {
            id: "P".into(),
            x: 1.0,
            y: 1.0,
            layer: Layer::Top,
        }];
        let nets = vec![Net {
            id: "n".into(),
            members: vec!["T&1".into(), "P".into()],
            close_to_pin: true,
        }];
        let p = PlacementProblem::new(comps, nets, pins, Outline::new(10.0, 10.0).unwrap(), None, SpacingRules::default()).unwrap();
        let svg = render_svg(&p, &PlacementSolution::from_problem(&p), &SvgOptions::default());
        assert_eq!(svg.matches(r#"class="component top""#).count(), 1);
        assert_eq!(svg.matches(r#"class="component bottom""#).count(), 2);
        assert_eq!(svg.matches(r#"class="pin""#).count(), 1);
        assert_eq!(svg.matches(r#"class="closetopin""#).count(), 1);
        assert!(svg.contains("T&amp;1"));
    }
}
