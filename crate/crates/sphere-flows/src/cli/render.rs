//! SVG phase portraits in the `w` plane, optionally beside the polar view
//! centered at infinity (`z = 1/w`).

use crate::field::{Chart, EquilibriumKind, RationalField, SpherePoint};
use crate::flow::{integrate, IntegratorConfig, Sample, Trajectory, Verdict};
use crate::poly::C64;
use crate::separatrix::{Color, Separatrix};
use serde::{Deserialize, Serialize};
use std::fmt::Write;

pub const RED: &str = "#d62728";
pub const BLUE: &str = "#1f57c8";
pub const PURPLE: &str = "#8e3fb5";
pub const BLACK: &str = "#000000";
const GRAY: &str = "#9a9a9a";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    /// The `w` chart, i.e. stereographic projection from the north pole.
    Stereographic,
    /// `w` chart and polar `z` chart side by side.
    Charts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub view: View,
    /// Panel width and height in pixels.
    pub size: u32,
    /// Sample orbits are seeded on a `density x density` grid.
    pub density: usize,
    /// Rescaled-time span of each sample orbit, in both directions.
    pub orbit_span: f64,
    /// Half-width of the `w` window relative to the scene radius.
    pub zoom: f64,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec {
            view: View::Stereographic,
            size: 600,
            density: 7,
            orbit_span: 40.0,
            zoom: 1.5,
        }
    }
}

/// Color of an equilibrium dot, or `None` for the open saddle circle.
pub fn equilibrium_color(kind: EquilibriumKind) -> Option<&'static str> {
    match kind {
        EquilibriumKind::Source => Some(RED),
        EquilibriumKind::Sink => Some(BLUE),
        EquilibriumKind::Center => Some(PURPLE),
        EquilibriumKind::PoleSaddle => None,
        EquilibriumKind::DegenerateZero | EquilibriumKind::DegeneratePole => Some(BLACK),
    }
}

/// Stroke color of a separatrix: purple when it ends at a saddle.
pub fn separatrix_color(s: &Separatrix) -> &'static str {
    match (&s.trajectory.verdict, s.color) {
        (Verdict::ReachedSaddle { .. }, _) => PURPLE,
        (_, Color::Red) => RED,
        (_, Color::Blue) => BLUE,
    }
}

struct Panel {
    chart: Chart,
    half_width: f64,
    offset_x: f64,
    size: f64,
}

impl Panel {
    fn pixel(&self, p: &SpherePoint) -> Option<(f64, f64)> {
        let v = p.coord(self.chart)?;
        if !(v.re.abs() <= 1.2 * self.half_width && v.im.abs() <= 1.2 * self.half_width) {
            return None;
        }
        let s = self.size / 2.0;
        Some((self.offset_x + s + v.re / self.half_width * s, s - v.im / self.half_width * s))
    }

    fn polylines(&self, samples: &[Sample], color: &str, width: f64, out: &mut String) {
        let mut run: Vec<(f64, f64)> = Vec::new();
        let mut drawn = 0.0;
        let flush = |run: &mut Vec<(f64, f64)>, out: &mut String| {
            if run.len() >= 2 {
                let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
                    pts.join(" ")
                );
            }
            run.clear();
        };
        for s in samples {
            match self.pixel(&s.point) {
                Some(px) => {
                    let jump = run
                        .last()
                        .is_some_and(|q| (q.0 - px.0).hypot(q.1 - px.1) > self.size / 4.0);
                    if jump {
                        flush(&mut run, out);
                    }
                    let step = run.last().map_or(0.0, |q| (q.0 - px.0).hypot(q.1 - px.1));
                    if run.is_empty() || step >= 0.75 {
                        run.push(px);
                        drawn += step;
                    }
                    // Orbits winding around centers would repeat forever.
                    if drawn > 12.0 * self.size {
                        break;
                    }
                }
                None => flush(&mut run, out),
            }
        }
        flush(&mut run, out);
    }
}

fn sample_orbits(field: &RationalField, cfg: &IntegratorConfig, spec: &RenderSpec, half: f64) -> Vec<Trajectory> {
    let cfg = IntegratorConfig {
        max_steps: cfg.max_steps.min(4000),
        ..cfg.clone()
    };
    let n = spec.density.max(1);
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = half * (2.0 * (i as f64 + 0.5) / n as f64 - 1.0);
            let y = half * (2.0 * (j as f64 + 0.5) / n as f64 - 1.0);
            let start = SpherePoint::w(C64::new(x, y));
            for t in [spec.orbit_span, -spec.orbit_span] {
                if let Ok(tr) = integrate(field, start, 0.0, t, &cfg) {
                    out.push(tr);
                }
            }
        }
    }
    out
}

/// Renders the field with its separatrices and a grid of sample orbits.
pub fn render_svg(field: &RationalField, seps: &[Separatrix], cfg: &IntegratorConfig, spec: &RenderSpec) -> String {
    let size = spec.size.max(50) as f64;
    let half = spec.zoom * field.scene_radius().max(1e-3);
    let mut panels = vec![Panel {
        chart: Chart::W,
        half_width: half,
        offset_x: 0.0,
        size,
    }];
    if spec.view == View::Charts {
        panels.push(Panel {
            chart: Chart::Z,
            half_width: spec.zoom / field.scene_radius().max(1e-3),
            offset_x: size,
            size,
        });
    }
    let width = size * panels.len() as f64;
    let orbits = sample_orbits(field, cfg, spec, half);
    let records = field.classify();

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{size}" viewBox="0 0 {width} {size}">"#
    );
    let _ = writeln!(out, "<title>{:?} field, degree {}</title>", field.mode(), field.d());
    let _ = writeln!(out, r#"<rect width="{width}" height="{size}" fill="white"/>"#);
    for (k, p) in panels.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<g id="chart-{}"><clipPath id="clip-{k}"><rect x="{}" y="0" width="{size}" height="{size}"/></clipPath>"#,
            if p.chart == Chart::W { "w" } else { "z" },
            p.offset_x
        );
        let _ = writeln!(out, r#"<g clip-path="url(#clip-{k})">"#);
        for tr in &orbits {
            let color = if matches!(tr.verdict, Verdict::Periodic { .. }) { PURPLE } else { GRAY };
            p.polylines(&tr.samples, color, 0.8, &mut out);
        }
        for s in seps {
            p.polylines(&s.trajectory.samples, separatrix_color(s), 1.6, &mut out);
        }
        for r in &records {
            let Some((x, y)) = p.pixel(&r.location) else { continue };
            match equilibrium_color(r.kind) {
                Some(c) => {
                    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{c}"/>"#);
                }
                None => {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="4.5" fill="white" stroke="{BLACK}" stroke-width="1.5"/>"#
                    );
                }
            }
        }
        let _ = writeln!(out, "</g>");
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="0" width="{size}" height="{size}" fill="none" stroke="{BLACK}"/></g>"#,
            p.offset_x
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separatrix::{trace_all, SeparatrixConfig};

    fn well_formed(svg: &str) -> bool {
        let mut stack: Vec<&str> = Vec::new();
        let mut rest = svg;
        while let Some(i) = rest.find('<') {
            let j = rest[i..].find('>').map(|j| i + j);
            let Some(j) = j else { return false };
            let tag = &rest[i + 1..j];
            rest = &rest[j + 1..];
            if tag.starts_with('?') || tag.ends_with('/') {
                continue;
            }
            if let Some(name) = tag.strip_prefix('/') {
                if stack.pop() != Some(name.trim()) {
                    return false;
                }
            } else {
                stack.push(tag.split_whitespace().next().unwrap_or(""));
            }
        }
        stack.is_empty()
    }

    #[test]
    fn cubic_example_renders_both_charts() {
        let f = RationalField::with_multiplicities(
            vec![C64::new(1.0, 0.0), C64::new(-2.0, 0.0)],
            vec![C64::new(0.0, 0.0)],
            C64::new(-1.0, 0.0),
        )
        .unwrap();
        let seps = trace_all(&f, &SeparatrixConfig::default()).unwrap();
        let spec = RenderSpec {
            view: View::Charts,
            density: 3,
            ..RenderSpec::default()
        };
        let svg = render_svg(&f, &seps, &IntegratorConfig::default(), &spec);
        assert!(well_formed(&svg));
        assert!(svg.contains(r#"id="chart-z""#));
        assert!(svg.contains(RED) && svg.contains(BLUE));
        assert!(svg.contains(r##"fill="white" stroke="#000000""##));
        assert_eq!(svg, render_svg(&f, &seps, &IntegratorConfig::default(), &spec));
    }

    #[test]
    fn glossary_colors() {
        assert_eq!(equilibrium_color(EquilibriumKind::Source), Some(RED));
        assert_eq!(equilibrium_color(EquilibriumKind::Sink), Some(BLUE));
        assert_eq!(equilibrium_color(EquilibriumKind::Center), Some(PURPLE));
        assert_eq!(equilibrium_color(EquilibriumKind::PoleSaddle), None);
    }
}
