//! Self-contained SVG rendering of sample paths.
//!
//! Inter-jump flow is drawn as one polyline per segment; jumps appear as
//! thin vertical connectors, making the discontinuities visible. Rendering
//! density is a display choice only — statistics always consume event data,
//! never the sampled polylines.

const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 40.0;

pub struct SvgPlot {
    pub width: u32,
    pub height: u32,
    pub title: String,
    /// Continuous flow stretches, one polyline each.
    pub flows: Vec<Vec<(f64, f64)>>,
    /// Jump discontinuities (t, z_pre, z_post).
    pub jumps: Vec<(f64, f64, f64)>,
    /// When set, overlays ±√t on [0, t_max].
    pub envelope: Option<f64>,
    pub t_max: f64,
}

impl SvgPlot {
    pub fn render(&self) -> String {
        let (w, h) = (self.width as f64, self.height as f64);
        let mut z_min = f64::INFINITY;
        let mut z_max = f64::NEG_INFINITY;
        for poly in &self.flows {
            for &(_, z) in poly {
                z_min = z_min.min(z);
                z_max = z_max.max(z);
            }
        }
        for &(_, a, b) in &self.jumps {
            z_min = z_min.min(a).min(b);
            z_max = z_max.max(a).max(b);
        }
        if let Some(t_env) = self.envelope {
            z_max = z_max.max(t_env.sqrt());
            z_min = z_min.min(-t_env.sqrt());
        }
        if !z_min.is_finite() || !z_max.is_finite() {
            z_min = -1.0;
            z_max = 1.0;
        }
        if z_max - z_min < 1e-12 {
            z_min -= 0.5;
            z_max += 0.5;
        }
        let pad = 0.05 * (z_max - z_min);
        let (z_min, z_max) = (z_min - pad, z_max + pad);

        let px = |t: f64| MARGIN_LEFT + t / self.t_max * (w - MARGIN_LEFT - MARGIN_RIGHT);
        let py = |z: f64| {
            h - MARGIN_BOTTOM - (z - z_min) / (z_max - z_min) * (h - MARGIN_TOP - MARGIN_BOTTOM)
        };

        let mut s = String::new();
        s.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
            self.width, self.height, self.width, self.height
        ));
        s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

        // Axes.
        s.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT, h - MARGIN_BOTTOM, w - MARGIN_RIGHT, h - MARGIN_BOTTOM
        ));
        s.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT, MARGIN_TOP, MARGIN_LEFT, h - MARGIN_BOTTOM
        ));
        let ticks = 5;
        for k in 0..=ticks {
            let t = self.t_max * k as f64 / ticks as f64;
            let x = px(t);
            s.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\" stroke-width=\"1\"/>\n",
                h - MARGIN_BOTTOM, h - MARGIN_BOTTOM + 4.0
            ));
            s.push_str(&format!(
                "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                h - MARGIN_BOTTOM + 16.0,
                trim_num(t)
            ));
            let z = z_min + (z_max - z_min) * k as f64 / ticks as f64;
            let y = py(z);
            s.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"black\" stroke-width=\"1\"/>\n",
                MARGIN_LEFT - 4.0, MARGIN_LEFT
            ));
            s.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
                MARGIN_LEFT - 7.0,
                y + 3.5,
                trim_num(z)
            ));
        }

        // Zero line when visible.
        if z_min < 0.0 && z_max > 0.0 {
            let y0 = py(0.0);
            s.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{y0:.1}\" x2=\"{:.1}\" y2=\"{y0:.1}\" stroke=\"#dddddd\" stroke-width=\"0.7\"/>\n",
                MARGIN_LEFT, w - MARGIN_RIGHT
            ));
        }

        // Envelope ±√t.
        if let Some(t_env) = self.envelope {
            for sign in [1.0, -1.0] {
                let pts: Vec<String> = (0..=200)
                    .map(|k| {
                        let t = t_env * k as f64 / 200.0;
                        format!("{:.2},{:.2}", px(t), py(sign * t.sqrt()))
                    })
                    .collect();
                s.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"0.8\" stroke-dasharray=\"4,3\" points=\"{}\"/>\n",
                    pts.join(" ")
                ));
            }
        }

        // Jump connectors under the flow lines.
        for &(t, a, b) in &self.jumps {
            s.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#bbbbbb\" stroke-width=\"0.6\"/>\n",
                py(a),
                py(b),
                x = px(t)
            ));
        }

        // Flow polylines.
        for poly in &self.flows {
            if poly.len() < 2 {
                continue;
            }
            let pts: Vec<String> = poly
                .iter()
                .map(|&(t, z)| format!("{:.2},{:.2}", px(t), py(z)))
                .collect();
            s.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"{}\"/>\n",
                pts.join(" ")
            ));
        }

        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
            MARGIN_LEFT,
            MARGIN_TOP - 10.0,
            escape(&self.title)
        ));
        s.push_str("</svg>\n");
        s
    }
}

fn trim_num(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal well-formedness check: tags balance and attributes quote.
    pub fn assert_well_formed_xml(doc: &str) {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = doc;
        while let Some(start) = rest.find('<') {
            let end = rest[start..].find('>').expect("unclosed tag") + start;
            let tag = &rest[start + 1..end];
            rest = &rest[end + 1..];
            if tag.starts_with('?') || tag.starts_with('!') {
                continue;
            }
            if let Some(name) = tag.strip_prefix('/') {
                let open = stack.pop().expect("close without open");
                assert_eq!(open, name.trim(), "mismatched tag");
            } else if !tag.ends_with('/') {
                let name = tag.split_whitespace().next().unwrap().to_string();
                stack.push(name);
            }
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    }

    #[test]
    fn renders_well_formed_svg() {
        let plot = SvgPlot {
            width: 640,
            height: 360,
            title: "beta=-2 n=100 <test>".into(),
            flows: vec![vec![(0.0, 0.0), (0.5, 0.3), (1.0, 0.7)]],
            jumps: vec![(0.5, 0.3, -0.2)],
            envelope: Some(1.0),
            t_max: 1.0,
        };
        let doc = plot.render();
        assert!(doc.starts_with("<svg"));
        assert_well_formed_xml(&doc);
        assert!(doc.contains("polyline"));
        assert!(doc.contains("&lt;test&gt;"));
    }

    #[test]
    fn degenerate_input_still_renders() {
        let plot = SvgPlot {
            width: 100,
            height: 100,
            title: "flat".into(),
            flows: vec![vec![(0.0, 1.0), (1.0, 1.0)]],
            jumps: vec![],
            envelope: None,
            t_max: 1.0,
        };
        assert_well_formed_xml(&plot.render());
    }
}
