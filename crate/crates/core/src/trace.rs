//! Next-token probability traces and their colourised rendering.
//!
//! A trace document is JSON lines, one generated (or prompt) token per line:
//!
//! ```text
//! {"t":"global","p":0.71,"k":[["global",0.71],["US",0.107]],"s":"c"}
//! ```
//!
//! `t` is the token text, `p` the probability the model gave it, `k` the
//! top-k alternatives (optional, non-increasing) and `s` the section,
//! `"p"` for prompt or `"c"` for completion.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TOPK_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Section {
    #[serde(rename = "p")]
    Prompt,
    #[serde(rename = "c")]
    Completion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    #[serde(rename = "t")]
    pub token: String,
    pub p: f64,
    #[serde(rename = "k", default)]
    pub top_k: Vec<(String, f64)>,
    #[serde(rename = "s")]
    pub section: Section,
}

impl TraceStep {
    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.p.is_finite() && self.p > 0.0 && self.p <= 1.0) {
            return Err(format!("chosen probability {} outside (0, 1]", self.p));
        }
        let mut prev = f64::INFINITY;
        let mut sum = 0.0;
        for (tok, q) in &self.top_k {
            if !(q.is_finite() && (0.0..=1.0).contains(q)) {
                return Err(format!("top-k probability {q} for {tok:?} outside [0, 1]"));
            }
            if *q > prev {
                return Err("top-k probabilities are not non-increasing".into());
            }
            prev = *q;
            sum += q;
        }
        if sum > 1.0 + TOPK_SUM_TOL {
            return Err(format!("top-k probabilities sum to {sum} > 1"));
        }
        Ok(())
    }
}

/// An ordered, validated list of trace steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TokenTrace {
    steps: Vec<TraceStep>,
}

impl TokenTrace {
    pub fn new(steps: Vec<TraceStep>) -> Result<Self> {
        for (i, s) in steps.iter().enumerate() {
            s.validate().map_err(|message| Error::Parse {
                line: i + 1,
                message,
            })?;
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[TraceStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("step serializes"));
            out.push('\n');
        }
        out
    }
}

/// Parses a JSON-lines trace. Blank lines are skipped; errors carry the
/// 1-based line number.
pub fn parse_trace(document: &str) -> Result<TokenTrace> {
    let mut steps = Vec::new();
    for (i, line) in document.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let step: TraceStep = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        step.validate().map_err(|message| Error::Parse {
            line: i + 1,
            message,
        })?;
        steps.push(step);
    }
    Ok(TokenTrace { steps })
}

/// Maps probabilities to hues: 0 is red, 120 is green.
///
/// The hue is piecewise linear in `ln p` between breakpoints. With the
/// default breakpoints a token at `p = 0.71` lands just past the yellow
/// band into green and `p = 0.1` lands in orange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    /// `(probability, hue)` pairs, strictly increasing in both.
    pub breakpoints: Vec<(f64, f64)>,
    pub saturation: f64,
    pub lightness: f64,
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            breakpoints: vec![
                (1e-4, 0.0),
                (0.05, 20.0),
                (0.3, 45.0),
                (0.7, 70.0),
                (1.0, 120.0),
            ],
            saturation: 85.0,
            lightness: 70.0,
        }
    }
}

impl Palette {
    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.len() < 2 {
            return Err(Error::param("palette needs at least two breakpoints"));
        }
        for w in self.breakpoints.windows(2) {
            let ((p0, h0), (p1, h1)) = (w[0], w[1]);
            if !(p0 > 0.0 && p1 > p0 && h1 >= h0) {
                return Err(Error::param(format!(
                    "palette breakpoints must increase: {:?}",
                    self.breakpoints
                )));
            }
        }
        Ok(())
    }

    /// Hue in degrees for probability `p`; clamps outside the breakpoints.
    pub fn hue(&self, p: f64) -> f64 {
        let bp = &self.breakpoints;
        let (first, last) = (bp[0], bp[bp.len() - 1]);
        if p.is_nan() || p <= first.0 {
            return first.1;
        }
        if p >= last.0 {
            return last.1;
        }
        let lp = p.ln();
        for w in bp.windows(2) {
            let ((p0, h0), (p1, h1)) = (w[0], w[1]);
            if p <= p1 {
                let t = (lp - p0.ln()) / (p1.ln() - p0.ln());
                return h0 + t * (h1 - h0);
            }
        }
        last.1
    }

    pub fn css_color(&self, p: f64) -> String {
        format!(
            "hsl({:.1}, {:.0}%, {:.0}%)",
            self.hue(p),
            self.saturation,
            self.lightness
        )
    }

    pub fn rgb(&self, p: f64) -> (u8, u8, u8) {
        hsl_to_rgb(self.hue(p), self.saturation / 100.0, self.lightness / 100.0)
    }

    /// Nearest colour in the xterm 6x6x6 cube.
    pub fn ansi256(&self, p: f64) -> u8 {
        let (r, g, b) = self.rgb(p);
        let level = |c: u8| -> u8 {
            // cube levels 0, 95, 135, 175, 215, 255
            if c < 48 {
                0
            } else if c < 115 {
                1
            } else {
                ((c as u16 - 35) / 40) as u8
            }
        };
        16 + 36 * level(r) + 6 * level(g) + level(b)
    }
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> (u8, u8, u8) {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = (h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (to(r1), to(g1), to(b1))
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(ch),
        }
    }
    out
}

fn tooltip(step: &TraceStep) -> String {
    let mut t = format!("p = {:.4}", step.p);
    for (tok, q) in &step.top_k {
        let _ = write!(t, "\n{tok:?}: {q:.4}");
    }
    t
}

const STYLE: &str =
    "body { font-family: monospace; background: #202124; color: #111; padding: 1em; }
.trace { white-space: pre-wrap; line-height: 1.8; }
.tok { border-radius: 2px; padding: 1px 0; }
.prompt { opacity: 0.85; }
.completion { font-weight: bold; outline: 1px solid #444; }
.legend { color: #eee; margin-bottom: 1em; }
.legend span { display: inline-block; padding: 2px 8px; margin-right: 4px; color: #111; }
.boundary { color: #eee; }";

/// Self-contained HTML page: one `<span>` per token, background coloured by
/// the token's probability, top-k in the hover title.
pub fn render_html(trace: &TokenTrace, palette: &Palette) -> String {
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str("<title>next-token probabilities</title>\n<style>\n");
    out.push_str(STYLE);
    out.push_str("\n</style>\n</head>\n<body>\n<div class=\"legend\">");
    let legend_points: Vec<f64> = palette.breakpoints.iter().map(|(p, _)| *p).collect();
    for p in &legend_points {
        let _ = write!(
            out,
            "<span style=\"background: {}\">p = {}</span>",
            palette.css_color(*p),
            p
        );
    }
    out.push_str("</div>\n<div class=\"trace\">");
    let mut prev: Option<Section> = None;
    for step in trace.steps() {
        if prev == Some(Section::Prompt) && step.section == Section::Completion {
            out.push_str("<span class=\"boundary\">\u{2502}</span>");
        }
        prev = Some(step.section);
        let class = match step.section {
            Section::Prompt => "tok prompt",
            Section::Completion => "tok completion",
        };
        let _ = write!(
            out,
            "<span class=\"{class}\" style=\"background: {}\" title=\"{}\">{}</span>",
            palette.css_color(step.p),
            escape_html(&tooltip(step)),
            escape_html(&step.token)
        );
    }
    out.push_str("</div>\n</body>\n</html>\n");
    out
}

/// Terminal rendering with 256-colour backgrounds; completion tokens are
/// bold. With `color = false` the plain token text is returned.
pub fn render_ansi(trace: &TokenTrace, palette: &Palette, color: bool) -> String {
    let mut out = String::new();
    for step in trace.steps() {
        if color {
            let bold = if step.section == Section::Completion {
                "1;"
            } else {
                ""
            };
            let _ = write!(
                out,
                "\x1b[{bold}38;5;16;48;5;{}m{}\x1b[0m",
                palette.ansi256(step.p),
                step.token
            );
        } else {
            out.push_str(&step.token);
        }
    }
    out.push('\n');
    out
}
