//! Minimal SVG output for phase-transition curves and n_f histograms.

use std::fmt::Write as _;

use crate::ensembles::EnsembleKind;
use crate::experiments::{NfHistogram, TransitionCurve};
use crate::recovery::Algorithm;

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 280.0;
const MARGIN_L: f64 = 50.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
const LEGEND_H: f64 = 30.0;

fn color(alg: Algorithm) -> &'static str {
    match alg {
        Algorithm::OmpK => "#1f77b4",
        Algorithm::OmpE => "#d62728",
        Algorithm::Sp => "#2ca02c",
        Algorithm::Bp => "#9467bd",
    }
}

fn dash(alg: Algorithm) -> &'static str {
    match alg {
        Algorithm::OmpK => "6,3",
        Algorithm::OmpE => "none",
        Algorithm::Sp => "2,2",
        Algorithm::Bp => "8,2,2,2",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + self.h - (v - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn axes(&self, out: &mut String, xticks: &[f64], yticks: &[f64], xlabel: &str, ylabel: &str) {
        let (x1, y1) = (self.x0 + self.w, self.y0 + self.h);
        writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000"/>"##,
            self.x0, self.y0, self.w, self.h
        )
        .unwrap();
        for &t in xticks {
            let x = self.x(t);
            writeln!(out, r##"<line x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/>"##, y1 + 4.0).unwrap();
            writeln!(out, r#"<text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#, y1 + 15.0, fmt_tick(t))
                .unwrap();
        }
        for &t in yticks {
            let y = self.y(t);
            writeln!(out, r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000"/>"##, self.x0 - 4.0, self.x0)
                .unwrap();
            writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#, self.x0 - 6.0, y + 3.0, fmt_tick(t))
                .unwrap();
        }
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            self.x0 + self.w / 2.0,
            y1 + 32.0,
            escape(xlabel)
        )
        .unwrap();
        let (lx, ly) = (self.x0 - 36.0, self.y0 + self.h / 2.0);
        writeln!(
            out,
            r#"<text x="{lx:.2}" y="{ly:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
            escape(ylabel)
        )
        .unwrap();
        let _ = x1;
    }
}

fn fmt_tick(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.1}")
    }
}

/// One panel per ensemble, ρ_50 against λ for every algorithm, with a legend.
/// Each curve is a `<polyline>` tagged with `data-algorithm` and
/// `data-ensemble`; its vertices are the curve's points in order.
pub fn phase_svg(curves: &[TransitionCurve], ensembles: &[EnsembleKind]) -> String {
    let panels = ensembles.len().max(1);
    let width = panels as f64 * (PANEL_W + MARGIN_L) + 20.0;
    let height = MARGIN_T + PANEL_H + MARGIN_B + LEGEND_H;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    )
    .unwrap();
    writeln!(out, r##"<rect width="100%" height="100%" fill="#fff"/>"##).unwrap();
    let ticks_x: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let ticks_y: Vec<f64> = (0..=5).map(|i| i as f64 / 5.0).collect();
    for (p, &ens) in ensembles.iter().enumerate() {
        let frame = Frame {
            x0: MARGIN_L + p as f64 * (PANEL_W + MARGIN_L),
            y0: MARGIN_T,
            w: PANEL_W,
            h: PANEL_H,
            xr: (0.1, 0.9),
            yr: (0.0, 1.0),
        };
        writeln!(out, r#"<g class="panel" data-ensemble="{ens}">"#).unwrap();
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            frame.x0 + PANEL_W / 2.0,
            MARGIN_T - 10.0,
            ens.name().to_uppercase()
        )
        .unwrap();
        frame.axes(&mut out, &ticks_x, &ticks_y, "lambda = M/N", "rho = K/M");
        for c in curves.iter().filter(|c| c.ensemble == ens) {
            let pts: Vec<String> = c
                .points
                .iter()
                .map(|pt| format!("{:.2},{:.2}", frame.x(pt.lambda), frame.y(pt.rho_50.clamp(0.0, 1.0))))
                .collect();
            writeln!(
                out,
                r#"<polyline class="curve" data-algorithm="{}" data-ensemble="{ens}" fill="none" stroke="{}" stroke-width="1.8" stroke-dasharray="{}" points="{}"/>"#,
                c.algorithm,
                color(c.algorithm),
                dash(c.algorithm),
                pts.join(" ")
            )
            .unwrap();
        }
        writeln!(out, "</g>").unwrap();
    }
    let ly = MARGIN_T + PANEL_H + MARGIN_B + 12.0;
    for (i, alg) in Algorithm::ALL.iter().enumerate() {
        let lx = MARGIN_L + i as f64 * 110.0;
        writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="1.8" stroke-dasharray="{}"/>"#,
            lx + 28.0,
            color(*alg),
            dash(*alg)
        )
        .unwrap();
        writeln!(out, r#"<text class="legend" x="{:.2}" y="{:.2}" font-size="11">{}</text>"#, lx + 34.0, ly + 4.0, alg.label())
            .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Bar chart of `counts`, with reference lines at `⌈K/2⌉ − 1` and `K/4`.
pub fn histogram_svg(h: &NfHistogram) -> String {
    let half = h.k.div_ceil(2).saturating_sub(1) as f64;
    let quarter = h.k as f64 / 4.0;
    let x_max = (h.max_nf as f64).max(half).max(quarter) + 1.0;
    let y_max = h.counts.values().copied().max().unwrap_or(1).max(1) as f64 * 1.1;
    let (w, hgt) = (480.0, 300.0);
    let width = MARGIN_L + w + 20.0;
    let height = MARGIN_T + hgt + MARGIN_B;
    let frame = Frame { x0: MARGIN_L, y0: MARGIN_T, w, h: hgt, xr: (-0.5, x_max + 0.5), yr: (0.0, y_max) };
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    )
    .unwrap();
    writeln!(out, r##"<rect width="100%" height="100%" fill="#fff"/>"##).unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">M = {}, K = {}, N = {}: {} of {} OMP_e runs successful</text>"#,
        MARGIN_L + w / 2.0,
        MARGIN_T - 10.0,
        h.m,
        h.k,
        h.n,
        h.ompe_successes,
        h.trials
    )
    .unwrap();
    let step = ((x_max / 10.0).ceil()).max(1.0);
    let xt: Vec<f64> = (0..).map(|i| i as f64 * step).take_while(|v| *v <= x_max).collect();
    let ystep = ((y_max / 5.0).ceil()).max(1.0);
    let yt: Vec<f64> = (0..).map(|i| i as f64 * ystep).take_while(|v| *v <= y_max).collect();
    frame.axes(&mut out, &xt, &yt, "n_f", "count");
    let bar_w = frame.x(0.4) - frame.x(-0.4);
    for (&nf, &count) in &h.counts {
        let x = frame.x(nf as f64 - 0.4);
        let y = frame.y(count as f64);
        writeln!(
            out,
            r##"<rect class="bar" data-nf="{nf}" data-count="{count}" x="{x:.2}" y="{y:.2}" width="{bar_w:.2}" height="{:.2}" fill="#4c72b0"/>"##,
            frame.y(0.0) - y
        )
        .unwrap();
    }
    for (value, label, colour) in [(half, "ceil(K/2)-1", "#d62728"), (quarter, "K/4", "#2ca02c")] {
        let x = frame.x(value);
        writeln!(
            out,
            r#"<line class="reference" data-value="{value}" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{colour}" stroke-dasharray="5,3"/>"#,
            frame.y0,
            frame.y0 + frame.h
        )
        .unwrap();
        writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10" fill="{colour}">{label}</text>"#, x + 3.0, frame.y0 + 12.0)
            .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{CurvePoint, FitMethod};
    use std::collections::BTreeMap;

    fn curve(alg: Algorithm, ens: EnsembleKind) -> TransitionCurve {
        TransitionCurve {
            algorithm: alg,
            ensemble: ens,
            points: (1..=9)
                .map(|i| CurvePoint {
                    lambda: i as f64 / 10.0,
                    rho_50: 0.05 * i as f64,
                    method: FitMethod::Logistic,
                    converged: true,
                    iterations: 5,
                    extrapolated: false,
                })
                .collect(),
        }
    }

    #[test]
    fn phase_plot_has_panels_curves_and_legend() {
        let curves: Vec<TransitionCurve> = EnsembleKind::ALL
            .iter()
            .flat_map(|&e| [Algorithm::OmpK, Algorithm::OmpE].map(|a| curve(a, e)))
            .collect();
        let svg = phase_svg(&curves, &EnsembleKind::ALL);
        assert_eq!(svg.matches(r#"class="panel""#).count(), 3);
        assert_eq!(svg.matches("<polyline").count(), 6);
        for label in ["OMP_K", "OMP_e", "SP", "BP"] {
            assert!(svg.contains(&format!(">{label}</text>")));
        }
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn histogram_marks_reference_lines() {
        let h = NfHistogram {
            m: 125,
            k: 40,
            n: 250,
            trials: 10,
            ensemble: EnsembleKind::Gaussian,
            seed: 0,
            ompk_successes: 5,
            ompk_tolerance_successes: 5,
            ompe_successes: 10,
            counts: BTreeMap::from([(0, 5), (2, 5)]),
            max_nf: 2,
            iteration_mismatches: 0,
            ompk_outside_zero_bin: 0,
            errors: 0,
        };
        let svg = histogram_svg(&h);
        assert_eq!(svg.matches(r#"class="bar""#).count(), 2);
        assert!(svg.contains(r#"data-value="19""#) && svg.contains(r#"data-value="10""#));
    }
}
