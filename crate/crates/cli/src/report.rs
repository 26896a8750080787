//! Output writers: CSVs (17 significant digits, LF endings), the pass/fail
//! summary, and optional static SVG line plots.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Floating-point cell with 17 significant digits (round-trips f64).
pub fn cell(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// One scenario-level check for the summary table.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// "<=" or ">=" — how `value` relates to `threshold` when passing.
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn le(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: "<=",
            pass: value <= threshold,
        }
    }

    pub fn ge(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: ">=",
            pass: value >= threshold,
        }
    }
}

pub fn write_summary(path: &Path, scenario: &str, checks: &[Check]) -> Result<()> {
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                scenario.to_string(),
                c.name.clone(),
                cell(c.value),
                c.relation.to_string(),
                cell(c.threshold),
                if c.pass { "pass" } else { "fail" }.to_string(),
            ]
        })
        .collect();
    write_csv(
        path,
        &[
            "scenario",
            "check",
            "value",
            "relation",
            "threshold",
            "status",
        ],
        &rows,
    )
}

/// A named series for plotting.
pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Minimal static SVG line plot; purely decorative, never load-bearing.
pub fn write_svg(path: &Path, title: &str, series: &[Series<'_>]) -> Result<()> {
    let (w, h, ml, mr, mt, mb) = (860.0, 480.0, 70.0, 20.0, 40.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        for (&x, &y) in s.x.iter().zip(s.y.iter()) {
            if x.is_finite() && y.is_finite() {
                xmin = xmin.min(x);
                xmax = xmax.max(x);
                ymin = ymin.min(y);
                ymax = ymax.max(y);
            }
        }
    }
    if !xmin.is_finite() || xmax <= xmin {
        (xmin, xmax) = (0.0, 1.0);
    }
    if !ymin.is_finite() || ymax <= ymin {
        (ymin, ymax) = (ymin.min(0.0), ymin.min(0.0) + 1.0);
    }
    let pad = 0.05 * (ymax - ymin);
    let (ymin, ymax) = (ymin - pad, ymax + pad);
    let px = |x: f64| ml + (x - xmin) / (xmax - xmin) * pw;
    let py = |y: f64| mt + (1.0 - (y - ymin) / (ymax - ymin)) * ph;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"monospace\" font-size=\"12\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
        w / 2.0
    );
    // frame and a y = 0 line when visible
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#444\"/>\n"
    ));
    if ymin < 0.0 && ymax > 0.0 {
        let y0 = py(0.0);
        svg.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n",
            ml + pw
        ));
    }
    // axis extremes
    for (v, anchor, x, y) in [
        (xmin, "start", ml, h - 18.0),
        (xmax, "end", ml + pw, h - 18.0),
    ] {
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\">{v:.3}</text>\n"
        ));
    }
    for (v, y) in [(ymax, mt + 12.0), (ymin, mt + ph)] {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{y}\" text-anchor=\"end\">{v:.3e}</text>\n",
            ml - 6.0
        ));
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> =
            s.x.iter()
                .zip(s.y.iter())
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
            ml + 10.0,
            mt + 18.0 + 16.0 * i as f64,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Where a scenario's artifacts land; creates the directory eagerly.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: PathBuf) -> Result<Self> {
        fs::create_dir_all(&root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self { root })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    pub fn write_diagnostic(&self, text: &str) -> Result<()> {
        let path = self.path("diagnostic.txt");
        let mut f =
            fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        writeln!(f, "{text}")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_carry_seventeen_significant_digits() {
        assert_eq!(cell(1.0), "1.0000000000000000e0");
        assert_eq!(cell(0.16).len(), "1.6000000000000000e-1".len());
        // 17 significant digits round-trip every f64
        for v in [std::f64::consts::PI, 0.16, -1.0 / 3.0, 1e-300] {
            let back: f64 = cell(v).parse().unwrap();
            assert_eq!(back, v);
        }
    }

    #[test]
    fn checks_compare_in_the_declared_direction() {
        assert!(Check::le("x", 1.0, 2.0).pass);
        assert!(!Check::le("x", 3.0, 2.0).pass);
        assert!(Check::ge("x", 2.0, 2.0).pass);
    }
}
