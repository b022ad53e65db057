//! CSV and boxplot files for a finished grid.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};

use crate::experiment::EstimateSummary;

pub const ESTIMATES_HEADER: &str = "scenario_id,intra_model,snr_eps_db,snr_e_db,method,rep,estimate,discarded";
pub const SUMMARY_HEADER: &str =
    "scenario_id,intra_model,snr_eps_db,snr_e_db,method,reps,failed,discarded,mean,sd,limit,bias_vs_r,bias_vs_limit";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn estimates_csv(summaries: &[EstimateSummary]) -> String {
    let mut s = String::new();
    s.push_str(ESTIMATES_HEADER);
    s.push('\n');
    for m in summaries {
        for r in &m.reps {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                m.scenario_id,
                m.intra_model,
                opt(m.snr_eps_db),
                opt(m.snr_e_db),
                m.method,
                r.rep,
                opt(r.estimate),
                r.discarded
            )
            .unwrap();
        }
    }
    s
}

pub fn summary_csv(summaries: &[EstimateSummary]) -> String {
    let mut s = String::new();
    s.push_str(SUMMARY_HEADER);
    s.push('\n');
    for m in summaries {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            m.scenario_id,
            m.intra_model,
            opt(m.snr_eps_db),
            opt(m.snr_e_db),
            m.method,
            m.reps.len(),
            m.failed,
            m.discarded,
            m.mean,
            m.sd,
            m.limit,
            m.bias_vs_r,
            m.bias_vs_limit
        )
        .unwrap();
    }
    s
}

/// Write `estimates.csv`, `summary.csv` and optionally one SVG per scenario.
pub fn write_outputs(summaries: &[EstimateSummary], dir: &Path, boxplots: bool, r: f64) -> Result<Vec<PathBuf>> {
    ensure!(!summaries.is_empty(), "nothing to write");
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(())
    };
    put("estimates.csv".into(), estimates_csv(summaries))?;
    put("summary.csv".into(), summary_csv(summaries))?;
    if boxplots {
        let mut ids: Vec<&str> = Vec::new();
        for s in summaries {
            if !ids.contains(&s.scenario_id.as_str()) {
                ids.push(&s.scenario_id);
            }
        }
        for id in ids {
            let group: Vec<&EstimateSummary> = summaries.iter().filter(|s| s.scenario_id == id).collect();
            put(format!("boxplot-{id}.svg"), boxplot_svg(id, &group, r))?;
        }
    }
    Ok(written)
}

/// Five-number box: quartiles by linear interpolation, whiskers at 1.5 IQR.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lo: f64,
    pub hi: f64,
    pub outliers: Vec<f64>,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (i, f) = (h.floor() as usize, h.fract());
    if i + 1 < sorted.len() {
        sorted[i] + f * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    let (fl, fh) = (q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1));
    let inside: Vec<f64> = v.iter().copied().filter(|x| (fl..=fh).contains(x)).collect();
    Some(BoxStats {
        q1,
        median,
        q3,
        lo: inside.first().copied().unwrap_or(q1),
        hi: inside.last().copied().unwrap_or(q3),
        outliers: v.into_iter().filter(|x| !(fl..=fh).contains(x)).collect(),
    })
}

pub fn boxplot_svg(title: &str, group: &[&EstimateSummary], r: f64) -> String {
    let (w, h, left, top, bottom) = (80.0 * group.len() as f64 + 80.0, 360.0, 60.0, 30.0, 40.0);
    let stats: Vec<Option<BoxStats>> = group.iter().map(|s| box_stats(&s.values())).collect();
    let mut lo = r;
    let mut hi = r;
    for (s, b) in group.iter().zip(&stats) {
        for x in b.iter().flat_map(|b| b.outliers.iter().copied().chain([b.lo, b.hi])).chain([s.limit]) {
            if x.is_finite() {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
    }
    let pad = 0.05 * (hi - lo).max(1e-3);
    let (lo, hi) = (lo - pad, hi + pad);
    let y = |v: f64| top + (hi - v) / (hi - lo) * (h - top - bottom);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{title}</text>"#, w / 2.0).unwrap();
    writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, h - bottom).unwrap();
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, left - 4.0, y(v) + 4.0).unwrap();
    }
    writeln!(
        s,
        r##"<line x1="{left}" y1="{0:.1}" x2="{1}" y2="{0:.1}" stroke="#888" stroke-dasharray="4 3"/>"##,
        y(r),
        w - 10.0
    )
    .unwrap();
    for (i, (sum, b)) in group.iter().zip(&stats).enumerate() {
        let cx = left + 40.0 + 80.0 * i as f64;
        writeln!(s, r#"<text x="{cx}" y="{}" text-anchor="middle">{}</text>"#, h - bottom + 18.0, sum.method).unwrap();
        let Some(b) = b else { continue };
        writeln!(s, r#"<line x1="{cx}" y1="{:.1}" x2="{cx}" y2="{:.1}" stroke="black"/>"#, y(b.hi), y(b.lo)).unwrap();
        writeln!(
            s,
            r#"<rect x="{}" y="{:.1}" width="40" height="{:.1}" fill="white" stroke="black"/>"#,
            cx - 20.0,
            y(b.q3),
            (y(b.q1) - y(b.q3)).max(0.5)
        )
        .unwrap();
        writeln!(
            s,
            r#"<line x1="{}" y1="{2:.1}" x2="{}" y2="{2:.1}" stroke="black" stroke-width="2"/>"#,
            cx - 20.0,
            cx + 20.0,
            y(b.median)
        )
        .unwrap();
        for o in &b.outliers {
            writeln!(s, r#"<circle cx="{cx}" cy="{:.1}" r="2" fill="none" stroke="black"/>"#, y(*o)).unwrap();
        }
        if sum.limit.is_finite() {
            writeln!(s, r#"<circle cx="{cx}" cy="{:.1}" r="3" fill="red"/>"#, y(sum.limit)).unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}
