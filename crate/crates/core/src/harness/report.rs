use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::threshold::{Crossing, Predictor, ThresholdReport};
use super::SweepRow;
use crate::{Error, Result};

pub const SWEEP_CSV_HEADER: &str =
    "sweep_var,pre_ber,mi_norm,gmi_norm,s_star,post_ber,post_ber_ci_lo,post_ber_ci_hi,frames";
pub const THRESHOLD_CSV_HEADER: &str = "constellation,rate,metric,required_value";
pub const REFERENCE_CSV_HEADER: &str = "launch_power_dbm,gmi_norm,post_ber,spans,rate";

pub fn write_sweep_csv(rows: &[SweepRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.sweep_var,
            r.pre_ber,
            r.mi_norm,
            r.gmi_norm,
            r.s_star,
            r.post_ber,
            r.post_ber_ci_lo,
            r.post_ber_ci_hi,
            r.frames
        )?;
    }
    Ok(())
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Schema(format!("line {line}: bad number {field:?}")))
}

fn check_header(lines: &mut impl Iterator<Item = std::io::Result<String>>, header: &str) -> Result<bool> {
    let io = |e: std::io::Error| Error::Schema(e.to_string());
    match lines.next() {
        None => Ok(false),
        Some(first) => {
            let first = first.map_err(io)?;
            if first.trim() != header {
                return Err(Error::Schema(format!("expected header {header:?}, got {first:?}")));
            }
            Ok(true)
        }
    }
}

pub fn read_sweep_csv(r: impl BufRead) -> Result<Vec<SweepRow>> {
    let mut lines = r.lines();
    if !check_header(&mut lines, SWEEP_CSV_HEADER)? {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Schema(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Schema(format!("line {}: expected 9 fields", i + 2)));
        }
        let v = |k: usize| parse_f64(f[k], i + 2);
        rows.push(SweepRow {
            sweep_var: v(0)?,
            pre_ber: v(1)?,
            mi_norm: v(2)?,
            gmi_norm: v(3)?,
            s_star: v(4)?,
            post_ber: v(5)?,
            post_ber_ci_lo: v(6)?,
            post_ber_ci_hi: v(7)?,
            frames: f[8]
                .trim()
                .parse()
                .map_err(|_| Error::Schema(format!("line {}: bad frame count", i + 2)))?,
        });
    }
    Ok(rows)
}

/// One line per report and predictor; uncrossed reports write `not_crossed`.
pub fn write_threshold_csv(reports: &[ThresholdReport], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{THRESHOLD_CSV_HEADER}")?;
    for r in reports {
        for p in Predictor::ALL {
            match r.crossing.value(p) {
                Some(v) => writeln!(w, "{},{},{},{}", r.constellation, r.rate, p, v)?,
                None => writeln!(w, "{},{},{},not_crossed", r.constellation, r.rate, p)?,
            }
        }
    }
    Ok(())
}

/// A measured point of the experimental reference table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRow {
    pub launch_power_dbm: f64,
    pub gmi_norm: f64,
    pub post_ber: f64,
    pub spans: u32,
    pub rate: String,
}

pub fn ingest_reference_table(r: impl BufRead) -> Result<Vec<ReferenceRow>> {
    let mut lines = r.lines();
    if !check_header(&mut lines, REFERENCE_CSV_HEADER)? {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Schema(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(Error::Schema(format!("line {}: expected 5 fields", i + 2)));
        }
        rows.push(ReferenceRow {
            launch_power_dbm: parse_f64(f[0], i + 2)?,
            gmi_norm: parse_f64(f[1], i + 2)?,
            post_ber: parse_f64(f[2], i + 2)?,
            spans: f[3]
                .parse()
                .map_err(|_| Error::Schema(format!("line {}: bad span count", i + 2)))?,
            rate: f[4].to_string(),
        });
    }
    Ok(rows)
}

pub fn write_reference_table(rows: &[ReferenceRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{REFERENCE_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:e},{},{}",
            r.launch_power_dbm, r.gmi_norm, r.post_ber, r.spans, r.rate
        )?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Writes `sweep.csv`, `threshold.csv` and one log-y SVG plot of post-FEC BER
/// per predictor into `dir`. Reference points overlay the GMI plot.
pub fn emit_report(
    rows: &[SweepRow],
    reports: &[ThresholdReport],
    reference: &[ReferenceRow],
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let path = dir.join("sweep.csv");
    let mut w = create(&path)?;
    write_sweep_csv(rows, &mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let path = dir.join("threshold.csv");
    let mut w = create(&path)?;
    write_threshold_csv(reports, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))?;
    written.push(path);

    for p in Predictor::ALL {
        let path = dir.join(format!("post_ber_vs_{}.svg", p.column()));
        let overlay = if p == Predictor::Gmi { reference } else { &[] };
        let svg = plot_svg(rows, reports, overlay, p)?;
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn plot_svg(rows: &[SweepRow], reports: &[ThresholdReport], reference: &[ReferenceRow], p: Predictor) -> Result<String> {
    let plot_err = |e: String| Error::Plot(e);
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.post_ber > 0.0)
        .map(|r| (r.value(p), r.post_ber))
        .collect();
    let refs: Vec<(f64, f64)> = reference.iter().map(|r| (r.gmi_norm, r.post_ber)).collect();
    let xs = points.iter().chain(&refs).map(|q| q.0);
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !x0.is_finite() {
        (x0, x1) = if p == Predictor::PreBer { (0.0, 0.5) } else { (0.0, 1.0) };
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.01;
        x1 += 0.01;
    }
    let pad = 0.05 * (x1 - x0);
    let y_min = points
        .iter()
        .chain(&refs)
        .map(|q| q.1)
        .fold(1e-2f64, f64::min)
        .max(1e-9)
        / 2.0;

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (640, 480)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| plot_err(e.to_string()))?;
        let mut chart = ChartBuilder::on(&root)
            .margin(20)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d((x0 - pad)..(x1 + pad), (y_min..1.0).log_scale())
            .map_err(|e| plot_err(e.to_string()))?;
        chart
            .configure_mesh()
            .x_desc(p.column())
            .y_desc("post-FEC BER")
            .draw()
            .map_err(|e| plot_err(e.to_string()))?;
        chart
            .draw_series(LineSeries::new(points.iter().cloned(), &BLUE))
            .map_err(|e| plot_err(e.to_string()))?;
        chart
            .draw_series(points.iter().map(|&q| Circle::new(q, 3, BLUE.filled())))
            .map_err(|e| plot_err(e.to_string()))?;
        chart
            .draw_series(refs.iter().map(|&q| Cross::new(q, 4, RED)))
            .map_err(|e| plot_err(e.to_string()))?;
        for r in reports {
            if let Crossing::Crossed { .. } = r.crossing {
                let x = r.crossing.value(p).unwrap_or(f64::NAN);
                chart
                    .draw_series(std::iter::once(PathElement::new(vec![(x, y_min), (x, 1.0)], BLACK)))
                    .map_err(|e| plot_err(e.to_string()))?;
            }
        }
        root.present().map_err(|e| plot_err(e.to_string()))?;
    }
    Ok(svg)
}
