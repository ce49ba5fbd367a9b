//! CSV writers for metric series and toy traces.
//!
//! Floats are printed like C's `%.9g`, so outputs are byte-stable and
//! readable by any CSV consumer.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dynamics::ToyTrace;
use crate::error::{Result, VqError};
use crate::metrics::{MetricsRow, Psnr};

pub const METRICS_HEADER: &str = "epoch,utilization,perplexity,w_rank,w_fro,mse,psnr";
pub const TOY_HEADER: &str = "step,point_id,x,y,loss,w_fro";

const SIG_DIGITS: usize = 9;

/// Formats `x` with 9 significant digits, `%.9g` style: trailing zeros are
/// dropped and scientific notation is used below `1e-4` or from `1e9` up.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    // Rounding to 9 significant digits can carry into the next decade, so
    // the exponent is read off the rounded scientific form.
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| VqError::io(dir, e))?;
    }
    fs::File::create(path).map_err(|e| VqError::io(path, e))
}

/// Metric series as CSV text.
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let psnr = match r.psnr {
            Psnr::Db(v) => format_float(v),
            Psnr::Perfect => "perfect".into(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.epoch,
            format_float(r.utilization),
            format_float(r.perplexity),
            r.w_rank,
            format_float(r.w_fro),
            format_float(r.mse),
            psnr
        ));
    }
    out
}

/// Writes one row per epoch under [`METRICS_HEADER`]. Missing parent
/// directories are created.
pub fn emit_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(metrics_csv(rows).as_bytes())
        .map_err(|e| VqError::io(path, e))
}

/// Parses text produced by [`metrics_csv`].
pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let bad = |line: usize, msg: String| VqError::Config {
        path: "<csv>".into(),
        line,
        msg,
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(METRICS_HEADER) => {}
        other => return Err(bad(1, format!("unexpected header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let line_no = i + 2;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(bad(
                    line_no,
                    format!("expected 7 columns, got {}", cols.len()),
                ));
            }
            let float = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| bad(line_no, format!("bad number `{s}`: {e}")))
            };
            let int = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| bad(line_no, format!("bad integer `{s}`: {e}")))
            };
            Ok(MetricsRow {
                epoch: int(cols[0])?,
                utilization: float(cols[1])?,
                perplexity: float(cols[2])?,
                w_rank: int(cols[3])?,
                w_fro: float(cols[4])?,
                mse: float(cols[5])?,
                psnr: match cols[6] {
                    "perfect" => Psnr::Perfect,
                    s => Psnr::Db(float(s)?),
                },
            })
        })
        .collect()
}

/// Toy trace as CSV text: one line per step and point, with the step's loss
/// and `||w||_F` repeated on each of its lines.
pub fn toy_csv(trace: &ToyTrace) -> String {
    let mut out = String::new();
    out.push_str(TOY_HEADER);
    out.push('\n');
    for (step, positions) in trace.point_trajectories.iter().enumerate() {
        let loss = format_float(trace.loss_curve[step]);
        let w_fro = format_float(trace.w_norm_curve[step]);
        for (id, p) in positions.row_iter().enumerate() {
            out.push_str(&format!(
                "{step},{id},{},{},{loss},{w_fro}\n",
                format_float(p[0]),
                format_float(p[1])
            ));
        }
    }
    out
}

pub fn emit_toy_csv(trace: &ToyTrace, path: &Path) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(toy_csv(trace).as_bytes())
        .map_err(|e| VqError::io(path, e))
}
