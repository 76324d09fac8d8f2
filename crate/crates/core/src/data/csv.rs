//! Dataset CSV format.
//!
//! Line 1: `# pecnet-dataset v1, T=<int>, classes=<int>`
//! Then one row per pixel:
//! `row,col,mask,class_label,depth_bot,depth_tob,truth,v0,...,v{T-1}`
//! with `mask` in {0,1}, `class_label` -1 when absent, and `nan` in a depth
//! column when that regression target is absent. Values use `.` decimals and
//! round-trip exactly through Rust's shortest float formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ScanGrid, Signal};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const HEADER_PREFIX: &str = "# pecnet-dataset v1";

pub fn save_csv<T: Scalar>(grid: &ScanGrid<T>, path: &Path) -> Result<()> {
    fs::write(path, to_csv_string(grid))?;
    Ok(())
}

pub fn to_csv_string<T: Scalar>(grid: &ScanGrid<T>) -> String {
    let t_len = grid.signals()[0].len();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}, T={}, classes={}",
        HEADER_PREFIX,
        t_len,
        grid.num_classes()
    );
    for r in 0..grid.height() {
        for c in 0..grid.width() {
            let s = grid.signal(r, c);
            let class = s.class_label.map(|x| x as i64).unwrap_or(-1);
            let (bot, tob) = match &s.depth_labels {
                Some(d) if d.len() == 2 => (fmt_f64(d.data()[0].as_f64()), fmt_f64(d.data()[1].as_f64())),
                Some(d) => (fmt_f64(d.data()[0].as_f64()), "nan".to_string()),
                None => ("nan".to_string(), "nan".to_string()),
            };
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                r,
                c,
                grid.masked(r, c) as u8,
                class,
                bot,
                tob,
                fmt_f64(grid.truth_map().data()[r * grid.width() + c].as_f64()),
            );
            for v in s.values.data() {
                let _ = write!(out, ",{}", fmt_f64(v.as_f64()));
            }
            out.push('\n');
        }
    }
    out
}

pub fn load_csv<T: Scalar>(path: &Path) -> Result<ScanGrid<T>> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text)
}

pub fn parse_csv<T: Scalar>(text: &str) -> Result<ScanGrid<T>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty dataset file".to_string()))?;
    let (t_len, num_classes) = parse_header(header)?;

    struct Row<T> {
        row: usize,
        col: usize,
        mask: bool,
        truth: T,
        signal: Signal<T>,
    }
    let mut rows: Vec<Row<T>> = Vec::new();
    let mut depth_arity: Option<usize> = None;
    for (lineno, line) in lines {
        let human = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 + t_len {
            return Err(Error::Parse(format!(
                "line {human}: expected {} fields, found {}",
                7 + t_len,
                fields.len()
            )));
        }
        let row = parse_usize(fields[0], human, "row")?;
        let col = parse_usize(fields[1], human, "col")?;
        let mask = match fields[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse(format!(
                    "line {human}: mask must be 0 or 1, found {other:?}"
                )))
            }
        };
        let class_label = match fields[3].parse::<i64>() {
            Ok(-1) => None,
            Ok(v) if v >= 0 => Some(v as usize),
            _ => {
                return Err(Error::Parse(format!(
                    "line {human}: bad class label {:?}",
                    fields[3]
                )))
            }
        };
        let bot = parse_f64(fields[4], human, "depth_bot")?;
        let tob = parse_f64(fields[5], human, "depth_tob")?;
        let truth = parse_f64(fields[6], human, "truth")?;
        let depth_labels = match (bot.is_nan(), tob.is_nan()) {
            (true, true) => None,
            (false, true) => Some(Tensor::from_parts(vec![1], vec![T::from_f64(bot)])),
            (false, false) => Some(Tensor::from_parts(
                vec![2],
                vec![T::from_f64(bot), T::from_f64(tob)],
            )),
            (true, false) => {
                return Err(Error::Parse(format!(
                    "line {human}: depth_bot absent but depth_tob present"
                )))
            }
        };
        if let Some(d) = &depth_labels {
            match depth_arity {
                None => depth_arity = Some(d.len()),
                Some(a) if a != d.len() => {
                    return Err(Error::Parse(format!(
                        "line {human}: {}-target row in a {a}-target dataset",
                        d.len()
                    )))
                }
                _ => {}
            }
        }
        let mut values = Vec::with_capacity(t_len);
        for (i, f) in fields[7..].iter().enumerate() {
            values.push(T::from_f64(parse_f64(f, human, &format!("v{i}"))?));
        }
        let signal = Signal::new(
            Tensor::from_parts(vec![1, t_len], values),
            class_label,
            depth_labels,
        )
        .map_err(|e| Error::Parse(format!("line {human}: {e}")))?;
        rows.push(Row {
            row,
            col,
            mask,
            truth: T::from_f64(truth),
            signal,
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse("dataset has a header but no rows".to_string()));
    }

    let height = rows.iter().map(|r| r.row).max().unwrap() + 1;
    let width = rows.iter().map(|r| r.col).max().unwrap() + 1;
    if rows.len() != height * width {
        return Err(Error::Parse(format!(
            "grid extends to {height}x{width} but only {} rows are present",
            rows.len()
        )));
    }
    let mut signals: Vec<Option<Signal<T>>> = (0..height * width).map(|_| None).collect();
    let mut mask = vec![false; height * width];
    let mut truth = vec![T::zero(); height * width];
    for r in rows {
        let idx = r.row * width + r.col;
        if signals[idx].is_some() {
            return Err(Error::Parse(format!(
                "pixel ({}, {}) appears twice",
                r.row, r.col
            )));
        }
        mask[idx] = r.mask;
        truth[idx] = r.truth;
        signals[idx] = Some(r.signal);
    }
    let signals: Vec<Signal<T>> = signals.into_iter().map(|s| s.unwrap()).collect();
    ScanGrid::new(
        height,
        width,
        signals,
        Tensor::from_parts(vec![height, width], truth),
        mask,
        num_classes,
    )
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    if !line.starts_with(HEADER_PREFIX) {
        return Err(Error::Parse(format!(
            "line 1: expected `{HEADER_PREFIX}, T=<int>, classes=<int>`"
        )));
    }
    let mut t_len = None;
    let mut classes = None;
    for part in line.split(',').skip(1) {
        let part = part.trim();
        if let Some(v) = part.strip_prefix("T=") {
            t_len = v.parse::<usize>().ok();
        } else if let Some(v) = part.strip_prefix("classes=") {
            classes = v.parse::<usize>().ok();
        }
    }
    match (t_len, classes) {
        (Some(t), Some(c)) if t > 0 => Ok((t, c)),
        _ => Err(Error::Parse(
            "line 1: header is missing a valid T= or classes= entry".to_string(),
        )),
    }
}

fn parse_usize(s: &str, line: usize, what: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| Error::Parse(format!("line {line}: bad {what} {s:?}")))
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() || v.is_nan() => Ok(v),
        _ => Err(Error::Parse(format!("line {line}: bad {what} {s:?}"))),
    }
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}
