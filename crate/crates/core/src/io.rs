//! Text and image serialization of fields and masks.
//!
//! * Field CSV: header `x,y,value,valid`, then one row per node in storage
//!   order (y slowest). Floats use 17 significant digits (`{:.16e}`) so
//!   they read back bit-for-bit; `valid` is `1` or `0`.
//! * PGM: binary `P5`, `width = nx`, `height = ny`, maxval 255. Valid
//!   values map linearly from their `[min, max]` onto `[0, 255]`, a
//!   constant field maps to 128 and invalid nodes to 0. The first image
//!   row is `y = ymax`.
//! * Mask CSV: header `kind,x,y,jump` with `kind` one of
//!   `stable_candidate` (x-crossings) or `unstable_candidate`
//!   (y-crossings).

use std::fmt::Write as _;

use thiserror::Error;

use crate::analyze::ManifoldMask;
use crate::ldfield::{FieldMeta, GridSpec, ScalarField};

pub const FIELD_HEADER: &str = "x,y,value,valid";
pub const MASK_HEADER: &str = "kind,x,y,jump";

const SPACING_RTOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("field has no valid nodes to render")]
    NoValidNodes,
}

fn csv_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Csv {
        line,
        message: message.into(),
    }
}

pub fn write_csv(field: &ScalarField) -> Vec<u8> {
    let g = &field.grid;
    let mut out = String::with_capacity(64 * (g.len() + 1));
    out.push_str(FIELD_HEADER);
    out.push('\n');
    for (k, (&v, &ok)) in field.values.iter().zip(&field.valid).enumerate() {
        let [x, y] = g.point(k);
        let _ = writeln!(out, "{x:.16e},{y:.16e},{v:.16e},{}", u8::from(ok));
    }
    out.into_bytes()
}

/// Reads a field CSV. The grid is rebuilt from the node coordinates, which
/// must be uniformly spaced and in storage order. Metadata is not stored
/// in the CSV and comes back empty.
pub fn read_csv(bytes: &[u8]) -> Result<ScalarField, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| csv_err(0, format!("not UTF-8: {e}")))?;
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim() == FIELD_HEADER => {}
        Some((n, h)) => return Err(csv_err(n, format!("expected header `{FIELD_HEADER}`, found `{h}`"))),
        None => return Err(csv_err(1, "empty input")),
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut values = Vec::new();
    let mut valid = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(csv_err(n, format!("expected 4 columns, found {}", cols.len())));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| csv_err(n, format!("bad {what} `{s}`")))
        };
        xs.push(num(cols[0], "x")?);
        ys.push(num(cols[1], "y")?);
        values.push(num(cols[2], "value")?);
        valid.push(match cols[3] {
            "1" => true,
            "0" => false,
            other => return Err(csv_err(n, format!("bad valid flag `{other}`"))),
        });
    }
    if xs.is_empty() {
        return Err(csv_err(2, "no data rows"));
    }
    let nx = ys.iter().take_while(|&&y| y == ys[0]).count();
    if nx < 2 || xs.len() % nx != 0 {
        return Err(csv_err(
            2,
            format!("inconsistent node count: {} rows with {nx} per grid row", xs.len()),
        ));
    }
    let ny = xs.len() / nx;
    let grid = GridSpec::new(
        (xs[0], xs[nx - 1], nx),
        (ys[0], ys[xs.len() - 1], ny),
    )
    .map_err(|e| csv_err(2, e.to_string()))?;
    let (sx, sy) = (
        SPACING_RTOL * (grid.xmax - grid.xmin),
        SPACING_RTOL * (grid.ymax - grid.ymin),
    );
    for k in 0..xs.len() {
        let [gx, gy] = grid.point(k);
        if (xs[k] - gx).abs() > sx || (ys[k] - gy).abs() > sy {
            return Err(csv_err(
                k + 2,
                format!("node ({}, {}) breaks the uniform {nx}x{ny} grid", xs[k], ys[k]),
            ));
        }
    }
    Ok(ScalarField {
        grid,
        values,
        valid,
        meta: FieldMeta::default(),
    })
}

pub fn write_pgm(field: &ScalarField) -> Result<Vec<u8>, FormatError> {
    let (lo, hi) = field.valid_range().ok_or(FormatError::NoValidNodes)?;
    let g = &field.grid;
    let mut out = format!("P5\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    out.reserve(g.len());
    for row in 0..g.ny {
        let j = g.ny - 1 - row;
        for i in 0..g.nx {
            let k = g.index(i, j);
            let px = if !field.valid[k] {
                0
            } else if hi == lo {
                128
            } else {
                ((field.values[k] - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8
            };
            out.push(px);
        }
    }
    Ok(out)
}

pub fn write_mask_csv(mask: &ManifoldMask) -> Vec<u8> {
    let mut out = String::from(MASK_HEADER);
    out.push('\n');
    let sets = [
        ("stable_candidate", &mask.x_crossings),
        ("unstable_candidate", &mask.y_crossings),
    ];
    for (kind, cs) in sets {
        for c in cs {
            let _ = writeln!(out, "{kind},{:.16e},{:.16e},{:.16e}", c.x, c.y, c.jump);
        }
    }
    out.into_bytes()
}
