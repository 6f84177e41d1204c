//! Text formats: grid CSV, per-slice figure data, and sweep config files.
//!
//! Numbers are written with 9 significant digits in a `%.9g`-like form,
//! with `.` as decimal point and LF line endings, so equal cells always
//! serialize to equal bytes.

use std::io::{BufRead, Write};

use crate::analytic::MarketInputs;
use crate::error::{Error, Result};
use crate::grid::{slice, CellFlag, GridCell, GridSpec};
use crate::mc::McConfig;
use crate::normal::two_sided_z;

pub const CSV_HEADER: &str = "T,rho,K,mc_mean,mc_std_error,ci_lower,ci_upper,kirk,modified_kirk,err_kirk_pct,err_modified_pct,flags";
pub const FIGURE_HEADER: &str = "K,err_kirk_pct,err_modified_pct";

/// Confidence level of the `ci_lower`/`ci_upper` columns.
pub const CSV_CI_LEVEL: f64 = 0.95;

const SIG_DIGITS: usize = 9;

/// Formats `v` with 9 significant digits, trailing zeros trimmed.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_sig).unwrap_or_default()
}

fn io_err(rows_written: usize) -> impl FnOnce(std::io::Error) -> Error {
    move |source| Error::Io {
        rows_written,
        source,
    }
}

fn csv_row(cell: &GridCell, z: f64) -> String {
    let half = z * cell.mc_std_error;
    let flags: Vec<&str> = cell.flags.iter().map(|f| f.token()).collect();
    [
        format_sig(cell.maturity),
        format_sig(cell.rho),
        format_sig(cell.strike),
        format_sig(cell.mc_mean),
        format_sig(cell.mc_std_error),
        format_sig(cell.mc_mean - half),
        format_sig(cell.mc_mean + half),
        format_opt(cell.kirk),
        format_opt(cell.modified_kirk),
        format_opt(cell.err_kirk_pct),
        format_opt(cell.err_modified_pct),
        flags.join("|"),
    ]
    .join(",")
}

/// Writes the header and one row per cell; returns the number of data rows.
pub fn write_grid_csv<W: Write>(cells: &[GridCell], mut sink: W) -> Result<usize> {
    let z = two_sided_z(CSV_CI_LEVEL)?;
    sink.write_all(format!("{CSV_HEADER}\n").as_bytes())
        .map_err(io_err(0))?;
    for (i, cell) in cells.iter().enumerate() {
        let mut row = csv_row(cell, z);
        row.push('\n');
        sink.write_all(row.as_bytes()).map_err(io_err(i))?;
    }
    sink.flush().map_err(io_err(cells.len()))?;
    Ok(cells.len())
}

/// Parses CSV written by [`write_grid_csv`]. Confidence bounds are dropped.
pub fn read_grid_csv<R: BufRead>(reader: R) -> Result<Vec<GridCell>> {
    let mut lines = reader.lines().enumerate();
    let bad = |line: usize, message: String| Error::Config {
        line: line + 1,
        message,
    };
    match lines.next() {
        Some((_, Ok(h))) if h == CSV_HEADER => {}
        Some((i, Ok(h))) => return Err(bad(i, format!("unexpected header '{h}'"))),
        Some((_, Err(e))) => return Err(io_err(0)(e)),
        None => return Err(bad(0, "empty input".into())),
    }
    let mut cells = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(io_err(cells.len()))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(bad(
                i,
                format!("expected 12 fields, found {}", fields.len()),
            ));
        }
        let num = |j: usize| -> Result<f64> {
            fields[j]
                .parse()
                .map_err(|_| bad(i, format!("bad number '{}'", fields[j])))
        };
        let opt = |j: usize| -> Result<Option<f64>> {
            if fields[j].is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        let flags = fields[11]
            .split('|')
            .filter(|t| !t.is_empty())
            .map(|t| CellFlag::from_token(t).ok_or_else(|| bad(i, format!("unknown flag '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        cells.push(GridCell {
            maturity: num(0)?,
            rho: num(1)?,
            strike: num(2)?,
            mc_mean: num(3)?,
            mc_std_error: num(4)?,
            kirk: opt(7)?,
            modified_kirk: opt(8)?,
            err_kirk_pct: opt(9)?,
            err_modified_pct: opt(10)?,
            flags,
        });
    }
    Ok(cells)
}

/// Writes `(K, err_kirk_pct, err_modified_pct)` for one (rho, T) slice.
pub fn write_figure_data<W: Write>(
    cells: &[GridCell],
    rho: f64,
    maturity: f64,
    mut sink: W,
) -> Result<usize> {
    let rows = slice(cells, rho, maturity);
    if rows.is_empty() {
        return Err(Error::MissingSlice { rho, maturity });
    }
    writeln!(sink, "{FIGURE_HEADER}").map_err(io_err(0))?;
    for (i, c) in rows.iter().enumerate() {
        writeln!(
            sink,
            "{},{},{}",
            format_sig(c.strike),
            format_opt(c.err_kirk_pct),
            format_opt(c.err_modified_pct)
        )
        .map_err(io_err(i))?;
    }
    sink.flush().map_err(io_err(rows.len()))?;
    Ok(rows.len())
}

/// Parses a sweep config. Keys not present keep their [`GridSpec::reference`] values.
///
/// Grammar: one `key = value` or `key = v1, v2, ...` per line; `#` starts a
/// comment. Keys: `strikes`, `rhos`, `maturities`, `s1`, `s2`, `sigma1`,
/// `sigma2`, `r`, `pairs`, `seed`, `batch_size`, `antithetic`, `draw_reuse`.
pub fn parse_grid_config(text: &str) -> Result<GridSpec> {
    let mut spec = GridSpec::reference(McConfig::default());
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Config {
            line: line_no,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', found '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        let list = || -> Result<Vec<f64>> {
            value
                .split(',')
                .map(|v| {
                    let v = v.trim();
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| err(format!("{key}: bad number '{v}'")))
                })
                .collect()
        };
        let scalar = || -> Result<f64> {
            match list()?.as_slice() {
                [x] => Ok(*x),
                _ => Err(err(format!("{key} takes a single value"))),
            }
        };
        let integer = || -> Result<u64> {
            value.parse::<u64>().map_err(|_| {
                err(format!(
                    "{key}: expected a non-negative integer, found '{value}'"
                ))
            })
        };
        let boolean = || -> Result<bool> {
            match value {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(err(format!(
                    "{key}: expected true or false, found '{value}'"
                ))),
            }
        };
        let market: &mut MarketInputs = &mut spec.base_market;
        match key {
            "strikes" => spec.strikes = list()?,
            "rhos" => spec.rhos = list()?,
            "maturities" => spec.maturities = list()?,
            "s1" => market.s1_0 = scalar()?,
            "s2" => market.s2_0 = scalar()?,
            "sigma1" => market.sigma1 = scalar()?,
            "sigma2" => market.sigma2 = scalar()?,
            "r" => market.r = scalar()?,
            "pairs" => spec.mc.n_pairs = integer()?,
            "seed" => spec.mc.seed = integer()?,
            "batch_size" => spec.mc.batch_size = integer()? as usize,
            "antithetic" => spec.mc.antithetic = boolean()?,
            "draw_reuse" => spec.draw_reuse = boolean()?,
            other => return Err(err(format!("unknown key '{other}'"))),
        }
    }
    spec.validate()?;
    Ok(spec)
}
