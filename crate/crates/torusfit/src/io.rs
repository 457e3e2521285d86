//! CSV ingestion and emission: contingency tables (in the printed
//! orientation of the source tables, X2 rows descending), raw observation
//! pairs with compass labels, and long-format heatmap data.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::dist::PmfTable;
use crate::error::{Error, Result};
use crate::inference::CountTable;
use crate::torus::{compass_to_index, GridPoint, TorusGrid};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parse a contingency-table CSV.
///
/// Layout: a header row listing the X1 index labels 0..m1-1 (after an
/// ignored corner field), then m2 data rows labeled m2-1 down to 0, each
/// holding the counts for that X2 index across all X1 columns.
pub fn parse_count_table<R: Read>(reader: R, m1: usize, m2: usize) -> Result<CountTable> {
    let grid = TorusGrid::new(m1, m2)?;
    let mut lines = BufReader::new(reader).lines().enumerate();

    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = first.map_err(Error::Io)?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != m1 + 1 {
        return Err(parse_err(1, format!("expected {} header fields, found {}", m1 + 1, fields.len())));
    }
    for (k, f) in fields[1..].iter().enumerate() {
        if f.trim().parse::<usize>().ok() != Some(k) {
            return Err(parse_err(1, format!("header column {} should be {k}, found {f:?}", k + 2)));
        }
    }

    let mut counts = vec![0u64; grid.len()];
    let mut seen_rows = 0usize;
    for (idx, line) in lines {
        let line = line.map_err(Error::Io)?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != m1 + 1 {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, found {}", m1 + 1, fields.len()),
            ));
        }
        let expect_l = m2
            .checked_sub(seen_rows + 1)
            .ok_or_else(|| parse_err(lineno, format!("more than {m2} data rows")))?;
        let l: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("row label {:?} is not an index", fields[0])))?;
        if l != expect_l {
            return Err(parse_err(lineno, format!("row label should be {expect_l}, found {l}")));
        }
        for (k, f) in fields[1..].iter().enumerate() {
            let v: u64 = f.trim().parse().map_err(|_| {
                parse_err(lineno, format!("cell ({k}, {l}) value {f:?} is not a non-negative integer"))
            })?;
            counts[k * m2 + l] = v;
        }
        seen_rows += 1;
    }
    if seen_rows != m2 {
        return Err(parse_err(seen_rows + 1, format!("expected {m2} data rows, found {seen_rows}")));
    }
    CountTable::new(grid, counts)
}

pub fn parse_count_table_path(path: &Path, m1: usize, m2: usize) -> Result<CountTable> {
    parse_count_table(std::fs::File::open(path)?, m1, m2)
}

/// Emit a contingency table in the same orientation `parse_count_table`
/// reads (lossless round trip).
pub fn write_count_table<W: Write>(table: &CountTable, mut writer: W) -> Result<()> {
    let grid = table.grid();
    let header: Vec<String> = (0..grid.m1()).map(|k| k.to_string()).collect();
    writeln!(writer, ",{}", header.join(","))?;
    for l in (0..grid.m2()).rev() {
        let row: Vec<String> = (0..grid.m1()).map(|k| table.value(k, l).to_string()).collect();
        writeln!(writer, "{l},{}", row.join(","))?;
    }
    Ok(())
}

/// Result of tallying an observation file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationTally {
    pub table: CountTable,
    /// Rows dropped because either field was a calm marker.
    pub calm_dropped: usize,
}

fn parse_direction(field: &str, lineno: usize) -> Result<usize> {
    let t = field.trim();
    if let Ok(idx) = t.parse::<usize>() {
        if idx < 16 {
            return Ok(idx);
        }
        return Err(parse_err(lineno, format!("direction index {idx} out of range 0..16")));
    }
    compass_to_index(t).map_err(|_| parse_err(lineno, format!("unknown direction {t:?}")))
}

/// Parse a two-column CSV of paired directions into a 16 x 16 count table.
///
/// Each field is a compass label (case-insensitive) or an integer index;
/// rows containing a `calm` marker are dropped and counted. An optional
/// `x1,x2`-style header row is skipped.
pub fn parse_observations<R: Read>(reader: R) -> Result<ObservationTally> {
    let grid = TorusGrid::new(16, 16)?;
    let mut counts = vec![0u64; 256];
    let mut calm_dropped = 0usize;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(Error::Io)?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 2 {
            return Err(parse_err(lineno, format!("expected 2 fields, found {}", fields.len())));
        }
        if lineno == 1 {
            let lower: Vec<String> =
                fields.iter().map(|f| f.trim().to_ascii_lowercase()).collect();
            if lower == ["x1", "x2"] || lower == ["x1_index", "x2_index"] {
                continue;
            }
        }
        if fields.iter().any(|f| f.trim().eq_ignore_ascii_case("calm")) {
            calm_dropped += 1;
            continue;
        }
        let k = parse_direction(fields[0], lineno)?;
        let l = parse_direction(fields[1], lineno)?;
        counts[k * 16 + l] += 1;
    }
    Ok(ObservationTally { table: CountTable::new(grid, counts)?, calm_dropped })
}

/// Long-format heatmap rows (k, l, value), row-major, with probabilities
/// printed to 12 significant digits.
pub fn emit_pmf_heatmap<W: Write>(table: &PmfTable, mut writer: W) -> Result<()> {
    writeln!(writer, "k,l,value")?;
    let grid = table.grid();
    for k in 0..grid.m1() {
        for l in 0..grid.m2() {
            writeln!(writer, "{k},{l},{:.11e}", table.value(k, l))?;
        }
    }
    Ok(())
}

/// Long-format heatmap of observed counts.
pub fn emit_count_heatmap<W: Write>(table: &CountTable, mut writer: W) -> Result<()> {
    writeln!(writer, "k,l,value")?;
    let grid = table.grid();
    for k in 0..grid.m1() {
        for l in 0..grid.m2() {
            writeln!(writer, "{k},{l},{}", table.value(k, l))?;
        }
    }
    Ok(())
}

/// Parse heatmap CSV back into (grid, row-major values); the round-trip
/// partner of the emitters.
pub fn parse_heatmap<R: Read>(reader: R) -> Result<(TorusGrid, Vec<f64>)> {
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(Error::Io)?;
        let lineno = idx + 1;
        if lineno == 1 {
            if line.trim() != "k,l,value" {
                return Err(parse_err(1, "expected header k,l,value"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(lineno, "expected 3 fields"));
        }
        let k = fields[0].trim().parse::<usize>().map_err(|_| parse_err(lineno, "bad k"))?;
        let l = fields[1].trim().parse::<usize>().map_err(|_| parse_err(lineno, "bad l"))?;
        let v = fields[2].trim().parse::<f64>().map_err(|_| parse_err(lineno, "bad value"))?;
        rows.push((k, l, v));
    }
    let m1 = rows.iter().map(|r| r.0).max().map(|m| m + 1).unwrap_or(0);
    let m2 = rows.iter().map(|r| r.1).max().map(|m| m + 1).unwrap_or(0);
    let grid = TorusGrid::new(m1, m2)?;
    if rows.len() != grid.len() {
        return Err(parse_err(rows.len() + 1, "heatmap rows do not fill the grid"));
    }
    let mut values = vec![f64::NAN; grid.len()];
    for (k, l, v) in rows {
        values[k * m2 + l] = v;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(parse_err(0, "heatmap rows do not cover every cell"));
    }
    Ok((grid, values))
}

/// Emit sampled pairs as the two-column CSV the `simulate` command writes.
pub fn write_pairs<W: Write>(pairs: &[GridPoint], mut writer: W) -> Result<()> {
    writeln!(writer, "x1_index,x2_index")?;
    for p in pairs {
        writeln!(writer, "{},{}", p.k, p.l)?;
    }
    Ok(())
}
