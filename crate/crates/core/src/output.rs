//! CSV writers. Numbers are written with 17 significant digits in scientific
//! notation, which round-trips every f64 and is locale independent.

use std::io::Write;

use crate::copulas::ProbeRow;
use crate::error::Result;
use crate::maxima::MaximaSample;
use crate::pickands::SimplexGrid;
use crate::sampling::{SampleMatrix, SliceSample};

/// 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0e0".
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn write_sample<W: Write>(out: W, s: &SampleMatrix) -> Result<()> {
    let mut w = writer(out);
    w.write_record(numbered("u", s.dim()))?;
    for row in s.iter_rows() {
        w.write_record(row.iter().map(|&x| fmt_num(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_slice<W: Write>(out: W, s: &SliceSample) -> Result<()> {
    let mut w = writer(out);
    w.write_record(numbered("v", s.cols()))?;
    for row in s.iter_rows() {
        w.write_record(row.iter().map(|&x| fmt_num(x)))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per repetition; the norming convention and constants are repeated on each
/// row so the file stays a plain rectangular table.
pub fn write_maxima<W: Write>(out: W, mx: &MaximaSample) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["rep".to_string()];
    header.extend(numbered("m", mx.cols()));
    header.extend(["norming", "c", "a_n", "block_size"].map(String::from));
    w.write_record(&header)?;
    let norming = mx.norming();
    let (c, a) = norming.constants();
    for (r, row) in mx.iter_rows().enumerate() {
        let mut rec = vec![r.to_string()];
        rec.extend(row.iter().map(|&x| fmt_num(x)));
        rec.extend([norming.name().to_string(), fmt_num(c), fmt_num(a), norming.block_size().to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the `m*` columns of a maxima CSV (or every column of a headerless numeric table
/// when no `m*` columns exist).
pub fn read_maxima_columns<R: std::io::Read>(input: R) -> Result<(Vec<f64>, usize)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    let picked: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.len() > 1 && h.starts_with('m') && h[1..].chars().all(|c| c.is_ascii_digit()))
        .map(|(i, _)| i)
        .collect();
    let cols: Vec<usize> = if picked.is_empty() { (0..headers.len()).collect() } else { picked };
    let mut data = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        for &c in &cols {
            let field = rec.get(c).unwrap_or("");
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| crate::Error::Io(format!("cannot parse '{field}' as a number")))?;
            data.push(v);
        }
    }
    Ok((data, cols.len()))
}

pub fn write_pickands<W: Write>(out: W, grid: &SimplexGrid, estimate: &[f64]) -> Result<()> {
    let mut w = writer(out);
    let mut header = numbered("t", grid.dim());
    header.push("A".to_string());
    w.write_record(&header)?;
    for (t, a) in grid.points().zip(estimate) {
        let mut rec: Vec<String> = t.iter().map(|&x| fmt_num(x)).collect();
        rec.push(fmt_num(*a));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_probe<W: Write>(out: W, rows: &[ProbeRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["n", "value", "target", "rel_error", "clamped"])?;
    for r in rows {
        w.write_record([fmt_num(r.n), fmt_num(r.value), fmt_num(r.target), fmt_num(r.rel_error), r.clamped.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxima::{Norming, ScaleConvention};

    #[test]
    fn seventeen_digits_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, -2.5e-300, 1e300, std::f64::consts::PI] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
        assert_eq!(fmt_num(-0.0), fmt_num(0.0));
    }

    #[test]
    fn maxima_csv_round_trip() {
        let mx = MaximaSample::from_rows(
            &[vec![-0.5, -1.25], vec![-0.1, -2.0]],
            Norming::Unconditional { convention: ScaleConvention::Tail, n: 10 },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_maxima(&mut buf, &mx).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("rep,m1,m2,norming,c,a_n,block_size\n"));
        let (data, cols) = read_maxima_columns(&buf[..]).unwrap();
        assert_eq!(cols, 2);
        assert_eq!(data, mx.data());
    }
}
