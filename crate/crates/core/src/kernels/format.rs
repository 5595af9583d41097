//! Gram matrix file formats.
//!
//! * `precomp`: one line per row, `<label> 0:<serial> 1:<K> ... N:<K>`, the
//!   precomputed-kernel layout read by common SVM tools. Serials start at 1.
//! * `csv`: header `id,<col ids>`, then `<row id>,<values>`.
//! * `bin`: internal lossless format (magic, version, dims, flags,
//!   fingerprint, provenance, id tables, row-major little-endian `f64`).
//!
//! Text formats print 12 significant digits.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::gram::GramMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const BIN_MAGIC: &[u8; 8] = b"AGKGRAM\0";
const BIN_VERSION: u32 = 1;
const FLAG_INDEFINITE: u8 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GramFormat {
    #[default]
    Bin,
    Csv,
    Precomp,
}

impl FromStr for GramFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bin" => Ok(GramFormat::Bin),
            "csv" => Ok(GramFormat::Csv),
            "precomp" => Ok(GramFormat::Precomp),
            other => Err(Error::InvalidConfig(format!(
                "unknown gram format {other:?}"
            ))),
        }
    }
}

impl fmt::Display for GramFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GramFormat::Bin => "bin",
            GramFormat::Csv => "csv",
            GramFormat::Precomp => "precomp",
        })
    }
}

/// Formats like C's `%.12g`.
pub fn format_sig12(x: f64) -> String {
    const PRECISION: i32 = 12;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..PRECISION).contains(&exp) {
        let decimals = (PRECISION - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_owned()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

pub fn write_gram<T: Scalar, W: Write>(
    writer: W,
    gram: &GramMatrix<T>,
    format: GramFormat,
) -> Result<()> {
    let mut w = BufWriter::new(writer);
    match format {
        GramFormat::Precomp => write_precomputed(&mut w, gram)?,
        GramFormat::Csv => write_csv(&mut w, gram)?,
        GramFormat::Bin => write_binary(&mut w, gram)?,
    }
    w.flush()?;
    Ok(())
}

pub fn read_gram<T: Scalar, R: Read>(reader: R, format: GramFormat) -> Result<GramMatrix<T>> {
    match format {
        GramFormat::Precomp => read_precomputed(reader),
        GramFormat::Csv => read_csv(reader),
        GramFormat::Bin => read_binary(reader),
    }
}

pub fn save_gram<T: Scalar>(
    path: impl AsRef<Path>,
    gram: &GramMatrix<T>,
    format: GramFormat,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_gram(file, gram, format)
}

pub fn load_gram<T: Scalar>(path: impl AsRef<Path>, format: GramFormat) -> Result<GramMatrix<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_gram(BufReader::new(file), format)
}

fn write_precomputed<T: Scalar, W: Write>(w: &mut W, gram: &GramMatrix<T>) -> Result<()> {
    for r in 0..gram.rows() {
        let label = gram.row_labels()[r].as_deref().unwrap_or("0");
        if label.contains(char::is_whitespace) {
            return Err(Error::InvalidInput(format!(
                "label {label:?} cannot be written in precomputed format"
            )));
        }
        write!(w, "{label} 0:{}", r + 1)?;
        for (c, v) in gram.row(r).iter().enumerate() {
            write!(w, " {}:{}", c + 1, format_sig12(v.as_f64()))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads the precomputed layout. Row ids are the serials; column ids are
/// `1..=N`.
fn read_precomputed<T: Scalar, R: Read>(reader: R) -> Result<GramMatrix<T>> {
    let mut labels = Vec::new();
    let mut row_ids = Vec::new();
    let mut values = Vec::new();
    let mut cols: Option<usize> = None;
    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = n + 1;
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(label) = fields.next() else {
            continue;
        };
        let mut count = 0;
        for (expected, field) in fields.enumerate() {
            let (idx, val) = field.split_once(':').ok_or_else(|| {
                Error::parse(lineno, format!("expected index:value, got {field:?}"))
            })?;
            if idx.parse::<usize>().ok() != Some(expected) {
                return Err(Error::parse(
                    lineno,
                    format!("unexpected column index {idx:?}"),
                ));
            }
            if expected == 0 {
                row_ids.push(val.to_owned());
            } else {
                values.push(
                    val.parse::<T>()
                        .map_err(|_| Error::parse(lineno, format!("bad value {val:?}")))?,
                );
                count += 1;
            }
        }
        if row_ids.len() != labels.len() + 1 {
            return Err(Error::parse(lineno, "missing 0:<serial> field"));
        }
        match cols {
            Some(c) if c != count => {
                return Err(Error::parse(
                    lineno,
                    format!("expected {c} values, found {count}"),
                ))
            }
            _ => cols = Some(count),
        }
        labels.push(Some(label.to_owned()));
    }
    let col_ids = (1..=cols.unwrap_or(0)).map(|c| c.to_string()).collect();
    GramMatrix::new(values, row_ids, col_ids, "")?.with_row_labels(labels)
}

fn write_csv<T: Scalar, W: Write>(w: &mut W, gram: &GramMatrix<T>) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(std::iter::once("id").chain(gram.col_ids().iter().map(String::as_str)))?;
    for r in 0..gram.rows() {
        let mut record = Vec::with_capacity(gram.cols() + 1);
        record.push(gram.row_ids()[r].clone());
        record.extend(gram.row(r).iter().map(|v| format_sig12(v.as_f64())));
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(())
}

fn read_csv<T: Scalar, R: Read>(reader: R) -> Result<GramMatrix<T>> {
    let mut csv = csv::Reader::from_reader(reader);
    let col_ids: Vec<String> = csv.headers()?.iter().skip(1).map(str::to_owned).collect();
    let mut row_ids = Vec::new();
    let mut values = Vec::new();
    for (n, record) in csv.records().enumerate() {
        let record = record?;
        let lineno = n + 2;
        if record.len() != col_ids.len() + 1 {
            return Err(Error::parse(
                lineno,
                format!(
                    "expected {} fields, found {}",
                    col_ids.len() + 1,
                    record.len()
                ),
            ));
        }
        row_ids.push(record[0].to_owned());
        for v in record.iter().skip(1) {
            values.push(
                v.parse::<T>()
                    .map_err(|_| Error::parse(lineno, format!("bad value {v:?}")))?,
            );
        }
    }
    GramMatrix::new(values, row_ids, col_ids, "")
}

fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn write_binary<T: Scalar, W: Write>(w: &mut W, gram: &GramMatrix<T>) -> Result<()> {
    w.write_all(BIN_MAGIC)?;
    w.write_all(&BIN_VERSION.to_le_bytes())?;
    w.write_all(&(gram.rows() as u64).to_le_bytes())?;
    w.write_all(&(gram.cols() as u64).to_le_bytes())?;
    let flags = if gram.may_be_indefinite() {
        FLAG_INDEFINITE
    } else {
        0
    };
    w.write_all(&[flags])?;
    put_str(w, gram.fingerprint())?;
    put_str(w, gram.provenance())?;
    for id in gram.row_ids() {
        put_str(w, id)?;
    }
    for label in gram.row_labels() {
        match label {
            Some(l) => {
                w.write_all(&[1])?;
                put_str(w, l)?;
            }
            None => w.write_all(&[0])?,
        }
    }
    for id in gram.col_ids() {
        put_str(w, id)?;
    }
    for v in gram.values() {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

struct BinReader<R>(R);

impl<R: Read> BinReader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0
            .read_exact(&mut b)
            .map_err(|e| Error::format("gram", format!("truncated file: {e}")))?;
        Ok(b)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut buf = vec![0u8; len];
        self.0
            .read_exact(&mut buf)
            .map_err(|e| Error::format("gram", format!("truncated file: {e}")))?;
        String::from_utf8(buf).map_err(|_| Error::format("gram", "string is not UTF-8"))
    }
}

fn read_binary<T: Scalar, R: Read>(reader: R) -> Result<GramMatrix<T>> {
    let mut r = BinReader(BufReader::new(reader));
    if &r.bytes::<8>()? != BIN_MAGIC {
        return Err(Error::format("gram", "bad magic bytes"));
    }
    let version = r.u32()?;
    if version != BIN_VERSION {
        return Err(Error::format(
            "gram",
            format!("unsupported version {version}"),
        ));
    }
    let rows = r.u64()? as usize;
    let cols = r.u64()? as usize;
    let flags = r.u8()?;
    let fingerprint = r.string()?;
    let provenance = r.string()?;
    let row_ids = (0..rows).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
    let labels = (0..rows)
        .map(|_| match r.u8()? {
            0 => Ok(None),
            1 => r.string().map(Some),
            b => Err(Error::format("gram", format!("bad label tag {b}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let col_ids = (0..cols).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        values.push(T::lit(f64::from_le_bytes(r.bytes()?)));
    }
    Ok(GramMatrix::new(values, row_ids, col_ids, fingerprint)?
        .with_row_labels(labels)?
        .with_indefinite_flag(flags & FLAG_INDEFINITE != 0)
        .with_provenance(provenance))
}
