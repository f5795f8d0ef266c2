//! File formats: binary PGM images, CSV vectors and reports, JSON manifests.

use std::fs;
use std::io::Write;
use std::path::Path;

use hotcs_core::datagen::Image;
use hotcs_core::{CVector, C64};

use crate::error::{Error, Result};

/// Parses a binary (P5) 8-bit PGM, scaling samples to `[0, 1]`.
pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<Image> {
    let bad = |msg: &str| Error::format(path, msg.to_string());
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(bad("not a binary PGM (magic P5 expected)"));
    }
    let mut number = |what: &str| -> Result<usize> {
        token()?.parse::<usize>().map_err(|_| bad(&format!("invalid {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if width == 0 || height == 0 {
        return Err(bad("zero image dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit PGM (maxval 1..=255) is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(bad("missing raster separator"));
    }
    pos += 1;
    let raster = &bytes[pos..];
    if raster.len() < width * height {
        return Err(bad(&format!("raster has {} bytes, expected {}", raster.len(), width * height)));
    }
    let data = raster[..width * height].iter().map(|&b| b as f64 / maxval as f64).collect();
    Ok(Image::new(height, width, data)?)
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes, path)
}

/// 8-bit P5 encoding with samples rounded from `[0, 1]`.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
    out.extend(img.data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn write_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

/// Rejects images whose sides are not divisible by `2^levels`.
pub fn check_dyadic(img: &Image, levels: u32) -> Result<()> {
    let f = 1usize << levels;
    if img.rows() % f != 0 {
        return Err(Error::config(format!("image height {} not divisible by 2^{levels}", img.rows())));
    }
    Ok(())
}

/// One value per line, or `re,im` pairs.
pub fn parse_csv_vector(text: &str, path: &Path) -> Result<CVector> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let field = |k: usize| -> Result<f64> {
            rec[k].parse::<f64>().map_err(|_| Error::format(path, format!("line {}: not a number: {:?}", line + 1, &rec[k])))
        };
        let z = match rec.len() {
            1 => C64::new(field(0)?, 0.0),
            2 => C64::new(field(0)?, field(1)?),
            n => return Err(Error::format(path, format!("line {}: expected 1 or 2 fields, found {n}", line + 1))),
        };
        out.push(z);
    }
    if out.is_empty() {
        return Err(Error::format(path, "no values"));
    }
    CVector::new(out).map_err(|e| Error::format(path, e.to_string()))
}

pub fn load_csv_vector(path: impl AsRef<Path>) -> Result<CVector> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_vector(&text, path)
}

/// Writes real vectors as one value per line, complex ones as `re,im`.
pub fn write_csv_vector(v: &CVector, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let real = v.max_imag_abs() == 0.0;
    let mut s = String::new();
    for z in v.iter() {
        if real {
            s.push_str(&format!("{}\n", z.re));
        } else {
            s.push_str(&format!("{},{}\n", z.re, z.im));
        }
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Headered table rendered as CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Table { headers: headers.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

pub fn write_csv_report(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, table.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: serde::Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_example() {
        let mut bytes = b"P5 2 2 255\n".to_vec();
        bytes.extend([0u8, 255, 0, 255]);
        let img = parse_pgm(&bytes, Path::new("x.pgm")).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(img.column(1), vec![1.0, 1.0]);
    }

    #[test]
    fn pgm_with_comments_and_errors() {
        let mut bytes = b"P5\n# made by hand\n3 1\n# depth\n255\n".to_vec();
        bytes.extend([10u8, 20, 30]);
        let img = parse_pgm(&bytes, Path::new("c.pgm")).unwrap();
        assert_eq!((img.rows(), img.cols()), (1, 3));
        let p = Path::new("bad.pgm");
        assert!(parse_pgm(b"P2 1 1 255\n0", p).is_err());
        assert!(parse_pgm(b"P5 2 2 255\n\x00", p).is_err());
        assert!(parse_pgm(b"P5 2 2 65535\n\x00\x00\x00\x00", p).is_err());
        assert!(parse_pgm(b"P5 2", p).is_err());
    }

    #[test]
    fn pgm_roundtrip_exact() {
        let data: Vec<f64> = (0..12).map(|k| (k * 20) as f64 / 255.0).collect();
        let img = Image::new(3, 4, data).unwrap();
        let back = parse_pgm(&encode_pgm(&img), Path::new("r.pgm")).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn csv_vectors() {
        let p = Path::new("v.csv");
        assert_eq!(parse_csv_vector("1.0\n2.0\n", p).unwrap(), CVector::from_real(&[1.0, 2.0]).unwrap());
        let c = parse_csv_vector("1, 2\n-3,0.5\n\n", p).unwrap();
        assert_eq!(c.as_slice(), &[C64::new(1.0, 2.0), C64::new(-3.0, 0.5)]);
        assert!(parse_csv_vector("", p).is_err());
        assert!(parse_csv_vector("abc\n", p).is_err());
        assert!(parse_csv_vector("1,2,3\n", p).is_err());
        assert!(parse_csv_vector("NaN\n", p).is_err());
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["a", "b"]);
        assert_eq!(t.to_csv(), "a,b\n");
    }
}
