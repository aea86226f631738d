use std::path::{Path, PathBuf};

use super::ImageDataset;
use crate::error::{Error, Result};

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Truncated {
            path: path.into(),
            detail: format!("header ends before byte {}", at + 4),
        })
}

/// Loads an IDX image file and its label file (MNIST layout).
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<ImageDataset> {
    parse_idx(
        &read(images_path)?,
        &read(labels_path)?,
        images_path,
        labels_path,
    )
}

pub fn parse_idx(
    images: &[u8],
    labels: &[u8],
    images_path: &Path,
    labels_path: &Path,
) -> Result<ImageDataset> {
    let magic = be_u32(images, 0, images_path)?;
    if magic != IDX_IMAGES {
        return Err(Error::BadMagic {
            path: images_path.into(),
            found: magic,
            expected: IDX_IMAGES,
        });
    }
    let magic = be_u32(labels, 0, labels_path)?;
    if magic != IDX_LABELS {
        return Err(Error::BadMagic {
            path: labels_path.into(),
            found: magic,
            expected: IDX_LABELS,
        });
    }
    let count = be_u32(images, 4, images_path)? as usize;
    let rows = be_u32(images, 8, images_path)? as usize;
    let cols = be_u32(images, 12, images_path)? as usize;
    let n_labels = be_u32(labels, 4, labels_path)? as usize;
    if count != n_labels {
        return Err(Error::CountMismatch {
            images: count,
            labels: n_labels,
        });
    }
    let d = rows * cols;
    let body = &images[16..];
    if body.len() < count * d {
        return Err(Error::Truncated {
            path: images_path.into(),
            detail: format!("expected {} pixel bytes, found {}", count * d, body.len()),
        });
    }
    let label_body = &labels[8..];
    if label_body.len() < count {
        return Err(Error::Truncated {
            path: labels_path.into(),
            detail: format!("expected {count} label bytes, found {}", label_body.len()),
        });
    }
    let pixels = body[..count * d]
        .chunks(d.max(1))
        .take(count)
        .map(|img| img.iter().map(|&b| f64::from(b) / 255.0).collect())
        .collect();
    ImageDataset::new(cols, rows, pixels, label_body[..count].to_vec())
}

/// Loads `label,p0,p1,…` rows.
///
/// Optional leading `#key=value` lines set `maxval`, `width` and `height`. A
/// header row is skipped when its first cell is not an integer. Without a
/// declared maximum the pixel range is inferred as 1, 16 or 255 from the
/// largest value present.
pub fn load_csv(path: &Path) -> Result<ImageDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}

pub fn parse_csv(text: &str, path: impl Into<PathBuf>) -> Result<ImageDataset> {
    let path = path.into();
    let err = |line: usize, detail: String| Error::Parse {
        path: path.clone(),
        line,
        detail,
    };
    let mut maxval: Option<f64> = None;
    let mut width: Option<usize> = None;
    let mut height: Option<usize> = None;
    let mut raw: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut columns: Option<usize> = None;
    let mut seen_data = false;

    for (i, line) in text.lines().enumerate() {
        let Some((key, value)) = line
            .trim()
            .strip_prefix('#')
            .and_then(|d| d.split_once('='))
        else {
            continue;
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| err(i + 1, format!("{key}: {e}")))
        };
        match key.trim() {
            "maxval" => maxval = Some(num(value)?),
            "width" => width = Some(num(value)? as usize),
            "height" => height = Some(num(value)? as usize),
            _ => {}
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    for record in reader.records() {
        let record = record
            .map_err(|e| err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let lineno = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let cells: Vec<&str> = record.iter().collect();
        if !seen_data && cells[0].parse::<i64>().is_err() {
            seen_data = true;
            continue;
        }
        seen_data = true;
        match columns {
            None => columns = Some(cells.len()),
            Some(c) if c != cells.len() => {
                return Err(err(
                    lineno,
                    format!("expected {c} columns, found {}", cells.len()),
                ));
            }
            _ => {}
        }
        let label = cells[0]
            .parse::<u8>()
            .map_err(|e| err(lineno, format!("label {:?}: {e}", cells[0])))?;
        let px = cells[1..]
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|e| err(lineno, format!("cell {c:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if px.is_empty() {
            return Err(err(lineno, "row has no pixels".into()));
        }
        labels.push(label);
        raw.push(px);
    }
    if raw.is_empty() {
        return Err(Error::Empty("csv rows"));
    }
    let d = raw[0].len();
    let maxval = maxval.unwrap_or_else(|| {
        let m = raw.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        if m <= 1.0 {
            1.0
        } else if m <= 16.0 {
            16.0
        } else {
            255.0
        }
    });
    let (w, h) = match (width, height) {
        (Some(w), Some(h)) => (w, h),
        (Some(w), None) => (w, d / w.max(1)),
        (None, Some(h)) => (d / h.max(1), h),
        (None, None) => {
            let side = (d as f64).sqrt().round() as usize;
            if side * side == d {
                (side, side)
            } else {
                (d, 1)
            }
        }
    };
    if w * h != d {
        return Err(err(
            0,
            format!("declared {w}x{h} does not match {d} pixels per row"),
        ));
    }
    let pixels = raw
        .into_iter()
        .map(|r| r.into_iter().map(|v| v / maxval).collect())
        .collect();
    ImageDataset::new(w, h, pixels, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmFormat {
    /// P2
    Ascii,
    /// P5
    #[default]
    Binary,
}

fn to_gray(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Encodes pixels in [0, 1] as a maxval-255 PGM.
pub fn pgm_bytes(
    width: usize,
    height: usize,
    pixels: &[f64],
    format: PgmFormat,
) -> Result<Vec<u8>> {
    if pixels.len() != width * height {
        return Err(Error::DimensionMismatch {
            expected: width * height,
            actual: pixels.len(),
        });
    }
    Ok(match format {
        PgmFormat::Binary => {
            let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
            out.extend(pixels.iter().map(|&v| to_gray(v)));
            out
        }
        PgmFormat::Ascii => {
            let mut out = format!("P2\n{width} {height}\n255\n");
            for row in pixels.chunks(width.max(1)) {
                let line: Vec<String> = row.iter().map(|&v| to_gray(v).to_string()).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            out.into_bytes()
        }
    })
}

pub fn write_pgm(
    path: &Path,
    width: usize,
    height: usize,
    pixels: &[f64],
    format: PgmFormat,
) -> Result<()> {
    std::fs::write(path, pgm_bytes(width, height, pixels, format)?).map_err(|e| Error::io(path, e))
}

/// Reads a P2 or P5 file; returns (width, height, pixels scaled to [0, 1]).
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = read(path)?;
    let err = |detail: &str| Error::Parse {
        path: path.into(),
        line: 0,
        detail: detail.into(),
    };
    // Header tokens, skipping comments; `pos` ends just past the maxval's single whitespace byte.
    let mut tokens = Vec::new();
    let mut pos = 0;
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(err("truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    let num = |s: &str| s.parse::<usize>().map_err(|_| err("bad header number"));
    let (w, h, maxval) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(err("maxval must be in 1..=255"));
    }
    let scale = maxval as f64;
    let pixels: Vec<f64> = match tokens[0].as_str() {
        "P5" => {
            let body = bytes
                .get(pos..pos + w * h)
                .ok_or_else(|| err("truncated pixel data"))?;
            body.iter().map(|&b| f64::from(b) / scale).collect()
        }
        "P2" => {
            let text = String::from_utf8_lossy(bytes.get(pos.min(bytes.len())..).unwrap_or(&[]));
            let vals = text
                .split_ascii_whitespace()
                .take(w * h)
                .map(|t| {
                    t.parse::<f64>()
                        .map(|v| v / scale)
                        .map_err(|_| err("bad pixel value"))
                })
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != w * h {
                return Err(err("truncated pixel data"));
            }
            vals
        }
        _ => return Err(err("not a P2/P5 file")),
    };
    Ok((w, h, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_fixture(n: u32, labels_n: u32) -> (Vec<u8>, Vec<u8>) {
        let mut img = Vec::new();
        img.extend(IDX_IMAGES.to_be_bytes());
        img.extend(n.to_be_bytes());
        img.extend(28u32.to_be_bytes());
        img.extend(28u32.to_be_bytes());
        for i in 0..n as usize * 784 {
            img.push((i % 256) as u8);
        }
        let mut lbl = Vec::new();
        lbl.extend(IDX_LABELS.to_be_bytes());
        lbl.extend(labels_n.to_be_bytes());
        lbl.extend((0..labels_n).map(|i| i as u8));
        (img, lbl)
    }

    #[test]
    fn idx_fixture_loads() {
        let (img, lbl) = idx_fixture(4, 4);
        let ds = parse_idx(&img, &lbl, Path::new("i"), Path::new("l")).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!((ds.width(), ds.height()), (28, 28));
        assert_eq!(ds.labels(), &[0, 1, 2, 3]);
        assert_eq!(ds.image(0)[255], 1.0);
        assert_eq!(ds.image(1)[0], (784 % 256) as f64 / 255.0);
    }

    #[test]
    fn idx_errors_are_distinct() {
        let (mut img, lbl) = idx_fixture(4, 4);
        let p = Path::new("x");
        img[3] = 0x01;
        assert!(matches!(
            parse_idx(&img, &lbl, p, p),
            Err(Error::BadMagic { found: 0x801, .. })
        ));
        let (img, lbl) = idx_fixture(4, 3);
        assert!(matches!(
            parse_idx(&img, &lbl, p, p),
            Err(Error::CountMismatch {
                images: 4,
                labels: 3
            })
        ));
        let (img, lbl) = idx_fixture(4, 4);
        assert!(matches!(
            parse_idx(&img[..100], &lbl, p, p),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            parse_idx(&img[..10], &lbl, p, p),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn csv_examples() {
        let ds = parse_csv("0,0,0,0,0\n", "a.csv").unwrap();
        assert_eq!(ds.image(0), &[0.0; 4]);
        let ds = parse_csv("#maxval=16\nlabel,p0,p1,p2,p3\n5,16,8,0,4\n", "a.csv").unwrap();
        assert_eq!(ds.image(0), &[1.0, 0.5, 0.0, 0.25]);
        assert_eq!(ds.labels(), &[5]);
        let ds = parse_csv("1,0,255\n2,51,0\n3,0,0\n", "a.csv").unwrap();
        assert_eq!((ds.width(), ds.height()), (2, 1));
        assert_eq!(
            ds.images(),
            &[vec![0.0, 1.0], vec![0.2, 0.0], vec![0.0, 0.0]]
        );
        assert!(matches!(
            parse_csv("1,0,1\n2,0\n", "a.csv"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_csv("1,0,x\n", "a.csv"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_csv("#maxval=4\n1,5,0,0,0\n", "a.csv").is_err());
    }

    #[test]
    fn pgm_round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let px: Vec<f64> = (0..12).map(|i| i as f64 / 11.0).collect();
        for (name, fmt) in [("a.pgm", PgmFormat::Ascii), ("b.pgm", PgmFormat::Binary)] {
            let p = dir.path().join(name);
            write_pgm(&p, 4, 3, &px, fmt).unwrap();
            let (w, h, back) = read_pgm(&p).unwrap();
            assert_eq!((w, h), (4, 3));
            for (a, b) in px.iter().zip(&back) {
                assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
        assert_eq!(
            &pgm_bytes(1, 1, &[1.0], PgmFormat::Ascii).unwrap(),
            b"P2\n1 1\n255\n255\n"
        );
        assert!(pgm_bytes(2, 2, &[0.0], PgmFormat::Binary).is_err());
    }
}
