//! PGM (P2/P5, maxval 255) and 8-bit grayscale PNG reading and writing.

use std::fs;
use std::io::{BufWriter, Cursor, ErrorKind, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Reads a grayscale image. The format is detected from the file contents.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == ErrorKind::NotFound => {
            return Err(Error::FileNotFound(path.to_path_buf()))
        }
        Err(e) => return Err(e.into()),
    };
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::UnsupportedFormat(format!(
            "netpbm variant P{} is not 8-bit grayscale",
            bytes[1] as char
        )))
    } else {
        Err(Error::UnsupportedFormat("not a PGM or PNG file".into()))
    }
}

/// Writes `img` as 8-bit grayscale. `.png` paths produce PNG, anything else
/// binary PGM (P5). Values are clamped to `[0, 255]` and rounded half away
/// from zero.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        encode_png(img)?
    } else {
        encode_pgm(img)
    };
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

pub fn to_bytes(img: &Image) -> Vec<u8> {
    img.data().iter().map(|&v| quantize(v)).collect()
}

pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(to_bytes(img));
    out
}

pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        writer
            .write_image_data(&to_bytes(img))
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    Ok(out)
}

struct PgmHeader {
    binary: bool,
    width: usize,
    height: usize,
    data_offset: usize,
}

/// Skips whitespace and `#` comments.
fn skip_ws(bytes: &[u8], mut pos: usize) -> usize {
    while pos < bytes.len() {
        match bytes[pos] {
            b'#' => {
                while pos < bytes.len() && bytes[pos] != b'\n' && bytes[pos] != b'\r' {
                    pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => pos += 1,
            _ => break,
        }
    }
    pos
}

fn read_uint(bytes: &[u8], pos: usize, what: &str) -> Result<(usize, usize)> {
    let start = skip_ws(bytes, pos);
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return Err(Error::CorruptFile(format!("missing or malformed {what}")));
    }
    let text = std::str::from_utf8(&bytes[start..end]).expect("ascii digits");
    let value = text
        .parse::<usize>()
        .map_err(|_| Error::CorruptFile(format!("{what} out of range")))?;
    Ok((value, end))
}

fn parse_pgm_header(bytes: &[u8]) -> Result<PgmHeader> {
    let binary = &bytes[..2] == b"P5";
    let (width, pos) = read_uint(bytes, 2, "width")?;
    let (height, pos) = read_uint(bytes, pos, "height")?;
    let (maxval, pos) = read_uint(bytes, pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::CorruptFile(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval {maxval}; only 255 is supported"
        )));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::CorruptFile("no separator after maxval".into()));
    }
    Ok(PgmHeader {
        binary,
        width,
        height,
        data_offset: pos + 1,
    })
}

fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let header = parse_pgm_header(bytes)?;
    let count = header
        .width
        .checked_mul(header.height)
        .ok_or_else(|| Error::CorruptFile("dimensions overflow".into()))?;
    let data: Vec<f64> = if header.binary {
        let raw = bytes
            .get(header.data_offset..header.data_offset + count)
            .ok_or_else(|| Error::CorruptFile("truncated P5 pixel data".into()))?;
        raw.iter().map(|&b| f64::from(b)).collect()
    } else {
        let mut data = Vec::with_capacity(count);
        let mut pos = header.data_offset;
        for i in 0..count {
            let (v, next) = read_uint(bytes, pos, "sample")
                .map_err(|_| Error::CorruptFile(format!("bad or missing P2 sample {i}")))?;
            if v > 255 {
                return Err(Error::CorruptFile(format!("sample {v} exceeds maxval")));
            }
            data.push(v as f64);
            pos = next;
        }
        data
    };
    Image::new(header.width, header.height, data)
}

fn decode_png(bytes: &[u8]) -> Result<Image> {
    let corrupt = |e: png::DecodingError| Error::CorruptFile(e.to_string());
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(corrupt)?;
    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    if color != png::ColorType::Grayscale {
        return Err(Error::UnsupportedFormat(format!(
            "PNG color type {color:?}; only grayscale is supported"
        )));
    }
    if depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "PNG bit depth {depth:?}; only 8-bit is supported"
        )));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::CorruptFile("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(corrupt)?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let data = buf[..w * h].iter().map(|&b| f64::from(b)).collect();
    Image::new(w, h, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_pgm_transcription() {
        let img = decode_image(b"P2\n# tiny\n2 2\n255\n0 128\n255 64\n").unwrap();
        assert_eq!(img.dimensions(), (2, 2));
        assert_eq!(img.data(), &[0., 128., 255., 64.]);
    }

    #[test]
    fn binary_pgm_with_comment_in_header() {
        let mut bytes = b"P5 3 # width\n1\n255\n".to_vec();
        bytes.extend([1u8, 2, 250]);
        let img = decode_image(&bytes).unwrap();
        assert_eq!(img.data(), &[1., 2., 250.]);
    }

    #[test]
    fn rejects_sixteen_bit_and_other_netpbm() {
        assert!(matches!(
            decode_image(b"P2\n1 1\n65535\n7\n"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_image(b"P6\n1 1\n255\n\x01\x02\x03"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_image(b"GIF89a"),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn corrupt_pgm() {
        assert!(matches!(
            decode_image(b"P5\n4 4\n255\n\x00\x01"),
            Err(Error::CorruptFile(_))
        ));
        assert!(matches!(
            decode_image(b"P2\n2 1\n255\n3"),
            Err(Error::CorruptFile(_))
        ));
        assert!(matches!(
            decode_image(b"P2\n1 1\n255\n300\n"),
            Err(Error::CorruptFile(_))
        ));
        assert!(matches!(decode_image(b"P2\nx"), Err(Error::CorruptFile(_))));
    }

    #[test]
    fn quantization_rule() {
        assert_eq!(quantize(255.7), 255);
        assert_eq!(quantize(-3.2), 0);
        assert_eq!(quantize(127.5), 128);
        assert_eq!(quantize(127.49), 127);
    }

    fn rgb_png() -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 1, 1);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[1, 2, 3]).unwrap();
        }
        out
    }

    fn gray16_png() -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 1, 1);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Sixteen);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[1, 2]).unwrap();
        }
        out
    }

    #[test]
    fn png_rejections() {
        assert!(matches!(
            decode_image(&rgb_png()),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_image(&gray16_png()),
            Err(Error::UnsupportedFormat(_))
        ));
        let mut truncated = encode_png(&Image::filled(4, 4, 9.0).unwrap()).unwrap();
        truncated.truncate(30);
        assert!(matches!(
            decode_image(&truncated),
            Err(Error::CorruptFile(_))
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_image("/definitely/not/here.pgm"),
            Err(Error::FileNotFound(_))
        ));
    }

    #[test]
    fn save_clamps_and_rounds() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::new(3, 1, vec![255.7, -3.2, 127.5]).unwrap();
        for name in ["a.pgm", "a.png"] {
            let path = dir.path().join(name);
            save_image(&img, &path).unwrap();
            assert_eq!(load_image(&path).unwrap().data(), &[255., 0., 128.]);
        }
    }
}
