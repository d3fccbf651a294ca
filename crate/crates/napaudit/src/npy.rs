//! Reader and writer for the NPY array container (format versions 1.0–3.0,
//! C order). Floats and integers of every standard width are read and
//! promoted; `f32` and `f64` tensors are written as `<f4` / `<f8`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use napaudit_core::{Scalar, Tensor};

const MAGIC: &[u8; 6] = b"\x93NUMPY";

#[derive(Debug, thiserror::Error)]
pub enum NpyError {
    #[error("{path}: malformed array file at byte {offset}: {message}")]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },
    #[error("{path}: unsupported dtype `{dtype}`")]
    UnsupportedDtype { path: PathBuf, dtype: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Tensor {
        path: PathBuf,
        source: napaudit_core::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Float,
    Int,
    Uint,
}

/// Element type declared in a header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dtype {
    kind: Kind,
    size: usize,
    big_endian: bool,
}

impl Dtype {
    fn parse(descr: &str) -> Option<Self> {
        let mut chars = descr.chars();
        let (big_endian, rest) = match chars.next()? {
            '<' | '|' | '=' => (false, chars.as_str()),
            '>' => (true, chars.as_str()),
            _ => (false, descr),
        };
        let mut chars = rest.chars();
        let kind = match chars.next()? {
            'f' => Kind::Float,
            'i' => Kind::Int,
            'u' => Kind::Uint,
            _ => return None,
        };
        let size: usize = chars.as_str().parse().ok()?;
        let ok = match kind {
            Kind::Float => matches!(size, 4 | 8),
            Kind::Int | Kind::Uint => matches!(size, 1 | 2 | 4 | 8),
        };
        ok.then_some(Self { kind, size, big_endian })
    }

    pub fn item_size(&self) -> usize {
        self.size
    }

    fn decode(&self, b: &[u8]) -> f64 {
        let mut buf = [0u8; 8];
        buf[..self.size].copy_from_slice(b);
        if self.big_endian {
            buf[..self.size].reverse();
        }
        match (self.kind, self.size) {
            (Kind::Float, 4) => f32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            (Kind::Float, _) => f64::from_le_bytes(buf),
            (Kind::Int, 1) => buf[0] as i8 as f64,
            (Kind::Int, 2) => i16::from_le_bytes(buf[..2].try_into().unwrap()) as f64,
            (Kind::Int, 4) => i32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            (Kind::Int, _) => i64::from_le_bytes(buf) as f64,
            (Kind::Uint, 1) => buf[0] as f64,
            (Kind::Uint, 2) => u16::from_le_bytes(buf[..2].try_into().unwrap()) as f64,
            (Kind::Uint, 4) => u32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            (Kind::Uint, _) => u64::from_le_bytes(buf) as f64,
        }
    }

    /// Decodes a packed buffer into `out`, converting to `T`.
    pub fn decode_into<T: Scalar>(&self, bytes: &[u8], out: &mut [T]) {
        match (self.kind, self.size, self.big_endian) {
            (Kind::Float, 4, false) => {
                for (o, c) in out.iter_mut().zip(bytes.chunks_exact(4)) {
                    *o = T::from_f64(f32::from_le_bytes(c.try_into().unwrap()) as f64);
                }
            }
            (Kind::Float, 8, false) => {
                for (o, c) in out.iter_mut().zip(bytes.chunks_exact(8)) {
                    *o = T::from_f64(f64::from_le_bytes(c.try_into().unwrap()));
                }
            }
            _ => {
                for (o, c) in out.iter_mut().zip(bytes.chunks_exact(self.size)) {
                    *o = T::from_f64(self.decode(c));
                }
            }
        }
    }
}

/// Parsed header and where the payload starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NpyHeader {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub data_offset: u64,
}

impl NpyHeader {
    pub fn num_elements(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn payload_len(&self) -> u64 {
        (self.num_elements() * self.dtype.size) as u64
    }
}

fn format_err(path: &Path, offset: u64, message: impl Into<String>) -> NpyError {
    NpyError::Format {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> NpyError + '_ {
    move |source| NpyError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Values of the header dictionary that matter here.
#[derive(Debug, Default)]
struct HeaderDict {
    descr: Option<String>,
    fortran_order: Option<bool>,
    shape: Option<Vec<usize>>,
}

/// Parses the Python-literal header dictionary. Returns the byte offset
/// (relative to the dictionary start) of the first problem on failure.
fn parse_dict(text: &str) -> Result<HeaderDict, (usize, String)> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && (bytes[*pos] as char).is_whitespace() {
            *pos += 1;
        }
    };
    let expect = |pos: &mut usize, c: u8| -> Result<(), (usize, String)> {
        if bytes.get(*pos) == Some(&c) {
            *pos += 1;
            Ok(())
        } else {
            Err((*pos, format!("expected `{}`", c as char)))
        }
    };
    let string = |pos: &mut usize| -> Result<String, (usize, String)> {
        let q = *bytes.get(*pos).ok_or((*pos, "unexpected end of header".to_string()))?;
        if q != b'\'' && q != b'"' {
            return Err((*pos, "expected a quoted string".into()));
        }
        let start = *pos + 1;
        let end = text[start..]
            .find(q as char)
            .ok_or((*pos, "unterminated string".to_string()))?
            + start;
        *pos = end + 1;
        Ok(text[start..end].to_string())
    };
    let mut dict = HeaderDict::default();
    skip_ws(&mut pos);
    expect(&mut pos, b'{')?;
    loop {
        skip_ws(&mut pos);
        if bytes.get(pos) == Some(&b'}') {
            break;
        }
        let key_at = pos;
        let key = string(&mut pos)?;
        skip_ws(&mut pos);
        expect(&mut pos, b':')?;
        skip_ws(&mut pos);
        match key.as_str() {
            "descr" => dict.descr = Some(string(&mut pos)?),
            "fortran_order" => {
                if text[pos..].starts_with("True") {
                    dict.fortran_order = Some(true);
                    pos += 4;
                } else if text[pos..].starts_with("False") {
                    dict.fortran_order = Some(false);
                    pos += 5;
                } else {
                    return Err((pos, "fortran_order must be True or False".into()));
                }
            }
            "shape" => {
                expect(&mut pos, b'(')?;
                let close = text[pos..]
                    .find(')')
                    .ok_or((pos, "unterminated shape tuple".to_string()))?
                    + pos;
                let mut dims = Vec::new();
                for part in text[pos..close].split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    let d = part
                        .trim_end_matches('L')
                        .parse::<usize>()
                        .map_err(|_| (pos, format!("bad dimension `{part}`")))?;
                    dims.push(d);
                }
                dict.shape = Some(dims);
                pos = close + 1;
            }
            _ => return Err((key_at, format!("unknown header key `{key}`"))),
        }
        skip_ws(&mut pos);
        match bytes.get(pos) {
            Some(b',') => pos += 1,
            Some(b'}') => {}
            _ => return Err((pos, "expected `,` or `}`".into())),
        }
    }
    Ok(dict)
}

/// Reads and validates the header; leaves `r` at the start of the payload.
pub fn read_header<R: Read>(r: &mut R, path: &Path) -> Result<NpyHeader, NpyError> {
    let mut pre = [0u8; 8];
    r.read_exact(&mut pre)
        .map_err(|_| format_err(path, 0, "file too short for the magic string"))?;
    if &pre[..6] != MAGIC {
        return Err(format_err(path, 0, "missing NPY magic string"));
    }
    let (len_bytes, header_len) = match pre[6] {
        1 => {
            let mut b = [0u8; 2];
            r.read_exact(&mut b)
                .map_err(|_| format_err(path, 8, "truncated header length"))?;
            (2u64, u16::from_le_bytes(b) as usize)
        }
        2 | 3 => {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)
                .map_err(|_| format_err(path, 8, "truncated header length"))?;
            (4u64, u32::from_le_bytes(b) as usize)
        }
        v => {
            return Err(format_err(
                path,
                6,
                format!("unsupported format version {v}.{}", pre[7]),
            ))
        }
    };
    let dict_start = 8 + len_bytes;
    let mut raw = vec![0u8; header_len];
    r.read_exact(&mut raw)
        .map_err(|_| format_err(path, dict_start, "header shorter than declared"))?;
    let text = std::str::from_utf8(&raw)
        .map_err(|e| format_err(path, dict_start + e.valid_up_to() as u64, "header is not text"))?;
    let dict = parse_dict(text).map_err(|(off, msg)| format_err(path, dict_start + off as u64, msg))?;
    let descr = dict
        .descr
        .ok_or_else(|| format_err(path, dict_start, "header lacks `descr`"))?;
    let dtype = Dtype::parse(&descr).ok_or_else(|| NpyError::UnsupportedDtype {
        path: path.to_path_buf(),
        dtype: descr.clone(),
    })?;
    if dict
        .fortran_order
        .ok_or_else(|| format_err(path, dict_start, "header lacks `fortran_order`"))?
    {
        return Err(format_err(path, dict_start, "Fortran-ordered arrays are not supported"));
    }
    let shape = dict
        .shape
        .ok_or_else(|| format_err(path, dict_start, "header lacks `shape`"))?;
    if shape.contains(&0) {
        return Err(format_err(
            path,
            dict_start,
            format!("empty arrays are not supported (shape {shape:?})"),
        ));
    }
    Ok(NpyHeader {
        dtype,
        shape,
        data_offset: dict_start + header_len as u64,
    })
}

/// Reads the whole array, converting to `T`.
pub fn read_array_file_as<T: Scalar>(path: &Path) -> Result<Tensor<T>, NpyError> {
    let file = File::open(path).map_err(io_err(path))?;
    let file_len = file.metadata().map_err(io_err(path))?.len();
    let mut r = BufReader::new(file);
    let header = read_header(&mut r, path)?;
    let available = file_len.saturating_sub(header.data_offset);
    if available != header.payload_len() {
        return Err(format_err(
            path,
            header.data_offset + available.min(header.payload_len()),
            format!(
                "shape {:?} needs {} payload bytes but the file holds {available}",
                header.shape,
                header.payload_len()
            ),
        ));
    }
    let mut bytes = vec![0u8; header.payload_len() as usize];
    r.read_exact(&mut bytes).map_err(io_err(path))?;
    let mut data = vec![T::ZERO; header.num_elements()];
    header.dtype.decode_into(&bytes, &mut data);
    Tensor::new(header.shape, data).map_err(|source| NpyError::Tensor {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads an array at the pipeline width (`f32`).
pub fn read_array_file(path: &Path) -> Result<Tensor<f32>, NpyError> {
    read_array_file_as(path)
}

/// Element types that can be written.
pub trait NpyElement: Scalar {
    const DESCR: &'static str;
    fn write_le(self, out: &mut Vec<u8>);
}

impl NpyElement for f32 {
    const DESCR: &'static str = "<f4";
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

impl NpyElement for f64 {
    const DESCR: &'static str = "<f8";
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

/// Version 1.0 header, padded so the payload starts on a 64-byte boundary.
pub fn encode_header(descr: &str, shape: &[usize]) -> Vec<u8> {
    let dims = match shape {
        [d] => format!("{d},"),
        _ => shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", "),
    };
    let mut dict = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': ({dims}), }}");
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    dict.push_str(&" ".repeat(unpadded.next_multiple_of(64) - unpadded));
    dict.push('\n');
    let mut out = Vec::with_capacity(10 + dict.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out
}

pub fn encode_array<T: NpyElement>(t: &Tensor<T>) -> Vec<u8> {
    let mut out = encode_header(T::DESCR, t.shape());
    out.reserve(t.len() * T::BYTES);
    for &v in t.data() {
        v.write_le(&mut out);
    }
    out
}

pub fn write_array_file<T: NpyElement>(t: &Tensor<T>, path: &Path) -> Result<(), NpyError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_array(t)).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// An NPY file with a leading example axis, read one example at a time.
#[derive(Debug)]
pub struct NpyLayer {
    path: PathBuf,
    file: File,
    header: NpyHeader,
    example_shape: Vec<usize>,
}

impl NpyLayer {
    pub fn open(path: &Path) -> Result<Self, NpyError> {
        let mut file = File::open(path).map_err(io_err(path))?;
        let file_len = file.metadata().map_err(io_err(path))?.len();
        let header = read_header(&mut file, path)?;
        if header.shape.len() < 2 {
            return Err(format_err(
                path,
                0,
                format!("layer file needs a leading example axis, shape {:?}", header.shape),
            ));
        }
        if file_len.saturating_sub(header.data_offset) != header.payload_len() {
            return Err(format_err(
                path,
                header.data_offset,
                format!("payload size does not match shape {:?}", header.shape),
            ));
        }
        let example_shape = header.shape[1..].to_vec();
        Ok(Self {
            path: path.to_path_buf(),
            file,
            header,
            example_shape,
        })
    }

    pub fn header(&self) -> &NpyHeader {
        &self.header
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn read_at(&self, buf: &mut [u8], offset: u64) -> io::Result<()> {
        #[cfg(unix)]
        {
            std::os::unix::fs::FileExt::read_exact_at(&self.file, buf, offset)
        }
        #[cfg(windows)]
        {
            let mut done = 0;
            while done < buf.len() {
                let n = std::os::windows::fs::FileExt::seek_read(&self.file, &mut buf[done..], offset + done as u64)?;
                if n == 0 {
                    return Err(io::ErrorKind::UnexpectedEof.into());
                }
                done += n;
            }
            Ok(())
        }
    }
}

impl napaudit_core::nap::ActivationSource for NpyLayer {
    type Elem = f32;

    fn example_shape(&self) -> &[usize] {
        &self.example_shape
    }

    fn num_examples(&self) -> usize {
        self.header.shape[0]
    }

    fn read_example(&self, id: usize, out: &mut [f32]) -> napaudit_core::Result<()> {
        let n = self.num_examples();
        if id >= n {
            return Err(napaudit_core::Error::Index { index: id, len: n });
        }
        let row_bytes = out.len() * self.header.dtype.size;
        let mut bytes = vec![0u8; row_bytes];
        self.read_at(&mut bytes, self.header.data_offset + (id * row_bytes) as u64)
            .map_err(|e| napaudit_core::Error::Source(format!("{}: {e}", self.path.display())))?;
        self.header.dtype.decode_into(&bytes, out);
        if let Some(pos) = out.iter().position(|v| !v.is_finite()) {
            return Err(napaudit_core::Error::NonFinite(format!(
                "{}: example {id} element {pos} is not finite",
                self.path.display()
            )));
        }
        Ok(())
    }
}
