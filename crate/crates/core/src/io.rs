//! Binary matrix files and problem directories.
//!
//! A matrix file is `b"PJBD"`, a version byte (1), a field byte (0 real,
//! 1 complex), `n1` and `n2` as little-endian `u64`, then the entries in
//! column-major order as little-endian `f64` (complex entries as real part
//! followed by imaginary part). A problem directory holds one such file per
//! matrix and a `manifest.json`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FieldKind, Mat};
use crate::generator::{GeneratorConfig, RNG_ID};
use crate::kernels::NormMode;
use crate::problem::{Partition, ProblemSet};

pub const MAGIC: &[u8; 4] = b"PJBD";
pub const FORMAT_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 4 + 1 + 1 + 8 + 8;
pub const MANIFEST_NAME: &str = "manifest.json";

/// Header of a matrix file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixHeader {
    pub field: FieldKind,
    pub n1: usize,
    pub n2: usize,
}

pub fn encode_matrix<T: Field>(m: &Mat<T>) -> Vec<u8> {
    let per = if T::KIND == FieldKind::Complex { 16 } else { 8 };
    let mut out = Vec::with_capacity(HEADER_LEN + per * m.len());
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.push(T::KIND.tag());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for &x in m.iter() {
        let (re, im) = x.parts();
        out.extend_from_slice(&re.to_le_bytes());
        if T::KIND == FieldKind::Complex {
            out.extend_from_slice(&im.to_le_bytes());
        }
    }
    out
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn decode_header(bytes: &[u8], path: &Path) -> Result<MatrixHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(path, format!("file is {} bytes, shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(format_err(path, "bad magic bytes"));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(format_err(path, format!("unsupported format version {}", bytes[4])));
    }
    let field = FieldKind::from_tag(bytes[5]).ok_or_else(|| format_err(path, format!("unknown field byte {}", bytes[5])))?;
    let n1 = u64::from_le_bytes(bytes[6..14].try_into().expect("8 bytes"));
    let n2 = u64::from_le_bytes(bytes[14..22].try_into().expect("8 bytes"));
    let n1 = usize::try_from(n1).map_err(|_| format_err(path, "row count overflows"))?;
    let n2 = usize::try_from(n2).map_err(|_| format_err(path, "column count overflows"))?;
    Ok(MatrixHeader { field, n1, n2 })
}

pub fn decode_matrix<T: Field>(bytes: &[u8], path: &Path) -> Result<Mat<T>> {
    let h = decode_header(bytes, path)?;
    if h.field != T::KIND {
        return Err(format_err(path, format!("file holds {} data, expected {}", h.field, T::KIND)));
    }
    let per = if T::KIND == FieldKind::Complex { 16 } else { 8 };
    let expected = h
        .n1
        .checked_mul(h.n2)
        .and_then(|c| c.checked_mul(per))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| format_err(path, "dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            format!("expected {expected} bytes for {}×{}, found {}", h.n1, h.n2, bytes.len()),
        ));
    }
    let body = &bytes[HEADER_LEN..];
    let read = |i: usize| f64::from_le_bytes(body[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    let data: Vec<T> = if T::KIND == FieldKind::Complex {
        (0..h.n1 * h.n2).map(|i| T::from_parts(read(2 * i), read(2 * i + 1))).collect()
    } else {
        (0..h.n1 * h.n2).map(|i| T::from_parts(read(i), 0.0)).collect()
    };
    Ok(Mat::from_vec(h.n1, h.n2, data))
}

pub fn write_matrix<T: Field>(path: &Path, m: &Mat<T>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_matrix(m)).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_matrix<T: Field>(path: &Path) -> Result<Mat<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes, path)
}

/// Reads only the header of a matrix file.
pub fn read_header(path: &Path) -> Result<MatrixHeader> {
    use std::io::Read;
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        let n = f.read(&mut buf[got..]).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        got += n;
    }
    decode_header(&buf[..got], path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemManifest {
    pub format: String,
    pub format_version: u8,
    pub library_version: String,
    pub field: FieldKind,
    pub n1: usize,
    pub n2: usize,
    pub partition: Partition,
    pub norm_mode: NormMode,
    pub files: Vec<String>,
    pub generator: Option<GeneratorConfig>,
    pub rng: Option<String>,
}

pub fn matrix_file_name(index: usize) -> String {
    format!("B_{index:04}.pjbd")
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes every matrix and the manifest into `dir`, creating it if needed.
pub fn save_problem<T: Field>(dir: &Path, problem: &ProblemSet<T>, generator: Option<&GeneratorConfig>) -> Result<ProblemManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(problem.len());
    for (i, b) in problem.matrices().iter().enumerate() {
        let name = matrix_file_name(i);
        write_matrix(&dir.join(&name), b)?;
        files.push(name);
    }
    let manifest = ProblemManifest {
        format: String::from_utf8_lossy(MAGIC).into_owned(),
        format_version: FORMAT_VERSION,
        library_version: crate::VERSION.to_string(),
        field: T::KIND,
        n1: problem.n1(),
        n2: problem.n2(),
        partition: problem.partition().clone(),
        norm_mode: problem.norm_mode(),
        files,
        generator: generator.cloned(),
        rng: generator.map(|_| RNG_ID.to_string()),
    };
    write_json(&dir.join(MANIFEST_NAME), &manifest)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<ProblemManifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: ProblemManifest = serde_json::from_str(&text)?;
    if manifest.format.as_bytes() != MAGIC || manifest.format_version != FORMAT_VERSION {
        return Err(format_err(&path, "not a problem manifest of a supported version"));
    }
    if manifest.files.is_empty() {
        return Err(format_err(&path, "manifest lists no matrix files"));
    }
    Ok(manifest)
}

fn resolve(dir: &Path, name: &str) -> Result<PathBuf> {
    let p = Path::new(name);
    if p.is_absolute() || p.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
        return Err(format_err(&dir.join(MANIFEST_NAME), format!("matrix path `{name}` escapes the problem directory")));
    }
    Ok(dir.join(p))
}

/// Loads a problem written by [`save_problem`].
pub fn load_problem<T: Field>(dir: &Path) -> Result<(ProblemSet<T>, ProblemManifest)> {
    let manifest = read_manifest(dir)?;
    if manifest.field != T::KIND {
        return Err(format_err(
            &dir.join(MANIFEST_NAME),
            format!("problem holds {} data, expected {}", manifest.field, T::KIND),
        ));
    }
    let mut matrices = Vec::with_capacity(manifest.files.len());
    for name in &manifest.files {
        let path = resolve(dir, name)?;
        let m: Mat<T> = read_matrix(&path)?;
        if m.shape() != (manifest.n1, manifest.n2) {
            return Err(format_err(
                &path,
                format!("matrix is {:?}, manifest says {}×{}", m.shape(), manifest.n1, manifest.n2),
            ));
        }
        matrices.push(m);
    }
    let problem = ProblemSet::with_norm_mode(matrices, manifest.partition.clone(), manifest.norm_mode)?;
    Ok((problem, manifest))
}
