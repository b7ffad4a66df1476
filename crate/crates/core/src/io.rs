//! File formats: raw little-endian `f64` tensors with a TOML sidecar header,
//! and whitespace-separated `i j w` edge lists.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::GraphSpec;

/// Sidecar header describing a raw tensor file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorHeader {
    pub dims: Vec<usize>,
    /// Always `"first-fastest"`: the first dimension varies fastest.
    pub order: String,
    pub dtype: String,
}

pub const TENSOR_ORDER: &str = "first-fastest";
pub const TENSOR_DTYPE: &str = "f64le";

/// Path of the header that accompanies `data`: `<data>.toml`.
pub fn header_path(data: &Path) -> PathBuf {
    let mut p = data.as_os_str().to_owned();
    p.push(".toml");
    PathBuf::from(p)
}

pub fn write_tensor(path: &Path, dims: &[usize], values: &[f64]) -> Result<()> {
    let n: usize = dims.iter().product();
    if n != values.len() {
        return Err(Error::Structural(format!(
            "tensor dims {dims:?} hold {n} values, got {}",
            values.len()
        )));
    }
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    let header = TensorHeader {
        dims: dims.to_vec(),
        order: TENSOR_ORDER.into(),
        dtype: TENSOR_DTYPE.into(),
    };
    let text = toml::to_string(&header).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(header_path(path), text)?;
    Ok(())
}

fn parse_header(text: &str) -> Result<TensorHeader> {
    let header: TensorHeader = toml::from_str(text).map_err(|e| Error::Parse(format!("tensor header: {e}")))?;
    if header.order != TENSOR_ORDER || header.dtype != TENSOR_DTYPE {
        return Err(Error::Parse(format!(
            "unsupported tensor layout order={} dtype={}",
            header.order, header.dtype
        )));
    }
    Ok(header)
}

pub fn read_tensor(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    let header = parse_header(&fs::read_to_string(header_path(path))?)?;
    let bytes = fs::read(path)?;
    let n: usize = header.dims.iter().product();
    if bytes.len() != n * 8 {
        return Err(Error::Parse(format!(
            "{} has {} bytes, header promises {} values",
            path.display(),
            bytes.len(),
            n
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header.dims, values))
}

/// Writes `i j w` lines, one per nonzero weight, 0-based.
pub fn write_edge_list(path: &Path, g: &GraphSpec) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# vertices {}", g.num_vertices())?;
    for &(i, j, w) in g.edges() {
        writeln!(f, "{i} {j} {w:e}")?;
    }
    Ok(())
}

/// Reads an edge list. The vertex count comes from a `# vertices N` comment when
/// present, otherwise from the largest index seen.
pub fn read_edge_list(path: &Path) -> Result<GraphSpec> {
    let f = fs::File::open(path)?;
    let mut declared = None;
    let mut triples = Vec::new();
    for (lineno, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(n) = rest.trim().strip_prefix("vertices") {
                declared = Some(
                    n.trim()
                        .parse::<usize>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?,
                );
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected `i j w`", lineno + 1)));
        }
        let bad = |e: String| Error::Parse(format!("line {}: {e}", lineno + 1));
        let i = parts[0].parse::<usize>().map_err(|e| bad(e.to_string()))?;
        let j = parts[1].parse::<usize>().map_err(|e| bad(e.to_string()))?;
        let w = parts[2].parse::<f64>().map_err(|e| bad(e.to_string()))?;
        triples.push((i, j, w));
    }
    let inferred = triples.iter().map(|t| t.0.max(t.1) + 1).max().unwrap_or(0);
    GraphSpec::new(declared.unwrap_or(inferred).max(inferred), triples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cube.f64");
        let values: Vec<f64> = (0..24).map(|v| v as f64 / 7.0 - 1.0).collect();
        write_tensor(&p, &[2, 3, 4], &values).unwrap();
        let (dims, back) = read_tensor(&p).unwrap();
        assert_eq!(dims, vec![2, 3, 4]);
        assert_eq!(back, values);
        assert!(fs::read_to_string(header_path(&p)).unwrap().contains("first-fastest"));
        assert!(write_tensor(&p, &[5], &values).is_err());
    }

    #[test]
    fn edge_list_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.txt");
        let g = GraphSpec::new(5, [(0, 1, 0.25), (1, 0, 0.25), (3, 2, 1.5)]).unwrap();
        write_edge_list(&p, &g).unwrap();
        assert_eq!(read_edge_list(&p).unwrap(), g);
        fs::write(&p, "0 1\n").unwrap();
        assert!(matches!(read_edge_list(&p), Err(Error::Parse(_))));
    }
}
