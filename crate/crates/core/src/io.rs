//! Binary array and graph files: a 4-byte magic, a little-endian version
//! word, then the payload as little-endian 64-bit words.

use std::fs;
use std::path::Path;

use crate::error::{PipError, Result};
use crate::graph_oracle::validate_words;

pub const ARRAY_MAGIC: [u8; 4] = *b"PIPA";
pub const GRAPH_MAGIC: [u8; 4] = *b"PIPG";
pub const VERSION: u64 = 1;

pub fn encode(magic: [u8; 4], words: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * words.len());
    out.extend_from_slice(&magic);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for w in words {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn decode(magic: [u8; 4], bytes: &[u8]) -> Result<Vec<u64>> {
    let bad = |msg: &str| Err(PipError::Input(msg.to_string()));
    if bytes.len() < 12 || bytes[..4] != magic {
        return bad(&format!("missing {} header", String::from_utf8_lossy(&magic)));
    }
    let version = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes"));
    if version != VERSION {
        return bad(&format!("unsupported version {version}"));
    }
    let (words, rest) = bytes[12..].as_chunks::<8>();
    if !rest.is_empty() {
        return bad("payload is not a whole number of words");
    }
    Ok(words.iter().map(|w| u64::from_le_bytes(*w)).collect())
}

fn in_file(path: &Path) -> impl Fn(std::io::Error) -> PipError + '_ {
    move |e| PipError::Input(format!("{}: {e}", path.display()))
}

pub fn write_array(path: &Path, words: &[u64]) -> Result<()> {
    fs::write(path, encode(ARRAY_MAGIC, words)).map_err(in_file(path))
}

pub fn read_array(path: &Path) -> Result<Vec<u64>> {
    decode(ARRAY_MAGIC, &fs::read(path).map_err(in_file(path))?)
}

pub fn write_graph(path: &Path, words: &[u64]) -> Result<()> {
    validate_words(words)?;
    fs::write(path, encode(GRAPH_MAGIC, words)).map_err(in_file(path))
}

/// Reads a binary graph file, or a `u v w` text edge list when the file
/// does not start with the graph magic.
pub fn read_graph(path: &Path) -> Result<Vec<u64>> {
    let bytes = fs::read(path).map_err(in_file(path))?;
    if bytes.starts_with(&GRAPH_MAGIC) {
        let words = decode(GRAPH_MAGIC, &bytes)?;
        validate_words(&words)?;
        return Ok(words);
    }
    let text = String::from_utf8(bytes).map_err(|_| PipError::Input("graph file is neither binary nor text".into()))?;
    Ok(crate::graph_oracle::CsrGraph::parse_edge_list(&text)?.into_words())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_header_checks() {
        let w = vec![1, u64::MAX, 7];
        let bytes = encode(ARRAY_MAGIC, &w);
        assert_eq!(&bytes[..4], b"PIPA");
        assert_eq!(decode(ARRAY_MAGIC, &bytes).unwrap(), w);
        assert!(decode(GRAPH_MAGIC, &bytes).is_err());
        assert!(decode(ARRAY_MAGIC, &bytes[..bytes.len() - 1]).is_err());
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(decode(ARRAY_MAGIC, &v2).is_err());
        assert_eq!(decode(ARRAY_MAGIC, &encode(ARRAY_MAGIC, &[])).unwrap(), Vec::<u64>::new());
    }

    #[test]
    fn graph_files() {
        let dir = std::env::temp_dir().join(format!("pipkit-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let g = crate::graph_oracle::CsrGraph::from_edges(3, &[(0, 1, 5), (1, 2, 6)]).unwrap();
        let bin = dir.join("g.pipg");
        write_graph(&bin, g.words()).unwrap();
        assert_eq!(read_graph(&bin).unwrap(), g.words());
        let txt = dir.join("g.txt");
        fs::write(&txt, "1 2 5\n2 3 6\n").unwrap();
        assert_eq!(read_graph(&txt).unwrap(), g.words());
        assert!(write_graph(&bin, &[2, 1]).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }
}
