use std::path::Path;

use ayn_core::data::VisualFeatureStore;

use super::{has_extension, read_bytes, read_text, write_bytes, write_text};
use crate::error::{AynError, Result};

const MAGIC: &[u8; 4] = b"AYNF";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FeatureFormat {
    /// `image_id<TAB>f1,f2,...`; values may also be tab or space separated.
    Tsv,
    /// `AYNF`, u32 count, u32 dim, then (u16 id length, id, dim × f32), all little-endian.
    Binary,
}

impl FeatureFormat {
    /// `.bin` files are binary, everything else TSV.
    pub fn detect(path: &Path) -> Self {
        if has_extension(path, "bin") {
            FeatureFormat::Binary
        } else {
            FeatureFormat::Tsv
        }
    }
}

pub fn load_features(path: &Path, format: Option<FeatureFormat>) -> Result<VisualFeatureStore> {
    match format.unwrap_or_else(|| FeatureFormat::detect(path)) {
        FeatureFormat::Tsv => read_features_tsv(&read_text(path)?, path),
        FeatureFormat::Binary => read_features_binary(&read_bytes(path)?, path),
    }
}

pub fn save_features(path: &Path, store: &VisualFeatureStore, format: Option<FeatureFormat>) -> Result<()> {
    match format.unwrap_or_else(|| FeatureFormat::detect(path)) {
        FeatureFormat::Tsv => write_text(path, &write_features_tsv(store)),
        FeatureFormat::Binary => write_bytes(path, &write_features_binary(store, path)?),
    }
}

pub fn read_features_tsv(text: &str, path: &Path) -> Result<VisualFeatureStore> {
    let mut store: Option<VisualFeatureStore> = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| AynError::format(path, i + 1, m);
        let (id, values) = line
            .split_once('\t')
            .ok_or_else(|| err("expected image_id<TAB>values".into()))?;
        let vector = values
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|v| !v.is_empty())
            .map(|v| v.parse::<f64>().map_err(|e| err(format!("bad value {v:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        let s = match &mut store {
            Some(s) => s,
            None => store.insert(VisualFeatureStore::new(vector.len()).map_err(|e| err(e.to_string()))?),
        };
        s.insert(id.trim(), vector).map_err(|e| err(e.to_string()))?;
    }
    store.ok_or_else(|| AynError::format(path, 0, "no feature vectors"))
}

pub fn write_features_tsv(store: &VisualFeatureStore) -> String {
    let mut out = String::new();
    for (id, v) in store.iter() {
        let values: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(id);
        out.push('\t');
        out.push_str(&values.join(","));
        out.push('\n');
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| AynError::format(self.path, 0, format!("truncated record: {what} at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
}

pub fn read_features_binary(bytes: &[u8], path: &Path) -> Result<VisualFeatureStore> {
    let mut r = Reader { bytes, pos: 0, path };
    if r.take(4, "magic")? != MAGIC {
        return Err(AynError::format(path, 0, "bad magic: expected AYNF"));
    }
    let count = r.u32("count")? as usize;
    let dim = r.u32("dim")? as usize;
    let mut store = VisualFeatureStore::new(dim).map_err(|e| AynError::format(path, 0, e.to_string()))?;
    for _ in 0..count {
        let len = u16::from_le_bytes(r.take(2, "id length")?.try_into().expect("2 bytes")) as usize;
        let id = std::str::from_utf8(r.take(len, "id")?)
            .map_err(|e| AynError::format(path, 0, format!("id is not UTF-8: {e}")))?;
        let raw = r.take(dim * 4, "values")?;
        let vector = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        store
            .insert(id, vector)
            .map_err(|e| AynError::format(path, 0, e.to_string()))?;
    }
    if r.pos != bytes.len() {
        return Err(AynError::format(path, 0, "trailing bytes after the last record"));
    }
    Ok(store)
}

/// Values are stored as f32.
pub fn write_features_binary(store: &VisualFeatureStore, path: &Path) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    out.extend_from_slice(&(store.dim() as u32).to_le_bytes());
    for (id, v) in store.iter() {
        let len = u16::try_from(id.len()).map_err(|_| AynError::format(path, 0, format!("image id too long: {id}")))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        for x in v {
            out.extend_from_slice(&(*x as f32).to_le_bytes());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("f")
    }

    #[test]
    fn tsv_fixture() {
        let s = read_features_tsv("a\t1,2,3\nb\t0.5,0,-1\n", p()).unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.get("b"), Some(&[0.5, 0.0, -1.0][..]));
        assert!(read_features_tsv("a\t1,2,3\nb\t1,2\n", p()).is_err());
    }

    #[test]
    fn binary_round_trips_after_f32_cast() {
        let s = read_features_tsv("a\t0.1,2,3\nimg-b\t1e-3,0,-1.5\n", p()).unwrap();
        let back = read_features_binary(&write_features_binary(&s, p()).unwrap(), p()).unwrap();
        for (id, v) in s.iter() {
            let expect: Vec<f64> = v.iter().map(|x| *x as f32 as f64).collect();
            assert_eq!(back.get(id).unwrap(), &expect[..]);
        }
    }

    #[test]
    fn binary_errors() {
        let s = read_features_tsv("a\t1,2\n", p()).unwrap();
        let mut bytes = write_features_binary(&s, p()).unwrap();
        assert!(read_features_binary(&bytes[..bytes.len() - 1], p()).is_err());
        bytes[0] = b'X';
        assert!(read_features_binary(&bytes, p()).is_err());
    }
}
