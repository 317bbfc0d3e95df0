use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use edgeguard_nn::Tensor2f64;

use crate::error::{PipelineError, Result};

const MAGIC: &[u8; 4] = b"EGFM";
const VERSION: u32 = 1;

/// Dense encoded dataset: standardized feature rows, binary labels, and the
/// feature names that give each column meaning.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub x: Tensor2f64,
    pub y: Vec<u8>,
    pub feature_names: Vec<String>,
    /// Optional per-row annotation (attack category), never used as input.
    pub attack_tags: Option<Vec<String>>,
    /// Rows `0..n_original` came from real data; rows beyond are synthetic
    /// (oversampling appends at the end). Validation carves must draw from
    /// the original range only.
    pub n_original: usize,
}

impl FeatureMatrix {
    pub fn new(x: Tensor2f64, y: Vec<u8>, feature_names: Vec<String>) -> Result<FeatureMatrix> {
        let n = x.rows();
        if y.len() != n {
            return Err(PipelineError::Data(format!(
                "label count {} != row count {n}",
                y.len()
            )));
        }
        if feature_names.len() != x.cols() {
            return Err(PipelineError::Data(format!(
                "feature name count {} != column count {}",
                feature_names.len(),
                x.cols()
            )));
        }
        Ok(FeatureMatrix {
            x,
            y,
            feature_names,
            attack_tags: None,
            n_original: n,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&y| y == 1).count();
        (self.y.len() - pos, pos)
    }

    /// New matrix holding the given rows, in the given order. The result is
    /// treated as all-original (a selection has no synthetic suffix).
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut x = Tensor2f64::zeros(rows.len(), self.x.cols());
        for (out, &src) in rows.iter().enumerate() {
            x.row_mut(out).copy_from_slice(self.x.row(src));
        }
        FeatureMatrix {
            x,
            y: rows.iter().map(|&r| self.y[r]).collect(),
            feature_names: self.feature_names.clone(),
            attack_tags: self
                .attack_tags
                .as_ref()
                .map(|t| rows.iter().map(|&r| t[r].clone()).collect()),
            n_original: rows.len(),
        }
    }

    /// Binary serialization: magic, version, dimensions, names, row-major
    /// f64 features, labels, optional tags. Little-endian throughout.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u64::<LittleEndian>(self.x.rows() as u64)?;
        w.write_u64::<LittleEndian>(self.x.cols() as u64)?;
        w.write_u64::<LittleEndian>(self.n_original as u64)?;
        for name in &self.feature_names {
            write_string(&mut w, name)?;
        }
        for &v in self.x.data() {
            w.write_f64::<LittleEndian>(v)?;
        }
        w.write_all(&self.y)?;
        match &self.attack_tags {
            None => w.write_u8(0)?,
            Some(tags) => {
                w.write_u8(1)?;
                for t in tags {
                    write_string(&mut w, t)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<FeatureMatrix> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(PipelineError::Container(
                "bad magic, not a feature matrix".into(),
            ));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(PipelineError::Container(format!(
                "unsupported feature matrix version {version}"
            )));
        }
        let rows = r.read_u64::<LittleEndian>()? as usize;
        let cols = r.read_u64::<LittleEndian>()? as usize;
        let n_original = r.read_u64::<LittleEndian>()? as usize;
        if n_original > rows {
            return Err(PipelineError::Container(format!(
                "original row count {n_original} exceeds total {rows}"
            )));
        }
        let cell_count = rows
            .checked_mul(cols)
            .ok_or_else(|| PipelineError::Container("dimension overflow".into()))?;
        let mut feature_names = Vec::with_capacity(cols);
        for _ in 0..cols {
            feature_names.push(read_string(&mut r)?);
        }
        let mut data = vec![0.0f64; cell_count];
        r.read_f64_into::<LittleEndian>(&mut data)?;
        let x = Tensor2f64::from_vec(rows, cols, data)
            .map_err(|e| PipelineError::Container(e.to_string()))?;
        let mut y = vec![0u8; rows];
        r.read_exact(&mut y)?;
        if let Some(&bad) = y.iter().find(|&&v| v > 1) {
            return Err(PipelineError::Container(format!(
                "label byte {bad} out of range"
            )));
        }
        let has_tags = r.read_u8()?;
        let attack_tags = match has_tags {
            0 => None,
            1 => {
                let mut tags = Vec::with_capacity(rows);
                for _ in 0..rows {
                    tags.push(read_string(&mut r)?);
                }
                Some(tags)
            }
            other => {
                return Err(PipelineError::Container(format!(
                    "bad tag-presence byte {other}"
                )))
            }
        };
        Ok(FeatureMatrix {
            x,
            y,
            feature_names,
            attack_tags,
            n_original,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FeatureMatrix> {
        let file = std::fs::File::open(path)?;
        FeatureMatrix::read_from(std::io::BufReader::new(file))
    }
}

fn write_string<W: Write>(w: &mut W, s: &str) -> Result<()> {
    let bytes = s.as_bytes();
    w.write_u32::<LittleEndian>(bytes.len() as u32)?;
    w.write_all(bytes)?;
    Ok(())
}

fn read_string<R: Read>(r: &mut R) -> Result<String> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    if len > 1 << 20 {
        return Err(PipelineError::Container(format!(
            "string length {len} implausible"
        )));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| PipelineError::Container("non-utf8 string".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureMatrix {
        let x = Tensor2f64::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.25], vec![0.0, 0.0]]).unwrap();
        let mut fm = FeatureMatrix::new(x, vec![0, 1, 1], vec!["a".into(), "b".into()]).unwrap();
        fm.attack_tags = Some(vec!["normal".into(), "generic".into(), "dos".into()]);
        fm
    }

    #[test]
    fn roundtrip_preserves_everything() {
        let fm = sample();
        let mut buf = Vec::new();
        fm.write_to(&mut buf).unwrap();
        let back = FeatureMatrix::read_from(buf.as_slice()).unwrap();
        assert_eq!(fm, back);
    }

    #[test]
    fn roundtrip_is_byte_stable() {
        let fm = sample();
        let mut a = Vec::new();
        fm.write_to(&mut a).unwrap();
        let back = FeatureMatrix::read_from(a.as_slice()).unwrap();
        let mut b = Vec::new();
        back.write_to(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_foreign_bytes() {
        let err = FeatureMatrix::read_from(&b"NOPExxxxxxxx"[..]).unwrap_err();
        assert!(matches!(err, PipelineError::Container(_)));
    }

    #[test]
    fn rejects_truncated_stream() {
        let fm = sample();
        let mut buf = Vec::new();
        fm.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(FeatureMatrix::read_from(buf.as_slice()).is_err());
    }

    #[test]
    fn rejects_out_of_range_label_byte() {
        let fm = sample();
        let mut buf = Vec::new();
        fm.write_to(&mut buf).unwrap();
        // Labels sit right after the f64 block; corrupt the first one.
        let label_offset = 4 + 4 + 24 + (4 + 1) * 2 + 6 * 8;
        buf[label_offset] = 9;
        assert!(FeatureMatrix::read_from(buf.as_slice()).is_err());
    }

    #[test]
    fn select_rows_resets_original_count() {
        let mut fm = sample();
        fm.n_original = 2;
        let picked = fm.select_rows(&[2, 0]);
        assert_eq!(picked.n_rows(), 2);
        assert_eq!(picked.n_original, 2);
        assert_eq!(picked.y, vec![1, 0]);
        assert_eq!(picked.x.row(0), &[0.0, 0.0]);
        assert_eq!(picked.attack_tags.as_ref().unwrap()[1], "normal");
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let x = Tensor2f64::zeros(2, 2);
        assert!(FeatureMatrix::new(x.clone(), vec![0], vec!["a".into(), "b".into()]).is_err());
        assert!(FeatureMatrix::new(x, vec![0, 1], vec!["a".into()]).is_err());
    }
}
