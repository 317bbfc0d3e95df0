//! Binary container for trained models.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "EGRD"  magic
//! u32     container version
//! u32     descriptor length, then that many bytes of descriptor JSON
//! u64     buffer count
//! per buffer:
//!   u32   name length, then that many bytes of UTF-8 name
//!   u64   element count, then that many f64 values
//! [u8;32] checksum over every preceding byte
//! ```
//!
//! The descriptor holds the architecture and whether the reconstruction
//! decoder is included. Buffers appear in canonical order and are validated
//! by name on load. The container carries no training metadata: saving the
//! same weights always produces the same bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use edgeguard_nn::Scalar;

use crate::arch::ArchDescriptor;
use crate::error::{ModelError, Result};
use crate::net::{buffer_names, FusedNet};

const MAGIC: &[u8; 4] = b"EGRD";
const VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Descriptor {
    arch: ArchDescriptor,
    has_decoder: bool,
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Format(msg.into())
}

/// Serializes a model to any writer. Weights are widened to 64-bit.
pub fn write_model<F: Scalar, W: Write>(net: &FusedNet<F>, w: &mut W) -> Result<()> {
    let mut body: Vec<u8> = Vec::new();
    body.extend_from_slice(MAGIC);
    body.write_u32::<LittleEndian>(VERSION)?;
    let desc = Descriptor {
        arch: net.arch().clone(),
        has_decoder: net.has_decoder(),
    };
    let desc_json =
        serde_json::to_vec(&desc).map_err(|e| bad(format!("descriptor serialization: {e}")))?;
    body.write_u32::<LittleEndian>(desc_json.len() as u32)?;
    body.extend_from_slice(&desc_json);

    let buffers = net.named_buffers();
    body.write_u64::<LittleEndian>(buffers.len() as u64)?;
    for (name, data) in buffers {
        body.write_u32::<LittleEndian>(name.len() as u32)?;
        body.extend_from_slice(name.as_bytes());
        body.write_u64::<LittleEndian>(data.len() as u64)?;
        for v in data {
            body.write_f64::<LittleEndian>(v.as_f64())?;
        }
    }

    let digest = Sha256::digest(&body);
    w.write_all(&body)?;
    w.write_all(&digest)?;
    Ok(())
}

/// Deserializes a model from any reader, verifying the checksum, the
/// descriptor, and every buffer name and shape.
pub fn read_model<F: Scalar, R: Read>(r: &mut R) -> Result<FusedNet<F>> {
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() < MAGIC.len() + 4 + CHECKSUM_LEN {
        return Err(bad("file too short to be a model container"));
    }
    let (body, trailer) = raw.split_at(raw.len() - CHECKSUM_LEN);
    if Sha256::digest(body)[..] != *trailer {
        return Err(bad("checksum mismatch, the file is corrupt"));
    }

    let mut c = body;
    let mut magic = [0u8; 4];
    c.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic, not a model container"));
    }
    let version = c.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(bad(format!(
            "unsupported model container version {version}"
        )));
    }
    let desc_len = c.read_u32::<LittleEndian>()? as usize;
    if desc_len > c.len() {
        return Err(bad("descriptor length exceeds file size"));
    }
    let desc: Descriptor = serde_json::from_slice(&c[..desc_len])
        .map_err(|e| bad(format!("descriptor parse: {e}")))?;
    c = &c[desc_len..];
    desc.arch.validate()?;

    let mut net: FusedNet<F> = FusedNet::build(desc.arch, 0)?;
    if !desc.has_decoder {
        net.strip_decoder();
    }
    let expected = buffer_names(desc.has_decoder);
    let count = c.read_u64::<LittleEndian>()? as usize;
    if count != expected.len() {
        return Err(bad(format!(
            "expected {} buffers, container declares {count}",
            expected.len()
        )));
    }
    for (want, (_, slot)) in expected.iter().zip(net.named_buffers_mut()) {
        let name_len = c.read_u32::<LittleEndian>()? as usize;
        if name_len > 1 << 10 {
            return Err(bad(format!("buffer name length {name_len} implausible")));
        }
        let mut name_bytes = vec![0u8; name_len];
        c.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes).map_err(|_| bad("non-utf8 buffer name"))?;
        if &name != want {
            return Err(bad(format!(
                "buffer order mismatch: expected {want}, found {name}"
            )));
        }
        let elems = c.read_u64::<LittleEndian>()? as usize;
        if elems != slot.len() {
            return Err(bad(format!(
                "buffer {name}: expected {} elements, container declares {elems}",
                slot.len()
            )));
        }
        for v in slot.iter_mut() {
            *v = F::from_f64(c.read_f64::<LittleEndian>()?);
        }
    }
    if !c.is_empty() {
        return Err(bad(format!(
            "{} trailing bytes after the last buffer",
            c.len()
        )));
    }
    Ok(net)
}

pub fn save_model<F: Scalar>(net: &FusedNet<F>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(net, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model<F: Scalar>(path: &Path) -> Result<FusedNet<F>> {
    let mut r = BufReader::new(File::open(path)?);
    read_model(&mut r)
}
