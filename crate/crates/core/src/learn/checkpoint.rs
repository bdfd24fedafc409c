//! Versioned binary checkpoints: magic bytes, a spec hash binding the file
//! to its network and observation layout, the global step, and the raw
//! parameter vector. Plain gradient descent carries no optimizer state, but
//! the format reserves a slot for one.

use super::mlp::{MlpSpec, NetLayout, OptimizerState, PolicyParams};
use super::LearnError;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"SKCK";
const FORMAT_VERSION: u32 = 1;

/// FNV-1a over the layout descriptor; binds checkpoints to compatible specs.
pub fn spec_hash(descriptor: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in descriptor.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec_hash: u64,
    pub global_step: u64,
    pub params: PolicyParams,
}

pub fn save_checkpoint(
    path: &Path,
    params: &PolicyParams,
    descriptor: &str,
    global_step: u64,
) -> Result<(), LearnError> {
    let mut buf = Vec::with_capacity(32 + params.data.len() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&spec_hash(descriptor).to_le_bytes());
    buf.extend_from_slice(&global_step.to_le_bytes());
    buf.extend_from_slice(&params.version.to_le_bytes());
    let spec = params.layout.spec;
    buf.extend_from_slice(&(spec.input_dim as u64).to_le_bytes());
    buf.extend_from_slice(&(spec.hidden_units as u64).to_le_bytes());
    buf.extend_from_slice(&(spec.encoder_dim.unwrap_or(0) as u64).to_le_bytes());
    buf.extend_from_slice(&(params.data.len() as u64).to_le_bytes());
    for v in &params.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    // Optimizer state slot: empty under plain gradient descent, first and
    // second moments plus the step count under the adaptive rule.
    if params.opt.is_empty() {
        buf.extend_from_slice(&0u64.to_le_bytes());
    } else {
        buf.extend_from_slice(&(2 * params.data.len() as u64).to_le_bytes());
        buf.extend_from_slice(&params.opt.t.to_le_bytes());
        for v in params.opt.m.iter().chain(&params.opt.v) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)
        .map_err(|e| LearnError::CheckpointIo(format!("{}: {e}", path.display())))?;
    f.write_all(&buf)
        .map_err(|e| LearnError::CheckpointIo(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Load and verify against the expected layout descriptor.
pub fn load_checkpoint(path: &Path, expected_descriptor: &str) -> Result<Checkpoint, LearnError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| LearnError::CheckpointIo(format!("{}: {e}", path.display())))?;
    let mut at = 0usize;
    let take = |at: &mut usize, n: usize| -> Result<&[u8], LearnError> {
        if *at + n > bytes.len() {
            return Err(LearnError::BadCheckpoint("truncated file".into()));
        }
        let s = &bytes[*at..*at + n];
        *at += n;
        Ok(s)
    };
    if take(&mut at, 4)? != MAGIC {
        return Err(LearnError::BadCheckpoint("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(LearnError::BadCheckpoint(format!("unsupported format version {version}")));
    }
    let file_hash = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
    let expected = spec_hash(expected_descriptor);
    if file_hash != expected {
        return Err(LearnError::SpecHashMismatch { file: file_hash, expected });
    }
    let global_step = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
    let param_version = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
    let input_dim = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
    let hidden = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
    let enc = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
    let len = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
    let spec = MlpSpec {
        input_dim,
        hidden_layers: 2,
        hidden_units: hidden,
        encoder_dim: if enc == 0 { None } else { Some(enc) },
    };
    let layout = NetLayout::new(spec);
    if layout.len != len {
        return Err(LearnError::BadCheckpoint(format!(
            "parameter count {len} does not match layout {}",
            layout.len
        )));
    }
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        data.push(f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()));
    }
    let opt_len = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
    let opt = if opt_len == 0 {
        OptimizerState::default()
    } else {
        if opt_len as usize != 2 * len {
            return Err(LearnError::BadCheckpoint(format!(
                "optimizer state length {opt_len} does not match 2 x {len}"
            )));
        }
        let t = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
        let mut m = Vec::with_capacity(len);
        for _ in 0..len {
            m.push(f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()));
        }
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            v.push(f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()));
        }
        OptimizerState { m, v, t }
    };
    Ok(Checkpoint {
        spec_hash: file_hash,
        global_step,
        params: PolicyParams { layout, data, version: param_version, opt },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_hash_guard() {
        let dir = std::env::temp_dir().join(format!("skck-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.ckpt");
        let params = PolicyParams::init(MlpSpec::solo(7, 4), 5);
        save_checkpoint(&path, &params, "layout-a", 12345).unwrap();
        let loaded = load_checkpoint(&path, "layout-a").unwrap();
        assert_eq!(loaded.params.data, params.data);
        assert_eq!(loaded.global_step, 12345);
        assert_eq!(loaded.params.layout, params.layout);

        let err = load_checkpoint(&path, "layout-b").unwrap_err();
        assert!(matches!(err, LearnError::SpecHashMismatch { .. }));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let dir = std::env::temp_dir().join(format!("skck-test2-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.ckpt");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(
            load_checkpoint(&path, "x"),
            Err(LearnError::BadCheckpoint(_))
        ));
        std::fs::remove_dir_all(&dir).ok();
    }
}
