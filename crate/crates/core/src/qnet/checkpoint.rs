//! Versioned binary checkpoint container.
//!
//! All integers little-endian:
//!
//! ```text
//! magic        8   "FPESCKPT"
//! version      u16 1
//! reserved     u16 0
//! input_dim    u32
//! num_classes  u32
//! layer_count  u32
//! per layer:
//!   in_dim     u32
//!   out_dim    u32
//!   activation u8   0 = none, 1 = relu
//!   storage    u8   0 = fixed mantissas, 1 = f32
//!   total_bits u8   (0 for f32 storage)
//!   frac_bits  u8
//!   signed     u8
//!   reserved   3 x u8 (zero)
//!   scale_exp  i32
//!   weights    in_dim*out_dim x 4 bytes, row-major (i32 mantissa or f32 bits)
//!   bias       out_dim x 4 bytes
//! has_mask     u8
//! if has_mask:
//!   layer      u32
//!   kind       u8   0 = all entries, 1 = explicit
//!   if explicit: count u32, then count x u32 entry indices
//! crc32        u32  CRC-32 (IEEE) of every preceding byte
//! ```

use std::fs;
use std::path::Path;

use crate::codec::{check_header, Reader, Writer};
use crate::error::CheckpointError;
use crate::fxp::QFormat;

use super::{Activation, DenseLayer, LayerParams, Model, Selector, WeightMask};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FPESCKPT";
pub const CHECKPOINT_VERSION: u16 = 1;

pub fn encode(model: &Model) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(CHECKPOINT_MAGIC);
    w.u16(CHECKPOINT_VERSION);
    w.u16(0);
    w.u32(model.input_dim() as u32);
    w.u32(model.num_classes() as u32);
    w.u32(model.layers().len() as u32);
    for l in model.layers() {
        w.u32(l.in_dim() as u32);
        w.u32(l.out_dim() as u32);
        w.u8(match l.activation() {
            Activation::None => 0,
            Activation::Relu => 1,
        });
        match l.params() {
            LayerParams::Fixed { fmt, .. } => {
                w.u8(0);
                w.u8(fmt.total_bits() as u8);
                w.u8(fmt.frac_bits() as u8);
                w.u8(u8::from(fmt.is_signed()));
            }
            LayerParams::Float { .. } => {
                w.u8(1);
                w.bytes(&[0, 0, 0]);
            }
        }
        w.bytes(&[0, 0, 0]);
        w.i32(l.scale_exp());
        match l.params() {
            LayerParams::Fixed { weights, bias, .. } => {
                weights.iter().chain(bias).for_each(|&m| w.i32(m));
            }
            LayerParams::Float { weights, bias } => {
                weights.iter().chain(bias).for_each(|&x| w.f32(x));
            }
        }
    }
    match model.mask() {
        None => w.u8(0),
        Some(mask) => {
            w.u8(1);
            w.u32(mask.layer_index as u32);
            match &mask.selector {
                Selector::All => w.u8(0),
                Selector::Explicit(ix) => {
                    w.u8(1);
                    w.u32(ix.len() as u32);
                    ix.iter().for_each(|&k| w.u32(k));
                }
            }
        }
    }
    w.finish()
}

pub fn decode(bytes: &[u8]) -> Result<Model, CheckpointError> {
    let mut r = Reader::new(bytes);
    check_header(&mut r, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
    r.u16("reserved")?;
    let input_dim = r.u32("input_dim")? as usize;
    let num_classes = r.u32("num_classes")? as usize;
    let n_layers = r.u32("layer_count")? as usize;
    if n_layers == 0 {
        return Err(CheckpointError::Malformed("no layers".into()));
    }
    let mut layers = Vec::new();
    for k in 0..n_layers {
        let in_dim = r.u32("in_dim")? as usize;
        let out_dim = r.u32("out_dim")? as usize;
        let activation = match r.u8("activation")? {
            0 => Activation::None,
            1 => Activation::Relu,
            a => return Err(CheckpointError::Malformed(format!("layer {k}: activation tag {a}"))),
        };
        let storage = r.u8("storage")?;
        let total = r.u8("total_bits")?;
        let frac = r.u8("frac_bits")?;
        let signed = r.u8("signed")?;
        r.take(3, "reserved")?;
        let scale_exp = r.i32("scale_exp")?;
        let count = in_dim
            .checked_mul(out_dim)
            .and_then(|n| n.checked_add(out_dim))
            .filter(|n| n.saturating_mul(4) <= r.remaining())
            .ok_or_else(|| CheckpointError::Malformed(format!("layer {k}: {out_dim}x{in_dim} exceeds file")))?;
        let nw = in_dim * out_dim;
        let params = match storage {
            0 => {
                let fmt = QFormat::new(u32::from(total), u32::from(frac), signed == 1)
                    .map_err(|e| CheckpointError::Malformed(format!("layer {k}: {e}")))?;
                let vals = (0..count)
                    .map(|_| r.i32("weights"))
                    .collect::<Result<Vec<_>, _>>()?;
                LayerParams::Fixed {
                    fmt,
                    weights: vals[..nw].to_vec(),
                    bias: vals[nw..].to_vec(),
                }
            }
            1 => {
                let vals = (0..count)
                    .map(|_| r.f32("weights"))
                    .collect::<Result<Vec<_>, _>>()?;
                LayerParams::Float {
                    weights: vals[..nw].to_vec(),
                    bias: vals[nw..].to_vec(),
                }
            }
            s => return Err(CheckpointError::Malformed(format!("layer {k}: storage tag {s}"))),
        };
        let layer = DenseLayer::new(in_dim, out_dim, activation, scale_exp, params)
            .map_err(|e| CheckpointError::Malformed(format!("layer {k}: {e}")))?;
        layers.push(layer);
    }
    let mask = match r.u8("has_mask")? {
        0 => None,
        1 => {
            let layer_index = r.u32("mask layer")? as usize;
            match r.u8("mask kind")? {
                0 => Some(WeightMask::layer(layer_index)),
                1 => {
                    let n = r.len(4, "mask indices")?;
                    let ix = (0..n)
                        .map(|_| r.u32("mask index"))
                        .collect::<Result<Vec<_>, _>>()?;
                    Some(WeightMask {
                        layer_index,
                        selector: Selector::Explicit(ix),
                    })
                }
                t => return Err(CheckpointError::Malformed(format!("mask kind {t}"))),
            }
        }
        t => return Err(CheckpointError::Malformed(format!("mask flag {t}"))),
    };
    r.finish()?;
    let mut model = Model::new(layers).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    if model.input_dim() != input_dim || model.num_classes() != num_classes {
        return Err(CheckpointError::Malformed(format!(
            "header says {input_dim} -> {num_classes}, layers say {} -> {}",
            model.input_dim(),
            model.num_classes()
        )));
    }
    model
        .set_mask(mask)
        .map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    Ok(model)
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    let path = path.as_ref();
    fs::write(path, encode(model)).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model, CheckpointError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Model {
        let fmt = QFormat::signed(4, 3).unwrap();
        let l0 = DenseLayer::quantized(2, 2, Activation::Relu, -1, fmt, &[0.5, -0.25, 0.125, 0.875], &[0.0, -1.0])
            .unwrap();
        let l1 = DenseLayer::new(
            2,
            1,
            Activation::None,
            0,
            LayerParams::Float {
                weights: vec![1.5, -0.1],
                bias: vec![f32::from_bits(0x3e4c_cccd)],
            },
        )
        .unwrap();
        Model::new(vec![l0, l1])
            .unwrap()
            .with_mask(WeightMask::explicit(0, vec![1, 4]))
            .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = tiny();
        let bytes = encode(&m);
        assert_eq!(decode(&bytes).unwrap(), m);
        assert_eq!(encode(&decode(&bytes).unwrap()), bytes);
    }

    #[test]
    fn golden_bytes() {
        // frozen layout: any change here is a format break
        let bytes = encode(&tiny());
        assert_eq!(&bytes[..8], b"FPESCKPT");
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(&bytes[12..24], &[2, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]);
        // layer 0 header: dims, relu, fixed, Q(4,3) signed, pad, scale -1
        assert_eq!(
            &bytes[24..44],
            &[2, 0, 0, 0, 2, 0, 0, 0, 1, 0, 4, 3, 1, 0, 0, 0, 0xff, 0xff, 0xff, 0xff]
        );
        // first two mantissas: 4, -2
        assert_eq!(&bytes[44..52], &[4, 0, 0, 0, 0xfe, 0xff, 0xff, 0xff]);
        assert_eq!(bytes.len(), 24 + (20 + 24) + (20 + 12) + (1 + 4 + 1 + 4 + 8) + 4);
        let crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
        assert_eq!(crc, crc32fast::hash(&bytes[..bytes.len() - 4]));
    }

    #[test]
    fn distinct_errors() {
        let bytes = encode(&tiny());
        assert!(matches!(decode(&bytes[..bytes.len() - 7]), Err(CheckpointError::Malformed(_))));
        assert!(matches!(decode(&bytes[..5]), Err(CheckpointError::Malformed(_))));

        let mut v = bytes.clone();
        v[8] = 9;
        assert!(matches!(decode(&v), Err(CheckpointError::Version { found: 9, expected: 1 })));

        let mut c = bytes.clone();
        c[44] ^= 0x01;
        assert!(matches!(decode(&c), Err(CheckpointError::Checksum { .. })));

        let mut m = bytes;
        m[0] = b'X';
        assert!(matches!(decode(&m), Err(CheckpointError::Malformed(_))));
    }
}
