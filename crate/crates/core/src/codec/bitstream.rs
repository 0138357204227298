//! The container format: a little-endian header, optional coarse
//! mask side-info, and the entropy-coded latent payload.
//!
//! Layout (all multi-byte fields little-endian):
//!
//! ```text
//! magic    4 bytes  "ODIC"
//! version  u8       1
//! flags    u8       bit 0: saliency mode (mask side-info present)
//! width    u32
//! height   u32
//! channels u8       image channels (1 or 3)
//! lambda   u8       index into the configured λ ladder
//! alpha    f32      residual α used at the encoder (informational)
//! mask_len u32      byte length of the mask blob
//! mask     mask_len bytes
//! pay_len  u32      byte length of the latent payload
//! payload  pay_len bytes
//! ```

use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"ODIC";
pub const VERSION: u8 = 1;
pub const FLAG_SALIENCY: u8 = 0x01;

/// Fixed-size part of the container before the mask blob.
pub const FIXED_HEADER_LEN: usize = 4 + 1 + 1 + 4 + 4 + 1 + 1 + 4 + 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub flags: u8,
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub lambda_index: u8,
    pub alpha: f32,
}

impl Header {
    pub fn saliency_mode(&self) -> bool {
        self.flags & FLAG_SALIENCY != 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bitstream {
    pub header: Header,
    pub mask: Vec<u8>,
    pub payload: Vec<u8>,
}

impl Bitstream {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(FIXED_HEADER_LEN + self.mask.len() + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(h.flags);
        out.extend_from_slice(&h.width.to_le_bytes());
        out.extend_from_slice(&h.height.to_le_bytes());
        out.push(h.channels);
        out.push(h.lambda_index);
        out.extend_from_slice(&h.alpha.to_le_bytes());
        out.extend_from_slice(&(self.mask.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.mask);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn total_len(&self) -> usize {
        // Fixed fields + mask bytes + the payload length field + payload.
        FIXED_HEADER_LEN + self.mask.len() + 4 + self.payload.len()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Bitstream> {
        if data.len() < 4 || data[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        if data.len() < 6 {
            return Err(Error::CorruptHeader("header shorter than fixed fields".into()));
        }
        let version = data[4];
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        if data.len() < FIXED_HEADER_LEN {
            return Err(Error::CorruptHeader("header shorter than fixed fields".into()));
        }
        let flags = data[5];
        let width = u32::from_le_bytes(data[6..10].try_into().unwrap());
        let height = u32::from_le_bytes(data[10..14].try_into().unwrap());
        let channels = data[14];
        let lambda_index = data[15];
        let alpha = f32::from_le_bytes(data[16..20].try_into().unwrap());
        if width == 0 || height == 0 {
            return Err(Error::CorruptHeader("zero image dimensions".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::CorruptHeader(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::CorruptHeader("alpha must be positive and finite".into()));
        }
        if flags & !FLAG_SALIENCY != 0 {
            return Err(Error::CorruptHeader(format!("unknown flags 0x{flags:02x}")));
        }
        let mask_len = u32::from_le_bytes(data[20..24].try_into().unwrap()) as usize;
        let mut pos = FIXED_HEADER_LEN; // start of mask bytes
        if data.len() < pos + mask_len + 4 {
            return Err(Error::TruncatedPayload);
        }
        let mask = data[pos..pos + mask_len].to_vec();
        pos += mask_len;
        let payload_len = u32::from_le_bytes(data[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        if data.len() < pos + payload_len {
            return Err(Error::TruncatedPayload);
        }
        let payload = data[pos..pos + payload_len].to_vec();
        pos += payload_len;
        if pos != data.len() {
            return Err(Error::CorruptHeader(format!(
                "{} trailing bytes after payload",
                data.len() - pos
            )));
        }
        if flags & FLAG_SALIENCY == 0 && mask_len != 0 {
            return Err(Error::CorruptHeader(
                "mask bytes present without the saliency flag".into(),
            ));
        }
        Ok(Bitstream {
            header: Header {
                flags,
                width,
                height,
                channels,
                lambda_index,
                alpha,
            },
            mask,
            payload,
        })
    }
}
