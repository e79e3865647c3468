//! Binary pixel stacks: one JSON header line followed by a little-endian
//! float32 `(re, im)` payload, pixel-major, `n` samples per pixel.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AcquisitionGeometry;

pub const STACK_MAGIC: &str = "TSTK1";

/// Bytes per complex sample in the payload.
pub const SAMPLE_BYTES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackHeader {
    pub magic: String,
    pub n: usize,
    pub pixel_count: usize,
    /// Geometry the samples were acquired with, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<AcquisitionGeometry>,
}

impl StackHeader {
    pub fn new(n: usize, pixel_count: usize, geometry: Option<AcquisitionGeometry>) -> Self {
        StackHeader { magic: STACK_MAGIC.to_string(), n, pixel_count, geometry }
    }

    pub fn payload_len(&self) -> Result<usize> {
        self.pixel_count
            .checked_mul(self.n)
            .and_then(|v| v.checked_mul(SAMPLE_BYTES))
            .ok_or_else(|| Error::Format("stack payload size overflows".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stack {
    pub header: StackHeader,
    pub pixels: Vec<DVector<Complex64>>,
}

impl Stack {
    pub fn new(pixels: Vec<DVector<Complex64>>, n: usize, geometry: Option<AcquisitionGeometry>) -> Result<Self> {
        if let Some(p) = pixels.iter().find(|p| p.len() != n) {
            return Err(Error::Dimension { expected: n, found: p.len() });
        }
        if let Some(g) = &geometry {
            if g.len() != n {
                return Err(Error::Dimension { expected: n, found: g.len() });
            }
        }
        let header = StackHeader::new(n, pixels.len(), geometry);
        Ok(Stack { header, pixels })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec(&self.header)?;
        out.push(b'\n');
        out.reserve(self.header.payload_len()?);
        for p in &self.pixels {
            for z in p.iter() {
                out.extend_from_slice(&(z.re as f32).to_le_bytes());
                out.extend_from_slice(&(z.im as f32).to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let prefix = format!("{{\"magic\":\"{STACK_MAGIC}\"");
        if !bytes.starts_with(prefix.as_bytes()) {
            return Err(Error::Format(format!("not a {STACK_MAGIC} stack file")));
        }
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("stack header is not terminated".into()))?;
        let header: StackHeader = serde_json::from_slice(&bytes[..newline])?;
        if header.magic != STACK_MAGIC {
            return Err(Error::Format(format!("unsupported stack version {:?}", header.magic)));
        }
        let payload = &bytes[newline + 1..];
        let expected = header.payload_len()?;
        if payload.len() != expected {
            return Err(Error::Format(format!("payload is {} bytes, header implies {expected}", payload.len())));
        }
        if let Some(g) = &header.geometry {
            if g.len() != header.n {
                return Err(Error::Consistency(format!(
                    "header declares n = {} but embeds a geometry of {} acquisitions",
                    header.n,
                    g.len()
                )));
            }
        }
        let f = |c: &[u8]| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
        let pixels = if header.n == 0 {
            vec![DVector::zeros(0); header.pixel_count]
        } else {
            payload
                .chunks_exact(header.n * SAMPLE_BYTES)
                .map(|px| DVector::from_iterator(header.n, px.chunks_exact(SAMPLE_BYTES).map(|s| Complex64::new(f(&s[..4]), f(&s[4..])))))
                .collect()
        };
        Ok(Stack { header, pixels })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes()?)?;
        Ok(())
    }
}
