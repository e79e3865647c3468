use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Contiguous coordinate blocks with their Lipschitz constants and the
/// sampling distribution `P_i = L_i / Σ_j L_j`.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    blocks: Vec<Range<usize>>,
    lipschitz: Vec<f64>,
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl BlockPartition {
    /// Splits `0..L` into `num_blocks` near-equal contiguous blocks and
    /// estimates `L_i = 2 σ_max(A_i)²` for each by power iteration.
    pub fn new(dictionary: &DMatrix<Complex64>, num_blocks: usize) -> Result<Self> {
        let blocks = contiguous_blocks(dictionary.ncols(), num_blocks)?;
        let lipschitz = blocks
            .iter()
            .map(|b| 2.0 * linalg::spectral_norm_sqr(dictionary.columns_range(b.clone())))
            .collect();
        Self::from_parts(blocks, lipschitz)
    }

    pub fn from_parts(blocks: Vec<Range<usize>>, lipschitz: Vec<f64>) -> Result<Self> {
        if blocks.len() != lipschitz.len() || blocks.is_empty() {
            return Err(Error::Config("one Lipschitz constant per block is required".into()));
        }
        if lipschitz.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Numerical("block Lipschitz constant is not finite".into()));
        }
        let total: f64 = lipschitz.iter().sum();
        let probabilities: Vec<f64> = if total > 0.0 {
            lipschitz.iter().map(|l| l / total).collect()
        } else {
            vec![1.0 / blocks.len() as f64; blocks.len()]
        };
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(BlockPartition { blocks, lipschitz, probabilities, cumulative })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Draws a block index according to the sampling distribution.
    pub fn sample_block<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.blocks.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random();
        // first block whose cumulative probability exceeds u, skipping empty mass
        self.cumulative
            .iter()
            .zip(&self.probabilities)
            .position(|(&c, &p)| u < c && p > 0.0)
            .unwrap_or(self.blocks.len() - 1)
    }
}

fn contiguous_blocks(len: usize, num_blocks: usize) -> Result<Vec<Range<usize>>> {
    if num_blocks == 0 || num_blocks > len {
        return Err(Error::Config(format!("need 1 <= num_blocks <= {len}, got {num_blocks}")));
    }
    let base = len / num_blocks;
    let extra = len % num_blocks;
    let mut start = 0;
    Ok((0..num_blocks)
        .map(|i| {
            let size = base + usize::from(i < extra);
            let r = start..start + size;
            start += size;
            r
        })
        .collect())
}
