use super::IndexError;

/// One bit per dimension, packed little-endian into 64-bit words: bit `i`
/// lives in word `i / 64` at position `i % 64`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryCode {
    dim: usize,
    words: Vec<u64>,
}

pub(crate) fn words_for(dim: usize) -> usize {
    dim.div_ceil(64)
}

impl BinaryCode {
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut words = vec![0u64; words_for(bits.len())];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Self {
            dim: bits.len(),
            words,
        }
    }

    pub(crate) fn from_words(dim: usize, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), words_for(dim));
        Self { dim, words }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.dim, "bit {i} out of range for {} bits", self.dim);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.dim).map(|i| self.bit(i)).collect()
    }

    /// Packed bytes, bit 0 = least significant bit of byte 0.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.dim.div_ceil(8));
        out
    }

    pub fn from_bytes(dim: usize, bytes: &[u8]) -> Result<Self, IndexError> {
        if bytes.len() != dim.div_ceil(8) {
            return Err(IndexError::DimensionMismatch {
                expected: dim.div_ceil(8),
                got: bytes.len(),
            });
        }
        let mut words = vec![0u64; words_for(dim)];
        for (i, &b) in bytes.iter().enumerate() {
            words[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        Ok(Self { dim, words })
    }
}

/// Sign quantization: bit `i` is set iff `vector[i] >= 0`.
pub fn quantize(vector: &[f32]) -> BinaryCode {
    let mut words = vec![0u64; words_for(vector.len())];
    for (i, &x) in vector.iter().enumerate() {
        if x >= 0.0 {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    BinaryCode {
        dim: vector.len(),
        words,
    }
}

/// [`quantize`] with a dimension check.
pub fn quantize_checked(vector: &[f32], dim: usize) -> Result<BinaryCode, IndexError> {
    if vector.len() != dim {
        return Err(IndexError::DimensionMismatch {
            expected: dim,
            got: vector.len(),
        });
    }
    Ok(quantize(vector))
}

/// Number of differing bit positions.
pub fn hamming(a: &BinaryCode, b: &BinaryCode) -> Result<u32, IndexError> {
    if a.dim != b.dim {
        return Err(IndexError::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    Ok(hamming_words(&a.words, &b.words))
}

#[inline]
pub(crate) fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}
