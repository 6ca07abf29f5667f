use crate::error::FormatError;

/// Little-endian cursor over a byte slice that reports truncation against
/// the full expected length.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn magic(&mut self, expected: [u8; 4]) -> Result<(), FormatError> {
        if self.bytes.len() < 4 {
            return Err(FormatError::Truncated {
                expected: 4,
                actual: self.bytes.len(),
            });
        }
        let found: [u8; 4] = self.bytes[..4].try_into().expect("four bytes");
        if found != expected {
            return Err(FormatError::BadMagic { expected, found });
        }
        self.pos = 4;
        Ok(())
    }

    pub fn u32(&mut self, need_total: usize) -> Result<u32, FormatError> {
        let Some(chunk) = self.bytes.get(self.pos..self.pos + 4) else {
            return Err(FormatError::Truncated {
                expected: need_total.max(self.pos + 4),
                actual: self.bytes.len(),
            });
        };
        self.pos += 4;
        Ok(u32::from_le_bytes(chunk.try_into().expect("four bytes")))
    }

    /// Reads `n` f32 values; the caller has already checked the length.
    pub fn f32s(&mut self, n: usize) -> Vec<f32> {
        let chunk = &self.bytes[self.pos..self.pos + 4 * n];
        self.pos += 4 * n;
        chunk
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")))
            .collect()
    }
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f32s(out: &mut Vec<u8>, vs: impl IntoIterator<Item = f32>) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn to_u32(v: usize, field: &'static str) -> Result<u32, FormatError> {
    u32::try_from(v).map_err(|_| FormatError::InvalidHeader {
        field,
        offset: 0,
        reason: format!("{v} does not fit in u32"),
    })
}
