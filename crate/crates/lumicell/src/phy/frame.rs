//! Beacon frame structure and the symbol-level codec.
//!
//! On-air layout (one level per modulation clock period):
//!
//! ```text
//! | SFD  | Sync     | Payload         | Checksum | EOF  |
//! | HHHH | HLHLHLHL | 32 Manchester   | 8 Manch. | LLLL |
//! ```
//!
//! Manchester convention: bit 1 -> (high, low), bit 0 -> (low, high), bits
//! MSB-first. The SFD run of four highs cannot occur inside valid Manchester
//! data, which caps runs at two equal levels.

use thiserror::Error;

use super::layout::*;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("checksum mismatch: expected {expected:#x}, got {got:#x}")]
    ChecksumMismatch { expected: u8, got: u8 },
    #[error("invalid Manchester pair at data symbol {index}")]
    InvalidManchesterPair { index: usize },
    #[error("wrong symbol count: expected {FRAME_SYMBOLS}, got {got}")]
    WrongLength { got: usize },
    #[error("malformed {section} section")]
    BadSection { section: &'static str },
}

/// Logical beacon message: 16-bit identifier plus 4-bit XOR checksum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BeaconFrame {
    payload: u16,
    checksum: u8,
}

impl BeaconFrame {
    /// Build a frame with the checksum computed from the payload.
    pub fn new(payload: u16) -> Self {
        BeaconFrame { payload, checksum: checksum(payload) }
    }

    /// Accept an externally supplied checksum, verifying it.
    pub fn with_checksum(payload: u16, cs: u8) -> Result<Self, FrameError> {
        let expected = checksum(payload);
        if cs != expected {
            return Err(FrameError::ChecksumMismatch { expected, got: cs });
        }
        Ok(BeaconFrame { payload, checksum: cs })
    }

    pub fn payload(&self) -> u16 {
        self.payload
    }

    pub fn checksum(&self) -> u8 {
        self.checksum
    }
}

/// XOR of the four nibbles of the payload.
pub fn checksum(payload: u16) -> u8 {
    let n0 = (payload >> 12) & 0xf;
    let n1 = (payload >> 8) & 0xf;
    let n2 = (payload >> 4) & 0xf;
    let n3 = payload & 0xf;
    (n0 ^ n1 ^ n2 ^ n3) as u8
}

/// The 56 binary on-air levels of one frame, `true` = high.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolFrame {
    symbols: [bool; FRAME_SYMBOLS],
}

impl SymbolFrame {
    pub fn symbols(&self) -> &[bool] {
        &self.symbols
    }

    pub fn data_symbols(&self) -> &[bool] {
        &self.symbols[DATA_START..DATA_END]
    }
}

fn push_manchester(out: &mut Vec<bool>, bits: u32, n_bits: usize) {
    for i in (0..n_bits).rev() {
        let bit = (bits >> i) & 1 == 1;
        // bit 1 -> (high, low); bit 0 -> (low, high)
        out.push(bit);
        out.push(!bit);
    }
}

/// Encode a beacon frame into its 56-symbol on-air form.
///
/// The checksum is recomputed from the payload, not trusted.
pub fn encode_frame(frame: &BeaconFrame) -> SymbolFrame {
    let mut s = Vec::with_capacity(FRAME_SYMBOLS);
    s.extend(std::iter::repeat(true).take(SFD_SYMBOLS));
    for i in 0..SYNC_SYMBOLS {
        s.push(i % 2 == 0); // alternating, starting high
    }
    push_manchester(&mut s, frame.payload as u32, PAYLOAD_BITS);
    push_manchester(&mut s, checksum(frame.payload) as u32, CHECKSUM_BITS);
    s.extend(std::iter::repeat(false).take(EOF_SYMBOLS));
    debug_assert_eq!(s.len(), FRAME_SYMBOLS);
    let mut symbols = [false; FRAME_SYMBOLS];
    symbols.copy_from_slice(&s);
    SymbolFrame { symbols }
}

/// Decode 40 data symbols (Manchester pairs, MSB-first) into payload bits
/// plus checksum bits, verifying both the pairing and the checksum.
pub fn decode_data_symbols(data: &[bool]) -> Result<BeaconFrame, FrameError> {
    if data.len() != DATA_SYMBOLS {
        return Err(FrameError::WrongLength { got: data.len() });
    }
    let mut bits: u32 = 0;
    for (i, pair) in data.chunks(2).enumerate() {
        let bit = match (pair[0], pair[1]) {
            (true, false) => 1,
            (false, true) => 0,
            _ => return Err(FrameError::InvalidManchesterPair { index: 2 * i }),
        };
        bits = (bits << 1) | bit;
    }
    let payload = (bits >> CHECKSUM_BITS) as u16;
    let cs = (bits & 0xf) as u8;
    BeaconFrame::with_checksum(payload, cs)
}

/// Parse a full 56-symbol sequence back into a beacon frame, validating every
/// section marker.
pub fn parse_symbols(symbols: &[bool]) -> Result<BeaconFrame, FrameError> {
    if symbols.len() != FRAME_SYMBOLS {
        return Err(FrameError::WrongLength { got: symbols.len() });
    }
    if !symbols[..SFD_SYMBOLS].iter().all(|&s| s) {
        return Err(FrameError::BadSection { section: "SFD" });
    }
    for i in 0..SYNC_SYMBOLS {
        if symbols[SFD_SYMBOLS + i] != (i % 2 == 0) {
            return Err(FrameError::BadSection { section: "Sync" });
        }
    }
    if !symbols[DATA_END..].iter().all(|&s| !s) {
        return Err(FrameError::BadSection { section: "EOF" });
    }
    decode_data_symbols(&symbols[DATA_START..DATA_END])
}
