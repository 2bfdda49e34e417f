//! Physical layer: beacon frame codec, OOK/Manchester modulation, the
//! receiver DSP chain, and waveform demodulation.

mod demod;
mod dsp;
mod frame;
mod io;
mod modem;

pub use demod::{demodulate, DecodedFrame};
pub use dsp::{receiver_chain, receiver_chain_scaled};
pub use frame::{checksum, encode_frame, parse_symbols, BeaconFrame, FrameError, SymbolFrame};
pub use io::{read_waveform_csv, write_decoded_csv, write_waveform_csv};
pub use modem::{dummy_carrier, modulate, Coupling, PhyConfig, PhyError, Waveform};

/// Symbol counts of the on-air frame sections.
pub mod layout {
    pub const SFD_SYMBOLS: usize = 4;
    pub const SYNC_SYMBOLS: usize = 8;
    pub const DATA_SYMBOLS: usize = 40;
    pub const EOF_SYMBOLS: usize = 4;
    pub const FRAME_SYMBOLS: usize = SFD_SYMBOLS + SYNC_SYMBOLS + DATA_SYMBOLS + EOF_SYMBOLS;

    pub const DATA_START: usize = SFD_SYMBOLS + SYNC_SYMBOLS;
    pub const DATA_END: usize = DATA_START + DATA_SYMBOLS;

    pub const PAYLOAD_BITS: usize = 16;
    pub const CHECKSUM_BITS: usize = 4;
}
