//! CSV serialization of waveforms and decoded frames.
//!
//! Waveforms are single-column CSV, one amplitude per line, preceded by a
//! sidecar header line `# sample_rate=<Hz>`. Decoded frames are emitted as
//! rows `start_sample,payload_hex,rss,clean`.

use std::io::{self, BufRead, Write};

use super::demod::DecodedFrame;
use super::modem::{Coupling, Waveform};

pub fn write_waveform_csv<W: Write>(out: &mut W, w: &Waveform) -> io::Result<()> {
    writeln!(out, "# sample_rate={}", w.sample_rate)?;
    for s in &w.samples {
        writeln!(out, "{s}")?;
    }
    Ok(())
}

pub fn read_waveform_csv<R: BufRead>(input: R, coupling: Coupling) -> io::Result<Waveform> {
    let mut sample_rate = None;
    let mut samples = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("sample_rate=") {
                sample_rate = Some(v.trim().parse::<f64>().map_err(|e| {
                    io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", lineno + 1))
                })?);
            }
            continue;
        }
        samples.push(line.parse::<f64>().map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", lineno + 1))
        })?);
    }
    let sample_rate = sample_rate.ok_or_else(|| {
        io::Error::new(io::ErrorKind::InvalidData, "missing '# sample_rate=' header")
    })?;
    Ok(Waveform { samples, sample_rate, coupling })
}

pub fn write_decoded_csv<W: Write>(out: &mut W, frames: &[DecodedFrame]) -> io::Result<()> {
    writeln!(out, "start_sample,payload_hex,rss,clean")?;
    for d in frames {
        writeln!(
            out,
            "{},{:04x},{:.6},{}",
            d.start_sample,
            d.frame.payload(),
            d.rss,
            d.clean
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waveform_csv_roundtrip() {
        let w = Waveform {
            samples: vec![0.0, 1.0, -0.25],
            sample_rate: 48_000.0,
            coupling: Coupling::Bipolar,
        };
        let mut buf = Vec::new();
        write_waveform_csv(&mut buf, &w).unwrap();
        let back = read_waveform_csv(&buf[..], Coupling::Bipolar).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn missing_header_is_an_error() {
        let data = b"0.5\n0.25\n";
        assert!(read_waveform_csv(&data[..], Coupling::Unipolar).is_err());
    }
}
