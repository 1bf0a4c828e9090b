use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"BICMWFM1";

/// Sampled dual-polarization optical field, in √W.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub pols: [Vec<Complex64>; 2],
    pub sample_rate: f64,
}

impl Waveform {
    pub fn new(x: Vec<Complex64>, y: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InputLength {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(Self {
            pols: [x, y],
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.pols[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.pols[0].is_empty()
    }

    /// Mean total power over both polarizations.
    pub fn power(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.pols.iter().flatten().map(|s| s.norm_sqr()).sum();
        sum / self.len() as f64
    }

    /// Writes the binary dump: magic, `u32` polarization count, `u64` length,
    /// `f64` sample rate, then `(re, im)` per polarization per sample, all little-endian.
    pub fn write(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&2u32.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.sample_rate.to_le_bytes())?;
        for i in 0..self.len() {
            for pol in &self.pols {
                w.write_all(&pol[i].re.to_le_bytes())?;
                w.write_all(&pol[i].im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(mut r: impl Read) -> Result<Self> {
        let bad = |msg: &str| Error::FiberParams(format!("waveform dump: {msg}"));
        let io = |e: std::io::Error| Error::FiberParams(format!("waveform dump: {e}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4).map_err(io)?;
        if u32::from_le_bytes(b4) != 2 {
            return Err(bad("expected 2 polarizations"));
        }
        r.read_exact(&mut b8).map_err(io)?;
        let len = usize::try_from(u64::from_le_bytes(b8)).map_err(|_| bad("length overflow"))?;
        r.read_exact(&mut b8).map_err(io)?;
        let sample_rate = f64::from_le_bytes(b8);
        let mut next = || -> Result<f64> {
            r.read_exact(&mut b8).map_err(io)?;
            Ok(f64::from_le_bytes(b8))
        };
        let mut pols = [Vec::with_capacity(len), Vec::with_capacity(len)];
        for _ in 0..len {
            for pol in pols.iter_mut() {
                let re = next()?;
                let im = next()?;
                pol.push(Complex64::new(re, im));
            }
        }
        Ok(Self { pols, sample_rate })
    }

    pub fn dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        self.write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trip_is_bit_exact() {
        let x: Vec<Complex64> = (0..37).map(|i| Complex64::new(i as f64 * 0.1, -1.0 / (i + 1) as f64)).collect();
        let y: Vec<Complex64> = x.iter().map(|z| z * Complex64::new(0.3, 7e-12)).collect();
        let w = Waveform::new(x, y, 3.84e11).unwrap();
        let mut buf = Vec::new();
        w.write(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 8 + 8 + 37 * 32);
        assert_eq!(&buf[..8], b"BICMWFM1");
        assert_eq!(Waveform::read(&buf[..]).unwrap(), w);
    }

    #[test]
    fn truncated_dump_is_an_error() {
        let w = Waveform::new(vec![Complex64::new(1.0, 2.0); 4], vec![Complex64::new(0.0, 0.0); 4], 1.0).unwrap();
        let mut buf = Vec::new();
        w.write(&mut buf).unwrap();
        assert!(Waveform::read(&buf[..buf.len() - 3]).is_err());
        buf[0] = b'X';
        assert!(Waveform::read(&buf[..]).is_err());
    }
}
