//! Labeled QAM constellations and the memoryless bit-to-symbol mapper.
//!
//! A constellation has `M = 2^m` points of unit average energy. Point `i`
//! carries an `m`-bit label; bit position `k` (0-based, most significant
//! first) of every label partitions the points into the two subsets used by
//! the demapper.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::{Error, Result};

const BUILTIN_8QAM: &str = include_str!("../data/constellations/8qam-rect.txt");

/// Binary label of one symbol, most significant bit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitWord(Vec<u8>);

impl BitWord {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::NonBinaryBit(b));
        }
        Ok(Self(bits))
    }

    fn from_value(value: usize, m: usize) -> Self {
        Self((0..m).map(|k| ((value >> (m - 1 - k)) & 1) as u8).collect())
    }

    fn value(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn hamming_distance(&self, other: &BitWord) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl std::fmt::Display for BitWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.iter().try_for_each(|b| write!(f, "{b}"))
    }
}

/// An `M`-point constellation with a binary labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    name: String,
    points: Vec<Complex64>,
    labels: Vec<BitWord>,
    m: usize,
    /// `subsets[k][b]` lists the point indices whose label has bit `b` at position `k`.
    subsets: Vec<[Vec<usize>; 2]>,
    /// Point index for every label value.
    index_of_label: Vec<usize>,
}

impl Constellation {
    /// Builds a constellation from raw points and labels, normalizing to unit average energy.
    pub fn new(name: impl Into<String>, points: Vec<Complex64>, labels: Vec<BitWord>) -> Result<Self> {
        let size = points.len();
        if size < 2 || !size.is_power_of_two() || size > 1 << 16 {
            return Err(Error::Constellation(format!(
                "size {size} is not a power of two >= 2"
            )));
        }
        if labels.len() != size {
            return Err(Error::Constellation(format!(
                "{} labels for {size} points",
                labels.len()
            )));
        }
        let m = size.trailing_zeros() as usize;
        if let Some(bad) = labels.iter().find(|l| l.len() != m) {
            return Err(Error::Constellation(format!(
                "label {bad} has length {}, expected {m}",
                bad.len()
            )));
        }
        let mut index_of_label = vec![usize::MAX; size];
        for (i, label) in labels.iter().enumerate() {
            let v = label.value();
            if index_of_label[v] != usize::MAX {
                return Err(Error::Constellation(format!("duplicate label {label}")));
            }
            index_of_label[v] = i;
        }
        if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::Constellation("non-finite point".into()));
        }

        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / size as f64;
        if energy <= 0.0 {
            return Err(Error::Constellation("all points at the origin".into()));
        }
        let points = if (energy - 1.0).abs() > 1e-12 {
            if (energy - 1.0).abs() > 1e-6 {
                log::warn!("constellation energy {energy} renormalized to 1");
            }
            let scale = energy.sqrt().recip();
            points.into_iter().map(|p| p * scale).collect()
        } else {
            points
        };

        let subsets = (0..m)
            .map(|k| {
                let mut sets = [Vec::with_capacity(size / 2), Vec::with_capacity(size / 2)];
                for (i, label) in labels.iter().enumerate() {
                    sets[label.0[k] as usize].push(i);
                }
                sets
            })
            .collect();

        Ok(Self {
            name: name.into(),
            points,
            labels,
            m,
            subsets,
            index_of_label,
        })
    }

    /// Square `M`-QAM with a binary-reflected Gray code on each quadrature.
    ///
    /// The first `m/2` label bits select the in-phase level, the rest the
    /// quadrature level. Point `i` carries the label with integer value `i`.
    pub fn square_qam(order: usize) -> Result<Self> {
        if !matches!(order, 4 | 16 | 64 | 256) {
            return Err(Error::UnsupportedOrder(order));
        }
        let m = order.trailing_zeros() as usize;
        let half = m / 2;
        let levels = 1usize << half;
        let amplitude = |gray: usize| {
            let index = gray_decode(gray);
            (2 * index) as f64 - (levels - 1) as f64
        };
        let mut points = Vec::with_capacity(order);
        let mut labels = Vec::with_capacity(order);
        for value in 0..order {
            let in_phase = value >> half;
            let quadrature = value & (levels - 1);
            points.push(Complex64::new(amplitude(in_phase), amplitude(quadrature)));
            labels.push(BitWord::from_value(value, m));
        }
        Self::new(format!("{order}qam"), points, labels)
    }

    /// The built-in rectangular 8QAM with a natural-binary (non-Gray) labeling.
    pub fn rect_8qam() -> Self {
        Self::parse("8qam", BUILTIN_8QAM).expect("built-in 8QAM definition is valid")
    }

    /// Looks up a built-in constellation by name (`4qam`, `qpsk`, `8qam`, `16qam`, ...).
    pub fn builtin(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Self::square_qam(4),
            "8qam" => Ok(Self::rect_8qam()),
            "16qam" => Self::square_qam(16),
            "64qam" => Self::square_qam(64),
            "256qam" => Self::square_qam(256),
            _ => Err(Error::Constellation(format!("unknown constellation {name:?}"))),
        }
    }

    /// A built-in name or, failing that, a path to a constellation file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        Self::builtin(name_or_path).or_else(|_| Self::load(name_or_path))
    }

    /// Reads a constellation file: one `label re im` row per point, `#` comments.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(name, &text)
    }

    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let malformed = |what: &str| {
                Error::Constellation(format!("line {}: {what}: {raw:?}", lineno + 1))
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(malformed("expected `label re im`"));
            }
            let bits = fields[0]
                .chars()
                .map(|c| match c {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    _ => Err(malformed("label must be a 0/1 string")),
                })
                .collect::<Result<Vec<_>>>()?;
            let re: f64 = fields[1].parse().map_err(|_| malformed("bad real part"))?;
            let im: f64 = fields[2].parse().map_err(|_| malformed("bad imaginary part"))?;
            labels.push(BitWord(bits));
            points.push(Complex64::new(re, im));
        }
        Self::new(name, points, labels)
    }

    /// Serializes in the file format accepted by [`Constellation::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, l) in self.points.iter().zip(&self.labels) {
            writeln!(out, "{l} {} {}", p.re, p.im).unwrap();
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of points `M`.
    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// Bits per symbol `m`.
    pub fn bits_per_symbol(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Complex64 {
        self.points[i]
    }

    pub fn labels(&self) -> &[BitWord] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &BitWord {
        &self.labels[i]
    }

    /// Bit `k` of the label of point `i`.
    #[inline]
    pub fn label_bit(&self, i: usize, k: usize) -> u8 {
        self.labels[i].0[k]
    }

    /// Indices of the points whose label has bit `bit` at position `k`.
    pub fn subset(&self, k: usize, bit: u8) -> &[usize] {
        &self.subsets[k][bit as usize]
    }

    /// Point index carrying the given label bits.
    pub fn index_of(&self, bits: &[u8]) -> usize {
        let v = bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize);
        self.index_of_label[v]
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order() as f64
    }

    /// Pairs of points at the minimum Euclidean distance (within a relative tolerance).
    pub fn nearest_neighbor_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.order();
        let mut dmin = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                dmin = dmin.min((self.points[i] - self.points[j]).norm_sqr());
            }
        }
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if (self.points[i] - self.points[j]).norm_sqr() <= dmin * (1.0 + 1e-9) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// Maps a bit sequence onto symbols, `m` bits per symbol.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        Ok(self
            .map_to_indices(bits)?
            .into_iter()
            .map(|i| self.points[i])
            .collect())
    }

    /// Like [`Constellation::map_bits`] but returns point indices.
    pub fn map_to_indices(&self, bits: &[u8]) -> Result<Vec<usize>> {
        if bits.len() % self.m != 0 {
            return Err(Error::LengthMismatch {
                len: bits.len(),
                m: self.m,
            });
        }
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::NonBinaryBit(b));
        }
        Ok(bits.chunks_exact(self.m).map(|c| self.index_of(c)).collect())
    }
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 1 {
        g >>= 1;
        b ^= g;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_invariants(c: &Constellation) {
        let m = c.bits_per_symbol();
        assert_eq!(c.order(), 1 << m);
        assert!((c.average_energy() - 1.0).abs() < 1e-12);
        for k in 0..m {
            let (s0, s1) = (c.subset(k, 0), c.subset(k, 1));
            assert_eq!(s0.len(), c.order() / 2);
            assert_eq!(s1.len(), c.order() / 2);
            let mut all: Vec<usize> = s0.iter().chain(s1).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..c.order()).collect::<Vec<_>>());
        }
        let mut labels: Vec<String> = c.labels().iter().map(|l| l.to_string()).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), c.order());
    }

    #[test]
    fn square_qam_invariants() {
        for order in [4, 16, 64, 256] {
            assert_invariants(&Constellation::square_qam(order).unwrap());
        }
        assert_invariants(&Constellation::rect_8qam());
    }

    #[test]
    fn unsupported_orders_rejected() {
        for order in [2, 8, 32, 128, 1024] {
            assert!(matches!(
                Constellation::square_qam(order),
                Err(Error::UnsupportedOrder(o)) if o == order
            ));
        }
    }

    #[test]
    fn qpsk_points() {
        let c = Constellation::square_qam(4).unwrap();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        for p in c.points() {
            assert!((p.re.abs() - a).abs() < 1e-15 && (p.im.abs() - a).abs() < 1e-15);
        }
        // label 11 sits in the first quadrant
        let p = c.point(c.index_of(&[1, 1]));
        assert!(p.re > 0.0 && p.im > 0.0);
    }

    #[test]
    fn sixteen_qam_scale_and_gray_adjacency() {
        let c = Constellation::square_qam(16).unwrap();
        // unnormalized grid {±1, ±3}^2 has mean energy 10
        let min_re = c.points().iter().map(|p| p.re.abs()).fold(f64::INFINITY, f64::min);
        assert!((min_re - 1.0 / 10f64.sqrt()).abs() < 1e-15);
        let pairs = c.nearest_neighbor_pairs();
        assert_eq!(pairs.len(), 24);
        for (i, j) in pairs {
            assert_eq!(c.label(i).hamming_distance(c.label(j)), 1);
        }
    }

    #[test]
    fn gray_property_for_all_square_orders() {
        for order in [4, 64, 256] {
            let c = Constellation::square_qam(order).unwrap();
            let side = (order as f64).sqrt() as usize;
            let pairs = c.nearest_neighbor_pairs();
            assert_eq!(pairs.len(), 2 * side * (side - 1));
            assert!(pairs
                .iter()
                .all(|&(i, j)| c.label(i).hamming_distance(c.label(j)) == 1));
        }
    }

    #[test]
    fn eight_qam_is_not_gray() {
        let c = Constellation::rect_8qam();
        assert_eq!(c.bits_per_symbol(), 3);
        assert!(c
            .nearest_neighbor_pairs()
            .iter()
            .any(|&(i, j)| c.label(i).hamming_distance(c.label(j)) >= 2));
    }

    #[test]
    fn text_round_trip_is_identical() {
        let c = Constellation::square_qam(4).unwrap();
        let back = Constellation::parse("4qam", &c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn load_rejects_duplicate_labels_and_bad_sizes() {
        let dup = "00 1 1\n01 -1 1\n01 -1 -1\n11 1 -1\n";
        assert!(matches!(Constellation::parse("x", dup), Err(Error::Constellation(_))));
        let three = "00 1 1\n01 -1 1\n10 -1 -1\n";
        assert!(Constellation::parse("x", three).is_err());
        let malformed = "00 1\n01 -1 1\n10 -1 -1\n11 1 -1\n";
        assert!(Constellation::parse("x", malformed).is_err());
        let bad_label = "0a 1 1\n01 -1 1\n10 -1 -1\n11 1 -1\n";
        assert!(Constellation::parse("x", bad_label).is_err());
    }

    #[test]
    fn load_renormalizes_energy() {
        // energy 2 per point
        let text = "00 -1 -1\n01 -1 1\n10 1 -1\n11 1 1\n";
        let c = Constellation::parse("x", text).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c.point(0) - Complex64::new(-s, -s)).norm() < 1e-15);
    }

    #[test]
    fn map_bits_edge_cases() {
        let c = Constellation::square_qam(4).unwrap();
        assert!(c.map_bits(&[]).unwrap().is_empty());
        let label = c.label(0).bits().to_vec();
        assert_eq!(c.map_bits(&label).unwrap(), vec![c.point(0)]);
        assert!(matches!(
            c.map_bits(&[1, 0, 1]),
            Err(Error::LengthMismatch { len: 3, m: 2 })
        ));
    }

    proptest! {
        #[test]
        fn label_lookup_inverts_mapping(order_idx in 0usize..4, value in 0usize..256) {
            let order = [4, 16, 64, 256][order_idx];
            let c = Constellation::square_qam(order).unwrap();
            let i = value % order;
            let bits = c.label(i).bits().to_vec();
            prop_assert_eq!(c.map_to_indices(&bits).unwrap(), vec![i]);
        }
    }
}
