//! Binary LDPC codes: GF(2) encoder preprocessing and sum-product decoding.

use std::path::Path;

use super::alist::SparseMatrix;
use super::DecodeResult;
use crate::demapper::hard_decide;
use crate::{Error, Result, LLR_CLAMP};

pub const DEFAULT_LDPC_ITERATIONS: usize = 50;

/// An LDPC code given by its parity-check matrix, ready to encode and decode.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    h: SparseMatrix,
    name: String,
    info_positions: Vec<usize>,
    parity_positions: Vec<usize>,
    /// Row `i` gives parity bit `parity_positions[i]` as a GF(2) combination of info bits.
    generator: Vec<Vec<u64>>,
    /// Edge layout for the decoder: edges grouped by check, with the variable of each edge.
    edge_var: Vec<usize>,
    check_start: Vec<usize>,
    /// For each variable, the edge indices incident to it.
    var_edges: Vec<Vec<usize>>,
}

impl LdpcCode {
    /// Preprocesses `h` for systematic encoding. Fails if `h` lacks full row rank.
    pub fn new(name: impl Into<String>, h: SparseMatrix) -> Result<Self> {
        let n = h.n_cols();
        let m = h.n_rows();
        let words = n.div_ceil(64);
        let mut dense: Vec<Vec<u64>> = h
            .rows()
            .iter()
            .map(|row| {
                let mut bits = vec![0u64; words];
                row.iter().for_each(|&c| bits[c / 64] |= 1 << (c % 64));
                bits
            })
            .collect();

        // reduced row echelon form, pivots taken from the rightmost columns
        let mut pivot_cols = Vec::with_capacity(m);
        let mut rank = 0;
        for col in (0..n).rev() {
            if rank == m {
                break;
            }
            let (w, b) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..m).find(|&r| dense[r][w] & b != 0) else {
                continue;
            };
            dense.swap(rank, p);
            let pivot = dense[rank].clone();
            for (r, row) in dense.iter_mut().enumerate() {
                if r != rank && row[w] & b != 0 {
                    row.iter_mut().zip(&pivot).for_each(|(x, y)| *x ^= y);
                }
            }
            pivot_cols.push(col);
            rank += 1;
        }
        if rank < m {
            return Err(Error::RankDeficient { rank, rows: m });
        }

        let mut is_pivot = vec![false; n];
        pivot_cols.iter().for_each(|&c| is_pivot[c] = true);
        let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let k = info_positions.len();
        let info_words = k.div_ceil(64);
        let generator = dense
            .iter()
            .map(|row| {
                let mut g = vec![0u64; info_words];
                for (j, &c) in info_positions.iter().enumerate() {
                    if row[c / 64] >> (c % 64) & 1 == 1 {
                        g[j / 64] |= 1 << (j % 64);
                    }
                }
                g
            })
            .collect();

        let mut edge_var = Vec::with_capacity(h.n_edges());
        let mut check_start = Vec::with_capacity(m + 1);
        let mut var_edges = vec![Vec::new(); n];
        for row in h.rows() {
            check_start.push(edge_var.len());
            for &v in row {
                var_edges[v].push(edge_var.len());
                edge_var.push(v);
            }
        }
        check_start.push(edge_var.len());

        Ok(Self {
            h,
            name: name.into(),
            info_positions,
            parity_positions: pivot_cols,
            generator,
            edge_var,
            check_start,
            var_edges,
        })
    }

    pub fn load_alist(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::new(name, SparseMatrix::load_alist(path)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parity_check(&self) -> &SparseMatrix {
        &self.h
    }

    pub fn n_code(&self) -> usize {
        self.h.n_cols()
    }

    pub fn k_info(&self) -> usize {
        self.info_positions.len()
    }

    pub fn rate(&self) -> f64 {
        self.k_info() as f64 / self.n_code() as f64
    }

    /// Codeword positions that carry the information bits, in order.
    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        let k = self.k_info();
        if info.len() != k {
            return Err(Error::InputLength {
                expected: k,
                got: info.len(),
            });
        }
        let mut packed = vec![0u64; k.div_ceil(64)];
        for (j, &b) in info.iter().enumerate() {
            if b > 1 {
                return Err(Error::NonBinaryBit(b));
            }
            packed[j / 64] |= (b as u64) << (j % 64);
        }
        let mut code = vec![0u8; self.n_code()];
        for (&pos, &b) in self.info_positions.iter().zip(info) {
            code[pos] = b;
        }
        for (&pos, g) in self.parity_positions.iter().zip(&self.generator) {
            let ones: u32 = g.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
            code[pos] = (ones & 1) as u8;
        }
        Ok(code)
    }

    /// Extracts the information bits from a codeword.
    pub fn info_bits(&self, code: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| code[p]).collect()
    }

    /// Sum-product decoding with a flooding schedule.
    ///
    /// With `strict` unset, decoding stops as soon as the hard decisions satisfy
    /// every parity check; otherwise all `max_iter` iterations run.
    pub fn decode(&self, llrs: &[f64], max_iter: usize, strict: bool) -> Result<DecodeResult> {
        let n = self.n_code();
        if llrs.len() != n {
            return Err(Error::InputLength {
                expected: n,
                got: llrs.len(),
            });
        }
        // messages use ln P(0)/P(1) internally
        let channel: Vec<f64> = llrs.iter().map(|l| -l.clamp(-LLR_CLAMP, LLR_CLAMP)).collect();
        let n_edges = self.edge_var.len();
        let mut v2c: Vec<f64> = self.edge_var.iter().map(|&v| channel[v]).collect();
        let mut c2v = vec![0.0; n_edges];
        let mut total = channel.clone();
        let mut decided = vec![0u8; n];
        let mut tanhs = Vec::new();
        let mut suffix = Vec::new();
        let mut iterations = 0;
        let mut converged = false;

        for _ in 0..max_iter {
            iterations += 1;
            for c in 0..self.check_start.len() - 1 {
                let (s, e) = (self.check_start[c], self.check_start[c + 1]);
                tanhs.clear();
                tanhs.extend(v2c[s..e].iter().map(|&m| (0.5 * m).tanh()));
                let deg = e - s;
                suffix.clear();
                suffix.resize(deg + 1, 1.0);
                for i in (0..deg).rev() {
                    suffix[i] = suffix[i + 1] * tanhs[i];
                }
                let mut prefix = 1.0;
                for i in 0..deg {
                    let p = prefix * suffix[i + 1];
                    c2v[s + i] = (2.0 * p.atanh()).clamp(-LLR_CLAMP, LLR_CLAMP);
                    prefix *= tanhs[i];
                }
            }
            for v in 0..n {
                let edges = &self.var_edges[v];
                let t = channel[v] + edges.iter().map(|&e| c2v[e]).sum::<f64>();
                total[v] = t;
                for &e in edges {
                    v2c[e] = (t - c2v[e]).clamp(-LLR_CLAMP, LLR_CLAMP);
                }
                decided[v] = hard_decide(-t);
            }
            converged = self.h.is_codeword(&decided);
            if converged && !strict {
                break;
            }
        }

        Ok(DecodeResult {
            info_bits: self.info_bits(&decided),
            codeword: decided,
            apo_llrs: total.iter().map(|t| -t).collect(),
            iterations,
            converged,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming74() -> SparseMatrix {
        SparseMatrix::from_rows(7, vec![vec![0, 1, 2, 4], vec![1, 2, 3, 5], vec![0, 1, 3, 6]]).unwrap()
    }

    #[test]
    fn encoder_produces_codewords() {
        let code = LdpcCode::new("hamming", hamming74()).unwrap();
        assert_eq!(code.k_info(), 4);
        for v in 0..16u8 {
            let info: Vec<u8> = (0..4).map(|j| (v >> j) & 1).collect();
            let c = code.encode(&info).unwrap();
            assert!(code.parity_check().is_codeword(&c));
            assert_eq!(code.info_bits(&c), info);
        }
        assert_eq!(code.encode(&[0; 4]).unwrap(), vec![0; 7]);
        assert!(code.encode(&[0; 3]).is_err());
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let h = SparseMatrix::from_rows(4, vec![vec![0, 1], vec![2, 3], vec![0, 1, 2, 3]]).unwrap();
        assert!(matches!(
            LdpcCode::new("dup", h),
            Err(Error::RankDeficient { rank: 2, rows: 3 })
        ));
    }

    #[test]
    fn saturated_llrs_converge_at_once() {
        let code = LdpcCode::new("hamming", hamming74()).unwrap();
        let c = code.encode(&[1, 0, 1, 1]).unwrap();
        let llrs: Vec<f64> = c.iter().map(|&b| if b == 1 { 50.0 } else { -50.0 }).collect();
        let r = code.decode(&llrs, 50, false).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.codeword, c);
    }

    #[test]
    fn single_error_is_corrected() {
        let code = LdpcCode::new("hamming", hamming74()).unwrap();
        let c = code.encode(&[0, 1, 1, 0]).unwrap();
        let mut llrs: Vec<f64> = c.iter().map(|&b| if b == 1 { 2.0 } else { -2.0 }).collect();
        llrs[3] = -llrs[3] * 0.5;
        let r = code.decode(&llrs, 50, false).unwrap();
        assert_eq!(r.codeword, c);
    }

    #[test]
    fn strict_mode_runs_every_iteration() {
        let code = LdpcCode::new("hamming", hamming74()).unwrap();
        let llrs = vec![-10.0; 7];
        let r = code.decode(&llrs, 7, true).unwrap();
        assert_eq!(r.iterations, 7);
        assert!(r.converged);
    }
}
