//! Regenerates the shipped LDPC parity-check matrices under `data/codes`.
//!
//! Run with `cargo run --release -p bicm --example gen_codes`.

use std::path::PathBuf;

use bicm::fec::construct::ira_peg;
use bicm::fec::{LdpcCode, SparseMatrix};
use bicm::seed::{rng_for, Role};

struct Recipe {
    name: &'static str,
    n: usize,
    k: usize,
    degrees: &'static [(usize, f64)],
    seed: u64,
}

/// The toy seed gives minimum distance 4 with the fewest weight-4 codewords
/// among the first 400 seeds (see `toy_minimum_distance` in the fec tests).
const RECIPES: [Recipe; 4] = [
    Recipe { name: "toy12", n: 12, k: 6, degrees: &[(3, 0.5), (4, 0.5)], seed: 255 },
    Recipe { name: "ira648-r1_2", n: 648, k: 324, degrees: &[(3, 0.75), (8, 0.25)], seed: 648 },
    Recipe { name: "ira4096-r1_2", n: 4096, k: 2048, degrees: &[(3, 0.75), (8, 0.25)], seed: 4096 },
    Recipe { name: "ira4096-r3_4", n: 4096, k: 3072, degrees: &[(3, 0.85), (7, 0.15)], seed: 4097 },
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/codes");
    for r in RECIPES {
        let mut rng = rng_for(r.seed, Role::Interleaver);
        let h: SparseMatrix = ira_peg(r.n, r.k, r.degrees, &mut rng)?;
        let code = LdpcCode::new(r.name, h.clone())?;
        let odd_rows = h.rows().iter().filter(|row| row.len() % 2 == 1).count();
        println!(
            "{}: n = {}, k = {}, edges = {}, odd-weight rows = {odd_rows}",
            r.name,
            code.n_code(),
            code.k_info(),
            h.n_edges()
        );
        h.write_alist(dir.join(format!("{}.alist", r.name)))?;
    }
    Ok(())
}
