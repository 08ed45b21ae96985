//! Writes a synthetic molecule-like dataset in the flat-file layout.
//!
//! Usage: make_fixture OUT_DIR [COUNT] [SEED]

use wlmetric::synth::mutag_like;
use wlmetric::write_tudataset;

fn main() {
    let mut args = std::env::args().skip(1);
    let out = args.next().expect("usage: make_fixture OUT_DIR [COUNT] [SEED]");
    let count = args.next().map_or(60, |s| s.parse().expect("COUNT is an integer"));
    let seed = args.next().map_or(2024, |s| s.parse().expect("SEED is an integer"));
    let ds = mutag_like("SYNTH_MUTAG", count, seed);
    let dir = write_tudataset(&out, &ds, true).expect("writable output directory");
    println!("{} graphs written to {}", ds.len(), dir.display());
}
