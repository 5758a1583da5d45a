//! Regenerate the bundled synthetic corpus.
//!
//! Usage: `cargo run --example gen_corpus [DIR]` (defaults to the checked-in
//! `testdata/corpus`). The output is a pure function of the built-in spec, so
//! rerunning it must leave the tree unchanged; a test asserts exactly that.

use seed::synth::{write_corpus, SynthSpec};

fn main() {
    let root = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/testdata/corpus").to_string());
    let n = write_corpus(std::path::Path::new(&root), SynthSpec::default())
        .unwrap_or_else(|e| panic!("writing corpus under {root}: {e}"));
    eprintln!("wrote {n} files under {root}");
}
