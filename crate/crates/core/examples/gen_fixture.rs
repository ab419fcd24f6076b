//! Regenerate `fixtures/posts.jsonl`: `cargo run --example gen_fixture`.

use marsad_core::synth::planted_corpus;

pub const FIXTURE_SEED: u64 = 42;
pub const FIXTURE_POSTS: usize = 200;

fn main() -> std::io::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/posts.jsonl");
    std::fs::write(&path, planted_corpus(FIXTURE_SEED, FIXTURE_POSTS).to_jsonl())?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
