//! Regenerate the bundled molecule corpus:
//!
//! ```text
//! cargo run -p hiersample --example gen_desk -- <count> <seed> <out.jsonl>
//! ```
//!
//! The checked-in `data/desk.jsonl` is `gen_desk 200 0`; a test pins the
//! file to the generator's output, so regenerating with those arguments is
//! always a no-op.

use hiersample::corpus;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let usage = "usage: gen_desk <count> <seed> <out.jsonl>";
    if args.len() != 4 {
        eprintln!("{usage}");
        std::process::exit(2);
    }
    let count: usize = args[1].parse().unwrap_or_else(|_| {
        eprintln!("{usage}");
        std::process::exit(2);
    });
    let seed: u64 = args[2].parse().unwrap_or_else(|_| {
        eprintln!("{usage}");
        std::process::exit(2);
    });
    let ds = corpus::desk_molecules(count, seed).expect("corpus generates");
    ds.save_graph_jsonl(&args[3]).expect("corpus saves");
    println!("wrote {} graphs to {}", ds.len(), args[3]);
}
