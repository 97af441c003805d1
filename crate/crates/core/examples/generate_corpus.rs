//! Writes a corpus of seeded synthetic datasets in the archive file layout,
//! ready for the `alarmsift` pipeline:
//!
//! ```text
//! cargo run -p alarmsift-core --example generate_corpus -- <out_dir> [count] [seed_base]
//! ```
//!
//! Each dataset is a `<id>_UCR_Anomaly_<name>_<trainEnd>_<anomStart>_<anomEnd>.txt`
//! values file plus a JSON sidecar manifest carrying the dataset context. The
//! test series holds one labeled anomaly and one slightly weaker unlabeled
//! decoy, so a calibrated detector raises both true and false alarms — useful
//! for exercising the verification stage.

use alarmsift_core::{generate, write_archive_files, SyntheticSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let out_dir = match args.next() {
        Some(dir) => std::path::PathBuf::from(dir),
        None => {
            eprintln!(
                "usage: generate_corpus <out_dir> [count] [seed_base]\n\
                 writes `count` synthetic datasets (default 3) starting at seed\n\
                 `seed_base` (default 0) into <out_dir>"
            );
            std::process::exit(2);
        }
    };
    let count: usize = parse_or_exit(args.next(), 3, "count");
    let seed_base: u64 = parse_or_exit(args.next(), 0, "seed_base");

    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("cannot create {}: {e}", out_dir.display());
        std::process::exit(1);
    }
    for i in 0..count {
        let seed = seed_base + i as u64;
        let spec = SyntheticSpec::new(format!("synthwave{seed:03}"), seed);
        let dataset = generate(&spec);
        match write_archive_files(&dataset, &out_dir, i + 1) {
            Ok(path) => println!("wrote {}", path.display()),
            Err(e) => {
                eprintln!("failed to write dataset {seed}: {e}");
                std::process::exit(1);
            }
        }
    }
}

fn parse_or_exit<T: std::str::FromStr>(arg: Option<String>, default: T, what: &str) -> T {
    match arg {
        None => default,
        Some(raw) => raw.parse().unwrap_or_else(|_| {
            eprintln!("invalid {what}: {raw:?}");
            std::process::exit(2);
        }),
    }
}
