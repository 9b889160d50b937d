//! Writes the built-in scenarios as JSON into the directory given as the
//! first argument (default `data`).

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use foloc::bench::{default_scenario, shared_frequency_scenario};
use foloc::io::write_scenario_json;

fn main() -> foloc::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    fs::create_dir_all(&dir)?;
    let noisy = default_scenario()?;
    let mut clean = noisy.clone();
    clean.snr_db = None;
    clean.seeds = vec![0];
    for (name, spec) in [
        ("default_scenario.json", noisy),
        ("noise_free_scenario.json", clean),
        ("shared_frequency_scenario.json", shared_frequency_scenario()?),
    ] {
        write_scenario_json(BufWriter::new(File::create(dir.join(name))?), &spec)?;
        println!("wrote {}", dir.join(name).display());
    }
    Ok(())
}
