//! Generates a small dataset, runs both beamformers and prints the report.
//!
//! `cargo run --release --example desk_scale -- <scenes> <seed> [same-doa]`

use beamlab::beamformer::MvdrOptions;
use beamlab::metrics::{evaluate_dataset, MethodOutputs};
use beamlab::pipeline::{beamform_dataset, Method};
use beamlab::scene::{
    generate_dataset, make_corpus, Dataset, DatasetOptions, Preset, SynthCorpusOptions,
};

fn main() -> beamlab::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|v| v.parse().ok()).unwrap_or(10);
    let seed: u64 = args.get(2).and_then(|v| v.parse().ok()).unwrap_or(0);
    let preset = if args.get(3).map(String::as_str) == Some("same-doa") {
        Preset::SameDoa
    } else {
        Preset::Random
    };
    let root = std::env::temp_dir().join(format!("beamlab_desk_{seed}_{n}"));
    let corpus = root.join("corpus");
    make_corpus(
        &corpus,
        &SynthCorpusOptions {
            seed,
            ..Default::default()
        },
    )?;
    let data = root.join("data");
    let opts = DatasetOptions {
        n_scenes: n,
        seed,
        preset,
        ..Default::default()
    };
    let t = std::time::Instant::now();
    generate_dataset(&opts, &corpus, None, &data)?;
    eprintln!("simulate: {:.1?}", t.elapsed());
    let ds = Dataset::open(&data)?;
    let out = root.join("enhanced");
    let mut methods = Vec::new();
    for m in [Method::OracleMvdr, Method::EstimatedMvdr] {
        let t = std::time::Instant::now();
        let r = beamform_dataset(&ds, m, &MvdrOptions::default(), &out)?;
        eprintln!(
            "{}: {:.1?}, {} failed",
            m.label(),
            t.elapsed(),
            r.failed.len()
        );
        methods.push(MethodOutputs::from_dir(&out.join(m.label())));
    }
    let report = evaluate_dataset(&ds, &methods)?;
    for s in &report.aggregate {
        println!(
            "{:<14} n={:<3} SI-SDR mean {:>6.2} median {:>6.2}  STOI mean {:.3}",
            s.method, s.scenes, s.si_sdr_db.mean, s.si_sdr_db.median, s.stoi.mean
        );
    }
    Ok(())
}
