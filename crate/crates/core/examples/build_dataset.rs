//! Trips to a TMSG sample file and back.

use modewise::pipeline::{build_dataset_with_stats, read_dataset_file, write_dataset_file, PipelineConfig};
use modewise::synth::{generate, SynthConfig};

fn main() -> modewise::Result<()> {
    let out = generate(&SynthConfig {
        noise: true,
        ..SynthConfig::new(10, 450, 4)
    });
    let cfg = PipelineConfig::default();
    let (ds, stats) = build_dataset_with_stats(&out.trips(), &cfg)?;
    println!("{}", serde_json::to_string_pretty(&stats).unwrap());
    println!("class counts {:?}", ds.class_counts());

    let path = std::env::temp_dir().join("modewise_example.tmsg");
    write_dataset_file(&path, &ds)?;
    let back = read_dataset_file(&path)?;
    assert_eq!(back.samples, ds.samples);
    println!("wrote {} samples to {}", back.len(), path.display());
    Ok(())
}
