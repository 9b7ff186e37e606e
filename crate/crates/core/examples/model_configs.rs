//! Layer stacks and parameter counts of configurations A to I.

use modewise::zoo::{build_config, ZooOptions, CONFIG_NAMES};

fn main() -> modewise::Result<()> {
    let opts = ZooOptions::default();
    println!("{:<6} {:>7} {:>12}  hidden", "config", "layers", "parameters");
    for name in CONFIG_NAMES {
        let spec = build_config(name, &opts)?;
        println!(
            "{name:<6} {:>7} {:>12}  {:?}",
            spec.layers.len(),
            spec.param_count()?,
            spec.hidden_widths()
        );
    }
    Ok(())
}
