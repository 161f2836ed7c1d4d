use std::path::PathBuf;

use cp3::synth::write_sequence;

use crate::error::{CliError, CliResult};
use crate::scene::SceneConfig;

pub fn execute(scene: &SceneConfig, manifest: Option<PathBuf>) -> CliResult<()> {
    let out = scene
        .output
        .as_deref()
        .ok_or_else(|| CliError::usage("synth requires --output"))?;
    let seq = write_sequence(&scene.spec, out, scene.temporal_roi)?;
    scene.manifest().write(&manifest.unwrap_or_else(|| out.join("manifest.txt")))?;
    println!(
        "frames       {} ({}x{}x{}) in {}",
        seq.len(),
        scene.spec.width,
        scene.spec.height,
        scene.spec.channels,
        out.display()
    );
    Ok(())
}
