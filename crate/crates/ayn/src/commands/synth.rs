use ayn_core::synthetic::{generate, ToyWorldSpec};

use crate::cli::{SynthArgs, SynthTask};
use crate::error::Result;
use crate::io::{save_features, write_qa_jsonl, write_text, FeatureFormat};

/// Edges of a small taxonomy over the toy vocabulary.
pub fn toy_taxonomy(spec: &ToyWorldSpec) -> String {
    let mut out = String::from("color\tentity\nshape\tentity\nnumber\tentity\n");
    for c in &spec.colors {
        out.push_str(&format!("{c}\tcolor\n"));
    }
    for s in &spec.shapes {
        out.push_str(&format!("{s}\tshape\n"));
    }
    for n in 1..=spec.max_count {
        out.push_str(&format!("{n}\tnumber\n"));
    }
    out
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let base = match args.task {
        SynthTask::Classify => ToyWorldSpec::default(),
        SynthTask::Describe => ToyWorldSpec::describe_task(),
    };
    let spec = ToyWorldSpec {
        seed: args.seed,
        noise: args.noise,
        num_train: args.num_train,
        num_test: args.num_test,
        ..base
    };
    let corpus = generate(&spec)?;
    let dir = &args.out_dir;
    write_text(&dir.join("train.jsonl"), &write_qa_jsonl(&corpus.train))?;
    write_text(&dir.join("test.jsonl"), &write_qa_jsonl(&corpus.test))?;
    let features = match args.features_format {
        FeatureFormat::Tsv => dir.join("features.tsv"),
        FeatureFormat::Binary => dir.join("features.bin"),
    };
    save_features(&features, &corpus.features, Some(args.features_format))?;
    let mut key = String::new();
    for k in &corpus.key {
        key.push_str(&serde_json::to_string(k).expect("key serializes"));
        key.push('\n');
    }
    write_text(&dir.join("answer_key.jsonl"), &key)?;
    write_text(&dir.join("taxonomy.tsv"), &toy_taxonomy(&spec))?;
    write_text(
        &dir.join("spec.json"),
        &serde_json::to_string_pretty(&spec).expect("spec serializes"),
    )?;
    Ok(())
}
