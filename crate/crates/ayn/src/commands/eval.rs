use crate::cli::EvalArgs;
use crate::error::Result;
use crate::io::{load_references, load_taxonomy, write_text};
use crate::report::{evaluate, render_text, EvalOptions};

use super::load_predictions;

pub fn eval(args: &EvalArgs) -> Result<()> {
    let predictions = load_predictions(&args.predictions)?;
    let references = load_references(&args.references, args.references_format)?;
    let taxonomy = match &args.taxonomy {
        Some(p) => Some(load_taxonomy(p, args.word_map.as_deref())?),
        None => None,
    };
    let opts = EvalOptions {
        taxonomy: taxonomy.as_ref(),
        downweight: args.downweight,
        vqa: args.vqa,
        agreement: args.agreement.into(),
        seed: args.seed,
    };
    let report = evaluate(&predictions, &references, &opts)?;
    let text = render_text(&report);
    print!("{text}");
    if let Some(p) = &args.out {
        write_text(p, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    }
    if let Some(p) = &args.text {
        write_text(p, &text)?;
    }
    Ok(())
}
