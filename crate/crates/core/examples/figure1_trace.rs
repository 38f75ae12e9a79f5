//! Sequential gradient steps over a sampled pair stream. One-hot scores
//! never lower the chosen score; overlapping linear embeddings do.

use std::path::Path;

use prefmono::report::{run_figure1_analog, Experiment};

fn main() -> prefmono::Result<()> {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["figure1_one_hot.toml", "figure1_interference.toml"] {
        let exp = Experiment::load(configs.join(name))?;
        let trace = run_figure1_analog(&exp, exp.config.seed)?;
        println!("{name}: {} steps", trace.len());
        for r in trace.iter().filter(|r| r.chosen_delta < 0.0).take(3) {
            println!(
                "  step {:>2} {} over {}: Δs_chosen = {:+.4}, chosen predicate {}",
                r.step, r.chosen, r.rejected, r.chosen_delta, r.predicate_chosen
            );
        }
        let negative = trace.iter().filter(|r| r.chosen_delta < 0.0).count();
        println!("  {negative} negative chosen deltas");
    }
    Ok(())
}
