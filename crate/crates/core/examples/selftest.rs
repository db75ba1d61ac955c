//! Run the built-in invariant checks and write a small CSV table.

use mwrelay::experiment::{self, Experiment, ExperimentSpec};

fn main() -> mwrelay::Result<()> {
    for check in experiment::run_selftest(1) {
        println!("{check}");
    }
    let mut spec = ExperimentSpec::new(Experiment::BoundsTable);
    spec.apply_config("k = 5\nm = 50:150:50\n")?;
    let out = experiment::run(&spec)?;
    experiment::write_csv(std::io::stdout().lock(), &out.metadata, &out.rows)?;
    Ok(())
}
