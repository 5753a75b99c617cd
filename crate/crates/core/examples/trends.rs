//! Prints median outcomes of the four controllers on one task.
//!
//! `cargo run --release --example trends -- tidy1 20 none [steps]`

use mbmf::experiment::{aggregate, run_config, ExperimentConfig};
use mbmf::human::InteractionMode;
use mbmf::meta::ControllerKind;
use mbmf::tidy::TaskKind;

fn main() -> mbmf::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let task: TaskKind = args.first().map_or(Ok(TaskKind::Tidy1), |s| s.parse())?;
    let runs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let mode: InteractionMode = args.get(2).map_or(Ok(InteractionMode::None), |s| s.parse())?;
    let steps: Option<usize> = args.get(3).and_then(|s| s.parse().ok());
    println!("controller  reward  work_units  first_reward  p_mb[0..1000]  p_mf[last 2000]");
    for controller in [ControllerKind::Mf, ControllerKind::Mb, ControllerKind::Rnd, ControllerKind::Ec] {
        let mut config = ExperimentConfig::new(task, controller, mode);
        config.runs = runs;
        config.steps = steps;
        let logs = run_config(&config, true)?;
        let curves = aggregate(&logs, config.selection_window)?;
        let n = curves.steps;
        let early = curves.p_mb.q50[..1000.min(n)].iter().sum::<f64>() / 1000.min(n) as f64;
        let late_from = n.saturating_sub(2000);
        let late = curves.p_mf.q50[late_from..].iter().sum::<f64>() / (n - late_from) as f64;
        println!(
            "{:<10} {:>7.1} {:>11.0} {:>13.0} {:>14.3} {:>16.3}",
            controller.to_string(),
            curves.median_final_reward(),
            curves.median_final_work(),
            curves.median_first_reward_step(),
            early,
            late
        );
    }
    Ok(())
}
