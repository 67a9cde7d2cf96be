// Drives the four command workflows from an in-memory config.

use chain_ddp::cli::{self, Feedback, RunConfig};

const CONFIG: &str = r#"
t_end = 2.0
dt = 0.01

[params]
m_cart = 4.0
masses = [6.0, 4.0, 3.0, 2.0]
lengths = [5.0, 4.0, 2.0, 2.0]

[equilibrium]
s = [1, 1, 1, 1]

[signal]
kind = "sine"
amplitude = [0.0, 1.0]
frequency = 0.5
"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::from_toml_str(CONFIG)?;
    let dir = tempfile::tempdir()?;

    for path in cli::cmd_linearize(&cfg, &dir.path().join("model"))? {
        println!("wrote {}", path.file_name().unwrap().to_string_lossy());
    }

    let report = cli::cmd_solve(&cfg, Some(dir.path()), false)?;
    println!(
        "solve: decouplable = {}, dim V* = {}",
        report.decouplable, report.dim_v_star
    );

    let sim = cli::cmd_simulate(&cfg, Feedback::Both, &dir.path().join("sim"))?;
    let diff = sim.difference.expect("both feedback settings requested");
    println!(
        "simulate: {} samples, with-friend max {:.2e}, without {:.2e}",
        sim.trajectory.len(),
        diff.max_with(0).max(diff.max_with(1)),
        diff.max_without(0).max(diff.max_without(1))
    );

    // The binary maps these onto exit codes 0 / 2 / 1.
    let args = ["chain-ddp", "solve", "--config"];
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, CONFIG)?;
    let code = cli::main_with_args(args.iter().map(|s| s.to_string()).chain([
        cfg_path.display().to_string(),
    ]));
    println!("exit code: {code}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
