// Decouplability across chain lengths and equilibria with unit parameters.

use chain_ddp::cli::{cmd_sweep, write_sweep_csv, EquilibriumKind, SweepSpec};
use chain_ddp::ddp::DdpOptions;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SweepSpec {
        n_min: 1,
        n_max: 8,
        equilibria: EquilibriumKind::all().to_vec(),
        params: None,
        options: DdpOptions::default(),
        timing: false,
    };
    let rows = cmd_sweep(&spec)?;
    write_sweep_csv(std::io::stdout().lock(), &rows, false)?;
    let decoupled = rows.iter().filter(|r| r.decouplable).count();
    println!("{decoupled} of {} configurations decouplable", rows.len());
    assert!(rows.iter().all(|r| r.decouplable == (r.n >= 2)));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
