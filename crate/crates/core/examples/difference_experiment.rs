// Output differences (disturbed minus undisturbed) with and without the
// decoupling friend, for a step and a sine on the cart.

use chain_ddp::ddp::{solve_ddp, DdpOptions};
use chain_ddp::model::{linearize, ChainCartParams, EquilibriumConfig};
use chain_ddp::sim::{difference_experiment, DisturbanceSignal};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = ChainCartParams::four_link_example();
    let m = linearize(&p, &EquilibriumConfig::hanging(4))?;
    let sol = solve_ddp(&m, &DdpOptions::default())?;

    let (t_end, dt) = (10.0, 1e-3);
    for w in [DisturbanceSignal::default_step(), DisturbanceSignal::default_sine()] {
        for signal in [w, w.swapped_axes()] {
            let d = difference_experiment(&m, &sol.friend, &signal, t_end, dt)?;
            println!("{}", signal.describe());
            for axis in 0..2 {
                println!(
                    "  axis {axis}: with friend {:.3e}, without {:.3e}",
                    d.max_with(axis),
                    d.max_without(axis)
                );
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
