//! Prints label, dominant operation, duty cycle and memory for every
//! application on its synthetic window.
//!
//! `cargo run -p biobench-core --example profile [seed]`

use biobench_core::apps::{build_app, characterize_default, dominant_kernel_share, synthetic_input, AppConfig, AppId};

fn main() -> biobench_core::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    for app in AppId::ALL {
        let mut p = build_app(AppConfig::default_for(app))?;
        let x = synthetic_input(p.config(), seed)?;
        let run = p.process_window(&x)?;
        let label = run.result.label.clone();
        let (kernel, share) = dominant_kernel_share(&run)?;
        let m = characterize_default(&p)?;
        let main = m.main_operations.map_or("-".to_string(), |o| o.label);
        let duty = m.duty_cycle.map_or("-".to_string(), |d| format!("{:.5} ({})", d.ratio, d.bin));
        println!(
            "{:<11} {label:<16} {main:<27} duty {duty:<22} static {:>7.1} KiB  dynamic {:>7.1} KiB  top kernel {kernel} {:.0}%",
            app.name(),
            m.static_kib,
            m.dynamic_kib,
            100.0 * share
        );
    }
    Ok(())
}
