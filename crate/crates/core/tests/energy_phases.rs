use biobench_core::apps::{AppConfig, AppId};
use biobench_core::phasesim::{duty_cycle, simulate_cycle, simulate_cycle_with, DutyBin, Phase, SimOptions, REFERENCE_CLOCK_HZ};
use biobench_core::power::{
    builtin_energy_table, compare_platforms, energy_breakdown, find_record, load_energy_table_str, project_energy, EnergyScale, Platform,
    ENERGY_TABLE_CSV,
};
use biobench_core::sigio::schedule_acquisition;
use biobench_core::Error;

fn schedule(app: AppId) -> biobench_core::sigio::AcquisitionSchedule {
    let c = AppConfig::default_for(app);
    schedule_acquisition(&c.signals, c.window_seconds, c.buffer_bytes).unwrap()
}

#[test]
fn timeline_covers_the_window() {
    for app in [AppId::Hcl, AppId::Cwm, AppId::CoughDet, AppId::Ecl] {
        let s = schedule(app);
        for per_batch in [false, true] {
            let opts = SimOptions { per_batch_processing: per_batch, ..SimOptions::default() };
            let t = simulate_cycle_with(&s, 1_000_000, REFERENCE_CLOCK_HZ, &opts).unwrap();
            t.validate().unwrap();
            let sum = t.total(Phase::Idle) + t.total(Phase::Acquisition) + t.total(Phase::Processing);
            assert!((sum - s.window_seconds).abs() < 1e-9, "{app} {per_batch}");
            assert!((t.total(Phase::Processing) - 1_000_000.0 / REFERENCE_CLOCK_HZ).abs() < 1e-12);
        }
    }
}

#[test]
fn overrun_is_a_real_time_error() {
    let s = schedule(AppId::Gcl);
    match simulate_cycle(&s, 1_000_000_000, REFERENCE_CLOCK_HZ) {
        Err(Error::RealTime { processing_s, window_s }) => assert!(processing_s > window_s),
        other => panic!("{other:?}"),
    }
}

#[test]
fn measured_cycles_give_expected_bins() {
    let t = builtin_energy_table().unwrap();
    for (app, bin) in [(AppId::Ecl, DutyBin::Low), (AppId::CoughDet, DutyBin::High)] {
        let mc = find_record(&t, app, Platform::STM32L4R5ZI).unwrap().mcycles.unwrap();
        let d = duty_cycle(&simulate_cycle(&schedule(app), (mc * 1e6) as u64, REFERENCE_CLOCK_HZ).unwrap());
        assert_eq!(d.bin, bin, "{app}");
    }
}

#[test]
fn shares_sum_to_one() {
    let t = builtin_energy_table().unwrap();
    for app in AppId::ALL {
        for s in energy_breakdown(&t, app).unwrap() {
            assert!((s.idle + s.acquisition + s.processing - 1.0).abs() < 2e-3, "{app} {}", s.platform);
        }
    }
}

#[test]
fn corrupted_sum_is_rejected() {
    let bad = ENERGY_TABLE_CSV.replace("GAP9,HCL,5.1,9.833,0.154,0.411,10.398", "GAP9,HCL,5.1,9.833,0.154,0.411,11.398");
    assert_ne!(bad, ENERGY_TABLE_CSV);
    assert!(matches!(load_energy_table_str(&bad), Err(Error::Data(_))));
}

#[test]
fn identity_projection_keeps_totals() {
    let t = builtin_energy_table().unwrap();
    for r in &t {
        match project_energy(r, EnergyScale::default()) {
            Ok(p) => assert!((p.energy_total - r.component_sum()).abs() < 1e-9),
            // measured processing already exceeds the window
            Err(_) => assert!(r.mcycles.unwrap() * 1e6 / REFERENCE_CLOCK_HZ > r.app.window_seconds().unwrap()),
        }
    }
}

#[test]
fn faster_clock_never_costs_idle_energy() {
    let t = builtin_energy_table().unwrap();
    let r = find_record(&t, AppId::Cwm, Platform::STM32L4R5ZI).unwrap();
    let fast = project_energy(r, EnergyScale { duty_scale: 1.0, clock_scale: 2.0 }).unwrap();
    assert!(fast.energy_idle.unwrap() >= r.energy_idle.unwrap());
    assert_eq!(fast.energy_proc, r.energy_proc);
}

#[test]
fn ranking_is_sorted() {
    let t = builtin_energy_table().unwrap();
    for app in AppId::ALL {
        let c = compare_platforms(&t, app).unwrap();
        assert!(c.ranking.windows(2).all(|w| w[0].1 <= w[1].1), "{app}");
    }
}
