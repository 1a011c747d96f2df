//! Barrier sweeps, limit forms and two-time functionals.

use std::path::PathBuf;

use stifflab::evolve::{resolvent, step_heat, HeatOptions, Scheme};
use stifflab::io::LoadedConfig;
use stifflab::lab::{
    check_resolvent_identity, limit_distance, run_fdd_check, run_phase_sweep, BarrierFamily, BarrierProblem,
    Scenario, SweepSpec,
};
use stifflab::mc::{estimate, run_snob, Functional, SnobConfig};
use stifflab::probe::Probe;
use stifflab::{Interface, Point, Side};

fn presets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("presets")
}

fn lejay(alpha_exponent: f64) -> BarrierFamily {
    BarrierFamily::Lejay {
        kappa: 1.0,
        alpha_exponent,
    }
}

#[test]
fn identity_error_is_roundoff_at_two_grid_sizes() {
    let mut errs = Vec::new();
    for h in [0.02, 0.005] {
        let form = Scenario::brownian(6.0, h).unwrap().form(Interface::Separate).unwrap();
        let f = Probe::Gaussian {
            center: 0.0,
            width: 1.0,
        }
        .sample(form.grid());
        let r = check_resolvent_identity(&form, 2.0, 1.0, &f).unwrap();
        assert!(r.max_abs_error < 1e-9 && r.potential_symmetry < 1e-10, "{r:?}");
        errs.push(r.max_abs_error.max(f64::EPSILON));
    }
    let ratio = errs[0].max(errs[1]) / errs[0].min(errs[1]);
    assert!(ratio <= 10.0, "{errs:?}");
}

#[test]
fn shipped_sweeps_satisfy_the_hypothesis_monitor() {
    let mut seen = 0;
    for entry in std::fs::read_dir(presets()).unwrap() {
        let path = entry.unwrap().path();
        let loaded = LoadedConfig::load(&path).unwrap();
        let Some(sweep) = &loaded.config.sweep else { continue };
        let (scenario, _) = loaded.config.scenario.build(&loaded.base_dir()).unwrap();
        let report = run_phase_sweep(&sweep.build(scenario).unwrap()).unwrap();
        assert!(report.hypothesis_decreasing, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn impermeable_barrier_stops_mass_from_crossing() {
    let scenario = Scenario::brownian(6.0, 0.02).unwrap();
    let limit = scenario.grid(true).unwrap();
    let f = Probe::Indicator { a: 0.5, b: 1.5 };
    let spec = SweepSpec::new(scenario.clone(), lejay(-2.0), 0.2, (0..=6).collect());
    let leaked: Vec<f64> = spec
        .levels
        .iter()
        .map(|&n| {
            let p = BarrierProblem::new(&scenario, lejay(-2.0).barrier(spec.epsilon(n)).unwrap(), 16).unwrap();
            let u = resolvent(&p.form, 1.0, &p.data(&f, &limit)).unwrap().solution;
            (0..p.form.len())
                .filter(|&i| p.form.grid().nodes()[i] < -spec.epsilon(n))
                .map(|i| p.form.mass()[i] * u[i])
                .sum()
        })
        .collect();
    assert!(leaked.windows(2).all(|w| w[1] < w[0]), "{leaked:?}");
}

#[test]
fn three_regimes_have_distinct_limits() {
    let scenario = Scenario::brownian(6.0, 0.02).unwrap();
    let limits = [
        Interface::Separate,
        Interface::Snapping { kappa: 1.0 },
        Interface::Continuous,
    ];
    for i in 0..3 {
        for j in i + 1..3 {
            let d = limit_distance(&scenario, limits[i], limits[j], 1.0, &Probe::OddExp).unwrap();
            assert!(d > 1e-2, "{:?} vs {:?}: {d}", limits[i], limits[j]);
        }
    }
    for (a, target) in [(-2.0, Interface::Separate), (-1.0, Interface::Snapping { kappa: 1.0 }), (0.0, Interface::Continuous)] {
        assert_eq!(lejay(a).target().unwrap(), target);
    }
}

#[test]
fn two_time_functionals_converge_to_snapping() {
    let spec = SweepSpec::new(Scenario::brownian(6.0, 0.02).unwrap(), lejay(-1.0), 0.2, (0..=6).collect());
    let rows = run_fdd_check(
        &spec,
        (0.25, 0.75),
        &Probe::Indicator { a: 0.5, b: 1.5 },
        &Probe::Side { side: Side::Minus },
        &Probe::ExpAbs,
        0.005,
    )
    .unwrap();
    let d: Vec<f64> = rows.iter().map(|r| r.difference).collect();
    let k = d.len();
    assert!(d[k - 3] > d[k - 2] && d[k - 2] > d[k - 1], "{d:?}");
    assert!(d[k - 1] < 1e-2, "{d:?}");
}

#[test]
fn two_time_functional_matches_paths() {
    // E_x[1_[0.5,1.5](Y_0.25) · 1_{G-}(Y_0.75)] from x = 0.5, κ = 1
    let form = Scenario::brownian(8.0, 0.005)
        .unwrap()
        .form(Interface::Snapping { kappa: 1.0 })
        .unwrap();
    let f1 = Probe::Indicator { a: 0.5, b: 1.5 };
    let f2 = Probe::Side { side: Side::Minus };
    let inner = step_heat(&form, &f2.sample(form.grid()), &HeatOptions::new(1e-3, 0.5, Scheme::CrankNicolson)).unwrap();
    let product: Vec<f64> = f1.sample(form.grid()).iter().zip(inner.final_state()).map(|(a, b)| a * b).collect();
    let outer = step_heat(&form, &product, &HeatOptions::new(1e-3, 0.25, Scheme::CrankNicolson)).unwrap();
    let start = Point::on_line(0.5);
    let pde = outer.final_state()[form.grid().locate(start)];

    let mut cfg = SnobConfig::new(start, 1.0, 1e-3, 0.75, 100_000, 12);
    cfg.snapshot_times = vec![0.25, 0.75];
    let ens = run_snob(&cfg).unwrap();
    let functional = Functional::Product {
        factors: vec![
            (0.25, Box::new(move |p| f1.eval(p))),
            (0.75, Box::new(move |p| f2.eval(p))),
        ],
    };
    let est = estimate(&ens, &functional).unwrap();
    assert!(est.z_score(pde).abs() < 3.0, "mc {} ± {} vs pde {pde}", est.value, est.std_error);
}
