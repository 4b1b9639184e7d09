use biqutrit::experiment::{
    basis_dip, effective_density, prepared_state, simulate_counts, volts_for_phase, Acquisition,
    ApparatusConfig,
};
use biqutrit::optics::{
    coincidence_moment, detection_vector, filter_accept_mode, jones_waveplate,
    solve_filter_settings, transmission_probability, FilterSettings, PolarizationVector,
    WaveplateSetting,
};
use biqutrit::qutrit::{
    eigendecompose, fidelity, majorana_compose, majorana_decompose, DensityMatrix3, PureQutrit,
};
use biqutrit::report::{read_counts_csv, write_counts_csv, RunManifest};
use biqutrit::tomography::{
    mle_reconstruct_with, moments_from_state, protocol_settings, rho_from_moments, CountRecord,
    MleOptions,
};
use biqutrit::C64;
use nalgebra::{Matrix2, Matrix3};
use proptest::prelude::*;

fn state() -> impl Strategy<Value = PureQutrit> {
    prop::array::uniform6(-1.0f64..1.0)
        .prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-6)
        .prop_map(|a| {
            PureQutrit::new(C64::new(a[0], a[1]), C64::new(a[2], a[3]), C64::new(a[4], a[5]))
                .unwrap()
        })
}

fn polarization() -> impl Strategy<Value = PolarizationVector> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-6)
        .prop_map(|a| PolarizationVector::new(C64::new(a[0], a[1]), C64::new(a[2], a[3])).unwrap())
}

fn density() -> impl Strategy<Value = DensityMatrix3> {
    prop::array::uniform18(-1.0f64..1.0).prop_map(|a| {
        let g = Matrix3::from_fn(|j, k| C64::new(a[6 * j + 2 * k], a[6 * j + 2 * k + 1]));
        DensityMatrix3::from_unnormalized(g * g.adjoint() + Matrix3::identity() * C64::from(1e-3))
            .and_then(DensityMatrix3::into_checked_physical)
            .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn majorana_round_trip(s in state()) {
        let back = majorana_compose(&majorana_decompose(&s));
        prop_assert!(fidelity(&back.projector(), &s) >= 1.0 - 1e-10);
    }

    #[test]
    fn majorana_points_are_on_sphere(s in state()) {
        for p in majorana_decompose(&s).points() {
            prop_assert!((0.0..=std::f64::consts::PI).contains(&p.theta()));
            prop_assert!((0.0..std::f64::consts::TAU).contains(&p.phi()));
        }
    }

    #[test]
    fn eigen_reconstruction(rho in density()) {
        let e = eigendecompose(rho.matrix()).unwrap();
        let err = (e.reconstruct() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9);
        prop_assert!(e.eigenvalues[0] >= e.eigenvalues[1] && e.eigenvalues[1] >= e.eigenvalues[2]);
        for i in 0..3 {
            for j in 0..3 {
                let ip = (e.vector(i).adjoint() * e.vector(j))[(0, 0)].norm();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn moment_round_trip(s in state()) {
        let m = moments_from_state(&s);
        prop_assert!((m.trace() - 1.0).abs() < 1e-12);
        let rho = rho_from_moments(&m).unwrap();
        let err = (rho.matrix() - s.projector().matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn arm_exchange_symmetry(s in state(), p1 in polarization(), p2 in polarization()) {
        let a = coincidence_moment(&s, &p1, &p2);
        let b = coincidence_moment(&s, &p2, &p1);
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((detection_vector(&p1, &p2) - detection_vector(&p2, &p1)).norm() < 1e-12);
    }

    #[test]
    fn coincidence_moment_bounded(s in state(), p1 in polarization(), p2 in polarization()) {
        let m = coincidence_moment(&s, &p1, &p2);
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&m));
    }

    #[test]
    fn jones_unitarity(ret in 0.0f64..7.0, angle in -7.0f64..7.0, chi in -2.0f64..2.0, theta in -2.0f64..2.0) {
        let u = jones_waveplate(&WaveplateSetting { retardance: ret, angle });
        prop_assert!((u.adjoint() * u - Matrix2::<C64>::identity()).norm() < 1e-12);
        let f = FilterSettings::new(chi, theta).jones();
        prop_assert!((f.adjoint() * f - Matrix2::<C64>::identity()).norm() < 1e-12);
    }

    #[test]
    fn solved_filter_passes_mode(p in polarization()) {
        let f = solve_filter_settings(&p);
        prop_assert!((transmission_probability(&p, &f) - 1.0).abs() < 1e-10);
        prop_assert!(filter_accept_mode(&f).overlap(&p) > 1.0 - 1e-10);
        prop_assert!(f.chi > -std::f64::consts::FRAC_PI_4 - 1e-12 && f.chi <= std::f64::consts::FRAC_PI_4 + 1e-12);
    }

    #[test]
    fn phase_linear_in_volts(phi12 in -3.0f64..3.0, phi13 in -3.0f64..3.0) {
        let cfg = ApparatusConfig::default().with_phases(phi12, phi13);
        prop_assert!((cfg.phi12() - phi12).abs() < 1e-12);
        prop_assert!((cfg.pzt_volts - phi12.to_degrees() / 51.7).abs() < 1e-12);
        prop_assert!((volts_for_phase(phi12, 51.7) * 51.7 - phi12.to_degrees()).abs() < 1e-9);
        let s = prepared_state(&cfg);
        let want = PureQutrit::from_polar([1.0 / 3f64.sqrt(); 3], [0.0, phi12, phi13]).unwrap();
        prop_assert!(fidelity(&s.projector(), &want) > 1.0 - 1e-12);
    }

    #[test]
    fn degrees_round_trip(x in -720.0f64..720.0) {
        prop_assert!((x.to_radians().to_degrees() - x).abs() < 1e-12);
    }

    #[test]
    fn effective_density_is_physical(overlap in 0.0f64..=1.0, phi12 in -3.0f64..3.0, phi13 in -3.0f64..3.0) {
        let rho = effective_density(&ApparatusConfig::default().with_phases(phi12, phi13).with_overlap(overlap));
        prop_assert!(rho.min_eigenvalue() >= -1e-12);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mle_output_is_physical(counts in prop::array::uniform9(0u32..200), accidental in 0.0f64..2.0) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let settings = protocol_settings();
        let records: Vec<_> = settings
            .iter()
            .zip(counts)
            .map(|(s, n)| CountRecord::new(s.label.clone(), n as f64, 1.0))
            .collect();
        let opts = MleOptions { accidental_rate: accidental, record_history: true, ..Default::default() };
        let r = mle_reconstruct_with(&records, &settings, &opts).unwrap();
        prop_assert!(r.rho.min_eigenvalue() >= -1e-9);
        prop_assert!((r.rho.trace().re - 1.0).abs() < 1e-9);
        for w in r.history.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn visibility_monotone(o1 in 0.05f64..=1.0, o2 in 0.05f64..=1.0, a1 in 0.0f64..50.0, a2 in 0.0f64..50.0, basis in 2u8..=4) {
        let dip = basis_dip(basis).unwrap();
        let grid = dip.default_grid();
        let vis = |o: f64, a: f64| {
            let cfg = ApparatusConfig::default().with_overlap(o).with_accidentals(a);
            dip.run(&grid, &cfg, 0, true).unwrap().visibility
        };
        let (lo, hi) = if o1 < o2 { (o1, o2) } else { (o2, o1) };
        prop_assert!(vis(lo, 0.0) <= vis(hi, 0.0) + 1e-12);
        let (few, many) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        prop_assert!(vis(0.9, many) <= vis(0.9, few) + 1e-12);
    }

    #[test]
    fn counts_csv_round_trip(seed in any::<u64>(), events in 10.0f64..5000.0) {
        let settings = protocol_settings();
        let rho = DensityMatrix3::maximally_mixed();
        let counts = simulate_counts(&rho, &settings, events, 0.0, Acquisition::poisson(seed)).unwrap();
        let text = write_counts_csv(&RunManifest::new("prop", Some(seed)), &counts);
        prop_assert_eq!(read_counts_csv(text.as_bytes()).unwrap(), counts);
    }
}

#[test]
fn mle_consistency_over_event_scales() {
    use biqutrit::qutrit::{protocol_state, ProtocolStateId};
    use biqutrit::tomography::fidelity_quantiles;
    let target = protocol_state(ProtocolStateId::Gamma2);
    let means: Vec<f64> = [100.0, 1000.0, 10000.0]
        .iter()
        .map(|&n| fidelity_quantiles(&target, n, 200, 5).unwrap().mean)
        .collect();
    assert!(means[0] <= means[1] && means[1] <= means[2], "{means:?}");
}
