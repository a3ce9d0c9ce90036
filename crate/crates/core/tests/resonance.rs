use extphase::resonance::*;
use extphase::Error;
use proptest::prelude::*;

const SAMPLE: &str = "\
name,class,mass_mev,width_mev
rho770,meson,775.26,149.1
delta1232,baryon,1232,117
xi1530,baryon,1531.8,9.1
";

#[test]
fn file_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    std::fs::write(&path, SAMPLE).unwrap();
    let loaded = load_table(&path, true).unwrap();
    assert_eq!(loaded.records.len(), 3);
    let again = dir.path().join("u.csv");
    save_table(&again, &loaded.records).unwrap();
    assert_eq!(load_table(&again, true).unwrap().records, loaded.records);
    assert_eq!(std::fs::read_to_string(&again).unwrap(), SAMPLE);
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(load_table("/nonexistent/table.csv", true), Err(Error::Io(_))));
}

#[test]
fn class_filter_selects_rows() {
    let mut recs = synthetic_table(2.1, 1222.0, &standard_widths(), 0.0, NoiseTarget::Width, 0, ResonanceClass::Meson).unwrap();
    recs.extend(synthetic_table(2.1, 1487.0, &standard_widths(), 0.0, NoiseTarget::Width, 0, ResonanceClass::Baryon).unwrap());
    let m = fit_inverse_width(&recs, Some(ResonanceClass::Meson)).unwrap();
    let b = fit_inverse_width(&recs, Some(ResonanceClass::Baryon)).unwrap();
    assert!((m.c - 1222.0).abs() <= 1e-9 && (b.c - 1487.0).abs() <= 1e-9);
    assert!((m.a - 2.1).abs() <= 1e-9 && (b.a - 2.1).abs() <= 1e-9);
    assert_eq!(m.n_points, 11);
}

/// Over 100 seeds with 1% width noise, each fitted C should sit within three
/// of its own OLS standard errors (for t with 9 degrees of freedom about
/// 1.5% of seeds are expected outside), and the ensemble mean within three
/// standard errors of the mean.
#[test]
fn noisy_fit_recovers_c_within_standard_errors() {
    for c in [1222.0, 1487.0] {
        let mut inside = 0;
        let (mut sum, mut se) = (0.0, 0.0);
        for seed in 0..100 {
            let recs = synthetic_table(2.1, c, &standard_widths(), 0.01, NoiseTarget::Width, seed, ResonanceClass::Meson).unwrap();
            let f = fit_inverse_width(&recs, None).unwrap();
            if (f.c - c).abs() <= 3.0 * f.c_std_err {
                inside += 1;
            }
            sum += f.c;
            se += f.c_std_err;
        }
        assert!(inside >= 95, "{inside}/100 within 3σ");
        assert!((sum / 100.0 - c).abs() <= 3.0 * (se / 100.0) / 10.0);
    }
}

#[test]
fn lifetime_report_csv() {
    let t = read_table(SAMPLE.as_bytes(), true).unwrap();
    let rep = lifetime_bound_check(&t.records, HBAR_MEV_S);
    assert_eq!(rep.fraction_ok, Some(1.0));
    assert!((rep.entries[0].lifetime_s - HBAR_MEV_S / 149.1).abs() < 1e-36);
    let mut buf = Vec::new();
    write_lifetime_csv(&mut buf, &rep).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("name,ratio,bound_ok\nrho770,"));
}

#[test]
fn fit_summary_json_keys() {
    let recs = synthetic_table(2.1, 1222.0, &standard_widths(), 0.0, NoiseTarget::Width, 0, ResonanceClass::Meson).unwrap();
    let f = fit_inverse_width(&recs, None).unwrap();
    let v = serde_json::to_value(f).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 4);
    for k in ["a", "C", "rms", "n"] {
        assert!(v.get(k).is_some(), "{k}");
    }
}

fn widths_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1.0f64..1000.0, 3..12)
}

proptest! {
    #[test]
    fn width_rescaling_scales_c(widths in widths_strategy(), seed in 0u64..1000, lambda in 0.1f64..10.0) {
        let recs = synthetic_table(2.0, 800.0, &widths, 0.05, NoiseTarget::Ratio, seed, ResonanceClass::Baryon).unwrap();
        prop_assume!(widths.iter().any(|w| (w - widths[0]).abs() > 1.0));
        let scaled: Vec<ResonanceRecord> = recs
            .iter()
            .map(|r| ResonanceRecord::new(r.name.clone(), r.class, r.mass_mev * lambda, r.width_mev * lambda).unwrap())
            .collect();
        let f = fit_inverse_width(&recs, None).unwrap();
        let g = fit_inverse_width(&scaled, None).unwrap();
        prop_assert!((g.a - f.a).abs() <= 1e-9 * f.a.abs().max(1.0));
        prop_assert!((g.c - lambda * f.c).abs() <= 1e-9 * (lambda * f.c).abs().max(1.0));
    }

    #[test]
    fn point_on_fitted_line_changes_nothing(widths in widths_strategy(), seed in 0u64..1000, extra in 1.0f64..1000.0) {
        prop_assume!(widths.iter().any(|w| (w - widths[0]).abs() > 1.0));
        let mut recs = synthetic_table(2.1, 1000.0, &widths, 0.05, NoiseTarget::Ratio, seed, ResonanceClass::Meson).unwrap();
        let f = fit_inverse_width(&recs, None).unwrap();
        let mass = (f.a + f.c / extra) * extra;
        prop_assume!(mass > 0.0);
        recs.push(ResonanceRecord::new("on_line", ResonanceClass::Meson, mass, extra).unwrap());
        let g = fit_inverse_width(&recs, None).unwrap();
        prop_assert!((g.a - f.a).abs() <= 1e-9 * f.a.abs().max(1.0));
        prop_assert!((g.c - f.c).abs() <= 1e-9 * f.c.abs().max(1.0));
    }

    #[test]
    fn write_read_round_trip(masses in prop::collection::vec((1e-3f64..1e5, 1e-4f64..1e4), 1..20)) {
        let recs: Vec<ResonanceRecord> = masses
            .iter()
            .enumerate()
            .map(|(i, (m, w))| {
                let class = if i % 2 == 0 { ResonanceClass::Meson } else { ResonanceClass::Baryon };
                ResonanceRecord::new(format!("r{i}"), class, *m, *w).unwrap()
            })
            .collect();
        let mut buf = Vec::new();
        write_table(&mut buf, &recs).unwrap();
        prop_assert_eq!(read_table(buf.as_slice(), true).unwrap().records, recs);
    }
}
