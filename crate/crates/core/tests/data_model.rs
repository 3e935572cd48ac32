mod common;

use nfactor_core::data::{read_csv, DataError, Dataset, SurvivalFrame};
use proptest::prelude::*;

#[test]
fn stan_fixture_shape() {
    let d = common::stan_dataset();
    assert_eq!(d.n_rows(), 30);
    assert_eq!(d.column("t1").unwrap()[0], 50.0);
    assert!(d.column("surgery").unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn stan_reconstruction_summary() {
    let f = common::stan_frame();
    assert_eq!(f.len(), 30);
    assert_eq!(f.n_subjects(), 20);
    assert_eq!(f.n_events(), 20);
    assert_eq!(f.time_at_risk(), 3071.0);
    let last_exit = f.records().iter().map(|r| r.stop).fold(0.0, f64::max);
    assert_eq!(last_exit, 1386.0);
    // subject 3: (0, 1] censored, then (1, 16] failure
    let s3: Vec<_> = f.records().iter().filter(|r| r.subject_id == 3).collect();
    assert_eq!((s3[0].start, s3[0].stop, s3[0].event), (0.0, 1.0, false));
    assert_eq!((s3[1].start, s3[1].stop, s3[1].event), (1.0, 16.0, true));
    // posttran switches on for the second interval
    assert_eq!(s3[0].covariates[1], 0.0);
    assert_eq!(s3[1].covariates[1], 1.0);
}

#[test]
fn reconstructed_intervals_are_consecutive() {
    let f = common::stan_frame();
    for id in 1..=20 {
        let mut recs: Vec<_> = f.records().iter().filter(|r| r.subject_id == id).collect();
        recs.sort_by(|a, b| a.stop.total_cmp(&b.stop));
        assert_eq!(recs[0].start, 0.0);
        for pair in recs.windows(2) {
            assert_eq!(pair[1].start, pair[0].stop);
        }
        assert!(recs.iter().all(|r| r.start < r.stop));
    }
}

#[test]
fn missing_t1_column() {
    let text = "id,year,age,died,surgery,posttran\n1,67,30,1,0,0\n";
    let err = read_csv(
        text.as_bytes(),
        &["id", "year", "age", "died", "surgery", "posttran", "t1"],
    )
    .unwrap_err();
    assert!(matches!(err, DataError::MissingColumn(c) if c == "t1"));
}

#[test]
fn replicate_stan_by_four() {
    let d = common::stan_dataset();
    let r = d.replicate(4).unwrap();
    assert_eq!(r.n_rows(), 120);
    let f = common::stan_frame().replicate(4).unwrap();
    assert_eq!(f.n_subjects(), 80);
    assert_eq!(f.n_events(), 80);
    assert_eq!(f.time_at_risk(), 12284.0);
}

#[test]
fn explicit_intervals_match_reconstruction() {
    let f = common::stan_frame();
    let records = f.records();
    let d = Dataset::from_columns([
        (
            "id",
            records
                .iter()
                .map(|r| r.subject_id as f64)
                .collect::<Vec<_>>(),
        ),
        ("start", records.iter().map(|r| r.start).collect()),
        ("stop", records.iter().map(|r| r.stop).collect()),
        (
            "died",
            records.iter().map(|r| r.event as u8 as f64).collect(),
        ),
        ("age", records.iter().map(|r| r.covariates[0]).collect()),
    ])
    .unwrap();
    let g = SurvivalFrame::from_intervals(&d, "start", "stop", "died", "id", &["age"]).unwrap();
    assert_eq!(g.records(), f.select_covariates(&[0]).records());
}

fn sorted_rows(d: &Dataset) -> Vec<Vec<u64>> {
    let names: Vec<&str> = d.column_names().collect();
    let mut rows: Vec<Vec<u64>> = (0..d.n_rows())
        .map(|i| {
            names
                .iter()
                .map(|n| d.column(n).unwrap()[i].to_bits())
                .collect()
        })
        .collect();
    rows.sort();
    rows
}

proptest! {
    #[test]
    fn replicate_composes(
        values in prop::collection::vec(-1e6f64..1e6, 1..12),
        a in 1u64..5,
        b in 1u64..5,
    ) {
        let other: Vec<f64> = values.iter().map(|v| v * 0.5 - 1.0).collect();
        let d = Dataset::from_columns([("x", values), ("y", other)]).unwrap();
        let once = d.replicate(a * b).unwrap();
        let twice = d.replicate(a).unwrap().replicate(b).unwrap();
        prop_assert_eq!(once.n_rows(), d.n_rows() * (a * b) as usize);
        prop_assert_eq!(sorted_rows(&once), sorted_rows(&twice));
    }
}
