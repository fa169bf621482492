use std::collections::BTreeMap;

use proptest::prelude::*;

use spe::dataset::{
    join_samples, parse_labels, parse_landmark_records, write_labels, write_landmark_records,
    LandmarkPoint, SampleRecord,
};

fn point() -> impl Strategy<Value = LandmarkPoint> {
    (
        0u32..33,
        -1.0f64..2.0,
        -1.0f64..2.0,
        -1.0f64..1.0,
        0.0f64..=1.0,
    )
        .prop_map(|(index, x, y, z, visibility)| LandmarkPoint {
            index,
            x,
            y,
            z,
            visibility,
        })
}

fn record(i: usize) -> impl Strategy<Value = SampleRecord> {
    (
        prop::option::of("[a-z ]{0,12}"),
        prop::option::of(prop::collection::vec(point(), 0..6)),
    )
        .prop_map(move |(source, landmarks)| {
            let landmarks = landmarks.map(|mut pts| {
                pts.sort_by_key(|p| p.index);
                pts.dedup_by_key(|p| p.index);
                pts
            });
            SampleRecord {
                image_id: format!("img{i:03}"),
                source,
                landmarks,
            }
        })
}

fn records() -> impl Strategy<Value = Vec<SampleRecord>> {
    (1usize..20).prop_flat_map(|n| (0..n).map(record).collect::<Vec<_>>())
}

fn encode(records: &[SampleRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_landmark_records(&mut buf, records).unwrap();
    buf
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn records_round_trip(recs in records()) {
        let bytes = encode(&recs);
        let parsed = parse_landmark_records(bytes.as_slice()).unwrap();
        prop_assert_eq!(&parsed, &recs);
        prop_assert_eq!(encode(&parsed), bytes);
    }

    #[test]
    fn labels_round_trip(labels in prop::collection::btree_map("[a-z0-9]{1,8}", (0u8..=10).prop_map(|k| k as f64 / 10.0), 1..30)) {
        let mut buf = Vec::new();
        write_labels(&mut buf, &labels).unwrap();
        let parsed = parse_labels(buf.as_slice()).unwrap();
        prop_assert_eq!(parsed.labels, labels);
        prop_assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn join_is_order_independent(recs in records(), keep in prop::collection::vec(any::<bool>(), 20)) {
        let labels: BTreeMap<String, f64> = recs
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(r, _)| (r.image_id.clone(), 0.5))
            .collect();
        prop_assume!(!labels.is_empty());
        let mut reversed = recs.clone();
        reversed.reverse();
        let a = join_samples(&recs, &labels).unwrap();
        let b = join_samples(&reversed, &labels).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.samples.windows(2).all(|w| w[0].image_id < w[1].image_id));
        prop_assert_eq!(a.samples.len(), labels.len());
    }
}

#[test]
fn canonical_form_drops_unknown_fields_and_whitespace() {
    let text = "{ \"landmarks\": [ {\"visibility\": 1, \"x\": 0.5, \"y\": 0.25, \"z\": 0, \"index\": 11, \"extra\": true} ], \"image_id\": \"a\" }\n";
    let parsed = parse_landmark_records(text.as_bytes()).unwrap();
    let canonical = String::from_utf8(encode(&parsed)).unwrap();
    assert_eq!(
        canonical,
        "{\"image_id\":\"a\",\"landmarks\":[{\"index\":11,\"x\":0.5,\"y\":0.25,\"z\":0.0,\"visibility\":1.0}]}\n"
    );
    let again = parse_landmark_records(canonical.as_bytes()).unwrap();
    assert_eq!(encode(&again), canonical.as_bytes());
}
