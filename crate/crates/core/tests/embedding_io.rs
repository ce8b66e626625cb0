use std::fmt::Write as _;

use embedding_simplex::{parse_embeddings, EmbeddingSpace, Format};
use proptest::prelude::*;

fn arb_space() -> impl Strategy<Value = EmbeddingSpace> {
    (1usize..6, 1usize..20).prop_flat_map(|(d, n)| {
        proptest::collection::vec(
            proptest::collection::vec(
                prop_oneof![
                    any::<f64>().prop_filter("finite", |x| x.is_finite()),
                    -1e3f64..1e3,
                    Just(0.0),
                    Just(-0.0),
                ],
                d,
            ),
            n,
        )
        .prop_map(|rows| {
            let words = (0..rows.len()).map(|i| format!("tok{i}_{}", i * 7 % 5)).collect();
            EmbeddingSpace::new(words, rows).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn glove_round_trip_is_bit_exact(space in arb_space()) {
        let mut buf = Vec::new();
        space.write_glove(&mut buf).unwrap();
        let back = parse_embeddings(&buf[..], Some(Format::GloveText), usize::MAX).unwrap();
        prop_assert_eq!(back.words(), space.words());
        let a: Vec<u64> = space.as_flat().iter().map(|x| x.to_bits()).collect();
        let b: Vec<u64> = back.as_flat().iter().map(|x| x.to_bits()).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn truncation_keeps_a_prefix(
        space in arb_space(),
        k in 1usize..20,
        m in 0usize..10,
        dup in proptest::option::of(0usize..20),
    ) {
        let mut text = String::new();
        for (i, (w, row)) in space.words().iter().zip(space.rows()).enumerate() {
            let coords: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(text, "{w} {}", coords.join(" ")).unwrap();
            // Occasionally repeat an earlier token with a different vector.
            if dup == Some(i) {
                let zeros = vec!["9"; row.len()].join(" ");
                writeln!(text, "{} {zeros}", space.word(0)).unwrap();
            }
        }
        let short = parse_embeddings(text.as_bytes(), None, k).unwrap();
        let long = parse_embeddings(text.as_bytes(), None, k + m).unwrap();
        let keep = short.len();
        prop_assert_eq!(keep, k.min(space.len()));
        prop_assert_eq!(&long.words()[..keep], short.words());
        prop_assert_eq!(&long.as_flat()[..keep * space.dim()], short.as_flat());
        // Never reordered, first occurrence kept.
        prop_assert_eq!(short.words(), &space.words()[..keep]);
        prop_assert_eq!(short.as_flat(), &space.as_flat()[..keep * space.dim()]);
    }
}

#[test]
fn fasttext_header_keeps_first_fifty_thousand() {
    let d = 300;
    let total = 50_100;
    let mut text = String::with_capacity(total * (d * 4 + 12));
    text.push_str("999994 300\n");
    let coords: Vec<&str> = (0..d).map(|j| ["0.5", "-1", "0.25", "2"][j % 4]).collect();
    let coords = coords.join(" ");
    for i in 0..total {
        writeln!(text, "word{i} {coords}").unwrap();
    }
    let s = parse_embeddings(text.as_bytes(), None, 50_000).unwrap();
    assert_eq!(s.len(), 50_000);
    assert_eq!(s.dim(), 300);
    assert_eq!(s.word(0), "word0");
    assert_eq!(s.word(49_999), "word49999");
    assert!(s.lookup("word50000").is_none());
    assert_eq!(s.row(123)[..4], [0.5, -1.0, 0.25, 2.0]);
}

#[test]
fn explicit_format_overrides_detection() {
    // Forced GloVe reading treats "2 1" as a token "2" with one coordinate.
    let s = parse_embeddings("2 1\nx 3\n".as_bytes(), Some(Format::GloveText), 10).unwrap();
    assert_eq!(s.words(), &["2".to_string(), "x".to_string()]);
    assert_eq!(s.dim(), 1);
}
