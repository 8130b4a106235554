use ebrank::letor::{parse_dataset, parse_letor_line, Dataset};
use proptest::prelude::*;

fn corpus() -> impl Strategy<Value = String> {
    (1usize..6).prop_flat_map(|features| {
        prop::collection::vec(
            (0u32..5, 1u32..6, prop::collection::vec(-1e6f64..1e6, features), prop::option::of("[a-z0-9=-]{1,12}")),
            1..30,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .map(|(label, qid, x, comment)| {
                    let feats: Vec<String> = x.iter().enumerate().map(|(j, v)| format!("{}:{v}", j + 1)).collect();
                    let tail = comment.map(|c| format!(" # {c}")).unwrap_or_default();
                    format!("{label} qid:{qid} {}{tail}\n", feats.join(" "))
                })
                .collect()
        })
    })
}

proptest! {
    #[test]
    fn text_round_trip(text in corpus()) {
        let ds: Dataset = parse_dataset(&text, 0).unwrap();
        let again = parse_dataset(&ds.to_letor_string(), 0).unwrap();
        prop_assert_eq!(&again, &ds);
        prop_assert_eq!(ds.item_count(), text.lines().count());
    }

    #[test]
    fn garbage_lines_never_panic(line in "\\PC{0,60}") {
        let _ = parse_letor_line(&line, 1);
    }
}
