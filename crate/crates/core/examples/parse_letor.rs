//! Parse LETOR text, split queries and normalize features.
//!
//!     cargo run --example parse_letor [path/to/file.txt]

use ebrank::letor::{self, parse_dataset};

const SAMPLE: &str = "\
2 qid:10 1:3.1 2:0.4 3:0.9 # doc-a
0 qid:10 1:0.2 2:0.1 3:0.3 # doc-b
1 qid:10 1:1.7 2:0.8 3:0.2
1 qid:11 1:2.2 2:0.5 3:0.7
0 qid:11 1:0.0 2:0.9 3:0.1
0 qid:12 1:0.4 2:0.3 3:0.3
2 qid:12 1:4.0 2:0.2 3:0.6
1 qid:13 1:1.1 2:0.6 3:0.6
0 qid:14 1:0.9 2:0.7 3:0.5
";

fn main() -> ebrank::Result<()> {
    let dataset = match std::env::args().nth(1) {
        Some(path) => letor::load_dataset(path, 0)?,
        None => parse_dataset(SAMPLE, 0)?,
    };
    println!(
        "{} queries, {} items, {} features, labels 0..={}",
        dataset.queries.len(),
        dataset.item_count(),
        dataset.feature_count,
        dataset.y_max
    );

    let (train, valid, test) = letor::partition(&dataset, (0.6, 0.2, 0.2), 7)?;
    let (train, others, norm) = letor::normalize_features(&train, &[valid, test])?;
    for (name, part) in [("train", &train), ("valid", &others[0]), ("test", &others[1])] {
        let ids: Vec<String> = part.queries.iter().map(|q| q.query_id.to_string()).collect();
        println!("{name:>5}: {}", ids.join(" "));
    }
    println!("column minima {:?}, maxima {:?}", norm.min, norm.max);
    print!("{}", train.to_letor_string());
    Ok(())
}
