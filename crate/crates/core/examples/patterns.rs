//! Abstract and concrete pattern rules over a letter vocabulary.
//!
//! cargo run --example patterns

use rbp::patterns::{
    classify_abstract, enumerate_triples, matches_concrete, AbstractPattern, ConcretePattern, Vocabulary,
};

fn main() -> rbp::Result<()> {
    let vocab = Vocabulary::letters(6)?;
    for word in ["aba", "abb", "ccc", "cab", "bba"] {
        let t: Vec<usize> = word.chars().map(|c| vocab.index_of(&c.to_string()).unwrap()).collect();
        println!("{word} is {}", classify_abstract([t[0], t[1], t[2]]));
    }

    let subset: Vec<usize> = (0..vocab.len()).collect();
    for p in AbstractPattern::ALL {
        let n = enumerate_triples(&subset, p)?.len();
        println!("{p}: {n} triples over {} letters", vocab.len());
    }

    let rule = ConcretePattern::parse("a*b", &vocab)?;
    for word in ["acb", "aab", "bcb"] {
        let t: Vec<usize> = word.chars().map(|c| vocab.index_of(&c.to_string()).unwrap()).collect();
        println!("{word} matches a*b: {}", matches_concrete(&t, &rule));
    }
    Ok(())
}
