//! Builds every task with its vocabulary split and prints a few items.
//!
//! cargo run --example generate_tasks -- [seed] [out-dir]

use std::path::PathBuf;

use rbp::patterns::{build_task, Split, TaskId, TaskSpec};

fn main() -> rbp::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(0);
    let out: Option<PathBuf> = args.next().map(PathBuf::from);

    for task in TaskId::ALL {
        let data = build_task(&TaskSpec::new(task, seed))?;
        let show = |split| {
            data.items_in(split)
                .take(4)
                .map(|i| format!("{}→{}", data.vocabulary.render(&i.tokens), i.target))
                .collect::<Vec<_>>()
                .join(" ")
        };
        println!(
            "{task:<9} train {:>3} val {:>3} test {:>3}  letters train {:?} test {:?}",
            data.count(Split::Train),
            data.count(Split::Val),
            data.count(Split::Test),
            data.vocabulary.render(&data.tokens_in(Split::Train)),
            data.vocabulary.render(&data.tokens_in(Split::Test)),
        );
        println!("          train: {}", show(Split::Train));
        println!("          test:  {}", show(Split::Test));
        if let Some(dir) = &out {
            data.write_json(&dir.join(format!("{task}.json")))?;
        }
    }
    Ok(())
}
