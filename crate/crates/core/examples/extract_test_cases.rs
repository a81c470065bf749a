//! Pulls test cases out of free-form model responses in the three shapes
//! the extractor understands, and judges them against the program.

use flowbench::catalog::default_catalog;
use flowbench::extract::extract;
use flowbench::generator::{instantiate, template, Binding};
use flowbench::oracle::{judge, DEFAULT_FUEL};
use flowbench::program::StructureCategory;

const RESPONSES: [&str; 3] = [
    "```python\ndef test_compute():\n    assert compute(6, 10) == 29\n    assert compute(4, 5) == 5\n    assert compute(1) == 1\n```",
    "Input 1: (x, y) = (6, 10)\nExpected output: 29\n\nInput 2: (x, y) = (5, 10)\n",
    "For instance compute(6, 5) returns 21, while compute(5, 10) -> 8.",
];

fn main() -> anyhow::Result<()> {
    let binding: Binding = [
        ("cond1", "xp.05.gt"),
        ("then1", "xc.xy.add10"),
        ("cond2", "yp.10.eq"),
        ("then2", "xc.xy.sub7"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    let p = instantiate(
        &template(StructureCategory::SequentialBranch),
        &binding,
        &default_catalog(),
    )?;

    for response in RESPONSES {
        println!("--- response ---\n{response}\n--- cases ---");
        for case in extract(response, &p) {
            let verdict = match case.test_case() {
                Some(tc) => judge(&p, &tc, DEFAULT_FUEL),
                None => {
                    println!(
                        "  #{} {:?} malformed: {}",
                        case.index,
                        case.strategy,
                        case.malformed.unwrap_or_default()
                    );
                    continue;
                }
            };
            let inputs: Vec<String> = case
                .inputs
                .iter()
                .map(|(v, n)| format!("{v}={n}"))
                .collect();
            let expected = case.expected.map_or("?".to_string(), |e| e.to_string());
            println!(
                "  #{} {:?} ({}) expects {expected}: {:?} {}",
                case.index,
                case.strategy,
                inputs.join(", "),
                verdict.kind,
                verdict.detail.unwrap_or_default()
            );
        }
    }
    Ok(())
}
