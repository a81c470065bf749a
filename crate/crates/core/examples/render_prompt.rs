//! Builds a program from catalog entries and renders it in both dialects,
//! then fills the default prompt template.

use flowbench::catalog::default_catalog;
use flowbench::generator::{instantiate, program_id, template, Binding};
use flowbench::program::StructureCategory;
use flowbench::render::{render, Dialect, PromptBundle, PromptTemplate, DEFAULT_INSTRUCTION};

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
    let category = StructureCategory::SequentialBranch;
    let p = instantiate(&template(category), &binding, &default_catalog())?;
    assert_eq!(p.id, program_id(category, &binding));

    println!("# {} ({}, complexity {})\n", p.id, category, p.complexity);
    for d in Dialect::ALL {
        println!("## {}\n{}", d.slug(), render(&p, d));
    }
    let bundle = PromptBundle::new(
        &p,
        Dialect::PythonStyle,
        &PromptTemplate::default(),
        DEFAULT_INSTRUCTION,
    )?;
    println!("## prompt\n{}", bundle.prompt);
    Ok(())
}
