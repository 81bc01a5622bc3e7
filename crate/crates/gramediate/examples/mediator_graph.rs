//! From a selected loglinear model to mediator candidates: interaction graph,
//! graphicality, weak decompositions, and the separators that isolate the
//! treatment.

use gramediate::*;

fn main() -> Result<()> {
    let table = embedded_dataset();
    let schema = table.schema().clone();

    // pick the model by two-direction consensus search
    let res = consensus(&table, &SearchOptions::default())?;
    let model = res
        .agreed_class
        .expect("search directions agree on this data");
    println!("selected model: {}", model.format(&schema));
    println!("graphical: {}", is_graphical(&model, &schema.names())?);

    let graph = InteractionGraph::from_generating_class(&model, &schema.names())?;
    println!("\ninteraction graph (DOT):\n{}", graph.to_dot());

    println!("maximal cliques:");
    for clique in graph.maximal_cliques() {
        println!("  {{{}}}", graph.names_of(clique).join(", "));
    }

    println!("\nweak decompositions (A | B | C), B a complete separator:");
    for d in graph.weak_decompositions() {
        println!(
            "  {{{}}} | {{{}}} | {{{}}}",
            graph.names_of(d.a).join(", "),
            graph.names_of(d.b).join(", "),
            graph.names_of(d.c).join(", ")
        );
    }

    for treatment in ["IC", "TIME"] {
        let candidates = graph.mediator_candidates(treatment)?;
        let rendered: Vec<String> = candidates
            .iter()
            .map(|b| format!("{{{}}}", graph.names_of(*b).join(", ")))
            .collect();
        println!(
            "\nmediator candidates for treatment {treatment}: {}",
            rendered.join(", ")
        );
    }

    println!("\nEvery path from the treatment to fatigue or time passes through");
    println!("weakness, so weakness is the mediator candidate; fatigue sits on");
    println!("the far side of the separator and cannot be one.");
    Ok(())
}
