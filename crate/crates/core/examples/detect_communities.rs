//! Leading-eigenvector community detection, step by step: first on a small
//! hand-made graph, then on a fleet graph at a fixed λ.

use fleetnet::community::detect_communities_traced;
use fleetnet::prelude::*;

fn show(name: &str, graph: &AdjacencyGraph) -> fleetnet::Result<CommunityPartition> {
    let (partition, trace) = detect_communities_traced(graph)?;
    println!("{name}: {} vertices, {} edges", graph.n_vertices(), graph.edge_count());
    for step in &trace {
        match (&step.halves, step.delta_q) {
            (Some([a, b]), Some(dq)) => println!("  split {:?} -> {a:?} | {b:?} (ΔQ = {dq:.4})", step.group),
            (None, Some(dq)) => println!("  keep  {:?} (ΔQ would be {dq:.4})", step.group),
            _ => println!("  keep  {:?} (leading eigenvalue {:.4})", step.group, step.eigenvalue),
        }
    }
    println!("  k = {}, Q = {:.4}\n", partition.k, partition.modularity_q);
    Ok(partition)
}

fn main() -> fleetnet::Result<()> {
    // Two triangles joined by a bridge.
    let barbell = AdjacencyGraph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
    show("barbell", &barbell)?;

    let scenario = generate_scenario(&ScenarioConfig::new(ScenarioKind::ClearGrouping, 2))?;
    let network = FleetNetwork::build(&scenario.fleet, &BasisSpec::linear())?;
    let lambda = 2.0;
    let partition = show(&format!("clear fleet at λ = {lambda}"), &network.graph(lambda))?;
    println!(
        "ARI against the generating components: {:.3}",
        adjusted_rand_index(&partition.assignment, &scenario.true_labels)
    );
    Ok(())
}
