//! Library walkthrough on the bundled 16-bus fixture: enumerate the radial
//! configurations, screen them, and run one paired experiment.
//!
//! ```text
//! cargo run --release --example pipeline
//! ```

use std::path::Path;

use gridopt::model::load_network;
use gridopt::objective::ObjectiveParams;
use gridopt::optimizer::{build_initial_population, run_ga_with_initial, GaSettings};
use gridopt::profiles::load_profiles;
use gridopt::screening::{screen_all, SamplingSettings};
use gridopt::solution::SearchDomain;
use gridopt::topology::{enumerate_admissible, order_by_hamming, reduce_graph};

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let model = load_network(&fixtures.join("network_16bus.json")).unwrap();
    let profiles = load_profiles(&fixtures.join("profiles_16bus.csv"), "2014-01-01T13:00").unwrap();
    profiles.validate_against(&model).unwrap();

    let graph = reduce_graph(&model);
    let list = order_by_hamming(&enumerate_admissible(&graph).unwrap()).unwrap();
    println!(
        "{} buses -> {} reduced nodes, {} breakers, {} admissible configurations",
        model.buses.len(),
        graph.nodes.len(),
        graph.edges.len(),
        list.len()
    );

    let params = ObjectiveParams::default();
    let sampling = SamplingSettings::default();
    let (partition, reports) =
        screen_all(&model, &graph, &list, &profiles, &params, &sampling, 1).unwrap();
    println!(
        "screened: {} CCC, {} NCCC, {} ambiguous",
        partition.ccc.len(),
        partition.nccc.len(),
        partition.ambiguous.len()
    );
    if let Some(worst) = reports.iter().max_by(|a, b| a.eta.total_cmp(&b.eta)) {
        println!(
            "largest objective spread at configuration {}: eta = {:.4}",
            worst.n_conf, worst.eta
        );
    }

    let domain = SearchDomain::from_model(&model, list.len());
    let full: Vec<usize> = (1..=list.len()).collect();
    let settings = GaSettings { seed: 1, ..GaSettings::default() };
    let base = build_initial_population(settings.population, &domain, &full, None, 1).unwrap();
    let paired =
        build_initial_population(settings.population, &domain, &partition.ccc, Some(&base), 1)
            .unwrap();
    let all = run_ga_with_initial(
        &model, &graph, &list, &profiles, &params, &settings, &full, base,
    )
    .unwrap();
    let ccc_only = run_ga_with_initial(
        &model, &graph, &list, &profiles, &params, &settings, &partition.ccc, paired,
    )
    .unwrap();
    println!(
        "all configurations: best F = {:.6}, P_loss = {:.1} W (configuration {})",
        all.best_f, all.best_ploss_w, all.best.n_conf
    );
    println!(
        "compliant only:     best F = {:.6}, P_loss = {:.1} W (configuration {})",
        ccc_only.best_f, ccc_only.best_ploss_w, ccc_only.best.n_conf
    );
}
