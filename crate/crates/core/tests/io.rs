use groupdyn::network::{
    generate_holdout_mask, network_to_text, parse_edge_list, DynamicNetwork, EdgeListFormat, PairMask,
};
use groupdyn::Error;
use proptest::prelude::*;

fn network(n: usize, steps: usize, directed: bool, links: &[(usize, usize, usize)]) -> DynamicNetwork {
    let mut net = DynamicNetwork::empty(n, steps, directed).unwrap();
    for &(t, i, j) in links {
        let (i, j) = (i % n, j % n);
        if i != j {
            net.set_link(t % steps, i, j, true).unwrap();
        }
    }
    net
}

proptest! {
    #[test]
    fn edge_list_round_trips(
        n in 2usize..8,
        steps in 1usize..5,
        directed in any::<bool>(),
        links in prop::collection::vec((0usize..5, 0usize..8, 0usize..8), 0..30),
    ) {
        let net = network(n, steps, directed, &links);
        let loaded = parse_edge_list(&network_to_text(&net), EdgeListFormat::default()).unwrap();
        prop_assert!(loaded.ids.is_identity());
        prop_assert_eq!(loaded.network, net);
    }

    #[test]
    fn mask_text_round_trips(n in 3usize..12, directed in any::<bool>(), fraction in 0.2f64..0.8, seed in any::<u64>()) {
        let net = DynamicNetwork::empty(n, 2, directed).unwrap();
        let mask = generate_holdout_mask(&net, fraction, seed).unwrap();
        prop_assert_eq!(PairMask::parse(&mask.to_text(), n, directed).unwrap(), mask);
    }
}

#[test]
fn headerless_lists_remap_labels() {
    let loaded = parse_edge_list("# comment\n1 10 30\n3 30 20\n", EdgeListFormat { directed: true }).unwrap();
    assert_eq!(loaded.ids.labels(), &[10, 20, 30]);
    let net = loaded.network;
    assert_eq!((net.num_nodes(), net.num_steps()), (3, 3));
    assert!(net.has_link(0, 0, 2) && net.has_link(2, 2, 1));
    assert!(!net.has_link(2, 1, 2));
}

#[test]
fn malformed_lines_report_their_number() {
    match parse_edge_list("4 2 undirected\n1 0 1\n1 2 2\n", EdgeListFormat::default()) {
        Err(Error::SelfLoop { line: 3, node: 2 }) => {}
        other => panic!("{other:?}"),
    }
    match parse_edge_list("4 2 undirected\n3 0 1\n", EdgeListFormat::default()) {
        Err(Error::Parse { line: 2, .. }) => {}
        other => panic!("{other:?}"),
    }
}
