//! Embedding through the public API against generated substrates: whatever
//! an algorithm does, accepting and then releasing a request must leave the
//! ledger where it started, and rejecting must not touch it.

use bavne_core::baselines::embed;
use bavne_core::embedding::{check_constraints, EmbedOptions};
use bavne_core::{generate_substrate, generate_vnr, Algorithm, GeneratorConfig, VnrConfig};
use proptest::prelude::*;

fn small() -> GeneratorConfig {
    GeneratorConfig { domains: 3, nodes_per_domain: 8, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn accept_then_release_restores_the_ledger(
        seed in 0u64..1000,
        alg in prop::sample::select(Algorithm::ALL.to_vec()),
        nodes in 1usize..6,
        requests in 1u64..6,
    ) {
        let mut net = generate_substrate(&small(), seed).unwrap();
        let pristine = net.clone();
        let vcfg = VnrConfig { nodes, ..Default::default() };
        let mut accepted = Vec::new();
        for id in 0..requests {
            let vnr = generate_vnr(&vcfg, 3, seed, id, 0.0).unwrap();
            let before = net.clone();
            let r = embed(&mut net, &vnr, alg, &EmbedOptions::default());
            if r.accepted {
                prop_assert!(check_constraints(&before, &vnr, &r.node_assignment, &r.link_paths).is_ok());
                prop_assert!(net.is_allocated(vnr.id));
                accepted.push(vnr.id);
            } else {
                prop_assert_eq!(&net, &before);
            }
        }
        for id in accepted.into_iter().rev() {
            net.release_id(id).unwrap();
        }
        prop_assert_eq!(net.ledger_digest(), pristine.ledger_digest());
        prop_assert_eq!(net, pristine);
    }
}

#[test]
fn releasing_twice_is_an_error() {
    let mut net = generate_substrate(&small(), 4).unwrap();
    let vnr = generate_vnr(&VnrConfig::default(), 3, 4, 0, 0.0).unwrap();
    let r = embed(&mut net, &vnr, Algorithm::BaVne, &EmbedOptions::default());
    assert!(r.accepted, "{:?}", r.cause);
    net.release(&r).unwrap();
    assert!(net.release(&r).is_err());
    assert!(net.is_pristine());
}
