//! Synthetic graphs with controlled structure, for benchmarks and tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{GraphBuilder, RdfGraph};

const VOCABULARY: [&str; 16] = [
    "data", "graph", "query", "index", "system", "model", "network", "learning", "search", "mining",
    "stream", "storage", "web", "text", "image", "cloud",
];

const TYPE: &str = "rdf:type";

/// Bibliography-shaped graph where every instance of a type carries every
/// predicate of that type exactly once, and literals come from a small
/// shared vocabulary. Coherence and relationship specialty are both 1.
pub fn regular_graph(papers: usize, seed: u64) -> RdfGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let people = papers.max(1);
    let venues = (papers / 20).max(1);
    let mut b = GraphBuilder::new();
    let word = |rng: &mut ChaCha8Rng| VOCABULARY[rng.gen_range(0..VOCABULARY.len())];
    for v in 0..venues {
        let s = format!("ex:venue{v}");
        b.add_str(&s, TYPE, "ex:Venue", false);
        b.add_str(&s, "ex:venueName", &format!("{} conference", word(&mut rng)), true);
    }
    for p in 0..people {
        let s = format!("ex:person{p}");
        b.add_str(&s, TYPE, "ex:Person", false);
        b.add_str(&s, "ex:name", &format!("{} {} lab", word(&mut rng), word(&mut rng)), true);
    }
    for i in 0..papers {
        let s = format!("ex:paper{i}");
        b.add_str(&s, TYPE, "ex:Paper", false);
        b.add_str(&s, "ex:author", &format!("ex:person{}", rng.gen_range(0..people)), false);
        b.add_str(&s, "ex:venue", &format!("ex:venue{}", rng.gen_range(0..venues)), false);
        let title = format!("{} {} {}", word(&mut rng), word(&mut rng), word(&mut rng));
        b.add_str(&s, "ex:title", &title, true);
        b.add_str(&s, "ex:year", &format!("{}", 2000 + rng.gen_range(0..10)), true);
    }
    b.finish()
}

fn random_word(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(4..=9);
    (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
}

/// Irregular graph: instances carry random subsets of their type's
/// predicates with varying fanout, a few subjects repeat a relationship
/// predicate many times, and literals are random words. Roughly
/// `17 * entities` triples.
pub fn diverse_graph(entities: usize, seed: u64) -> RdfGraph {
    const TYPES: usize = 6;
    const RELATIONS: usize = 12;
    const ATTRIBUTES: usize = 16;
    const FANOUT: std::ops::RangeInclusive<usize> = 1..=12;
    const HUB_RATE: f64 = 0.01;
    const HUB_FANOUT: std::ops::RangeInclusive<usize> = 40..=80;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entities = entities.max(2);
    let type_of: Vec<usize> = (0..entities).map(|_| rng.gen_range(0..TYPES)).collect();
    let label = |i: usize| format!("ex:t{}e{i}", type_of[i]);
    // each type draws from its own pool of predicates
    let pools: Vec<(Vec<usize>, Vec<usize>)> = (0..TYPES)
        .map(|_| {
            let mut r: Vec<usize> = (0..RELATIONS).collect();
            let mut a: Vec<usize> = (0..ATTRIBUTES).collect();
            r.shuffle(&mut rng);
            a.shuffle(&mut rng);
            (r[..4].to_vec(), a[..6].to_vec())
        })
        .collect();

    let mut b = GraphBuilder::new();
    for (i, &t) in type_of.iter().enumerate() {
        let s = label(i);
        b.add_str(&s, TYPE, &format!("ex:T{t}"), false);
        let (rels, attrs) = &pools[t];
        for &r in rels {
            if !rng.gen_bool(0.5) {
                continue;
            }
            let fanout = if rng.gen_bool(HUB_RATE) {
                rng.gen_range(HUB_FANOUT)
            } else {
                rng.gen_range(FANOUT)
            };
            for _ in 0..fanout {
                let o = rng.gen_range(0..entities);
                if o != i {
                    b.add_str(&s, &format!("ex:r{r}"), &label(o), false);
                }
            }
        }
        for &a in attrs {
            if rng.gen_bool(0.5) {
                let words = rng.gen_range(1..=3);
                let text: Vec<String> = (0..words).map(|_| random_word(&mut rng)).collect();
                b.add_str(&s, &format!("ex:a{a}"), &text.join(" "), true);
            }
        }
    }
    b.finish()
}

/// Random directed graph with `out_degree` edges per node over a few
/// predicates, giving many distinct paths of length up to 5 or so. Every
/// tenth node also gets a literal name.
pub fn path_graph(nodes: usize, out_degree: usize, seed: u64) -> RdfGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = nodes.max(2);
    let mut b = GraphBuilder::new();
    for i in 0..nodes {
        let s = format!("ex:n{i}");
        for _ in 0..out_degree {
            let o = rng.gen_range(0..nodes);
            if o != i {
                b.add_str(&s, &format!("ex:link{}", rng.gen_range(0..3)), &format!("ex:n{o}"), false);
            }
        }
        if i % 10 == 0 {
            b.add_str(&s, "ex:name", &random_word(&mut rng), true);
        }
    }
    b.finish()
}
