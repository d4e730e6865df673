//! Golden-file check of the canonical graph text form.

use depletion::graphs::Enumerator;

#[test]
fn family_listings_match_golden_file() {
    let e = Enumerator::default();
    let mut text = String::new();
    text.push_str("# connected graphs on 3 vertices\n");
    for g in e.connected(3).unwrap() {
        text.push_str(&g.canonical_text());
        text.push('\n');
    }
    text.push_str("# two-connected graphs on 4 vertices\n");
    for g in e.two_connected(4).unwrap() {
        text.push_str(&g.canonical_text());
        text.push('\n');
    }
    text.push_str("# connected bipartite star class with 2 big vertices and 1 cloud\n");
    for g in e.bipartite_star(2, 1, true).unwrap() {
        text.push_str(&g.canonical_text());
        text.push('\n');
    }
    text.push_str("# big-cut-point-free class with 2 big vertices and 1 cloud\n");
    for (g, h) in e.big_two_connected(2, 1).unwrap() {
        text.push_str(&format!("{} hyper={:?}\n", g.canonical_text(), h.0));
    }
    let golden = include_str!("golden/families.txt");
    assert_eq!(text, golden, "canonical listings drifted from the golden file");
}
