use std::collections::BTreeSet;
use std::ops::Range;

use defitex::dataset::{decode_iob2, is_valid_iob2, label_iob2, tokenize_text, Iob2Tag};
use proptest::prelude::*;

/// Direct overlap labeling: groups spans into connected components by
/// pairwise character overlap, then tags each token from the set of
/// components it shares a character with.
fn oracle(text_len: usize, tokens: &[Range<usize>], spans: &[Range<usize>]) -> Vec<Iob2Tag> {
    let n = spans.len();
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], i: usize) -> usize {
        if c[i] == i {
            i
        } else {
            let r = find(c, c[i]);
            c[i] = r;
            r
        }
    }
    for i in 0..n {
        for j in 0..n {
            let shared = (0..text_len).any(|p| spans[i].contains(&p) && spans[j].contains(&p));
            if shared {
                let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                comp[a] = b;
            }
        }
    }
    let owners = |tok: &Range<usize>, comp: &mut Vec<usize>| -> BTreeSet<usize> {
        let mut set = BTreeSet::new();
        for p in tok.clone() {
            for (i, s) in spans.iter().enumerate() {
                if s.contains(&p) {
                    set.insert(find(comp, i));
                }
            }
        }
        set
    };
    let mut tags = Vec::new();
    let mut prev: BTreeSet<usize> = BTreeSet::new();
    for tok in tokens {
        let cur = owners(tok, &mut comp);
        tags.push(if cur.is_empty() {
            Iob2Tag::Outside
        } else if cur.intersection(&prev).next().is_some() {
            Iob2Tag::Inside
        } else {
            Iob2Tag::Begin
        });
        prev = cur;
    }
    tags
}

fn text_and_spans() -> impl Strategy<Value = (String, Vec<Range<usize>>)> {
    prop::collection::vec(prop::sample::select(vec!["a", "bc", "α", " ", "  ", ".", "(", ")", "-", ",", "x-y"]), 0..25)
        .prop_map(|parts| parts.concat())
        .prop_flat_map(|text| {
            let len = text.chars().count();
            let span = (0..=len).prop_flat_map(move |s| (Just(s), s..=len)).prop_map(|(s, e)| s..e);
            (Just(text), prop::collection::vec(span, 0..5))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn labeler_matches_overlap_oracle((text, spans) in text_and_spans()) {
        let tokens = tokenize_text(&text);
        let len = text.chars().count();
        let labeling = label_iob2(&tokens, &spans, len).unwrap();
        let ranges: Vec<_> = tokens.iter().map(|t| t.range.clone()).collect();
        prop_assert_eq!(&labeling.tags, &oracle(len, &ranges, &spans));
        prop_assert_eq!(labeling.tags.len(), tokens.len());
        prop_assert!(is_valid_iob2(&labeling.tags));
    }

    #[test]
    fn tokens_cover_text((text, _) in text_and_spans()) {
        let tokens = tokenize_text(&text);
        for w in tokens.windows(2) {
            prop_assert!(w[0].range.end <= w[1].range.start);
        }
        for t in &tokens {
            let slice: String = text.chars().skip(t.range.start).take(t.range.len()).collect();
            prop_assert_eq!(&slice, &t.surface);
        }
        let joined: String = tokens.iter().map(|t| t.surface.as_str()).collect();
        let squeezed: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        prop_assert_eq!(joined, squeezed);
    }

    #[test]
    fn one_term_per_begin_tag((text, spans) in text_and_spans()) {
        let tokens = tokenize_text(&text);
        let len = text.chars().count();
        let tags = label_iob2(&tokens, &spans, len).unwrap().tags;
        let terms = decode_iob2(&tokens, &tags, Some(&text));
        prop_assert_eq!(terms.len(), tags.iter().filter(|&&t| t == Iob2Tag::Begin).count());
        for term in &terms {
            prop_assert!(text.contains(term.as_str()));
        }
    }
}
