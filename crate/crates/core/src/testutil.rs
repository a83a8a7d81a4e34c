use crate::trees::PlaneTree;
use proptest::prelude::*;

/// Random plane trees obtained by closing an arbitrary child-count prefix
/// into an excursion. Not uniform over shapes; only coverage matters here.
pub(crate) fn arb_tree(max_n: usize) -> impl Strategy<Value = PlaneTree> {
    prop::collection::vec(0usize..4, 1..max_n).prop_map(|raw| {
        let mut counts = Vec::new();
        let mut open = 1i64;
        for c in raw {
            if open == 0 {
                break;
            }
            counts.push(c);
            open += c as i64 - 1;
        }
        counts.extend(std::iter::repeat_n(0, open as usize));
        PlaneTree::from_child_counts(counts).unwrap()
    })
}
