//! Composing moment vectors: interval bounds of a cost prepended to a
//! computation whose moments are known.

use appl_moments::num::rat;
use appl_moments::semiring::{Interval, MomentVector};

fn main() {
    let tick = MomentVector::of_scalar(&Interval::point(rat(1)), 2);
    let rest = MomentVector::new(vec![Interval::point(rat(1)), Interval::of(rat(2), rat(4)), Interval::of(rat(6), rat(28))]);
    println!("{tick} ⊗ {rest} = {}", tick.compose(&rest).expect("same order"));
    let branch = MomentVector::new(vec![Interval::point(rat(0)), Interval::point(rat(1)), Interval::point(rat(1))]);
    println!("{rest} ⊕ {branch} = {}", rest.combine(&branch).expect("same order"));
}
