use vortlab_bench::{bump, grid, scalar_bump};
use vortlab_core::field::divergence;

#[test]
fn bump_is_solenoidal_up_to_truncation() {
    let rel = |n| {
        let v = bump(grid(n));
        divergence(&v).max_abs() / v.max_abs()
    };
    let (a, b) = (rel(33), rel(65));
    assert!(b < 1e-2 && a / b > 3.0, "{a} {b}");
}

#[test]
fn fixtures_decay_to_the_faces() {
    let f = scalar_bump(grid(17));
    assert!(f.max_abs() > 0.5 && f.max_abs() <= 1.0);
    assert!(f.values()[0].abs() < 1e-10);
}
