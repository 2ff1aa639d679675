//! Fixtures shared by the benchmarks.

use trirank::{Field, Tensor3};

pub fn f3() -> Field {
    Field::new(3, 1).expect("3 is prime")
}

/// Levi-Civita, `I_4` and a seeded random cube over `F_3`.
pub fn fixtures() -> Vec<(&'static str, Tensor3)> {
    let f = f3();
    vec![
        ("levi_civita", Tensor3::levi_civita(&f)),
        ("identity_4", Tensor3::identity(&f, 4)),
        ("random_3x3x3", Tensor3::random(&f, [3, 3, 3], 1)),
    ]
}
