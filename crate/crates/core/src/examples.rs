//! Small reference models used throughout the docs and tests.

use crate::rational::{one, ratio, Rational};
use crate::scm::ScmModel;

/// Two independent fair coins `U1`, `U2`; `X := U1` and `Y` copies `X` when
/// `U2 = 1` and negates it when `U2 = 0`.
pub fn coins() -> ScmModel {
    ScmModel::builder()
        .exo("U1", 2)
        .exo("U2", 2)
        .variable("X", &[], &["U1"], |_, u| u[0] as u8)
        .variable("Y", &["X"], &["U2"], |p, u| {
            let (u, x) = (u[0] as u8, p[0]);
            u * x + (1 - u) * (1 - x)
        })
        .uniform_units()
        .build()
        .expect("example model is well formed")
}

/// `X` is always 0. Unit `U=0` (mass 1/2) has `Y = 1` under either value of
/// `X`; unit `U=1` (mass 1/2) has `Y = 0` under either value.
pub fn two_units() -> ScmModel {
    ScmModel::builder()
        .exo("U", 2)
        .variable("X", &[], &[], |_, _| 0)
        .variable("Y", &["X"], &["U"], |_, u| 1 - u[0] as u8)
        .uniform_units()
        .build()
        .expect("example model is well formed")
}

/// The four-unit companion of [`two_units`] with masses `1/2-eps, eps, 1/2-eps,
/// eps`. It agrees with [`two_units`] on every interventional distribution.
pub fn split_units(eps: &Rational) -> ScmModel {
    // (Y under X=1, Y under X=0) per unit
    const RESPONSES: [(u8, u8); 4] = [(1, 1), (1, 0), (0, 0), (0, 1)];
    let half = ratio(1, 2);
    ScmModel::builder()
        .exo("U", 4)
        .variable("X", &[], &[], |_, _| 0)
        .variable("Y", &["X"], &["U"], |p, u| {
            let (at1, at0) = RESPONSES[u[0] as usize];
            if p[0] == 1 {
                at1
            } else {
                at0
            }
        })
        .unit(&[0], &half - eps)
        .unit(&[1], eps.clone())
        .unit(&[2], &half - eps)
        .unit(&[3], eps.clone())
        .build()
        .expect("example model is well formed")
}

/// A single-unit model with `X = 1` and `Y = X`.
pub fn deterministic() -> ScmModel {
    ScmModel::builder()
        .exo("U", 1)
        .variable("X", &[], &[], |_, _| 1)
        .variable("Y", &["X"], &[], |p, _| p[0])
        .unit(&[0], one())
        .build()
        .expect("example model is well formed")
}
