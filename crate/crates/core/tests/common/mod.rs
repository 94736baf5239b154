//! Random model generators shared by the integration tests.
#![allow(dead_code)]

use causal_hierarchy::hierarchy::{interventional_family, project_2ve, TwoVarFamily};
use causal_hierarchy::rational::{ratio, Rational};
use causal_hierarchy::scm::{Intervention, ScmModel};
use causal_hierarchy::standard_form::{enumerate_atoms, StandardFormModel};
use num_traits::Zero;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `X` first and `Y` last: `[X]`, `[X, Y]`, `[X, Z, Y]`, `[X, Z, W, Y]`.
pub fn names(n: usize) -> Vec<String> {
    let all: &[&str] = match n {
        1 => &["X"],
        2 => &["X", "Y"],
        3 => &["X", "Z", "Y"],
        _ => &["X", "Z", "W", "Y"],
    };
    all.iter().map(|s| s.to_string()).collect()
}

/// `k` masses `c_i / d` summing to 1 with `d <= max_den`; zeros allowed.
pub fn grid_masses(rng: &mut ChaCha8Rng, k: usize, max_den: i64) -> Vec<Rational> {
    let d = rng.random_range(1..=max_den);
    let mut counts = vec![0i64; k];
    for _ in 0..d {
        counts[rng.random_range(0..k)] += 1;
    }
    counts.into_iter().map(|c| ratio(c, d)).collect()
}

/// Strictly positive masses with denominators up to `max_den * k`.
pub fn positive_masses(rng: &mut ChaCha8Rng, k: usize, max_den: i64) -> Vec<Rational> {
    let weights: Vec<i64> = (0..k).map(|_| rng.random_range(1..=max_den)).collect();
    let total: i64 = weights.iter().sum();
    weights.into_iter().map(|w| ratio(w, total)).collect()
}

/// A standard-form model on `support` distinct random atoms.
pub fn random_standard_form(rng: &mut ChaCha8Rng, order: &[String], support: usize) -> StandardFormModel {
    let atoms = enumerate_atoms(order.len()).unwrap();
    let support = support.min(atoms.len());
    let picked = sample(rng, atoms.len(), support);
    let masses = positive_masses(rng, support, 12);
    StandardFormModel::new(order.to_vec(), picked.into_iter().map(|i| atoms[i].clone()).zip(masses)).unwrap()
}

/// A two-variable standard-form model with masses on a grid of
/// denominator at most `max_den` (some atoms may get zero mass).
pub fn grid_standard_form(rng: &mut ChaCha8Rng, max_den: i64) -> StandardFormModel {
    let order = names(2);
    let atoms = enumerate_atoms(2).unwrap();
    let masses = grid_masses(rng, atoms.len(), max_den);
    StandardFormModel::new(order, atoms.into_iter().zip(masses).filter(|(_, p)| !p.is_zero())).unwrap()
}

pub fn two_var_of(m: &StandardFormModel) -> TwoVarFamily {
    let list = [Intervention::empty(), Intervention::set("X", 0), Intervention::set("X", 1)];
    project_2ve(&interventional_family(m, &list).unwrap(), "X", "Y").unwrap()
}

/// A random explicit SCM: `n` variables with random parent subsets, one or
/// two exogenous variables and at most `max_units` units.
pub fn random_scm(rng: &mut ChaCha8Rng, n: usize, max_units: usize) -> ScmModel {
    let order = names(n);
    let two_exo = rng.random_bool(0.5);
    let ranges: Vec<u32> = if two_exo {
        vec![rng.random_range(1..=2), rng.random_range(1..=4)]
    } else {
        vec![rng.random_range(1..=max_units as u32)]
    };
    let mut b = ScmModel::builder();
    let exo_names: Vec<String> = (0..ranges.len()).map(|i| format!("U{i}")).collect();
    for (name, &r) in exo_names.iter().zip(&ranges) {
        b = b.exo(name, r);
    }
    for v in 0..n {
        let parents: Vec<&str> = (0..v).filter(|_| rng.random_bool(0.6)).map(|p| order[p].as_str()).collect();
        let exo: Vec<usize> = (0..ranges.len()).filter(|_| rng.random_bool(0.7)).collect();
        let exo_ranges: Vec<u32> = exo.iter().map(|&u| ranges[u]).collect();
        let exo_size: usize = exo_ranges.iter().map(|&r| r as usize).product();
        let table: Vec<u8> = (0..(1usize << parents.len()) * exo_size).map(|_| rng.random_range(0..=1)).collect();
        let exo_refs: Vec<&str> = exo.iter().map(|&u| exo_names[u].as_str()).collect();
        b = b.variable(&order[v], &parents, &exo_refs, move |pv, ev| {
            let p = pv.iter().fold(0usize, |acc, &bit| acc * 2 + bit as usize);
            let e = ev.iter().zip(&exo_ranges).fold(0usize, |acc, (&d, &r)| acc * r as usize + d as usize);
            table[p * exo_size + e]
        });
    }
    let all: Vec<Vec<u32>> = causal_hierarchy::scm::mixed_radix(&ranges).collect();
    let k = rng.random_range(1..=all.len().min(max_units));
    let picked = sample(rng, all.len(), k);
    let masses = positive_masses(rng, k, 9);
    for (i, p) in picked.into_iter().zip(masses) {
        b = b.unit(&all[i], p);
    }
    b.build().unwrap()
}
