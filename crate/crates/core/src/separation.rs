//! Pairs of models that agree on every interventional distribution but
//! disagree on probabilities of causation.
//!
//! Starting from a standard-form model whose two-variable projection is
//! Y-good, two disjoint sets of atoms `Ω1`, `Ω2` (untreated units with
//! opposite response profiles of `Y` to `X`) lose a small amount of mass
//! `delta` each. That mass moves to "heads" units built from coupled pairs
//! `(f1, f2)`: they follow one atom everywhere except where `X` sits at the
//! treatment value, where they follow the partner. Any single intervention
//! sees the same outcome masses as before, while the joint law of
//! `Y` under both treatments shifts by `delta`.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::causation::{check_y_good, probabilities_of_causation, CausationReport, Roles};
use crate::error::{Error, Result};
use crate::hierarchy::{interventional_family, project_2ve};
use crate::rational::{format_rational, ratio, Rational};
use crate::scm::{interventional, ExoVar, Intervention, Mechanism, ScmModel, StructuralModel, Unit, Valuation};
use crate::standard_form::{ResponseAtom, StandardFormModel};

/// `Ω1`, `Ω2` and their response profile, before a shift size is chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessSets {
    pub x: String,
    pub y: String,
    pub roles: Roles,
    /// `Y` under `do(X=0)` and `do(X=1)` on `Ω1`; `Ω2` has the complements.
    pub y0: u8,
    pub y1: u8,
    pub omega1: Vec<(ResponseAtom, Rational)>,
    pub omega2: Vec<(ResponseAtom, Rational)>,
    pub mass1: Rational,
    pub mass2: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparationPlan {
    pub sets: WitnessSets,
    pub delta: Rational,
    pub eps1: Rational,
    pub eps2: Rational,
    /// Transport plan between the normalized restrictions to `Ω1` and `Ω2`.
    pub coupling: Vec<(ResponseAtom, ResponseAtom, Rational)>,
}

fn y_profile(atom: &ResponseAtom, x_pos: usize, y_pos: usize, n: usize) -> (u8, u8) {
    let mut fixed = vec![None; n];
    fixed[x_pos] = Some(0);
    let at0 = atom.solve(&fixed).0[y_pos];
    fixed[x_pos] = Some(1);
    let at1 = atom.solve(&fixed).0[y_pos];
    (at0, at1)
}

/// The lexicographically first `(y0, y1)` whose two witness sets both
/// carry positive mass. `X` must come first in the order and the
/// two-variable projection must be Y-good under `roles`.
pub fn find_witness_sets(m: &StandardFormModel, x: &str, y: &str, roles: Roles) -> Result<WitnessSets> {
    let order = m.order();
    if order.first().map(String::as_str) != Some(x) {
        return Err(Error::precondition(format!("`{x}` must be the first variable of the order")));
    }
    let y_pos = order
        .iter()
        .position(|v| v == y)
        .ok_or_else(|| Error::UnknownVariable(y.to_string()))?;
    if y_pos == 0 {
        return Err(Error::malformed("treatment and outcome must differ"));
    }
    let treat = [Intervention::empty(), Intervention::set(x, 0), Intervention::set(x, 1)];
    let fam = project_2ve(&interventional_family(m, &treat)?, x, y)?;
    let good = check_y_good(&fam, roles);
    if !good.good {
        return Err(Error::precondition(format!(
            "two-variable projection is not Y-good: {}",
            good.binding_description()
        )));
    }
    let n = order.len();
    let untreated: Vec<(&ResponseAtom, &Rational, (u8, u8))> = m
        .atoms()
        .iter()
        .filter(|(a, _)| a.response(0, 0) == roles.x_prime())
        .map(|(a, p)| (a, p, y_profile(a, 0, y_pos, n)))
        .collect();
    let pick = |profile: (u8, u8)| -> (Vec<(ResponseAtom, Rational)>, Rational) {
        let set: Vec<(ResponseAtom, Rational)> = untreated
            .iter()
            .filter(|(_, _, pr)| *pr == profile)
            .map(|(a, p, _)| ((*a).clone(), (*p).clone()))
            .collect();
        let mass = set.iter().map(|(_, p)| p).sum();
        (set, mass)
    };
    for (y0, y1) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let (omega1, mass1) = pick((y0, y1));
        let (omega2, mass2) = pick((1 - y0, 1 - y1));
        if mass1.is_positive() && mass2.is_positive() {
            return Ok(WitnessSets {
                x: x.to_string(),
                y: y.to_string(),
                roles,
                y0,
                y1,
                omega1,
                omega2,
                mass1,
                mass2,
            });
        }
    }
    Err(Error::Internal(
        "Y-good model without opposite untreated response profiles".into(),
    ))
}

/// Northwest-corner coupling of two distributions given by masses in
/// canonical order.
fn northwest_corner(
    left: &[(ResponseAtom, Rational)],
    right: &[(ResponseAtom, Rational)],
) -> Vec<(ResponseAtom, ResponseAtom, Rational)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut a = left.first().map(|l| l.1.clone()).unwrap_or_default();
    let mut b = right.first().map(|r| r.1.clone()).unwrap_or_default();
    while i < left.len() && j < right.len() {
        let t = if a < b { a.clone() } else { b.clone() };
        if t.is_positive() {
            out.push((left[i].0.clone(), right[j].0.clone(), t.clone()));
        }
        a -= &t;
        b -= &t;
        if a.is_zero() {
            i += 1;
            if i < left.len() {
                a = left[i].1.clone();
            }
        }
        if b.is_zero() {
            j += 1;
            if j < right.len() {
                b = right[j].1.clone();
            }
        }
    }
    out
}

/// Completes the witness sets with a shift size (default half the smaller
/// witness mass) and the coupling.
pub fn plan_separation(sets: WitnessSets, delta: Option<Rational>) -> Result<SeparationPlan> {
    let limit = if sets.mass1 < sets.mass2 { sets.mass1.clone() } else { sets.mass2.clone() };
    let delta = delta.unwrap_or_else(|| &limit * ratio(1, 2));
    if !delta.is_positive() || delta >= limit {
        return Err(Error::precondition(format!(
            "delta = {} must lie strictly between 0 and {}",
            format_rational(&delta),
            format_rational(&limit)
        )));
    }
    let eps1 = &delta / &sets.mass1;
    let eps2 = &delta / &sets.mass2;
    let norm = |set: &[(ResponseAtom, Rational)], mass: &Rational| -> Vec<(ResponseAtom, Rational)> {
        set.iter().map(|(a, p)| (a.clone(), p / mass)).collect()
    };
    let coupling = northwest_corner(&norm(&sets.omega1, &sets.mass1), &norm(&sets.omega2, &sets.mass2));
    Ok(SeparationPlan { sets, delta, eps1, eps2, coupling })
}

/// The kind of exogenous unit in a separated model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeparatedUnit {
    /// Behaves exactly as the atom.
    Tails(ResponseAtom),
    /// Follows `base`, except that wherever `X` equals the treatment value
    /// among the predecessors it follows `partner`.
    Heads { base: ResponseAtom, partner: ResponseAtom },
}

impl fmt::Display for SeparatedUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeparatedUnit::Tails(a) => write!(f, "T:{a}"),
            SeparatedUnit::Heads { base, partner } => write!(f, "H:{base}>{partner}"),
        }
    }
}

/// Units of the separated model with their masses, in the order used by
/// [`build_separated`]: tails units in atom order, then each coupling pair
/// in both directions.
pub fn separated_units(m: &StandardFormModel, plan: &SeparationPlan) -> Vec<(SeparatedUnit, Rational)> {
    let one = Rational::one();
    let mut units = Vec::new();
    for (atom, p) in m.atoms() {
        let mass = if plan.sets.omega1.iter().any(|(a, _)| a == atom) {
            (&one - &plan.eps1) * p
        } else if plan.sets.omega2.iter().any(|(a, _)| a == atom) {
            (&one - &plan.eps2) * p
        } else {
            p.clone()
        };
        units.push((SeparatedUnit::Tails(atom.clone()), mass));
    }
    for (f1, f2, c) in &plan.coupling {
        let mass = &plan.delta * c;
        units.push((SeparatedUnit::Heads { base: f1.clone(), partner: f2.clone() }, mass.clone()));
        units.push((SeparatedUnit::Heads { base: f2.clone(), partner: f1.clone() }, mass));
    }
    units
}

/// The separated model, as an explicit SCM with one exogenous variable `U`
/// indexing the units of [`separated_units`]. Every variable takes all its
/// predecessors as parents.
pub fn build_separated(m: &StandardFormModel, plan: &SeparationPlan) -> Result<ScmModel> {
    if m.order().first() != Some(&plan.sets.x) {
        return Err(Error::precondition("plan treatment must be the first variable"));
    }
    let limit = if plan.sets.mass1 < plan.sets.mass2 { &plan.sets.mass1 } else { &plan.sets.mass2 };
    if !plan.delta.is_positive() || plan.delta >= *limit {
        return Err(Error::precondition("delta is outside (0, min(mass(Ω1), mass(Ω2)))"));
    }
    let treated = plan.sets.roles.x;
    let units = separated_units(m, plan);
    let n = m.order().len();
    let k = units.len() as u32;
    let mut mechanisms = Vec::with_capacity(n);
    for v in 0..n {
        let mut mech = Mechanism::empty(v, &[k]);
        for pred in 0..1usize << v {
            let pv = Valuation::from_index(pred, v);
            for (u, (unit, _)) in units.iter().enumerate() {
                let value = match unit {
                    SeparatedUnit::Tails(a) => a.response(v, pred),
                    SeparatedUnit::Heads { base, partner } => {
                        if v > 0 && pv.0[0] == treated {
                            partner.response(v, pred)
                        } else {
                            base.response(v, pred)
                        }
                    }
                };
                mech.set(&pv, u, value);
            }
        }
        mechanisms.push(mech);
    }
    let model = ScmModel::from_parts(
        m.order().to_vec(),
        (0..n).map(|v| (0..v).collect()).collect(),
        vec![ExoVar { name: "U".into(), range: k }],
        vec![vec![0]; n],
        units
            .into_iter()
            .enumerate()
            .map(|(u, (_, p))| Unit { assign: vec![u as u32], p })
            .collect(),
        mechanisms,
    )?;
    model.ensure_valid()?;
    Ok(model)
}

/// Witness sets, default plan and separated model in one step.
pub fn separate(
    m: &StandardFormModel,
    x: &str,
    y: &str,
    roles: Roles,
    delta: Option<Rational>,
) -> Result<(SeparationPlan, ScmModel)> {
    let plan = plan_separation(find_witness_sets(m, x, y, roles)?, delta)?;
    let model = build_separated(m, &plan)?;
    Ok((plan, model))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantityComparison {
    pub name: &'static str,
    pub left: Option<Rational>,
    pub right: Option<Rational>,
    pub differs: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairReport {
    pub interventions_checked: usize,
    pub level2_equal: bool,
    /// Interventions whose outcome distributions differ.
    pub level2_mismatches: Vec<Intervention>,
    pub causation: Vec<QuantityComparison>,
    /// First differing quantity and the size of the difference (absent if
    /// one side is undefined).
    pub witness: Option<(&'static str, Option<Rational>)>,
}

impl PairReport {
    pub fn differing(&self) -> Vec<&'static str> {
        self.causation.iter().filter(|c| c.differs).map(|c| c.name).collect()
    }
}

/// Exact Level-2 comparison over `interventions` plus the six
/// probabilities of causation of `x` for `y` in both models.
pub fn verify_pair<A, B>(
    m1: &A,
    m2: &B,
    interventions: &[Intervention],
    x: &str,
    y: &str,
    roles: Roles,
) -> Result<PairReport>
where
    A: StructuralModel + ?Sized,
    B: StructuralModel + ?Sized,
{
    if m1.variables() != m2.variables() {
        return Err(Error::malformed("models have different variable orders"));
    }
    let mut level2_mismatches = Vec::new();
    for alpha in interventions {
        if interventional(m1, alpha)? != interventional(m2, alpha)? {
            level2_mismatches.push(alpha.clone());
        }
    }
    let c1: CausationReport = probabilities_of_causation(m1, x, y, roles)?;
    let c2: CausationReport = probabilities_of_causation(m2, x, y, roles)?;
    let causation: Vec<QuantityComparison> = CausationReport::NAMES
        .iter()
        .zip(c1.values().into_iter().zip(c2.values()))
        .map(|(name, (left, right))| QuantityComparison {
            name,
            differs: left != right,
            left,
            right,
        })
        .collect();
    let witness = causation.iter().find(|c| c.differs).map(|c| {
        let magnitude = match (&c.left, &c.right) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        };
        (c.name, magnitude)
    });
    Ok(PairReport {
        interventions_checked: interventions.len(),
        level2_equal: level2_mismatches.is_empty(),
        level2_mismatches,
        causation,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{deterministic, two_units, split_units};
    use crate::hierarchy::all_interventions;
    use crate::scm::{counterfactual_joint, Conjunct, Event};
    use crate::standard_form::canonicalize;

    fn zeta(y0: u8, y1: u8) -> Vec<Conjunct> {
        vec![
            Conjunct::new(Intervention::set("X", 0), Event::of([("Y", y0)])),
            Conjunct::new(Intervention::set("X", 1), Event::of([("Y", y1)])),
        ]
    }

    #[test]
    fn two_units_witness_sets() {
        let sf = canonicalize(&two_units()).unwrap();
        let sets = find_witness_sets(&sf, "X", "Y", Roles::default()).unwrap();
        assert_eq!((sets.y0, sets.y1), (0, 0));
        assert_eq!(sets.omega1.len(), 1);
        assert_eq!(sets.omega2.len(), 1);
        assert_eq!((sets.mass1.clone(), sets.mass2.clone()), (ratio(1, 2), ratio(1, 2)));
    }

    #[test]
    fn two_units_separation_reproduces_companion() {
        let eps = ratio(1, 4);
        let sf = canonicalize(&two_units()).unwrap();
        let (plan, m2) = separate(&sf, "X", "Y", Roles::default(), Some(eps.clone())).unwrap();
        assert_eq!(plan.eps1, ratio(1, 2));
        assert_eq!(canonicalize(&m2).unwrap(), canonicalize(&split_units(&eps)).unwrap());
        let mut masses: Vec<Rational> = m2.units().iter().map(|u| u.p.clone()).collect();
        masses.sort();
        assert_eq!(masses, vec![ratio(1, 4); 4]);
        let report =
            verify_pair(&two_units(), &m2, &all_interventions(m2.variables()), "X", "Y", Roles::default()).unwrap();
        assert!(report.level2_equal);
        assert_eq!(report.interventions_checked, 9);
        assert_eq!(report.witness, Some(("pns", Some(eps))));
        assert_eq!(report.differing(), vec!["pns", "pns_converse", "ps", "p_enable"]);
    }

    #[test]
    fn zeta_drops_by_delta_and_heads_avoid_it() {
        let sf = canonicalize(&split_units(&ratio(1, 6))).unwrap();
        let (plan, m2) = separate(&sf, "X", "Y", Roles::default(), None).unwrap();
        let z = zeta(plan.sets.y0, plan.sets.y1);
        let before = counterfactual_joint(&sf, &z).unwrap();
        let after = counterfactual_joint(&m2, &z).unwrap();
        assert_eq!(before - after, plan.delta.clone());
        let units = separated_units(&sf, &plan);
        for (i, (unit, _)) in units.iter().enumerate() {
            if let SeparatedUnit::Heads { .. } = unit {
                let hits = z.iter().all(|c| {
                    let sol = m2.solve(i, &c.intervention.resolve(m2.variables()).unwrap());
                    c.event.holds_in(m2.variables(), &sol).unwrap()
                });
                assert!(!hits, "heads unit {unit} satisfies the shifted event");
            }
        }
    }

    #[test]
    fn swapped_roles_move_necessity_quantities() {
        // X = 1 always here, so the untreated value under swapped roles is 1
        let sf = canonicalize(&two_units()).unwrap();
        let flipped = StandardFormModel::new(
            sf.order().to_vec(),
            sf.atoms().iter().map(|(a, p)| {
                let mut bits = a.bits().to_vec();
                bits[0] = 1;
                (ResponseAtom::from_bits(bits).unwrap(), p.clone())
            }),
        )
        .unwrap();
        let roles = Roles::default().swapped();
        let (_, m2) = separate(&flipped, "X", "Y", roles, None).unwrap();
        let report = verify_pair(&flipped, &m2, &all_interventions(m2.variables()), "X", "Y", Roles::default())
            .unwrap();
        assert!(report.level2_equal);
        let diff = report.differing();
        assert!(diff.contains(&"pn") && diff.contains(&"p_disable"), "{diff:?}");
    }

    #[test]
    fn refuses_non_good_and_bad_delta() {
        let sf = canonicalize(&deterministic()).unwrap();
        let err = find_witness_sets(&sf, "X", "Y", Roles::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let good = canonicalize(&two_units()).unwrap();
        let sets = find_witness_sets(&good, "X", "Y", Roles::default()).unwrap();
        assert!(plan_separation(sets.clone(), Some(ratio(1, 2))).is_err());
        assert!(plan_separation(sets, Some(ratio(0, 1))).is_err());
    }

    #[test]
    fn reflexive_pair_agrees() {
        let m = two_units();
        let r = verify_pair(&m, &m, &all_interventions(m.variables()), "X", "Y", Roles::default()).unwrap();
        assert!(r.level2_equal && r.witness.is_none());
    }

    #[test]
    fn coupling_has_normalized_marginals() {
        let mk = |bits: [u8; 3]| ResponseAtom::from_bits(bits.to_vec()).unwrap();
        let left = vec![(mk([0, 0, 0]), ratio(1, 3)), (mk([0, 0, 1]), ratio(2, 3))];
        let right = vec![(mk([0, 1, 1]), ratio(1, 2)), (mk([1, 1, 1]), ratio(1, 2))];
        let c = northwest_corner(&left, &right);
        for (a, p) in &left {
            let s: Rational = c.iter().filter(|(l, _, _)| l == a).map(|(_, _, m)| m).sum();
            assert_eq!(&s, p);
        }
        for (b, p) in &right {
            let s: Rational = c.iter().filter(|(_, r, _)| r == b).map(|(_, _, m)| m).sum();
            assert_eq!(&s, p);
        }
        assert_eq!(c.len(), 3);
    }
}
