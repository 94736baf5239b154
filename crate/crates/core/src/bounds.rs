//! Bounds on counterfactual queries from Level-2 data.
//!
//! Any model over a fixed order is, at Level 3, a distribution `q` over
//! response atoms. Level-2 data pins linear functionals of `q`; a
//! counterfactual event is another linear functional, so its range over all
//! compatible models is the pair of optima of an exact linear program.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hierarchy::{format_cell_key, InterventionalFamily};
use crate::lp::{LpProblem, LpSolution, Sense, Simplex};
use crate::rational::{format_rational, Rational};
use crate::scm::{matches, Conjunct, Intervention, Valuation};
use crate::standard_form::{enumerate_atoms_capped, ResponseAtom, StandardFormModel};

/// Largest order handled without opting in to the four-variable LP.
pub const DEFAULT_MAX_VARS: usize = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BoundsOptions {
    /// Allow four variables (32768 atom columns).
    pub allow_four: bool,
}

/// A counterfactual query, optionally conditioned on a conjunction whose
/// probability the Level-2 data determines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CfQuery {
    pub conjuncts: Vec<Conjunct>,
    pub condition: Vec<Conjunct>,
}

impl CfQuery {
    pub fn joint(conjuncts: Vec<Conjunct>) -> Self {
        CfQuery { conjuncts, condition: Vec::new() }
    }

    pub fn given(mut self, condition: Vec<Conjunct>) -> Self {
        self.condition = condition;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryBounds {
    pub lo: Rational,
    pub hi: Rational,
    pub argmin: StandardFormModel,
    pub argmax: StandardFormModel,
    pub collapsed: bool,
}

/// The equality system matching every cell of every family entry, plus
/// normalization, over the given atom columns.
pub fn level2_problem(
    order: &[String],
    atoms: &[ResponseAtom],
    family: &InterventionalFamily,
) -> Result<LpProblem> {
    let mut problem = LpProblem::new(atoms.len());
    problem.add_row(vec![Rational::one(); atoms.len()], Rational::one(), "total mass");
    for (alpha, table) in family.entries() {
        let fixed = alpha.resolve(order)?;
        let positions: Vec<usize> = table
            .scope()
            .iter()
            .map(|v| {
                order
                    .iter()
                    .position(|o| o == v)
                    .ok_or_else(|| Error::UnknownVariable(v.clone()))
            })
            .collect::<Result<_>>()?;
        let outcomes: Vec<usize> = atoms
            .iter()
            .map(|a| {
                let sol = a.solve(&fixed);
                positions.iter().fold(0, |acc, &p| (acc << 1) | sol.0[p] as usize)
            })
            .collect();
        let scope_names = table.scope().join("");
        for cell in Valuation::all(positions.len()) {
            let idx = cell.index();
            let coeffs: Vec<Rational> = outcomes
                .iter()
                .map(|&o| if o == idx { Rational::one() } else { Rational::zero() })
                .collect();
            let rhs = table.prob(&cell);
            if rhs.is_zero() && coeffs.iter().all(Zero::is_zero) {
                continue;
            }
            let label = format!("P[{alpha}]({scope_names}={cell}) = {}", format_rational(&rhs));
            problem.add_row(coeffs, rhs, label);
        }
    }
    Ok(problem)
}

/// The standard-form model putting mass `x[i]` on `atoms[i]`.
pub fn support_atoms(order: &[String], atoms: &[ResponseAtom], x: &[Rational]) -> Result<StandardFormModel> {
    StandardFormModel::new(
        order.to_vec(),
        atoms
            .iter()
            .zip(x)
            .filter(|(_, p)| !p.is_zero())
            .map(|(a, p)| (a.clone(), p.clone())),
    )
}

/// Level-2 constraints over the full atom set of `order`, brought to a
/// feasible basis once and reused for every query.
#[derive(Clone, Debug)]
pub struct BoundsProblem {
    order: Vec<String>,
    atoms: Vec<ResponseAtom>,
    simplex: Simplex,
}

impl BoundsProblem {
    /// Fails with [`Error::Infeasible`] when no model reproduces `family`.
    pub fn new(order: &[String], family: &InterventionalFamily, opts: BoundsOptions) -> Result<Self> {
        let cap = if opts.allow_four { 4 } else { DEFAULT_MAX_VARS };
        let atoms = enumerate_atoms_capped(order.len(), cap)?;
        let problem = level2_problem(order, &atoms, family)?;
        let simplex = Simplex::new(&problem).map_err(|c| {
            Error::Infeasible(format!("Level-2 data is not realizable: {}", c.describe(&problem)))
        })?;
        Ok(BoundsProblem { order: order.to_vec(), atoms, simplex })
    }

    pub fn atoms(&self) -> &[ResponseAtom] {
        &self.atoms
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    /// 0/1 objective selecting atoms that satisfy every conjunct.
    pub fn indicator(&self, conjuncts: &[Conjunct]) -> Result<Vec<Rational>> {
        let resolved: Vec<(Vec<Option<u8>>, Vec<Option<u8>>)> = conjuncts
            .iter()
            .map(|c| Ok((c.intervention.resolve(&self.order)?, c.event.resolve(&self.order)?)))
            .collect::<Result<_>>()?;
        Ok(self
            .atoms
            .iter()
            .map(|a| {
                let hit = resolved.iter().all(|(fixed, event)| matches(event, &a.solve(fixed)));
                if hit {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect())
    }

    /// Minimum and maximum of a linear objective over compatible models.
    pub fn range(&self, objective: &[Rational]) -> Result<(LpSolution, LpSolution)> {
        let lo = self.simplex.optimize(objective, Sense::Min)?;
        let hi = self.simplex.optimize(objective, Sense::Max)?;
        Ok((lo, hi))
    }

    pub fn bound(&self, query: &CfQuery) -> Result<QueryBounds> {
        if query.conjuncts.is_empty() {
            return Err(Error::malformed("query has no conjuncts"));
        }
        let mut all = query.conjuncts.clone();
        all.extend(query.condition.iter().cloned());
        let (lo, hi) = self.range(&self.indicator(&all)?)?;
        let scale = if query.condition.is_empty() {
            Rational::one()
        } else {
            let (clo, chi) = self.range(&self.indicator(&query.condition)?)?;
            if clo.value != chi.value {
                return Err(Error::precondition(format!(
                    "conditioning event is not fixed by the Level-2 data (ranges over [{}, {}])",
                    format_rational(&clo.value),
                    format_rational(&chi.value)
                )));
            }
            if clo.value.is_zero() {
                return Err(Error::precondition("conditioning event has probability 0"));
            }
            Rational::one() / clo.value
        };
        let lo_v = &lo.value * &scale;
        let hi_v = &hi.value * &scale;
        Ok(QueryBounds {
            collapsed: lo_v == hi_v,
            lo: lo_v,
            hi: hi_v,
            argmin: support_atoms(&self.order, &self.atoms, &lo.x)?,
            argmax: support_atoms(&self.order, &self.atoms, &hi.x)?,
        })
    }
}

/// Range of `query` over every model (with this order) reproducing `l2`.
pub fn bound_query(
    order: &[String],
    l2: &InterventionalFamily,
    query: &CfQuery,
    opts: BoundsOptions,
) -> Result<QueryBounds> {
    BoundsProblem::new(order, l2, opts)?.bound(query)
}

/// Interventions fixing all predecessors of some variable: their joint
/// outcomes identify a response atom completely.
pub fn response_interventions(order: &[String]) -> Vec<Intervention> {
    let mut out = Vec::new();
    for v in 0..order.len() {
        for pred in Valuation::all(v) {
            out.push(Intervention::of(order[..v].iter().cloned().zip(pred.0)));
        }
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollapseWitness {
    /// Composite cell key, one bitstring per intervention.
    pub cell: String,
    pub conjuncts: Vec<Conjunct>,
    pub lo: Rational,
    pub hi: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollapseVerdict {
    pub collapsed: bool,
    pub interventions: Vec<Intervention>,
    /// Number of joint cells whose interval was computed.
    pub cells_checked: usize,
    pub witness: Option<CollapseWitness>,
}

/// Whether `l2` pins every joint outcome cell over `interventions`.
///
/// Cells that no atom produces are identically 0 and skipped; the rest are
/// visited in key order and the first with a nonzero-width interval is
/// returned as the witness.
pub fn check_collapse(
    order: &[String],
    l2: &InterventionalFamily,
    interventions: &[Intervention],
    opts: BoundsOptions,
) -> Result<CollapseVerdict> {
    let problem = BoundsProblem::new(order, l2, opts)?;
    let fixed: Vec<Vec<Option<u8>>> = interventions
        .iter()
        .map(|a| a.resolve(order))
        .collect::<Result<_>>()?;
    let mut cells: BTreeMap<Vec<Valuation>, Vec<usize>> = BTreeMap::new();
    for (i, atom) in problem.atoms.iter().enumerate() {
        let key: Vec<Valuation> = fixed.iter().map(|f| atom.solve(f)).collect();
        cells.entry(key).or_default().push(i);
    }
    let cells: Vec<(Vec<Valuation>, Vec<usize>)> = cells.into_iter().collect();
    let n = problem.atoms.len();
    let outcome = cells
        .par_iter()
        .enumerate()
        .map(|(i, (key, members))| {
            let mut objective = vec![Rational::zero(); n];
            for &m in members {
                objective[m] = Rational::one();
            }
            problem.range(&objective).map(|(lo, hi)| (i, key, lo.value, hi.value))
        })
        .find_first(|r| r.as_ref().map_or(true, |(_, _, lo, hi)| lo != hi));
    let interventions = interventions.to_vec();
    match outcome {
        None => Ok(CollapseVerdict {
            collapsed: true,
            interventions,
            cells_checked: cells.len(),
            witness: None,
        }),
        Some(Err(e)) => Err(e),
        Some(Ok((i, key, lo, hi))) => {
            let conjuncts = interventions
                .iter()
                .zip(key)
                .map(|(a, v)| {
                    Conjunct::new(a.clone(), crate::scm::Event::of(order.iter().cloned().zip(v.0.clone())))
                })
                .collect();
            Ok(CollapseVerdict {
                collapsed: false,
                cells_checked: i + 1,
                witness: Some(CollapseWitness { cell: format_cell_key(key), conjuncts, lo, hi }),
                interventions,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{deterministic, coins, two_units};
    use crate::hierarchy::{all_interventions, interventional_family, project_2ve};
    use crate::rational::ratio;
    use crate::scm::{counterfactual_joint, Event, StructuralModel};
    use crate::standard_form::monotonic_example;

    fn pns() -> Vec<Conjunct> {
        vec![
            Conjunct::new(Intervention::set("X", 1), Event::of([("Y", 1)])),
            Conjunct::new(Intervention::set("X", 0), Event::of([("Y", 0)])),
        ]
    }

    fn two_var_family<M: StructuralModel>(m: &M) -> InterventionalFamily {
        let fam = interventional_family(m, &all_interventions(m.variables())).unwrap();
        project_2ve(&fam, "X", "Y").unwrap().to_family().unwrap()
    }

    #[test]
    fn pns_bounds_for_reference_models() {
        let order = vec!["X".to_string(), "Y".to_string()];
        for m in [coins(), two_units()] {
            let b = bound_query(&order, &two_var_family(&m), &CfQuery::joint(pns()), BoundsOptions::default())
                .unwrap();
            assert_eq!((b.lo.clone(), b.hi.clone()), (ratio(0, 1), ratio(1, 2)));
            assert!(!b.collapsed);
            let truth = counterfactual_joint(&m, &pns()).unwrap();
            assert!(b.lo <= truth && truth <= b.hi);
            assert_eq!(counterfactual_joint(&b.argmin, &pns()).unwrap(), b.lo);
            assert_eq!(counterfactual_joint(&b.argmax, &pns()).unwrap(), b.hi);
        }
    }

    #[test]
    fn level2_cell_query_is_pinned() {
        let m = coins();
        let order = m.variables().to_vec();
        let q = CfQuery::joint(vec![Conjunct::new(Intervention::set("X", 1), Event::of([("Y", 1)]))]);
        let b = bound_query(&order, &two_var_family(&m), &q, BoundsOptions::default()).unwrap();
        assert!(b.collapsed);
        assert_eq!(b.lo, ratio(1, 2));
    }

    #[test]
    fn conditional_queries_need_determined_conditions() {
        let m = two_units();
        let order = m.variables().to_vec();
        let fam = two_var_family(&m);
        let ps = CfQuery::joint(vec![Conjunct::new(Intervention::set("X", 1), Event::of([("Y", 1)]))])
            .given(vec![Conjunct::new(Intervention::empty(), Event::of([("X", 0), ("Y", 0)]))]);
        let b = bound_query(&order, &fam, &ps, BoundsOptions::default()).unwrap();
        assert_eq!((b.lo, b.hi), (ratio(0, 1), ratio(1, 1)));
        let undetermined = CfQuery::joint(vec![pns()[0].clone()]).given(pns());
        let err = bound_query(&order, &fam, &undetermined, BoundsOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn unrealizable_data_is_infeasible() {
        let order = vec!["X".to_string(), "Y".to_string()];
        let fam = crate::hierarchy::TwoVarFamily::from_cells(
            "X",
            "Y",
            [[ratio(0, 1), ratio(0, 1)], [ratio(1, 2), ratio(1, 2)]],
            [[ratio(1, 2), ratio(1, 2)], [ratio(0, 1), ratio(0, 1)]],
            [[ratio(0, 1), ratio(0, 1)], [ratio(3, 4), ratio(1, 4)]],
        )
        .unwrap()
        .to_family()
        .unwrap();
        let err = bound_query(&order, &fam, &CfQuery::joint(pns()), BoundsOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn collapse_verdicts() {
        let order = vec!["X".to_string(), "Y".to_string()];
        let opts = BoundsOptions::default();
        let mono = monotonic_example(&order).unwrap();
        let mono_fam = interventional_family(&mono, &all_interventions(&order)).unwrap();
        let v = check_collapse(&order, &mono_fam, &response_interventions(&order), opts).unwrap();
        assert!(v.collapsed, "{v:?}");

        let det = deterministic();
        let det_fam = interventional_family(&det, &all_interventions(&order)).unwrap();
        assert!(check_collapse(&order, &det_fam, &response_interventions(&order), opts).unwrap().collapsed);

        let fig = two_units();
        let fig_fam = interventional_family(&fig, &all_interventions(&order)).unwrap();
        let v = check_collapse(&order, &fig_fam, &response_interventions(&order), opts).unwrap();
        let w = v.witness.unwrap();
        assert!(!v.collapsed);
        assert_eq!((w.lo, w.hi), (ratio(0, 1), ratio(1, 2)));
    }
}
