//! The three levels of the causal hierarchy over a finite model and the
//! projections between them.
//!
//! Level 3 is represented by a [`CounterfactualTable`]: the joint law of the
//! outcomes under a finite list of interventions, all evaluated on the same
//! exogenous unit. Level 2 is an [`InterventionalFamily`] (one distribution
//! per intervention), Level 1 a single observational [`DistTable`].

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};
use crate::scm::{
    interventional, mixed_radix, DistTable, Intervention, Mechanism, ScmModel, StructuralModel,
    Valuation,
};

/// Every partial assignment over `order` (each variable unset, 0 or 1), in
/// canonical intervention order. There are `3^n` of them.
pub fn all_interventions(order: &[String]) -> Vec<Intervention> {
    let ranges = vec![3u32; order.len()];
    let mut out: Vec<Intervention> = mixed_radix(&ranges)
        .map(|digits| {
            Intervention::of(
                order
                    .iter()
                    .zip(digits)
                    .filter(|(_, d)| *d > 0)
                    .map(|(v, d)| (v.clone(), (d - 1) as u8)),
            )
        })
        .collect();
    out.sort();
    out
}

/// Joint distribution of full outcomes under each listed intervention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterfactualTable {
    interventions: Vec<Intervention>,
    scope: Vec<String>,
    cells: BTreeMap<Vec<Valuation>, Rational>,
}

impl CounterfactualTable {
    pub fn new(
        interventions: Vec<Intervention>,
        scope: Vec<String>,
        cells: impl IntoIterator<Item = (Vec<Valuation>, Rational)>,
    ) -> Result<Self> {
        let mut seen = interventions.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != interventions.len() {
            return Err(Error::malformed("duplicate intervention in counterfactual table"));
        }
        let mut map: BTreeMap<Vec<Valuation>, Rational> = BTreeMap::new();
        let mut total = Rational::zero();
        for (key, p) in cells {
            if key.len() != interventions.len() || key.iter().any(|v| v.len() != scope.len()) {
                return Err(Error::malformed("counterfactual cell key has the wrong shape"));
            }
            if p < Rational::zero() {
                return Err(Error::malformed("negative counterfactual cell"));
            }
            total += &p;
            if !p.is_zero() {
                *map.entry(key).or_insert_with(Rational::zero) += p;
            }
        }
        if !total.is_one() {
            return Err(Error::malformed(format!(
                "counterfactual table sums to {}",
                format_rational(&total)
            )));
        }
        Ok(CounterfactualTable { interventions, scope, cells: map })
    }

    pub fn interventions(&self) -> &[Intervention] {
        &self.interventions
    }

    pub fn scope(&self) -> &[String] {
        &self.scope
    }

    pub fn cells(&self) -> &BTreeMap<Vec<Valuation>, Rational> {
        &self.cells
    }

    pub fn prob(&self, key: &[Valuation]) -> Rational {
        self.cells.get(key).cloned().unwrap_or_else(Rational::zero)
    }

    /// Marginal on the `index`-th intervention.
    pub fn marginal(&self, index: usize) -> DistTable {
        let mut out: BTreeMap<Valuation, Rational> = BTreeMap::new();
        for (key, p) in &self.cells {
            *out.entry(key[index].clone()).or_insert_with(Rational::zero) += p;
        }
        DistTable::from_masses(self.scope.clone(), out)
    }
}

/// Formats a composite key as pipe-separated bitstrings, e.g. `"10|01"`.
pub fn format_cell_key(key: &[Valuation]) -> String {
    key.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("|")
}

pub fn parse_cell_key(text: &str) -> Result<Vec<Valuation>> {
    text.split('|').map(Valuation::from_bitstring).collect()
}

impl fmt::Display for CounterfactualTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, p) in &self.cells {
            writeln!(f, "{} {}", format_cell_key(key), format_rational(p))?;
        }
        Ok(())
    }
}

/// A Level-2 point: one outcome distribution per intervention.
///
/// Entries normally cover every variable of `order`; narrower entry scopes
/// are allowed so that partial experimental data (for example a two-variable
/// family inside a larger model) can be expressed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterventionalFamily {
    order: Vec<String>,
    entries: BTreeMap<Intervention, DistTable>,
}

impl InterventionalFamily {
    /// Checks that every entry's scope lies inside `order` and that each
    /// entry puts probability 1 on the values its intervention assigns.
    pub fn new(order: Vec<String>, entries: BTreeMap<Intervention, DistTable>) -> Result<Self> {
        for (alpha, table) in &entries {
            alpha.resolve(&order)?;
            for v in table.scope() {
                if !order.contains(v) {
                    return Err(Error::UnknownVariable(v.clone()));
                }
            }
            for (var, value) in alpha.targets().iter() {
                if let Some(pos) = table.scope().iter().position(|s| s == var) {
                    if table.cells().keys().any(|cell| cell.0[pos] != value) {
                        return Err(Error::malformed(format!(
                            "entry {alpha} gives {var} != {value} positive probability"
                        )));
                    }
                }
            }
        }
        Ok(InterventionalFamily { order, entries })
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    pub fn entries(&self) -> &BTreeMap<Intervention, DistTable> {
        &self.entries
    }

    pub fn get(&self, alpha: &Intervention) -> Option<&DistTable> {
        self.entries.get(alpha)
    }
}

/// The Level-2 family of `model` over the given interventions.
pub fn interventional_family<M: StructuralModel + ?Sized>(
    model: &M,
    interventions: &[Intervention],
) -> Result<InterventionalFamily> {
    let entries = interventions
        .iter()
        .map(|a| Ok((a.clone(), interventional(model, a)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    InterventionalFamily::new(model.variables().to_vec(), entries)
}

/// Level-3 projection restricted to a finite intervention list.
pub fn project_l3<M: StructuralModel + ?Sized>(
    model: &M,
    interventions: &[Intervention],
) -> Result<CounterfactualTable> {
    model.ensure_valid()?;
    let fixed: Vec<Vec<Option<u8>>> = interventions
        .iter()
        .map(|a| a.resolve(model.variables()))
        .collect::<Result<_>>()?;
    let mut cells: BTreeMap<Vec<Valuation>, Rational> = BTreeMap::new();
    for u in 0..model.unit_count() {
        let mass = model.unit_mass(u);
        if mass.is_zero() {
            continue;
        }
        let key: Vec<Valuation> = fixed.iter().map(|f| model.solve(u, f)).collect();
        *cells.entry(key).or_insert_with(Rational::zero) += mass;
    }
    CounterfactualTable::new(interventions.to_vec(), model.variables().to_vec(), cells)
}

/// Per-intervention marginals of a Level-3 table.
pub fn project_l2(table: &CounterfactualTable) -> Result<InterventionalFamily> {
    if !table.interventions.iter().any(Intervention::is_empty) {
        return Err(Error::precondition(
            "counterfactual table has no passive (empty) intervention",
        ));
    }
    let entries = table
        .interventions
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), table.marginal(i)))
        .collect();
    InterventionalFamily::new(table.scope.clone(), entries)
}

/// The observational entry of a Level-2 family.
pub fn project_l1(family: &InterventionalFamily) -> Result<DistTable> {
    family
        .entries
        .get(&Intervention::empty())
        .cloned()
        .ok_or_else(|| Error::precondition("family has no observational entry"))
}

/// The observational and two single-treatment distributions of `(X, Y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoVarFamily {
    pub x: String,
    pub y: String,
    pub obs: DistTable,
    pub do_x0: DistTable,
    pub do_x1: DistTable,
}

impl TwoVarFamily {
    /// Tables must be over `[x, y]` in that order; no other check is made so
    /// that infeasible families can be represented and diagnosed.
    pub fn new(x: &str, y: &str, obs: DistTable, do_x0: DistTable, do_x1: DistTable) -> Result<Self> {
        let scope = [x.to_string(), y.to_string()];
        if x == y {
            return Err(Error::malformed("treatment and outcome must differ"));
        }
        for t in [&obs, &do_x0, &do_x1] {
            if t.scope() != scope {
                return Err(Error::malformed(format!("two-variable tables must be over [{x}, {y}]")));
            }
        }
        Ok(TwoVarFamily { x: x.to_string(), y: y.to_string(), obs, do_x0, do_x1 })
    }

    /// Builds the family from cell masses indexed by `(x, y)` bit pairs.
    pub fn from_cells(
        x: &str,
        y: &str,
        obs: [[Rational; 2]; 2],
        do_x0: [[Rational; 2]; 2],
        do_x1: [[Rational; 2]; 2],
    ) -> Result<Self> {
        let scope = vec![x.to_string(), y.to_string()];
        let table = |m: [[Rational; 2]; 2]| {
            let cells = m.into_iter().enumerate().flat_map(|(xv, row)| {
                row.into_iter()
                    .enumerate()
                    .map(move |(yv, p)| (Valuation(vec![xv as u8, yv as u8]), p))
            });
            DistTable::new(scope.clone(), cells)
        };
        TwoVarFamily::new(x, y, table(obs)?, table(do_x0)?, table(do_x1)?)
    }

    pub fn do_x(&self, x: u8) -> &DistTable {
        if x == 0 {
            &self.do_x0
        } else {
            &self.do_x1
        }
    }

    /// As an [`InterventionalFamily`] over `[x, y]`.
    pub fn to_family(&self) -> Result<InterventionalFamily> {
        let entries = [
            (Intervention::empty(), self.obs.clone()),
            (Intervention::set(&self.x, 0), self.do_x0.clone()),
            (Intervention::set(&self.x, 1), self.do_x1.clone()),
        ];
        InterventionalFamily::new(vec![self.x.clone(), self.y.clone()], entries.into_iter().collect())
    }
}

/// Restricts a family to `∅`, `do(X=0)`, `do(X=1)` and marginalizes to `{X, Y}`.
pub fn project_2ve(family: &InterventionalFamily, x: &str, y: &str) -> Result<TwoVarFamily> {
    let vars = [x.to_string(), y.to_string()];
    let pick = |alpha: Intervention| -> Result<DistTable> {
        family
            .entries
            .get(&alpha)
            .ok_or_else(|| Error::precondition(format!("family lacks the {alpha} entry")))?
            .marginal(&vars)
    };
    TwoVarFamily::new(
        x,
        y,
        pick(Intervention::empty())?,
        pick(Intervention::set(x, 0))?,
        pick(Intervention::set(x, 1))?,
    )
}

/// Name of the copy of `var` living in the world of `alpha`.
pub fn twin_name(alpha: &Intervention, var: &str) -> String {
    format!("{var}@{alpha}")
}

/// The counterfactual model: one copy of every endogenous variable per
/// listed intervention, all driven by the same exogenous units.
///
/// Copy `(α, V)` takes parents `(α, Pa(V))`; it is constant at `α(V)` when
/// `α` intervenes on `V` and otherwise reuses `V`'s mechanism table.
pub fn twin_model(model: &ScmModel, interventions: &[Intervention]) -> Result<ScmModel> {
    model.ensure_valid()?;
    if interventions.is_empty() {
        return Err(Error::malformed("twin model needs at least one intervention"));
    }
    let mut seen = interventions.to_vec();
    seen.sort();
    seen.dedup();
    if seen.len() != interventions.len() {
        return Err(Error::malformed("duplicate intervention in twin model request"));
    }
    let order = model.variables();
    let n = order.len();
    let mut variables = Vec::new();
    let mut parents = Vec::new();
    let mut exo_parents = Vec::new();
    let mut mechanisms = Vec::new();
    for (a, alpha) in interventions.iter().enumerate() {
        let fixed = alpha.resolve(order)?;
        for v in 0..n {
            variables.push(twin_name(alpha, &order[v]));
            parents.push(model.parents(v).iter().map(|&p| a * n + p).collect());
            exo_parents.push(model.exo_parents(v).to_vec());
            let mech = match fixed[v] {
                Some(value) => {
                    let ranges: Vec<u32> = model
                        .exo_parents(v)
                        .iter()
                        .map(|&u| model.exo_vars()[u].range)
                        .collect();
                    let mut m = Mechanism::empty(model.parents(v).len(), &ranges);
                    let exo_size = ranges.iter().map(|&r| r as usize).product::<usize>();
                    for pv in Valuation::all(model.parents(v).len()) {
                        for e in 0..exo_size {
                            m.set(&pv, e, value);
                        }
                    }
                    m
                }
                None => model.mechanism(v).clone(),
            };
            mechanisms.push(mech);
        }
    }
    ScmModel::from_parts(
        variables,
        parents,
        model.exo_vars().to_vec(),
        exo_parents,
        model.units().to_vec(),
        mechanisms,
    )
}

/// Reshapes the observational table of a twin model into a Level-3 table.
pub fn twin_to_table(
    twin_obs: &DistTable,
    interventions: &[Intervention],
    scope: &[String],
) -> Result<CounterfactualTable> {
    let n = scope.len();
    if twin_obs.scope().len() != n * interventions.len() {
        return Err(Error::malformed("twin table width does not match the request"));
    }
    let cells = twin_obs.cells().iter().map(|(v, p)| {
        let key = v.0.chunks(n).map(|c| Valuation(c.to_vec())).collect();
        (key, p.clone())
    });
    CounterfactualTable::new(interventions.to_vec(), scope.to_vec(), cells)
}
