//! Finite structural causal models over binary variables.
//!
//! A model lists its endogenous variables in a fixed total order; every
//! parent must come earlier in that order, so a single forward pass solves
//! the structural equations for any exogenous unit. Exogenous noise is an
//! explicit list of units (full exogenous valuations) with exact masses.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, Rational};

/// A joint valuation of an ordered variable list, one bit per variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Valuation(pub Vec<u8>);

impl Valuation {
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        bits.bytes()
            .map(|b| match b {
                b'0' => Ok(0),
                b'1' => Ok(1),
                _ => Err(Error::Parse(format!("invalid bitstring {bits:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Valuation)
    }

    /// The valuation of `width` variables whose bits spell `index` with the
    /// first variable as the most significant bit.
    pub fn from_index(index: usize, width: usize) -> Self {
        Valuation((0..width).map(|i| ((index >> (width - 1 - i)) & 1) as u8).collect())
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All `2^width` valuations in bitstring order.
    pub fn all(width: usize) -> impl Iterator<Item = Valuation> {
        (0..1usize << width).map(move |i| Valuation::from_index(i, width))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// A partial assignment of binary values to named variables. Used both for
/// the targets of an intervention and for outcome events.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Assignment(BTreeMap<String, u8>);

pub type Event = Assignment;

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn of<S: Into<String>>(pairs: impl IntoIterator<Item = (S, u8)>) -> Self {
        let mut out = Self::new();
        for (k, v) in pairs {
            out = out.with(k, v);
        }
        out
    }

    /// Adds `var = value`. Values other than 0/1 are a programming error.
    pub fn with(mut self, var: impl Into<String>, value: u8) -> Self {
        assert!(value <= 1, "binary variables only take values 0 and 1");
        self.0.insert(var.into(), value);
        self
    }

    pub fn get(&self, var: &str) -> Option<u8> {
        self.0.get(var).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u8)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn as_map(&self) -> &BTreeMap<String, u8> {
        &self.0
    }

    /// Per-position values over `order`; unknown names are an error.
    pub fn resolve(&self, order: &[String]) -> Result<Vec<Option<u8>>> {
        let mut out = vec![None; order.len()];
        for (name, value) in &self.0 {
            let idx = order
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| Error::UnknownVariable(name.clone()))?;
            out[idx] = Some(*value);
        }
        Ok(out)
    }

    /// Whether `valuation` (over `order`) satisfies every entry. Names are
    /// assumed to be resolvable.
    pub fn holds_in(&self, order: &[String], valuation: &Valuation) -> Result<bool> {
        let resolved = self.resolve(order)?;
        Ok(matches(&resolved, valuation))
    }
}

pub(crate) fn matches(resolved: &[Option<u8>], valuation: &Valuation) -> bool {
    resolved
        .iter()
        .zip(valuation.bits())
        .all(|(want, got)| want.is_none_or(|w| w == *got))
}

impl From<BTreeMap<String, u8>> for Assignment {
    fn from(map: BTreeMap<String, u8>) -> Self {
        Assignment(map)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// A `do(W := w)` operation: the listed variables are held at fixed values.
/// The empty intervention is passive observation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Intervention(pub Assignment);

impl Intervention {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn of<S: Into<String>>(pairs: impl IntoIterator<Item = (S, u8)>) -> Self {
        Intervention(Assignment::of(pairs))
    }

    pub fn set(var: impl Into<String>, value: u8) -> Self {
        Intervention(Assignment::new().with(var, value))
    }

    pub fn targets(&self) -> &Assignment {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, var: &str) -> Option<u8> {
        self.0.get(var)
    }

    pub fn resolve(&self, order: &[String]) -> Result<Vec<Option<u8>>> {
        self.0.resolve(order)
    }

    /// Combined intervention; on conflicting targets `other` wins.
    pub fn union(&self, other: &Intervention) -> Intervention {
        let mut map = self.0.as_map().clone();
        map.extend(other.0.iter().map(|(k, v)| (k.to_string(), v)));
        Intervention(Assignment(map))
    }
}

impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "do({})", self.0)
    }
}

impl FromStr for Intervention {
    type Err = Error;

    /// Accepts `do()`, `do(X=1,Y=0)`, `do X=1, Y=0` and `{}`.
    fn from_str(s: &str) -> Result<Self> {
        let mut body = s.trim();
        if let Some(rest) = body.strip_prefix("do") {
            body = rest.trim();
        }
        let body = body
            .strip_prefix('(')
            .and_then(|b| b.strip_suffix(')'))
            .or_else(|| body.strip_prefix('{').and_then(|b| b.strip_suffix('}')))
            .unwrap_or(body);
        let mut out = Assignment::new();
        for part in body.split([',', ' ']).map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected VAR=0|1 in {s:?}")))?;
            let value = match value.trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::Parse(format!("value {other:?} is not binary"))),
            };
            out = out.with(name.trim(), value);
        }
        Ok(Intervention(out))
    }
}

/// Parses a `;`-separated intervention list such as `"do X=1; do X=0"`.
pub fn parse_intervention_list(s: &str) -> Result<Vec<Intervention>> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(Intervention::from_str)
        .collect()
}

/// Anything that behaves like a finite-unit SCM: a list of weighted units,
/// each deterministically solvable under any intervention.
pub trait StructuralModel {
    fn variables(&self) -> &[String];

    fn unit_count(&self) -> usize;

    fn unit_mass(&self, unit: usize) -> &Rational;

    /// Solution of the manipulated equations for `unit`; `fixed[i]` holds
    /// the intervened value of variable `i`, if any.
    fn solve(&self, unit: usize, fixed: &[Option<u8>]) -> Valuation;

    /// Rejects models whose equations cannot be evaluated.
    fn ensure_valid(&self) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExoVar {
    pub name: String,
    pub range: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unit {
    /// One value per exogenous variable, in declaration order.
    pub assign: Vec<u32>,
    pub p: Rational,
}

/// Lookup table from (parent valuation, exogenous-parent valuation) to a
/// value. Rows are stored densely: the parent valuation's bit index times
/// the exogenous domain size plus the mixed-radix exogenous index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mechanism {
    rows: Vec<Option<u8>>,
    exo_size: usize,
}

impl Mechanism {
    pub(crate) fn empty(parent_count: usize, exo_ranges: &[u32]) -> Self {
        let exo_size = exo_ranges.iter().map(|&r| r as usize).product::<usize>();
        Mechanism {
            rows: vec![None; (1usize << parent_count) * exo_size],
            exo_size,
        }
    }

    fn slot(&self, parents: &Valuation, exo_index: usize) -> usize {
        parents.index() * self.exo_size + exo_index
    }

    pub fn get(&self, parents: &Valuation, exo_index: usize) -> Option<u8> {
        self.rows.get(self.slot(parents, exo_index)).copied().flatten()
    }

    pub(crate) fn set(&mut self, parents: &Valuation, exo_index: usize, value: u8) {
        let slot = self.slot(parents, exo_index);
        self.rows[slot] = Some(value);
    }

    fn missing(&self) -> usize {
        self.rows.iter().filter(|r| r.is_none()).count()
    }

    fn constant(parent_count: usize, exo_ranges: &[u32], value: u8) -> Self {
        let mut m = Mechanism::empty(parent_count, exo_ranges);
        m.rows.iter_mut().for_each(|r| *r = Some(value));
        m
    }
}

/// Mixed-radix index of an exogenous valuation restricted to `vars`.
fn exo_index(assign: &[u32], vars: &[usize], exo: &[ExoVar]) -> usize {
    vars.iter()
        .fold(0, |acc, &u| acc * exo[u].range as usize + assign[u] as usize)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    ProbabilitySum { total: Rational },
    NegativeProbability { unit: usize, p: Rational },
    ParentOrder { variable: String, parent: String },
    PartialMechanism { variable: String, missing_rows: usize },
    ExoValueOutOfRange { unit: usize, exo: String, value: u32 },
    DuplicateVariable { name: String },
    DuplicateUnit { unit: usize },
    NoUnits,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ProbabilitySum { total } => {
                write!(f, "unit probabilities sum to {} instead of 1", format_rational(total))
            }
            Violation::NegativeProbability { unit, p } => {
                write!(f, "unit {unit} has negative probability {}", format_rational(p))
            }
            Violation::ParentOrder { variable, parent } => write!(
                f,
                "parent `{parent}` of `{variable}` does not precede it in the variable order"
            ),
            Violation::PartialMechanism { variable, missing_rows } => {
                write!(f, "mechanism for `{variable}` is missing {missing_rows} row(s)")
            }
            Violation::ExoValueOutOfRange { unit, exo, value } => {
                write!(f, "unit {unit} assigns {value} to `{exo}`, outside its range")
            }
            Violation::DuplicateVariable { name } => write!(f, "variable `{name}` declared twice"),
            Violation::DuplicateUnit { unit } => {
                write!(f, "unit {unit} repeats an earlier exogenous valuation")
            }
            Violation::NoUnits => write!(f, "model has no exogenous units"),
        }
    }
}

/// Every problem found in a model. Empty iff the model is valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// An explicit finite SCM.
///
/// The variable list fixes the total order used for solving. A model may be
/// constructed with defects (a parent listed after its child, a partial
/// mechanism table, unnormalized noise) so that [`ScmModel::validate`] can
/// report them; every evaluating operation refuses invalid models.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScmModel {
    variables: Vec<String>,
    parents: Vec<Vec<usize>>,
    exo: Vec<ExoVar>,
    exo_parents: Vec<Vec<usize>>,
    units: Vec<Unit>,
    mechanisms: Vec<Mechanism>,
    report: ValidationReport,
}

impl ScmModel {
    /// Assembles a model from resolved parts. Name resolution failures are
    /// hard errors; structural defects end up in the validation report.
    pub fn from_parts(
        variables: Vec<String>,
        parents: Vec<Vec<usize>>,
        exo: Vec<ExoVar>,
        exo_parents: Vec<Vec<usize>>,
        units: Vec<Unit>,
        mechanisms: Vec<Mechanism>,
    ) -> Result<Self> {
        let n = variables.len();
        if parents.len() != n || exo_parents.len() != n || mechanisms.len() != n {
            return Err(Error::malformed("per-variable lists must match the variable count"));
        }
        if parents.iter().flatten().any(|&p| p >= n)
            || exo_parents.iter().flatten().any(|&u| u >= exo.len())
        {
            return Err(Error::malformed("parent index out of range"));
        }
        if units.iter().any(|u| u.assign.len() != exo.len()) {
            return Err(Error::malformed("unit valuation length differs from exogenous count"));
        }
        let mut model = ScmModel {
            variables,
            parents,
            exo,
            exo_parents,
            units,
            mechanisms,
            report: ValidationReport::default(),
        };
        model.report = model.compute_report();
        Ok(model)
    }

    pub fn builder() -> ScmBuilder {
        ScmBuilder::default()
    }

    pub fn parents(&self, var: usize) -> &[usize] {
        &self.parents[var]
    }

    pub fn exo_vars(&self) -> &[ExoVar] {
        &self.exo
    }

    pub fn exo_parents(&self, var: usize) -> &[usize] {
        &self.exo_parents[var]
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn mechanism(&self, var: usize) -> &Mechanism {
        &self.mechanisms[var]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Non-aborting check; lists every violation at once.
    pub fn validate(&self) -> ValidationReport {
        self.report.clone()
    }

    pub fn is_valid(&self) -> bool {
        self.report.is_valid()
    }

    fn compute_report(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut seen = BTreeSet::new();
        for name in &self.variables {
            if !seen.insert(name) {
                violations.push(Violation::DuplicateVariable { name: name.clone() });
            }
        }
        if self.units.is_empty() {
            violations.push(Violation::NoUnits);
        }
        let mut total = Rational::zero();
        let mut seen_units = HashMap::new();
        for (i, unit) in self.units.iter().enumerate() {
            if unit.p.is_negative() {
                violations.push(Violation::NegativeProbability { unit: i, p: unit.p.clone() });
            }
            total += &unit.p;
            for (u, &value) in unit.assign.iter().enumerate() {
                if value >= self.exo[u].range {
                    violations.push(Violation::ExoValueOutOfRange {
                        unit: i,
                        exo: self.exo[u].name.clone(),
                        value,
                    });
                }
            }
            if seen_units.insert(unit.assign.clone(), i).is_some() {
                violations.push(Violation::DuplicateUnit { unit: i });
            }
        }
        if !self.units.is_empty() && !total.is_one() {
            violations.push(Violation::ProbabilitySum { total });
        }
        for (v, parents) in self.parents.iter().enumerate() {
            for &p in parents {
                if p >= v {
                    violations.push(Violation::ParentOrder {
                        variable: self.variables[v].clone(),
                        parent: self.variables[p].clone(),
                    });
                }
            }
            let missing = self.mechanisms[v].missing();
            if missing > 0 {
                violations.push(Violation::PartialMechanism {
                    variable: self.variables[v].clone(),
                    missing_rows: missing,
                });
            }
        }
        ValidationReport { violations }
    }

    /// Solves the (manipulated) equations for an explicit exogenous valuation.
    pub fn solve_unit(&self, intervention: &Intervention, unit: &[u32]) -> Result<Valuation> {
        self.ensure_valid()?;
        let idx = self
            .units
            .iter()
            .position(|u| u.assign == unit)
            .ok_or_else(|| Error::UnknownUnit(unit.to_vec()))?;
        let fixed = intervention.resolve(&self.variables)?;
        Ok(self.solve(idx, &fixed))
    }

    /// The manipulated model: intervened variables get constant mechanisms
    /// (keeping their declared parents), everything else is unchanged.
    pub fn manipulate(&self, intervention: &Intervention) -> Result<ScmModel> {
        let fixed = intervention.resolve(&self.variables)?;
        let mut out = self.clone();
        for (v, value) in fixed.iter().enumerate() {
            if let Some(value) = value {
                let ranges: Vec<u32> =
                    self.exo_parents[v].iter().map(|&u| self.exo[u].range).collect();
                out.mechanisms[v] = Mechanism::constant(self.parents[v].len(), &ranges, *value);
            }
        }
        out.report = out.compute_report();
        Ok(out)
    }

    /// Same model with units permuted; used to check label invariance.
    pub fn with_units(&self, units: Vec<Unit>) -> Result<ScmModel> {
        ScmModel::from_parts(
            self.variables.clone(),
            self.parents.clone(),
            self.exo.clone(),
            self.exo_parents.clone(),
            units,
            self.mechanisms.clone(),
        )
    }
}

impl StructuralModel for ScmModel {
    fn variables(&self) -> &[String] {
        &self.variables
    }

    fn unit_count(&self) -> usize {
        self.units.len()
    }

    fn unit_mass(&self, unit: usize) -> &Rational {
        &self.units[unit].p
    }

    fn solve(&self, unit: usize, fixed: &[Option<u8>]) -> Valuation {
        let assign = &self.units[unit].assign;
        let mut values = Vec::with_capacity(self.variables.len());
        for v in 0..self.variables.len() {
            let value = match fixed[v] {
                Some(value) => value,
                None => {
                    let parents = Valuation(self.parents[v].iter().map(|&p| values[p]).collect());
                    let ex = exo_index(assign, &self.exo_parents[v], &self.exo);
                    self.mechanisms[v]
                        .get(&parents, ex)
                        .expect("validated mechanism tables are total")
                }
            };
            values.push(value);
        }
        Valuation(values)
    }

    fn ensure_valid(&self) -> Result<()> {
        if self.report.is_valid() {
            Ok(())
        } else {
            Err(Error::Validation(self.report.clone()))
        }
    }
}

/// Incremental construction of an [`ScmModel`] with mechanisms given as
/// closures, evaluated over their whole domain.
#[derive(Default)]
pub struct ScmBuilder {
    variables: Vec<String>,
    parents: Vec<Vec<String>>,
    exo_parents: Vec<Vec<String>>,
    funcs: Vec<Box<dyn Fn(&[u8], &[u32]) -> u8>>,
    exo: Vec<ExoVar>,
    units: Vec<Unit>,
    uniform: bool,
}

impl ScmBuilder {
    pub fn exo(mut self, name: &str, range: u32) -> Self {
        self.exo.push(ExoVar { name: name.to_string(), range });
        self
    }

    /// Declares an endogenous variable. The closure receives the parent
    /// values (in the listed order) and exogenous-parent values.
    pub fn variable(
        mut self,
        name: &str,
        parents: &[&str],
        exo_parents: &[&str],
        f: impl Fn(&[u8], &[u32]) -> u8 + 'static,
    ) -> Self {
        self.variables.push(name.to_string());
        self.parents.push(parents.iter().map(|s| s.to_string()).collect());
        self.exo_parents.push(exo_parents.iter().map(|s| s.to_string()).collect());
        self.funcs.push(Box::new(f));
        self
    }

    pub fn unit(mut self, assign: &[u32], p: Rational) -> Self {
        self.units.push(Unit { assign: assign.to_vec(), p });
        self
    }

    /// One unit per exogenous valuation, all equally likely.
    pub fn uniform_units(mut self) -> Self {
        self.uniform = true;
        self
    }

    pub fn build(self) -> Result<ScmModel> {
        let find_var = |name: &String| {
            self.variables
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| Error::UnknownVariable(name.clone()))
        };
        let find_exo = |name: &String| {
            self.exo
                .iter()
                .position(|u| &u.name == name)
                .ok_or_else(|| Error::UnknownVariable(name.clone()))
        };
        let parents: Vec<Vec<usize>> = self
            .parents
            .iter()
            .map(|ps| ps.iter().map(find_var).collect())
            .collect::<Result<_>>()?;
        let exo_parents: Vec<Vec<usize>> = self
            .exo_parents
            .iter()
            .map(|us| us.iter().map(find_exo).collect())
            .collect::<Result<_>>()?;
        let mut mechanisms = Vec::with_capacity(self.variables.len());
        for (v, f) in self.funcs.iter().enumerate() {
            let ranges: Vec<u32> = exo_parents[v].iter().map(|&u| self.exo[u].range).collect();
            let mut mech = Mechanism::empty(parents[v].len(), &ranges);
            for pv in Valuation::all(parents[v].len()) {
                for (ei, ev) in mixed_radix(&ranges).enumerate() {
                    let value = f(pv.bits(), &ev);
                    if value > 1 {
                        return Err(Error::malformed(format!(
                            "mechanism for `{}` returned non-binary {value}",
                            self.variables[v]
                        )));
                    }
                    mech.set(&pv, ei, value);
                }
            }
            mechanisms.push(mech);
        }
        let units = if self.uniform {
            let ranges: Vec<u32> = self.exo.iter().map(|u| u.range).collect();
            let all: Vec<Vec<u32>> = mixed_radix(&ranges).collect();
            let p = Rational::new(1.into(), (all.len() as i64).into());
            all.into_iter().map(|assign| Unit { assign, p: p.clone() }).collect()
        } else {
            self.units
        };
        ScmModel::from_parts(self.variables, parents, self.exo, exo_parents, units, mechanisms)
    }
}

/// All valuations of variables with the given ranges, last digit fastest.
pub fn mixed_radix(ranges: &[u32]) -> impl Iterator<Item = Vec<u32>> + '_ {
    let total: usize = ranges.iter().map(|&r| r as usize).product();
    (0..total).map(move |mut i| {
        let mut digits = vec![0u32; ranges.len()];
        for (d, &r) in digits.iter_mut().zip(ranges).rev() {
            *d = (i % r as usize) as u32;
            i /= r as usize;
        }
        digits
    })
}

/// A distribution over joint valuations of `scope`. Only positive cells
/// are stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistTable {
    scope: Vec<String>,
    cells: BTreeMap<Valuation, Rational>,
}

impl DistTable {
    pub fn new(scope: Vec<String>, cells: impl IntoIterator<Item = (Valuation, Rational)>) -> Result<Self> {
        let mut map: BTreeMap<Valuation, Rational> = BTreeMap::new();
        let mut total = Rational::zero();
        for (v, p) in cells {
            if v.len() != scope.len() {
                return Err(Error::malformed(format!(
                    "cell {v} does not match scope of {} variables",
                    scope.len()
                )));
            }
            if p.is_negative() {
                return Err(Error::malformed(format!("negative cell value at {v}")));
            }
            total += &p;
            if !p.is_zero() {
                *map.entry(v).or_insert_with(Rational::zero) += p;
            }
        }
        if !total.is_one() {
            return Err(Error::malformed(format!(
                "distribution sums to {} instead of 1",
                format_rational(&total)
            )));
        }
        Ok(DistTable { scope, cells: map })
    }

    pub fn point_mass(scope: Vec<String>, at: Valuation) -> Result<Self> {
        DistTable::new(scope, [(at, Rational::one())])
    }

    pub(crate) fn from_masses(scope: Vec<String>, cells: BTreeMap<Valuation, Rational>) -> Self {
        DistTable { scope, cells: cells.into_iter().filter(|(_, p)| !p.is_zero()).collect() }
    }

    pub fn scope(&self) -> &[String] {
        &self.scope
    }

    pub fn cells(&self) -> &BTreeMap<Valuation, Rational> {
        &self.cells
    }

    pub fn prob(&self, at: &Valuation) -> Rational {
        self.cells.get(at).cloned().unwrap_or_else(Rational::zero)
    }

    /// Probability of a partial event over variables in scope.
    pub fn prob_event(&self, event: &Event) -> Result<Rational> {
        let resolved = event.resolve(&self.scope)?;
        Ok(self
            .cells
            .iter()
            .filter(|(v, _)| matches(&resolved, v))
            .map(|(_, p)| p)
            .sum())
    }

    pub fn marginal(&self, vars: &[String]) -> Result<DistTable> {
        let idx: Vec<usize> = vars
            .iter()
            .map(|v| {
                self.scope
                    .iter()
                    .position(|s| s == v)
                    .ok_or_else(|| Error::UnknownVariable(v.clone()))
            })
            .collect::<Result<_>>()?;
        let mut out: BTreeMap<Valuation, Rational> = BTreeMap::new();
        for (v, p) in &self.cells {
            let key = Valuation(idx.iter().map(|&i| v.0[i]).collect());
            *out.entry(key).or_insert_with(Rational::zero) += p;
        }
        Ok(DistTable { scope: vars.to_vec(), cells: out })
    }
}

/// The observational distribution: unit masses pushed through the
/// unmanipulated equations.
pub fn observational<M: StructuralModel + ?Sized>(model: &M) -> Result<DistTable> {
    interventional(model, &Intervention::empty())
}

/// The distribution of the manipulated model under `intervention`.
pub fn interventional<M: StructuralModel + ?Sized>(
    model: &M,
    intervention: &Intervention,
) -> Result<DistTable> {
    model.ensure_valid()?;
    let fixed = intervention.resolve(model.variables())?;
    let mut cells: BTreeMap<Valuation, Rational> = BTreeMap::new();
    for u in 0..model.unit_count() {
        let mass = model.unit_mass(u);
        if mass.is_zero() {
            continue;
        }
        *cells.entry(model.solve(u, &fixed)).or_insert_with(Rational::zero) += mass;
    }
    Ok(DistTable::from_masses(model.variables().to_vec(), cells))
}

/// One conjunct of a counterfactual event: the outcome `event` in the world
/// where `intervention` was applied.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Conjunct {
    pub intervention: Intervention,
    pub event: Event,
}

impl Conjunct {
    pub fn new(intervention: Intervention, event: Event) -> Self {
        Conjunct { intervention, event }
    }
}

impl fmt::Display for Conjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]@{}", self.event, self.intervention)
    }
}

/// Total mass of the units that satisfy every conjunct in its own
/// manipulated world (the finite sum formula).
pub fn counterfactual_joint<M: StructuralModel + ?Sized>(
    model: &M,
    conjuncts: &[Conjunct],
) -> Result<Rational> {
    model.ensure_valid()?;
    let order = model.variables();
    let resolved: Vec<(Vec<Option<u8>>, Vec<Option<u8>>)> = conjuncts
        .iter()
        .map(|c| Ok((c.intervention.resolve(order)?, c.event.resolve(order)?)))
        .collect::<Result<_>>()?;
    let mut total = Rational::zero();
    for u in 0..model.unit_count() {
        let mass = model.unit_mass(u);
        if mass.is_zero() {
            continue;
        }
        let mut cache: HashMap<&[Option<u8>], Valuation> = HashMap::new();
        let ok = resolved.iter().all(|(fixed, event)| {
            let sol = cache
                .entry(fixed.as_slice())
                .or_insert_with(|| model.solve(u, fixed));
            matches(event, sol)
        });
        if ok {
            total += mass;
        }
    }
    Ok(total)
}
