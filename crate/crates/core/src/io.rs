//! JSON file formats. Every probability is a rational string `"a/b"`.
//!
//! Each artifact has a serde-facing file type (`*File`); input artifacts
//! convert to and from their domain values, reports are built from them.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bounds::{CfQuery, CollapseVerdict, QueryBounds};
use crate::causation::{CausationReport, FeasibilityReport, FeasibilityViolation, GoodnessReport, Roles};
use crate::error::{Error, Result};
use crate::hierarchy::{format_cell_key, parse_cell_key, CounterfactualTable, InterventionalFamily};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::scm::{
    mixed_radix, Conjunct, DistTable, Event, ExoVar, Intervention, Mechanism, ScmModel, StructuralModel, Unit,
    Valuation,
};
use crate::separation::{PairReport, SeparationPlan};
use crate::standard_form::{LinearCombination, ResponseAtom, StandardFormModel};
use crate::verify::{CellSet, Constraint, Hypothesis, SimReport};

/// A rational serialized as `"a/b"`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Q(pub Rational);

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map(Q).map_err(serde::de::Error::custom)
    }
}

/// A possibly undefined rational; `None` is written as `"undefined"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptQ(pub Option<Rational>);

impl Serialize for OptQ {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::rational::serde_opt_str::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for OptQ {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        crate::rational::serde_opt_str::deserialize(d).map(OptQ)
    }
}

fn q(r: &Rational) -> Q {
    Q(r.clone())
}

/// Variable assignment as a JSON object, e.g. `{"X": 1}`.
pub type AssignFile = BTreeMap<String, u8>;

fn assign_file(a: &crate::scm::Assignment) -> AssignFile {
    a.iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn intervention_of(a: &AssignFile) -> Result<Intervention> {
    check_binary(a)?;
    Ok(Intervention::of(a.iter().map(|(k, v)| (k.clone(), *v))))
}

fn event_of(a: &AssignFile) -> Result<Event> {
    check_binary(a)?;
    Ok(Event::of(a.iter().map(|(k, v)| (k.clone(), *v))))
}

fn check_binary(a: &AssignFile) -> Result<()> {
    match a.iter().find(|(_, v)| **v > 1) {
        Some((k, v)) => Err(Error::malformed(format!("`{k}` = {v} is not binary"))),
        None => Ok(()),
    }
}

fn check_known(order: &[String], names: impl IntoIterator<Item = impl AsRef<str>>) -> Result<()> {
    for n in names {
        if !order.iter().any(|v| v == n.as_ref()) {
            return Err(Error::UnknownVariable(n.as_ref().to_string()));
        }
    }
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("file types serialize");
    s.push('\n');
    s
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

// ---------------------------------------------------------------- models

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExoFile {
    pub name: String,
    pub range: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitFile {
    pub p: Q,
    pub assign: BTreeMap<String, u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowFile {
    pub parents: AssignFile,
    pub exo: BTreeMap<String, u32>,
    pub value: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFile {
    pub variables: Vec<String>,
    #[serde(default)]
    pub parents: BTreeMap<String, Vec<String>>,
    pub exo: Vec<ExoFile>,
    #[serde(default)]
    pub exo_parents: BTreeMap<String, Vec<String>>,
    pub units: Vec<UnitFile>,
    pub mechanisms: BTreeMap<String, Vec<RowFile>>,
}

fn radix_index(digits: &[u32], ranges: &[u32]) -> usize {
    digits.iter().zip(ranges).fold(0, |acc, (&d, &r)| acc * r as usize + d as usize)
}

impl From<&ScmModel> for ModelFile {
    fn from(m: &ScmModel) -> Self {
        let vars = m.variables();
        let exo = m.exo_vars();
        let mut parents = BTreeMap::new();
        let mut exo_parents = BTreeMap::new();
        let mut mechanisms = BTreeMap::new();
        for (v, name) in vars.iter().enumerate() {
            let ps: Vec<String> = m.parents(v).iter().map(|&p| vars[p].clone()).collect();
            let us: Vec<String> = m.exo_parents(v).iter().map(|&u| exo[u].name.clone()).collect();
            let ranges: Vec<u32> = m.exo_parents(v).iter().map(|&u| exo[u].range).collect();
            let mut rows = Vec::new();
            for pv in Valuation::all(ps.len()) {
                for (ei, ev) in mixed_radix(&ranges).enumerate() {
                    if let Some(value) = m.mechanism(v).get(&pv, ei) {
                        rows.push(RowFile {
                            parents: ps.iter().cloned().zip(pv.bits().iter().copied()).collect(),
                            exo: us.iter().cloned().zip(ev).collect(),
                            value,
                        });
                    }
                }
            }
            parents.insert(name.clone(), ps);
            exo_parents.insert(name.clone(), us);
            mechanisms.insert(name.clone(), rows);
        }
        ModelFile {
            variables: vars.to_vec(),
            parents,
            exo: exo.iter().map(|u| ExoFile { name: u.name.clone(), range: u.range }).collect(),
            exo_parents,
            units: m
                .units()
                .iter()
                .map(|u| UnitFile {
                    p: q(&u.p),
                    assign: exo.iter().map(|e| e.name.clone()).zip(u.assign.iter().copied()).collect(),
                })
                .collect(),
            mechanisms,
        }
    }
}

impl TryFrom<&ModelFile> for ScmModel {
    type Error = Error;

    /// Name and shape errors fail here; structural defects (missing rows,
    /// bad masses, parent order) are left for the validation report.
    fn try_from(f: &ModelFile) -> Result<ScmModel> {
        let vars = &f.variables;
        let var_index = |name: &String| {
            vars.iter().position(|v| v == name).ok_or_else(|| Error::UnknownVariable(name.clone()))
        };
        let exo_index = |name: &String| {
            f.exo.iter().position(|u| &u.name == name).ok_or_else(|| Error::UnknownVariable(name.clone()))
        };
        check_known(vars, f.parents.keys())?;
        check_known(vars, f.exo_parents.keys())?;
        check_known(vars, f.mechanisms.keys())?;
        let mut parents = Vec::new();
        let mut exo_parents = Vec::new();
        let mut mechanisms = Vec::new();
        for name in vars {
            let ps: Vec<usize> = f
                .parents
                .get(name)
                .map(|ps| ps.iter().map(var_index).collect::<Result<_>>())
                .transpose()?
                .unwrap_or_default();
            let us: Vec<usize> = f
                .exo_parents
                .get(name)
                .map(|us| us.iter().map(exo_index).collect::<Result<_>>())
                .transpose()?
                .unwrap_or_default();
            let ranges: Vec<u32> = us.iter().map(|&u| f.exo[u].range).collect();
            let mut mech = Mechanism::empty(ps.len(), &ranges);
            for row in f.mechanisms.get(name).map(Vec::as_slice).unwrap_or(&[]) {
                if row.value > 1 {
                    return Err(Error::malformed(format!("mechanism for `{name}` has non-binary value")));
                }
                check_binary(&row.parents)?;
                if row.parents.len() != ps.len() || row.exo.len() != us.len() {
                    return Err(Error::malformed(format!("mechanism row for `{name}` has the wrong keys")));
                }
                let pv = ps
                    .iter()
                    .map(|&p| {
                        row.parents
                            .get(&vars[p])
                            .copied()
                            .ok_or_else(|| Error::malformed(format!("row for `{name}` lacks parent `{}`", vars[p])))
                    })
                    .collect::<Result<Vec<u8>>>()?;
                let ev = us
                    .iter()
                    .map(|&u| {
                        let e = &f.exo[u];
                        match row.exo.get(&e.name) {
                            Some(&x) if x < e.range => Ok(x),
                            Some(&x) => Err(Error::malformed(format!("`{}` = {x} is out of range", e.name))),
                            None => Err(Error::malformed(format!("row for `{name}` lacks `{}`", e.name))),
                        }
                    })
                    .collect::<Result<Vec<u32>>>()?;
                let pv = Valuation(pv);
                let ei = radix_index(&ev, &ranges);
                match mech.get(&pv, ei) {
                    Some(old) if old != row.value => {
                        return Err(Error::malformed(format!("conflicting mechanism rows for `{name}`")))
                    }
                    _ => mech.set(&pv, ei, row.value),
                }
            }
            parents.push(ps);
            exo_parents.push(us);
            mechanisms.push(mech);
        }
        let exo: Vec<ExoVar> = f.exo.iter().map(|u| ExoVar { name: u.name.clone(), range: u.range }).collect();
        let units = f
            .units
            .iter()
            .map(|u| {
                if let Some(k) = u.assign.keys().find(|k| !exo.iter().any(|e| &e.name == *k)) {
                    return Err(Error::UnknownVariable(k.clone()));
                }
                let assign = exo
                    .iter()
                    .map(|e| {
                        u.assign
                            .get(&e.name)
                            .copied()
                            .ok_or_else(|| Error::malformed(format!("unit lacks a value for `{}`", e.name)))
                    })
                    .collect::<Result<Vec<u32>>>()?;
                Ok(Unit { assign, p: u.p.0.clone() })
            })
            .collect::<Result<Vec<Unit>>>()?;
        ScmModel::from_parts(vars.clone(), parents, exo, exo_parents, units, mechanisms)
    }
}

pub fn model_to_json(m: &ScmModel) -> String {
    to_json(&ModelFile::from(m))
}

/// Parses a model file. The result may still be invalid; call
/// [`ScmModel::validate`].
pub fn model_from_json(text: &str) -> Result<ScmModel> {
    ScmModel::try_from(&from_json::<ModelFile>(text)?)
}

// ------------------------------------------------------- standard form

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomFile {
    pub p: Q,
    /// Per variable: predecessor bitstring (in order) to response.
    pub responses: BTreeMap<String, BTreeMap<String, u8>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardFormFile {
    pub order: Vec<String>,
    pub atoms: Vec<AtomFile>,
}

fn atom_file(order: &[String], atom: &ResponseAtom, p: &Rational) -> AtomFile {
    let responses = order
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let table = atom
                .responses(i)
                .iter()
                .enumerate()
                .map(|(pred, &r)| (Valuation::from_index(pred, i).to_string(), r))
                .collect();
            (name.clone(), table)
        })
        .collect();
    AtomFile { p: q(p), responses }
}

impl From<&StandardFormModel> for StandardFormFile {
    fn from(m: &StandardFormModel) -> Self {
        StandardFormFile {
            order: m.order().to_vec(),
            atoms: m.atoms().iter().map(|(a, p)| atom_file(m.order(), a, p)).collect(),
        }
    }
}

impl TryFrom<&StandardFormFile> for StandardFormModel {
    type Error = Error;

    fn try_from(f: &StandardFormFile) -> Result<StandardFormModel> {
        let n = f.order.len();
        let mut atoms = Vec::new();
        for a in &f.atoms {
            check_known(&f.order, a.responses.keys())?;
            let mut bits = Vec::with_capacity((1 << n) - 1);
            for (i, name) in f.order.iter().enumerate() {
                let table = a
                    .responses
                    .get(name)
                    .ok_or_else(|| Error::malformed(format!("atom lacks responses for `{name}`")))?;
                if table.len() != 1 << i {
                    return Err(Error::malformed(format!("`{name}` needs {} response entries", 1 << i)));
                }
                for pred in 0..1usize << i {
                    let key = Valuation::from_index(pred, i).to_string();
                    let r = table
                        .get(&key)
                        .ok_or_else(|| Error::malformed(format!("`{name}` lacks response at \"{key}\"")))?;
                    bits.push(*r);
                }
            }
            atoms.push((ResponseAtom::from_bits(bits)?, a.p.0.clone()));
        }
        StandardFormModel::new(f.order.clone(), atoms)
    }
}

pub fn standard_form_to_json(m: &StandardFormModel) -> String {
    to_json(&StandardFormFile::from(m))
}

pub fn standard_form_from_json(text: &str) -> Result<StandardFormModel> {
    StandardFormModel::try_from(&from_json::<StandardFormFile>(text)?)
}

// -------------------------------------------------------------- levels

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistFile {
    pub scope: Vec<String>,
    pub cells: BTreeMap<String, Q>,
}

fn cells_file(t: &DistTable) -> BTreeMap<String, Q> {
    t.cells().iter().map(|(v, p)| (v.to_string(), q(p))).collect()
}

fn table_of(scope: &[String], cells: &BTreeMap<String, Q>) -> Result<DistTable> {
    let mut parsed = Vec::new();
    for (k, p) in cells {
        let v = Valuation::from_bitstring(k)?;
        if v.len() != scope.len() {
            return Err(Error::malformed(format!("cell \"{k}\" does not match the scope")));
        }
        parsed.push((v, p.0.clone()));
    }
    DistTable::new(scope.to_vec(), parsed)
}

impl From<&DistTable> for DistFile {
    fn from(t: &DistTable) -> Self {
        DistFile { scope: t.scope().to_vec(), cells: cells_file(t) }
    }
}

impl TryFrom<&DistFile> for DistTable {
    type Error = Error;

    fn try_from(f: &DistFile) -> Result<DistTable> {
        table_of(&f.scope, &f.cells)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryFile {
    #[serde(rename = "do")]
    pub intervention: AssignFile,
    pub cells: BTreeMap<String, Q>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level2File {
    pub scope: Vec<String>,
    pub entries: Vec<EntryFile>,
}

impl From<&InterventionalFamily> for Level2File {
    fn from(f: &InterventionalFamily) -> Self {
        Level2File {
            scope: f.order().to_vec(),
            entries: f
                .entries()
                .iter()
                .map(|(a, t)| EntryFile { intervention: assign_file(a.targets()), cells: cells_file(t) })
                .collect(),
        }
    }
}

impl TryFrom<&Level2File> for InterventionalFamily {
    type Error = Error;

    fn try_from(f: &Level2File) -> Result<InterventionalFamily> {
        let mut entries = BTreeMap::new();
        for e in &f.entries {
            check_known(&f.scope, e.intervention.keys())?;
            let alpha = intervention_of(&e.intervention)?;
            let table = table_of(&f.scope, &e.cells)?;
            if entries.insert(alpha.clone(), table).is_some() {
                return Err(Error::malformed(format!("duplicate entry for {alpha}")));
            }
        }
        InterventionalFamily::new(f.scope.clone(), entries)
    }
}

pub fn level2_from_json(text: &str) -> Result<InterventionalFamily> {
    InterventionalFamily::try_from(&from_json::<Level2File>(text)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level3File {
    pub scope: Vec<String>,
    pub interventions: Vec<AssignFile>,
    pub cells: BTreeMap<String, Q>,
}

impl From<&CounterfactualTable> for Level3File {
    fn from(t: &CounterfactualTable) -> Self {
        Level3File {
            scope: t.scope().to_vec(),
            interventions: t.interventions().iter().map(|a| assign_file(a.targets())).collect(),
            cells: t.cells().iter().map(|(k, p)| (format_cell_key(k), q(p))).collect(),
        }
    }
}

impl TryFrom<&Level3File> for CounterfactualTable {
    type Error = Error;

    fn try_from(f: &Level3File) -> Result<CounterfactualTable> {
        let mut interventions = Vec::new();
        for a in &f.interventions {
            check_known(&f.scope, a.keys())?;
            interventions.push(intervention_of(a)?);
        }
        let mut cells = Vec::new();
        for (k, p) in &f.cells {
            let key = parse_cell_key(k)?;
            if key.len() != interventions.len() || key.iter().any(|v| v.len() != f.scope.len()) {
                return Err(Error::malformed(format!("cell \"{k}\" does not match the table shape")));
            }
            cells.push((key, p.0.clone()));
        }
        CounterfactualTable::new(interventions, f.scope.clone(), cells)
    }
}

// --------------------------------------------------------------- queries

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjunctFile {
    #[serde(rename = "do")]
    pub intervention: AssignFile,
    pub outcome: AssignFile,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjunctsFile {
    pub conjuncts: Vec<ConjunctFile>,
}

/// A counterfactual query. Both bounds are always reported; the key may be
/// spelled `maximize`, `minimize` or `query`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryFile {
    #[serde(alias = "minimize", alias = "query")]
    pub maximize: ConjunctsFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub given_l2: Option<Level2File>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub condition: Vec<ConjunctFile>,
}

fn conjunct_file(c: &Conjunct) -> ConjunctFile {
    ConjunctFile { intervention: assign_file(c.intervention.targets()), outcome: assign_file(&c.event) }
}

fn conjunct_of(c: &ConjunctFile) -> Result<Conjunct> {
    Ok(Conjunct::new(intervention_of(&c.intervention)?, event_of(&c.outcome)?))
}

impl QueryFile {
    pub fn new(query: &CfQuery, given: Option<&InterventionalFamily>) -> Self {
        QueryFile {
            maximize: ConjunctsFile { conjuncts: query.conjuncts.iter().map(conjunct_file).collect() },
            given_l2: given.map(Level2File::from),
            condition: query.condition.iter().map(conjunct_file).collect(),
        }
    }

    pub fn query(&self) -> Result<CfQuery> {
        let conjuncts = self.maximize.conjuncts.iter().map(conjunct_of).collect::<Result<_>>()?;
        let condition = self.condition.iter().map(conjunct_of).collect::<Result<_>>()?;
        Ok(CfQuery { conjuncts, condition })
    }

    pub fn given(&self) -> Result<Option<InterventionalFamily>> {
        self.given_l2.as_ref().map(InterventionalFamily::try_from).transpose()
    }
}

/// One cylinder (`{"X": 0}`) or a union of cylinders (`[{...}, {...}]`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventFile {
    One(AssignFile),
    Union(Vec<AssignFile>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HypothesisFile {
    All {
        all: Vec<HypothesisFile>,
    },
    Any {
        any: Vec<HypothesisFile>,
    },
    Atom {
        #[serde(rename = "do")]
        intervention: AssignFile,
        event: EventFile,
        gt: Q,
    },
}

impl From<&Hypothesis> for HypothesisFile {
    fn from(h: &Hypothesis) -> Self {
        match h {
            Hypothesis::All(hs) => HypothesisFile::All { all: hs.iter().map(Into::into).collect() },
            Hypothesis::Any(hs) => HypothesisFile::Any { any: hs.iter().map(Into::into).collect() },
            Hypothesis::Atom(c) => HypothesisFile::Atom {
                intervention: assign_file(c.intervention.targets()),
                event: match c.event.0.as_slice() {
                    [one] => EventFile::One(assign_file(one)),
                    many => EventFile::Union(many.iter().map(assign_file).collect()),
                },
                gt: q(&c.gt),
            },
        }
    }
}

impl TryFrom<&HypothesisFile> for Hypothesis {
    type Error = Error;

    fn try_from(f: &HypothesisFile) -> Result<Hypothesis> {
        let h = match f {
            HypothesisFile::All { all } => Hypothesis::All(all.iter().map(Hypothesis::try_from).collect::<Result<_>>()?),
            HypothesisFile::Any { any } => Hypothesis::Any(any.iter().map(Hypothesis::try_from).collect::<Result<_>>()?),
            HypothesisFile::Atom { intervention, event, gt } => {
                let events = match event {
                    EventFile::One(a) => vec![event_of(a)?],
                    EventFile::Union(list) => list.iter().map(event_of).collect::<Result<_>>()?,
                };
                Hypothesis::Atom(Constraint {
                    intervention: intervention_of(intervention)?,
                    event: CellSet(events),
                    gt: gt.0.clone(),
                })
            }
        };
        h.validate()?;
        Ok(h)
    }
}

pub fn hypothesis_from_json(text: &str) -> Result<Hypothesis> {
    Hypothesis::try_from(&from_json::<HypothesisFile>(text)?)
}

// --------------------------------------------------------------- reports

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolesFile {
    pub x: u8,
    pub y: u8,
}

impl From<Roles> for RolesFile {
    fn from(r: Roles) -> Self {
        RolesFile { x: r.x, y: r.y }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausationFile {
    pub treatment: String,
    pub outcome: String,
    pub roles: RolesFile,
    pub pns: Q,
    pub pns_converse: Q,
    pub pn: OptQ,
    pub ps: OptQ,
    pub p_disable: OptQ,
    pub p_enable: OptQ,
}

impl CausationFile {
    pub fn new(r: &CausationReport, x: &str, y: &str, roles: Roles) -> Self {
        CausationFile {
            treatment: x.to_string(),
            outcome: y.to_string(),
            roles: roles.into(),
            pns: q(&r.pns),
            pns_converse: q(&r.pns_converse),
            pn: OptQ(r.pn.clone()),
            ps: OptQ(r.ps.clone()),
            p_disable: OptQ(r.p_disable.clone()),
            p_enable: OptQ(r.p_enable.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationFile {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginFile {
    pub name: String,
    pub value: Q,
    pub binding: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckFile {
    pub treatment: String,
    pub outcome: String,
    pub roles: RolesFile,
    pub feasible: bool,
    pub violations: Vec<ViolationFile>,
    pub good: bool,
    pub margins: Vec<MarginFile>,
}

impl CheckFile {
    pub fn new(x: &str, y: &str, feas: &FeasibilityReport, good: &GoodnessReport) -> Self {
        CheckFile {
            treatment: x.to_string(),
            outcome: y.to_string(),
            roles: good.roles.into(),
            feasible: feas.feasible,
            violations: feas
                .violations
                .iter()
                .map(|v| ViolationFile {
                    kind: match v {
                        FeasibilityViolation::TreatmentNotFixed { .. } => "treatment_not_fixed",
                        FeasibilityViolation::BelowObservational { .. } => "below_observational",
                    }
                    .to_string(),
                    message: v.to_string(),
                })
                .collect(),
            good: good.good,
            margins: GoodnessReport::MARGIN_NAMES
                .iter()
                .enumerate()
                .map(|(i, name)| MarginFile {
                    name: name.to_string(),
                    value: q(&good.margins[i]),
                    binding: good.binding.contains(&i),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsFile {
    pub lo: Q,
    pub hi: Q,
    pub collapsed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmin: Option<StandardFormFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax: Option<StandardFormFile>,
}

impl BoundsFile {
    /// `vertices` includes the optimal models.
    pub fn new(b: &QueryBounds, vertices: bool) -> Self {
        BoundsFile {
            lo: q(&b.lo),
            hi: q(&b.hi),
            collapsed: b.collapsed,
            argmin: vertices.then(|| (&b.argmin).into()),
            argmax: vertices.then(|| (&b.argmax).into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub cell: String,
    pub conjuncts: Vec<ConjunctFile>,
    pub lo: Q,
    pub hi: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseFile {
    pub collapsed: bool,
    pub interventions: Vec<AssignFile>,
    pub cells_checked: usize,
    pub witness: Option<WitnessFile>,
}

impl From<&CollapseVerdict> for CollapseFile {
    fn from(v: &CollapseVerdict) -> Self {
        CollapseFile {
            collapsed: v.collapsed,
            interventions: v.interventions.iter().map(|a| assign_file(a.targets())).collect(),
            cells_checked: v.cells_checked,
            witness: v.witness.as_ref().map(|w| WitnessFile {
                cell: w.cell.clone(),
                conjuncts: w.conjuncts.iter().map(conjunct_file).collect(),
                lo: q(&w.lo),
                hi: q(&w.hi),
            }),
        }
    }
}

/// One coupling pair; the atoms carry their masses in the original model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingFile {
    pub from: AtomFile,
    pub to: AtomFile,
    pub mass: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanFile {
    pub treatment: String,
    pub outcome: String,
    pub roles: RolesFile,
    pub y0: u8,
    pub y1: u8,
    pub omega1: Vec<AtomFile>,
    pub omega2: Vec<AtomFile>,
    pub mass1: Q,
    pub mass2: Q,
    pub delta: Q,
    pub eps1: Q,
    pub eps2: Q,
    pub coupling: Vec<CouplingFile>,
}

impl PlanFile {
    pub fn new(order: &[String], plan: &SeparationPlan) -> Self {
        let s = &plan.sets;
        let atoms = |set: &[(ResponseAtom, Rational)]| set.iter().map(|(a, p)| atom_file(order, a, p)).collect();
        PlanFile {
            treatment: s.x.clone(),
            outcome: s.y.clone(),
            roles: s.roles.into(),
            y0: s.y0,
            y1: s.y1,
            omega1: atoms(&s.omega1),
            omega2: atoms(&s.omega2),
            mass1: q(&s.mass1),
            mass2: q(&s.mass2),
            delta: q(&plan.delta),
            eps1: q(&plan.eps1),
            eps2: q(&plan.eps2),
            coupling: plan
                .coupling
                .iter()
                .map(|(a, b, c)| {
                    let mass_of = |set: &[(ResponseAtom, Rational)], atom: &ResponseAtom| {
                        set.iter().find(|(x, _)| x == atom).map(|(_, p)| p.clone()).unwrap_or_default()
                    };
                    CouplingFile {
                        from: atom_file(order, a, &mass_of(&s.omega1, a)),
                        to: atom_file(order, b, &mass_of(&s.omega2, b)),
                        mass: q(c),
                    }
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonFile {
    pub name: String,
    pub left: OptQ,
    pub right: OptQ,
    pub differs: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFile {
    pub interventions_checked: usize,
    pub level2_equal: bool,
    pub level2_mismatches: Vec<AssignFile>,
    pub causation: Vec<ComparisonFile>,
    pub witness: Option<String>,
    pub magnitude: OptQ,
}

impl From<&PairReport> for PairFile {
    fn from(r: &PairReport) -> Self {
        PairFile {
            interventions_checked: r.interventions_checked,
            level2_equal: r.level2_equal,
            level2_mismatches: r.level2_mismatches.iter().map(|a| assign_file(a.targets())).collect(),
            causation: r
                .causation
                .iter()
                .map(|c| ComparisonFile {
                    name: c.name.to_string(),
                    left: OptQ(c.left.clone()),
                    right: OptQ(c.right.clone()),
                    differs: c.differs,
                })
                .collect(),
            witness: r.witness.as_ref().map(|w| w.0.to_string()),
            magnitude: OptQ(r.witness.as_ref().and_then(|w| w.1.clone())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparateFile {
    pub original: ModelFile,
    pub separated: ModelFile,
    pub plan: PlanFile,
    pub verification: PairFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimRowFile {
    pub n: u64,
    pub thresholds: Vec<u64>,
    pub rejections: u32,
    pub trials: u32,
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimFile {
    pub epsilon: Q,
    pub seed: u64,
    pub constraints: usize,
    pub true_values: Vec<Q>,
    pub true_model_satisfies: bool,
    pub rows: Vec<SimRowFile>,
}

impl From<&SimReport> for SimFile {
    fn from(r: &SimReport) -> Self {
        SimFile {
            epsilon: q(&r.epsilon),
            seed: r.seed,
            constraints: r.constraints,
            true_values: r.true_values.iter().map(q).collect(),
            true_model_satisfies: r.true_model_satisfies,
            rows: r
                .rows
                .iter()
                .map(|row| SimRowFile {
                    n: row.n,
                    thresholds: row.thresholds.clone(),
                    rejections: row.rejections,
                    trials: row.trials,
                    frequency: row.frequency,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermFile {
    pub coefficient: i64,
    #[serde(rename = "do")]
    pub intervention: AssignFile,
    pub event: AssignFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionFile {
    pub terms: Vec<TermFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Q>,
}

impl ReductionFile {
    /// Terms, optionally evaluated against a family.
    pub fn new(comb: &LinearCombination, family: Option<&InterventionalFamily>) -> Result<Self> {
        let mut terms = Vec::new();
        for (c, t) in &comb.terms {
            let value = match family {
                Some(f) => {
                    let table = f
                        .get(&t.intervention)
                        .ok_or_else(|| Error::precondition(format!("family has no entry for {}", t.intervention)))?;
                    Some(q(&table.prob_event(&t.event)?))
                }
                None => None,
            };
            terms.push(TermFile {
                coefficient: *c,
                intervention: assign_file(t.intervention.targets()),
                event: assign_file(&t.event),
                value,
            });
        }
        let value = family.map(|f| comb.evaluate(f)).transpose()?.map(Q);
        Ok(ReductionFile { terms, value })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitFile {
    pub cell: String,
    pub acausal: StandardFormFile,
    pub causal: StandardFormFile,
}
