//! Coverage input model: test objects, suites, and the per-kind coverage index.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::bitset::BitSet;
use crate::xpath::{self, XPathError};

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate test id `{0}`")]
    DuplicateId(String),
    #[error("test `{test_id}` step {position}: {message}")]
    InvalidObject {
        test_id: String,
        position: usize,
        message: String,
    },
    #[error("test `{test_id}`: {message}")]
    InvalidTest { test_id: String, message: String },
    #[error("test suite is empty")]
    EmptySuite,
}

impl CoverageError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        CoverageError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// One interacted UI element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TestObject {
    pub page_url: String,
    pub xpath: String,
    pub tag: String,
    pub segment_id: String,
    skeleton: String,
}

impl TestObject {
    pub fn new(
        page_url: impl Into<String>,
        xpath: impl Into<String>,
        tag: impl Into<String>,
        segment_id: impl Into<String>,
    ) -> Result<Self, ObjectError> {
        let xpath = xpath.into();
        let tag = tag.into();
        let segment_id = segment_id.into();
        let skeleton = xpath::extract_skeleton(&xpath)?;
        let last = xpath::final_element_name(&xpath)?;
        if tag != last {
            return Err(ObjectError::TagMismatch {
                tag,
                element: last.to_string(),
            });
        }
        if tag.chars().any(|c| c.is_ascii_uppercase()) {
            return Err(ObjectError::TagNotLowercase(tag));
        }
        if segment_id.is_empty() {
            return Err(ObjectError::EmptySegment);
        }
        Ok(Self {
            page_url: page_url.into(),
            xpath,
            tag,
            segment_id,
            skeleton,
        })
    }

    /// XPath with positional predicates removed.
    pub fn skeleton(&self) -> &str {
        &self.skeleton
    }

    /// Canonical key of this object's entity of the given kind.
    pub fn entity_key(&self, kind: EntityKind) -> EntityKey {
        let key = match kind {
            EntityKind::Segment => canonical(&[&self.page_url, &self.segment_id]),
            EntityKind::Sibling => canonical(&[&self.page_url, &self.segment_id, &self.skeleton]),
            EntityKind::ObjectType => canonical(&[&self.tag]),
            EntityKind::Object => canonical(&[&self.page_url, &self.xpath]),
        };
        EntityKey { kind, key }
    }
}

fn canonical(parts: &[&str]) -> String {
    serde_json::to_string(parts).expect("string arrays serialize")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObjectError {
    #[error(transparent)]
    XPath(#[from] XPathError),
    #[error("tag `{tag}` does not match final xpath element `{element}`")]
    TagMismatch { tag: String, element: String },
    #[error("tag `{0}` is not lowercase")]
    TagNotLowercase(String),
    #[error("segment id is empty")]
    EmptySegment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub id: String,
    pub objects: Vec<TestObject>,
    /// Execution cost in seconds.
    pub cost: f64,
}

impl TestCase {
    pub fn new(id: impl Into<String>, objects: Vec<TestObject>, cost: f64) -> Result<Self, CoverageError> {
        let id = id.into();
        if objects.is_empty() {
            return Err(CoverageError::InvalidTest {
                test_id: id,
                message: "test case has no steps".into(),
            });
        }
        if !(cost.is_finite() && cost > 0.0) {
            return Err(CoverageError::InvalidTest {
                test_id: id,
                message: format!("cost must be > 0, got {cost}"),
            });
        }
        Ok(Self { id, objects, cost })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSuite {
    test_cases: Vec<TestCase>,
}

impl TestSuite {
    pub fn new(test_cases: Vec<TestCase>) -> Result<Self, CoverageError> {
        if test_cases.is_empty() {
            return Err(CoverageError::EmptySuite);
        }
        let mut seen = HashSet::new();
        for tc in &test_cases {
            if !seen.insert(tc.id.as_str()) {
                return Err(CoverageError::DuplicateId(tc.id.clone()));
            }
        }
        Ok(Self { test_cases })
    }

    pub fn len(&self) -> usize {
        self.test_cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.test_cases.is_empty()
    }

    pub fn test_cases(&self) -> &[TestCase] {
        &self.test_cases
    }

    pub fn costs(&self) -> Vec<f64> {
        self.test_cases.iter().map(|t| t.cost).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.test_cases.iter().map(|t| t.id.as_str()).collect()
    }

    /// Map from test id to suite position.
    pub fn id_index(&self) -> HashMap<&str, usize> {
        self.test_cases
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.as_str(), i))
            .collect()
    }

    /// Serializes the suite in the coverage JSON format.
    pub fn to_json(&self) -> String {
        let doc = CoverageDocument {
            tests: self
                .test_cases
                .iter()
                .map(|tc| TestDocument {
                    id: tc.id.clone(),
                    cost: tc.cost,
                    steps: tc
                        .objects
                        .iter()
                        .map(|o| StepDocument {
                            url: o.page_url.clone(),
                            xpath: o.xpath.clone(),
                            tag: o.tag.clone(),
                            segment: o.segment_id.clone(),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("suite serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct CoverageDocument {
    tests: Vec<TestDocument>,
}

#[derive(Serialize, Deserialize)]
struct TestDocument {
    id: String,
    cost: f64,
    steps: Vec<StepDocument>,
}

#[derive(Serialize, Deserialize)]
struct StepDocument {
    url: String,
    xpath: String,
    tag: String,
    segment: String,
}

/// How unknown JSON fields are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

fn check_fields(
    obj: &Map<String, Value>,
    allowed: &[&str],
    path: &str,
    strictness: Strictness,
) -> Result<(), CoverageError> {
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            match strictness {
                Strictness::Strict => {
                    return Err(CoverageError::schema(format!("{path}.{k}"), "unknown field"))
                }
                Strictness::Lenient => log::warn!("ignoring unknown field {path}.{k}"),
            }
        }
    }
    Ok(())
}

fn require_str<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a str, CoverageError> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(CoverageError::schema(format!("{path}.{key}"), "expected a string")),
        None => Err(CoverageError::schema(format!("{path}.{key}"), "missing required field")),
    }
}

/// Parses and validates a coverage document.
pub fn load_suite(text: &str, strictness: Strictness) -> Result<TestSuite, CoverageError> {
    let root: Value = serde_json::from_str(text)?;
    let root = root
        .as_object()
        .ok_or_else(|| CoverageError::schema("$", "expected an object"))?;
    check_fields(root, &["tests"], "$", strictness)?;
    let tests = match root.get("tests") {
        Some(Value::Array(a)) => a,
        Some(_) => return Err(CoverageError::schema("$.tests", "expected an array")),
        None => return Err(CoverageError::schema("$.tests", "missing required field")),
    };
    if tests.is_empty() {
        return Err(CoverageError::schema("$.tests", "at least one test is required"));
    }

    let mut cases = Vec::with_capacity(tests.len());
    for (ti, t) in tests.iter().enumerate() {
        let tpath = format!("$.tests[{ti}]");
        let t = t
            .as_object()
            .ok_or_else(|| CoverageError::schema(&tpath, "expected an object"))?;
        check_fields(t, &["id", "cost", "steps"], &tpath, strictness)?;
        let id = require_str(t, "id", &tpath)?;
        let cost = match t.get("cost") {
            None | Some(Value::Null) => 1.0,
            Some(Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
            Some(_) => return Err(CoverageError::schema(format!("{tpath}.cost"), "expected a number")),
        };
        if !(cost.is_finite() && cost > 0.0) {
            return Err(CoverageError::schema(
                format!("{tpath}.cost"),
                format!("cost must be > 0, got {cost}"),
            ));
        }
        let steps = match t.get("steps") {
            Some(Value::Array(a)) => a,
            Some(_) => return Err(CoverageError::schema(format!("{tpath}.steps"), "expected an array")),
            None => return Err(CoverageError::schema(format!("{tpath}.steps"), "missing required field")),
        };
        if steps.is_empty() {
            return Err(CoverageError::schema(
                format!("{tpath}.steps"),
                "at least one step is required",
            ));
        }
        let mut objects = Vec::with_capacity(steps.len());
        for (si, s) in steps.iter().enumerate() {
            let spath = format!("{tpath}.steps[{si}]");
            let s = s
                .as_object()
                .ok_or_else(|| CoverageError::schema(&spath, "expected an object"))?;
            check_fields(s, &["url", "xpath", "tag", "segment"], &spath, strictness)?;
            let url = require_str(s, "url", &spath)?;
            let xp = require_str(s, "xpath", &spath)?;
            let tag = require_str(s, "tag", &spath)?;
            let seg = require_str(s, "segment", &spath)?;
            let obj = TestObject::new(url, xp, tag, seg).map_err(|e| CoverageError::InvalidObject {
                test_id: id.to_string(),
                position: si,
                message: format!("{spath}: {e}"),
            })?;
            objects.push(obj);
        }
        cases.push(TestCase::new(id, objects, cost)?);
    }
    TestSuite::new(cases)
}

/// The four coverage criteria, in fitness-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntityKind {
    Segment,
    Sibling,
    ObjectType,
    Object,
}

impl EntityKind {
    pub const ALL: [EntityKind; 4] = [
        EntityKind::Segment,
        EntityKind::Sibling,
        EntityKind::ObjectType,
        EntityKind::Object,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn short_name(self) -> &'static str {
        match self {
            EntityKind::Segment => "seg",
            EntityKind::Sibling => "sib",
            EntityKind::ObjectType => "type",
            EntityKind::Object => "obj",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for EntityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "seg" | "segment" => Ok(EntityKind::Segment),
            "sib" | "sibling" => Ok(EntityKind::Sibling),
            "type" | "object-type" => Ok(EntityKind::ObjectType),
            "obj" | "object" => Ok(EntityKind::Object),
            _ => Err(format!("unknown entity kind `{s}` (expected seg, sib, type or obj)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityKey {
    pub kind: EntityKind,
    pub key: String,
}

/// Universe and coverage rows of one entity kind.
#[derive(Debug, Clone)]
pub struct KindCoverage {
    universe: Vec<EntityKey>,
    rows: Vec<BitSet>,
}

impl KindCoverage {
    pub fn universe(&self) -> &[EntityKey] {
        &self.universe
    }

    /// Entities covered by test `i`.
    pub fn row(&self, i: usize) -> &BitSet {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitSet] {
        &self.rows
    }

    /// Tests covering each entity.
    pub fn columns(&self) -> Vec<BitSet> {
        let mut cols = vec![BitSet::new(self.rows.len()); self.universe.len()];
        for (t, row) in self.rows.iter().enumerate() {
            for e in row.iter() {
                cols[e].insert(t);
            }
        }
        cols
    }
}

/// Immutable test × entity incidence for all four kinds.
#[derive(Debug, Clone)]
pub struct CoverageIndex {
    n_tests: usize,
    kinds: [KindCoverage; 4],
    /// For each object entity: its segment, sibling and type entity indices.
    object_parents: Vec<[usize; 3]>,
}

impl CoverageIndex {
    pub fn build(suite: &TestSuite) -> Self {
        let n = suite.len();
        let mut lookup: [HashMap<String, usize>; 4] = Default::default();
        let mut universes: [Vec<EntityKey>; 4] = Default::default();
        let mut members: [Vec<Vec<usize>>; 4] = Default::default();
        let mut object_parents = Vec::new();

        for tc in suite.test_cases() {
            let mut covered: [Vec<usize>; 4] = Default::default();
            for obj in &tc.objects {
                let mut ids = [0usize; 4];
                for kind in EntityKind::ALL {
                    let k = kind.index();
                    let key = obj.entity_key(kind);
                    let next = universes[k].len();
                    let id = *lookup[k].entry(key.key.clone()).or_insert_with(|| {
                        universes[k].push(key);
                        next
                    });
                    ids[k] = id;
                    covered[k].push(id);
                }
                let obj_id = ids[EntityKind::Object.index()];
                if obj_id == object_parents.len() {
                    object_parents.push([ids[0], ids[1], ids[2]]);
                }
            }
            for k in 0..4 {
                members[k].push(std::mem::take(&mut covered[k]));
            }
        }

        let kinds = std::array::from_fn(|k| {
            let m = universes[k].len();
            let rows = members[k]
                .iter()
                .map(|ids| {
                    let mut row = BitSet::new(m);
                    for &id in ids {
                        row.insert(id);
                    }
                    row
                })
                .collect();
            KindCoverage {
                universe: std::mem::take(&mut universes[k]),
                rows,
            }
        });
        debug_assert_eq!(members[0].len(), n);
        Self {
            n_tests: n,
            kinds,
            object_parents,
        }
    }

    pub fn n_tests(&self) -> usize {
        self.n_tests
    }

    pub fn kind(&self, kind: EntityKind) -> &KindCoverage {
        &self.kinds[kind.index()]
    }

    pub fn universe(&self, kind: EntityKind) -> &[EntityKey] {
        &self.kinds[kind.index()].universe
    }

    pub fn row(&self, kind: EntityKind, test: usize) -> &BitSet {
        &self.kinds[kind.index()].rows[test]
    }

    pub fn covers(&self, kind: EntityKind, test: usize, entity: usize) -> bool {
        self.row(kind, test).contains(entity)
    }

    /// Segment, sibling and type entity of an object entity.
    pub fn object_parents(&self, object: usize) -> [usize; 3] {
        self.object_parents[object]
    }
}
