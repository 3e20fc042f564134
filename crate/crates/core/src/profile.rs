//! Preference profiles: one weak order per agent over a shared object set.
//!
//! Text format, one agent per line:
//!
//! ```text
//! # comment
//! 1: a > b > c
//! 2: a ~ b > c
//! ```
//!
//! `>` separates indifference classes (best first) and `~` joins objects in
//! the same class. Objects are indexed in order of first appearance.
//! The JSON mirror is `{"agents":[{"name":"1","classes":[["a"],["b","c"]]}]}`
//! with an optional top-level `"objects"` list fixing the object order.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preference::{AgentId, ObjectId, PreferenceError, WeakOrder};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: object `{object}` listed more than once")]
    DuplicateObject { line: usize, object: String },
    #[error("line {line}: agent `{agent}` defined more than once")]
    DuplicateAgent { line: usize, agent: String },
    #[error("line {line}: missing object(s) {missing:?}")]
    MissingObjects { line: usize, missing: Vec<String> },
    #[error("line {line}: unknown object `{object}`")]
    UnknownObject { line: usize, object: String },
    #[error("{agents} agents but {objects} objects; instances must be square")]
    Shape { agents: usize, objects: usize },
    #[error("profile has no agents")]
    Empty,
    #[error("cannot pad a profile of {current} agents down to {requested}")]
    PadTooSmall { current: usize, requested: usize },
    #[error("invalid JSON profile: {0}")]
    Json(String),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
}

/// Serializes through [`ProfileJson`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "ProfileJson", try_from = "ProfileJson")]
pub struct Profile {
    agents: Vec<String>,
    objects: Vec<String>,
    prefs: Vec<WeakOrder>,
}

impl Profile {
    /// Checks squareness and that every order ranges over exactly the objects.
    pub fn new(
        agents: Vec<String>,
        objects: Vec<String>,
        prefs: Vec<WeakOrder>,
    ) -> Result<Self, ProfileError> {
        if agents.is_empty() {
            return Err(ProfileError::Empty);
        }
        if agents.len() != objects.len() {
            return Err(ProfileError::Shape { agents: agents.len(), objects: objects.len() });
        }
        assert_eq!(agents.len(), prefs.len(), "one preference per agent");
        for (i, pref) in prefs.iter().enumerate() {
            if pref.num_objects() != objects.len() {
                return Err(ProfileError::Malformed {
                    line: i + 1,
                    message: format!(
                        "order ranges over {} objects, expected {}",
                        pref.num_objects(),
                        objects.len()
                    ),
                });
            }
        }
        Ok(Profile { agents, objects, prefs })
    }

    /// Agents labelled `1..=n`, objects `a, b, c, ...` (then `o27`, ...).
    pub fn with_default_labels(prefs: Vec<WeakOrder>) -> Result<Self, ProfileError> {
        let n = prefs.len();
        let agents = (1..=n).map(|i| i.to_string()).collect();
        let objects = (0..n).map(default_object_label).collect();
        Self::new(agents, objects, prefs)
    }

    /// Strict profile with default labels from rankings of object indices.
    pub fn strict(rankings: &[&[usize]]) -> Result<Self, ProfileError> {
        let prefs = rankings
            .iter()
            .map(|r| WeakOrder::strict(r))
            .collect::<Result<Vec<_>, _>>()?;
        Self::with_default_labels(prefs)
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn prefs(&self) -> &[WeakOrder] {
        &self.prefs
    }

    pub fn pref(&self, agent: AgentId) -> &WeakOrder {
        &self.prefs[agent.0]
    }

    pub fn agent_label(&self, agent: AgentId) -> &str {
        &self.agents[agent.0]
    }

    pub fn object_label(&self, object: ObjectId) -> &str {
        &self.objects[object.0]
    }

    pub fn object_index(&self, label: &str) -> Option<ObjectId> {
        self.objects.iter().position(|o| o == label).map(ObjectId)
    }

    pub fn agent_index(&self, label: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a == label).map(AgentId)
    }

    pub fn is_strict(&self) -> bool {
        self.prefs.iter().all(WeakOrder::is_strict)
    }

    /// Same profile with `agent` reporting `pref` instead.
    pub fn with_pref(&self, agent: AgentId, pref: WeakOrder) -> Self {
        assert_eq!(pref.num_objects(), self.objects.len());
        let mut prefs = self.prefs.clone();
        prefs[agent.0] = pref;
        Profile { agents: self.agents.clone(), objects: self.objects.clone(), prefs }
    }

    /// Reorders agents: new agent `k` is old agent `order[k]`.
    pub fn permute_agents(&self, order: &[usize]) -> Self {
        Profile {
            agents: order.iter().map(|&i| self.agents[i].clone()).collect(),
            objects: self.objects.clone(),
            prefs: order.iter().map(|&i| self.prefs[i].clone()).collect(),
        }
    }

    /// Renames objects: old object `o` becomes index `mapping[o]`. Labels
    /// stay attached to their positions so that outputs remain comparable.
    pub fn permute_objects(&self, mapping: &[usize]) -> Self {
        Profile {
            agents: self.agents.clone(),
            objects: self.objects.clone(),
            prefs: self.prefs.iter().map(|p| p.relabel(mapping)).collect(),
        }
    }

    pub fn format_pref(&self, pref: &WeakOrder) -> String {
        pref.classes()
            .iter()
            .map(|c| {
                c.iter().map(|o| self.objects[o.0].as_str()).collect::<Vec<_>>().join(" ~ ")
            })
            .collect::<Vec<_>>()
            .join(" > ")
    }

    /// Inverse of [`parse_profile`] up to whitespace and comments.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (label, pref) in self.agents.iter().zip(&self.prefs) {
            writeln!(out, "{}: {}", label, self.format_pref(pref)).expect("string write");
        }
        out
    }

    pub fn to_json(&self) -> ProfileJson {
        ProfileJson {
            objects: Some(self.objects.clone()),
            agents: self
                .agents
                .iter()
                .zip(&self.prefs)
                .map(|(name, pref)| AgentJson {
                    name: name.clone(),
                    classes: pref
                        .classes()
                        .iter()
                        .map(|c| c.iter().map(|o| self.objects[o.0].clone()).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &ProfileJson) -> Result<Self, ProfileError> {
        let lines: Vec<(usize, String, Vec<Vec<String>>)> = json
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| (i + 1, a.name.clone(), a.classes.clone()))
            .collect();
        build_profile(lines, json.objects.clone())
    }
}

impl From<Profile> for ProfileJson {
    fn from(p: Profile) -> Self {
        p.to_json()
    }
}

impl TryFrom<ProfileJson> for Profile {
    type Error = ProfileError;

    fn try_from(json: ProfileJson) -> Result<Self, Self::Error> {
        Profile::from_json(&json)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objects: Option<Vec<String>>,
    pub agents: Vec<AgentJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentJson {
    pub name: String,
    pub classes: Vec<Vec<String>>,
}

pub fn default_object_label(index: usize) -> String {
    if index < 26 {
        ((b'a' + index as u8) as char).to_string()
    } else {
        format!("o{}", index + 1)
    }
}

pub fn parse_profile(text: &str) -> Result<Profile, ProfileError> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (label, body) = content.split_once(':').ok_or_else(|| ProfileError::Malformed {
            line: line_no,
            message: "expected `agent: preference`".to_string(),
        })?;
        let label = label.trim();
        if label.is_empty() {
            return Err(ProfileError::Malformed {
                line: line_no,
                message: "empty agent label".to_string(),
            });
        }
        let mut classes = Vec::new();
        for class in body.split('>') {
            let members: Vec<String> = class.split('~').map(|o| o.trim().to_string()).collect();
            if members.iter().any(|m| m.is_empty()) {
                return Err(ProfileError::Malformed {
                    line: line_no,
                    message: "empty object in preference".to_string(),
                });
            }
            if let Some(bad) = members.iter().find(|m| !is_label(m)) {
                return Err(ProfileError::Malformed {
                    line: line_no,
                    message: format!("invalid object label `{bad}`"),
                });
            }
            classes.push(members);
        }
        lines.push((line_no, label.to_string(), classes));
    }
    build_profile(lines, None)
}

pub fn parse_profile_json(text: &str) -> Result<Profile, ProfileError> {
    let json: ProfileJson =
        serde_json::from_str(text).map_err(|e| ProfileError::Json(e.to_string()))?;
    Profile::from_json(&json)
}

/// Dispatches on the first non-blank character: `{` means JSON.
pub fn parse_profile_any(text: &str) -> Result<Profile, ProfileError> {
    if text.trim_start().starts_with('{') {
        parse_profile_json(text)
    } else {
        parse_profile(text)
    }
}

fn is_label(s: &str) -> bool {
    !s.chars().any(|c| c.is_whitespace() || matches!(c, '>' | '~' | ':' | '#'))
}

fn build_profile(
    lines: Vec<(usize, String, Vec<Vec<String>>)>,
    declared_objects: Option<Vec<String>>,
) -> Result<Profile, ProfileError> {
    if lines.is_empty() {
        return Err(ProfileError::Empty);
    }
    let mut agent_seen: HashMap<&str, usize> = HashMap::new();
    for (line, label, _) in &lines {
        if agent_seen.insert(label.as_str(), *line).is_some() {
            return Err(ProfileError::DuplicateAgent { line: *line, agent: label.clone() });
        }
    }

    // Duplicates within one line are reported before cross-line consistency.
    for (line, _, classes) in &lines {
        let mut seen = HashMap::new();
        for object in classes.iter().flatten() {
            if seen.insert(object.as_str(), ()).is_some() {
                return Err(ProfileError::DuplicateObject { line: *line, object: object.clone() });
            }
        }
    }

    let fixed_universe = declared_objects.is_some();
    let objects: Vec<String> = match declared_objects {
        Some(objects) => {
            let mut seen = HashMap::new();
            for o in &objects {
                if seen.insert(o.as_str(), ()).is_some() {
                    return Err(ProfileError::Json(format!("object `{o}` declared twice")));
                }
            }
            objects
        }
        None => {
            let mut objects: Vec<String> = Vec::new();
            for (_, _, classes) in &lines {
                for object in classes.iter().flatten() {
                    if !objects.contains(object) {
                        objects.push(object.clone());
                    }
                }
            }
            objects
        }
    };
    let index: HashMap<&str, usize> =
        objects.iter().enumerate().map(|(i, o)| (o.as_str(), i)).collect();

    let mut prefs = Vec::with_capacity(lines.len());
    for (line, _, classes) in &lines {
        let mut mentioned = vec![false; objects.len()];
        let mut ids = Vec::with_capacity(classes.len());
        for class in classes {
            let mut members = Vec::with_capacity(class.len());
            for object in class {
                let Some(&i) = index.get(object.as_str()) else {
                    debug_assert!(fixed_universe);
                    return Err(ProfileError::UnknownObject {
                        line: *line,
                        object: object.clone(),
                    });
                };
                mentioned[i] = true;
                members.push(ObjectId(i));
            }
            ids.push(members);
        }
        let missing: Vec<String> = objects
            .iter()
            .zip(&mentioned)
            .filter(|(_, &m)| !m)
            .map(|(o, _)| o.clone())
            .collect();
        if !missing.is_empty() {
            return Err(ProfileError::MissingObjects { line: *line, missing });
        }
        prefs.push(WeakOrder::new(ids)?);
    }

    if lines.len() != objects.len() {
        return Err(ProfileError::Shape { agents: lines.len(), objects: objects.len() });
    }
    let agents = lines.into_iter().map(|(_, label, _)| label).collect();
    Profile::new(agents, objects, prefs)
}

/// Adds agents and objects until the profile has `n` of each.
///
/// New agent `k` ranks its own new object first, then the other new objects
/// in index order, then the original objects in index order, all strictly.
/// Original agents keep their preferences and rank the new objects strictly
/// last, in index order.
pub fn pad_profile(base: &Profile, n: usize) -> Result<Profile, ProfileError> {
    let m = base.n();
    if n < m {
        return Err(ProfileError::PadTooSmall { current: m, requested: n });
    }
    let extra = n - m;
    let mut agents = base.agents.clone();
    let mut objects = base.objects.clone();
    for k in 0..extra {
        agents.push(fresh_label(&agents, m + k + 1, |i| i.to_string(), |i| format!("agent{i}")));
        objects.push(fresh_label(&objects, m + k, default_object_label, |i| format!("o{}", i + 1)));
    }
    let mut prefs: Vec<WeakOrder> = base.prefs.iter().map(|p| p.extended_with_tail(extra)).collect();
    for k in 0..extra {
        let own = m + k;
        let mut ranking = vec![own];
        ranking.extend((m..n).filter(|&o| o != own));
        ranking.extend(0..m);
        prefs.push(WeakOrder::strict(&ranking)?);
    }
    Profile::new(agents, objects, prefs)
}

fn fresh_label(
    taken: &[String],
    index: usize,
    primary: impl Fn(usize) -> String,
    fallback: impl Fn(usize) -> String,
) -> String {
    let first = primary(index);
    if !taken.contains(&first) {
        return first;
    }
    (index..)
        .map(&fallback)
        .find(|candidate| !taken.contains(candidate))
        .expect("unbounded candidate stream")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preference::enumerate_weak_orders;

    #[test]
    fn parses_the_strict_theorem_profile() {
        let p = parse_profile("1: a > b > c\n2: a > c > b\n3: a > b > c").unwrap();
        assert_eq!(p.n(), 3);
        assert_eq!(p.objects(), ["a", "b", "c"]);
        assert_eq!(p.pref(AgentId(1)), &WeakOrder::strict(&[0, 2, 1]).unwrap());
        assert!(p.is_strict());
    }

    #[test]
    fn parses_single_agent() {
        let p = parse_profile("1: a").unwrap();
        assert_eq!(p.n(), 1);
        assert_eq!(p.pref(AgentId(0)).classes().len(), 1);
    }

    #[test]
    fn parses_indifference_classes_and_comments() {
        let text = "# the third profile\n1: a > b > c\n\n2: a > c > b  # strict\n3: a ~ b > c\n";
        let p = parse_profile(text).unwrap();
        let third = p.pref(AgentId(2));
        assert_eq!(third.classes(), &[vec![ObjectId(0), ObjectId(1)], vec![ObjectId(2)]]);
        assert!(!p.is_strict());
    }

    #[test]
    fn reports_errors_with_line_numbers() {
        assert!(matches!(
            parse_profile("1: a > b\n2: a > a"),
            Err(ProfileError::DuplicateObject { line: 2, .. })
        ));
        assert!(matches!(
            parse_profile("1: a > b > c\n2: a > c\n3: c > b > a"),
            Err(ProfileError::MissingObjects { line: 2, .. })
        ));
        assert!(matches!(parse_profile("1: a > b\n2 a > b"), Err(ProfileError::Malformed { line: 2, .. })));
        assert!(matches!(
            parse_profile("1: a > b > c\n2: a > c > b"),
            Err(ProfileError::Shape { agents: 2, objects: 3 })
        ));
        assert!(matches!(parse_profile("1: a >  > b"), Err(ProfileError::Malformed { line: 1, .. })));
        assert!(matches!(
            parse_profile("1: a > b\n1: b > a"),
            Err(ProfileError::DuplicateAgent { line: 2, .. })
        ));
        assert_eq!(parse_profile("# nothing\n"), Err(ProfileError::Empty));
    }

    #[test]
    fn json_with_declared_objects_rejects_unknown_labels() {
        let text = r#"{"objects":["a","b"],"agents":[{"name":"1","classes":[["a"],["z"]]},{"name":"2","classes":[["a","b"]]}]}"#;
        assert!(matches!(parse_profile_json(text), Err(ProfileError::UnknownObject { line: 1, .. })));
    }

    #[test]
    fn json_mirror_round_trips() {
        let p = parse_profile("x: b > a ~ c\ny: a ~ b ~ c\nz: c > b > a").unwrap();
        let json = serde_json::to_string(&p.to_json()).unwrap();
        assert_eq!(parse_profile_json(&json).unwrap(), p);
        assert_eq!(parse_profile_any(&json).unwrap(), p);
    }

    #[test]
    fn text_round_trips_on_every_weak_profile_of_size_three() {
        let orders = enumerate_weak_orders(3).unwrap();
        for a in &orders {
            for b in &orders {
                for c in &orders {
                    let p = Profile::with_default_labels(vec![a.clone(), b.clone(), c.clone()])
                        .unwrap();
                    let back = parse_profile(&p.to_text()).unwrap();
                    // object indices follow first appearance, so compare via labels
                    assert_eq!(back.agents(), p.agents());
                    for (agent, pref) in p.prefs().iter().enumerate() {
                        let other = back.pref(AgentId(agent));
                        for x in 0..3 {
                            for y in 0..3 {
                                let bx = back.object_index(p.object_label(ObjectId(x))).unwrap();
                                let by = back.object_index(p.object_label(ObjectId(y))).unwrap();
                                assert_eq!(
                                    pref.weakly_prefers(ObjectId(x), ObjectId(y)),
                                    other.weakly_prefers(bx, by)
                                );
                            }
                        }
                    }
                    let declared = ProfileJson { objects: Some(p.objects().to_vec()), ..back.to_json() };
                    assert_eq!(Profile::from_json(&declared).unwrap(), p);
                }
            }
        }
    }

    fn double_prime() -> Profile {
        parse_profile("1: a > b > c\n2: a > c > b\n3: a ~ b > c").unwrap()
    }

    #[test]
    fn padding_to_same_size_is_identity() {
        assert_eq!(pad_profile(&double_prime(), 3).unwrap(), double_prime());
    }

    #[test]
    fn padding_appends_new_agents_and_objects() {
        let p = pad_profile(&double_prime(), 4).unwrap();
        assert_eq!(p.agents(), ["1", "2", "3", "4"]);
        assert_eq!(p.objects(), ["a", "b", "c", "d"]);
        assert_eq!(p.format_pref(p.pref(AgentId(3))), "d > a > b > c");
        assert_eq!(p.format_pref(p.pref(AgentId(2))), "a ~ b > c > d");
        assert_eq!(p.format_pref(p.pref(AgentId(0))), "a > b > c > d");

        let p5 = pad_profile(&double_prime(), 5).unwrap();
        assert_eq!(p5.format_pref(p5.pref(AgentId(3))), "d > e > a > b > c");
        assert_eq!(p5.format_pref(p5.pref(AgentId(4))), "e > d > a > b > c");
        assert_eq!(p5.format_pref(p5.pref(AgentId(1))), "a > c > b > d > e");
    }

    #[test]
    fn padding_down_is_an_error() {
        assert_eq!(
            pad_profile(&double_prime(), 2),
            Err(ProfileError::PadTooSmall { current: 3, requested: 2 })
        );
    }
}
