//! Shared domain types: attribute schemas, scenes, queries, answers and the
//! featurized dialog state the policies and the answerer model read.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Ordered attributes, each with an ordered list of value labels.
///
/// Every (attribute, value) pair is one askable query token, so the query
/// vocabulary is the concatenation of the value lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct AttributeSchema {
    attributes: Vec<String>,
    values: Vec<Vec<String>>,
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawSchema {
    attributes: Vec<String>,
    values: Vec<Vec<String>>,
}

impl TryFrom<RawSchema> for AttributeSchema {
    type Error = Error;
    fn try_from(raw: RawSchema) -> Result<Self> {
        Self::new(raw.attributes, raw.values)
    }
}

impl From<AttributeSchema> for RawSchema {
    fn from(s: AttributeSchema) -> Self {
        RawSchema {
            attributes: s.attributes,
            values: s.values,
        }
    }
}

impl AttributeSchema {
    pub fn new(attributes: Vec<String>, values: Vec<Vec<String>>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(invalid("schema needs at least one attribute"));
        }
        if attributes.len() != values.len() {
            return Err(invalid("one value list per attribute required"));
        }
        if let Some(i) = values.iter().position(|v| v.len() < 2) {
            return Err(invalid(format!(
                "attribute '{}' needs at least 2 values",
                attributes[i]
            )));
        }
        let mut offsets = Vec::with_capacity(values.len());
        let mut acc = 0;
        for v in &values {
            offsets.push(acc);
            acc += v.len();
        }
        Ok(Self {
            attributes,
            values,
            offsets,
        })
    }

    /// Schema with anonymous labels, e.g. `&[3, 3, 2]`.
    pub fn from_cardinalities(cards: &[usize]) -> Result<Self> {
        let attributes = (0..cards.len()).map(|i| format!("attr{i}")).collect();
        let values = cards
            .iter()
            .enumerate()
            .map(|(a, &c)| (0..c).map(|v| format!("a{a}v{v}")).collect())
            .collect();
        Self::new(attributes, values)
    }

    /// The default game schema: color (3), shape (3), size (2).
    pub fn default_game() -> Self {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Self::new(
            s(&["color", "shape", "size"]),
            vec![
                s(&["red", "green", "blue"]),
                s(&["cube", "sphere", "cylinder"]),
                s(&["small", "large"]),
            ],
        )
        .expect("default schema is valid")
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn n_values(&self, attribute: usize) -> usize {
        self.values[attribute].len()
    }

    pub fn attribute_name(&self, attribute: usize) -> &str {
        &self.attributes[attribute]
    }

    pub fn value_name(&self, attribute: usize, value: usize) -> &str {
        &self.values[attribute][value]
    }

    /// Size of the query vocabulary |Q|.
    pub fn vocab_size(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    /// Number of distinct full attribute signatures.
    pub fn n_signatures(&self) -> usize {
        self.values.iter().map(Vec::len).product()
    }

    /// Feature dimension of [`DialogState::feature_vector`] for this schema.
    pub fn feature_dim(&self) -> usize {
        2 * self.vocab_size() + 1
    }

    pub fn token_id(&self, query: Query) -> Result<usize> {
        self.check_query(query)?;
        Ok(self.offsets[query.attribute] + query.value)
    }

    pub fn query_of_token(&self, token: usize) -> Result<Query> {
        if token >= self.vocab_size() {
            return Err(invalid(format!(
                "token {token} outside vocabulary of size {}",
                self.vocab_size()
            )));
        }
        let attribute = self.offsets.partition_point(|&o| o <= token) - 1;
        Ok(Query {
            attribute,
            value: token - self.offsets[attribute],
        })
    }

    /// Token ids of every value of `attribute`.
    pub fn attribute_tokens(&self, attribute: usize) -> std::ops::Range<usize> {
        let start = self.offsets[attribute];
        start..start + self.values[attribute].len()
    }

    pub fn check_query(&self, query: Query) -> Result<()> {
        if query.attribute >= self.n_attributes() || query.value >= self.n_values(query.attribute)
        {
            return Err(invalid(format!("query {query:?} invalid for schema")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: usize,
    pub attribute_values: Vec<usize>,
}

impl SceneObject {
    pub fn has(&self, query: Query) -> bool {
        self.attribute_values[query.attribute] == query.value
    }
}

/// A candidate set with one hidden target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub schema: AttributeSchema,
    pub objects: Vec<SceneObject>,
    pub target_index: usize,
}

impl Scene {
    pub fn new(schema: AttributeSchema, objects: Vec<SceneObject>, target_index: usize) -> Result<Self> {
        if objects.len() < 2 {
            return Err(invalid("scene needs at least 2 objects"));
        }
        if target_index >= objects.len() {
            return Err(invalid("target index out of range"));
        }
        for (i, o) in objects.iter().enumerate() {
            if o.id != i {
                return Err(invalid("object ids must equal their position"));
            }
            if o.attribute_values.len() != schema.n_attributes() {
                return Err(invalid(format!("object {i} has wrong attribute count")));
            }
            for (a, &v) in o.attribute_values.iter().enumerate() {
                if v >= schema.n_values(a) {
                    return Err(invalid(format!("object {i} value {v} out of range")));
                }
            }
        }
        let target = &objects[target_index].attribute_values;
        let clashes = objects
            .iter()
            .filter(|o| &o.attribute_values == target)
            .count();
        if clashes != 1 {
            return Err(invalid("target signature is not unique in the scene"));
        }
        Ok(Self {
            schema,
            objects,
            target_index,
        })
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn target(&self) -> &SceneObject {
        &self.objects[self.target_index]
    }

    /// Per-token fraction of objects carrying that value.
    pub fn value_frequencies(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.schema.vocab_size()];
        for o in &self.objects {
            for (a, &v) in o.attribute_values.iter().enumerate() {
                counts[self.schema.attribute_tokens(a).start + v] += 1.0;
            }
        }
        let n = self.objects.len() as f64;
        counts.iter_mut().for_each(|c| *c /= n);
        counts
    }
}

/// One yes/no question: "does the target have `value` for `attribute`?"
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub attribute: usize,
    pub value: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Answer {
    Yes,
    No,
    NA,
}

impl Answer {
    pub const ALL: [Answer; 3] = [Answer::Yes, Answer::No, Answer::NA];

    pub fn index(self) -> usize {
        match self {
            Answer::Yes => 0,
            Answer::No => 1,
            Answer::NA => 2,
        }
    }

    pub fn from_index(i: usize) -> Answer {
        Self::ALL[i]
    }

    fn sign(self) -> f64 {
        match self {
            Answer::Yes => 1.0,
            Answer::No => -1.0,
            Answer::NA => 0.0,
        }
    }
}

pub type History = Vec<(Query, Answer)>;

/// Featurized state s(t): scene value frequencies, signed answer history and a
/// trailing bias entry.
#[derive(Debug, Clone, PartialEq)]
pub struct DialogState {
    pub scene_features: Vec<f64>,
    pub history: History,
    pub round: usize,
    pub feature_vector: Array1<f64>,
}

impl DialogState {
    pub fn dim(&self) -> usize {
        self.feature_vector.len()
    }

    /// Signed history entry for one token (+1 Yes, -1 No, 0 otherwise).
    pub fn history_sign(&self, token: usize) -> f64 {
        self.feature_vector[self.scene_features.len() + token]
    }
}

/// Encodes (scene, history) into a [`DialogState`].
///
/// A token asked more than once keeps the sign of its latest answer.
pub fn featurize(scene: &Scene, history: &[(Query, Answer)]) -> Result<DialogState> {
    let schema = &scene.schema;
    let q = schema.vocab_size();
    let scene_features = scene.value_frequencies();
    let mut phi = Array1::zeros(2 * q + 1);
    for (i, f) in scene_features.iter().enumerate() {
        phi[i] = *f;
    }
    for &(query, answer) in history {
        let token = schema
            .token_id(query)
            .map_err(|e| Error::InvalidInput(format!("history does not match scene schema: {e}")))?;
        phi[q + token] = answer.sign();
    }
    phi[2 * q] = 1.0;
    Ok(DialogState {
        scene_features,
        history: history.to_vec(),
        round: history.len(),
        feature_vector: phi,
    })
}
