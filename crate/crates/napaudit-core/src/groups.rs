//! Sensitive-variable schema, intersectional groups, capping, frequency
//! tables and unions of groups.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

/// The three sensitive variables, in schema order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    Race,
    Age,
    Gender,
}

impl Variable {
    pub const ALL: [Variable; 3] = [Variable::Race, Variable::Age, Variable::Gender];

    pub fn name(self) -> &'static str {
        match self {
            Self::Race => "race",
            Self::Age => "age",
            Self::Gender => "gender",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered category vocabularies of the sensitive variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    vocab: [Vec<String>; 3],
}

impl Schema {
    pub fn new(race: Vec<String>, age: Vec<String>, gender: Vec<String>) -> Result<Self> {
        let vocab = [race, age, gender];
        for (v, cats) in Variable::ALL.iter().zip(&vocab) {
            if cats.is_empty() {
                return Err(Error::InvalidSchema(format!("variable `{v}` has no categories")));
            }
            if cats.len() > usize::from(u16::MAX) {
                return Err(Error::InvalidSchema(format!("variable `{v}` has too many categories")));
            }
            let unique: BTreeSet<&String> = cats.iter().collect();
            if unique.len() != cats.len() {
                return Err(Error::InvalidSchema(format!("variable `{v}` has duplicate categories")));
            }
        }
        Ok(Self { vocab })
    }

    /// The FairFace vocabularies: 7 races, 9 age bins, 2 genders.
    pub fn fairface() -> Self {
        let s = |xs: &[&str]| xs.iter().map(|x| String::from(*x)).collect::<Vec<_>>();
        Self::new(
            s(&[
                "Black",
                "East Asian",
                "Indian",
                "Latino_Hispanic",
                "Middle Eastern",
                "Southeast Asian",
                "White",
            ]),
            s(&[
                "0-2",
                "3-9",
                "10-19",
                "20-29",
                "30-39",
                "40-49",
                "50-59",
                "60-69",
                "more than 70",
            ]),
            s(&["Female", "Male"]),
        )
        .expect("static schema is valid")
    }

    pub fn vocab(&self, v: Variable) -> &[String] {
        &self.vocab[v.index()]
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.vocab[0].len(), self.vocab[1].len(), self.vocab[2].len()]
    }

    /// Number of intersectional groups (product of vocabulary sizes).
    pub fn num_groups(&self) -> usize {
        self.sizes().iter().product()
    }

    pub fn category_index(&self, v: Variable, label: &str) -> Option<u16> {
        self.vocab(v).iter().position(|c| c == label).map(|i| i as u16)
    }

    pub fn key(&self, race: &str, age: &str, gender: &str) -> Option<GroupKey> {
        Some(GroupKey {
            race: self.category_index(Variable::Race, race)?,
            age: self.category_index(Variable::Age, age)?,
            gender: self.category_index(Variable::Gender, gender)?,
        })
    }

    /// Class index of a group: lexicographic in (race, age, gender) vocabulary order.
    pub fn class_index(&self, key: GroupKey) -> usize {
        let [_, na, ng] = self.sizes();
        (usize::from(key.race) * na + usize::from(key.age)) * ng + usize::from(key.gender)
    }

    pub fn key_for_class(&self, class: usize) -> GroupKey {
        let [_, na, ng] = self.sizes();
        GroupKey {
            race: (class / (na * ng)) as u16,
            age: ((class / ng) % na) as u16,
            gender: (class % ng) as u16,
        }
    }

    /// All intersectional keys in class order.
    pub fn keys(&self) -> impl Iterator<Item = GroupKey> + '_ {
        (0..self.num_groups()).map(|c| self.key_for_class(c))
    }

    pub fn label(&self, v: Variable, index: u16) -> &str {
        &self.vocab(v)[usize::from(index)]
    }

    /// Human-readable group label, e.g. `White, 20-29, Female`.
    pub fn display(&self, key: GroupKey) -> String {
        format!(
            "{}, {}, {}",
            self.label(Variable::Race, key.race),
            self.label(Variable::Age, key.age),
            self.label(Variable::Gender, key.gender)
        )
    }

    pub fn display_union(&self, key: &UnionKey) -> String {
        let parts: Vec<&str> = Variable::ALL
            .iter()
            .map(|&v| match key.get(v) {
                Some(i) => self.label(v, i),
                None => "*",
            })
            .collect();
        parts.join(", ")
    }
}

/// One intersectional group, as vocabulary indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub race: u16,
    pub age: u16,
    pub gender: u16,
}

impl GroupKey {
    pub fn get(&self, v: Variable) -> u16 {
        match v {
            Variable::Race => self.race,
            Variable::Age => self.age,
            Variable::Gender => self.gender,
        }
    }

    /// Variables on which two groups differ.
    pub fn differing(&self, other: &GroupKey) -> Vec<Variable> {
        Variable::ALL
            .into_iter()
            .filter(|&v| self.get(v) != other.get(v))
            .collect()
    }
}

/// A union of intersectional groups sharing one or two fixed categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnionKey {
    pub race: Option<u16>,
    pub age: Option<u16>,
    pub gender: Option<u16>,
}

impl UnionKey {
    pub fn get(&self, v: Variable) -> Option<u16> {
        match v {
            Variable::Race => self.race,
            Variable::Age => self.age,
            Variable::Gender => self.gender,
        }
    }

    fn set(&mut self, v: Variable, value: Option<u16>) {
        match v {
            Variable::Race => self.race = value,
            Variable::Age => self.age = value,
            Variable::Gender => self.gender = value,
        }
    }

    pub fn fixed_count(&self) -> usize {
        Variable::ALL.iter().filter(|&&v| self.get(v).is_some()).count()
    }

    pub fn contains(&self, key: GroupKey) -> bool {
        Variable::ALL
            .iter()
            .all(|&v| self.get(v).is_none_or(|c| c == key.get(v)))
    }
}

/// One row of the dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleRecord {
    pub example_id: u64,
    pub image_path: String,
    pub race: String,
    pub age: String,
    pub gender: String,
}

impl ExampleRecord {
    pub fn label(&self, v: Variable) -> &str {
        match v {
            Variable::Race => &self.race,
            Variable::Age => &self.age,
            Variable::Gender => &self.gender,
        }
    }
}

/// Examples with their sensitive-variable labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub schema: Schema,
    pub examples: Vec<ExampleRecord>,
}

impl Manifest {
    /// Validates the manifest, returning it on success. Example ids must equal
    /// their row position and every label must be in its vocabulary.
    pub fn new(schema: Schema, examples: Vec<ExampleRecord>) -> Result<Self> {
        let m = Self { schema, examples };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (row, ex) in self.examples.iter().enumerate() {
            if ex.example_id != row as u64 {
                return Err(Error::Schema {
                    example_id: ex.example_id,
                    message: format!(
                        "example ids must be unique and contiguous from 0; row {row} has id {}",
                        ex.example_id
                    ),
                });
            }
            self.key_of(ex)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    fn key_of(&self, ex: &ExampleRecord) -> Result<GroupKey> {
        let mut idx = [0u16; 3];
        for v in Variable::ALL {
            let label = ex.label(v);
            idx[v.index()] = self.schema.category_index(v, label).ok_or_else(|| Error::Schema {
                example_id: ex.example_id,
                message: format!("{v} label `{label}` is not in the schema vocabulary"),
            })?;
        }
        Ok(GroupKey {
            race: idx[0],
            age: idx[1],
            gender: idx[2],
        })
    }
}

/// Mapping from every intersectional group to its sorted example ids. Empty
/// groups are kept so class indices stay stable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    schema: Schema,
    groups: Vec<Vec<usize>>,
    seed: Option<u64>,
}

impl GroupAssignment {
    /// Builds an assignment directly; `groups` is indexed by class.
    pub fn from_groups(schema: Schema, mut groups: Vec<Vec<usize>>, seed: Option<u64>) -> Result<Self> {
        if groups.len() != schema.num_groups() {
            return Err(Error::Argument(format!(
                "{} groups given for a schema with {} intersections",
                groups.len(),
                schema.num_groups()
            )));
        }
        let mut seen = BTreeSet::new();
        for g in &mut groups {
            g.sort_unstable();
            for &id in g.iter() {
                if !seen.insert(id) {
                    return Err(Error::Argument(format!(
                        "example {id} is assigned to more than one group"
                    )));
                }
            }
        }
        Ok(Self { schema, groups, seed })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Seed used for capping, if the assignment was capped.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn get(&self, key: GroupKey) -> &[usize] {
        &self.groups[self.schema.class_index(key)]
    }

    pub fn by_class(&self, class: usize) -> &[usize] {
        &self.groups[class]
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Groups in class order, including empty ones.
    pub fn iter(&self) -> impl Iterator<Item = (GroupKey, &[usize])> + '_ {
        self.groups
            .iter()
            .enumerate()
            .map(|(c, ids)| (self.schema.key_for_class(c), ids.as_slice()))
    }

    pub fn non_empty(&self) -> impl Iterator<Item = (GroupKey, &[usize])> + '_ {
        self.iter().filter(|(_, ids)| !ids.is_empty())
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }
}

/// Assigns every manifest example to the group of its label triple.
pub fn build_groups(manifest: &Manifest) -> Result<GroupAssignment> {
    let schema = manifest.schema.clone();
    let mut groups = vec![Vec::new(); schema.num_groups()];
    for (row, ex) in manifest.examples.iter().enumerate() {
        let key = manifest.key_of(ex)?;
        groups[schema.class_index(key)].push(row);
    }
    Ok(GroupAssignment {
        schema,
        groups,
        seed: None,
    })
}

/// Limits every group to at most `cap` members, keeping a uniformly random
/// subset of larger groups. Each group is shuffled from its sorted id list by
/// its own seeded stream, so the result does not depend on iteration order.
pub fn cap_groups(a: &GroupAssignment, cap: usize, seed: u64) -> Result<GroupAssignment> {
    if cap == 0 {
        return Err(Error::Argument("group cap must be positive".into()));
    }
    let groups = a
        .groups
        .iter()
        .enumerate()
        .map(|(class, ids)| {
            if ids.len() <= cap {
                return ids.clone();
            }
            let mut pool = ids.clone();
            pool.sort_unstable();
            pool.shuffle(&mut seed::rng(seed::substream(seed, class as u64)));
            pool.truncate(cap);
            pool.sort_unstable();
            pool
        })
        .collect();
    Ok(GroupAssignment {
        schema: a.schema.clone(),
        groups,
        seed: Some(seed),
    })
}

/// Example counts per group with every marginal shown in the frequency plots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    pub schema: Schema,
    /// Indexed by class.
    pub counts: Vec<u64>,
    pub per_race: Vec<u64>,
    pub per_age: Vec<u64>,
    pub per_gender: Vec<u64>,
    /// `[age][gender]`: column sums over races.
    pub age_gender: Vec<Vec<u64>>,
    /// `[race][gender]`: row sums over ages.
    pub race_gender: Vec<Vec<u64>>,
    /// `[race][age]`: sums over genders.
    pub race_age: Vec<Vec<u64>>,
    pub total: u64,
}

impl FrequencyTable {
    pub fn count(&self, key: GroupKey) -> u64 {
        self.counts[self.schema.class_index(key)]
    }
}

pub fn frequency_table(a: &GroupAssignment) -> FrequencyTable {
    let schema = a.schema.clone();
    let [nr, na, ng] = schema.sizes();
    let mut t = FrequencyTable {
        counts: vec![0; schema.num_groups()],
        per_race: vec![0; nr],
        per_age: vec![0; na],
        per_gender: vec![0; ng],
        age_gender: vec![vec![0; ng]; na],
        race_gender: vec![vec![0; ng]; nr],
        race_age: vec![vec![0; na]; nr],
        total: 0,
        schema,
    };
    for (key, ids) in a.iter() {
        let n = ids.len() as u64;
        let (r, ag, g) = (usize::from(key.race), usize::from(key.age), usize::from(key.gender));
        t.counts[t.schema.class_index(key)] = n;
        t.per_race[r] += n;
        t.per_age[ag] += n;
        t.per_gender[g] += n;
        t.age_gender[ag][g] += n;
        t.race_gender[r][g] += n;
        t.race_age[r][ag] += n;
        t.total += n;
    }
    t
}

fn check_union_arity(fixed: usize) -> Result<()> {
    if fixed == 0 || fixed == 3 {
        return Err(Error::Argument(format!(
            "a union must fix one or two variables, not {fixed}"
        )));
    }
    Ok(())
}

/// Example ids of all intersectional groups matching the fixed categories.
pub fn union_group(a: &GroupAssignment, key: &UnionKey) -> Result<Vec<usize>> {
    check_union_arity(key.fixed_count())?;
    for v in Variable::ALL {
        if let Some(i) = key.get(v) {
            if usize::from(i) >= a.schema.vocab(v).len() {
                return Err(Error::Argument(format!("{v} category index {i} is out of range")));
            }
        }
    }
    let mut ids: Vec<usize> = a
        .iter()
        .filter(|(k, _)| key.contains(*k))
        .flat_map(|(_, ids)| ids.iter().copied())
        .collect();
    ids.sort_unstable();
    Ok(ids)
}

/// Unions for every category combination of the variables in `fixed`.
pub fn union_groups(a: &GroupAssignment, fixed: &[Variable]) -> Result<BTreeMap<UnionKey, Vec<usize>>> {
    let fixed: BTreeSet<Variable> = fixed.iter().copied().collect();
    check_union_arity(fixed.len())?;
    let mut out: BTreeMap<UnionKey, Vec<usize>> = BTreeMap::new();
    for (key, ids) in a.iter() {
        let mut u = UnionKey {
            race: None,
            age: None,
            gender: None,
        };
        for &v in &fixed {
            u.set(v, Some(key.get(v)));
        }
        out.entry(u).or_default().extend_from_slice(ids);
    }
    for ids in out.values_mut() {
        ids.sort_unstable();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn record(id: u64, r: &str, a: &str, g: &str) -> ExampleRecord {
        ExampleRecord {
            example_id: id,
            image_path: format!("img/{id}.jpg"),
            race: r.into(),
            age: a.into(),
            gender: g.into(),
        }
    }

    fn full_manifest(per_group: usize) -> Manifest {
        let schema = Schema::fairface();
        let mut ex = Vec::new();
        for key in schema.keys().collect::<Vec<_>>() {
            for _ in 0..per_group {
                let id = ex.len() as u64;
                ex.push(record(
                    id,
                    schema.label(Variable::Race, key.race),
                    schema.label(Variable::Age, key.age),
                    schema.label(Variable::Gender, key.gender),
                ));
            }
        }
        Manifest::new(schema, ex).unwrap()
    }

    #[test]
    fn fully_crossed_gives_126_groups() {
        let a = build_groups(&full_manifest(2)).unwrap();
        assert_eq!(a.num_groups(), 126);
        assert_eq!(a.non_empty().count(), 126);
    }

    #[test]
    fn single_example_manifest() {
        let m = Manifest::new(Schema::fairface(), vec![record(0, "White", "20-29", "Female")]).unwrap();
        let a = build_groups(&m).unwrap();
        assert_eq!(a.non_empty().count(), 1);
        assert_eq!(a.iter().filter(|(_, ids)| ids.is_empty()).count(), 125);
    }

    #[test]
    fn identical_labels_share_a_group() {
        let m = Manifest::new(
            Schema::fairface(),
            vec![record(0, "Indian", "3-9", "Male"), record(1, "Indian", "3-9", "Male")],
        )
        .unwrap();
        let a = build_groups(&m).unwrap();
        assert_eq!(a.get(m.schema.key("Indian", "3-9", "Male").unwrap()), &[0, 1]);
    }

    #[test]
    fn unknown_label_names_the_example() {
        let ex = vec![
            record(0, "White", "20-29", "Female"),
            record(1, "Martian", "20-29", "Female"),
        ];
        match Manifest::new(Schema::fairface(), ex) {
            Err(Error::Schema { example_id, message }) => {
                assert_eq!(example_id, 1);
                assert!(message.contains("Martian"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_contiguous_ids_are_rejected() {
        let ex = vec![
            record(0, "White", "20-29", "Female"),
            record(2, "White", "20-29", "Female"),
        ];
        assert!(matches!(
            Manifest::new(Schema::fairface(), ex),
            Err(Error::Schema { example_id: 2, .. })
        ));
    }

    fn sized_assignment(sizes: &[(GroupKey, usize)]) -> GroupAssignment {
        let schema = Schema::fairface();
        let mut groups = vec![Vec::new(); schema.num_groups()];
        let mut next = 0;
        for &(key, n) in sizes {
            groups[schema.class_index(key)] = (next..next + n).collect();
            next += n;
        }
        GroupAssignment::from_groups(schema, groups, None).unwrap()
    }

    #[test]
    fn capping_matches_reported_group_sizes() {
        let s = Schema::fairface();
        let big = s.key("White", "20-29", "Female").unwrap();
        let small = s.key("Middle Eastern", "more than 70", "Female").unwrap();
        let a = sized_assignment(&[(big, 2972), (small, 22)]);
        let capped = cap_groups(&a, 640, 11).unwrap();
        assert_eq!(capped.get(big).len(), 640);
        assert_eq!(capped.get(small), a.get(small));
        assert!(capped.get(big).iter().all(|id| a.get(big).binary_search(id).is_ok()));
    }

    #[test]
    fn cap_zero_is_an_error_and_cap_one_keeps_one() {
        let a = build_groups(&full_manifest(3)).unwrap();
        assert!(matches!(cap_groups(&a, 0, 1), Err(Error::Argument(_))));
        let one = cap_groups(&a, 1, 1).unwrap();
        assert!(one.iter().all(|(_, ids)| ids.len() == 1));
    }

    #[test]
    fn empty_assignment_table_is_zero() {
        let a = sized_assignment(&[]);
        let t = frequency_table(&a);
        assert_eq!(t.total, 0);
        assert!(t.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn union_arity() {
        let a = build_groups(&full_manifest(1)).unwrap();
        assert!(union_groups(&a, &[]).is_err());
        assert!(union_groups(&a, &Variable::ALL).is_err());
        let by_age = union_groups(&a, &[Variable::Age]).unwrap();
        assert_eq!(by_age.len(), 9);
        let key = UnionKey {
            race: None,
            age: a.schema().category_index(Variable::Age, "0-2"),
            gender: None,
        };
        assert_eq!(by_age[&key].len(), 14);
        let rg = UnionKey {
            race: a.schema().category_index(Variable::Race, "Indian"),
            age: None,
            gender: a.schema().category_index(Variable::Gender, "Male"),
        };
        assert_eq!(union_group(&a, &rg).unwrap().len(), 9);
    }

    #[test]
    fn display_uses_labels() {
        let s = Schema::fairface();
        let k = s.key("White", "20-29", "Female").unwrap();
        assert_eq!(s.display(k), "White, 20-29, Female");
        assert_eq!(s.key_for_class(s.class_index(k)), k);
        assert_eq!(Variable::Age.to_string(), "age");
    }

    fn random_assignment() -> impl Strategy<Value = GroupAssignment> {
        proptest::collection::vec(0usize..60, 126).prop_map(|sizes| {
            let schema = Schema::fairface();
            let mut next = 0;
            let groups = sizes
                .iter()
                .map(|&n| {
                    let g: Vec<usize> = (next..next + n).collect();
                    next += n;
                    g
                })
                .collect();
            GroupAssignment::from_groups(schema, groups, None).unwrap()
        })
    }

    proptest! {
        #[test]
        fn build_groups_partitions(labels in proptest::collection::vec((0u16..7, 0u16..9, 0u16..2), 0..300)) {
            let schema = Schema::fairface();
            let ex = labels.iter().enumerate().map(|(i, &(r, a, g))| record(
                i as u64,
                schema.label(Variable::Race, r),
                schema.label(Variable::Age, a),
                schema.label(Variable::Gender, g),
            )).collect();
            let m = Manifest::new(schema, ex).unwrap();
            let a = build_groups(&m).unwrap();
            let mut all: Vec<usize> = a.iter().flat_map(|(_, ids)| ids.iter().copied()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        }

        #[test]
        fn capping_is_idempotent_subset(a in random_assignment(), cap in 1usize..40, seed in any::<u64>()) {
            let once = cap_groups(&a, cap, seed).unwrap();
            let twice = cap_groups(&once, cap, seed).unwrap();
            prop_assert_eq!(&once, &twice);
            for ((_, orig), (_, capped)) in a.iter().zip(once.iter()) {
                prop_assert_eq!(capped.len(), orig.len().min(cap));
                prop_assert!(capped.iter().all(|id| orig.contains(id)));
            }
        }

        #[test]
        fn marginals_match_brute_force(a in random_assignment()) {
            let t = frequency_table(&a);
            let s = a.schema();
            let [nr, na, ng] = s.sizes();
            let count = |r: usize, ag: usize, g: usize| a.get(GroupKey { race: r as u16, age: ag as u16, gender: g as u16 }).len() as u64;
            let mut total = 0;
            for r in 0..nr {
                for ag in 0..na {
                    for g in 0..ng {
                        total += count(r, ag, g);
                    }
                }
            }
            prop_assert_eq!(t.total, total);
            prop_assert_eq!(t.total, t.counts.iter().sum::<u64>());
            for ag in 0..na {
                for g in 0..ng {
                    prop_assert_eq!(t.age_gender[ag][g], (0..nr).map(|r| count(r, ag, g)).sum::<u64>());
                }
                prop_assert_eq!(t.per_age[ag], (0..nr).flat_map(|r| (0..ng).map(move |g| (r, g))).map(|(r, g)| count(r, ag, g)).sum::<u64>());
            }
            for r in 0..nr {
                for g in 0..ng {
                    prop_assert_eq!(t.race_gender[r][g], (0..na).map(|ag| count(r, ag, g)).sum::<u64>());
                }
                for ag in 0..na {
                    prop_assert_eq!(t.race_age[r][ag], (0..ng).map(|g| count(r, ag, g)).sum::<u64>());
                }
                prop_assert_eq!(t.per_race[r], t.race_gender[r].iter().sum::<u64>());
            }
            for g in 0..ng {
                prop_assert_eq!(t.per_gender[g], (0..na).map(|ag| t.age_gender[ag][g]).sum::<u64>());
            }
        }

        #[test]
        fn two_variable_unions_match_table_cells(a in random_assignment()) {
            let t = frequency_table(&a);
            let unions = union_groups(&a, &[Variable::Race, Variable::Gender]).unwrap();
            for (u, ids) in &unions {
                let (r, g) = (usize::from(u.race.unwrap()), usize::from(u.gender.unwrap()));
                prop_assert_eq!(ids.len() as u64, t.race_gender[r][g]);
            }
            let unions = union_groups(&a, &[Variable::Age, Variable::Gender]).unwrap();
            for (u, ids) in &unions {
                prop_assert_eq!(ids.len() as u64, t.age_gender[usize::from(u.age.unwrap())][usize::from(u.gender.unwrap())]);
            }
        }
    }
}
