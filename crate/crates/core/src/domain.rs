//! Small preference and choice-function domains: exhaustive enumeration, disk caching and
//! seeded random generation.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::choice::ChoiceFunction;
use crate::error::{Error, Result};
use crate::preference::SubsetPreference;
use crate::set::SchoolSet;

/// Largest school set with an exhaustive domain.
pub const EXHAUSTIVE_MAX_SCHOOLS: usize = 3;

fn guard(schools: usize) -> Result<()> {
    if schools > EXHAUSTIVE_MAX_SCHOOLS {
        return Err(Error::too_large(format!(
            "exhaustive domains exist only up to {EXHAUSTIVE_MAX_SCHOOLS} schools, got {schools}"
        )));
    }
    Ok(())
}

/// Every path-independent choice function over `schools` schools, in table order.
pub fn path_independent_choice_functions(schools: usize) -> Result<Vec<ChoiceFunction>> {
    guard(schools)?;
    let rows: Vec<SchoolSet> = SchoolSet::full(schools).subsets().collect();
    let mut by_index = vec![Vec::new(); 1 << schools];
    for a in &rows {
        by_index[a.index()] = a.subsets().collect::<Vec<_>>();
    }
    let mut digits = vec![0usize; by_index.len()];
    let mut out = Vec::new();
    loop {
        let table: Vec<SchoolSet> = digits
            .iter()
            .zip(&by_index)
            .map(|(&d, opts)| opts[d])
            .collect();
        let cf = ChoiceFunction::from_table(schools, table)?;
        if cf.is_path_independent() {
            out.push(cf);
        }
        let mut k = 0;
        loop {
            if k == digits.len() {
                return Ok(out);
            }
            digits[k] += 1;
            if digits[k] < by_index[k].len() {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// Every preference whose acceptable part is an ordered list of distinct nonempty sets and whose
/// induced choice function is path independent. Sets after `∅` are never listed.
pub fn substitutable_preferences(schools: usize) -> Result<Vec<SubsetPreference>> {
    guard(schools)?;
    let nonempty: Vec<SchoolSet> = SchoolSet::full(schools)
        .subsets()
        .filter(|s| !s.is_empty())
        .collect();
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    extend(schools, &nonempty, &mut prefix, &mut out);
    Ok(out)
}

fn extend(
    schools: usize,
    pool: &[SchoolSet],
    prefix: &mut Vec<SchoolSet>,
    out: &mut Vec<SubsetPreference>,
) {
    let pref = SubsetPreference::from_acceptable(schools, prefix.clone())
        .expect("distinct subsets form a ranking");
    if pref.induce_choice_unchecked().is_path_independent() {
        out.push(pref);
    }
    for &set in pool {
        if !prefix.contains(&set) {
            prefix.push(set);
            extend(schools, pool, prefix, out);
            prefix.pop();
        }
    }
}

/// Substitutable preferences grouped by the choice function they induce.
#[derive(Clone, Debug)]
pub struct PreferenceDomain {
    pub preferences: Vec<SubsetPreference>,
    /// Class of each preference, indexing `choices`.
    pub class_of: Vec<usize>,
    /// One choice function per class, in order of first appearance.
    pub choices: Vec<ChoiceFunction>,
    /// First preference of each class.
    pub representatives: Vec<usize>,
}

impl PreferenceDomain {
    pub fn from_preferences(preferences: Vec<SubsetPreference>) -> Self {
        let mut index: HashMap<ChoiceFunction, usize> = HashMap::new();
        let mut class_of = Vec::with_capacity(preferences.len());
        let mut choices = Vec::new();
        let mut representatives = Vec::new();
        for (k, p) in preferences.iter().enumerate() {
            let cf = p.induce_choice_unchecked();
            let next = choices.len();
            let c = *index.entry(cf.clone()).or_insert(next);
            if c == next {
                choices.push(cf);
                representatives.push(k);
            }
            class_of.push(c);
        }
        PreferenceDomain {
            preferences,
            class_of,
            choices,
            representatives,
        }
    }

    pub fn class_count(&self) -> usize {
        self.choices.len()
    }

    pub fn representative(&self, class: usize) -> &SubsetPreference {
        &self.preferences[self.representatives[class]]
    }

    pub fn class_of_choice(&self, cf: &ChoiceFunction) -> Option<usize> {
        self.choices.iter().position(|c| c == cf)
    }
}

/// The exhaustive substitutable domain, generated once per process.
pub fn exhaustive_domain(schools: usize) -> Result<&'static PreferenceDomain> {
    guard(schools)?;
    static CACHE: OnceLock<Vec<PreferenceDomain>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        (0..=EXHAUSTIVE_MAX_SCHOOLS)
            .map(|n| {
                PreferenceDomain::from_preferences(
                    substitutable_preferences(n).expect("within guard"),
                )
            })
            .collect()
    });
    Ok(&all[schools])
}

/// Loads the substitutable domain from `dir`, generating and writing it on first use.
///
/// The file stores acceptable lists as subset bit patterns; every entry is revalidated on load.
pub fn cached_substitutable_preferences(schools: usize, dir: &Path) -> Result<Vec<SubsetPreference>> {
    guard(schools)?;
    let path = dir.join(format!("substitutable-{schools}.json"));
    if let Ok(text) = fs::read_to_string(&path) {
        let lists: Vec<Vec<u16>> = serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        return lists
            .into_iter()
            .map(|bits| {
                let pref = SubsetPreference::from_acceptable(
                    schools,
                    bits.into_iter().map(SchoolSet::from_bits).collect(),
                )?;
                pref.induce_choice()?;
                Ok(pref)
            })
            .collect();
    }
    let prefs = substitutable_preferences(schools)?;
    let lists: Vec<Vec<u16>> = prefs
        .iter()
        .map(|p| p.acceptable().iter().map(|s| s.bits()).collect())
        .collect();
    fs::create_dir_all(dir).map_err(|e| Error::invalid(format!("{}: {e}", dir.display())))?;
    let text = serde_json::to_string(&lists).expect("plain data serializes");
    fs::write(&path, text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    Ok(prefs)
}

/// A random path-independent choice function: the union of up to three capped maximizers, each
/// keeping its best one or two acceptable schools.
pub fn random_path_independent<R: Rng + ?Sized>(schools: usize, rng: &mut R) -> ChoiceFunction {
    let mut order: Vec<usize> = (0..schools).collect();
    let parts: Vec<(Vec<usize>, usize)> = (0..rng.gen_range(1..=3))
        .map(|_| {
            order.shuffle(rng);
            let acceptable: Vec<usize> = order.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
            (acceptable, rng.gen_range(1..=2))
        })
        .collect();
    ChoiceFunction::from_fn(schools, |offered| {
        let mut chosen = SchoolSet::EMPTY;
        for (acceptable, cap) in &parts {
            for s in acceptable.iter().copied().filter(|&s| offered.contains(s)).take(*cap) {
                chosen = chosen.with(s);
            }
        }
        chosen
    })
}

/// A random substitutable preference: a random acceptable set of schools in random order and a
/// cap `k`; all acceptable sets of size at most `k` are ranked lexicographically, better schools
/// first and supersets before their prefixes. The induced choice keeps the best `k` offered.
pub fn random_substitutable_preference<R: Rng + ?Sized>(
    schools: usize,
    rng: &mut R,
) -> SubsetPreference {
    let mut order: Vec<usize> = (0..schools).collect();
    order.shuffle(rng);
    let acceptable: Vec<usize> = order.into_iter().filter(|_| rng.gen_bool(0.75)).collect();
    if acceptable.is_empty() {
        return SubsetPreference::new(schools, vec![SchoolSet::EMPTY]).expect("valid");
    }
    let cap = rng.gen_range(1..=acceptable.len().min(3));
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    lex_sets(&acceptable, 0, cap, &mut stack, &mut sets);
    let ranking = sets
        .into_iter()
        .map(|ranks| SchoolSet::from_indices(ranks.into_iter().map(|r| acceptable[r])))
        .collect();
    SubsetPreference::from_acceptable(schools, ranking).expect("distinct sets")
}

// Sets over rank positions in lexicographic order where a set precedes its own prefixes.
fn lex_sets(items: &[usize], from: usize, cap: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    for r in from..items.len() {
        stack.push(r);
        if stack.len() < cap {
            lex_sets(items, r + 1, cap, stack, out);
        }
        out.push(stack.clone());
        stack.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn path_independent_counts() {
        let counts: Vec<usize> = (0..=3)
            .map(|n| path_independent_choice_functions(n).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 2, 6, 35]);
    }

    #[test]
    fn substitutable_counts_and_classes() {
        let counts: Vec<usize> = (1..=3)
            .map(|n| substitutable_preferences(n).unwrap().len())
            .collect();
        assert_eq!(counts, vec![2, 13, 7093]);
        for n in 1..=3 {
            let domain = exhaustive_domain(n).unwrap();
            let pi = path_independent_choice_functions(n).unwrap();
            assert_eq!(domain.class_count(), pi.len());
            assert!(pi.iter().all(|cf| domain.class_of_choice(cf).is_some()));
        }
    }

    #[test]
    fn guards() {
        assert!(matches!(
            path_independent_choice_functions(4),
            Err(Error::DomainTooLarge { .. })
        ));
        assert!(substitutable_preferences(4).is_err());
    }

    #[test]
    fn disk_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let first = cached_substitutable_preferences(2, dir.path()).unwrap();
        assert!(dir.path().join("substitutable-2.json").exists());
        let second = cached_substitutable_preferences(2, dir.path()).unwrap();
        assert_eq!(first, second);
        assert_eq!(first, substitutable_preferences(2).unwrap());
    }

    #[test]
    fn random_generators_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            assert!(random_path_independent(4, &mut rng).is_path_independent());
            let p = random_substitutable_preference(4, &mut rng);
            assert!(p.induce_choice().is_ok());
        }
    }

    #[test]
    fn lexicographic_capped_preference_keeps_best_k() {
        let mut out = Vec::new();
        lex_sets(&[0, 1, 2], 0, 2, &mut Vec::new(), &mut out);
        assert_eq!(
            out,
            vec![vec![0, 1], vec![0, 2], vec![0], vec![1, 2], vec![1], vec![2]]
        );
    }
}
