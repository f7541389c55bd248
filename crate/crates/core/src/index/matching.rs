use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::HammingIndex;
use crate::bsc::BitHypervector;
use crate::record::{Attribute, AttributeVectors, CompoundVector};
use crate::{Error, Result};

/// Mask predicate: strictly below the threshold, or an exact match.
///
/// Exact matches always pass so that a zero threshold selects identical
/// vectors instead of nothing.
#[inline]
pub fn passes(distance: f64, threshold: f64) -> bool {
    distance < threshold || distance == 0.0
}

/// Per-attribute Hamming thresholds in `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Fuzziness {
    thresholds: BTreeMap<Attribute, f64>,
}

impl Fuzziness {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn uniform(attrs: &[Attribute], threshold: f64) -> Result<Self> {
        let mut f = Self::new();
        for &a in attrs {
            f.set(a, threshold)?;
        }
        Ok(f)
    }

    pub fn with(mut self, attr: Attribute, threshold: f64) -> Result<Self> {
        self.set(attr, threshold)?;
        Ok(self)
    }

    pub fn set(&mut self, attr: Attribute, threshold: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidParameter(alloc::format!(
                "fuzziness {threshold} for {attr} outside [0, 1]"
            )));
        }
        self.thresholds.insert(attr, threshold);
        Ok(())
    }

    pub fn get(&self, attr: Attribute) -> Option<f64> {
        self.thresholds.get(&attr).copied()
    }

    pub fn require(&self, attr: Attribute) -> Result<f64> {
        self.get(attr)
            .ok_or_else(|| Error::MissingThreshold(attr.name().into()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Attribute, f64)> + '_ {
        self.thresholds.iter().map(|(a, t)| (*a, *t))
    }
}

/// Where query vectors are searched: one index per attribute (MV) or one
/// compound index for every attribute (SV).
#[derive(Clone, Copy, Debug)]
pub enum IndexSet<'a> {
    Multi(&'a BTreeMap<Attribute, HammingIndex>),
    Single(&'a HammingIndex),
}

impl<'a> IndexSet<'a> {
    pub fn for_attribute(&self, attr: Attribute) -> Result<&'a HammingIndex> {
        match self {
            IndexSet::Multi(m) => m
                .get(&attr)
                .ok_or_else(|| Error::UnknownAttribute(attr.name().into())),
            IndexSet::Single(i) => Ok(i),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchOutcome {
    /// Matched ids, ordered by the first query's distance then insertion.
    pub ids: Vec<String>,
    /// `distances[i][j]`: distance of `ids[i]` to query `j`.
    pub distances: Vec<Vec<f64>>,
    /// Ids passing each query's threshold before intersection.
    pub candidates: Vec<usize>,
}

/// Top-`k` search per query (all rows when `k` is `None`), threshold each
/// attribute, intersect the surviving id sets.
pub fn match_queries(
    queries: &[(Attribute, BitHypervector)],
    indices: IndexSet<'_>,
    fuzz: &Fuzziness,
    k: Option<usize>,
) -> Result<MatchOutcome> {
    if queries.is_empty() {
        return Err(Error::Empty("query list"));
    }
    let mut per_query: Vec<(Vec<&str>, BTreeMap<&str, f64>)> = Vec::with_capacity(queries.len());
    for (attr, q) in queries {
        let threshold = fuzz.require(*attr)?;
        let idx = indices.for_attribute(*attr)?;
        let mut order = Vec::new();
        let mut dist = BTreeMap::new();
        if !idx.is_empty() {
            let k = k.unwrap_or(idx.len()).max(1);
            for hit in idx.search(q, k)? {
                if passes(hit.distance, threshold) {
                    order.push(hit.id);
                    dist.insert(hit.id, hit.distance);
                }
            }
        }
        per_query.push((order, dist));
    }
    let candidates = per_query.iter().map(|(o, _)| o.len()).collect();
    let mut out = MatchOutcome {
        candidates,
        ..Default::default()
    };
    let (first, rest) = per_query.split_first().expect("non-empty");
    for &id in &first.0 {
        if rest.iter().all(|(_, d)| d.contains_key(id)) {
            out.distances
                .push(per_query.iter().map(|(_, d)| d[id]).collect());
            out.ids.push(id.into());
        }
    }
    Ok(out)
}

/// Anything that can supply a record's vector for an attribute.
pub trait AttributeSource {
    fn vector_for(&self, attr: Attribute) -> Option<&BitHypervector>;
}

impl AttributeSource for AttributeVectors {
    fn vector_for(&self, attr: Attribute) -> Option<&BitHypervector> {
        self.get(attr)
    }
}

impl AttributeSource for CompoundVector {
    fn vector_for(&self, _attr: Attribute) -> Option<&BitHypervector> {
        Some(&self.vector)
    }
}

/// `queries × records` matrix of exact distances; `None` where the record
/// lacks the attribute.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    pub attributes: Vec<Attribute>,
    pub ids: Vec<String>,
    values: Vec<Option<f64>>,
}

impl DistanceMatrix {
    pub fn get(&self, query: usize, record: usize) -> Option<f64> {
        self.values[query * self.ids.len() + record]
    }

    pub fn row(&self, query: usize) -> &[Option<f64>] {
        let t = self.ids.len();
        &self.values[query * t..(query + 1) * t]
    }

    /// Record positions sorted by ascending distance to `query`, ties by
    /// position; records without the attribute are left out.
    pub fn ordering(&self, query: usize) -> Vec<usize> {
        let mut rows: Vec<(f64, usize)> = self
            .row(query)
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.map(|d| (d, i)))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        rows.into_iter().map(|(_, i)| i).collect()
    }

    /// Boolean mask per query row.
    pub fn mask(&self, fuzz: &Fuzziness) -> Result<Vec<Vec<bool>>> {
        self.attributes
            .iter()
            .enumerate()
            .map(|(q, a)| {
                let t = fuzz.require(*a)?;
                Ok(self
                    .row(q)
                    .iter()
                    .map(|d| d.is_some_and(|d| passes(d, t)))
                    .collect())
            })
            .collect()
    }

    /// Ids whose every mask entry is true, in the same order as
    /// [`match_queries`] reports them.
    pub fn intersect(&self, fuzz: &Fuzziness) -> Result<Vec<String>> {
        let mask = self.mask(fuzz)?;
        if mask.is_empty() {
            return Ok(Vec::new());
        }
        let keep: BTreeSet<usize> = (0..self.ids.len())
            .filter(|&r| mask.iter().all(|m| m[r]))
            .collect();
        Ok(self
            .ordering(0)
            .into_iter()
            .filter(|r| keep.contains(r))
            .map(|r| self.ids[r].clone())
            .collect())
    }
}

/// Brute-force distances from every query to every record.
pub fn distance_matrix<S, R>(queries: &[(Attribute, BitHypervector)], records: &[(S, R)]) -> Result<DistanceMatrix>
where
    S: AsRef<str>,
    R: AttributeSource,
{
    let mut values = Vec::with_capacity(queries.len() * records.len());
    for (attr, q) in queries {
        for (_, rec) in records {
            values.push(match rec.vector_for(*attr) {
                Some(v) => Some(q.hamming(v)?),
                None => None,
            });
        }
    }
    Ok(DistanceMatrix {
        attributes: queries.iter().map(|(a, _)| *a).collect(),
        ids: records.iter().map(|(id, _)| String::from(id.as_ref())).collect(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsc::Rng;
    use alloc::format;
    use alloc::vec;

    fn store(n: usize, dim: usize, seed: u64) -> Vec<(String, AttributeVectors)> {
        let mut rng = Rng::from_seed(seed);
        let langs: Vec<BitHypervector> = (0..3).map(|_| BitHypervector::random(dim, &mut rng).unwrap()).collect();
        (0..n)
            .map(|i| {
                let mut av = AttributeVectors::default();
                av.insert(Attribute::Text, BitHypervector::random(dim, &mut rng).unwrap());
                av.insert(Attribute::Language, langs[i % 3].clone());
                if i % 2 == 0 {
                    av.insert(Attribute::Location, langs[(i / 2) % 3].clone());
                }
                (format!("r{i}"), av)
            })
            .collect()
    }

    fn indices(records: &[(String, AttributeVectors)], dim: usize) -> BTreeMap<Attribute, HammingIndex> {
        let mut out = BTreeMap::new();
        for attr in [Attribute::Text, Attribute::Language, Attribute::Location] {
            let items = records
                .iter()
                .filter_map(|(id, av)| av.get(attr).map(|v| (id.clone(), v.clone())));
            out.insert(attr, HammingIndex::build(attr.name(), dim, items).unwrap());
        }
        out
    }

    #[test]
    fn zero_threshold_selects_exact_matches() {
        let recs = store(30, 256, 1);
        let idx = indices(&recs, 256);
        let q = recs[4].1.get(Attribute::Language).unwrap().clone();
        let fuzz = Fuzziness::new().with(Attribute::Language, 0.0).unwrap();
        let out = match_queries(&[(Attribute::Language, q)], IndexSet::Multi(&idx), &fuzz, None).unwrap();
        assert_eq!(out.ids.len(), 10);
        assert!(out.ids.iter().all(|id| id[1..].parse::<usize>().unwrap() % 3 == 1));
        assert!(out.distances.iter().all(|d| d[0] == 0.0));
    }

    #[test]
    fn intersection_is_subset_of_each_attribute() {
        let recs = store(60, 256, 2);
        let idx = indices(&recs, 256);
        let ql = (Attribute::Language, recs[0].1.get(Attribute::Language).unwrap().clone());
        let qt = (Attribute::Text, recs[0].1.get(Attribute::Text).unwrap().clone());
        let fuzz = Fuzziness::new()
            .with(Attribute::Language, 0.1).unwrap()
            .with(Attribute::Text, 0.49).unwrap();
        let both = match_queries(&[ql.clone(), qt.clone()], IndexSet::Multi(&idx), &fuzz, None).unwrap();
        let lang = match_queries(&[ql], IndexSet::Multi(&idx), &fuzz, None).unwrap();
        let text = match_queries(&[qt], IndexSet::Multi(&idx), &fuzz, None).unwrap();
        for id in &both.ids {
            assert!(lang.ids.contains(id) && text.ids.contains(id));
        }
        assert_eq!(both.candidates, vec![lang.ids.len(), text.ids.len()]);
    }

    #[test]
    fn vacuous_threshold_matches_everything() {
        let recs = store(25, 256, 3);
        let idx = indices(&recs, 256);
        let q = vec![
            (Attribute::Text, recs[3].1.get(Attribute::Text).unwrap().clone()),
            (Attribute::Language, BitHypervector::random(256, &mut Rng::from_seed(1)).unwrap()),
        ];
        let fuzz = Fuzziness::uniform(&[Attribute::Text, Attribute::Language], 1.0).unwrap();
        let out = match_queries(&q, IndexSet::Multi(&idx), &fuzz, None).unwrap();
        assert_eq!(out.ids.len(), 25);
    }

    #[test]
    fn mask_intersection_equals_match() {
        let recs = store(80, 512, 4);
        let idx = indices(&recs, 512);
        let mut rng = Rng::from_seed(5);
        for trial in 0..10 {
            let q = vec![
                (Attribute::Text, BitHypervector::random(512, &mut rng).unwrap()),
                (Attribute::Location, recs[2 * (trial % 5)].1.get(Attribute::Location).unwrap().clone()),
            ];
            let fuzz = Fuzziness::new()
                .with(Attribute::Text, 0.5).unwrap()
                .with(Attribute::Location, 0.3).unwrap();
            let m = match_queries(&q, IndexSet::Multi(&idx), &fuzz, None).unwrap();
            let d = distance_matrix(&q, &recs).unwrap();
            assert_eq!(d.intersect(&fuzz).unwrap(), m.ids);
        }
    }

    #[test]
    fn smaller_k_gives_subset() {
        let recs = store(100, 256, 6);
        let idx = indices(&recs, 256);
        let q = vec![(Attribute::Text, recs[0].1.get(Attribute::Text).unwrap().clone())];
        let fuzz = Fuzziness::uniform(&[Attribute::Text], 0.5).unwrap();
        let all = match_queries(&q, IndexSet::Multi(&idx), &fuzz, None).unwrap();
        let some = match_queries(&q, IndexSet::Multi(&idx), &fuzz, Some(10)).unwrap();
        assert!(some.ids.len() <= 10);
        assert!(some.ids.iter().all(|id| all.ids.contains(id)));
    }

    #[test]
    fn errors() {
        let recs = store(5, 128, 7);
        let idx = indices(&recs, 128);
        let q = vec![(Attribute::Text, recs[0].1.get(Attribute::Text).unwrap().clone())];
        assert!(matches!(
            match_queries(&q, IndexSet::Multi(&idx), &Fuzziness::new(), None),
            Err(Error::MissingThreshold(_))
        ));
        let q = vec![(Attribute::Sentiment, recs[0].1.get(Attribute::Text).unwrap().clone())];
        let fuzz = Fuzziness::uniform(&[Attribute::Sentiment], 0.4).unwrap();
        assert!(matches!(
            match_queries(&q, IndexSet::Multi(&idx), &fuzz, None),
            Err(Error::UnknownAttribute(_))
        ));
        assert!(Fuzziness::new().with(Attribute::Text, 1.5).is_err());
    }

    #[test]
    fn single_entry_matrix() {
        let recs = store(1, 128, 8);
        let q = vec![(Attribute::Text, BitHypervector::zeros(128).unwrap())];
        let d = distance_matrix(&q, &recs).unwrap();
        let expected = q[0].1.hamming(recs[0].1.get(Attribute::Text).unwrap()).unwrap();
        assert_eq!(d.get(0, 0), Some(expected));
        // absent attribute
        let q = vec![(Attribute::Sentiment, BitHypervector::zeros(128).unwrap())];
        assert_eq!(distance_matrix(&q, &recs).unwrap().get(0, 0), None);
    }
}
