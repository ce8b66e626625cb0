//! Vertex enumeration: per-axis extremes, gluing of duplicates by
//! neighbor-list overlap, and the random-triangle false-vertex filter.

use std::cmp::Ordering;
use std::collections::HashSet;

use log::warn;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::geometry::outside_triangle_fraction;
use crate::pca::{project_onto_axis, PcaModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisEnd {
    Min,
    Max,
}

/// A word found at one end of a principal axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexCandidate {
    pub word_index: usize,
    pub axis_index: usize,
    pub end: AxisEnd,
    pub score: f64,
}

impl VertexCandidate {
    fn rank_key(&self) -> (usize, AxisEnd) {
        (self.axis_index, self.end)
    }
}

/// A deduplicated simplex corner.
#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub representative: usize,
    /// Merged candidates, sorted by (axis, end).
    pub members: Vec<VertexCandidate>,
    /// Top-K word indices by cosine similarity to the representative,
    /// the representative first.
    pub neighbor_set: Vec<usize>,
    /// Mean outside-triangle fraction over the filter trials; NaN until
    /// the filter has run.
    pub outside_fraction: f64,
}

impl Vertex {
    pub fn first_member(&self) -> &VertexCandidate {
        &self.members[0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionParams {
    pub num_axes: usize,
    /// Neighbor-list size used for gluing.
    pub k: usize,
    /// Minimum Jaccard index of two neighbor lists for their candidates to
    /// be glued.
    pub glue_threshold: f64,
    /// Random vertex pairs tried per vertex by the filter.
    pub trials: usize,
    /// A vertex survives when its mean outside fraction is at most `tau`.
    pub tau: f64,
    pub seed: u64,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        ExtractionParams {
            num_axes: 50,
            k: 100,
            glue_threshold: 0.3,
            trials: 20,
            tau: 0.1,
            seed: 0,
        }
    }
}

impl ExtractionParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_axes == 0 {
            return Err(Error::invalid("num_axes must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.glue_threshold) {
            return Err(Error::invalid("glue_threshold must lie in [0, 1]"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::invalid("tau must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Argmin and argmax of each of the first `num_axes` axis projections,
/// ordered `axis0-min, axis0-max, axis1-min, ...`. Ties go to the lowest
/// word index.
pub fn find_candidates(
    space: &EmbeddingSpace,
    pca: &PcaModel,
    num_axes: usize,
) -> Result<Vec<VertexCandidate>> {
    if num_axes > pca.num_axes() {
        return Err(Error::invalid(format!(
            "asked for {num_axes} axes but the model has {}",
            pca.num_axes()
        )));
    }
    let per_axis: Vec<Result<[VertexCandidate; 2]>> = (0..num_axes)
        .into_par_iter()
        .map(|axis| {
            let scores = project_onto_axis(space, pca, axis)?;
            let (mut lo, mut hi) = (0usize, 0usize);
            for (j, &s) in scores.iter().enumerate() {
                if s < scores[lo] {
                    lo = j;
                }
                if s > scores[hi] {
                    hi = j;
                }
            }
            Ok([
                VertexCandidate {
                    word_index: lo,
                    axis_index: axis,
                    end: AxisEnd::Min,
                    score: scores[lo],
                },
                VertexCandidate {
                    word_index: hi,
                    axis_index: axis,
                    end: AxisEnd::Max,
                    score: scores[hi],
                },
            ])
        })
        .collect();
    let mut out = Vec::with_capacity(2 * num_axes);
    for pair in per_axis {
        out.extend(pair?);
    }
    Ok(out)
}

/// Exact cosine-similarity search over a vocabulary.
pub struct CosineIndex<'a> {
    space: &'a EmbeddingSpace,
    norms: Vec<f64>,
}

impl<'a> CosineIndex<'a> {
    pub fn new(space: &'a EmbeddingSpace) -> Self {
        let norms = space
            .rows()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        CosineIndex { space, norms }
    }

    pub fn space(&self) -> &'a EmbeddingSpace {
        self.space
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    /// Cosine similarity of two vocabulary rows; 0 when either is zero.
    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        let (ni, nj) = (self.norms[i], self.norms[j]);
        if ni == 0.0 || nj == 0.0 {
            return 0.0;
        }
        dot(self.space.row(i), self.space.row(j)) / (ni * nj)
    }

    /// Top `k` words by cosine similarity to `query`, best first. Ties go to
    /// the lower word index; zero rows rank after every nonzero row.
    pub fn topk(&self, query: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        self.topk_excluding(query, k, None)
    }

    /// Top `k` neighbors of a vocabulary word, the word itself first with
    /// similarity 1.
    pub fn word_neighbors(&self, word: usize, k: usize) -> Result<Vec<(usize, f64)>> {
        if word >= self.space.len() {
            return Err(Error::invalid(format!("word index {word} out of range")));
        }
        if k == 0 || k > self.space.len() {
            return Err(Error::invalid(format!(
                "k must be in 1..={}, got {k}",
                self.space.len()
            )));
        }
        let mut out = Vec::with_capacity(k);
        if self.norms[word] == 0.0 {
            out.push((word, 0.0));
            out.extend(
                (0..self.space.len())
                    .filter(|&j| j != word)
                    .take(k - 1)
                    .map(|j| (j, 0.0)),
            );
            return Ok(out);
        }
        out.push((word, 1.0));
        if k > 1 {
            out.extend(self.topk_excluding(self.space.row(word), k - 1, Some(word))?);
        }
        Ok(out)
    }

    fn topk_excluding(
        &self,
        query: &[f64],
        k: usize,
        skip: Option<usize>,
    ) -> Result<Vec<(usize, f64)>> {
        let n = self.space.len() - usize::from(skip.is_some());
        if k == 0 || k > n {
            return Err(Error::invalid(format!("k must be in 1..={n}, got {k}")));
        }
        if query.len() != self.space.dim() {
            return Err(Error::invalid("query dimension differs from the space"));
        }
        let qn = dot(query, query).sqrt();
        if qn == 0.0 {
            return Err(Error::invalid("query vector is zero"));
        }
        let mut scored: Vec<(usize, f64, bool)> = self
            .space
            .rows()
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(j, row)| {
                let nj = self.norms[j];
                if nj == 0.0 {
                    (j, 0.0, true)
                } else {
                    (j, dot(query, row) / (qn * nj), false)
                }
            })
            .collect();
        let cmp = |a: &(usize, f64, bool), b: &(usize, f64, bool)| -> Ordering {
            a.2.cmp(&b.2)
                .then_with(|| b.1.total_cmp(&a.1))
                .then_with(|| a.0.cmp(&b.0))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_unstable_by(cmp);
        Ok(scored.into_iter().map(|(j, s, _)| (j, s)).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exact top-`k` cosine neighbors of an arbitrary query vector.
pub fn topk_neighbors(space: &EmbeddingSpace, query: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
    CosineIndex::new(space).topk(query, k)
}

/// Jaccard index of two index sets.
pub fn jaccard(a: &HashSet<usize>, b: &HashSet<usize>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Groups candidates by the Jaccard overlap of their top-K neighbor lists.
/// Each connected component of the "overlap at least `glue_threshold`"
/// graph becomes one vertex, represented by its lowest-axis member.
pub fn glue_candidates(
    space: &EmbeddingSpace,
    candidates: &[VertexCandidate],
    params: &ExtractionParams,
) -> Result<Vec<Vertex>> {
    let index = CosineIndex::new(space);
    let lists: Vec<Vec<usize>> = candidates
        .par_iter()
        .map(|c| {
            index
                .word_neighbors(c.word_index, params.k)
                .map(|v| v.into_iter().map(|(j, _)| j).collect())
        })
        .collect::<Result<_>>()?;
    glue_with_neighbor_lists(candidates, &lists, params.glue_threshold)
}

/// Gluing on precomputed neighbor lists (`lists[i]` belongs to
/// `candidates[i]`).
pub fn glue_with_neighbor_lists(
    candidates: &[VertexCandidate],
    lists: &[Vec<usize>],
    glue_threshold: f64,
) -> Result<Vec<Vertex>> {
    if candidates.len() != lists.len() {
        return Err(Error::invalid("one neighbor list per candidate is required"));
    }
    let sets: Vec<HashSet<usize>> = lists.iter().map(|l| l.iter().copied().collect()).collect();
    let n = candidates.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if jaccard(&sets[i], &sets[j]) >= glue_threshold {
                uf.union(i, j);
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let root = uf.find(i);
        groups[root].push(i);
    }

    let mut vertices: Vec<Vertex> = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|mut g| {
            g.sort_by_key(|&i| candidates[i].rank_key());
            let lead = g[0];
            Vertex {
                representative: candidates[lead].word_index,
                members: g.iter().map(|&i| candidates[i]).collect(),
                neighbor_set: lists[lead].clone(),
                outside_fraction: f64::NAN,
            }
        })
        .collect();
    vertices.sort_by_key(|v| v.first_member().rank_key());
    Ok(vertices)
}

/// Result of the false-vertex filter. Every vertex carries its measured
/// outside fraction.
#[derive(Clone, Debug)]
pub struct FilterOutcome {
    pub survivors: Vec<Vertex>,
    pub rejected: Vec<Vertex>,
    /// Set when fewer than three vertices were given and nothing was tested.
    pub untested: bool,
}

/// Ranks a vertex may be paired with in the triangle test: every vertex
/// found on an earlier axis, or the other two of the first three for ranks
/// 0 and 1.
pub fn partner_pool(n: usize, rank: usize) -> Vec<usize> {
    if rank >= 2 {
        (0..rank).collect()
    } else {
        (0..n.min(3)).filter(|&r| r != rank).collect()
    }
}

/// Mean outside-triangle fraction of vertex `rank` over random triangles
/// formed with two vertices from its [`partner_pool`]. The pair sequence depends only on
/// `(seed, rank)`. Degenerate triangles are redrawn, up to `10 * trials`
/// draws in total.
pub fn outside_fraction_for(
    space: &EmbeddingSpace,
    representatives: &[usize],
    rank: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let n = representatives.len();
    if n < 3 {
        return Err(Error::invalid("the triangle test needs at least three vertices"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rank as u64);

    let me = representatives[rank];
    let pool = partner_pool(n, rank);
    let p = pool.len();
    let mut total = 0.0;
    let mut valid = 0usize;
    for _ in 0..trials.saturating_mul(10) {
        if valid == trials {
            break;
        }
        let i = rng.random_range(0..p);
        let mut j = rng.random_range(0..p - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (pool[i], pool[j]);
        match outside_triangle_fraction(space, [me, representatives[a], representatives[b]]) {
            Ok(f) => {
                total += f;
                valid += 1;
            }
            Err(Error::DegenerateTriangle(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    if valid == 0 {
        return Err(Error::DegenerateVertex {
            vertex: me,
            token: space.word(me).to_owned(),
        });
    }
    Ok(total / valid as f64)
}

/// Rejects vertices whose random triangles leave more than `tau` of the
/// cloud outside on average.
pub fn filter_false_vertices(
    space: &EmbeddingSpace,
    vertices: Vec<Vertex>,
    params: &ExtractionParams,
) -> Result<FilterOutcome> {
    if vertices.len() < 3 {
        warn!(
            "only {} vertices; the triangle test needs three, keeping all",
            vertices.len()
        );
        return Ok(FilterOutcome {
            survivors: vertices,
            rejected: Vec::new(),
            untested: true,
        });
    }
    let reps: Vec<usize> = vertices.iter().map(|v| v.representative).collect();
    let fractions: Vec<f64> = (0..reps.len())
        .into_par_iter()
        .map(|rank| outside_fraction_for(space, &reps, rank, params.trials, params.seed))
        .collect::<Result<_>>()?;

    let mut survivors = Vec::new();
    let mut rejected = Vec::new();
    for (mut v, f) in vertices.into_iter().zip(fractions) {
        v.outside_fraction = f;
        if f <= params.tau {
            survivors.push(v);
        } else {
            rejected.push(v);
        }
    }
    Ok(FilterOutcome {
        survivors,
        rejected,
        untested: false,
    })
}

/// The `k_desc` words closest in cosine to the vertex's representative,
/// the representative itself first.
pub fn describe_vertex(
    space: &EmbeddingSpace,
    vertex: &Vertex,
    k_desc: usize,
) -> Result<Vec<(String, f64)>> {
    describe_with(&CosineIndex::new(space), vertex, k_desc)
}

pub fn describe_with(
    index: &CosineIndex<'_>,
    vertex: &Vertex,
    k_desc: usize,
) -> Result<Vec<(String, f64)>> {
    if k_desc == 0 {
        return Err(Error::invalid("description size must be at least 1"));
    }
    let k = k_desc.min(index.space().len());
    Ok(index
        .word_neighbors(vertex.representative, k)?
        .into_iter()
        .map(|(j, s)| (index.space().word(j).to_owned(), s))
        .collect())
}

/// Cosine distance from a word to every vertex representative, in vertex
/// order.
pub fn vertex_profile(
    space: &EmbeddingSpace,
    word_index: usize,
    vertices: &[Vertex],
) -> Result<Vec<f64>> {
    if word_index >= space.len() {
        return Err(Error::invalid(format!("word index {word_index} out of range")));
    }
    let index = CosineIndex::new(space);
    if index.norm(word_index) == 0.0 {
        return Err(Error::invalid(format!(
            "word `{}` has a zero vector",
            space.word(word_index)
        )));
    }
    Ok(vertices
        .iter()
        .map(|v| {
            if v.representative == word_index {
                0.0
            } else {
                (1.0 - index.similarity(word_index, v.representative)).clamp(0.0, 2.0)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(rows: &[&[f64]]) -> EmbeddingSpace {
        EmbeddingSpace::new(
            (0..rows.len()).map(|i| format!("t{i}")).collect(),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    fn cand(word: usize, axis: usize, end: AxisEnd) -> VertexCandidate {
        VertexCandidate {
            word_index: word,
            axis_index: axis,
            end,
            score: 0.0,
        }
    }

    #[test]
    fn orthogonal_neighbors() {
        let s = space(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let got = topk_neighbors(&s, &[1.0, 0.0], 2).unwrap();
        assert_eq!(got, vec![(0, 1.0), (1, 0.0)]);
        assert!(topk_neighbors(&s, &[0.0, 0.0], 1).is_err());
        assert!(topk_neighbors(&s, &[1.0, 0.0], 3).is_err());
    }

    #[test]
    fn self_is_nearest() {
        let s = space(&[&[1.0, 2.0], &[2.0, 1.0], &[-1.0, 0.5]]);
        let got = topk_neighbors(&s, s.row(2), 1).unwrap();
        assert_eq!(got[0].0, 2);
        assert!((got[0].1 - 1.0).abs() < 1e-15);
        let idx = CosineIndex::new(&s);
        assert_eq!(idx.word_neighbors(1, 3).unwrap()[0], (1, 1.0));
    }

    #[test]
    fn zero_rows_rank_last() {
        let s = space(&[&[0.0, 0.0], &[-1.0, 0.0], &[1.0, 0.1]]);
        let got = topk_neighbors(&s, &[1.0, 0.0], 3).unwrap();
        assert_eq!(got.iter().map(|p| p.0).collect::<Vec<_>>(), vec![2, 1, 0]);
        assert_eq!(got[2].1, 0.0);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let s = space(&[&[2.0, 0.0], &[1.0, 0.0], &[3.0, 0.0]]);
        let got = topk_neighbors(&s, &[1.0, 0.0], 2).unwrap();
        assert_eq!(got.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn identical_words_glue() {
        let c = [cand(3, 0, AxisEnd::Max), cand(3, 2, AxisEnd::Min)];
        let lists = vec![vec![3, 4, 5], vec![3, 4, 5]];
        let v = glue_with_neighbor_lists(&c, &lists, 0.3).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].members.len(), 2);
        assert_eq!(v[0].representative, 3);
    }

    #[test]
    fn disjoint_lists_do_not_glue() {
        let c = [
            cand(0, 0, AxisEnd::Min),
            cand(1, 0, AxisEnd::Max),
            cand(2, 1, AxisEnd::Min),
        ];
        let lists = vec![vec![0, 10], vec![1, 11], vec![2, 12]];
        let v = glue_with_neighbor_lists(&c, &lists, 0.3).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(
            v.iter().map(|x| x.representative).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn representative_is_lowest_axis_min_first() {
        let c = [
            cand(7, 3, AxisEnd::Min),
            cand(8, 1, AxisEnd::Max),
            cand(9, 1, AxisEnd::Min),
        ];
        let lists = vec![vec![1, 2], vec![1, 2], vec![1, 2]];
        let v = glue_with_neighbor_lists(&c, &lists, 1.0).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].representative, 9);
        assert_eq!(v[0].members[0].end, AxisEnd::Min);
    }

    #[test]
    fn jaccard_values() {
        let a: HashSet<usize> = [1, 2, 3].into();
        let b: HashSet<usize> = [2, 3, 4].into();
        assert_eq!(jaccard(&a, &b), 0.5);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&a, &HashSet::from([9])), 0.0);
    }

    #[test]
    fn union_find_components() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 1));
        assert!(uf.union(3, 4));
        assert!(!uf.union(1, 0));
        assert_eq!(uf.find(0), uf.find(1));
        assert_ne!(uf.find(1), uf.find(3));
        assert_ne!(uf.find(2), uf.find(0));
    }

    #[test]
    fn fewer_than_three_vertices_pass_through() {
        let s = space(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let vs: Vec<Vertex> = (0..2)
            .map(|i| Vertex {
                representative: i,
                members: vec![cand(i, 0, AxisEnd::Min)],
                neighbor_set: vec![i],
                outside_fraction: f64::NAN,
            })
            .collect();
        let out = filter_false_vertices(&s, vs.clone(), &ExtractionParams::default()).unwrap();
        assert!(out.untested);
        let reps: Vec<usize> = out.survivors.iter().map(|v| v.representative).collect();
        assert_eq!(reps, vec![0, 1]);
        assert!(out.survivors.iter().all(|v| v.outside_fraction.is_nan()));
        assert!(out.rejected.is_empty());
    }

    #[test]
    fn all_degenerate_triangles_fail_loudly() {
        // Collinear representatives.
        let s = space(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0]]);
        let reps = [0, 1, 2, 3];
        let err = outside_fraction_for(&s, &reps, 0, 5, 1).unwrap_err();
        assert!(matches!(err, Error::DegenerateVertex { vertex: 0, .. }));
    }

    #[test]
    fn pair_draws_avoid_self() {
        // Square corners plus centre: every draw must be a proper triangle
        // through the tested vertex, so the corner never sees the centre
        // as its own partner.
        let s = space(&[
            &[0.0, 0.0],
            &[1.0, 0.0],
            &[0.0, 1.0],
            &[1.0, 1.0],
            &[0.5, 0.5],
        ]);
        let reps = [0, 1, 2, 3];
        for rank in 0..4 {
            let f = outside_fraction_for(&s, &reps, rank, 50, 7).unwrap();
            assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn profile_entries() {
        let s = space(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]]);
        let vs: Vec<Vertex> = [0usize, 1, 2]
            .iter()
            .map(|&i| Vertex {
                representative: i,
                members: vec![cand(i, 0, AxisEnd::Min)],
                neighbor_set: vec![i],
                outside_fraction: f64::NAN,
            })
            .collect();
        let p = vertex_profile(&s, 0, &vs).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 2.0]);
        let z = space(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert!(vertex_profile(&z, 0, &vs[..1]).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ExtractionParams::default().validate().is_ok());
        let bad = ExtractionParams {
            tau: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExtractionParams {
            k: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
