//! Approximate nearest neighbours under angular distance with a forest of
//! random-projection trees, searched best-first through one shared queue.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::ingest::io::write_file;
use crate::vectorize::DocVector;
use crate::{Error, Result};

pub const DEFAULT_TREES: usize = 50;
pub const DEFAULT_SEARCH_NODES: usize = 2_000;
pub const DEFAULT_K: usize = 20;
pub const DEFAULT_LEAF_CAPACITY: usize = 16;
pub const MAX_DEPTH: usize = 64;

const MAGIC: &[u8; 8] = b"BIMNANN\0";
const VERSION: u32 = 1;
const TWO_MEANS_STEPS: usize = 200;

/// Angular distance `sqrt(2 - 2 cos(a, b))`, computed as the Euclidean
/// distance of the normalized vectors. Zero vectors are at distance 0 from
/// nothing but themselves; callers must not pass them.
pub fn angular_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x / na - y / nb).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BuildParams {
    pub n_trees: usize,
    pub leaf_capacity: usize,
    pub seed: u64,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            n_trees: DEFAULT_TREES,
            leaf_capacity: DEFAULT_LEAF_CAPACITY,
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SearchParams {
    pub k: usize,
    /// Nodes popped from the queue before the search stops.
    pub search_nodes: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            search_nodes: DEFAULT_SEARCH_NODES,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Split {
        normal: Vec<f32>,
        offset: f64,
        left: u32,
        right: u32,
    },
    Leaf(Vec<u32>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub item: u32,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnIndex {
    dim: usize,
    leaf_capacity: usize,
    ids: Vec<String>,
    /// Unit-length copies of the indexed vectors.
    items: Vec<f64>,
    excluded: Vec<String>,
    nodes: Vec<Node>,
    roots: Vec<u32>,
}

struct Queued(f64, u32);

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(o.1.cmp(&self.1))
    }
}

struct TreeBuilder<'a> {
    dim: usize,
    items: &'a [f64],
    leaf_capacity: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    fn item(&self, i: u32) -> &'a [f64] {
        &self.items[i as usize * self.dim..(i as usize + 1) * self.dim]
    }

    fn build(&mut self, subset: Vec<u32>, depth: usize) -> u32 {
        if subset.len() <= self.leaf_capacity || depth >= MAX_DEPTH {
            self.nodes.push(Node::Leaf(subset));
            return (self.nodes.len() - 1) as u32;
        }
        let (normal, offset) = self.hyperplane(&subset);
        let (mut left, mut right): (Vec<u32>, Vec<u32>) =
            subset.iter().partition(|&&i| margin(&normal, offset, self.item(i)) > 0.0);
        if left.is_empty() || right.is_empty() {
            // all points coincide on this hyperplane: split at random
            let all = subset;
            left = Vec::new();
            right = Vec::new();
            for i in all {
                if self.rng.gen::<bool>() {
                    left.push(i);
                } else {
                    right.push(i);
                }
            }
            if left.is_empty() {
                left.push(right.pop().expect("subset larger than leaf capacity"));
            } else if right.is_empty() {
                right.push(left.pop().expect("subset larger than leaf capacity"));
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(Vec::new()));
        let l = self.build(left, depth + 1);
        let r = self.build(right, depth + 1);
        self.nodes[id] = Node::Split {
            normal,
            offset,
            left: l,
            right: r,
        };
        id as u32
    }

    /// Perpendicular bisector of two centroids seeded from two distinct
    /// random items and refined by a few online two-means steps.
    fn hyperplane(&mut self, subset: &[u32]) -> (Vec<f32>, f64) {
        let n = subset.len();
        let a = self.rng.gen_range(0..n);
        let mut b = self.rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let mut c = [self.item(subset[a]).to_vec(), self.item(subset[b]).to_vec()];
        let mut counts = [1.0f64, 1.0];
        for _ in 0..TWO_MEANS_STEPS {
            let j = self.rng.gen_range(0..n);
            let x = self.item(subset[j]);
            let d0: f64 = c[0].iter().zip(x).map(|(p, q)| (p - q).powi(2)).sum();
            let d1: f64 = c[1].iter().zip(x).map(|(p, q)| (p - q).powi(2)).sum();
            let k = usize::from(d1 < d0);
            for (ck, xk) in c[k].iter_mut().zip(x) {
                *ck = (*ck * counts[k] + xk) / (counts[k] + 1.0);
            }
            counts[k] += 1.0;
        }
        let normal: Vec<f64> = c[0].iter().zip(&c[1]).map(|(p, q)| p - q).collect();
        let len = norm(&normal);
        if len > 1e-12 {
            let mid: Vec<f64> = c[0].iter().zip(&c[1]).map(|(p, q)| (p + q) / 2.0).collect();
            return finish(&normal, len, &mid);
        }
        // coinciding centroids: random direction through the subset mean
        let normal: Vec<f64> = (0..self.dim).map(|_| self.rng.sample(StandardNormal)).collect();
        let mut mean = vec![0.0; self.dim];
        for &i in subset {
            for (m, x) in mean.iter_mut().zip(self.item(i)) {
                *m += x / n as f64;
            }
        }
        finish(&normal, norm(&normal), &mean)
    }
}

fn finish(normal: &[f64], len: f64, through: &[f64]) -> (Vec<f32>, f64) {
    let unit: Vec<f32> = normal.iter().map(|x| (x / len) as f32).collect();
    let offset = unit.iter().zip(through).map(|(&u, p)| u as f64 * p).sum();
    (unit, offset)
}

fn margin(normal: &[f32], offset: f64, x: &[f64]) -> f64 {
    normal.iter().zip(x).map(|(&u, v)| u as f64 * v).sum::<f64>() - offset
}

impl AnnIndex {
    /// Builds the forest. All-zero vectors have no direction and are left
    /// out; their ids are reported by [`AnnIndex::excluded`].
    pub fn build(vectors: &[DocVector], params: &BuildParams) -> Result<Self> {
        if params.n_trees == 0 {
            return Err(Error::invalid("the forest needs at least one tree"));
        }
        if params.leaf_capacity == 0 {
            return Err(Error::invalid("leaf capacity must be at least 1"));
        }
        let Some(dim) = vectors.first().map(|v| v.vector.len()) else {
            return Err(Error::invalid("cannot index an empty item set"));
        };
        let mut ids = Vec::new();
        let mut items = Vec::new();
        let mut excluded = Vec::new();
        for v in vectors {
            if v.vector.len() != dim {
                return Err(Error::invalid(format!(
                    "vector of `{}` has dimension {}, expected {dim}",
                    v.doc_id,
                    v.vector.len()
                )));
            }
            let n = norm(&v.vector);
            if n == 0.0 {
                excluded.push(v.doc_id.clone());
                continue;
            }
            ids.push(v.doc_id.clone());
            items.extend(v.vector.iter().map(|x| x / n));
        }
        if !excluded.is_empty() {
            log::info!("{} zero vectors left out of the index: {}", excluded.len(), excluded.join(", "));
        }
        if ids.is_empty() {
            return Err(Error::invalid("cannot index an empty item set (all vectors are zero)"));
        }
        let all: Vec<u32> = (0..ids.len() as u32).collect();
        let trees: Vec<Vec<Node>> = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(t as u64);
                let mut b = TreeBuilder {
                    dim,
                    items: &items,
                    leaf_capacity: params.leaf_capacity,
                    rng,
                    nodes: Vec::new(),
                };
                b.build(all.clone(), 0);
                b.nodes
            })
            .collect();
        let mut nodes = Vec::new();
        let mut roots = Vec::with_capacity(trees.len());
        for tree in trees {
            let base = nodes.len() as u32;
            roots.push(base);
            nodes.extend(tree.into_iter().map(|n| match n {
                Node::Split {
                    normal,
                    offset,
                    left,
                    right,
                } => Node::Split {
                    normal,
                    offset,
                    left: left + base,
                    right: right + base,
                },
                leaf => leaf,
            }));
        }
        Ok(Self {
            dim,
            leaf_capacity: params.leaf_capacity,
            ids,
            items,
            excluded,
            nodes,
            roots,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_trees(&self) -> usize {
        self.roots.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn id(&self, item: u32) -> &str {
        &self.ids[item as usize]
    }

    pub fn excluded(&self) -> &[String] {
        &self.excluded
    }

    fn item(&self, i: u32) -> &[f64] {
        &self.items[i as usize * self.dim..(i as usize + 1) * self.dim]
    }

    fn unit_query(&self, q: &[f64]) -> Result<Vec<f64>> {
        if q.len() != self.dim {
            return Err(Error::invalid(format!(
                "query has dimension {}, index has {}",
                q.len(),
                self.dim
            )));
        }
        let n = norm(q);
        if n == 0.0 {
            return Err(Error::invalid("zero query vector has no direction"));
        }
        Ok(q.iter().map(|x| x / n).collect())
    }

    /// Up to `k` items ranked by exact angular distance among the candidates
    /// collected within the node budget. Ties are ranked by item order.
    pub fn query(&self, q: &[f64], params: &SearchParams) -> Result<Vec<Neighbor>> {
        if params.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if params.search_nodes < self.n_trees() {
            return Err(Error::invalid(format!(
                "search budget {} is below the tree count {}",
                params.search_nodes,
                self.n_trees()
            )));
        }
        let q = self.unit_query(q)?;
        let mut heap: BinaryHeap<Queued> = self.roots.iter().map(|&r| Queued(f64::INFINITY, r)).collect();
        let mut candidates: Vec<u32> = Vec::new();
        let mut visited = 0;
        while visited < params.search_nodes {
            let Some(Queued(priority, n)) = heap.pop() else { break };
            visited += 1;
            match &self.nodes[n as usize] {
                Node::Leaf(items) => candidates.extend_from_slice(items),
                Node::Split {
                    normal,
                    offset,
                    left,
                    right,
                } => {
                    let m = margin(normal, *offset, &q);
                    heap.push(Queued(priority.min(m), *left));
                    heap.push(Queued(priority.min(-m), *right));
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        Ok(self.rank(&q, candidates, params.k))
    }

    /// Exact k nearest neighbours by scanning every item.
    pub fn exact(&self, q: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        let q = self.unit_query(q)?;
        Ok(self.rank(&q, (0..self.len() as u32).collect(), k))
    }

    fn rank(&self, q: &[f64], candidates: Vec<u32>, k: usize) -> Vec<Neighbor> {
        let mut scored: Vec<Neighbor> = candidates
            .into_iter()
            .map(|i| {
                let d: f64 = self.item(i).iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum();
                Neighbor {
                    item: i,
                    distance: d.sqrt(),
                }
            })
            .collect();
        scored.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.item.cmp(&b.item)));
        scored.truncate(k);
        scored
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::new();
        w.extend_from_slice(MAGIC);
        w.extend_from_slice(&VERSION.to_le_bytes());
        put_u64(&mut w, self.dim as u64);
        put_u64(&mut w, self.roots.len() as u64);
        put_u64(&mut w, self.ids.len() as u64);
        put_u64(&mut w, self.leaf_capacity as u64);
        for s in &self.ids {
            put_str(&mut w, s);
        }
        put_u64(&mut w, self.excluded.len() as u64);
        for s in &self.excluded {
            put_str(&mut w, s);
        }
        for x in &self.items {
            w.extend_from_slice(&x.to_le_bytes());
        }
        put_u64(&mut w, self.nodes.len() as u64);
        for n in &self.nodes {
            match n {
                Node::Split {
                    normal,
                    offset,
                    left,
                    right,
                } => {
                    w.push(0);
                    for x in normal {
                        w.extend_from_slice(&x.to_le_bytes());
                    }
                    w.extend_from_slice(&offset.to_le_bytes());
                    w.extend_from_slice(&left.to_le_bytes());
                    w.extend_from_slice(&right.to_le_bytes());
                }
                Node::Leaf(items) => {
                    w.push(1);
                    put_u64(&mut w, items.len() as u64);
                    for i in items {
                        w.extend_from_slice(&i.to_le_bytes());
                    }
                }
            }
        }
        for r in &self.roots {
            w.extend_from_slice(&r.to_le_bytes());
        }
        w
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::format("ann index", "bad magic bytes"));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::format(
                "ann index",
                format!("unsupported version {version}, expected {VERSION}"),
            ));
        }
        let dim = r.usize()?;
        let n_trees = r.usize()?;
        let count = r.usize()?;
        let leaf_capacity = r.usize()?;
        let ids = (0..count).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
        let n_excluded = r.usize()?;
        let excluded = (0..n_excluded).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
        let mut items = Vec::with_capacity(count * dim);
        for _ in 0..count * dim {
            items.push(r.f64()?);
        }
        let n_nodes = r.usize()?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            match r.take(1)?[0] {
                0 => {
                    let normal = (0..dim)
                        .map(|_| Ok(f32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"))))
                        .collect::<Result<Vec<_>>>()?;
                    let offset = r.f64()?;
                    let left = r.u32()?;
                    let right = r.u32()?;
                    if left as usize >= n_nodes || right as usize >= n_nodes {
                        return Err(Error::format("ann index", "child pointer out of range"));
                    }
                    nodes.push(Node::Split {
                        normal,
                        offset,
                        left,
                        right,
                    });
                }
                1 => {
                    let n = r.usize()?;
                    let leaf = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
                    if leaf.iter().any(|&i| i as usize >= count) {
                        return Err(Error::format("ann index", "leaf item out of range"));
                    }
                    nodes.push(Node::Leaf(leaf));
                }
                t => return Err(Error::format("ann index", format!("unknown node tag {t}"))),
            }
        }
        let roots = (0..n_trees).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        if r.pos != bytes.len() {
            return Err(Error::format("ann index", "trailing bytes"));
        }
        Ok(Self {
            dim,
            leaf_capacity,
            ids,
            items,
            excluded,
            nodes,
            roots,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn put_u64(w: &mut Vec<u8>, x: u64) {
    w.extend_from_slice(&x.to_le_bytes());
}

fn put_str(w: &mut Vec<u8>, s: &str) {
    put_u64(w, s.len() as u64);
    w.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("ann index", "truncated file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn usize(&mut self) -> Result<usize> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")) as usize)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.usize()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::format("ann index", "id is not UTF-8"))
    }
}
