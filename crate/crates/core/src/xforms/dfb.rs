//! Directional filter bank: a binary tree of two-channel quincunx fan
//! filter banks.
//!
//! Every tree node holds the samples of a coset of a sublattice of the
//! image grid. Node samples are stored in a rectangular array indexed by
//! lattice coordinates `(t1, t2)`; the image is periodic, so the array is
//! periodic with a shear: `(t1, t2)` and `(t1 - s, t2 - cols)` are the same
//! sample.
//!
//! A split modulates the node by `(-1)^t1`, separates the two quincunx
//! cosets and runs a two-step lifting ladder whose prediction filter is the
//! separable product of an even-length symmetric filter along the two
//! diagonals. The channels are the two fans `|w1| > |w2|` and `|w1| < |w2|`
//! of the node's frequency plane. From the second level on, a unimodular
//! resampling is chosen for each node so that its fan split bisects the
//! wedge of image frequencies the node carries.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use crate::error::{shape_err, Result};
use crate::filters::LadderFilter;
use crate::grid::Grid2D;

type V2 = [i64; 2];
/// 2x2 integer matrix stored by columns.
type M2 = [V2; 2];

const QUINCUNX: M2 = [[1, 1], [1, -1]];
const IDENTITY: M2 = [[1, 0], [0, 1]];

fn mat_vec(m: &M2, v: V2) -> V2 {
    [m[0][0] * v[0] + m[1][0] * v[1], m[0][1] * v[0] + m[1][1] * v[1]]
}

fn mat_mul(a: &M2, b: &M2) -> M2 {
    [mat_vec(a, b[0]), mat_vec(a, b[1])]
}

fn transpose_vec(m: &M2, v: V2) -> V2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn det(m: &M2) -> i64 {
    m[0][0] * m[1][1] - m[1][0] * m[0][1]
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Additive order of `x` in `Z_n`.
fn order(x: i64, n: i64) -> i64 {
    n / gcd(x.rem_euclid(n), n)
}

/// Rectangular storage of a periodic lattice: `a` rows, `b` columns,
/// `(t1, t2) ~ (t1 - s, t2 - b) ~ (t1 - a, t2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    a: usize,
    b: usize,
    s: usize,
}

impl Layout {
    /// Storage for the lattice `o + basis * Z^2` on the `rows x cols` torus.
    fn new(basis: &M2, rows: usize, cols: usize) -> Layout {
        let (m, n) = (rows as i64, cols as i64);
        let a0 = order(basis[0][0], m);
        let a1 = order(basis[0][1], n);
        let a = a0 / gcd(a0, a1) * a1;
        let points = m * n / det(basis).abs();
        let b = points / a;
        let col1 = basis[1];
        let s = (0..a)
            .find(|&t1| {
                let p = [basis[0][0] * t1 + col1[0] * b, basis[0][1] * t1 + col1[1] * b];
                p[0].rem_euclid(m) == 0 && p[1].rem_euclid(n) == 0
            })
            .expect("lattice period");
        Layout { a: a as usize, b: b as usize, s: s as usize }
    }

    #[inline]
    fn index(&self, t1: i64, t2: i64) -> usize {
        let (a, b, s) = (self.a as i64, self.b as i64, self.s as i64);
        let k = t2.div_euclid(b);
        let r2 = t2 - k * b;
        let r1 = (t1 - k * s).rem_euclid(a);
        (r1 * b + r2) as usize
    }

    fn len(&self) -> usize {
        self.a * self.b
    }
}

/// Directions of image frequencies, as a wedge between two integer
/// direction vectors (counter-clockwise from `lo` to `hi`). `major` is the
/// component that dominates inside the wedge; wedges are bisected in slope
/// relative to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Wedge {
    lo: V2,
    hi: V2,
    major: usize,
}

impl Wedge {
    /// Positive combination of `u` and `v` whose slope is the mean of theirs.
    fn between(&self, u: V2, v: V2) -> V2 {
        let (mu, mv) = (u[self.major].abs(), v[self.major].abs());
        let w = [u[0] * mv + v[0] * mu, u[1] * mv + v[1] * mu];
        let g = gcd(w[0], w[1]).max(1);
        [w[0] / g, w[1] / g]
    }

    fn mid(&self) -> V2 {
        self.between(self.lo, self.hi)
    }
}

#[derive(Debug, Clone)]
struct Node {
    /// Lattice basis in image coordinates (columns).
    basis: M2,
    /// Frequency offset of the node signal, in units of pi, modulo 2.
    shift: [u8; 2],
    layout: Layout,
    wedge: Option<Wedge>,
}

#[derive(Debug, Clone)]
struct Split {
    parent: usize,
    children: [usize; 2],
    layout: Layout,
    /// Child storage index -> parent storage index, per coset.
    gather: [Vec<u32>; 2],
    /// Modulation applied to each coset sample.
    signs: [Vec<f64>; 2],
}

/// Precomputed index tables for a directional filter bank of a given depth
/// on a given grid size.
#[derive(Debug, Clone)]
pub struct DfbPlan {
    rows: usize,
    cols: usize,
    depth: usize,
    nodes: Vec<Node>,
    splits: Vec<Split>,
    /// Leaf node ids in subband order.
    leaves: Vec<usize>,
}

fn abs_gt(d: V2) -> bool {
    d[0].abs() > d[1].abs()
}

/// Whether a fan split in coordinates `basis`, applied after the node has
/// been demodulated to put its apex at zero frequency, bisects `wedge`.
/// Returns the channel that receives the `lo` half.
fn split_channel(basis: &M2, wedge: &Wedge) -> Option<usize> {
    let mid = wedge.mid();
    let dm = transpose_vec(basis, mid);
    if dm[0].abs() != dm[1].abs() {
        return None;
    }
    // |d1| = |d2| inside the wedge only along the mid direction
    let dl = transpose_vec(basis, wedge.lo);
    let dh = transpose_vec(basis, wedge.hi);
    for sgn in [1i64, -1] {
        let e0 = dl[0] - sgn * dl[1];
        let e1 = dh[0] - sgn * dh[1];
        let em = dm[0] - sgn * dm[1];
        if e0 == 0 && e1 == 0 {
            return None;
        }
        if ((e0 > 0 && e1 < 0) || (e0 < 0 && e1 > 0)) && em != 0 {
            return None;
        }
    }
    let cls = |u: V2| abs_gt(transpose_vec(basis, u));
    let (a, b) = (cls(wedge.between(wedge.lo, mid)), cls(wedge.between(mid, wedge.hi)));
    if a == b {
        return None;
    }
    Some(if a { 0 } else { 1 })
}

fn resampling_candidates() -> Vec<M2> {
    const R: i64 = 8;
    let mut out = Vec::new();
    for a in -R..=R {
        for b in -R..=R {
            for c in -R..=R {
                for d in -R..=R {
                    let m = [[a, b], [c, d]];
                    if det(&m).abs() == 1 {
                        out.push(m);
                    }
                }
            }
        }
    }
    out.sort_by_key(|m| {
        let w: i64 = m.iter().flatten().map(|x| x.abs()).sum();
        (w, *m != IDENTITY)
    });
    out
}

impl DfbPlan {
    pub fn new(rows: usize, cols: usize, depth: usize) -> Result<Self> {
        let m = 1usize << depth;
        if rows == 0 || cols == 0 || rows % m != 0 || cols % m != 0 {
            return Err(shape_err!("{rows}x{cols} is not divisible by 2^{depth}"));
        }
        let root = Node {
            basis: IDENTITY,
            shift: [0, 0],
            layout: Layout { a: rows, b: cols, s: 0 },
            wedge: None,
        };
        let mut plan = DfbPlan { rows, cols, depth, nodes: vec![root], splits: Vec::new(), leaves: Vec::new() };
        let candidates = resampling_candidates();
        let mut frontier = vec![0usize];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for &id in &frontier {
                let kids = plan.split_node(id, &candidates)?;
                next.extend_from_slice(&kids);
            }
            frontier = next;
        }
        // order leaves by the angle of their central direction
        let mut leaves = frontier;
        leaves.sort_by(|&x, &y| {
            let ax = plan.leaf_angle(x);
            let ay = plan.leaf_angle(y);
            ax.partial_cmp(&ay).expect("finite angle")
        });
        plan.leaves = leaves;
        Ok(plan)
    }

    fn leaf_angle(&self, id: usize) -> f64 {
        match self.nodes[id].wedge {
            None => 0.0,
            Some(w) => {
                let m = w.mid();
                let mut a = libm::atan2(m[1] as f64, m[0] as f64);
                let q = core::f64::consts::FRAC_PI_4;
                while a < -q - 1e-12 {
                    a += core::f64::consts::PI;
                }
                while a >= 3.0 * q - 1e-12 {
                    a -= core::f64::consts::PI;
                }
                a
            }
        }
    }

    fn split_node(&mut self, id: usize, candidates: &[M2]) -> Result<[usize; 2]> {
        let node = self.nodes[id].clone();
        let (resample, lo_channel) = match node.wedge {
            None => (IDENTITY, 0),
            Some(w) => candidates
                .iter()
                .find_map(|r| split_channel(&mat_mul(&node.basis, r), &w).map(|ch| (*r, ch)))
                .ok_or_else(|| shape_err!("no resampling bisects wedge {:?}", w))?,
        };
        let split_basis = mat_mul(&node.basis, &resample);
        // demodulation that moves the node's apex to zero frequency
        let demod = {
            let c = [node.shift[0] as i64, node.shift[1] as i64];
            let v = transpose_vec(&resample, c);
            [v[0].rem_euclid(2), v[1].rem_euclid(2)]
        };
        let child_basis = mat_mul(&split_basis, &QUINCUNX);
        let layout = Layout::new(&child_basis, self.rows, self.cols);
        // sign exponent in split coordinates: fan modulation plus demodulation
        let expo = |t: V2| ((1 + demod[0]) * t[0] + demod[1] * t[1]).rem_euclid(2);
        let periods = [[layout.a as i64, 0], [layout.s as i64, layout.b as i64]];
        if periods.iter().any(|&p| expo(mat_vec(&QUINCUNX, p)) != 0) {
            return Err(shape_err!(
                "{}x{} is too small for directional depth {}",
                self.rows,
                self.cols,
                self.depth
            ));
        }
        let mut gather = [Vec::with_capacity(layout.len()), Vec::with_capacity(layout.len())];
        let mut signs = [Vec::with_capacity(layout.len()), Vec::with_capacity(layout.len())];
        for k in 0..2 {
            for t1 in 0..layout.a as i64 {
                for t2 in 0..layout.b as i64 {
                    let tp = [k as i64 + t1 + t2, t1 - t2];
                    let t = mat_vec(&resample, tp);
                    gather[k].push(node.layout.index(t[0], t[1]) as u32);
                    signs[k].push(if expo(tp) == 0 { 1.0 } else { -1.0 });
                }
            }
        }
        let wedges = match node.wedge {
            None => [
                Wedge { lo: [1, -1], hi: [1, 1], major: 0 },
                Wedge { lo: [1, 1], hi: [-1, 1], major: 1 },
            ],
            Some(w) => {
                let lo = Wedge { lo: w.lo, hi: w.mid(), major: w.major };
                let hi = Wedge { lo: w.mid(), hi: w.hi, major: w.major };
                if lo_channel == 0 {
                    [lo, hi]
                } else {
                    [hi, lo]
                }
            }
        };
        let mut children = [0usize; 2];
        for k in 0..2 {
            let e: [i64; 2] = if k == 0 { [1, 0] } else { [0, 1] };
            let c = transpose_vec(&QUINCUNX, e);
            self.nodes.push(Node {
                basis: child_basis,
                shift: [c[0].rem_euclid(2) as u8, c[1].rem_euclid(2) as u8],
                layout,
                wedge: Some(wedges[k]),
            });
            children[k] = self.nodes.len() - 1;
        }
        self.splits.push(Split { parent: id, children, layout, gather, signs });
        Ok(children)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_subbands(&self) -> usize {
        self.leaves.len()
    }

    /// `(rows, cols)` of each subband.
    pub fn subband_shapes(&self) -> Vec<(usize, usize)> {
        self.leaves.iter().map(|&id| (self.nodes[id].layout.a, self.nodes[id].layout.b)).collect()
    }

    /// Central frequency direction `(w_row, w_col)` of each subband.
    pub fn subband_directions(&self) -> Vec<[i64; 2]> {
        self.leaves.iter().map(|&id| self.nodes[id].wedge.map(|w| w.mid()).unwrap_or([0, 0])).collect()
    }

    pub fn analyze(&self, band: &Grid2D, ladder: &LadderFilter) -> Result<Vec<Grid2D>> {
        if band.rows() != self.rows || band.cols() != self.cols {
            return Err(shape_err!(
                "band {}x{} does not match plan {}x{}",
                band.rows(),
                band.cols(),
                self.rows,
                self.cols
            ));
        }
        let mut store: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        store[0] = Some(band.data().to_vec());
        for sp in &self.splits {
            let parent = store[sp.parent].take().expect("parent computed");
            let (c0, c1) = fan_analyze(&parent, sp, ladder.half());
            store[sp.children[0]] = Some(c0);
            store[sp.children[1]] = Some(c1);
        }
        Ok(self
            .leaves
            .iter()
            .map(|&id| {
                let l = self.nodes[id].layout;
                Grid2D::from_vec(l.a, l.b, store[id].take().expect("leaf computed")).expect("shape")
            })
            .collect())
    }

    pub fn synthesize(&self, subbands: &[Grid2D], ladder: &LadderFilter) -> Result<Grid2D> {
        if subbands.len() != self.leaves.len() {
            return Err(shape_err!("{} subbands, expected {}", subbands.len(), self.leaves.len()));
        }
        let mut store: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        for (sb, &id) in subbands.iter().zip(&self.leaves) {
            let l = self.nodes[id].layout;
            if sb.rows() != l.a || sb.cols() != l.b {
                return Err(shape_err!("subband {}x{}, expected {}x{}", sb.rows(), sb.cols(), l.a, l.b));
            }
            store[id] = Some(sb.data().to_vec());
        }
        for sp in self.splits.iter().rev() {
            let c0 = store[sp.children[0]].take().expect("child present");
            let c1 = store[sp.children[1]].take().expect("child present");
            let n = self.nodes[sp.parent].layout.len();
            store[sp.parent] = Some(fan_synthesize(&c0, &c1, sp, ladder.half(), n));
        }
        Grid2D::from_vec(self.rows, self.cols, store[0].take().expect("root"))
    }
}

/// `out[a][b] = sum_m v[m] (x[a-m][b] + x[a+m+1][b])`.
fn pass_rows(x: &[f64], l: &Layout, v: &[f64]) -> Vec<f64> {
    let (a, b) = (l.a, l.b);
    let mut out = vec![0.0; a * b];
    for i in 0..a {
        let o = &mut out[i * b..(i + 1) * b];
        for (m, &vm) in v.iter().enumerate() {
            let r0 = (i + a - m % a) % a;
            let r1 = (i + m + 1) % a;
            let x0 = &x[r0 * b..(r0 + 1) * b];
            let x1 = &x[r1 * b..(r1 + 1) * b];
            for j in 0..b {
                o[j] += vm * (x0[j] + x1[j]);
            }
        }
    }
    out
}

/// `out[a][b] = sum_m v[m] (x[a][b+m+shift] + x[a][b-m-1+shift])` with the
/// sheared wrap of the layout.
fn pass_cols(x: &[f64], l: &Layout, v: &[f64], shift: usize) -> Vec<f64> {
    let (a, b) = (l.a, l.b);
    let h = v.len() + 1;
    let mut ext = vec![0.0; b + 2 * h];
    let mut out = vec![0.0; a * b];
    for i in 0..a {
        for (e, slot) in ext.iter_mut().enumerate() {
            let j = e as i64 - h as i64;
            *slot = if j >= 0 && (j as usize) < b { x[i * b + j as usize] } else { x[l.index(i as i64, j)] };
        }
        let o = &mut out[i * b..(i + 1) * b];
        for (m, &vm) in v.iter().enumerate() {
            let p = h + m + shift;
            let q = h + shift - m - 1;
            for j in 0..b {
                o[j] += vm * (ext[j + p] + ext[j + q]);
            }
        }
    }
    out
}

/// Update term: prediction of coset-0 samples from coset-1 samples.
fn update(d: &[f64], l: &Layout, v: &[f64]) -> Vec<f64> {
    let w = pass_cols(&pass_rows(d, l, v), l, v, 0);
    let (a, b) = (l.a, l.b);
    let mut out = vec![0.0; a * b];
    for i in 0..a {
        let src = (i + a - 1) % a;
        out[i * b..(i + 1) * b].copy_from_slice(&w[src * b..(src + 1) * b]);
    }
    out
}

/// Prediction of coset-1 samples from coset-0 samples.
fn predict(x0: &[f64], l: &Layout, v: &[f64]) -> Vec<f64> {
    pass_cols(&pass_rows(x0, l, v), l, v, 1)
}

fn fan_analyze(parent: &[f64], sp: &Split, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let l = &sp.layout;
    let mut x0 = vec![0.0; l.len()];
    let mut x1 = vec![0.0; l.len()];
    for i in 0..l.len() {
        x0[i] = parent[sp.gather[0][i] as usize] * sp.signs[0][i];
        x1[i] = parent[sp.gather[1][i] as usize] * sp.signs[1][i];
    }
    let p = predict(&x0, l, v);
    let d: Vec<f64> = x1.iter().zip(&p).map(|(a, b)| a - b).collect();
    let u = update(&d, l, v);
    let s: Vec<f64> = x0.iter().zip(&u).map(|(a, b)| SQRT_2 * (a + 0.5 * b)).collect();
    let d = d.into_iter().map(|x| x / SQRT_2).collect();
    (s, d)
}

fn fan_synthesize(c0: &[f64], c1: &[f64], sp: &Split, v: &[f64], parent_len: usize) -> Vec<f64> {
    let l = &sp.layout;
    let d: Vec<f64> = c1.iter().map(|x| x * SQRT_2).collect();
    let u = update(&d, l, v);
    let x0: Vec<f64> = c0.iter().zip(&u).map(|(s, u)| s / SQRT_2 - 0.5 * u).collect();
    let p = predict(&x0, l, v);
    let mut parent = vec![0.0; parent_len];
    for i in 0..l.len() {
        parent[sp.gather[0][i] as usize] = x0[i] * sp.signs[0][i];
        parent[sp.gather[1][i] as usize] = (d[i] + p[i]) * sp.signs[1][i];
    }
    parent
}

/// Directional decomposition of `band` into `2^depth` subbands.
pub fn dfb_analyze(band: &Grid2D, depth: usize, ladder: &LadderFilter) -> Result<Vec<Grid2D>> {
    DfbPlan::new(band.rows(), band.cols(), depth)?.analyze(band, ladder)
}

/// Inverse of [`dfb_analyze`]; the output size is given explicitly.
pub fn dfb_synthesize(
    subbands: &[Grid2D],
    rows: usize,
    cols: usize,
    depth: usize,
    ladder: &LadderFilter,
) -> Result<Grid2D> {
    DfbPlan::new(rows, cols, depth)?.synthesize(subbands, ladder)
}
