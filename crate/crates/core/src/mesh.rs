//! Conforming triangulations with newest-vertex bisection.
//!
//! Cells are stored counter-clockwise with the *newest vertex* at local index
//! 0, so the refinement edge of every cell is its local edge 0 (the edge
//! opposite vertex 0). Local edge `i` joins vertices `i + 1` and `i + 2`
//! (mod 3). Meshes are immutable: [`Mesh::refine`] and [`Mesh::coarsen`]
//! return new meshes and carry the refinement forest along.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::geom::{self, Mat2, Point};

/// Skeleton record of one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints in the counter-clockwise order of the left cell.
    pub vertices: [usize; 2],
    pub left: usize,
    pub right: Option<usize>,
    /// Local edge index inside the left / right cell.
    pub left_local: usize,
    pub right_local: Option<usize>,
    /// Unit normal pointing out of the left cell (out of the domain on the boundary).
    pub normal: Point,
    pub length: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub edges: Vec<Edge>,
    /// Skeleton edge id of each local edge of each cell.
    pub cell_edges: Vec<[usize; 3]>,
}

impl Skeleton {
    pub fn interior_count(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }
}

/// Per-cell diameter `h_K` and inradius `ρ_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSizeField {
    pub h: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Affine map `x = origin + J ξ` from the reference triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMap {
    pub origin: Point,
    pub jac: Mat2,
    pub inv: Mat2,
    pub det: f64,
}

impl CellMap {
    pub fn new(v: [Point; 3]) -> Self {
        let jac = [
            [v[1][0] - v[0][0], v[2][0] - v[0][0]],
            [v[1][1] - v[0][1], v[2][1] - v[0][1]],
        ];
        let det = geom::det(&jac);
        Self {
            origin: v[0],
            jac,
            inv: geom::inverse(&jac),
            det,
        }
    }

    #[inline]
    pub fn to_physical(&self, xi: Point) -> Point {
        let d = geom::mat_vec(&self.jac, xi);
        [self.origin[0] + d[0], self.origin[1] + d[1]]
    }

    #[inline]
    pub fn to_reference(&self, x: Point) -> Point {
        geom::mat_vec(&self.inv, geom::sub(x, self.origin))
    }

    /// Physical gradient from a reference gradient: `J⁻ᵀ ∇ξ`.
    #[inline]
    pub fn push_gradient(&self, g: Point) -> Point {
        geom::mat_t_vec(&self.inv, g)
    }

    /// Physical Hessian from a reference Hessian: `J⁻ᵀ H J⁻¹`.
    #[inline]
    pub fn push_hessian(&self, h: &Mat2) -> Mat2 {
        let k = &self.inv;
        let mut out = [[0.0; 2]; 2];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, o) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        s += k[i][a] * h[i][j] * k[j][b];
                    }
                }
                *o = s;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestNode {
    pub vertices: [usize; 3],
    pub parent: Option<usize>,
    pub children: Option<[usize; 2]>,
    pub level: usize,
}

/// Outcome of a coarsening pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Coarsening {
    pub mesh: Mesh,
    /// Sibling pairs merged into their parent.
    pub merged: usize,
    /// Fully marked sibling pairs that could not be merged conformingly.
    pub skipped: usize,
    /// New cell id of every old cell (merged siblings map to their parent).
    pub cell_map: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    forest: Vec<ForestNode>,
    cell_node: Vec<usize>,
    skeleton: Skeleton,
    boundary_vertex: Vec<bool>,
    vertex_cell_offsets: Vec<usize>,
    vertex_cells: Vec<usize>,
}

impl Mesh {
    /// Builds a mesh from raw data; every cell becomes a forest root.
    pub fn new(vertices: Vec<Point>, cells: Vec<[usize; 3]>) -> Result<Self> {
        let forest = cells
            .iter()
            .map(|&c| ForestNode {
                vertices: c,
                parent: None,
                children: None,
                level: 0,
            })
            .collect();
        let cell_node = (0..cells.len()).collect();
        Self::with_forest(vertices, cells, forest, cell_node)
    }

    fn with_forest(
        vertices: Vec<Point>,
        cells: Vec<[usize; 3]>,
        forest: Vec<ForestNode>,
        cell_node: Vec<usize>,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(invalid("mesh without cells"));
        }
        for (k, c) in cells.iter().enumerate() {
            if c.iter().any(|&v| v >= vertices.len()) {
                return Err(invalid("cell references a missing vertex"));
            }
            let a = signed_area([vertices[c[0]], vertices[c[1]], vertices[c[2]]]);
            if !(a > 0.0) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "cell {k} has non-positive area {a}"
                )));
            }
        }
        let skeleton = build_skeleton(&vertices, &cells)?;
        let mut boundary_vertex = vec![false; vertices.len()];
        for e in skeleton.edges.iter().filter(|e| e.is_boundary()) {
            boundary_vertex[e.vertices[0]] = true;
            boundary_vertex[e.vertices[1]] = true;
        }
        let mut counts = vec![0usize; vertices.len() + 1];
        for c in &cells {
            for &v in c {
                counts[v + 1] += 1;
            }
        }
        for i in 0..vertices.len() {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut vertex_cells = vec![0; 3 * cells.len()];
        for (k, c) in cells.iter().enumerate() {
            for &v in c {
                vertex_cells[fill[v]] = k;
                fill[v] += 1;
            }
        }
        Ok(Self {
            vertices,
            cells,
            forest,
            cell_node,
            skeleton,
            boundary_vertex,
            vertex_cell_offsets: counts,
            vertex_cells,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn forest(&self) -> &[ForestNode] {
        &self.forest
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    /// Index of the forest node a leaf cell corresponds to.
    pub fn cell_node(&self, cell: usize) -> usize {
        self.cell_node[cell]
    }

    pub fn cell_level(&self, cell: usize) -> usize {
        self.forest[self.cell_node[cell]].level
    }

    /// Local index of the bisection edge; always 0 under the storage convention.
    pub fn refinement_edge(&self, _cell: usize) -> usize {
        0
    }

    pub fn cell_points(&self, cell: usize) -> [Point; 3] {
        let c = self.cells[cell];
        [
            self.vertices[c[0]],
            self.vertices[c[1]],
            self.vertices[c[2]],
        ]
    }

    pub fn cell_map(&self, cell: usize) -> CellMap {
        CellMap::new(self.cell_points(cell))
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        signed_area(self.cell_points(cell))
    }

    pub fn centroid(&self, cell: usize) -> Point {
        let p = self.cell_points(cell);
        [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|k| self.cell_area(k)).sum()
    }

    /// Cell diameter `h_K` (longest edge).
    pub fn diameter(&self, cell: usize) -> f64 {
        let p = self.cell_points(cell);
        geom::dist(p[0], p[1])
            .max(geom::dist(p[1], p[2]))
            .max(geom::dist(p[2], p[0]))
    }

    pub fn size_field(&self) -> MeshSizeField {
        let mut h = Vec::with_capacity(self.num_cells());
        let mut rho = Vec::with_capacity(self.num_cells());
        for k in 0..self.num_cells() {
            let p = self.cell_points(k);
            let l = [
                geom::dist(p[1], p[2]),
                geom::dist(p[2], p[0]),
                geom::dist(p[0], p[1]),
            ];
            h.push(l[0].max(l[1]).max(l[2]));
            rho.push(2.0 * signed_area(p) / (l[0] + l[1] + l[2]));
        }
        MeshSizeField { h, rho }
    }

    /// `μ = min_K ρ_K / h_K`.
    pub fn shape_regularity(&self) -> f64 {
        let f = self.size_field();
        f.h.iter()
            .zip(&f.rho)
            .map(|(h, r)| r / h)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest cell diameter.
    pub fn max_diameter(&self) -> f64 {
        (0..self.num_cells())
            .map(|k| self.diameter(k))
            .fold(0.0, f64::max)
    }

    /// Cells containing vertex `v`, ascending.
    pub fn vertex_patch(&self, v: usize) -> &[usize] {
        &self.vertex_cells[self.vertex_cell_offsets[v]..self.vertex_cell_offsets[v + 1]]
    }

    /// `cell` together with every cell sharing an edge with it, ascending.
    pub fn edge_patch(&self, cell: usize) -> Vec<usize> {
        let mut out = vec![cell];
        for &e in &self.skeleton.cell_edges[cell] {
            let edge = &self.skeleton.edges[e];
            let other = if edge.left == cell {
                edge.right
            } else {
                Some(edge.left)
            };
            out.extend(other);
        }
        out.sort_unstable();
        out
    }

    /// Translated copy; topology and forest are unchanged.
    pub fn translated(&self, shift: Point) -> Mesh {
        let mut m = self.clone();
        for v in &mut m.vertices {
            v[0] += shift[0];
            v[1] += shift[1];
        }
        m
    }

    /// Newest-vertex bisection of the marked cells with conforming closure.
    pub fn refine(&self, marked: &[usize]) -> Result<Mesh> {
        if let Some(&bad) = marked.iter().find(|&&k| k >= self.num_cells()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "cell id {bad} out of range"
            )));
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }
        let sk = &self.skeleton;
        let mut edge_marked = vec![false; sk.edges.len()];
        let mut queue = Vec::new();
        for &k in marked {
            let e = sk.cell_edges[k][0];
            if !edge_marked[e] {
                edge_marked[e] = true;
                queue.push(e);
            }
        }
        // closure: a cell with any bisected edge must bisect its refinement edge
        while let Some(e) = queue.pop() {
            let edge = &sk.edges[e];
            for cell in core::iter::once(edge.left).chain(edge.right) {
                let r = sk.cell_edges[cell][0];
                if !edge_marked[r] {
                    edge_marked[r] = true;
                    queue.push(r);
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (e, edge) in sk.edges.iter().enumerate() {
            if edge_marked[e] {
                let [a, b] = edge.vertices;
                vertices.push(geom::midpoint(self.vertices[a], self.vertices[b]));
                midpoints.insert(edge_key(a, b), vertices.len() - 1);
            }
        }

        let mut forest = self.forest.clone();
        let mut cells = Vec::with_capacity(self.num_cells() * 2);
        let mut cell_node = Vec::with_capacity(self.num_cells() * 2);
        for (k, &c) in self.cells.iter().enumerate() {
            if sk.cell_edges[k].iter().any(|&e| edge_marked[e]) {
                bisect(
                    self.cell_node[k],
                    c,
                    &midpoints,
                    &mut forest,
                    &mut cells,
                    &mut cell_node,
                );
            } else {
                cells.push(c);
                cell_node.push(self.cell_node[k]);
            }
        }
        Mesh::with_forest(vertices, cells, forest, cell_node)
    }

    /// Bisects every cell twice, halving the mesh size.
    pub fn refine_uniform(&self) -> Result<Mesh> {
        let all: Vec<usize> = (0..self.num_cells()).collect();
        let once = self.refine(&all)?;
        let all: Vec<usize> = (0..once.num_cells()).collect();
        once.refine(&all)
    }

    /// Merges sibling leaf pairs that are both marked, whenever removing the
    /// shared newest vertex keeps the mesh conforming.
    pub fn coarsen(&self, marked: &[usize]) -> Result<Coarsening> {
        let n = self.num_cells();
        if let Some(&bad) = marked.iter().find(|&&k| k >= n) {
            return Err(Error::InvalidArgument(alloc::format!(
                "cell id {bad} out of range"
            )));
        }
        let mut is_marked = vec![false; n];
        for &k in marked {
            is_marked[k] = true;
        }
        let mut node_cell = BTreeMap::new();
        for (k, &node) in self.cell_node.iter().enumerate() {
            node_cell.insert(node, k);
        }
        let sibling_of = |k: usize| -> Option<(usize, usize)> {
            let parent = self.forest[self.cell_node[k]].parent?;
            let ch = self.forest[parent].children?;
            let other = if ch[0] == self.cell_node[k] {
                ch[1]
            } else {
                ch[0]
            };
            node_cell.get(&other).map(|&s| (parent, s))
        };

        // candidate pairs: both siblings leaves and marked
        let mut candidate_parents = Vec::new();
        for k in 0..n {
            if let Some((parent, s)) = sibling_of(k) {
                if k < s && is_marked[k] && is_marked[s] {
                    candidate_parents.push(parent);
                }
            }
        }

        let mut merge_parent = vec![None; n];
        let mut removed_vertex = vec![false; self.num_vertices()];
        let mut merged = 0;
        for v in 0..self.num_vertices() {
            let patch = self.vertex_patch(v);
            if patch.is_empty() || !(patch.len() == 2 || patch.len() == 4) {
                continue;
            }
            let mut ok = true;
            let mut parents = Vec::new();
            for &k in patch {
                if self.cells[k][0] != v || !is_marked[k] {
                    ok = false;
                    break;
                }
                match sibling_of(k) {
                    Some((p, s)) if patch.contains(&s) => {
                        if !parents.contains(&p) {
                            parents.push(p);
                        }
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && parents.len() * 2 == patch.len() {
                for &k in patch {
                    merge_parent[k] = sibling_of(k).map(|(p, _)| p);
                }
                removed_vertex[v] = true;
                merged += parents.len();
            }
        }
        let skipped = candidate_parents.len() - merged;
        if merged == 0 {
            return Ok(Coarsening {
                mesh: self.clone(),
                merged,
                skipped,
                cell_map: (0..n).collect(),
            });
        }

        let mut forest = self.forest.clone();
        let mut cells = Vec::with_capacity(n);
        let mut cell_node = Vec::with_capacity(n);
        let mut cell_map = vec![0; n];
        let mut emitted: BTreeMap<usize, usize> = BTreeMap::new();
        for k in 0..n {
            match merge_parent[k] {
                Some(p) => {
                    if let Some(&id) = emitted.get(&p) {
                        cell_map[k] = id;
                    } else {
                        forest[p].children = None;
                        cells.push(forest[p].vertices);
                        cell_node.push(p);
                        emitted.insert(p, cells.len() - 1);
                        cell_map[k] = cells.len() - 1;
                    }
                }
                None => {
                    cells.push(self.cells[k]);
                    cell_node.push(self.cell_node[k]);
                    cell_map[k] = cells.len() - 1;
                }
            }
        }

        // compact the forest to reachable nodes
        let mut node_map = vec![usize::MAX; forest.len()];
        let mut order = Vec::new();
        let mut stack: Vec<usize> = (0..forest.len())
            .filter(|&i| forest[i].parent.is_none())
            .rev()
            .collect();
        while let Some(i) = stack.pop() {
            node_map[i] = order.len();
            order.push(i);
            if let Some(ch) = forest[i].children {
                stack.push(ch[1]);
                stack.push(ch[0]);
            }
        }
        let mut vertex_map = vec![usize::MAX; self.num_vertices()];
        let mut vertices = Vec::with_capacity(self.num_vertices());
        for (v, p) in self.vertices.iter().enumerate() {
            if !removed_vertex[v] {
                vertex_map[v] = vertices.len();
                vertices.push(*p);
            }
        }
        let new_forest: Vec<ForestNode> = order
            .iter()
            .map(|&i| {
                let node = &forest[i];
                ForestNode {
                    vertices: node.vertices.map(|v| vertex_map[v]),
                    parent: node.parent.map(|p| node_map[p]),
                    children: node.children.map(|c| c.map(|x| node_map[x])),
                    level: node.level,
                }
            })
            .collect();
        let cells = cells
            .into_iter()
            .map(|c| c.map(|v| vertex_map[v]))
            .collect();
        let cell_node = cell_node.into_iter().map(|i| node_map[i]).collect();
        let mesh = Mesh::with_forest(vertices, cells, new_forest, cell_node)?;
        Ok(Coarsening {
            mesh,
            merged,
            skipped,
            cell_map,
        })
    }

    /// Checks the conformity invariants: two cells per interior edge, one per
    /// boundary edge and every cell owning three distinct edges.
    pub fn is_conforming(&self) -> bool {
        let sk = &self.skeleton;
        let mut incidences = vec![0usize; sk.edges.len()];
        for ce in &sk.cell_edges {
            if ce[0] == ce[1] || ce[1] == ce[2] || ce[0] == ce[2] {
                return false;
            }
            for &e in ce {
                incidences[e] += 1;
            }
        }
        sk.edges
            .iter()
            .zip(&incidences)
            .all(|(e, &c)| c == if e.is_boundary() { 1 } else { 2 })
            && self.no_hanging_vertices()
    }

    fn no_hanging_vertices(&self) -> bool {
        // a hanging vertex lies strictly inside some edge
        for edge in &self.skeleton.edges {
            let a = self.vertices[edge.vertices[0]];
            let b = self.vertices[edge.vertices[1]];
            let m = geom::midpoint(a, b);
            for &k in self.vertex_patch(edge.vertices[0]) {
                for &v in &self.cells[k] {
                    if geom::dist(self.vertices[v], m) < 1e-12 * edge.length {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn bisect(
    node: usize,
    c: [usize; 3],
    midpoints: &BTreeMap<(usize, usize), usize>,
    forest: &mut Vec<ForestNode>,
    cells: &mut Vec<[usize; 3]>,
    cell_node: &mut Vec<usize>,
) {
    let [p, a, b] = c;
    let Some(&m) = midpoints.get(&edge_key(a, b)) else {
        cells.push(c);
        cell_node.push(node);
        return;
    };
    let level = forest[node].level + 1;
    let children = [[m, p, a], [m, b, p]];
    let first = forest.len();
    for ch in children {
        forest.push(ForestNode {
            vertices: ch,
            parent: Some(node),
            children: None,
            level,
        });
    }
    forest[node].children = Some([first, first + 1]);
    for (i, ch) in children.into_iter().enumerate() {
        bisect(first + i, ch, midpoints, forest, cells, cell_node);
    }
}

#[inline]
fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn signed_area(p: [Point; 3]) -> f64 {
    0.5 * geom::cross(geom::sub(p[1], p[0]), geom::sub(p[2], p[0]))
}

fn build_skeleton(vertices: &[Point], cells: &[[usize; 3]]) -> Result<Skeleton> {
    let mut inc: Vec<((usize, usize), usize, usize)> = Vec::with_capacity(3 * cells.len());
    for (k, c) in cells.iter().enumerate() {
        for i in 0..3 {
            let a = c[(i + 1) % 3];
            let b = c[(i + 2) % 3];
            inc.push((edge_key(a, b), k, i));
        }
    }
    inc.sort_unstable();
    let mut edges = Vec::with_capacity(inc.len() / 2 + 1);
    let mut cell_edges = vec![[usize::MAX; 3]; cells.len()];
    let mut i = 0;
    while i < inc.len() {
        let mut j = i + 1;
        while j < inc.len() && inc[j].0 == inc[i].0 {
            j += 1;
        }
        if j - i > 2 {
            return Err(invalid("edge shared by more than two cells"));
        }
        let (_, left, ll) = inc[i];
        let c = cells[left];
        let a = c[(ll + 1) % 3];
        let b = c[(ll + 2) % 3];
        let (right, rl) = if j - i == 2 {
            let (_, r, rl) = inc[i + 1];
            let rc = cells[r];
            // a conforming neighbour traverses the edge in the opposite direction
            if rc[(rl + 1) % 3] != b || rc[(rl + 2) % 3] != a {
                return Err(invalid("inconsistent orientation or overlapping cells"));
            }
            (Some(r), Some(rl))
        } else {
            (None, None)
        };
        let d = geom::sub(vertices[b], vertices[a]);
        let length = geom::norm(d);
        let id = edges.len();
        edges.push(Edge {
            vertices: [a, b],
            left,
            right,
            left_local: ll,
            right_local: rl,
            normal: [d[1] / length, -d[0] / length],
            length,
        });
        cell_edges[left][ll] = id;
        if let (Some(r), Some(l)) = (right, rl) {
            cell_edges[r][l] = id;
        }
        i = j;
    }
    Ok(Skeleton { edges, cell_edges })
}

/// Structured triangulation of `[0,1]²` with `n` squares per side, each split
/// along its `(0,0)–(1,1)` diagonal; refinement edges are the diagonals.
pub fn make_unit_square(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(invalid("make_unit_square needs n >= 1"));
    }
    grid_mesh(n, |_, _| true)
}

/// L-shaped domain `[0,1]² \ [1/2,1]×[0,1/2]` with `n` squares per half side.
pub fn make_lshape(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(invalid("make_lshape needs n >= 1"));
    }
    grid_mesh(2 * n, move |i, j| !(i >= n && j < n))
}

fn grid_mesh(m: usize, keep: impl Fn(usize, usize) -> bool) -> Result<Mesh> {
    let h = 1.0 / m as f64;
    let mut index = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut vertices = Vec::new();
    let used = |i: usize, j: usize| {
        // vertex (i, j) touches square (i-1..i, j-1..j)
        let mut any = false;
        for di in 0..2 {
            for dj in 0..2 {
                if i + di >= 1
                    && j + dj >= 1
                    && i + di <= m
                    && j + dj <= m
                    && keep(i + di - 1, j + dj - 1)
                {
                    any = true;
                }
            }
        }
        any
    };
    for j in 0..=m {
        for i in 0..=m {
            if used(i, j) {
                index[j * (m + 1) + i] = vertices.len();
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
    }
    let id = |i: usize, j: usize| index[j * (m + 1) + i];
    let mut cells = Vec::new();
    for j in 0..m {
        for i in 0..m {
            if !keep(i, j) {
                continue;
            }
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push([v10, v11, v00]);
            cells.push([v01, v00, v11]);
        }
    }
    Mesh::new(vertices, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_counts() {
        let m = make_unit_square(1).unwrap();
        assert_eq!(m.num_cells(), 2);
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.skeleton().edges.len(), 5);
        assert_eq!(m.skeleton().interior_count(), 1);
        assert!((m.total_area() - 1.0).abs() < 1e-12);
        let m2 = make_unit_square(2).unwrap();
        assert_eq!((m2.num_cells(), m2.num_vertices()), (8, 9));
        assert!(make_unit_square(0).is_err());
    }

    #[test]
    fn lshape_counts() {
        let m = make_lshape(1).unwrap();
        assert_eq!(m.num_cells(), 6);
        assert!((m.total_area() - 0.75).abs() < 1e-12);
        assert!(m
            .vertices()
            .iter()
            .any(|v| geom::dist(*v, [0.5, 0.5]) < 1e-15));
        assert_eq!(make_lshape(2).unwrap().num_cells(), 24);
        assert!(make_lshape(0).is_err());
        assert!(m.is_conforming());
    }

    #[test]
    fn refinement_edges_are_hypotenuses() {
        let m = make_unit_square(3).unwrap();
        for k in 0..m.num_cells() {
            let p = m.cell_points(k);
            let hyp = geom::dist(p[1], p[2]);
            assert!((hyp - m.diameter(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn marking_both_cells_gives_four() {
        let m = make_unit_square(1).unwrap();
        let r = m.refine(&[0, 1]).unwrap();
        assert_eq!(r.num_cells(), 4);
        assert!(r.is_conforming());
    }

    #[test]
    fn closure_refines_neighbour() {
        let m = make_unit_square(1).unwrap();
        let r = m.refine(&[0]).unwrap();
        assert_eq!(r.num_cells(), 4);
        assert!(r.is_conforming());
        assert!((r.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_marks_are_identity() {
        let m = make_unit_square(2).unwrap();
        assert_eq!(m.refine(&[]).unwrap(), m);
        assert_eq!(m.coarsen(&[]).unwrap().mesh, m);
        assert!(m.refine(&[8]).is_err());
    }

    #[test]
    fn closure_propagates_across_several_cells() {
        let mut m = make_unit_square(2).unwrap();
        for _ in 0..6 {
            // always refine the cell touching the origin
            let k = (0..m.num_cells())
                .find(|&k| m.cells()[k].iter().any(|&v| m.vertices()[v] == [0.0, 0.0]))
                .unwrap();
            m = m.refine(&[k]).unwrap();
            assert!(m.is_conforming());
            assert!((m.total_area() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coarsen_inverts_uniform_bisection() {
        let m = make_unit_square(1).unwrap();
        let r = m.refine(&[0, 1]).unwrap();
        let all: Vec<usize> = (0..r.num_cells()).collect();
        let c = r.coarsen(&all).unwrap();
        assert_eq!(c.mesh.num_cells(), 2);
        assert_eq!(c.mesh.num_vertices(), 4);
        assert_eq!(c.merged, 2);
        assert!(c.mesh.is_conforming());

        let l = make_lshape(2).unwrap();
        let r = l.refine(&(0..l.num_cells()).collect::<Vec<_>>()).unwrap();
        let c = r.coarsen(&(0..r.num_cells()).collect::<Vec<_>>()).unwrap();
        assert_eq!(c.mesh.num_cells(), l.num_cells());
    }

    #[test]
    fn coarsen_needs_both_siblings() {
        let m = make_unit_square(1).unwrap().refine(&[0, 1]).unwrap();
        let c = m.coarsen(&[0]).unwrap();
        assert_eq!(c.mesh, m);
        // both children of one parent but not the neighbouring pair: not conforming
        let c = m.coarsen(&[0, 1]).unwrap();
        assert_eq!(c.mesh.num_cells(), 4);
        assert_eq!(c.skipped, 1);
    }

    #[test]
    fn shape_regularity_values() {
        let right = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let expect = (2.0 - libm::sqrt(2.0)) / 2.0 / libm::sqrt(2.0);
        assert!((right.shape_regularity() - expect).abs() < 1e-14);
        let s3 = libm::sqrt(3.0);
        let eq = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.5, s3 / 2.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!((eq.shape_regularity() - 1.0 / (2.0 * s3)).abs() < 1e-14);
    }

    #[test]
    fn shape_regularity_is_stable_under_uniform_refinement() {
        let mut m = make_unit_square(1).unwrap();
        let mu0 = m.shape_regularity();
        for _ in 0..6 {
            m = m.refine_uniform().unwrap();
            assert!((m.shape_regularity() - mu0).abs() < 1e-12);
        }
    }

    #[test]
    fn patches() {
        let m = make_unit_square(2).unwrap();
        let center = m.vertices().iter().position(|v| *v == [0.5, 0.5]).unwrap();
        assert_eq!(m.vertex_patch(center).len(), 6);
        let p = m.edge_patch(0);
        assert!(p.contains(&0));
        for e in &m.skeleton().edges {
            if e.is_boundary() {
                let c = m.centroid(e.left);
                let mid = geom::midpoint(m.vertices()[e.vertices[0]], m.vertices()[e.vertices[1]]);
                assert!(geom::dot(e.normal, geom::sub(mid, c)) > 0.0);
            }
        }
    }

    #[test]
    fn skeleton_invariants() {
        let m = make_lshape(3).unwrap().refine(&[0, 5, 17]).unwrap();
        let sk = m.skeleton();
        for e in &sk.edges {
            let d = geom::dist(m.vertices()[e.vertices[0]], m.vertices()[e.vertices[1]]);
            assert!((d - e.length).abs() < 1e-15);
            assert!((geom::norm(e.normal) - 1.0).abs() < 1e-14);
        }
        assert!(m.is_conforming());
    }
}
