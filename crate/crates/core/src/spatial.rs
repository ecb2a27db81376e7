//! Static bounding-volume hierarchy over disks (points are disks of radius 0).
//!
//! Nearest queries return the exact minimum of `|p - c| - r`: a node is pruned
//! only when the distance from `p` to its box already exceeds the best gap,
//! and every disk lies inside its box, so no candidate can be lost.

use crate::hyperbolic::Point;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        }
    }

    fn grow(&mut self, d: &IndexedDisk) {
        self.min_x = self.min_x.min(d.x - d.r);
        self.min_y = self.min_y.min(d.y - d.r);
        self.max_x = self.max_x.max(d.x + d.r);
        self.max_y = self.max_y.max(d.y + d.r);
    }

    #[inline]
    fn distance(&self, x: f64, y: f64) -> f64 {
        let dx = (self.min_x - x).max(0.0).max(x - self.max_x);
        let dy = (self.min_y - y).max(0.0).max(y - self.max_y);
        dx.hypot(dy)
    }
}

#[derive(Debug, Clone, Copy)]
struct IndexedDisk {
    x: f64,
    y: f64,
    r: f64,
    id: u32,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bbox: Aabb,
    // leaf: disks[start..start+count]; inner: children at left, left+1
    start: u32,
    count: u32,
    left: u32,
}

#[derive(Debug, Clone, Default)]
pub struct DiskIndex {
    nodes: Vec<Node>,
    disks: Vec<IndexedDisk>,
}

/// Result of a nearest-disk query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub gap: f64,
    pub index: usize,
}

impl DiskIndex {
    /// Builds the hierarchy from `(center, radius)` pairs; ids are positions
    /// in the input.
    pub fn build(items: impl IntoIterator<Item = (Point, f64)>) -> Self {
        let mut disks: Vec<IndexedDisk> = items
            .into_iter()
            .enumerate()
            .map(|(i, (c, r))| IndexedDisk {
                x: c.re,
                y: c.im,
                r,
                id: i as u32,
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * disks.len() / LEAF_SIZE + 1);
        if !disks.is_empty() {
            nodes.push(Node {
                bbox: Aabb::empty(),
                start: 0,
                count: 0,
                left: 0,
            });
            let n = disks.len();
            split(&mut nodes, &mut disks, 0, 0, n);
        }
        DiskIndex { nodes, disks }
    }

    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }

    /// Nearest disk by signed gap `|p - c| - r`, considering only gaps strictly
    /// below `bound`. Ties resolve to the lowest id. `exclude` skips one id.
    pub fn nearest_below(&self, p: Point, bound: f64, exclude: Option<usize>) -> Option<Nearest> {
        if self.nodes.is_empty() {
            return None;
        }
        let (x, y) = (p.re, p.im);
        let mut best_gap = bound;
        let mut best_id: Option<u32> = None;
        let mut stack: [u32; 64] = [0; 64];
        let mut top = 1usize;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if node.bbox.distance(x, y) > best_gap {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for d in &self.disks[s..s + node.count as usize] {
                    if exclude == Some(d.id as usize) {
                        continue;
                    }
                    let gap = (d.x - x).hypot(d.y - y) - d.r;
                    let better = match best_id {
                        None => gap < best_gap,
                        Some(b) => gap < best_gap || (gap == best_gap && d.id < b),
                    };
                    if better {
                        best_gap = gap;
                        best_id = Some(d.id);
                    }
                }
            } else {
                let l = node.left;
                let dl = self.nodes[l as usize].bbox.distance(x, y);
                let dr = self.nodes[l as usize + 1].bbox.distance(x, y);
                // push the farther child first so the nearer one is popped next
                if dl <= dr {
                    stack[top] = l + 1;
                    stack[top + 1] = l;
                } else {
                    stack[top] = l;
                    stack[top + 1] = l + 1;
                }
                top += 2;
            }
        }
        best_id.map(|id| Nearest {
            gap: best_gap,
            index: id as usize,
        })
    }

    /// Ids of all disks meeting the closed Euclidean disk `(p, radius)`, in
    /// increasing order.
    pub fn within(&self, p: Point, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let (x, y) = (p.re, p.im);
        let mut stack = vec![0u32];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            if node.bbox.distance(x, y) > radius {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for d in &self.disks[s..s + node.count as usize] {
                    if (d.x - x).hypot(d.y - y) - d.r <= radius {
                        out.push(d.id as usize);
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.left + 1);
            }
        }
        out.sort_unstable();
        out
    }
}

fn split(nodes: &mut Vec<Node>, disks: &mut [IndexedDisk], node: usize, start: usize, end: usize) {
    let mut bbox = Aabb::empty();
    for d in &disks[start..end] {
        bbox.grow(d);
    }
    nodes[node].bbox = bbox;
    let n = end - start;
    if n <= LEAF_SIZE {
        nodes[node].start = start as u32;
        nodes[node].count = n as u32;
        return;
    }
    let slice = &mut disks[start..end];
    let mid = n / 2;
    if bbox.max_x - bbox.min_x >= bbox.max_y - bbox.min_y {
        slice.select_nth_unstable_by(mid, |a, b| a.x.total_cmp(&b.x));
    } else {
        slice.select_nth_unstable_by(mid, |a, b| a.y.total_cmp(&b.y));
    }
    let left = nodes.len();
    let blank = Node {
        bbox: Aabb::empty(),
        start: 0,
        count: 0,
        left: 0,
    };
    nodes.push(blank);
    nodes.push(blank);
    nodes[node].left = left as u32;
    split(nodes, disks, left, start, start + mid);
    split(nodes, disks, left + 1, start + mid, end);
}
