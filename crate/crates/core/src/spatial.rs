//! A compact 3D kd-tree for nearest-neighbor lookups over point clouds.

use nalgebra::Point3;

/// Static kd-tree over a point set; indices refer to the original slice.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3<f64>>,
    // node layout: order[lo..hi] is a subtree; the median sits at the
    // midpoint, split axis cycles with depth.
    order: Vec<usize>,
}

impl KdTree {
    pub fn build(points: &[Point3<f64>]) -> KdTree {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut tree = KdTree {
            points: points.to_vec(),
            order,
        };
        order = std::mem::take(&mut tree.order);
        build_rec(&tree.points, &mut order, 0);
        tree.order = order;
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and squared distance of the nearest point to `q`.
    pub fn nearest(&self, q: &Point3<f64>) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(q, 0, self.order.len(), 0, &mut best);
        Some(best)
    }

    /// Indices and squared distances of the `k` nearest points, closest
    /// first; ties broken by lower index.
    pub fn k_nearest(&self, q: &Point3<f64>, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut heap: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.search_k(q, 0, self.order.len(), 0, k, &mut heap);
        heap.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        heap.into_iter().map(|(d, i)| (i, d)).collect()
    }

    fn search(&self, q: &Point3<f64>, lo: usize, hi: usize, axis: usize, best: &mut (usize, f64)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let idx = self.order[mid];
        let p = &self.points[idx];
        let d2 = (p - q).norm_squared();
        if d2 < best.1 || (d2 == best.1 && idx < best.0) {
            *best = (idx, d2);
        }
        let delta = q[axis] - p[axis];
        let (first, second) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        let next = (axis + 1) % 3;
        self.search(q, first.0, first.1, next, best);
        if delta * delta <= best.1 {
            self.search(q, second.0, second.1, next, best);
        }
    }

    fn search_k(
        &self,
        q: &Point3<f64>,
        lo: usize,
        hi: usize,
        axis: usize,
        k: usize,
        heap: &mut Vec<(f64, usize)>,
    ) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let idx = self.order[mid];
        let p = &self.points[idx];
        let d2 = (p - q).norm_squared();
        let worst = if heap.len() < k {
            f64::INFINITY
        } else {
            heap.iter().map(|e| e.0).fold(0.0, f64::max)
        };
        if d2 < worst || heap.len() < k {
            heap.push((d2, idx));
            if heap.len() > k {
                // Drop the current worst entry, preferring to evict the
                // higher index on distance ties so lower indices win.
                let mut w = 0usize;
                for i in 1..heap.len() {
                    if heap[i].0 > heap[w].0 || (heap[i].0 == heap[w].0 && heap[i].1 > heap[w].1) {
                        w = i;
                    }
                }
                heap.swap_remove(w);
            }
        }
        let delta = q[axis] - p[axis];
        let (first, second) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        let next = (axis + 1) % 3;
        self.search_k(q, first.0, first.1, next, k, heap);
        let worst = if heap.len() < k {
            f64::INFINITY
        } else {
            heap.iter().map(|e| e.0).fold(0.0, f64::max)
        };
        if delta * delta <= worst {
            self.search_k(q, second.0, second.1, next, k, heap);
        }
    }
}

fn build_rec(points: &[Point3<f64>], order: &mut [usize], axis: usize) {
    if order.len() <= 1 {
        return;
    }
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a][axis]
            .partial_cmp(&points[b][axis])
            .unwrap()
            .then(a.cmp(&b))
    });
    let next = (axis + 1) % 3;
    let (left, rest) = order.split_at_mut(mid);
    build_rec(points, left, next);
    build_rec(points, &mut rest[1..], next);
}
