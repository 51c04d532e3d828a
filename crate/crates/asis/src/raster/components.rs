//! Connected-component labeling on binary masks.

use super::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Component labels for every pixel: 0 = background, 1..=count = components.
///
/// Components are numbered by their smallest contained pixel in row-major
/// order, so the labeling is canonical for a given mask and connectivity.
#[derive(Debug, Clone)]
pub struct LabeledComponents {
    pub labels: Vec<u32>,
    pub count: usize,
    pub width: u32,
    pub height: u32,
}

impl LabeledComponents {
    /// Pixels of component `id` (1-based), row-major.
    pub fn component_pixels(&self, id: u32) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.labels[(y * self.width + x) as usize] == id {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// Label components with a scanning BFS. The scan order guarantees the
/// canonical numbering documented on [`LabeledComponents`].
pub fn label_components(mask: &BinaryMask, connectivity: Connectivity) -> LabeledComponents {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; (w * h) as usize];
    let mut count = 0u32;
    let mut queue: Vec<(u32, u32)> = Vec::new();

    let offsets_4: &[(i64, i64)] = &[(0, -1), (-1, 0), (1, 0), (0, 1)];
    let offsets_8: &[(i64, i64)] =
        &[(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
    let offsets = match connectivity {
        Connectivity::Four => offsets_4,
        Connectivity::Eight => offsets_8,
    };

    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as usize;
            if !mask.get(x, y) || labels[idx] != 0 {
                continue;
            }
            count += 1;
            labels[idx] = count;
            queue.clear();
            queue.push((x, y));
            while let Some((cx, cy)) = queue.pop() {
                for &(dx, dy) in offsets {
                    let nx = cx as i64 + dx;
                    let ny = cy as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let (nx, ny) = (nx as u32, ny as u32);
                    let nidx = (ny * w + nx) as usize;
                    if mask.get(nx, ny) && labels[nidx] == 0 {
                        labels[nidx] = count;
                        queue.push((nx, ny));
                    }
                }
            }
        }
    }

    LabeledComponents { labels, count: count as usize, width: w, height: h }
}

/// Split a mask into its connected components, one mask per component.
///
/// The returned masks are pairwise disjoint, union to the input, and are
/// ordered by their smallest contained pixel in row-major order. An empty
/// mask yields an empty list.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Vec<BinaryMask> {
    let labeled = label_components(mask, connectivity);
    let (w, h) = (mask.width(), mask.height());
    let mut out = vec![BinaryMask::new(w, h); labeled.count];
    for y in 0..h {
        for x in 0..w {
            let l = labeled.labels[(y * w + x) as usize];
            if l != 0 {
                out[(l - 1) as usize].set(x, y, true);
            }
        }
    }
    out
}
