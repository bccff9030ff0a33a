//! 8-connected component labelling by breadth-first search.

use std::collections::VecDeque;

use super::BinaryImage;

/// Pixels of one component as `(x, y)`, sorted row-major.
pub type Component = Vec<(usize, usize)>;

/// Components ordered by their first pixel in row-major order.
pub fn connected_components(img: &BinaryImage) -> Vec<Component> {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !img.data()[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            members.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for ny in y - 1..=y + 1 {
                for nx in x - 1..=x + 1 {
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if img.data()[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        members.sort_unstable();
        out.push(members.into_iter().map(|i| (i % w, i / w)).collect());
    }
    out
}

/// Clears foreground pixels of components smaller than `min_size`.
pub fn remove_small_components(img: &BinaryImage, min_size: usize) -> BinaryImage {
    let mut out = BinaryImage::empty(img.width(), img.height()).expect("same dimensions");
    for comp in connected_components(img) {
        if comp.len() >= min_size {
            for (x, y) in comp {
                out.set(x, y, true);
            }
        }
    }
    out
}
