use super::BinaryMask;
use std::collections::VecDeque;

/// One 8-connected foreground component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub mask: BinaryMask,
    pub area: usize,
}

/// 8-connected components sorted by area, largest first. Equal areas keep
/// raster order of their first pixel.
pub fn connected_components(mask: &BinaryMask) -> Vec<Component> {
    let (w, h) = mask.dims();
    let mut label = vec![usize::MAX; w * h];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..w * h {
        if mask.bits()[start] == 0 || label[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut pixels = Vec::new();
        label[start] = id;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            pixels.push(k);
            let (x, y) = ((k % w) as isize, (k / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let nk = ny as usize * w + nx as usize;
                    if mask.bits()[nk] == 1 && label[nk] == usize::MAX {
                        label[nk] = id;
                        queue.push_back(nk);
                    }
                }
            }
        }
        comps.push(pixels);
    }

    let mut out: Vec<Component> = comps
        .into_iter()
        .map(|pixels| Component {
            area: pixels.len(),
            mask: BinaryMask::from_indices(w, h, &pixels),
        })
        .collect();
    out.sort_by(|a, b| b.area.cmp(&a.area));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_blocks() {
        let mut m = BinaryMask::empty(6, 6);
        for (x, y) in [(0, 0), (1, 0), (0, 1), (1, 1), (4, 4), (5, 4), (4, 5), (5, 5)] {
            m.set(x, y, true);
        }
        let cs = connected_components(&m);
        assert_eq!(cs.len(), 2);
        assert!(cs.iter().all(|c| c.area == 4));
    }

    #[test]
    fn diagonal_neighbors_join() {
        let m = BinaryMask::from_indices(3, 3, &[0, 4, 8]);
        assert_eq!(connected_components(&m).len(), 1);
    }

    #[test]
    fn empty_mask() {
        assert!(connected_components(&BinaryMask::empty(5, 5)).is_empty());
    }
}
