use ndarray::Array2;

/// Boundary pixels of one mask: foreground pixels with at least one
/// background 4-neighbour (outside the image counts as background), plus
/// the number of 8-connected foreground components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surface {
    pub height: usize,
    pub width: usize,
    pub points: Vec<(usize, usize)>,
    pub components: usize,
}

impl Surface {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn extract_surface(mask: &Array2<u8>) -> Surface {
    let (h, w) = mask.dim();
    let fg = |y: isize, x: isize| -> bool {
        y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w && mask[[y as usize, x as usize]] != 0
    };
    let mut points = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if mask[[y, x]] == 0 {
                continue;
            }
            let (yi, xi) = (y as isize, x as isize);
            if !(fg(yi - 1, xi) && fg(yi + 1, xi) && fg(yi, xi - 1) && fg(yi, xi + 1)) {
                points.push((y, x));
            }
        }
    }

    let mut seen = Array2::<bool>::from_elem((h, w), false);
    let mut components = 0;
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if mask[[y, x]] == 0 || seen[[y, x]] {
                continue;
            }
            components += 1;
            seen[[y, x]] = true;
            stack.push((y, x));
            while let Some((cy, cx)) = stack.pop() {
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let (ny, nx) = (cy as isize + dy, cx as isize + dx);
                        if fg(ny, nx) && !seen[[ny as usize, nx as usize]] {
                            seen[[ny as usize, nx as usize]] = true;
                            stack.push((ny as usize, nx as usize));
                        }
                    }
                }
            }
        }
    }
    Surface { height: h, width: w, points, components }
}
