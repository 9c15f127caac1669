//! Brute-force oracles used to validate the persistence engine.
//!
//! Everything here works on the explicit cubical complex (vertices, edges
//! and squares of the pixel grid) and shares no code with
//! [`crate::persistence`] apart from the diagram types.

use thiserror::Error;

use crate::filtration::{BinaryImage, FiltrationField};
use crate::persistence::{Bar, PersistenceDiagram};

/// Largest complex the dense reduction accepts.
pub const MAX_ORACLE_CELLS: usize = 4096;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("complex has {cells} cells, the dense oracle accepts at most {MAX_ORACLE_CELLS}")]
    TooLarge { cells: usize },
}

/// Cell counts of the closure of the active pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct CubicalComplexCounts {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
}

impl CubicalComplexCounts {
    pub fn euler(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.faces as i64
    }
}

/// Number of 8-connected components of active pixels, by two-pass labeling
/// with an equivalence table.
pub fn label_components(b: &BinaryImage) -> usize {
    let (rows, cols) = (b.rows(), b.cols());
    let mut labels = vec![0usize; rows * cols];
    // equiv[l] points towards a smaller equivalent label; index 0 unused.
    let mut equiv: Vec<usize> = vec![0];

    fn resolve(equiv: &[usize], mut l: usize) -> usize {
        while equiv[l] != l {
            l = equiv[l];
        }
        l
    }

    for r in 0..rows {
        for c in 0..cols {
            if !b.is_active(r, c) {
                continue;
            }
            // Already-visited neighbours: W, NW, N, NE.
            let mut prior = Vec::with_capacity(4);
            if c > 0 {
                prior.push(labels[r * cols + c - 1]);
            }
            if r > 0 {
                if c > 0 {
                    prior.push(labels[(r - 1) * cols + c - 1]);
                }
                prior.push(labels[(r - 1) * cols + c]);
                if c + 1 < cols {
                    prior.push(labels[(r - 1) * cols + c + 1]);
                }
            }
            let roots: Vec<usize> = prior
                .into_iter()
                .filter(|&l| l != 0)
                .map(|l| resolve(&equiv, l))
                .collect();
            let label = match roots.iter().min() {
                None => {
                    equiv.push(equiv.len());
                    equiv.len() - 1
                }
                Some(&m) => {
                    for &l in &roots {
                        equiv[l] = m;
                    }
                    m
                }
            };
            labels[r * cols + c] = label;
        }
    }
    (1..equiv.len()).filter(|&l| equiv[l] == l).count()
}

/// Counts vertices, edges and squares in the closure of the active pixels.
pub fn complex_counts(b: &BinaryImage) -> CubicalComplexCounts {
    let (rows, cols) = (b.rows(), b.cols());
    let active = |r: isize, c: isize| -> bool {
        r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols && b.is_active(r as usize, c as usize)
    };
    let mut counts = CubicalComplexCounts {
        faces: b.count_active(),
        ..Default::default()
    };
    for i in 0..=rows as isize {
        for j in 0..=cols as isize {
            // Vertex (i, j) touches pixels (i-1..=i, j-1..=j).
            if active(i - 1, j - 1) || active(i - 1, j) || active(i, j - 1) || active(i, j) {
                counts.vertices += 1;
            }
            // Horizontal edge from (i, j) to (i, j+1).
            if j < cols as isize && (active(i - 1, j) || active(i, j)) {
                counts.edges += 1;
            }
            // Vertical edge from (i, j) to (i+1, j).
            if i < rows as isize && (active(i, j - 1) || active(i, j)) {
                counts.edges += 1;
            }
        }
    }
    counts
}

pub fn euler_characteristic(b: &BinaryImage) -> i64 {
    complex_counts(b).euler()
}

/// `(β0, β1)` from component labeling and the Euler characteristic.
pub fn betti_by_counting(b: &BinaryImage) -> (usize, usize) {
    let b0 = label_components(b);
    let b1 = b0 as i64 - euler_characteristic(b);
    debug_assert!(b1 >= 0, "negative first Betti number");
    (b0, b1 as usize)
}

struct Cell {
    dim: u8,
    value: u16,
    boundary: Vec<usize>,
}

/// Builds every cell of the full grid complex with lower-star values.
/// Ids are vertices, then horizontal edges, then vertical edges, then
/// squares, each block row-major.
fn grid_complex(f: &FiltrationField) -> Vec<Cell> {
    let (rows, cols) = (f.rows(), f.cols());
    let pixel = |r: isize, c: isize| -> Option<u16> {
        (r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols).then(|| f.get(r as usize, c as usize))
    };
    let min_of = |cands: &[Option<u16>]| cands.iter().flatten().copied().min().expect("cell has a pixel");

    let vid = |i: usize, j: usize| i * (cols + 1) + j;
    let n_vertices = (rows + 1) * (cols + 1);
    let hid = |i: usize, j: usize| n_vertices + i * cols + j;
    let n_h = (rows + 1) * cols;
    let vert_id = |i: usize, j: usize| n_vertices + n_h + i * (cols + 1) + j;
    let n_v = rows * (cols + 1);

    let mut cells = Vec::with_capacity(n_vertices + n_h + n_v + rows * cols);
    for i in 0..=rows {
        for j in 0..=cols {
            let (i, j) = (i as isize, j as isize);
            cells.push(Cell {
                dim: 0,
                value: min_of(&[pixel(i - 1, j - 1), pixel(i - 1, j), pixel(i, j - 1), pixel(i, j)]),
                boundary: vec![],
            });
        }
    }
    for i in 0..=rows {
        for j in 0..cols {
            let (si, sj) = (i as isize, j as isize);
            cells.push(Cell {
                dim: 1,
                value: min_of(&[pixel(si - 1, sj), pixel(si, sj)]),
                boundary: vec![vid(i, j), vid(i, j + 1)],
            });
        }
    }
    for i in 0..rows {
        for j in 0..=cols {
            let (si, sj) = (i as isize, j as isize);
            cells.push(Cell {
                dim: 1,
                value: min_of(&[pixel(si, sj - 1), pixel(si, sj)]),
                boundary: vec![vid(i, j), vid(i + 1, j)],
            });
        }
    }
    for i in 0..rows {
        for j in 0..cols {
            cells.push(Cell {
                dim: 2,
                value: f.get(i, j),
                boundary: vec![hid(i, j), hid(i + 1, j), vert_id(i, j), vert_id(i, j + 1)],
            });
        }
    }
    cells
}

/// Symmetric difference of two sorted index lists.
fn xor_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Persistence by the standard left-to-right column reduction over Z/2 of
/// the full cubical boundary matrix, cells ordered by
/// `(value, dimension, id)`.
pub fn reduce_boundary_matrix(f: &FiltrationField) -> Result<(PersistenceDiagram, PersistenceDiagram), OracleError> {
    let (rows, cols) = (f.rows(), f.cols());
    let cells_total = (rows + 1) * (cols + 1) + (rows + 1) * cols + rows * (cols + 1) + rows * cols;
    if cells_total > MAX_ORACLE_CELLS {
        return Err(OracleError::TooLarge { cells: cells_total });
    }
    let cells = grid_complex(f);
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by_key(|&id| (cells[id].value, cells[id].dim, id));
    let mut position = vec![0usize; cells.len()];
    for (pos, &id) in order.iter().enumerate() {
        position[id] = pos;
    }

    let mut columns: Vec<Vec<usize>> = order
        .iter()
        .map(|&id| {
            let mut col: Vec<usize> = cells[id].boundary.iter().map(|&b| position[b]).collect();
            col.sort_unstable();
            col
        })
        .collect();
    let mut pivot_of_row: Vec<Option<usize>> = vec![None; cells.len()];
    let mut is_pivot_row = vec![false; cells.len()];

    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match pivot_of_row[low] {
                Some(k) => {
                    let reduced = xor_sorted(&columns[j], &columns[k]);
                    columns[j] = reduced;
                }
                None => {
                    pivot_of_row[low] = Some(j);
                    is_pivot_row[low] = true;
                    break;
                }
            }
        }
    }

    let value_at = |pos: usize| cells[order[pos]].value;
    let dim_at = |pos: usize| cells[order[pos]].dim;
    let mut bars: [Vec<Bar>; 2] = [Vec::new(), Vec::new()];
    for (row, pivot) in pivot_of_row.iter().enumerate() {
        if let Some(col) = *pivot {
            let d = dim_at(row) as usize;
            if d < 2 {
                bars[d].push(Bar::finite(value_at(row), value_at(col)));
            }
        }
    }
    for (pos, col) in columns.iter().enumerate() {
        if col.is_empty() && !is_pivot_row[pos] {
            let d = dim_at(pos) as usize;
            assert!(d < 2, "grid complex cannot carry an essential 2-cycle");
            bars[d].push(Bar::essential(value_at(pos)));
        }
    }
    let [b0, b1] = bars;
    Ok((PersistenceDiagram::new(0, b0), PersistenceDiagram::new(1, b1)))
}
