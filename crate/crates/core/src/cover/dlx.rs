//! Algorithm X over a sparse 0/1 matrix stored as circular doubly linked lists.
//!
//! Columns are the items to cover (all primary), rows are the options. Node 0
//! is the root header; nodes `1..=items` are column headers; the rest are body
//! nodes, laid out row by row.

/// Decides how the search proceeds and receives complete covers.
pub trait CoverVisitor {
    /// Called at every node of the search tree that still has items to cover;
    /// returning `false` prunes the subtree.
    fn descend(&mut self, _partial: &[usize]) -> bool {
        true
    }

    /// Called with the row indices of every exact cover reached.
    fn solution(&mut self, rows: &[usize]);
}

#[derive(Debug, Clone, Copy)]
struct Node {
    left: usize,
    right: usize,
    up: usize,
    down: usize,
    /// Column header node of this node (self for headers).
    column: usize,
    /// Option index for body nodes.
    row: usize,
}

#[derive(Debug, Clone)]
pub struct Dlx {
    nodes: Vec<Node>,
    sizes: Vec<usize>,
    items: usize,
}

const ROOT: usize = 0;

impl Dlx {
    /// `rows[r]` lists the items covered by option `r`; empty rows are never selected.
    pub fn new(items: usize, rows: &[Vec<usize>]) -> Self {
        let mut nodes = Vec::with_capacity(1 + items + rows.iter().map(Vec::len).sum::<usize>());
        for i in 0..=items {
            nodes.push(Node {
                left: if i == 0 { items } else { i - 1 },
                right: if i == items { 0 } else { i + 1 },
                up: i,
                down: i,
                column: i,
                row: usize::MAX,
            });
        }
        let mut sizes = vec![0; items + 1];
        for (r, row) in rows.iter().enumerate() {
            let mut cols = row.clone();
            cols.sort_unstable();
            cols.dedup();
            let first = nodes.len();
            let len = cols.len();
            for (k, &item) in cols.iter().enumerate() {
                assert!(item < items, "item {item} out of range");
                let col = item + 1;
                let idx = nodes.len();
                let up = nodes[col].up;
                nodes.push(Node {
                    left: if k == 0 { first + len - 1 } else { idx - 1 },
                    right: if k + 1 == len { first } else { idx + 1 },
                    up,
                    down: col,
                    column: col,
                    row: r,
                });
                nodes[up].down = idx;
                nodes[col].up = idx;
                sizes[col] += 1;
            }
        }
        Dlx { nodes, sizes, items }
    }

    pub fn items(&self) -> usize {
        self.items
    }

    /// Runs the full backtracking search, restoring the structure afterwards.
    pub fn search<V: CoverVisitor>(&mut self, visitor: &mut V) {
        let mut partial = Vec::new();
        self.recurse(&mut partial, visitor);
    }

    fn recurse<V: CoverVisitor>(&mut self, partial: &mut Vec<usize>, visitor: &mut V) {
        if self.nodes[ROOT].right == ROOT {
            visitor.solution(partial);
            return;
        }
        if !visitor.descend(partial) {
            return;
        }
        // Fewest remaining options first; ties go to the lowest item.
        let mut col = self.nodes[ROOT].right;
        let mut c = self.nodes[col].right;
        while c != ROOT {
            if self.sizes[c] < self.sizes[col] {
                col = c;
            }
            c = self.nodes[c].right;
        }
        if self.sizes[col] == 0 {
            return;
        }
        self.cover(col);
        let mut r = self.nodes[col].down;
        while r != col {
            partial.push(self.nodes[r].row);
            let mut j = self.nodes[r].right;
            while j != r {
                self.cover(self.nodes[j].column);
                j = self.nodes[j].right;
            }
            self.recurse(partial, visitor);
            let mut j = self.nodes[r].left;
            while j != r {
                self.uncover(self.nodes[j].column);
                j = self.nodes[j].left;
            }
            partial.pop();
            r = self.nodes[r].down;
        }
        self.uncover(col);
    }

    fn cover(&mut self, col: usize) {
        let Node { left, right, .. } = self.nodes[col];
        self.nodes[left].right = right;
        self.nodes[right].left = left;
        let mut i = self.nodes[col].down;
        while i != col {
            let mut j = self.nodes[i].right;
            while j != i {
                let Node { up, down, column, .. } = self.nodes[j];
                self.nodes[up].down = down;
                self.nodes[down].up = up;
                self.sizes[column] -= 1;
                j = self.nodes[j].right;
            }
            i = self.nodes[i].down;
        }
    }

    fn uncover(&mut self, col: usize) {
        let mut i = self.nodes[col].up;
        while i != col {
            let mut j = self.nodes[i].left;
            while j != i {
                let Node { up, down, column, .. } = self.nodes[j];
                self.sizes[column] += 1;
                self.nodes[up].down = j;
                self.nodes[down].up = j;
                j = self.nodes[j].left;
            }
            i = self.nodes[i].up;
        }
        let Node { left, right, .. } = self.nodes[col];
        self.nodes[left].right = col;
        self.nodes[right].left = col;
    }
}

/// Collects every exact cover, each as sorted row indices.
#[derive(Debug, Default)]
pub struct CollectAll {
    pub covers: Vec<Vec<usize>>,
}

impl CoverVisitor for CollectAll {
    fn solution(&mut self, rows: &[usize]) {
        let mut rows = rows.to_vec();
        rows.sort_unstable();
        self.covers.push(rows);
    }
}
