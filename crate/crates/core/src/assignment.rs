//! Rectangular min-cost assignment with forbidden entries.
//!
//! Every column is assigned to exactly one row and every row serves at most
//! one column. The solver is a shortest-augmenting-path method with dual
//! potentials (Jonker–Volgenant / Crouse style) run over columns. Among equal
//! optima the lexicographically smallest column-to-row vector is returned.

use crate::cost::{AugmentedMatrix, CostKind};
use crate::error::{Error, Result};

/// Largest column count the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_COLUMNS: usize = 9;

const NONE: usize = usize::MAX;

/// Dense cost matrix with a forbidden mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    forbidden: Vec<bool>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, values: vec![0.0; rows * cols], forbidden: vec![false; rows * cols] }
    }

    /// Builds from rows of `Some(cost)` / `None` (forbidden).
    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::new(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged cost matrix");
            for (c, v) in row.iter().enumerate() {
                match v {
                    Some(v) => m.set(r, c, *v),
                    None => m.forbid(r, c),
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let i = row * self.cols + col;
        self.values[i] = value;
        self.forbidden[i] = false;
    }

    pub fn forbid(&mut self, row: usize, col: usize) {
        self.forbidden[row * self.cols + col] = true;
    }

    pub fn is_forbidden(&self, row: usize, col: usize) -> bool {
        self.forbidden[row * self.cols + col]
    }

    /// `None` for forbidden entries.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.cols + col;
        (!self.forbidden[i]).then_some(self.values[i])
    }

    fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Sum of the chosen entries, accumulated in column order.
    pub fn total(&self, column_to_row: &[usize]) -> f64 {
        column_to_row.iter().enumerate().map(|(c, &r)| self.value(r, c)).sum()
    }

    fn abs_total(&self, column_to_row: &[usize]) -> f64 {
        column_to_row.iter().enumerate().map(|(c, &r)| self.value(r, c).abs()).sum()
    }

    fn check_shape(&self) -> Result<()> {
        if self.rows < self.cols {
            return Err(Error::Invariant(format!(
                "assignment needs rows >= columns, got {}x{}",
                self.rows, self.cols
            )));
        }
        for c in 0..self.cols {
            if (0..self.rows).all(|r| self.is_forbidden(r, c)) {
                return Err(Error::InfeasibleColumn { column: c });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub column_to_row: Vec<usize>,
    pub total_cost: f64,
}

/// Slack under which two totals count as the same optimum.
fn tie_tolerance(abs_total: f64) -> f64 {
    1e-12 * (1.0 + abs_total)
}

/// Shortest augmenting path over agents (matrix columns) and targets (rows).
/// Returns agent -> target, or the agent that could not be augmented.
fn augmenting_path_solve(
    m: &CostMatrix,
    agents: &[usize],
    targets: &[usize],
) -> std::result::Result<Vec<usize>, usize> {
    let n = agents.len();
    let t = targets.len();
    let cost = |a: usize, b: usize| m.value(targets[b], agents[a]);
    let allowed = |a: usize, b: usize| !m.is_forbidden(targets[b], agents[a]);

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; t];
    let mut target_of = vec![NONE; n];
    let mut agent_of = vec![NONE; t];
    let mut shortest = vec![f64::INFINITY; t];
    let mut path = vec![NONE; t];
    let mut seen_agent = vec![false; n];
    let mut seen_target = vec![false; t];
    let mut remaining = vec![0usize; t];

    for cur in 0..n {
        shortest.fill(f64::INFINITY);
        path.fill(NONE);
        seen_agent.fill(false);
        seen_target.fill(false);
        for (it, slot) in remaining.iter_mut().enumerate() {
            *slot = t - it - 1;
        }
        let mut num_remaining = t;
        let mut min_val = 0.0;
        let mut i = cur;
        let mut sink = NONE;

        while sink == NONE {
            seen_agent[i] = true;
            let mut index = NONE;
            let mut lowest = f64::INFINITY;
            for it in 0..num_remaining {
                let j = remaining[it];
                if allowed(i, j) {
                    let r = min_val + cost(i, j) - u[i] - v[j];
                    if r < shortest[j] {
                        path[j] = i;
                        shortest[j] = r;
                    }
                }
                if shortest[j] < lowest || (shortest[j] == lowest && agent_of[j] == NONE) {
                    lowest = shortest[j];
                    index = it;
                }
            }
            min_val = lowest;
            if index == NONE || min_val == f64::INFINITY {
                return Err(agents[cur]);
            }
            let j = remaining[index];
            if agent_of[j] == NONE {
                sink = j;
            } else {
                i = agent_of[j];
            }
            seen_target[j] = true;
            num_remaining -= 1;
            remaining[index] = remaining[num_remaining];
        }

        u[cur] += min_val;
        for a in 0..n {
            if seen_agent[a] && a != cur {
                u[a] += min_val - shortest[target_of[a]];
            }
        }
        for b in 0..t {
            if seen_target[b] {
                v[b] -= min_val - shortest[b];
            }
        }
        let mut j = sink;
        loop {
            let a = path[j];
            agent_of[j] = a;
            std::mem::swap(&mut target_of[a], &mut j);
            if a == cur {
                break;
            }
        }
    }
    Ok(target_of.into_iter().map(|b| targets[b]).collect())
}

/// Exact minimum-cost assignment; ties broken toward the lexicographically
/// smallest `column_to_row`.
pub fn solve_matrix(m: &CostMatrix) -> Result<Assignment> {
    m.check_shape()?;
    let cols: Vec<usize> = (0..m.cols).collect();
    let rows: Vec<usize> = (0..m.rows).collect();
    let mut incumbent =
        augmenting_path_solve(m, &cols, &rows).map_err(|column| Error::InfeasibleColumn { column })?;
    let best = m.total(&incumbent);
    let tol = tie_tolerance(m.abs_total(&incumbent));

    // Fix columns left to right at the smallest row that still admits an optimum.
    let mut used = vec![false; m.rows];
    let mut fixed_sum = 0.0;
    for c in 0..m.cols {
        let rest_cols: Vec<usize> = (c + 1..m.cols).collect();
        for r in 0..incumbent[c] {
            if used[r] || m.is_forbidden(r, c) {
                continue;
            }
            let rest_rows: Vec<usize> = (0..m.rows).filter(|&x| x != r && !used[x]).collect();
            let Ok(rest) = augmenting_path_solve(m, &rest_cols, &rest_rows) else {
                continue;
            };
            let rest_total: f64 = rest_cols.iter().zip(&rest).map(|(&cc, &rr)| m.value(rr, cc)).sum();
            if fixed_sum + m.value(r, c) + rest_total <= best + tol {
                incumbent[c] = r;
                incumbent[c + 1..].copy_from_slice(&rest);
                break;
            }
        }
        used[incumbent[c]] = true;
        fixed_sum += m.value(incumbent[c], c);
    }
    Ok(Assignment { total_cost: m.total(&incumbent), column_to_row: incumbent })
}

/// Exhaustive enumeration over injective column -> row maps. Test oracle.
pub fn brute_force_matrix(m: &CostMatrix) -> Result<Assignment> {
    if m.cols > BRUTE_FORCE_MAX_COLUMNS {
        return Err(Error::OracleTooLarge { max: BRUTE_FORCE_MAX_COLUMNS, got: m.cols });
    }
    m.check_shape()?;
    let nonnegative = (0..m.rows).all(|r| (0..m.cols).all(|c| m.get(r, c).is_none_or(|v| v >= 0.0)));

    struct Search<'a> {
        m: &'a CostMatrix,
        used: Vec<bool>,
        current: Vec<usize>,
        prune: bool,
    }

    impl Search<'_> {
        /// Visits complete assignments in lexicographic order; `visit` returns
        /// true to stop. `bound` prunes partial sums above it.
        fn walk(&mut self, col: usize, partial: f64, bound: f64, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
            if self.prune && partial > bound {
                return false;
            }
            if col == self.m.cols {
                return visit(&self.current);
            }
            for r in 0..self.m.rows {
                if self.used[r] || self.m.is_forbidden(r, col) {
                    continue;
                }
                self.used[r] = true;
                self.current.push(r);
                let stop = self.walk(col + 1, partial + self.m.value(r, col), bound, visit);
                self.current.pop();
                self.used[r] = false;
                if stop {
                    return true;
                }
            }
            false
        }
    }

    let mut search = Search { m, used: vec![false; m.rows], current: Vec::new(), prune: nonnegative };
    let mut best: Option<(f64, Vec<usize>)> = None;
    search.walk(0, 0.0, f64::INFINITY, &mut |assign| {
        let total = m.total(assign);
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, assign.to_vec()));
        }
        false
    });
    let Some((best_total, best_assign)) = best else {
        // Hall's condition fails somewhere; report the first column that can
        // never be completed, which the augmenting solver also names.
        let cols: Vec<usize> = (0..m.cols).collect();
        let rows: Vec<usize> = (0..m.rows).collect();
        let column = augmenting_path_solve(m, &cols, &rows).err().unwrap_or(0);
        return Err(Error::InfeasibleColumn { column });
    };
    let tol = tie_tolerance(m.abs_total(&best_assign));
    let bound = best_total + tol;
    let mut chosen = None;
    search.walk(0, 0.0, bound, &mut |assign| {
        if m.total(assign) <= best_total + tol {
            chosen = Some(assign.to_vec());
            true
        } else {
            false
        }
    });
    let column_to_row = chosen.expect("the optimum itself satisfies the bound");
    Ok(Assignment { total_cost: m.total(&column_to_row), column_to_row })
}

/// Solution of the augmented first/subsequent assignment problem.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSolution {
    /// For each task column, the chosen row of the augmented matrix.
    pub column_to_row: Vec<usize>,
    pub total_cost: f64,
    /// Chosen entries tagged κ.
    pub kappa_count: usize,
}

impl AssignmentSolution {
    /// Columns whose chosen entry is tagged κ.
    pub fn kappa_columns<'a>(&'a self, matrix: &'a AugmentedMatrix) -> impl Iterator<Item = usize> + 'a {
        self.column_to_row
            .iter()
            .enumerate()
            .filter(|&(c, &r)| matrix.kind(r, c) == CostKind::Kappa)
            .map(|(c, _)| c)
    }
}

fn with_kinds(matrix: &AugmentedMatrix, a: Assignment) -> Result<AssignmentSolution> {
    let mut kappa_count = 0;
    for (c, &r) in a.column_to_row.iter().enumerate() {
        match matrix.kind(r, c) {
            CostKind::Forbidden => {
                return Err(Error::Invariant(format!("forbidden entry ({r}, {c}) chosen")));
            }
            CostKind::Kappa => kappa_count += 1,
            CostKind::Feasible => {}
        }
    }
    Ok(AssignmentSolution { column_to_row: a.column_to_row, total_cost: a.total_cost, kappa_count })
}

fn name_task(err: Error, matrix: &AugmentedMatrix) -> Error {
    match err {
        Error::InfeasibleColumn { column } => Error::InfeasibleTask { task_id: matrix.task_id(column) },
        other => other,
    }
}

pub fn solve(matrix: &AugmentedMatrix) -> Result<AssignmentSolution> {
    let a = solve_matrix(&matrix.costs).map_err(|e| name_task(e, matrix))?;
    with_kinds(matrix, a)
}

pub fn brute_force_solve(matrix: &AugmentedMatrix) -> Result<AssignmentSolution> {
    let a = brute_force_matrix(&matrix.costs).map_err(|e| name_task(e, matrix))?;
    with_kinds(matrix, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(rows: &[&[f64]]) -> CostMatrix {
        CostMatrix::from_rows(&rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect::<Vec<_>>())
    }

    #[test]
    fn two_by_two_off_diagonal() {
        let m = dense(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let a = solve_matrix(&m).unwrap();
        assert_eq!(a.column_to_row, vec![1, 0]);
        assert_eq!(a.total_cost, 4.0);
        assert_eq!(brute_force_matrix(&m).unwrap(), a);
    }

    #[test]
    fn zero_diagonal_square() {
        let m = dense(&[&[0.0, 3.0, 1.0], &[2.0, 0.0, 5.0], &[7.0, 1.0, 0.0]]);
        let a = solve_matrix(&m).unwrap();
        assert_eq!(a.column_to_row, vec![0, 1, 2]);
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn three_by_two() {
        let m = dense(&[&[5.0, 9.0], &[6.0, 4.0], &[7.0, 8.0]]);
        let a = solve_matrix(&m).unwrap();
        assert_eq!(a.column_to_row, vec![0, 1]);
        assert_eq!(a.total_cost, 9.0);
    }

    #[test]
    fn single_entries() {
        let m = dense(&[&[3.5]]);
        assert_eq!(brute_force_matrix(&m).unwrap().total_cost, 3.5);
        assert_eq!(solve_matrix(&m).unwrap().total_cost, 3.5);
        let f = CostMatrix::from_rows(&[vec![None]]);
        assert!(matches!(brute_force_matrix(&f), Err(Error::InfeasibleColumn { column: 0 })));
        assert!(matches!(solve_matrix(&f), Err(Error::InfeasibleColumn { column: 0 })));
    }

    #[test]
    fn hall_violation_is_infeasible() {
        // Both columns can only use row 0.
        let m = CostMatrix::from_rows(&[vec![Some(1.0), Some(1.0)], vec![None, None]]);
        assert!(matches!(solve_matrix(&m), Err(Error::InfeasibleColumn { .. })));
        assert!(matches!(brute_force_matrix(&m), Err(Error::InfeasibleColumn { .. })));
    }

    #[test]
    fn forbidden_entries_respected() {
        let m = CostMatrix::from_rows(&[vec![Some(0.0), None], vec![Some(100.0), Some(1.0)], vec![None, Some(50.0)]]);
        let a = solve_matrix(&m).unwrap();
        assert_eq!(a.column_to_row, vec![0, 1]);
        assert_eq!(a.total_cost, 1.0);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let m = dense(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(solve_matrix(&m).unwrap().column_to_row, vec![0, 1]);
        let m = dense(&[&[2.0, 1.0, 1.0], &[1.0, 1.0, 2.0], &[1.0, 2.0, 1.0]]);
        // Optima with total 3: [1,0,2] and [2,1,0]; lexicographically [1,0,2].
        assert_eq!(solve_matrix(&m).unwrap().column_to_row, vec![1, 0, 2]);
        assert_eq!(brute_force_matrix(&m).unwrap().column_to_row, vec![1, 0, 2]);
    }

    #[test]
    fn oracle_size_limit() {
        let m = CostMatrix::new(10, 10);
        assert!(matches!(brute_force_matrix(&m), Err(Error::OracleTooLarge { .. })));
    }

    fn matrix_strategy(max_rows: usize, max_cols: usize) -> impl Strategy<Value = CostMatrix> {
        (1..=max_cols).prop_flat_map(move |cols| {
            (cols..=max_rows).prop_flat_map(move |rows| {
                prop::collection::vec(prop::option::weighted(0.8, 0u32..50), rows * cols).prop_map(move |cells| {
                    let rows_v: Vec<Vec<Option<f64>>> =
                        cells.chunks(cols).map(|r| r.iter().map(|v| v.map(f64::from)).collect()).collect();
                    CostMatrix::from_rows(&rows_v)
                })
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn matches_brute_force(m in matrix_strategy(7, 5)) {
            match (solve_matrix(&m), brute_force_matrix(&m)) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.total_cost, b.total_cost);
                    prop_assert_eq!(a.column_to_row, b.column_to_row);
                }
                (Err(Error::InfeasibleColumn { .. }), Err(Error::InfeasibleColumn { .. })) => {}
                (a, b) => prop_assert!(false, "solver {:?} vs oracle {:?}", a, b),
            }
        }

        #[test]
        fn row_permutation_keeps_total(m in matrix_strategy(6, 4), seed in any::<u64>()) {
            let Ok(a) = solve_matrix(&m) else { return Ok(()); };
            let mut perm: Vec<usize> = (0..m.rows()).collect();
            let mut s = seed;
            for i in (1..perm.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let mut p = CostMatrix::new(m.rows(), m.cols());
            for (new_r, &old_r) in perm.iter().enumerate() {
                for c in 0..m.cols() {
                    match m.get(old_r, c) {
                        Some(v) => p.set(new_r, c, v),
                        None => p.forbid(new_r, c),
                    }
                }
            }
            prop_assert_eq!(solve_matrix(&p).unwrap().total_cost, a.total_cost);
        }

        #[test]
        fn scaling_keeps_argmin(m in matrix_strategy(6, 4), k in 1u32..8) {
            let Ok(a) = solve_matrix(&m) else { return Ok(()); };
            let mut s = m.clone();
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    if let Some(v) = m.get(r, c) {
                        s.set(r, c, v * f64::from(k) * 0.5);
                    }
                }
            }
            prop_assert_eq!(solve_matrix(&s).unwrap().column_to_row, a.column_to_row);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn real_valued_matches_brute_force(
            cells in prop::collection::vec(prop::option::weighted(0.8, 0.0f64..10.0), 30),
        ) {
            let rows: Vec<Vec<Option<f64>>> = cells.chunks(5).map(<[_]>::to_vec).collect();
            let m = CostMatrix::from_rows(&rows);
            match (solve_matrix(&m), brute_force_matrix(&m)) {
                (Ok(a), Ok(b)) => prop_assert!((a.total_cost - b.total_cost).abs() <= 1e-9 * (1.0 + b.total_cost)),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "solver {:?} vs oracle {:?}", a, b),
            }
        }
    }
}
