//! Exact maximum-weight bipartite assignment (Hungarian algorithm, O(n³)).

/// Best one-to-one alignment of rows to columns. `weights` is `rows × cols`
/// (each inner vector has `cols` entries); unmatched rows or columns add
/// nothing. Returns the total weight and the column matched to each row.
pub fn max_weight_assignment(weights: &[Vec<f64>], cols: usize) -> (f64, Vec<Option<usize>>) {
    let rows = weights.len();
    let n = rows.max(cols);
    if n == 0 {
        return (0.0, Vec::new());
    }
    let w = |i: usize, j: usize| {
        if i < rows && j < cols {
            weights[i][j]
        } else {
            0.0
        }
    };
    // Potentials u (rows), v (columns); p[j] is the row assigned to column j.
    // Arrays are 1-based with index 0 as the virtual start.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = -w(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![None; rows];
    let mut total = 0.0;
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            assignment[i - 1] = Some(j - 1);
            total += weights[i - 1][j - 1];
        }
    }
    (total, assignment)
}
