//! Minimum-cost perfect assignment on a square cost matrix, the Kuhn
//! Munkres method in its O(n^3) potential form. Rows are assigned one per
//! column so eigenvalue lists can be matched optimally rather than greedily.

/// Assignment minimizing the total cost. `cost[i][j]` is the price of
/// pairing row i with column j; the result maps each row to its column.
///
/// Panics if the matrix is empty or not square.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    assert!(n > 0, "cost matrix must be nonempty");
    assert!(
        cost.iter().all(|row| row.len() == n),
        "cost matrix must be square"
    );

    // Potentials u, v and the column -> row matching p, 1-indexed with a
    // virtual row 0 used as the alternating-path root.
    let mut u = vec![0.0_f64; n + 1];
    let mut v = vec![0.0_f64; n + 1];
    let mut p = vec![0_usize; n + 1];
    let mut way = vec![0_usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0_usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0_usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
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
        // Unwind the augmenting path found above.
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0_usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Total cost of an assignment under the given matrix.
pub fn assignment_cost(cost: &[Vec<f64>], assignment: &[usize]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        let n = cost.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        // Heap's algorithm over all n! permutations.
        fn visit(k: usize, perm: &mut Vec<usize>, cost: &[Vec<f64>], best: &mut f64) {
            if k == 1 {
                let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
                if total < *best {
                    *best = total;
                }
                return;
            }
            for i in 0..k {
                visit(k - 1, perm, cost, best);
                if k % 2 == 0 {
                    perm.swap(i, k - 1);
                } else {
                    perm.swap(0, k - 1);
                }
            }
        }
        visit(n, &mut perm, cost, &mut best);
        best
    }

    #[test]
    fn solves_known_instance() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = min_cost_assignment(&cost);
        assert_eq!(assignment_cost(&cost, &a), 5.0);
        assert_eq!(a, vec![1, 0, 2]);
    }

    #[test]
    fn matches_exhaustive_search_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for trial in 0..200 {
            let n = 1 + trial % 6;
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect();
            let fast = assignment_cost(&cost, &min_cost_assignment(&cost));
            let exact = brute_force(&cost);
            assert!(
                (fast - exact).abs() < 1e-9,
                "trial {trial}: fast {fast} vs exact {exact}"
            );
        }
    }

    #[test]
    fn assignment_is_a_permutation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 12;
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let mut a = min_cost_assignment(&cost);
        a.sort_unstable();
        assert_eq!(a, (0..n).collect::<Vec<_>>());
    }
}
