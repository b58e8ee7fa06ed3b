//! Linear-chain CRF: path scoring, log-partition via the forward algorithm,
//! negative log-likelihood with exact gradients, and Viterbi decoding.
//!
//! The transition matrix covers the K tags plus virtual START and END states
//! at indices K and K+1. Transitions into START and out of END are never read.

use crate::nn::linalg::{logsumexp, Matrix};

/// Transition scores over K tags plus START/END, shape (K+2) x (K+2).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub a: Matrix,
    num_tags: usize,
}

impl TransitionMatrix {
    pub fn zeros(num_tags: usize) -> TransitionMatrix {
        TransitionMatrix {
            a: Matrix::zeros(num_tags + 2, num_tags + 2),
            num_tags,
        }
    }

    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    pub fn start(&self) -> usize {
        self.num_tags
    }

    pub fn end(&self) -> usize {
        self.num_tags + 1
    }

    pub fn score(&self, from: usize, to: usize) -> f64 {
        self.a.get(from, to)
    }
}

/// Emission scores: rows = positions, cols = tags.
pub type EmissionScores = Matrix;

/// A decoded tag path with its total score under `sequence_score`.
#[derive(Debug, Clone, PartialEq)]
pub struct TagPath {
    pub tags: Vec<usize>,
    pub score: f64,
}

fn check_dims(em: &EmissionScores, a: &TransitionMatrix) {
    assert!(em.rows() >= 1, "empty emission matrix");
    assert_eq!(em.cols(), a.num_tags(), "emission/transition tag count mismatch");
}

/// Score of a tag path: START transition, per-position emission plus
/// transition, and the END transition.
pub fn sequence_score(em: &EmissionScores, a: &TransitionMatrix, path: &[usize]) -> f64 {
    check_dims(em, a);
    assert_eq!(path.len(), em.rows(), "path length mismatch");
    let k = a.num_tags();
    let mut prev = a.start();
    let mut total = 0.0;
    for (t, &tag) in path.iter().enumerate() {
        assert!(tag < k, "invalid tag code {tag}");
        total += a.score(prev, tag) + em.get(t, tag);
        prev = tag;
    }
    total + a.score(prev, a.end())
}

/// Log-partition over all K^T paths, forward recursion in log space.
pub fn forward_logz(em: &EmissionScores, a: &TransitionMatrix) -> f64 {
    check_dims(em, a);
    let (t_len, k) = (em.rows(), em.cols());
    let mut alpha: Vec<f64> = (0..k).map(|j| a.score(a.start(), j) + em.get(0, j)).collect();
    let mut scratch = vec![0.0; k];
    for t in 1..t_len {
        let mut next = vec![0.0; k];
        for (j, nj) in next.iter_mut().enumerate() {
            for i in 0..k {
                scratch[i] = alpha[i] + a.score(i, j);
            }
            *nj = logsumexp(&scratch) + em.get(t, j);
        }
        alpha = next;
    }
    for (j, s) in scratch.iter_mut().enumerate() {
        *s = alpha[j] + a.score(j, a.end());
    }
    logsumexp(&scratch)
}

/// Negative log-likelihood of a gold path: logZ - score(gold). Always >= 0.
pub fn crf_nll(em: &EmissionScores, a: &TransitionMatrix, gold: &[usize]) -> f64 {
    forward_logz(em, a) - sequence_score(em, a, gold)
}

/// Gradients of `crf_nll` wrt emissions and transitions, computed by
/// forward-backward. Emission gradients equal marginals minus gold
/// indicators.
pub fn crf_nll_backward(
    em: &EmissionScores,
    a: &TransitionMatrix,
    gold: &[usize],
) -> (Matrix, Matrix) {
    check_dims(em, a);
    let (t_len, k) = (em.rows(), em.cols());
    assert_eq!(gold.len(), t_len);

    // forward
    let mut alpha = Matrix::zeros(t_len, k);
    for j in 0..k {
        alpha.set(0, j, a.score(a.start(), j) + em.get(0, j));
    }
    let mut scratch = vec![0.0; k];
    for t in 1..t_len {
        for j in 0..k {
            for i in 0..k {
                scratch[i] = alpha.get(t - 1, i) + a.score(i, j);
            }
            alpha.set(t, j, logsumexp(&scratch) + em.get(t, j));
        }
    }
    for j in 0..k {
        scratch[j] = alpha.get(t_len - 1, j) + a.score(j, a.end());
    }
    let log_z = logsumexp(&scratch);

    // backward
    let mut beta = Matrix::zeros(t_len, k);
    for j in 0..k {
        beta.set(t_len - 1, j, a.score(j, a.end()));
    }
    for t in (0..t_len - 1).rev() {
        for i in 0..k {
            for j in 0..k {
                scratch[j] = a.score(i, j) + em.get(t + 1, j) + beta.get(t + 1, j);
            }
            beta.set(t, i, logsumexp(&scratch));
        }
    }

    let mut d_em = Matrix::zeros(t_len, k);
    let mut d_a = Matrix::zeros(k + 2, k + 2);

    for t in 0..t_len {
        for j in 0..k {
            let marginal = (alpha.get(t, j) + beta.get(t, j) - log_z).exp();
            let indicator = if gold[t] == j { 1.0 } else { 0.0 };
            d_em.set(t, j, marginal - indicator);
        }
    }

    // START row and END column
    for j in 0..k {
        let m0 = (alpha.get(0, j) + beta.get(0, j) - log_z).exp();
        let ind = if gold[0] == j { 1.0 } else { 0.0 };
        d_a.set(a.start(), j, m0 - ind);
        let m_last = (alpha.get(t_len - 1, j) + beta.get(t_len - 1, j) - log_z).exp();
        let ind = if gold[t_len - 1] == j { 1.0 } else { 0.0 };
        d_a.set(j, a.end(), m_last - ind);
    }

    // pairwise marginals for interior transitions
    for t in 1..t_len {
        for i in 0..k {
            for j in 0..k {
                let pair = (alpha.get(t - 1, i)
                    + a.score(i, j)
                    + em.get(t, j)
                    + beta.get(t, j)
                    - log_z)
                    .exp();
                let ind = if gold[t - 1] == i && gold[t] == j { 1.0 } else { 0.0 };
                d_a.set(i, j, d_a.get(i, j) + pair - ind);
            }
        }
    }

    (d_em, d_a)
}

/// Exact argmax decoding; ties break toward the lower tag code.
pub fn viterbi_decode(em: &EmissionScores, a: &TransitionMatrix) -> TagPath {
    viterbi_decode_masked(em, a, |_, _| true)
}

/// Viterbi with a transition filter over extended state indices (K = START,
/// K+1 = END); disallowed transitions score negative infinity.
pub fn viterbi_decode_masked<F>(em: &EmissionScores, a: &TransitionMatrix, allowed: F) -> TagPath
where
    F: Fn(usize, usize) -> bool,
{
    check_dims(em, a);
    let (t_len, k) = (em.rows(), em.cols());
    let trans = |i: usize, j: usize| -> f64 {
        if allowed(i, j) {
            a.score(i, j)
        } else {
            f64::NEG_INFINITY
        }
    };

    let mut delta: Vec<f64> = (0..k).map(|j| trans(a.start(), j) + em.get(0, j)).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(t_len);
    for t in 1..t_len {
        let mut next = vec![f64::NEG_INFINITY; k];
        let mut arg = vec![0usize; k];
        for j in 0..k {
            let mut best = f64::NEG_INFINITY;
            let mut best_i = 0;
            for i in 0..k {
                let s = delta[i] + trans(i, j);
                if s > best {
                    best = s;
                    best_i = i;
                }
            }
            next[j] = best + em.get(t, j);
            arg[j] = best_i;
        }
        back.push(arg);
        delta = next;
    }

    let mut best = f64::NEG_INFINITY;
    let mut best_j = 0;
    for j in 0..k {
        let s = delta[j] + trans(j, a.end());
        if s > best {
            best = s;
            best_j = j;
        }
    }

    let mut tags = vec![best_j];
    for arg in back.iter().rev() {
        let prev = arg[*tags.last().unwrap()];
        tags.push(prev);
    }
    tags.reverse();
    TagPath { tags, score: best }
}

/// Enumerates all K^T paths; test oracle for small instances.
pub fn enumerate_paths(t_len: usize, k: usize) -> Vec<Vec<usize>> {
    let mut paths = vec![Vec::new()];
    for _ in 0..t_len {
        let mut next = Vec::with_capacity(paths.len() * k);
        for p in &paths {
            for tag in 0..k {
                let mut q = p.clone();
                q.push(tag);
                next.push(q);
            }
        }
        paths = next;
    }
    paths
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(rng: &mut ChaCha8Rng, t_len: usize, k: usize) -> (Matrix, TransitionMatrix) {
        let mut em = Matrix::zeros(t_len, k);
        for v in em.as_mut_slice() {
            *v = rng.gen_range(-1.5..1.5);
        }
        let mut a = TransitionMatrix::zeros(k);
        for v in a.a.as_mut_slice() {
            *v = rng.gen_range(-1.5..1.5);
        }
        (em, a)
    }

    #[test]
    fn single_position_score() {
        let mut em = Matrix::zeros(1, 3);
        em.set(0, 1, 2.5);
        let a = TransitionMatrix::zeros(3);
        assert_eq!(sequence_score(&em, &a, &[1]), 2.5);
    }

    #[test]
    fn all_zero_scores_zero() {
        let em = Matrix::zeros(3, 4);
        let a = TransitionMatrix::zeros(4);
        for path in enumerate_paths(3, 4) {
            assert_eq!(sequence_score(&em, &a, &path), 0.0);
        }
    }

    #[test]
    fn score_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (em, a) = random_instance(&mut rng, 3, 4);
        let path = [2usize, 0, 3];
        let direct = a.score(a.start(), 2)
            + em.get(0, 2)
            + a.score(2, 0)
            + em.get(1, 0)
            + a.score(0, 3)
            + em.get(2, 3)
            + a.score(3, a.end());
        assert!((sequence_score(&em, &a, &path) - direct).abs() < 1e-12);
    }

    #[test]
    fn logz_single_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut em = Matrix::zeros(1, 5);
        for v in em.as_mut_slice() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let a = TransitionMatrix::zeros(5);
        assert!((forward_logz(&em, &a) - logsumexp(em.row(0))).abs() < 1e-12);
    }

    #[test]
    fn logz_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (em, a) = random_instance(&mut rng, 5, 4);
        let scores: Vec<f64> = enumerate_paths(5, 4)
            .iter()
            .map(|p| sequence_score(&em, &a, p))
            .collect();
        assert!((forward_logz(&em, &a) - logsumexp(&scores)).abs() < 1e-9);
    }

    #[test]
    fn logz_shift_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut em, a) = random_instance(&mut rng, 4, 3);
        let base = forward_logz(&em, &a);
        let c = 0.73;
        for j in 0..3 {
            em.set(2, j, em.get(2, j) + c);
        }
        assert!((forward_logz(&em, &a) - base - c).abs() < 1e-9);
    }

    #[test]
    fn nll_single_tag_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (em, a) = random_instance(&mut rng, 4, 1);
        assert!(crf_nll(&em, &a, &[0, 0, 0, 0]).abs() < 1e-12);
    }

    #[test]
    fn nll_matches_enumerated_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (em, a) = random_instance(&mut rng, 4, 3);
        let gold = [1usize, 0, 2, 2];
        let scores: Vec<f64> = enumerate_paths(4, 3)
            .iter()
            .map(|p| sequence_score(&em, &a, p))
            .collect();
        let log_p = sequence_score(&em, &a, &gold) - logsumexp(&scores);
        assert!((crf_nll(&em, &a, &gold) + log_p).abs() < 1e-9);
        assert!(crf_nll(&em, &a, &gold) >= 0.0);
    }

    #[test]
    fn path_probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(t_len, k) in &[(1usize, 4usize), (3, 3), (5, 4), (2, 2)] {
            let (em, a) = random_instance(&mut rng, t_len, k);
            let total: f64 = enumerate_paths(t_len, k)
                .iter()
                .map(|p| (-crf_nll(&em, &a, p)).exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "sum {total}");
        }
    }

    #[test]
    fn viterbi_zero_transitions_is_pointwise_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut em = Matrix::zeros(6, 4);
        for v in em.as_mut_slice() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let a = TransitionMatrix::zeros(4);
        let path = viterbi_decode(&em, &a);
        for t in 0..6 {
            let argmax = (0..4)
                .max_by(|&i, &j| em.get(t, i).partial_cmp(&em.get(t, j)).unwrap())
                .unwrap();
            assert_eq!(path.tags[t], argmax);
        }
    }

    #[test]
    fn viterbi_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let t_len = rng.gen_range(1..=6);
            let k = rng.gen_range(1..=4);
            let (em, a) = random_instance(&mut rng, t_len, k);
            let decoded = viterbi_decode(&em, &a);
            let (best_path, best_score) = enumerate_paths(t_len, k)
                .into_iter()
                .map(|p| {
                    let s = sequence_score(&em, &a, &p);
                    (p, s)
                })
                .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
                .unwrap();
            assert!((decoded.score - best_score).abs() < 1e-9);
            // summation order differs between the DP and re-scoring the path
            assert!((sequence_score(&em, &a, &decoded.tags) - decoded.score).abs() < 1e-9);
            // with continuous random scores the max is unique a.s.
            assert_eq!(decoded.tags, best_path);
        }
    }

    #[test]
    fn viterbi_single_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (em, a) = random_instance(&mut rng, 1, 5);
        let path = viterbi_decode(&em, &a);
        let argmax = (0..5)
            .max_by(|&i, &j| {
                let si = a.score(a.start(), i) + em.get(0, i) + a.score(i, a.end());
                let sj = a.score(a.start(), j) + em.get(0, j) + a.score(j, a.end());
                si.partial_cmp(&sj).unwrap()
            })
            .unwrap();
        assert_eq!(path.tags, vec![argmax]);
    }

    #[test]
    fn viterbi_tie_breaks_low() {
        let em = Matrix::zeros(2, 3);
        let a = TransitionMatrix::zeros(3);
        let path = viterbi_decode(&em, &a);
        assert_eq!(path.tags, vec![0, 0]);
    }

    #[test]
    fn viterbi_mask_excludes_transitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (em, a) = random_instance(&mut rng, 4, 3);
        // only tag 1 allowed anywhere
        let path = viterbi_decode_masked(&em, &a, |i, j| {
            let k = 3;
            (i >= k || i == 1) && (j >= k || j == 1)
        });
        assert_eq!(path.tags, vec![1; 4]);
    }

    #[test]
    fn viterbi_beats_random_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (em, a) = random_instance(&mut rng, 6, 4);
        let best = viterbi_decode(&em, &a);
        for _ in 0..100 {
            let p: Vec<usize> = (0..6).map(|_| rng.gen_range(0..4)).collect();
            assert!(sequence_score(&em, &a, &p) <= best.score + 1e-12);
        }
        assert!(forward_logz(&em, &a) >= best.score);
    }

    #[test]
    fn nll_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (em, a) = random_instance(&mut rng, 4, 3);
        let gold = [0usize, 2, 1, 1];
        let (d_em, d_a) = crf_nll_backward(&em, &a, &gold);

        let h = 1e-6;
        let mut em2 = em.clone();
        for idx in 0..em2.as_slice().len() {
            let orig = em2.as_slice()[idx];
            em2.as_mut_slice()[idx] = orig + h;
            let plus = crf_nll(&em2, &a, &gold);
            em2.as_mut_slice()[idx] = orig - h;
            let minus = crf_nll(&em2, &a, &gold);
            em2.as_mut_slice()[idx] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            assert!(
                (d_em.as_slice()[idx] - numeric).abs() < 1e-6,
                "emission grad mismatch at {idx}"
            );
        }

        let mut a2 = a.clone();
        let k2 = 5; // (K+2)
        for r in 0..k2 {
            for c in 0..k2 {
                let orig = a2.a.get(r, c);
                a2.a.set(r, c, orig + h);
                let plus = crf_nll(&em, &a2, &gold);
                a2.a.set(r, c, orig - h);
                let minus = crf_nll(&em, &a2, &gold);
                a2.a.set(r, c, orig);
                let numeric = (plus - minus) / (2.0 * h);
                assert!(
                    (d_a.get(r, c) - numeric).abs() < 1e-6,
                    "transition grad mismatch at ({r},{c})"
                );
            }
        }
    }
}
