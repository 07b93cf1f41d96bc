//! Exact HMM inference over a precomputed emission log-likelihood table.

/// MAP state path and its log score.
///
/// Predecessor ties resolve to the lower state index, as does the final
/// state, so among equal-scoring paths the one that is smallest when compared
/// from the last frame backwards wins.
pub fn viterbi(log_initial: &[f64], log_transitions: &[f64], log_emissions: &[f64]) -> (Vec<usize>, f64) {
    let k = log_initial.len();
    let t_len = log_emissions.len() / k;
    if t_len == 0 {
        return (Vec::new(), 0.0);
    }
    let mut score: Vec<f64> = (0..k).map(|j| log_initial[j] + log_emissions[j]).collect();
    let mut backptr = vec![0usize; t_len * k];
    let mut next = vec![0.0; k];
    for t in 1..t_len {
        for j in 0..k {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for i in 0..k {
                let cand = score[i] + log_transitions[i * k + j];
                if cand > best {
                    best = cand;
                    arg = i;
                }
            }
            next[j] = best + log_emissions[t * k + j];
            backptr[t * k + j] = arg;
        }
        std::mem::swap(&mut score, &mut next);
    }
    let mut last = 0;
    for j in 1..k {
        if score[j] > score[last] {
            last = j;
        }
    }
    let best = score[last];
    let mut path = vec![0; t_len];
    path[t_len - 1] = last;
    for t in (1..t_len).rev() {
        path[t - 1] = backptr[t * k + path[t]];
    }
    (path, best)
}

/// Per-frame state posteriors (row-major `T x K`) and `log p(observations)`.
///
/// Uses scaled forward and backward messages; emissions are shifted by their
/// per-frame maximum before leaving log space. If a message underflows to
/// zero the whole computation is redone in log space.
pub fn forward_backward(initial: &[f64], transitions: &[f64], log_emissions: &[f64]) -> (Vec<f64>, f64) {
    let k = initial.len();
    let t_len = log_emissions.len() / k;
    let mut lik = log_emissions.to_vec();
    let mut log_total = 0.0;
    for row in lik.chunks_exact_mut(k) {
        let shift = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        log_total += shift;
        for v in row.iter_mut() {
            *v = (*v - shift).exp();
        }
    }

    let mut fwd = vec![0.0; t_len * k];
    for t in 0..t_len {
        for j in 0..k {
            let pred = if t == 0 {
                initial[j]
            } else {
                (0..k).map(|i| fwd[(t - 1) * k + i] * transitions[i * k + j]).sum()
            };
            fwd[t * k + j] = pred * lik[t * k + j];
        }
        let norm: f64 = fwd[t * k..(t + 1) * k].iter().sum();
        if !(norm > 0.0 && norm.is_finite()) {
            return forward_backward_log(initial, transitions, log_emissions);
        }
        log_total += norm.ln();
        fwd[t * k..(t + 1) * k].iter_mut().for_each(|v| *v /= norm);
    }

    let mut back = vec![1.0; t_len * k];
    for t in (0..t_len.saturating_sub(1)).rev() {
        for i in 0..k {
            back[t * k + i] = (0..k)
                .map(|j| transitions[i * k + j] * lik[(t + 1) * k + j] * back[(t + 1) * k + j])
                .sum();
        }
        let norm: f64 = back[t * k..(t + 1) * k].iter().sum();
        if !(norm > 0.0 && norm.is_finite()) {
            return forward_backward_log(initial, transitions, log_emissions);
        }
        back[t * k..(t + 1) * k].iter_mut().for_each(|v| *v /= norm);
    }

    let mut post = fwd;
    for t in 0..t_len {
        let row = &mut post[t * k..(t + 1) * k];
        for (p, b) in row.iter_mut().zip(&back[t * k..(t + 1) * k]) {
            *p *= b;
        }
        let norm: f64 = row.iter().sum();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    (post, log_total)
}

fn log_sum_exp_iter(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-space forward-backward; slower, but immune to underflow.
pub fn forward_backward_log(initial: &[f64], transitions: &[f64], log_emissions: &[f64]) -> (Vec<f64>, f64) {
    let k = initial.len();
    let t_len = log_emissions.len() / k;
    let log_init: Vec<f64> = initial.iter().map(|p| p.ln()).collect();
    let log_trans: Vec<f64> = transitions.iter().map(|p| p.ln()).collect();
    let mut fwd = vec![0.0; t_len * k];
    for t in 0..t_len {
        for j in 0..k {
            let pred = if t == 0 {
                log_init[j]
            } else {
                log_sum_exp_iter((0..k).map(|i| fwd[(t - 1) * k + i] + log_trans[i * k + j]))
            };
            fwd[t * k + j] = pred + log_emissions[t * k + j];
        }
    }
    let mut back = vec![0.0; t_len * k];
    for t in (0..t_len.saturating_sub(1)).rev() {
        for i in 0..k {
            back[t * k + i] = log_sum_exp_iter(
                (0..k).map(|j| log_trans[i * k + j] + log_emissions[(t + 1) * k + j] + back[(t + 1) * k + j]),
            );
        }
    }
    let log_total = if t_len == 0 {
        0.0
    } else {
        log_sum_exp_iter(fwd[(t_len - 1) * k..].iter().copied())
    };
    let mut post = vec![0.0; t_len * k];
    for t in 0..t_len {
        let row: Vec<f64> = (0..k).map(|j| fwd[t * k + j] + back[t * k + j]).collect();
        let norm = log_sum_exp_iter(row.iter().copied());
        for j in 0..k {
            post[t * k + j] = (row[j] - norm).exp();
        }
    }
    (post, log_total)
}
