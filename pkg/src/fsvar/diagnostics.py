"""Chain diagnostics: effective sample size, split R-hat, dependent-sample KS."""

import numpy as np
from scipy import stats


def autocorrelation(x):
    x = np.asarray(x, float)
    n = x.size
    x = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n]
    if acov[0] <= 0:
        return np.concatenate([[1.0], np.zeros(n - 1)])
    return acov / acov[0]


def effective_sample_size(x):
    """Geyer's initial monotone sequence estimator."""
    x = np.asarray(x, float)
    n = x.size
    if n < 4 or np.ptp(x) == 0:
        return float(n)
    rho = autocorrelation(x)
    pairs = rho[: 2 * ((n - 1) // 2)].reshape(-1, 2).sum(axis=1)
    # truncate at the first non-positive pair, then enforce monotonicity
    stop = np.flatnonzero(pairs <= 0)
    pairs = pairs[: stop[0]] if stop.size else pairs
    pairs = np.minimum.accumulate(pairs)
    tau = -1.0 + 2.0 * pairs.sum()
    return float(min(n, n / max(tau, 1e-12)))


def split_rhat(x):
    """Potential scale reduction of one chain split in half."""
    x = np.asarray(x, float)
    half = x.size // 2
    if half < 2:
        return np.nan
    chains = np.stack([x[:half], x[half:2 * half]])
    W = chains.var(axis=1, ddof=1).mean()
    B = half * chains.mean(axis=1).var(ddof=1)
    if W == 0:
        return 1.0 if B == 0 else np.inf
    var_plus = (half - 1) / half * W + B / half
    return float(np.sqrt(var_plus / W))


def ks_two_sample(independent, dependent):
    """Two-sample KS test where the second sample is a Markov chain.

    The statistic is the usual one; the asymptotic p-value uses the chain's
    effective sample size in place of its length.  Returns
    ``(statistic, p_value, ess)``.
    """
    a = np.asarray(independent, float)
    b = np.asarray(dependent, float)
    stat = stats.ks_2samp(a, b).statistic
    ess = effective_sample_size(b)
    n_eff = a.size * ess / (a.size + ess)
    p = float(stats.kstwobign.sf(stat * np.sqrt(n_eff)))
    return float(stat), p, ess
