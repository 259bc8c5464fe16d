"""Independent reference implementations shared by the unit and acceptance suites."""

import itertools
import math

import numpy as np

from contention_ppo.neural import backward_through_time


def direct_sum_targets(rewards, v_con, v_eos, gamma, lam):
    """Targets as explicit weighted sums over the interleaved EOS, CON, EOS, ... chain."""
    L = len(rewards)
    half = gamma**0.5
    chain_v, chain_d = [], []
    for n in range(L):
        succ = v_eos[n + 1] if n + 1 < L else 0.0
        chain_v += [v_eos[n], v_con[n]]
        chain_d += [half * v_con[n] - v_eos[n], rewards[n] + half * succ - v_con[n]]
    w = half * lam
    targets = []
    for p in range(2 * L):
        targets.append(chain_v[p] + sum(w ** (q - p) * chain_d[q] for q in range(p, 2 * L)))
    t = np.array(targets)
    return t[1::2], t[0::2]


def pf_value(a, x_bar, g, net):
    p, noise = net.tx_power_mw, net.ue_noise_mw
    n = len(a)
    return sum(
        math.log2(1 + p * g[j][j] / (sum(p * g[k][j] for k in range(n) if k != j and a[k]) + noise)) / x_bar[j]
        for j in range(n)
        if a[j]
    )


def pf_oracle(x_bar, g, net):
    """Exhaustive enumeration with scalar SINR arithmetic; returns (best value, best action)."""
    best, best_a = -1.0, None
    for a in itertools.product((0, 1), repeat=len(x_bar)):
        total = pf_value(a, x_bar, g, net)
        if total > best:
            best, best_a = total, a
    return best, best_a


def layer_fd_error(net, xs, dout, h=1e-5):
    """Worst relative error between BPTT and central differences of sum(dout * output)."""
    analytic = backward_through_time(net, xs, dout)
    worst = 0.0
    for name, p in net.params.items():
        flat = p.reshape(-1)
        for k in range(flat.size):
            old = flat[k]
            flat[k] = old + h
            up = float(np.sum(dout * net.forward(xs)[0]))
            flat[k] = old - h
            dn = float(np.sum(dout * net.forward(xs)[0]))
            flat[k] = old
            num = (up - dn) / (2 * h)
            a = analytic[name].reshape(-1)[k]
            worst = max(worst, abs(a - num) / max(abs(a), abs(num), 1e-6))
    return worst
