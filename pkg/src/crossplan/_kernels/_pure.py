"""Pure-NumPy implementations of the hot evaluation kernels.

The compiled backend in ``_core.pyx`` mirrors these functions; both are
interchangeable and selected in ``crossplan._kernels``.
"""
from __future__ import annotations

import numpy as np

_EXP_CLIP = 60.0


def snake_velocity(n, ds, v0, a0, vp, lag, offset, s_l):
    """Piecewise-linear ramp profile with pinned knots and lag blending.

    Knots sit at ``k*s_l - offset`` with end velocities ``vp``; knots whose
    time already passed are dropped. The last value is held to the horizon.
    On [0, lag] the current acceleration is extrapolated additively.
    """
    s = np.arange(n) * ds
    xp = [0.0]
    fp = [v0]
    for k in range(4):
        t = (k + 1) * s_l - offset
        if t > 0.0:
            xp.append(t)
            fp.append(vp[k])
    v = np.interp(s, xp, fp)
    if lag > 0.0:
        m = s <= lag
        v[m] += (lag - s[m]) * a0
    return v


def gaussian_smooth(v, ds, sigma):
    """Convolve with a zero-mean Gaussian truncated at 4 sigma, renormalized;
    edges are handled by replication."""
    v = np.asarray(v, dtype=float)
    h = int(np.ceil(4.0 * sigma / ds)) if sigma > 0.0 else 0
    if h == 0:
        return v.copy()
    k = np.arange(-h, h + 1) * ds
    w = np.exp(-0.5 * (k / sigma) ** 2)
    w /= w.sum()
    padded = np.concatenate([np.full(h, v[0]), v, np.full(h, v[-1])])
    return np.convolve(padded, w, mode="valid")


def derivative(v, ds):
    """Central differences with one-sided first-order ends."""
    return np.gradient(np.asarray(v, dtype=float), ds)


def cumtrapz(y, ds):
    """Cumulative trapezoidal integral starting at 0."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum(0.5 * ds * (y[1:] + y[:-1]), out=out[1:])
    return out


def path_state(l, step, xs, ys, headings, kappas):
    """Linear interpolation of uniform-arc path tables at positions ``l``."""
    m = len(xs)
    idx = np.clip(np.asarray(l, dtype=float) / step, 0.0, m - 1.0)
    i0 = np.minimum(idx.astype(np.intp), m - 2)
    f = idx - i0
    x = xs[i0] + (xs[i0 + 1] - xs[i0]) * f
    y = ys[i0] + (ys[i0 + 1] - ys[i0]) * f
    hh = headings[i0] + (headings[i0 + 1] - headings[i0]) * f
    kk = kappas[i0] + (kappas[i0 + 1] - kappas[i0]) * f
    return x, y, hh, kk


def evaluate_profile(v, ds, l0,
                     path_step, px, py, ph, pk,
                     mass_ego,
                     ox, oy, ovx, ovy, ol, alpha, omass,
                     ext_sum, has_zone, exit_ego, exit_other,
                     tau0, tau_max_inv, sig0, sig_growth,
                     ay_max, sig_ay, d0,
                     bt, bd, bc, bj, v_des, dev_sign):
    """Risk/utility/comfort triple for one ego velocity profile.

    Other agents enter through precomputed per-sample position/velocity
    tables plus awareness factors and interaction-zone exits used for the
    no-crash-possible damage mask.
    """
    v = np.asarray(v, dtype=float)
    n = len(v)
    s = np.arange(n) * ds

    a = np.gradient(v, ds)
    r = np.gradient(a, ds)
    l = l0 + cumtrapz(v, ds)
    np.clip(l, 0.0, path_step * (len(px) - 1), out=l)
    x, y, hh, kk = path_state(l, path_step, px, py, ph, pk)
    vx = v * np.cos(hh)
    vy = v * np.sin(hh)

    ay = v * v * np.abs(kk)
    z = np.clip((ay - ay_max) / sig_ay, -_EXP_CLIP, _EXP_CLIP)
    rate_curv = tau_max_inv / (1.0 + np.exp(-z))
    d_curv = d0 + 0.5 * mass_ego * v * v

    total_rate = tau0 + rate_curv
    risk_num = rate_curv * d_curv
    sig_tot = sig0 + sig_growth * s
    for j in range(len(omass)):
        gap = np.maximum(np.hypot(ox[j] - x, oy[j] - y) - ext_sum[j], 0.0)
        rate_j = tau_max_inv * np.exp(-0.5 * (gap / sig_tot) ** 2) * alpha[j]
        mu = mass_ego * omass[j] / (2.0 * (mass_ego + omass[j]))
        dmg = d0 + mu * ((ovx[j] - vx) ** 2 + (ovy[j] - vy) ** 2)
        if not has_zone[j]:
            dmg = np.zeros(n)
        else:
            dmg = np.where((l > exit_ego[j]) & (ol[j] > exit_other[j]), 0.0, dmg)
        total_rate = total_rate + rate_j
        risk_num = risk_num + rate_j * dmg

    surv = np.exp(-cumtrapz(total_rate, ds))
    w = np.full(n, ds)
    w[0] = w[-1] = 0.5 * ds

    risk = float(np.sum(w * risk_num * surv))
    util = float(np.sum(w * (bt * np.abs(v) + dev_sign * bd * np.abs(v - v_des)) * surv))
    comf = -float(np.sum(w * (bc * np.abs(a) + bj * np.abs(r)) * surv))
    return risk, util, comf
