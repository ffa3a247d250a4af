"""Shared scenario builders and independent oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np

from chemosim.presets import (
    coefficient_preset,
    force_preset,
    g_preset,
    phi_preset,
)
from chemosim.scenario import ForceLaw, GrowthSpec, make_scenario


def build(coeff="heat", phi="zero", g="zero", force="zero", dim=1, T=1.0,
          X0=None, V0=None, R=1.0, delta=None, alpha=0.5, name="test",
          g_kwargs=None, force_kwargs=None, M_override=None, C_override=None):
    """Assemble a validated scenario from preset names (or ready-made parts)."""
    coeffs = coefficient_preset(coeff, dim, alpha) if isinstance(coeff, str) else coeff
    if isinstance(phi, str):
        phi_fn, h_phi, c_phi, m_phi = phi_preset(phi)
    else:
        phi_fn, h_phi, c_phi, m_phi = phi
    X0 = np.zeros((dim, 1)) if X0 is None else np.atleast_2d(np.asarray(X0, dtype=float))
    n = X0.shape[1]
    V0 = np.zeros((dim, n)) if V0 is None else np.atleast_2d(np.asarray(V0, dtype=float))
    if isinstance(g, str):
        g_fn, hr, c_g, m_g = g_preset(g, n, **(g_kwargs or {}))
    else:
        g_fn, hr, c_g, m_g = g
    if isinstance(force, str):
        force_law = force_preset(force, **(force_kwargs or {}))
    else:
        force_law = force
    growth = GrowthSpec(C=C_override if C_override is not None else max(c_phi, c_g),
                        H=h_phi, HR=hr,
                        M=M_override if M_override is not None else max(m_phi, m_g),
                        T=T)
    return make_scenario(coeffs, phi_fn, g_fn, force_law, X0, V0, growth,
                         R=R, nonlocal_delta=delta, name=name)


def constant_force_law(fbar) -> ForceLaw:
    fbar = np.asarray(fbar, dtype=float)
    return ForceLaw(eval=lambda t, X, V, w, i: fbar, lipschitz_w=0.0,
                    lipschitz_xv=lambda r: 0.0, lipschitz_global=0.0)


# -- independent oracles -------------------------------------------------------


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-12) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def heat_gaussian_field(x, t, dim):
    """Closed-form evolution of exp(-|x|^2) under the constant unit-diffusion flow."""
    x = np.asarray(x, dtype=float)
    sig = 1.0 + 4.0 * t
    return sig ** (-dim / 2.0) * math.exp(-float(x @ x) / sig)


def heat_gaussian_grad(x, t, dim):
    x = np.asarray(x, dtype=float)
    sig = 1.0 + 4.0 * t
    return -2.0 * x / sig * heat_gaussian_field(x, t, dim)


def heat_gaussian_hess(x, t, dim):
    x = np.asarray(x, dtype=float)
    sig = 1.0 + 4.0 * t
    f = heat_gaussian_field(x, t, dim)
    return (4.0 * np.outer(x, x) / sig**2 - 2.0 * np.eye(dim) / sig) * f


def rk4_second_order(force, x0, v0, t_end, dt):
    """High-order integrator for x'' = force(t, x, v) with (N, n) states."""
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    n_steps = int(round(t_end / dt))
    times = [0.0]
    xs = [x.copy()]
    vs = [v.copy()]
    for k in range(n_steps):
        t = k * dt

        def deriv(xx, vv, tt):
            return vv, force(tt, xx, vv)

        k1x, k1v = deriv(x, v, t)
        k2x, k2v = deriv(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, t + 0.5 * dt)
        k3x, k3v = deriv(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, t + 0.5 * dt)
        k4x, k4v = deriv(x + dt * k3x, v + dt * k3v, t + dt)
        x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        times.append((k + 1) * dt)
        xs.append(x.copy())
        vs.append(v.copy())
    return np.asarray(times), np.asarray(xs), np.asarray(vs)
