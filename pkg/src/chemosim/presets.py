"""Preset coefficients, data and force laws with analytically declared constants.

Every preset states its regularity constants (Hoelder constant, Gaussian
weight, linear-growth bound, Lipschitz constants) explicitly; the
verification module re-checks them by sampling.  All data callables are
vectorized over stacked points of shape (..., N).
"""

from __future__ import annotations

import numpy as np

from .scenario import (
    ForceLaw,
    GrowthSpec,
    OperatorCoefficients,
    Scenario,
    ScenarioError,
    make_scenario,
)

_ANISOTROPIC_DIAG = (0.5, 2.0, 1.25)


def coefficient_preset(name: str, dimension: int, alpha: float = 0.5) -> OperatorCoefficients:
    if name == "heat":
        eye = np.eye(dimension)
        zero_b = np.zeros(dimension)
        return OperatorCoefficients(
            dimension=dimension,
            a=lambda x, t: eye,
            b=lambda x, t: zero_b,
            c=lambda x, t: 0.0,
            is_constant=True,
            holder_exponent=alpha,
            holder_constants={"a": (0.0, 0.0), "b": (0.0, 0.0), "c": (0.0, 0.0)},
        )
    if name == "anisotropic-constant":
        diag = np.diag(_ANISOTROPIC_DIAG[:dimension])
        zero_b = np.zeros(dimension)
        return OperatorCoefficients(
            dimension=dimension,
            a=lambda x, t: diag,
            b=lambda x, t: zero_b,
            c=lambda x, t: 0.0,
            is_constant=True,
            holder_exponent=alpha,
            holder_constants={"a": (0.0, 0.0), "b": (0.0, 0.0), "c": (0.0, 0.0)},
        )
    if name == "variable-sine":
        eye = np.eye(dimension)
        zero_b = np.zeros(dimension)

        def a_fn(x, t):
            x = np.asarray(x, dtype=float)
            return (1.0 + 0.5 * np.sin(x[..., 0])) * eye

        return OperatorCoefficients(
            dimension=dimension,
            a=a_fn,
            b=lambda x, t: zero_b,
            c=lambda x, t: 0.0,
            is_constant=False,
            holder_exponent=alpha,
            holder_constants={"a": (1.0, 0.0), "b": (0.0, 0.0), "c": (0.0, 0.0)},
        )
    raise ScenarioError(f"unknown coefficient preset {name!r}")


def inline_coefficients(a, b=None, c: float = 0.0, alpha: float = 0.5) -> OperatorCoefficients:
    """Constant coefficients from explicit arrays."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    dimension = a.shape[0]
    b = np.zeros(dimension) if b is None else np.asarray(b, dtype=float)
    c = float(c)
    return OperatorCoefficients(
        dimension=dimension,
        a=lambda x, t: a,
        b=lambda x, t: b,
        c=lambda x, t: c,
        is_constant=True,
        holder_exponent=alpha,
        holder_constants={"a": (0.0, 0.0), "b": (0.0, 0.0), "c": (0.0, 0.0)},
    )


def phi_preset(name: str):
    """Initial datum callable plus its declared (H, C, M) constants."""
    if name == "zero":
        def zero_phi(x):
            return np.zeros(np.asarray(x).shape[:-1])
        zero_phi.is_zero = True  # lets evaluators skip the initial-datum quadrature
        return zero_phi, 0.0, 0.0, 0.0
    if name == "gaussian":
        def gaussian(x):
            x = np.asarray(x, dtype=float)
            return np.exp(-np.sum(x * x, axis=-1))
        # |grad| <= sqrt(2) e^{-1/2} < 1 and |phi| <= 1, so H = 1 at alpha = 1/2
        return gaussian, 1.0, 0.0, 1.0
    if name == "abs-sqrt":
        def abs_sqrt(x):
            x = np.asarray(x, dtype=float)
            return np.sqrt(np.linalg.norm(x, axis=-1))
        # | |x|^(1/2) - |y|^(1/2) | <= |x - y|^(1/2)
        return abs_sqrt, 1.0, 0.0, 1.0
    raise ScenarioError(f"unknown phi preset {name!r}")


def g_preset(name: str, n_agents: int, value: float = 1.0):
    """Source callable g(x, X) plus declared (HR, C, M).  Positive g depletes
    the signal; the agent-secretion preset is therefore negative."""
    if name == "zero":
        def zero_g(x, X):
            return np.zeros(np.asarray(x).shape[:-1])
        zero_g.is_zero = True  # lets evaluators skip the source quadrature
        return zero_g, (lambda r: 0.0), 0.0, 0.0
    if name == "constant":
        def const(x, X):
            return np.full(np.asarray(x).shape[:-1], value)
        return const, (lambda r: 0.0), 0.0, abs(value)
    if name == "agent-secretion":
        def secretion(x, X):
            x = np.asarray(x, dtype=float)
            # X has shape (N, n); broadcast each agent against stacked x
            diffs = x[..., None] - X  # (..., N, n)
            return -np.exp(-np.sum(diffs * diffs, axis=-2)).sum(axis=-1)
        return secretion, (lambda r: float(n_agents)), 0.0, float(n_agents)
    raise ScenarioError(f"unknown g preset {name!r}")


def force_preset(name: str, chi: float = 1.0, kappa_v: float = 1.0) -> ForceLaw:
    if name == "zero":
        def zero_force(t, X, V, w, i):
            return np.zeros(X.shape[0])
        return ForceLaw(eval=zero_force, lipschitz_w=0.0,
                        lipschitz_xv=lambda r: 0.0, lipschitz_global=0.0)
    if name == "pure-chemotaxis":
        def pure(t, X, V, w, i):
            return chi * np.asarray(w, dtype=float)
        return ForceLaw(eval=pure, lipschitz_w=chi,
                        lipschitz_xv=lambda r: 0.0, lipschitz_global=chi)
    if name == "damped-chemotaxis":
        def damped(t, X, V, w, i):
            return -kappa_v * V[:, i] + chi * np.asarray(w, dtype=float)
        return ForceLaw(eval=damped, lipschitz_w=chi,
                        lipschitz_xv=lambda r: kappa_v,
                        lipschitz_global=max(chi, kappa_v))
    if name == "saturating-chemotaxis":
        def saturating(t, X, V, w, i):
            w = np.asarray(w, dtype=float)
            return chi * w / (1.0 + np.linalg.norm(w))
        # Jacobian norm of w -> w/(1+|w|) is (1+2|w|)/(1+|w|)^2 <= 1
        return ForceLaw(eval=saturating, lipschitz_w=chi,
                        lipschitz_xv=lambda r: 0.0, lipschitz_global=chi)
    raise ScenarioError(f"unknown force preset {name!r}")


def preset_catalog() -> dict[str, tuple[str, ...]]:
    """Names of the built-in presets, by kind."""
    return {
        "coefficients": ("heat", "anisotropic-constant", "variable-sine"),
        "phi": ("zero", "gaussian", "abs-sqrt"),
        "g": ("zero", "constant", "agent-secretion"),
        "force": ("zero", "pure-chemotaxis", "damped-chemotaxis", "saturating-chemotaxis"),
    }


def _force_from_config(spec) -> ForceLaw:
    if isinstance(spec, str):
        return force_preset(spec)
    params = {k: v for k, v in spec.items() if k != "name"}
    return force_preset(spec["name"], **params)


def _g_from_config(spec, n_agents: int):
    if isinstance(spec, str):
        return g_preset(spec, n_agents)
    params = {k: v for k, v in spec.items() if k != "name"}
    return g_preset(spec["name"], n_agents, **params)


def scenario_from_config(config: dict) -> Scenario:
    """Assemble and validate a Scenario from a parsed config mapping."""
    try:
        dimension = int(config["dimension"])
        horizon = float(config["horizon"])
        X0 = np.asarray(config["X0"], dtype=float)
        V0 = np.asarray(config["V0"], dtype=float)
    except KeyError as exc:
        raise ScenarioError(f"config missing required key {exc.args[0]!r}") from None
    alpha = float(config.get("alpha", 0.5))

    coeff_spec = config.get("coefficients", "heat")
    if isinstance(coeff_spec, str):
        coeffs = coefficient_preset(coeff_spec, dimension, alpha)
    else:
        coeffs = inline_coefficients(coeff_spec["a"], coeff_spec.get("b"),
                                     coeff_spec.get("c", 0.0), alpha)
        if coeffs.dimension != dimension:
            raise ScenarioError("inline coefficient dimension does not match config dimension")

    X0 = np.atleast_2d(X0)
    n_agents = X0.shape[1]
    phi, h_phi, c_phi, m_phi = phi_preset(config.get("phi", "zero"))
    g, hr, c_g, m_g = _g_from_config(config.get("g", "zero"), n_agents)
    force = _force_from_config(config.get("force", "zero"))

    overrides = config.get("growth", {})
    growth = GrowthSpec(
        C=float(overrides.get("C", max(c_phi, c_g))),
        H=float(overrides.get("H", h_phi)),
        HR=hr,
        M=float(overrides.get("M", max(m_phi, m_g))),
        T=horizon,
    )
    return make_scenario(
        coeffs, phi, g, force, X0, V0, growth,
        R=float(config.get("R", 1.0)),
        nonlocal_delta=(float(config["delta"]) if config.get("delta") is not None else None),
        name=str(config.get("name", "scenario")),
    )
