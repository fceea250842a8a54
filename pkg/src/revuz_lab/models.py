"""The four concrete symmetric Hunt processes used throughout the package.

Each model carries its open state space, the Lebesgue reference measure
restricted to that space, optional killing data, and closed forms for the
two exit transforms that feed every downstream computation:

* ``phi(model, alpha, x)``       -- Laplace transform of lifetimes ending in a
  *continuous* approach to the cemetery, ``E_x[exp(-alpha zeta); X_{zeta-} = boundary]``.
* ``laplace_lifetime(model, x)`` -- plain ``E_x[exp(-zeta)]``.

Both are exact here by design: the Monte Carlo layers compare against them,
so no numerical fallback is allowed inside this module.

Models
------
``free_bm``       Brownian motion on the whole line; conservative.
``absorbed_bm``   Brownian motion on (0, inf) absorbed at the origin; the
                  only model whose paths reach the cemetery continuously.
``flip_jump``     the pure jump step process that swaps x <-> -x at unit-rate
                  exponential clocks; conservative.
``killed_static`` the motionless process on (0, 1) killed at rate g(x) = 1/x^2;
                  killing jumps straight to the cemetery from inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional


class ExitKind(Enum):
    """How a simulated path left (or did not leave) the state space."""

    ALIVE = "alive"
    KILLED_BY_KAPPA = "killed_by_kappa"
    CONTINUOUS_EXIT = "continuous_exit"


@dataclass(frozen=True)
class ProcessModel:
    """Immutable descriptor of one of the four built-in processes.

    Attributes
    ----------
    name : str
        Registry key, one of ``free_bm``, ``absorbed_bm``, ``flip_jump``,
        ``killed_static``.
    state_space : tuple of float
        Open interval (lo, hi); membership is strict on both ends.
    conservative : bool
        True iff the lifetime is almost surely infinite.
    killing_density : callable or None
        Rate g(x) of the jump to the cemetery, present only for
        ``killed_static``.
    """

    name: str
    state_space: tuple[float, float]
    conservative: bool
    killing_density: Optional[Callable[[float], float]] = None

    def contains(self, x: float) -> bool:
        lo, hi = self.state_space
        return lo < x < hi

    def require_inside(self, x: float) -> None:
        if not self.contains(x):
            raise ValueError(
                f"point {x!r} outside the open state space "
                f"({self.state_space[0]}, {self.state_space[1]}) of {self.name}"
            )

    def __repr__(self) -> str:  # keep reprs short in test output
        return f"ProcessModel({self.name})"


def _killed_static_rate(x: float) -> float:
    return x ** -2.0


FREE_BM = ProcessModel("free_bm", (-math.inf, math.inf), conservative=True)
ABSORBED_BM = ProcessModel("absorbed_bm", (0.0, math.inf), conservative=False)
FLIP_JUMP = ProcessModel("flip_jump", (-math.inf, math.inf), conservative=True)
KILLED_STATIC = ProcessModel(
    "killed_static", (0.0, 1.0), conservative=False,
    killing_density=_killed_static_rate,
)

MODELS: dict[str, ProcessModel] = {
    m.name: m for m in (FREE_BM, ABSORBED_BM, FLIP_JUMP, KILLED_STATIC)
}


def model_by_name(name: str) -> ProcessModel:
    try:
        return MODELS[name]
    except KeyError:
        raise ValueError(
            f"unknown model {name!r}; expected one of {sorted(MODELS)}"
        ) from None


def phi(model: ProcessModel, alpha: float, x: float) -> float:
    """Continuous-exit Laplace transform ``E_x[e^{-alpha zeta}; X_{zeta-} = boundary]``.

    Conservative models never die, and the static model dies by a jump to
    the cemetery (the left limit at the death time is still inside the
    state space), so only the absorbed Brownian motion contributes:
    there ``phi_alpha(x) = exp(-sqrt(2 alpha) x)``, the Laplace transform
    of the first hitting time of the origin.

    Raises
    ------
    ValueError
        If ``alpha <= 0`` or ``x`` lies outside the open state space.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    model.require_inside(x)
    if model.name == "absorbed_bm":
        return math.exp(-math.sqrt(2.0 * alpha) * x)
    return 0.0


def laplace_lifetime(model: ProcessModel, x: float) -> float:
    """Plain lifetime transform ``E_x[e^{-zeta}]``, exact for every model.

    * conservative models: 0 (the lifetime is infinite);
    * ``killed_static``: the lifetime is exponential with rate g(x), so the
      transform is g/(1+g) = 1/(1+x^2);
    * ``absorbed_bm``: ``exp(-sqrt(2) x)``.
    """
    model.require_inside(x)
    if model.conservative:
        return 0.0
    if model.name == "killed_static":
        return 1.0 / (1.0 + x * x)
    return math.exp(-math.sqrt(2.0) * x)


@dataclass(frozen=True)
class AssumptionReport:
    """Result of the no-immediate-killing check on a compact set."""

    holds: bool
    c_k: float


def assumption_check(
    model: ProcessModel, window: tuple[float, float], grid_points: int = 4097
) -> AssumptionReport:
    """Check sup_{x in K} E_x[e^{-zeta}] < 1 on a compact subinterval K.

    The supremum is taken over a dense grid (the transforms are smooth and
    monotone for the built-in models, so a grid maximum is exact to grid
    resolution; endpoints are always included).
    """
    lo, hi = window
    if not (lo <= hi):
        raise ValueError(f"empty window {window!r}")
    slo, shi = model.state_space
    if not (slo < lo and hi < shi):
        raise ValueError(
            f"window {window!r} is not a compact subset of the open state "
            f"space ({slo}, {shi}) of {model.name}"
        )
    if model.conservative:
        return AssumptionReport(holds=True, c_k=0.0)
    step = (hi - lo) / (grid_points - 1) if grid_points > 1 else 0.0
    c_k = max(
        laplace_lifetime(model, lo + i * step) for i in range(grid_points)
    ) if step > 0 else laplace_lifetime(model, lo)
    return AssumptionReport(holds=c_k < 1.0, c_k=c_k)
