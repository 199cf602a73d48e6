"""Phase-space evolution of regularized-leader dynamics.

The state of the system is, per agent, the cumulative payoff vector y_i
(the motion), the cumulative strategy X_i = integral of x_i (the position),
and the current strategy x_i, which is never integrated: it is recomputed
from y_i through the choice map at every step.  The continuous field is

    dX_i/dt = x_i = grad h_i*(y_i)
    dy_i/dt = sum_{j != i} A[i, j] x_j            (+ b[i, j] terms, affine games)

Three steppers are provided.  The explicit Euler step IS the discrete-time
update of the learning rule and is deliberately left first-order; rk4 is
the high-fidelity reference for the continuous flow; the leapfrog splits
the conserved energy into a y-part and an X-part and alternates exact
shears, which keeps long-run energy error bounded and every step exactly
reversible.

All steppers broadcast over leading batch axes of y, so a cloud of initial
conditions evolves as one vectorized trajectory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .fileio import game_fingerprint
from .games import GeneralizedGame, NetworkGame
from .regularizers import choice_map

SCHEMES = ("euler", "rk4", "symplectic_leapfrog")
SCHEME_ALIASES = {"leapfrog": "symplectic_leapfrog"}

BLOW_UP_LIMIT = 1e12


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str
    eta: float = 1e-3
    horizon: float = 10.0
    stride: int = 10

    def __post_init__(self):
        scheme = SCHEME_ALIASES.get(self.scheme, self.scheme)
        object.__setattr__(self, "scheme", scheme)
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.eta > 0:
            raise ValueError("step size must be positive")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.stride < 1:
            raise ValueError("snapshot stride must be a positive integer")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.eta))


@dataclass(frozen=True)
class SystemState:
    """Phase-space point: time, motions y, positions X, strategies x.

    x is derived (x_i = choice map of y_i) and y0 is the fixed initial
    motion, carried along because the energy functions reconstruct the
    opponents' motions as y0 + A X.
    """

    t: float
    y: tuple[np.ndarray, ...]
    X: tuple[np.ndarray, ...]
    x: tuple[np.ndarray, ...]
    y0: tuple[np.ndarray, ...]


def initial_state(regs, y0) -> SystemState:
    y0 = tuple(np.asarray(v, dtype=float) for v in y0)
    for reg, v in zip(regs, y0):
        if v.shape[-1] != reg.dim:
            raise ValueError("initial payoff vector does not match the regularizer")
    x = tuple(choice_map(reg, v) for reg, v in zip(regs, y0))
    X = tuple(np.zeros_like(v) for v in y0)
    return SystemState(0.0, y0, X, x, y0)


def _payoff_field(game: NetworkGame, xs):
    """dy_i/dt given current strategies; includes affine b terms if present."""
    affine = isinstance(game, GeneralizedGame)
    payoffs = game.payoffs
    out = []
    for i in range(game.n):
        total = np.zeros_like(xs[i])
        for j in range(game.n):
            if j == i:
                continue
            a = payoffs.get((i, j))
            if a is not None:
                total += xs[j] @ a.T
            if affine:
                bv = game.b.get((i, j))
                if bv is not None:
                    total += bv
        out.append(total)
    return out


def vector_field(state: SystemState, game: NetworkGame, regs):
    """(dX/dt, dy/dt) at the given state."""
    for v in state.y:
        if not np.isfinite(v.sum()):
            raise ValueError("vector field undefined: non-finite payoff vector")
    return tuple(state.x), tuple(_payoff_field(game, state.x))


def step_euler(state: SystemState, game: NetworkGame, regs, eta: float) -> SystemState:
    """One explicit Euler step; this is the discrete-time learning rule.

    X advances with the pre-step strategies, matching the definition of the
    discrete update.  Do not replace with a higher-order scheme: the
    monotone-energy statements are about exactly this map.
    """
    dX, dy = vector_field(state, game, regs)
    y = tuple(v + eta * g for v, g in zip(state.y, dy))
    X = tuple(p + eta * g for p, g in zip(state.X, dX))
    x = tuple(choice_map(reg, v) for reg, v in zip(regs, y))
    return SystemState(state.t + eta, y, X, x, state.y0)


def step_rk4(state: SystemState, game: NetworkGame, regs, eta: float) -> SystemState:
    """Classical fourth-order Runge-Kutta step on the joint (X, y) field.

    The field depends on y only, so each stage evaluates the choice maps
    once and reuses them for both dX and dy; this keeps the linear relation
    y(t) = y0 + sum A X(t) exact to rounding.
    """

    def stage(y):
        xs = [choice_map(reg, v) for reg, v in zip(regs, y)]
        return xs, _payoff_field(game, xs)

    y = state.y
    k1x, k1y = stage(y)
    k2x, k2y = stage([v + 0.5 * eta * g for v, g in zip(y, k1y)])
    k3x, k3y = stage([v + 0.5 * eta * g for v, g in zip(y, k2y)])
    k4x, k4y = stage([v + eta * g for v, g in zip(y, k3y)])
    sixth = eta / 6.0
    new_y = tuple(
        v + sixth * (a + 2.0 * b + 2.0 * c + d)
        for v, a, b, c, d in zip(y, k1y, k2y, k3y, k4y)
    )
    new_X = tuple(
        p + sixth * (a + 2.0 * b + 2.0 * c + d)
        for p, a, b, c, d in zip(state.X, k1x, k2x, k3x, k4x)
    )
    x = tuple(choice_map(reg, v) for reg, v in zip(regs, new_y))
    return SystemState(state.t + eta, new_y, new_X, x, state.y0)


def reconstructed_motion(game: NetworkGame, regs, y0, X, t):
    """y0_j + sum_i A[j, i] X_i (+ b[j, i] t), the position-side motions."""
    affine = isinstance(game, GeneralizedGame)
    out = []
    for j in range(game.n):
        z = np.asarray(y0[j], dtype=float)
        for i in range(game.n):
            if i == j:
                continue
            a = game.payoffs.get((j, i))
            if a is not None:
                z = z + X[i] @ a.T
            if affine:
                bv = game.b.get((j, i))
                if bv is not None:
                    z = z + bv * t
        out.append(z)
    return out


def _kick_force(game, regs, y0, X, t):
    z = reconstructed_motion(game, regs, y0, X, t)
    xs = [choice_map(reg, v) for reg, v in zip(regs, z)]
    return _payoff_field(game, xs)


def step_symplectic(state: SystemState, game: NetworkGame, regs, eta: float) -> SystemState:
    """Kick-drift-kick leapfrog for the separable conserved energy.

    The kick moves y using the force derived from positions alone (the
    motions reconstructed as y0 + A X), the drift moves X using the choice
    map of the updated y.  Each sub-step is a shear, so the composition is
    volume-preserving, time-symmetric and second-order.  Requires a game
    with sigma in {-1, +1}: only then is the kick force a gradient.
    """
    if game.sigma not in (-1, 1):
        raise ValueError("no Hamiltonian structure certified: game has no sigma tag")
    half = 0.5 * eta
    f0 = _kick_force(game, regs, state.y0, state.X, state.t)
    y_half = [v + half * g for v, g in zip(state.y, f0)]
    xs = [choice_map(reg, v) for reg, v in zip(regs, y_half)]
    X = tuple(p + eta * g for p, g in zip(state.X, xs))
    f1 = _kick_force(game, regs, state.y0, X, state.t + eta)
    y = tuple(v + half * g for v, g in zip(y_half, f1))
    x = tuple(choice_map(reg, v) for reg, v in zip(regs, y))
    return SystemState(state.t + eta, y, X, x, state.y0)


STEPPERS = {
    "euler": step_euler,
    "rk4": step_rk4,
    "symplectic_leapfrog": step_symplectic,
}


@dataclass
class Trajectory:
    """Recorded snapshots plus per-snapshot instrument readings.

    energy, fenchel and bregman are arrays aligned with states (NaN where a
    reading is unavailable: no sigma tag, no reference profile, or a
    boundary strategy under an entropy regularizer).
    """

    states: list[SystemState]
    energy: np.ndarray
    fenchel: np.ndarray | None
    bregman: np.ndarray | None
    metadata: dict = dataclass_field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def batched(self) -> bool:
        return self.states[0].y[0].ndim > 1

    def strategy_matrix(self) -> np.ndarray:
        """Snapshots-by-coordinates matrix of the concatenated strategies."""
        if self.batched:
            raise ValueError("strategy matrix is only defined for single trajectories")
        return np.array([np.concatenate(s.x) for s in self.states])

    def energy_drift(self) -> tuple[float, float]:
        """(max |H - H(0)|, relative drift) over the recorded snapshots."""
        h = np.asarray(self.energy, dtype=float)
        if h.size == 0 or np.any(np.isnan(h)):
            return float("nan"), float("nan")
        h0 = h[0]
        drift = float(np.max(np.abs(h - h0)))
        return drift, drift / max(1.0, float(np.max(np.abs(h0))))


def _instrument_factory(game, regs, ref, energy):
    """Build the per-state (H, F, D) readers; import here to avoid a cycle."""
    from . import hamiltonian as _ham
    from .regularizers import bregman_distance, fenchel_coupling

    energy_fn, variant = _ham.select_energy(game, regs, energy)

    def read(state):
        h = energy_fn(state).value if energy_fn is not None else np.nan
        if ref is None:
            return h, np.nan, np.nan
        f = sum(
            fenchel_coupling(reg, xr, yv)
            for reg, xr, yv in zip(regs, ref, state.y)
        )
        try:
            d = sum(
                bregman_distance(reg, xr, xv)
                for reg, xr, xv in zip(regs, ref, state.x)
            )
        except ValueError:  # entropy gradient undefined at a boundary strategy
            d = np.nan
        return h, f, d

    return read, variant


def _blow_up(state: SystemState):
    for v in state.y:
        peak = float(np.abs(v).max())
        if not np.isfinite(peak):
            return "non-finite payoff vector"
        if peak > BLOW_UP_LIMIT:
            return f"|y| exceeded {BLOW_UP_LIMIT:g}"
    return None


def simulate(
    game: NetworkGame,
    regs,
    y0,
    config: IntegratorConfig,
    ref=None,
    energy: str = "auto",
) -> Trajectory:
    """Iterate the configured stepper from (t=0, X=0, y=y0).

    Records every stride-th state (plus the first and last) together with
    instrument readings; deterministic given its inputs.  A non-finite or
    exploding state truncates the trajectory and leaves a diagnostic in the
    metadata instead of raising: discrete-time divergence is expected
    behavior, not an error.
    """
    stepper = STEPPERS[config.scheme]
    state = initial_state(regs, y0)
    ref_components = tuple(ref) if ref is not None else None
    read, variant = _instrument_factory(game, regs, ref_components, energy)

    states, H, F, D = [], [], [], []

    def record(s):
        h, f, d = read(s)
        states.append(s)
        H.append(h)
        F.append(f)
        D.append(d)

    record(state)
    diagnostics = {"truncated": False, "blow_up_step": None, "reason": None}
    n_steps = config.steps
    for i in range(1, n_steps + 1):
        state = stepper(state, game, regs, config.eta)
        reason = _blow_up(state)
        if reason is not None:
            diagnostics.update(truncated=True, blow_up_step=i, reason=reason)
            break
        if i % config.stride == 0 or i == n_steps:
            record(state)

    has_ref = ref_components is not None
    traj = Trajectory(
        states=states,
        energy=np.asarray(H),
        fenchel=np.asarray(F) if has_ref else None,
        bregman=np.asarray(D) if has_ref else None,
        metadata={
            "game_hash": game_fingerprint(game),
            "scheme": config.scheme,
            "eta": config.eta,
            "horizon": config.horizon,
            "stride": config.stride,
            "energy_variant": variant,
            "regularizers": [
                {
                    "kind": getattr(r, "kind", "product"),
                    "domain": getattr(r, "domain", "product"),
                    "dim": r.dim,
                    "scale": getattr(r, "scale", 1.0),
                }
                for r in regs
            ],
            "y0": [np.asarray(v).tolist() for v in y0],
            "ref": [np.asarray(v).tolist() for v in ref_components] if has_ref else None,
            "diagnostics": diagnostics,
        },
    )
    return traj


def sample_payoff_ball(center, radius: float, n: int, seed: int):
    """n initial payoff vectors drawn uniformly from a ball around center.

    Returns one (n, k_i) array per agent; the same seed reproduces the same
    cloud exactly.
    """
    rng = np.random.default_rng(seed)
    center = [np.asarray(v, dtype=float) for v in center]
    dims = [v.shape[-1] for v in center]
    total = sum(dims)
    direction = rng.normal(size=(n, total))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=(n, 1)) ** (1.0 / total)
    points = direction * radii
    out, start = [], 0
    for v, k in zip(center, dims):
        out.append(v[None, :] + points[:, start : start + k])
        start += k
    return tuple(out)


# ---------------------------------------------------------------------------
# trajectory files: CSV of (t, strategies, instruments) plus a JSON sidecar


def csv_columns(game: NetworkGame) -> list[str]:
    cols = ["t"]
    for i, k in enumerate(game.strategy_counts):
        cols.extend(f"x_{i + 1}_{s + 1}" for s in range(k))
    cols.extend(["H", "F", "D"])
    return cols


def _fmt(v: float) -> str:
    if v != v:  # NaN marks an unavailable reading
        return ""
    return format(float(v), ".17g")


def write_trajectory_csv(traj: Trajectory, game: NetworkGame, path):
    if traj.batched:
        raise ValueError("CSV output is defined for single trajectories only")
    xs = traj.strategy_matrix()
    t = traj.times
    H = np.asarray(traj.energy, dtype=float)
    F = traj.fenchel if traj.fenchel is not None else np.full(len(t), np.nan)
    D = traj.bregman if traj.bregman is not None else np.full(len(t), np.nan)
    with open(path, "w") as handle:
        handle.write(",".join(csv_columns(game)) + "\n")
        for row in range(len(t)):
            cells = [_fmt(t[row])]
            cells.extend(_fmt(v) for v in xs[row])
            cells.extend([_fmt(H[row]), _fmt(F[row]), _fmt(D[row])])
            handle.write(",".join(cells) + "\n")


def write_trajectory_metadata(traj: Trajectory, game_hash: str, path):
    meta = dict(traj.metadata)
    meta["game_hash"] = game_hash
    meta["snapshots"] = len(traj.states)
    with open(path, "w") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_trajectory_csv(path):
    """Columns of a trajectory file as arrays (empty cells become NaN)."""
    with open(path) as handle:
        header = handle.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in handle if line.strip()]
    data = np.array(
        [[float(cell) if cell else np.nan for cell in row] for row in rows]
    )
    return header, data
