"""Energy functions of the learning dynamics and their structure check.

Every variant has the same shape: a kinetic sum of conjugates of the
tracked motions plus a potential built from the motions reconstructed out
of the positions,

    H = sum_i h_i*(y_i)  -  sigma * sum_j h_j*(y_j(0) + sum_i A[j, i] X_i).

For two-agent and bipartite games the two sums run over the two sides; for
the network variant both run over all agents, which double counts the
zero-sum energy (H = 2 sum h*) and cancels identically for coordination
networks.  Affine (generalized) games add linear correction terms in X.

For the affine variants the display that makes Hamilton's equations hold
instant by instant and the quantity that is conserved along trajectories
differ by a multiple of sum b[i, j] . X_i: the canonical reading carries
explicit time dependence through the b t drift inside the conjugate, so
its partial time derivative, not the flow, accounts for the energy change.
The energy_* functions below return the conserved reading; the structure
check differentiates the canonical one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import SystemState, reconstructed_motion, vector_field
from .games import GeneralizedGame, NetworkGame, bipartite_partition
from .regularizers import choice_map, conjugate_value

VARIANTS = (
    "two_agent",
    "bipartite",
    "network",
    "generalized",
    "generalized_bipartite",
)


@dataclass(frozen=True)
class EnergyReading:
    variant: str
    value: float | np.ndarray
    kinetic: float | np.ndarray
    potential: float | np.ndarray
    correction: float | np.ndarray = 0.0


def _require_sigma(game: NetworkGame):
    if game.sigma not in (-1, 1):
        raise ValueError("energy undefined: game has no sigma tag (general game)")


def _kinetic(regs, ys, agents):
    return sum(conjugate_value(regs[i], ys[i]) for i in agents)


def energy_two_agent(state: SystemState, game: NetworkGame, regs) -> EnergyReading:
    """h_1*(y_1) - sigma h_2*(y_2(0) + A[2, 1] X_1) for a two-agent game."""
    _require_sigma(game)
    if game.n != 2:
        raise ValueError("two-agent energy needs exactly two agents")
    z2 = state.y0[1] + state.X[0] @ game.matrix(1, 0).T
    kin = conjugate_value(regs[0], state.y[0])
    pot = -game.sigma * conjugate_value(regs[1], z2)
    return EnergyReading("two_agent", kin + pot, kin, pot)


def _check_partition(game: NetworkGame, partition):
    side_one, side_two = tuple(partition[0]), tuple(partition[1])
    if sorted(side_one + side_two) != list(range(game.n)):
        raise ValueError("partition invalid: must cover every agent exactly once")
    for side in (set(side_one), set(side_two)):
        for (i, j), a in game.payoffs.items():
            if i in side and j in side and np.any(a):
                raise ValueError(f"partition invalid: nonzero edge ({i}, {j}) inside a side")
    return side_one, side_two


def energy_bipartite(state: SystemState, game: NetworkGame, partition, regs) -> EnergyReading:
    """One side's conjugates plus the other side's reconstructed potential."""
    _require_sigma(game)
    side_one, side_two = _check_partition(game, partition)
    kin = _kinetic(regs, state.y, side_one)
    pot = 0.0
    for j in side_two:
        z = np.asarray(state.y0[j], dtype=float)
        for i in side_one:
            a = game.payoffs.get((j, i))
            if a is not None:
                z = z + state.X[i] @ a.T
        pot = pot - game.sigma * conjugate_value(regs[j], z)
    return EnergyReading("bipartite", kin + pot, kin, pot)


def energy_network(state: SystemState, game: NetworkGame, regs) -> EnergyReading:
    """All-perspectives energy; equals 2 sum h*(y) on zero-sum games, 0 on coordination."""
    _require_sigma(game)
    agents = range(game.n)
    kin = _kinetic(regs, state.y, agents)
    zs = reconstructed_motion(game, regs, state.y0, state.X, state.t)
    pot = -game.sigma * sum(conjugate_value(regs[j], zs[j]) for j in agents)
    return EnergyReading("network", kin + pot, kin, pot)


def _linear_correction(game: GeneralizedGame, X, agents_i, agents_j):
    total = 0.0
    for i in agents_i:
        for j in agents_j:
            if j == i:
                continue
            bv = game.b.get((i, j))
            if bv is not None:
                total = total + np.sum(bv * X[i], axis=-1)
    return total


def energy_generalized(state: SystemState, game: GeneralizedGame, regs) -> EnergyReading:
    """Network energy of an affine game, with the conserved drift correction.

    The reconstructed motions include the accumulated drift b t, and the
    linear correction enters with weight (1 - sigma): that weight is what
    makes the time derivative vanish along the flow (the zero-sum case
    needs the correction twice, the coordination case collapses to zero
    exactly as the plain network energy does).
    """
    if not isinstance(game, GeneralizedGame):
        raise ValueError("generalized energy needs a generalized game")
    agents = range(game.n)
    kin = _kinetic(regs, state.y, agents)
    zs = reconstructed_motion(game, regs, state.y0, state.X, state.t)
    pot = -game.sigma * sum(conjugate_value(regs[j], zs[j]) for j in agents)
    corr = -(1 - game.sigma) * _linear_correction(game, state.X, agents, agents)
    return EnergyReading("generalized", kin + pot + corr, kin, pot, corr)


def energy_generalized_bipartite(
    state: SystemState, game: GeneralizedGame, partition, regs
) -> EnergyReading:
    """One-sided affine energy, conserved for both sigma on bipartite games.

    Both sides' drift corrections are needed: the first side's with weight
    one, the second side's with weight -sigma.
    """
    if not isinstance(game, GeneralizedGame):
        raise ValueError("generalized energy needs a generalized game")
    side_one, side_two = _check_partition(game, partition)
    kin = _kinetic(regs, state.y, side_one)
    pot = 0.0
    for j in side_two:
        z = np.asarray(state.y0[j], dtype=float)
        for i in side_one:
            a = game.payoffs.get((j, i))
            if a is not None:
                z = z + state.X[i] @ a.T
            bv = game.b.get((j, i))
            if bv is not None:
                z = z + bv * state.t
        pot = pot - game.sigma * conjugate_value(regs[j], z)
    corr = -_linear_correction(game, state.X, side_one, side_two)
    corr = corr + game.sigma * _linear_correction(game, state.X, side_two, side_one)
    return EnergyReading("generalized_bipartite", kin + pot + corr, kin, pot, corr)


def select_energy(game: NetworkGame, regs, mode: str = "auto"):
    """Pick the instrument energy for a trajectory: (callable, variant name).

    Zero-sum games use the network energy; coordination games fall back to
    the one-sided variant when a bipartition exists, because their network
    energy is identically zero.  Games without a sigma tag have no energy.
    """
    if mode == "none":
        return None, None
    if mode == "auto":
        if game.sigma not in (-1, 1):
            return None, None
        if isinstance(game, GeneralizedGame):
            mode = "generalized"
            if game.sigma == 1:
                part = bipartite_partition(game)
                if part is not None:
                    mode = "generalized_bipartite"
        elif game.sigma == 1:
            part = bipartite_partition(game)
            mode = "bipartite" if part is not None else "network"
        else:
            mode = "network"
    if mode == "two_agent":
        return (lambda s: energy_two_agent(s, game, regs)), mode
    if mode == "network":
        return (lambda s: energy_network(s, game, regs)), mode
    if mode == "generalized":
        return (lambda s: energy_generalized(s, game, regs)), mode
    if mode in ("bipartite", "generalized_bipartite"):
        part = bipartite_partition(game)
        if part is None:
            raise ValueError("bipartite energy requested for a non-bipartite game")
        if mode == "bipartite":
            return (lambda s: energy_bipartite(s, game, part, regs)), mode
        return (lambda s: energy_generalized_bipartite(s, game, part, regs)), mode
    raise ValueError(f"unknown energy variant {mode!r}")


# ---------------------------------------------------------------------------
# Hamilton-structure verification by central finite differences


@dataclass(frozen=True)
class StructureReport:
    variant: str
    residual_position: float  # max | dH/dy - dX/dt |
    residual_motion: float  # max | dH/dX + dy/dt |

    @property
    def max_residual(self) -> float:
        return max(self.residual_position, self.residual_motion)


def _canonical_energy(state, game, regs, variant, partition):
    """The reading whose partial derivatives are the instantaneous field.

    For plain games this is the conserved energy itself.  For affine games
    the drift correction enters exactly once per side, which restores
    Hamilton's equations at the price of explicit time dependence.
    """
    if variant == "two_agent":
        return energy_two_agent(state, game, regs).value
    if variant == "bipartite":
        return energy_bipartite(state, game, partition, regs).value
    if variant == "network":
        return energy_network(state, game, regs).value
    if variant == "generalized":
        agents = range(game.n)
        kin = _kinetic(regs, state.y, agents)
        zs = reconstructed_motion(game, regs, state.y0, state.X, state.t)
        pot = -game.sigma * sum(conjugate_value(regs[j], zs[j]) for j in agents)
        corr = -_linear_correction(game, state.X, agents, agents)
        return kin + pot + corr
    if variant == "generalized_bipartite":
        side_one, side_two = partition
        kin = _kinetic(regs, state.y, side_one)
        pot = 0.0
        for j in side_two:
            z = np.asarray(state.y0[j], dtype=float)
            for i in side_one:
                a = game.payoffs.get((j, i))
                if a is not None:
                    z = z + state.X[i] @ a.T
                bv = game.b.get((j, i))
                if bv is not None:
                    z = z + bv * state.t
            pot = pot - game.sigma * conjugate_value(regs[j], z)
        corr = -_linear_correction(game, state.X, side_one, side_two)
        return kin + pot + corr
    raise ValueError(f"unknown variant {variant!r}")


def verify_hamiltonian_structure(
    state: SystemState,
    game: NetworkGame,
    regs,
    variant: str = "auto",
    fd_step: float = 1e-6,
) -> StructureReport:
    """Check dH/dy = dX/dt and -dH/dX = dy/dt by central differences.

    The check runs at the given state, which must be consistent (its
    motions equal to the reconstruction from its positions): only there do
    the two sides of the equations refer to the same strategies.  Entropy
    strategies too close to the boundary are rejected, since the conjugate
    gradients then change too fast across the differencing stencil.
    """
    _require_sigma(game)
    if state.y[0].ndim > 1:
        raise ValueError("structure check runs on single states, not batches")
    partition = None
    if variant == "auto":
        if isinstance(game, GeneralizedGame):
            variant = "generalized"
            if game.sigma == 1:
                partition = bipartite_partition(game)
                if partition is not None:
                    variant = "generalized_bipartite"
        elif game.sigma == -1:
            variant = "network"
        else:
            partition = bipartite_partition(game)
            if partition is None:
                raise ValueError(
                    "coordination network without bipartition has an identically "
                    "zero energy; no structure check is defined there"
                )
            variant = "bipartite"
    if variant in ("bipartite", "generalized_bipartite") and partition is None:
        partition = bipartite_partition(game)
        if partition is None:
            raise ValueError("bipartite structure check needs a bipartite game")
    if variant == "two_agent" and game.n != 2:
        raise ValueError("two-agent structure check needs exactly two agents")

    for i, (reg, xv) in enumerate(zip(regs, state.x)):
        if getattr(reg, "kind", None) == "entropy" and np.min(xv) < 1e-8:
            coord = int(np.argmin(xv))
            raise ValueError(
                f"agent {i} coordinate {coord} too close to the boundary "
                "for stable differencing"
            )

    if variant in ("two_agent",):
        tracked = (0,)
    elif variant in ("bipartite", "generalized_bipartite"):
        tracked = tuple(partition[0])
    else:
        tracked = tuple(range(game.n))

    def value(ys, Xs):
        probe = replace(state, y=tuple(ys), X=tuple(Xs))
        return float(_canonical_energy(probe, game, regs, variant, partition))

    dX, dy = vector_field(state, game, regs)
    res_pos = 0.0
    res_mot = 0.0
    ys = [np.array(v, dtype=float) for v in state.y]
    Xs = [np.array(v, dtype=float) for v in state.X]
    for i in tracked:
        for c in range(ys[i].shape[-1]):
            h = fd_step * max(1.0, abs(ys[i][c]))
            ys[i][c] += h
            up = value(ys, Xs)
            ys[i][c] -= 2.0 * h
            down = value(ys, Xs)
            ys[i][c] += h
            res_pos = max(res_pos, abs((up - down) / (2.0 * h) - dX[i][c]))

            h = fd_step * max(1.0, abs(Xs[i][c]))
            Xs[i][c] += h
            up = value(ys, Xs)
            Xs[i][c] -= 2.0 * h
            down = value(ys, Xs)
            Xs[i][c] += h
            res_mot = max(res_mot, abs((up - down) / (2.0 * h) + dy[i][c]))
    return StructureReport(variant, res_pos, res_mot)


def consistent_state(game: NetworkGame, regs, y0, X, t: float = 0.0) -> SystemState:
    """State whose motions are exactly the reconstruction from (y0, X, t).

    Useful for probing the structure equations at arbitrary phase-space
    points without integrating there.
    """
    y0 = tuple(np.asarray(v, dtype=float) for v in y0)
    X = tuple(np.asarray(v, dtype=float) for v in X)
    y = tuple(reconstructed_motion(game, regs, y0, X, t))
    x = tuple(choice_map(reg, v) for reg, v in zip(regs, y))
    return SystemState(t, y, X, x, y0)
