"""Seeded generators for the three case-study SDP families plus
desk-scale brute-force oracles.

* graph equipartition:  min tr(WX), diag(X) = 1, tr(ones X) = 0, X psd
* sensor localization:  feasibility over Z = [[I, X], [X^T, Y]] with
  squared-distance equalities on the Y block and anchor constraints
* binary MIMO detection:  min tr(LX), diag(X) = 1, -1 <= X <= 1, X psd
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .problem import SdpProblem, SparseRow
from .symmat import SymMatrix, svec

_MAX_BRUTE_MIMO = 16
_MAX_BRUTE_EQUIPARTITION = 14
# Minimum second singular value of the centered anchor cloud; anchor sets
# flatter than this are redrawn so zero-noise scenes stay uniquely
# localizable.
_ANCHOR_SPREAD_MIN = 0.1


# ---------------------------------------------------------------------------
# Instance data


@dataclass
class Graph:
    """Undirected weighted graph with edges (i, j, w), i < j, 0-based."""

    n: int
    edges: list[tuple[int, int, float]]

    def __post_init__(self):
        seen = set()
        for i, j, w in self.edges:
            if not 0 <= i < j < self.n:
                raise ValueError(f"edge ({i}, {j}) invalid for {self.n} vertices")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if not np.isfinite(w):
                raise ValueError(f"non-finite weight on edge ({i}, {j})")
            seen.add((i, j))

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [[i, j, w] for i, j, w in self.edges]}


@dataclass
class SensorScene:
    """Anchors with known positions, sensors with ground-truth positions,
    and the measured squared-distance index sets."""

    d: int
    anchors: np.ndarray
    sensors: np.ndarray
    omega_s: list[tuple[int, int, float]]  # (i, j, distance), i < j
    omega_a: list[tuple[int, int, float]]  # (anchor k, sensor j, distance)

    def __post_init__(self):
        self.anchors = np.asarray(self.anchors, dtype=float)
        self.sensors = np.asarray(self.sensors, dtype=float)
        if self.anchors.shape[1] != self.d or self.sensors.shape[1] != self.d:
            raise ValueError("point dimension mismatch")
        for _, _, w in self.omega_s + self.omega_a:
            if w < 0 or not np.isfinite(w):
                raise ValueError(f"invalid distance {w}")

    @property
    def n_sensors(self) -> int:
        return self.sensors.shape[0]

    @property
    def n_anchors(self) -> int:
        return self.anchors.shape[0]

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "anchors": self.anchors.tolist(),
            "sensors": self.sensors.tolist(),
            "omega_s": [[i, j, w] for i, j, w in self.omega_s],
            "omega_a": [[k, j, w] for k, j, w in self.omega_a],
        }


@dataclass
class MimoInstance:
    """Binary signal detection data y = Hx + noise."""

    n: int
    H: np.ndarray
    y_obs: np.ndarray
    x_true: np.ndarray
    sigma: float

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.y_obs = np.asarray(self.y_obs, dtype=float)
        self.x_true = np.asarray(self.x_true, dtype=float)
        if not (
            np.all(np.isfinite(self.H))
            and np.all(np.isfinite(self.y_obs))
            and np.all(np.isfinite(self.x_true))
        ):
            raise ValueError("non-finite instance data")
        if not np.all(np.abs(self.x_true) == 1.0):
            raise ValueError("x_true must be a sign vector")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "sigma": self.sigma,
            "H": self.H.tolist(),
            "y_obs": self.y_obs.tolist(),
            "x_true": self.x_true.tolist(),
        }


# ---------------------------------------------------------------------------
# Seeded random instances


def random_graph(n: int, edge_prob: float, seed: int) -> Graph:
    """Erdos-Renyi graph with unit weights, deterministic per seed."""
    if n < 2:
        raise ValueError("need at least two vertices")
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(range(n), 2))
    draws = rng.random(len(pairs))
    edges = [(i, j, 1.0) for (i, j), u in zip(pairs, draws) if u < edge_prob]
    return Graph(n=n, edges=edges)


def random_sensor_scene(
    n_sensors: int,
    n_anchors: int,
    seed: int,
    noise: float = 0.0,
    max_range: float | None = None,
    d: int = 2,
) -> SensorScene:
    """Random positions in the unit square with full (or range-limited)
    distance measurements; optional multiplicative distance noise."""
    if d != 2:
        raise ValueError("only d=2 scenes are supported")
    if n_sensors < 1 or n_anchors < 1:
        raise ValueError("need at least one sensor and one anchor")
    rng = np.random.default_rng(seed)
    anchors = rng.random((n_anchors, d))
    if n_anchors >= 3:
        for _ in range(100):
            centered = anchors - anchors.mean(axis=0)
            if np.linalg.svd(centered, compute_uv=False)[1] >= _ANCHOR_SPREAD_MIN:
                break
            anchors = rng.random((n_anchors, d))
    sensors = rng.random((n_sensors, d))

    def measured(dist: float) -> float:
        w = dist
        if noise > 0.0:
            w = dist * (1.0 + noise * rng.standard_normal())
        return abs(w)

    omega_s = []
    for i, j in itertools.combinations(range(n_sensors), 2):
        dist = float(np.linalg.norm(sensors[i] - sensors[j]))
        if max_range is None or dist <= max_range:
            omega_s.append((i, j, measured(dist)))
    omega_a = []
    for k in range(n_anchors):
        for j in range(n_sensors):
            dist = float(np.linalg.norm(anchors[k] - sensors[j]))
            if max_range is None or dist <= max_range:
                omega_a.append((k, j, measured(dist)))
    return SensorScene(d=d, anchors=anchors, sensors=sensors,
                       omega_s=omega_s, omega_a=omega_a)


def random_mimo_instance(n: int, sigma: float, seed: int) -> MimoInstance:
    """Standard-normal channel, uniform sign vector, Gaussian noise."""
    if n < 1:
        raise ValueError("signal length must be positive")
    if sigma < 0:
        raise ValueError("noise level must be nonnegative")
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((n, n))
    x = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    eps = sigma * rng.standard_normal(n)
    return MimoInstance(n=n, H=H, y_obs=H @ x + eps, x_true=x, sigma=sigma)


# ---------------------------------------------------------------------------
# Graph equipartition


def equipartition_weight_matrix(graph: Graph) -> np.ndarray:
    """Symmetric W with W_ij = W_ji = w_ij / 2, so tr(W xx^T) equals
    sum_{(i,j) in E} w_ij x_i x_j."""
    W = np.zeros((graph.n, graph.n))
    for i, j, w in graph.edges:
        W[i, j] = W[j, i] = 0.5 * w
    return W


def gen_equipartition(graph: Graph) -> SdpProblem:
    """Equipartition relaxation: n diagonal pins plus the all-ones
    constraint tr(ones X) = 0."""
    if not graph.edges:
        raise ValueError("graph has no edges")
    n = graph.n
    rows = [
        SparseRow.from_matrix_entries(n, [(i, i, 1.0)]) for i in range(n)
    ]
    ones_entries = [(i, j, 1.0) for i in range(n) for j in range(i, n)]
    rows.append(SparseRow.from_matrix_entries(n, ones_entries))
    b = np.concatenate([np.ones(n), [0.0]])
    return SdpProblem(
        n=n,
        C=SymMatrix(n, svec(equipartition_weight_matrix(graph))),
        A=rows,
        b=b,
        name=f"equipartition_n{n}",
    )


def brute_force_equipartition(graph: Graph) -> tuple[np.ndarray, float]:
    """Exhaustive minimum of tr(W xx^T) over balanced sign vectors."""
    n = graph.n
    if n % 2 != 0:
        raise ValueError("equipartition needs an even vertex count")
    if n > _MAX_BRUTE_EQUIPARTITION:
        raise ValueError(f"brute force capped at n={_MAX_BRUTE_EQUIPARTITION}")
    W = equipartition_weight_matrix(graph)
    best_x, best_obj = None, np.inf
    for plus in itertools.combinations(range(n), n // 2):
        x = -np.ones(n)
        x[list(plus)] = 1.0
        obj = float(x @ W @ x)
        if obj < best_obj:
            best_x, best_obj = x, obj
    return best_x, best_obj


def lift_equipartition(x: np.ndarray) -> SymMatrix:
    """Rank-one feasible lift xx^T of a balanced sign vector."""
    x = np.asarray(x, dtype=float)
    return SymMatrix.from_dense(np.outer(x, x))


# ---------------------------------------------------------------------------
# Sensor network localization


def gen_sensor_localization(
    scene: SensorScene, objective: str = "feasibility"
) -> SdpProblem:
    """Localization SDP over Z = [[I_d, X], [X^T, Y]] of dimension d + n.

    Equalities: d(d+1)/2 pins of the top-left block to the identity, one
    row per sensor-sensor pair (Y_ii + Y_jj - 2 Y_ij = w^2) and one per
    anchor-sensor pair using the rank-one matrix [a_k; -e_j][a_k; -e_j]^T.
    ``objective`` is "feasibility" (C = 0) or "trace_y" (minimize tr(Y)).
    """
    if scene.d != 2:
        raise ValueError("only d=2 scenes are supported")
    if not scene.omega_s and not scene.omega_a:
        raise ValueError("scene has no distance measurements")
    d, ns = scene.d, scene.n_sensors
    nz = d + ns
    rows, rhs = [], []
    for a in range(d):
        for bidx in range(a, d):
            value = 1.0 if a == bidx else 0.5
            rows.append(SparseRow.from_matrix_entries(nz, [(a, bidx, value)]))
            rhs.append(1.0 if a == bidx else 0.0)
    for i, j, w in scene.omega_s:
        entries = [
            (d + i, d + i, 1.0),
            (d + j, d + j, 1.0),
            (d + i, d + j, -1.0),
        ]
        rows.append(SparseRow.from_matrix_entries(nz, entries))
        rhs.append(w**2)
    for k, j, w in scene.omega_a:
        a_k = scene.anchors[k]
        entries = [
            (a, bidx, a_k[a] * a_k[bidx]) for a in range(d) for bidx in range(a, d)
        ]
        entries += [(a, d + j, -a_k[a]) for a in range(d)]
        entries.append((d + j, d + j, 1.0))
        rows.append(SparseRow.from_matrix_entries(nz, entries))
        rhs.append(w**2)
    if objective == "feasibility":
        C = SymMatrix.zero(nz)
    elif objective == "trace_y":
        C = SymMatrix.from_dense(
            np.diag(np.concatenate([np.zeros(d), np.ones(ns)]))
        )
    else:
        raise ValueError(f"unknown objective {objective!r}")
    return SdpProblem(
        n=nz,
        C=C,
        A=rows,
        b=np.array(rhs),
        name=f"sensor_s{ns}_a{scene.n_anchors}",
    )


def extract_positions(Z: SymMatrix, d: int, n: int) -> np.ndarray:
    """Sensor positions: columns of the top-right d x n block, returned as
    an (n, d) array."""
    if Z.n != d + n:
        raise ValueError(f"matrix dimension {Z.n} does not equal d+n={d + n}")
    return Z.to_dense()[:d, d:].T.copy()


def lift_sensor(scene: SensorScene) -> SymMatrix:
    """Ground-truth lift [[I, X], [X^T, X^T X]] of a scene."""
    X = scene.sensors.T  # d x n
    top = np.hstack([np.eye(scene.d), X])
    bottom = np.hstack([X.T, X.T @ X])
    return SymMatrix.from_dense(np.vstack([top, bottom]), tol=1e-9)


# ---------------------------------------------------------------------------
# MIMO detection


def mimo_objective_matrix(inst: MimoInstance) -> np.ndarray:
    H, y = inst.H, inst.y_obs
    top = np.hstack([H.T @ H, -(H.T @ y)[:, None]])
    bottom = np.hstack([-(H.T @ y)[None, :], [[float(y @ y)]]])
    L = np.vstack([top, bottom])
    return 0.5 * (L + L.T)


def gen_mimo(inst: MimoInstance) -> SdpProblem:
    """MIMO relaxation on an (n+1)-dimensional variable: n+1 diagonal pins
    and the box -1 <= X_ij <= 1 on strict upper-triangle entries."""
    nx = inst.n + 1
    rows = [SparseRow.from_matrix_entries(nx, [(i, i, 1.0)]) for i in range(nx)]
    b = np.ones(nx)
    G, h = [], []
    for i in range(nx):
        for j in range(i + 1, nx):
            G.append(SparseRow.from_matrix_entries(nx, [(i, j, 0.5)]))
            h.append(1.0)
            G.append(SparseRow.from_matrix_entries(nx, [(i, j, -0.5)]))
            h.append(1.0)
    return SdpProblem(
        n=nx,
        C=SymMatrix.from_dense(mimo_objective_matrix(inst), tol=1e-9),
        A=rows,
        b=b,
        G=G,
        h=np.array(h),
        name=f"mimo_n{inst.n}",
    )


def extract_mimo_signal(X: SymMatrix, n: int) -> np.ndarray:
    """Sign pattern of the first n entries of the last column; sign(0) is
    taken as +1."""
    if X.n != n + 1:
        raise ValueError(f"matrix dimension {X.n} does not equal n+1={n + 1}")
    col = X.to_dense()[:n, n]
    return np.where(col >= 0.0, 1.0, -1.0)


def lift_mimo(x: np.ndarray) -> SymMatrix:
    """Rank-one feasible lift [x; 1][x; 1]^T of a sign vector."""
    v = np.concatenate([np.asarray(x, dtype=float), [1.0]])
    return SymMatrix.from_dense(np.outer(v, v))


def brute_force_mimo(
    H: np.ndarray, y_obs: np.ndarray, n: int
) -> tuple[np.ndarray, float]:
    """Exhaustive minimum of ||Hx - y||^2 over sign vectors, n <= 16."""
    if n > _MAX_BRUTE_MIMO:
        raise ValueError(f"brute force capped at n={_MAX_BRUTE_MIMO}")
    H = np.asarray(H, dtype=float)
    y_obs = np.asarray(y_obs, dtype=float)
    codes = np.arange(2**n, dtype=np.int64)
    signs = 2.0 * ((codes[:, None] >> np.arange(n)) & 1) - 1.0
    resid = signs @ H.T - y_obs
    objs = np.einsum("ij,ij->i", resid, resid)
    best = int(np.argmin(objs))
    return signs[best].copy(), float(objs[best])
