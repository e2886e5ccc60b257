"""From-scratch t-SNE over a precomputed distance matrix.

Gaussian affinities are calibrated per point to a target perplexity, then 2-D
coordinates are fit by gradient descent with momentum on the KL divergence to
a Student-t low-dimensional kernel. The gradient is the exact O(n^2) form; no
tree approximation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import AtlasError, ConvergenceError, DimensionMismatchError

_P_FLOOR = 1e-12
_MAX_CALIBRATION_ITERS = 64
_PERPLEXITY_TOL = 1e-5


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetric joint probabilities: zero diagonal, entries sum to 1."""

    P: np.ndarray
    perplexity: float | None = None
    sigmas: np.ndarray | None = None

    @property
    def n(self) -> int:
        return int(self.P.shape[0])


@dataclass
class TsneConfig:
    iters: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum_schedule: tuple[tuple[int, float], ...] = ((0, 0.5), (250, 0.8))
    seed: int = 0


@dataclass
class Embedding2D:
    coords: np.ndarray
    kl_trace: list[float] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.coords.shape[0])


def _entropy_bits(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def _conditional_from_beta(sq: np.ndarray, beta: float) -> np.ndarray:
    logits = -(sq - sq.min()) * beta
    w = np.exp(logits)
    return w / w.sum()


def calibrate_bandwidth(distance_row: np.ndarray, perplexity: float) -> float:
    """Find sigma so the conditional distribution's 2^entropy hits ``perplexity``.

    ``distance_row`` holds the distances to the other points (self excluded).
    Binary search on precision beta = 1/(2 sigma^2), at most 64 iterations;
    raises ConvergenceError with the achieved value when the target is
    unreachable.
    """
    row = np.asarray(distance_row, dtype=float)
    if row.ndim != 1 or row.size < 2:
        raise AtlasError("distance row must be a vector of at least 2 entries")
    if np.any(row < 0):
        raise AtlasError("distances must be nonnegative")
    sq = row * row
    m = row.size

    if np.all(row == row[0]):
        # The conditional is uniform for every sigma, so 2^H is pinned at the
        # neighbor count; only that exact perplexity is achievable.
        if abs(m - perplexity) <= _PERPLEXITY_TOL:
            return math.sqrt(0.5)
        raise ConvergenceError(
            f"equidistant row pins perplexity at {m}; cannot reach {perplexity} (achieved {m})"
        )
    if perplexity >= m:
        # For a non-uniform row the supremum 2^H -> m is never attained.
        raise ConvergenceError(
            f"perplexity {perplexity} is infeasible for a non-uniform row of {m} neighbors"
        )

    beta, beta_lo, beta_hi = 1.0, 0.0, math.inf
    achieved = math.nan
    for _ in range(_MAX_CALIBRATION_ITERS):
        achieved = 2.0 ** _entropy_bits(_conditional_from_beta(sq, beta))
        if abs(achieved - perplexity) <= _PERPLEXITY_TOL:
            return math.sqrt(1.0 / (2.0 * beta))
        if achieved > perplexity:
            beta_lo = beta
            beta = beta * 2.0 if math.isinf(beta_hi) else (beta_lo + beta_hi) / 2.0
        else:
            beta_hi = beta
            beta = beta / 2.0 if beta_lo == 0.0 else (beta_lo + beta_hi) / 2.0
    raise ConvergenceError(
        f"bandwidth calibration did not reach perplexity {perplexity} "
        f"in {_MAX_CALIBRATION_ITERS} iterations (achieved {achieved:.6f})"
    )


def conditional_probabilities(distance_row: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian conditional over the other points for a given bandwidth."""
    sq = np.asarray(distance_row, dtype=float) ** 2
    return _conditional_from_beta(sq, 1.0 / (2.0 * sigma * sigma))


def joint_probabilities(D: np.ndarray, perplexity: float) -> AffinityMatrix:
    """Calibrated conditionals symmetrized to p_ij = (p_j|i + p_i|j) / 2n."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if D.ndim != 2 or D.shape[1] != n:
        raise DimensionMismatchError("distance matrix must be square")
    if n < 4:
        raise AtlasError(f"need at least 4 points, got {n}")
    if not np.allclose(D, D.T, atol=1e-9) or np.any(np.diag(D) != 0):
        raise AtlasError("distance matrix must be symmetric with zero diagonal")

    cond = np.zeros((n, n))
    sigmas = np.zeros(n)
    mask = ~np.eye(n, dtype=bool)
    for i in range(n):
        row = D[i][mask[i]]
        try:
            sigmas[i] = calibrate_bandwidth(row, perplexity)
        except ConvergenceError as exc:
            raise ConvergenceError(f"row {i}: {exc}") from exc
        cond[i][mask[i]] = conditional_probabilities(row, sigmas[i])
    P = (cond + cond.T) / (2.0 * n)
    np.fill_diagonal(P, 0.0)
    return AffinityMatrix(P=P, perplexity=perplexity, sigmas=sigmas)


def _student_t_q(coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Student-t kernel weights W and normalized Q, both with zero diagonal."""
    diff = coords[:, None, :] - coords[None, :, :]
    sq = np.sum(diff * diff, axis=2)
    W = 1.0 / (1.0 + sq)
    np.fill_diagonal(W, 0.0)
    Q = W / W.sum()
    return W, Q


def kl_divergence(P: AffinityMatrix | np.ndarray, coords: np.ndarray) -> float:
    """KL(P || Q) with the Student-t Q; terms with p = 0 contribute 0."""
    pm = P.P if isinstance(P, AffinityMatrix) else np.asarray(P, dtype=float)
    if pm.shape[0] != coords.shape[0]:
        raise DimensionMismatchError("affinity and coordinate sizes differ")
    _, Q = _student_t_q(coords)
    q = np.maximum(Q, _P_FLOOR)
    mask = pm > 0
    return float(np.sum(pm[mask] * np.log(pm[mask] / q[mask])))


def gradient(P: AffinityMatrix | np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Exact gradient: 4 sum_j (p_ij - q_ij) (1 + |y_i - y_j|^2)^-1 (y_i - y_j)."""
    pm = P.P if isinstance(P, AffinityMatrix) else np.asarray(P, dtype=float)
    if pm.shape[0] != coords.shape[0]:
        raise DimensionMismatchError("affinity and coordinate sizes differ")
    W, Q = _student_t_q(coords)
    M = (pm - Q) * W
    return 4.0 * (np.diag(M.sum(axis=1)) @ coords - M @ coords)


def _momentum_at(schedule: tuple[tuple[int, float], ...], iteration: int) -> float:
    mom = schedule[0][1]
    for start, value in schedule:
        if iteration >= start:
            mom = value
    return mom


def tsne_fit(
    P: AffinityMatrix,
    config: TsneConfig | None = None,
    init_coords: np.ndarray | None = None,
) -> Embedding2D:
    """Gradient descent with momentum on KL(P || Q).

    The affinities are multiplied by ``early_exaggeration`` for the first
    ``exaggeration_iters`` iterations; the recorded kl_trace always uses the
    unexaggerated P. Deterministic given the seed (or explicit init_coords).
    """
    config = config or TsneConfig()
    pm = P.P
    n = pm.shape[0]
    if init_coords is not None:
        coords = np.array(init_coords, dtype=float)
        if coords.shape != (n, 2):
            raise DimensionMismatchError(f"init coords must be {(n, 2)}, got {coords.shape}")
    else:
        rng = np.random.default_rng(config.seed)
        coords = rng.normal(0.0, 1e-4, size=(n, 2))

    velocity = np.zeros_like(coords)
    gains = np.ones_like(coords)
    kl_trace: list[float] = []
    for it in range(config.iters):
        exaggerating = it < config.exaggeration_iters
        p_eff = pm * config.early_exaggeration if exaggerating else pm

        W, Q = _student_t_q(coords)
        M = (p_eff - Q) * W
        grad = 4.0 * (np.diag(M.sum(axis=1)) @ coords - M @ coords)

        q = np.maximum(Q, _P_FLOOR)
        mask = pm > 0
        kl_trace.append(float(np.sum(pm[mask] * np.log(pm[mask] / q[mask]))))

        # Per-parameter gains, as in the reference optimizer: grow when the
        # gradient keeps its direction against the velocity, shrink otherwise.
        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.clip(gains, 0.01, None, out=gains)

        momentum = _momentum_at(config.momentum_schedule, it)
        velocity = momentum * velocity - config.learning_rate * gains * grad
        coords = coords + velocity
        if not np.all(np.isfinite(coords)):
            raise ConvergenceError(f"embedding diverged at iteration {it}: non-finite coordinates")

    return Embedding2D(coords=coords, kl_trace=kl_trace, config=_config_echo(config))


def _config_echo(config: TsneConfig) -> dict:
    echo = asdict(config)
    echo["momentum_schedule"] = [list(pair) for pair in config.momentum_schedule]
    return echo


def save_embedding(embedding: Embedding2D, ids: list[str], path: str | Path) -> None:
    """CSV of id,x,y plus a ``.meta.json`` sidecar with config and kl_trace."""
    path = Path(path)
    if embedding.n != len(ids):
        raise DimensionMismatchError("id count does not match embedding rows")
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "x", "y"])
        for item_id, (x, y) in zip(ids, embedding.coords):
            writer.writerow([item_id, repr(float(x)), repr(float(y))])
    sidecar = {"config": embedding.config, "kl_trace": embedding.kl_trace}
    sidecar_path(path).write_text(
        json.dumps(sidecar, ensure_ascii=False, separators=(",", ":")), encoding="utf-8"
    )


def sidecar_path(csv_path: str | Path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.json")


def load_embedding(path: str | Path) -> tuple[Embedding2D, list[str]]:
    path = Path(path)
    ids: list[str] = []
    rows: list[tuple[float, float]] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["id", "x", "y"]:
            raise AtlasError(f"unexpected embedding header in {path}: {header}")
        for rec in reader:
            ids.append(rec[0])
            rows.append((float(rec[1]), float(rec[2])))
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
    return (
        Embedding2D(
            coords=np.asarray(rows, dtype=float),
            kl_trace=list(meta.get("kl_trace", [])),
            config=meta.get("config", {}),
        ),
        ids,
    )
