"""MIMO link capacities under interference.

Channel convention: ``H[i, j]`` maps the ``a`` transmit antennas of node ``i``
to the ``a`` receive antennas of node ``j`` (``y_j = H[i, j] x_i + ...``).
For links ``l`` and ``k`` the cross channel from the transmitter of ``l`` to
the receiver of ``k`` is ``H[src(l), dest(k)]``.

Rates are in bits per channel use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Mapping

import numpy as np

from jrsp.errors import ConditioningError, InstanceError
from jrsp.netmodel import Mode, Network, is_valid_mode

EIG_FLOOR = 1e-12
POWER_TOL = 1e-10
_ZERO_GAIN = 1e-14


class ChannelSet(Mapping):
    """Read-only map ``(i, j) -> a x a`` complex channel matrix."""

    def __init__(self, matrices: Mapping[tuple[int, int], np.ndarray], antennas: int):
        self._m: dict[tuple[int, int], np.ndarray] = {}
        for key, h in matrices.items():
            h = np.array(h, dtype=complex)
            if h.shape != (antennas, antennas):
                raise InstanceError(f"channel {key} has shape {h.shape}, expected "
                                    f"({antennas}, {antennas})")
            h.flags.writeable = False
            self._m[(int(key[0]), int(key[1]))] = h
        self.antennas = antennas

    def __getitem__(self, key: tuple[int, int]) -> np.ndarray:
        return self._m[key]

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self._m)

    def __len__(self) -> int:
        return len(self._m)

    def __eq__(self, other):
        if not isinstance(other, ChannelSet):
            return NotImplemented
        return (self.antennas == other.antennas and self._m.keys() == other._m.keys()
                and all(np.array_equal(self._m[k], other._m[k]) for k in self._m))

    def covers(self, net: Network) -> bool:
        nodes = {v for lk in net.links for v in lk}
        return all((i, j) in self._m for i in nodes for j in nodes if i != j)


def generate_channels(net: Network, seed) -> ChannelSet:
    """I.i.d. CN(0, 1) entries for every ordered node pair, drawn in (i, j) order."""
    rng = np.random.default_rng(seed)
    a = net.antennas
    mats = {}
    for i in range(net.num_nodes):
        for j in range(net.num_nodes):
            if i != j:
                re = rng.standard_normal((a, a))
                im = rng.standard_normal((a, a))
                mats[(i, j)] = (re + 1j * im) / np.sqrt(2.0)
    return ChannelSet(mats, a)


@dataclass(frozen=True)
class WaterfillResult:
    covariance: np.ndarray
    capacity: float
    water_level: float = 0.0


def is_hermitian(m: np.ndarray, tol: float = 1e-9) -> bool:
    return bool(np.allclose(m, m.conj().T, atol=tol, rtol=0))


def is_psd(m: np.ndarray, tol: float = 1e-9) -> bool:
    return is_hermitian(m, tol) and float(np.linalg.eigvalsh((m + m.conj().T) / 2).min()) >= -tol


def whitener(r: np.ndarray) -> np.ndarray:
    """``R^(-1/2)`` for a Hermitian positive-definite noise covariance."""
    w, v = np.linalg.eigh((r + r.conj().T) / 2)
    top = w[-1]
    if not top > 0 or w[0] < EIG_FLOOR * top:
        raise ConditioningError(f"noise covariance not positive definite "
                                f"(eigenvalues {w[0]:.3e} .. {top:.3e})")
    return (v / np.sqrt(w)) @ v.conj().T


def water_levels(gains: np.ndarray, budget: float) -> tuple[np.ndarray, float]:
    """Powers ``max(0, mu - 1/g)`` summing to ``budget`` over parallel channels.

    Channels with (numerically) zero gain get no power. Returns the powers in
    the input order and the water level ``mu``.
    """
    gains = np.asarray(gains, dtype=float)
    p = np.zeros_like(gains)
    if budget <= 0 or gains.size == 0:
        return p, 0.0
    gmax = gains.max()
    if not gmax > 0:
        return p, 0.0
    usable = np.flatnonzero(gains > _ZERO_GAIN * gmax)
    order = usable[np.argsort(-gains[usable], kind="stable")]
    inv = 1.0 / gains[order]
    csum = np.cumsum(inv)
    mu = 0.0
    for k in range(len(order), 0, -1):
        mu = (budget + csum[k - 1]) / k
        if mu - inv[k - 1] > 0:
            p[order[:k]] = mu - inv[:k]
            break
    if abs(p.sum() - budget) > POWER_TOL * max(1.0, budget):
        p, mu = _bisect_levels(gains[order], budget, inv)
        out = np.zeros_like(gains)
        out[order] = p
        return out, mu
    return p, mu


def _bisect_levels(g: np.ndarray, budget: float, inv: np.ndarray) -> tuple[np.ndarray, float]:
    lo, hi = inv.min(), inv.max() + budget
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        if np.maximum(mu - inv, 0).sum() > budget:
            hi = mu
        else:
            lo = mu
    p = np.maximum(lo - inv, 0)
    # put the residual on the strongest channel so the budget is met exactly
    p[0] += budget - p.sum()
    return p, lo


def link_rate(h: np.ndarray, r: np.ndarray, k: np.ndarray) -> float:
    """``log2 det(I + R^-1 H K H^H)`` evaluated through the whitened channel."""
    hw = whitener(r) @ h
    m = np.eye(h.shape[0]) + hw @ k @ hw.conj().T
    sign, logdet = np.linalg.slogdet(m)
    return float(logdet / np.log(2.0))


def waterfill(h: np.ndarray, r: np.ndarray, budget: float) -> WaterfillResult:
    """Capacity-achieving transmit covariance for one link against colored noise."""
    h = np.asarray(h, dtype=complex)
    r = np.asarray(r, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InstanceError(f"channel must be square, got shape {h.shape}")
    if r.shape != h.shape:
        raise InstanceError(f"noise covariance shape {r.shape} != channel shape {h.shape}")
    if budget < 0:
        raise InstanceError("power budget must be non-negative")
    hw = whitener(r) @ h
    if budget == 0:
        return WaterfillResult(np.zeros_like(hw), 0.0)
    _, s, vh = np.linalg.svd(hw)
    gains = s**2
    p, mu = water_levels(gains, budget)
    v = vh.conj().T
    k = (v * p) @ vh
    k = (k + k.conj().T) / 2
    cap = float(np.sum(np.log2(1.0 + gains * p)))
    return WaterfillResult(k, cap, mu)


@dataclass(frozen=True)
class ModeCapacities:
    capacities: np.ndarray
    covariances: dict[int, np.ndarray]
    iterations: int
    converged: bool

    @property
    def sum_rate(self) -> float:
        return float(self.capacities.sum())


UpdateHook = Callable[[int, np.ndarray, np.ndarray, np.ndarray, WaterfillResult], None]


def interference_covariance(net: Network, ch: ChannelSet, link: int,
                            covs: Mapping[int, np.ndarray]) -> np.ndarray:
    """Noise plus interference seen at the receiver of ``link``."""
    a = net.antennas
    dest = net.links[link][1]
    r = net.noise_variance * np.eye(a, dtype=complex)
    for j, kj in covs.items():
        if j != link:
            g = ch[net.links[j][0], dest]
            r = r + g @ kj @ g.conj().T
    return r


def mode_capacities(net: Network, ch: ChannelSet, m: Mode, eps: float = 1e-6,
                    max_iters: int = 200, on_update: UpdateHook | None = None) -> ModeCapacities:
    """Iterative waterfilling (Gauss-Seidel best responses) for one mode.

    Every active link starts from an isotropic covariance ``(m_l/a) I``; full
    sweeps in ascending link order re-waterfill each active link against the
    current interference until the sum rate changes by less than ``eps``.
    ``on_update(link, old_K, new_R, channel, result)`` is called after each
    single-link update; tests use it to check the best-response property.
    """
    if not is_valid_mode(net, m):
        raise InstanceError("invalid mode")
    if eps <= 0 or max_iters < 1:
        raise InstanceError("eps must be > 0 and max_iters >= 1")
    a = net.antennas
    active = m.active
    covs = {i: (m.powers[i] / a) * np.eye(a, dtype=complex) for i in active}
    caps = np.zeros(net.num_links)
    sumrate = -np.inf
    sweeps = 0
    converged = False
    while sweeps < max_iters:
        if abs(caps.sum() - sumrate) < eps:
            converged = True
            break
        sumrate = caps.sum()
        for i in active:
            s, d = net.links[i]
            r = interference_covariance(net, ch, i, covs)
            h = ch[s, d]
            res = waterfill(h, r, m.powers[i])
            if on_update is not None:
                on_update(i, covs[i], r, h, res)
            covs[i] = res.covariance
            caps[i] = res.capacity
        sweeps += 1
    else:
        converged = abs(caps.sum() - sumrate) < eps
    caps.flags.writeable = False
    return ModeCapacities(caps, covs, sweeps, converged)


class CapacityCache:
    """Memoized :func:`mode_capacities` for a fixed network and channel set."""

    def __init__(self, net: Network, ch: ChannelSet, eps: float = 1e-6, max_iters: int = 200):
        self.net = net
        self.ch = ch
        self.eps = eps
        self.max_iters = max_iters
        self._store: dict[Mode, ModeCapacities] = {}

    def __call__(self, m: Mode) -> ModeCapacities:
        hit = self._store.get(m)
        if hit is None:
            hit = mode_capacities(self.net, self.ch, m, self.eps, self.max_iters)
            self._store[m] = hit
        return hit

    def __len__(self) -> int:
        return len(self._store)
