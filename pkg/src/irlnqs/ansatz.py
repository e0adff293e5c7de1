"""Autoregressive neural quantum state with exact particle-number masking.

The wavefunction is psi(n) = sqrt(p(n)) * exp(i*phi(n)).  The amplitude
factorizes autoregressively over spin-orbitals: a single shared one-hidden-
layer tanh network consumes the +/-1-encoded prefix (zero-padded) plus a
one-hot position indicator and emits two conditional logits.  Particle-
number constraints are enforced by overwriting forbidden logits with -inf
before normalization, so sampling and evaluation use identical
probabilities.  A separate linear-plus-hidden phase head consumes the full
+/-1-encoded configuration.

Parameters are a single flat real vector; gradients are exact analytic
reverse-mode accumulations through both heads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .hilbert import OccupationVector, Sector


@dataclass(frozen=True)
class Architecture:
    """Layer widths of the shared conditional network and phase head."""

    n_orbitals: int
    hidden: int

    @property
    def param_count(self) -> int:
        m, h = self.n_orbitals, self.hidden
        # amplitude: W1 (h x 2M), b1 (h), W2 (2 x h), b2 (2)
        # phase: Wp (h x M), bp (h), up (h), w_lin (M), c (1)
        return h * (2 * m) + h + 2 * h + 2 + h * m + h + h + m + 1


@dataclass(frozen=True)
class AnsatzParameters:
    architecture: Architecture
    theta: np.ndarray

    def __post_init__(self):
        if self.theta.shape != (self.architecture.param_count,):
            raise ValueError(
                f"theta has length {self.theta.shape}, architecture needs "
                f"{self.architecture.param_count}"
            )
        self.theta.setflags(write=False)


@dataclass(frozen=True)
class LogAmplitude:
    """ln psi split as (1/2) ln p and the phase in radians."""

    log_prob_half: float
    phase: float

    @property
    def value(self) -> complex:
        return complex(self.log_prob_half, self.phase)


class _Weights:
    """Views into the flat parameter vector; no copies."""

    def __init__(self, arch: Architecture, theta: np.ndarray):
        m, h = arch.n_orbitals, arch.hidden
        sizes = [h * 2 * m, h, 2 * h, 2, h * m, h, h, m, 1]
        offsets = np.cumsum([0] + sizes)
        s = [theta[offsets[i]:offsets[i + 1]] for i in range(len(sizes))]
        self.w1 = s[0].reshape(h, 2 * m)
        self.b1 = s[1]
        self.w2 = s[2].reshape(2, h)
        self.b2 = s[3]
        self.wp = s[4].reshape(h, m)
        self.bp = s[5]
        self.up = s[6]
        self.w_lin = s[7]
        self.c = s[8]


class _Gradient:
    """Mutable mirror of _Weights accumulating derivatives."""

    def __init__(self, arch: Architecture, dtype=np.float64):
        m, h = arch.n_orbitals, arch.hidden
        self.w1 = np.zeros((h, 2 * m), dtype=dtype)
        self.b1 = np.zeros(h, dtype=dtype)
        self.w2 = np.zeros((2, h), dtype=dtype)
        self.b2 = np.zeros(2, dtype=dtype)
        self.wp = np.zeros((h, m), dtype=dtype)
        self.bp = np.zeros(h, dtype=dtype)
        self.up = np.zeros(h, dtype=dtype)
        self.w_lin = np.zeros(m, dtype=dtype)
        self.c = np.zeros(1, dtype=dtype)

    def flat(self) -> np.ndarray:
        return np.concatenate(
            [
                self.w1.ravel(),
                self.b1,
                self.w2.ravel(),
                self.b2,
                self.wp.ravel(),
                self.bp,
                self.up,
                self.w_lin,
                self.c,
            ]
        )


def init_parameters(arch: Architecture, seed: int = 111) -> AnsatzParameters:
    """Seeded uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] initialization.

    The phase-head output weights (up, w_lin, c) start at zero so the
    initial wavefunction is real and positive.
    """
    rng = np.random.default_rng(seed)
    m, h = arch.n_orbitals, arch.hidden
    grad = _Gradient(arch)  # reuse the buffer layout
    grad.w1 = rng.uniform(-1, 1, (h, 2 * m)) / np.sqrt(2 * m)
    grad.b1 = rng.uniform(-1, 1, h) / np.sqrt(2 * m)
    grad.w2 = rng.uniform(-1, 1, (2, h)) / np.sqrt(h)
    grad.b2 = rng.uniform(-1, 1, 2) / np.sqrt(h)
    grad.wp = rng.uniform(-1, 1, (h, m)) / np.sqrt(m)
    grad.bp = rng.uniform(-1, 1, h) / np.sqrt(m)
    return AnsatzParameters(arch, grad.flat())


def _channel_state(sector: Sector, prefix_bits: int, i: int):
    """Masking data for position i: (forced_empty, forced_occupied).

    Position i belongs to one spin channel; the outcome is forced when that
    channel's remaining orbitals exactly match the remaining electrons, and
    occupation is forbidden once the channel count is filled.
    """
    half = sector.n_orbitals // 2
    if i < half:
        count = (prefix_bits & ((1 << i) - 1)).bit_count()
        needed = sector.n_up - count
        remaining = half - i
    else:
        count = (prefix_bits >> half & ((1 << (i - half)) - 1)).bit_count()
        needed = sector.n_down - count
        remaining = sector.n_orbitals - i
    if needed < 0 or needed > remaining:
        raise RuntimeError("infeasible prefix reached; masking invariant broken")
    return needed == 0, needed == remaining


def _amplitude_input(arch: Architecture, prefix_bits: int, i: int) -> np.ndarray:
    m = arch.n_orbitals
    u = np.zeros(2 * m)
    for j in range(i):
        u[j] = 1.0 if (prefix_bits >> j) & 1 else -1.0
    u[m + i] = 1.0
    return u


def _conditional_logprobs(
    weights: _Weights, arch: Architecture, sector: Sector, prefix_bits: int, i: int
):
    """(ln ptilde(0), ln ptilde(1), forward cache) with masking applied."""
    forced_empty, forced_occupied = _channel_state(sector, prefix_bits, i)
    u = _amplitude_input(arch, prefix_bits, i)
    z = weights.w1 @ u + weights.b1
    a = np.tanh(z)
    logits = weights.w2 @ a + weights.b2
    if forced_empty:
        logp = np.array([0.0, -np.inf])
    elif forced_occupied:
        logp = np.array([-np.inf, 0.0])
    else:
        logz = np.logaddexp(logits[0], logits[1])
        logp = logits - logz
    return logp, (u, a, logits, forced_empty or forced_occupied)


def conditional(
    params: AnsatzParameters, prefix: tuple[int, ...], i: int, sector: Sector
) -> tuple[float, float]:
    """Masked conditional probabilities (P(n_i=0), P(n_i=1)).

    prefix holds the occupations n_0..n_{i-1}; i is 0-based.
    """
    if len(prefix) != i or i >= sector.n_orbitals:
        raise ValueError("prefix length must equal the 0-based position index")
    bits = sum(1 << j for j, n in enumerate(prefix) if n)
    weights = _Weights(params.architecture, params.theta)
    logp, _ = _conditional_logprobs(weights, params.architecture, sector, bits, i)
    return float(np.exp(logp[0])), float(np.exp(logp[1]))


def sample(
    params: AnsatzParameters, sector: Sector, count: int, seed: int
) -> list[OccupationVector]:
    """Exact ancestral sampling; every sample lies in the sector.

    Per-sample RNG streams are spawned from the seed, so the batch is
    independent of chunking or execution order.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    arch = params.architecture
    weights = _Weights(arch, params.theta)
    streams = np.random.SeedSequence(seed).spawn(count)
    out = []
    for stream in streams:
        rng = np.random.default_rng(stream)
        bits = 0
        for i in range(arch.n_orbitals):
            logp, _ = _conditional_logprobs(weights, arch, sector, bits, i)
            if rng.random() < np.exp(logp[1]):
                bits |= 1 << i
        out.append(OccupationVector(bits, arch.n_orbitals))
    return out


def log_amplitude(
    params: AnsatzParameters, x: OccupationVector, sector: Sector
) -> LogAmplitude:
    """ln psi(x) as (log_prob_half, phase); -inf log-prob outside the sector."""
    arch = params.architecture
    if not sector.contains(x):
        return LogAmplitude(-np.inf, 0.0)
    weights = _Weights(arch, params.theta)
    log_prob = 0.0
    for i in range(arch.n_orbitals):
        prefix_bits = x.bits & ((1 << i) - 1)
        logp, _ = _conditional_logprobs(weights, arch, sector, prefix_bits, i)
        log_prob += logp[1] if x.occupied(i) else logp[0]
    s = _phase_input(arch, x)
    t = np.tanh(weights.wp @ s + weights.bp)
    phase = float(weights.w_lin @ s + weights.up @ t + weights.c[0])
    return LogAmplitude(0.5 * log_prob, phase)


def _phase_input(arch: Architecture, x: OccupationVector) -> np.ndarray:
    return np.array(
        [1.0 if x.occupied(j) else -1.0 for j in range(arch.n_orbitals)]
    )


def log_derivative(
    params: AnsatzParameters, x: OccupationVector, sector: Sector
) -> np.ndarray:
    """O(x) = d ln psi / d theta: complex vector of length param_count."""
    arch = params.architecture
    if not sector.contains(x):
        raise ValueError("configuration outside the sector has zero amplitude")
    weights = _Weights(arch, params.theta)
    grad = _Gradient(arch)

    # amplitude head: d(1/2 ln p)/dtheta, masked positions contribute nothing
    for i in range(arch.n_orbitals):
        prefix_bits = x.bits & ((1 << i) - 1)
        logp, (u, a, logits, forced) = _conditional_logprobs(
            weights, arch, sector, prefix_bits, i
        )
        if forced:
            continue
        probs = np.exp(logp)
        onehot = np.array([0.0, 1.0]) if x.occupied(i) else np.array([1.0, 0.0])
        g_logits = 0.5 * (onehot - probs)
        grad.w2 += np.outer(g_logits, a)
        grad.b2 += g_logits
        dz = (weights.w2.T @ g_logits) * (1.0 - a * a)
        grad.w1 += np.outer(dz, u)
        grad.b1 += dz

    real = grad.flat()

    # phase head: d phi / d theta
    pgrad = _Gradient(arch)
    s = _phase_input(arch, x)
    t = np.tanh(weights.wp @ s + weights.bp)
    pgrad.w_lin += s
    pgrad.up += t
    pgrad.c += 1.0
    dt = weights.up * (1.0 - t * t)
    pgrad.wp += np.outer(dt, s)
    pgrad.bp += dt
    imag = pgrad.flat()

    return real + 1j * imag


def save_checkpoint(params: AnsatzParameters, sector: Sector, path: str):
    """Textual checkpoint: JSON descriptor line, then one value per line.

    Values are written with 17 significant digits, which round-trips
    float64 exactly.
    """
    header = {
        "n_orbitals": params.architecture.n_orbitals,
        "hidden": params.architecture.hidden,
        "n_up": sector.n_up,
        "n_down": sector.n_down,
        "param_count": params.architecture.param_count,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for value in params.theta:
            fh.write(f"{value:.17g}\n")


def load_checkpoint(path: str) -> tuple[AnsatzParameters, Sector]:
    with open(path) as fh:
        header = json.loads(fh.readline())
        values = [float(line) for line in fh if line.strip()]
    arch = Architecture(header["n_orbitals"], header["hidden"])
    if len(values) != header["param_count"] or len(values) != arch.param_count:
        raise ValueError("checkpoint value count does not match its descriptor")
    sector = Sector(header["n_orbitals"], header["n_up"], header["n_down"])
    return AnsatzParameters(arch, np.array(values)), sector
