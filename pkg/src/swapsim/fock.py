"""Truncated bosonic Fock space over labeled (spatial, polarization) modes.

States are sparse maps from occupation tuples to complex amplitudes.  The
per-mode photon cap ``n_max`` implements the truncation of the numerical
noise model; amplitudes pushed past the cap are dropped and their weight
accumulated in ``truncation_loss``.

Mixed states (after loss channels) are represented as lists of
unnormalized FockVectors; the weight of a branch is its squared norm.
All detector queries are linear in that ensemble.
"""

from __future__ import annotations

from math import comb, factorial, sqrt

import numpy as np

Mode = tuple[str, str]  # (spatial label, polarization "H" or "V")

PRUNE_TOL = 1e-14

# Jones matrices.  qwp at +45 deg sends |H> to (|H> + i|V>)/sqrt2 (= |R> up
# to phase), qwp at -45 deg sends |H> to (|H> - i|V>)/sqrt2.
JONES_QWP_P45 = np.array([[1.0, 1.0j], [1.0j, 1.0]], dtype=complex) / sqrt(2.0)
JONES_QWP_M45 = np.array([[1.0, -1.0j], [-1.0j, 1.0]], dtype=complex) / sqrt(2.0)
JONES_IDENTITY = np.eye(2, dtype=complex)


def jones_waveplate(retardance: float, angle: float) -> np.ndarray:
    """General waveplate: retardance between fast/slow axes, fast axis at ``angle``.

    Convention chosen so that ``jones_waveplate(pi/2, pi/4)`` equals
    ``JONES_QWP_P45`` exactly (including global phase).
    """
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]], dtype=complex)
    core = np.array(
        [[np.exp(0.5j * retardance), 0.0], [0.0, np.exp(-0.5j * retardance)]],
        dtype=complex,
    )
    return rot @ core @ rot.conj().T


class FockVector:
    """Sparse amplitude map over occupation tuples of an ordered mode register."""

    __slots__ = ("modes", "n_max", "amp", "truncation_loss", "_index")

    def __init__(self, modes, n_max: int, amp=None, truncation_loss: float = 0.0):
        self.modes: tuple[Mode, ...] = tuple(modes)
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("duplicate mode labels in register")
        self.n_max = int(n_max)
        self.amp: dict[tuple[int, ...], complex] = dict(amp) if amp else {}
        self.truncation_loss = float(truncation_loss)
        self._index = {m: i for i, m in enumerate(self.modes)}

    @classmethod
    def vacuum(cls, modes, n_max: int) -> "FockVector":
        state = cls(modes, n_max)
        state.amp[(0,) * len(state.modes)] = 1.0
        return state

    def mode_index(self, mode: Mode) -> int:
        try:
            return self._index[mode]
        except KeyError:
            raise ValueError(f"unknown mode {mode!r}") from None

    def norm_sq(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amp.values()))

    def norm(self) -> float:
        return sqrt(self.norm_sq())

    def normalized(self) -> "FockVector":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return self.scaled(1.0 / n)

    def scaled(self, factor: complex) -> "FockVector":
        return FockVector(
            self.modes,
            self.n_max,
            {occ: a * factor for occ, a in self.amp.items()},
            self.truncation_loss,
        )

    def add(self, other: "FockVector", scale: complex = 1.0) -> "FockVector":
        if other.modes != self.modes:
            raise ValueError("mode registers differ")
        amp = dict(self.amp)
        for occ, a in other.amp.items():
            amp[occ] = amp.get(occ, 0.0) + scale * a
        out = FockVector(self.modes, self.n_max, truncation_loss=self.truncation_loss)
        out.amp = {occ: a for occ, a in amp.items() if abs(a) > PRUNE_TOL}
        return out

    def inner(self, other: "FockVector") -> complex:
        """<self|other>."""
        if other.modes != self.modes:
            raise ValueError("mode registers differ")
        total = 0.0 + 0.0j
        for occ, a in self.amp.items():
            b = other.amp.get(occ)
            if b is not None:
                total += np.conj(a) * b
        return complex(total)

    def create(self, mode: Mode) -> "FockVector":
        """Apply the creation operator; occupations at ``n_max`` are truncated."""
        i = self.mode_index(mode)
        out = FockVector(self.modes, self.n_max, truncation_loss=self.truncation_loss)
        for occ, a in self.amp.items():
            n = occ[i]
            if n >= self.n_max:
                out.truncation_loss += abs(a) ** 2 * (n + 1)
                continue
            new = occ[:i] + (n + 1,) + occ[i + 1 :]
            out.amp[new] = out.amp.get(new, 0.0) + a * sqrt(n + 1)
        return out

    def relabel(self, mapping: dict[str, str]) -> "FockVector":
        """Rename spatial labels; occupations are untouched."""
        new_modes = tuple((mapping.get(s, s), p) for s, p in self.modes)
        return FockVector(new_modes, self.n_max, self.amp, self.truncation_loss)

    def tensor(self, other: "FockVector") -> "FockVector":
        if self.n_max != other.n_max:
            raise ValueError("photon caps differ")
        modes = self.modes + other.modes
        out = FockVector(modes, self.n_max)
        for occ1, a1 in self.amp.items():
            for occ2, a2 in other.amp.items():
                out.amp[occ1 + occ2] = a1 * a2
        out.truncation_loss = self.truncation_loss + other.truncation_loss
        return out

    def extended(self, modes) -> "FockVector":
        """Embed into a larger register; the new modes start in vacuum."""
        extra = tuple(m for m in modes if m not in self._index)
        if not extra:
            return self
        return self.tensor(FockVector.vacuum(extra, self.n_max))

    def __repr__(self):
        return f"FockVector(modes={len(self.modes)}, terms={len(self.amp)})"


def _pair_indices(state: FockVector, m1, m2) -> list[tuple[int, int]]:
    """Resolve two mode arguments that may be ModeLabels or bare spatial labels."""
    if isinstance(m1, tuple) and isinstance(m2, tuple):
        return [(state.mode_index(m1), state.mode_index(m2))]
    pairs = []
    for pol in ("H", "V"):
        a, b = (m1, pol), (m2, pol)
        if a in state._index and b in state._index:
            pairs.append((state.mode_index(a), state.mode_index(b)))
    if not pairs:
        raise ValueError(f"no matching mode pairs for {m1!r}, {m2!r}")
    return pairs


def apply_pair_matrix(state: FockVector, i1: int, i2: int, mat: np.ndarray) -> FockVector:
    """Linear-optics lift of a 2x2 mode-transformation matrix.

    Creation operators transform as a_i -> sum_j mat[j, i] a_j, which for a
    Jones matrix J coincides with the single-photon ket map |p> -> J|p>.
    """
    n_max = state.n_max
    out = FockVector(state.modes, n_max, truncation_loss=state.truncation_loss)
    amp_out = out.amp
    for occ, a in state.amp.items():
        n1, n2 = occ[i1], occ[i2]
        base = a / sqrt(factorial(n1) * factorial(n2))
        # (m00 x + m10 y)^n1 (m01 x + m11 y)^n2, with x, y the output ops.
        for k1 in range(n1 + 1):
            c1 = comb(n1, k1) * mat[0, 0] ** k1 * mat[1, 0] ** (n1 - k1)
            if c1 == 0:
                continue
            for k2 in range(n2 + 1):
                c2 = comb(n2, k2) * mat[0, 1] ** k2 * mat[1, 1] ** (n2 - k2)
                if c2 == 0:
                    continue
                x = k1 + k2
                y = n1 + n2 - x
                coeff = base * c1 * c2 * sqrt(factorial(x) * factorial(y))
                if x > n_max or y > n_max:
                    out.truncation_loss += abs(coeff) ** 2
                    continue
                new = list(occ)
                new[i1], new[i2] = x, y
                new = tuple(new)
                amp_out[new] = amp_out.get(new, 0.0) + coeff
    out.amp = {occ: v for occ, v in amp_out.items() if abs(v) > PRUNE_TOL}
    return out


def beam_splitter(state: FockVector, m1, m2, transmissivity: float, phase: float = 0.0) -> FockVector:
    """Symmetric beam splitter (factor i on reflection) between two modes.

    ``m1``/``m2`` may be ModeLabels or bare spatial labels; spatial labels
    act pairwise on the H and V components.  ``phase`` is an extra phase
    applied to ``m2`` before the splitter (the interferometer arm phase).
    """
    if m1 == m2:
        raise ValueError("beam splitter needs two distinct modes")
    if not 0.0 <= transmissivity <= 1.0:
        raise ValueError("transmissivity must lie in [0, 1]")
    t = sqrt(transmissivity)
    r = sqrt(1.0 - transmissivity)
    ph = np.exp(1.0j * phase)
    mat = np.array([[t, 1.0j * r * ph], [1.0j * r, t * ph]], dtype=complex)
    for i1, i2 in _pair_indices(state, m1, m2):
        state = apply_pair_matrix(state, i1, i2, mat)
    return state


def phase_shift(state: FockVector, target, phi: float) -> FockVector:
    """Phase e^{i phi} per photon in a mode (or both polarizations of a spatial label)."""
    if isinstance(target, tuple):
        idxs = [state.mode_index(target)]
    else:
        idxs = [i for i, (s, _) in enumerate(state.modes) if s == target]
        if not idxs:
            raise ValueError(f"unknown spatial label {target!r}")
    ph = np.exp(1.0j * phi)
    out = FockVector(state.modes, state.n_max, truncation_loss=state.truncation_loss)
    for occ, a in state.amp.items():
        n = sum(occ[i] for i in idxs)
        out.amp[occ] = a * ph**n
    return out


WAVE_PLATE_ELEMENTS = {
    "qwp+45": JONES_QWP_P45,
    "qwp-45": JONES_QWP_M45,
    "identity": JONES_IDENTITY,
}


def wave_plate(state: FockVector, spatial: str, element) -> FockVector:
    """Apply a polarization Jones unitary to the H/V pair of a spatial mode.

    ``element`` is one of the named plates in ``WAVE_PLATE_ELEMENTS`` or an
    explicit 2x2 Jones matrix (e.g. from :func:`jones_waveplate`).
    """
    if isinstance(element, str):
        try:
            mat = WAVE_PLATE_ELEMENTS[element]
        except KeyError:
            raise ValueError(f"unknown wave plate element {element!r}") from None
    else:
        mat = np.asarray(element, dtype=complex)
    h, v = (spatial, "H"), (spatial, "V")
    if h not in state._index or v not in state._index:
        raise ValueError(f"spatial label {spatial!r} needs both polarizations")
    return apply_pair_matrix(state, state.mode_index(h), state.mode_index(v), mat)


def polarization_rotation(state: FockVector, spatial: str, jones: np.ndarray) -> FockVector:
    """Alias of :func:`wave_plate` with an explicit matrix; reads better at call sites."""
    return wave_plate(state, spatial, jones)


def spdc_source(
    tau: float,
    order: int,
    spatial: tuple[str, str] = ("a", "b"),
    n_max: int = 3,
    normalize: bool = True,
) -> FockVector:
    """Two-mode-squeezed singlet source, truncated at ``order`` photon pairs.

    Expansion of exp[tau (aH+ bV+ - aV+ bH+)/sqrt2] |vac>; the one-pair
    term is exactly tau |psi->.  The interaction is singlet-normalized so
    that P(2 pairs)/P(1 pair) = 3 tau^2 / 4 at small tau.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if order > n_max:
        raise ValueError("order exceeds the per-mode photon cap")
    s1, s2 = spatial
    modes = ((s1, "H"), (s1, "V"), (s2, "H"), (s2, "V"))
    vac = FockVector.vacuum(modes, n_max)

    def pair_op(v: FockVector) -> FockVector:
        plus = v.create((s1, "H")).create((s2, "V"))
        minus = v.create((s1, "V")).create((s2, "H"))
        return plus.add(minus, scale=-1.0).scaled(1.0 / sqrt(2.0))

    total = vac
    term = vac
    for k in range(1, order + 1):
        term = pair_op(term)
        total = total.add(term, scale=tau**k / factorial(k))
    return total.normalized() if normalize else total


def attenuate(state: FockVector, mode: Mode, eta: float) -> list[FockVector]:
    """Exact loss channel: returns the unnormalized ensemble over photons lost.

    Branch ``k`` is the (pure) conditional state given that k photons of
    ``mode`` leaked into the environment; its weight is its squared norm.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    i = state.mode_index(mode)
    max_n = max((occ[i] for occ in state.amp), default=0)
    branches = []
    for k in range(max_n + 1):
        branch = FockVector(state.modes, state.n_max, truncation_loss=state.truncation_loss)
        for occ, a in state.amp.items():
            n = occ[i]
            if n < k:
                continue
            w = sqrt(comb(n, k)) * eta ** ((n - k) / 2.0) * (1.0 - eta) ** (k / 2.0)
            if w == 0.0:
                continue
            new = occ[:i] + (n - k,) + occ[i + 1 :]
            branch.amp[new] = branch.amp.get(new, 0.0) + a * w
        if branch.amp:
            branches.append(branch)
    return branches


def attenuate_ensemble(branches: list[FockVector], mode: Mode, eta: float) -> list[FockVector]:
    out = []
    for b in branches:
        out.extend(attenuate(b, mode, eta))
    return [b for b in out if b.norm_sq() > 1e-24]


def attenuate_sample(state: FockVector, mode: Mode, eta: float, rng: np.random.Generator) -> FockVector:
    """Sampling form of :func:`attenuate`: pick one loss branch by its weight."""
    branches = attenuate(state, mode, eta)
    weights = np.array([b.norm_sq() for b in branches])
    total = weights.sum()
    pick = rng.choice(len(branches), p=weights / total)
    return branches[pick].normalized()


DetectorBank = dict[str, tuple[Mode, ...]]


def detector_counts(state: FockVector, bank: DetectorBank) -> dict[tuple[int, ...], float]:
    """Weight of each detector photon-count vector (diagonal occupation statistics)."""
    names = list(bank)
    idx_sets = []
    for name in names:
        idx_sets.append([state.mode_index(m) for m in bank[name]])
    counts: dict[tuple[int, ...], float] = {}
    for occ, a in state.amp.items():
        vec = tuple(sum(occ[i] for i in idxs) for idxs in idx_sets)
        counts[vec] = counts.get(vec, 0.0) + abs(a) ** 2
    return counts


def _efficiencies(bank: DetectorBank, efficiency) -> list[float]:
    if isinstance(efficiency, dict):
        return [float(efficiency.get(name, 1.0)) for name in bank]
    return [float(efficiency)] * len(bank)


def pattern_distribution(state, bank: DetectorBank, efficiency=1.0) -> dict[frozenset, float]:
    """Probability of every click pattern under threshold detection.

    ``state`` may be a FockVector or an ensemble (list of unnormalized
    FockVectors).  Each photon is independently detected with the
    detector's efficiency; a detector clicks when it sees >= 1 photon.
    """
    branches = state if isinstance(state, list) else [state]
    names = list(bank)
    etas = _efficiencies(bank, efficiency)
    dist: dict[frozenset, float] = {}
    for branch in branches:
        for vec, w in detector_counts(branch, bank).items():
            _expand_pattern(vec, w, names, etas, dist)
    return dist


def _expand_pattern(vec, weight, names, etas, dist):
    # Each detector independently clicks with 1 - (1 - eta)^n.
    options = []
    for n, eta in zip(vec, etas):
        p_silent = (1.0 - eta) ** n
        options.append((p_silent, 1.0 - p_silent))
    patterns = [(frozenset(), weight)]
    for name, (p_silent, p_click) in zip(names, options):
        nxt = []
        for clicked, w in patterns:
            if p_silent > 0.0:
                nxt.append((clicked, w * p_silent))
            if p_click > 0.0:
                nxt.append((clicked | {name}, w * p_click))
        patterns = nxt
    for clicked, w in patterns:
        dist[clicked] = dist.get(clicked, 0.0) + w


def pattern_probability(state, bank: DetectorBank, clicked, efficiency=1.0) -> float:
    """Probability that exactly the named detectors click and all others stay silent."""
    clicked = frozenset(clicked)
    unknown = clicked - set(bank)
    if unknown:
        raise ValueError(f"pattern names detectors outside the bank: {sorted(unknown)}")
    return pattern_distribution(state, bank, efficiency).get(clicked, 0.0)
