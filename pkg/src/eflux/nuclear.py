"""Vibrational eigenstates on a 1D potential curve and analytic wavepacket dynamics.

The eigensolver is a Fourier-grid (sinc-DVR) dense diagonalization, which is
spectrally accurate for the grid sizes used here.  A wavepacket is a real
coefficient vector over the eigenstates; time evolution multiplies analytic
phases, so any time can be evaluated directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .constants import HBAR_OVER_ME_BOHR2_FS, OMEGA_FS_PER_HARTREE
from .grids import NuclearGrid
from .stencils import derivative

CURVE_HEADER = "# nuclear-curve v1"


@dataclass(frozen=True, eq=False)
class PotentialCurve:
    """Potential energy curve V(Q) in hartree with the reduced mass in m_e."""

    grid: NuclearGrid
    values: np.ndarray
    reduced_mass: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError("potential values must match the grid size")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential curve contains non-finite values")
        if self.reduced_mass <= 0.0:
            raise ValueError("reduced mass must be positive")
        imin = int(np.argmin(v))
        if imin in (0, v.size - 1):
            raise ValueError("potential curve has no interior minimum (no bound states)")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def morse_omega_e(d_e: float, period_fs: float) -> float:
    """Harmonic frequency (hartree) whose 0->1 Morse spacing gives `period_fs`."""
    omega_01 = 2.0 * math.pi / (period_fs * OMEGA_FS_PER_HARTREE)
    disc = 1.0 - 2.0 * omega_01 / d_e
    if disc <= 0.0:
        raise ValueError("requested period too short for the given well depth")
    return d_e * (1.0 - math.sqrt(disc))


def morse_curve(
    grid: NuclearGrid,
    d_e: float,
    q_e: float,
    period_fs: float,
    reduced_mass: float,
) -> PotentialCurve:
    """Morse curve V = D_e (1 - exp(-a (Q - Q_e)))^2 with the width parameter
    chosen so the fundamental (0->1) spacing matches `period_fs`."""
    omega_e = morse_omega_e(d_e, period_fs)
    a = omega_e * math.sqrt(reduced_mass / (2.0 * d_e))
    v = d_e * (1.0 - np.exp(-a * (grid.points - q_e))) ** 2
    return PotentialCurve(grid, v, reduced_mass)


def save_curve(curve: PotentialCurve, path) -> None:
    with open(path, "w") as fh:
        fh.write(CURVE_HEADER + "\n")
        for q, v in zip(curve.grid.points, curve.values):
            fh.write(f"{q:.17g} {v:.17g}\n")


def load_curve(path, reduced_mass: float) -> PotentialCurve:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CURVE_HEADER:
            raise ValueError(f"not a nuclear curve file (missing '{CURVE_HEADER}')")
        rows = [line.split() for line in fh if line.strip() and not line.startswith("#")]
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("curve file must have two columns: Q and V")
    q, v = data[:, 0], data[:, 1]
    dq = np.diff(q)
    if not np.allclose(dq, dq[0], rtol=1e-9, atol=0.0):
        raise ValueError("curve file grid is not equidistant")
    grid = NuclearGrid.from_spacing(float(q[0]), float(q[-1]), float(dq[0]))
    return PotentialCurve(grid, v, reduced_mass)


@dataclass(frozen=True, eq=False)
class VibrationalBasis:
    """Orthonormal vibrational eigenstates chi_n(Q) with nuclear derivatives.

    `states`, `d1`, `d2` are (n_states, n_points) arrays in bohr^-1/2 units;
    energies are in hartree, ascending.
    """

    grid: NuclearGrid
    energies: np.ndarray
    states: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    reduced_mass: float

    def __post_init__(self):
        for name in ("energies", "states", "d1", "d2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_states(self) -> int:
        return self.energies.size

    def orthonormality_error(self) -> float:
        overlap = (self.states * self.grid.dq) @ self.states.T
        return float(np.max(np.abs(overlap - np.eye(self.n_states))))

    def omega_fs(self, m: int, n: int) -> float:
        """Angular frequency (E_m - E_n)/hbar in fs^-1."""
        return (self.energies[m] - self.energies[n]) * OMEGA_FS_PER_HARTREE


def _kinetic_matrix(n: int, dq: float, mass: float) -> np.ndarray:
    """Sinc-DVR kinetic energy on an equidistant grid (hbar = 1)."""
    k = math.pi / dq
    i = np.arange(n)
    diff = i[:, None] - i[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(diff == 0, k**2 / 3.0, 2.0 * k**2 / (math.pi**2 * diff**2))
    t *= np.where(diff % 2 == 0, 1.0, -1.0)
    return t / (2.0 * mass)


def solve_eigenstates(pes: PotentialCurve, n_states: int) -> VibrationalBasis:
    """Lowest `n_states` bound eigenpairs of the nuclear Hamiltonian on the grid.

    States are normalized to sum(chi^2) dq = 1 and sign-fixed so the first
    non-negligible lobe is positive.  Derivatives come from 5-point stencils
    (one-sided at the edges).
    """
    if n_states < 1:
        raise ValueError("n_states must be at least 1")
    grid = pes.grid
    h = _kinetic_matrix(grid.n_points, grid.dq, pes.reduced_mass)
    h[np.diag_indices_from(h)] += pes.values
    energies, vectors = np.linalg.eigh(h)

    plateau = min(pes.values[0], pes.values[-1])
    n_bound = int(np.searchsorted(energies, plateau))
    if n_bound < n_states:
        raise ValueError(
            f"potential supports only {n_bound} bound states below the "
            f"dissociation plateau; requested {n_states}"
        )

    states = vectors[:, :n_states].T / math.sqrt(grid.dq)
    for row in states:
        lobe = row[np.abs(row) > 1e-8 * np.max(np.abs(row))]
        if lobe.size and lobe[0] < 0.0:
            row *= -1.0
    d1 = derivative(states, grid.dq, axis=1, order=1)
    d2 = derivative(states, grid.dq, axis=1, order=2)
    return VibrationalBasis(grid, energies[:n_states], states, d1, d2, pes.reduced_mass)


@dataclass(frozen=True, eq=False)
class WavepacketState:
    """Real expansion coefficients over a vibrational basis at reference time t."""

    coeffs: np.ndarray
    basis: VibrationalBasis
    t: float = 0.0
    norm_deficit: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.coeffs, dtype=float)
        if a.shape != (self.basis.n_states,):
            raise ValueError("coefficient vector must match the basis size")
        norm2 = float(np.sum(a * a))
        if abs(norm2 - 1.0) > 1e-6:
            raise ValueError(f"coefficients not normalized: sum a^2 = {norm2}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "coeffs", a)


def _parse_shape(shape):
    if isinstance(shape, str):
        text = shape.strip()
        if text.startswith("shifted_ground(") and text.endswith(")"):
            return ("shifted_ground", float(text[len("shifted_ground(") : -1]))
        raise ValueError(f"unrecognized initial-shape spec: {shape!r}")
    if isinstance(shape, tuple) and len(shape) == 2 and shape[0] == "shifted_ground":
        return ("shifted_ground", float(shape[1]))
    return ("coeffs", np.asarray(shape, dtype=float))


def build_wavepacket(basis: VibrationalBasis, shape) -> WavepacketState:
    """Initial wavepacket from a shape spec.

    `shape` is either "shifted_ground(delta)" (ground state translated by
    delta bohr, re-interpolated, zero outside the grid) or an explicit
    coefficient vector.  Projection coefficients are renormalized and the
    pre-normalization deficit is recorded; a deficit above 5% is an error.
    """
    kind, payload = _parse_shape(shape)
    if kind == "coeffs":
        a = np.zeros(basis.n_states)
        if payload.size > basis.n_states:
            raise ValueError("coefficient vector longer than the basis")
        a[: payload.size] = payload
        norm2 = float(np.sum(a * a))
        if norm2 <= 0.0:
            raise ValueError("coefficient vector has zero norm")
        deficit = 1.0 - norm2
        if deficit > 0.05:
            raise ValueError(
                f"initial state loses {100 * deficit:.1f}% of its norm; "
                "use a larger basis"
            )
        if abs(norm2 - 1.0) > 1e-9:
            a = a / math.sqrt(norm2)
            return WavepacketState(a, basis, 0.0, deficit)
        return WavepacketState(a, basis, 0.0, max(deficit, 0.0))

    delta = payload
    q = basis.grid.points
    spline = CubicSpline(q, basis.states[0])
    shifted_arg = q - delta
    inside = (shifted_arg >= q[0]) & (shifted_arg <= q[-1])
    f = np.zeros_like(q)
    f[inside] = spline(shifted_arg[inside])
    a = (basis.states * basis.grid.dq) @ f
    norm2 = float(np.sum(a * a))
    deficit = 1.0 - norm2
    if norm2 <= 0.0 or deficit > 0.05:
        raise ValueError(
            f"shifted ground state loses {100 * deficit:.1f}% of its norm in "
            f"projection; use a larger basis or a smaller shift"
        )
    a = a / math.sqrt(norm2)
    return WavepacketState(a, basis, 0.0, deficit)


def evolve(state: WavepacketState, t_fs: float) -> np.ndarray:
    """Coefficients a_n exp(-i E_n t / hbar) at time t (fs)."""
    if not np.isfinite(t_fs):
        raise ValueError("time must be finite")
    phase = state.basis.energies * (OMEGA_FS_PER_HARTREE * t_fs)
    return state.coeffs * np.exp(-1j * phase)


@dataclass(frozen=True, eq=False)
class NuclearObservables:
    """Snapshot of nuclear-side observables at one time."""

    density: np.ndarray     # |chi(Q,t)|^2, bohr^-1
    flux: np.ndarray        # (hbar/mu) Im(chi* dchi/dQ), fs^-1
    mean_q: float           # bohr
    variance: float         # bohr^2


def nuclear_observables(state: WavepacketState, t_fs: float) -> NuclearObservables:
    c = evolve(state, t_fs)
    psi = c @ state.basis.states
    dpsi = c @ state.basis.d1
    density = np.abs(psi) ** 2
    flux = (HBAR_OVER_ME_BOHR2_FS / state.basis.reduced_mass) * np.imag(
        np.conj(psi) * dpsi
    )
    dq = state.basis.grid.dq
    q = state.basis.grid.points
    mean_q = float(np.sum(q * density) * dq)
    mean_q2 = float(np.sum(q * q * density) * dq)
    return NuclearObservables(density, flux, mean_q, mean_q2 - mean_q**2)


def _pair_matrix_element(basis: VibrationalBasis, values: np.ndarray) -> np.ndarray:
    """Matrix elements <m| f(Q) |n> over the basis states."""
    return (basis.states * values * basis.grid.dq) @ basis.states.T


def mean_q_series(state: WavepacketState, times_fs: np.ndarray) -> np.ndarray:
    """<Q>(t) evaluated from analytic phases for a batch of times."""
    return _expectation_series(state, times_fs, state.basis.grid.points)


def variance_series(state: WavepacketState, times_fs: np.ndarray) -> np.ndarray:
    """sigma^2(t) = <Q^2> - <Q>^2 for a batch of times."""
    q = state.basis.grid.points
    mean = _expectation_series(state, times_fs, q)
    mean2 = _expectation_series(state, times_fs, q * q)
    return mean2 - mean**2


def _expectation_series(
    state: WavepacketState, times_fs: np.ndarray, values: np.ndarray
) -> np.ndarray:
    basis = state.basis
    mat = _pair_matrix_element(basis, values)
    a = state.coeffs
    out = np.full(np.asarray(times_fs, dtype=float).shape, np.sum(a * a * np.diag(mat)))
    m_idx, n_idx = np.triu_indices(basis.n_states, k=1)
    if m_idx.size:
        omega = (basis.energies[m_idx] - basis.energies[n_idx]) * OMEGA_FS_PER_HARTREE
        weights = 2.0 * a[m_idx] * a[n_idx] * mat[m_idx, n_idx]
        t = np.atleast_1d(np.asarray(times_fs, dtype=float))
        out = out + (np.cos(np.outer(t, omega)) @ weights).reshape(out.shape)
    return out
