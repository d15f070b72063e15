"""Adiabatic electronic wavefunction scans on the observation plane.

Two sources are supported: a built-in two-center 1s model for the hydrogen
molecular ion (nuclei on the z axis at +-Q/2) and a text scan file produced
elsewhere.  A scan carries phi(r;Q), its in-plane gradient, and the first two
nuclear derivatives, everything real-valued.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grids import ElectronicGrid, NuclearGrid
from .nuclear import PotentialCurve
from .stencils import derivative

SCAN_HEADER = "# electronic-scan v1"

_BLOCK_NAMES = ("phi", "dphi_dx", "dphi_dz", "d1_q", "d2_q")


@dataclass(frozen=True, eq=False)
class ElectronicScan:
    """phi(r;Q) with in-plane gradient and nuclear derivatives on (nQ, nx, nz) arrays.

    `energies` optionally carries the electronic energy curve (plus nuclear
    repulsion) so a potential curve can be extracted from the scan.
    """

    e_grid: ElectronicGrid
    n_grid: NuclearGrid
    phi: np.ndarray
    dphi_dx: np.ndarray
    dphi_dz: np.ndarray
    d1_q: np.ndarray
    d2_q: np.ndarray
    energies: np.ndarray | None = None
    zeta: float | None = None

    def __post_init__(self):
        shape = (self.n_grid.n_points, self.e_grid.nx, self.e_grid.nz)
        for name in _BLOCK_NAMES:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"scan array {name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"scan array {name} contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.energies is not None:
            e = np.asarray(self.energies, dtype=float)
            if e.shape != (self.n_grid.n_points,):
                raise ValueError("energy column must have one value per Q point")
            if not np.all(np.isfinite(e)):
                raise ValueError("energy column contains non-finite values")
            e.setflags(write=False)
            object.__setattr__(self, "energies", e)

    def symmetry_defect(self) -> float:
        """Largest relative violation of phi(x,z) = phi(-x,z) = phi(x,-z)."""
        scale = float(np.max(np.abs(self.phi))) or 1.0
        dx = np.max(np.abs(self.phi - self.phi[:, ::-1, :]))
        dz = np.max(np.abs(self.phi - self.phi[:, :, ::-1]))
        return float(max(dx, dz)) / scale


def _overlap_1s(w: np.ndarray) -> np.ndarray:
    return np.exp(-w) * (1.0 + w + w * w / 3.0)


def lcao_energy_curve(q: np.ndarray, zeta: float) -> np.ndarray:
    """Ground-state energy of the two-center 1s model plus nuclear repulsion.

    Standard closed-form two-center integrals for equal 1s exponents:
    overlap S, two-center attraction K = <A|1/r_B|B>, and the point-charge
    Coulomb term J = <A|1/r_B|A>.
    """
    q = np.asarray(q, dtype=float)
    w = zeta * q
    s = _overlap_1s(w)
    k = zeta * np.exp(-w) * (1.0 + w)
    j = 1.0 / q - np.exp(-2.0 * w) * (zeta + 1.0 / q)
    h_aa = 0.5 * zeta**2 - zeta - j
    h_ab = -0.5 * zeta**2 * s + (zeta - 2.0) * k
    return (h_aa + h_ab) / (1.0 + s) + 1.0 / q


def lcao_scan(e_grid: ElectronicGrid, n_grid: NuclearGrid, zeta: float = 1.24) -> ElectronicScan:
    """Bonding combination of 1s orbitals at the two nuclei, normalized per Q.

    The in-plane gradient is analytic; nuclear derivatives use the 5-point
    stencil over Q.  Rejects Q ranges that put the nuclei inside the stencil
    half-width of the coalescence point.
    """
    if zeta <= 0.0:
        raise ValueError("orbital exponent must be positive")
    if n_grid.q_min < 6.0 * n_grid.dq:
        raise ValueError(
            "Q range extends below twice the 3-step stencil distance from zero; "
            "nuclei overlap the nuclear-derivative stencil"
        )
    q = n_grid.points[:, None, None]
    x = e_grid.x[None, :, None]
    z = e_grid.z[None, None, :]
    half = 0.5 * q
    r_a = np.sqrt(x * x + (z + half) ** 2)
    r_b = np.sqrt(x * x + (z - half) ** 2)
    pref = math.sqrt(zeta**3 / math.pi)
    s_a = pref * np.exp(-zeta * r_a)
    s_b = pref * np.exp(-zeta * r_b)
    norm = 1.0 / np.sqrt(2.0 + 2.0 * _overlap_1s(zeta * n_grid.points))
    norm = norm[:, None, None]
    phi = norm * (s_a + s_b)

    # at a nucleus the 1s cusp has no defined direction; the symmetric limit is 0
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_a = np.where(r_a > 0.0, 1.0 / r_a, 0.0)
        inv_b = np.where(r_b > 0.0, 1.0 / r_b, 0.0)
    dphi_dx = -zeta * norm * x * (s_a * inv_a + s_b * inv_b)
    dphi_dz = -zeta * norm * ((z + half) * s_a * inv_a + (z - half) * s_b * inv_b)

    d1_q = derivative(phi, n_grid.dq, axis=0, order=1)
    d2_q = derivative(phi, n_grid.dq, axis=0, order=2)
    energies = lcao_energy_curve(n_grid.points, zeta)
    return ElectronicScan(e_grid, n_grid, phi, dphi_dx, dphi_dz, d1_q, d2_q, energies, zeta)


def pes_from_scan(scan: ElectronicScan, reduced_mass: float) -> PotentialCurve:
    """Potential curve carried by the scan (model curve or file energy column)."""
    if scan.energies is None:
        raise ValueError(
            "scan carries no energy data; supply an explicit nuclear curve file "
            "('# nuclear-curve v1') instead"
        )
    return PotentialCurve(scan.n_grid, scan.energies, reduced_mass)


def save_scan(scan: ElectronicScan, path, blocks: tuple[str, ...] = _BLOCK_NAMES) -> None:
    """Write a scan as blank-line separated per-Q text blocks (one row per x)."""
    unknown = set(blocks) - set(_BLOCK_NAMES)
    if unknown:
        raise ValueError(f"unknown scan blocks: {sorted(unknown)}")
    if "phi" not in blocks:
        raise ValueError("the phi block is mandatory")
    g, n = scan.e_grid, scan.n_grid
    with open(path, "w") as fh:
        fh.write(SCAN_HEADER + "\n")
        fh.write(f"# x: {g.x_min:.17g} {g.x_max:.17g} {g.dx:.17g} {g.nx}\n")
        fh.write(f"# z: {g.z_min:.17g} {g.z_max:.17g} {g.dz:.17g} {g.nz}\n")
        fh.write(f"# q: {n.q_min:.17g} {n.q_max:.17g} {n.dq:.17g} {n.n_points}\n")
        fh.write(f"# blocks: {' '.join(b for b in _BLOCK_NAMES if b in blocks)}\n")
        fh.write(f"# energy: {0 if scan.energies is None else 1}\n")
        if scan.energies is not None:
            fh.write(" ".join(f"{e:.17g}" for e in scan.energies) + "\n\n")
        for iq in range(n.n_points):
            for name in _BLOCK_NAMES:
                if name not in blocks:
                    continue
                block = getattr(scan, name)[iq]
                for row in block:
                    fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
                fh.write("\n")


def _parse_axis_line(line: str, tag: str):
    parts = line.split(":", 1)
    if len(parts) != 2 or parts[0].strip() != f"# {tag}":
        raise ValueError(f"malformed scan header line: {line!r}")
    vals = parts[1].split()
    return float(vals[0]), float(vals[1]), float(vals[2]), int(vals[3])


def load_scan(path) -> ElectronicScan:
    """Read a scan file; derivative blocks absent from the file are recomputed.

    Dimension mismatches and non-finite payloads are errors; a broken x/z
    mirror symmetry only warns, since externally computed systems need not be
    homonuclear.
    """
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SCAN_HEADER:
            raise ValueError(f"not an electronic scan file (missing '{SCAN_HEADER}')")
        x_min, x_max, dx, nx = _parse_axis_line(fh.readline(), "x")
        z_min, z_max, dz, nz = _parse_axis_line(fh.readline(), "z")
        q_min, q_max, dq, nq = _parse_axis_line(fh.readline(), "q")
        blocks_line = fh.readline().strip()
        if not blocks_line.startswith("# blocks:"):
            raise ValueError("scan header is missing the blocks line")
        blocks = tuple(blocks_line.split(":", 1)[1].split())
        energy_line = fh.readline().strip()
        if not energy_line.startswith("# energy:"):
            raise ValueError("scan header is missing the energy flag")
        has_energy = bool(int(energy_line.split(":", 1)[1]))
        payload = fh.read().split()

    e_grid = ElectronicGrid(x_min, x_max, dx, z_min, z_max, dz)
    n_grid = NuclearGrid.from_spacing(q_min, q_max, dq)
    if (e_grid.nx, e_grid.nz, n_grid.n_points) != (nx, nz, nq):
        raise ValueError("scan header point counts disagree with the stated ranges")

    expected = nq * nx * nz * len(blocks) + (nq if has_energy else 0)
    if len(payload) != expected:
        raise ValueError(
            f"scan payload has {len(payload)} numbers, expected {expected} "
            "(dimension mismatch between header and payload)"
        )
    values = np.array(payload, dtype=float)
    pos = 0
    energies = None
    if has_energy:
        energies = values[:nq]
        pos = nq
    per_slice = nx * nz
    data = {name: np.empty((nq, nx, nz)) for name in blocks}
    for iq in range(nq):
        for name in blocks:
            data[name][iq] = values[pos : pos + per_slice].reshape(nx, nz)
            pos += per_slice

    phi = data.get("phi")
    if phi is None:
        raise ValueError("scan file carries no phi block")
    dphi_dx = data.get("dphi_dx")
    if dphi_dx is None:
        dphi_dx = derivative(phi, e_grid.dx, axis=1, order=1)
    dphi_dz = data.get("dphi_dz")
    if dphi_dz is None:
        dphi_dz = derivative(phi, e_grid.dz, axis=2, order=1)
    d1_q = data.get("d1_q")
    if d1_q is None:
        d1_q = derivative(phi, n_grid.dq, axis=0, order=1)
    d2_q = data.get("d2_q")
    if d2_q is None:
        d2_q = derivative(phi, n_grid.dq, axis=0, order=2)

    scan = ElectronicScan(e_grid, n_grid, phi, dphi_dx, dphi_dz, d1_q, d2_q, energies)
    defect = scan.symmetry_defect()
    if defect > 1e-10:
        warnings.warn(
            f"loaded scan breaks x/z mirror symmetry at relative level {defect:.2e}",
            stacklevel=2,
        )
    return scan
