"""Knot topology of non-Hermitian two-band lattices, at desk scale.

Subpackages: :mod:`nhknot.model` (Bloch Hamiltonians and presets),
:mod:`nhknot.spectra` (band tracking, braid winding, phase labels),
:mod:`nhknot.berry` (biorthogonal global Berry phases),
:mod:`nhknot.evolve` (non-Hermitian dynamics and quasi-momentum fits),
:mod:`nhknot.dilation` (Hermitian two-qubit dilation and pulse schedules),
:mod:`nhknot.nvsim` (noisy four-level spin simulation),
:mod:`nhknot.tomo` (nine-sequence pure-state tomography),
:mod:`nhknot.cli` (file-based command-line front end).
"""

from importlib import metadata

try:
    __version__ = metadata.version("nhknot")
except metadata.PackageNotFoundError:  # pragma: no cover - source tree use
    __version__ = "0.0.0"

__all__ = [
    "model", "spectra", "berry", "evolve", "dilation", "nvsim", "tomo", "cli",
]
