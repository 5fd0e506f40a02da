"""Content-addressed disk cache for spectral quantities.

Dirichlet spectra and per-mu characteristic/Weyl data are keyed by a
hash of the effective-potential grid together with the integrator
tolerances, so a warm cache can never serve data for a different
problem.  Files are JSON and written atomically; the cache directory
comes from the constructor or the CALDERON_CACHE environment variable,
and a cache rooted at None is a no-op passthrough.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from typing import Dict, List, Optional

import numpy as np

from ..grid import GridFunction
from ..ode import DEFAULT_ATOL, DEFAULT_RTOL
from ..sturm import (
    DirichletSpectrum,
    ScaledValue,
    SpectralData,
    dirichlet_spectrum,
    spectral_data_batch,
)


def cache_root(explicit: Optional[str] = None) -> Optional[str]:
    return explicit if explicit is not None else os.environ.get("CALDERON_CACHE")


def _q_hash(Q: GridFunction, rtol: float, atol: float) -> str:
    h = hashlib.sha256()
    h.update(Q.values.tobytes())
    h.update(f"|{Q.n_points}|{rtol:.3e}|{atol:.3e}".encode())
    return h.hexdigest()[:24]


def _atomic_write(path: str, payload: dict) -> None:
    d = os.path.dirname(path)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, sort_keys=True)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class SpectralCache:
    """Disk cache; all methods fall back to direct computation when the
    root directory is unset."""

    def __init__(self, root: Optional[str] = None):
        self.root = cache_root(root)
        if self.root:
            os.makedirs(self.root, exist_ok=True)

    # -- Dirichlet spectra ------------------------------------------------
    def dirichlet_spectrum(
        self,
        Q: GridFunction,
        count: int,
        rtol: float = DEFAULT_RTOL,
        atol: float = DEFAULT_ATOL,
    ) -> DirichletSpectrum:
        if not self.root:
            return dirichlet_spectrum(Q, count, rtol=rtol, atol=atol)
        path = os.path.join(self.root, f"spec_{_q_hash(Q, rtol, atol)}.json")
        alphas: List[float] = []
        if os.path.exists(path):
            with open(path) as fh:
                alphas = json.load(fh)["alphas"]
        if len(alphas) >= count:
            return DirichletSpectrum(Q, np.array(alphas[:count]), rtol=rtol, atol=atol)
        spectrum = dirichlet_spectrum(Q, count, rtol=rtol, atol=atol)
        _atomic_write(path, {"alphas": list(map(float, spectrum.alphas))})
        return spectrum

    # -- per-mu characteristic / Weyl data ---------------------------------
    @staticmethod
    def _mu_key(mu: float) -> str:
        return f"{float(mu):.9e}"

    def spectral_data(
        self,
        Q: GridFunction,
        mus,
        rtol: float = DEFAULT_RTOL,
        atol: float = DEFAULT_ATOL,
    ) -> List[SpectralData]:
        mus = np.atleast_1d(np.asarray(mus, dtype=float))
        if not self.root:
            return spectral_data_batch(Q, mus, rtol=rtol, atol=atol)
        path = os.path.join(self.root, f"mu_{_q_hash(Q, rtol, atol)}.json")
        table: Dict[str, list] = {}
        if os.path.exists(path):
            with open(path) as fh:
                table = json.load(fh)
        missing = [m for m in mus if self._mu_key(m) not in table]
        if missing:
            for sd in spectral_data_batch(Q, missing, rtol=rtol, atol=atol):
                table[self._mu_key(sd.mu)] = [
                    sd.delta.mantissa,
                    sd.delta.log_scale,
                    sd.m,
                    sd.n_fn,
                    sd.delta_from_right.mantissa,
                    sd.delta_from_right.log_scale,
                ]
            _atomic_write(path, table)
        out = []
        for m in mus:
            dm, dl, mv, nv, rm, rl = table[self._mu_key(m)]
            out.append(
                SpectralData(
                    mu=float(m),
                    delta=ScaledValue(dm, dl),
                    m=mv,
                    n_fn=nv,
                    delta_from_right=ScaledValue(rm, rl),
                )
            )
        return out
