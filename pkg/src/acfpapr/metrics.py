"""Empirical PAPR distributions (CCDF) and their readout at a probability level."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .link import Link, papr_batch, run_batches, spans
from .ofdm import OfdmConfig


@dataclass(frozen=True)
class CcdfCurve:
    """Empirical ``Pr[PAPR > gamma]`` from a set of PAPR samples in dB."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if s.size == 0:
            raise ValueError("a CCDF needs at least one sample")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def size(self) -> int:
        return self.samples.size

    def ccdf(self, gamma_db):
        """Fraction of samples strictly above ``gamma_db``."""
        above = self.size - np.searchsorted(self.samples, gamma_db, side="right")
        out = above / self.size
        return out if np.ndim(out) else float(out)

    def steps(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct sample values and the CCDF evaluated at each."""
        x = np.unique(self.samples)
        return x, self.ccdf(x)

    def papr_at_ccdf(self, level: float) -> float:
        return papr_at_ccdf(self, level)

    def to_csv(self, path) -> None:
        x, y = self.steps()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["papr_dB", "ccdf_probability"])
            for a, b in zip(x, y):
                w.writerow([repr(float(a)), repr(float(b))])


def papr_at_ccdf(curve: CcdfCurve, level: float) -> float:
    """Smallest sample ``gamma`` with ``ccdf(gamma) <= level``.

    With sorted samples ``s_1 <= ... <= s_M`` and no ties this is
    ``s_{ceil(M (1 - level))}``. Warns when fewer than 10 samples lie beyond
    the level, or when the level is at or below the curve's first step.
    """
    if not 0 < level < 1:
        raise ValueError(f"CCDF level must lie in (0, 1), got {level}")
    m = curve.size
    if m * level < 10:
        warnings.warn(
            f"only {m * level:.1f} expected exceedances at level {level}; readout is noisy",
            RuntimeWarning, stacklevel=2,
        )
    x, y = curve.steps()
    idx = int(np.argmax(y <= level))
    if idx == 0 and level >= 1 - 1 / m:
        warnings.warn(
            f"level {level} is below the curve's resolution (1/{m}); returning the minimum sample",
            RuntimeWarning, stacklevel=2,
        )
    return float(x[idx])


def collect_papr(cfg: OfdmConfig, pipeline: str, cr: float | None, trials: int, seed: int,
                 link: Link | None = None, workers: int = 1, batch: int = 256) -> CcdfCurve:
    """PAPR distribution of ``trials`` random blocks through one pipeline.

    Block ``i`` uses random bits fixed by ``(seed, i)``, so the curve is the
    same for any ``workers``/``batch`` split and pipelines compared at the same
    seed see the same data.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    link = link or Link.build(cfg)
    if link.cfg != cfg:
        raise ValueError("link was built for a different configuration")
    parts = run_batches(papr_batch, (link, pipeline, cr, seed), spans(trials, batch), workers)
    return CcdfCurve(np.concatenate(parts))
