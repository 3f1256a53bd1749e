"""Sampled frequency-domain scattering response E = A exp(i phi).

The table holds the complex backscatter amplitude on a strictly increasing
normalized frequency grid kappa = omega*a/c, normalized so that the
backscatter cross-section satisfies sigma/(pi a^2) = |E|^2, together with
provenance metadata.  CSV serialization round-trips bit-exactly.
"""

from dataclasses import dataclass, field
import cmath
import io

import numpy as np

__all__ = ["FsrSample", "FsrTable"]

_FMT = "{:.17g}"


@dataclass(frozen=True)
class FsrSample:
    """One frequency point of the backscatter response."""

    kappa: float
    e_complex: complex

    @property
    def a_amp(self):
        return abs(self.e_complex)

    @property
    def phi(self):
        return cmath.phase(self.e_complex)


@dataclass
class FsrTable:
    """Backscatter response samples over a frequency band, with provenance."""

    kappa: np.ndarray
    e_complex: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kappa = np.asarray(self.kappa, dtype=float)
        self.e_complex = np.asarray(self.e_complex, dtype=complex)
        if self.kappa.ndim != 1 or self.kappa.size == 0:
            raise ValueError("kappa grid must be a non-empty 1-D array")
        if self.e_complex.shape != self.kappa.shape:
            raise ValueError("one sample per grid point required")
        if not np.all(np.diff(self.kappa) > 0):
            raise ValueError("kappa grid must be strictly increasing")

    def __len__(self):
        return self.kappa.size

    @property
    def a_amp(self):
        return np.abs(self.e_complex)

    @property
    def phi(self):
        return np.angle(self.e_complex)

    def samples(self):
        return [FsrSample(float(k), complex(e)) for k, e in zip(self.kappa, self.e_complex)]

    def to_csv(self):
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key} = {self.metadata[key]}\n")
        buf.write("# columns: kappa, Re(E), Im(E), A, phi\n")
        for k, e in zip(self.kappa, self.e_complex):
            row = (k, e.real, e.imag, abs(e), cmath.phase(e))
            buf.write(",".join(_FMT.format(v) for v in row) + "\n")
        return buf.getvalue()

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text):
        metadata = {}
        kappa, ev = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    metadata[key.strip()] = value.strip()
                continue
            cells = line.split(",")
            kappa.append(float(cells[0]))
            ev.append(complex(float(cells[1]), float(cells[2])))
        return cls(np.array(kappa), np.array(ev), metadata)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_csv(fh.read())
