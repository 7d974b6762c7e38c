"""Markov partition of the hyperbolic automorphism [[2,1],[1,1]] of the torus.

Everything is done in the orthonormal eigenframe scaled by nu0 = (phi+2)^{-1/2}
("golden units"), where the integer lattice becomes {m (phi,1) + n (1,-phi)}
and the map acts as diag(phi^2, phi^-2).  Corner data then lives in
Z[phities] = {p + q phi} with rational p, q, so the partition and its
refinements are exact.

The base tiling has three rectangles cut out by a stable and an unstable
segment through the fixed point:

    R1 = [0, phi] x [0, 1]
    R2 = [0, 1]   x [-phi, 0]
    R3 = [1, phi] x [1 - phi, 0]

Refining each face by one preimage step yields seven strips whose transition
structure is a 0-1 subshift of finite type with spectral radius phi^2; these
strips are the default partition elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = ["Golden", "MarkovPartition", "default_partition", "PHI", "LAMBDA"]

_SQRT5 = math.sqrt(5.0)
_PHI_F = (1.0 + _SQRT5) / 2.0


class Golden:
    """Exact element p + q*phi of Q[phi], phi^2 = phi + 1."""

    __slots__ = ("p", "q")

    def __init__(self, p=0, q=0):
        self.p = Fraction(p)
        self.q = Fraction(q)

    @staticmethod
    def _coerce(x):
        return x if isinstance(x, Golden) else Golden(x)

    def __add__(self, o):
        o = Golden._coerce(o)
        return Golden(self.p + o.p, self.q + o.q)

    __radd__ = __add__

    def __sub__(self, o):
        o = Golden._coerce(o)
        return Golden(self.p - o.p, self.q - o.q)

    def __rsub__(self, o):
        return Golden._coerce(o) - self

    def __neg__(self):
        return Golden(-self.p, -self.q)

    def __mul__(self, o):
        o = Golden._coerce(o)
        return Golden(
            self.p * o.p + self.q * o.q,
            self.p * o.q + self.q * o.p + self.q * o.q,
        )

    __rmul__ = __mul__

    def inverse(self):
        d = self.p * self.p + self.p * self.q - self.q * self.q
        if d == 0:
            raise ZeroDivisionError("zero golden number")
        return Golden((self.p + self.q) / d, -self.q / d)

    def __float__(self):
        return float(self.p) + float(self.q) * _PHI_F

    def __eq__(self, o):
        o = Golden._coerce(o)
        return self.p == o.p and self.q == o.q

    def __hash__(self):
        return hash((self.p, self.q))

    def __lt__(self, o):
        return float(self) < float(Golden._coerce(o)) - 1e-12

    def __le__(self, o):
        return self == Golden._coerce(o) or self < o

    def __gt__(self, o):
        return float(self) > float(Golden._coerce(o)) + 1e-12

    def __ge__(self, o):
        return self == Golden._coerce(o) or self > o

    def __repr__(self):
        return f"Golden({self.p}, {self.q})"


PHI = Golden(0, 1)
LAMBDA = PHI * PHI          # eigenvalue of [[2,1],[1,1]]
ILAMBDA = Golden(2, -1)     # 1/lambda = 2 - phi
NU0 = 1.0 / math.sqrt(_PHI_F + 2.0)

# lattice generators in golden units
_W1 = (PHI, Golden(1))
_W2 = (Golden(1), -PHI)


@dataclass(frozen=True)
class Box:
    """Axis rectangle [xlo, xhi] x [ylo, yhi] in golden units."""

    xlo: Golden
    xhi: Golden
    ylo: Golden
    yhi: Golden

    def floats(self):
        return tuple(float(v) for v in (self.xlo, self.xhi, self.ylo, self.yhi))

    def translate(self, m, n):
        dx = m * _W1[0] + n * _W2[0]
        dy = m * _W1[1] + n * _W2[1]
        return Box(self.xlo + dx, self.xhi + dx, self.ylo + dy, self.yhi + dy)

    def image(self):
        return Box(self.xlo * LAMBDA, self.xhi * LAMBDA, self.ylo * ILAMBDA, self.yhi * ILAMBDA)

    def preimage(self):
        return Box(self.xlo * ILAMBDA, self.xhi * ILAMBDA, self.ylo * LAMBDA, self.yhi * LAMBDA)

    def intersect(self, o):
        xlo = self.xlo if self.xlo >= o.xlo else o.xlo
        xhi = self.xhi if self.xhi <= o.xhi else o.xhi
        ylo = self.ylo if self.ylo >= o.ylo else o.ylo
        yhi = self.yhi if self.yhi <= o.yhi else o.yhi
        if float(xhi) - float(xlo) > 1e-12 and float(yhi) - float(ylo) > 1e-12:
            return Box(xlo, xhi, ylo, yhi)
        return None


_FACES = (
    Box(Golden(0), PHI, Golden(0), Golden(1)),
    Box(Golden(0), Golden(1), -PHI, Golden(0)),
    Box(Golden(1), PHI, Golden(1) - PHI, Golden(0)),
)


def _strip_decomposition():
    """Strips: connected components of F_i cap T^{-1}(F_j + lattice).

    Each is a full-height xi-subinterval of its face; the image under T is the
    full unstable extent of the target face, so strip -> strip transitions are
    allowed exactly when the target face matches."""
    strips = []
    for i, fi in enumerate(_FACES):
        cuts = []
        for j, fj in enumerate(_FACES):
            for m in range(-3, 4):
                for n in range(-3, 4):
                    pre = fj.translate(m, n).preimage()
                    iv = fi.intersect(pre)
                    if iv is None:
                        continue
                    if not (iv.ylo == fi.ylo and iv.yhi == fi.yhi):
                        raise AssertionError("strip is not full height: partition broken")
                    cuts.append((iv.xlo, iv.xhi, j, (m, n)))
        cuts.sort(key=lambda c: float(c[0]))
        for xlo, xhi, j, mn in cuts:
            strips.append(
                {
                    "face": i,
                    "target": j,
                    "box": Box(xlo, xhi, fi.ylo, fi.yhi),
                    "translate": mn,
                }
            )
    return strips


class MarkovPartition:
    """The seven-strip Markov partition (exact) with float lookups.

    A custom strip list (from a descriptor) may be supplied; it must pass
    ``self_test`` to be trusted."""

    def __init__(self, strips=None):
        self.faces = _FACES
        self.strips = strips if strips is not None else _strip_decomposition()
        self.adjacency = np.zeros((len(self.strips), len(self.strips)), dtype=np.int64)
        for a, sa in enumerate(self.strips):
            for b, sb in enumerate(self.strips):
                if sb["face"] == sa["target"]:
                    self.adjacency[a, b] = 1
        # float geometry for fast lookups
        self._face_boxes = np.array([f.floats() for f in self.faces])
        self._strip_boxes = np.array([s["box"].floats() for s in self.strips])
        self._strip_face = np.array([s["face"] for s in self.strips])
        # eigenframe rows (unit vectors) over nu0
        u = np.array([1.0, _PHI_F - 1.0])
        s = np.array([1.0, -_PHI_F])
        self.frame = np.stack([u / np.linalg.norm(u), s / np.linalg.norm(s)]) / NU0
        # all lattice translates relevant for canonical reduction
        self._translates = []
        for m in range(-3, 4):
            for n in range(-3, 4):
                dx = float(m * _W1[0] + n * _W2[0])
                dy = float(m * _W1[1] + n * _W2[1])
                self._translates.append((dx, dy))
        self._translates = np.array(self._translates)

    @property
    def n_strips(self):
        return len(self.strips)

    def to_golden(self, xy):
        """Torus points (m,2) in [0,1)^2 -> golden-unit eigenframe coords of
        the centered representative."""
        xy = np.atleast_2d(np.asarray(xy, float))
        c = xy - np.round(xy)
        return c @ self.frame.T

    def from_golden(self, z):
        """Golden-unit coords -> torus points in [0,1)^2."""
        z = np.atleast_2d(np.asarray(z, float))
        xy = z @ np.linalg.inv(self.frame).T
        return xy % 1.0

    def locate(self, xy, tol=1e-9):
        """Strip index per torus point (-1 near the cut set)."""
        z = self.to_golden(xy)
        out = np.full(len(z), -1, dtype=np.int64)
        boxes = self._strip_boxes
        for t in range(len(self._translates)):
            zz = z - self._translates[t]
            for k in range(len(boxes)):
                xlo, xhi, ylo, yhi = boxes[k]
                hit = (
                    (out == -1)
                    & (zz[:, 0] > xlo + tol)
                    & (zz[:, 0] < xhi - tol)
                    & (zz[:, 1] > ylo + tol)
                    & (zz[:, 1] < yhi - tol)
                )
                out[hit] = k
        return out

    def strip_box_real(self, k):
        """Strip rectangle in real units: (corner_xy, u_extent, s_extent)."""
        xlo, xhi, ylo, yhi = self.strips[k]["box"].floats()
        return xlo * NU0, xhi * NU0, ylo * NU0, yhi * NU0

    def sample_strip(self, k, nx, ny, margin=1e-6):
        """Grid of torus points filling strip k (golden box coordinates)."""
        xlo, xhi, ylo, yhi = self.strips[k]["box"].floats()
        fx = (np.arange(nx) + 0.5) / nx
        fy = (np.arange(ny) + 0.5) / ny
        gx = xlo + (xhi - xlo) * (margin + (1 - 2 * margin) * fx)
        gy = ylo + (yhi - ylo) * (margin + (1 - 2 * margin) * fy)
        Z = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1).reshape(-1, 2)
        return self.from_golden(Z)

    # -- symbolic counting -------------------------------------------------

    def first_return_counts(self, base, n_max):
        """Exact counts S_n of first-return words to strip ``base``.

        S_n = number of admissible words base, a_1, .., a_{n-1}, base with
        a_k != base, counted by powers of the restricted adjacency."""
        A = self.adjacency
        m = self.n_strips
        idx = [k for k in range(m) if k != base]
        B = A[np.ix_(idx, idx)].astype(object)
        u = A[base, idx].astype(object)
        v = A[idx, base].astype(object)
        counts = [int(A[base, base])]
        vec = v.copy()
        for _ in range(2, n_max + 1):
            counts.append(int(u @ vec))
            vec = B @ vec
        return counts

    def subshift_growth(self, base):
        """Spectral radius of the adjacency with the base strip removed."""
        idx = [k for k in range(self.n_strips) if k != base]
        B = self.adjacency[np.ix_(idx, idx)].astype(float)
        return float(np.max(np.abs(np.linalg.eigvals(B))))

    # -- validation ---------------------------------------------------------

    def self_test(self, samples_per_strip=64, seed=0):
        """Markov self-test: T maps every strip onto the full unstable extent
        of its target face, within its stable extent; tiling is verified by
        locating random torus points."""
        rng = np.random.default_rng(seed)
        report = {"strips": self.n_strips, "failures": []}
        T = np.array([[2.0, 1.0], [1.0, 1.0]])
        lam = float(LAMBDA)
        for k, st in enumerate(self.strips):
            pts = self.sample_strip(k, 8, max(samples_per_strip // 8, 1), margin=1e-3)
            img = (pts @ T.T) % 1.0
            z = self.to_golden(img)
            fb = self.faces[st["target"]]
            xlo, xhi, ylo, yhi = (float(fb.xlo), float(fb.xhi), float(fb.ylo), float(fb.yhi))
            ok = np.zeros(len(z), bool)
            for t in self._translates:
                zz = z - t
                ok |= (
                    (zz[:, 0] > xlo - 1e-9)
                    & (zz[:, 0] < xhi + 1e-9)
                    & (zz[:, 1] > ylo - 1e-9)
                    & (zz[:, 1] < yhi + 1e-9)
                )
            if not ok.all():
                report["failures"].append(("image containment", k, int((~ok).sum())))
            # unstable extent of the image must cover the target face exactly
            b = st["box"]
            if not (
                b.xlo * LAMBDA == b.xlo * LAMBDA  # exactness sanity
            ):
                report["failures"].append(("arithmetic", k, 0))
            got = (float(b.xhi) - float(b.xlo)) * lam
            want = xhi - xlo
            if abs(got - want) > 1e-9:
                report["failures"].append(("unstable crossing width", k, got - want))
        pts = rng.random((512, 2))
        loc = self.locate(pts, tol=1e-12)
        miss = int((loc < 0).sum())
        if miss > 2:  # cut set has measure zero; allow grazing hits
            report["failures"].append(("tiling coverage", -1, miss))
        report["ok"] = not report["failures"]
        return report

    def descriptor(self):
        return {
            "kind": "golden_cat_partition",
            "strips": [
                {
                    "face": s["face"],
                    "target": s["target"],
                    "box_pq": [
                        [str(v.p), str(v.q)]
                        for v in (s["box"].xlo, s["box"].xhi, s["box"].ylo, s["box"].yhi)
                    ],
                }
                for s in self.strips
            ],
        }

    @classmethod
    def from_descriptor(cls, desc, validate=True):
        if desc.get("kind") != "golden_cat_partition":
            raise ValueError("unsupported partition descriptor kind")
        strips = []
        for s in desc["strips"]:
            vals = [Golden(Fraction(p), Fraction(q)) for p, q in s["box_pq"]]
            strips.append(
                {
                    "face": int(s["face"]),
                    "target": int(s["target"]),
                    "box": Box(*vals),
                    "translate": None,
                }
            )
        part = cls(strips=strips)
        if validate:
            rep = part.self_test()
            if not rep["ok"]:
                raise ValueError(f"partition descriptor failed the Markov self-test: {rep['failures']}")
        return part


_default = None


def default_partition():
    global _default
    if _default is None:
        _default = MarkovPartition()
    return _default
