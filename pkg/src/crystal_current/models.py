"""Bloch-Hamiltonian families k -> H_k with analytic directional derivatives.

Three families:

* a two-band honeycomb model with staggered on-site mass g and complex
  second-neighbour hopping t2 (``HaldaneModel``),
* the linear two-band crossing H_k = vF k.sigma (``DiracModel``),
* a generic tight-binding constructor from a hopping list (``TBModel``).

Lattice-periodic two-band models additionally expose a "plane-wave
representation": per matrix entry, term lists (d_m, a_m) with
H_entry(k) = sum_m a_m e^{i k.d_m}. The propagation kernels consume this
directly (each term advances by a constant rotation along a linear drift
in k), and analytic derivatives of any order are term-wise products with
i(e.d_m).

Orbital-embedded gauge throughout: H_ab(k) = sum_R t_ab(R)
e^{i k.(R + tau_b - tau_a)}, which makes the quasi-periodicity unitaries
T_K diagonal.
"""

from dataclasses import dataclass

import numpy as np

from .lattice import Lattice2D, honeycomb_lattice

__all__ = [
    "BlochModel", "PlaneWaveTerms", "HaldaneParams", "HaldaneModel",
    "DiracModel", "TBModel", "HoppingList", "haldane_fiber", "haldane_deriv",
    "dirac_fiber", "tb_fiber", "quasi_period_unitary", "load_hopping_list",
    "dirac_points", "fermi_velocity",
]


@dataclass(frozen=True)
class PlaneWaveTerms:
    """Term lists for a 2x2 fiber: entry(k) = sum_m amps[m] e^{i k.disps[m]}.

    d00/a00 and d11/a11 describe the (real) diagonal entries, d10/a10 the
    lower-left entry; H01 = conj(H10) by Hermiticity.
    """

    d00: np.ndarray
    a00: np.ndarray
    d11: np.ndarray
    a11: np.ndarray
    d10: np.ndarray
    a10: np.ndarray

    def arrays(self):
        return (self.d00, self.a00, self.d11, self.a11, self.d10, self.a10)


def _pw_entry(disps, amps, k):
    return amps @ np.exp(1j * (np.asarray(disps) @ np.asarray(k, dtype=float)))


def _pw_fiber(terms, k):
    h00 = _pw_entry(terms.d00, terms.a00, k)
    h11 = _pw_entry(terms.d11, terms.a11, k)
    h10 = _pw_entry(terms.d10, terms.a10, k)
    return np.array([[h00.real, np.conj(h10)], [h10, h11.real]])


def _pw_deriv(terms, k, e):
    e = np.asarray(e, dtype=float)
    out = []
    for d, a in ((terms.d00, terms.a00), (terms.d11, terms.a11),
                 (terms.d10, terms.a10)):
        out.append(_pw_entry(d, 1j * (np.asarray(d) @ e) * a, k))
    h00, h11, h10 = out
    return np.array([[h00.real, np.conj(h10)], [h10, h11.real]])


class BlochModel:
    """Base class: immutable family k -> H_k of M x M Hermitian fibers."""

    lattice: Lattice2D | None = None
    dim: int = 0
    tau: np.ndarray | None = None  # orbital positions, shape (M, 2)

    def fiber(self, k):
        raise NotImplementedError

    def deriv(self, k, e):
        """Directional derivative e . grad_k H_k (e need not be normalized)."""
        raise NotImplementedError

    def planewave_terms(self):
        """PlaneWaveTerms for 2-band lattice models, else None."""
        return None

    def norm_estimate(self):
        """Cheap upper estimate of max_k ||H_k|| (used for step control)."""
        pw = self.planewave_terms()
        if pw is None:
            raise NotImplementedError
        row0 = np.sum(np.abs(pw.a00)) + np.sum(np.abs(pw.a10))
        row1 = np.sum(np.abs(pw.a11)) + np.sum(np.abs(pw.a10))
        return max(row0, row1)


@dataclass(frozen=True)
class HaldaneParams:
    """On-site mass g and second-neighbour amplitude t2 (energy units)."""

    g: float = 1.0
    t2: float = 0.0


def _haldane_geometry():
    lat = honeycomb_lattice()
    s3 = np.sqrt(3.0)
    deltas = np.array([[1.0 / s3, 0.0],
                       [-1.0 / (2.0 * s3), 0.5],
                       [-1.0 / (2.0 * s3), -0.5]])
    return lat, deltas


class HaldaneModel(BlochModel):
    """Two-band honeycomb model.

    H_k = [[m(k), conj f(k)], [f(k), -m(k)]] with
    m(k) = g - 2 t2 (sin k.a1 + sin k.a2 + sin k.(a1 - a2)) and
    f(k) = sum_i e^{i k.delta_i} over the three nearest-neighbour bonds.
    Orbital positions tau = [delta_1, 0]. The sine orientation is fixed so
    that g = 1, t2 = -1 is a Chern-number +1 insulator (curvature measured
    in the standard (k1, k2) orientation).
    """

    dim = 2

    def __init__(self, g=1.0, t2=0.0):
        self.params = HaldaneParams(float(g), float(t2))
        lat, deltas = _haldane_geometry()
        self.lattice = lat
        self.deltas = deltas
        self.tau = np.array([deltas[0], [0.0, 0.0]])
        # plane-wave rep: -2 t2 sin(k.v) = i t2 e^{ik.v} - i t2 e^{-ik.v}
        vs = np.array([lat.a1, lat.a2, lat.a1 - lat.a2])
        d00 = np.vstack([[[0.0, 0.0]], vs, -vs])
        a00 = np.concatenate([[g], np.full(3, 1j * self.params.t2),
                              np.full(3, -1j * self.params.t2)])
        self._terms = PlaneWaveTerms(d00, a00, d00.copy(), -a00,
                                     deltas.copy(), np.ones(3, complex))

    def mass(self, k):
        g, t2 = self.params.g, self.params.t2
        lat = self.lattice
        k = np.asarray(k, dtype=float)
        return g - 2.0 * t2 * (np.sin(k @ lat.a1) + np.sin(k @ lat.a2)
                               + np.sin(k @ (lat.a1 - lat.a2)))

    def f(self, k):
        return np.sum(np.exp(1j * (self.deltas @ np.asarray(k, dtype=float))))

    def fiber(self, k):
        m, f = self.mass(k), self.f(k)
        return np.array([[m, np.conj(f)], [f, -m]])

    def deriv(self, k, e):
        return _pw_deriv(self._terms, k, e)

    def planewave_terms(self):
        return self._terms


def haldane_fiber(k, p):
    """H_k of the honeycomb model for parameters p (mu_F plays no role here)."""
    return HaldaneModel(p.g, p.t2).fiber(k)


def haldane_deriv(k, e, p):
    """Exact directional derivative e . grad_k of haldane_fiber."""
    return HaldaneModel(p.g, p.t2).deriv(k, e)


class DiracModel(BlochModel):
    """H_k = vF (k1 sigma1 + k2 sigma2); not lattice-periodic."""

    dim = 2

    def __init__(self, vF=1.0):
        self.vF = float(vF)

    def fiber(self, k):
        z = self.vF * (k[0] + 1j * k[1])
        return np.array([[0.0, np.conj(z)], [z, 0.0]])

    def deriv(self, k, e):
        z = self.vF * (e[0] + 1j * e[1])
        return np.array([[0.0, np.conj(z)], [z, 0.0]])


def dirac_fiber(k, vF):
    return DiracModel(vF).fiber(k)


@dataclass(frozen=True)
class HoppingList:
    """Entries (a, b, R, t): amplitude t for hopping b -> a across cell R.

    Must be closed under Hermitian conjugation: (a, b, R, t) implies
    (b, a, -R, conj t). `tau` holds the orbital positions.
    """

    entries: tuple  # of (a, b, (R1, R2), complex)
    tau: np.ndarray
    lattice: Lattice2D

    def __post_init__(self):
        index = {(a, b, R): t for a, b, R, t in self.entries}
        for (a, b, R), t in index.items():
            partner = index.get((b, a, (-R[0], -R[1])))
            if partner is None or abs(partner - np.conj(t)) > 1e-12:
                raise ValueError(
                    f"hopping list not Hermitian at entry ({a},{b},{R})")


class TBModel(BlochModel):
    """Generic tight-binding fiber from a HoppingList (orbital-embedded gauge)."""

    def __init__(self, hoppings):
        self.hoppings = hoppings
        self.lattice = hoppings.lattice
        self.tau = np.asarray(hoppings.tau, dtype=float)
        self.dim = len(self.tau)
        lat = self.lattice
        # per-entry displacement R + tau_b - tau_a and amplitude
        self._disp = {}
        for a, b, R, t in hoppings.entries:
            d = R[0] * lat.a1 + R[1] * lat.a2 + self.tau[b] - self.tau[a]
            self._disp.setdefault((a, b), []).append((d, t))

    def fiber(self, k):
        k = np.asarray(k, dtype=float)
        H = np.zeros((self.dim, self.dim), dtype=complex)
        for (a, b), terms in self._disp.items():
            H[a, b] = sum(t * np.exp(1j * (k @ d)) for d, t in terms)
        return H

    def deriv(self, k, e):
        k = np.asarray(k, dtype=float)
        e = np.asarray(e, dtype=float)
        H = np.zeros((self.dim, self.dim), dtype=complex)
        for (a, b), terms in self._disp.items():
            H[a, b] = sum(1j * (e @ d) * t * np.exp(1j * (k @ d))
                          for d, t in terms)
        return H

    def planewave_terms(self):
        if self.dim != 2:
            return None

        def collect(a, b):
            terms = self._disp.get((a, b), [])
            if not terms:
                return np.zeros((1, 2)), np.zeros(1, complex)
            return (np.array([d for d, _ in terms]),
                    np.array([t for _, t in terms], dtype=complex))

        d00, a00 = collect(0, 0)
        d11, a11 = collect(1, 1)
        d10, a10 = collect(1, 0)
        return PlaneWaveTerms(d00, a00, d11, a11, d10, a10)

    def norm_estimate(self):
        rows = np.zeros(self.dim)
        for (a, b), terms in self._disp.items():
            rows[a] += sum(abs(t) for _, t in terms)
        return float(np.max(rows))


def tb_fiber(h, k):
    return TBModel(h).fiber(k)


def quasi_period_unitary(model, K):
    """Diagonal unitary T_K with fiber(k + K) = T_K fiber(k) T_K^dagger.

    T_K = diag(e^{-i K.(tau_a - tau_0)}), i.e. normalized so the first
    orbital carries phase 1. K must belong to the reciprocal lattice.
    """
    lat = model.lattice
    if lat is None or not lat.in_reciprocal_lattice(K):
        raise ValueError("K is not a reciprocal-lattice vector")
    K = np.asarray(K, dtype=float)
    phases = np.exp(-1j * ((model.tau - model.tau[0]) @ K))
    return np.diag(phases)


def _parse_vec(text):
    parts = text.replace("=", " ").split()
    return np.array([float(parts[-2]), float(parts[-1])])


def load_hopping_list(path):
    """Read a hopping list from a structured text file.

    Format: `[lattice]` block with `a1 = x y`, `a2 = x y`; `[orbitals]`
    block with one `x y` position per line; `[hoppings]` block with one
    record `a b R1 R2 re im` per line. `#` starts a comment anywhere.
    """
    section = None
    avec = {}
    tau = []
    entries = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                section = line.strip("[]").lower()
                continue
            if section == "lattice":
                name = line.split("=")[0].strip()
                avec[name] = _parse_vec(line)
            elif section == "orbitals":
                tau.append(_parse_vec(line))
            elif section == "hoppings":
                parts = line.split()
                if len(parts) != 6:
                    raise ValueError(
                        f"{path}:{lineno}: expected `a b R1 R2 re im`")
                a, b, r1, r2 = (int(parts[0]), int(parts[1]),
                                int(parts[2]), int(parts[3]))
                entries.append((a, b, (r1, r2),
                                complex(float(parts[4]), float(parts[5]))))
            else:
                raise ValueError(f"{path}:{lineno}: line outside any section")
    if "a1" not in avec or "a2" not in avec:
        raise ValueError(f"{path}: missing [lattice] a1/a2")
    if not tau:
        raise ValueError(f"{path}: missing [orbitals] block")
    lat = Lattice2D(avec["a1"], avec["a2"])
    return HoppingList(tuple(entries), np.array(tau), lat)


def haldane_hopping_list(g=1.0, t2=0.0):
    """The honeycomb model expressed as a HoppingList (cross-check helper)."""
    lat, deltas = _haldane_geometry()
    tau = np.array([deltas[0], [0.0, 0.0]])
    entries = []
    # nearest neighbours: f(k) = sum_i e^{ik.delta_i} sits at H[1,0];
    # delta_i = R_i + tau_0 - tau_1 with R_1 = 0, R_2 = -a2, R_3 = -a1
    for R in [(0, 0), (0, -1), (-1, 0)]:
        entries.append((1, 0, R, 1.0 + 0.0j))
        entries.append((0, 1, (-R[0], -R[1]), 1.0 + 0.0j))
    entries.append((0, 0, (0, 0), complex(g)))
    entries.append((1, 1, (0, 0), complex(-g)))
    if t2:
        # -2 t2 sin(k.v) on H00 for v in {a1, a2, a1-a2}; opposite sign on H11
        for R in [(1, 0), (0, 1), (1, -1)]:
            for orb, sgn in ((0, 1.0), (1, -1.0)):
                entries.append((orb, orb, R, sgn * 1j * t2))
                entries.append((orb, orb, (-R[0], -R[1]), sgn * -1j * t2))
    return HoppingList(tuple(entries), tau, lat)


def _gap_sq_funcs(terms):
    """q(k) = dz(k)^2 + |c(k)|^2 with analytic gradient and Hessian.

    gap(k) = lambda_+ - lambda_- = 2 sqrt(q); dz = (H00 - H11)/2, c = H10.
    """
    dzd = np.vstack([terms.d00, terms.d11])
    dza = np.concatenate([terms.a00, -terms.a11]) / 2.0
    cd, ca = np.asarray(terms.d10, dtype=float), terms.a10

    def entry(d, a, k, order=(0, 0)):
        fac = (1j * d[:, 0]) ** order[0] * (1j * d[:, 1]) ** order[1]
        return np.sum(fac * a * np.exp(1j * (d @ k)))

    def q(k):
        dz = entry(dzd, dza, k).real
        c = entry(cd, ca, k)
        return dz * dz + np.abs(c) ** 2

    def grad(k):
        dz = entry(dzd, dza, k).real
        c = entry(cd, ca, k)
        g = np.zeros(2)
        for i, o in enumerate([(1, 0), (0, 1)]):
            g[i] = 2 * dz * entry(dzd, dza, k, o).real \
                + 2 * np.real(np.conj(c) * entry(cd, ca, k, o))
        return g

    def hess(k):
        dz = entry(dzd, dza, k).real
        c = entry(cd, ca, k)
        orders = [(1, 0), (0, 1)]
        H = np.zeros((2, 2))
        for i in range(2):
            for j in range(2):
                oij = (orders[i][0] + orders[j][0], orders[i][1] + orders[j][1])
                H[i, j] = (2 * entry(dzd, dza, k, orders[i]).real
                           * entry(dzd, dza, k, orders[j]).real
                           + 2 * dz * entry(dzd, dza, k, oij).real
                           + 2 * np.real(np.conj(entry(cd, ca, k, orders[i]))
                                         * entry(cd, ca, k, orders[j]))
                           + 2 * np.real(np.conj(c) * entry(cd, ca, k, oij)))
        return H

    return q, grad, hess


def dirac_points(model, scan_n=60, tol=1e-10, max_points=8):
    """Locate conical band crossings of a 2-band lattice model.

    Newton iteration on the squared half-gap q(k) (analytic gradient and
    Hessian from the plane-wave terms), seeded from the smallest-gap points
    of a scan_n x scan_n grid; duplicates modulo the reciprocal lattice are
    merged. Only zeros with residual gap < sqrt(tol) are kept.
    """
    terms = model.planewave_terms()
    if terms is None:
        raise ValueError("dirac_points needs a 2-band lattice model")
    q, grad, hess = _gap_sq_funcs(terms)
    lat = model.lattice
    n = scan_n
    idx = np.arange(n)
    fr1, fr2 = np.meshgrid(idx / n, idx / n, indexing="ij")
    pts = fr1.reshape(-1, 1) * lat.b1 + fr2.reshape(-1, 1) * lat.b2
    vals = np.array([q(k) for k in pts])
    order = np.argsort(vals)
    found = []
    for i in order[:4 * max_points]:
        k = pts[i].copy()
        for _ in range(60):
            g = grad(k)
            H = hess(k)
            try:
                step = np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                break
            k = k - step
            if np.linalg.norm(step) < 1e-14:
                break
        if q(k) >= tol ** 2:
            continue
        frac = lat.reciprocal_coords(k) % 1.0
        frac[frac > 1 - 1e-6] -= 1.0
        kk = frac[0] * lat.b1 + frac[1] * lat.b2
        if all(np.linalg.norm(kk - p) > 1e-6 for p in found):
            found.append(kk)
        if len(found) >= max_points:
            break
    return found


def fermi_velocity(model, k0, h=1e-6, n_dirs=8):
    """Slope of the upper band at a conical point, averaged over directions."""
    slopes = []
    for th in np.linspace(0.0, 2 * np.pi, n_dirs, endpoint=False):
        u = np.array([np.cos(th), np.sin(th)])
        lam = np.linalg.eigvalsh(model.fiber(k0 + h * u))
        slopes.append(lam[-1] / h)
    return float(np.mean(slopes))
