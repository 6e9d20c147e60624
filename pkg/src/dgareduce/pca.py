"""Principal component analysis over standardized gas tables.

Covariance uses the population (n) divisor, so on standardized input it
coincides with the correlation matrix.  Eigenpairs come from cyclic Jacobi
rotations; components are selected either by fixed count or by cumulative
variance-proportion threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Scaler, Table, standardize
from .errors import ParameterError, ShapeError, ValidationError

_SYMMETRY_TOL = 1e-9
_JACOBI_OFF_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100


def covariance(table: Table) -> np.ndarray:
    """Covariance matrix of an already standardized table, entry (i,j) = sum(x_i x_j)/n."""
    if table.n_rows < 2:
        raise ParameterError("covariance needs at least 2 rows")
    values = table.values
    if np.abs(values.mean(axis=0)).max() > 1e-6:
        raise ValidationError("covariance expects standardized (zero-mean) input")
    c = values.T @ values / table.n_rows
    return (c + c.T) / 2.0


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues sorted descending, unit eigenvectors as aligned columns,
    and per-component variance proportions in percent."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    proportions: np.ndarray


def eigendecompose(c: np.ndarray) -> EigenSystem:
    """Eigen decomposition of a symmetric matrix via cyclic Jacobi rotations.

    Sign convention: the largest-magnitude entry of each eigenvector is made
    positive (first such entry on ties) so results are deterministic.
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {c.shape}")
    if np.abs(c - c.T).max() > _SYMMETRY_TOL:
        raise ValidationError("matrix is not symmetric")
    eigenvalues, vectors = _jacobi(c)
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            vectors[:, j] = -col
    total = eigenvalues.sum()
    proportions = 100.0 * eigenvalues / total if total != 0 else np.zeros_like(eigenvalues)
    return EigenSystem(eigenvalues, vectors, proportions)


def _jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = a.copy()
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(_JACOBI_MAX_SWEEPS):
        # sum the off-diagonal entries directly; subtracting the diagonal
        # mass from the total cancels catastrophically near convergence
        strict_upper = np.triu_indices(n, 1)
        off = math.sqrt(2.0 * float(np.sum(a[strict_upper] ** 2)))
        if off <= _JACOBI_OFF_TOL:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = 100.0 * abs(apq)
                # negligible relative to the diagonal: flush to zero
                if abs(a[p, p]) + g == abs(a[p, p]) and abs(a[q, q]) + g == abs(a[q, q]):
                    a[p, q] = a[q, p] = 0.0
                    continue
                if apq == 0.0:
                    continue
                h = a[q, q] - a[p, p]
                if abs(h) + g == abs(h):
                    t = apq / h
                else:
                    theta = h / (2.0 * apq)
                    t = 1.0 / (abs(theta) + math.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                cos = 1.0 / math.sqrt(1.0 + t * t)
                sin = t * cos
                tau = sin / (1.0 + cos)
                delta = t * apq
                a[p, p] -= delta
                a[q, q] += delta
                a[p, q] = a[q, p] = 0.0
                for r in range(n):
                    if r == p or r == q:
                        continue
                    arp, arq = a[r, p], a[r, q]
                    a[r, p] = a[p, r] = arp - sin * (arq + arp * tau)
                    a[r, q] = a[q, r] = arq + sin * (arp - arq * tau)
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp - sin * (vq + vp * tau)
                v[:, q] = vq + sin * (vp - vq * tau)
    return np.diag(a).copy(), v


@dataclass(frozen=True)
class PcaProjection:
    """Kept eigenvector basis plus the standardization fitted on the source table."""

    basis: np.ndarray  # m x p, orthonormal columns
    scaler: Scaler
    attributes: tuple[str, ...]
    eigenvalues: np.ndarray  # all m, descending
    proportions: np.ndarray  # all m, percent

    @property
    def p(self) -> int:
        return self.basis.shape[1]

    @property
    def component_names(self) -> tuple[str, ...]:
        return tuple(f"pc{i + 1}" for i in range(self.p))


def select_components(
    eigen: EigenSystem,
    scaler: Scaler,
    attributes,
    *,
    fixed_count: int | None = None,
    threshold: float | None = None,
) -> PcaProjection:
    """Keep the top `fixed_count` components, or the minimal prefix whose
    cumulative variance proportion reaches `threshold` percent."""
    m = eigen.eigenvalues.shape[0]
    if (fixed_count is None) == (threshold is None):
        raise ParameterError("give exactly one of fixed_count or threshold")
    if fixed_count is not None:
        if not 1 <= fixed_count <= m:
            raise ParameterError(f"fixed_count must be in [1, {m}], got {fixed_count}")
        p = fixed_count
    else:
        if not 0.0 < threshold <= 100.0:
            raise ParameterError(f"threshold must be in (0, 100], got {threshold}")
        cumulative = np.cumsum(eigen.proportions)
        reached = np.flatnonzero(cumulative >= threshold - 1e-12)
        p = int(reached[0]) + 1 if reached.size else m
    return PcaProjection(
        basis=eigen.eigenvectors[:, :p].copy(),
        scaler=scaler,
        attributes=tuple(attributes),
        eigenvalues=eigen.eigenvalues.copy(),
        proportions=eigen.proportions.copy(),
    )


def project(table: Table, proj: PcaProjection) -> Table:
    """Standardize with the projection's stored parameters, then rotate onto
    the kept basis.  The decision column is carried through unchanged."""
    if table.attributes != proj.attributes:
        raise ShapeError(
            f"table attributes {table.attributes} do not match projection {proj.attributes}"
        )
    z = proj.scaler.transform(table.values)
    return Table(z @ proj.basis, table.decisions, proj.component_names)


def fit_projection(
    table: Table, *, fixed_count: int | None = None, threshold: float | None = None
) -> PcaProjection:
    """Standardize, build the covariance, decompose, select: the whole fit."""
    std, scaler = standardize(table)
    eigen = eigendecompose(covariance(std))
    return select_components(
        eigen, scaler, table.attributes, fixed_count=fixed_count, threshold=threshold
    )


def save_projection(proj: PcaProjection, path) -> None:
    """Write a projection as flat text, loadable for inference."""
    lines = [
        f"attributes = {','.join(proj.attributes)}",
        f"m = {len(proj.attributes)}",
        f"p = {proj.p}",
        "mean = " + ",".join("%.17g" % v for v in proj.scaler.mean),
        "std = " + ",".join("%.17g" % v for v in proj.scaler.std),
        "constant = " + ",".join(str(int(v)) for v in proj.scaler.constant),
        "eigenvalues = " + ",".join("%.17g" % v for v in proj.eigenvalues),
        "proportions = " + ",".join("%.17g" % v for v in proj.proportions),
    ]
    for i, row in enumerate(proj.basis):
        lines.append(f"basis-row-{i} = " + ",".join("%.17g" % v for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_projection(path) -> PcaProjection:
    fields = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if "=" in line:
                key, _, raw = line.partition("=")
                fields[key.strip()] = raw.strip()
    attributes = tuple(fields["attributes"].split(","))
    m = int(fields["m"])
    floats = lambda key: np.array([float(v) for v in fields[key].split(",")])
    scaler = Scaler(
        floats("mean"),
        floats("std"),
        np.array([bool(int(v)) for v in fields["constant"].split(",")]),
    )
    basis = np.vstack([floats(f"basis-row-{i}") for i in range(m)])
    return PcaProjection(
        basis=basis,
        scaler=scaler,
        attributes=attributes,
        eigenvalues=floats("eigenvalues"),
        proportions=floats("proportions"),
    )
