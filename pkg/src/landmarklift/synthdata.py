"""Seeded synthetic face-landmark generator and dataset serialization.

Stands in for a licensed morphable model: a fixed bilaterally symmetric
template (eye, brow, nose, mouth and jaw clusters) plus a low-rank basis of
smooth random displacement modes.  Identities are template + sum of
Gaussian-weighted basis vectors, so the sample mean converges to the template
and per-mode coefficient statistics are exactly known.

Every sample derives its own generator from (dataset seed, face id), which
makes generation order-independent and bit-reproducible from the manifest.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DatasetFormatError,
    DatasetVersionError,
    DegenerateInputError,
    DimensionMismatchError,
)
from .geometry import ViewParams, project
from .landmarks import (
    LandmarkSet2D,
    LandmarkSet3D,
    normalize_points,
    topology_for_count,
)
from .linalg import orthonormalize_rows

DATASET_VERSION = 1

# canonical reference view every face is regressed toward
PROFILE_VIEW = ViewParams("orthographic", 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ViewDistribution:
    """Sampling ranges for poses and cameras."""

    yaw_choices: tuple[float, ...] = (-45.0, 0.0, 45.0)
    perspective_fraction: float = 0.5
    azimuth_range: tuple[float, float] = (0.0, 45.0)
    elevation_range: tuple[float, float] = (0.0, 30.0)
    fov_range: tuple[float, float] = (0.0, 5.0)

    def __post_init__(self):
        if not 0.0 <= self.perspective_fraction <= 1.0:
            raise ValueError("perspective_fraction must be within [0, 1]")
        for name in ("azimuth_range", "elevation_range", "fov_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} must be (low, high), got ({lo}, {hi})")
        if not self.yaw_choices:
            raise ValueError("yaw_choices must not be empty")


@dataclass(frozen=True)
class LandmarkModel:
    """Low-rank landmark shape model: template + orthonormal basis."""

    template: LandmarkSet3D
    basis: np.ndarray  # (K, 3n), rows orthonormal
    sigmas: np.ndarray  # (K,), per-mode standard deviations
    topology_id: str
    mirror_pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=np.float64)
        sigmas = np.asarray(self.sigmas, dtype=np.float64)
        n = len(self.template)
        if basis.ndim != 2 or basis.shape[1] != 3 * n:
            raise DimensionMismatchError(
                f"basis must be (K, {3 * n}), got {basis.shape}"
            )
        k = basis.shape[0]
        if k >= 3 * n:
            raise DimensionMismatchError(
                f"basis size {k} must be smaller than 3n = {3 * n}"
            )
        if sigmas.shape != (k,) or np.any(sigmas <= 0):
            raise DegenerateInputError("sigmas must be K positive reals")
        gram = basis @ basis.T
        if np.max(np.abs(gram - np.eye(k))) > 1e-10:
            raise DegenerateInputError("basis rows must be orthonormal within 1e-10")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "sigmas", sigmas)

    @property
    def n_landmarks(self) -> int:
        return len(self.template)

    @property
    def basis_size(self) -> int:
        return self.basis.shape[0]

    def model_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.topology_id.encode("utf-8"))
        h.update(np.ascontiguousarray(self.template.points, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.basis, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.sigmas, dtype="<f8").tobytes())
        return h.hexdigest()

    def synthesize(self, coefficients: np.ndarray) -> LandmarkSet3D:
        """Template displaced along the basis by the given coefficients."""
        c = np.asarray(coefficients, dtype=np.float64)
        if c.shape != (self.basis_size,):
            raise DimensionMismatchError(
                f"expected {self.basis_size} coefficients, got shape {c.shape}"
            )
        flat = self.template.points.reshape(-1) + c @ self.basis
        return LandmarkSet3D(flat.reshape(-1, 3), self.topology_id)


def _half_ellipse(count, cx, cy, rx, ry, z):
    # paired cluster points on the +x side
    theta = np.pi * (np.arange(count) + 1) / (count + 1)
    return [
        (cx + rx * float(np.sin(t)), cy + ry * float(np.cos(t)), z) for t in theta
    ]


def _arc(count, p0, p1, bulge):
    t = (np.arange(count) + 1) / (count + 1)
    pts = []
    for ti in t:
        x = p0[0] + (p1[0] - p0[0]) * ti
        y = p0[1] + (p1[1] - p0[1]) * ti + bulge * float(np.sin(np.pi * ti))
        z = p0[2] + (p1[2] - p0[2]) * ti
        pts.append((x, y, z))
    return pts


def _face_template(n: int) -> tuple[np.ndarray, tuple[tuple[int, int], ...]]:
    """Deterministic face-like layout: centerline points plus mirrored pairs."""
    centers = [
        (0.0, 0.40, 0.28),  # nose bridge
        (0.0, 0.02, 0.46),  # nose tip
        (0.0, -0.22, 0.30),  # philtrum
        (0.0, -1.02, 0.05),  # chin
    ]
    if (n - len(centers)) % 2:
        centers.append((0.0, 0.78, 0.15))  # forehead point fixes parity
    n_pairs = (n - len(centers)) // 2

    # split the paired budget across clusters, largest remainder, min 1 each
    weights = {"jaw": 0.30, "eye": 0.22, "brow": 0.16, "mouth": 0.22, "nose": 0.10}
    counts = {k: max(1, int(w * n_pairs)) for k, w in weights.items()}
    order = sorted(weights, key=lambda k: weights[k], reverse=True)
    i = 0
    while sum(counts.values()) < n_pairs:
        counts[order[i % len(order)]] += 1
        i += 1
    while sum(counts.values()) > n_pairs:
        big = max(counts, key=lambda k: counts[k])
        counts[big] -= 1

    side = []
    side += _arc(counts["jaw"], (0.92, 0.15, -0.12), (0.18, -0.95, -0.02), -0.10)
    side += _half_ellipse(counts["eye"], 0.36, 0.28, 0.15, 0.07, 0.12)
    side += _arc(counts["brow"], (0.16, 0.50, 0.16), (0.56, 0.44, 0.08), 0.08)
    side += _half_ellipse(counts["mouth"], 0.0, -0.52, 0.27, 0.09, 0.22)
    side += _arc(counts["nose"], (0.09, -0.10, 0.30), (0.16, -0.16, 0.22), 0.0)

    points = list(centers)
    pairs = []
    for x, y, z in side:
        pairs.append((len(points), len(points) + 1))
        points.append((x, y, z))
        points.append((-x, y, z))
    pts = np.array(points, dtype=np.float64)
    return normalize_points(pts), tuple(pairs)


def _smooth_basis(template: np.ndarray, k: int, rng) -> np.ndarray:
    # spatially correlated displacement modes: white noise blurred with a
    # Gaussian kernel over landmark distances, then orthonormalized
    d2 = np.sum((template[:, None, :] - template[None, :, :]) ** 2, axis=-1)
    kernel = np.exp(-d2 / (2.0 * 0.45**2))
    raw = rng.standard_normal(size=(k, template.shape[0], 3))
    smooth = np.einsum("ij,kjc->kic", kernel, raw)
    return orthonormalize_rows(smooth.reshape(k, -1))


def build_default_model(n: int = 72, k: int = 20, seed: int = 0) -> LandmarkModel:
    """Deterministic synthetic landmark model.

    Same (n, k, seed) always yields a bit-identical model.  The template is
    mirror-symmetric about the x = 0 plane; the basis rows are orthonormal
    smooth displacement fields.
    """
    if n < 10:
        raise DimensionMismatchError(f"need at least 10 landmarks, got {n}")
    if k >= 3 * n:
        raise DimensionMismatchError(f"basis size {k} must be below 3n = {3 * n}")
    if k < 1:
        raise DimensionMismatchError("basis size must be positive")
    template, mirror_pairs = _face_template(n)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xFACE,)))
    basis = _smooth_basis(template, k, rng)
    sigmas = 0.35 * 0.9 ** np.arange(k)
    topo = topology_for_count(n)
    return LandmarkModel(
        LandmarkSet3D(template, topo), basis, sigmas, topo, mirror_pairs
    )


def write_landmark_model(model: LandmarkModel, path) -> None:
    """Save a shape model as text (hex doubles), e.g. one converted from
    a licensed morphable model the user holds."""
    lines = [
        f"LLSM {DATASET_VERSION}",
        f"topology {model.topology_id}",
        f"n {model.n_landmarks} K {model.basis_size}",
        "mirror_pairs " + (
            " ".join(f"{i},{j}" for i, j in model.mirror_pairs) or "-"
        ),
        "sigmas " + " ".join(_hex(model.sigmas)),
        "template " + " ".join(_hex(model.template.points)),
    ]
    lines += ["basis " + " ".join(_hex(row)) for row in model.basis]
    Path(path).write_text("\n".join(lines) + "\n")


def read_landmark_model(path) -> LandmarkModel:
    """Load a shape model written by ``write_landmark_model``."""
    path = Path(path)
    lines = path.read_text().splitlines()

    def bad(lineno, why):
        return DatasetFormatError(f"{path}: line {lineno}: {why}")

    try:
        magic, version = lines[0].split()
    except (IndexError, ValueError):
        raise DatasetFormatError(f"{path}: missing LLSM header") from None
    if magic != "LLSM":
        raise DatasetFormatError(f"{path}: not a landmark model file")
    if int(version) != DATASET_VERSION:
        raise DatasetVersionError(
            f"{path}: schema version {version}, expected {DATASET_VERSION}"
        )
    try:
        topo = lines[1].split()[1]
        _, n, _, k = lines[2].split()
        n, k = int(n), int(k)
        pair_field = lines[3].split()[1:]
        pairs = tuple(
            tuple(int(x) for x in tok.split(","))
            for tok in pair_field
            if tok != "-"
        )
        sigmas = np.array([float.fromhex(t) for t in lines[4].split()[1:]])
        template = np.array(
            [float.fromhex(t) for t in lines[5].split()[1:]]
        ).reshape(n, 3)
        basis = np.array(
            [[float.fromhex(t) for t in lines[6 + r].split()[1:]] for r in range(k)]
        ).reshape(k, 3 * n)
    except (IndexError, ValueError) as exc:
        raise DatasetFormatError(f"{path}: malformed model file: {exc}") from exc
    return LandmarkModel(LandmarkSet3D(template, topo), basis, sigmas, topo, pairs)


@dataclass(frozen=True)
class ShapeSample:
    """One synthetic identity rendered into an input view and the reference view."""

    face_id: int
    coefficients: np.ndarray
    gt_3d: LandmarkSet3D
    view: ViewParams
    input_2d: LandmarkSet2D
    profile_2d: LandmarkSet2D


def _sample_view(rng, dist: ViewDistribution) -> ViewParams:
    yaw = dist.yaw_choices[int(rng.integers(0, len(dist.yaw_choices)))]
    pick = rng.random()
    azimuth = rng.uniform(*dist.azimuth_range)
    elevation = rng.uniform(*dist.elevation_range)
    fov = rng.uniform(*dist.fov_range)
    if pick < dist.perspective_fraction:
        return ViewParams("perspective", yaw, azimuth, elevation, fov)
    return ViewParams("orthographic", yaw, 0.0, 0.0, 0.0)


def sample_faces(
    model: LandmarkModel,
    count: int,
    dist: ViewDistribution | None = None,
    seed: int = 0,
    start_id: int = 0,
) -> list[ShapeSample]:
    """Draw ``count`` identities with views; fully determined by the seed.

    Each face id seeds its own generator stream, so samples are independent
    of generation order and any subrange can be regenerated in isolation.
    """
    dist = dist or ViewDistribution()
    out = []
    for i in range(count):
        face_id = start_id + i
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(face_id,)))
        coeffs = rng.standard_normal(model.basis_size) * model.sigmas
        gt = model.synthesize(coeffs)
        view = _sample_view(rng, dist)
        out.append(
            ShapeSample(
                face_id=face_id,
                coefficients=coeffs,
                gt_3d=gt,
                view=view,
                input_2d=project(gt, view),
                profile_2d=project(gt, PROFILE_VIEW),
            )
        )
    return out


@dataclass(frozen=True)
class DatasetManifest:
    """Everything needed to regenerate a dataset bit-for-bit."""

    seed: int
    count: int
    start_id: int = 0
    split: str = "all"
    train_fraction: float = 1.0
    landmarks: int = 72
    basis_size: int = 20
    model_seed: int = 0
    model_hash: str = ""
    version: int = DATASET_VERSION
    view: ViewDistribution = field(default_factory=ViewDistribution)

    def to_text(self) -> str:
        v = self.view
        lines = [
            f"version: {self.version}",
            f"seed: {self.seed}",
            f"count: {self.count}",
            f"start_id: {self.start_id}",
            f"split: {self.split}",
            f"train_fraction: {self.train_fraction!r}",
            f"landmarks: {self.landmarks}",
            f"basis_size: {self.basis_size}",
            f"model_seed: {self.model_seed}",
            f"model_hash: {self.model_hash}",
            "yaw_choices: " + ",".join(repr(y) for y in v.yaw_choices),
            f"perspective_fraction: {v.perspective_fraction!r}",
            "azimuth_range: " + ",".join(repr(x) for x in v.azimuth_range),
            "elevation_range: " + ",".join(repr(x) for x in v.elevation_range),
            "fov_range: " + ",".join(repr(x) for x in v.fov_range),
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, origin: str = "<manifest>") -> "DatasetManifest":
        kv = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise DatasetFormatError(
                    f"{origin}: line {lineno}: expected 'key: value'"
                )
            key, _, value = line.partition(":")
            kv[key.strip()] = value.strip()
        try:
            version = int(kv["version"])
        except KeyError:
            raise DatasetFormatError(f"{origin}: missing version field") from None
        if version != DATASET_VERSION:
            raise DatasetVersionError(
                f"{origin}: schema version {version}, expected {DATASET_VERSION}"
            )
        try:
            pair = lambda s: tuple(float(t) for t in kv[s].split(","))
            view = ViewDistribution(
                yaw_choices=pair("yaw_choices"),
                perspective_fraction=float(kv["perspective_fraction"]),
                azimuth_range=pair("azimuth_range"),
                elevation_range=pair("elevation_range"),
                fov_range=pair("fov_range"),
            )
            return cls(
                seed=int(kv["seed"]),
                count=int(kv["count"]),
                start_id=int(kv["start_id"]),
                split=kv["split"],
                train_fraction=float(kv["train_fraction"]),
                landmarks=int(kv["landmarks"]),
                basis_size=int(kv["basis_size"]),
                model_seed=int(kv["model_seed"]),
                model_hash=kv["model_hash"],
                version=version,
                view=view,
            )
        except (KeyError, ValueError) as exc:
            raise DatasetFormatError(f"{origin}: bad manifest field: {exc}") from exc


def regenerate_dataset(
    manifest: DatasetManifest,
) -> tuple[list[ShapeSample], LandmarkModel]:
    """Rebuild the model and samples a manifest describes; verifies the hash."""
    model = build_default_model(
        manifest.landmarks, manifest.basis_size, manifest.model_seed
    )
    if manifest.model_hash and model.model_hash() != manifest.model_hash:
        raise DatasetFormatError(
            "manifest model hash does not match the regenerated model"
        )
    samples = sample_faces(
        model, manifest.count, manifest.view, manifest.seed, manifest.start_id
    )
    return samples, model


def _hex(values: np.ndarray) -> list[str]:
    return [float(v).hex() for v in np.asarray(values, dtype=np.float64).reshape(-1)]


def write_dataset(samples: list[ShapeSample], manifest: DatasetManifest, base) -> None:
    """Write ``<base>.manifest`` and ``<base>.lmds`` (one sample per line)."""
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    base.with_suffix(".manifest").write_text(manifest.to_text())
    lines = []
    for s in samples:
        proj_flag = "1" if s.view.projection == "perspective" else "0"
        tokens = [
            str(s.face_id),
            str(s.coefficients.size),
            str(len(s.gt_3d)),
            *_hex(s.coefficients),
            proj_flag,
            *_hex(
                np.array(
                    [s.view.yaw_deg, s.view.azimuth_deg, s.view.elevation_deg,
                     s.view.fov_deg]
                )
            ),
            *_hex(s.gt_3d.points),
            *_hex(s.input_2d.points),
            *_hex(s.profile_2d.points),
        ]
        lines.append(" ".join(tokens))
    base.with_suffix(".lmds").write_text("\n".join(lines) + ("\n" if lines else ""))


def read_dataset(base) -> tuple[list[ShapeSample], DatasetManifest]:
    """Read a dataset written by ``write_dataset``; bit-exact round trip."""
    base = Path(base)
    mpath = base.with_suffix(".manifest")
    dpath = base.with_suffix(".lmds")
    if not mpath.exists():
        raise DatasetFormatError(f"{mpath}: manifest not found")
    if not dpath.exists():
        raise DatasetFormatError(f"{dpath}: dataset not found")
    manifest = DatasetManifest.from_text(mpath.read_text(), origin=str(mpath))
    samples = []
    with open(dpath, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                samples.append(_parse_record(line))
            except (ValueError, IndexError) as exc:
                raise DatasetFormatError(
                    f"{dpath}: line {lineno}: malformed record: {exc}"
                ) from exc
    if len(samples) != manifest.count:
        raise DatasetFormatError(
            f"{dpath}: manifest promises {manifest.count} records, found {len(samples)}"
        )
    return samples, manifest


def _parse_record(line: str) -> ShapeSample:
    tokens = line.split()
    face_id = int(tokens[0])
    k = int(tokens[1])
    n = int(tokens[2])
    expected = 3 + k + 5 + 3 * n + 2 * n + 2 * n
    if len(tokens) != expected:
        raise ValueError(f"expected {expected} tokens, found {len(tokens)}")
    coeffs = np.array([float.fromhex(t) for t in tokens[3 : 3 + k]])
    flag = tokens[3 + k]
    if flag not in ("0", "1"):
        raise ValueError(f"projection flag must be 0 or 1, got {flag!r}")
    projection = "perspective" if flag == "1" else "orthographic"
    vals = [float.fromhex(t) for t in tokens[4 + k :]]
    yaw, azimuth, elevation, fov = vals[:4]
    pos = 4
    gt = np.array(vals[pos : pos + 3 * n]).reshape(n, 3)
    pos += 3 * n
    inp = np.array(vals[pos : pos + 2 * n]).reshape(n, 2)
    pos += 2 * n
    prof = np.array(vals[pos : pos + 2 * n]).reshape(n, 2)
    topo = topology_for_count(n)
    view = ViewParams(projection, yaw, azimuth, elevation, fov)
    return ShapeSample(
        face_id=face_id,
        coefficients=coeffs,
        gt_3d=LandmarkSet3D(gt, topo),
        view=view,
        input_2d=LandmarkSet2D(inp, topo),
        profile_2d=LandmarkSet2D(prof, topo),
    )


def samples_equal(a: ShapeSample, b: ShapeSample) -> bool:
    """Bit-exact structural equality of two samples."""
    return (
        a.face_id == b.face_id
        and a.view == b.view
        and np.array_equal(a.coefficients, b.coefficients)
        and np.array_equal(a.gt_3d.points, b.gt_3d.points)
        and np.array_equal(a.input_2d.points, b.input_2d.points)
        and np.array_equal(a.profile_2d.points, b.profile_2d.points)
    )
