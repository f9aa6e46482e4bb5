"""Limit-plane bookkeeping for wing configurations and synthetic ray scans."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ..errors import ConfigurationError
from .report import ExperimentReport

SIDES = ("left", "right")
OFFSET_TOL = 1e-9


@dataclass(frozen=True)
class Planar:
    """Planar wing: asymptotic to x1 = upper_offset going up, x1 = lower_offset going down."""

    side: str
    upper_offset: float
    lower_offset: float

    def to_dict(self):
        return {"type": "Planar", "side": self.side, "upper_offset": self.upper_offset, "lower_offset": self.lower_offset}


@dataclass(frozen=True)
class Reaper:
    """Grim-reaper wing of width 2b between the planes x1 = kappa and x1 = rho."""

    side: str
    width: float
    kappa: float
    rho: float

    def to_dict(self):
        return {"type": "Reaper", "side": self.side, "width": self.width, "kappa": self.kappa, "rho": self.rho}


def wing_from_dict(d):
    kinds = {"Planar": Planar, "Reaper": Reaper}
    d = dict(d)
    try:
        cls = kinds[d.pop("type")]
        return cls(**d)
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"bad wing description: {exc}") from None


@dataclass(frozen=True)
class WingConfiguration:
    wings: tuple = ()
    slab_halfwidth: float = math.pi

    def __post_init__(self):
        object.__setattr__(self, "wings", tuple(self.wings))
        self.validate()

    @property
    def omega_P(self):
        return sum(isinstance(w, Planar) for w in self.wings)

    @property
    def omega_G(self):
        return sum(isinstance(w, Reaper) for w in self.wings)

    def side(self, s):
        return [w for w in self.wings if w.side == s]

    def validate(self):
        w = self.slab_halfwidth
        if not w > 0:
            raise ConfigurationError("slab half-width must be positive")
        for wing in self.wings:
            if wing.side not in SIDES:
                raise ConfigurationError(f"wing side must be left or right, got {wing.side!r}")
            offs = (wing.upper_offset, wing.lower_offset) if isinstance(wing, Planar) else (wing.kappa, wing.rho)
            if any(abs(o) > w + OFFSET_TOL for o in offs):
                raise ConfigurationError(f"offsets {offs} leave the slab [-{w}, {w}]")
            if isinstance(wing, Reaper):
                if wing.rho == wing.kappa:
                    raise ConfigurationError("reaper wing needs rho != kappa")
                # a tilted reaper over a strip has width pi sqrt(1+c^2)/c >= pi
                if wing.width < math.pi - OFFSET_TOL:
                    raise ConfigurationError("reaper width must be at least pi")
                if abs(wing.width - abs(wing.rho - wing.kappa)) > OFFSET_TOL:
                    raise ConfigurationError("reaper width must equal |rho - kappa|")
        if self.omega_P % 2:
            raise ConfigurationError("the number of planar wings must be even")
        for kind in (Planar, Reaper):
            left = sum(isinstance(x, kind) for x in self.side("left"))
            right = sum(isinstance(x, kind) for x in self.side("right"))
            if left != right:
                raise ConfigurationError(f"{kind.__name__} wings must pair up: {left} left vs {right} right")
        if self.wings and _side_limits(self.side("left")) != _side_limits(self.side("right")):
            raise ConfigurationError("left and right wings predict different limit planes")

    def to_dict(self):
        return {"wings": [x.to_dict() for x in self.wings], "slab_halfwidth": self.slab_halfwidth}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(wing_from_dict(x) for x in d.get("wings", ())), float(d.get("slab_halfwidth", math.pi)))


def _multiset(offsets):
    """Sorted (offset, multiplicity) pairs; offsets within OFFSET_TOL merge."""
    out = []
    for o in sorted(offsets):
        if out and abs(o - out[-1][0]) <= OFFSET_TOL:
            out[-1][1] += 1
        else:
            out.append([o, 1])
    return tuple((float(o), int(m)) for o, m in out)


def _side_limits(wings):
    up, down = [], []
    for w in wings:
        if isinstance(w, Planar):
            up.append(w.upper_offset)
            down.append(w.lower_offset)
        else:
            # both planes of a reaper end go up; nothing goes down
            up.extend((w.kappa, w.rho))
    return _multiset(up), _multiset(down)


def predict_limit_configuration(cfg: WingConfiguration) -> dict:
    """Upward and downward limit planes with multiplicities, and the entropy.

    Every limit plane is seen once from each side, so the multisets come from
    one side's wings; validation already checked that both sides agree.
    """
    cfg.validate()
    up, down = _side_limits(cfg.side("right"))
    entropy = (cfg.omega_P + 2 * cfg.omega_G) // 2
    return {"up": up, "down": down, "entropy": entropy}


def grim_reaper_configuration():
    h = math.pi / 2
    return WingConfiguration((Reaper("left", math.pi, -h, h), Reaper("right", math.pi, -h, h)), slab_halfwidth=h)


def pitchfork_configuration(width=math.pi):
    """Two planar and two reaper wings: three planes up, one down."""
    a = width / 2
    wings = []
    for s in SIDES:
        wings.append(Planar(s, 0.0, 0.0))
        wings.append(Reaper(s, width, -a, a))
    return WingConfiguration(tuple(wings), slab_halfwidth=a)


def random_configuration(rng: np.random.Generator, max_planar_pairs=3, max_reaper_pairs=2, w=4.0):
    """Mirrored random wings: each right wing has a left twin with the same planes."""
    wings = []
    for _ in range(int(rng.integers(0, max_planar_pairs + 1))):
        a_up, a_dn = (float(x) for x in rng.uniform(-w, w, 2))
        if rng.random() < 0.3:
            a_dn = a_up
        wings += [Planar("right", a_up, a_dn), Planar("left", a_up, a_dn)]
    for _ in range(int(rng.integers(0, max_reaper_pairs + 1))):
        width = float(rng.uniform(math.pi, 2 * w))
        kappa = float(rng.uniform(-w, w - width))
        wings += [Reaper("right", width, kappa, kappa + width), Reaper("left", width, kappa, kappa + width)]
    if not wings:
        wings = [Planar("right", 0.0, 0.0), Planar("left", 0.0, 0.0)]
    order = rng.permutation(len(wings))
    return WingConfiguration(tuple(wings[i] for i in order), slab_halfwidth=w)


def run_limit_bookkeeping(seed: int = 0, n_random: int = 20) -> ExperimentReport:
    t0 = time.perf_counter()
    params = {"seed": seed, "n_random": n_random, "multiplicity_tol": 0}
    report = ExperimentReport("limit-bookkeeping", params)
    rng = np.random.default_rng(seed)
    ok = 0
    for _ in range(n_random):
        cfg = random_configuration(rng)
        pred = predict_limit_configuration(cfg)
        ok += (
            sum(m for _, m in pred["up"]) == pred["entropy"]
            and 2 * sum(m for _, m in pred["down"]) == cfg.omega_P
            and pred["entropy"] >= 1
        )
    report.metrics["random_consistent"] = ok
    report.verdict("random_multiplicities", ok == n_random, "multiplicity_tol")
    gr = predict_limit_configuration(grim_reaper_configuration())
    pf = predict_limit_configuration(pitchfork_configuration())
    h = math.pi / 2
    report.metrics.update(grim_reaper=gr, pitchfork=pf)
    report.verdict("grim_reaper", gr["entropy"] == 2 and gr["up"] == ((-h, 1), (h, 1)) and gr["down"] == (), "multiplicity_tol")
    report.verdict(
        "pitchfork",
        pf["entropy"] == 3 and sum(m for _, m in pf["up"]) == 3 and sum(m for _, m in pf["down"]) == 1,
        "multiplicity_tol",
    )
    report.runtime_seconds = time.perf_counter() - t0
    return report


# --- synthetic composites and ray scans --------------------------------------

REAPER = "reaper"
JUMP = "jump"


class Sheet:
    """One sheet x1 = f(x2, x3) of a composite, defined on part of the plane."""

    def value(self, x2, x3):
        raise NotImplementedError

    def tangent_depth(self, x2, x3):
        """Distance into the sheet from a reaper apex line; inf for non-reaper sheets."""
        return math.inf


@dataclass(frozen=True)
class PlaneSheet(Sheet):
    """x1 = offset; ``half`` restricts to x3 > 0 ('upper') or x3 < 0 ('lower')."""

    offset: float
    half: str | None = None

    def value(self, x2, x3):
        if (self.half == "upper" and x3 <= 0) or (self.half == "lower" and x3 >= 0):
            return None
        return self.offset


@dataclass(frozen=True)
class ReaperSheet(Sheet):
    """One branch of a tilted grim reaper: x1 = center + sign lam arccos(exp(-(p.n)/lam)),
    lam = 1/cos(tilt), n = (sin tilt, -cos tilt), defined for p.n >= 0."""

    center: float
    tilt: float = 0.0
    sign: int = 1

    @property
    def lam(self):
        return 1.0 / math.cos(self.tilt)

    @property
    def normal(self):
        return (math.sin(self.tilt), -math.cos(self.tilt))

    def _s(self, x2, x3):
        n = self.normal
        return n[0] * x2 + n[1] * x3

    def value(self, x2, x3):
        s = self._s(x2, x3)
        if s < 0:
            return None
        return self.center + self.sign * self.lam * math.acos(math.exp(-s / self.lam))

    def tangent_depth(self, x2, x3):
        return abs(self._s(x2, x3))


@dataclass(frozen=True)
class StepWingSheet(Sheet):
    """Lower sheet x1 = m + (delta/2) erf(x2 / (2 sqrt(1 - x3))): sideways it tends to
    m +- delta/2 but straight down it stays at m."""

    m: float
    delta: float

    def value(self, x2, x3):
        if x3 > 0:
            return None
        return self.m + 0.5 * self.delta * float(special.erf(x2 / (2.0 * math.sqrt(1.0 - x3))))


@dataclass(frozen=True)
class Composite:
    sheets: tuple = field(default_factory=tuple)
    name: str = "composite"


def two_plane_composite(a=-1.0, b=1.0):
    return Composite((PlaneSheet(a), PlaneSheet(b)), "two-plane")


def tilted_reaper_composite(tilt=0.3, center=0.0):
    return Composite((ReaperSheet(center, tilt, 1), ReaperSheet(center, tilt, -1)), "tilted-reaper")


def pitchfork_composite(m=0.0, delta=2.0, prongs=(-1.5, 0.0, 1.5)):
    sheets = [StepWingSheet(m, delta)] + [PlaneSheet(p, "upper") for p in prongs]
    return Composite(tuple(sheets), "pitchfork")


def reaper_directions(composite):
    """Unit directions tangent to the reaper sheets' apex lines."""
    out = set()
    for s in composite.sheets:
        if isinstance(s, ReaperSheet):
            n = s.normal
            out.add((round(-n[1], 15), round(n[0], 15)))
            out.add((round(n[1], 15), round(-n[0], 15)))
    return sorted(out)


def _ray_limit(sheet, direction, radii, tol):
    """Limit of one sheet along a ray: offset, REAPER, or None (ray leaves the sheet)."""
    pts = [(r * direction[0], r * direction[1]) for r in radii]
    # the ray rides along a reaper apex line: the recentered limit is the reaper itself
    if sheet.tangent_depth(*pts[-1]) < 1.0:
        return REAPER
    vals = [sheet.value(*p) for p in pts]
    if vals[-1] is None:
        return None
    if vals[-2] is None or abs(vals[-1] - vals[-2]) > tol:
        raise ConfigurationError("ray samples did not settle; extend the radii ladder")
    return vals[-1]


def ray_multiset(composite, direction, radii=None, tol=1e-8):
    radii = np.geomspace(10.0, 1e14, 27) if radii is None else radii
    planes, reapers = [], 0
    for s in composite.sheets:
        v = _ray_limit(s, direction, radii, tol)
        if v is None:
            continue
        if v == REAPER:
            reapers += 1
        else:
            planes.append(round(v, 9) + 0.0)
    ms = _multiset(planes)
    return ms + ((REAPER, reapers),) if reapers else ms


def scan_ray_limits(composite, directions, *, delta=1e-3, radii=None):
    """Limit multiset per direction; ``JUMP`` marks a planar discontinuity: the
    multiset differs from a neighbour at angle +-delta and holds no reaper."""
    out = {}
    for d in directions:
        d = (float(d[0]), float(d[1]))
        th = math.atan2(d[1], d[0])
        here = ray_multiset(composite, d, radii)
        left = ray_multiset(composite, (math.cos(th - delta), math.sin(th - delta)), radii)
        right = ray_multiset(composite, (math.cos(th + delta), math.sin(th + delta)), radii)
        planar = all(o != REAPER for o, _ in here)
        out[d] = JUMP if planar and (here != left or here != right) else here
    return out


def run_ray_scan(n_directions: int = 16) -> ExperimentReport:
    t0 = time.perf_counter()
    params = {"n_directions": n_directions, "neighbour_angle": 1e-3, "exact": 0}
    report = ExperimentReport("ray-scan", params)
    dirs = [(math.cos(2 * math.pi * k / n_directions), math.sin(2 * math.pi * k / n_directions)) for k in range(n_directions)]
    down = (0.0, -1.0)
    dirs = [down if abs(d[0]) < 1e-12 and d[1] < 0 else d for d in dirs]

    planes = scan_ray_limits(two_plane_composite(), dirs)
    report.verdict("two_plane_constant", len({v for v in planes.values()}) == 1, "exact")

    rc = tilted_reaper_composite()
    tangents = reaper_directions(rc)
    at_tangent = scan_ray_limits(rc, tangents)
    report.verdict("reaper_at_tangent", all(REAPER in dict(v) for v in at_tangent.values() if v != JUMP), "exact")

    pf = pitchfork_composite()
    scan = scan_ray_limits(pf, [(math.sin(-0.3), -math.cos(0.3)), down, (math.sin(0.3), -math.cos(0.3))])
    vals = list(scan.values())
    straight_down = ray_multiset(pf, down)
    report.metrics.update(pitchfork=[str(v) for v in vals], pitchfork_down=str(straight_down), reaper_tangents=tangents)
    report.verdict(
        "pitchfork_jump_down",
        vals[1] == JUMP and vals[0] != vals[2] and straight_down not in (vals[0], vals[2]),
        "exact",
    )
    report.runtime_seconds = time.perf_counter() - t0
    return report
