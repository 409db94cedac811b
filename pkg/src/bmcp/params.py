"""Model parameters, process variants, and initial conditions."""

from __future__ import annotations

from dataclasses import dataclass, field

# Numerical estimate of the critical infection rate of the standard 1-d
# contact process.  There is no closed form; this is the standard numerical
# estimate and is treated everywhere as a configuration input, never as
# ground truth.
LAMBDA_C_ESTIMATE = 1.6489


class Variant:
    """Process variant codes (shared with the compiled kernel)."""

    STANDARD = 0
    RIGHT_EDGE = 1
    BOUNDARY = 2

    _NAMES = {STANDARD: "standard", RIGHT_EDGE: "right_edge", BOUNDARY: "boundary"}
    _CODES = {v: k for k, v in _NAMES.items()}

    @classmethod
    def name(cls, code: int) -> str:
        return cls._NAMES[code]

    @classmethod
    def from_name(cls, name: str) -> int:
        key = name.strip().lower().replace("-", "_")
        if key not in cls._CODES:
            raise ValueError(f"unknown variant {name!r}; expected one of {sorted(cls._CODES)}")
        return cls._CODES[key]


@dataclass(frozen=True)
class Params:
    """Infection rates and variant for one process.

    ``lambda_i`` is the rate of every directed interior edge, ``lambda_e``
    the rate carried by the outermost edge(s) according to the variant.
    The boost rate ``eps = lambda_e - lambda_i`` drives two global clocks
    superposed on the edge clocks.  Recovery rate is pinned at 1.
    """

    lambda_i: float
    lambda_e: float
    variant: int = Variant.BOUNDARY
    recovery_rate: float = 1.0

    def __post_init__(self):
        if self.lambda_i < 0 or self.lambda_e < 0:
            raise ValueError("infection rates must be nonnegative")
        if self.recovery_rate != 1.0:
            raise ValueError("recovery_rate is fixed at 1.0")
        if self.variant not in (Variant.STANDARD, Variant.RIGHT_EDGE, Variant.BOUNDARY):
            raise ValueError(f"unknown variant code {self.variant}")
        if self.variant != Variant.STANDARD and self.lambda_e < self.lambda_i:
            raise ValueError("lambda_e must be >= lambda_i (boost rate is lambda_e - lambda_i)")

    @property
    def eps(self) -> float:
        """Boost rate of each global edge clock (0 for the standard variant)."""
        if self.variant == Variant.STANDARD:
            return 0.0
        return self.lambda_e - self.lambda_i

    def to_dict(self) -> dict:
        return {
            "lambda_i": self.lambda_i,
            "lambda_e": self.lambda_e,
            "variant": Variant.name(self.variant),
            "recovery_rate": self.recovery_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Params":
        return cls(
            lambda_i=float(d["lambda_i"]),
            lambda_e=float(d["lambda_e"]),
            variant=Variant.from_name(d.get("variant", "boundary")),
            recovery_rate=float(d.get("recovery_rate", 1.0)),
        )


@dataclass(frozen=True)
class InitialCondition:
    """Initial infected set.

    kinds:
      ``single``     the origin alone
      ``finite``     an explicit finite site list
      ``half_line``  all sites <= 0, truncated at depth ``depth``
      ``stationary`` half-line evolved for ``burn_in`` time units; statistics
                     are read relative to the right edge at the end of burn-in
    """

    kind: str = "single"
    sites: tuple[int, ...] = ()
    depth: int = 0
    burn_in: float = 0.0

    def __post_init__(self):
        if self.kind not in ("single", "finite", "half_line", "stationary"):
            raise ValueError(f"unknown initial condition kind {self.kind!r}")
        if self.kind == "finite":
            if not self.sites:
                raise ValueError("finite initial condition needs a nonempty site list")
            if len(set(self.sites)) != len(self.sites):
                raise ValueError("finite initial condition sites must be duplicate-free")
        if self.kind == "half_line" and self.depth <= 0:
            raise ValueError("half-line truncation depth must be positive")
        if self.kind == "stationary" and self.burn_in <= 0:
            raise ValueError("stationary approximation needs burn_in > 0")

    @classmethod
    def single_origin(cls) -> "InitialCondition":
        return cls(kind="single")

    @classmethod
    def finite(cls, sites) -> "InitialCondition":
        return cls(kind="finite", sites=tuple(sorted(sites)))

    @classmethod
    def half_line(cls, depth: int) -> "InitialCondition":
        return cls(kind="half_line", depth=depth)

    @classmethod
    def stationary(cls, burn_in: float, depth: int = 0) -> "InitialCondition":
        return cls(kind="stationary", burn_in=burn_in, depth=depth)

    @property
    def is_half_space(self) -> bool:
        return self.kind in ("half_line", "stationary")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "finite":
            d["sites"] = list(self.sites)
        if self.kind in ("half_line", "stationary") and self.depth:
            d["depth"] = self.depth
        if self.kind == "stationary":
            d["burn_in"] = self.burn_in
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "InitialCondition":
        return cls(
            kind=d.get("kind", "single"),
            sites=tuple(d.get("sites", ())),
            depth=int(d.get("depth", 0) or 0),
            burn_in=float(d.get("burn_in", 0.0) or 0.0),
        )
