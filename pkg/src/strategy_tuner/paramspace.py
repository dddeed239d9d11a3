"""The analyzer's parameter catalog and configuration handling.

A catalog declares every tunable parameter: its lattice kind, its initial
distribution, and how a concrete value renders to command-line arguments.
The built-in default targets the 13 externally tunable options of
Frama-C/Eva, with the stock "-eva-*" flag spellings. Flag spellings are
catalog data, overridable from a file, never hardcoded elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from typing import Iterator, Mapping, Union

from .distributions import (
    Bernoulli,
    BernoulliVector,
    DeltaDistribution,
    ParamDistribution,
    Poisson,
)
from .errors import ConfigParseError, RenderError
from .keytree import parse_keytree
from .lattice import (
    BitsKind,
    BitsVal,
    BoolKind,
    BoolVal,
    IntKind,
    IntVal,
    Kind,
    LatticeValue,
    bottom,
    format_value,
    kind_of,
    leq,
    parse_value,
)


@dataclass(frozen=True)
class IntFlag:
    """Render an integer value as [flag, decimal]."""

    flag: str


@dataclass(frozen=True)
class BoolChoice:
    """Render a boolean through a value pair; an empty side omits the flag."""

    flag: str
    when_false: str
    when_true: str


@dataclass(frozen=True)
class BitsLabels:
    """Render a bit vector as [flag, comma-joined enabled labels]."""

    flag: str
    labels: tuple[str, ...]


RenderRule = Union[IntFlag, BoolChoice, BitsLabels]


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: Kind
    initial: ParamDistribution
    render: RenderRule

    def __post_init__(self) -> None:
        if kind_of(self.initial.base) != self.kind:
            raise ValueError(f"initial distribution of {self.name!r} does not match its kind")
        rule = self.render
        ok = (
            (isinstance(self.kind, IntKind) and isinstance(rule, IntFlag))
            or (isinstance(self.kind, BoolKind) and isinstance(rule, BoolChoice))
            or (
                isinstance(self.kind, BitsKind)
                and isinstance(rule, BitsLabels)
                and len(rule.labels) == self.kind.width
            )
        )
        if not ok:
            raise ValueError(f"render rule of {self.name!r} does not match its kind")


@dataclass(frozen=True)
class Configuration:
    """A concrete value for every catalog parameter, in catalog order."""

    entries: tuple[tuple[str, LatticeValue], ...]

    def __getitem__(self, name: str) -> LatticeValue:
        for key, value in self.entries:
            if key == name:
                return value
        raise KeyError(name)

    def names(self) -> tuple[str, ...]:
        return tuple(key for key, _ in self.entries)

    def as_dict(self) -> dict[str, LatticeValue]:
        return dict(self.entries)

    def replace(self, name: str, value: LatticeValue) -> "Configuration":
        if name not in self.names():
            raise KeyError(name)
        old = self[name]
        if kind_of(old) != kind_of(value):
            raise ValueError(f"replacement for {name!r} has the wrong kind")
        return Configuration(
            tuple((k, value if k == name else v) for k, v in self.entries)
        )


@dataclass(frozen=True)
class Catalog:
    params: tuple[ParamSpec, ...]

    def __post_init__(self) -> None:
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("catalog parameter names must be unique")

    def __len__(self) -> int:
        return len(self.params)

    def __iter__(self) -> Iterator[ParamSpec]:
        return iter(self.params)

    def __getitem__(self, index: int) -> ParamSpec:
        return self.params[index]

    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    def spec(self, name: str) -> ParamSpec:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    def initial_distributions(self) -> dict[str, ParamDistribution]:
        return {p.name: p.initial for p in self.params}

    def base_configuration(self) -> Configuration:
        return Configuration(tuple((p.name, p.initial.base) for p in self.params))

    def bottom_configuration(self) -> Configuration:
        return Configuration(tuple((p.name, bottom(p.kind)) for p in self.params))

    def configuration(
        self, values: Mapping[str, LatticeValue], fill_bottom: bool = False
    ) -> Configuration:
        """Build a validated configuration from a name/value mapping.

        Unknown names and kind mismatches are rejected. With
        ``fill_bottom`` missing parameters default to the lattice bottom;
        otherwise the mapping must cover the whole catalog.
        """
        known = self.names()
        for name in values:
            if name not in known:
                raise KeyError(f"unknown parameter {name!r}")
        entries: list[tuple[str, LatticeValue]] = []
        for spec in self.params:
            if spec.name in values:
                value = values[spec.name]
                if kind_of(value) != spec.kind:
                    raise ValueError(f"value for {spec.name!r} has the wrong kind")
            elif fill_bottom:
                value = bottom(spec.kind)
            else:
                raise ValueError(f"missing value for parameter {spec.name!r}")
            entries.append((spec.name, value))
        return Configuration(tuple(entries))


def config_dominates(config: Configuration, lower: Configuration) -> bool:
    """Pointwise domination over all parameters."""
    return all(leq(low, config[name]) for name, low in lower.entries)


def config_join(a: Configuration, b: Configuration) -> Configuration:
    from .lattice import join

    return Configuration(tuple((name, join(value, b[name])) for name, value in a.entries))


_DOMAIN_LABELS = ("cvalues", "octagon", "equality", "gauges", "symbolic-locations")


def _int_param(name: str, base: int, lam: float) -> ParamSpec:
    return ParamSpec(
        name=name,
        kind=IntKind(),
        initial=ParamDistribution(IntVal(base), Poisson(lam)),
        render=IntFlag(f"-eva-{name}"),
    )


def _bool_param(name: str, when_false: str, when_true: str) -> ParamSpec:
    return ParamSpec(
        name=name,
        kind=BoolKind(),
        initial=ParamDistribution(BoolVal(False), Bernoulli(0.5)),
        render=BoolChoice(f"-eva-{name}", when_false, when_true),
    )


def default_catalog() -> Catalog:
    """The built-in Frama-C/Eva catalog: 13 parameters with their
    low-precision starting bases and per-parameter exploration rates."""
    domains_base = BitsVal((True, False, False, False, False))
    return Catalog(
        (
            _int_param("min-loop-unroll", 0, 0.4),
            _int_param("auto-loop-unroll", 0, 10.0),
            _int_param("widening-delay", 1, 0.5),
            _int_param("partition-history", 0, 0.4),
            _int_param("slevel", 0, 20.0),
            _int_param("ilevel", 8, 2.0),
            _int_param("plevel", 10, 10.0),
            _int_param("subdivide-non-linear", 0, 2.5),
            _bool_param("split-return", "", "auto"),
            _bool_param("remove-redundant-alarms", "false", "true"),
            _bool_param("octagon-through-calls", "false", "true"),
            _bool_param("equality-through-calls", "none", "formals"),
            ParamSpec(
                name="domains",
                kind=BitsKind(5),
                initial=ParamDistribution(domains_base, BernoulliVector((0.5,) * 5)),
                render=BitsLabels("-eva-domains", _DOMAIN_LABELS),
            ),
        )
    )


def render_cli_args(config: Configuration, catalog: Catalog) -> list[str]:
    """Deterministic analyzer arguments for a concrete configuration.

    Infinity cannot be rendered; encountering it means a sampling or
    refinement invariant was broken upstream.
    """
    args: list[str] = []
    for spec in catalog:
        value = config[spec.name]
        rule = spec.render
        if isinstance(rule, IntFlag):
            assert isinstance(value, IntVal)
            if value.is_infinite:
                raise RenderError(f"infinity is not renderable (parameter {spec.name!r})")
            args.extend([rule.flag, str(value.value)])
        elif isinstance(rule, BoolChoice):
            assert isinstance(value, BoolVal)
            chosen = rule.when_true if value.value else rule.when_false
            if chosen != "":
                args.extend([rule.flag, chosen])
        else:
            assert isinstance(value, BitsVal)
            enabled = [label for label, bit in zip(rule.labels, value.bits) if bit]
            args.extend([rule.flag, ",".join(enabled)])
    return args


def serialize_configuration(config: Configuration) -> str:
    return "".join(f"{name} = {format_value(value)}\n" for name, value in config.entries)


def parse_configuration(text: str, catalog: Catalog) -> Configuration:
    """Parse "name = value" lines into a full configuration.

    Every catalog parameter must be assigned exactly once; values use the
    lattice textual form, except that infinity is rejected (concrete
    configurations must be runnable).
    """
    tree = parse_keytree(text)
    lines = text.splitlines()
    values: dict[str, LatticeValue] = {}
    for key in tree.keys():
        lineno = tree.line_of(key)
        column = _value_column(lines, lineno)
        try:
            spec = catalog.spec(key)
        except KeyError:
            raise ConfigParseError(f"unknown parameter {key!r}", line=lineno, column=1)
        raw = tree.get(key, "")
        assert raw is not None
        if isinstance(spec.kind, IntKind) and raw.strip() == "inf":
            raise ConfigParseError(
                "infinity not allowed in concrete configurations",
                line=lineno,
                column=column,
            )
        try:
            values[key] = parse_value(spec.kind, raw)
        except ValueError as exc:
            raise ConfigParseError(str(exc), line=lineno, column=column)
    try:
        return catalog.configuration(values)
    except (KeyError, ValueError) as exc:
        raise ConfigParseError(str(exc))


def _value_column(lines: list[str], lineno: int) -> int:
    from .keytree import value_column

    if 1 <= lineno <= len(lines):
        return value_column(lines[lineno - 1])
    return 1


def apply_catalog_overrides(catalog: Catalog, text: str) -> Catalog:
    """Apply a catalog override file to a base catalog.

    Supported keys, all per parameter name:
      ``<name>.flag``    replacement flag spelling (any kind)
      ``<name>.false`` / ``<name>.true``  boolean value pair (may be empty)
      ``<name>.labels``  comma-separated bit labels (width must match)
      ``<name>.base``    initial base point, lattice textual form
      ``<name>.lambda`` / ``<name>.q``    initial exploration parameter
    """
    tree = parse_keytree(text)
    specs = {spec.name: spec for spec in catalog}
    for key in tree.keys():
        lineno = tree.line_of(key)
        name, _, field = key.rpartition(".")
        if not name or name not in specs:
            raise ConfigParseError(f"unknown parameter in override key {key!r}", line=lineno)
        raw = tree.get(key, "")
        assert raw is not None
        try:
            specs[name] = _override_field(specs[name], field, raw)
        except ValueError as exc:
            raise ConfigParseError(str(exc), line=lineno)
    return Catalog(tuple(specs[spec.name] for spec in catalog))


def _override_field(spec: ParamSpec, field: str, raw: str) -> ParamSpec:
    rule = spec.render
    if field == "flag":
        return dc_replace(spec, render=dc_replace(rule, flag=raw))
    if field in ("false", "true"):
        if not isinstance(rule, BoolChoice):
            raise ValueError(f"{spec.name!r} is not boolean, cannot set {field!r}")
        key = "when_false" if field == "false" else "when_true"
        return dc_replace(spec, render=dc_replace(rule, **{key: raw}))
    if field == "labels":
        if not isinstance(rule, BitsLabels):
            raise ValueError(f"{spec.name!r} is not a bit vector, cannot set labels")
        labels = tuple(part.strip() for part in raw.split(","))
        if len(labels) != len(rule.labels):
            raise ValueError(f"{spec.name!r} needs {len(rule.labels)} labels, got {len(labels)}")
        return dc_replace(spec, render=dc_replace(rule, labels=labels))
    if field == "base":
        base = parse_value(spec.kind, raw)
        return dc_replace(spec, initial=ParamDistribution(base, spec.initial.delta))
    if field == "lambda":
        if not isinstance(spec.initial.delta, Poisson):
            raise ValueError(f"{spec.name!r} has no Poisson delta")
        return dc_replace(
            spec, initial=ParamDistribution(spec.initial.base, Poisson(float(raw)))
        )
    if field == "q":
        delta = spec.initial.delta
        if isinstance(delta, Bernoulli):
            new_delta: DeltaDistribution = Bernoulli(float(raw))
        elif isinstance(delta, BernoulliVector):
            parts = tuple(float(p) for p in raw.split(","))
            if len(parts) != delta.width:
                raise ValueError(f"{spec.name!r} needs {delta.width} q values, got {len(parts)}")
            new_delta = BernoulliVector(parts)
        else:
            raise ValueError(f"{spec.name!r} has no Bernoulli delta")
        return dc_replace(spec, initial=ParamDistribution(spec.initial.base, new_delta))
    raise ValueError(f"unknown override field {field!r}")
