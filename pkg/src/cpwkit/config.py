"""Run configuration: closed-schema YAML file with CLI flag overrides.

Every leaf of the nested schema has a documented default that reproduces the
stock chip (7.5 mm two-port, eight resonators at 4.6-7.4 GHz, coupling
targets near 500k).  Unknown keys are rejected.  Precedence is
flag > config file > default; the output directory additionally honors the
CPWKIT_OUTDIR environment variable (flag > env > file > default).

Flags are generated from the schema, one per leaf: key ``a.b_c`` becomes
``--a-b-c``.  Dict-valued leaves take ``K=V,K=V`` and the resonator table
takes ``label:f0_mhz:qc,...``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

from cpwkit.coupling import DEFAULT_CALIBRATION
from cpwkit.cpw import SUBSTRATE_EPS_R
from cpwkit.errors import ConfigError

#: Stock resonator schedule: label, f0 in MHz, coupling-Q target.
DEFAULT_SCHEDULE = [
    ("r0", 4600.0, 495e3),
    ("r1", 5000.0, 496e3),
    ("r2", 5400.0, 497e3),
    ("r3", 5800.0, 499e3),
    ("r4", 6200.0, 497e3),
    ("r5", 6600.0, 498e3),
    ("r6", 7000.0, 499e3),
    ("r7", 7400.0, 512e3),
]


@dataclass
class ResonatorEntry:
    label: str
    f0_mhz: float
    qc: float


@dataclass
class ChipSection:
    width_mm: float = 7.5
    height_mm: float = 7.5
    design_name: str = "CPW8R"
    ground_plane_polarity: str = "draw-etch"


@dataclass
class CpwSection:
    trace_width_um: float = 6.0
    gap_um: float = 3.0
    substrate: str = "silicon"
    eps_r: float | None = None  # None: looked up from the substrate name
    metal_thickness_um: float = 0.1
    trench_depth_nm: float = 100.0
    min_feature_um: float = 3.0

    def resolved_eps_r(self) -> float:
        if self.eps_r is not None:
            return self.eps_r
        try:
            return SUBSTRATE_EPS_R[self.substrate]
        except KeyError:
            raise ConfigError(
                f"unknown substrate {self.substrate!r}; set cpw.eps_r explicitly"
            ) from None


@dataclass
class BondPadSection:
    trace_width_um: float = 250.0
    gap_um: float = 125.0
    taper_length_um: float = 300.0
    pad_length_um: float = 300.0
    edge_setback_um: float = 125.0


@dataclass
class MeanderSection:
    envelope_width_um: float = 480.0
    pitch_um: float = 120.0
    bend_radius_um: float = 60.0
    entry_drop_um: float = 40.0
    max_height_um: float = 3200.0
    fillet_radius_um: float = 1.5
    feedline_offset_gap_um: float = 6.0


@dataclass
class CouplingSection:
    qc_ref: float = DEFAULT_CALIBRATION[1]
    coupler_length_ref_um: float = DEFAULT_CALIBRATION[0]
    f_ref_ghz: float = DEFAULT_CALIBRATION[2]
    mutual_ph_per_um: float | None = None  # None: calibrated from the reference


@dataclass
class SweepSection:
    coupler_min_um: float = 25.0
    coupler_max_um: float = 800.0
    points: int = 25
    log_spacing: bool = True


@dataclass
class ParticipationSection:
    refinement: int = 2
    ladder: list[int] | None = None
    layer_thickness_nm: dict[str, float] = field(
        default_factory=lambda: {"MS": 3.0, "SA": 3.0, "MA": 3.0}
    )
    layer_eps: dict[str, float] = field(
        default_factory=lambda: {"MS": 5.0, "SA": 10.0, "MA": 10.0}
    )
    trench_profile: str = "vertical"
    domain_factor: float = 30.0
    solver_tol: float = 1e-10
    export_vtk: bool = False


@dataclass
class WirebondSection:
    feedline_interval_um: float = 400.0
    feedline_span_um: float = 90.0
    min_span_um: float = 75.0
    max_span_um: float = 600.0
    min_landing_um: float = 30.0
    stitch_margin_um: float = 40.0


@dataclass
class FitSection:
    window_linewidths: float = 10.0


@dataclass
class RunConfig:
    chip: ChipSection = field(default_factory=ChipSection)
    cpw: CpwSection = field(default_factory=CpwSection)
    bond_pad: BondPadSection = field(default_factory=BondPadSection)
    meander: MeanderSection = field(default_factory=MeanderSection)
    coupling: CouplingSection = field(default_factory=CouplingSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    participation: ParticipationSection = field(default_factory=ParticipationSection)
    wirebonds: WirebondSection = field(default_factory=WirebondSection)
    fit: FitSection = field(default_factory=FitSection)
    resonators: list[ResonatorEntry] = field(
        default_factory=lambda: [ResonatorEntry(*row) for row in DEFAULT_SCHEDULE]
    )
    output_dir: str = "cpwkit-out"
    seed: int = 0


_SECTION_TYPES = {
    "chip": ChipSection,
    "cpw": CpwSection,
    "bond_pad": BondPadSection,
    "meander": MeanderSection,
    "coupling": CouplingSection,
    "sweep": SweepSection,
    "participation": ParticipationSection,
    "wirebonds": WirebondSection,
    "fit": FitSection,
}


def _coerce(value, target, key: str):
    if value is None:
        return None
    if target is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            low = value.strip().lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if target is int:
        if isinstance(value, bool):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        try:
            out = int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
        return out
    if target is float:
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if target is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{key}: unsupported value {value!r}")


def _leaf_kind(section_cls, field_obj):
    """Classify a schema field: ('scalar', type) | ('opt_float',) | ... """
    t = field_obj.type
    name = field_obj.name
    if t in ("float", float):
        return ("float",)
    if t in ("int", int):
        return ("int",)
    if t in ("str", str):
        return ("str",)
    if t in ("bool", bool):
        return ("bool",)
    if "float | None" in str(t):
        return ("opt_float",)
    if "list[int] | None" in str(t):
        return ("opt_int_list",)
    if "dict" in str(t):
        return ("float_dict",)
    raise AssertionError(f"unhandled schema type for {section_cls.__name__}.{name}: {t}")


def _apply_leaf(obj, field_obj, value, key: str):
    kind = _leaf_kind(type(obj), field_obj)[0]
    if kind == "float":
        value = _coerce(value, float, key)
    elif kind == "int":
        value = _coerce(value, int, key)
    elif kind == "str":
        value = _coerce(value, str, key)
    elif kind == "bool":
        value = _coerce(value, bool, key)
    elif kind == "opt_float":
        value = None if value is None else _coerce(value, float, key)
    elif kind == "opt_int_list":
        if value is not None:
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split() if v]
            if not isinstance(value, list):
                raise ConfigError(f"{key}: expected a list of integers")
            value = [_coerce(v, int, key) for v in value]
    elif kind == "float_dict":
        current = dict(getattr(obj, field_obj.name))
        if isinstance(value, str):
            pairs = [p for p in value.split(",") if p.strip()]
            parsed = {}
            for p in pairs:
                if "=" not in p:
                    raise ConfigError(f"{key}: expected K=V,K=V, got {value!r}")
                k, v = p.split("=", 1)
                parsed[k.strip()] = v
            value = parsed
        if not isinstance(value, dict):
            raise ConfigError(f"{key}: expected a mapping")
        for k, v in value.items():
            if k not in current:
                raise ConfigError(f"{key}: unknown entry {k!r}")
            current[k] = _coerce(v, float, f"{key}.{k}")
        value = current
    setattr(obj, field_obj.name, value)


def _parse_resonators(value, key="resonators") -> list[ResonatorEntry]:
    if isinstance(value, str):
        rows = []
        for item in value.split(","):
            item = item.strip()
            if not item:
                continue
            parts = item.split(":")
            if len(parts) != 3:
                raise ConfigError(f"{key}: expected label:f0_mhz:qc, got {item!r}")
            rows.append(
                ResonatorEntry(
                    label=parts[0],
                    f0_mhz=_coerce(parts[1], float, key),
                    qc=_coerce(parts[2], float, key),
                )
            )
        return rows
    if not isinstance(value, list):
        raise ConfigError(f"{key}: expected a list of resonator entries")
    rows = []
    for i, item in enumerate(value):
        if not isinstance(item, dict):
            raise ConfigError(f"{key}[{i}]: expected a mapping")
        unknown = set(item) - {"label", "f0_mhz", "qc"}
        if unknown:
            raise ConfigError(f"{key}[{i}]: unknown keys {sorted(unknown)}")
        for required in ("label", "f0_mhz", "qc"):
            if required not in item:
                raise ConfigError(f"{key}[{i}]: missing {required!r}")
        rows.append(
            ResonatorEntry(
                label=_coerce(item["label"], str, key),
                f0_mhz=_coerce(item["f0_mhz"], float, key),
                qc=_coerce(item["qc"], float, key),
            )
        )
    return rows


def _merge_mapping(config: RunConfig, data: dict, source: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    for key, value in data.items():
        if key in _SECTION_TYPES:
            if not isinstance(value, dict):
                raise ConfigError(f"{key}: expected a mapping of settings")
            section = getattr(config, key)
            fields = {f.name: f for f in dataclasses.fields(section)}
            for sub, sub_value in value.items():
                if sub not in fields:
                    raise ConfigError(f"unknown key {key}.{sub}")
                _apply_leaf(section, fields[sub], sub_value, f"{key}.{sub}")
        elif key == "resonators":
            config.resonators = _parse_resonators(value)
        elif key == "output_dir":
            config.output_dir = _coerce(value, str, key)
        elif key == "seed":
            config.seed = _coerce(value, int, key)
        else:
            raise ConfigError(f"unknown key {key}")


def load_config(path=None, overrides: dict[str, object] | None = None) -> RunConfig:
    """Defaults, then the YAML file, then dotted-key overrides."""
    config = RunConfig()
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        _merge_mapping(config, data, str(path))
    for dotted, value in (overrides or {}).items():
        if dotted == "resonators":
            config.resonators = _parse_resonators(value)
            continue
        if dotted == "output_dir":
            config.output_dir = _coerce(value, str, dotted)
            continue
        if dotted == "seed":
            config.seed = _coerce(value, int, dotted)
            continue
        if "." not in dotted:
            raise ConfigError(f"unknown key {dotted}")
        section_name, leaf = dotted.split(".", 1)
        if section_name not in _SECTION_TYPES:
            raise ConfigError(f"unknown key {dotted}")
        section = getattr(config, section_name)
        fields = {f.name: f for f in dataclasses.fields(section)}
        if leaf not in fields:
            raise ConfigError(f"unknown key {dotted}")
        _apply_leaf(section, fields[leaf], value, dotted)
    validate_config(config)
    return config


def validate_config(config: RunConfig) -> None:
    config.cpw.resolved_eps_r()
    if not config.resonators:
        pass  # an empty chip is legal: feedline and pads only
    labels = [r.label for r in config.resonators]
    if len(set(labels)) != len(labels):
        raise ConfigError("resonator labels must be unique")
    for r in config.resonators:
        if r.f0_mhz <= 0 or r.qc <= 0:
            raise ConfigError(f"{r.label}: f0 and qc must be positive")
    if config.sweep.points < 1:
        raise ConfigError("sweep.points must be >= 1")
    if config.sweep.coupler_min_um > config.sweep.coupler_max_um:
        raise ConfigError("sweep.coupler_min_um must not exceed coupler_max_um")
    if config.participation.refinement < 0:
        raise ConfigError("participation.refinement must be >= 0")


def schema_leaves() -> list[tuple[str, str, object]]:
    """(dotted key, kind, default) for every config leaf; drives flag generation."""
    leaves = []
    defaults = RunConfig()
    for section_name, section_cls in _SECTION_TYPES.items():
        section = getattr(defaults, section_name)
        for f in dataclasses.fields(section_cls):
            kind = _leaf_kind(section_cls, f)[0]
            leaves.append((f"{section_name}.{f.name}", kind, getattr(section, f.name)))
    leaves.append(("resonators", "resonators", "stock eight-resonator schedule"))
    leaves.append(("output_dir", "str", defaults.output_dir))
    leaves.append(("seed", "int", defaults.seed))
    return leaves


def config_as_dict(config: RunConfig) -> dict:
    """Plain-dict form (for the manifest and report records)."""
    out = {}
    for section_name in _SECTION_TYPES:
        out[section_name] = dataclasses.asdict(getattr(config, section_name))
    out["resonators"] = [dataclasses.asdict(r) for r in config.resonators]
    out["output_dir"] = config.output_dir
    out["seed"] = config.seed
    return out
