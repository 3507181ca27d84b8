"""Structural model of bottleneck-module CNNs.

Evaluates the closed-form per-layer output sizes and workloads, and folds a
whole architecture into a per-cut profile: cumulative local workload,
transmit payload, and pooling-index payload at every admissible split point.
Cut 0 means "transmit the raw input"; cut ``L`` means "run everything
locally and transmit the final output".

Units: spatial sizes in elements, payloads in bits, workloads in FLOPs.
All counters are Python ints, so multi-GFLOP totals never wrap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .errors import (
    NonPositiveOutput,
    PairingError,
    ParseError,
    ShapeMismatch,
    ValidationError,
)


class LayerKind(str, Enum):
    CONV = "conv"
    TRANSPOSE_CONV = "transpose_conv"
    MAX_POOL = "max_pool"
    MAX_UNPOOL = "max_unpool"


_KIND_ALIASES = {
    "conv": LayerKind.CONV,
    "convolution": LayerKind.CONV,
    "transpose_conv": LayerKind.TRANSPOSE_CONV,
    "tconv": LayerKind.TRANSPOSE_CONV,
    "transposeconv": LayerKind.TRANSPOSE_CONV,
    "max_pool": LayerKind.MAX_POOL,
    "maxpool": LayerKind.MAX_POOL,
    "max_unpool": LayerKind.MAX_UNPOOL,
    "maxunpool": LayerKind.MAX_UNPOOL,
}


@dataclass(frozen=True)
class TensorShape:
    """Channels x height x width, all at least one element."""

    channels: int
    height: int
    width: int

    def __post_init__(self):
        for name in ("channels", "height", "width"):
            if getattr(self, name) < 1:
                raise ValidationError(f"tensor {name} must be >= 1")

    @property
    def elements(self) -> int:
        return self.channels * self.height * self.width


@dataclass(frozen=True)
class LayerSpec:
    """One convolutional / pooling layer with per-axis geometry.

    ``pwo``/``pho`` (output padding) apply to transpose convolutions only.
    Pooling layers keep their channel count.
    """

    kind: LayerKind
    c_in: int
    c_out: int
    kw: int
    kh: int
    pw: int = 0
    ph: int = 0
    sw: int = 1
    sh: int = 1
    dw: int = 1
    dh: int = 1
    pwo: int = 0
    pho: int = 0

    def __post_init__(self):
        if self.c_in < 1 or self.c_out < 1:
            raise ValidationError("channel counts must be >= 1")
        if min(self.kw, self.kh) < 1 or min(self.sw, self.sh) < 1 or min(self.dw, self.dh) < 1:
            raise ValidationError("kernel, stride and dilation must be >= 1")
        if min(self.pw, self.ph, self.pwo, self.pho) < 0:
            raise ValidationError("padding must be >= 0")
        if (self.pwo or self.pho) and self.kind is not LayerKind.TRANSPOSE_CONV:
            raise ValidationError("output padding is only valid on transpose convolutions")
        if self.kind in (LayerKind.MAX_POOL, LayerKind.MAX_UNPOOL) and self.c_in != self.c_out:
            raise ValidationError("pooling layers preserve the channel count")

    @classmethod
    def conv(cls, c_in, c_out, k, s=1, p=0, d=1):
        return cls(LayerKind.CONV, c_in, c_out, kw=k, kh=k, pw=p, ph=p, sw=s, sh=s, dw=d, dh=d)

    @classmethod
    def transpose_conv(cls, c_in, c_out, k, s=1, p=0, d=1, po=0):
        return cls(LayerKind.TRANSPOSE_CONV, c_in, c_out, kw=k, kh=k, pw=p, ph=p,
                   sw=s, sh=s, dw=d, dh=d, pwo=po, pho=po)

    @classmethod
    def max_pool(cls, channels, k, s=1, p=0):
        return cls(LayerKind.MAX_POOL, channels, channels, kw=k, kh=k, pw=p, ph=p, sw=s, sh=s)

    @classmethod
    def max_unpool(cls, channels, k, s=1, p=0):
        return cls(LayerKind.MAX_UNPOOL, channels, channels, kw=k, kh=k, pw=p, ph=p, sw=s, sh=s)


def _axis_params(layer: LayerSpec, axis: str):
    if axis == "w":
        return layer.kw, layer.pw, layer.sw, layer.dw, layer.pwo
    if axis == "h":
        return layer.kh, layer.ph, layer.sh, layer.dh, layer.pho
    raise ValueError(f"axis must be 'w' or 'h', got {axis!r}")


def conv_output_dim(x_in: int, layer: LayerSpec, axis: str) -> int:
    """floor((x + 2p - d(k-1) - 1)/s + 1) for convolution and max-pooling."""
    if layer.kind not in (LayerKind.CONV, LayerKind.MAX_POOL):
        raise ValueError(f"conv_output_dim does not apply to {layer.kind.value}")
    k, p, s, d, _ = _axis_params(layer, axis)
    out = (x_in + 2 * p - d * (k - 1) - 1) // s + 1
    if out < 1:
        raise NonPositiveOutput(
            f"{layer.kind.value} {axis}-size {x_in} with k={k} p={p} s={s} d={d} yields {out}")
    return out


def transpose_output_dim(x_in: int, layer: LayerSpec, axis: str) -> int:
    """(x - 1)s - 2p + d(k-1) + p_out + 1 for transpose convolution."""
    if layer.kind is not LayerKind.TRANSPOSE_CONV:
        raise ValueError(f"transpose_output_dim does not apply to {layer.kind.value}")
    k, p, s, d, po = _axis_params(layer, axis)
    out = (x_in - 1) * s - 2 * p + d * (k - 1) + po + 1
    if out < 1:
        raise NonPositiveOutput(
            f"transpose_conv {axis}-size {x_in} with k={k} p={p} s={s} d={d} po={po} yields {out}")
    return out


def unpool_output_dim(x_in: int, layer: LayerSpec, axis: str) -> int:
    """(x - 1)s - 2p + k for max-unpooling."""
    if layer.kind is not LayerKind.MAX_UNPOOL:
        raise ValueError(f"unpool_output_dim does not apply to {layer.kind.value}")
    k, p, s, _, _ = _axis_params(layer, axis)
    out = (x_in - 1) * s - 2 * p + k
    if out < 1:
        raise NonPositiveOutput(
            f"max_unpool {axis}-size {x_in} with k={k} p={p} s={s} yields {out}")
    return out


def layer_output_shape(layer: LayerSpec, in_shape: TensorShape) -> TensorShape:
    if layer.c_in != in_shape.channels:
        raise ShapeMismatch(
            f"{layer.kind.value} expects {layer.c_in} channels, got {in_shape.channels}")
    if layer.kind in (LayerKind.CONV, LayerKind.MAX_POOL):
        w = conv_output_dim(in_shape.width, layer, "w")
        h = conv_output_dim(in_shape.height, layer, "h")
    elif layer.kind is LayerKind.TRANSPOSE_CONV:
        w = transpose_output_dim(in_shape.width, layer, "w")
        h = transpose_output_dim(in_shape.height, layer, "h")
    else:
        w = unpool_output_dim(in_shape.width, layer, "w")
        h = unpool_output_dim(in_shape.height, layer, "h")
    return TensorShape(layer.c_out, h, w)


def layer_flops(layer: LayerSpec, in_shape: TensorShape) -> int:
    """Workload of one layer applied to ``in_shape``.

    Convolutions (plain and transpose) cost 2*C_in*C_out*K_w*K_h per output
    pixel; max-pooling costs K_w*K_h - 1 comparisons per output element;
    max-unpooling is pure data movement and counts as zero.
    """
    out = layer_output_shape(layer, in_shape)
    area = out.width * out.height
    if layer.kind in (LayerKind.CONV, LayerKind.TRANSPOSE_CONV):
        return 2 * layer.c_in * layer.c_out * layer.kw * layer.kh * area
    if layer.kind is LayerKind.MAX_POOL:
        return (layer.kw * layer.kh - 1) * layer.c_out * area
    return 0


_SAMPLINGS = ("none", "down", "up")


@dataclass(frozen=True)
class BottleneckModule:
    """Two-branch block; branch outputs are summed at the exit.

    An empty ``skip_branch`` means the module has no skip path, so only the
    main branch constrains the output shape. ``pool_bits_per_element`` is the
    argmax bookkeeping cost per pooled output element; it is consumed by the
    paired unpooling module later in the network.
    """

    id: int
    main_branch: tuple[LayerSpec, ...]
    skip_branch: tuple[LayerSpec, ...] = ()
    sampling: str = "none"
    pool_bits_per_element: int = 0

    def __post_init__(self):
        object.__setattr__(self, "main_branch", tuple(self.main_branch))
        object.__setattr__(self, "skip_branch", tuple(self.skip_branch))
        if not self.main_branch:
            raise ValidationError(f"module {self.id}: main branch needs at least one layer")
        if self.sampling not in _SAMPLINGS:
            raise ValidationError(f"module {self.id}: sampling must be one of {_SAMPLINGS}")
        if self.pool_bits_per_element < 0:
            raise ValidationError(f"module {self.id}: pool_bits_per_element must be >= 0")

    @property
    def layers(self) -> tuple[LayerSpec, ...]:
        return self.main_branch + self.skip_branch


@dataclass(frozen=True)
class Architecture:
    modules: tuple[BottleneckModule, ...]
    input_shape: TensorShape
    bits_per_element: int = 32

    def __post_init__(self):
        object.__setattr__(self, "modules", tuple(self.modules))
        if self.bits_per_element < 1:
            raise ValidationError("bits_per_element must be >= 1")
        downs = sum(1 for m in self.modules if m.sampling == "down")
        ups = sum(1 for m in self.modules if m.sampling == "up")
        if downs != ups:
            raise ValidationError(
                f"{downs} downsampling vs {ups} upsampling modules; counts must match")

    @property
    def num_modules(self) -> int:
        return len(self.modules)


@dataclass(frozen=True)
class CutProfile:
    """Per-cut totals for one architecture.

    ``cum_workload[l]`` is the FLOPs of modules 1..l (local side),
    ``transmit_bits[l]`` the activation payload at cut ``l`` and
    ``index_bits[l]`` the pooling-index payload still owed to later
    unpooling stages. Index 0 is the raw-input cut.
    """

    cum_workload: tuple[int, ...]
    transmit_bits: tuple[int, ...]
    index_bits: tuple[int, ...]

    def __post_init__(self):
        n = len(self.cum_workload)
        if n < 1 or len(self.transmit_bits) != n or len(self.index_bits) != n:
            raise ValidationError("profile vectors must share one length >= 1")
        if self.cum_workload[0] != 0:
            raise ValidationError("cumulative workload must start at zero")
        if any(b < a for a, b in zip(self.cum_workload, self.cum_workload[1:])):
            raise ValidationError("cumulative workload must be non-decreasing")
        if min(self.transmit_bits) < 0 or min(self.index_bits) < 0:
            raise ValidationError("payloads must be non-negative")

    @property
    def num_cuts(self) -> int:
        return len(self.cum_workload) - 1

    @property
    def total_workload(self) -> int:
        return self.cum_workload[-1]

    def payload_bits(self, cut: int) -> int:
        """Activation plus index bits transmitted when splitting at ``cut``."""
        return self.transmit_bits[cut] + self.index_bits[cut]


def _run_branch(layers, shape, module_id):
    """Propagate a branch; returns (out_shape, flops, pooled_elements)."""
    flops = 0
    pooled = 0
    out = shape
    try:
        for layer in layers:
            nxt = layer_output_shape(layer, out)
            flops += layer_flops(layer, out)
            if layer.kind is LayerKind.MAX_POOL:
                pooled += nxt.elements
            out = nxt
    except (NonPositiveOutput, ShapeMismatch) as exc:
        raise type(exc)(f"module {module_id}: {exc}") from None
    return out, flops, pooled


def propagate(arch: Architecture) -> CutProfile:
    """Run shape propagation over the whole architecture and build its profile.

    Pool/unpool pairing is LIFO: an upsampling module containing max-unpool
    pops the most recent unresolved pooling downsample. The index payload at
    cut ``l`` sums contributions of pools executed locally (module <= l)
    whose unpool runs on the server (module > l).
    """
    shape = arch.input_shape
    bits = arch.bits_per_element
    cum = [0]
    data = [shape.elements * bits]
    open_pools: list[tuple[int, int]] = []  # (module position, index bits owed)
    pairs: list[tuple[int, int, int]] = []  # (down position, up position, index bits)

    for pos, mod in enumerate(arch.modules, start=1):
        out_main, fl_main, pooled_main = _run_branch(mod.main_branch, shape, mod.id)
        pooled = pooled_main
        flops = fl_main
        if mod.skip_branch:
            out_skip, fl_skip, pooled_skip = _run_branch(mod.skip_branch, shape, mod.id)
            if out_skip != out_main:
                raise ShapeMismatch(
                    f"module {mod.id}: main branch yields "
                    f"{(out_main.channels, out_main.height, out_main.width)} but skip branch "
                    f"yields {(out_skip.channels, out_skip.height, out_skip.width)}")
            flops += fl_skip
            pooled += pooled_skip

        if mod.sampling == "down":
            if not (out_main.height < shape.height and out_main.width < shape.width):
                raise ValidationError(f"module {mod.id}: downsampling must shrink both spatial dims")
        elif mod.sampling == "up":
            if not (out_main.height > shape.height and out_main.width > shape.width):
                raise ValidationError(f"module {mod.id}: upsampling must grow both spatial dims")
        else:
            if (out_main.height, out_main.width) != (shape.height, shape.width):
                raise ValidationError(f"module {mod.id}: non-sampling module changed spatial dims")

        has_unpool = any(l.kind is LayerKind.MAX_UNPOOL for l in mod.layers)
        if has_unpool:
            if mod.sampling != "up":
                raise ValidationError(f"module {mod.id}: max_unpool outside an upsampling module")
            if not open_pools:
                raise PairingError(f"module {mod.id}: no unresolved pooling stage to pair with")
            down_pos, owed = open_pools.pop()
            pairs.append((down_pos, pos, owed))
        if mod.sampling == "down" and pooled > 0:
            open_pools.append((pos, pooled * mod.pool_bits_per_element))

        shape = out_main
        cum.append(cum[-1] + flops)
        data.append(shape.elements * bits)

    if (shape.height, shape.width) != (arch.input_shape.height, arch.input_shape.width):
        raise ValidationError(
            f"final spatial dims {(shape.height, shape.width)} differ from input "
            f"{(arch.input_shape.height, arch.input_shape.width)}")

    index = [0] * (arch.num_modules + 1)
    for down_pos, up_pos, owed in pairs:
        for cut in range(down_pos, up_pos):
            index[cut] += owed
    return CutProfile(tuple(cum), tuple(data), tuple(index))


# ---------------------------------------------------------------------------
# config I/O

_LAYER_KEYS = ("kind", "c_in", "c_out", "kw", "kh", "pw", "ph", "sw", "sh", "dw", "dh", "pwo", "pho")


def _layer_from_dict(obj, module_id):
    if not isinstance(obj, dict):
        raise ValidationError(f"module {module_id}: layer entries must be objects")
    unknown = set(obj) - set(_LAYER_KEYS)
    if unknown:
        raise ValidationError(f"module {module_id}: unknown layer keys {sorted(unknown)}")
    try:
        kind = _KIND_ALIASES[str(obj["kind"]).lower()]
    except KeyError:
        raise ValidationError(f"module {module_id}: unknown layer kind {obj.get('kind')!r}") from None
    try:
        return LayerSpec(
            kind=kind,
            c_in=int(obj["c_in"]),
            c_out=int(obj["c_out"]),
            kw=int(obj["kw"]),
            kh=int(obj["kh"]),
            pw=int(obj.get("pw", 0)),
            ph=int(obj.get("ph", 0)),
            sw=int(obj.get("sw", 1)),
            sh=int(obj.get("sh", 1)),
            dw=int(obj.get("dw", 1)),
            dh=int(obj.get("dh", 1)),
            pwo=int(obj.get("pwo", 0)),
            pho=int(obj.get("pho", 0)),
        )
    except KeyError as exc:
        raise ValidationError(f"module {module_id}: layer missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"module {module_id}: bad layer value ({exc})") from None
    except ValidationError as exc:
        raise ValidationError(f"module {module_id}: {exc}") from None


def architecture_from_dict(cfg: dict) -> Architecture:
    if not isinstance(cfg, dict):
        raise ValidationError("top-level config must be an object")
    try:
        inp = cfg["input"]
        shape = TensorShape(int(inp["channels"]), int(inp["height"]), int(inp["width"]))
        raw_modules = cfg["modules"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"config missing required field: {exc}") from None
    if not raw_modules:
        raise ValidationError("module list is empty")
    modules = []
    for entry in raw_modules:
        mid = entry.get("id", len(modules) + 1)
        try:
            modules.append(BottleneckModule(
                id=int(mid),
                main_branch=tuple(_layer_from_dict(l, mid) for l in entry.get("main_branch", ())),
                skip_branch=tuple(_layer_from_dict(l, mid) for l in entry.get("skip_branch", ())),
                sampling=str(entry.get("sampling", "none")).lower(),
                pool_bits_per_element=int(entry.get("pool_bits_per_element", 0)),
            ))
        except ValidationError:
            raise
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"module {mid}: {exc}") from None
    arch = Architecture(
        modules=tuple(modules),
        input_shape=shape,
        bits_per_element=int(cfg.get("bits_per_element", 32)),
    )
    try:
        propagate(arch)  # full structural validation
    except (ShapeMismatch, PairingError, NonPositiveOutput) as exc:
        raise ValidationError(str(exc)) from None
    return arch


def load_architecture(config_text: str) -> Architecture:
    """Parse and validate a JSON architecture config."""
    try:
        cfg = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc}") from None
    return architecture_from_dict(cfg)


def architecture_to_dict(arch: Architecture) -> dict:
    def layer(l: LayerSpec) -> dict:
        return {"kind": l.kind.value, "c_in": l.c_in, "c_out": l.c_out,
                "kw": l.kw, "kh": l.kh, "pw": l.pw, "ph": l.ph,
                "sw": l.sw, "sh": l.sh, "dw": l.dw, "dh": l.dh,
                "pwo": l.pwo, "pho": l.pho}

    return {
        "bits_per_element": arch.bits_per_element,
        "input": {"channels": arch.input_shape.channels,
                  "height": arch.input_shape.height,
                  "width": arch.input_shape.width},
        "modules": [
            {"id": m.id, "sampling": m.sampling,
             "pool_bits_per_element": m.pool_bits_per_element,
             "main_branch": [layer(l) for l in m.main_branch],
             "skip_branch": [layer(l) for l in m.skip_branch]}
            for m in arch.modules
        ],
    }


def default_pool_index_bits(kw: int, kh: int) -> int:
    """Bits needed to address one argmax position inside a kw x kh window."""
    return max(1, math.ceil(math.log2(kw * kh))) if kw * kh > 1 else 0


def packaged_config_text(name: str) -> str:
    """Text of a bundled architecture config ('reference' or 'toy')."""
    fname = {"reference": "enet_reference.json", "toy": "toy_arch.json"}.get(name, name)
    try:
        return resources.files("splitplan.data").joinpath(fname).read_text()
    except FileNotFoundError:
        raise ParseError(f"no bundled config named {name!r}") from None


_REFERENCE_CACHE: dict[str, Architecture] = {}


def reference_architecture() -> Architecture:
    """The bundled 30-module segmentation network (ENet-style layout)."""
    if "reference" not in _REFERENCE_CACHE:
        _REFERENCE_CACHE["reference"] = load_architecture(packaged_config_text("reference"))
    return _REFERENCE_CACHE["reference"]


def toy_architecture() -> Architecture:
    """The bundled 4-module toy network used for brute-force validation."""
    if "toy" not in _REFERENCE_CACHE:
        _REFERENCE_CACHE["toy"] = load_architecture(packaged_config_text("toy"))
    return _REFERENCE_CACHE["toy"]
