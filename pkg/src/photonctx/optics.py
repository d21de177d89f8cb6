"""Optical elements, the interferometer graph, and photon propagation.

Every connection (edge) between two element ports carries one spatial mode,
and the amplitude on it is a polarization 2-vector in the rectilinear
{H, V} frame.  Propagation visits the nodes in topological order; each
element is a linear map from the vectors on its input ports to the vectors
on its output ports.

Elements are plain objects with ``in_ports``, ``out_ports`` and a
``transform(inputs) -> outputs`` method, so custom elements can be dropped
into a network for testing.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import NetworkError
from .hilbert import ATOL, HADAMARD, KET_H, KET_M, KET_P, KET_V, PhotonState, to_frame

DETECTORS = tuple(f"D{k}" for k in range(1, 9))

_BASIS_VECTORS = {"H": KET_H, "V": KET_V, "P": KET_P, "M": KET_M}
_SPLIT_LABELS = {"rect": ("H", "V"), "diag": ("P", "M")}

# Interferometer arms between PS1/PS2 and the two balanced splitters.
ARMS = ("u_S1", "d_S1", "u_S2", "d_S2")


def _zero() -> np.ndarray:
    return np.zeros(2, dtype=complex)


@dataclass(frozen=True)
class Source:
    kind = "Source"
    in_ports = ()
    out_ports = ("out",)

    def transform(self, inputs):
        return {"out": _zero()}


@dataclass(frozen=True)
class PolarizingBS:
    """Transmits the ``transmit`` component of ``split_basis``, reflects the orthogonal one."""

    split_basis: str = "rect"
    transmit: str = "H"
    reflection_phase: complex = 1.0
    kind = "PolarizingBS"
    in_ports = ("in",)
    out_ports = ("t", "r")

    def __post_init__(self):
        if self.split_basis not in _SPLIT_LABELS:
            raise ValueError(f"unknown split basis {self.split_basis!r}")
        if self.transmit not in _SPLIT_LABELS[self.split_basis]:
            raise ValueError(f"transmit label {self.transmit!r} is not in the {self.split_basis} basis")
        if abs(abs(self.reflection_phase) - 1.0) > ATOL:
            raise ValueError("reflection phase must have unit modulus")

    @property
    def reflect(self) -> str:
        a, b = _SPLIT_LABELS[self.split_basis]
        return b if self.transmit == a else a

    def split(self, pol: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        et = _BASIS_VECTORS[self.transmit]
        er = _BASIS_VECTORS[self.reflect]
        t = np.vdot(et, pol) * et
        r = self.reflection_phase * np.vdot(er, pol) * er
        return t, r

    def transform(self, inputs):
        t, r = self.split(inputs["in"])
        return {"t": t, "r": r}


@dataclass(frozen=True)
class BeamSplitter:
    """Polarization-independent splitter; ``transmittance=0.5`` is the balanced case.

    u -> sqrt(T) u' + sqrt(1-T) d',  d -> sqrt(1-T) u' - sqrt(T) d'
    """

    transmittance: float = 0.5
    kind = "BalancedBS"
    in_ports = ("u", "d")
    out_ports = ("u'", "d'")

    def __post_init__(self):
        if not 0.0 <= self.transmittance <= 1.0:
            raise ValueError("transmittance must lie in [0, 1]")

    @property
    def matrix(self) -> np.ndarray:
        if self.transmittance == 0.5:
            return HADAMARD
        t = np.sqrt(self.transmittance)
        r = np.sqrt(1.0 - self.transmittance)
        # columns are inputs (u, d), rows are outputs (u', d')
        return np.array([[t, r], [r, -t]], dtype=complex)

    def transform(self, inputs):
        m = self.matrix
        u, d = inputs["u"], inputs["d"]
        return {"u'": m[0, 0] * u + m[0, 1] * d, "d'": m[1, 0] * u + m[1, 1] * d}


@dataclass(frozen=True)
class PhaseShift:
    phi: float = 0.0
    kind = "PhaseShift"
    in_ports = ("in",)
    out_ports = ("out",)

    def transform(self, inputs):
        return {"out": np.exp(1j * self.phi) * inputs["in"]}


@dataclass(frozen=True)
class Detector:
    """Terminal element.  ``mode`` is the polarization of the port feeding it."""

    id: str
    mode: str = "H"
    kind = "Detector"
    in_ports = ("in",)
    out_ports = ()

    def transform(self, inputs):
        return {}


def balanced_bs(u, d, transmittance: float = 0.5):
    """Apply the splitter to the polarization vectors entering ports u and d.

    Returns the pair of vectors leaving (u', d').  The same path map acts on
    both polarization components.
    """
    out = BeamSplitter(transmittance).transform(
        {"u": np.asarray(u, dtype=complex), "d": np.asarray(d, dtype=complex)}
    )
    return out["u'"], out["d'"]


def polarizing_bs(kind: PolarizingBS, pol) -> tuple[np.ndarray, np.ndarray]:
    """(transmitted, reflected) polarization vectors."""
    return kind.split(np.asarray(pol, dtype=complex))


@dataclass(frozen=True)
class Edge:
    src: str
    src_port: str
    dst: str
    dst_port: str

    def __str__(self):
        return f"{self.src}.{self.src_port} -> {self.dst}.{self.dst_port}"


@dataclass(frozen=True, eq=False)
class OpticalNetwork:
    """Directed acyclic graph of elements connected port to port.

    ``arm_ports`` names the two output ports ("NODE.port") that carry the
    path modes u and d of a :class:`PhotonState`; a 4-vector state is
    injected there.  A bare polarization vector is injected at the source.
    """

    nodes: Mapping[str, object]
    edges: tuple[Edge, ...]
    detector_order: tuple[str, ...] = DETECTORS
    arm_ports: Mapping[str, str] = field(default_factory=lambda: {"u": "PS0.t", "d": "PS0.r"})

    def detector_nodes(self) -> dict[str, str]:
        """Detector id -> node name."""
        return {el.id: name for name, el in self.nodes.items() if getattr(el, "kind", None) == "Detector"}

    def count(self, kind: str) -> int:
        return sum(1 for el in self.nodes.values() if getattr(el, "kind", None) == kind)

    def topological_order(self) -> list[str]:
        ts = graphlib.TopologicalSorter({n: set() for n in self.nodes})
        for e in self.edges:
            ts.add(e.dst, e.src)
        try:
            return list(ts.static_order())
        except graphlib.CycleError as exc:
            raise NetworkError(f"network has a cycle: {' -> '.join(exc.args[1])}") from None


def build_fig1_network(arm_phases=(0.0, 0.0, 0.0, 0.0), bs_transmittance=(0.5, 0.5)) -> OpticalNetwork:
    """The single-photon contextuality interferometer.

    PS0 splits rectilinearly into arms u (H) and d (V).  PS1 on u transmits
    +45 and reflects -45; PS2 on d transmits -45 and reflects +45.  The
    reflected beams meet at S1, the transmitted ones at S2, and PS3..PS6
    resolve H/V in front of detectors D1..D8.  ``arm_phases`` are the phase
    shifts on the four arms named in :data:`ARMS`.
    """
    phases = dict(zip(ARMS, arm_phases, strict=True))
    t1, t2 = bs_transmittance
    nodes = {
        "SRC": Source(),
        "PS0": PolarizingBS("rect", "H"),
        "PS1": PolarizingBS("diag", "P"),
        "PS2": PolarizingBS("diag", "M"),
        "S1": BeamSplitter(t1),
        "S2": BeamSplitter(t2),
        "PS3": PolarizingBS("rect", "H"),
        "PS4": PolarizingBS("rect", "H"),
        "PS5": PolarizingBS("rect", "H"),
        "PS6": PolarizingBS("rect", "H"),
    }
    for arm in ARMS:
        nodes[f"PH_{arm}"] = PhaseShift(float(phases[arm]))
    # Table 1 fixes which polarizer port feeds which detector.
    readout = {
        "PS3": ("D1", "D2"),
        "PS4": ("D3", "D4"),
        "PS5": ("D5", "D6"),
        "PS6": ("D7", "D8"),
    }
    for ps, (dh, dv) in readout.items():
        nodes[dh] = Detector(dh, "H")
        nodes[dv] = Detector(dv, "V")

    wiring = [
        ("SRC.out", "PS0.in"),
        ("PS0.t", "PS1.in"),
        ("PS0.r", "PS2.in"),
        ("PS1.r", "PH_u_S1.in"),
        ("PS2.r", "PH_d_S1.in"),
        ("PS1.t", "PH_u_S2.in"),
        ("PS2.t", "PH_d_S2.in"),
        ("PH_u_S1.out", "S1.u"),
        ("PH_d_S1.out", "S1.d"),
        ("PH_u_S2.out", "S2.u"),
        ("PH_d_S2.out", "S2.d"),
        ("S1.u'", "PS3.in"),
        ("S1.d'", "PS4.in"),
        ("S2.u'", "PS5.in"),
        ("S2.d'", "PS6.in"),
    ]
    for ps, (dh, dv) in readout.items():
        wiring.append((f"{ps}.t", f"{dh}.in"))
        wiring.append((f"{ps}.r", f"{dv}.in"))
    return OpticalNetwork(nodes, tuple(_edge(a, b) for a, b in wiring))


def _split_port(ref: str) -> tuple[str, str]:
    node, _, port = ref.partition(".")
    if not port:
        raise ValueError(f"port reference {ref!r} must look like NODE.port")
    return node, port


def _edge(src: str, dst: str) -> Edge:
    return Edge(*_split_port(src), *_split_port(dst))


@dataclass(frozen=True, eq=False)
class DetectorAmplitudes:
    """Field arriving at each detector, as a polarization vector per detector."""

    fields: np.ndarray  # shape (n_detectors, 2)
    modes: tuple[str, ...]
    detector_order: tuple[str, ...] = DETECTORS

    @property
    def amp(self) -> np.ndarray:
        """Complex amplitude in the mode feeding each detector."""
        return np.array([np.vdot(_BASIS_VECTORS[m], f) for m, f in zip(self.modes, self.fields)])

    @property
    def probabilities(self) -> np.ndarray:
        return np.sum(np.abs(self.fields) ** 2, axis=1)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.detector_order, self.probabilities.tolist()))


def _run(net: OpticalNetwork, injected: dict[tuple[str, str], np.ndarray], order=None) -> dict[str, np.ndarray]:
    order = order or net.topological_order()
    incoming: dict[tuple[str, str], np.ndarray] = {}
    by_src: dict[tuple[str, str], list[Edge]] = {}
    for e in net.edges:
        by_src.setdefault((e.src, e.src_port), []).append(e)
    arrived = {}
    for name in order:
        el = net.nodes[name]
        inputs = {p: incoming.get((name, p), _zero()) for p in el.in_ports}
        if getattr(el, "kind", None) == "Detector":
            arrived[el.id] = inputs["in"]
            continue
        outputs = el.transform(inputs)
        for port in el.out_ports:
            vec = outputs[port] + injected.get((name, port), 0)
            for e in by_src.get((name, port), []):
                incoming[(e.dst, e.dst_port)] = incoming.get((e.dst, e.dst_port), _zero()) + vec
    return arrived


def _source_name(net: OpticalNetwork) -> str:
    srcs = [n for n, el in net.nodes.items() if getattr(el, "kind", None) == "Source"]
    if len(srcs) != 1:
        raise NetworkError(f"expected exactly one source, found {len(srcs)}")
    return srcs[0]


def propagate(net: OpticalNetwork, state) -> DetectorAmplitudes:
    """Propagate a photon to the detectors.

    ``state`` is either a polarization 2-vector entering at the source, or a
    :class:`PhotonState` placed on the two arm ports (just after PS0).
    """
    if isinstance(state, PhotonState):
        if state.path_frame != "ud":
            raise NetworkError("arm injection needs a state in the pre-splitter path frame")
        m = to_frame(state, "ud", "rect").as_matrix()
        injected = {_split_port(net.arm_ports["u"]): m[0], _split_port(net.arm_ports["d"]): m[1]}
    else:
        pol = np.asarray(state, dtype=complex)
        if pol.shape != (2,):
            raise ValueError("source input must be a polarization 2-vector or a PhotonState")
        injected = {(_source_name(net), "out"): pol}
    arrived = _run(net, injected)
    dets = net.detector_nodes()
    fields = np.array([arrived.get(d, _zero()) for d in net.detector_order])
    modes = tuple(getattr(net.nodes[dets[d]], "mode", "H") if d in dets else "H" for d in net.detector_order)
    return DetectorAmplitudes(fields, modes, tuple(net.detector_order))


def transfer_matrix(net: OpticalNetwork) -> np.ndarray:
    """Linear map from arm states (canonical 4-vector) to detector fields.

    Shape ``(n_detectors, 2, 4)``: detector, polarization, input basis index.
    """
    cols = []
    for k in range(4):
        e = np.zeros(4, dtype=complex)
        e[k] = 1.0
        cols.append(propagate(net, PhotonState(e)).fields)
    return np.stack(cols, axis=-1)


def source_transfer_matrix(net: OpticalNetwork) -> np.ndarray:
    """Like :func:`transfer_matrix` but for a polarization entering at the source; shape (n, 2, 2)."""
    cols = [propagate(net, np.eye(2, dtype=complex)[k]).fields for k in range(2)]
    return np.stack(cols, axis=-1)


@dataclass
class ValidationReport:
    problems: list[str] = field(default_factory=list)
    max_deficit: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.problems

    def __str__(self):
        if self.ok:
            return f"network OK (max probability deficit {self.max_deficit:.2e})"
        return "network invalid:\n" + "\n".join(f"  - {p}" for p in self.problems)


def validate_network(net: OpticalNetwork, tol: float = ATOL) -> ValidationReport:
    """Check structure and probability conservation; collects every failure."""
    rep = ValidationReport()
    for e in net.edges:
        for node, port, side in ((e.src, e.src_port, "out_ports"), (e.dst, e.dst_port, "in_ports")):
            if node not in net.nodes:
                rep.problems.append(f"edge {e} references unknown node {node!r}")
            elif port not in getattr(net.nodes[node], side):
                rep.problems.append(f"edge {e} references unknown port {node}.{port}")
    if rep.problems:
        return rep

    try:
        net.topological_order()
    except NetworkError as exc:
        rep.problems.append(str(exc))
        return rep

    out_use: dict[tuple[str, str], int] = {}
    in_use: dict[tuple[str, str], int] = {}
    for e in net.edges:
        out_use[(e.src, e.src_port)] = out_use.get((e.src, e.src_port), 0) + 1
        in_use[(e.dst, e.dst_port)] = in_use.get((e.dst, e.dst_port), 0) + 1
    for name, el in net.nodes.items():
        for port in el.out_ports:
            n = out_use.get((name, port), 0)
            if n != 1:
                rep.problems.append(f"output port {name}.{port} is connected {n} times (expected 1)")
        for port in el.in_ports:
            if in_use.get((name, port), 0) > 1:
                rep.problems.append(f"input port {name}.{port} has {in_use[(name, port)]} incoming edges")
        if getattr(el, "kind", None) == "Detector" and in_use.get((name, "in"), 0) == 0:
            rep.problems.append(f"detector {name} is not connected")

    n_src = net.count("Source")
    if n_src != 1:
        rep.problems.append(f"expected exactly one source, found {n_src}")
    dets = net.detector_nodes()
    if len(dets) != len(net.detector_order) or set(dets) != set(net.detector_order):
        rep.problems.append(f"expected detectors {list(net.detector_order)}, found {sorted(dets)}")
    for label, ref in net.arm_ports.items():
        node, port = _split_port(ref)
        if node not in net.nodes or port not in net.nodes[node].out_ports:
            rep.problems.append(f"arm port {label}={ref} does not exist")
    if rep.problems:
        return rep

    worst = 0.0
    for k in range(4):
        e = np.zeros(4, dtype=complex)
        e[k] = 1.0
        total = float(propagate(net, PhotonState(e)).probabilities.sum())
        worst = max(worst, abs(1.0 - total))
    for pol in np.eye(2, dtype=complex):
        total = float(propagate(net, pol).probabilities.sum())
        worst = max(worst, abs(1.0 - total))
    rep.max_deficit = worst
    if worst > tol:
        rep.problems.append(f"probability not conserved: max deficit {worst:.3e} over basis probes")
    return rep


def dump_network(net: OpticalNetwork) -> str:
    """Adjacency listing, one ``NODE.port -> NODE.port`` edge per line."""
    return "\n".join(str(e) for e in net.edges) + "\n"


def parse_dump(text: str) -> list[Edge]:
    edges = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        src, arrow, dst = line.partition(" -> ")
        if not arrow:
            raise ValueError(f"malformed edge line {line!r}")
        edges.append(_edge(src.strip(), dst.strip()))
    return edges
