"""Boolean circuit IR: text format, validation, lowering, simulation, augmentation.

Wire numbering is positional: generator inputs first, then evaluator inputs,
then partial (reused-value) inputs, then one wire per gate in file order. Gate
ids are therefore dense and double as wire ids. The executable gate alphabet
is AND/XOR/NOT; OR is accepted in the text format and by builders but is
lowered before anything downstream sees it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import CircuitFormatError, CircuitValidationError
from .primitives import toeplitz_mac_key_bits

OPS = ("AND", "XOR", "NOT", "OR")
EXEC_OPS = ("AND", "XOR", "NOT")


@dataclass(slots=True)
class Gate:
    out: int
    op: str
    a: int
    b: int = -1  # -1 for NOT


@dataclass(slots=True)
class CircuitIR:
    gen_inputs: int
    evl_inputs: int
    partial_inputs: int
    gates: list[Gate] = field(default_factory=list)
    evl_outputs: list[int] = field(default_factory=list)
    gen_outputs: list[int] = field(default_factory=list)
    saved_wires: list[int] = field(default_factory=list)

    @property
    def input_count(self) -> int:
        return self.gen_inputs + self.evl_inputs + self.partial_inputs

    @property
    def wire_count(self) -> int:
        return self.input_count + len(self.gates)

    def gen_input_wires(self) -> range:
        return range(0, self.gen_inputs)

    def evl_input_wires(self) -> range:
        return range(self.gen_inputs, self.gen_inputs + self.evl_inputs)

    def partial_input_wires(self) -> range:
        base = self.gen_inputs + self.evl_inputs
        return range(base, base + self.partial_inputs)

    def non_free_gate_count(self) -> int:
        return sum(1 for g in self.gates if g.op == "AND")


def validate(c: CircuitIR, allow_or: bool = False) -> None:
    """Raise CircuitValidationError unless the IR is well-formed."""
    if min(c.gen_inputs, c.evl_inputs, c.partial_inputs) < 0:
        raise CircuitValidationError("negative input count")
    next_id = c.input_count
    for g in c.gates:
        ops = OPS if allow_or else EXEC_OPS
        if g.op not in ops:
            raise CircuitValidationError(f"gate {g.out}: unknown op {g.op!r}")
        if g.out != next_id:
            raise CircuitValidationError(
                f"gate id {g.out} not dense (expected {next_id})")
        arity = 1 if g.op == "NOT" else 2
        refs = [g.a] if arity == 1 else [g.a, g.b]
        for r in refs:
            if not (0 <= r < g.out):
                raise CircuitValidationError(
                    f"gate {g.out}: input wire {r} not yet defined")
        if arity == 1 and g.b != -1:
            raise CircuitValidationError(f"gate {g.out}: NOT takes one input")
        next_id += 1
    for name, wires in (("evl output", c.evl_outputs),
                        ("gen output", c.gen_outputs),
                        ("saved", c.saved_wires)):
        for w in wires:
            if not (0 <= w < c.wire_count):
                raise CircuitValidationError(f"{name} wire {w} undefined")
    if len(set(c.saved_wires)) != len(c.saved_wires):
        raise CircuitValidationError("saved wire listed twice")


def lower_or(c: CircuitIR) -> CircuitIR:
    """Rewrite OR(a,b) as XOR(XOR(a,b), AND(a,b)); renumbers downstream wires."""
    if not any(g.op == "OR" for g in c.gates):
        return c
    wire_map = {w: w for w in range(c.input_count)}
    gates: list[Gate] = []
    next_id = c.input_count

    def emit(op: str, a: int, b: int = -1) -> int:
        nonlocal next_id
        gates.append(Gate(next_id, op, a, b))
        next_id += 1
        return next_id - 1

    for g in c.gates:
        a = wire_map[g.a]
        b = wire_map[g.b] if g.b != -1 else -1
        if g.op == "OR":
            x = emit("XOR", a, b)
            y = emit("AND", a, b)
            wire_map[g.out] = emit("XOR", x, y)
        elif g.op == "NOT":
            wire_map[g.out] = emit("NOT", a)
        else:
            wire_map[g.out] = emit(g.op, a, b)
    out = CircuitIR(
        c.gen_inputs, c.evl_inputs, c.partial_inputs, gates,
        [wire_map[w] for w in c.evl_outputs],
        [wire_map[w] for w in c.gen_outputs],
        [wire_map[w] for w in c.saved_wires],
    )
    validate(out)
    return out


def parse_circuit(text: str) -> CircuitIR:
    """Parse the text format, validate, and lower OR gates."""
    gen = evl = partial = None
    gates: list[Gate] = []
    evl_out: list[int] = []
    gen_out: list[int] = []
    saved: list[int] = []

    def bad(line_no: int, col: int, msg: str):
        raise CircuitFormatError(msg, line_no, col)

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kw = tok[0]
        if kw == "inputs":
            if gen is not None:
                bad(line_no, 1, "duplicate inputs line")
            if len(tok) != 7 or tok[1] != "gen" or tok[3] != "evl" or tok[5] != "partial":
                bad(line_no, 1, "expected: inputs gen <n> evl <m> partial <p>")
            try:
                gen, evl, partial = int(tok[2]), int(tok[4]), int(tok[6])
            except ValueError:
                bad(line_no, 1, "input counts must be integers")
        elif kw == "gate":
            if gen is None:
                bad(line_no, 1, "gate before inputs line")
            if len(tok) not in (4, 5):
                bad(line_no, 1, "expected: gate <id> <OP> <in1> [<in2>]")
            op = tok[2]
            if op not in OPS:
                bad(line_no, len(tok[0]) + len(tok[1]) + 3, f"unknown op {op!r}")
            try:
                gid = int(tok[1])
                a = int(tok[3])
                b = int(tok[4]) if len(tok) == 5 else -1
            except ValueError:
                bad(line_no, 1, "gate ids and wires must be integers")
            if op == "NOT" and len(tok) == 5:
                bad(line_no, 1, "NOT takes one input")
            if op != "NOT" and len(tok) == 4:
                bad(line_no, 1, f"{op} takes two inputs")
            gates.append(Gate(gid, op, a, b))
        elif kw == "out":
            if len(tok) < 2 or tok[1] not in ("evl", "gen"):
                bad(line_no, 1, "expected: out evl|gen <ids...>")
            try:
                ids = [int(t) for t in tok[2:]]
            except ValueError:
                bad(line_no, 1, "output ids must be integers")
            (evl_out if tok[1] == "evl" else gen_out).extend(ids)
        elif kw == "save":
            try:
                saved.extend(int(t) for t in tok[1:])
            except ValueError:
                bad(line_no, 1, "saved ids must be integers")
        else:
            bad(line_no, 1, f"unknown keyword {kw!r}")
    if gen is None:
        raise CircuitFormatError("missing inputs line", 1, 1)
    c = CircuitIR(gen, evl, partial, gates, evl_out, gen_out, saved)
    validate(c, allow_or=True)
    return lower_or(c)


def emit_circuit(c: CircuitIR) -> str:
    """Canonical text form; parse_circuit(emit_circuit(c)) == c for lowered IR."""
    lines = [f"inputs gen {c.gen_inputs} evl {c.evl_inputs} partial {c.partial_inputs}"]
    for g in c.gates:
        if g.op == "NOT":
            lines.append(f"gate {g.out} NOT {g.a}")
        else:
            lines.append(f"gate {g.out} {g.op} {g.a} {g.b}")
    if c.evl_outputs:
        lines.append("out evl " + " ".join(map(str, c.evl_outputs)))
    if c.gen_outputs:
        lines.append("out gen " + " ".join(map(str, c.gen_outputs)))
    if c.saved_wires:
        lines.append("save " + " ".join(map(str, c.saved_wires)))
    return "\n".join(lines) + "\n"


@dataclass(slots=True)
class SimResult:
    evl_bits: list[int]
    gen_bits: list[int]
    saved_bits: list[int]


def simulate_plaintext(c: CircuitIR, gen_bits: list[int], evl_bits: list[int],
                       partial_bits: list[int] | None = None) -> SimResult:
    """Evaluate the circuit over plain bits; the oracle for everything garbled."""
    partial_bits = partial_bits or []
    if (len(gen_bits), len(evl_bits), len(partial_bits)) != (
            c.gen_inputs, c.evl_inputs, c.partial_inputs):
        raise CircuitValidationError(
            f"input widths {len(gen_bits)}/{len(evl_bits)}/{len(partial_bits)} do not "
            f"match circuit {c.gen_inputs}/{c.evl_inputs}/{c.partial_inputs}")
    w = list(gen_bits) + list(evl_bits) + list(partial_bits)
    for g in c.gates:
        if g.op == "AND":
            w.append(w[g.a] & w[g.b])
        elif g.op == "XOR":
            w.append(w[g.a] ^ w[g.b])
        else:
            w.append(1 - w[g.a])
    return SimResult([w[i] for i in c.evl_outputs],
                     [w[i] for i in c.gen_outputs],
                     [w[i] for i in c.saved_wires])


@dataclass(slots=True)
class AugmentationSpec:
    """Knobs for the protocol-facing rewrite of a program circuit.

    encoding_width is the number of XOR shares per evaluator input bit,
    tag_bits the output-MAC width (0 disables the MAC), use_pads controls the
    one-time-pad output blinding inputs.
    """
    encoding_width: int = 8
    tag_bits: int = 32
    use_pads: bool = True

    def validate(self) -> None:
        if self.encoding_width < 1:
            raise CircuitValidationError("encoding_width must be >= 1")
        if self.tag_bits < 0:
            raise CircuitValidationError("tag_bits must be >= 0")


@dataclass(slots=True)
class AugmentedCircuit:
    """Protocol circuit plus the layout needed to build input vectors.

    Generator input order: original bits, output pad, MAC key.
    Evaluator input order: per-bit XOR shares, output pad, MAC key.
    Output order per party: padded data bits, then MAC tag bits.
    """
    ir: CircuitIR
    spec: AugmentationSpec
    orig_gen_bits: int
    orig_evl_bits: int
    gen_pad_bits: int
    gen_mac_bits: int
    evl_pad_bits: int
    evl_mac_bits: int
    evl_data_out_bits: int
    gen_data_out_bits: int

    @property
    def evl_share_bits(self) -> int:
        return self.orig_evl_bits * self.spec.encoding_width

    @property
    def gen_tag_bits(self) -> int:
        return len(self.ir.gen_outputs) - self.gen_data_out_bits

    @property
    def evl_tag_bits(self) -> int:
        return len(self.ir.evl_outputs) - self.evl_data_out_bits

    def gen_input_vector(self, orig: list[int], pad: list[int],
                         mac_key: list[int]) -> list[int]:
        if (len(orig), len(pad), len(mac_key)) != (
                self.orig_gen_bits, self.gen_pad_bits, self.gen_mac_bits):
            raise CircuitValidationError("generator input widths mismatch")
        return list(orig) + list(pad) + list(mac_key)

    def evl_aux_vector(self, pad: list[int], mac_key: list[int]) -> list[int]:
        """Evaluator input bits that ride alongside the encoded shares."""
        if (len(pad), len(mac_key)) != (self.evl_pad_bits, self.evl_mac_bits):
            raise CircuitValidationError("evaluator aux widths mismatch")
        return list(pad) + list(mac_key)


class _Builder:
    """Incremental gate appender used by augmentation and the program builders."""

    def __init__(self, gen: int, evl: int, partial: int):
        self.c = CircuitIR(gen, evl, partial)
        self._next = self.c.input_count

    def gate(self, op: str, a: int, b: int = -1) -> int:
        self.c.gates.append(Gate(self._next, op, a, b))
        self._next += 1
        return self._next - 1

    def xor_tree(self, wires: list[int]) -> int:
        acc = wires[0]
        for w in wires[1:]:
            acc = self.gate("XOR", acc, w)
        return acc


def augment_for_protocol(c: CircuitIR, spec: AugmentationSpec) -> AugmentedCircuit:
    """Rewrite a program circuit into its protocol form.

    Adds per-evaluator-bit XOR-share inputs with reconstruction trees, per-party
    one-time-pad inputs XORed onto data outputs, and per-party Toeplitz MAC
    subcircuits over the pre-pad outputs, tags appended after the data bits.
    """
    spec.validate()
    validate(c)
    kappa = spec.encoding_width
    g_out = len(c.gen_outputs)
    e_out = len(c.evl_outputs)
    gen_pad = g_out if spec.use_pads else 0
    evl_pad = e_out if spec.use_pads else 0
    gen_mac = toeplitz_mac_key_bits(g_out, spec.tag_bits)
    evl_mac = toeplitz_mac_key_bits(e_out, spec.tag_bits)

    new_gen = c.gen_inputs + gen_pad + gen_mac
    new_evl = c.evl_inputs * kappa + evl_pad + evl_mac
    b = _Builder(new_gen, new_evl, c.partial_inputs)

    gen_pad_base = c.gen_inputs
    gen_mac_base = gen_pad_base + gen_pad
    evl_base = new_gen
    evl_pad_base = evl_base + c.evl_inputs * kappa
    evl_mac_base = evl_pad_base + evl_pad
    partial_base = new_gen + new_evl

    # Reconstruct each original evaluator bit from its kappa shares.
    recon: list[int] = []
    for j in range(c.evl_inputs):
        shares = [evl_base + j * kappa + s for s in range(kappa)]
        recon.append(shares[0] if kappa == 1 else b.xor_tree(shares))

    wire_map: dict[int, int] = {}
    for w in range(c.gen_inputs):
        wire_map[w] = w
    for j in range(c.evl_inputs):
        wire_map[c.gen_inputs + j] = recon[j]
    for j in range(c.partial_inputs):
        wire_map[c.gen_inputs + c.evl_inputs + j] = partial_base + j

    for g in c.gates:
        a = wire_map[g.a]
        bb = wire_map[g.b] if g.b != -1 else -1
        wire_map[g.out] = b.gate(g.op, a, bb)

    def output_block(out_wires: list[int], pad_base: int, mac_base: int,
                     pad_count: int) -> list[int]:
        data = [wire_map[w] for w in out_wires]
        final: list[int] = []
        if pad_count:
            final = [b.gate("XOR", d, pad_base + i) for i, d in enumerate(data)]
        else:
            final = list(data)
        if spec.tag_bits and data:
            n = len(data)
            diag = [mac_base + i for i in range(spec.tag_bits + n - 1)]
            whiten = [mac_base + spec.tag_bits + n - 1 + i for i in range(spec.tag_bits)]
            for t in range(spec.tag_bits):
                terms = [whiten[t]]
                terms += [b.gate("AND", diag[t + l], data[l]) for l in range(n)]
                final.append(b.xor_tree(terms))
        return final

    b.c.evl_outputs = output_block(c.evl_outputs, evl_pad_base, evl_mac_base, evl_pad)
    b.c.gen_outputs = output_block(c.gen_outputs, gen_pad_base, gen_mac_base, gen_pad)
    b.c.saved_wires = [wire_map[w] for w in c.saved_wires]
    validate(b.c)
    return AugmentedCircuit(
        ir=b.c, spec=replace(spec),
        orig_gen_bits=c.gen_inputs, orig_evl_bits=c.evl_inputs,
        gen_pad_bits=gen_pad, gen_mac_bits=gen_mac,
        evl_pad_bits=evl_pad, evl_mac_bits=evl_mac,
        evl_data_out_bits=e_out, gen_data_out_bits=g_out,
    )
