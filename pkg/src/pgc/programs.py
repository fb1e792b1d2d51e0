"""Named circuit builders for the benchmark and friend-finder programs.

All integer values are little-endian bit vectors. Chain programs obey the
layout contract: the saved wires of step t line up positionally with the
partial inputs of step t+1.
"""

from __future__ import annotations

import math

from .circuit import CircuitIR, _Builder, lower_or, validate
from .errors import CircuitValidationError


def _addr_bits(entries: int) -> int:
    return max(1, math.ceil(math.log2(entries))) if entries > 1 else 1


def _wbits(vmax: int) -> int:
    return max(1, vmax.bit_length())


class _Vec:
    """Gate-level helpers over wire-id vectors."""

    def __init__(self, b: _Builder):
        self.b = b

    def eq_bit(self, x: int, y: int) -> int:
        return self.b.gate("NOT", self.b.gate("XOR", x, y))

    def gt(self, xs: list[int], ys: list[int]) -> int:
        """1 iff value(xs) > value(ys); LSB-first recurrence."""
        b = self.b
        gt = None
        for x, y in zip(xs, ys):
            ny = b.gate("NOT", y)
            t1 = b.gate("AND", x, ny)
            if gt is None:
                gt = t1
            else:
                d = b.gate("XOR", x, y)
                nd = b.gate("NOT", d)
                t2 = b.gate("AND", nd, gt)
                gt = b.gate("XOR", t1, t2)  # t1 and t2 are exclusive
        return gt

    def increment(self, xs: list[int], out_width: int) -> list[int]:
        """xs + 1 in out_width bits; xs is zero-extended, overflow dropped."""
        b = self.b
        out: list[int] = []
        carry = None  # None means carry-in of 1 at the LSB
        for i in range(out_width):
            x = xs[i] if i < len(xs) else None
            if x is None:
                if carry is None:
                    raise CircuitValidationError("increment width underflow")
                out.append(carry)
                zero = b.gate("XOR", carry, carry)
                carry = zero
            elif carry is None:
                out.append(b.gate("NOT", x))
                carry = x
            else:
                out.append(b.gate("XOR", x, carry))
                carry = b.gate("AND", x, carry)
        return out

    def add_const(self, xs: list[int], k: int) -> list[int]:
        """xs + k mod 2**len(xs)."""
        b = self.b
        out: list[int] = []
        carry = None  # wire id, or None for constant-0 carry
        for i, x in enumerate(xs):
            kb = (k >> i) & 1
            if carry is None:
                if kb == 0:
                    out.append(x)
                    carry = None
                else:
                    out.append(b.gate("NOT", x))
                    carry = x
            else:
                if kb == 0:
                    out.append(b.gate("XOR", x, carry))
                    carry = b.gate("AND", x, carry)
                else:
                    s = b.gate("XOR", x, carry)
                    out.append(b.gate("NOT", s))
                    carry = b.gate("OR", x, carry)
        return out

    def gate_and_vec(self, e: int, xs: list[int]) -> list[int]:
        return [self.b.gate("AND", e, x) for x in xs]

    def mux_max(self, xs: list[int], ys: list[int]) -> list[int]:
        """max(xs, ys), equal widths."""
        b = self.b
        g = self.gt(xs, ys)
        out = []
        for x, y in zip(xs, ys):
            d = b.gate("XOR", x, y)
            t = b.gate("AND", g, d)
            out.append(b.gate("XOR", y, t))
        return out

    def zeroext(self, xs: list[int], width: int, zero: int) -> list[int]:
        return list(xs) + [zero] * (width - len(xs))

    def selector(self, addr: list[int], value: int) -> int:
        """1 iff the address wires equal the constant value."""
        b = self.b
        terms = []
        for i, w in enumerate(addr):
            terms.append(w if (value >> i) & 1 else b.gate("NOT", w))
        acc = terms[0]
        for t in terms[1:]:
            acc = b.gate("AND", acc, t)
        return acc


def millionaires(n: int) -> CircuitIR:
    """Generator holds a, evaluator holds b, both learn whether a > b."""
    if n < 1:
        raise CircuitValidationError("millionaires needs n >= 1")
    b = _Builder(n, n, 0)
    v = _Vec(b)
    out = v.gt(list(range(0, n)), list(range(n, 2 * n)))
    b.c.evl_outputs = [out]
    b.c.gen_outputs = [out]
    return lower_or(b.c)


def keyed_db(entries: int, width: int = 8) -> CircuitIR:
    """Evaluator enters a database plus a key, reads back the keyed entry.

    The database wires are saved so later queries reuse them via keyed_db_reuse.
    Out-of-range keys read as zero.
    """
    if entries < 1 or width < 1:
        raise CircuitValidationError("keyed_db needs entries >= 1, width >= 1")
    k = _addr_bits(entries)
    b = _Builder(0, entries * width + k, 0)
    v = _Vec(b)
    db = list(range(0, entries * width))
    addr = list(range(entries * width, entries * width + k))
    sels = [v.selector(addr, c) for c in range(entries)]
    out = []
    for w in range(width):
        terms = [b.gate("AND", sels[c], db[c * width + w]) for c in range(entries)]
        out.append(b.xor_tree(terms))
    b.c.evl_outputs = out
    b.c.saved_wires = db
    return lower_or(b.c)


def keyed_db_reuse(entries: int, width: int = 8) -> CircuitIR:
    """Query step against a database carried over as partial inputs."""
    if entries < 1 or width < 1:
        raise CircuitValidationError("keyed_db_reuse needs entries >= 1, width >= 1")
    k = _addr_bits(entries)
    b = _Builder(0, k, entries * width)
    v = _Vec(b)
    addr = list(range(0, k))
    db = list(range(k, k + entries * width))
    sels = [v.selector(addr, c) for c in range(entries)]
    out = []
    for w in range(width):
        terms = [b.gate("AND", sels[c], db[c * width + w]) for c in range(entries)]
        out.append(b.xor_tree(terms))
    b.c.evl_outputs = out
    b.c.saved_wires = db
    return lower_or(b.c)


def counter_init(n: int) -> CircuitIR:
    """Chain start: evaluator's value becomes the saved counter."""
    if n < 1:
        raise CircuitValidationError("counter_init needs n >= 1")
    c = CircuitIR(0, n, 0)
    c.evl_outputs = list(range(n))
    c.saved_wires = list(range(n))
    validate(c)
    return c


def counter(n: int) -> CircuitIR:
    """Chain step: increment the saved counter, save and report the new value."""
    if n < 1:
        raise CircuitValidationError("counter needs n >= 1")
    b = _Builder(0, 0, n)
    v = _Vec(b)
    out = v.increment(list(range(n)), n)
    b.c.evl_outputs = out
    b.c.saved_wires = out
    return lower_or(b.c)


def counter_full(n: int, steps: int) -> CircuitIR:
    """Monolithic comparison circuit: evaluator's value plus a constant."""
    if n < 1 or steps < 0:
        raise CircuitValidationError("counter_full needs n >= 1, steps >= 0")
    b = _Builder(0, n, 0)
    v = _Vec(b)
    out = v.add_const(list(range(n)), steps % (1 << n))
    b.c.evl_outputs = out
    return lower_or(b.c)


def _lcs_core(v: _Vec, a: list[int], bch: list[int], zero: int) -> list[int]:
    """Full longest-common-substring DP over 1-bit symbols; returns best length."""
    b = v.b
    n = len(a)
    w = _wbits(n)
    zeros = [zero] * w
    prev_row = [zeros] * (n + 1)  # M[i-1][*] during the sweep
    best = zeros
    for i in range(1, n + 1):
        row = [zeros]
        for j in range(1, n + 1):
            e = v.eq_bit(a[i - 1], bch[j - 1])
            inc = v.increment(prev_row[j - 1], w)
            cell = v.gate_and_vec(e, inc)
            row.append(cell)
            best = v.mux_max(cell, best)
        prev_row = row
    return best


def lcs_full(n: int) -> CircuitIR:
    """Longest common substring of two n-symbol strings (1-bit symbols).

    Generator enters string a, evaluator string b; evaluator learns the length.
    """
    if n < 1:
        raise CircuitValidationError("lcs_full needs n >= 1")
    b = _Builder(n, n, 0)
    v = _Vec(b)
    a = list(range(0, n))
    bs = list(range(n, 2 * n))
    zero = b.gate("XOR", a[0], a[0])
    b.c.evl_outputs = _lcs_core(v, a, bs, zero)
    return lower_or(b.c)


def lcs_step(n: int) -> CircuitIR:
    """Step n of the incremental longest-common-substring chain.

    Each step appends one symbol to both strings (generator and evaluator each
    enter one bit) and extends the DP frontier carried in the saved state:
    strings so far, last DP column and row, and the running best. Evaluator
    learns the current best length.

    Saved layout of step n (= partial layout of step n+1, all little-endian):
    a[1..n], b[1..n], col M[1..n][n], row M[n][1..n-1], best; DP values use
    bit-width fitting n.
    """
    if n < 1:
        raise CircuitValidationError("lcs_step needs n >= 1")
    w_in = _wbits(n - 1) if n > 1 else 0
    w_out = _wbits(n)
    p = 0 if n == 1 else 2 * (n - 1) + (2 * (n - 1)) * w_in
    b = _Builder(1, 1, p)
    v = _Vec(b)
    a_new, b_new = 0, 1
    zero = b.gate("XOR", a_new, a_new)

    def vec(base: int, idx: int, width: int) -> list[int]:
        return [base + idx * width + k for k in range(width)]

    if n == 1:
        # saved: a1, b1, col[1] = M[1][1], best (same value, distinct wires)
        e = v.eq_bit(a_new, b_new)
        cell = v.zeroext([e], w_out, zero)
        best = [b.gate("XOR", cw, zero) for cw in cell]
        b.c.saved_wires = [a_new, b_new] + cell + best
        b.c.evl_outputs = best
        return lower_or(b.c)

    base = 2
    a_old = [base + i for i in range(n - 1)]
    b_old = [base + (n - 1) + i for i in range(n - 1)]
    vals = base + 2 * (n - 1)
    col_old = [vec(vals, i, w_in) for i in range(n - 1)]            # M[i][n-1], i=1..n-1
    row_base = vals + (n - 1) * w_in
    row_old = [vec(row_base, j, w_in) for j in range(n - 2)]        # M[n-1][j], j=1..n-2
    best_old = vec(row_base + max(0, n - 2) * w_in, 0, w_in)
    corner = col_old[-1]                                            # M[n-1][n-1]
    row_full = row_old + [corner]                                   # M[n-1][1..n-1]

    a_all = a_old + [a_new]
    b_all = b_old + [b_new]
    zeros_in = [zero] * w_in

    # New column M[i][n], i = 1..n: diagonal predecessors M[i-1][n-1].
    col_new = []
    for i in range(1, n + 1):
        e = v.eq_bit(a_all[i - 1], b_new)
        diag = zeros_in if i == 1 else col_old[i - 2]
        inc = v.increment(diag, w_out)
        col_new.append(v.gate_and_vec(e, inc))
    # New row M[n][j], j = 1..n-1 (M[n][n] is col_new[-1]): predecessors M[n-1][j-1].
    row_new = []
    for j in range(1, n):
        e = v.eq_bit(a_new, b_all[j - 1])
        diag = zeros_in if j == 1 else row_full[j - 2]
        inc = v.increment(diag, w_out)
        row_new.append(v.gate_and_vec(e, inc))

    best = v.zeroext(best_old, w_out, zero)
    for cell in col_new + row_new:
        best = v.mux_max(cell, best)

    saved = list(a_all) + list(b_all)
    for cell in col_new:
        saved += cell
    for cell in row_new:
        saved += cell
    saved += best
    b.c.saved_wires = saved
    b.c.evl_outputs = best
    return lower_or(b.c)


def map_start(cells: int, cell_bits: int = 8) -> CircuitIR:
    """Fresh shared map: every cell zeroed and saved for the chain."""
    if cells < 1 or cell_bits < 1:
        raise CircuitValidationError("map_start needs cells >= 1, cell_bits >= 1")
    b = _Builder(0, 1, 0)  # one throwaway evaluator bit; the alphabet has no constants
    saved = [b.gate("XOR", 0, 0) for _ in range(cells * cell_bits)]
    b.c.saved_wires = saved
    return lower_or(b.c)


def map_set(cells: int, cell_bits: int = 8) -> CircuitIR:
    """Write value to one cell: evaluator enters value then cell index."""
    if cells < 1 or cell_bits < 1:
        raise CircuitValidationError("map_set needs cells >= 1, cell_bits >= 1")
    k = _addr_bits(cells)
    b = _Builder(0, cell_bits + k, cells * cell_bits)
    v = _Vec(b)
    value = list(range(0, cell_bits))
    addr = list(range(cell_bits, cell_bits + k))
    old_base = cell_bits + k
    saved = []
    sels = [v.selector(addr, c) for c in range(cells)]
    for c in range(cells):
        for w in range(cell_bits):
            old = old_base + c * cell_bits + w
            d = b.gate("XOR", old, value[w])
            t = b.gate("AND", sels[c], d)
            saved.append(b.gate("XOR", old, t))
    b.c.saved_wires = saved
    return lower_or(b.c)


def map_get(cells: int, cell_bits: int = 8) -> CircuitIR:
    """Read one cell; the map passes through unchanged as saved wires."""
    if cells < 1 or cell_bits < 1:
        raise CircuitValidationError("map_get needs cells >= 1, cell_bits >= 1")
    k = _addr_bits(cells)
    b = _Builder(0, k, cells * cell_bits)
    v = _Vec(b)
    addr = list(range(0, k))
    db_base = k
    sels = [v.selector(addr, c) for c in range(cells)]
    out = []
    for w in range(cell_bits):
        terms = [b.gate("AND", sels[c], db_base + c * cell_bits + w)
                 for c in range(cells)]
        out.append(b.xor_tree(terms))
    b.c.evl_outputs = out
    b.c.saved_wires = list(range(db_base, db_base + cells * cell_bits))
    return lower_or(b.c)


_BUILDERS = {
    "millionaires": (millionaires, 1, 1),
    "keyed_db": (keyed_db, 1, 2),
    "keyed_db_reuse": (keyed_db_reuse, 1, 2),
    "counter": (counter, 1, 1),
    "counter_init": (counter_init, 1, 1),
    "counter_full": (counter_full, 2, 2),
    "lcs_step": (lcs_step, 1, 1),
    "lcs_full": (lcs_full, 1, 1),
    "map_start": (map_start, 1, 2),
    "map_set": (map_set, 1, 2),
    "map_get": (map_get, 1, 2),
}


def build_program(name: str, params: tuple[int, ...] | list[int]) -> CircuitIR:
    """Build a named program; raises on unsupported names or bad arity."""
    if name not in _BUILDERS:
        raise CircuitValidationError(f"unsupported program {name!r}")
    fn, lo, hi = _BUILDERS[name]
    params = tuple(params)
    if not (lo <= len(params) <= hi):
        raise CircuitValidationError(
            f"{name} takes {lo}..{hi} parameters, got {len(params)}")
    return fn(*params)


def parse_program_spec(spec: str) -> tuple[str, tuple[int, ...]]:
    """Parse 'name:p1,p2' CLI syntax."""
    name, _, rest = spec.partition(":")
    if not rest:
        raise CircuitValidationError(f"program spec {spec!r} missing parameters")
    try:
        params = tuple(int(x) for x in rest.split(","))
    except ValueError:
        raise CircuitValidationError(f"bad program parameters in {spec!r}") from None
    return name, params
