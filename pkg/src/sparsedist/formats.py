"""Per-level storage formats.

Text form: one letter per storage level (``d`` dense, ``s`` compressed) with an
optional ``:``-separated mode order, e.g. ``ds`` for CSR and ``ds:1,0`` for CSC.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError, ValidationError

DENSE = "dense"
COMPRESSED = "compressed"

_LETTERS = {"d": DENSE, "s": COMPRESSED, "c": COMPRESSED}


@dataclass(frozen=True)
class FormatSpec:
    """Level kinds in storage order plus the tensor mode stored at each level."""

    levels: tuple[str, ...]
    mode_order: tuple[int, ...] | None = None

    def __post_init__(self):
        levels = tuple(self.levels)
        for kind in levels:
            if kind not in (DENSE, COMPRESSED):
                raise ValidationError(f"unknown level kind {kind!r}")
        order = tuple(range(len(levels))) if self.mode_order is None else tuple(
            int(m) for m in self.mode_order)
        if sorted(order) != list(range(len(levels))):
            raise ValidationError(f"mode order {order} is not a permutation of {len(levels)} modes")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "mode_order", order)

    @property
    def order(self) -> int:
        return len(self.levels)

    @property
    def all_dense(self) -> bool:
        return all(k == DENSE for k in self.levels)

    def level_of_mode(self, mode: int) -> int:
        return self.mode_order.index(mode)

    @classmethod
    def dense(cls, order: int) -> "FormatSpec":
        return cls((DENSE,) * order)

    def __str__(self):
        text = "".join("d" if k == DENSE else "s" for k in self.levels)
        if self.mode_order != tuple(range(self.order)):
            text += ":" + ",".join(str(m) for m in self.mode_order)
        return text


def parse_format(text: str) -> FormatSpec:
    text = text.strip()
    kinds, _, order = text.partition(":")
    try:
        levels = tuple(_LETTERS[ch] for ch in kinds.strip().lower())
    except KeyError as exc:
        raise ParseError(f"bad level letter {exc.args[0]!r} in format {text!r}") from None
    mode_order = None
    if order.strip():
        try:
            mode_order = tuple(int(m) for m in order.split(","))
        except ValueError:
            raise ParseError(f"bad mode order in format {text!r}") from None
        if len(mode_order) != len(levels):
            raise ParseError(f"format {text!r} lists {len(levels)} levels "
                             f"but {len(mode_order)} modes")
    return FormatSpec(levels, mode_order)


CSR = FormatSpec((DENSE, COMPRESSED))
CSC = FormatSpec((DENSE, COMPRESSED), (1, 0))
