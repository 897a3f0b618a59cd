from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from tmbinomial import settings
from tmbinomial.errors import AlphabetError, InsufficientPrefixError, IntervalError, PreconditionError


logger = logging.getLogger(__name__)

# One unsigned byte per letter; bytes order is the lexicographic order of letter values.
Word = bytes
Letter = int
EMPTY: Word = b""


def check_alphabet(w: Word, m: int) -> None:
    if w and max(w) >= m:
        raise AlphabetError(f"letter {max(w)} outside alphabet of size {m}")


def make_word(letters: Iterable[int], m: Optional[int] = None) -> Word:
    bound = settings.MAX_ALPHABET + 1 if m is None else m
    values = list(letters)
    for a in values:
        if not 0 <= a < bound:
            raise AlphabetError(f"letter {a} outside alphabet of size {bound}")
    return bytes(values)


def word_from_text(text: str) -> Word:
    """
    Digits for m <= 10 ("012120"), comma-separated decimals beyond ("10,0,11").
    """
    text = text.strip()
    if not text:
        return EMPTY
    if "," in text:
        try:
            return make_word(int(part) for part in text.split(","))
        except ValueError as exc:
            raise AlphabetError(f"cannot read word {text!r}") from exc
    if not text.isdigit():
        raise AlphabetError(f"cannot read word {text!r}: use digits or comma-separated letters")
    return bytes(ord(ch) - 48 for ch in text)


def word_to_text(w: Word, m: int) -> str:
    if m <= 10:
        return bytes(a + 48 for a in w).decode("ascii")
    return ",".join(str(a) for a in w)


def parikh(w: Word, m: int) -> Tuple[int, ...]:
    check_alphabet(w, m)
    return tuple(w.count(a) for a in range(m))


@dataclass(frozen=True)
class Morphism:
    m: int
    images: Tuple[Word, ...]

    def __post_init__(self) -> None:
        if not 2 <= self.m <= settings.MAX_ALPHABET:
            raise AlphabetError(f"alphabet size {self.m} outside [2, {settings.MAX_ALPHABET}]")
        if len(self.images) != self.m:
            raise AlphabetError(f"expected {self.m} images, got {len(self.images)}")
        for img in self.images:
            if not img:
                raise PreconditionError("erasing morphisms are not supported")
            check_alphabet(img, self.m)

    @classmethod
    def from_images(cls, images: Sequence[Union[str, Word]]) -> "Morphism":
        words = tuple(word_from_text(img) if isinstance(img, str) else bytes(img) for img in images)
        return cls(m=len(words), images=words)

    @property
    def parikh_constant(self) -> bool:
        first = parikh(self.images[0], self.m)
        return all(parikh(img, self.m) == first for img in self.images[1:])

    @property
    def prolongable_on(self) -> Optional[Letter]:
        for a, img in enumerate(self.images):
            if self.is_prolongable_on(a):
                return a
        return None

    def is_prolongable_on(self, a: Letter) -> bool:
        return 0 <= a < self.m and len(self.images[a]) >= 2 and self.images[a][0] == a

    @property
    def uniform_length(self) -> Optional[int]:
        lengths = {len(img) for img in self.images}
        return lengths.pop() if len(lengths) == 1 else None

    def inverse_images(self) -> Dict[Word, Letter]:
        inverse = {img: a for a, img in enumerate(self.images)}
        if len(inverse) != self.m:
            raise PreconditionError("morphism is not injective on letters")
        return inverse

    def images_text(self) -> List[str]:
        return [word_to_text(img, self.m) for img in self.images]


def apply_morphism(phi: Morphism, w: Word) -> Word:
    check_alphabet(w, phi.m)
    images = phi.images
    return b"".join(images[a] for a in w)


def fixed_point_prefix(phi: Morphism, seed: Letter, min_len: int) -> Word:
    if not phi.is_prolongable_on(seed):
        raise PreconditionError(f"morphism is not prolongable on {seed}")
    if min_len < 1:
        raise PreconditionError("min_len must be at least 1")
    w = bytes([seed])
    while len(w) < min_len:
        w = apply_morphism(phi, w)
    return w


def factors(w: Word, n: int) -> List[Word]:
    if n < 0:
        raise PreconditionError("factor length must be non-negative")
    if n == 0:
        return [EMPTY]
    if n > len(w):
        return []
    return sorted({w[i : i + n] for i in range(len(w) - n + 1)})


def boundary_pairs(w: Word, n: int) -> FrozenSet[Word]:
    if n < 2:
        raise PreconditionError("boundary pairs need n >= 2")
    return frozenset(bytes((w[i], w[i + n - 1])) for i in range(len(w) - n + 1))


class IntervalKind(str, Enum):
    CLOSED = "closed"
    OPEN = "open"
    HALF_OPEN_LEFT = "half_open_left"  # (c, d]
    HALF_OPEN_RIGHT = "half_open_right"  # [c, d)


@dataclass(frozen=True)
class CircularInterval:
    c: Letter
    d: Letter
    kind: IntervalKind = IntervalKind.CLOSED


def interval_members(iv: CircularInterval, m: int) -> FrozenSet[Letter]:
    if iv.c == iv.d:
        raise IntervalError(f"interval with equal endpoints {iv.c} is undefined")
    if not (0 <= iv.c < m and 0 <= iv.d < m):
        raise IntervalError(f"interval endpoints {iv.c}, {iv.d} outside alphabet of size {m}")
    arc = {(iv.c + i) % m for i in range((iv.d - iv.c) % m + 1)}
    if iv.kind in (IntervalKind.OPEN, IntervalKind.HALF_OPEN_LEFT):
        arc.discard(iv.c)
    if iv.kind in (IntervalKind.OPEN, IntervalKind.HALF_OPEN_RIGHT):
        arc.discard(iv.d)
    return frozenset(arc)


def is_cube_free(w: Word) -> bool:
    """
    A cube of period p is a run of 2p consecutive positions with w[j] == w[j + p].
    """
    arr = np.frombuffer(w, dtype=np.uint8)
    size = len(arr)
    for p in range(1, size // 3 + 1):
        eq = (arr[:-p] == arr[p:]).astype(np.int64)
        sums = np.concatenate(([0], np.cumsum(eq)))
        if np.any(sums[2 * p :] - sums[: -2 * p] == 2 * p):
            return False
    return True


def window_parikh(w: Word, n: int, m: int) -> np.ndarray:
    """Parikh vectors of every length-n window of w, one row per start position."""
    check_alphabet(w, m)
    if n > len(w):
        return np.zeros((0, m), dtype=np.int64)
    arr = np.frombuffer(w, dtype=np.uint8)
    onehot = np.zeros((len(arr) + 1, m), dtype=np.int64)
    onehot[np.arange(1, len(arr) + 1), arr] = 1
    sums = np.cumsum(onehot, axis=0)
    return sums[n:] - sums[: len(sums) - n]


@lru_cache(maxsize=64)
def two_factors(phi: Morphism, seed: Letter) -> FrozenSet[Word]:
    if not phi.is_prolongable_on(seed):
        raise PreconditionError(f"morphism is not prolongable on {seed}")
    found = set(factors(phi.images[seed], 2))
    frontier = list(found)
    while frontier:
        xy = frontier.pop()
        for pair in factors(apply_morphism(phi, xy), 2):
            if pair not in found:
                found.add(pair)
                frontier.append(pair)
    return frozenset(found)


def covering_depth(phi: Morphism, n: int) -> int:
    size = phi.uniform_length
    if size is None or size < 2:
        raise PreconditionError("covering words need a uniform morphism with images of length >= 2")
    j = 1
    while size**j < n - 1:
        j += 1
    return j


@lru_cache(maxsize=256)
def covering_words(phi: Morphism, seed: Letter, n: int) -> Tuple[Word, ...]:
    """
    Images phi^j(xy) of the 2-factors xy, with j minimal such that |phi^j(x)| >= n - 1.

    Any length-n window of the fixed point lies inside the image of two adjacent
    letters at depth j, so these words carry exactly the length-n factors.
    """
    depth = covering_depth(phi, n)
    hosts = []
    for xy in sorted(two_factors(phi, seed)):
        w = xy
        for _ in range(depth):
            w = apply_morphism(phi, w)
        hosts.append(w)
    return tuple(hosts)


def fixed_point_factors(phi: Morphism, seed: Letter, n: int) -> List[Word]:
    if n == 0:
        return [EMPTY]
    found: set[Word] = set()
    for host in covering_words(phi, seed, max(n, 2)):
        found.update(host[i : i + n] for i in range(len(host) - n + 1))
    return sorted(found)


_prefix_cache: Dict[Tuple[Morphism, Letter], Word] = {}


@dataclass(frozen=True)
class MorphicWord:
    """Fixed point of a uniform morphism, handled through explicit prefixes."""

    phi: Morphism
    seed: Letter = 0

    def __post_init__(self) -> None:
        if not self.phi.is_prolongable_on(self.seed):
            raise PreconditionError(f"morphism is not prolongable on {self.seed}")

    @property
    def m(self) -> int:
        return self.phi.m

    def prefix(self, min_len: int) -> Word:
        key = (self.phi, self.seed)
        cached = _prefix_cache.get(key, EMPTY)
        if len(cached) < min_len:
            cached = fixed_point_prefix(self.phi, self.seed, max(min_len, 1))
            _prefix_cache[key] = cached
        return cached

    def two_factors(self) -> FrozenSet[Word]:
        return two_factors(self.phi, self.seed)

    def covering_words(self, n: int) -> Tuple[Word, ...]:
        return covering_words(self.phi, self.seed, max(n, 2))

    def factors(self, n: int) -> List[Word]:
        return fixed_point_factors(self.phi, self.seed, n)


def initial_prefix_length(n: int, m: int, growth_k: int) -> int:
    return max(growth_k * n, m**3, n, 1)


def stabilized_prefix(
    source: MorphicWord,
    n: int,
    growth_k: Optional[int] = None,
    max_doublings: Optional[int] = None,
) -> Word:
    """
    Smallest doubled prefix on which the length-n factor set agrees with the previous length.

    Starts from max(K * n, m^3) letters and doubles until two consecutive values
    agree; gives up after max_doublings.
    """
    growth_k = settings.PREFIX_GROWTH_K if growth_k is None else growth_k
    max_doublings = settings.MAX_DOUBLINGS if max_doublings is None else max_doublings

    length = initial_prefix_length(n, source.m, growth_k)
    current = factors(source.prefix(length)[:length], n)
    for _ in range(max_doublings):
        length *= 2
        word = source.prefix(length)[:length]
        candidate = factors(word, n)
        if candidate == current:
            logger.info("n=%d stabilized at prefix length %d", n, length)
            return word
        logger.info("n=%d changed at prefix length %d, doubling", n, length)
        current = candidate
    raise InsufficientPrefixError(
        f"factors of length {n} did not stabilize within {max_doublings} doublings", n=n
    )


def stabilized_factors(
    source: MorphicWord,
    n: int,
    growth_k: Optional[int] = None,
    max_doublings: Optional[int] = None,
) -> List[Word]:
    return factors(stabilized_prefix(source, n, growth_k, max_doublings), n)
