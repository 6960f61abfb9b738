"""Addition-closed lattices of decay exponents.

The construction needs, for each target exponent mu_n, the exact pairs
mu_i + mu_j = mu_n and the exact unit shift mu_lambda + 1 = mu_n, so members
are Fractions and all lookups are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import LatticeError
from .exponents import rat

DEFAULT_MAX_COUNT = 10_000


@dataclass(frozen=True)
class ExponentLattice:
    """Sorted exponents mu_1 < mu_2 < ... closed under addition up to cutoff.

    For level m_* = 0 the set is additionally closed under +1 (the extra
    integer shifts kappa).  ``dims`` optionally carries the per-index
    (M_n, Mt_n) bookkeeping once an expansion has been built.
    """

    m_star: int
    generators: tuple
    cutoff: Fraction
    mus: tuple
    dims: tuple = field(default=())

    def __post_init__(self):
        if any(m <= 0 for m in self.mus):
            raise LatticeError("exponents must be positive")
        if any(a >= b for a, b in zip(self.mus, self.mus[1:])):
            raise LatticeError("exponents must be strictly increasing")

    def __len__(self):
        return len(self.mus)

    def index_of(self, mu) -> int | None:
        """0-based index of an exact member, or None."""
        mu = rat(mu)
        try:
            return self._index_cache[mu]
        except AttributeError:
            object.__setattr__(self, "_index_cache",
                               {m: i for i, m in enumerate(self.mus)})
            return self._index_cache.get(mu)
        except KeyError:
            return None

    def pairs_summing_to(self, n: int):
        """All (i, j) 0-based with mu_i + mu_j = mu_n and i, j < n."""
        target = self.mus[n]
        out = []
        for i in range(n):
            rest = target - self.mus[i]
            j = self.index_of(rest)
            if j is not None and j < n:
                out.append((i, j))
        return out

    def unit_shift_source(self, n: int) -> int | None:
        """The unique 0-based lambda with mu_lambda + 1 = mu_n, if any."""
        target = self.mus[n] - 1
        matches = [i for i in range(n) if self.mus[i] == target]
        if len(matches) > 1:
            raise LatticeError(
                f"multiple unit-shift sources for mu_{n + 1}: the lattice is "
                "corrupted (must be strictly increasing)"
            )
        return matches[0] if matches else None

    def closure_violations(self):
        """Members whose pairwise sums (and +1 shifts for m_*=0) escape the set.

        Only sums back inside [0, cutoff] count; everything beyond the cutoff
        is out of scope by construction.
        """
        members = set(self.mus)
        bad = []
        for i, a in enumerate(self.mus):
            for b in self.mus[i:]:
                s = a + b
                if s <= self.cutoff and s not in members:
                    bad.append((a, b, s))
            if self.m_star == 0:
                s = a + 1
                if s <= self.cutoff and s not in members:
                    bad.append((a, Fraction(1), s))
        return bad

    def valid_n_max(self) -> int:
        """Largest N whose construction only consults sums inside the cutoff.

        The recursion for q_N looks up pairs with mu_i + mu_j = mu_N and the
        shift mu_N - 1, so results are reliable for 2*mu_N <= cutoff and,
        when m_* = 0, mu_N + 1 <= cutoff.
        """
        best = 0
        for n, mu in enumerate(self.mus, start=1):
            if 2 * mu > self.cutoff:
                break
            if self.m_star == 0 and mu + 1 > self.cutoff:
                break
            best = n
        return best

    def to_json_dict(self) -> dict:
        return {
            "m_star": self.m_star,
            "generators": [[g.numerator, g.denominator] for g in self.generators],
            "cutoff": [self.cutoff.numerator, self.cutoff.denominator],
            "mus": [[m.numerator, m.denominator] for m in self.mus],
            "dims": [list(d) for d in self.dims],
        }

    @classmethod
    def from_json_dict(cls, data) -> "ExponentLattice":
        return cls(
            m_star=data["m_star"],
            generators=tuple(Fraction(a, b) for a, b in data["generators"]),
            cutoff=Fraction(*data["cutoff"]),
            mus=tuple(Fraction(a, b) for a, b in data["mus"]),
            dims=tuple(tuple(d) for d in data.get("dims", [])),
        )


def build_lattice(generators, m_star: int, cutoff,
                  max_count: int = DEFAULT_MAX_COUNT) -> ExponentLattice:
    """Enumerate all sums of generators (plus integer shifts when m_* = 0).

    Worklist closure: every member must use at least one generator; members
    are kept up to the cutoff, sorted, and deduplicated exactly.
    """
    gens = tuple(sorted(rat(g) for g in generators))
    cutoff = rat(cutoff)
    if not gens:
        raise LatticeError("need at least one generator")
    if any(g <= 0 for g in gens):
        raise LatticeError("generators must be positive")
    if cutoff < max(gens):
        raise LatticeError("cutoff must reach the largest generator")
    increments = gens + ((Fraction(1),) if m_star == 0 else ())
    members = set()
    frontier = [g for g in gens if g <= cutoff]
    members.update(frontier)
    while frontier:
        nxt = []
        for x in frontier:
            for inc in increments:
                y = x + inc
                if y <= cutoff and y not in members:
                    members.add(y)
                    nxt.append(y)
            if len(members) > max_count:
                raise LatticeError(
                    f"lattice would exceed {max_count} members below the "
                    f"cutoff {cutoff}; raise max_count or lower the cutoff"
                )
        frontier = nxt
    return ExponentLattice(m_star=int(m_star), generators=gens, cutoff=cutoff,
                           mus=tuple(sorted(members)))
