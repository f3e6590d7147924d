"""Unigram-overlap translation metric with fragmentation penalty.

Matching runs in stages: exact surface forms first, then stemmed forms
over whatever is left, then (optionally) a synonym table. Stage match
counts are fixed by the token multisets; the specific position pairing
is then chosen to minimize the number of chunks, i.e. maximal runs of
matches contiguous in both sentences. The score is

    F_mean  = 10 * P * R / (R + 9 * P)
    penalty = 0.5 * (chunks / matches) ** 3
    score   = F_mean * (1 - penalty)

with P and R the matched fractions of the candidate and reference. An
identical 10-token sentence therefore scores exactly 0.9995.
"""

from __future__ import annotations

import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

_WORD = re.compile(r"\w+", re.UNICODE)

_SUFFIXES = (
    "ization", "ational", "fulness", "ousness",
    "ation", "ingly", "ness", "ment", "ings",
    "ies", "ing", "est", "ers",
    "ed", "es", "er", "ly", "s",
)


def tokenize(text: str) -> list[str]:
    """Lowercased unicode word tokens."""
    return [m.group(0).lower() for m in _WORD.finditer(text)]


def suffix_stemmer(token: str) -> str:
    """Crude language-neutral stemmer: strip one common suffix.

    Deliberately shallow; callers with language-specific needs pass
    their own ``stemmer`` callable to :func:`meteor`.
    """
    for suffix in _SUFFIXES:
        if token.endswith(suffix) and len(token) - len(suffix) >= 3:
            return token[: -len(suffix)]
    return token


def load_synonym_table(path: Path | str) -> dict[str, frozenset[str]]:
    """Parse comma-separated synonym groups, one group per line."""
    table: dict[str, set[str]] = defaultdict(set)
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        group = [w.strip().lower() for w in line.split(",") if w.strip()]
        for w in group:
            table[w].update(x for x in group if x != w)
    return {w: frozenset(s) for w, s in table.items()}


@dataclass(frozen=True)
class MeteorStats:
    matches: int
    chunks: int
    precision: float
    recall: float
    f_mean: float
    penalty: float
    score: float


def _count_chunks(pairs: Sequence[tuple[int, int]]) -> int:
    if not pairs:
        return 0
    ordered = sorted(pairs)
    chunks = 1
    for (ci, ri), (cj, rj) in zip(ordered, ordered[1:]):
        if cj != ci + 1 or rj != ri + 1:
            chunks += 1
    return chunks


def _stage_quotas(cand, ref, stemmer, synonyms):
    """Fix how many pairs each stage contributes, at multiset level."""
    cw, rw = Counter(cand), Counter(ref)
    exact_q = {w: min(cw[w], rw[w]) for w in cw.keys() & rw.keys()}
    exact_q = {w: q for w, q in exact_q.items() if q > 0}

    left_c, left_r = Counter(cw), Counter(rw)
    for w, q in exact_q.items():
        left_c[w] -= q
        left_r[w] -= q
    sc: Counter = Counter()
    sr: Counter = Counter()
    for w, k in left_c.items():
        if k > 0:
            sc[stemmer(w)] += k
    for w, k in left_r.items():
        if k > 0:
            sr[stemmer(w)] += k
    stem_q = {s: min(sc[s], sr[s]) for s in sc.keys() & sr.keys()}
    stem_q = {s: q for s, q in stem_q.items() if q > 0}

    syn_q: Counter = Counter()
    if synonyms:
        # canonical stem consumption: alphabetical within each stem class
        left2_c, left2_r = Counter(left_c), Counter(left_r)
        for side, counter in (("c", left2_c), ("r", left2_r)):
            for s, q in stem_q.items():
                need = q
                for w in sorted(counter):
                    if need == 0:
                        break
                    if counter[w] > 0 and stemmer(w) == s:
                        take = min(counter[w], need)
                        counter[w] -= take
                        need -= take
        cand_occ = [w for w in sorted(left2_c.elements())]
        ref_occ = [w for w in sorted(left2_r.elements())]

        def related(a: str, b: str) -> bool:
            return b in synonyms.get(a, ()) or a in synonyms.get(b, ())

        match_of = [-1] * len(ref_occ)

        def augment(u: int, seen: list[bool]) -> bool:
            for v in range(len(ref_occ)):
                if not seen[v] and related(cand_occ[u], ref_occ[v]):
                    seen[v] = True
                    if match_of[v] == -1 or augment(match_of[v], seen):
                        match_of[v] = u
                        return True
            return False

        for u in range(len(cand_occ)):
            augment(u, [False] * len(ref_occ))
        for v, u in enumerate(match_of):
            if u != -1:
                syn_q[(cand_occ[u], ref_occ[v])] += 1

    return exact_q, stem_q, dict(syn_q)


def _greedy_pairs(cand, ref, stems_c, stems_r, exact_q, stem_q, syn_q):
    """One valid quota-respecting assignment; seeds the branch and bound."""
    ref_free = [True] * len(ref)
    pairs: list[tuple[int, int]] = []
    eq, sq, yq = dict(exact_q), dict(stem_q), dict(syn_q)

    by_word = defaultdict(list)
    by_stem = defaultdict(list)
    free_count: Counter = Counter()
    for j, w in enumerate(ref):
        by_word[w].append(j)
        by_stem[stems_r[j]].append(j)
        free_count[w] += 1

    def grab(j_candidates, prev_j):
        follow = prev_j + 1
        for j in j_candidates:
            if ref_free[j] and j == follow:
                return j
        for j in j_candidates:
            if ref_free[j]:
                return j
        return None

    def surplus(j: int) -> bool:
        # never steal a reference position another word's exact quota still needs
        return free_count[ref[j]] > eq.get(ref[j], 0)

    prev_j = -2
    for i, w in enumerate(cand):
        j = None
        if eq.get(w, 0) > 0:
            j = grab(by_word[w], prev_j)
            if j is not None:
                eq[w] -= 1
        if j is None and sq.get(stems_c[i], 0) > 0:
            j = grab([x for x in by_stem[stems_c[i]] if ref[x] != w and surplus(x)], prev_j)
            if j is not None:
                sq[stems_c[i]] -= 1
        if j is None:
            for (cw_, rw_), q in yq.items():
                if cw_ == w and q > 0:
                    j = grab([x for x in by_word[rw_] if surplus(x)], prev_j)
                    if j is not None:
                        yq[(cw_, rw_)] -= 1
                        break
        if j is not None:
            ref_free[j] = False
            free_count[ref[j]] -= 1
            pairs.append((i, j))
            prev_j = j
    return pairs


def _min_chunk_pairs(cand, ref, stemmer, synonyms, node_budget: int = 200_000):
    """Chunk-minimal pairing among all quota-respecting assignments.

    Exhaustive branch and bound over candidate positions; a node budget
    guards against adversarial repetition, falling back to the best
    assignment found so far (at worst the greedy seed).
    """
    exact_q, stem_q, syn_q = _stage_quotas(cand, ref, stemmer, synonyms)
    matches = sum(exact_q.values()) + sum(stem_q.values()) + sum(syn_q.values())
    if matches == 0:
        return [], 0
    stems_c = [stemmer(w) for w in cand]
    stems_r = [stemmer(w) for w in ref]

    seed_pairs = _greedy_pairs(cand, ref, stems_c, stems_r, exact_q, stem_q, syn_q)
    best_pairs = list(seed_pairs)
    best_chunks = _count_chunks(seed_pairs) if len(seed_pairs) == matches else len(cand) + 1

    by_word = defaultdict(list)
    by_stem = defaultdict(list)
    for j, w in enumerate(ref):
        by_word[w].append(j)
        by_stem[stems_r[j]].append(j)
    suffix_count: list[Counter] = [Counter() for _ in range(len(cand) + 1)]
    for i in range(len(cand) - 1, -1, -1):
        suffix_count[i] = Counter(suffix_count[i + 1])
        suffix_count[i][cand[i]] += 1

    ref_free = [True] * len(ref)
    eq, sq, yq = dict(exact_q), dict(stem_q), dict(syn_q)
    pairs: list[tuple[int, int]] = []
    budget = [node_budget]

    def dfs(i: int, chunks: int, last: Optional[tuple[int, int]]):
        nonlocal best_pairs, best_chunks
        if budget[0] <= 0 or chunks >= best_chunks:
            return
        budget[0] -= 1
        if i == len(cand):
            if not any(eq.values()) and not any(sq.values()) and not any(yq.values()):
                best_pairs, best_chunks = list(pairs), chunks
            return
        w = cand[i]
        s = stems_c[i]
        options: list[tuple[str, object, int]] = []
        if eq.get(w, 0) > 0:
            options += [("e", w, j) for j in by_word[w] if ref_free[j]]
        if sq.get(s, 0) > 0:
            options += [("s", s, j) for j in by_stem[s] if ref_free[j] and ref[j] != w]
        for (cw_, rw_), q in yq.items():
            if cw_ == w and q > 0:
                options += [("y", (cw_, rw_), j) for j in by_word[rw_] if ref_free[j]]
        extend_j = last[1] + 1 if last is not None and last[0] == i - 1 else -1
        options.sort(key=lambda opt: (opt[2] != extend_j, opt[2]))
        for kind, key, j in options:
            quota = eq if kind == "e" else sq if kind == "s" else yq
            quota[key] -= 1
            ref_free[j] = False
            pairs.append((i, j))
            dfs(i + 1, chunks + (0 if j == extend_j else 1), (i, j))
            pairs.pop()
            ref_free[j] = True
            quota[key] += 1
        # leave position i unmatched if its word quota can still be met later
        if suffix_count[i + 1][w] >= eq.get(w, 0):
            dfs(i + 1, chunks, last)

    dfs(0, 0, None)
    if len(best_pairs) != matches:
        # no full assignment found (budget or synonym-allocation conflict):
        # report stats consistent with the pairs actually aligned
        matches = len(best_pairs)
    return best_pairs, matches


def alignment_stats(
    candidate: str,
    reference: str,
    *,
    stemmer: Callable[[str], str] = suffix_stemmer,
    synonyms: Optional[Mapping[str, frozenset]] = None,
) -> MeteorStats:
    cand, ref = tokenize(candidate), tokenize(reference)
    if not cand or not ref:
        return MeteorStats(0, 0, 0.0, 0.0, 0.0, 0.0, 0.0)
    pairs, matches = _min_chunk_pairs(cand, ref, stemmer, synonyms)
    if matches == 0:
        return MeteorStats(0, 0, 0.0, 0.0, 0.0, 0.0, 0.0)
    chunks = _count_chunks(pairs)
    precision = matches / len(cand)
    recall = matches / len(ref)
    f_mean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.5 * (chunks / matches) ** 3
    score = f_mean * (1.0 - penalty)
    return MeteorStats(matches, chunks, precision, recall, f_mean, penalty, score)


def meteor(
    candidate: str,
    reference: str,
    *,
    stemmer: Callable[[str], str] = suffix_stemmer,
    synonyms: Optional[Mapping[str, frozenset]] = None,
) -> float:
    """Score a candidate translation against a single reference."""
    return alignment_stats(candidate, reference, stemmer=stemmer, synonyms=synonyms).score
