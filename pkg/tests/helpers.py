"""Shared test oracles and generators.

Everything here is deliberately independent of the library implementation:
brute-force pairwise matching for scoring, a quadratic crossing check, an
explicit state-machine BIO reference decoder, exhaustive and randomized
non-crossing span-set generators, and central finite differences.
"""

from __future__ import annotations

import itertools

import numpy as np

from nerforge.types import EntitySpan


# ---------------------------------------------------------------- scoring

def oracle_match_counts(gold_sents, pred_sents):
    """Brute-force micro counts via explicit pairwise matching."""
    tp = fp = fn = 0
    for gold, pred in zip(gold_sents, pred_sents):
        gold_left = list(gold)
        for span in pred:
            matched = None
            for i, g in enumerate(gold_left):
                if g.start == span.start and g.end == span.end and g.etype == span.etype:
                    matched = i
                    break
            if matched is None:
                fp += 1
            else:
                tp += 1
                gold_left.pop(matched)
        fn += len(gold_left)
    return tp, fp, fn


def oracle_per_type_counts(gold_sents, pred_sents):
    etypes = {s.etype for sent in list(gold_sents) + list(pred_sents) for s in sent}
    out = {}
    for etype in sorted(etypes):
        out[etype] = oracle_match_counts(
            [[s for s in sent if s.etype == etype] for sent in gold_sents],
            [[s for s in sent if s.etype == etype] for sent in pred_sents],
        )
    return out


# ---------------------------------------------------------------- geometry

def crossing_pairs(spans):
    """All pairs that overlap without containment, checked pairwise."""
    spans = list(spans)
    bad = []
    for a, b in itertools.combinations(spans, 2):
        overlap = not (a.end <= b.start or b.end <= a.start)
        a_in_b = b.start <= a.start and a.end <= b.end
        b_in_a = a.start <= b.start and b.end <= a.end
        if overlap and not (a_in_b or b_in_a):
            bad.append((a, b))
    return bad


def stack_depths(n_tokens, spans):
    depth = [0] * n_tokens
    for span in spans:
        for i in range(span.start, span.end):
            depth[i] += 1
    return depth


# ---------------------------------------------------------------- BIO oracle

def bio_reference_decode(labels):
    """Independent BIO decoder: explicit open-span state machine."""
    spans = []
    cur_type = None
    cur_start = 0
    for i, lab in enumerate(labels):
        prefix, _, etype = lab.partition("-")
        is_entity = prefix in ("B", "I") and etype != ""
        if not is_entity:
            if cur_type is not None:
                spans.append(EntitySpan(cur_start, i, cur_type))
                cur_type = None
        elif prefix == "B" or etype != cur_type:
            if cur_type is not None:
                spans.append(EntitySpan(cur_start, i, cur_type))
            cur_type, cur_start = etype, i
    if cur_type is not None:
        spans.append(EntitySpan(cur_start, len(labels), cur_type))
    return spans


# ------------------------------------------------------------- generators

def _type_subsets(etypes, budget):
    for size in range(1, min(budget, len(etypes)) + 1):
        yield from itertools.combinations(etypes, size)


def _laminar_gen(lo, hi, depth, forbid_full, etypes):
    yield ()
    if depth <= 0:
        return
    for start in range(lo, hi):
        for end in range(start + 1, hi + 1):
            if forbid_full and start == lo and end == hi:
                continue
            for subset in _type_subsets(etypes, depth):
                top = tuple(EntitySpan(start, end, t) for t in subset)
                for inner in _laminar_gen(start, end, depth - len(subset), True, etypes):
                    for rest in _laminar_gen(end, hi, depth, False, etypes):
                        yield top + inner + rest


def enumerate_laminar(n_tokens, etypes, max_depth):
    """All non-crossing typed span sets on [0, n_tokens), nesting <= max_depth.

    Decomposes by the leftmost-outermost interval; spans sharing an extent
    carry distinct types and consume one depth unit each.  Families come out
    as tuples already in canonical order (start asc, length desc, type asc).
    """
    return _laminar_gen(0, n_tokens, max_depth, False, tuple(sorted(etypes)))


def laminar_first_choices(n_tokens, etypes, max_depth):
    """The leftmost-outermost choices partitioning the non-empty families."""
    etypes = tuple(sorted(etypes))
    for start in range(n_tokens):
        for end in range(start + 1, n_tokens + 1):
            for subset in _type_subsets(etypes, max_depth):
                yield (start, end, subset)


def laminar_with_first(n_tokens, etypes, max_depth, first):
    """Families whose leftmost-outermost choice is ``first``."""
    etypes = tuple(sorted(etypes))
    start, end, subset = first
    top = tuple(EntitySpan(start, end, t) for t in subset)
    for inner in _laminar_gen(start, end, max_depth - len(subset), True, etypes):
        for rest in _laminar_gen(end, n_tokens, max_depth, False, etypes):
            yield top + inner + rest


def count_laminar(n_tokens, n_types, max_depth):
    """Closed-form count of the families enumerate_laminar yields.

    Independent dynamic program over window length; verifies the enumerator
    is exhaustive without materializing anything.
    """
    from functools import lru_cache
    from math import comb

    @lru_cache(maxsize=None)
    def count(length, depth, forbid_full):
        total = 1  # the empty family
        if depth <= 0:
            return total
        for start in range(length):
            for end in range(start + 1, length + 1):
                if forbid_full and start == 0 and end == length:
                    continue
                for k in range(1, min(depth, n_types) + 1):
                    total += (
                        comb(n_types, k)
                        * count(end - start, depth - k, True)
                        * count(length - end, depth, False)
                    )
        return total

    return count(n_tokens, max_depth, False)


def random_laminar(rng, n_tokens, etypes, max_depth, density=0.4):
    """A random valid non-crossing typed span set."""
    etypes = tuple(etypes)

    def fill(lo, hi, depth):
        out = []
        pos = lo
        while pos < hi:
            if depth > 0 and rng.random() < density:
                end = pos + 1 + int(rng.integers(hi - pos))
                n_types = 1
                while n_types < min(depth, len(etypes)) and rng.random() < 0.25:
                    n_types += 1
                chosen = rng.choice(len(etypes), size=n_types, replace=False)
                parent = {EntitySpan(pos, end, etypes[i]) for i in chosen}
                if end - pos > 1:
                    out.extend(c for c in fill(pos, end, depth - n_types) if c not in parent)
                out.extend(parent)
                pos = end
            else:
                pos += 1
        return out

    return frozenset(fill(0, n_tokens, max_depth))


def random_flat_spans(rng, n_tokens, etypes, density=0.4):
    """Random pairwise-disjoint spans."""
    spans = []
    pos = 0
    while pos < n_tokens:
        if rng.random() < density:
            end = pos + 1 + int(rng.integers(min(4, n_tokens - pos)))
            spans.append(EntitySpan(pos, end, etypes[int(rng.integers(len(etypes)))]))
            pos = end
        else:
            pos += 1
    return frozenset(spans)


# ------------------------------------------------------- finite differences

def relative_error(a, b, floor=1e-5):
    # below the floor, float64 central differences cannot resolve relative
    # error (roundoff noise is ~1e-10 absolute); the floored ratio then
    # certifies absolute agreement within floor * rtol = 1e-9 instead
    return abs(a - b) / max(floor, abs(a) + abs(b))


def finite_difference_check(loss_fn, arrays, analytic, eps=1e-6, rtol=1e-4, atol=1e-9):
    """Central-difference check of every coordinate of every named array.

    ``loss_fn`` recomputes the scalar loss from the (mutated-in-place)
    arrays; ``analytic`` maps names to gradient arrays (missing = zero).
    Returns the worst relative error seen.
    """
    worst = 0.0
    for name, param in arrays.items():
        grad = analytic.get(name)
        flat = param.reshape(-1)
        grad_flat = None if grad is None else np.asarray(grad).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = loss_fn()
            flat[i] = orig - eps
            down = loss_fn()
            flat[i] = orig
            numeric = (up - down) / (2 * eps)
            exact = 0.0 if grad_flat is None else float(grad_flat[i])
            if abs(numeric) < atol and abs(exact) < atol:
                continue
            err = relative_error(exact, numeric)
            if err > worst:
                worst = err
            assert err < rtol, (
                f"gradient mismatch at {name}[{i}]: analytic {exact:.3e} "
                f"vs numeric {numeric:.3e} (rel err {err:.2e})"
            )
    return worst
