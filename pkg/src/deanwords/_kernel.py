"""Compiled inner loops: incremental depth-first search and the exponent scan.

Everything here works on ``int8`` letter arrays and plain integer parameters
so that numba can compile it.  The public wrappers live in
:mod:`deanwords.search` and :mod:`deanwords.words`.
"""

import numpy as np
from numba import njit

# return codes of dfs()
DONE = 0
CAP = 1
BUDGET = 2
INVALID_PREFIX = 3
COLLECT_FULL = 4

# modes of dfs()
MODE_COUNT = 0
MODE_LONGEST = 1
MODE_LEAFSETS = 2
MODE_COLLECT = 3

MAX_FACTOR_LEN = 30


@njit(cache=True)
def max_exponent_scan(w, max_period):
    """Return (length, period) of a factor of maximal exponent.

    For every period p the longest run of positions i with w[i] == w[i-p]
    gives the longest factor of period p; its exponent is (run + p) / p.
    Ties keep the smallest period.  Returns (1, 1) for words without any
    repetition of exponent > 1 (and for the empty word).
    """
    n = w.shape[0]
    best_len = 1
    best_per = 1
    top = n - 1
    if max_period > 0 and max_period < top:
        top = max_period
    for p in range(1, top + 1):
        # even a full-length factor with this period cannot beat the best
        if n * best_per <= best_len * p:
            break
        run = 0
        best_run = 0
        for i in range(p, n):
            if w[i] == w[i - p]:
                run += 1
                if run > best_run:
                    best_run = run
            else:
                run = 0
        if best_run > 0 and (best_run + p) * best_per > best_len * p:
            best_len = best_run + p
            best_per = p
    return best_len, best_per


@njit(cache=True)
def max_exponent_witness(w, length, period):
    """First start index of a factor of the given length and period."""
    n = w.shape[0]
    run = 0
    need = length - period
    for i in range(period, n):
        if w[i] == w[i - period]:
            run += 1
            if run >= need:
                return i - length + 1
        else:
            run = 0
    return -1


@njit(cache=True)
def _reverse_code(code, length):
    r = 0
    for _ in range(length):
        r = r * 4 + (code & 3)
        code >>= 2
    return r


@njit(cache=True)
def dfs(
    prefix,
    n_max,
    alphabet,
    mode,
    reduced,
    exp_num,
    exp_den,
    exp_strict,
    forb_codes,
    forb_lens,
    req_codes,
    req_lens,
    max_present_triples,
    min_d3_record,
    directed_d,
    budget_letter,
    budget_max,
    budget_window,
    budget_lookahead,
    max_rs2,
    unique_pairs,
    stop_at_cap,
    max_nodes,
    counts,
    witness,
    hist_absent,
    hist_minimal,
    collect_buf,
):
    """Depth-first extension of ``prefix`` up to length ``n_max``.

    A node is a word satisfying every hereditary constraint (reducedness,
    exponent bound, forbidden factors, present-triple cap, directedness,
    letter budget, right-special cap, unique pairs).  Non-hereditary
    conditions (required factors, minimal-absent count) only gate whether a
    node is *recorded*.

    Returns (status, node_count, max_recorded_length, n_collected).
    """
    n0 = prefix.shape[0]
    w = np.zeros(n_max + 1, dtype=np.int8)
    codes = np.zeros(n_max + 1, dtype=np.int64)
    nxt = np.zeros(n_max + 2, dtype=np.int8)
    use_exp = exp_num > 0
    if use_exp:
        run = np.zeros((n_max + 1, n_max + 1), dtype=np.int32)
    else:
        run = np.zeros((1, 1), dtype=np.int32)
    tri_count = np.zeros(64, dtype=np.int32)
    pair_count = np.zeros(16, dtype=np.int32)
    n_forb = forb_codes.shape[0]
    n_req = req_codes.shape[0]
    req_count = np.zeros(max(n_req, 1), dtype=np.int32)
    req_present = 0
    if directed_d > 0:
        dir_count = np.zeros(4 ** directed_d, dtype=np.int32)
        dmask = (1 << (2 * directed_d)) - 1
    else:
        dir_count = np.zeros(1, dtype=np.int32)
        dmask = 0
    budget_used = 0
    present_red = 0
    rs2 = 0
    code_mask = (1 << (2 * MAX_FACTOR_LEN)) - 1

    # reduced triples: parities alternate
    red_index = np.full(64, -1, dtype=np.int32)
    k = 0
    for t in range(64):
        a = t >> 4
        b = (t >> 2) & 3
        c = t & 3
        if (a + b) % 2 == 1 and (b + c) % 2 == 1:
            red_index[t] = k
            k += 1

    node_count = 0
    max_rec = -1
    n_collected = 0
    status = DONE

    depth = 0
    # replay the prefix, then run the search; position `depth` is the next
    # letter to place
    while True:
        if depth < n0:
            a = prefix[depth]
            forced = True
        else:
            forced = False
            if depth >= n_max or nxt[depth] >= alphabet:
                if depth <= n0:
                    break
                # pop the letter at depth - 1
                depth -= 1
                c = codes[depth]
                if depth >= 1:
                    pair_count[c & 15] -= 1
                if depth >= 2:
                    t = c & 63
                    if tri_count[t] == 1:
                        if red_index[t] >= 0:
                            present_red -= 1
                        if max_rs2 >= 0:
                            pr = t >> 2
                            nsucc = 0
                            for s in range(4):
                                if tri_count[pr * 4 + s] > 0:
                                    nsucc += 1
                            if nsucc == 2:
                                rs2 -= 1
                    tri_count[t] -= 1
                if directed_d > 0 and depth + 1 >= directed_d:
                    dir_count[c & dmask] -= 1
                for j in range(n_req):
                    L = req_lens[j]
                    if depth + 1 >= L and (c & ((1 << (2 * L)) - 1)) == req_codes[j]:
                        req_count[j] -= 1
                        if req_count[j] == 0:
                            req_present -= 1
                if budget_letter >= 0 and depth < budget_window and w[depth] == budget_letter:
                    budget_used -= 1
                continue
            a = nxt[depth]
            nxt[depth] += 1

        n = depth
        ok = True
        if reduced and n > 0 and (w[n - 1] + a) % 2 == 0:
            ok = False
        if ok and budget_letter >= 0 and n < budget_window:
            used = budget_used + 1 if a == budget_letter else budget_used
            # the rest of the window is itself a valid word and needs
            # at least budget_lookahead[rest] more occurrences
            rest = budget_window - n - 1
            if rest < budget_lookahead.shape[0]:
                used += budget_lookahead[rest]
            if used > budget_max:
                ok = False
        c = 0
        if n > 0:
            c = codes[n - 1]
        c = ((c << 2) | a) & code_mask
        if ok and use_exp:
            for p in range(1, n + 1):
                if w[n - p] == a:
                    r = run[n - 1, p] + 1 if p <= n - 1 else 1
                else:
                    r = 0
                run[n, p] = r
                if r > 0:
                    lhs = (r + p) * exp_den
                    rhs = exp_num * p
                    if (exp_strict and lhs > rhs) or ((not exp_strict) and lhs >= rhs):
                        ok = False
                        break
        if ok:
            for j in range(n_forb):
                L = forb_lens[j]
                if n + 1 >= L and (c & ((1 << (2 * L)) - 1)) == forb_codes[j]:
                    ok = False
                    break
        if ok and unique_pairs and n >= 1 and pair_count[c & 15] > 0:
            ok = False
        new_red = 0
        new_rs = 0
        if ok and n >= 2:
            t = c & 63
            if tri_count[t] == 0:
                if red_index[t] >= 0:
                    new_red = 1
                    if present_red + 1 > max_present_triples:
                        ok = False
                if ok and max_rs2 >= 0:
                    pr = t >> 2
                    nsucc = 0
                    for s in range(4):
                        if tri_count[pr * 4 + s] > 0:
                            nsucc += 1
                    if nsucc == 1:
                        new_rs = 1
                        if rs2 + 1 > max_rs2:
                            ok = False
        if ok and directed_d > 0 and n + 1 >= directed_d:
            f = c & dmask
            rv = _reverse_code(f, directed_d)
            if rv == f or dir_count[rv] > 0:
                ok = False

        if not ok:
            if forced:
                return INVALID_PREFIX, node_count, max_rec, n_collected
            continue

        # commit
        w[n] = a
        codes[n] = c
        if n >= 1:
            pair_count[c & 15] += 1
        if n >= 2:
            tri_count[c & 63] += 1
        present_red += new_red
        rs2 += new_rs
        if directed_d > 0 and n + 1 >= directed_d:
            dir_count[c & dmask] += 1
        for j in range(n_req):
            L = req_lens[j]
            if n + 1 >= L and (c & ((1 << (2 * L)) - 1)) == req_codes[j]:
                req_count[j] += 1
                if req_count[j] == 1:
                    req_present += 1
        if budget_letter >= 0 and n < budget_window and a == budget_letter:
            budget_used += 1
        depth = n + 1
        nxt[depth] = 0
        node_count += 1
        if node_count > max_nodes:
            return BUDGET, node_count, max_rec, n_collected

        if depth < n0:
            continue

        # record
        if req_present < n_req:
            continue
        if min_d3_record > 0:
            d3 = 0
            for t in range(64):
                if red_index[t] >= 0 and tri_count[t] == 0:
                    if pair_count[t >> 2] > 0 and pair_count[t & 15] > 0:
                        d3 += 1
            if d3 < min_d3_record:
                continue
        if mode == MODE_COUNT:
            counts[depth] += 1
        if depth > max_rec:
            max_rec = depth
            for i in range(depth):
                witness[i] = w[i]
        if depth == n_max:
            if mode == MODE_LEAFSETS:
                m_abs = 0
                m_min = 0
                for t in range(64):
                    ri = red_index[t]
                    if ri >= 0 and tri_count[t] == 0:
                        m_abs |= 1 << ri
                        if pair_count[t >> 2] > 0 and pair_count[t & 15] > 0:
                            m_min |= 1 << ri
                hist_absent[m_abs] += 1
                hist_minimal[m_min] += 1
            elif mode == MODE_COLLECT:
                if n_collected >= collect_buf.shape[0]:
                    return COLLECT_FULL, node_count, max_rec, n_collected
                for i in range(depth):
                    collect_buf[n_collected, i] = w[i]
                n_collected += 1
            if stop_at_cap:
                return CAP, node_count, max_rec, n_collected
    if max_rec == n_max and stop_at_cap:
        status = CAP
    return status, node_count, max_rec, n_collected


@njit(cache=True)
def _forbidden(length, period, exp_num, exp_den, exp_strict):
    lhs = length * exp_den
    rhs = exp_num * period
    return lhs > rhs if exp_strict else lhs >= rhs


@njit(cache=True)
def repetition_free_upto(w, lo, hi, max_period, exp_num, exp_den, exp_strict):
    """Does w[lo:hi] avoid forbidden repetitions of period <= max_period?"""
    for p in range(1, min(max_period, hi - lo - 1) + 1):
        run = 0
        for i in range(lo + p, hi):
            if w[i] == w[i - p]:
                run += 1
                if _forbidden(run + p, p, exp_num, exp_den, exp_strict):
                    return False
            else:
                run = 0
    return True


@njit(cache=True)
def periodic_repetitions(us, length, max_period, exp_num, exp_den, exp_strict, minimal):
    """Turn each row u of ``us`` into the word of period |u| and the given
    length; keep it if it is reduced, its longest proper prefix is free of
    forbidden repetitions of period <= max_period and, when ``minimal``,
    so is its longest proper suffix.  Returns the kept words as rows."""
    n, per = us.shape
    out = np.zeros((n, length), dtype=np.int8)
    k = 0
    x = np.zeros(length, dtype=np.int8)
    for r in range(n):
        for i in range(length):
            x[i] = us[r, i % per]
        ok = True
        for i in range(1, length):
            if (x[i] + x[i - 1]) % 2 == 0:
                ok = False
                break
        if not ok:
            continue
        if not repetition_free_upto(x, 0, length - 1, max_period, exp_num, exp_den, exp_strict):
            continue
        if minimal and not repetition_free_upto(x, 1, length, max_period, exp_num, exp_den, exp_strict):
            continue
        for i in range(length):
            out[k, i] = x[i]
        k += 1
    return out[:k]


@njit(cache=True)
def build_factor_automaton(flat, offsets, alphabet):
    """Aho-Corasick automaton over the proper prefixes of a set of words.

    ``flat[offsets[j]:offsets[j+1]]`` is the j-th forbidden word.  States are
    the distinct proper prefixes, numbered in (length, lexicographic) order.
    goto[s, a] is the state of the longest suffix of s·a that is a state, or
    -1 when s·a ends with one of the forbidden words.
    Returns (parent, letter, depth, goto).
    """
    n_words = offsets.shape[0] - 1
    cap = 1
    for j in range(n_words):
        cap += offsets[j + 1] - offsets[j] - 1
    child = np.full((cap, alphabet), -1, dtype=np.int32)
    ends = np.zeros((cap, alphabet), dtype=np.bool_)
    n_nodes = 1
    for j in range(n_words):
        s = 0
        for i in range(offsets[j], offsets[j + 1] - 1):
            a = flat[i]
            if child[s, a] < 0:
                child[s, a] = n_nodes
                n_nodes += 1
            s = child[s, a]
        ends[s, flat[offsets[j + 1] - 1]] = True

    # breadth-first numbering visits children in letter order
    order = np.zeros(n_nodes, dtype=np.int32)
    new_id = np.full(n_nodes, -1, dtype=np.int32)
    order[0] = 0
    new_id[0] = 0
    head = 0
    tail = 1
    while head < tail:
        s = order[head]
        head += 1
        for a in range(alphabet):
            c = child[s, a]
            if c >= 0:
                new_id[c] = tail
                order[tail] = c
                tail += 1

    parent = np.full(n_nodes, -1, dtype=np.int32)
    letter = np.full(n_nodes, -1, dtype=np.int8)
    depth = np.zeros(n_nodes, dtype=np.int32)
    goto = np.full((n_nodes, alphabet), -1, dtype=np.int32)
    bad = np.zeros((n_nodes, alphabet), dtype=np.bool_)
    fail = np.zeros(n_nodes, dtype=np.int32)
    for t in range(n_nodes):
        s = order[t]
        for a in range(alphabet):
            c = child[s, a]
            if c >= 0:
                parent[new_id[c]] = t
                letter[new_id[c]] = a
                depth[new_id[c]] = depth[t] + 1
    for t in range(n_nodes):
        s = order[t]
        f = fail[t]
        for a in range(alphabet):
            b = ends[s, a]
            if t > 0 and bad[f, a]:
                b = True
            bad[t, a] = b
            c = child[s, a]
            if c >= 0:
                nc = new_id[c]
                goto[t, a] = nc
                fail[nc] = goto[f, a] if t > 0 else 0
            elif b:
                goto[t, a] = -1
            elif t > 0:
                goto[t, a] = goto[f, a]
            else:
                goto[t, a] = 0
    return parent, letter, depth, goto


@njit(cache=True)
def iterate_weights(goto, x, iterations, bits, round_up):
    """x <- (A x) with (A x)_v = sum_a x[goto[v, a]], renormalized after each
    step by a right shift keeping entries below 2**bits.  With ``round_up``
    the shift rounds up so positive entries stay positive."""
    n, alphabet = goto.shape
    y = np.zeros(n, dtype=np.int64)
    for _ in range(iterations):
        top = 0
        for v in range(n):
            s = 0
            for a in range(alphabet):
                u = goto[v, a]
                if u >= 0:
                    s += x[u]
            y[v] = s
            if s > top:
                top = s
        shift = 0
        while (top >> shift) >= (1 << bits):
            shift += 1
        for v in range(n):
            if round_up:
                x[v] = (y[v] + (1 << shift) - 1) >> shift
            else:
                x[v] = y[v] >> shift
    return x
