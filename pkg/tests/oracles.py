"""Slow, independent reference computations used as test oracles.

Everything here is written with plain Python loops and the ``math`` module so
that it shares no code path with the vectorized implementations under test.
"""

import math


# overlap resolution ---------------------------------------------------------------

def overlap_groups(entities):
    """Connected components of the pairwise span-overlap graph."""
    n = len(entities)
    adj = [[] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            a, b = entities[i], entities[j]
            if i != j and a.start_ix <= b.end_ix and b.start_ix <= a.end_ix:
                adj[i].append(j)
    seen, groups = set(), []
    for i in range(n):
        if i in seen:
            continue
        stack, comp = [i], []
        seen.add(i)
        while stack:
            u = stack.pop()
            comp.append(entities[u])
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        groups.append(comp)
    return groups


def resolve_overlaps_oracle(entities):
    winners = []
    for group in overlap_groups(list(entities)):
        best = group[0]
        for e in group[1:]:
            ka = (len(e.tokens.split()), len(e.tokens), -e.start_ix)
            kb = (len(best.tokens.split()), len(best.tokens), -best.start_ix)
            if ka > kb or (ka == kb and e.entity_id < best.entity_id):
                best = e
        winners.append(best)
    return sorted(winners, key=lambda e: e.start_ix)


# linear algebra on nested lists ---------------------------------------------------

def _rows(m):
    return [[float(v) for v in row] for row in m]


def cos(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    return dot / (math.sqrt(sum(x * x for x in a)) * math.sqrt(sum(y * y for y in b)))


def matmul(a, b):
    a, b = _rows(a), _rows(b)
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def attention(q, k, v):
    q, k, v = _rows(q), _rows(k), _rows(v)
    d = len(q[0])
    out = []
    for qi in q:
        scores = [sum(x * y for x, y in zip(qi, kj)) / math.sqrt(d) for kj in k]
        m = max(scores)
        w = [math.exp(s - m) for s in scores]
        z = sum(w)
        out.append([sum(w[j] / z * v[j][c] for j in range(len(v))) for c in range(len(v[0]))])
    return out


def layer_norm(x, gamma, beta, eps):
    out = []
    for row in _rows(x):
        mu = sum(row) / len(row)
        var = sum((r - mu) ** 2 for r in row) / len(row)
        out.append([(r - mu) / math.sqrt(var + eps) * g + b for r, g, b in zip(row, gamma, beta)])
    return out


def add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def cmf(x, t_e, w):
    x, t_e = _rows(x), _rows(t_e)
    eps = w.epsilon
    a1 = attention(matmul(x, w.w_qs), matmul(x, w.w_ks), matmul(x, w.w_vs))
    x_s = layer_norm(add(x, a1), w.ln1_gamma, w.ln1_beta, eps)
    a2 = attention(matmul(x_s, w.w_qc), matmul(t_e, w.w_kc), matmul(t_e, w.w_vc))
    x_c = layer_norm(add(x_s, a2), w.ln2_gamma, w.ln2_beta, eps)
    hidden = [[max(0.0, v + b) for v, b in zip(row, w.ffn_b1)] for row in matmul(x_c, w.ffn_w1)]
    ffn = [[v + b for v, b in zip(row, w.ffn_b2)] for row in matmul(hidden, w.ffn_w2)]
    return layer_norm(add(x_c, ffn), w.ln3_gamma, w.ln3_beta, eps)


# contrastive losses --------------------------------------------------------------

def _direction_loss(sim, tau, transpose):
    n = len(sim)
    total = 0.0
    for i in range(n):
        row = [sim[j][i] if transpose else sim[i][j] for j in range(n)]
        denom = sum(math.exp(s / tau) for s in row)
        total += -math.log(math.exp(row[i] / tau) / denom)
    return total / n


def instance_loss(x, t, tau):
    """Returns (L_global, L_image_from_report, L_report_from_image)."""
    x, t = _rows(x), _rows(t)
    sim = [[cos(xi, tj) for tj in t] for xi in x]
    l_ir = _direction_loss(sim, tau, transpose=False)
    l_ri = _direction_loss(sim, tau, transpose=True)
    return 0.5 * (l_ir + l_ri), l_ir, l_ri


def token_loss(t_loc, x_loc, tau):
    t = _rows(t_loc)
    tt = attention(t, x_loc, x_loc)
    n = len(t)
    total = 0.0
    for v in range(n):
        num = math.exp(cos(t[v], tt[v]) / tau)
        den = sum(math.exp(cos(t[v], tt[u]) / tau) for u in range(n))
        total += -math.log(num / den) / (2 * n)
        num = math.exp(cos(tt[v], t[v]) / tau)
        den = sum(math.exp(cos(tt[v], t[u]) / tau) for u in range(n))
        total += -math.log(num / den) / (2 * n)
    return total


# retrieval -------------------------------------------------------------------------

def brute_force_query(ids, splits, vectors, probe, k, exclude_id=None):
    """Full sort of all train candidates by (-cosine, id)."""
    scored = []
    for rid, split, vec in zip(ids, splits, vectors):
        if split != "train" or rid == exclude_id:
            continue
        scored.append((-cos([float(v) for v in vec], [float(p) for p in probe]), rid))
    scored.sort()
    return [rid for _, rid in scored[:k]]
