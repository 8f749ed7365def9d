"""JIT-compiled simulation kernels.

Both engines sample the exact continuous-time Markov chain: aggregate rate
(beta+omega)*|SI| + gamma*|I| (full-graph engine) or (beta+omega)*Y_E +
gamma*|I| (effective-degree engine), category choice, then a uniform element
within the category.  All randomness comes from an explicit xoshiro256++
state seeded per run, so results are byte-identical for a given seed
regardless of thread count or call order.
"""

import math

import numpy as np
from numba import njit

U64 = np.uint64
_DINV = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True, nogil=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (U64(64) - k))


@njit(cache=True, nogil=True)
def rng_init(seed):
    """xoshiro256++ state from a 64-bit seed via splitmix64."""
    s = np.empty(4, dtype=np.uint64)
    x = U64(seed)
    for i in range(4):
        x = x + U64(0x9E3779B97F4A7C15)
        z = x
        z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
        s[i] = z ^ (z >> U64(31))
    return s


@njit(cache=True, nogil=True, inline="always")
def _rng_next(s):
    res = _rotl(s[0] + s[3], U64(23)) + s[0]
    t = s[1] << U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], U64(45))
    return res


@njit(cache=True, nogil=True, inline="always")
def rng_uniform(s):
    """Uniform double in [0, 1)."""
    return float(_rng_next(s) >> U64(11)) * _DINV


@njit(cache=True, nogil=True, inline="always")
def rng_below(s, n):
    """Uniform integer in [0, n)."""
    r = int(rng_uniform(s) * n)
    if r >= n:
        r = n - 1
    return r


@njit(cache=True, nogil=True, inline="always")
def rng_exp(s):
    """Standard exponential."""
    return -math.log(1.0 - rng_uniform(s))


# state codes
_S = np.int8(0)
_I = np.int8(1)
_R = np.int8(2)


@njit(cache=True, nogil=True)
def _si_audit(n_edges, alive, state, edge_u, edge_v, si_pos, si_count):
    """Recompute the live S-I multiset from scratch; -1 if it matches."""
    count = 0
    for e in range(n_edges):
        if not alive[e]:
            if si_pos[e] >= 0:
                return e
            continue
        a = state[edge_u[e]]
        b = state[edge_v[e]]
        is_si = (a == _S and b == _I) or (a == _I and b == _S)
        if is_si != (si_pos[e] >= 0):
            return e
        if is_si:
            count += 1
    if count != si_count:
        return n_edges
    return -1


@njit(cache=True, nogil=True)
def gillespie_kernel(
    n_nodes,
    inc_ptr,
    inc_eid,
    inc_other,
    edge_u,
    edge_v,
    initial,
    beta,
    gamma,
    omega,
    grid,
    seed,
    paranoid,
):
    """Exact CTMC on a fixed multigraph.

    Returns (S_grid, I_grid, R_grid, final_size, extinction_time).  Grid
    samples hold the right-continuous piecewise-constant counts.
    """
    rng = rng_init(seed)
    n_edges = edge_u.size

    state = np.zeros(n_nodes, dtype=np.int8)
    alive = np.ones(n_edges, dtype=np.uint8)
    si_pos = np.full(n_edges, -1, dtype=np.int64)
    si_edges = np.empty(n_edges, dtype=np.int64)
    si_count = 0
    inf_pos = np.full(n_nodes, -1, dtype=np.int64)
    inf_nodes = np.empty(n_nodes, dtype=np.int64)
    inf_count = 0

    n_s = n_nodes
    n_i = 0
    n_r = 0

    for idx in range(initial.size):
        v = initial[idx]
        state[v] = _I
        inf_nodes[inf_count] = v
        inf_pos[v] = inf_count
        inf_count += 1
    n_i = inf_count
    n_s = n_nodes - n_i
    ever_infected = inf_count

    # seed the S-I multiset: each live S-I edge enters once, via its I endpoint
    for idx in range(inf_count):
        v = inf_nodes[idx]
        for p in range(inc_ptr[v], inc_ptr[v + 1]):
            e = inc_eid[p]
            if state[inc_other[p]] == _S and si_pos[e] < 0:
                si_pos[e] = si_count
                si_edges[si_count] = e
                si_count += 1

    ng = grid.size
    s_grid = np.empty(ng, dtype=np.int64)
    i_grid = np.empty(ng, dtype=np.int64)
    r_grid = np.empty(ng, dtype=np.int64)
    gi = 0

    t = 0.0
    pair_rate = beta + omega
    p_infect = beta / pair_rate if pair_rate > 0.0 else 0.0

    while inf_count > 0:
        total = pair_rate * si_count + gamma * inf_count
        if total <= 0.0:
            break
        t_next = t + rng_exp(rng) / total
        while gi < ng and grid[gi] < t_next:
            s_grid[gi] = n_s
            i_grid[gi] = n_i
            r_grid[gi] = n_r
            gi += 1
        t = t_next

        if rng_uniform(rng) * total < pair_rate * si_count:
            e = si_edges[rng_below(rng, si_count)]
            a = edge_u[e]
            b = edge_v[e]
            s_node = a if state[a] == _S else b
            if rng_uniform(rng) < p_infect:
                # infection: flip s_node and refresh its incident live edges
                state[s_node] = _I
                for p in range(inc_ptr[s_node], inc_ptr[s_node + 1]):
                    e2 = inc_eid[p]
                    if not alive[e2]:
                        continue
                    o = inc_other[p]
                    if o == s_node:
                        continue
                    st = state[o]
                    if st == _I:
                        # was S-I (includes the transmitting edge itself)
                        q = si_pos[e2]
                        last = si_edges[si_count - 1]
                        si_edges[q] = last
                        si_pos[last] = q
                        si_count -= 1
                        si_pos[e2] = -1
                    elif st == _S:
                        si_pos[e2] = si_count
                        si_edges[si_count] = e2
                        si_count += 1
                inf_nodes[inf_count] = s_node
                inf_pos[s_node] = inf_count
                inf_count += 1
                n_s -= 1
                n_i += 1
                ever_infected += 1
            else:
                # drop: edge removed permanently
                q = si_pos[e]
                last = si_edges[si_count - 1]
                si_edges[q] = last
                si_pos[last] = q
                si_count -= 1
                si_pos[e] = -1
                alive[e] = 0
        else:
            v = inf_nodes[rng_below(rng, inf_count)]
            state[v] = _R
            for p in range(inc_ptr[v], inc_ptr[v + 1]):
                e2 = inc_eid[p]
                if not alive[e2]:
                    continue
                o = inc_other[p]
                if o != v and state[o] == _S:
                    q = si_pos[e2]
                    last = si_edges[si_count - 1]
                    si_edges[q] = last
                    si_pos[last] = q
                    si_count -= 1
                    si_pos[e2] = -1
            q = inf_pos[v]
            last = inf_nodes[inf_count - 1]
            inf_nodes[q] = last
            inf_pos[last] = q
            inf_count -= 1
            inf_pos[v] = -1
            n_i -= 1
            n_r += 1

        if paranoid:
            bad = _si_audit(n_edges, alive, state, edge_u, edge_v, si_pos, si_count)
            if bad >= 0:
                raise RuntimeError("S-I bookkeeping diverged from recomputation")

    while gi < ng:
        s_grid[gi] = n_s
        i_grid[gi] = n_i
        r_grid[gi] = n_r
        gi += 1

    return s_grid, i_grid, r_grid, ever_infected, t


@njit(cache=True, nogil=True)
def effective_degree_kernel(
    degrees,
    initial,
    beta,
    gamma,
    omega,
    grid,
    seed,
):
    """Construct-as-you-go engine: no explicit graph, only effective degrees.

    Pairing on demand: a transmitting or warning stub pairs uniformly among
    all other unpaired stubs (so self-pairing is possible).  Recovered
    individuals keep only an aggregate unpaired-stub count.
    """
    rng = rng_init(seed)
    n_nodes = degrees.size
    deg = degrees.copy()
    max_deg = 0
    for v in range(n_nodes):
        if deg[v] > max_deg:
            max_deg = deg[v]

    state = np.zeros(n_nodes, dtype=np.int8)

    # susceptible sampler holds S nodes with deg > 0 (others have weight 0)
    sus_pos = np.full(n_nodes, -1, dtype=np.int64)
    sus_nodes = np.empty(n_nodes, dtype=np.int64)
    sus_count = 0
    inf_pos = np.full(n_nodes, -1, dtype=np.int64)
    inf_nodes = np.empty(n_nodes, dtype=np.int64)
    inf_count = 0

    for idx in range(initial.size):
        v = initial[idx]
        state[v] = _I
        inf_nodes[inf_count] = v
        inf_pos[v] = inf_count
        inf_count += 1

    x_e = 0
    y_e = 0
    z_e = 0
    for v in range(n_nodes):
        if state[v] == _S:
            x_e += deg[v]
            if deg[v] > 0:
                sus_pos[v] = sus_count
                sus_nodes[sus_count] = v
                sus_count += 1
        else:
            y_e += deg[v]

    n_i = inf_count
    n_s = n_nodes - n_i
    n_r = 0
    ever_infected = inf_count

    ng = grid.size
    s_grid = np.empty(ng, dtype=np.int64)
    i_grid = np.empty(ng, dtype=np.int64)
    r_grid = np.empty(ng, dtype=np.int64)
    gi = 0

    t = 0.0
    pair_rate = beta + omega
    p_infect = beta / pair_rate if pair_rate > 0.0 else 0.0

    while inf_count > 0:
        eta = x_e + y_e + z_e
        stub_rate = pair_rate * y_e if eta >= 2 else 0.0
        total = stub_rate + gamma * inf_count
        if total <= 0.0:
            break
        t_next = t + rng_exp(rng) / total
        while gi < ng and grid[gi] < t_next:
            s_grid[gi] = n_s
            i_grid[gi] = n_i
            r_grid[gi] = n_r
            gi += 1
        t = t_next

        if rng_uniform(rng) * total < stub_rate:
            # acting infective chosen with probability proportional to degree
            while True:
                i_node = inf_nodes[rng_below(rng, inf_count)]
                if rng_below(rng, max_deg) < deg[i_node]:
                    break
            transmit = rng_uniform(rng) < p_infect
            r = rng_below(rng, eta - 1)  # target among all other unpaired stubs
            if r < x_e:
                # target is a susceptible stub
                while True:
                    j = sus_nodes[rng_below(rng, sus_count)]
                    if rng_below(rng, max_deg) < deg[j]:
                        break
                deg[i_node] -= 1
                y_e -= 1
                deg[j] -= 1
                x_e -= 1
                if transmit:
                    x_e -= deg[j]
                    y_e += deg[j]
                    state[j] = _I
                    q = sus_pos[j]
                    last = sus_nodes[sus_count - 1]
                    sus_nodes[q] = last
                    sus_pos[last] = q
                    sus_count -= 1
                    sus_pos[j] = -1
                    inf_nodes[inf_count] = j
                    inf_pos[j] = inf_count
                    inf_count += 1
                    n_s -= 1
                    n_i += 1
                    ever_infected += 1
                else:
                    # warned: both stubs deleted, j stays susceptible
                    if deg[j] == 0:
                        q = sus_pos[j]
                        last = sus_nodes[sus_count - 1]
                        sus_nodes[q] = last
                        sus_pos[last] = q
                        sus_count -= 1
                        sus_pos[j] = -1
            elif r < x_e + y_e - 1:
                # target is another infective stub (possibly i_node's own)
                while True:
                    j = inf_nodes[rng_below(rng, inf_count)]
                    w = deg[j] - 1 if j == i_node else deg[j]
                    if rng_below(rng, max_deg) < w:
                        break
                deg[i_node] -= 1
                deg[j] -= 1
                y_e -= 2
            else:
                # target is a recovered stub; identity is irrelevant
                deg[i_node] -= 1
                y_e -= 1
                z_e -= 1
        else:
            v = inf_nodes[rng_below(rng, inf_count)]
            state[v] = _R
            z_e += deg[v]
            y_e -= deg[v]
            q = inf_pos[v]
            last = inf_nodes[inf_count - 1]
            inf_nodes[q] = last
            inf_pos[last] = q
            inf_count -= 1
            inf_pos[v] = -1
            n_i -= 1
            n_r += 1

    while gi < ng:
        s_grid[gi] = n_s
        i_grid[gi] = n_i
        r_grid[gi] = n_r
        gi += 1

    return s_grid, i_grid, r_grid, ever_infected, t
