"""Independent reference computations used only by the tests.

Nothing here calls the LCA/path code under test: distances come from BFS
over the undirected tree, ancestors from walking head pointers.
"""
from collections import deque


def bfs_distances(heads, source):
    n = len(heads)
    adj = {i: [] for i in range(1, n + 1)}
    for i, h in enumerate(heads, 1):
        if h:
            adj[i].append(h)
            adj[h].append(i)
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def ancestors(heads, i):
    """[i, parent, grandparent, ..., root]."""
    out = [i]
    while heads[out[-1] - 1]:
        out.append(heads[out[-1] - 1])
    return out


def brute_lca(heads, i, j):
    """Shared ancestor with the largest distance from the root."""
    ai, aj = ancestors(heads, i), ancestors(heads, j)
    shared = [a for a in ai if a in aj]
    root = ai[-1]
    return max(shared, key=lambda a: bfs_distances(heads, root)[a])


def brute_tpf(heads, i, p):
    a = brute_lca(heads, i, p)
    return bfs_distances(heads, p)[a], bfs_distances(heads, i)[a]


def brute_pattern(heads, i, p):
    """Relation of i to p by ancestor enumeration."""
    anc_i, anc_p = ancestors(heads, i), ancestors(heads, p)
    if i == p:
        return "self"
    if p in anc_i:
        k = anc_i.index(p)
        return {1: "child", 2: "grandchild"}.get(k, "descendant")
    if i in anc_p:
        k = anc_p.index(i)
        return {1: "parent", 2: "grandparent"}.get(k, "ancestor")
    if heads[i - 1] == heads[p - 1]:
        return "sibling"
    return "other"


def brute_path(heads, i, a):
    """Nodes on the undirected shortest path from i to a (BFS parents)."""
    n = len(heads)
    adj = {k: [] for k in range(1, n + 1)}
    for k, h in enumerate(heads, 1):
        if h:
            adj[k].append(h)
            adj[h].append(k)
    prev = {i: None}
    queue = deque([i])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in prev:
                prev[v] = u
                queue.append(v)
    path = [a]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return list(reversed(path))
