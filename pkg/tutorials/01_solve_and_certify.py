# Solving one instance with every algorithm in the portfolio.
#
# Run with:  python tutorials/01_solve_and_certify.py

from mcfselect import MCFInstance
from mcfselect.dimacs import write_dimacs
from mcfselect.solvers import AlgorithmId, certify_optimal, solve

# %% a small transportation problem: vertex 0 ships 4 units, vertex 3 takes them
inst = MCFInstance.from_arcs(
    4,
    [(0, 1, 1, 3), (0, 2, 4, 3), (1, 2, 1, 2), (1, 3, 5, 3), (2, 3, 1, 4)],  # tail, head, cost, capacity
    [4, 0, 0, -4],
)
print(write_dimacs(inst))

# %% every solver should agree on the optimal cost
for alg in AlgorithmId:
    res = solve(alg, inst)
    print(f"{alg.name:5s} {res.status.value:10s} cost={res.cost}  flow={res.flow.tolist()}")

# %% a flow is optimal iff its residual network has no negative cycle
res = solve("NS", inst)
print("certified:", certify_optimal(inst, res.flow))

# %% an unbalanced or over-constrained instance comes back Infeasible, not as an error
tight = MCFInstance.from_arcs(2, [(0, 1, 1, 2)], [5, -5])
print(solve("SSP", tight).status)
