# Generated instance families and the 21 instance features used for selection.

from mcfselect.features import FEATURE_NAMES, extract_features, mst_features
from mcfselect.generators import GeneratorId, generate, parameter_grid, plan_corpus
from mcfselect.solvers import max_flow_feasibility

# %% one parameter combination from each family
for g in GeneratorId:
    grid = parameter_grid(g)
    print(g.value, len(grid), "combinations; first:", grid[0])

# %% grid entries carry no seed; planning a corpus derives one per replicate
entry = plan_corpus(parameter_grid("Goto")[:1], 2, seed=0)[1]
print(entry.instance_id, "seed", entry.params.seed)

# %% generation is a pure function of the seeded parameters
a, b = generate(entry.params), generate(entry.params)
print("identical:", a == b, " n =", a.num_vertices, " m =", a.num_arcs)

# %% not every generated instance admits a feasible flow
for g in GeneratorId:
    grid = [q for q in parameter_grid(g) if q.num_vertices <= 128][:20]
    ok = sum(max_flow_feasibility(generate(e.params)) is not None for e in plan_corpus(grid, 1, seed=0))
    print(f"{g.value:10s} feasible {ok}/{len(grid)}")

# %% features
f = extract_features(a)
width = max(map(len, FEATURE_NAMES))
for name, value in zip(FEATURE_NAMES, f):
    print(f"{name:{width}s} {value}")
print(mst_features(a))
