import json

import gurobipy as gp
from gurobipy import GRB

m = gp.Model("model")

# Decision variables, e.g.
# x = m.addVar(lb=0, name="x")

# Constraints, e.g.
# m.addConstr(x >= 10, name="demand")

# Objective, e.g.
# m.setObjective(5 * x, GRB.MINIMIZE)

m.optimize()

# Required outputs: the model in LP format and the solver result.
m.write("model.lp")
optimal = m.Status == GRB.OPTIMAL
with open("solution.json", "w") as f:
    json.dump(
        {
            "status": "optimal" if optimal else ("infeasible" if m.Status == GRB.INFEASIBLE else "unbounded"),
            "objective": m.ObjVal if optimal else None,
            "values": {v.VarName: v.X for v in m.getVars()} if optimal else {},
        },
        f,
    )
