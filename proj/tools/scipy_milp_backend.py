#!/usr/bin/env python3
# Copyright 2026 The hetmap Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""External MILP backend: reads hetmap LP text, solves with HiGHS via scipy.

Usage: scipy_milp_backend.py model.lp solution.json timeout_seconds

Only the LP subset written by hetmap's exporter is understood.
"""

import json
import math
import re
import sys

import numpy as np
from scipy.optimize import LinearConstraint, Bounds, milp
from scipy.sparse import coo_matrix

TERM = re.compile(r"([+-])?\s*(\d[\d.eE+-]*)?\s*([A-Za-z_][\w.]*)")


def parse_expr(text):
    terms = []
    text = text.strip()
    if text in ("", "0"):
        return terms
    for m in TERM.finditer(text):
        sign = -1.0 if m.group(1) == "-" else 1.0
        coef = float(m.group(2)) if m.group(2) else 1.0
        terms.append((m.group(3), sign * coef))
    return terms


def parse_lp(text):
    section = None
    objective = []
    rows = []
    bounds = {}
    binaries = []
    names = []
    seen = set()

    def note(name):
        if name not in seen:
            seen.add(name)
            names.append(name)

    pending = ""
    lines = text.splitlines()
    for raw in lines + ["End"]:
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        head = line.lower()
        if head in ("minimize", "subject to", "bounds", "binaries", "end"):
            if pending:
                if section == "obj":
                    objective = parse_expr(pending.split(":", 1)[1])
                else:
                    rows.append(parse_row(pending))
                pending = ""
            section = {"minimize": "obj", "subject to": "rows", "bounds": "bounds",
                       "binaries": "bin", "end": None}[head]
            continue
        if section in ("obj", "rows"):
            # continuation lines start with two spaces
            if raw.startswith("  ") and pending:
                pending += " " + line
            else:
                if pending:
                    if section == "obj":
                        objective = parse_expr(pending.split(":", 1)[1])
                    else:
                        rows.append(parse_row(pending))
                pending = line
        elif section == "bounds":
            parts = line.split()
            if len(parts) == 3 and parts[1] == "=":
                bounds[parts[0]] = (float(parts[2]), float(parts[2]))
            elif len(parts) == 5:
                bounds[parts[2]] = (float(parts[0]), float(parts[4]))
            else:
                raise ValueError("unsupported bound line: " + line)
            note(parts[0] if parts[1] == "=" else parts[2])
        elif section == "bin":
            binaries.append(line)
            note(line)

    for name, _ in objective:
        note(name)
    for _, terms, _, _ in rows:
        for name, _ in terms:
            note(name)
    return names, objective, rows, bounds, set(binaries)


def parse_row(text):
    name, body = text.split(":", 1)
    m = re.match(r"(.*?)(<=|>=|=)\s*(\S+)\s*$", body)
    if not m:
        raise ValueError("bad row: " + text)
    return name.strip(), parse_expr(m.group(1)), m.group(2), float(m.group(3))


def main():
    lp_path, out_path, timeout = sys.argv[1], sys.argv[2], float(sys.argv[3])
    with open(lp_path) as f:
        names, objective, rows, bounds, binaries = parse_lp(f.read())
    col = {n: k for k, n in enumerate(names)}
    n = len(names)
    c = np.zeros(n)
    for name, a in objective:
        c[col[name]] += a
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    integrality = np.zeros(n)
    for name in binaries:
        lo[col[name]], hi[col[name]] = 0.0, 1.0
        integrality[col[name]] = 1
    for name, (a, b) in bounds.items():
        lo[col[name]], hi[col[name]] = a, b

    constraints = []
    if rows:
        r, cidx, vals = [], [], []
        rlo = np.full(len(rows), -np.inf)
        rhi = np.full(len(rows), np.inf)
        for k, (_, terms, sense, rhs) in enumerate(rows):
            for name, a in terms:
                r.append(k)
                cidx.append(col[name])
                vals.append(a)
            if sense in ("<=", "="):
                rhi[k] = rhs
            if sense in (">=", "="):
                rlo[k] = rhs
        A = coo_matrix((vals, (r, cidx)), shape=(len(rows), n)).tocsr()
        constraints.append(LinearConstraint(A, rlo, rhi))

    res = milp(c, constraints=constraints, integrality=integrality, bounds=Bounds(lo, hi),
               options={"time_limit": timeout, "mip_rel_gap": 1e-9, "disp": False})
    out = {"status": "no_solution", "objective": None, "bound": None, "values": {}}
    if res.x is not None:
        out["values"] = {name: float(res.x[col[name]]) for name in names}
        out["objective"] = float(res.fun)
        out["status"] = "optimal" if res.status == 0 else "feasible"
    elif res.status == 2:
        out["status"] = "infeasible"
    elif res.status == 3:
        out["status"] = "unbounded"
    bound = getattr(res, "mip_dual_bound", None)
    if bound is not None and math.isfinite(bound):
        out["bound"] = float(bound)
    elif out["status"] == "optimal":
        out["bound"] = out["objective"]
    with open(out_path, "w") as f:
        json.dump(out, f)


if __name__ == "__main__":
    main()
