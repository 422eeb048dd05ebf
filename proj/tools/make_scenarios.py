#!/usr/bin/env python3
"""Regenerates the bundled scenarios/*.json files.

Usage: python3 tools/make_scenarios.py [output_dir]
"""

import json
import os
import sys

# IEEE-37 line list (from, to, length in ft, line configuration) with a
# balanced per-mile impedance per configuration (ohm/mile, r and x).
LINES = [
    ("799", "701", 1850, "721"), ("701", "702", 960, "722"),
    ("702", "705", 400, "724"), ("702", "713", 360, "723"),
    ("702", "703", 1320, "722"), ("703", "727", 240, "724"),
    ("703", "730", 600, "723"), ("704", "714", 80, "724"),
    ("704", "720", 800, "723"), ("705", "742", 320, "724"),
    ("705", "712", 240, "724"), ("706", "725", 280, "724"),
    ("707", "724", 760, "724"), ("707", "722", 120, "724"),
    ("708", "733", 320, "723"), ("708", "732", 320, "724"),
    ("709", "731", 600, "723"), ("709", "708", 320, "723"),
    ("710", "735", 200, "724"), ("710", "736", 1280, "724"),
    ("711", "741", 400, "723"), ("711", "740", 200, "724"),
    ("713", "704", 520, "723"), ("714", "718", 520, "724"),
    ("720", "707", 920, "724"), ("720", "706", 600, "723"),
    ("727", "744", 280, "723"), ("730", "709", 200, "723"),
    ("733", "734", 560, "723"), ("734", "737", 640, "723"),
    ("734", "710", 520, "724"), ("737", "738", 400, "723"),
    ("738", "711", 400, "723"), ("744", "728", 200, "724"),
    ("744", "729", 280, "724"), ("709", "775", 0, "xfm"),
]
CFG = {"721": (0.2926, 0.1973), "722": (0.4751, 0.2973),
       "723": (1.2936, 0.6713), "724": (2.0952, 0.7758)}
# Spot loads in kW; unlisted nodes get 21 kW.
LOADKW = {"701": 630, "712": 85, "713": 85, "714": 38, "718": 85, "720": 85,
          "722": 161, "724": 42, "725": 42, "727": 42, "728": 126, "729": 42,
          "730": 85, "731": 85, "732": 42, "733": 85, "734": 42, "735": 85,
          "736": 42, "737": 140, "738": 126, "740": 85, "741": 42, "742": 93,
          "744": 42}

OUT = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
    os.path.dirname(os.path.abspath(__file__)), "..", "scenarios")

SBASE = 2500.0
ZB = 4.8**2 / (SBASE / 1000)
ZSCALE = 0.3
SRC = (0.02, 0.05)

VV_N = [[0.93, 1.0], [0.99, 0.0], [1.01, 0.0], [1.07, -1.0]]
VW_N = [[1.06, 1.0], [1.10, 0.0]]
VV_A = [[0.975, 1.0], [0.98, 0.0], [1.02, 0.0], [1.025, -1.0]]
VW_A = [[1.06, 1.0], [1.065, 0.0]]

def r6(x): return float('%.10g' % x)

def feeder37():
    names = []
    for a, b, _, _ in LINES:
        for x in (a, b):
            if x not in names and x != '799': names.append(x)
    lines = []
    for a, b, L, c in LINES:
        if c == 'xfm':
            r, x = 0.0009 * SBASE / 500, 0.0181 * SBASE / 500
        elif a == '799':
            r, x = SRC
        else:
            r = CFG[c][0] * L / 5280 / ZB * ZSCALE
            x = CFG[c][1] * L / 5280 / ZB * ZSCALE
        lines.append({"from": a, "to": b, "r": r6(r), "x": r6(x)})
    nodes = []
    for nm in names:
        p = LOADKW.get(nm, 21.0) / SBASE
        nodes.append({"name": nm, "p_load": r6(p), "q_load": r6(0.3 * p)})
    return {"v0": 1.05, "substation": "799", "nodes": nodes, "lines": lines}

def dev(name, node, sbar, lam, qlim, role, vv=VV_N, vw=VW_N, T=1.0):
    return {"name": name, "node": node, "role": role, "s_bar": r6(sbar), "lambda": r6(lam),
            "q_lim": r6(qlim), "t_p": T, "t_q": T, "volt_var": vv, "volt_watt": vw}

def ieee37(scen, mode, gv, gq):
    f = feeder37()
    devices = []; comp = []
    comp_nodes = {'708','733','732','709','731','710','735','736','711','741','740','734','737','738','775'}
    role_ok = "adaptive-bias" if mode == "bias" else "adaptive-injection"
    for nd in f["nodes"]:
        pbar = nd["p_load"]; sbar = 1.1 * pbar; lam = 1 / 1.1
        if scen == 1:
            devices.append(dev("pv_%s" % nd["name"], nd["name"], 0.7 * sbar, lam, 0.7 * sbar, role_ok))
            devices.append(dev("pvx_%s" % nd["name"], nd["name"], 0.3 * sbar, lam, 0.3 * sbar, "compromised"))
            comp.append("pvx_%s" % nd["name"])
        else:
            if nd["name"] in comp_nodes:
                devices.append(dev("pvx_%s" % nd["name"], nd["name"], sbar, lam, sbar, "compromised"))
                comp.append("pvx_%s" % nd["name"])
            else:
                devices.append(dev("pv_%s" % nd["name"], nd["name"], sbar, lam, sbar, role_ok))
    return {
        "version": 1,
        "name": "ieee37 desk replica, scenario %d, adaptive %s" % (scen, mode),
        "feeder": f, "devices": devices,
        "adaptive": {"tau": 0.1, "gamma_p": 0.0, "gamma_q": gq, "gamma_v": gv, "epsilon": 1e-4,
                     "v_crit": 1.0, "hysteresis": 0.0, "w_cap": 0.1, "injection_mode": "injection-q"},
        "observer": {"f_high": 0.05, "f_low": 0.02, "gain": 1.0},
        "events": [{"time": 100.0, "devices": comp, "volt_var": VV_A, "volt_watt": VW_A}],
        "simulation": {"dt": 1.0, "horizon": 400.0, "initial_state": "equilibrium",
                       "adaptive_enabled": True, "seed": 0, "load_noise": 0.0}}

def single(sigma, name):
    # VV-only droop around 1.0; sigma = C_q x with x = 0.3 and q_bar = 1.
    x = 0.3; cq = sigma / x; half = 1.0 / cq
    return {
        "version": 1, "name": name,
        "feeder": {"v0": 1.0, "substation": "0", "nodes": [{"name": "1", "p_load": 0.0, "q_load": 0.0}],
                   "lines": [{"from": "0", "to": "1", "r": 0.0, "x": x}]},
        "devices": [{"name": "inv", "node": "1", "role": "stable", "s_bar": 1.0, "lambda": 1.0, "q_lim": 1.0,
                     "t_p": 1.0, "t_q": 1.0, "volt_var": [[1.0 - half, 1.0], [1.0 + half, -1.0]],
                     "volt_watt": [[0.5, 0.0], [1.5, 0.0]], "initial": {"p": 0.0, "q": 0.05 / x}}],
        "observer": {"f_high": 0.05, "f_low": 0.02, "gain": 1.0},
        "simulation": {"dt": 1.0, "horizon": 300.0, "initial_state": "given"}}

VV_T = [[0.95, 1.0], [0.99, 0.0], [1.01, 0.0], [1.03, -1.0]]
def theorem_star(T, name, horizon, gamma=0.5):
    # Trunk 0 -> hub (junction node with no device), branches hub -> n1..n4.
    trunk = (0.001, 0.002)
    bx = [0.02, 0.027, 0.034, 0.04]
    nodes = [{"name": "hub", "p_load": 0.0, "q_load": 0.0}] + \
            [{"name": "n%d" % (i + 1), "p_load": 0.0, "q_load": 0.0} for i in range(4)]
    lines = [{"from": "0", "to": "hub", "r": trunk[0], "x": trunk[1]}] + \
            [{"from": "hub", "to": "n%d" % (i + 1), "r": bx[i] / 2, "x": bx[i]} for i in range(4)]
    devices = [{"name": "inv%d" % (i + 1), "node": "n%d" % (i + 1), "role": "stable", "s_bar": 0.6,
                "lambda": r6(0.05 / 0.6), "q_lim": 0.5, "t_p": T, "t_q": T,
                "volt_var": VV_T, "volt_watt": [[1.5, 1.0], [1.6, 0.0]]} for i in range(4)]
    return {"version": 1, "name": name,
            "feeder": {"v0": 1.03, "substation": "0", "nodes": nodes, "lines": lines},
            "devices": devices,
            "adaptive": {"tau": 0.1, "gamma_p": gamma, "gamma_q": gamma, "gamma_v": gamma,
                         "epsilon": 0.0, "v_crit": 1.0, "w_cap": 0.1},
            "simulation": {"dt": 0.1, "horizon": horizon, "initial_state": "equilibrium"}}

def theorem_chain(name, horizon, gamma=0.5):
    # Devices on every node of a uniform chain. The local certificate holds at
    # the offset equilibrium, yet V rises along the transient.
    n = 5
    nodes = [{"name": "c%d" % (i + 1), "p_load": 0.0, "q_load": 0.0} for i in range(n)]
    lines = [{"from": "0" if i == 0 else "c%d" % i, "to": "c%d" % (i + 1), "r": 0.005, "x": 0.01}
             for i in range(n)]
    devices = [{"name": "inv%d" % (i + 1), "node": "c%d" % (i + 1), "role": "stable", "s_bar": 0.6,
                "lambda": r6(0.05 / 0.6), "q_lim": 0.5, "t_p": 1.0, "t_q": 1.0,
                "volt_var": VV_T, "volt_watt": [[1.5, 1.0], [1.6, 0.0]]} for i in range(n)]
    return {"version": 1, "name": name,
            "feeder": {"v0": 1.03, "substation": "0", "nodes": nodes, "lines": lines},
            "devices": devices,
            "adaptive": {"tau": 0.1, "gamma_p": gamma, "gamma_q": gamma, "gamma_v": gamma,
                         "epsilon": 0.0, "v_crit": 1.0, "w_cap": 0.1},
            "simulation": {"dt": 0.1, "horizon": horizon, "initial_state": "equilibrium"}}

def dump(obj, fn):
    with open(os.path.join(OUT, fn), 'w') as fh:
        json.dump(obj, fh, indent=2); fh.write('\n')

dump(ieee37(1, "bias", 0.1, 0.05), "ieee37_scenario1_bias.json")
dump(ieee37(1, "injection", 0.1, 0.05), "ieee37_scenario1_injection.json")
dump(ieee37(2, "bias", 0.2, 0.1), "ieee37_scenario2_bias.json")
dump(ieee37(2, "injection", 0.2, 0.1), "ieee37_scenario2_injection.json")
dump(single(0.5, "single node, sigma 0.5"), "single_node_sigma0p5.json")
dump(single(3.0, "single node, sigma 3"), "single_node_sigma3.json")
dump(theorem_star(1.0, "5-node star, theorem harness", 300.0), "theorem_star5.json")
dump(theorem_star(0.1, "5-node star, fast filters (V-dot check)", 60.0), "vdot_star5.json")
dump(theorem_chain("5-node chain, V increases despite local certificate", 300.0), "theorem_chain5_counterexample.json")
