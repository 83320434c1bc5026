"""Writes the bundled 39-bus case to stdout.

    python3 tools/make_case39.py > data/case39.json
    python3 tools/make_case39.py 0.94 1.06   # other voltage bounds
"""
import json, math, sys
vmin, vmax = (float(sys.argv[1]), float(sys.argv[2])) if len(sys.argv) == 3 else (0.9, 1.1)
branches = """1 2 0.0035 0.0411 0.6987 600
1 39 0.001 0.025 0.75 1000
2 3 0.0013 0.0151 0.2572 500
2 25 0.007 0.0086 0.146 500
2 30 0 0.0181 0 900
3 4 0.0013 0.0213 0.2214 500
3 18 0.0011 0.0133 0.2138 500
4 5 0.0008 0.0128 0.1342 600
4 14 0.0008 0.0129 0.1382 500
5 6 0.0002 0.0026 0.0434 1200
5 8 0.0008 0.0112 0.1476 900
6 7 0.0006 0.0092 0.113 900
6 11 0.0007 0.0082 0.1389 480
6 31 0 0.025 0 1800
7 8 0.0004 0.0046 0.078 900
8 9 0.0023 0.0363 0.3804 900
9 39 0.001 0.025 1.2 900
10 11 0.0004 0.0043 0.0729 600
10 13 0.0004 0.0043 0.0729 600
10 32 0 0.02 0 900
12 11 0.0016 0.0435 0 500
12 13 0.0016 0.0435 0 500
13 14 0.0009 0.0101 0.1723 600
14 15 0.0018 0.0217 0.366 600
15 16 0.0009 0.0094 0.171 600
16 17 0.0007 0.0089 0.1342 600
16 19 0.0016 0.0195 0.304 600
16 21 0.0008 0.0135 0.2548 600
16 24 0.0003 0.0059 0.068 600
17 18 0.0007 0.0082 0.1319 600
17 27 0.0013 0.0173 0.3216 600
19 20 0.0007 0.0138 0 900
19 33 0.0007 0.0142 0 900
20 34 0.0009 0.018 0 900
21 22 0.0008 0.014 0.2565 900
22 23 0.0006 0.0096 0.1846 600
22 35 0 0.0143 0 900
23 24 0.0022 0.035 0.361 600
23 36 0.0005 0.0272 0 900
25 26 0.0032 0.0323 0.531 600
25 37 0.0006 0.0232 0 900
26 27 0.0014 0.0147 0.2396 600
26 28 0.0043 0.0474 0.7802 600
26 29 0.0057 0.0625 1.029 600
28 29 0.0014 0.0151 0.249 600
29 38 0.0008 0.0156 0 1200"""
# bus Qmax Qmin Pmax Pmin
gens = """30 400 140 1040 0
31 300 -100 646 0
32 300 150 725 0
33 250 0 652 0
34 167 0 508 0
35 300 -100 687 0
36 240 0 580 0
37 250 0 564 0
38 300 -150 865 0
39 300 -100 1100 0"""
a = [0.0131, 0.0111, 0.0098, 0.0071, 0.0079, 0.0213, 0.0173, 0.021, 0.0013, 0.0173]
b = [13.32, 13.32, 20.7, 20.93, 21, 10.52, 5.47, 5.47, 10.52, 10.52]
c = [100, 50, 50, 80, 30, 200, 150, 80, 200, 210]
loads = {3:(322,2.4),4:(500,184),7:(233.8,84),8:(522,176.6),12:(7.5,88),15:(320,153),16:(329,32.3),
 18:(158,30),20:(680,103),21:(274,115),23:(247.5,84.6),24:(308.6,-92.2),25:(224,47.2),26:(139,17),
 27:(281,75.5),28:(206,27.6),29:(283.5,26.9),31:(9.2,4.6),39:(1104,250)}
buses=[]
for i in range(1,40):
    kind = 'slack' if i==31 else 'generator' if i>=30 else 'load' if i in loads else 'junction'
    buses.append({"id":i,"kind":kind,"v_min":vmin,"v_max":vmax})
lines=[]
for ln in branches.splitlines():
    f,t,r,x,bb,s = ln.split()
    r,x=float(r),float(x)
    lines.append({"from":int(f),"to":int(t),"z_mag":math.hypot(r,x),"z_ang":math.atan2(x,r),"b_shunt":float(bb),"s_max":float(s)})
G=[]
for k,ln in enumerate(gens.splitlines()):
    bus,qmax,qmin,pmax,pmin = map(float, ln.split())
    G.append({"bus":int(bus),"p_min":pmin,"p_max":pmax,"q_min":qmin,"q_max":qmax,"cost_a":a[k],"cost_b":b[k],"cost_c":c[k],"committable":True})
L=[{"bus":k,"p0":p,"q0":q,"v0":1.0,"alpha":1.0,"beta":1.0} for k,(p,q) in sorted(loads.items())]
doc={"name":"New England 39-bus",
"notes":["Line, generator limit and reactive load data: standard public New England 39-bus set (MATPOWER case39); transformer taps omitted (PI lines only).",
 "Loads: the 19-load New England set (bus 12 = 7.5 MW, bus 20 = 680 MW), total 6149.1 MW.",
 "cost_a row is a digit-merge reading of a two-line typeset table: [0.0131, 0.0111, 0.0098, 0.0071, 0.0079, 0.0213, 0.0173, 0.021, 0.0013, 0.0173]; generators G1..G10 sit on buses 30..39.",
 f"Bus voltage bounds {vmin:.2f}-{vmax:.2f} pu on every bus.",
 "Powers in MW/MVAr; impedances and susceptances per-unit on base_mva."],
"base_mva":100.0,"buses":buses,"lines":lines,"generators":G,"loads":L,"st_defaults":{}}
print(json.dumps(doc, indent=2))
