"""Fault-attack laboratory for seed-tree based code signatures (LESS, CROSS).

Functional scheme cores, a software fault-injection harness on the reference
tree, the full key-recovery attacker, exact recovery statistics and two
countermeasures, all deterministic from explicit seeds.
"""

__version__ = "0.1.0"
