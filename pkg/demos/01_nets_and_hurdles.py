"""Tour of the net layer: firing, hurdles, displacements, operations.

Runs without any solver.
"""

from polyabs import PetriNet, hurdle_delta, power_hurdle_delta
from polyabs.net import isomorphic_fixed_places

# Two places chained by a silent transition t, fed by a, drained by b.
net = PetriNet(
    places=("y1", "y2"),
    transitions=("a", "t", "b"),
    pre={"a": {}, "t": {"y1": 1}, "b": {"y2": 1}},
    post={"a": {"y1": 1}, "t": {"y2": 1}, "b": {}},
    label={"a": "a", "t": None, "b": "b"})

m = {"y1": 2, "y2": 0}
print("start:", m)
print("fire t:", net.fire(m, "t"))
print("fire t twice:", net.fire_sequence(m, ("t", "t")))
print("fire t three times:", net.fire_sequence(m, ("t", "t", "t")))  # None

# The hurdle H is the least marking from which a sequence fires, and the
# displacement D its net token effect: fires from m iff m >= H, landing
# in m + D.
h, d = hurdle_delta(net, ("t", "t"))
print("H(t.t) =", h, " D(t.t) =", d)

# Repeating a sequence k times has a closed form: every extra round must
# budget what the sequence consumes on balance.
for k in range(4):
    hk, dk = power_hurdle_delta(net, ("t",), k)
    print(f"H(t^{k}) = {hk}   D(t^{k}) = {dk}")

# Structural operations return new nets; removing the copies of a
# duplicated label restores the original net up to transition names.
bigger = net.duplicate_labeled("b", "b2")
print("after duplicating b:", bigger.transitions)
restored = bigger.remove_labeled("b2")
print("restored original?",
      isomorphic_fixed_places(restored, net))
