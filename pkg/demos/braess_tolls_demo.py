"""Braess network: removing the shortcut, the signaling gadget and the tolls it yields."""

from signalkit.routing import (
    BRAESS_SHORTCUT,
    Commodity,
    braess,
    nash_cost_with_tolls,
    nash_flow,
    price_of_anarchy,
    routing_scheme_value,
    scheme_from_tolls,
    tolls_from_scheme,
    tolls_gadget,
    total_latency,
)

one = (Commodity("s", "t", 1.0),)
lat = braess()
print(f"Nash latency        {total_latency(lat, nash_flow(lat, one)):.4f}")
print(f"price of anarchy    {price_of_anarchy(lat, one):.4f}")
cut, _ = lat.without_edges([BRAESS_SHORTCUT])
print(f"without shortcut    {total_latency(cut, nash_flow(cut, one)):.4f}")

gadget = tolls_gadget(lat, "s", "t", 1.0, (BRAESS_SHORTCUT,))
scheme = scheme_from_tolls(gadget)
print(f"gadget: m={gadget.m}, {gadget.instance.num_states} states, L={gadget.L:.3f}, L'={gadget.L_star:.3f}")
print(f"scheme value        {routing_scheme_value(gadget.instance, scheme):.4f}")
res = tolls_from_scheme(gadget, scheme)
print(f"tolls               {res.tolls.round(3).tolist()}")
print(f"Nash cost w/ tolls  {nash_cost_with_tolls(gadget.base, one, res.tolls):.4f}")
