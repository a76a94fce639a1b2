"""Hypothesis strategies over the default schema's state space."""

from hypothesis import strategies as st

from bort.schema import default_schema
from bort.state import DialogState

_SCHEMA = default_schema()

_FREE_WORDS = (
    "stevenage", "train", "station", "city", "centre", "airport",
    "museum", "corner", "02:15", "17:30", "noon",
)


def _value_strategy(values):
    if values is not None:
        return st.sampled_from(values)
    return st.lists(st.sampled_from(_FREE_WORDS), min_size=1, max_size=3).map(" ".join)


def domain_states(spec):
    slot_opts = {
        slot: st.one_of(st.none(), _value_strategy(values))
        for slot, values in spec.informable.items()
    }
    return st.fixed_dictionaries(slot_opts).map(
        lambda d: {s: v for s, v in d.items() if v is not None}
    )


@st.composite
def dialog_states(draw):
    entries = {}
    for spec in _SCHEMA.domains:
        slots = draw(domain_states(spec))
        if slots:
            entries[spec.name] = slots
    return DialogState(entries)


state_pairs = st.tuples(dialog_states(), dialog_states())
