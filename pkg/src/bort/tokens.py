"""Distinguished token symbols shared across the pipeline."""

PAD = "<pad>"
BOS = "<bos>"
EOS = "<eos>"
UNK = "<unk>"
MASK = "<mask>"
NULL = "<null>"
SEP = "<sep>"
END_OF_ENTRY = ";"
EQUALS = "="

RESERVED = (PAD, BOS, EOS, UNK, MASK, NULL, SEP, END_OF_ENTRY, EQUALS)


def domain_tag(domain: str) -> str:
    return f"[{domain}]"


def placeholder(domain: str, slot: str) -> str:
    return f"[{domain}_{slot}]"
