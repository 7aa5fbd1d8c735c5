#!/usr/bin/env python3
"""Regenerates src/unicode_tables.inc: code point ranges for the Unicode
categories used by the international BLEU tokenizer, plus the whitespace set
used for splitting. Uses the `regex` module so categories match sacrebleu."""
import sys

import regex

CLASSES = {
    "kPunctuation": regex.compile(r"\p{P}"),
    "kSymbol": regex.compile(r"\p{S}"),
    "kNumber": regex.compile(r"\p{N}"),
}


def ranges(pred):
    out, start = [], None
    for cp in range(0x110000):
        hit = pred(cp)
        if hit and start is None:
            start = cp
        elif not hit and start is not None:
            out.append((start, cp - 1))
            start = None
    if start is not None:
        out.append((start, 0x10FFFF))
    return out


def emit(name, rs, fh):
    fh.write(f"inline constexpr CodepointRange {name}[] = {{\n")
    for i in range(0, len(rs), 4):
        chunk = ", ".join(f"{{0x{a:X}, 0x{b:X}}}" for a, b in rs[i:i + 4])
        fh.write(f"    {chunk},\n")
    fh.write("};\n\n")


def main():
    fh = sys.stdout
    fh.write(f"// Generated by tools/gen_unicode_tables.py (regex {regex.__version__}). Do not edit.\n\n")
    for name, rx in CLASSES.items():
        emit(name, ranges(lambda cp: rx.match(chr(cp)) is not None), fh)
    emit("kWhitespace", ranges(lambda cp: chr(cp).isspace()), fh)


if __name__ == "__main__":
    main()
