#!/usr/bin/env python3
"""Regenerates include/codelens/unicode_data.hpp from Python's unicodedata.

The tokenizer's pre-splitter needs three codepoint classes: Letter (L*),
Number (N*) and White_Space. L*/N* come from the general category tables;
the White_Space list is the fixed property list from PropList.txt.
"""
import sys
import unicodedata

WHITESPACE = [
    (0x0009, 0x000D), (0x0020, 0x0020), (0x0085, 0x0085), (0x00A0, 0x00A0),
    (0x1680, 0x1680), (0x2000, 0x200A), (0x2028, 0x2029), (0x202F, 0x202F),
    (0x205F, 0x205F), (0x3000, 0x3000),
]


def category_ranges(prefix: str):
    ranges = []
    start = None
    for cp in range(0x110000):
        try:
            cat = unicodedata.category(chr(cp))
        except ValueError:
            cat = "Cn"
        if cat.startswith(prefix):
            if start is None:
                start = cp
        else:
            if start is not None:
                ranges.append((start, cp - 1))
                start = None
    if start is not None:
        ranges.append((start, 0x10FFFF))
    return ranges


def emit(f, name, ranges):
    f.write(f"inline constexpr CpRange {name}[] = {{\n")
    for i in range(0, len(ranges), 4):
        row = ", ".join(f"{{0x{a:X}, 0x{b:X}}}" for a, b in ranges[i:i + 4])
        f.write(f"    {row},\n")
    f.write("};\n\n")


def main(out_path):
    letters = category_ranges("L")
    numbers = category_ranges("N")
    with open(out_path, "w") as f:
        f.write("// Generated by scripts/gen_unicode_tables.py (unicodedata %s). Do not edit.\n"
                % unicodedata.unidata_version)
        f.write("#pragma once\n\n#include <cstdint>\n\n"
                "namespace codelens::uni {\n\n"
                "struct CpRange { char32_t lo; char32_t hi; };\n\n")
        emit(f, "kLetterRanges", letters)
        emit(f, "kNumberRanges", numbers)
        emit(f, "kWhitespaceRanges", WHITESPACE)
        f.write("} // namespace codelens::uni\n")
    print(f"wrote {out_path}: {len(letters)} letter ranges, {len(numbers)} number ranges")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "include/codelens/unicode_data.hpp")
