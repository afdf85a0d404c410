#!/usr/bin/env python3
"""Regenerates include/codelens/vocab_embedded.hpp from data/cl100k_base.tiktoken.

The vocabulary file is plain ASCII (base64 token + rank per line), so it is
embedded as raw string literal segments. Only translation units that need the
built-in default should include the generated header.
"""
import sys

CHUNK = 60000  # keep individual literals well under compiler limits


def main(src, dst):
    data = open(src, "r", encoding="ascii").read()
    segs = [data[i:i + CHUNK] for i in range(0, len(data), CHUNK)]
    with open(dst, "w") as f:
        f.write("// Generated by scripts/embed_vocab.py from data/cl100k_base.tiktoken. Do not edit.\n")
        f.write("#pragma once\n\n#include <string>\n\nnamespace codelens {\n\n")
        f.write("inline const std::string& embedded_cl100k_vocab() {\n")
        f.write("    static const std::string data = []{\n        std::string s;\n")
        f.write(f"        s.reserve({len(data)});\n")
        for seg in segs:
            f.write('        s += R"CLVOCAB(' + seg + ')CLVOCAB";\n')
        f.write("        return s;\n    }();\n    return data;\n}\n\n} // namespace codelens\n")
    print(f"wrote {dst}: {len(data)} bytes in {len(segs)} segments")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/cl100k_base.tiktoken",
         sys.argv[2] if len(sys.argv) > 2 else "include/codelens/vocab_embedded.hpp")
