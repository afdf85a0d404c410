#!/usr/bin/env python3
"""Regenerates tests/fixtures/tokenizer_cases.json.

Expected token ids come from tiktoken (the reference BPE implementation)
driven offline with the repo's data/cl100k_base.tiktoken vocabulary. Needs
`pip install tiktoken` to regenerate; the committed output keeps the test
suite hermetic.
"""
import base64
import json
import pathlib
import sys

import tiktoken

ROOT = pathlib.Path(__file__).resolve().parent.parent
PAT = r"""'(?i:[sdmt]|ll|ve|re)|[^\r\n\p{L}\p{N}]?+\p{L}++|\p{N}{1,3}+| ?[^\s\p{L}\p{N}]++[\r\n]*+|\s++$|\s*[\r\n]|\s+(?!\S)|\s"""

CASES = [
    ("empty", ""),
    ("single", "a"),
    ("newline_pair", "a\nb"),
    ("def_indent", "def f():\n    return 1"),
    ("assignment", "x=1"),
    ("blank_lines", "\n\n"),
    ("triple_blank", "a\n\n\nb"),
    ("hello", "hello world"),
    ("contraction", "I'll go, won't you?"),
    ("digits", "12345 67"),
    ("crlf", "a\r\nb\r\n"),
    ("tabs", "\tif x:\n\t\treturn\n"),
    ("trailing_ws", "x = 1   \n"),
    ("trailing_no_nl", "end"),
    ("indent_runs", "if a:\n    if b:\n        c()\n"),
    ("punct_run", "x += {[(1,2)]};"),
    ("unicode_text", "héllo wörld — ☃ yes"),
    ("cjk", "def 名前(): return '値'"),
    ("mixed_ws", "a \t \nb  c"),
    ("brace_block", "void f() {\n  int x = 0;\n}\n"),
    ("comment_hash", "# a comment\npass\n"),
    ("string_lit", 'print("hi there")\n'),
    ("operators", "a<=b && c||d != e"),
    ("long_digits", "x = 1234567890123"),
    ("space_runs", "a    b     c"),
    ("only_spaces", "     "),
    ("nl_space_mix", " \n \n "),
    ("quote_s", "it's Bob'S"),
]


def main():
    ranks = {}
    for line in (ROOT / "data/cl100k_base.tiktoken").read_bytes().splitlines():
        tok, rank = line.split()
        ranks[base64.b64decode(tok)] = int(rank)
    enc = tiktoken.Encoding(name="cl100k_local", pat_str=PAT,
                            mergeable_ranks=ranks, special_tokens={})

    out = {"cases": [], "files": []}
    for name, text in CASES:
        ids = enc.encode_ordinary(text)
        assert enc.decode(ids) == text, name
        out["cases"].append({
            "name": name,
            "text_b64": base64.b64encode(text.encode()).decode(),
            "ids": ids,
            "token_texts_b64": [base64.b64encode(enc.decode_single_token_bytes(i)).decode()
                                 for i in ids],
        })

    corpus = ROOT / "tests/fixtures/code_corpus"
    for path in sorted(corpus.rglob("*")):
        if not path.is_file():
            continue
        text = path.read_text()
        ids = enc.encode_ordinary(text)
        assert enc.decode(ids) == text, path
        out["files"].append({
            "path": str(path.relative_to(corpus)),
            "ids": ids,
        })

    dst = ROOT / "tests/fixtures/tokenizer_cases.json"
    dst.write_text(json.dumps(out, indent=1))
    print(f"wrote {dst}: {len(out['cases'])} cases, {len(out['files'])} files")


if __name__ == "__main__":
    main()
